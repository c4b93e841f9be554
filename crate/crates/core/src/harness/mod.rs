//! Experiment sweeps, result files and plots.

pub mod io;
pub mod plot;
pub mod sweep;

pub use io::{emit_csv, read_csv, write_atomic, CsvRecord};
pub use plot::{emit_plot, render_svg, PlotKind, Series};
pub use sweep::{run_sweep, run_sweep_with_threads, ExperimentSpec, ResultRow, SummaryRow, SweepResult};
