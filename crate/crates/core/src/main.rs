use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{CommandFactory, Parser, Subcommand, ValueEnum};

use tworate_ea::analysis::verify::{run_claim, Claim, VerifierReport};
use tworate_ea::analysis::exact_drift;
use tworate_ea::controller::{NamedStaticRate, StaticRateSpec};
use tworate_ea::harness::io::{emit_csv, read_csv, read_header, to_csv_bytes, CsvRecord};
use tworate_ea::harness::plot::{emit_plot, series_from_summaries, series_from_trajectory, PlotKind};
use tworate_ea::harness::sweep::{run_sweep, run_sweep_with_threads, ExperimentSpec, SummaryRow};
use tworate_ea::{run_ea, ControllerSpec, EAConfig, Kernel, TrajectoryPoint};

#[derive(Parser)]
#[command(name = "tworate", version, about = "Self-adjusting (1+lambda) EA on OneMax")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ControllerKind {
    /// Two subpopulations at r/2 and 2r.
    TwoRate,
    /// Three subpopulations at r/2, r and 2r.
    ThreeRate,
    /// Fixed rate given by --rate (default 1, i.e. probability 1/n).
    Static,
    /// Fixed rate ln(lambda)/2.
    StaticLn,
    /// Probability max{ln(lambda)/(n ln(en/d)), 1/n}.
    FitnessDependent,
}

#[derive(clap::Args)]
struct ControllerArgs {
    #[arg(long, value_enum, default_value = "two-rate")]
    controller: ControllerKind,
    /// Update factor F of the self-adjusting controllers.
    #[arg(long)]
    factor: Option<f64>,
    #[arg(long, action = clap::ArgAction::Set)]
    random_steps: Option<bool>,
    /// Subpopulation count (2 or 3) of the self-adjusting controller.
    #[arg(long)]
    subpops: Option<usize>,
    #[arg(long)]
    initial_rate: Option<f64>,
    /// Rate r of the static controller.
    #[arg(long)]
    rate: Option<f64>,
}

impl ControllerArgs {
    fn spec(&self) -> Result<ControllerSpec> {
        let self_adjusting = matches!(self.controller, ControllerKind::TwoRate | ControllerKind::ThreeRate);
        if !self_adjusting
            && (self.factor.is_some()
                || self.random_steps.is_some()
                || self.subpops.is_some()
                || self.initial_rate.is_some())
        {
            bail!("--factor, --random-steps, --subpops and --initial-rate apply only to self-adjusting controllers");
        }
        if self.rate.is_some() && self.controller != ControllerKind::Static {
            bail!("--rate applies only to --controller static");
        }
        Ok(match self.controller {
            ControllerKind::TwoRate | ControllerKind::ThreeRate => {
                let default_subpops = if self.controller == ControllerKind::TwoRate { 2 } else { 3 };
                ControllerSpec::SelfAdjusting {
                    factor: self.factor.unwrap_or(2.0),
                    random_steps: self.random_steps.unwrap_or(true),
                    subpopulations: self.subpops.unwrap_or(default_subpops),
                    initial_rate: self.initial_rate,
                }
            }
            ControllerKind::Static => ControllerSpec::Static {
                rate: StaticRateSpec::Fixed(self.rate.unwrap_or(1.0)),
            },
            ControllerKind::StaticLn => ControllerSpec::Static {
                rate: StaticRateSpec::Named(NamedStaticRate::HalfLnLambda),
            },
            ControllerKind::FitnessDependent => ControllerSpec::FitnessDependent,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Single run; prints the run record as JSON.
    Run {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        lambda: usize,
        #[command(flatten)]
        controller: ControllerArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        budget: Option<u64>,
        /// Write the (t, k, r) trajectory to this CSV file.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "delta")]
        kernel: KernelArg,
    },
    /// Experiment sweep from a JSON config; writes runs.csv and summary.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Override the replication count.
        #[arg(long)]
        reps: Option<usize>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        budget: Option<u64>,
        /// Record trajectories into <out>/trajectories/.
        #[arg(long)]
        trajectory: bool,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Monte Carlo and exact checks of the rate-drift claims.
    Verify {
        /// Claim to check, or "all".
        #[arg(long, default_value = "all")]
        claim: String,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact expected progress over a grid of distances and rates.
    Drift {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        lambda: u64,
        /// Fitness distances, comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<u64>,
        /// Rates, comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        r: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// SVG chart from a summary or trajectory CSV.
    Plot {
        #[arg(long, required = true)]
        input: Vec<PathBuf>,
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Delta,
    BitLevel,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    RuntimeVsLambda,
    IqrVsLambda,
    RateVsFitness,
}

#[derive(serde::Serialize)]
struct DriftRow {
    n: u64,
    lambda: u64,
    k: u64,
    r: f64,
    drift: f64,
    truncation_bound: f64,
    flagged: bool,
}

impl CsvRecord for DriftRow {
    const HEADER: &'static [&'static str] = &["n", "lambda", "k", "r", "drift", "truncation_bound", "flagged"];
}

#[derive(serde::Serialize)]
struct ReportRow<'a>(&'a VerifierReport);

impl CsvRecord for ReportRow<'_> {
    const HEADER: &'static [&'static str] = &[
        "claim",
        "params",
        "preconditions_ok",
        "estimate",
        "ci_low",
        "ci_high",
        "threshold",
        "pass",
    ];
}

fn print_or_write<T: CsvRecord>(rows: &[T], out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => emit_csv(rows, path)?,
        None => print!("{}", String::from_utf8(to_csv_bytes(rows)?)?),
    }
    Ok(())
}

/// Returns whether all requested work succeeded.
fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Run {
            n,
            lambda,
            controller,
            seed,
            budget,
            trajectory,
            kernel,
        } => {
            let spec = controller.spec()?;
            let mut config = EAConfig::new(n, lambda)?
                .with_trajectory(trajectory.is_some())
                .with_kernel(match kernel {
                    KernelArg::Delta => Kernel::Delta,
                    KernelArg::BitLevel => Kernel::BitLevel,
                });
            config.budget = budget;
            let mut record = run_ea(&config, &spec, seed)?;
            if let (Some(path), Some(points)) = (trajectory, record.trajectory.take()) {
                emit_csv(&points, &path)?;
            }
            println!("{}", serde_json::to_string(&record)?);
            Ok(true)
        }
        Command::Sweep {
            config,
            out,
            reps,
            seed,
            budget,
            trajectory,
            threads,
        } => {
            let mut spec = ExperimentSpec::load(&config)?;
            if let Some(r) = reps {
                spec.replications = r;
            }
            if let Some(s) = seed {
                spec.master_seed = s;
            }
            if budget.is_some() {
                spec.budget = budget;
            }
            spec.trajectory |= trajectory;
            let result = match threads {
                Some(t) => run_sweep_with_threads(&spec, t)?,
                None => run_sweep(&spec)?,
            };
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            if !result.trajectories.is_empty() {
                let dir = out.join("trajectories");
                std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                for t in &result.trajectories {
                    emit_csv(&t.points, &dir.join(format!("cell{}-rep{}.csv", t.cell, t.replication)))?;
                }
            }
            emit_csv(&result.rows, &out.join("runs.csv"))?;
            emit_csv(&result.summaries, &out.join("summary.csv"))?;
            eprintln!(
                "{} runs in {} cells written to {}",
                result.rows.len(),
                result.summaries.len(),
                out.display()
            );
            Ok(true)
        }
        Command::Verify {
            claim,
            samples,
            seed,
            out,
        } => {
            let claims: Vec<Claim> = if claim == "all" {
                Claim::ALL.to_vec()
            } else {
                claim
                    .split(',')
                    .map(|c| Claim::parse(c).with_context(|| format!("unknown claim {c:?}")))
                    .collect::<Result<_>>()?
            };
            let reports = claims
                .into_iter()
                .map(|c| run_claim(c, samples, seed))
                .collect::<tworate_ea::Result<Vec<_>>>()?;
            let rows: Vec<ReportRow> = reports.iter().map(ReportRow).collect();
            print_or_write(&rows, out.as_deref())?;
            Ok(reports.iter().all(|r| !r.preconditions_ok || r.pass))
        }
        Command::Drift { n, lambda, k, r, out } => {
            let mut rows = Vec::new();
            for &kk in &k {
                for &rr in &r {
                    let d = exact_drift(n, kk, rr, lambda)?;
                    rows.push(DriftRow {
                        n,
                        lambda,
                        k: kk,
                        r: rr,
                        drift: d.value,
                        truncation_bound: d.truncation_bound,
                        flagged: d.flagged,
                    });
                }
            }
            print_or_write(&rows, out.as_deref())?;
            Ok(true)
        }
        Command::Plot { input, kind, out } => {
            let header = read_header(&input[0])?;
            let is_trajectory = header == ["t", "k", "r"];
            let kind = match kind {
                Some(KindArg::RuntimeVsLambda) => PlotKind::RuntimeVsLambda,
                Some(KindArg::IqrVsLambda) => PlotKind::IqrVsLambda,
                Some(KindArg::RateVsFitness) => PlotKind::RateVsFitness,
                None if is_trajectory => PlotKind::RateVsFitness,
                None => PlotKind::RuntimeVsLambda,
            };
            let series = if kind == PlotKind::RateVsFitness {
                input
                    .iter()
                    .map(|path| {
                        let points: Vec<TrajectoryPoint> = read_csv(path)?;
                        let label = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                        Ok(series_from_trajectory(label, &points))
                    })
                    .collect::<Result<Vec<_>>>()?
            } else {
                let mut rows: Vec<SummaryRow> = Vec::new();
                for path in &input {
                    rows.extend(read_csv::<SummaryRow>(path)?);
                }
                series_from_summaries(&rows, kind)
            };
            emit_plot(&series, kind, &out)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more claims with satisfied preconditions failed");
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<tworate_ea::Error>().is_none() {
                eprintln!("{}", Cli::command().render_usage());
            }
            ExitCode::from(2)
        }
    }
}
