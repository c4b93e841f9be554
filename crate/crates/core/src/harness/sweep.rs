use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::io::CsvRecord;
use crate::analysis::stats::summarize;
use crate::controller::ControllerSpec;
use crate::engine::{run_ea, EAConfig, TrajectoryPoint};
use crate::error::{config_err, Error, Result};
use crate::numeric::split_seed;

/// A grid of runs: every combination of size, offspring count and
/// controller, each replicated.
///
/// Cells are ordered size-major, then lambda, then controller; run `j` of
/// cell `c` uses seed `split_seed(master_seed, c, j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub sizes: Vec<usize>,
    pub lambdas: Vec<usize>,
    pub controllers: Vec<ControllerSpec>,
    pub replications: usize,
    pub master_seed: u64,
    /// Generation budget per run; default `100 (n ln n / λ + n)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    #[serde(default)]
    pub trajectory: bool,
}

/// One cell of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub n: usize,
    pub lambda: usize,
    pub controller: ControllerSpec,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &n in &self.sizes {
            for &lambda in &self.lambdas {
                for &controller in &self.controllers {
                    cells.push(Cell {
                        index: cells.len(),
                        n,
                        lambda,
                        controller,
                    });
                }
            }
        }
        cells
    }

    /// Checks every cell before anything runs.
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return config_err("replications must be at least 1");
        }
        if self.sizes.is_empty() || self.lambdas.is_empty() || self.controllers.is_empty() {
            return config_err("sizes, lambdas and controllers must be non-empty");
        }
        for cell in self.cells() {
            EAConfig::new(cell.n, cell.lambda)?;
            cell.controller.build(cell.n, cell.lambda).map_err(|e| {
                Error::Config(format!("cell n={} lambda={}: {e}", cell.n, cell.lambda))
            })?;
        }
        Ok(())
    }
}

/// Per-run result row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub controller: String,
    pub n: usize,
    pub lambda: usize,
    #[serde(rename = "F")]
    pub factor: Option<f64>,
    pub random_steps: Option<bool>,
    pub subpops: usize,
    pub seed: u64,
    pub generations: u64,
    pub evaluations: u64,
    pub hit_optimum: bool,
}

impl CsvRecord for ResultRow {
    const HEADER: &'static [&'static str] = &[
        "controller",
        "n",
        "lambda",
        "F",
        "random_steps",
        "subpops",
        "seed",
        "generations",
        "evaluations",
        "hit_optimum",
    ];
}

/// Per-cell summary of generation counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub controller: String,
    pub n: usize,
    pub lambda: usize,
    #[serde(rename = "F")]
    pub factor: Option<f64>,
    pub runs: usize,
    pub mean_generations: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub stddev: f64,
}

impl CsvRecord for SummaryRow {
    const HEADER: &'static [&'static str] = &[
        "controller",
        "n",
        "lambda",
        "F",
        "runs",
        "mean_generations",
        "q1",
        "median",
        "q3",
        "stddev",
    ];
}

/// Trajectory of one run of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrajectory {
    pub cell: usize,
    pub replication: usize,
    pub points: Vec<TrajectoryPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Ordered by (cell, replication).
    pub rows: Vec<ResultRow>,
    /// One per cell, in cell order.
    pub summaries: Vec<SummaryRow>,
    pub trajectories: Vec<RunTrajectory>,
}

/// Summaries of `rows`, grouped by consecutive identical cell keys.
pub fn summarize_rows(rows: &[ResultRow]) -> Result<Vec<SummaryRow>> {
    let key = |r: &ResultRow| (r.controller.clone(), r.n, r.lambda, r.factor.map(f64::to_bits));
    let mut out = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let k = key(&rows[start]);
        let end = rows[start..]
            .iter()
            .position(|r| key(r) != k)
            .map_or(rows.len(), |p| start + p);
        let gens: Vec<f64> = rows[start..end].iter().map(|r| r.generations as f64).collect();
        let s = summarize(&gens)?;
        let first = &rows[start];
        out.push(SummaryRow {
            controller: first.controller.clone(),
            n: first.n,
            lambda: first.lambda,
            factor: first.factor,
            runs: s.count,
            mean_generations: s.mean,
            q1: s.q1,
            median: s.median,
            q3: s.q3,
            stddev: s.stddev,
        });
        start = end;
    }
    Ok(out)
}

/// Runs every replication of every cell on the global thread pool.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepResult> {
    spec.validate()?;
    let cells = spec.cells();
    let jobs: Vec<(Cell, usize)> = cells
        .iter()
        .flat_map(|&c| (0..spec.replications).map(move |j| (c, j)))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(cell, rep)| {
            let mut config = EAConfig::new(cell.n, cell.lambda)?.with_trajectory(spec.trajectory);
            config.budget = spec.budget;
            let seed = split_seed(spec.master_seed, cell.index as u64, rep as u64);
            run_ea(&config, &cell.controller, seed)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(records.len());
    let mut trajectories = Vec::new();
    for (&(cell, rep), record) in jobs.iter().zip(records) {
        rows.push(ResultRow {
            controller: cell.controller.id(),
            n: cell.n,
            lambda: cell.lambda,
            factor: cell.controller.factor(),
            random_steps: cell.controller.random_steps(),
            subpops: cell.controller.subpopulations(),
            seed: record.seed,
            generations: record.generations,
            evaluations: record.evaluations,
            hit_optimum: record.hit_optimum,
        });
        if let Some(points) = record.trajectory {
            trajectories.push(RunTrajectory {
                cell: cell.index,
                replication: rep,
                points,
            });
        }
    }
    let summaries = summarize_rows(&rows)?;
    Ok(SweepResult {
        rows,
        summaries,
        trajectories,
    })
}

/// [`run_sweep`] on a dedicated pool of `threads` workers.
pub fn run_sweep_with_threads(spec: &ExperimentSpec, threads: usize) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_sweep(spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> ExperimentSpec {
        ExperimentSpec {
            sizes: vec![60],
            lambdas: vec![6],
            controllers: vec![ControllerSpec::default()],
            replications: 5,
            master_seed: 42,
            budget: None,
            trajectory: false,
        }
    }

    #[test]
    fn counting_contract() {
        let res = run_sweep(&small_spec()).unwrap();
        assert_eq!(res.rows.len(), 5);
        assert_eq!(res.summaries.len(), 1);
        assert_eq!(res.summaries[0].runs, 5);
        assert!(res.rows.iter().all(|r| r.evaluations == r.generations * 6));
    }

    #[test]
    fn fail_fast_validation() {
        let mut spec = small_spec();
        spec.lambdas = vec![4];
        spec.controllers.push(ControllerSpec::SelfAdjusting {
            factor: 2.0,
            random_steps: true,
            subpopulations: 3,
            initial_rate: None,
        });
        let err = run_sweep(&spec).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
        let mut spec = small_spec();
        spec.replications = 0;
        assert!(run_sweep(&spec).is_err());
    }

    #[test]
    fn json_round_trip() {
        let spec = small_spec();
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(ExperimentSpec::from_json(&text).unwrap(), spec);
        assert!(ExperimentSpec::from_json(r#"{"sizes":[1]}"#).is_err());
    }

    #[test]
    fn cell_order_is_size_lambda_controller() {
        let mut spec = small_spec();
        spec.sizes = vec![10, 20];
        spec.lambdas = vec![2, 4];
        spec.controllers.push(ControllerSpec::FitnessDependent);
        let cells = spec.cells();
        assert_eq!(cells.len(), 8);
        assert_eq!((cells[1].n, cells[1].lambda), (10, 2));
        assert_eq!(cells[1].controller, ControllerSpec::FitnessDependent);
        assert_eq!((cells[2].n, cells[2].lambda), (10, 4));
        assert_eq!(cells[4].n, 20);
    }
}
