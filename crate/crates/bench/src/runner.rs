//! Seeded end-to-end comparisons: one lab per seed, shared initial samples,
//! T ask/evaluate/tell rounds per optimizer, per-seed emission plus a
//! cross-seed aggregate (mean and central 75% interval per step).

use std::fs;
use std::path::{Path, PathBuf};

use hypertune_core::assistants::LabAssistant;
use hypertune_core::experiment::CandidateStatus;
use hypertune_core::gp::KernelKind;
use hypertune_core::optimizers::OptimizerParams;
use hypertune_core::param_space::{ParamDef, ParamMap};
use hypertune_core::seed;
use indexmap::IndexMap;

use crate::objectives::{self, Objective};
use crate::BenchError;

/// Which benchmark surface to optimize.
#[derive(Debug, Clone)]
pub enum ObjectiveSpec {
    Branin,
    Noise {
        dimension: usize,
        smoothing_variance: f64,
        /// Grid resolution; None picks the dimension-based default.
        grid_points_per_dim: Option<usize>,
    },
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub objective: ObjectiveSpec,
    pub optimizers: Vec<String>,
    /// Evaluations per optimizer per seed.
    pub steps: usize,
    /// Independent repetitions, each with its own derived seed.
    pub seeds: usize,
    /// Random samples shared across all optimizers at the start of a seed.
    pub shared_initial: usize,
    pub out_dir: PathBuf,
    pub zeta: f64,
    pub kernel: KernelKind,
    pub base_seed: u64,
}

impl RunConfig {
    pub fn check(&self) -> Result<(), BenchError> {
        if self.steps == 0 {
            return Err(BenchError::Config("steps must be positive".into()));
        }
        if self.seeds == 0 {
            return Err(BenchError::Config("seeds must be positive".into()));
        }
        if self.steps < self.shared_initial {
            return Err(BenchError::Config(format!(
                "steps ({}) must be at least shared_initial ({})",
                self.steps, self.shared_initial
            )));
        }
        if self.optimizers.is_empty() {
            return Err(BenchError::Config("at least one optimizer is required".into()));
        }
        for name in &self.optimizers {
            if name != "random" && name != "bayes" {
                return Err(BenchError::Config(format!(
                    "unknown optimizer `{}` (expected `random` or `bayes`)",
                    name
                )));
            }
        }
        let mut sorted = self.optimizers.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.optimizers.len() {
            return Err(BenchError::Config("optimizer names must be unique".into()));
        }
        if let ObjectiveSpec::Noise {
            dimension,
            smoothing_variance,
            grid_points_per_dim,
        } = &self.objective
        {
            // Build once to surface dimension/grid/variance errors up front.
            let grid = grid_points_per_dim.unwrap_or(objectives::default_grid_points(*dimension));
            objectives::make_noise_function(*dimension, grid, 0, *smoothing_variance)?;
        }
        Ok(())
    }

    fn build_objective(&self, seed_val: u64) -> Result<Objective, BenchError> {
        match &self.objective {
            ObjectiveSpec::Branin => Ok(objectives::branin_objective()),
            ObjectiveSpec::Noise {
                dimension,
                smoothing_variance,
                grid_points_per_dim,
            } => {
                let grid =
                    grid_points_per_dim.unwrap_or(objectives::default_grid_points(*dimension));
                let f = objectives::make_noise_function(
                    *dimension,
                    grid,
                    seed::derive(seed_val, "noise-grid", 0),
                    *smoothing_variance,
                )?;
                Ok(objectives::noise_objective(f))
            }
        }
    }
}

/// One seed's outcome: per-optimizer cumulative-best series and the raw
/// per-step results, in finish order.
pub struct SeedResult {
    pub seed: u64,
    pub series: IndexMap<String, Vec<(usize, f64)>>,
    pub raw_results: IndexMap<String, Vec<f64>>,
}

pub struct RunSummary {
    pub per_seed: Vec<SeedResult>,
    pub written: Vec<PathBuf>,
}

/// Runs the full comparison: per seed, a fresh lab with one experiment per
/// optimizer, shared initial samples injected, `steps` rounds driven, and
/// per-seed files emitted; afterwards writes `aggregate.csv` across seeds.
/// A failing seed leaves an `INCOMPLETE` marker next to the partial outputs
/// and returns the error.
pub fn run_comparison(config: &RunConfig) -> Result<RunSummary, BenchError> {
    config.check()?;
    fs::create_dir_all(&config.out_dir)?;
    let mut summary = RunSummary {
        per_seed: Vec::with_capacity(config.seeds),
        written: Vec::new(),
    };

    for rep in 0..config.seeds {
        let seed_val = seed::derive(config.base_seed, "bench-seed", rep as u64);
        match run_single_seed(config, rep, seed_val) {
            Ok((result, mut written)) => {
                summary.per_seed.push(result);
                summary.written.append(&mut written);
            }
            Err(e) => {
                let marker = config.out_dir.join("INCOMPLETE");
                let note = format!(
                    "run aborted in repetition {} of {}: {}\nemitted outputs cover only earlier repetitions\n",
                    rep, config.seeds, e
                );
                // Best effort: the marker must not mask the original error.
                let _ = fs::write(&marker, note);
                return Err(e);
            }
        }
    }

    let aggregate_path = config.out_dir.join("aggregate.csv");
    write_aggregate(&aggregate_path, config, &summary.per_seed)?;
    summary.written.push(aggregate_path);
    Ok(summary)
}

fn run_single_seed(
    config: &RunConfig,
    rep: usize,
    seed_val: u64,
) -> Result<(SeedResult, Vec<PathBuf>), BenchError> {
    let objective = config.build_objective(seed_val)?;
    let mut defs = ParamMap::new();
    for (name, &(lo, hi)) in objective.dim_names.iter().zip(&objective.bounds) {
        let def = ParamDef::min_max(lo, hi)
            .map_err(|e| BenchError::Config(format!("objective bounds: {}", e)))?;
        defs.insert(name.clone(), def);
    }

    let mut lab = LabAssistant::new();
    for (idx, name) in config.optimizers.iter().enumerate() {
        let params = OptimizerParams {
            seed: seed::derive(seed_val, "optimizer", idx as u64),
            acquisition: hypertune_core::acquisition::AcquisitionConfig {
                zeta: config.zeta,
                ..Default::default()
            },
            kernel: config.kernel,
            ..OptimizerParams::default()
        };
        lab.init_experiment(name, name, params, defs.clone(), true)?;
    }
    lab.inject_shared_initial(config.shared_initial, seed::derive(seed_val, "shared-init", 0))?;

    for _ in 0..config.steps {
        for name in &config.optimizers {
            let assistant = lab
                .assistant(name)
                .expect("optimizer was registered a moment ago");
            let candidate = assistant.get_next_candidate()?;
            let point: Vec<f64> = objective
                .dim_names
                .iter()
                .map(|dim| {
                    candidate.params[dim]
                        .as_real()
                        .expect("benchmark spaces are purely numeric")
                })
                .collect();
            let value = objective.eval(&point);
            if !value.is_finite() {
                return Err(BenchError::Runtime(format!(
                    "objective returned a non-finite value at {:?}",
                    point
                )));
            }
            assistant.tell(candidate.with_result(value), CandidateStatus::Finished)?;
        }
    }

    let seed_dir = config.out_dir.join(format!("seed-{}", rep));
    let written = lab.compare_and_emit(&seed_dir)?;

    let mut series = IndexMap::new();
    let mut raw_results = IndexMap::new();
    for (name, assistant) in lab.assistants() {
        series.insert(name.clone(), assistant.best_result_series());
        raw_results.insert(
            name.clone(),
            assistant
                .experiment()
                .finished()
                .iter()
                .map(|c| c.result.expect("finished candidates always carry results"))
                .collect(),
        );
    }
    Ok((
        SeedResult {
            seed: seed_val,
            series,
            raw_results,
        },
        written,
    ))
}

/// Linear-interpolation quantile of already-sorted values, q in [0, 1].
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Writes `step,<name>_mean,<name>_lo,<name>_hi,...` where lo/hi bound the
/// central 75% of seeds' cumulative-best at that step.
fn write_aggregate(
    path: &Path,
    config: &RunConfig,
    per_seed: &[SeedResult],
) -> Result<(), BenchError> {
    let mut text = String::from("step");
    for name in &config.optimizers {
        text.push_str(&format!(",{n}_mean,{n}_lo,{n}_hi", n = name));
    }
    text.push('\n');
    for step in 1..=config.steps {
        text.push_str(&step.to_string());
        for name in &config.optimizers {
            let mut values: Vec<f64> = per_seed
                .iter()
                .map(|r| r.series[name][step - 1].1)
                .collect();
            values.sort_by(f64::total_cmp);
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            text.push_str(&format!(
                ",{},{},{}",
                mean,
                quantile_sorted(&values, 0.125),
                quantile_sorted(&values, 0.875)
            ));
        }
        text.push('\n');
    }
    let tmp = path.with_extension("csv.tmp");
    fs::write(&tmp, &text)?;
    fs::rename(&tmp, path)?;
    Ok(())
}
