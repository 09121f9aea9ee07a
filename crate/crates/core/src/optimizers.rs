//! Ask-side strategies: uniform random search and sequential model-based
//! Bayesian optimization.
//!
//! Both optimizers speak the same interface — "give me the next candidates
//! for this experiment" — so harnesses can swap them freely. The Bayesian
//! optimizer bootstraps with uniform draws until it has enough finished
//! evaluations to fit a surrogate, and its bootstrap consumes the random
//! stream exactly like `RandomSearch` does: seeded identically, the two
//! produce identical draws until the model phase begins. All model-phase
//! randomness (surrogate fit, acquisition search, dedup perturbation) runs
//! on seeds derived from the finished-evaluation count, so a proposal is a
//! pure function of the seed and the experiment state.

use std::collections::VecDeque;

use indexmap::IndexMap;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::acq_opt::{self, AcqOptConfig};
use crate::acquisition::{self, AcquisitionConfig, AcquisitionKind, PosteriorAt};
use crate::experiment::{Candidate, Experiment};
use crate::gp::{self, FitConfig, KernelKind};
use crate::param_space::{sample_params, unwarp_params, warp_params, ParamValue};
use crate::seed;

/// Strategy settings. Random search uses only the seed; the Bayesian
/// optimizer reads everything.
#[derive(Debug, Clone)]
pub struct OptimizerParams {
    pub seed: u64,
    /// Finished evaluations required before model-based proposals start.
    pub initial_random_count: usize,
    pub acquisition: AcquisitionConfig,
    pub kernel: KernelKind,
    /// Multi-start budget for the surrogate's hyperparameter fit.
    pub fit_restarts: usize,
    /// Acquisition-maximizer settings; its seed field is re-derived per
    /// proposal and need not be set.
    pub acq_opt: AcqOptConfig,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        OptimizerParams {
            seed: 0,
            initial_random_count: 10,
            acquisition: AcquisitionConfig::default(),
            kernel: KernelKind::Matern52,
            fit_restarts: 5,
            acq_opt: AcqOptConfig::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("bayesian optimization does not support nominal dimensions")]
    NominalUnsupported,
    #[error("invalid optimizer parameters: {0}")]
    BadParams(String),
    #[error("unknown optimizer `{0}` (expected `random` or `bayes`)")]
    UnknownName(String),
    #[error("proposal failed: {0}")]
    Proposal(String),
}

/// A candidate source. Implementations are single-owner and stateful; the
/// same instance must see every ask for its experiment.
pub trait Optimizer: Send {
    /// Returns `count` fresh candidates, each passing
    /// `experiment.validate_candidate`.
    fn get_next_candidates(
        &mut self,
        experiment: &Experiment,
        count: usize,
    ) -> Result<Vec<Candidate>, OptimizerError>;

    /// Queues parameter vectors to be returned verbatim as the next
    /// proposals, ahead of any strategy-generated ones. Used to share
    /// initial samples across optimizers.
    fn force_proposals(&mut self, proposals: Vec<IndexMap<String, ParamValue>>);

    fn name(&self) -> &'static str;
}

/// Constructs an optimizer by its external name: `random` or `bayes`.
pub fn by_name(
    name: &str,
    params: OptimizerParams,
    experiment: &Experiment,
) -> Result<Box<dyn Optimizer>, OptimizerError> {
    match name {
        "random" => Ok(Box::new(RandomSearch::new(params.seed))),
        "bayes" => Ok(Box::new(SimpleBayesianOptimizer::new(experiment, params)?)),
        other => Err(OptimizerError::UnknownName(other.to_owned())),
    }
}

/// Draws one uniform candidate for the experiment from a fresh seeded rng.
pub fn random_propose(experiment: &Experiment, seed_val: u64) -> Candidate {
    let mut rng = seed::rng(seed_val);
    Candidate::new(sample_params(experiment.param_defs(), &mut rng))
}

/// Uniform random search over the experiment's parameter space.
pub struct RandomSearch {
    rng: ChaCha8Rng,
    forced: VecDeque<IndexMap<String, ParamValue>>,
}

impl RandomSearch {
    pub fn new(seed_val: u64) -> Self {
        RandomSearch {
            rng: seed::rng(seed_val),
            forced: VecDeque::new(),
        }
    }
}

impl Optimizer for RandomSearch {
    fn get_next_candidates(
        &mut self,
        experiment: &Experiment,
        count: usize,
    ) -> Result<Vec<Candidate>, OptimizerError> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let params = match self.forced.pop_front() {
                Some(p) => p,
                None => sample_params(experiment.param_defs(), &mut self.rng),
            };
            out.push(Candidate::new(params));
        }
        Ok(out)
    }

    fn force_proposals(&mut self, proposals: Vec<IndexMap<String, ParamValue>>) {
        self.forced.extend(proposals);
    }

    fn name(&self) -> &'static str {
        "random"
    }
}

/// Sequential model-based optimization: fit a GP surrogate on the finished
/// history, maximize the acquisition over the warped cube, propose the
/// argmax.
pub struct SimpleBayesianOptimizer {
    params: OptimizerParams,
    /// Consumed only by bootstrap draws, mirroring [`RandomSearch`].
    rng: ChaCha8Rng,
    forced: VecDeque<IndexMap<String, ParamValue>>,
}

impl SimpleBayesianOptimizer {
    /// Rejects parameter spaces the surrogate cannot warp (nominal
    /// dimensions) up front.
    pub fn new(experiment: &Experiment, params: OptimizerParams) -> Result<Self, OptimizerError> {
        if experiment.param_defs().values().any(|d| !d.is_warpable()) {
            return Err(OptimizerError::NominalUnsupported);
        }
        if params.initial_random_count < 1 {
            return Err(OptimizerError::BadParams(
                "initial_random_count must be at least 1".into(),
            ));
        }
        params
            .acquisition
            .check()
            .map_err(|e| OptimizerError::BadParams(e.to_string()))?;
        let rng = seed::rng(params.seed);
        Ok(SimpleBayesianOptimizer {
            params,
            rng,
            forced: VecDeque::new(),
        })
    }
}

impl Optimizer for SimpleBayesianOptimizer {
    fn get_next_candidates(
        &mut self,
        experiment: &Experiment,
        count: usize,
    ) -> Result<Vec<Candidate>, OptimizerError> {
        let mut out = Vec::with_capacity(count);
        for i in 0..count {
            let candidate = if let Some(params) = self.forced.pop_front() {
                Candidate::new(params)
            } else if experiment.finished().len() < self.params.initial_random_count || i > 0 {
                // Bootstrap phase — and, for multi-candidate asks, everything
                // past the first: single-worker model, so only one
                // model-based proposal per ask.
                Candidate::new(sample_params(experiment.param_defs(), &mut self.rng))
            } else {
                bo_propose(experiment, &self.params)?
            };
            out.push(candidate);
        }
        Ok(out)
    }

    fn force_proposals(&mut self, proposals: Vec<IndexMap<String, ParamValue>>) {
        self.forced.extend(proposals);
    }

    fn name(&self) -> &'static str {
        "bayes"
    }
}

/// One model-based proposal from the finished history.
///
/// Results are sign-normalized (negated for maximization experiments) so the
/// surrogate always models a minimization target, then affinely standardized
/// for the fit; ζ is rescaled by the same factor, which leaves the
/// acquisition argmax unchanged. A surrogate fit failure falls back to a
/// uniform draw with a note in `worker_info`.
pub fn bo_propose(
    experiment: &Experiment,
    params: &OptimizerParams,
) -> Result<Candidate, OptimizerError> {
    let defs = experiment.param_defs();
    if defs.values().any(|d| !d.is_warpable()) {
        return Err(OptimizerError::NominalUnsupported);
    }
    let finished = experiment.finished();
    if finished.is_empty() {
        return Err(OptimizerError::BadParams(
            "model-based proposals need at least one finished candidate".into(),
        ));
    }
    let n = finished.len() as u64;

    let mut points = Vec::with_capacity(finished.len());
    let mut ys = Vec::with_capacity(finished.len());
    let flip = if experiment.minimization() { 1.0 } else { -1.0 };
    for c in finished {
        points.push(
            warp_params(defs, &c.params).map_err(|e| OptimizerError::Proposal(e.to_string()))?,
        );
        ys.push(flip * c.result.expect("finished candidates always carry results"));
    }

    // Standardize for the fit: the hyperparameter bounds assume O(1) data.
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let var = ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / ys.len() as f64;
    let scale = if var.sqrt() > 0.0 { var.sqrt() } else { 1.0 };
    let ys_std: Vec<f64> = ys.iter().map(|y| (y - mean) / scale).collect();
    let incumbent = ys_std.iter().cloned().fold(f64::INFINITY, f64::min);

    let fit_config = FitConfig {
        kernel: params.kernel,
        restarts: params.fit_restarts,
        seed: seed::derive(params.seed, "bo-fit", n),
        ..FitConfig::default()
    };
    let model = match gp::fit(&points, &ys_std, &fit_config) {
        Ok(model) => model,
        Err(e) => {
            // The warm-start contract still deserves a proposal: fall back
            // to a uniform draw and say why.
            let mut candidate = random_propose(experiment, seed::derive(params.seed, "bo-fallback", n));
            candidate.worker_info = Some(format!("surrogate fit failed ({}); proposed uniformly", e));
            return Ok(candidate);
        }
    };

    // Sign normalization has already happened, so the acquisition always
    // minimizes; ζ shrinks by the standardization scale.
    let acq_config = AcquisitionConfig {
        kind: params.acquisition.kind,
        zeta: params.acquisition.zeta / scale,
        max_flag: 0,
    };
    let dim = defs.len();
    let objective = |x: &[f64]| {
        let point = match crate::param_space::WarpedPoint::new(x.to_vec()) {
            Ok(p) => p,
            Err(_) => return (f64::NEG_INFINITY, None),
        };
        match model.predict_with_gradients(&point) {
            Ok((mean, variance, grad_mean, grad_variance)) => {
                let p = PosteriorAt {
                    mean,
                    variance,
                    grad_mean,
                    grad_variance,
                    incumbent,
                };
                let value = acquisition::evaluate(&p, &acq_config);
                let grad = if acq_config.kind == AcquisitionKind::ExpectedImprovement {
                    acquisition::expected_improvement_gradient(&p, &acq_config).ok()
                } else {
                    None
                };
                (value, grad)
            }
            Err(_) => (f64::NEG_INFINITY, None),
        }
    };

    let acq_opt_config = AcqOptConfig {
        seed: seed::derive(params.seed, "bo-acq", n),
        ..params.acq_opt.clone()
    };
    let (mut argmax, _) = acq_opt::maximize(objective, dim, &acq_opt_config);

    // Don't hand back a point that is already queued: nudge it instead.
    let pending_points: Vec<Vec<f64>> = experiment
        .pending()
        .iter()
        .filter_map(|c| warp_params(defs, &c.params).ok())
        .map(|p| p.into_coords())
        .collect();
    let coincides = |x: &[f64]| {
        pending_points
            .iter()
            .any(|p| x.iter().zip(p).all(|(a, b)| (a - b).abs() <= 1e-9))
    };
    if coincides(&argmax) {
        let mut rng = seed::rng(seed::derive(
            params.seed,
            "bo-perturb",
            n * 8191 + experiment.pending().len() as u64,
        ));
        for _ in 0..100 {
            let nudged: Vec<f64> = argmax
                .iter()
                .map(|&x| (x + rng.gen_range(-1e-3..1e-3)).clamp(0.0, 1.0))
                .collect();
            if !coincides(&nudged) {
                argmax = nudged;
                break;
            }
        }
    }

    let point = crate::param_space::WarpedPoint::new(argmax)
        .map_err(|e| OptimizerError::Proposal(e.to_string()))?;
    let values =
        unwarp_params(defs, &point).map_err(|e| OptimizerError::Proposal(e.to_string()))?;
    Ok(Candidate::new(values))
}
