//! Maximizes acquisition surfaces over the warped unit hypercube.
//!
//! Every search starts with a uniform random warm-up sweep; the best samples
//! seed a local method (projected quasi-Newton by default). Local-method
//! trouble — vanishing curvature, failed line searches, missing gradients —
//! never surfaces as an error: the warm-up winner is always a valid answer,
//! so the result is never worse than plain random search.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use thiserror::Error;

use crate::seed;

/// Local refinement applied after the random warm-up sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Warm-up sweep only.
    RandomOnly,
    /// Inverse-BFGS with trial points projected onto the cube during the
    /// line search; iterates never leave the bounds.
    BoundedQuasiNewton,
    /// Inverse-BFGS with an unconstrained line search; the best iterate is
    /// clamped back into the cube at the end.
    QuasiNewton,
    /// Gradient-free simplex search with clamped vertices.
    NelderMead,
}

/// Settings for [`maximize`].
#[derive(Debug, Clone)]
pub struct AcqOptConfig {
    pub method: Method,
    /// Uniform samples evaluated before any local refinement.
    pub warmup_samples: usize,
    /// Number of distinct warm-up points used as local-method starts.
    pub restarts: usize,
    /// Iteration cap per local run.
    pub max_iterations: usize,
    /// Sup-norm gradient threshold treated as converged.
    pub gradient_tolerance: f64,
    pub seed: u64,
}

impl Default for AcqOptConfig {
    fn default() -> Self {
        AcqOptConfig {
            method: Method::BoundedQuasiNewton,
            warmup_samples: 1000,
            restarts: 5,
            max_iterations: 200,
            gradient_tolerance: 1e-6,
            seed: 0,
        }
    }
}

/// One objective evaluation: the value, plus the gradient when the surface
/// is differentiable at that point.
pub type Eval = (f64, Option<Vec<f64>>);

/// Why a local step was abandoned. Callers fall back to the best point seen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("curvature denominator too small for a stable inverse-Hessian update")]
    DegenerateCurvature,
    #[error("line search found no improving step")]
    LineSearchFailed,
}

/// Inverse-BFGS state: the running inverse-Hessian approximation plus the
/// iterate it was built at. Oriented for minimization — callers maximizing
/// a function feed in negated gradients.
#[derive(Debug, Clone)]
pub struct QuasiNewtonState {
    pub inverse_hessian: DMatrix<f64>,
    pub point: DVector<f64>,
    pub gradient: DVector<f64>,
}

impl QuasiNewtonState {
    /// Fresh state with the identity as the initial inverse Hessian.
    pub fn new(point: DVector<f64>, gradient: DVector<f64>) -> Self {
        let n = point.len();
        QuasiNewtonState {
            inverse_hessian: DMatrix::identity(n, n),
            point,
            gradient,
        }
    }

    /// Descent direction `-H·g` for the current state.
    pub fn direction(&self) -> DVector<f64> {
        -(&self.inverse_hessian * &self.gradient)
    }
}

/// Rank-two inverse-BFGS update after moving to `point_new` with gradient
/// `gradient_new`.
///
/// When the curvature denominator `yᵀs` is at or below `1e-12` the update
/// would divide by (nearly) zero, so it is skipped and the caller is told to
/// fall back.
pub fn quasi_newton_step(
    state: &QuasiNewtonState,
    point_new: DVector<f64>,
    gradient_new: DVector<f64>,
) -> Result<QuasiNewtonState, StepError> {
    let s = &point_new - &state.point;
    let y = &gradient_new - &state.gradient;
    let ys = y.dot(&s);
    if ys <= 1e-12 {
        return Err(StepError::DegenerateCurvature);
    }
    let rho = 1.0 / ys;
    let n = s.len();
    let left = DMatrix::identity(n, n) - rho * &s * y.transpose();
    let mut h = &left * &state.inverse_hessian * left.transpose() + rho * &s * s.transpose();
    // Symmetrize to stop round-off drift from accumulating.
    h = (&h + h.transpose()) * 0.5;
    Ok(QuasiNewtonState {
        inverse_hessian: h,
        point: point_new,
        gradient: gradient_new,
    })
}

fn clamp01(x: &mut [f64]) {
    for v in x.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Backtracking Armijo line search along `direction`, minimizing `objective`.
///
/// With `project` set, every trial point is clamped onto the cube first, so
/// the accepted point respects the bounds exactly. Succeeds only on a point
/// distinct from `point` that satisfies the sufficient-decrease test; after
/// 30 halvings without one, the step is rejected.
pub fn bounded_step<F>(
    point: &[f64],
    direction: &[f64],
    gradient: &[f64],
    value: f64,
    objective: F,
    project: bool,
) -> Result<(Vec<f64>, f64), StepError>
where
    F: Fn(&[f64]) -> f64,
{
    const ARMIJO_C: f64 = 1e-4;
    let mut t = 1.0;
    for _ in 0..30 {
        let mut trial: Vec<f64> = point
            .iter()
            .zip(direction)
            .map(|(x, d)| x + t * d)
            .collect();
        if project {
            clamp01(&mut trial);
        }
        if trial != point {
            let slope: f64 = gradient
                .iter()
                .zip(trial.iter().zip(point))
                .map(|(g, (xt, x))| g * (xt - x))
                .sum();
            let trial_value = objective(&trial);
            if trial_value <= value + ARMIJO_C * slope && trial_value <= value {
                return Ok((trial, trial_value));
            }
        }
        t *= 0.5;
    }
    Err(StepError::LineSearchFailed)
}

/// Maximizes `objective` over `[0,1]^dim`.
///
/// Runs `warmup_samples` uniform evaluations, then the configured local
/// method from the best `restarts` distinct warm-up points. The returned
/// point lies in the cube and its value is never below the warm-up best.
pub fn maximize<F>(objective: F, dim: usize, config: &AcqOptConfig) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> Eval,
{
    assert!(dim >= 1, "dimension must be at least 1");
    assert!(config.warmup_samples >= 1, "warmup_samples must be at least 1");
    assert!(config.restarts >= 1, "restarts must be at least 1");

    let mut rng = seed::rng(config.seed);
    let mut warmup: Vec<(Vec<f64>, f64)> = Vec::with_capacity(config.warmup_samples);
    for _ in 0..config.warmup_samples {
        let x: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
        let (v, _) = objective(&x);
        let v = if v.is_nan() { f64::NEG_INFINITY } else { v };
        warmup.push((x, v));
    }
    warmup.sort_by(|a, b| b.1.total_cmp(&a.1));

    let mut best = warmup[0].clone();
    if config.method == Method::RandomOnly {
        return best;
    }

    let mut starts: Vec<&(Vec<f64>, f64)> = Vec::with_capacity(config.restarts);
    for entry in &warmup {
        if starts.len() == config.restarts {
            break;
        }
        if !starts.iter().any(|s| s.0 == entry.0) {
            starts.push(entry);
        }
    }

    for (start, start_value) in starts {
        let local = match config.method {
            Method::RandomOnly => unreachable!("handled above"),
            Method::BoundedQuasiNewton => {
                local_quasi_newton(&objective, start, *start_value, config, true)
            }
            Method::QuasiNewton => {
                local_quasi_newton(&objective, start, *start_value, config, false)
            }
            Method::NelderMead => Some(nelder_mead_maximize(
                |x| objective(x).0,
                start,
                config,
            )),
        };
        if let Some((point, value)) = local {
            if value > best.1 {
                best = (point, value);
            }
        }
    }

    clamp01(&mut best.0);
    best
}

/// Inverse-BFGS ascent from `start`; returns the best in-bounds iterate, or
/// `None` when no gradient is available there. Works on the negated
/// objective so the update keeps its textbook minimization orientation.
fn local_quasi_newton<F>(
    objective: &F,
    start: &[f64],
    start_value: f64,
    config: &AcqOptConfig,
    project: bool,
) -> Option<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> Eval,
{
    let (_, grad) = objective(start);
    let grad = grad?;
    let mut best = (start.to_vec(), start_value);
    let mut state = QuasiNewtonState::new(
        DVector::from_column_slice(start),
        -DVector::from_column_slice(&grad),
    );
    let mut value = -start_value;

    for _ in 0..config.max_iterations {
        if state.gradient.amax() <= config.gradient_tolerance {
            break;
        }
        let direction = state.direction();
        let step = bounded_step(
            state.point.as_slice(),
            direction.as_slice(),
            state.gradient.as_slice(),
            value,
            |x| {
                let (v, _) = objective(x);
                if v.is_nan() {
                    f64::INFINITY
                } else {
                    -v
                }
            },
            project,
        );
        let (point_new, value_new) = match step {
            Ok(accepted) => accepted,
            Err(_) => break,
        };
        let (f_new, grad_new) = objective(&point_new);
        if f_new.is_nan() {
            break;
        }
        if f_new > best.1 {
            let mut clamped = point_new.clone();
            clamp01(&mut clamped);
            let clamped_value = if clamped == point_new {
                f_new
            } else {
                objective(&clamped).0
            };
            if !clamped_value.is_nan() && clamped_value > best.1 {
                best = (clamped, clamped_value);
            }
        }
        let Some(grad_new) = grad_new else { break };
        match quasi_newton_step(
            &state,
            DVector::from_vec(point_new),
            -DVector::from_column_slice(&grad_new),
        ) {
            Ok(next) => state = next,
            Err(_) => break,
        }
        value = value_new;
    }
    Some(best)
}

/// Nelder-Mead simplex ascent from `start` with vertices clamped onto the
/// cube. Reflection/expansion/contraction/shrink coefficients are the
/// standard 1, 2, 0.5, 0.5. Stops when the simplex diameter drops below
/// `1e-8` or after `max_iterations`.
pub fn nelder_mead_maximize<F>(objective: F, start: &[f64], config: &AcqOptConfig) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    const REFLECT: f64 = 1.0;
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;
    const DIAMETER_TOL: f64 = 1e-8;
    const INIT_STEP: f64 = 0.05;

    let dim = start.len();
    // Minimize the negated objective; NaN sorts as worst.
    let eval = |x: &[f64]| {
        let v = -objective(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let mut base = start.to_vec();
    clamp01(&mut base);
    simplex.push((base.clone(), eval(&base)));
    for i in 0..dim {
        let mut v = base.clone();
        v[i] = if v[i] + INIT_STEP <= 1.0 {
            v[i] + INIT_STEP
        } else {
            v[i] - INIT_STEP
        };
        simplex.push((v.clone(), eval(&v)));
    }

    for _ in 0..config.max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex_diameter(&simplex) < DIAMETER_TOL {
            break;
        }
        let worst = simplex.len() - 1;
        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..worst].iter().map(|(v, _)| v[j]).sum::<f64>() / worst as f64)
            .collect();
        let shifted = |coef: f64| -> (Vec<f64>, f64) {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[worst].0)
                .map(|(c, w)| c + coef * (c - w))
                .collect();
            clamp01(&mut p);
            let v = eval(&p);
            (p, v)
        };

        let reflected = shifted(REFLECT);
        if reflected.1 < simplex[0].1 {
            let expanded = shifted(EXPAND);
            simplex[worst] = if expanded.1 < reflected.1 {
                expanded
            } else {
                reflected
            };
        } else if reflected.1 < simplex[worst - 1].1 {
            simplex[worst] = reflected;
        } else {
            let contracted = if reflected.1 < simplex[worst].1 {
                let outside = shifted(CONTRACT);
                (outside.1 <= reflected.1).then_some(outside)
            } else {
                let inside = shifted(-CONTRACT);
                (inside.1 < simplex[worst].1).then_some(inside)
            };
            match contracted {
                Some(vertex) => simplex[worst] = vertex,
                None => shrink_simplex(&mut simplex, SHRINK, &eval),
            }
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (point, neg_value) = simplex.into_iter().next().expect("simplex is non-empty");
    (point, -neg_value)
}

/// Pulls every vertex halfway (by `factor`) toward the best one and
/// re-evaluates. Never grows the simplex diameter.
fn shrink_simplex<F>(simplex: &mut [(Vec<f64>, f64)], factor: f64, eval: &F)
where
    F: Fn(&[f64]) -> f64,
{
    let best = simplex[0].0.clone();
    for vertex in simplex.iter_mut().skip(1) {
        for (x, b) in vertex.0.iter_mut().zip(&best) {
            *x = b + factor * (*x - *b);
        }
        vertex.1 = eval(&vertex.0);
    }
}

fn simplex_diameter(simplex: &[(Vec<f64>, f64)]) -> f64 {
    let mut diameter = 0.0f64;
    for i in 0..simplex.len() {
        for j in i + 1..simplex.len() {
            let d2: f64 = simplex[i]
                .0
                .iter()
                .zip(&simplex[j].0)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            diameter = diameter.max(d2.sqrt());
        }
    }
    diameter
}
