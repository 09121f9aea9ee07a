//! Gaussian-process regression over warped `[0,1]^d` points.
//!
//! The surrogate supplies the posterior mean, the (latent) posterior
//! variance, and the gradients of both — everything the acquisition layer
//! consumes. Kernel hyperparameters are chosen by maximizing the log
//! marginal likelihood over bounded log-space with a multi-start simplex
//! search borrowed from [`crate::acq_opt`].

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

use crate::acq_opt::{self, AcqOptConfig, Method};
use crate::param_space::WarpedPoint;
use crate::seed;

/// Stationary kernel family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Matern52,
    Rbf,
}

/// A stationary covariance with one lengthscale per input dimension.
#[derive(Debug, Clone)]
pub struct Kernel {
    pub kind: KernelKind,
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
}

const SQRT5: f64 = 2.23606797749979;

impl Kernel {
    pub fn new(
        kind: KernelKind,
        lengthscales: Vec<f64>,
        signal_variance: f64,
    ) -> Result<Self, GpError> {
        if lengthscales.is_empty() || lengthscales.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(GpError::BadKernel(
                "lengthscales must be positive and finite".into(),
            ));
        }
        if !(signal_variance > 0.0) || !signal_variance.is_finite() {
            return Err(GpError::BadKernel(
                "signal variance must be positive and finite".into(),
            ));
        }
        Ok(Kernel {
            kind,
            lengthscales,
            signal_variance,
        })
    }

    /// Covariance between two points.
    pub fn value(&self, a: &[f64], b: &[f64]) -> f64 {
        let r2 = self.scaled_dist2(a, b);
        match self.kind {
            KernelKind::Rbf => self.signal_variance * (-0.5 * r2).exp(),
            KernelKind::Matern52 => {
                let r = r2.sqrt();
                self.signal_variance * (1.0 + SQRT5 * r + 5.0 * r2 / 3.0) * (-SQRT5 * r).exp()
            }
        }
    }

    /// Gradient of `value(a, b)` with respect to `a`.
    ///
    /// Both families reduce to `coef(r) · (a_j − b_j) / ℓ_j²`, so the radial
    /// factor stays finite as `a → b` and the gradient is smooth at zero.
    pub fn grad_a(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let r2 = self.scaled_dist2(a, b);
        let coef = match self.kind {
            KernelKind::Rbf => -self.signal_variance * (-0.5 * r2).exp(),
            KernelKind::Matern52 => {
                let r = r2.sqrt();
                -(5.0 / 3.0) * self.signal_variance * (1.0 + SQRT5 * r) * (-SQRT5 * r).exp()
            }
        };
        a.iter()
            .zip(b)
            .zip(&self.lengthscales)
            .map(|((ai, bi), l)| coef * (ai - bi) / (l * l))
            .collect()
    }

    fn scaled_dist2(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), self.lengthscales.len());
        debug_assert_eq!(b.len(), self.lengthscales.len());
        a.iter()
            .zip(b)
            .zip(&self.lengthscales)
            .map(|((ai, bi), l)| {
                let d = (ai - bi) / l;
                d * d
            })
            .sum()
    }
}

#[derive(Debug, Error)]
pub enum GpError {
    #[error("invalid kernel: {0}")]
    BadKernel(String),
    #[error("no training points")]
    EmptyTraining,
    #[error("training data must be finite")]
    NonFiniteData,
    #[error("expected {want} values for {want} points, got {got}")]
    LengthMismatch { got: usize, want: usize },
    #[error("point dimension {got} does not match training dimension {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("covariance matrix not positive definite even with jitter {max_jitter}")]
    NotPositiveDefinite { max_jitter: f64 },
}

/// A fitted Gaussian-process posterior. Immutable once built; all predict
/// operations are pure.
#[derive(Debug, Clone)]
pub struct GPModel {
    kernel: Kernel,
    noise_variance: f64,
    train_x: Vec<WarpedPoint>,
    train_y: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
}

impl GPModel {
    /// Factorizes `K + (noise + jitter)·I` and solves for the prediction
    /// weights. On a failed factorization, jitter is added starting at
    /// `1e-10` and escalated tenfold up to `1e-4` before giving up.
    pub fn new(
        kernel: Kernel,
        noise_variance: f64,
        train_x: Vec<WarpedPoint>,
        train_y: Vec<f64>,
    ) -> Result<Self, GpError> {
        let n = train_x.len();
        if n == 0 {
            return Err(GpError::EmptyTraining);
        }
        if train_y.len() != n {
            return Err(GpError::LengthMismatch {
                got: train_y.len(),
                want: n,
            });
        }
        let dim = kernel.lengthscales.len();
        for point in &train_x {
            if point.dim() != dim {
                return Err(GpError::DimensionMismatch {
                    got: point.dim(),
                    want: dim,
                });
            }
        }
        if train_y.iter().any(|y| !y.is_finite())
            || !noise_variance.is_finite()
            || noise_variance < 0.0
        {
            return Err(GpError::NonFiniteData);
        }

        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = kernel.value(train_x[i].coords(), train_x[j].coords());
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }

        let mut chosen = None;
        for exponent in [i32::MIN, -10, -9, -8, -7, -6, -5, -4] {
            let jitter = if exponent == i32::MIN {
                0.0
            } else {
                10f64.powi(exponent)
            };
            let mut m = k.clone();
            for i in 0..n {
                m[(i, i)] += noise_variance + jitter;
            }
            if let Some(chol) = Cholesky::new(m) {
                chosen = Some((chol, jitter));
                break;
            }
        }
        let Some((chol, jitter)) = chosen else {
            return Err(GpError::NotPositiveDefinite { max_jitter: 1e-4 });
        };

        let train_y = DVector::from_vec(train_y);
        let alpha = chol.solve(&train_y);
        Ok(GPModel {
            kernel,
            noise_variance,
            train_x,
            train_y,
            chol,
            alpha,
            jitter,
        })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    /// Jitter that had to be added for a stable factorization (0 if none).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn train_len(&self) -> usize {
        self.train_x.len()
    }

    pub fn dim(&self) -> usize {
        self.kernel.lengthscales.len()
    }

    /// Posterior mean and latent variance (no observation noise added);
    /// variance is clamped at zero after round-off.
    pub fn predict(&self, point: &WarpedPoint) -> Result<(f64, f64), GpError> {
        let (mean, var, _) = self.posterior(point, false)?;
        Ok((mean, var))
    }

    /// Posterior mean/variance plus their gradients with respect to the
    /// point's coordinates. The gradient is of the **variance**, not the
    /// standard deviation. Agrees with [`GPModel::predict`] bit-for-bit on
    /// the shared outputs.
    pub fn predict_with_gradients(
        &self,
        point: &WarpedPoint,
    ) -> Result<(f64, f64, Vec<f64>, Vec<f64>), GpError> {
        let (mean, var, grads) = self.posterior(point, true)?;
        let (grad_mean, grad_var) = grads.expect("gradients requested");
        Ok((mean, var, grad_mean, grad_var))
    }

    #[allow(clippy::type_complexity)]
    fn posterior(
        &self,
        point: &WarpedPoint,
        with_grad: bool,
    ) -> Result<(f64, f64, Option<(Vec<f64>, Vec<f64>)>), GpError> {
        if point.dim() != self.dim() {
            return Err(GpError::DimensionMismatch {
                got: point.dim(),
                want: self.dim(),
            });
        }
        let x = point.coords();
        let k_star = DVector::from_iterator(
            self.train_len(),
            self.train_x.iter().map(|t| self.kernel.value(x, t.coords())),
        );
        let mean = k_star.dot(&self.alpha);
        let w = self.chol.solve(&k_star);
        let var = (self.kernel.signal_variance - k_star.dot(&w)).max(0.0);

        let grads = with_grad.then(|| {
            let d = self.dim();
            let mut grad_mean = vec![0.0; d];
            let mut grad_var = vec![0.0; d];
            for (i, t) in self.train_x.iter().enumerate() {
                let g = self.kernel.grad_a(x, t.coords());
                for j in 0..d {
                    grad_mean[j] += self.alpha[i] * g[j];
                    grad_var[j] -= 2.0 * w[i] * g[j];
                }
            }
            (grad_mean, grad_var)
        });
        Ok((mean, var, grads))
    }

    /// `−½·yᵀα − Σ ln L_ii − (n/2)·ln 2π` for the factored model.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.train_len() as f64;
        let log_det_half: f64 = self.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
        -0.5 * self.train_y.dot(&self.alpha) - log_det_half - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
    }
}

/// Settings for [`fit`]: kernel family, log-space hyperparameter bounds,
/// and the multi-start budget.
#[derive(Debug, Clone)]
pub struct FitConfig {
    pub kernel: KernelKind,
    pub lengthscale_bounds: (f64, f64),
    pub signal_variance_bounds: (f64, f64),
    pub noise_bounds: (f64, f64),
    /// Simplex starts: the default initialization plus `restarts − 1`
    /// seeded random starts.
    pub restarts: usize,
    /// Simplex iteration cap per start.
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            kernel: KernelKind::Matern52,
            lengthscale_bounds: (1e-3, 10.0),
            signal_variance_bounds: (1e-4, 1e3),
            noise_bounds: (1e-8, 1.0),
            restarts: 5,
            max_iterations: 200,
            seed: 0,
        }
    }
}

/// Log-space interpolation between bounds: `u = 0` is the lower bound,
/// `u = 1` the upper, `u = 0.5` the geometric mean.
fn log_interp(bounds: (f64, f64), u: f64) -> f64 {
    (bounds.0.ln() + u * (bounds.1.ln() - bounds.0.ln())).exp()
}

fn model_at(
    u: &[f64],
    config: &FitConfig,
    train_x: &[WarpedPoint],
    train_y: &[f64],
) -> Result<GPModel, GpError> {
    let d = train_x[0].dim();
    let lengthscales: Vec<f64> = u[..d]
        .iter()
        .map(|&ui| log_interp(config.lengthscale_bounds, ui))
        .collect();
    let signal = log_interp(config.signal_variance_bounds, u[d]);
    let noise = log_interp(config.noise_bounds, u[d + 1]);
    let kernel = Kernel::new(config.kernel, lengthscales, signal)?;
    GPModel::new(kernel, noise, train_x.to_vec(), train_y.to_vec())
}

/// Fits kernel hyperparameters by maximizing the log marginal likelihood.
///
/// The search runs over `[0,1]^(d+2)` (log-warped lengthscales, signal
/// variance, noise variance) with a Nelder-Mead start at the geometric
/// midpoint of the bounds plus seeded random restarts. Because the midpoint
/// start can only improve, the returned model's likelihood is never below
/// the default initialization's.
pub fn fit(train_x: &[WarpedPoint], train_y: &[f64], config: &FitConfig) -> Result<GPModel, GpError> {
    if train_x.is_empty() {
        return Err(GpError::EmptyTraining);
    }
    if train_y.len() != train_x.len() {
        return Err(GpError::LengthMismatch {
            got: train_y.len(),
            want: train_x.len(),
        });
    }
    if train_y.iter().any(|y| !y.is_finite()) {
        return Err(GpError::NonFiniteData);
    }
    let d = train_x[0].dim();
    let n_params = d + 2;

    let objective = |u: &[f64]| match model_at(u, config, train_x, train_y) {
        Ok(model) => model.log_marginal_likelihood(),
        Err(_) => f64::NEG_INFINITY,
    };

    let nm_config = AcqOptConfig {
        method: Method::NelderMead,
        max_iterations: config.max_iterations,
        ..AcqOptConfig::default()
    };

    let mut rng = seed::rng(seed::derive(config.seed, "gp-fit", 0));
    let mut starts = vec![vec![0.5; n_params]];
    for _ in 1..config.restarts.max(1) {
        starts.push((0..n_params).map(|_| rand::Rng::gen::<f64>(&mut rng)).collect());
    }

    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in starts {
        let (u, value) = acq_opt::nelder_mead_maximize(objective, &start, &nm_config);
        if best.as_ref().map_or(true, |(_, b)| value > *b) {
            best = Some((u, value));
        }
    }
    let (u_best, _) = best.expect("at least one start");
    model_at(&u_best, config, train_x, train_y)
}
