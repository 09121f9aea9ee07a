//! Improvement-based acquisition functions over GP posterior quantities.
//!
//! Both probability of improvement and expected improvement are driven by a
//! direction-aware score `z = (−1)^MAX · (incumbent − mean + ζ) / σ`: the
//! `max_flag` flips the sign for maximization experiments and the ζ offset
//! trades exploitation against exploration. The EI gradient is assembled
//! analytically from the posterior mean/variance gradients, so the
//! acquisition optimizer can run quasi-Newton refinement on it.

use statrs::function::erf::erfc;
use thiserror::Error;

/// Which improvement measure to score candidates with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcquisitionKind {
    ExpectedImprovement,
    ProbabilityOfImprovement,
}

/// Acquisition settings: the measure, the ζ trade-off, and the direction
/// flag (`max_flag = 1` for maximization experiments).
#[derive(Debug, Clone)]
pub struct AcquisitionConfig {
    pub kind: AcquisitionKind,
    pub zeta: f64,
    pub max_flag: u8,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        AcquisitionConfig {
            kind: AcquisitionKind::ExpectedImprovement,
            zeta: 0.0,
            max_flag: 0,
        }
    }
}

impl AcquisitionConfig {
    pub fn check(&self) -> Result<(), AcqError> {
        if self.max_flag > 1 {
            return Err(AcqError::BadConfig("max_flag must be 0 or 1".into()));
        }
        if !self.zeta.is_finite() || self.zeta < 0.0 {
            return Err(AcqError::BadConfig("zeta must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// `(−1)^max_flag`.
    fn sign(&self) -> f64 {
        if self.max_flag == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// GP posterior at one point, plus the incumbent the improvement is
/// measured against.
#[derive(Debug, Clone)]
pub struct PosteriorAt {
    pub mean: f64,
    pub variance: f64,
    pub grad_mean: Vec<f64>,
    pub grad_variance: Vec<f64>,
    pub incumbent: f64,
}

impl PosteriorAt {
    /// Value-only posterior with no gradient information.
    pub fn scalar(mean: f64, variance: f64, incumbent: f64) -> Self {
        PosteriorAt {
            mean,
            variance,
            grad_mean: Vec::new(),
            grad_variance: Vec::new(),
            incumbent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AcqError {
    #[error("posterior variance is zero: the z-score and EI gradient are undefined there")]
    DegenerateVariance,
    #[error("gradient vectors have mismatched lengths")]
    GradientLength,
    #[error("invalid acquisition config: {0}")]
    BadConfig(String),
}

const SQRT_2PI: f64 = 2.5066282746310002;

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / SQRT_2PI
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

/// Direction-aware improvement score `(−1)^MAX·(incumbent − mean + ζ)/σ`.
pub fn z_score(p: &PosteriorAt, config: &AcquisitionConfig) -> Result<f64, AcqError> {
    if p.variance <= 0.0 {
        return Err(AcqError::DegenerateVariance);
    }
    Ok(config.sign() * (p.incumbent - p.mean + config.zeta) / p.variance.sqrt())
}

/// Closed-form expected improvement `σ·(z·Φ(z) + φ(z))`; zero at zero
/// variance. Never negative.
pub fn expected_improvement(p: &PosteriorAt, config: &AcquisitionConfig) -> f64 {
    match z_score(p, config) {
        Ok(z) => (p.variance.sqrt() * (z * normal_cdf(z) + normal_pdf(z))).max(0.0),
        Err(_) => 0.0,
    }
}

/// Expected improvement by direct quadrature of the improvement integrand —
/// the independent check for [`expected_improvement`].
///
/// Integrates `improvement(y)·N(y; μ, σ²)` over `μ ± 8σ` with composite
/// Simpson (4096 panels), splitting at the improvement threshold
/// `incumbent + ζ` so the integrand stays smooth inside the interval.
pub fn expected_improvement_numeric(p: &PosteriorAt, config: &AcquisitionConfig) -> f64 {
    let sigma = p.variance.sqrt();
    if sigma <= 0.0 {
        return 0.0;
    }
    let target = p.incumbent + config.zeta;
    let (lo, hi) = if config.max_flag == 0 {
        (p.mean - 8.0 * sigma, (p.mean + 8.0 * sigma).min(target))
    } else {
        ((p.mean - 8.0 * sigma).max(target), p.mean + 8.0 * sigma)
    };
    if hi <= lo {
        return 0.0;
    }
    let improvement = |y: f64| {
        if config.max_flag == 0 {
            target - y
        } else {
            y - target
        }
    };
    let pdf = |y: f64| normal_pdf((y - p.mean) / sigma) / sigma;
    simpson(|y| improvement(y) * pdf(y), lo, hi, 4096)
}

fn simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, panels: usize) -> f64 {
    debug_assert!(panels % 2 == 0);
    let h = (hi - lo) / panels as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..panels {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += weight * f(lo + i as f64 * h);
    }
    acc * h / 3.0
}

/// Probability of improvement `Φ(z)`. At zero variance the outcome is
/// certain, so this collapses to an indicator on the sign of the z-score
/// numerator.
pub fn probability_of_improvement(p: &PosteriorAt, config: &AcquisitionConfig) -> f64 {
    match z_score(p, config) {
        Ok(z) => normal_cdf(z),
        Err(_) => {
            let numerator = config.sign() * (p.incumbent - p.mean + config.zeta);
            if numerator > 0.0 {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Dispatches on the configured acquisition kind.
pub fn evaluate(p: &PosteriorAt, config: &AcquisitionConfig) -> f64 {
    match config.kind {
        AcquisitionKind::ExpectedImprovement => expected_improvement(p, config),
        AcquisitionKind::ProbabilityOfImprovement => probability_of_improvement(p, config),
    }
}

/// Analytic gradient of expected improvement:
///
/// `∇EI = ∇σ²/(2σ)·(z·Φ(z)+φ(z)) − (−1)^MAX·∇μ·Φ(z) − ∇σ²·Φ(z)·z/(2σ)`
///
/// Undefined at zero variance; the acquisition optimizer falls back to its
/// warm-start answer when that happens.
pub fn expected_improvement_gradient(
    p: &PosteriorAt,
    config: &AcquisitionConfig,
) -> Result<Vec<f64>, AcqError> {
    if p.grad_mean.len() != p.grad_variance.len() {
        return Err(AcqError::GradientLength);
    }
    let z = z_score(p, config)?;
    let sigma = p.variance.sqrt();
    let cdf = normal_cdf(z);
    let pdf = normal_pdf(z);
    let sign = config.sign();
    Ok(p.grad_mean
        .iter()
        .zip(&p.grad_variance)
        .map(|(gm, gv)| {
            gv / (2.0 * sigma) * (z * cdf + pdf) - sign * gm * cdf - gv * cdf * z / (2.0 * sigma)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand::Rng;

    fn scalar(mean: f64, variance: f64, incumbent: f64) -> PosteriorAt {
        PosteriorAt::scalar(mean, variance, incumbent)
    }

    fn cfg(zeta: f64, max_flag: u8) -> AcquisitionConfig {
        AcquisitionConfig {
            kind: AcquisitionKind::ExpectedImprovement,
            zeta,
            max_flag,
        }
    }

    #[test]
    fn z_score_matches_direct_substitution() {
        assert_eq!(z_score(&scalar(0.5, 1.0, 0.5), &cfg(0.0, 0)).unwrap(), 0.0);
        assert_eq!(z_score(&scalar(0.0, 1.0, 1.0), &cfg(0.0, 0)).unwrap(), 1.0);
        assert_eq!(z_score(&scalar(0.0, 1.0, 1.0), &cfg(0.0, 1)).unwrap(), -1.0);
        assert_eq!(
            z_score(&scalar(0.0, 0.0, 1.0), &cfg(0.0, 0)).unwrap_err(),
            AcqError::DegenerateVariance
        );
    }

    #[test]
    fn expected_improvement_hits_normal_table_values() {
        // z = 0: EI = φ(0).
        let at_incumbent = expected_improvement(&scalar(0.5, 1.0, 0.5), &cfg(0.0, 0));
        assert!((at_incumbent - 0.3989422804014327).abs() < 1e-9);
        // z = 1: EI = Φ(1) + φ(1).
        let one_below = expected_improvement(&scalar(0.0, 1.0, 1.0), &cfg(0.0, 0));
        assert!((one_below - 1.0833154705876863).abs() < 1e-9);
        // Degenerate variance.
        assert_eq!(expected_improvement(&scalar(0.0, 0.0, 1.0), &cfg(0.0, 0)), 0.0);
    }

    #[test]
    fn quadrature_oracle_confirms_the_closed_form() {
        let cases = [
            (scalar(0.5, 1.0, 0.5), cfg(0.0, 0), 0.3989422804014327),
            (scalar(0.0, 1.0, 1.0), cfg(0.0, 0), 1.0833154705876863),
        ];
        for (p, c, expected) in &cases {
            let numeric = expected_improvement_numeric(p, c);
            assert!((numeric - expected).abs() < 1e-6, "numeric {}", numeric);
        }
        // Incumbent 10σ below the mean: the improvement tail is empty.
        let hopeless = scalar(0.0, 1.0, -10.0);
        assert!(expected_improvement(&hopeless, &cfg(0.0, 0)) <= 1e-6);
        assert!(expected_improvement_numeric(&hopeless, &cfg(0.0, 0)) <= 1e-6);
    }

    #[test]
    fn analytic_and_numeric_agree_on_random_tuples() {
        let mut rng = seed::rng(99);
        for _ in 0..1000 {
            let p = scalar(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(1e-6..10.0),
                rng.gen_range(-3.0..3.0),
            );
            let c = cfg([0.0, 0.1, 1.0][rng.gen_range(0..3)], rng.gen_range(0..2));
            let analytic = expected_improvement(&p, &c);
            let numeric = expected_improvement_numeric(&p, &c);
            assert!(
                (analytic - numeric).abs() <= 1e-6,
                "analytic {} numeric {} at {:?}",
                analytic,
                numeric,
                (p, c)
            );
        }
    }

    #[test]
    fn direction_flip_mirrors_the_mean() {
        // Same incumbent distance on opposite sides: identical EI.
        let m = 0.7;
        let d = 0.4;
        let a = expected_improvement(&scalar(m + d, 2.0, m), &cfg(0.0, 0));
        let b = expected_improvement(&scalar(m - d, 2.0, m), &cfg(0.0, 1));
        assert_eq!(a.to_bits(), b.to_bits());
        // Negating mean and incumbent swaps the direction exactly (ζ = 0).
        let p = scalar(0.3, 1.7, -0.2);
        let q = scalar(-0.3, 1.7, 0.2);
        assert_eq!(
            expected_improvement(&p, &cfg(0.0, 0)).to_bits(),
            expected_improvement(&q, &cfg(0.0, 1)).to_bits()
        );
    }

    #[test]
    fn zeta_rewards_exploration_at_the_incumbent() {
        let p = scalar(1.0, 0.5, 1.0);
        let without = expected_improvement(&p, &cfg(0.0, 0));
        let with = expected_improvement(&p, &cfg(0.5, 0));
        assert!(with > without);
    }

    #[test]
    fn probability_of_improvement_tracks_the_normal_cdf() {
        let half = probability_of_improvement(&scalar(0.5, 1.0, 0.5), &cfg(0.0, 0));
        assert!((half - 0.5).abs() < 1e-12);
        let one = probability_of_improvement(&scalar(0.0, 1.0, 1.0), &cfg(0.0, 0));
        assert!((one - 0.8413447460685429).abs() < 1e-9);
        // Minimization with the mean far above the incumbent: no hope.
        let hopeless = probability_of_improvement(&scalar(50.0, 1.0, 0.0), &cfg(0.0, 0));
        assert!(hopeless < 1e-12);
    }

    #[test]
    fn degenerate_variance_collapses_pi_to_an_indicator() {
        assert_eq!(
            probability_of_improvement(&scalar(1.0, 0.0, 2.0), &cfg(0.0, 0)),
            1.0
        );
        assert_eq!(
            probability_of_improvement(&scalar(2.0, 0.0, 1.0), &cfg(0.0, 0)),
            0.0
        );
        assert_eq!(
            probability_of_improvement(&scalar(1.0, 0.0, 2.0), &cfg(0.0, 1)),
            0.0
        );
    }

    #[test]
    fn zero_posterior_gradients_give_a_zero_ei_gradient() {
        let p = PosteriorAt {
            mean: 0.2,
            variance: 1.0,
            grad_mean: vec![0.0; 3],
            grad_variance: vec![0.0; 3],
            incumbent: 0.5,
        };
        let grad = expected_improvement_gradient(&p, &cfg(0.0, 0)).unwrap();
        assert_eq!(grad, vec![0.0; 3]);
        let degenerate = PosteriorAt {
            variance: 0.0,
            ..p
        };
        assert_eq!(
            expected_improvement_gradient(&degenerate, &cfg(0.0, 0)).unwrap_err(),
            AcqError::DegenerateVariance
        );
    }

    /// EI gradient assembled the long way: product rule on σ(x)·g(z(x))
    /// without collapsing terms.
    fn gradient_product_rule(p: &PosteriorAt, config: &AcquisitionConfig) -> Vec<f64> {
        let sigma = p.variance.sqrt();
        let z = z_score(p, config).unwrap();
        let g = z * normal_cdf(z) + normal_pdf(z);
        let sign = if config.max_flag == 0 { 1.0 } else { -1.0 };
        p.grad_mean
            .iter()
            .zip(&p.grad_variance)
            .map(|(gm, gv)| {
                let grad_sigma = gv / (2.0 * sigma);
                let grad_z = sign * (-gm) / sigma - z * grad_sigma / sigma;
                grad_sigma * g + sigma * normal_cdf(z) * grad_z
            })
            .collect()
    }

    #[test]
    fn simplified_gradient_matches_the_product_rule_form() {
        let mut rng = seed::rng(7);
        for _ in 0..200 {
            let d = rng.gen_range(1..=5);
            let p = PosteriorAt {
                mean: rng.gen_range(-2.0..2.0),
                variance: rng.gen_range(0.01..4.0),
                grad_mean: (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect(),
                grad_variance: (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect(),
                incumbent: rng.gen_range(-2.0..2.0),
            };
            let c = cfg(rng.gen_range(0.0..1.0), rng.gen_range(0..2));
            let simplified = expected_improvement_gradient(&p, &c).unwrap();
            let long_form = gradient_product_rule(&p, &c);
            for (a, b) in simplified.iter().zip(&long_form) {
                assert!((a - b).abs() <= 1e-10, "{} vs {}", a, b);
            }
        }
    }

    /// Synthetic smooth posterior fields for finite-difference checks.
    struct Fields {
        freq: Vec<f64>,
        phase: f64,
    }

    impl Fields {
        fn at(&self, x: &[f64], incumbent: f64) -> PosteriorAt {
            let s: f64 = x.iter().zip(&self.freq).map(|(xi, f)| f * xi).sum();
            let mean = s.sin();
            let variance = 0.6 + 0.4 * (s + self.phase).cos();
            let grad_mean: Vec<f64> = self.freq.iter().map(|f| f * s.cos()).collect();
            let grad_variance: Vec<f64> = self
                .freq
                .iter()
                .map(|f| -0.4 * f * (s + self.phase).sin())
                .collect();
            PosteriorAt {
                mean,
                variance,
                grad_mean,
                grad_variance,
                incumbent,
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences_of_ei() {
        let mut rng = seed::rng(31);
        let h = 1e-6;
        for _ in 0..100 {
            let d = rng.gen_range(1..=5);
            let fields = Fields {
                freq: (0..d).map(|_| rng.gen_range(0.5..3.0)).collect(),
                phase: rng.gen_range(0.0..3.0),
            };
            let incumbent = rng.gen_range(-1.0..1.0);
            let c = cfg(rng.gen_range(0.0..0.5), rng.gen_range(0..2));
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(0.1..0.9)).collect();
            let analytic =
                expected_improvement_gradient(&fields.at(&x, incumbent), &c).unwrap();
            for j in 0..d {
                let mut lo = x.clone();
                let mut hi = x.clone();
                lo[j] -= h;
                hi[j] += h;
                let fd = (expected_improvement(&fields.at(&hi, incumbent), &c)
                    - expected_improvement(&fields.at(&lo, incumbent), &c))
                    / (2.0 * h);
                assert!(
                    (analytic[j] - fd).abs() <= 1e-5 * fd.abs().max(1.0),
                    "dim {}: analytic {} fd {}",
                    j,
                    analytic[j],
                    fd
                );
            }
        }
    }

    #[test]
    fn optimizer_finds_a_stationary_interior_ei_maximum() {
        use crate::acq_opt::{self, AcqOptConfig};
        use crate::gp::{GPModel, Kernel, KernelKind};
        use crate::param_space::WarpedPoint;

        let wp = |x: f64| WarpedPoint::new(vec![x]).unwrap();
        let kernel = Kernel::new(KernelKind::Matern52, vec![0.2], 1.0).unwrap();
        let model = GPModel::new(
            kernel,
            1e-6,
            vec![wp(0.1), wp(0.5), wp(0.9)],
            vec![0.5, -0.2, 0.6],
        )
        .unwrap();
        let incumbent = -0.2;
        let c = cfg(0.0, 0);
        let objective = |x: &[f64]| {
            let point = WarpedPoint::new(x.to_vec()).unwrap();
            let (mean, variance, grad_mean, grad_variance) =
                model.predict_with_gradients(&point).unwrap();
            let p = PosteriorAt {
                mean,
                variance,
                grad_mean,
                grad_variance,
                incumbent,
            };
            let value = expected_improvement(&p, &c);
            let grad = expected_improvement_gradient(&p, &c).ok();
            (value, grad)
        };
        let (argmax, _) = acq_opt::maximize(objective, 1, &AcqOptConfig::default());
        assert!(argmax[0] > 0.01 && argmax[0] < 0.99, "boundary argmax {}", argmax[0]);
        let (_, grad) = objective(&argmax);
        let norm = grad.unwrap()[0].abs();
        assert!(norm <= 1e-4, "gradient norm {} at argmax", norm);
    }

    #[test]
    fn pi_and_ei_rank_constant_variance_candidates_identically() {
        let mut rng = seed::rng(55);
        for _ in 0..20 {
            let incumbent = rng.gen_range(-1.0..1.0);
            let variance = rng.gen_range(0.1..2.0);
            let means: Vec<f64> = (0..20).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let argmax = |f: &dyn Fn(&PosteriorAt) -> f64| {
                means
                    .iter()
                    .enumerate()
                    .map(|(i, &m)| (i, f(&scalar(m, variance, incumbent))))
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap()
                    .0
            };
            let c = cfg(0.0, 0);
            let ei_best = argmax(&|p| expected_improvement(p, &c));
            let pi_best = argmax(&|p| probability_of_improvement(p, &c));
            assert_eq!(ei_best, pi_best);
        }
    }

    #[test]
    fn config_check_rejects_bad_fields() {
        assert!(cfg(0.0, 0).check().is_ok());
        assert!(cfg(-0.1, 0).check().is_err());
        assert!(cfg(f64::NAN, 0).check().is_err());
        assert!(AcquisitionConfig {
            kind: AcquisitionKind::ExpectedImprovement,
            zeta: 0.0,
            max_flag: 2,
        }
        .check()
        .is_err());
    }
}
