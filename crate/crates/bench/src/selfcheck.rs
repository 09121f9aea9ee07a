//! Built-in numerical cross-checks, runnable from the CLI. Each suite
//! verifies an analytic code path against an independent reference:
//! closed-form expected improvement against quadrature, its gradient
//! against central differences through a fitted surrogate, and the
//! parameter warps against round-trip identity.

use hypertune_core::acquisition::{
    expected_improvement, expected_improvement_gradient, expected_improvement_numeric,
    AcquisitionConfig, PosteriorAt,
};
use hypertune_core::gp::{self, FitConfig};
use hypertune_core::param_space::{ParamDef, WarpedPoint};
use hypertune_core::seed;
use rand::Rng;

use crate::BenchError;

struct Suite {
    name: &'static str,
    max_error: f64,
    tolerance: f64,
}

/// Runs all suites, printing one line per suite. Any tolerance violation
/// fails the whole check.
pub fn run() -> Result<(), BenchError> {
    let suites = [
        ei_quadrature_suite(),
        ei_gradient_suite()?,
        warp_round_trip_suite(),
    ];
    let mut ok = true;
    for s in &suites {
        let passed = s.max_error <= s.tolerance;
        ok &= passed;
        println!(
            "selfcheck {:<24} {}  (max error {:.3e}, tolerance {:.0e})",
            s.name,
            if passed { "ok" } else { "FAILED" },
            s.max_error,
            s.tolerance
        );
    }
    if ok {
        Ok(())
    } else {
        Err(BenchError::Runtime("selfcheck failed".into()))
    }
}

/// Closed-form EI against direct quadrature of the improvement integral.
fn ei_quadrature_suite() -> Suite {
    let mut rng = seed::rng(101);
    let mut max_error = 0.0_f64;
    for _ in 0..300 {
        let p = PosteriorAt::scalar(
            rng.gen_range(-5.0..5.0),
            rng.gen_range(1e-6..10.0),
            rng.gen_range(-5.0..5.0),
        );
        let config = AcquisitionConfig {
            zeta: [0.0, 0.01, 0.1][rng.gen_range(0..3)],
            max_flag: rng.gen_range(0..2),
            ..AcquisitionConfig::default()
        };
        let diff = (expected_improvement(&p, &config)
            - expected_improvement_numeric(&p, &config))
        .abs();
        max_error = max_error.max(diff);
    }
    Suite {
        name: "ei-quadrature",
        max_error,
        tolerance: 1e-6,
    }
}

/// Analytic EI gradient against central differences through fitted
/// surrogates at random interior points.
fn ei_gradient_suite() -> Result<Suite, BenchError> {
    let mut rng = seed::rng(202);
    let mut max_error = 0.0_f64;
    for trial in 0..20 {
        let dim = 1 + trial % 3;
        let n = 6;
        let train_x: Vec<WarpedPoint> = (0..n)
            .map(|_| WarpedPoint::new((0..dim).map(|_| rng.gen::<f64>()).collect()))
            .collect::<Result<_, _>>()
            .map_err(|e| BenchError::Runtime(e.to_string()))?;
        let train_y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let model = gp::fit(
            &train_x,
            &train_y,
            &FitConfig {
                restarts: 2,
                seed: seed::derive(300, "selfcheck-fit", trial as u64),
                ..FitConfig::default()
            },
        )
        .map_err(|e| BenchError::Runtime(e.to_string()))?;
        let incumbent = train_y.iter().cloned().fold(f64::INFINITY, f64::min);
        let config = AcquisitionConfig::default();

        let ei_at = |x: &[f64]| -> Result<f64, BenchError> {
            let point = WarpedPoint::new(x.to_vec()).map_err(|e| BenchError::Runtime(e.to_string()))?;
            let (mean, variance) = model
                .predict(&point)
                .map_err(|e| BenchError::Runtime(e.to_string()))?;
            Ok(expected_improvement(
                &PosteriorAt::scalar(mean, variance, incumbent),
                &config,
            ))
        };

        for _ in 0..5 {
            let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.05..0.95)).collect();
            let point = WarpedPoint::new(x.clone()).map_err(|e| BenchError::Runtime(e.to_string()))?;
            let (mean, variance, grad_mean, grad_variance) = model
                .predict_with_gradients(&point)
                .map_err(|e| BenchError::Runtime(e.to_string()))?;
            let p = PosteriorAt {
                mean,
                variance,
                grad_mean,
                grad_variance,
                incumbent,
            };
            let analytic = expected_improvement_gradient(&p, &config)
                .map_err(|e| BenchError::Runtime(e.to_string()))?;
            let h = 1e-6;
            for j in 0..dim {
                let mut plus = x.clone();
                let mut minus = x.clone();
                plus[j] += h;
                minus[j] -= h;
                let fd = (ei_at(&plus)? - ei_at(&minus)?) / (2.0 * h);
                let scale = fd.abs().max(analytic[j].abs()).max(1e-4);
                max_error = max_error.max((analytic[j] - fd).abs() / scale);
            }
        }
    }
    Ok(Suite {
        name: "ei-gradient",
        max_error,
        tolerance: 1e-4,
    })
}

/// Warp/unwarp round trips across all warpable definition kinds.
fn warp_round_trip_suite() -> Suite {
    let mut rng = seed::rng(303);
    let mut max_error = 0.0_f64;
    let defs = [
        ParamDef::min_max(-3.0, 7.0).expect("valid definition"),
        ParamDef::asymptotic(0.0, 1.0).expect("valid definition"),
        ParamDef::asymptotic_with_decades(1.0, 100.0, 4.0).expect("valid definition"),
        ParamDef::ordinal(["2", "4", "8", "16"]).expect("valid definition"),
    ];
    for def in &defs {
        let snaps = matches!(def, ParamDef::Ordinal { .. });
        for _ in 0..200 {
            let u = rng.gen::<f64>();
            let value = def.warp_out(u).expect("warpable definition");
            let u_back = def.warp_in(&value).expect("warp_out output must warp back");
            let error = if snaps {
                // Ordinals quantize to rung positions; the rung itself must
                // round-trip exactly.
                let again = def
                    .warp_in(&def.warp_out(u_back).expect("rung position warps out"))
                    .expect("rung value warps back");
                (u_back - again).abs()
            } else {
                (u - u_back).abs()
            };
            max_error = max_error.max(error);
        }
    }
    Suite {
        name: "warp-round-trip",
        max_error,
        tolerance: 1e-10,
    }
}
