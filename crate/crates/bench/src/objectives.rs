//! Benchmark objective functions: the Branin-Hoo surface and a seeded
//! synthetic-noise landscape with tunable smoothness.

use std::f64::consts::PI;

use hypertune_core::seed;
use rand::Rng;

use crate::BenchError;

/// A black-box target for the harness: total and finite everywhere inside
/// its bounds, deterministic given its construction seed.
pub struct Objective {
    pub name: String,
    pub dimension: usize,
    /// Per-dimension real intervals, in natural (unwarped) units.
    pub bounds: Vec<(f64, f64)>,
    /// Dimension names, used for experiment definitions and CSV headers.
    pub dim_names: Vec<String>,
    eval: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl Objective {
    pub fn eval(&self, point: &[f64]) -> f64 {
        debug_assert_eq!(point.len(), self.dimension);
        (self.eval)(point)
    }
}

/// The Branin-Hoo test surface:
/// f(x, y) = (y − 5.1/(4π²)·x² + (5/π)·x − 6)² + 10·(1 − 1/(8π))·cos x + 10.
/// Three global minima, value ≈ 0.397887.
pub fn branin(x: f64, y: f64) -> f64 {
    let hump = y - 5.1 / (4.0 * PI * PI) * x * x + 5.0 / PI * x - 6.0;
    hump * hump + 10.0 * (1.0 - 1.0 / (8.0 * PI)) * x.cos() + 10.0
}

/// Branin over its standard benchmark box x ∈ [−5, 10], y ∈ [0, 15].
pub fn branin_objective() -> Objective {
    Objective {
        name: "branin".into(),
        dimension: 2,
        bounds: vec![(-5.0, 10.0), (0.0, 15.0)],
        dim_names: vec!["x".into(), "y".into()],
        eval: Box::new(|p| branin(p[0], p[1])),
    }
}

/// Maximum number of grid cells a noise function may allocate.
const MAX_GRID_CELLS: usize = 10_000_000;

/// A smoothed random landscape on the unit cube: a dense grid of U(0,1)
/// draws, evaluated by Gaussian-weighted averaging of the nearest nodes.
/// The grid depends only on the seed, so sweeping `smoothing_variance`
/// reshapes the same underlying landscape.
#[derive(Debug)]
pub struct NoiseFunction {
    pub dimension: usize,
    pub grid_points_per_dim: usize,
    pub smoothing_variance: f64,
    /// How many nearest nodes contribute to an evaluation.
    pub neighbor_cutoff: usize,
    grid_values: Vec<f64>,
}

/// Default grid resolution: dense for low dimensions, coarser at n = 3 to
/// keep memory at desk scale.
pub fn default_grid_points(dimension: usize) -> usize {
    if dimension <= 2 {
        20
    } else {
        8
    }
}

/// Draws the grid once from U(0,1). The values never depend on
/// `smoothing_variance`.
pub fn make_noise_function(
    dimension: usize,
    grid_points_per_dim: usize,
    seed_val: u64,
    smoothing_variance: f64,
) -> Result<NoiseFunction, BenchError> {
    if dimension < 1 {
        return Err(BenchError::Config("noise dimension must be at least 1".into()));
    }
    if grid_points_per_dim < 2 {
        return Err(BenchError::Config(
            "noise grid needs at least 2 points per dimension".into(),
        ));
    }
    if !(smoothing_variance > 0.0) || !smoothing_variance.is_finite() {
        return Err(BenchError::Config(
            "smoothing variance must be positive and finite".into(),
        ));
    }
    let mut cells: usize = 1;
    for _ in 0..dimension {
        cells = cells
            .checked_mul(grid_points_per_dim)
            .filter(|&c| c <= MAX_GRID_CELLS)
            .ok_or_else(|| {
                BenchError::Config(format!(
                    "noise grid {}^{} exceeds {} cells",
                    grid_points_per_dim, dimension, MAX_GRID_CELLS
                ))
            })?;
    }
    let mut rng = seed::rng(seed_val);
    let grid_values: Vec<f64> = (0..cells).map(|_| rng.gen::<f64>()).collect();
    // Surrounding hypercube corners plus a margin.
    let neighbor_cutoff = (2usize << dimension).min(64).min(cells);
    Ok(NoiseFunction {
        dimension,
        grid_points_per_dim,
        smoothing_variance,
        neighbor_cutoff,
        grid_values,
    })
}

impl NoiseFunction {
    pub fn grid_values(&self) -> &[f64] {
        &self.grid_values
    }

    /// Node coordinate along one axis: index i maps to i/(P−1) in [0, 1].
    fn node_coord(&self, index: usize) -> f64 {
        index as f64 / (self.grid_points_per_dim - 1) as f64
    }

    fn cell_distance_sq(&self, cell: usize, point: &[f64]) -> f64 {
        let mut rest = cell;
        let mut d2 = 0.0;
        // Row-major: the last dimension varies fastest.
        for dim in (0..self.dimension).rev() {
            let idx = rest % self.grid_points_per_dim;
            rest /= self.grid_points_per_dim;
            let delta = point[dim] - self.node_coord(idx);
            d2 += delta * delta;
        }
        d2
    }

    /// Gaussian-weighted average of the `neighbor_cutoff` nearest grid
    /// values: Σ wᵢvᵢ / Σ wᵢ with wᵢ = exp(−dᵢ²/(2·smoothing_variance)).
    /// A convex combination, so the result stays within the contributing
    /// values' range (and therefore within [0, 1]).
    pub fn eval(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.dimension, "point dimension mismatch");
        let mut scored: Vec<(f64, usize)> = (0..self.grid_values.len())
            .map(|cell| (self.cell_distance_sq(cell, point), cell))
            .collect();
        let k = self.neighbor_cutoff;
        scored.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0));
        let nearest = &scored[..k];
        // Dividing out the smallest exponent keeps the weights well away
        // from underflow; the ratio is unchanged.
        let d2_min = nearest.iter().map(|&(d2, _)| d2).fold(f64::INFINITY, f64::min);
        let mut weight_sum = 0.0;
        let mut value_sum = 0.0;
        for &(d2, cell) in nearest {
            let w = (-(d2 - d2_min) / (2.0 * self.smoothing_variance)).exp();
            weight_sum += w;
            value_sum += w * self.grid_values[cell];
        }
        value_sum / weight_sum
    }
}

/// Wraps a noise function as a harness objective on [0, 1]^n.
pub fn noise_objective(f: NoiseFunction) -> Objective {
    let dimension = f.dimension;
    Objective {
        name: format!("noise{}d", dimension),
        dimension,
        bounds: vec![(0.0, 1.0); dimension],
        dim_names: (0..dimension).map(|i| format!("x{}", i)).collect(),
        eval: Box::new(move |p| f.eval(p)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branin_matches_known_values() {
        assert!((branin(PI, 2.275) - 0.397887).abs() < 1e-6);
        assert!((branin(0.0, 0.0) - 55.602113).abs() < 1e-6);
        assert!((branin(-PI, 12.275) - branin(PI, 2.275)).abs() < 1e-9);
        assert!((branin(9.42478, 2.475) - 0.397887).abs() < 1e-5);
    }

    #[test]
    fn branin_objective_is_finite_on_its_box() {
        let obj = branin_objective();
        let mut rng = seed::rng(3);
        for _ in 0..1000 {
            let p: Vec<f64> = obj
                .bounds
                .iter()
                .map(|&(lo, hi)| rng.gen_range(lo..hi))
                .collect();
            assert!(obj.eval(&p).is_finite());
        }
    }

    #[test]
    fn noise_grid_depends_only_on_the_seed() {
        let a = make_noise_function(2, 5, 11, 0.1).unwrap();
        let b = make_noise_function(2, 5, 11, 100.0).unwrap();
        assert_eq!(a.grid_values(), b.grid_values());
        let c = make_noise_function(2, 5, 12, 0.1).unwrap();
        assert_ne!(a.grid_values(), c.grid_values());
    }

    #[test]
    fn noise_grid_shape_and_range() {
        let f = make_noise_function(1, 4, 7, 0.1).unwrap();
        assert_eq!(f.grid_values().len(), 4);
        assert!(f.grid_values().iter().all(|&v| (0.0..=1.0).contains(&v)));
        let g = make_noise_function(3, 8, 7, 0.1).unwrap();
        assert_eq!(g.grid_values().len(), 512);
    }

    #[test]
    fn oversized_grids_are_a_config_error() {
        let err = make_noise_function(9, 10, 0, 0.1).unwrap_err();
        assert!(matches!(err, BenchError::Config(_)));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn tiny_variance_recovers_the_node_value() {
        let f = make_noise_function(2, 5, 3, 1e-12).unwrap();
        // Node (1, 2) sits at (0.25, 0.5); row-major cell 1*5 + 2.
        let expected = f.grid_values()[7];
        assert!((f.eval(&[0.25, 0.5]) - expected).abs() < 1e-9);
    }

    #[test]
    fn huge_variance_approaches_the_flat_average() {
        let f = make_noise_function(1, 4, 9, 1e6).unwrap();
        let point = [0.1];
        let got = f.eval(&point);
        let mean = f.grid_values().iter().sum::<f64>() / 4.0;
        assert!((got - mean).abs() < 1e-6, "got {} vs mean {}", got, mean);
    }

    #[test]
    fn equidistant_nodes_average_exactly() {
        let f = make_noise_function(1, 2, 21, 0.05).unwrap();
        let expected = (f.grid_values()[0] + f.grid_values()[1]) / 2.0;
        assert_eq!(f.eval(&[0.5]), expected);
    }

    #[test]
    fn noise_eval_is_a_convex_combination() {
        let f = make_noise_function(3, 8, 5, 0.02).unwrap();
        let mut rng = seed::rng(6);
        for _ in 0..200 {
            let p: Vec<f64> = (0..3).map(|_| rng.gen::<f64>()).collect();
            let v = f.eval(&p);
            assert!((0.0..=1.0).contains(&v), "out of range: {}", v);
        }
    }

    #[test]
    fn neighbor_cutoff_follows_the_dimension() {
        assert_eq!(make_noise_function(1, 4, 0, 0.1).unwrap().neighbor_cutoff, 4);
        assert_eq!(make_noise_function(2, 5, 0, 0.1).unwrap().neighbor_cutoff, 8);
        assert_eq!(make_noise_function(3, 8, 0, 0.1).unwrap().neighbor_cutoff, 16);
        // Clamped when the grid is smaller than the cutoff.
        assert_eq!(make_noise_function(1, 2, 0, 0.1).unwrap().neighbor_cutoff, 2);
    }
}
