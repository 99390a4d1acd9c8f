//! Brute-force cross-checks: grid search for infima and Monte-Carlo moments.
//!
//! These deliberately share no code with the normal-form machinery beyond
//! sampling, so they can serve as independent references in tests.

use alloc::vec;
use alloc::vec::Vec;

use crate::gauss::{GaussError, GaussMap, Sampler};
use crate::linalg::Matrix;

/// Box and sampling density for [`grid_infimize`].
///
/// Defaults used in the test suites are 41 points per axis and 3 rounds,
/// which gives roughly 1e-4 accuracy on smooth quadratics in up to three
/// dimensions over boxes of width ~100.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub bounds: Vec<(f64, f64)>,
    pub resolution: usize,
    pub refinement_rounds: usize,
}

impl GridSpec {
    pub fn new(bounds: Vec<(f64, f64)>, resolution: usize, refinement_rounds: usize) -> Self {
        assert!(resolution >= 3, "grid resolution must be at least 3");
        assert!(
            bounds.iter().all(|(lo, hi)| lo.is_finite() && hi.is_finite() && lo <= hi),
            "grid bounds must be finite and ordered"
        );
        GridSpec {
            bounds,
            resolution,
            refinement_rounds,
        }
    }

    /// The same cube `[-r, r]` on every axis.
    pub fn cube(dim: usize, radius: f64, resolution: usize, refinement_rounds: usize) -> Self {
        GridSpec::new(vec![(-radius, radius); dim], resolution, refinement_rounds)
    }
}

/// Smallest value of `f` seen on a coarse-to-fine grid over the box.
///
/// Each round samples a full grid on the current window, then shrinks the
/// window to two pitches around the incumbent. If the incumbent sits on a
/// window edge that is not a box edge, the window is re-centred instead of
/// shrunk. Returns `+∞` iff every sample is `+∞`. Evaluation order is fixed,
/// so results are deterministic.
pub fn grid_infimize<F: FnMut(&[f64]) -> f64>(mut f: F, spec: &GridSpec) -> f64 {
    let dim = spec.bounds.len();
    if dim == 0 {
        return f(&[]);
    }
    let res = spec.resolution;
    let mut window = spec.bounds.clone();
    let mut best = f64::INFINITY;
    let mut best_at: Option<Vec<f64>> = None;
    let mut point = vec![0.0; dim];
    for _ in 0..=spec.refinement_rounds {
        let pitch: Vec<f64> = window.iter().map(|(lo, hi)| (hi - lo) / (res - 1) as f64).collect();
        let mut idx = vec![0usize; dim];
        loop {
            for k in 0..dim {
                point[k] = window[k].0 + pitch[k] * idx[k] as f64;
            }
            let v = f(&point);
            if v < best {
                best = v;
                best_at = Some(point.clone());
            }
            // odometer increment
            let mut k = 0;
            while k < dim {
                idx[k] += 1;
                if idx[k] < res {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == dim {
                break;
            }
        }
        let centre = match &best_at {
            Some(c) => c.clone(),
            None => return f64::INFINITY,
        };
        for k in 0..dim {
            let (blo, bhi) = spec.bounds[k];
            let (wlo, whi) = window[k];
            let c = centre[k];
            let on_inner_edge = (c - wlo < 0.5 * pitch[k] && wlo > blo) || (whi - c < 0.5 * pitch[k] && whi < bhi);
            let half = if on_inner_edge { 0.5 * (whi - wlo) } else { 2.0 * pitch[k] };
            let (mut lo, mut hi) = (c - half, c + half);
            if lo < blo {
                hi = (hi + (blo - lo)).min(bhi);
                lo = blo;
            }
            if hi > bhi {
                lo = (lo - (hi - bhi)).max(blo);
                hi = bhi;
            }
            window[k] = (lo, hi);
        }
    }
    best
}

/// Empirical mean and (unbiased) covariance of `samples` draws of `f(x)`.
pub fn mc_moments(f: &GaussMap, x: &[f64], samples: usize, seed: u64) -> Result<(Vec<f64>, Matrix), GaussError> {
    let n = f.outputs();
    let mut sampler = Sampler::new(f, seed)?;
    let mut draws = Vec::with_capacity(samples);
    let mut mean = vec![0.0; n];
    for _ in 0..samples {
        let y = sampler.draw(x)?;
        for (m, v) in mean.iter_mut().zip(&y) {
            *m += v;
        }
        draws.push(y);
    }
    for m in mean.iter_mut() {
        *m /= samples as f64;
    }
    let mut cov = Matrix::zeros(n, n);
    for y in &draws {
        for i in 0..n {
            for j in 0..n {
                cov[(i, j)] += (y[i] - mean[i]) * (y[j] - mean[j]);
            }
        }
    }
    let denom = samples.saturating_sub(1).max(1) as f64;
    Ok((mean, cov.scale(1.0 / denom)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_cost_minimum() {
        // ½(x² + y²) restricted to x + y = 2, parametrized by x
        let v = grid_infimize(|p| 0.5 * (p[0] * p[0] + (2.0 - p[0]).powi(2)), &GridSpec::cube(1, 10.0, 41, 3));
        assert!((v - 1.0).abs() < 1e-3);
    }

    #[test]
    fn all_infinite() {
        assert_eq!(grid_infimize(|_| f64::INFINITY, &GridSpec::cube(2, 1.0, 5, 2)), f64::INFINITY);
    }

    #[test]
    fn least_squares_minimum() {
        let v = grid_infimize(
            |p| 0.5 * ((1.0 - p[0]).powi(2) + (3.0 - p[0]).powi(2)),
            &GridSpec::cube(1, 10.0, 41, 3),
        );
        assert!((v - 1.0).abs() < 1e-4);
    }

    #[test]
    fn minimum_outside_first_window_edge() {
        // minimum at the box corner
        let v = grid_infimize(|p| (p[0] - 5.0).powi(2) + (p[1] + 5.0).powi(2), &GridSpec::cube(2, 5.0, 5, 3));
        assert_eq!(v, 0.0);
    }

    #[test]
    fn deterministic_moments() {
        let f = GaussMap::affine(Matrix::from_rows(&[[2.0]]), alloc::vec![1.0]).unwrap();
        let (m, c) = mc_moments(&f, &[3.0], 10_000, 1).unwrap();
        assert_eq!(m, alloc::vec![7.0]);
        assert_eq!(c[(0, 0)], 0.0);
    }

    #[test]
    fn variance_of_sum_of_normals() {
        let f = GaussMap::distribution(alloc::vec![0.0], Matrix::from_rows(&[[2.0]])).unwrap();
        let (_, c) = mc_moments(&f, &[], 100_000, 2024).unwrap();
        assert!((1.94..=2.06).contains(&c[(0, 0)]), "{}", c[(0, 0)]);
    }
}
