//! Ordinary least squares, both directly and as a diagram.

use alloc::vec::Vec;

use crate::diagram::{add_bus, conormal, matrix_diagram, Diagram};
use crate::linalg::{check_dim, dot, image, pseudoinverse, vec_sub, LinalgError, Matrix};
use crate::quadrel::{interpret, QuadRelError};
use crate::quadstate::QuadState;

/// Fit `A·x ≈ y` for a design matrix `A` (`n × m`) and observations `y`.
#[derive(Debug, Clone)]
pub struct LeastSquaresProblem {
    pub design: Matrix,
    pub observations: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct OlsSolution {
    /// Minimum-norm minimizer `A⁺·y`.
    pub estimate: Vec<f64>,
    /// `½‖y − A·x̂‖²`.
    pub residual_cost: f64,
    /// Whether `A` has full column rank (the minimizer is unique).
    pub injective: bool,
}

impl LeastSquaresProblem {
    pub fn new(design: Matrix, observations: Vec<f64>) -> Result<Self, LinalgError> {
        check_dim("observations", design.rows(), observations.len())?;
        Ok(LeastSquaresProblem {
            design,
            observations,
        })
    }

    pub fn regressors(&self) -> usize {
        self.design.cols()
    }

    pub fn samples(&self) -> usize {
        self.design.rows()
    }

    /// `½‖y − A·x‖²`.
    pub fn cost(&self, x: &[f64]) -> f64 {
        let r = vec_sub(&self.observations, &self.design.mul_vec(x));
        0.5 * dot(&r, &r)
    }
}

/// Effect `m + n → 0` on wires `(x, y)` denoting `½‖y − A·x‖²`.
pub fn build_ols_diagram(design: &Matrix) -> Diagram {
    let (n, m) = (design.rows(), design.cols());
    let negated = Diagram::seq(matrix_diagram(design), Diagram::repeat(&Diagram::scalar(-1.0), n))
        .expect("matrix has n outputs");
    Diagram::seq_all([
        Diagram::par(negated, Diagram::id(n)),
        add_bus(n),
        Diagram::repeat(&conormal(), n),
    ])
    .unwrap_or_else(|_| unreachable!("widths agree for a {}x{} design", n, m))
}

pub fn solve_ols(p: &LeastSquaresProblem) -> OlsSolution {
    let estimate = pseudoinverse(&p.design).mul_vec(&p.observations);
    let residual_cost = p.cost(&estimate);
    OlsSolution {
        injective: image(&p.design.transpose()).rank() == p.regressors(),
        estimate,
        residual_cost,
    }
}

/// The least-squares solution read off the normalized diagram: fix the
/// observation wires, then the score is the residual cost and the mean of
/// the remaining state (over `x`) is the minimum-norm estimate.
pub fn solve_ols_by_diagram(p: &LeastSquaresProblem) -> Result<(QuadState, f64), QuadRelError> {
    let (n, m) = (p.samples(), p.regressors());
    let state = interpret(&build_ols_diagram(&p.design))?.into_name();
    let fix_y = Matrix::from_fn(n, m + n, |i, j| if j == m + i { 1.0 } else { 0.0 });
    let fixed = state.condition_zero(&fix_y, &p.observations)?;
    let over_x = fixed.marginalize(&(0..m).collect::<Vec<_>>())?;
    let score = over_x.score();
    Ok((over_x, score))
}

/// The OLS cost with `x` infimized away: a state on `y` denoting
/// `½‖(I − A·A⁺)·y‖²`.
pub fn residual_state(design: &Matrix) -> Result<QuadState, QuadRelError> {
    let (n, m) = (design.rows(), design.cols());
    let state = interpret(&build_ols_diagram(design))?.into_name();
    Ok(state.marginalize(&(m..m + n).collect::<Vec<_>>())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn cost_at_a_point() {
        let d = build_ols_diagram(&Matrix::from_rows(&[[1.0]]));
        let f = interpret(&d).unwrap();
        assert!((f.eval(&[1.0, 3.0], &[]).unwrap() - 2.0).abs() < 1e-12);
        let zero = interpret(&build_ols_diagram(&Matrix::zeros(2, 1))).unwrap();
        assert!((zero.eval(&[5.0, 1.0, 2.0], &[]).unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn two_equal_rows() {
        let p = LeastSquaresProblem::new(Matrix::from_rows(&[[1.0], [1.0]]), vec![1.0, 3.0]).unwrap();
        let s = solve_ols(&p);
        assert!((s.estimate[0] - 2.0).abs() < 1e-12);
        assert!((s.residual_cost - 1.0).abs() < 1e-12);
        assert!(s.injective);
        let (post, score) = solve_ols_by_diagram(&p).unwrap();
        assert!((score - 1.0).abs() < 1e-12);
        assert!((post.mean()[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn square_and_consistent_systems() {
        let a = Matrix::from_rows(&[[2.0, 1.0], [1.0, 3.0]]);
        let p = LeastSquaresProblem::new(a, vec![3.0, 5.0]).unwrap();
        let s = solve_ols(&p);
        assert!((s.estimate[0] - 0.8).abs() < 1e-12 && (s.estimate[1] - 1.4).abs() < 1e-12);
        assert!(s.residual_cost < 1e-20);
        let rank_one = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0], [0.0, 0.0]]);
        let q = LeastSquaresProblem::new(rank_one, vec![1.0, 2.0, 0.0]).unwrap();
        let t = solve_ols(&q);
        assert!(!t.injective);
        assert!(t.residual_cost < 1e-20);
    }

    #[test]
    fn residual_state_matches_projection() {
        let a = Matrix::from_rows(&[[1.0], [1.0]]);
        let r = residual_state(&a).unwrap();
        // (I − AA⁺)y for y = (1, 3) is (−1, 1)
        assert!((r.eval(&[1.0, 3.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!(r.eval(&[2.0, 2.0]).unwrap().abs() < 1e-12);
    }
}
