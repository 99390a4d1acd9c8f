//! Canonical states `0 → n` of quadratic relations.
//!
//! A state is a nonnegative partial quadratic function on `ℝⁿ`, kept in the
//! normal form `(D, μ, Σ, score)`:
//!
//! ```text
//! f(x) = score + ½·rᵀ Σ⁺ r + [r ∈ im Σ],    r = P_{D⊥} x − μ
//! ```
//!
//! where `D` is the fibre (directions along which `f` is constant), `μ ∈ D⊥`
//! is the minimizer, `Σ` is a covariance supported on `D⊥`, and `[·]` is 0
//! when the condition holds and `+∞` otherwise. `score` is the infimum of
//! `f`; an infeasible state (`f ≡ +∞`) has `score = +∞` and every other
//! field zeroed.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{
    self, approx_eq, check_dim, dot, norm, pivoted_qr, pseudoinverse, vec_add,
    vec_approx_eq, vec_scale, vec_sub, LinalgError, Matrix, Subspace, TOL,
};

#[derive(Debug, Clone)]
pub struct QuadState {
    n: usize,
    fibre: Subspace,
    mean: Vec<f64>,
    cov: Matrix,
    score: f64,
}

impl QuadState {
    /// Builds a state and brings it into canonical form.
    ///
    /// `mean` and `cov` are projected onto `fibre⊥`; `cov` is symmetrized.
    /// A score of `+∞` yields the infeasible state.
    pub fn new(
        fibre: Subspace,
        mean: Vec<f64>,
        cov: Matrix,
        score: f64,
    ) -> Result<Self, LinalgError> {
        let n = fibre.ambient_dim();
        check_dim("QuadState mean", n, mean.len())?;
        check_dim("QuadState covariance rows", n, cov.rows())?;
        check_dim("QuadState covariance cols", n, cov.cols())?;
        if mean.iter().any(|x| !x.is_finite()) || !cov.is_finite() || score.is_nan() {
            return Err(LinalgError::NonFinite);
        }
        Ok(QuadState {
            n,
            fibre,
            mean,
            cov,
            score: score.max(0.0),
        }
        .canonicalize())
    }

    /// Gaussian `N(μ, Σ)`: no fibre, score 0.
    pub fn gaussian(mean: Vec<f64>, cov: Matrix) -> Result<Self, LinalgError> {
        let n = mean.len();
        QuadState::new(Subspace::zero(n), mean, cov, 0.0)
    }

    /// The indicator `[x = μ]`.
    pub fn point(mean: Vec<f64>) -> Self {
        let n = mean.len();
        QuadState {
            n,
            fibre: Subspace::zero(n),
            mean,
            cov: Matrix::zeros(n, n),
            score: 0.0,
        }
    }

    /// The constant-zero function on `ℝⁿ`.
    pub fn full(n: usize) -> Self {
        QuadState {
            n,
            fibre: Subspace::full(n),
            mean: vec![0.0; n],
            cov: Matrix::zeros(n, n),
            score: 0.0,
        }
    }

    /// The unique state on zero wires with score 0.
    pub fn empty() -> Self {
        QuadState::scalar(0.0)
    }

    /// A state on zero wires carrying only a score.
    pub fn scalar(score: f64) -> Self {
        if score == f64::INFINITY {
            return QuadState::infeasible(0);
        }
        QuadState {
            n: 0,
            fibre: Subspace::zero(0),
            mean: Vec::new(),
            cov: Matrix::zeros(0, 0),
            score: score.max(0.0),
        }
    }

    /// The constant `+∞` function on `ℝⁿ`.
    pub fn infeasible(n: usize) -> Self {
        QuadState {
            n,
            fibre: Subspace::zero(n),
            mean: vec![0.0; n],
            cov: Matrix::zeros(n, n),
            score: f64::INFINITY,
        }
    }

    /// The indicator `[B·x = v]` of an affine subspace.
    pub fn affine(constraints: &Matrix, targets: &[f64]) -> Result<Self, LinalgError> {
        QuadState::full(constraints.cols()).condition_zero(constraints, targets)
    }

    /// `½(x − c)ᵀ Q (x − c) + s` for a symmetric positive semidefinite `Q`.
    pub fn from_precision(precision: &Matrix, centre: &[f64], score: f64) -> Result<Self, LinalgError> {
        let n = centre.len();
        check_dim("from_precision rows", n, precision.rows())?;
        check_dim("from_precision cols", n, precision.cols())?;
        let q = precision.symmetrize();
        let fibre = linalg::kernel(&q);
        QuadState::new(fibre, centre.to_vec(), pseudoinverse(&q).symmetrize(), score)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn fibre(&self) -> &Subspace {
        &self.fibre
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &Matrix {
        &self.cov
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    pub fn is_infeasible(&self) -> bool {
        self.score == f64::INFINITY
    }

    /// The same state with its score reset to zero (infeasible stays infeasible).
    pub fn without_score(&self) -> QuadState {
        if self.is_infeasible() {
            return self.clone();
        }
        QuadState {
            score: 0.0,
            ..self.clone()
        }
    }

    /// Re-projects `μ` and `Σ` onto `D⊥` and symmetrizes `Σ`; zeroes the
    /// other fields of an infeasible state. Idempotent.
    pub fn canonicalize(self) -> QuadState {
        if self.is_infeasible() {
            return QuadState::infeasible(self.n);
        }
        if self.fibre.is_zero() {
            return QuadState {
                cov: self.cov.symmetrize(),
                ..self
            };
        }
        let p = self.fibre.complement_projector();
        let mean = p.mul_vec(&self.mean);
        let cov = (&(&p * &self.cov) * &p).symmetrize();
        QuadState {
            n: self.n,
            fibre: self.fibre,
            mean,
            cov,
            score: self.score,
        }
    }

    /// Precomputes the projectors needed for repeated evaluation.
    pub fn evaluator(&self) -> StateEvaluator {
        let cov_pinv = pseudoinverse(&self.cov);
        let support = &self.cov * &cov_pinv;
        StateEvaluator {
            n: self.n,
            fibre_reject: self.fibre.complement_projector(),
            mean: self.mean.clone(),
            cov_pinv,
            support,
            score: self.score,
        }
    }

    /// Evaluates the quadratic function at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<f64, LinalgError> {
        self.evaluator().eval(x)
    }

    /// `s ⊗ t` on `ℝ^{n+k}`: `(x, y) ↦ s(x) + t(y)`.
    pub fn tensor(&self, other: &QuadState) -> QuadState {
        let n = self.n + other.n;
        if self.is_infeasible() || other.is_infeasible() {
            return QuadState::infeasible(n);
        }
        let mut mean = self.mean.clone();
        mean.extend_from_slice(&other.mean);
        QuadState {
            n,
            fibre: self.fibre.direct_sum(&other.fibre),
            mean,
            cov: self.cov.block_diag(&other.cov),
            score: self.score + other.score,
        }
    }

    /// Image under `x ↦ T·x + b`: `y ↦ inf { f(x) : T·x + b = y }`.
    pub fn pushforward(&self, t: &Matrix, b: &[f64]) -> Result<QuadState, LinalgError> {
        check_dim("pushforward map cols", self.n, t.cols())?;
        check_dim("pushforward offset", t.rows(), b.len())?;
        let k = t.rows();
        if self.is_infeasible() {
            return Ok(QuadState::infeasible(k));
        }
        let fibre = linalg::subspace_image(t, &self.fibre)?;
        let p = fibre.complement_projector();
        let mean = p.mul_vec(&vec_add(&t.mul_vec(&self.mean), b));
        let tst = &(t * &self.cov) * &t.transpose();
        let mut cov = (&(&p * &tst) * &p).symmetrize();
        if cov.max_diag() <= TOL * tst.max_diag() {
            cov = Matrix::zeros(k, k);
        }
        Ok(QuadState {
            n: k,
            fibre,
            mean,
            cov,
            score: self.score,
        })
    }

    /// Reorders wires: wire `i` of the result is wire `perm[i]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<QuadState, LinalgError> {
        check_dim("permute", self.n, perm.len())?;
        if self.is_infeasible() {
            return Ok(self.clone());
        }
        Ok(QuadState {
            n: self.n,
            fibre: self.fibre.permute_coords(perm),
            mean: perm.iter().map(|&p| self.mean[p]).collect(),
            cov: self.cov.select_rows(perm).select_cols(perm),
            score: self.score,
        })
    }

    /// Infimizes away every wire not listed in `keep` (kept in the given order).
    pub fn marginalize(&self, keep: &[usize]) -> Result<QuadState, LinalgError> {
        let sel = Matrix::from_fn(keep.len(), self.n, |i, j| if keep[i] == j { 1.0 } else { 0.0 });
        self.pushforward(&sel, &vec![0.0; keep.len()])
    }

    /// Adds the constraint `[B·x = v]`: `x ↦ f(x) + [B·x = v]`.
    ///
    /// The constraint block is first orthonormalized (redundant rows become
    /// consistency checks), then each row `a·x = c` is absorbed in turn:
    /// by the fibre if `a` meets `D`, by Gaussian conditioning if `a` has
    /// positive variance (raising the score), and otherwise by checking
    /// that `a·μ = c`.
    pub fn condition_zero(&self, constraints: &Matrix, targets: &[f64]) -> Result<QuadState, LinalgError> {
        check_dim("condition_zero cols", self.n, constraints.cols())?;
        check_dim("condition_zero targets", constraints.rows(), targets.len())?;
        if self.is_infeasible() {
            return Ok(self.clone());
        }
        let (rows, rhs) = match orthonormal_constraints(constraints, targets) {
            Some(c) => c,
            None => return Ok(QuadState::infeasible(self.n)),
        };
        let mut state = self.clone();
        for (a, c) in rows.iter().zip(&rhs) {
            state = state.condition_row(a, *c);
            if state.is_infeasible() {
                break;
            }
        }
        let fibre = state.fibre.recanonicalized();
        state = QuadState { fibre, ..state }.canonicalize();
        Ok(state)
    }

    /// Absorbs one unit-norm constraint row `a·x = c`.
    fn condition_row(self, a: &[f64], c: f64) -> QuadState {
        let n = self.n;
        let a_fibre = self.fibre.project(a).expect("row width checked");
        let fibre_norm = norm(&a_fibre);
        if fibre_norm > TOL {
            // the fibre absorbs the constraint
            let nn = fibre_norm * fibre_norm;
            let e = c - dot(a, &self.mean);
            let mean = vec_add(&self.mean, &vec_scale(&a_fibre, e / nn));
            // (I − f·aᵀ/nn)·Σ·(I − a·fᵀ/nn) as a rank-two update
            let sa = self.cov.mul_vec(a);
            let asa = dot(a, &sa);
            let cov = Matrix::from_fn(n, n, |i, j| {
                self.cov[(i, j)] - (a_fibre[i] * sa[j] + sa[i] * a_fibre[j]) / nn
                    + a_fibre[i] * a_fibre[j] * asa / (nn * nn)
            });
            let u = vec_scale(&a_fibre, 1.0 / fibre_norm);
            let fibre = self.fibre.drop_direction_raw(&u);
            return QuadState {
                n,
                fibre,
                mean,
                cov,
                score: self.score,
            };
        }
        let a = vec_sub(a, &a_fibre);
        let sa = self.cov.mul_vec(&a);
        let variance = dot(&a, &sa);
        let e = c - dot(&a, &self.mean);
        if variance > TOL * self.cov.max_diag() && variance > 0.0 {
            let mean = vec_add(&self.mean, &vec_scale(&sa, e / variance));
            let mut cov = Matrix::from_fn(n, n, |i, j| self.cov[(i, j)] - sa[i] * sa[j] / variance).symmetrize();
            if cov.max_diag() <= TOL * self.cov.max_diag() {
                cov = Matrix::zeros(n, n);
            }
            return QuadState {
                n,
                fibre: self.fibre,
                mean,
                cov,
                score: self.score + 0.5 * e * e / variance,
            };
        }
        let scale = 1f64.max(c.abs()).max(norm(&self.mean));
        if e.abs() <= TOL * scale {
            self
        } else {
            QuadState::infeasible(n)
        }
    }
}

/// Orthonormalizes the constraint block `B·x = v`.
///
/// Returns unit rows spanning the row space of `B` with consistently
/// transformed targets, or `None` if a redundant row is inconsistent.
fn orthonormal_constraints(b: &Matrix, v: &[f64]) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
    let n = b.cols();
    // unit-norm rows; zero rows must have zero target
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (i, &target) in v.iter().enumerate() {
        let r = b.row_slice(i);
        let rn = norm(r);
        if rn <= TOL * (1.0 + b.max_abs()) {
            if target.abs() > TOL {
                return None;
            }
            continue;
        }
        rows.push(vec_scale(r, 1.0 / rn));
        rhs.push(target / rn);
    }
    if rows.is_empty() {
        return Some((Vec::new(), Vec::new()));
    }
    // Bᵀ·Π = Q·R: the first `rank` columns of Q are orthonormal rows, and
    // each original row equals Rᵀ (restricted) times them.
    let bt = Matrix::from_fn(n, rows.len(), |i, j| rows[j][i]);
    let pq = pivoted_qr(&bt);
    let rank = pq.rank;
    let mut w = vec![0.0; rank];
    for i in 0..rank {
        let acc: f64 = rhs[pq.perm[i]] - (0..i).map(|k| pq.r[(k, i)] * w[k]).sum::<f64>();
        w[i] = acc / pq.r[(i, i)];
    }
    let vmax = rhs.iter().fold(1f64, |m, x| m.max(x.abs()));
    for j in rank..rows.len() {
        let predicted: f64 = (0..rank).map(|k| pq.r[(k, j)] * w[k]).sum();
        if (predicted - rhs[pq.perm[j]]).abs() > TOL * vmax * (rows.len() as f64) {
            return None;
        }
    }
    let q_rows = (0..rank).map(|k| pq.q.col_vec(k)).collect();
    Some((q_rows, w))
}

/// Cached data for evaluating one state at many points.
#[derive(Debug, Clone)]
pub struct StateEvaluator {
    n: usize,
    fibre_reject: Matrix,
    mean: Vec<f64>,
    cov_pinv: Matrix,
    support: Matrix,
    score: f64,
}

impl StateEvaluator {
    pub fn eval(&self, x: &[f64]) -> Result<f64, LinalgError> {
        check_dim("eval point", self.n, x.len())?;
        if self.score == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        let r = vec_sub(&self.fibre_reject.mul_vec(x), &self.mean);
        let off = vec_sub(&r, &self.support.mul_vec(&r));
        let rn = norm(&r);
        if norm(&off) >= TOL * (1.0 + rn) && norm(&off) > 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(self.score + 0.5 * dot(&r, &self.cov_pinv.mul_vec(&r)).max(0.0))
    }
}

/// Decides equality of two states at relative tolerance `tol`.
///
/// Fibres are compared as projectors, then mean, covariance and score
/// entrywise with `|a − b| ≤ tol·max(1, |a|, |b|)`.
pub fn states_equal(s: &QuadState, t: &QuadState, tol: f64) -> bool {
    if s.n != t.n || s.is_infeasible() != t.is_infeasible() {
        return false;
    }
    if s.is_infeasible() {
        return true;
    }
    s.fibre.rank() == t.fibre.rank()
        && s.fibre.projector().approx_eq(&t.fibre.projector(), tol)
        && vec_approx_eq(&s.mean, &t.mean, tol)
        && s.cov.approx_eq(&t.cov, tol)
        && approx_eq(s.score, t.score, tol)
}

impl QuadState {
    pub fn approx_eq(&self, other: &QuadState, tol: f64) -> bool {
        states_equal(self, other, tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sigma_joint() -> Matrix {
        Matrix::from_rows(&[[100.0, 100.0], [100.0, 125.0]])
    }

    #[test]
    fn eval_free_gaussian_axis() {
        let s = QuadState::new(
            Subspace::span(&Matrix::column(&[1.0, 0.0])),
            vec![0.0, 0.0],
            Matrix::diagonal(&[0.0, 1.0]),
            0.0,
        )
        .unwrap();
        assert_eq!(s.eval(&[5.0, 2.0]).unwrap(), 2.0);
    }

    #[test]
    fn eval_sum_of_two_normals() {
        let s = QuadState::gaussian(vec![0.0], Matrix::from_rows(&[[2.0]])).unwrap();
        assert!((s.eval(&[2.0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn violated_point_constraint_is_infinite() {
        assert_eq!(QuadState::point(vec![1.0]).eval(&[0.0]).unwrap(), f64::INFINITY);
    }

    #[test]
    fn tensor_with_empty_is_identity() {
        let s = QuadState::gaussian(vec![1.0, 2.0], sigma_joint()).unwrap();
        assert!(states_equal(&s.tensor(&QuadState::empty()), &s, 1e-12));
        let pts = QuadState::point(vec![1.0]).tensor(&QuadState::point(vec![2.0]));
        assert!(states_equal(&pts, &QuadState::point(vec![1.0, 2.0]), 0.0));
    }

    #[test]
    fn pushforward_adds_normals() {
        let s = QuadState::gaussian(vec![0.0, 0.0], Matrix::identity(2)).unwrap();
        let t = s.pushforward(&Matrix::row(&[1.0, 1.0]), &[0.0]).unwrap();
        let expect = QuadState::gaussian(vec![0.0], Matrix::from_rows(&[[2.0]])).unwrap();
        assert!(states_equal(&t, &expect, 1e-12));
    }

    #[test]
    fn conditioning_noisy_measurement() {
        let joint = QuadState::gaussian(vec![0.0, 0.0], sigma_joint()).unwrap();
        let cond = joint.condition_zero(&Matrix::row(&[0.0, 1.0]), &[40.0]).unwrap();
        let post = cond.marginalize(&[0]).unwrap();
        assert!((post.mean()[0] - 32.0).abs() < 1e-9);
        assert!((post.covariance()[(0, 0)] - 20.0).abs() < 1e-9);
        assert!((post.score() - 6.4).abs() < 1e-9);
    }

    #[test]
    fn fibre_absorbs_constraint() {
        let s = QuadState::full(1).condition_zero(&Matrix::row(&[1.0]), &[7.0]).unwrap();
        assert!(states_equal(&s, &QuadState::point(vec![7.0]), 1e-12));
        assert_eq!(s.score(), 0.0);
    }

    #[test]
    fn contradictory_point_is_infeasible() {
        let s = QuadState::point(vec![1.0]).condition_zero(&Matrix::row(&[1.0]), &[0.0]).unwrap();
        assert!(s.is_infeasible());
    }

    #[test]
    fn infeasible_states_ignore_junk() {
        let a = QuadState::infeasible(2);
        let b = QuadState::new(Subspace::zero(2), vec![3.0, 1.0], Matrix::identity(2), f64::INFINITY).unwrap();
        assert!(states_equal(&a, &b, 1e-9));
    }

    #[test]
    fn score_difference_detected() {
        let a = QuadState::scalar(1.0);
        let b = QuadState::scalar(1.001);
        assert!(!states_equal(&a, &b, 1e-6));
    }

    #[test]
    fn redundant_consistent_rows() {
        let b = Matrix::from_rows(&[[1.0, 1.0], [2.0, 2.0]]);
        let s = QuadState::full(2).condition_zero(&b, &[1.0, 2.0]).unwrap();
        assert_eq!(s.fibre().rank(), 1);
        let bad = QuadState::full(2).condition_zero(&b, &[1.0, 3.0]).unwrap();
        assert!(bad.is_infeasible());
    }

    #[test]
    fn pythagorean_scores() {
        let two = QuadState::gaussian(vec![0.0, 0.0], Matrix::identity(2)).unwrap();
        let c2 = two.condition_zero(&Matrix::identity(2), &[3.0, 4.0]).unwrap();
        let one = QuadState::gaussian(vec![0.0], Matrix::identity(1)).unwrap();
        let c1 = one.condition_zero(&Matrix::identity(1), &[5.0]).unwrap();
        assert!(approx_eq(c2.score(), c1.score(), 1e-12));
    }
}
