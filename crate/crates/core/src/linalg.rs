//! Dense real linear algebra used throughout the engine.
//!
//! Everything here is small and dense: matrices are row-major `f64` buffers,
//! orthogonal factorizations use Givens rotations, and subspaces carry an
//! orthonormal basis in a canonical column order so that equal subspaces
//! produce (numerically) identical bases.
//!
//! Rank decisions use a single relative tolerance [`TOL`], scaled by the
//! largest column norm of the matrix being factored.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

/// Relative tolerance for every rank and consistency decision in the engine.
pub const TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("matrix is not positive semidefinite (pivot {pivot:e})")]
    NotPsd { pivot: f64 },
    #[error("matrix has a non-finite entry")]
    NonFinite,
}

pub(crate) fn check_dim(
    context: &'static str,
    expected: usize,
    found: usize,
) -> Result<(), LinalgError> {
    if expected == found {
        Ok(())
    } else {
        Err(LinalgError::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}

/// Dense row-major matrix of finite `f64` entries.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds a matrix from a row-major buffer.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        check_dim("Matrix::from_vec", rows * cols, data.len())?;
        if data.iter().any(|x| !x.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from rows; every row must have the same length.
    ///
    /// Panics on ragged input, which is a programming error at the call site.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged rows in Matrix::from_rows");
            data.extend_from_slice(r);
        }
        Matrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    /// `n × 1` matrix holding `v`.
    pub fn column(v: &[f64]) -> Self {
        Matrix {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    /// `1 × n` matrix holding `v`.
    pub fn row(v: &[f64]) -> Self {
        Matrix {
            rows: 1,
            cols: v.len(),
            data: v.to_vec(),
        }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Matrix::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row_slice(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col_vec(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[f64]) {
        assert_eq!(v.len(), self.rows);
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "matrix-vector shape mismatch");
        (0..self.rows).map(|i| dot(self.row_slice(i), v)).collect()
    }

    pub fn scale(&self, k: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * k).collect(),
        }
    }

    /// Columns `range` as a new matrix.
    pub fn columns(&self, start: usize, end: usize) -> Matrix {
        Matrix::from_fn(self.rows, end - start, |i, j| self[(i, start + j)])
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        Matrix::from_fn(idx.len(), self.cols, |i, j| self[(idx[i], j)])
    }

    pub fn select_cols(&self, idx: &[usize]) -> Matrix {
        Matrix::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])])
    }

    /// Submatrix with rows `r0..r1` and columns `c0..c1`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Matrix {
        Matrix::from_fn(r1 - r0, c1 - c0, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn hstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows, "hstack row mismatch");
        Matrix::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self[(i, j)]
            } else {
                other[(i, j - self.cols)]
            }
        })
    }

    pub fn vstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols, "vstack column mismatch");
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Matrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn block_diag(&self, other: &Matrix) -> Matrix {
        let mut m = Matrix::zeros(self.rows + other.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] = self[(i, j)];
            }
        }
        for i in 0..other.rows {
            for j in 0..other.cols {
                m[(self.rows + i, self.cols + j)] = other[(i, j)];
            }
        }
        m
    }

    /// `(M + Mᵀ) / 2`; panics if not square.
    pub fn symmetrize(&self) -> Matrix {
        assert_eq!(self.rows, self.cols, "symmetrize needs a square matrix");
        Matrix::from_fn(self.rows, self.cols, |i, j| {
            0.5 * (self[(i, j)] + self[(j, i)])
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|x| x * x).sum())
    }

    /// Largest Euclidean norm among the columns.
    pub fn max_col_norm(&self) -> f64 {
        (0..self.cols)
            .map(|j| libm::sqrt((0..self.rows).map(|i| self[(i, j)] * self[(i, j)]).sum()))
            .fold(0.0, f64::max)
    }

    pub fn max_diag(&self) -> f64 {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Entrywise comparison: `|a - b| <= tol * max(1, |a|, |b|)`.
    pub fn approx_eq(&self, other: &Matrix, tol: f64) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| approx_eq(*a, *b, tol))
    }

    pub fn is_lower_triangular(&self) -> bool {
        (0..self.rows).all(|i| ((i + 1)..self.cols).all(|j| self[(i, j)] == 0.0))
    }

    pub fn is_upper_triangular(&self, tol: f64) -> bool {
        (0..self.rows).all(|i| (0..i.min(self.cols)).all(|j| self[(i, j)].abs() <= tol))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols, "matrix sum shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols, "matrix difference shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        self.scale(-1.0)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ";")?;
            }
            for j in 0..self.cols {
                write!(f, " {:?}", self[(i, j)])?;
            }
        }
        write!(f, " ]")
    }
}

// ---------------------------------------------------------------------------
// vector helpers

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

pub fn vec_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn vec_sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn vec_scale(a: &[f64], k: f64) -> Vec<f64> {
    a.iter().map(|x| x * k).collect()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `|a - b| <= tol * max(1, |a|, |b|)`; infinities compare equal to themselves.
pub fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
    if a == b {
        return true;
    }
    if !a.is_finite() || !b.is_finite() {
        return false;
    }
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

pub fn vec_approx_eq(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| approx_eq(*x, *y, tol))
}

// ---------------------------------------------------------------------------
// Givens QR

/// `A = Q·R` with `Q` orthogonal (`m × m`) and `R` upper triangular (`m × n`).
#[derive(Debug, Clone)]
pub struct Qr {
    pub q: Matrix,
    pub r: Matrix,
}

/// QR with column pivoting: `A·Π = Q·R`, where column `k` of `A·Π` is
/// column `perm[k]` of `A`. The first `rank` columns of `Q` span `im(A)`.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    pub q: Matrix,
    pub r: Matrix,
    pub perm: Vec<usize>,
    pub rank: usize,
}

/// Rotation `(c, s)` with `[c s; -s c]·[a; b] = [r; 0]`.
#[inline]
fn givens(a: f64, b: f64) -> (f64, f64) {
    let r = libm::hypot(a, b);
    (a / r, b / r)
}

/// Zeroes `r[i][col]` against pivot row `j`, accumulating the rotation into `q`.
fn rotate_out(q: &mut Matrix, r: &mut Matrix, j: usize, i: usize, col: usize) {
    let b = r[(i, col)];
    if b == 0.0 {
        return;
    }
    let (c, s) = givens(r[(j, col)], b);
    for k in 0..r.cols {
        let (x, y) = (r[(j, k)], r[(i, k)]);
        r[(j, k)] = c * x + s * y;
        r[(i, k)] = -s * x + c * y;
    }
    r[(i, col)] = 0.0;
    for k in 0..q.rows {
        let (x, y) = (q[(k, j)], q[(k, i)]);
        q[(k, j)] = c * x + s * y;
        q[(k, i)] = -s * x + c * y;
    }
}

/// QR decomposition by Givens rotations; works for any shape.
pub fn givens_qr(a: &Matrix) -> Qr {
    let m = a.rows;
    let mut r = a.clone();
    let mut q = Matrix::identity(m);
    for j in 0..a.cols.min(m) {
        for i in (j + 1)..m {
            rotate_out(&mut q, &mut r, j, i, j);
        }
    }
    Qr { q, r }
}

/// Rank-revealing QR: at each step the remaining column of largest norm is
/// pivoted in (ties go to the lowest index). Stops once every remaining
/// column norm is below `TOL` times the largest column norm of `a`.
pub fn pivoted_qr(a: &Matrix) -> PivotedQr {
    pivoted_qr_scaled(a, 0.0)
}

/// [`pivoted_qr`] with rank decided against `max(scale, largest column norm)`,
/// for matrices whose columns may all be rounding noise.
pub fn pivoted_qr_scaled(a: &Matrix, scale: f64) -> PivotedQr {
    let (m, n) = (a.rows, a.cols);
    let mut r = a.clone();
    let mut q = Matrix::identity(m);
    let mut perm: Vec<usize> = (0..n).collect();
    let scale = a.max_col_norm().max(scale);
    let thresh = TOL * scale;
    let mut rank = 0;
    for j in 0..m.min(n) {
        let mut best = j;
        let mut best_norm = -1.0;
        for k in j..n {
            let nk = libm::sqrt((j..m).map(|i| r[(i, k)] * r[(i, k)]).sum());
            if nk > best_norm + thresh {
                best = k;
                best_norm = nk;
            }
        }
        if best_norm <= thresh {
            break;
        }
        if best != j {
            for i in 0..m {
                let t = r[(i, j)];
                r[(i, j)] = r[(i, best)];
                r[(i, best)] = t;
            }
            perm.swap(j, best);
        }
        for i in (j + 1)..m {
            rotate_out(&mut q, &mut r, j, i, j);
        }
        rank += 1;
    }
    PivotedQr { q, r, perm, rank }
}

// ---------------------------------------------------------------------------
// subspaces

/// Linear subspace of `ℝⁿ` with an orthonormal basis in canonical order.
///
/// The basis is derived from the orthogonal projector alone (pivoted QR of
/// the projector, then sign-fixed), so two representations of the same
/// subspace agree up to rounding.
#[derive(Clone, PartialEq)]
pub struct Subspace {
    ambient: usize,
    basis: Matrix,
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Subspace(dim {} in R^{}, basis {:?})", self.rank(), self.ambient, self.basis)
    }
}

impl Subspace {
    pub fn zero(n: usize) -> Self {
        Subspace {
            ambient: n,
            basis: Matrix::zeros(n, 0),
        }
    }

    pub fn full(n: usize) -> Self {
        Subspace {
            ambient: n,
            basis: Matrix::identity(n),
        }
    }

    /// Canonical subspace spanned by the columns of an orthonormal `q`.
    pub fn from_orthonormal(q: &Matrix) -> Self {
        let (n, r) = (q.rows, q.cols);
        if r == 0 {
            return Subspace::zero(n);
        }
        if r >= n {
            return Subspace::full(n);
        }
        let p = q * &q.transpose();
        let pq = pivoted_qr(&p);
        let mut basis = pq.q.columns(0, r);
        fix_signs(&mut basis);
        Subspace { ambient: n, basis }
    }

    /// The span of the columns of `a`.
    pub fn span(a: &Matrix) -> Self {
        image(a)
    }

    #[inline]
    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.basis.cols
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn is_zero(&self) -> bool {
        self.rank() == 0
    }

    pub fn is_full(&self) -> bool {
        self.rank() == self.ambient
    }

    /// Orthogonal projector `B·Bᵀ`.
    pub fn projector(&self) -> Matrix {
        &self.basis * &self.basis.transpose()
    }

    /// Projector onto the orthogonal complement, `I - B·Bᵀ`.
    pub fn complement_projector(&self) -> Matrix {
        &Matrix::identity(self.ambient) - &self.projector()
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        check_dim("Subspace::project", self.ambient, x.len())?;
        let coords = self.basis.transpose().mul_vec(x);
        Ok(self.basis.mul_vec(&coords))
    }

    /// `x` minus its projection onto the subspace.
    pub fn reject(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let p = self.project(x)?;
        Ok(vec_sub(x, &p))
    }

    pub fn orth_complement(&self) -> Subspace {
        let (n, r) = (self.ambient, self.rank());
        if r == 0 {
            return Subspace::full(n);
        }
        if r == n {
            return Subspace::zero(n);
        }
        let qr = givens_qr(&self.basis);
        Subspace::from_orthonormal(&qr.q.columns(r, n))
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self.reject(x) {
            Ok(r) => norm(&r) <= tol * (1.0 + norm(x)),
            Err(_) => false,
        }
    }

    /// `S + T`.
    pub fn sum(&self, other: &Subspace) -> Result<Subspace, LinalgError> {
        check_dim("Subspace::sum", self.ambient, other.ambient)?;
        Ok(image(&self.basis.hstack(&other.basis)))
    }

    /// `S ∩ T`, computed as `(S⊥ + T⊥)⊥`.
    pub fn intersection(&self, other: &Subspace) -> Result<Subspace, LinalgError> {
        Ok(self
            .orth_complement()
            .sum(&other.orth_complement())?
            .orth_complement())
    }

    /// `{ d ∈ S : d ⟂ u }` for a unit vector `u`; exact when `u ∈ S`.
    pub fn drop_direction(&self, u: &[f64]) -> Subspace {
        self.drop_direction_raw(u).recanonicalized()
    }

    /// [`Subspace::drop_direction`] without restoring the canonical basis;
    /// for loops that canonicalize once at the end.
    pub(crate) fn drop_direction_raw(&self, u: &[f64]) -> Subspace {
        let r = self.rank();
        if r == 0 {
            return self.clone();
        }
        let coords = self.basis.transpose().mul_vec(u);
        let qr = givens_qr(&Matrix::column(&coords));
        Subspace {
            ambient: self.ambient,
            basis: &self.basis * &qr.q.columns(1, r),
        }
    }

    /// `S ⊕ T` inside `ℝ^{n+m}`.
    pub fn direct_sum(&self, other: &Subspace) -> Subspace {
        Subspace {
            ambient: self.ambient + other.ambient,
            basis: self.basis.block_diag(&other.basis),
        }
        .recanonicalized()
    }

    /// Reorders coordinates: coordinate `i` of the result is coordinate
    /// `perm[i]` of the input.
    pub fn permute_coords(&self, perm: &[usize]) -> Subspace {
        Subspace {
            ambient: self.ambient,
            basis: self.basis.select_rows(perm),
        }
        .recanonicalized()
    }

    pub(crate) fn recanonicalized(self) -> Subspace {
        Subspace::from_orthonormal(&self.basis)
    }

    /// Equality of subspaces, decided on projectors.
    pub fn approx_eq(&self, other: &Subspace, tol: f64) -> bool {
        self.ambient == other.ambient
            && self.rank() == other.rank()
            && self.projector().approx_eq(&other.projector(), tol)
    }
}

/// Makes the first entry of largest magnitude in each column positive.
fn fix_signs(b: &mut Matrix) {
    for j in 0..b.cols {
        let col = b.col_vec(j);
        let mx = max_abs(&col);
        if let Some(&lead) = col.iter().find(|x| x.abs() >= mx * (1.0 - TOL)) {
            if lead < 0.0 {
                for i in 0..b.rows {
                    b[(i, j)] = -b[(i, j)];
                }
            }
        }
    }
}

/// Column space of `a`.
pub fn image(a: &Matrix) -> Subspace {
    image_scaled(a, 0.0)
}

/// Column space of `a`, ignoring columns below `TOL · scale`.
pub fn image_scaled(a: &Matrix, scale: f64) -> Subspace {
    if a.cols == 0 || a.rows == 0 {
        return Subspace::zero(a.rows);
    }
    let pq = pivoted_qr_scaled(a, scale);
    Subspace::from_orthonormal(&pq.q.columns(0, pq.rank))
}

/// Null space of `a`, a subspace of `ℝ^{cols}`.
pub fn kernel(a: &Matrix) -> Subspace {
    image(&a.transpose()).orth_complement()
}

/// `im(T·basis(S))`.
pub fn subspace_image(t: &Matrix, s: &Subspace) -> Result<Subspace, LinalgError> {
    check_dim("subspace_image", t.cols, s.ambient)?;
    // the basis is orthonormal, so the image is measured against |T|
    Ok(image_scaled(&(t * &s.basis), t.max_col_norm()))
}

pub fn project(s: &Subspace, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
    s.project(x)
}

pub fn orth_complement(s: &Subspace) -> Subspace {
    s.orth_complement()
}

// ---------------------------------------------------------------------------
// generalized inverses and factorizations

/// Moore–Penrose pseudoinverse via a complete orthogonal decomposition.
///
/// `A·Π = Q₁·R₁` (pivoted QR, rank r), then `R₁ᵀ = Z₁·T` (QR), so that
/// `A = Q₁·Tᵀ·Z₁ᵀ·Πᵀ` and `A⁺ = Π·Z₁·T⁻ᵀ·Q₁ᵀ`.
pub fn pseudoinverse(a: &Matrix) -> Matrix {
    let (m, n) = (a.rows, a.cols);
    if m == 0 || n == 0 {
        return Matrix::zeros(n, m);
    }
    let pq = pivoted_qr(a);
    let r = pq.rank;
    if r == 0 {
        return Matrix::zeros(n, m);
    }
    let q1t = pq.q.columns(0, r).transpose();
    let r1t = pq.r.block(0, r, 0, n).transpose();
    let zt = givens_qr(&r1t);
    let t = zt.r.block(0, r, 0, r);
    let z1 = zt.q.columns(0, r);
    // solve Tᵀ·X = Q₁ᵀ by forward substitution
    let mut x = Matrix::zeros(r, m);
    for i in 0..r {
        for c in 0..m {
            let mut acc = q1t[(i, c)];
            for k in 0..i {
                acc -= t[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = acc / t[(i, i)];
        }
    }
    let y = &z1 * &x;
    let mut out = Matrix::zeros(n, m);
    for (k, &p) in pq.perm.iter().enumerate() {
        for c in 0..m {
            out[(p, c)] = y[(k, c)];
        }
    }
    out
}

/// Lower-triangular `L` with `L·Lᵀ = Σ` for symmetric positive semidefinite `Σ`.
///
/// A diagonally pivoted semidefinite Cholesky gives `Σ = M·Mᵀ`; pivots
/// below tolerance are exact zeros. The pivoting destroys triangularity,
/// which is restored by a Givens QR of `Mᵀ` (`M = Rᵀ·Qᵀ`, hence `L = Rᵀ`).
pub fn psd_factor(sigma: &Matrix) -> Result<Matrix, LinalgError> {
    let n = sigma.rows;
    check_dim("psd_factor", n, sigma.cols)?;
    if !sigma.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let scale = sigma.max_abs();
    if n == 0 || scale == 0.0 {
        return Ok(Matrix::zeros(n, n));
    }
    let asym = (sigma - &sigma.transpose()).max_abs();
    if asym > TOL * scale * 1e3 {
        return Err(LinalgError::NotPsd { pivot: -asym });
    }
    let mut s = sigma.symmetrize();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut lp = Matrix::zeros(n, n);
    let thresh = TOL * scale;
    for k in 0..n {
        let p = (k..n)
            .max_by(|&a, &b| s[(a, a)].total_cmp(&s[(b, b)]).then(b.cmp(&a)))
            .unwrap();
        let piv = s[(p, p)];
        if piv < -thresh {
            return Err(LinalgError::NotPsd { pivot: piv });
        }
        if piv <= thresh {
            // every remaining pivot is numerically zero; so must the block be
            let min_d = (k..n).map(|i| s[(i, i)]).fold(f64::INFINITY, f64::min);
            if min_d < -thresh {
                return Err(LinalgError::NotPsd { pivot: min_d });
            }
            let off = (k..n)
                .flat_map(|i| (k..n).map(move |j| (i, j)))
                .map(|(i, j)| s[(i, j)].abs())
                .fold(0.0, f64::max);
            if off > libm::sqrt(TOL) * scale {
                return Err(LinalgError::NotPsd { pivot: -off });
            }
            break;
        }
        if p != k {
            perm.swap(k, p);
            for j in 0..n {
                let t = s[(k, j)];
                s[(k, j)] = s[(p, j)];
                s[(p, j)] = t;
            }
            for i in 0..n {
                let t = s[(i, k)];
                s[(i, k)] = s[(i, p)];
                s[(i, p)] = t;
            }
            for j in 0..k {
                let t = lp[(k, j)];
                lp[(k, j)] = lp[(p, j)];
                lp[(p, j)] = t;
            }
        }
        let d = libm::sqrt(piv);
        lp[(k, k)] = d;
        for i in (k + 1)..n {
            lp[(i, k)] = s[(i, k)] / d;
        }
        for i in (k + 1)..n {
            for j in (k + 1)..n {
                s[(i, j)] -= lp[(i, k)] * lp[(j, k)];
            }
        }
    }
    // undo the symmetric permutation: Σ = M·Mᵀ with M = Π·Lp
    let mut m = Matrix::zeros(n, n);
    for (k, &p) in perm.iter().enumerate() {
        for j in 0..n {
            m[(p, j)] = lp[(k, j)];
        }
    }
    let qr = givens_qr(&m.transpose());
    let mut l = qr.r.transpose();
    for i in 0..n {
        for j in (i + 1)..n {
            l[(i, j)] = 0.0;
        }
    }
    for j in 0..n {
        if l[(j, j)] < 0.0 {
            for i in j..n {
                l[(i, j)] = -l[(i, j)];
            }
        }
    }
    Ok(l)
}
