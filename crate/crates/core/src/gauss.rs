//! Gaussian stochastic maps `x ↦ A·x + b + N(0, Σ)` and the causal
//! interpretation of diagrams.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::diagram::{self, Diagram, Generator, Node};
use crate::linalg::{check_dim, psd_factor, vec_add, LinalgError, Matrix};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GaussError {
    #[error("generator `{0}` has no causal interpretation")]
    NotCausal(&'static str),
    #[error("cannot compose: left has {left_cod} outputs, right has {right_dom} inputs")]
    ArityMismatch { left_cod: usize, right_dom: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Affine map with additive Gaussian noise, `m → n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussMap {
    matrix: Matrix,
    offset: Vec<f64>,
    cov: Matrix,
}

impl GaussMap {
    /// Checks shapes and that `cov` is symmetric positive semidefinite.
    pub fn new(matrix: Matrix, offset: Vec<f64>, cov: Matrix) -> Result<Self, GaussError> {
        let n = matrix.rows();
        check_dim("GaussMap offset", n, offset.len())?;
        check_dim("GaussMap covariance rows", n, cov.rows())?;
        check_dim("GaussMap covariance cols", n, cov.cols())?;
        if !matrix.is_finite() || !cov.is_finite() || offset.iter().any(|x| !x.is_finite()) {
            return Err(LinalgError::NonFinite.into());
        }
        psd_factor(&cov)?;
        Ok(GaussMap {
            matrix,
            offset,
            cov: cov.symmetrize(),
        })
    }

    pub fn identity(n: usize) -> Self {
        GaussMap {
            matrix: Matrix::identity(n),
            offset: vec![0.0; n],
            cov: Matrix::zeros(n, n),
        }
    }

    /// Deterministic affine map `x ↦ A·x + b`.
    pub fn affine(matrix: Matrix, offset: Vec<f64>) -> Result<Self, GaussError> {
        let n = matrix.rows();
        GaussMap::new(matrix, offset, Matrix::zeros(n, n))
    }

    /// Gaussian distribution `N(μ, Σ)` as a map `0 → n`.
    pub fn distribution(mean: Vec<f64>, cov: Matrix) -> Result<Self, GaussError> {
        GaussMap::new(Matrix::zeros(mean.len(), 0), mean, cov)
    }

    #[inline]
    pub fn inputs(&self) -> usize {
        self.matrix.cols()
    }

    #[inline]
    pub fn outputs(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn covariance(&self) -> &Matrix {
        &self.cov
    }

    /// `self ; g`: first `self`, then `g`.
    pub fn compose(&self, g: &GaussMap) -> Result<GaussMap, GaussError> {
        compose_gauss(self, g)
    }

    pub fn tensor(&self, g: &GaussMap) -> GaussMap {
        tensor_gauss(self, g)
    }

    pub fn approx_eq(&self, other: &GaussMap, tol: f64) -> bool {
        self.matrix.approx_eq(&other.matrix, tol)
            && crate::linalg::vec_approx_eq(&self.offset, &other.offset, tol)
            && self.cov.approx_eq(&other.cov, tol)
    }

    /// Draws one output for input `x`, seeded deterministically.
    pub fn sample(&self, x: &[f64], seed: u64) -> Result<Vec<f64>, GaussError> {
        let mut s = Sampler::new(self, seed)?;
        s.draw(x)
    }
}

/// `(A, b, Σ) ; (C, d, Ξ) = (CA, Cb + d, CΣCᵀ + Ξ)`.
pub fn compose_gauss(f: &GaussMap, g: &GaussMap) -> Result<GaussMap, GaussError> {
    if f.outputs() != g.inputs() {
        return Err(GaussError::ArityMismatch {
            left_cod: f.outputs(),
            right_dom: g.inputs(),
        });
    }
    let c = &g.matrix;
    Ok(GaussMap {
        matrix: c * &f.matrix,
        offset: vec_add(&c.mul_vec(&f.offset), &g.offset),
        cov: (&(&(c * &f.cov) * &c.transpose()) + &g.cov).symmetrize(),
    })
}

/// Block-diagonal parallel composition.
pub fn tensor_gauss(f: &GaussMap, g: &GaussMap) -> GaussMap {
    let mut offset = f.offset.clone();
    offset.extend_from_slice(&g.offset);
    GaussMap {
        matrix: f.matrix.block_diag(&g.matrix),
        offset,
        cov: f.cov.block_diag(&g.cov),
    }
}

fn generator_map(g: Generator) -> Result<GaussMap, GaussError> {
    let m = |rows: &[&[f64]]| Matrix::from_rows(rows);
    Ok(match g {
        Generator::Copy => GaussMap::identity(1).with_matrix(m(&[&[1.0], &[1.0]])),
        Generator::Discard => GaussMap::identity(0).with_matrix(Matrix::zeros(0, 1)),
        Generator::Add => GaussMap::identity(1).with_matrix(m(&[&[1.0, 1.0]])),
        Generator::Scalar(k) => GaussMap::identity(1).with_matrix(m(&[&[k]])),
        Generator::Zero => GaussMap::identity(1).with_matrix(Matrix::zeros(1, 0)),
        Generator::One => GaussMap {
            matrix: Matrix::zeros(1, 0),
            offset: vec![1.0],
            cov: Matrix::zeros(1, 1),
        },
        Generator::Normal => GaussMap {
            matrix: Matrix::zeros(1, 0),
            offset: vec![0.0],
            cov: Matrix::identity(1),
        },
        other => return Err(GaussError::NotCausal(other.name())),
    })
}

impl GaussMap {
    /// Replaces the matrix, resizing offset and covariance to its row count.
    fn with_matrix(self, matrix: Matrix) -> GaussMap {
        let n = matrix.rows();
        GaussMap {
            matrix,
            offset: vec![0.0; n],
            cov: Matrix::zeros(n, n),
        }
    }
}

fn swap_map() -> GaussMap {
    GaussMap::identity(2).with_matrix(Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]))
}

/// Interprets a causal diagram as a Gaussian map.
pub fn interpret_causal(d: &Diagram) -> Result<GaussMap, GaussError> {
    if let Some(g) = d.first_noncausal() {
        return Err(GaussError::NotCausal(g.name()));
    }
    fold(d)
}

fn fold(d: &Diagram) -> Result<GaussMap, GaussError> {
    Ok(match d.node() {
        Node::Gen(g) => generator_map(*g)?,
        Node::Id(n) => GaussMap::identity(*n),
        Node::Swap => swap_map(),
        Node::Empty => GaussMap::identity(0),
        Node::Seq(a, b) => compose_gauss(&fold(a)?, &fold(b)?)?,
        Node::Par(a, b) => tensor_gauss(&fold(a)?, &fold(b)?),
    })
}

/// Diagram built from a factor `L` (`n × k`, with `L·Lᵀ = Σ`):
/// the input goes through `A`, `k` fresh normals go through `L`, the two
/// are summed, and the constant `b` is added.
pub fn normal_form_diagram(a: &Matrix, factor: &Matrix, offset: &[f64]) -> Diagram {
    let n = a.rows();
    let noise = Diagram::seq(diagram::normals(factor.cols()), diagram::matrix_diagram(factor))
        .expect("factor columns match normals");
    let signal = Diagram::seq(
        Diagram::par(diagram::matrix_diagram(a), noise),
        diagram::add_bus(n),
    )
    .expect("noise and signal share width");
    Diagram::seq(
        Diagram::par(signal, diagram::const_diagram(offset)),
        diagram::add_bus(n),
    )
    .expect("offset has output width")
}

/// Normal-form diagram of `f`, using the lower-triangular factor of `Σ`.
pub fn gauss_normal_form(f: &GaussMap) -> Result<Diagram, GaussError> {
    let l = psd_factor(&f.cov)?;
    Ok(normal_form_diagram(&f.matrix, &l, &f.offset))
}

/// Repeated sampling from one map with a cached covariance factor.
pub struct Sampler {
    map: GaussMap,
    factor: Matrix,
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(map: &GaussMap, seed: u64) -> Result<Self, GaussError> {
        Ok(Sampler {
            map: map.clone(),
            factor: psd_factor(&map.cov)?,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// `A·x + b + L·z` with `z` standard normal.
    pub fn draw(&mut self, x: &[f64]) -> Result<Vec<f64>, GaussError> {
        check_dim("sample input", self.map.inputs(), x.len())?;
        let k = self.factor.cols();
        let z: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut self.rng)).collect();
        let mean = vec_add(&self.map.matrix.mul_vec(x), &self.map.offset);
        Ok(vec_add(&mean, &self.factor.mul_vec(&z)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::parse_diagram;

    fn scalar_map(a: f64, b: f64, v: f64) -> GaussMap {
        GaussMap::new(Matrix::from_rows(&[[a]]), vec![b], Matrix::from_rows(&[[v]])).unwrap()
    }

    #[test]
    fn compose_scalar_maps() {
        let h = compose_gauss(&scalar_map(2.0, 1.0, 1.0), &scalar_map(3.0, 0.0, 4.0)).unwrap();
        assert!(h.approx_eq(&scalar_map(6.0, 3.0, 13.0), 0.0));
        let f = scalar_map(2.0, 1.0, 1.0);
        assert_eq!(compose_gauss(&GaussMap::identity(1), &f).unwrap(), f);
        assert_eq!(compose_gauss(&f, &GaussMap::identity(1)).unwrap(), f);
    }

    #[test]
    fn tensor_units() {
        let f = scalar_map(2.0, 1.0, 1.0);
        assert_eq!(tensor_gauss(&f, &GaussMap::identity(0)), f);
        assert_eq!(tensor_gauss(&GaussMap::identity(1), &GaussMap::identity(1)), GaussMap::identity(2));
        let t = tensor_gauss(&f, &scalar_map(3.0, -1.0, 2.0));
        assert_eq!(t.matrix(), &Matrix::from_rows(&[[2.0, 0.0], [0.0, 3.0]]));
        assert_eq!(t.offset(), &[1.0, -1.0]);
        assert_eq!(t.covariance(), &Matrix::from_rows(&[[1.0, 0.0], [0.0, 2.0]]));
    }

    #[test]
    fn sum_of_two_normals() {
        let f = interpret_causal(&parse_diagram("(normal * normal) ; add").unwrap()).unwrap();
        assert_eq!((f.inputs(), f.outputs()), (0, 1));
        assert_eq!(f.offset(), &[0.0]);
        assert_eq!(f.covariance(), &Matrix::from_rows(&[[2.0]]));
    }

    #[test]
    fn scale_then_discard_is_empty_map() {
        let f = interpret_causal(&parse_diagram("scalar(10) ; discard").unwrap()).unwrap();
        assert_eq!((f.inputs(), f.outputs()), (1, 0));
    }

    #[test]
    fn prior_of_measurement_program() {
        let d = parse_diagram("((one ; scalar(50)) * (normal ; scalar(10))) ; add").unwrap();
        let f = interpret_causal(&d).unwrap();
        assert_eq!(f.offset(), &[50.0]);
        assert_eq!(f.covariance(), &Matrix::from_rows(&[[100.0]]));
    }

    #[test]
    fn mirrored_generators_rejected() {
        let e = interpret_causal(&parse_diagram("copy ; merge").unwrap());
        assert_eq!(e, Err(GaussError::NotCausal("merge")));
    }

    #[test]
    fn normal_form_round_trips() {
        let f = GaussMap::distribution(vec![0.0], Matrix::from_rows(&[[2.0]])).unwrap();
        let d = gauss_normal_form(&f).unwrap();
        assert!(interpret_causal(&d).unwrap().approx_eq(&f, 1e-12));
        let id = gauss_normal_form(&GaussMap::identity(2)).unwrap();
        assert!(interpret_causal(&id).unwrap().approx_eq(&GaussMap::identity(2), 0.0));
        let joint = GaussMap::distribution(vec![0.0, 0.0], Matrix::from_rows(&[[100.0, 100.0], [100.0, 125.0]])).unwrap();
        let back = interpret_causal(&gauss_normal_form(&joint).unwrap()).unwrap();
        assert!(back.approx_eq(&joint, 1e-9));
    }

    #[test]
    fn sampling_is_reproducible() {
        let det = scalar_map(2.0, 1.0, 0.0);
        assert_eq!(det.sample(&[3.0], 7).unwrap(), vec![7.0]);
        let f = scalar_map(1.0, 0.0, 2.0);
        assert_eq!(f.sample(&[0.0], 42).unwrap(), f.sample(&[0.0], 42).unwrap());
        assert_ne!(f.sample(&[0.0], 42).unwrap(), f.sample(&[0.0], 43).unwrap());
    }
}
