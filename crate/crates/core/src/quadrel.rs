//! Quadratic relations `m → n`, stored as their names: states on `m + n`
//! wires with the inputs first.
//!
//! Composition adds the two functions and infimizes over the shared wires,
//! realised as tensor, then conditioning the middle blocks to agree, then
//! pushing forward onto the outer coordinates.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::diagram::{self, Diagram, Generator, Node};
use crate::gauss::GaussMap;
use crate::linalg::{self, check_dim, image, vec_approx_eq, LinalgError, Matrix, Subspace};
use crate::quadstate::{states_equal, QuadState};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuadRelError {
    #[error("cannot compose: left has {left_cod} outputs, right has {right_dom} inputs")]
    ArityMismatch { left_cod: usize, right_dom: usize },
    #[error("name has {found} wires, expected {expected}")]
    NameWidth { expected: usize, found: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A morphism `inputs → outputs` of quadratic relations.
#[derive(Debug, Clone)]
pub struct QuadRel {
    inputs: usize,
    outputs: usize,
    name: QuadState,
}

impl QuadRel {
    pub fn from_name(inputs: usize, outputs: usize, name: QuadState) -> Result<Self, QuadRelError> {
        if name.dim() != inputs + outputs {
            return Err(QuadRelError::NameWidth {
                expected: inputs + outputs,
                found: name.dim(),
            });
        }
        Ok(QuadRel {
            inputs,
            outputs,
            name,
        })
    }

    /// A state `0 → n` viewed as a morphism.
    pub fn state(s: QuadState) -> Self {
        QuadRel {
            inputs: 0,
            outputs: s.dim(),
            name: s,
        }
    }

    #[inline]
    pub fn inputs(&self) -> usize {
        self.inputs
    }

    #[inline]
    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn name(&self) -> &QuadState {
        &self.name
    }

    pub fn into_name(self) -> QuadState {
        self.name
    }

    /// `F(x, y)`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64, LinalgError> {
        check_dim("QuadRel input", self.inputs, x.len())?;
        check_dim("QuadRel output", self.outputs, y.len())?;
        let mut p = x.to_vec();
        p.extend_from_slice(y);
        self.name.eval(&p)
    }

    pub fn identity(n: usize) -> Self {
        let rows = Matrix::from_fn(n, 2 * n, |i, j| {
            if j == i {
                1.0
            } else if j == n + i {
                -1.0
            } else {
                0.0
            }
        });
        QuadRel {
            inputs: n,
            outputs: n,
            name: affine(&rows, &vec![0.0; n]),
        }
    }

    /// `(x, z) ↦ inf_y F(x, y) + G(y, z)`.
    pub fn compose(&self, g: &QuadRel) -> Result<QuadRel, QuadRelError> {
        compose_rel(self, g)
    }

    pub fn tensor(&self, g: &QuadRel) -> QuadRel {
        let (m1, n1, m2, n2) = (self.inputs, self.outputs, g.inputs, g.outputs);
        let joint = self.name.tensor(&g.name);
        let perm: Vec<usize> = (0..m1)
            .chain(m1 + n1..m1 + n1 + m2)
            .chain(m1..m1 + n1)
            .chain(m1 + n1 + m2..m1 + n1 + m2 + n2)
            .collect();
        QuadRel {
            inputs: m1 + m2,
            outputs: n1 + n2,
            name: joint.permute(&perm).expect("permutation has joint width"),
        }
    }

    pub fn approx_eq(&self, other: &QuadRel, tol: f64) -> bool {
        self.inputs == other.inputs
            && self.outputs == other.outputs
            && states_equal(&self.name, &other.name, tol)
    }
}

/// Sequential composition by infimization over the middle wires.
pub fn compose_rel(f: &QuadRel, g: &QuadRel) -> Result<QuadRel, QuadRelError> {
    if f.outputs != g.inputs {
        return Err(QuadRelError::ArityMismatch {
            left_cod: f.outputs,
            right_dom: g.inputs,
        });
    }
    let (m, n, p) = (f.inputs, f.outputs, g.outputs);
    let joint = f.name.tensor(&g.name);
    let width = m + 2 * n + p;
    let glue = Matrix::from_fn(n, width, |i, j| {
        if j == m + i {
            1.0
        } else if j == m + n + i {
            -1.0
        } else {
            0.0
        }
    });
    let tied = joint.condition_zero(&glue, &vec![0.0; n])?;
    let keep: Vec<usize> = (0..m).chain(m + 2 * n..width).collect();
    Ok(QuadRel {
        inputs: m,
        outputs: p,
        name: tied.marginalize(&keep)?,
    })
}

fn affine(rows: &Matrix, targets: &[f64]) -> QuadState {
    QuadState::affine(rows, targets).expect("generator constraints are well formed")
}

/// The name of a generator.
pub fn generator_rel(g: Generator) -> QuadRel {
    let (m, n) = g.arity();
    let name = match g {
        Generator::Copy => affine(&Matrix::from_rows(&[[1.0, -1.0, 0.0], [1.0, 0.0, -1.0]]), &[0.0, 0.0]),
        Generator::Add => affine(&Matrix::from_rows(&[[1.0, 1.0, -1.0]]), &[0.0]),
        Generator::Merge => affine(&Matrix::from_rows(&[[1.0, 0.0, -1.0], [0.0, 1.0, -1.0]]), &[0.0, 0.0]),
        Generator::Coadd => affine(&Matrix::from_rows(&[[1.0, -1.0, -1.0]]), &[0.0]),
        Generator::Scalar(k) => affine(&Matrix::from_rows(&[[k, -1.0]]), &[0.0]),
        Generator::Zero | Generator::Cozero => QuadState::point(vec![0.0]),
        Generator::One => QuadState::point(vec![1.0]),
        Generator::Discard | Generator::Any => QuadState::full(1),
        Generator::Normal => QuadState::gaussian(vec![0.0], Matrix::identity(1)).expect("unit variance"),
    };
    QuadRel {
        inputs: m,
        outputs: n,
        name,
    }
}

fn swap_rel() -> QuadRel {
    let rows = Matrix::from_rows(&[[0.0, 1.0, -1.0, 0.0], [1.0, 0.0, 0.0, -1.0]]);
    QuadRel {
        inputs: 2,
        outputs: 2,
        name: affine(&rows, &[0.0, 0.0]),
    }
}

/// Interprets any diagram as a quadratic relation.
///
/// Threads one running name (inputs, then the current wires) through the
/// diagram and lets each generator act on its own wires only, so padding
/// identities cost nothing.
pub fn interpret(d: &Diagram) -> Result<QuadRel, QuadRelError> {
    let m = d.dom();
    let mut run = Running {
        inputs: m,
        wires: m,
        name: QuadRel::identity(m).name,
    };
    run.apply(d, 0)?;
    Ok(QuadRel {
        inputs: m,
        outputs: run.wires,
        name: run.name,
    })
}

/// Interprets by composing the relations of the sub-diagrams, following
/// the term structure literally. Slower than [`interpret`]; kept as a
/// cross-check.
pub fn interpret_by_composition(d: &Diagram) -> Result<QuadRel, QuadRelError> {
    Ok(match d.node() {
        Node::Gen(g) => generator_rel(*g),
        Node::Id(n) => QuadRel::identity(*n),
        Node::Swap => swap_rel(),
        Node::Empty => QuadRel::state(QuadState::empty()),
        Node::Seq(a, b) => compose_rel(&interpret_by_composition(a)?, &interpret_by_composition(b)?)?,
        Node::Par(a, b) => interpret_by_composition(a)?.tensor(&interpret_by_composition(b)?),
    })
}

struct Running {
    inputs: usize,
    wires: usize,
    name: QuadState,
}

impl Running {
    /// Applies `d` to the wires starting at `at`.
    fn apply(&mut self, d: &Diagram, at: usize) -> Result<(), QuadRelError> {
        match d.node() {
            Node::Id(_) | Node::Empty => Ok(()),
            Node::Swap => {
                let base = self.inputs + at;
                let perm: Vec<usize> = (0..self.inputs + self.wires)
                    .map(|i| match i {
                        i if i == base => base + 1,
                        i if i == base + 1 => base,
                        i => i,
                    })
                    .collect();
                self.name = self.name.permute(&perm)?;
                Ok(())
            }
            Node::Gen(g) => self.act(&generator_rel(*g), at),
            Node::Seq(a, b) => {
                self.apply(a, at)?;
                self.apply(b, at)
            }
            Node::Par(a, b) => {
                self.apply(a, at)?;
                self.apply(b, at + a.cod())
            }
        }
    }

    /// Feeds wires `at..at+k` into `g` (`k → l`) and splices its outputs in.
    fn act(&mut self, g: &QuadRel, at: usize) -> Result<(), QuadRelError> {
        let (m, w, k, l) = (self.inputs, self.wires, g.inputs, g.outputs);
        let width = m + w + k + l;
        let joint = self.name.tensor(&g.name);
        let glue = Matrix::from_fn(k, width, |i, j| {
            if j == m + at + i {
                1.0
            } else if j == m + w + i {
                -1.0
            } else {
                0.0
            }
        });
        let tied = joint.condition_zero(&glue, &vec![0.0; k])?;
        let keep: Vec<usize> = (0..m + at)
            .chain(m + w + k..width)
            .chain(m + at + k..m + w)
            .collect();
        self.name = tied.marginalize(&keep)?;
        self.wires = w - k + l;
        Ok(())
    }
}

/// Negative conditional log-density of a Gaussian map:
/// `(x, y) ↦ ½⟨y − Ax − b, Σ⁺(y − Ax − b)⟩ + [y − Ax − b ∈ im Σ]`.
pub fn functor_l(f: &GaussMap) -> QuadRel {
    let (m, n) = (f.inputs(), f.outputs());
    let noise = QuadState::gaussian(f.offset().to_vec(), f.covariance().clone())
        .expect("Gaussian map covariance is well formed");
    let start = QuadState::full(m).tensor(&noise);
    let shear = Matrix::from_fn(m + n, m + n, |i, j| {
        if i == j {
            1.0
        } else if i >= m && j < m {
            f.matrix()[(i - m, j)]
        } else {
            0.0
        }
    });
    QuadRel {
        inputs: m,
        outputs: n,
        name: start
            .pushforward(&shear, &vec![0.0; m + n])
            .expect("shear is square"),
    }
}

/// An affine relation `inputs → outputs`: an affine subspace of
/// `ℝ^{inputs+outputs}` (or the empty relation).
#[derive(Debug, Clone)]
pub struct AffRel {
    inputs: usize,
    outputs: usize,
    subspace: Subspace,
    offset: Vec<f64>,
    empty: bool,
}

impl AffRel {
    /// `offset + subspace`; the offset is reduced to its component in `subspace⊥`.
    pub fn new(inputs: usize, outputs: usize, subspace: Subspace, offset: &[f64]) -> Result<Self, LinalgError> {
        check_dim("AffRel subspace", inputs + outputs, subspace.ambient_dim())?;
        check_dim("AffRel offset", inputs + outputs, offset.len())?;
        let offset = subspace.reject(offset)?;
        Ok(AffRel {
            inputs,
            outputs,
            subspace,
            offset,
            empty: false,
        })
    }

    pub fn empty(inputs: usize, outputs: usize) -> Self {
        AffRel {
            inputs,
            outputs,
            subspace: Subspace::zero(inputs + outputs),
            offset: vec![0.0; inputs + outputs],
            empty: true,
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn subspace(&self) -> &Subspace {
        &self.subspace
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    pub fn contains(&self, point: &[f64], tol: f64) -> bool {
        !self.empty
            && point.len() == self.offset.len()
            && self.subspace.contains(&linalg::vec_sub(point, &self.offset), tol)
    }

    pub fn approx_eq(&self, other: &AffRel, tol: f64) -> bool {
        if self.inputs != other.inputs || self.outputs != other.outputs || self.empty != other.empty {
            return false;
        }
        self.empty
            || (self.subspace.approx_eq(&other.subspace, tol) && vec_approx_eq(&self.offset, &other.offset, tol))
    }
}

/// Support of a Gaussian map: `{(x, y) : y ∈ Ax + b + im Σ}`.
pub fn functor_s(f: &GaussMap) -> AffRel {
    let (m, n) = (f.inputs(), f.outputs());
    let graph = Matrix::from_fn(m + n, m, |i, j| {
        if i < m {
            if i == j {
                1.0
            } else {
                0.0
            }
        } else {
            f.matrix()[(i - m, j)]
        }
    });
    let noise = Matrix::zeros(m, n).vstack(f.covariance());
    let subspace = image(&graph.hstack(&noise));
    let mut offset = vec![0.0; m];
    offset.extend_from_slice(f.offset());
    AffRel::new(m, n, subspace, &offset).expect("widths agree")
}

/// `{(x, y) : F(x, y) < ∞}`.
pub fn effective_domain(f: &QuadRel) -> AffRel {
    let name = f.name();
    if name.is_infeasible() {
        return AffRel::empty(f.inputs, f.outputs);
    }
    let spread = image(name.covariance());
    let subspace = name.fibre().sum(&spread).expect("same ambient space");
    AffRel::new(f.inputs, f.outputs, subspace, name.mean()).expect("widths agree")
}

/// `2n → 0`, `(x, x') ↦ [x = x']`.
pub fn cup(n: usize) -> Diagram {
    let tie = Diagram::seq(Diagram::gen(Generator::Merge), Diagram::gen(Generator::Discard)).unwrap();
    let p: Vec<usize> = (0..n).flat_map(|i| [i, n + i]).collect();
    Diagram::seq(diagram::permutation(&p), Diagram::repeat(&tie, n)).unwrap()
}

/// `0 → 2n`, `(x, x') ↦ [x = x']`.
pub fn cap(n: usize) -> Diagram {
    Diagram::seq(Diagram::repeat(&Diagram::gen(Generator::Any), n), diagram::copy_bus(n)).unwrap()
}

/// Bends the inputs of `d : m → n` into outputs, giving its name `0 → m + n`.
pub fn name_diagram(d: &Diagram) -> Diagram {
    let m = d.dom();
    Diagram::seq(cap(m), Diagram::par(Diagram::id(m), d.clone())).unwrap()
}

/// Bends the first `m` outputs of a state back into inputs.
pub fn unname_diagram(name: &Diagram, m: usize) -> Result<Diagram, diagram::DiagramError> {
    let n = name.cod().checked_sub(m).ok_or(diagram::DiagramError::ArityMismatch {
        term: name.to_string(),
        left_cod: name.cod(),
        next: alloc::format!("unname({})", m),
        right_dom: m,
    })?;
    Diagram::seq(
        Diagram::par(Diagram::id(m), name.clone()),
        Diagram::par(cup(m), Diagram::id(n)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::parse_diagram;

    fn rel(src: &str) -> QuadRel {
        interpret(&parse_diagram(src).unwrap()).unwrap()
    }

    #[test]
    fn split_then_two_costs_is_quarter_square() {
        let f = rel("coadd ; (conormal * conormal)");
        for c in [-3.0, 0.0, 2.0, 5.5] {
            let v = f.eval(&[c], &[]).unwrap();
            assert!((v - 0.25 * c * c).abs() < 1e-12, "{} {}", c, v);
        }
    }

    #[test]
    fn point_constraints() {
        assert_eq!(rel("zero ; cozero").name().score(), 0.0);
        assert!(rel("one ; cozero").name().is_infeasible());
    }

    #[test]
    fn copy_then_add_doubles() {
        let f = rel("copy ; add");
        assert_eq!(f.eval(&[3.0], &[6.0]).unwrap(), 0.0);
        assert_eq!(f.eval(&[3.0], &[5.0]).unwrap(), f64::INFINITY);
    }

    #[test]
    fn sum_of_normals_matches_gaussian() {
        let f = rel("(normal * normal) ; add");
        let expect = QuadState::gaussian(vec![0.0], Matrix::from_rows(&[[2.0]])).unwrap();
        assert!(states_equal(f.name(), &expect, 1e-12));
        assert!((f.eval(&[], &[2.0]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_is_unit() {
        let f = rel("coadd ; (normal * normal * id(2)) ; (add * add)");
        let l = compose_rel(&QuadRel::identity(1), &f).unwrap();
        let r = compose_rel(&f, &QuadRel::identity(2)).unwrap();
        assert!(l.approx_eq(&f, 1e-12));
        assert!(r.approx_eq(&f, 1e-12));
    }

    #[test]
    fn name_round_trip() {
        let d =parse_diagram("copy ; (scalar(2.0) * id(1)) ; (id(1) * (id(1) * normal ; add))").unwrap();
        let named = name_diagram(&d);
        let back = unname_diagram(&named, d.dom()).unwrap();
        let f = interpret(&d).unwrap();
        let nf = interpret(&named).unwrap();
        assert!(states_equal(f.name(), nf.name(), 1e-12));
        assert!(interpret(&back).unwrap().approx_eq(&f, 1e-12));
    }

    #[test]
    fn functor_l_examples() {
        let std = GaussMap::new(Matrix::zeros(1, 0), vec![0.0], Matrix::identity(1)).unwrap();
        assert!(functor_l(&std).approx_eq(&generator_rel(Generator::Normal), 1e-12));
        let det = GaussMap::new(Matrix::from_rows(&[[2.0]]), vec![1.0], Matrix::zeros(1, 1)).unwrap();
        let l = functor_l(&det);
        assert_eq!(l.eval(&[1.0], &[3.0]).unwrap(), 0.0);
        assert_eq!(l.eval(&[1.0], &[4.0]).unwrap(), f64::INFINITY);
        let post = GaussMap::new(Matrix::zeros(1, 0), vec![32.0], Matrix::from_rows(&[[20.0]])).unwrap();
        assert!((functor_l(&post).eval(&[], &[40.0]).unwrap() - 1.6).abs() < 1e-12);
    }

    #[test]
    fn supports() {
        let std = GaussMap::new(Matrix::zeros(1, 0), vec![0.0], Matrix::identity(1)).unwrap();
        assert!(functor_s(&std).subspace().is_full());
        let det = GaussMap::new(Matrix::from_rows(&[[2.0]]), vec![1.0], Matrix::zeros(1, 1)).unwrap();
        let s = functor_s(&det);
        assert!(s.contains(&[1.0, 3.0], 1e-12));
        assert!(!s.contains(&[1.0, 4.0], 1e-12));
        assert!(effective_domain(&functor_l(&det)).approx_eq(&s, 1e-12));
        assert!(effective_domain(&rel("one ; cozero")).is_empty());
    }
}
