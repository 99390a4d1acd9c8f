//! Equational laws of the calculus, checked semantically.
//!
//! Each law is a pair of diagrams; it holds when both sides interpret to
//! equal normal forms. Scalar parameters range over a fixed sample set and
//! the rotation law over a fixed set of angles.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::diagram::{matrix_diagram, parse_diagram, Diagram};
use crate::linalg::Matrix;
use crate::quadrel::interpret;
use crate::quadstate::states_equal;

/// Scalars substituted for `k` and `r`.
pub const SCALARS: [f64; 5] = [-2.0, -1.0, 0.5, 1.0, 3.0];

/// Angles substituted in the rotation law.
pub const ANGLES: [f64; 5] = [0.0, PI / 6.0, PI / 4.0, PI / 2.0, 2.5];

/// Which block of laws a case belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fragment {
    Affine,
    Quadratic,
    Relational,
    Derived,
}

impl Fragment {
    pub fn label(self) -> &'static str {
        match self {
            Fragment::Affine => "affine",
            Fragment::Quadratic => "quadratic",
            Fragment::Relational => "relational",
            Fragment::Derived => "derived",
        }
    }
}

#[derive(Debug, Clone)]
pub struct AxiomCase {
    pub law: &'static str,
    pub fragment: Fragment,
    /// Parameter values, e.g. `k=-2`.
    pub params: String,
    pub lhs: Diagram,
    pub rhs: Diagram,
}

#[derive(Debug, Clone)]
pub struct AxiomOutcome {
    pub law: &'static str,
    pub fragment: Fragment,
    pub params: String,
    pub passed: bool,
    pub detail: String,
}

fn d(src: &str) -> Diagram {
    parse_diagram(src).unwrap_or_else(|e| panic!("law `{}` does not parse: {}", src, e))
}

struct Builder {
    cases: Vec<AxiomCase>,
}

impl Builder {
    fn law(&mut self, law: &'static str, fragment: Fragment, params: String, lhs: Diagram, rhs: Diagram) {
        self.cases.push(AxiomCase {
            law,
            fragment,
            params,
            lhs,
            rhs,
        });
    }

    fn text(&mut self, law: &'static str, fragment: Fragment, lhs: &str, rhs: &str) {
        self.law(law, fragment, String::new(), d(lhs), d(rhs));
    }

    fn with_k(&mut self, law: &'static str, fragment: Fragment, lhs: impl Fn(f64) -> String, rhs: impl Fn(f64) -> String) {
        for k in SCALARS {
            self.law(law, fragment, format!("k={:?}", k), d(&lhs(k)), d(&rhs(k)));
        }
    }
}

fn rotation(phi: f64) -> Matrix {
    let (s, c) = (libm::sin(phi), libm::cos(phi));
    Matrix::from_rows(&[[c, -s], [s, c]])
}

/// Effect `[x = a]`.
fn co_const(a: f64) -> String {
    format!("((id(1) * (one ; scalar({:?}))) ; merge ; discard)", a)
}

/// Every law instance, in a fixed order.
pub fn catalogue() -> Vec<AxiomCase> {
    use Fragment::*;
    let mut b = Builder { cases: Vec::new() };

    b.text("as", Affine, "(add * id(1)) ; add", "(id(1) * add) ; add");
    b.text("com", Affine, "swap ; add", "add");
    b.text("un", Affine, "(zero * id(1)) ; add", "id(1)");
    b.text("1-dup", Affine, "one ; copy", "one * one");
    b.text("coas", Affine, "copy ; (copy * id(1))", "copy ; (id(1) * copy)");
    b.text("cocom", Affine, "copy ; swap", "copy");
    b.text("coun", Affine, "copy ; (discard * id(1))", "id(1)");
    b.text("1-del", Affine, "one ; discard", "empty");
    b.with_k(
        "add",
        Affine,
        |k| format!("add ; scalar({:?})", k),
        |k| format!("(scalar({:?}) * scalar({:?})) ; add", k, k),
    );
    b.with_k("zero", Affine, |k| format!("zero ; scalar({:?})", k), |_| "zero".into());
    b.with_k(
        "dup",
        Affine,
        |k| format!("scalar({:?}) ; copy", k),
        |k| format!("copy ; (scalar({:?}) * scalar({:?}))", k, k),
    );
    b.with_k("del", Affine, |k| format!("scalar({:?}) ; discard", k), |_| "discard".into());
    for k in SCALARS {
        for r in SCALARS {
            let p = format!("k={:?} r={:?}", k, r);
            b.law(
                "mult",
                Affine,
                p.clone(),
                d(&format!("scalar({:?}) ; scalar({:?})", k, r)),
                d(&format!("scalar({:?})", k * r)),
            );
            b.law(
                "plus",
                Affine,
                p,
                d(&format!("copy ; (scalar({:?}) * scalar({:?})) ; add", k, r)),
                d(&format!("scalar({:?})", k + r)),
            );
        }
    }
    b.text("0", Affine, "scalar(0.0)", "discard ; zero");
    b.text("1", Affine, "scalar(1.0)", "id(1)");
    b.text(
        "white-black-bi",
        Affine,
        "add ; copy",
        "(copy * copy) ; (id(1) * swap * id(1)) ; (add * add)",
    );
    b.text("white-black-biun", Affine, "zero ; copy", "zero * zero");
    b.text("white-black-bo", Affine, "zero ; discard", "empty");
    b.text("black-white-biun", Affine, "add ; discard", "discard * discard");

    b.text("D", Quadratic, "normal ; discard", "empty");
    b.text("Z", Quadratic, "normal ; cozero", "empty");
    for phi in ANGLES {
        b.law(
            "RI",
            Quadratic,
            format!("phi={:?}", phi),
            Diagram::seq(d("normal * normal"), matrix_diagram(&rotation(phi))).unwrap(),
            d("normal * normal"),
        );
    }

    b.text("black-fr1", Relational, "(copy * id(1)) ; (id(1) * merge)", "merge ; copy");
    b.text("black-fr2", Relational, "(id(1) * copy) ; (merge * id(1))", "merge ; copy");
    b.text("black-sp", Relational, "copy ; merge", "id(1)");
    b.text("black-bo", Relational, "any ; discard", "empty");
    b.text("white-fr1", Relational, "(coadd * id(1)) ; (id(1) * add)", "add ; coadd");
    b.text("white-fr2", Relational, "(id(1) * coadd) ; (add * id(1))", "add ; coadd");
    b.text("white-sp", Relational, "coadd ; add", "id(1)");
    b.text("white-bo", Relational, "zero ; cozero", "empty");
    b.text("cap", Relational, "zero ; coadd", "any ; copy ; (id(1) * scalar(-1.0))");
    b.text("false", Relational, "(one ; cozero) * id(1)", "(one ; cozero) * (discard ; any)");
    for r in SCALARS {
        b.law(
            "r-inv",
            Relational,
            format!("r={:?}", r),
            d(&format!("scalar({:?}) ; coscalar({:?})", r, r)),
            d("id(1)"),
        );
        b.law(
            "r-coinv",
            Relational,
            format!("r={:?}", r),
            d(&format!("coscalar({:?}) ; scalar({:?})", r, r)),
            d("id(1)"),
        );
    }

    // consequences: mirrored (co)monoids, worked examples, scalar laws
    b.text("mirror-coas", Derived, "coadd ; (coadd * id(1))", "coadd ; (id(1) * coadd)");
    b.text("mirror-cocom", Derived, "coadd ; swap", "coadd");
    b.text("mirror-coun", Derived, "coadd ; (cozero * id(1))", "id(1)");
    b.text("mirror-as", Derived, "(merge * id(1)) ; merge", "(id(1) * merge) ; merge");
    b.text("mirror-un", Derived, "(any * id(1)) ; merge", "id(1)");
    b.law(
        "sum-of-normals",
        Derived,
        String::new(),
        d("(normal * normal) ; add"),
        d(&format!("normal ; scalar({:?})", libm::sqrt(2.0))),
    );
    b.law(
        "split-cost",
        Derived,
        String::new(),
        d("coadd ; (conormal * conormal)"),
        d(&format!("scalar({:?}) ; conormal", 1.0 / libm::sqrt(2.0))),
    );
    for (x, y) in [(3.0, 4.0), (1.0, 1.0), (0.5, 2.0)] {
        let z: f64 = libm::hypot(x, y);
        b.law(
            "pythagoras",
            Derived,
            format!("a={:?} b={:?}", x, y),
            d(&format!("(normal ; {}) * (normal ; {})", co_const(x), co_const(y))),
            d(&format!("normal ; {}", co_const(z))),
        );
    }
    b.text("normal-flip", Derived, "normal ; scalar(-1.0)", "normal");
    b.cases
}

/// Checks one law at relative tolerance `tol`.
pub fn check(case: &AxiomCase, tol: f64) -> AxiomOutcome {
    let outcome = |passed, detail: String| AxiomOutcome {
        law: case.law,
        fragment: case.fragment,
        params: case.params.clone(),
        passed,
        detail,
    };
    if case.lhs.dom() != case.rhs.dom() || case.lhs.cod() != case.rhs.cod() {
        return outcome(false, format!("types differ: {}→{} vs {}→{}", case.lhs.dom(), case.lhs.cod(), case.rhs.dom(), case.rhs.cod()));
    }
    match (interpret(&case.lhs), interpret(&case.rhs)) {
        (Ok(l), Ok(r)) => {
            if states_equal(l.name(), r.name(), tol) {
                outcome(true, String::new())
            } else {
                outcome(false, format!("lhs {:?} vs rhs {:?}", l.name(), r.name()))
            }
        }
        (Err(e), _) | (_, Err(e)) => outcome(false, format!("{}", e)),
    }
}

pub fn check_all(tol: f64) -> Vec<AxiomOutcome> {
    catalogue().iter().map(|c| check(c, tol)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_law_holds() {
        let failed: Vec<_> = check_all(1e-9).into_iter().filter(|o| !o.passed).collect();
        assert!(failed.is_empty(), "{:#?}", failed);
    }

    #[test]
    fn a_false_law_is_caught() {
        let bogus = AxiomCase {
            law: "bogus",
            fragment: Fragment::Derived,
            params: String::new(),
            lhs: d("normal ; scalar(2.0)"),
            rhs: d("normal"),
        };
        assert!(!check(&bogus, 1e-9).passed);
    }
}
