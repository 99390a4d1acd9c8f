//! JSON documents for states, quadratic relations and affine relations.
//!
//! Entries are rounded to [`DIGITS`] significant digits and entries below
//! [`SNAP`] in magnitude are written as `0`, so canonical states that agree
//! up to rounding noise serialize to the same bytes. An infinite score is
//! written as the string `"inf"`.

use gqa_core::linalg::Subspace;
use gqa_core::{AffRel, Matrix, QuadRel, QuadState};
use serde::{Deserialize, Serialize};

/// Magnitude below which entries are written as zero.
pub const SNAP: f64 = 1e-12;

/// Significant digits kept in state documents.
pub const DIGITS: usize = 12;

#[derive(Debug, thiserror::Error)]
pub enum JsonError {
    #[error("malformed JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("invalid document: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Score {
    Finite(f64),
    Text(String),
}

impl Score {
    pub fn from_value(v: f64) -> Self {
        if v.is_infinite() {
            Score::Text("inf".into())
        } else {
            Score::Finite(snap(v))
        }
    }

    /// Like [`Score::from_value`] but without rounding, for standalone values.
    pub fn exact(v: f64) -> Self {
        if v.is_infinite() {
            Score::Text("inf".into())
        } else {
            Score::Finite(v)
        }
    }

    pub fn value(&self) -> Result<f64, JsonError> {
        match self {
            Score::Finite(v) => Ok(*v),
            Score::Text(t) if matches!(t.as_str(), "inf" | "+inf" | "infinity" | "Infinity") => Ok(f64::INFINITY),
            Score::Text(t) => Err(JsonError::Invalid(format!("score `{}` is not a number", t))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDoc {
    pub n: usize,
    /// Orthonormal basis vectors of the fibre, in canonical order.
    #[serde(rename = "D_basis")]
    pub d_basis: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
    /// Covariance, row by row.
    #[serde(rename = "Sigma")]
    pub sigma: Vec<Vec<f64>>,
    pub score: Score,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelDoc {
    pub m: usize,
    pub n: usize,
    pub name: StateDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffRelDoc {
    pub m: usize,
    pub n: usize,
    /// Orthonormal basis vectors of the direction space.
    pub basis: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
    pub empty: bool,
}

// Shorthand, since a Serialize+Deserialize impl for the three documents
// cannot itself fail (no maps with non-string keys).
impl StateDoc {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }
}

impl RelDoc {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }
}

impl AffRelDoc {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }
}

pub fn snap(v: f64) -> f64 {
    if v.abs() < SNAP {
        return 0.0;
    }
    format!("{:.*e}", DIGITS - 1, v).parse().unwrap_or(v)
}

fn snapped(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| snap(x)).collect()
}

fn columns(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.cols()).map(|j| snapped(&m.col_vec(j))).collect()
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| snapped(m.row_slice(i))).collect()
}

fn matrix_from_rows(rows: &[Vec<f64>], n: usize, what: &str) -> Result<Matrix, JsonError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(JsonError::Invalid(format!("{} must be {}x{}", what, n, n)));
    }
    Ok(Matrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn basis_matrix(vectors: &[Vec<f64>], n: usize, what: &str) -> Result<Matrix, JsonError> {
    if vectors.iter().any(|v| v.len() != n) {
        return Err(JsonError::Invalid(format!("every {} vector needs {} entries", what, n)));
    }
    Ok(Matrix::from_fn(n, vectors.len(), |i, j| vectors[j][i]))
}

pub fn state_doc(s: &QuadState) -> StateDoc {
    StateDoc {
        n: s.dim(),
        d_basis: columns(s.fibre().basis()),
        mu: snapped(s.mean()),
        sigma: rows(s.covariance()),
        score: Score::from_value(s.score()),
    }
}

pub fn state_from_doc(doc: &StateDoc) -> Result<QuadState, JsonError> {
    let n = doc.n;
    let score = doc.score.value()?;
    if score.is_infinite() {
        return Ok(QuadState::infeasible(n));
    }
    if doc.mu.len() != n {
        return Err(JsonError::Invalid(format!("mu must have {} entries", n)));
    }
    let fibre = Subspace::span(&basis_matrix(&doc.d_basis, n, "D_basis")?);
    let sigma = matrix_from_rows(&doc.sigma, n, "Sigma")?;
    QuadState::new(fibre, doc.mu.clone(), sigma, score).map_err(|e| JsonError::Invalid(e.to_string()))
}

pub fn rel_doc(f: &QuadRel) -> RelDoc {
    RelDoc {
        m: f.inputs(),
        n: f.outputs(),
        name: state_doc(f.name()),
    }
}

pub fn rel_from_doc(doc: &RelDoc) -> Result<QuadRel, JsonError> {
    QuadRel::from_name(doc.m, doc.n, state_from_doc(&doc.name)?).map_err(|e| JsonError::Invalid(e.to_string()))
}

pub fn aff_doc(r: &AffRel) -> AffRelDoc {
    AffRelDoc {
        m: r.inputs(),
        n: r.outputs(),
        basis: if r.is_empty() { Vec::new() } else { columns(r.subspace().basis()) },
        offset: snapped(r.offset()),
        empty: r.is_empty(),
    }
}

pub fn aff_from_doc(doc: &AffRelDoc) -> Result<AffRel, JsonError> {
    if doc.empty {
        return Ok(AffRel::empty(doc.m, doc.n));
    }
    let width = doc.m + doc.n;
    let subspace = Subspace::span(&basis_matrix(&doc.basis, width, "basis")?);
    AffRel::new(doc.m, doc.n, subspace, &doc.offset).map_err(|e| JsonError::Invalid(e.to_string()))
}

/// A relation from either a `{m, n, name}` or a bare state document
/// (read as a state `0 → n`).
pub fn parse_rel(text: &str) -> Result<QuadRel, JsonError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.get("name").is_some() {
        rel_from_doc(&serde_json::from_value(value)?)
    } else {
        Ok(QuadRel::state(state_from_doc(&serde_json::from_value(value)?)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gqa_core::diagram::parse_diagram;
    use gqa_core::quadrel::{effective_domain, interpret};

    fn rel(src: &str) -> QuadRel {
        interpret(&parse_diagram(src).unwrap()).unwrap()
    }

    #[test]
    fn state_round_trip() {
        let f = rel("(normal * any) ; (id(1) * scalar(2.0)) ; (copy * id(1))");
        let doc = rel_doc(&f);
        let back = rel_from_doc(&serde_json::from_str(&doc.to_json()).unwrap()).unwrap();
        assert!(back.approx_eq(&f, 1e-12));
        assert_eq!(rel_doc(&back).to_json(), doc.to_json());
    }

    #[test]
    fn field_names_and_order() {
        let text = state_doc(&QuadState::gaussian(vec![1.0], Matrix::identity(1)).unwrap()).to_json();
        let keys: Vec<usize> = ["\"n\"", "\"D_basis\"", "\"mu\"", "\"Sigma\"", "\"score\""]
            .iter()
            .map(|k| text.find(k).unwrap())
            .collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]), "{}", text);
    }

    #[test]
    fn infeasible_score_is_a_string() {
        let doc = state_doc(&QuadState::infeasible(2));
        assert!(doc.to_json().contains("\"inf\""));
        let back = state_from_doc(&doc).unwrap();
        assert!(back.is_infeasible() && back.dim() == 2);
    }

    #[test]
    fn equal_states_give_equal_bytes() {
        let a = rel("(normal * normal) ; add");
        let b = rel(&format!("normal ; scalar({:?})", 2f64.sqrt()));
        assert_eq!(rel_doc(&a).to_json(), rel_doc(&b).to_json());
    }

    #[test]
    fn affine_relation_round_trip() {
        let r = effective_domain(&rel("id(1) * (one ; cozero)"));
        assert!(aff_doc(&r).empty);
        let s = effective_domain(&rel("(one ; scalar(3.0)) * any"));
        let back = aff_from_doc(&serde_json::from_str(&aff_doc(&s).to_json()).unwrap()).unwrap();
        assert!(back.approx_eq(&s, 1e-12));
    }

    #[test]
    fn bad_documents_are_rejected() {
        assert!(parse_rel("{").is_err());
        assert!(parse_rel(r#"{"n": 2, "D_basis": [], "mu": [1.0], "Sigma": [[1,0],[0,1]], "score": 0}"#).is_err());
        assert!(parse_rel(r#"{"n": 1, "D_basis": [], "mu": [1.0], "Sigma": [[1]], "score": "lots"}"#).is_err());
        let ok = parse_rel(r#"{"n": 1, "D_basis": [], "mu": [1.0], "Sigma": [[1]], "score": 0.5}"#).unwrap();
        assert_eq!(ok.eval(&[], &[1.0]).unwrap(), 0.5);
    }
}
