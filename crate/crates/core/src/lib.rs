//! Exact string-diagram engine for Gaussian maps and quadratic relations.
//!
//! Diagrams over the copy/add/normal generators (and their mirror images)
//! are interpreted either causally, as affine maps with Gaussian noise
//! ([`gauss`]), or relationally, as nonnegative partial quadratic functions
//! composed by infimization ([`quadrel`]). Every relational value is stored
//! as a canonical [`quadstate::QuadState`], so deciding equality of two
//! diagrams reduces to comparing normal forms.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod axioms;
pub mod diagram;
pub mod gauss;
pub mod gpl;
pub mod linalg;
pub mod ols;
pub mod oracle;
pub mod quadrel;
pub mod quadstate;

pub use diagram::{Diagram, DiagramError, Generator};
pub use gauss::{GaussError, GaussMap};
pub use gpl::{GplError, GplTerm, GplType, InferenceResult};

pub use linalg::{LinalgError, Matrix, Subspace, TOL};
pub use quadrel::{AffRel, QuadRel};
pub use quadstate::QuadState;
