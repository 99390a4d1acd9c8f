//! Seeded random generators shared by the integration tests.
#![allow(dead_code)]

use gqa_core::diagram::{Diagram, Generator};
use gqa_core::linalg::{Matrix, Subspace};
use gqa_core::{GaussMap, QuadRel, QuadState};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const MAX_WIRES: usize = 4;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn vector(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-r..=r)).collect()
}

pub fn matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, r: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-r..=r))
}

/// A scalar from a small set that includes 0 and ±1, so degenerate cases come up.
pub fn scalar(rng: &mut ChaCha8Rng) -> f64 {
    const PICKS: [f64; 8] = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 3.0];
    PICKS[rng.random_range(0..PICKS.len())]
}

/// `L·Lᵀ` with `L` of random rank in `min_rank..=n`.
pub fn psd(rng: &mut ChaCha8Rng, n: usize, min_rank: usize) -> Matrix {
    let r = rng.random_range(min_rank.min(n)..=n);
    let l = matrix(rng, n, r, 1.5);
    &l * &l.transpose()
}

/// Random state: fibre of random rank, possibly singular covariance.
pub fn state(rng: &mut ChaCha8Rng, n: usize) -> QuadState {
    let k = rng.random_range(0..=n);
    let fibre = Subspace::span(&matrix(rng, n, k, 1.0));
    let mean = vector(rng, n, 3.0);
    let cov = psd(rng, n, 0);
    let score = rng.random_range(0.0..5.0);
    QuadState::new(fibre, mean, cov, score).unwrap()
}

/// Random state that is finite everywhere and strictly convex off its fibre.
pub fn finite_state(rng: &mut ChaCha8Rng, n: usize) -> QuadState {
    let k = rng.random_range(0..=n.saturating_sub(1));
    let fibre = Subspace::span(&matrix(rng, n, k, 1.0));
    let mean = vector(rng, n, 2.0);
    let cov = &psd(rng, n, 0) + &Matrix::identity(n).scale(0.5);
    let score = rng.random_range(0.0..3.0);
    QuadState::new(fibre, mean, cov, score).unwrap()
}

pub fn gauss_map(rng: &mut ChaCha8Rng, m: usize, n: usize) -> GaussMap {
    GaussMap::new(matrix(rng, n, m, 2.0), vector(rng, n, 2.0), psd(rng, n, 0)).unwrap()
}

pub fn quad_rel(rng: &mut ChaCha8Rng, m: usize, n: usize) -> QuadRel {
    QuadRel::from_name(m, n, state(rng, m + n)).unwrap()
}

pub fn orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let a = nalgebra::DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let q = a.qr().q();
    Matrix::from_fn(n, n, |i, j| q[(i, j)])
}

fn pick_generator(rng: &mut ChaCha8Rng, causal: bool) -> Generator {
    let count = if causal { 7 } else { 11 };
    match rng.random_range(0..count) {
        0 => Generator::Copy,
        1 => Generator::Discard,
        2 => Generator::Add,
        3 => Generator::Zero,
        4 => Generator::Scalar(scalar(rng)),
        5 => Generator::One,
        6 => Generator::Normal,
        7 => Generator::Merge,
        8 => Generator::Any,
        9 => Generator::Coadd,
        _ => Generator::Cozero,
    }
}

/// One generator (or a swap) padded with identities to take `dom` wires.
fn layer(rng: &mut ChaCha8Rng, dom: usize, causal: bool) -> Diagram {
    for _ in 0..32 {
        if dom >= 2 && rng.random_bool(0.15) {
            let at = rng.random_range(0..=dom - 2);
            return pad(Diagram::swap(), at, dom - 2 - at);
        }
        let g = pick_generator(rng, causal);
        let (i, o) = g.arity();
        if i <= dom && dom - i + o <= MAX_WIRES {
            let at = rng.random_range(0..=dom - i);
            return pad(Diagram::gen(g), at, dom - i - at);
        }
    }
    Diagram::id(dom)
}

fn pad(core: Diagram, left: usize, right: usize) -> Diagram {
    let mut d = core;
    if left > 0 {
        d = Diagram::par(Diagram::id(left), d);
    }
    if right > 0 {
        d = Diagram::par(d, Diagram::id(right));
    }
    d
}

fn grow(rng: &mut ChaCha8Rng, dom: usize, budget: usize, causal: bool) -> Diagram {
    if budget == 0 || rng.random_bool(0.25) {
        return layer(rng, dom, causal);
    }
    if rng.random_bool(0.6) {
        let a = grow(rng, dom, budget - 1, causal);
        let b = grow(rng, a.cod(), budget - 1, causal);
        Diagram::seq(a, b).unwrap()
    } else {
        let left = rng.random_range(0..=dom);
        let a = grow(rng, left, budget - 1, causal);
        let b = grow(rng, dom - left, budget - 1, causal);
        if a.cod() + b.cod() > MAX_WIRES {
            layer(rng, dom, causal)
        } else {
            Diagram::par(a, b)
        }
    }
}

/// Random diagram with at most four outputs at every step and depth at most 6.
pub fn diagram(rng: &mut ChaCha8Rng, dom: usize, causal: bool) -> Diagram {
    loop {
        let d = grow(rng, dom, 4, causal);
        if d.depth() <= 6 {
            return d;
        }
    }
}
