//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits non-zero if any fails. Randomized criteria use fixed seeds.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use gqa_cli::{run, Command, Options};
use gqa_core::axioms::{check_all, ANGLES, SCALARS};
use gqa_core::diagram::{matrix_diagram, normals, parse_diagram, Diagram};
use gqa_core::gauss::{compose_gauss, interpret_causal, Sampler};
use gqa_core::linalg::{kernel, Matrix};
use gqa_core::ols::{solve_ols, LeastSquaresProblem};
use gqa_core::oracle::{grid_infimize, GridSpec};
use gqa_core::quadrel::{compose_rel, functor_l, interpret};
use gqa_core::quadstate::states_equal;
use gqa_core::{QuadRel, QuadState};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn within_limit(v: Verdict, elapsed: Duration, limit: Option<Duration>) -> Verdict {
    match limit {
        Some(l) if elapsed >= l => verdict(false, format!("{}; too slow, limit {:?}", v.detail, l)),
        _ => v,
    }
}

const NOISY: &str = "let x = 10 * normal() in let y = x + 5 * normal() in (y =:= 40); x";

fn noisy_measurement() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("noisy.gpl");
    std::fs::write(&path, NOISY).unwrap();
    let start = Instant::now();
    let opts = Options {
        json: true,
        ..Options::default()
    };
    let out = match run(&Command::Infer { gpl_file: path }, &opts) {
        Ok(o) => o,
        Err(e) => return verdict(false, e.to_string()),
    };
    let elapsed = start.elapsed();
    let doc: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    let mean = doc["posterior"]["mu"][0].as_f64().unwrap_or(f64::NAN);
    let var = doc["posterior"]["Sigma"][0][0].as_f64().unwrap_or(f64::NAN);
    let score = doc["score"].as_f64().unwrap_or(f64::NAN);
    let ok = (mean - 32.0).abs() <= 1e-9 && (var - 20.0).abs() <= 1e-9 && (score - 6.4).abs() <= 1e-9;
    within_limit(
        verdict(ok, format!("mean {}, variance {}, score {}, {:?}", mean, var, score, elapsed)),
        elapsed,
        Some(Duration::from_millis(100)),
    )
}

fn sum_of_normals() -> Verdict {
    let f = interpret(&parse_diagram("(normal*normal);add").unwrap()).unwrap();
    let target = QuadState::gaussian(vec![0.0], Matrix::from_rows(&[[2.0]])).unwrap();
    let equal = f.inputs() == 0 && states_equal(f.name(), &target, 1e-9);
    let at_two = f.eval(&[], &[2.0]).unwrap();
    verdict(
        equal && (at_two - 1.0).abs() <= 1e-12,
        format!("equal to N(0, 2): {}, value at 2: {}", equal, at_two),
    )
}

fn axiom_suite() -> Verdict {
    let sampled = SCALARS == [-2.0, -1.0, 0.5, 1.0, 3.0] && ANGLES == [0.0, PI / 6.0, PI / 4.0, PI / 2.0, 2.5];
    let outcomes = check_all(1e-9);
    let failed: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| format!("{} {}", o.law, o.params))
        .collect();
    verdict(
        sampled && failed.is_empty(),
        format!("{} instances, {} failed {:?}", outcomes.len(), failed.len(), failed),
    )
}

fn to_na(a: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)])
}

fn least_squares() -> Verdict {
    let mut r = common::rng(4);
    let (mut worst_x, mut worst_res, mut gridded) = (0f64, 0f64, 0);
    let mut failures = Vec::new();
    for case in 0..100 {
        let n = r.random_range(1..=8);
        let m = r.random_range(1..=4);
        let a = common::matrix(&mut r, n, m, 2.0);
        let y = common::vector(&mut r, n, 5.0);
        let p = LeastSquaresProblem::new(a.clone(), y.clone()).unwrap();
        let s = solve_ols(&p);
        let reference = to_na(&a).pseudo_inverse(1e-13).unwrap() * DVector::from_vec(y);
        for i in 0..m {
            let err = (s.estimate[i] - reference[i]).abs() / reference[i].abs().max(1.0);
            worst_x = worst_x.max(err);
            if err > 1e-8 {
                failures.push(format!("case {} x[{}]", case, i));
            }
        }
        if m <= 2 {
            gridded += 1;
            let radius = 2.0 * reference.amax().max(5.0);
            let grid = grid_infimize(|x| p.cost(x), &GridSpec::cube(m, radius, 41, 3));
            let err = (grid - s.residual_cost).abs() / s.residual_cost.abs().max(1.0);
            worst_res = worst_res.max(err);
            if err > 1e-3 {
                failures.push(format!("case {} residual {} vs grid {}", case, s.residual_cost, grid));
            }
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "worst estimate error {:.1e}, worst residual error {:.1e} over {} gridded, failures {:?}",
            worst_x, worst_res, gridded, failures
        ),
    )
}

fn conservativity() -> Verdict {
    let mut r = common::rng(5);
    let mut failures = Vec::new();
    let mut deepest = 0;
    for case in 0..200 {
        let dom = r.random_range(0..=3);
        let d = common::diagram(&mut r, dom, true);
        deepest = deepest.max(d.depth());
        let causal = interpret_causal(&d).unwrap();
        if !functor_l(&causal).approx_eq(&interpret(&d).unwrap(), 1e-8) {
            failures.push(format!("case {}: {}", case, d));
        }
    }
    verdict(failures.is_empty(), format!("200 diagrams, max depth {}, failures {:?}", deepest, failures))
}

fn composition_oracle() -> Verdict {
    let mut r = common::rng(6);
    let mut worst = 0f64;
    let mut failures = Vec::new();
    for case in 0..50 {
        let k = r.random_range(1..=2);
        let m = r.random_range(0..=4 - k);
        let n = r.random_range(0..=4 - k - m);
        let f = QuadRel::from_name(m, k, common::finite_state(&mut r, m + k)).unwrap();
        let g = QuadRel::from_name(k, n, common::finite_state(&mut r, k + n)).unwrap();
        let h = compose_rel(&f, &g).unwrap();
        let (fe, ge) = (f.name().evaluator(), g.name().evaluator());
        for _ in 0..5 {
            let x = common::vector(&mut r, m, 1.5);
            let z = common::vector(&mut r, n, 1.5);
            let want = grid_infimize(
                |y| {
                    let left: Vec<f64> = x.iter().chain(y).copied().collect();
                    let right: Vec<f64> = y.iter().chain(&z).copied().collect();
                    fe.eval(&left).unwrap() + ge.eval(&right).unwrap()
                },
                &GridSpec::cube(k, 30.0, 41, 3),
            );
            let got = h.eval(&x, &z).unwrap();
            let err = (got - want).abs() / want.abs().max(1.0);
            worst = worst.max(err);
            if !close(got, want, 1e-3) {
                failures.push(format!("case {}: {} vs grid {}", case, got, want));
            }
        }
    }
    verdict(failures.is_empty(), format!("250 probes, worst error {:.1e}, failures {:?}", worst, failures))
}

fn encoding_uniqueness() -> Verdict {
    let mut r = common::rng(7);
    let mut failures = Vec::new();
    for case in 0..100 {
        let n = r.random_range(1..=4);
        let k = r.random_range(1..=4);
        let l = common::matrix(&mut r, n, k, 2.0);
        let q = common::orthogonal(&mut r, k);
        let state = |m: &Matrix| interpret(&Diagram::seq(normals(k), matrix_diagram(m)).unwrap()).unwrap();
        if !state(&l).approx_eq(&state(&(&l * &q)), 1e-9) {
            failures.push(case);
        }
    }
    verdict(failures.is_empty(), format!("100 pairs, failures {:?}", failures))
}

fn elimination() -> Verdict {
    let mut r = common::rng(8);
    let (mut satisfying, mut violating, mut inconsistent) = (0, 0, 0);
    let mut failures = Vec::new();
    for case in 0..100 {
        let n = r.random_range(1..=4);
        let s = common::state(&mut r, n);
        let rows = r.random_range(1..=4);
        let rank = r.random_range(1..=rows.min(n));
        let b = &common::matrix(&mut r, rows, rank, 1.5) * &common::matrix(&mut r, rank, n, 1.5);
        let z = common::vector(&mut r, n, 2.0);
        let mut v = b.mul_vec(&z);
        let consistent = rank == rows || r.random_bool(0.6);
        if !consistent {
            // push v out of the column space of B
            let left_null = kernel(&b.transpose());
            let w = left_null.project(&common::vector(&mut r, rows, 1.0)).unwrap();
            v = v.iter().zip(&w).map(|(a, d)| a + d).collect();
        }
        let c = s.condition_zero(&b, &v).unwrap();
        if !consistent {
            inconsistent += 1;
            if !c.is_infeasible() {
                failures.push(format!("case {}: inconsistent system not infeasible", case));
            }
            continue;
        }
        let free = kernel(&b);
        let eval_c = c.evaluator();
        let eval_s = s.evaluator();
        for _ in 0..3 {
            let x: Vec<f64> = z
                .iter()
                .zip(free.project(&common::vector(&mut r, n, 2.0)).unwrap())
                .map(|(a, d)| a + d)
                .collect();
            satisfying += 1;
            let (got, want) = (eval_c.eval(&x).unwrap(), eval_s.eval(&x).unwrap());
            if !close(got, want, 1e-8) {
                failures.push(format!("case {}: {} vs {}", case, got, want));
            }
            let off = b.transpose().mul_vec(&common::vector(&mut r, rows, 1.0));
            if off.iter().map(|d| d * d).sum::<f64>() > 1e-4 {
                violating += 1;
                let bad: Vec<f64> = x.iter().zip(&off).map(|(a, d)| a + d).collect();
                if eval_c.eval(&bad).unwrap() != f64::INFINITY {
                    failures.push(format!("case {}: violating probe is finite", case));
                }
            }
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "{} satisfying and {} violating probes, {} inconsistent systems, failures {:?}",
            satisfying, violating, inconsistent, failures
        ),
    )
}

fn monte_carlo() -> Verdict {
    const SAMPLES: usize = 100_000;
    let mut r = common::rng(9);
    let mut worst = 0f64;
    let mut failures = Vec::new();
    for case in 0..20u64 {
        let (a, b, c) = (r.random_range(0..=3), r.random_range(1..=3), r.random_range(1..=3));
        let f = common::gauss_map(&mut r, a, b);
        let g = common::gauss_map(&mut r, b, c);
        let h = compose_gauss(&f, &g).unwrap();
        let x = common::vector(&mut r, a, 1.0);
        // two-stage sampling, independent of the composition formula
        let mut first = Sampler::new(&f, 2 * case).unwrap();
        let mut second = Sampler::new(&g, 2 * case + 1).unwrap();
        let draws: Vec<Vec<f64>> = (0..SAMPLES)
            .map(|_| second.draw(&first.draw(&x).unwrap()).unwrap())
            .collect();
        let mut mean = vec![0.0; c];
        for d in &draws {
            for i in 0..c {
                mean[i] += d[i] / SAMPLES as f64;
            }
        }
        let mut cov = Matrix::zeros(c, c);
        for d in &draws {
            for i in 0..c {
                for j in 0..c {
                    cov[(i, j)] += (d[i] - mean[i]) * (d[j] - mean[j]) / (SAMPLES - 1) as f64;
                }
            }
        }
        let want_mean: Vec<f64> = h.matrix().mul_vec(&x).iter().zip(h.offset()).map(|(u, v)| u + v).collect();
        let sigma = h.covariance();
        let nf = SAMPLES as f64;
        for i in 0..c {
            let band = 5.0 * (sigma[(i, i)] / nf).sqrt() + 1e-9;
            let z = (mean[i] - want_mean[i]).abs() / band * 5.0;
            worst = worst.max(z);
            if (mean[i] - want_mean[i]).abs() > band {
                failures.push(format!("case {} mean[{}]", case, i));
            }
            for j in 0..c {
                let band = 5.0 * ((sigma[(i, i)] * sigma[(j, j)] + sigma[(i, j)].powi(2)) / (nf - 1.0)).sqrt() + 1e-9;
                let z = (cov[(i, j)] - sigma[(i, j)]).abs() / band * 5.0;
                worst = worst.max(z);
                if (cov[(i, j)] - sigma[(i, j)]).abs() > band {
                    failures.push(format!("case {} cov[{},{}]", case, i, j));
                }
            }
        }
    }
    verdict(
        failures.is_empty(),
        format!("20 pairs, largest deviation {:.2} sigma, failures {:?}", worst, failures),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Verdict, Option<Duration>);
    let criteria: [Criterion; 9] = [
        ("noisy-measurement inference", noisy_measurement, None),
        ("sum of two standard normals", sum_of_normals, None),
        ("equational laws", axiom_suite, Some(Duration::from_secs(5))),
        ("least squares", least_squares, Some(Duration::from_secs(10))),
        ("causal and relational semantics agree", conservativity, None),
        ("composition against grid search", composition_oracle, None),
        ("rotated noise encodings", encoding_uniqueness, None),
        ("constraint elimination", elimination, None),
        ("Monte-Carlo moments", monte_carlo, Some(Duration::from_secs(30))),
    ];
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        let elapsed = start.elapsed();
        let v = within_limit(v, elapsed, *limit);
        if !v.passed {
            failed += 1;
        }
        println!(
            "criterion {} {}: {} ({}; {:.2?})",
            i + 1,
            name,
            if v.passed { "PASS" } else { "FAIL" },
            v.detail,
            elapsed
        );
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
