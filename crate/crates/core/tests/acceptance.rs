//! Acceptance suite. Each test checks one exit criterion at its pinned
//! tolerance and prints a single `criterion N: PASS|FAIL` line.
//!
//! Run with `cargo test -p pq-baskakov --test acceptance -- --nocapture --test-threads=1`.

use std::process::Command;
use std::time::Instant;

use pq_baskakov::analysis::{
    convergence_study, squared_argument_bound, squared_argument_radicand, Grid, ModulusProfile, Schedule,
    SquaredArgument,
};
use pq_baskakov::baskakov::{eval_series, moment_closed, TruncationPolicy};
use pq_baskakov::king::{bound_audit, eval_king, r_n};
use pq_baskakov::pq::{ln_pq_rising_power, pq_binomial, pq_derivative, pq_integer, pq_rising_power, PQParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NS: [u32; 4] = [1, 2, 5, 10];
const XS: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 5.0];
const PAIRS: [(f64, f64); 3] = [(1.0, 0.9), (0.9, 0.8), (0.99, 0.98)];

type Named = (&'static str, fn(f64) -> f64);

fn report(id: u32, pass: bool, detail: impl AsRef<str>) {
    println!(
        "criterion {id}: {} {}",
        if pass { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
    assert!(pass, "criterion {id} failed: {}", detail.as_ref());
}

fn grid_points() -> impl Iterator<Item = (u32, f64, PQParams)> {
    NS.into_iter().flat_map(|n| {
        XS.into_iter().flat_map(move |x| {
            PAIRS
                .into_iter()
                .map(move |(p, q)| (n, x, PQParams::new(p, q).unwrap()))
        })
    })
}

#[test]
fn criterion_1_plain_moments() {
    const TOL: f64 = 1e-8;
    let policy = TruncationPolicy::default();
    let monomials: [fn(f64) -> f64; 3] = [|_| 1.0, |t| t, |t| t * t];
    let mut worst = 0.0_f64;
    for (n, x, pq) in grid_points() {
        for (i, f) in monomials.iter().enumerate() {
            let series = eval_series(f, n, x, pq, &policy).unwrap().value;
            let closed = moment_closed(i as u32, n, x, pq).unwrap();
            worst = worst.max((series - closed).abs());
        }
    }
    report(
        1,
        worst <= TOL,
        format!("max |series - closed| = {worst:e} (tol {TOL:e}, 180 checks)"),
    );
}

#[test]
fn criterion_2_square_preservation() {
    const TOL: f64 = 1e-8;
    let policy = TruncationPolicy::default();
    let (mut worst_sq, mut worst_lin) = (0.0_f64, 0.0_f64);
    for (n, x, pq) in grid_points() {
        let sq = eval_king(&|t: f64| t * t, n, x, pq, &policy).unwrap().value;
        let lin = eval_king(&|t: f64| t, n, x, pq, &policy).unwrap().value;
        worst_sq = worst_sq.max((sq - x * x).abs());
        worst_lin = worst_lin.max((lin - r_n(x, n, pq).unwrap()).abs());
    }
    report(
        2,
        worst_sq <= TOL && worst_lin <= TOL,
        format!("max |B*(t^2) - x^2| = {worst_sq:e}, max |B*(t) - r_n| = {worst_lin:e} (tol {TOL:e})"),
    );
}

#[test]
fn criterion_3_partition_of_unity() {
    const TOL: f64 = 1e-12;
    const MAX_TERMS: usize = 10_000;
    let policy = TruncationPolicy::default();
    let mut min_weight = f64::INFINITY;
    let mut max_terms = 0;
    let mut all_converged = true;
    for (n, x, pq) in grid_points() {
        for base in [x, r_n(x, n, pq).unwrap()] {
            let e = eval_series(&|_: f64| 1.0, n, base, pq, &policy).unwrap();
            all_converged &= e.converged;
            min_weight = min_weight.min(e.accumulated_weight);
            max_terms = max_terms.max(e.terms_used);
        }
    }
    report(
        3,
        all_converged && min_weight >= 1.0 - TOL && max_terms < MAX_TERMS,
        format!(
            "min accumulated weight = 1 - {:e}, max terms_used = {max_terms}",
            1.0 - min_weight
        ),
    );
}

#[test]
fn criterion_4_central_moment_equalities() {
    const TOL: f64 = 1e-8;
    const FLOOR: f64 = -1e-12;
    let policy = TruncationPolicy::default();
    let (mut worst_first, mut worst_second) = (0.0_f64, 0.0_f64);
    let mut min_second = f64::INFINITY;
    for (n, x, pq) in grid_points() {
        let r = r_n(x, n, pq).unwrap();
        let first = eval_king(&move |t: f64| t - x, n, x, pq, &policy).unwrap().value;
        let second = eval_king(&move |t: f64| (t - x) * (t - x), n, x, pq, &policy)
            .unwrap()
            .value;
        worst_first = worst_first.max((first - (r - x)).abs());
        let closed_second = 2.0 * x * x - 2.0 * x * r;
        worst_second = worst_second.max((second - closed_second).abs());
        min_second = min_second.min(second).min(closed_second);
    }
    report(
        4,
        worst_first <= TOL && worst_second <= TOL && min_second >= FLOOR,
        format!(
            "max gap first = {worst_first:e}, second = {worst_second:e} (tol {TOL:e}); min second moment = {min_second:e}"
        ),
    );
}

#[test]
fn criterion_5_bound_audit() {
    // values stated to four decimals; accept anything that rounds to them
    const DIGITS: f64 = 5e-5;
    let bad = PQParams::new(0.9, 0.8).unwrap();
    let good = PQParams::new(0.99, 0.98).unwrap();
    let violated = bound_audit(&[2], &[bad], &[1.0]).unwrap()[0];
    let held = bound_audit(&[10], &[good], &[1.0]).unwrap()[0];
    let values_ok = (violated.first_actual_abs - 0.3570).abs() <= DIGITS
        && (violated.first_bound_claimed - 0.1104).abs() <= DIGITS
        && (violated.second_actual - 0.7141).abs() <= DIGITS
        && (violated.second_bound_claimed - 0.5526).abs() <= DIGITS;
    let flags_ok = violated.first_violated && violated.second_violated && !held.first_violated && !held.second_violated;
    report(
        5,
        values_ok && flags_ok,
        format!(
            "(2,0.9,0.8,1): |first| {:.4} vs {:.4}, second {:.4} vs {:.4}, both violated; (10,0.99,0.98,1): both hold = {}",
            violated.first_actual_abs,
            violated.first_bound_claimed,
            violated.second_actual,
            violated.second_bound_claimed,
            !held.first_violated && !held.second_violated
        ),
    );
}

#[test]
fn criterion_6_weighted_convergence() {
    const FINAL_LIMIT: f64 = 0.05;
    // closed-form r_n on [0, 50] step 0.01, cross-checked against an
    // independent numpy evaluation
    const BASELINE: [f64; 4] = [
        0.142_243_369_921_494_75,
        0.050_574_545_078_844_0,
        0.014_262_112_066_142_727,
        0.003_686_972_111_631_753,
    ];
    let start = Instant::now();
    let grid: Grid = "0:50:0.01".parse().unwrap();
    let rows = convergence_study(&Schedule::near_one(), &[4, 16, 64, 256], &grid).unwrap();
    let exact_zero = rows.iter().all(|r| r.norm_e0 == 0.0 && r.norm_e2 == 0.0);
    let decreasing = rows.windows(2).all(|w| w[1].norm_e1 < w[0].norm_e1);
    let last = rows.last().unwrap().norm_e1;
    let baseline_ok = rows
        .iter()
        .zip(BASELINE)
        .all(|(r, b)| (r.norm_e1 - b).abs() <= 1e-12 * b);
    let fast = start.elapsed().as_secs_f64() < 60.0;
    let norms: Vec<String> = rows.iter().map(|r| format!("{:.6}", r.norm_e1)).collect();
    report(
        6,
        exact_zero && decreasing && last < FINAL_LIMIT && baseline_ok && fast,
        format!(
            "norm_e1 = [{}], final < {FINAL_LIMIT}, e0/e2 exactly 0",
            norms.join(", ")
        ),
    );
}

#[test]
fn criterion_7_squared_argument_bound() {
    let policy = TruncationPolicy::default();
    let modulus_grid: Grid = "0:10:0.001".parse().unwrap();
    let schedule = Schedule::near_one();
    let funcs: [Named; 3] = [
        ("e1", |t| t),
        ("sin x^2", |t| (t * t).sin()),
        ("1/(1+x^2)", |t| 1.0 / (1.0 + t * t)),
    ];
    let xs: Vec<f64> = (1..=16).map(|i| 0.25 * f64::from(i)).collect();
    let mut violations = Vec::new();
    let mut min_margin = f64::INFINITY;
    let mut checks = 0;
    for n in [10, 50] {
        let pq = schedule.params(n).unwrap();
        let max_delta = xs
            .iter()
            .map(|&x| squared_argument_radicand(n, x, pq).unwrap().sqrt())
            .fold(0.0, f64::max);
        for (name, f) in &funcs {
            let profile = ModulusProfile::first_order(&SquaredArgument(f), &modulus_grid, max_delta).unwrap();
            for &x in &xs {
                let bound = 2.0
                    * profile
                        .omega(squared_argument_radicand(n, x, pq).unwrap().sqrt())
                        .unwrap();
                let lhs = (eval_king(f, n, x, pq, &policy).unwrap().value - f(x)).abs();
                checks += 1;
                min_margin = min_margin.min(bound - lhs);
                if lhs > bound {
                    violations.push(format!("{name} n={n} x={x}: {lhs} > {bound}"));
                }
            }
        }
    }
    // the profile shortcut is the same number squared_argument_bound computes
    let pq = schedule.params(10).unwrap();
    let f = |t: f64| (t * t).sin();
    let direct = squared_argument_bound(&f, 10, 1.5, pq, &modulus_grid).unwrap();
    let profile = ModulusProfile::first_order(&SquaredArgument(&f), &modulus_grid, 2.0).unwrap();
    let same = direct
        == 2.0
            * profile
                .omega(squared_argument_radicand(10, 1.5, pq).unwrap().sqrt())
                .unwrap();
    report(
        7,
        violations.is_empty() && same,
        format!("{checks} checks, min(bound - lhs) = {min_margin:.6}; violations: {violations:?}"),
    );
}

#[test]
fn criterion_8_figure_reproduction() {
    // first verified run, cross-checked with an independent numpy/mpmath evaluation
    const SUP_PLAIN: f64 = 0.899_748_017_510_105_9;
    const SUP_KING: f64 = 0.965_542_806_612_405_4;
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_pqbask"))
        .args([
            "figure", "--f", "sin(x^2)", "--n", "2", "--p", "0.9", "--q", "0.8", "--range", "0:2:0.01",
        ])
        .output()
        .unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let data_rows = text.lines().skip(1).filter(|l| !l.starts_with('#')).count();
    let summary = text.lines().find(|l| l.starts_with("# ")).unwrap();
    let field = |key: &str| -> f64 {
        summary[2..]
            .split(',')
            .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
            .unwrap()
            .parse()
            .unwrap()
    };
    let (plain, king) = (field("sup_err_plain"), field("sup_err_king"));
    let baseline_ok = (plain - SUP_PLAIN).abs() <= 1e-9 && (king - SUP_KING).abs() <= 1e-9;
    report(
        8,
        data_rows == 201 && baseline_ok && elapsed < 1.0 && king < plain,
        format!(
            "{data_rows} rows in {elapsed:.3}s; sup|err_plain| = {plain:.6}, sup|err_king| = {king:.6}; \
             modified operator better on [0,2]: {}",
            king < plain
        ),
    );
}

#[test]
fn criterion_9_pq_core_properties() {
    const DRAWS: usize = 200;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_2016);
    let mut failures: Vec<String> = Vec::new();
    let mut qx_variant_refuted = 0;
    let mut fail = |what: &str, detail: String| failures.push(format!("{what}: {detail}"));

    for draw in 0..DRAWS {
        let p: f64 = rng.gen_range(0.05..=1.0);
        let q: f64 = p * rng.gen_range(0.01..0.95);
        let pq = PQParams::new(p, q).unwrap();
        let n: u32 = rng.gen_range(0..=50);

        // sum form against the quotient definition
        let lhs = pq_integer(n, pq) * (p - q);
        let rhs = p.powi(n as i32) - q.powi(n as i32);
        if (lhs - rhs).abs() > 1e-12 * p.powi(n as i32).max(f64::MIN_POSITIVE) {
            fail("sum form", format!("draw {draw}: n={n} p={p} q={q}: {lhs} vs {rhs}"));
        }

        // [n+1] = p[n] + q^n = q[n] + p^n
        let next = pq_integer(n + 1, pq);
        let a = p * pq_integer(n, pq) + q.powi(n as i32);
        let b = q * pq_integer(n, pq) + p.powi(n as i32);
        if (next - a).abs() > 1e-12 * next || (next - b).abs() > 1e-12 * next {
            fail("recurrence", format!("draw {draw}: n={n}: {next} {a} {b}"));
        }

        let nb = n % 31;
        for k in 0..=nb {
            let c1 = pq_binomial(nb, k, pq).unwrap();
            let c2 = pq_binomial(nb, nb - k, pq).unwrap();
            if (c1 - c2).abs() > 1e-12 * c1.abs().max(c2.abs()) {
                fail("binomial symmetry", format!("draw {draw}: ({nb},{k}) {c1} vs {c2}"));
            }
        }

        let nr = rng.gen_range(0..=200);
        let x: f64 = rng.gen_range(0.0..10.0);
        // the direct product may leave the f64 range for small p; the
        // comparison applies where it is representable
        let direct = pq_rising_power(x, nr, pq).unwrap();
        let ln = ln_pq_rising_power(x, nr, pq).unwrap();
        if !ln.is_finite() || direct < 0.0 || (direct.is_normal() && (direct - ln.exp()).abs() > 1e-10 * direct) {
            fail(
                "rising power",
                format!("draw {draw}: x={x} n={nr}: {direct} vs exp({ln})"),
            );
        }

        let nm = n % 11;
        for x in [0.5, 1.0, 2.0] {
            let d = pq_derivative(&|t: f64| t.powi(nm as i32), x, pq).unwrap();
            let law = pq_integer(nm, pq) * x.powi(nm as i32 - 1);
            if (d - law).abs() > 1e-10 * law.abs().max(1e-300) && !(law == 0.0 && d == 0.0) {
                fail("monomial law", format!("draw {draw}: n={nm} x={x}: {d} vs {law}"));
            }
        }

        // Leibniz rule D(uv)(x) = D(u)(x) v(qx) + u(px) D(v)(x)
        let deg_u = rng.gen_range(0..=4);
        let deg_v = rng.gen_range(0..=4);
        let cu: Vec<f64> = (0..=deg_u).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let cv: Vec<f64> = (0..=deg_v).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let u = |t: f64| cu.iter().rev().fold(0.0, |acc, c| acc * t + c);
        let v = |t: f64| cv.iter().rev().fold(0.0, |acc, c| acc * t + c);
        let x: f64 = rng.gen_range(0.25..3.0);
        let duv = pq_derivative(&|t: f64| u(t) * v(t), x, pq).unwrap();
        let du = pq_derivative(&u, x, pq).unwrap();
        let dv = pq_derivative(&v, x, pq).unwrap();
        let leibniz = du * v(q * x) + u(p * x) * dv;
        let scale = (du * v(q * x)).abs() + (u(p * x) * dv).abs();
        if (duv - leibniz).abs() > 1e-10 * scale.max(1e-300) {
            fail("product rule", format!("draw {draw}: {duv} vs {leibniz}"));
        }
        let qx_variant = du * v(q * x) + u(q * x) * dv;
        if (duv - qx_variant).abs() > 1e-10 * scale.max(1e-300) {
            qx_variant_refuted += 1;
        }
    }
    // u = v = t at x = 1: D(t^2) = p + q, the u(qx) variant gives 2q
    let pq = PQParams::new(0.9, 0.8).unwrap();
    let d = pq_derivative(&|t: f64| t * t, 1.0, pq).unwrap();
    let counterexample = (d - 1.7).abs() < 1e-12 && (d - 1.6).abs() > 0.09;

    report(
        9,
        failures.is_empty() && counterexample,
        format!(
            "{DRAWS} draws; failures: {failures:?}; variant with u(qx) in place of u(px) fails on {qx_variant_refuted} draws"
        ),
    );
}
