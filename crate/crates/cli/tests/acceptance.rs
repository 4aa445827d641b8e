//! Acceptance criteria, one test each. Every test prints a single
//! `[PRIMARY] criterion N ... PASS|FAIL` line to stderr (bypassing the test
//! harness capture) before asserting. A global lock serializes the tests
//! so the timed criterion measures one core.

use std::io::Write;
use std::process::Command;
use std::sync::{Mutex, MutexGuard};
use std::time::Instant;

use mixsmooth_core::combinatorics::binomial;
use mixsmooth_core::embedding::{
    check_holder_norm, check_pointwise, check_trace, convergence_study, corollary2_check, counterexample_run,
    kernel_normalization, pointwise_bound_constant_p1, pointwise_factor, CheckOptions, Mollifier,
};
use mixsmooth_core::gnl::{gnl_verify, GnlOptions};
use mixsmooth_core::jet::Program;
use mixsmooth_core::quadrature::{gauss_legendre, integrate_box, GridSpec};
use mixsmooth_core::rect::enumerate_subsets;
use mixsmooth_core::sampler::{random_boxes, PairSampler};
use mixsmooth_core::{gallery, parse, Expr, Rectangle, Verdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static LOCK: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict_line(n: u32, what: &str, ok: bool, detail: &str) {
    let status = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(
        std::io::stderr(),
        "[PRIMARY] criterion {n} {what} ... {status} ({detail})"
    );
}

/// The box a gallery member is checked on: its support when compact,
/// otherwise `[-1, 1]^n`.
fn home(g: &gallery::GalleryFunction) -> Rectangle {
    g.support
        .clone()
        .unwrap_or_else(|| Rectangle::cube(g.n, -1.0, 1.0).unwrap())
}

#[test]
fn criterion_01_gnl_identity() {
    let _g = serial();
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for n in 1..=4 {
        let bounds = Rectangle::cube(n, -1.0, 1.0).unwrap();
        for g in gallery::all(n) {
            let boxes = random_boxes(&bounds, 10, 1000 + n as u64, 0.1);
            let check = gnl_verify(&g.expr, &boxes, 1e-8, &GnlOptions::default()).unwrap();
            worst = worst.max(check.worst_relative_residual().unwrap_or(f64::INFINITY));
            if check.verdict != Verdict::Pass {
                failures.push(format!("{}: {}", g.id, check.verdict));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = failures.is_empty() && secs <= 60.0;
    verdict_line(
        1,
        "GNL identity",
        ok,
        &format!("200 boxes, worst relative residual {worst:.2e}, {secs:.1} s"),
    );
    assert!(failures.is_empty(), "{failures:?}");
    assert!(secs <= 60.0, "took {secs:.1} s");
}

#[test]
fn criterion_02_subset_count() {
    let _g = serial();
    let mut ok = true;
    for n in 1..=12usize {
        let subsets = enumerate_subsets(n).unwrap();
        ok &= subsets.len() == (1 << n) - 1;
        for k in 1..=n {
            let count = subsets.iter().filter(|s| s.len() == k).count() as u64;
            ok &= count == binomial(n as u64, k as u64);
        }
        let mut masks: Vec<u32> = subsets.iter().map(|s| s.mask()).collect();
        masks.sort_unstable();
        masks.dedup();
        ok &= masks.len() == subsets.len();
    }
    verdict_line(2, "sub-rectangle count", ok, "n = 1..12, exact");
    assert!(ok);
}

fn central(u: &Expr, x: &[f64], axes: &[usize], h: f64) -> f64 {
    let k = axes.len();
    let mut acc = 0.0;
    let mut y = x.to_vec();
    for signs in 0..1u32 << k {
        let mut sign = 1.0;
        for (b, &a) in axes.iter().enumerate() {
            if signs >> b & 1 == 1 {
                y[a] = x[a] + h;
            } else {
                y[a] = x[a] - h;
                sign = -sign;
            }
        }
        acc += sign * u.eval(&y).unwrap();
    }
    acc / (2.0 * h).powi(k as i32)
}

/// Central differences with two Richardson steps on `h, h/2, h/4`.
fn finite_difference(u: &Expr, x: &[f64], axes: &[usize]) -> f64 {
    let d: Vec<f64> = (0..3).map(|i| central(u, x, axes, 0.05 / f64::from(1 << i))).collect();
    let r = [(4.0 * d[1] - d[0]) / 3.0, (4.0 * d[2] - d[1]) / 3.0];
    (16.0 * r[1] - r[0]) / 15.0
}

#[test]
fn criterion_03_jet_correctness() {
    let _g = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut bad = Vec::new();
    let mut checked = 0usize;
    let mut worst: f64 = 0.0;
    for n in 1..=4 {
        for g in gallery::all(n) {
            let prog = Program::compile(&g.expr);
            let full = (1u32 << n) - 1;
            let mut ev = prog.evaluator(full);
            for _ in 0..50 {
                let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let jet = ev.eval(&x).unwrap().to_vec();
                if jet[0].to_bits() != g.expr.eval(&x).unwrap().to_bits() {
                    bad.push(format!("{} value at {x:?}", g.id));
                }
                for s in 1..=full {
                    let axes: Vec<usize> = (0..n).filter(|a| s >> a & 1 == 1).collect();
                    let fd = finite_difference(&g.expr, &x, &axes);
                    let rel = (fd - jet[s as usize]).abs() / jet[s as usize].abs().max(1.0);
                    worst = worst.max(rel);
                    checked += 1;
                    if rel > 1e-6 {
                        bad.push(format!("{} S={s:b} at {x:?}: {} vs {fd}", g.id, jet[s as usize]));
                    }
                }
            }
        }
    }
    let ok = bad.is_empty();
    verdict_line(
        3,
        "jet correctness",
        ok,
        &format!("{checked} partials, worst relative error {worst:.1e}"),
    );
    assert!(ok, "{bad:?}");
}

/// Pointwise check over bump and gauss in n = 1..3 for the given `p`.
fn pointwise_suite(ps: &[f64]) -> (Vec<String>, usize, usize) {
    let (mut bad, mut checks, mut violations) = (Vec::new(), 0, 0);
    let sampler = PairSampler::new(4, 10_000);
    for n in 1..=3 {
        for fam in ["bump", "gauss"] {
            let g = gallery::lookup(&format!("{fam}{n}d")).unwrap();
            for &p in ps {
                let r = check_pointwise(&g.expr, p, &sampler, &home(&g), &CheckOptions::default()).unwrap();
                checks += 1;
                violations += r.violations;
                if r.verdict != Verdict::Pass || r.violations > 0 {
                    bad.push(format!("{} p={p}: {} ({} violations)", g.id, r.verdict, r.violations));
                }
            }
        }
    }
    (bad, checks, violations)
}

#[test]
fn criterion_04_pointwise_estimate() {
    let _g = serial();
    let (bad, checks, violations) = pointwise_suite(&[1.5, 2.0, 4.0]);
    let ok = bad.is_empty();
    verdict_line(
        4,
        "pointwise estimate",
        ok,
        &format!("{checks} checks x 10^4 pairs, {violations} violations"),
    );
    assert!(ok, "{bad:?}");
}

#[test]
fn criterion_05_p1_estimate_and_limit() {
    let _g = serial();
    let (mut bad, checks, violations) = pointwise_suite(&[1.0]);
    for n in 1..=3usize {
        let limit = pointwise_bound_constant_p1(n).unwrap().value;
        let want = 3f64.powi(n as i32) - 2f64.powi(n as i32);
        if limit != want {
            bad.push(format!("p=1 constant for n={n}: {limit}"));
        }
        let err = (pointwise_factor(n, 1.0 + 1e-4, 1.0) - want).abs();
        if err > 1e-2 {
            bad.push(format!("limit n={n}: off by {err:e}"));
        }
    }
    let ok = bad.is_empty();
    verdict_line(
        5,
        "p = 1 estimate and limit",
        ok,
        &format!("{checks} checks x 10^4 pairs, {violations} violations"),
    );
    assert!(ok, "{bad:?}");
}

#[test]
fn criterion_06_holder_norm_estimates() {
    let _g = serial();
    let sampler = PairSampler::new(6, 4000);
    let mut bad = Vec::new();
    let mut checks = 0;
    for n in 1..=3 {
        for g in gallery::all(n) {
            for p in [1.0, 2.0, 4.0] {
                let r = check_holder_norm(&g.expr, p, &home(&g), &sampler, &CheckOptions::default()).unwrap();
                checks += 1;
                if r.verdict != Verdict::Pass || r.violations > 0 {
                    bad.push(format!("{} p={p}: {} margin {:e}", g.id, r.verdict, r.margin));
                }
            }
        }
    }
    let ok = bad.is_empty();
    verdict_line(6, "Hölder-norm and C0 estimates", ok, &format!("{checks} checks"));
    assert!(ok, "{bad:?}");
}

#[test]
fn criterion_07_trace_inequality() {
    let _g = serial();
    let mut bad = Vec::new();
    let mut checks = 0;
    for n in 2..=3 {
        let boxes = random_boxes(&Rectangle::cube(n, -1.0, 1.0).unwrap(), 5, 70 + n as u64, 0.1);
        let faces: Vec<_> = enumerate_subsets(n)
            .unwrap()
            .into_iter()
            .filter(|s| s.len() == n - 1)
            .collect();
        for g in gallery::all(n) {
            for b in &boxes {
                for p in [1.0, 2.0, 4.0] {
                    for face in &faces {
                        let r = check_trace(&g.expr, b, face, p, &CheckOptions::default()).unwrap();
                        checks += 1;
                        if r.verdict != Verdict::Pass {
                            bad.push(format!(
                                "{} {b} face {face} p={p}: {} margin {:e}",
                                g.id, r.verdict, r.margin
                            ));
                        }
                    }
                }
            }
        }
    }
    let ok = bad.is_empty();
    verdict_line(7, "trace inequality", ok, &format!("{checks} face checks"));
    assert!(ok, "{bad:?}");
}

#[test]
fn criterion_08_mollification() {
    let _g = serial();
    let mut bad = Vec::new();
    // normalization against an independent 1-D integral in polar form:
    // ∫ρ = c·|S^{n-1}|·∫_0^1 φ(r) r^{n-1} dr
    for n in 1..=3usize {
        let c = kernel_normalization(n).unwrap();
        let sphere = [2.0, 2.0 * std::f64::consts::PI, 4.0 * std::f64::consts::PI][n - 1];
        let (radial, _) = integrate_box(&[0.0], &[1.0], &GridSpec::uniform(30, 64), |r| {
            let t = r[0];
            Ok(if t < 1.0 {
                (-1.0 / (1.0 - t * t)).exp() * t.powi(n as i32 - 1)
            } else {
                0.0
            })
        })
        .unwrap();
        let mass = c * sphere * radial;
        if (mass - 1.0).abs() > 1e-10 {
            bad.push(format!("n={n}: normalized mass {mass}"));
        }
        let mol = Mollifier::new(n, 1e-10).unwrap();
        if (mol.mass - 1.0).abs() > 1e-10 {
            bad.push(format!("n={n}: discrete mass {}", mol.mass));
        }
        let prog = Program::compile(&parse("2.75", 0).unwrap());
        let mut f = mol.apply(&prog, 0.3).unwrap();
        let v = f.value(&vec![0.2; n]).unwrap();
        if (v - 2.75).abs() > 1e-10 {
            bad.push(format!("n={n}: constant reproduced as {v}"));
        }
    }
    let eps: Vec<f64> = (3..=7).map(|k| 0.5f64.powi(k)).collect();
    let mol = Mollifier::new(2, 1e-10).unwrap();
    let u = gallery::lookup("bump2d").unwrap().expr;
    let study = convergence_study(&u, &mol, &Rectangle::cube(2, -1.5, 1.5).unwrap(), 21, &eps).unwrap();
    let order = study.min_order();
    if order < 1.8 {
        bad.push(format!("self-convergence order {order}"));
    }
    let ok = bad.is_empty();
    verdict_line(
        8,
        "mollification",
        ok,
        &format!("min self-convergence order {order:.3}"),
    );
    assert!(ok, "{bad:?}");
}

#[test]
fn criterion_09_counterexample() {
    let _g = serial();
    let radii: Vec<f64> = (4..=12).map(|k| 0.5f64.powi(k)).collect();
    let r = counterexample_run(2, &radii).unwrap();
    let growth = r.sup_growth();
    let increasing = r.sup_strictly_increasing();
    // increment k compares rows k and k+1; count those starting at r0 ≤ 2^-8
    let late: Vec<f64> = r
        .w12_increments()
        .into_iter()
        .zip(&radii)
        .filter(|(_, &r0)| r0 <= 0.5f64.powi(8))
        .map(|(inc, _)| inc)
        .collect();
    let settled = late.iter().all(|&inc| inc < 0.01);
    let ok = increasing && growth >= 1.5 && settled;
    let shown: Vec<String> = late.iter().map(|v| format!("{v:.4}")).collect();
    verdict_line(
        9,
        "counterexample",
        ok,
        &format!(
            "sup growth {growth:.3}, strictly increasing {increasing}, W12 increments from 2^-8: [{}]",
            shown.join(", ")
        ),
    );
    assert!(increasing && growth >= 1.5, "sup column");
    assert!(settled, "W12 increments from r0 = 2^-8 on: {late:?}");
}

#[test]
fn criterion_10_quadrature_and_determinism() {
    let _g = serial();
    let mut bad = Vec::new();
    for q in [2usize, 4, 8, 12] {
        let rule = gauss_legendre(q).unwrap();
        for k in 0..2 * q as i32 {
            let got: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(k)).sum();
            let want = if k % 2 == 0 { 2.0 / (k + 1) as f64 } else { 0.0 };
            if (got - want).abs() > 1e-12 {
                bad.push(format!("q={q} x^{k}: {got} vs {want}"));
            }
        }
        // tensor rule on a shifted box: exact for x^a y^b, a, b ≤ 2q - 1
        let (lo, hi) = ([0.5, -1.0], [2.0, 0.25]);
        let prim = |k: i32, a: f64, b: f64| (b.powi(k + 1) - a.powi(k + 1)) / (k + 1) as f64;
        for a in 0..2 * q as i32 {
            for b in [0, 2 * q as i32 - 1] {
                let (got, _) =
                    integrate_box(&lo, &hi, &GridSpec::uniform(q, 1), |x| Ok(x[0].powi(a) * x[1].powi(b))).unwrap();
                let want = prim(a, lo[0], hi[0]) * prim(b, lo[1], hi[1]);
                if (got - want).abs() > 1e-12 * want.abs().max(1.0) {
                    bad.push(format!("q={q} x^{a} y^{b}: {got} vs {want}"));
                }
            }
        }
    }
    let args = [
        "check-embedding",
        "--fn",
        "gauss2d",
        "--p",
        "1,2",
        "--seed",
        "11",
        "--pairs",
        "3000",
    ];
    let runs: Vec<Vec<u8>> = (0..2)
        .map(|_| {
            let o = Command::new(env!("CARGO_BIN_EXE_mixsmooth"))
                .args(args)
                .output()
                .unwrap();
            assert_eq!(o.status.code(), Some(0));
            o.stdout
        })
        .collect();
    let identical = runs[0] == runs[1] && !runs[0].is_empty();
    if !identical {
        bad.push("JSON differs between runs".into());
    }
    let ok = bad.is_empty();
    verdict_line(
        10,
        "quadrature exactness and determinism",
        ok,
        &format!("q in {{2,4,8,12}}, byte-identical JSON {identical}"),
    );
    assert!(ok, "{bad:?}");
}

#[test]
fn criterion_11_higher_order_embedding() {
    let _g = serial();
    let g = gallery::lookup("bump2d").unwrap();
    let sampler = PairSampler::new(11, 10_000);
    let mut bad = Vec::new();
    let mut checks = 0;
    let mut violations = 0;
    for p in [1.5, 2.0, 4.0] {
        for r in corollary2_check(&g.expr, 2, p, &home(&g), &sampler, &CheckOptions::default()).unwrap() {
            checks += 1;
            violations += r.violations;
            if r.verdict != Verdict::Pass || r.violations > 0 {
                bad.push(format!("{} p={p}: {}", r.name, r.verdict));
            }
        }
    }
    let ok = bad.is_empty();
    verdict_line(
        11,
        "k = 2 embedding",
        ok,
        &format!("{checks} derivative checks x 10^4 pairs, {violations} violations"),
    );
    assert!(ok, "{bad:?}");
}
