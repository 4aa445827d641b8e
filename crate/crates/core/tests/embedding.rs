use std::collections::HashMap;

use mixsmooth_core::combinatorics::binomial;
use mixsmooth_core::embedding::*;
use mixsmooth_core::jet::Program;
use mixsmooth_core::norms::{s1p_norm_with, NormOptions};
use mixsmooth_core::quadrature::GridSpec;
use mixsmooth_core::sampler::PairSampler;
use mixsmooth_core::{gallery, parse, IndexSubset, Rectangle, Verdict};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn pascal_rule_holds_exactly() {
    for m in 1..=30u64 {
        for j in 1..=m {
            assert_eq!(binomial(m, j) + binomial(m, j - 1), binomial(m + 1, j));
        }
    }
}

#[test]
fn constant_examples() {
    assert!(close(holder_norm_constant(1, 2.0).unwrap().value, 5.121320, 1e-6));
    assert!(close(holder_norm_constant(2, 2.0).unwrap().value, 15.084875, 1e-6));
    assert!(close(
        pointwise_bound_constant(2, 2.0, 1.0).unwrap().value,
        4.464102,
        1e-6
    ));
    assert_eq!(pointwise_bound_constant_p1(2).unwrap().value, 5.0);
    assert_eq!(c0_norm_constant_p1(1).unwrap().value, 1.5);
    assert!(close(trace_constant(2.0, 10.0).unwrap().value, 1.1, 1e-15));
}

#[test]
fn limit_at_unit_separation() {
    let ps = [1.1, 1.01, 1.001, 1.0001];
    let r = check_p_to_1_limit(2, 1.0, &ps, 1e-3).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    assert!((r.trace[3].1 - 5.0).abs() < 1e-3);
    let r = check_p_to_1_limit(3, 1.0, &ps, 5e-3).unwrap();
    assert!((r.trace[3].1 - 19.0).abs() < 5e-3);
    assert_eq!(check_p_to_1_limit(1, 1.0, &ps, 1e-12).unwrap().verdict, Verdict::Pass);
    // the approach is monotone in p
    assert!(r
        .trace
        .windows(2)
        .all(|w| (w[1].1 - 19.0).abs() < (w[0].1 - 19.0).abs()));
    // away from d = 1 only the trace is reported
    let r = check_p_to_1_limit(2, 0.01, &ps, 1e-3).unwrap();
    assert_eq!(r.tol, None);
    assert_eq!(r.verdict, Verdict::Pass);
}

#[test]
fn pointwise_on_bump() {
    let g = gallery::lookup("bump2d").unwrap();
    let r = check_pointwise(
        &g.expr,
        2.0,
        &PairSampler::new(1, 10_000),
        g.support.as_ref().unwrap(),
        &CheckOptions::default(),
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    assert!(r.margin > 0.0);
    assert_eq!(r.violations, 0);
    let zero = parse("0", 0).unwrap();
    let r = check_pointwise(
        &zero,
        2.0,
        &PairSampler::new(1, 100),
        &Rectangle::unit(2).unwrap(),
        &CheckOptions::default(),
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    assert_eq!((r.lhs_max, r.rhs, r.margin), (0.0, 0.0, 0.0));
}

#[test]
fn holder_norm_examples() {
    let g = gallery::lookup("gauss2d").unwrap();
    let r = check_holder_norm(
        &g.expr,
        3.0,
        g.support.as_ref().unwrap(),
        &PairSampler::new(2, 4000),
        &CheckOptions::default(),
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    assert!(r.margin > 0.0);
    let g = gallery::lookup("bump1d").unwrap();
    let r = check_holder_norm(
        &g.expr,
        1.0,
        g.support.as_ref().unwrap(),
        &PairSampler::new(2, 1000),
        &CheckOptions::default(),
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    assert_eq!(r.constant, Some(1.5));
}

#[test]
fn trace_examples() {
    let o = CheckOptions::default();
    let face1 = IndexSubset::from_indices(&[1], 2).unwrap();
    let bump = gallery::lookup("bump2d").unwrap().expr;
    let r = check_trace(&bump, &Rectangle::unit(2).unwrap(), &face1, 2.0, &o).unwrap();
    assert_eq!(r.constant, Some(2.0));
    assert_eq!(r.verdict, Verdict::Pass);
    let long = Rectangle::new(vec![0.0, 0.0], vec![1.0, 10.0]).unwrap();
    let r = check_trace(&bump, &long, &face1, 2.0, &o).unwrap();
    assert!(close(r.constant.unwrap(), 1.1, 1e-15));
    assert_eq!(r.verdict, Verdict::Pass);
    // the trace of ∂1(x1 x2) = x2 on x2 = 0 vanishes
    let r = check_trace(
        &parse("x1*x2", 2).unwrap(),
        &Rectangle::unit(2).unwrap(),
        &face1,
        2.0,
        &o,
    )
    .unwrap();
    assert_eq!(r.lhs_max, 0.0);
    assert!(close(r.margin, r.rhs, 1e-15) && r.rhs > 0.0);
    assert!(check_trace(
        &bump,
        &Rectangle::unit(1).unwrap(),
        &IndexSubset::full(1).unwrap(),
        2.0,
        &o
    )
    .is_err());
}

#[test]
fn derivative_embedding() {
    let o = CheckOptions::default();
    let s = PairSampler::new(4, 2000);
    let lin = parse("3*x1 - 2*x2 + 1", 2).unwrap();
    for r in corollary2_check(&lin, 2, 2.0, &Rectangle::cube(2, -1.0, 1.0).unwrap(), &s, &o).unwrap() {
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.lhs_max, 0.0);
    }
    let g = gallery::lookup("bump2d").unwrap();
    let reports = corollary2_check(&g.expr, 2, 2.0, g.support.as_ref().unwrap(), &s, &o).unwrap();
    assert_eq!(reports.len(), 2);
    assert!(reports.iter().all(|r| r.verdict == Verdict::Pass));
    assert_eq!(derivative_multisets(2, 2), vec![vec![1, 1], vec![1, 2], vec![2, 2]]);
}

#[test]
fn mollifier_reproduces_affine_functions() {
    for n in 1..=3 {
        let mol = Mollifier::new(n, 1e-10).unwrap();
        assert!((mol.mass - 1.0).abs() <= 1e-10);
        for src in ["2.5", "1 + 3*x1 - x2*0.5"] {
            let u = parse(src, n.max(2)).unwrap();
            if u.free_arity() > n {
                continue;
            }
            let prog = Program::compile(&u);
            let mut mf = mol.apply(&prog, 0.3).unwrap();
            let x: Vec<f64> = (0..n).map(|i| 0.2 * i as f64 - 0.1).collect();
            assert!((mf.value(&x).unwrap() - u.eval(&x).unwrap()).abs() <= 1e-10);
        }
    }
}

#[test]
fn derivative_routes_agree() {
    let mol = Mollifier::new(2, 1e-10).unwrap();
    let u = gallery::lookup("bump2d").unwrap().expr;
    let prog = Program::compile(&u);
    let mut a = mol.apply(&prog, 0.25).unwrap();
    let mut b = mol.apply(&prog, 0.25).unwrap();
    let (mut ja, mut jb) = ([0.0; 4], [0.0; 4]);
    for x in [[0.1, -0.3], [0.8, 0.4], [-1.1, 0.9]] {
        a.jet(&x, &mut ja).unwrap();
        b.jet_via_kernel(&x, &mut jb).unwrap();
        for (p, q) in ja.iter().zip(&jb) {
            assert!((p - q).abs() <= 1e-7 * p.abs().max(1.0), "{x:?}: {ja:?} vs {jb:?}");
        }
    }
}

#[test]
fn pointwise_on_mollified_members() {
    // any smooth compactly supported function must satisfy the bound, so a
    // coarse kernel grid is as good a test as a fine one
    let o = CheckOptions {
        norm: NormOptions {
            tol: 1e-4,
            ..NormOptions::default()
        },
        ..CheckOptions::default()
    };
    let eps = 0.25;
    for id in ["bump1d", "gauss1d", "bump2d", "bump3d"] {
        let g = gallery::lookup(id).unwrap();
        let n = g.n;
        let mol = Mollifier::with_grid(n, &GridSpec::uniform(6, 1)).unwrap();
        let prog = Program::compile(&g.expr);
        let h = g.support.as_ref().unwrap().hi()[0] + eps;
        let rect = Rectangle::cube(n, -h, h).unwrap();
        let mut for_norm = mol.apply(&prog, eps).unwrap();
        let mut for_values = mol.apply(&prog, eps).unwrap();
        // norm grids coincide across p, so jets are computed once per point
        let mut memo: HashMap<Vec<u64>, Vec<f64>> = HashMap::new();
        for p in [1.0, 1.5, 2.0, 4.0] {
            let r = check_pointwise_with(
                &rect,
                p,
                &PairSampler::new(6, 1000),
                &o,
                |no| {
                    s1p_norm_with(&rect, p, no, |x, out| {
                        let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
                        if let Some(j) = memo.get(&key) {
                            out.copy_from_slice(j);
                            return Ok(());
                        }
                        for_norm.jet(x, out)?;
                        memo.insert(key, out.to_vec());
                        Ok(())
                    })
                },
                |x| for_values.value(x),
            )
            .unwrap();
            assert_eq!(r.verdict, Verdict::Pass, "{id} p={p}");
            assert_eq!(r.violations, 0);
        }
    }
}

#[test]
fn one_dimensional_profile_stays_bounded() {
    let radii: Vec<f64> = (4..=10).map(|k| 0.5f64.powi(k)).collect();
    let r = counterexample_run(1, &radii).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    assert!(r.rows.iter().all(|row| row.sup.is_finite() && row.sup < 2.0));
}
