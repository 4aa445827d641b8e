use mixsmooth_core::norms::{holder_seminorm, lp_norm, s1p_norm, sup_norm, unit_ball_volume, ws_norm, NormOptions};
use mixsmooth_core::sampler::PairSampler;
use mixsmooth_core::{gallery, parse, Rectangle};
use proptest::prelude::*;

fn rect(lo: &[f64], hi: &[f64]) -> Rectangle {
    Rectangle::new(lo.to_vec(), hi.to_vec()).unwrap()
}

#[test]
fn closed_forms() {
    let o = NormOptions::default();
    let v = lp_norm(
        &parse("sin(x1)", 1).unwrap(),
        &rect(&[0.0], &[std::f64::consts::PI]),
        2.0,
        &o,
    )
    .unwrap();
    assert!((v.value - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-12);
    let v = s1p_norm(&parse("x1*x2", 2).unwrap(), &Rectangle::unit(2).unwrap(), 2.0, &o).unwrap();
    assert!((v.value - 4.0 / 3.0).abs() < 1e-12);
    let v = s1p_norm(&parse("x1", 1).unwrap(), &Rectangle::unit(1).unwrap(), 2.0, &o).unwrap();
    assert!((v.value - (4.0f64 / 3.0).sqrt()).abs() < 1e-12);
    let v = ws_norm(&parse("x1", 1).unwrap(), &Rectangle::unit(1).unwrap(), 1, 1.0, &o).unwrap();
    assert!((v.value - 1.5).abs() < 1e-12);
    // ‖c‖ = c·vol^{1/p} when the derivative term vanishes
    let v = ws_norm(&parse("2.5", 0).unwrap(), &rect(&[0.0, 0.0], &[2.0, 3.0]), 2, 3.0, &o).unwrap();
    assert!((v.value - 2.5 * 6f64.powf(1.0 / 3.0)).abs() < 1e-12);
    // p = 1 on an odd integrand uses |u|
    let v = lp_norm(&parse("x1", 1).unwrap(), &rect(&[-1.0], &[1.0]), 1.0, &o).unwrap();
    assert!((v.value - 1.0).abs() < 1e-8);
}

#[test]
fn ball_volumes_follow_the_recurrence() {
    // V_n = 2π/n · V_{n-2}
    let mut v = [2.0, std::f64::consts::PI].to_vec();
    for n in 3..=12 {
        v.push(2.0 * std::f64::consts::PI / n as f64 * v[n - 3]);
    }
    for (i, want) in v.iter().enumerate() {
        assert!((unit_ball_volume(i + 1) - want).abs() <= 1e-14 * want);
    }
}

#[test]
fn square_root_holder_quotient() {
    // grid search: sup over a, b of |√a - √b| / |a - b|^{1/2} on [0, 1]
    let m = 400;
    let mut best: f64 = 0.0;
    for i in 0..=m {
        for j in 0..i {
            let (a, b) = (i as f64 / m as f64, j as f64 / m as f64);
            best = best.max((a.sqrt() - b.sqrt()).abs() / (a - b).sqrt());
        }
    }
    assert!((best - 1.0).abs() < 1e-12);
    let r = holder_seminorm(
        &parse("sqrt(x1)", 1).unwrap(),
        &Rectangle::unit(1).unwrap(),
        0.5,
        &PairSampler::new(3, 4000),
    )
    .unwrap();
    assert!(r.value <= 1.0 + 1e-12);
    assert!(r.value > 0.9, "{}", r.value);
    assert!(r.sampled_lower_bound);
}

#[test]
fn sup_norms_are_flagged() {
    let r = sup_norm(
        &gallery::lookup("gauss2d").unwrap().expr,
        &Rectangle::cube(2, -1.0, 1.0).unwrap(),
        &NormOptions::default(),
    )
    .unwrap();
    assert!(r.sampled_lower_bound);
    assert!((r.value - 1.0).abs() < 1e-15);
    let r = s1p_norm(
        &gallery::lookup("gauss2d").unwrap().expr,
        &Rectangle::cube(2, -1.0, 1.0).unwrap(),
        f64::INFINITY,
        &NormOptions::default(),
    )
    .unwrap();
    assert!(r.sampled_lower_bound);
}

#[test]
fn compact_support_stabilizes_the_norm() {
    let o = NormOptions {
        tol: 1e-12,
        ..NormOptions::default()
    };
    for id in ["bump1d", "bump2d", "gauss2d"] {
        let g = gallery::lookup(id).unwrap();
        let support = g.support.clone().unwrap();
        let n = g.n;
        let h = support.hi()[0];
        let bigger = Rectangle::cube(n, -h - 1.0, h + 1.0).unwrap();
        for p in [1.0, 2.0, 4.0] {
            let a = s1p_norm(&g.expr, &support, p, &o).unwrap();
            let b = s1p_norm(&g.expr, &bigger, p, &o).unwrap();
            assert!(
                (b.value - a.value).abs() <= 1e-10 * b.value,
                "{id} p={p}: {} vs {}",
                a.value,
                b.value
            );
        }
    }
}

#[test]
fn more_pairs_never_lower_the_seminorm() {
    let u = gallery::lookup("gauss2d").unwrap().expr;
    let r = Rectangle::cube(2, -2.0, 2.0).unwrap();
    let mut prev = 0.0;
    for count in [10, 100, 1000, 4000] {
        let v = holder_seminorm(&u, &r, 0.5, &PairSampler::new(9, count)).unwrap().value;
        assert!(v >= prev, "{count}: {v} < {prev}");
        prev = v;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn norms_grow_with_the_box(
        lo in proptest::collection::vec(-1.0f64..0.0, 2),
        w in proptest::collection::vec(0.2f64..1.0, 2),
        grow in proptest::collection::vec(0.0f64..0.5, 4),
        p in 1.0f64..4.0,
    ) {
        let u = parse("sin(x1 + x2^2) * exp(-x1*x2)", 2).unwrap();
        let hi: Vec<f64> = lo.iter().zip(&w).map(|(a, b)| a + b).collect();
        let small = Rectangle::new(lo.clone(), hi.clone()).unwrap();
        let big = Rectangle::new(
            vec![lo[0] - grow[0], lo[1] - grow[1]],
            vec![hi[0] + grow[2], hi[1] + grow[3]],
        ).unwrap();
        let o = NormOptions::default();
        let slack = |v: f64| 1e-9 * v.max(1.0);
        let (a, b) = (lp_norm(&u, &small, p, &o).unwrap(), lp_norm(&u, &big, p, &o).unwrap());
        prop_assert!(b.value + slack(b.value) >= a.value);
        let (c, d) = (s1p_norm(&u, &small, p, &o).unwrap(), s1p_norm(&u, &big, p, &o).unwrap());
        prop_assert!(d.value + slack(d.value) >= c.value);
        // the mixed norm contains the Lp term
        prop_assert!(c.value >= a.value && d.value >= b.value);
        let (e, f) = (ws_norm(&u, &small, 2, p, &o).unwrap(), ws_norm(&u, &big, 2, p, &o).unwrap());
        prop_assert!(f.value + slack(f.value) >= e.value);
    }
}
