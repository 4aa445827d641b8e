use alloc::format;

use crate::combinatorics::binomial;
use crate::error::{invalid, Error};
use crate::math;
use crate::norms::unit_ball_volume;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstantKind {
    PointwiseP,
    PointwiseP1,
    HolderNorm,
    C0NormP1,
    Trace,
}

impl ConstantKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::PointwiseP => "pointwise_p",
            Self::PointwiseP1 => "pointwise_p1",
            Self::HolderNorm => "holder_norm",
            Self::C0NormP1 => "c0_norm_p1",
            Self::Trace => "trace",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstant {
    pub kind: ConstantKind,
    pub p: f64,
    pub n: usize,
    /// Separation `|x - x'|` or edge length, where the constant uses one.
    pub d: Option<f64>,
    pub value: f64,
}

fn check_n(n: usize) -> Result<(), Error> {
    if (1..=crate::rect::MAX_DIM).contains(&n) {
        Ok(())
    } else {
        Err(invalid(format!(
            "dimension must lie in 1..={}, got {n}",
            crate::rect::MAX_DIM
        )))
    }
}

fn check_p_gt_1(p: f64) -> Result<(), Error> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!(
            "p must be > 1 and finite here, got {p} (use the p = 1 variant)"
        )))
    }
}

/// `(1+p)^{1/p}`
fn base(p: f64) -> f64 {
    math::powf(1.0 + p, 1.0 / p)
}

/// `(a + t)^n - a^n` expanded as `Σ_{k≥1} C(n,k) a^{n-k} t^k`, which is
/// exact at `t = 0` and free of cancellation.
fn shifted_power_difference(n: usize, a: f64, t: f64) -> f64 {
    crate::sum::neumaier_sum(
        (1..=n).map(|k| binomial(n as u64, k as u64) as f64 * math::powi(a, (n - k) as u32) * math::powi(t, k as u32)),
    )
}

/// Pair-dependent factor of the pointwise bound:
/// `((1+p)^{1/p} + d^{(p-1)/p})^n - (1+p)^{n/p}` for `p > 1`, and
/// `3^n - 2^n` for `p = 1` (independent of `d`).
pub fn pointwise_factor(n: usize, p: f64, d: f64) -> f64 {
    if p == 1.0 {
        return math::powi(3.0, n as u32) - math::powi(2.0, n as u32);
    }
    let t = if d == 0.0 { 0.0 } else { math::powf(d, (p - 1.0) / p) };
    shifted_power_difference(n, base(p), t)
}

pub fn pointwise_bound_constant(n: usize, p: f64, d: f64) -> Result<BoundConstant, Error> {
    check_n(n)?;
    check_p_gt_1(p)?;
    if !(d >= 0.0 && d.is_finite()) {
        return Err(invalid(format!("separation must be finite and >= 0, got {d}")));
    }
    Ok(BoundConstant {
        kind: ConstantKind::PointwiseP,
        p,
        n,
        d: Some(d),
        value: pointwise_factor(n, p, d),
    })
}

/// `3^n - 2^n`
pub fn pointwise_bound_constant_p1(n: usize) -> Result<BoundConstant, Error> {
    check_n(n)?;
    Ok(BoundConstant {
        kind: ConstantKind::PointwiseP1,
        p: 1.0,
        n,
        d: None,
        value: pointwise_factor(n, 1.0, 1.0),
    })
}

/// `K0 = (1 + (1+p)^{1/p})^n - (1+p)^{n/p}`: bounds the Hölder quotient
/// over pairs with `|x - x'| ≤ 1`.
pub fn local_holder_constant(n: usize, p: f64) -> f64 {
    if p == 1.0 {
        return pointwise_factor(n, 1.0, 1.0);
    }
    shifted_power_difference(n, base(p), 1.0)
}

/// `K = K0 + Γ_n^{-1/p}`: bounds `sup |u|` by `K·‖u‖_{S¹_p}`.
pub fn c0_constant(n: usize, p: f64) -> f64 {
    local_holder_constant(n, p) + math::powf(unit_ball_volume(n), -1.0 / p)
}

/// `3·K`, the constant of the Hölder-norm estimate.
pub fn holder_norm_constant(n: usize, p: f64) -> Result<BoundConstant, Error> {
    check_n(n)?;
    check_p_gt_1(p)?;
    Ok(BoundConstant {
        kind: ConstantKind::HolderNorm,
        p,
        n,
        d: None,
        value: 3.0 * c0_constant(n, p),
    })
}

/// `3^n - 2^n + Γ_n^{-1}`
pub fn c0_norm_constant_p1(n: usize) -> Result<BoundConstant, Error> {
    check_n(n)?;
    Ok(BoundConstant {
        kind: ConstantKind::C0NormP1,
        p: 1.0,
        n,
        d: None,
        value: c0_constant(n, 1.0),
    })
}

/// `max(p - 1 + 1/width, 1)` for the trace on a face whose normal edge
/// has length `width`.
pub fn trace_constant(p: f64, width: f64) -> Result<BoundConstant, Error> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(invalid(format!("p must be finite and >= 1, got {p}")));
    }
    if !(width > 0.0 && width.is_finite()) {
        return Err(invalid(format!("edge length must be positive, got {width}")));
    }
    Ok(BoundConstant {
        kind: ConstantKind::Trace,
        p,
        n: 1,
        d: Some(width),
        value: (p - 1.0 + 1.0 / width).max(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn pointwise_examples() {
        assert_eq!(pointwise_bound_constant(3, 2.0, 0.0).unwrap().value, 0.0);
        let v = pointwise_bound_constant(2, 2.0, 1.0).unwrap().value;
        assert!(close(v, 1.0 + 2.0 * 3f64.sqrt(), 1e-15));
        let v = pointwise_bound_constant(1, 2.0, 4.0).unwrap().value;
        assert!(close(v, 2.0, 1e-15));
        assert!(pointwise_bound_constant(2, 1.0, 1.0).is_err());
        assert!(pointwise_bound_constant(2, 2.0, -1.0).is_err());
    }

    #[test]
    fn direct_formula_agrees() {
        for &(n, p, d) in &[(2usize, 2.0, 1.0f64), (3, 1.5, 0.3), (5, 4.0, 7.0), (1, 10.0, 0.01)] {
            let a = (1.0f64 + p).powf(1.0 / p);
            let direct = (a + d.powf((p - 1.0) / p)).powi(n as i32) - (1.0 + p).powf(n as f64 / p);
            assert!(close(pointwise_factor(n, p, d), direct, 1e-13));
        }
    }

    #[test]
    fn p1_values() {
        let v: Vec<f64> = (1..=3).map(|n| pointwise_bound_constant_p1(n).unwrap().value).collect();
        assert_eq!(v, [1.0, 5.0, 19.0]);
    }

    #[test]
    fn holder_norm_examples() {
        let c = holder_norm_constant(1, 2.0).unwrap().value;
        assert!(close(c, 3.0 * (1.0 + 0.5f64.sqrt()), 1e-14));
        let c = holder_norm_constant(2, 2.0).unwrap().value;
        let want = 3.0 * ((1.0 + 3f64.sqrt()).powi(2) - 3.0 + 1.0 / core::f64::consts::PI.sqrt());
        assert!(close(c, want, 1e-14));
        assert!(close(c0_norm_constant_p1(1).unwrap().value, 1.5, 1e-15));
    }

    #[test]
    fn trace_examples() {
        assert_eq!(trace_constant(2.0, 1.0).unwrap().value, 2.0);
        assert!(close(trace_constant(2.0, 10.0).unwrap().value, 1.1, 1e-15));
        assert_eq!(trace_constant(1.0, 4.0).unwrap().value, 1.0);
    }

    #[test]
    fn monotone_in_separation_and_dimension() {
        for &p in &[1.1, 1.5, 2.0, 4.0, 10.0] {
            for n in 1..=8 {
                let mut prev = 0.0;
                for i in 1..=100 {
                    let d = i as f64 / 10.0;
                    let v = pointwise_factor(n, p, d);
                    assert!(v > prev, "n={n} p={p} d={d}");
                    assert!(pointwise_factor(n + 1, p, d) > v);
                    prev = v;
                }
            }
        }
        for &p in &[1.0, 1.5, 2.0, 4.0] {
            for n in 1..8 {
                assert!(c0_constant(n + 1, p) > c0_constant(n, p));
            }
        }
    }
}
