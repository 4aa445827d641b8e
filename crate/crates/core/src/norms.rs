//! Norms and seminorms on boxes.
//!
//! Integral norms refine the quadrature grid until the norm value itself
//! settles. `p = ∞` variants and Hölder quantities are sampled maxima and
//! therefore lower bounds; reports carry `sampled_lower_bound = true`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error};
use crate::expr::{EvalError, Expr};
use crate::jet::Program;
use crate::math;
use crate::quadrature::{gauss_legendre, integrate_box_vec, refine_lenient, GridSpec, QuadratureError};
use crate::rect::Rectangle;
use crate::report::{QuadratureInfo, SamplerInfo};
use crate::sampler::{PairSampler, Regime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormKind {
    Lp,
    S1p,
    Ws,
    C0,
    HolderSemi,
    HolderNorm,
}

impl NormKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Lp => "lp",
            Self::S1p => "s1p",
            Self::Ws => "ws",
            Self::C0 => "c0",
            Self::HolderSemi => "holder_seminorm",
            Self::HolderNorm => "holder_norm",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormOptions {
    pub grid: GridSpec,
    /// Relative agreement required between successive levels.
    pub tol: f64,
    pub max_level: usize,
    /// No grid with more sample points than this is attempted.
    pub max_points: u64,
    /// Uniform grid points per axis added to sampled sups
    /// (`None`: about 250 000 points in total).
    pub sup_points_per_axis: Option<usize>,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            tol: 1e-8,
            max_level: 6,
            max_points: 4_000_000,
            sup_points_per_axis: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    pub kind: NormKind,
    /// `f64::INFINITY` for sup-type norms.
    pub p: f64,
    pub value: f64,
    pub rect: Rectangle,
    pub quadrature: Option<QuadratureInfo>,
    /// False when refinement stopped before the tolerance was met.
    pub converged: bool,
    pub sampled_lower_bound: bool,
    /// 1-based derivative axis of the anisotropic norm.
    pub axis: Option<usize>,
    pub gamma: Option<f64>,
    pub sampler: Option<SamplerInfo>,
    /// Maximizer: a point, or a pair for Hölder quotients.
    pub argmax: Vec<Vec<f64>>,
    /// Hölder quotient maxima over pairs with `|x - x'| ≤ 1` and `> 1`.
    pub local_value: Option<f64>,
    pub global_value: Option<f64>,
}

impl NormReport {
    fn new(kind: NormKind, p: f64, value: f64, rect: &Rectangle) -> Self {
        Self {
            kind,
            p,
            value,
            rect: rect.clone(),
            quadrature: None,
            converged: true,
            sampled_lower_bound: false,
            axis: None,
            gamma: None,
            sampler: None,
            argmax: Vec::new(),
            local_value: None,
            global_value: None,
        }
    }

    /// Difference between the last two refinement levels, or 0.
    pub fn error_estimate(&self) -> f64 {
        self.quadrature.as_ref().and_then(|q| q.error_estimate).unwrap_or(0.0)
    }
}

fn check_p(p: f64) -> Result<(), Error> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(invalid(alloc::format!("p must be >= 1, got {p}")))
    }
}

fn check_arity(u: &Expr, rect: &Rectangle) -> Result<(), Error> {
    if u.free_arity() > rect.dim() {
        return Err(invalid(alloc::format!(
            "function uses x{} but the box has dimension {}",
            u.free_arity(),
            rect.dim()
        )));
    }
    Ok(())
}

/// Integral norm engine: `raw` fills `m` integrand components, each is
/// raised to `|·|^p` and integrated, and `combine` turns the component
/// integrals into the norm.
fn integral_norm<F, C>(
    rect: &Rectangle,
    p: f64,
    opts: &NormOptions,
    m: usize,
    mut raw: F,
    combine: C,
) -> Result<(f64, QuadratureInfo, bool), Error>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<(), EvalError>,
    C: Fn(&[f64]) -> f64,
{
    let mut buf = vec![0.0; m];
    let (result, converged) = refine_lenient(
        &opts.grid,
        opts.tol,
        opts.max_level,
        (rect.dim(), opts.max_points),
        |g| {
            let (ints, count) = integrate_box_vec(rect.lo(), rect.hi(), g, m, |x, out| {
                raw(x, &mut buf)?;
                for (o, &v) in out.iter_mut().zip(&buf) {
                    *o = math::abs_pow(v, p);
                }
                Ok(())
            })?;
            Ok((combine(&ints), count))
        },
    )
    .map_err(quad_error)?;
    let info = QuadratureInfo::from_result(&result, converged);
    Ok((result.value, info, converged))
}

fn quad_error(e: QuadratureError) -> Error {
    match e {
        QuadratureError::Evaluation { source, .. } => Error::Eval(source),
        other => Error::Quadrature(other),
    }
}

/// Points used for sampled sups: the base quadrature grid plus a uniform
/// grid that includes the box corners.
fn sup_samples(rect: &Rectangle, opts: &NormOptions) -> Result<Vec<Vec<f64>>, Error> {
    let n = rect.dim();
    let rule = gauss_legendre(opts.grid.order)?;
    let cells = opts.grid.expanded(n)?;
    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(n);
    for a in 0..n {
        let (lo, w) = (rect.lo()[a], rect.width(a));
        let h = w / cells[a] as f64;
        let mut xs = Vec::new();
        for c in 0..cells[a] {
            let mid = lo + (c as f64 + 0.5) * h;
            xs.extend(rule.nodes.iter().map(|t| mid + 0.5 * h * t));
        }
        axes.push(xs);
    }
    let g = opts.sup_points_per_axis.unwrap_or_else(|| {
        let per = math::powf(250_000.0, 1.0 / n as f64);
        (math::floor(per) as usize).clamp(2, 65)
    });
    let uniform: Vec<Vec<f64>> = (0..n)
        .map(|a| {
            (0..g)
                .map(|i| rect.lo()[a] + rect.width(a) * i as f64 / (g - 1).max(1) as f64)
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for grid in [&axes, &uniform] {
        let mut idx = vec![0usize; n];
        loop {
            out.push((0..n).map(|a| grid[a][idx[a]]).collect());
            let mut a = n;
            loop {
                if a == 0 {
                    break;
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < grid[a].len() {
                    break;
                }
                idx[a] = 0;
            }
            if idx.iter().all(|&i| i == 0) {
                break;
            }
        }
    }
    Ok(out)
}

/// Per-component sampled sups of `|raw|` and the point of the largest one.
fn sampled_sups<F>(rect: &Rectangle, opts: &NormOptions, m: usize, mut raw: F) -> Result<(Vec<f64>, Vec<f64>), Error>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<(), EvalError>,
{
    let mut sups = vec![0.0f64; m];
    let mut arg = rect.lo().to_vec();
    let mut best = -1.0;
    let mut buf = vec![0.0; m];
    for x in sup_samples(rect, opts)? {
        raw(&x, &mut buf)?;
        for (s, &v) in sups.iter_mut().zip(&buf) {
            *s = s.max(math::abs(v));
        }
        let a = math::abs(buf[0]);
        if a > best {
            best = a;
            arg = x;
        }
    }
    Ok((sups, arg))
}

fn pth_root(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x
    } else if p == 2.0 {
        math::sqrt(x)
    } else {
        math::powf(x, 1.0 / p)
    }
}

/// `‖u‖_{L_p(rect)}`; `p = ∞` gives a sampled sup.
pub fn lp_norm(u: &Expr, rect: &Rectangle, p: f64, opts: &NormOptions) -> Result<NormReport, Error> {
    check_arity(u, rect)?;
    let prog = Program::compile(u);
    let mut ev = prog.evaluator(0);
    lp_norm_with(rect, p, opts, |x| ev.value(x))
}

/// [`lp_norm`] for any point function.
pub fn lp_norm_with<F>(rect: &Rectangle, p: f64, opts: &NormOptions, mut f: F) -> Result<NormReport, Error>
where
    F: FnMut(&[f64]) -> Result<f64, EvalError>,
{
    check_p(p)?;
    let raw = |x: &[f64], out: &mut [f64]| -> Result<(), EvalError> {
        out[0] = f(x)?;
        Ok(())
    };
    if p.is_infinite() {
        let (sups, arg) = sampled_sups(rect, opts, 1, raw)?;
        let mut r = NormReport::new(NormKind::Lp, p, sups[0], rect);
        r.sampled_lower_bound = true;
        r.argmax = vec![arg];
        return Ok(r);
    }
    let (value, info, converged) = integral_norm(rect, p, opts, 1, raw, |i| pth_root(i[0], p))?;
    let mut r = NormReport::new(NormKind::Lp, p, value, rect);
    r.quadrature = Some(info);
    r.converged = converged;
    Ok(r)
}

/// Sampled `sup |u|` over the box.
pub fn sup_norm(u: &Expr, rect: &Rectangle, opts: &NormOptions) -> Result<NormReport, Error> {
    let mut r = lp_norm(u, rect, f64::INFINITY, opts)?;
    r.kind = NormKind::C0;
    Ok(r)
}

/// Sampled `sup |f|` for any point function.
pub fn sup_norm_with<F>(rect: &Rectangle, opts: &NormOptions, f: F) -> Result<NormReport, Error>
where
    F: FnMut(&[f64]) -> Result<f64, EvalError>,
{
    let mut r = lp_norm_with(rect, f64::INFINITY, opts, f)?;
    r.kind = NormKind::C0;
    Ok(r)
}

/// `‖u‖_{S¹_p(rect)} = (Σ_S ‖∂_S u‖_p^p)^{1/p}` over all `2^n` subsets
/// including the empty one. For `p = ∞` it is the sum of sampled sups.
pub fn s1p_norm(u: &Expr, rect: &Rectangle, p: f64, opts: &NormOptions) -> Result<NormReport, Error> {
    check_arity(u, rect)?;
    let prog = Program::compile(u);
    let mask = ((1u64 << rect.dim()) - 1) as u32;
    let mut ev = prog.evaluator(mask);
    s1p_norm_with(rect, p, opts, |x, out| {
        out.copy_from_slice(ev.eval(x)?);
        Ok(())
    })
}

/// [`s1p_norm`] for any source of full mixed jets (`2^n` coefficients,
/// local-mask order).
pub fn s1p_norm_with<F>(rect: &Rectangle, p: f64, opts: &NormOptions, f: F) -> Result<NormReport, Error>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<(), EvalError>,
{
    check_p(p)?;
    let m = 1usize << rect.dim();
    if p.is_infinite() {
        let (sups, arg) = sampled_sups(rect, opts, m, f)?;
        let mut r = NormReport::new(NormKind::S1p, p, crate::sum::neumaier_sum(sups), rect);
        r.sampled_lower_bound = true;
        r.argmax = vec![arg];
        return Ok(r);
    }
    let combine = |ints: &[f64]| pth_root(crate::sum::neumaier_sum(ints.iter().copied()), p);
    let (value, info, converged) = integral_norm(rect, p, opts, m, f, combine)?;
    let mut r = NormReport::new(NormKind::S1p, p, value, rect);
    r.quadrature = Some(info);
    r.converged = converged;
    Ok(r)
}

/// `‖u‖_p + ‖∂u/∂x_j‖_p` with 1-based `axis = j`.
pub fn ws_norm(u: &Expr, rect: &Rectangle, axis: usize, p: f64, opts: &NormOptions) -> Result<NormReport, Error> {
    check_arity(u, rect)?;
    if axis == 0 || axis > rect.dim() {
        return Err(invalid(alloc::format!("axis {axis} outside 1..={}", rect.dim())));
    }
    let prog = Program::compile(u);
    let mut ev = prog.evaluator(1 << (axis - 1));
    let mut r = ws_norm_with(rect, p, opts, |x, out| {
        out.copy_from_slice(ev.eval(x)?);
        Ok(())
    })?;
    r.axis = Some(axis);
    Ok(r)
}

/// [`ws_norm`] for any source of `(g, ∂_j g)` pairs.
pub fn ws_norm_with<F>(rect: &Rectangle, p: f64, opts: &NormOptions, f: F) -> Result<NormReport, Error>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<(), EvalError>,
{
    check_p(p)?;
    if p.is_infinite() {
        let (sups, arg) = sampled_sups(rect, opts, 2, f)?;
        let mut r = NormReport::new(NormKind::Ws, p, sups[0] + sups[1], rect);
        r.sampled_lower_bound = true;
        r.argmax = vec![arg];
        return Ok(r);
    }
    let combine = |ints: &[f64]| pth_root(ints[0], p) + pth_root(ints[1], p);
    let (value, info, converged) = integral_norm(rect, p, opts, 2, f, combine)?;
    let mut r = NormReport::new(NormKind::Ws, p, value, rect);
    r.quadrature = Some(info);
    r.converged = converged;
    Ok(r)
}

/// Sampled `sup_{x ≠ x'} |u(x) - u(x')| / |x - x'|^γ`, a lower bound.
pub fn holder_seminorm(u: &Expr, rect: &Rectangle, gamma: f64, sampler: &PairSampler) -> Result<NormReport, Error> {
    check_arity(u, rect)?;
    let prog = Program::compile(u);
    let mut ev = prog.evaluator(0);
    holder_seminorm_with(rect, gamma, sampler, |x| ev.value(x))
}

/// [`holder_seminorm`] for any point function.
pub fn holder_seminorm_with<F>(
    rect: &Rectangle,
    gamma: f64,
    sampler: &PairSampler,
    mut f: F,
) -> Result<NormReport, Error>
where
    F: FnMut(&[f64]) -> Result<f64, EvalError>,
{
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid(alloc::format!(
            "Hölder exponent must lie in (0, 1], got {gamma}"
        )));
    }
    let mut local = 0.0f64;
    let mut global = 0.0f64;
    let mut best = -1.0;
    let mut arg = Vec::new();
    let pairs = sampler.pairs(rect);
    for pair in &pairs {
        let q = math::abs(f(&pair.x)? - f(&pair.y)?) / math::powf(pair.distance, gamma);
        match pair.regime {
            Regime::Local => local = local.max(q),
            Regime::Global => global = global.max(q),
        }
        if q > best {
            best = q;
            arg = vec![pair.x.clone(), pair.y.clone()];
        }
    }
    let mut r = NormReport::new(NormKind::HolderSemi, f64::INFINITY, local.max(global), rect);
    r.sampled_lower_bound = true;
    r.gamma = Some(gamma);
    r.sampler = Some(sampler.info());
    r.argmax = arg;
    r.local_value = Some(local);
    r.global_value = Some(global);
    Ok(r)
}

/// Sampled `‖u‖_{C^{0,γ}} = sup |u| + [u]_{C^{0,γ}}`.
pub fn holder_norm(
    u: &Expr,
    rect: &Rectangle,
    gamma: f64,
    sampler: &PairSampler,
    opts: &NormOptions,
) -> Result<NormReport, Error> {
    let sup = sup_norm(u, rect, opts)?;
    let semi = holder_seminorm(u, rect, gamma, sampler)?;
    let mut r = semi.clone();
    r.kind = NormKind::HolderNorm;
    r.value = sup.value + semi.value;
    Ok(r)
}

/// `Γ(k/2)` from `Γ(1) = 1`, `Γ(1/2) = √π` and `Γ(x + 1) = x Γ(x)`.
fn gamma_half(k: usize) -> f64 {
    let (mut x, mut g) = if k.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (0.5, math::sqrt(math::PI))
    };
    while x < k as f64 / 2.0 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Volume of the unit ball in `R^n`, `π^{n/2} / Γ(n/2 + 1)`.
pub fn unit_ball_volume(n: usize) -> f64 {
    let mut pi_pow = math::powi(math::PI, (n / 2) as u32);
    if n % 2 == 1 {
        pi_pow *= math::sqrt(math::PI);
    }
    pi_pow / gamma_half(n + 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn p(t: &str, n: usize) -> Expr {
        parse(t, n).unwrap()
    }

    fn rect(lo: &[f64], hi: &[f64]) -> Rectangle {
        Rectangle::new(lo.to_vec(), hi.to_vec()).unwrap()
    }

    #[test]
    fn ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - core::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * core::f64::consts::PI / 3.0).abs() < 1e-15);
        // V_n = 2π/n · V_{n-2}
        for n in 3..=20 {
            let want = 2.0 * core::f64::consts::PI / n as f64 * unit_ball_volume(n - 2);
            assert!((unit_ball_volume(n) - want).abs() <= 1e-14 * want);
        }
    }

    #[test]
    fn lp_examples() {
        let o = NormOptions::default();
        let one = lp_norm(&p("1", 0), &Rectangle::unit(2).unwrap(), 2.0, &o).unwrap();
        assert!((one.value - 1.0).abs() < 1e-15);
        let s = lp_norm(&p("sin(x1)", 1), &rect(&[0.0], &[core::f64::consts::PI]), 2.0, &o).unwrap();
        assert!((s.value - (core::f64::consts::PI / 2.0).sqrt()).abs() < 1e-12);
        assert!(s.converged);
        let z = lp_norm(&p("0", 0), &Rectangle::unit(3).unwrap(), 3.0, &o).unwrap();
        assert_eq!(z.value, 0.0);
        assert!(lp_norm(&p("x1", 1), &Rectangle::unit(1).unwrap(), 0.5, &o).is_err());
    }

    #[test]
    fn s1p_examples() {
        let o = NormOptions::default();
        let a = s1p_norm(&p("x1", 1), &Rectangle::unit(1).unwrap(), 2.0, &o).unwrap();
        assert!((a.value - (4.0f64 / 3.0).sqrt()).abs() < 1e-12);
        let b = s1p_norm(&p("x1*x2", 2), &Rectangle::unit(2).unwrap(), 2.0, &o).unwrap();
        assert!((b.value - 4.0 / 3.0).abs() < 1e-12);
        let z = s1p_norm(&p("0", 0), &Rectangle::unit(2).unwrap(), 2.0, &o).unwrap();
        assert_eq!(z.value, 0.0);
    }

    #[test]
    fn ws_examples() {
        let o = NormOptions::default();
        let a = ws_norm(&p("x2", 2), &Rectangle::unit(2).unwrap(), 1, 1.0, &o).unwrap();
        assert!((a.value - 0.5).abs() < 1e-14);
        let c = ws_norm(&p("2.5", 0), &rect(&[0.0, 0.0], &[2.0, 1.5]), 2, 2.0, &o).unwrap();
        assert!((c.value - 2.5 * 3f64.sqrt()).abs() < 1e-13);
        let b = ws_norm(&p("x1", 1), &Rectangle::unit(1).unwrap(), 1, 1.0, &o).unwrap();
        assert!((b.value - 1.5).abs() < 1e-14);
        assert!(ws_norm(&p("x1", 1), &Rectangle::unit(1).unwrap(), 2, 1.0, &o).is_err());
    }

    #[test]
    fn sup_is_flagged() {
        let r = lp_norm(
            &p("x1 * (1 - x1)", 1),
            &Rectangle::unit(1).unwrap(),
            f64::INFINITY,
            &NormOptions::default(),
        )
        .unwrap();
        assert!(r.sampled_lower_bound);
        assert!(r.value <= 0.25 && r.value > 0.2499);
    }

    #[test]
    fn holder_examples() {
        let unit = Rectangle::unit(1).unwrap();
        let s = PairSampler::new(3, 500);
        let lin = holder_seminorm(&p("x1", 1), &unit, 1.0, &s).unwrap();
        assert!((lin.value - 1.0).abs() < 1e-12);
        let c = holder_seminorm(&p("4", 0), &unit, 0.5, &s).unwrap();
        assert_eq!(c.value, 0.0);
        let r = holder_seminorm(&p("sqrt(x1)", 1), &unit, 0.5, &s).unwrap();
        assert!(r.value <= 1.0 + 1e-12 && r.value > 0.999, "{}", r.value);
        assert!(holder_seminorm(&p("x1", 1), &unit, 1.5, &s).is_err());
    }
}
