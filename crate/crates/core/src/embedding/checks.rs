use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::constants::{c0_constant, local_holder_constant, pointwise_factor, trace_constant};
use crate::error::{invalid, Error};
use crate::expr::{EvalError, Expr};
use crate::jet::Program;
use crate::math;
use crate::norms::{holder_seminorm_with, s1p_norm, sup_norm_with, ws_norm_with, NormOptions, NormReport};
use crate::quadrature::{integrate_box_vec, refine_lenient, MAX_ORDER};
use crate::rect::{IndexSubset, Rectangle};
use crate::report::{InequalityReport, QuadratureInfo, Verdict};
use crate::sampler::PairSampler;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOptions {
    pub norm: NormOptions,
    /// Relative slack in `margin ≥ -tol·rhs`.
    pub tol: f64,
    /// Recompute the norm at doubled order before reporting a FAIL.
    pub reverify: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            norm: NormOptions::default(),
            tol: 1e-9,
            reverify: true,
        }
    }
}

impl CheckOptions {
    fn deeper(&self) -> Self {
        let mut o = self.clone();
        o.norm.grid.order = (o.norm.grid.order * 2).min(MAX_ORDER);
        o.norm.tol *= 1e-2;
        o
    }
}

fn check_p(p: f64) -> Result<(), Error> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("p must be finite and >= 1, got {p}")))
    }
}

/// Smallest value the norm can have given its last refinement difference.
fn norm_lower(r: &NormReport) -> f64 {
    if r.converged {
        r.value
    } else {
        (r.value - r.error_estimate()).max(0.0)
    }
}

/// Verdict for `lhs ≤ rhs` when `rhs` may come from an unconverged
/// quadrature: then only a margin that survives the refinement difference
/// counts as PASS, and anything else is INCONCLUSIVE.
fn verdict(margin: f64, rhs: f64, tol: f64, converged: bool) -> Verdict {
    let v = Verdict::from_margin(margin, rhs, tol);
    if converged || v == Verdict::Pass {
        v
    } else {
        Verdict::Inconclusive
    }
}

struct PairScan {
    worst: f64,
    argmax: Vec<Vec<f64>>,
    /// Worst ratio per regime: `|Δu| / factor(d)` for `d ≤ 1` and `> 1`.
    local: f64,
    global: f64,
    samples: usize,
    quotients: Vec<f64>,
}

fn scan_pairs<F>(rect: &Rectangle, p: f64, sampler: &PairSampler, mut f: F) -> Result<PairScan, Error>
where
    F: FnMut(&[f64]) -> Result<f64, EvalError>,
{
    let n = rect.dim();
    let pairs = sampler.pairs(rect);
    let mut scan = PairScan {
        worst: 0.0,
        argmax: Vec::new(),
        local: 0.0,
        global: 0.0,
        samples: pairs.len(),
        quotients: Vec::with_capacity(pairs.len()),
    };
    for pair in &pairs {
        let du = math::abs(f(&pair.x)? - f(&pair.y)?);
        let q = du / pointwise_factor(n, p, pair.distance);
        if q > scan.worst || scan.argmax.is_empty() {
            scan.worst = q;
            scan.argmax = vec![pair.x.clone(), pair.y.clone()];
        }
        if pair.distance <= 1.0 {
            scan.local = scan.local.max(q);
        } else {
            scan.global = scan.global.max(q);
        }
        scan.quotients.push(q);
    }
    Ok(scan)
}

/// `|u(x) - u(x')| ≤ factor(n, p, |x - x'|)·‖u‖_{S¹_p}` over sampled
/// pairs. The report's `lhs_max` is the largest `|Δu| / factor`, so the
/// right-hand side is the norm itself.
pub fn check_pointwise(
    u: &Expr,
    p: f64,
    sampler: &PairSampler,
    rect: &Rectangle,
    opts: &CheckOptions,
) -> Result<InequalityReport, Error> {
    let prog = Program::compile(u);
    let mut ev = prog.evaluator(0);
    check_pointwise_with(rect, p, sampler, opts, |o| s1p_norm(u, rect, p, o), |x| ev.value(x))
}

/// [`check_pointwise`] with the norm and the function supplied by the
/// caller. `norm` receives the norm options (doubled order on
/// re-verification).
pub fn check_pointwise_with<N, F>(
    rect: &Rectangle,
    p: f64,
    sampler: &PairSampler,
    opts: &CheckOptions,
    mut norm: N,
    f: F,
) -> Result<InequalityReport, Error>
where
    N: FnMut(&NormOptions) -> Result<NormReport, Error>,
    F: FnMut(&[f64]) -> Result<f64, EvalError>,
{
    check_p(p)?;
    let scan = scan_pairs(rect, p, sampler, f)?;
    let mut notes = Vec::new();
    let mut reverified = false;
    let mut current = opts.clone();
    loop {
        let nr = norm(&current.norm)?;
        let rhs = norm_lower(&nr);
        let margin = rhs - scan.worst;
        let v = verdict(margin, rhs, current.tol, nr.converged);
        if v == Verdict::Fail && opts.reverify && !reverified {
            reverified = true;
            current = current.deeper();
            notes.push(String::from("failed at default depth; re-verified at doubled order"));
            continue;
        }
        if !nr.converged {
            notes.push(format!(
                "norm refinement did not meet tolerance; using value minus last difference ({:e})",
                nr.error_estimate()
            ));
        }
        let slack = current.tol * math::abs(rhs);
        let violations = scan.quotients.iter().filter(|&&q| q - rhs > slack).count();
        notes.push(format!(
            "worst |du|/factor: {:e} over |x-x'| <= 1, {:e} over |x-x'| > 1",
            scan.local, scan.global
        ));
        let name = if p == 1.0 { "pointwise_p1" } else { "pointwise" };
        return Ok(InequalityReport {
            name: String::from(name),
            lhs_max: scan.worst,
            argmax: scan.argmax,
            rhs,
            margin,
            verdict: v,
            violations,
            samples: scan.samples,
            constant: None,
            quadrature: nr.quadrature,
            sampler: Some(sampler.info()),
            notes,
        });
    }
}

/// Sampled Hölder norm against `3K·‖u‖_{S¹_p}` for `p > 1`, and sampled
/// `sup |u|` against `(3^n - 2^n + Γ_n^{-1})·‖u‖_{S¹_1}` for `p = 1`.
pub fn check_holder_norm(
    u: &Expr,
    p: f64,
    rect: &Rectangle,
    sampler: &PairSampler,
    opts: &CheckOptions,
) -> Result<InequalityReport, Error> {
    let prog = Program::compile(u);
    let mut ev = prog.evaluator(0);
    check_holder_norm_with(rect, p, sampler, opts, |o| s1p_norm(u, rect, p, o), |x| ev.value(x))
}

pub fn check_holder_norm_with<N, F>(
    rect: &Rectangle,
    p: f64,
    sampler: &PairSampler,
    opts: &CheckOptions,
    mut norm: N,
    mut f: F,
) -> Result<InequalityReport, Error>
where
    N: FnMut(&NormOptions) -> Result<NormReport, Error>,
    F: FnMut(&[f64]) -> Result<f64, EvalError>,
{
    check_p(p)?;
    let n = rect.dim();
    let sup = sup_norm_with(rect, &opts.norm, &mut f)?;
    let mut lhs = sup.value;
    let mut argmax = sup.argmax.clone();
    let mut notes = vec![format!("sampled sup |u| = {:e}", sup.value)];
    let mut semi = None;
    let (constant, name) = if p == 1.0 {
        (c0_constant(n, 1.0), "c0_norm_p1")
    } else {
        let gamma = (p - 1.0) / p;
        let s = holder_seminorm_with(rect, gamma, sampler, &mut f)?;
        lhs += s.value;
        if s.value > 0.0 {
            argmax = s.argmax.clone();
        }
        notes.push(format!(
            "sampled seminorm (exponent {gamma}) = {:e}: {:e} over |x-x'| <= 1, {:e} over |x-x'| > 1",
            s.value,
            s.local_value.unwrap_or(0.0),
            s.global_value.unwrap_or(0.0)
        ));
        semi = Some(s);
        (3.0 * c0_constant(n, p), "holder_norm")
    };
    let mut current = opts.clone();
    let mut reverified = false;
    loop {
        let nr = norm(&current.norm)?;
        let nv = norm_lower(&nr);
        let rhs = constant * nv;
        let margin = rhs - lhs;
        let v = verdict(margin, rhs, current.tol, nr.converged);
        if v == Verdict::Fail && opts.reverify && !reverified {
            reverified = true;
            current = current.deeper();
            notes.push(String::from("failed at default depth; re-verified at doubled order"));
            continue;
        }
        if let Some(s) = &semi {
            // branch bounds from the proof: K0·N locally, 2K·N globally
            let k0 = local_holder_constant(n, p);
            notes.push(format!(
                "local quotient {:e} <= K0*N = {:e}; global quotient {:e} <= 2K*N = {:e}",
                s.local_value.unwrap_or(0.0),
                k0 * nv,
                s.global_value.unwrap_or(0.0),
                2.0 * c0_constant(n, p) * nv
            ));
        }
        if !nr.converged {
            notes.push(String::from(
                "norm refinement did not meet tolerance; using value minus last difference",
            ));
        }
        return Ok(InequalityReport {
            name: String::from(name),
            lhs_max: lhs,
            argmax,
            rhs,
            margin,
            verdict: v,
            violations: usize::from(v == Verdict::Fail),
            samples: semi.as_ref().and_then(|s| s.sampler).map_or(0, |s| s.count),
            constant: Some(constant),
            quadrature: nr.quadrature,
            sampler: semi.as_ref().map(|_| sampler.info()),
            notes,
        });
    }
}

/// Trace of the pointwise constant as `p ↓ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitReport {
    pub n: usize,
    pub d: f64,
    /// `3^n - 2^n`
    pub limit: f64,
    /// `(p, factor(n, p, d))` in the order given.
    pub trace: Vec<(f64, f64)>,
    /// `|factor - limit|` at the last `p`.
    pub final_error: f64,
    /// Hard tolerance; applied only at `d = 1`.
    pub tol: Option<f64>,
    pub verdict: Verdict,
}

/// Default tolerance for [`check_p_to_1_limit`] at `p = 1 + 1e-4`:
/// `max(1e-3, 1e-4·(3^n - 2^n))`.
pub fn limit_tolerance(n: usize) -> f64 {
    (1e-4 * pointwise_factor(n, 1.0, 1.0)).max(1e-3)
}

/// The pointwise factor tends to `3^n - 2^n` as `p ↓ 1` for every `d > 0`.
/// Only at `d = 1` is the approach fast enough for a hard tolerance;
/// elsewhere the trace is reported and the verdict is PASS.
pub fn check_p_to_1_limit(n: usize, d: f64, ps: &[f64], tol: f64) -> Result<LimitReport, Error> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(invalid(format!("separation must be positive, got {d}")));
    }
    if ps.is_empty() || ps.iter().any(|&p| !(p > 1.0)) {
        return Err(invalid("p sequence must be nonempty with every p > 1"));
    }
    if ps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("p sequence must be strictly decreasing"));
    }
    let limit = pointwise_factor(n, 1.0, d);
    let trace: Vec<(f64, f64)> = ps.iter().map(|&p| (p, pointwise_factor(n, p, d))).collect();
    let final_error = math::abs(trace[trace.len() - 1].1 - limit);
    let hard = d == 1.0;
    let verdict = if !hard || final_error <= tol {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(LimitReport {
        n,
        d,
        limit,
        trace,
        final_error,
        tol: hard.then_some(tol),
        verdict,
    })
}

/// `‖∂_face u‖_{L_p}` on the bottom face (pinned at `lo_j`, `j` the axis
/// outside `face`) against `C·(‖g‖_p + ‖∂_j g‖_p)` over the box, with
/// `g = ∂_face u` and `C = max(p - 1 + 1/width_j, 1)`.
pub fn check_trace(
    u: &Expr,
    rect: &Rectangle,
    face: &IndexSubset,
    p: f64,
    opts: &CheckOptions,
) -> Result<InequalityReport, Error> {
    check_p(p)?;
    let n = rect.dim();
    if n < 2 {
        return Err(invalid("the trace check needs n >= 2"));
    }
    if face.ambient_dim() != n || face.len() != n - 1 {
        return Err(invalid(format!("face must have {} of the {n} axes", n - 1)));
    }
    if u.free_arity() > n {
        return Err(invalid(format!(
            "function uses x{} but the box has dimension {n}",
            u.free_arity()
        )));
    }
    let j = face
        .complement()
        .expect("one axis left")
        .axes()
        .next()
        .expect("nonempty");
    let c = trace_constant(p, rect.width(j))?.value;
    let prog = Program::compile(u);

    // left side: (n-1)-dimensional integral over the face
    let mut ev_face = prog.evaluator(face.mask());
    let face_rect = rect.project(face);
    let top = ev_face.width() - 1;
    let mut full = rect.lo().to_vec();
    let axes: Vec<usize> = face.axes().collect();
    let no = &opts.norm;
    let (res, lhs_conv) = refine_lenient(&no.grid, no.tol, no.max_level, (n - 1, no.max_points), |g| {
        let (ints, count) = integrate_box_vec(face_rect.lo(), face_rect.hi(), g, 1, |x, out| {
            for (k, &a) in axes.iter().enumerate() {
                full[a] = x[k];
            }
            out[0] = math::abs_pow(ev_face.eval(&full)?[top], p);
            Ok(())
        })?;
        Ok((math::powf(ints[0], 1.0 / p), count))
    })
    .map_err(Error::Quadrature)?;
    let lhs = res.value;
    let lhs_err = if lhs_conv {
        0.0
    } else {
        res.error_estimate.unwrap_or(0.0)
    };

    // right side: anisotropic norm of g over the box
    let mut ev_full = prog.evaluator(((1u64 << n) - 1) as u32);
    let g_index = face.mask() as usize;
    let w = ws_norm_with(rect, p, no, |x, out| {
        let jet = ev_full.eval(x)?;
        out[0] = jet[g_index];
        out[1] = jet[jet.len() - 1];
        Ok(())
    })?;
    let rhs = c * norm_lower(&w);
    let margin = rhs - (lhs + lhs_err);
    let converged = lhs_conv && w.converged;
    let v = verdict(margin, rhs, opts.tol, converged);
    let info = QuadratureInfo::from_result(&res, lhs_conv);
    let mut notes = vec![format!("normal axis x{}, W norm {:e}", j + 1, w.value)];
    if !converged {
        notes.push(String::from(
            "a refinement did not meet tolerance; margins use the last differences",
        ));
    }
    Ok(InequalityReport {
        name: format!("trace{:?}", face.indices()),
        lhs_max: lhs,
        argmax: Vec::new(),
        rhs,
        margin,
        verdict: v,
        violations: usize::from(v == Verdict::Fail),
        samples: 1,
        constant: Some(c),
        quadrature: QuadratureInfo::merge([&info].into_iter().chain(w.quadrature.as_ref())),
        sampler: None,
        notes,
    })
}

/// Multisets of `k` axes (1-based, nondecreasing) out of `1..=n`.
pub fn derivative_multisets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..=n {
            cur.push(i);
            rec(i, n, k, cur, out);
            cur.pop();
        }
    }
    rec(1, n, k, &mut cur, &mut out);
    out
}

/// Higher-order embedding through the order-1 machinery: the pointwise
/// check for every derivative of order `k - 1` of `u`.
pub fn corollary2_check(
    u: &Expr,
    k: usize,
    p: f64,
    rect: &Rectangle,
    sampler: &PairSampler,
    opts: &CheckOptions,
) -> Result<Vec<InequalityReport>, Error> {
    if !(2..=3).contains(&k) {
        return Err(invalid(format!("order k must be 2 or 3, got {k}")));
    }
    derivative_multisets(rect.dim(), k - 1)
        .into_iter()
        .map(|vars| {
            let du = u.diff_multi(&vars);
            let mut r = check_pointwise(&du, p, sampler, rect, opts)?;
            let label: Vec<String> = vars.iter().map(|v| format!("x{v}")).collect();
            r.name = format!("{}[d/{}]", r.name, label.join(" d/"));
            Ok(r)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::gallery;

    fn quick() -> CheckOptions {
        CheckOptions::default()
    }

    #[test]
    fn zero_function_passes_with_zero_margin() {
        let z = parse("0", 0).unwrap();
        let r = Rectangle::unit(2).unwrap();
        let s = PairSampler::new(1, 200);
        let pw = check_pointwise(&z, 2.0, &s, &r, &quick()).unwrap();
        assert_eq!((pw.verdict, pw.margin, pw.rhs), (Verdict::Pass, 0.0, 0.0));
        let hn = check_holder_norm(&z, 2.0, &r, &s, &quick()).unwrap();
        assert_eq!(hn.verdict, Verdict::Pass);
        let face = IndexSubset::from_indices(&[1], 2).unwrap();
        let tr = check_trace(&z, &r, &face, 2.0, &quick()).unwrap();
        assert_eq!((tr.verdict, tr.lhs_max, tr.rhs), (Verdict::Pass, 0.0, 0.0));
        for rep in corollary2_check(&z, 2, 2.0, &r, &s, &quick()).unwrap() {
            assert_eq!(rep.verdict, Verdict::Pass);
        }
    }

    #[test]
    fn bump_pointwise_passes() {
        let g = gallery::lookup("bump2d").unwrap();
        let s = PairSampler::new(7, 2000);
        let r = check_pointwise(&g.expr, 2.0, &s, g.support.as_ref().unwrap(), &quick()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.margin > 0.0);
        assert_eq!(r.violations, 0);
        assert_eq!(r.argmax.len(), 2);
    }

    #[test]
    fn one_dimensional_p1_holder_norm() {
        let g = gallery::lookup("bump1d").unwrap();
        let s = PairSampler::new(7, 100);
        let r = check_holder_norm(&g.expr, 1.0, g.support.as_ref().unwrap(), &s, &quick()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!((r.constant.unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn trace_of_product_vanishes_on_the_bottom_face() {
        let u = parse("x1*x2", 2).unwrap();
        let r = Rectangle::unit(2).unwrap();
        let face = IndexSubset::from_indices(&[1], 2).unwrap();
        let rep = check_trace(&u, &r, &face, 2.0, &quick()).unwrap();
        assert_eq!(rep.constant, Some(2.0));
        assert_eq!(rep.lhs_max, 0.0);
        assert_eq!(rep.margin, rep.rhs);
        // g = x2, ∂2 g = 1: C·(1/√3 + 1)
        assert!((rep.rhs - 2.0 * (1.0 / 3f64.sqrt() + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn elongated_trace_constant() {
        let u = parse("x1 + x2", 2).unwrap();
        let r = Rectangle::new(vec![0.0, 0.0], vec![1.0, 10.0]).unwrap();
        let face = IndexSubset::from_indices(&[1], 2).unwrap();
        let rep = check_trace(&u, &r, &face, 2.0, &quick()).unwrap();
        assert!((rep.constant.unwrap() - 1.1).abs() < 1e-15);
        assert!(check_trace(
            &u,
            &Rectangle::unit(1).unwrap(),
            &IndexSubset::full(1).unwrap(),
            2.0,
            &quick()
        )
        .is_err());
    }

    #[test]
    fn limit_examples() {
        let ps = [2.0, 1.5, 1.1, 1.01, 1.001, 1.0001];
        let r = check_p_to_1_limit(2, 1.0, &ps, 1e-3).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!((r.trace[5].1 - 5.0).abs() < 1e-3);
        let r = check_p_to_1_limit(3, 1.0, &ps, 5e-3).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        let r = check_p_to_1_limit(1, 1.0, &ps, 1e-3).unwrap();
        assert_eq!(r.limit, 1.0);
        let far = check_p_to_1_limit(2, 100.0, &ps, 1e-3).unwrap();
        assert_eq!(far.tol, None);
        assert!(check_p_to_1_limit(2, 1.0, &[1.5, 2.0], 1e-3).is_err());
    }

    #[test]
    fn multisets() {
        assert_eq!(derivative_multisets(2, 1), vec![vec![1], vec![2]]);
        assert_eq!(derivative_multisets(2, 2), vec![vec![1, 1], vec![1, 2], vec![2, 2]]);
        assert_eq!(derivative_multisets(3, 2).len(), 6);
    }

    #[test]
    fn affine_corollary_passes() {
        let u = parse("2*x1 - x2 + 3", 2).unwrap();
        let r = Rectangle::unit(2).unwrap();
        let reps = corollary2_check(&u, 2, 2.0, &r, &PairSampler::new(3, 300), &quick()).unwrap();
        assert_eq!(reps.len(), 2);
        for rep in reps {
            assert_eq!(rep.verdict, Verdict::Pass);
            assert_eq!(rep.lhs_max, 0.0);
        }
    }
}
