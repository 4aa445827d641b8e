//! The generalized Newton-Leibniz identity
//!
//! ```text
//! u(x') - u(x) = Σ_{∅ ≠ S ⊆ {1..n}} ∫_{P_S} ∂^{|S|} u / ∂x_S
//! ```
//!
//! assembled face by face and checked against the corner difference.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{invalid, Error};
use crate::expr::Expr;
use crate::jet::Program;
use crate::math;
use crate::quadrature::{integrate_face, refine_until, GridSpec, IntegralResult, QuadratureError};
use crate::rect::{enumerate_subsets, normalize_pair, sub_rectangle, IndexSubset, Rectangle};
use crate::report::Verdict;
use crate::sum::neumaier_sum;

/// Contribution of one face.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetRecord {
    pub subset: IndexSubset,
    pub value: f64,
    pub error_estimate: Option<f64>,
    pub evaluations: u64,
    pub grid: GridSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnlBreakdown {
    /// One record per face in enumeration order.
    pub records: Vec<SubsetRecord>,
    /// `u(x') - u(x)`.
    pub lhs: f64,
    /// Compensated sum of the record values, in record order.
    pub rhs: f64,
    pub residual: f64,
}

impl GnlBreakdown {
    fn assemble(records: Vec<SubsetRecord>, lhs: f64) -> Self {
        let rhs = neumaier_sum(records.iter().map(|r| r.value));
        Self {
            residual: math::abs(lhs - rhs),
            records,
            lhs,
            rhs,
        }
    }

    pub fn empty() -> Self {
        Self::assemble(Vec::new(), 0.0)
    }

    /// `residual / max(1, |lhs|)`.
    pub fn relative_residual(&self) -> f64 {
        self.residual / math::abs(self.lhs).max(1.0)
    }

    pub fn evaluations(&self) -> u64 {
        self.records.iter().map(|r| r.evaluations).sum()
    }

    /// Largest per-face error estimate, if any face was refined.
    pub fn max_error_estimate(&self) -> Option<f64> {
        self.records.iter().filter_map(|r| r.error_estimate).reduce(f64::max)
    }
}

/// How each face integral is computed.
#[derive(Debug, Clone, PartialEq)]
pub enum FaceQuadrature {
    /// One pass on a fixed grid.
    Fixed(GridSpec),
    /// Grid doubling until successive values agree within `tol`.
    Refined { grid: GridSpec, tol: f64, max_level: usize },
}

fn check_arity(u: &Expr, n: usize) -> Result<(), Error> {
    if u.free_arity() > n {
        return Err(invalid(format!(
            "function uses x{} but the box has dimension {n}",
            u.free_arity()
        )));
    }
    Ok(())
}

fn corner_difference(u: &Expr, p: &Rectangle) -> Result<f64, Error> {
    Ok(u.eval(p.hi())? - u.eval(p.lo())?)
}

/// Face integrals of the identity on `p` with a fixed grid.
pub fn gnl_rhs(u: &Expr, p: &Rectangle, grid: &GridSpec) -> Result<GnlBreakdown, Error> {
    gnl_breakdown(u, p, &FaceQuadrature::Fixed(grid.clone()))
}

/// Face integrals of the identity on `p`.
pub fn gnl_breakdown(u: &Expr, p: &Rectangle, quad: &FaceQuadrature) -> Result<GnlBreakdown, Error> {
    let n = p.dim();
    check_arity(u, n)?;
    let lhs = corner_difference(u, p)?;
    let program = Program::compile(u);
    let mut records = Vec::with_capacity((1 << n) - 1);
    for s in enumerate_subsets(n)? {
        let face = sub_rectangle(p, &s)?;
        let mut ev = program.evaluator(s.mask());
        let top = ev.width() - 1;
        let integrand = |x: &[f64]| -> Result<f64, crate::expr::EvalError> { Ok(ev.eval(x)?[top]) };
        let r: IntegralResult = match quad {
            FaceQuadrature::Fixed(grid) => integrate_face(integrand, &face, grid),
            FaceQuadrature::Refined { grid, tol, max_level } => refine_until(integrand, &face, grid, *tol, *max_level),
        }
        .map_err(|e| face_error(&s, e))?;
        records.push(SubsetRecord {
            subset: s,
            value: r.value,
            error_estimate: r.error_estimate,
            evaluations: r.evaluations,
            grid: r.grid,
        });
    }
    Ok(GnlBreakdown::assemble(records, lhs))
}

fn face_error(s: &IndexSubset, e: QuadratureError) -> Error {
    Error::Face { subset: *s, source: e }
}

/// The identity for an arbitrary pair of points.
///
/// Decreasing axes are reflected in the expression itself and axes where
/// the points agree are frozen, so the face integrals always run over an
/// increasing box of the effective dimension. Records are reported with
/// their original axis numbers.
pub fn gnl_for_pair(u: &Expr, x: &[f64], x_prime: &[f64], quad: &FaceQuadrature) -> Result<GnlBreakdown, Error> {
    let np = normalize_pair(x, x_prime, 0.0)?;
    check_arity(u, x.len())?;
    let (Some(rect), Some(kept)) = (np.rect.as_ref(), np.kept) else {
        return Ok(GnlBreakdown::empty());
    };
    let kept_axes: Vec<usize> = kept.axes().collect();
    let reduced = u.substitute(&mut |i| {
        let axis = i - 1;
        match kept_axes.iter().position(|&a| a == axis) {
            Some(r) if np.transform.is_flipped(axis) => -Expr::var(r + 1),
            Some(r) => Expr::var(r + 1),
            None => Expr::Const(x[axis]),
        }
    });
    let inner = gnl_breakdown(&reduced, rect, quad)?;
    let records = inner
        .records
        .into_iter()
        .map(|r| {
            let local = r.subset.mask();
            SubsetRecord {
                subset: kept.from_local_mask(local).expect("nonempty"),
                ..r
            }
        })
        .collect();
    let lhs = u.eval(x_prime)? - u.eval(x)?;
    Ok(GnlBreakdown::assemble(records, lhs))
}

/// Settings for [`gnl_verify`].
#[derive(Debug, Clone, PartialEq)]
pub struct GnlOptions {
    pub grid: GridSpec,
    /// Per-face refinement tolerance.
    pub quad_tol: f64,
    pub max_level: usize,
}

impl Default for GnlOptions {
    fn default() -> Self {
        Self {
            // one base cell: the first refinement already gives two levels
            grid: GridSpec::uniform(crate::quadrature::DEFAULT_ORDER, 1),
            quad_tol: 1e-10,
            max_level: 5,
        }
    }
}

/// Result for one box.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxOutcome {
    pub rect: Rectangle,
    pub verdict: Verdict,
    pub breakdown: Option<GnlBreakdown>,
    /// Why the box could not be decided.
    pub reason: Option<String>,
    /// Set when a first FAIL was overturned by a finer re-run.
    pub reverified: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnlCheck {
    pub boxes: Vec<BoxOutcome>,
    pub verdict: Verdict,
    /// Index of the box with the largest relative residual.
    pub worst: Option<usize>,
    pub tol: f64,
}

impl GnlCheck {
    pub fn worst_relative_residual(&self) -> Option<f64> {
        self.worst
            .and_then(|i| self.boxes[i].breakdown.as_ref())
            .map(GnlBreakdown::relative_residual)
    }
}

fn run_box(u: &Expr, rect: &Rectangle, tol: f64, opts: &GnlOptions) -> BoxOutcome {
    let attempt = |grid: &GridSpec, quad_tol: f64| {
        gnl_breakdown(
            u,
            rect,
            &FaceQuadrature::Refined {
                grid: grid.clone(),
                tol: quad_tol,
                max_level: opts.max_level,
            },
        )
    };
    let decide = |b: &GnlBreakdown| {
        if b.residual <= tol * math::abs(b.lhs).max(1.0) {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    };
    match attempt(&opts.grid, opts.quad_tol) {
        Err(e) => BoxOutcome {
            rect: rect.clone(),
            verdict: Verdict::Inconclusive,
            breakdown: None,
            reason: Some(format!("{e}")),
            reverified: false,
        },
        Ok(b) if decide(&b) == Verdict::Pass => BoxOutcome {
            rect: rect.clone(),
            verdict: Verdict::Pass,
            breakdown: Some(b),
            reason: None,
            reverified: false,
        },
        Ok(b) => {
            // confirm with a finer rule before calling it a failure
            let finer = GridSpec {
                order: (opts.grid.order * 2).min(crate::quadrature::MAX_ORDER),
                cells: opts.grid.cells.clone(),
            };
            match attempt(&finer, opts.quad_tol * 1e-2) {
                Ok(b2) => {
                    let verdict = decide(&b2);
                    BoxOutcome {
                        rect: rect.clone(),
                        verdict,
                        reverified: verdict == Verdict::Pass,
                        breakdown: Some(b2),
                        reason: None,
                    }
                }
                Err(e) => BoxOutcome {
                    rect: rect.clone(),
                    verdict: Verdict::Inconclusive,
                    breakdown: Some(b),
                    reason: Some(format!("re-verification failed: {e}")),
                    reverified: false,
                },
            }
        }
    }
}

/// Checks the identity on every box: PASS iff each residual is at most
/// `tol·max(1, |lhs|)`. Boxes where a face integral cannot be computed or
/// does not converge are INCONCLUSIVE.
pub fn gnl_verify(u: &Expr, rectangles: &[Rectangle], tol: f64, opts: &GnlOptions) -> Result<GnlCheck, Error> {
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let boxes: Vec<BoxOutcome> = rectangles.iter().map(|r| run_box(u, r, tol, opts)).collect();
    Ok(summarize(boxes, tol))
}

/// Combines per-box outcomes, e.g. computed in parallel by the caller.
pub fn summarize(boxes: Vec<BoxOutcome>, tol: f64) -> GnlCheck {
    let verdict = Verdict::combine(boxes.iter().map(|b| b.verdict));
    let mut worst: Option<(usize, f64)> = None;
    for (i, b) in boxes.iter().enumerate() {
        if let Some(bd) = &b.breakdown {
            let r = bd.relative_residual();
            if worst.is_none_or(|(_, w)| r > w) {
                worst = Some((i, r));
            }
        }
    }
    GnlCheck {
        boxes,
        verdict,
        worst: worst.map(|(i, _)| i),
        tol,
    }
}

/// One box of [`gnl_verify`]; lets callers distribute boxes over threads.
pub fn verify_box(u: &Expr, rect: &Rectangle, tol: f64, opts: &GnlOptions) -> BoxOutcome {
    run_box(u, rect, tol, opts)
}
