use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Error};
use crate::gallery::loglog_expr;
use crate::jet::Program;
use crate::math;
use crate::quadrature::gauss_legendre;
use crate::report::Verdict;
use crate::sum::NeumaierSum;

/// Radial Gauss order per geometric cell.
const RADIAL_ORDER: usize = 16;
/// Trapezoid nodes in the angle (spectrally accurate for periodic data).
const ANGLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterexampleRow {
    pub r0: f64,
    /// Sampled sup over `{r0 < |x| < 1}`.
    pub sup: f64,
    /// `(‖u‖² + ‖∇u‖²)^{1/2}` over the annulus.
    pub w12: f64,
    /// `(Σ_S ‖∂_S u‖²)^{1/2}` over the annulus.
    pub s12: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleReport {
    pub n: usize,
    pub rows: Vec<CounterexampleRow>,
    /// Largest relative change of `w12` when the radial order drops from
    /// 16 to 12, over all rows.
    pub quadrature_difference: f64,
    pub verdict: Verdict,
}

impl CounterexampleReport {
    pub fn sup_strictly_increasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].sup > w[0].sup)
    }

    /// `sup` at the last radius over `sup` at the first.
    pub fn sup_growth(&self) -> f64 {
        self.rows[self.rows.len() - 1].sup / self.rows[0].sup
    }

    /// `(w12_{k+1} - w12_k) / w12_k`, one per consecutive pair of rows.
    pub fn w12_increments(&self) -> Vec<f64> {
        self.rows.windows(2).map(|w| (w[1].w12 - w[0].w12) / w[0].w12).collect()
    }

    /// `s12` at the last radius over `s12` at the first.
    pub fn s12_growth(&self) -> f64 {
        self.rows[self.rows.len() - 1].s12 / self.rows[0].s12
    }

    /// `sup / w12` per row.
    pub fn sup_over_w12(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.sup / r.w12).collect()
    }
}

/// Annulus integrals of `loglog` with smoothing radius `r0`:
/// `(sup, ∫u², ∫|∇u|², Σ_S ∫(∂_S u)²)`.
fn annulus(n: usize, r0: f64, order: usize) -> Result<(f64, f64, f64, f64), Error> {
    let prog = Program::compile(&loglog_expr(n, r0));
    let width = 1usize << n;
    let mut ev = prog.evaluator((width - 1) as u32);
    let rule = gauss_legendre(order)?;
    // geometric cells r0·2^i up to 1
    let mut edges = alloc::vec![r0];
    while *edges.last().expect("nonempty") < 1.0 {
        let next = (edges.last().expect("nonempty") * 2.0).min(1.0);
        edges.push(next);
    }
    let mut sup = ev.value(&radial_point(n, r0, 0.0))?;
    let (mut l2, mut grad, mut mixed) = (NeumaierSum::new(), NeumaierSum::new(), NeumaierSum::new());
    let angles = if n == 1 { 1 } else { ANGLES };
    for cell in edges.windows(2) {
        let (a, b) = (cell[0], cell[1]);
        let half = 0.5 * (b - a);
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            let r = a + half * (1.0 + t);
            // measure: 2 half-lines in 1-D, r dθ dr in 2-D
            let wr = if n == 1 {
                2.0 * half * w
            } else {
                half * w * r * 2.0 * core::f64::consts::PI / ANGLES as f64
            };
            for k in 0..angles {
                let theta = 2.0 * core::f64::consts::PI * k as f64 / ANGLES as f64;
                let jet = ev.eval(&radial_point(n, r, theta))?;
                sup = sup.max(math::abs(jet[0]));
                l2.add(wr * jet[0] * jet[0]);
                let g: f64 = (0..n).map(|i| jet[1 << i] * jet[1 << i]).sum();
                grad.add(wr * g);
                mixed.add(wr * jet.iter().map(|c| c * c).sum::<f64>());
            }
        }
    }
    Ok((sup, l2.value(), grad.value(), mixed.value()))
}

fn radial_point(n: usize, r: f64, theta: f64) -> Vec<f64> {
    if n == 1 {
        alloc::vec![r]
    } else {
        alloc::vec![r * math::cos(theta), r * math::sin(theta)]
    }
}

/// Blow-up study of `log(log(1 + 1/sqrt(|x|^2 + r0^2)))` on
/// `{r0 < |x| < 1}` for decreasing `r0`.
///
/// In two dimensions the sup and the mixed norm grow without bound while
/// the `W^1_2` norm converges; the verdict is PASS when the sup and `s12`
/// increase strictly and the `w12` increments shrink. In one dimension
/// the verdict checks the interval embedding `sup ≤ (1 - r0)^{-1/2}·w12`
/// on the two half-lines.
pub fn counterexample_run(n: usize, radii: &[f64]) -> Result<CounterexampleReport, Error> {
    if !(1..=2).contains(&n) {
        return Err(invalid(format!("the counterexample runs in n = 1 or 2, got {n}")));
    }
    if radii.is_empty() {
        return Err(invalid("radius list is empty"));
    }
    if radii.iter().any(|&r| !(r > 0.0 && r < 0.5)) {
        return Err(invalid("radii must lie in (0, 1/2)"));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("radii must be strictly decreasing"));
    }
    let mut rows = Vec::with_capacity(radii.len());
    let mut qdiff = 0.0f64;
    for &r0 in radii {
        let (sup, l2, grad, mixed) = annulus(n, r0, RADIAL_ORDER)?;
        let w12 = math::sqrt(l2 + grad);
        let (_, l2c, gradc, _) = annulus(n, r0, 12)?;
        qdiff = qdiff.max(math::abs(math::sqrt(l2c + gradc) - w12) / w12);
        rows.push(CounterexampleRow {
            r0,
            sup,
            w12,
            s12: math::sqrt(mixed),
        });
    }
    let mut report = CounterexampleReport {
        n,
        rows,
        quadrature_difference: qdiff,
        verdict: Verdict::Pass,
    };
    let ok = if n == 2 {
        let inc = report.w12_increments();
        report.sup_strictly_increasing()
            && report.rows.windows(2).all(|w| w[1].s12 > w[0].s12)
            && inc.windows(2).all(|w| w[1] < w[0])
    } else {
        report.rows.iter().all(|r| r.sup <= r.w12 / math::sqrt(1.0 - r.r0))
    };
    report.verdict = if ok { Verdict::Pass } else { Verdict::Fail };
    Ok(report)
}
