//! Tensor-product composite Gauss-Legendre quadrature on boxes and faces.
//!
//! Sample points are visited in odometer order with the first axis
//! slowest; along each axis, cells are outer and nodes inner. Sums use
//! Neumaier compensation, so a given grid always yields the same bits.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::expr::EvalError;
use crate::math;
use crate::rect::SubRectangle;
use crate::sum::NeumaierSum;

pub const MAX_ORDER: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum QuadratureError {
    OrderOutOfRange(usize),
    InvalidCells,
    InvalidTolerance(f64),
    DimensionMismatch {
        expected: usize,
        found: usize,
    },
    /// Refinement stopped at `max_level` without meeting the tolerance.
    NotConverged {
        last: f64,
        previous: f64,
        levels: usize,
        evaluations: u64,
    },
    NonFinite {
        point: Vec<f64>,
    },
    Evaluation {
        point: Vec<f64>,
        source: EvalError,
    },
}

impl fmt::Display for QuadratureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::OrderOutOfRange(q) => write!(f, "quadrature order {q} outside 1..={MAX_ORDER}"),
            Self::InvalidCells => f.write_str("cells per axis must be at least 1"),
            Self::InvalidTolerance(t) => write!(f, "tolerance must be positive, got {t}"),
            Self::DimensionMismatch { expected, found } => {
                write!(f, "grid has {found} cell counts for {expected} axes")
            }
            Self::NotConverged {
                last,
                previous,
                levels,
                evaluations,
            } => write!(
                f,
                "no convergence after {levels} levels ({evaluations} evaluations): last {last:e}, previous {previous:e}"
            ),
            Self::NonFinite { point } => write!(f, "integrand is not finite at {point:?}"),
            Self::Evaluation { point, source } => write!(f, "at {point:?}: {source}"),
        }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

pub fn gauss_legendre(order: usize) -> Result<QuadratureRule, QuadratureError> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(QuadratureError::OrderOutOfRange(order));
    }
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    if n == 1 {
        weights[0] = 2.0;
        return Ok(QuadratureRule { order, nodes, weights });
    }
    for i in 0..n / 2 {
        let mut x = math::cos(math::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            let dx = p / d;
            x -= dx;
            dp = d;
            if math::abs(dx) <= 1e-15 {
                let (_, d) = legendre(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        let (_, d) = legendre(n, 0.0);
        weights[n / 2] = 2.0 / (d * d);
    }
    Ok(QuadratureRule { order, nodes, weights })
}

/// Composite subdivision: `cells[i]` equal cells on the `i`-th integrated
/// axis, each carrying an `order`-point rule. A single entry applies to
/// every axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec {
    pub order: usize,
    pub cells: Vec<usize>,
}

/// Gauss order used when none is given.
pub const DEFAULT_ORDER: usize = 12;

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            order: DEFAULT_ORDER,
            cells: vec![2],
        }
    }
}

impl GridSpec {
    pub fn new(order: usize, cells: Vec<usize>) -> Result<Self, QuadratureError> {
        let g = Self { order, cells };
        g.validate()?;
        Ok(g)
    }

    pub fn uniform(order: usize, cells: usize) -> Self {
        Self {
            order,
            cells: vec![cells],
        }
    }

    fn validate(&self) -> Result<(), QuadratureError> {
        if !(1..=MAX_ORDER).contains(&self.order) {
            return Err(QuadratureError::OrderOutOfRange(self.order));
        }
        if self.cells.is_empty() || self.cells.contains(&0) {
            return Err(QuadratureError::InvalidCells);
        }
        Ok(())
    }

    /// Cell count on the `i`-th integrated axis.
    pub fn cells_on(&self, i: usize) -> usize {
        if self.cells.len() == 1 {
            self.cells[0]
        } else {
            self.cells[i]
        }
    }

    /// Cell counts expanded to `k` axes.
    pub fn expanded(&self, k: usize) -> Result<Vec<usize>, QuadratureError> {
        if self.cells.len() != 1 && self.cells.len() != k {
            return Err(QuadratureError::DimensionMismatch {
                expected: k,
                found: self.cells.len(),
            });
        }
        Ok((0..k).map(|i| self.cells_on(i)).collect())
    }

    /// Same order, every cell count doubled.
    pub fn refined(&self) -> Self {
        Self {
            order: self.order,
            cells: self.cells.iter().map(|c| c * 2).collect(),
        }
    }

    /// Number of integrand evaluations over `k` axes.
    pub fn points(&self, k: usize) -> u64 {
        (0..k).map(|i| (self.order * self.cells_on(i)) as u64).product()
    }
}

/// Outcome of a (possibly refined) quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralResult {
    pub value: f64,
    /// `|v_L - v_{L-1}|` over the last two levels; `None` for one level.
    pub error_estimate: Option<f64>,
    /// Total over all levels evaluated.
    pub evaluations: u64,
    /// Grid of the accepted level.
    pub grid: GridSpec,
    /// Value at each level, coarsest first.
    pub history: Vec<f64>,
}

impl IntegralResult {
    /// Refinements beyond the first comparison (0 when the first doubling
    /// already met the tolerance).
    pub fn level(&self) -> usize {
        self.history.len().saturating_sub(2)
    }
}

/// Per-axis nodes and weights on `[lo, hi]`, cells outer, nodes inner.
fn axis_samples(rule: &QuadratureRule, lo: f64, hi: f64, cells: usize) -> (Vec<f64>, Vec<f64>) {
    let h = (hi - lo) / cells as f64;
    let half = 0.5 * h;
    let mut xs = Vec::with_capacity(cells * rule.order);
    let mut ws = Vec::with_capacity(cells * rule.order);
    for c in 0..cells {
        let a = lo + c as f64 * h;
        let mid = a + half;
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            xs.push(mid + half * t);
            ws.push(half * w);
        }
    }
    (xs, ws)
}

/// Integrates the `m`-valued integrand `f(point, out)` over the box
/// `[lo, hi]`. Returns the component integrals and the number of calls.
pub fn integrate_box_vec<F>(
    lo: &[f64],
    hi: &[f64],
    grid: &GridSpec,
    m: usize,
    mut f: F,
) -> Result<(Vec<f64>, u64), QuadratureError>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<(), EvalError>,
{
    let k = lo.len();
    grid.validate()?;
    let cells = grid.expanded(k)?;
    let rule = gauss_legendre(grid.order)?;
    let samples: Vec<(Vec<f64>, Vec<f64>)> = (0..k).map(|i| axis_samples(&rule, lo[i], hi[i], cells[i])).collect();
    // Dividing by the discrete mass and multiplying by the volume makes
    // constants integrate exactly.
    let volume: f64 = (0..k).map(|i| hi[i] - lo[i]).product();
    let mut mass = NeumaierSum::new();
    let mut sums = vec![NeumaierSum::new(); m];
    let mut vals = vec![0.0; m];
    let mut point: Vec<f64> = samples.iter().map(|s| s.0[0]).collect();
    let mut idx = vec![0usize; k];
    let mut count = 0u64;
    loop {
        let mut w = 1.0;
        for i in 0..k {
            point[i] = samples[i].0[idx[i]];
            w *= samples[i].1[idx[i]];
        }
        f(&point, &mut vals).map_err(|source| QuadratureError::Evaluation {
            point: point.clone(),
            source,
        })?;
        count += 1;
        mass.add(w);
        for (s, &v) in sums.iter_mut().zip(&vals) {
            if !v.is_finite() {
                return Err(QuadratureError::NonFinite { point: point.clone() });
            }
            s.add(w * v);
        }
        // odometer, last axis fastest
        let mut axis = k;
        loop {
            if axis == 0 {
                let scale = volume / mass.value();
                return Ok((sums.iter().map(|s| s.value() * scale).collect(), count));
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < samples[axis].0.len() {
                break;
            }
            idx[axis] = 0;
        }
    }
}

/// Scalar version of [`integrate_box_vec`].
pub fn integrate_box<F>(lo: &[f64], hi: &[f64], grid: &GridSpec, mut f: F) -> Result<(f64, u64), QuadratureError>
where
    F: FnMut(&[f64]) -> Result<f64, EvalError>,
{
    let (v, n) = integrate_box_vec(lo, hi, grid, 1, |x, out| {
        out[0] = f(x)?;
        Ok(())
    })?;
    Ok((v[0], n))
}

/// One quadrature over the free axes of `sr`; `f` receives full points with
/// pinned coordinates taken from the face's base.
pub fn integrate_face<F>(mut f: F, sr: &SubRectangle, grid: &GridSpec) -> Result<IntegralResult, QuadratureError>
where
    F: FnMut(&[f64]) -> Result<f64, EvalError>,
{
    let (lo, hi) = sr.free_bounds();
    let mut full = sr.base().to_vec();
    let (value, evaluations) = integrate_box(&lo, &hi, grid, |local| {
        sr.embed(local, &mut full);
        f(&full)
    })?;
    Ok(IntegralResult {
        value,
        error_estimate: None,
        evaluations,
        grid: grid.clone(),
        history: vec![value],
    })
}

/// Whether `|v - prev| ≤ tol·max(1, |v|)`.
pub fn within_tolerance(v: f64, prev: f64, tol: f64) -> bool {
    math::abs(v - prev) <= tol * math::abs(v).max(1.0)
}

/// Doubles the grid until two successive levels agree.
///
/// `level(grid)` returns the quantity of interest and the number of
/// integrand calls it made. At most `max_level + 2` grids are tried.
pub fn refine<F>(grid: &GridSpec, tol: f64, max_level: usize, level: F) -> Result<IntegralResult, QuadratureError>
where
    F: FnMut(&GridSpec) -> Result<(f64, u64), QuadratureError>,
{
    let (result, converged) = refine_lenient(grid, tol, max_level, (0, u64::MAX), level)?;
    if converged {
        return Ok(result);
    }
    let n = result.history.len();
    Err(QuadratureError::NotConverged {
        last: result.history[n - 1],
        previous: result.history[n - 2],
        levels: n,
        evaluations: result.evaluations,
    })
}

/// Like [`refine`], but non-convergence is reported as `false` alongside
/// the finest level reached. Refinement also stops before any grid with
/// more than `max_points` sample points over `dims` axes.
pub fn refine_lenient<F>(
    grid: &GridSpec,
    tol: f64,
    max_level: usize,
    budget: (usize, u64),
    mut level: F,
) -> Result<(IntegralResult, bool), QuadratureError>
where
    F: FnMut(&GridSpec) -> Result<(f64, u64), QuadratureError>,
{
    if !(tol > 0.0) {
        return Err(QuadratureError::InvalidTolerance(tol));
    }
    let mut g = grid.clone();
    let (dims, max_points) = budget;
    let (mut prev, mut evaluations) = level(&g)?;
    let mut history = vec![prev];
    let mut converged = false;
    for _ in 0..=max_level {
        let next = g.refined();
        if history.len() > 1 && next.points(dims) > max_points {
            break;
        }
        g = next;
        let (v, n) = level(&g)?;
        evaluations += n;
        history.push(v);
        if within_tolerance(v, prev, tol) {
            converged = true;
            break;
        }
        prev = v;
    }
    let k = history.len();
    let value = history[k - 1];
    let error_estimate = (k > 1).then(|| math::abs(history[k - 1] - history[k - 2]));
    Ok((
        IntegralResult {
            value,
            error_estimate,
            evaluations,
            grid: g,
            history,
        },
        converged,
    ))
}

/// [`integrate_face`] under [`refine`].
pub fn refine_until<F>(
    mut f: F,
    sr: &SubRectangle,
    grid: &GridSpec,
    tol: f64,
    max_level: usize,
) -> Result<IntegralResult, QuadratureError>
where
    F: FnMut(&[f64]) -> Result<f64, EvalError>,
{
    refine(grid, tol, max_level, |g| {
        let r = integrate_face(&mut f, sr, g)?;
        Ok((r.value, r.evaluations))
    })
}
