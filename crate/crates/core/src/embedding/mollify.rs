use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error};
use crate::expr::{EvalError, Expr};
use crate::jet::{JetEvaluator, Program};
use crate::math;
use crate::norms::unit_ball_volume;
use crate::quadrature::{gauss_legendre, integrate_box, refine, GridSpec};
use crate::rect::Rectangle;

/// Unnormalized bump `exp(-1/(1 - s))` at `s = |y|^2`.
fn raw_bump(s: f64) -> f64 {
    if s < 1.0 {
        math::exp(-1.0 / (1.0 - s))
    } else {
        0.0
    }
}

/// `c` such that `c·exp(-1/(1 - |y|^2))` has unit mass in `R^n`, from the
/// radial integral `n·Γ_n ∫_0^1 r^{n-1} exp(-1/(1 - r^2)) dr`.
pub fn kernel_normalization(n: usize) -> Result<f64, Error> {
    if n == 0 {
        return Err(invalid("dimension must be >= 1"));
    }
    let radial = refine(&GridSpec::uniform(20, 2), 1e-15, 10, |g| {
        integrate_box(&[0.0], &[1.0], g, |r| {
            Ok(math::powi(r[0], (n - 1) as u32) * raw_bump(r[0] * r[0]))
        })
    })?;
    Ok(1.0 / (n as f64 * unit_ball_volume(n) * radial.value))
}

/// The standard mollifier on `R^n`, discretized once on `[-1, 1]^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mollifier {
    pub n: usize,
    /// Normalization constant of the kernel.
    pub c: f64,
    /// Tensor grid of the discretization.
    pub grid: GridSpec,
    /// Discrete kernel mass before renormalization; within `mass_tol` of 1.
    /// The stored weights are rescaled to unit mass, so constants are
    /// reproduced to rounding.
    pub mass: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Mollifier {
    /// Refines the tensor grid until the discrete mass is within
    /// `mass_tol` of 1.
    pub fn new(n: usize, mass_tol: f64) -> Result<Self, Error> {
        if !(1..=4).contains(&n) {
            return Err(invalid(format!("mollification supports n in 1..=4, got {n}")));
        }
        let c = kernel_normalization(n)?;
        let mut grid = GridSpec::uniform(12, 2);
        loop {
            let m = Self::discretize(n, c, &grid)?;
            if math::abs(m.mass - 1.0) <= mass_tol {
                return Ok(m);
            }
            if grid.points(n) > 2_000_000 {
                return Err(invalid(format!(
                    "kernel mass {} not within {mass_tol:e} of 1 on affordable grids",
                    m.mass
                )));
            }
            grid = grid.refined();
        }
    }

    /// Discretizes on a fixed grid over `[-1, 1]^n`, whatever the mass
    /// error. The result is still a smooth mollification; coarse grids
    /// are cheap to apply.
    pub fn with_grid(n: usize, grid: &GridSpec) -> Result<Self, Error> {
        if !(1..=4).contains(&n) {
            return Err(invalid(format!("mollification supports n in 1..=4, got {n}")));
        }
        Self::discretize(n, kernel_normalization(n)?, grid)
    }

    fn discretize(n: usize, c: f64, grid: &GridSpec) -> Result<Self, Error> {
        let rule = gauss_legendre(grid.order)?;
        let cells = grid.cells_on(0);
        let h = 2.0 / cells as f64;
        let mut xs = Vec::new();
        let mut ws = Vec::new();
        for k in 0..cells {
            let mid = -1.0 + (k as f64 + 0.5) * h;
            for (t, w) in rule.nodes.iter().zip(&rule.weights) {
                xs.push(mid + 0.5 * h * t);
                ws.push(0.5 * h * w);
            }
        }
        let m = xs.len();
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut mass = crate::sum::NeumaierSum::new();
        let mut idx = vec![0usize; n];
        loop {
            let y: Vec<f64> = idx.iter().map(|&i| xs[i]).collect();
            let s: f64 = y.iter().map(|v| v * v).sum();
            let k = c * raw_bump(s);
            if k > 0.0 {
                let w = idx.iter().map(|&i| ws[i]).product::<f64>() * k;
                mass.add(w);
                nodes.extend_from_slice(&y);
                weights.push(w);
            }
            let mut a = n;
            loop {
                if a == 0 {
                    let mass = mass.value();
                    weights.iter_mut().for_each(|w| *w /= mass);
                    return Ok(Self {
                        n,
                        c,
                        grid: grid.clone(),
                        mass,
                        nodes,
                        weights,
                    });
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < m {
                    break;
                }
                idx[a] = 0;
            }
        }
    }

    /// `c·exp(-1/(1 - |y|^2))` inside the unit ball, 0 outside.
    pub fn kernel(&self, y: &[f64]) -> f64 {
        self.c * raw_bump(y.iter().map(|v| v * v).sum())
    }

    /// Number of nodes inside the ball.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn node(&self, k: usize) -> &[f64] {
        &self.nodes[k * self.n..(k + 1) * self.n]
    }

    /// The kernel as an expression, for jets of its derivatives.
    pub fn kernel_expr(&self) -> Expr {
        let s = crate::expr::sum_of_squares(self.n);
        self.c * (-1.0 / (1.0 - s)).exp()
    }

    /// Mollifies `u` at scale `eps`.
    pub fn apply<'p>(&'p self, program: &'p Program, eps: f64) -> Result<MollifiedFunction<'p>, Error> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(invalid(format!("eps must be positive, got {eps}")));
        }
        if program.arity() > self.n {
            return Err(invalid("function has more variables than the mollifier dimension"));
        }
        let full = ((1u64 << self.n) - 1) as u32;
        Ok(MollifiedFunction {
            mol: self,
            eps,
            value_ev: program.evaluator(0),
            jet_ev: program.evaluator(full),
            shifted: vec![0.0; self.n],
            kernel_jets: None,
        })
    }
}

/// `u_ε = u * φ_ε` evaluated by the discretized kernel.
pub struct MollifiedFunction<'p> {
    mol: &'p Mollifier,
    pub eps: f64,
    value_ev: JetEvaluator<'p>,
    jet_ev: JetEvaluator<'p>,
    shifted: Vec<f64>,
    /// All mixed partials of the kernel at each node, computed lazily.
    kernel_jets: Option<Vec<f64>>,
}

impl MollifiedFunction<'_> {
    pub fn dim(&self) -> usize {
        self.mol.n
    }

    pub fn value(&mut self, x: &[f64]) -> Result<f64, EvalError> {
        let mut acc = crate::sum::NeumaierSum::new();
        for k in 0..self.mol.len() {
            for (s, (&xi, &yi)) in self.shifted.iter_mut().zip(x.iter().zip(self.mol.node(k))) {
                *s = xi - self.eps * yi;
            }
            acc.add(self.mol.weights[k] * self.value_ev.value(&self.shifted)?);
        }
        Ok(acc.value())
    }

    /// All `2^n` mixed partials of `u_ε`, obtained by mollifying the jet of
    /// `u` coefficientwise.
    pub fn jet(&mut self, x: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        out.iter_mut().for_each(|o| *o = 0.0);
        for k in 0..self.mol.len() {
            for (s, (&xi, &yi)) in self.shifted.iter_mut().zip(x.iter().zip(self.mol.node(k))) {
                *s = xi - self.eps * yi;
            }
            let w = self.mol.weights[k];
            for (o, &c) in out.iter_mut().zip(self.jet_ev.eval(&self.shifted)?) {
                *o += w * c;
            }
        }
        Ok(())
    }

    /// The same partials by moving the derivatives onto the kernel:
    /// `∂_S u_ε(x) = ε^{-|S|} ∫ u(x - εy) ∂_S φ(y) dy`.
    pub fn jet_via_kernel(&mut self, x: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        let n = self.mol.n;
        let width = 1usize << n;
        if self.kernel_jets.is_none() {
            let kp = Program::compile(&self.mol.kernel_expr());
            let mut ev = kp.evaluator((width - 1) as u32);
            let mut all = Vec::with_capacity(self.mol.len() * width);
            for k in 0..self.mol.len() {
                let phi = self.mol.kernel(self.mol.node(k));
                let jet = ev.eval(self.mol.node(k))?;
                // weights already carry φ(y); store ∂_S φ / φ
                all.extend(jet.iter().map(|d| d / phi));
            }
            self.kernel_jets = Some(all);
        }
        let kj = self.kernel_jets.as_ref().expect("filled above");
        out.iter_mut().for_each(|o| *o = 0.0);
        for k in 0..self.mol.len() {
            for (s, (&xi, &yi)) in self.shifted.iter_mut().zip(x.iter().zip(self.mol.node(k))) {
                *s = xi - self.eps * yi;
            }
            let v = self.mol.weights[k] * self.value_ev.value(&self.shifted)?;
            for (o, d) in out.iter_mut().zip(&kj[k * width..(k + 1) * width]) {
                *o += v * d;
            }
        }
        for (s, o) in out.iter_mut().enumerate() {
            *o /= math::powi(self.eps, s.count_ones());
        }
        Ok(())
    }

    /// `η(|x|/radius)·u_ε(x)`: the compactly supported approximant.
    pub fn approximant(&mut self, x: &[f64], radius: f64) -> Result<f64, EvalError> {
        let r = math::sqrt(x.iter().map(|v| v * v).sum()) / radius;
        let eta = cutoff(r);
        if eta == 0.0 {
            return Ok(0.0);
        }
        Ok(eta * self.value(x)?)
    }
}

/// Smooth radial cutoff: 1 for `r ≤ 1`, 0 for `r ≥ 2`.
pub fn cutoff(r: f64) -> f64 {
    let h = |t: f64| if t > 0.0 { math::exp(-1.0 / t) } else { 0.0 };
    let (a, b) = (h(2.0 - r), h(r - 1.0));
    a / (a + b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub eps: Vec<f64>,
    /// `max |u_ε - u|` on the evaluation grid.
    pub errors: Vec<f64>,
    /// `max |u_{ε_k} - u_{ε_{k+1}}|`.
    pub differences: Vec<f64>,
    /// `log2` ratios of successive differences.
    pub orders: Vec<f64>,
    pub points: usize,
}

impl ConvergenceStudy {
    pub fn min_order(&self) -> f64 {
        self.orders.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Grid max-norm behavior of `u_ε` for a halving sequence `eps`, on a
/// uniform grid of `points_per_axis` per axis over `rect`.
pub fn convergence_study(
    u: &Expr,
    mol: &Mollifier,
    rect: &Rectangle,
    points_per_axis: usize,
    eps: &[f64],
) -> Result<ConvergenceStudy, Error> {
    let n = mol.n;
    if rect.dim() != n {
        return Err(invalid("box and mollifier dimensions differ"));
    }
    if points_per_axis < 2 || eps.len() < 2 {
        return Err(invalid("need at least 2 grid points per axis and 2 scales"));
    }
    let prog = Program::compile(u);
    let mut plain = prog.evaluator(0);
    let mut pts: Vec<Vec<f64>> = Vec::new();
    let mut idx = vec![0usize; n];
    'grid: loop {
        pts.push(
            (0..n)
                .map(|a| rect.lo()[a] + rect.width(a) * idx[a] as f64 / (points_per_axis - 1) as f64)
                .collect(),
        );
        let mut a = n;
        loop {
            if a == 0 {
                break 'grid;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < points_per_axis {
                break;
            }
            idx[a] = 0;
        }
    }
    let exact: Vec<f64> = pts.iter().map(|x| plain.value(x)).collect::<Result<_, _>>()?;
    let mut fields: Vec<Vec<f64>> = Vec::new();
    for &e in eps {
        let mut mf = mol.apply(&prog, e)?;
        fields.push(pts.iter().map(|x| mf.value(x)).collect::<Result<_, _>>()?);
    }
    let max_diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| math::abs(x - y)).fold(0.0, f64::max);
    let errors: Vec<f64> = fields.iter().map(|f| max_diff(f, &exact)).collect();
    let differences: Vec<f64> = fields.windows(2).map(|w| max_diff(&w[0], &w[1])).collect();
    let orders = differences
        .windows(2)
        .map(|w| math::ln(w[0] / w[1]) / core::f64::consts::LN_2)
        .collect();
    Ok(ConvergenceStudy {
        eps: eps.to_vec(),
        errors,
        differences,
        orders,
        points: pts.len(),
    })
}
