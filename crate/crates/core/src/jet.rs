//! Mixed jets: a value together with every mixed partial of order at most
//! one per active variable.
//!
//! Over `k` active variables the jet lives in the algebra generated by
//! `e_1..e_k` with `e_i² = 0`. Coefficients are stored densely, indexed by a
//! local bitmask: bit `b` stands for the `b`-th smallest active axis, and
//! `coeffs[S]` is `∂^{|S|}u / ∂x_S` at the base point.
//!
//! Products are subset convolutions. A smooth unary `f` is applied through
//! its Taylor sum `Σ_{m≤k} f⁽ᵐ⁾(v) ε^m / m!`, where `ε` is the nilpotent part;
//! since `ε^{k+1} = 0` that sum is the whole series.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::combinatorics::factorial;
use crate::expr::{BinaryOp, EvalError, EvalErrorKind, Expr, UnaryOp};
use crate::math;
use crate::rect::IndexSubset;

/// Value and mixed partials at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedJet {
    /// Ambient 0-based axes that are active, as a bitmask.
    mask: u32,
    coeffs: Vec<f64>,
}

impl MixedJet {
    /// Constant jet over the active axes in `mask`.
    pub fn constant(c: f64, mask: u32) -> Self {
        let mut coeffs = vec![0.0; 1 << mask.count_ones()];
        coeffs[0] = c;
        Self { mask, coeffs }
    }

    /// Seed for 0-based `axis` with value `v`. Inactive axes give a constant.
    pub fn variable(v: f64, axis: usize, mask: u32) -> Self {
        let mut jet = Self::constant(v, mask);
        if let Some(bit) = local_bit(mask, axis) {
            jet.coeffs[bit] = 1.0;
        }
        jet
    }

    /// Wraps raw coefficients; `coeffs.len()` must be `2^popcount(mask)`.
    pub fn from_coeffs(mask: u32, coeffs: Vec<f64>) -> Option<Self> {
        (coeffs.len() == 1 << mask.count_ones()).then_some(Self { mask, coeffs })
    }

    pub fn active_mask(&self) -> u32 {
        self.mask
    }

    /// Number of active variables.
    pub fn order(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// `∂_S u` for a subset of the active axes, `None` if `s` is not one.
    pub fn partial(&self, s: &IndexSubset) -> Option<f64> {
        if s.mask() & !self.mask != 0 {
            return None;
        }
        Some(self.coeffs[compress(s.mask(), self.mask)])
    }

    /// Coefficient for a local mask.
    pub fn coeff(&self, local: usize) -> f64 {
        self.coeffs[local]
    }
}

/// Local bit index of ambient `axis` inside `mask`.
fn local_bit(mask: u32, axis: usize) -> Option<usize> {
    if axis < 32 && mask & (1 << axis) != 0 {
        Some(1 << (mask & ((1u32 << axis) - 1)).count_ones())
    } else {
        None
    }
}

/// Packs the bits of `sub` selected by `mask` into a dense local mask.
fn compress(sub: u32, mask: u32) -> usize {
    let mut out = 0usize;
    let mut b = 0;
    let mut m = mask;
    while m != 0 {
        let low = m & m.wrapping_neg();
        if sub & low != 0 {
            out |= 1 << b;
        }
        b += 1;
        m &= m - 1;
    }
    out
}

/// Seed jets for every coordinate of `point`.
pub fn jet_lift(point: &[f64], active: &IndexSubset) -> Result<Vec<MixedJet>, EvalError> {
    let needed = active.axes().last().map_or(0, |a| a + 1);
    if needed > point.len() {
        return Err(EvalError::bare(EvalErrorKind::Arity {
            needed,
            found: point.len(),
        }));
    }
    Ok(point
        .iter()
        .enumerate()
        .map(|(axis, &v)| MixedJet::variable(v, axis, active.mask()))
        .collect())
}

/// Leibniz product.
pub fn jet_mul(a: &MixedJet, b: &MixedJet) -> Result<MixedJet, EvalError> {
    if a.mask != b.mask {
        return Err(EvalError::bare(EvalErrorKind::ActiveMismatch));
    }
    let mut out = vec![0.0; a.coeffs.len()];
    subset_product(&a.coeffs, &b.coeffs, &mut out);
    Ok(MixedJet {
        mask: a.mask,
        coeffs: out,
    })
}

/// `f(a)` for a unary operation.
pub fn jet_unary(op: UnaryOp, a: &MixedJet) -> Result<MixedJet, EvalError> {
    let k = a.order();
    let mut out = vec![0.0; a.coeffs.len()];
    let mut scratch = Scratch::new(k);
    apply_unary(op, &a.coeffs, a.coeffs.len() - 1, &mut out, &mut scratch).map_err(EvalError::bare)?;
    Ok(MixedJet {
        mask: a.mask,
        coeffs: out,
    })
}

/// Quotient `a / b`.
pub fn jet_div(a: &MixedJet, b: &MixedJet) -> Result<MixedJet, EvalError> {
    if a.mask != b.mask {
        return Err(EvalError::bare(EvalErrorKind::ActiveMismatch));
    }
    let mut out = vec![0.0; a.coeffs.len()];
    subset_quotient(&a.coeffs, &b.coeffs, &mut out).map_err(EvalError::bare)?;
    Ok(MixedJet {
        mask: a.mask,
        coeffs: out,
    })
}

/// Evaluates `e` over the jet algebra with the given active axes.
///
/// `coeffs[∅]` of the result is bit-identical to [`Expr::eval`].
pub fn eval_jet(e: &Expr, point: &[f64], active: &IndexSubset) -> Result<MixedJet, EvalError> {
    let program = Program::compile(e);
    let mut ev = program.evaluator(active.mask());
    let coeffs = ev.eval(point)?.to_vec();
    Ok(MixedJet {
        mask: active.mask(),
        coeffs,
    })
}

/// `out[S] = Σ_{A ⊔ B = S} a[A]·b[B]`.
///
/// The two orderings of each split are added as a pair, so the result is
/// bit-for-bit symmetric in `a` and `b`.
pub(crate) fn subset_product(a: &[f64], b: &[f64], out: &mut [f64]) {
    out[0] = a[0] * b[0];
    for s in 1..out.len() {
        let mut acc = 0.0;
        let mut sub = s;
        loop {
            let rest = s ^ sub;
            if sub < rest {
                acc += a[sub] * b[rest] + a[rest] * b[sub];
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & s;
        }
        out[s] = acc;
    }
}

/// Solves `q·b = a` one coefficient at a time, so `q[∅] = a[∅] / b[∅]`.
fn subset_quotient(a: &[f64], b: &[f64], q: &mut [f64]) -> Result<(), EvalErrorKind> {
    let b0 = b[0];
    if b0 == 0.0 {
        return Err(EvalErrorKind::DivisionByZero);
    }
    q[0] = a[0] / b0;
    for s in 1..q.len() {
        let mut acc = a[s];
        let mut sub = (s - 1) & s;
        loop {
            acc -= q[sub] * b[s ^ sub];
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & s;
        }
        q[s] = acc / b0;
    }
    Ok(())
}

/// [`subset_product`] for jets whose coefficients vanish outside the
/// subsets of `ua` and `ub`. Only `S ⊆ ua | ub` is written.
///
/// Operands are put in a fixed order first, so swapping them runs the same
/// arithmetic and the result stays exactly commutative.
fn masked_product(a: &[f64], ua: usize, b: &[f64], ub: usize, out: &mut [f64]) {
    let (a, ua, b, ub) = if ua > ub { (b, ub, a, ua) } else { (a, ua, b, ub) };
    let u = ua | ub;
    let o = ua & ub;
    out[0] = a[0] * b[0];
    let mut s = u;
    while s != 0 {
        let mut acc = 0.0;
        if ua == ub {
            let mut sub = s;
            loop {
                let rest = s ^ sub;
                if sub < rest {
                    acc += a[sub] * b[rest] + a[rest] * b[sub];
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & s;
            }
        } else {
            // bits outside the overlap can only come from one side
            let fa = s & !ub;
            let fb = s & !ua;
            let free = s & o;
            let mut c = free;
            loop {
                acc += a[fa | c] * b[fb | (free ^ c)];
                if c == 0 {
                    break;
                }
                c = (c - 1) & free;
            }
        }
        out[s] = acc;
        s = (s - 1) & u;
    }
}

/// [`subset_quotient`] restricted to `S ⊆ ua | ub`.
fn masked_quotient(a: &[f64], ua: usize, b: &[f64], ub: usize, q: &mut [f64]) -> Result<(), EvalErrorKind> {
    let b0 = b[0];
    if b0 == 0.0 {
        return Err(EvalErrorKind::DivisionByZero);
    }
    let u = ua | ub;
    q[0] = a[0] / b0;
    // increasing order, so every proper subset is solved first
    let mut s = u & u.wrapping_neg();
    while s != 0 {
        let mut acc = a[s];
        let mut sub = (s - 1) & s;
        loop {
            let rest = s ^ sub;
            if rest & !ub == 0 {
                acc -= q[sub] * b[rest];
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & s;
        }
        q[s] = acc / b0;
        s = s.wrapping_sub(u) & u;
    }
    Ok(())
}

/// Working buffers for unary composition.
struct Scratch {
    k: usize,
    eps: Vec<f64>,
    power: Vec<f64>,
    next: Vec<f64>,
    derivs: Vec<f64>,
    tanh_polys: Vec<Vec<f64>>,
    partitions: Option<PartitionTable>,
}

/// Above this many active axes the partition table outgrows the power
/// series (Bell numbers against `(k-1)·3^k`).
const MAX_PARTITION_AXES: usize = 6;

/// Every set partition of every subset of `{0..k}`, blocks as bitmasks.
struct PartitionTable {
    /// `parts[set_start[S]..set_start[S+1]]` are the partitions of `S`.
    set_start: Vec<usize>,
    /// Block ranges into `blocks`, one per partition.
    parts: Vec<(usize, usize)>,
    blocks: Vec<u32>,
}

impl PartitionTable {
    fn new(k: usize) -> Self {
        let w = 1usize << k;
        let mut t = Self {
            set_start: Vec::with_capacity(w + 1),
            parts: Vec::new(),
            blocks: Vec::new(),
        };
        let mut stack = Vec::with_capacity(k);
        for set in 0..w {
            t.set_start.push(t.parts.len());
            if set != 0 {
                t.fill(set as u32, &mut stack);
            }
        }
        t.set_start.push(t.parts.len());
        t
    }

    /// Appends the partitions of `rest` extending the blocks in `stack`.
    fn fill(&mut self, rest: u32, stack: &mut Vec<u32>) {
        if rest == 0 {
            let start = self.blocks.len();
            self.blocks.extend_from_slice(stack);
            self.parts.push((start, self.blocks.len()));
            return;
        }
        // the block holding the lowest element
        let low = rest & rest.wrapping_neg();
        let others = rest ^ low;
        let mut sub = others;
        loop {
            stack.push(low | sub);
            self.fill(others ^ sub, stack);
            stack.pop();
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & others;
        }
    }

    fn of(&self, set: usize) -> impl Iterator<Item = &[u32]> {
        self.parts[self.set_start[set]..self.set_start[set + 1]]
            .iter()
            .map(|&(a, b)| &self.blocks[a..b])
    }
}

impl Scratch {
    fn new(k: usize) -> Self {
        let w = 1 << k;
        Self {
            k,
            eps: vec![0.0; w],
            power: vec![0.0; w],
            next: vec![0.0; w],
            derivs: vec![0.0; k + 1],
            tanh_polys: Vec::new(),
            partitions: (k <= MAX_PARTITION_AXES).then(|| PartitionTable::new(k)),
        }
    }

    /// Polynomials `P_m` with `tanh⁽ᵐ⁾(v) = P_m(tanh v)`, for `m ≤ k`.
    fn tanh_polys(&mut self) -> &[Vec<f64>] {
        if self.tanh_polys.is_empty() {
            let mut p = vec![0.0, 1.0];
            self.tanh_polys.push(p.clone());
            for _ in 0..self.k {
                // P_{m+1}(t) = P_m'(t)·(1 - t²)
                let mut dp = vec![0.0; p.len().saturating_sub(1).max(1)];
                for (i, &c) in p.iter().enumerate().skip(1) {
                    dp[i - 1] = c * i as f64;
                }
                let mut next = vec![0.0; dp.len() + 2];
                for (i, &c) in dp.iter().enumerate() {
                    next[i] += c;
                    next[i + 2] -= c;
                }
                self.tanh_polys.push(next.clone());
                p = next;
            }
        }
        &self.tanh_polys
    }
}

fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

/// Fills `s.derivs[m] = f⁽ᵐ⁾(v)` for `m = 1..=k`.
fn taylor_coefficients(op: UnaryOp, v: f64, s: &mut Scratch) {
    let k = s.k;
    match op {
        UnaryOp::Neg => unreachable!("negation is linear"),
        UnaryOp::Sin | UnaryOp::Cos => {
            let (sv, cv) = (math::sin(v), math::cos(v));
            let cycle = if op == UnaryOp::Sin {
                [sv, cv, -sv, -cv]
            } else {
                [cv, -sv, -cv, sv]
            };
            for m in 1..=k {
                s.derivs[m] = cycle[m % 4];
            }
        }
        UnaryOp::Exp => {
            let ev = math::exp(v);
            for m in 1..=k {
                s.derivs[m] = ev;
            }
        }
        UnaryOp::Log => {
            // (m-1)! (-1)^{m-1} / v^m
            let mut inv = 1.0;
            for m in 1..=k {
                inv /= v;
                let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
                s.derivs[m] = sign * factorial(m as u32 - 1) * inv;
            }
        }
        UnaryOp::Sqrt => {
            let root = math::sqrt(v);
            let mut falling = 1.0;
            let mut inv = 1.0;
            for m in 1..=k {
                falling *= 0.5 - (m - 1) as f64;
                inv /= v;
                s.derivs[m] = falling * root * inv;
            }
        }
        UnaryOp::Tanh => {
            let t = math::tanh(v);
            let polys = s.tanh_polys().to_vec();
            for m in 1..=k {
                s.derivs[m] = horner(&polys[m], t);
            }
        }
    }
}

/// `deps` is a mask of local bits outside of which `a` vanishes.
fn apply_unary(op: UnaryOp, a: &[f64], deps: usize, out: &mut [f64], s: &mut Scratch) -> Result<(), EvalErrorKind> {
    if op == UnaryOp::Neg {
        for (o, &x) in out.iter_mut().zip(a) {
            *o = -x;
        }
        return Ok(());
    }
    let v = a[0];
    let f0 = op.apply(v)?;
    let has_eps = a[1..].iter().any(|&c| c != 0.0);
    if !has_eps {
        out.fill(0.0);
        out[0] = f0;
        return Ok(());
    }
    if op == UnaryOp::Sqrt && v == 0.0 {
        return Err(EvalErrorKind::Domain { op, value: v });
    }
    taylor_coefficients(op, v, s);
    compose(a, deps, f0, out, s);
    Ok(())
}

/// `out = f(a)` from `f0 = f(a[∅])` and the derivatives in `s.derivs`.
/// Coefficients of `a` vanish outside the subsets of `deps`.
fn compose(a: &[f64], deps: usize, f0: f64, out: &mut [f64], s: &mut Scratch) {
    match s.partitions.take() {
        Some(table) => {
            compose_partitions(a, deps, f0, out, &s.derivs, &table);
            s.partitions = Some(table);
        }
        None => compose_powers(a, deps, f0, out, s),
    }
}

/// Faà di Bruno: `out[S] = Σ_π f⁽|π|⁾(a[∅]) Π_{B∈π} a[B]` over the set
/// partitions `π` of `S`.
fn compose_partitions(a: &[f64], deps: usize, f0: f64, out: &mut [f64], derivs: &[f64], table: &PartitionTable) {
    out.fill(0.0);
    out[0] = f0;
    let mut set = deps;
    while set != 0 {
        let mut acc = 0.0;
        for part in table.of(set) {
            let mut prod = derivs[part.len()];
            for &b in part {
                prod *= a[b as usize];
            }
            acc += prod;
        }
        out[set] = acc;
        set = (set - 1) & deps;
    }
}

/// Taylor series in powers of `ε = a - a[∅]`; `ε^m` vanishes once
/// `m > |deps|`, so the truncation is exact.
fn compose_powers(a: &[f64], deps: usize, f0: f64, out: &mut [f64], s: &mut Scratch) {
    let w = a.len();
    s.eps[..w].copy_from_slice(a);
    s.eps[0] = 0.0;
    s.power[..w].copy_from_slice(&s.eps[..w]);
    s.next[..w].fill(0.0);
    for (o, &e) in out.iter_mut().zip(&s.eps[..w]) {
        *o = s.derivs[1] * e;
    }
    let k = deps.count_ones() as usize;
    for m in 2..=k {
        masked_product(&s.power[..w], deps, &s.eps[..w], deps, &mut s.next[..w]);
        core::mem::swap(&mut s.power, &mut s.next);
        let c = s.derivs[m] / factorial(m as u32);
        for (o, &p) in out.iter_mut().zip(&s.power[..w]) {
            *o += c * p;
        }
    }
    out[0] = f0;
}

fn apply_pow(a: &[f64], deps: usize, n: u32, out: &mut [f64], s: &mut Scratch) {
    let v = a[0];
    let f0 = math::powi(v, n);
    let has_eps = a[1..].iter().any(|&c| c != 0.0);
    if !has_eps || n == 0 {
        out.fill(0.0);
        out[0] = f0;
        return;
    }
    let k = s.k;
    let mut falling = 1.0;
    for m in 1..=k {
        if m as u32 > n {
            s.derivs[m] = 0.0;
            continue;
        }
        falling *= f64::from(n + 1 - m as u32);
        s.derivs[m] = falling * math::powi(v, n - m as u32);
    }
    compose(a, deps, f0, out, s);
}

#[derive(Debug, Clone)]
enum Inst {
    Const(f64),
    Var(usize),
    Unary(UnaryOp, usize),
    Binary(BinaryOp, usize, usize),
    Pow(usize, u32),
}

/// An expression flattened into postorder instructions, reusable across
/// points and active sets.
#[derive(Debug, Clone)]
pub struct Program {
    insts: Vec<Inst>,
    /// Source node for instructions that can fail.
    sources: Vec<Option<Box<Expr>>>,
    arity: usize,
}

impl Program {
    pub fn compile(e: &Expr) -> Self {
        let mut p = Self {
            insts: Vec::with_capacity(e.node_count()),
            sources: Vec::with_capacity(e.node_count()),
            arity: e.free_arity(),
        };
        p.push(e);
        p
    }

    fn push(&mut self, e: &Expr) -> usize {
        let (inst, fallible) = match e {
            Expr::Const(c) => (Inst::Const(*c), false),
            Expr::Var(i) => (Inst::Var(*i - 1), false),
            Expr::Unary(op, a) => {
                let a = self.push(a);
                (Inst::Unary(*op, a), matches!(op, UnaryOp::Log | UnaryOp::Sqrt))
            }
            Expr::Binary(op, a, b) => {
                let a = self.push(a);
                let b = self.push(b);
                (Inst::Binary(*op, a, b), *op == BinaryOp::Div)
            }
            Expr::Pow(a, n) => {
                let a = self.push(a);
                (Inst::Pow(a, *n), false)
            }
        };
        self.insts.push(inst);
        self.sources.push(fallible.then(|| Box::new(e.clone())));
        self.insts.len() - 1
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.insts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.insts.is_empty()
    }

    /// Evaluator over the ambient axes in `mask` (0-based bits).
    pub fn evaluator(&self, mask: u32) -> JetEvaluator<'_> {
        JetEvaluator::new(self, mask)
    }
}

/// Allocation-free repeated evaluation of a [`Program`].
#[derive(Debug)]
pub struct JetEvaluator<'p> {
    program: &'p Program,
    mask: u32,
    width: usize,
    slots: Vec<f64>,
    /// Local bits each instruction can depend on.
    deps: Vec<usize>,
    scratch: ScratchBox,
}

struct ScratchBox(Scratch);

impl core::fmt::Debug for ScratchBox {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str("Scratch")
    }
}

impl<'p> JetEvaluator<'p> {
    pub fn new(program: &'p Program, mask: u32) -> Self {
        let k = mask.count_ones() as usize;
        let width = 1 << k;
        let mut deps: Vec<usize> = Vec::with_capacity(program.insts.len());
        for inst in &program.insts {
            let d = match *inst {
                Inst::Const(_) => 0,
                Inst::Var(axis) => local_bit(mask, axis).unwrap_or(0),
                Inst::Unary(_, a) | Inst::Pow(a, _) => deps[a],
                Inst::Binary(_, a, b) => deps[a] | deps[b],
            };
            deps.push(d);
        }
        Self {
            program,
            mask,
            width,
            slots: vec![0.0; width * program.insts.len().max(1)],
            deps,
            scratch: ScratchBox(Scratch::new(k)),
        }
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    /// Number of coefficients per jet.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Jet coefficients of the whole expression at `point`.
    pub fn eval(&mut self, point: &[f64]) -> Result<&[f64], EvalError> {
        let prog = self.program;
        if point.len() < prog.arity {
            return Err(EvalError::bare(EvalErrorKind::Arity {
                needed: prog.arity,
                found: point.len(),
            }));
        }
        let w = self.width;
        let deps = &self.deps;
        for (idx, inst) in prog.insts.iter().enumerate() {
            let (head, tail) = self.slots.split_at_mut(idx * w);
            let out = &mut tail[..w];
            let slot = |i: usize| &head[i * w..(i + 1) * w];
            let fail = |kind| EvalError {
                kind,
                node: prog.sources[idx]
                    .as_ref()
                    .map(alloc::string::ToString::to_string)
                    .unwrap_or_default(),
            };
            match *inst {
                Inst::Const(c) => {
                    out.fill(0.0);
                    out[0] = c;
                }
                Inst::Var(axis) => {
                    out.fill(0.0);
                    out[0] = point[axis];
                    if let Some(bit) = local_bit(self.mask, axis) {
                        out[bit] = 1.0;
                    }
                }
                Inst::Unary(op, a) => apply_unary(op, slot(a), deps[a], out, &mut self.scratch.0).map_err(fail)?,
                Inst::Pow(a, n) => apply_pow(slot(a), deps[a], n, out, &mut self.scratch.0),
                Inst::Binary(op, a, b) => {
                    let (x, y) = (slot(a), slot(b));
                    match op {
                        BinaryOp::Add => {
                            for ((o, &p), &q) in out.iter_mut().zip(x).zip(y) {
                                *o = p + q;
                            }
                        }
                        BinaryOp::Sub => {
                            for ((o, &p), &q) in out.iter_mut().zip(x).zip(y) {
                                *o = p - q;
                            }
                        }
                        BinaryOp::Mul => masked_product(x, deps[a], y, deps[b], out),
                        BinaryOp::Div => masked_quotient(x, deps[a], y, deps[b], out).map_err(fail)?,
                    }
                }
            }
        }
        let last = prog.insts.len() - 1;
        Ok(&self.slots[last * w..(last + 1) * w])
    }

    /// Plain value at `point`.
    pub fn value(&mut self, point: &[f64]) -> Result<f64, EvalError> {
        Ok(self.eval(point)?[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use proptest::prelude::*;

    fn set(ix: &[usize], n: usize) -> IndexSubset {
        IndexSubset::from_indices(ix, n).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn lift_seeds() {
        let s = set(&[1, 2], 2);
        let seeds = jet_lift(&[2.0, 3.0], &s).unwrap();
        assert_eq!(seeds[0].coeffs(), &[2.0, 1.0, 0.0, 0.0]);
        assert_eq!(seeds[1].coeffs(), &[3.0, 0.0, 1.0, 0.0]);
        let c = MixedJet::constant(5.0, s.mask());
        assert_eq!(c.coeffs(), &[5.0, 0.0, 0.0, 0.0]);
        let only1 = jet_lift(&[2.0, 3.0], &set(&[1], 2)).unwrap();
        assert_eq!(only1[1].coeffs(), &[3.0, 0.0]);
        assert!(jet_lift(&[1.0], &set(&[2], 2)).is_err());
    }

    #[test]
    fn product_of_seeds() {
        let s = set(&[1, 2], 2);
        let seeds = jet_lift(&[2.0, 3.0], &s).unwrap();
        let p = jet_mul(&seeds[0], &seeds[1]).unwrap();
        assert_eq!(p.coeffs(), &[6.0, 3.0, 2.0, 1.0]);
        let one = MixedJet::constant(1.0, s.mask());
        assert_eq!(jet_mul(&p, &one).unwrap(), p);
        let other = MixedJet::constant(1.0, 1);
        assert_eq!(jet_mul(&p, &other).unwrap_err().kind, EvalErrorKind::ActiveMismatch);
    }

    #[test]
    fn exp_of_product() {
        let e = core::f64::consts::E;
        let jet = eval_jet(&parse("exp(x1*x2)", 2).unwrap(), &[1.0, 1.0], &set(&[1, 2], 2)).unwrap();
        let want = [e, e, e, 2.0 * e];
        for (got, want) in jet.coeffs().iter().zip(want) {
            assert!(close(*got, want, 1e-15), "{got} vs {want}");
        }
        assert!((jet.partial(&set(&[1, 2], 2)).unwrap() - 5.43656).abs() < 1e-5);
    }

    #[test]
    fn unary_examples() {
        let x = MixedJet::variable(0.0, 0, 1);
        assert_eq!(jet_unary(UnaryOp::Sin, &x).unwrap().coeffs(), &[0.0, 1.0]);
        let zero = MixedJet::constant(0.0, 0b11);
        assert_eq!(jet_unary(UnaryOp::Exp, &zero).unwrap().coeffs(), &[1.0, 0.0, 0.0, 0.0]);
        let u = parse("sin(x1)*exp(x2)", 2).unwrap();
        let jet = eval_jet(&u, &[core::f64::consts::FRAC_PI_2, 0.0], &set(&[1, 2], 2)).unwrap();
        for (got, want) in jet.coeffs().iter().zip([1.0, 0.0, 1.0, 0.0]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn eval_jet_examples() {
        let jet = eval_jet(&parse("x1*x2", 2).unwrap(), &[2.0, 3.0], &set(&[1, 2], 2)).unwrap();
        assert_eq!(jet.partial(&set(&[1, 2], 2)), Some(1.0));
        let jet = eval_jet(&parse("x1^2", 1).unwrap(), &[5.0], &set(&[1], 1)).unwrap();
        assert_eq!(jet.coeffs(), &[25.0, 10.0]);
    }

    #[test]
    fn domain_errors() {
        let s = set(&[1], 1);
        let err = eval_jet(&parse("log(x1 - 1)", 1).unwrap(), &[1.0], &s).unwrap_err();
        assert!(matches!(err.kind, EvalErrorKind::Domain { op: UnaryOp::Log, .. }));
        assert_eq!(err.node, "log(x1 - 1)");
        let err = eval_jet(&parse("sqrt(x1)", 1).unwrap(), &[0.0], &s).unwrap_err();
        assert!(matches!(err.kind, EvalErrorKind::Domain { op: UnaryOp::Sqrt, .. }));
        // no dependence on the active axis: value only
        let ok = eval_jet(&parse("sqrt(x1 - x1)", 1).unwrap(), &[2.0], &s).unwrap();
        assert_eq!(ok.value(), 0.0);
        let err = eval_jet(&parse("1 / (x1 - 2)", 1).unwrap(), &[2.0], &s).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::DivisionByZero);
    }

    #[test]
    fn quotient_inverts_product() {
        let s = set(&[1, 2, 3], 3);
        let u = parse("(x1 + 2*x2*x3) / (3 + x1*x3)", 3).unwrap();
        let v = parse("3 + x1*x3", 3).unwrap();
        let num = parse("x1 + 2*x2*x3", 3).unwrap();
        let pt = [0.3, -0.7, 1.1];
        let q = eval_jet(&u, &pt, &s).unwrap();
        let back = jet_mul(&q, &eval_jet(&v, &pt, &s).unwrap()).unwrap();
        let want = eval_jet(&num, &pt, &s).unwrap();
        for (a, b) in back.coeffs().iter().zip(want.coeffs()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn tanh_polynomials() {
        let mut s = Scratch::new(3);
        let polys = s.tanh_polys().to_vec();
        assert_eq!(polys[1], vec![1.0, 0.0, -1.0]);
        // tanh'' = -2t(1 - t²)
        assert_eq!(polys[2], vec![0.0, -2.0, 0.0, 2.0]);
    }

    #[test]
    fn partition_counts_are_bell_numbers() {
        let t = PartitionTable::new(4);
        let bell = [1, 1, 2, 5, 15];
        for set in 1..16usize {
            assert_eq!(t.of(set).count(), bell[set.count_ones() as usize]);
            for part in t.of(set) {
                assert_eq!(part.iter().fold(0, |acc, &b| acc | b), set as u32);
                assert_eq!(part.iter().map(|b| b.count_ones()).sum::<u32>(), set.count_ones());
            }
        }
    }

    fn jet_strategy(k: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-3.0f64..3.0, 1 << k)
    }

    /// Tree walk over the dense public operations.
    fn dense_eval(e: &Expr, pt: &[f64], mask: u32) -> MixedJet {
        match e {
            Expr::Const(c) => MixedJet::constant(*c, mask),
            Expr::Var(i) => MixedJet::variable(pt[i - 1], i - 1, mask),
            Expr::Unary(op, a) => jet_unary(*op, &dense_eval(a, pt, mask)).unwrap(),
            Expr::Pow(a, n) => {
                let a = dense_eval(a, pt, mask);
                (0..*n).fold(MixedJet::constant(1.0, mask), |acc, _| jet_mul(&acc, &a).unwrap())
            }
            Expr::Binary(op, a, b) => {
                let (a, b) = (dense_eval(a, pt, mask), dense_eval(b, pt, mask));
                match op {
                    BinaryOp::Add | BinaryOp::Sub => {
                        let sign = if *op == BinaryOp::Add { 1.0 } else { -1.0 };
                        let c = a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| x + sign * y).collect();
                        MixedJet::from_coeffs(mask, c).unwrap()
                    }
                    BinaryOp::Mul => jet_mul(&a, &b).unwrap(),
                    BinaryOp::Div => jet_div(&a, &b).unwrap(),
                }
            }
        }
    }

    #[test]
    fn sparse_evaluator_matches_dense_walk() {
        let sources = [
            "x1*x2*x3*x4",
            "exp(-(x1^4 + x2^4 + x3^4 + x4^4))",
            "(x1^2 + x1 - 1)*(x2^2 + 2*x2 - 1)*(x3^2 + 3*x3 - 1) + x4^3",
            "log(log(1 + 1/sqrt(x1^2 + x2^2 + x3^2 + 0.25)))",
            "sin(x1 + x2)/(2 + cos(x3*x4)) + tanh(x2)*x4",
        ];
        let pt = [0.3, -0.7, 0.45, 0.9];
        for src in sources {
            let e = parse(src, 4).unwrap();
            let prog = Program::compile(&e);
            for mask in [0b1111u32, 0b0101, 0b1010, 0b0111, 0b1000] {
                let got = prog.evaluator(mask).eval(&pt).unwrap().to_vec();
                let want = dense_eval(&e, &pt, mask);
                for (g, w) in got.iter().zip(want.coeffs()) {
                    assert!(close(*g, *w, 1e-13), "{src} mask={mask:b}: {g} vs {w}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn partition_and_power_composition_agree(a in jet_strategy(4), op in 0usize..5, deps in 1usize..16) {
            let op = [UnaryOp::Exp, UnaryOp::Sin, UnaryOp::Cos, UnaryOp::Tanh, UnaryOp::Log][op];
            let mut a: Vec<f64> = a.iter().enumerate().map(|(s, &c)| if s & !deps == 0 { c } else { 0.0 }).collect();
            a[0] = a[0].abs() + 0.5;
            let mut s = Scratch::new(4);
            taylor_coefficients(op, a[0], &mut s);
            let f0 = op.apply(a[0]).unwrap();
            let mut fast = vec![0.0; 16];
            let mut slow = vec![0.0; 16];
            compose(&a, deps, f0, &mut fast, &mut s);
            compose_powers(&a, deps, f0, &mut slow, &mut s);
            for (x, y) in fast.iter().zip(&slow) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()), "{x} vs {y}");
            }
        }

        #[test]
        fn masked_product_commutes_exactly(a in jet_strategy(4), b in jet_strategy(4), ua in 0usize..16, ub in 0usize..16) {
            let restrict = |v: &[f64], u: usize| -> Vec<f64> {
                v.iter().enumerate().map(|(s, &c)| if s & !u == 0 { c } else { 0.0 }).collect()
            };
            let (a, b) = (restrict(&a, ua), restrict(&b, ub));
            let mut ab = vec![0.0; 16];
            let mut ba = vec![0.0; 16];
            let mut dense = vec![0.0; 16];
            masked_product(&a, ua, &b, ub, &mut ab);
            masked_product(&b, ub, &a, ua, &mut ba);
            subset_product(&a, &b, &mut dense);
            prop_assert_eq!(&ab, &ba);
            for (x, y) in ab.iter().zip(&dense) {
                prop_assert!((x - y).abs() <= 1e-13 * (1.0 + y.abs()));
            }
        }

        #[test]
        fn product_commutes_exactly(a in jet_strategy(3), b in jet_strategy(3)) {
            let mut ab = vec![0.0; 8];
            let mut ba = vec![0.0; 8];
            subset_product(&a, &b, &mut ab);
            subset_product(&b, &a, &mut ba);
            prop_assert_eq!(ab, ba);
        }

        #[test]
        fn product_associates(a in jet_strategy(3), b in jet_strategy(3), c in jet_strategy(3)) {
            let mut t = vec![0.0; 8];
            let mut l = vec![0.0; 8];
            let mut r = vec![0.0; 8];
            subset_product(&a, &b, &mut t);
            subset_product(&t, &c, &mut l);
            subset_product(&b, &c, &mut t);
            subset_product(&a, &t, &mut r);
            for (x, y) in l.iter().zip(&r) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }

        #[test]
        fn value_matches_real_evaluation(x in -1.5f64..1.5, y in 0.1f64..2.0, z in -2.0f64..2.0) {
            let u = parse("tanh(x1*x2) + sqrt(x2)*log(x2 + 1) / (2 + cos(x3)) - (x1 - x3)^5", 3).unwrap();
            let pt = [x, y, z];
            let jet = eval_jet(&u, &pt, &set(&[1, 2, 3], 3)).unwrap();
            prop_assert_eq!(jet.value().to_bits(), u.eval(&pt).unwrap().to_bits());
        }
    }
}
