//! Scalar functions of `n` variables as expression trees.
//!
//! The surface grammar (version 1):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := atom ('^' uint)?
//! atom   := number | var | func '(' expr ')' | '(' expr ')' | '-' atom
//! var    := 'x' digits            (x1 .. xN, N = declared arity)
//! func   := sin | cos | exp | log | sqrt | tanh
//! ```
//!
//! Operators are left associative and whitespace is insignificant. Note
//! that unary minus sits at atom level, so `-x1^2` is `(-x1)^2`.

mod diff;
mod parser;

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::math;

pub use parser::{parse, parse_function_source, FunctionSource, ParseDiagnostic, ParseErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Tanh,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            Self::Neg => "-",
            Self::Sin => "sin",
            Self::Cos => "cos",
            Self::Exp => "exp",
            Self::Log => "log",
            Self::Sqrt => "sqrt",
            Self::Tanh => "tanh",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Self::Sin,
            "cos" => Self::Cos,
            "exp" => Self::Exp,
            "log" => Self::Log,
            "sqrt" => Self::Sqrt,
            "tanh" => Self::Tanh,
            _ => return None,
        })
    }

    /// Plain real evaluation, with domain checks for `log` and `sqrt`.
    pub fn apply(self, v: f64) -> Result<f64, EvalErrorKind> {
        Ok(match self {
            Self::Neg => -v,
            Self::Sin => math::sin(v),
            Self::Cos => math::cos(v),
            Self::Exp => math::exp(v),
            Self::Log => {
                if !(v > 0.0) {
                    return Err(EvalErrorKind::Domain { op: self, value: v });
                }
                math::ln(v)
            }
            Self::Sqrt => {
                if !(v >= 0.0) {
                    return Err(EvalErrorKind::Domain { op: self, value: v });
                }
                math::sqrt(v)
            }
            Self::Tanh => math::tanh(v),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            Self::Add => '+',
            Self::Sub => '-',
            Self::Mul => '*',
            Self::Div => '/',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            Self::Add | Self::Sub => 1,
            Self::Mul | Self::Div => 2,
        }
    }
}

/// Expression tree. Variables are 1-based (`Var(1)` is `x1`).
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    /// Integer power with a literal nonnegative exponent.
    Pow(Box<Expr>, u32),
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvalErrorKind {
    Domain {
        op: UnaryOp,
        value: f64,
    },
    DivisionByZero,
    /// The point has fewer coordinates than the expression uses.
    Arity {
        needed: usize,
        found: usize,
    },
    /// Jets over different active sets were combined.
    ActiveMismatch,
}

/// Evaluation failure, carrying the offending subexpression.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub node: String,
}

impl EvalError {
    pub(crate) fn new(kind: EvalErrorKind, node: &Expr) -> Self {
        Self {
            kind,
            node: node.to_string(),
        }
    }

    pub(crate) fn bare(kind: EvalErrorKind) -> Self {
        Self {
            kind,
            node: String::new(),
        }
    }
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            EvalErrorKind::Domain { op, value } => write!(f, "{} of {value} is outside its domain", op.name())?,
            EvalErrorKind::DivisionByZero => f.write_str("division by zero")?,
            EvalErrorKind::Arity { needed, found } => {
                write!(f, "expression uses {needed} variables but the point has {found}")?
            }
            EvalErrorKind::ActiveMismatch => f.write_str("jets have different active sets")?,
        }
        if !self.node.is_empty() {
            write!(f, " in `{}`", self.node)?;
        }
        Ok(())
    }
}

impl Expr {
    pub fn constant(c: f64) -> Self {
        Self::Const(c)
    }

    /// `x_i`, 1-based.
    pub fn var(i: usize) -> Self {
        Self::Var(i)
    }

    pub fn unary(op: UnaryOp, e: Expr) -> Self {
        Self::Unary(op, Box::new(e))
    }

    pub fn sin(self) -> Self {
        Self::unary(UnaryOp::Sin, self)
    }

    pub fn cos(self) -> Self {
        Self::unary(UnaryOp::Cos, self)
    }

    pub fn exp(self) -> Self {
        Self::unary(UnaryOp::Exp, self)
    }

    pub fn log(self) -> Self {
        Self::unary(UnaryOp::Log, self)
    }

    pub fn sqrt(self) -> Self {
        Self::unary(UnaryOp::Sqrt, self)
    }

    pub fn tanh(self) -> Self {
        Self::unary(UnaryOp::Tanh, self)
    }

    pub fn powi(self, n: u32) -> Self {
        Self::Pow(Box::new(self), n)
    }

    pub fn binary(op: BinaryOp, a: Expr, b: Expr) -> Self {
        Self::Binary(op, Box::new(a), Box::new(b))
    }

    /// Largest variable index used (0 for a constant expression).
    pub fn free_arity(&self) -> usize {
        match self {
            Self::Const(_) => 0,
            Self::Var(i) => *i,
            Self::Unary(_, a) | Self::Pow(a, _) => a.free_arity(),
            Self::Binary(_, a, b) => a.free_arity().max(b.free_arity()),
        }
    }

    /// Number of nodes in the tree.
    pub fn node_count(&self) -> usize {
        match self {
            Self::Const(_) | Self::Var(_) => 1,
            Self::Unary(_, a) | Self::Pow(a, _) => 1 + a.node_count(),
            Self::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    /// Plain recursive evaluation at `point` (`point[0]` is `x1`).
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        let needed = self.free_arity();
        if point.len() < needed {
            return Err(EvalError::new(
                EvalErrorKind::Arity {
                    needed,
                    found: point.len(),
                },
                self,
            ));
        }
        self.eval_unchecked(point)
    }

    fn eval_unchecked(&self, point: &[f64]) -> Result<f64, EvalError> {
        Ok(match self {
            Self::Const(c) => *c,
            Self::Var(i) => point[*i - 1],
            Self::Unary(op, a) => {
                let v = a.eval_unchecked(point)?;
                op.apply(v).map_err(|k| EvalError::new(k, self))?
            }
            Self::Pow(a, n) => math::powi(a.eval_unchecked(point)?, *n),
            Self::Binary(op, a, b) => {
                let x = a.eval_unchecked(point)?;
                let y = b.eval_unchecked(point)?;
                match op {
                    BinaryOp::Add => x + y,
                    BinaryOp::Sub => x - y,
                    BinaryOp::Mul => x * y,
                    BinaryOp::Div => {
                        if y == 0.0 {
                            return Err(EvalError::new(EvalErrorKind::DivisionByZero, self));
                        }
                        x / y
                    }
                }
            }
        })
    }

    /// Replaces every variable by the expression `f(index)`.
    pub fn substitute(&self, f: &mut impl FnMut(usize) -> Expr) -> Expr {
        match self {
            Self::Const(c) => Self::Const(*c),
            Self::Var(i) => f(*i),
            Self::Unary(op, a) => Self::unary(*op, a.substitute(f)),
            Self::Pow(a, n) => Self::Pow(Box::new(a.substitute(f)), *n),
            Self::Binary(op, a, b) => Self::binary(*op, a.substitute(f), b.substitute(f)),
        }
    }

    /// `u(y)` with `y_i ↦ sign_i · y_i + shift_i` (`flips[i]` selects `-1`).
    pub fn affine_substitute(&self, flips: &[bool], shift: &[f64]) -> Expr {
        self.substitute(&mut |i| {
            let v = if flips.get(i - 1).copied().unwrap_or(false) {
                -Expr::Var(i)
            } else {
                Expr::Var(i)
            };
            match shift.get(i - 1) {
                Some(&s) if s != 0.0 => v + Expr::Const(s),
                _ => v,
            }
        })
    }

    /// Partial derivative with respect to `x_var` (1-based), with light
    /// constant folding.
    pub fn diff(&self, var: usize) -> Expr {
        diff::derivative(self, var)
    }

    /// Repeated partial derivative along each listed variable in turn.
    pub fn diff_multi(&self, vars: &[usize]) -> Expr {
        vars.iter().fold(self.clone(), |e, &v| e.diff(v))
    }

    fn precedence(&self) -> u8 {
        match self {
            Self::Binary(op, ..) => op.precedence(),
            Self::Pow(..) => 3,
            // constants print bare only when nonnegative
            Self::Const(c) if c.is_sign_negative() => 3,
            _ => 4,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Const(c) => {
                if c.is_sign_negative() {
                    write!(f, "-{}", -c)
                } else {
                    write!(f, "{c}")
                }
            }
            Self::Var(i) => write!(f, "x{i}"),
            Self::Unary(UnaryOp::Neg, a) => {
                f.write_str("-")?;
                write_atom(f, a)
            }
            Self::Unary(op, a) => write!(f, "{}({a})", op.name()),
            Self::Pow(a, n) => {
                write_atom(f, a)?;
                write!(f, "^{n}")
            }
            Self::Binary(op, a, b) => {
                let p = op.precedence();
                if a.precedence() < p {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                write!(f, " {} ", op.symbol())?;
                if b.precedence() <= p {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
        }
    }
}

/// Writes `e` so that it parses back as a single atom.
fn write_atom(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    if e.precedence() >= 4 || matches!(e, Expr::Const(_)) {
        write!(f, "{e}")
    } else {
        write!(f, "({e})")
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $op:expr) => {
        impl core::ops::$trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::binary($op, self, rhs)
            }
        }
        impl core::ops::$trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::binary($op, self, Expr::Const(rhs))
            }
        }
        impl core::ops::$trait<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::binary($op, Expr::Const(self), rhs)
            }
        }
    };
}

impl_binop!(Add, add, BinaryOp::Add);
impl_binop!(Sub, sub, BinaryOp::Sub);
impl_binop!(Mul, mul, BinaryOp::Mul);
impl_binop!(Div, div, BinaryOp::Div);

impl core::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::unary(UnaryOp::Neg, self)
    }
}

/// Evaluates `e` at `point`; the point must cover every variable used.
pub fn eval_real(e: &Expr, point: &[f64]) -> Result<f64, EvalError> {
    e.eval(point)
}

/// Largest variable index appearing in `e`.
pub fn free_arity(e: &Expr) -> usize {
    e.free_arity()
}

/// `Σ_i x_i^2` over `x1..xn`.
pub fn sum_of_squares(n: usize) -> Expr {
    (2..=n).fold(Expr::var(1).powi(2), |acc, i| acc + Expr::var(i).powi(2))
}

/// Indices of variables actually present, increasing.
pub fn used_variables(e: &Expr) -> Vec<usize> {
    fn walk(e: &Expr, out: &mut Vec<usize>) {
        match e {
            Expr::Const(_) => {}
            Expr::Var(i) => {
                if !out.contains(i) {
                    out.push(*i)
                }
            }
            Expr::Unary(_, a) | Expr::Pow(a, _) => walk(a, out),
            Expr::Binary(_, a, b) => {
                walk(a, out);
                walk(b, out);
            }
        }
    }
    let mut out = Vec::new();
    walk(e, &mut out);
    out.sort_unstable();
    out
}
