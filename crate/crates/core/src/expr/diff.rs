use super::{BinaryOp, Expr, UnaryOp};

fn is_const(e: &Expr, c: f64) -> bool {
    matches!(e, Expr::Const(v) if *v == c)
}

fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
        _ if is_const(&a, 0.0) => b,
        _ if is_const(&b, 0.0) => a,
        _ => a + b,
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
        _ if is_const(&b, 0.0) => a,
        _ if is_const(&a, 0.0) => neg(b),
        _ => a - b,
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
        _ if is_const(&a, 0.0) || is_const(&b, 0.0) => Expr::Const(0.0),
        _ if is_const(&a, 1.0) => b,
        _ if is_const(&b, 1.0) => a,
        _ => a * b,
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(x) => Expr::Const(-x),
        Expr::Unary(UnaryOp::Neg, inner) => *inner,
        other => -other,
    }
}

/// `∂e/∂x_var`.
pub(super) fn derivative(e: &Expr, var: usize) -> Expr {
    match e {
        Expr::Const(_) => Expr::Const(0.0),
        Expr::Var(i) => Expr::Const(if *i == var { 1.0 } else { 0.0 }),
        Expr::Unary(op, a) => {
            let da = derivative(a, var);
            if is_const(&da, 0.0) {
                return Expr::Const(0.0);
            }
            let a = (**a).clone();
            match op {
                UnaryOp::Neg => neg(da),
                UnaryOp::Sin => mul(a.cos(), da),
                UnaryOp::Cos => neg(mul(a.sin(), da)),
                UnaryOp::Exp => mul(a.exp(), da),
                UnaryOp::Log => Expr::binary(BinaryOp::Div, da, a),
                UnaryOp::Sqrt => Expr::binary(BinaryOp::Div, da, 2.0 * a.sqrt()),
                UnaryOp::Tanh => mul(1.0 - a.tanh().powi(2), da),
            }
        }
        Expr::Binary(op, a, b) => {
            let da = derivative(a, var);
            let db = derivative(b, var);
            let (a, b) = ((**a).clone(), (**b).clone());
            match op {
                BinaryOp::Add => add(da, db),
                BinaryOp::Sub => sub(da, db),
                BinaryOp::Mul => add(mul(da, b), mul(a, db)),
                BinaryOp::Div => {
                    if is_const(&db, 0.0) {
                        if is_const(&da, 0.0) {
                            return Expr::Const(0.0);
                        }
                        return Expr::binary(BinaryOp::Div, da, b);
                    }
                    let num = sub(mul(da, b.clone()), mul(a, db));
                    Expr::binary(BinaryOp::Div, num, b.powi(2))
                }
            }
        }
        Expr::Pow(a, n) => {
            let da = derivative(a, var);
            match n {
                0 => Expr::Const(0.0),
                _ if is_const(&da, 0.0) => Expr::Const(0.0),
                1 => da,
                2 => mul(mul(Expr::Const(2.0), (**a).clone()), da),
                _ => mul(mul(Expr::Const(f64::from(*n)), (**a).clone().powi(n - 1)), da),
            }
        }
    }
}
