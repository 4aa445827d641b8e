//! Built-in test functions, parameterized by dimension.
//!
//! Identifiers are `<family><n>d`, e.g. `bump2d` or `sinexp3d`.
//!
//! | family   | formula                                         | support box   |
//! |----------|-------------------------------------------------|---------------|
//! | `bump`   | `exp(-(x1^4 + … + xn^4))`                       | `[-3, 3]^n`   |
//! | `gauss`  | `exp(-(x1^2 + … + xn^2))`                       | `[-6, 6]^n`   |
//! | `poly`   | `Π_i (x_i^2 + i·x_i - 1) + Σ_i x_i^3`           | none          |
//! | `sinexp` | `sin(x1)·exp(x2)·x3·cos(x4)…` (cycling)         | none          |
//! | `loglog` | `log(log(1 + 1/sqrt(x1^2 + … + xn^2 + r0^2)))`  | none          |
//!
//! Outside its support box a decaying member is below `1e-13` together
//! with every mixed partial, so norms over the box stand in for norms over
//! the whole space. `loglog` uses `r0 = 1/2` here; the counterexample
//! study varies `r0`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::expr::Expr;
use crate::rect::Rectangle;

/// Smoothing radius of the gallery `loglog` member.
pub const LOGLOG_R0: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Bump,
    Gauss,
    Poly,
    SinExp,
    LogLog,
}

impl Family {
    pub const ALL: [Family; 5] = [Self::Bump, Self::Gauss, Self::Poly, Self::SinExp, Self::LogLog];

    pub fn name(self) -> &'static str {
        match self {
            Self::Bump => "bump",
            Self::Gauss => "gauss",
            Self::Poly => "poly",
            Self::SinExp => "sinexp",
            Self::LogLog => "loglog",
        }
    }

    /// Half-width of the cube outside which the function is negligible.
    pub fn support_half_width(self) -> Option<f64> {
        match self {
            Self::Bump => Some(3.0),
            Self::Gauss => Some(6.0),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GalleryFunction {
    pub id: String,
    pub family: Family,
    pub n: usize,
    pub expr: Expr,
    pub support: Option<Rectangle>,
}

fn sum_of_powers(n: usize, k: u32) -> Expr {
    (2..=n).fold(Expr::var(1).powi(k), |acc, i| acc + Expr::var(i).powi(k))
}

/// `log(log(1 + 1/sqrt(|x|^2 + r0^2)))` in `n` variables.
pub fn loglog_expr(n: usize, r0: f64) -> Expr {
    let s = (sum_of_powers(n, 2) + Expr::Const(r0 * r0)).sqrt();
    (1.0 + 1.0 / s).log().log()
}

pub fn expr_for(family: Family, n: usize) -> Expr {
    match family {
        Family::Bump => (-sum_of_powers(n, 4)).exp(),
        Family::Gauss => (-sum_of_powers(n, 2)).exp(),
        Family::Poly => {
            let factor = |i: usize| Expr::var(i).powi(2) + (i as f64) * Expr::var(i) - 1.0;
            let prod = (2..=n).fold(factor(1), |acc, i| acc * factor(i));
            prod + sum_of_powers(n, 3)
        }
        Family::SinExp => {
            let factor = |i: usize| match (i - 1) % 4 {
                0 => Expr::var(i).sin(),
                1 => Expr::var(i).exp(),
                2 => Expr::var(i),
                _ => Expr::var(i).cos(),
            };
            (2..=n).fold(factor(1), |acc, i| acc * factor(i))
        }
        Family::LogLog => loglog_expr(n, LOGLOG_R0),
    }
}

/// Member of `family` in dimension `n` (`1 ≤ n ≤ 20`).
pub fn function(family: Family, n: usize) -> Option<GalleryFunction> {
    if !(1..=crate::rect::MAX_DIM).contains(&n) {
        return None;
    }
    let support = family
        .support_half_width()
        .map(|h| Rectangle::cube(n, -h, h).expect("valid cube"));
    Some(GalleryFunction {
        id: format!("{}{}d", family.name(), n),
        family,
        n,
        expr: expr_for(family, n),
        support,
    })
}

/// Resolves an identifier such as `gauss3d`.
pub fn lookup(id: &str) -> Option<GalleryFunction> {
    let body = id.strip_suffix('d')?;
    let split = body.find(|c: char| c.is_ascii_digit())?;
    let (name, digits) = body.split_at(split);
    let n: usize = digits.parse().ok()?;
    let family = Family::ALL.into_iter().find(|f| f.name() == name)?;
    function(family, n)
}

/// Every family in dimension `n`.
pub fn all(n: usize) -> Vec<GalleryFunction> {
    Family::ALL.into_iter().filter_map(|f| function(f, n)).collect()
}
