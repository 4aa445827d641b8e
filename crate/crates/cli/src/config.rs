//! Argument values that clap leaves as strings: number lists, boxes,
//! function sources.

use std::path::Path;

use mixsmooth_core::expr::{parse_function_source, ParseDiagnostic};
use mixsmooth_core::rect::MAX_DIM;
use mixsmooth_core::{gallery, parse, Error, Expr, Rectangle};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 64,
            Self::Io { .. } => 74,
        }
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(d) => usage(describe_parse(&d)),
            other => usage(other.to_string()),
        }
    }
}

pub fn describe_parse(d: &ParseDiagnostic) -> String {
    let mut s = format!("parse error at column {}: {}", d.column(), d.message());
    if let Some(hint) = d.expected {
        s.push_str(&format!(" (expected {hint})"));
    }
    s
}

fn parse_number(s: &str) -> Result<f64, String> {
    match s.trim() {
        "inf" | "+inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        t => t.parse::<f64>().map_err(|_| format!("'{t}' is not a number")),
    }
}

pub fn number_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    if s.trim().is_empty() {
        return Err(usage(format!("{what}: empty list")));
    }
    s.split(',')
        .map(|t| parse_number(t).map_err(|e| usage(format!("{what}: {e}"))))
        .collect()
}

/// Exponents `p ≥ 1`; `inf` allowed only when `allow_inf`.
pub fn p_list(s: &str, allow_inf: bool) -> Result<Vec<f64>, CliError> {
    let ps = number_list(s, "--p")?;
    for &p in &ps {
        if p.is_nan() || p < 1.0 {
            return Err(usage("p must be ≥ 1"));
        }
        if p.is_infinite() && !allow_inf {
            return Err(usage("p = inf is only supported by the norms command"));
        }
    }
    Ok(ps)
}

/// Interleaved bounds `lo1,hi1,lo2,hi2,...`.
pub fn rect_arg(s: &str, n: usize, flag: &str) -> Result<Rectangle, CliError> {
    let v = number_list(s, flag)?;
    let r = Rectangle::from_interleaved(&v).map_err(|e| usage(format!("{flag}: {e}")))?;
    if r.dim() != n {
        return Err(usage(format!(
            "{flag}: {} axes given, the function has n = {n}",
            r.dim()
        )));
    }
    Ok(r)
}

pub fn positive(x: f64, flag: &str) -> Result<f64, CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(usage(format!("{flag} must be positive, got {x}")))
    }
}

#[derive(Debug, Clone)]
pub struct LoadedFunction {
    pub expr: Expr,
    pub n: usize,
    /// `gallery`, `file` or `inline`.
    pub origin: &'static str,
    pub support: Option<Rectangle>,
}

/// `--fn` is a gallery id, a file, or an inline expression, tried in that
/// order. Without `--n` the dimension is the gallery's, the file header's,
/// or the largest variable index used.
pub fn load_function(src: &str, n: Option<usize>) -> Result<LoadedFunction, CliError> {
    if let Some(nn) = n {
        if !(1..=MAX_DIM).contains(&nn) {
            return Err(usage(format!("n must be in 1..={MAX_DIM}, got {nn}")));
        }
    }
    if let Some(g) = gallery::lookup(src) {
        if n.is_some_and(|nn| nn != g.n) {
            return Err(usage(format!(
                "{} is {}-dimensional, but --n {} was given",
                g.id,
                g.n,
                n.unwrap()
            )));
        }
        return Ok(LoadedFunction {
            expr: g.expr,
            n: g.n,
            origin: "gallery",
            support: g.support,
        });
    }
    let (expr, declared, origin) = if Path::new(src).is_file() {
        let text = std::fs::read_to_string(src).map_err(|source| CliError::Io {
            path: src.into(),
            source,
        })?;
        let fs = parse_function_source(&text, n.unwrap_or(MAX_DIM))
            .map_err(|d| usage(format!("{src}: {}", describe_parse(&d))))?;
        (fs.expr, fs.arity, "file")
    } else {
        let e = parse(src, n.unwrap_or(MAX_DIM)).map_err(|d| usage(describe_parse(&d)))?;
        (e, None, "inline")
    };
    if let (Some(a), Some(nn)) = (declared, n) {
        if a != nn {
            return Err(usage(format!("{src} declares arity {a}, but --n {nn} was given")));
        }
    }
    let n = n.or(declared).unwrap_or_else(|| expr.free_arity().max(1));
    if expr.free_arity() > n {
        return Err(usage(format!("function uses x{} but n = {n}", expr.free_arity())));
    }
    Ok(LoadedFunction {
        expr,
        n,
        origin,
        support: None,
    })
}
