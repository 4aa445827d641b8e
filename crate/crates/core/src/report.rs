//! Verdicts and the provenance attached to every check.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::quadrature::IntegralResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    Pass,
    /// Numerics could not decide; never a counterexample.
    Inconclusive,
    Fail,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pass => "PASS",
            Self::Inconclusive => "INCONCLUSIVE",
            Self::Fail => "FAIL",
        }
    }

    /// PASS iff `margin ≥ -tol·rhs`.
    pub fn from_margin(margin: f64, rhs: f64, tol: f64) -> Self {
        if margin.is_nan() {
            Self::Inconclusive
        } else if margin >= -tol * crate::math::abs(rhs) {
            Self::Pass
        } else {
            Self::Fail
        }
    }

    /// Combination over several checks: any FAIL wins, then INCONCLUSIVE.
    pub fn combine<I: IntoIterator<Item = Verdict>>(verdicts: I) -> Self {
        verdicts.into_iter().fold(Self::Pass, Self::max)
    }

    /// Process exit code for the command-line contract.
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Pass => 0,
            Self::Fail => 1,
            Self::Inconclusive => 2,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Quadrature provenance of a number.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureInfo {
    pub order: usize,
    pub cells: Vec<usize>,
    pub error_estimate: Option<f64>,
    pub evaluations: u64,
    pub converged: bool,
}

impl QuadratureInfo {
    pub fn from_result(r: &IntegralResult, converged: bool) -> Self {
        Self {
            order: r.grid.order,
            cells: r.grid.cells.clone(),
            error_estimate: r.error_estimate,
            evaluations: r.evaluations,
            converged,
        }
    }

    /// Merges several integrals: worst error, summed work, finest grid.
    pub fn merge<'a, I: IntoIterator<Item = &'a QuadratureInfo>>(parts: I) -> Option<Self> {
        let mut out: Option<Self> = None;
        for p in parts {
            match &mut out {
                None => out = Some(p.clone()),
                Some(acc) => {
                    acc.evaluations += p.evaluations;
                    acc.converged &= p.converged;
                    acc.error_estimate = match (acc.error_estimate, p.error_estimate) {
                        (Some(a), Some(b)) => Some(a.max(b)),
                        (a, b) => a.or(b),
                    };
                    if p.cells.iter().max() > acc.cells.iter().max() {
                        acc.cells = p.cells.clone();
                    }
                }
            }
        }
        out
    }
}

/// Pair-sampler provenance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerInfo {
    pub seed: u64,
    pub count: usize,
}

/// Outcome of checking `lhs ≤ rhs` on sampled data.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub name: String,
    /// Largest sampled left-hand side (already divided by any
    /// pair-dependent constant, see `notes`).
    pub lhs_max: f64,
    /// Where `lhs_max` was attained: one or two points.
    pub argmax: Vec<Vec<f64>>,
    pub rhs: f64,
    pub margin: f64,
    pub verdict: Verdict,
    pub violations: usize,
    pub samples: usize,
    /// Constant multiplying the norm on the right, when it is fixed.
    pub constant: Option<f64>,
    pub quadrature: Option<QuadratureInfo>,
    pub sampler: Option<SamplerInfo>,
    pub notes: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margins_and_combination() {
        assert_eq!(Verdict::from_margin(0.0, 0.0, 1e-12), Verdict::Pass);
        assert_eq!(Verdict::from_margin(-1e-13, 1.0, 1e-12), Verdict::Pass);
        assert_eq!(Verdict::from_margin(-1e-3, 1.0, 1e-12), Verdict::Fail);
        assert_eq!(Verdict::from_margin(f64::NAN, 1.0, 1e-12), Verdict::Inconclusive);
        use Verdict::*;
        assert_eq!(Verdict::combine([Pass, Pass]), Pass);
        assert_eq!(Verdict::combine([Pass, Inconclusive]), Inconclusive);
        assert_eq!(Verdict::combine([Inconclusive, Fail, Pass]), Fail);
        assert_eq!(Verdict::combine([]), Pass);
    }
}
