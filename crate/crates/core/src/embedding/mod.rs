//! Embedding constants and the inequality checks built on them.
//!
//! Every check compares a sampled left-hand side (a lower bound of the
//! true supremum) against a quadrature-certified right-hand side, so a
//! PASS can under-report a violation but never fabricate one.
//!
//! The Hölder exponent throughout is `γ = (p - 1)/p`. The local Hölder
//! bound is sometimes written with `|x - x'|^{p/(p-1)}` in the
//! denominator; the factorization `|x - x'|^{k(p-1)/p}` behind it only
//! works with `(p - 1)/p`, so that is what is used.

mod checks;
mod constants;
mod counterexample;
mod mollify;

pub use checks::{
    check_holder_norm, check_holder_norm_with, check_p_to_1_limit, check_pointwise, check_pointwise_with, check_trace,
    corollary2_check, derivative_multisets, limit_tolerance, CheckOptions, LimitReport,
};
pub use constants::{
    c0_constant, c0_norm_constant_p1, holder_norm_constant, local_holder_constant, pointwise_bound_constant,
    pointwise_bound_constant_p1, pointwise_factor, trace_constant, BoundConstant, ConstantKind,
};
pub use counterexample::{counterexample_run, CounterexampleReport, CounterexampleRow};
pub use mollify::{convergence_study, cutoff, kernel_normalization, ConvergenceStudy, MollifiedFunction, Mollifier};
