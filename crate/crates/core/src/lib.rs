//! Numerical toolkit for Sobolev functions with dominating mixed smoothness.
//!
//! The crate evaluates the generalized Newton-Leibniz identity on
//! n-rectangles,
//!
//! ```text
//! u(x') - u(x) = sum over nonempty S ⊆ {1..n} of  ∫_{P_S} ∂^|S| u / ∂x_S
//! ```
//!
//! where `P_S` is the face of the box spanned by the axes in `S` with every
//! other coordinate pinned to the bottom corner, and checks the explicit
//! Hölder, trace and norm estimates that follow from it.
//!
//! Building blocks:
//!
//! * [`rect`]: boxes, index subsets, bottom-corner faces, pair normalization.
//! * [`expr`]: a small expression language for the function under test.
//! * [`jet`]: exact mixed partials of order ≤ 1 per variable.
//! * [`quadrature`]: tensor-product composite Gauss-Legendre rules.
//! * [`gnl`]: assembly and verification of the Newton-Leibniz identity.
//! * [`norms`]: `L_p`, `S¹_p`, anisotropic `W^s_p`, sup and Hölder norms.
//! * [`embedding`]: the embedding constants and inequality checks.
//!
//! The crate is `no_std` (with `alloc`) when built without the default
//! `std` feature; enable the `libm` feature in that case.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

#[cfg(not(any(feature = "std", feature = "libm")))]
compile_error!("mixsmooth-core needs either the `std` or the `libm` feature for float math");

pub mod combinatorics;
pub mod embedding;
mod error;
pub mod expr;
pub mod gallery;
pub mod gnl;
pub mod jet;
pub mod math;
pub mod norms;
pub mod quadrature;
pub mod rect;
pub mod report;
pub mod sampler;
pub mod sum;

pub use error::Error;
pub use expr::{parse, Expr};
pub use jet::{eval_jet, MixedJet};
pub use rect::{IndexSubset, Rectangle, SubRectangle};
pub use report::Verdict;

pub type Result<T, E = Error> = core::result::Result<T, E>;
