//! Numerical toolkit for multi-dimensional conformal mechanics.
//!
//! A conformal system is `H = p²/2 + V(q)` with `V` homogeneous of degree −2.
//! Together with the dilatation `D = p·q` and the boost `K = q²/2` it closes
//! the `so(1,2)` algebra
//!
//! ```text
//! {H, D} = 2H,   {H, K} = D,   {K, D} = −2K
//! ```
//!
//! under the bracket convention `{p_i, x^j} = δ_i^j` (see [`phase`]). The
//! crate provides:
//!
//! * [`phase`]: states, dual-number observables, the bracket engine and
//!   reference integrators;
//! * [`conformal`]: system construction, algebra/homogeneity checks and the
//!   Casimir `I = (4HK − D²)/2`;
//! * [`reduction`]: the canonical split into `(r, p_r)` and `T*S^{d−1}`;
//! * [`models`]: the model catalog and the Calogero reduction;
//! * [`exact`]: closed-form radial motion, reparametrized time, collapse
//!   detection and trajectory reconstruction;
//! * [`lobachevsky`]: the Klein-model coordinate `w`, the inversion
//!   `w → −1/w` and its canonicity analysis.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conformal;
pub mod dual;
pub mod error;
pub mod exact;
pub mod exec;
pub mod lobachevsky;
pub mod models;
pub mod phase;
pub mod reduction;
pub mod sampling;

pub use error::{Error, Result};
pub use exec::Execution;
pub use phase::{Observable, PhaseState, Trajectory};
