//! Derivative engines over PGD/APG.
//!
//! * [`ad_forward`], [`ad_reverse`]: unrolled AD over a recorded
//!   [`SolveTrace`](crate::solver::SolveTrace).
//! * [`fpad_forward`], [`fpad_reverse`]: the same recursions frozen at an
//!   [`FpadAnchor`]; the reverse engine keeps no history.
//! * [`implicit_jvp`], [`implicit_vjp`]: direct solves of the linearised
//!   fixed-point equation at the same anchor.

mod fpad;
mod implicit;
mod unrolled;

pub use fpad::{
    fpad_forward, fpad_forward_with, fpad_reverse, fpad_reverse_with, ForwardSequence, FpadAnchor,
    FpadOptions, FpadOutcome,
};
pub use implicit::{
    implicit_jvp, implicit_vjp, ImplicitBackend, ImplicitOptions, ImplicitSolution, NEUMANN_RHO_MAX,
};
pub use unrolled::{
    ad_forward, ad_forward_with, ad_reverse, ad_reverse_with, CotangentState, TangentState,
};
