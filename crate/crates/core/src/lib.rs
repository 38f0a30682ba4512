//! Strang splitting for reaction–diffusion problems
//!
//! ```text
//! u_t = Δu + f(t, x, u)   in Ω = [0,1]^d,     u = g(t)   on ∂Ω
//! ```
//!
//! with time-dependent Dirichlet data, using the boundary corrections that
//! keep the splitting second order. Plain Strang splitting with homogeneous
//! boundary steps loses order in this setting.
//!
//! The crate is organised bottom-up:
//!
//! - [`problems`]: continuous test problems and boundary trace calculus.
//! - [`discretization`]: Chebyshev collocation and finite-difference grids
//!   giving the semidiscrete system `U' = A U + C g + F`.
//! - [`expfuncs`]: φ-functions and their action through dense, Krylov and
//!   sine-transform strategies.
//! - [`integrators`]: adaptive Dormand–Prince and TR-BDF2 for the
//!   subproblems.
//! - [`schemes`]: the EO and ACR steppers.
//! - [`bench`]: sweeps, observed orders, CSV output.
//!
//! ```
//! use strang_split::prelude::*;
//!
//! let p = builtin_problem(ProblemId::P1D);
//! let d = Discretization::build(DiscKind::FD1D, 0.05)?;
//! let k = 0.02;
//! let ev = PhiEvaluator::new(&d, PhiStrategy::Dst, k / 2.0)?;
//! let u0 = initial_state(p.as_ref(), &d);
//! let tol = ToleranceProfile::moderate();
//! let run = integrate(SchemeId::ACR2, p.as_ref(), &d, Some(&ev), &u0, k, &tol)?;
//! assert!(max_error(&run.state, &d, p.as_ref(), 0.2)? < 1e-2);
//! # Ok::<(), strang_split::Error>(())
//! ```

pub mod bench;
pub mod discretization;
pub mod error;
pub mod expfuncs;
pub mod integrators;
pub mod linalg;
pub mod problems;
pub mod schemes;

pub use error::{Error, Result};

/// The types needed for typical use.
pub mod prelude {
    pub use crate::bench::{observed_order, run_sweep, RunRecord, SweepConfig};
    pub use crate::discretization::{DiscKind, Discretization};
    pub use crate::error::{Error, Result};
    pub use crate::expfuncs::{phi_scalar, PhiEvaluator, PhiStrategy};
    pub use crate::integrators::{OdeStats, ToleranceProfile};
    pub use crate::problems::{
        boundary_trace, builtin_problem, exact_state, initial_state, max_error, BoundaryTrace, Problem, ProblemId,
        ReactionPartials, TraceQuantity,
    };
    pub use crate::schemes::{integrate, step, SchemeId, StepOutcome};
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    pub struct Readme;
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/problems.md")]
    pub struct Problems;
    #[doc = include_str!("../../../book/src/discretization.md")]
    pub struct Discretization;
    #[doc = include_str!("../../../book/src/phi-functions.md")]
    pub struct PhiFunctions;
    #[doc = include_str!("../../../book/src/schemes.md")]
    pub struct Schemes;
    #[doc = include_str!("../../../book/src/bench.md")]
    pub struct Bench;
}
