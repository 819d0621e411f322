//! Continuation of phase-locked states in the coupling `K`.
//!
//! [`arclength`] is a generic pseudo-arclength tracer (secant predictor,
//! Newton corrector on the system bordered by the arclength condition)
//! with K-turning-point detection and refinement. [`continue_branch`]
//! applies it to the Kuramoto locking equations with unknowns `(u, ω*)`,
//! recording order parameter and gauge-reduced spectrum along the way.

pub mod arclength;
mod branch;
mod kcrit;

pub use arclength::{ContinuationOptions, Problem, Termination};
pub use branch::{continue_branch, locate_fold, Branch, BranchPoint, Fold, KuramotoProblem};
pub use kcrit::{
    measure_kcrit, measure_kcrit_with_state, sweep_realizations, CriticalCouplingResult, CriticalState, KcritMethod, KcritOptions, Strategy, SweepAggregate,
    SweepConfig, SweepResult, SweepTask,
};
