//! Phase-space states, observables, the Poisson bracket and reference
//! integrators.

mod integrate;
mod observable;
mod state;
mod trajectory;

pub use integrate::{
    integrate_adaptive, Adaptive, Guard, SingularDistance, Verlet, DEFAULT_RTOL, RTOL_MAX,
    RTOL_MIN, SINGULARITY_STOP,
};
pub use observable::{bracket_matrix, bracket_of, fd_step, grad, poisson_bracket, Gradient, Observable};
pub use state::PhaseState;
pub(crate) use state::norm;
pub use trajectory::{MonitorSet, Trajectory};
