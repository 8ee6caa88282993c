//! Feedback synthesis for control-affine systems using first- and
//! second-order needle variations, plus the benchmark harness that
//! exercises the synthesis in closed loop.
//!
//! The crate is organized around the pipeline of the method:
//!
//! * [`ode`] — fixed-step RK4 integration with dense Hermite-interpolable
//!   trajectory storage, shared by forward and backward passes.
//! * [`models`] — the control-affine system abstraction `f = g(x) + h(x)u`
//!   with analytic derivatives, and the three benchmark systems.
//! * [`objective`] — quadratic tracking costs with smooth obstacle penalties
//!   and every derivative the adjoint passes need.
//! * [`adjoint`] — backward integration of the first-order costate `rho`
//!   and the second-order costate `Omega` along a default trajectory.
//! * [`needle`] — the synthesis core: mode insertion gradient and Hessian,
//!   their control derivatives, the analytic control laws, spectral Hessian
//!   regularization, saturation, application-time selection, and the
//!   duration line search.
//! * [`analysis`] — Lie brackets, controllability span certificates, and
//!   descent-map generation.
//! * [`harness`] — scenario configuration, closed-loop simulation, the
//!   Monte Carlo runner, and CSV emission.
//!
//! Monte Carlo trials and descent-map cells evaluate in parallel through
//! rayon when the `parallel` feature (default) is enabled; without it every
//! entry point falls back to sequential evaluation.

pub mod adjoint;
pub mod analysis;
pub mod exec;
pub mod harness;
pub mod models;
pub mod needle;
pub mod objective;
pub mod ode;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// The integrator produced a non-finite state.
    #[error("integration diverged at t = {t}: non-finite state")]
    IntegrationDiverged { t: f64 },
    /// A trajectory was sampled outside its stored span.
    #[error("sample time {t} outside trajectory range [{t0}, {t1}]")]
    OutOfRange { t: f64, t0: f64, t1: f64 },
    /// An argument violated a dimension contract.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// A precondition on an argument failed.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Scenario configuration could not be parsed or validated.
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
