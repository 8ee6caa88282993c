//! Backward integration of the first-order costate `rho` and the
//! second-order costate `Omega` along a default forward trajectory.
//!
//!   rho_dot   = -D_x l1' - D_x f1' rho,          rho(t_f)   = D_x m'
//!   Omega_dot = -D_x f1' Omega - Omega D_x f1
//!               - D_x^2 l1 - sum_i rho_i D_x^2 f1^i,
//!                                                Omega(t_f) = D_x^2 m
//!
//! Both are integrated as forward ODEs in the reversed time variable
//! `s = t_f - t` on the same fixed grid as the forward pass, reading x(t)
//! through Hermite interpolation of the default trajectory. Omega is
//! symmetrized after every step; the flow preserves symmetry analytically
//! and the mode-insertion-Hessian quadratic form assumes it.

use crate::models::ControlAffine;
use crate::objective::Objective;
use crate::ode::{self, MatrixTrajectory, Trajectory};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// First- and second-order costate curves of one planning horizon.
#[derive(Debug, Clone)]
pub struct AdjointPair {
    pub rho: Trajectory,
    /// Present only in second-order mode.
    pub omega: Option<MatrixTrajectory>,
}

/// Solve the first-order adjoint along `default_traj` under default
/// control `v(t)`.
pub fn solve_rho<V>(
    model: &dyn ControlAffine,
    obj: &Objective,
    default_traj: &Trajectory,
    v: &V,
) -> Result<Trajectory>
where
    V: Fn(f64) -> DVector<f64> + ?Sized,
{
    let t0 = default_traj.t0();
    let tf = default_traj.t_end();
    let (_, dm, _) = obj.terminal_cost(default_traj.final_state(), tf);

    // Forward field in s = t_f - t:  d(rho)/ds = D_x l1' + D_x f1' rho.
    let field = |s: f64, rho: &DVector<f64>| {
        let t = tf - s;
        let x = default_traj.sample(t).expect("in-range by construction");
        let (_, dl, _) = obj.running_cost(&x, t);
        let a = model.dynamics_jacobian(&x, &v(t));
        dl + a.transpose() * rho
    };
    let rev = ode::integrate(field, &dm, 0.0, tf - t0, grid_dt(default_traj))?;
    Ok(reverse_time(&rev, tf))
}

/// Solve the second-order adjoint; `rho` must already be solved on the
/// same grid.
pub fn solve_omega<V>(
    model: &dyn ControlAffine,
    obj: &Objective,
    default_traj: &Trajectory,
    rho: &Trajectory,
    v: &V,
) -> Result<MatrixTrajectory>
where
    V: Fn(f64) -> DVector<f64> + ?Sized,
{
    let t0 = default_traj.t0();
    let tf = default_traj.t_end();
    let dt = grid_dt(default_traj);
    let span = tf - t0;

    let (_, _, d2m) = obj.terminal_cost(default_traj.final_state(), tf);

    // d(Omega)/ds = A' Omega + Omega A + D_x^2 l1 + sum_i rho_i D_x^2 f1^i.
    let field = |s: f64, om: &DMatrix<f64>| {
        let t = tf - s;
        let x = default_traj.sample(t).expect("in-range by construction");
        let vt = v(t);
        let a = model.dynamics_jacobian(&x, &vt);
        let (_, _, d2l) = obj.running_cost(&x, t);
        let rho_t = rho.sample(t).expect("rho covers the horizon");
        let contraction = model.hessian_contraction(&x, &vt, &rho_t);
        a.transpose() * om + om * a + d2l + contraction
    };

    // RK4 over matrices with per-step symmetrization.
    let n_full = (span / dt + 1e-9).floor() as usize;
    let rem = span - n_full as f64 * dt;
    let has_tail = rem > 1e-9 * dt;
    let steps = n_full + usize::from(has_tail);

    let mut times = Vec::with_capacity(steps + 1);
    let mut samples = Vec::with_capacity(steps + 1);
    let mut derivs = Vec::with_capacity(steps + 1);

    let mut om = ode::symmetrize(d2m);
    let mut s = 0.0;
    times.push(s);
    derivs.push(field(s, &om));
    samples.push(om.clone());

    for step in 0..steps {
        let h = if step < n_full { dt } else { rem };
        let k1 = field(s, &om);
        let k2 = field(s + 0.5 * h, &(&om + 0.5 * h * &k1));
        let k3 = field(s + 0.5 * h, &(&om + 0.5 * h * &k2));
        let k4 = field(s + h, &(&om + h * &k3));
        om = &om + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        om = ode::symmetrize(om);
        s = if step + 1 == steps { span } else { s + h };
        if om.iter().any(|e| !e.is_finite()) {
            return Err(Error::IntegrationDiverged { t: tf - s });
        }
        times.push(s);
        derivs.push(field(s, &om));
        samples.push(om.clone());
    }

    // Map s back to t = t_f - s (reverses order, negates derivatives).
    let m = times.len();
    let t_times: Vec<f64> = (0..m).map(|i| tf - times[m - 1 - i]).collect();
    let t_samples: Vec<DMatrix<f64>> = (0..m).map(|i| samples[m - 1 - i].clone()).collect();
    let t_derivs: Vec<DMatrix<f64>> = (0..m).map(|i| -&derivs[m - 1 - i]).collect();
    MatrixTrajectory::from_nodes(t_times, t_samples, t_derivs)
}

/// Solve both costates as one pass.
pub fn solve_pair<V>(
    model: &dyn ControlAffine,
    obj: &Objective,
    default_traj: &Trajectory,
    v: &V,
    second_order: bool,
) -> Result<AdjointPair>
where
    V: Fn(f64) -> DVector<f64> + ?Sized,
{
    let rho = solve_rho(model, obj, default_traj, v)?;
    let omega = if second_order {
        Some(solve_omega(model, obj, default_traj, &rho, v)?)
    } else {
        None
    };
    Ok(AdjointPair { rho, omega })
}

fn grid_dt(traj: &Trajectory) -> f64 {
    let times = traj.times();
    if times.len() >= 2 {
        times[1] - times[0]
    } else {
        1e-3
    }
}

/// Flip a curve integrated in s = t_f - t back into increasing t.
fn reverse_time(rev: &Trajectory, tf: f64) -> Trajectory {
    let m = rev.len();
    let times: Vec<f64> = (0..m).map(|i| tf - rev.times()[m - 1 - i]).collect();
    let states: Vec<DVector<f64>> = (0..m).map(|i| rev.state(m - 1 - i).clone()).collect();
    let derivs: Vec<DVector<f64>> = (0..m).map(|i| -rev.deriv(m - 1 - i)).collect();
    Trajectory::from_nodes(times, states, derivs).expect("reversed grid is monotone")
}
