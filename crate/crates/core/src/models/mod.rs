//! Control-affine system abstraction `f(x, u) = g(x) + h(x) u` with first
//! and second spatial derivatives, plus the three benchmark systems.
//!
//! Every model declares its own native unit system (the benchmark scenarios
//! mix units per system): the differential drive is unit-agnostic in length
//! (presets use millimeters), the rigid bodies use centimeters, grams and
//! seconds with control inputs in mN / uN*m.

mod diff_drive;
mod fish;
mod kin_body;
pub(crate) mod quat;
pub mod toy;

pub use diff_drive::{DiffDrive, DiffDriveParams};
pub use fish::{Fish, FishParams};
pub use kin_body::KinematicBody;

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A control-affine system `f(x, u) = g(x) + h(x) u`.
///
/// `drift` already folds in any constant world-frame flow velocity on the
/// position rows, so the synthesis formulas see one consistent drift field.
pub trait ControlAffine: Send + Sync {
    fn state_dim(&self) -> usize;
    fn control_dim(&self) -> usize;

    /// Drift vector field g(x).
    fn drift(&self, x: &DVector<f64>) -> DVector<f64>;

    /// Control matrix h(x), N x M.
    fn control_matrix(&self, x: &DVector<f64>) -> DMatrix<f64>;

    /// Jacobian of the drift, N x N.
    fn drift_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64>;

    /// Jacobian of column `k` of h, N x N.
    fn control_jacobian(&self, x: &DVector<f64>, k: usize) -> DMatrix<f64>;

    /// Contraction sum_i w_i * D_x^2 f^i(x, u) of the dynamics Hessians
    /// with a weight vector (the adjoint `rho` in the Omega equation).
    fn hessian_contraction(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
        w: &DVector<f64>,
    ) -> DMatrix<f64>;

    /// Hessian of the i-th dynamics component, N x N.
    fn dynamics_hessian(&self, x: &DVector<f64>, u: &DVector<f64>, i: usize) -> DMatrix<f64> {
        let mut w = DVector::zeros(self.state_dim());
        w[i] = 1.0;
        self.hessian_contraction(x, u, &w)
    }

    /// Per-channel saturation bounds [lo, hi].
    fn saturation(&self) -> &[(f64, f64)];

    /// Indices of the world-position rows (obstacle distance acts on these).
    fn position_rows(&self) -> &[usize];

    /// Post-integration-step projection (quaternion renormalization).
    fn project(&self, _x: &mut DVector<f64>) {}

    /// Tangent-space projector for rank computations, `T x N`.
    ///
    /// Quaternion models discount the norm direction here; models without
    /// representation redundancy return `None`.
    fn tangent_projector(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }

    /// Model name used by the harness config schema.
    fn name(&self) -> &'static str;

    /// Full dynamics f(x, u) = g(x) + h(x) u. Dimensions are assumed valid;
    /// use [`eval_dynamics`] for the checked entry point.
    fn dynamics(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        self.drift(x) + self.control_matrix(x) * u
    }

    /// Jacobian of f(x, u) with respect to x at fixed u.
    fn dynamics_jacobian(&self, x: &DVector<f64>, u: &DVector<f64>) -> DMatrix<f64> {
        let mut j = self.drift_jacobian(x);
        for k in 0..self.control_dim() {
            if u[k] != 0.0 {
                j += self.control_jacobian(x, k) * u[k];
            }
        }
        j
    }

    /// Sample a random state in the model's nominal operating region, used
    /// by derivative checks and oracle sweeps.
    fn random_state(&self, rng: &mut ChaCha8Rng) -> DVector<f64>;
}

/// Checked dynamics evaluation: errors on dimension mismatch. Evaluation
/// does not clamp `u`; saturation is the synthesis layer's job.
pub fn eval_dynamics(
    model: &dyn ControlAffine,
    x: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<DVector<f64>> {
    if x.len() != model.state_dim() {
        return Err(Error::DimensionMismatch(format!(
            "state has length {}, model expects {}",
            x.len(),
            model.state_dim()
        )));
    }
    if u.len() != model.control_dim() {
        return Err(Error::DimensionMismatch(format!(
            "control has length {}, model expects {}",
            u.len(),
            model.control_dim()
        )));
    }
    Ok(model.dynamics(x, u))
}

/// Central finite-difference Jacobian of an N-vector function of the state.
pub fn fd_jacobian<F>(f: F, x: &DVector<f64>, out_dim: usize) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = x.len();
    let mut jac = DMatrix::zeros(out_dim, n);
    for j in 0..n {
        let h = 1e-5 * x[j].abs().max(1.0);
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        let df = (f(&xp) - f(&xm)) / (2.0 * h);
        jac.set_column(j, &df);
    }
    jac
}

/// One entry of a derivative check report.
#[derive(Debug, Clone)]
pub struct DerivativeCheck {
    /// Which derivative was checked ("drift_jacobian", "h_jacobian[1]", ...).
    pub label: String,
    /// Max relative error over all trials (relative to the larger of 1 and
    /// the matrix max-norm).
    pub max_rel_error: f64,
    /// Worst entry (row, col) at the worst trial.
    pub worst_entry: (usize, usize),
    pub pass: bool,
}

/// Report of [`check_derivatives`].
#[derive(Debug, Clone)]
pub struct DerivativeReport {
    pub model: &'static str,
    pub trials: usize,
    pub checks: Vec<DerivativeCheck>,
}

impl DerivativeReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

impl std::fmt::Display for DerivativeReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "derivative check: {} ({} trials)", self.model, self.trials)?;
        for c in &self.checks {
            writeln!(
                f,
                "  {:<24} max rel err {:>12.3e} at entry ({}, {})  {}",
                c.label,
                c.max_rel_error,
                c.worst_entry.0,
                c.worst_entry.1,
                if c.pass { "ok" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

const DERIV_TOL: f64 = 1e-5;

/// Compare every analytic derivative of `model` against central finite
/// differences at `trials` random states (and random in-box controls for
/// the Hessians). The report carries pass/fail per derivative.
pub fn check_derivatives(
    model: &dyn ControlAffine,
    trials: usize,
    seed: u64,
) -> DerivativeReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = model.state_dim();
    let m = model.control_dim();

    let mut agg: Vec<(String, f64, (usize, usize))> = Vec::new();
    let mut record = |agg: &mut Vec<(String, f64, (usize, usize))>,
                      label: &str,
                      analytic: &DMatrix<f64>,
                      fd: &DMatrix<f64>| {
        let scale = analytic.amax().max(fd.amax()).max(1.0);
        let mut worst = 0.0;
        let mut at = (0, 0);
        for i in 0..analytic.nrows() {
            for j in 0..analytic.ncols() {
                let e = (analytic[(i, j)] - fd[(i, j)]).abs() / scale;
                if e > worst {
                    worst = e;
                    at = (i, j);
                }
            }
        }
        match agg.iter_mut().find(|(l, _, _)| l == label) {
            Some((_, w, a)) => {
                if worst > *w {
                    *w = worst;
                    *a = at;
                }
            }
            None => agg.push((label.to_string(), worst, at)),
        }
    };

    for _ in 0..trials.max(1) {
        let x = model.random_state(&mut rng);
        let u = DVector::from_fn(m, |k, _| {
            let (lo, hi) = model.saturation()[k];
            rng.gen_range(lo..=hi)
        });

        let fd_g = fd_jacobian(|x| model.drift(x), &x, n);
        record(&mut agg, "drift_jacobian", &model.drift_jacobian(&x), &fd_g);

        for k in 0..m {
            let fd_hk = fd_jacobian(|x| model.control_matrix(x).column(k).into(), &x, n);
            record(
                &mut agg,
                &format!("h_jacobian[{k}]"),
                &model.control_jacobian(&x, k),
                &fd_hk,
            );
        }

        // Hessians: finite differences of the analytic dynamics Jacobian.
        for i in 0..n {
            let fd_hess = fd_jacobian(
                |x| {
                    let j = model.dynamics_jacobian(x, &u);
                    j.row(i).transpose()
                },
                &x,
                n,
            );
            record(
                &mut agg,
                &format!("hessian[{i}]"),
                &model.dynamics_hessian(&x, &u, i),
                &fd_hess,
            );
        }
    }

    DerivativeReport {
        model: model.name(),
        trials: trials.max(1),
        checks: agg
            .into_iter()
            .map(|(label, max_rel_error, worst_entry)| DerivativeCheck {
                label,
                max_rel_error,
                worst_entry,
                pass: max_rel_error < DERIV_TOL,
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn eval_dynamics_checks_dimensions() {
        let m = DiffDrive::new(DiffDriveParams { r: 3.6, l: 25.8 });
        let bad = eval_dynamics(&m, &dvector![0.0, 0.0], &dvector![1.0, 1.0]);
        assert!(matches!(bad, Err(Error::DimensionMismatch(_))));
        let bad_u = eval_dynamics(&m, &dvector![0.0, 0.0, 0.0], &dvector![1.0]);
        assert!(matches!(bad_u, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn control_affinity_holds_exactly() {
        // f(x, a u1 + (1-a) u2) = a f(x,u1) + (1-a) f(x,u2)
        let models: Vec<Box<dyn ControlAffine>> = vec![
            Box::new(DiffDrive::new(DiffDriveParams { r: 3.6, l: 25.8 })),
            Box::new(KinematicBody::new()),
            Box::new(Fish::new(FishParams::paper())),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for model in &models {
            for _ in 0..20 {
                let x = model.random_state(&mut rng);
                let u1 = DVector::from_fn(model.control_dim(), |_, _| rng.gen_range(-1.0..1.0));
                let u2 = DVector::from_fn(model.control_dim(), |_, _| rng.gen_range(-1.0..1.0));
                let a: f64 = rng.gen_range(0.0..1.0);
                let lhs = model.dynamics(&x, &(a * &u1 + (1.0 - a) * &u2));
                let rhs = a * model.dynamics(&x, &u1) + (1.0 - a) * model.dynamics(&x, &u2);
                assert!((lhs - rhs).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn corrupted_jacobian_is_reported_by_entry() {
        struct Corrupted(DiffDrive);
        impl ControlAffine for Corrupted {
            fn state_dim(&self) -> usize {
                self.0.state_dim()
            }
            fn control_dim(&self) -> usize {
                self.0.control_dim()
            }
            fn drift(&self, x: &DVector<f64>) -> DVector<f64> {
                self.0.drift(x)
            }
            fn control_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
                self.0.control_matrix(x)
            }
            fn drift_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
                let mut j = self.0.drift_jacobian(x);
                j[(1, 2)] += 0.5; // deliberate fault
                j
            }
            fn control_jacobian(&self, x: &DVector<f64>, k: usize) -> DMatrix<f64> {
                self.0.control_jacobian(x, k)
            }
            fn hessian_contraction(
                &self,
                x: &DVector<f64>,
                u: &DVector<f64>,
                w: &DVector<f64>,
            ) -> DMatrix<f64> {
                self.0.hessian_contraction(x, u, w)
            }
            fn saturation(&self) -> &[(f64, f64)] {
                self.0.saturation()
            }
            fn position_rows(&self) -> &[usize] {
                self.0.position_rows()
            }
            fn name(&self) -> &'static str {
                "corrupted"
            }
            fn random_state(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
                self.0.random_state(rng)
            }
        }
        let report = check_derivatives(
            &Corrupted(DiffDrive::new(DiffDriveParams { r: 3.6, l: 25.8 })),
            5,
            1,
        );
        let bad = report
            .checks
            .iter()
            .find(|c| c.label == "drift_jacobian")
            .unwrap();
        assert!(!bad.pass);
        assert_eq!(bad.worst_entry, (1, 2));
        // Hessians are checked against the (corrupted) analytic Jacobian,
        // whose fault is constant in x and thus invisible to them; the
        // Jacobian check itself is what names the fault.
        assert!(!report.all_pass());
    }
}
