//! Underactuated 3D kinematic rigid body: s = [b, q] with world position b
//! and unit quaternion q. Body velocities are the inputs directly, with
//! sway and yaw authority removed: u = (F1, F3, T1, T2) maps to body
//! linear velocity (F1, 0, F3) and body angular velocity (T1, T2, 0).
//!
//! Units: centimeters and seconds; linear inputs saturate at +-10 cm/s and
//! angular inputs at +-10 rad/s.

use super::quat;
use super::ControlAffine;
use nalgebra::{DMatrix, DVector, Vector3, Vector4};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct KinematicBody {
    saturation: [(f64, f64); 4],
}

impl KinematicBody {
    pub fn new() -> Self {
        Self {
            saturation: [(-10.0, 10.0); 4],
        }
    }

    fn q(x: &DVector<f64>) -> Vector4<f64> {
        Vector4::new(x[3], x[4], x[5], x[6])
    }
}

impl Default for KinematicBody {
    fn default() -> Self {
        Self::new()
    }
}

impl ControlAffine for KinematicBody {
    fn state_dim(&self) -> usize {
        7
    }

    fn control_dim(&self) -> usize {
        4
    }

    fn drift(&self, _x: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(7)
    }

    fn control_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let q = Self::q(x);
        let rot = quat::rotation(&q);
        let g = quat::omega_map(&q);
        let mut h = DMatrix::zeros(7, 4);
        for i in 0..3 {
            h[(i, 0)] = rot[(i, 0)]; // surge: R_q e1
            h[(i, 1)] = rot[(i, 2)]; // heave: R_q e3
        }
        for i in 0..4 {
            h[(3 + i, 2)] = 0.5 * g[(i, 0)]; // roll torque
            h[(3 + i, 3)] = 0.5 * g[(i, 1)]; // pitch torque
        }
        h
    }

    fn drift_jacobian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::zeros(7, 7)
    }

    fn control_jacobian(&self, x: &DVector<f64>, k: usize) -> DMatrix<f64> {
        let q = Self::q(x);
        let mut j = DMatrix::zeros(7, 7);
        match k {
            0 | 1 => {
                let axis = if k == 0 {
                    Vector3::new(1.0, 0.0, 0.0)
                } else {
                    Vector3::new(0.0, 0.0, 1.0)
                };
                let d = quat::d_rot_v_dq(&q, &axis);
                for i in 0..3 {
                    for a in 0..4 {
                        j[(i, 3 + a)] = d[(i, a)];
                    }
                }
            }
            2 | 3 => {
                let omega_axis = if k == 2 {
                    Vector3::new(1.0, 0.0, 0.0)
                } else {
                    Vector3::new(0.0, 1.0, 0.0)
                };
                let d = quat::d_qdot_dq(&omega_axis);
                for i in 0..4 {
                    for a in 0..4 {
                        j[(3 + i, 3 + a)] = d[(i, a)];
                    }
                }
            }
            _ => unreachable!("control index out of range"),
        }
        j
    }

    fn hessian_contraction(
        &self,
        _x: &DVector<f64>,
        u: &DVector<f64>,
        w: &DVector<f64>,
    ) -> DMatrix<f64> {
        // Position rows are quadratic in q (through R_q); quaternion rows
        // are linear in q, so only the qq block survives.
        let wb = Vector3::new(w[0], w[1], w[2]);
        let v = Vector3::new(u[0], 0.0, u[1]);
        let qq = quat::d2_w_rot_v(&wb, &v);
        let mut h = DMatrix::zeros(7, 7);
        for a in 0..4 {
            for b in 0..4 {
                h[(3 + a, 3 + b)] = qq[(a, b)];
            }
        }
        h
    }

    fn saturation(&self) -> &[(f64, f64)] {
        &self.saturation
    }

    fn position_rows(&self) -> &[usize] {
        &[0, 1, 2]
    }

    fn project(&self, x: &mut DVector<f64>) {
        quat::renormalize(x, 3);
    }

    fn tangent_projector(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(quat::tangent_projector(x, 3))
    }

    fn name(&self) -> &'static str {
        "kin_body"
    }

    fn random_state(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let mut x = DVector::zeros(7);
        for i in 0..3 {
            x[i] = rng.gen_range(-50.0..50.0);
        }
        let q = Vector4::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        )
        .normalize();
        for i in 0..4 {
            x[3 + i] = q[i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::check_derivatives;
    use approx::assert_relative_eq;
    use nalgebra::dvector;
    use rand::SeedableRng;

    fn identity_state() -> DVector<f64> {
        dvector![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]
    }

    #[test]
    fn identity_rotation_maps_surge_to_world_x() {
        let m = KinematicBody::new();
        // body velocity (1, 0, 0) => world velocity (1, 0, 0)
        let f = m.dynamics(&identity_state(), &dvector![1.0, 0.0, 0.0, 0.0]);
        assert_relative_eq!(f[0], 1.0, epsilon = 1e-12);
        assert!(f.rows(1, 6).amax() < 1e-12);
    }

    #[test]
    fn yaw_rate_is_unactuated_but_qdot_formula_holds() {
        // q = identity, omega = (0, 0, 1) gives qdot = (0, 0, 0, 0.5);
        // checked directly on the quaternion rate map since yaw torque is
        // removed from the control matrix.
        let g = quat::omega_map(&Vector4::new(1.0, 0.0, 0.0, 0.0));
        let qdot = 0.5 * g * Vector3::new(0.0, 0.0, 1.0);
        assert_relative_eq!(qdot[3], 0.5, epsilon = 1e-15);
        assert!(qdot.rows(0, 3).amax() < 1e-15);

        // Roll input through the model: omega = (1,0,0) => qdot = (0,.5,0,0).
        let m = KinematicBody::new();
        let f = m.dynamics(&identity_state(), &dvector![0.0, 0.0, 1.0, 0.0]);
        assert_relative_eq!(f[4], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn quaternion_flow_is_norm_preserving() {
        // q . qdot = 0 for random unit q and any omega: the flow moves on
        // the unit sphere.
        let m = KinematicBody::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x = m.random_state(&mut rng);
            let u = DVector::from_fn(4, |_, _| rng.gen_range(-10.0..10.0));
            let f = m.dynamics(&x, &u);
            let qdotq: f64 = (0..4).map(|i| x[3 + i] * f[3 + i]).sum();
            assert!(qdotq.abs() < 1e-12);
        }
    }

    #[test]
    fn norm_drift_under_integration_stays_tiny() {
        let m = KinematicBody::new();
        let u = dvector![2.0, 1.0, 3.0, -2.0];
        // No projection here: measure the raw drift of the quaternion norm
        // over a 1 s horizon at dt = 1e-3.
        let traj = crate::ode::integrate(
            |_, x| m.dynamics(x, &u),
            &identity_state(),
            0.0,
            1.0,
            1e-3,
        )
        .unwrap();
        let xf = traj.final_state();
        let n = (xf[3] * xf[3] + xf[4] * xf[4] + xf[5] * xf[5] + xf[6] * xf[6]).sqrt();
        assert!((n - 1.0).abs() < 1e-7, "norm drift {}", (n - 1.0).abs());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let report = check_derivatives(&KinematicBody::new(), 60, 11);
        assert!(report.all_pass(), "{report}");
    }
}
