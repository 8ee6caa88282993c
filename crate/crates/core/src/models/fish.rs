//! Underactuated dynamic 3D fish: s = [b, q, v, omega] with world position,
//! unit quaternion, and body-frame linear/angular velocities.
//!
//!   b_dot     = R_q v + drift
//!   q_dot     = 0.5 G(q) omega
//!   M v_dot   = M v x omega + F
//!   J omega_dot = J omega x omega + T
//!
//! with F = (F1, 0, F3), T = (T1, T2, 0) and F3 >= 0. Internal units are
//! CGS (cm, g, s); the control channels are numerically in mN and uN*m as
//! the saturation bounds are quoted, so the constant control matrix carries
//! the conversions 1 mN = 100 dyn and 1 uN*m = 10 dyn*cm.

use super::quat;
use super::ControlAffine;
use nalgebra::{DMatrix, DVector, Matrix3, Vector3, Vector4};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const MN_TO_DYN: f64 = 100.0;
const UNM_TO_DYN_CM: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct FishParams {
    /// Diagonal effective mass (g).
    pub mass: Vector3<f64>,
    /// Diagonal effective moment of inertia (g cm^2).
    pub inertia: Vector3<f64>,
    /// World-frame fluid flow velocity (cm/s).
    pub drift: Vector3<f64>,
}

impl FishParams {
    /// The experimentally determined fish parameters of the benchmarks.
    pub fn paper() -> Self {
        Self {
            mass: Vector3::new(6.04, 17.31, 8.39),
            inertia: Vector3::new(1.57, 27.78, 54.11),
            drift: Vector3::zeros(),
        }
    }

    pub fn with_drift(mut self, drift: Vector3<f64>) -> Self {
        self.drift = drift;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Fish {
    mass: Vector3<f64>,
    inertia: Vector3<f64>,
    drift_vel: Vector3<f64>,
    saturation: [(f64, f64); 4],
    h: DMatrix<f64>,
}

impl Fish {
    pub fn new(p: FishParams) -> Self {
        assert!(
            p.mass.iter().all(|&m| m > 0.0) && p.inertia.iter().all(|&j| j > 0.0),
            "fish mass/inertia diagonals must be positive"
        );
        let mut h = DMatrix::zeros(13, 4);
        h[(7, 0)] = MN_TO_DYN / p.mass[0]; // F1 -> surge acceleration
        h[(9, 1)] = MN_TO_DYN / p.mass[2]; // F3 -> heave acceleration
        h[(10, 2)] = UNM_TO_DYN_CM / p.inertia[0]; // T1 -> roll
        h[(11, 3)] = UNM_TO_DYN_CM / p.inertia[1]; // T2 -> pitch
        Self {
            mass: p.mass,
            inertia: p.inertia,
            drift_vel: p.drift,
            saturation: [(-1.0, 1.0), (0.0, 1.0), (-0.1, 0.1), (-0.1, 0.1)],
            h,
        }
    }

    fn split(x: &DVector<f64>) -> (Vector4<f64>, Vector3<f64>, Vector3<f64>) {
        (
            Vector4::new(x[3], x[4], x[5], x[6]),
            Vector3::new(x[7], x[8], x[9]),
            Vector3::new(x[10], x[11], x[12]),
        )
    }

    pub fn drift_velocity(&self) -> Vector3<f64> {
        self.drift_vel
    }
}

impl ControlAffine for Fish {
    fn state_dim(&self) -> usize {
        13
    }

    fn control_dim(&self) -> usize {
        4
    }

    fn drift(&self, x: &DVector<f64>) -> DVector<f64> {
        let (q, v, w) = Self::split(x);
        let m = &self.mass;
        let j = &self.inertia;
        let bdot = quat::rotation(&q) * v + self.drift_vel;
        let qdot = 0.5 * quat::omega_map(&q) * w;
        let mv = Vector3::new(m[0] * v[0], m[1] * v[1], m[2] * v[2]);
        let jw = Vector3::new(j[0] * w[0], j[1] * w[1], j[2] * w[2]);
        let cv = mv.cross(&w);
        let cw = jw.cross(&w);
        let vdot = Vector3::new(cv[0] / m[0], cv[1] / m[1], cv[2] / m[2]);
        let wdot = Vector3::new(cw[0] / j[0], cw[1] / j[1], cw[2] / j[2]);
        let mut out = DVector::zeros(13);
        for i in 0..3 {
            out[i] = bdot[i];
            out[7 + i] = vdot[i];
            out[10 + i] = wdot[i];
        }
        for i in 0..4 {
            out[3 + i] = qdot[i];
        }
        out
    }

    fn control_matrix(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.h.clone()
    }

    fn drift_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let (q, v, w) = Self::split(x);
        let m_diag = Matrix3::from_diagonal(&self.mass);
        let m_inv = Matrix3::from_diagonal(&self.mass.map(|a| 1.0 / a));
        let j_diag = Matrix3::from_diagonal(&self.inertia);
        let j_inv = Matrix3::from_diagonal(&self.inertia.map(|a| 1.0 / a));

        let mut jac = DMatrix::zeros(13, 13);
        // b rows
        let db_dq = quat::d_rot_v_dq(&q, &v);
        let rot = quat::rotation(&q);
        for i in 0..3 {
            for a in 0..4 {
                jac[(i, 3 + a)] = db_dq[(i, a)];
            }
            for a in 0..3 {
                jac[(i, 7 + a)] = rot[(i, a)];
            }
        }
        // q rows
        let dq_dq = quat::d_qdot_dq(&w);
        let g_half = 0.5 * quat::omega_map(&q);
        for i in 0..4 {
            for a in 0..4 {
                jac[(3 + i, 3 + a)] = dq_dq[(i, a)];
            }
            for a in 0..3 {
                jac[(3 + i, 10 + a)] = g_half[(i, a)];
            }
        }
        // v rows: M^-1 d(Mv x w)
        let mv = m_diag * v;
        let dv_dv = -m_inv * quat::skew(&w) * m_diag;
        let dv_dw = m_inv * quat::skew(&mv);
        // w rows: J^-1 d(Jw x w)
        let jw = j_diag * w;
        let dw_dw = j_inv * (-quat::skew(&w) * j_diag + quat::skew(&jw));
        for i in 0..3 {
            for a in 0..3 {
                jac[(7 + i, 7 + a)] = dv_dv[(i, a)];
                jac[(7 + i, 10 + a)] = dv_dw[(i, a)];
                jac[(10 + i, 10 + a)] = dw_dw[(i, a)];
            }
        }
        jac
    }

    fn control_jacobian(&self, _x: &DVector<f64>, _k: usize) -> DMatrix<f64> {
        // h is constant.
        DMatrix::zeros(13, 13)
    }

    fn hessian_contraction(
        &self,
        x: &DVector<f64>,
        _u: &DVector<f64>,
        w: &DVector<f64>,
    ) -> DMatrix<f64> {
        let (q, v, _) = Self::split(x);
        let wb = Vector3::new(w[0], w[1], w[2]);
        let wq = Vector4::new(w[3], w[4], w[5], w[6]);
        let wv = Vector3::new(w[7], w[8], w[9]);
        let ww = Vector3::new(w[10], w[11], w[12]);

        let mut hess = DMatrix::zeros(13, 13);

        // qq block: sum_i wb_i d2(R_q v)_i / dq2.
        let qq = quat::d2_w_rot_v(&wb, &v);
        for a in 0..4 {
            for b in 0..4 {
                hess[(3 + a, 3 + b)] = qq[(a, b)];
            }
        }
        // qv cross block: d(R^T wb)/dq transposed.
        let qv = quat::d_rot_t_w_dq(&q, &wb).transpose();
        for a in 0..4 {
            for b in 0..3 {
                hess[(3 + a, 7 + b)] = qv[(a, b)];
                hess[(7 + b, 3 + a)] = qv[(a, b)];
            }
        }
        // q-omega cross block from the quaternion rate rows.
        let qw = quat::d2_w_qdot(&wq);
        for a in 0..4 {
            for b in 0..3 {
                hess[(3 + a, 10 + b)] = qw[(a, b)];
                hess[(10 + b, 3 + a)] = qw[(a, b)];
            }
        }
        // v-omega cross block: c = M^-1 wv, block = -M [c]x.
        let c = Vector3::new(
            wv[0] / self.mass[0],
            wv[1] / self.mass[1],
            wv[2] / self.mass[2],
        );
        let m_diag = Matrix3::from_diagonal(&self.mass);
        let vw = -m_diag * quat::skew(&c);
        for a in 0..3 {
            for b in 0..3 {
                hess[(7 + a, 10 + b)] = vw[(a, b)];
                hess[(10 + b, 7 + a)] = vw[(a, b)];
            }
        }
        // omega-omega block: c = J^-1 ww, block = -J [c]x + [c]x J.
        let c = Vector3::new(
            ww[0] / self.inertia[0],
            ww[1] / self.inertia[1],
            ww[2] / self.inertia[2],
        );
        let j_diag = Matrix3::from_diagonal(&self.inertia);
        let wwb = -j_diag * quat::skew(&c) + quat::skew(&c) * j_diag;
        for a in 0..3 {
            for b in 0..3 {
                hess[(10 + a, 10 + b)] += wwb[(a, b)];
            }
        }
        hess
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
        "fish"
    }

    fn random_state(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let mut x = DVector::zeros(13);
        for i in 0..3 {
            x[i] = rng.gen_range(-100.0..100.0);
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
        for i in 0..3 {
            x[7 + i] = rng.gen_range(-5.0..5.0);
            x[10 + i] = rng.gen_range(-1.0..1.0);
        }
        x
    }
}
