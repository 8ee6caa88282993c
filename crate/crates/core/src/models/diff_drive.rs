//! Kinematic differential drive: s = [x, y, theta], two wheel angular
//! velocities as inputs, no drift.
//!
//!   f = r * [cos th, cos th; sin th, sin th; 1/L, -1/L] * [u_R, u_L]
//!
//! Lengths are unit-agnostic; the benchmark presets use millimeters
//! (r = 36, L = 258) so positions, targets, and wheel-speed saturations
//! all stay in the scenario's native units.

use super::ControlAffine;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub struct DiffDriveParams {
    /// Wheel radius.
    pub r: f64,
    /// Wheel separation.
    pub l: f64,
}

#[derive(Debug, Clone)]
pub struct DiffDrive {
    r: f64,
    l: f64,
    saturation: [(f64, f64); 2],
}

/// Wheel angular-velocity bound printed with the benchmark parameters.
pub const WHEEL_BOUND: f64 = 150.0 / 36.0;

impl DiffDrive {
    pub fn new(p: DiffDriveParams) -> Self {
        assert!(p.r > 0.0 && p.l > 0.0, "diff drive params must be positive");
        Self {
            r: p.r,
            l: p.l,
            saturation: [(-WHEEL_BOUND, WHEEL_BOUND); 2],
        }
    }

    pub fn with_saturation(mut self, bound: f64) -> Self {
        self.saturation = [(-bound, bound); 2];
        self
    }

    pub fn wheel_radius(&self) -> f64 {
        self.r
    }

    pub fn wheel_base(&self) -> f64 {
        self.l
    }
}

impl ControlAffine for DiffDrive {
    fn state_dim(&self) -> usize {
        3
    }

    fn control_dim(&self) -> usize {
        2
    }

    fn drift(&self, _x: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(3)
    }

    fn control_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let th = x[2];
        let (s, c) = th.sin_cos();
        DMatrix::from_row_slice(
            3,
            2,
            &[
                self.r * c,
                self.r * c,
                self.r * s,
                self.r * s,
                self.r / self.l,
                -self.r / self.l,
            ],
        )
    }

    fn drift_jacobian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::zeros(3, 3)
    }

    fn control_jacobian(&self, x: &DVector<f64>, _k: usize) -> DMatrix<f64> {
        // Both columns share the same theta-dependence.
        let th = x[2];
        let (s, c) = th.sin_cos();
        let mut j = DMatrix::zeros(3, 3);
        j[(0, 2)] = -self.r * s;
        j[(1, 2)] = self.r * c;
        j
    }

    fn hessian_contraction(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
        w: &DVector<f64>,
    ) -> DMatrix<f64> {
        // f1 = r cos th (u1+u2), f2 = r sin th (u1+u2); only d2/dth2 is
        // nonzero.
        let th = x[2];
        let (s, c) = th.sin_cos();
        let usum = u[0] + u[1];
        let mut h = DMatrix::zeros(3, 3);
        h[(2, 2)] = self.r * usum * (-c * w[0] - s * w[1]);
        h
    }

    fn saturation(&self) -> &[(f64, f64)] {
        &self.saturation
    }

    fn position_rows(&self) -> &[usize] {
        &[0, 1]
    }

    fn name(&self) -> &'static str {
        "diff_drive"
    }

    fn random_state(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let span = 40.0 * self.l;
        DVector::from_vec(vec![
            rng.gen_range(-span..span),
            rng.gen_range(-span..span),
            rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
        ])
    }
}
