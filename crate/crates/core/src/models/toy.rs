//! Small fully-specified systems used by diagnostics and tests: a fully
//! actuated integrator (h = I) and a linear drift system.

use super::ControlAffine;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// x_dot = A x + u with h = identity; fully actuated.
#[derive(Debug, Clone)]
pub struct LinearFullyActuated {
    a: DMatrix<f64>,
    saturation: Vec<(f64, f64)>,
    positions: Vec<usize>,
}

impl LinearFullyActuated {
    pub fn new(a: DMatrix<f64>) -> Self {
        assert!(a.is_square());
        let n = a.nrows();
        Self {
            a,
            saturation: vec![(-1.0, 1.0); n],
            positions: (0..n).collect(),
        }
    }

    pub fn integrator(n: usize) -> Self {
        Self::new(DMatrix::zeros(n, n))
    }
}

impl ControlAffine for LinearFullyActuated {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn control_dim(&self) -> usize {
        self.a.nrows()
    }

    fn drift(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x
    }

    fn control_matrix(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(self.a.nrows(), self.a.nrows())
    }

    fn drift_jacobian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.a.clone()
    }

    fn control_jacobian(&self, _x: &DVector<f64>, _k: usize) -> DMatrix<f64> {
        DMatrix::zeros(self.a.nrows(), self.a.nrows())
    }

    fn hessian_contraction(
        &self,
        _x: &DVector<f64>,
        _u: &DVector<f64>,
        _w: &DVector<f64>,
    ) -> DMatrix<f64> {
        DMatrix::zeros(self.a.nrows(), self.a.nrows())
    }

    fn saturation(&self) -> &[(f64, f64)] {
        &self.saturation
    }

    fn position_rows(&self) -> &[usize] {
        &self.positions
    }

    fn name(&self) -> &'static str {
        "linear_fully_actuated"
    }

    fn random_state(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        DVector::from_fn(self.a.nrows(), |_, _| rng.gen_range(-2.0..2.0))
    }
}
