//! Fixed-step RK4 integration with dense trajectory storage.
//!
//! Every step is stored together with its time derivative, so trajectories
//! interpolate with piecewise-cubic Hermite polynomials that are exact at
//! the nodes and O(dt^4) between them. Backward ODEs (the adjoint passes)
//! are integrated as forward ODEs in the reversed time variable
//! `s = t_f - t`; there is no second integrator code path.

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// A densely stored time-indexed state curve.
///
/// Nodes are uniformly spaced at `dt` except possibly the final interval,
/// which is shortened so the curve lands exactly on the requested end time.
/// Values are immutable after construction and safe to share across threads.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<DVector<f64>>,
    derivs: Vec<DVector<f64>>,
}

impl Trajectory {
    /// Build from raw nodes. `derivs` must hold the state derivative at
    /// each node; lengths must agree and times must strictly increase.
    pub fn from_nodes(
        times: Vec<f64>,
        states: Vec<DVector<f64>>,
        derivs: Vec<DVector<f64>>,
    ) -> Result<Self> {
        if times.is_empty() || times.len() != states.len() || times.len() != derivs.len() {
            return Err(Error::InvalidArgument(
                "trajectory nodes: empty or mismatched lengths".into(),
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "trajectory times must strictly increase".into(),
            ));
        }
        let dim = states[0].len();
        if states.iter().any(|s| s.len() != dim) || derivs.iter().any(|d| d.len() != dim) {
            return Err(Error::DimensionMismatch(
                "trajectory samples must share one state dimension".into(),
            ));
        }
        Ok(Self { times, states, derivs })
    }

    /// Build from samples alone, estimating node derivatives with
    /// fourth-order finite differences so Hermite interpolation keeps its
    /// O(dt^4) accuracy. Requires a uniform grid and at least five nodes.
    pub fn from_samples(times: Vec<f64>, states: Vec<DVector<f64>>) -> Result<Self> {
        if times.len() < 5 {
            return Err(Error::InvalidArgument(
                "derivative estimation needs at least five nodes".into(),
            ));
        }
        let dt = times[1] - times[0];
        if times
            .windows(2)
            .any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1.0))
        {
            return Err(Error::InvalidArgument(
                "derivative estimation requires a uniform grid".into(),
            ));
        }
        let n = times.len();
        let mut derivs = Vec::with_capacity(n);
        for i in 0..n {
            // 5-point stencils, one-sided at the ends.
            let d = if i >= 2 && i + 2 < n {
                (&states[i - 2] - &states[i + 2] + 8.0 * (&states[i + 1] - &states[i - 1]))
                    / (12.0 * dt)
            } else if i + 4 < n {
                (-25.0 * &states[i] + 48.0 * &states[i + 1] - 36.0 * &states[i + 2]
                    + 16.0 * &states[i + 3]
                    - 3.0 * &states[i + 4])
                    / (12.0 * dt)
            } else {
                (25.0 * &states[i] - 48.0 * &states[i - 1] + 36.0 * &states[i - 2]
                    - 16.0 * &states[i - 3]
                    + 3.0 * &states[i - 4])
                    / (12.0 * dt)
            };
            derivs.push(d);
        }
        Self::from_nodes(times, states, derivs)
    }

    pub fn t0(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[DVector<f64>] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &DVector<f64> {
        &self.states[i]
    }

    pub fn deriv(&self, i: usize) -> &DVector<f64> {
        &self.derivs[i]
    }

    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().unwrap()
    }

    /// Index of the interval containing `t`, i.e. the largest `i` with
    /// `times[i] <= t` (capped at the second-to-last node).
    fn interval(&self, t: f64) -> usize {
        let i = self.times.partition_point(|&ti| ti <= t);
        i.saturating_sub(1).min(self.times.len() - 2)
    }

    /// Interpolate the state at `t` with a cubic Hermite polynomial.
    ///
    /// Exact at stored nodes; queries outside the stored span (beyond a
    /// 1e-9 slack for roundoff at the endpoints) are range errors, never
    /// extrapolations.
    pub fn sample(&self, t: f64) -> Result<DVector<f64>> {
        let (t0, t1) = (self.t0(), self.t_end());
        let slack = 1e-9 * (t1 - t0).max(1.0);
        if t < t0 - slack || t > t1 + slack {
            return Err(Error::OutOfRange { t, t0, t1 });
        }
        let t = t.clamp(t0, t1);
        if self.times.len() == 1 {
            return Ok(self.states[0].clone());
        }
        let i = self.interval(t);
        let (ta, tb) = (self.times[i], self.times[i + 1]);
        let h = tb - ta;
        let s = (t - ta) / h;
        if s == 0.0 {
            return Ok(self.states[i].clone());
        }
        if s == 1.0 {
            return Ok(self.states[i + 1].clone());
        }
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Ok(h00 * &self.states[i]
            + (h10 * h) * &self.derivs[i]
            + h01 * &self.states[i + 1]
            + (h11 * h) * &self.derivs[i + 1])
    }
}

/// A time-indexed curve of N x N matrices (the second-order costate).
/// Samples are symmetrized on store so interpolation preserves symmetry.
#[derive(Debug, Clone)]
pub struct MatrixTrajectory {
    times: Vec<f64>,
    samples: Vec<DMatrix<f64>>,
    derivs: Vec<DMatrix<f64>>,
}

impl MatrixTrajectory {
    pub fn from_nodes(
        times: Vec<f64>,
        samples: Vec<DMatrix<f64>>,
        derivs: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        if times.is_empty() || times.len() != samples.len() || times.len() != derivs.len() {
            return Err(Error::InvalidArgument(
                "matrix trajectory nodes: empty or mismatched lengths".into(),
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "matrix trajectory times must strictly increase".into(),
            ));
        }
        let samples: Vec<_> = samples.into_iter().map(symmetrize).collect();
        let derivs: Vec<_> = derivs.into_iter().map(symmetrize).collect();
        Ok(Self { times, samples, derivs })
    }

    pub fn t0(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn sample_at(&self, i: usize) -> &DMatrix<f64> {
        &self.samples[i]
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn sample(&self, t: f64) -> Result<DMatrix<f64>> {
        let (t0, t1) = (self.t0(), self.t_end());
        let slack = 1e-9 * (t1 - t0).max(1.0);
        if t < t0 - slack || t > t1 + slack {
            return Err(Error::OutOfRange { t, t0, t1 });
        }
        let t = t.clamp(t0, t1);
        if self.times.len() == 1 {
            return Ok(self.samples[0].clone());
        }
        let i = {
            let i = self.times.partition_point(|&ti| ti <= t);
            i.saturating_sub(1).min(self.times.len() - 2)
        };
        let (ta, tb) = (self.times[i], self.times[i + 1]);
        let h = tb - ta;
        let s = (t - ta) / h;
        if s == 0.0 {
            return Ok(self.samples[i].clone());
        }
        if s == 1.0 {
            return Ok(self.samples[i + 1].clone());
        }
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Ok(h00 * &self.samples[i]
            + (h10 * h) * &self.derivs[i]
            + h01 * &self.samples[i + 1]
            + (h11 * h) * &self.derivs[i + 1])
    }
}

pub(crate) fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let mt = m.transpose();
    (m + mt) * 0.5
}

/// One classical RK4 step of width `h`.
pub fn rk4_step<F>(field: &F, t: f64, x: &DVector<f64>, h: f64) -> DVector<f64>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    let k1 = field(t, x);
    let k2 = field(t + 0.5 * h, &(x + 0.5 * h * &k1));
    let k3 = field(t + 0.5 * h, &(x + 0.5 * h * &k2));
    let k4 = field(t + h, &(x + h * &k3));
    x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Integrate `dx/dt = field(t, x)` from `t0` to `t1` with fixed-step RK4.
///
/// The final step is shortened to land exactly on `t1`. A non-finite state
/// aborts the integration with an error naming the offending time.
pub fn integrate<F>(field: F, x0: &DVector<f64>, t0: f64, t1: f64, dt: f64) -> Result<Trajectory>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    integrate_projected(field, |_| {}, x0, t0, t1, dt)
}

/// [`integrate`] with a projection applied to the state after every step
/// (quaternion renormalization for the rigid-body models).
pub fn integrate_projected<F, P>(
    field: F,
    project: P,
    x0: &DVector<f64>,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<Trajectory>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
    P: Fn(&mut DVector<f64>),
{
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument("integrate: dt must be > 0".into()));
    }
    if !(t1 > t0) {
        return Err(Error::InvalidArgument(
            "integrate: t1 must exceed t0 (reverse time via s = t_f - t)".into(),
        ));
    }
    let span = t1 - t0;
    // Number of full steps; the remainder becomes a shortened final step
    // unless it is roundoff-sized.
    let n_full = (span / dt + 1e-9).floor() as usize;
    let rem = span - n_full as f64 * dt;
    let has_tail = rem > 1e-9 * dt;

    let n_nodes = n_full + 1 + usize::from(has_tail);
    let mut times = Vec::with_capacity(n_nodes);
    let mut states = Vec::with_capacity(n_nodes);
    let mut derivs = Vec::with_capacity(n_nodes);

    let mut x = x0.clone();
    let mut t = t0;
    times.push(t);
    derivs.push(field(t, &x));
    states.push(x.clone());

    for step in 0..n_full + usize::from(has_tail) {
        let h = if step < n_full { dt } else { rem };
        let t_next = if step + 1 == n_full && !has_tail {
            t1
        } else if step == n_full {
            t1
        } else {
            t0 + (step + 1) as f64 * dt
        };
        x = rk4_step(&field, t, &x, h);
        project(&mut x);
        t = t_next;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::IntegrationDiverged { t });
        }
        times.push(t);
        derivs.push(field(t, &x));
        states.push(x.clone());
    }
    Trajectory::from_nodes(times, states, derivs)
}
