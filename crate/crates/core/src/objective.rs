//! Tracking objectives: quadratic running/terminal costs around a fixed or
//! moving target, plus smooth obstacle penalties, exposing every derivative
//! the adjoint passes need.
//!
//!   J = int 0.5 |x - x_d(t)|_Q^2 + sum_i pen_i(x)  dt
//!       + 0.5 |x(t_f) - x_d(t_f)|_P1^2
//!
//! The penalty of an obstacle with safe radius `r` is
//! `w exp(-k (d~ - r))` with the smoothed distance `d~ = sqrt(|p - c|^2 +
//! delta^2)` on the model's position coordinates; it is C-infinity in x,
//! equals w at the safe radius, and decays monotonically outside it.

use crate::ode::Trajectory;
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

const DISTANCE_FLOOR: f64 = 1e-6;

/// Target trajectory x_d(t).
#[derive(Clone)]
pub enum Target {
    Fixed(DVector<f64>),
    /// The moving-target benchmark trajectory (positions only, embedded in
    /// the first three position rows).
    TrackingCircuit,
    Custom(Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>),
}

impl std::fmt::Debug for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Target::Fixed(x) => write!(f, "Fixed({x:?})"),
            Target::TrackingCircuit => write!(f, "TrackingCircuit"),
            Target::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Position of the benchmark tracking target at time `t`:
///   x = cos(3t/10) (20 + 10 cos(t/5))
///   y = sin(3t/10) (20 + 10 cos(t/5))
///   z = 10 sin(2t/5)
pub fn tracking_target_position(t: f64) -> [f64; 3] {
    let radius = 20.0 + 10.0 * (t / 5.0).cos();
    [
        (0.3 * t).cos() * radius,
        (0.3 * t).sin() * radius,
        10.0 * (0.4 * t).sin(),
    ]
}

/// How an obstacle center moves; the trajectory is known to the agent over
/// the whole horizon, so penalties evaluate centers at simulated time.
#[derive(Debug, Clone)]
pub enum ObstacleMotion {
    Static,
    /// center(t) = center0 + velocity * t
    Linear { velocity: Vec<f64> },
}

/// A smooth repulsive penalty around a moving or static center.
#[derive(Debug, Clone)]
pub struct ObstaclePenalty {
    /// Center at t = 0, in position coordinates.
    pub center: Vec<f64>,
    /// Safe distance; the penalty equals `weight` here.
    pub radius: f64,
    pub weight: f64,
    /// Decay rate k (1/length).
    pub sharpness: f64,
    pub motion: ObstacleMotion,
}

impl ObstaclePenalty {
    pub fn fixed(center: Vec<f64>, radius: f64, weight: f64, sharpness: f64) -> Self {
        assert!(weight > 0.0 && sharpness > 0.0 && radius > 0.0);
        Self {
            center,
            radius,
            weight,
            sharpness,
            motion: ObstacleMotion::Static,
        }
    }

    pub fn center_at(&self, t: f64) -> Vec<f64> {
        match &self.motion {
            ObstacleMotion::Static => self.center.clone(),
            ObstacleMotion::Linear { velocity } => self
                .center
                .iter()
                .zip(velocity)
                .map(|(c, v)| c + v * t)
                .collect(),
        }
    }

    /// Euclidean distance from the position block of `x` to the center at
    /// time `t` (unsmoothed, for clearance logging).
    pub fn distance(&self, x: &DVector<f64>, position_rows: &[usize], t: f64) -> f64 {
        let c = self.center_at(t);
        position_rows
            .iter()
            .zip(&c)
            .map(|(&i, ci)| (x[i] - ci) * (x[i] - ci))
            .sum::<f64>()
            .sqrt()
    }

    /// Penalty value, gradient, and Hessian in full-state coordinates.
    fn eval(
        &self,
        x: &DVector<f64>,
        position_rows: &[usize],
        t: f64,
        grad: &mut DVector<f64>,
        hess: &mut DMatrix<f64>,
    ) -> f64 {
        let c = self.center_at(t);
        let dp: Vec<f64> = position_rows
            .iter()
            .zip(&c)
            .map(|(&i, ci)| x[i] - ci)
            .collect();
        let d2: f64 = dp.iter().map(|v| v * v).sum();
        let d = (d2 + DISTANCE_FLOOR * DISTANCE_FLOOR).sqrt();
        let k = self.sharpness;
        let val = self.weight * (-k * (d - self.radius)).exp();
        // d(val)/dp = -k val p/d ; Hessian = val [k^2/d^2 p p' - k (I/d - p p'/d^3)]
        let s = -k * val / d;
        for (a, &ia) in position_rows.iter().enumerate() {
            grad[ia] += s * dp[a];
            for (b, &ib) in position_rows.iter().enumerate() {
                let pp = dp[a] * dp[b];
                let mut hval = val * (k * k / (d * d)) * pp + k * val * pp / (d * d * d);
                if a == b {
                    hval -= k * val / d;
                }
                hess[(ia, ib)] += hval;
            }
        }
        val
    }
}

/// Quadratic tracking objective with obstacle penalties.
#[derive(Debug, Clone)]
pub struct Objective {
    /// Running weight Q (N x N, PSD).
    pub q: DMatrix<f64>,
    /// Terminal weight P1 (N x N, PSD).
    pub p1: DMatrix<f64>,
    pub target: Target,
    pub obstacles: Vec<ObstaclePenalty>,
    /// Which state rows carry world position (from the model).
    pub position_rows: Vec<usize>,
}

impl Objective {
    pub fn new(q: DMatrix<f64>, p1: DMatrix<f64>, target: Target, position_rows: Vec<usize>) -> Self {
        assert!(q.is_square() && p1.is_square() && q.nrows() == p1.nrows());
        Self {
            q,
            p1,
            target,
            obstacles: Vec::new(),
            position_rows,
        }
    }

    pub fn with_obstacles(mut self, obstacles: Vec<ObstaclePenalty>) -> Self {
        self.obstacles = obstacles;
        self
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    /// Target state at time `t`.
    pub fn target_state(&self, t: f64) -> DVector<f64> {
        match &self.target {
            Target::Fixed(x) => x.clone(),
            Target::TrackingCircuit => {
                let mut x = DVector::zeros(self.dim());
                let p = tracking_target_position(t);
                for (slot, &row) in self.position_rows.iter().enumerate().take(3) {
                    x[row] = p[slot];
                }
                x
            }
            Target::Custom(f) => f(t),
        }
    }

    /// Running cost l1(x, t) with gradient and Hessian.
    pub fn running_cost(&self, x: &DVector<f64>, t: f64) -> (f64, DVector<f64>, DMatrix<f64>) {
        let e = x - self.target_state(t);
        let qe = &self.q * &e;
        let mut val = 0.5 * e.dot(&qe);
        let mut grad = qe;
        let mut hess = self.q.clone();
        for ob in &self.obstacles {
            val += ob.eval(x, &self.position_rows, t, &mut grad, &mut hess);
        }
        (val, grad, hess)
    }

    /// Running cost value only (hot path for quadrature).
    pub fn running_cost_value(&self, x: &DVector<f64>, t: f64) -> f64 {
        let e = x - self.target_state(t);
        let mut val = 0.5 * e.dot(&(&self.q * &e));
        if !self.obstacles.is_empty() {
            let mut g = DVector::zeros(self.dim());
            let mut h = DMatrix::zeros(self.dim(), self.dim());
            for ob in &self.obstacles {
                val += ob.eval(x, &self.position_rows, t, &mut g, &mut h);
            }
        }
        val
    }

    /// Terminal cost m(x_f) with gradient and Hessian (= P1).
    pub fn terminal_cost(&self, x_f: &DVector<f64>, t_f: f64) -> (f64, DVector<f64>, DMatrix<f64>) {
        let e = x_f - self.target_state(t_f);
        let pe = &self.p1 * &e;
        (0.5 * e.dot(&pe), pe, self.p1.clone())
    }

    /// Total cost of a trajectory: trapezoidal quadrature of the running
    /// cost on the stored grid plus the terminal term.
    pub fn total_cost(&self, traj: &Trajectory) -> f64 {
        let times = traj.times();
        let mut acc = 0.0;
        let mut prev = self.running_cost_value(traj.state(0), times[0]);
        for i in 1..times.len() {
            let cur = self.running_cost_value(traj.state(i), times[i]);
            acc += 0.5 * (prev + cur) * (times[i] - times[i - 1]);
            prev = cur;
        }
        acc + self.terminal_cost(traj.final_state(), traj.t_end()).0
    }

    /// Smallest distance-to-safe-radius margin over all obstacles, at time
    /// `t`; positive means collision-free. `None` when there are no
    /// obstacles.
    pub fn clearance(&self, x: &DVector<f64>, t: f64) -> Option<f64> {
        self.obstacles
            .iter()
            .map(|ob| ob.distance(x, &self.position_rows, t) - ob.radius)
            .min_by(|a, b| a.partial_cmp(b).unwrap())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::integrate;
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(v))
    }

    fn fd_grad(obj: &Objective, x: &DVector<f64>, t: f64) -> DVector<f64> {
        let n = x.len();
        DVector::from_fn(n, |i, _| {
            let h = 1e-5 * x[i].abs().max(1.0);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            (obj.running_cost_value(&xp, t) - obj.running_cost_value(&xm, t)) / (2.0 * h)
        })
    }

    #[test]
    fn at_target_cost_and_gradient_vanish() {
        let obj = Objective::new(
            diag(&[10.0, 10.0, 1000.0]),
            diag(&[1.0, 1.0, 1.0]),
            Target::Fixed(dvector![1.0, 2.0, 0.5]),
            vec![0, 1],
        );
        let (v, g, h) = obj.running_cost(&dvector![1.0, 2.0, 0.5], 0.0);
        assert_eq!(v, 0.0);
        assert!(g.amax() < 1e-15);
        assert_eq!(h, obj.q);
    }

    #[test]
    fn quadratic_value_matches_arithmetic() {
        // Q = diag(10,10,1000), e = (1,0,0) => l1 = 5.
        let obj = Objective::new(
            diag(&[10.0, 10.0, 1000.0]),
            DMatrix::zeros(3, 3),
            Target::Fixed(dvector![0.0, 0.0, 0.0]),
            vec![0, 1],
        );
        let (v, _, _) = obj.running_cost(&dvector![1.0, 0.0, 0.0], 0.0);
        assert_relative_eq!(v, 5.0, epsilon = 1e-14);
    }

    #[test]
    fn terminal_hessian_is_p1() {
        let p1 = diag(&[100.0, 200.0, 100.0, 0.0, 0.0, 0.0, 0.0]);
        let obj = Objective::new(
            DMatrix::zeros(7, 7),
            p1.clone(),
            Target::Fixed(DVector::zeros(7)),
            vec![0, 1, 2],
        );
        let (_, _, h) = obj.terminal_cost(&DVector::from_element(7, 0.3), 1.0);
        assert_eq!(h, p1);
        // Gradient vs finite differences.
        let x = dvector![0.4, -0.2, 0.9, 0.1, 0.0, 0.3, -0.4];
        let (_, g, _) = obj.terminal_cost(&x, 1.0);
        for i in 0..7 {
            let h = 1e-6;
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (obj.terminal_cost(&xp, 1.0).0 - obj.terminal_cost(&xm, 1.0).0) / (2.0 * h);
            assert_relative_eq!(g[i], fd, epsilon = 1e-6);
        }
    }

    #[test]
    fn penalty_value_at_safe_radius_is_weight_and_decays() {
        let ob = ObstaclePenalty::fixed(vec![0.0, 0.0], 2.0, 7.0, 0.8);
        let obj = Objective::new(
            DMatrix::zeros(3, 3),
            DMatrix::zeros(3, 3),
            Target::Fixed(DVector::zeros(3)),
            vec![0, 1],
        )
        .with_obstacles(vec![ob]);
        let at = |d: f64| obj.running_cost_value(&dvector![d, 0.0, 0.0], 0.0);
        assert_relative_eq!(at(2.0), 7.0, max_relative = 1e-9);
        assert!(at(2.0) > at(2.5) && at(2.5) > at(3.0) && at(3.0) > at(4.0));
        // Strictly positive and growing inside the radius.
        assert!(at(1.0) > at(2.0));
    }

    #[test]
    fn gradients_and_hessians_match_fd_with_obstacles() {
        let obj = Objective::new(
            diag(&[10.0, 10.0, 1000.0]),
            DMatrix::zeros(3, 3),
            Target::Fixed(dvector![5.0, 5.0, 0.0]),
            vec![0, 1],
        )
        .with_obstacles(vec![
            ObstaclePenalty::fixed(vec![2.0, 1.0], 1.0, 50.0, 1.2),
            ObstaclePenalty::fixed(vec![-1.0, 3.0], 0.5, 20.0, 0.7),
        ]);
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let x = dvector![
                rng.gen_range(-6.0..6.0),
                rng.gen_range(-6.0..6.0),
                rng.gen_range(-3.0..3.0)
            ];
            let (_, g, h) = obj.running_cost(&x, 0.0);
            let gfd = fd_grad(&obj, &x, 0.0);
            let scale = g.amax().max(1.0);
            assert!((&g - &gfd).amax() / scale < 1e-5, "grad mismatch at {x:?}");
            // Hessian vs FD of the analytic gradient.
            for j in 0..3 {
                let hstep = 1e-5 * x[j].abs().max(1.0);
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += hstep;
                xm[j] -= hstep;
                let col = (obj.running_cost(&xp, 0.0).1 - obj.running_cost(&xm, 0.0).1)
                    / (2.0 * hstep);
                let hscale = h.amax().max(1.0);
                for i in 0..3 {
                    assert!(
                        (h[(i, j)] - col[i]).abs() / hscale < 1e-5,
                        "hessian mismatch"
                    );
                }
            }
        }
    }

    #[test]
    fn no_singularity_at_obstacle_center() {
        let obj = Objective::new(
            DMatrix::zeros(3, 3),
            DMatrix::zeros(3, 3),
            Target::Fixed(DVector::zeros(3)),
            vec![0, 1],
        )
        .with_obstacles(vec![ObstaclePenalty::fixed(vec![1.0, 1.0], 1.0, 5.0, 2.0)]);
        let (v, g, h) = obj.running_cost(&dvector![1.0, 1.0, 0.0], 0.0);
        assert!(v.is_finite() && g.iter().all(|a| a.is_finite()));
        assert!(h.iter().all(|a| a.is_finite()));
    }

    #[test]
    fn total_cost_of_constant_error_matches_closed_form() {
        // Constant error e over horizon T: J = T * 0.5 e'Qe (+ terminal).
        let obj = Objective::new(
            diag(&[2.0, 4.0]),
            DMatrix::zeros(2, 2),
            Target::Fixed(dvector![0.0, 0.0]),
            vec![0, 1],
        );
        let traj = integrate(
            |_, x: &DVector<f64>| DVector::zeros(x.len()),
            &dvector![3.0, -1.0],
            0.0,
            2.0,
            1e-3,
        )
        .unwrap();
        let expected = 2.0 * 0.5 * (2.0 * 9.0 + 4.0 * 1.0);
        assert_relative_eq!(obj.total_cost(&traj), expected, epsilon = 1e-8);

        // Stationary at the target costs nothing.
        let at_target = integrate(
            |_, x: &DVector<f64>| DVector::zeros(x.len()),
            &dvector![0.0, 0.0],
            0.0,
            2.0,
            1e-2,
        )
        .unwrap();
        assert_eq!(obj.total_cost(&at_target), 0.0);
    }

    #[test]
    fn far_obstacle_changes_cost_negligibly() {
        // An obstacle more than 10/k beyond its safe radius from the whole
        // path contributes below the exponential tail bound.
        let base = Objective::new(
            diag(&[1.0, 1.0]),
            DMatrix::zeros(2, 2),
            Target::Fixed(dvector![0.0, 0.0]),
            vec![0, 1],
        );
        let with = base.clone().with_obstacles(vec![ObstaclePenalty::fixed(
            vec![100.0, 0.0],
            1.0,
            1.0,
            0.5,
        )]);
        let traj = integrate(
            |_, x: &DVector<f64>| DVector::zeros(x.len()),
            &dvector![1.0, 1.0],
            0.0,
            1.0,
            1e-2,
        )
        .unwrap();
        assert!((with.total_cost(&traj) - base.total_cost(&traj)).abs() < 1e-6);
    }

    #[test]
    fn penalty_second_derivative_is_continuous_across_safe_radius() {
        // C2 check: second finite differences straddling d = r_safe
        // converge to each other under refinement.
        let obj = Objective::new(
            DMatrix::zeros(2, 2),
            DMatrix::zeros(2, 2),
            Target::Fixed(DVector::zeros(2)),
            vec![0, 1],
        )
        .with_obstacles(vec![ObstaclePenalty::fixed(vec![0.0, 0.0], 1.0, 3.0, 2.0)]);
        let f = |d: f64| obj.running_cost_value(&dvector![d, 0.0], 0.0);
        let second = |d: f64, h: f64| (f(d + h) - 2.0 * f(d) + f(d - h)) / (h * h);
        let mut prev_gap = f64::INFINITY;
        for &h in &[1e-2, 5e-3, 2.5e-3] {
            let gap = (second(1.0 + h, h) - second(1.0 - h, h)).abs();
            assert!(gap < prev_gap.max(1e-4) + 1e-4);
            prev_gap = gap;
        }
        assert!(prev_gap < 1e-4 * f(1.0).max(1.0));
    }

    #[test]
    fn tracking_target_formula() {
        let p0 = tracking_target_position(0.0);
        assert_relative_eq!(p0[0], 30.0, epsilon = 1e-12);
        assert_relative_eq!(p0[1], 0.0, epsilon = 1e-12);
        assert_relative_eq!(p0[2], 0.0, epsilon = 1e-12);
        // At t = 5 pi the xy radius collapses to 20 + 10 cos(pi) = 10.
        let p = tracking_target_position(5.0 * std::f64::consts::PI);
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        assert_relative_eq!(r, 10.0, epsilon = 1e-9);
        // Amplitude bounds hold everywhere.
        for i in 0..1000 {
            let p = tracking_target_position(i as f64 * 0.1);
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((10.0 - 1e-9..=30.0 + 1e-9).contains(&r));
            assert!(p[2].abs() <= 10.0 + 1e-9);
        }
    }
}
