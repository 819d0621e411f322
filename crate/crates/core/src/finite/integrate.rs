use nalgebra::DVector;

use super::{order_parameter, FiniteSystem};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct IntegrateOptions {
    pub t_end: f64,
    /// Upper bound on the step; the step count is rounded up so that the
    /// final step lands on `t_end`.
    pub dt: f64,
    /// Phases are integrated in a frame rotating at this frequency.
    pub frame: f64,
    /// Record `r(t)` every this many steps (0 disables the series).
    pub record_every: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { t_end: 200.0, dt: 1e-2, frame: 0.0, record_every: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub phases: Vec<f64>,
    pub times: Vec<f64>,
    pub r: Vec<f64>,
    /// `max_j |θ̇_j − mean(θ̇)|` at the final time.
    pub frequency_spread: f64,
}

/// Classical RK4 for the phase equations.
pub fn integrate(sys: &FiniteSystem, theta0: &[f64], opts: &IntegrateOptions) -> Result<Trajectory> {
    let n = sys.n();
    if theta0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: theta0.len() });
    }
    if !(opts.dt > 0.0) || !(opts.t_end >= 0.0) {
        return Err(Error::InvalidArgument("need dt > 0 and t_end >= 0".into()));
    }
    let steps = (opts.t_end / opts.dt).ceil().max(1.0) as usize;
    let h = opts.t_end / steps as f64;
    let f = |th: &DVector<f64>| sys.rhs(th, opts.frame);
    let mut th = DVector::from_column_slice(theta0);
    let (mut times, mut r) = (Vec::new(), Vec::new());
    let mut record = |step: usize, th: &DVector<f64>| {
        if opts.record_every > 0 && step % opts.record_every == 0 {
            times.push(step as f64 * h);
            r.push(order_parameter(th.as_slice()));
        }
    };
    record(0, &th);
    for step in 1..=steps {
        let k1 = f(&th);
        let k2 = f(&(&th + &k1 * (0.5 * h)));
        let k3 = f(&(&th + &k2 * (0.5 * h)));
        let k4 = f(&(&th + &k3 * h));
        th += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        record(step, &th);
        if !th.iter().all(|v| v.is_finite()) {
            return Err(Error::Diverged { iterations: step, residual: f64::NAN });
        }
    }
    let vel = f(&th);
    let mean = vel.mean();
    let frequency_spread = vel.iter().fold(0.0f64, |m, v| m.max((v - mean).abs()));
    Ok(Trajectory { phases: th.as_slice().to_vec(), times, r, frequency_spread })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn uncoupled_rotation_is_exact() {
        let sys = FiniteSystem::new(vec![0.25, -0.5], DMatrix::zeros(2, 2), 0.0).unwrap();
        let tr = integrate(&sys, &[0.0, 1.0], &IntegrateOptions { t_end: 4.0, dt: 0.3, frame: 0.0, record_every: 1 }).unwrap();
        assert!((tr.phases[0] - 1.0).abs() < 1e-13);
        assert!((tr.phases[1] + 1.0).abs() < 1e-13);
        assert_eq!(tr.times.len(), 15);
        assert!((tr.times.last().unwrap() - 4.0).abs() < 1e-13);
    }

    #[test]
    fn pair_relaxes_to_lock() {
        let mut a = DMatrix::from_element(2, 2, 1.0);
        a.fill_diagonal(0.0);
        let sys = FiniteSystem::new(vec![-0.2, 0.2], a, 1.0).unwrap();
        let tr = integrate(&sys, &[0.0, 0.0], &IntegrateOptions { t_end: 60.0, dt: 0.05, ..Default::default() }).unwrap();
        let diff = tr.phases[1] - tr.phases[0];
        assert!((diff - 0.4f64.asin()).abs() < 1e-9);
        assert!(tr.frequency_spread < 1e-9);
    }

    #[test]
    fn rotating_frame_shifts_phases() {
        let sys = FiniteSystem::new(vec![0.5], DMatrix::zeros(1, 1), 0.0).unwrap();
        let opts = IntegrateOptions { t_end: 2.0, dt: 0.1, frame: 0.5, record_every: 0 };
        assert!((integrate(&sys, &[0.3], &opts).unwrap().phases[0] - 0.3).abs() < 1e-14);
    }
}
