use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::spectrum::{SpectrumSummary, Stability};
use super::{order_parameter, FiniteSystem};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    /// Sup-norm residual target.
    pub tol: f64,
    pub max_iter: usize,
    /// Pivot-ratio condition estimate above which the solve is abandoned.
    pub cond_limit: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 50, cond_limit: 1e14 }
    }
}

/// A phase-locked state in the gauge `Σ u_j = 0`.
#[derive(Debug, Clone, Serialize)]
pub struct SyncState {
    pub u: Vec<f64>,
    pub omega_star: f64,
    #[serde(rename = "K")]
    pub coupling: f64,
    pub residual_norm: f64,
    pub r: f64,
    pub iterations: usize,
    pub leading_eigs: Vec<f64>,
    pub smallest_eig: f64,
    pub unstable_count: usize,
    pub stability: Stability,
    pub stable: bool,
}

/// Summary written alongside the per-oscillator state CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateHeader {
    #[serde(rename = "K")]
    pub coupling: f64,
    pub omega_star: f64,
    pub residual: f64,
    pub r: f64,
    pub stable: bool,
    pub leading_eigs: Vec<f64>,
}

impl SyncState {
    pub fn header(&self) -> StateHeader {
        StateHeader {
            coupling: self.coupling,
            omega_star: self.omega_star,
            residual: self.residual_norm,
            r: self.r,
            stable: self.stable,
            leading_eigs: self.leading_eigs.clone(),
        }
    }

    /// Residual, order parameter and spectrum of a given point at the
    /// system's coupling, after projection onto `Σ u = 0`.
    pub fn evaluate(sys: &FiniteSystem, u: &[f64], omega_star: f64) -> Result<Self> {
        if u.len() != sys.n() {
            return Err(Error::DimensionMismatch { expected: sys.n(), got: u.len() });
        }
        let mut u = DVector::from_column_slice(u);
        let mean = u.mean();
        u.add_scalar_mut(-mean);
        Ok(Self::assemble(sys, sys.coupling(), u, omega_star, 0))
    }

    pub(crate) fn assemble(sys: &FiniteSystem, coupling: f64, u: DVector<f64>, omega_star: f64, iterations: usize) -> Self {
        let residual_norm = sys.rhs_at(&u, omega_star, coupling).amax();
        let spec = SpectrumSummary::of_jacobian(&sys.jacobian_at(&u, coupling));
        let u = u.as_slice().to_vec();
        Self {
            r: order_parameter(&u),
            u,
            omega_star,
            coupling,
            residual_norm,
            iterations,
            leading_eigs: spec.leading,
            smallest_eig: spec.smallest,
            unstable_count: spec.unstable_count,
            stable: spec.stability == Stability::Stable,
            stability: spec.stability,
        }
    }
}

/// `[J, −1; 1ᵀ, 0]`: the locking equations bordered by the gauge row.
pub(crate) fn bordered(jac: &DMatrix<f64>) -> DMatrix<f64> {
    let n = jac.nrows();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(jac);
    for j in 0..n {
        m[(j, n)] = -1.0;
        m[(n, j)] = 1.0;
    }
    m
}

/// Solves `M x = b` by partial-pivot LU, refusing when the pivot ratio
/// exceeds `cond_limit`.
pub(crate) fn guarded_solve(m: DMatrix<f64>, b: &DVector<f64>, cond_limit: f64) -> Result<DVector<f64>> {
    let lu = m.lu();
    let u = lu.u();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for d in u.diagonal().iter() {
        lo = lo.min(d.abs());
        hi = hi.max(d.abs());
    }
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= cond_limit) {
        return Err(Error::NearFold { condition });
    }
    lu.solve(b).ok_or(Error::NearFold { condition: f64::INFINITY })
}

/// Newton's method for `(u, ω*)` with `G_n = 0`, `Σ u = 0` at the system's
/// coupling. `u0` need not be gauged; `ω*` starts at the mean frequency.
pub fn newton_solve(sys: &FiniteSystem, u0: &[f64], opts: &NewtonOptions) -> Result<SyncState> {
    let n = sys.n();
    if u0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: u0.len() });
    }
    let mut u = DVector::from_column_slice(u0);
    let mut omega_star = sys.mean_omega();
    let mut residual = f64::INFINITY;
    for it in 0..=opts.max_iter {
        let g = sys.rhs(&u, omega_star);
        let gauge = u.sum();
        residual = g.amax().max(gauge.abs() / n as f64);
        if !residual.is_finite() {
            break;
        }
        if residual <= opts.tol {
            let mean = u.mean();
            u.add_scalar_mut(-mean);
            return Ok(SyncState::assemble(sys, sys.coupling(), u, omega_star, it));
        }
        if it == opts.max_iter {
            break;
        }
        let mut b = DVector::zeros(n + 1);
        b.rows_mut(0, n).copy_from(&(-g));
        b[n] = -gauge;
        let step = guarded_solve(bordered(&sys.jacobian(&u)), &b, opts.cond_limit)?;
        u += step.rows(0, n);
        omega_star += step[n];
    }
    Err(Error::Diverged { iterations: opts.max_iter, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite::Stability;

    fn complete(n: usize) -> DMatrix<f64> {
        let mut a = DMatrix::from_element(n, n, 1.0);
        a.fill_diagonal(0.0);
        a
    }

    #[test]
    fn two_oscillators() {
        let (a, k) = (0.3f64, 2.0);
        let sys = FiniteSystem::new(vec![-a, a], complete(2), k).unwrap();
        let st = newton_solve(&sys, &[0.0, 0.0], &NewtonOptions::default()).unwrap();
        let d = (2.0 * a / k).asin();
        assert!((st.u[1] - st.u[0] - d).abs() < 1e-9);
        assert!(st.omega_star.abs() < 1e-14);
        assert_eq!(st.stability, Stability::Stable);
        // the locked pair relaxes at rate K cos(d)
        assert!((st.smallest_eig + k * d.cos()).abs() < 1e-8);
    }

    #[test]
    fn two_oscillators_beyond_locking_fail() {
        let sys = FiniteSystem::new(vec![-0.6, 0.6], complete(2), 1.0).unwrap();
        assert!(newton_solve(&sys, &[0.0, 0.0], &NewtonOptions::default()).is_err());
    }

    #[test]
    fn uniform_frequencies_complete_graph() {
        let n = 100;
        let omega: Vec<f64> = (1..=n).map(|j| (2.0 * j as f64 - 1.0) / n as f64 - 1.0).collect();
        let sys = FiniteSystem::new(omega.clone(), complete(n), 3.0).unwrap();
        let guess: Vec<f64> = omega.iter().map(|w| (w / 2.0).asin()).collect();
        let st = newton_solve(&sys, &guess, &NewtonOptions::default()).unwrap();
        assert!(st.residual_norm < 1e-10);
        assert!(st.u.iter().sum::<f64>().abs() < 1e-12 * n as f64);
        assert!(st.stable);
        assert!(st.iterations > 0);
        assert!(st.u.windows(2).all(|w| w[1] > w[0]));

        let again = SyncState::evaluate(&sys, &st.u, st.omega_star).unwrap();
        assert_eq!((again.residual_norm, again.stable, again.iterations), (st.residual_norm, true, 0));

        let h = st.header();
        assert_eq!(h.leading_eigs.len(), 4);
        assert_eq!((h.coupling, h.residual, h.r), (3.0, st.residual_norm, st.r));
    }
}
