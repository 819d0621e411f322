//! The n-oscillator Kuramoto system
//!
//! ```text
//! θ̇_j = ω_j + (K/n) Σ_k A_jk sin(θ_k − θ_j)
//! ```
//!
//! and its phase-locked states `θ_j = ω* t + u_j`, i.e. roots of
//! `G_n(u, ω*, K)_j = ω_j − ω* + (K/n) Σ_k A_jk sin(u_k − u_j)` in the
//! gauge `Σ u_j = 0`.

mod integrate;
pub(crate) mod newton;
mod spectrum;

pub use integrate::{integrate, IntegrateOptions, Trajectory};
pub use newton::{newton_solve, NewtonOptions, StateHeader, SyncState};
pub use spectrum::{helmert_reduce, reduced_eigenvalues, smallest_magnitude, SpectrumSummary, Stability, MARGINAL_EPS};

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::freqdist::StepFrequency;
use crate::graphon::StepGraphon;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct FiniteSystem {
    omega: DVector<f64>,
    adjacency: DMatrix<f64>,
    coupling: f64,
}

impl FiniteSystem {
    pub fn new(omega: Vec<f64>, adjacency: DMatrix<f64>, coupling: f64) -> Result<Self> {
        let n = omega.len();
        if adjacency.nrows() != n || adjacency.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: adjacency.nrows() });
        }
        if n == 0 {
            return Err(Error::InvalidArgument("empty system".into()));
        }
        if !(coupling >= 0.0) {
            return Err(Error::InvalidArgument(format!("coupling {coupling} must be nonnegative")));
        }
        if omega.iter().any(|w| !(w.abs() <= 1.0)) {
            return Err(Error::InvalidArgument("natural frequencies must lie in [-1, 1]".into()));
        }
        for j in 0..n {
            if adjacency[(j, j)] != 0.0 {
                return Err(Error::InvalidArgument("adjacency must have zero diagonal".into()));
            }
            for k in j + 1..n {
                if adjacency[(j, k)] != adjacency[(k, j)] {
                    return Err(Error::InvalidArgument(format!("adjacency not symmetric at ({j},{k})")));
                }
            }
        }
        Ok(Self { omega: DVector::from_vec(omega), adjacency, coupling })
    }

    /// A graph sample (zero diagonal required) with step frequencies.
    pub fn from_parts(freq: &StepFrequency, graph: &StepGraphon, coupling: f64) -> Result<Self> {
        Self::new(freq.values().to_vec(), graph.weights().clone(), coupling)
    }

    pub fn n(&self) -> usize {
        self.omega.len()
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn omega(&self) -> &DVector<f64> {
        &self.omega
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn mean_omega(&self) -> f64 {
        self.omega.mean()
    }

    pub fn with_coupling(&self, coupling: f64) -> Self {
        Self { coupling, ..self.clone() }
    }

    /// `(1/n) Σ_k A_jk sin(u_k − u_j)`, via the angle-difference identity
    /// so the cost is two matrix–vector products.
    pub fn coupling_term(&self, u: &DVector<f64>) -> DVector<f64> {
        let n = self.n() as f64;
        let s = u.map(f64::sin);
        let c = u.map(f64::cos);
        let a_s = &self.adjacency * &s;
        let a_c = &self.adjacency * &c;
        DVector::from_fn(self.n(), |j, _| (c[j] * a_s[j] - s[j] * a_c[j]) / n)
    }

    /// `G_n(u, ω*, K)`.
    pub fn rhs(&self, u: &DVector<f64>, omega_star: f64) -> DVector<f64> {
        self.rhs_at(u, omega_star, self.coupling)
    }

    pub(crate) fn rhs_at(&self, u: &DVector<f64>, omega_star: f64, coupling: f64) -> DVector<f64> {
        let mut g = self.coupling_term(u) * coupling;
        for (gj, wj) in g.iter_mut().zip(self.omega.iter()) {
            *gj += wj - omega_star;
        }
        g
    }

    /// `∂G_n/∂u`: symmetric, zero row sums.
    pub fn jacobian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        self.jacobian_at(u, self.coupling)
    }

    pub(crate) fn jacobian_at(&self, u: &DVector<f64>, coupling: f64) -> DMatrix<f64> {
        let n = self.n();
        let scale = coupling / n as f64;
        let s = u.map(f64::sin);
        let c = u.map(f64::cos);
        let mut jac = DMatrix::from_fn(n, n, |j, k| {
            if j == k {
                0.0
            } else {
                scale * self.adjacency[(j, k)] * (c[j] * c[k] + s[j] * s[k])
            }
        });
        for j in 0..n {
            let row: f64 = jac.row(j).sum();
            jac[(j, j)] = -row;
        }
        jac
    }
}

/// `r = |(1/n) Σ e^{iθ_j}|`, clamped to `[0, 1]` against round-off.
pub fn order_parameter(theta: &[f64]) -> f64 {
    let n = theta.len() as f64;
    let (s, c) = theta.iter().fold((0.0, 0.0), |(s, c), t| (s + t.sin(), c + t.cos()));
    ((s * s + c * c).sqrt() / n).min(1.0)
}

/// Rows `(j, x_j, omega_j, u_j)` of a solved state.
pub fn write_state_csv<W: Write>(mut out: W, points: &[f64], sys: &FiniteSystem, state: &SyncState) -> Result<()> {
    writeln!(out, "j,x_j,omega_j,u_j")?;
    for j in 0..sys.n() {
        writeln!(out, "{},{},{},{}", j + 1, points[j], sys.omega()[j], state.u[j])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn complete(n: usize) -> DMatrix<f64> {
        let mut a = DMatrix::from_element(n, n, 1.0);
        a.fill_diagonal(0.0);
        a
    }

    fn pseudo_random(n: usize, seed: u64) -> Vec<f64> {
        let rng = crate::rng::CounterRng::new(seed);
        rng.point_uniforms(n)
    }

    #[test]
    fn identical_oscillators_at_rest() {
        let sys = FiniteSystem::new(vec![0.3; 5], complete(5), 2.0).unwrap();
        let g = sys.rhs(&DVector::zeros(5), 0.3);
        assert!(g.amax() < 1e-15);
    }

    #[test]
    fn two_oscillator_lock() {
        let (a, k) = (0.2f64, 1.5);
        let s = (2.0 * a / k).asin();
        let sys = FiniteSystem::new(vec![-a, a], complete(2), k).unwrap();
        let g = sys.rhs(&DVector::from_vec(vec![-s / 2.0, s / 2.0]), 0.0);
        assert!(g.amax() < 1e-15, "{g}");
    }

    #[test]
    fn rhs_sums_to_frequency_offset() {
        let n = 40;
        let omega: Vec<f64> = pseudo_random(n, 1).iter().map(|x| 2.0 * x - 1.0).collect();
        let mean = omega.iter().sum::<f64>() / n as f64;
        let mut a = DMatrix::from_fn(n, n, |j, k| if (j + k) % 3 == 0 { 1.0 } else { 0.4 });
        a.fill_diagonal(0.0);
        let sys = FiniteSystem::new(omega, a, 3.0).unwrap();
        let u = DVector::from_vec(pseudo_random(n, 2).iter().map(|x| 6.0 * x).collect());
        assert!(sys.rhs(&u, mean).sum().abs() < 1e-12);
    }

    #[test]
    fn translation_mode_and_symmetry() {
        let n = 30;
        let sys = FiniteSystem::new(vec![0.0; n], complete(n), 1.7).unwrap();
        let u = DVector::from_vec(pseudo_random(n, 5).iter().map(|x| 4.0 * x).collect());
        let j = sys.jacobian(&u);
        let ones = DVector::from_element(n, 1.0);
        assert!((&j * ones).amax() < 1e-14);
        assert_eq!(j, j.transpose());
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let n = 50;
        let omega: Vec<f64> = pseudo_random(n, 7).iter().map(|x| 2.0 * x - 1.0).collect();
        let mut a = DMatrix::from_fn(n, n, |j, k| ((j * 7 + k * 7) % 5) as f64 / 4.0);
        a.fill_diagonal(0.0);
        let sys = FiniteSystem::new(omega, a, 2.5).unwrap();
        let u = DVector::from_vec(pseudo_random(n, 8).iter().map(|x| 2.0 * PI * x).collect());
        let jac = sys.jacobian(&u);
        let h = 1e-6;
        for k in 0..n {
            let mut up = u.clone();
            let mut dn = u.clone();
            up[k] += h;
            dn[k] -= h;
            let col = (sys.rhs(&up, 0.0) - sys.rhs(&dn, 0.0)) / (2.0 * h);
            assert!((col - jac.column(k)).amax() < 1e-6);
        }
    }

    #[test]
    fn complete_graph_spectrum_at_sync() {
        let n = 12;
        let k = 2.0;
        let sys = FiniteSystem::new(vec![0.0; n], complete(n), k).unwrap();
        let jac = sys.jacobian(&DVector::zeros(n));
        let expected = (DMatrix::from_element(n, n, 1.0) - DMatrix::identity(n, n) * n as f64) * (k / n as f64);
        assert!((&jac - expected).amax() < 1e-14);
        let mut eig: Vec<f64> = jac.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        assert!(eig[n - 1].abs() < 1e-12);
        for e in &eig[..n - 1] {
            assert!((e + k).abs() < 1e-12);
        }
    }

    #[test]
    fn order_parameter_examples() {
        assert!((order_parameter(&[0.7; 9]) - 1.0).abs() < 1e-15);
        assert!(order_parameter(&[0.0, PI, 0.0, PI]) < 1e-15);
        assert!(order_parameter(&[0.0, PI / 2.0, PI, 1.5 * PI]) < 1e-15);
    }

    #[test]
    fn rejects_invalid_systems() {
        assert!(FiniteSystem::new(vec![0.0; 3], complete(2), 1.0).is_err());
        assert!(FiniteSystem::new(vec![1.5, 0.0], complete(2), 1.0).is_err());
        assert!(FiniteSystem::new(vec![0.0; 2], complete(2), -1.0).is_err());
        assert!(FiniteSystem::new(vec![0.0; 2], DMatrix::from_element(2, 2, 1.0), 1.0).is_err());
    }
}
