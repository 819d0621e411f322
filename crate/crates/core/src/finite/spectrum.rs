//! Spectrum of the Jacobian on the mean-zero subspace.
//!
//! The Jacobian always annihilates the constant vector (phase translation).
//! Projecting onto the Helmert basis of `1^⊥` removes that eigenvalue
//! before the symmetric eigen-solve. The Helmert columns are
//! `(1, …, 1, −k, 0, …)/√(k(k+1))`, so `Qᵀ J Q` is assembled with running
//! prefix sums in O(n²).

use nalgebra::DMatrix;
use serde::Serialize;

/// Eigenvalues with magnitude below this are neither stable nor unstable.
pub const MARGINAL_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Marginal,
    Unstable,
}

/// `Qᵀ J Q` for the n×(n−1) Helmert basis `Q`.
pub fn helmert_reduce(jac: &DMatrix<f64>) -> DMatrix<f64> {
    let n = jac.nrows();
    assert!(n >= 2, "mean-zero subspace of R^1 is trivial");
    // J Q, column by column
    let mut jq = DMatrix::zeros(n, n - 1);
    let mut prefix = vec![0.0; n];
    for k in 1..n {
        for (p, v) in prefix.iter_mut().zip(jac.column(k - 1).iter()) {
            *p += v;
        }
        let norm = ((k * (k + 1)) as f64).sqrt();
        let kf = k as f64;
        for i in 0..n {
            jq[(i, k - 1)] = (prefix[i] - kf * jac[(i, k)]) / norm;
        }
    }
    // Qᵀ (J Q), row by row
    let mut red = DMatrix::zeros(n - 1, n - 1);
    let mut prefix = vec![0.0; n - 1];
    for k in 1..n {
        for (p, v) in prefix.iter_mut().zip(jq.row(k - 1).iter()) {
            *p += v;
        }
        let norm = ((k * (k + 1)) as f64).sqrt();
        let kf = k as f64;
        for c in 0..n - 1 {
            red[(k - 1, c)] = (prefix[c] - kf * jq[(k, c)]) / norm;
        }
    }
    // symmetrise round-off
    let t = red.transpose();
    (red + t) * 0.5
}

/// Eigenvalues of the gauge-reduced Jacobian, ascending.
pub fn reduced_eigenvalues(jac: &DMatrix<f64>) -> Vec<f64> {
    if jac.nrows() < 2 {
        return Vec::new();
    }
    let mut eig: Vec<f64> = helmert_reduce(jac).symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Signed eigenvalue of smallest magnitude.
pub fn smallest_magnitude(eigs: &[f64]) -> f64 {
    eigs.iter().copied().min_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSummary {
    /// Up to four eigenvalues of smallest magnitude, ordered by magnitude.
    pub leading: Vec<f64>,
    /// Signed eigenvalue closest to zero; changes sign at a fold.
    pub smallest: f64,
    /// Number of eigenvalues above `MARGINAL_EPS`.
    pub unstable_count: usize,
    pub stability: Stability,
}

impl SpectrumSummary {
    pub fn from_eigenvalues(eigs: &[f64]) -> Self {
        let mut by_mag = eigs.to_vec();
        by_mag.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
        by_mag.truncate(4);
        let unstable_count = eigs.iter().filter(|&&e| e > MARGINAL_EPS).count();
        let top = eigs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let stability = if unstable_count > 0 {
            Stability::Unstable
        } else if top > -MARGINAL_EPS {
            Stability::Marginal
        } else {
            Stability::Stable
        };
        Self { leading: by_mag, smallest: smallest_magnitude(eigs), unstable_count, stability }
    }

    pub fn of_jacobian(jac: &DMatrix<f64>) -> Self {
        Self::from_eigenvalues(&reduced_eigenvalues(jac))
    }
}
