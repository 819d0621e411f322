use serde::{Deserialize, Serialize};

use crate::rng::CounterRng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    /// n independent uniforms, sorted.
    #[default]
    IidUniform,
    /// `x_j = j/n`.
    Deterministic,
    /// One uniform draw in each `[(j−1)/n, j/n)`.
    StratifiedUniform,
    /// `x_j = (j − 1/2)/n`.
    Midpoint,
}

/// Latent positions `x_1 ≤ … ≤ x_n` in `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePoints {
    points: Vec<f64>,
    mode: SampleMode,
}

impl SamplePoints {
    pub fn generate(n: usize, mode: SampleMode, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one sample point".into()));
        }
        let nf = n as f64;
        let mut points: Vec<f64> = match mode {
            SampleMode::IidUniform => CounterRng::new(seed).point_uniforms(n),
            SampleMode::Deterministic => (1..=n).map(|j| j as f64 / nf).collect(),
            SampleMode::StratifiedUniform => CounterRng::new(seed)
                .point_uniforms(n)
                .into_iter()
                .enumerate()
                .map(|(j, u)| (j as f64 + u) / nf)
                .collect(),
            SampleMode::Midpoint => (0..n).map(|j| (j as f64 + 0.5) / nf).collect(),
        };
        // stable sort: ties keep index order
        points.sort_by(f64::total_cmp);
        Ok(Self { points, mode })
    }

    /// Wraps user-supplied points (sorted here).
    pub fn from_points(mut points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("need at least one sample point".into()));
        }
        if points.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::InvalidArgument("sample points must lie in [0,1]".into()));
        }
        points.sort_by(f64::total_cmp);
        Ok(Self { points, mode: SampleMode::IidUniform })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mode(&self) -> SampleMode {
        self.mode
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.points
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_is_exact() {
        let p = SamplePoints::generate(8, SampleMode::Deterministic, 0).unwrap();
        for (j, &x) in p.as_slice().iter().enumerate() {
            assert_eq!(x, (j + 1) as f64 / 8.0);
        }
    }

    #[test]
    fn random_modes_sorted_and_reproducible() {
        for mode in [SampleMode::IidUniform, SampleMode::StratifiedUniform] {
            let a = SamplePoints::generate(500, mode, 9).unwrap();
            let b = SamplePoints::generate(500, mode, 9).unwrap();
            assert_eq!(a, b);
            assert!(a.as_slice().windows(2).all(|w| w[0] <= w[1]));
            assert_ne!(a, SamplePoints::generate(500, mode, 10).unwrap());
        }
    }

    #[test]
    fn stratified_has_one_point_per_cell() {
        let p = SamplePoints::generate(50, SampleMode::StratifiedUniform, 4).unwrap();
        for (j, &x) in p.as_slice().iter().enumerate() {
            assert!(x >= j as f64 / 50.0 && x < (j + 1) as f64 / 50.0);
        }
    }
}
