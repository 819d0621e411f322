//! Graphon kernels and the finite graphs sampled from them.

mod cutnorm;
mod degree;
mod points;
mod step;

pub use cutnorm::{cut_norm_exhaustive, cut_norm_estimate, CutNormEstimate, EXHAUSTIVE_MAX_N};
pub use degree::{degree, degree_distance, degree_step, DegreeFunction};
pub use points::{SampleMode, SamplePoints};
pub use step::{embed, sample_simple, sample_weighted, StepGraphon};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A symmetric kernel `W: [0,1]² → [0,1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Graphon {
    /// `W ≡ p`.
    ErdosRenyi { p: f64 },
    /// `hi` when the circle distance `min(|x−y|, 1−|x−y|)` is at most
    /// `radius`, `lo` otherwise.
    SmallWorld { hi: f64, lo: f64, radius: f64 },
    /// Piecewise constant on an m×m partition of the unit square.
    Grid { values: Vec<Vec<f64>> },
}

impl Graphon {
    pub fn erdos_renyi(p: f64) -> Result<Self> {
        let g = Graphon::ErdosRenyi { p };
        g.validate()?;
        Ok(g)
    }

    pub fn small_world(hi: f64, lo: f64, radius: f64) -> Result<Self> {
        let g = Graphon::SmallWorld { hi, lo, radius };
        g.validate()?;
        Ok(g)
    }

    pub fn grid(values: Vec<Vec<f64>>) -> Result<Self> {
        let g = Graphon::Grid { values };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |w: f64| (0.0..=1.0).contains(&w);
        match self {
            Graphon::ErdosRenyi { p } => {
                if !(*p > 0.0 && *p <= 1.0) {
                    return Err(Error::InvalidArgument(format!("edge probability {p} not in (0,1]")));
                }
            }
            Graphon::SmallWorld { hi, lo, radius } => {
                if !unit(*hi) || !unit(*lo) {
                    return Err(Error::InvalidArgument("small-world weights must lie in [0,1]".into()));
                }
                if !(*radius > 0.0 && *radius <= 0.5) {
                    return Err(Error::InvalidArgument(format!("radius {radius} not in (0,1/2]")));
                }
            }
            Graphon::Grid { values } => {
                let m = values.len();
                if m == 0 || values.iter().any(|row| row.len() != m) {
                    return Err(Error::InvalidArgument("grid graphon must be a nonempty square array".into()));
                }
                for j in 0..m {
                    for k in 0..m {
                        if !unit(values[j][k]) {
                            return Err(Error::InvalidArgument(format!("grid entry ({j},{k}) outside [0,1]")));
                        }
                        if values[j][k] != values[k][j] {
                            return Err(Error::InvalidArgument(format!("grid not symmetric at ({j},{k})")));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Graphon::ErdosRenyi { p } => *p,
            Graphon::SmallWorld { hi, lo, radius } => {
                let d = (x - y).abs();
                if d.min(1.0 - d) <= *radius {
                    *hi
                } else {
                    *lo
                }
            }
            Graphon::Grid { values } => {
                let m = values.len();
                let cell = |t: f64| ((t * m as f64) as usize).min(m - 1);
                values[cell(x)][cell(y)]
            }
        }
    }

    /// Edge probability when the kernel is constant.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Graphon::ErdosRenyi { p } => Some(*p),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_world_uses_circle_distance() {
        let w = Graphon::small_world(0.9, 0.1, 0.25).unwrap();
        assert_eq!(w.eval(0.1, 0.2), 0.9);
        assert_eq!(w.eval(0.05, 0.95), 0.9); // wraps around
        assert_eq!(w.eval(0.0, 0.5), 0.1);
        assert_eq!(w.eval(0.2, 0.1), w.eval(0.1, 0.2));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Graphon::erdos_renyi(0.0).is_err());
        assert!(Graphon::erdos_renyi(1.2).is_err());
        assert!(Graphon::small_world(0.9, 0.1, 0.6).is_err());
        assert!(Graphon::grid(vec![vec![0.1, 0.2], vec![0.3, 0.1]]).is_err());
    }

    #[test]
    fn grid_lookup() {
        let w = Graphon::grid(vec![vec![0.0, 0.5], vec![0.5, 1.0]]).unwrap();
        assert_eq!(w.eval(0.25, 0.75), 0.5);
        assert_eq!(w.eval(1.0, 1.0), 1.0);
    }

    #[test]
    fn serde_tagged_form() {
        let w: Graphon = serde_json::from_str(r#"{"kind":"small_world","hi":0.9,"lo":0.1,"radius":0.25}"#).unwrap();
        assert_eq!(w, Graphon::SmallWorld { hi: 0.9, lo: 0.1, radius: 0.25 });
    }
}
