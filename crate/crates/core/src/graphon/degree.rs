use super::{Graphon, StepGraphon};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum DegreeFunction {
    Constant(f64),
    /// Value on each `I_j^n`.
    Step(Vec<f64>),
}

impl DegreeFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            DegreeFunction::Constant(c) => *c,
            DegreeFunction::Step(v) => {
                let n = v.len();
                v[((x * n as f64) as usize).min(n - 1)]
            }
        }
    }
}

/// `d_W(x) = ∫ W(x,y) dy`.
///
/// Every built-in kernel has a closed form: constants for Erdős–Rényi and
/// ring (small-world) kernels, row means for grid kernels.
pub fn degree(w: &Graphon) -> DegreeFunction {
    match w {
        Graphon::ErdosRenyi { p } => DegreeFunction::Constant(*p),
        Graphon::SmallWorld { hi, lo, radius } => {
            let near = 2.0 * radius;
            DegreeFunction::Constant(hi * near + lo * (1.0 - near))
        }
        Graphon::Grid { values } => {
            let m = values.len() as f64;
            DegreeFunction::Step(values.iter().map(|row| row.iter().sum::<f64>() / m).collect())
        }
    }
}

/// Row means `d_j = (1/n) Σ_k w_jk`.
pub fn degree_step(s: &StepGraphon) -> DegreeFunction {
    let n = s.n();
    let w = s.weights();
    DegreeFunction::Step((0..n).map(|j| w.row(j).sum() / n as f64).collect())
}

/// Sup-norm distance. Two step functions are compared on the finer grid,
/// which must refine the coarser one.
pub fn degree_distance(a: &DegreeFunction, b: &DegreeFunction) -> Result<f64> {
    use DegreeFunction::*;
    let sup = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0f64, |m, d| m.max(d.abs()));
    Ok(match (a, b) {
        (Constant(x), Constant(y)) => (x - y).abs(),
        (Constant(c), Step(v)) | (Step(v), Constant(c)) => sup(&mut v.iter().map(|d| d - c)),
        (Step(u), Step(v)) => {
            let (fine, coarse) = if u.len() >= v.len() { (u, v) } else { (v, u) };
            if fine.len() % coarse.len() != 0 {
                return Err(Error::IncompatibleGrids(u.len(), v.len()));
            }
            let r = fine.len() / coarse.len();
            sup(&mut fine.iter().enumerate().map(|(i, d)| d - coarse[i / r]))
        }
    })
}
