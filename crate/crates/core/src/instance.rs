//! Sampled network instances: points, frequencies, graph and the resulting
//! finite system.

use serde::{Deserialize, Serialize};

use crate::finite::FiniteSystem;
use crate::freqdist::{empirical_step, FrequencyModel, StepFrequency};
use crate::graphon::{degree, sample_simple, sample_weighted, DegreeFunction, Graphon, SampleMode, SamplePoints, StepGraphon};
use crate::meanfield;
use crate::rng::derive_seed;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    /// 𝔾(n, W): Bernoulli edges.
    #[default]
    Simple,
    /// ℍ(n, W): weights `W(x_j, x_k)`.
    Weighted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSpec {
    pub n: usize,
    pub graphon: Graphon,
    pub model: FrequencyModel,
    pub mode: SampleMode,
    pub kind: GraphKind,
}

impl InstanceSpec {
    /// `∫ d_W`: the edge density of the kernel.
    pub fn mean_degree(&self) -> f64 {
        match degree(&self.graphon) {
            DegreeFunction::Constant(d) => d,
            DegreeFunction::Step(v) => v.iter().sum::<f64>() / v.len() as f64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub points: SamplePoints,
    pub frequencies: StepFrequency,
    pub graph: StepGraphon,
}

impl Instance {
    /// Points and edges use independent streams derived from `seed`.
    pub fn sample(spec: &InstanceSpec, seed: u64) -> Result<Self> {
        spec.graphon.validate()?;
        let points = SamplePoints::generate(spec.n, spec.mode, derive_seed(seed, spec.n, 0, "points"))?;
        let frequencies = empirical_step(&spec.model, &points);
        let graph = match spec.kind {
            GraphKind::Simple => sample_simple(&spec.graphon, &points, derive_seed(seed, spec.n, 0, "graph")),
            GraphKind::Weighted => sample_weighted(&spec.graphon, &points),
        };
        Ok(Self { points, frequencies, graph })
    }

    pub fn system(&self, coupling: f64) -> Result<FiniteSystem> {
        FiniteSystem::from_parts(&self.frequencies, &self.graph, coupling)
    }

    /// The Erdős–Rényi mean-field profile with edge density `p`, sampled at
    /// the instance points, or `None` below the mean-field onset.
    pub fn mean_field_guess(&self, model: &FrequencyModel, p: f64, coupling: f64) -> Option<Vec<f64>> {
        let q = meanfield::solve_q(model, p, coupling).ok()?;
        let profile = meanfield::sync_profile(model, p, coupling, q).ok()?;
        Some(profile.sample(self.points.as_slice()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_is_deterministic_and_seeded() {
        let spec = InstanceSpec {
            n: 40,
            graphon: Graphon::ErdosRenyi { p: 0.5 },
            model: FrequencyModel::ArcsineCosine,
            mode: SampleMode::IidUniform,
            kind: GraphKind::Simple,
        };
        let a = Instance::sample(&spec, 3).unwrap();
        let b = Instance::sample(&spec, 3).unwrap();
        let c = Instance::sample(&spec, 4).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.frequencies, b.frequencies);
        assert_ne!(a.graph, c.graph);
        assert!(a.system(1.0).is_ok());
        assert_eq!(spec.mean_degree(), 0.5);
        let grid = InstanceSpec { graphon: Graphon::grid(vec![vec![0.2, 0.4], vec![0.4, 1.0]]).unwrap(), ..spec };
        assert!((grid.mean_degree() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn guess_exists_only_above_onset() {
        let spec = InstanceSpec {
            n: 10,
            graphon: Graphon::ErdosRenyi { p: 1.0 },
            model: FrequencyModel::Uniform,
            mode: SampleMode::Midpoint,
            kind: GraphKind::Weighted,
        };
        let inst = Instance::sample(&spec, 0).unwrap();
        assert!(inst.mean_field_guess(&spec.model, 1.0, 1.0).is_none());
        assert_eq!(inst.mean_field_guess(&spec.model, 1.0, 2.0).unwrap().len(), 10);
    }
}
