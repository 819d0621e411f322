//! Finite-n critical coupling `K_crit,n`: the smallest coupling with a
//! stable phase-locked state.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::arclength::ContinuationOptions;
use super::branch::continue_branch;
use crate::finite::{newton_solve, NewtonOptions, SyncState};
use crate::freqdist::FrequencyModel;
use crate::instance::{Instance, InstanceSpec};
use crate::meanfield;
use crate::rng::derive_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KcritMethod {
    FoldTracking,
    SweepBisection,
}

impl KcritMethod {
    pub fn name(self) -> &'static str {
        match self {
            KcritMethod::FoldTracking => "fold_tracking",
            KcritMethod::SweepBisection => "sweep_bisection",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Bisection for uniform frequencies, fold tracking otherwise (with
    /// bisection as fallback).
    #[default]
    Auto,
    FoldTracking,
    SweepBisection,
}

#[derive(Debug, Clone, Copy)]
pub struct KcritOptions {
    /// Seeding coupling as a multiple of the mean-field `K_crit`.
    pub k_hi_factor: f64,
    /// Lower end of the search as a multiple of the mean-field `K_crit`.
    pub k_lo_factor: f64,
    /// Continuation step as a multiple of the mean-field `K_crit`.
    pub ds_factor: f64,
    pub bisection_width: f64,
    pub newton: NewtonOptions,
}

impl Default for KcritOptions {
    fn default() -> Self {
        Self { k_hi_factor: 3.0, k_lo_factor: 0.3, ds_factor: 0.1, bisection_width: 1e-4, newton: NewtonOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalCouplingResult {
    pub n: usize,
    pub seed: u64,
    #[serde(rename = "K_crit_n")]
    pub k_crit_n: f64,
    pub method: KcritMethod,
    /// Mean-field value for Erdős–Rényi kernels.
    #[serde(rename = "reference_K_crit")]
    pub reference_k_crit: Option<f64>,
    #[serde(rename = "rel_err")]
    pub relative_error: Option<f64>,
}

/// A stable solved state at `K_hi`, seeded from the mean-field profile.
fn seed_state(inst: &Instance, model: &FrequencyModel, p: f64, k_hi: f64, opts: &KcritOptions) -> Result<SyncState> {
    let guess = inst
        .mean_field_guess(model, p, k_hi)
        .ok_or_else(|| Error::SeedState(format!("no mean-field profile at K = {k_hi}")))?;
    let state = newton_solve(&inst.system(k_hi)?, &guess, &opts.newton)
        .map_err(|e| Error::SeedState(format!("Newton failed at K = {k_hi}: {e}")))?;
    if !state.stable {
        return Err(Error::SeedState(format!("state at K = {k_hi} is not stable")));
    }
    Ok(state)
}

/// The locked state closest to the onset: the fold point, or the stable
/// end of the final bisection bracket.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalState {
    pub coupling: f64,
    pub u: Vec<f64>,
    pub omega_star: f64,
}

/// Measures `K_crit,n` for one sampled instance.
pub fn measure_kcrit(spec: &InstanceSpec, seed: u64, strategy: Strategy, opts: &KcritOptions) -> Result<CriticalCouplingResult> {
    Ok(measure_kcrit_with_state(spec, seed, strategy, opts)?.0)
}

pub fn measure_kcrit_with_state(
    spec: &InstanceSpec,
    seed: u64,
    strategy: Strategy,
    opts: &KcritOptions,
) -> Result<(CriticalCouplingResult, CriticalState)> {
    let inst = Instance::sample(spec, seed)?;
    // exact for Erdős–Rényi kernels, a surrogate otherwise
    let p = spec.mean_degree();
    let k_ref = meanfield::critical_coupling(&spec.model, p)?;
    let k_hi = opts.k_hi_factor * k_ref;
    let k_lo = opts.k_lo_factor * k_ref;
    let start = seed_state(&inst, &spec.model, p, k_hi, opts)?;

    let use_sweep = match strategy {
        Strategy::SweepBisection => true,
        Strategy::FoldTracking => false,
        Strategy::Auto => spec.model == FrequencyModel::Uniform,
    };
    let ((k_crit_n, state), method) = if use_sweep {
        (sweep_bisection(&inst, spec, p, start, k_lo, opts)?, KcritMethod::SweepBisection)
    } else {
        match fold_tracking(&inst, &start, k_lo, k_hi, k_ref, opts) {
            Ok(found) => (found, KcritMethod::FoldTracking),
            Err(_) if strategy == Strategy::Auto => {
                (sweep_bisection(&inst, spec, p, start, k_lo, opts)?, KcritMethod::SweepBisection)
            }
            Err(e) => return Err(e),
        }
    };
    let reference = spec.graphon.constant_value().map(|_| k_ref);
    let result = CriticalCouplingResult {
        n: spec.n,
        seed,
        k_crit_n,
        method,
        reference_k_crit: reference,
        relative_error: reference.map(|r| (k_crit_n - r) / r),
    };
    Ok((result, state))
}

fn fold_tracking(
    inst: &Instance,
    start: &SyncState,
    k_lo: f64,
    k_hi: f64,
    k_ref: f64,
    opts: &KcritOptions,
) -> Result<(f64, CriticalState)> {
    let sys = inst.system(start.coupling)?;
    let copts = ContinuationOptions {
        ds: opts.ds_factor * k_ref,
        k_min: k_lo,
        k_max: k_hi * 1.01,
        max_points: 400,
        direction: -1.0,
        tol: opts.newton.tol,
        max_folds: Some(1),
        trailing_points: 2,
        ..Default::default()
    };
    let branch = continue_branch(&sys, start, &copts)?;
    branch
        .folds
        .first()
        .map(|f| (f.k, CriticalState { coupling: f.k, u: f.u.clone(), omega_star: f.omega_star }))
        .ok_or_else(|| Error::NoFold(format!("continuation ended ({:?}) without a fold", branch.termination)))
}

/// Bisection on "Newton reaches a stable state", warm-started from the
/// lowest coupling that succeeded and otherwise from the mean-field
/// profile.
fn sweep_bisection(
    inst: &Instance,
    spec: &InstanceSpec,
    p: f64,
    start: SyncState,
    k_lo: f64,
    opts: &KcritOptions,
) -> Result<(f64, CriticalState)> {
    let attempt = |k: f64, warm: &SyncState| -> Option<SyncState> {
        let sys = inst.system(k).ok()?;
        let stable = |s: &SyncState| s.stable;
        if let Some(s) = newton_solve(&sys, &warm.u, &opts.newton).ok().filter(stable) {
            return Some(s);
        }
        let guess = inst.mean_field_guess(&spec.model, p, k)?;
        newton_solve(&sys, &guess, &opts.newton).ok().filter(stable)
    };
    let mut hi = start.coupling;
    let mut warm = start;
    let mut lo = k_lo;
    while let Some(s) = attempt(lo, &warm) {
        // the search interval must start below the onset
        hi = lo;
        warm = s;
        lo *= 0.5;
        if lo < 1e-6 {
            return Err(Error::NoFold("stable states down to K = 0".into()));
        }
    }
    while hi - lo > opts.bisection_width {
        let mid = 0.5 * (lo + hi);
        match attempt(mid, &warm) {
            Some(s) => {
                hi = mid;
                warm = s;
            }
            None => lo = mid,
        }
    }
    let state = CriticalState { coupling: warm.coupling, u: warm.u, omega_star: warm.omega_star };
    Ok((0.5 * (lo + hi), state))
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub ns: Vec<usize>,
    pub realizations: usize,
    pub master_seed: u64,
    pub label: String,
    pub template: InstanceSpec,
    pub strategy: Strategy,
    pub options: KcritOptions,
}

#[derive(Debug, Clone)]
pub struct SweepTask {
    pub n: usize,
    pub realization: usize,
    pub seed: u64,
    pub outcome: std::result::Result<CriticalCouplingResult, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAggregate {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (0 for a single value).
    pub std: f64,
    pub count: usize,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub tasks: Vec<SweepTask>,
}

/// Runs every `(n, realization)` task with a seed derived from the master
/// seed, in parallel on the current rayon pool; results are ordered by task.
pub fn sweep_realizations(config: &SweepConfig) -> SweepResult {
    let jobs: Vec<(usize, usize)> =
        config.ns.iter().flat_map(|&n| (0..config.realizations).map(move |r| (n, r))).collect();
    let tasks = jobs
        .par_iter()
        .map(|&(n, realization)| {
            let seed = derive_seed(config.master_seed, n, realization, &config.label);
            let spec = InstanceSpec { n, ..config.template.clone() };
            let outcome = measure_kcrit(&spec, seed, config.strategy, &config.options).map_err(|e| e.to_string());
            SweepTask { n, realization, seed, outcome }
        })
        .collect();
    SweepResult { tasks }
}

impl SweepResult {
    pub fn successes(&self) -> impl Iterator<Item = &CriticalCouplingResult> {
        self.tasks.iter().filter_map(|t| t.outcome.as_ref().ok())
    }

    pub fn failures(&self) -> impl Iterator<Item = &SweepTask> {
        self.tasks.iter().filter(|t| t.outcome.is_err())
    }

    pub fn aggregate(&self) -> Vec<SweepAggregate> {
        let mut ns: Vec<usize> = self.tasks.iter().map(|t| t.n).collect();
        ns.dedup();
        ns.into_iter()
            .map(|n| {
                let vals: Vec<f64> = self.successes().filter(|r| r.n == n).map(|r| r.k_crit_n).collect();
                let count = vals.len();
                let mean = if count > 0 { vals.iter().sum::<f64>() / count as f64 } else { f64::NAN };
                let std = if count > 1 {
                    (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
                } else if count == 1 {
                    0.0
                } else {
                    f64::NAN
                };
                SweepAggregate { n, mean, std, count }
            })
            .collect()
    }

    /// `n,seed,K_crit_n,method,rel_err`, successful tasks only.
    pub fn write_rows_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,seed,K_crit_n,method,rel_err")?;
        for r in self.successes() {
            let rel = r.relative_error.map(|v| v.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{},{},{}", r.n, r.seed, r.k_crit_n, r.method.name(), rel)?;
        }
        Ok(())
    }

    pub fn write_aggregate_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,mean,std,count")?;
        for a in self.aggregate() {
            writeln!(out, "{},{},{},{}", a.n, a.mean, a.std, a.count)?;
        }
        Ok(())
    }
}
