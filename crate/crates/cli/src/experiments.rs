//! Drivers producing the data behind each figure.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{anyhow, Result};
use kuramoto_graphon::continuation::{
    continue_branch, measure_kcrit_with_state, sweep_realizations, Branch, ContinuationOptions, Fold, KcritOptions,
    SweepConfig,
};
use kuramoto_graphon::finite::{newton_solve, write_state_csv, NewtonOptions, SyncState};
use kuramoto_graphon::freqdist::FrequencyModel;
use kuramoto_graphon::graphon::{
    cut_norm_estimate, degree, degree_distance, degree_step, embed, sample_weighted, SampleMode,
};
use kuramoto_graphon::instance::{GraphKind, Instance, InstanceSpec};
use kuramoto_graphon::meanfield::{self, SyncProfile};
use kuramoto_graphon::rng::derive_seed;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{Experiment, ExperimentConfig};
use crate::output::{OutputDir, TaskFailure};

pub const STATE_COLUMNS: &[&str] = &["j", "x_j", "omega_j", "u_j"];
pub const PROFILE_COLUMNS: &[&str] = &["x", "u_star"];
pub const BRANCH_COLUMNS: &[&str] = &["idx", "K", "r", "smallest_eig", "stable", "fold_flag"];
pub const MEANFIELD_BRANCH_COLUMNS: &[&str] = &["K", "q", "kappa", "r", "stable"];
pub const ROW_COLUMNS: &[&str] = &["n", "seed", "K_crit_n", "method", "rel_err"];
pub const AGGREGATE_COLUMNS: &[&str] = &["n", "mean", "std", "count"];
pub const CONVERGENCE_COLUMNS: &[&str] =
    &["n", "seed", "degree_G_W", "degree_bound", "cut_H_W", "cut_H_bound", "cut_G_W", "cut_G_bound"];

/// Confidence parameter of the degree bound `√(log(2n/ν)/n)`.
pub const DEGREE_NU: f64 = 0.05;
const CUT_RESTARTS: usize = 32;
const PROFILE_SAMPLES: usize = 1001;

#[derive(Debug, Default)]
pub struct RunReport {
    pub failures: Vec<TaskFailure>,
    pub results: serde_json::Value,
    pub summary: String,
}

pub fn run_experiment(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<RunReport> {
    let model = cfg.model()?;
    match cfg.experiment {
        Experiment::Fig1KcritSweep => kcrit_sweep(cfg, out),
        Experiment::Fig2ProfileUniform | Experiment::Fig3ProfileCauchy => profile(cfg, &model, out),
        Experiment::Fig4BifurcationCosine => bifurcation(cfg, &model, out),
        Experiment::Fig5Smallworld => smallworld(cfg, &model, out),
        Experiment::ConvergenceDiag => convergence(cfg, out),
    }
}

fn newton_options(cfg: &ExperimentConfig) -> NewtonOptions {
    NewtonOptions { tol: cfg.tol, ..Default::default() }
}

fn kcrit_options(cfg: &ExperimentConfig) -> KcritOptions {
    KcritOptions { newton: newton_options(cfg), ..Default::default() }
}

fn instance_spec(cfg: &ExperimentConfig, n: usize) -> Result<InstanceSpec> {
    Ok(InstanceSpec { n, graphon: cfg.graphon.clone(), model: cfg.model()?, mode: cfg.mode, kind: cfg.kind })
}

fn task_seed(cfg: &ExperimentConfig, n: usize, realization: usize) -> u64 {
    derive_seed(cfg.seed, n, realization, cfg.experiment.name())
}

fn failure(index: usize, task: impl Into<String>, error: impl ToString) -> TaskFailure {
    TaskFailure { index, task: task.into(), error: error.to_string() }
}

fn kcrit_sweep(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<RunReport> {
    let template = instance_spec(cfg, 0)?;
    let k_ref = meanfield::critical_coupling(&template.model, template.mean_degree())?;
    let sweep = SweepConfig {
        ns: cfg.n.clone(),
        realizations: cfg.realizations,
        master_seed: cfg.seed,
        label: cfg.experiment.name().to_string(),
        template,
        strategy: cfg.strategy,
        options: kcrit_options(cfg),
    };
    let result = sweep_realizations(&sweep);
    out.write_csv("kcrit_rows.csv", ROW_COLUMNS, |b| result.write_rows_csv(b))?;
    out.write_csv("kcrit_aggregate.csv", AGGREGATE_COLUMNS, |b| result.write_aggregate_csv(b))?;

    let failures = result
        .tasks
        .iter()
        .enumerate()
        .filter_map(|(i, t)| {
            let err = t.outcome.as_ref().err()?;
            Some(failure(i, format!("n={} realization={} seed={}", t.n, t.realization, t.seed), err))
        })
        .collect();
    let aggregate = result.aggregate();
    let mut summary = format!("graphon K_crit = {k_ref:.6}\n");
    for a in &aggregate {
        let rel = (a.mean - k_ref) / k_ref;
        writeln!(summary, "n = {:5}: mean K_crit,n = {:.6} (rel. diff {:+.4}), std = {:.6}, count = {}", a.n, a.mean, rel, a.std, a.count)?;
    }
    let results = json!({ "K_crit": k_ref, "aggregate": aggregate });
    Ok(RunReport { failures, results, summary })
}

/// Sup-distance between `u` and `profile` at the sample points after
/// removing the mean offset.
pub fn profile_deviation(points: &[f64], u: &[f64], profile: &SyncProfile) -> f64 {
    let diff: Vec<f64> = points.iter().zip(u).map(|(&x, &uj)| uj - profile.eval(x)).collect();
    let offset = diff.iter().sum::<f64>() / diff.len() as f64;
    diff.iter().fold(0.0f64, |m, d| m.max((d - offset).abs()))
}

fn profile(cfg: &ExperimentConfig, model: &FrequencyModel, out: &mut OutputDir) -> Result<RunReport> {
    let n = cfg.n[0];
    let seed = task_seed(cfg, n, 0);
    let spec = instance_spec(cfg, n)?;
    let p = spec.mean_degree();
    let k_ref = meanfield::critical_coupling(model, p)?;
    let inst = Instance::sample(&spec, seed)?;

    let solved = || -> Result<(SyncState, SyncProfile, &'static str)> {
        match cfg.coupling {
            Some(k) => {
                let guess =
                    inst.mean_field_guess(model, p, k).ok_or_else(|| anyhow!("K = {k} is below the mean-field onset"))?;
                let state = newton_solve(&inst.system(k)?, &guess, &newton_options(cfg))?;
                let q = meanfield::solve_q(model, p, k)?;
                Ok((state, meanfield::sync_profile(model, p, k, q)?, "fixed_coupling"))
            }
            None => {
                let (res, crit) = measure_kcrit_with_state(&spec, seed, cfg.strategy, &kcrit_options(cfg))?;
                let state = SyncState::evaluate(&inst.system(crit.coupling)?, &crit.u, crit.omega_star)?;
                let onset = meanfield::profile_at_kappa(model, meanfield::maximize_gamma(model).q_star)?;
                Ok((state, onset, res.method.name()))
            }
        }
    };
    let (state, reference, method) = match solved() {
        Ok(v) => v,
        Err(e) => {
            return Ok(RunReport {
                failures: vec![failure(0, format!("n={n} seed={seed}"), e)],
                results: json!({ "K_crit": k_ref }),
                summary: format!("graphon K_crit = {k_ref:.6}\nno locked state: see failures\n"),
            })
        }
    };

    let sys = inst.system(state.coupling)?;
    let pts = inst.points.as_slice();
    out.write_csv("state.csv", STATE_COLUMNS, |b| write_state_csv(b, pts, &sys, &state))?;
    out.write_json("state.json", &state.header())?;
    out.write_csv("profile_meanfield.csv", PROFILE_COLUMNS, |b| {
        use std::io::Write;
        writeln!(b, "x,u_star")?;
        for i in 0..PROFILE_SAMPLES {
            let x = i as f64 / (PROFILE_SAMPLES - 1) as f64;
            writeln!(b, "{},{}", x, reference.eval(x))?;
        }
        Ok(())
    })?;

    let deviation = profile_deviation(pts, &state.u, &reference);
    let summary = format!(
        "n = {n}, seed = {seed}, K = {:.6} ({method}); graphon K_crit = {k_ref:.6}\n\
         mean-field kappa = {:.6}\n\
         sup_j |u_j - u*(x_j)| = {deviation:.4e} (mean offset removed)\n\
         r = {:.6}, residual = {:.2e}, stable = {}\n",
        state.coupling,
        reference.kappa(),
        state.r,
        state.residual_norm,
        state.stable
    );
    let results = json!({
        "n": n, "seed": seed, "K": state.coupling, "method": method, "K_crit": k_ref,
        "kappa": reference.kappa(), "sup_deviation": deviation, "r": state.r, "stable": state.stable,
    });
    Ok(RunReport { failures: Vec::new(), results, summary })
}

/// Seeds a stable state at `k_start` from the mean-field profile and
/// continues it downward in `K`.
fn trace_instance(
    inst: &Instance,
    model: &FrequencyModel,
    p: f64,
    k_start: f64,
    copts: &ContinuationOptions,
    nopts: &NewtonOptions,
) -> Result<Branch> {
    let guess = inst
        .mean_field_guess(model, p, k_start)
        .ok_or_else(|| anyhow!("seed-state failure: K = {k_start} is below the mean-field onset"))?;
    let start = newton_solve(&inst.system(k_start)?, &guess, nopts).map_err(|e| anyhow!("seed-state failure: {e}"))?;
    Ok(continue_branch(&inst.system(k_start)?, &start, copts)?)
}

fn continuation_options(cfg: &ExperimentConfig, k_start: f64) -> ContinuationOptions {
    let [k_min, k_max] = cfg.k_range.unwrap_or([k_start / 6.0, 1.025 * k_start]);
    ContinuationOptions {
        ds: cfg.ds.unwrap_or(0.1),
        k_min,
        k_max,
        max_points: 3000,
        direction: -1.0,
        tol: cfg.tol,
        ..Default::default()
    }
}

#[derive(Serialize)]
struct FoldRecord<'a> {
    branch: &'a str,
    #[serde(flatten)]
    fold: &'a Fold,
}

fn bifurcation(cfg: &ExperimentConfig, model: &FrequencyModel, out: &mut OutputDir) -> Result<RunReport> {
    let n = cfg.n[0];
    let seed = task_seed(cfg, n, 0);
    let spec = instance_spec(cfg, n)?;
    let p = spec.mean_degree();
    let k_ref = meanfield::critical_coupling(model, p)?;
    let k_start = cfg.k_start.unwrap_or(3.0 * k_ref);
    let copts = continuation_options(cfg, k_start);

    let mut failures = Vec::new();
    let branch = Instance::sample(&spec, seed)
        .map_err(anyhow::Error::from)
        .and_then(|inst| trace_instance(&inst, model, p, k_start, &copts, &newton_options(cfg)));
    let mut summary = format!("graphon K_crit = {k_ref:.6}\n");
    let mut results = json!({ "n": n, "seed": seed, "K_crit": k_ref });
    match branch {
        Ok(br) => {
            out.write_csv("branch.csv", BRANCH_COLUMNS, |b| br.write_csv(b))?;
            let folds: Vec<FoldRecord> = br.folds.iter().map(|f| FoldRecord { branch: "finite", fold: f }).collect();
            out.write_json("folds.json", &folds)?;
            writeln!(summary, "n = {n}, seed = {seed}: {} points, termination {:?}", br.points.len(), br.termination)?;
            for f in &br.folds {
                let rel = (f.k - k_ref) / k_ref;
                writeln!(summary, "fold at K = {:.6} (rel. diff {:+.4}){}", f.k, rel, if f.suspect { ", suspect" } else { "" })?;
            }
            if let Some(f) = br.folds.first() {
                results["K_fold"] = json!(f.k);
                results["rel_err"] = json!((f.k - k_ref) / k_ref);
            }
            results["folds"] = json!(br.folds.iter().map(|f| f.k).collect::<Vec<_>>());
        }
        Err(e) => failures.push(failure(0, format!("n={n} seed={seed}"), e)),
    }

    let samples = meanfield_samples(model, p, copts.k_max)?;
    out.write_csv("meanfield_branch.csv", MEANFIELD_BRANCH_COLUMNS, |b| {
        use std::io::Write;
        writeln!(b, "K,q,kappa,r,stable")?;
        for s in &samples {
            writeln!(b, "{},{},{},{},{}", s.coupling, s.q, s.kappa, s.r, s.stable as u8)?;
        }
        Ok(())
    })?;
    Ok(RunReport { failures, results, summary })
}

/// Mean-field branch from the spread up to the `q` where `K` exceeds
/// `k_max` on the stable side.
fn meanfield_samples(model: &FrequencyModel, p: f64, k_max: f64) -> Result<Vec<meanfield::BranchSample>> {
    let lo = model.spread();
    let q_star = meanfield::maximize_gamma(model).q_star;
    let mut hi = 2.0 * q_star.max(lo);
    while 1.0 / (p * meanfield::gamma_of_q(model, hi)?) < k_max && hi < 1e6 {
        hi *= 2.0;
    }
    let m = 400;
    let qs: Vec<f64> = (0..=m).map(|i| lo + (hi - lo) * (i as f64 / m as f64).powi(2)).collect();
    Ok(meanfield::meanfield_branch(model, p, &qs)?)
}

fn smallworld(cfg: &ExperimentConfig, model: &FrequencyModel, out: &mut OutputDir) -> Result<RunReport> {
    let base = instance_spec(cfg, 0)?;
    let p = base.mean_degree();
    let k_ref = meanfield::critical_coupling(model, p)?;
    let k_start = cfg.k_start.unwrap_or(3.0 * k_ref);
    let copts = continuation_options(cfg, k_start);
    let m = cfg.grid_m.unwrap_or(800);

    let mut tasks = vec![(
        format!("grid_m{m}"),
        InstanceSpec { n: m, mode: SampleMode::Midpoint, kind: GraphKind::Weighted, ..base.clone() },
        0u64,
    )];
    for &n in &cfg.n {
        let seed = task_seed(cfg, n, 0);
        for (tag, kind) in [("H", GraphKind::Weighted), ("G", GraphKind::Simple)] {
            tasks.push((format!("{tag}_n{n}"), InstanceSpec { n, kind, ..base.clone() }, seed));
        }
    }
    let nopts = newton_options(cfg);
    let branches: Vec<Result<Branch>> = tasks
        .par_iter()
        .map(|(_, spec, seed)| {
            let inst = Instance::sample(spec, *seed)?;
            trace_instance(&inst, model, p, k_start, &copts, &nopts)
        })
        .collect();

    let mut failures = Vec::new();
    let mut folds = Vec::new();
    let mut fold_ks = BTreeMap::new();
    let mut summary = format!("mean degree {p:.4}; continuation from K = {k_start:.4}\n");
    for (i, ((label, spec, seed), branch)) in tasks.iter().zip(&branches).enumerate() {
        match branch {
            Ok(br) => {
                out.write_csv(&format!("branch_{label}.csv"), BRANCH_COLUMNS, |b| br.write_csv(b))?;
                folds.extend(br.folds.iter().map(|f| FoldRecord { branch: label, fold: f }));
                let ks: Vec<f64> = br.folds.iter().map(|f| f.k).collect();
                let shown: Vec<String> = ks.iter().map(|k| format!("{k:.4}")).collect();
                writeln!(summary, "{label}: folds at K = [{}] ({:?})", shown.join(", "), br.termination)?;
                fold_ks.insert(label.clone(), ks);
            }
            Err(e) => failures.push(failure(i, format!("{label} n={} seed={seed}", spec.n), e)),
        }
    }
    out.write_json("folds.json", &folds)?;
    Ok(RunReport { failures, results: json!({ "folds": fold_ks }), summary })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub seed: u64,
    pub degree_g_w: f64,
    pub degree_bound: f64,
    pub cut_h_w: f64,
    pub cut_h_bound: f64,
    pub cut_g_w: f64,
    pub cut_g_bound: f64,
}

pub fn convergence_row(spec: &InstanceSpec, seed: u64) -> Result<ConvergenceRow> {
    let n = spec.n;
    let inst = Instance::sample(&InstanceSpec { kind: GraphKind::Simple, ..spec.clone() }, seed)?;
    let h = sample_weighted(&spec.graphon, &inst.points);
    let w = embed(&spec.graphon, n)?;
    let log_n = (n as f64).ln();
    Ok(ConvergenceRow {
        n,
        seed,
        degree_g_w: degree_distance(&degree(&spec.graphon), &degree_step(&inst.graph))?,
        degree_bound: ((2.0 * n as f64 / DEGREE_NU).ln() / n as f64).sqrt(),
        cut_h_w: cut_norm_estimate(&h, &w, CUT_RESTARTS, seed)?.value,
        cut_h_bound: 20.0 / log_n.sqrt(),
        cut_g_w: cut_norm_estimate(&inst.graph, &w, CUT_RESTARTS, seed)?.value,
        cut_g_bound: 22.0 / log_n.sqrt(),
    })
}

fn convergence(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<RunReport> {
    let jobs: Vec<(usize, usize)> = cfg.n.iter().flat_map(|&n| (0..cfg.realizations).map(move |r| (n, r))).collect();
    let rows: Vec<Result<ConvergenceRow>> = jobs
        .par_iter()
        .map(|&(n, r)| convergence_row(&instance_spec(cfg, n)?, task_seed(cfg, n, r)))
        .collect();
    let mut failures = Vec::new();
    let mut ok = Vec::new();
    for (i, (row, &(n, r))) in rows.into_iter().zip(&jobs).enumerate() {
        match row {
            Ok(row) => ok.push(row),
            Err(e) => failures.push(failure(i, format!("n={n} realization={r}"), e)),
        }
    }
    out.write_csv("convergence.csv", CONVERGENCE_COLUMNS, |b| {
        use std::io::Write;
        writeln!(b, "{}", CONVERGENCE_COLUMNS.join(","))?;
        for r in &ok {
            writeln!(
                b,
                "{},{},{},{},{},{},{},{}",
                r.n, r.seed, r.degree_g_w, r.degree_bound, r.cut_h_w, r.cut_h_bound, r.cut_g_w, r.cut_g_bound
            )?;
        }
        Ok(())
    })?;
    let mut summary = String::new();
    let within = |r: &ConvergenceRow| r.degree_g_w <= r.degree_bound && r.cut_h_w <= r.cut_h_bound && r.cut_g_w <= r.cut_g_bound;
    for r in &ok {
        writeln!(
            summary,
            "n = {:5}, seed = {:20}: degree {:.4} (bound {:.4}), cut H {:.4} (bound {:.3}), cut G {:.4} (bound {:.3})",
            r.n, r.seed, r.degree_g_w, r.degree_bound, r.cut_h_w, r.cut_h_bound, r.cut_g_w, r.cut_g_bound
        )?;
    }
    let all_within = ok.iter().all(within);
    writeln!(summary, "all distances within their bounds: {all_within}")?;
    Ok(RunReport { failures, results: json!({ "rows": ok, "all_within_bounds": all_within }), summary })
}
