//! Command-line interface of the `kgraphon` binary.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use kuramoto_graphon::continuation::{continue_branch, ContinuationOptions, Strategy};
use kuramoto_graphon::finite::{newton_solve, write_state_csv, NewtonOptions};
use kuramoto_graphon::freqdist::{FrequencyModel, FrequencySpec};
use kuramoto_graphon::graphon::{Graphon, SampleMode};
use kuramoto_graphon::instance::{GraphKind, Instance, InstanceSpec};
use kuramoto_graphon::meanfield;
use serde_json::json;

use crate::config::{parse_graphon, parse_model, Experiment, ExperimentConfig};
use crate::experiments::{run_experiment, BRANCH_COLUMNS, STATE_COLUMNS};
use crate::output::{Manifest, OutputDir, Versions};

/// Size of the discretisation used for the critical mode.
const CM_GRID: usize = 2048;

#[derive(Debug, Parser)]
#[command(name = "kgraphon", version, about = "Phase-locked states of Kuramoto networks on graphons")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Master seed (overrides the config file).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Newton residual tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Iid,
    Deterministic,
    Stratified,
    Midpoint,
}

impl From<ModeArg> for SampleMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Iid => SampleMode::IidUniform,
            ModeArg::Deterministic => SampleMode::Deterministic,
            ModeArg::Stratified => SampleMode::StratifiedUniform,
            ModeArg::Midpoint => SampleMode::Midpoint,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Simple,
    Weighted,
}

impl From<KindArg> for GraphKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Simple => GraphKind::Simple,
            KindArg::Weighted => GraphKind::Weighted,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    Auto,
    FoldTracking,
    SweepBisection,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Auto => Strategy::Auto,
            StrategyArg::FoldTracking => Strategy::FoldTracking,
            StrategyArg::SweepBisection => Strategy::SweepBisection,
        }
    }
}

#[derive(Debug, Args)]
pub struct InstanceArgs {
    /// `er:P` or `small-world:HI,LO,RADIUS`.
    #[arg(long, value_parser = parse_graphon)]
    pub graphon: Graphon,
    /// `uniform`, `arcsine-cosine` or `cauchy-like`.
    #[arg(long, value_parser = parse_model)]
    pub model: FrequencyModel,
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "iid")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "simple")]
    pub kind: KindArg,
}

impl InstanceArgs {
    fn spec(&self) -> Result<InstanceSpec> {
        anyhow::ensure!(self.n >= 2, "n must be at least 2");
        Ok(InstanceSpec {
            n: self.n,
            graphon: self.graphon.clone(),
            model: self.model.clone(),
            mode: self.mode.into(),
            kind: self.kind.into(),
        })
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a network and write its adjacency and node data.
    Sample(InstanceArgs),
    /// Critical coupling of the graphon limit for `W ≡ p`.
    KcritGraphon {
        #[arg(long, value_parser = parse_model)]
        model: FrequencyModel,
        #[arg(long)]
        p: f64,
    },
    /// Solve for a phase-locked state by Newton's method.
    Solve {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        coupling: f64,
    },
    /// Continue a locked branch downward in K from a starting coupling.
    Continue {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        k_start: f64,
        #[arg(long)]
        k_min: Option<f64>,
        #[arg(long)]
        ds: Option<f64>,
        #[arg(long, default_value_t = 3000)]
        max_points: usize,
    },
    /// Finite-n critical couplings over sizes and realizations.
    Sweep {
        #[arg(long, value_parser = parse_graphon)]
        graphon: Graphon,
        #[arg(long, value_parser = parse_model)]
        model: FrequencyModel,
        /// Comma-separated network sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        realizations: usize,
        #[arg(long, value_enum, default_value = "auto")]
        strategy: StrategyArg,
    },
    /// Mean-field spectrum for `W ≡ p`, at the onset unless a coupling is given.
    Spectrum {
        #[arg(long, value_parser = parse_model)]
        model: FrequencyModel,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        coupling: Option<f64>,
        /// Add the center-manifold coefficients `a`, `b`.
        #[arg(long)]
        cm: bool,
    },
    /// Run an experiment described by a JSON config file.
    Run { config: PathBuf },
}

/// Exit status of a command: usage, config and I/O errors are reported as
/// `Err`; task failures leave partial results and yield [`Outcome::Partial`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Partial,
}

impl Outcome {
    pub fn code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::Partial => 2,
        }
    }
}

fn to_spec(model: &FrequencyModel) -> FrequencySpec {
    model.clone().into()
}

pub fn run(cli: Cli) -> Result<Outcome> {
    let workers = cli.global.workers;
    if workers == Some(0) {
        return Err(anyhow!("--workers must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.unwrap_or(0)).build()?;
    pool.install(|| dispatch(cli))
}

fn out_dir(global: &GlobalArgs, default: &str) -> PathBuf {
    global.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn newton_options(global: &GlobalArgs) -> NewtonOptions {
    NewtonOptions { tol: global.tol.unwrap_or(1e-10), ..Default::default() }
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn dispatch(cli: Cli) -> Result<Outcome> {
    let g = &cli.global;
    let seed = g.seed.unwrap_or(0);
    match &cli.command {
        Command::Sample(args) => {
            let spec = args.spec()?;
            let inst = Instance::sample(&spec, seed)?;
            let mut out = OutputDir::create(&out_dir(g, "out/sample"))?;
            let mut graph = Vec::new();
            inst.graph.write_csv(&mut graph)?;
            out.write_bytes("graph.csv", &graph, &[])?;
            out.write_csv("nodes.csv", &["j", "x_j", "omega_j"], |b| {
                use std::io::Write;
                writeln!(b, "j,x_j,omega_j")?;
                for (j, (x, w)) in inst.points.as_slice().iter().zip(inst.frequencies.values()).enumerate() {
                    writeln!(b, "{},{x},{w}", j + 1)?;
                }
                Ok(())
            })?;
            print_json(&json!({ "n": spec.n, "seed": seed, "edge_density": inst.graph.edge_density() }))?;
        }
        Command::KcritGraphon { model, p } => {
            let max = meanfield::maximize_gamma(model);
            let k_crit = meanfield::critical_coupling(model, *p)?;
            print_json(&json!({
                "model": model.name(), "p": p, "gamma_star": max.gamma_star,
                "q_star": max.q_star, "K_crit": k_crit,
            }))?;
        }
        Command::Solve { instance, coupling } => {
            let spec = instance.spec()?;
            let p = spec.mean_degree();
            let inst = Instance::sample(&spec, seed)?;
            let sys = inst.system(*coupling)?;
            let guess = inst
                .mean_field_guess(&spec.model, p, *coupling)
                .ok_or_else(|| anyhow!("K = {coupling} is below the mean-field onset; no initial guess"))?;
            let state = match newton_solve(&sys, &guess, &newton_options(g)) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: Newton failed: {e}");
                    return Ok(Outcome::Partial);
                }
            };
            let mut out = OutputDir::create(&out_dir(g, "out/solve"))?;
            out.write_csv("state.csv", STATE_COLUMNS, |b| write_state_csv(b, inst.points.as_slice(), &sys, &state))?;
            out.write_json("state.json", &state.header())?;
            print_json(&serde_json::to_value(state.header())?)?;
        }
        Command::Continue { instance, k_start, k_min, ds, max_points } => {
            let spec = instance.spec()?;
            let p = spec.mean_degree();
            let inst = Instance::sample(&spec, seed)?;
            let sys = inst.system(*k_start)?;
            let guess = inst
                .mean_field_guess(&spec.model, p, *k_start)
                .ok_or_else(|| anyhow!("K = {k_start} is below the mean-field onset; no initial guess"))?;
            let nopts = newton_options(g);
            let traced = newton_solve(&sys, &guess, &nopts).map_err(anyhow::Error::from).and_then(|start| {
                let opts = ContinuationOptions {
                    ds: ds.unwrap_or(0.1),
                    k_min: k_min.unwrap_or(k_start / 6.0),
                    k_max: 1.025 * k_start,
                    max_points: *max_points,
                    tol: nopts.tol,
                    ..Default::default()
                };
                Ok(continue_branch(&sys, &start, &opts)?)
            });
            let branch = match traced {
                Ok(b) => b,
                Err(e) => {
                    eprintln!("error: continuation failed: {e}");
                    return Ok(Outcome::Partial);
                }
            };
            let mut out = OutputDir::create(&out_dir(g, "out/continue"))?;
            out.write_csv("branch.csv", BRANCH_COLUMNS, |b| branch.write_csv(b))?;
            out.write_json("folds.json", &branch.folds)?;
            print_json(&json!({
                "points": branch.points.len(),
                "termination": branch.termination,
                "folds": branch.folds.iter().map(|f| f.k).collect::<Vec<_>>(),
            }))?;
        }
        Command::Sweep { graphon, model, n, realizations, strategy } => {
            let cfg = ExperimentConfig {
                experiment: Experiment::Fig1KcritSweep,
                graphon: graphon.clone(),
                frequency: to_spec(model),
                n: n.clone(),
                seed,
                realizations: *realizations,
                coupling: None,
                k_start: None,
                k_range: None,
                ds: None,
                tol: g.tol.unwrap_or(1e-10),
                strategy: (*strategy).into(),
                mode: SampleMode::default(),
                kind: GraphKind::default(),
                grid_m: None,
                workers: g.workers,
                output_dir: None,
            };
            let text = serde_json::to_string_pretty(&cfg)?;
            cfg.validate(&text)?;
            return execute(cfg, &out_dir(g, "out/sweep"));
        }
        Command::Spectrum { model, p, coupling, cm } => {
            let max = meanfield::maximize_gamma(model);
            let k_crit = meanfield::critical_coupling(model, *p)?;
            let (k, q) = match coupling {
                Some(k) => (*k, meanfield::solve_q(model, *p, *k)?),
                None => (k_crit, max.q_star),
            };
            let s = meanfield::spectrum_report(model, *p, k, q)?;
            let mut v = json!({
                "model": model.name(), "p": p, "K": k, "gamma_star": max.gamma_star, "q_star": max.q_star,
                "K_crit": k_crit, "kappa": s.kappa, "C": s.c, "ess_lo": s.ess_lo, "ess_hi": s.ess_hi,
                "zero_eig_lhs": s.zero_eig_lhs, "stable": s.stable, "point_eigs": s.point_eigs,
            });
            if *cm {
                let mode = meanfield::critical_mode(model, *p, CM_GRID)?;
                let profile = meanfield::profile_at_kappa(model, max.q_star)?;
                let c = meanfield::cm_coefficients(model, *p, k_crit, &|x| profile.eval(x), &|x| mode.eval(x))?;
                v["a"] = json!(c.a);
                v["a_alt"] = json!(c.a_alt);
                v["b"] = json!(c.b);
                v["ab_sign"] = json!(c.product_sign);
            }
            print_json(&v)?;
        }
        Command::Run { config } => {
            let text = std::fs::read_to_string(config)
                .with_context(|| format!("cannot read config {}", config.display()))?;
            let mut cfg = ExperimentConfig::parse(&text).map_err(|e| anyhow!("{}: {e}", config.display()))?;
            if let Some(s) = g.seed {
                cfg.seed = s;
            }
            if let Some(t) = g.tol {
                anyhow::ensure!(t.is_finite() && t > 0.0, "--tol must be positive");
                cfg.tol = t;
            }
            if g.workers.is_some() {
                cfg.workers = g.workers;
            }
            let root = g
                .out
                .clone()
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| Path::new("out").join(cfg.experiment.name()));
            return execute(cfg, &root);
        }
    }
    Ok(Outcome::Success)
}

/// Runs `cfg` inside a pool sized by its `workers` field and writes the
/// manifest and summary next to the results.
pub fn execute(cfg: ExperimentConfig, root: &Path) -> Result<Outcome> {
    let start = Instant::now();
    let mut out = OutputDir::create(root)?;
    let workers = cfg.workers.unwrap_or_else(rayon::current_num_threads);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    let report = pool.install(|| run_experiment(&cfg, &mut out))?;

    let status = if report.failures.is_empty() { "ok" } else { "partial" };
    let mut summary = format!("{} (seed {})\n{}", cfg.experiment.name(), cfg.seed, report.summary);
    for f in &report.failures {
        summary.push_str(&format!("FAILED task {} [{}]: {}\n", f.index, f.task, f.error));
    }
    out.write_bytes("summary.txt", summary.as_bytes(), &[])?;
    let manifest = Manifest {
        experiment: cfg.experiment.name().to_string(),
        config_sha256: cfg.hash(),
        config: serde_json::to_value(&cfg)?,
        versions: Versions::default(),
        master_seed: cfg.seed,
        workers,
        wall_time_s: start.elapsed().as_secs_f64(),
        status,
        failures: report.failures.clone(),
        artifacts: out.artifacts().to_vec(),
        results: report.results,
    };
    out.write_json("manifest.json", &manifest)?;
    print!("{summary}");
    Ok(if report.failures.is_empty() { Outcome::Success } else { Outcome::Partial })
}
