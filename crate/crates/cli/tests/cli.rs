use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn kgraphon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgraphon")).args(args).output().expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn run_config(dir: &Path, text: &str) -> Output {
    let cfg = dir.join("config.json");
    fs::write(&cfg, text).unwrap();
    kgraphon(&["--out", dir.join("out").to_str().unwrap(), "run", cfg.to_str().unwrap()])
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("out/manifest.json")).unwrap()).unwrap()
}

/// Every artifact exists, matches its recorded hash and, for CSVs, has the
/// declared header and a consistent field count.
fn check_artifacts(dir: &Path) -> Value {
    use sha2::{Digest, Sha256};
    let m = manifest(dir);
    for a in m["artifacts"].as_array().unwrap() {
        let name = a["file"].as_str().unwrap();
        let bytes = fs::read(dir.join("out").join(name)).unwrap();
        let hex: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(a["sha256"].as_str().unwrap(), hex, "{name}");
        let cols: Vec<&str> = a["columns"].as_array().unwrap().iter().map(|c| c.as_str().unwrap()).collect();
        if cols.is_empty() {
            continue;
        }
        let text = String::from_utf8(bytes).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), cols.join(","), "{name}");
        for line in lines {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), cols.len(), "{name}: {line}");
            assert!(fields.iter().all(|f| f.parse::<f64>().is_ok() || f.chars().all(|c| c.is_ascii_lowercase() || c == '_')));
        }
    }
    m
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let idx = lines.next().unwrap().split(',').position(|c| c == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn graphon_critical_couplings() {
    let cases = [("uniform", "1", 4.0 / std::f64::consts::PI), ("arcsine-cosine", "1", 1.4892), ("cauchy-like", "0.5", 1.0 + 2f64.sqrt())];
    for (model, p, expected) in cases {
        let v = stdout_json(&kgraphon(&["kcrit-graphon", "--model", model, "--p", p]));
        let k = v["K_crit"].as_f64().unwrap();
        assert!((k - expected).abs() < 1e-4, "{model}: {k}");
    }
}

#[test]
fn spectrum_with_center_manifold() {
    let v = stdout_json(&kgraphon(&["spectrum", "--model", "arcsine-cosine", "--p", "0.5", "--cm"]));
    assert!((v["zero_eig_lhs"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    let (a, b) = (v["a"].as_f64().unwrap(), v["b"].as_f64().unwrap());
    assert!(a * b < 0.0);
    assert!((a - v["a_alt"].as_f64().unwrap()).abs() < 1e-6);
}

#[test]
fn usage_and_config_errors_exit_1() {
    assert_eq!(kgraphon(&["kcrit-graphon", "--model", "gauss", "--p", "1"]).status.code(), Some(1));
    assert_eq!(kgraphon(&["run", "/nonexistent/config.json"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let bad = "{\n  \"experiment\": \"fig4_bifurcation_cosine\",\n  \"graphon\": {\"kind\": \"erdos_renyi\", \"p\": 0.5},\n  \"frequency\": {\"kind\": \"arcsine_cosine\"},\n  \"n\": [0],\n  \"seed\": 1\n}";
    let o = run_config(dir.path(), bad);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 5"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn task_failure_exits_2_with_partial_results() {
    let dir = tempfile::tempdir().unwrap();
    // far below the onset there is no locked state to start from
    let o = run_config(
        dir.path(),
        r#"{"experiment": "fig4_bifurcation_cosine", "graphon": {"kind": "erdos_renyi", "p": 0.5},
            "frequency": {"kind": "arcsine_cosine"}, "n": [40], "seed": 2, "k_start": 1.0}"#,
    );
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let m = check_artifacts(dir.path());
    assert_eq!(m["status"], "partial");
    assert_eq!(m["failures"].as_array().unwrap().len(), 1);
    assert!(dir.path().join("out/meanfield_branch.csv").exists());
}

const FIG4: &str = r#"{"experiment": "fig4_bifurcation_cosine", "graphon": {"kind": "erdos_renyi", "p": 0.5},
    "frequency": {"kind": "arcsine_cosine"}, "n": [80], "seed": 7}"#;

#[test]
fn bifurcation_run_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(run_config(a.path(), FIG4).status.code(), Some(0));
    assert_eq!(run_config(b.path(), FIG4).status.code(), Some(0));
    let (ma, mb) = (check_artifacts(a.path()), check_artifacts(b.path()));
    assert_eq!(ma["artifacts"], mb["artifacts"]);
    assert_eq!(ma["config_sha256"], mb["config_sha256"]);
    for f in ["branch.csv", "folds.json", "meanfield_branch.csv", "summary.txt"] {
        assert_eq!(fs::read(a.path().join("out").join(f)).unwrap(), fs::read(b.path().join("out").join(f)).unwrap());
    }

    let folds: Value = serde_json::from_str(&fs::read_to_string(a.path().join("out/folds.json")).unwrap()).unwrap();
    let k_fold = folds[0]["K"].as_f64().unwrap();
    let k_crit = ma["results"]["K_crit"].as_f64().unwrap();
    assert!((k_fold - k_crit).abs() / k_crit < 0.3, "{k_fold} vs {k_crit}");
    let flags = column(&a.path().join("out/branch.csv"), "fold_flag");
    assert_eq!(flags.iter().filter(|&&f| f == 1.0).count(), 1);

    // a different master seed gives a different network
    let c = tempfile::tempdir().unwrap();
    let cfg = c.path().join("config.json");
    fs::write(&cfg, FIG4).unwrap();
    let out = c.path().join("out");
    let o = kgraphon(&["--seed", "8", "--out", out.to_str().unwrap(), "run", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    assert_ne!(fs::read(out.join("branch.csv")).unwrap(), fs::read(a.path().join("out/branch.csv")).unwrap());
    assert_eq!(manifest(c.path())["master_seed"], 8);
}

#[test]
fn profile_run_tracks_mean_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(
        dir.path(),
        r#"{"experiment": "fig3_profile_cauchy", "graphon": {"kind": "erdos_renyi", "p": 1.0},
            "frequency": {"kind": "cauchy_like"}, "n": [150], "seed": 3, "coupling": 3.0}"#,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = check_artifacts(dir.path());
    assert!(m["results"]["sup_deviation"].as_f64().unwrap() < 0.2);
    let out = dir.path().join("out");
    assert_eq!(column(&out.join("state.csv"), "u_j").len(), 150);
    assert_eq!(column(&out.join("profile_meanfield.csv"), "x").len(), 1001);
    let header: Value = serde_json::from_str(&fs::read_to_string(out.join("state.json")).unwrap()).unwrap();
    assert!(header["residual"].as_f64().unwrap() <= 1e-10);
    assert_eq!(header["K"], 3.0);
    assert_eq!(header["stable"], true);
}

#[test]
fn sweep_and_convergence_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let o = kgraphon(&[
        "--out", out.to_str().unwrap(), "--workers", "2", "sweep", "--graphon", "er:1", "--model", "cosine", "--n", "30,60",
        "--realizations", "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(column(&out.join("kcrit_rows.csv"), "K_crit_n").len(), 4);
    assert_eq!(column(&out.join("kcrit_aggregate.csv"), "count"), vec![2.0, 2.0]);

    let dir = tempfile::tempdir().unwrap();
    let o = run_config(
        dir.path(),
        r#"{"experiment": "convergence_diag", "graphon": {"kind": "small_world", "hi": 0.9, "lo": 0.1, "radius": 0.25},
            "frequency": {"kind": "uniform"}, "n": [60, 120], "realizations": 2, "seed": 4}"#,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    check_artifacts(dir.path());
    let rows = dir.path().join("out/convergence.csv");
    let (d, bound) = (column(&rows, "degree_G_W"), column(&rows, "degree_bound"));
    assert_eq!(d.len(), 4);
    assert!(d.iter().zip(&bound).all(|(d, b)| d <= b));
}

#[test]
fn sample_and_solve_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let common = ["--graphon", "er:0.5", "--model", "uniform", "--n", "30"];
    let mut args = vec!["--seed", "5", "--out", out.to_str().unwrap(), "sample"];
    args.extend(common);
    assert!(kgraphon(&args).status.success());
    let graph = fs::read_to_string(out.join("graph.csv")).unwrap();
    assert!(graph.starts_with("n,30\n"));
    assert_eq!(graph.lines().count(), 31);
    assert_eq!(column(&out.join("nodes.csv"), "omega_j").len(), 30);

    let mut args = vec!["--seed", "5", "--out", out.to_str().unwrap(), "solve"];
    args.extend(common);
    args.extend(["--coupling", "6"]);
    let v = stdout_json(&kgraphon(&args));
    assert!(v["residual"].as_f64().unwrap() <= 1e-10);
    assert_eq!(column(&out.join("state.csv"), "u_j").len(), 30);
}
