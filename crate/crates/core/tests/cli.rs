use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use smoothed_votes::axioms::{AXIOM_NAMES, LIBRARY_NAMES};
use smoothed_votes::cli::{verify_manifest, ExperimentConfig, RunManifest, SEED_ENV};
use smoothed_votes::noise::MODEL_NAMES;
use smoothed_votes::rules::RULE_NAMES;
use smoothed_votes::smoothed::{read_csv, CSV_HEADER};

fn examples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples")
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smoothedvotes")).args(args).env_remove(SEED_ENV).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, json: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn bundled_config_writes_csv_and_manifest() {
    let out = tempfile::tempdir().unwrap();
    let config = examples().join("prop63.json");
    let o = cli(&["run", config.to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let text = fs::read_to_string(out.path().join("results.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    let rows = read_csv(text.as_bytes()).unwrap();
    assert_eq!(rows.len(), 15);

    let manifest: RunManifest =
        serde_json::from_str(&fs::read_to_string(out.path().join("manifest.json")).unwrap()).unwrap();
    verify_manifest(&manifest).unwrap();
    let cfg = ExperimentConfig::from_json(&fs::read_to_string(&config).unwrap()).unwrap();
    assert_eq!(manifest.config_hash, cfg.hash());
    assert_eq!(manifest.outputs, vec![out.path().join("results.csv")]);
    // Every row's config fields come from the hashed config.
    for r in &rows {
        assert_eq!(r.experiment, cfg.name);
        assert_eq!(r.rule, "plurality");
        assert_eq!(r.axiom, "condorcet");
        assert_eq!(r.model, cfg.model);
        assert_eq!(r.seed, cfg.seed.unwrap());
        assert_eq!(r.trials, cfg.trials);
        assert!(cfg.phi.contains(&r.phi));
        assert!(cfg.z.as_ref().unwrap().contains(&r.z));
        assert_eq!(r.n, 300 * r.z);
        assert!(r.ci_low <= r.p_hat && r.p_hat <= r.ci_high);
    }
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let config = examples().join("resolvability.json");
    let config = config.to_str().unwrap();
    assert!(cli(&["run", config, "--out", a.path().to_str().unwrap(), "--workers", "1"]).status.success());
    assert!(cli(&["run", config, "--out", b.path().to_str().unwrap(), "--workers", "8"]).status.success());
    assert_eq!(fs::read(a.path().join("results.csv")).unwrap(), fs::read(b.path().join("results.csv")).unwrap());
}

#[test]
fn zero_trials_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"name":"x","kind":"sweep","rule":"plurality","axiom":"resolvability","phi":[0.5],
            "n":[10],"trials":0,"seed":1,"base":{"generator":{"kind":"two-way-tie"}}}"#,
    );
    let o = cli(&["run", &config, "--out", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("out/results.csv").exists());
}

#[test]
fn unknown_names_list_the_valid_ones() {
    let profile = examples().join("appendixD.profile");
    let o = cli(&["eval", profile.to_str().unwrap(), "schulze"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("kemeny"));
    let o = cli(&["audit", "plurality", "fairness", "3", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("consistency"));
}

#[test]
fn help_lists_every_registered_name() {
    let help = stdout(&cli(&["--help"]));
    for name in RULE_NAMES.iter().chain(AXIOM_NAMES).chain(MODEL_NAMES).chain(LIBRARY_NAMES) {
        assert!(help.contains(name), "--help is missing {name}");
    }
    assert!(help.contains(SEED_ENV));
}

#[test]
fn eval_reports_winners() {
    let profile = examples().join("appendixD.profile");
    let p = profile.to_str().unwrap();
    let o = cli(&["eval", p, "plurality"]);
    assert!(stdout(&o).contains("winners: a\n"), "{}", stdout(&o));
    assert!(stdout(&o).contains("first places: a 116 b 115 c 69"));
    let o = cli(&["eval", p, "minimax", "--json"]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["winners"], serde_json::json!(["b"]));
    assert_eq!(doc["margins"][1][0], 68);
    assert_eq!(doc["margins"][1][2], 2);
    assert_eq!(doc["margins"][0][2], 162);
}

#[test]
fn empty_profile_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.profile");
    fs::write(&path, "# nothing here\n").unwrap();
    let o = cli(&["eval", path.to_str().unwrap(), "plurality"]);
    assert_eq!(o.status.code(), Some(2));
    fs::write(&path, "3 x a > b > c\n2 x a > b\n").unwrap();
    let o = cli(&["eval", path.to_str().unwrap(), "plurality"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn audit_census() {
    let violations = |args: &[&str]| -> u64 {
        let o = cli(args);
        assert!(o.status.success());
        let text = stdout(&o);
        let line = text.lines().find(|l| l.starts_with("violations:")).unwrap();
        line.split_whitespace().nth(1).unwrap().parse().unwrap()
    };
    assert_eq!(violations(&["audit", "plurality", "majority", "4", "3"]), 0);
    assert!(violations(&["audit", "borda", "condorcet", "5", "3"]) > 0);
    assert_eq!(violations(&["audit", "minimax", "condorcet", "5", "3"]), 0);
    assert_eq!(cli(&["audit", "plurality", "majority", "9", "3"]).status.code(), Some(2));
    assert_eq!(cli(&["audit", "plurality", "majority", "3", "4"]).status.code(), Some(2));
}

#[test]
fn seed_comes_from_flag_then_environment_then_file() {
    let dir = tempfile::tempdir().unwrap();
    let json = r#"{"name":"s","kind":"estimate","rule":"plurality","axiom":"resolvability","phi":[0.5],
        "n":[50],"trials":200,"base":{"generator":{"kind":"two-way-tie"}}}"#;
    let config = write_config(dir.path(), json);
    let out = |name: &str| dir.path().join(name).to_str().unwrap().to_string();

    assert_eq!(cli(&["run", &config, "--out", &out("none")]).status.code(), Some(2));

    let env = Command::new(env!("CARGO_BIN_EXE_smoothedvotes"))
        .args(["run", &config, "--out", &out("env")])
        .env(SEED_ENV, "41")
        .output()
        .unwrap();
    assert!(env.status.success());
    assert!(cli(&["run", &config, "--out", &out("flag"), "--seed", "41"]).status.success());
    let both = Command::new(env!("CARGO_BIN_EXE_smoothedvotes"))
        .args(["run", &config, "--out", &out("both"), "--seed", "41"])
        .env(SEED_ENV, "7")
        .output()
        .unwrap();
    assert!(both.status.success());

    let csv = |name: &str| fs::read(dir.path().join(name).join("results.csv")).unwrap();
    assert_eq!(csv("env"), csv("flag"));
    assert_eq!(csv("both"), csv("flag"));
    let rows = read_csv(&csv("flag")[..]).unwrap();
    assert_eq!(rows[0].seed, 41);
}

#[test]
fn perturb_is_reproducible() {
    let profile = examples().join("appendixD.profile");
    let p = profile.to_str().unwrap();
    let a = cli(&["perturb", p, "--phi", "0.3", "--seed", "5"]);
    let b = cli(&["perturb", p, "--phi", "0.3", "--seed", "5"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let noisy = smoothed_votes::profile::parse_profile(&stdout(&a)).unwrap();
    assert_eq!(noisy.profile.n(), 300);
    assert_eq!(noisy.names, ["a", "b", "c"]);
    assert_eq!(cli(&["perturb", p, "--phi", "0.3"]).status.code(), Some(2));
    assert_eq!(cli(&["perturb", p, "--phi", "1.5", "--seed", "1"]).status.code(), Some(2));
}

#[test]
fn margins_table() {
    let o = cli(&["margins", "--phi-grid", "0,0.5", "--json"]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let at = |i: usize, j: usize| doc[i]["margins"][j].as_f64().unwrap();
    assert!((at(0, 0) - 17.0 / 75.0).abs() < 1e-15);
    assert!((at(1, 1) - 79.0 / 1050.0).abs() < 1e-15);
    assert_eq!(doc[1]["all_positive"], true);
    assert_eq!(cli(&["margins", "--phi-grid", "1.0"]).status.code(), Some(2));
}
