//! JSON experiment configurations and the runner that turns them into CSV rows.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::axioms::{brute_force_audit, counterexample_library, Axiom, RhoSchedule};
use crate::error::{arg, Error, Result};
use crate::noise::{hoeffding_bound, starting_concentration_bound, NoiseKind};
use crate::profile::{parse_profile, Profile};
use crate::rules::{parse_decimal, VotingRule};
use crate::smoothed::{
    berry_esseen_gap, convergence_sweep, group_flip_probability, l1_concentration, thick_hyperplane_probability,
    verify_appendix_d_margins, with_workers, write_csv, BaseGenerator, Center, CsvRow, DeltaSchedule, Estimate,
    SweepBase, SweepSpec, MIN_TRIALS,
};

/// Environment variable that overrides the configured seed.
pub const SEED_ENV: &str = "SMOOTHEDVOTES_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Estimate,
    Sweep,
    ThickHyperplane,
    GroupFlip,
    Audit,
    Margins,
    Diagnostics,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Diagnostic {
    /// Concentration around the expected histogram.
    Hoeffding,
    /// Concentration around the base histogram at small noise.
    StartingConcentration,
    /// One histogram coordinate against its normal approximation.
    BerryEsseen,
}

/// Where the base profile comes from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseSource {
    /// A profile file, relative to the config file.
    File(PathBuf),
    /// A counterexample library entry.
    Library(String),
    Generator(BaseGenerator),
}

fn default_model() -> String {
    "mallows".into()
}

fn default_trials() -> u64 {
    10_000
}

fn default_m() -> usize {
    3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axiom: Option<String>,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default)]
    pub phi: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<usize>>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<BaseSource>,
    #[serde(default = "default_m")]
    pub m: usize,
    /// Middle weight of `(1, alpha, 0)` for the `psr-*` library entries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<DeltaSchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<String>,
    /// Middle score for the margins experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<Diagnostic>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("configs always serialize");
        hex::encode(Sha256::digest(json))
    }

    fn needs_seed(&self) -> bool {
        !matches!(self.kind, ExperimentKind::Audit | ExperimentKind::Margins)
    }

    /// Apply the seed precedence: explicit flag, then environment, then file.
    pub fn resolve_seed(&mut self, flag: Option<u64>, env: Option<&str>) -> Result<()> {
        let env = match env {
            Some(v) => {
                Some(v.trim().parse::<u64>().map_err(|_| Error::Config(format!("{SEED_ENV} is not a u64: `{v}`")))?)
            }
            None => None,
        };
        self.seed = flag.or(env).or(self.seed);
        if self.seed.is_none() && self.needs_seed() {
            return Err(Error::Config(format!("no seed: set `seed`, {SEED_ENV}, or --seed")));
        }
        Ok(())
    }

    fn rule(&self) -> Result<Option<VotingRule>> {
        self.rule.as_deref().map(str::parse).transpose()
    }

    fn require_rule(&self) -> Result<VotingRule> {
        self.rule()?.ok_or_else(|| missing("rule"))
    }

    fn axiom(&self) -> Result<Option<Axiom>> {
        self.axiom.as_deref().map(str::parse).transpose()
    }

    fn noise(&self) -> Result<NoiseKind> {
        self.model.parse()
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn sizes(&self, which: &str) -> Result<Vec<usize>> {
        let list = if which == "n" { &self.n } else { &self.z };
        match list {
            Some(v) if v.is_empty() => Err(Error::Config(format!("`{which}` grid is empty"))),
            Some(v) if v.contains(&0) => Err(Error::Config(format!("`{which}` grid contains 0"))),
            Some(v) => Ok(v.clone()),
            None => Err(missing(which)),
        }
    }

    fn generator(&self) -> Result<BaseGenerator> {
        match &self.base {
            Some(BaseSource::Generator(g)) => Ok(g.clone()),
            None => Ok(BaseGenerator::TwoWayTie),
            Some(_) => Err(Error::Config(format!("{:?} experiments need a generated base", self.kind))),
        }
    }

    /// Check everything that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        self.noise()?;
        self.rule()?;
        self.axiom()?;
        if self.kind != ExperimentKind::Audit && self.phi.is_empty() {
            return Err(Error::Config("`phi` grid is empty".into()));
        }
        if let Some(p) = self.phi.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Config(format!("phi {p} outside [0, 1]")));
        }
        if self.needs_seed() && self.trials < MIN_TRIALS {
            return Err(Error::Config(format!("trials must be at least {MIN_TRIALS}, got {}", self.trials)));
        }
        if let Some(d) = &self.delta {
            d.validate()?;
        }
        if let Some(r) = &self.rho {
            r.parse::<RhoSchedule>()?;
        }
        Ok(())
    }
}

fn missing(field: &str) -> Error {
    Error::Config(format!("missing `{field}`"))
}

/// A row with a computed value rather than an estimate.
fn value_row(
    cfg: &ExperimentConfig,
    experiment: String,
    rule: &str,
    axiom: &str,
    phi: f64,
    n: usize,
    value: f64,
) -> CsvRow {
    CsvRow {
        experiment,
        rule: rule.into(),
        axiom: axiom.into(),
        model: cfg.model.clone(),
        phi,
        n,
        z: 1,
        trials: 0,
        p_hat: value,
        ci_low: value,
        ci_high: value,
        seed: cfg.seed(),
        ms: 0,
    }
}

fn load_profile(path: &Path, dir: &Path) -> Result<Profile> {
    let full = if path.is_absolute() { path.to_path_buf() } else { dir.join(path) };
    Ok(parse_profile(&fs::read_to_string(full)?)?.profile)
}

fn sweep_spec(cfg: &ExperimentConfig, dir: &Path) -> Result<SweepSpec> {
    let noise = cfg.noise()?;
    let (rule, axiom, base) = match cfg.base.as_ref().ok_or_else(|| missing("base"))? {
        BaseSource::Generator(g) => {
            let rule = cfg.require_rule()?;
            let axiom = cfg.axiom()?.ok_or_else(|| missing("axiom"))?;
            (rule, axiom, SweepBase::Generated { generator: g.clone(), m: cfg.m, sizes: cfg.sizes("n")? })
        }
        BaseSource::File(path) => {
            let rule = cfg.require_rule()?;
            let axiom = cfg.axiom()?.ok_or_else(|| missing("axiom"))?;
            let factors = cfg.z.clone().map_or(Ok(vec![1]), |_| cfg.sizes("z"))?;
            (rule, axiom, SweepBase::Fixed { profile: load_profile(path, dir)?, factors })
        }
        BaseSource::Library(name) => {
            let alpha = cfg.alpha.as_deref().map(parse_decimal).transpose()?;
            let cx = counterexample_library(name, alpha)?;
            let rule = cfg.rule()?.unwrap_or_else(|| cx.rule.clone());
            let axiom = cfg.axiom()?.unwrap_or(cx.axiom);
            let factors = cfg.z.clone().map_or(Ok(vec![1]), |_| cfg.sizes("z"))?;
            let base = if rule == cx.rule && axiom == cx.axiom {
                SweepBase::Counterexample { cx, factors }
            } else if matches!(axiom, Axiom::Absolute(_)) {
                SweepBase::Fixed { profile: cx.profile()?, factors }
            } else {
                return Err(Error::Config(format!(
                    "library entry {name} is a witness for {} under {}, not {axiom} under {rule}",
                    cx.axiom, cx.rule
                )));
            };
            (rule, axiom, base)
        }
    };
    Ok(SweepSpec {
        experiment: cfg.name.clone(),
        rule,
        axiom,
        base,
        noise,
        phis: cfg.phi.clone(),
        trials: cfg.trials,
        seed: cfg.seed(),
    })
}

/// Results of one run: CSV rows plus the wall-clock time each took.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub rows: Vec<CsvRow>,
    pub timings_ms: Vec<u64>,
}

impl RunOutput {
    fn push(&mut self, row: CsvRow, start: &Instant) {
        self.rows.push(row);
        self.timings_ms.push(start.elapsed().as_millis() as u64);
    }
}

/// Run a validated configuration. `dir` anchors relative profile paths.
pub fn execute(cfg: &ExperimentConfig, dir: &Path) -> Result<RunOutput> {
    cfg.validate()?;
    if cfg.needs_seed() && cfg.seed.is_none() {
        return Err(Error::Config("no seed".into()));
    }
    let mut out = RunOutput { rows: Vec::new(), timings_ms: Vec::new() };
    let noise = cfg.noise()?;
    let model = noise.name();
    let seed = cfg.seed();
    match cfg.kind {
        ExperimentKind::Estimate | ExperimentKind::Sweep => {
            let spec = sweep_spec(cfg, dir)?;
            if cfg.kind == ExperimentKind::Estimate
                && (cfg.phi.len() != 1 || cfg.n.iter().chain(&cfg.z).any(|v| v.len() != 1))
            {
                return Err(Error::Config("an estimate takes a single phi and a single n or z".into()));
            }
            for row in convergence_sweep(&spec)?.rows {
                out.rows.push(row.to_csv(false));
                out.timings_ms.push(row.ms);
            }
        }
        ExperimentKind::ThickHyperplane => {
            let rule = cfg.require_rule()?;
            let delta = cfg.delta.ok_or_else(|| missing("delta"))?;
            let label = format!("thick-hyperplane:delta={delta}");
            for &phi in &cfg.phi {
                let start = Instant::now();
                let rows = thick_hyperplane_probability(
                    &rule,
                    &cfg.generator()?,
                    cfg.m,
                    noise,
                    phi,
                    delta,
                    &cfg.sizes("n")?,
                    cfg.trials,
                    seed,
                )?;
                for (n, e) in rows {
                    out.push(CsvRow::new(&cfg.name, &rule.to_string(), &label, model, phi, n, 1, &e, 0), &start);
                }
            }
        }
        ExperimentKind::GroupFlip => {
            let rule = cfg.require_rule()?;
            let rho: RhoSchedule = cfg.rho.as_deref().ok_or_else(|| missing("rho"))?.parse()?;
            let label = format!("group-stability:rho={rho}");
            for &phi in &cfg.phi {
                let start = Instant::now();
                let rows = group_flip_probability(
                    &rule,
                    &cfg.generator()?,
                    cfg.m,
                    noise,
                    phi,
                    rho,
                    &cfg.sizes("n")?,
                    cfg.trials,
                    seed,
                )?;
                for r in rows {
                    let name = format!("{}/certificate", cfg.name);
                    out.push(
                        CsvRow::new(&name, &rule.to_string(), &label, model, phi, r.n, 1, &r.certificate, 0),
                        &start,
                    );
                    if let Some(e) = r.exact {
                        let name = format!("{}/exact", cfg.name);
                        out.push(CsvRow::new(&name, &rule.to_string(), &label, model, phi, r.n, 1, &e, 0), &start);
                    }
                }
            }
        }
        ExperimentKind::Audit => {
            let start = Instant::now();
            let rule = cfg.require_rule()?;
            let axiom = cfg.axiom()?.ok_or_else(|| missing("axiom"))?;
            let n_max = cfg.n_max.unwrap_or(4);
            let report = brute_force_audit(&rule, &axiom, n_max, cfg.m)?;
            let e = Estimate::new(report.violations, report.cases.max(1), seed)?;
            let mut row = CsvRow::new(&cfg.name, &rule.to_string(), &axiom.to_string(), "none", 0.0, n_max, 1, &e, 0);
            row.trials = report.cases;
            out.push(row, &start);
        }
        ExperimentKind::Margins => {
            let start = Instant::now();
            let s = cfg.s.unwrap_or(0.0);
            let rule = format!("psr:[1,{s},0]");
            for r in verify_appendix_d_margins(&cfg.phi, s)? {
                for (label, v) in ["margin:b-over-a", "margin:b-over-c", "margin:a-over-b-score"].iter().zip(r.margins)
                {
                    out.push(value_row(cfg, cfg.name.clone(), &rule, label, r.phi, 300, v), &start);
                }
            }
        }
        ExperimentKind::Diagnostics => {
            let which = cfg.diagnostic.ok_or_else(|| missing("diagnostic"))?;
            let generator = match &cfg.base {
                None => BaseGenerator::Uniform,
                Some(_) => cfg.generator()?,
            };
            for &n in &cfg.sizes("n")? {
                let base = generator.profile(cfg.m, n)?;
                for &phi in &cfg.phi {
                    let start = Instant::now();
                    match which {
                        Diagnostic::Hoeffding | Diagnostic::StartingConcentration => {
                            for &eps in cfg.eps.as_deref().ok_or_else(|| missing("eps"))? {
                                let (center, bound) = if which == Diagnostic::Hoeffding {
                                    (Center::Expected, hoeffding_bound(eps, n, cfg.m))
                                } else {
                                    (Center::Base, starting_concentration_bound(eps, n))
                                };
                                let e = l1_concentration(noise, &base, phi, center, eps, cfg.trials, seed)?;
                                let label = format!("l1-within:eps={eps}");
                                out.push(CsvRow::new(&cfg.name, "none", &label, model, phi, n, 1, &e, 0), &start);
                                let bound_row =
                                    value_row(cfg, format!("{}/bound", cfg.name), "none", &label, phi, n, bound);
                                out.push(bound_row, &start);
                            }
                        }
                        Diagnostic::BerryEsseen => {
                            let p = berry_esseen_gap(noise, &base, phi, 0, cfg.trials, seed)?;
                            let label = format!("count-at-most:{}", p.threshold);
                            out.push(CsvRow::new(&cfg.name, "none", &label, model, phi, n, 1, &p.empirical, 0), &start);
                            out.push(
                                value_row(cfg, format!("{}/gaussian", cfg.name), "none", &label, phi, n, p.gaussian),
                                &start,
                            );
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// What a run wrote, and under which configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub code_version: String,
    pub started: String,
    pub finished: String,
    pub workers: Option<usize>,
    pub outputs: Vec<PathBuf>,
    pub row_ms: Vec<u64>,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    /// Value of the seed environment variable, if set.
    pub env_seed: Option<String>,
    /// Write real timings into the `ms` column instead of zeros.
    pub timings: bool,
}

/// Run a config file and write `results.csv` and `manifest.json` into `out_dir`.
pub fn run(config_path: &Path, out_dir: &Path, opts: &RunOptions) -> Result<RunManifest> {
    let text = fs::read_to_string(config_path)?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    cfg.resolve_seed(opts.seed, opts.env_seed.as_deref())?;
    cfg.validate()?;
    let dir = config_path.parent().unwrap_or(Path::new("."));
    let started = Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true);
    let mut output = with_workers(opts.workers, || execute(&cfg, dir))??;
    let finished = Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true);
    if opts.timings {
        for (row, ms) in output.rows.iter_mut().zip(&output.timings_ms) {
            row.ms = *ms;
        }
    }
    fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join("results.csv");
    write_csv(&output.rows, fs::File::create(&csv_path)?)?;
    let manifest = RunManifest {
        config_hash: cfg.hash(),
        config: cfg,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        started,
        finished,
        workers: opts.workers,
        outputs: vec![csv_path],
        row_ms: output.timings_ms,
    };
    fs::write(out_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

/// Read back the config from a manifest and check it still hashes to the recorded value.
pub fn verify_manifest(manifest: &RunManifest) -> Result<()> {
    if manifest.config.hash() != manifest.config_hash {
        return arg("manifest config does not match its hash");
    }
    Ok(())
}
