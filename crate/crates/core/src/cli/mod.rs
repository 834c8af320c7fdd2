//! Command-line front end: `run`, `eval`, `audit`, `perturb` and `margins`.
//!
//! Exit status is 0 on success, 2 when the input is rejected and 1 when the
//! run itself fails.

mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use serde_json::json;

pub use config::{
    execute, run, verify_manifest, BaseSource, Diagnostic, ExperimentConfig, ExperimentKind, RunManifest, RunOptions,
    RunOutput, SEED_ENV,
};

use crate::axioms::{brute_force_audit, Axiom, AXIOM_NAMES, LIBRARY_NAMES};
use crate::error::{Error, Result};
use crate::noise::{perturb_profile, trial_rng, NoiseKind, MODEL_NAMES};
use crate::profile::{format_profile, parse_profile, Profile};
use crate::ranking::candidate_name;
use crate::rules::{pairwise_margins, VotingRule, RULE_NAMES};
use crate::smoothed::verify_appendix_d_margins;

#[derive(Debug, Parser)]
#[command(name = "smoothedvotes", version, about = "Voting axioms under ranking noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a JSON experiment config, writing results.csv and manifest.json.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Cap on worker threads; results do not depend on it.
        #[arg(long)]
        workers: Option<usize>,
        /// Overrides the config and the environment.
        #[arg(long)]
        seed: Option<u64>,
        /// Record wall-clock milliseconds in the `ms` column.
        #[arg(long)]
        timings: bool,
    },
    /// Print the winners, first-place counts and pairwise margins of a profile.
    Eval {
        profile: PathBuf,
        rule: String,
        #[arg(long)]
        json: bool,
    },
    /// Exhaustively search small three-candidate profiles for violations.
    Audit { rule: String, axiom: String, n_max: usize, m: usize },
    /// Print a noisy copy of a profile.
    Perturb {
        profile: PathBuf,
        #[arg(long, default_value = "mallows")]
        model: String,
        #[arg(long)]
        phi: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Exact margins of the expected noisy appendixD profile.
    Margins {
        /// Comma-separated noise levels in [0, 1).
        #[arg(long, value_delimiter = ',', required = true)]
        phi_grid: Vec<f64>,
        /// Middle score of the scoring vector (1, s, 0).
        #[arg(long, default_value_t = 0.0)]
        s: f64,
        #[arg(long)]
        json: bool,
    },
}

fn registry() -> String {
    format!(
        "Rules: {}\nAxioms: {}\nModels: {}\nLibrary: {}\nEnvironment: {SEED_ENV} overrides a config seed; --seed overrides both.",
        RULE_NAMES.join(", "),
        AXIOM_NAMES.join(", "),
        MODEL_NAMES.join(", "),
        LIBRARY_NAMES.join(", "),
    )
}

/// Parse `args` (program name first), run, and return the exit status.
pub fn main_with(args: Vec<OsString>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let matches = match Cli::command().after_help(registry()).try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return e.exit_code();
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            return 2;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_validation() {
                2
            } else {
                1
            }
        }
    }
}

fn env_seed() -> Option<String> {
    std::env::var(SEED_ENV).ok()
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Run { config, out: dir, workers, seed, timings } => {
            let opts = RunOptions { workers, seed, env_seed: env_seed(), timings };
            let manifest = run(&config, &dir, &opts)?;
            writeln!(out, "wrote {} rows to {}", manifest.row_ms.len(), dir.join("results.csv").display())?;
        }
        Command::Eval { profile, rule, json } => {
            let named = parse_profile(&fs::read_to_string(profile)?)?;
            let rule: VotingRule = rule.parse()?;
            let p = &named.profile;
            let name = |c: usize| named.names.get(c).cloned().unwrap_or_else(|| candidate_name(c));
            let winners: Vec<String> = rule.evaluate(p)?.into_iter().map(name).collect();
            let mut first = vec![0u64; p.m()];
            for v in p.voters() {
                first[v.top()] += 1;
            }
            let margins = pairwise_margins(p)?.rows();
            if json {
                let first: serde_json::Map<String, serde_json::Value> =
                    first.iter().enumerate().map(|(c, k)| (name(c), json!(k))).collect();
                let doc = json!({
                    "rule": rule.to_string(),
                    "n": p.n(),
                    "candidates": (0..p.m()).map(name).collect::<Vec<_>>(),
                    "winners": winners,
                    "first_place": first,
                    "margins": margins,
                });
                writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
            } else {
                let mut text =
                    format!("rule: {rule}\nvoters: {}\nwinners: {}\nfirst places:", p.n(), winners.join(" "));
                for (c, k) in first.iter().enumerate() {
                    let _ = write!(text, " {} {k}", name(c));
                }
                text.push_str("\nmargins (row over column):\n");
                let width = (0..p.m()).map(|c| name(c).len()).max().unwrap_or(1).max(5);
                let _ = write!(text, "{:width$}", "");
                for c in 0..p.m() {
                    let _ = write!(text, " {:>width$}", name(c));
                }
                for (r, row) in margins.iter().enumerate() {
                    let _ = write!(text, "\n{:width$}", name(r));
                    for v in row {
                        let _ = write!(text, " {v:>width$}");
                    }
                }
                writeln!(out, "{text}")?;
            }
        }
        Command::Audit { rule, axiom, n_max, m } => {
            let rule: VotingRule = rule.parse()?;
            let axiom: Axiom = axiom.parse()?;
            let report = brute_force_audit(&rule, &axiom, n_max, m)?;
            writeln!(out, "{rule} / {axiom}, m = {m}, n <= {n_max}")?;
            writeln!(out, "cases: {}\nviolations: {}", report.cases, report.violations)?;
            for f in report.findings.iter().take(5) {
                writeln!(out, "--- violating profile ({} orderings)", f.multiplicity)?;
                write!(out, "{}", format_profile(&f.profile, None))?;
                if let Some(w) = &f.witness {
                    writeln!(out, "witness: {w:?}")?;
                }
            }
        }
        Command::Perturb { profile, model, phi, seed } => {
            let named = parse_profile(&fs::read_to_string(profile)?)?;
            let model: NoiseKind = model.parse()?;
            let seed = match (seed, env_seed()) {
                (Some(s), _) => s,
                (None, Some(v)) => v.trim().parse().map_err(|_| Error::Config(format!("{SEED_ENV} is not a u64")))?,
                (None, None) => return Err(Error::Config(format!("no seed: pass --seed or set {SEED_ENV}"))),
            };
            let noisy = perturb_profile(model.model(), &named.profile, phi, &mut trial_rng(seed, 0))?;
            // Grouped by ranking; voter order carries no information.
            let grouped = Profile::from_counts(noisy.m(), &noisy.counts()?)?;
            write!(out, "{}", format_profile(&grouped, Some(&named.names)))?;
        }
        Command::Margins { phi_grid, s, json } => {
            let rows = verify_appendix_d_margins(&phi_grid, s)?;
            if json {
                let doc: Vec<_> = rows
                    .iter()
                    .map(|r| {
                        json!({
                            "phi": r.phi,
                            "margins": r.margins,
                            "scaled": r.scaled,
                            "polynomials": r.polynomials,
                            "all_positive": r.all_positive,
                        })
                    })
                    .collect();
                writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
            } else {
                writeln!(out, "{:>5} {:>12} {:>12} {:>12}  positive", "phi", "b>a", "b>c", "a-b score")?;
                for r in rows {
                    writeln!(
                        out,
                        "{:>5} {:>12.9} {:>12.9} {:>12.9}  {}",
                        r.phi, r.margins[0], r.margins[1], r.margins[2], r.all_positive
                    )?;
                }
            }
        }
    }
    Ok(())
}
