//! The acceptance suite: each check runs one experiment at full size and
//! reports whether its threshold was met.
//!
//! Thresholds and grids are fixed here. A failing check is reported, never
//! retuned.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::Rng;
use smoothed_votes::axioms::{
    absolute_satisfied, brute_force_audit, counterexample_library, oracle_absolute_satisfied, oracle_winners,
    AbsoluteAxiom, Axiom, RhoSchedule, LIBRARY_NAMES,
};
use smoothed_votes::cli::{execute, ExperimentConfig};
use smoothed_votes::error::Result;
use smoothed_votes::noise::{
    closed_form_inverse, covariance, min_eigenvalue, min_eigenvalue_floor, min_prob, pmf, trial_rng, NoiseKind,
};
use smoothed_votes::profile::Profile;
use smoothed_votes::ranking::RankingIndex;
use smoothed_votes::rules::{pairwise_margins, CompiledRule, VotingRule};
use smoothed_votes::smoothed::{
    group_flip_probability, loglog_slope, verify_appendix_d_margins, with_workers, write_csv, BaseGenerator, CsvRow,
};

const SEED: u64 = 20_240_611;
const TRIALS: u64 = 10_000;

/// Result of one check.
#[derive(Debug)]
pub struct Outcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Option<Duration>,
}

impl Outcome {
    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        format!("{verdict} {} ({:.1} s): {}", self.name, self.elapsed.as_secs_f64(), self.detail)
    }
}

/// Runs checks, keeping every config and CSV it produced for the rerun check.
pub struct Suite {
    out_dir: PathBuf,
    runs: Vec<(ExperimentConfig, Vec<u8>)>,
}

fn fmt_p(rows: &[f64]) -> String {
    rows.iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>().join(" ")
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn csv_bytes(rows: &[CsvRow]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(buf)
}

fn config(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json).expect("acceptance configs are well formed")
}

impl Suite {
    pub fn new(out_dir: &Path) -> Result<Self> {
        fs::create_dir_all(out_dir)?;
        Ok(Suite { out_dir: out_dir.to_path_buf(), runs: Vec::new() })
    }

    /// Execute on one worker, save the CSV, and keep it for the rerun check.
    fn run(&mut self, cfg: ExperimentConfig) -> Result<Vec<CsvRow>> {
        let out = with_workers(Some(1), || execute(&cfg, Path::new(".")))??;
        let bytes = csv_bytes(&out.rows)?;
        fs::write(self.out_dir.join(format!("{}.csv", cfg.name)), &bytes)?;
        self.runs.push((cfg, bytes));
        Ok(out.rows)
    }

    fn timed(
        &mut self,
        name: &'static str,
        budget: Option<u64>,
        f: impl FnOnce(&mut Self) -> Result<(bool, String)>,
    ) -> Outcome {
        let start = Instant::now();
        let (pass, detail) = f(self).unwrap_or_else(|e| (false, format!("error: {e}")));
        let elapsed = start.elapsed();
        let budget = budget.map(Duration::from_secs);
        let over = budget.is_some_and(|b| elapsed > b);
        let detail = if over { format!("{detail}; over the {} s budget", budget.unwrap().as_secs()) } else { detail };
        Outcome { name, pass: pass && !over, detail, elapsed, budget }
    }

    /// Every check, in order. The rerun check comes last since it replays the others.
    pub fn all(&mut self, mut report: impl FnMut(&Outcome)) -> Vec<Outcome> {
        type Check = fn(&mut Suite) -> Result<(bool, String)>;
        let checks: [(&'static str, Option<u64>, Check); 10] = [
            ("covariance-closed-form", Some(5), Suite::covariance),
            ("hoeffding-bound", Some(60), Suite::hoeffding),
            ("normal-approximation-decay", Some(300), Suite::berry_esseen),
            ("resolvability", Some(300), Suite::resolvability),
            ("strict-counterexamples", Some(600), Suite::counterexamples),
            ("exact-margins", Some(1), Suite::margins),
            ("high-noise-condorcet", Some(120), Suite::high_noise),
            ("group-stability", Some(300), Suite::group_stability),
            ("brute-force-oracle", Some(120), Suite::brute_force),
            ("determinism", None, Suite::determinism),
        ];
        checks
            .into_iter()
            .map(|(name, budget, f)| {
                let outcome = self.timed(name, budget, f);
                report(&outcome);
                outcome
            })
            .collect()
    }

    fn covariance(&mut self) -> Result<(bool, String)> {
        let mut rng = trial_rng(SEED, 0);
        let idx = RankingIndex::get(3)?;
        let (mut worst_err, mut worst_ratio) = (0.0f64, f64::INFINITY);
        for case in 0..20 {
            let noise = if case % 2 == 0 { NoiseKind::Mallows } else { NoiseKind::UniformMixture };
            let n = rng.random_range(1..=50);
            let phi = rng.random_range(0.05..=1.0);
            let profile = BaseGenerator::Random { seed: rng.random() }.profile(3, n)?;
            for (r, _) in profile.counts()?.iter().enumerate().filter(|(_, &c)| c > 0) {
                let single = Profile::new(vec![idx.ranking(r).clone()])?;
                let cov = covariance(noise.model(), &single, phi)?;
                let inv = closed_form_inverse(&pmf(noise.model(), idx.ranking(r), phi)?)?;
                let prod = cov * inv;
                for i in 0..prod.nrows() {
                    for j in 0..prod.ncols() {
                        let target = if i == j { 1.0 } else { 0.0 };
                        worst_err = worst_err.max((prod[(i, j)] - target).abs());
                    }
                }
            }
            let floor = min_eigenvalue_floor(min_prob(noise.model(), phi, 3)?, 3, n);
            worst_ratio = worst_ratio.min(min_eigenvalue(&covariance(noise.model(), &profile, phi)?) / floor);
        }
        let pass = worst_err <= 1e-9 && worst_ratio >= 1.0;
        Ok((pass, format!("max |Cov M^-1 - I| = {worst_err:.2e}, min eigenvalue / floor = {worst_ratio:.3}")))
    }

    fn hoeffding(&mut self) -> Result<(bool, String)> {
        let rows = self.run(config(&format!(
            r#"{{"name":"hoeffding","kind":"diagnostics","diagnostic":"hoeffding","n":[500,2000],
                "phi":[0.3,1.0],"eps":[0.1,0.2],"trials":{TRIALS},"seed":{SEED}}}"#
        )))?;
        let bounds: BTreeMap<(usize, u64, String), f64> = rows
            .iter()
            .filter(|r| r.experiment == "hoeffding/bound")
            .map(|r| ((r.n, r.phi.to_bits(), r.axiom.clone()), r.p_hat))
            .collect();
        let mut cells = Vec::new();
        for r in rows.iter().filter(|r| r.experiment == "hoeffding") {
            let bound = bounds[&(r.n, r.phi.to_bits(), r.axiom.clone())];
            cells.push((
                r.p_hat >= bound,
                format!("n={} phi={} {}: {:.4} vs {:.4}", r.n, r.phi, r.axiom, r.p_hat, bound),
            ));
        }
        let pass = cells.len() == 8 && cells.iter().all(|c| c.0);
        let failing: Vec<_> = cells.iter().filter(|c| !c.0).map(|c| c.1.clone()).collect();
        let detail = if failing.is_empty() {
            format!("{} cells, empirical at or above the bound in all", cells.len())
        } else {
            format!("below the bound: {}", failing.join("; "))
        };
        Ok((pass, detail))
    }

    fn berry_esseen(&mut self) -> Result<(bool, String)> {
        let rows = self.run(config(&format!(
            r#"{{"name":"berry-esseen","kind":"diagnostics","diagnostic":"berry-esseen","n":[50,200,800,3200],
                "phi":[0.5],"trials":100000,"seed":{SEED}}}"#
        )))?;
        let gaussian: BTreeMap<usize, f64> =
            rows.iter().filter(|r| r.experiment == "berry-esseen/gaussian").map(|r| (r.n, r.p_hat)).collect();
        let (ns, gaps): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter(|r| r.experiment == "berry-esseen")
            .map(|r| (r.n as f64, (r.p_hat - gaussian[&r.n]).abs()))
            .unzip();
        let slope = loglog_slope(&ns, &gaps);
        let pass = slope.is_some_and(|s| s <= -0.3);
        Ok((
            pass,
            format!("gaps {} ; slope {:?} (need <= -0.3)", fmt_p(&gaps), slope.map(|s| (s * 1000.0).round() / 1000.0)),
        ))
    }

    fn resolvability(&mut self) -> Result<(bool, String)> {
        let sizes = [100usize, 400, 1600, 6400];
        let sweep = |name: &str, rule: &str, base: &str| {
            config(&format!(
                r#"{{"name":"{name}","kind":"sweep","rule":"{rule}","axiom":"resolvability",
                    "base":{{"generator":{{"kind":"{base}"}}}},"n":[100,400,1600,6400],"phi":[0.5,1.0],
                    "trials":{TRIALS},"seed":{SEED}}}"#
            ))
        };
        let plurality = self.run(sweep("resolvability-plurality", "plurality", "two-way-tie"))?;
        let copeland = self.run(sweep("resolvability-copeland", "copeland", "three-cycle"))?;
        let mut pass = true;
        let mut parts = Vec::new();
        for phi in [0.5, 1.0] {
            let ps: Vec<f64> = plurality.iter().filter(|r| r.phi == phi).map(|r| r.p_hat).collect();
            let slope = loglog_slope(&sizes.map(|n| n as f64), &ps);
            let ok = strictly_decreasing(&ps) && slope.is_some_and(|s| s <= -0.35);
            pass &= ok;
            parts.push(format!("plurality phi={phi}: {} slope {:.3}", fmt_p(&ps), slope.unwrap_or(f64::NAN)));
            let last = copeland.iter().find(|r| r.phi == phi && r.n == 6400).map_or(f64::NAN, |r| r.p_hat);
            pass &= last >= 0.2;
            parts.push(format!("copeland phi={phi} at n=6400: {last:.4} (need >= 0.2)"));
        }
        Ok((pass, parts.join("; ")))
    }

    fn counterexamples(&mut self) -> Result<(bool, String)> {
        let mut uncertified = Vec::new();
        // Best entry per (rule, axiom) pair: smallest zn reaching 0.99.
        let mut pairs: BTreeMap<String, Option<(usize, String)>> = BTreeMap::new();
        for name in LIBRARY_NAMES {
            let cx = counterexample_library(name, None)?;
            let report = cx.certify(1000, SEED)?;
            if report.failures > 0 {
                uncertified.push(format!("{name} ({} of {})", report.failures, report.samples));
            }
            let zs: Vec<usize> = [500, 1000, 2000, 5000].map(|t| (t / cx.n()).max(1)).to_vec();
            let rows = self.run(config(&format!(
                r#"{{"name":"onset-{name}","kind":"sweep","base":{{"library":"{name}"}},"phi":[0.05],
                    "z":{zs:?},"trials":{TRIALS},"seed":{SEED}}}"#
            )))?;
            let reached = rows.iter().find(|r| r.n <= 5000 && r.p_hat >= 0.99).map(|r| (r.n, name.to_string()));
            let key = format!("{}/{}", cx.rule, cx.axiom);
            let slot = pairs.entry(key).or_insert(None);
            if let Some(hit) = reached {
                if slot.as_ref().is_none_or(|s| hit.0 < s.0) {
                    *slot = Some(hit);
                }
            }
        }
        let missed: Vec<&String> = pairs.iter().filter(|(_, v)| v.is_none()).map(|(k, _)| k).collect();
        let reached: Vec<String> =
            pairs.iter().filter_map(|(k, v)| v.as_ref().map(|(n, e)| format!("{k} zn={n} ({e})"))).collect();
        let pass = uncertified.is_empty() && missed.is_empty();
        Ok((
            pass,
            format!(
                "{} entries certified with {} failing; pairs reaching 0.99: {}; missed: {:?}",
                LIBRARY_NAMES.len(),
                uncertified.len(),
                reached.join(", "),
                missed
            ),
        ))
    }

    fn margins(&mut self) -> Result<(bool, String)> {
        let grid: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        let rows = verify_appendix_d_margins(&grid, 0.0)?;
        let mut worst = (0.0f64, 0.0f64);
        let mut off = Vec::new();
        for r in &rows {
            for i in 0..3 {
                let d = (r.margins[i] - r.polynomials[i]).abs();
                if d > worst.0 {
                    worst = (d, r.phi);
                }
            }
            if (0..3).any(|i| (r.margins[i] - r.polynomials[i]).abs() > 1e-12) {
                off.push(r.phi);
            }
        }
        let scaled_ok = rows.iter().all(|r| r.scaled_match.iter().all(|&b| b));
        // Margins counted straight off the profile.
        let profile = counterexample_library("appendixD", None)?.profile()?;
        let n = profile.n() as f64;
        let pm = pairwise_margins(&profile)?;
        let mut first = [0i64; 3];
        for v in profile.voters() {
            first[v.top()] += 1;
        }
        let direct = [pm.margin(1, 0) as f64 / n, pm.margin(1, 2) as f64 / n, (first[0] - first[1]) as f64 / n];
        let direct_ok = (0..3).all(|i| {
            (rows[0].margins[i] - direct[i]).abs() <= 1e-12 && (direct[i] - rows[0].polynomials[i]).abs() <= 1e-12
        });
        let pass = off.is_empty() && direct_ok;
        Ok((
            pass,
            format!(
                "phi=0 matches direct counts {direct:?}: {direct_ok}; polynomial mismatch beyond 1e-12 at phi {off:?} \
                 (largest {:.3e} at phi={}); normalizer-scaled margins match exactly: {scaled_ok}",
                worst.0, worst.1
            ),
        ))
    }

    fn high_noise(&mut self) -> Result<(bool, String)> {
        let mut pass = true;
        let mut parts = Vec::new();
        for rule in ["plurality", "borda"] {
            let rows = self.run(config(&format!(
                r#"{{"name":"high-noise-{rule}","kind":"estimate","rule":"{rule}","axiom":"condorcet",
                    "base":{{"library":"appendixD"}},"phi":[0.9],"z":[16],"trials":{TRIALS},"seed":{SEED}}}"#
            )))?;
            let p = rows[0].p_hat;
            pass &= p >= 0.95;
            parts.push(format!("{rule}: {p:.4} [{:.4}, {:.4}]", rows[0].ci_low, rows[0].ci_high));
        }
        Ok((pass, format!("{} (need >= 0.95)", parts.join("; "))))
    }

    fn group_stability(&mut self) -> Result<(bool, String)> {
        let sizes = [100, 1000, 10_000];
        self.run(config(&format!(
            r#"{{"name":"group-stability","kind":"group-flip","rule":"plurality","rho":"pow:1,0.25",
                "base":{{"generator":{{"kind":"two-way-tie"}}}},"n":{sizes:?},"phi":[0.5],
                "trials":{TRIALS},"seed":{SEED}}}"#
        )))?;
        let rows = with_workers(Some(1), || {
            group_flip_probability(
                &VotingRule::Plurality,
                &BaseGenerator::TwoWayTie,
                3,
                NoiseKind::Mallows,
                0.5,
                RhoSchedule::power(1.0, 0.25)?,
                &sizes,
                TRIALS,
                SEED,
            )
        })??;
        let exact: Vec<f64> = rows.iter().map(|r| r.exact.map_or(f64::NAN, |e| e.p_hat)).collect();
        let cert: Vec<f64> = rows.iter().map(|r| r.certificate.p_hat).collect();
        let contradictions: u64 = rows.iter().map(|r| r.contradictions).sum();
        let last = exact[2];
        let pass = strictly_decreasing(&exact) && last <= 0.05 && contradictions == 0;
        Ok((
            pass,
            format!(
                "exact {} ; certificate {} ; rho {:?} ; at n=10000 {last:.4} (need <= 0.05) ; contradictions {contradictions}",
                fmt_p(&exact),
                fmt_p(&cert),
                rows.iter().map(|r| r.rho).collect::<Vec<_>>()
            ),
        ))
    }

    fn brute_force(&mut self) -> Result<(bool, String)> {
        let idx = RankingIndex::get(3)?;
        let rules = ["plurality", "borda", "veto", "minimax", "copeland", "kemeny"];
        let axioms = [
            AbsoluteAxiom::Resolvability,
            AbsoluteAxiom::Condorcet,
            AbsoluteAxiom::Majority,
            AbsoluteAxiom::NoCondorcetCycle,
        ];
        let profiles = histograms(idx.len(), 4);
        let weight: u64 = profiles.iter().map(|c| multiplicity(c)).sum();
        let mut disagreements = Vec::new();
        for name in rules {
            let rule: VotingRule = name.parse()?;
            let compiled = CompiledRule::new(&rule, 3)?;
            for counts in &profiles {
                let voters: Vec<_> =
                    counts.iter().enumerate().flat_map(|(r, &c)| (0..c).map(move |_| idx.ranking(r).clone())).collect();
                let winners = compiled.winners(counts)?;
                if winners != oracle_winners(&rule, &voters)? {
                    disagreements.push(format!("{name} winners on {counts:?}"));
                }
                for a in axioms {
                    if absolute_satisfied(a, idx, counts, &winners) != oracle_absolute_satisfied(a, &rule, &voters)? {
                        disagreements.push(format!("{name} {a:?} on {counts:?}"));
                    }
                }
            }
        }
        let satisfied = [
            ("plurality", "majority"),
            ("plurality", "consistency"),
            ("borda", "consistency"),
            ("minimax", "condorcet"),
            ("minimax", "majority"),
            ("kemeny", "condorcet"),
            ("kemeny", "majority"),
            ("copeland", "condorcet"),
            ("copeland", "majority"),
        ];
        let violated = [
            ("plurality", "condorcet"),
            ("plurality", "iia"),
            ("borda", "condorcet"),
            ("borda", "majority"),
            ("borda", "iia"),
            ("minimax", "consistency"),
            ("minimax", "iia"),
            ("kemeny", "consistency"),
            ("kemeny", "iia"),
            ("copeland", "consistency"),
            ("copeland", "iia"),
            ("copeland", "resolvability"),
        ];
        let mut bad_cells = Vec::new();
        for (expect_zero, cells) in [(true, &satisfied[..]), (false, &violated[..])] {
            for (rule, axiom) in cells {
                let axiom: Axiom = axiom.parse()?;
                let report = brute_force_audit(&rule.parse()?, &axiom, 5, 3)?;
                if (report.violations == 0) != expect_zero {
                    bad_cells.push(format!("{rule}/{axiom}: {} violations", report.violations));
                }
            }
        }
        let pass = weight == 1554 && disagreements.is_empty() && bad_cells.is_empty();
        Ok((
            pass,
            format!(
                "{weight} weighted profiles x {} rules; {} predicate disagreements; {} of {} table cells off{}",
                rules.len(),
                disagreements.len(),
                bad_cells.len(),
                satisfied.len() + violated.len(),
                if bad_cells.is_empty() { String::new() } else { format!(": {}", bad_cells.join(", ")) }
            ),
        ))
    }

    fn determinism(&mut self) -> Result<(bool, String)> {
        let mut differing = Vec::new();
        for (cfg, bytes) in &self.runs {
            let rerun = with_workers(Some(4), || execute(cfg, Path::new(".")))??;
            if &csv_bytes(&rerun.rows)? != bytes {
                differing.push(cfg.name.clone());
            }
        }
        Ok((
            differing.is_empty(),
            format!("{} experiments rerun on 4 workers; differing: {differing:?}", self.runs.len()),
        ))
    }
}

/// Every vote-count vector over `types` rankings with 1 to `n_max` voters.
fn histograms(types: usize, n_max: u64) -> Vec<Vec<u64>> {
    fn fill(prefix: &mut Vec<u64>, left: u64, types: usize, out: &mut Vec<Vec<u64>>) {
        if prefix.len() + 1 == types {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            fill(prefix, left - k, types, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for n in 1..=n_max {
        fill(&mut Vec::new(), n, types, &mut out);
    }
    out
}

/// Ordered voter tuples sharing one histogram: `n! / prod c!`.
fn multiplicity(counts: &[u64]) -> u64 {
    let fact = |k: u64| (1..=k).product::<u64>();
    fact(counts.iter().sum()) / counts.iter().map(|&c| fact(c)).product::<u64>()
}
