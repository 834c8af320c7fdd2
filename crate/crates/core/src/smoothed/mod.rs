//! Monte Carlo estimates of how often noisy profiles violate an axiom.
//!
//! Every trial draws its noise from [`trial_rng`]`(seed, trial)`, so a result
//! depends only on its inputs and the seed. Trials run on the rayon pool and
//! are reduced in trial order.

mod diagnostics;
mod report;

use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::axioms::{
    absolute_satisfied, has_condorcet_cycle, AbsoluteAxiom, Axiom, CounterexampleShape, StrictCounterexample,
};
use crate::error::{arg, Error, Result};
use crate::noise::{check_phi, trial_rng, NoiseKind, PerturbationSampler};
use crate::profile::Profile;
use crate::ranking::{Candidate, Ranking, RankingIndex};
use crate::rules::{CompiledRule, VotingRule};

pub use diagnostics::{
    berry_esseen_gap, group_flip_probability, l1_concentration, loglog_slope, thick_hyperplane_probability,
    verify_appendix_d_margins, BerryEsseenPoint, Center, DeltaSchedule, GroupFlipRow, MarginRow,
};
pub use report::{read_csv, write_csv, CsvRow, CSV_HEADER};

/// Fewest trials an estimator accepts.
pub const MIN_TRIALS: u64 = 100;

/// Two-sided 95% standard normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// A violation frequency with its 95% Wilson interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub hits: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

impl Estimate {
    pub fn new(hits: u64, trials: u64, seed: u64) -> Result<Self> {
        if trials == 0 || hits > trials {
            return arg(format!("{hits} hits out of {trials} trials"));
        }
        let (ci_low, ci_high) = wilson_interval(hits, trials);
        Ok(Estimate { hits, trials, p_hat: hits as f64 / trials as f64, ci_low, ci_high, seed })
    }

    /// Whether the two intervals intersect.
    pub fn overlaps(&self, other: &Estimate) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}

/// 95% Wilson score interval for `hits` out of `trials`.
pub fn wilson_interval(hits: u64, trials: u64) -> (f64, f64) {
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // Clamp so rounding never puts p_hat outside its own interval.
    ((center - half).max(0.0).min(p), (center + half).min(1.0).max(p))
}

fn check_trials(trials: u64) -> Result<()> {
    if trials < MIN_TRIALS {
        return arg(format!("need at least {MIN_TRIALS} trials, got {trials}"));
    }
    Ok(())
}

/// Run `f` on a pool of `workers` threads, or on the global pool when `None`.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => arg("worker count must be positive"),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::Invariant(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Count, for each of `K` events, the trials in which it happened.
pub(crate) fn tally<const K: usize, F>(trials: u64, seed: u64, f: F) -> Result<[u64; K]>
where
    F: Fn(&mut ChaCha8Rng) -> Result<[bool; K]> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|t| f(&mut trial_rng(seed, t)))
        .try_fold(
            || [0u64; K],
            |mut acc, r| {
                for (a, hit) in acc.iter_mut().zip(r?) {
                    *a += hit as u64;
                }
                Ok(acc)
            },
        )
        .try_reduce(
            || [0u64; K],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )
}

pub(crate) fn count<F>(trials: u64, seed: u64, f: F) -> Result<u64>
where
    F: Fn(&mut ChaCha8Rng) -> Result<bool> + Sync,
{
    Ok(tally::<1, _>(trials, seed, |rng| Ok([f(rng)?]))?[0])
}

/// Synthetic base profiles for satisfaction experiments.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BaseGenerator {
    /// Half the voters rank `a b ...`, half `b a ...`; an odd voter out ranks the rest first.
    TwoWayTie,
    /// Equal thirds of `a b c`, `b c a`, `c a b`; leftovers take `a b c` then `b c a`.
    ThreeCycle,
    /// Rankings in lexicographic order, cycling.
    Uniform,
    /// Independent uniformly random rankings.
    Random { seed: u64 },
}

impl BaseGenerator {
    pub fn profile(&self, m: usize, n: usize) -> Result<Profile> {
        if n == 0 {
            return arg("a base profile needs at least one voter");
        }
        let idx = RankingIndex::get(m)?;
        let rotated = |first: &[Candidate]| -> Result<Ranking> {
            let mut order = first.to_vec();
            order.extend((0..m).filter(|c| !first.contains(c)));
            Ranking::new(order)
        };
        let voters = match self {
            BaseGenerator::TwoWayTie => {
                let (ab, ba) = (rotated(&[0, 1])?, rotated(&[1, 0])?);
                let odd = Ranking::new((0..m).rev().collect())?;
                (0..n)
                    .map(|i| {
                        if i + 1 == n && n % 2 == 1 {
                            odd.clone()
                        } else if i % 2 == 0 {
                            ab.clone()
                        } else {
                            ba.clone()
                        }
                    })
                    .collect()
            }
            BaseGenerator::ThreeCycle => {
                let cyc = [rotated(&[0, 1, 2])?, rotated(&[1, 2, 0])?, rotated(&[2, 0, 1])?];
                let full = n - n % 3;
                (0..n).map(|i| if i < full { cyc[i % 3].clone() } else { cyc[i - full].clone() }).collect()
            }
            BaseGenerator::Uniform => (0..n).map(|i| idx.ranking(i % idx.len()).clone()).collect(),
            BaseGenerator::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..n).map(|_| idx.ranking(rng.random_range(0..idx.len())).clone()).collect()
            }
        };
        Profile::new(voters)
    }

    pub fn name(&self) -> String {
        match self {
            BaseGenerator::TwoWayTie => "two-way-tie".into(),
            BaseGenerator::ThreeCycle => "three-cycle".into(),
            BaseGenerator::Uniform => "uniform".into(),
            BaseGenerator::Random { seed } => format!("random:{seed}"),
        }
    }
}

/// What a single trial checks.
enum Check {
    Absolute {
        axiom: AbsoluteAxiom,
        voters: Vec<usize>,
    },
    /// Parts are consecutive runs of voters.
    Consistency {
        voters: Vec<usize>,
        ends: Vec<usize>,
    },
    Iia {
        first: Vec<usize>,
        second: Vec<usize>,
        a: Candidate,
        b: Candidate,
    },
}

/// A prepared experiment: noisy draws plus a violation check.
struct Trial {
    sampler: PerturbationSampler,
    rule: CompiledRule,
    check: Check,
}

impl Trial {
    fn new(rule: &VotingRule, m: usize, noise: NoiseKind, phi: f64, check: Check) -> Result<Self> {
        check_phi(phi)?;
        Ok(Trial {
            sampler: PerturbationSampler::new(noise.model(), m, phi)?,
            rule: CompiledRule::new(rule, m)?,
            check,
        })
    }

    fn violated(&self, rng: &mut impl RngCore) -> Result<bool> {
        let idx = self.sampler.index();
        let mut counts = vec![0u64; idx.len()];
        match &self.check {
            Check::Absolute { axiom, voters } => {
                self.sampler.perturb_counts(voters, rng, &mut counts);
                if *axiom == AbsoluteAxiom::NoCondorcetCycle {
                    return Ok(has_condorcet_cycle(idx, &counts));
                }
                let w = self.rule.winners(&counts)?;
                Ok(!absolute_satisfied(*axiom, idx, &counts, &w))
            }
            Check::Consistency { voters, ends } => {
                let mut start = 0;
                let mut part = vec![0u64; idx.len()];
                let mut first = None;
                let mut agree = true;
                for &end in ends {
                    self.sampler.perturb_counts(&voters[start..end], rng, &mut part);
                    counts.iter_mut().zip(&part).for_each(|(c, p)| *c += p);
                    let w = self.rule.winners(&part)?;
                    match &first {
                        None => first = Some(w),
                        Some(f) => agree &= *f == w,
                    }
                    start = end;
                }
                Ok(agree && first.is_some_and(|f| self.rule.winners(&counts).is_ok_and(|w| w != f)))
            }
            Check::Iia { first, second, a, b } => {
                let noisy: Vec<usize> = first.iter().map(|&v| self.sampler.perturb(v, rng.next_u64())).collect();
                let mut other = Vec::with_capacity(first.len());
                crate::axioms::couple_iia_indices(first, second, &noisy, idx.len(), &mut other);
                let single = |w: &crate::rules::WinnerSet, c| w.len() == 1 && w.contains(&c);
                noisy.iter().for_each(|&r| counts[r] += 1);
                if !single(&self.rule.winners(&counts)?, *a) {
                    return Ok(false);
                }
                counts.iter_mut().for_each(|c| *c = 0);
                other.iter().for_each(|&r| counts[r] += 1);
                Ok(single(&self.rule.winners(&counts)?, *b))
            }
        }
    }

    fn estimate(&self, trials: u64, seed: u64) -> Result<Estimate> {
        check_trials(trials)?;
        Estimate::new(count(trials, seed, |rng| self.violated(rng))?, trials, seed)
    }
}

/// Estimate the chance that `rule` violates an absolute axiom on a noisy copy of `base`.
///
/// Relative axioms need a witness template; use [`estimate_counterexample`].
pub fn estimate_violation(
    rule: &VotingRule,
    axiom: &Axiom,
    base: &Profile,
    noise: NoiseKind,
    phi: f64,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    let Axiom::Absolute(a) = axiom else {
        return Err(Error::Config(format!(
            "axiom {axiom} needs a witness template; estimate it through a counterexample"
        )));
    };
    let check = Check::Absolute { axiom: *a, voters: base.ranking_indices()? };
    Trial::new(rule, base.m(), noise, phi, check)?.estimate(trials, seed)
}

fn counterexample_trial(cx: &StrictCounterexample, z: usize, noise: NoiseKind, phi: f64) -> Result<Trial> {
    if z == 0 {
        return arg("replication factor must be positive");
    }
    let cx = cx.replicate(z)?;
    let m = cx.profile()?.m();
    let check = match (&cx.axiom, &cx.shape) {
        (Axiom::Absolute(a), CounterexampleShape::Single(p)) => {
            Check::Absolute { axiom: *a, voters: p.ranking_indices()? }
        }
        (_, CounterexampleShape::Consistency { parts }) => {
            let mut voters = Vec::new();
            let mut ends = Vec::new();
            for p in parts {
                voters.extend(p.ranking_indices()?);
                ends.push(voters.len());
            }
            Check::Consistency { voters, ends }
        }
        (_, CounterexampleShape::Iia { first, second, a, b }) => {
            Check::Iia { first: first.ranking_indices()?, second: second.ranking_indices()?, a: *a, b: *b }
        }
        _ => return Err(Error::Invariant(format!("{}: shape does not fit its axiom", cx.name))),
    };
    Trial::new(&cx.rule, m, noise, phi, check)
}

/// Estimate how often the `z`-fold replicated counterexample is still violated after noise.
///
/// Consistency parts are perturbed separately; the second IIA profile is
/// rebuilt from the noisy first one so the pair keeps every voter's `a, b` order.
pub fn estimate_counterexample(
    cx: &StrictCounterexample,
    z: usize,
    noise: NoiseKind,
    phi: f64,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    counterexample_trial(cx, z, noise, phi)?.estimate(trials, seed)
}

/// Where the profiles of a sweep come from.
#[derive(Clone, Debug)]
pub enum SweepBase {
    /// A fresh profile for each electorate size.
    Generated { generator: BaseGenerator, m: usize, sizes: Vec<usize> },
    /// A fixed profile replicated by each factor.
    Fixed { profile: Profile, factors: Vec<usize> },
    /// A library counterexample replicated by each factor.
    Counterexample { cx: StrictCounterexample, factors: Vec<usize> },
}

/// One grid point of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub experiment: String,
    pub rule: String,
    pub axiom: String,
    pub model: NoiseKind,
    pub phi: f64,
    pub n: usize,
    pub z: usize,
    pub estimate: Estimate,
    /// Wall-clock milliseconds spent on the row.
    pub ms: u64,
}

/// Rows of a sweep in grid order: electorate sizes outer, noise levels inner.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub experiment: String,
    pub rows: Vec<SweepRow>,
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub experiment: String,
    pub rule: VotingRule,
    pub axiom: Axiom,
    pub base: SweepBase,
    pub noise: NoiseKind,
    pub phis: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
}

/// Estimate every (size, phi) grid point. Every point uses the same seed.
pub fn convergence_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    if spec.phis.is_empty() {
        return arg("empty phi grid");
    }
    let sizes = match &spec.base {
        SweepBase::Generated { sizes, .. } => sizes,
        SweepBase::Fixed { factors, .. } | SweepBase::Counterexample { factors, .. } => factors,
    };
    if sizes.is_empty() {
        return arg("empty n/z grid");
    }
    let mut rows = Vec::new();
    for &size in sizes {
        for &phi in &spec.phis {
            let start = Instant::now();
            let (n, z, estimate) = match &spec.base {
                SweepBase::Generated { generator, m, .. } => {
                    let base = generator.profile(*m, size)?;
                    (
                        size,
                        1,
                        estimate_violation(&spec.rule, &spec.axiom, &base, spec.noise, phi, spec.trials, spec.seed)?,
                    )
                }
                SweepBase::Fixed { profile, .. } => {
                    let base = profile.replicate(size)?;
                    (
                        base.n(),
                        size,
                        estimate_violation(&spec.rule, &spec.axiom, &base, spec.noise, phi, spec.trials, spec.seed)?,
                    )
                }
                SweepBase::Counterexample { cx, .. } => {
                    (cx.n() * size, size, estimate_counterexample(cx, size, spec.noise, phi, spec.trials, spec.seed)?)
                }
            };
            rows.push(SweepRow {
                experiment: spec.experiment.clone(),
                rule: spec.rule.to_string(),
                axiom: spec.axiom.to_string(),
                model: spec.noise,
                phi,
                n,
                z,
                estimate,
                ms: start.elapsed().as_millis() as u64,
            });
        }
    }
    Ok(SweepResult { experiment: spec.experiment.clone(), rows })
}

fn grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return arg("a phi grid needs at least two points");
    }
    check_phi(lo)?;
    check_phi(hi)?;
    Ok((0..points)
        .map(|i| if i + 1 == points { hi } else { lo + (hi - lo) * i as f64 / (points - 1) as f64 })
        .collect())
}

/// `points` evenly spaced noise levels from `phi` to 1.
pub fn satisfaction_grid(phi: f64, points: usize) -> Result<Vec<f64>> {
    grid(phi, 1.0, points)
}

/// `points` evenly spaced noise levels from 0 to `phi`.
pub fn violation_grid(phi: f64, points: usize) -> Result<Vec<f64>> {
    grid(0.0, phi, points)
}

/// Worst violation estimate over noise levels in `[phi, 1]`, with the level attaining it.
#[allow(clippy::too_many_arguments)]
pub fn sup_violation(
    rule: &VotingRule,
    axiom: &Axiom,
    base: &Profile,
    noise: NoiseKind,
    phi: f64,
    points: usize,
    trials: u64,
    seed: u64,
) -> Result<(f64, Estimate)> {
    let mut best: Option<(f64, Estimate)> = None;
    for p in satisfaction_grid(phi, points)? {
        let e = estimate_violation(rule, axiom, base, noise, p, trials, seed)?;
        if best.is_none_or(|(_, b)| e.p_hat > b.p_hat) {
            best = Some((p, e));
        }
    }
    Ok(best.expect("grid is nonempty"))
}

/// Smallest violation estimate over noise levels in `[0, phi]` for a replicated counterexample.
pub fn inf_violation(
    cx: &StrictCounterexample,
    z: usize,
    noise: NoiseKind,
    phi: f64,
    points: usize,
    trials: u64,
    seed: u64,
) -> Result<(f64, Estimate)> {
    let mut best: Option<(f64, Estimate)> = None;
    for p in violation_grid(phi, points)? {
        let e = estimate_counterexample(cx, z, noise, p, trials, seed)?;
        if best.is_none_or(|(_, b)| e.p_hat < b.p_hat) {
            best = Some((p, e));
        }
    }
    Ok(best.expect("grid is nonempty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axioms::{counterexample_library, LIBRARY_NAMES};

    fn parse(s: &str) -> Axiom {
        s.parse().unwrap()
    }

    #[test]
    fn wilson_contains_p_hat() {
        for (k, n) in [(0, 100), (1, 100), (50, 100), (100, 100), (3, 1000)] {
            let (lo, hi) = wilson_interval(k, n);
            let p = k as f64 / n as f64;
            assert!(lo <= p && p <= hi, "{k}/{n}");
        }
        // Textbook value: 0 of 100 gives [0, 0.0370].
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.036_994).abs() < 1e-5);
        let wide = wilson_interval(30, 100);
        let narrow = wilson_interval(300, 1000);
        assert!(narrow.1 - narrow.0 < wide.1 - wide.0);
    }

    #[test]
    fn single_voter_is_always_resolvable() {
        let base = Profile::from_strs(&["abc"]).unwrap();
        let e =
            estimate_violation(&VotingRule::Plurality, &parse("resolvability"), &base, NoiseKind::Mallows, 1.0, 500, 1)
                .unwrap();
        assert_eq!(e.hits, 0);
    }

    #[test]
    fn noiseless_counterexamples_always_violate() {
        for name in LIBRARY_NAMES {
            let cx = counterexample_library(name, None).unwrap();
            let e = estimate_counterexample(&cx, 2, NoiseKind::Mallows, 0.0, 100, 3).unwrap();
            assert_eq!(e.hits, 100, "{name}");
        }
    }

    #[test]
    fn relative_axiom_needs_template() {
        let base = Profile::from_strs(&["abc", "bca"]).unwrap();
        let err = estimate_violation(&VotingRule::Borda, &parse("iia"), &base, NoiseKind::Mallows, 0.5, 100, 1);
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn too_few_trials() {
        let base = Profile::from_strs(&["abc"]).unwrap();
        let r = estimate_violation(&VotingRule::Borda, &parse("condorcet"), &base, NoiseKind::Mallows, 0.5, 99, 1);
        assert!(matches!(r, Err(Error::Argument(_))));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let cx = counterexample_library("minimax-iia", None).unwrap();
        let run = |k| {
            with_workers(Some(k), || estimate_counterexample(&cx, 3, NoiseKind::Mallows, 0.2, 400, 9)).unwrap().unwrap()
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn estimator_matches_profile_level_check() {
        // Same draws through the index path and through whole profiles.
        let cx = counterexample_library("plurality-iia", None).unwrap().replicate(2).unwrap();
        let trial = counterexample_trial(&cx, 1, NoiseKind::Mallows, 0.4).unwrap();
        for t in 0..200 {
            let fast = trial.violated(&mut trial_rng(5, t)).unwrap();
            let noisy = crate::noise::perturb_profile(
                NoiseKind::Mallows.model(),
                &cx.profile().unwrap(),
                0.4,
                &mut trial_rng(5, t),
            )
            .unwrap();
            assert_eq!(fast, cx.violated_by(&noisy).unwrap(), "trial {t}");
        }
    }

    #[test]
    fn generators() {
        let tie = BaseGenerator::TwoWayTie.profile(3, 4).unwrap();
        assert_eq!(tie.counts().unwrap(), vec![2, 0, 2, 0, 0, 0]);
        let odd = BaseGenerator::TwoWayTie.profile(3, 5).unwrap();
        assert_eq!(odd.counts().unwrap(), vec![2, 0, 2, 0, 0, 1]);
        let cyc = BaseGenerator::ThreeCycle.profile(3, 7).unwrap();
        assert_eq!(cyc.counts().unwrap(), vec![3, 0, 0, 2, 2, 0]);
        assert_eq!(BaseGenerator::Uniform.profile(4, 48).unwrap().counts().unwrap(), vec![2; 24]);
        let r = BaseGenerator::Random { seed: 4 };
        assert_eq!(r.profile(3, 20).unwrap(), r.profile(3, 20).unwrap());
        assert!(BaseGenerator::Uniform.profile(3, 0).is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(satisfaction_grid(0.5, 3).unwrap(), vec![0.5, 0.75, 1.0]);
        assert_eq!(violation_grid(0.3, 4).unwrap().last(), Some(&0.3));
        assert!(violation_grid(0.3, 1).is_err());
    }

    #[test]
    fn single_point_sweep_equals_estimator() {
        let cx = counterexample_library("psr-condorcet", None).unwrap();
        let spec = SweepSpec {
            experiment: "one".into(),
            rule: cx.rule.clone(),
            axiom: cx.axiom,
            base: SweepBase::Counterexample { cx: cx.clone(), factors: vec![4] },
            noise: NoiseKind::Mallows,
            phis: vec![0.1],
            trials: 300,
            seed: 8,
        };
        let rows = convergence_sweep(&spec).unwrap().rows;
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].n, 48);
        assert_eq!(rows[0].estimate, estimate_counterexample(&cx, 4, NoiseKind::Mallows, 0.1, 300, 8).unwrap());
    }

    #[test]
    fn sup_and_inf_pick_extremes() {
        let base = BaseGenerator::TwoWayTie.profile(3, 40).unwrap();
        let (_, sup) =
            sup_violation(&VotingRule::Plurality, &parse("resolvability"), &base, NoiseKind::Mallows, 0.5, 3, 200, 2)
                .unwrap();
        let cx = counterexample_library("plurality-condorcet", None).unwrap();
        let (phi, inf) = inf_violation(&cx, 2, NoiseKind::Mallows, 0.3, 3, 200, 2).unwrap();
        assert!(sup.p_hat > 0.0);
        assert!(phi > 0.0 && inf.p_hat < 1.0);
    }
}
