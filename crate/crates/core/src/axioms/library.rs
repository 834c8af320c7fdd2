//! Profiles that violate an axiom with room to spare.
//!
//! Each entry carries a radius `r` in full L1 distance (all `m!` shares): every
//! profile of the same size whose histogram lies closer than `r` is also a
//! counterexample. Radii come from exact plane distances: the rule's planes keep
//! the outcome fixed and the axiom's own margins keep its premise true.

use num_rational::Rational64;
use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    check_absolute, check_witness, condorcet_winner, majority_winner, AbsoluteAxiom, Axiom, RelativeAxiom, Witness,
};
use crate::error::{arg, Error, Result};
use crate::profile::{l1_distance, Histogram, Profile};
use crate::ranking::{Candidate, Ranking, RankingIndex};
use crate::rules::{hyperplanes_of, scoring, Hyperplane, VotingRule};

pub const LIBRARY_NAMES: &[&str] = &[
    "psr-condorcet",
    "psr-majority",
    "psr-iia",
    "plurality-condorcet",
    "plurality-iia",
    "appendixD",
    "condorcet-cycle",
    "copeland-resolvability",
    "minimax-iia",
    "kemeny-iia",
    "minimax-consistency",
    "kemeny-consistency",
    "copeland-consistency",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CounterexampleShape {
    Single(Profile),
    /// Parts that agree on the winners while their union does not.
    Consistency {
        parts: Vec<Profile>,
    },
    /// `a` wins `first`, `b` wins `second`, voter `i` orders `a, b` alike in both.
    Iia {
        first: Profile,
        second: Profile,
        a: Candidate,
        b: Candidate,
    },
}

#[derive(Clone, Debug)]
pub struct StrictCounterexample {
    pub name: String,
    pub rule: VotingRule,
    pub axiom: Axiom,
    pub shape: CounterexampleShape,
    pub radius: Rational64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertifyReport {
    pub samples: usize,
    pub failures: usize,
    /// Largest L1 distance among the sampled profiles.
    pub max_distance: Rational64,
}

fn full_distance(plane: &Hyperplane, h: &Histogram) -> Rational64 {
    plane.full_distance_exact(h)
}

fn rule_radius(rule: &VotingRule, h: &Histogram) -> Result<Rational64> {
    Ok(hyperplanes_of(rule, h.m())?.min_full_distance(h))
}

fn margin_plane(idx: &RankingIndex, x: Candidate, y: Candidate) -> Hyperplane {
    let c = (0..idx.len()).map(|r| if idx.prefers(r, x, y) { 1 } else { -1 }).collect();
    Hyperplane::from_functional(c, "margin").expect("margins are not constant")
}

/// Radius for a single-profile counterexample to an absolute axiom.
fn absolute_radius(axiom: AbsoluteAxiom, rule: &VotingRule, profile: &Profile) -> Result<Rational64> {
    let idx = RankingIndex::get(profile.m())?;
    let h = profile.histogram()?;
    let counts = profile.counts()?;
    let m = profile.m();
    let margins = |x: Candidate| -> Rational64 {
        (0..m).filter(|&y| y != x).map(|y| full_distance(&margin_plane(idx, x, y), &h)).min().unwrap()
    };
    Ok(match axiom {
        AbsoluteAxiom::Resolvability => rule_radius(rule, &h)?,
        AbsoluteAxiom::Condorcet => {
            let cw = condorcet_winner(idx, &counts).ok_or_else(|| Error::Invariant("no Condorcet winner".into()))?;
            rule_radius(rule, &h)?.min(margins(cw))
        }
        AbsoluteAxiom::Majority => {
            let mw = majority_winner(idx, &counts).ok_or_else(|| Error::Invariant("no majority winner".into()))?;
            let c = (0..idx.len()).map(|r| if idx.top(r) == mw { 1 } else { -1 }).collect();
            let plane = Hyperplane::from_functional(c, "majority").expect("nonconstant");
            rule_radius(rule, &h)?.min(full_distance(&plane, &h))
        }
        AbsoluteAxiom::NoCondorcetCycle => {
            let mut r = Rational64::from_integer(2);
            for x in 0..m {
                for y in x + 1..m {
                    r = r.min(full_distance(&margin_plane(idx, x, y), &h));
                }
            }
            r
        }
    })
}

impl StrictCounterexample {
    /// Validate the construction and compute its radius.
    pub fn new(name: &str, rule: VotingRule, axiom: Axiom, shape: CounterexampleShape) -> Result<Self> {
        let radius = match (&axiom, &shape) {
            (Axiom::Absolute(a), CounterexampleShape::Single(p)) => {
                if check_absolute(*a, &rule, p)? {
                    return Err(Error::Invariant(format!("{name}: the profile satisfies {axiom}")));
                }
                absolute_radius(*a, &rule, p)?
            }
            (Axiom::Relative(RelativeAxiom::Consistency), CounterexampleShape::Consistency { parts }) => {
                let whole = Profile::concat(parts)?;
                let witness = Witness::Consistency { parts: parts.clone() };
                if !check_witness(&RelativeAxiom::Consistency, &rule, &whole, &witness)? {
                    return Err(Error::Invariant(format!("{name}: the parts do not violate consistency")));
                }
                let mut eps = rule_radius(&rule, &whole.histogram()?)?;
                for p in parts {
                    eps = eps.min(rule_radius(&rule, &p.histogram()?)?);
                }
                let smallest = parts.iter().map(Profile::n).min().unwrap();
                eps * Rational64::new(smallest as i64, whole.n() as i64)
            }
            (Axiom::Relative(RelativeAxiom::Iia), CounterexampleShape::Iia { first, second, a, b }) => {
                let witness = Witness::Iia { other: second.clone(), a: *a, b: *b };
                if !check_witness(&RelativeAxiom::Iia, &rule, first, &witness)? {
                    return Err(Error::Invariant(format!("{name}: the pair does not violate IIA")));
                }
                rule_radius(&rule, &first.histogram()?)?.min(rule_radius(&rule, &second.histogram()?)?)
            }
            _ => return arg(format!("{name}: shape does not fit axiom {axiom}")),
        };
        if radius <= Rational64::from_integer(0) {
            return Err(Error::Invariant(format!("{name}: violation is not strict (radius 0)")));
        }
        Ok(StrictCounterexample { name: name.to_string(), rule, axiom, shape, radius })
    }

    /// The profile the axiom is checked on: the union of parts, or the first IIA profile.
    pub fn profile(&self) -> Result<Profile> {
        match &self.shape {
            CounterexampleShape::Single(p) => Ok(p.clone()),
            CounterexampleShape::Consistency { parts } => Profile::concat(parts),
            CounterexampleShape::Iia { first, .. } => Ok(first.clone()),
        }
    }

    pub fn n(&self) -> usize {
        match &self.shape {
            CounterexampleShape::Single(p) => p.n(),
            CounterexampleShape::Consistency { parts } => parts.iter().map(Profile::n).sum(),
            CounterexampleShape::Iia { first, .. } => first.n(),
        }
    }

    /// Every profile replicated `z` times; histograms and radius are unchanged.
    pub fn replicate(&self, z: usize) -> Result<StrictCounterexample> {
        let shape = match &self.shape {
            CounterexampleShape::Single(p) => CounterexampleShape::Single(p.replicate(z)?),
            CounterexampleShape::Consistency { parts } => {
                CounterexampleShape::Consistency { parts: parts.iter().map(|p| p.replicate(z)).collect::<Result<_>>()? }
            }
            CounterexampleShape::Iia { first, second, a, b } => {
                CounterexampleShape::Iia { first: first.replicate(z)?, second: second.replicate(z)?, a: *a, b: *b }
            }
        };
        Ok(StrictCounterexample { shape, ..self.clone() })
    }

    /// Whether a profile of size `z * n` is again a counterexample, with the
    /// witness built by matching its voters against the replicated construction.
    pub fn violated_by(&self, perturbed: &Profile) -> Result<bool> {
        if !perturbed.n().is_multiple_of(self.n()) {
            return arg(format!("profile of {} voters is not a multiple of {}", perturbed.n(), self.n()));
        }
        let target = self.replicate(perturbed.n() / self.n())?;
        match (&self.axiom, &target.shape) {
            (Axiom::Absolute(a), _) => Ok(!check_absolute(*a, &self.rule, perturbed)?),
            (Axiom::Relative(axiom), CounterexampleShape::Consistency { parts }) => {
                let parts = decompose_like(perturbed, parts)?;
                check_witness(axiom, &self.rule, perturbed, &Witness::Consistency { parts })
            }
            (Axiom::Relative(axiom), CounterexampleShape::Iia { first, second, a, b }) => {
                let other = couple_iia(first, second, perturbed)?;
                check_witness(axiom, &self.rule, perturbed, &Witness::Iia { other, a: *a, b: *b })
            }
            _ => unreachable!("checked at construction"),
        }
    }

    /// Sample profiles strictly inside the ball and count those that are not counterexamples.
    ///
    /// Each sample replicates the construction enough that one changed voter
    /// stays inside the radius, then replaces a random number of random voters.
    pub fn certify(&self, samples: usize, seed: u64) -> Result<CertifyReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = self.profile()?;
        let idx = RankingIndex::get(base.m())?;
        let n = base.n() as i64;
        // Smallest z with 2 / (z n) < r.
        let z_min = (Rational64::from_integer(2) / (self.radius * n)).floor().to_integer() as usize + 1;
        let mut report = CertifyReport { samples, failures: 0, max_distance: Rational64::from_integer(0) };
        for _ in 0..samples {
            let z = z_min + rng.random_range(0..3);
            let big = base.replicate(z)?;
            let size = big.n();
            // Largest k with 2k / size < r.
            let k_max = ((self.radius * size as i64 / 2).ceil().to_integer() - 1).max(1) as usize;
            let k = rng.random_range(1..=k_max.min(size));
            let mut voters = big.voters().to_vec();
            for i in sample(&mut rng, size, k) {
                voters[i] = idx.ranking(rng.random_range(0..idx.len())).clone();
            }
            let moved = big.with_voters(voters)?;
            let d = l1_distance(&moved.histogram()?, &big.histogram()?)?;
            if d >= self.radius {
                return Err(Error::Invariant(format!("{}: sample left the ball", self.name)));
            }
            report.max_distance = report.max_distance.max(d);
            if !self.violated_by(&moved)? {
                report.failures += 1;
            }
        }
        Ok(report)
    }
}

/// Split `whole` into parts of the given sizes, each as close as possible to its target.
///
/// Voters are first handed to the parts whose target has their ranking; the
/// leftovers fill remaining places in order.
pub fn decompose_like(whole: &Profile, targets: &[Profile]) -> Result<Vec<Profile>> {
    let total: usize = targets.iter().map(Profile::n).sum();
    if total != whole.n() {
        return arg(format!("parts hold {total} voters, profile has {}", whole.n()));
    }
    let idx = RankingIndex::get(whole.m())?;
    let mut pool = whole.counts()?;
    let mut parts: Vec<Vec<u64>> = Vec::new();
    for t in targets {
        let want = t.counts()?;
        let got: Vec<u64> = want.iter().zip(&pool).map(|(w, p)| *w.min(p)).collect();
        pool.iter_mut().zip(&got).for_each(|(p, g)| *p -= g);
        parts.push(got);
    }
    for (part, t) in parts.iter_mut().zip(targets) {
        let mut missing = t.n() as u64 - part.iter().sum::<u64>();
        for (slot, p) in part.iter_mut().zip(pool.iter_mut()) {
            let take = missing.min(*p);
            *slot += take;
            *p -= take;
            missing -= take;
        }
    }
    parts
        .iter()
        .map(|c| {
            let voters = c
                .iter()
                .enumerate()
                .flat_map(|(r, &k)| std::iter::repeat_n(idx.ranking(r).clone(), k as usize))
                .collect();
            Profile::new(voters)
        })
        .collect()
}

/// The second IIA profile that goes with a perturbed first profile.
///
/// Voters still holding their ranking from `first` keep their ranking from
/// `second`; other voters are matched to unclaimed voters of `first` with the same
/// ranking, and any left over simply repeat their new ranking.
pub fn couple_iia(first: &Profile, second: &Profile, perturbed: &Profile) -> Result<Profile> {
    if first.n() != perturbed.n() || second.n() != first.n() {
        return arg("IIA profiles must have equal sizes");
    }
    let idx = RankingIndex::get(first.m())?;
    let mut out = Vec::new();
    couple_iia_indices(
        &first.ranking_indices()?,
        &second.ranking_indices()?,
        &perturbed.ranking_indices()?,
        idx.len(),
        &mut out,
    );
    perturbed.with_voters(out.into_iter().map(|r| idx.ranking(r).clone()).collect())
}

/// [`couple_iia`] on ranking indices; `types` is `m!`.
pub(crate) fn couple_iia_indices(
    first: &[usize],
    second: &[usize],
    perturbed: &[usize],
    types: usize,
    out: &mut Vec<usize>,
) {
    const UNSET: usize = usize::MAX;
    out.clear();
    out.extend(first.iter().zip(second).zip(perturbed).map(|((f, s), p)| if f == p { *s } else { UNSET }));
    let mut free: Vec<Vec<usize>> = vec![Vec::new(); types];
    for j in (0..first.len()).rev().filter(|&j| out[j] == UNSET) {
        free[first[j]].push(j);
    }
    for i in 0..first.len() {
        if out[i] == UNSET {
            out[i] = match free[perturbed[i]].pop() {
                Some(j) => second[j],
                None => perturbed[i],
            };
        }
    }
}

fn counts_profile(rows: &[(&str, u64)]) -> Result<Profile> {
    let mut voters = Vec::new();
    for &(r, k) in rows {
        let ranking = Ranking::new(r.bytes().map(|b| (b - b'a') as Candidate).collect())?;
        voters.extend(std::iter::repeat_n(ranking, k as usize));
    }
    Profile::new(voters)
}

/// Matched IIA pairs given as `(first ranking, second ranking, voters)`.
fn iia_pairs(rows: &[(&str, &str, u64)]) -> Result<CounterexampleShape> {
    let first = counts_profile(&rows.iter().map(|&(r, _, k)| (r, k)).collect::<Vec<_>>())?;
    let second = counts_profile(&rows.iter().map(|&(_, s, k)| (s, k)).collect::<Vec<_>>())?;
    Ok(CounterexampleShape::Iia { first, second, a: 0, b: 1 })
}

fn psr(alpha: Rational64) -> Result<VotingRule> {
    if alpha <= Rational64::from_integer(0) || alpha > Rational64::from_integer(1) {
        return arg(format!("alpha must lie in (0, 1], got {alpha}"));
    }
    scoring(vec![Rational64::from_integer(1), alpha, Rational64::from_integer(0)])
}

fn parse(s: &str) -> Axiom {
    s.parse().expect("registered axiom name")
}

/// A named counterexample. `alpha` is the middle weight of `(1, alpha, 0)` for
/// the `psr-*` entries and defaults to 1/2.
pub fn counterexample_library(name: &str, alpha: Option<Rational64>) -> Result<StrictCounterexample> {
    let half = Rational64::new(1, 2);
    let alpha = alpha.unwrap_or(half);
    let single = |rows: &[(&str, u64)]| counts_profile(rows).map(CounterexampleShape::Single);
    let parts = |a: &[(&str, u64)], b: &[(&str, u64)]| -> Result<CounterexampleShape> {
        Ok(CounterexampleShape::Consistency { parts: vec![counts_profile(a)?, counts_profile(b)?] })
    };
    let cycle = || single(&[("abc", 1), ("bca", 1), ("cab", 1)]);
    let (rule, axiom, shape) = match name {
        "psr-condorcet" | "psr-majority" => {
            let rule = psr(alpha)?;
            // a c b with share 1/2 - alpha / (4 (2 - alpha)), b a c with the rest.
            let low = half - alpha / (Rational64::from_integer(2) - alpha) / 4;
            let n = *low.denom() as u64;
            let k = (low * n as i64).to_integer() as u64;
            let axiom = if name == "psr-condorcet" { "condorcet" } else { "majority" };
            (rule, parse(axiom), single(&[("acb", k), ("bac", n - k)])?)
        }
        "psr-iia" => {
            (psr(alpha)?, parse("iia"), iia_pairs(&[("acb", "abc", 2), ("bca", "bca", 1), ("bac", "bac", 1)])?)
        }
        "plurality-condorcet" => {
            (VotingRule::Plurality, parse("condorcet"), single(&[("abc", 4), ("bac", 3), ("cba", 2)])?)
        }
        "appendixD" => {
            (VotingRule::Plurality, parse("condorcet"), single(&[("abc", 36), ("acb", 80), ("bac", 115), ("cba", 69)])?)
        }
        "plurality-iia" => (
            VotingRule::Plurality,
            parse("iia"),
            iia_pairs(&[("acb", "cab", 2), ("acb", "acb", 1), ("bca", "bca", 2), ("cba", "bac", 1)])?,
        ),
        "condorcet-cycle" => (VotingRule::Copeland, parse("no-condorcet-cycle"), cycle()?),
        "copeland-resolvability" => (VotingRule::Copeland, parse("resolvability"), cycle()?),
        "minimax-iia" => (
            VotingRule::Minimax,
            parse("iia"),
            iia_pairs(&[
                ("abc", "abc", 4),
                ("abc", "cab", 5),
                ("bac", "bca", 4),
                ("bca", "bca", 4),
                ("cab", "cab", 2),
                ("cba", "bac", 1),
            ])?,
        ),
        "kemeny-iia" => (
            VotingRule::Kemeny,
            parse("iia"),
            iia_pairs(&[
                ("abc", "abc", 1),
                ("abc", "cab", 6),
                ("acb", "abc", 1),
                ("acb", "cab", 1),
                ("bac", "bca", 5),
                ("bca", "bac", 1),
                ("bca", "bca", 5),
                ("cab", "abc", 2),
                ("cab", "cab", 2),
            ])?,
        ),
        "minimax-consistency" => (
            VotingRule::Minimax,
            parse("consistency"),
            parts(&[("abc", 6), ("bca", 4), ("cab", 5)], &[("acb", 8), ("bca", 2), ("cab", 3), ("cba", 2)])?,
        ),
        "kemeny-consistency" => (
            VotingRule::Kemeny,
            parse("consistency"),
            parts(&[("abc", 6), ("bca", 4), ("cab", 5)], &[("abc", 1), ("acb", 7), ("cab", 5), ("cba", 2)])?,
        ),
        "copeland-consistency" => (
            VotingRule::Copeland,
            parse("consistency"),
            parts(
                &[("abc", 5), ("bac", 1), ("bca", 5), ("cab", 4)],
                &[("acb", 4), ("bac", 6), ("cab", 1), ("cba", 4)],
            )?,
        ),
        _ => {
            return Err(Error::Config(format!(
                "unknown counterexample `{name}`; expected one of {}",
                LIBRARY_NAMES.join(", ")
            )))
        }
    };
    StrictCounterexample::new(name, rule, axiom, shape)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_is_strict() {
        for name in LIBRARY_NAMES {
            let c = counterexample_library(name, None).unwrap();
            assert!(c.radius > Rational64::from_integer(0), "{name}");
            assert!(c.violated_by(&c.profile().unwrap()).unwrap(), "{name}");
        }
    }

    #[test]
    fn psr_condorcet_half_is_five_and_seven() {
        let c = counterexample_library("psr-condorcet", None).unwrap();
        let p = c.profile().unwrap();
        assert_eq!(p.n(), 12);
        assert_eq!(p.counts().unwrap(), vec![0, 5, 7, 0, 0, 0]);
        assert!(counterexample_library("psr-condorcet", Some(Rational64::from_integer(0))).is_err());
        // alpha = 1/3: low share 1/2 - 1/20 = 9/20.
        let third = counterexample_library("psr-condorcet", Some(Rational64::new(1, 3))).unwrap();
        assert_eq!(third.n(), 20);
    }

    #[test]
    fn cycle_radius_is_its_margin() {
        let c = counterexample_library("condorcet-cycle", None).unwrap();
        assert_eq!(c.radius, Rational64::new(1, 3));
    }

    #[test]
    fn appendix_d_radius_is_half_the_plurality_gap() {
        // a leads b by one voter in 300: shares differ by 1/300, full distance 1/300.
        let c = counterexample_library("appendixD", None).unwrap();
        assert_eq!(c.n(), 300);
        assert_eq!(c.radius, Rational64::new(1, 300));
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(counterexample_library("nope", None), Err(Error::Config(_))));
    }

    #[test]
    fn decomposition_is_exact_on_the_target() {
        let c = counterexample_library("copeland-consistency", None).unwrap();
        let CounterexampleShape::Consistency { parts } = &c.shape else { panic!() };
        let whole = c.profile().unwrap();
        let got = decompose_like(&whole, parts).unwrap();
        for (g, p) in got.iter().zip(parts) {
            assert_eq!(g.counts().unwrap(), p.counts().unwrap());
        }
    }

    #[test]
    fn iia_coupling_keeps_pair_orders() {
        let c = counterexample_library("minimax-iia", None).unwrap().replicate(2).unwrap();
        let CounterexampleShape::Iia { first, second, a, b } = &c.shape else { panic!() };
        let mut voters = first.voters().to_vec();
        voters.swap(0, 30);
        voters[5] = Ranking::new(vec![2, 1, 0]).unwrap();
        let moved = first.with_voters(voters).unwrap();
        let other = couple_iia(first, second, &moved).unwrap();
        for (x, y) in moved.voters().iter().zip(other.voters()) {
            assert_eq!(x.prefers(*a, *b), y.prefers(*a, *b));
        }
    }

    #[test]
    fn certification_small_sample() {
        for name in ["plurality-condorcet", "psr-iia", "condorcet-cycle"] {
            let c = counterexample_library(name, None).unwrap();
            let r = c.certify(50, 7).unwrap();
            assert_eq!(r.failures, 0, "{name}");
            assert!(r.max_distance < c.radius);
        }
    }
}
