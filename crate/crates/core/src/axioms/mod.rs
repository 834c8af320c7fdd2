//! Axiom predicates, witnesses for relative axioms, and group stability.

mod audit;
mod library;
mod stability;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::profile::Profile;
use crate::ranking::{Candidate, Ranking, RankingIndex};
use crate::rules::{pairwise_supporters, CompiledRule, VotingRule, WinnerSet};

pub use audit::{brute_force_audit, oracle_absolute_satisfied, oracle_winners, AuditFinding, AuditReport};
pub(crate) use library::couple_iia_indices;
pub use library::{
    counterexample_library, couple_iia, decompose_like, CertifyReport, CounterexampleShape, StrictCounterexample,
    LIBRARY_NAMES,
};
pub use stability::{
    brute_force_stability, certify_stability, check_group_stability, plurality_exact_stability, RhoSchedule,
    StabilityVerdict,
};

/// Axiom names as accepted by [`Axiom::from_str`].
pub const AXIOM_NAMES: &[&str] = &[
    "resolvability",
    "condorcet",
    "majority",
    "consistency",
    "iia",
    "no-condorcet-cycle",
    "group-stability:rho=<schedule>",
    "group-strategyproofness:rho=<schedule>",
    "group-participation:rho=<schedule>",
    "group-monotonicity:rho=<schedule>",
];

/// Axioms decided on a single profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AbsoluteAxiom {
    /// A single winner.
    Resolvability,
    /// A Condorcet winner, if any, is the unique winner.
    Condorcet,
    /// A candidate ranked first by more than half the voters, if any, is the unique winner.
    Majority,
    /// The strict pairwise majority relation has no cycle. Ignores the rule.
    NoCondorcetCycle,
}

/// Axioms that relate the outcomes of several profiles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RelativeAxiom {
    Consistency,
    Iia,
    GroupStrategyproofness(RhoSchedule),
    GroupParticipation(RhoSchedule),
    GroupMonotonicity(RhoSchedule),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Axiom {
    Absolute(AbsoluteAxiom),
    Relative(RelativeAxiom),
    /// No coalition of at most `rho(n)` voters can change the outcome.
    GroupStability(RhoSchedule),
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axiom::Absolute(AbsoluteAxiom::Resolvability) => f.write_str("resolvability"),
            Axiom::Absolute(AbsoluteAxiom::Condorcet) => f.write_str("condorcet"),
            Axiom::Absolute(AbsoluteAxiom::Majority) => f.write_str("majority"),
            Axiom::Absolute(AbsoluteAxiom::NoCondorcetCycle) => f.write_str("no-condorcet-cycle"),
            Axiom::Relative(RelativeAxiom::Consistency) => f.write_str("consistency"),
            Axiom::Relative(RelativeAxiom::Iia) => f.write_str("iia"),
            Axiom::Relative(RelativeAxiom::GroupStrategyproofness(r)) => write!(f, "group-strategyproofness:rho={r}"),
            Axiom::Relative(RelativeAxiom::GroupParticipation(r)) => write!(f, "group-participation:rho={r}"),
            Axiom::Relative(RelativeAxiom::GroupMonotonicity(r)) => write!(f, "group-monotonicity:rho={r}"),
            Axiom::GroupStability(r) => write!(f, "group-stability:rho={r}"),
        }
    }
}

impl FromStr for Axiom {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Ok(match s {
            "resolvability" => Axiom::Absolute(AbsoluteAxiom::Resolvability),
            "condorcet" => Axiom::Absolute(AbsoluteAxiom::Condorcet),
            "majority" => Axiom::Absolute(AbsoluteAxiom::Majority),
            "no-condorcet-cycle" => Axiom::Absolute(AbsoluteAxiom::NoCondorcetCycle),
            "consistency" => Axiom::Relative(RelativeAxiom::Consistency),
            "iia" => Axiom::Relative(RelativeAxiom::Iia),
            _ => {
                let rho = |prefix: &str| s.strip_prefix(prefix).map(str::parse::<RhoSchedule>);
                if let Some(r) = rho("group-stability:rho=") {
                    Axiom::GroupStability(r?)
                } else if let Some(r) = rho("group-strategyproofness:rho=") {
                    Axiom::Relative(RelativeAxiom::GroupStrategyproofness(r?))
                } else if let Some(r) = rho("group-participation:rho=") {
                    Axiom::Relative(RelativeAxiom::GroupParticipation(r?))
                } else if let Some(r) = rho("group-monotonicity:rho=") {
                    Axiom::Relative(RelativeAxiom::GroupMonotonicity(r?))
                } else {
                    return Err(Error::Config(format!(
                        "unknown axiom `{s}`; expected one of {}",
                        AXIOM_NAMES.join(", ")
                    )));
                }
            }
        })
    }
}

/// Candidate beating every other in strict pairwise majority.
pub fn condorcet_winner(idx: &RankingIndex, counts: &[u64]) -> Option<Candidate> {
    let m = idx.m();
    let n = pairwise_supporters(idx, counts);
    (0..m).find(|&x| (0..m).all(|y| y == x || n[x * m + y] > n[y * m + x]))
}

/// Candidate ranked first by strictly more than half the voters.
pub fn majority_winner(idx: &RankingIndex, counts: &[u64]) -> Option<Candidate> {
    let total: u64 = counts.iter().sum();
    let mut first = vec![0u64; idx.m()];
    for (r, &c) in counts.iter().enumerate() {
        first[idx.top(r)] += c;
    }
    (0..idx.m()).find(|&x| 2 * first[x] > total)
}

/// Whether the strict pairwise majority relation contains a directed cycle.
pub fn has_condorcet_cycle(idx: &RankingIndex, counts: &[u64]) -> bool {
    let m = idx.m();
    let n = pairwise_supporters(idx, counts);
    let beats = |x: usize, y: usize| n[x * m + y] > n[y * m + x];
    // Any tournament-like digraph is acyclic iff repeatedly removing sinks empties it.
    let mut alive = vec![true; m];
    for _ in 0..m {
        let sink = (0..m).find(|&x| alive[x] && (0..m).all(|y| !alive[y] || !beats(x, y)));
        match sink {
            Some(x) => alive[x] = false,
            None => return true,
        }
    }
    false
}

/// Decide an absolute axiom from ranking counts and pre-computed winners.
pub fn absolute_satisfied(axiom: AbsoluteAxiom, idx: &RankingIndex, counts: &[u64], winners: &WinnerSet) -> bool {
    let single = |c: Candidate| winners.len() == 1 && winners.contains(&c);
    match axiom {
        AbsoluteAxiom::Resolvability => winners.len() == 1,
        AbsoluteAxiom::Condorcet => condorcet_winner(idx, counts).is_none_or(single),
        AbsoluteAxiom::Majority => majority_winner(idx, counts).is_none_or(single),
        AbsoluteAxiom::NoCondorcetCycle => !has_condorcet_cycle(idx, counts),
    }
}

/// Whether `rule` satisfies `axiom` on `profile`.
pub fn check_absolute(axiom: AbsoluteAxiom, rule: &VotingRule, profile: &Profile) -> Result<bool> {
    let idx = RankingIndex::get(profile.m())?;
    let counts = profile.counts()?;
    if axiom == AbsoluteAxiom::NoCondorcetCycle {
        return Ok(!has_condorcet_cycle(idx, &counts));
    }
    let winners = CompiledRule::new(rule, profile.m())?.winners(&counts)?;
    Ok(absolute_satisfied(axiom, idx, &counts, &winners))
}

/// Evidence that a relative axiom fails on a profile.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    /// Subprofiles whose voters together make up the profile.
    Consistency { parts: Vec<Profile> },
    /// A second profile in which every voter orders `a` and `b` as before.
    Iia { other: Profile, a: Candidate, b: Candidate },
    /// Voters at `coalition` report `replacements` instead.
    GroupDeviation { coalition: Vec<usize>, replacements: Vec<Ranking> },
    /// Voters at `leaving` abstain.
    Participation { leaving: Vec<usize> },
    /// Voters at `coalition` report `replacements`, never ranking `candidate` lower.
    Monotonicity { candidate: Candidate, coalition: Vec<usize>, replacements: Vec<Ranking> },
}

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::WitnessInvalid(msg.into()))
}

/// Best candidate of `set` according to `ranking`.
pub fn favorite(ranking: &Ranking, set: &WinnerSet) -> Candidate {
    ranking.candidates().find(|c| set.contains(c)).expect("winner sets are nonempty")
}

fn check_coalition(coalition: &[usize], n: usize, limit: u64) -> Result<()> {
    if coalition.is_empty() {
        return invalid("empty coalition");
    }
    if coalition.len() as u64 > limit {
        return invalid(format!("coalition of {} exceeds rho(n) = {limit}", coalition.len()));
    }
    let mut sorted = coalition.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != coalition.len() || sorted.last().is_some_and(|&i| i >= n) {
        return invalid("coalition indices must be distinct voters of the profile");
    }
    Ok(())
}

/// Every member weakly prefers the new outcome and someone strictly prefers it.
fn coalition_gains(profile: &Profile, coalition: &[usize], before: &WinnerSet, after: &WinnerSet) -> bool {
    let mut strict = false;
    for &i in coalition {
        let truth = profile.voter(i);
        let old = truth.position_of(favorite(truth, before));
        let new = truth.position_of(favorite(truth, after));
        if new > old {
            return false;
        }
        strict |= new < old;
    }
    strict
}

fn replaced(profile: &Profile, coalition: &[usize], replacements: &[Ranking]) -> Result<Profile> {
    if replacements.len() != coalition.len() {
        return invalid("one replacement ranking per coalition member");
    }
    if replacements.iter().any(|r| r.m() != profile.m()) {
        return invalid("replacement ranks a different candidate set");
    }
    let mut voters = profile.voters().to_vec();
    for (&i, r) in coalition.iter().zip(replacements) {
        voters[i] = r.clone();
    }
    profile.with_voters(voters)
}

/// Whether the witness demonstrates a violation of `axiom` by `rule` on `profile`.
pub fn check_witness(axiom: &RelativeAxiom, rule: &VotingRule, profile: &Profile, witness: &Witness) -> Result<bool> {
    let eval = |p: &Profile| rule.evaluate(p);
    let n = profile.n();
    match (axiom, witness) {
        (RelativeAxiom::Consistency, Witness::Consistency { parts }) => {
            if parts.is_empty() {
                return invalid("no subprofiles");
            }
            if parts.iter().any(|p| p.m() != profile.m()) {
                return invalid("subprofile ranks a different candidate set");
            }
            let mut total = vec![0u64; profile.counts()?.len()];
            for p in parts {
                for (t, c) in total.iter_mut().zip(p.counts()?) {
                    *t += c;
                }
            }
            if total != profile.counts()? {
                return invalid("subprofiles do not make up the profile");
            }
            let w = eval(&parts[0])?;
            for p in &parts[1..] {
                if eval(p)? != w {
                    return Ok(false);
                }
            }
            Ok(eval(profile)? != w)
        }
        (RelativeAxiom::Iia, Witness::Iia { other, a, b }) => {
            let (a, b) = (*a, *b);
            if a == b || a >= profile.m() || b >= profile.m() {
                return invalid("a and b must be distinct candidates");
            }
            if other.n() != n || other.m() != profile.m() {
                return invalid("profiles must have the same voters and candidates");
            }
            if profile.voters().iter().zip(other.voters()).any(|(x, y)| x.prefers(a, b) != y.prefers(a, b)) {
                return invalid("some voter orders a and b differently across the profiles");
            }
            let single = |w: &WinnerSet, c| w.len() == 1 && w.contains(&c);
            Ok(single(&eval(profile)?, a) && single(&eval(other)?, b))
        }
        (RelativeAxiom::GroupStrategyproofness(rho), Witness::GroupDeviation { coalition, replacements }) => {
            check_coalition(coalition, n, rho.eval(n))?;
            let after = eval(&replaced(profile, coalition, replacements)?)?;
            Ok(coalition_gains(profile, coalition, &eval(profile)?, &after))
        }
        (RelativeAxiom::GroupParticipation(rho), Witness::Participation { leaving }) => {
            check_coalition(leaving, n, rho.eval(n))?;
            if leaving.len() == n {
                return invalid("at least one voter must remain");
            }
            let voters = (0..n).filter(|i| !leaving.contains(i)).map(|i| profile.voter(i).clone()).collect();
            let after = eval(&profile.with_voters(voters)?)?;
            Ok(coalition_gains(profile, leaving, &eval(profile)?, &after))
        }
        (RelativeAxiom::GroupMonotonicity(rho), Witness::Monotonicity { candidate, coalition, replacements }) => {
            check_coalition(coalition, n, rho.eval(n))?;
            if *candidate >= profile.m() {
                return invalid("candidate out of range");
            }
            let modified = replaced(profile, coalition, replacements)?;
            for &i in coalition {
                if modified.voter(i).position_of(*candidate) > profile.voter(i).position_of(*candidate) {
                    return invalid("a replacement ranks the candidate lower");
                }
            }
            Ok(eval(profile)?.contains(candidate) && !eval(&modified)?.contains(candidate))
        }
        _ => invalid(format!("witness does not match axiom {}", Axiom::Relative(*axiom))),
    }
}
