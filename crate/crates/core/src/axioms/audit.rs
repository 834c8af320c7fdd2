//! Exhaustive small-instance search with its own naive rule and axiom evaluators.

use num_rational::Rational64;
use rayon::prelude::*;

use super::stability::multisets;
use super::{AbsoluteAxiom, Axiom, RelativeAxiom, Witness};
use crate::error::{Error, Result};
use crate::profile::Profile;
use crate::ranking::{enumerate_rankings, kendall_tau, Candidate, Ranking, RankingIndex};
use crate::rules::{VotingRule, WinnerSet};

/// Findings kept with full profiles; the census counts all of them.
const MAX_FINDINGS: usize = 100;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditFinding {
    pub profile: Profile,
    pub witness: Option<Witness>,
    /// Number of ordered voter tuples with this histogram.
    pub multiplicity: u64,
}

#[derive(Clone, Debug, Default)]
pub struct AuditReport {
    /// Profiles examined, counted as ordered voter tuples.
    pub cases: u64,
    /// Violating profiles, counted the same way.
    pub violations: u64,
    pub findings: Vec<AuditFinding>,
}

fn pairwise(voters: &[Ranking], x: Candidate, y: Candidate) -> i64 {
    voters.iter().filter(|v| v.prefers(x, y)).count() as i64
}

fn best_of<T: PartialOrd + Copy>(values: &[T], maximize: bool) -> WinnerSet {
    let mut best = values[0];
    for &v in values {
        if (maximize && v > best) || (!maximize && v < best) {
            best = v;
        }
    }
    values.iter().enumerate().filter(|&(_, &v)| v == best).map(|(c, _)| c).collect()
}

/// Winners computed straight from the ballots, without compiled tables.
pub fn oracle_winners(rule: &VotingRule, voters: &[Ranking]) -> Result<WinnerSet> {
    let m = voters.first().ok_or_else(|| Error::Argument("no voters".into()))?.m();
    if let Some(w) = rule.weights(m)? {
        let mut score = vec![Rational64::from_integer(0); m];
        for v in voters {
            for c in 0..m {
                score[c] += w[v.position_of(c)];
            }
        }
        return Ok(best_of(&score, true));
    }
    Ok(match rule {
        VotingRule::Minimax => {
            let worst: Vec<i64> = (0..m)
                .map(|x| {
                    (0..m).filter(|&y| y != x).map(|y| pairwise(voters, y, x) - pairwise(voters, x, y)).max().unwrap()
                })
                .collect();
            best_of(&worst, false)
        }
        VotingRule::Copeland => {
            let score: Vec<Rational64> = (0..m)
                .map(|x| {
                    (0..m)
                        .filter(|&y| y != x)
                        .map(|y| {
                            let (f, a) = (pairwise(voters, x, y), pairwise(voters, y, x));
                            if f > a {
                                Rational64::from_integer(1)
                            } else if f == a {
                                Rational64::new(1, 2)
                            } else {
                                Rational64::from_integer(0)
                            }
                        })
                        .sum()
                })
                .collect();
            best_of(&score, true)
        }
        VotingRule::Kemeny => {
            let rankings = enumerate_rankings(m)?;
            let cost: Vec<usize> =
                rankings.iter().map(|r| voters.iter().map(|v| kendall_tau(r, v).unwrap()).sum()).collect();
            let best = *cost.iter().min().unwrap();
            rankings.iter().zip(&cost).filter(|&(_, &c)| c == best).map(|(r, _)| r.top()).collect()
        }
        _ => unreachable!("scoring rules carry weights"),
    })
}

/// Absolute axiom decided from the ballots alone.
pub fn oracle_absolute_satisfied(axiom: AbsoluteAxiom, rule: &VotingRule, voters: &[Ranking]) -> Result<bool> {
    let m = voters[0].m();
    let beats = |x: Candidate, y: Candidate| pairwise(voters, x, y) > pairwise(voters, y, x);
    let only = |w: &WinnerSet, c: Candidate| w.len() == 1 && w.contains(&c);
    Ok(match axiom {
        AbsoluteAxiom::Resolvability => oracle_winners(rule, voters)?.len() == 1,
        AbsoluteAxiom::Condorcet => match (0..m).find(|&x| (0..m).all(|y| y == x || beats(x, y))) {
            Some(cw) => only(&oracle_winners(rule, voters)?, cw),
            None => true,
        },
        AbsoluteAxiom::Majority => {
            match (0..m).find(|&x| 2 * voters.iter().filter(|v| v.top() == x).count() > voters.len()) {
                Some(mw) => only(&oracle_winners(rule, voters)?, mw),
                None => true,
            }
        }
        AbsoluteAxiom::NoCondorcetCycle => {
            // Transitive closure of the strict majority relation.
            let mut reach: Vec<Vec<bool>> = (0..m).map(|x| (0..m).map(|y| x != y && beats(x, y)).collect()).collect();
            for k in 0..m {
                for i in 0..m {
                    for j in 0..m {
                        reach[i][j] |= reach[i][k] && reach[k][j];
                    }
                }
            }
            !(0..m).any(|x| reach[x][x])
        }
    })
}

fn multiplicity(counts: &[u64]) -> u64 {
    let n: u64 = counts.iter().sum();
    let fact = |k: u64| (1..=k).product::<u64>();
    counts.iter().fold(fact(n), |acc, &c| acc / fact(c))
}

fn voters_of(idx: &RankingIndex, counts: &[u64]) -> Vec<Ranking> {
    counts.iter().enumerate().flat_map(|(r, &c)| std::iter::repeat_n(idx.ranking(r).clone(), c as usize)).collect()
}

fn all_profiles(types: usize, n_max: usize) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    for n in 1..=n_max as u64 {
        multisets(&vec![n; types], n, &mut out);
    }
    out
}

/// Favorite-in-set position of each coalition member before and after.
fn gains(truths: &[Ranking], before: &WinnerSet, after: &WinnerSet) -> bool {
    let fav = |v: &Ranking, w: &WinnerSet| (0..v.m()).find(|&p| w.contains(&v.candidate_at(p))).unwrap();
    let mut strict = false;
    for v in truths {
        let (old, new) = (fav(v, before), fav(v, after));
        if new > old {
            return false;
        }
        strict |= new < old;
    }
    strict
}

/// Search one profile for a violation of a relative axiom.
fn relative_witness(axiom: &Axiom, rule: &VotingRule, idx: &RankingIndex, counts: &[u64]) -> Result<Option<Witness>> {
    let n: u64 = counts.iter().sum();
    let voters = voters_of(idx, counts);
    let before = oracle_winners(rule, &voters)?;
    let rho = match axiom {
        Axiom::GroupStability(r)
        | Axiom::Relative(RelativeAxiom::GroupStrategyproofness(r))
        | Axiom::Relative(RelativeAxiom::GroupParticipation(r))
        | Axiom::Relative(RelativeAxiom::GroupMonotonicity(r)) => r.eval(n as usize).min(n),
        _ => 0,
    };
    let coalition_of = |rem: &[u64]| -> Vec<usize> {
        let mut start = 0usize;
        let mut out = Vec::new();
        for (&c, &r) in counts.iter().zip(rem) {
            out.extend(start..start + r as usize);
            start += c as usize;
        }
        out
    };
    match axiom {
        Axiom::Relative(RelativeAxiom::Consistency) => {
            for k in 1..n {
                let mut subs = Vec::new();
                multisets(counts, k, &mut subs);
                for s in subs {
                    let rest: Vec<u64> = counts.iter().zip(&s).map(|(c, x)| c - x).collect();
                    let (p1, p2) = (voters_of(idx, &s), voters_of(idx, &rest));
                    let w = oracle_winners(rule, &p1)?;
                    if oracle_winners(rule, &p2)? == w && before != w {
                        let parts = vec![Profile::new(p1)?, Profile::new(p2)?];
                        return Ok(Some(Witness::Consistency { parts }));
                    }
                }
            }
            Ok(None)
        }
        Axiom::GroupStability(_) | Axiom::Relative(RelativeAxiom::GroupStrategyproofness(_)) => {
            let sp = !matches!(axiom, Axiom::GroupStability(_));
            let everything = vec![rho; idx.len()];
            for k in 1..=rho {
                let (mut rems, mut adds) = (Vec::new(), Vec::new());
                multisets(counts, k, &mut rems);
                multisets(&everything, k, &mut adds);
                for rem in &rems {
                    let truths = voters_of(idx, rem);
                    for add in &adds {
                        let after_counts: Vec<u64> =
                            counts.iter().zip(rem).zip(add).map(|((c, r), a)| c - r + a).collect();
                        let after = oracle_winners(rule, &voters_of(idx, &after_counts))?;
                        let violated = if sp { gains(&truths, &before, &after) } else { after != before };
                        if violated {
                            let coalition = coalition_of(rem);
                            // Members of one ranking are interchangeable, so any pairing works.
                            let replacements = voters_of(idx, add);
                            return Ok(Some(Witness::GroupDeviation { coalition, replacements }));
                        }
                    }
                }
            }
            Ok(None)
        }
        Axiom::Relative(RelativeAxiom::GroupParticipation(_)) => {
            for k in 1..=rho.min(n - 1) {
                let mut rems = Vec::new();
                multisets(counts, k, &mut rems);
                for rem in &rems {
                    let left: Vec<u64> = counts.iter().zip(rem).map(|(c, r)| c - r).collect();
                    let after = oracle_winners(rule, &voters_of(idx, &left))?;
                    if gains(&voters_of(idx, rem), &before, &after) {
                        return Ok(Some(Witness::Participation { leaving: coalition_of(rem) }));
                    }
                }
            }
            Ok(None)
        }
        Axiom::Relative(RelativeAxiom::GroupMonotonicity(_)) => {
            for &c in &before {
                for k in 1..=rho {
                    let mut rems = Vec::new();
                    multisets(counts, k, &mut rems);
                    for rem in &rems {
                        let truths = voters_of(idx, rem);
                        let options: Vec<Vec<&Ranking>> = truths
                            .iter()
                            .map(|t| idx.rankings().iter().filter(|r| r.position_of(c) <= t.position_of(c)).collect())
                            .collect();
                        let mut pick = vec![0usize; truths.len()];
                        loop {
                            let replacements: Vec<Ranking> =
                                pick.iter().zip(&options).map(|(&i, o)| o[i].clone()).collect();
                            let coalition = coalition_of(rem);
                            let mut after_voters = voters.clone();
                            for (&i, r) in coalition.iter().zip(&replacements) {
                                after_voters[i] = r.clone();
                            }
                            if !oracle_winners(rule, &after_voters)?.contains(&c) {
                                return Ok(Some(Witness::Monotonicity { candidate: c, coalition, replacements }));
                            }
                            // Odometer over the per-member options.
                            let mut j = 0;
                            while j < pick.len() {
                                pick[j] += 1;
                                if pick[j] < options[j].len() {
                                    break;
                                }
                                pick[j] = 0;
                                j += 1;
                            }
                            if j == pick.len() {
                                break;
                            }
                        }
                    }
                }
            }
            Ok(None)
        }
        _ => unreachable!("absolute axioms and IIA are enumerated elsewhere"),
    }
}

/// IIA pairs: every voter keeps their order of `a` and `b` across the two profiles.
fn iia_audit(rule: &VotingRule, idx: &RankingIndex, n_max: usize) -> Result<AuditReport> {
    let m = idx.m();
    let mut report = AuditReport::default();
    for a in 0..m {
        for b in (0..m).filter(|&b| b != a) {
            let pair_types: Vec<(usize, usize)> = (0..idx.len())
                .flat_map(|r| (0..idx.len()).map(move |s| (r, s)))
                .filter(|&(r, s)| idx.prefers(r, a, b) == idx.prefers(s, a, b))
                .collect();
            let results: Vec<(u64, Option<AuditFinding>)> = all_profiles(pair_types.len(), n_max)
                .into_par_iter()
                .map(|counts| {
                    let mut first = Vec::new();
                    let mut second = Vec::new();
                    for (&(r, s), &c) in pair_types.iter().zip(&counts) {
                        for _ in 0..c {
                            first.push(idx.ranking(r).clone());
                            second.push(idx.ranking(s).clone());
                        }
                    }
                    let weight = multiplicity(&counts);
                    let w1 = oracle_winners(rule, &first)?;
                    let w2 = oracle_winners(rule, &second)?;
                    let single = |w: &WinnerSet, c| w.len() == 1 && w.contains(&c);
                    let finding = if single(&w1, a) && single(&w2, b) {
                        Some(AuditFinding {
                            profile: Profile::new(first)?,
                            witness: Some(Witness::Iia { other: Profile::new(second)?, a, b }),
                            multiplicity: weight,
                        })
                    } else {
                        None
                    };
                    Ok((weight, finding))
                })
                .collect::<Result<_>>()?;
            absorb(&mut report, results);
        }
    }
    Ok(report)
}

fn absorb(report: &mut AuditReport, results: Vec<(u64, Option<AuditFinding>)>) {
    for (weight, finding) in results {
        report.cases += weight;
        if let Some(f) = finding {
            report.violations += f.multiplicity;
            if report.findings.len() < MAX_FINDINGS {
                report.findings.push(f);
            }
        }
    }
}

/// Enumerate every profile with at most `n_max` voters over `m = 3` candidates.
///
/// Absolute axioms are decided by the naive evaluators above. Relative axioms
/// search their witness space: all bipartitions for consistency, all matched
/// profile pairs for IIA, and all coalitions up to `rho(n)` for the group axioms.
pub fn brute_force_audit(rule: &VotingRule, axiom: &Axiom, n_max: usize, m: usize) -> Result<AuditReport> {
    if m != 3 {
        return Err(Error::Config(format!("audits enumerate m = 3 only, got m = {m}")));
    }
    if n_max == 0 || n_max > 5 {
        return Err(Error::Config(format!("audits need 1 <= n_max <= 5, got {n_max}")));
    }
    let idx = RankingIndex::get(m)?;
    if *axiom == Axiom::Relative(RelativeAxiom::Iia) {
        return iia_audit(rule, idx, n_max);
    }
    let results: Vec<(u64, Option<AuditFinding>)> = all_profiles(idx.len(), n_max)
        .into_par_iter()
        .map(|counts| {
            let weight = multiplicity(&counts);
            let voters = voters_of(idx, &counts);
            let witness = match axiom {
                Axiom::Absolute(a) => {
                    if oracle_absolute_satisfied(*a, rule, &voters)? {
                        return Ok((weight, None));
                    }
                    None
                }
                _ => match relative_witness(axiom, rule, idx, &counts)? {
                    Some(w) => Some(w),
                    None => return Ok((weight, None)),
                },
            };
            Ok((weight, Some(AuditFinding { profile: Profile::new(voters)?, witness, multiplicity: weight })))
        })
        .collect::<Result<_>>()?;
    let mut report = AuditReport::default();
    absorb(&mut report, results);
    Ok(report)
}
