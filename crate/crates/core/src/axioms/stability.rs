use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;

use super::Witness;
use crate::error::{Error, Result};
use crate::profile::Profile;
use crate::ranking::{Candidate, Ranking, RankingIndex};
use crate::rules::{hyperplanes_of, CompiledRule, VotingRule};

/// Largest number of (removal, addition) multiset pairs the exhaustive search visits.
const BRUTE_FORCE_BUDGET: u64 = 2_000_000;

/// Coalition size allowed at electorate size `n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RhoSchedule {
    Const(u64),
    /// `floor(c * n^e)` with `e < 1/2`.
    Power {
        c: f64,
        e: f64,
    },
}

impl RhoSchedule {
    pub fn power(c: f64, e: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Config(format!("rho coefficient must be positive, got {c}")));
        }
        if !(e.is_finite() && (0.0..0.5).contains(&e)) {
            return Err(Error::Config(format!("rho exponent must lie in [0, 1/2), got {e}")));
        }
        Ok(RhoSchedule::Power { c, e })
    }

    pub fn eval(&self, n: usize) -> u64 {
        match *self {
            RhoSchedule::Const(k) => k,
            // The small slack keeps exact powers such as 10000^0.25 from flooring to 9.
            RhoSchedule::Power { c, e } => (c * (n as f64).powf(e) + 1e-9).floor() as u64,
        }
    }
}

impl fmt::Display for RhoSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RhoSchedule::Const(k) => write!(f, "const:{k}"),
            RhoSchedule::Power { c, e } => write!(f, "pow:{c},{e}"),
        }
    }
}

impl FromStr for RhoSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad rho schedule `{s}`; expected const:<k> or pow:<c>,<e>"));
        if let Some(k) = s.strip_prefix("const:") {
            return k.trim().parse().map(RhoSchedule::Const).map_err(|_| bad());
        }
        let (c, e) = s.strip_prefix("pow:").and_then(|r| r.split_once(',')).ok_or_else(bad)?;
        let c: f64 = c.trim().parse().map_err(|_| bad())?;
        let e: f64 = e.trim().parse().map_err(|_| bad())?;
        RhoSchedule::power(c, e)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StabilityVerdict {
    /// Every plane is farther than a coalition can move the histogram.
    Certified {
        distance: Rational64,
        bound: Rational64,
    },
    /// An exact method found no outcome-changing deviation.
    Stable,
    /// A coalition deviation that changes the winner set.
    Unstable(Witness),
    Undecided,
}

impl StabilityVerdict {
    pub fn is_stable(&self) -> Option<bool> {
        match self {
            StabilityVerdict::Certified { .. } | StabilityVerdict::Stable => Some(true),
            StabilityVerdict::Unstable(_) => Some(false),
            StabilityVerdict::Undecided => None,
        }
    }
}

/// Smallest plane distance, when it exceeds `2 rho / n`.
pub fn certify_stability(rule: &VotingRule, profile: &Profile, rho: u64) -> Result<Option<Rational64>> {
    let Ok(set) = hyperplanes_of(rule, profile.m()) else {
        return Ok(None);
    };
    let h = profile.histogram()?;
    let (d, _) = set.min_distance(&h);
    let bound = Rational64::new(2 * rho as i64, profile.n() as i64);
    Ok((d > bound).then_some(d))
}

/// Exact answer for plurality from the gap between the top two first-place counts.
pub fn plurality_exact_stability(profile: &Profile, rho: u64) -> Result<StabilityVerdict> {
    let m = profile.m();
    let mut first = vec![0u64; m];
    for v in profile.voters() {
        first[v.top()] += 1;
    }
    let mut order: Vec<Candidate> = (0..m).collect();
    order.sort_by_key(|&c| std::cmp::Reverse(first[c]));
    let (w, r) = (order[0], order[1]);
    let gap = first[w] - first[r];
    if rho == 0 || gap > 2 * rho {
        return Ok(StabilityVerdict::Stable);
    }
    // Moving ceil(gap/2) of w's supporters to r ties or overturns w; with a tie one suffices.
    let k = gap.div_ceil(2).max(1) as usize;
    let coalition: Vec<usize> = (0..profile.n()).filter(|&i| profile.voter(i).top() == w).take(k).collect();
    let mut order = vec![r];
    order.extend((0..m).filter(|&c| c != r));
    let flipped = Ranking::new(order)?;
    Ok(StabilityVerdict::Unstable(Witness::GroupDeviation { replacements: vec![flipped; coalition.len()], coalition }))
}

/// All multisets of size `k` drawn from `limits[t]` copies of each type `t`.
pub(super) fn multisets(limits: &[u64], k: u64, out: &mut Vec<Vec<u64>>) {
    fn go(limits: &[u64], t: usize, left: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if t == limits.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for take in 0..=left.min(limits[t]) {
            cur[t] = take;
            go(limits, t + 1, left - take, cur, out);
        }
        cur[t] = 0;
    }
    go(limits, 0, k, &mut vec![0; limits.len()], out);
}

fn multichoose(types: u64, k: u64) -> u64 {
    // C(types + k - 1, k), saturating.
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(types + i) / (i + 1))
}

/// Exhaustive search over coalition deviations, up to anonymity.
///
/// `None` when the search would exceed its budget, otherwise the first
/// outcome-changing deviation found, if any.
pub fn brute_force_stability(rule: &VotingRule, profile: &Profile, rho: u64) -> Result<Option<Option<Witness>>> {
    let idx = RankingIndex::get(profile.m())?;
    let counts = profile.counts()?;
    let kmax = rho.min(profile.n() as u64);
    let types = idx.len() as u64;
    let cost: u64 = (1..=kmax).map(|k| multichoose(types, k).saturating_mul(multichoose(types, k))).sum();
    if cost > BRUTE_FORCE_BUDGET {
        return Ok(None);
    }
    let compiled = CompiledRule::new(rule, profile.m())?;
    let before = compiled.winners(&counts)?;
    let all = vec![kmax; idx.len()];
    for k in 1..=kmax {
        let (mut removals, mut additions) = (Vec::new(), Vec::new());
        multisets(&counts, k, &mut removals);
        multisets(&all, k, &mut additions);
        for rem in &removals {
            for add in &additions {
                if rem == add {
                    continue;
                }
                let after: Vec<u64> = counts.iter().zip(rem).zip(add).map(|((c, r), a)| c - r + a).collect();
                if compiled.winners(&after)? != before {
                    return Ok(Some(Some(deviation(profile, idx, rem, add)?)));
                }
            }
        }
    }
    Ok(Some(None))
}

fn deviation(profile: &Profile, idx: &RankingIndex, rem: &[u64], add: &[u64]) -> Result<Witness> {
    let mut need = rem.to_vec();
    let mut coalition = Vec::new();
    for (i, r) in profile.ranking_indices()?.into_iter().enumerate() {
        if need[r] > 0 {
            need[r] -= 1;
            coalition.push(i);
        }
    }
    let replacements =
        add.iter().enumerate().flat_map(|(t, &c)| std::iter::repeat_n(idx.ranking(t).clone(), c as usize)).collect();
    Ok(Witness::GroupDeviation { coalition, replacements })
}

/// Decide whether no coalition of at most `rho` voters can change the winner set.
///
/// Tries the hyperplane certificate, then the exact plurality gap, then exhaustive
/// search when it is small enough.
pub fn check_group_stability(rule: &VotingRule, profile: &Profile, rho: u64) -> Result<StabilityVerdict> {
    if profile.n() == 0 {
        return Err(Error::Argument("empty profile".into()));
    }
    if rho == 0 {
        return Ok(StabilityVerdict::Stable);
    }
    if let Some(distance) = certify_stability(rule, profile, rho)? {
        let bound = Rational64::new(2 * rho as i64, profile.n() as i64);
        return Ok(StabilityVerdict::Certified { distance, bound });
    }
    if *rule == VotingRule::Plurality {
        return plurality_exact_stability(profile, rho);
    }
    Ok(match brute_force_stability(rule, profile, rho)? {
        Some(None) => StabilityVerdict::Stable,
        Some(Some(w)) => StabilityVerdict::Unstable(w),
        None => StabilityVerdict::Undecided,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn changes_outcome(rule: &VotingRule, profile: &Profile, w: &Witness) -> bool {
        let Witness::GroupDeviation { coalition, replacements } = w else { panic!("wrong witness") };
        let mut voters = profile.voters().to_vec();
        for (&i, r) in coalition.iter().zip(replacements) {
            voters[i] = r.clone();
        }
        rule.evaluate(&profile.with_voters(voters).unwrap()).unwrap() != rule.evaluate(profile).unwrap()
    }

    #[test]
    fn gap_larger_than_two_rho_is_stable() {
        // First places 6, 1, 0: gap 5.
        let p = Profile::from_counts(3, &[6, 0, 1, 0, 0, 0]).unwrap();
        assert_eq!(plurality_exact_stability(&p, 2).unwrap(), StabilityVerdict::Stable);
        let StabilityVerdict::Unstable(w) = plurality_exact_stability(&p, 3).unwrap() else { panic!() };
        assert!(changes_outcome(&VotingRule::Plurality, &p, &w));
    }

    #[test]
    fn two_way_tie_is_unstable_for_one_voter() {
        let p = Profile::from_counts(3, &[2, 0, 2, 0, 0, 0]).unwrap();
        let v = check_group_stability(&VotingRule::Plurality, &p, 1).unwrap();
        let StabilityVerdict::Unstable(w) = v else { panic!("{v:?}") };
        assert!(changes_outcome(&VotingRule::Plurality, &p, &w));
        assert_eq!(brute_force_stability(&VotingRule::Plurality, &p, 1).unwrap().map(|w| w.is_some()), Some(true));
    }

    #[test]
    fn certificate_on_wide_margin() {
        let p = Profile::from_counts(3, &[30, 0, 0, 0, 0, 0]).unwrap();
        let v = check_group_stability(&VotingRule::Borda, &p, 2).unwrap();
        assert!(matches!(v, StabilityVerdict::Certified { .. }));
        assert_eq!(brute_force_stability(&VotingRule::Borda, &p, 2).unwrap(), Some(None));
    }

    #[test]
    fn brute_force_budget() {
        let p = Profile::from_counts(3, &[10; 6]).unwrap();
        assert_eq!(brute_force_stability(&VotingRule::Minimax, &p, 30).unwrap(), None);
    }

    #[test]
    fn rho_schedules() {
        assert_eq!(RhoSchedule::power(1.0, 0.25).unwrap().eval(10_000), 10);
        assert_eq!(RhoSchedule::power(1.0, 0.25).unwrap().eval(100), 3);
        assert!(RhoSchedule::power(1.0, 0.5).is_err());
        assert_eq!("const:3".parse::<RhoSchedule>().unwrap(), RhoSchedule::Const(3));
        assert!("pow:2".parse::<RhoSchedule>().is_err());
        assert_eq!(RhoSchedule::power(2.0, 0.25).unwrap().to_string(), "pow:2,0.25");
    }

    #[test]
    fn multichoose_counts() {
        assert_eq!(multichoose(6, 2), 21);
        let mut out = Vec::new();
        multisets(&[2; 6], 2, &mut out);
        assert_eq!(out.len(), 21);
    }
}
