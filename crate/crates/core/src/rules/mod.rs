//! Voting rules and the hyperplanes that separate their outcome regions.

mod hyperplane;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Rational64;
use num_traits::Zero;

use crate::error::{arg, Error, Result};
use crate::profile::Profile;
use crate::ranking::{Candidate, RankingIndex};

pub use hyperplane::{hyperplanes_of, l1_distance_to_hyperplane, Hyperplane, HyperplaneSet};

/// Winning candidates, ordered.
pub type WinnerSet = BTreeSet<Candidate>;

/// Rule names as accepted by [`VotingRule::from_str`].
pub const RULE_NAMES: &[&str] = &["plurality", "borda", "veto", "psr:[w1,...,wm]", "minimax", "copeland", "kemeny"];

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum VotingRule {
    Plurality,
    Borda,
    Veto,
    /// Positional scoring with explicit weights, best position first.
    Scoring(Vec<Rational64>),
    /// Fewest votes against in the worst pairwise defeat, by margin.
    Minimax,
    /// Most pairwise wins, ties counting one half.
    Copeland,
    /// Top candidates of every ranking with the least total Kendall tau disagreement.
    Kemeny,
}

impl VotingRule {
    pub fn is_scoring(&self) -> bool {
        matches!(self, VotingRule::Plurality | VotingRule::Borda | VotingRule::Veto | VotingRule::Scoring(_))
    }

    /// Positional weights for `m` candidates, or `None` for non-scoring rules.
    pub fn weights(&self, m: usize) -> Result<Option<Vec<Rational64>>> {
        let one = Rational64::from_integer(1);
        let w = match self {
            VotingRule::Plurality => (0..m).map(|i| if i == 0 { one } else { Rational64::zero() }).collect(),
            VotingRule::Borda => (0..m).map(|i| Rational64::from_integer((m - 1 - i) as i64)).collect(),
            VotingRule::Veto => (0..m).map(|i| if i + 1 < m { one } else { Rational64::zero() }).collect(),
            VotingRule::Scoring(w) => {
                if w.len() != m {
                    return arg(format!("{} weights given for {m} candidates", w.len()));
                }
                w.clone()
            }
            _ => return Ok(None),
        };
        Ok(Some(w))
    }

    /// Whether every profile off the rule's hyperplanes has a single winner.
    pub fn is_decisive(&self) -> bool {
        !matches!(self, VotingRule::Copeland)
    }

    pub fn evaluate(&self, profile: &Profile) -> Result<WinnerSet> {
        CompiledRule::new(self, profile.m())?.winners(&profile.counts()?)
    }
}

impl fmt::Display for VotingRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VotingRule::Plurality => f.write_str("plurality"),
            VotingRule::Borda => f.write_str("borda"),
            VotingRule::Veto => f.write_str("veto"),
            VotingRule::Scoring(w) => {
                let parts: Vec<String> = w.iter().map(format_decimal).collect();
                write!(f, "psr:[{}]", parts.join(","))
            }
            VotingRule::Minimax => f.write_str("minimax"),
            VotingRule::Copeland => f.write_str("copeland"),
            VotingRule::Kemeny => f.write_str("kemeny"),
        }
    }
}

fn format_decimal(r: &Rational64) -> String {
    if r.is_integer() {
        return r.to_integer().to_string();
    }
    let f = *r.numer() as f64 / *r.denom() as f64;
    if parse_decimal(&f.to_string()).ok() == Some(*r) {
        f.to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parse `0.5`, `3`, `-1.25` or `1/3` exactly.
pub(crate) fn parse_decimal(s: &str) -> Result<Rational64> {
    let s = s.trim();
    let bad = || Error::Config(format!("not a number: `{s}`"));
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Rational64::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || frac.len() > 15 {
        return Err(bad());
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: i64 = format!("{int}{frac}").parse().map_err(|_| bad())?;
    let r = Rational64::new(digits, 10i64.pow(frac.len() as u32));
    Ok(if neg { -r } else { r })
}

impl FromStr for VotingRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "plurality" => return Ok(VotingRule::Plurality),
            "borda" => return Ok(VotingRule::Borda),
            "veto" => return Ok(VotingRule::Veto),
            "minimax" => return Ok(VotingRule::Minimax),
            "copeland" => return Ok(VotingRule::Copeland),
            "kemeny" => return Ok(VotingRule::Kemeny),
            _ => {}
        }
        let Some(list) = s.strip_prefix("psr:") else {
            return Err(Error::Config(format!("unknown rule `{s}`; expected one of {}", RULE_NAMES.join(", "))));
        };
        let inner = list
            .trim()
            .strip_prefix('[')
            .and_then(|x| x.strip_suffix(']'))
            .ok_or_else(|| Error::Config(format!("weights must be bracketed: `{list}`")))?;
        let w = inner.split(',').map(parse_decimal).collect::<Result<Vec<_>>>()?;
        scoring(w)
    }
}

/// A custom positional scoring rule; weights must be nonincreasing and not all equal.
pub fn scoring(weights: Vec<Rational64>) -> Result<VotingRule> {
    if weights.len() < 3 {
        return arg("a scoring rule needs at least three weights");
    }
    if weights.windows(2).any(|p| p[0] < p[1]) {
        return arg("scoring weights must be nonincreasing");
    }
    if weights.first() == weights.last() {
        return arg("constant scoring weights cannot separate candidates");
    }
    Ok(VotingRule::Scoring(weights))
}

/// `supporters[x * m + y]`: voters ranking `x` above `y`.
pub fn pairwise_supporters(idx: &RankingIndex, counts: &[u64]) -> Vec<i64> {
    let m = idx.m();
    let mut n = vec![0i64; m * m];
    for (r, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let order = idx.ranking(r).as_bytes();
        for i in 0..m {
            for j in i + 1..m {
                n[order[i] as usize * m + order[j] as usize] += c as i64;
            }
        }
    }
    n
}

/// Pairwise majority margins: `margin(x, y)` voters prefer `x` to `y` minus the reverse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairwiseMatrix {
    m: usize,
    margins: Vec<i64>,
}

impl PairwiseMatrix {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn margin(&self, x: Candidate, y: Candidate) -> i64 {
        self.margins[x * self.m + y]
    }

    /// Rows of the matrix, candidate order.
    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.margins.chunks(self.m).map(<[i64]>::to_vec).collect()
    }
}

pub fn pairwise_margins(profile: &Profile) -> Result<PairwiseMatrix> {
    let idx = RankingIndex::get(profile.m())?;
    let m = profile.m();
    let n = pairwise_supporters(idx, &profile.counts()?);
    let margins = (0..m * m).map(|k| n[k] - n[(k % m) * m + k / m]).collect();
    Ok(PairwiseMatrix { m, margins })
}

/// A rule specialised to a candidate count, evaluated on ranking counts.
#[derive(Clone, Debug)]
pub struct CompiledRule {
    rule: VotingRule,
    idx: &'static RankingIndex,
    /// Integer-scaled positional weights for scoring rules.
    weights: Option<Vec<i64>>,
}

impl CompiledRule {
    pub fn new(rule: &VotingRule, m: usize) -> Result<Self> {
        let idx = RankingIndex::get(m)?;
        let weights = rule.weights(m)?.map(|w| integer_weights(&w));
        Ok(CompiledRule { rule: rule.clone(), idx, weights })
    }

    pub fn rule(&self) -> &VotingRule {
        &self.rule
    }

    pub fn m(&self) -> usize {
        self.idx.m()
    }

    pub fn winners(&self, counts: &[u64]) -> Result<WinnerSet> {
        if counts.len() != self.idx.len() {
            return arg(format!("expected {} counts, got {}", self.idx.len(), counts.len()));
        }
        if counts.iter().all(|&c| c == 0) {
            return arg("cannot evaluate an empty profile");
        }
        let m = self.m();
        let winners = match (&self.rule, &self.weights) {
            (_, Some(w)) => {
                let mut score = vec![0i64; m];
                for (r, &c) in counts.iter().enumerate() {
                    if c > 0 {
                        for (pos, cand) in self.idx.ranking(r).candidates().enumerate() {
                            score[cand] += c as i64 * w[pos];
                        }
                    }
                }
                argmax(&score)
            }
            (VotingRule::Minimax, _) => {
                let n = pairwise_supporters(self.idx, counts);
                let worst: Vec<i64> = (0..m)
                    .map(|x| (0..m).filter(|&y| y != x).map(|y| n[y * m + x] - n[x * m + y]).max().unwrap())
                    .collect();
                argmax(&worst.iter().map(|w| -w).collect::<Vec<_>>())
            }
            (VotingRule::Copeland, _) => {
                let n = pairwise_supporters(self.idx, counts);
                let doubled: Vec<i64> = (0..m)
                    .map(|x| {
                        (0..m)
                            .filter(|&y| y != x)
                            .map(|y| match n[x * m + y].cmp(&n[y * m + x]) {
                                std::cmp::Ordering::Greater => 2,
                                std::cmp::Ordering::Equal => 1,
                                std::cmp::Ordering::Less => 0,
                            })
                            .sum()
                    })
                    .collect();
                argmax(&doubled)
            }
            (VotingRule::Kemeny, _) => {
                let n = pairwise_supporters(self.idx, counts);
                let agreement: Vec<i64> = self
                    .idx
                    .rankings()
                    .iter()
                    .map(|r| {
                        let o = r.as_bytes();
                        let mut s = 0;
                        for i in 0..m {
                            for j in i + 1..m {
                                s += n[o[i] as usize * m + o[j] as usize];
                            }
                        }
                        s
                    })
                    .collect();
                let best = *agreement.iter().max().unwrap();
                agreement.iter().enumerate().filter(|&(_, &a)| a == best).map(|(r, _)| self.idx.top(r)).collect()
            }
            _ => unreachable!("scoring rules always carry weights"),
        };
        Ok(winners)
    }
}

fn argmax(score: &[i64]) -> WinnerSet {
    let best = *score.iter().max().expect("at least one candidate");
    score.iter().enumerate().filter(|&(_, &s)| s == best).map(|(c, _)| c).collect()
}

/// Scale rational weights to integers with the same ratios.
pub(crate) fn integer_weights(w: &[Rational64]) -> Vec<i64> {
    let l = w.iter().fold(1i64, |acc, x| acc.lcm(x.denom()));
    let ints: Vec<i64> = w.iter().map(|x| (x * l).to_integer()).collect();
    let g = ints.iter().fold(0i64, |acc, &x| acc.gcd(&x.abs())).max(1);
    ints.into_iter().map(|x| x / g).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(cs: &[usize]) -> WinnerSet {
        cs.iter().copied().collect()
    }

    fn appendix_d() -> Profile {
        Profile::from_counts(3, &[36, 80, 115, 0, 0, 69]).unwrap()
    }

    #[test]
    fn margins_of_reference_profile() {
        let p = pairwise_margins(&appendix_d()).unwrap();
        assert_eq!((p.margin(1, 0), p.margin(1, 2), p.margin(0, 2)), (68, 2, 162));
        assert_eq!(p.margin(0, 1), -68);
        assert_eq!(p.margin(2, 2), 0);
        let one = pairwise_margins(&Profile::from_strs(&["abc"]).unwrap()).unwrap();
        assert_eq!((one.margin(0, 1), one.margin(0, 2), one.margin(1, 2)), (1, 1, 1));
    }

    #[test]
    fn reference_profile_outcomes() {
        let p = appendix_d();
        assert_eq!(VotingRule::Plurality.evaluate(&p).unwrap(), set(&[0]));
        assert_eq!(VotingRule::Borda.evaluate(&p).unwrap(), set(&[0]));
        assert_eq!(VotingRule::Minimax.evaluate(&p).unwrap(), set(&[1]));
        assert_eq!(VotingRule::Copeland.evaluate(&p).unwrap(), set(&[1]));
        assert_eq!(VotingRule::Kemeny.evaluate(&p).unwrap(), set(&[1]));
    }

    #[test]
    fn half_borda_prefers_first_group() {
        // 5 voters a > c > b and 7 voters b > a > c.
        let p = Profile::from_counts(3, &[0, 5, 7, 0, 0, 0]).unwrap();
        let rule: VotingRule = "psr:[1,0.5,0]".parse().unwrap();
        assert_eq!(rule.evaluate(&p).unwrap(), set(&[0]));
        assert_eq!(VotingRule::Minimax.evaluate(&p).unwrap(), set(&[1]));
    }

    #[test]
    fn cycle_ties_everything() {
        let p = Profile::from_strs(&["abc", "bca", "cab"]).unwrap();
        for rule in
            [VotingRule::Plurality, VotingRule::Borda, VotingRule::Copeland, VotingRule::Kemeny, VotingRule::Minimax]
        {
            assert_eq!(rule.evaluate(&p).unwrap(), set(&[0, 1, 2]), "{rule}");
        }
    }

    #[test]
    fn veto_and_plurality_ties() {
        let p = Profile::from_strs(&["abc", "bac"]).unwrap();
        assert_eq!(VotingRule::Plurality.evaluate(&p).unwrap(), set(&[0, 1]));
        assert_eq!(VotingRule::Veto.evaluate(&p).unwrap(), set(&[0, 1]));
    }

    #[test]
    fn parses_rule_strings() {
        for name in ["plurality", "borda", "veto", "minimax", "copeland", "kemeny"] {
            assert_eq!(name.parse::<VotingRule>().unwrap().to_string(), name);
        }
        let r: VotingRule = "psr:[1, 0.5, 0]".parse().unwrap();
        assert_eq!(r.to_string(), "psr:[1,0.5,0]");
        assert!("psr:[0,1,0]".parse::<VotingRule>().is_err());
        assert!("psr:[1,1,1]".parse::<VotingRule>().is_err());
        assert!("schulze".parse::<VotingRule>().is_err());
        let short: VotingRule = "psr:[2,1,0]".parse().unwrap();
        assert!(short.evaluate(&Profile::from_strs(&["abcd"]).unwrap()).is_err());
    }

    #[test]
    fn integer_weight_scaling() {
        let w = [Rational64::new(1, 1), Rational64::new(1, 2), Rational64::new(0, 1)];
        assert_eq!(integer_weights(&w), vec![2, 1, 0]);
        assert_eq!(integer_weights(&[Rational64::from(4), Rational64::from(2), Rational64::from(0)]), vec![2, 1, 0]);
    }
}
