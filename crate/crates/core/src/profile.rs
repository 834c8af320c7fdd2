//! Preference profiles, their anonymized histograms, and the text format.
//!
//! A profile file lists groups of identical voters, one per line:
//!
//! ```text
//! # comment
//! 36 x a > b > c
//! 80 x a > c > b
//! ```
//!
//! Candidate names get indices in order of first appearance.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_rational::Rational64;
use num_traits::Signed;

use crate::error::{arg, Error, Result};
use crate::ranking::{candidate_name, Candidate, Ranking, RankingIndex};

/// An ordered list of voters' rankings, all over the same candidates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Profile {
    m: usize,
    voters: Vec<Ranking>,
}

impl Profile {
    pub fn new(voters: Vec<Ranking>) -> Result<Self> {
        let Some(first) = voters.first() else {
            return arg("a profile needs at least one voter");
        };
        let m = first.m();
        if voters.iter().any(|v| v.m() != m) {
            return Err(Error::Invariant("voters rank different candidate sets".into()));
        }
        Ok(Profile { m, voters })
    }

    /// Build a profile with `counts[r]` voters holding ranking `r` of the index, in index order.
    pub fn from_counts(m: usize, counts: &[u64]) -> Result<Self> {
        let idx = RankingIndex::get(m)?;
        if counts.len() != idx.len() {
            return arg(format!("expected {} counts, got {}", idx.len(), counts.len()));
        }
        let mut voters = Vec::new();
        for (r, &c) in counts.iter().enumerate() {
            voters.extend(std::iter::repeat_n(idx.ranking(r).clone(), c as usize));
        }
        Profile::new(voters)
    }

    /// Parse a compact listing such as `["abc", "abc", "bca"]`.
    pub fn from_strs(rows: &[&str]) -> Result<Self> {
        let voters = rows
            .iter()
            .map(|s| Ranking::new(s.bytes().map(|b| b.wrapping_sub(b'a') as Candidate).collect()))
            .collect::<Result<Vec<_>>>()?;
        Profile::new(voters)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.voters.len()
    }

    pub fn voters(&self) -> &[Ranking] {
        &self.voters
    }

    pub fn voter(&self, i: usize) -> &Ranking {
        &self.voters[i]
    }

    pub fn into_voters(self) -> Vec<Ranking> {
        self.voters
    }

    /// Voter counts per ranking of the index.
    pub fn counts(&self) -> Result<Vec<u64>> {
        let idx = RankingIndex::get(self.m)?;
        let mut counts = vec![0u64; idx.len()];
        for v in &self.voters {
            counts[v.lex_rank()] += 1;
        }
        Ok(counts)
    }

    /// Index of each voter's ranking.
    pub fn ranking_indices(&self) -> Result<Vec<usize>> {
        RankingIndex::get(self.m)?;
        Ok(self.voters.iter().map(Ranking::lex_rank).collect())
    }

    pub fn histogram(&self) -> Result<Histogram> {
        Histogram::from_counts(self.m, &self.counts()?)
    }

    /// Every voter duplicated `z` times, blocks kept in order.
    pub fn replicate(&self, z: usize) -> Result<Profile> {
        if z == 0 {
            return arg("replication factor must be at least 1");
        }
        let mut voters = Vec::with_capacity(self.n() * z);
        for _ in 0..z {
            voters.extend_from_slice(&self.voters);
        }
        Ok(Profile { m: self.m, voters })
    }

    pub fn concat(parts: &[Profile]) -> Result<Profile> {
        let voters = parts.iter().flat_map(|p| p.voters.iter().cloned()).collect();
        Profile::new(voters)
    }

    /// Rename candidates through `tau` in every ranking.
    pub fn relabel(&self, tau: &Ranking) -> Result<Profile> {
        let voters = self.voters.iter().map(|v| v.relabel(tau)).collect::<Result<_>>()?;
        Ok(Profile { m: self.m, voters })
    }

    pub fn with_voters(&self, voters: Vec<Ranking>) -> Result<Profile> {
        let p = Profile::new(voters)?;
        if p.m != self.m {
            return arg("candidate count changed");
        }
        Ok(p)
    }
}

/// Fraction of voters holding each ranking except the last, which is implied.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram {
    m: usize,
    entries: Vec<Rational64>,
}

impl Histogram {
    pub fn from_counts(m: usize, counts: &[u64]) -> Result<Self> {
        let idx = RankingIndex::get(m)?;
        if counts.len() != idx.len() {
            return arg(format!("expected {} counts, got {}", idx.len(), counts.len()));
        }
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return arg("histogram of an empty profile");
        }
        let entries = counts[..idx.last()].iter().map(|&c| Rational64::new(c as i64, n as i64)).collect();
        Ok(Histogram { m, entries })
    }

    /// A histogram given directly by its `m! - 1` explicit entries.
    pub fn from_entries(m: usize, entries: Vec<Rational64>) -> Result<Self> {
        let idx = RankingIndex::get(m)?;
        if entries.len() != idx.len() - 1 {
            return arg(format!("expected {} entries, got {}", idx.len() - 1, entries.len()));
        }
        let total: Rational64 = entries.iter().sum();
        if entries.iter().any(|e| e.is_negative()) || total > Rational64::from_integer(1) {
            return Err(Error::Invariant("entries must be nonnegative and sum to at most 1".into()));
        }
        Ok(Histogram { m, entries })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn entries(&self) -> &[Rational64] {
        &self.entries
    }

    /// The share of the last ranking, `1 - sum(entries)`.
    pub fn implicit(&self) -> Rational64 {
        Rational64::from_integer(1) - self.entries.iter().sum::<Rational64>()
    }

    /// All `m!` shares, the implicit one last.
    pub fn full(&self) -> Vec<Rational64> {
        let mut v = self.entries.clone();
        v.push(self.implicit());
        v
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(ratio_to_f64).collect()
    }

    pub fn full_f64(&self) -> Vec<f64> {
        self.full().iter().map(ratio_to_f64).collect()
    }
}

pub(crate) fn ratio_to_f64(r: &Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// L1 distance over all `m!` coordinates, the implicit one included.
pub fn l1_distance(h1: &Histogram, h2: &Histogram) -> Result<Rational64> {
    if h1.m != h2.m {
        return arg("histograms over different candidate counts");
    }
    let a = h1.full();
    let b = h2.full();
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum())
}

/// L1 distance over the `m! - 1` explicit coordinates only.
pub fn reduced_l1_distance(h1: &Histogram, h2: &Histogram) -> Result<Rational64> {
    if h1.m != h2.m {
        return arg("histograms over different candidate counts");
    }
    Ok(h1.entries.iter().zip(&h2.entries).map(|(x, y)| (x - y).abs()).sum())
}

/// A parsed profile together with the candidate names from the file.
#[derive(Clone, Debug)]
pub struct NamedProfile {
    pub profile: Profile,
    pub names: Vec<String>,
}

pub fn parse_profile(text: &str) -> Result<NamedProfile> {
    let mut names: Vec<String> = Vec::new();
    let mut lookup: HashMap<String, Candidate> = HashMap::new();
    let mut voters = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse { line: lineno + 1, message };
        let (count, order) = line.split_once(" x ").ok_or_else(|| bad("expected `<count> x a > b > ...`".into()))?;
        let count: usize = count.trim().parse().map_err(|_| bad(format!("bad voter count `{}`", count.trim())))?;
        let declaring = names.is_empty();
        let mut ranking = Vec::new();
        for name in order.split('>') {
            let name = name.trim();
            if name.is_empty() {
                return Err(bad("empty candidate name".into()));
            }
            let c = match lookup.get(name) {
                Some(&c) => c,
                None if declaring => {
                    names.push(name.to_string());
                    lookup.insert(name.to_string(), names.len() - 1);
                    names.len() - 1
                }
                None => return Err(bad(format!("unknown candidate `{name}`"))),
            };
            ranking.push(c);
        }
        if ranking.len() != names.len() {
            return Err(bad(format!("expected {} candidates, got {}", names.len(), ranking.len())));
        }
        let ranking = Ranking::new(ranking).map_err(|e| bad(e.to_string()))?;
        voters.extend(std::iter::repeat_n(ranking, count));
    }
    if voters.is_empty() {
        return Err(Error::Parse { line: 0, message: "profile has no voters".into() });
    }
    Ok(NamedProfile { profile: Profile::new(voters)?, names })
}

/// Write a profile in the text format, merging runs of identical voters.
///
/// When the first voter's ranking does not list candidates in index order a
/// zero-count line is emitted first so that parsing restores the same indices.
pub fn format_profile(profile: &Profile, names: Option<&[String]>) -> String {
    let name = |c: Candidate| match names {
        Some(ns) => ns[c].clone(),
        None => candidate_name(c),
    };
    let line = |r: &Ranking| r.candidates().map(name).collect::<Vec<_>>().join(" > ");
    let mut out = String::new();
    let identity = Ranking::identity(profile.m()).expect("profile has m >= 3");
    if profile.voter(0) != &identity {
        let _ = writeln!(out, "0 x {}", line(&identity));
    }
    let mut i = 0;
    while i < profile.n() {
        let mut j = i;
        while j < profile.n() && profile.voter(j) == profile.voter(i) {
            j += 1;
        }
        let _ = writeln!(out, "{} x {}", j - i, line(profile.voter(i)));
        i = j;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_has_implicit_last_entry() {
        let p = Profile::from_strs(&["abc", "abc", "cba", "bac"]).unwrap();
        let h = p.histogram().unwrap();
        assert_eq!(h.entries().len(), 5);
        assert_eq!(h.entries()[0], Rational64::new(1, 2));
        assert_eq!(h.entries()[2], Rational64::new(1, 4));
        assert_eq!(h.implicit(), Rational64::new(1, 4));
    }

    #[test]
    fn replication_keeps_histogram() {
        let p = Profile::from_strs(&["abc", "bca", "cab", "cab"]).unwrap();
        let q = p.replicate(5).unwrap();
        assert_eq!(q.n(), 20);
        assert_eq!(p.histogram().unwrap(), q.histogram().unwrap());
        assert!(p.replicate(0).is_err());
    }

    #[test]
    fn l1_includes_implicit_coordinate() {
        let a = Profile::from_strs(&["abc", "abc"]).unwrap().histogram().unwrap();
        let b = Profile::from_strs(&["abc", "cba"]).unwrap().histogram().unwrap();
        assert_eq!(l1_distance(&a, &b).unwrap(), Rational64::from_integer(1));
        assert_eq!(reduced_l1_distance(&a, &b).unwrap(), Rational64::new(1, 2));
    }

    #[test]
    fn parses_grouped_lines() {
        let text = "# demo\n\n36 x a > b > c\n80 x a > c > b\n115 x b > a > c\n69 x c > b > a\n";
        let parsed = parse_profile(text).unwrap();
        assert_eq!(parsed.names, ["a", "b", "c"]);
        assert_eq!(parsed.profile.n(), 300);
        assert_eq!(parsed.profile.counts().unwrap(), vec![36, 80, 115, 0, 0, 69]);
    }

    #[test]
    fn first_appearance_assigns_indices() {
        let parsed = parse_profile("2 x zed > amy > bo\n1 x amy > bo > zed").unwrap();
        assert_eq!(parsed.names, ["zed", "amy", "bo"]);
        assert_eq!(parsed.profile.voter(2), &Ranking::new(vec![1, 2, 0]).unwrap());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_profile("1 x a > b > c\n\n2 x a > b").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse_profile("1 x a > b > c\n1 x a > b > d").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_profile("one x a > b > c").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        assert!(parse_profile("# nothing\n").is_err());
    }

    #[test]
    fn text_round_trip() {
        let p = Profile::from_strs(&["cab", "cab", "abc", "bca", "cab"]).unwrap();
        let text = format_profile(&p, None);
        assert!(text.starts_with("0 x a > b > c\n2 x c > a > b\n"));
        assert_eq!(parse_profile(&text).unwrap().profile, p);
    }
}
