//! Rankings over `m` candidates and the lexicographic index of all `m!` of them.

use std::fmt;
use std::sync::OnceLock;

use crate::error::{arg, Error, Result};

/// Candidates are the integers `0..m`.
pub type Candidate = usize;

pub const MIN_CANDIDATES: usize = 3;
/// Largest `m` for which the full `m!`-sized machinery is available.
pub const MAX_CANDIDATES: usize = 6;

/// A strict total order over candidates, stored as the candidate at each position.
///
/// Position 0 is the most preferred. The same type doubles as a permutation of
/// positions when used as the noise argument of [`compose`].
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ranking(Vec<u8>);

impl Ranking {
    pub fn new(order: Vec<Candidate>) -> Result<Self> {
        let m = order.len();
        if m < MIN_CANDIDATES {
            return arg(format!("a ranking needs at least {MIN_CANDIDATES} candidates, got {m}"));
        }
        if m > u8::MAX as usize {
            return arg("too many candidates");
        }
        let mut seen = vec![false; m];
        for &c in &order {
            if c >= m || seen[c] {
                return Err(Error::Invariant(format!("{order:?} is not a permutation of 0..{m}")));
            }
            seen[c] = true;
        }
        Ok(Ranking(order.into_iter().map(|c| c as u8).collect()))
    }

    pub fn identity(m: usize) -> Result<Self> {
        Ranking::new((0..m).collect())
    }

    pub fn m(&self) -> usize {
        self.0.len()
    }

    pub fn candidate_at(&self, position: usize) -> Candidate {
        self.0[position] as Candidate
    }

    pub fn top(&self) -> Candidate {
        self.candidate_at(0)
    }

    pub fn position_of(&self, c: Candidate) -> usize {
        self.0.iter().position(|&x| x as usize == c).expect("candidate out of range")
    }

    /// True when `a` is ranked above `b`.
    pub fn prefers(&self, a: Candidate, b: Candidate) -> bool {
        self.position_of(a) < self.position_of(b)
    }

    pub fn candidates(&self) -> impl Iterator<Item = Candidate> + '_ {
        self.0.iter().map(|&c| c as Candidate)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn inverse(&self) -> Ranking {
        let mut inv = vec![0u8; self.m()];
        for (pos, &c) in self.0.iter().enumerate() {
            inv[c as usize] = pos as u8;
        }
        Ranking(inv)
    }

    /// Rename every candidate `c` to `tau[c]`.
    pub fn relabel(&self, tau: &Ranking) -> Result<Ranking> {
        same_m(self, tau)?;
        Ok(Ranking(self.0.iter().map(|&c| tau.0[c as usize]).collect()))
    }

    /// Position of this ranking in lexicographic order (Lehmer code).
    pub fn lex_rank(&self) -> usize {
        let m = self.m();
        let mut rank = 0;
        for i in 0..m {
            let smaller_later = self.0[i + 1..].iter().filter(|&&x| x < self.0[i]).count();
            rank = rank * (m - i) + smaller_later;
        }
        rank
    }
}

impl fmt::Debug for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ranking({self})")
    }
}

/// Candidates print as `a`, `b`, `c`, ...
impl fmt::Display for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.candidates().enumerate() {
            if i > 0 {
                f.write_str(" > ")?;
            }
            write!(f, "{}", candidate_name(c))?;
        }
        Ok(())
    }
}

pub fn candidate_name(c: Candidate) -> String {
    if c < 26 {
        ((b'a' + c as u8) as char).to_string()
    } else {
        format!("c{c}")
    }
}

fn same_m(a: &Ranking, b: &Ranking) -> Result<()> {
    if a.m() != b.m() {
        return arg(format!("candidate counts differ: {} vs {}", a.m(), b.m()));
    }
    Ok(())
}

/// Apply a permutation of positions to a ranking: `result[i] = pi[sigma[i]]`.
///
/// With `sigma` the identity the ranking is unchanged, and the Kendall tau
/// distance between `pi` and the result equals the inversion count of `sigma`.
pub fn compose(sigma: &Ranking, pi: &Ranking) -> Result<Ranking> {
    same_m(sigma, pi)?;
    Ok(Ranking(sigma.0.iter().map(|&s| pi.0[s as usize]).collect()))
}

/// Number of candidate pairs the two rankings order differently.
pub fn kendall_tau(a: &Ranking, b: &Ranking) -> Result<usize> {
    same_m(a, b)?;
    let pos_b = b.inverse();
    // Relative to b's order, count inversions in a.
    let seq: Vec<u8> = a.0.iter().map(|&c| pos_b.0[c as usize]).collect();
    Ok(inversions(&seq))
}

pub(crate) fn inversions(seq: &[u8]) -> usize {
    let mut count = 0;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                count += 1;
            }
        }
    }
    count
}

pub fn factorial(m: usize) -> usize {
    (1..=m).product()
}

fn check_m(m: usize) -> Result<()> {
    if !(MIN_CANDIDATES..=MAX_CANDIDATES).contains(&m) {
        return arg(format!("m must lie in {MIN_CANDIDATES}..={MAX_CANDIDATES}, got {m}"));
    }
    Ok(())
}

/// All `m!` rankings in lexicographic order. The last one is the reversed identity.
pub fn enumerate_rankings(m: usize) -> Result<Vec<Ranking>> {
    check_m(m)?;
    let mut out = Vec::with_capacity(factorial(m));
    let mut cur: Vec<u8> = (0..m as u8).collect();
    loop {
        out.push(Ranking(cur.clone()));
        if !next_permutation(&mut cur) {
            break;
        }
    }
    Ok(out)
}

fn next_permutation(v: &mut [u8]) -> bool {
    let n = v.len();
    let Some(i) = (0..n - 1).rev().find(|&i| v[i] < v[i + 1]) else {
        return false;
    };
    let j = (i + 1..n).rev().find(|&j| v[j] > v[i]).unwrap();
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

/// Lookup tables over the `m!` rankings, shared per `m`.
#[derive(Debug)]
pub struct RankingIndex {
    m: usize,
    rankings: Vec<Ranking>,
    /// `positions[r * m + c]` is the position of candidate `c` in ranking `r`.
    positions: Vec<u8>,
    /// `compose[s * m! + r]` is the index of `compose(ranking s, ranking r)`.
    compose: Vec<u16>,
    inversions: Vec<u8>,
}

impl RankingIndex {
    fn build(m: usize) -> Result<Self> {
        let rankings = enumerate_rankings(m)?;
        let k = rankings.len();
        let mut positions = vec![0u8; k * m];
        for (r, ranking) in rankings.iter().enumerate() {
            for (pos, c) in ranking.candidates().enumerate() {
                positions[r * m + c] = pos as u8;
            }
        }
        let mut compose_table = vec![0u16; k * k];
        for (s, sigma) in rankings.iter().enumerate() {
            for (r, pi) in rankings.iter().enumerate() {
                compose_table[s * k + r] = compose(sigma, pi)?.lex_rank() as u16;
            }
        }
        let inversions = rankings.iter().map(|r| inversions(&r.0) as u8).collect();
        Ok(RankingIndex { m, rankings, positions, compose: compose_table, inversions })
    }

    /// The shared index for `m` candidates.
    pub fn get(m: usize) -> Result<&'static RankingIndex> {
        check_m(m)?;
        static CELLS: [OnceLock<RankingIndex>; MAX_CANDIDATES + 1] = [const { OnceLock::new() }; MAX_CANDIDATES + 1];
        Ok(CELLS[m].get_or_init(|| RankingIndex::build(m).expect("m already checked")))
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of rankings, `m!`.
    pub fn len(&self) -> usize {
        self.rankings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rankings.is_empty()
    }

    pub fn rankings(&self) -> &[Ranking] {
        &self.rankings
    }

    pub fn ranking(&self, r: usize) -> &Ranking {
        &self.rankings[r]
    }

    pub fn index_of(&self, ranking: &Ranking) -> Result<usize> {
        if ranking.m() != self.m {
            return arg(format!("expected {} candidates, got {}", self.m, ranking.m()));
        }
        Ok(ranking.lex_rank())
    }

    pub fn position(&self, r: usize, c: Candidate) -> usize {
        self.positions[r * self.m + c] as usize
    }

    pub fn prefers(&self, r: usize, a: Candidate, b: Candidate) -> bool {
        self.position(r, a) < self.position(r, b)
    }

    pub fn top(&self, r: usize) -> Candidate {
        self.rankings[r].top()
    }

    /// Index of `compose(ranking sigma, ranking r)`.
    pub fn compose(&self, sigma: usize, r: usize) -> usize {
        self.compose[sigma * self.len() + r] as usize
    }

    /// Inversion count of ranking `r` read as a permutation; its distance to the identity.
    pub fn inversions(&self, r: usize) -> usize {
        self.inversions[r] as usize
    }

    /// Index of the ranking whose histogram entry is implicit.
    pub fn last(&self) -> usize {
        self.len() - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Ranking {
        Ranking::new(s.bytes().map(|b| (b - b'a') as usize).collect()).unwrap()
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let all = enumerate_rankings(3).unwrap();
        let names: Vec<String> = all.iter().map(|x| x.candidates().map(candidate_name).collect()).collect();
        assert_eq!(names, ["abc", "acb", "bac", "bca", "cab", "cba"]);
        assert_eq!(enumerate_rankings(6).unwrap().len(), 720);
        assert!(enumerate_rankings(2).is_err());
        assert!(enumerate_rankings(7).is_err());
    }

    #[test]
    fn lex_rank_matches_enumeration() {
        for m in 3..=5 {
            for (i, x) in enumerate_rankings(m).unwrap().iter().enumerate() {
                assert_eq!(x.lex_rank(), i);
            }
        }
    }

    #[test]
    fn kendall_tau_examples() {
        assert_eq!(kendall_tau(&r("abc"), &r("abc")).unwrap(), 0);
        assert_eq!(kendall_tau(&r("abc"), &r("bac")).unwrap(), 1);
        assert_eq!(kendall_tau(&r("abc"), &r("cba")).unwrap(), 3);
        assert_eq!(kendall_tau(&r("abcd"), &r("dcba")).unwrap(), 6);
        assert!(kendall_tau(&r("abc"), &r("abcd")).is_err());
    }

    #[test]
    fn compose_applies_position_permutation() {
        // Swapping the first two positions.
        assert_eq!(compose(&r("bac"), &r("cab")).unwrap(), r("acb"));
        assert_eq!(compose(&r("abc"), &r("cab")).unwrap(), r("cab"));
    }

    #[test]
    fn rejects_non_permutations() {
        assert!(Ranking::new(vec![0, 0, 1]).is_err());
        assert!(Ranking::new(vec![0, 1]).is_err());
        assert!(Ranking::new(vec![0, 1, 3]).is_err());
    }

    #[test]
    fn index_tables_agree_with_direct_computation() {
        let idx = RankingIndex::get(4).unwrap();
        for s in 0..idx.len() {
            for t in (0..idx.len()).step_by(5) {
                let direct = compose(idx.ranking(s), idx.ranking(t)).unwrap();
                assert_eq!(idx.compose(s, t), idx.index_of(&direct).unwrap());
            }
            let id = Ranking::identity(4).unwrap();
            assert_eq!(idx.inversions(s), kendall_tau(idx.ranking(s), &id).unwrap());
        }
        assert_eq!(idx.ranking(idx.last()), &r("dcba"));
    }
}
