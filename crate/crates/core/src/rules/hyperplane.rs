use num_integer::Integer;
use num_rational::Rational64;
use num_traits::Signed;

use super::{integer_weights, VotingRule};
use crate::error::{arg, Result};
use crate::profile::Histogram;
use crate::ranking::{kendall_tau, RankingIndex};

/// A hyperplane in histogram space.
///
/// Stored as an integer functional `c` over all `m!` rankings whose zero set is
/// the plane: `sum_pi c[pi] h[pi] = 0`. Because the shares sum to one this is the
/// affine plane `a . h = b` over the explicit coordinates with
/// `a[pi] = c[pi] - c[last]` and `b = -c[last]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hyperplane {
    c: Vec<i64>,
    label: String,
}

impl Hyperplane {
    /// `None` when the functional is constant and so defines no plane.
    pub fn from_functional(c: Vec<i64>, label: impl Into<String>) -> Option<Self> {
        let last = *c.last()?;
        if c.iter().all(|&x| x == last) {
            return None;
        }
        let g = c.iter().fold(0i64, |acc, &x| acc.gcd(&x));
        let c = c.into_iter().map(|x| x / g).collect();
        Some(Hyperplane { c, label: label.into() })
    }

    pub fn functional(&self) -> &[i64] {
        &self.c
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The `m! - 1` coefficients `a` of `a . h = b`.
    pub fn coefficients(&self) -> Vec<Rational64> {
        let last = *self.c.last().unwrap();
        self.c[..self.c.len() - 1].iter().map(|&x| Rational64::from_integer(x - last)).collect()
    }

    /// The constant `b` of `a . h = b`.
    pub fn offset(&self) -> Rational64 {
        Rational64::from_integer(-*self.c.last().unwrap())
    }

    /// `max |a|`, the denominator of the explicit-coordinate L1 distance.
    pub fn reduced_norm(&self) -> i64 {
        let last = *self.c.last().unwrap();
        self.c.iter().map(|&x| (x - last).abs()).max().unwrap()
    }

    /// `max c - min c`: twice the change per unit of full L1 movement.
    pub fn full_range(&self) -> i64 {
        self.c.iter().max().unwrap() - self.c.iter().min().unwrap()
    }

    /// `n (a . h - b)` for the profile with these ranking counts.
    #[inline]
    pub fn value_counts(&self, counts: &[u64]) -> i64 {
        self.c.iter().zip(counts).map(|(&c, &k)| c * k as i64).sum()
    }

    /// `a . h - b` for a point given by all `m!` shares.
    pub fn value_full(&self, shares: &[f64]) -> f64 {
        self.c.iter().zip(shares).map(|(&c, &h)| c as f64 * h).sum()
    }

    /// `a . h - b` for a point given by its `m! - 1` explicit shares.
    pub fn value(&self, entries: &[f64]) -> f64 {
        let last = *self.c.last().unwrap();
        let ax: f64 = self.c.iter().zip(entries).map(|(&c, &h)| (c - last) as f64 * h).sum();
        ax + last as f64
    }

    /// L1 distance over explicit coordinates, `|a . h - b| / max |a|`.
    pub fn distance(&self, entries: &[f64]) -> f64 {
        self.value(entries).abs() / self.reduced_norm() as f64
    }

    pub fn distance_exact(&self, h: &Histogram) -> Rational64 {
        let v: Rational64 = self.c.iter().zip(h.full()).map(|(&c, x)| x * c).sum();
        v.abs() / self.reduced_norm()
    }

    /// Lower bound on the full L1 distance (all `m!` coordinates) to the plane.
    pub fn full_distance_exact(&self, h: &Histogram) -> Rational64 {
        let v: Rational64 = self.c.iter().zip(h.full()).map(|(&c, x)| x * c).sum();
        v.abs() * 2 / self.full_range()
    }

    pub fn contains_counts(&self, counts: &[u64]) -> bool {
        self.value_counts(counts) == 0
    }
}

/// Exact explicit-coordinate L1 distance from a histogram to a plane.
pub fn l1_distance_to_hyperplane(h: &Histogram, plane: &Hyperplane) -> Rational64 {
    plane.distance_exact(h)
}

/// The planes off which a rule's outcome is locally constant.
#[derive(Clone, Debug)]
pub struct HyperplaneSet {
    pub planes: Vec<Hyperplane>,
    /// Whether every point off the planes has a single winner.
    pub decisive: bool,
}

impl HyperplaneSet {
    /// Smallest explicit-coordinate distance, with the index of the closest plane.
    pub fn min_distance(&self, h: &Histogram) -> (Rational64, usize) {
        self.planes.iter().enumerate().map(|(i, p)| (p.distance_exact(h), i)).min().expect("at least one plane")
    }

    pub fn min_full_distance(&self, h: &Histogram) -> Rational64 {
        self.planes.iter().map(|p| p.full_distance_exact(h)).min().expect("at least one plane")
    }

    /// Whether some plane lies within `delta` of the counts' histogram.
    pub fn within_counts(&self, counts: &[u64], n: u64, delta: f64) -> bool {
        self.planes.iter().any(|p| {
            let v = p.value_counts(counts).unsigned_abs();
            if delta == 0.0 {
                v == 0
            } else {
                v as f64 <= delta * n as f64 * p.reduced_norm() as f64
            }
        })
    }
}

fn margin_functional(idx: &RankingIndex, x: usize, y: usize) -> Vec<i64> {
    (0..idx.len()).map(|r| if idx.prefers(r, x, y) { 1 } else { -1 }).collect()
}

fn push_unique(planes: &mut Vec<Hyperplane>, plane: Option<Hyperplane>) {
    if let Some(p) = plane {
        let neg: Vec<i64> = p.c.iter().map(|x| -x).collect();
        if !planes.iter().any(|q| q.c == p.c || q.c == neg) {
            planes.push(p);
        }
    }
}

/// Hyperplanes of a rule for `m` candidates.
///
/// Scoring rules get one score-tie plane per candidate pair and Copeland one
/// margin-zero plane per pair. Minimax also needs the planes where two pairwise
/// margins have equal magnitude, since its outcome compares margin sizes.
/// Kemeny gets one plane per pair of rankings and is available up to `m = 5`.
pub fn hyperplanes_of(rule: &VotingRule, m: usize) -> Result<HyperplaneSet> {
    let idx = RankingIndex::get(m)?;
    let name = crate::ranking::candidate_name;
    let mut planes = Vec::new();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|x| (x + 1..m).map(move |y| (x, y))).collect();
    if let Some(w) = rule.weights(m)? {
        let w = integer_weights(&w);
        for &(x, y) in &pairs {
            let c = (0..idx.len()).map(|r| w[idx.position(r, x)] - w[idx.position(r, y)]).collect();
            push_unique(&mut planes, Hyperplane::from_functional(c, format!("score {} = {}", name(x), name(y))));
        }
    } else {
        match rule {
            VotingRule::Copeland | VotingRule::Minimax => {
                let margins: Vec<Vec<i64>> = pairs.iter().map(|&(x, y)| margin_functional(idx, x, y)).collect();
                for (&(x, y), f) in pairs.iter().zip(&margins) {
                    push_unique(
                        &mut planes,
                        Hyperplane::from_functional(f.clone(), format!("margin {}{} = 0", name(x), name(y))),
                    );
                }
                if *rule == VotingRule::Minimax {
                    for i in 0..pairs.len() {
                        for j in i + 1..pairs.len() {
                            let (p, q) = (pairs[i], pairs[j]);
                            let tag = format!("{}{} {}{}", name(p.0), name(p.1), name(q.0), name(q.1));
                            let diff = margins[i].iter().zip(&margins[j]).map(|(a, b)| a - b).collect();
                            let sum = margins[i].iter().zip(&margins[j]).map(|(a, b)| a + b).collect();
                            push_unique(&mut planes, Hyperplane::from_functional(diff, format!("margins {tag} equal")));
                            push_unique(
                                &mut planes,
                                Hyperplane::from_functional(sum, format!("margins {tag} opposite")),
                            );
                        }
                    }
                }
            }
            VotingRule::Kemeny => {
                if m > 5 {
                    return arg("Kemeny hyperplanes are only available for m <= 5");
                }
                let rankings = idx.rankings();
                let kt: Vec<Vec<i64>> = rankings
                    .iter()
                    .map(|r| rankings.iter().map(|p| kendall_tau(r, p).unwrap() as i64).collect())
                    .collect();
                for s in 0..rankings.len() {
                    for t in s + 1..rankings.len() {
                        let c = kt[t].iter().zip(&kt[s]).map(|(a, b)| a - b).collect();
                        let label = format!("kemeny [{}] = [{}]", rankings[s], rankings[t]);
                        push_unique(&mut planes, Hyperplane::from_functional(c, label));
                    }
                }
            }
            _ => unreachable!("scoring rules handled above"),
        }
    }
    Ok(HyperplaneSet { planes, decisive: rule.is_decisive() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Profile;

    #[test]
    fn plane_counts() {
        assert_eq!(hyperplanes_of(&VotingRule::Plurality, 3).unwrap().planes.len(), 3);
        assert_eq!(hyperplanes_of(&VotingRule::Borda, 4).unwrap().planes.len(), 6);
        assert_eq!(hyperplanes_of(&VotingRule::Copeland, 4).unwrap().planes.len(), 6);
        assert_eq!(hyperplanes_of(&VotingRule::Minimax, 3).unwrap().planes.len(), 3 + 6);
        // Ranking pairs differing on the same candidate pairs give the same plane.
        assert_eq!(hyperplanes_of(&VotingRule::Kemeny, 3).unwrap().planes.len(), 9);
        assert!(hyperplanes_of(&VotingRule::Kemeny, 6).is_err());
        assert!(!hyperplanes_of(&VotingRule::Copeland, 3).unwrap().decisive);
    }

    #[test]
    fn margin_planes_are_unit_functionals() {
        let set = hyperplanes_of(&VotingRule::Minimax, 3).unwrap();
        for p in &set.planes[..3] {
            assert!(p.functional().iter().all(|&c| c.abs() == 1));
            // In explicit coordinates the last ranking's value moves to the constant.
            assert!(p.coefficients().iter().all(|a| [0, 2, -2].contains(&a.to_integer())));
            assert_eq!(p.offset().to_integer().abs(), 1);
        }
    }

    #[test]
    fn plurality_distance_is_half_gap_per_unit() {
        // a 4, b 3, c 2 of 9: the a-b plane has |a . h - b| = 1/9 and max |a| = 1.
        let p = Profile::from_counts(3, &[4, 0, 3, 0, 0, 2]).unwrap();
        let h = p.histogram().unwrap();
        let set = hyperplanes_of(&VotingRule::Plurality, 3).unwrap();
        let ab = &set.planes[0];
        assert_eq!(ab.distance_exact(&h), Rational64::new(1, 9));
        assert_eq!(ab.full_distance_exact(&h), Rational64::new(1, 9));
        let entries = h.to_f64();
        assert!((ab.distance(&entries) - 1.0 / 9.0).abs() < 1e-15);
        // The b-c plane has coefficient 2 on some rankings once c > b > a is implicit.
        assert_eq!(set.min_distance(&h).0, Rational64::new(1, 18));
        assert_eq!(set.min_full_distance(&h), Rational64::new(1, 9));
    }

    #[test]
    fn ties_lie_on_planes() {
        let counts = [1, 0, 1, 0, 0, 0];
        let set = hyperplanes_of(&VotingRule::Plurality, 3).unwrap();
        assert!(set.planes[0].contains_counts(&counts));
        assert!(set.within_counts(&counts, 2, 0.0));
        assert!(!set.within_counts(&[2, 0, 1, 0, 0, 0], 3, 0.0));
    }
}
