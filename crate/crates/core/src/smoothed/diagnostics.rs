//! Concentration checks, thick-hyperplane mass and group-flip experiments.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{check_trials, count, tally, BaseGenerator, Estimate};
use crate::axioms::{counterexample_library, RhoSchedule};
use crate::error::{arg, Error, Result};
use crate::noise::{
    check_phi, exact_decimal, expected_histogram, expected_histogram_exact, pmf, NoiseKind, PerturbationSampler,
};
use crate::profile::Profile;
use crate::ranking::RankingIndex;
use crate::rules::{hyperplanes_of, HyperplaneSet, VotingRule};

/// Width of the slab around each hyperplane, as a function of `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DeltaSchedule {
    /// Only points exactly on a plane.
    Zero,
    /// `c * n^e` with `e < -1/2`.
    Power { c: f64, e: f64 },
}

impl DeltaSchedule {
    pub fn power(c: f64, e: f64) -> Result<Self> {
        let s = DeltaSchedule::Power { c, e };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if let DeltaSchedule::Power { c, e } = *self {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::Config(format!("delta coefficient must be positive, got {c}")));
            }
            if !(e.is_finite() && e < -0.5) {
                return Err(Error::Config(format!("delta exponent must be below -1/2, got {e}")));
            }
        }
        Ok(())
    }

    pub fn eval(&self, n: usize) -> f64 {
        match *self {
            DeltaSchedule::Zero => 0.0,
            DeltaSchedule::Power { c, e } => c * (n as f64).powf(e),
        }
    }
}

impl std::fmt::Display for DeltaSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DeltaSchedule::Zero => f.write_str("zero"),
            DeltaSchedule::Power { c, e } => write!(f, "pow:{c},{e}"),
        }
    }
}

fn planes(rule: &VotingRule, m: usize) -> Result<HyperplaneSet> {
    hyperplanes_of(rule, m).map_err(|e| Error::Config(format!("rule {rule} has no hyperplanes for m = {m}: {e}")))
}

/// For each `n`, the chance that the noisy histogram lies within `delta(n)` of one
/// of the rule's planes, measured over the `m! - 1` explicit shares.
#[allow(clippy::too_many_arguments)]
pub fn thick_hyperplane_probability(
    rule: &VotingRule,
    base: &BaseGenerator,
    m: usize,
    noise: NoiseKind,
    phi: f64,
    delta: DeltaSchedule,
    sizes: &[usize],
    trials: u64,
    seed: u64,
) -> Result<Vec<(usize, Estimate)>> {
    check_trials(trials)?;
    check_phi(phi)?;
    delta.validate()?;
    let set = planes(rule, m)?;
    let sampler = PerturbationSampler::new(noise.model(), m, phi)?;
    sizes
        .iter()
        .map(|&n| {
            let voters = base.profile(m, n)?.ranking_indices()?;
            let d = delta.eval(n);
            let hits = count(trials, seed, |rng| {
                let mut counts = vec![0u64; sampler.index().len()];
                sampler.perturb_counts(&voters, rng, &mut counts);
                Ok(set.within_counts(&counts, n as u64, d))
            })?;
            Ok((n, Estimate::new(hits, trials, seed)?))
        })
        .collect()
}

/// Chance of a winner-changing coalition at one electorate size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupFlipRow {
    pub n: usize,
    pub rho: u64,
    /// Some plane within `2 rho / n`, so the certificate cannot rule a flip out.
    pub certificate: Estimate,
    /// Exact answer from the top-two first-place gap; plurality only.
    pub exact: Option<Estimate>,
    /// Trials where the certificate claimed stability but the exact method found a flip.
    pub contradictions: u64,
}

/// For each `n`, estimate the chance that `rho(n)` voters could change the winners.
#[allow(clippy::too_many_arguments)]
pub fn group_flip_probability(
    rule: &VotingRule,
    base: &BaseGenerator,
    m: usize,
    noise: NoiseKind,
    phi: f64,
    rho: RhoSchedule,
    sizes: &[usize],
    trials: u64,
    seed: u64,
) -> Result<Vec<GroupFlipRow>> {
    check_trials(trials)?;
    check_phi(phi)?;
    let set = planes(rule, m)?;
    let sampler = PerturbationSampler::new(noise.model(), m, phi)?;
    let idx = sampler.index();
    let plurality = *rule == VotingRule::Plurality;
    sizes
        .iter()
        .map(|&n| {
            let voters = base.profile(m, n)?.ranking_indices()?;
            let k = rho.eval(n) as i64;
            let [cert, exact, contra] = tally::<3, _>(trials, seed, |rng| {
                let mut counts = vec![0u64; idx.len()];
                sampler.perturb_counts(&voters, rng, &mut counts);
                // Certified when every plane is farther than 2 rho / n.
                let cert =
                    k > 0 && set.planes.iter().any(|p| p.value_counts(&counts).abs() <= 2 * k * p.reduced_norm());
                let exact = plurality && k > 0 && top_two_gap(idx, &counts) <= 2 * k;
                Ok([cert, exact, exact && !cert])
            })?;
            Ok(GroupFlipRow {
                n,
                rho: k as u64,
                certificate: Estimate::new(cert, trials, seed)?,
                exact: if plurality { Some(Estimate::new(exact, trials, seed)?) } else { None },
                contradictions: contra,
            })
        })
        .collect()
}

fn top_two_gap(idx: &RankingIndex, counts: &[u64]) -> i64 {
    let mut first = vec![0i64; idx.m()];
    for (r, &c) in counts.iter().enumerate() {
        first[idx.top(r)] += c as i64;
    }
    first.sort_unstable_by(|a, b| b.cmp(a));
    first[0] - first[1]
}

/// The three `appendixD` margins at one noise level.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginRow {
    pub phi: f64,
    /// b over a, b over c, and a's score lead over b, as shares of the electorate.
    pub margins: [f64; 3],
    /// The same margins times the Mallows normalizer `1 + 2 phi + 2 phi^2 + phi^3`.
    pub scaled: [f64; 3],
    /// `(1-phi)(17-23phi+17phi^2)/75`, `(1-phi)(1+116phi+phi^2)/150`, `(1-phi)(1+phi)(1+11phi)/300`.
    pub polynomials: [f64; 3],
    /// Whether each scaled margin equals its polynomial exactly.
    pub scaled_match: [bool; 3],
    pub all_positive: bool,
}

/// Exact margins of the expected noisy `appendixD` profile for scoring vector `(1, s, 0)`.
pub fn verify_appendix_d_margins(phi_grid: &[f64], s: f64) -> Result<Vec<MarginRow>> {
    if !(0.0..=1.0).contains(&s) {
        return arg(format!("s must lie in [0, 1], got {s}"));
    }
    let profile = counterexample_library("appendixD", None)?.profile()?;
    let s = exact_decimal(s)?;
    // Lexicographic ranking indices for three candidates.
    let [abc, acb, bac, bca, cab, cba] = [0, 1, 2, 3, 4, 5];
    let int = |k: i64| BigRational::from_integer(BigInt::from(k));
    let f = |x: &BigRational| x.to_f64().unwrap_or(f64::NAN);
    phi_grid
        .iter()
        .map(|&phi| {
            if !(0.0..1.0).contains(&phi) {
                return arg(format!("phi must lie in [0, 1), got {phi}"));
            }
            let p = exact_decimal(phi)?;
            let mu = expected_histogram_exact(NoiseKind::Mallows.model(), &profile, &p)?;
            let margins = [
                &mu[bac] + &mu[bca] + &mu[cba] - &mu[abc] - &mu[acb] - &mu[cab],
                &mu[bca] + &mu[bac] + &mu[abc] - &mu[cba] - &mu[cab] - &mu[acb],
                &mu[abc] + &mu[acb] + &s * &mu[bac] + &s * &mu[cab]
                    - &mu[bac]
                    - &mu[bca]
                    - &s * &mu[abc]
                    - &s * &mu[cba],
            ];
            let one = BigRational::one();
            let z = &one + int(2) * &p + int(2) * &p * &p + &p * &p * &p;
            let q = &one - &p;
            let polys = [
                &q * (int(17) - int(23) * &p + int(17) * &p * &p) / int(75),
                &q * (&one + int(116) * &p + &p * &p) / int(150),
                &q * (&one + &p) * (&one + int(11) * &p) / int(300),
            ];
            let scaled = margins.clone().map(|x| x * &z);
            Ok(MarginRow {
                phi,
                margins: margins.each_ref().map(f),
                scaled: scaled.each_ref().map(f),
                polynomials: polys.each_ref().map(f),
                scaled_match: [0, 1, 2].map(|i| scaled[i] == polys[i]),
                all_positive: margins.iter().all(|x| *x > BigRational::zero()),
            })
        })
        .collect()
}

/// Normal approximation error for one half-space of one histogram coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BerryEsseenPoint {
    pub n: usize,
    /// The half-space is "at most `threshold` voters report the ranking".
    pub threshold: u64,
    pub empirical: Estimate,
    pub gaussian: f64,
    pub gap: f64,
}

/// Compare `Pr[count of ranking <= t]` with the moment-matched normal, `t` the floor of the mean.
pub fn berry_esseen_gap(
    noise: NoiseKind,
    base: &Profile,
    phi: f64,
    ranking: usize,
    trials: u64,
    seed: u64,
) -> Result<BerryEsseenPoint> {
    check_trials(trials)?;
    let idx = RankingIndex::get(base.m())?;
    if ranking >= idx.len() {
        return arg(format!("ranking index {ranking} out of range"));
    }
    let (mut mean, mut var) = (0.0, 0.0);
    for (r, c) in base.counts()?.into_iter().enumerate().filter(|&(_, c)| c > 0) {
        let q = pmf(noise.model(), idx.ranking(r), phi)?[ranking];
        mean += c as f64 * q;
        var += c as f64 * q * (1.0 - q);
    }
    if var <= 0.0 {
        return arg("the coordinate has no variance at this noise level");
    }
    let threshold = mean.floor() as u64;
    let sampler = PerturbationSampler::new(noise.model(), base.m(), phi)?;
    let voters = base.ranking_indices()?;
    let hits = count(trials, seed, |rng| {
        let k = voters.iter().filter(|&&v| sampler.perturb(v, rng.next_u64()) == ranking).count() as u64;
        Ok(k <= threshold)
    })?;
    let empirical = Estimate::new(hits, trials, seed)?;
    let normal = Normal::new(mean, var.sqrt()).map_err(|e| Error::Invariant(e.to_string()))?;
    let gaussian = normal.cdf(threshold as f64);
    Ok(BerryEsseenPoint { n: base.n(), threshold, empirical, gaussian, gap: (empirical.p_hat - gaussian).abs() })
}

/// Least-squares slope of `ln y` against `ln x`, skipping points with `y <= 0`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        xs.iter().zip(ys).filter(|(x, y)| **x > 0.0 && **y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Point the noisy histogram is compared with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Center {
    /// The expected noisy histogram.
    Expected,
    /// The histogram of the profile before noise.
    Base,
}

/// Chance that the noisy histogram lies strictly within `eps` of the center in L1 over all `m!` shares.
pub fn l1_concentration(
    noise: NoiseKind,
    base: &Profile,
    phi: f64,
    center: Center,
    eps: f64,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    check_trials(trials)?;
    let n = base.n() as f64;
    let target: Vec<f64> = match center {
        Center::Expected => {
            let mut e = expected_histogram(noise.model(), base, phi)?;
            e.push(1.0 - e.iter().sum::<f64>());
            e
        }
        Center::Base => base.counts()?.into_iter().map(|c| c as f64 / n).collect(),
    };
    let sampler = PerturbationSampler::new(noise.model(), base.m(), phi)?;
    let voters = base.ranking_indices()?;
    let hits = count(trials, seed, |rng| {
        let mut counts = vec![0u64; target.len()];
        sampler.perturb_counts(&voters, rng, &mut counts);
        let d: f64 = counts.iter().zip(&target).map(|(&c, t)| (c as f64 / n - t).abs()).sum();
        Ok(d < eps)
    })?;
    Estimate::new(hits, trials, seed)
}
