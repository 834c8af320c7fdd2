//! Noise models: distributions over permutations of ranking positions.
//!
//! A voter with ranking `pi` reports `compose(sigma, pi)` where `sigma` is drawn
//! from the model. Both shipped models are neutral, so the distribution of the
//! reported ranking depends on `pi` only through this composition.

mod analytics;
mod sampler;

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::ranking::{Ranking, RankingIndex};

pub use analytics::{
    closed_form_inverse, covariance, expected_histogram, expected_histogram_exact, hoeffding_bound, min_eigenvalue,
    min_eigenvalue_floor, starting_concentration_bound,
};
pub use sampler::{perturb_profile, sample_ranking, trial_rng, AliasTable, PerturbationSampler};

/// Names accepted by [`NoiseKind::from_str`].
pub const MODEL_NAMES: &[&str] = &["mallows", "uniform-mixture"];

/// A family of distributions over position permutations indexed by `phi` in `[0, 1]`.
pub trait NoiseModel: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Probability of each permutation, in the index's lexicographic order.
    fn permutation_pmf(&self, idx: &RankingIndex, phi: f64) -> Result<Vec<f64>>;

    /// Exact version of [`NoiseModel::permutation_pmf`] for rational `phi`.
    fn permutation_pmf_exact(&self, idx: &RankingIndex, phi: &BigRational) -> Result<Vec<BigRational>>;
}

/// Kendall-tau Mallows noise: `Pr[sigma]` proportional to `phi^inv(sigma)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Mallows;

/// With probability `1 - phi` keep the ranking, otherwise redraw it uniformly.
#[derive(Clone, Copy, Debug, Default)]
pub struct UniformMixture;

pub(crate) fn check_phi(phi: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&phi) {
        return arg(format!("phi must lie in [0, 1], got {phi}"));
    }
    Ok(())
}

fn check_phi_exact(phi: &BigRational) -> Result<()> {
    if phi < &BigRational::zero() || phi > &BigRational::one() {
        return arg(format!("phi must lie in [0, 1], got {phi}"));
    }
    Ok(())
}

impl NoiseModel for Mallows {
    fn name(&self) -> &'static str {
        "mallows"
    }

    fn permutation_pmf(&self, idx: &RankingIndex, phi: f64) -> Result<Vec<f64>> {
        check_phi(phi)?;
        let w: Vec<f64> = (0..idx.len()).map(|s| phi.powi(idx.inversions(s) as i32)).collect();
        let z: f64 = w.iter().sum();
        Ok(w.into_iter().map(|x| x / z).collect())
    }

    fn permutation_pmf_exact(&self, idx: &RankingIndex, phi: &BigRational) -> Result<Vec<BigRational>> {
        check_phi_exact(phi)?;
        let max_inv = idx.m() * (idx.m() - 1) / 2;
        let mut powers = vec![BigRational::one()];
        for k in 1..=max_inv {
            powers.push(&powers[k - 1] * phi);
        }
        let w: Vec<BigRational> = (0..idx.len()).map(|s| powers[idx.inversions(s)].clone()).collect();
        let z: BigRational = w.iter().sum();
        Ok(w.into_iter().map(|x| x / &z).collect())
    }
}

impl NoiseModel for UniformMixture {
    fn name(&self) -> &'static str {
        "uniform-mixture"
    }

    fn permutation_pmf(&self, idx: &RankingIndex, phi: f64) -> Result<Vec<f64>> {
        check_phi(phi)?;
        let k = idx.len() as f64;
        let mut p = vec![phi / k; idx.len()];
        p[0] += 1.0 - phi;
        Ok(p)
    }

    fn permutation_pmf_exact(&self, idx: &RankingIndex, phi: &BigRational) -> Result<Vec<BigRational>> {
        check_phi_exact(phi)?;
        let k = BigRational::from_integer(BigInt::from(idx.len()));
        let mut p = vec![phi / &k; idx.len()];
        p[0] += BigRational::one() - phi;
        Ok(p)
    }
}

/// The registered models, usable by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    Mallows,
    UniformMixture,
}

impl NoiseKind {
    pub fn model(self) -> &'static dyn NoiseModel {
        match self {
            NoiseKind::Mallows => &Mallows,
            NoiseKind::UniformMixture => &UniformMixture,
        }
    }

    pub fn name(self) -> &'static str {
        self.model().name()
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mallows" => Ok(NoiseKind::Mallows),
            "uniform-mixture" => Ok(NoiseKind::UniformMixture),
            _ => Err(Error::Config(format!("unknown noise model `{s}`; expected one of {}", MODEL_NAMES.join(", ")))),
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A model together with its noise level, as written in configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub model: NoiseKind,
    pub phi: f64,
}

impl NoiseSpec {
    pub fn new(model: NoiseKind, phi: f64) -> Result<Self> {
        check_phi(phi)?;
        Ok(NoiseSpec { model, phi })
    }
}

/// Distribution of the reported ranking for a voter whose true ranking is `base`.
pub fn pmf(model: &dyn NoiseModel, base: &Ranking, phi: f64) -> Result<Vec<f64>> {
    let idx = RankingIndex::get(base.m())?;
    let b = idx.index_of(base)?;
    let p = model.permutation_pmf(idx, phi)?;
    let mut out = vec![0.0; idx.len()];
    for (s, ps) in p.into_iter().enumerate() {
        out[idx.compose(s, b)] += ps;
    }
    Ok(out)
}

pub fn pmf_exact(model: &dyn NoiseModel, base: &Ranking, phi: &BigRational) -> Result<Vec<BigRational>> {
    let idx = RankingIndex::get(base.m())?;
    let b = idx.index_of(base)?;
    let p = model.permutation_pmf_exact(idx, phi)?;
    let mut out = vec![BigRational::zero(); idx.len()];
    for (s, ps) in p.into_iter().enumerate() {
        out[idx.compose(s, b)] += ps;
    }
    Ok(out)
}

/// Smallest probability the model gives to any single outcome.
pub fn min_prob(model: &dyn NoiseModel, phi: f64, m: usize) -> Result<f64> {
    let idx = RankingIndex::get(m)?;
    let p = model.permutation_pmf(idx, phi)?;
    Ok(p.into_iter().fold(f64::INFINITY, f64::min))
}

/// The decimal number a float prints as, as an exact fraction.
///
/// `0.1` becomes `1/10` rather than the nearest binary fraction.
pub fn exact_decimal(x: f64) -> Result<BigRational> {
    if !x.is_finite() {
        return arg(format!("not a finite number: {x}"));
    }
    let s = format!("{x}");
    let (neg, digits) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.as_str()),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    let numer: BigInt = format!("{int}{frac}").parse().expect("float display is numeric");
    let denom = num_traits::pow(BigInt::from(10), frac.len());
    let r = BigRational::new(numer, denom);
    Ok(if neg { -r } else { r })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Ranking {
        Ranking::new(s.bytes().map(|b| (b - b'a') as usize).collect()).unwrap()
    }

    #[test]
    fn mallows_m3_normalizer() {
        // Z = 1 + 2 phi + 2 phi^2 + phi^3 at phi = 1/2 is 21/8.
        let p = pmf(&Mallows, &r("abc"), 0.5).unwrap();
        assert!((p[0] - 8.0 / 21.0).abs() < 1e-12);
        assert!((p[5] - 1.0 / 21.0).abs() < 1e-12);
        let phi = BigRational::new(1.into(), 2.into());
        let e = pmf_exact(&Mallows, &r("abc"), &phi).unwrap();
        assert_eq!(e[0], BigRational::new(8.into(), 21.into()));
    }

    #[test]
    fn phi_extremes() {
        let p = pmf(&Mallows, &r("bca"), 0.0).unwrap();
        assert_eq!(p[3], 1.0);
        assert_eq!(p.iter().sum::<f64>(), 1.0);
        let u = pmf(&Mallows, &r("bca"), 1.0).unwrap();
        assert!(u.iter().all(|&x| (x - 1.0 / 6.0).abs() < 1e-15));
        let mix = pmf(&UniformMixture, &r("bca"), 1.0).unwrap();
        assert!(mix.iter().all(|&x| (x - 1.0 / 6.0).abs() < 1e-15));
        assert!(pmf(&Mallows, &r("abc"), 1.5).is_err());
        assert!(pmf(&Mallows, &r("abc"), -0.1).is_err());
    }

    #[test]
    fn uniform_mixture_keeps_ranking_with_extra_mass() {
        let p = pmf(&UniformMixture, &r("cab"), 0.3).unwrap();
        assert!((p[4] - (0.7 + 0.05)).abs() < 1e-15);
        assert!((p[0] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn min_prob_is_reversal_mass() {
        let z = 1.0 + 2.0 * 0.5 + 2.0 * 0.25 + 0.125;
        assert!((min_prob(&Mallows, 0.5, 3).unwrap() - 0.125 / z).abs() < 1e-15);
        assert_eq!(min_prob(&Mallows, 0.0, 3).unwrap(), 0.0);
    }

    #[test]
    fn exact_decimals() {
        assert_eq!(exact_decimal(0.1).unwrap(), BigRational::new(1.into(), 10.into()));
        assert_eq!(exact_decimal(1.0).unwrap(), BigRational::one());
        assert_eq!(exact_decimal(-0.25).unwrap(), BigRational::new((-1).into(), 4.into()));
    }

    #[test]
    fn spec_round_trip() {
        let spec: NoiseSpec = serde_json::from_str(r#"{"model":"uniform-mixture","phi":0.25}"#).unwrap();
        assert_eq!(spec.model, NoiseKind::UniformMixture);
        assert!("gaussian".parse::<NoiseKind>().is_err());
    }
}
