use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::NoiseModel;
use crate::error::Result;
use crate::profile::Profile;
use crate::ranking::{Ranking, RankingIndex};

/// Vose alias table. One 64-bit word selects a column and flips its coin.
#[derive(Clone, Debug)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    pub fn new(weights: &[f64]) -> AliasTable {
        let k = weights.len();
        let total: f64 = weights.iter().sum();
        let mut scaled: Vec<f64> = weights.iter().map(|w| w * k as f64 / total).collect();
        let mut prob = vec![1.0; k];
        let mut alias: Vec<u32> = (0..k as u32).collect();
        let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..k).partition(|&i| scaled[i] < 1.0);
        while let (Some(s), Some(&l)) = (small.pop(), large.last()) {
            prob[s] = scaled[s];
            alias[s] = l as u32;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers are 1 up to rounding.
        AliasTable { prob, alias }
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    /// Map a uniformly random word to an outcome.
    #[inline]
    pub fn sample(&self, word: u64) -> usize {
        let col = (((word >> 32) * self.prob.len() as u64) >> 32) as usize;
        let coin = (word & 0xffff_ffff) as f64 * (1.0 / 4_294_967_296.0);
        if coin < self.prob[col] {
            col
        } else {
            self.alias[col] as usize
        }
    }
}

/// Random stream for one trial.
///
/// Every trial owns a ChaCha8 stream keyed by the master seed and numbered by
/// the trial index; voter `i` of a profile reads the `i`-th 64-bit word. Draws
/// therefore depend only on `(seed, trial, voter)`, never on scheduling.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Draws noisy rankings by index for a fixed model, `m` and `phi`.
#[derive(Clone, Debug)]
pub struct PerturbationSampler {
    idx: &'static RankingIndex,
    table: AliasTable,
}

impl PerturbationSampler {
    pub fn new(model: &dyn NoiseModel, m: usize, phi: f64) -> Result<Self> {
        let idx = RankingIndex::get(m)?;
        let pmf = model.permutation_pmf(idx, phi)?;
        Ok(PerturbationSampler { idx, table: AliasTable::new(&pmf) })
    }

    pub fn index(&self) -> &'static RankingIndex {
        self.idx
    }

    /// Index of the position permutation selected by `word`; 0 is the identity.
    #[inline]
    pub fn sigma(&self, word: u64) -> usize {
        self.table.sample(word)
    }

    /// Noisy version of ranking `base`, both given by index.
    #[inline]
    pub fn perturb(&self, base: usize, word: u64) -> usize {
        self.idx.compose(self.sigma(word), base)
    }

    /// Perturb voters given by ranking index and tally the results.
    pub fn perturb_counts(&self, voters: &[usize], rng: &mut impl RngCore, counts: &mut [u64]) {
        counts.iter_mut().for_each(|c| *c = 0);
        for &v in voters {
            counts[self.perturb(v, rng.next_u64())] += 1;
        }
    }
}

/// One noisy ranking around `base`.
pub fn sample_ranking(model: &dyn NoiseModel, base: &Ranking, phi: f64, rng: &mut impl RngCore) -> Result<Ranking> {
    let sampler = PerturbationSampler::new(model, base.m(), phi)?;
    let b = sampler.idx.index_of(base)?;
    Ok(sampler.idx.ranking(sampler.perturb(b, rng.next_u64())).clone())
}

/// Each voter independently replaced by a draw from the model around their ranking.
pub fn perturb_profile(model: &dyn NoiseModel, profile: &Profile, phi: f64, rng: &mut impl RngCore) -> Result<Profile> {
    let sampler = PerturbationSampler::new(model, profile.m(), phi)?;
    let idx = sampler.index();
    let voters = profile
        .ranking_indices()?
        .into_iter()
        .map(|v| idx.ranking(sampler.perturb(v, rng.next_u64())).clone())
        .collect();
    profile.with_voters(voters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{Mallows, UniformMixture};

    #[test]
    fn alias_table_reproduces_weights() {
        let w = [0.5, 0.25, 0.125, 0.125, 0.0];
        let t = AliasTable::new(&w);
        let mut rng = trial_rng(7, 0);
        let mut hits = [0u32; 5];
        let draws = 200_000;
        for _ in 0..draws {
            hits[t.sample(rng.next_u64())] += 1;
        }
        assert_eq!(hits[4], 0);
        for (h, p) in hits.iter().zip(w) {
            assert!((*h as f64 / draws as f64 - p).abs() < 0.005);
        }
    }

    #[test]
    fn zero_noise_is_identity() {
        let s = PerturbationSampler::new(&Mallows, 4, 0.0).unwrap();
        let mut rng = trial_rng(1, 2);
        for base in 0..24 {
            assert_eq!(s.perturb(base, rng.next_u64()), base);
        }
    }

    #[test]
    fn streams_are_addressable_by_trial() {
        let mut a = trial_rng(42, 3);
        let mut b = trial_rng(42, 3);
        let mut c = trial_rng(42, 4);
        let x = a.next_u64();
        assert_eq!(x, b.next_u64());
        assert_ne!(x, c.next_u64());
    }

    #[test]
    fn perturbation_keeps_size() {
        let p = Profile::from_strs(&["abc", "bca", "cab"]).unwrap();
        let q = perturb_profile(&UniformMixture, &p, 1.0, &mut trial_rng(5, 0)).unwrap();
        assert_eq!(q.n(), 3);
        assert_eq!(q.m(), 3);
    }

    #[test]
    fn single_draws_match_pmf() {
        let base = Ranking::identity(3).unwrap();
        let mut rng = trial_rng(11, 0);
        let draws = 100_000;
        let hits = (0..draws).filter(|_| sample_ranking(&Mallows, &base, 0.5, &mut rng).unwrap() == base).count();
        let p = 8.0 / 21.0;
        let sd = (p * (1.0 - p) / draws as f64).sqrt();
        assert!((hits as f64 / draws as f64 - p).abs() < 3.0 * sd);
    }
}
