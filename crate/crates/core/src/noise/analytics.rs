use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::Zero;

use super::{pmf, pmf_exact, NoiseModel};
use crate::error::{arg, Error, Result};
use crate::profile::Profile;
use crate::ranking::{factorial, RankingIndex};

/// Per-ranking groups of voters: `(ranking, how many voters hold it)`.
fn groups(profile: &Profile) -> Result<Vec<(usize, u64)>> {
    Ok(profile.counts()?.into_iter().enumerate().filter(|&(_, c)| c > 0).collect())
}

/// Mean of the noisy histogram, the `m! - 1` explicit entries.
pub fn expected_histogram(model: &dyn NoiseModel, profile: &Profile, phi: f64) -> Result<Vec<f64>> {
    let idx = RankingIndex::get(profile.m())?;
    let mut out = vec![0.0; idx.len()];
    for (r, c) in groups(profile)? {
        let q = pmf(model, idx.ranking(r), phi)?;
        for (o, p) in out.iter_mut().zip(q) {
            *o += c as f64 * p;
        }
    }
    let n = profile.n() as f64;
    out.pop();
    Ok(out.into_iter().map(|x| x / n).collect())
}

/// Exact mean of the noisy histogram over all `m!` rankings, the implicit one included.
pub fn expected_histogram_exact(
    model: &dyn NoiseModel,
    profile: &Profile,
    phi: &BigRational,
) -> Result<Vec<BigRational>> {
    let idx = RankingIndex::get(profile.m())?;
    let mut out = vec![BigRational::zero(); idx.len()];
    for (r, c) in groups(profile)? {
        let q = pmf_exact(model, idx.ranking(r), phi)?;
        let c = BigRational::from_integer(c.into());
        for (o, p) in out.iter_mut().zip(q) {
            *o += &c * p;
        }
    }
    let n = BigRational::from_integer(profile.n().into());
    Ok(out.into_iter().map(|x| x / &n).collect())
}

/// Covariance of the noisy histogram's explicit entries.
///
/// A voter whose noisy ranking has distribution `q` contributes `q_j (1 - q_j)`
/// on the diagonal and `-q_j q_k` off it; the average over `n` voters scales the
/// sum by `1 / n^2`.
pub fn covariance(model: &dyn NoiseModel, profile: &Profile, phi: f64) -> Result<DMatrix<f64>> {
    let idx = RankingIndex::get(profile.m())?;
    let d = idx.len() - 1;
    let mut cov = DMatrix::zeros(d, d);
    for (r, c) in groups(profile)? {
        let q = pmf(model, idx.ranking(r), phi)?;
        for j in 0..d {
            cov[(j, j)] += c as f64 * q[j];
            for k in 0..d {
                cov[(j, k)] -= c as f64 * q[j] * q[k];
            }
        }
    }
    let n = profile.n() as f64;
    Ok(cov / (n * n))
}

/// Inverse of one voter's covariance given the full outcome distribution `q`.
///
/// The diagonal is `1/q_j + 1/q_last` and every off-diagonal entry is `1/q_last`.
pub fn closed_form_inverse(q: &[f64]) -> Result<DMatrix<f64>> {
    if q.len() < 2 {
        return arg("distribution needs at least two outcomes");
    }
    if let Some(j) = q.iter().position(|&x| x <= 0.0) {
        return Err(Error::Singular(format!("outcome {j} has probability zero")));
    }
    let d = q.len() - 1;
    let last = 1.0 / q[d];
    Ok(DMatrix::from_fn(d, d, |j, k| if j == k { 1.0 / q[j] + last } else { last }))
}

pub fn min_eigenvalue(matrix: &DMatrix<f64>) -> f64 {
    matrix.clone().symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Guaranteed floor on the covariance's smallest eigenvalue: `min_prob / (m! n)`.
pub fn min_eigenvalue_floor(min_prob: f64, m: usize, n: usize) -> f64 {
    min_prob / (factorial(m) as f64 * n as f64)
}

/// Lower bound on `Pr[ ||H - E H||_1 < eps ]`: `1 - 2 m! exp(-2 eps^2 n / m!)`.
pub fn hoeffding_bound(eps: f64, n: usize, m: usize) -> f64 {
    let k = factorial(m) as f64;
    1.0 - 2.0 * k * (-2.0 * eps * eps * n as f64 / k).exp()
}

/// Lower bound `1 - exp(-eps^2 n / 2)` on the chance the noisy histogram stays within
/// `eps` of the original when each voter keeps their ranking with probability
/// above `1 - eps / 2`.
pub fn starting_concentration_bound(eps: f64, n: usize) -> f64 {
    1.0 - (-eps * eps * n as f64 / 2.0).exp()
}
