//! The two noise models side by side: ranking probabilities around `a > b > c`,
//! a sampled noisy profile, and the covariance of the noisy histogram.

use std::error::Error;

use smoothed_votes::noise::{
    covariance, expected_histogram, min_eigenvalue, min_eigenvalue_floor, min_prob, perturb_profile, pmf, trial_rng,
    NoiseKind,
};
use smoothed_votes::profile::{format_profile, Profile};
use smoothed_votes::ranking::{Ranking, RankingIndex};

fn main() -> Result<(), Box<dyn Error>> {
    let idx = RankingIndex::get(3)?;
    let base = Ranking::identity(3)?;
    let labels: Vec<String> =
        idx.rankings().iter().map(|r| r.candidates().map(|c| (b'a' + c as u8) as char).collect()).collect();
    println!("{:>16} {:>5} {}", "model", "phi", labels.join("     "));
    for noise in [NoiseKind::Mallows, NoiseKind::UniformMixture] {
        for phi in [0.0, 0.3, 0.7, 1.0] {
            let q = pmf(noise.model(), &base, phi)?;
            let row: Vec<String> = q.iter().map(|x| format!("{x:.4}")).collect();
            println!("{:>16} {phi:>5} {}", noise.name(), row.join(" "));
        }
    }

    let profile = Profile::from_strs(&["abc", "abc", "abc", "bca", "cab", "cba"])?.replicate(5)?;
    let noisy = perturb_profile(NoiseKind::Mallows.model(), &profile, 0.4, &mut trial_rng(1, 0))?;
    println!("\none Mallows draw at phi = 0.4 of a {}-voter profile:", profile.n());
    print!("{}", format_profile(&Profile::from_counts(3, &noisy.counts()?)?, None));

    let mean = expected_histogram(NoiseKind::Mallows.model(), &profile, 0.4)?;
    println!("expected shares (last one implicit): {:.4?}", mean);
    let cov = covariance(NoiseKind::Mallows.model(), &profile, 0.4)?;
    let floor = min_eigenvalue_floor(min_prob(NoiseKind::Mallows.model(), 0.4, 3)?, 3, profile.n());
    println!("smallest covariance eigenvalue {:.3e}, guaranteed at least {floor:.3e}", min_eigenvalue(&cov));
    Ok(())
}
