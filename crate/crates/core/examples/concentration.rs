//! The noisy histogram against its concentration bounds and its normal
//! approximation, on a uniform base profile.

use std::error::Error;

use smoothed_votes::noise::{hoeffding_bound, starting_concentration_bound, NoiseKind};
use smoothed_votes::smoothed::{berry_esseen_gap, l1_concentration, loglog_slope, BaseGenerator, Center};

fn main() -> Result<(), Box<dyn Error>> {
    let trials = 4000;
    println!("Pr[L1 distance to the mean < eps] against its lower bound");
    for n in [500, 2000] {
        let base = BaseGenerator::Uniform.profile(3, n)?;
        for phi in [0.3, 1.0] {
            for eps in [0.1, 0.2] {
                let e = l1_concentration(NoiseKind::Mallows, &base, phi, Center::Expected, eps, trials, 2)?;
                println!("  n {n:>4} phi {phi} eps {eps}: {:.4} >= {:.4}", e.p_hat, hoeffding_bound(eps, n, 3));
            }
        }
    }

    // Little noise barely moves the profile at all.
    let base = BaseGenerator::Uniform.profile(3, 2000)?;
    let e = l1_concentration(NoiseKind::UniformMixture, &base, 0.02, Center::Base, 0.1, trials, 2)?;
    println!("\nwithin 0.1 of the base at phi 0.02: {:.4} >= {:.4}", e.p_hat, starting_concentration_bound(0.1, 2000));

    println!("\nhalf-space probability against the matched normal, phi = 0.5");
    let (mut ns, mut gaps) = (Vec::new(), Vec::new());
    for n in [50, 200, 800, 3200] {
        let p = berry_esseen_gap(NoiseKind::Mallows, &BaseGenerator::Uniform.profile(3, n)?, 0.5, 0, 20_000, 2)?;
        println!("  n {n:>4}: empirical {:.4}, normal {:.4}, gap {:.4}", p.empirical.p_hat, p.gaussian, p.gap);
        ns.push(n as f64);
        gaps.push(p.gap);
    }
    println!("  log-log slope {:.2}", loglog_slope(&ns, &gaps).unwrap_or(f64::NAN));
    Ok(())
}
