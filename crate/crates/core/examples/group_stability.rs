//! How often a small coalition can still swing a noisy election, and how often
//! the noisy histogram lands in a thin slab around a decision boundary.

use std::error::Error;

use smoothed_votes::axioms::RhoSchedule;
use smoothed_votes::noise::NoiseKind;
use smoothed_votes::rules::VotingRule;
use smoothed_votes::smoothed::{group_flip_probability, thick_hyperplane_probability, BaseGenerator, DeltaSchedule};

fn main() -> Result<(), Box<dyn Error>> {
    let sizes = [100, 1000, 10_000];
    let rho = RhoSchedule::power(1.0, 0.25)?;
    println!("plurality from a two-way tie, phi = 0.5, coalitions of floor(n^0.25)");
    for r in group_flip_probability(
        &VotingRule::Plurality,
        &BaseGenerator::TwoWayTie,
        3,
        NoiseKind::Mallows,
        0.5,
        rho,
        &sizes,
        4000,
        3,
    )? {
        let exact = r.exact.map_or(f64::NAN, |e| e.p_hat);
        println!(
            "  n = {:>5}, rho = {:>2}: certificate {:.4}, exact {exact:.4}, contradictions {}",
            r.n, r.rho, r.certificate.p_hat, r.contradictions
        );
    }

    let delta = DeltaSchedule::power(1.0, -0.75)?;
    println!("\nwithin n^-0.75 of a plane, uniform base, phi = 1");
    for rule in [VotingRule::Plurality, VotingRule::Borda, VotingRule::Minimax] {
        let rows = thick_hyperplane_probability(
            &rule,
            &BaseGenerator::Uniform,
            3,
            NoiseKind::Mallows,
            1.0,
            delta,
            &sizes,
            4000,
            3,
        )?;
        let shown: Vec<String> = rows.iter().map(|(n, e)| format!("n={n}: {:.4}", e.p_hat)).collect();
        println!("  {:>9}  {}", rule.to_string(), shown.join("  "));
    }
    Ok(())
}
