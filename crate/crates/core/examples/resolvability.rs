//! Ties disappear under noise: the chance that plurality is tied from an exact
//! two-way tie falls like `1/sqrt(n)`, while Copeland stays stuck near a cycle.

use std::error::Error;

use smoothed_votes::axioms::Axiom;
use smoothed_votes::noise::NoiseKind;
use smoothed_votes::rules::VotingRule;
use smoothed_votes::smoothed::{estimate_violation, loglog_slope, BaseGenerator};

fn main() -> Result<(), Box<dyn Error>> {
    let sizes = [100, 400, 1600, 6400];
    let axiom: Axiom = "resolvability".parse()?;
    for (rule, base) in
        [(VotingRule::Plurality, BaseGenerator::TwoWayTie), (VotingRule::Copeland, BaseGenerator::ThreeCycle)]
    {
        for phi in [0.5, 1.0] {
            let mut ps = Vec::new();
            for n in sizes {
                let e = estimate_violation(&rule, &axiom, &base.profile(3, n)?, NoiseKind::Mallows, phi, 4000, 17)?;
                ps.push(e.p_hat);
            }
            let slope = loglog_slope(&sizes.map(|n| n as f64), &ps).unwrap_or(f64::NAN);
            let shown: Vec<String> = ps.iter().map(|p| format!("{p:.4}")).collect();
            println!(
                "{:>9} from {:>11}, phi {phi}: {}  slope {slope:.2}",
                rule.to_string(),
                base.name(),
                shown.join(" ")
            );
        }
    }
    Ok(())
}
