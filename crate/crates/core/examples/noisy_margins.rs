//! A profile where plurality misses the Condorcet winner by a single vote, and
//! the exact margins of its expected noisy version.

use std::error::Error;

use smoothed_votes::axioms::{counterexample_library, Axiom};
use smoothed_votes::noise::NoiseKind;
use smoothed_votes::rules::VotingRule;
use smoothed_votes::smoothed::{estimate_violation, verify_appendix_d_margins};

fn main() -> Result<(), Box<dyn Error>> {
    let grid: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
    println!("{:>4} {:>10} {:>10} {:>10}   x normalizer = polynomial", "phi", "b over a", "b over c", "a - b top");
    for r in verify_appendix_d_margins(&grid, 0.0)? {
        println!(
            "{:>4} {:>10.6} {:>10.6} {:>10.6}   {:?}",
            r.phi, r.margins[0], r.margins[1], r.margins[2], r.scaled_match
        );
    }

    // All three margins stay positive, yet sampling noise swamps them.
    let base = counterexample_library("appendixD", None)?.profile()?.replicate(16)?;
    let axiom: Axiom = "condorcet".parse()?;
    for rule in [VotingRule::Plurality, VotingRule::Borda] {
        for phi in [0.3, 0.6, 0.9] {
            let e = estimate_violation(&rule, &axiom, &base, NoiseKind::Mallows, phi, 2000, 63)?;
            println!("{:>9} phi {phi}: Condorcet violated {:.3}", rule.to_string(), e.p_hat);
        }
    }
    Ok(())
}
