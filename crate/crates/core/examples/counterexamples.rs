//! The strict counterexample library: certify each entry, then watch a small
//! amount of noise fail to rescue the axiom as the electorate grows.

use std::error::Error;

use smoothed_votes::axioms::{counterexample_library, LIBRARY_NAMES};
use smoothed_votes::noise::NoiseKind;
use smoothed_votes::smoothed::{estimate_counterexample, inf_violation};

fn main() -> Result<(), Box<dyn Error>> {
    let trials = 2000;
    println!("{:>22} {:>10} {:>14} {:>4} {:>7}", "entry", "rule", "axiom", "n", "radius");
    for name in LIBRARY_NAMES {
        let cx = counterexample_library(name, None)?;
        let cert = cx.certify(200, 1)?;
        assert_eq!(cert.failures, 0, "{name} is not strict");
        println!(
            "{name:>22} {:>10} {:>14} {:>4} {:>7}",
            cx.rule.to_string(),
            cx.axiom.to_string(),
            cx.n(),
            cx.radius.to_string()
        );
    }

    // Violation probability at phi = 0.05 climbs to 1 with replication.
    println!("\nphi = 0.05, {trials} trials");
    for name in ["plurality-condorcet", "minimax-consistency", "kemeny-iia"] {
        let cx = counterexample_library(name, None)?;
        let mut line = format!("{name:>22}");
        for target in [50, 200, 800] {
            let z = (target / cx.n()).max(1);
            let e = estimate_counterexample(&cx, z, NoiseKind::Mallows, 0.05, trials, 9)?;
            line += &format!("  zn={:<4} {:.3}", z * cx.n(), e.p_hat);
        }
        println!("{line}");
    }

    // The weakest noise level on [0, phi] still violates almost surely.
    let cx = counterexample_library("psr-iia", None)?;
    let (phi, e) = inf_violation(&cx, 100, NoiseKind::Mallows, 0.05, 6, trials, 9)?;
    println!("\npsr-iia, z = 100: smallest violation on [0, 0.05] is {:.3} at phi = {phi}", e.p_hat);
    Ok(())
}
