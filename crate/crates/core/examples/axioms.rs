//! Checking axioms on single profiles: absolute axioms directly, relative ones
//! through explicit witnesses, and group stability through the plane certificate.

use std::error::Error;

use smoothed_votes::axioms::{
    check_absolute, check_group_stability, check_witness, counterexample_library, AbsoluteAxiom, CounterexampleShape,
    RelativeAxiom, Witness,
};
use smoothed_votes::profile::Profile;
use smoothed_votes::rules::VotingRule;

fn main() -> Result<(), Box<dyn Error>> {
    let profile = counterexample_library("appendixD", None)?.profile()?;
    let absolute = [AbsoluteAxiom::Resolvability, AbsoluteAxiom::Condorcet, AbsoluteAxiom::Majority];
    println!("appendixD profile, {} voters", profile.n());
    for rule in [VotingRule::Plurality, VotingRule::Borda, VotingRule::Minimax, VotingRule::Copeland] {
        let verdicts: Vec<String> = absolute
            .iter()
            .map(|&a| Ok(format!("{a:?}={}", check_absolute(a, &rule, &profile)?)))
            .collect::<Result<_, Box<dyn Error>>>()?;
        println!("  {:>10}: {}", rule.to_string(), verdicts.join(" "));
    }

    // Relative axioms need evidence: the library stores one witness per entry.
    for name in ["minimax-consistency", "plurality-iia"] {
        let cx = counterexample_library(name, None)?;
        let whole = cx.profile()?;
        let (axiom, witness) = match &cx.shape {
            CounterexampleShape::Consistency { parts } => {
                (RelativeAxiom::Consistency, Witness::Consistency { parts: parts.clone() })
            }
            CounterexampleShape::Iia { second, a, b, .. } => {
                (RelativeAxiom::Iia, Witness::Iia { other: second.clone(), a: *a, b: *b })
            }
            CounterexampleShape::Single(_) => unreachable!("both entries are relative"),
        };
        println!("{name}: witness shows a violation: {}", check_witness(&axiom, &cx.rule, &whole, &witness)?);
    }

    // A three-vote lead survives one defector but not two.
    let close = Profile::from_strs(&["abc", "abc", "abc", "abc", "bac", "cba"])?;
    for rho in [0, 1, 2] {
        let verdict = check_group_stability(&VotingRule::Plurality, &close, rho)?;
        println!("plurality, coalitions of {rho}: {verdict:?}");
    }
    Ok(())
}
