//! Exhaustive search over every small three-candidate election, reproducing
//! which rule/axiom cells are violated in the worst case.
//!
//! ```text
//! cargo run --release --example audit -- 4
//! ```

use std::error::Error;

use smoothed_votes::axioms::brute_force_audit;
use smoothed_votes::rules::VotingRule;

fn main() -> Result<(), Box<dyn Error>> {
    let n_max: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(4);
    let axioms = ["condorcet", "majority", "consistency", "iia", "resolvability"];
    println!("violating profiles among all elections with at most {n_max} voters");
    println!("{:>10} {}", "", axioms.map(|a| format!("{a:>15}")).join(""));
    for rule in ["plurality", "borda", "veto", "minimax", "copeland", "kemeny"] {
        let r: VotingRule = rule.parse()?;
        let mut line = format!("{rule:>10}");
        for axiom in axioms {
            let report = brute_force_audit(&r, &axiom.parse()?, n_max, 3)?;
            line += &format!(" {:>14}", format!("{}/{}", report.violations, report.cases));
        }
        println!("{line}");
    }

    let report = brute_force_audit(&VotingRule::Borda, &"condorcet".parse()?, n_max, 3)?;
    if let Some(f) = report.findings.first() {
        println!("\nfirst Borda/Condorcet violation ({} orderings):", f.multiplicity);
        for v in f.profile.voters() {
            println!("  {}", v.candidates().map(|c| (b'a' + c as u8) as char).collect::<String>());
        }
    }
    Ok(())
}
