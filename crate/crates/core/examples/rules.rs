//! Winners of every shipped rule on a profile file, plus its pairwise margins
//! and the hyperplanes each rule is built from.
//!
//! ```text
//! cargo run --example rules -- crates/core/examples/appendixD.profile
//! ```

use std::error::Error;

use smoothed_votes::profile::parse_profile;
use smoothed_votes::rules::{hyperplanes_of, pairwise_margins, VotingRule, RULE_NAMES};

fn main() -> Result<(), Box<dyn Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/appendixD.profile").into());
    let named = parse_profile(&std::fs::read_to_string(&path)?)?;
    let p = &named.profile;
    println!("{} voters over {}", p.n(), named.names.join(", "));

    let margins = pairwise_margins(p)?;
    for x in 0..p.m() {
        for y in (x + 1)..p.m() {
            println!("  {} vs {}: {:+}", named.names[x], named.names[y], margins.margin(x, y));
        }
    }

    for name in RULE_NAMES {
        // The generic scoring rule needs concrete weights.
        let spec = if name.starts_with("psr") { "psr:[1,0.5,0]".to_string() } else { name.to_string() };
        let rule: VotingRule = spec.parse()?;
        let winners: Vec<&str> = rule.evaluate(p)?.into_iter().map(|c| named.names[c].as_str()).collect();
        let planes = hyperplanes_of(&rule, p.m())
            .map(|s| format!("{}{}", s.planes.len(), if s.decisive { "" } else { ", not decisive" }))
            .unwrap_or_else(|_| "-".into());
        println!("{spec:>16}: {{{}}}  ({planes} planes)", winners.join(", "));
    }
    Ok(())
}
