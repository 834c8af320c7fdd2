use proptest::prelude::*;
use smoothed_votes::axioms::{condorcet_winner, couple_iia};
use smoothed_votes::noise::NoiseKind;
use smoothed_votes::profile::{format_profile, parse_profile, Profile};
use smoothed_votes::ranking::{kendall_tau, Ranking, RankingIndex};
use smoothed_votes::rules::{hyperplanes_of, pairwise_margins, VotingRule};
use smoothed_votes::smoothed::{estimate_violation, wilson_interval, with_workers, BaseGenerator};

const RULES: [VotingRule; 6] = [
    VotingRule::Plurality,
    VotingRule::Borda,
    VotingRule::Veto,
    VotingRule::Minimax,
    VotingRule::Copeland,
    VotingRule::Kemeny,
];

fn ranking(m: usize) -> impl Strategy<Value = Ranking> {
    Just((0..m).collect::<Vec<_>>()).prop_shuffle().prop_map(|v| Ranking::new(v).unwrap())
}

fn profile(m: usize, max_n: usize) -> impl Strategy<Value = Profile> {
    prop::collection::vec(ranking(m), 1..=max_n).prop_map(|v| Profile::new(v).unwrap())
}

/// Swap `a` and `b` in `r` if needed so it orders them like `like`.
fn align(r: &Ranking, like: &Ranking, a: usize, b: usize) -> Ranking {
    if r.prefers(a, b) == like.prefers(a, b) {
        return r.clone();
    }
    let order = r
        .candidates()
        .map(|c| {
            if c == a {
                b
            } else if c == b {
                a
            } else {
                c
            }
        })
        .collect();
    Ranking::new(order).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn profile_text_round_trip(p in (3usize..=5).prop_flat_map(|m| profile(m, 30))) {
        let text = format_profile(&p, None);
        prop_assert_eq!(parse_profile(&text).unwrap().profile, p);
    }

    #[test]
    fn named_round_trip(p in profile(3, 20)) {
        let names: Vec<String> = ["alice", "bob", "carol"].map(String::from).to_vec();
        let back = parse_profile(&format_profile(&p, Some(&names))).unwrap();
        prop_assert_eq!(back.names, names);
        prop_assert_eq!(back.profile, p);
    }

    #[test]
    fn wilson_brackets_the_estimate(trials in 1u64..100_000, frac in 0.0f64..=1.0) {
        let hits = (frac * trials as f64).round() as u64;
        let (lo, hi) = wilson_interval(hits, trials);
        let p = hits as f64 / trials as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-12 && p <= hi + 1e-12 && hi <= 1.0);
        let (lo4, hi4) = wilson_interval(hits * 4, trials * 4);
        prop_assert!(hi4 - lo4 <= hi - lo + 1e-12);
    }

    #[test]
    fn coupled_iia_keeps_pair_orders(
        (first, second_raw, perturbed) in (1usize..20).prop_flat_map(|n| (
            prop::collection::vec(ranking(3), n),
            prop::collection::vec(ranking(3), n),
            prop::collection::vec(ranking(3), n),
        )),
        (a, b) in (0usize..3, 1usize..3).prop_map(|(a, d)| (a, (a + d) % 3)),
    ) {
        let second: Vec<Ranking> = second_raw.iter().zip(&first).map(|(s, f)| align(s, f, a, b)).collect();
        let first = Profile::new(first).unwrap();
        let perturbed = Profile::new(perturbed).unwrap();
        let coupled = couple_iia(&first, &Profile::new(second).unwrap(), &perturbed).unwrap();
        for (c, p) in coupled.voters().iter().zip(perturbed.voters()) {
            prop_assert_eq!(c.prefers(a, b), p.prefers(a, b));
        }
    }

    #[test]
    fn winners_ignore_voter_order(p in profile(3, 25), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut voters = p.voters().to_vec();
        voters.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let shuffled = Profile::new(voters).unwrap();
        for rule in &RULES {
            prop_assert_eq!(rule.evaluate(&p).unwrap(), rule.evaluate(&shuffled).unwrap());
        }
    }

    #[test]
    fn winners_ignore_replication(p in profile(3, 15), z in prop::sample::select(vec![2usize, 3, 5])) {
        for rule in &RULES {
            prop_assert_eq!(rule.evaluate(&p).unwrap(), rule.evaluate(&p.replicate(z).unwrap()).unwrap());
        }
    }

    #[test]
    fn winners_follow_relabeling(p in profile(3, 20), tau in ranking(3)) {
        for rule in &RULES {
            let mapped: std::collections::BTreeSet<usize> =
                rule.evaluate(&p).unwrap().into_iter().map(|c| tau.candidate_at(c)).collect();
            prop_assert_eq!(rule.evaluate(&p.relabel(&tau).unwrap()).unwrap(), mapped);
        }
    }

    #[test]
    fn margins_are_antisymmetric(p in profile(4, 20)) {
        let pm = pairwise_margins(&p).unwrap();
        for x in 0..4 {
            prop_assert_eq!(pm.margin(x, x), 0);
            for y in 0..4 {
                prop_assert_eq!(pm.margin(x, y), -pm.margin(y, x));
                prop_assert_eq!(pm.margin(x, y).rem_euclid(2), (p.n() as i64).rem_euclid(2) * i64::from(x != y));
            }
        }
    }

    #[test]
    fn kendall_tau_is_a_metric(a in ranking(5), b in ranking(5), c in ranking(5), tau in ranking(5)) {
        let d = |x: &Ranking, y: &Ranking| kendall_tau(x, y).unwrap();
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
        prop_assert_eq!(d(&a, &a), 0);
        prop_assert_eq!(d(&a.relabel(&tau).unwrap(), &b.relabel(&tau).unwrap()), d(&a, &b));
    }

    #[test]
    fn estimates_repeat_under_seed(seed in any::<u64>(), phi in 0.0f64..=1.0, workers in 1usize..4) {
        let base = BaseGenerator::TwoWayTie.profile(3, 31).unwrap();
        let axiom = "resolvability".parse().unwrap();
        let run = || estimate_violation(&VotingRule::Plurality, &axiom, &base, NoiseKind::Mallows, phi, 100, seed).unwrap();
        let once = run();
        prop_assert_eq!(once, run());
        prop_assert_eq!(once, with_workers(Some(workers), run).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn condorcet_winner_wins(p in profile(3, 60)) {
        let idx = RankingIndex::get(3).unwrap();
        if let Some(cw) = condorcet_winner(idx, &p.counts().unwrap()) {
            for rule in [VotingRule::Minimax, VotingRule::Copeland, VotingRule::Kemeny] {
                prop_assert_eq!(rule.evaluate(&p).unwrap().into_iter().collect::<Vec<_>>(), vec![cw]);
            }
        }
    }

    #[test]
    fn rules_are_constant_between_planes(p in profile(3, 30), extra in prop::collection::vec(ranking(3), 0..4)) {
        // A nearby profile: the same shares doubled plus a few voters.
        let mut voters = p.replicate(2).unwrap().into_voters();
        voters.extend(extra);
        let q = Profile::new(voters).unwrap();
        let (cp, cq) = (p.counts().unwrap(), q.counts().unwrap());
        for rule in [VotingRule::Plurality, VotingRule::Borda, VotingRule::Minimax, VotingRule::Copeland, VotingRule::Kemeny] {
            let set = hyperplanes_of(&rule, 3).unwrap();
            let side = |c: &[u64]| set.planes.iter().map(|h| h.value_counts(c).signum()).collect::<Vec<_>>();
            let (sp, sq) = (side(&cp), side(&cq));
            if sp == sq && !sp.contains(&0) {
                let wp = rule.evaluate(&p).unwrap();
                prop_assert_eq!(&wp, &rule.evaluate(&q).unwrap());
                if set.decisive {
                    prop_assert_eq!(wp.len(), 1);
                }
            }
        }
    }
}
