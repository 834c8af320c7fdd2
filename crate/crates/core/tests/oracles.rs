//! The library against independent reference computations: direct enumeration
//! of the Mallows distribution, a repeated-insertion sampler, a grid search for
//! plane distances, and a plain impartial-culture simulation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smoothed_votes::axioms::counterexample_library;
use smoothed_votes::noise::{pmf, pmf_exact, trial_rng, NoiseKind, PerturbationSampler};
use smoothed_votes::profile::Histogram;
use smoothed_votes::ranking::{Ranking, RankingIndex};
use smoothed_votes::rules::{hyperplanes_of, VotingRule};
use smoothed_votes::smoothed::{
    estimate_counterexample, sup_violation, thick_hyperplane_probability, BaseGenerator, DeltaSchedule, Estimate,
};

fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in permutations(m - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, m - 1);
            out.push(p);
        }
    }
    out
}

/// Pairs ordered differently by the two rankings.
fn discordant(a: &[usize], b: &[usize]) -> usize {
    let pos = |r: &[usize], c: usize| r.iter().position(|&x| x == c).unwrap();
    let m = a.len();
    let mut k = 0;
    for x in 0..m {
        for y in (x + 1)..m {
            if (pos(a, x) < pos(a, y)) != (pos(b, x) < pos(b, y)) {
                k += 1;
            }
        }
    }
    k
}

#[test]
fn mallows_pmf_matches_direct_enumeration() {
    for m in 3..=5 {
        let perms = permutations(m);
        for base in [perms[0].clone(), perms[perms.len() / 2].clone()] {
            for phi in [0.0f64, 0.2, 0.5, 0.9, 1.0] {
                let weights: Vec<f64> = perms.iter().map(|p| phi.powi(discordant(&base, p) as i32)).collect();
                let z: f64 = weights.iter().sum();
                let got = pmf(NoiseKind::Mallows.model(), &Ranking::new(base.clone()).unwrap(), phi).unwrap();
                for (p, w) in perms.iter().zip(&weights) {
                    let r = Ranking::new(p.clone()).unwrap().lex_rank();
                    assert!((got[r] - w / z).abs() < 1e-12, "m={m} phi={phi} {p:?}: {} vs {}", got[r], w / z);
                }
            }
        }
    }
}

#[test]
fn exact_and_float_pmfs_agree() {
    let base = Ranking::new(vec![2, 0, 1, 3]).unwrap();
    for noise in [NoiseKind::Mallows, NoiseKind::UniformMixture] {
        let exact = pmf_exact(noise.model(), &base, &smoothed_votes::noise::exact_decimal(0.35).unwrap()).unwrap();
        let float = pmf(noise.model(), &base, 0.35).unwrap();
        for (e, f) in exact.iter().zip(&float) {
            let e: f64 = num_traits::ToPrimitive::to_f64(e).unwrap();
            assert!((e - f).abs() < 1e-14);
        }
    }
}

/// Mallows draw around the identity by repeated insertion: item `i` lands `j`
/// places from the end of the current prefix with probability proportional to `phi^j`.
fn rim_draw(m: usize, phi: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut order = Vec::with_capacity(m);
    for i in 0..m {
        let weights: Vec<f64> = (0..=i).map(|j| phi.powi(j as i32)).collect();
        let mut u = rng.random::<f64>() * weights.iter().sum::<f64>();
        let mut j = 0;
        while j < i && u >= weights[j] {
            u -= weights[j];
            j += 1;
        }
        order.insert(i - j, i);
    }
    order
}

#[test]
fn sampler_agrees_with_repeated_insertion() {
    let (m, phi, draws) = (4, 0.6, 200_000u64);
    let idx = RankingIndex::get(m).unwrap();
    let q = pmf(NoiseKind::Mallows.model(), &Ranking::identity(m).unwrap(), phi).unwrap();
    let sampler = PerturbationSampler::new(NoiseKind::Mallows.model(), m, phi).unwrap();
    let mut ours = vec![0u64; idx.len()];
    let mut rng = trial_rng(77, 0);
    for _ in 0..draws {
        ours[sampler.perturb(0, rand::RngCore::next_u64(&mut rng))] += 1;
    }
    let mut rim = vec![0u64; idx.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    for _ in 0..draws {
        rim[Ranking::new(rim_draw(m, phi, &mut rng)).unwrap().lex_rank()] += 1;
    }
    for r in 0..idx.len() {
        let sd = (draws as f64 * q[r] * (1.0 - q[r])).sqrt();
        let expect = draws as f64 * q[r];
        assert!((ours[r] as f64 - expect).abs() < 5.0 * sd, "sampler off at {r}");
        assert!((rim[r] as f64 - expect).abs() < 5.0 * sd, "insertion oracle off at {r}");
    }
}

/// Smallest L1 move onto the plane, searching directions that split the move
/// between two coordinates on a grid of 101 splits.
fn grid_distance(value: f64, a: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..a.len() {
        for j in i..a.len() {
            for k in 0..=100 {
                let t = k as f64 / 100.0;
                for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    // Moving r along this unit-L1 direction changes a . h by r * rate.
                    let rate = si * t * a[i] + sj * (1.0 - t) * a[j];
                    if rate.abs() < 1e-15 {
                        continue;
                    }
                    let r = -value / rate;
                    if r >= 0.0 {
                        best = best.min(r);
                    }
                }
            }
        }
    }
    best
}

#[test]
fn plane_distance_matches_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for rule in [VotingRule::Plurality, VotingRule::Borda, VotingRule::Minimax, VotingRule::Kemeny] {
        let set = hyperplanes_of(&rule, 3).unwrap();
        for plane in &set.planes {
            let a: Vec<f64> = plane.coefficients().iter().map(|x| *x.numer() as f64 / *x.denom() as f64).collect();
            for _ in 0..20 {
                let raw: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
                let total: f64 = raw.iter().sum();
                let entries: Vec<f64> = raw[..5].iter().map(|x| x / total).collect();
                let got = plane.distance(&entries);
                let want = grid_distance(plane.value(&entries), &a);
                assert!((got - want).abs() < 1e-6, "{rule} {}: {got} vs {want}", plane.label());
            }
            // Exact and float distances agree on count histograms.
            let counts: Vec<u64> = (0..6).map(|_| rng.random_range(0..20)).collect();
            if counts.iter().sum::<u64>() == 0 {
                continue;
            }
            let h = Histogram::from_counts(3, &counts).unwrap();
            let exact = plane.distance_exact(&h);
            let float = plane.distance(&h.to_f64());
            assert!((*exact.numer() as f64 / *exact.denom() as f64 - float).abs() < 1e-12);
        }
    }
}

#[test]
fn impartial_culture_matches_direct_simulation() {
    let delta = DeltaSchedule::power(1.0, -0.75).unwrap();
    let trials = 4000u64;
    for n in [100usize, 1000] {
        let ours = thick_hyperplane_probability(
            &VotingRule::Plurality,
            &BaseGenerator::Uniform,
            3,
            NoiseKind::Mallows,
            1.0,
            delta,
            &[n],
            trials,
            21,
        )
        .unwrap()[0]
            .1;
        // Independent draws: each voter ranks one of the six orders uniformly.
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let d = delta.eval(n) * n as f64;
        let mut hits = 0;
        for _ in 0..trials {
            let mut first = [0i64; 3];
            for _ in 0..n {
                first[rng.random_range(0..6usize) / 2] += 1;
            }
            // In explicit coordinates the a-b plane moves one unit per unit of
            // share, the planes through c two.
            let near = ((first[0] - first[1]).abs() as f64) <= d
                || ((first[0] - first[2]).abs() as f64) <= 2.0 * d
                || ((first[1] - first[2]).abs() as f64) <= 2.0 * d;
            hits += u64::from(near);
        }
        let direct = Estimate::new(hits, trials, 22).unwrap();
        assert!(ours.overlaps(&direct), "n={n}: {} vs {}", ours.p_hat, direct.p_hat);
    }
}

#[test]
fn smoothing_is_monotone_within_confidence() {
    // Pointwise the tie chance dips and then climbs back toward the
    // impartial-culture level, so the monotone quantity is the worst case over [phi, 1].
    let axiom = "resolvability".parse().unwrap();
    let base = BaseGenerator::TwoWayTie.profile(3, 400).unwrap();
    let worst: Vec<Estimate> = [0.2, 0.4, 0.6, 0.8]
        .iter()
        .map(|&phi| {
            sup_violation(&VotingRule::Plurality, &axiom, &base, NoiseKind::Mallows, phi, 5, 4000, 8).unwrap().1
        })
        .collect();
    for w in worst.windows(2) {
        assert!(w[1].ci_low <= w[0].ci_high, "{:?}", worst.iter().map(|e| e.p_hat).collect::<Vec<_>>());
    }
}

#[test]
fn violation_onset_tightens_with_replication() {
    let cx = counterexample_library("appendixD", None).unwrap();
    let miss: Vec<f64> = [1, 4, 16]
        .iter()
        .map(|&z| 1.0 - estimate_counterexample(&cx, z, NoiseKind::Mallows, 0.05, 4000, 12).unwrap().p_hat)
        .collect();
    assert!(miss.windows(2).all(|w| w[1] < w[0] || w[1] == 0.0), "{miss:?}");
}
