use coordgame::chain::{build_transition_matrix, stationary_distribution};
use coordgame::experiments::{mobile_ring_threshold, ring_adversary};
use coordgame::game::potential;
use coordgame::stability::{
    check_x_stable_fi, check_x_stable_fi_capped, check_y_stable_fi, check_y_stable_fi_capped, stochastically_stable_set,
};
use coordgame::{AdversaryType, AgentSet, Graph, JointAction, PayoffGain, Rational, Rationality};
use proptest::prelude::*;

fn threshold(ty: AdversaryType, n: usize, k: usize) -> Rational {
    match ty {
        AdversaryType::Fixed => Rational::new(k as i64, n as i64),
        AdversaryType::UniformRandom => Rational::new(1, 2),
        AdversaryType::Mobile => mobile_ring_threshold(n, k),
    }
}

#[test]
fn sharp_stationary_mode_matches_resistance_trees() {
    let mut compared = 0;
    for n in 3..=5 {
        let g = Graph::ring(n).unwrap();
        for ty in AdversaryType::ALL {
            for k in 1..n {
                let model = ring_adversary(&g, ty, k).unwrap();
                let t = threshold(ty, n, k);
                for j in 0..=12 {
                    let alpha = Rational::new(j, 10);
                    let gap = if alpha > t { alpha - t } else { t - alpha };
                    if gap < Rational::new(1, 10) {
                        continue;
                    }
                    let alpha = PayoffGain::new(alpha).unwrap();
                    let report = stochastically_stable_set(&g, &model, alpha).unwrap();
                    let winner = report
                        .strict_winner()
                        .unwrap_or_else(|| panic!("ring{} {} alpha={}: no strict winner", n, model, alpha));
                    let m = build_transition_matrix(&g, &model, alpha, Rationality::new(40.0).unwrap()).unwrap();
                    let pi = stationary_distribution(&m).unwrap();
                    assert_eq!(pi.mode(), winner, "ring{} {} alpha={}", n, model, alpha);
                    assert!(pi.weight(winner) >= 0.9, "ring{} {} alpha={}: mass {}", n, model, alpha, pi.weight(winner));
                    compared += 1;
                }
            }
        }
    }
    assert!(compared > 100);
}

fn graph_and_set() -> impl Strategy<Value = (Graph, AgentSet, Rational)> {
    (3usize..=7)
        .prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
            let m = pairs.len();
            (Just(n), Just(pairs), proptest::collection::vec(any::<bool>(), m), 0u64..(1 << n), 0i64..=40)
        })
        .prop_map(|(n, pairs, keep, bits, a)| {
            let edges: Vec<_> = pairs.into_iter().zip(keep).filter(|(_, k)| *k).map(|(e, _)| e).collect();
            (Graph::new(n, &edges).unwrap(), AgentSet::from_bits(bits), Rational::new(a, 20))
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Both consensus states can never be strictly stable at once; when
    /// neither is, the potential maximum is tied or held by a mixed state.
    #[test]
    fn consensus_checks_never_both_hold((g, s, a) in graph_and_set()) {
        let n = g.n();
        let alpha = PayoffGain::new(a).unwrap();
        let x = check_x_stable_fi(&g, s, alpha).unwrap();
        let y = check_y_stable_fi(&g, s, alpha).unwrap();
        prop_assert!(!(x && y));
        let phi: Vec<Rational> = (0..1usize << n).map(|i| potential(&g, JointAction::from_index(n, i), s, alpha)).collect();
        let best = *phi.iter().max().unwrap();
        let unique = |a: JointAction| phi[a.index()] == best && phi.iter().filter(|&&p| p == best).count() == 1;
        prop_assert_eq!(x, unique(JointAction::all_x(n)));
        prop_assert_eq!(y, unique(JointAction::all_y(n)));
    }
}

#[test]
fn mixed_maximizer_without_tie() {
    // six consecutive influenced agents on a 20-ring: the y-arc over them
    // beats both consensus states, so both checks fail away from any tie
    let g = Graph::ring(20).unwrap();
    let s = AgentSet::from_indices(20, 0..6).unwrap();
    let alpha = PayoffGain::ratio(3, 10).unwrap();
    assert!(!check_x_stable_fi_capped(&g, s, alpha, 20).unwrap());
    assert!(!check_y_stable_fi_capped(&g, s, alpha, 20).unwrap());
    let arc = JointAction::with_y_set(20, s);
    let phi = |a| potential(&g, a, s, alpha);
    assert!(phi(arc) > phi(JointAction::all_x(20)));
    assert!(phi(arc) > phi(JointAction::all_y(20)));
}
