use std::sync::Arc;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use walker_breaker::boxgames::{box_bound, even_cmaker, greedy_cmaker, simulate_cbox, simulate_minbox, MinBoxBreaker};
use walker_breaker::engine::{
    legal_moves, play_game_with, replay, Action, BoardState, FnStrategy, GameDef, Owner, PlayOptions, Player, RecordKind,
    Variant, WinCondition,
};
use walker_breaker::graph::{sample_gnp, Graph, Seed};
use walker_breaker::strategies::{beck_sum, potential_breaker_move, RandomBreaker};
use walker_breaker::structure::StructureSk;
use walker_breaker::techlemma::{appears_between_levels, candidates_excluding, compute_candidates, partition_blocks};

fn random_mover() -> FnStrategy<impl FnMut(&BoardState, &GameDef, &mut ChaCha8Rng) -> Action> {
    FnStrategy(|st: &BoardState, def: &GameDef, rng: &mut ChaCha8Rng| match legal_moves(st, def).choose(rng) {
        Some(&m) => Action::Play(m),
        None => Action::Pass,
    })
}

fn variant_of(i: u8) -> Variant {
    [Variant::MakerBreaker, Variant::ConnectorBreaker, Variant::WalkerBreaker][i as usize % 3]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_games_keep_engine_invariants(
        n in 2usize..14,
        p in 0.1f64..0.9,
        seed in any::<u64>(),
        variant in 0u8..3,
        maker_bias in 1usize..3,
        breaker_bias in 1usize..4,
        breaker_first in any::<bool>(),
    ) {
        let g = Arc::new(sample_gnp(n, p, Seed(seed)).unwrap());
        let variant = variant_of(variant);
        let first = if breaker_first { Player::Breaker } else { Player::Maker };
        let mut def = GameDef::new(variant, maker_bias, breaker_bias, first, WinCondition::SpanningW);
        def.terminate_on_win = false;
        let start = (variant == Variant::WalkerBreaker).then_some(0);
        let initial = BoardState::new(g.clone(), &def, start).unwrap();
        let t = play_game_with(&def, initial.clone(), &mut random_mover(), &mut RandomBreaker, Seed(seed ^ 1),
            PlayOptions { audit_every_move: true }).unwrap();
        let fin = &t.final_state;
        prop_assert_eq!(fin.maker_edge_count() + fin.breaker_edge_count() + fin.free_edge_count(), g.edge_count());
        let counted = fin.ownership().iter().filter(|&&o| o == Owner::Breaker).count();
        prop_assert_eq!(counted, fin.breaker_edge_count());
        // Breaker never claims more than its bias between two Maker turns
        let mut run = 0;
        for r in &t.records {
            match (r.player, &r.kind) {
                (Player::Breaker, RecordKind::Claim) => {
                    run += 1;
                    prop_assert!(run <= breaker_bias);
                }
                (Player::Maker, _) => run = 0,
                _ => {}
            }
        }
        let again = replay(&def, &initial, &t.to_text()).unwrap();
        prop_assert_eq!(&again, fin);
    }

    #[test]
    fn minbox_danger_bound_holds(
        boxes in 1usize..12,
        d in 4usize..40,
        alpha in 0.05f64..0.9,
        b in 1usize..4,
        which in 0usize..4,
        seed in any::<u64>(),
    ) {
        let mut rng = Seed(seed).rng();
        let t = simulate_minbox(boxes, d, alpha, b, MinBoxBreaker::ALL[which], None, &mut rng, true).unwrap();
        prop_assert!(t.violation.is_none(), "{:?}", t.violation);
        for row in t.rows.iter().filter(|r| r.active) {
            prop_assert!(row.dang.unwrap() <= t.bound + 1e-9);
        }
        // Breaker's total claimed grows by at most b per round
        let mut totals = vec![0.0f64; t.rounds + 1];
        for row in &t.rows {
            totals[row.round] += row.w_b;
        }
        for w in totals.windows(2).skip(1) {
            prop_assert!(w[1] - w[0] <= b as f64 + 1e-9 && w[1] >= w[0] - 1e-9);
        }
    }

    #[test]
    fn cbox_surviving_bound_holds(
        boxes in 1usize..8,
        b in 0.5f64..4.0,
        extra in 1.0f64..10.0,
        greedy in any::<bool>(),
    ) {
        let weight = box_bound(b, boxes) + b + extra;
        let mut cmaker = |s: &_| if greedy { greedy_cmaker(s) } else { even_cmaker(s) };
        let t = simulate_cbox(vec![weight; boxes], b, &mut cmaker, None).unwrap();
        prop_assert!(!t.cmaker_won);
        prop_assert!(t.max_observed() <= t.bound + 1e-9);
    }

    #[test]
    fn beck_sum_grows_with_sets(
        sets in prop::collection::vec(prop::collection::vec(0usize..10, 1..6), 0..6),
        extra in prop::collection::vec(0usize..10, 1..6),
        a in 1usize..3,
        b in 1usize..3,
    ) {
        let (s0, _) = beck_sum(&sets, a, b);
        let mut more = sets.clone();
        more.push(extra);
        let (s1, ok1) = beck_sum(&more, a, b);
        prop_assert!(s1 > s0);
        prop_assert_eq!(ok1, s1 < 1.0 / (b as f64 + 1.0));
    }

    #[test]
    fn potential_move_is_free(
        owners in prop::collection::vec(0u8..3, 1..12),
        sets in prop::collection::vec(prop::collection::vec(0usize..12, 1..5), 1..5),
    ) {
        let owners: Vec<Owner> = owners.iter().map(|&o| [Owner::Free, Owner::Maker, Owner::Breaker][o as usize]).collect();
        let sets: Vec<Vec<usize>> = sets.into_iter().map(|s| s.into_iter().filter(|&e| e < owners.len()).collect()).collect();
        if let Some(e) = potential_breaker_move(&owners, &sets, 1, 1) {
            prop_assert_eq!(owners[e], Owner::Free);
        }
    }

    #[test]
    fn edge_list_round_trip(n in 1usize..30, pairs in prop::collection::vec((0usize..30, 0usize..30), 0..60)) {
        let mut edges: Vec<(usize, usize)> = pairs.into_iter()
            .filter(|&(u, v)| u < n && v < n && u != v)
            .map(|(u, v)| (u.min(v), u.max(v)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        let g = Graph::from_edges(n, edges).unwrap();
        g.check_invariants().unwrap();
        prop_assert_eq!(Graph::from_edge_list(&g.to_edge_list()).unwrap(), g);
    }

    #[test]
    fn seed_split_is_deterministic(master in any::<u64>(), i in any::<u64>(), j in any::<u64>()) {
        prop_assert_eq!(Seed(master).split(i), Seed(master).split(i));
        if i != j {
            prop_assert_ne!(Seed(master).split(i), Seed(master).split(j));
        }
    }

    #[test]
    fn exclusion_never_enlarges(seed in any::<u64>(), n in 12usize..30, p in 0.3f64..0.8) {
        let bf = partition_blocks(n, 1, 9, Seed(seed)).unwrap();
        let g = sample_gnp(n, p, Seed(seed).split(3)).unwrap();
        for x in (0..n).filter(|&x| bf.side_for_target(x).is_some()).take(4) {
            let t = bf.side_for_target(x).unwrap();
            let cf = compute_candidates(&g, &bf, x, t).unwrap();
            prop_assert_eq!(candidates_excluding(&g, &bf, &cf, &[], &[]).unwrap(), cf.root_candidates(&bf));
            let class: Vec<usize> = (0..g.edge_count()).filter(|&e| appears_between_levels(&g, &bf, t, e) == Some(1)).collect();
            let mut prev = cf.root_candidates(&bf);
            for len in 0..=class.len().min(8) {
                let now = candidates_excluding(&g, &bf, &cf, &[], &class[..len]).unwrap();
                prop_assert!(now.iter().all(|v| prev.contains(v)));
                prev = now;
            }
        }
    }
}

#[test]
fn structure_degree_audit() {
    for k in 1..=5 {
        StructureSk::build(k).unwrap().check_degrees().unwrap();
    }
}
