use netsim_core::coupling::run_coupled;
use netsim_core::des::{run_des, DesOptions};
use netsim_core::dts::{run_dts, DtsConfig, StepPolicy};
use netsim_core::graph::{make_small_world, make_torus, make_tree, Graph};
use netsim_core::process::{
    infected_neighbor_count, neighbor_count_l1_diff, si_edge_count, InfectionState, ProcessParams,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn state(n: usize, bits: &[bool]) -> InfectionState {
    InfectionState::from_infected(n, (0..n).filter(|&i| bits[i % bits.len()]))
}

fn graph_strategy() -> impl Strategy<Value = Graph> {
    prop_oneof![
        (3usize..9, 3usize..9).prop_map(|(w, h)| make_torus(w, h).unwrap()),
        (3usize..9, 3usize..9, any::<u64>()).prop_map(|(w, h, s)| {
            let h = if (w * h) % 2 == 1 { h + 1 } else { h };
            make_small_world(w, h, 5, s).unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn neighbor_count_difference_is_bounded(
        g in graph_strategy(),
        z_bits in prop::collection::vec(any::<bool>(), 1..80),
        extra in prop::collection::vec(any::<prop::sample::Index>(), 0..20),
    ) {
        let n = g.node_count();
        let z = state(n, &z_bits);
        let mut x = z.clone();
        for i in &extra {
            x.infect(i.index(n));
        }
        let lhs = neighbor_count_l1_diff(&g, &x, &z);
        prop_assert!(lhs <= g.max_degree() * x.l1_distance(&z).unwrap());
    }

    #[test]
    fn dominance_is_a_partial_order(
        a in prop::collection::vec(any::<bool>(), 20),
        b in prop::collection::vec(any::<bool>(), 20),
        c in prop::collection::vec(any::<bool>(), 20),
    ) {
        let (x, y, z) = (state(20, &a), state(20, &b), state(20, &c));
        prop_assert!(x.dominates(&x).unwrap());
        if x.dominates(&y).unwrap() && y.dominates(&x).unwrap() {
            prop_assert_eq!(&x, &y);
        }
        if x.dominates(&y).unwrap() && y.dominates(&z).unwrap() {
            prop_assert!(x.dominates(&z).unwrap());
        }
        // the union dominates both parts
        let mut u = x.clone();
        for i in y.infected() {
            u.infect(i);
        }
        prop_assert!(u.dominates(&x).unwrap() && u.dominates(&y).unwrap());
    }

    #[test]
    fn generated_graphs_validate(g in graph_strategy()) {
        prop_assert!(g.validate().is_ok());
        let degree_sum: usize = (0..g.node_count()).map(|v| g.degree(v)).sum();
        prop_assert_eq!(degree_sum, 2 * g.edge_count());
        for &(u, v) in g.edges() {
            prop_assert!(u < v);
            prop_assert!(g.has_edge(u as usize, v as usize) && g.has_edge(v as usize, u as usize));
        }
    }

    #[test]
    fn small_world_is_regular_and_reproducible(w in 3usize..8, seed in any::<u64>()) {
        let g = make_small_world(w, 4, 6, seed).unwrap();
        prop_assert!((0..g.node_count()).all(|v| g.degree(v) == 6));
        let again = make_small_world(w, 4, 6, seed).unwrap();
        prop_assert_eq!(g.edges(), again.edges());
    }

    #[test]
    fn trees_have_level_sum_size(m in 1usize..5, k in 3usize..6, depth in 1usize..5) {
        let g = make_tree(m, k, depth).unwrap();
        let want: usize = 1 + (1..=depth).map(|d| m * (k - 1).pow(d as u32 - 1)).sum::<usize>();
        prop_assert_eq!(g.node_count(), want);
        prop_assert_eq!(g.edge_count(), want - 1);
        prop_assert_eq!(g.degree(0), m);
        prop_assert!(g.validate().is_ok());
    }

    #[test]
    fn pressure_equals_susceptible_infected_edges(
        g in graph_strategy(),
        bits in prop::collection::vec(any::<bool>(), 1..64),
    ) {
        let x = state(g.node_count(), &bits);
        let by_node: usize = x.susceptible_nodes().map(|j| infected_neighbor_count(&g, &x, j)).sum();
        let by_edge = g
            .edges()
            .iter()
            .filter(|&&(u, v)| x.is_infected(u as usize) != x.is_infected(v as usize))
            .count();
        prop_assert_eq!(by_node, by_edge);
        prop_assert_eq!(si_edge_count(&g, &x), by_edge);
    }

    #[test]
    fn hex_round_trip(n in 1usize..200, bits in prop::collection::vec(any::<bool>(), 1..64)) {
        let x = state(n, &bits);
        let text = x.to_hex();
        prop_assert_eq!(InfectionState::from_hex(&text).unwrap(), x);
    }

    #[test]
    fn des_paths_replay_and_si_is_monotone(
        g in graph_strategy(),
        bits in prop::collection::vec(any::<bool>(), 1..16),
        seed in any::<u64>(),
        sis in any::<bool>(),
    ) {
        let x0 = state(g.node_count(), &bits);
        let p = if sis { ProcessParams::sis(0.7).unwrap() } else { ProcessParams::si() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tr = run_des(&g, &p, &x0, 0.6, &mut rng, DesOptions::default()).unwrap();
        prop_assert!(tr.replay_is_consistent());
        prop_assert_eq!(tr.counters.steps, tr.counters.events_total);
        prop_assert_eq!(tr.state_at(0.6).unwrap(), tr.final_state.clone());
        if !sis {
            let mut prev = tr.state_at(0.0).unwrap();
            for t in [0.1, 0.25, 0.4, 0.6] {
                let cur = tr.state_at(t).unwrap();
                prop_assert!(cur.dominates(&prev).unwrap());
                prev = cur;
            }
        }
    }

    #[test]
    fn dts_si_paths_are_monotone(
        g in graph_strategy(),
        bits in prop::collection::vec(any::<bool>(), 1..16),
        seed in any::<u64>(),
    ) {
        let x0 = state(g.node_count(), &bits);
        let cfg = DtsConfig::new(0.1, 1.0, StepPolicy::Truncate).unwrap();
        let tr = run_dts(&g, &ProcessParams::si(), &x0, &cfg, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(&tr.states[0], &x0);
        for w in tr.states.windows(2) {
            prop_assert!(w[1].dominates(&w[0]).unwrap());
        }
    }

    #[test]
    fn coupled_si_dominance(
        g in graph_strategy(),
        bits in prop::collection::vec(any::<bool>(), 1..16),
        seed in any::<u64>(),
        h in prop::sample::select(vec![0.01, 0.1, 0.5]),
    ) {
        let x0 = state(g.node_count(), &bits);
        let cfg = DtsConfig::new(h, 1.0, StepPolicy::Truncate).unwrap();
        let path = run_coupled(&g, &ProcessParams::si(), &x0, &cfg, seed, 0);
        prop_assert!(path.dominance_held());
        for i in 0..path.approx.len() {
            prop_assert!(path.sampled_true[i].dominates(&path.approx[i]).unwrap());
        }
    }
}
