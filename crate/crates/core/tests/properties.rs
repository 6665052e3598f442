use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trustmix::engine::{ScenarioKind, Simulation};
use trustmix::metrics::smoothed_rate;
use trustmix::routing::{
    mix_next_hop, trustmix_next_hop, NeighborView, NodeSelfState, RouteDecision,
};
use trustmix::topology::{compute_hops, generate_topology, DeploymentConfig, NodeId, SINK};
use trustmix::trust::{opinion, trust_value, LinkEvidence};

fn evidence() -> impl Strategy<Value = LinkEvidence> {
    (1u64..5000).prop_flat_map(|s| {
        (0..=s)
            .prop_flat_map(move |r| (Just(r), 0..=s - r))
            .prop_map(move |(r, c)| LinkEvidence::new(s, r, c))
    })
}

fn routing_input() -> impl Strategy<Value = (u32, f64, Vec<(u32, f64)>)> {
    (
        1u32..8,
        (0u32..20).prop_map(f64::from),
        prop::collection::vec((0u32..9, (0u32..30).prop_map(f64::from)), 0..8),
    )
}

fn views(raw: &[(u32, f64)]) -> Vec<NeighborView> {
    raw.iter()
        .enumerate()
        .map(|(i, &(hop, e))| NeighborView {
            id: NodeId(i as u32 + 2),
            advertised_hop: hop,
            advertised_consumed_energy: e,
        })
        .collect()
}

proptest! {
    #[test]
    fn trust_matches_opinion_form(e in evidence()) {
        let o = opinion(&e).unwrap();
        let inv_s = 1.0 / e.sent as f64;
        let alt = (2.0 * o.belief + o.uncertainty + inv_s)
            / (2.0 * o.belief + 2.0 * o.disbelief + o.uncertainty + inv_s);
        prop_assert!((trust_value(&e) - alt).abs() <= 1e-12);
        prop_assert!((o.belief + o.disbelief + o.uncertainty - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn unit_trust_gate_is_transparent((hop, energy, raw) in routing_input(), seed: u64, gate_seed: u64) {
        let me = NodeSelfState { id: NodeId(1), hop, consumed_energy: energy };
        let n = views(&raw);
        let mut tie_a = ChaCha8Rng::seed_from_u64(seed);
        let mut tie_b = ChaCha8Rng::seed_from_u64(seed);
        let mut gate = ChaCha8Rng::seed_from_u64(gate_seed);
        let plain = mix_next_hop(&me, &n, &mut tie_a);
        let gated = trustmix_next_hop(&me, &n, |_| 1.0, &mut gate, &mut tie_b);
        prop_assert_eq!(plain, gated);
        // both consumed the same tie draws
        prop_assert_eq!(tie_a.gen::<u64>(), tie_b.gen::<u64>());
    }

    #[test]
    fn slide_targets_are_lower_and_cheaper((hop, energy, raw) in routing_input(), seed: u64) {
        let me = NodeSelfState { id: NodeId(1), hop, consumed_energy: energy };
        let n = views(&raw);
        let mut tie = ChaCha8Rng::seed_from_u64(seed);
        if let RouteDecision::Slide(id) = mix_next_hop(&me, &n, &mut tie) {
            let v = n.iter().find(|v| v.id == id).unwrap();
            prop_assert!(v.advertised_hop < hop);
            prop_assert!(v.advertised_consumed_energy < energy + f64::from(hop * hop));
            // nothing strictly cheaper qualified
            for w in &n {
                if w.advertised_hop < hop && w.advertised_consumed_energy < energy + f64::from(hop * hop) {
                    prop_assert!(w.advertised_consumed_energy >= v.advertised_consumed_energy);
                }
            }
        } else {
            prop_assert!(n.iter().all(|w| w.advertised_hop >= hop
                || w.advertised_consumed_energy >= energy + f64::from(hop * hop)));
        }
    }

    #[test]
    fn smoothed_rate_is_shift_invariant(series in prop::collection::vec(0u32..3, 1..300), shift in 0usize..50, window in 1usize..40) {
        prop_assume!(window <= series.len());
        let mut shifted = vec![0u32; shift];
        shifted.extend_from_slice(&series);
        for t in window - 1..series.len() {
            prop_assert_eq!(
                smoothed_rate(&series, t, window).unwrap(),
                smoothed_rate(&shifted, t + shift, window).unwrap()
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn topology_invariants(seed: u64, pct in 0.0f64..60.0) {
        let config = DeploymentConfig { radius: 3.5, density: 4.0, attacker_pct: pct, seed, max_resample_attempts: 200 };
        let t = generate_topology(&config).unwrap();
        prop_assert_eq!(t.sensor_count(), config.sensor_count());
        prop_assert_eq!(t.attackers().len(), config.attacker_count(t.sensor_count()));
        prop_assert!(!t.attackers().contains(&SINK));
        for u in 0..t.node_count() as u32 {
            let u = NodeId(u);
            let ns = t.neighbors(u);
            prop_assert!(ns.windows(2).all(|w| w[0] < w[1]));
            for &v in ns {
                prop_assert!(t.neighbors(v).contains(&u));
                prop_assert!(t.position(u).distance(&t.position(v)) <= 1.0);
            }
            if u != SINK {
                let best = ns.iter().map(|&m| t.hop(m)).min().unwrap();
                prop_assert_eq!(t.hop(u), best + 1);
            }
        }
        prop_assert_eq!(t.hop(SINK), 0);
        let again = generate_topology(&config).unwrap();
        prop_assert_eq!(&t, &again);
        let hops: Vec<u32> = compute_hops(t.adjacency(), SINK).into_iter().map(Option::unwrap).collect();
        prop_assert_eq!(hops.as_slice(), t.hops());
    }

    #[test]
    fn engine_invariants_hold_every_round(seed: u64, pct in prop::sample::select(vec![0.0, 10.0, 30.0]), kind in prop::sample::select(ScenarioKind::ALL.to_vec())) {
        let config = DeploymentConfig { radius: 3.0, density: 4.0, attacker_pct: pct, seed, max_resample_attempts: 200 };
        let t = generate_topology(&config).unwrap();
        let mut sim = Simulation::new(t, kind, seed).unwrap();
        for _ in 0..150 {
            let rec = sim.step_round().unwrap();
            prop_assert!(!sim.topology().is_attacker(rec.origin));
            sim.check_invariants().map_err(TestCaseError::fail)?;
        }
        // gradient: every slide between honest relays goes strictly down in hop
        for m in sim.messages() {
            for link in &m.path {
                if !sim.acts_as_attacker(link.to) {
                    prop_assert!(sim.topology().hop(link.to) < sim.topology().hop(link.from));
                }
            }
            prop_assert!(m.path.len() as u32 <= sim.topology().max_hop());
        }
    }
}

#[test]
fn trust_grid_range_and_monotonicity() {
    for s in 0..=20u64 {
        for r in 0..=s {
            for c in 0..=s - r {
                let t = trust_value(&LinkEvidence::new(s, r, c));
                assert!(t > 0.0 && t <= 1.0, "({s},{r},{c}) -> {t}");
                if r + c < s {
                    let more_c = trust_value(&LinkEvidence::new(s, r, c + 1));
                    let more_r = trust_value(&LinkEvidence::new(s, r + 1, c));
                    assert!(more_c < t, "trust must fall with captures at ({s},{r},{c})");
                    assert!(
                        more_r >= t,
                        "trust must not fall with deliveries at ({s},{r},{c})"
                    );
                }
            }
        }
    }
}

#[test]
fn trust_limit_form() {
    // fixed (b, d, u) = (0.6, 0.3, 0.1) at s = 10^6
    let e = LinkEvidence::new(1_000_000, 600_000, 300_000);
    let limit = (2.0 * 0.6 + 0.1) / (2.0 * 0.6 + 2.0 * 0.3 + 0.1);
    assert!((trust_value(&e) - limit).abs() <= 1e-5);
}
