use std::collections::BTreeMap;

use trustmix::{generate_topology, DeploymentConfig};

#[test]
fn paper_scale_deployments_connect_early() {
    let mut attempts = BTreeMap::new();
    for seed in 0..100 {
        let config = DeploymentConfig {
            attacker_pct: 10.0,
            seed,
            ..DeploymentConfig::default()
        };
        let t = generate_topology(&config).unwrap();
        assert_eq!(t.sensor_count(), 804);
        assert_eq!(t.attackers().len(), 80);
        *attempts.entry(t.attempts()).or_insert(0u32) += 1;
    }
    println!("deployment attempts histogram over 100 seeds: {attempts:?}");
    let worst = *attempts.keys().last().unwrap();
    assert!(worst <= 10, "needed {worst} attempts");
}

#[test]
fn attacker_set_is_independent_of_positions_stream() {
    // same seed, different percentages: positions agree, attackers nest in size
    let base = DeploymentConfig {
        seed: 3,
        ..DeploymentConfig::default()
    };
    let a = generate_topology(&DeploymentConfig {
        attacker_pct: 10.0,
        ..base.clone()
    })
    .unwrap();
    let b = generate_topology(&DeploymentConfig {
        attacker_pct: 50.0,
        ..base
    })
    .unwrap();
    assert_eq!(a.positions(), b.positions());
    assert_eq!(a.hops(), b.hops());
    assert_eq!(b.attackers().len(), 402);
}
