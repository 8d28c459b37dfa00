use slatefree::catalog::*;

#[test]
fn small_scenario_cost_ranges() {
    for seed in [0, 1, 42, u64::MAX] {
        let cat = build_catalog(10, &small_scenario_overrides(), DEFAULT_BASE_COST, seed, 0.0).unwrap();
        let c = cat.base_costs();
        assert!((5.0..9.0).contains(&c[0]));
        assert!((0.0..4.0).contains(&c[1]));
        assert!((4.0..8.0).contains(&c[7]));
        assert!((8.0..12.0).contains(&c[9]));
        for i in [2, 3, 4, 5, 6, 8] {
            assert!((20.0..24.0).contains(&c[i]), "item {i}: {}", c[i]);
        }
    }
}

#[test]
fn defaults_only() {
    let cat = build_catalog(2, &[], DEFAULT_BASE_COST, 5, 0.0).unwrap();
    assert!(cat.base_costs().iter().all(|c| (20.0..24.0).contains(c)));
}

#[test]
fn deterministic_in_seed() {
    let a = build_catalog(100, &small_scenario_overrides(), DEFAULT_BASE_COST, 9, 0.0).unwrap();
    let b = build_catalog(100, &small_scenario_overrides(), DEFAULT_BASE_COST, 9, 0.0).unwrap();
    assert_eq!(a, b);
    let c = build_catalog(100, &small_scenario_overrides(), DEFAULT_BASE_COST, 10, 0.0).unwrap();
    assert_ne!(a.base_costs(), c.base_costs());
}

#[test]
fn bad_overrides() {
    assert!(build_catalog(10, &[(3, 1.0), (3, 2.0)], 20.0, 0, 0.0).is_err());
    assert!(build_catalog(10, &[(10, 1.0)], 20.0, 0, 0.0).is_err());
    assert!(build_catalog(1, &[], 20.0, 0, 0.0).is_err());
    assert!(build_catalog(4, &[], 20.0, 0, -1.0).is_err());
}

#[test]
fn cost_mode_follows_penalty() {
    let cat = build_catalog(4, &[], 20.0, 0, 42.0).unwrap();
    assert_eq!(cat.cost_mode(), CostMode::SlatePenalty { penalty: 42.0 });
    let cat = build_catalog(4, &[], 20.0, 0, 0.0).unwrap();
    assert_eq!(cat.cost_mode(), CostMode::StateOnly);
}
