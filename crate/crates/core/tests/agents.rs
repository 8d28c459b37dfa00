use slatefree::agents::*;
use slatefree::*;
use slatefree::catalog::{build_catalog, small_scenario_overrides, DEFAULT_BASE_COST};

fn s(items: &[usize]) -> Slate {
    Slate::new(items.to_vec()).unwrap()
}

fn small_mdp(n: usize) -> SlateMdp {
    let cat = build_catalog(10, &small_scenario_overrides(), DEFAULT_BASE_COST, 3, 0.0).unwrap();
    SlateMdp::new(cat, UserModel::user1(10, 0.75).unwrap(), n).unwrap()
}

#[test]
fn vanilla_sarsa_arithmetic() {
    let mut t = SlateQTable::new(10, 4, 0.0).unwrap();
    let (w, w2) = (s(&[1, 2, 3, 4]), s(&[0, 2, 5, 6]));
    t.set(3, &w2, 10.0);
    vanilla_sarsa_update(&mut t, 0, &w, 5.0, 3, &w2, 0.5, 0.85);
    assert!((t.get(0, &w) - 6.75).abs() < 1e-12);

    let before = t.clone();
    // zero TD error leaves the table alone
    let q = t.get(0, &w);
    vanilla_sarsa_update(&mut t, 0, &w, q - 0.85 * 10.0, 3, &w2, 0.5, 0.85);
    assert_eq!(t.row(0), before.row(0));

    vanilla_sarsa_update(&mut t, 0, &w, 2.5, 3, &w2, 1.0, 0.0);
    assert_eq!(t.get(0, &w), 2.5);
}

#[test]
fn vanilla_q_bootstraps_on_minimum_over_all_slates() {
    let mut t = SlateQTable::new(10, 4, 50.0).unwrap();
    let far = t.space().unrank(125, 3).unwrap();
    t.set(3, &far, -7.0);
    let w = s(&[1, 2, 3, 4]);
    vanilla_q_update(&mut t, 0, &w, 1.0, 3, 1.0, 0.5);
    assert_eq!(t.get(0, &w), 1.0 - 3.5);

    let mut flat = SlateQTable::new(10, 4, 4.0).unwrap();
    let mut sarsa = flat.clone();
    vanilla_q_update(&mut flat, 0, &w, 1.0, 3, 0.3, 0.85);
    vanilla_sarsa_update(&mut sarsa, 0, &w, 1.0, 3, &far, 0.3, 0.85);
    assert_eq!(flat.get(0, &w), sarsa.get(0, &w));
}

#[test]
fn slatefree_sarsa_arithmetic() {
    let mut t = ItemQTable::new(10, 0.0);
    let w2 = s(&[0, 2, 5, 6]);
    for &k in w2.items() {
        t.set(3, k, 10.0);
    }
    let w = s(&[1, 2, 3, 4]);
    let n = slatefree_sarsa_update(&mut t, 0, &w, &[5.0; 4], 3, &w2, 0.5, 0.85);
    assert_eq!(n, 4);
    for &j in w.items() {
        assert!((t.get(0, j) - 6.75).abs() < 1e-12);
    }
    assert_eq!(t.get(0, 5), 0.0);
}

#[test]
fn slatefree_q_uses_valid_minimum() {
    let mut t = ItemQTable::new(4, 0.0);
    for (j, v) in [3.0, 7.0, 2.0, 9.0].into_iter().enumerate() {
        t.set(2, j, v);
    }
    let w = s(&[1, 3]);
    slatefree_q_update(&mut t, 0, &w, 1.0, 2, 1.0, 1.0);
    assert_eq!(t.get(0, 1), 4.0);
    assert_eq!(t.get(0, 3), 4.0);

    let mut t = ItemQTable::new(4, 9.0);
    slatefree_q_update(&mut t, 0, &w, 5.0, 2, 1.0, 0.0);
    assert_eq!(t.get(0, 1), 5.0);
    assert_eq!(t.get(0, 3), 5.0);
    assert_eq!(t.get(0, 2), 9.0);
}

#[test]
fn slatefree_q_hand_instance() {
    // K=4, N=2: s=1, w={0,3}, cost 2, s'=0; row 0 = [_, 4, 6, 8]; Q(1,0)=1, Q(1,3)=3
    let mut t = ItemQTable::new(4, 0.0);
    t.set(0, 1, 4.0);
    t.set(0, 2, 6.0);
    t.set(0, 3, 8.0);
    t.set(1, 0, 1.0);
    t.set(1, 3, 3.0);
    slatefree_q_update(&mut t, 1, &s(&[0, 3]), 2.0, 0, 0.25, 0.5);
    // target = 2 + 0.5 * 4 = 4
    assert_eq!(t.get(1, 0), 1.0 + 0.25 * 3.0);
    assert_eq!(t.get(1, 3), 3.0 + 0.25 * 1.0);
    assert_eq!(t.get(1, 2), 0.0);
}

#[test]
fn self_transition_reads_pre_update_row() {
    // s' = s: the min over row s is taken before the slate entries move
    let mut t = ItemQTable::new(4, 0.0);
    t.set(1, 0, 10.0);
    t.set(1, 2, 1.0);
    t.set(1, 3, 10.0);
    slatefree_q_update(&mut t, 1, &s(&[0, 2]), 0.0, 1, 1.0, 1.0);
    assert_eq!(t.get(1, 0), 1.0);
    assert_eq!(t.get(1, 2), 1.0);
}

#[test]
fn greedy_slate_rules() {
    let row = [5.0, 1.0, 0.0, 3.0, 2.0, 9.0];
    assert_eq!(greedy_slate(&row, 2, 2), s(&[1, 4]));
    let flat = [0.0; 10];
    assert_eq!(greedy_slate(&flat, 0, 4), s(&[1, 2, 3, 4]));
    assert_eq!(greedy_slate(&flat, 3, 4), s(&[0, 1, 2, 4]));
    let ties = [1.0, 0.0, 1.0, 1.0, 0.0];
    assert_eq!(greedy_slate(&ties, 4, 2), s(&[0, 1]));
}

#[test]
fn slateq_updates_only_selected_item() {
    let mdp = small_mdp(4);
    let oracle = ChoiceModelOracle::new(mdp.user_handle());
    let mut t = ItemQTable::new(10, 0.0);
    let mut null = vec![0.0; 10];
    let w = s(&[1, 2, 3, 4]);
    let w2 = s(&[0, 1, 5, 6]);
    for &k in w2.items() {
        t.set(3, k, 8.0);
    }
    let n = slateq_update(&mut t, &mut null, 0, &w, 5.0, 3, &w2, &oracle, RejectUpdate::None, 0.5, 0.85);
    assert_eq!(n, 1);
    assert!((t.get(0, 3) - 0.5 * (5.0 + 0.85 * 8.0)).abs() < 1e-12);
    for j in [1, 2, 4] {
        assert_eq!(t.get(0, j), 0.0);
    }
    // rejection
    let n = slateq_update(&mut t, &mut null, 0, &w, 5.0, 9, &w2, &oracle, RejectUpdate::None, 0.5, 0.85);
    assert_eq!(n, 0);
    let n = slateq_update(&mut t, &mut null, 0, &w, 5.0, 9, &w2, &oracle, RejectUpdate::NullItem, 0.5, 0.85);
    assert_eq!(n, 1);
    assert!(null[0] > 0.0);
}

#[test]
fn slateq_single_item_slate_matches_sarsa_backup() {
    let cat = build_catalog(10, &[], DEFAULT_BASE_COST, 3, 0.0).unwrap();
    let mdp = SlateMdp::new(cat, UserModel::user1(10, 1.0).unwrap(), 1).unwrap();
    let oracle = ChoiceModelOracle::new(mdp.user_handle());
    let mut a = ItemQTable::new(10, 0.0);
    a.set(4, 7, 3.0);
    let mut b = a.clone();
    let mut null = vec![0.0; 10];
    slateq_update(&mut a, &mut null, 0, &s(&[4]), 2.0, 4, &s(&[7]), &oracle, RejectUpdate::None, 0.1, 0.85);
    slatefree_sarsa_update(&mut b, 0, &s(&[4]), &[2.0], 4, &s(&[7]), 0.1, 0.85);
    assert_eq!(a, b);
}

#[test]
fn epsilon_extremes() {
    let mdp = small_mdp(2);
    let cat = build_catalog(6, &[], DEFAULT_BASE_COST, 3, 0.0).unwrap();
    let mdp6 = SlateMdp::new(cat, UserModel::user1(6, 0.75).unwrap(), 2).unwrap();

    let mut cfg = AgentConfig::new(Algorithm::SlatefreeQ, 0.85, 1);
    cfg.epsilon = 0.0;
    let mut agent = Agent::new(cfg, &mdp).unwrap();
    for _ in 0..100 {
        assert_eq!(agent.act(5), agent.greedy(5));
    }

    let mut cfg = AgentConfig::new(Algorithm::VanillaQ, 0.85, 2);
    cfg.epsilon = 1.0;
    let mut agent = Agent::new(cfg, &mdp6).unwrap();
    let space = mdp6.space();
    let draws = 100_000;
    let mut counts = vec![0usize; 10];
    for _ in 0..draws {
        let w = agent.act(1);
        counts[space.rank(&w, 1).unwrap() as usize] += 1;
    }
    for c in counts {
        assert!((c as f64 / draws as f64 - 0.1).abs() <= 0.01);
    }
}

#[test]
fn only_slateq_gets_the_oracle() {
    let mdp = small_mdp(4);
    for alg in Algorithm::ALL {
        let agent = Agent::new(AgentConfig::new(alg, 0.85, 0), &mdp).unwrap();
        assert_eq!(agent.has_oracle(), alg == Algorithm::Slateq);
    }
}

#[test]
fn config_validation() {
    let mut cfg = AgentConfig::new(Algorithm::SlatefreeQ, 0.85, 0);
    cfg.updates_per_step = Some(5);
    assert!(cfg.validate(4).is_err());
    cfg.updates_per_step = Some(2);
    assert!(cfg.validate(4).is_ok());
    cfg.algorithm = Algorithm::VanillaQ;
    assert!(cfg.validate(4).is_err());
    let mut cfg = AgentConfig::new(Algorithm::Slateq, 0.85, 0);
    cfg.epsilon = 1.5;
    assert!(cfg.validate(4).is_err());
    cfg.epsilon = 0.1;
    cfg.learning_rate = 0.0;
    assert!(cfg.validate(4).is_err());
}

#[test]
fn partial_updates_touch_m_entries() {
    let mdp = small_mdp(4);
    let mut cfg = AgentConfig::new(Algorithm::SlatefreeQ, 0.85, 0);
    cfg.updates_per_step = Some(2);
    let mut agent = Agent::new(cfg, &mdp).unwrap();
    let w = s(&[1, 2, 3, 4]);
    assert_eq!(agent.update(0, &w, 10.0, 3, &s(&[0, 1, 2, 4])), 2);
    let changed = (0..10).filter(|&j| agent.item_table().unwrap().get(0, j) != 0.0).count();
    assert_eq!(changed, 2);
}

#[test]
fn slatefree_sarsa_bootstrap_is_unbiased() {
    use rand::distr::{weighted::WeightedIndex, Distribution};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use slatefree::decomposition::item_frequencies;
    use slatefree::policy::RandomizedPolicy;

    let mdp = small_mdp(4);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let policy = RandomizedPolicy::random(mdp.space(), 4, &mut rng);
    let next = 3;
    let q: Vec<f64> = (0..10).map(|_| rng.random_range(0.0..100.0)).collect();
    let freq = item_frequencies(&policy);
    let exact: f64 = (0..10).filter(|&k| k != next).map(|k| freq[next][k] * q[k]).sum::<f64>() / 4.0;

    let support = policy.support(next);
    let pick = WeightedIndex::new(support.iter().map(|(_, p)| *p)).unwrap();
    let samples = 100_000;
    let mut total = 0.0;
    for _ in 0..samples {
        let slate = &support[pick.sample(&mut rng)].0;
        total += slate.items().iter().map(|&k| q[k]).sum::<f64>() / 4.0;
    }
    let estimate = total / samples as f64;
    assert!((estimate / exact - 1.0).abs() < 0.01, "estimate {estimate} exact {exact}");
}
