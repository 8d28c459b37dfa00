//! Fixtures shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slatefree::catalog::{small_scenario_overrides, DEFAULT_BASE_COST};
use slatefree::{build_catalog, ItemQTable, Slate, SlateMdp, UserModel};

/// User-1 MDP over `k` items with slates of size `n`.
pub fn user1_mdp(k: usize, n: usize) -> SlateMdp {
    let catalog = build_catalog(k, &small_scenario_overrides(), DEFAULT_BASE_COST, 0, 0.0).unwrap();
    SlateMdp::new(catalog, UserModel::user1(k, 0.75).unwrap(), n).unwrap()
}

/// Item table filled with uniform values in `[0, 100)`.
pub fn random_item_table(k: usize, seed: u64) -> ItemQTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = ItemQTable::new(k, 0.0);
    for s in 0..k {
        for j in 0..k {
            if s != j {
                table.set(s, j, rng.random_range(0.0..100.0));
            }
        }
    }
    table
}

/// `count` uniformly drawn (state, slate, next, next slate) transitions.
pub fn random_transitions(mdp: &SlateMdp, count: usize, seed: u64) -> Vec<(usize, Slate, usize, Slate)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = mdp.num_items();
    (0..count)
        .map(|_| {
            let s = rng.random_range(0..k);
            let next = rng.random_range(0..k);
            let slate = mdp.space().sample_uniform(s, &mut rng);
            let next_slate = mdp.space().sample_uniform(next, &mut rng);
            (s, slate, next, next_slate)
        })
        .collect()
}
