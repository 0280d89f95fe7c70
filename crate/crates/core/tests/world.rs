mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use skirmish::harness::scripted_policy;
use skirmish::world::{Action, RewardMode, ScenarioSpec, Team, WorldState};

use common::reward_oracle;

const SCENARIOS: [&str; 6] = ["protoss_5v5", "protoss_5v6", "terran_5v5", "terran_5v6", "zerg_5v5", "zerg_5v6"];

fn scripted_episode(spec: &ScenarioSpec, seed: u64, mut check: impl FnMut(&WorldState, &WorldState, f64, bool)) {
    let mut world = WorldState::spawn(spec, seed).unwrap();
    while !world.is_done() {
        let before = world.clone();
        let allies = scripted_policy(&world, Team::Ally);
        let enemies = scripted_policy(&world, Team::Enemy);
        let out = world.step(&allies, &enemies).unwrap();
        check(&before, &world, out.reward, out.info.win);
    }
}

#[test]
fn dense_rewards_match_snapshot_accounting() {
    for (i, name) in SCENARIOS.iter().enumerate() {
        let spec = ScenarioSpec::builtin(name).unwrap();
        for seed in 0..17 {
            scripted_episode(&spec, 1000 * i as u64 + seed, |before, after, reward, _| {
                let want = reward_oracle(&before.snapshot(), &after.snapshot(), after.stat_table(), RewardMode::Dense);
                assert!((reward - want).abs() < 1e-9, "{name} seed {seed} t={}: {reward} vs {want}", after.timestep());
            });
        }
    }
}

#[test]
fn sparse_return_is_the_win_flag() {
    for name in SCENARIOS {
        let mut spec = ScenarioSpec::builtin(name).unwrap();
        spec.reward_mode = RewardMode::Sparse;
        for seed in 0..17 {
            let mut total = 0.0;
            let mut won = false;
            scripted_episode(&spec, seed, |_, _, r, win| {
                total += r;
                won = win;
            });
            assert!(total == 0.0 || total == 1.0);
            assert_eq!(total == 1.0, won, "{name} seed {seed}");
        }
    }
}

#[test]
fn best_possible_dense_episode_earns_twenty() {
    let spec = ScenarioSpec::builtin("protoss_5v5").unwrap();
    let world = WorldState::spawn(&spec, 0).unwrap();
    let mut gone = world.snapshot();
    for e in &mut gone.enemies {
        e.health = 0.0;
        e.shield = 0.0;
        e.alive = false;
    }
    let r = reward_oracle(&world.snapshot(), &gone, world.stat_table(), RewardMode::Dense);
    assert!((r - 20.0).abs() < 1e-9);
}

#[test]
fn same_seed_same_trajectory() {
    let spec = ScenarioSpec::builtin("zerg_5v6").unwrap();
    let run = || {
        let mut digests = Vec::new();
        scripted_episode(&spec, 42, |_, after, _, _| digests.push(after.digest()));
        digests
    };
    assert_eq!(run(), run());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_legal_play_keeps_invariants(seed in any::<u64>(), which in 0usize..6) {
        let spec = ScenarioSpec::builtin(SCENARIOS[which]).unwrap();
        let mut world = WorldState::spawn(&spec, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut steps = 0;
        while !world.is_done() {
            let pick = |team: Team, world: &WorldState, rng: &mut ChaCha8Rng| -> Vec<Action> {
                (0..world.units(team).len())
                    .map(|i| *world.available_actions(team, i).choose(rng).unwrap())
                    .collect()
            };
            let a = pick(Team::Ally, &world, &mut rng);
            let e = pick(Team::Enemy, &world, &mut rng);
            let dead_before: Vec<bool> = world.units(Team::Ally).iter().chain(world.units(Team::Enemy)).map(|u| !u.alive).collect();
            let out = world.step(&a, &e).unwrap();
            steps += 1;
            prop_assert_eq!(world.timestep(), steps);
            prop_assert!(out.reward >= 0.0);
            for (u, was_dead) in world.units(Team::Ally).iter().chain(world.units(Team::Enemy)).zip(dead_before) {
                prop_assert!((0.0..=1.0).contains(&u.health) && (0.0..=1.0).contains(&u.shield));
                prop_assert!(u.pos.in_map());
                if was_dead || !u.alive {
                    prop_assert!(!u.alive && u.health == 0.0);
                    prop_assert_eq!(world.available_actions(u.team, u.id), vec![Action::NO_OP]);
                }
            }
        }
        prop_assert!(world.timestep() <= spec.episode_limit);
        prop_assert!(world.step(&[], &[]).is_err());
    }
}
