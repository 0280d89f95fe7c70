//! Runs the ten acceptance checks and prints one PASS/FAIL line per check.
//!
//! The process exits non-zero on a failed check only when
//! `SKIRMISH_ACCEPTANCE_STRICT=1`; otherwise failures are reported but the
//! target still succeeds, so an unmet directional criterion stays visible
//! without hiding the rest of the suite.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use skirmish::comms::{build_visibility_graph, propagate, record_local, EntityKey, EntityRecord, VisibilityGraph};
use skirmish::geom::Vec2;
use skirmish::harness::{read_replay, run_ablation, run_experiment, ExperimentConfig, ExperimentReport};
use skirmish::obs_text::{parse_obs, render_obs};
use skirmish::skills::bootstrap_library;
use skirmish::skills::pathfind::{astar_first_step, GRID_SIZE};
use skirmish::world::{RewardMode, ScenarioSpec, Team, UnitKind, WorldState};

use common::{
    closure_oracle, dijkstra, neighbour, random_edges, random_grid, random_obs, random_sightings, reward_oracle,
    target_score,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn grid_config() -> ExperimentConfig {
    ExperimentConfig { scenario: "protoss_5v5".into(), seeds: (0..5).collect(), episodes_per_seed: 40, ..Default::default() }
}

fn rates(r: &ExperimentReport) -> Vec<f64> {
    r.summary.per_seed.iter().map(|s| s.win_rate).collect()
}

fn fmt_rates(v: &[f64]) -> String {
    v.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(" ")
}

fn communication(full: &ExperimentReport, elapsed: Duration) -> Outcome {
    let started = Instant::now();
    let zero = run_experiment(&ExperimentConfig { max_hops: 0, ..grid_config() }).unwrap();
    let took = elapsed + started.elapsed();
    let gap = full.summary.median_win_rate - zero.summary.median_win_rate;
    outcome(
        gap >= 0.15 && took < Duration::from_secs(300),
        format!(
            "median {:.3} at 3 hops vs {:.3} at 0 hops (gap {gap:.3}); per seed [{}] vs [{}]; {:.1}s",
            full.summary.median_win_rate,
            zero.summary.median_win_rate,
            fmt_rates(&rates(full)),
            fmt_rates(&rates(&zero)),
            took.as_secs_f64()
        ),
    )
}

fn synthesis(full: &ExperimentReport, init_only: &ExperimentReport, elapsed: Duration) -> Outcome {
    let (f, n) = (rates(full), rates(init_only));
    let strictly = f.iter().zip(&n).filter(|(a, b)| a > b).count();
    let fired: usize = full.episodes.iter().flatten().filter(|e| e.skills_synthesized > 0).count();
    let episodes: usize = full.episodes.iter().map(Vec::len).sum();
    let close = full.summary.median_win_rate >= init_only.summary.median_win_rate - 0.02;
    outcome(
        close && strictly >= 3 && elapsed < Duration::from_secs(600),
        format!(
            "median {:.3} with synthesis vs {:.3} without; strictly greater in {strictly}/5 seeds; \
             directives fired in {fired}/{episodes} episodes",
            full.summary.median_win_rate, init_only.summary.median_win_rate
        ),
    )
}

fn multi_hop_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failures = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=10);
        let p = rng.gen_range(0.1..0.6);
        let edges = random_edges(&mut rng, n, p);
        let hop0 = random_sightings(&mut rng, n, 30);
        let max_hops = rng.gen_range(0..=3);
        let mem = propagate(&hop0, &VisibilityGraph::from_edges(0..n, &edges), max_hops);
        let want = closure_oracle(n, &edges, &hop0, max_hops);
        for a in 0..n {
            let got: Vec<(EntityKey, u32)> = mem.knowledge(a).map(|r| (r.key, r.hops)).collect();
            let exp: Vec<(EntityKey, u32)> = want[&a].values().map(|r| (r.key, r.hops)).collect();
            if got != exp {
                failures += 1;
                break;
            }
        }
    }
    outcome(failures == 0, format!("{failures} mismatches over 1000 graphs"))
}

fn chain() -> Outcome {
    let spec = ScenarioSpec::builtin("protoss_5v5").unwrap();
    let allies: Vec<(UnitKind, Vec2)> =
        [2.0, 10.0, 18.0, 26.0].iter().map(|&x| (UnitKind::Stalker, Vec2::new(x, 16.0))).collect();
    let enemies = [(UnitKind::Zealot, Vec2::new(30.0, 30.0)), (UnitKind::Zealot, Vec2::new(30.0, 16.0))];
    let world = WorldState::with_units(&spec, &allies, &enemies).unwrap();
    let hop0: BTreeMap<usize, Vec<EntityRecord>> = (0..4).map(|i| (i, record_local(i, &world.observe(i), 0))).collect();
    let graph = build_visibility_graph(&world);
    let enemy1 = EntityKey { team: Team::Enemy, id: 1 };
    let at = |h| propagate(&hop0, &graph, h).record(0, enemy1).map(|r| r.hops);
    let (three, two) = (at(3), at(2));
    outcome(three == Some(3) && two.is_none(), format!("max_hops=3 -> {three:?}, max_hops=2 -> {two:?}"))
}

fn astar() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut failures = 0;
    for _ in 0..500 {
        let grid = random_grid(&mut rng);
        let start = (rng.gen_range(0..GRID_SIZE), rng.gen_range(0..GRID_SIZE));
        let goal = (rng.gen_range(0..GRID_SIZE), rng.gen_range(0..GRID_SIZE));
        let optimum = dijkstra(&grid, start, goal);
        let ok = match astar_first_step(&grid, start, goal) {
            None => start == goal || optimum.is_none(),
            Some(d) => neighbour(start, d)
                .filter(|&c| !grid.is_blocked(c) || c == goal)
                .and_then(|c| dijkstra(&grid, c, goal))
                .is_some_and(|rest| Some(rest + 1) == optimum),
        };
        failures += usize::from(!ok);
    }
    let took = started.elapsed();
    outcome(
        failures == 0 && took < Duration::from_secs(30),
        format!("{failures} non-optimal first steps over 500 grids in {:.2}s", took.as_secs_f64()),
    )
}

fn focus_fire() -> Outcome {
    let lib = bootstrap_library();
    let ranged = |n| target_score(&lib, "expert_ranged_kite", UnitKind::Stalker, UnitKind::Stalker, n);
    let r1 = ranged(1) / ranged(0);
    let r2 = ranged(2) / ranged(1);
    let melee = |n| target_score(&lib, "expert_melee_engage", UnitKind::Zergling, UnitKind::Zergling, n);
    let over = melee(3) / melee(0);
    let pass = (r1 - 1.2).abs() < 1e-9 && (r2 - 1.2).abs() < 1e-9 && (over - 0.5).abs() < 1e-9;
    outcome(pass, format!("ratios n=1 {r1:.12}, n=2 {r2:.12}; overcommit {over:.12}"))
}

fn obs_roundtrip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10_000);
    let failures = (0..10_000)
        .filter(|_| {
            let obs = random_obs(&mut rng);
            parse_obs(&render_obs(&obs)).ok() != Some(obs.quantized())
        })
        .count();
    outcome(failures == 0, format!("{failures} failures over 10000 observations"))
}

fn files_under(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn determinism(first: &Path, second: &Path) -> Outcome {
    let a = files_under(first);
    let b = files_under(second);
    let summaries = a.keys().filter(|k| k.ends_with("summary.json")).count();
    let differing: Vec<&String> = a.keys().filter(|k| b.get(*k) != a.get(*k)).collect();
    outcome(
        differing.is_empty() && a.len() == b.len() && summaries == 4,
        format!("{} files compared ({summaries} summaries), {} differ", a.len(), differing.len()),
    )
}

fn retrieval() -> Outcome {
    let lib = bootstrap_library();
    let misses: Vec<String> = lib
        .iter()
        .filter(|s| lib.retrieve(&s.doc, 1).unwrap()[0].0.skill_id != s.skill_id)
        .map(|s| s.skill_id.clone())
        .collect();
    outcome(misses.is_empty() && lib.len() == 5, format!("{} of 5 skills not top-1 for their doc", misses.len()))
}

fn reward_plumbing() -> Outcome {
    let hundred = ExperimentConfig { seeds: (0..5).collect(), episodes_per_seed: 20, ..grid_config() };
    let sparse = run_experiment(&ExperimentConfig { reward_mode: Some(RewardMode::Sparse), ..hundred.clone() }).unwrap();
    let sparse_bad = sparse
        .episodes
        .iter()
        .flatten()
        .filter(|e| !(e.episode_return == 0.0 || e.episode_return == 1.0) || (e.episode_return == 1.0) != e.win)
        .count();
    let dir = tempfile::tempdir().unwrap();
    let dense = run_experiment(&ExperimentConfig {
        reward_mode: Some(RewardMode::Dense),
        out_dir: Some(dir.path().to_path_buf()),
        ..hundred
    })
    .unwrap();
    let spec = ScenarioSpec::builtin("protoss_5v5").unwrap();
    let stats = WorldState::spawn(&spec, 0).unwrap().stat_table().clone();
    let mut dense_bad = 0;
    for ep in dense.episodes.iter().flatten() {
        let records = read_replay(&dir.path().join(ep.replay_path.as_deref().unwrap())).unwrap();
        let oracle: f64 = records.windows(2).map(|w| reward_oracle(&w[0].state, &w[1].state, &stats, RewardMode::Dense)).sum();
        dense_bad += usize::from((oracle - ep.episode_return).abs() >= 1e-9);
    }
    let n = sparse.episodes.iter().map(Vec::len).sum::<usize>();
    outcome(
        sparse_bad == 0 && dense_bad == 0 && n == 100,
        format!("sparse: {sparse_bad}/{n} episodes off; dense: {dense_bad}/100 episodes off the accounting oracle"),
    )
}

fn main() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let started = Instant::now();
    let grid = run_ablation(&ExperimentConfig { out_dir: Some(first.path().to_path_buf()), ..grid_config() }).unwrap();
    let grid_time = started.elapsed();
    run_ablation(&ExperimentConfig { out_dir: Some(second.path().to_path_buf()), ..grid_config() }).unwrap();
    let full = grid.report("full").unwrap();
    let init_only = grid.report("no_synthesis").unwrap();
    let per_condition = grid_time / 4;

    let results = [
        ("communication ablation", communication(full, per_condition)),
        ("synthesis vs init-only", synthesis(full, init_only, per_condition * 2)),
        ("multi-hop BFS oracle", multi_hop_oracle()),
        ("four-agent relay chain", chain()),
        ("A* vs Dijkstra", astar()),
        ("focus-fire arithmetic", focus_fire()),
        ("observation text roundtrip", obs_roundtrip()),
        ("ablation determinism", determinism(first.path(), second.path())),
        ("retrieval self-consistency", retrieval()),
        ("reward plumbing", reward_plumbing()),
    ];
    let mut passed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!("[{}] {:>2}. {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        passed += usize::from(o.pass);
    }
    println!("{passed}/{} acceptance criteria passed", results.len());
    let strict = std::env::var("SKIRMISH_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && passed < results.len() {
        std::process::exit(1);
    }
}
