mod common;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use skirmish::skills::pathfind::{astar_first_step, Grid, GRID_SIZE};

use common::{dijkstra, neighbour, random_grid};

#[test]
fn first_step_lies_on_an_optimal_path() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let started = Instant::now();
    let mut reachable = 0;
    for case in 0..500 {
        let grid = random_grid(&mut rng);
        let start = (rng.gen_range(0..GRID_SIZE), rng.gen_range(0..GRID_SIZE));
        let goal = (rng.gen_range(0..GRID_SIZE), rng.gen_range(0..GRID_SIZE));
        let optimum = dijkstra(&grid, start, goal);
        match astar_first_step(&grid, start, goal) {
            None => assert!(start == goal || optimum.is_none(), "case {case}: missed a path of {optimum:?}"),
            Some(d) => {
                reachable += 1;
                let next = neighbour(start, d).expect("step stays on the map");
                assert!(!grid.is_blocked(next) || next == goal, "case {case}: stepped into an obstacle");
                let rest = dijkstra(&grid, next, goal).expect("goal reachable from the first step");
                assert_eq!(Some(rest + 1), optimum, "case {case}: {start:?} -> {goal:?} via {d:?}");
            }
        }
    }
    assert!(reachable > 300, "too few solvable cases: {reachable}");
    assert!(started.elapsed() < Duration::from_secs(30));
}

#[test]
fn enclosed_start_has_no_step() {
    let mut grid = Grid::new();
    for c in [(4, 5), (4, 3), (3, 4), (5, 4)] {
        grid.set_blocked(c, true);
    }
    assert_eq!(astar_first_step(&grid, (4, 4), (20, 20)), None);
    assert!(dijkstra(&grid, (4, 4), (20, 20)).is_none());
}

#[test]
fn occupied_goal_is_still_reachable() {
    let mut grid = Grid::new();
    grid.set_blocked((10, 10), true);
    assert!(astar_first_step(&grid, (10, 5), (10, 10)).is_some());
}
