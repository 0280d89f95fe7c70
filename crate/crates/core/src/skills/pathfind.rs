//! A* on the 32x32 map raster with unit footprints as obstacles.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::geom::{Direction, Vec2, MAP_SIZE};
use crate::obs_text::{EntityView, ObsData};
use crate::world::{Action, StatTable, UnitKind};

pub const GRID_SIZE: usize = 32;

pub type Cell = (usize, usize);

/// Occupancy raster; cell `(x, y)` covers `[x, x+1) x [y, y+1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    blocked: Vec<bool>,
}

impl Default for Grid {
    fn default() -> Self {
        Grid { blocked: vec![false; GRID_SIZE * GRID_SIZE] }
    }
}

impl Grid {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cell_of(p: Vec2) -> Cell {
        let clamp = |v: f64| (v.floor().max(0.0) as usize).min(GRID_SIZE - 1);
        (clamp(p.x), clamp(p.y))
    }

    pub fn is_blocked(&self, c: Cell) -> bool {
        self.blocked[c.1 * GRID_SIZE + c.0]
    }

    pub fn set_blocked(&mut self, c: Cell, blocked: bool) {
        self.blocked[c.1 * GRID_SIZE + c.0] = blocked;
    }

    /// Block every cell whose centre lies within `radius` of `center`, plus
    /// the cell containing it.
    pub fn block_disc(&mut self, center: Vec2, radius: f64) {
        self.set_blocked(Self::cell_of(center), true);
        let lo = Self::cell_of(Vec2::new(center.x - radius, center.y - radius));
        let hi = Self::cell_of(Vec2::new(center.x + radius, center.y + radius));
        for y in lo.1..=hi.1 {
            for x in lo.0..=hi.0 {
                let mid = Vec2::new(x as f64 + 0.5, y as f64 + 0.5);
                if mid.dist(center) < radius {
                    self.set_blocked((x, y), true);
                }
            }
        }
    }

    /// In-grid neighbour in direction `d`, ignoring occupancy.
    pub fn step(c: Cell, d: Direction) -> Option<Cell> {
        let (x, y) = (c.0 as i64, c.1 as i64);
        let (nx, ny) = match d {
            Direction::North => (x, y + 1),
            Direction::South => (x, y - 1),
            Direction::East => (x + 1, y),
            Direction::West => (x - 1, y),
        };
        let n = GRID_SIZE as i64;
        (0..n).contains(&nx).then_some(())?;
        (0..n).contains(&ny).then_some(())?;
        Some((nx as usize, ny as usize))
    }
}

#[derive(PartialEq)]
struct Open {
    f: f64,
    h: f64,
    dir: usize,
    cell: usize,
    g: u32,
}

impl Eq for Open {}

impl Ord for Open {
    // BinaryHeap is a max-heap; invert so the smallest key pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then(other.h.total_cmp(&self.h))
            .then(other.dir.cmp(&self.dir))
            .then(other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// First move of a shortest 4-connected path from `start` to `goal`, or `None`
/// when the goal is unreachable or already reached. Ties are broken by lower
/// f, then lower heuristic, then North < South < East < West.
pub fn astar_first_step(grid: &Grid, start: Cell, goal: Cell) -> Option<Direction> {
    if start == goal {
        return None;
    }
    let idx = |c: Cell| c.1 * GRID_SIZE + c.0;
    let heuristic = |c: Cell| ((c.0 as f64 - goal.0 as f64).powi(2) + (c.1 as f64 - goal.1 as f64).powi(2)).sqrt();
    let mut best_g = vec![u32::MAX; GRID_SIZE * GRID_SIZE];
    let mut first = vec![None::<Direction>; GRID_SIZE * GRID_SIZE];
    let mut closed = vec![false; GRID_SIZE * GRID_SIZE];
    let mut open = BinaryHeap::new();
    best_g[idx(start)] = 0;
    let h0 = heuristic(start);
    open.push(Open { f: h0, h: h0, dir: 0, cell: idx(start), g: 0 });
    while let Some(node) = open.pop() {
        if closed[node.cell] || node.g > best_g[node.cell] {
            continue;
        }
        closed[node.cell] = true;
        let cell = (node.cell % GRID_SIZE, node.cell / GRID_SIZE);
        if cell == goal {
            return first[node.cell];
        }
        for d in Direction::ALL {
            let Some(next) = Grid::step(cell, d) else { continue };
            if grid.is_blocked(next) && next != goal {
                continue;
            }
            let g = node.g + 1;
            let i = idx(next);
            if closed[i] || g >= best_g[i] {
                continue;
            }
            best_g[i] = g;
            first[i] = if cell == start { Some(d) } else { first[node.cell] };
            let h = heuristic(next);
            open.push(Open { f: g as f64 + h, h, dir: d.index(), cell: i, g });
        }
    }
    None
}

fn default_stats() -> &'static StatTable {
    static TABLE: OnceLock<StatTable> = OnceLock::new();
    TABLE.get_or_init(StatTable::default)
}

/// Rasterize `others` around the observer, leaving the start cell, the goal
/// cell and the pursued unit's footprint passable.
pub fn build_grid<'a>(
    obs: &ObsData,
    others: impl IntoIterator<Item = &'a EntityView>,
    goal: Vec2,
    target_type: Option<UnitKind>,
) -> Grid {
    let stats = default_stats();
    let origin = obs.own_position.scale(MAP_SIZE);
    let own_radius = stats.get(obs.own_unit_type).collision_radius;
    let mut grid = Grid::new();
    for e in others {
        let pos = e.position.scale(obs.own_sight_range) + origin;
        let radius = stats.get(e.unit_type).collision_radius + own_radius;
        if target_type == Some(e.unit_type) && pos.dist(goal) <= radius + 0.75 {
            continue;
        }
        grid.block_disc(pos, radius);
    }
    grid.set_blocked(Grid::cell_of(origin), false);
    grid.set_blocked(Grid::cell_of(goal), false);
    grid
}

/// Move action for the first step toward the relative target `(dx, dy)`
/// (normalized by sight range), avoiding `others`.
pub fn find_path_among<'a>(
    obs: &ObsData,
    others: impl IntoIterator<Item = &'a EntityView>,
    dx: f64,
    dy: f64,
    target_type: Option<UnitKind>,
) -> Option<Action> {
    let origin = obs.own_position.scale(MAP_SIZE);
    let goal_pos = Vec2::new(dx, dy).scale(obs.own_sight_range) + origin;
    let start = Grid::cell_of(origin);
    let goal = Grid::cell_of(goal_pos);
    if start == goal {
        return None;
    }
    let grid = build_grid(obs, others, goal_pos, target_type);
    let dir = astar_first_step(&grid, start, goal)?;
    let action = Action::movement(dir);
    obs.is_available(action).then_some(action)
}

/// [`find_path_among`] over the units in the observation itself.
pub fn find_path(obs: &ObsData, dx: f64, dy: f64, target_type: Option<UnitKind>) -> Option<Action> {
    find_path_among(obs, obs.allies.iter().chain(&obs.enemies), dx, dy, target_type)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_cell_is_none() {
        assert_eq!(astar_first_step(&Grid::new(), (4, 4), (4, 4)), None);
    }

    #[test]
    fn straight_east_on_empty_grid() {
        assert_eq!(astar_first_step(&Grid::new(), (4, 4), (10, 4)), Some(Direction::East));
        assert_eq!(astar_first_step(&Grid::new(), (4, 4), (4, 0)), Some(Direction::South));
    }

    #[test]
    fn diagonal_tie_prefers_north() {
        assert_eq!(astar_first_step(&Grid::new(), (4, 4), (8, 8)), Some(Direction::North));
    }

    #[test]
    fn walled_goal_unreachable() {
        let mut g = Grid::new();
        for d in Direction::ALL {
            g.set_blocked(Grid::step((10, 10), d).unwrap(), true);
        }
        assert_eq!(astar_first_step(&g, (2, 2), (10, 10)), None);
    }

    #[test]
    fn detours_around_wall() {
        let mut g = Grid::new();
        for y in 0..20 {
            g.set_blocked((6, y), true);
        }
        // wall spans y < 20 right next to the start, so only north is optimal
        assert_eq!(astar_first_step(&g, (5, 4), (8, 4)), Some(Direction::North));
    }
}
