//! Genie-aided bound: exhaustive joint placement/allocation over a discrete
//! grid and simplex.
//!
//! For a fixed joint placement the association is fixed, and the satisfied
//! count of one UAV depends only on its own split. Each placement is
//! therefore scored by optimizing the 66-way (or coarser) split of every UAV
//! independently, which keeps the enumeration exact while cutting the cost
//! from |grid|^F x |simplex|^F to |grid|^F x |simplex| x F.

use rayon::prelude::*;

use crate::env::{Vec2, WorldState};
use crate::error::OracleError;
use crate::radio::{associate, ChannelParams, McsTable};
use crate::slicing::{enumerate_splits, evaluate, BandwidthSplit};

/// Search-space discretization.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    /// Lattice points per axis (includes the arena edges).
    pub grid_points_per_axis: usize,
    /// Simplex step; 1/bw_step must be an integer.
    pub bw_step: f64,
    /// Fleet sizes up to this bound are solved exactly; larger fleets fall
    /// back to per-UAV coordinate ascent and are flagged non-exact.
    pub max_uavs_exact: usize,
    /// Upper bound on candidate evaluations for the exact path.
    pub max_evaluations: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            grid_points_per_axis: 8,
            bw_step: 0.1,
            max_uavs_exact: 2,
            max_evaluations: 200_000_000,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<(), OracleError> {
        if self.grid_points_per_axis < 2 {
            return Err(OracleError::Invalid(
                "grid_points_per_axis must be >= 2".into(),
            ));
        }
        let inv = 1.0 / self.bw_step;
        if !(self.bw_step > 0.0) || (inv - inv.round()).abs() > 1e-9 {
            return Err(OracleError::Invalid(format!(
                "1/bw_step must be an integer, got bw_step = {}",
                self.bw_step
            )));
        }
        Ok(())
    }

    pub fn simplex_denominator(&self) -> u32 {
        (1.0 / self.bw_step).round() as u32
    }
}

/// Best placement and allocation found, with the search size and whether the
/// enumeration was exhaustive.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub positions: Vec<Vec2>,
    pub splits: Vec<BandwidthSplit>,
    /// Total satisfied users at the solution.
    pub objective: u32,
    /// Candidate (placement, split) evaluations performed.
    pub evaluations: u64,
    /// True when the full grid x simplex space was enumerated.
    pub exact: bool,
}

/// The lattice of candidate positions, row-major over (x, y).
pub fn grid_positions(arena_side_m: f64, points_per_axis: usize) -> Vec<Vec2> {
    let n = points_per_axis;
    let step = arena_side_m / (n - 1) as f64;
    let mut out = Vec::with_capacity(n * n);
    for iy in 0..n {
        for ix in 0..n {
            out.push(Vec2::new(ix as f64 * step, iy as f64 * step));
        }
    }
    out
}

/// Nearest lattice point to an arbitrary position (ties toward the lower
/// index).
pub fn project_position(pos: Vec2, arena_side_m: f64, points_per_axis: usize) -> Vec2 {
    let grid = grid_positions(arena_side_m, points_per_axis);
    let mut best = grid[0];
    let mut best_d = f64::INFINITY;
    for p in grid {
        let d = p.distance_sq(pos);
        if d < best_d {
            best_d = d;
            best = p;
        }
    }
    best
}

/// Nearest simplex point to an arbitrary split (ties toward the lower index).
pub fn project_split(split: &BandwidthSplit, candidates: &[BandwidthSplit]) -> BandwidthSplit {
    let target = split.as_array();
    let mut best = candidates[0];
    let mut best_d = f64::INFINITY;
    for c in candidates {
        let a = c.as_array();
        let d = (0..3).map(|i| (a[i] - target[i]).powi(2)).sum::<f64>();
        if d < best_d {
            best_d = d;
            best = *c;
        }
    }
    best
}

/// Score a fixed placement/allocation on a world (association recomputed).
pub fn score_candidate(
    world: &WorldState,
    positions: &[Vec2],
    splits: &[BandwidthSplit],
    chan: &ChannelParams,
    table: &McsTable,
) -> u32 {
    let placed = world_with_positions(world, positions);
    let links = associate(&placed, chan, table);
    evaluate(&placed, splits, &links).total_reward()
}

fn world_with_positions(world: &WorldState, positions: &[Vec2]) -> WorldState {
    let mut w = world.clone();
    for (uav, &p) in w.uavs.iter_mut().zip(positions) {
        uav.position = p;
    }
    w
}

/// Per-UAV satisfied count for every split, given a fixed placement.
/// Returns, for each UAV, the (best split index, best count) under
/// first-found-max, plus the whole table if requested by the ascent path.
fn best_split_per_uav(
    world: &WorldState,
    positions: &[Vec2],
    splits: &[BandwidthSplit],
    chan: &ChannelParams,
    table: &McsTable,
) -> (Vec<usize>, Vec<u32>, u64) {
    let placed = world_with_positions(world, positions);
    let links = associate(&placed, chan, table);
    let n_uavs = positions.len();
    let mut best_idx = vec![0usize; n_uavs];
    let mut best_cnt = vec![0u32; n_uavs];
    let mut evals = 0u64;
    // Reuse one evaluation per split by scoring the whole fleet; each UAV's
    // count is independent of the other UAVs' splits.
    for (si, s) in splits.iter().enumerate() {
        let fleet_splits = vec![*s; n_uavs];
        let out = evaluate(&placed, &fleet_splits, &links);
        evals += 1;
        for b in 0..n_uavs {
            if si == 0 || out.per_uav_reward[b] > best_cnt[b] {
                best_cnt[b] = out.per_uav_reward[b];
                best_idx[b] = si;
            }
        }
    }
    (best_idx, best_cnt, evals)
}

/// Exhaustively solve the discretized placement/allocation program.
///
/// Exact for fleets up to `max_uavs_exact`; larger fleets use coordinate
/// ascent over UAVs and return a lower bound flagged `exact: false`. Ties
/// break toward the first candidate in lexicographic enumeration order
/// (placement-major, then split index per UAV).
pub fn solve(
    world: &WorldState,
    chan: &ChannelParams,
    table: &McsTable,
    config: &OracleConfig,
) -> Result<OracleSolution, OracleError> {
    config.validate()?;
    let n_uavs = world.uavs.len();
    let splits = enumerate_splits(config.simplex_denominator());
    let grid = grid_positions(world.arena_side_m, config.grid_points_per_axis);

    if world.users.is_empty() {
        return Ok(OracleSolution {
            positions: world.uavs.iter().map(|u| u.position).collect(),
            splits: vec![splits[0]; n_uavs],
            objective: 0,
            evaluations: 0,
            exact: true,
        });
    }

    if n_uavs <= config.max_uavs_exact {
        let placements: u128 = (grid.len() as u128).pow(n_uavs as u32);
        let candidates = placements * splits.len() as u128;
        if candidates > config.max_evaluations as u128 {
            return Err(OracleError::SearchSpaceTooLarge {
                candidates,
                budget: config.max_evaluations,
            });
        }
        solve_exact(world, chan, table, &grid, &splits, n_uavs)
    } else {
        Ok(solve_coordinate_ascent(
            world,
            chan,
            table,
            &grid,
            &splits,
            config.grid_points_per_axis,
        ))
    }
}

fn solve_exact(
    world: &WorldState,
    chan: &ChannelParams,
    table: &McsTable,
    grid: &[Vec2],
    splits: &[BandwidthSplit],
    n_uavs: usize,
) -> Result<OracleSolution, OracleError> {
    let n_grid = grid.len();
    let placements: u64 = (n_grid as u64).pow(n_uavs as u32);

    // Each placement index decodes to one position per UAV (first UAV is the
    // most significant digit, matching lexicographic enumeration).
    let eval_placement = |pidx: u64| -> (u32, Vec<usize>, Vec<usize>, u64) {
        let mut rem = pidx;
        let mut pos_idx = vec![0usize; n_uavs];
        for b in (0..n_uavs).rev() {
            pos_idx[b] = (rem % n_grid as u64) as usize;
            rem /= n_grid as u64;
        }
        let positions: Vec<Vec2> = pos_idx.iter().map(|&i| grid[i]).collect();
        let (split_idx, counts, evals) = best_split_per_uav(world, &positions, splits, chan, table);
        (counts.iter().sum(), pos_idx, split_idx, evals)
    };

    // Deterministic parallel reduction: the winner is the highest objective
    // with the lowest placement index.
    let best = (0..placements)
        .into_par_iter()
        .map(|pidx| {
            let (obj, pos_idx, split_idx, evals) = eval_placement(pidx);
            (obj, pidx, pos_idx, split_idx, evals)
        })
        .reduce(
            || (0u32, u64::MAX, Vec::new(), Vec::new(), 0u64),
            |a, b| {
                let evals = a.4 + b.4;
                let mut keep = if b.1 == u64::MAX {
                    a.clone()
                } else if a.1 == u64::MAX
                    || b.0 > a.0
                    || (b.0 == a.0 && b.1 < a.1)
                {
                    b
                } else {
                    a
                };
                keep.4 = evals;
                keep
            },
        );

    let (objective, _, pos_idx, split_idx, evaluations) = best;
    let positions: Vec<Vec2> = pos_idx.iter().map(|&i| grid[i]).collect();
    let chosen: Vec<BandwidthSplit> = split_idx.iter().map(|&i| splits[i]).collect();
    debug_assert_eq!(
        score_candidate(world, &positions, &chosen, chan, table),
        objective
    );
    Ok(OracleSolution {
        positions,
        splits: chosen,
        objective,
        evaluations,
        exact: true,
    })
}

fn solve_coordinate_ascent(
    world: &WorldState,
    chan: &ChannelParams,
    table: &McsTable,
    grid: &[Vec2],
    splits: &[BandwidthSplit],
    points_per_axis: usize,
) -> OracleSolution {
    let n_uavs = world.uavs.len();

    // Start from the spawn positions snapped to the grid.
    let mut positions: Vec<Vec2> = world
        .uavs
        .iter()
        .map(|u| project_position(u.position, world.arena_side_m, points_per_axis))
        .collect();
    let (mut split_idx, counts, mut evaluations) =
        best_split_per_uav(world, &positions, splits, chan, table);
    let mut objective: u32 = counts.iter().sum();

    loop {
        let mut improved = false;
        for b in 0..n_uavs {
            // Exhaust UAV b's position; other UAVs hold position and split.
            let candidates: Vec<(u32, usize, Vec<usize>, u64)> = grid
                .par_iter()
                .enumerate()
                .map(|(gi, &p)| {
                    let mut pos = positions.clone();
                    pos[b] = p;
                    let placed = world_with_positions(world, &pos);
                    let links = associate(&placed, chan, table);
                    // Moving b changes everyone's interference, so rescore
                    // the whole fleet; b's split is re-optimized, the others
                    // keep theirs.
                    let mut best_total = 0u32;
                    let mut best_si = 0usize;
                    let mut evals = 0u64;
                    for (si, s) in splits.iter().enumerate() {
                        let mut fleet: Vec<BandwidthSplit> =
                            split_idx.iter().map(|&i| splits[i]).collect();
                        fleet[b] = *s;
                        let total = evaluate(&placed, &fleet, &links).total_reward();
                        evals += 1;
                        if total > best_total || si == 0 {
                            best_total = total;
                            best_si = si;
                        }
                    }
                    let mut idx = split_idx.clone();
                    idx[b] = best_si;
                    (best_total, gi, idx, evals)
                })
                .collect();
            for (total, gi, idx, evals) in candidates {
                evaluations += evals;
                if total > objective {
                    objective = total;
                    positions[b] = grid[gi];
                    split_idx = idx;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }

    let chosen: Vec<BandwidthSplit> = split_idx.iter().map(|&i| splits[i]).collect();
    OracleSolution {
        positions,
        splits: chosen,
        objective,
        evaluations,
        exact: false,
    }
}
