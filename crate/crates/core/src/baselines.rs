//! Comparison heuristics: Random, RAPoC, PAPoC.
//!
//! The centroid heuristics know the generator cluster memberships; they park
//! each UAV on the centroid of one cluster (optimal assignment) at episode
//! start and hover for the rest of the episode.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::env::{MoveAction, Vec2, WorldState};
use crate::radio::LinkReport;
use crate::slicing::BandwidthSplit;

/// Which heuristic to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeuristicKind {
    Random,
    Rapoc,
    Papoc,
}

impl HeuristicKind {
    pub const ALL: [HeuristicKind; 3] =
        [HeuristicKind::Random, HeuristicKind::Rapoc, HeuristicKind::Papoc];

    pub fn name(self) -> &'static str {
        match self {
            HeuristicKind::Random => "random",
            HeuristicKind::Rapoc => "rapoc",
            HeuristicKind::Papoc => "papoc",
        }
    }
}

impl std::str::FromStr for HeuristicKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(HeuristicKind::Random),
            "rapoc" => Ok(HeuristicKind::Rapoc),
            "papoc" => Ok(HeuristicKind::Papoc),
            other => Err(format!("unknown heuristic {other:?}")),
        }
    }
}

/// Fully random control: a uniform move and a uniform draw from the learner's
/// discretized split set.
pub fn random_policy(
    rng: &mut ChaCha8Rng,
    alloc_splits: &[BandwidthSplit],
) -> (MoveAction, BandwidthSplit) {
    let mv = MoveAction::ALL[rng.gen_range(0..MoveAction::ALL.len())];
    let split = alloc_splits[rng.gen_range(0..alloc_splits.len())];
    (mv, split)
}

/// Mean position of the users generated from each cluster; an empty cluster
/// falls back to its generator center.
pub fn cluster_centroids(world: &WorldState) -> Vec<Vec2> {
    let k = world.cluster_centers.len();
    let mut sums = vec![(0.0f64, 0.0f64, 0usize); k];
    for u in &world.users {
        let s = &mut sums[u.cluster];
        s.0 += u.position.x;
        s.1 += u.position.y;
        s.2 += 1;
    }
    sums.iter()
        .enumerate()
        .map(|(c, &(sx, sy, n))| {
            if n == 0 {
                world.cluster_centers[c]
            } else {
                Vec2::new(sx / n as f64, sy / n as f64)
            }
        })
        .collect()
}

/// Park position per UAV id: each UAV covers one cluster centroid, matched so
/// the total squared travel distance is minimal.
pub fn assign_centroids(world: &WorldState) -> Vec<Vec2> {
    let centroids = cluster_centroids(world);
    let n = world.uavs.len();
    assert_eq!(centroids.len(), n, "one cluster per UAV");

    // Fleets are small (<= 5 in the studied scenarios), so exact assignment
    // by permutation search is fine.
    assert!(n <= 8, "permutation assignment not meant for large fleets");
    let mut order: Vec<usize> = (0..n).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    permute(&mut order, 0, &mut |perm| {
        let cost: f64 = world
            .uavs
            .iter()
            .enumerate()
            .map(|(i, uav)| uav.position.distance_sq(centroids[perm[i]]))
            .sum();
        match &best {
            Some((c, _)) if *c <= cost => {}
            _ => best = Some((cost, perm.to_vec())),
        }
    });
    let (_, perm) = best.expect("at least one permutation");
    (0..n).map(|i| centroids[perm[i]]).collect()
}

fn permute(items: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Which form of the demand-proportional rule PAPoC uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PapocForm {
    /// Weight each slice by (covered users in the slice) x (per-user demand).
    Aggregated,
    /// Weight each slice by the per-user demand alone.
    PerUser,
}

/// Demand-proportional split over the users covered by one UAV. With nobody
/// covered the split falls back to equal thirds.
pub fn papoc_split(
    world: &WorldState,
    uav_id: usize,
    links: &[LinkReport],
    form: PapocForm,
) -> BandwidthSplit {
    let mut counts = [0u32; 3];
    for u in &world.users {
        if links[u.id].serving_uav == Some(uav_id) {
            counts[u.slice.index()] += 1;
        }
    }
    let demands = {
        // Demands are per-slice constants; read them off any user of the
        // slice, falling back to the world being empty of that slice.
        let mut d = [0.0f64; 3];
        for u in &world.users {
            d[u.slice.index()] = u.demand_bps;
        }
        d
    };
    let agg: [f64; 3] = match form {
        PapocForm::Aggregated => [
            counts[0] as f64 * demands[0],
            counts[1] as f64 * demands[1],
            counts[2] as f64 * demands[2],
        ],
        PapocForm::PerUser => demands,
    };
    let total: f64 = agg.iter().sum();
    if total <= 0.0 {
        return BandwidthSplit::uniform();
    }
    let em = agg[0] / total;
    let ur = agg[1] / total;
    // The last component keeps the sum exactly one.
    BandwidthSplit::new(em, ur, 1.0 - em - ur).expect("normalized split is valid")
}
