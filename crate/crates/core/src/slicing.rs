//! Per-UAV bandwidth splitting, round-robin PRB scheduling, and SLA scoring.

use std::collections::BTreeMap;

use crate::env::{SliceKind, WorldState};
use crate::error::ConfigError;
use crate::radio::{data_rate_bps, LinkReport, TOTAL_PRBS};

/// Fractions of the band a UAV reserves for (eMBB, URLLC, mMTC).
///
/// Nonnegative and summing to one within 1e-9.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthSplit {
    em: f64,
    ur: f64,
    mm: f64,
}

impl BandwidthSplit {
    pub fn new(em: f64, ur: f64, mm: f64) -> Result<Self, ConfigError> {
        if em < 0.0 || ur < 0.0 || mm < 0.0 {
            return Err(ConfigError::Invalid(format!(
                "split fractions must be nonnegative: ({em}, {ur}, {mm})"
            )));
        }
        let sum = em + ur + mm;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ConfigError::Invalid(format!(
                "split fractions must sum to 1, got {sum}"
            )));
        }
        Ok(Self { em, ur, mm })
    }

    /// Equal thirds. The components are bitwise identical so downstream
    /// remainder tie-breaks see truly equal fractions; the sum misses 1.0 by
    /// well under the 1e-9 tolerance.
    pub fn uniform() -> Self {
        let third = 1.0 / 3.0;
        Self {
            em: third,
            ur: third,
            mm: third,
        }
    }

    pub fn em(&self) -> f64 {
        self.em
    }

    pub fn ur(&self) -> f64 {
        self.ur
    }

    pub fn mm(&self) -> f64 {
        self.mm
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.em, self.ur, self.mm]
    }
}

/// All splits on the simplex grid with the given denominator, enumerated as
/// (em, ur, mm) = (i, j, d - i - j) / d in lexicographic (i, j) order.
///
/// A denominator of 10 yields the 66-point action set.
pub fn enumerate_splits(denominator: u32) -> Vec<BandwidthSplit> {
    assert!(denominator >= 1, "denominator must be >= 1");
    let d = denominator as f64;
    let mut out = Vec::new();
    for i in 0..=denominator {
        for j in 0..=(denominator - i) {
            let k = denominator - i - j;
            let em = i as f64 / d;
            let ur = j as f64 / d;
            // Force the exact-sum invariant despite the two divisions.
            let mm = if k == 0 { 0.0 } else { 1.0 - em - ur };
            out.push(BandwidthSplit { em, ur, mm });
        }
    }
    out
}

/// Integerize a split into PRB budgets by largest remainder; ties by slice
/// order eMBB, URLLC, mMTC. Budgets always sum to `total_prbs`.
pub fn prb_partition(split: &BandwidthSplit, total_prbs: u32) -> [u32; 3] {
    prb_partition_fractions(split.as_array(), total_prbs)
}

/// Largest-remainder apportionment of raw fractions (which may carry
/// rounding slack); the budgets still sum to exactly `total_prbs`.
pub fn prb_partition_fractions(fractions: [f64; 3], total_prbs: u32) -> [u32; 3] {
    let quotas = [
        fractions[0] * total_prbs as f64,
        fractions[1] * total_prbs as f64,
        fractions[2] * total_prbs as f64,
    ];
    let mut prbs = [0u32; 3];
    let mut remainders = [0f64; 3];
    let mut assigned = 0u32;
    for s in 0..3 {
        let floor = quotas[s].floor();
        prbs[s] = floor as u32;
        remainders[s] = quotas[s] - floor;
        assigned += prbs[s];
    }
    let mut order = [0usize, 1, 2];
    // Stable sort keeps the eMBB, URLLC, mMTC preference on equal remainders.
    order.sort_by(|&a, &b| remainders[b].partial_cmp(&remainders[a]).unwrap());
    let mut leftover = total_prbs - assigned;
    for &s in order.iter().cycle() {
        if leftover == 0 {
            break;
        }
        prbs[s] += 1;
        leftover -= 1;
    }
    prbs
}

/// Spread a slice's PRB budget over its users: everyone gets the floor share,
/// the first `budget mod n` users by id get one extra.
pub fn round_robin(slice_prbs: u32, user_ids: &[usize]) -> BTreeMap<usize, u32> {
    debug_assert!(user_ids.windows(2).all(|w| w[0] < w[1]), "ids must be sorted");
    let mut out = BTreeMap::new();
    if user_ids.is_empty() {
        return out;
    }
    let n = user_ids.len() as u32;
    let base = slice_prbs / n;
    let extra = (slice_prbs % n) as usize;
    for (rank, &id) in user_ids.iter().enumerate() {
        out.insert(id, base + u32::from(rank < extra));
    }
    out
}

/// The result of scheduling one TTI across the whole fleet.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleOutcome {
    pub prbs_per_user: BTreeMap<usize, u32>,
    pub rate_per_user: BTreeMap<usize, f64>,
    /// SLA indicator per user.
    pub satisfied: BTreeMap<usize, bool>,
    /// Satisfied associated users per UAV (the per-UAV reward), indexed by id.
    pub per_uav_reward: Vec<u32>,
}

impl ScheduleOutcome {
    pub fn total_reward(&self) -> u32 {
        self.per_uav_reward.iter().sum()
    }
}

/// Partition each UAV's 100 PRBs by its split, round-robin them within each
/// slice over that UAV's associated users, and score SLA satisfaction.
///
/// PRBs of a slice with no associated users are left unused. Unassociated
/// users get zero PRBs and count as unsatisfied.
pub fn evaluate(
    world: &WorldState,
    splits: &[BandwidthSplit],
    links: &[LinkReport],
) -> ScheduleOutcome {
    assert_eq!(splits.len(), world.uavs.len(), "one split per UAV");
    assert_eq!(links.len(), world.users.len(), "one link report per user");

    let mut prbs_per_user = BTreeMap::new();
    let mut rate_per_user = BTreeMap::new();
    let mut satisfied = BTreeMap::new();
    for user in &world.users {
        prbs_per_user.insert(user.id, 0u32);
        rate_per_user.insert(user.id, 0.0f64);
        satisfied.insert(user.id, false);
    }

    let mut per_uav_reward = vec![0u32; world.uavs.len()];
    for (uav_idx, uav) in world.uavs.iter().enumerate() {
        let budgets = prb_partition(&splits[uav_idx], TOTAL_PRBS);
        for slice in SliceKind::ALL {
            // Users of this slice served by this UAV, ascending id.
            let ids: Vec<usize> = world
                .users
                .iter()
                .filter(|u| u.slice == slice && links[u.id].serving_uav == Some(uav.id))
                .map(|u| u.id)
                .collect();
            let shares = round_robin(budgets[slice.index()], &ids);
            for (&id, &prbs) in &shares {
                let link = &links[id];
                let rate = data_rate_bps(link.bits_per_symbol, link.code_rate, prbs);
                let ok = rate >= world.users[id].demand_bps;
                prbs_per_user.insert(id, prbs);
                rate_per_user.insert(id, rate);
                satisfied.insert(id, ok);
                if ok {
                    per_uav_reward[uav_idx] += 1;
                }
            }
        }
    }

    ScheduleOutcome {
        prbs_per_user,
        rate_per_user,
        satisfied,
        per_uav_reward,
    }
}
