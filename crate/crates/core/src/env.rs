//! Episode generation and UAV movement.
//!
//! An episode lives in a square arena sized so that both the UAV density and
//! the user density stay constant as the fleet grows. Users are drawn around
//! uniformly placed cluster centers (one cluster per UAV) and keep their
//! positions for the whole episode; UAVs move on a fixed-step compass grid.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::ConfigError;

/// 2D point in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: Vec2) -> f64 {
        self.distance_sq(other).sqrt()
    }

    pub fn distance_sq(&self, other: Vec2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// Service class a user subscribes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SliceKind {
    Embb,
    Urllc,
    Mmtc,
}

impl SliceKind {
    pub const ALL: [SliceKind; 3] = [SliceKind::Embb, SliceKind::Urllc, SliceKind::Mmtc];

    /// Stable index used everywhere a per-slice triple is stored
    /// (eMBB = 0, URLLC = 1, mMTC = 2).
    pub fn index(self) -> usize {
        match self {
            SliceKind::Embb => 0,
            SliceKind::Urllc => 1,
            SliceKind::Mmtc => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SliceKind::Embb => "eMBB",
            SliceKind::Urllc => "URLLC",
            SliceKind::Mmtc => "mMTC",
        }
    }
}

/// Static description of the scenario: densities, geometry, slice mix, seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ArenaConfig {
    /// Fleet size; also the number of user clusters.
    pub uav_count: usize,
    /// Users per square kilometer.
    pub user_density_per_km2: f64,
    /// UAVs per square kilometer; fixes the arena area for a given fleet.
    pub uav_density_per_km2: f64,
    /// Constant flight height in meters.
    pub uav_height_m: f64,
    /// Movement step per decision in meters.
    pub step_m: f64,
    /// Isotropic standard deviation of each user cluster in meters.
    pub cluster_sigma_m: f64,
    /// Probability of a user belonging to (eMBB, URLLC, mMTC).
    pub slice_probs: [f64; 3],
    /// Demanded downlink rate per slice in bit/s (eMBB, URLLC, mMTC).
    pub slice_demands_bps: [f64; 3],
    /// Master seed for episode generation.
    pub seed: u64,
}

impl Default for ArenaConfig {
    fn default() -> Self {
        Self {
            uav_count: 2,
            user_density_per_km2: 100.0,
            uav_density_per_km2: 8.0,
            uav_height_m: 50.0,
            step_m: 25.0,
            cluster_sigma_m: 40.0,
            slice_probs: [0.2, 0.1, 0.7],
            slice_demands_bps: [5.0e6, 10.0e6, 0.5e6],
            seed: 0,
        }
    }
}

impl ArenaConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.uav_count < 1 {
            return Err(ConfigError::Invalid("uav_count must be >= 1".into()));
        }
        for (name, v) in [
            ("user_density_per_km2", self.user_density_per_km2),
            ("uav_density_per_km2", self.uav_density_per_km2),
            ("uav_height_m", self.uav_height_m),
            ("step_m", self.step_m),
            ("cluster_sigma_m", self.cluster_sigma_m),
        ] {
            if !(v > 0.0) {
                return Err(ConfigError::Invalid(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        let p = &self.slice_probs;
        if p.iter().any(|&x| x < 0.0) {
            return Err(ConfigError::Invalid(format!(
                "slice probabilities must be nonnegative, got {p:?}"
            )));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ConfigError::Invalid(format!(
                "slice probabilities must sum to 1 (got {sum})"
            )));
        }
        if self.slice_demands_bps.iter().any(|&d| !(d > 0.0)) {
            return Err(ConfigError::Invalid(
                "slice demands must be strictly positive".into(),
            ));
        }
        Ok(())
    }

    /// Side of the square arena in meters: area = uav_count / uav_density.
    pub fn arena_side_m(&self) -> f64 {
        let area_km2 = self.uav_count as f64 / self.uav_density_per_km2;
        area_km2.sqrt() * 1000.0
    }

    /// Number of users, rounded half up from density x area.
    pub fn user_count(&self) -> usize {
        let area_km2 = self.uav_count as f64 / self.uav_density_per_km2;
        (self.user_density_per_km2 * area_km2 + 0.5).floor() as usize
    }

    pub fn demand_bps(&self, slice: SliceKind) -> f64 {
        self.slice_demands_bps[slice.index()]
    }
}

/// One user terminal, pinned in place for the episode.
#[derive(Debug, Clone, PartialEq)]
pub struct UserEquipment {
    pub id: usize,
    pub position: Vec2,
    pub slice: SliceKind,
    /// Rate threshold th_g in bit/s; equals the configured demand of the slice.
    pub demand_bps: f64,
    /// Index of the generator cluster this user was drawn from.
    pub cluster: usize,
}

/// One aerial base station.
#[derive(Debug, Clone, PartialEq)]
pub struct UavState {
    pub id: usize,
    pub position: Vec2,
    pub height_m: f64,
}

/// Ground truth for one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub arena_side_m: f64,
    pub users: Vec<UserEquipment>,
    pub cluster_centers: Vec<Vec2>,
    pub uavs: Vec<UavState>,
    pub timestep: u32,
}

/// Compass movement of one step, plus hover.
///
/// Directions are absolute: straight = +y, back = -y, left = -x, right = +x.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveAction {
    Straight,
    Left,
    Right,
    Back,
    Hover,
}

impl MoveAction {
    /// Action index order used by the placement policy head.
    pub const ALL: [MoveAction; 5] = [
        MoveAction::Straight,
        MoveAction::Left,
        MoveAction::Right,
        MoveAction::Back,
        MoveAction::Hover,
    ];

    pub fn index(self) -> usize {
        match self {
            MoveAction::Straight => 0,
            MoveAction::Left => 1,
            MoveAction::Right => 2,
            MoveAction::Back => 3,
            MoveAction::Hover => 4,
        }
    }
}

/// One standard normal draw from exactly two uniform draws (Box-Muller).
///
/// Keeping the draw count fixed makes every generated quantity reproducible
/// from the seed regardless of the sampled values.
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Categorical slice draw given one uniform sample, inverse-CDF order
/// eMBB, URLLC, mMTC.
pub fn assign_slice_from_u(u: f64, probs: &[f64; 3]) -> SliceKind {
    if u < probs[0] {
        SliceKind::Embb
    } else if u < probs[0] + probs[1] {
        SliceKind::Urllc
    } else {
        SliceKind::Mmtc
    }
}

/// Draw the slice of one user.
pub fn assign_slice(rng: &mut ChaCha8Rng, probs: &[f64; 3]) -> SliceKind {
    assign_slice_from_u(rng.gen::<f64>(), probs)
}

/// Generate a fresh world: cluster centers, users, UAV spawn points.
///
/// Draw order is fixed (centers, then per user: cluster, x, y, slice; then
/// UAVs) so the same seed reproduces the same world bit for bit. Gaussian
/// samples are clipped to the arena rather than resampled.
pub fn spawn_episode(config: &ArenaConfig, rng: &mut ChaCha8Rng) -> WorldState {
    let side = config.arena_side_m();
    let n_users = config.user_count();
    let k = config.uav_count;
    let sigma = config.cluster_sigma_m;

    // Cluster centers uniform in the arena inset by one sigma.
    let inset = sigma.min(side / 2.0);
    let mut cluster_centers = Vec::with_capacity(k);
    for _ in 0..k {
        let x = inset + rng.gen::<f64>() * (side - 2.0 * inset);
        let y = inset + rng.gen::<f64>() * (side - 2.0 * inset);
        cluster_centers.push(Vec2::new(x, y));
    }

    let mut users = Vec::with_capacity(n_users);
    for id in 0..n_users {
        let cluster = rng.gen_range(0..k);
        let center = cluster_centers[cluster];
        let x = (center.x + sigma * standard_normal(rng)).clamp(0.0, side);
        let y = (center.y + sigma * standard_normal(rng)).clamp(0.0, side);
        let slice = assign_slice(rng, &config.slice_probs);
        users.push(UserEquipment {
            id,
            position: Vec2::new(x, y),
            slice,
            demand_bps: config.demand_bps(slice),
            cluster,
        });
    }

    let mut uavs = Vec::with_capacity(k);
    for id in 0..k {
        let x = rng.gen::<f64>() * side;
        let y = rng.gen::<f64>() * side;
        uavs.push(UavState {
            id,
            position: Vec2::new(x, y),
            height_m: config.uav_height_m,
        });
    }

    WorldState {
        arena_side_m: side,
        users,
        cluster_centers,
        uavs,
        timestep: 0,
    }
}

/// Shift a UAV one step along the action's compass direction, clamped to the
/// arena. Hover is the identity.
pub fn apply_move(uav: &UavState, action: MoveAction, step_m: f64, arena_side_m: f64) -> UavState {
    let (dx, dy) = match action {
        MoveAction::Straight => (0.0, step_m),
        MoveAction::Back => (0.0, -step_m),
        MoveAction::Left => (-step_m, 0.0),
        MoveAction::Right => (step_m, 0.0),
        MoveAction::Hover => (0.0, 0.0),
    };
    UavState {
        id: uav.id,
        position: Vec2::new(
            (uav.position.x + dx).clamp(0.0, arena_side_m),
            (uav.position.y + dy).clamp(0.0, arena_side_m),
        ),
        height_m: uav.height_m,
    }
}

/// Apply one move per UAV simultaneously and advance the clock.
pub fn step_world(world: &WorldState, moves: &[MoveAction], step_m: f64) -> WorldState {
    assert_eq!(moves.len(), world.uavs.len(), "one move per UAV");
    let uavs = world
        .uavs
        .iter()
        .zip(moves)
        .map(|(u, &m)| apply_move(u, m, step_m, world.arena_side_m))
        .collect();
    WorldState {
        arena_side_m: world.arena_side_m,
        users: world.users.clone(),
        cluster_centers: world.cluster_centers.clone(),
        uavs,
        timestep: world.timestep + 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn cfg(uavs: usize) -> ArenaConfig {
        ArenaConfig {
            uav_count: uavs,
            ..ArenaConfig::default()
        }
    }

    #[test]
    fn arena_side_and_user_count_follow_densities() {
        assert!((cfg(2).arena_side_m() - 500.0).abs() < 1e-9);
        assert_eq!(cfg(2).user_count(), 25);
        assert_eq!(cfg(1).user_count(), 13); // round(12.5) half up
        let expected = [13, 25, 38, 50, 63];
        for (i, &n) in expected.iter().enumerate() {
            assert_eq!(cfg(i + 1).user_count(), n, "fleet {}", i + 1);
        }
    }

    #[test]
    fn degenerate_slice_probs_make_every_user_embb() {
        let config = ArenaConfig {
            slice_probs: [1.0, 0.0, 0.0],
            ..cfg(2)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let world = spawn_episode(&config, &mut rng);
        assert_eq!(world.users.len(), 25);
        for u in &world.users {
            assert_eq!(u.slice, SliceKind::Embb);
            assert_eq!(u.demand_bps, 5.0e6);
        }
    }

    #[test]
    fn slice_assignment_inverse_cdf_boundaries() {
        let probs = [0.2, 0.1, 0.7];
        assert_eq!(assign_slice_from_u(0.15, &probs), SliceKind::Embb);
        assert_eq!(assign_slice_from_u(0.25, &probs), SliceKind::Urllc);
        assert_eq!(assign_slice_from_u(0.95, &probs), SliceKind::Mmtc);
        // A boundary value falls into the higher bin (strict < on the left).
        assert_eq!(assign_slice_from_u(0.2, &probs), SliceKind::Urllc);
    }

    #[test]
    fn slice_frequencies_match_probabilities() {
        let probs = [0.2, 0.1, 0.7];
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 1_000_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[assign_slice(&mut rng, &probs).index()] += 1;
        }
        for (i, &p) in probs.iter().enumerate() {
            let freq = counts[i] as f64 / n as f64;
            assert!(
                (freq - p).abs() < 0.005,
                "slice {i}: freq {freq} vs p {p}"
            );
        }
    }

    #[test]
    fn moves_shift_one_axis_and_clamp() {
        let uav = UavState {
            id: 0,
            position: Vec2::new(100.0, 100.0),
            height_m: 50.0,
        };
        let hover = apply_move(&uav, MoveAction::Hover, 25.0, 500.0);
        assert_eq!(hover.position, Vec2::new(100.0, 100.0));
        let fwd = apply_move(&uav, MoveAction::Straight, 25.0, 500.0);
        assert_eq!(fwd.position, Vec2::new(100.0, 125.0));
        let near_edge = UavState {
            id: 0,
            position: Vec2::new(10.0, 100.0),
            height_m: 50.0,
        };
        let clamped = apply_move(&near_edge, MoveAction::Left, 25.0, 500.0);
        assert_eq!(clamped.position, Vec2::new(0.0, 100.0));
    }

    #[test]
    fn same_seed_reproduces_world_exactly() {
        let config = cfg(3);
        let a = spawn_episode(&config, &mut ChaCha8Rng::seed_from_u64(7));
        let b = spawn_episode(&config, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
        let c = spawn_episode(&config, &mut ChaCha8Rng::seed_from_u64(8));
        assert_ne!(a, c);
    }

    #[test]
    fn spawn_respects_bounds_and_cluster_count() {
        for seed in 0..20 {
            let config = cfg(1 + (seed as usize % 5));
            let world = spawn_episode(&config, &mut ChaCha8Rng::seed_from_u64(seed));
            let side = world.arena_side_m;
            assert_eq!(world.cluster_centers.len(), config.uav_count);
            assert_eq!(world.users.len(), config.user_count());
            for u in &world.users {
                assert!(u.position.x >= 0.0 && u.position.x <= side);
                assert!(u.position.y >= 0.0 && u.position.y <= side);
                assert!(u.cluster < config.uav_count);
                assert_eq!(u.demand_bps, config.demand_bps(u.slice));
            }
            for v in &world.uavs {
                assert!(v.position.x >= 0.0 && v.position.x <= side);
                assert!(v.position.y >= 0.0 && v.position.y <= side);
                assert_eq!(v.height_m, config.uav_height_m);
            }
        }
    }

    #[test]
    fn validate_rejects_bad_configs() {
        let mut bad = cfg(2);
        bad.slice_probs = [0.5, 0.6, 0.7];
        assert!(bad.validate().is_err());
        let mut bad = cfg(2);
        bad.uav_count = 0;
        assert!(bad.validate().is_err());
        let mut bad = cfg(2);
        bad.step_m = 0.0;
        assert!(bad.validate().is_err());
        assert!(cfg(2).validate().is_ok());
    }

    #[test]
    fn move_changes_at_most_one_coordinate_by_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let side = 500.0;
        for _ in 0..200 {
            let uav = UavState {
                id: 0,
                position: Vec2::new(rng.gen::<f64>() * side, rng.gen::<f64>() * side),
                height_m: 50.0,
            };
            let action = MoveAction::ALL[rng.gen_range(0..5)];
            let moved = apply_move(&uav, action, 25.0, side);
            let dx = (moved.position.x - uav.position.x).abs();
            let dy = (moved.position.y - uav.position.y).abs();
            assert!(dx <= 25.0 + 1e-12 && dy <= 25.0 + 1e-12);
            assert!(dx == 0.0 || dy == 0.0);
        }
    }
}
