//! Shared fixtures for the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use skyslice_core::env::spawn_episode;
use skyslice_core::learn::mlp::Mlp;
use skyslice_core::{ArenaConfig, WorldState};

/// A reproducible two-UAV world.
pub fn bench_world() -> (ArenaConfig, WorldState) {
    let arena = ArenaConfig {
        uav_count: 2,
        seed: 1234,
        ..ArenaConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(arena.seed);
    let world = spawn_episode(&arena, &mut rng);
    (arena, world)
}

/// A placement-sized network and one observation batch.
pub fn bench_net(batch: usize) -> (Mlp, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let net = Mlp::new(&[107, 128, 128, 5], &mut rng);
    let obs = (0..batch * 107)
        .map(|i| (i as f64 * 0.013).sin().abs())
        .collect();
    (net, obs)
}
