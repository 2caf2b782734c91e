//! Correlate eval-episode reward with world geometry.
use skyslice_core::baselines::cluster_centroids;
use skyslice_core::env::{spawn_episode, step_world};
use skyslice_core::learn::checkpoint::load_checkpoint;
use skyslice_core::learn::{derive_seed, Policy, TrainedPolicy, UavPolicies};
use skyslice_core::radio::{associate, ChannelParams, McsTable};
use skyslice_core::slicing::evaluate;
use skyslice_core::ArenaConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let dir = std::path::PathBuf::from(std::env::args().nth(1).expect("dir"));
    let arena = ArenaConfig { uav_count: 2, seed: 7, ..ArenaConfig::default() };
    let chan = ChannelParams::default();
    let table = McsTable::builtin();
    let mut nets = Vec::new();
    for b in 0..2 {
        let (alloc, _) = load_checkpoint(&dir.join(format!("checkpoint_uav{b}_alloc.txt"))).unwrap();
        let (place, _) = load_checkpoint(&dir.join(format!("checkpoint_uav{b}_place.txt"))).unwrap();
        nets.push(UavPolicies { alloc, place });
    }
    let mut policy = TrainedPolicy::new(nets);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(7, 7));
    // Buckets over cluster separation and spawn distance.
    let mut by_sep: Vec<(f64, f64, u64)> = Vec::new();
    for _ep in 0..200 {
        let mut world = spawn_episode(&arena, &mut rng);
        let centroids = cluster_centroids(&world);
        let sep = centroids[0].distance(centroids[1]);
        let spawn_dist: f64 = world
            .uavs
            .iter()
            .map(|u| centroids.iter().map(|c| u.position.distance(*c)).fold(f64::MAX, f64::min))
            .sum::<f64>() / 2.0;
        let mut links = associate(&world, &chan, table);
        let mut reward = 0u64;
        for _ in 0..100 {
            let (mut splits, mut moves) = (Vec::new(), Vec::new());
            for b in 0..2 {
                let (s, m) = policy.decide(&world, &links, b);
                splits.push(s); moves.push(m);
            }
            world = step_world(&world, &moves, arena.step_m);
            links = associate(&world, &chan, table);
            reward += evaluate(&world, &splits, &links).total_reward() as u64;
        }
        by_sep.push((sep, spawn_dist, reward));
    }
    println!("cluster-separation buckets:");
    for (lo, hi) in [(0.0, 100.0), (100.0, 200.0), (200.0, 300.0), (300.0, 450.0)] {
        let sel: Vec<u64> = by_sep.iter().filter(|(s, _, _)| *s >= lo && *s < hi).map(|x| x.2).collect();
        if !sel.is_empty() {
            let mean = sel.iter().sum::<u64>() as f64 / sel.len() as f64;
            println!("  sep [{lo:3.0},{hi:3.0}): n={:3}  mean {mean:7.1}", sel.len());
        }
    }
    println!("mean-spawn-distance buckets:");
    for (lo, hi) in [(0.0, 100.0), (100.0, 175.0), (175.0, 250.0), (250.0, 600.0)] {
        let sel: Vec<u64> = by_sep.iter().filter(|(_, d, _)| *d >= lo && *d < hi).map(|x| x.2).collect();
        if !sel.is_empty() {
            let mean = sel.iter().sum::<u64>() as f64 / sel.len() as f64;
            println!("  spawn [{lo:3.0},{hi:3.0}): n={:3}  mean {mean:7.1}", sel.len());
        }
    }
}
