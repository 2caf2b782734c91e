//! Watch the learned placement behavior: distance to the nearest centroid
//! and the move mix over a few rollouts.
use skyslice_core::baselines::cluster_centroids;
use skyslice_core::env::{spawn_episode, step_world, MoveAction};
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
    let mut move_counts = [0usize; 5];
    for ep in 0..6 {
        let mut world = spawn_episode(&arena, &mut rng);
        let centroids = cluster_centroids(&world);
        let mut links = associate(&world, &chan, table);
        let mut dist_sum = [0.0f64; 2];
        let mut reward = 0u64;
        let mut tail_dist = [0.0f64; 2];
        for t in 0..100 {
            let mut splits = Vec::new();
            let mut moves = Vec::new();
            for b in 0..2 {
                let (s, m) = policy.decide(&world, &links, b);
                splits.push(s);
                moves.push(m);
                move_counts[m.index()] += 1;
            }
            world = step_world(&world, &moves, arena.step_m);
            links = associate(&world, &chan, table);
            reward += evaluate(&world, &splits, &links).total_reward() as u64;
            for b in 0..2 {
                let d = centroids.iter().map(|c| world.uavs[b].position.distance(*c)).fold(f64::MAX, f64::min);
                dist_sum[b] += d;
                if t >= 80 { tail_dist[b] += d / 20.0; }
            }
        }
        println!(
            "ep {ep}: reward {reward:5}  mean-dist ({:5.1}, {:5.1})  last20-dist ({:5.1}, {:5.1})",
            dist_sum[0] / 100.0, dist_sum[1] / 100.0, tail_dist[0], tail_dist[1]
        );
    }
    let total: usize = move_counts.iter().sum();
    println!("moves: straight {:.2} left {:.2} right {:.2} back {:.2} hover {:.2}",
        move_counts[0] as f64 / total as f64,
        move_counts[1] as f64 / total as f64,
        move_counts[2] as f64 / total as f64,
        move_counts[3] as f64 / total as f64,
        move_counts[4] as f64 / total as f64);
}
