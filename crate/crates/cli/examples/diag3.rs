//! Distribution of greedy-eval episode rewards + same-cluster-parking check.
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
    let mut buckets = [0usize; 6]; // <500, <1000, <1500, <2000, <2500, rest
    let mut collapse_low = 0usize;
    let mut low = 0usize;
    for _ep in 0..200 {
        let mut world = spawn_episode(&arena, &mut rng);
        let centroids = cluster_centroids(&world);
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
        let idx = (reward / 500).min(5) as usize;
        buckets[idx] += 1;
        if reward < 1200 {
            low += 1;
            // Same-cluster parking: both UAVs nearest to the same centroid.
            let near = |b: usize| -> usize {
                let mut best = 0; let mut bd = f64::MAX;
                for (c, ctr) in centroids.iter().enumerate() {
                    let d = world.uavs[b].position.distance(*ctr);
                    if d < bd { bd = d; best = c; }
                }
                best
            };
            if near(0) == near(1) { collapse_low += 1; }
        }
    }
    println!("reward histogram (<500,<1000,<1500,<2000,<2500,>=2500): {buckets:?}");
    println!("episodes < 1200: {low}, of which both-UAVs-on-same-cluster at end: {collapse_low}");
}
