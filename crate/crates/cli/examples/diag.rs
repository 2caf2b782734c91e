//! Decompose learned-policy quality: swap each agent against its heuristic
//! counterpart and evaluate on the shared worlds.
use skyslice_core::baselines::{assign_centroids, papoc_split, PapocForm};
use skyslice_core::env::MoveAction;
use skyslice_core::learn::checkpoint::load_checkpoint;
use skyslice_core::learn::{
    build_alloc_obs, build_place_obs, evaluate_policy, ActionSpaces, PapocPolicy, Policy,
    TrainedPolicy, UavPolicies,
};
use skyslice_core::radio::{ChannelParams, LinkReport, McsTable};
use skyslice_core::slicing::BandwidthSplit;
use skyslice_core::{ArenaConfig, WorldState};

struct LearnedAllocCentroidPlace {
    nets: Vec<UavPolicies>,
    actions: ActionSpaces,
}
impl Policy for LearnedAllocCentroidPlace {
    fn name(&self) -> &str { "learned-alloc+centroid" }
    fn on_episode_start(&mut self, world: &mut WorldState, _c: &ChannelParams, _t: &McsTable) {
        let parks = assign_centroids(world);
        for (uav, park) in world.uavs.iter_mut().zip(parks) { uav.position = park; }
    }
    fn decide(&mut self, world: &WorldState, links: &[LinkReport], b: usize) -> (BandwidthSplit, MoveAction) {
        let obs = build_alloc_obs(world, links, b);
        let q = self.nets[b].alloc.forward(&obs);
        let mut best = 0; for (i, v) in q.iter().enumerate() { if *v > q[best] { best = i; } }
        (self.actions.alloc_splits[best], MoveAction::Hover)
    }
}

struct PapocAllocLearnedPlace {
    nets: Vec<UavPolicies>,
}
impl Policy for PapocAllocLearnedPlace {
    fn name(&self) -> &str { "papoc-alloc+learned-place" }
    fn decide(&mut self, world: &WorldState, links: &[LinkReport], b: usize) -> (BandwidthSplit, MoveAction) {
        let split = papoc_split(world, world.uavs[b].id, links, PapocForm::Aggregated);
        let obs = build_place_obs(world, b, &split);
        let q = self.nets[b].place.forward(&obs);
        let mut best = 0; for (i, v) in q.iter().enumerate() { if *v > q[best] { best = i; } }
        (split, MoveAction::ALL[best])
    }
}

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
    let eval = |p: &mut dyn Policy| {
        let r = evaluate_policy(p, &arena, &chan, table, 200, 100, 7);
        println!("{:28} mean {:7.1}  ci [{:7.1}, {:7.1}]", p.name(), r.mean, r.ci_low(), r.ci_high());
    };
    eval(&mut TrainedPolicy::new(nets.clone()));
    eval(&mut LearnedAllocCentroidPlace { nets: nets.clone(), actions: ActionSpaces::standard() });
    eval(&mut PapocAllocLearnedPlace { nets });
    eval(&mut PapocPolicy::default());
}
