//! Multi-agent dual deep-Q learner.
//!
//! Every UAV hosts two virtual agents: an allocation agent that picks a
//! bandwidth split from the discretized simplex, and a placement agent that
//! picks a compass move. The chosen split is part of the placement agent's
//! observation, so the two policies stay coupled. Both agents of a UAV
//! receive that UAV's satisfied-user count as reward and learn from their
//! own prioritized replay buffers.

pub mod checkpoint;
pub mod mlp;
pub mod replay;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baselines::{assign_centroids, papoc_split, random_policy, PapocForm};
use crate::env::{spawn_episode, step_world, ArenaConfig, MoveAction, WorldState};
use crate::error::{ConfigError, TrainError};
use crate::oracle::{solve, OracleConfig};
use crate::radio::{associate, ChannelParams, LinkReport, McsTable};
use crate::slicing::{enumerate_splits, evaluate, BandwidthSplit};
use mlp::{td_backward, Adam, Mlp, TdBatch};
use replay::{ReplayBuffer, Transition};

/// Simplex discretization step count for the allocation head (66 actions).
pub const SIMPLEX_DENOMINATOR: u32 = 10;
/// Aggregated-demand observations are divided by this (100 Mbps).
pub const AGG_DEMAND_NORMALIZER_BPS: f64 = 1.0e8;
/// Ring edges of the polar occupancy grid in meters; the last ring is open.
pub const OBS_RING_EDGES_M: [f64; 3] = [25.0, 75.0, 150.0];
pub const OBS_RINGS: usize = 4;
pub const OBS_SECTORS: usize = 8;
/// Peer slots in the placement observation are padded to this fleet size.
pub const MAX_FLEET_FOR_OBS: usize = 5;
/// Identifier written into allocation checkpoints.
pub const ALLOC_ACTION_SPACE_ID: &str = "alloc-simplex-d10";
/// Identifier written into placement checkpoints.
pub const PLACE_ACTION_SPACE_ID: &str = "move-compass-5";

/// The discrete action sets shared by the learner, the random baseline, and
/// the oracle projection.
#[derive(Debug, Clone)]
pub struct ActionSpaces {
    pub alloc_splits: Vec<BandwidthSplit>,
}

impl ActionSpaces {
    pub fn standard() -> Self {
        Self {
            alloc_splits: enumerate_splits(SIMPLEX_DENOMINATOR),
        }
    }

    pub fn alloc_count(&self) -> usize {
        self.alloc_splits.len()
    }

    pub fn move_count(&self) -> usize {
        MoveAction::ALL.len()
    }
}

/// Hyper-parameters of the learner.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub eval_episodes: usize,
    pub discount: f64,
    pub learning_rate: f64,
    pub epsilon_start: f64,
    pub epsilon_decay: f64,
    pub epsilon_min: f64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    /// Hard target-network sync period in gradient steps.
    pub target_sync_steps: u64,
    /// Priority exponent a of the replay buffer.
    pub priority_exponent: f64,
    /// Importance exponent schedule: linear beta_start -> beta_end.
    pub beta_start: f64,
    pub beta_end: f64,
    /// Width of both hidden layers.
    pub hidden_dim: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: 5000,
            steps_per_episode: 100,
            eval_episodes: 200,
            discount: 0.95,
            learning_rate: 1e-4,
            epsilon_start: 1.0,
            epsilon_decay: 0.99995,
            epsilon_min: 0.01,
            replay_capacity: 1000,
            batch_size: 32,
            target_sync_steps: 200,
            priority_exponent: 0.6,
            beta_start: 0.4,
            beta_end: 1.0,
            hidden_dim: 128,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(ConfigError::Invalid("discount must be in (0, 1)".into()));
        }
        if !(self.epsilon_min >= 0.0
            && self.epsilon_min <= self.epsilon_start
            && self.epsilon_start <= 1.0)
        {
            return Err(ConfigError::Invalid(
                "need 0 <= epsilon_min <= epsilon_start <= 1".into(),
            ));
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay <= 1.0) {
            return Err(ConfigError::Invalid("epsilon_decay must be in (0, 1]".into()));
        }
        if self.batch_size == 0 || self.replay_capacity < self.batch_size {
            return Err(ConfigError::Invalid(
                "replay_capacity must be >= batch_size >= 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0) {
            return Err(ConfigError::Invalid("learning_rate must be > 0".into()));
        }
        if self.steps_per_episode == 0 {
            return Err(ConfigError::Invalid("steps_per_episode must be >= 1".into()));
        }
        if self.hidden_dim == 0 {
            return Err(ConfigError::Invalid("hidden_dim must be >= 1".into()));
        }
        Ok(())
    }
}

/// Observation dimensions.
pub fn alloc_obs_dim() -> usize {
    3
}

pub fn place_obs_dim() -> usize {
    3 * OBS_RINGS * OBS_SECTORS + 2 * (MAX_FLEET_FOR_OBS - 1) + 3
}

/// Aggregated data-rate demand of the UAV's associated users per slice,
/// normalized.
pub fn build_alloc_obs(world: &WorldState, links: &[LinkReport], uav_id: usize) -> Vec<f64> {
    let mut agg = [0.0f64; 3];
    for u in &world.users {
        if links[u.id].serving_uav == Some(uav_id) {
            agg[u.slice.index()] += u.demand_bps;
        }
    }
    agg.iter().map(|d| d / AGG_DEMAND_NORMALIZER_BPS).collect()
}

/// Placement observation: per-slice polar occupancy of all users around the
/// UAV, relative positions of the other UAVs (padded to the maximum fleet),
/// and the split the allocation agent just chose.
pub fn build_place_obs(world: &WorldState, uav_idx: usize, split: &BandwidthSplit) -> Vec<f64> {
    let mut obs = vec![0.0f64; place_obs_dim()];
    let uav = &world.uavs[uav_idx];
    for u in &world.users {
        let dx = u.position.x - uav.position.x;
        let dy = u.position.y - uav.position.y;
        let dist = (dx * dx + dy * dy).sqrt();
        let ring = OBS_RING_EDGES_M
            .iter()
            .position(|&edge| dist < edge)
            .unwrap_or(OBS_RINGS - 1);
        let angle = dy.atan2(dx); // (-pi, pi]
        let sector = (((angle + std::f64::consts::PI) / (std::f64::consts::TAU / OBS_SECTORS as f64))
            as usize)
            .min(OBS_SECTORS - 1);
        let idx = u.slice.index() * OBS_RINGS * OBS_SECTORS + ring * OBS_SECTORS + sector;
        obs[idx] += 1.0;
    }
    let peer_base = 3 * OBS_RINGS * OBS_SECTORS;
    let mut slot = 0;
    for (i, peer) in world.uavs.iter().enumerate() {
        if i == uav_idx || slot >= MAX_FLEET_FOR_OBS - 1 {
            continue;
        }
        obs[peer_base + 2 * slot] = (peer.position.x - uav.position.x) / world.arena_side_m;
        obs[peer_base + 2 * slot + 1] = (peer.position.y - uav.position.y) / world.arena_side_m;
        slot += 1;
    }
    let split_base = peer_base + 2 * (MAX_FLEET_FOR_OBS - 1);
    obs[split_base] = split.em();
    obs[split_base + 1] = split.ur();
    obs[split_base + 2] = split.mm();
    obs
}

/// Epsilon-greedy action choice: explore uniformly with probability
/// `epsilon`, otherwise take the argmax Q (lowest index on ties).
pub fn select_action(net: &Mlp, obs: &[f64], epsilon: f64, rng: &mut ChaCha8Rng) -> usize {
    let n = net.output_dim();
    if rng.gen::<f64>() < epsilon {
        rng.gen_range(0..n)
    } else {
        argmax(&net.forward(obs))
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// One multiplicative epsilon decay, clamped at the floor. Applied once per
/// environment step.
pub fn epsilon_step(epsilon: f64, decay: f64, floor: f64) -> f64 {
    (epsilon * decay).max(floor)
}

/// Bellman target: bootstrap through nonterminal transitions only.
pub fn bellman_target(reward: f64, discount: f64, next_max_q: f64, terminal: bool) -> f64 {
    if terminal {
        reward
    } else {
        reward + discount * next_max_q
    }
}

/// One Q-network with its target copy, replay buffer, optimizer, and rng.
#[derive(Debug, Clone)]
pub struct DqnAgent {
    pub online: Mlp,
    pub target: Mlp,
    pub buffer: ReplayBuffer,
    opt: Adam,
    rng: ChaCha8Rng,
    updates: u64,
    label: String,
}

impl DqnAgent {
    pub fn new(dims: &[usize], capacity: usize, lr: f64, seed: u64, label: String) -> Self {
        let mut init_rng = ChaCha8Rng::seed_from_u64(seed);
        let online = Mlp::new(dims, &mut init_rng);
        let target = online.clone();
        let param_count = online.param_count();
        Self {
            online,
            target,
            buffer: ReplayBuffer::new(capacity),
            opt: Adam::new(param_count, lr),
            rng: ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x51CE)),
            updates: 0,
            label,
        }
    }

    pub fn select(&mut self, obs: &[f64], epsilon: f64) -> usize {
        select_action(&self.online, obs, epsilon, &mut self.rng)
    }

    /// One prioritized TD update, if the buffer holds a full batch. Returns
    /// the loss when a step was taken.
    pub fn train_step(
        &mut self,
        cfg: &TrainConfig,
        beta: f64,
        global_step: u64,
    ) -> Result<Option<f64>, TrainError> {
        let Some(sampled) = self.buffer.sample(
            cfg.batch_size,
            cfg.priority_exponent,
            beta,
            &mut self.rng,
        ) else {
            return Ok(None);
        };

        let n = sampled.indices.len();
        let in_dim = self.online.input_dim();
        let mut obs = Vec::with_capacity(n * in_dim);
        let mut next_obs = Vec::with_capacity(n * in_dim);
        let mut actions = Vec::with_capacity(n);
        let mut rewards = Vec::with_capacity(n);
        let mut terminals = Vec::with_capacity(n);
        for &i in &sampled.indices {
            let t = self.buffer.get(i);
            obs.extend_from_slice(&t.obs);
            next_obs.extend_from_slice(&t.next_obs);
            actions.push(t.action);
            rewards.push(t.reward);
            terminals.push(t.terminal);
        }

        let next_max = self.target.max_q_batch(&next_obs, n);
        let targets: Vec<f64> = (0..n)
            .map(|i| bellman_target(rewards[i], cfg.discount, next_max[i], terminals[i]))
            .collect();

        let batch = TdBatch {
            obs: &obs,
            actions: &actions,
            targets: &targets,
            weights: &sampled.weights,
            n,
        };
        let (grads, td_abs, loss) = td_backward(&self.online, &batch);
        if !loss.is_finite() {
            return Err(TrainError::NonFiniteLoss {
                step: global_step,
                agent: self.label.clone(),
                detail: format!(
                    "loss={loss}, max|td|={:?}",
                    td_abs.iter().cloned().fold(f64::NAN, f64::max)
                ),
            });
        }

        let mut params = self.online.params_flat();
        self.opt.step(&mut params, &grads);
        self.online.set_params_flat(&params);

        let new_priorities: Vec<f64> = td_abs.iter().map(|e| e + 1e-6).collect();
        self.buffer.update_priorities(&sampled.indices, &new_priorities);

        self.updates += 1;
        if self.updates % cfg.target_sync_steps == 0 {
            self.target = self.online.clone();
        }
        Ok(Some(loss))
    }
}

/// Final policy networks of one UAV.
#[derive(Debug, Clone)]
pub struct UavPolicies {
    pub alloc: Mlp,
    pub place: Mlp,
}

/// Everything a training run produces.
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub policies: Vec<UavPolicies>,
    /// Cumulative fleet reward per episode.
    pub reward_curve: Vec<u64>,
    /// Epsilon at the end of each episode.
    pub epsilon_curve: Vec<f64>,
}

struct UavAgents {
    alloc: DqnAgent,
    place: DqnAgent,
}

struct PendingStep {
    alloc_obs: Vec<f64>,
    alloc_action: usize,
    place_obs: Vec<f64>,
    place_action: usize,
    reward: f64,
}

/// Deterministic stream splitting for sub-generators (splitmix-style mix of
/// a master seed and a stream tag).
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn beta_at(cfg: &TrainConfig, global_step: u64, total_steps: u64) -> f64 {
    let frac = if total_steps == 0 {
        1.0
    } else {
        (global_step as f64 / total_steps as f64).min(1.0)
    };
    cfg.beta_start + (cfg.beta_end - cfg.beta_start) * frac
}

/// Train a fleet of dual-DQN agents from scratch.
///
/// Per timestep and per UAV: the allocation agent observes aggregated
/// demands and picks a split; the placement agent observes the occupancy
/// grid, the peers, and that split, and picks a move. All moves apply
/// simultaneously, association re-runs, the schedule is evaluated, and both
/// agents of each UAV store the transition with their UAV's reward. Both
/// nets train every step once their buffers hold a batch. Episodes never
/// end early; targets bootstrap through the time limit.
pub fn train(
    arena: &ArenaConfig,
    chan: &ChannelParams,
    cfg: &TrainConfig,
    table: &McsTable,
) -> Result<TrainOutput, TrainError> {
    arena.validate()?;
    chan.validate()?;
    cfg.validate()?;

    let n_uavs = arena.uav_count;
    let actions = ActionSpaces::standard();
    let alloc_dims = [alloc_obs_dim(), cfg.hidden_dim, cfg.hidden_dim, actions.alloc_count()];
    let place_dims = [place_obs_dim(), cfg.hidden_dim, cfg.hidden_dim, actions.move_count()];

    let mut env_rng = ChaCha8Rng::seed_from_u64(derive_seed(arena.seed, 0));
    let mut agents: Vec<UavAgents> = (0..n_uavs)
        .map(|b| UavAgents {
            alloc: DqnAgent::new(
                &alloc_dims,
                cfg.replay_capacity,
                cfg.learning_rate,
                derive_seed(arena.seed, 1000 + 2 * b as u64),
                format!("uav{b}/alloc"),
            ),
            place: DqnAgent::new(
                &place_dims,
                cfg.replay_capacity,
                cfg.learning_rate,
                derive_seed(arena.seed, 1000 + 2 * b as u64 + 1),
                format!("uav{b}/place"),
            ),
        })
        .collect();

    let total_steps = (cfg.episodes * cfg.steps_per_episode) as u64;
    let mut epsilon = cfg.epsilon_start;
    let mut global_step = 0u64;
    let mut reward_curve = Vec::with_capacity(cfg.episodes);
    let mut epsilon_curve = Vec::with_capacity(cfg.episodes);

    for _episode in 0..cfg.episodes {
        let mut world = spawn_episode(arena, &mut env_rng);
        let mut links = associate(&world, chan, table);
        let mut pending: Vec<Option<PendingStep>> = (0..n_uavs).map(|_| None).collect();
        let mut episode_reward = 0u64;

        for _t in 0..cfg.steps_per_episode {
            let mut splits = Vec::with_capacity(n_uavs);
            let mut moves = Vec::with_capacity(n_uavs);
            for b in 0..n_uavs {
                let alloc_obs = build_alloc_obs(&world, &links, b);
                let alloc_action = agents[b].alloc.select(&alloc_obs, epsilon);
                let split = actions.alloc_splits[alloc_action];
                let place_obs = build_place_obs(&world, b, &split);
                if let Some(p) = pending[b].take() {
                    agents[b].alloc.buffer.push(Transition {
                        obs: p.alloc_obs,
                        action: p.alloc_action,
                        reward: p.reward,
                        next_obs: alloc_obs.clone(),
                        terminal: false,
                    });
                    agents[b].place.buffer.push(Transition {
                        obs: p.place_obs,
                        action: p.place_action,
                        reward: p.reward,
                        next_obs: place_obs.clone(),
                        terminal: false,
                    });
                }
                let place_action = agents[b].place.select(&place_obs, epsilon);
                pending[b] = Some(PendingStep {
                    alloc_obs,
                    alloc_action,
                    place_obs,
                    place_action,
                    reward: 0.0,
                });
                splits.push(split);
                moves.push(MoveAction::ALL[place_action]);
            }

            world = step_world(&world, &moves, arena.step_m);
            links = associate(&world, chan, table);
            let outcome = evaluate(&world, &splits, &links);
            for b in 0..n_uavs {
                let r = outcome.per_uav_reward[b];
                pending[b].as_mut().expect("pending set above").reward = r as f64;
                episode_reward += r as u64;
            }

            global_step += 1;
            epsilon = epsilon_step(epsilon, cfg.epsilon_decay, cfg.epsilon_min);
            let beta = beta_at(cfg, global_step, total_steps);

            // Agents own disjoint state, so their updates run in parallel
            // without affecting determinism.
            agents
                .par_iter_mut()
                .flat_map(|ua| {
                    let UavAgents { alloc, place } = ua;
                    rayon::iter::once(alloc).chain(rayon::iter::once(place))
                })
                .map(|agent| agent.train_step(cfg, beta, global_step).map(|_| ()))
                .collect::<Result<Vec<()>, TrainError>>()?;
        }

        // Close the episode's open transitions with one more virtual
        // decision pass (nonterminal: the world does not actually end).
        for b in 0..n_uavs {
            let alloc_obs = build_alloc_obs(&world, &links, b);
            let alloc_action = agents[b].alloc.select(&alloc_obs, epsilon);
            let split = actions.alloc_splits[alloc_action];
            let place_obs = build_place_obs(&world, b, &split);
            if let Some(p) = pending[b].take() {
                agents[b].alloc.buffer.push(Transition {
                    obs: p.alloc_obs,
                    action: p.alloc_action,
                    reward: p.reward,
                    next_obs: alloc_obs,
                    terminal: false,
                });
                agents[b].place.buffer.push(Transition {
                    obs: p.place_obs,
                    action: p.place_action,
                    reward: p.reward,
                    next_obs: place_obs,
                    terminal: false,
                });
            }
        }

        reward_curve.push(episode_reward);
        epsilon_curve.push(epsilon);

        let episode = reward_curve.len();
        if episode % 500 == 0 {
            let window = &reward_curve[episode.saturating_sub(100)..];
            let trailing = window.iter().map(|&r| r as f64).sum::<f64>() / window.len() as f64;
            eprintln!(
                "train[{n_uavs} uav]: episode {episode}/{}, trailing-100 reward {trailing:.1}, epsilon {epsilon:.4}",
                cfg.episodes
            );
        }
    }

    let policies = agents
        .into_iter()
        .map(|ua| UavPolicies {
            alloc: ua.alloc.online,
            place: ua.place.online,
        })
        .collect();

    Ok(TrainOutput {
        policies,
        reward_curve,
        epsilon_curve,
    })
}

// ---------------------------------------------------------------------------
// Rollout policies and evaluation
// ---------------------------------------------------------------------------

/// A control law that can be rolled out on episodes.
pub trait Policy {
    fn name(&self) -> &str;

    /// Called once per episode before the first step; centroid heuristics
    /// teleport the fleet here.
    fn on_episode_start(&mut self, _world: &mut WorldState, _chan: &ChannelParams, _table: &McsTable) {
    }

    /// Split and move for one UAV at the current step.
    fn decide(
        &mut self,
        world: &WorldState,
        links: &[LinkReport],
        uav_idx: usize,
    ) -> (BandwidthSplit, MoveAction);
}

/// Uniformly random split and move.
pub struct RandomPolicy {
    rng: ChaCha8Rng,
    actions: ActionSpaces,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            actions: ActionSpaces::standard(),
        }
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> &str {
        "random"
    }

    fn decide(
        &mut self,
        _world: &WorldState,
        _links: &[LinkReport],
        _uav_idx: usize,
    ) -> (BandwidthSplit, MoveAction) {
        let (mv, split) = random_policy(&mut self.rng, &self.actions.alloc_splits);
        (split, mv)
    }
}

/// Random allocation, placement on centroids.
pub struct RapocPolicy {
    rng: ChaCha8Rng,
    actions: ActionSpaces,
}

impl RapocPolicy {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            actions: ActionSpaces::standard(),
        }
    }
}

impl Policy for RapocPolicy {
    fn name(&self) -> &str {
        "rapoc"
    }

    fn on_episode_start(&mut self, world: &mut WorldState, _chan: &ChannelParams, _table: &McsTable) {
        let parks = assign_centroids(world);
        for (uav, park) in world.uavs.iter_mut().zip(parks) {
            uav.position = park;
        }
    }

    fn decide(
        &mut self,
        _world: &WorldState,
        _links: &[LinkReport],
        _uav_idx: usize,
    ) -> (BandwidthSplit, MoveAction) {
        let splits = &self.actions.alloc_splits;
        let split = splits[self.rng.gen_range(0..splits.len())];
        (split, MoveAction::Hover)
    }
}

/// Proportional allocation, placement on centroids.
pub struct PapocPolicy {
    form: PapocForm,
}

impl PapocPolicy {
    pub fn new(form: PapocForm) -> Self {
        Self { form }
    }
}

impl Default for PapocPolicy {
    fn default() -> Self {
        Self::new(PapocForm::Aggregated)
    }
}

impl Policy for PapocPolicy {
    fn name(&self) -> &str {
        "papoc"
    }

    fn on_episode_start(&mut self, world: &mut WorldState, _chan: &ChannelParams, _table: &McsTable) {
        let parks = assign_centroids(world);
        for (uav, park) in world.uavs.iter_mut().zip(parks) {
            uav.position = park;
        }
    }

    fn decide(
        &mut self,
        world: &WorldState,
        links: &[LinkReport],
        uav_idx: usize,
    ) -> (BandwidthSplit, MoveAction) {
        let uav_id = world.uavs[uav_idx].id;
        (papoc_split(world, uav_id, links, self.form), MoveAction::Hover)
    }
}

/// Greedy rollout of trained networks.
pub struct TrainedPolicy {
    pub policies: Vec<UavPolicies>,
    actions: ActionSpaces,
}

impl TrainedPolicy {
    pub fn new(policies: Vec<UavPolicies>) -> Self {
        Self {
            policies,
            actions: ActionSpaces::standard(),
        }
    }
}

impl Policy for TrainedPolicy {
    fn name(&self) -> &str {
        "dqn"
    }

    fn decide(
        &mut self,
        world: &WorldState,
        links: &[LinkReport],
        uav_idx: usize,
    ) -> (BandwidthSplit, MoveAction) {
        let nets = &self.policies[uav_idx];
        let alloc_obs = build_alloc_obs(world, links, world.uavs[uav_idx].id);
        let split_idx = argmax(&nets.alloc.forward(&alloc_obs));
        let split = self.actions.alloc_splits[split_idx];
        let place_obs = build_place_obs(world, uav_idx, &split);
        let mv = MoveAction::ALL[argmax(&nets.place.forward(&place_obs))];
        (split, mv)
    }
}

/// Genie bound as a policy: solve the static program per episode, teleport,
/// hover with the optimal splits.
pub struct OracleBoundPolicy {
    config: OracleConfig,
    splits: Vec<BandwidthSplit>,
}

impl OracleBoundPolicy {
    pub fn new(config: OracleConfig) -> Self {
        Self {
            config,
            splits: Vec::new(),
        }
    }
}

impl Policy for OracleBoundPolicy {
    fn name(&self) -> &str {
        "oracle"
    }

    fn on_episode_start(&mut self, world: &mut WorldState, chan: &ChannelParams, table: &McsTable) {
        let sol = solve(world, chan, table, &self.config)
            .expect("oracle search space exceeds its budget");
        for (uav, &p) in world.uavs.iter_mut().zip(&sol.positions) {
            uav.position = p;
        }
        self.splits = sol.splits;
    }

    fn decide(
        &mut self,
        _world: &WorldState,
        _links: &[LinkReport],
        uav_idx: usize,
    ) -> (BandwidthSplit, MoveAction) {
        (self.splits[uav_idx], MoveAction::Hover)
    }
}

/// Roll a policy through one episode; returns the cumulative fleet reward.
pub fn run_episode(
    mut world: WorldState,
    policy: &mut dyn Policy,
    steps: usize,
    step_m: f64,
    chan: &ChannelParams,
    table: &McsTable,
) -> u64 {
    policy.on_episode_start(&mut world, chan, table);
    let mut links = associate(&world, chan, table);
    let mut total = 0u64;
    for _ in 0..steps {
        let n = world.uavs.len();
        let mut splits = Vec::with_capacity(n);
        let mut moves = Vec::with_capacity(n);
        for b in 0..n {
            let (split, mv) = policy.decide(&world, &links, b);
            splits.push(split);
            moves.push(mv);
        }
        world = step_world(&world, &moves, step_m);
        links = associate(&world, chan, table);
        total += evaluate(&world, &splits, &links).total_reward() as u64;
    }
    total
}

/// Mean episode reward with a normal-approximation 95% interval.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub mean: f64,
    pub ci_half_width: f64,
    pub episode_rewards: Vec<u64>,
}

impl EvalResult {
    pub fn ci_low(&self) -> f64 {
        self.mean - self.ci_half_width
    }

    pub fn ci_high(&self) -> f64 {
        self.mean + self.ci_half_width
    }

    /// Normal-approximation summary of a set of episode rewards.
    pub fn from_rewards(episode_rewards: Vec<u64>) -> Self {
        let n = episode_rewards.len();
        if n == 0 {
            return Self {
                mean: 0.0,
                ci_half_width: 0.0,
                episode_rewards,
            };
        }
        let mean = episode_rewards.iter().map(|&r| r as f64).sum::<f64>() / n as f64;
        let ci_half_width = if n < 2 {
            0.0
        } else {
            let var = episode_rewards
                .iter()
                .map(|&r| (r as f64 - mean).powi(2))
                .sum::<f64>()
                / (n - 1) as f64;
            1.96 * (var / n as f64).sqrt()
        };
        Self {
            mean,
            ci_half_width,
            episode_rewards,
        }
    }
}

/// Greedy evaluation over freshly randomized worlds. The world sequence
/// depends only on `eval_seed`, so different policies evaluated with the
/// same seed see the same episodes.
pub fn evaluate_policy(
    policy: &mut dyn Policy,
    arena: &ArenaConfig,
    chan: &ChannelParams,
    table: &McsTable,
    episodes: usize,
    steps_per_episode: usize,
    eval_seed: u64,
) -> EvalResult {
    let mut world_rng = ChaCha8Rng::seed_from_u64(derive_seed(eval_seed, 7));
    let rewards: Vec<u64> = (0..episodes)
        .map(|_| {
            let world = spawn_episode(arena, &mut world_rng);
            run_episode(world, policy, steps_per_episode, arena.step_m, chan, table)
        })
        .collect();
    EvalResult::from_rewards(rewards)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{SliceKind, UavState, UserEquipment, Vec2};

    fn tiny_train_config() -> TrainConfig {
        TrainConfig {
            episodes: 3,
            steps_per_episode: 10,
            eval_episodes: 4,
            hidden_dim: 8,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn epsilon_schedule_examples() {
        assert_eq!(epsilon_step(1.0, 0.99995, 0.01), 0.99995);
        assert_eq!(epsilon_step(0.01, 0.99995, 0.01), 0.01);
        assert_eq!(epsilon_step(0.0100004, 0.99995, 0.01), 0.01);
    }

    #[test]
    fn epsilon_sequence_non_increasing_with_floor() {
        let mut eps = 1.0;
        let mut prev = eps;
        for _ in 0..200_000 {
            eps = epsilon_step(eps, 0.99995, 0.01);
            assert!(eps <= prev && eps >= 0.01);
            prev = eps;
        }
        assert_eq!(eps, 0.01);
    }

    #[test]
    fn bellman_target_examples() {
        assert_eq!(bellman_target(5.0, 0.95, 10.0, false), 14.5);
        assert_eq!(bellman_target(3.0, 0.95, 99.0, true), 3.0);
    }

    #[test]
    fn action_selection_greedy_and_tie_break() {
        let mut net = Mlp::zeros(&[1, 3]);
        // One input; weights choose outputs q = (w0, w1, w2) * x + b.
        net.set_params_flat(&[1.0, 3.0, 2.0, 0.0, 0.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(select_action(&net, &[1.0], 0.0, &mut rng), 1);
        net.set_params_flat(&[2.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(select_action(&net, &[1.0], 0.0, &mut rng), 0);
    }

    #[test]
    fn full_exploration_is_uniform() {
        let net = Mlp::zeros(&[1, 5]);
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let n = 50_000;
        let mut counts = [0usize; 5];
        for _ in 0..n {
            counts[select_action(&net, &[0.5], 1.0, &mut rng)] += 1;
        }
        for &c in &counts {
            let f = c as f64 / n as f64;
            assert!((f - 0.2).abs() < 0.01, "freq {f}");
        }
    }

    #[test]
    fn observation_dimensions_and_contents() {
        assert_eq!(place_obs_dim(), 107);
        let world = WorldState {
            arena_side_m: 500.0,
            users: vec![
                UserEquipment {
                    id: 0,
                    position: Vec2::new(110.0, 100.0),
                    slice: SliceKind::Embb,
                    demand_bps: 5e6,
                    cluster: 0,
                },
                UserEquipment {
                    id: 1,
                    position: Vec2::new(100.0, 300.0),
                    slice: SliceKind::Mmtc,
                    demand_bps: 0.5e6,
                    cluster: 0,
                },
            ],
            cluster_centers: vec![Vec2::new(0.0, 0.0), Vec2::new(0.0, 0.0)],
            uavs: vec![
                UavState {
                    id: 0,
                    position: Vec2::new(100.0, 100.0),
                    height_m: 50.0,
                },
                UavState {
                    id: 1,
                    position: Vec2::new(450.0, 450.0),
                    height_m: 50.0,
                },
            ],
            timestep: 0,
        };
        let links = associate(&world, &ChannelParams::default(), McsTable::builtin());
        // User 0 is 10 m east of UAV 0 and inside its cone; user 1 is 200 m
        // north (sidelobe but still associated to UAV 0 over the much
        // farther UAV 1).
        let obs = build_alloc_obs(&world, &links, 0);
        assert_eq!(obs.len(), 3);
        assert!((obs[0] - 5e6 / AGG_DEMAND_NORMALIZER_BPS).abs() < 1e-12);
        assert!((obs[2] - 0.5e6 / AGG_DEMAND_NORMALIZER_BPS).abs() < 1e-12);

        let split = BandwidthSplit::new(0.5, 0.3, 0.2).unwrap();
        let pobs = build_place_obs(&world, 0, &split);
        assert_eq!(pobs.len(), 107);
        let occupancy_sum: f64 = pobs[..96].iter().sum();
        assert_eq!(occupancy_sum, 2.0);
        // User 0 (eMBB): distance 10 -> ring 0; angle 0 -> sector 4 (east).
        assert_eq!(pobs[4], 1.0);
        // User 1 (mMTC): distance 200 -> outer ring; angle pi/2 -> sector 6.
        assert_eq!(pobs[2 * 32 + 3 * 8 + 6], 1.0);
        // Peer slot 0 holds UAV 1 relative offset / side.
        assert!((pobs[96] - 0.7).abs() < 1e-12);
        assert!((pobs[97] - 0.7).abs() < 1e-12);
        // Remaining peer slots stay zero-padded.
        assert_eq!(&pobs[98..104], &[0.0; 6]);
        assert_eq!(&pobs[104..107], &[0.5, 0.3, 0.2]);
    }

    #[test]
    fn occupancy_counts_bounded_by_user_count() {
        use rand::SeedableRng;
        let arena = ArenaConfig {
            uav_count: 3,
            ..ArenaConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let world = spawn_episode(&arena, &mut rng);
        let split = BandwidthSplit::uniform();
        for b in 0..3 {
            let obs = build_place_obs(&world, b, &split);
            let total: f64 = obs[..96].iter().sum();
            assert_eq!(total, world.users.len() as f64);
            assert!(obs[..96].iter().all(|&c| c >= 0.0));
        }
    }

    #[test]
    fn td_update_priority_reflects_bellman_target() {
        // Online net outputs all zeros, target net has bias 10 on one head:
        // priority must become |r + gamma*10 - 0| + 1e-6 = 14.5 + 1e-6.
        let cfg = TrainConfig {
            batch_size: 1,
            learning_rate: 1e-9,
            ..TrainConfig::default()
        };
        let mut agent = DqnAgent::new(&[1, 2], 8, cfg.learning_rate, 1, "test".into());
        agent.online = Mlp::zeros(&[1, 2]);
        let mut target = Mlp::zeros(&[1, 2]);
        // params: w(2x1) then b(2)
        target.set_params_flat(&[0.0, 0.0, 10.0, 0.0]);
        agent.target = target;
        agent.buffer.push(Transition {
            obs: vec![0.0],
            action: 0,
            reward: 5.0,
            next_obs: vec![0.0],
            terminal: false,
        });
        agent.train_step(&cfg, 1.0, 0).unwrap();
        assert!((agent.buffer.priority(0) - (14.5 + 1e-6)).abs() < 1e-9);

        // Terminal transition ignores the bootstrap.
        let mut agent2 = DqnAgent::new(&[1, 2], 8, cfg.learning_rate, 1, "test".into());
        agent2.online = Mlp::zeros(&[1, 2]);
        agent2.target = agent2.online.clone();
        agent2.buffer.push(Transition {
            obs: vec![0.0],
            action: 1,
            reward: 3.0,
            next_obs: vec![0.0],
            terminal: true,
        });
        agent2.train_step(&cfg, 1.0, 0).unwrap();
        assert!((agent2.buffer.priority(0) - (3.0 + 1e-6)).abs() < 1e-9);
    }

    #[test]
    fn training_is_seed_deterministic() {
        let arena = ArenaConfig {
            uav_count: 1,
            seed: 11,
            ..ArenaConfig::default()
        };
        let chan = ChannelParams::default();
        let cfg = tiny_train_config();
        let a = train(&arena, &chan, &cfg, McsTable::builtin()).unwrap();
        let b = train(&arena, &chan, &cfg, McsTable::builtin()).unwrap();
        assert_eq!(a.reward_curve, b.reward_curve);
        assert_eq!(a.epsilon_curve, b.epsilon_curve);
        for (x, y) in a.policies.iter().zip(&b.policies) {
            assert_eq!(x.alloc.params_flat(), y.alloc.params_flat());
            assert_eq!(x.place.params_flat(), y.place.params_flat());
        }
        assert!(a.policies.iter().all(|p| p.alloc.all_finite() && p.place.all_finite()));
    }

    #[test]
    fn greedy_replay_of_a_policy_is_deterministic() {
        let arena = ArenaConfig {
            uav_count: 1,
            seed: 13,
            ..ArenaConfig::default()
        };
        let chan = ChannelParams::default();
        let out = train(&arena, &chan, &tiny_train_config(), McsTable::builtin()).unwrap();
        let mut p1 = TrainedPolicy::new(out.policies.clone());
        let mut p2 = TrainedPolicy::new(out.policies);
        let r1 = evaluate_policy(&mut p1, &arena, &chan, McsTable::builtin(), 5, 10, 99);
        let r2 = evaluate_policy(&mut p2, &arena, &chan, McsTable::builtin(), 5, 10, 99);
        assert_eq!(r1.episode_rewards, r2.episode_rewards);
        assert_eq!(r1.mean, r2.mean);
    }

    #[test]
    fn eval_on_empty_worlds_is_zero_with_zero_ci() {
        let arena = ArenaConfig {
            uav_count: 1,
            user_density_per_km2: 0.01,
            ..ArenaConfig::default()
        };
        assert_eq!(arena.user_count(), 0);
        let chan = ChannelParams::default();
        let mut policy = RandomPolicy::new(5);
        let res = evaluate_policy(&mut policy, &arena, &chan, McsTable::builtin(), 6, 10, 3);
        assert_eq!(res.mean, 0.0);
        assert_eq!(res.ci_half_width, 0.0);
    }

    #[test]
    fn oracle_bound_policy_dominates_heuristics_on_shared_worlds() {
        let arena = ArenaConfig {
            uav_count: 2,
            ..ArenaConfig::default()
        };
        let chan = ChannelParams::default();
        let table = McsTable::builtin();
        // Coarse search keeps the per-episode solve cheap.
        let cfg = OracleConfig {
            grid_points_per_axis: 5,
            bw_step: 0.25,
            ..OracleConfig::default()
        };
        let episodes = 4;
        let mut bound = OracleBoundPolicy::new(cfg);
        let bound_res = evaluate_policy(&mut bound, &arena, &chan, table, episodes, 10, 31);
        for (name, mut policy) in [
            ("random", Box::new(RandomPolicy::new(1)) as Box<dyn Policy>),
            ("rapoc", Box::new(RapocPolicy::new(2))),
            ("papoc", Box::new(PapocPolicy::default())),
        ] {
            let res = evaluate_policy(policy.as_mut(), &arena, &chan, table, episodes, 10, 31);
            assert!(
                bound_res.mean >= res.mean,
                "bound {} below {name} {}",
                bound_res.mean,
                res.mean
            );
        }
    }

    #[test]
    fn target_network_stays_frozen_between_syncs() {
        let cfg = TrainConfig {
            batch_size: 2,
            target_sync_steps: 3,
            learning_rate: 0.05,
            ..TrainConfig::default()
        };
        let mut agent = DqnAgent::new(&[2, 4, 3], 16, cfg.learning_rate, 9, "sync".into());
        for i in 0..4 {
            agent.buffer.push(Transition {
                obs: vec![i as f64, 1.0],
                action: i % 3,
                reward: 1.0,
                next_obs: vec![i as f64 + 1.0, 1.0],
                terminal: false,
            });
        }
        let frozen = agent.target.params_flat();
        agent.train_step(&cfg, 1.0, 0).unwrap();
        agent.train_step(&cfg, 1.0, 1).unwrap();
        // Online moved, target did not.
        assert_ne!(agent.online.params_flat(), frozen);
        assert_eq!(agent.target.params_flat(), frozen);
        // The third update crosses the sync period: target snaps to online.
        agent.train_step(&cfg, 1.0, 2).unwrap();
        assert_eq!(agent.target.params_flat(), agent.online.params_flat());
    }

    #[test]
    fn rapoc_and_papoc_share_trajectories() {
        let arena = ArenaConfig {
            uav_count: 2,
            ..ArenaConfig::default()
        };
        let chan = ChannelParams::default();
        let table = McsTable::builtin();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let world = spawn_episode(&arena, &mut rng);

        let mut rapoc = RapocPolicy::new(1);
        let mut papoc = PapocPolicy::default();
        let mut wa = world.clone();
        let mut wb = world.clone();
        rapoc.on_episode_start(&mut wa, &chan, table);
        papoc.on_episode_start(&mut wb, &chan, table);
        for _ in 0..5 {
            let la = associate(&wa, &chan, table);
            let lb = associate(&wb, &chan, table);
            let ma: Vec<MoveAction> = (0..2).map(|b| rapoc.decide(&wa, &la, b).1).collect();
            let mb: Vec<MoveAction> = (0..2).map(|b| papoc.decide(&wb, &lb, b).1).collect();
            wa = step_world(&wa, &ma, arena.step_m);
            wb = step_world(&wb, &mb, arena.step_m);
            for (ua, ub) in wa.uavs.iter().zip(&wb.uavs) {
                assert_eq!(ua.position, ub.position);
            }
        }
    }

    #[test]
    fn pure_exploration_matches_random_baseline_level() {
        // With epsilon frozen at 1 the learner acts exactly like the random
        // policy; mean episode rewards must agree within sampling noise.
        let arena = ArenaConfig {
            uav_count: 1,
            seed: 23,
            ..ArenaConfig::default()
        };
        let chan = ChannelParams::default();
        let cfg = TrainConfig {
            episodes: 60,
            steps_per_episode: 20,
            epsilon_start: 1.0,
            epsilon_decay: 1.0, // frozen
            epsilon_min: 1.0,
            hidden_dim: 8,
            ..TrainConfig::default()
        };
        let out = train(&arena, &chan, &cfg, McsTable::builtin()).unwrap();
        let learner_mean =
            out.reward_curve.iter().map(|&r| r as f64).sum::<f64>() / out.reward_curve.len() as f64;

        let mut random = RandomPolicy::new(41);
        let res = evaluate_policy(&mut random, &arena, &chan, McsTable::builtin(), 60, 20, 23);
        let se = |xs: &[u64], mean: f64| {
            let n = xs.len() as f64;
            let var = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        };
        let se_total = se(&out.reward_curve, learner_mean) + se(&res.episode_rewards, res.mean);
        assert!(
            (learner_mean - res.mean).abs() < 2.5 * se_total + 1e-9,
            "explore-only learner {learner_mean} vs random {res:?}"
        );
    }
}
