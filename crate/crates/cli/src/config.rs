//! Resolved run configuration: defaults, key=value file, flag overrides.
//!
//! The file format is plain `key = value` lines with `#` comments. Unknown
//! keys are rejected with their line number so typos cannot silently fall
//! back to defaults.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use skyslice_core::baselines::PapocForm;
use skyslice_core::{ArenaConfig, ChannelParams, OracleConfig, TrainConfig};

/// Everything one subcommand invocation needs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub arena: ArenaConfig,
    pub chan: ChannelParams,
    pub train: TrainConfig,
    pub oracle: OracleConfig,
    pub out_dir: PathBuf,
    /// Baseline selector; `None` sweeps all heuristics.
    pub policy: Option<String>,
    pub papoc_form: PapocForm,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            arena: ArenaConfig::default(),
            chan: ChannelParams::default(),
            train: TrainConfig::default(),
            oracle: OracleConfig::default(),
            out_dir: PathBuf::from("out"),
            policy: None,
            papoc_form: PapocForm::Aggregated,
        }
    }
}

/// Flag overrides collected by the argument parser.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub uavs: Option<usize>,
    pub episodes: Option<usize>,
    pub policy: Option<String>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Defaults, then file keys, then flags; validates the result.
    pub fn resolve(overrides: &Overrides) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &overrides.config {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config file {}", path.display()))?;
            cfg.apply_file(&text)
                .with_context(|| format!("in config file {}", path.display()))?;
        }
        if let Some(seed) = overrides.seed {
            cfg.arena.seed = seed;
        }
        if let Some(uavs) = overrides.uavs {
            cfg.arena.uav_count = uavs;
        }
        if let Some(episodes) = overrides.episodes {
            cfg.train.episodes = episodes;
        }
        if let Some(policy) = &overrides.policy {
            cfg.policy = Some(policy.clone());
        }
        if let Some(out) = &overrides.out {
            cfg.out_dir = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.arena.validate().map_err(|e| anyhow!("{e}"))?;
        self.chan.validate().map_err(|e| anyhow!("{e}"))?;
        self.train.validate().map_err(|e| anyhow!("{e}"))?;
        self.oracle.validate().map_err(|e| anyhow!("{e}"))?;
        if let Some(p) = &self.policy {
            const KNOWN: [&str; 5] = ["random", "rapoc", "papoc", "dqn", "oracle"];
            if !KNOWN.contains(&p.as_str()) {
                bail!("unknown policy {p:?}; expected one of {KNOWN:?}");
            }
        }
        Ok(())
    }

    fn apply_file(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value, got {line:?}", idx + 1))?;
            let key = key.trim();
            let value = value.trim();
            self.apply_kv(key, value)
                .with_context(|| format!("line {}", idx + 1))?;
        }
        Ok(())
    }

    fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            value
                .parse()
                .map_err(|e| anyhow!("bad value for {key}: {e}"))
        }
        match key {
            // Arena.
            "uavs" => self.arena.uav_count = num(key, value)?,
            "user_density" => self.arena.user_density_per_km2 = num(key, value)?,
            "uav_density" => self.arena.uav_density_per_km2 = num(key, value)?,
            "uav_height_m" => self.arena.uav_height_m = num(key, value)?,
            "step_m" => self.arena.step_m = num(key, value)?,
            "cluster_sigma_m" => self.arena.cluster_sigma_m = num(key, value)?,
            "p_embb" => self.arena.slice_probs[0] = num(key, value)?,
            "p_urllc" => self.arena.slice_probs[1] = num(key, value)?,
            "p_mmtc" => self.arena.slice_probs[2] = num(key, value)?,
            "dem_embb_bps" => self.arena.slice_demands_bps[0] = num(key, value)?,
            "dem_urllc_bps" => self.arena.slice_demands_bps[1] = num(key, value)?,
            "dem_mmtc_bps" => self.arena.slice_demands_bps[2] = num(key, value)?,
            "seed" => self.arena.seed = num(key, value)?,
            // Channel.
            "tx_power_w" => self.chan.tx_power_w = num(key, value)?,
            "nearfield_pathloss_db" => self.chan.nearfield_pathloss_db = num(key, value)?,
            "pathloss_exp" => self.chan.pathloss_exp = num(key, value)?,
            "noise_w" => self.chan.noise_w = num(key, value)?,
            "beamwidth_deg" => self.chan.beamwidth_deg = num(key, value)?,
            "mainlobe_gain" => self.chan.mainlobe_gain = num(key, value)?,
            "sidelobe_gain" => self.chan.sidelobe_gain = num(key, value)?,
            "assoc_threshold_db" => self.chan.assoc_threshold_db = num(key, value)?,
            // Training.
            "episodes" => self.train.episodes = num(key, value)?,
            "steps_per_episode" => self.train.steps_per_episode = num(key, value)?,
            "eval_episodes" => self.train.eval_episodes = num(key, value)?,
            "discount" => self.train.discount = num(key, value)?,
            "learning_rate" => self.train.learning_rate = num(key, value)?,
            "epsilon_start" => self.train.epsilon_start = num(key, value)?,
            "epsilon_decay" => self.train.epsilon_decay = num(key, value)?,
            "epsilon_min" => self.train.epsilon_min = num(key, value)?,
            "replay_capacity" => self.train.replay_capacity = num(key, value)?,
            "batch_size" => self.train.batch_size = num(key, value)?,
            "target_sync_steps" => self.train.target_sync_steps = num(key, value)?,
            "priority_exponent" => self.train.priority_exponent = num(key, value)?,
            "beta_start" => self.train.beta_start = num(key, value)?,
            "beta_end" => self.train.beta_end = num(key, value)?,
            "hidden_dim" => self.train.hidden_dim = num(key, value)?,
            // Oracle.
            "grid_points_per_axis" => self.oracle.grid_points_per_axis = num(key, value)?,
            "bw_step" => self.oracle.bw_step = num(key, value)?,
            "max_uavs_exact" => self.oracle.max_uavs_exact = num(key, value)?,
            "max_evaluations" => self.oracle.max_evaluations = num(key, value)?,
            // Driver.
            "out_dir" => self.out_dir = PathBuf::from(value),
            "policy" => self.policy = Some(value.to_string()),
            "papoc_form" => {
                self.papoc_form = match value {
                    "aggregated" => PapocForm::Aggregated,
                    "per_user" => PapocForm::PerUser,
                    other => bail!("bad value for papoc_form: {other:?} (aggregated|per_user)"),
                }
            }
            other => bail!("unknown key {other:?}"),
        }
        Ok(())
    }

    /// Deterministic echo of every resolved value, for the run manifest.
    pub fn manifest(&self) -> String {
        let mut s = String::new();
        let a = &self.arena;
        let c = &self.chan;
        let t = &self.train;
        let o = &self.oracle;
        let _ = writeln!(s, "uavs = {}", a.uav_count);
        let _ = writeln!(s, "user_density = {}", a.user_density_per_km2);
        let _ = writeln!(s, "uav_density = {}", a.uav_density_per_km2);
        let _ = writeln!(s, "uav_height_m = {}", a.uav_height_m);
        let _ = writeln!(s, "step_m = {}", a.step_m);
        let _ = writeln!(s, "cluster_sigma_m = {}", a.cluster_sigma_m);
        let _ = writeln!(s, "p_embb = {}", a.slice_probs[0]);
        let _ = writeln!(s, "p_urllc = {}", a.slice_probs[1]);
        let _ = writeln!(s, "p_mmtc = {}", a.slice_probs[2]);
        let _ = writeln!(s, "dem_embb_bps = {}", a.slice_demands_bps[0]);
        let _ = writeln!(s, "dem_urllc_bps = {}", a.slice_demands_bps[1]);
        let _ = writeln!(s, "dem_mmtc_bps = {}", a.slice_demands_bps[2]);
        let _ = writeln!(s, "seed = {}", a.seed);
        let _ = writeln!(s, "tx_power_w = {}", c.tx_power_w);
        let _ = writeln!(s, "nearfield_pathloss_db = {}", c.nearfield_pathloss_db);
        let _ = writeln!(s, "pathloss_exp = {}", c.pathloss_exp);
        let _ = writeln!(s, "noise_w = {}", c.noise_w);
        let _ = writeln!(s, "beamwidth_deg = {}", c.beamwidth_deg);
        let _ = writeln!(s, "mainlobe_gain = {}", c.mainlobe_gain);
        let _ = writeln!(s, "sidelobe_gain = {}", c.sidelobe_gain);
        let _ = writeln!(s, "assoc_threshold_db = {}", c.assoc_threshold_db);
        let _ = writeln!(s, "episodes = {}", t.episodes);
        let _ = writeln!(s, "steps_per_episode = {}", t.steps_per_episode);
        let _ = writeln!(s, "eval_episodes = {}", t.eval_episodes);
        let _ = writeln!(s, "discount = {}", t.discount);
        let _ = writeln!(s, "learning_rate = {}", t.learning_rate);
        let _ = writeln!(s, "epsilon_start = {}", t.epsilon_start);
        let _ = writeln!(s, "epsilon_decay = {}", t.epsilon_decay);
        let _ = writeln!(s, "epsilon_min = {}", t.epsilon_min);
        let _ = writeln!(s, "replay_capacity = {}", t.replay_capacity);
        let _ = writeln!(s, "batch_size = {}", t.batch_size);
        let _ = writeln!(s, "target_sync_steps = {}", t.target_sync_steps);
        let _ = writeln!(s, "priority_exponent = {}", t.priority_exponent);
        let _ = writeln!(s, "beta_start = {}", t.beta_start);
        let _ = writeln!(s, "beta_end = {}", t.beta_end);
        let _ = writeln!(s, "hidden_dim = {}", t.hidden_dim);
        let _ = writeln!(s, "grid_points_per_axis = {}", o.grid_points_per_axis);
        let _ = writeln!(s, "bw_step = {}", o.bw_step);
        let _ = writeln!(s, "max_uavs_exact = {}", o.max_uavs_exact);
        let _ = writeln!(s, "max_evaluations = {}", o.max_evaluations);
        let _ = writeln!(s, "out_dir = {}", self.out_dir.display());
        let _ = writeln!(
            s,
            "policy = {}",
            self.policy.as_deref().unwrap_or("(all)")
        );
        let _ = writeln!(
            s,
            "papoc_form = {}",
            match self.papoc_form {
                PapocForm::Aggregated => "aggregated",
                PapocForm::PerUser => "per_user",
            }
        );
        s
    }

    pub fn write_manifest(&self, command: &str) -> Result<()> {
        std::fs::create_dir_all(&self.out_dir)?;
        let path = self.out_dir.join(format!("manifest-{command}.txt"));
        std::fs::write(&path, self.manifest())
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    pub fn rewards_path(&self) -> PathBuf {
        self.out_dir.join("rewards.csv")
    }

    pub fn summary_path(&self) -> PathBuf {
        self.out_dir.join("summary.csv")
    }

    pub fn checkpoint_path(&self, uav: usize, role: &str) -> PathBuf {
        self.out_dir.join(format!("checkpoint_uav{uav}_{role}.txt"))
    }
}

/// Load checkpoints for a fleet from an output directory.
pub fn checkpoint_paths(out_dir: &Path, uavs: usize) -> Vec<(PathBuf, PathBuf)> {
    (0..uavs)
        .map(|b| {
            (
                out_dir.join(format!("checkpoint_uav{b}_alloc.txt")),
                out_dir.join(format!("checkpoint_uav{b}_place.txt")),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_published_parameters() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.train.discount, 0.95);
        assert_eq!(cfg.train.replay_capacity, 1000);
        assert_eq!(cfg.train.episodes, 5000);
        assert_eq!(cfg.train.steps_per_episode, 100);
        assert_eq!(cfg.train.eval_episodes, 200);
        assert_eq!(cfg.train.learning_rate, 1e-4);
        assert_eq!(cfg.train.epsilon_decay, 0.99995);
        assert_eq!(cfg.train.epsilon_min, 0.01);
        assert_eq!(cfg.train.batch_size, 32);
        assert_eq!(cfg.arena.user_density_per_km2, 100.0);
        assert_eq!(cfg.arena.uav_density_per_km2, 8.0);
        assert_eq!(cfg.arena.uav_height_m, 50.0);
        assert_eq!(cfg.arena.step_m, 25.0);
        assert_eq!(cfg.arena.slice_probs, [0.2, 0.1, 0.7]);
        assert_eq!(cfg.arena.slice_demands_bps, [5e6, 10e6, 0.5e6]);
        assert_eq!(cfg.chan.tx_power_w, 1.0);
        assert_eq!(cfg.chan.pathloss_exp, 2.1);
        assert_eq!(cfg.chan.nearfield_pathloss_db, -38.4);
        assert_eq!(cfg.chan.noise_w, 8e-13);
        assert_eq!(cfg.chan.beamwidth_deg, 30.0);
    }

    #[test]
    fn file_overrides_and_unknown_keys() {
        let mut cfg = RunConfig::default();
        cfg.apply_file("# comment\nuavs = 3\nepsilon_decay = 0.5\n").unwrap();
        assert_eq!(cfg.arena.uav_count, 3);
        assert_eq!(cfg.train.epsilon_decay, 0.5);

        let mut cfg = RunConfig::default();
        let err = cfg.apply_file("uavz = 3\n").unwrap_err();
        assert!(format!("{err:#}").contains("unknown key"));

        let mut cfg = RunConfig::default();
        let err = cfg.apply_file("uavs\n").unwrap_err();
        assert!(format!("{err:#}").contains("line 1"));
    }

    #[test]
    fn invalid_probabilities_are_named() {
        let mut cfg = RunConfig::default();
        cfg.apply_file("p_embb = 0.5\np_urllc = 0.6\n").unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(format!("{err:#}").contains("probabilities"));
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join("skyslice-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("a.conf");
        std::fs::write(&path, "seed = 1\nuavs = 1\n").unwrap();
        let cfg = RunConfig::resolve(&Overrides {
            config: Some(path),
            seed: Some(9),
            uavs: Some(5),
            ..Overrides::default()
        })
        .unwrap();
        assert_eq!(cfg.arena.seed, 9);
        assert_eq!(cfg.arena.uav_count, 5);
        assert_eq!(cfg.arena.user_count(), 63);
    }
}
