//! `skyslice` — experiment driver for the UAV slicing simulator.
//!
//! Subcommands: `train`, `eval`, `baseline`, `oracle`, `plotdata`.
//! Exit codes: 0 ok, 2 configuration error, 3 runtime error.

mod config;
mod metrics;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use skyslice_core::baselines::HeuristicKind;
use skyslice_core::learn::checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
use skyslice_core::learn::{
    self, derive_seed, evaluate_policy, train, PapocPolicy, Policy, RandomPolicy, RapocPolicy,
    TrainedPolicy, UavPolicies,
};
use skyslice_core::oracle::solve;
use skyslice_core::radio::McsTable;
use skyslice_core::EvalResult;

use config::{Overrides, RunConfig};
use metrics::{
    append_rewards, append_summary, emit_plot_data, ensure_rewards_file, fmt_sig9, MetricsRow,
    SummaryRow,
};

#[derive(Parser)]
#[command(
    name = "skyslice",
    about = "UAV base-station slicing simulator: training, baselines, exhaustive bound, plot data",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonFlags {
    /// Plain key=value configuration file; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (world generation, training, evaluation).
    #[arg(long)]
    seed: Option<u64>,
    /// Fleet size (also the number of user clusters).
    #[arg(long)]
    uavs: Option<usize>,
    /// Episode count: training episodes for `train`, evaluation episodes
    /// for `eval`, `baseline`, and `oracle`.
    #[arg(long)]
    episodes: Option<usize>,
    /// Policy selector (baseline: random|rapoc|papoc; default sweeps all).
    #[arg(long)]
    policy: Option<String>,
    /// Output directory for metrics, checkpoints, and plot data.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the dual-DQN fleet and checkpoint the resulting policies.
    Train(CommonFlags),
    /// Evaluate checkpointed policies over fresh worlds.
    Eval(CommonFlags),
    /// Run the heuristic baselines.
    Baseline(CommonFlags),
    /// Solve the discretized placement/allocation bound per episode.
    Oracle(CommonFlags),
    /// Derive fig4.csv / fig5.csv plot data from recorded metrics.
    Plotdata(CommonFlags),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, flags) = match &cli.command {
        Command::Train(f) => ("train", f),
        Command::Eval(f) => ("eval", f),
        Command::Baseline(f) => ("baseline", f),
        Command::Oracle(f) => ("oracle", f),
        Command::Plotdata(f) => ("plotdata", f),
    };

    let overrides = Overrides {
        config: flags.config.clone(),
        seed: flags.seed,
        uavs: flags.uavs,
        episodes: flags.episodes,
        policy: flags.policy.clone(),
        out: flags.out.clone(),
    };
    let cfg = match RunConfig::resolve(&overrides) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("configuration error: {err:#}");
            return ExitCode::from(2);
        }
    };

    let result = match name {
        "train" => cmd_train(&cfg),
        "eval" => cmd_eval(&cfg, flags.episodes),
        "baseline" => cmd_baseline(&cfg, flags.episodes),
        "oracle" => cmd_oracle(&cfg, flags.episodes),
        "plotdata" => emit_plot_data(&cfg.out_dir),
        _ => unreachable!(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(3)
        }
    }
}

fn run_id(command: &str, cfg: &RunConfig) -> String {
    format!("{command}-u{}-s{}", cfg.arena.uav_count, cfg.arena.seed)
}

/// Simulated milliseconds after `episodes` completed episodes (1 ms TTI per
/// decision step). Keeps the clock column reproducible across machines.
fn sim_clock_ms(cfg: &RunConfig, episode: usize) -> u64 {
    ((episode + 1) * cfg.train.steps_per_episode) as u64
}

fn cmd_train(cfg: &RunConfig) -> Result<()> {
    cfg.write_manifest("train")?;
    let table = McsTable::builtin();
    let out = train(&cfg.arena, &cfg.chan, &cfg.train, table).map_err(|e| anyhow!("{e}"))?;

    let id = run_id("train", cfg);
    let rows: Vec<MetricsRow> = out
        .reward_curve
        .iter()
        .zip(&out.epsilon_curve)
        .enumerate()
        .map(|(episode, (&reward, &epsilon))| MetricsRow {
            run_id: id.clone(),
            policy: "dqn".into(),
            fleet_size: cfg.arena.uav_count,
            episode,
            reward,
            epsilon,
            sim_clock_ms: sim_clock_ms(cfg, episode),
        })
        .collect();
    ensure_rewards_file(&cfg.rewards_path())?;
    append_rewards(&cfg.rewards_path(), &rows)?;

    for (b, nets) in out.policies.iter().enumerate() {
        let normalizers = format!(
            "agg_dem_bps={} rings={} sectors={} max_fleet={}",
            learn::AGG_DEMAND_NORMALIZER_BPS,
            learn::OBS_RING_EDGES_M.map(|r| r.to_string()).join(","),
            learn::OBS_SECTORS,
            learn::MAX_FLEET_FOR_OBS
        );
        save_checkpoint(
            &cfg.checkpoint_path(b, "alloc"),
            &nets.alloc,
            &CheckpointMeta {
                fleet_size: cfg.arena.uav_count,
                uav_id: b,
                role: "alloc".into(),
                action_space: learn::ALLOC_ACTION_SPACE_ID.into(),
                normalizers: normalizers.clone(),
            },
        )
        .map_err(|e| anyhow!("{e}"))?;
        save_checkpoint(
            &cfg.checkpoint_path(b, "place"),
            &nets.place,
            &CheckpointMeta {
                fleet_size: cfg.arena.uav_count,
                uav_id: b,
                role: "place".into(),
                action_space: learn::PLACE_ACTION_SPACE_ID.into(),
                normalizers,
            },
        )
        .map_err(|e| anyhow!("{e}"))?;
    }

    // Greedy post-training evaluation on the shared evaluation worlds.
    let mut policy = TrainedPolicy::new(out.policies);
    let res = eval_on_shared_worlds(cfg, &mut policy, cfg.train.eval_episodes);
    append_summary(&cfg.summary_path(), &[summary_row(cfg, &id, "dqn", &res)])?;
    eprintln!(
        "train: {} episodes, eval mean {} (95% ci {} .. {})",
        cfg.train.episodes,
        fmt_sig9(res.mean),
        fmt_sig9(res.ci_low()),
        fmt_sig9(res.ci_high())
    );
    Ok(())
}

fn eval_on_shared_worlds(
    cfg: &RunConfig,
    policy: &mut dyn Policy,
    episodes: usize,
) -> EvalResult {
    evaluate_policy(
        policy,
        &cfg.arena,
        &cfg.chan,
        McsTable::builtin(),
        episodes,
        cfg.train.steps_per_episode,
        cfg.arena.seed,
    )
}

fn summary_row(cfg: &RunConfig, id: &str, policy: &str, res: &EvalResult) -> SummaryRow {
    SummaryRow {
        run_id: id.to_string(),
        policy: policy.to_string(),
        fleet_size: cfg.arena.uav_count,
        episodes: res.episode_rewards.len(),
        mean_reward: res.mean,
        ci_low: res.ci_low(),
        ci_high: res.ci_high(),
    }
}

fn cmd_eval(cfg: &RunConfig, episodes_flag: Option<usize>) -> Result<()> {
    cfg.write_manifest("eval")?;
    let episodes = episodes_flag.unwrap_or(cfg.train.eval_episodes);
    let mut policies = Vec::new();
    for (b, (alloc_path, place_path)) in
        config::checkpoint_paths(&cfg.out_dir, cfg.arena.uav_count)
            .into_iter()
            .enumerate()
    {
        let (alloc, alloc_meta) = load_checkpoint(&alloc_path)
            .with_context(|| format!("loading {}", alloc_path.display()))?;
        let (place, place_meta) = load_checkpoint(&place_path)
            .with_context(|| format!("loading {}", place_path.display()))?;
        if alloc_meta.action_space != learn::ALLOC_ACTION_SPACE_ID
            || place_meta.action_space != learn::PLACE_ACTION_SPACE_ID
        {
            bail!(
                "checkpoint for uav {b} was written for action spaces ({}, {})",
                alloc_meta.action_space,
                place_meta.action_space
            );
        }
        if alloc_meta.fleet_size != cfg.arena.uav_count {
            bail!(
                "checkpoint fleet size {} does not match configured fleet {}",
                alloc_meta.fleet_size,
                cfg.arena.uav_count
            );
        }
        policies.push(UavPolicies { alloc, place });
    }
    let mut policy = TrainedPolicy::new(policies);
    let res = eval_on_shared_worlds(cfg, &mut policy, episodes);
    let id = run_id("eval", cfg);
    let rows = per_episode_rows(cfg, &id, "dqn", &res);
    ensure_rewards_file(&cfg.rewards_path())?;
    append_rewards(&cfg.rewards_path(), &rows)?;
    append_summary(&cfg.summary_path(), &[summary_row(cfg, &id, "dqn", &res)])?;
    eprintln!(
        "eval: mean {} (95% ci {} .. {})",
        fmt_sig9(res.mean),
        fmt_sig9(res.ci_low()),
        fmt_sig9(res.ci_high())
    );
    Ok(())
}

fn per_episode_rows(
    cfg: &RunConfig,
    id: &str,
    policy: &str,
    res: &EvalResult,
) -> Vec<MetricsRow> {
    res.episode_rewards
        .iter()
        .enumerate()
        .map(|(episode, &reward)| MetricsRow {
            run_id: id.to_string(),
            policy: policy.to_string(),
            fleet_size: cfg.arena.uav_count,
            episode,
            reward,
            epsilon: 0.0,
            sim_clock_ms: sim_clock_ms(cfg, episode),
        })
        .collect()
}

fn cmd_baseline(cfg: &RunConfig, episodes_flag: Option<usize>) -> Result<()> {
    cfg.write_manifest("baseline")?;
    let episodes = episodes_flag.unwrap_or(cfg.train.eval_episodes);
    let kinds: Vec<HeuristicKind> = match &cfg.policy {
        None => HeuristicKind::ALL.to_vec(),
        Some(name) => vec![name
            .parse()
            .map_err(|e: String| anyhow!("{e} (expected random|rapoc|papoc)"))?],
    };
    ensure_rewards_file(&cfg.rewards_path())?;
    for kind in kinds {
        let policy_seed = derive_seed(cfg.arena.seed, 0x0B_0000 + kind.name().len() as u64);
        let mut policy: Box<dyn Policy> = match kind {
            HeuristicKind::Random => Box::new(RandomPolicy::new(policy_seed)),
            HeuristicKind::Rapoc => Box::new(RapocPolicy::new(policy_seed)),
            HeuristicKind::Papoc => Box::new(PapocPolicy::new(cfg.papoc_form)),
        };
        let res = eval_on_shared_worlds(cfg, policy.as_mut(), episodes);
        let id = run_id("baseline", cfg);
        append_rewards(
            &cfg.rewards_path(),
            &per_episode_rows(cfg, &id, kind.name(), &res),
        )?;
        append_summary(
            &cfg.summary_path(),
            &[summary_row(cfg, &id, kind.name(), &res)],
        )?;
        eprintln!(
            "baseline {}: mean {} (95% ci {} .. {})",
            kind.name(),
            fmt_sig9(res.mean),
            fmt_sig9(res.ci_low()),
            fmt_sig9(res.ci_high())
        );
    }
    Ok(())
}

fn cmd_oracle(cfg: &RunConfig, episodes_flag: Option<usize>) -> Result<()> {
    cfg.write_manifest("oracle")?;
    let episodes = episodes_flag.unwrap_or(cfg.train.eval_episodes);
    let table = McsTable::builtin();

    // Solve each evaluation world once, logging the full solution; the
    // rollout-equivalent reward is objective x steps so the bound lands on
    // the same scale as episode rewards.
    let mut oracle_csv = String::from("episode,objective,evaluations,exact");
    for b in 0..cfg.arena.uav_count {
        oracle_csv.push_str(&format!(",x{b},y{b},em{b},ur{b},mm{b}"));
    }
    oracle_csv.push('\n');

    use rand::SeedableRng;
    let mut world_rng =
        rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(cfg.arena.seed, 7));
    let mut episode_rewards = Vec::with_capacity(episodes);
    for episode in 0..episodes {
        let world = skyslice_core::env::spawn_episode(&cfg.arena, &mut world_rng);
        let sol = solve(&world, &cfg.chan, table, &cfg.oracle).map_err(|e| anyhow!("{e}"))?;
        episode_rewards.push(sol.objective as u64 * cfg.train.steps_per_episode as u64);
        oracle_csv.push_str(&format!(
            "{episode},{},{},{}",
            sol.objective, sol.evaluations, sol.exact
        ));
        for (pos, split) in sol.positions.iter().zip(&sol.splits) {
            oracle_csv.push_str(&format!(
                ",{},{},{},{},{}",
                fmt_sig9(pos.x),
                fmt_sig9(pos.y),
                fmt_sig9(split.em()),
                fmt_sig9(split.ur()),
                fmt_sig9(split.mm())
            ));
        }
        oracle_csv.push('\n');
    }
    std::fs::write(cfg.out_dir.join("oracle.csv"), oracle_csv)?;

    let res = EvalResult::from_rewards(episode_rewards);
    let id = run_id("oracle", cfg);
    ensure_rewards_file(&cfg.rewards_path())?;
    append_rewards(
        &cfg.rewards_path(),
        &per_episode_rows(cfg, &id, "oracle", &res),
    )?;
    append_summary(&cfg.summary_path(), &[summary_row(cfg, &id, "oracle", &res)])?;
    eprintln!(
        "oracle: mean bound {} over {} worlds",
        fmt_sig9(res.mean),
        res.episode_rewards.len()
    );
    Ok(())
}
