//! Metrics persistence: rewards.csv, summary.csv, and the plot-data files.
//!
//! All numbers are written with fixed 9-significant-digit formatting so a
//! given (config, seed) pair reproduces byte-identical artifacts. Episode
//! rows carry simulated milliseconds (one TTI per decision step) in the
//! clock column for the same reason.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Fixed 9-significant-digit decimal text for floats.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x:.8e}")
    }
}

pub const REWARDS_HEADER: &str = "run_id,policy,fleet_size,episode,reward,epsilon,sim_clock_ms";
pub const SUMMARY_HEADER: &str =
    "run_id,policy,fleet_size,episodes,mean_reward,ci_low,ci_high";

/// One rewards.csv row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub run_id: String,
    pub policy: String,
    pub fleet_size: usize,
    pub episode: usize,
    pub reward: u64,
    pub epsilon: f64,
    pub sim_clock_ms: u64,
}

impl MetricsRow {
    fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.run_id,
            self.policy,
            self.fleet_size,
            self.episode,
            self.reward,
            fmt_sig9(self.epsilon),
            self.sim_clock_ms
        )
    }
}

/// Append rows to a CSV file, writing the header first when the file is new.
fn append_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let existing = std::fs::read_to_string(path).ok();
    let mut out = existing.unwrap_or_else(|| format!("{header}\n"));
    if !out.starts_with(header) {
        bail!(
            "{} exists with a different header; refusing to append",
            path.display()
        );
    }
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn append_rewards(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let lines: Vec<String> = rows.iter().map(MetricsRow::to_csv).collect();
    append_csv(path, REWARDS_HEADER, &lines)
}

/// Write an empty rewards file (header only) if absent.
pub fn ensure_rewards_file(path: &Path) -> Result<()> {
    append_rewards(path, &[])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub run_id: String,
    pub policy: String,
    pub fleet_size: usize,
    pub episodes: usize,
    pub mean_reward: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

pub fn append_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let lines: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{}",
                r.run_id,
                r.policy,
                r.fleet_size,
                r.episodes,
                fmt_sig9(r.mean_reward),
                fmt_sig9(r.ci_low),
                fmt_sig9(r.ci_high)
            )
        })
        .collect();
    append_csv(path, SUMMARY_HEADER, &lines)
}

fn parse_rewards(path: &Path) -> Result<Vec<MetricsRow>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != REWARDS_HEADER {
                bail!("{}: unexpected header {line:?}", path.display());
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            bail!("{} line {}: expected 7 fields", path.display(), i + 1);
        }
        rows.push(MetricsRow {
            run_id: f[0].to_string(),
            policy: f[1].to_string(),
            fleet_size: f[2].parse().context("fleet_size")?,
            episode: f[3].parse().context("episode")?,
            reward: f[4].parse().context("reward")?,
            epsilon: f[5].parse().context("epsilon")?,
            sim_clock_ms: f[6].parse().context("sim_clock_ms")?,
        });
    }
    Ok(rows)
}

fn parse_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != SUMMARY_HEADER {
                bail!("{}: unexpected header {line:?}", path.display());
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            bail!("{} line {}: expected 7 fields", path.display(), i + 1);
        }
        rows.push(SummaryRow {
            run_id: f[0].to_string(),
            policy: f[1].to_string(),
            fleet_size: f[2].parse().context("fleet_size")?,
            episodes: f[3].parse().context("episodes")?,
            mean_reward: f[4].parse().context("mean_reward")?,
            ci_low: f[5].parse().context("ci_low")?,
            ci_high: f[6].parse().context("ci_high")?,
        });
    }
    Ok(rows)
}

/// Trailing mean over a window of the last `window` values up to each index.
pub fn trailing_mean(series: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1);
    let mut out = Vec::with_capacity(series.len());
    let mut acc = 0.0;
    for i in 0..series.len() {
        acc += series[i];
        if i >= window {
            acc -= series[i - window];
        }
        let n = (i + 1).min(window);
        out.push(acc / n as f64);
    }
    out
}

/// Smoothing window for the reward-over-episodes plot.
pub const FIG4_WINDOW: usize = 50;

/// Build fig4.csv / fig5.csv (+ column sidecars) from a metrics directory.
///
/// fig4: episode, one smoothed-reward column per policy, and the average
/// exhaustive bound as a horizontal. fig5: fleet x policy summary bars.
pub fn emit_plot_data(dir: &Path) -> Result<()> {
    let rewards = parse_rewards(&dir.join("rewards.csv"))?;
    let summaries = parse_summary(&dir.join("summary.csv")).unwrap_or_default();

    // Last write wins for duplicated (policy, episode) pairs.
    let mut by_policy: BTreeMap<String, BTreeMap<usize, u64>> = BTreeMap::new();
    for r in &rewards {
        by_policy
            .entry(r.policy.clone())
            .or_default()
            .insert(r.episode, r.reward);
    }
    let curve_policies: Vec<String> = by_policy
        .keys()
        .filter(|p| p.as_str() != "oracle")
        .cloned()
        .collect();
    if curve_policies.is_empty() {
        bail!("rewards.csv holds no policy curves to plot");
    }

    let missing: Vec<&SummaryRow> = summaries
        .iter()
        .filter(|s| !by_policy.contains_key(&s.policy))
        .collect();
    for s in &missing {
        eprintln!(
            "note: policy {} appears in summary.csv but has no rewards.csv rows",
            s.policy
        );
    }

    let oracle_bound = summaries
        .iter()
        .filter(|s| s.policy == "oracle")
        .next_back()
        .map(|s| s.mean_reward);

    let max_episode = by_policy
        .values()
        .flat_map(|m| m.keys().copied())
        .max()
        .unwrap_or(0);

    let mut smoothed: BTreeMap<&str, BTreeMap<usize, f64>> = BTreeMap::new();
    for p in &curve_policies {
        let series = &by_policy[p];
        let episodes: Vec<usize> = series.keys().copied().collect();
        let values: Vec<f64> = series.values().map(|&r| r as f64).collect();
        let smooth = trailing_mean(&values, FIG4_WINDOW);
        smoothed.insert(p, episodes.into_iter().zip(smooth).collect());
    }

    let mut fig4 = String::new();
    let _ = write!(fig4, "episode");
    for p in &curve_policies {
        let _ = write!(fig4, ",{p}");
    }
    let _ = writeln!(fig4, ",oracle_bound");
    for ep in 0..=max_episode {
        let _ = write!(fig4, "{ep}");
        for p in &curve_policies {
            match smoothed[p.as_str()].get(&ep) {
                Some(v) => {
                    let _ = write!(fig4, ",{}", fmt_sig9(*v));
                }
                None => {
                    let _ = write!(fig4, ",");
                }
            }
        }
        match oracle_bound {
            Some(v) => {
                let _ = writeln!(fig4, ",{}", fmt_sig9(v));
            }
            None => {
                let _ = writeln!(fig4, ",");
            }
        }
    }
    std::fs::write(dir.join("fig4.csv"), fig4)?;
    std::fs::write(
        dir.join("fig4.columns.txt"),
        format!(
            "episode: episode index\n\
             <policy>: trailing {FIG4_WINDOW}-episode mean of the cumulative per-episode reward, one column per policy ({})\n\
             oracle_bound: mean exhaustive-bound reward, constant per row (empty when no oracle summary exists)\n",
            curve_policies.join(", ")
        ),
    )?;

    let mut fig5 = String::from("fleet_size,policy,mean_reward,ci_low,ci_high\n");
    let mut bars: Vec<&SummaryRow> = summaries.iter().collect();
    bars.sort_by(|a, b| {
        (a.fleet_size, a.policy.as_str(), &a.run_id)
            .cmp(&(b.fleet_size, b.policy.as_str(), &b.run_id))
    });
    for s in bars {
        let _ = writeln!(
            fig5,
            "{},{},{},{},{}",
            s.fleet_size,
            s.policy,
            fmt_sig9(s.mean_reward),
            fmt_sig9(s.ci_low),
            fmt_sig9(s.ci_high)
        );
    }
    std::fs::write(dir.join("fig5.csv"), fig5)?;
    std::fs::write(
        dir.join("fig5.columns.txt"),
        "fleet_size: number of UAVs\n\
         policy: controller name\n\
         mean_reward: mean cumulative episode reward over the evaluation episodes\n\
         ci_low, ci_high: bounds of the normal-approximation 95% confidence interval\n",
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9_formatting_is_stable() {
        assert_eq!(fmt_sig9(0.0), "0");
        assert_eq!(fmt_sig9(1.0), "1.00000000e0");
        assert_eq!(fmt_sig9(0.99995), "9.99950000e-1");
        assert_eq!(fmt_sig9(-12345.6789), "-1.23456789e4");
    }

    #[test]
    fn trailing_mean_examples() {
        // Constant series stays constant.
        let c = trailing_mean(&[5.0; 10], 4);
        assert!(c.iter().all(|&v| v == 5.0));
        // A single episode is its own mean.
        assert_eq!(trailing_mean(&[7.0], 50), vec![7.0]);
        // Independent recomputation on a synthetic series.
        let series: Vec<f64> = (0..20).map(|i| (i * i) as f64).collect();
        let got = trailing_mean(&series, 6);
        for i in 0..series.len() {
            let lo = i.saturating_sub(5);
            let want: f64 =
                series[lo..=i].iter().sum::<f64>() / (i - lo + 1) as f64;
            assert!((got[i] - want).abs() < 1e-9, "index {i}");
        }
    }
}
