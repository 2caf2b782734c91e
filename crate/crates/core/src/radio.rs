//! Air-to-ground channel: antenna gain, SINR, association, MCS, data rate.
//!
//! The channel is always line of sight. A UAV's down-tilted antenna is a
//! two-level cone: full gain inside the half-angle, a small constant sidelobe
//! outside. Every UAV transmits on the full band, so all other UAVs interfere
//! on every PRB.

use std::sync::OnceLock;

use crate::env::{UavState, Vec2, WorldState};
use crate::error::ConfigError;

/// Symbols carried by one PRB: 12 subcarriers x 14 symbols.
pub const SYMBOLS_PER_PRB: f64 = 168.0;
/// PRB duration in seconds (one TTI).
pub const TTI_S: f64 = 0.001;
/// PRBs scheduled per TTI on the 20 MHz carrier.
pub const TOTAL_PRBS: u32 = 100;

/// Physical-layer constants.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    /// Transmit power p in watts.
    pub tx_power_w: f64,
    /// Near-field pathloss c in dB (converted to linear inside the SINR).
    pub nearfield_pathloss_db: f64,
    /// Pathloss exponent alpha.
    pub pathloss_exp: f64,
    /// Noise power sigma^2 in watts.
    pub noise_w: f64,
    /// Cone half-angle eta in degrees.
    pub beamwidth_deg: f64,
    /// Gain inside the cone.
    pub mainlobe_gain: f64,
    /// Gain outside the cone.
    pub sidelobe_gain: f64,
    /// Association threshold in dB.
    pub assoc_threshold_db: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            tx_power_w: 1.0,
            nearfield_pathloss_db: -38.4,
            pathloss_exp: 2.1,
            noise_w: 8e-13,
            beamwidth_deg: 30.0,
            mainlobe_gain: 1.0,
            sidelobe_gain: 0.01,
            assoc_threshold_db: 5.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.tx_power_w > 0.0) {
            return Err(ConfigError::Invalid("tx_power_w must be > 0".into()));
        }
        if !(self.noise_w > 0.0) {
            return Err(ConfigError::Invalid("noise_w must be > 0".into()));
        }
        if !(self.pathloss_exp > 0.0) {
            return Err(ConfigError::Invalid("pathloss_exp must be > 0".into()));
        }
        if !(self.sidelobe_gain > 0.0 && self.sidelobe_gain < self.mainlobe_gain) {
            return Err(ConfigError::Invalid(
                "need 0 < sidelobe_gain < mainlobe_gain".into(),
            ));
        }
        Ok(())
    }
}

/// One row of the SINR-to-MCS lookup; rows partition (-inf, +inf) as
/// half-open intervals [low, high).
#[derive(Debug, Clone, PartialEq)]
pub struct McsEntry {
    pub sinr_low_db: f64,
    pub sinr_high_db: f64,
    pub bits_per_symbol: u32,
    pub code_rate: f64,
}

/// The full lookup table, shipped as a versioned data file so it can be
/// diffed against its source.
#[derive(Debug, Clone, PartialEq)]
pub struct McsTable {
    rows: Vec<McsEntry>,
}

/// Raw contents of the shipped table file.
pub const MCS_TABLE_CSV: &str = include_str!("../data/mcs_table.csv");

impl McsTable {
    /// The built-in table parsed from the shipped data file.
    pub fn builtin() -> &'static McsTable {
        static TABLE: OnceLock<McsTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            McsTable::parse(MCS_TABLE_CSV).expect("shipped MCS table must parse")
        })
    }

    /// Parse a table from CSV text (`low,high,bits_per_symbol,code_rate`,
    /// `-inf`/`inf` bounds, `#` comments).
    pub fn parse(text: &str) -> Result<McsTable, ConfigError> {
        let mut rows = Vec::new();
        let mut saw_header = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !saw_header {
                saw_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(ConfigError::Table {
                    line: i + 1,
                    reason: format!("expected 4 fields, got {}", fields.len()),
                });
            }
            let bound = |s: &str| -> Result<f64, ConfigError> {
                match s {
                    "-inf" => Ok(f64::NEG_INFINITY),
                    "inf" => Ok(f64::INFINITY),
                    _ => s.parse().map_err(|e| ConfigError::Table {
                        line: i + 1,
                        reason: format!("bad bound {s:?}: {e}"),
                    }),
                }
            };
            rows.push(McsEntry {
                sinr_low_db: bound(fields[0])?,
                sinr_high_db: bound(fields[1])?,
                bits_per_symbol: fields[2].parse().map_err(|e| ConfigError::Table {
                    line: i + 1,
                    reason: format!("bad bits_per_symbol: {e}"),
                })?,
                code_rate: fields[3].parse().map_err(|e| ConfigError::Table {
                    line: i + 1,
                    reason: format!("bad code_rate: {e}"),
                })?,
            });
        }
        let table = McsTable { rows };
        table.check_partition()?;
        Ok(table)
    }

    fn check_partition(&self) -> Result<(), ConfigError> {
        if self.rows.is_empty() {
            return Err(ConfigError::Table {
                line: 0,
                reason: "empty table".into(),
            });
        }
        if self.rows[0].sinr_low_db != f64::NEG_INFINITY
            || self.rows[self.rows.len() - 1].sinr_high_db != f64::INFINITY
        {
            return Err(ConfigError::Table {
                line: 0,
                reason: "rows must span (-inf, +inf)".into(),
            });
        }
        for w in self.rows.windows(2) {
            if w[0].sinr_high_db != w[1].sinr_low_db {
                return Err(ConfigError::Table {
                    line: 0,
                    reason: format!(
                        "rows must tile without gaps: {} vs {}",
                        w[0].sinr_high_db, w[1].sinr_low_db
                    ),
                });
            }
        }
        for r in &self.rows {
            if !(r.code_rate > 0.0 && r.code_rate < 1.0) {
                return Err(ConfigError::Table {
                    line: 0,
                    reason: format!("code_rate out of (0,1): {}", r.code_rate),
                });
            }
            if ![2, 4, 6].contains(&r.bits_per_symbol) {
                return Err(ConfigError::Table {
                    line: 0,
                    reason: format!("bits_per_symbol not in {{2,4,6}}: {}", r.bits_per_symbol),
                });
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> &[McsEntry] {
        &self.rows
    }

    /// Row containing `sinr_db` under the half-open partition.
    pub fn lookup(&self, sinr_db: f64) -> &McsEntry {
        for row in &self.rows {
            if sinr_db < row.sinr_high_db {
                return row;
            }
        }
        self.rows.last().expect("table is never empty")
    }
}

/// Per-user link quality after association.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkReport {
    pub user_id: usize,
    /// Serving UAV id, or `None` when the best SINR is below the threshold.
    pub serving_uav: Option<usize>,
    /// Best SINR over UAVs in dB (reported even when unassociated).
    pub sinr_db: f64,
    pub bits_per_symbol: u32,
    pub code_rate: f64,
    /// Rate of a single PRB at this MCS in bit/s.
    pub per_prb_bps: f64,
}

/// Two-level cone gain: mainlobe inside the off-nadir half-angle, sidelobe
/// outside.
pub fn antenna_gain(user_pos: Vec2, uav: &UavState, params: &ChannelParams) -> f64 {
    let horizontal = user_pos.distance(uav.position);
    let off_nadir_deg = (horizontal / uav.height_m).atan().to_degrees();
    if off_nadir_deg <= params.beamwidth_deg {
        params.mainlobe_gain
    } else {
        params.sidelobe_gain
    }
}

/// Received power from one UAV in watts:
/// p * c_lin * gain * (||y - u||^2 + h^2)^(-alpha/2).
pub fn rx_power_w(user_pos: Vec2, uav: &UavState, params: &ChannelParams) -> f64 {
    let c_lin = 10f64.powf(params.nearfield_pathloss_db / 10.0);
    let gain = antenna_gain(user_pos, uav, params);
    let d2 = user_pos.distance_sq(uav.position) + uav.height_m * uav.height_m;
    params.tx_power_w * c_lin * gain * d2.powf(-params.pathloss_exp / 2.0)
}

/// SINR of a user with respect to one UAV in dB; every other UAV interferes.
pub fn sinr_db(
    user_pos: Vec2,
    uav_index: usize,
    world: &WorldState,
    params: &ChannelParams,
) -> f64 {
    let num = rx_power_w(user_pos, &world.uavs[uav_index], params);
    let mut den = params.noise_w;
    for (k, uav) in world.uavs.iter().enumerate() {
        if k != uav_index {
            den += rx_power_w(user_pos, uav, params);
        }
    }
    10.0 * (num / den).log10()
}

/// Associate every user with its argmax-SINR UAV when that SINR clears the
/// threshold; ties break toward the lower UAV id. Also resolves the MCS.
pub fn associate(world: &WorldState, params: &ChannelParams, table: &McsTable) -> Vec<LinkReport> {
    world
        .users
        .iter()
        .map(|user| {
            let mut best_idx = 0usize;
            let mut best_sinr = f64::NEG_INFINITY;
            for idx in 0..world.uavs.len() {
                let s = sinr_db(user.position, idx, world, params);
                if s > best_sinr {
                    best_sinr = s;
                    best_idx = idx;
                }
            }
            let serving = if best_sinr >= params.assoc_threshold_db {
                Some(world.uavs[best_idx].id)
            } else {
                None
            };
            let mcs = table.lookup(best_sinr);
            LinkReport {
                user_id: user.id,
                serving_uav: serving,
                sinr_db: best_sinr,
                bits_per_symbol: mcs.bits_per_symbol,
                code_rate: mcs.code_rate,
                per_prb_bps: data_rate_bps(mcs.bits_per_symbol, mcs.code_rate, 1),
            }
        })
        .collect()
}

/// Downlink rate of `prbs` resource blocks at the given MCS:
/// 168 * bps * code_rate * prbs / 0.001  [bit/s].
pub fn data_rate_bps(bits_per_symbol: u32, code_rate: f64, prbs: u32) -> f64 {
    SYMBOLS_PER_PRB * bits_per_symbol as f64 * code_rate * prbs as f64 / TTI_S
}
