//! Text checkpoints: a versioned header followed by the weights in
//! row-major decimal text. The format is line-oriented so files diff
//! cleanly and survive any platform.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::CheckpointError;
use crate::learn::mlp::Mlp;

pub const CHECKPOINT_MAGIC: &str = "skyslice-checkpoint v1";

/// Header fields identifying what a checkpointed network is for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointMeta {
    pub fleet_size: usize,
    pub uav_id: usize,
    /// "alloc" or "place".
    pub role: String,
    /// Identifier of the action enumeration the output head indexes into.
    pub action_space: String,
    /// Free-form record of the observation normalizers in effect.
    pub normalizers: String,
}

pub fn save_checkpoint(
    path: &Path,
    net: &Mlp,
    meta: &CheckpointMeta,
) -> Result<(), CheckpointError> {
    let mut out = String::new();
    let _ = writeln!(out, "{CHECKPOINT_MAGIC}");
    let _ = writeln!(out, "fleet_size {}", meta.fleet_size);
    let _ = writeln!(out, "uav {}", meta.uav_id);
    let _ = writeln!(out, "role {}", meta.role);
    let _ = writeln!(out, "action_space {}", meta.action_space);
    let _ = writeln!(out, "normalizers {}", meta.normalizers);
    let dims: Vec<String> = net.dims().iter().map(|d| d.to_string()).collect();
    let _ = writeln!(out, "layer_dims {}", dims.join(" "));

    let params = net.params_flat();
    let mut off = 0;
    for l in 0..net.dims().len() - 1 {
        let (inp, rows) = (net.dims()[l], net.dims()[l + 1]);
        let _ = writeln!(out, "layer {l} {rows} {inp}");
        for _ in 0..rows {
            let row: Vec<String> = params[off..off + inp]
                .iter()
                .map(|v| format!("{v:.17e}"))
                .collect();
            off += inp;
            let _ = writeln!(out, "{}", row.join(" "));
        }
        let _ = writeln!(out, "bias");
        let bias: Vec<String> = params[off..off + rows]
            .iter()
            .map(|v| format!("{v:.17e}"))
            .collect();
        off += rows;
        let _ = writeln!(out, "{}", bias.join(" "));
    }
    let _ = writeln!(out, "end");
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(Mlp, CheckpointMeta), CheckpointError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();

    let mut next = |expect: &str| -> Result<(usize, String), CheckpointError> {
        match lines.next() {
            Some((i, l)) => Ok((i + 1, l.to_string())),
            None => Err(CheckpointError::Format {
                line: 0,
                reason: format!("unexpected end of file, wanted {expect}"),
            }),
        }
    };
    let field = |line: usize, text: &str, key: &str| -> Result<String, CheckpointError> {
        text.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .map(str::to_string)
            .ok_or_else(|| CheckpointError::Format {
                line,
                reason: format!("expected `{key} ...`, got {text:?}"),
            })
    };

    let (line, magic) = next("magic")?;
    if magic != CHECKPOINT_MAGIC {
        let _ = line;
        return Err(CheckpointError::Version(magic));
    }
    let (l, t) = next("fleet_size")?;
    let fleet_size: usize = field(l, &t, "fleet_size")?
        .parse()
        .map_err(|e| CheckpointError::Format {
            line: l,
            reason: format!("bad fleet_size: {e}"),
        })?;
    let (l, t) = next("uav")?;
    let uav_id: usize = field(l, &t, "uav")?
        .parse()
        .map_err(|e| CheckpointError::Format {
            line: l,
            reason: format!("bad uav: {e}"),
        })?;
    let (l, t) = next("role")?;
    let role = field(l, &t, "role")?;
    let (l, t) = next("action_space")?;
    let action_space = field(l, &t, "action_space")?;
    let (l, t) = next("normalizers")?;
    let normalizers = field(l, &t, "normalizers")?;
    let (l, t) = next("layer_dims")?;
    let dims: Vec<usize> = field(l, &t, "layer_dims")?
        .split_whitespace()
        .map(|s| {
            s.parse().map_err(|e| CheckpointError::Format {
                line: l,
                reason: format!("bad dim {s:?}: {e}"),
            })
        })
        .collect::<Result<_, _>>()?;
    if dims.len() < 2 {
        return Err(CheckpointError::Format {
            line: l,
            reason: "need at least two dims".into(),
        });
    }

    let mut params = Vec::new();
    for layer in 0..dims.len() - 1 {
        let (inp, rows) = (dims[layer], dims[layer + 1]);
        let (l, t) = next("layer header")?;
        let expect = format!("layer {layer} {rows} {inp}");
        if t != expect {
            return Err(CheckpointError::Format {
                line: l,
                reason: format!("expected {expect:?}, got {t:?}"),
            });
        }
        let mut read_values = |l: usize, t: &str, want: usize| -> Result<(), CheckpointError> {
            let vals: Vec<f64> = t
                .split_whitespace()
                .map(|s| {
                    s.parse().map_err(|e| CheckpointError::Format {
                        line: l,
                        reason: format!("bad value {s:?}: {e}"),
                    })
                })
                .collect::<Result<_, _>>()?;
            if vals.len() != want {
                return Err(CheckpointError::Format {
                    line: l,
                    reason: format!("expected {want} values, got {}", vals.len()),
                });
            }
            params.extend(vals);
            Ok(())
        };
        for _ in 0..rows {
            let (l, t) = next("weight row")?;
            read_values(l, &t, inp)?;
        }
        let (l, t) = next("bias marker")?;
        if t != "bias" {
            return Err(CheckpointError::Format {
                line: l,
                reason: format!("expected `bias`, got {t:?}"),
            });
        }
        let (l, t) = next("bias row")?;
        read_values(l, &t, rows)?;
    }
    let (l, t) = next("end")?;
    if t != "end" {
        return Err(CheckpointError::Format {
            line: l,
            reason: format!("expected `end`, got {t:?}"),
        });
    }

    let mut net = Mlp::zeros(&dims);
    net.set_params_flat(&params);
    Ok((
        net,
        CheckpointMeta {
            fleet_size,
            uav_id,
            role,
            action_space,
            normalizers,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn checkpoint_roundtrip_is_exact() {
        let dir = std::env::temp_dir().join("skyslice-ckpt-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.txt");
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let net = Mlp::new(&[3, 16, 16, 5], &mut rng);
        let meta = CheckpointMeta {
            fleet_size: 2,
            uav_id: 1,
            role: "place".into(),
            action_space: "move-compass-5".into(),
            normalizers: "agg_dem_bps=1e8".into(),
        };
        save_checkpoint(&path, &net, &meta).unwrap();
        let (loaded, loaded_meta) = load_checkpoint(&path).unwrap();
        assert_eq!(loaded, net);
        assert_eq!(loaded_meta, meta);
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let dir = std::env::temp_dir().join("skyslice-ckpt-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("badversion.txt");
        std::fs::write(&path, "skyslice-checkpoint v999\n").unwrap();
        match load_checkpoint(&path) {
            Err(CheckpointError::Version(v)) => assert!(v.contains("v999")),
            other => panic!("expected version error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = std::env::temp_dir().join("skyslice-ckpt-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("truncated.txt");
        std::fs::write(
            &path,
            "skyslice-checkpoint v1\nfleet_size 1\nuav 0\nrole alloc\naction_space x\nnormalizers y\nlayer_dims 2 2\nlayer 0 2 2\n1.0 2.0\n",
        )
        .unwrap();
        assert!(load_checkpoint(&path).is_err());
    }
}
