use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use asgl::trainer::{SignMode, TrainConfig};
use clap::Args;
use sha2::{Digest, Sha256};

/// Flags that override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub clip: Option<f64>,
    #[arg(long = "paths-n")]
    pub paths_n: Option<usize>,
    #[arg(long = "path-len-l")]
    pub path_len_l: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long = "batch-d")]
    pub batch_d: Option<usize>,
    #[arg(long = "batch-g")]
    pub batch_g: Option<usize>,
    #[arg(long = "lr-d")]
    pub lr_d: Option<f64>,
    #[arg(long = "lr-g")]
    pub lr_g: Option<f64>,
    /// Train without noise or budget (for reference runs only).
    #[arg(long = "non-private")]
    pub non_private: bool,
    #[arg(long, value_parser = parse_signs)]
    pub signs: Option<SignMode>,
}

fn parse_signs(s: &str) -> Result<SignMode, String> {
    match s {
        "both" => Ok(SignMode::Both),
        "positive" | "+" => Ok(SignMode::Positive),
        "negative" | "-" => Ok(SignMode::Negative),
        other => Err(format!("unknown sign mode {other:?} (both, positive, negative)")),
    }
}

macro_rules! apply {
    ($cfg:ident, $log:ident, $($flag:ident => $field:ident),* $(,)?) => {
        $(
            if let Some(v) = $flag {
                $cfg.$field = v;
                $log.push(format!("{}={:?}", stringify!($field), v));
            }
        )*
    };
}

impl Overrides {
    /// Applies the set flags and returns them as `key=value` strings.
    pub fn apply(&self, cfg: &mut TrainConfig) -> Vec<String> {
        let mut log = Vec::new();
        let Overrides {
            seed,
            epsilon,
            delta,
            sigma,
            clip,
            paths_n,
            path_len_l,
            dim,
            epochs,
            iters,
            batch_d,
            batch_g,
            lr_d,
            lr_g,
            non_private,
            signs,
        } = self.clone();
        apply!(cfg, log,
            seed => seed, epsilon => epsilon, delta => delta, sigma => sigma, clip => clip,
            paths_n => paths_n, path_len_l => path_len_l, dim => dim, epochs => n_epoch,
            iters => n_iter, batch_d => batch_d, batch_g => batch_g, lr_d => lr_d, lr_g => lr_g,
            signs => signs,
        );
        if non_private {
            cfg.private = false;
            log.push("private=false".into());
        }
        log
    }
}

/// Reads a flat TOML config; missing keys take their defaults.
pub fn load(path: Option<&Path>) -> Result<TrainConfig> {
    let Some(path) = path else {
        return Ok(TrainConfig::default());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let cfg: TrainConfig =
        toml::from_str(&text).map_err(|e| asgl::Error::Config(format!("{}: {e}", path.display())))?;
    Ok(cfg)
}

/// First 16 hex digits of the SHA-256 of the canonical JSON form.
pub fn hash(cfg: &TrainConfig) -> String {
    let json = serde_json::to_vec(cfg).expect("config serializes");
    hex::encode(&Sha256::digest(&json)[..8])
}
