//! Flat `key = value` run configuration files.
//!
//! Blank lines and lines starting with `#` are skipped. Every field of
//! [`TrainConfig`] (including the nested optimizer and sampler settings) has
//! a key; unknown keys and repeated keys are errors.

use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::trainer::TrainConfig;

/// Every key accepted by [`apply_setting`], in the order [`to_kv_string`]
/// writes them.
pub const KEYS: &[&str] = &[
    "steps",
    "batch_size",
    "group_size",
    "learning_rate",
    "seed",
    "train_scale",
    "tau",
    "eps_clip",
    "beta_kl",
    "adv_epsilon",
    "kappa",
    "gamma",
    "theta_h",
    "theta_l",
    "alpha_easy",
    "alpha_hard",
    "alpha_moderate",
    "p_min",
    "p_max",
    "scales",
    "curation",
    "tac",
    "rrs",
    "ads",
    "curation_threshold",
    "curation_ratio",
    "train_count",
    "eval_count",
    "eval_every",
    "eval_scale",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("{key}: cannot parse {value:?}: {e}")))
}

/// Sets one field by key.
pub fn apply_setting(cfg: &mut TrainConfig, key: &str, value: &str) -> Result<()> {
    let v = value.trim();
    match key.trim() {
        "steps" => cfg.steps = parse(key, v)?,
        "batch_size" => cfg.batch_size = parse(key, v)?,
        "group_size" => cfg.group_size = parse(key, v)?,
        "learning_rate" => cfg.learning_rate = parse(key, v)?,
        "seed" => cfg.seed = parse(key, v)?,
        "train_scale" => cfg.train_scale = parse(key, v)?,
        "tau" => cfg.tau = parse(key, v)?,
        "eps_clip" => cfg.grpo.eps_clip = parse(key, v)?,
        "beta_kl" => cfg.grpo.beta_kl = parse(key, v)?,
        "adv_epsilon" => cfg.grpo.adv_epsilon = parse(key, v)?,
        "kappa" => cfg.sampler.kappa = parse(key, v)?,
        "gamma" => cfg.sampler.gamma = parse(key, v)?,
        "theta_h" => cfg.sampler.theta_h = parse(key, v)?,
        "theta_l" => cfg.sampler.theta_l = parse(key, v)?,
        "alpha_easy" => cfg.sampler.alpha_easy = parse(key, v)?,
        "alpha_hard" => cfg.sampler.alpha_hard = parse(key, v)?,
        "alpha_moderate" => cfg.sampler.alpha_moderate = parse(key, v)?,
        "p_min" => cfg.sampler.p_min = parse(key, v)?,
        "p_max" => cfg.sampler.p_max = parse(key, v)?,
        "scales" => cfg.scales = v.parse()?,
        "curation" => cfg.curation = parse(key, v)?,
        "tac" => cfg.tac = parse(key, v)?,
        "rrs" => cfg.rrs = parse(key, v)?,
        "ads" => cfg.ads = parse(key, v)?,
        "curation_threshold" => cfg.curation_threshold = parse(key, v)?,
        "curation_ratio" => cfg.curation_ratio = parse(key, v)?,
        "train_count" => cfg.train_count = parse(key, v)?,
        "eval_count" => cfg.eval_count = parse(key, v)?,
        "eval_every" => cfg.eval_every = parse(key, v)?,
        "eval_scale" => {
            cfg.eval_scale = match v {
                "native" => None,
                _ => Some(parse(key, v)?),
            }
        }
        other => return Err(Error::Config(format!("unknown key {other:?}"))),
    }
    Ok(())
}

/// Applies the settings in `text` on top of `base`. `origin` labels errors.
pub fn parse_config(text: &str, base: TrainConfig, origin: &Path) -> Result<TrainConfig> {
    let mut cfg = base;
    let mut seen = std::collections::HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::format(origin, i + 1, "expected `key = value`"))?;
        let key = key.trim();
        if !seen.insert(key.to_string()) {
            return Err(Error::format(
                origin,
                i + 1,
                format!("duplicate key {key:?}"),
            ));
        }
        apply_setting(&mut cfg, key, value).map_err(|e| Error::format(origin, i + 1, e))?;
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<TrainConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, TrainConfig::default(), path)
}

/// Every effective value, one `key = value` line each, in [`KEYS`] order.
pub fn to_kv_string(cfg: &TrainConfig) -> String {
    let values: Vec<String> = vec![
        cfg.steps.to_string(),
        cfg.batch_size.to_string(),
        cfg.group_size.to_string(),
        cfg.learning_rate.to_string(),
        cfg.seed.to_string(),
        cfg.train_scale.to_string(),
        cfg.tau.to_string(),
        cfg.grpo.eps_clip.to_string(),
        cfg.grpo.beta_kl.to_string(),
        cfg.grpo.adv_epsilon.to_string(),
        cfg.sampler.kappa.to_string(),
        cfg.sampler.gamma.to_string(),
        cfg.sampler.theta_h.to_string(),
        cfg.sampler.theta_l.to_string(),
        cfg.sampler.alpha_easy.to_string(),
        cfg.sampler.alpha_hard.to_string(),
        cfg.sampler.alpha_moderate.to_string(),
        cfg.sampler.p_min.to_string(),
        cfg.sampler.p_max.to_string(),
        cfg.scales.to_string(),
        cfg.curation.to_string(),
        cfg.tac.to_string(),
        cfg.rrs.to_string(),
        cfg.ads.to_string(),
        cfg.curation_threshold.to_string(),
        cfg.curation_ratio.to_string(),
        cfg.train_count.to_string(),
        cfg.eval_count.to_string(),
        cfg.eval_every.to_string(),
        cfg.eval_scale
            .map_or("native".to_string(), |s| s.to_string()),
    ];
    KEYS.iter()
        .zip(values)
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect()
}
