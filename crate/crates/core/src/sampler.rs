//! Dataset-side learning schedule.
//!
//! Every sample carries a sampling rate `P`, starting at 1.0. Per training
//! step, a sample whose mean KL to the reference exceeds `kappa` is *dirty*:
//! its gradient is masked and `P <- gamma * P`. Otherwise its group-mean
//! accuracy classifies it as easy / moderate / hard and `P` is multiplied by
//! the matching `alpha`; hard samples are also gradient-masked. Rates are
//! clamped to `[p_min, p_max]`.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub kappa: f64,
    pub gamma: f64,
    pub theta_h: f64,
    pub theta_l: f64,
    pub alpha_easy: f64,
    pub alpha_hard: f64,
    pub alpha_moderate: f64,
    pub p_min: f64,
    pub p_max: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            kappa: 0.5,
            gamma: 0.8,
            theta_h: 0.5,
            theta_l: 0.2,
            alpha_easy: 0.1,
            alpha_hard: 0.8,
            alpha_moderate: 1.5,
            p_min: 1e-3,
            p_max: 8.0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return fail(format!("gamma must be in (0, 1), got {}", self.gamma));
        }
        if !(self.theta_l < self.theta_h) {
            return fail(format!(
                "theta_l ({}) must be below theta_h ({})",
                self.theta_l, self.theta_h
            ));
        }
        if [self.alpha_easy, self.alpha_hard, self.alpha_moderate]
            .iter()
            .any(|a| !(*a > 0.0))
        {
            return fail("alphas must be positive".into());
        }
        if !(self.kappa >= 0.0) {
            return fail(format!("kappa must be >= 0, got {}", self.kappa));
        }
        if !(self.p_min > 0.0 && self.p_min <= 1.0 && self.p_max >= 1.0 && self.p_max.is_finite()) {
            return fail(format!(
                "rate bounds [{}, {}] must bracket 1.0",
                self.p_min, self.p_max
            ));
        }
        Ok(())
    }

    fn clamp(&self, p: f64) -> f64 {
        p.clamp(self.p_min, self.p_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Moderate,
    Hard,
    #[default]
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradDirective {
    Allow,
    Mask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: u64,
    #[serde(rename = "P")]
    pub rate: f64,
    pub dirty_hits: u64,
    pub last_difficulty: Difficulty,
}

impl SampleRecord {
    pub fn new(id: u64) -> Self {
        SampleRecord {
            id,
            rate: 1.0,
            dirty_hits: 0,
            last_difficulty: Difficulty::Unknown,
        }
    }
}

/// Dirty iff `kl > kappa` (strict).
pub fn classify_dirty(kl: f64, cfg: &SamplerConfig) -> Result<bool> {
    if !(kl >= 0.0) {
        return Err(Error::NegativeKl(kl));
    }
    Ok(kl > cfg.kappa)
}

/// `P <- clamp(gamma * P)` and count the dirty event.
pub fn apply_rollback(rec: &mut SampleRecord, cfg: &SamplerConfig) {
    rec.rate = cfg.clamp(cfg.gamma * rec.rate);
    rec.dirty_hits += 1;
}

/// Easy above `theta_h`, hard below `theta_l`, moderate on and between the
/// thresholds.
pub fn classify_difficulty(r_acc: f64, cfg: &SamplerConfig) -> Difficulty {
    if r_acc > cfg.theta_h {
        Difficulty::Easy
    } else if r_acc < cfg.theta_l {
        Difficulty::Hard
    } else {
        Difficulty::Moderate
    }
}

pub fn apply_difficulty(
    rec: &mut SampleRecord,
    class: Difficulty,
    cfg: &SamplerConfig,
) -> GradDirective {
    let alpha = match class {
        Difficulty::Easy => cfg.alpha_easy,
        Difficulty::Moderate => cfg.alpha_moderate,
        Difficulty::Hard => cfg.alpha_hard,
        Difficulty::Unknown => 1.0,
    };
    rec.rate = cfg.clamp(alpha * rec.rate);
    rec.last_difficulty = class;
    if class == Difficulty::Hard {
        GradDirective::Mask
    } else {
        GradDirective::Allow
    }
}

/// Per-sample sampling state for a training pool.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sampler {
    records: Vec<SampleRecord>,
    index: HashMap<u64, usize>,
}

impl Sampler {
    pub fn new(ids: impl IntoIterator<Item = u64>) -> Self {
        Self::from_records(ids.into_iter().map(SampleRecord::new).collect())
    }

    pub fn from_records(records: Vec<SampleRecord>) -> Self {
        let index = records.iter().enumerate().map(|(i, r)| (r.id, i)).collect();
        Sampler { records, index }
    }

    pub fn records(&self) -> &[SampleRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: u64) -> Option<&SampleRecord> {
        self.index.get(&id).map(|&i| &self.records[i])
    }

    pub fn get_mut(&mut self, id: u64) -> Option<&mut SampleRecord> {
        self.index.get(&id).map(|&i| &mut self.records[i])
    }

    /// Weighted draw proportional to `P`, without replacement inside the
    /// batch. Records stay in the pool for later batches.
    pub fn draw_batch<R: Rng + ?Sized>(&self, rng: &mut R, batch_size: usize) -> Result<Vec<u64>> {
        let eligible: Vec<&SampleRecord> = self.records.iter().filter(|r| r.rate > 0.0).collect();
        if batch_size > eligible.len() {
            return Err(Error::InsufficientRecords {
                requested: batch_size,
                available: eligible.len(),
            });
        }
        let picked = eligible
            .choose_multiple_weighted(rng, batch_size, |r| r.rate)
            .map_err(|e| Error::Config(format!("weighted draw failed: {e}")))?;
        Ok(picked.map(|r| r.id).collect())
    }

    /// Shannon entropy of the normalized rate distribution.
    pub fn entropy(&self) -> f64 {
        let total: f64 = self.records.iter().map(|r| r.rate).sum();
        if total <= 0.0 {
            return 0.0;
        }
        -self
            .records
            .iter()
            .map(|r| r.rate / total)
            .filter(|p| *p > 0.0)
            .map(|p| p * p.ln())
            .sum::<f64>()
    }

    /// Writes one `{"id", "P", "dirty_hits", "last_difficulty"}` line per record.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        for r in &self.records {
            serde_json::to_writer(&mut out, r).expect("record serializes");
            out.push(b'\n');
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(&out))
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut records = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: SampleRecord =
                serde_json::from_str(&line).map_err(|e| Error::format(path, i + 1, e))?;
            records.push(rec);
        }
        Ok(Sampler::from_records(records))
    }
}

/// Result of offline curation.
#[derive(Debug, Clone, PartialEq)]
pub struct Curation {
    pub ids: Vec<u64>,
    pub difficult: usize,
    pub simple_total: usize,
    pub simple_kept: usize,
}

/// Keeps every sample with accuracy below `difficult_threshold` plus
/// `ratio` times as many uniformly chosen simple samples, shuffled.
pub fn curate<R: Rng + ?Sized>(
    base_results: &[(u64, f64)],
    difficult_threshold: f64,
    ratio: f64,
    rng: &mut R,
) -> Result<Curation> {
    if base_results.is_empty() {
        return Err(Error::EmptyInput("curation needs base-policy results"));
    }
    let (difficult, simple): (Vec<_>, Vec<_>) = base_results
        .iter()
        .partition(|(_, acc)| *acc < difficult_threshold);
    if difficult.is_empty() {
        log::warn!("curation found no difficult samples; curated set is empty");
        return Ok(Curation {
            ids: Vec::new(),
            difficult: 0,
            simple_total: simple.len(),
            simple_kept: 0,
        });
    }
    let want = ((difficult.len() as f64) * ratio).round() as usize;
    let simple_kept = want.min(simple.len());
    let mut ids: Vec<u64> = difficult.iter().map(|(id, _)| *id).collect();
    ids.extend(simple.choose_multiple(rng, simple_kept).map(|(id, _)| *id));
    ids.shuffle(rng);
    Ok(Curation {
        ids,
        difficult: difficult.len(),
        simple_total: simple.len(),
        simple_kept,
    })
}
