//! Test-time resolution scaling: aspect-preserving short-side resize,
//! coordinate remapping, and multi-scale ensemble selection.
//!
//! Ensemble selection keeps the member that agrees most with the others
//! (largest summed pairwise IoU for boxes, smallest summed normalized edit
//! distance for text), i.e. it rejects outlier scales.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou2, BBox};
use crate::rewards::levenshtein;

pub const DEFAULT_SCALES: [u32; 3] = [560, 672, 800];

/// Short-side target lengths used by the ensemble, evaluated in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleSet {
    targets: Vec<u32>,
}

impl ScaleSet {
    pub fn new(targets: Vec<u32>) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::Config("scale set needs at least one target".into()));
        }
        if targets.contains(&0) {
            return Err(Error::Config("scale targets must be positive".into()));
        }
        Ok(ScaleSet { targets })
    }

    pub fn targets(&self) -> &[u32] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

impl Default for ScaleSet {
    fn default() -> Self {
        ScaleSet {
            targets: DEFAULT_SCALES.to_vec(),
        }
    }
}

impl std::str::FromStr for ScaleSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let targets = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|e| Error::Config(format!("bad scale {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        ScaleSet::new(targets)
    }
}

impl std::fmt::Display for ScaleSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.targets.iter().map(u32::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

/// Resizes `(width, height)` so the shorter side equals `target`; the longer
/// side is rounded half away from zero.
pub fn rescale_dims(width: u32, height: u32, target: u32) -> Result<(u32, u32)> {
    if width == 0 || height == 0 || target == 0 {
        return Err(Error::NonPositiveDimension(format!(
            "({width}, {height}) -> {target}"
        )));
    }
    let short = width.min(height) as f64;
    let scale_side = |side: u32| -> u32 {
        if side == width.min(height) {
            target
        } else {
            (side as f64 * target as f64 / short).round() as u32
        }
    };
    Ok((scale_side(width), scale_side(height)))
}

/// Maps a box from a resized frame back to the original canvas, clamped to
/// the canvas.
pub fn map_box_to_original(b: &BBox, orig: (u32, u32), scaled: (u32, u32)) -> Result<BBox> {
    let (w, h) = orig;
    let (ws, hs) = scaled;
    if w == 0 || h == 0 || ws == 0 || hs == 0 {
        return Err(Error::NonPositiveDimension(format!(
            "{orig:?} / {scaled:?}"
        )));
    }
    let mapped = b.scale(w as f64 / ws as f64, h as f64 / hs as f64)?;
    Ok(mapped.clamp_to(w as f64, h as f64))
}

fn argbest(scores: &[f64], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if better(s, scores[best]) {
            best = i;
        }
    }
    best
}

/// Picks the box with the largest summed IoU against the other members;
/// ties go to the lowest index. Panics on an empty slice.
pub fn ensemble_select_box(candidates: &[BBox]) -> (BBox, usize) {
    assert!(
        !candidates.is_empty(),
        "ensemble needs at least one candidate"
    );
    let scores: Vec<f64> = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| {
            candidates
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, o)| iou2(c, o))
                .sum()
        })
        .collect();
    let idx = argbest(&scores, |a, b| a > b);
    (candidates[idx], idx)
}

fn normalized_distance(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        0.0
    } else {
        levenshtein(a, b) as f64 / longest as f64
    }
}

/// Picks the text with the smallest summed normalized edit distance to the
/// other members; ties go to the lowest index. Panics on an empty slice.
pub fn ensemble_select_text<S: AsRef<str>>(candidates: &[S]) -> (String, usize) {
    assert!(
        !candidates.is_empty(),
        "ensemble needs at least one candidate"
    );
    let scores: Vec<f64> = (0..candidates.len())
        .map(|i| {
            (0..candidates.len())
                .filter(|&j| j != i)
                .map(|j| normalized_distance(candidates[i].as_ref(), candidates[j].as_ref()))
                .sum()
        })
        .collect();
    let idx = argbest(&scores, |a, b| a < b);
    (candidates[idx].as_ref().to_string(), idx)
}
