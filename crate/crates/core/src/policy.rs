//! Softmax-linear policy with independent think and answer heads over the
//! candidate objects of a scene.
//!
//! Each head scores candidate `k` as `w · phi_k / tau`. Exposes exact
//! log-probabilities, analytic gradients, full distributions and the exact
//! KL divergence to a reference policy with its gradient.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Features, Scene, FEATURE_DIM};
use crate::error::{Error, Result};
use crate::grpo::kl_exact;
use crate::transcript::{render_bbox, ANSWER_CLOSE, ANSWER_OPEN, THINK_CLOSE, THINK_OPEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    Think,
    Answer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub w_think: Vec<f64>,
    pub w_answer: Vec<f64>,
    pub tau: f64,
}

impl Default for PolicyParams {
    fn default() -> Self {
        PolicyParams::zeros(1.0)
    }
}

impl PolicyParams {
    pub fn zeros(tau: f64) -> Self {
        PolicyParams {
            w_think: vec![0.0; FEATURE_DIM],
            w_answer: vec![0.0; FEATURE_DIM],
            tau,
        }
    }

    pub fn weights(&self, head: Head) -> &[f64] {
        match head {
            Head::Think => &self.w_think,
            Head::Answer => &self.w_answer,
        }
    }

    /// `w_think ⊕ w_answer`.
    pub fn flat(&self) -> Vec<f64> {
        self.w_think.iter().chain(&self.w_answer).copied().collect()
    }

    pub fn from_flat(flat: &[f64], tau: f64) -> Self {
        let (t, a) = flat.split_at(flat.len() / 2);
        PolicyParams {
            w_think: t.to_vec(),
            w_answer: a.to_vec(),
            tau,
        }
    }

    /// `self += step * direction` over the flattened parameters.
    pub fn add_scaled(&mut self, direction: &[f64], step: f64) {
        let f = self.w_think.len();
        for (i, d) in direction.iter().enumerate() {
            if i < f {
                self.w_think[i] += step * d;
            } else {
                self.w_answer[i - f] += step * d;
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.w_think.len() != FEATURE_DIM || self.w_answer.len() != FEATURE_DIM {
            return Err(Error::Config(format!(
                "policy weights have dims {}/{}, expected {FEATURE_DIM}",
                self.w_think.len(),
                self.w_answer.len()
            )));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!(
                "temperature must be positive, got {}",
                self.tau
            )));
        }
        if self.flat().iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("non-finite policy weight".into()));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let ckpt = Checkpoint {
            version: 1,
            feature_dim: self.w_think.len(),
            tau: self.tau,
            w_think: self.w_think.clone(),
            w_answer: self.w_answer.clone(),
        };
        let mut text = serde_json::to_string(&ckpt).expect("checkpoint serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Checkpoint =
            serde_json::from_str(text.trim()).map_err(|e| Error::format(path, 1, e))?;
        if ckpt.version != 1 {
            return Err(Error::format(
                path,
                1,
                format!("unsupported checkpoint version {}", ckpt.version),
            ));
        }
        if ckpt.feature_dim != FEATURE_DIM
            || ckpt.w_think.len() != FEATURE_DIM
            || ckpt.w_answer.len() != FEATURE_DIM
        {
            return Err(Error::format(
                path,
                1,
                format!("feature dimension must be {FEATURE_DIM}"),
            ));
        }
        let params = PolicyParams {
            w_think: ckpt.w_think,
            w_answer: ckpt.w_answer,
            tau: ckpt.tau,
        };
        params.validate().map_err(|e| Error::format(path, 1, e))?;
        Ok(params)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    #[serde(rename = "F")]
    feature_dim: usize,
    tau: f64,
    w_think: Vec<f64>,
    w_answer: Vec<f64>,
}

fn logits(params: &PolicyParams, features: &[Features], head: Head) -> Vec<f64> {
    let w = params.weights(head);
    features
        .iter()
        .map(|phi| phi.iter().zip(w).map(|(x, w)| x * w).sum::<f64>() / params.tau)
        .collect()
}

fn log_softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    z.iter().map(|v| v - lse).collect()
}

pub fn log_distribution(params: &PolicyParams, features: &[Features], head: Head) -> Vec<f64> {
    log_softmax(&logits(params, features, head))
}

/// `softmax(w · phi_k / tau)` over the candidates.
pub fn full_distribution(params: &PolicyParams, features: &[Features], head: Head) -> Vec<f64> {
    let mut p: Vec<f64> = log_distribution(params, features, head)
        .into_iter()
        .map(f64::exp)
        .collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);
    p
}

pub fn entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&v| v > 0.0)
        .map(|v| v * v.ln())
        .sum::<f64>()
}

/// Index of the most probable candidate; ties resolve to the lowest index.
pub fn greedy_index(params: &PolicyParams, features: &[Features], head: Head) -> usize {
    let z = logits(params, features, head);
    let mut best = 0;
    for (i, v) in z.iter().enumerate() {
        if *v > z[best] {
            best = i;
        }
    }
    best
}

fn sample_index<R: Rng>(rng: &mut R, p: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, v) in p.iter().enumerate() {
        acc += v;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

/// One sampled output `o_i`: chosen candidates, rendered transcript and its
/// log-probability under the sampling policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Response {
    pub think_idx: usize,
    pub answer_idx: usize,
    pub transcript: String,
    pub logp: f64,
}

/// Renders the tagged transcript for the given choices, with boxes in the
/// original canvas coordinates.
pub fn render_transcript(scene: &Scene, think_idx: usize, answer_idx: usize) -> String {
    let think_box = render_bbox(&scene.objects[think_idx].bbox);
    let answer_box = render_bbox(&scene.objects[answer_idx].bbox);
    format!(
        "{THINK_OPEN}Looking for {} among {} candidates. Checking colour, size and position of each box. The referred object is at {think_box}.{THINK_CLOSE}{ANSWER_OPEN}{answer_box}{ANSWER_CLOSE}",
        scene.expression.describe(),
        scene.len(),
    )
}

pub fn sample_response_from_features<R: Rng>(
    rng: &mut R,
    params: &PolicyParams,
    scene: &Scene,
    features: &[Features],
) -> Response {
    let lp_think = log_distribution(params, features, Head::Think);
    let lp_answer = log_distribution(params, features, Head::Answer);
    let p_think: Vec<f64> = lp_think.iter().map(|v| v.exp()).collect();
    let p_answer: Vec<f64> = lp_answer.iter().map(|v| v.exp()).collect();
    let think_idx = sample_index(rng, &p_think);
    let answer_idx = sample_index(rng, &p_answer);
    Response {
        think_idx,
        answer_idx,
        transcript: render_transcript(scene, think_idx, answer_idx),
        logp: lp_think[think_idx] + lp_answer[answer_idx],
    }
}

/// Draws think and answer candidates independently from their heads at the
/// given resolution.
pub fn sample_response<R: Rng>(
    rng: &mut R,
    params: &PolicyParams,
    scene: &Scene,
    scale: u32,
) -> Response {
    let features = scene.candidate_features(scale);
    sample_response_from_features(rng, params, scene, &features)
}

fn head_grad(
    params: &PolicyParams,
    features: &[Features],
    head: Head,
    chosen: usize,
    out: &mut [f64],
) -> f64 {
    let lp = log_distribution(params, features, head);
    let p: Vec<f64> = lp.iter().map(|v| v.exp()).collect();
    for (d, slot) in out.iter_mut().enumerate() {
        let expected: f64 = p.iter().zip(features).map(|(pk, phi)| pk * phi[d]).sum();
        *slot = (features[chosen][d] - expected) / params.tau;
    }
    lp[chosen]
}

/// `log pi(think_idx, answer_idx)` and its gradient with respect to
/// `w_think ⊕ w_answer`.
pub fn logprob_and_grad(
    params: &PolicyParams,
    features: &[Features],
    think_idx: usize,
    answer_idx: usize,
) -> (f64, Vec<f64>) {
    let f = params.w_think.len();
    let mut grad = vec![0.0; 2 * f];
    let (gt, ga) = grad.split_at_mut(f);
    let lt = head_grad(params, features, Head::Think, think_idx, gt);
    let la = head_grad(params, features, Head::Answer, answer_idx, ga);
    (lt + la, grad)
}

/// Exact `KL(pi_params || pi_reference)` of the joint (think, answer)
/// distribution, which factorizes into the sum over heads.
pub fn kl_to_reference(
    params: &PolicyParams,
    reference: &PolicyParams,
    features: &[Features],
) -> f64 {
    [Head::Think, Head::Answer]
        .iter()
        .map(|&h| {
            let p = full_distribution(params, features, h);
            let q = full_distribution(reference, features, h);
            kl_exact(&p, &q).unwrap_or_else(|_| kl_from_logs(params, reference, features, h))
        })
        .sum()
}

/// Same quantity computed from log-probabilities; used when a distribution
/// underflows to exact zeros.
fn kl_from_logs(
    params: &PolicyParams,
    reference: &PolicyParams,
    features: &[Features],
    head: Head,
) -> f64 {
    let lp = log_distribution(params, features, head);
    let lq = log_distribution(reference, features, head);
    lp.iter()
        .zip(&lq)
        .map(|(a, b)| a.exp() * (a - b))
        .sum::<f64>()
        .max(0.0)
}

/// KL to the reference and its gradient with respect to the flattened
/// parameters of `params`. For a softmax with logits `z`,
/// `dKL/dz_k = p_k (log p_k - log q_k - KL)`.
pub fn kl_and_grad(
    params: &PolicyParams,
    reference: &PolicyParams,
    features: &[Features],
) -> (f64, Vec<f64>) {
    let f = params.w_think.len();
    let mut grad = vec![0.0; 2 * f];
    let mut total = 0.0;
    for (h, head) in [Head::Think, Head::Answer].into_iter().enumerate() {
        let lp = log_distribution(params, features, head);
        let lq = log_distribution(reference, features, head);
        let kl: f64 = lp.iter().zip(&lq).map(|(a, b)| a.exp() * (a - b)).sum();
        total += kl.max(0.0);
        for (k, phi) in features.iter().enumerate() {
            let dz = lp[k].exp() * (lp[k] - lq[k] - kl) / params.tau;
            for d in 0..f {
                grad[h * f + d] += dz * phi[d];
            }
        }
    }
    (total, grad)
}
