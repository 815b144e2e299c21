//! Group-relative advantages, the clipped surrogate, and the exact KL
//! penalty against the reference policy.
//!
//! For a group of `N` responses to one query the objective is
//!
//! ```text
//! J = 1/N * sum_{i unmasked} min(r_i * A_i, clip(r_i, 1-eps, 1+eps) * A_i)
//!     - beta * mean_{i unmasked} KL(pi_theta || pi_ref)
//! ```
//!
//! with `r_i = exp(logp_new_i - logp_old_i)` and `A_i` the rewards
//! standardized within the group.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrpoConfig {
    pub eps_clip: f64,
    pub beta_kl: f64,
    pub adv_epsilon: f64,
}

impl Default for GrpoConfig {
    fn default() -> Self {
        GrpoConfig {
            eps_clip: 0.2,
            beta_kl: 0.04,
            adv_epsilon: 1e-8,
        }
    }
}

impl GrpoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_clip > 0.0 && self.eps_clip < 1.0) {
            return Err(Error::Config(format!(
                "eps_clip must be in (0, 1), got {}",
                self.eps_clip
            )));
        }
        if !(self.beta_kl >= 0.0) {
            return Err(Error::Config(format!(
                "beta_kl must be >= 0, got {}",
                self.beta_kl
            )));
        }
        if !(self.adv_epsilon >= 0.0) {
            return Err(Error::Config(format!(
                "adv_epsilon must be >= 0, got {}",
                self.adv_epsilon
            )));
        }
        Ok(())
    }
}

/// Numeric view of the `N` rollouts sampled for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutGroup {
    pub query_id: u64,
    pub logp_new: Vec<f64>,
    pub logp_old: Vec<f64>,
    /// Exact `KL(pi_theta || pi_ref)` at this query, one entry per response.
    pub kl_ref: Vec<f64>,
    pub rewards: Vec<f64>,
    pub grad_mask: Vec<bool>,
}

impl RolloutGroup {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.rewards.len();
        if n < 2 {
            return Err(Error::GroupTooSmall(n));
        }
        let lens = [
            self.logp_new.len(),
            self.logp_old.len(),
            self.kl_ref.len(),
            self.grad_mask.len(),
        ];
        if lens.iter().any(|&l| l != n) {
            return Err(Error::Config(format!(
                "group {}: array lengths {:?} do not match {} rewards",
                self.query_id, lens, n
            )));
        }
        let finite = self
            .logp_new
            .iter()
            .chain(&self.logp_old)
            .chain(&self.kl_ref)
            .chain(&self.rewards)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config(format!(
                "group {}: non-finite entry",
                self.query_id
            )));
        }
        Ok(())
    }
}

/// `(r_i - mean) / (pop_std + adv_epsilon)`, all zeros when the rewards are
/// constant.
pub fn advantages(rewards: &[f64], adv_epsilon: f64) -> Result<Vec<f64>> {
    let n = rewards.len();
    if n < 2 {
        return Err(Error::GroupTooSmall(n));
    }
    if rewards.iter().all(|r| *r == rewards[0]) {
        return Ok(vec![0.0; n]);
    }
    // second pass removes the rounding error of the first mean
    let rough = rewards.iter().sum::<f64>() / n as f64;
    let mean = rough + rewards.iter().map(|r| r - rough).sum::<f64>() / n as f64;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    if std == 0.0 {
        return Ok(vec![0.0; n]);
    }
    Ok(rewards
        .iter()
        .map(|r| (r - mean) / (std + adv_epsilon))
        .collect())
}

fn clip_ratio(ratio: f64, eps_clip: f64) -> f64 {
    ratio.clamp(1.0 - eps_clip, 1.0 + eps_clip)
}

/// `min(ratio * A, clip(ratio, 1-eps, 1+eps) * A)`.
pub fn clipped_term(ratio: f64, advantage: f64, eps_clip: f64) -> Result<f64> {
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(Error::NonPositiveRatio(ratio));
    }
    Ok((ratio * advantage).min(clip_ratio(ratio, eps_clip) * advantage))
}

/// Derivative of [`clipped_term`] with respect to `log(ratio)`: `ratio * A`
/// on the unclipped branch, zero where the clip binds.
pub fn clipped_term_dlogratio(ratio: f64, advantage: f64, eps_clip: f64) -> f64 {
    let unclipped = ratio * advantage;
    if unclipped <= clip_ratio(ratio, eps_clip) * advantage {
        unclipped
    } else {
        0.0
    }
}

fn check_distribution(name: &str, p: &[f64]) -> Result<()> {
    if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::BadDistribution(format!(
            "{name} has a negative or non-finite entry"
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::BadDistribution(format!("{name} sums to {sum}")));
    }
    Ok(())
}

/// `sum_k p_k log(p_k / q_k)` with `0 log 0 = 0`.
pub fn kl_exact(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() || p.is_empty() {
        return Err(Error::BadDistribution(format!(
            "length mismatch: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    check_distribution("p", p)?;
    check_distribution("q", q)?;
    let mut kl = 0.0;
    for (k, (&pk, &qk)) in p.iter().zip(q).enumerate() {
        if pk == 0.0 {
            continue;
        }
        if qk == 0.0 {
            return Err(Error::InfiniteDivergence { index: k, p: pk });
        }
        kl += pk * (pk / qk).ln();
    }
    Ok(kl.max(0.0))
}

/// Objective value plus the coefficients needed to assemble its gradient:
///
/// ```text
/// dJ/dtheta = sum_i logp_weights[i] * dlogp_new_i/dtheta
///           - sum_i kl_weights[i]   * dKL_i/dtheta
/// ```
///
/// Both weight vectors are zero at masked positions.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupObjective {
    pub value: f64,
    pub logp_weights: Vec<f64>,
    pub kl_weights: Vec<f64>,
    pub advantages: Vec<f64>,
    /// Every response was masked; the group contributes nothing.
    pub skipped: bool,
}

/// Evaluates the surrogate for explicitly supplied advantages.
pub fn surrogate(
    logp_new: &[f64],
    logp_old: &[f64],
    advantages: &[f64],
    kl_ref: &[f64],
    grad_mask: &[bool],
    cfg: &GrpoConfig,
) -> Result<GroupObjective> {
    let n = advantages.len();
    let unmasked = grad_mask.iter().filter(|m| !**m).count();
    let mut logp_weights = vec![0.0; n];
    let mut kl_weights = vec![0.0; n];
    if unmasked == 0 {
        return Ok(GroupObjective {
            value: 0.0,
            logp_weights,
            kl_weights,
            advantages: advantages.to_vec(),
            skipped: true,
        });
    }
    let inv_n = 1.0 / n as f64;
    let kl_share = cfg.beta_kl / unmasked as f64;
    let mut policy_term = 0.0;
    let mut kl_term = 0.0;
    for i in (0..n).filter(|&i| !grad_mask[i]) {
        let ratio = (logp_new[i] - logp_old[i]).exp();
        policy_term += clipped_term(ratio, advantages[i], cfg.eps_clip)?;
        logp_weights[i] = inv_n * clipped_term_dlogratio(ratio, advantages[i], cfg.eps_clip);
        kl_term += kl_ref[i];
        kl_weights[i] = kl_share;
    }
    Ok(GroupObjective {
        value: inv_n * policy_term - cfg.beta_kl * kl_term / unmasked as f64,
        logp_weights,
        kl_weights,
        advantages: advantages.to_vec(),
        skipped: false,
    })
}

/// Group objective with advantages standardized over the unmasked responses
/// only, so masked entries cannot influence the result.
pub fn group_objective(g: &RolloutGroup, cfg: &GrpoConfig) -> Result<GroupObjective> {
    g.validate()?;
    let n = g.len();
    let live: Vec<usize> = (0..n).filter(|&i| !g.grad_mask[i]).collect();
    let mut adv = vec![0.0; n];
    if live.len() >= 2 {
        let live_rewards: Vec<f64> = live.iter().map(|&i| g.rewards[i]).collect();
        for (&i, a) in live.iter().zip(advantages(&live_rewards, cfg.adv_epsilon)?) {
            adv[i] = a;
        }
    }
    surrogate(&g.logp_new, &g.logp_old, &adv, &g.kl_ref, &g.grad_mask, cfg)
}
