//! The training loop: draw a batch, roll out groups, score them, apply the
//! rollback and difficulty schedules, and take one ascent step on the mean
//! group objective.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::{generate_dataset, Features, Scene};
use crate::error::{Error, Result};
use crate::geometry::{iou2, BBox};
use crate::grpo::{group_objective, GrpoConfig, RolloutGroup};
use crate::policy::{
    greedy_index, kl_and_grad, kl_to_reference, logprob_and_grad, render_transcript,
    sample_response_from_features, Head, PolicyParams,
};
use crate::rewards::{rec_reward, RewardBreakdown};
use crate::rng::{self, tags};
use crate::sampler::{
    apply_difficulty, apply_rollback, classify_difficulty, classify_dirty, curate, Curation,
    GradDirective, Sampler, SamplerConfig,
};
use crate::transcript::{format_reward, parse_transcript, Transcript};
use crate::ttrs::{ensemble_select_box, map_box_to_original, ScaleSet};

/// Ids of generated evaluation scenes start here so they never collide with
/// training ids.
pub const EVAL_ID_OFFSET: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub group_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Short side the training scenes are compressed to.
    pub train_scale: u32,
    pub tau: f64,
    pub grpo: GrpoConfig,
    pub sampler: SamplerConfig,
    pub scales: ScaleSet,
    pub curation: bool,
    pub tac: bool,
    pub rrs: bool,
    pub ads: bool,
    pub curation_threshold: f64,
    pub curation_ratio: f64,
    /// Size of the generated training pool when no dataset is supplied.
    pub train_count: usize,
    /// Size of the generated held-out set when none is supplied.
    pub eval_count: usize,
    /// Evaluate every this many steps (0 disables periodic evaluation).
    pub eval_every: usize,
    /// Resolution for periodic evaluation; `None` is the native canvas.
    pub eval_scale: Option<u32>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 300,
            batch_size: 6,
            group_size: 8,
            learning_rate: 0.05,
            seed: 0,
            train_scale: 336,
            tau: 1.0,
            grpo: GrpoConfig::default(),
            sampler: SamplerConfig::default(),
            scales: ScaleSet::default(),
            curation: true,
            tac: true,
            rrs: true,
            ads: true,
            curation_threshold: 0.5,
            curation_ratio: 2.0,
            train_count: 600,
            eval_count: 2000,
            eval_every: 50,
            eval_scale: None,
        }
    }
}

impl TrainConfig {
    /// Ablation baseline: consistency reward, rollback, difficulty sampling
    /// and curation all off.
    pub fn plain_grpo() -> Self {
        TrainConfig {
            curation: false,
            tac: false,
            rrs: false,
            ads: false,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.group_size < 2 {
            return Err(Error::Config(format!(
                "group_size must be >= 2, got {}",
                self.group_size
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Config(format!(
                "bad learning_rate {}",
                self.learning_rate
            )));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        if self.train_scale == 0 || self.eval_scale == Some(0) {
            return Err(Error::Config("scales must be positive".into()));
        }
        if !(self.curation_ratio >= 0.0) {
            return Err(Error::Config("curation_ratio must be >= 0".into()));
        }
        self.grpo.validate()?;
        self.sampler.validate()
    }
}

/// Scores one rollout against its scene.
pub trait RewardModel: Send + Sync {
    fn reward(&self, scene: &Scene, transcript: &Transcript) -> RewardBreakdown;
}

/// Grounding reward. With `tac` the accuracy is the triple IoU of think
/// box, answer box and ground truth; without it the accuracy is the plain
/// answer-vs-ground-truth IoU.
#[derive(Debug, Clone, Copy)]
pub struct GroundingReward {
    pub tac: bool,
}

impl RewardModel for GroundingReward {
    fn reward(&self, scene: &Scene, transcript: &Transcript) -> RewardBreakdown {
        let gt = scene.gt_bbox();
        if self.tac {
            return rec_reward(transcript, &gt);
        }
        let acc = transcript.answer_bbox.map_or(0.0, |b| iou2(&b, &gt));
        let format = format_reward(&transcript.raw);
        RewardBreakdown {
            tac: 0.0,
            acc,
            format,
            total: acc + format,
        }
    }
}

/// One line of the metrics stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub step: usize,
    pub mean_total_reward: f64,
    pub mean_acc_reward: f64,
    pub mean_kl: f64,
    pub dirty_count: usize,
    pub masked_count: usize,
    pub mean_response_length: f64,
    pub sampler_entropy: f64,
    pub eval_acc: Option<f64>,
}

/// Inputs for one group's contribution to the batch objective.
#[derive(Debug, Clone)]
pub struct GroupInput<'a> {
    pub query_id: u64,
    pub features: &'a [Features],
    /// `(think_idx, answer_idx)` per response.
    pub choices: Vec<(usize, usize)>,
    pub logp_old: Vec<f64>,
    pub rewards: Vec<f64>,
    pub grad_mask: Vec<bool>,
}

/// Mean group objective over `batch_size` and its analytic gradient with
/// respect to `w_think ⊕ w_answer`.
pub fn batch_objective(
    policy: &PolicyParams,
    reference: &PolicyParams,
    groups: &[GroupInput<'_>],
    cfg: &GrpoConfig,
    batch_size: usize,
) -> Result<(f64, Vec<f64>)> {
    let dim = 2 * policy.w_think.len();
    let mut grad = vec![0.0; dim];
    let mut value = 0.0;
    for g in groups {
        if g.grad_mask.iter().all(|m| *m) {
            continue;
        }
        let mut logp_new = Vec::with_capacity(g.choices.len());
        let mut logp_grads = Vec::with_capacity(g.choices.len());
        for &(t, a) in &g.choices {
            let (lp, lg) = logprob_and_grad(policy, g.features, t, a);
            logp_new.push(lp);
            logp_grads.push(lg);
        }
        let (kl, kl_grad) = kl_and_grad(policy, reference, g.features);
        let group = RolloutGroup {
            query_id: g.query_id,
            logp_new,
            logp_old: g.logp_old.clone(),
            kl_ref: vec![kl; g.choices.len()],
            rewards: g.rewards.clone(),
            grad_mask: g.grad_mask.clone(),
        };
        let obj = group_objective(&group, cfg)?;
        value += obj.value;
        for (i, lg) in logp_grads.iter().enumerate() {
            let (wl, wk) = (obj.logp_weights[i], obj.kl_weights[i]);
            if wl == 0.0 && wk == 0.0 {
                continue;
            }
            for d in 0..dim {
                grad[d] += wl * lg[d] - wk * kl_grad[d];
            }
        }
    }
    let inv = 1.0 / batch_size as f64;
    grad.iter_mut().for_each(|g| *g *= inv);
    Ok((value * inv, grad))
}

/// Picks a candidate for a scene seen at a given short-side resolution.
pub trait AnswerModel {
    fn choose(&self, scene: &Scene, scale: u32) -> usize;
}

impl AnswerModel for PolicyParams {
    fn choose(&self, scene: &Scene, scale: u32) -> usize {
        greedy_index(self, &scene.candidate_features(scale), Head::Answer)
    }
}

/// Always answers the referenced object.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleModel;

impl AnswerModel for OracleModel {
    fn choose(&self, scene: &Scene, _scale: u32) -> usize {
        scene.gt_index
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScalePolicy {
    /// Original resolution (no resizing).
    Native,
    Single(u32),
    Ensemble(ScaleSet),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub acc_at_05: f64,
    pub mean_iou: f64,
    pub count: usize,
}

/// Predicted box at one resolution, mapped back to the original canvas.
fn predict_at(model: &dyn AnswerModel, scene: &Scene, scale: u32) -> BBox {
    let idx = model.choose(scene, scale);
    let scaled_box = scene.quantized_boxes(scale)[idx];
    map_box_to_original(
        &scaled_box,
        (scene.width, scene.height),
        scene.scaled_dims(scale),
    )
    .expect("scene dims are positive")
}

pub fn predict(model: &dyn AnswerModel, scene: &Scene, policy: &ScalePolicy) -> BBox {
    match policy {
        ScalePolicy::Native => predict_at(model, scene, scene.width.min(scene.height)),
        ScalePolicy::Single(s) => predict_at(model, scene, *s),
        ScalePolicy::Ensemble(set) => {
            let boxes: Vec<BBox> = set
                .targets()
                .iter()
                .map(|&s| predict_at(model, scene, s))
                .collect();
            ensemble_select_box(&boxes).0
        }
    }
}

/// Greedy evaluation: Acc@0.5 and mean IoU of the answer box.
pub fn evaluate(model: &dyn AnswerModel, eval_set: &[Scene], policy: &ScalePolicy) -> EvalReport {
    if eval_set.is_empty() {
        return EvalReport::default();
    }
    let mut hits = 0usize;
    let mut iou_sum = 0.0;
    for scene in eval_set {
        let iou = iou2(&predict(model, scene, policy), &scene.gt_bbox());
        if iou >= 0.5 {
            hits += 1;
        }
        iou_sum += iou;
    }
    let n = eval_set.len() as f64;
    EvalReport {
        acc_at_05: hits as f64 / n,
        mean_iou: iou_sum / n,
        count: eval_set.len(),
    }
}

/// Per-sample outcome of a training step, exposed for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleOutcome {
    pub id: u64,
    pub rewards: Vec<RewardBreakdown>,
    pub kl: f64,
    pub mean_acc: f64,
    pub dirty: bool,
    pub masked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RunState {
    version: u32,
    next_step: usize,
    seed: u64,
}

pub struct Trainer {
    config: TrainConfig,
    policy: PolicyParams,
    reference: PolicyParams,
    sampler: Sampler,
    scenes: HashMap<u64, Scene>,
    features: HashMap<u64, Vec<Features>>,
    reward_model: Box<dyn RewardModel>,
    next_step: usize,
    curation: Option<Curation>,
    last_outcomes: Vec<SampleOutcome>,
}

impl Trainer {
    /// Fresh trainer over `pool` with zero-initialized policy; the
    /// reference policy is a frozen copy of the initialization. Runs offline
    /// curation when enabled.
    pub fn new(config: TrainConfig, pool: Vec<Scene>) -> Result<Self> {
        config.validate()?;
        if pool.is_empty() {
            return Err(Error::EmptyInput("training pool"));
        }
        let policy = PolicyParams::zeros(config.tau);
        let reward_model: Box<dyn RewardModel> = Box::new(GroundingReward { tac: config.tac });
        let features = pool
            .iter()
            .map(|s| (s.id, s.candidate_features(config.train_scale)))
            .collect();
        let ids: Vec<u64> = pool.iter().map(|s| s.id).collect();
        let scenes: HashMap<u64, Scene> = pool.into_iter().map(|s| (s.id, s)).collect();
        if scenes.len() != ids.len() {
            return Err(Error::Config("training pool has duplicate ids".into()));
        }
        let mut trainer = Trainer {
            reference: policy.clone(),
            policy,
            sampler: Sampler::new(ids.iter().copied()),
            scenes,
            features,
            reward_model,
            next_step: 0,
            curation: None,
            last_outcomes: Vec::new(),
            config,
        };
        if trainer.config.curation {
            trainer.run_curation(&ids)?;
        }
        Ok(trainer)
    }

    fn run_curation(&mut self, ids: &[u64]) -> Result<()> {
        let results = base_accuracy(
            &self.policy,
            self.reward_model.as_ref(),
            ids,
            &self.scenes,
            &self.features,
        );
        let mut rng = rng::stream(self.config.seed, &[tags::CURATE]);
        let cur = curate(
            &results,
            self.config.curation_threshold,
            self.config.curation_ratio,
            &mut rng,
        )?;
        log::info!(
            "curation: {} difficult, kept {} of {} simple",
            cur.difficult,
            cur.simple_kept,
            cur.simple_total
        );
        if cur.ids.len() >= self.config.batch_size {
            self.sampler = Sampler::new(cur.ids.iter().copied());
        } else {
            log::warn!("curated pool smaller than one batch; training on the full pool");
        }
        self.curation = Some(cur);
        Ok(())
    }

    /// Replaces the reward model (e.g. to plug in a different scorer).
    pub fn with_reward_model(mut self, model: Box<dyn RewardModel>) -> Self {
        self.reward_model = model;
        self
    }

    pub fn with_policy(mut self, policy: PolicyParams) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_reference(mut self, reference: PolicyParams) -> Self {
        self.reference = reference;
        self
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn policy(&self) -> &PolicyParams {
        &self.policy
    }

    pub fn reference(&self) -> &PolicyParams {
        &self.reference
    }

    pub fn sampler(&self) -> &Sampler {
        &self.sampler
    }

    pub fn sampler_mut(&mut self) -> &mut Sampler {
        &mut self.sampler
    }

    pub fn curation(&self) -> Option<&Curation> {
        self.curation.as_ref()
    }

    pub fn next_step(&self) -> usize {
        self.next_step
    }

    pub fn last_outcomes(&self) -> &[SampleOutcome] {
        &self.last_outcomes
    }

    pub fn scene(&self, id: u64) -> Option<&Scene> {
        self.scenes.get(&id)
    }

    /// Exact KL between the current and reference policy on a pool sample.
    pub fn sample_kl(&self, id: u64) -> Option<f64> {
        self.features
            .get(&id)
            .map(|f| kl_to_reference(&self.policy, &self.reference, f))
    }

    /// Draws a batch from the sampler and runs one step on it.
    pub fn train_step(&mut self) -> Result<StepMetrics> {
        let mut rng = rng::stream(self.config.seed, &[tags::BATCH, self.next_step as u64]);
        let ids = self.sampler.draw_batch(&mut rng, self.config.batch_size)?;
        self.train_step_on(&ids)
    }

    /// Runs one step on an explicit batch of pool ids.
    pub fn train_step_on(&mut self, ids: &[u64]) -> Result<StepMetrics> {
        let step = self.next_step;
        let cfg = self.config.clone();
        let n = cfg.group_size;
        let mut outcomes = Vec::with_capacity(ids.len());
        let mut inputs = Vec::with_capacity(ids.len());
        let mut length_sum = 0usize;

        // Collection against the pre-step snapshot (pi_old = pi_theta here).
        for &id in ids {
            let scene = self
                .scenes
                .get(&id)
                .ok_or_else(|| Error::Config(format!("sample {id} is not in the training pool")))?;
            let features = &self.features[&id];
            let mut choices = Vec::with_capacity(n);
            let mut logp_old = Vec::with_capacity(n);
            let mut rewards = Vec::with_capacity(n);
            for r in 0..n {
                let mut rng = rng::stream(cfg.seed, &[tags::ROLLOUT, step as u64, id, r as u64]);
                let resp = sample_response_from_features(&mut rng, &self.policy, scene, features);
                let transcript = parse_transcript(&resp.transcript);
                rewards.push(self.reward_model.reward(scene, &transcript));
                length_sum += resp.transcript.chars().count();
                choices.push((resp.think_idx, resp.answer_idx));
                logp_old.push(resp.logp);
            }
            let kl = kl_to_reference(&self.policy, &self.reference, features);
            let mean_acc = rewards.iter().map(|r| r.acc).sum::<f64>() / n as f64;
            outcomes.push(SampleOutcome {
                id,
                rewards,
                kl,
                mean_acc,
                dirty: false,
                masked: false,
            });
            inputs.push((choices, logp_old));
        }

        // Rollback first, then difficulty on the samples that stayed clean.
        for o in outcomes.iter_mut() {
            let rec = self
                .sampler
                .get_mut(o.id)
                .ok_or_else(|| Error::Config(format!("sample {} has no sampler record", o.id)))?;
            if cfg.rrs && classify_dirty(o.kl, &cfg.sampler)? {
                apply_rollback(rec, &cfg.sampler);
                o.dirty = true;
                o.masked = true;
                continue;
            }
            if cfg.ads {
                let class = classify_difficulty(o.mean_acc, &cfg.sampler);
                if apply_difficulty(rec, class, &cfg.sampler) == GradDirective::Mask {
                    o.masked = true;
                }
            }
        }

        let groups: Vec<GroupInput<'_>> = outcomes
            .iter()
            .zip(inputs)
            .map(|(o, (choices, logp_old))| GroupInput {
                query_id: o.id,
                features: &self.features[&o.id],
                choices,
                logp_old,
                rewards: o.rewards.iter().map(|r| r.total).collect(),
                grad_mask: vec![o.masked; n],
            })
            .collect();
        let (_, grad) = batch_objective(
            &self.policy,
            &self.reference,
            &groups,
            &cfg.grpo,
            cfg.batch_size,
        )?;
        drop(groups);
        if outcomes.iter().any(|o| !o.masked) {
            self.policy.add_scaled(&grad, cfg.learning_rate);
        }

        let rollouts = (ids.len() * n).max(1) as f64;
        let metrics = StepMetrics {
            step,
            mean_total_reward: outcomes
                .iter()
                .flat_map(|o| &o.rewards)
                .map(|r| r.total)
                .sum::<f64>()
                / rollouts,
            mean_acc_reward: outcomes
                .iter()
                .flat_map(|o| &o.rewards)
                .map(|r| r.acc)
                .sum::<f64>()
                / rollouts,
            mean_kl: outcomes.iter().map(|o| o.kl).sum::<f64>() / ids.len().max(1) as f64,
            dirty_count: outcomes.iter().filter(|o| o.dirty).count(),
            masked_count: outcomes.iter().filter(|o| o.masked).count(),
            mean_response_length: length_sum as f64 / rollouts,
            sampler_entropy: self.sampler.entropy(),
            eval_acc: None,
        };
        self.last_outcomes = outcomes;
        self.next_step += 1;
        Ok(metrics)
    }

    /// Writes policy, reference, sampler and step counter to `dir`.
    pub fn save_state(&self, dir: &Path) -> Result<()> {
        self.policy.save(&dir.join("checkpoint.json"))?;
        self.reference.save(&dir.join("reference.json"))?;
        self.sampler.save(&dir.join("sampler.jsonl"))?;
        let state = RunState {
            version: 1,
            next_step: self.next_step,
            seed: self.config.seed,
        };
        let path = dir.join("state.json");
        std::fs::write(
            &path,
            serde_json::to_string(&state).expect("state serializes") + "\n",
        )
        .map_err(|e| Error::io(&path, e))
    }

    /// Restores a trainer saved by [`Trainer::save_state`].
    pub fn resume(config: TrainConfig, pool: Vec<Scene>, dir: &Path) -> Result<Self> {
        let path = dir.join("state.json");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let state: RunState =
            serde_json::from_str(text.trim()).map_err(|e| Error::format(&path, 1, e))?;
        if state.seed != config.seed {
            return Err(Error::Config(format!(
                "state was written with seed {}, config has {}",
                state.seed, config.seed
            )));
        }
        let mut config_nocur = config.clone();
        config_nocur.curation = false;
        let mut trainer = Trainer::new(config_nocur, pool)?;
        trainer.config = config;
        trainer.policy = PolicyParams::load(&dir.join("checkpoint.json"))?;
        trainer.reference = PolicyParams::load(&dir.join("reference.json"))?;
        trainer.sampler = Sampler::load(&dir.join("sampler.jsonl"))?;
        trainer.next_step = state.next_step;
        Ok(trainer)
    }
}

/// Single greedy rollout of `policy` per sample; returns `(id, acc)`.
fn base_accuracy(
    policy: &PolicyParams,
    reward_model: &dyn RewardModel,
    ids: &[u64],
    scenes: &HashMap<u64, Scene>,
    features: &HashMap<u64, Vec<Features>>,
) -> Vec<(u64, f64)> {
    ids.iter()
        .map(|id| {
            let (scene, f) = (&scenes[id], &features[id]);
            let t = greedy_index(policy, f, Head::Think);
            let a = greedy_index(policy, f, Head::Answer);
            let transcript = parse_transcript(&render_transcript(scene, t, a));
            (*id, reward_model.reward(scene, &transcript).acc)
        })
        .collect()
}

/// Greedy base-policy accuracy and curated id list for a pool.
pub fn curate_pool(
    policy: &PolicyParams,
    pool: &[Scene],
    config: &TrainConfig,
) -> Result<(Vec<(u64, f64)>, Curation)> {
    let reward_model = GroundingReward { tac: config.tac };
    let ids: Vec<u64> = pool.iter().map(|s| s.id).collect();
    let features = pool
        .iter()
        .map(|s| (s.id, s.candidate_features(config.train_scale)))
        .collect();
    let scenes = pool.iter().map(|s| (s.id, s.clone())).collect();
    let results = base_accuracy(policy, &reward_model, &ids, &scenes, &features);
    let mut rng = rng::stream(config.seed, &[tags::CURATE]);
    let cur = curate(
        &results,
        config.curation_threshold,
        config.curation_ratio,
        &mut rng,
    )?;
    Ok((results, cur))
}

pub fn default_train_pool(config: &TrainConfig) -> Vec<Scene> {
    generate_dataset(
        config.train_count,
        None,
        rng::mix(config.seed, &[tags::TRAIN_SET]),
        0,
    )
}

pub fn default_eval_set(config: &TrainConfig) -> Vec<Scene> {
    generate_dataset(
        config.eval_count,
        None,
        rng::mix(config.seed, &[tags::EVAL_SET]),
        EVAL_ID_OFFSET,
    )
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub initial_eval: EvalReport,
    pub final_eval: EvalReport,
    pub metrics: Vec<StepMetrics>,
    pub policy: PolicyParams,
    pub curation: Option<Curation>,
}

/// Runs `config.steps` training steps with periodic evaluation. When
/// `out_dir` is given, writes `checkpoint.json`, `reference.json`,
/// `sampler.jsonl`, `state.json` and `metrics.jsonl` there.
pub fn run_training(
    config: &TrainConfig,
    pool: Vec<Scene>,
    eval_set: &[Scene],
    out_dir: Option<&Path>,
) -> Result<RunSummary> {
    let mut trainer = Trainer::new(config.clone(), pool)?;
    run_trainer(&mut trainer, eval_set, out_dir)
}

/// Continues `trainer` until `config.steps` steps have run in total.
pub fn run_trainer(
    trainer: &mut Trainer,
    eval_set: &[Scene],
    out_dir: Option<&Path>,
) -> Result<RunSummary> {
    let config = trainer.config().clone();
    let eval_policy = match config.eval_scale {
        Some(s) => ScalePolicy::Single(s),
        None => ScalePolicy::Native,
    };
    let initial_eval = evaluate(trainer.policy(), eval_set, &eval_policy);
    let mut metrics_out = match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let path = dir.join("metrics.jsonl");
            let file = std::fs::OpenOptions::new()
                .create(true)
                .append(trainer.next_step() > 0)
                .write(true)
                .truncate(trainer.next_step() == 0)
                .open(&path)
                .map_err(|e| Error::io(&path, e))?;
            Some((path, std::io::BufWriter::new(file)))
        }
        None => None,
    };
    let mut metrics = Vec::new();
    let mut last_eval = initial_eval;
    while trainer.next_step() < config.steps {
        let mut m = trainer.train_step()?;
        let done = m.step + 1;
        if (config.eval_every > 0 && done % config.eval_every == 0) || done == config.steps {
            last_eval = evaluate(trainer.policy(), eval_set, &eval_policy);
            m.eval_acc = Some(last_eval.acc_at_05);
        }
        if let Some((path, w)) = metrics_out.as_mut() {
            serde_json::to_writer(&mut *w, &m).expect("metrics serialize");
            w.write_all(b"\n").map_err(|e| Error::io(&*path, e))?;
        }
        metrics.push(m);
    }
    if let Some((path, mut w)) = metrics_out {
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    if let Some(dir) = out_dir {
        trainer.save_state(dir)?;
    }
    Ok(RunSummary {
        initial_eval,
        final_eval: last_eval,
        metrics,
        policy: trainer.policy().clone(),
        curation: trainer.curation().cloned(),
    })
}
