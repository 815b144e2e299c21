//! Group-relative policy optimization for a small grounding policy, with a
//! think/answer consistency reward, KL-triggered rollback resampling,
//! adaptive difficulty sampling and multi-resolution inference.
//!
//! The environment is synthetic: scenes of coloured boxes with a referring
//! expression. The policy is a pair of log-linear heads over candidate
//! objects (one for the reasoning span, one for the answer), so every
//! gradient and KL term is exact.

// `!(x >= 0.0)` style checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod env;
pub mod error;
pub mod geometry;
pub mod grpo;
pub mod io;
pub mod policy;
pub mod rewards;
pub mod rng;
pub mod sampler;
pub mod trainer;
pub mod transcript;
pub mod ttrs;

pub use env::{
    generate_dataset, generate_scene, oracle_resolve, Expression, Features, Scene, SceneObject,
    Selector, SizeClass,
};
pub use error::{Error, Result};
pub use geometry::{iou2, iou3, BBox};
pub use grpo::{group_objective, GroupObjective, GrpoConfig, RolloutGroup};
pub use policy::{Head, PolicyParams};
pub use rewards::{rec_reward, vqa_reward, AnswerMode, RewardBreakdown};
pub use sampler::{Difficulty, GradDirective, SampleRecord, Sampler, SamplerConfig};
pub use trainer::{
    evaluate, run_training, EvalReport, ScalePolicy, StepMetrics, TrainConfig, Trainer,
};
pub use transcript::{parse_transcript, Transcript};
pub use ttrs::ScaleSet;
