use std::collections::{HashMap, HashSet};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use taco_core::config::{apply_setting, load_config, to_kv_string};
use taco_core::env::generate_dataset;
use taco_core::io::{
    read_jsonl, read_scenes, write_jsonl, write_scenes, SceneRecord, TranscriptRecord,
};
use taco_core::rewards::{rec_reward, vqa_reward, RewardBreakdown};
use taco_core::trainer::{
    curate_pool, default_eval_set, default_train_pool, run_trainer, EvalReport,
};
use taco_core::{
    evaluate, parse_transcript, PolicyParams, ScalePolicy, ScaleSet, Scene, TrainConfig, Trainer,
};

#[derive(Parser)]
#[command(
    name = "taco",
    version,
    about = "Train and evaluate a grounding policy on synthetic scenes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset file.
    Generate(GenerateArgs),
    /// Score the base policy on a dataset and write the curated id list.
    Curate(CurateArgs),
    /// Run training and write checkpoint, metrics and resolved config.
    Train(TrainArgs),
    /// Single-scale evaluation report.
    Eval(EvalArgs),
    /// Multi-scale ensemble evaluation report.
    EnsembleEval(EnsembleEvalArgs),
    /// Score logged transcripts against ground truth.
    Score(ScoreArgs),
}

#[derive(Args)]
struct SeedArg {
    /// Random seed (falls back to TACO_SEED, then 0).
    #[arg(long, env = "TACO_SEED")]
    seed: Option<u64>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    count: usize,
    /// Fixed difficulty in [0, 1]; omitted means a per-scene mix.
    #[arg(long)]
    difficulty: Option<f64>,
    #[command(flatten)]
    seed: SeedArg,
    /// Id of the first scene.
    #[arg(long, default_value_t = 0)]
    first_id: u64,
    /// Also write templated question/answer fields.
    #[arg(long)]
    vqa: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CurateArgs {
    #[arg(long)]
    data: PathBuf,
    /// Base policy; the zero-initialized policy when omitted.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Simple samples kept per difficult sample.
    #[arg(long, default_value_t = 2.0)]
    ratio: f64,
    /// Short side the base policy sees.
    #[arg(long, default_value_t = 336)]
    scale: u32,
    /// Score with plain answer IoU instead of the consistency reward.
    #[arg(long)]
    no_tac: bool,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// `key = value` run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training pool; generated from the config when omitted.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Held-out set; generated from the config when omitted.
    #[arg(long)]
    eval_data: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, env = "TACO_SEED")]
    seed: Option<u64>,
    /// Override any config key, e.g. `--set rrs=false`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Continue from the state saved in the output directory.
    #[arg(long)]
    resume: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Short side in pixels, or `native`.
    #[arg(long, default_value = "native")]
    scale: String,
}

#[derive(Args)]
struct EnsembleEvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "560,672,800")]
    scales: String,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Task {
    Rec,
    Vqa,
}

#[derive(Args)]
struct ScoreArgs {
    /// Line-delimited `{"id", "transcript"}` records.
    #[arg(long)]
    transcripts: PathBuf,
    /// Dataset file holding the ground truth.
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, value_enum, default_value = "rec")]
    task: Task,
    /// Optional per-transcript score file.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Input that parsed but does not make sense (exit code 2).
#[derive(Debug)]
struct DataError(String);

impl std::fmt::Display for DataError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DataError {}

fn data_error(msg: impl Into<String>) -> anyhow::Error {
    DataError(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<taco_core::Error>() {
            return if e.is_data_error() { 2 } else { 1 };
        }
        if cause.is::<DataError>()
            || cause.is::<std::io::Error>()
            || cause.is::<serde_json::Error>()
        {
            return 2;
        }
    }
    1
}

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn generate(args: GenerateArgs) -> anyhow::Result<()> {
    if let Some(d) = args.difficulty {
        if !(0.0..=1.0).contains(&d) {
            return Err(anyhow!("--difficulty must be in [0, 1], got {d}"));
        }
    }
    let seed = args.seed.seed.unwrap_or(0);
    let scenes = generate_dataset(args.count, args.difficulty, seed, args.first_id);
    write_scenes(&args.out, &scenes, args.vqa)?;
    log::info!("wrote {} scenes to {}", scenes.len(), args.out.display());
    Ok(())
}

#[derive(Serialize)]
struct CurationReport {
    total: usize,
    difficult: usize,
    simple_total: usize,
    simple_kept: usize,
    curated: usize,
    mean_base_acc: f64,
}

#[derive(Serialize)]
struct IdRecord {
    id: u64,
}

fn curate(args: CurateArgs) -> anyhow::Result<()> {
    let scenes = read_scenes(&args.data)?;
    let policy = match &args.checkpoint {
        Some(p) => PolicyParams::load(p)?,
        None => PolicyParams::zeros(1.0),
    };
    let cfg = TrainConfig {
        seed: args.seed.seed.unwrap_or(0),
        train_scale: args.scale,
        tac: !args.no_tac,
        curation_threshold: args.threshold,
        curation_ratio: args.ratio,
        ..Default::default()
    };
    let (results, cur) = curate_pool(&policy, &scenes, &cfg)?;
    let ids: Vec<IdRecord> = cur.ids.iter().map(|&id| IdRecord { id }).collect();
    write_jsonl(&args.out, &ids)?;
    print_json(&CurationReport {
        total: scenes.len(),
        difficult: cur.difficult,
        simple_total: cur.simple_total,
        simple_kept: cur.simple_kept,
        curated: cur.ids.len(),
        mean_base_acc: results.iter().map(|r| r.1).sum::<f64>() / results.len().max(1) as f64,
    })
}

#[derive(Serialize)]
struct TrainReport {
    steps: usize,
    initial_eval: EvalReport,
    final_eval: EvalReport,
    out_dir: PathBuf,
}

fn resolve_train_config(args: &TrainArgs) -> anyhow::Result<TrainConfig> {
    let mut cfg = match &args.config {
        Some(path) => load_config(path)?,
        None => TrainConfig::default(),
    };
    for item in &args.overrides {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got {item:?}"))?;
        apply_setting(&mut cfg, k, v)?;
    }
    if let Some(steps) = args.steps {
        cfg.steps = steps;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn train(args: TrainArgs) -> anyhow::Result<()> {
    let cfg = resolve_train_config(&args)?;
    let pool = match &args.data {
        Some(p) => read_scenes(p)?,
        None => default_train_pool(&cfg),
    };
    let eval = match &args.eval_data {
        Some(p) => read_scenes(p)?,
        None => default_eval_set(&cfg),
    };
    let train_ids: HashSet<u64> = pool.iter().map(|s| s.id).collect();
    if let Some(s) = eval.iter().find(|s| train_ids.contains(&s.id)) {
        return Err(data_error(format!(
            "evaluation scene {} also appears in the training pool",
            s.id
        )));
    }
    let dir = &args.out_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let resolved = dir.join("resolved-config");
    std::fs::write(&resolved, to_kv_string(&cfg))
        .with_context(|| format!("writing {}", resolved.display()))?;

    let mut trainer = if args.resume && dir.join("state.json").exists() {
        Trainer::resume(cfg.clone(), pool, dir)?
    } else {
        Trainer::new(cfg.clone(), pool)?
    };
    log::info!(
        "training from step {} to {}",
        trainer.next_step(),
        cfg.steps
    );
    let summary = run_trainer(&mut trainer, &eval, Some(dir))?;
    print_json(&TrainReport {
        steps: cfg.steps,
        initial_eval: summary.initial_eval,
        final_eval: summary.final_eval,
        out_dir: dir.clone(),
    })
}

fn parse_scale(s: &str) -> anyhow::Result<ScalePolicy> {
    if s == "native" {
        return Ok(ScalePolicy::Native);
    }
    let v: u32 = s
        .parse()
        .map_err(|_| anyhow!("--scale expects a positive integer or `native`, got {s:?}"))?;
    if v == 0 {
        return Err(anyhow!("--scale must be positive"));
    }
    Ok(ScalePolicy::Single(v))
}

fn eval(args: EvalArgs) -> anyhow::Result<()> {
    let policy_choice = parse_scale(&args.scale)?;
    let policy = PolicyParams::load(&args.checkpoint)?;
    let scenes = read_scenes(&args.data)?;
    print_json(&evaluate(&policy, &scenes, &policy_choice))
}

#[derive(Serialize)]
struct EnsembleReport {
    scales: Vec<u32>,
    single: Vec<EvalReport>,
    ensemble: EvalReport,
}

fn ensemble_eval(args: EnsembleEvalArgs) -> anyhow::Result<()> {
    let scales: ScaleSet = args.scales.parse()?;
    let policy = PolicyParams::load(&args.checkpoint)?;
    let scenes = read_scenes(&args.data)?;
    let single = scales
        .targets()
        .iter()
        .map(|&s| evaluate(&policy, &scenes, &ScalePolicy::Single(s)))
        .collect();
    print_json(&EnsembleReport {
        scales: scales.targets().to_vec(),
        single,
        ensemble: evaluate(&policy, &scenes, &ScalePolicy::Ensemble(scales.clone())),
    })
}

#[derive(Serialize)]
struct ScoreLine {
    id: u64,
    #[serde(flatten)]
    reward: RewardBreakdown,
}

#[derive(Serialize)]
struct ScoreSummary {
    count: usize,
    mean_tac: f64,
    mean_acc: f64,
    mean_format: f64,
    mean_total: f64,
}

fn score(args: ScoreArgs) -> anyhow::Result<()> {
    let transcripts: Vec<TranscriptRecord> = read_jsonl(&args.transcripts)?;
    let mut lines = Vec::with_capacity(transcripts.len());
    match args.task {
        Task::Rec => {
            let scenes: HashMap<u64, Scene> = read_scenes(&args.gt)?
                .into_iter()
                .map(|s| (s.id, s))
                .collect();
            for t in &transcripts {
                let scene = scenes.get(&t.id).ok_or_else(|| {
                    data_error(format!(
                        "{}: no ground truth for id {}",
                        args.gt.display(),
                        t.id
                    ))
                })?;
                let reward = rec_reward(&parse_transcript(&t.transcript), &scene.gt_bbox());
                lines.push(ScoreLine { id: t.id, reward });
            }
        }
        Task::Vqa => {
            let records: HashMap<u64, SceneRecord> = read_jsonl::<SceneRecord>(&args.gt)?
                .into_iter()
                .map(|r| (r.id, r))
                .collect();
            for t in &transcripts {
                let rec = records.get(&t.id).ok_or_else(|| {
                    data_error(format!(
                        "{}: no ground truth for id {}",
                        args.gt.display(),
                        t.id
                    ))
                })?;
                let (Some(q), Some(a)) = (&rec.question, &rec.answer) else {
                    return Err(data_error(format!(
                        "{}: record {} has no question/answer fields",
                        args.gt.display(),
                        t.id
                    )));
                };
                let reward = vqa_reward(
                    q,
                    &parse_transcript(&t.transcript),
                    a,
                    rec.mode.unwrap_or_default(),
                );
                lines.push(ScoreLine { id: t.id, reward });
            }
        }
    }
    if let Some(out) = &args.out {
        write_jsonl(out, &lines)?;
    }
    let n = lines.len().max(1) as f64;
    let mean = |f: fn(&RewardBreakdown) -> f64| lines.iter().map(|l| f(&l.reward)).sum::<f64>() / n;
    print_json(&ScoreSummary {
        count: lines.len(),
        mean_tac: mean(|r| r.tac),
        mean_acc: mean(|r| r.acc),
        mean_format: mean(|r| r.format),
        mean_total: mean(|r| r.total),
    })
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Curate(a) => curate(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::EnsembleEval(a) => ensemble_eval(a),
        Command::Score(a) => score(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
