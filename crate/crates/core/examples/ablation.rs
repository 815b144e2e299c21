//! Trains the full method and the plain ablation over several seeds and
//! prints held-out accuracy at each scale policy.

use std::time::Instant;

use taco_core::trainer::{default_eval_set, default_train_pool};
use taco_core::{evaluate, run_training, ScalePolicy, ScaleSet, TrainConfig};

fn main() {
    let seeds: Vec<u64> = std::env::args()
        .skip(1)
        .map(|s| s.parse().unwrap())
        .collect();
    let seeds = if seeds.is_empty() {
        vec![0, 1, 2, 3, 4]
    } else {
        seeds
    };
    let start = Instant::now();
    for seed in seeds {
        for (name, base) in [
            ("taco", TrainConfig::default()),
            ("plain", TrainConfig::plain_grpo()),
        ] {
            let cfg = TrainConfig {
                seed,
                eval_every: 0,
                ..base
            };
            let eval = default_eval_set(&cfg);
            let run = run_training(&cfg, default_train_pool(&cfg), &eval, None).unwrap();
            let single: Vec<f64> = cfg
                .scales
                .targets()
                .iter()
                .map(|&s| evaluate(&run.policy, &eval, &ScalePolicy::Single(s)).acc_at_05)
                .collect();
            let ttme = evaluate(
                &run.policy,
                &eval,
                &ScalePolicy::Ensemble(ScaleSet::default()),
            )
            .acc_at_05;
            let last = run.metrics.last().unwrap();
            println!(
                "seed {seed} {name:5} init {:.3} final {:.3} single {:?} ttme {:.3} kl {:.3} dirty {} masked {}",
                run.initial_eval.acc_at_05, run.final_eval.acc_at_05, single, ttme, last.mean_kl,
                run.metrics.iter().map(|m| m.dirty_count).sum::<usize>(),
                run.metrics.iter().map(|m| m.masked_count).sum::<usize>(),
            );
        }
    }
    println!("elapsed {:.1}s", start.elapsed().as_secs_f64());
}
