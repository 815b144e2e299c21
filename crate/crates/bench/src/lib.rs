//! Fixtures shared by the benchmarks.

use taco_core::{generate_dataset, BBox, Scene, TrainConfig, Trainer};

/// `n` box triples spread over a 640x480 canvas, deterministic in `n`.
pub fn box_triples(n: usize) -> Vec<[BBox; 3]> {
    (0..n)
        .map(|i| {
            let f = i as f64;
            let b = |dx: f64, dy: f64| {
                let x = (f * 37.0 + dx) % 560.0;
                let y = (f * 53.0 + dy) % 400.0;
                BBox::new(x, y, x + 40.0 + dx, y + 30.0 + dy).expect("valid box")
            };
            [b(0.0, 0.0), b(7.0, 3.0), b(13.0, 11.0)]
        })
        .collect()
}

pub fn scenes(n: usize) -> Vec<Scene> {
    generate_dataset(n, None, 11, 0)
}

/// Trainer over a small generated pool with curation off.
pub fn trainer() -> Trainer {
    let cfg = TrainConfig {
        curation: false,
        train_count: 200,
        ..Default::default()
    };
    Trainer::new(cfg.clone(), taco_core::trainer::default_train_pool(&cfg)).expect("valid config")
}
