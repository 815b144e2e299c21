//! Synthetic referring-grounding scenes.
//!
//! A scene is a canvas with 2..=12 coloured boxes and a structured referring
//! expression (optional colour filter, optional size filter, selector) that
//! picks out exactly one of them. Harder scenes carry more objects, fewer
//! distinct colours, and distractors placed a few pixels from each other so
//! that the selector ranking becomes sensitive to input resolution.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::rng::{self, tags};
use crate::ttrs::rescale_dims;

/// Feature dimension produced by [`Scene::candidate_features`].
pub const FEATURE_DIM: usize = 8;

pub type Features = [f64; FEATURE_DIM];

pub const MAX_OBJECTS: usize = 12;

pub const COLOR_NAMES: [&str; 6] = ["red", "green", "blue", "yellow", "purple", "orange"];

pub const CANVASES: [(u32, u32); 3] = [(640, 480), (1280, 720), (1920, 1080)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SizeClass {
    Small,
    Medium,
    Large,
}

impl SizeClass {
    pub const ALL: [SizeClass; 3] = [SizeClass::Small, SizeClass::Medium, SizeClass::Large];

    pub fn as_index(self) -> u8 {
        self as u8
    }

    pub fn from_index(i: u8) -> Option<Self> {
        Self::ALL.get(i as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            SizeClass::Small => "small",
            SizeClass::Medium => "medium",
            SizeClass::Large => "large",
        }
    }

    /// Side length range as a fraction of the canvas short side.
    fn side_range(self) -> (f64, f64) {
        match self {
            SizeClass::Small => (0.04, 0.09),
            SizeClass::Medium => (0.11, 0.19),
            SizeClass::Large => (0.22, 0.34),
        }
    }
}

impl Serialize for SizeClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.as_index())
    }
}

impl<'de> Deserialize<'de> for SizeClass {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let i = u8::deserialize(d)?;
        SizeClass::from_index(i)
            .ok_or_else(|| serde::de::Error::custom(format!("size class {i} out of range")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selector {
    Leftmost,
    Rightmost,
    Largest,
    None,
}

impl Selector {
    pub const ALL: [Selector; 4] = [
        Selector::Leftmost,
        Selector::Rightmost,
        Selector::Largest,
        Selector::None,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Expression {
    pub color: Option<u8>,
    pub size: Option<SizeClass>,
    pub selector: Selector,
}

impl Expression {
    pub fn matches(&self, obj: &SceneObject) -> bool {
        self.color.is_none_or(|c| c == obj.color) && self.size.is_none_or(|s| s == obj.size)
    }

    /// Human-readable rendering, e.g. "the leftmost small red object".
    pub fn describe(&self) -> String {
        let mut words = vec!["the"];
        match self.selector {
            Selector::Leftmost => words.push("leftmost"),
            Selector::Rightmost => words.push("rightmost"),
            Selector::Largest => words.push("largest"),
            Selector::None => {}
        }
        if let Some(s) = self.size {
            words.push(s.name());
        }
        if let Some(c) = self.color {
            words.push(
                COLOR_NAMES
                    .get(c as usize)
                    .copied()
                    .unwrap_or("odd-coloured"),
            );
        }
        words.push("object");
        words.join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub bbox: BBox,
    pub color: u8,
    pub size: SizeClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub id: u64,
    pub width: u32,
    pub height: u32,
    pub objects: Vec<SceneObject>,
    pub expression: Expression,
    pub gt_index: usize,
}

/// Selector ordering key: smaller is better. Geometry is supplied so the
/// same ordering can be applied to quantized boxes.
fn selector_cmp(selector: Selector, a: &BBox, b: &BBox) -> Ordering {
    let primary = match selector {
        Selector::Leftmost => a.x1().total_cmp(&b.x1()),
        Selector::Rightmost => b.x2().total_cmp(&a.x2()),
        Selector::Largest => b.area().total_cmp(&a.area()),
        Selector::None => Ordering::Equal,
    };
    primary.then(a.y1().total_cmp(&b.y1()))
}

/// Index of the unique object picked by `expr`, or a description of why the
/// expression is ambiguous.
fn resolve(objects: &[SceneObject], expr: &Expression) -> std::result::Result<usize, String> {
    let matching: Vec<usize> = (0..objects.len())
        .filter(|&i| expr.matches(&objects[i]))
        .collect();
    match (matching.len(), expr.selector) {
        (0, _) => Err("no object matches the expression".into()),
        (1, _) => Ok(matching[0]),
        (n, Selector::None) => Err(format!("{n} objects match and there is no selector")),
        (_, sel) => {
            let mut sorted = matching.clone();
            sorted.sort_by(|&a, &b| selector_cmp(sel, &objects[a].bbox, &objects[b].bbox));
            let (first, second) = (sorted[0], sorted[1]);
            if selector_cmp(sel, &objects[first].bbox, &objects[second].bbox) == Ordering::Equal {
                Err("selector ties between two objects".into())
            } else {
                Ok(first)
            }
        }
    }
}

impl Scene {
    /// Builds a scene and checks that the expression resolves uniquely to
    /// `gt_index`.
    pub fn new(
        id: u64,
        width: u32,
        height: u32,
        objects: Vec<SceneObject>,
        expression: Expression,
        gt_index: usize,
    ) -> Result<Self> {
        let scene = Scene {
            id,
            width,
            height,
            objects,
            expression,
            gt_index,
        };
        scene.check()?;
        Ok(scene)
    }

    fn check(&self) -> Result<()> {
        let bad = |reason: String| Error::InconsistentScene {
            id: self.id,
            reason,
        };
        if self.width == 0 || self.height == 0 {
            return Err(bad("empty canvas".into()));
        }
        if !(2..=MAX_OBJECTS).contains(&self.objects.len()) {
            return Err(bad(format!(
                "{} objects, expected 2..=12",
                self.objects.len()
            )));
        }
        for (i, o) in self.objects.iter().enumerate() {
            let b = &o.bbox;
            if b.x1() < 0.0
                || b.y1() < 0.0
                || b.x2() > self.width as f64
                || b.y2() > self.height as f64
            {
                return Err(bad(format!("object {i} lies outside the canvas")));
            }
        }
        let resolved = resolve(&self.objects, &self.expression).map_err(bad)?;
        if resolved != self.gt_index {
            return Err(bad(format!(
                "expression resolves to object {resolved}, not {}",
                self.gt_index
            )));
        }
        Ok(())
    }

    pub fn gt_bbox(&self) -> BBox {
        self.objects[self.gt_index].bbox
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    /// Canvas dimensions after resizing the short side to `scale`.
    pub fn scaled_dims(&self, scale: u32) -> (u32, u32) {
        rescale_dims(self.width, self.height, scale.max(1)).expect("scene dims are positive")
    }

    /// Object boxes as seen on the resized canvas: corners scaled and
    /// rounded to whole pixels of that canvas.
    pub fn quantized_boxes(&self, scale: u32) -> Vec<BBox> {
        let (ws, hs) = self.scaled_dims(scale);
        let sx = ws as f64 / self.width as f64;
        let sy = hs as f64 / self.height as f64;
        self.objects
            .iter()
            .map(|o| {
                let b = &o.bbox;
                BBox::new(
                    (b.x1() * sx).round(),
                    (b.y1() * sy).round(),
                    (b.x2() * sx).round(),
                    (b.y2() * sy).round(),
                )
                .expect("rounding preserves corner order")
            })
            .collect()
    }

    /// Per-object features at the given short-side resolution:
    ///
    /// | idx | feature                                               |
    /// |-----|-------------------------------------------------------|
    /// | 0,1 | box centre (x, y), normalized by the resized canvas   |
    /// | 2,3 | box width, height, normalized                         |
    /// | 4   | colour matches the expression (1 if no colour filter) |
    /// | 5   | size matches the expression (1 if no size filter)     |
    /// | 6   | selector rank among matching objects, 1 = best        |
    /// | 7   | box area relative to the largest box in the scene     |
    ///
    /// All geometry, including the selector rank, is computed from the
    /// quantized boxes, so features change with `scale`.
    pub fn candidate_features(&self, scale: u32) -> Vec<Features> {
        let (ws, hs) = self.scaled_dims(scale);
        let (ws, hs) = (ws as f64, hs as f64);
        let boxes = self.quantized_boxes(scale);
        let expr = &self.expression;
        let matching: Vec<usize> = (0..self.objects.len())
            .filter(|&i| expr.matches(&self.objects[i]))
            .collect();
        let max_area = boxes.iter().map(BBox::area).fold(0.0, f64::max);
        self.objects
            .iter()
            .zip(&boxes)
            .enumerate()
            .map(|(i, (obj, q))| {
                let rank = if !matching.contains(&i) {
                    0.0
                } else if matching.len() == 1 || expr.selector == Selector::None {
                    1.0
                } else {
                    let better = matching
                        .iter()
                        .filter(|&&j| selector_cmp(expr.selector, &boxes[j], q) == Ordering::Less)
                        .count();
                    1.0 - better as f64 / (matching.len() - 1) as f64
                };
                [
                    ((q.x1() + q.x2()) / 2.0 / ws).clamp(0.0, 1.0),
                    ((q.y1() + q.y2()) / 2.0 / hs).clamp(0.0, 1.0),
                    (q.width() / ws).clamp(0.0, 1.0),
                    (q.height() / hs).clamp(0.0, 1.0),
                    if expr.color.is_none_or(|c| c == obj.color) {
                        1.0
                    } else {
                        0.0
                    },
                    if expr.size.is_none_or(|s| s == obj.size) {
                        1.0
                    } else {
                        0.0
                    },
                    rank,
                    if max_area > 0.0 {
                        q.area() / max_area
                    } else {
                        0.0
                    },
                ]
            })
            .collect()
    }
}

/// Ground-truth box of the referenced object; re-resolves the expression and
/// fails if it is not unique or disagrees with `gt_index`.
pub fn oracle_resolve(scene: &Scene) -> Result<BBox> {
    scene.check()?;
    Ok(scene.gt_bbox())
}

fn random_box<R: Rng>(rng: &mut R, width: u32, height: u32, size: SizeClass) -> BBox {
    let short = width.min(height) as f64;
    let (lo, hi) = size.side_range();
    let w = (rng.gen_range(lo..hi) * short).round().max(2.0);
    let h = (rng.gen_range(lo..hi) * short).round().max(2.0);
    let x1 = rng.gen_range(0.0..=(width as f64 - w)).round();
    let y1 = rng.gen_range(0.0..=(height as f64 - h)).round();
    BBox::new(x1, y1, x1 + w, y1 + h).expect("positive extents")
}

/// Box of the same size class as `near`, shifted a few pixels horizontally
/// and partially overlapping it vertically.
fn distractor_box<R: Rng>(rng: &mut R, width: u32, height: u32, near: &BBox) -> BBox {
    let cap = 0.4 * width.min(height) as f64;
    let jitter = |r: &mut R, v: f64| (v * r.gen_range(0.9..1.1)).round().clamp(2.0, cap);
    let w = jitter(rng, near.width());
    let h = jitter(rng, near.height());
    let dx = rng.gen_range(-4..=4) as f64;
    let dy = near.height() * rng.gen_range(0.4..1.6) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let x1 = (near.x1() + dx).clamp(0.0, width as f64 - w).round();
    let y1 = (near.y1() + dy).clamp(0.0, height as f64 - h).round();
    BBox::new(x1, y1, x1 + w, y1 + h).expect("positive extents")
}

fn candidate_expressions(objects: &[SceneObject], target: usize) -> Vec<(Expression, usize)> {
    let t = &objects[target];
    let mut out = Vec::new();
    for color in [None, Some(t.color)] {
        for size in [None, Some(t.size)] {
            for selector in Selector::ALL {
                let expr = Expression {
                    color,
                    size,
                    selector,
                };
                if color.is_none() && size.is_none() && selector == Selector::None {
                    continue;
                }
                if resolve(objects, &expr) == Ok(target) {
                    let pool = objects.iter().filter(|o| expr.matches(o)).count();
                    out.push((expr, pool));
                }
            }
        }
    }
    out
}

/// Deterministic scene for `(seed, difficulty)`. Difficulty in `[0, 1]`
/// raises object count, colour reuse and distractor proximity.
pub fn generate_scene(id: u64, seed: u64, difficulty: f64) -> Scene {
    let d = if difficulty.is_finite() {
        difficulty.clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mut rng = rng::stream(seed, &[tags::SCENE, id]);
    let (width, height) = *CANVASES.choose(&mut rng).expect("non-empty");
    let lo = 2 + (8.0 * d).floor() as usize;
    let hi = (3 + (9.0 * d).floor() as usize).min(MAX_OBJECTS);
    let palette = ((6.0 - 4.0 * d).round() as usize).clamp(2, COLOR_NAMES.len());
    let cluster_prob = 0.7 * d;

    loop {
        let n = rng.gen_range(lo..=hi);
        let mut colors: Vec<u8> = (0..COLOR_NAMES.len() as u8).collect();
        colors.shuffle(&mut rng);
        colors.truncate(palette);
        let mut objects: Vec<SceneObject> = Vec::with_capacity(n);
        for i in 0..n {
            let obj = if i > 0 && rng.gen_bool(cluster_prob) {
                let near = objects[rng.gen_range(0..i)];
                SceneObject {
                    bbox: distractor_box(&mut rng, width, height, &near.bbox),
                    color: if rng.gen_bool(0.5 + 0.5 * d) {
                        near.color
                    } else {
                        *colors.choose(&mut rng).unwrap()
                    },
                    size: near.size,
                }
            } else {
                let size = *SizeClass::ALL.choose(&mut rng).unwrap();
                SceneObject {
                    bbox: random_box(&mut rng, width, height, size),
                    color: if i < palette {
                        colors[i]
                    } else {
                        *colors.choose(&mut rng).unwrap()
                    },
                    size,
                }
            };
            objects.push(obj);
        }

        let mut targets: Vec<usize> = (0..n).collect();
        targets.shuffle(&mut rng);
        for target in targets {
            let options = candidate_expressions(&objects, target);
            if options.is_empty() {
                continue;
            }
            let (expression, _) = if rng.gen_bool(d) {
                let most = options.iter().map(|o| o.1).max().unwrap();
                let hardest: Vec<_> = options.iter().filter(|o| o.1 == most).collect();
                **hardest.choose(&mut rng).unwrap()
            } else {
                *options.choose(&mut rng).unwrap()
            };
            return Scene::new(id, width, height, objects, expression, target)
                .expect("generator only emits uniquely resolvable scenes");
        }
    }
}

/// Difficulty drawn for scene `id` when a dataset mixes difficulties.
pub fn mixed_difficulty(seed: u64, id: u64) -> f64 {
    rng::stream(seed, &[tags::DIFFICULTY, id]).gen_range(0.0..=1.0)
}

/// `count` scenes with ids `first_id..first_id + count`. A `None` difficulty
/// draws one uniformly per scene.
pub fn generate_dataset(
    count: usize,
    difficulty: Option<f64>,
    seed: u64,
    first_id: u64,
) -> Vec<Scene> {
    (0..count as u64)
        .map(|k| {
            let id = first_id + k;
            let d = difficulty.unwrap_or_else(|| mixed_difficulty(seed, id));
            generate_scene(id, seed, d)
        })
        .collect()
}

/// Templated VQA pair derived from a scene. Even ids ask a closed colour
/// question, odd ids ask for an open description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqaRecord {
    pub id: u64,
    pub question: String,
    pub answer: String,
    pub mode: crate::rewards::AnswerMode,
}

pub fn vqa_from_scene(scene: &Scene) -> VqaRecord {
    let target = &scene.objects[scene.gt_index];
    let color = COLOR_NAMES[target.color as usize % COLOR_NAMES.len()];
    let mut expr = scene.expression;
    if scene.id.is_multiple_of(2) {
        expr.color = None;
        VqaRecord {
            id: scene.id,
            question: format!("What colour is {}?", expr.describe()),
            answer: color.to_string(),
            mode: crate::rewards::AnswerMode::Closed,
        }
    } else {
        VqaRecord {
            id: scene.id,
            question: format!("Describe {}.", expr.describe()),
            answer: format!("a {} {} box", target.size.name(), color),
            mode: crate::rewards::AnswerMode::Open,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(x1: f64, y1: f64, x2: f64, y2: f64) -> BBox {
        BBox::new(x1, y1, x2, y2).unwrap()
    }

    fn obj(bbox: BBox, color: u8, size: SizeClass) -> SceneObject {
        SceneObject { bbox, color, size }
    }

    #[test]
    fn same_seed_same_scene() {
        for d in [0.0, 0.5, 1.0] {
            assert_eq!(generate_scene(3, 99, d), generate_scene(3, 99, d));
        }
        assert_ne!(generate_scene(3, 99, 0.5), generate_scene(4, 99, 0.5));
    }

    #[test]
    fn easy_scenes_are_small_and_distinctly_coloured() {
        for id in 0..500 {
            let s = generate_scene(id, 7, 0.0);
            assert!(
                (2..=3).contains(&s.len()),
                "scene {id} has {} objects",
                s.len()
            );
            let mut colors: Vec<u8> = s.objects.iter().map(|o| o.color).collect();
            colors.sort();
            colors.dedup();
            assert_eq!(colors.len(), s.len());
        }
    }

    #[test]
    fn harder_scenes_have_more_objects() {
        let mean = |d: f64| {
            (0..10_000u64)
                .map(|id| generate_scene(id, 1, d).len())
                .sum::<usize>() as f64
                / 1e4
        };
        assert!(mean(1.0) > mean(0.0));
    }

    #[test]
    fn generated_scenes_resolve_uniquely_and_fit_canvas() {
        for id in 0..2000 {
            let s = generate_scene(id, 11, mixed_difficulty(11, id));
            let gt = oracle_resolve(&s).unwrap();
            assert_eq!(gt, s.gt_bbox());
            let matching: Vec<_> = s
                .objects
                .iter()
                .filter(|o| s.expression.matches(o))
                .collect();
            assert!(!matching.is_empty());
        }
    }

    #[test]
    fn oracle_resolve_examples() {
        let red = obj(b(10.0, 10.0, 20.0, 20.0), 0, SizeClass::Small);
        let blue = obj(b(30.0, 10.0, 40.0, 20.0), 2, SizeClass::Small);
        let expr = Expression {
            color: Some(0),
            size: None,
            selector: Selector::None,
        };
        let s = Scene::new(1, 100, 100, vec![blue, red], expr, 1).unwrap();
        assert_eq!(oracle_resolve(&s).unwrap(), red.bbox);

        let left = Expression {
            color: None,
            size: None,
            selector: Selector::Leftmost,
        };
        let s = Scene::new(2, 100, 100, vec![blue, red], left, 1).unwrap();
        assert_eq!(oracle_resolve(&s).unwrap(), red.bbox);

        // equal x1: the smaller y1 wins
        let low = obj(b(10.0, 50.0, 20.0, 60.0), 1, SizeClass::Small);
        let s = Scene::new(3, 100, 100, vec![low, red], left, 1).unwrap();
        assert_eq!(oracle_resolve(&s).unwrap(), red.bbox);
    }

    #[test]
    fn ambiguous_scenes_are_rejected() {
        let a = obj(b(10.0, 10.0, 20.0, 20.0), 0, SizeClass::Small);
        let c = obj(b(30.0, 10.0, 40.0, 20.0), 0, SizeClass::Small);
        let expr = Expression {
            color: Some(0),
            size: None,
            selector: Selector::None,
        };
        assert!(Scene::new(1, 100, 100, vec![a, c], expr, 0).is_err());
        let wrong = Expression {
            color: None,
            size: None,
            selector: Selector::Rightmost,
        };
        assert!(Scene::new(1, 100, 100, vec![a, c], wrong, 0).is_err());
        let outside = obj(b(90.0, 90.0, 120.0, 95.0), 1, SizeClass::Small);
        let left = Expression {
            color: None,
            size: None,
            selector: Selector::Leftmost,
        };
        assert!(Scene::new(1, 100, 100, vec![a, outside], left, 0).is_err());
        let mut s = Scene::new(1, 100, 100, vec![a, c], left, 0).unwrap();
        s.gt_index = 1;
        assert!(oracle_resolve(&s).is_err());
    }

    #[test]
    fn native_scale_is_lossless() {
        let s = generate_scene(5, 3, 0.7);
        let native = s.width.min(s.height);
        assert_eq!(
            s.quantized_boxes(native),
            s.objects.iter().map(|o| o.bbox).collect::<Vec<_>>()
        );
        let f = s.candidate_features(native);
        let (w, h) = (s.width as f64, s.height as f64);
        for (fv, o) in f.iter().zip(&s.objects) {
            assert_eq!(fv[0], (o.bbox.x1() + o.bbox.x2()) / 2.0 / w);
            assert_eq!(fv[2], o.bbox.width() / w);
            assert_eq!(fv[3], o.bbox.height() / h);
        }
    }

    #[test]
    fn identical_objects_identical_features() {
        let a = obj(b(10.0, 10.0, 20.0, 20.0), 0, SizeClass::Small);
        let t = obj(b(50.0, 50.0, 70.0, 70.0), 1, SizeClass::Medium);
        let expr = Expression {
            color: Some(1),
            size: None,
            selector: Selector::None,
        };
        let s = Scene::new(1, 100, 100, vec![a, t, a], expr, 1).unwrap();
        let f = s.candidate_features(64);
        assert_eq!(f[0], f[2]);
        assert_ne!(f[0], f[1]);
    }

    #[test]
    fn quantization_depends_on_scale() {
        // 1280x720 canvas; a 3px-wide box collapses at short side 56 but not at 672
        let thin = obj(b(100.0, 100.0, 103.0, 200.0), 0, SizeClass::Small);
        let other = obj(b(500.0, 100.0, 600.0, 200.0), 1, SizeClass::Medium);
        let expr = Expression {
            color: Some(0),
            size: None,
            selector: Selector::None,
        };
        let s = Scene::new(1, 1280, 720, vec![thin, other], expr, 0).unwrap();
        // at 56: x scale 100/1280... short side 720 -> 56, long side 1280*56/720 = 99.56 -> 100
        // corners 100*100/1280 = 7.81 -> 8 and 103*100/1280 = 8.05 -> 8: zero width
        assert_eq!(s.candidate_features(56)[0][2], 0.0);
        // at 672: long side 1195; 93.36 -> 93 and 96.16 -> 96: width 3
        assert_eq!(s.candidate_features(672)[0][2], 3.0 / 1195.0);
    }

    #[test]
    fn features_in_unit_range_and_target_ranked_first() {
        for id in 0..500 {
            let s = generate_scene(id, 5, mixed_difficulty(5, id));
            let native = s.width.min(s.height);
            for scale in [56, 336, 672, native] {
                let f = s.candidate_features(scale);
                assert_eq!(f, s.candidate_features(scale));
                assert!(f.iter().flatten().all(|v| (0.0..=1.0).contains(v)));
            }
            let f = s.candidate_features(native);
            let t = &f[s.gt_index];
            assert_eq!((t[4], t[5], t[6]), (1.0, 1.0, 1.0));
            for (i, fv) in f.iter().enumerate() {
                if i != s.gt_index {
                    assert!(
                        fv[4] + fv[5] + fv[6] < 3.0,
                        "scene {id}: object {i} ties target"
                    );
                }
            }
        }
    }

    #[test]
    fn vqa_records_are_templated() {
        let s = generate_scene(4, 2, 0.3);
        let v = vqa_from_scene(&s);
        assert_eq!(v.mode, crate::rewards::AnswerMode::Closed);
        assert!(COLOR_NAMES.contains(&v.answer.as_str()));
        let s = generate_scene(5, 2, 0.3);
        assert_eq!(vqa_from_scene(&s).mode, crate::rewards::AnswerMode::Open);
    }
}
