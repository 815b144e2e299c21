//! Line-delimited dataset, transcript-log and id-list files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::env::{oracle_resolve, vqa_from_scene, Expression, Scene, SceneObject};
use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::rewards::AnswerMode;

/// On-disk form of a scene. VQA fields are optional and ignored by the
/// grounding pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub id: u64,
    pub width: u32,
    pub height: u32,
    pub objects: Vec<SceneObject>,
    pub expr: Expression,
    pub gt: BBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<AnswerMode>,
}

impl SceneRecord {
    pub fn from_scene(scene: &Scene, with_vqa: bool) -> Self {
        let vqa = with_vqa.then(|| vqa_from_scene(scene));
        SceneRecord {
            id: scene.id,
            width: scene.width,
            height: scene.height,
            objects: scene.objects.clone(),
            expr: scene.expression,
            gt: scene.gt_bbox(),
            question: vqa.as_ref().map(|v| v.question.clone()),
            answer: vqa.as_ref().map(|v| v.answer.clone()),
            mode: vqa.map(|v| v.mode),
        }
    }

    /// Rebuilds the scene; the stored `gt` must be one of the objects and
    /// must be the one the expression resolves to.
    pub fn into_scene(self) -> Result<Scene> {
        let bad = |reason: &str| Error::InconsistentScene {
            id: self.id,
            reason: reason.to_string(),
        };
        let gt_index = self
            .objects
            .iter()
            .position(|o| o.bbox == self.gt)
            .ok_or_else(|| bad("gt box is not one of the objects"))?;
        let scene = Scene::new(
            self.id,
            self.width,
            self.height,
            self.objects,
            self.expr,
            gt_index,
        )?;
        oracle_resolve(&scene)?;
        Ok(scene)
    }
}

/// One logged response for offline scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub id: u64,
    pub transcript: String,
}

/// Reads one JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::format(path, i + 1, e))?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item).expect("record serializes");
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_scenes(path: &Path, scenes: &[Scene], with_vqa: bool) -> Result<()> {
    let records: Vec<SceneRecord> = scenes
        .iter()
        .map(|s| SceneRecord::from_scene(s, with_vqa))
        .collect();
    write_jsonl(path, &records)
}

/// Reads and validates a dataset file. Errors name the offending line.
pub fn read_scenes(path: &Path) -> Result<Vec<Scene>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SceneRecord =
            serde_json::from_str(&line).map_err(|e| Error::format(path, i + 1, e))?;
        out.push(
            rec.into_scene()
                .map_err(|e| Error::format(path, i + 1, e))?,
        );
    }
    Ok(out)
}
