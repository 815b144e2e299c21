//! Rule rewards for grounding (REC) and question answering (VQA) transcripts.
//!
//! REC: the accuracy reward *is* the consistency reward, the triple IoU of
//! the think box, the answer box and the ground truth. VQA: a supervisor
//! scores the think text against the ground truth, and the answer is scored
//! separately by exact match (closed) or normalized edit distance (open).

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::geometry::{iou3, BBox};
use crate::transcript::{format_reward, Transcript};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub tac: f64,
    pub acc: f64,
    pub format: f64,
    pub total: f64,
}

/// Grounding reward: `acc = tac = iou3(think, answer, gt)`; zero when either
/// extracted box is missing.
pub fn rec_reward(t: &Transcript, gt: &BBox) -> RewardBreakdown {
    let tac = match (&t.think_bbox, &t.answer_bbox) {
        (Some(think), Some(answer)) => iou3(think, answer, gt),
        _ => 0.0,
    };
    let format = format_reward(&t.raw);
    RewardBreakdown {
        tac,
        acc: tac,
        format,
        total: tac + format,
    }
}

/// Edit distance over unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - d(a, b) / max(|a|, |b|)` in characters; 1.0 when both are empty.
pub fn edit_similarity(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / longest as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnswerMode {
    #[default]
    Closed,
    Open,
}

fn normalize(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn vqa_accuracy(answer: &str, gt: &str, mode: AnswerMode) -> f64 {
    match mode {
        AnswerMode::Closed => {
            if normalize(answer) == normalize(gt) {
                1.0
            } else {
                0.0
            }
        }
        AnswerMode::Open => edit_similarity(answer, gt),
    }
}

/// Judge that rates how well a reasoning trace supports the reference answer.
/// Implementations must be deterministic for a fixed input and safe to call
/// concurrently.
pub trait SupervisorScorer: Send + Sync {
    fn score(&self, question: &str, think: &str, ground_truth: &str) -> f64;
}

/// Deterministic stand-in judge: token-level F1 between the think text and
/// the ground truth (lowercased, whitespace tokens, multiset overlap).
#[derive(Debug, Clone, Copy, Default)]
pub struct TokenF1Supervisor;

pub fn token_f1(a: &str, b: &str) -> f64 {
    let ta: Vec<String> = a.split_whitespace().map(str::to_lowercase).collect();
    let tb: Vec<String> = b.split_whitespace().map(str::to_lowercase).collect();
    if ta.is_empty() || tb.is_empty() {
        return 0.0;
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &tb {
        *counts.entry(t).or_default() += 1;
    }
    let mut common = 0usize;
    for t in &ta {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / ta.len() as f64;
    let recall = common as f64 / tb.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

impl SupervisorScorer for TokenF1Supervisor {
    fn score(&self, _question: &str, think: &str, ground_truth: &str) -> f64 {
        token_f1(think, ground_truth)
    }
}

/// VQA reward assembly around a supervisor. Out-of-range supervisor scores
/// are clamped into `[0, 1]` and counted.
pub struct VqaRewarder<S> {
    supervisor: S,
    clamped: AtomicUsize,
}

impl<S: SupervisorScorer> VqaRewarder<S> {
    pub fn new(supervisor: S) -> Self {
        VqaRewarder {
            supervisor,
            clamped: AtomicUsize::new(0),
        }
    }

    pub fn reward(
        &self,
        question: &str,
        t: &Transcript,
        gt: &str,
        mode: AnswerMode,
    ) -> RewardBreakdown {
        let raw = self.supervisor.score(question, &t.think_text, gt);
        let tac = if (0.0..=1.0).contains(&raw) {
            raw
        } else {
            self.clamped.fetch_add(1, Ordering::Relaxed);
            log::warn!("supervisor score {raw} outside [0, 1], clamping");
            if raw.is_nan() {
                0.0
            } else {
                raw.clamp(0.0, 1.0)
            }
        };
        let acc = vqa_accuracy(&t.answer_text, gt, mode);
        let format = format_reward(&t.raw);
        RewardBreakdown {
            tac,
            acc,
            format,
            total: tac + acc + format,
        }
    }

    /// Number of supervisor outputs that had to be clamped so far.
    pub fn clamped_count(&self) -> usize {
        self.clamped.load(Ordering::Relaxed)
    }
}

/// Convenience wrapper using the token-F1 judge.
pub fn vqa_reward(question: &str, t: &Transcript, gt: &str, mode: AnswerMode) -> RewardBreakdown {
    VqaRewarder::new(TokenF1Supervisor).reward(question, t, gt, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transcript::parse_transcript;
    use proptest::prelude::*;

    /// Full DP table, kept separate from the rolling-row implementation.
    fn levenshtein_table(a: &str, b: &str) -> usize {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for (i, row) in d.iter_mut().enumerate() {
            row[0] = i;
        }
        for (j, cell) in d[0].iter_mut().enumerate() {
            *cell = j;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let cost = if a[i - 1] == b[j - 1] { 0 } else { 1 };
                d[i][j] = (d[i - 1][j] + 1)
                    .min(d[i][j - 1] + 1)
                    .min(d[i - 1][j - 1] + cost);
            }
        }
        d[a.len()][b.len()]
    }

    fn rec(think: &str, answer: &str) -> Transcript {
        parse_transcript(&format!("<think>{think}</think><answer>{answer}</answer>"))
    }

    #[test]
    fn rec_reward_examples() {
        let gt = BBox::new(4.0, 4.0, 14.0, 14.0).unwrap();
        let r = rec_reward(&rec("at (4, 4, 14, 14)", "(4, 4, 14, 14)"), &gt);
        assert_eq!((r.tac, r.acc, r.format, r.total), (1.0, 1.0, 1.0, 2.0));

        let r = rec_reward(&rec("somewhere", "(4, 4, 14, 14)"), &gt);
        assert_eq!(r.acc, 0.0);
        assert_eq!(r.total, 1.0);

        let r = rec_reward(&rec("(0, 0, 10, 10)", "(2, 2, 12, 12)"), &gt);
        assert!((r.acc - 36.0 / 172.0).abs() < 1e-15);
        assert_eq!(r.tac, r.acc);
    }

    #[test]
    fn levenshtein_examples() {
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("same", "same"), 0);
        assert_eq!(levenshtein_table("kitten", "sitting"), 3);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("naïve", "naive"), 1);
    }

    #[test]
    fn vqa_accuracy_examples() {
        assert_eq!(vqa_accuracy("Cat ", "cat", AnswerMode::Closed), 1.0);
        assert_eq!(
            vqa_accuracy("a  big\tcat", "A big cat", AnswerMode::Closed),
            1.0
        );
        assert_eq!(vqa_accuracy("dog", "cat", AnswerMode::Closed), 0.0);
        assert_eq!(vqa_accuracy("cat", "cat", AnswerMode::Open), 1.0);
        assert_eq!(vqa_accuracy("", "cat", AnswerMode::Open), 0.0);
        assert_eq!(vqa_accuracy("", "", AnswerMode::Open), 1.0);
        assert!((vqa_accuracy("cut", "cat", AnswerMode::Open) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn vqa_reward_examples() {
        let r = vqa_reward(
            "what animal?",
            &rec("cat", "cat"),
            "cat",
            AnswerMode::Closed,
        );
        assert_eq!((r.tac, r.acc, r.format, r.total), (1.0, 1.0, 1.0, 3.0));

        let t = parse_transcript("<think></think><answer>cat</answer>");
        assert_eq!(vqa_reward("q", &t, "cat", AnswerMode::Closed).tac, 0.0);

        // precision 1/5, recall 1/1 -> F1 = 2 * (1/5) / (6/5) = 1/3
        let r = vqa_reward(
            "q",
            &rec("the chart peaks in may", "june"),
            "may",
            AnswerMode::Closed,
        );
        assert!((r.tac - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.acc, 0.0);
    }

    struct Wild(f64);
    impl SupervisorScorer for Wild {
        fn score(&self, _: &str, _: &str, _: &str) -> f64 {
            self.0
        }
    }

    #[test]
    fn out_of_range_supervisor_is_clamped_and_counted() {
        let high = VqaRewarder::new(Wild(1.7));
        let t = rec("x", "y");
        assert_eq!(high.reward("q", &t, "y", AnswerMode::Closed).tac, 1.0);
        assert_eq!(high.clamped_count(), 1);
        let low = VqaRewarder::new(Wild(-0.3));
        assert_eq!(low.reward("q", &t, "y", AnswerMode::Closed).tac, 0.0);
        let nan = VqaRewarder::new(Wild(f64::NAN));
        assert_eq!(nan.reward("q", &t, "y", AnswerMode::Closed).tac, 0.0);
        assert_eq!(nan.clamped_count(), 1);
        let ok = VqaRewarder::new(Wild(0.4));
        ok.reward("q", &t, "y", AnswerMode::Closed);
        assert_eq!(ok.clamped_count(), 0);
    }

    fn small_box() -> impl Strategy<Value = BBox> {
        (0u32..40, 0u32..40, 1u32..24, 1u32..24).prop_map(|(x, y, w, h)| {
            BBox::new(x as f64, y as f64, (x + w) as f64, (y + h) as f64).unwrap()
        })
    }

    proptest! {
        #[test]
        fn levenshtein_matches_table(a in "[abc]{0,10}", b in "[abc]{0,10}") {
            prop_assert_eq!(levenshtein(&a, &b), levenshtein_table(&a, &b));
        }

        #[test]
        fn rewards_in_range_for_arbitrary_bytes(bytes in proptest::collection::vec(any::<u8>(), 0..120), gt in small_box()) {
            let t = Transcript::from_bytes(&bytes);
            let r = rec_reward(&t, &gt);
            prop_assert!((0.0..=1.0).contains(&r.acc) && (0.0..=2.0).contains(&r.total));
            prop_assert!(r.format == 0.0 || r.format == 1.0);
            let v = vqa_reward("q", &t, "some answer", AnswerMode::Open);
            prop_assert!((0.0..=1.0).contains(&v.tac) && (0.0..=1.0).contains(&v.acc));
            prop_assert!((0.0..=3.0).contains(&v.total));
        }

        #[test]
        fn answering_gt_never_lowers_acc(think in small_box(), answer in small_box(), gt in small_box()) {
            prop_assume!(think.intersect(&gt).is_some());
            let render = |x: &BBox| crate::transcript::render_bbox(x);
            let before = rec_reward(&rec(&render(&think), &render(&answer)), &gt).acc;
            let after = rec_reward(&rec(&render(&think), &render(&gt)), &gt).acc;
            prop_assert!(after >= before - 1e-12);
        }
    }
}
