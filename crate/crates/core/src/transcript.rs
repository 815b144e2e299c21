//! Parsing of `<think>…</think><answer>…</answer>` model output and the
//! structural format reward.

use std::sync::OnceLock;

use regex::Regex;

use crate::geometry::BBox;

pub const THINK_OPEN: &str = "<think>";
pub const THINK_CLOSE: &str = "</think>";
pub const ANSWER_OPEN: &str = "<answer>";
pub const ANSWER_CLOSE: &str = "</answer>";

/// A parsed model output. Spans are empty and boxes absent when the
/// think/answer blocks cannot be located in order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Transcript {
    pub raw: String,
    pub think_text: String,
    pub answer_text: String,
    pub think_bbox: Option<BBox>,
    pub answer_bbox: Option<BBox>,
}

impl Transcript {
    pub fn from_bytes(raw: &[u8]) -> Self {
        parse_transcript(&String::from_utf8_lossy(raw))
    }

    pub fn is_well_formed(&self) -> bool {
        format_reward(&self.raw) == 1.0
    }
}

/// Returns `(start, end)` byte offsets of the content between the first
/// `open` found at or after `from` and the first following `close`.
fn span_after(raw: &str, from: usize, open: &str, close: &str) -> Option<(usize, usize)> {
    let start = from + raw[from..].find(open)? + open.len();
    let end = start + raw[start..].find(close)?;
    Some((start, end))
}

/// Locates the first think block, then the first answer block after it.
/// Never fails; malformed input yields empty spans and absent boxes.
pub fn parse_transcript(raw: &str) -> Transcript {
    let spans = span_after(raw, 0, THINK_OPEN, THINK_CLOSE).and_then(|think| {
        let after = think.1 + THINK_CLOSE.len();
        span_after(raw, after, ANSWER_OPEN, ANSWER_CLOSE).map(|answer| (think, answer))
    });
    match spans {
        Some(((ts, te), (as_, ae))) => {
            let think_text = raw[ts..te].to_string();
            let answer_text = raw[as_..ae].to_string();
            Transcript {
                raw: raw.to_string(),
                think_bbox: extract_bbox(&think_text),
                answer_bbox: extract_bbox(&answer_text),
                think_text,
                answer_text,
            }
        }
        None => Transcript {
            raw: raw.to_string(),
            ..Default::default()
        },
    }
}

fn quad_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        let n = r"\s*(-?\d+(?:\.\d+)?)\s*";
        Regex::new(&format!(r"\({n},{n},{n},{n}\)|\[{n},{n},{n},{n}\]")).unwrap()
    })
}

/// Last parenthesized or bracketed numeric quadruple `(x1, y1, x2, y2)` in
/// `span` that forms a valid box.
pub fn extract_bbox(span: &str) -> Option<BBox> {
    quad_regex()
        .captures_iter(span)
        .filter_map(|caps| {
            let nums: Vec<f64> = caps
                .iter()
                .skip(1)
                .flatten()
                .filter_map(|m| m.as_str().parse().ok())
                .collect();
            match nums[..] {
                [x1, y1, x2, y2] => BBox::new(x1, y1, x2, y2).ok(),
                _ => None,
            }
        })
        .last()
}

fn format_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^\s*<think>(?s:.+)</think>\s*<answer>(?s:.+)</answer>\s*$").unwrap()
    })
}

/// 1.0 iff `raw` is exactly one non-empty think block followed by one
/// non-empty answer block, with only whitespace around them.
pub fn format_reward(raw: &str) -> f64 {
    let single_tags = [THINK_OPEN, THINK_CLOSE, ANSWER_OPEN, ANSWER_CLOSE]
        .iter()
        .all(|tag| raw.matches(tag).count() == 1);
    if single_tags && format_regex().is_match(raw) {
        1.0
    } else {
        0.0
    }
}

/// Renders a box the way the policy writes it: `(x1, y1, x2, y2)`.
pub fn render_bbox(b: &BBox) -> String {
    format!("({}, {}, {}, {})", b.x1(), b.y1(), b.x2(), b.y2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(x1: f64, y1: f64, x2: f64, y2: f64) -> BBox {
        BBox::new(x1, y1, x2, y2).unwrap()
    }

    #[test]
    fn parses_well_formed() {
        let t = parse_transcript("<think>box at (1, 2, 3, 4)</think><answer>(1, 2, 3, 4)</answer>");
        assert_eq!(t.think_text, "box at (1, 2, 3, 4)");
        assert_eq!(t.answer_text, "(1, 2, 3, 4)");
        assert_eq!(t.think_bbox, Some(b(1.0, 2.0, 3.0, 4.0)));
        assert_eq!(t.answer_bbox, Some(b(1.0, 2.0, 3.0, 4.0)));
    }

    #[test]
    fn out_of_order_and_missing_tags_give_empty_spans() {
        for raw in [
            "<answer>x</answer><think>y</think>",
            "no tags at all",
            "<think>a</think>",
        ] {
            let t = parse_transcript(raw);
            assert!(t.think_text.is_empty() && t.answer_text.is_empty(), "{raw}");
            assert!(t.think_bbox.is_none() && t.answer_bbox.is_none());
            assert_eq!(t.raw, raw);
        }
    }

    #[test]
    fn lenient_parse_tolerates_surrounding_text() {
        let t =
            parse_transcript("preamble <think>t</think> junk <answer>[0, 0, 2, 2]</answer> tail");
        assert_eq!(t.think_text, "t");
        assert_eq!(t.answer_bbox, Some(b(0.0, 0.0, 2.0, 2.0)));
        assert_eq!(format_reward(&t.raw), 0.0);
    }

    #[test]
    fn extract_bbox_examples() {
        assert_eq!(
            extract_bbox("maybe (0,0,5,5), final (10, 20, 110, 220)"),
            Some(b(10.0, 20.0, 110.0, 220.0))
        );
        assert_eq!(extract_bbox("coordinates (5, 5, 1, 1)"), None);
        assert_eq!(extract_bbox(""), None);
        assert_eq!(
            extract_bbox("[1.5, 2, 3.25, 4]"),
            Some(b(1.5, 2.0, 3.25, 4.0))
        );
        // mismatched brackets are not a quadruple
        assert_eq!(extract_bbox("(1, 2, 3, 4]"), None);
        // an inverted trailing quadruple does not hide an earlier valid one
        assert_eq!(
            extract_bbox("(0, 0, 5, 5) then (9, 9, 1, 1)"),
            Some(b(0.0, 0.0, 5.0, 5.0))
        );
    }

    #[test]
    fn format_reward_examples() {
        assert_eq!(format_reward("<think>a</think><answer>b</answer>"), 1.0);
        assert_eq!(
            format_reward("  <think>a</think>\n<answer>b</answer>\n"),
            1.0
        );
        assert_eq!(format_reward("<think>a</think>"), 0.0);
        assert_eq!(
            format_reward("<think>a</think><answer>b</answer><answer>c</answer>"),
            0.0
        );
        assert_eq!(format_reward("<think></think><answer>b</answer>"), 0.0);
        assert_eq!(format_reward("x<think>a</think><answer>b</answer>"), 0.0);
        assert_eq!(format_reward("<THINK>a</THINK><answer>b</answer>"), 0.0);
    }

    #[test]
    fn render_round_trips() {
        let x = b(10.0, 20.5, 110.0, 220.0);
        assert_eq!(extract_bbox(&render_bbox(&x)), Some(x));
    }

    proptest! {
        #[test]
        fn parse_is_total(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
            let _ = Transcript::from_bytes(&bytes);
        }

        #[test]
        fn well_formed_implies_nonempty_spans(
            pre in "[ \t\n]{0,3}", think in ".{0,20}", mid in "[ \n]{0,2}", answer in ".{0,20}",
        ) {
            let raw = format!("{pre}<think>{think}</think>{mid}<answer>{answer}</answer>");
            if format_reward(&raw) == 1.0 {
                let t = parse_transcript(&raw);
                prop_assert!(!t.think_text.is_empty());
                prop_assert!(!t.answer_text.is_empty());
            }
        }

        #[test]
        fn tag_soup_never_breaks_invariant(parts in proptest::collection::vec(
            prop_oneof![Just("<think>"), Just("</think>"), Just("<answer>"), Just("</answer>"), Just("x"), Just(" ")], 0..12)) {
            let raw: String = parts.concat();
            if format_reward(&raw) == 1.0 {
                let t = parse_transcript(&raw);
                prop_assert!(!t.think_text.is_empty() && !t.answer_text.is_empty());
            }
        }
    }
}
