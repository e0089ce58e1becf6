//! Turns free-form model answers into intent labels.
//!
//! Answers are matched to slots by a leading ordinal ("3." or "3)") or by a
//! header ("Fairness: unfair"); a header wins over the ordinal, so labelled
//! answers may come in any order. Each slot gets its own status, and a
//! failed slot never discards the others.

use std::collections::{BTreeMap, BTreeSet};

use nint_core::taxonomy::normalize;
use nint_core::{
    canonicalize_label, BeliefLabel, Desire, DesireLabel, Effect, Fairness, IntentAnnotation, LabelSlot, LabelValue,
    PlanLabel, Polarity, PolarityLabel, ReactionLabel, Stance, Vocabulary,
};
use serde::Serialize;
use thiserror::Error;

use crate::prompt::slot_header;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SlotStatus {
    Parsed,
    /// No answer was found for the slot.
    Missing,
    /// An answer was found but does not map onto the label set.
    Invalid { raw: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("article {article_id}: could not parse slot {slot}")]
pub struct ParseFailure {
    pub article_id: String,
    pub slot: LabelSlot,
}

/// Slot values recovered so far; `None` where the slot failed or was not
/// asked.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PartialAnnotation {
    pub belief_target: Option<String>,
    pub stance: Option<Stance>,
    pub frames: Option<BTreeSet<String>>,
    pub persuasion: Option<bool>,
    pub fairness: Option<Fairness>,
    pub target_entity: Option<String>,
    pub target_effect: Option<Effect>,
    pub social_debate: Option<bool>,
    pub opinion_shift: Option<bool>,
    pub emotions: Option<BTreeSet<String>>,
    pub desires: Option<BTreeSet<Desire>>,
    pub polarity: Option<Polarity>,
}

impl PartialAnnotation {
    /// Full annotation when every slot is filled.
    pub fn complete(&self, annotator_id: &str) -> Option<IntentAnnotation> {
        Some(IntentAnnotation {
            annotator_id: annotator_id.to_string(),
            belief: BeliefLabel {
                target: self.belief_target.clone().unwrap_or_default(),
                stance: self.stance?,
            },
            plan: PlanLabel {
                fairness: self.fairness?,
                frames: self.frames.clone()?,
                persuasion: self.persuasion?,
            },
            reaction: ReactionLabel {
                target_entity: self.target_entity.clone().unwrap_or_default(),
                target_effect: self.target_effect?,
                social_debate: self.social_debate?,
                opinion_shift: self.opinion_shift?,
                emotions: self.emotions.clone()?,
            },
            desire: DesireLabel::new(self.desires.clone()?).ok()?,
            polarity: PolarityLabel {
                polarity: self.polarity?,
            },
            rationale: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParsedResponse {
    pub values: PartialAnnotation,
    pub statuses: BTreeMap<LabelSlot, SlotStatus>,
}

impl ParsedResponse {
    pub fn failed_slots(&self) -> Vec<LabelSlot> {
        self.statuses
            .iter()
            .filter(|(_, s)| **s != SlotStatus::Parsed)
            .map(|(slot, _)| *slot)
            .collect()
    }

    pub fn all_parsed(&self) -> bool {
        self.statuses.values().all(|s| *s == SlotStatus::Parsed)
    }

    pub fn failures(&self, article_id: &str) -> Vec<ParseFailure> {
        self.failed_slots()
            .into_iter()
            .map(|slot| ParseFailure {
                article_id: article_id.to_string(),
                slot,
            })
            .collect()
    }
}

fn header_aliases(slot: LabelSlot) -> &'static [&'static str] {
    match slot {
        LabelSlot::BeliefStance => &["stance", "belief", "belief stance", "belief label", "belief analysis"],
        LabelSlot::Frames => &["frames", "frame", "framing", "news framing", "news frames"],
        LabelSlot::Persuasion => &["persuasion", "persuasive", "persuasive writing"],
        LabelSlot::Fairness => &["fairness", "fair", "plan", "plan label"],
        LabelSlot::TargetEffect => &[
            "target",
            "target effect",
            "target and effect",
            "targeted individual group",
            "targeted individual",
        ],
        LabelSlot::SocialDebate => &["social debate", "debate"],
        LabelSlot::OpinionShift => &["opinion shift", "opinion change"],
        LabelSlot::Emotions => &["emotions", "emotion", "social emotion", "social emotions"],
        LabelSlot::Desires => &["desires", "desire", "desire label"],
        LabelSlot::Polarity => &["polarity", "intent polarity"],
    }
}

fn header_slot(label: &str) -> Option<LabelSlot> {
    let key = normalize(label);
    LabelSlot::ALL
        .into_iter()
        .find(|s| header_aliases(*s).contains(&key.as_str()) || normalize(slot_header(*s)) == key)
}

/// Splits "12. rest" / "12) rest" / "12: rest" into the ordinal and rest.
fn split_ordinal(line: &str) -> Option<(usize, &str)> {
    let digits = line.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits == 0 {
        return None;
    }
    let rest = &line[digits..];
    let rest = rest
        .strip_prefix('.')
        .or_else(|| rest.strip_prefix(')'))
        .or_else(|| rest.strip_prefix(':'))?;
    Some((line[..digits].parse().ok()?, rest.trim()))
}

fn split_header(text: &str) -> Option<(LabelSlot, &str)> {
    let (label, value) = text.split_once(':')?;
    header_slot(label).map(|slot| (slot, value.trim()))
}

fn clean_line(line: &str) -> &str {
    line.trim()
        .trim_start_matches(|c: char| c == '#' || c == '-' || c == '*' || c == '>' || c.is_whitespace())
        .trim_end_matches('*')
        .trim()
}

/// Raw answer text per slot, first occurrence wins.
fn locate_answers(text: &str, slots: &[LabelSlot]) -> BTreeMap<LabelSlot, String> {
    let mut answers: BTreeMap<LabelSlot, String> = BTreeMap::new();
    let mut pending: Option<LabelSlot> = None;
    for raw_line in text.lines() {
        let line = clean_line(raw_line).replace("**", "");
        if line.is_empty() {
            continue;
        }
        let (ordinal_slot, rest) = match split_ordinal(&line) {
            Some((n, rest)) => (n.checked_sub(1).and_then(|i| slots.get(i)).copied(), rest.to_string()),
            None => (None, line.clone()),
        };
        let (slot, value) = match split_header(&rest) {
            Some((s, v)) if slots.contains(&s) => (Some(s), v.to_string()),
            _ => (ordinal_slot, rest.clone()),
        };
        match slot {
            Some(s) => {
                if answers.contains_key(&s) {
                    pending = None;
                    continue;
                }
                pending = value.is_empty().then_some(s);
                answers.insert(s, value);
            }
            None => {
                // A bare line right after an empty labelled answer continues it.
                if let Some(s) = pending.take() {
                    answers.insert(s, line.clone());
                }
            }
        }
    }
    answers.retain(|_, v| !v.trim().is_empty());
    answers
}

/// Last polarity word in free text ("not harmful" counts as unharmful).
fn scan_polarity(text: &str) -> Option<Polarity> {
    let words: Vec<String> = normalize(text).split(' ').map(String::from).collect();
    let mut found = None;
    for (i, w) in words.iter().enumerate() {
        let negated = i > 0 && matches!(words[i - 1].as_str(), "not" | "non");
        match w.as_str() {
            "unharmful" | "harmless" | "nonharmful" => found = Some(Polarity::Unharmful),
            "harmful" if negated => found = Some(Polarity::Unharmful),
            "harmful" => found = Some(Polarity::Harmful),
            _ => {}
        }
    }
    found
}

fn canonical_single(raw: &str, slot: LabelSlot, vocab: &Vocabulary) -> Option<LabelValue> {
    let raw = raw.trim().trim_end_matches('.');
    if let Ok(v) = canonicalize_label(raw, slot, vocab) {
        return Some(v);
    }
    // "Yes, it uses loaded language" / "unfair - one-sided sourcing".
    let head = raw
        .split([',', ';', '.', '('])
        .next()
        .unwrap_or(raw)
        .split(" - ")
        .next()
        .unwrap_or(raw);
    if let Ok(v) = canonicalize_label(head, slot, vocab) {
        return Some(v);
    }
    let first = head.split_whitespace().next()?;
    canonicalize_label(first, slot, vocab).ok()
}

/// `target | label`, `target, label` or just `label`.
fn split_pair(raw: &str, slot: LabelSlot, vocab: &Vocabulary) -> Option<(String, LabelValue)> {
    if let Some((target, label)) = raw.rsplit_once('|') {
        return canonical_single(label, slot, vocab).map(|v| (target.trim().to_string(), v));
    }
    if let Ok(v) = canonicalize_label(raw.trim().trim_end_matches('.'), slot, vocab) {
        return Some((String::new(), v));
    }
    for sep in [",", " - ", ":", ";"] {
        if let Some((target, label)) = raw.rsplit_once(sep) {
            if let Ok(v) = canonicalize_label(label.trim().trim_end_matches('.'), slot, vocab) {
                return Some((target.trim().to_string(), v));
            }
        }
    }
    None
}

fn is_none_answer(raw: &str) -> bool {
    matches!(normalize(raw).as_str(), "none" | "n a" | "na" | "nothing" | "no frames" | "no emotions")
}

/// Comma/semicolon separated items; adjacent pieces are re-joined when the
/// joined text is one vocabulary name (names may contain commas).
fn parse_multi(raw: &str, slot: LabelSlot, vocab: &Vocabulary) -> Option<Vec<LabelValue>> {
    if is_none_answer(raw) {
        return Some(Vec::new());
    }
    let pieces: Vec<&str> = raw
        .split([',', ';', '/'])
        .map(|p| p.trim().trim_end_matches('.').trim())
        .filter(|p| !p.is_empty())
        .collect();
    let mut out = Vec::new();
    let mut i = 0;
    'outer: while i < pieces.len() {
        for j in (i + 1..=pieces.len()).rev() {
            let joined = pieces[i..j].join(", ");
            if let Ok(v) = canonicalize_label(&joined, slot, vocab) {
                out.push(v);
                i = j;
                continue 'outer;
            }
        }
        let parts: Vec<&str> = pieces[i].split(" and ").collect();
        if parts.len() > 1 {
            let values: Option<Vec<LabelValue>> = parts
                .iter()
                .map(|p| canonicalize_label(p.trim(), slot, vocab).ok())
                .collect();
            if let Some(values) = values {
                out.extend(values);
                i += 1;
                continue;
            }
        }
        let item = pieces[i].trim_start_matches("and ").trim();
        out.push(canonicalize_label(item, slot, vocab).ok()?);
        i += 1;
    }
    Some(out)
}

fn apply(values: &mut PartialAnnotation, slot: LabelSlot, raw: &str, vocab: &Vocabulary) -> bool {
    match slot {
        LabelSlot::BeliefStance | LabelSlot::TargetEffect => match split_pair(raw, slot, vocab) {
            Some((target, LabelValue::Stance(s))) => {
                values.belief_target = Some(target);
                values.stance = Some(s);
                true
            }
            Some((target, LabelValue::Effect(e))) => {
                values.target_entity = Some(target);
                values.target_effect = Some(e);
                true
            }
            _ => false,
        },
        LabelSlot::Frames | LabelSlot::Emotions | LabelSlot::Desires => {
            let Some(items) = parse_multi(raw, slot, vocab) else {
                return false;
            };
            match slot {
                LabelSlot::Frames => {
                    values.frames = Some(
                        items
                            .into_iter()
                            .filter_map(|v| match v {
                                LabelValue::Frame(f) => Some(f),
                                _ => None,
                            })
                            .collect(),
                    )
                }
                LabelSlot::Emotions => {
                    values.emotions = Some(
                        items
                            .into_iter()
                            .filter_map(|v| match v {
                                LabelValue::Emotion(e) => Some(e),
                                _ => None,
                            })
                            .collect(),
                    )
                }
                _ => {
                    let set: BTreeSet<Desire> = items
                        .into_iter()
                        .filter_map(|v| match v {
                            LabelValue::Desire(d) => Some(d),
                            _ => None,
                        })
                        .collect();
                    if set.is_empty() {
                        return false;
                    }
                    values.desires = Some(set);
                }
            }
            true
        }
        _ => match canonical_single(raw, slot, vocab) {
            Some(LabelValue::Bool(b)) => {
                match slot {
                    LabelSlot::Persuasion => values.persuasion = Some(b),
                    LabelSlot::SocialDebate => values.social_debate = Some(b),
                    _ => values.opinion_shift = Some(b),
                }
                true
            }
            Some(LabelValue::Fairness(f)) => {
                values.fairness = Some(f);
                true
            }
            Some(LabelValue::Polarity(p)) => {
                values.polarity = Some(p);
                true
            }
            _ => false,
        },
    }
}

pub fn parse_response(text: &str, slots: &[LabelSlot], vocab: &Vocabulary) -> ParsedResponse {
    let answers = locate_answers(text, slots);
    let mut values = PartialAnnotation::default();
    let mut statuses = BTreeMap::new();
    for &slot in slots {
        let status = match answers.get(&slot) {
            Some(raw) if apply(&mut values, slot, raw, vocab) => SlotStatus::Parsed,
            Some(raw) => SlotStatus::Invalid { raw: raw.clone() },
            None => SlotStatus::Missing,
        };
        statuses.insert(slot, status);
    }
    // A one-question prompt may be answered in prose.
    if slots == [LabelSlot::Polarity] && statuses[&LabelSlot::Polarity] != SlotStatus::Parsed {
        if let Some(p) = scan_polarity(text) {
            values.polarity = Some(p);
            statuses.insert(LabelSlot::Polarity, SlotStatus::Parsed);
        }
    }
    ParsedResponse { values, statuses }
}

/// Writes an annotation as a numbered answer list in the format the
/// prompts ask for. [`parse_response`] inverts it.
pub fn render_answers(ann: &IntentAnnotation, slots: &[LabelSlot], vocab: &Vocabulary) -> String {
    let join = |vals: Vec<LabelValue>| {
        if vals.is_empty() {
            "none".to_string()
        } else {
            vals.iter().map(LabelValue::render).collect::<Vec<_>>().join("; ")
        }
    };
    slots
        .iter()
        .enumerate()
        .map(|(i, &slot)| {
            let vals = ann.slot_values(slot, vocab);
            let answer = match slot {
                LabelSlot::BeliefStance => format!("{} | {}", ann.belief.target, join(vals)),
                LabelSlot::TargetEffect => format!("{} | {}", ann.reaction.target_entity, join(vals)),
                _ => join(vals),
            };
            format!("{}. {}", i + 1, answer)
        })
        .collect::<Vec<_>>()
        .join("\n")
}
