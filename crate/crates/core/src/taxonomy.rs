//! Intent label types, the configurable frame/emotion vocabulary, label
//! canonicalization and the per-dimension target vectors used for training.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelError {
    #[error("unknown label {raw:?} for slot {slot}")]
    UnknownLabel { slot: LabelSlot, raw: String },
    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),
    #[error("invalid annotation: {0}")]
    InvalidAnnotation(String),
}

/// Stance of an article toward its central proposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stance {
    Favor,
    Against,
    Neutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fairness {
    Fair,
    Unfair,
}

/// Effect the article aims to have on its target entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effect {
    Positive,
    Negative,
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Desire {
    PublicInterest,
    PoliticalInterest,
    EconomicInterest,
    PsychologicalFulfillment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Harmful,
    Unharmful,
}

impl Stance {
    /// Tensor order.
    pub const ALL: [Stance; 3] = [Stance::Favor, Stance::Against, Stance::Neutral];

    pub fn render(self) -> &'static str {
        match self {
            Stance::Favor => "favor",
            Stance::Against => "against",
            Stance::Neutral => "neutral",
        }
    }
}

impl Fairness {
    pub const ALL: [Fairness; 2] = [Fairness::Fair, Fairness::Unfair];

    pub fn render(self) -> &'static str {
        match self {
            Fairness::Fair => "fair",
            Fairness::Unfair => "unfair",
        }
    }
}

impl Effect {
    pub const ALL: [Effect; 3] = [Effect::Positive, Effect::Negative, Effect::Neither];

    pub fn render(self) -> &'static str {
        match self {
            Effect::Positive => "positive",
            Effect::Negative => "negative",
            Effect::Neither => "neither",
        }
    }
}

impl Desire {
    pub const ALL: [Desire; 4] = [
        Desire::PublicInterest,
        Desire::PoliticalInterest,
        Desire::EconomicInterest,
        Desire::PsychologicalFulfillment,
    ];

    pub fn render(self) -> &'static str {
        match self {
            Desire::PublicInterest => "public interest",
            Desire::PoliticalInterest => "political interest",
            Desire::EconomicInterest => "economic interest",
            Desire::PsychologicalFulfillment => "psychological fulfillment",
        }
    }
}

impl Polarity {
    pub const ALL: [Polarity; 2] = [Polarity::Harmful, Polarity::Unharmful];

    pub fn render(self) -> &'static str {
        match self {
            Polarity::Harmful => "harmful",
            Polarity::Unharmful => "unharmful",
        }
    }
}

macro_rules! display_via_render {
    ($($t:ty),*) => {$(
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.render())
            }
        }
    )*};
}
display_via_render!(Stance, Fairness, Effect, Desire, Polarity);

/// The ten answer slots of the structured intent questionnaire, in the order
/// they are asked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelSlot {
    BeliefStance,
    Frames,
    Persuasion,
    Fairness,
    TargetEffect,
    SocialDebate,
    OpinionShift,
    Emotions,
    Desires,
    Polarity,
}

impl LabelSlot {
    pub const ALL: [LabelSlot; 10] = [
        LabelSlot::BeliefStance,
        LabelSlot::Frames,
        LabelSlot::Persuasion,
        LabelSlot::Fairness,
        LabelSlot::TargetEffect,
        LabelSlot::SocialDebate,
        LabelSlot::OpinionShift,
        LabelSlot::Emotions,
        LabelSlot::Desires,
        LabelSlot::Polarity,
    ];

    pub fn key(self) -> &'static str {
        match self {
            LabelSlot::BeliefStance => "belief-stance",
            LabelSlot::Frames => "frames",
            LabelSlot::Persuasion => "persuasion",
            LabelSlot::Fairness => "fairness",
            LabelSlot::TargetEffect => "target-effect",
            LabelSlot::SocialDebate => "social-debate",
            LabelSlot::OpinionShift => "opinion-shift",
            LabelSlot::Emotions => "emotions",
            LabelSlot::Desires => "desires",
            LabelSlot::Polarity => "polarity",
        }
    }

    /// 1-based position in the questionnaire.
    pub fn ordinal(self) -> usize {
        LabelSlot::ALL.iter().position(|s| *s == self).unwrap() + 1
    }

    pub fn from_ordinal(n: usize) -> Option<LabelSlot> {
        n.checked_sub(1).and_then(|i| LabelSlot::ALL.get(i).copied())
    }

    /// Whether the slot accepts several values.
    pub fn is_multi(self) -> bool {
        matches!(self, LabelSlot::Frames | LabelSlot::Emotions | LabelSlot::Desires)
    }
}

impl fmt::Display for LabelSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl std::str::FromStr for LabelSlot {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LabelSlot::ALL
            .into_iter()
            .find(|slot| slot.key() == s)
            .ok_or_else(|| format!("unknown slot {s:?}"))
    }
}

pub const DEFAULT_FRAMES: [&str; 14] = [
    "Economic",
    "Capacity and resources",
    "Morality",
    "Fairness and equality",
    "Legality, constitutionality and jurisprudence",
    "Policy prescription and evaluation",
    "Crime and punishment",
    "Security and defense",
    "Health and safety",
    "Quality of life",
    "Cultural identity",
    "Public opinion",
    "Political",
    "External regulation and reputation",
];

pub const DEFAULT_EMOTIONS: [&str; 9] = [
    "anger",
    "anticipation",
    "joy",
    "trust",
    "fear",
    "surprise",
    "sadness",
    "disgust",
    "distrust",
];

/// Frame and emotion names. Both lists are ordered; the order is the one
/// used in prompts and reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Vocabulary {
    pub frame_names: Vec<String>,
    pub emotion_names: Vec<String>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self {
            frame_names: DEFAULT_FRAMES.iter().map(|s| s.to_string()).collect(),
            emotion_names: DEFAULT_EMOTIONS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl Vocabulary {
    pub fn new(frame_names: Vec<String>, emotion_names: Vec<String>) -> Result<Self, LabelError> {
        let vocab = Self {
            frame_names,
            emotion_names,
        };
        vocab.validate()?;
        Ok(vocab)
    }

    pub fn validate(&self) -> Result<(), LabelError> {
        for (what, names) in [("frame", &self.frame_names), ("emotion", &self.emotion_names)] {
            if names.is_empty() {
                return Err(LabelError::InvalidVocabulary(format!("empty {what} list")));
            }
            let mut seen = BTreeSet::new();
            for name in names {
                let key = normalize(name);
                if key.is_empty() {
                    return Err(LabelError::InvalidVocabulary(format!("blank {what} name")));
                }
                if !seen.insert(key) {
                    return Err(LabelError::InvalidVocabulary(format!(
                        "duplicate {what} name {name:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Resolves free-form frame text to its canonical vocabulary name.
    pub fn match_frame(&self, raw: &str) -> Option<&str> {
        match_name(&self.frame_names, raw, &["problem", "problems", "issue", "issues", "frame", "framing"])
    }

    pub fn match_emotion(&self, raw: &str) -> Option<&str> {
        match_name(&self.emotion_names, raw, &[])
    }

    pub fn frame_index(&self, name: &str) -> Option<usize> {
        self.frame_names.iter().position(|f| f == name)
    }

    pub fn emotion_index(&self, name: &str) -> Option<usize> {
        self.emotion_names.iter().position(|e| e == name)
    }

    /// Stable 64-bit FNV-1a fingerprint of both name lists.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |bytes: &[u8]| {
            for b in bytes {
                h ^= u64::from(*b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for name in &self.frame_names {
            feed(name.as_bytes());
            feed(&[0]);
        }
        feed(&[1]);
        for name in &self.emotion_names {
            feed(name.as_bytes());
            feed(&[0]);
        }
        h
    }
}

/// Lowercases, turns punctuation into spaces and collapses whitespace.
pub fn normalize(raw: &str) -> String {
    let mapped: String = raw
        .chars()
        .map(|c| match c {
            '\u{2019}' | '\'' => '\0',
            c if c.is_alphanumeric() => c.to_ascii_lowercase(),
            _ => ' ',
        })
        .filter(|c| *c != '\0')
        .collect();
    mapped.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn match_name<'a>(names: &'a [String], raw: &str, strip_suffixes: &[&str]) -> Option<&'a str> {
    let mut key = normalize(raw);
    if let Some(rest) = key.strip_prefix("the ") {
        key = rest.to_string();
    }
    let exact = |k: &str| names.iter().find(|n| normalize(n) == k).map(String::as_str);
    if let Some(hit) = exact(&key) {
        return Some(hit);
    }
    for suffix in strip_suffixes {
        if let Some(stem) = key.strip_suffix(suffix) {
            if let Some(hit) = exact(stem.trim_end()) {
                return Some(hit);
            }
        }
    }
    // Leading-word alias, only when it is unambiguous within the vocabulary.
    let stem = strip_suffixes
        .iter()
        .find_map(|s| key.strip_suffix(s).map(|k| k.trim_end().to_string()))
        .unwrap_or(key);
    let mut hits = names.iter().filter(|n| {
        normalize(n)
            .split(' ')
            .next()
            .is_some_and(|first| first == stem)
    });
    match (hits.next(), hits.next()) {
        (Some(hit), None) => Some(hit.as_str()),
        _ => None,
    }
}

/// A single canonical answer for one slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelValue {
    Stance(Stance),
    Frame(String),
    Bool(bool),
    Fairness(Fairness),
    Effect(Effect),
    Emotion(String),
    Desire(Desire),
    Polarity(Polarity),
}

impl LabelValue {
    pub fn render(&self) -> String {
        match self {
            LabelValue::Stance(s) => s.render().into(),
            LabelValue::Frame(f) | LabelValue::Emotion(f) => f.clone(),
            LabelValue::Bool(b) => if *b { "yes" } else { "no" }.into(),
            LabelValue::Fairness(f) => f.render().into(),
            LabelValue::Effect(e) => e.render().into(),
            LabelValue::Desire(d) => d.render().into(),
            LabelValue::Polarity(p) => p.render().into(),
        }
    }
}

fn lookup<T: Copy>(table: &[(&str, T)], key: &str) -> Option<T> {
    table.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
}

const STANCE_SYNONYMS: &[(&str, Stance)] = &[
    ("favor", Stance::Favor),
    ("favour", Stance::Favor),
    ("in favor", Stance::Favor),
    ("in favour", Stance::Favor),
    ("for", Stance::Favor),
    ("pro", Stance::Favor),
    ("support", Stance::Favor),
    ("supportive", Stance::Favor),
    ("positive", Stance::Favor),
    ("against", Stance::Against),
    ("oppose", Stance::Against),
    ("opposed", Stance::Against),
    ("opposing", Stance::Against),
    ("anti", Stance::Against),
    ("con", Stance::Against),
    ("negative", Stance::Against),
    ("neutral", Stance::Neutral),
    ("none", Stance::Neutral),
    ("no stance", Stance::Neutral),
    ("balanced", Stance::Neutral),
];

const BOOL_SYNONYMS: &[(&str, bool)] = &[
    ("yes", true),
    ("y", true),
    ("true", true),
    ("present", true),
    ("no", false),
    ("n", false),
    ("false", false),
    ("none", false),
    ("absent", false),
];

const FAIRNESS_SYNONYMS: &[(&str, Fairness)] = &[
    ("fair", Fairness::Fair),
    ("balanced", Fairness::Fair),
    ("unfair", Fairness::Unfair),
    ("not fair", Fairness::Unfair),
    ("unbalanced", Fairness::Unfair),
    ("biased", Fairness::Unfair),
];

const EFFECT_SYNONYMS: &[(&str, Effect)] = &[
    ("positive", Effect::Positive),
    ("negative", Effect::Negative),
    ("neither", Effect::Neither),
    ("neutral", Effect::Neither),
    ("none", Effect::Neither),
    ("no effect", Effect::Neither),
];

const DESIRE_SYNONYMS: &[(&str, Desire)] = &[
    ("public interest", Desire::PublicInterest),
    ("public", Desire::PublicInterest),
    ("political interest", Desire::PoliticalInterest),
    ("political", Desire::PoliticalInterest),
    ("economic interest", Desire::EconomicInterest),
    ("economic", Desire::EconomicInterest),
    ("psychological fulfillment", Desire::PsychologicalFulfillment),
    ("psychological fulfilment", Desire::PsychologicalFulfillment),
    ("psychological", Desire::PsychologicalFulfillment),
];

const POLARITY_SYNONYMS: &[(&str, Polarity)] = &[
    ("harmful", Polarity::Harmful),
    ("harm", Polarity::Harmful),
    ("unharmful", Polarity::Unharmful),
    ("un harmful", Polarity::Unharmful),
    ("not harmful", Polarity::Unharmful),
    ("non harmful", Polarity::Unharmful),
    ("nonharmful", Polarity::Unharmful),
    ("harmless", Polarity::Unharmful),
    ("benign", Polarity::Unharmful),
];

/// Maps one raw answer onto the canonical value for `slot`.
///
/// Matching is case-insensitive and ignores punctuation. Multi-select slots
/// take a single item here; splitting a list is the caller's job. Free text
/// (belief target, target entity) is never passed through this function.
pub fn canonicalize_label(
    raw: &str,
    slot: LabelSlot,
    vocab: &Vocabulary,
) -> Result<LabelValue, LabelError> {
    let key = normalize(raw);
    let key = key.strip_suffix(" stance").unwrap_or(&key).to_string();
    let value = match slot {
        LabelSlot::BeliefStance => lookup(STANCE_SYNONYMS, &key).map(LabelValue::Stance),
        LabelSlot::Persuasion | LabelSlot::SocialDebate | LabelSlot::OpinionShift => {
            lookup(BOOL_SYNONYMS, &key).map(LabelValue::Bool)
        }
        LabelSlot::Fairness => lookup(FAIRNESS_SYNONYMS, &key).map(LabelValue::Fairness),
        LabelSlot::TargetEffect => lookup(EFFECT_SYNONYMS, &key).map(LabelValue::Effect),
        LabelSlot::Desires => lookup(DESIRE_SYNONYMS, &key).map(LabelValue::Desire),
        LabelSlot::Polarity => lookup(POLARITY_SYNONYMS, &key).map(LabelValue::Polarity),
        LabelSlot::Frames => vocab.match_frame(raw).map(|f| LabelValue::Frame(f.to_string())),
        LabelSlot::Emotions => vocab
            .match_emotion(raw)
            .map(|e| LabelValue::Emotion(e.to_string())),
    };
    value.ok_or_else(|| LabelError::UnknownLabel {
        slot,
        raw: raw.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeliefLabel {
    #[serde(default)]
    pub target: String,
    pub stance: Stance,
}

/// Non-empty set of pursued interests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DesireLabel {
    pub categories: BTreeSet<Desire>,
}

impl DesireLabel {
    pub fn new(categories: impl IntoIterator<Item = Desire>) -> Result<Self, LabelError> {
        let categories: BTreeSet<_> = categories.into_iter().collect();
        if categories.is_empty() {
            return Err(LabelError::InvalidAnnotation("desire set is empty".into()));
        }
        Ok(Self { categories })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanLabel {
    pub fairness: Fairness,
    #[serde(default)]
    pub frames: BTreeSet<String>,
    pub persuasion: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactionLabel {
    #[serde(default)]
    pub target_entity: String,
    pub target_effect: Effect,
    pub social_debate: bool,
    pub opinion_shift: bool,
    #[serde(default)]
    pub emotions: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolarityLabel {
    pub polarity: Polarity,
}

/// Complete fine-grained intent labels for one article from one annotator
/// (human, model, or an aggregate).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntentAnnotation {
    #[serde(rename = "annotator")]
    pub annotator_id: String,
    pub belief: BeliefLabel,
    pub plan: PlanLabel,
    pub reaction: ReactionLabel,
    pub desire: DesireLabel,
    pub polarity: PolarityLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
}

impl IntentAnnotation {
    /// Checks set-valued fields against the vocabulary.
    pub fn validate(&self, vocab: &Vocabulary) -> Result<(), LabelError> {
        if self.desire.categories.is_empty() {
            return Err(LabelError::InvalidAnnotation("desire set is empty".into()));
        }
        if let Some(f) = self.plan.frames.iter().find(|f| vocab.frame_index(f).is_none()) {
            return Err(LabelError::InvalidAnnotation(format!("frame {f:?} not in vocabulary")));
        }
        if let Some(e) = self
            .reaction
            .emotions
            .iter()
            .find(|e| vocab.emotion_index(e).is_none())
        {
            return Err(LabelError::InvalidAnnotation(format!(
                "emotion {e:?} not in vocabulary"
            )));
        }
        Ok(())
    }

    /// Canonical values held in `slot`, in vocabulary order for multi-select
    /// slots.
    pub fn slot_values(&self, slot: LabelSlot, vocab: &Vocabulary) -> Vec<LabelValue> {
        match slot {
            LabelSlot::BeliefStance => vec![LabelValue::Stance(self.belief.stance)],
            LabelSlot::Frames => vocab
                .frame_names
                .iter()
                .filter(|f| self.plan.frames.contains(*f))
                .map(|f| LabelValue::Frame(f.clone()))
                .collect(),
            LabelSlot::Persuasion => vec![LabelValue::Bool(self.plan.persuasion)],
            LabelSlot::Fairness => vec![LabelValue::Fairness(self.plan.fairness)],
            LabelSlot::TargetEffect => vec![LabelValue::Effect(self.reaction.target_effect)],
            LabelSlot::SocialDebate => vec![LabelValue::Bool(self.reaction.social_debate)],
            LabelSlot::OpinionShift => vec![LabelValue::Bool(self.reaction.opinion_shift)],
            LabelSlot::Emotions => vocab
                .emotion_names
                .iter()
                .filter(|e| self.reaction.emotions.contains(*e))
                .map(|e| LabelValue::Emotion(e.clone()))
                .collect(),
            LabelSlot::Desires => self
                .desire
                .categories
                .iter()
                .map(|d| LabelValue::Desire(*d))
                .collect(),
            LabelSlot::Polarity => vec![LabelValue::Polarity(self.polarity.polarity)],
        }
    }
}

/// Binary target vectors per task, in the fixed orders
/// belief (favor, against, neutral), desire (public, political, economic,
/// psychological), plan (fair, unfair) and polarity (harmful, unharmful).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelTensor {
    pub belief: [f64; 3],
    pub desire: [f64; 4],
    pub plan: [f64; 2],
    pub polarity: [f64; 2],
}

impl LabelTensor {
    /// Task order used by the model: belief, desire, plan, polarity.
    pub fn tasks(&self) -> [&[f64]; 4] {
        [&self.belief, &self.desire, &self.plan, &self.polarity]
    }
}

fn one_hot<T: PartialEq, const N: usize>(order: [T; N], value: T) -> [f64; N] {
    let mut out = [0.0; N];
    for (slot, item) in out.iter_mut().zip(order) {
        if item == value {
            *slot = 1.0;
        }
    }
    out
}

pub fn label_tensor(ann: &IntentAnnotation) -> LabelTensor {
    let mut desire = [0.0; 4];
    for (slot, d) in desire.iter_mut().zip(Desire::ALL) {
        if ann.desire.categories.contains(&d) {
            *slot = 1.0;
        }
    }
    LabelTensor {
        belief: one_hot(Stance::ALL, ann.belief.stance),
        desire,
        plan: one_hot(Fairness::ALL, ann.plan.fairness),
        polarity: one_hot(Polarity::ALL, ann.polarity.polarity),
    }
}
