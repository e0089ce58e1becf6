//! Prompt construction for the four annotation methods.
//!
//! Every method sees the same article input: topic, a separator, the title
//! and the content, with the content cut from the tail so the whole input
//! fits the token budget.

use std::fmt;
use std::str::FromStr;

use nint_core::{Desire, LabelSlot, NewsArticle, Vocabulary};
use serde::{Deserialize, Serialize};

use crate::tokens::TokenCounter;

pub const INPUT_SEPARATOR: &str = "[SEP]";
pub const DEFAULT_TOKEN_BUDGET: usize = 6000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Standard,
    DirectCot,
    StandardCot,
    Dmg,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Standard, Method::DirectCot, Method::StandardCot, Method::Dmg];

    pub fn key(self) -> &'static str {
        match self {
            Method::Standard => "standard",
            Method::DirectCot => "direct-cot",
            Method::StandardCot => "standard-cot",
            Method::Dmg => "dmg",
        }
    }

    /// Human-readable row label for reports.
    pub fn label(self) -> &'static str {
        match self {
            Method::Standard => "Standard",
            Method::DirectCot => "Direct CoT",
            Method::StandardCot => "Standard CoT",
            Method::Dmg => "DMG",
        }
    }

    pub fn queries_needed(self) -> usize {
        match self {
            Method::StandardCot => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.key().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown method {s:?}; expected standard, direct-cot, standard-cot or dmg"))
    }
}

/// Prompt text for one article. Query `k` sends blocks `0..=k` as user
/// turns, interleaved with the model's earlier replies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PromptBundle {
    pub method: Method,
    pub text_blocks: Vec<String>,
    pub slots: Vec<LabelSlot>,
    pub queries_needed: usize,
}

impl PromptBundle {
    /// Prompt tokens sent over all queries, counting replayed user turns but
    /// not the model's replies (unknown before the run).
    pub fn prompt_tokens(&self, tokens: &dyn TokenCounter) -> usize {
        let mut sent = 0;
        let mut history = 0;
        for block in &self.text_blocks {
            history += tokens.count(block);
            sent += history;
        }
        sent
    }
}

/// `topic [SEP] title content`, content truncated at the tail.
pub fn article_input(article: &NewsArticle, budget: usize, tokens: &dyn TokenCounter) -> String {
    let head = format!("{} {} {}", article.topic.trim(), INPUT_SEPARATOR, article.title.trim());
    let room = budget.saturating_sub(tokens.count(&head));
    let content = tokens.truncate(&article.content, room);
    if content.is_empty() {
        tokens.truncate(&head, budget)
    } else {
        format!("{head} {content}")
    }
}

/// Answer label the model is asked to use for each slot.
pub fn slot_header(slot: LabelSlot) -> &'static str {
    match slot {
        LabelSlot::BeliefStance => "Stance",
        LabelSlot::Frames => "Frames",
        LabelSlot::Persuasion => "Persuasion",
        LabelSlot::Fairness => "Fairness",
        LabelSlot::TargetEffect => "Target",
        LabelSlot::SocialDebate => "Social debate",
        LabelSlot::OpinionShift => "Opinion shift",
        LabelSlot::Emotions => "Emotions",
        LabelSlot::Desires => "Desires",
        LabelSlot::Polarity => "Polarity",
    }
}

fn dmg_questions(vocab: &Vocabulary) -> String {
    let desires: Vec<&str> = Desire::ALL.iter().map(|d| d.render()).collect();
    let q = |slot: LabelSlot, text: String| format!("{}. {}: {}", slot.ordinal(), slot_header(slot), text);
    [
        "Belief".to_string(),
        q(
            LabelSlot::BeliefStance,
            "stance of the news on its central theme or contentious issue. Answer: theme | favor, against or neutral".into(),
        ),
        "Plan".into(),
        q(
            LabelSlot::Frames,
            format!("how the news is framed, one or more of: {}", vocab.frame_names.join("; ")),
        ),
        q(LabelSlot::Persuasion, "does it use persuasive writing techniques? yes or no".into()),
        q(
            LabelSlot::Fairness,
            "is it written fairly, with competing perspectives and sufficient context? fair or unfair".into(),
        ),
        "Desire".into(),
        q(
            LabelSlot::TargetEffect,
            "individual or group the news targets and the effect it aims to have. Answer: target | positive, negative or neither"
                .into(),
        ),
        q(LabelSlot::SocialDebate, "does it aim to incite social debate? yes or no".into()),
        q(
            LabelSlot::OpinionShift,
            "does it aim to challenge or change readers' existing beliefs? yes or no".into(),
        ),
        q(
            LabelSlot::Emotions,
            format!("social emotions it aims to trigger, one or more of: {}", vocab.emotion_names.join(", ")),
        ),
        q(LabelSlot::Desires, format!("desire behind the news, one or more of: {}", desires.join(", "))),
        "Polarity".into(),
        q(
            LabelSlot::Polarity,
            "taking answers 1-9 into account, is the intent harmful or unharmful?".into(),
        ),
    ]
    .join("\n")
}

/// Deterministic: the same article, method, vocabulary and budget always
/// give byte-identical text.
pub fn build_prompt(
    article: &NewsArticle,
    method: Method,
    vocab: &Vocabulary,
    budget: usize,
    tokens: &dyn TokenCounter,
) -> PromptBundle {
    let x = article_input(article, budget, tokens);
    let (text_blocks, slots) = match method {
        Method::Standard => (
            vec![format!(
                "Is the intent of the following news harmful or unharmful? Answer with one word.\n\nNews: {x}"
            )],
            vec![LabelSlot::Polarity],
        ),
        Method::DirectCot => (
            vec![format!(
                "Is the intent of the following news harmful or unharmful? Let's think step by step, \
                 then end with a line \"Polarity: harmful\" or \"Polarity: unharmful\".\n\nNews: {x}"
            )],
            vec![LabelSlot::Polarity],
        ),
        Method::StandardCot => (
            vec![
                format!("Analyze the intent behind the following news step by step.\n\nNews: {x}"),
                "Based on your analysis, is the intent of the news harmful or unharmful? Answer with one word."
                    .to_string(),
            ],
            vec![LabelSlot::Polarity],
        ),
        Method::Dmg => (
            vec![format!(
                "Analyze the intent of the news below by answering the questions in order. \
                 Reply with one numbered line per question and nothing else.\n\nNews: {x}\n\n{}",
                dmg_questions(vocab)
            )],
            LabelSlot::ALL.to_vec(),
        ),
    };
    PromptBundle {
        method,
        text_blocks,
        slots,
        queries_needed: method.queries_needed(),
    }
}
