//! Generator of labelled toy articles whose intent labels are readable from
//! cue words, for smoke tests and training checks.
//!
//! Stance, desire and fairness each have their own cue vocabulary. The
//! polarity label is a function of the other two: harmful exactly when the
//! article is unfair and does not favor its target.

use chrono::{Days, NaiveDate};
use nint_core::{
    BeliefLabel, Desire, DesireLabel, Effect, Fairness, IntentAnnotation, NewsArticle, PlanLabel, Polarity,
    PolarityLabel, Post, ReactionLabel, SocialContext, Stance,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const STANCE_CUES: [&[&str]; 3] = [
    &["support", "praise", "endorse", "welcome"],
    &["oppose", "condemn", "reject", "denounce"],
    &["report", "describe", "note", "list"],
];
const DESIRE_CUES: [&[&str]; 4] = [
    &["community", "citizens", "safety"],
    &["campaign", "ballot", "party"],
    &["profit", "market", "revenue"],
    &["shocking", "outrage", "fear"],
];
const FAIRNESS_CUES: [&[&str]; 2] = [&["balanced", "sourced", "verified"], &["rigged", "smear", "distorted"]];
const FILLER: &[&str] = &[
    "the", "a", "on", "today", "officials", "said", "plan", "city", "week", "new", "people", "group", "local",
    "year", "statement", "meeting",
];
const TOPICS: &[&str] = &["economy", "health", "technology", "election"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub articles: usize,
    pub seed: u64,
    /// Filler tokens per article.
    pub filler: usize,
    /// Cue tokens per labelled attribute.
    pub cues: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            articles: 256,
            seed: 0,
            filler: 8,
            cues: 3,
        }
    }
}

/// Polarity implied by the other labels.
pub fn implied_polarity(stance: Stance, fairness: Fairness) -> Polarity {
    if fairness == Fairness::Unfair && stance != Stance::Favor {
        Polarity::Harmful
    } else {
        Polarity::Unharmful
    }
}

pub fn synthetic_articles(spec: SyntheticSpec) -> Vec<NewsArticle> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let start = NaiveDate::from_ymd_opt(2021, 1, 1).expect("valid date");
    (0..spec.articles)
        .map(|i| {
            let stance = Stance::ALL[rng.gen_range(0..3)];
            let fairness = Fairness::ALL[rng.gen_range(0..2)];
            let mut desires: Vec<Desire> = Desire::ALL.into_iter().filter(|_| rng.gen_bool(0.35)).collect();
            if desires.is_empty() {
                desires.push(Desire::ALL[rng.gen_range(0..4)]);
            }
            let polarity = implied_polarity(stance, fairness);

            let mut words: Vec<&str> = Vec::new();
            let cue = |pool: &[&'static str], rng: &mut ChaCha8Rng, words: &mut Vec<&'static str>| {
                for _ in 0..spec.cues {
                    words.push(pool[rng.gen_range(0..pool.len())]);
                }
            };
            cue(STANCE_CUES[stance as usize], &mut rng, &mut words);
            cue(FAIRNESS_CUES[fairness as usize], &mut rng, &mut words);
            for d in &desires {
                cue(DESIRE_CUES[*d as usize], &mut rng, &mut words);
            }
            for _ in 0..spec.filler {
                words.push(FILLER[rng.gen_range(0..FILLER.len())]);
            }
            words.shuffle(&mut rng);

            let topic = TOPICS[rng.gen_range(0..TOPICS.len())];
            let posts = (0..rng.gen_range(0..6))
                .map(|p| Post {
                    id: format!("s{i}-p{p}"),
                    text: String::new(),
                    timestamp: String::new(),
                    reply_depth: rng.gen_range(0..4),
                })
                .collect();
            let annotation = IntentAnnotation {
                annotator_id: "synthetic".into(),
                belief: BeliefLabel {
                    target: topic.into(),
                    stance,
                },
                plan: PlanLabel {
                    fairness,
                    frames: Default::default(),
                    persuasion: fairness == Fairness::Unfair,
                },
                reaction: ReactionLabel {
                    target_entity: topic.into(),
                    target_effect: match stance {
                        Stance::Favor => Effect::Positive,
                        Stance::Against => Effect::Negative,
                        Stance::Neutral => Effect::Neither,
                    },
                    social_debate: false,
                    opinion_shift: false,
                    emotions: Default::default(),
                },
                desire: DesireLabel::new(desires).expect("non-empty"),
                polarity: PolarityLabel { polarity },
                rationale: None,
            };
            NewsArticle {
                id: format!("s{i:05}"),
                title: format!("{topic} news update"),
                content: words.join(" "),
                topic: topic.into(),
                domain: format!("site{}.example", i % 5),
                date: start + Days::new(rng.gen_range(0..365)),
                author: None,
                url: None,
                social: SocialContext {
                    subreddit: Some(format!("r/{topic}")),
                    posts,
                },
                annotations: vec![annotation],
            }
        })
        .collect()
}
