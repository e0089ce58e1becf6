//! Core data model for news intent analysis.
//!
//! An article's intent is described along three components and an overall
//! judgment:
//!
//! * **belief**: the stance (favor / against / neutral) toward the article's
//!   central proposition,
//! * **plan**: the writing strategy (framing, persuasion), judged fair or unfair,
//! * **desire**: the interests the article pursues (multi-label), together with
//!   the social reactions it aims to provoke,
//! * **polarity**: harmful or unharmful.
//!
//! [`taxonomy`] holds the label types, [`corpus`] the article records and the
//! line-delimited file format, and [`agreement`] the multi-rater statistics used
//! to judge annotation quality. [`metrics`] holds the classification and
//! regression scores shared by the model trainer and the evaluation tools.

pub mod agreement;
pub mod corpus;
pub mod metrics;
pub mod taxonomy;

pub use corpus::{Corpus, NewsArticle, Post, SocialContext, SplitMode, SplitSpec};
pub use taxonomy::{
    canonicalize_label, BeliefLabel, Desire, DesireLabel, Effect, Fairness, IntentAnnotation, LabelSlot, LabelTensor,
    LabelValue, PlanLabel, Polarity, PolarityLabel, ReactionLabel, Stance, Vocabulary,
};
