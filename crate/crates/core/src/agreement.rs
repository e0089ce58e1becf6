//! Multi-rater agreement: Fleiss' kappa, Randolph's free-marginal kappa,
//! mean pairwise agreement, majority aggregation of annotations and the
//! credibility verification report.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taxonomy::{
    BeliefLabel, Desire, DesireLabel, Effect, Fairness, IntentAnnotation, LabelSlot, PlanLabel,
    Polarity, PolarityLabel, ReactionLabel, Stance,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgreementError {
    #[error("invalid rating table: {0}")]
    InvalidTable(String),
    #[error("need at least {required} raters, got {got}")]
    InsufficientRaters { required: usize, got: usize },
    #[error("item {item}: {reason}")]
    InvalidVotes { item: String, reason: String },
}

/// Items × categories count matrix where every row sums to the same number
/// of raters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingTable {
    counts: Vec<Vec<u64>>,
    raters: u64,
}

impl RatingTable {
    pub fn new(counts: Vec<Vec<u64>>) -> Result<Self, AgreementError> {
        let first = counts
            .first()
            .ok_or_else(|| AgreementError::InvalidTable("no items".into()))?;
        let k = first.len();
        if k < 2 {
            return Err(AgreementError::InvalidTable(format!(
                "need at least 2 categories, got {k}"
            )));
        }
        let raters: u64 = first.iter().sum();
        if raters < 2 {
            return Err(AgreementError::InvalidTable(format!(
                "need at least 2 raters per item, got {raters}"
            )));
        }
        for (i, row) in counts.iter().enumerate() {
            if row.len() != k {
                return Err(AgreementError::InvalidTable(format!(
                    "row {i} has {} categories, expected {k}",
                    row.len()
                )));
            }
            let sum: u64 = row.iter().sum();
            if sum != raters {
                return Err(AgreementError::InvalidTable(format!(
                    "row {i} sums to {sum}, expected {raters}"
                )));
            }
        }
        Ok(Self { counts, raters })
    }

    /// Builds a table from per-item category indices, one entry per rater.
    pub fn from_ratings(items: &[Vec<usize>], categories: usize) -> Result<Self, AgreementError> {
        let counts = items
            .iter()
            .map(|ratings| {
                let mut row = vec![0u64; categories];
                for &c in ratings {
                    *row.get_mut(c).ok_or_else(|| {
                        AgreementError::InvalidTable(format!("category {c} out of range"))
                    })? += 1;
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(counts)
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn raters(&self) -> u64 {
        self.raters
    }

    pub fn items(&self) -> usize {
        self.counts.len()
    }

    pub fn categories(&self) -> usize {
        self.counts[0].len()
    }

    /// Σᵢ Σⱼ nᵢⱼ(nᵢⱼ − 1), the number of agreeing ordered rater pairs.
    fn agreeing_pairs(&self) -> u64 {
        self.counts
            .iter()
            .flat_map(|row| row.iter())
            .map(|&c| c * c.saturating_sub(1))
            .sum()
    }

    /// Mean observed agreement P̄.
    pub fn observed_agreement(&self) -> f64 {
        let n = self.raters;
        self.agreeing_pairs() as f64 / ((n * (n - 1)) as f64 * self.items() as f64)
    }

    fn column_totals(&self) -> Vec<u64> {
        (0..self.categories())
            .map(|j| self.counts.iter().map(|row| row[j]).sum())
            .collect()
    }
}

/// A kappa value; `degenerate` marks the all-one-category case where
/// expected agreement is 1 and the value is fixed to 1 by convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Kappa {
    pub value: f64,
    pub degenerate: bool,
}

impl Kappa {
    /// Landis & Koch band, for display only.
    pub fn interpretation(&self) -> &'static str {
        landis_koch(self.value)
    }
}

pub fn landis_koch(value: f64) -> &'static str {
    match value {
        v if v < 0.0 => "poor",
        v if v <= 0.20 => "slight",
        v if v <= 0.40 => "fair",
        v if v <= 0.60 => "moderate",
        v if v <= 0.80 => "substantial",
        _ => "almost perfect",
    }
}

pub fn fleiss_kappa(table: &RatingTable) -> Kappa {
    let total = table.items() as u64 * table.raters;
    let columns = table.column_totals();
    if columns.iter().any(|&c| c == total) {
        return Kappa {
            value: 1.0,
            degenerate: true,
        };
    }
    let p_bar = table.observed_agreement();
    let p_e: f64 = columns
        .iter()
        .map(|&c| {
            let p = c as f64 / total as f64;
            p * p
        })
        .sum();
    Kappa {
        value: (p_bar - p_e) / (1.0 - p_e),
        degenerate: false,
    }
}

/// Randolph's free-marginal kappa with chance agreement 1/k.
pub fn free_marginal_kappa(table: &RatingTable) -> f64 {
    free_marginal(table.observed_agreement(), table.categories())
}

fn free_marginal(p_bar: f64, categories: usize) -> f64 {
    let chance = 1.0 / categories as f64;
    (p_bar - chance) / (1.0 - chance)
}

/// Mean over items of agreeing rater pairs / (n choose 2). Same quantity as
/// the observed agreement term of Fleiss' kappa.
pub fn pairwise_agreement(table: &RatingTable) -> f64 {
    table.observed_agreement()
}

/// Support for one aggregated slot: how many raters gave exactly the chosen
/// value, and whether the choice came from the tie rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SlotSupport {
    pub support: usize,
    pub tie: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Aggregate {
    pub annotation: IntentAnnotation,
    pub support: BTreeMap<LabelSlot, SlotSupport>,
}

impl Aggregate {
    pub fn has_tie(&self) -> bool {
        self.support.values().any(|s| s.tie)
    }
}

pub const DEFAULT_MIN_RATERS: usize = 3;

/// Unique most frequent value, or `safe` when the top count is shared.
fn plurality<T: Copy + Ord>(values: &[T], safe: T) -> (T, bool) {
    let mut counts: BTreeMap<T, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(*v).or_default() += 1;
    }
    let top = counts.values().copied().max().unwrap_or(0);
    let leaders: Vec<T> = counts
        .iter()
        .filter(|(_, c)| **c == top)
        .map(|(v, _)| *v)
        .collect();
    match leaders.as_slice() {
        [only] => (*only, false),
        _ => (safe, true),
    }
}

/// Most frequent string; ties go to the lexicographically smallest.
fn text_mode<'a>(values: impl Iterator<Item = &'a str>) -> String {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    let top = counts.values().copied().max().unwrap_or(0);
    counts
        .into_iter()
        .find(|(_, c)| *c == top)
        .map(|(v, _)| v.to_string())
        .unwrap_or_default()
}

/// Options picked by more than half of the raters.
fn strict_majority_set<T: Ord + Clone + Hash>(sets: &[&BTreeSet<T>]) -> BTreeSet<T> {
    let mut counts: BTreeMap<&T, usize> = BTreeMap::new();
    for set in sets {
        for item in set.iter() {
            *counts.entry(item).or_default() += 1;
        }
    }
    counts
        .into_iter()
        .filter(|(_, c)| 2 * c > sets.len())
        .map(|(v, _)| v.clone())
        .collect()
}

fn support_of<T: PartialEq>(values: &[T], chosen: &T, tie: bool) -> SlotSupport {
    SlotSupport {
        support: values.iter().filter(|v| *v == chosen).count(),
        tie,
    }
}

/// Merges several annotations of one article slot by slot.
///
/// Single-choice slots take the unique plurality value. When the top count is
/// shared the safer pole wins (neutral stance, fair plan, neither effect, no
/// persuasion/debate/shift, unharmful) and the slot is flagged. Multi-select
/// slots keep every option chosen by more than half of the raters; desire must
/// stay non-empty, so if no category reaches a majority the most chosen ones
/// are kept and the slot is flagged. Free-text targets take the most frequent
/// string.
pub fn aggregate_majority(
    annotations: &[IntentAnnotation],
    min_raters: usize,
) -> Result<Aggregate, AgreementError> {
    if annotations.len() < min_raters.max(1) {
        return Err(AgreementError::InsufficientRaters {
            required: min_raters.max(1),
            got: annotations.len(),
        });
    }
    let mut support = BTreeMap::new();

    let stances: Vec<Stance> = annotations.iter().map(|a| a.belief.stance).collect();
    let (stance, tie) = plurality(&stances, Stance::Neutral);
    support.insert(LabelSlot::BeliefStance, support_of(&stances, &stance, tie));

    let frame_sets: Vec<&BTreeSet<String>> = annotations.iter().map(|a| &a.plan.frames).collect();
    let frames = strict_majority_set(&frame_sets);
    let frame_values: Vec<&BTreeSet<String>> = frame_sets.clone();
    support.insert(
        LabelSlot::Frames,
        SlotSupport {
            support: frame_values.iter().filter(|s| ***s == frames).count(),
            tie: false,
        },
    );

    let mut bool_slot = |slot: LabelSlot, get: fn(&IntentAnnotation) -> bool| {
        let values: Vec<bool> = annotations.iter().map(get).collect();
        let (v, tie) = plurality(&values, false);
        support.insert(slot, support_of(&values, &v, tie));
        v
    };
    let persuasion = bool_slot(LabelSlot::Persuasion, |a| a.plan.persuasion);
    let social_debate = bool_slot(LabelSlot::SocialDebate, |a| a.reaction.social_debate);
    let opinion_shift = bool_slot(LabelSlot::OpinionShift, |a| a.reaction.opinion_shift);

    let fairness_values: Vec<Fairness> = annotations.iter().map(|a| a.plan.fairness).collect();
    let (fairness, tie) = plurality(&fairness_values, Fairness::Fair);
    support.insert(LabelSlot::Fairness, support_of(&fairness_values, &fairness, tie));

    let effects: Vec<Effect> = annotations.iter().map(|a| a.reaction.target_effect).collect();
    let (effect, tie) = plurality(&effects, Effect::Neither);
    support.insert(LabelSlot::TargetEffect, support_of(&effects, &effect, tie));

    let emotion_sets: Vec<&BTreeSet<String>> =
        annotations.iter().map(|a| &a.reaction.emotions).collect();
    let emotions = strict_majority_set(&emotion_sets);
    support.insert(
        LabelSlot::Emotions,
        SlotSupport {
            support: emotion_sets.iter().filter(|s| ***s == emotions).count(),
            tie: false,
        },
    );

    let desire_sets: Vec<&BTreeSet<Desire>> =
        annotations.iter().map(|a| &a.desire.categories).collect();
    let mut desires = strict_majority_set(&desire_sets);
    let mut desire_tie = false;
    if desires.is_empty() {
        let mut counts: BTreeMap<Desire, usize> = BTreeMap::new();
        for set in &desire_sets {
            for d in set.iter() {
                *counts.entry(*d).or_default() += 1;
            }
        }
        let top = counts.values().copied().max().unwrap_or(0);
        desires = counts
            .into_iter()
            .filter(|(_, c)| *c == top)
            .map(|(d, _)| d)
            .collect();
        desire_tie = true;
    }
    support.insert(
        LabelSlot::Desires,
        SlotSupport {
            support: desire_sets.iter().filter(|s| ***s == desires).count(),
            tie: desire_tie,
        },
    );

    let polarities: Vec<Polarity> = annotations.iter().map(|a| a.polarity.polarity).collect();
    let (polarity, tie) = plurality(&polarities, Polarity::Unharmful);
    support.insert(LabelSlot::Polarity, support_of(&polarities, &polarity, tie));

    let annotation = IntentAnnotation {
        annotator_id: "majority".into(),
        belief: BeliefLabel {
            target: text_mode(annotations.iter().map(|a| a.belief.target.as_str())),
            stance,
        },
        plan: PlanLabel {
            fairness,
            frames,
            persuasion,
        },
        reaction: ReactionLabel {
            target_entity: text_mode(annotations.iter().map(|a| a.reaction.target_entity.as_str())),
            target_effect: effect,
            social_debate,
            opinion_shift,
            emotions,
        },
        desire: DesireLabel::new(desires).expect("aggregated desire set is non-empty"),
        polarity: PolarityLabel { polarity },
        rationale: None,
    };
    Ok(Aggregate {
        annotation,
        support,
    })
}

/// Intent dimensions judged in the verification study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Belief,
    Plan,
    Desire,
    Polarity,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [
        Dimension::Belief,
        Dimension::Plan,
        Dimension::Desire,
        Dimension::Polarity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Belief => "belief",
            Dimension::Plan => "plan",
            Dimension::Desire => "desire",
            Dimension::Polarity => "polarity",
        }
    }
}

/// Credibility votes for one machine-labelled item: `true` = credible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemVotes {
    pub id: String,
    pub votes: BTreeMap<Dimension, Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationRow {
    pub dimension: Dimension,
    pub items: usize,
    /// Fraction of items with at least one credible vote.
    pub any_credible: f64,
    /// Fraction of items with at least three credible votes.
    pub credible_by_three: f64,
    pub pairwise_agreement: f64,
    pub free_marginal_kappa: f64,
}

pub const MIN_VERIFICATION_VOTES: usize = 3;

/// Summarizes credibility votes per dimension.
///
/// Agreement statistics treat credible/incredible as two categories. Items
/// may carry different vote counts; each item's pair agreement uses its own
/// count.
pub fn verification_report(items: &[ItemVotes]) -> Result<Vec<VerificationRow>, AgreementError> {
    let mut rows = Vec::new();
    for dim in Dimension::ALL {
        let mut n_items = 0usize;
        let mut any = 0usize;
        let mut three = 0usize;
        let mut agreement_sum = 0.0;
        for item in items {
            let Some(votes) = item.votes.get(&dim) else { continue };
            if votes.len() < MIN_VERIFICATION_VOTES {
                return Err(AgreementError::InvalidVotes {
                    item: item.id.clone(),
                    reason: format!(
                        "{} has {} votes, need {MIN_VERIFICATION_VOTES}",
                        dim.name(),
                        votes.len()
                    ),
                });
            }
            let n = votes.len() as u64;
            let yes = votes.iter().filter(|v| **v).count() as u64;
            let no = n - yes;
            n_items += 1;
            any += usize::from(yes >= 1);
            three += usize::from(yes >= 3);
            agreement_sum +=
                (yes * yes.saturating_sub(1) + no * no.saturating_sub(1)) as f64 / (n * (n - 1)) as f64;
        }
        if n_items == 0 {
            continue;
        }
        let p_bar = agreement_sum / n_items as f64;
        rows.push(VerificationRow {
            dimension: dim,
            items: n_items,
            any_credible: any as f64 / n_items as f64,
            credible_by_three: three as f64 / n_items as f64,
            pairwise_agreement: p_bar,
            free_marginal_kappa: free_marginal(p_bar, 2),
        });
    }
    Ok(rows)
}

pub fn render_verification_csv(rows: &[VerificationRow]) -> String {
    let mut out = String::from(
        "dimension,items,any_credible_pct,credible_by_three_pct,pairwise_agreement,free_marginal_kappa,interpretation\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.1},{:.1},{:.4},{:.4},{}\n",
            r.dimension.name(),
            r.items,
            100.0 * r.any_credible,
            100.0 * r.credible_by_three,
            r.pairwise_agreement,
            r.free_marginal_kappa,
            landis_koch(r.free_marginal_kappa)
        ));
    }
    out
}

/// All three statistics for one table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgreementSummary {
    pub items: usize,
    pub raters: u64,
    pub categories: usize,
    pub fleiss_kappa: f64,
    pub degenerate: bool,
    pub free_marginal_kappa: f64,
    pub pairwise_agreement: f64,
}

impl AgreementSummary {
    pub fn of(table: &RatingTable) -> Self {
        let k = fleiss_kappa(table);
        Self {
            items: table.items(),
            raters: table.raters(),
            categories: table.categories(),
            fleiss_kappa: k.value,
            degenerate: k.degenerate,
            free_marginal_kappa: free_marginal_kappa(table),
            pairwise_agreement: pairwise_agreement(table),
        }
    }
}

impl fmt::Display for AgreementSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{:.6},{},{:.6},{:.6},{}",
            self.items,
            self.raters,
            self.categories,
            self.fleiss_kappa,
            self.degenerate,
            self.free_marginal_kappa,
            self.pairwise_agreement,
            landis_koch(self.fleiss_kappa)
        )
    }
}

pub const SUMMARY_CSV_HEADER: &str =
    "name,items,raters,categories,fleiss_kappa,degenerate,free_marginal_kappa,pairwise_agreement,interpretation";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::fixtures::big_tech_annotation;
    use proptest::prelude::*;

    fn fixture() -> RatingTable {
        RatingTable::new(vec![vec![3, 0], vec![3, 0], vec![2, 1], vec![0, 3]]).unwrap()
    }

    /// Expands counts to explicit ratings and counts agreeing ordered pairs of
    /// distinct raters, item by item.
    fn oracle_pair_agreement(table: &RatingTable) -> f64 {
        let mut total = 0.0;
        for row in table.counts() {
            let ratings: Vec<usize> = row
                .iter()
                .enumerate()
                .flat_map(|(c, &n)| std::iter::repeat(c).take(n as usize))
                .collect();
            let (mut agree, mut pairs) = (0u64, 0u64);
            for a in 0..ratings.len() {
                for b in 0..ratings.len() {
                    if a != b {
                        pairs += 1;
                        agree += u64::from(ratings[a] == ratings[b]);
                    }
                }
            }
            total += agree as f64 / pairs as f64;
        }
        total / table.items() as f64
    }

    /// Chance agreement: two ratings drawn with replacement from the pooled
    /// ratings of the whole table.
    fn oracle_chance(table: &RatingTable) -> f64 {
        let pooled: Vec<usize> = table
            .counts()
            .iter()
            .flat_map(|row| {
                row.iter()
                    .enumerate()
                    .flat_map(|(c, &n)| std::iter::repeat(c).take(n as usize))
            })
            .collect();
        let mut agree = 0u64;
        for a in &pooled {
            for b in &pooled {
                agree += u64::from(a == b);
            }
        }
        agree as f64 / (pooled.len() * pooled.len()) as f64
    }

    #[test]
    fn four_item_fixture() {
        let t = fixture();
        let k = fleiss_kappa(&t);
        assert!(!k.degenerate);
        assert!((k.value - 0.625).abs() < 1e-12);
        assert!((free_marginal_kappa(&t) - 2.0 / 3.0).abs() < 1e-12);
        assert!((pairwise_agreement(&t) - 5.0 / 6.0).abs() < 1e-12);
        assert!((oracle_pair_agreement(&t) - 5.0 / 6.0).abs() < 1e-12);
        assert!((oracle_chance(&t) - 5.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_agreement() {
        let t = RatingTable::new(vec![vec![4, 0, 0], vec![0, 4, 0], vec![0, 0, 4]]).unwrap();
        assert_eq!(fleiss_kappa(&t).value, 1.0);
        assert_eq!(free_marginal_kappa(&t), 1.0);
        assert_eq!(pairwise_agreement(&t), 1.0);
    }

    #[test]
    fn single_category_is_degenerate() {
        let t = RatingTable::new(vec![vec![3, 0], vec![3, 0]]).unwrap();
        let k = fleiss_kappa(&t);
        assert!(k.degenerate);
        assert_eq!(k.value, 1.0);
    }

    #[test]
    fn no_agreeing_pair() {
        let t = RatingTable::new(vec![vec![1, 1, 1]]).unwrap();
        assert_eq!(pairwise_agreement(&t), 0.0);
    }

    #[test]
    fn table_invariants_enforced() {
        assert!(RatingTable::new(vec![]).is_err());
        assert!(RatingTable::new(vec![vec![3]]).is_err());
        assert!(RatingTable::new(vec![vec![2, 1], vec![1, 1]]).is_err());
        assert!(RatingTable::new(vec![vec![1, 0]]).is_err());
    }

    #[test]
    fn uniform_random_ratings_have_near_zero_free_kappa() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let items: Vec<Vec<usize>> = (0..10_000)
            .map(|_| (0..4).map(|_| rng.gen_range(0..3)).collect())
            .collect();
        let t = RatingTable::from_ratings(&items, 3).unwrap();
        // Standard error of P̄ here is about 0.003; 0.02 is several sigmas.
        assert!(free_marginal_kappa(&t).abs() < 0.02);
        assert!(fleiss_kappa(&t).value.abs() < 0.02);
    }

    fn arb_table() -> impl Strategy<Value = RatingTable> {
        (2usize..5, 2u64..6, 1usize..8).prop_flat_map(|(k, n, items)| {
            proptest::collection::vec(proptest::collection::vec(0..k, n as usize), items)
                .prop_map(move |rows| RatingTable::from_ratings(&rows, k).unwrap())
        })
    }

    proptest! {
        #[test]
        fn matches_pair_oracles(t in arb_table()) {
            let p_bar = oracle_pair_agreement(&t);
            prop_assert!((pairwise_agreement(&t) - p_bar).abs() < 1e-9);
            let k = t.categories() as f64;
            prop_assert!((free_marginal_kappa(&t) - (p_bar - 1.0 / k) / (1.0 - 1.0 / k)).abs() < 1e-9);
            let pe = oracle_chance(&t);
            let kappa = fleiss_kappa(&t);
            if kappa.degenerate {
                prop_assert!((pe - 1.0).abs() < 1e-12);
            } else {
                prop_assert!((kappa.value - (p_bar - pe) / (1.0 - pe)).abs() < 1e-9);
            }
        }

        #[test]
        fn fleiss_invariant_under_permutations(t in arb_table(), rot in 0usize..4) {
            let base = fleiss_kappa(&t).value;
            let mut rows: Vec<Vec<u64>> = t.counts().to_vec();
            rows.reverse();
            for row in rows.iter_mut() {
                let r = rot % row.len();
                row.rotate_left(r);
            }
            let permuted = RatingTable::new(rows).unwrap();
            prop_assert!((fleiss_kappa(&permuted).value - base).abs() < 1e-12);
        }

        /// With two raters Fleiss' statistic reduces to Scott's pi computed
        /// directly from the rating pairs.
        #[test]
        fn two_rater_case_matches_pair_statistic(
            pairs in proptest::collection::vec((0usize..3, 0usize..3), 1..30)
        ) {
            let rows: Vec<Vec<usize>> = pairs.iter().map(|(a, b)| vec![*a, *b]).collect();
            let t = RatingTable::from_ratings(&rows, 3).unwrap();
            let n = pairs.len() as f64;
            let observed = pairs.iter().filter(|(a, b)| a == b).count() as f64 / n;
            let mut marg = [0.0f64; 3];
            for (a, b) in &pairs {
                marg[*a] += 1.0;
                marg[*b] += 1.0;
            }
            let expected: f64 = marg.iter().map(|m| (m / (2.0 * n)).powi(2)).sum();
            let kappa = fleiss_kappa(&t);
            if !kappa.degenerate {
                prop_assert!((kappa.value - (observed - expected) / (1.0 - expected)).abs() < 1e-9);
            }
        }
    }

    fn with_stance(stance: Stance) -> IntentAnnotation {
        let mut a = big_tech_annotation();
        a.belief.stance = stance;
        a
    }

    #[test]
    fn identical_annotations_aggregate_to_themselves() {
        let a = big_tech_annotation();
        let agg = aggregate_majority(&[a.clone(), a.clone(), a.clone()], 3).unwrap();
        let mut expected = a;
        expected.annotator_id = "majority".into();
        assert_eq!(agg.annotation, expected);
        assert!(agg.support.values().all(|s| s.support == 3 && !s.tie));
        assert_eq!(agg.support.len(), 10);
    }

    #[test]
    fn strict_majority_stance() {
        let anns = [Stance::Favor, Stance::Favor, Stance::Against].map(with_stance);
        let agg = aggregate_majority(&anns, 3).unwrap();
        assert_eq!(agg.annotation.belief.stance, Stance::Favor);
        assert_eq!(
            agg.support[&LabelSlot::BeliefStance],
            SlotSupport { support: 2, tie: false }
        );
    }

    #[test]
    fn three_way_tie_goes_neutral() {
        let anns = [Stance::Favor, Stance::Against, Stance::Neutral].map(with_stance);
        let agg = aggregate_majority(&anns, 3).unwrap();
        assert_eq!(agg.annotation.belief.stance, Stance::Neutral);
        assert!(agg.support[&LabelSlot::BeliefStance].tie);
    }

    /// Every assignment of three stances, against a counting oracle.
    #[test]
    fn exhaustive_three_rater_stances() {
        for a in Stance::ALL {
            for b in Stance::ALL {
                for c in Stance::ALL {
                    let votes = [a, b, c];
                    let count = |s: Stance| votes.iter().filter(|v| **v == s).count();
                    let winner = Stance::ALL.into_iter().find(|s| count(*s) >= 2);
                    let (expected, tie) = match winner {
                        Some(s) => (s, false),
                        None => (Stance::Neutral, true),
                    };
                    let agg = aggregate_majority(&votes.map(with_stance), 3).unwrap();
                    assert_eq!(agg.annotation.belief.stance, expected, "{votes:?}");
                    assert_eq!(agg.support[&LabelSlot::BeliefStance].tie, tie);
                    if !tie {
                        assert_eq!(agg.support[&LabelSlot::BeliefStance].support, count(expected));
                    }
                }
            }
        }
    }

    #[test]
    fn insufficient_raters() {
        let a = big_tech_annotation();
        assert_eq!(
            aggregate_majority(&[a.clone(), a], 3).unwrap_err(),
            AgreementError::InsufficientRaters { required: 3, got: 2 }
        );
    }

    #[test]
    fn multi_label_keeps_majority_options_and_desire_fallback() {
        let mut a = big_tech_annotation();
        let mut b = big_tech_annotation();
        let mut c = big_tech_annotation();
        a.reaction.emotions = ["anger", "fear"].map(String::from).into();
        b.reaction.emotions = ["anger"].map(String::from).into();
        c.reaction.emotions = ["joy"].map(String::from).into();
        a.desire = DesireLabel::new([Desire::PublicInterest]).unwrap();
        b.desire = DesireLabel::new([Desire::PoliticalInterest]).unwrap();
        c.desire = DesireLabel::new([Desire::EconomicInterest]).unwrap();
        let agg = aggregate_majority(&[a, b, c], 3).unwrap();
        assert_eq!(agg.annotation.reaction.emotions, ["anger".to_string()].into());
        assert_eq!(agg.annotation.desire.categories.len(), 3);
        assert!(agg.support[&LabelSlot::Desires].tie);
    }

    #[test]
    fn aggregation_is_order_invariant() {
        let mut a = big_tech_annotation();
        let mut b = big_tech_annotation();
        let c = with_stance(Stance::Favor);
        a.reaction.target_entity = "zeta".into();
        b.reaction.target_entity = "alpha".into();
        a.plan.fairness = Fairness::Fair;
        let orders = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let all = [a, b, c];
        let first = aggregate_majority(&orders[0].map(|i| all[i].clone()), 3).unwrap();
        for order in &orders[1..] {
            let agg = aggregate_majority(&order.map(|i| all[i].clone()), 3).unwrap();
            assert_eq!(agg, first);
        }
    }

    fn votes(id: &str, per_dim: [&[bool]; 4]) -> ItemVotes {
        ItemVotes {
            id: id.into(),
            votes: Dimension::ALL
                .into_iter()
                .zip(per_dim)
                .map(|(d, v)| (d, v.to_vec()))
                .collect(),
        }
    }

    #[test]
    fn all_credible_report() {
        let items: Vec<_> = (0..5)
            .map(|i| votes(&i.to_string(), [&[true; 3], &[true; 3], &[true; 3], &[true; 4]]))
            .collect();
        let rows = verification_report(&items).unwrap();
        assert_eq!(rows.len(), 4);
        for r in rows {
            assert_eq!(
                (r.any_credible, r.credible_by_three, r.pairwise_agreement, r.free_marginal_kappa),
                (1.0, 1.0, 1.0, 1.0)
            );
        }
    }

    /// Ten items, belief dimension only, tabulated by hand:
    /// 4 × TTT, 2 × TTF, 2 × TFF, 1 × FFF, 1 × TTTF.
    /// any = 9/10, ≥3 = 5/10,
    /// per-item agreement 1,1,1,1, 1/3,1/3, 1/3,1/3, 1, (6+0)/12 = 1/2,
    /// P̄ = (5 + 4/3 + 1/2)/10 = 41/60, free κ = (41/60 − 1/2)/(1/2) = 11/30.
    #[test]
    fn ten_item_hand_tabulation() {
        let mut items = Vec::new();
        let patterns: Vec<Vec<bool>> = [
            vec![true, true, true],
            vec![true, true, true],
            vec![true, true, true],
            vec![true, true, true],
            vec![true, true, false],
            vec![true, false, true],
            vec![true, false, false],
            vec![false, false, true],
            vec![false, false, false],
            vec![true, true, true, false],
        ]
        .to_vec();
        for (i, p) in patterns.into_iter().enumerate() {
            items.push(ItemVotes {
                id: format!("v{i}"),
                votes: [(Dimension::Belief, p)].into(),
            });
        }
        let rows = verification_report(&items).unwrap();
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        assert_eq!(r.items, 10);
        assert!((r.any_credible - 0.9).abs() < 1e-12);
        assert!((r.credible_by_three - 0.5).abs() < 1e-12);
        assert!((r.pairwise_agreement - 41.0 / 60.0).abs() < 1e-12);
        assert!((r.free_marginal_kappa - 11.0 / 30.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_votes_rejected() {
        let items = [ItemVotes {
            id: "x".into(),
            votes: [(Dimension::Plan, vec![true, true])].into(),
        }];
        assert!(verification_report(&items).is_err());
    }
}
