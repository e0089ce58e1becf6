use std::path::PathBuf;

use nint_core::corpus::load_corpus;
use nint_core::{Desire, Vocabulary};
use nint_eval::consistency::{render_engagement_csv, render_proportions_csv, CellFlag};
use nint_eval::{consistency_tables, ConsistencyOptions};

fn fixture() -> nint_core::Corpus {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/analysis/corpus.jsonl");
    load_corpus(path, &Vocabulary::default()).unwrap()
}

/// Population z-scores written out longhand.
fn z(xs: &[f64]) -> Vec<f64> {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
    xs.iter().map(|x| (x - m) / sd).collect()
}

fn close(a: Option<f64>, b: f64) -> bool {
    a.is_some_and(|a| (a - b).abs() < 1e-12)
}

#[test]
fn proportions_match_hand_tabulation() {
    let t = consistency_tables(&fixture(), &ConsistencyOptions::default());
    assert!(t.skipped.is_empty());
    let belief: Vec<(&str, usize, usize)> = t.by_belief.iter().map(|r| (r.group.as_str(), r.articles, r.unfair)).collect();
    assert_eq!(belief, vec![("favor", 3, 2), ("against", 3, 3), ("neutral", 2, 0)]);
    assert_eq!(t.by_belief[1].proportion, Some(1.0));
    assert!(close(t.by_belief[0].proportion, 2.0 / 3.0));
    assert_eq!(t.by_belief[2].proportion, Some(0.0));

    let desire: Vec<(usize, usize)> = t.by_desire.iter().map(|r| (r.articles, r.unfair)).collect();
    assert_eq!(desire, vec![(4, 1), (3, 2), (2, 2), (2, 2)]);
    assert_eq!(t.by_desire[0].proportion, Some(0.25));
}

#[test]
fn engagement_matches_hand_tabulation() {
    let t = consistency_tables(&fixture(), &ConsistencyOptions::default());
    let posts = [1.5, 13.0 / 3.0, 3.5, 3.0];
    let depth = [0.5, 2.0, 2.5, 1.5];
    let (zp, zd) = (z(&posts), z(&depth));
    for (i, row) in t.engagement.iter().enumerate() {
        assert_eq!(row.desire, Desire::ALL[i]);
        assert!(close(row.avg_posts, posts[i]), "{row:?}");
        assert!(close(row.avg_reply_depth, depth[i]));
        assert!(close(row.z_posts, zp[i]));
        assert!(close(row.z_reply_depth, zd[i]), "{row:?} {zd:?}");
        assert!(row.flags.is_empty());
    }
}

#[test]
fn engagement_by_topic_flags_empty_groups() {
    let t = consistency_tables(
        &fixture(),
        &ConsistencyOptions {
            annotator: Some("gold".into()),
            by_topic: true,
        },
    );
    assert_eq!(t.engagement.len(), 8);
    let health = &t.engagement[..4];
    assert_eq!(health[0].topic.as_deref(), Some("health"));
    assert_eq!(health[1].articles, 0);
    assert_eq!(health[1].flags, vec![CellFlag::EmptyGroup]);
    assert_eq!(health[1].z_posts, None);
    let hp = z(&[0.5, 3.5, 2.0]);
    let hd = z(&[0.0, 2.5, 1.0]);
    for (k, i) in [0, 2, 3].into_iter().enumerate() {
        assert!(close(health[i].z_posts, hp[k]));
        assert!(close(health[i].z_reply_depth, hd[k]));
    }
    let politics = &t.engagement[4..];
    assert_eq!(politics[2].flags, vec![CellFlag::EmptyGroup]);
    assert!(close(politics[0].avg_posts, 2.5));
    assert!(close(politics[1].avg_posts, 13.0 / 3.0));
    assert!(close(politics[3].avg_reply_depth, 2.0));
    // Politics depths are 1, 2, 2: varied, so no flag.
    assert!(politics[3].z_reply_depth.is_some());
}

#[test]
fn identical_averages_flag_zero_variance() {
    let mut corpus = fixture();
    for a in &mut corpus.articles {
        a.social.posts.clear();
    }
    let t = consistency_tables(&corpus, &ConsistencyOptions::default());
    for row in &t.engagement {
        assert_eq!(row.avg_posts, Some(0.0));
        assert_eq!(row.z_posts, None);
        assert_eq!(row.flags, vec![CellFlag::ZeroVariance]);
    }
}

#[test]
fn unknown_annotator_skips_everything() {
    let t = consistency_tables(
        &fixture(),
        &ConsistencyOptions {
            annotator: Some("nobody".into()),
            by_topic: false,
        },
    );
    assert_eq!(t.skipped.len(), 8);
    assert!(t.by_belief.iter().all(|r| r.proportion.is_none()));
}

#[test]
fn tables_render_as_csv() {
    let t = consistency_tables(&fixture(), &ConsistencyOptions::default());
    let csv = render_proportions_csv("belief", &t.by_belief).unwrap();
    assert_eq!(csv.lines().next(), Some("belief,articles,unfair,proportion_unfair,flag"));
    assert!(csv.contains("against,3,3,1,"));
    let csv = render_engagement_csv(&t.engagement).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.contains(",public interest,4,1.5,0.5,"));
}
