use std::collections::BTreeSet;

use chrono::NaiveDate;
use nint_core::agreement::{fleiss_kappa, free_marginal_kappa, pairwise_agreement, RatingTable};
use nint_core::corpus::{load_corpus, parse_record, render_record, save_corpus, split, SplitMode, SplitSpec};
use nint_core::{Corpus, NewsArticle, Vocabulary};
use proptest::prelude::*;

fn article(i: usize, day: i64, words: usize) -> NewsArticle {
    let date = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Duration::days(day);
    let record = serde_json::json!({
        "id": format!("n{i:03}"),
        "title": format!("headline {i}"),
        "content": vec!["word"; words.max(1)].join(" "),
        "topic": "politics",
        "domain": "example.com",
        "date": date.to_string(),
    });
    parse_record(&record.to_string(), &Vocabulary::default()).unwrap()
}

fn corpus_strategy() -> impl Strategy<Value = Corpus> {
    proptest::collection::vec((0i64..30, 1usize..20), 1..80).prop_map(|rows| {
        let articles = rows.iter().enumerate().map(|(i, (day, words))| article(i, *day, *words)).collect();
        Corpus::new(articles, Vocabulary::default()).unwrap()
    })
}

fn ids(c: &Corpus) -> BTreeSet<String> {
    c.articles.iter().map(|a| a.id.clone()).collect()
}

proptest! {
    #[test]
    fn temporal_split_never_trains_on_the_future(corpus in corpus_strategy()) {
        let s = split(&corpus, &SplitSpec::default()).unwrap();
        let dates = |c: &Corpus| c.articles.iter().map(|a| a.date).collect::<Vec<_>>();
        let (tr, va, te) = (dates(&s.train), dates(&s.val), dates(&s.test));
        if let (Some(a), Some(b)) = (tr.iter().max(), te.iter().min()) {
            prop_assert!(a <= b);
        }
        if let (Some(a), Some(b)) = (tr.iter().max(), va.iter().min()) {
            prop_assert!(a <= b);
        }
        if let (Some(a), Some(b)) = (va.iter().max(), te.iter().min()) {
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn splits_partition_the_corpus(corpus in corpus_strategy(), seed in any::<u64>(), random in any::<bool>()) {
        let spec = SplitSpec {
            mode: if random { SplitMode::Random(seed) } else { SplitMode::Temporal },
            ..Default::default()
        };
        let s = split(&corpus, &spec).unwrap();
        let (n_train, n_val, n_test) = spec.sizes(corpus.len());
        prop_assert_eq!((s.train.len(), s.val.len(), s.test.len()), (n_train, n_val, n_test));
        let mut all = ids(&s.train);
        all.extend(ids(&s.val));
        all.extend(ids(&s.test));
        prop_assert_eq!(all, ids(&corpus));
    }

    #[test]
    fn records_round_trip(day in 0i64..5000, words in 1usize..50, i in 0usize..1000) {
        let a = article(i, day, words);
        let again = parse_record(&render_record(&a), &Vocabulary::default()).unwrap();
        prop_assert_eq!(again, a);
    }

    #[test]
    fn agreement_is_bounded_and_label_free(
        items in proptest::collection::vec(proptest::collection::vec(0usize..3, 4), 2..12),
        shift in 1usize..3,
    ) {
        let table = RatingTable::from_ratings(&items, 3).unwrap();
        let pair = pairwise_agreement(&table);
        prop_assert!((0.0..=1.0).contains(&pair));
        prop_assert!(free_marginal_kappa(&table) <= 1.0 + 1e-12);
        let k = fleiss_kappa(&table);
        if !k.degenerate {
            prop_assert!(k.value <= 1.0 + 1e-12);
        }
        // Renaming categories changes nothing.
        let renamed: Vec<Vec<usize>> = items.iter().map(|r| r.iter().map(|c| (c + shift) % 3).collect()).collect();
        let other = RatingTable::from_ratings(&renamed, 3).unwrap();
        prop_assert!((pairwise_agreement(&other) - pair).abs() < 1e-12);
        let k2 = fleiss_kappa(&other);
        prop_assert_eq!(k2.degenerate, k.degenerate);
        if !k.degenerate {
            prop_assert!((k2.value - k.value).abs() < 1e-12);
        }
    }
}

#[test]
fn corpus_file_round_trip() {
    let articles = (0..12).map(|i| article(i, i as i64 * 3, 5 + i)).collect();
    let corpus = Corpus::new(articles, Vocabulary::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    save_corpus(&corpus, &path).unwrap();
    assert_eq!(load_corpus(&path, &Vocabulary::default()).unwrap(), corpus);
}

#[test]
fn perfect_agreement_is_one() {
    let table = RatingTable::from_ratings(&[vec![0, 0, 0], vec![1, 1, 1], vec![2, 2, 2]], 3).unwrap();
    assert_eq!(fleiss_kappa(&table).value, 1.0);
    assert_eq!(pairwise_agreement(&table), 1.0);
    assert_eq!(free_marginal_kappa(&table), 1.0);
}
