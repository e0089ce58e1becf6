use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nint_core::corpus::{load_corpus, save_corpus};
use nint_core::{Corpus, Polarity, Vocabulary};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn nint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nint")).args(args).current_dir(root()).output().unwrap()
}

fn ok(args: &[&str]) {
    let out = nint(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn split_writes_three_parts_in_date_order() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["--corpus", "fixtures/dmg/corpus.jsonl", "--output", s(dir.path()), "split"]);
    let vocab = Vocabulary::default();
    let parts: Vec<Corpus> =
        ["train", "val", "test"].iter().map(|p| load_corpus(dir.path().join(format!("{p}.jsonl")), &vocab).unwrap()).collect();
    assert_eq!(parts.iter().map(Corpus::len).collect::<Vec<_>>(), vec![8, 1, 1]);
    let last_train = parts[0].articles.iter().map(|a| a.date).max().unwrap();
    assert!(last_train <= parts[1].articles[0].date);
    assert!(parts[1].articles[0].date <= parts[2].articles[0].date);

    let manifest = json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["command"], "split");
    let input = &manifest["inputs"][0];
    assert!(input["path"].as_str().unwrap().ends_with("corpus.jsonl"));
    assert_eq!(input["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 4);
}

#[test]
fn random_split_follows_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "[split]\ntrain_frac = 0.6\nval_frac = 0.2\ntest_frac = 0.2\nmode = { kind = \"random\", seed = 0 }\n").unwrap();
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        ok(&["--config", s(&cfg), "--seed", seed, "--corpus", "fixtures/dmg/corpus.jsonl", "--output", s(&out), "split"]);
        std::fs::read(out.join("test.jsonl")).unwrap()
    };
    assert_eq!(run("a", "5"), run("b", "5"));
    let others: Vec<_> = (6..12).map(|k| run(&format!("c{k}"), &k.to_string())).collect();
    assert!(others.iter().any(|o| *o != run("a", "5")));
}

#[test]
fn agree_on_table_and_on_multi_annotator_corpus() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["--output", s(&dir.path().join("t")), "agree", "--table", "fixtures/agreement/table.csv"]);
    let csv = std::fs::read_to_string(dir.path().join("t/agreement.csv")).unwrap();
    assert!(csv.contains("table,4,3,2,0.6250,false,0.6667,0.8333,substantial"), "{csv}");

    // Three annotators who agree on everything but one polarity label.
    let mut corpus = load_corpus(root().join("fixtures/dmg/golden_dmg.jsonl"), &Vocabulary::default()).unwrap();
    for (i, a) in corpus.articles.iter_mut().enumerate() {
        let base = a.annotations[0].clone();
        for k in 1..3 {
            let mut other = base.clone();
            other.annotator_id = format!("r{k}");
            if i == 0 && k == 2 {
                other.polarity.polarity = match other.polarity.polarity {
                    Polarity::Harmful => Polarity::Unharmful,
                    Polarity::Unharmful => Polarity::Harmful,
                };
            }
            a.annotations.push(other);
        }
    }
    let path = dir.path().join("multi.jsonl");
    save_corpus(&corpus, &path).unwrap();
    ok(&["--corpus", s(&path), "--output", s(&dir.path().join("c")), "agree"]);
    let rows = json(&dir.path().join("c/agreement.json"));
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 7);
    let by_name = |n: &str| rows.iter().find(|r| r["name"] == n).unwrap();
    assert_eq!(by_name("plan")["pairwise_agreement"], 1.0);
    let p = by_name("polarity")["pairwise_agreement"].as_f64().unwrap();
    assert!((p - (1.0 - 2.0 / 3.0 / 10.0)).abs() < 1e-12, "{p}");
}

#[test]
fn verify_reports_per_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let votes = dir.path().join("votes.jsonl");
    std::fs::write(
        &votes,
        "{\"id\":\"a\",\"votes\":{\"belief\":[true,true,true]}}\n{\"id\":\"b\",\"votes\":{\"belief\":[true,false,false]}}\n",
    )
    .unwrap();
    ok(&["--output", s(&dir.path().join("out")), "verify", "--votes", s(&votes)]);
    let csv = std::fs::read_to_string(dir.path().join("out/verification.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("belief,2,100.0,50.0,"), "{csv}");
}

#[test]
fn training_is_reproducible_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(
        &cfg,
        "seed = 3\n[model]\nmax_len = 16\nchannels = 4\nintent_dim = 8\nhidden = 8\n\
         [model.encoder]\nkind = \"hashed_ngram\"\nbuckets = 128\ndim = 8\nseed = 0\n\
         [train]\nepochs = 2\nbatch_size = 4\n",
    )
    .unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        ok(&["--config", s(&cfg), "--corpus", "fixtures/dmg/golden_dmg.jsonl", "--output", s(&out), "train"]);
        out
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["checkpoint.json", "history.csv", "train.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let (ma, mb) = (json(&a.join("manifest.json")), json(&b.join("manifest.json")));
    assert_eq!(ma["seed"], 3);
    let hashes = |m: &serde_json::Value| {
        m["outputs"].as_array().unwrap().iter().map(|o| o["sha256"].clone()).collect::<Vec<_>>()
    };
    assert_eq!(hashes(&ma), hashes(&mb));

    // Evaluate and attribute the checkpoint.
    let ckpt = a.join("checkpoint.json");
    let eval = dir.path().join("eval");
    ok(&["--config", s(&cfg), "--corpus", "fixtures/dmg/golden_dmg.jsonl", "--output", s(&eval), "eval", "--checkpoint", s(&ckpt), "--part", "all"]);
    assert_eq!(json(&eval.join("eval.json"))["examples"], 10);
    let attr = dir.path().join("attr");
    ok(&["--corpus", "fixtures/dmg/golden_dmg.jsonl", "--output", s(&attr), "attribute", "--checkpoint", s(&ckpt), "--limit", "2"]);
    let html = std::fs::read_to_string(attr.join("attribution.html")).unwrap();
    assert!(html.contains("<h2>a01</h2>") && !html.contains("<h2>a03</h2>"));
}

#[test]
fn fuse_from_feature_files() {
    let dir = tempfile::tempdir().unwrap();
    let (intent, task, labels) = (dir.path().join("i.jsonl"), dir.path().join("t.jsonl"), dir.path().join("l.jsonl"));
    let (mut i_txt, mut t_txt, mut l_txt) = (String::new(), String::new(), String::new());
    for k in 0..60 {
        let y = k % 2;
        let sign = if y == 1 { 2.0 } else { -2.0 };
        let noise = ((k * 7919) % 13) as f64 / 13.0;
        i_txt.push_str(&format!("{{\"id\":\"x{k}\",\"features\":[{},{}]}}\n", sign + noise * 0.1, -sign));
        t_txt.push_str(&format!("{{\"id\":\"x{k}\",\"features\":[{noise}]}}\n"));
        let split = if k < 40 { "train" } else { "test" };
        l_txt.push_str(&format!("{{\"id\":\"x{k}\",\"label\":{y},\"split\":\"{split}\"}}\n"));
    }
    std::fs::write(&intent, i_txt).unwrap();
    std::fs::write(&task, t_txt).unwrap();
    std::fs::write(&labels, l_txt).unwrap();
    let out = dir.path().join("out");
    ok(&["--output", s(&out), "fuse", "--task-features", s(&task), "--labels", s(&labels), "--intent-features", s(&intent)]);
    let report = json(&out.join("fusion.json"));
    assert_eq!((report["train_articles"].clone(), report["test_articles"].clone()), (40.into(), 20.into()));
    assert_eq!(report["fused"]["report"]["classification"]["macro_f1"], 1.0);
    assert!(report["macro_f1_gain"].as_f64().unwrap() > 0.2);
}

#[test]
fn stats_and_analyze_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["--corpus", "fixtures/analysis/corpus.jsonl", "--output", s(dir.path()), "stats", "--group-by", "polarity"]);
    assert!(dir.path().join("stats_polarity.csv").exists());
    assert!(!dir.path().join("stats_domain.csv").exists());
    let out = dir.path().join("an");
    ok(&["--corpus", "fixtures/analysis/corpus.jsonl", "--output", s(&out), "analyze", "--by-topic"]);
    let csv = std::fs::read_to_string(out.join("engagement_by_desire.csv")).unwrap();
    assert_eq!(csv.lines().count(), 9);
    assert!(csv.contains("health,political interest,0,,,,,empty_group"));
}

#[test]
fn unknown_config_key_exits_2_with_error_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[train]\nepochz = 3\n").unwrap();
    let out = dir.path().join("out");
    let res = nint(&["--config", s(&cfg), "--output", s(&out), "validate"]);
    assert_eq!(res.status.code(), Some(2));
    let report = json(&out.join("error.json"));
    assert_eq!(report["kind"], "config_error");
    assert_eq!(report["exit_code"], 2);
    assert!(report["message"].as_str().unwrap().contains("epochz"));
    let stderr: serde_json::Value = serde_json::from_slice(&res.stderr).unwrap();
    assert_eq!(stderr, report);
}

#[test]
fn runtime_failures_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let res = nint(&["--corpus", "no/such/file.jsonl", "--output", s(dir.path()), "validate"]);
    assert_eq!(res.status.code(), Some(1));
    assert_eq!(json(&dir.path().join("error.json"))["kind"], "io_error");

    let res = nint(&["--corpus", "fixtures/dmg/corpus.jsonl", "--output", s(dir.path()), "annotate"]);
    assert_eq!(res.status.code(), Some(2), "annotate without endpoint is a config error");

    let res = nint(&["--corpus", "fixtures/dmg/corpus.jsonl", "--output", s(dir.path()), "annotate", "--endpoint", "mock:no/such/dir"]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn output_may_not_overwrite_an_input() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("train.jsonl");
    std::fs::copy(root().join("fixtures/dmg/corpus.jsonl"), &corpus).unwrap();
    let before = std::fs::read(&corpus).unwrap();
    let res = nint(&["--corpus", s(&corpus), "--output", s(dir.path()), "split"]);
    assert!(!res.status.success());
    assert_eq!(std::fs::read(&corpus).unwrap(), before);
}
