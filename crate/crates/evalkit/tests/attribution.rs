use ndarray::Array2;
use nint_dmint::encoder::TokenMatrix;
use nint_dmint::{Component, DmintModel, EncoderSpec, ModelConfig, Variant};
use nint_eval::attribution::{attribute_matrix, HEATMAP_FORMAT};
use nint_eval::{attribute, render_heatmap_html, validate_heatmap, HeatmapDoc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_model(seed: u64) -> DmintModel {
    DmintModel::new(ModelConfig {
        encoder: EncoderSpec::HashedNgram {
            buckets: 64,
            dim: 16,
            seed: 3,
            max_n: 2,
        },
        max_len: 8,
        attention_heads: 2,
        head_dim: 8,
        kernels: vec![2, 3],
        channels: 8,
        intent_dim: 12,
        hidden: 16,
        init_seed: seed,
        variant: Variant::Full,
    })
    .unwrap()
}

fn l1(model: &DmintModel, tm: &TokenMatrix, c: Component) -> f64 {
    model.forward_matrix(tm).unwrap().feature(c).iter().map(|v| v.abs()).sum()
}

#[test]
fn scores_match_row_perturbation_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..3 {
        let model = small_model(seed);
        let real = 6;
        let values = Array2::from_shape_fn((8, 16), |(j, _)| if j < real { rng.gen_range(-1.0..1.0) } else { 0.0 });
        let tm = TokenMatrix::new(values, (0..8).map(|j| j < real).collect()).unwrap();
        let scores = attribute_matrix(&model, &tm).unwrap();
        for c in Component::ALL {
            for j in 0..8 {
                // Central difference of ‖F_c‖₁ in each coordinate of row j.
                let h = 1e-5;
                let mut sq = 0.0;
                for k in 0..16 {
                    let mut up = tm.clone();
                    up.values[[j, k]] += h;
                    let mut down = tm.clone();
                    down.values[[j, k]] -= h;
                    let d = (l1(&model, &up, c) - l1(&model, &down, c)) / (2.0 * h);
                    sq += d * d;
                }
                let oracle = sq.sqrt();
                let s = scores[c.index()][j];
                if j >= real {
                    assert_eq!(s, 0.0);
                    assert!(oracle < 1e-12, "padding row moves the features: {oracle}");
                } else {
                    assert!(s > 0.0);
                    assert!((s - oracle).abs() <= 0.05 * oracle, "{c:?} token {j}: {s} vs {oracle}");
                }
            }
        }
    }
}

#[test]
fn padding_scores_exactly_zero() {
    let model = small_model(1);
    let article = &nint_dmint::synthetic::synthetic_articles(nint_dmint::synthetic::SyntheticSpec {
        articles: 1,
        seed: 0,
        filler: 1,
        cues: 1,
    })[0];
    let mut text = model.encode_article(article);
    let real = text.len();
    text.pad_to(real + 5);
    let a = attribute(&model, &article.id, &text).unwrap();
    for c in Component::ALL {
        let s = a.scores.get(c);
        assert_eq!(s.len(), real + 5);
        assert!(s[real..].iter().all(|v| *v == 0.0));
        assert!(s[..real].iter().all(|v| *v >= 0.0 && v.is_finite()));
    }
}

#[test]
fn zeroed_belief_extractor_scores_zero() {
    let mut model = small_model(2);
    for name in ["mve.belief.projection.weight", "mve.belief.projection.bias"] {
        let id = model.params().find(name).unwrap();
        model.params_mut().get_mut(id).fill(0.0);
    }
    let article = &nint_dmint::synthetic::synthetic_articles(Default::default())[0];
    let a = attribute(&model, &article.id, &model.encode_article(article)).unwrap();
    assert!(a.scores.belief.iter().all(|v| *v == 0.0));
    assert!(a.scores.plan.iter().any(|v| *v > 0.0));
}

#[test]
fn heatmap_round_trips_and_validates() {
    let model = small_model(4);
    let articles = nint_dmint::synthetic::synthetic_articles(nint_dmint::synthetic::SyntheticSpec {
        articles: 3,
        ..Default::default()
    });
    let attributions = articles
        .iter()
        .map(|a| {
            let mut text = model.encode_article(a);
            text.pad_to(model.config().max_len);
            attribute(&model, &a.id, &text).unwrap()
        })
        .collect();
    let doc = HeatmapDoc::new(attributions);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("heatmap.json");
    std::fs::write(&path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(validate_heatmap(&value).unwrap(), doc);
    assert_eq!(value["format"], HEATMAP_FORMAT);

    let html = render_heatmap_html(&doc);
    assert!(html.starts_with("<!DOCTYPE html>"));
    for a in &doc.articles {
        assert!(html.contains(&format!("<h2>{}</h2>", a.article_id)));
    }
    assert!(html.contains("rgba(240,200,0,") && html.contains("rgba(220,30,30,") && html.contains("rgba(30,90,220,"));
}

#[test]
fn malformed_heatmaps_are_rejected() {
    let good = serde_json::json!({
        "format": HEATMAP_FORMAT,
        "version": 1,
        "articles": [{
            "article_id": "x",
            "tokens": ["a", "[pad]"],
            "mask": [true, false],
            "scores": {"belief": [0.5, 0.0], "desire": [0.1, 0.0], "plan": [0.0, 0.0]}
        }]
    });
    assert!(validate_heatmap(&good).is_ok());
    let mut bad = Vec::new();
    let mut v = good.clone();
    v["articles"][0]["scores"]["plan"][1] = serde_json::json!(0.2);
    bad.push(v);
    let mut v = good.clone();
    v["articles"][0]["scores"]["desire"][0] = serde_json::json!(-0.1);
    bad.push(v);
    let mut v = good.clone();
    v["articles"][0]["mask"] = serde_json::json!([true]);
    bad.push(v);
    let mut v = good.clone();
    v["version"] = serde_json::json!(2);
    bad.push(v);
    let mut v = good.clone();
    v["articles"][0]["extra"] = serde_json::json!(1);
    bad.push(v);
    let mut v = good;
    v["articles"][0]["scores"].as_object_mut().unwrap().remove("belief");
    bad.push(v);
    for v in bad {
        assert!(validate_heatmap(&v).is_err(), "{v}");
    }
}
