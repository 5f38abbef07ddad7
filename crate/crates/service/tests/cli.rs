mod common;

use std::collections::BTreeSet;
use std::fs;

use cartograph::corpus::{load_corpus, Format};
use cartograph::dpo::{write_triples, OverlapReport};
use cartograph::embedding::{write_cache, HashingProvider};
use cartograph::geometry::MapModel;
use cartograph::synthetic::{planted_preferences, Planting};
use cartograph_service::compare::CompareReport;
use common::{run_bin, s, write_planted, EMBEDDER};

fn code(args: &[&str]) -> i32 {
    run_bin(args).status.code().expect("exit code")
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, _) = write_planted(dir.path(), 2, 5, 1);
    let out = dir.path().join("out");

    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["map", "--no-such-flag"]), 2);
    assert_eq!(code(&["map", "--input", s(&corpus)]), 2, "missing --out");
    assert_eq!(code(&["map", "--input", s(&corpus), "--out", s(&out)]), 2, "no embedder");
    assert_eq!(
        code(&["compare", "--input", s(&corpus), "--cache", "only-one.jsonl", "--out", "x.json"]),
        2
    );
    assert_eq!(
        code(&["frames", "--input", s(&corpus), "--axis-x", "a::b", "--axis-y", "c::d", "--cache", "c.jsonl"]),
        2,
        "frames without a live embedder"
    );
    assert_eq!(
        code(&["frames", "--input", s(&corpus), "--axis-x", "no separator", "--axis-y", "c::d", "--embedder-url", EMBEDDER]),
        2
    );
    assert_eq!(
        code(&["map", "--input", "/nonexistent/corpus.jsonl", "--embedder-url", EMBEDDER, "--out", s(&out)]),
        1
    );
    assert_eq!(code(&["--config", "/nonexistent/config.toml", "map"]), 2);
}

#[test]
fn map_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, _) = write_planted(dir.path(), 4, 15, 2);
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = run_bin(&[
            "map", "--input", s(&corpus), "--embedder-url", EMBEDDER, "--k", "4", "--seed", "42", "--out", s(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push((fs::read(out.join("map.json")).unwrap(), fs::read(out.join("ingest_report.json")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let map = MapModel::from_json(std::str::from_utf8(&outputs[0].0).unwrap()).unwrap();
    assert_eq!(map.points.len(), 60);
    assert_eq!(map.topics.len(), 4);
    assert_eq!(map.seed, 42);
    assert_eq!(map.embedder, EMBEDDER);
    let report: serde_json::Value = serde_json::from_slice(&outputs[0].1).unwrap();
    assert_eq!(report["loaded"], 60);
}

#[test]
fn config_fills_unset_flags_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, _) = write_planted(dir.path(), 3, 10, 4);
    let config = dir.path().join("cartograph.toml");
    fs::write(
        &config,
        format!("embedder_url = \"{EMBEDDER}\"\niterations = 300\nport = 1\n\n[map]\nk = 3\n"),
    )
    .unwrap();

    let out = dir.path().join("from-config");
    let o = run_bin(&["--config", s(&config), "map", "--input", s(&corpus), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let map = MapModel::from_json(&fs::read_to_string(out.join("map.json")).unwrap()).unwrap();
    assert_eq!(map.topics.len(), 3);

    let out = dir.path().join("flag-wins");
    let o = run_bin(&["map", "--config", s(&config), "--input", s(&corpus), "--k", "2", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let map = MapModel::from_json(&fs::read_to_string(out.join("map.json")).unwrap()).unwrap();
    assert_eq!(map.topics.len(), 2);
}

#[test]
fn compare_four_caches_gives_symmetric_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus_path, _) = write_planted(dir.path(), 4, 10, 5);
    let (corpus, _) = load_corpus(&corpus_path, Format::Jsonl, "text", None).unwrap();
    let mut args: Vec<String> = vec!["compare".into(), "--input".into(), s(&corpus_path).into()];
    for (i, dim) in [16usize, 24, 32, 48].into_iter().enumerate() {
        let name = format!("fake-{i}");
        let provider = HashingProvider::new(&name, dim, i as u64);
        let vectors: Vec<Vec<f64>> = corpus.texts().map(|t| provider.embed_one(t)).collect();
        let path = dir.path().join(format!("cache-{i}.jsonl"));
        write_cache(&path, &name, corpus.ids().zip(vectors.iter().map(Vec::as_slice))).unwrap();
        args.extend(["--cache".into(), s(&path).into()]);
    }
    let out = dir.path().join("compare.json");
    args.extend(["--k".into(), "4".into(), "--iterations".into(), "300".into(), "--out".into(), s(&out).into()]);
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = run_bin(&argv);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let report = CompareReport::load(&out).unwrap();
    assert_eq!(report.embedders, ["fake-0", "fake-1", "fake-2", "fake-3"]);
    assert_eq!(report.documents, 40);
    for i in 0..4 {
        assert_eq!(report.ari[i][i], 1.0);
        for j in 0..4 {
            assert_eq!(report.ari[i][j], report.ari[j][i]);
            assert!(report.ari[i][j] <= 1.0 && report.ari[i][j] >= -1.0);
        }
    }
}

#[test]
fn dpo_filter_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let planted = planted_preferences(6, 20, 2, &Planting::default(), 3);
    let input = dir.path().join("pairs.jsonl");
    write_triples(&input, &planted.triples).unwrap();
    let out = dir.path().join("result").join("filtered.jsonl");
    let cache = dir.path().join("cache.jsonl");
    let o = run_bin(&[
        "dpo-filter", "--input", s(&input), "--k", "6", "--threshold", "2", "--embedder-url", "hash://64?seed=5",
        "--cache", s(&cache), "--out", s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let kept: Vec<String> = fs::read_to_string(&out)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["id"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(kept, planted.distinct_ids);
    let report: OverlapReport =
        serde_json::from_str(&fs::read_to_string(out.with_file_name("overlap_report.json")).unwrap()).unwrap();
    assert_eq!(report.unique_chosen_topic_ids.len(), 2);
    assert_eq!(report.retained_triple_ids, planted.distinct_ids);
    let map = MapModel::from_json(&fs::read_to_string(out.with_file_name("chosen_map.json")).unwrap()).unwrap();
    assert_eq!(map.points.len(), 120);

    // Both sides are cached under distinct keys.
    let cached: BTreeSet<String> = fs::read_to_string(&cache)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["id"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(cached.len(), 240);
    assert!(cached.contains("chosen/pair-0000") && cached.contains("rejected/pair-0000"));
}
