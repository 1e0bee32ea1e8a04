//! End-to-end checks of the `poserec` binary: the whole pipeline on a small
//! corpus, the exit-code contract of each subcommand, and byte-level
//! determinism of the file artifacts.

use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn poserec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_poserec"))
        .args(args)
        .output()
        .expect("binary spawns")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal termination")
}

fn stdout_text(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn stderr_text(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).unwrap()
}

#[track_caller]
fn assert_exit(output: &Output, expected: i32) {
    assert_eq!(
        exit_code(output),
        expected,
        "stdout:\n{}\nstderr:\n{}",
        stdout_text(output),
        stderr_text(output)
    );
}

/// Writes `count` noise PNGs (per-image seed, so every histogram is unique).
fn write_corpus(dir: &Path, count: usize) -> Vec<String> {
    std::fs::create_dir_all(dir).unwrap();
    (0..count)
        .map(|i| {
            let name = format!("img_{i:04}.png");
            let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
            let (w, h) = (16u32, 12u32);
            let pixels: Vec<u8> = (0..w as usize * h as usize * 3)
                .map(|_| rng.random())
                .collect();
            image::RgbImage::from_raw(w, h, pixels)
                .unwrap()
                .save(dir.join(&name))
                .unwrap();
            name
        })
        .collect()
}

fn path_str(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn pipeline_smoke_stays_under_a_minute() {
    let started = Instant::now();
    let work = tempfile::tempdir().unwrap();
    let root = work.path();
    let corpus = root.join("corpus");
    let names = write_corpus(&corpus, 100);

    let index_path = root.join("index.json");
    let out = poserec(&[
        "index",
        "--dir",
        path_str(&corpus),
        "--out",
        path_str(&index_path),
    ]);
    assert_exit(&out, 0);
    assert!(stdout_text(&out).contains("indexed 100 images (0 skipped)"));

    let query_image = corpus.join(&names[7]);
    let results_dir = root.join("results");
    let out = poserec(&[
        "query",
        "--index",
        path_str(&index_path),
        "--input",
        path_str(&query_image),
        "--out-dir",
        path_str(&results_dir),
    ]);
    assert_exit(&out, 0);
    let report = stdout_text(&out);
    let rank_one = report
        .lines()
        .find(|line| line.trim_start().starts_with('1'))
        .unwrap();
    assert!(rank_one.contains(&names[7]), "rank 1 line: {rank_one}");
    assert!(rank_one.contains("0.000000000"), "rank 1 line: {rank_one}");
    let rank_copies = std::fs::read_dir(&results_dir)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .starts_with("rank_")
        })
        .count();
    assert_eq!(rank_copies, 12);
    let manifest_path = results_dir.join("results.json");
    assert!(manifest_path.is_file());

    let split_path = root.join("split.json");
    let out = poserec(&[
        "split",
        "--results",
        path_str(&manifest_path),
        "--out",
        path_str(&split_path),
        "--seed",
        "5",
    ]);
    assert_exit(&out, 0);
    assert!(stdout_text(&out).contains("set A:"));
    assert!(split_path.is_file());

    let model_path = root.join("model.json");
    let losses_path = root.join("losses.csv");
    let train_args = |model: &str, losses: &str| {
        poserec(&[
            "gan-train",
            "--split",
            path_str(&split_path),
            "--epochs",
            "1",
            "--size",
            "8",
            "--out",
            model,
            "--loss-log",
            losses,
            "--seed",
            "3",
        ])
    };
    let out = train_args(path_str(&model_path), path_str(&losses_path));
    assert_exit(&out, 0);
    let csv = std::fs::read_to_string(&losses_path).unwrap();
    assert_eq!(csv.lines().count(), 37);
    assert_eq!(csv.lines().next().unwrap(), "epoch,iteration,d_loss,g_loss");

    // Same seed, same split: the loss log must come back byte-identical.
    let model2_path = root.join("model2.json");
    let losses2_path = root.join("losses2.csv");
    let out = train_args(path_str(&model2_path), path_str(&losses2_path));
    assert_exit(&out, 0);
    assert_eq!(
        std::fs::read(&losses_path).unwrap(),
        std::fs::read(&losses2_path).unwrap()
    );

    let samples_dir = root.join("samples");
    let sample_args = |dir: &Path| {
        poserec(&[
            "gan-sample",
            "--model",
            path_str(&model_path),
            "--n",
            "3",
            "--out-dir",
            path_str(dir),
            "--seed",
            "11",
            "--verbose",
        ])
    };
    let out = sample_args(&samples_dir);
    assert_exit(&out, 0);
    assert!(stdout_text(&out).contains("wrote 3 samples"));
    assert_eq!(stderr_text(&out).matches("wrote ").count(), 3);
    for k in 1..=3 {
        assert!(samples_dir.join(format!("sample_00{k}.png")).is_file());
    }

    // Sampling is a pure function of (model, seed): rerun and compare bytes.
    let samples2_dir = root.join("samples2");
    let out = sample_args(&samples2_dir);
    assert_exit(&out, 0);
    for k in 1..=3 {
        let name = format!("sample_00{k}.png");
        assert_eq!(
            std::fs::read(samples_dir.join(&name)).unwrap(),
            std::fs::read(samples2_dir.join(&name)).unwrap()
        );
    }

    assert!(
        started.elapsed() < Duration::from_secs(60),
        "pipeline took {:?}",
        started.elapsed()
    );
}

#[test]
fn index_reports_the_full_corpus_scale() {
    let work = tempfile::tempdir().unwrap();
    let corpus = work.path().join("corpus");
    write_corpus(&corpus, 1500);
    let index_path = work.path().join("index.json");
    let out = poserec(&[
        "index",
        "--dir",
        path_str(&corpus),
        "--out",
        path_str(&index_path),
    ]);
    assert_exit(&out, 0);
    assert!(stdout_text(&out).contains("indexed 1500 images"));
}

#[test]
fn index_distinguishes_empty_from_missing_directories() {
    let work = tempfile::tempdir().unwrap();
    let empty = work.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let index_path = work.path().join("index.json");

    let out = poserec(&[
        "index",
        "--dir",
        path_str(&empty),
        "--out",
        path_str(&index_path),
    ]);
    assert_exit(&out, 2);
    assert!(stderr_text(&out).contains("no decodable images"));

    let missing = work.path().join("nowhere");
    let out = poserec(&[
        "index",
        "--dir",
        path_str(&missing),
        "--out",
        path_str(&index_path),
    ]);
    assert_exit(&out, 1);
    assert!(stderr_text(&out).contains("not a directory"));
}

#[test]
fn query_rejects_zero_k_and_corrupt_index() {
    let work = tempfile::tempdir().unwrap();
    let root = work.path();

    // Flag validation fires before any file is touched.
    let out = poserec(&[
        "query",
        "--index",
        "x.json",
        "--input",
        "y.png",
        "--out-dir",
        "o",
        "--k",
        "0",
    ]);
    assert_exit(&out, 2);

    let corpus = root.join("corpus");
    let names = write_corpus(&corpus, 1);
    let bad_index = root.join("bad_index.json");
    std::fs::write(&bad_index, "not even json").unwrap();
    let out = poserec(&[
        "query",
        "--index",
        path_str(&bad_index),
        "--input",
        path_str(&corpus.join(&names[0])),
        "--out-dir",
        path_str(&root.join("results")),
    ]);
    assert_exit(&out, 1);
    assert!(stderr_text(&out).contains("corrupt index"));
}

#[test]
fn split_rejects_wrong_cardinality() {
    let work = tempfile::tempdir().unwrap();
    let manifest_path = work.path().join("results.json");
    let items: Vec<String> = (0..11)
        .map(|i| {
            format!(
                r#"{{"rank":{},"id":"img_{i}","score":0.0,"source_path":"img_{i}.png"}}"#,
                i + 1
            )
        })
        .collect();
    let manifest = format!(
        r#"{{"metric":"bhattacharyya","k":11,"items":[{}]}}"#,
        items.join(",")
    );
    std::fs::write(&manifest_path, manifest).unwrap();

    let out = poserec(&[
        "split",
        "--results",
        path_str(&manifest_path),
        "--out",
        path_str(&work.path().join("split.json")),
    ]);
    assert_exit(&out, 2);
    assert!(stderr_text(&out).contains("got 11"));
}

#[test]
fn gan_train_rejects_zero_epochs() {
    let work = tempfile::tempdir().unwrap();
    let split_path = work.path().join("split.json");
    let ids: Vec<String> = (0..12).map(|i| format!("img_{i}")).collect();
    let quoted = |slice: &[String]| {
        slice
            .iter()
            .map(|id| format!(r#""{id}""#))
            .collect::<Vec<_>>()
            .join(",")
    };
    let sources = ids
        .iter()
        .map(|id| format!(r#""{id}":"{id}.png""#))
        .collect::<Vec<_>>()
        .join(",");
    let split = format!(
        r#"{{"version":1,"seed":0,"set_a":[{}],"set_b":[{}],"sources":{{{}}}}}"#,
        quoted(&ids[..6]),
        quoted(&ids[6..]),
        sources
    );
    std::fs::write(&split_path, split).unwrap();

    // Config validation runs before any source image is opened, so the
    // dangling source paths above are never touched.
    let out = poserec(&[
        "gan-train",
        "--split",
        path_str(&split_path),
        "--epochs",
        "0",
        "--size",
        "8",
        "--out",
        path_str(&work.path().join("model.json")),
        "--loss-log",
        path_str(&work.path().join("losses.csv")),
    ]);
    assert_exit(&out, 2);
    assert!(stderr_text(&out).contains("epochs must be at least 1"));
}

#[test]
fn gan_sample_rejects_a_corrupt_model() {
    let work = tempfile::tempdir().unwrap();
    let model_path = work.path().join("model.json");
    std::fs::write(&model_path, r#"{"garbage":true}"#).unwrap();
    let out = poserec(&[
        "gan-sample",
        "--model",
        path_str(&model_path),
        "--n",
        "1",
        "--out-dir",
        path_str(&work.path().join("samples")),
    ]);
    assert_exit(&out, 1);
    assert!(stderr_text(&out).contains("corrupt model"));
}
