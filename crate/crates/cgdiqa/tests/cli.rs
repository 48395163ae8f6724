//! End-to-end tests of the `cgdiqa` binary.

use std::path::Path;
use std::process::{Command, Output};

use cgdiqa::degrade::{gaussian_blur, make_test_page, BlurSpec};
use cgdiqa::imgio::{decode_pgm, save_pgm};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cgdiqa"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn cgdiqa")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_page(dir: &Path, name: &str, seed: u64, sigma: f64) -> String {
    let page = gaussian_blur(&make_test_page(300, 300, seed), &BlurSpec::new(sigma));
    let path = dir.join(name);
    save_pgm(&page, &path).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn score_emits_one_json_record_per_input() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_page(dir.path(), "a.pgm", 1, 0.0);
    let b = write_page(dir.path(), "b.pgm", 2, 1.0);
    let out = run(&["score", &a, &b]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().map(str::trim).collect();
    assert_eq!(lines.len(), 2);
    for (line, path) in lines.iter().zip([&a, &b]) {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["path"], path.as_str());
        assert!(v["score"].as_f64().unwrap() > 0.0);
        assert!(v["patch_count"].as_u64().unwrap() > 0);
        assert_eq!(v["degenerate"], false);
    }
}

#[test]
fn score_csv_has_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_page(dir.path(), "a.pgm", 3, 0.0);
    let out = run(&["score", "--format", "csv", &a]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "path,score,patch_count,pixel_count,mean_gradient,degenerate"
    );
    assert_eq!(lines.count(), 1);
}

#[test]
fn score_missing_file_exits_2_but_scores_the_rest() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_page(dir.path(), "a.pgm", 4, 0.0);
    let missing = dir.path().join("nope.pgm");
    let out = run(&["score", &a, missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout(&out).lines().count(), 1, "good input still scored");
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(
        err.contains("nope.pgm"),
        "stderr names the bad input: {err}"
    );
}

#[test]
fn score_ordering_is_input_order_and_worker_independent() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<String> = (0..6)
        .map(|i| write_page(dir.path(), &format!("p{i}.pgm"), 10 + i as u64, 0.0))
        .collect();
    let args: Vec<&str> = ["score"]
        .iter()
        .copied()
        .chain(paths.iter().map(String::as_str))
        .collect();
    let one = run(&[&args[..], &["--workers", "1"]].concat());
    let eight = run(&[&args[..], &["--workers", "8"]].concat());
    assert!(one.status.success() && eight.status.success());
    assert_eq!(one.stdout, eight.stdout);
}

#[test]
fn relaxed_v_max_never_yields_fewer_patches() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_page(dir.path(), "a.pgm", 5, 1.0);
    let count = |v_max: &str| -> u64 {
        let out = run(&["score", "--v-max", v_max, &a]);
        assert!(out.status.success());
        let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
        v["patch_count"].as_u64().unwrap()
    };
    let (tight, default, loose) = (count("0.05"), count("0.2"), count("0.8"));
    assert!(
        tight <= default && default <= loose,
        "{tight} <= {default} <= {loose}"
    );
}

#[test]
fn dump_patches_writes_boxes_csv_and_overlay() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_page(dir.path(), "a.pgm", 6, 0.0);
    let dump = dir.path().join("patches");
    let out = run(&["score", "--dump-patches", dump.to_str().unwrap(), &a]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dump.join("a_boxes.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "x_min,y_min,x_max,y_max");
    assert!(lines.count() > 0);
    let overlay = decode_pgm(&std::fs::read(dump.join("a_boxes.pgm")).unwrap()).unwrap();
    assert_eq!((overlay.width(), overlay.height()), (300, 300));
}

fn make_manifest(dir: &Path, shuffle: bool) -> String {
    let mut rows = Vec::new();
    for doc in 0..3u64 {
        let page = make_test_page(300, 300, 60 + doc);
        for (i, sigma) in [0.0, 1.0, 2.0, 4.0].iter().enumerate() {
            let name = format!("d{doc}_s{i}.pgm");
            let path = dir.join(&name);
            if !path.exists() {
                save_pgm(&gaussian_blur(&page, &BlurSpec::new(*sigma)), &path).unwrap();
            }
            let acc = 0.9 - 0.2 * i as f64 + 0.02 * doc as f64;
            rows.push(format!("{name},doc{doc},{acc},{acc},{acc}"));
        }
    }
    if shuffle {
        rows.reverse();
        rows.rotate_left(3);
    }
    let manifest = dir.join(if shuffle {
        "shuffled.csv"
    } else {
        "manifest.csv"
    });
    let body = format!(
        "image_path,doc_id,acc_finereader,acc_tesseract,acc_omnipage\n{}\n",
        rows.join("\n")
    );
    std::fs::write(&manifest, body).unwrap();
    manifest.to_str().unwrap().to_string()
}

#[test]
fn eval_reports_each_document_and_is_row_order_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = make_manifest(dir.path(), false);
    let shuffled = make_manifest(dir.path(), true);

    let out = run(&["eval", &manifest]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["engine"], "average");
    let per_doc = report["per_doc"].as_object().unwrap();
    assert_eq!(per_doc.len(), 3);
    for doc in ["doc0", "doc1", "doc2"] {
        assert!(per_doc[doc]["srocc"].as_f64().unwrap() > 0.9);
    }
    assert!(report["median_lcc"].as_f64().unwrap() > 0.8);

    let out2 = run(&["eval", &shuffled]);
    assert!(out2.status.success());
    assert_eq!(out.stdout, out2.stdout, "row order must not matter");
}

#[test]
fn eval_engine_all_emits_four_reports() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = make_manifest(dir.path(), false);
    let out = run(&["eval", "--engine", "all", &manifest]);
    assert!(out.status.success());
    let reports: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let names: Vec<&str> = reports
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["engine"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["finereader", "tesseract", "omnipage", "average"]);
}

#[test]
fn eval_csv_format_has_per_doc_and_summary_rows() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = make_manifest(dir.path(), false);
    let out = run(&["eval", "--format", "csv", &manifest]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text
        .lines()
        .next()
        .unwrap()
        .starts_with("kind,engine,doc_id"));
    assert_eq!(text.lines().filter(|l| l.starts_with("doc,")).count(), 3);
    assert!(text.lines().any(|l| l.starts_with("median,")));
    assert!(text.lines().any(|l| l.starts_with("global,")));
}

#[test]
fn eval_bad_manifest_exits_2_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("bad.csv");
    std::fs::write(
        &manifest,
        "image_path,doc_id,acc_finereader,acc_tesseract,acc_omnipage\nimg.pgm,doc0,1.5,0.5,0.5\n",
    )
    .unwrap();
    let out = run(&["eval", manifest.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(
        err.contains("line 2"),
        "stderr cites the offending line: {err}"
    );
}

#[test]
fn degrade_writes_one_output_per_sigma() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_page(dir.path(), "page.pgm", 7, 0.0);
    let out = run(&["degrade", "--sigma", "1", "--sigma", "2.5", &a]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in ["page_sigma1.pgm", "page_sigma2.5.pgm"] {
        let blurred = decode_pgm(&std::fs::read(dir.path().join(name)).unwrap()).unwrap();
        assert_eq!((blurred.width(), blurred.height()), (300, 300));
    }
}

#[test]
fn gen_fixture_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("f1.pgm");
    let out2 = dir.path().join("f2.pgm");
    let out3 = dir.path().join("f3.pgm");
    for (seed, path) in [("11", &out1), ("11", &out2), ("12", &out3)] {
        let args = [
            "gen-fixture",
            "--width",
            "200",
            "--height",
            "160",
            "--seed",
            seed,
            "--out",
            path.to_str().unwrap(),
        ];
        assert!(run(&args).status.success());
    }
    let (b1, b2, b3) = (
        std::fs::read(&out1).unwrap(),
        std::fs::read(&out2).unwrap(),
        std::fs::read(&out3).unwrap(),
    );
    assert_eq!(b1, b2, "same seed, same bytes");
    assert_ne!(b1, b3, "different seed, different page");
    let img = decode_pgm(&b1).unwrap();
    assert_eq!((img.width(), img.height()), (200, 160));
}

#[test]
fn workers_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_page(dir.path(), "a.pgm", 9, 0.0);
    let out = bin()
        .env("CGDIQA_WORKERS", "2")
        .args(["score", &a])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 1);
}
