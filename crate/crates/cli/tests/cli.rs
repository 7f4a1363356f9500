use std::fs;
use std::path::{Path, PathBuf};

use damt::{load_dataset, run, InputSpec, TreatmentColumn};

const GOLDEN_INPUT: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/golden_input.csv");
const GOLDEN_REPORT: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/golden_report.csv");
// assigns folds [1,1,2,2,1,1,2,2] to the golden input
const GOLDEN_SEED: &str = "87";

fn damt(args: &[&str]) -> i32 {
    run(std::iter::once("damt").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn entries(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

#[test]
fn golden_run_from_the_command_line() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("r.csv");
    let plot = tmp.path().join("plot.csv");
    let audit = tmp.path().join("audit");
    let code = damt(&[
        "analyze", "--input", GOLDEN_INPUT, "--treatment-col", "A", "--folds", "2", "--top", "2",
        "--seed", GOLDEN_SEED, "--out", p(&out), "--plot-data", p(&plot), "--audit-dir", p(&audit),
    ]);
    assert_eq!(code, 0);
    assert_eq!(fs::read(&out).unwrap(), fs::read(GOLDEN_REPORT).unwrap());
    assert_eq!(
        fs::read_to_string(&plot).unwrap(),
        "rank,adjusted_p\n1,1.83296e-13\n2,1.54173e-08\n"
    );
    assert_eq!(
        fs::read_to_string(audit.join("folds.csv")).unwrap(),
        "row,fold\n0,1\n1,1\n2,2\n3,2\n4,1\n5,1\n6,2\n7,2\n"
    );
    assert_eq!(
        fs::read_to_string(audit.join("fold_01.csv")).unwrap(),
        "fold,outcome,effect,rank\n1,y1,5,1\n1,y2,1,3\n1,y3,-2.5,2\n"
    );
    assert_eq!(
        fs::read_to_string(audit.join("fold_02.csv")).unwrap(),
        "fold,outcome,effect,rank\n2,y1,4.5,1\n2,y2,3,2\n2,y3,-3,3\n"
    );
}

#[test]
fn json_report_echoes_configuration() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("r.json");
    let code = damt(&[
        "analyze", "--input", GOLDEN_INPUT, "--treatment-col", "A", "--folds", "2", "--top", "2",
        "--seed", GOLDEN_SEED, "--out", p(&out), "--format", "json",
    ]);
    assert_eq!(code, 0);
    let doc: serde_json::Value = serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
    assert_eq!(doc["method"], "adaptive");
    assert_eq!(doc["config"]["folds"], 2);
    assert_eq!(doc["config"]["top"], 2);
    assert_eq!(doc["config"]["direction"], "absolute");
    assert_eq!(doc["config"]["alpha"], 0.05);
    assert_eq!(doc["config"]["seed"], 87);
    assert_eq!(doc["fingerprint"]["n"], 8);
    assert_eq!(doc["fingerprint"]["n_treated"], 4);
    assert_eq!(doc["fingerprint"]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(doc["rows"][0]["name"], "y1");
    assert_eq!(doc["rows"][0]["ate"], 4.75);
}

#[test]
fn round_trip_through_files_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("d.csv");
    assert_eq!(damt(&["simulate", "--p", "400", "--n", "40", "--seed", "3", "--out", p(&data)]), 0);

    let report = |name: &str, threads: &str| {
        let out = tmp.path().join(name);
        let code = damt(&[
            "analyze", "--input", p(&data), "--treatment-col", "A", "--top", "12", "--seed", "7",
            "--threads", threads, "--out", p(&out),
        ]);
        assert_eq!(code, 0);
        fs::read(out).unwrap()
    };
    let first = report("a.csv", "1");
    assert_eq!(first, report("b.csv", "1"));
    assert_eq!(first, report("c.csv", "2"));
    assert_eq!(first, report("d.csv", "8"));

    let t_data = tmp.path().join("t.tsv");
    let t_file = tmp.path().join("a.txt");
    assert_eq!(
        damt(&[
            "simulate", "--p", "400", "--n", "40", "--seed", "3", "--out", p(&t_data), "--transpose",
            "--treatment-file", p(&t_file), "--delimiter", "tab",
        ]),
        0
    );
    let out = tmp.path().join("t.csv");
    let code = damt(&[
        "analyze", "--input", p(&t_data), "--transpose", "--treatment-file", p(&t_file), "--delimiter", "tab",
        "--top", "12", "--seed", "7", "--out", p(&out),
    ]);
    assert_eq!(code, 0);
    assert_eq!(fs::read(out).unwrap(), first);
}

#[test]
fn expression_matrix_shape() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("m.csv");
    let a = tmp.path().join("a.txt");
    let code = damt(&[
        "simulate", "--p", "5639", "--n", "85", "--out", p(&data), "--transpose", "--treatment-file", p(&a),
    ]);
    assert_eq!(code, 0);
    assert_eq!(fs::read_to_string(&a).unwrap().lines().count(), 85);

    let ds = load_dataset(&InputSpec {
        transpose: true,
        treatment_file: Some(a.clone()),
        ..InputSpec::new(&data)
    })
    .unwrap();
    assert_eq!((ds.n(), ds.p()), (85, 5639));

    let out = tmp.path().join("r.csv");
    let code = damt(&[
        "analyze", "--input", p(&data), "--transpose", "--treatment-file", p(&a), "--direction", "down",
        "--out", p(&out),
    ]);
    assert_eq!(code, 0);
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 31);

    let code = damt(&["analyze", "--input", p(&data), "--transpose", "--treatment-file", p(&a), "--folds", "200"]);
    assert_eq!(code, 1);
}

#[test]
fn naive_covers_every_outcome() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("n.csv");
    assert_eq!(damt(&["naive", "--input", GOLDEN_INPUT, "--treatment-col", "A", "--out", p(&out)]), 0);
    let text = fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("name,ate,raw_p,adjusted_p,mean_cv_rank,pct_top\n"));
}

#[test]
fn usage_errors_exit_2_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("r.csv");
    let cases: [&[&str]; 7] = [
        &["analyze", "--input", GOLDEN_INPUT, "--folds", "1", "--out", p(&out)],
        &["analyze", "--input", GOLDEN_INPUT, "--alpha", "1.5", "--out", p(&out)],
        &["analyze", "--input", GOLDEN_INPUT, "--direction", "sideways", "--out", p(&out)],
        &["analyze", "--input", GOLDEN_INPUT, "--bogus", "--out", p(&out)],
        &["analyze", "--input", GOLDEN_INPUT, "--transpose", "--out", p(&out)],
        &["analyze", "--out", p(&out)],
        &["frobnicate"],
    ];
    for args in cases {
        assert_eq!(damt(args), 2, "{args:?}");
    }
    assert!(entries(tmp.path()).is_empty());
}

#[test]
fn data_errors_exit_1_without_partial_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("r.csv");
    let plot = tmp.path().join("plot.csv");
    let audit = tmp.path().join("audit");

    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "A,g1\n1,0.5\n2,0.1\n").unwrap();
    let missing = tmp.path().join("missing.csv");
    let cases: [Vec<&str>; 4] = [
        vec!["analyze", "--input", p(&bad), "--treatment-col", "A"],
        vec!["analyze", "--input", p(&missing)],
        vec!["analyze", "--input", GOLDEN_INPUT, "--treatment-col", "A", "--folds", "5"],
        vec!["analyze", "--input", GOLDEN_INPUT, "--treatment-col", "A", "--top", "4"],
    ];
    for mut args in cases {
        args.extend(["--out", p(&out), "--plot-data", p(&plot), "--audit-dir", p(&audit)]);
        assert_eq!(damt(&args), 1, "{args:?}");
    }
    assert_eq!(entries(tmp.path()), vec![bad]);
}

#[test]
fn sweep_emits_metrics_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("m.csv");
    let code = damt(&[
        "sweep", "--p", "300", "--n", "40,60", "--sigma", "0.1", "--seeds", "2", "--top", "12",
        "--out", p(&out),
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "seed,sigma,n,method,true_positives,rejections");
    assert_eq!(lines.len(), 1 + 2 * 2 * 2);
    assert!(lines[1].starts_with("0,0.1,40,adaptive,"));
    assert!(lines[2].starts_with("0,0.1,40,naive,"));
}

#[test]
fn treatment_column_by_index_and_name_agree() {
    let by_name = load_dataset(&InputSpec {
        treatment_column: TreatmentColumn::Name("A".into()),
        ..InputSpec::new(GOLDEN_INPUT)
    })
    .unwrap();
    let by_index = load_dataset(&InputSpec::new(GOLDEN_INPUT)).unwrap();
    assert_eq!(by_name, by_index);
}
