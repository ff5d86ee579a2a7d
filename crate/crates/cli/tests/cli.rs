use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn polydisk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polydisk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn help_names_the_results() {
    let cases: &[(&[&str], &str)] = &[
        (&["matrix", "affine", "--help"], "Weyl inequality"),
        (&["matrix", "kron", "--help"], "Schechter"),
        (
            &["matrix", "normbound", "--help"],
            "√((1+|φ(0)|)/(1−|φ(0)|))",
        ),
        (&["schatten", "--help"], "Euler product"),
        (&["bounds", "linear", "--help"], "Dedekind eta bound"),
        (&["bounds", "general", "--help"], "inf_{x>1}"),
        (&["bounds", "supscha", "--help"], "δ = α/(α+1)"),
    ];
    for (args, needle) in cases {
        let o = polydisk(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}");
        assert!(stdout(&o).contains(needle), "{args:?} help lacks {needle}");
    }
}

#[test]
fn csv_to_stdout_has_header_and_lf() {
    let o = polydisk(&["rearrange", "--weights", "linear:beta=1", "--take", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,log_value,a_n,witness");
    assert_eq!(lines.len(), 6);
    assert!(text.ends_with('\n'));
    // a_2 = e^{-1} with 17 significant digits
    let a2 = lines[2].split(',').nth(2).unwrap();
    assert_eq!(a2, "3.6787944117144233e-1");
}

#[test]
fn tiny_eigenvalues_are_written_in_exp_form() {
    let o = polydisk(&[
        "rearrange",
        "--weights",
        "list:1e-310",
        "--take",
        "3",
        "--quiet",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(2).unwrap().split(',').collect();
    let l: f64 = row[1].parse().unwrap();
    assert!(l > 700.0);
    assert_eq!(row[2], format!("exp(-{})", row[1]));
}

#[test]
fn manifest_and_json_on_success() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("lin.csv");
    let json = dir.path().join("lin.json");
    let o = polydisk(&[
        "bounds",
        "linear",
        "--N",
        "10,1000",
        "--csv",
        csv.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    let table = std::fs::read_to_string(&csv).unwrap();
    assert!(table.starts_with("N,"));
    assert!(table.lines().next().unwrap().contains(",D,c"));

    let report = read_json(&json);
    assert_eq!(report["subcommand"], "bounds linear");
    assert_eq!(report["report"]["rows"].as_array().unwrap().len(), 2);

    let m = read_json(&dir.path().join("lin.csv.manifest.json"));
    assert_eq!(m["status"], "ok");
    assert_eq!(m["exit_code"], 0);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
    assert_eq!(m["parameters"]["seed"], 0);
}

#[test]
fn domain_error_exits_one_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let man = dir.path().join("m.json");
    let o = polydisk(&[
        "matrix",
        "affine",
        "--s",
        "0.9",
        "--c",
        "0.2",
        "--m",
        "3",
        "--manifest",
        man.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("not a self-map certificate"));
    let m = read_json(&man);
    assert_eq!(m["status"], "error");
    assert_eq!(m["exit_code"], 1);
    assert_eq!(m["subcommand"], "matrix affine");
}

#[test]
fn usage_error_exits_two_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("x.csv");
    let o = polydisk(&["bounds", "linear", "--csv", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!csv.exists());
    let m = read_json(&dir.path().join("x.csv.manifest.json"));
    assert_eq!(m["status"], "usage-error");
    assert_eq!(m["exit_code"], 2);
}

#[test]
fn bad_inputs_never_panic() {
    let cases: &[&[&str]] = &[
        &["rearrange", "--weights", "bogus", "--take", "3"],
        &["rearrange", "--weights", "list:1.5", "--take", "3"],
        &["schatten", "--weights", "list:0.5", "--p", "-1"],
        &["schatten", "--weights", "linear:beta=1", "--p", "nan"],
        &["bounds", "linear", "--N", "0,1"],
        &["bounds", "general", "--weights", "list:0.5", "--N", "1"],
        &["bounds", "supscha", "--alpha", "2", "--N-list", "10"],
        &["bounds", "supscha", "--alpha", "0.5", "--N-list", "2"],
        &[
            "bounds",
            "diverge",
            "--weights",
            "linear:beta=1",
            "--p",
            "0.5",
            "--N",
            "10",
        ],
        &[
            "bounds",
            "cruci",
            "--weights",
            "linear:beta=1",
            "--p",
            "9",
            "--M",
            "50",
        ],
        &["matrix", "affine", "--s", "0.5+", "--c", "0", "--m", "3"],
        &["matrix", "affine", "--s", "inf", "--c", "0", "--m", "3"],
        &[
            "matrix", "affine", "--s", "0.5", "--c", "0", "--m", "100000",
        ],
        &[
            "matrix", "affine", "--s", "0.5", "--c", "0", "--m", "3", "--weyl", "9",
        ],
        &[
            "matrix",
            "kron",
            "--spec1",
            "moebius:u=1",
            "--spec2",
            "identity:2",
        ],
        &[
            "matrix",
            "kron",
            "--spec1",
            "identity:100",
            "--spec2",
            "identity:100",
        ],
        &[
            "matrix",
            "kron",
            "--spec1",
            "diag:",
            "--spec2",
            "identity:0",
        ],
        &["matrix", "kron", "--random", "2", "--max-dim", "0"],
        &["matrix", "normbound", "--s", "0", "--c", "1", "--m", "4"],
        &[
            "matrix",
            "normbound",
            "--s",
            "0.5",
            "--c",
            "0.1",
            "--m",
            "0",
        ],
        &["matrix", "spectrum", "--weights", "list:0.5", "--take", "0"],
        &[
            "--seed",
            "-1",
            "rearrange",
            "--weights",
            "list:0.5",
            "--take",
            "1",
        ],
        &["nonsense"],
    ];
    let mut bad = Vec::new();
    for args in cases {
        let o = polydisk(args);
        let code = o.status.code();
        if !matches!(code, Some(1) | Some(2)) || stderr(&o).contains("panicked") {
            bad.push(format!("{args:?} exited {code:?}: {}", stderr(&o)));
        }
    }
    assert!(bad.is_empty(), "{bad:#?}");
}

#[test]
fn seeds_select_the_draws() {
    let run = |seed: &str| {
        stdout(&polydisk(&[
            "matrix", "affine", "--random", "5", "--seed", seed, "--quiet",
        ]))
    };
    assert_eq!(run("3"), run("3"));
    assert_ne!(run("3"), run("4"));
}

#[test]
fn random_batches_pass() {
    for args in [
        ["matrix", "affine", "--random", "50"],
        ["matrix", "kron", "--random", "30"],
        ["matrix", "normbound", "--random", "20"],
    ] {
        let o = polydisk(&args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn affine_matrix_columns_are_powers_of_phi() {
    let o = polydisk(&[
        "matrix", "affine", "--s", "0.5", "--c", "0.25", "--m", "1", "--quiet",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 3);
    // column k = 1 holds φ(z) = 0.25 + 0.5 z
    assert!(
        rows[1].ends_with("2.5000000000000000e-1+0.0000000000000000e0i"),
        "{}",
        rows[1]
    );
    assert!(
        rows[2].ends_with("5.0000000000000000e-1+0.0000000000000000e0i"),
        "{}",
        rows[2]
    );
}
