use std::path::Path;
use std::process::{Command, Output};

fn bjac(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bjac"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn bjac_bare(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bjac"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn check_a_example_passes() {
    let d = tempfile::tempdir().unwrap();
    let o = bjac(
        d.path(),
        &[
            "check-a",
            "--family",
            "example1",
            "--alpha",
            "0.75",
            "--b",
            "1",
            "--c",
            "0",
            "--a",
            "1",
            "--horizon",
            "100000",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = json(&d.path().join("check_a.json"));
    assert_eq!(r["schema_version"], "1.0");
    assert_eq!(r["check"], "discreteness_witnesses");
    assert!(r["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .all(|v| v["holds"] == true));
    let meta = json(&d.path().join("metadata.json"));
    assert_eq!(meta["exit_code"], 0);
    assert_eq!(meta["command"], "check-a");
}

#[test]
fn count_reports_an_integer() {
    let d = tempfile::tempdir().unwrap();
    let o = bjac(
        d.path(),
        &[
            "count",
            "--family",
            "example1",
            "--interval",
            "-5",
            "-1",
            "--N",
            "1000",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = json(&d.path().join("count.json"));
    let n: u64 = stdout(&o).trim().parse().unwrap();
    assert_eq!(r["count"].as_u64(), Some(n));
    assert!(n > 0);
    assert_eq!(r["N"], 1000);
}

#[test]
fn det_identity_experiment_writes_csv() {
    let d = tempfile::tempdir().unwrap();
    let o = bjac(
        d.path(),
        &["reproduce", "--experiment", "prop3-det-identity"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv =
        std::fs::read_to_string(d.path().join("prop3-det-identity/det_identity.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,det,closed_form,diff"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse::<f64>().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 499);
    for r in rows {
        assert!(r[3] <= 1e-10);
        assert_eq!(r[2], (1.0 - 1.0 / r[0]).powf(0.75));
    }
}

#[test]
fn verdict_failure_exits_two() {
    let d = tempfile::tempdir().unwrap();
    let o = bjac(
        d.path(),
        &[
            "check-b",
            "--family",
            "prop5",
            "--d1",
            "2",
            "--d2",
            "2",
            "--horizon",
            "10000",
        ],
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let r = json(&d.path().join("check_b.json"));
    assert_eq!(r["margins"]["critical"], true);
    assert!(stdout(&o).contains("fails (< 1 not satisfied)"));
    assert_eq!(json(&d.path().join("metadata.json"))["exit_code"], 2);
}

#[test]
fn usage_errors_exit_one() {
    let d = tempfile::tempdir().unwrap();
    let o = bjac(
        d.path(),
        &[
            "count",
            "--family",
            "exmaple1",
            "--interval",
            "0",
            "1",
            "--N",
            "10",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("did you mean `example1`"),
        "{}",
        stderr(&o)
    );

    let o = bjac(
        d.path(),
        &[
            "count",
            "--family",
            "example1",
            "--param",
            "alpah=0.7",
            "--interval",
            "0",
            "1",
            "--N",
            "10",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("did you mean `alpha`"),
        "{}",
        stderr(&o)
    );

    let o = bjac(
        d.path(),
        &["count", "--family", "example1", "--interval", "0", "1"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`N`"), "{}", stderr(&o));

    let o = bjac(
        d.path(),
        &[
            "count",
            "--family",
            "example1",
            "--alpha",
            "2",
            "--interval",
            "0",
            "1",
            "--N",
            "10",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_subcommand_suggests() {
    let o = bjac_bare(&["chek-a"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("check-a"), "{}", stderr(&o));
    assert_eq!(bjac_bare(&["--help"]).status.code(), Some(0));
    assert_eq!(bjac_bare(&["--version"]).status.code(), Some(0));
    assert_eq!(bjac_bare(&[]).status.code(), Some(1));
}

#[test]
fn unknown_experiment_suggests() {
    let d = tempfile::tempdir().unwrap();
    let o = bjac(d.path(), &["reproduce", "--experiment", "example0-typo"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("did you mean `example0`"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn config_file_with_flag_override() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"family": "example1", "params": {"alpha": 0.75, "b": 1.0}, "interval": [-5, -1], "N": 500}"#,
    )
    .unwrap();
    let a = d.path().join("a");
    let o = bjac(&a, &["count", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let from_file = json(&a.join("count.json"));
    assert_eq!(from_file["N"], 500);

    let b = d.path().join("b");
    let o = bjac(
        &b,
        &[
            "count",
            "--config",
            cfg.to_str().unwrap(),
            "--N",
            "1000",
            "--b",
            "2",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let overridden = json(&b.join("count.json"));
    assert_eq!(overridden["N"], 1000);
    assert_eq!(overridden["params"]["b"], 2.0);
    assert_eq!(overridden["params"]["alpha"], 0.75);

    std::fs::write(
        &cfg,
        r#"{"family": "example1", "N": 10, "intervall": [0, 1]}"#,
    )
    .unwrap();
    let o = bjac(&a, &["count", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown field"), "{}", stderr(&o));
}

#[test]
fn out_dir_from_environment() {
    let d = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_bjac"))
        .args([
            "count",
            "--family",
            "example1",
            "--interval",
            "0",
            "1",
            "--N",
            "20",
        ])
        .env("BJAC_OUT_DIR", d.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(d.path().join("count.json").exists());
}

#[test]
fn empty_manifest_exits_zero() {
    let d = tempfile::tempdir().unwrap();
    let m = d.path().join("m.json");
    std::fs::write(&m, r#"{"experiments": []}"#).unwrap();
    let o = bjac(d.path(), &["reproduce", "--manifest", m.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = json(&d.path().join("summary.json"));
    assert_eq!(s["rows"].as_array().unwrap().len(), 0);
    assert_eq!(s["all_pass"], true);
}

#[test]
fn wrong_tolerance_fails_its_row() {
    let d = tempfile::tempdir().unwrap();
    let m = d.path().join("m.json");
    std::fs::write(
        &m,
        r#"{"experiments": [{"name": "prop3-det-identity", "tolerance": 1e-30}, {"name": "example0"}]}"#,
    )
    .unwrap();
    let o = bjac(d.path(), &["reproduce", "--manifest", m.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let s = json(&d.path().join("summary.json"));
    let rows = s["rows"].as_array().unwrap();
    assert_eq!(rows[0]["pass"], false);
    assert_eq!(rows[1]["pass"], true);
    let csv = std::fs::read_to_string(d.path().join("summary.csv")).unwrap();
    assert!(csv.starts_with("name,reference,tolerance,expected,observed,pass\n"));
    assert!(csv.lines().nth(1).unwrap().ends_with(",false"));
}

#[test]
fn tolerance_on_experiment_without_one_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    let m = d.path().join("m.json");
    std::fs::write(
        &m,
        r#"{"experiments": [{"name": "thmA-bound", "tolerance": 1}]}"#,
    )
    .unwrap();
    let o = bjac(d.path(), &["reproduce", "--manifest", m.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let d = tempfile::tempdir().unwrap();
    let args = [
        "probe", "--family", "example1", "--a", "2", "--trials", "50", "--seed", "7",
    ];
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    assert_eq!(bjac(&a, &args).status.code(), Some(0));
    assert_eq!(
        bjac(&b, &[&args[..], &["--workers", "1"]].concat())
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        std::fs::read(a.join("probe.json")).unwrap(),
        std::fs::read(b.join("probe.json")).unwrap()
    );

    let c = d.path().join("c");
    assert_eq!(
        bjac(
            &c,
            &["probe", "--family", "example1", "--a", "2", "--trials", "50", "--seed", "8"]
        )
        .status
        .code(),
        Some(0)
    );
    let pa = json(&a.join("probe.json"));
    let pc = json(&c.join("probe.json"));
    assert_ne!(pa["seed"], pc["seed"]);
}

#[test]
fn subordinacy_expectation_controls_exit() {
    let d = tempfile::tempdir().unwrap();
    let base = ["subordinacy", "--family", "step3", "--lambda", "1"];
    let o = bjac(
        d.path(),
        &[&base[..], &["--expect", "bounded-oscillating"]].concat(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(d.path().join("subordinacy.csv")).unwrap();
    assert!(csv.starts_with("N,ratio\n"));
    let path = std::fs::read_to_string(d.path().join("u_path.csv")).unwrap();
    assert!(path.starts_with("n,re,im,log_modulus\n"));
    let o = bjac(d.path(), &[&base[..], &["--expect", "to-zero"]].concat());
    assert_eq!(o.status.code(), Some(2));
    let o = bjac(d.path(), &[&base[..], &["--expect", "sideways"]].concat());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn transfer_with_custom_splitting() {
    let d = tempfile::tempdir().unwrap();
    // constant-coefficient part of the two-step product plus its 1/n correction
    let cfg = d.path().join("t.json");
    std::fs::write(
        &cfg,
        r#"{
            "family": "heuristic2step", "lambda": 1.0, "window": [10, 5000],
            "splitting": {"name": "two-step", "steps": 2, "terms": [
                {"matrix": [[-1, 0], [0, -1]]},
                {"coeff": "one", "power": 1, "scale": 2, "matrix": [[0.8, 0], [0, 0.8]]}
            ]}
        }"#,
    )
    .unwrap();
    let o = bjac(d.path(), &["transfer", "--config", cfg.to_str().unwrap()]);
    assert!(
        matches!(o.status.code(), Some(0) | Some(2)),
        "{}",
        stderr(&o)
    );
    let r = json(&d.path().join("transfer.json"));
    assert_eq!(r["levinson"]["splitting"], "two-step");
    assert_eq!(r["k"], 2);
    let csv = std::fs::read_to_string(d.path().join("products.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4991);

    let o = bjac(
        d.path(),
        &["transfer", "--config", cfg.to_str().unwrap(), "--k", "3"],
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn families_lists_catalog() {
    let o = bjac_bare(&["families"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    for name in [
        "scalar_power",
        "example1",
        "step3",
        "prop5",
        "prop6",
        "heuristic2step",
    ] {
        assert!(s.contains(name), "{name}");
    }
}
