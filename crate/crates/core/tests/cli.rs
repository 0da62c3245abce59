use std::process::{Command, Output};

use quart_qkd::cli::Report;
use quart_qkd::protocol::{RoundRecord, Transcript};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quart-qkd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn run_reports_config_seed_and_version() {
    let o = bin(&[
        "run",
        "--seed",
        "5",
        "--set",
        "rounds=4000",
        "--set",
        "eve=intercept-resend",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    for needle in [
        "version",
        env!("CARGO_PKG_VERSION"),
        "seed",
        "intercept-resend",
        "qter_predicted_exact",
        "3/8",
    ] {
        assert!(text.contains(needle), "missing {needle}:\n{text}");
    }
}

#[test]
fn every_number_has_a_source() {
    let o = bin(&[
        "run",
        "--seed",
        "5",
        "--set",
        "rounds=2000",
        "--set",
        "eve=intermediate",
        "--format",
        "csv",
    ]);
    let r = Report::from_csv(&stdout(&o)).unwrap();
    for t in &r.tables {
        if t.columns.iter().any(|c| c == "source") {
            let i = t.columns.iter().position(|c| c == "source").unwrap();
            assert!(
                t.rows.iter().all(|row| !row[i].is_empty()),
                "table {}",
                t.name
            );
        }
    }
    let m = r.table("metrics").unwrap();
    assert_eq!(m.lookup("qter_predicted", "source"), Some("oracle"));
    assert_eq!(m.lookup("qter_sifted", "source"), Some("empirical"));
}

#[test]
fn high_error_rate_still_exits_zero() {
    let o = bin(&[
        "run",
        "--seed",
        "1",
        "--set",
        "rounds=3000",
        "--set",
        "eve=intermediate",
        "--set",
        "qter_threshold=0.05",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("qter_above_threshold"));
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("session.conf");
    std::fs::write(
        &cfg,
        "# session\ndim = 2\nrounds = 3000\neve = intercept-resend\nseed = 11\n",
    )
    .unwrap();
    let path = cfg.to_str().unwrap();
    let o = bin(&["run", "--config", path, "--format", "csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = Report::from_csv(&stdout(&o)).unwrap();
    let meta = r.table("meta").unwrap();
    assert_eq!(meta.lookup("dim", "value"), Some("2"));
    assert_eq!(meta.lookup("seed", "value"), Some("11"));

    let o = bin(&[
        "run", "--config", path, "--set", "dim=4", "--seed", "12", "--format", "csv",
    ]);
    let r = Report::from_csv(&stdout(&o)).unwrap();
    let meta = r.table("meta").unwrap();
    assert_eq!(meta.lookup("dim", "value"), Some("4"));
    assert_eq!(meta.lookup("seed", "value"), Some("12"));
}

#[test]
fn usage_and_config_errors_exit_one() {
    assert_eq!(bin(&["run"]).status.code(), Some(1), "missing seed");
    assert_eq!(
        bin(&["run", "--seed", "1", "--set", "dim=3"]).status.code(),
        Some(1)
    );
    assert_eq!(
        bin(&["run", "--seed", "1", "--set", "nonsense"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(bin(&["teleport", "--seed", "1"]).status.code(), Some(1));
    assert_eq!(bin(&["run", "--seed", "x"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "seed = 1\n\nsample_fraction = 2\n").unwrap();
    let o = bin(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn io_errors_exit_two() {
    assert_eq!(
        bin(&["run", "--seed", "1", "--config", "/nonexistent/dir/x.conf"])
            .status
            .code(),
        Some(2)
    );
    let o = bin(&[
        "analyze",
        "--seed",
        "1",
        "--out",
        "/nonexistent/dir/report.txt",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn out_and_transcript_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let lines = dir.path().join("rounds.txt");
    let json = dir.path().join("rounds.json");
    let args = |t: &std::path::Path| {
        vec![
            "run".to_string(),
            "--seed".into(),
            "21".into(),
            "--set".into(),
            "rounds=500".into(),
            "--set".into(),
            "eve=intercept-resend".into(),
            "--format".into(),
            "doc".into(),
            "--out".into(),
            out.to_str().unwrap().into(),
            "--transcript".into(),
            t.to_str().unwrap().into(),
        ]
    };
    let run = |t: &std::path::Path| {
        let a = args(t);
        bin(&a.iter().map(String::as_str).collect::<Vec<_>>())
    };
    let o = run(&lines);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let report: Report = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(
        report.table("meta").unwrap().lookup("seed", "value"),
        Some("21")
    );

    let text = std::fs::read_to_string(&lines).unwrap();
    assert!(text.starts_with("# seed 21"));
    let rounds = Transcript::parse_rounds(&text).unwrap();
    assert_eq!(rounds.len(), 500);

    assert!(run(&json).status.success());
    let t = Transcript::from_json(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(t.rounds(), rounds.as_slice());
    assert!(rounds.iter().all(|r: &RoundRecord| r.eve.is_some()));
}

#[test]
fn formats_agree() {
    let base = ["photon", "--seed", "3"];
    let csv = stdout(&bin(&[&base[..], &["--format", "csv"]].concat()));
    let doc = stdout(&bin(&[&base[..], &["--format", "doc"]].concat()));
    let from_csv = Report::from_csv(&csv).unwrap();
    let from_doc: Report = serde_json::from_str(&doc).unwrap();
    assert_eq!(from_csv, from_doc);
    assert_eq!(
        from_csv
            .table("verdict")
            .unwrap()
            .lookup("permutation", "value"),
        Some("PASS")
    );
}

#[test]
fn zero_bob_phases_fail_routing() {
    let o = bin(&[
        "photon",
        "--seed",
        "3",
        "--set",
        "bob_phases=0,0,0,0",
        "--format",
        "csv",
    ]);
    assert!(o.status.success());
    let r = Report::from_csv(&stdout(&o)).unwrap();
    assert_eq!(
        r.table("verdict").unwrap().lookup("permutation", "value"),
        Some("FAIL")
    );
}

#[test]
fn equivalence_pipelines_agree() {
    let o = bin(&[
        "equivalence",
        "--seed",
        "8",
        "--set",
        "rounds=3000",
        "--format",
        "csv",
    ]);
    let r = Report::from_csv(&stdout(&o)).unwrap();
    let s = r.table("summary").unwrap();
    assert_eq!(s.lookup("mismatched_rounds", "value"), Some("0"));
    assert_eq!(s.lookup("within_1e-10", "value"), Some("yes"));
    assert_eq!(r.table("exact").unwrap().rows.len(), 16);
}

#[test]
fn analyze_is_seed_independent_apart_from_echo() {
    let strip = |s: u64| {
        let r = Report::from_csv(&stdout(&bin(&[
            "analyze",
            "--seed",
            &s.to_string(),
            "--format",
            "csv",
        ])))
        .unwrap();
        r.tables
            .into_iter()
            .filter(|t| t.name != "meta")
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(1), strip(2));
}
