use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn skinbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skinbench"))
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

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_everywhere() {
    let cases: [(&[&str], &[&str]); 5] = [
        (&["--help"], &["calibrate", "trial", "report"]),
        (&["calibrate", "generate", "--help"], &["--config", "--seed", "--out", "--repeats"]),
        (&["calibrate", "train", "--help"], &["--config", "--seed", "--out", "--models", "--dataset"]),
        (&["trial", "run", "--help"], &["--config", "--seed", "--out", "--model", "--samples"]),
        (&["report", "--help"], &["--config", "--out"]),
    ];
    for (args, flags) in cases {
        let o = skinbench(args);
        assert!(o.status.success(), "{args:?}");
        let text = stdout(&o);
        for f in flags {
            assert!(text.contains(f), "{args:?} help lacks {f}");
        }
    }
}

#[test]
fn generate_counts_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = skinbench(&["calibrate", "generate", "--repeats", "1", "--out", path(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("56 samples"));
    let text = fs::read_to_string(dir.path().join("dataset.csv")).unwrap();
    assert_eq!(text.lines().count(), 57);
}

#[test]
fn bad_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.cfg");
    fs::write(&cfg, "seed = 1\nnoise_level = 0.1\n").unwrap();
    let o = skinbench(&["calibrate", "generate", "--config", path(&cfg), "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("noise_level"));
    let o = skinbench(&["calibrate", "generate", "--config", path(&dir.path().join("missing.cfg"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unreachable_force_stop_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.cfg");
    fs::write(&cfg, "force_stop = 1e6\n").unwrap();
    let o = skinbench(&["calibrate", "generate", "--config", path(&cfg), "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn training_failure_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());
    assert!(skinbench(&["calibrate", "generate", "--repeats", "1", "--out", out]).status.success());
    let cfg = dir.path().join("bench.cfg");
    fs::write(&cfg, "cv_folds = 500\n").unwrap();
    let o = skinbench(&["calibrate", "train", "--config", path(&cfg), "--out", out]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn single_model_pipeline_and_custom_samples() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());
    assert!(skinbench(&["calibrate", "generate", "--repeats", "2", "--out", out]).status.success());
    let o = skinbench(&["calibrate", "train", "--models", "linear", "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<_> = text
        .lines()
        .filter(|l| {
            let mut tok = l.split_whitespace();
            tok.next().is_some_and(|t| t.parse::<usize>().is_ok()) && tok.count() == 2
        })
        .collect();
    assert_eq!(rows.len(), 1, "{text}");
    assert!(rows[0].contains("linear-least-squares"));
    for t in ["0.5", "1.0", "1.5", "2.0"] {
        assert!(text.contains(&format!("+/-{t} N")), "{text}");
    }

    let samples = dir.path().join("mine.csv");
    fs::write(&samples, "id,weight_n,peduncle_diameter_mm\n9,0.12,1.5\n").unwrap();
    let o = skinbench(&["trial", "run", "--samples", path(&samples), "--out", out]);
    // The linear model is too coarse to hold 2 N on every trial; only the
    // report shape matters here.
    assert!(matches!(o.status.code(), Some(0) | Some(5)), "{}", stderr(&o));
    let report = skinbench::io::read_report(dir.path().join("campaign.json")).unwrap();
    assert_eq!(report.sample_ids, vec![9]);
    assert_eq!(report.mae.len(), 1);
    assert_eq!(report.mae[0].len(), 5);

    let o = skinbench(&["report", "--out", out]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("selected: linear-least-squares"));
}

#[test]
fn safety_abort_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());
    assert!(skinbench(&["calibrate", "generate", "--repeats", "2", "--out", out]).status.success());
    assert!(skinbench(&["calibrate", "train", "--models", "gp-exponential", "--out", out]).status.success());
    let cfg = dir.path().join("stiff.cfg");
    fs::write(&cfg, "compliance = 0.5\nf_abort = 2.2\ntrials_per_sample = 1\n").unwrap();
    let o = skinbench(&["trial", "run", "--config", path(&cfg), "--out", out]);
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));
    assert!(dir.path().join("campaign.json").exists());
}

#[test]
fn report_without_artifacts_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = skinbench(&["report", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
}
