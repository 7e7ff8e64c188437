//! End-to-end runs of the compiled binary: exit codes, artifact layout,
//! resume semantics, and rerun determinism.

use std::path::Path;
use std::process::{Command, Output};

fn saccade(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_saccade"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

/// Synthesize a tiny labeled image tree and convert it, returning the
/// events directory.
fn converted_tree(dir: &Path, per_class: usize) -> std::path::PathBuf {
    let digits = dir.join("digits");
    let events = dir.join("events");
    let out = saccade(&[
        "synth",
        "--output",
        digits.to_str().unwrap(),
        "--per-class",
        &per_class.to_string(),
        "--seed",
        "7",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = saccade(&[
        "convert",
        "--input",
        digits.to_str().unwrap(),
        "--output",
        events.to_str().unwrap(),
        "--profile",
        "nmnist",
        "--seed",
        "1",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    events
}

#[test]
fn help_exits_zero() {
    let out = saccade(&["--help"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("convert"));
}

#[test]
fn unknown_flag_exits_two() {
    assert_eq!(code(&saccade(&["--bogus"])), 2);
    assert_eq!(code(&saccade(&["convert", "--frobnicate"])), 2);
}

#[test]
fn missing_input_directory_exits_two() {
    let out = saccade(&["stats", "--input", "/nonexistent/path"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("not a directory"));
}

#[test]
fn empty_dataset_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["stats", "fft", "rates"] {
        let out = saccade(&[sub, "--input", dir.path().to_str().unwrap()]);
        assert_eq!(code(&out), 3, "{sub}: {}", stderr(&out));
    }
    let out = saccade(&[
        "classify",
        "--input",
        dir.path().to_str().unwrap(),
        "--algo",
        "knn",
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn unknown_profile_algo_and_feature_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let events = converted_tree(dir.path(), 1);
    let out = saccade(&[
        "convert",
        "--input",
        events.to_str().unwrap(),
        "--output",
        events.to_str().unwrap(),
        "--profile",
        "imagenet",
    ]);
    assert_eq!(code(&out), 2);
    let out = saccade(&[
        "classify",
        "--input",
        events.to_str().unwrap(),
        "--algo",
        "transformer",
    ]);
    assert_eq!(code(&out), 2);
    let out = saccade(&[
        "classify",
        "--input",
        events.to_str().unwrap(),
        "--algo",
        "knn",
        "--feature",
        "entropy",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn convert_writes_report_and_skips_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let digits = dir.path().join("digits");
    let events = dir.path().join("events");
    saccade(&[
        "synth",
        "--output",
        digits.to_str().unwrap(),
        "--per-class",
        "1",
        "--seed",
        "3",
    ]);
    let args = [
        "convert",
        "--input",
        digits.to_str().unwrap(),
        "--output",
        events.to_str().unwrap(),
        "--profile",
        "nmnist",
        "--seed",
        "5",
    ];
    let first = saccade(&args);
    assert_eq!(code(&first), 0);
    assert!(stdout(&first).contains("10 converted, 0 skipped"));

    let report = std::fs::read_to_string(events.join("report.csv")).unwrap();
    let mut lines = report.lines();
    assert_eq!(
        lines.next().unwrap(),
        "path,on_count,off_count,duration_us,status"
    );
    assert_eq!(lines.filter(|l| l.ends_with(",ok")).count(), 10);
    let sample = events.join("3/0000.bin");
    let bytes_first = std::fs::read(&sample).unwrap();

    let second = saccade(&args);
    assert_eq!(code(&second), 0);
    assert!(stdout(&second).contains("0 converted, 10 skipped"));

    let mut forced_args = args.to_vec();
    forced_args.push("--force");
    let forced = saccade(&forced_args);
    assert!(stdout(&forced).contains("10 converted"));
    assert_eq!(std::fs::read(&sample).unwrap(), bytes_first);
}

#[test]
fn stats_emit_one_row_per_recording() {
    let dir = tempfile::tempdir().unwrap();
    let events = converted_tree(dir.path(), 1);
    let csv_path = dir.path().join("feats.csv");
    let out = saccade(&[
        "stats",
        "--input",
        events.to_str().unwrap(),
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(stderr(&out).contains("extent 34x34"));
    assert!(stderr(&out).contains("duration 300000 us"));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "path,label,total,on,off,on_off_ratio,mean_x,mean_y,std_x,std_y,max_x,max_y"
    );
    assert_eq!(lines.count(), 10);
}

#[test]
fn render_covers_the_recording_in_windows() {
    let dir = tempfile::tempdir().unwrap();
    let events = converted_tree(dir.path(), 1);
    let frames = dir.path().join("frames");
    let out = saccade(&[
        "render",
        "--input",
        events.join("4/0000.bin").to_str().unwrap(),
        "--window-ms",
        "10",
        "--out",
        frames.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let ppms: Vec<_> = std::fs::read_dir(&frames)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(ppms.len(), 30);
    assert!(ppms.iter().any(|n| n == "0000_0029.ppm"));
}

#[test]
fn rates_csv_spans_the_duration() {
    let dir = tempfile::tempdir().unwrap();
    let events = converted_tree(dir.path(), 1);
    let out = saccade(&[
        "rates",
        "--input",
        events.to_str().unwrap(),
        "--bin-us",
        "10000",
    ]);
    assert_eq!(code(&out), 0);
    let csv = stdout(&out);
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "bin_start_us,mean,std");
    assert_eq!(lines.count(), 30); // 300 ms / 10 ms
}

#[test]
fn knn_classify_writes_per_class_and_balanced_rows() {
    let dir = tempfile::tempdir().unwrap();
    let events = converted_tree(dir.path(), 4);
    let out = saccade(&[
        "classify",
        "--input",
        events.to_str().unwrap(),
        "--algo",
        "knn",
        "--feature",
        "std_y",
        "--k",
        "3",
        "--train-per-class",
        "2",
        "--test-per-class",
        "2",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = stdout(&out);
    assert!(csv.starts_with("class,accuracy\n"));
    assert_eq!(csv.lines().count(), 12); // header + 10 classes + balanced
    assert!(csv.lines().last().unwrap().starts_with("balanced,"));
}

#[test]
fn skim_classify_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let events = converted_tree(dir.path(), 2);
    let args = [
        "classify",
        "--input",
        events.to_str().unwrap(),
        "--algo",
        "skim",
        "--hidden",
        "30",
        "--seed",
        "7",
        "--train-per-class",
        "1",
        "--test-per-class",
        "1",
    ];
    let a = saccade(&args);
    let b = saccade(&args);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("defaults.cfg");
    std::fs::write(&cfg, "# defaults\nseed = 5\n").unwrap();

    let from_config = dir.path().join("a");
    let from_flag = dir.path().join("b");
    let overridden = dir.path().join("c");
    saccade(&[
        "synth",
        "--config",
        cfg.to_str().unwrap(),
        "--output",
        from_config.to_str().unwrap(),
        "--per-class",
        "1",
    ]);
    saccade(&[
        "synth",
        "--output",
        from_flag.to_str().unwrap(),
        "--per-class",
        "1",
        "--seed",
        "5",
    ]);
    saccade(&[
        "synth",
        "--config",
        cfg.to_str().unwrap(),
        "--output",
        overridden.to_str().unwrap(),
        "--per-class",
        "1",
        "--seed",
        "9",
    ]);
    let read = |root: &Path| std::fs::read(root.join("7/0000.pgm")).unwrap();
    assert_eq!(read(&from_config), read(&from_flag));
    assert_ne!(read(&from_config), read(&overridden));

    std::fs::write(&cfg, "volume = 11\n").unwrap();
    let out = saccade(&[
        "synth",
        "--config",
        cfg.to_str().unwrap(),
        "--output",
        dir.path().join("d").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("unknown key"));
}
