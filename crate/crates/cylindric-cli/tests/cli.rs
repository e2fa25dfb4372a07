use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cylindric")).args(args).output().expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let o = cli(&["verify", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn infeasible_contours_give_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["moments", "--n", "2", "--tau", "0.5", "--tau", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("configuration error") && err.contains("no admissible contours"), "{err}");
    assert!(!dir.path().join("moments.csv").exists());
}

#[test]
fn invalid_parameters_are_rejected_before_work() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["sample", "--t", "1.5", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn sampling_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = ["sample", "--n", "2", "--seed", "7", "--sweeps", "3000", "--out", out];
    assert!(cli(&args).status.success());
    let names = ["sample_configs.txt", "sample_slices.csv", "sample_stats.csv", "sample_profile.csv", "sample_profile.svg"];
    let first: Vec<String> = names.iter().map(|n| read(dir.path(), n)).collect();
    assert!(cli(&args).status.success());
    for (n, a) in names.iter().zip(&first) {
        assert_eq!(&read(dir.path(), n), a, "{n} differs between runs");
    }
    // each kept sample is a valid configuration line
    let configs = &first[0];
    assert!(configs.lines().nth(1).unwrap().parse::<cylindric::CylindricConfig>().is_ok());
    assert_eq!(configs.lines().count(), 1 + 300);
}

#[test]
fn every_output_starts_with_the_run_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for cmd in [
        vec!["limitshape", "--t", "0.5"],
        vec!["greens", "--t", "0.4"],
        vec!["moments", "--n", "3", "--t", "0.3", "--tau", "0.5", "--tau", "1"],
        vec!["kernel", "--n", "1", "--t", "0.1", "--tau", "0.5", "--tau", "1"],
        vec!["exact", "--n", "2", "--t", "0.09"],
    ] {
        let mut args = cmd.clone();
        args.extend(["--out", out]);
        let o = cli(&args);
        assert!(o.status.success(), "{cmd:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let mut seen = 0;
    for entry in std::fs::read_dir(dir.path()).unwrap() {
        let p = entry.unwrap().path();
        let first = std::fs::read_to_string(&p).unwrap().lines().next().unwrap().to_string();
        assert!(first.starts_with("# RunConfig command=") || first.starts_with("<!-- # RunConfig command="), "{}", p.display());
        seen += 1;
    }
    assert_eq!(seen, 7);
}

#[test]
fn limitshape_marks_the_frozen_boundary() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cli(&["limitshape", "--t", "0.5", "--out", dir.path().to_str().unwrap()]).status.success());
    let svg = read(dir.path(), "limitshape.svg");
    assert!(svg.contains("y = log 2/log t = -1.000000"));
    let grid = read(dir.path(), "limitshape_grid.csv");
    assert_eq!(grid.lines().count(), 2 + 400);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# test\nn = 3\nt = 0.3\ntau = 0.5, 1\n").unwrap();
    let out = dir.path().join("o");
    let o = cli(&["moments", "--config", cfg.to_str().unwrap(), "--t", "0.2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let head = read(&out, "moments.csv").lines().next().unwrap().to_string();
    assert!(head.contains(" n=3 ") && head.contains(" t=2.0000000000000001e-1 "), "{head}");
    std::fs::write(&cfg, "n = 3\nwidth = 4\n").unwrap();
    assert_eq!(cli(&["moments", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn identities_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["verify", "identities", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(read(dir.path(), "verify_identities.txt").contains("PASS:"));
    assert!(read(dir.path(), "verify_identities.csv").lines().count() > 10);
}
