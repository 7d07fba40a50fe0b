use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qca(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qca"))
        .current_dir(dir)
        .env_remove("QCA_THREADS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn paired_samples_are_mirror_images() {
    let d = tempfile::tempdir().unwrap();
    let o = qca(d.path(), &["--n", "4", "--depth", "4", "--samples", "2", "evolve", "--out", "t.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&d.path().join("t.csv"));
    assert_eq!(r.len(), 10);
    for layer in 0..5 {
        let x: f64 = r[layer][2].parse().unwrap();
        let y: f64 = r[5 + layer][2].parse().unwrap();
        assert!((x + y).abs() < 1e-10);
    }
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("t.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["command"], "evolve");
    assert_eq!(meta["config"]["n"], 4);
    assert!(meta["version"].is_string());
    assert_eq!(meta["summary"]["max_discarded_weight_per_layer"].as_array().unwrap().len(), 4);
}

#[test]
fn zero_depth_returns_the_sampled_inputs() {
    let d = tempfile::tempdir().unwrap();
    let o = qca(d.path(), &["--n", "3", "--depth", "0", "--samples", "6", "evolve", "--out", "t.csv", "--manifest", "m.csv"]);
    assert_eq!(code(&o), 0);
    let t = rows(&d.path().join("t.csv"));
    let m = rows(&d.path().join("m.csv"));
    assert_eq!(t.len(), 6);
    for (a, b) in t.iter().zip(&m) {
        assert_eq!(a[0], b[0]);
        let (x, y): (f64, f64) = (a[2].parse().unwrap(), b[1].parse().unwrap());
        assert!((x - y).abs() < 1e-14);
    }
}

#[test]
fn runs_are_reproducible() {
    let d = tempfile::tempdir().unwrap();
    for out in ["a.csv", "b.csv"] {
        assert_eq!(code(&qca(d.path(), &["--n", "4", "--depth", "3", "--samples", "8", "--seed", "5", "evolve", "--out", out])), 0);
    }
    assert_eq!(fs::read(d.path().join("a.csv")).unwrap(), fs::read(d.path().join("b.csv")).unwrap());
}

#[test]
fn input_layer_histogram_is_flat() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&qca(d.path(), &["--n", "2", "--depth", "0", "--samples", "2000", "evolve", "--out", "t.csv"])), 0);
    let o = qca(d.path(), &["--layer", "0", "--coarsen", "10", "hist", "--input", "t.csv", "--out", "h.csv"]);
    assert_eq!(code(&o), 0);
    let counts: Vec<usize> = rows(&d.path().join("h.csv")).iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(counts.len(), 20);
    assert_eq!(counts.iter().sum::<usize>(), 2000);
    assert!(counts.iter().all(|&c| (60..=140).contains(&c)), "{counts:?}");
}

#[test]
fn single_trajectory_fills_one_bin() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("t.csv"), "sample_id,layer,mx\n0,0,0.3\n0,1,0.1234\n").unwrap();
    let o = qca(d.path(), &["--layer", "1", "hist", "--input", "t.csv", "--out", "h.csv"]);
    assert_eq!(code(&o), 0);
    let r = rows(&d.path().join("h.csv"));
    assert_eq!(r.len(), 200);
    let occupied: Vec<_> = r.iter().filter(|r| r[1] != "0").collect();
    assert_eq!(occupied.len(), 1);
    assert_eq!(occupied[0][0], "0.122500");
}

#[test]
fn bad_histogram_inputs_exit_with_config_code() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("t.csv"), "sample_id,layer,mx\n0,0,0.3\n").unwrap();
    fs::write(d.path().join("bad.csv"), "sample_id,layer,mx\n0,zero,0.3\n").unwrap();
    assert_eq!(code(&qca(d.path(), &["--layer", "8", "hist", "--input", "t.csv", "--out", "h.csv"])), 2);
    assert_eq!(code(&qca(d.path(), &["--layer", "0", "hist", "--input", "bad.csv", "--out", "h.csv"])), 2);
    assert_eq!(code(&qca(d.path(), &["hist", "--input", "missing.csv", "--out", "h.csv"])), 2);
    assert!(!d.path().join("h.csv").exists());
}

#[test]
fn config_file_and_flag_precedence() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("run.toml"), "n = 3\ndepth = 2\nsamples = 4\nseed = 9\n").unwrap();
    let o = qca(d.path(), &["--config", "run.toml", "--depth", "1", "evolve", "--out", "t.csv"]);
    assert_eq!(code(&o), 0);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("t.csv.meta.json")).unwrap()).unwrap();
    assert_eq!((meta["config"]["n"].as_u64(), meta["config"]["depth"].as_u64()), (Some(3), Some(1)));
    assert_eq!(rows(&d.path().join("t.csv")).len(), 8);

    fs::write(d.path().join("bad.toml"), "n = \"ten\"\n").unwrap();
    assert_eq!(code(&qca(d.path(), &["--config", "bad.toml", "evolve", "--out", "x.csv"])), 2);
    assert_eq!(code(&qca(d.path(), &["--dt", "-0.1", "evolve", "--out", "x.csv"])), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_qca"))
        .current_dir(d.path())
        .env("QCA_THREADS", "0")
        .args(["evolve", "--out", "x.csv"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert!(!d.path().join("x.csv").exists());
}

#[test]
fn unwritable_output_leaves_nothing_behind() {
    let d = tempfile::tempdir().unwrap();
    let o = qca(d.path(), &["--n", "2", "--depth", "1", "--samples", "2", "evolve", "--out", "no/such/dir/t.csv"]);
    assert_eq!(code(&o), 3);
    assert_eq!(fs::read_dir(d.path()).unwrap().count(), 0);
}

#[test]
fn oracle_check_exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let o = qca(d.path(), &["--n", "4", "--depth", "5", "oracle-check", "--json", "r.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(r["checks"].as_array().unwrap().len(), 6);

    let o = qca(d.path(), &["--n", "4", "oracle-check", "--inject-gate-fault", "0.01"]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stdout).contains("[FAIL] gate unitarity defect"));

    let o = qca(d.path(), &["--n", "4", "--chi-mps", "2", "oracle-check"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("[INFO] MPS vs dense"));

    assert_eq!(code(&qca(d.path(), &["--n", "6", "oracle-check"])), 2);
}

#[test]
fn phase_diagram_both_closures() {
    let d = tempfile::tempdir().unwrap();
    for (closure, header) in [("mf", "omega,v,abs_mx"), ("nn", "omega,v,abs_mx,closure")] {
        let out = format!("{closure}.csv");
        let o = qca(d.path(), &["--closure", closure, "--grid-omega", "3", "--grid-v", "3", "phase-diagram", "--out", &out]);
        assert_eq!(code(&o), 0);
        let text = fs::read_to_string(d.path().join(&out)).unwrap();
        assert_eq!(text.lines().next().unwrap(), header);
        assert_eq!(text.lines().count(), 10);
    }
    assert_eq!(code(&qca(d.path(), &["--closure", "xy", "phase-diagram", "--out", "x.csv"])), 2);
}

#[test]
fn train_and_landscape_outputs() {
    let d = tempfile::tempdir().unwrap();
    let small = ["--n", "3", "--depth", "3", "--chi-mps", "16"];
    let mut args = small.to_vec();
    args.extend(["--epsilon", "0", "--repetitions", "2", "train", "--out", "run.json"]);
    assert_eq!(code(&qca(d.path(), &args)), 0);
    let run: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(run["losses"].as_array().unwrap().len(), 3);
    assert_eq!(run["gradient_scheme"]["method"], "central-difference");

    let mut args = small.to_vec();
    args.extend(["--grid-a", "3", "--grid-b", "2", "landscape", "--out", "l.csv"]);
    assert_eq!(code(&qca(d.path(), &args)), 0);
    let text = fs::read_to_string(d.path().join("l.csv")).unwrap();
    assert!(text.starts_with("a,b,loss\n"));
    assert_eq!(text.lines().count(), 7);
}
