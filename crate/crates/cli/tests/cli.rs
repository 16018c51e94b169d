use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tns_core::{lq_norm, genuine3d_cut, load_snapshot, random_divfree_field, save_snapshot, GridSpec};

fn tns(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tns"))
        .args(args)
        .current_dir(dir)
        .env("TNS_OUTPUT_ROOT", dir.join("out"))
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const RANDOM: &str = r#"[grid]
modes = 16
viscosity = 0.02

[time]
dt = 2e-3
t_end = 0.02
snapshot_stride = 5

[initial]
kind = "random"
exponent = 1.6666666666666667
seed = 9

[monitor]
cut_levels = [1, 2, 8]
deltas = [2.5]

[[monitor.serrin]]
q = 3.0
r = inf

[[monitor.serrin]]
q = 4.0
r = 8.0

[[monitor.serrin]]
q = 2.0
r = 4.0
gradient = true

[output]
dir = "run"
"#;

const ANALYZE: &str = r#"[monitor]
cut_levels = [1, 2, 8]
deltas = [2.5]

[[monitor.serrin]]
q = 3.0
r = inf

[[monitor.serrin]]
q = 4.0
r = 8.0

[[monitor.serrin]]
q = 2.0
r = 4.0
gradient = true

[output]
dir = "analysis"
"#;

fn setup(files: &[(&str, &str)]) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in files {
        fs::write(dir.path().join(name), text).unwrap();
    }
    dir
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn snapshots(run: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(run.join("snapshots"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    v.sort();
    v
}

#[test]
fn bad_dt_exits_2_naming_the_field() {
    let d = setup(&[("c.toml", &RANDOM.replace("dt = 2e-3", "dt = 0.0"))]);
    let o = tns(d.path(), &["run", "c.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("c.toml:6: time.dt:"), "{err}");
    assert!(!d.path().join("out/run").exists());
}

#[test]
fn taylor_green_rows_are_zero() {
    let text = RANDOM.replace(
        "kind = \"random\"\nexponent = 1.6666666666666667\nseed = 9",
        "kind = \"taylor_green\"",
    );
    let d = setup(&[("c.toml", &text)]);
    let o = tns(d.path(), &["run", "c.toml"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let run = d.path().join("out/run");
    let rows = csv_rows(&run.join("serrin_summary.csv"));
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| r[5] == "0"));
    for r in csv_rows(&run.join("serrin_series.csv")) {
        assert_eq!((r[5].as_str(), r[6].as_str()), ("0", "0"));
    }
    for f in ["manifest.toml", "config.toml", "report.txt", "y_series.csv", "liminf.csv"] {
        assert!(run.join(f).is_file(), "{f}");
    }
    assert_eq!(fs::read_to_string(run.join("config.toml")).unwrap(), text);
}

#[test]
fn analyze_reproduces_in_run_values() {
    let d = setup(&[("c.toml", RANDOM), ("a.toml", ANALYZE)]);
    assert!(tns(d.path(), &["run", "c.toml"]).status.success());
    let run = d.path().join("out/run");
    let snaps = snapshots(&run);
    assert_eq!(snaps.len(), 3);
    let mut args: Vec<String> = vec!["analyze".into(), "a.toml".into()];
    args.extend(snaps.iter().map(|p| p.display().to_string()));
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = tns(d.path(), &argv);
    assert!(o.status.success(), "{}", stderr(&o));
    let offline = csv_rows(&d.path().join("out/analysis/serrin_series.csv"));
    let online = csv_rows(&run.join("serrin_series.csv"));
    let mut matched = 0;
    for row in &offline {
        let hit = online
            .iter()
            .find(|r| r[..5] == row[..5])
            .expect("offline sample time appears in the run");
        for col in [5, 6] {
            let (a, b): (f64, f64) = (hit[col].parse().unwrap(), row[col].parse().unwrap());
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300), "{a} vs {b}");
        }
        matched += 1;
    }
    assert_eq!(matched, 3 * 9);
}

#[test]
fn analyze_single_snapshot_sup_norm_is_snapshot_value() {
    let d = setup(&[("a.toml", ANALYZE)]);
    let g = GridSpec::new(16, 0.1).unwrap();
    let u = random_divfree_field(g, 2.0, 4);
    let snap = d.path().join("s.tnsf");
    save_snapshot(&snap, &u, 0.5).unwrap();
    let o = tns(d.path(), &["analyze", "a.toml", "s.tnsf"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stored = load_snapshot(&snap).unwrap().field;
    let want = lq_norm(&genuine3d_cut(&stored, 1), 3.0).unwrap();
    let row = &csv_rows(&d.path().join("out/analysis/serrin_summary.csv"))[0];
    assert_eq!((row[0].as_str(), row[2].as_str()), ("1", "inf"));
    // the binary may be built at a different opt level, so allow reordered sums
    let got: f64 = row[5].parse().unwrap();
    assert!((got - want).abs() <= 1e-13 * want, "{got} vs {want}");
}

#[test]
fn analyze_input_errors_exit_2() {
    let d = setup(&[("a.toml", ANALYZE)]);
    assert_eq!(tns(d.path(), &["analyze", "a.toml"]).status.code(), Some(2));
    fs::write(d.path().join("bad.tnsf"), b"NOPE0000000000000000000000000000").unwrap();
    let o = tns(d.path(), &["analyze", "a.toml", "bad.tnsf"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("magic"));
    let a = random_divfree_field(GridSpec::new(8, 0.1).unwrap(), 2.0, 1);
    let b = random_divfree_field(GridSpec::new(16, 0.1).unwrap(), 2.0, 1);
    save_snapshot(&d.path().join("a.tnsf"), &a, 0.0).unwrap();
    save_snapshot(&d.path().join("b.tnsf"), &b, 1.0).unwrap();
    let o = tns(d.path(), &["analyze", "a.toml", "a.tnsf", "b.tnsf"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("grid mismatch"));
}

#[test]
fn runs_are_byte_identical() {
    let d = setup(&[("c.toml", RANDOM)]);
    let first = tempfile::tempdir().unwrap();
    for root in [d.path().join("out"), first.path().to_path_buf()] {
        let o = Command::new(env!("CARGO_BIN_EXE_tns"))
            .args(["run", "c.toml"])
            .current_dir(d.path())
            .env("TNS_OUTPUT_ROOT", &root)
            .output()
            .unwrap();
        assert!(o.status.success());
    }
    let a = d.path().join("out/run");
    let b = first.path().join("run");
    for f in ["serrin_series.csv", "serrin_summary.csv", "liminf.csv", "y_series.csv", "spectrum_weight.csv", "report.txt"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn blowup_exits_3_with_partial_artifacts() {
    let d = setup(&[]);
    let g = GridSpec::new(16, 0.02).unwrap();
    save_snapshot(&d.path().join("huge.tnsf"), &random_divfree_field(g, 1.0, 2).scaled(1e160), 0.0).unwrap();
    let text = RANDOM.replace(
        "kind = \"random\"\nexponent = 1.6666666666666667\nseed = 9",
        "kind = \"snapshot\"\npath = \"huge.tnsf\"",
    );
    fs::write(d.path().join("c.toml"), text).unwrap();
    let o = tns(d.path(), &["run", "c.toml"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let run = d.path().join("out/run");
    assert!(fs::read_to_string(run.join("report.txt")).unwrap().starts_with("outcome: blowup"));
    assert!(run.join("serrin_summary.csv").is_file());
    assert!(fs::read_to_string(run.join("manifest.toml")).unwrap().contains("outcome = \"blowup\""));
}

const VERIFY: &str = r#"seed = 3
samples = 40

[[embedding]]
dim = 2
q = 4.0
modes = [16, 32]

[[partition]]
check = "piece-sobolev"
s = 0.25
cut_levels = [1, 2, 4]
modes = 16

[[partition]]
check = "low-mode-interpolation"
q = 4.0
cut_levels = [1, 2, 4]
modes = 16

[output]
dir = "verify"
"#;

#[test]
fn verify_statuses() {
    let d = setup(&[
        ("ok.toml", VERIFY),
        ("s.toml", &VERIFY.replace("s = 0.25", "s = 0.5")),
        ("zero.toml", &VERIFY.replace("samples = 40", "samples = 0")),
        ("strict.toml", &VERIFY.replace("modes = [16, 32]", "modes = [16, 32]\ntolerance = 0.0")),
    ]);
    let o = tns(d.path(), &["verify", "ok.toml"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&d.path().join("out/verify/inequality.csv"));
    assert_eq!(rows.len(), 2 + 3 + 3);
    let o = tns(d.path(), &["verify", "s.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("s.toml:11: partition[0].s:"), "{}", stderr(&o));
    let o = tns(d.path(), &["verify", "zero.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("samples"));
    let o = tns(d.path(), &["verify", "strict.toml"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("fractional-embedding(dim=2,q=4)"), "{}", stderr(&o));
}

#[test]
fn shipped_configs_load() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for f in ["taylor_green.toml", "random.toml"] {
        let src = tns_cli::config::Source::read(&root.join(f)).unwrap();
        tns_cli::config::load_run(&src).unwrap();
    }
    let src = tns_cli::config::Source::read(&root.join("analyze.toml")).unwrap();
    tns_cli::config::load_analyze(&src).unwrap();
    for f in ["verify.toml", "verify_full.toml"] {
        let src = tns_cli::config::Source::read(&root.join(f)).unwrap();
        tns_cli::config::load_verify(&src).unwrap();
    }
}
