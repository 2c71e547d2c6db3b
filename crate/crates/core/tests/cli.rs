use std::fs;
use std::path::Path;
use std::process::Command;

use radfield::cli::{execute, parse_config, write_outputs};

const BIN: &str = env!("CARGO_BIN_EXE_radfield");

fn small(extra: &str) -> String {
    format!(
        r#"
[black_hole]
mass = 1.0

[modes]
l = [0, 1]

[data]
family = "compact_bump"
center = 10.0
halfwidth = 3.0
phi_amplitude = 1.0
psidot_amplitude = 0.5

[grid]
h = 0.2
u_max = 60.0
v_max = 60.0

[series]
rstar = [5.0]
slice_times = [20.0, 30.0]
snapshot_stride = 10

[reports]
unitarity = true
support = true
{extra}
"#
    )
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_writes_every_artifact_with_hash_headers() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), &small(""));
    let status = Command::new(BIN)
        .args(["run", cfg.to_str().unwrap(), "--output", out.to_str().unwrap(), "--parallel", "2"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
    let hash = parse_config(&small("")).unwrap().hash;
    for name in [
        "waveform_horizon.csv",
        "waveform_scri.csv",
        "series.csv",
        "snapshot_l0_m0.csv",
        "snapshot_l1_m0.csv",
    ] {
        let text = fs::read_to_string(out.join(name)).unwrap();
        let header: Vec<&str> = text.lines().take(4).collect();
        assert!(header[0].contains(env!("CARGO_PKG_VERSION")), "{name}: {}", header[0]);
        assert_eq!(header[1], format!("# config_hash {hash}"), "{name}");
    }
    let wave = fs::read_to_string(out.join("waveform_scri.csv")).unwrap();
    assert_eq!(wave.lines().nth(3), Some("time,l,m,psi,dtpsi,value"));
    let row: Vec<&str> = wave.lines().nth(4).unwrap().split(',').collect();
    assert_eq!(row.len(), 6);
    assert_eq!(row[0].parse::<f64>().unwrap(), -60.0);
    let snap = fs::read_to_string(out.join("snapshot_l0_m0.csv")).unwrap();
    assert_eq!(snap.lines().nth(3), Some("u,v,rstar,psi"));
    let series = fs::read_to_string(out.join("series.csv")).unwrap();
    assert_eq!(series.lines().nth(3), Some("t,l,m,rstar,psi"));

    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["config_hash"], hash.as_str());
    assert_eq!(report["code_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(report["unitarity"]["modes"].as_array().unwrap().len(), 2);
    assert_eq!(report["support"]["horizon"]["pass"], true);
    assert_eq!(report["support"]["scri"]["pass"], true);
}

#[test]
fn full_precision_round_trip_in_csv() {
    let cfg = parse_config(&small("")).unwrap();
    let outcome = execute(&cfg, Some(1)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_outputs(dir.path(), &outcome).unwrap();
    let text = fs::read_to_string(dir.path().join("waveform_horizon.csv")).unwrap();
    let w = &outcome.horizon.waveforms[0];
    for (line, k) in text.lines().skip(4).zip(0..w.value.len()) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols[0].to_bits(), w.time[k].to_bits());
        assert_eq!(cols[5].to_bits(), w.value[k].to_bits());
    }
}

#[test]
fn identical_runs_are_byte_identical() {
    let cfg = parse_config(&small("tail = true\ntail_window = [20.0, 50.0]")).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let fa = write_outputs(a.path(), &execute(&cfg, Some(1)).unwrap()).unwrap();
    let fb = write_outputs(b.path(), &execute(&cfg, Some(3)).unwrap()).unwrap();
    assert_eq!(fa.len(), fb.len());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.file_name(), y.file_name());
        assert!(fs::read(x).unwrap() == fs::read(y).unwrap(), "{} differs", x.display());
    }
}

#[test]
fn zero_data_reports_zero_energies() {
    let text = small("").replace("phi_amplitude = 1.0", "phi_amplitude = 0.0").replace(
        "psidot_amplitude = 0.5",
        "psidot_amplitude = 0.0",
    );
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("out");
    let status = Command::new(BIN)
        .args(["run", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let u = &report["unitarity"];
    assert_eq!(u["total_energy"], 0.0);
    assert_eq!(u["defect"], 0.0);
    for m in u["modes"].as_array().unwrap() {
        assert_eq!(m["energy"], 0.0);
        assert_eq!(m["horizon_norm"], 0.0);
        assert_eq!(m["scri_norm"], 0.0);
    }
}

#[test]
fn unstable_run_exits_two() {
    let text = r#"
[modes]
l = [100]

[data]
family = "gaussian"
center = 20.0
width = 2.0

[grid]
h = 1.0
u_max = 100.0
v_max = 100.0
"#;
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), text);
    let out = Command::new(BIN)
        .args(["run", cfg.to_str().unwrap(), "--output", dir.path().join("o").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("instability"), "{stderr}");
}

#[test]
fn config_errors_exit_one_and_name_fields() {
    let dir = tempfile::tempdir().unwrap();
    let text = small("tail = true").replace("rstar = [5.0]", "").replace("h = 0.2", "ladder = [0.05, 0.03]");
    let cfg = write_config(dir.path(), &text);
    let out = Command::new(BIN).args(["run", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("grid.ladder"), "{stderr}");
    assert!(stderr.contains("reports.tail"), "{stderr}");
}

#[test]
fn support_outside_grid_is_a_config_error() {
    let text = small("").replace("u_max = 60.0", "u_max = -8.0");
    let cfg = parse_config(&text);
    // a negative line is rejected while parsing
    assert!(cfg.unwrap_err().mentions("grid.u_max"));
    let text = small("").replace("v_max = 60.0", "v_max = 11.0");
    let err = execute(&parse_config(&text).unwrap(), None).unwrap_err();
    assert_eq!(err.exit_code(), 1, "{err}");
}

#[test]
fn reference_config_parses() {
    let cfg = parse_config(radfield::cli::check::REFERENCE_CONFIG).unwrap();
    assert_eq!(cfg.grid.ladder, vec![0.2, 0.1, 0.05]);
    assert!(cfg.reports.tail && cfg.reports.probe && cfg.reports.convergence);
}

#[test]
fn automatic_lines_meet_the_tail_budget() {
    let text = small("").replace("u_max = 60.0\nv_max = 60.0\n", "tail_budget = 1e-3\n");
    let cfg = parse_config(&text).unwrap();
    let outcome = execute(&cfg, None).unwrap();
    let budget = &outcome.report.tail_budget;
    assert!(budget.automatic_lines);
    assert!(budget.within_budget, "{budget:?}");
    assert!(budget.estimated_fraction.unwrap() <= 1e-3);
}
