//! End-to-end checks of the command-line interface: exit codes, output
//! determinism, manifest aggregation and the scan output.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn polaron() -> Command {
    Command::new(env!("CARGO_BIN_EXE_polaron"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("polaron-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    polaron().args(args).output().expect("spawn polaron")
}

#[test]
fn pekar_round_trip_and_determinism() {
    let out_dir = tmp_dir("pekar");
    let out = run(&[
        "pekar",
        "--alpha",
        "1",
        "--grid-n",
        "200",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["task"], "pekar");
    let energy = doc["energy"].as_f64().unwrap();
    assert!((energy + 0.109).abs() < 0.01 * 0.109, "energy {energy}");

    // byte-identical results on a rerun with the same configuration
    let result_file = out_dir
        .join(
            fs::read_dir(&out_dir)
                .unwrap()
                .filter_map(|e| e.ok())
                .map(|e| e.file_name().to_string_lossy().to_string())
                .find(|n| n.starts_with("pekar-") && n.ends_with(".json"))
                .expect("result file"),
        );
    let first = fs::read(&result_file).unwrap();
    let out2 = run(&[
        "pekar",
        "--alpha",
        "1",
        "--grid-n",
        "200",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out2.status.success());
    let second = fs::read(&result_file).unwrap();
    assert_eq!(first, second, "result files differ between identical runs");
    assert_eq!(out.stdout, out2.stdout);
}

#[test]
fn invalid_input_exits_with_code_two() {
    let out = run(&["pekar", "--alpha=-1"]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("alpha"), "{msg}");

    // unknown config keys are parse errors with a line number
    let dir = tmp_dir("badcfg");
    let cfg = dir.join("run.conf");
    fs::write(&cfg, "task = pekar\nwhatever = 1\n").unwrap();
    let out = polaron()
        .args(["--config", cfg.to_str().unwrap(), "pekar"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn config_file_flags_precedence() {
    let dir = tmp_dir("precedence");
    let cfg = dir.join("run.conf");
    fs::write(
        &cfg,
        "task = pekar\nalpha = 2.0\ngrid_n = 200\nout_dir = should-be-overridden\n",
    )
    .unwrap();
    let out = polaron()
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
            "pekar",
            "--alpha",
            "0.5",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // the flag overrides the file value
    assert_eq!(doc["params"]["alpha"].as_f64().unwrap(), 0.5);
    // E(0.5) = 0.25 E(1)
    let energy = doc["energy"].as_f64().unwrap();
    assert!((energy + 0.25 * 0.1085).abs() < 1e-3);
}

#[test]
fn pimc_streams_are_reproducible() {
    let out_dir = tmp_dir("pimc");
    let args = [
        "pimc",
        "--alpha",
        "0.3",
        "--period",
        "16",
        "--slices",
        "128",
        "--sweeps",
        "2000",
        "--seed",
        "42",
        "--schedule-points",
        "3",
        "--out",
        out_dir.to_str().unwrap(),
    ];
    let a = run(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout, "identical seeds must give identical streams");
    // and a different seed changes the stream
    let mut args2: Vec<&str> = args.to_vec();
    args2[9] = "43";
    let c = run(&args2);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn scan_binding_csv_crosses_the_binding_threshold() {
    let out_dir = tmp_dir("scan");
    let out = run(&[
        "scan-binding",
        "--alpha",
        "1",
        "--u-min",
        "0",
        "--u-max",
        "4",
        "--u-steps",
        "5",
        "--grid-n",
        "48",
        "--angular-n",
        "8",
        "--format",
        "csv",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8_lossy(&out.stdout);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "alpha,U,method,e1,e2,delta_e,inv_r12,unbound_flag,stderr_e2"
    );
    // the binding energy must change sign against the threshold across
    // the scan: bound at the start, unbound by U = 4
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(|s| s.to_string()).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    let eps = 1e-4;
    let delta_first: f64 = rows[0][5].parse().unwrap();
    let delta_last: f64 = rows.last().unwrap()[5].parse().unwrap();
    assert!(delta_first - eps > 0.0, "first row should be bound");
    assert!(delta_last - eps <= 0.0, "last row should be unbound");
    assert_eq!(rows[0][8], "", "variational rows carry no stderr");
}

#[test]
fn report_aggregates_manifests() {
    let out_dir = tmp_dir("report");
    // two distinct configurations plus one rerun of the first
    for (alpha, n) in [("1", "200"), ("2", "200"), ("1", "200")] {
        let out = run(&[
            "pekar",
            "--alpha",
            alpha,
            "--grid-n",
            n,
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        // distinct start timestamps for distinct manifest names
        std::thread::sleep(std::time::Duration::from_millis(1100));
    }
    let out = run(&["report", "--dir", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["count"].as_u64().unwrap(), 2, "two distinct configs");
    let entries = doc["entries"].as_array().unwrap();
    let with_history = entries
        .iter()
        .find(|e| e["history"].as_array().unwrap().len() == 2)
        .expect("the rerun configuration keeps both runs in history");
    let hist = with_history["history"].as_array().unwrap();
    let latest = with_history["latest"]["finished_unix"].as_u64().unwrap();
    assert!(hist
        .iter()
        .all(|m| m["finished_unix"].as_u64().unwrap() <= latest));

    // empty directory: an empty document, exit 0
    let empty = tmp_dir("report-empty");
    let out = run(&["report", "--dir", empty.to_str().unwrap()]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["count"].as_u64().unwrap(), 0);

    // missing directory: validation error
    let out = run(&["report", "--dir", "/definitely/not/here"]);
    assert_eq!(out.status.code(), Some(2));

    // corrupt manifest: named in the error
    let bad = tmp_dir("report-bad");
    fs::write(Path::new(&bad).join("manifest-deadbeef-1.json"), "{not json").unwrap();
    let out = run(&["report", "--dir", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("manifest-deadbeef-1.json"));
}

#[test]
fn deleting_outputs_and_rerunning_reproduces_them() {
    let out_dir = tmp_dir("rerun");
    let args = [
        "pekar",
        "--alpha",
        "1.5",
        "--grid-n",
        "200",
        "--out",
        out_dir.to_str().unwrap(),
    ];
    let out = run(&args);
    assert!(out.status.success());
    let result: Vec<_> = fs::read_dir(&out_dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with("pekar-"))
        .collect();
    assert_eq!(result.len(), 1);
    let path = result[0].path();
    let first = fs::read(&path).unwrap();
    fs::remove_dir_all(&out_dir).unwrap();
    let out = run(&args);
    assert!(out.status.success());
    let second = fs::read(&path).unwrap();
    assert_eq!(first, second);
}
