//! End-to-end tests of the `membalancer` binary: exit codes, file outputs,
//! determinism, and the environment-variable override.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_membalancer"));
    cmd.env_remove("MEMBALANCER_C");
    cmd
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn trio_config(c_percent: f64) -> String {
    format!(
        r#"{{
            "duration_s": 40.0,
            "seed": 7,
            "heaps": [
                {{ "workload": "case-study-trio", "rule": {{ "name": "square-root", "c": {c_percent} }} }}
            ]
        }}"#
    )
}

fn run_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn simulate_writes_log_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", &trio_config(20.0));
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    run_ok(&out);

    let log_text = std::fs::read_to_string(out_dir.join("log.csv")).unwrap();
    let records = membalancer::cli::logcsv::parse_log_csv(&log_text).unwrap();
    assert!(!records.is_empty());
    // the trio expands into three heaps
    let heap_ids: std::collections::BTreeSet<usize> = records.iter().map(|r| r.heap_id).collect();
    assert_eq!(heap_ids.len(), 3);

    let metrics_text = std::fs::read_to_string(out_dir.join("metrics.csv")).unwrap();
    let lines: Vec<&str> = metrics_text.lines().collect();
    assert_eq!(
        lines[0],
        "heap_id,gc_count,total_gc_time_s,avg_usage_mb,allocated_mb,collected_mb,oom_at_s"
    );
    assert_eq!(lines.len(), 1 + 3 + 1, "three heap rows plus a total row");
    assert!(lines[4].starts_with("total,"));

    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("total"));
}

#[test]
fn simulate_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", &trio_config(20.0));
    for sub in ["a", "b"] {
        let out = bin()
            .args(["simulate", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path().join(sub))
            .output()
            .unwrap();
        run_ok(&out);
    }
    let a = std::fs::read(dir.path().join("a/log.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/log.csv")).unwrap();
    assert_eq!(
        a, b,
        "identical config + seed must give byte-identical logs"
    );
}

#[test]
fn env_var_overrides_config_and_flag() {
    let dir = tempfile::tempdir().unwrap();
    let low = write_config(dir.path(), "low.json", &trio_config(0.1));
    let high = write_config(dir.path(), "high.json", &trio_config(20.0));

    // baseline: config says 20 %/MB
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&high)
        .arg("--out")
        .arg(dir.path().join("ref"))
        .output()
        .unwrap();
    run_ok(&out);

    // config says 0.1, env says 20: env must win even over --c
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&low)
        .args(["--c", "5.0"])
        .arg("--out")
        .arg(dir.path().join("env"))
        .env("MEMBALANCER_C", "20")
        .output()
        .unwrap();
    run_ok(&out);

    let reference = std::fs::read(dir.path().join("ref/log.csv")).unwrap();
    let with_env = std::fs::read(dir.path().join("env/log.csv")).unwrap();
    assert_eq!(reference, with_env);

    let out = bin()
        .args(["simulate", "--config"])
        .arg(&low)
        .env("MEMBALANCER_C", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn infeasible_fixed_limit_exits_with_oom_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "oom.json",
        r#"{
            "duration_s": 10.0,
            "heaps": [
                {
                    "workload": { "phases": [
                        { "duration_s": 20.0, "alloc_rate_mb_per_s": 5.0,
                          "base_live_mb": 10.0, "gc_speed_mb_per_s": 100.0 }
                    ]},
                    "rule": { "name": "fixed", "limit_mb": 8.0 }
                }
            ]
        }"#,
    );
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let metrics = std::fs::read_to_string(dir.path().join("out/metrics.csv")).unwrap();
    let heap_row = metrics.lines().nth(1).unwrap();
    assert!(
        !heap_row.ends_with(','),
        "oom_at_s column should be set: {heap_row}"
    );
}

#[test]
fn invalid_config_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        r#"{ "duration_s": 0.0, "heaps": [
            { "workload": "homogeneous-1", "rule": { "name": "proportional", "alpha": 1.0 } } ] }"#,
    );
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    let out = bin()
        .args(["simulate", "--config"])
        .arg(dir.path().join("missing.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // bad usage -> clap's exit code 2
    let out = bin().args(["simulate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_c_is_monotone_and_roundtrips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sweep.json",
        r#"{
            "duration_s": 60.0,
            "heaps": [
                { "workload": "homogeneous-2", "rule": { "name": "square-root", "c": 1.0 } }
            ],
            "sweep": { "parameter": "c", "values": [0.1, 1.0, 10.0] }
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .arg("--svg")
        .output()
        .unwrap();
    run_ok(&out);

    let text = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert!(text.starts_with("param_value,avg_heap_usage_mb,total_gc_time_s,gc_count\n"));
    let points = membalancer::cli::logcsv::parse_sweep_csv(&text).unwrap();
    assert_eq!(points.len(), 3);
    // more aggressive c: less memory, more collection time
    assert!(points[0].avg_heap_usage_mb > points[1].avg_heap_usage_mb);
    assert!(points[1].avg_heap_usage_mb > points[2].avg_heap_usage_mb);
    assert!(points[0].total_gc_time_s <= points[1].total_gc_time_s);
    assert!(points[1].total_gc_time_s <= points[2].total_gc_time_s);
    // the monotone trade-off puts every sweep point on the frontier
    assert_eq!(
        membalancer::metrics::pareto_frontier(&points).len(),
        points.len()
    );
    // rewriting the parsed points reproduces the file byte for byte
    assert_eq!(membalancer::cli::logcsv::write_sweep_csv(&points), text);

    let svg = std::fs::read_to_string(out_dir.join("sweep.svg")).unwrap();
    assert!(svg.starts_with("<svg"));

    // plot subcommand renders the same CSV
    let out = bin()
        .args(["plot", "--input"])
        .arg(out_dir.join("sweep.csv"))
        .arg("--out")
        .arg(out_dir.join("replot.svg"))
        .output()
        .unwrap();
    run_ok(&out);
    assert!(out_dir.join("replot.svg").exists());
}

#[test]
fn sweep_alpha_emits_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sweep.json",
        r#"{
            "duration_s": 30.0,
            "heaps": [
                { "workload": "homogeneous-2", "rule": { "name": "proportional", "alpha": 1.0 } }
            ],
            "sweep": { "parameter": "alpha", "values": [0.5, 1.0, 2.0] },
            "baseline": { "name": "proportional", "alpha": 1.0 }
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    run_ok(&out);
    let text = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 4);

    // with a baseline, a normalized CSV appears and its alpha=1 row sits at (1,1)
    let normalized = std::fs::read_to_string(out_dir.join("sweep_normalized.csv")).unwrap();
    let points = membalancer::cli::logcsv::parse_sweep_csv(&normalized).unwrap();
    // quantization to 6 significant digits happens before normalization, so
    // the self-referenced row sits at (1, 1) up to that precision
    let unit = points.iter().find(|p| p.param_value == 1.0).unwrap();
    assert!((unit.avg_heap_usage_mb - 1.0).abs() < 2e-6);
    assert!((unit.total_gc_time_s - 1.0).abs() < 2e-6);
}

#[test]
fn c_sweep_with_proportional_baseline_normalizes() {
    // the typical comparison: sweep the square-root rule's c against a
    // fixed proportional reference
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sweep.json",
        r#"{
            "duration_s": 40.0,
            "heaps": [
                { "workload": "fig1-pair", "rule": { "name": "square-root", "c": 1.0 } }
            ],
            "sweep": { "parameter": "c", "values": [0.5, 2.0] },
            "baseline": { "name": "proportional", "alpha": 1.0 }
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .arg("--svg")
        .output()
        .unwrap();
    run_ok(&out);
    assert!(out_dir.join("sweep.csv").exists());
    assert!(out_dir.join("sweep.svg").exists());
    let normalized = std::fs::read_to_string(out_dir.join("sweep_normalized.csv")).unwrap();
    let points = membalancer::cli::logcsv::parse_sweep_csv(&normalized).unwrap();
    assert_eq!(points.len(), 2);
    assert!(points.iter().all(|p| p.avg_heap_usage_mb > 0.0));
}

#[test]
fn oracle_reports_allocations_and_gap() {
    let out = bin()
        .args([
            "oracle",
            "--heap",
            "10,100,100",
            "--heap",
            "10,400,100",
            "--total",
            "40",
            "--step",
            "0.01",
        ])
        .output()
        .unwrap();
    run_ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("closed_form"));
    assert!(stdout.contains("relative gap"));
    // limits land near the 1:2 extra split
    assert!(stdout.contains("16.66") || stdout.contains("16.67"));

    // fewer than two heaps is rejected
    let out = bin()
        .args(["oracle", "--heap", "10,100,100", "--total", "40"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn oracle_equalizes_exchange_rates_on_the_trio() {
    let out = bin()
        .args([
            "oracle",
            "--heap",
            "31,633,525",
            "--heap",
            "30,57,440",
            "--heap",
            "96,34,383",
            "--total",
            "253",
            "--step",
            "0.02",
        ])
        .output()
        .unwrap();
    run_ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    // the derivative column is the no-arbitrage check: one value, three times
    let derivs: Vec<f64> = stdout
        .lines()
        .skip(1)
        .take(3)
        .map(|l| l.split_whitespace().last().unwrap().parse().unwrap())
        .collect();
    assert_eq!(derivs.len(), 3);
    for d in &derivs[1..] {
        assert!((d - derivs[0]).abs() / derivs[0] < 1e-4, "{derivs:?}");
    }
}

#[test]
fn rule_flag_replaces_configured_rules() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", &trio_config(0.1));
    // force proportional: log limits must track (alpha + 1) * live after warmup
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .args(["--rule", "proportional"])
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    run_ok(&out);
    let text = std::fs::read_to_string(out_dir.join("log.csv")).unwrap();
    let records = membalancer::cli::logcsv::parse_log_csv(&text).unwrap();
    let last_gc = records
        .iter()
        .rev()
        .find(|r| matches!(r.event, membalancer::simulator::LogEvent::Gc) && r.heap_id == 0)
        .unwrap();
    assert!((last_gc.limit_mb - 2.0 * last_gc.live_mb).abs() < 1e-6);
}
