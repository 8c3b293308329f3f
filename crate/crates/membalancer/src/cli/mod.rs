//! Experiment harness: `simulate`, `sweep`, `oracle`, and `plot` subcommands.
//!
//! Exit codes: 0 on success, 1 on any configuration or I/O error, 2 for
//! command-line usage errors (from the argument parser), 3 when a simulation
//! completed but reported an out-of-memory heap.

pub mod config;
pub mod logcsv;
pub mod svg;

use crate::metrics::{fit_tradeoff, normalize, SweepPoint};
use crate::model::{brute_force_allocation, closed_form_allocation, ratio_derivative, HeapParams};
use crate::simulator::{run as sim_run, RunMetrics};
use clap::{Args, Parser, Subcommand};
use config::{ExperimentConfig, OracleConfig, Overrides};
use logcsv::{fmt_num, round_sig};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Environment variable overriding `c`, in %/MB. Takes precedence over both
/// the config file and the `--c` flag.
pub const ENV_C: &str = "MEMBALANCER_C";

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_OOM: u8 = 3;

#[derive(Parser)]
#[command(
    name = "membalancer",
    version,
    about = "Heap-limit experiments: deterministic multi-heap GC simulation, \
             parameter sweeps, and allocation oracles"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one simulation and write log.csv + metrics.csv
    Simulate(RunArgs),
    /// Run one simulation per sweep value and write sweep.csv (+ SVG)
    Sweep(RunArgs),
    /// Compare the closed-form memory split against brute-force grid search
    Oracle(OracleArgs),
    /// Render a sweep CSV as an SVG scatter with the fitted trade-off curve
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: config output_dir, else "out")
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the run duration in seconds
    #[arg(long)]
    duration: Option<f64>,
    /// Override c for square-root rules, in %/MB
    #[arg(long)]
    c: Option<f64>,
    /// Replace every heap's rule (square-root, exact-square-root,
    /// proportional, gc-time-target, racket-simplified)
    #[arg(long)]
    rule: Option<String>,
    /// Also write an SVG scatter of the sweep
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct OracleArgs {
    /// Oracle config (JSON with heaps, total_memory_mb, grid_step_mb)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Inline heap as "live,alloc_rate,gc_speed" (repeatable, 2-4 heaps)
    #[arg(long = "heap", value_name = "L,G,S")]
    heaps: Vec<String>,
    /// Total memory budget in MB (with --heap)
    #[arg(long)]
    total: Option<f64>,
    /// Grid step in MB
    #[arg(long, default_value_t = 0.01)]
    step: f64,
}

#[derive(Args)]
struct PlotArgs {
    /// Sweep CSV produced by the sweep subcommand
    #[arg(long)]
    input: PathBuf,
    /// Output SVG path (default: input with .svg extension)
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `std::env::args` and runs; the binary's whole `main`.
pub fn run() -> ExitCode {
    ExitCode::from(run_from(std::env::args().collect()))
}

/// Testable entry point.
pub fn run_from(args: Vec<String>) -> u8 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap reports usage errors with exit code 2
            let _ = e.print();
            return e.exit_code() as u8;
        }
    };
    let outcome = match cli.command {
        Cmd::Simulate(args) => cmd_simulate(&args),
        Cmd::Sweep(args) => cmd_sweep(&args),
        Cmd::Oracle(args) => cmd_oracle(&args),
        Cmd::Plot(args) => cmd_plot(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn env_c() -> Result<Option<f64>, String> {
    match std::env::var(ENV_C) {
        Ok(raw) => {
            let v: f64 = raw
                .trim()
                .parse()
                .map_err(|_| format!("{ENV_C}='{raw}' is not a number (expected %/MB)"))?;
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{ENV_C} must be positive, got {v}"));
            }
            Ok(Some(v))
        }
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(format!("cannot read {ENV_C}: {e}")),
    }
}

fn overrides_from(args: &RunArgs) -> Result<Overrides, String> {
    Ok(Overrides {
        // MEMBALANCER_C beats --c beats the config file.
        c_percent: env_c()?.or(args.c),
        rule: args.rule.clone(),
        duration: args.duration,
        seed: args.seed,
    })
}

fn out_dir(args: &RunArgs, cfg: &ExperimentConfig) -> PathBuf {
    args.out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| format!("cannot create {}: {e}", parent.display()))?;
    }
    std::fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

const METRICS_HEADER: &str =
    "heap_id,gc_count,total_gc_time_s,avg_usage_mb,allocated_mb,collected_mb,oom_at_s";

fn metrics_csv(metrics: &RunMetrics) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for h in &metrics.per_heap {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            h.heap_id,
            h.gc_count,
            fmt_num(h.total_gc_time),
            fmt_num(h.avg_usage),
            fmt_num(h.allocated),
            fmt_num(h.collected),
            h.oom_at.map(fmt_num).unwrap_or_default(),
        ));
    }
    out.push_str(&format!(
        "total,{},{},{},{},{},\n",
        metrics.gc_count,
        fmt_num(metrics.total_gc_time),
        fmt_num(metrics.avg_heap_usage),
        fmt_num(metrics.per_heap.iter().map(|h| h.allocated).sum::<f64>()),
        fmt_num(metrics.per_heap.iter().map(|h| h.collected).sum::<f64>()),
    ));
    out
}

fn print_summary(metrics: &RunMetrics) {
    println!("heap  gc_count  gc_time_s  avg_usage_mb  oom");
    for h in &metrics.per_heap {
        println!(
            "{:<5} {:<9} {:<10} {:<13} {}",
            h.heap_id,
            h.gc_count,
            fmt_num(h.total_gc_time),
            fmt_num(h.avg_usage),
            h.oom_at
                .map(|t| format!("at {} s", fmt_num(t)))
                .unwrap_or_else(|| "-".into()),
        );
    }
    println!(
        "total {:<9} {:<10} {:<13}",
        metrics.gc_count,
        fmt_num(metrics.total_gc_time),
        fmt_num(metrics.avg_heap_usage)
    );
}

fn cmd_simulate(args: &RunArgs) -> Result<u8, String> {
    let cfg = ExperimentConfig::load(&args.config).map_err(|e| e.to_string())?;
    let ov = overrides_from(args)?;
    let exp = cfg.build(&ov).map_err(|e| e.to_string())?;
    let metrics =
        sim_run(&exp.heaps, exp.duration, exp.sample_period).map_err(|e| e.to_string())?;

    let dir = out_dir(args, &cfg);
    write_file(&dir.join("log.csv"), &logcsv::write_log_csv(&metrics.log))?;
    write_file(&dir.join("metrics.csv"), &metrics_csv(&metrics))?;
    print_summary(&metrics);
    println!(
        "wrote {} and {}",
        dir.join("log.csv").display(),
        dir.join("metrics.csv").display()
    );

    if metrics.any_oom() {
        eprintln!("warning: at least one heap ran out of memory");
        Ok(EXIT_OOM)
    } else {
        Ok(EXIT_OK)
    }
}

/// One sweep run; values are quantized to the CSV precision so files
/// round-trip exactly.
fn sweep_point(value: f64, metrics: &RunMetrics, run_id: String) -> SweepPoint {
    SweepPoint {
        param_value: round_sig(value, 6),
        avg_heap_usage_mb: round_sig(metrics.avg_heap_usage, 6),
        total_gc_time_s: round_sig(metrics.total_gc_time, 6),
        gc_count: metrics.gc_count,
        run_id,
    }
}

fn cmd_sweep(args: &RunArgs) -> Result<u8, String> {
    let cfg = ExperimentConfig::load(&args.config).map_err(|e| e.to_string())?;
    let ov = overrides_from(args)?;
    let sweep = cfg.sweep.clone().ok_or("config has no sweep section")?;

    let mut points = Vec::with_capacity(sweep.values.len());
    let mut oom = false;
    for &value in &sweep.values {
        let exp = cfg
            .build_for_sweep_value(&ov, value)
            .map_err(|e| e.to_string())?;
        let metrics =
            sim_run(&exp.heaps, exp.duration, exp.sample_period).map_err(|e| e.to_string())?;
        oom |= metrics.any_oom();
        let run_id = format!("{:?}={}", sweep.parameter, fmt_num(value)).to_lowercase();
        points.push(sweep_point(value, &metrics, run_id));
    }

    let dir = out_dir(args, &cfg);
    let csv = logcsv::write_sweep_csv(&points);
    write_file(&dir.join("sweep.csv"), &csv)?;
    print!("{csv}");

    if let Some(baseline) = &cfg.baseline {
        let exp = cfg
            .build_with_rule(&ov, baseline)
            .map_err(|e| e.to_string())?;
        let metrics =
            sim_run(&exp.heaps, exp.duration, exp.sample_period).map_err(|e| e.to_string())?;
        let normalized: Vec<SweepPoint> =
            normalize(&points, metrics.avg_heap_usage, metrics.total_gc_time)
                .into_iter()
                .map(|p| SweepPoint {
                    param_value: p.param_value,
                    avg_heap_usage_mb: round_sig(p.avg_heap_usage_mb, 6),
                    total_gc_time_s: round_sig(p.total_gc_time_s, 6),
                    gc_count: p.gc_count,
                    run_id: p.run_id,
                })
                .collect();
        write_file(
            &dir.join("sweep_normalized.csv"),
            &logcsv::write_sweep_csv(&normalized),
        )?;
    }

    if args.svg {
        write_file(&dir.join("sweep.svg"), &sweep_svg(&points))?;
    }
    if oom {
        eprintln!("warning: at least one sweep run reported an out-of-memory heap");
    }
    Ok(EXIT_OK)
}

fn sweep_svg(points: &[SweepPoint]) -> String {
    let xy: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.avg_heap_usage_mb, p.total_gc_time_s))
        .collect();
    let curve = fit_tradeoff(points).ok().map(|fit| {
        let lo = xy.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let hi = xy.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        (0..=100)
            .map(|i| {
                let u = lo + (hi - lo) * i as f64 / 100.0;
                (u, fit.predict_gc_time(u))
            })
            .collect::<Vec<_>>()
    });
    svg::scatter_svg(
        "parameter sweep",
        "avg heap usage (MB)",
        "total gc time (s)",
        &[svg::Series {
            label: "sweep",
            color: "#1f77b4",
            points: &xy,
        }],
        curve.as_deref(),
    )
}

fn parse_heap_flag(raw: &str) -> Result<HeapParams, String> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != 3 {
        return Err(format!(
            "--heap expects 'live,alloc_rate,gc_speed', got '{raw}'"
        ));
    }
    let mut vals = [0.0f64; 3];
    for (slot, part) in vals.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| format!("cannot parse '{part}' as a number"))?;
    }
    HeapParams::new(vals[0], vals[1], vals[2]).map_err(|e| e.to_string())
}

fn cmd_oracle(args: &OracleArgs) -> Result<u8, String> {
    let (heaps, total, step) = if let Some(path) = &args.config {
        let cfg = OracleConfig::load(path).map_err(|e| e.to_string())?;
        let heaps: Vec<HeapParams> = cfg
            .heaps
            .iter()
            .map(|h| HeapParams::new(h.live_mb, h.alloc_rate_mb_per_s, h.gc_speed_mb_per_s))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        (heaps, cfg.total_memory_mb, cfg.grid_step_mb)
    } else {
        let heaps: Vec<HeapParams> = args
            .heaps
            .iter()
            .map(|raw| parse_heap_flag(raw))
            .collect::<Result<_, _>>()?;
        let total = args.total.ok_or("--total is required with --heap")?;
        (heaps, total, args.step)
    };

    let exact = closed_form_allocation(&heaps, total).map_err(|e| e.to_string())?;
    let grid = brute_force_allocation(&heaps, total, step).map_err(|e| e.to_string())?;

    println!("heap  live_mb  closed_form_mb  brute_force_mb  d_ratio_per_mb");
    for (i, p) in heaps.iter().enumerate() {
        let deriv = if exact.limits[i] > p.live {
            fmt_num(ratio_derivative(p, exact.limits[i]).map_err(|e| e.to_string())?)
        } else {
            "-".into()
        };
        println!(
            "{:<5} {:<8} {:<15} {:<15} {}",
            i,
            fmt_num(p.live),
            fmt_num(exact.limits[i]),
            fmt_num(grid.limits[i]),
            deriv,
        );
    }
    let gap = if grid.total_ratio > 0.0 {
        (exact.total_ratio - grid.total_ratio) / grid.total_ratio
    } else {
        0.0
    };
    println!("sum_ratio closed_form = {}", fmt_num(exact.total_ratio));
    println!("sum_ratio brute_force = {}", fmt_num(grid.total_ratio));
    println!("relative gap          = {}", fmt_num(gap));
    Ok(EXIT_OK)
}

fn cmd_plot(args: &PlotArgs) -> Result<u8, String> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| format!("cannot read {}: {e}", args.input.display()))?;
    let points = logcsv::parse_sweep_csv(&text).map_err(|e| e.to_string())?;
    if points.is_empty() {
        return Err("sweep CSV has no data rows".into());
    }
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| args.input.with_extension("svg"));
    write_file(&out, &sweep_svg(&points))?;
    println!("wrote {}", out.display());
    Ok(EXIT_OK)
}
