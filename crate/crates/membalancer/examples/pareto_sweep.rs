//! Sweeps the square-root rule's c and the proportional rule's alpha on two
//! dissimilar heaps, then compares the resulting (usage, GC time) clouds:
//! every proportional point is dominated by some square-root point. Writes
//! the sweep CSV and an SVG scatter next to the system temp directory.
//!
//! Run with: cargo run --example pareto_sweep

use membalancer::cli::logcsv::{round_sig, write_sweep_csv};
use membalancer::cli::svg::{scatter_svg, Series};
use membalancer::controller::{ControllerConfig, HeapLimitRule};
use membalancer::metrics::{dominates, fit_tradeoff, pareto_frontier, SweepPoint};
use membalancer::model::TradeoffParam;
use membalancer::simulator::run;
use membalancer::workloads::{preset, WorkloadSpec};

fn sweep(rule_for: impl Fn(f64) -> HeapLimitRule, values: &[f64]) -> Vec<SweepPoint> {
    let specs = preset("fig1-pair").unwrap();
    values
        .iter()
        .map(|&v| {
            let heaps: Vec<(WorkloadSpec, HeapLimitRule)> =
                specs.iter().cloned().map(|w| (w, rule_for(v))).collect();
            let m = run(&heaps, 120.0, 1.0).unwrap();
            SweepPoint::new(
                round_sig(v, 6),
                round_sig(m.avg_heap_usage, 6),
                round_sig(m.total_gc_time, 6),
                m.gc_count,
            )
        })
        .collect()
}

fn main() {
    let cs = [
        0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0,
    ];
    let alphas = [0.5, 1.0, 2.0, 4.0];
    let sqrt_points = sweep(
        |c| {
            HeapLimitRule::SquareRoot(ControllerConfig::new(
                TradeoffParam::from_percent_per_mb(c).unwrap(),
            ))
        },
        &cs,
    );
    let prop_points = sweep(|a| HeapLimitRule::Proportional { alpha: a }, &alphas);

    println!("square-root sweep (c in %/MB):");
    for p in &sqrt_points {
        println!(
            "  c={:<7} usage={:8.2} MB  gc_time={:7.2} s",
            p.param_value, p.avg_heap_usage_mb, p.total_gc_time_s
        );
    }
    println!("proportional sweep:");
    for p in &prop_points {
        println!(
            "  a={:<7} usage={:8.2} MB  gc_time={:7.2} s",
            p.param_value, p.avg_heap_usage_mb, p.total_gc_time_s
        );
    }

    for p in &prop_points {
        let dominated = sqrt_points.iter().any(|s| dominates(s, p));
        println!(
            "proportional alpha={} is {}dominated by the square-root sweep",
            p.param_value,
            if dominated { "" } else { "NOT " }
        );
    }

    let frontier = pareto_frontier(&sqrt_points);
    println!(
        "\nsquare-root frontier has {} of {} points",
        frontier.len(),
        sqrt_points.len()
    );
    if let Ok(fit) = fit_tradeoff(&sqrt_points) {
        println!(
            "hyperbolic fit: gc_time = {:.1} / (usage - {:.1}), residual {:.4}",
            fit.k, fit.m0, fit.residual
        );
    }

    let dir = std::env::temp_dir().join("membalancer_pareto_sweep");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("sweep.csv"), write_sweep_csv(&sqrt_points)).unwrap();
    let sq_xy: Vec<(f64, f64)> = sqrt_points
        .iter()
        .map(|p| (p.avg_heap_usage_mb, p.total_gc_time_s))
        .collect();
    let prop_xy: Vec<(f64, f64)> = prop_points
        .iter()
        .map(|p| (p.avg_heap_usage_mb, p.total_gc_time_s))
        .collect();
    let curve = fit_tradeoff(&sqrt_points).ok().map(|fit| {
        let lo = sq_xy.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let hi = sq_xy.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        (0..=100)
            .map(|i| {
                let u = lo + (hi - lo) * i as f64 / 100.0;
                (u, fit.predict_gc_time(u))
            })
            .collect::<Vec<_>>()
    });
    let svg = scatter_svg(
        "square-root vs proportional on fig1-pair",
        "avg heap usage (MB)",
        "total gc time (s)",
        &[
            Series {
                label: "square-root",
                color: "#d62728",
                points: &sq_xy,
            },
            Series {
                label: "proportional",
                color: "#1f1f1f",
                points: &prop_xy,
            },
        ],
        curve.as_deref(),
    );
    std::fs::write(dir.join("sweep.svg"), svg).unwrap();
    println!(
        "\nwrote {} and sweep.svg there",
        dir.join("sweep.csv").display()
    );
}
