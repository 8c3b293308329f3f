//! Traces the idle-burst workload: once allocation stops, the published
//! limit contracts with the decaying allocation-rate estimate until a single
//! collection reclaims the idle heap's garbage.
//!
//! Run with: cargo run --example idle_decay

use membalancer::controller::{ControllerConfig, HeapLimitRule};
use membalancer::model::TradeoffParam;
use membalancer::simulator::{run, LogEvent};
use membalancer::workloads::preset;

fn main() {
    let spec = preset("idle-burst").unwrap().remove(0);
    let rule = HeapLimitRule::SquareRoot(ControllerConfig::new(
        TradeoffParam::from_percent_per_mb(0.3).unwrap(),
    ));
    let m = run(&[(spec, rule)], 90.0, 1.0).unwrap();

    println!("heap goes idle at t = 30 s (allocation stops)\n");
    println!(
        "{:>6} {:>11} {:>10} {:>10} {:>10}",
        "t (s)", "g* (MB/s)", "usage", "limit", "event"
    );
    for r in &m.log {
        let interesting = r.event == LogEvent::Gc
            || (r.event == LogEvent::Heartbeat && (r.time_s as u64).is_multiple_of(5));
        if interesting {
            println!(
                "{:>6.1} {:>11.3} {:>10.2} {:>10.2} {:>10}",
                r.time_s,
                r.g_mb_per_s,
                r.usage_mb,
                r.limit_mb,
                r.event.as_str()
            );
        }
    }

    let idle_gcs: Vec<f64> = m
        .log
        .iter()
        .filter(|r| r.event == LogEvent::Gc && r.time_s > 30.0)
        .map(|r| r.time_s)
        .collect();
    println!("\ncollections during the idle window: {idle_gcs:?}");
    let last = m
        .log
        .iter()
        .rev()
        .find(|r| r.event == LogEvent::Sample)
        .unwrap();
    println!(
        "state at t = {:.0} s: usage = {} MB (= live), limit = {} MB (= live + 2 + 10)",
        last.time_s, last.usage_mb, last.limit_mb
    );
}
