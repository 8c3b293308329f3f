//! Drives one controller by hand through warmup, steady allocation, and an
//! idle stretch, printing the published limit after each step.
//!
//! Run with: cargo run --example controller_stream

use membalancer::controller::{ControllerConfig, ControllerState};
use membalancer::model::TradeoffParam;

fn main() {
    let cfg = ControllerConfig::new(TradeoffParam::from_percent_per_mb(2.0).unwrap());
    let live = 48.0;
    let mut state = ControllerState::new(live + cfg.e_min + cfg.m_nursery);

    println!(
        "before warmup the initial limit stands: {:.2} MB",
        state.published_limit
    );

    // first collection: 30 MB reclaimed in 96 ms, 48 MB still live
    state.on_gc(&cfg, 30.0, 0.096, live).unwrap();
    // first heartbeat: 12 MB allocated in the last second
    state.on_heartbeat(&cfg, 12.0, 1.0).unwrap();
    let m = state.compute_limit(&cfg).unwrap();
    println!(
        "after one gc + one heartbeat: g* = {:.2} MB/s, s* = {:.1} MB/s, M = {m:.2} MB",
        state.alloc_rate_estimate(),
        state.gc_speed_estimate()
    );

    println!("\nsteady allocation at 12 MB/s:");
    for tick in 1..=20 {
        state.on_heartbeat(&cfg, 12.0, 1.0).unwrap();
        if tick % 5 == 0 {
            let m = state.compute_limit(&cfg).unwrap();
            println!(
                "  t={tick:>2} s  g* = {:.3} MB/s  M = {m:.2} MB",
                state.alloc_rate_estimate()
            );
        }
    }

    println!("\nidle (no allocation); the estimate decays with a ~13-beat half-life:");
    let active = state.alloc_rate_estimate();
    for tick in 1..=28 {
        state.on_heartbeat(&cfg, 0.0, 1.0).unwrap();
        if tick % 7 == 0 {
            let m = state.compute_limit(&cfg).unwrap();
            println!(
                "  idle beat {tick:>2}  g* = {:.3} MB/s ({:.0}% of active)  M = {m:.2} MB",
                state.alloc_rate_estimate(),
                100.0 * state.alloc_rate_estimate() / active
            );
        }
    }
    println!(
        "\nthe limit contracts toward live + e_min + m_nursery = {:.1} MB,",
        48.0 + cfg.e_min + cfg.m_nursery
    );
    println!("which is what triggers the single cleanup collection of an idle heap.");
}
