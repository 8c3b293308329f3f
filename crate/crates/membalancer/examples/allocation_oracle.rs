//! Verifies the closed-form memory split against exhaustive grid search.
//!
//! Run with: cargo run --release --example allocation_oracle

use membalancer::model::{
    brute_force_allocation, closed_form_allocation, ratio_derivative, HeapParams,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn main() {
    // the worked two-heap instance: weights sqrt(10) : sqrt(40) = 1 : 2
    let pair = [
        HeapParams::new(10.0, 100.0, 100.0).unwrap(),
        HeapParams::new(10.0, 400.0, 100.0).unwrap(),
    ];
    let exact = closed_form_allocation(&pair, 40.0).unwrap();
    let grid = brute_force_allocation(&pair, 40.0, 0.01).unwrap();
    println!("two heaps, 40 MB budget:");
    println!("  closed form limits: {:?}", exact.limits);
    println!("  brute force limits: {:?}", grid.limits);
    println!(
        "  sum ratio: closed {:.6} vs grid {:.6}",
        exact.total_ratio, grid.total_ratio
    );
    println!(
        "  derivative per heap: {:?}\n",
        exact
            .limits
            .iter()
            .zip(&pair)
            .map(|(&m, p)| ratio_derivative(p, m).unwrap())
            .collect::<Vec<_>>()
    );

    let mut rng = StdRng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for i in 0..12 {
        let n = 2 + i % 3;
        let heaps: Vec<HeapParams> = (0..n)
            .map(|_| {
                HeapParams::new(
                    rng.random_range(1.0..50.0),
                    rng.random_range(1.0..500.0),
                    rng.random_range(100.0..1000.0),
                )
                .unwrap()
            })
            .collect();
        let total: f64 = heaps.iter().map(|p| p.live).sum::<f64>() + rng.random_range(3.0..6.0);
        let exact = closed_form_allocation(&heaps, total).unwrap();
        let grid = brute_force_allocation(&heaps, total, 0.01).unwrap();
        let gap = (exact.total_ratio - grid.total_ratio).abs() / grid.total_ratio;
        worst = worst.max(gap);
        println!(
            "{n} heaps, budget {total:7.2} MB: closed {:.6}  grid {:.6}  gap {:.5}%",
            exact.total_ratio,
            grid.total_ratio,
            gap * 100.0
        );
    }
    println!(
        "\nworst relative gap over 12 seeded instances: {:.5}%",
        worst * 100.0
    );
}
