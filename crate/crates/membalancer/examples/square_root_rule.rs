//! The square-root heap limit rule on the three case-study heaps.
//!
//! Shows the closed-form limits, the marginal memory/time exchange rate at
//! those limits (equal across heaps by construction), and what a
//! proportional rule would implicitly choose instead.
//!
//! Run with: cargo run --example square_root_rule

use membalancer::model::{
    exact_sqrt_limit, gc_ratio, implied_c_of_proportional, proportional_limit, ratio_derivative,
    sqrt_limit, HeapParams, TradeoffParam,
};

fn main() {
    let heaps = [
        ("splay", HeapParams::new(31.0, 633.0, 525.0).unwrap()),
        ("typescript", HeapParams::new(30.0, 57.0, 440.0).unwrap()),
        ("pdfjs", HeapParams::new(96.0, 34.0, 383.0).unwrap()),
    ];
    let c = TradeoffParam::from_percent_per_mb(20.0).unwrap();

    println!("square-root rule at c = {} %/MB", c.as_percent_per_mb());
    println!(
        "{:<12} {:>8} {:>8} {:>8} {:>10} {:>10} {:>10} {:>12}",
        "heap", "L (MB)", "g (MB/s)", "s (MB/s)", "M (MB)", "M-L (MB)", "ratio", "dratio/dM"
    );
    for (name, p) in &heaps {
        let m = sqrt_limit(p, c);
        println!(
            "{:<12} {:>8.1} {:>8.1} {:>8.1} {:>10.2} {:>10.2} {:>10.4} {:>12.6}",
            name,
            p.live,
            p.alloc_rate,
            p.gc_speed,
            m,
            m - p.live,
            gc_ratio(p, m).unwrap(),
            ratio_derivative(p, m).unwrap(),
        );
    }
    println!(
        "the exchange-rate column equals c = {} /MB for every heap, so",
        c.per_mb()
    );
    println!("no reallocation of memory between heaps can reduce the summed GC ratio.\n");

    let splay = &heaps[0].1;
    let pdfjs = &heaps[2].1;
    let ratio = (sqrt_limit(splay, c) - splay.live) / (sqrt_limit(pdfjs, c) - pdfjs.live);
    println!("extra-memory ratio splay : pdfjs = {ratio:.2} (the fast allocator gets more)\n");

    println!("exact variant (extra term scaled by s/(s+g)):");
    for (name, p) in &heaps {
        println!(
            "  {:<12} plain {:>8.3} MB   exact {:>8.3} MB",
            name,
            sqrt_limit(p, c) - p.live,
            exact_sqrt_limit(p, c) - p.live
        );
    }

    println!("\nproportional rule M = 2L implicitly prices memory at:");
    for (name, p) in &heaps {
        println!(
            "  {:<12} M = {:>6.1} MB   implied c = {:>10.6} /MB",
            name,
            proportional_limit(p, 1.0),
            implied_c_of_proportional(p, 1.0).unwrap()
        );
    }
    println!("different implied c per heap means the proportional split is not optimal.");
}
