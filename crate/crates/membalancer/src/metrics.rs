//! Sweep aggregation: Pareto dominance, frontier extraction, and the
//! model-based trade-off regression.
//!
//! A sweep produces one `(average heap usage, total GC time)` point per
//! parameter value. Rules are compared by dominance in that plane and by a
//! least-squares fit of the model's hyperbolic trade-off
//! `gc_time = k / (usage - m0)`, which is the cycle model's shape: GC time is
//! inversely proportional to extra memory above an offset `m0` that plays the
//! role of the live size.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("trade-off fit needs at least {needed} points with distinct usage, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("degenerate sweep: {0}")]
    Degenerate(String),
}

/// One sweep run: the swept parameter value (`c` in %/MB or `alpha`) and the
/// measured totals.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub param_value: f64,
    pub avg_heap_usage_mb: f64,
    pub total_gc_time_s: f64,
    pub gc_count: u64,
    pub run_id: String,
}

impl SweepPoint {
    pub fn new(
        param_value: f64,
        avg_heap_usage_mb: f64,
        total_gc_time_s: f64,
        gc_count: u64,
    ) -> Self {
        Self {
            param_value,
            avg_heap_usage_mb,
            total_gc_time_s,
            gc_count,
            run_id: String::new(),
        }
    }
}

/// Hyperbolic trade-off fit `gc_time = k / (usage - m0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffFit {
    /// Curve scale, MB·s.
    pub k: f64,
    /// Usage offset, MB; always below the smallest observed usage.
    pub m0: f64,
    /// Root-mean-square residual relative to the data magnitude
    /// (`sqrt(sum((y - y_hat)^2) / sum(y^2))`); 0 on exactly hyperbolic data.
    pub residual: f64,
}

impl TradeoffFit {
    pub fn predict_gc_time(&self, usage: f64) -> f64 {
        self.k / (usage - self.m0)
    }
}

/// True when `a` is at least as good as `b` in both coordinates and strictly
/// better in at least one (lower usage and lower GC time are better).
pub fn dominates(a: &SweepPoint, b: &SweepPoint) -> bool {
    let usage_le = a.avg_heap_usage_mb <= b.avg_heap_usage_mb;
    let time_le = a.total_gc_time_s <= b.total_gc_time_s;
    let strict = a.avg_heap_usage_mb < b.avg_heap_usage_mb || a.total_gc_time_s < b.total_gc_time_s;
    usage_le && time_le && strict
}

/// The subset of points not dominated by any other, sorted by usage
/// ascending (GC time descending along the frontier).
pub fn pareto_frontier(points: &[SweepPoint]) -> Vec<SweepPoint> {
    let mut frontier: Vec<SweepPoint> = points
        .iter()
        .filter(|p| !points.iter().any(|q| dominates(q, p)))
        .cloned()
        .collect();
    frontier.sort_by(|a, b| {
        (a.avg_heap_usage_mb, a.total_gc_time_s)
            .partial_cmp(&(b.avg_heap_usage_mb, b.total_gc_time_s))
            .expect("finite sweep values")
    });
    frontier
}

/// Rescales points so a reference (usage, GC time) sits at (1, 1), the
/// presentation used for cross-preset comparisons.
pub fn normalize(points: &[SweepPoint], ref_usage: f64, ref_gc_time: f64) -> Vec<SweepPoint> {
    points
        .iter()
        .map(|p| SweepPoint {
            param_value: p.param_value,
            avg_heap_usage_mb: p.avg_heap_usage_mb / ref_usage,
            total_gc_time_s: p.total_gc_time_s / ref_gc_time,
            gc_count: p.gc_count,
            run_id: p.run_id.clone(),
        })
        .collect()
}

/// Least-squares fit of `gc_time = k / (usage - m0)`.
///
/// For a fixed `m0` the optimal `k` is closed-form, so the search is one
/// dimensional: a coarse logarithmic scan over the offset below the smallest
/// usage, refined by golden-section. Needs at least three points with
/// distinct usage values.
pub fn fit_tradeoff(points: &[SweepPoint]) -> Result<TradeoffFit, FitError> {
    let mut usages: Vec<f64> = points.iter().map(|p| p.avg_heap_usage_mb).collect();
    usages.sort_by(|a, b| a.partial_cmp(b).expect("finite usage"));
    usages.dedup_by(|a, b| a == b);
    if usages.len() < 3 {
        return Err(FitError::TooFewPoints {
            needed: 3,
            got: usages.len(),
        });
    }
    let min_u = usages[0];
    let max_u = *usages.last().unwrap();
    if points.iter().all(|p| p.total_gc_time_s == 0.0) {
        return Err(FitError::Degenerate("every GC time is zero".into()));
    }

    let xy: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.avg_heap_usage_mb, p.total_gc_time_s))
        .collect();

    // Sum of squared residuals with the closed-form k for this offset.
    let sse = |m0: f64| -> f64 {
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        for &(u, y) in &xy {
            let x = 1.0 / (u - m0);
            sxx += x * x;
            sxy += x * y;
        }
        let k = sxy / sxx;
        xy.iter()
            .map(|&(u, y)| {
                let r = y - k / (u - m0);
                r * r
            })
            .sum()
    };

    // Offsets are parameterized as delta = min_u - m0 > 0, scanned over a
    // wide log grid to bracket the minimum before refining.
    let scale = (max_u - min_u).max(1e-6);
    let (log_lo, log_hi) = ((1e-9f64 * scale).ln(), (1e5f64 * scale).ln());
    let scan_points = 400;
    let mut best_j = 0;
    let mut best_val = f64::INFINITY;
    let delta_at =
        |j: usize| (log_lo + (log_hi - log_lo) * j as f64 / (scan_points - 1) as f64).exp();
    for j in 0..scan_points {
        let val = sse(min_u - delta_at(j));
        if val < best_val {
            best_val = val;
            best_j = j;
        }
    }
    let mut lo = delta_at(best_j.saturating_sub(1));
    let mut hi = delta_at((best_j + 1).min(scan_points - 1));
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }

    // Golden-section refinement on delta.
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut a = lo;
    let mut b = hi;
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = sse(min_u - x1);
    let mut f2 = sse(min_u - x2);
    for _ in 0..200 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = sse(min_u - x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = sse(min_u - x2);
        }
    }
    let delta = 0.5 * (a + b);
    let m0 = min_u - delta;

    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for &(u, y) in &xy {
        let x = 1.0 / (u - m0);
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    let k = sxy / sxx;
    if k.is_nan() || k <= 0.0 {
        return Err(FitError::Degenerate(format!(
            "fitted k = {k} is not positive"
        )));
    }
    let sse_final: f64 = xy
        .iter()
        .map(|&(u, y)| {
            let r = y - k / (u - m0);
            r * r
        })
        .sum();
    Ok(TradeoffFit {
        k,
        m0,
        residual: (sse_final / syy).sqrt(),
    })
}
