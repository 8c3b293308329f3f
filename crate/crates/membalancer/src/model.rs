//! Analytic heap-limit model.
//!
//! A garbage collection cycle on one heap starts at live memory `L`, allocates
//! at rate `g` until the heap limit `M` is reached, then runs a stop-the-world
//! collection at speed `s`. Amortized over the cycle, the fraction of time
//! spent collecting is
//!
//! ```text
//! ratio = (L / s) * (g / (M - L))
//! ```
//!
//! Minimizing the summed ratio across heaps under a shared memory budget
//! requires the marginal exchange rate `-d(ratio)/dM = L*g / (s*(M-L)^2)` to be
//! equal to one constant `c` for every heap. Solving for `M` gives the
//! square-root rule
//!
//! ```text
//! M = L + sqrt(L * g / (c * s))
//! ```
//!
//! which allocates a shared budget optimally with no communication between
//! heaps. This module holds those formulas, the closed-form multi-heap
//! allocation, and a brute-force grid-search oracle used to verify optimality.
//!
//! Units are MB and seconds throughout; `c` is a pure fraction per MB
//! (1 %/MB = 0.01 /MB).

use thiserror::Error;

/// Errors from the analytic model operations.
#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("limit {limit} MB is not above live memory {live} MB")]
    LimitBelowLive { limit: f64, live: f64 },
    #[error("invalid heap parameters: {0}")]
    InvalidParams(String),
    #[error("live memory must be positive for this operation")]
    ZeroLive,
    #[error("budget {budget} MB does not exceed total live memory {total_live} MB")]
    InfeasibleBudget { budget: f64, total_live: f64 },
    #[error("grid step {0} MB is too coarse to admit a feasible allocation")]
    GridTooCoarse(f64),
    #[error("brute force supports 2 to 4 heaps, got {0}")]
    HeapCount(usize),
    #[error("trade-off parameter must be positive and finite, got {0}")]
    InvalidTradeoff(f64),
}

/// Instantaneous model parameters of one heap: live memory `L` (MB),
/// allocation rate `g` (MB/s), and collection speed `s` (MB/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeapParams {
    pub live: f64,
    pub alloc_rate: f64,
    pub gc_speed: f64,
}

impl HeapParams {
    /// Validates `live >= 0`, `alloc_rate >= 0`, `gc_speed > 0`.
    ///
    /// A heap with `gc_speed = 0` cannot be collected and is out of model.
    pub fn new(live: f64, alloc_rate: f64, gc_speed: f64) -> Result<Self, ModelError> {
        if !live.is_finite() || live < 0.0 {
            return Err(ModelError::InvalidParams(format!("live = {live}")));
        }
        if !alloc_rate.is_finite() || alloc_rate < 0.0 {
            return Err(ModelError::InvalidParams(format!(
                "alloc_rate = {alloc_rate}"
            )));
        }
        if !gc_speed.is_finite() || gc_speed <= 0.0 {
            return Err(ModelError::InvalidParams(format!("gc_speed = {gc_speed}")));
        }
        Ok(Self {
            live,
            alloc_rate,
            gc_speed,
        })
    }
}

/// The trade-off constant `c`: fraction of runtime exchanged per MB of heap
/// (1/MB). Externally expressed in %/MB; stored here as a pure fraction.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TradeoffParam(f64);

impl TradeoffParam {
    /// `c` as a fraction per MB. Must be positive and finite.
    pub fn new(per_mb: f64) -> Result<Self, ModelError> {
        if !per_mb.is_finite() || per_mb <= 0.0 {
            return Err(ModelError::InvalidTradeoff(per_mb));
        }
        Ok(Self(per_mb))
    }

    /// Converts from the external %/MB unit (1 %/MB = 0.01 /MB).
    pub fn from_percent_per_mb(percent: f64) -> Result<Self, ModelError> {
        Self::new(percent / 100.0)
    }

    pub fn per_mb(self) -> f64 {
        self.0
    }

    pub fn as_percent_per_mb(self) -> f64 {
        self.0 * 100.0
    }
}

/// A memory split across heaps: one limit per heap plus the summed GC ratio
/// achieved at those limits.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub limits: Vec<f64>,
    pub total_ratio: f64,
}

/// Fraction of running time spent collecting at heap limit `limit`:
/// `(L/s) * (g/(M-L))`. Zero when nothing is allocated.
pub fn gc_ratio(p: &HeapParams, limit: f64) -> Result<f64, ModelError> {
    if limit <= p.live {
        return Err(ModelError::LimitBelowLive {
            limit,
            live: p.live,
        });
    }
    if p.alloc_rate == 0.0 {
        return Ok(0.0);
    }
    Ok((p.live / p.gc_speed) * (p.alloc_rate / (limit - p.live)))
}

/// Magnitude of the ratio's sensitivity to the limit,
/// `-d(ratio)/dM = L*g / (s*(M-L)^2)`, in 1/MB. Always nonnegative.
pub fn ratio_derivative(p: &HeapParams, limit: f64) -> Result<f64, ModelError> {
    if limit <= p.live {
        return Err(ModelError::LimitBelowLive {
            limit,
            live: p.live,
        });
    }
    let extra = limit - p.live;
    Ok(p.live * p.alloc_rate / (p.gc_speed * extra * extra))
}

/// The square-root rule: `M = L + sqrt(L*g / (c*s))`.
///
/// Returns exactly `L` when the heap allocates nothing.
pub fn sqrt_limit(p: &HeapParams, c: TradeoffParam) -> f64 {
    if p.alloc_rate == 0.0 {
        return p.live;
    }
    p.live + (p.live * p.alloc_rate / (c.per_mb() * p.gc_speed)).sqrt()
}

/// Square-root rule without the `t_m >> t_g` approximation: the extra-memory
/// term is scaled by `s/(s+g)`. Never exceeds [`sqrt_limit`]; the two agree
/// when `g = 0` and differ by a factor close to 1 whenever `s >> g`.
pub fn exact_sqrt_limit(p: &HeapParams, c: TradeoffParam) -> f64 {
    if p.alloc_rate == 0.0 {
        return p.live;
    }
    let extra = (p.live * p.alloc_rate / (c.per_mb() * p.gc_speed)).sqrt();
    p.live + extra * p.gc_speed / (p.gc_speed + p.alloc_rate)
}

/// Multiple-of-live-size rule: `M = (alpha + 1) * L`.
pub fn proportional_limit(p: &HeapParams, alpha: f64) -> f64 {
    (alpha + 1.0) * p.live
}

/// The trade-off constant a proportional rule implicitly chooses for this
/// heap: `c = g / (s * alpha^2 * L)`.
///
/// Because the value depends on `g`, `s`, and `L`, proportional rules pick a
/// different `c` per heap and therefore misallocate a shared budget.
pub fn implied_c_of_proportional(p: &HeapParams, alpha: f64) -> Result<f64, ModelError> {
    if p.live == 0.0 {
        return Err(ModelError::ZeroLive);
    }
    Ok(p.alloc_rate / (p.gc_speed * alpha * alpha * p.live))
}

/// A weighted heap's effective trade-off constant: `c / weight`. Lower-weight
/// heaps see a higher `c` and receive less memory.
pub fn weighted_c(base_c: TradeoffParam, weight: f64) -> Result<TradeoffParam, ModelError> {
    if !weight.is_finite() || weight <= 0.0 {
        return Err(ModelError::InvalidParams(format!("weight = {weight}")));
    }
    TradeoffParam::new(base_c.per_mb() / weight)
}

fn sqrt_weight(p: &HeapParams) -> f64 {
    (p.live * p.alloc_rate / p.gc_speed).sqrt()
}

fn validate_heaps(heaps: &[HeapParams]) -> Result<(), ModelError> {
    for p in heaps {
        HeapParams::new(p.live, p.alloc_rate, p.gc_speed)?;
    }
    Ok(())
}

/// Splits `total_memory` across heaps to minimize the summed GC ratio.
///
/// Extra memory beyond each heap's live size is distributed proportional to
/// `sqrt(L*g/s)`, which equalizes [`ratio_derivative`] across all heaps that
/// allocate. Heaps with `alloc_rate = 0` (or `live = 0`, whose collections
/// are free) receive zero extra.
pub fn closed_form_allocation(
    heaps: &[HeapParams],
    total_memory: f64,
) -> Result<Allocation, ModelError> {
    validate_heaps(heaps)?;
    let total_live: f64 = heaps.iter().map(|p| p.live).sum();
    if total_memory <= total_live {
        return Err(ModelError::InfeasibleBudget {
            budget: total_memory,
            total_live,
        });
    }
    let slack = total_memory - total_live;
    let weights: Vec<f64> = heaps.iter().map(sqrt_weight).collect();
    let weight_sum: f64 = weights.iter().sum();

    let mut limits = Vec::with_capacity(heaps.len());
    let mut total_ratio = 0.0;
    for (p, w) in heaps.iter().zip(&weights) {
        let extra = if weight_sum > 0.0 {
            slack * w / weight_sum
        } else {
            0.0
        };
        let limit = p.live + extra;
        if extra > 0.0 {
            total_ratio += gc_ratio(p, limit)?;
        }
        limits.push(limit);
    }
    Ok(Allocation {
        limits,
        total_ratio,
    })
}

/// Exhaustive grid-search oracle for [`closed_form_allocation`].
///
/// Enumerates every split of the budget slack into per-heap extras that are
/// multiples of `grid_step` and together exhaust the slack to within one
/// `grid_step`, returning the split with the smallest summed ratio. Ties are
/// broken toward the lexicographically smallest limit vector. Cost grows as
/// `(slack/grid_step)^(n-1)`, so the heap count is capped at 4.
pub fn brute_force_allocation(
    heaps: &[HeapParams],
    total_memory: f64,
    grid_step: f64,
) -> Result<Allocation, ModelError> {
    if heaps.len() < 2 || heaps.len() > 4 {
        return Err(ModelError::HeapCount(heaps.len()));
    }
    if !grid_step.is_finite() || grid_step <= 0.0 {
        return Err(ModelError::InvalidParams(format!(
            "grid_step = {grid_step}"
        )));
    }
    validate_heaps(heaps)?;
    let total_live: f64 = heaps.iter().map(|p| p.live).sum();
    if total_memory <= total_live {
        return Err(ModelError::InfeasibleBudget {
            budget: total_memory,
            total_live,
        });
    }
    let slack = total_memory - total_live;
    let steps = (slack / grid_step).floor() as usize;
    // Every heap that allocates needs at least one grid step of headroom.
    let min_steps: usize = heaps.iter().filter(|p| p.alloc_rate > 0.0).count();
    if steps < min_steps {
        return Err(ModelError::GridTooCoarse(grid_step));
    }

    // Per-heap cycle cost at k grid steps of extra memory. A zero-headroom
    // heap that allocates thrashes, so its cost is infinite.
    let cost_tables: Vec<Vec<f64>> = heaps
        .iter()
        .map(|p| {
            (0..=steps)
                .map(|k| {
                    if p.alloc_rate == 0.0 {
                        0.0
                    } else if k == 0 {
                        f64::INFINITY
                    } else {
                        gc_ratio(p, p.live + k as f64 * grid_step).unwrap_or(f64::INFINITY)
                    }
                })
                .collect()
        })
        .collect();

    let mut best_cost = f64::INFINITY;
    let mut best: Option<Vec<usize>> = None;
    // Ascending enumeration makes the first strict minimum lexicographically
    // smallest.
    match heaps.len() {
        2 => {
            for k0 in 0..=steps {
                let cost = cost_tables[0][k0] + cost_tables[1][steps - k0];
                if cost < best_cost {
                    best_cost = cost;
                    best = Some(vec![k0, steps - k0]);
                }
            }
        }
        3 => {
            for k0 in 0..=steps {
                let c0 = cost_tables[0][k0];
                if c0 >= best_cost {
                    continue;
                }
                for k1 in 0..=(steps - k0) {
                    let cost = c0 + cost_tables[1][k1] + cost_tables[2][steps - k0 - k1];
                    if cost < best_cost {
                        best_cost = cost;
                        best = Some(vec![k0, k1, steps - k0 - k1]);
                    }
                }
            }
        }
        4 => {
            for k0 in 0..=steps {
                let c0 = cost_tables[0][k0];
                if c0 >= best_cost {
                    continue;
                }
                for k1 in 0..=(steps - k0) {
                    let c01 = c0 + cost_tables[1][k1];
                    if c01 >= best_cost {
                        continue;
                    }
                    for k2 in 0..=(steps - k0 - k1) {
                        let cost = c01 + cost_tables[2][k2] + cost_tables[3][steps - k0 - k1 - k2];
                        if cost < best_cost {
                            best_cost = cost;
                            best = Some(vec![k0, k1, k2, steps - k0 - k1 - k2]);
                        }
                    }
                }
            }
        }
        _ => unreachable!(),
    }

    let best = best.ok_or(ModelError::GridTooCoarse(grid_step))?;
    if !best_cost.is_finite() {
        return Err(ModelError::GridTooCoarse(grid_step));
    }
    let limits: Vec<f64> = heaps
        .iter()
        .zip(&best)
        .map(|(p, &k)| p.live + k as f64 * grid_step)
        .collect();
    Ok(Allocation {
        limits,
        total_ratio: best_cost,
    })
}
