//! Online heap-limit controller.
//!
//! The controller consumes two measurement streams per heap and publishes a
//! heap limit:
//!
//! * after every major collection, [`ControllerState::on_gc`] records bytes
//!   collected, collection duration, and live memory;
//! * once per heartbeat (1 s by default), [`ControllerState::on_heartbeat`]
//!   records bytes allocated and the interval they were allocated over.
//!
//! Rates are noisy, so numerator and denominator are smoothed separately with
//! an exponentially weighted moving average: collection speed with
//! `alpha_s = 0.5` (one anomalously long collection should not dominate) and
//! allocation rate with `alpha_g = 0.95` (a data point half-life of about
//! thirteen heartbeats, enough damping to avoid spurious collections while
//! still tracking behavior changes). Live memory is replaced, not smoothed.
//!
//! [`ControllerState::compute_limit`] then publishes
//!
//! ```text
//! E = sqrt((L*/c) * (g_m*/g_t*) / (s_m*/s_t*))
//! M = L* + max(E, e_min) + m_nursery
//! ```
//!
//! `e_min` keeps an idle heap from hitting its limit the moment it wakes up;
//! `m_nursery` accounts for the young generation triggering collections when
//! remaining space runs low. When a heap goes idle the smoothed allocation
//! rate decays exponentially, the published limit contracts, and one
//! collection reclaims the idle heap's garbage with no separate idle-cleanup
//! machinery.
//!
//! Per heap, `on_gc` / `on_heartbeat` / `compute_limit` must be serialized by
//! the caller. The published limit may be read at any time by an independent
//! consumer and always reflects a complete update; an embedding runtime must
//! publish it atomically (the simulator is single-threaded, which satisfies
//! this trivially).

use crate::model::TradeoffParam;
use thiserror::Error;

/// Default smoothing factor for the allocation-rate estimate.
pub const DEFAULT_ALPHA_G: f64 = 0.95;
/// Default smoothing factor for the collection-speed estimate.
pub const DEFAULT_ALPHA_S: f64 = 0.5;
/// Default minimum extra heap space in MB.
pub const DEFAULT_E_MIN: f64 = 2.0;
/// Default nursery size in MB, added on top of the computed limit.
pub const DEFAULT_M_NURSERY: f64 = 10.0;
/// Default heartbeat period in seconds.
pub const DEFAULT_HEARTBEAT_PERIOD: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum ControllerError {
    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),
    #[error("controller is not warm: needs at least one gc and one heartbeat measurement")]
    NotWarm,
    #[error("invalid rule parameter: {0}")]
    InvalidRule(String),
}

/// Tuning knobs for the square-root controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    pub c: TradeoffParam,
    pub alpha_g: f64,
    pub alpha_s: f64,
    pub e_min: f64,
    pub m_nursery: f64,
    pub heartbeat_period: f64,
}

impl ControllerConfig {
    /// Config with the given trade-off constant and default constants.
    pub fn new(c: TradeoffParam) -> Self {
        Self {
            c,
            alpha_g: DEFAULT_ALPHA_G,
            alpha_s: DEFAULT_ALPHA_S,
            e_min: DEFAULT_E_MIN,
            m_nursery: DEFAULT_M_NURSERY,
            heartbeat_period: DEFAULT_HEARTBEAT_PERIOD,
        }
    }

    pub fn validate(&self) -> Result<(), ControllerError> {
        let ok = (0.0..1.0).contains(&self.alpha_g)
            && (0.0..1.0).contains(&self.alpha_s)
            && self.e_min >= 0.0
            && self.m_nursery >= 0.0
            && self.heartbeat_period > 0.0;
        if ok {
            Ok(())
        } else {
            Err(ControllerError::InvalidRule(format!(
                "bad controller config: {self:?}"
            )))
        }
    }
}

impl Default for ControllerConfig {
    /// Defaults with `c = 1 %/MB`, the middle of the usual sweep range.
    fn default() -> Self {
        Self::new(TradeoffParam::from_percent_per_mb(1.0).expect("constant is valid"))
    }
}

/// Smoothed estimators plus the currently published limit for one heap.
///
/// All estimators start at zero; smoothing from a zero state scales numerator
/// and denominator by the same `1 - alpha`, so the implied rate is correct
/// from the very first sample. The limit may not be computed until at least
/// one collection and one heartbeat have been observed (`warmup`); before
/// that the published limit stays at its configured initial value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    /// Smoothed bytes collected per collection (MB).
    pub s_m_star: f64,
    /// Smoothed collection duration (s).
    pub s_t_star: f64,
    /// Live memory after the most recent collection (MB).
    pub l_star: f64,
    /// Smoothed bytes allocated per heartbeat (MB).
    pub g_m_star: f64,
    /// Smoothed heartbeat interval (s).
    pub g_t_star: f64,
    /// The heap limit visible to the collector (MB).
    pub published_limit: f64,
    seen_gc: bool,
    seen_heartbeat: bool,
}

fn ewma(prev: f64, sample: f64, alpha: f64) -> f64 {
    alpha * prev + (1.0 - alpha) * sample
}

impl ControllerState {
    /// Fresh state publishing `initial_limit` until warm.
    pub fn new(initial_limit: f64) -> Self {
        Self {
            s_m_star: 0.0,
            s_t_star: 0.0,
            l_star: 0.0,
            g_m_star: 0.0,
            g_t_star: 0.0,
            published_limit: initial_limit,
            seen_gc: false,
            seen_heartbeat: false,
        }
    }

    pub fn is_warm(&self) -> bool {
        self.seen_gc && self.seen_heartbeat
    }

    pub fn seen_gc(&self) -> bool {
        self.seen_gc
    }

    /// Smoothed allocation rate in MB/s, zero until a heartbeat arrives.
    pub fn alloc_rate_estimate(&self) -> f64 {
        if self.g_t_star > 0.0 {
            self.g_m_star / self.g_t_star
        } else {
            0.0
        }
    }

    /// Smoothed collection speed in MB/s, zero until a collection arrives.
    pub fn gc_speed_estimate(&self) -> f64 {
        if self.s_t_star > 0.0 {
            self.s_m_star / self.s_t_star
        } else {
            0.0
        }
    }

    /// Records a completed major collection.
    pub fn on_gc(
        &mut self,
        cfg: &ControllerConfig,
        bytes_collected: f64,
        gc_duration: f64,
        live_after: f64,
    ) -> Result<(), ControllerError> {
        if !gc_duration.is_finite() || gc_duration <= 0.0 {
            return Err(ControllerError::InvalidMeasurement(format!(
                "gc duration must be positive, got {gc_duration}"
            )));
        }
        if !bytes_collected.is_finite() || bytes_collected < 0.0 {
            return Err(ControllerError::InvalidMeasurement(format!(
                "bytes collected must be nonnegative, got {bytes_collected}"
            )));
        }
        if !live_after.is_finite() || live_after < 0.0 {
            return Err(ControllerError::InvalidMeasurement(format!(
                "live memory must be nonnegative, got {live_after}"
            )));
        }
        self.s_m_star = ewma(self.s_m_star, bytes_collected, cfg.alpha_s);
        self.s_t_star = ewma(self.s_t_star, gc_duration, cfg.alpha_s);
        self.l_star = live_after;
        self.seen_gc = true;
        Ok(())
    }

    /// Records allocation activity over one heartbeat interval.
    pub fn on_heartbeat(
        &mut self,
        cfg: &ControllerConfig,
        bytes_allocated: f64,
        interval: f64,
    ) -> Result<(), ControllerError> {
        if !interval.is_finite() || interval <= 0.0 {
            return Err(ControllerError::InvalidMeasurement(format!(
                "heartbeat interval must be positive, got {interval}"
            )));
        }
        if !bytes_allocated.is_finite() || bytes_allocated < 0.0 {
            return Err(ControllerError::InvalidMeasurement(format!(
                "bytes allocated must be nonnegative, got {bytes_allocated}"
            )));
        }
        self.g_m_star = ewma(self.g_m_star, bytes_allocated, cfg.alpha_g);
        self.g_t_star = ewma(self.g_t_star, interval, cfg.alpha_g);
        self.seen_heartbeat = true;
        Ok(())
    }

    /// Recomputes and publishes the square-root limit.
    pub fn compute_limit(&mut self, cfg: &ControllerConfig) -> Result<f64, ControllerError> {
        self.compute_limit_inner(cfg, false)
    }

    /// As [`compute_limit`](Self::compute_limit) but with the extra-memory
    /// term scaled by `s/(s+g)`, dropping the fast-mutator approximation.
    pub fn compute_limit_exact(&mut self, cfg: &ControllerConfig) -> Result<f64, ControllerError> {
        self.compute_limit_inner(cfg, true)
    }

    fn compute_limit_inner(
        &mut self,
        cfg: &ControllerConfig,
        exact: bool,
    ) -> Result<f64, ControllerError> {
        if !self.is_warm() {
            return Err(ControllerError::NotWarm);
        }
        let g_rate = self.alloc_rate_estimate();
        let s_rate = self.gc_speed_estimate();
        let mut extra = if g_rate == 0.0 {
            0.0
        } else if s_rate > 0.0 {
            let e = (self.l_star / cfg.c.per_mb() * g_rate / s_rate).sqrt();
            if exact {
                e * s_rate / (s_rate + g_rate)
            } else {
                e
            }
        } else {
            // Collections have reclaimed nothing so far; there is no speed
            // estimate to size the heap with. Fall back to the floor rather
            // than publishing an unbounded limit.
            f64::INFINITY
        };
        if !extra.is_finite() {
            extra = cfg.e_min;
        }
        let limit = self.l_star + extra.max(cfg.e_min) + cfg.m_nursery;
        self.published_limit = limit;
        Ok(limit)
    }
}

/// Heap-limit policy. The square-root rules carry their own controller
/// config; the others are baselines for comparison.
#[derive(Debug, Clone, PartialEq)]
pub enum HeapLimitRule {
    /// `M = L* + max(E, e_min) + m_nursery` with `E` from the square-root rule.
    SquareRoot(ControllerConfig),
    /// Square-root rule with the `s/(s+g)` correction on the extra term.
    ExactSquareRoot(ControllerConfig),
    /// Multiple-of-live-size: `M = (alpha + 1) * L*`.
    Proportional { alpha: f64 },
    /// Steers the observed GC-time fraction toward `rho` by multiplicatively
    /// adjusting the previous limit, capped at `(cap_alpha + 1) * L*` and
    /// floored at `L* + e_min`.
    GcTimeTarget {
        rho: f64,
        adjust_gain: f64,
        cap_alpha: f64,
    },
    /// `M = L* + k * sqrt(L*)`.
    RacketSimplified { k: f64 },
    /// A constant limit.
    Fixed { limit: f64 },
}

/// Default multiplicative step for [`HeapLimitRule::GcTimeTarget`].
pub const DEFAULT_ADJUST_GAIN: f64 = 0.1;
/// Default live-size cap multiple for [`HeapLimitRule::GcTimeTarget`].
pub const DEFAULT_CAP_ALPHA: f64 = 3.0;

/// Running totals a rule may consult when recomputing a limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleContext {
    /// Simulated wall-clock since the run started (s).
    pub elapsed: f64,
    /// Total completed collection time so far (s).
    pub total_gc_time: f64,
}

impl HeapLimitRule {
    pub fn validate(&self) -> Result<(), ControllerError> {
        match self {
            HeapLimitRule::SquareRoot(cfg) | HeapLimitRule::ExactSquareRoot(cfg) => cfg.validate(),
            HeapLimitRule::Proportional { alpha } => {
                if *alpha > 0.0 && alpha.is_finite() {
                    Ok(())
                } else {
                    Err(ControllerError::InvalidRule(format!("alpha = {alpha}")))
                }
            }
            HeapLimitRule::GcTimeTarget {
                rho,
                adjust_gain,
                cap_alpha,
            } => {
                if !(*rho > 0.0 && *rho < 1.0) {
                    return Err(ControllerError::InvalidRule(format!("rho = {rho}")));
                }
                if !(*adjust_gain > 0.0 && adjust_gain.is_finite()) {
                    return Err(ControllerError::InvalidRule(format!(
                        "adjust_gain = {adjust_gain}"
                    )));
                }
                if !(*cap_alpha > 0.0 && cap_alpha.is_finite()) {
                    return Err(ControllerError::InvalidRule(format!(
                        "cap_alpha = {cap_alpha}"
                    )));
                }
                Ok(())
            }
            HeapLimitRule::RacketSimplified { k } => {
                if *k > 0.0 && k.is_finite() {
                    Ok(())
                } else {
                    Err(ControllerError::InvalidRule(format!("k = {k}")))
                }
            }
            HeapLimitRule::Fixed { limit } => {
                if *limit > 0.0 && limit.is_finite() {
                    Ok(())
                } else {
                    Err(ControllerError::InvalidRule(format!(
                        "fixed limit = {limit}"
                    )))
                }
            }
        }
    }

    /// The controller config this rule runs with; baseline rules use the
    /// defaults (their limit formulas ignore `c`).
    pub fn controller_config(&self) -> ControllerConfig {
        match self {
            HeapLimitRule::SquareRoot(cfg) | HeapLimitRule::ExactSquareRoot(cfg) => *cfg,
            _ => ControllerConfig::default(),
        }
    }

    /// The limit published before any measurement arrives, from the initial
    /// live memory.
    pub fn initial_limit(&self, initial_live: f64) -> f64 {
        match self {
            HeapLimitRule::SquareRoot(cfg) | HeapLimitRule::ExactSquareRoot(cfg) => {
                initial_live + cfg.e_min + cfg.m_nursery
            }
            HeapLimitRule::Proportional { alpha } => (alpha + 1.0) * initial_live,
            // Time-target collectors treat the fixed multiple as a cap on the
            // derived limit; start at the cap and let adjustments pull down.
            HeapLimitRule::GcTimeTarget { cap_alpha, .. } => {
                ((cap_alpha + 1.0) * initial_live).max(initial_live + DEFAULT_E_MIN)
            }
            HeapLimitRule::RacketSimplified { k } => initial_live + k * initial_live.sqrt(),
            HeapLimitRule::Fixed { limit } => *limit,
        }
    }

    /// Recomputes and publishes this rule's limit for the given state.
    ///
    /// Deterministic: the same state and context always produce the same
    /// limit. Returns [`ControllerError::NotWarm`] while the measurements a
    /// rule depends on have not arrived yet; callers keep the previously
    /// published limit in that case.
    pub fn apply(
        &self,
        state: &mut ControllerState,
        ctx: &RuleContext,
    ) -> Result<f64, ControllerError> {
        let limit = match self {
            HeapLimitRule::SquareRoot(cfg) => state.compute_limit(cfg)?,
            HeapLimitRule::ExactSquareRoot(cfg) => state.compute_limit_exact(cfg)?,
            HeapLimitRule::Proportional { alpha } => {
                if !state.seen_gc {
                    return Err(ControllerError::NotWarm);
                }
                (alpha + 1.0) * state.l_star
            }
            HeapLimitRule::GcTimeTarget {
                rho,
                adjust_gain,
                cap_alpha,
            } => {
                if !state.seen_gc {
                    return Err(ControllerError::NotWarm);
                }
                let fraction = if ctx.elapsed > 0.0 {
                    ctx.total_gc_time / ctx.elapsed
                } else {
                    0.0
                };
                let previous = state.published_limit;
                let adjusted = if fraction > *rho {
                    previous * (1.0 + adjust_gain)
                } else {
                    previous / (1.0 + adjust_gain)
                };
                let cap = (cap_alpha + 1.0) * state.l_star;
                let floor = state.l_star + DEFAULT_E_MIN;
                adjusted.min(cap).max(floor)
            }
            HeapLimitRule::RacketSimplified { k } => {
                if !state.seen_gc {
                    return Err(ControllerError::NotWarm);
                }
                state.l_star + k * state.l_star.sqrt()
            }
            HeapLimitRule::Fixed { limit } => *limit,
        };
        state.published_limit = limit;
        Ok(limit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};

    fn cfg(c_per_mb: f64) -> ControllerConfig {
        ControllerConfig::new(TradeoffParam::new(c_per_mb).unwrap())
    }

    #[test]
    fn on_gc_from_zero_state_preserves_speed() {
        let cfg = cfg(0.01);
        let mut st = ControllerState::new(0.0);
        st.on_gc(&cfg, 100.0, 0.2, 30.0).unwrap();
        assert_eq!(st.s_m_star, 50.0);
        assert_eq!(st.s_t_star, 0.1);
        assert_relative_eq!(st.gc_speed_estimate(), 500.0);
        assert_eq!(st.l_star, 30.0);
    }

    #[test]
    fn on_gc_hand_unrolled_two_samples() {
        let cfg = cfg(0.01);
        let mut st = ControllerState::new(0.0);
        st.on_gc(&cfg, 100.0, 0.2, 30.0).unwrap();
        st.on_gc(&cfg, 100.0, 1.0, 30.0).unwrap();
        assert_eq!(st.s_m_star, 75.0);
        assert_relative_eq!(st.s_t_star, 0.55);
        assert_abs_diff_eq!(st.gc_speed_estimate(), 136.36, epsilon = 0.01);
    }

    #[test]
    fn repeated_identical_gc_converges_geometrically() {
        let cfg = cfg(0.01);
        let mut st = ControllerState::new(0.0);
        for _ in 0..60 {
            st.on_gc(&cfg, 80.0, 0.4, 25.0).unwrap();
        }
        assert_relative_eq!(st.gc_speed_estimate(), 200.0, max_relative = 1e-9);
        assert_relative_eq!(st.s_m_star, 80.0, max_relative = 1e-9);
    }

    #[test]
    fn on_heartbeat_from_zero_state() {
        let cfg = cfg(0.01);
        let mut st = ControllerState::new(0.0);
        st.on_heartbeat(&cfg, 10.0, 1.0).unwrap();
        assert_relative_eq!(st.g_m_star, 0.5, max_relative = 1e-12);
        assert_relative_eq!(st.g_t_star, 0.05, max_relative = 1e-12);
        assert_relative_eq!(st.alloc_rate_estimate(), 10.0, max_relative = 1e-12);
    }

    #[test]
    fn constant_allocation_converges_to_true_rate() {
        let cfg = cfg(0.01);
        let mut st = ControllerState::new(0.0);
        for _ in 0..400 {
            st.on_heartbeat(&cfg, 10.0, 1.0).unwrap();
        }
        assert_relative_eq!(st.alloc_rate_estimate(), 10.0, max_relative = 1e-8);
    }

    #[test]
    fn idle_decay_halves_within_fourteen_heartbeats() {
        let cfg = cfg(0.01);
        let mut st = ControllerState::new(0.0);
        for _ in 0..200 {
            st.on_heartbeat(&cfg, 100.0, 1.0).unwrap();
        }
        let active = st.alloc_rate_estimate();
        assert_relative_eq!(active, 100.0, max_relative = 1e-4);
        for _ in 0..14 {
            st.on_heartbeat(&cfg, 0.0, 1.0).unwrap();
        }
        // 0.95^14 ~ 0.488
        assert!(st.alloc_rate_estimate() <= active / 2.0);
        assert!(st.g_m_star <= 50.0);
    }

    #[test]
    fn measurement_errors() {
        let cfg = cfg(0.01);
        let mut st = ControllerState::new(0.0);
        assert!(st.on_gc(&cfg, 10.0, 0.0, 5.0).is_err());
        assert!(st.on_gc(&cfg, -1.0, 0.1, 5.0).is_err());
        assert!(st.on_gc(&cfg, 1.0, 0.1, -5.0).is_err());
        assert!(st.on_heartbeat(&cfg, 1.0, 0.0).is_err());
        assert!(st.on_heartbeat(&cfg, -1.0, 1.0).is_err());
    }

    #[test]
    fn compute_limit_requires_warmup() {
        let cfg = cfg(0.01);
        let mut st = ControllerState::new(42.0);
        assert_eq!(st.compute_limit(&cfg), Err(ControllerError::NotWarm));
        st.on_gc(&cfg, 10.0, 0.1, 5.0).unwrap();
        assert_eq!(st.compute_limit(&cfg), Err(ControllerError::NotWarm));
        st.on_heartbeat(&cfg, 1.0, 1.0).unwrap();
        let limit = st.compute_limit(&cfg).unwrap();
        assert_eq!(st.published_limit, limit);
    }

    #[test]
    fn compute_limit_zero_alloc_hits_floor() {
        let cfg = cfg(0.20);
        let mut st = ControllerState::new(0.0);
        st.on_gc(&cfg, 10.0, 0.1, 31.0).unwrap();
        st.on_heartbeat(&cfg, 0.0, 1.0).unwrap();
        let m = st.compute_limit(&cfg).unwrap();
        assert_relative_eq!(m, 31.0 + 2.0 + 10.0);
    }

    #[test]
    fn compute_limit_case_study_point() {
        // L* = 31, rates g = 633 MB/s and s = 525 MB/s, c = 0.20/MB.
        let cfg = cfg(0.20);
        let mut st = ControllerState::new(0.0);
        st.on_gc(&cfg, 525.0, 1.0, 31.0).unwrap();
        st.on_heartbeat(&cfg, 633.0, 1.0).unwrap();
        let m = st.compute_limit(&cfg).unwrap();
        assert_abs_diff_eq!(m, 31.0 + 13.67 + 10.0, epsilon = 0.01);
    }

    #[test]
    fn compute_limit_monotone_in_c() {
        // Over random warm states: increasing c strictly decreases M while
        // E is above the floor; once E hits e_min, M is constant in c.
        let mut rng = rand::rngs::StdRng::seed_from_u64(31);
        for _ in 0..50 {
            let base = cfg(0.01);
            let mut st = ControllerState::new(0.0);
            for _ in 0..rng.random_range(1..6usize) {
                st.on_gc(
                    &base,
                    rng.random_range(10.0..500.0),
                    rng.random_range(0.05..1.0),
                    rng.random_range(5.0..150.0),
                )
                .unwrap();
                st.on_heartbeat(&base, rng.random_range(1.0..300.0), 1.0)
                    .unwrap();
            }
            let mut prev = f64::INFINITY;
            let mut floored = false;
            for c_val in [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1e4, 1e6] {
                let m = st.compute_limit(&cfg(c_val)).unwrap();
                if floored {
                    assert_relative_eq!(m, prev);
                } else {
                    assert!(m < prev, "limit should shrink as c grows");
                }
                if m - st.l_star - base.m_nursery <= base.e_min + 1e-12 {
                    floored = true;
                }
                prev = m;
            }
            assert!(floored, "sweep should reach the e_min floor");
        }
    }

    #[test]
    fn compute_limit_strictly_above_live_with_floors() {
        let cfg = cfg(1000.0);
        let mut st = ControllerState::new(0.0);
        st.on_gc(&cfg, 1.0, 0.1, 0.0).unwrap();
        st.on_heartbeat(&cfg, 1.0, 1.0).unwrap();
        let m = st.compute_limit(&cfg).unwrap();
        assert!(m > st.l_star);
        assert_relative_eq!(m, 12.0);
    }

    #[test]
    fn compute_limit_zero_speed_stays_finite() {
        let cfg = cfg(0.01);
        let mut st = ControllerState::new(0.0);
        st.on_gc(&cfg, 0.0, 0.1, 10.0).unwrap();
        st.on_heartbeat(&cfg, 5.0, 1.0).unwrap();
        let m = st.compute_limit(&cfg).unwrap();
        assert!(m.is_finite());
        assert_relative_eq!(m, 10.0 + 2.0 + 10.0);
    }

    #[test]
    fn converged_controller_matches_model_sqrt_limit() {
        let c = TradeoffParam::new(0.05).unwrap();
        let cfg = ControllerConfig::new(c);
        let p = model::HeapParams::new(40.0, 120.0, 700.0).unwrap();
        let mut st = ControllerState::new(0.0);
        for _ in 0..600 {
            st.on_gc(&cfg, 70.0, 0.1, p.live).unwrap();
            st.on_heartbeat(&cfg, p.alloc_rate, 1.0).unwrap();
        }
        let m = st.compute_limit(&cfg).unwrap();
        let model_extra = model::sqrt_limit(&p, c) - p.live;
        assert!(model_extra > cfg.e_min);
        assert_relative_eq!(
            m - cfg.m_nursery - st.l_star,
            model_extra,
            max_relative = 1e-6
        );
    }

    #[test]
    fn scaling_g_and_s_together_leaves_limit_unchanged() {
        let cfg = cfg(0.02);
        let mut a = ControllerState::new(0.0);
        let mut b = ControllerState::new(0.0);
        for _ in 0..50 {
            a.on_gc(&cfg, 60.0, 0.2, 25.0).unwrap();
            a.on_heartbeat(&cfg, 40.0, 1.0).unwrap();
            b.on_gc(&cfg, 60.0 * 3.0, 0.2, 25.0).unwrap();
            b.on_heartbeat(&cfg, 40.0 * 3.0, 1.0).unwrap();
        }
        assert_relative_eq!(
            a.compute_limit(&cfg).unwrap(),
            b.compute_limit(&cfg).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn exact_rule_never_exceeds_plain() {
        let cfg = cfg(0.02);
        let mut st = ControllerState::new(0.0);
        st.on_gc(&cfg, 100.0, 0.25, 30.0).unwrap();
        st.on_heartbeat(&cfg, 80.0, 1.0).unwrap();
        let plain = st.compute_limit(&cfg).unwrap();
        let exact = st.compute_limit_exact(&cfg).unwrap();
        assert!(exact <= plain);
        // factor s/(s+g) on the extra term
        let s_rate = st.gc_speed_estimate();
        let g_rate = st.alloc_rate_estimate();
        let plain_extra = plain - st.l_star - cfg.m_nursery;
        let exact_extra = exact - st.l_star - cfg.m_nursery;
        assert_relative_eq!(
            exact_extra,
            plain_extra * s_rate / (s_rate + g_rate),
            max_relative = 1e-12
        );
    }

    #[test]
    fn ewma_stays_within_observed_bounds() {
        let cfg = cfg(0.01);
        let mut st = ControllerState::new(0.0);
        let samples = [3.0, 9.0, 1.0, 7.0, 2.5, 8.25, 0.5, 4.0];
        let mut lo = 0.0f64;
        let mut hi = 0.0f64;
        for &x in &samples {
            lo = lo.min(x);
            hi = hi.max(x);
            st.on_heartbeat(&cfg, x, 1.0).unwrap();
            assert!(st.g_m_star >= lo && st.g_m_star <= hi);
        }
    }

    mod ewma_props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            // Every starred field stays between the extremes of its observed
            // inputs and its zero initial value.
            #[test]
            fn starred_fields_bounded_by_observations(
                gcs in proptest::collection::vec((0.0f64..1000.0, 1e-3f64..10.0, 0.0f64..500.0), 1..40),
                beats in proptest::collection::vec((0.0f64..1000.0, 1e-3f64..10.0), 1..40),
            ) {
                let cfg = ControllerConfig::default();
                let mut st = ControllerState::new(0.0);
                let mut hi_sm = 0.0f64;
                for &(sm, st_dur, live) in &gcs {
                    hi_sm = hi_sm.max(sm);
                    st.on_gc(&cfg, sm, st_dur, live).unwrap();
                    prop_assert!(st.s_m_star >= 0.0 && st.s_m_star <= hi_sm);
                    prop_assert!(st.l_star == live);
                }
                let mut hi_gm = 0.0f64;
                for &(gm, gt) in &beats {
                    hi_gm = hi_gm.max(gm);
                    st.on_heartbeat(&cfg, gm, gt).unwrap();
                    prop_assert!(st.g_m_star >= 0.0 && st.g_m_star <= hi_gm);
                }
                // warm now; the published limit always clears the floors
                let m = st.compute_limit(&cfg).unwrap();
                prop_assert!(m >= st.l_star + cfg.e_min + cfg.m_nursery - 1e-12);
                prop_assert!(m.is_finite());
            }
        }
    }

    #[test]
    fn apply_rule_baselines() {
        let ctx = RuleContext {
            elapsed: 10.0,
            total_gc_time: 0.0,
        };
        let cfg = cfg(0.01);
        let mut st = ControllerState::new(0.0);
        st.on_gc(&cfg, 10.0, 0.1, 30.0).unwrap();

        let mut s = st;
        assert_eq!(
            HeapLimitRule::Proportional { alpha: 1.0 }
                .apply(&mut s, &ctx)
                .unwrap(),
            60.0
        );
        let mut s = st;
        s.l_star = 100.0;
        assert_eq!(
            HeapLimitRule::RacketSimplified { k: 2.0 }
                .apply(&mut s, &ctx)
                .unwrap(),
            120.0
        );
        let mut s = st;
        assert_eq!(
            HeapLimitRule::Fixed { limit: 20.0 }
                .apply(&mut s, &ctx)
                .unwrap(),
            20.0
        );
        assert_eq!(s.published_limit, 20.0);
    }

    #[test]
    fn apply_rule_not_warm_before_first_gc() {
        let ctx = RuleContext {
            elapsed: 0.0,
            total_gc_time: 0.0,
        };
        let mut st = ControllerState::new(50.0);
        assert_eq!(
            HeapLimitRule::Proportional { alpha: 1.0 }.apply(&mut st, &ctx),
            Err(ControllerError::NotWarm)
        );
        assert_eq!(st.published_limit, 50.0);
    }

    #[test]
    fn gc_time_target_adjusts_toward_setpoint() {
        let rule = HeapLimitRule::GcTimeTarget {
            rho: 0.03,
            adjust_gain: 0.1,
            cap_alpha: 3.0,
        };
        let cfg = cfg(0.01);
        let mut st = ControllerState::new(120.0);
        st.on_gc(&cfg, 10.0, 0.1, 30.0).unwrap();

        // Fraction above target: limit grows (more memory, fewer GCs).
        let grown = rule
            .apply(
                &mut st,
                &RuleContext {
                    elapsed: 10.0,
                    total_gc_time: 1.0,
                },
            )
            .unwrap();
        assert!(grown >= 120.0, "limit should not shrink when over target");
        // Fraction below target: limit shrinks.
        let before = st.published_limit;
        let shrunk = rule
            .apply(
                &mut st,
                &RuleContext {
                    elapsed: 100.0,
                    total_gc_time: 0.1,
                },
            )
            .unwrap();
        assert!(shrunk < before);
        // Never below the floor.
        for _ in 0..200 {
            rule.apply(
                &mut st,
                &RuleContext {
                    elapsed: 100.0,
                    total_gc_time: 0.0,
                },
            )
            .unwrap();
        }
        assert_relative_eq!(st.published_limit, 30.0 + DEFAULT_E_MIN);
        // Never above the cap.
        for _ in 0..200 {
            rule.apply(
                &mut st,
                &RuleContext {
                    elapsed: 100.0,
                    total_gc_time: 50.0,
                },
            )
            .unwrap();
        }
        assert_relative_eq!(st.published_limit, 4.0 * 30.0);
    }

    #[test]
    fn rule_dispatch_is_deterministic() {
        let cfg = cfg(0.05);
        let rule = HeapLimitRule::SquareRoot(cfg);
        let ctx = RuleContext {
            elapsed: 5.0,
            total_gc_time: 0.2,
        };
        let mut st = ControllerState::new(0.0);
        st.on_gc(&cfg, 30.0, 0.1, 20.0).unwrap();
        st.on_heartbeat(&cfg, 15.0, 1.0).unwrap();
        let mut a = st;
        let mut b = st;
        assert_eq!(
            rule.apply(&mut a, &ctx).unwrap(),
            rule.apply(&mut b, &ctx).unwrap()
        );
        assert_eq!(a, b);
    }

    #[test]
    fn initial_limits() {
        let cfg = cfg(0.01);
        assert_eq!(HeapLimitRule::SquareRoot(cfg).initial_limit(30.0), 42.0);
        assert_eq!(
            HeapLimitRule::Proportional { alpha: 1.0 }.initial_limit(30.0),
            60.0
        );
        assert_eq!(
            HeapLimitRule::RacketSimplified { k: 2.0 }.initial_limit(25.0),
            35.0
        );
        assert_eq!(
            HeapLimitRule::Fixed { limit: 20.0 }.initial_limit(30.0),
            20.0
        );
        let tt = HeapLimitRule::GcTimeTarget {
            rho: 0.03,
            adjust_gain: 0.1,
            cap_alpha: 3.0,
        };
        assert_eq!(tt.initial_limit(30.0), 120.0);
    }

    #[test]
    fn rule_validation() {
        assert!(HeapLimitRule::Proportional { alpha: 0.0 }
            .validate()
            .is_err());
        assert!(HeapLimitRule::Fixed { limit: -1.0 }.validate().is_err());
        assert!(HeapLimitRule::GcTimeTarget {
            rho: 1.5,
            adjust_gain: 0.1,
            cap_alpha: 3.0
        }
        .validate()
        .is_err());
        assert!(HeapLimitRule::RacketSimplified { k: 2.0 }
            .validate()
            .is_ok());
        let bad = ControllerConfig {
            alpha_g: 1.0,
            ..ControllerConfig::default()
        };
        assert!(HeapLimitRule::SquareRoot(bad).validate().is_err());
    }
}
