//! Deterministic discrete-event simulation of stop-the-world mark-compact
//! heaps.
//!
//! Each heap mutates at its workload phase's allocation rate until usage
//! reaches the heap's published limit, then pauses for a collection lasting
//! `live / gc_speed` seconds, after which usage drops to the live memory the
//! schedule prescribes. The controller sees exactly the measurement stream a
//! runtime would produce: an `on_gc` sample after every collection, a partial
//! allocation sample at every collection boundary, and heartbeat allocation
//! samples on a fixed wall-clock cadence (once per second of simulated time,
//! pauses included). Allocation-rate intervals count mutator time only:
//! in this fully stop-the-world model, counting pause time would dilute the
//! measured rate by the whole collection, which runtimes with concurrent
//! marking do not see, and a heavily collecting heap would be starved of the
//! very memory that relieves it. Limits are recomputed after every update;
//! if a recomputed limit falls at or below current usage, a collection is
//! triggered immediately.
//!
//! Time is continuous: events carry exact times and there is no integration
//! timestep, so closed-form cycle arithmetic can be compared against the
//! simulation without discretization error. Ties are broken by a fixed kind
//! priority (gc_end, phase_change, heartbeat, sample, gc_start, end) and then
//! by heap index, which makes runs bit-deterministic and independent of heap
//! insertion order.

use crate::controller::{
    ControllerConfig, ControllerError, ControllerState, HeapLimitRule, RuleContext,
};
use crate::workloads::{WorkloadError, WorkloadSpec};
use thiserror::Error;

pub use crate::workloads::live_memory_at;

/// Two event times closer than this are simultaneous.
pub const TIME_EPS: f64 = 1e-9;
/// Memory slack below the limit that still counts as "limit reached".
const MEM_EPS: f64 = 1e-9;

const MAX_SEGMENTS: usize = 100_000;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Rule(#[from] ControllerError),
}

/// What a log line records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogEvent {
    Gc,
    Heartbeat,
    Sample,
}

impl LogEvent {
    pub fn as_str(&self) -> &'static str {
        match self {
            LogEvent::Gc => "gc",
            LogEvent::Heartbeat => "heartbeat",
            LogEvent::Sample => "sample",
        }
    }
}

/// One line of the per-run log: written at every collection, heartbeat, and
/// usage sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub time_s: f64,
    pub heap_id: usize,
    pub event: LogEvent,
    pub live_mb: f64,
    /// Smoothed allocation-rate estimate at this point.
    pub g_mb_per_s: f64,
    /// Smoothed collection-speed estimate at this point.
    pub s_mb_per_s: f64,
    pub limit_mb: f64,
    pub usage_mb: f64,
    /// Collection pause, present on `gc` records only.
    pub gc_pause_s: Option<f64>,
}

/// Per-heap run totals.
#[derive(Debug, Clone, PartialEq)]
pub struct HeapMetrics {
    pub heap_id: usize,
    pub total_gc_time: f64,
    pub avg_usage: f64,
    pub gc_count: u64,
    pub allocated: f64,
    pub collected: f64,
    pub initial_usage: f64,
    pub final_usage: f64,
    /// Set when the heap could no longer fit its live memory under its limit
    /// and was frozen.
    pub oom_at: Option<f64>,
}

/// Whole-run totals plus per-heap breakdowns and the event log.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    /// Sum of completed collection pauses across heaps (s).
    pub total_gc_time: f64,
    /// Time-average of summed heap usage (MB). Usage is piecewise linear, so
    /// the per-second accounting integrates it exactly; instantaneous
    /// point-in-time values would alias against perfectly periodic GC cycles.
    pub avg_heap_usage: f64,
    pub gc_count: u64,
    pub per_heap: Vec<HeapMetrics>,
    pub log: Vec<LogRecord>,
}

impl RunMetrics {
    pub fn any_oom(&self) -> bool {
        self.per_heap.iter().any(|h| h.oom_at.is_some())
    }
}

// Event kind priorities; lower runs first at equal times.
const PRIO_GC_END: u8 = 0;
const PRIO_PHASE: u8 = 1;
const PRIO_HEARTBEAT: u8 = 2;
const PRIO_SAMPLE: u8 = 3;
const PRIO_GC_START: u8 = 4;
const PRIO_END: u8 = 5;

const GLOBAL: usize = usize::MAX;

#[derive(Debug, Clone, Copy)]
struct Segment {
    start: f64,
    end: f64,
    alloc_rate: f64,
    base_live: f64,
    leak_rate: f64,
    gc_speed: f64,
}

#[derive(Debug, Clone, Copy)]
struct GcInFlight {
    end: f64,
    duration: f64,
    usage_before: f64,
}

struct HeapRuntime {
    rule: HeapLimitRule,
    cfg: ControllerConfig,
    state: ControllerState,
    segments: Vec<Segment>,
    seg_idx: usize,
    usage: f64,
    in_gc: Option<GcInFlight>,
    oom_at: Option<f64>,
    frozen_live: f64,
    next_heartbeat: f64,
    mutator_since_g_sample: f64,
    bytes_since_g_sample: f64,
    allocated: f64,
    collected: f64,
    gc_time: f64,
    gc_count: u64,
    usage_integral: f64,
    initial_usage: f64,
}

impl HeapRuntime {
    fn build(spec: &WorkloadSpec, rule: HeapLimitRule, duration: f64) -> Result<Self, SimError> {
        spec.validate()?;
        rule.validate()?;
        let cfg = rule.controller_config();
        cfg.validate()?;
        let total = spec.total_duration();
        if total + TIME_EPS < duration {
            return Err(SimError::Config(format!(
                "workload covers {total} s but the run lasts {duration} s"
            )));
        }
        if spec.phases.len().saturating_mul(spec.repeat as usize) > MAX_SEGMENTS {
            return Err(SimError::Config(format!(
                "workload unrolls to more than {MAX_SEGMENTS} phase segments"
            )));
        }

        let mut segments = Vec::with_capacity(spec.phases.len() * spec.repeat as usize);
        let mut start = 0.0;
        for _ in 0..spec.repeat {
            for p in &spec.phases {
                segments.push(Segment {
                    start,
                    end: start + p.duration,
                    alloc_rate: p.alloc_rate,
                    base_live: p.base_live,
                    leak_rate: p.leak_rate,
                    gc_speed: p.gc_speed,
                });
                start += p.duration;
            }
        }

        let initial_live = segments[0].base_live;
        let state = ControllerState::new(rule.initial_limit(initial_live));
        Ok(Self {
            cfg,
            state,
            segments,
            rule,
            seg_idx: 0,
            usage: initial_live,
            in_gc: None,
            oom_at: None,
            frozen_live: initial_live,
            next_heartbeat: cfg.heartbeat_period,
            mutator_since_g_sample: 0.0,
            bytes_since_g_sample: 0.0,
            allocated: 0.0,
            collected: 0.0,
            gc_time: 0.0,
            gc_count: 0,
            usage_integral: 0.0,
            initial_usage: initial_live,
        })
    }

    fn segment(&self) -> &Segment {
        &self.segments[self.seg_idx]
    }

    /// Scheduled live memory at wall-clock `t`; frozen once the heap OOMs.
    fn live_at(&self, t: f64) -> f64 {
        if self.oom_at.is_some() {
            return self.frozen_live;
        }
        let seg = self.segment();
        let elapsed = (t - seg.start).clamp(0.0, seg.end - seg.start);
        seg.base_live + seg.leak_rate * elapsed
    }

    fn recompute_limit(&mut self, t: f64) -> Result<(), SimError> {
        let ctx = RuleContext {
            elapsed: t,
            total_gc_time: self.gc_time,
        };
        match self.rule.apply(&mut self.state, &ctx) {
            // Until the rule's inputs are measured, the initial limit stands.
            Ok(_) | Err(ControllerError::NotWarm) => Ok(()),
            Err(e) => Err(e.into()),
        }
    }

    /// Delivers any accumulated allocation as a rate sample over the mutator
    /// time it took, and resets the interval clock. Intervals spent entirely
    /// paused carry no rate information and are folded into the next sample.
    fn take_g_sample(&mut self) -> Result<(), SimError> {
        let interval = self.mutator_since_g_sample;
        if interval > TIME_EPS {
            self.state
                .on_heartbeat(&self.cfg, self.bytes_since_g_sample, interval)?;
            self.bytes_since_g_sample = 0.0;
            self.mutator_since_g_sample = 0.0;
        }
        Ok(())
    }

    fn record(&self, t: f64, heap_id: usize, event: LogEvent, pause: Option<f64>) -> LogRecord {
        LogRecord {
            time_s: t,
            heap_id,
            event,
            live_mb: self.live_at(t),
            g_mb_per_s: self.state.alloc_rate_estimate(),
            s_mb_per_s: self.state.gc_speed_estimate(),
            limit_mb: self.state.published_limit,
            usage_mb: self.usage,
            gc_pause_s: pause,
        }
    }
}

/// Runs every heap for `duration` seconds of simulated wall-clock, sampling
/// usage every `sample_period` seconds. Identical inputs give bit-identical
/// metrics.
pub fn run(
    heaps: &[(WorkloadSpec, HeapLimitRule)],
    duration: f64,
    sample_period: f64,
) -> Result<RunMetrics, SimError> {
    if heaps.is_empty() {
        return Err(SimError::Config("at least one heap is required".into()));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(SimError::Config(format!(
            "duration must be positive, got {duration}"
        )));
    }
    if !(sample_period.is_finite() && sample_period > 0.0) {
        return Err(SimError::Config(format!(
            "sample period must be positive, got {sample_period}"
        )));
    }

    let mut hs: Vec<HeapRuntime> = heaps
        .iter()
        .map(|(spec, rule)| HeapRuntime::build(spec, rule.clone(), duration))
        .collect::<Result<_, _>>()?;

    let mut t = 0.0f64;
    let mut next_sample = sample_period;
    let mut log: Vec<LogRecord> = Vec::new();

    loop {
        // Earliest pending event; ties resolved by (kind priority, heap).
        let mut best: Option<(f64, u8, usize)> = None;
        let mut consider = |cand: (f64, u8, usize)| {
            if !cand.0.is_finite() {
                return;
            }
            match best {
                None => best = Some(cand),
                Some(cur) => {
                    if cand.0 < cur.0 - TIME_EPS {
                        best = Some(cand);
                    } else if cand.0 <= cur.0 + TIME_EPS && (cand.1, cand.2) < (cur.1, cur.2) {
                        best = Some((cur.0.min(cand.0), cand.1, cand.2));
                    }
                }
            }
        };

        for (i, h) in hs.iter().enumerate() {
            if h.oom_at.is_some() {
                continue;
            }
            if let Some(fly) = &h.in_gc {
                consider((fly.end, PRIO_GC_END, i));
            } else {
                let limit = h.state.published_limit;
                let g = h.segment().alloc_rate;
                if h.usage >= limit - MEM_EPS {
                    consider((t, PRIO_GC_START, i));
                } else if g > 0.0 {
                    consider((t + (limit - h.usage) / g, PRIO_GC_START, i));
                }
            }
            if h.seg_idx + 1 < h.segments.len() {
                consider((h.segment().end, PRIO_PHASE, i));
            }
            consider((h.next_heartbeat, PRIO_HEARTBEAT, i));
        }
        consider((next_sample, PRIO_SAMPLE, GLOBAL));
        consider((duration, PRIO_END, GLOBAL));

        let (ev_t, prio, idx) = best.expect("the end event is always pending");

        // Advance all mutating heaps to the event time. Usage is linear in
        // time between events, so the trapezoid accumulates its exact
        // integral.
        let dt = (ev_t - t).max(0.0);
        if dt > 0.0 {
            for h in hs.iter_mut() {
                if h.in_gc.is_none() && h.oom_at.is_none() {
                    h.mutator_since_g_sample += dt;
                    let g = h.segment().alloc_rate;
                    if g > 0.0 {
                        let grown = g * dt;
                        h.usage_integral += dt * (h.usage + grown / 2.0);
                        h.usage += grown;
                        h.allocated += grown;
                        h.bytes_since_g_sample += grown;
                    } else {
                        h.usage_integral += dt * h.usage;
                    }
                } else {
                    h.usage_integral += dt * h.usage;
                }
            }
        }
        t = t.max(ev_t);

        match prio {
            PRIO_GC_END => {
                let h = &mut hs[idx];
                let fly = h.in_gc.take().expect("gc_end only fires while collecting");
                // Collections are complete: live memory after the pause comes
                // from the schedule, capped by what was actually in the heap.
                let live_after = h.live_at(t).min(fly.usage_before);
                let collected = (fly.usage_before - live_after).max(0.0);
                h.usage = live_after;
                h.collected += collected;
                h.gc_time += fly.duration;
                h.gc_count += 1;
                if fly.duration > 0.0 {
                    h.state.on_gc(&h.cfg, collected, fly.duration, live_after)?;
                }
                h.take_g_sample()?;
                h.recompute_limit(t)?;
                if h.state.published_limit <= h.usage + MEM_EPS {
                    h.oom_at = Some(t);
                    h.frozen_live = live_after;
                }
                log.push(h.record(t, idx, LogEvent::Gc, Some(fly.duration)));
            }
            PRIO_PHASE => {
                hs[idx].seg_idx += 1;
            }
            PRIO_HEARTBEAT => {
                let h = &mut hs[idx];
                h.take_g_sample()?;
                h.recompute_limit(t)?;
                h.next_heartbeat += h.cfg.heartbeat_period;
                log.push(h.record(t, idx, LogEvent::Heartbeat, None));
            }
            PRIO_SAMPLE => {
                for (i, h) in hs.iter().enumerate() {
                    log.push(h.record(t, i, LogEvent::Sample, None));
                }
                next_sample += sample_period;
            }
            PRIO_GC_START => {
                let h = &mut hs[idx];
                let live_now = h.live_at(t);
                let dur = live_now / h.segment().gc_speed;
                h.in_gc = Some(GcInFlight {
                    end: t + dur,
                    duration: dur,
                    usage_before: h.usage,
                });
            }
            PRIO_END => break,
            _ => unreachable!(),
        }
    }

    let per_heap: Vec<HeapMetrics> = hs
        .iter()
        .enumerate()
        .map(|(i, h)| HeapMetrics {
            heap_id: i,
            total_gc_time: h.gc_time,
            avg_usage: h.usage_integral / duration,
            gc_count: h.gc_count,
            allocated: h.allocated,
            collected: h.collected,
            initial_usage: h.initial_usage,
            final_usage: h.usage,
            oom_at: h.oom_at,
        })
        .collect();

    Ok(RunMetrics {
        total_gc_time: per_heap.iter().map(|h| h.total_gc_time).sum(),
        avg_heap_usage: per_heap.iter().map(|h| h.avg_usage).sum(),
        gc_count: per_heap.iter().map(|h| h.gc_count).sum(),
        per_heap,
        log,
    })
}
