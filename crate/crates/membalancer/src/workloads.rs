//! Workload specifications, named presets, and a seeded random generator.
//!
//! A workload describes one heap's mutator as an ordered list of phases.
//! Within a phase the allocation rate, collection speed, and live-memory
//! trajectory (a base value plus a linear leak) are constant, so every
//! simulator quantity has a closed form and oracle arithmetic stays exact.
//! Variability is expressed by adding phases, not by stochastic noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WorkloadError {
    #[error("unknown preset '{name}'; available: {available}")]
    UnknownPreset { name: String, available: String },
    #[error("invalid parameter bounds: {0}")]
    InvalidBounds(String),
    #[error("invalid workload: {0}")]
    InvalidSpec(String),
    #[error("time {t} s is outside the workload's schedule of {total} s")]
    TimeOutOfRange { t: f64, total: f64 },
}

/// One segment of mutator behavior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    /// Phase length in seconds of simulated wall-clock.
    #[serde(rename = "duration_s")]
    pub duration: f64,
    /// Allocation rate in MB/s.
    #[serde(rename = "alloc_rate_mb_per_s")]
    pub alloc_rate: f64,
    /// Live memory at the start of the phase, MB.
    #[serde(rename = "base_live_mb")]
    pub base_live: f64,
    /// Linear live-memory growth within the phase, MB/s.
    #[serde(rename = "leak_rate_mb_per_s", default)]
    pub leak_rate: f64,
    /// Collection speed in MB/s.
    #[serde(rename = "gc_speed_mb_per_s")]
    pub gc_speed: f64,
}

impl Phase {
    /// Live memory at the end of the phase.
    pub fn end_live(&self) -> f64 {
        self.base_live + self.leak_rate * self.duration
    }

    pub fn constant(duration: f64, alloc_rate: f64, live: f64, gc_speed: f64) -> Self {
        Self {
            duration,
            alloc_rate,
            base_live: live,
            leak_rate: 0.0,
            gc_speed,
        }
    }
}

/// A heap's mutator behavior over simulated time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub phases: Vec<Phase>,
    /// How many times the phase list plays back to back.
    #[serde(default = "default_repeat")]
    pub repeat: u32,
}

fn default_repeat() -> u32 {
    1
}

impl WorkloadSpec {
    pub fn new(phases: Vec<Phase>) -> Self {
        Self { phases, repeat: 1 }
    }

    /// Checks every phase invariant plus cross-phase consistency.
    ///
    /// Live memory may only appear through allocation, so within a phase the
    /// leak rate may not exceed the allocation rate, and at a phase boundary
    /// live memory may drop (objects dying) but not jump up.
    pub fn validate(&self) -> Result<(), WorkloadError> {
        if self.phases.is_empty() {
            return Err(WorkloadError::InvalidSpec("workload has no phases".into()));
        }
        if self.repeat == 0 {
            return Err(WorkloadError::InvalidSpec(
                "repeat count must be at least 1".into(),
            ));
        }
        for (i, p) in self.phases.iter().enumerate() {
            if !(p.duration.is_finite() && p.duration > 0.0) {
                return Err(WorkloadError::InvalidSpec(format!(
                    "phase {i}: duration must be positive, got {}",
                    p.duration
                )));
            }
            if !(p.alloc_rate.is_finite() && p.alloc_rate >= 0.0) {
                return Err(WorkloadError::InvalidSpec(format!(
                    "phase {i}: alloc_rate must be nonnegative, got {}",
                    p.alloc_rate
                )));
            }
            if !(p.leak_rate.is_finite() && p.leak_rate >= 0.0) {
                return Err(WorkloadError::InvalidSpec(format!(
                    "phase {i}: leak_rate must be nonnegative, got {}",
                    p.leak_rate
                )));
            }
            if p.leak_rate > p.alloc_rate {
                return Err(WorkloadError::InvalidSpec(format!(
                    "phase {i}: leak_rate {} exceeds alloc_rate {}",
                    p.leak_rate, p.alloc_rate
                )));
            }
            if !(p.base_live.is_finite() && p.base_live >= 0.0) {
                return Err(WorkloadError::InvalidSpec(format!(
                    "phase {i}: base_live must be nonnegative, got {}",
                    p.base_live
                )));
            }
            if !(p.gc_speed.is_finite() && p.gc_speed > 0.0) {
                return Err(WorkloadError::InvalidSpec(format!(
                    "phase {i}: gc_speed must be positive, got {}",
                    p.gc_speed
                )));
            }
        }
        for (i, pair) in self.phases.windows(2).enumerate() {
            if pair[1].base_live > pair[0].end_live() + 1e-9 {
                return Err(WorkloadError::InvalidSpec(format!(
                    "phase {} starts with more live memory ({} MB) than phase {} ends with ({} MB)",
                    i + 1,
                    pair[1].base_live,
                    i,
                    pair[0].end_live()
                )));
            }
        }
        if self.repeat > 1
            && self.phases[0].base_live > self.phases.last().unwrap().end_live() + 1e-9
        {
            return Err(WorkloadError::InvalidSpec(
                "repeat wraps around to a higher live memory".into(),
            ));
        }
        Ok(())
    }

    /// Duration of one playback of the phase list.
    pub fn cycle_duration(&self) -> f64 {
        self.phases.iter().map(|p| p.duration).sum()
    }

    /// Total scheduled duration including repeats.
    pub fn total_duration(&self) -> f64 {
        self.cycle_duration() * self.repeat as f64
    }

    /// Piecewise-linear live memory at time `t` of the schedule.
    pub fn live_memory_at(&self, t: f64) -> Result<f64, WorkloadError> {
        let total = self.total_duration();
        if !(t >= 0.0 && t <= total) {
            return Err(WorkloadError::TimeOutOfRange { t, total });
        }
        let cycle = self.cycle_duration();
        let mut local = t % cycle;
        // t == total lands on the end of the last phase, not the start of a
        // phantom repeat.
        if local == 0.0 && t > 0.0 {
            local = cycle;
        }
        let mut start = 0.0;
        for p in &self.phases {
            if local <= start + p.duration {
                return Ok(p.base_live + p.leak_rate * (local - start));
            }
            start += p.duration;
        }
        Ok(self.phases.last().expect("validated nonempty").end_live())
    }
}

/// Live memory of `spec` at time `t`; errors outside the schedule.
pub fn live_memory_at(spec: &WorkloadSpec, t: f64) -> Result<f64, WorkloadError> {
    spec.live_memory_at(t)
}

/// How long every preset except `idle-burst` is scheduled for, seconds.
pub const PRESET_DURATION: f64 = 3600.0;

/// Live-memory ramp rate of the leaking preset heap, MB/s.
pub const LEAK_RAMP_RATE: f64 = 1.0;

const PRESET_NAMES: &str = "case-study-trio, fig1-pair, idle-burst, quad-mix, homogeneous-<N>";

/// Returns the named preset's workloads, one per heap.
///
/// * `case-study-trio` — three heaps: a fast allocator that also collects
///   fast (L=31, g=633, s=525), a moderate one (L=30, g=57, s=440), and a
///   leaking one that ramps from 60 MB to a 96 MB plateau (g=34, s=383).
/// * `fig1-pair` — two heaps with strongly different allocation rates and
///   collection speeds, for Pareto-frontier comparisons.
/// * `idle-burst` — one heap alternating 30 s of activity with 60 s of
///   idleness, twice (180 s total).
/// * `quad-mix` — four heterogeneous heaps crossing small/large live sizes
///   with slow/fast allocation.
/// * `homogeneous-<N>` — N identical constant-rate heaps.
pub fn preset(name: &str) -> Result<Vec<WorkloadSpec>, WorkloadError> {
    let unknown = || WorkloadError::UnknownPreset {
        name: name.to_string(),
        available: PRESET_NAMES.to_string(),
    };
    let specs = match name {
        "case-study-trio" => vec![
            WorkloadSpec::new(vec![Phase::constant(PRESET_DURATION, 633.0, 31.0, 525.0)]),
            WorkloadSpec::new(vec![Phase::constant(PRESET_DURATION, 57.0, 30.0, 440.0)]),
            {
                let ramp = (96.0 - 60.0) / LEAK_RAMP_RATE;
                WorkloadSpec::new(vec![
                    Phase {
                        duration: ramp,
                        alloc_rate: 34.0,
                        base_live: 60.0,
                        leak_rate: LEAK_RAMP_RATE,
                        gc_speed: 383.0,
                    },
                    Phase::constant(PRESET_DURATION - ramp, 34.0, 96.0, 383.0),
                ])
            },
        ],
        "fig1-pair" => vec![
            WorkloadSpec::new(vec![Phase::constant(PRESET_DURATION, 800.0, 40.0, 400.0)]),
            WorkloadSpec::new(vec![Phase::constant(PRESET_DURATION, 30.0, 120.0, 600.0)]),
        ],
        // The active rate is low enough that only the warmup collection
        // fires before the first idle transition, which pins the garbage
        // carried into the idle window to a known value.
        "idle-burst" => vec![WorkloadSpec::new(vec![
            Phase::constant(30.0, 0.9, 32.0, 500.0),
            Phase::constant(60.0, 0.0, 32.0, 500.0),
            Phase::constant(30.0, 0.9, 32.0, 500.0),
            Phase::constant(60.0, 0.0, 32.0, 500.0),
        ])],
        "quad-mix" => vec![
            WorkloadSpec::new(vec![Phase::constant(PRESET_DURATION, 20.0, 8.0, 400.0)]),
            WorkloadSpec::new(vec![Phase::constant(PRESET_DURATION, 300.0, 8.0, 400.0)]),
            WorkloadSpec::new(vec![Phase::constant(PRESET_DURATION, 60.0, 64.0, 450.0)]),
            WorkloadSpec::new(vec![Phase::constant(PRESET_DURATION, 250.0, 64.0, 500.0)]),
        ],
        _ => {
            let n: usize = name
                .strip_prefix("homogeneous-")
                .ok_or_else(unknown)?
                .parse()
                .map_err(|_| unknown())?;
            if n == 0 {
                return Err(unknown());
            }
            vec![WorkloadSpec::new(vec![Phase::constant(PRESET_DURATION, 100.0, 20.0, 500.0)]); n]
        }
    };
    for s in &specs {
        s.validate().expect("presets satisfy their own invariants");
    }
    Ok(specs)
}

/// Bounds for [`random_workload`]. Each pair is an inclusive-exclusive
/// `(min, max)` range except where `min == max`, which pins the value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRanges {
    pub live: (f64, f64),
    pub alloc_rate: (f64, f64),
    pub gc_speed: (f64, f64),
    pub duration: (f64, f64),
    /// Fraction of the allocation rate that leaks, sampled per phase.
    pub leak_fraction: (f64, f64),
    pub phases: (usize, usize),
}

impl Default for ParamRanges {
    fn default() -> Self {
        Self {
            live: (1.0, 100.0),
            alloc_rate: (1.0, 1000.0),
            gc_speed: (100.0, 1000.0),
            duration: (60.0, 600.0),
            leak_fraction: (0.0, 0.0),
            phases: (1, 1),
        }
    }
}

impl ParamRanges {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        let check = |name: &str, (lo, hi): (f64, f64)| {
            if lo.is_finite() && hi.is_finite() && lo <= hi && lo >= 0.0 {
                Ok(())
            } else {
                Err(WorkloadError::InvalidBounds(format!(
                    "{name}: ({lo}, {hi})"
                )))
            }
        };
        check("live", self.live)?;
        check("alloc_rate", self.alloc_rate)?;
        check("gc_speed", self.gc_speed)?;
        check("duration", self.duration)?;
        check("leak_fraction", self.leak_fraction)?;
        if self.gc_speed.0 <= 0.0 {
            return Err(WorkloadError::InvalidBounds(
                "gc_speed lower bound must be positive".into(),
            ));
        }
        if self.duration.0 <= 0.0 {
            return Err(WorkloadError::InvalidBounds(
                "duration lower bound must be positive".into(),
            ));
        }
        if self.leak_fraction.1 > 1.0 {
            return Err(WorkloadError::InvalidBounds(
                "leak_fraction exceeds 1".into(),
            ));
        }
        if self.phases.0 < 1 || self.phases.0 > self.phases.1 {
            return Err(WorkloadError::InvalidBounds(format!(
                "phases: {:?}",
                self.phases
            )));
        }
        Ok(())
    }

    fn sample(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
        if lo == hi {
            lo
        } else {
            rng.random_range(lo..hi)
        }
    }

    /// One draw of instantaneous heap parameters, for oracle-style tests.
    pub fn sample_params(&self, rng: &mut ChaCha8Rng) -> crate::model::HeapParams {
        crate::model::HeapParams::new(
            Self::sample(rng, self.live),
            Self::sample(rng, self.alloc_rate),
            Self::sample(rng, self.gc_speed),
        )
        .expect("bounds validated")
    }
}

/// Deterministic random workload: the same seed and bounds always produce
/// the same spec, and every field lands inside its bounds.
pub fn random_workload(seed: u64, ranges: &ParamRanges) -> Result<WorkloadSpec, WorkloadError> {
    ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_phases = if ranges.phases.0 == ranges.phases.1 {
        ranges.phases.0
    } else {
        rng.random_range(ranges.phases.0..=ranges.phases.1)
    };
    let mut phases = Vec::with_capacity(n_phases);
    let mut live = ParamRanges::sample(&mut rng, ranges.live);
    for _ in 0..n_phases {
        let alloc_rate = ParamRanges::sample(&mut rng, ranges.alloc_rate);
        let leak_rate = alloc_rate * ParamRanges::sample(&mut rng, ranges.leak_fraction);
        let phase = Phase {
            duration: ParamRanges::sample(&mut rng, ranges.duration),
            alloc_rate,
            base_live: live,
            leak_rate,
            gc_speed: ParamRanges::sample(&mut rng, ranges.gc_speed),
        };
        live = phase.end_live();
        phases.push(phase);
    }
    let spec = WorkloadSpec::new(phases);
    spec.validate()?;
    Ok(spec)
}
