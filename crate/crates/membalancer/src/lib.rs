//! Compositional heap limits for garbage-collected runtimes.
//!
//! When several garbage-collected heaps share a machine, each heap's limit
//! rule implicitly decides how a common pool of memory is divided. Most
//! rules of thumb (a fixed multiple of live size, a GC-time percentage
//! target) divide it badly: no tuning of their parameters reaches the best
//! achievable trade-off between total memory and total collection time. The
//! square-root rule
//!
//! ```text
//! M = L + sqrt(L * g / (c * s))
//! ```
//!
//! equalizes the marginal value of memory across heaps using only quantities
//! each heap can measure about itself, so independently tuned heaps reach a
//! Pareto-optimal split with no communication.
//!
//! The crate has three layers:
//!
//! * [`model`] — the closed-form theory: cycle GC ratio, its derivative, the
//!   square-root rule and its exact variant, the optimal multi-heap split,
//!   and a brute-force oracle that verifies optimality by grid search.
//! * [`controller`] — the online algorithm: EWMA-smoothed measurements from
//!   collection and heartbeat events, warmup handling, floors, and the
//!   baseline rules (proportional, GC-time target, `L + k*sqrt(L)`, fixed).
//! * [`simulator`] / [`workloads`] / [`metrics`] — a deterministic
//!   discrete-event simulation of stop-the-world heaps driven by workload
//!   presets, plus Pareto-frontier and trade-off-fit analysis of parameter
//!   sweeps.
//!
//! The `examples/` directory demonstrates each capability end to end; the
//! `membalancer` binary wraps the same code behind `simulate`, `sweep`,
//! `oracle`, and `plot` subcommands (see [`cli`]).

pub mod cli;
pub mod controller;
pub mod metrics;
pub mod model;
pub mod simulator;
pub mod workloads;

pub use controller::{ControllerConfig, ControllerState, HeapLimitRule, RuleContext};
pub use metrics::{dominates, fit_tradeoff, pareto_frontier, SweepPoint, TradeoffFit};
pub use model::{
    brute_force_allocation, closed_form_allocation, exact_sqrt_limit, gc_ratio,
    implied_c_of_proportional, proportional_limit, ratio_derivative, sqrt_limit, weighted_c,
    Allocation, HeapParams, TradeoffParam,
};
pub use simulator::{run, HeapMetrics, LogEvent, LogRecord, RunMetrics};
pub use workloads::{live_memory_at, preset, random_workload, ParamRanges, Phase, WorkloadSpec};
