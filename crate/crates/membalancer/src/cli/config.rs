//! Experiment configuration: a single self-describing JSON document.
//!
//! `c` is expressed in %/MB at every external boundary (config file, the
//! `MEMBALANCER_C` environment variable, CLI flags, CSV output) and converted
//! to a fraction per MB internally. Heap weights scale the effective `c` of
//! square-root rules (`c / weight`); baseline rules have no memory/time
//! exchange knob, so weight does not apply to them.

use crate::controller::{ControllerConfig, HeapLimitRule, DEFAULT_ADJUST_GAIN, DEFAULT_CAP_ALPHA};
use crate::model::{weighted_c, ModelError, TradeoffParam};
use crate::workloads::{preset, WorkloadError, WorkloadSpec};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
}

impl From<ModelError> for ConfigError {
    fn from(e: ModelError) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

fn default_sample_period() -> f64 {
    1.0
}

fn default_weight() -> f64 {
    1.0
}

fn default_adjust_gain() -> f64 {
    DEFAULT_ADJUST_GAIN
}

fn default_cap_alpha() -> f64 {
    DEFAULT_CAP_ALPHA
}

/// Top-level experiment description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub duration_s: f64,
    #[serde(default = "default_sample_period")]
    pub sample_period_s: f64,
    #[serde(default)]
    pub seed: u64,
    pub heaps: Vec<HeapEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    /// Optional reference rule run once per sweep to normalize results
    /// so the baseline sits at (1, 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<RuleConfig>,
    #[serde(default)]
    pub controller: ControllerOverrides,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// One config entry; a preset naming several workloads expands into that many
/// heaps, all using this entry's rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeapEntry {
    pub workload: WorkloadRef,
    pub rule: RuleConfig,
    #[serde(default = "default_weight")]
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WorkloadRef {
    Preset(String),
    Inline(WorkloadSpec),
}

/// Heap-limit rule selection. `c` values are in %/MB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RuleConfig {
    SquareRoot {
        c: f64,
    },
    ExactSquareRoot {
        c: f64,
    },
    Proportional {
        alpha: f64,
    },
    GcTimeTarget {
        rho: f64,
        #[serde(default = "default_adjust_gain")]
        adjust_gain: f64,
        #[serde(default = "default_cap_alpha")]
        cap_alpha: f64,
    },
    RacketSimplified {
        k: f64,
    },
    Fixed {
        limit_mb: f64,
    },
}

impl RuleConfig {
    /// Rule from a bare name, for the `--rule` flag. Square-root rules take
    /// their `c` from `c_percent`; `proportional` defaults to alpha = 1 and
    /// `racket-simplified` to k = 1.
    pub fn from_name(name: &str, c_percent: Option<f64>) -> Result<Self, ConfigError> {
        let need_c = || {
            c_percent.ok_or_else(|| {
                ConfigError::Invalid(format!(
                    "rule '{name}' needs a c value; pass --c or set MEMBALANCER_C"
                ))
            })
        };
        Ok(match name {
            "square-root" => RuleConfig::SquareRoot { c: need_c()? },
            "exact-square-root" => RuleConfig::ExactSquareRoot { c: need_c()? },
            "proportional" => RuleConfig::Proportional { alpha: 1.0 },
            "gc-time-target" => RuleConfig::GcTimeTarget {
                rho: 0.03,
                adjust_gain: DEFAULT_ADJUST_GAIN,
                cap_alpha: DEFAULT_CAP_ALPHA,
            },
            "racket-simplified" => RuleConfig::RacketSimplified { k: 1.0 },
            _ => {
                return Err(ConfigError::Invalid(format!(
                    "unknown rule '{name}'; available: square-root, exact-square-root, \
                     proportional, gc-time-target, racket-simplified, fixed"
                )))
            }
        })
    }

    pub fn takes_c(&self) -> bool {
        matches!(
            self,
            RuleConfig::SquareRoot { .. } | RuleConfig::ExactSquareRoot { .. }
        )
    }

    pub fn takes_alpha(&self) -> bool {
        matches!(self, RuleConfig::Proportional { .. })
    }

    /// Builds the runtime rule, applying the `c` override (already in %/MB),
    /// the heap weight, and controller overrides.
    pub fn build(
        &self,
        c_override_percent: Option<f64>,
        weight: f64,
        ctl: &ControllerOverrides,
    ) -> Result<HeapLimitRule, ConfigError> {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "weight must be positive, got {weight}"
            )));
        }
        let sqrt_cfg = |c_pct: f64| -> Result<ControllerConfig, ConfigError> {
            let effective = c_override_percent.unwrap_or(c_pct);
            let base = TradeoffParam::from_percent_per_mb(effective)?;
            let mut cfg = ControllerConfig::new(weighted_c(base, weight)?);
            ctl.apply(&mut cfg);
            Ok(cfg)
        };
        let rule = match self {
            RuleConfig::SquareRoot { c } => HeapLimitRule::SquareRoot(sqrt_cfg(*c)?),
            RuleConfig::ExactSquareRoot { c } => HeapLimitRule::ExactSquareRoot(sqrt_cfg(*c)?),
            RuleConfig::Proportional { alpha } => HeapLimitRule::Proportional { alpha: *alpha },
            RuleConfig::GcTimeTarget {
                rho,
                adjust_gain,
                cap_alpha,
            } => HeapLimitRule::GcTimeTarget {
                rho: *rho,
                adjust_gain: *adjust_gain,
                cap_alpha: *cap_alpha,
            },
            RuleConfig::RacketSimplified { k } => HeapLimitRule::RacketSimplified { k: *k },
            RuleConfig::Fixed { limit_mb } => HeapLimitRule::Fixed { limit: *limit_mb },
        };
        rule.validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(rule)
    }

    fn with_sweep_value(&self, parameter: SweepParameter, value: f64) -> Self {
        match (parameter, self.clone()) {
            (SweepParameter::C, RuleConfig::SquareRoot { .. }) => {
                RuleConfig::SquareRoot { c: value }
            }
            (SweepParameter::C, RuleConfig::ExactSquareRoot { .. }) => {
                RuleConfig::ExactSquareRoot { c: value }
            }
            (SweepParameter::Alpha, RuleConfig::Proportional { .. }) => {
                RuleConfig::Proportional { alpha: value }
            }
            (_, other) => other,
        }
    }
}

/// Optional overrides for the square-root controller constants.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_min_mb: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_nursery_mb: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heartbeat_period_s: Option<f64>,
}

impl ControllerOverrides {
    pub fn apply(&self, cfg: &mut ControllerConfig) {
        if let Some(v) = self.alpha_g {
            cfg.alpha_g = v;
        }
        if let Some(v) = self.alpha_s {
            cfg.alpha_s = v;
        }
        if let Some(v) = self.e_min_mb {
            cfg.e_min = v;
        }
        if let Some(v) = self.m_nursery_mb {
            cfg.m_nursery = v;
        }
        if let Some(v) = self.heartbeat_period_s {
            cfg.heartbeat_period = v;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    C,
    Alpha,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

/// Command-line/environment overrides layered over the config file.
/// Precedence for `c`: `MEMBALANCER_C` env, then `--c`, then the config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub c_percent: Option<f64>,
    pub rule: Option<String>,
    pub duration: Option<f64>,
    pub seed: Option<u64>,
}

/// A fully resolved experiment ready to hand to the simulator.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub heaps: Vec<(WorkloadSpec, HeapLimitRule)>,
    pub duration: f64,
    pub sample_period: f64,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "duration_s must be positive, got {}",
                self.duration_s
            )));
        }
        if !(self.sample_period_s.is_finite() && self.sample_period_s > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "sample_period_s must be positive, got {}",
                self.sample_period_s
            )));
        }
        if self.heaps.is_empty() {
            return Err(ConfigError::Invalid("config lists no heaps".into()));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(ConfigError::Invalid("sweep.values is empty".into()));
            }
            if sweep.values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(ConfigError::Invalid("sweep values must be positive".into()));
            }
            let takes = |r: &RuleConfig| match sweep.parameter {
                SweepParameter::C => r.takes_c(),
                SweepParameter::Alpha => r.takes_alpha(),
            };
            if !self.heaps.iter().any(|h| takes(&h.rule)) {
                return Err(ConfigError::Invalid(
                    "no heap rule takes the swept parameter".into(),
                ));
            }
        }
        Ok(())
    }

    /// Resolves the config into simulator inputs, with no sweep value applied.
    pub fn build(&self, ov: &Overrides) -> Result<Experiment, ConfigError> {
        self.build_inner(ov, None)
    }

    /// Resolves the config with the swept parameter forced to `value`.
    /// For the swept parameter the sweep value wins over every override.
    pub fn build_for_sweep_value(
        &self,
        ov: &Overrides,
        value: f64,
    ) -> Result<Experiment, ConfigError> {
        let sweep = self
            .sweep
            .as_ref()
            .ok_or_else(|| ConfigError::Invalid("config has no sweep section".into()))?;
        self.build_inner(ov, Some((sweep.parameter, value)))
    }

    /// Same heaps but with every rule replaced by `rule` (baseline runs).
    pub fn build_with_rule(
        &self,
        ov: &Overrides,
        rule: &RuleConfig,
    ) -> Result<Experiment, ConfigError> {
        let mut cfg = self.clone();
        for h in &mut cfg.heaps {
            h.rule = rule.clone();
        }
        // The baseline is one fixed reference run: the sweep section does not
        // apply to it, and neither sweep values nor the c override move it.
        cfg.sweep = None;
        let base_ov = Overrides {
            c_percent: None,
            rule: None,
            duration: ov.duration,
            seed: ov.seed,
        };
        cfg.build_inner(&base_ov, None)
    }

    fn build_inner(
        &self,
        ov: &Overrides,
        sweep_value: Option<(SweepParameter, f64)>,
    ) -> Result<Experiment, ConfigError> {
        self.validate()?;
        let mut heaps = Vec::new();
        for entry in &self.heaps {
            let specs: Vec<WorkloadSpec> = match &entry.workload {
                WorkloadRef::Preset(name) => preset(name)?,
                WorkloadRef::Inline(spec) => {
                    spec.validate()?;
                    vec![spec.clone()]
                }
            };
            let mut rule_cfg = match &ov.rule {
                Some(name) => RuleConfig::from_name(name, ov.c_percent)?,
                None => entry.rule.clone(),
            };
            let mut c_override = ov.c_percent;
            if let Some((parameter, value)) = sweep_value {
                rule_cfg = rule_cfg.with_sweep_value(parameter, value);
                if parameter == SweepParameter::C && rule_cfg.takes_c() {
                    c_override = None;
                }
            }
            let rule = rule_cfg.build(c_override, entry.weight, &self.controller)?;
            for spec in specs {
                heaps.push((spec, rule.clone()));
            }
        }
        Ok(Experiment {
            heaps,
            duration: ov.duration.unwrap_or(self.duration_s),
            sample_period: self.sample_period_s,
            seed: ov.seed.unwrap_or(self.seed),
        })
    }
}

/// Standalone input for the allocation oracle command.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub heaps: Vec<OracleHeap>,
    pub total_memory_mb: f64,
    #[serde(default = "default_grid_step")]
    pub grid_step_mb: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleHeap {
    pub live_mb: f64,
    pub alloc_rate_mb_per_s: f64,
    pub gc_speed_mb_per_s: f64,
}

fn default_grid_step() -> f64 {
    0.01
}

impl OracleConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::HeapLimitRule;

    fn minimal_config(rule: &str) -> String {
        format!(
            r#"{{
                "duration_s": 30.0,
                "heaps": [
                    {{ "workload": "homogeneous-2", "rule": {rule} }}
                ]
            }}"#
        )
    }

    #[test]
    fn parse_and_build_square_root() {
        let cfg: ExperimentConfig =
            serde_json::from_str(&minimal_config(r#"{ "name": "square-root", "c": 20.0 }"#))
                .unwrap();
        let exp = cfg.build(&Overrides::default()).unwrap();
        assert_eq!(exp.heaps.len(), 2);
        match &exp.heaps[0].1 {
            HeapLimitRule::SquareRoot(c) => {
                assert!((c.c.as_percent_per_mb() - 20.0).abs() < 1e-12);
            }
            other => panic!("unexpected rule {other:?}"),
        }
        assert_eq!(exp.duration, 30.0);
        assert_eq!(exp.sample_period, 1.0);
    }

    #[test]
    fn c_override_beats_config() {
        let cfg: ExperimentConfig =
            serde_json::from_str(&minimal_config(r#"{ "name": "square-root", "c": 20.0 }"#))
                .unwrap();
        let ov = Overrides {
            c_percent: Some(0.5),
            ..Default::default()
        };
        let exp = cfg.build(&ov).unwrap();
        match &exp.heaps[0].1 {
            HeapLimitRule::SquareRoot(c) => {
                assert!((c.c.as_percent_per_mb() - 0.5).abs() < 1e-12);
            }
            other => panic!("unexpected rule {other:?}"),
        }
    }

    #[test]
    fn weight_scales_c() {
        let text = r#"{
            "duration_s": 10.0,
            "heaps": [
                { "workload": "homogeneous-1", "rule": { "name": "square-root", "c": 1.0 }, "weight": 0.5 }
            ]
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
        let exp = cfg.build(&Overrides::default()).unwrap();
        match &exp.heaps[0].1 {
            // background heap, half the weight: doubled c, less memory
            HeapLimitRule::SquareRoot(c) => {
                assert!((c.c.as_percent_per_mb() - 2.0).abs() < 1e-12)
            }
            other => panic!("unexpected rule {other:?}"),
        }
    }

    #[test]
    fn inline_workload_roundtrips() {
        let text = r#"{
            "duration_s": 5.0,
            "heaps": [
                {
                    "workload": { "phases": [
                        { "duration_s": 10.0, "alloc_rate_mb_per_s": 5.0,
                          "base_live_mb": 10.0, "gc_speed_mb_per_s": 100.0 }
                    ]},
                    "rule": { "name": "fixed", "limit_mb": 20.0 }
                }
            ]
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
        let exp = cfg.build(&Overrides::default()).unwrap();
        assert_eq!(exp.heaps.len(), 1);
        assert_eq!(exp.heaps[0].0.phases[0].leak_rate, 0.0);
        assert_eq!(exp.heaps[0].1, HeapLimitRule::Fixed { limit: 20.0 });
    }

    #[test]
    fn sweep_values_override_everything_for_swept_parameter() {
        let text = r#"{
            "duration_s": 10.0,
            "heaps": [ { "workload": "homogeneous-1", "rule": { "name": "square-root", "c": 20.0 } } ],
            "sweep": { "parameter": "c", "values": [0.1, 1.0] }
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
        let ov = Overrides {
            c_percent: Some(7.0),
            ..Default::default()
        };
        let exp = cfg.build_for_sweep_value(&ov, 1.0).unwrap();
        match &exp.heaps[0].1 {
            HeapLimitRule::SquareRoot(c) => {
                assert!((c.c.as_percent_per_mb() - 1.0).abs() < 1e-12)
            }
            other => panic!("unexpected rule {other:?}"),
        }
    }

    #[test]
    fn sweep_must_match_a_rule() {
        let text = r#"{
            "duration_s": 10.0,
            "heaps": [ { "workload": "homogeneous-1", "rule": { "name": "fixed", "limit_mb": 30.0 } } ],
            "sweep": { "parameter": "c", "values": [0.1] }
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
        assert!(cfg
            .build_for_sweep_value(&Overrides::default(), 0.1)
            .is_err());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let zero_duration = r#"{ "duration_s": 0.0, "heaps": [
            { "workload": "homogeneous-1", "rule": { "name": "proportional", "alpha": 1.0 } } ] }"#;
        let cfg: ExperimentConfig = serde_json::from_str(zero_duration).unwrap();
        assert!(cfg.build(&Overrides::default()).is_err());

        let no_heaps = r#"{ "duration_s": 1.0, "heaps": [] }"#;
        let cfg: ExperimentConfig = serde_json::from_str(no_heaps).unwrap();
        assert!(cfg.build(&Overrides::default()).is_err());

        let bad_rule = minimal_config(r#"{ "name": "proportional", "alpha": 0.0 }"#);
        let cfg: ExperimentConfig = serde_json::from_str(&bad_rule).unwrap();
        assert!(cfg.build(&Overrides::default()).is_err());

        assert!(serde_json::from_str::<ExperimentConfig>(
            r#"{ "duration_s": 1.0, "heaps": [], "unknown_field": 3 }"#
        )
        .is_err());
    }

    #[test]
    fn rule_from_name() {
        assert!(RuleConfig::from_name("square-root", None).is_err());
        assert_eq!(
            RuleConfig::from_name("square-root", Some(2.0)).unwrap(),
            RuleConfig::SquareRoot { c: 2.0 }
        );
        assert_eq!(
            RuleConfig::from_name("proportional", None).unwrap(),
            RuleConfig::Proportional { alpha: 1.0 }
        );
        assert!(RuleConfig::from_name("bogus", None).is_err());
    }
}
