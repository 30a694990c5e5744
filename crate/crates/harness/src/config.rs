//! Experiment configuration as read from JSON files and presets.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    /// Surfaces stay in their natural-scatter state.
    None,
    NormalRis,
    Filter,
    Blocking,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    TargetRate,
    NontargetRate,
    SumRate,
    /// Per-trial coefficient of variation of the nontarget slot gains.
    Fluctuation,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::TargetRate => "target_rate",
            Metric::NontargetRate => "nontarget_rate",
            Metric::SumRate => "sum_rate",
            Metric::Fluctuation => "fluctuation",
        }
    }

    pub const ALL: [Metric; 4] = [
        Metric::TargetRate,
        Metric::NontargetRate,
        Metric::SumRate,
        Metric::Fluctuation,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    RisElements,
    FilterBeta,
    BlockingBeta,
    LoadProbability,
    NbRisDistance,
    RisCount,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::RisElements => "ris_elements",
            SweepVariable::FilterBeta => "filter_beta",
            SweepVariable::BlockingBeta => "blocking_beta",
            SweepVariable::LoadProbability => "load_probability",
            SweepVariable::NbRisDistance => "nb_ris_distance",
            SweepVariable::RisCount => "ris_count",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterModeConfig {
    Absorption,
    Scattering,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IdleModelConfig {
    #[default]
    Semistatic,
    FreshPerSlot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathLossConfig {
    FreeSpace,
    LogDistance {
        reference_gain_db: f64,
        reference_distance: f64,
        exponent: f64,
    },
}

/// Rectangle the UEs are dropped in, `x` relative to the first surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UeRegion {
    pub x_min_offset: f64,
    pub x_max_offset: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub carrier_hz: f64,
    pub noise_variance: f64,
    pub transmit_power_dbm: f64,
    /// `[nx, ny]` of each base-station UPA.
    pub nb_array: [usize; 2],
    /// `[nx, ny]` of each surface; a `ris_elements` sweep keeps `nx`.
    pub ris_array: [usize; 2],
    pub ue_antennas: usize,
    pub element_spacing: f64,
    pub nb_a_position: [f64; 3],
    pub nb_b_position: [f64; 3],
    /// Surface `x` coordinate; the second surface sits at `-x`.
    pub nb_ris_distance: f64,
    pub ris_height: f64,
    pub ue_region: UeRegion,
    pub path_loss: PathLossConfig,
    pub direct_path: bool,
    pub subpath_power: f64,
    pub quantization_bits: Option<u8>,
    pub load_probability: f64,
    pub slots: usize,
    pub idle_model: IdleModelConfig,
    pub consistent_energy_weighting: bool,
    pub ris_count: usize,
    pub filter_mode: FilterModeConfig,
    pub filter_beta: f64,
    pub filter_passes: u8,
    pub blocking_beta: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            carrier_hz: 28e9,
            noise_variance: 3.16e-11,
            transmit_power_dbm: 30.0,
            nb_array: [8, 4],
            ris_array: [20, 32],
            ue_antennas: 1,
            element_spacing: 0.5,
            nb_a_position: [0.0, 0.0, 25.0],
            nb_b_position: [0.0, 40.0, 25.0],
            nb_ris_distance: 50.0,
            ris_height: 10.0,
            ue_region: UeRegion {
                x_min_offset: -105.0,
                x_max_offset: -5.0,
                y_min: -50.0,
                y_max: 50.0,
                height: 1.5,
            },
            path_loss: PathLossConfig::LogDistance {
                reference_gain_db: -30.0,
                reference_distance: 1.0,
                exponent: 2.0,
            },
            direct_path: false,
            subpath_power: 0.0,
            quantization_bits: None,
            load_probability: 1.0,
            slots: 1,
            idle_model: IdleModelConfig::Semistatic,
            consistent_energy_weighting: false,
            ris_count: 1,
            filter_mode: FilterModeConfig::Scattering,
            filter_beta: 0.8,
            filter_passes: 2,
            blocking_beta: 0.5,
        }
    }
}

/// One plotted line: a mechanism, optional parameter pins and one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Series {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mechanism: Option<Mechanism>,
    pub metric: Metric,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter_beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocking_beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load_probability: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ris_count: Option<usize>,
}

impl Series {
    pub fn new(label: impl Into<String>, mechanism: Mechanism, metric: Metric) -> Self {
        Self {
            label: label.into(),
            mechanism: Some(mechanism),
            metric,
            filter_beta: None,
            blocking_beta: None,
            load_probability: None,
            ris_count: None,
        }
    }

    pub fn filter_beta(mut self, beta: f64) -> Self {
        self.filter_beta = Some(beta);
        self
    }

    pub fn blocking_beta(mut self, beta: f64) -> Self {
        self.blocking_beta = Some(beta);
        self
    }

    pub fn load(mut self, x: f64) -> Self {
        self.load_probability = Some(x);
        self
    }

    fn pins(&self, variable: SweepVariable) -> bool {
        match variable {
            SweepVariable::FilterBeta => self.filter_beta.is_some(),
            SweepVariable::BlockingBeta => self.blocking_beta.is_some(),
            SweepVariable::LoadProbability => self.load_probability.is_some(),
            SweepVariable::RisCount => self.ris_count.is_some(),
            SweepVariable::RisElements | SweepVariable::NbRisDistance => false,
        }
    }
}

/// Array-factor scan of a uniform linear array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternSpec {
    pub elements: usize,
    pub step_deg: f64,
    /// Also evaluate the two first-null directions `sin(az) = +-2/N`.
    pub include_first_nulls: bool,
}

fn default_trials() -> usize {
    1000
}

fn default_mechanism() -> Mechanism {
    Mechanism::NormalRis
}

fn default_metrics() -> Vec<Metric> {
    vec![Metric::NontargetRate]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default = "default_mechanism")]
    pub mechanism: Mechanism,
    pub sweep: Sweep,
    /// Empty means one series per entry of `metrics`, all with `mechanism`.
    #[serde(default)]
    pub series: Vec<Series>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<PatternSpec>,
}

/// Fully-resolved parameters of one (series, sweep point) evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct PointParams {
    pub mechanism: Mechanism,
    pub metric: Metric,
    pub ris_array: [usize; 2],
    pub nb_ris_distance: f64,
    pub ris_count: usize,
    pub filter_beta: f64,
    pub blocking_beta: f64,
    pub load_probability: f64,
}

fn err(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

fn check_unit(field: &str, v: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(err(field, format!("{v} outside [0, 1]")))
    }
}

fn check_positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(err(field, format!("must be positive and finite, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// SHA-256 over the compact JSON form, hex encoded.
    pub fn digest(&self) -> String {
        let compact = serde_json::to_string(self).expect("config serialises");
        hex::encode(Sha256::digest(compact.as_bytes()))
    }

    /// `--override a.b.c=value` on the JSON form; the value is parsed as JSON
    /// when possible and taken as a string otherwise.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut value = serde_json::to_value(self).expect("config serialises");
        for item in overrides {
            let (path, raw) = item
                .split_once('=')
                .ok_or_else(|| err(item.clone(), "override must look like key=value"))?;
            let parsed: serde_json::Value = serde_json::from_str(raw)
                .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
            let mut slot = &mut value;
            let keys: Vec<&str> = path.split('.').collect();
            for (depth, key) in keys.iter().enumerate() {
                let obj = slot.as_object_mut().ok_or_else(|| {
                    err(
                        path,
                        format!("`{}` is not an object", keys[..depth].join(".")),
                    )
                })?;
                if depth + 1 == keys.len() {
                    obj.insert((*key).to_string(), parsed.clone());
                    break;
                }
                slot = obj
                    .entry((*key).to_string())
                    .or_insert_with(|| serde_json::Value::Object(Default::default()));
            }
        }
        let text = serde_json::to_string(&value).expect("value serialises");
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.is_empty() {
            return Err(err("name", "must not be empty"));
        }
        if self.trials == 0 {
            return Err(err("trials", "must be at least 1"));
        }
        if self.sweep.values.is_empty() {
            return Err(err("sweep.values", "must not be empty"));
        }
        if let Some(bad) = self.sweep.values.iter().find(|v| !v.is_finite()) {
            return Err(err("sweep.values", format!("non-finite value {bad}")));
        }
        let s = &self.scenario;
        check_positive("scenario.carrier_hz", s.carrier_hz)?;
        check_positive("scenario.noise_variance", s.noise_variance)?;
        if !s.transmit_power_dbm.is_finite() {
            return Err(err("scenario.transmit_power_dbm", "must be finite"));
        }
        if s.nb_array.contains(&0) {
            return Err(err("scenario.nb_array", "dimensions must be at least 1"));
        }
        if s.ris_array.contains(&0) {
            return Err(err("scenario.ris_array", "dimensions must be at least 1"));
        }
        if s.ue_antennas == 0 {
            return Err(err("scenario.ue_antennas", "must be at least 1"));
        }
        check_positive("scenario.element_spacing", s.element_spacing)?;
        check_positive("scenario.nb_ris_distance", s.nb_ris_distance)?;
        if s.slots == 0 {
            return Err(err("scenario.slots", "must be at least 1"));
        }
        if !(s.subpath_power.is_finite() && s.subpath_power >= 0.0) {
            return Err(err("scenario.subpath_power", "must be non-negative"));
        }
        if let Some(b) = s.quantization_bits {
            if !(1..=8).contains(&b) {
                return Err(err(
                    "scenario.quantization_bits",
                    format!("must be in 1..=8, got {b}"),
                ));
            }
        }
        if !(s.filter_passes == 1 || s.filter_passes == 2) {
            return Err(err("scenario.filter_passes", "must be 1 or 2"));
        }
        let r = &s.ue_region;
        if !(r.x_min_offset <= r.x_max_offset && r.y_min <= r.y_max) {
            return Err(err("scenario.ue_region", "minimum exceeds maximum"));
        }
        if let PathLossConfig::LogDistance {
            reference_distance,
            exponent,
            reference_gain_db,
        } = s.path_loss
        {
            check_positive("scenario.path_loss.reference_distance", reference_distance)?;
            if !(exponent.is_finite() && exponent >= 0.0 && reference_gain_db.is_finite()) {
                return Err(err(
                    "scenario.path_loss",
                    "exponent and reference gain must be finite",
                ));
            }
        }
        check_unit("scenario.load_probability", s.load_probability)?;
        check_unit("scenario.filter_beta", s.filter_beta)?;
        check_unit("scenario.blocking_beta", s.blocking_beta)?;
        if !(s.ris_count == 1 || s.ris_count == 2) {
            return Err(err("scenario.ris_count", "must be 1 or 2"));
        }
        if let Some(p) = &self.pattern {
            if p.elements == 0 {
                return Err(err("pattern.elements", "must be at least 1"));
            }
            check_positive("pattern.step_deg", p.step_deg)?;
            return Ok(());
        }
        for (i, series) in self.resolved_series().iter().enumerate() {
            if series.label.is_empty() {
                return Err(err(format!("series[{i}].label"), "must not be empty"));
            }
            if series.pins(self.sweep.variable) {
                return Err(err(
                    format!("series[{i}]"),
                    format!("pins the swept variable {}", self.sweep.variable.name()),
                ));
            }
            for v in &self.sweep.values {
                self.point(series, *v).map_err(|e| match e {
                    ConfigError::Invalid { field, message } => {
                        err(format!("series[{i}] at sweep value {v}: {field}"), message)
                    }
                    other => other,
                })?;
            }
        }
        if self.series.is_empty() && self.metrics.is_empty() {
            return Err(err("metrics", "must not be empty when no series are given"));
        }
        let mut labels: Vec<&str> = self.series.iter().map(|s| s.label.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(err("series", "labels must be unique"));
        }
        Ok(())
    }

    pub fn resolved_series(&self) -> Vec<Series> {
        if !self.series.is_empty() {
            return self.series.clone();
        }
        self.metrics
            .iter()
            .map(|&m| Series::new(m.name(), self.mechanism, m))
            .collect()
    }

    /// Parameters of `series` at sweep value `value`.
    pub fn point(&self, series: &Series, value: f64) -> Result<PointParams, ConfigError> {
        let s = &self.scenario;
        let mut p = PointParams {
            mechanism: series.mechanism.unwrap_or(self.mechanism),
            metric: series.metric,
            ris_array: s.ris_array,
            nb_ris_distance: s.nb_ris_distance,
            ris_count: series.ris_count.unwrap_or(s.ris_count),
            filter_beta: series.filter_beta.unwrap_or(s.filter_beta),
            blocking_beta: series.blocking_beta.unwrap_or(s.blocking_beta),
            load_probability: series.load_probability.unwrap_or(s.load_probability),
        };
        match self.sweep.variable {
            SweepVariable::RisElements => {
                let nx = s.ris_array[0];
                let total = value.round();
                if (value - total).abs() > 1e-9
                    || total < 1.0
                    || !(total as usize).is_multiple_of(nx)
                {
                    return Err(err(
                        "sweep.values",
                        format!("element count {value} is not a positive multiple of ris_array[0] = {nx}"),
                    ));
                }
                p.ris_array = [nx, total as usize / nx];
            }
            SweepVariable::FilterBeta => p.filter_beta = value,
            SweepVariable::BlockingBeta => p.blocking_beta = value,
            SweepVariable::LoadProbability => p.load_probability = value,
            SweepVariable::NbRisDistance => p.nb_ris_distance = value,
            SweepVariable::RisCount => {
                if value != 1.0 && value != 2.0 {
                    return Err(err(
                        "sweep.values",
                        format!("surface count must be 1 or 2, got {value}"),
                    ));
                }
                p.ris_count = value as usize;
            }
        }
        check_positive("nb_ris_distance", p.nb_ris_distance)?;
        check_unit("filter_beta", p.filter_beta)?;
        check_unit("blocking_beta", p.blocking_beta)?;
        check_unit("load_probability", p.load_probability)?;
        if !(p.ris_count == 1 || p.ris_count == 2) {
            return Err(err("ris_count", "must be 1 or 2"));
        }
        if p.ris_count == 2 && p.load_probability != 1.0 && p.mechanism != Mechanism::None {
            return Err(err(
                "load_probability",
                "the load model covers single-surface scenarios; two-surface runs are full-buffer",
            ));
        }
        if p.ris_count == 2 && p.metric == Metric::Fluctuation {
            return Err(err(
                "metric",
                "fluctuation is defined for single-surface scenarios",
            ));
        }
        if p.metric == Metric::Fluctuation && s.slots < 2 {
            return Err(err("scenario.slots", "fluctuation needs at least 2 slots"));
        }
        Ok(p)
    }
}
