//! Named experiment presets.

use crate::config::{
    ExperimentConfig, Mechanism, Metric, PatternSpec, ScenarioConfig, Series, Sweep, SweepVariable,
};
use crate::error::ConfigError;

pub const PRESET_NAMES: [&str; 11] = [
    "fig7_pattern",
    "fig8_unexpected",
    "fig9_filter_sweep",
    "fig10_filter_load",
    "fig11_filter_distance",
    "fig12_filter_two_ris",
    "fig12b_blocking_sweep",
    "fig13_sum_rate",
    "fig14_blocking_load",
    "fig15_blocking_distance",
    "fig16_blocking_two_ris",
];

pub const RIS_ELEMENTS: [f64; 4] = [160.0, 320.0, 640.0, 1280.0];
pub const LOADS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
pub const DISTANCES: [f64; 4] = [30.0, 50.0, 80.0, 100.0];
pub const BLOCKING_BETAS: [f64; 7] = [0.1, 0.2, 0.4, 0.5, 0.6, 0.8, 0.9];
/// Slots per trial in the load presets.
pub const LOAD_SLOTS: usize = 20;

const SEED: u64 = 20240601;

fn base(name: &str, sweep: SweepVariable, values: &[f64], series: Vec<Series>) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_string(),
        scenario: ScenarioConfig::default(),
        mechanism: Mechanism::NormalRis,
        sweep: Sweep {
            variable: sweep,
            values: values.to_vec(),
        },
        series,
        trials: 1000,
        master_seed: SEED,
        metrics: Vec::new(),
        pattern: None,
    }
}

fn label(prefix: &str, beta: f64) -> String {
    format!("{prefix}_{beta:.1}")
}

/// Fully-resolved config of a named preset.
pub fn preset(name: &str) -> Result<ExperimentConfig, ConfigError> {
    use Mechanism::{Blocking, Filter, NormalRis};
    use Metric::{Fluctuation, NontargetRate, SumRate, TargetRate};
    let target = || Series::new("target", NormalRis, TargetRate);
    let unexpected = || Series::new("unexpected", NormalRis, NontargetRate);
    let random = || Series::new("random", Mechanism::None, NontargetRate);

    let cfg = match name {
        "fig7_pattern" => {
            let mut c = base(name, SweepVariable::RisElements, &[20.0], Vec::new());
            c.trials = 1;
            c.metrics = vec![TargetRate];
            c.pattern = Some(PatternSpec {
                elements: 16,
                step_deg: 1.0,
                include_first_nulls: true,
            });
            c
        }
        "fig8_unexpected" => base(
            name,
            SweepVariable::RisElements,
            &RIS_ELEMENTS,
            vec![target(), unexpected(), random()],
        ),
        "fig9_filter_sweep" => {
            let mut series = vec![target(), unexpected(), random()];
            for k in 1..=10 {
                let b = k as f64 / 10.0;
                series.push(Series::new(label("filter", b), Filter, NontargetRate).filter_beta(b));
            }
            let mut c = base(name, SweepVariable::RisElements, &RIS_ELEMENTS, series);
            c.scenario.transmit_power_dbm = 50.0;
            c
        }
        "fig10_filter_load" => {
            let mut c = base(
                name,
                SweepVariable::LoadProbability,
                &LOADS,
                vec![
                    Series::new("normal", NormalRis, NontargetRate),
                    Series::new("filter_0.8", Filter, NontargetRate).filter_beta(0.8),
                    Series::new("normal_cov", NormalRis, Fluctuation),
                    Series::new("filter_0.8_cov", Filter, Fluctuation).filter_beta(0.8),
                    Series::new("filter_1.0_cov", Filter, Fluctuation).filter_beta(1.0),
                ],
            );
            c.scenario.transmit_power_dbm = 50.0;
            c.scenario.slots = LOAD_SLOTS;
            c
        }
        "fig11_filter_distance" => {
            let mut c = base(
                name,
                SweepVariable::NbRisDistance,
                &DISTANCES,
                vec![
                    Series::new("normal", NormalRis, NontargetRate),
                    Series::new("filter_0.8", Filter, NontargetRate).filter_beta(0.8),
                    random(),
                ],
            );
            c.scenario.transmit_power_dbm = 50.0;
            c
        }
        "fig12_filter_two_ris" => {
            let mut c = base(
                name,
                SweepVariable::RisElements,
                &RIS_ELEMENTS,
                vec![
                    Series::new("normal_target", NormalRis, TargetRate),
                    Series::new("normal_nontarget", NormalRis, NontargetRate),
                    Series::new("filter_target", Filter, TargetRate).filter_beta(0.8),
                    Series::new("filter_nontarget", Filter, NontargetRate).filter_beta(0.8),
                ],
            );
            c.scenario.transmit_power_dbm = 50.0;
            c.scenario.ris_count = 2;
            c
        }
        "fig12b_blocking_sweep" => {
            let mut series = vec![
                Series::new("normal_target", NormalRis, TargetRate),
                Series::new("normal_nontarget", NormalRis, NontargetRate),
            ];
            for b in BLOCKING_BETAS {
                series.push(
                    Series::new(label("blocking_target", b), Blocking, TargetRate).blocking_beta(b),
                );
                series.push(
                    Series::new(label("blocking_nontarget", b), Blocking, NontargetRate)
                        .blocking_beta(b),
                );
            }
            base(name, SweepVariable::RisElements, &RIS_ELEMENTS, series)
        }
        "fig13_sum_rate" => base(
            name,
            SweepVariable::RisElements,
            &RIS_ELEMENTS,
            vec![
                Series::new("normal", NormalRis, SumRate),
                Series::new("blocking_0.5", Blocking, SumRate).blocking_beta(0.5),
            ],
        ),
        "fig14_blocking_load" => {
            let mut c = base(
                name,
                SweepVariable::LoadProbability,
                &LOADS,
                vec![
                    Series::new("normal", NormalRis, NontargetRate),
                    Series::new("blocking_0.5", Blocking, NontargetRate).blocking_beta(0.5),
                ],
            );
            c.scenario.slots = LOAD_SLOTS;
            c
        }
        "fig15_blocking_distance" => base(
            name,
            SweepVariable::NbRisDistance,
            &DISTANCES,
            vec![
                Series::new("normal", NormalRis, NontargetRate),
                Series::new("blocking_0.5", Blocking, NontargetRate).blocking_beta(0.5),
                random(),
            ],
        ),
        "fig16_blocking_two_ris" => {
            let mut c = base(
                name,
                SweepVariable::RisElements,
                &RIS_ELEMENTS,
                vec![
                    Series::new("normal_target", NormalRis, TargetRate),
                    Series::new("normal_nontarget", NormalRis, NontargetRate),
                    Series::new("blocking_target", Blocking, TargetRate).blocking_beta(0.5),
                    Series::new("blocking_nontarget", Blocking, NontargetRate).blocking_beta(0.5),
                ],
            );
            c.scenario.ris_count = 2;
            c
        }
        other => {
            return Err(ConfigError::UnknownPreset {
                name: other.to_string(),
                valid: PRESET_NAMES.iter().map(|s| s.to_string()).collect(),
            })
        }
    };
    cfg.validate()?;
    Ok(cfg)
}
