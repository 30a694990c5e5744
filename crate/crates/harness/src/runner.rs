//! Monte-Carlo loop.
//!
//! Trials run in parallel; each returns its metric values for every
//! (sweep point, series) pair, and the results are reduced sequentially in
//! trial order, so the output does not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use ris_coexist::capacity::achievable_rate;
use ris_coexist::coexistence::{
    gain_fluctuation_stat, Coexistence, IdleModel, Realization, SlotChannelSample, SlotMechanism,
};
use ris_coexist::geometry::{array_factor_pattern, wavelength};
use ris_coexist::{
    ArrayGeometry, BlockPartition, ChannelMatrix64, Complex, CsiKind, Direction, FilterMode,
    FilterSpec, LinkBudget, Vec3,
};

use crate::config::{
    ExperimentConfig, FilterModeConfig, Mechanism, Metric, PatternSpec, PointParams,
};
use crate::error::SimError;
use crate::output::{Column, RateCurve};
use crate::rng::{stream, Purpose, RNG_DESCRIPTION};
use crate::scenario::{build, describe, GeometryKey, UeDrop};

/// Curves of one experiment, one per metric in use.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub name: String,
    pub curves: Vec<RateCurve>,
}

impl ExperimentResult {
    pub fn curve(&self, metric: &str) -> Option<&RateCurve> {
        self.curves.iter().find(|c| c.metric == metric)
    }

    /// Column `label` of whichever curve carries it.
    pub fn column(&self, label: &str) -> Option<&Column> {
        self.curves
            .iter()
            .flat_map(|c| &c.columns)
            .find(|c| c.name == label)
    }
}

/// Worker threads from `RIS_SIM_THREADS`; unset, unparsable or 0 means auto.
pub fn threads_from_env() -> usize {
    std::env::var("RIS_SIM_THREADS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult, SimError> {
    run_experiment_with_threads(config, threads_from_env())
}

pub fn run_experiment_with_threads(
    config: &ExperimentConfig,
    threads: usize,
) -> Result<ExperimentResult, SimError> {
    config.validate()?;
    if let Some(p) = &config.pattern {
        return run_pattern(config, p);
    }
    let series = config.resolved_series();
    let points: Vec<Vec<PointParams>> = config
        .sweep
        .values
        .iter()
        .map(|&v| {
            series
                .iter()
                .map(|s| config.point(s, v))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| SimError::Invalid(format!("thread pool: {e}")))?;
    let per_trial: Vec<Vec<Vec<f64>>> = pool.install(|| {
        (0..config.trials as u64)
            .into_par_iter()
            .map(|t| run_trial(config, &points, t))
            .collect::<Result<Vec<_>, SimError>>()
    })?;

    let n = config.trials as f64;
    let n_sweep = config.sweep.values.len();
    let mut columns: Vec<(Metric, Column)> = series
        .iter()
        .map(|s| {
            (
                s.metric,
                Column {
                    name: s.label.clone(),
                    mean: Vec::with_capacity(n_sweep),
                    stderr: Vec::with_capacity(n_sweep),
                },
            )
        })
        .collect();
    for i in 0..n_sweep {
        for (j, (_, col)) in columns.iter_mut().enumerate() {
            let mut sum = 0.0;
            for trial in &per_trial {
                sum += trial[i][j];
            }
            let mean = sum / n;
            let stderr = if config.trials > 1 {
                let mut ss = 0.0;
                for trial in &per_trial {
                    let d = trial[i][j] - mean;
                    ss += d * d;
                }
                (ss / (n - 1.0) / n).sqrt()
            } else {
                0.0
            };
            col.mean.push(mean);
            col.stderr.push(stderr);
        }
    }

    let digest = config.digest();
    let curves = Metric::ALL
        .iter()
        .filter(|m| columns.iter().any(|(cm, _)| cm == *m))
        .map(|&m| RateCurve {
            name: config.name.clone(),
            metric: m.name().to_string(),
            sweep_variable: config.sweep.variable.name().to_string(),
            sweep_values: config.sweep.values.clone(),
            columns: columns
                .iter()
                .filter(|(cm, _)| *cm == m)
                .map(|(_, c)| c.clone())
                .collect(),
            trials: config.trials,
            master_seed: config.master_seed,
            config_digest: digest.clone(),
            metadata: vec![
                ("rng".to_string(), RNG_DESCRIPTION.to_string()),
                ("geometry".to_string(), describe(&config.scenario)),
            ],
        })
        .collect();
    Ok(ExperimentResult {
        name: config.name.clone(),
        curves,
    })
}

/// Metric values of one trial, indexed `[sweep point][series]`.
pub fn run_trial(
    config: &ExperimentConfig,
    points: &[Vec<PointParams>],
    trial: u64,
) -> Result<Vec<Vec<f64>>, SimError> {
    let seed = config.master_seed;
    let drop = UeDrop::draw(&mut stream(seed, trial, Purpose::Geometry));
    let mut geometries: Vec<(GeometryKey, Coexistence<f64>)> = Vec::new();
    let mut outcomes: Vec<(PointParams, Outcome)> = Vec::new();
    let mut out = Vec::with_capacity(points.len());
    for row in points {
        let mut values = Vec::with_capacity(row.len());
        for p in row {
            let key = GeometryKey::of(p);
            if !geometries.iter().any(|(k, _)| *k == key) {
                let scenario = build(&config.scenario, key, &drop)?;
                let realization = Realization::draw_split(
                    &scenario,
                    &mut stream(seed, trial, Purpose::Scatter),
                    &mut stream(seed, trial, Purpose::Subpath),
                )?;
                geometries.push((key, Coexistence::new(&scenario, realization)?));
            }
            let coex = &geometries
                .iter()
                .find(|(k, _)| *k == key)
                .expect("inserted above")
                .1;
            let cached = outcomes
                .iter()
                .find(|(q, _)| same_evaluation(q, p))
                .map(|(_, o)| *o);
            let o = match cached {
                Some(o) => o,
                None => {
                    let o = evaluate(config, coex, p, seed, trial)?;
                    outcomes.push((p.clone(), o));
                    o
                }
            };
            values.push(match p.metric {
                Metric::TargetRate => o.target,
                Metric::NontargetRate => o.nontarget,
                Metric::SumRate => o.target + o.nontarget,
                Metric::Fluctuation => o.fluctuation.unwrap_or(f64::NAN),
            });
        }
        out.push(values);
    }
    Ok(out)
}

fn same_evaluation(a: &PointParams, b: &PointParams) -> bool {
    let fluct = |p: &PointParams| p.metric == Metric::Fluctuation;
    a.mechanism == b.mechanism
        && GeometryKey::of(a) == GeometryKey::of(b)
        && a.filter_beta == b.filter_beta
        && a.blocking_beta == b.blocking_beta
        && a.load_probability == b.load_probability
        && (fluct(a) || !fluct(b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Outcome {
    target: f64,
    nontarget: f64,
    fluctuation: Option<f64>,
}

fn filter_spec(config: &ExperimentConfig, beta_net: f64) -> Result<FilterSpec<f64>, SimError> {
    let mode = match config.scenario.filter_mode {
        FilterModeConfig::Absorption => FilterMode::Absorption,
        FilterModeConfig::Scattering => FilterMode::Scattering,
    };
    let passes = config.scenario.filter_passes;
    let per_pass = if passes == 2 {
        beta_net.sqrt()
    } else {
        beta_net
    };
    Ok(FilterSpec::new(mode, per_pass, passes)?)
}

fn rate(
    h: &ChannelMatrix64,
    budget: &LinkBudget<f64>,
    csi: CsiKind<'_, f64>,
) -> Result<f64, SimError> {
    Ok(achievable_rate(h, budget, csi)?)
}

fn evaluate(
    config: &ExperimentConfig,
    coex: &Coexistence<f64>,
    p: &PointParams,
    seed: u64,
    trial: u64,
) -> Result<Outcome, SimError> {
    let scenario = coex.scenario();
    let budget = LinkBudget::new(scenario.nb_a.transmit_power, scenario.noise_variance)?;
    let slots = config.scenario.slots;
    let want_fluct = p.metric == Metric::Fluctuation;
    let n = scenario.ris_list[0].len();

    if p.ris_count == 2 {
        let filters = match p.mechanism {
            Mechanism::Filter => {
                let f = filter_spec(config, p.filter_beta)?;
                [Some(f), Some(f)]
            }
            _ => [None, None],
        };
        let ((a, b), (sa, sb)) = match p.mechanism {
            Mechanism::None => {
                let nat = coex.all_natural()?;
                (nat.clone(), nat)
            }
            Mechanism::NormalRis | Mechanism::Filter => (
                coex.dual_ris_filtered(&filters)?,
                coex.dual_ris_snapshot(&filters)?,
            ),
            Mechanism::Blocking => {
                let parts = vec![BlockPartition::proportional(n, p.blocking_beta)?; 2];
                let natural: Vec<_> = (0..2).map(|r| coex.natural_tuning(r).clone()).collect();
                let live = coex.blocking_with(&parts)?;
                let snap = coex.blocking_with_idle(&parts, Some(&natural))?;
                ((live.0.clone(), live.1), (live.0, snap.1))
            }
        };
        return Ok(Outcome {
            target: rate(&a, &budget, CsiKind::Stale(&sa))?,
            nontarget: rate(&b, &budget, CsiKind::Stale(&sb))?,
            fluctuation: None,
        });
    }

    let (target_h, snapshot, mechanism) = match p.mechanism {
        Mechanism::None => {
            let (a, b) = coex.all_natural()?;
            (a, b, None)
        }
        Mechanism::NormalRis => (coex.target()?, coex.natural()?, Some(SlotMechanism::Normal)),
        Mechanism::Filter => (
            coex.target()?,
            coex.natural()?,
            Some(SlotMechanism::Filter(filter_spec(config, p.filter_beta)?)),
        ),
        Mechanism::Blocking => {
            let part = BlockPartition::proportional(n, p.blocking_beta)?;
            let natural = vec![coex.natural_tuning(0).clone()];
            let target = coex.blocking_with(std::slice::from_ref(&part))?.0;
            let snap = coex
                .blocking_with_idle(std::slice::from_ref(&part), Some(&natural))?
                .1;
            (target, snap, Some(SlotMechanism::Blocking(part)))
        }
    };
    let target = rate(&target_h, &budget, CsiKind::Known)?;

    let mut slot_rng = stream(seed, trial, Purpose::Slot);
    let (sum, samples) = match &mechanism {
        None => {
            let r = rate(&snapshot, &budget, CsiKind::Stale(&snapshot))?;
            let s = SlotChannelSample {
                h_eff: snapshot.clone(),
                tuned: false,
            };
            (
                r * slots as f64,
                if want_fluct {
                    vec![s; slots]
                } else {
                    Vec::new()
                },
            )
        }
        Some(m) if scenario.idle_model == IdleModel::Semistatic => slots_semistatic(
            coex,
            m,
            p.load_probability,
            slots,
            &mut slot_rng,
            &budget,
            &snapshot,
            want_fluct,
        )?,
        Some(m) => slots_direct(
            coex,
            m,
            p.load_probability,
            slots,
            &mut slot_rng,
            &budget,
            &snapshot,
            want_fluct,
        )?,
    };
    let fluctuation = if want_fluct {
        Some(gain_fluctuation_stat(&samples)?.cov)
    } else {
        None
    };
    Ok(Outcome {
        target,
        nontarget: sum / slots as f64,
        fluctuation,
    })
}

type SlotRun = (f64, Vec<SlotChannelSample<f64>>);

/// Rate sum over slots, drawing every slot through the core model.
#[allow(clippy::too_many_arguments)]
fn slots_direct(
    coex: &Coexistence<f64>,
    m: &SlotMechanism<f64>,
    x: f64,
    slots: usize,
    rng: &mut ChaCha20Rng,
    budget: &LinkBudget<f64>,
    snapshot: &ChannelMatrix64,
    keep: bool,
) -> Result<SlotRun, SimError> {
    let mut sum = 0.0;
    let mut samples = Vec::new();
    for _ in 0..slots {
        let sample = coex.slot_channel_at(m, x, rng)?;
        sum += rate(&sample.h_eff, budget, CsiKind::Stale(snapshot))?;
        if keep {
            samples.push(sample);
        }
    }
    Ok((sum, samples))
}

/// Same draws as [`slots_direct`] for a semistatic idle state, which leaves
/// only two distinct slot channels to evaluate.
#[allow(clippy::too_many_arguments)]
fn slots_semistatic(
    coex: &Coexistence<f64>,
    m: &SlotMechanism<f64>,
    x: f64,
    slots: usize,
    rng: &mut ChaCha20Rng,
    budget: &LinkBudget<f64>,
    snapshot: &ChannelMatrix64,
    keep: bool,
) -> Result<SlotRun, SimError> {
    let mut unused = ChaCha20Rng::seed_from_u64(0);
    let on = coex.slot_channel_at(m, 1.0, &mut unused)?;
    let off = coex.slot_channel_at(m, 0.0, &mut unused)?;
    let rate_on = rate(&on.h_eff, budget, CsiKind::Stale(snapshot))?;
    let rate_off = rate(&off.h_eff, budget, CsiKind::Stale(snapshot))?;
    let mut sum = 0.0;
    let mut samples = Vec::new();
    for _ in 0..slots {
        let u: f64 = rng.random();
        let tuned = u < x;
        sum += if tuned { rate_on } else { rate_off };
        if keep {
            samples.push(if tuned { on.clone() } else { off.clone() });
        }
    }
    Ok((sum, samples))
}

/// Array-factor scan on a 1-element-high ULA with unit weights; angles in
/// degrees on `(-90, 90)` at `step_deg`, plus the first nulls if requested.
pub fn pattern_angles(spec: &PatternSpec) -> Vec<f64> {
    let mut angles_rad: Vec<f64> = Vec::new();
    let steps = (90.0 / spec.step_deg).ceil() as i64;
    for k in -steps..=steps {
        let deg = k as f64 * spec.step_deg;
        if deg.abs() < 90.0 {
            angles_rad.push(deg.to_radians());
        }
    }
    if spec.include_first_nulls && spec.elements >= 2 {
        let s = 2.0 / spec.elements as f64;
        angles_rad.push(s.asin());
        angles_rad.push(-s.asin());
    }
    angles_rad.sort_by(f64::total_cmp);
    angles_rad.dedup();
    angles_rad
}

pub fn pattern_gains(spec: &PatternSpec, angles_rad: &[f64]) -> Result<Vec<f64>, SimError> {
    let lambda = wavelength(28e9)?;
    let arr = ArrayGeometry::ula(
        spec.elements,
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(1.0, 0.0, 0.0),
    )?;
    let weights = vec![Complex::new(1.0, 0.0); spec.elements];
    let dirs = angles_rad
        .iter()
        .map(|&a| Direction::azimuth(a))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(array_factor_pattern(&arr, &weights, &dirs, lambda)?)
}

fn run_pattern(
    config: &ExperimentConfig,
    spec: &PatternSpec,
) -> Result<ExperimentResult, SimError> {
    let angles = pattern_angles(spec);
    let gains = pattern_gains(spec, &angles)?;
    let curve = RateCurve {
        name: config.name.clone(),
        metric: "gain".to_string(),
        sweep_variable: "azimuth_deg".to_string(),
        sweep_values: angles.iter().map(|a| a.to_degrees()).collect(),
        columns: vec![Column {
            name: "gain".to_string(),
            stderr: vec![0.0; gains.len()],
            mean: gains,
        }],
        trials: 1,
        master_seed: config.master_seed,
        config_digest: config.digest(),
        metadata: vec![(
            "pattern".to_string(),
            format!(
                "{}-element ULA, half-wavelength spacing, unit weights",
                spec.elements
            ),
        )],
    };
    Ok(ExperimentResult {
        name: config.name.clone(),
        curves: vec![curve],
    })
}
