//! Turning a [`ScenarioConfig`] plus one sweep point into a core scenario.

use rand::Rng;
use ris_coexist::coexistence::{IdleModel, Network, NetworkScenario, NodeConfig, RisNode};
use ris_coexist::{ArrayGeometry, PathLoss, Vec3};

use crate::config::{IdleModelConfig, PathLossConfig, PointParams, ScenarioConfig};
use crate::error::SimError;

/// UE drop in unit coordinates; mapped into the region per geometry so that
/// a distance sweep moves the region but keeps each trial's relative drop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UeDrop {
    pub a: [f64; 2],
    pub b: [f64; 2],
}

impl UeDrop {
    pub fn draw<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            a: [rng.random(), rng.random()],
            b: [rng.random(), rng.random()],
        }
    }
}

/// Everything that changes the segments of a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryKey {
    pub ris_array: [usize; 2],
    pub nb_ris_distance: f64,
    pub ris_count: usize,
}

impl GeometryKey {
    pub fn of(p: &PointParams) -> Self {
        Self {
            ris_array: p.ris_array,
            nb_ris_distance: p.nb_ris_distance,
            ris_count: p.ris_count,
        }
    }
}

fn v3(p: [f64; 3]) -> Vec3<f64> {
    Vec3::new(p[0], p[1], p[2])
}

pub fn path_loss(cfg: &PathLossConfig) -> PathLoss<f64> {
    match *cfg {
        PathLossConfig::FreeSpace => PathLoss::FreeSpace,
        PathLossConfig::LogDistance {
            reference_gain_db,
            reference_distance,
            exponent,
        } => PathLoss::LogDistance {
            reference_gain_db,
            reference_distance,
            exponent,
        },
    }
}

/// Surfaces at `(+-d, 0, h)` facing the origin, base stations and UEs per
/// config, UEs mapped from `drop` into the region next to the first surface.
pub fn build(
    cfg: &ScenarioConfig,
    key: GeometryKey,
    drop: &UeDrop,
) -> Result<NetworkScenario<f64>, SimError> {
    let spacing = cfg.element_spacing;
    let x_axis = Vec3::new(1.0, 0.0, 0.0);
    let nb = |pos: [f64; 3]| -> Result<NodeConfig<f64>, SimError> {
        Ok(NodeConfig {
            array: ArrayGeometry::upa(cfg.nb_array[0], cfg.nb_array[1], v3(pos), x_axis)?
                .with_spacing(spacing)?,
            transmit_power: 10f64.powf((cfg.transmit_power_dbm - 30.0) / 10.0),
        })
    };
    let d = key.nb_ris_distance;
    let r = &cfg.ue_region;
    let ue = |u: [f64; 2]| -> Result<ArrayGeometry<f64>, SimError> {
        let x = d + r.x_min_offset + u[0] * (r.x_max_offset - r.x_min_offset);
        let y = r.y_min + u[1] * (r.y_max - r.y_min);
        Ok(
            ArrayGeometry::ula(cfg.ue_antennas, Vec3::new(x, y, r.height), x_axis)?
                .with_spacing(spacing)?,
        )
    };
    let surface = |x: f64, facing: f64, owner: Network| -> Result<RisNode<f64>, SimError> {
        let array = ArrayGeometry::upa(
            key.ris_array[0],
            key.ris_array[1],
            Vec3::new(x, 0.0, cfg.ris_height),
            Vec3::new(facing, 0.0, 0.0),
        )?
        .with_spacing(spacing)?;
        Ok(RisNode::new(array, owner))
    };
    let mut ris_list = vec![surface(d, -1.0, Network::A)?];
    if key.ris_count == 2 {
        ris_list.push(surface(-d, 1.0, Network::B)?);
    }
    let mut s = NetworkScenario::new(
        nb(cfg.nb_a_position)?,
        nb(cfg.nb_b_position)?,
        ue(drop.a)?,
        ue(drop.b)?,
        ris_list,
        cfg.carrier_hz,
        cfg.noise_variance,
    )?;
    s.load_probability = cfg.load_probability;
    s.direct_path_enabled = cfg.direct_path;
    s.path_loss = path_loss(&cfg.path_loss);
    s.subpath_power = cfg.subpath_power;
    s.quantization_bits = cfg.quantization_bits;
    s.consistent_energy_weighting = cfg.consistent_energy_weighting;
    s.idle_model = match cfg.idle_model {
        IdleModelConfig::Semistatic => IdleModel::Semistatic,
        IdleModelConfig::FreshPerSlot => IdleModel::FreshPerSlot,
    };
    s.validate()?;
    Ok(s)
}

/// One-line description for CSV metadata.
pub fn describe(cfg: &ScenarioConfig) -> String {
    let r = &cfg.ue_region;
    let pl = match cfg.path_loss {
        PathLossConfig::FreeSpace => "free_space".to_string(),
        PathLossConfig::LogDistance {
            reference_gain_db,
            reference_distance,
            exponent,
        } => format!(
            "log_distance(C0={reference_gain_db} dB at {reference_distance} m, n={exponent})"
        ),
    };
    format!(
        "nb_a={:?} nb_b={:?} nb_array={}x{} ris=(d,0,{}) facing -x, second ris=(-d,0,{}) facing +x, \
         ue x in [d{:+},d{:+}] y in [{},{}] z={} K={} spacing={} lambda, path_loss={} direct={} \
         subpath_power={} carrier={} Hz noise={} W p={} dBm slots={}",
        cfg.nb_a_position,
        cfg.nb_b_position,
        cfg.nb_array[0],
        cfg.nb_array[1],
        cfg.ris_height,
        cfg.ris_height,
        r.x_min_offset,
        r.x_max_offset,
        r.y_min,
        r.y_max,
        r.height,
        cfg.ue_antennas,
        cfg.element_spacing,
        pl,
        cfg.direct_path,
        cfg.subpath_power,
        cfg.carrier_hz,
        cfg.noise_variance,
        cfg.transmit_power_dbm,
        cfg.slots,
    )
}
