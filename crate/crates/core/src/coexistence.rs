//! End-to-end channels for two neighbouring networks sharing one or more
//! surfaces.
//!
//! Network A owns the primary surface and tunes it for `ue_a`; the signal of
//! network B towards `ue_b` crosses the same surface and picks up A's tuning.
//! Every operation here is a pure function of a [`NetworkScenario`] and a
//! [`Realization`] (the natural-scatter states and optional extra subpaths),
//! so sweeping a parameter with a fixed realization changes nothing else.
//!
//! Conventions:
//!
//! * Channels are `K x M` with `K` receive and `M` transmit antennas.
//! * Multi-antenna ends are collapsed onto their dominant singular direction
//!   before co-phasing; with `K = M = 1` the tuning is `phi_i = -arg(h_i g_i)`.
//! * The "other subpaths" term of each UE is added to every channel of that
//!   UE. It defaults to zero power.
//! * The filter equations are applied with the coefficients exactly as
//!   printed: energy factors `(beta, 1 - beta)` in the scattering mode and
//!   amplitude factors `(sqrt beta, sqrt(1 - beta))` for blocking. Setting
//!   `consistent_energy_weighting` switches the scattering mode to amplitude
//!   factors.

use rand::Rng;

use crate::channel::{cascade, los_channel_with, rayleigh_channel, ChannelMatrix};
use crate::error::{invalid, mismatch, Result};
use crate::geometry::{wavelength, ArrayGeometry, PathLoss};
use crate::linalg::dominant_right_singular_vector;
use crate::ris::{
    cophase_terms, extract_block, net_filter_energy, random_phase_tuning, BlockLabel,
    BlockPartition, FilterMode, FilterSpec, TuningMatrix,
};
use crate::{Complex, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Network {
    A,
    B,
}

impl Network {
    pub fn other(self) -> Self {
        match self {
            Network::A => Network::B,
            Network::B => Network::A,
        }
    }

    fn block(self) -> BlockLabel {
        match self {
            Network::A => BlockLabel::A,
            Network::B => BlockLabel::B,
        }
    }
}

/// A base station: its array and transmit power in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeConfig<T> {
    pub array: ArrayGeometry<T>,
    pub transmit_power: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RisNode<T> {
    pub array: ArrayGeometry<T>,
    pub owner: Network,
    pub filter: Option<FilterSpec<T>>,
    pub partition: Option<BlockPartition<T>>,
}

impl<T: Real> RisNode<T> {
    pub fn new(array: ArrayGeometry<T>, owner: Network) -> Self {
        Self {
            array,
            owner,
            filter: None,
            partition: None,
        }
    }

    pub fn with_filter(mut self, filter: FilterSpec<T>) -> Self {
        self.filter = Some(filter);
        self
    }

    pub fn with_partition(mut self, partition: BlockPartition<T>) -> Self {
        self.partition = Some(partition);
        self
    }

    pub fn len(&self) -> usize {
        self.array.len()
    }

    pub fn is_empty(&self) -> bool {
        self.array.is_empty()
    }
}

/// What an idle surface looks like in slots where its owner sends nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IdleModel {
    /// The trial's natural-scatter state `theta_0`, held for every idle slot.
    #[default]
    Semistatic,
    /// A fresh uniform random phase draw in every idle slot.
    FreshPerSlot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkScenario<T> {
    pub nb_a: NodeConfig<T>,
    pub nb_b: NodeConfig<T>,
    /// Receive arrays; their length is the UE antenna count `K`.
    pub ue_a: ArrayGeometry<T>,
    pub ue_b: ArrayGeometry<T>,
    pub ris_list: Vec<RisNode<T>>,
    pub carrier_hz: T,
    pub noise_variance: T,
    pub load_probability: T,
    pub direct_path_enabled: bool,
    pub path_loss: PathLoss<T>,
    /// Per-entry power of the Rayleigh "other subpaths" term.
    pub subpath_power: T,
    pub quantization_bits: Option<u8>,
    pub consistent_energy_weighting: bool,
    pub idle_model: IdleModel,
}

impl<T: Real> NetworkScenario<T> {
    /// Scenario with free-space segments, no direct path, no extra
    /// subpaths, continuous phases and full load.
    pub fn new(
        nb_a: NodeConfig<T>,
        nb_b: NodeConfig<T>,
        ue_a: ArrayGeometry<T>,
        ue_b: ArrayGeometry<T>,
        ris_list: Vec<RisNode<T>>,
        carrier_hz: T,
        noise_variance: T,
    ) -> Result<Self> {
        let s = Self {
            nb_a,
            nb_b,
            ue_a,
            ue_b,
            ris_list,
            carrier_hz,
            noise_variance,
            load_probability: T::one(),
            direct_path_enabled: false,
            path_loss: PathLoss::FreeSpace,
            subpath_power: T::zero(),
            quantization_bits: None,
            consistent_energy_weighting: false,
            idle_model: IdleModel::Semistatic,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn wavelength(&self) -> Result<T> {
        wavelength(self.carrier_hz)
    }

    pub fn nb(&self, net: Network) -> &NodeConfig<T> {
        match net {
            Network::A => &self.nb_a,
            Network::B => &self.nb_b,
        }
    }

    pub fn ue(&self, net: Network) -> &ArrayGeometry<T> {
        match net {
            Network::A => &self.ue_a,
            Network::B => &self.ue_b,
        }
    }

    /// Every node pair that forms a link must be separated; the two UEs (or
    /// the two base stations) may coincide.
    pub fn validate(&self) -> Result<()> {
        if self.ris_list.is_empty() {
            return Err(invalid("scenario needs at least one RIS"));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance > T::zero()) {
            return Err(invalid(format!(
                "noise variance must be positive, got {}",
                self.noise_variance
            )));
        }
        if !(self.load_probability >= T::zero() && self.load_probability <= T::one()) {
            return Err(invalid(format!(
                "load probability {} outside [0, 1]",
                self.load_probability
            )));
        }
        if !(self.subpath_power.is_finite() && self.subpath_power >= T::zero()) {
            return Err(invalid(format!(
                "subpath power must be non-negative, got {}",
                self.subpath_power
            )));
        }
        if let Some(b) = self.quantization_bits {
            if !(1..=8).contains(&b) {
                return Err(invalid(format!(
                    "quantization bits must be in 1..=8, got {b}"
                )));
            }
        }
        self.wavelength()?;
        for net in [Network::A, Network::B] {
            let p = self.nb(net).transmit_power;
            if !(p.is_finite() && p > T::zero()) {
                return Err(invalid(format!(
                    "nb_{net:?} transmit power must be positive, got {p}"
                )));
            }
        }
        let distinct = |a: &ArrayGeometry<T>, b: &ArrayGeometry<T>, what: &str| {
            if (a.position() - b.position()).norm() > T::zero() {
                Ok(())
            } else {
                Err(invalid(format!("{what} positions coincide")))
            }
        };
        for net in [Network::A, Network::B] {
            if self.direct_path_enabled {
                distinct(&self.nb(net).array, self.ue(net), "base station and UE")?;
            }
        }
        for (r, ris) in self.ris_list.iter().enumerate() {
            for net in [Network::A, Network::B] {
                distinct(&self.nb(net).array, &ris.array, "base station and RIS")?;
                distinct(&ris.array, self.ue(net), "RIS and UE")?;
            }
            for other in &self.ris_list[..r] {
                distinct(&ris.array, &other.array, "RIS")?;
            }
            if let Some(p) = &ris.partition {
                if p.len() != ris.len() {
                    return Err(mismatch("RIS partition length", ris.len(), p.len()));
                }
            }
        }
        Ok(())
    }

    /// Index of the first surface owned by network A.
    pub fn primary_ris(&self) -> Result<usize> {
        self.ris_list
            .iter()
            .position(|r| r.owner == Network::A)
            .ok_or_else(|| invalid("scenario has no RIS owned by network A"))
    }
}

/// Random state of one trial: natural-scatter tuning per surface and the
/// extra subpath term per UE.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization<T> {
    pub natural: Vec<TuningMatrix<T>>,
    pub subpath_a: ChannelMatrix<T>,
    pub subpath_b: ChannelMatrix<T>,
}

impl<T: Real> Realization<T> {
    /// Draws `theta_0` for each surface in list order, then the subpaths of
    /// `ue_a` and `ue_b`, all from one stream.
    pub fn draw<R: Rng + ?Sized>(scenario: &NetworkScenario<T>, rng: &mut R) -> Result<Self> {
        let natural = Self::draw_natural(scenario, rng)?;
        let (subpath_a, subpath_b) = Self::draw_subpaths(scenario, rng)?;
        Ok(Self {
            natural,
            subpath_a,
            subpath_b,
        })
    }

    /// Same draw order as [`draw`](Realization::draw) with the natural states
    /// and the subpaths on separate streams.
    pub fn draw_split<R: Rng + ?Sized, S: Rng + ?Sized>(
        scenario: &NetworkScenario<T>,
        scatter_rng: &mut R,
        subpath_rng: &mut S,
    ) -> Result<Self> {
        let natural = Self::draw_natural(scenario, scatter_rng)?;
        let (subpath_a, subpath_b) = Self::draw_subpaths(scenario, subpath_rng)?;
        Ok(Self {
            natural,
            subpath_a,
            subpath_b,
        })
    }

    fn draw_natural<R: Rng + ?Sized>(
        scenario: &NetworkScenario<T>,
        rng: &mut R,
    ) -> Result<Vec<TuningMatrix<T>>> {
        scenario
            .ris_list
            .iter()
            .map(|ris| random_phase_tuning(ris.len(), rng))
            .collect()
    }

    fn draw_subpaths<R: Rng + ?Sized>(
        scenario: &NetworkScenario<T>,
        rng: &mut R,
    ) -> Result<(ChannelMatrix<T>, ChannelMatrix<T>)> {
        let mut sub = |net: Network| {
            rayleigh_channel(
                scenario.ue(net).len(),
                scenario.nb(net).array.len(),
                scenario.subpath_power,
                rng,
            )
        };
        Ok((sub(Network::A)?, sub(Network::B)?))
    }

    pub fn subpath(&self, net: Network) -> &ChannelMatrix<T> {
        match net {
            Network::A => &self.subpath_a,
            Network::B => &self.subpath_b,
        }
    }
}

/// Line-of-sight segments of one surface.
#[derive(Debug, Clone, PartialEq)]
pub struct RisSegments<T> {
    /// `nb_a -> ris`, `N x M_a`.
    pub g_a: ChannelMatrix<T>,
    /// `nb_b -> ris`, `N x M_b`.
    pub g_b: ChannelMatrix<T>,
    /// `ris -> ue_a`, `K_a x N`.
    pub h_a: ChannelMatrix<T>,
    /// `ris -> ue_b`, `K_b x N`.
    pub h_b: ChannelMatrix<T>,
    terms_a: Vec<Complex<T>>,
    terms_b: Vec<Complex<T>>,
}

impl<T: Real> RisSegments<T> {
    pub fn g(&self, net: Network) -> &ChannelMatrix<T> {
        match net {
            Network::A => &self.g_a,
            Network::B => &self.g_b,
        }
    }

    pub fn h(&self, net: Network) -> &ChannelMatrix<T> {
        match net {
            Network::A => &self.h_a,
            Network::B => &self.h_b,
        }
    }

    /// Per-element cascaded gains of `net`'s link after beam collapse.
    pub fn terms(&self, net: Network) -> &[Complex<T>] {
        match net {
            Network::A => &self.terms_a,
            Network::B => &self.terms_b,
        }
    }
}

/// One slot of the load model, seen by the nontarget UE.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotChannelSample<T> {
    pub h_eff: ChannelMatrix<T>,
    pub tuned: bool,
}

pub type SlotChannels<T> = Vec<SlotChannelSample<T>>;

/// Block-A and block-B tunings of one surface; `None` for an empty block.
pub type BlockTunings<T> = (Option<TuningMatrix<T>>, Option<TuningMatrix<T>>);

/// The surface state applied in slots where network A is active.
#[derive(Debug, Clone, PartialEq)]
pub enum SlotMechanism<T> {
    Normal,
    Filter(FilterSpec<T>),
    Blocking(BlockPartition<T>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluctuationStat<T> {
    pub mean: T,
    pub variance: T,
    pub cov: T,
}

/// Precomputed segments and optimal tunings for one scenario and realization.
#[derive(Debug, Clone)]
pub struct Coexistence<T> {
    scenario: NetworkScenario<T>,
    realization: Realization<T>,
    segments: Vec<RisSegments<T>>,
    direct_a: Option<ChannelMatrix<T>>,
    direct_b: Option<ChannelMatrix<T>>,
    direct_eff_a: Complex<T>,
    direct_eff_b: Complex<T>,
    tuned: Vec<TuningMatrix<T>>,
}

fn zero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

/// Unit-norm dominant right singular direction, phase-normalised so its
/// first non-negligible entry is real positive. A single column gives `[1]`.
fn transmit_beam<T: Real>(m: &ChannelMatrix<T>) -> Vec<Complex<T>> {
    if m.cols() == 1 {
        return vec![Complex::new(T::one(), T::zero())];
    }
    let v = dominant_right_singular_vector(m);
    let peak = v.iter().map(|z| z.norm()).fold(T::zero(), T::max);
    match v.iter().find(|z| z.norm() > peak * T::lit(1e-6)) {
        Some(&first) if first.norm() > T::zero() => {
            let rot = first.conj() / first.norm();
            v.into_iter().map(|z| z * rot).collect()
        }
        _ => v,
    }
}

fn collapse<T: Real>(h: &ChannelMatrix<T>, g: &ChannelMatrix<T>) -> Vec<Complex<T>> {
    let w = transmit_beam(&h.conj_transpose());
    let v = transmit_beam(g);
    let g_eff = g.apply(&v).expect("beam length matches");
    (0..h.cols())
        .map(|i| {
            let h_i = (0..h.rows()).fold(zero::<T>(), |acc, r| acc + w[r].conj() * h[(r, i)]);
            h_i * g_eff[i]
        })
        .collect()
}

fn collapse_direct<T: Real>(d: &ChannelMatrix<T>) -> Complex<T> {
    let w = transmit_beam(&d.conj_transpose());
    let v = transmit_beam(d);
    let dv = d.apply(&v).expect("beam length matches");
    w.iter()
        .zip(&dv)
        .fold(zero::<T>(), |acc, (a, b)| acc + a.conj() * b)
}

/// Tuning that co-phases `terms`; with continuous phases the sum is also
/// aligned to the direct component when there is one.
fn link_tuning<T: Real>(
    terms: &[Complex<T>],
    direct: Complex<T>,
    bits: Option<u8>,
) -> Result<TuningMatrix<T>> {
    let theta = cophase_terms(terms, bits)?;
    if bits.is_some() || direct.norm_sqr() == T::zero() {
        return Ok(theta);
    }
    let rot = direct.arg();
    TuningMatrix::new(
        theta.amplitudes().to_vec(),
        theta.phases().iter().map(|&p| p + rot).collect(),
    )
}

/// Zero-amplitude elements outside `label`, the block tuning inside.
fn masked_block<T: Real>(
    partition: &BlockPartition<T>,
    block: Option<&TuningMatrix<T>>,
    label: BlockLabel,
) -> Result<TuningMatrix<T>> {
    let n = partition.len();
    let mut amplitudes = vec![T::zero(); n];
    let mut phases = vec![T::zero(); n];
    if let Some(block) = block {
        for (k, i) in partition.indices(label).into_iter().enumerate() {
            amplitudes[i] = block.amplitudes()[k];
            phases[i] = block.phases()[k];
        }
    }
    TuningMatrix::new(amplitudes, phases)
}

fn add<T: Real>(a: ChannelMatrix<T>, b: &ChannelMatrix<T>) -> Result<ChannelMatrix<T>> {
    a.try_add(b)
}

impl<T: Real> Coexistence<T> {
    pub fn new(scenario: &NetworkScenario<T>, realization: Realization<T>) -> Result<Self> {
        scenario.validate()?;
        if realization.natural.len() != scenario.ris_list.len() {
            return Err(mismatch(
                "realization surfaces",
                scenario.ris_list.len(),
                realization.natural.len(),
            ));
        }
        for (theta, ris) in realization.natural.iter().zip(&scenario.ris_list) {
            if theta.len() != ris.len() {
                return Err(mismatch(
                    "realization natural tuning",
                    ris.len(),
                    theta.len(),
                ));
            }
        }
        for net in [Network::A, Network::B] {
            let expected = (scenario.ue(net).len(), scenario.nb(net).array.len());
            if realization.subpath(net).shape() != expected {
                return Err(mismatch(
                    "realization subpath",
                    format!("{expected:?}"),
                    format!("{:?}", realization.subpath(net).shape()),
                ));
            }
        }
        let lambda = scenario.wavelength()?;
        let pl = &scenario.path_loss;
        let link =
            |tx: &ArrayGeometry<T>, rx: &ArrayGeometry<T>| los_channel_with(tx, rx, lambda, pl);

        let (direct_a, direct_b) = if scenario.direct_path_enabled {
            (
                Some(link(&scenario.nb_a.array, &scenario.ue_a)?),
                Some(link(&scenario.nb_b.array, &scenario.ue_b)?),
            )
        } else {
            (None, None)
        };
        let direct_eff_a = direct_a.as_ref().map_or(zero(), collapse_direct);
        let direct_eff_b = direct_b.as_ref().map_or(zero(), collapse_direct);

        let mut segments = Vec::with_capacity(scenario.ris_list.len());
        let mut tuned = Vec::with_capacity(scenario.ris_list.len());
        for ris in &scenario.ris_list {
            let g_a = link(&scenario.nb_a.array, &ris.array)?;
            let g_b = link(&scenario.nb_b.array, &ris.array)?;
            let h_a = link(&ris.array, &scenario.ue_a)?;
            let h_b = link(&ris.array, &scenario.ue_b)?;
            let terms_a = collapse(&h_a, &g_a);
            let terms_b = collapse(&h_b, &g_b);
            let seg = RisSegments {
                g_a,
                g_b,
                h_a,
                h_b,
                terms_a,
                terms_b,
            };
            let direct = match ris.owner {
                Network::A => direct_eff_a,
                Network::B => direct_eff_b,
            };
            tuned.push(link_tuning(
                seg.terms(ris.owner),
                direct,
                scenario.quantization_bits,
            )?);
            segments.push(seg);
        }
        Ok(Self {
            scenario: scenario.clone(),
            realization,
            segments,
            direct_a,
            direct_b,
            direct_eff_a,
            direct_eff_b,
            tuned,
        })
    }

    pub fn draw<R: Rng + ?Sized>(scenario: &NetworkScenario<T>, rng: &mut R) -> Result<Self> {
        let realization = Realization::draw(scenario, rng)?;
        Self::new(scenario, realization)
    }

    pub fn scenario(&self) -> &NetworkScenario<T> {
        &self.scenario
    }

    pub fn realization(&self) -> &Realization<T> {
        &self.realization
    }

    pub fn segments(&self, ris: usize) -> &RisSegments<T> {
        &self.segments[ris]
    }

    pub fn direct(&self, net: Network) -> Option<&ChannelMatrix<T>> {
        match net {
            Network::A => self.direct_a.as_ref(),
            Network::B => self.direct_b.as_ref(),
        }
    }

    /// Owner-optimised tuning of surface `ris`.
    pub fn tuned(&self, ris: usize) -> &TuningMatrix<T> {
        &self.tuned[ris]
    }

    pub fn natural_tuning(&self, ris: usize) -> &TuningMatrix<T> {
        &self.realization.natural[ris]
    }

    fn direct_eff(&self, net: Network) -> Complex<T> {
        match net {
            Network::A => self.direct_eff_a,
            Network::B => self.direct_eff_b,
        }
    }

    fn primary(&self) -> usize {
        // validated at construction for the operations that need it
        self.scenario.primary_ris().unwrap_or(0)
    }

    fn through(
        &self,
        ris: usize,
        net: Network,
        theta: &TuningMatrix<T>,
    ) -> Result<ChannelMatrix<T>> {
        let seg = &self.segments[ris];
        cascade(seg.h(net), theta, seg.g(net), None)
    }

    /// Adds the direct path (when enabled) and the subpath term of `net`.
    fn finish(&self, net: Network, core: ChannelMatrix<T>) -> Result<ChannelMatrix<T>> {
        let core = match self.direct(net) {
            Some(d) => add(core, d)?,
            None => core,
        };
        add(core, self.realization.subpath(net))
    }

    fn require_primary(&self) -> Result<usize> {
        self.scenario.primary_ris()?;
        Ok(self.primary())
    }

    /// `ue_a`'s channel through the primary surface tuned for it.
    pub fn target(&self) -> Result<ChannelMatrix<T>> {
        let r = self.require_primary()?;
        self.finish(Network::A, self.through(r, Network::A, &self.tuned[r])?)
    }

    /// `ue_b`'s channel through the primary surface carrying A's tuning.
    pub fn nontarget(&self) -> Result<ChannelMatrix<T>> {
        let r = self.require_primary()?;
        self.nontarget_with(&self.tuned[r].clone())
    }

    /// `ue_b`'s channel with an arbitrary state on the primary surface.
    pub fn nontarget_with(&self, theta: &TuningMatrix<T>) -> Result<ChannelMatrix<T>> {
        let r = self.require_primary()?;
        self.finish(Network::B, self.through(r, Network::B, theta)?)
    }

    /// `ue_b`'s channel with the surface in its natural-scatter state.
    pub fn natural(&self) -> Result<ChannelMatrix<T>> {
        let r = self.require_primary()?;
        self.nontarget_with(&self.realization.natural[r].clone())
    }

    /// Absorbing filter: only `beta_net` of the nontarget signal is tuned.
    pub fn absorption(&self, filter: &FilterSpec<T>) -> Result<ChannelMatrix<T>> {
        let r = self.require_primary()?;
        self.absorption_with(filter, &self.tuned[r].clone())
    }

    fn absorption_with(
        &self,
        filter: &FilterSpec<T>,
        theta: &TuningMatrix<T>,
    ) -> Result<ChannelMatrix<T>> {
        if filter.mode() != FilterMode::Absorption {
            return Err(invalid(
                "absorption channel needs an absorption-mode filter",
            ));
        }
        let r = self.primary();
        let beta = net_filter_energy(filter);
        self.finish(
            Network::B,
            self.through(r, Network::B, theta)?.scale_real(beta),
        )
    }

    /// Scattering filter: `beta_net` of the nontarget signal is scattered
    /// with the natural state, the rest is tuned.
    pub fn scattering(&self, filter: &FilterSpec<T>) -> Result<ChannelMatrix<T>> {
        let r = self.require_primary()?;
        self.scattering_with(filter, &self.tuned[r].clone())
    }

    fn scattering_weights(&self, beta: T) -> (T, T) {
        if self.scenario.consistent_energy_weighting {
            (beta.sqrt(), (T::one() - beta).sqrt())
        } else {
            (beta, T::one() - beta)
        }
    }

    fn scattering_with(
        &self,
        filter: &FilterSpec<T>,
        theta: &TuningMatrix<T>,
    ) -> Result<ChannelMatrix<T>> {
        if filter.mode() != FilterMode::Scattering {
            return Err(invalid("scattering channel needs a scattering-mode filter"));
        }
        let r = self.primary();
        let (w0, w1) = self.scattering_weights(net_filter_energy(filter));
        let natural = self
            .through(r, Network::B, &self.realization.natural[r])?
            .scale_real(w0);
        let tuned = self.through(r, Network::B, theta)?.scale_real(w1);
        self.finish(Network::B, add(natural, &tuned)?)
    }

    /// Dispatches on the filter mode.
    pub fn filtered(&self, filter: &FilterSpec<T>) -> Result<ChannelMatrix<T>> {
        match filter.mode() {
            FilterMode::Absorption => self.absorption(filter),
            FilterMode::Scattering => self.scattering(filter),
        }
    }

    fn dual_pair(&self) -> Result<[usize; 2]> {
        if self.scenario.ris_list.len() != 2 {
            return Err(invalid(format!(
                "dual-RIS channel needs exactly two surfaces, found {}",
                self.scenario.ris_list.len()
            )));
        }
        let a = self
            .scenario
            .ris_list
            .iter()
            .position(|r| r.owner == Network::A);
        let b = self
            .scenario
            .ris_list
            .iter()
            .position(|r| r.owner == Network::B);
        match (a, b) {
            (Some(a), Some(b)) => Ok([a, b]),
            _ => Err(invalid(
                "dual-RIS channel needs one surface owned by each network",
            )),
        }
    }

    /// Two surfaces, one per network, with the filters stored in the
    /// scenario. See [`dual_ris_filtered`](Coexistence::dual_ris_filtered).
    pub fn dual_ris(&self) -> Result<(ChannelMatrix<T>, ChannelMatrix<T>)> {
        let filters = self.stored_filters();
        self.dual_ris_filtered(&filters)
    }

    fn stored_filters(&self) -> Vec<Option<FilterSpec<T>>> {
        self.scenario.ris_list.iter().map(|r| r.filter).collect()
    }

    /// Each UE gets its own surface's tuned path plus the foreign surface's
    /// path filtered by that surface's filter (`filters[r]` belongs to
    /// surface `r`): an absorbing filter keeps `beta_net` of the foreign
    /// tuning, a scattering filter splits it like the single-surface
    /// scattering mode, and no filter passes the full foreign tuning.
    /// Returns `(ue_a, ue_b)`.
    pub fn dual_ris_filtered(
        &self,
        filters: &[Option<FilterSpec<T>>],
    ) -> Result<(ChannelMatrix<T>, ChannelMatrix<T>)> {
        self.dual_ris_state(filters, false)
    }

    /// What each network measured before the foreign surface was tuned: the
    /// same expression with the foreign tuning replaced by its natural state.
    pub fn dual_ris_snapshot(
        &self,
        filters: &[Option<FilterSpec<T>>],
    ) -> Result<(ChannelMatrix<T>, ChannelMatrix<T>)> {
        self.dual_ris_state(filters, true)
    }

    fn dual_ris_state(
        &self,
        filters: &[Option<FilterSpec<T>>],
        foreign_natural: bool,
    ) -> Result<(ChannelMatrix<T>, ChannelMatrix<T>)> {
        let [ra, rb] = self.dual_pair()?;
        if filters.len() != 2 {
            return Err(mismatch("dual-RIS filters", 2, filters.len()));
        }
        let ue = |net: Network, own: usize, foreign: usize| -> Result<ChannelMatrix<T>> {
            let own_term = self.through(own, net, &self.tuned[own])?;
            let foreign_theta = if foreign_natural {
                &self.realization.natural[foreign]
            } else {
                &self.tuned[foreign]
            };
            let tuned_foreign = self.through(foreign, net, foreign_theta)?;
            let foreign_term = match &filters[foreign] {
                None => tuned_foreign,
                Some(f) => {
                    let beta = net_filter_energy(f);
                    match f.mode() {
                        FilterMode::Absorption => tuned_foreign.scale_real(beta),
                        FilterMode::Scattering => {
                            let (w0, w1) = self.scattering_weights(beta);
                            let natural = self
                                .through(foreign, net, &self.realization.natural[foreign])?
                                .scale_real(w0);
                            add(natural, &tuned_foreign.scale_real(w1))?
                        }
                    }
                }
            };
            self.finish(net, add(own_term, &foreign_term)?)
        };
        Ok((ue(Network::A, ra, rb)?, ue(Network::B, rb, ra)?))
    }

    /// Both UEs with every surface in its natural-scatter state.
    pub fn all_natural(&self) -> Result<(ChannelMatrix<T>, ChannelMatrix<T>)> {
        let ue = |net: Network| -> Result<ChannelMatrix<T>> {
            let mut sum = self.through(0, net, &self.realization.natural[0])?;
            for r in 1..self.segments.len() {
                sum = add(sum, &self.through(r, net, &self.realization.natural[r])?)?;
            }
            self.finish(net, sum)
        };
        Ok((ue(Network::A)?, ue(Network::B)?))
    }

    /// Block tunings of surface `ris`: block A co-phased for `ue_a`, block B
    /// for `ue_b`. Empty blocks give `None`.
    pub fn block_tunings(
        &self,
        ris: usize,
        partition: &BlockPartition<T>,
    ) -> Result<BlockTunings<T>> {
        let seg = &self.segments[ris];
        if partition.len() != seg.terms_a.len() {
            return Err(mismatch(
                "blocking partition length",
                seg.terms_a.len(),
                partition.len(),
            ));
        }
        let tune = |net: Network| -> Result<Option<TuningMatrix<T>>> {
            let idx = partition.indices(net.block());
            if idx.is_empty() {
                return Ok(None);
            }
            let terms: Vec<_> = idx.iter().map(|&i| seg.terms(net)[i]).collect();
            link_tuning(
                &terms,
                self.direct_eff(net),
                self.scenario.quantization_bits,
            )
            .map(Some)
        };
        Ok((tune(Network::A)?, tune(Network::B)?))
    }

    fn partitions(&self) -> Result<Vec<BlockPartition<T>>> {
        self.scenario
            .ris_list
            .iter()
            .map(|r| r.partition.clone())
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| invalid("blocking needs a partition on every surface"))
    }

    /// Blocking with the partitions stored in the scenario. See
    /// [`blocking_with`](Coexistence::blocking_with).
    pub fn blocking(&self) -> Result<(ChannelMatrix<T>, ChannelMatrix<T>)> {
        let parts = self.partitions()?;
        self.blocking_with(&parts)
    }

    /// Every surface split into block A (tuned for `ue_a`) and block B (tuned
    /// for `ue_b`); a partition per surface, all with the same energy split
    /// `beta`.
    ///
    /// `ue_a = sqrt(beta) (sum of block-A paths + direct) + sqrt(1 - beta) (sum of block-B paths)`
    /// and symmetrically for `ue_b` with `beta` and `1 - beta` exchanged.
    /// Returns `(ue_a, ue_b)`.
    pub fn blocking_with(
        &self,
        partitions: &[BlockPartition<T>],
    ) -> Result<(ChannelMatrix<T>, ChannelMatrix<T>)> {
        self.blocking_with_idle(partitions, None)
    }

    /// As [`blocking_with`](Coexistence::blocking_with), but with the block-A
    /// coefficients of surface `r` taken from `idle_a[r]` (a full-surface
    /// state) instead of the tuning for `ue_a`.
    pub fn blocking_with_idle(
        &self,
        partitions: &[BlockPartition<T>],
        idle_a: Option<&[TuningMatrix<T>]>,
    ) -> Result<(ChannelMatrix<T>, ChannelMatrix<T>)> {
        let states = self.block_states(partitions, idle_a)?;
        let beta = partitions[0].energy_split();
        Ok((
            self.blocked_ue(Network::A, beta, &states)?,
            self.blocked_ue(Network::B, beta, &states)?,
        ))
    }

    /// Masked full-surface tunings `(block A, block B)` per surface.
    fn block_states(
        &self,
        partitions: &[BlockPartition<T>],
        idle_a: Option<&[TuningMatrix<T>]>,
    ) -> Result<Vec<(TuningMatrix<T>, TuningMatrix<T>)>> {
        if partitions.len() != self.segments.len() {
            return Err(mismatch(
                "blocking partitions",
                self.segments.len(),
                partitions.len(),
            ));
        }
        if let Some(idle) = idle_a {
            if idle.len() != self.segments.len() {
                return Err(mismatch(
                    "blocking idle states",
                    self.segments.len(),
                    idle.len(),
                ));
            }
        }
        let beta = partitions[0].energy_split();
        if partitions.iter().any(|p| p.energy_split() != beta) {
            return Err(invalid("blocking partitions must share one energy split"));
        }
        partitions
            .iter()
            .enumerate()
            .map(|(r, p)| {
                let (ta, tb) = self.block_tunings(r, p)?;
                let ta = match idle_a {
                    Some(idle) if p.block_len(BlockLabel::A) > 0 => {
                        Some(extract_block(p, &idle[r], BlockLabel::A)?)
                    }
                    _ => ta,
                };
                Ok((
                    masked_block(p, ta.as_ref(), BlockLabel::A)?,
                    masked_block(p, tb.as_ref(), BlockLabel::B)?,
                ))
            })
            .collect()
    }

    fn blocked_ue(
        &self,
        net: Network,
        beta: T,
        states: &[(TuningMatrix<T>, TuningMatrix<T>)],
    ) -> Result<ChannelMatrix<T>> {
        let (own_w, other_w) = match net {
            Network::A => (beta.sqrt(), (T::one() - beta).sqrt()),
            Network::B => ((T::one() - beta).sqrt(), beta.sqrt()),
        };
        let (k, m) = (
            self.scenario.ue(net).len(),
            self.scenario.nb(net).array.len(),
        );
        let mut own = ChannelMatrix::zeros(k, m)?;
        let mut other = ChannelMatrix::zeros(k, m)?;
        for (r, (ta, tb)) in states.iter().enumerate() {
            let (own_t, other_t) = match net {
                Network::A => (ta, tb),
                Network::B => (tb, ta),
            };
            let own_path = self.through(r, net, own_t)?;
            let other_path = self.through(r, net, other_t)?;
            // a single surface keeps the bare cascade so no zero is added
            own = if r == 0 {
                own_path
            } else {
                add(own, &own_path)?
            };
            other = if r == 0 {
                other_path
            } else {
                add(other, &other_path)?
            };
        }
        if let Some(d) = self.direct(net) {
            own = add(own, d)?;
        }
        let core = add(own.scale_real(own_w), &other.scale_real(other_w))?;
        add(core, self.realization.subpath(net))
    }

    /// Nontarget (`ue_b`) channel and tuned flag for one slot at the
    /// scenario's load. See [`slot_channel_at`](Coexistence::slot_channel_at).
    pub fn slot_channel<R: Rng + ?Sized>(
        &self,
        mechanism: &SlotMechanism<T>,
        rng: &mut R,
    ) -> Result<SlotChannelSample<T>> {
        self.slot_channel_at(mechanism, self.scenario.load_probability, rng)
    }

    /// One slot at load `x`: a uniform draw `u < x` means network A is active
    /// and its surface state carries A's tuning; otherwise A's part of every
    /// surface follows the scenario's [`IdleModel`]. Only the first draw of
    /// each slot decides the flag, so with a shared stream the active slots
    /// at a smaller `x` are a subset of those at a larger one.
    pub fn slot_channel_at<R: Rng + ?Sized>(
        &self,
        mechanism: &SlotMechanism<T>,
        load_probability: T,
        rng: &mut R,
    ) -> Result<SlotChannelSample<T>> {
        if !(load_probability >= T::zero() && load_probability <= T::one()) {
            return Err(invalid(format!(
                "load probability {load_probability} outside [0, 1]"
            )));
        }
        let r = self.require_primary()?;
        let u: f64 = rng.random();
        let tuned = u < load_probability.as_f64();
        let idle: Option<Vec<TuningMatrix<T>>> = if tuned {
            None
        } else {
            Some(match self.scenario.idle_model {
                IdleModel::Semistatic => self.realization.natural.clone(),
                IdleModel::FreshPerSlot => self
                    .segments
                    .iter()
                    .map(|s| random_phase_tuning(s.terms_a.len(), rng))
                    .collect::<Result<_>>()?,
            })
        };
        let h_eff = match mechanism {
            SlotMechanism::Normal => match &idle {
                None => self.nontarget()?,
                Some(theta) => self.nontarget_with(&theta[r])?,
            },
            SlotMechanism::Filter(f) => {
                let theta = idle.as_ref().map_or(&self.tuned[r], |t| &t[r]);
                match f.mode() {
                    FilterMode::Absorption => self.absorption_with(f, theta)?,
                    FilterMode::Scattering => self.scattering_with(f, theta)?,
                }
            }
            SlotMechanism::Blocking(p) => {
                let parts = vec![p.clone(); self.segments.len()];
                let states = self.block_states(&parts, idle.as_deref())?;
                self.blocked_ue(Network::B, p.energy_split(), &states)?
            }
        };
        Ok(SlotChannelSample { h_eff, tuned })
    }

    pub fn slot_channels<R: Rng + ?Sized>(
        &self,
        mechanism: &SlotMechanism<T>,
        slots: usize,
        rng: &mut R,
    ) -> Result<SlotChannels<T>> {
        (0..slots)
            .map(|_| self.slot_channel(mechanism, rng))
            .collect()
    }
}

/// Mean, unbiased variance and coefficient of variation of `||h_eff||_F^2`
/// across slots.
pub fn gain_fluctuation_stat<T: Real>(
    samples: &[SlotChannelSample<T>],
) -> Result<FluctuationStat<T>> {
    if samples.len() < 2 {
        return Err(invalid(format!(
            "fluctuation statistic needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let gains: Vec<T> = samples
        .iter()
        .map(|s| s.h_eff.frobenius_norm_sqr())
        .collect();
    let n = T::from_usize(gains.len()).unwrap();
    let mean = gains.iter().copied().sum::<T>() / n;
    let variance = gains.iter().map(|&g| (g - mean) * (g - mean)).sum::<T>() / (n - T::one());
    let sd = variance.sqrt();
    let cov = if mean > T::zero() {
        sd / mean
    } else if sd == T::zero() {
        T::zero()
    } else {
        T::infinity()
    };
    Ok(FluctuationStat {
        mean,
        variance,
        cov,
    })
}
