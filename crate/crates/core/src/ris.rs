//! Surface configuration: tuning matrices, phase optimisation, out-of-band
//! filter layers and static block partitions.

use rand::Rng;

use crate::channel::ChannelMatrix;
use crate::error::{invalid, mismatch, Result};
use crate::{Complex, Real};

/// Diagonal reflection matrix `diag(beta_i e^{j phi_i})`.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningMatrix<T> {
    amplitudes: Vec<T>,
    phases: Vec<T>,
}

fn wrap_phase<T: Real>(phi: T) -> T {
    let tau = T::TAU();
    let w = phi % tau;
    let w = if w < T::zero() { w + tau } else { w };
    if w >= tau {
        T::zero()
    } else {
        w
    }
}

impl<T: Real> TuningMatrix<T> {
    /// Amplitudes must lie in `[0, 1]`; phases are wrapped into `[0, 2pi)`.
    pub fn new(amplitudes: Vec<T>, phases: Vec<T>) -> Result<Self> {
        if amplitudes.len() != phases.len() {
            return Err(mismatch("TuningMatrix", amplitudes.len(), phases.len()));
        }
        if amplitudes.is_empty() {
            return Err(invalid("tuning matrix needs at least one element"));
        }
        if let Some(b) = amplitudes
            .iter()
            .find(|b| !(b.is_finite() && **b >= T::zero() && **b <= T::one()))
        {
            return Err(invalid(format!("element amplitude {b} outside [0, 1]")));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(invalid("element phases must be finite"));
        }
        let phases = phases.into_iter().map(wrap_phase).collect();
        Ok(Self { amplitudes, phases })
    }

    /// Lossless elements with the given phases.
    pub fn from_phases(phases: Vec<T>) -> Result<Self> {
        Self::new(vec![T::one(); phases.len()], phases)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            amplitudes: vec![T::one(); n],
            phases: vec![T::zero(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn amplitudes(&self) -> &[T] {
        &self.amplitudes
    }

    pub fn phases(&self) -> &[T] {
        &self.phases
    }

    pub fn coefficients(&self) -> Vec<Complex<T>> {
        self.amplitudes
            .iter()
            .zip(&self.phases)
            .map(|(&b, &p)| Complex::from_polar(b, p))
            .collect()
    }

    /// Scales every amplitude by `factor` in `[0, 1]`.
    pub fn attenuated(&self, factor: T) -> Result<Self> {
        Self::new(
            self.amplitudes.iter().map(|&b| b * factor).collect(),
            self.phases.clone(),
        )
    }
}

/// `sum_i h_i theta_i g_i` for scalar antennas.
pub fn effective_gain<T: Real>(
    h: &[Complex<T>],
    theta: &TuningMatrix<T>,
    g: &[Complex<T>],
) -> Complex<T> {
    h.iter()
        .zip(theta.coefficients())
        .zip(g)
        .fold(Complex::new(T::zero(), T::zero()), |acc, ((h, t), g)| {
            acc + h * t * g
        })
}

fn cascaded_terms<T: Real>(
    h_rx: &ChannelMatrix<T>,
    g_tx: &ChannelMatrix<T>,
) -> Result<Vec<Complex<T>>> {
    if h_rx.rows() != 1 {
        return Err(mismatch(
            "optimize_phases receive segment rows",
            1,
            h_rx.rows(),
        ));
    }
    if g_tx.cols() != 1 {
        return Err(mismatch(
            "optimize_phases transmit segment columns",
            1,
            g_tx.cols(),
        ));
    }
    if h_rx.cols() != g_tx.rows() {
        return Err(mismatch(
            "optimize_phases element count",
            h_rx.cols(),
            g_tx.rows(),
        ));
    }
    Ok(h_rx
        .row(0)
        .iter()
        .zip(g_tx.as_slice())
        .map(|(h, g)| h * g)
        .collect())
}

/// Co-phasing tuning for a `1 x N` / `N x 1` cascade.
///
/// Without quantisation every term ends up at phase zero, so
/// `|sum h_i theta_i g_i| = sum |h_i||g_i|`. With `b` bits the phases are
/// restricted to `{2 pi k / 2^b}`; each element takes the grid point nearest
/// to its co-phasing angle relative to a common reference, and the reference
/// is swept over all assignment changes so the returned state maximises the
/// quantised objective exactly. Elements whose cascaded term is zero get
/// phase 0.
pub fn optimize_phases<T: Real>(
    h_rx: &ChannelMatrix<T>,
    g_tx: &ChannelMatrix<T>,
    quantization_bits: Option<u8>,
) -> Result<TuningMatrix<T>> {
    let terms = cascaded_terms(h_rx, g_tx)?;
    cophase_terms(&terms, quantization_bits)
}

/// Same as [`optimize_phases`] but on precomputed terms `a_i = h_i g_i`.
pub fn cophase_terms<T: Real>(
    terms: &[Complex<T>],
    quantization_bits: Option<u8>,
) -> Result<TuningMatrix<T>> {
    if terms.is_empty() {
        return Err(invalid("phase optimisation needs at least one element"));
    }
    match quantization_bits {
        None => {
            let phases = terms
                .iter()
                .map(|a| {
                    if a.norm_sqr() == T::zero() {
                        T::zero()
                    } else {
                        -a.arg()
                    }
                })
                .collect();
            TuningMatrix::from_phases(phases)
        }
        Some(b) if (1..=8).contains(&b) => quantized_cophase(terms, 1usize << b),
        Some(b) => Err(invalid(format!(
            "quantization bits must be in 1..=8, got {b}"
        ))),
    }
}

fn quantized_cophase<T: Real>(terms: &[Complex<T>], levels: usize) -> Result<TuningMatrix<T>> {
    let tau = std::f64::consts::TAU;
    let step = tau / levels as f64;
    let args: Vec<Option<f64>> = terms
        .iter()
        .map(|a| (a.norm_sqr() > T::zero()).then(|| a.arg().as_f64()))
        .collect();

    // grid index chosen for element i at reference psi
    let index_at = |psi: f64, alpha: f64| -> usize {
        let x = (psi - alpha) / step;
        // ties go to the smaller phase
        let k = (x - 0.5).ceil();
        k.rem_euclid(levels as f64) as usize % levels
    };
    let grid: Vec<Complex<f64>> = (0..levels)
        .map(|k| Complex::from_polar(1.0, step * k as f64))
        .collect();
    let terms64: Vec<Complex<f64>> = terms
        .iter()
        .map(|a| Complex::new(a.re.as_f64(), a.im.as_f64()))
        .collect();

    // every psi at which some element moves to the next grid point
    let mut events: Vec<(f64, usize)> = Vec::new();
    for (i, alpha) in args.iter().enumerate() {
        if let Some(alpha) = alpha {
            for m in 0..levels {
                let psi = (alpha + (m as f64 + 0.5) * step).rem_euclid(tau);
                events.push((psi, i));
            }
        }
    }
    if events.is_empty() {
        return TuningMatrix::from_phases(vec![T::zero(); terms.len()]);
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let assignment = |psi: f64| -> Vec<usize> {
        args.iter()
            .map(|a| a.map_or(0, |alpha| index_at(psi, alpha)))
            .collect()
    };

    // one representative psi strictly inside each interval between events
    let mut candidates = Vec::with_capacity(events.len());
    for w in 0..events.len() {
        let lo = events[w].0;
        let hi = if w + 1 < events.len() {
            events[w + 1].0
        } else {
            events[0].0 + tau
        };
        if hi > lo {
            candidates.push(0.5 * (lo + hi));
        }
    }
    if candidates.is_empty() {
        candidates.push(events[0].0 + 0.5 * step);
    }

    // incremental sweep over the candidate intervals
    let mut ks = assignment(candidates[0]);
    let mut sum = ks
        .iter()
        .zip(&terms64)
        .fold(Complex::new(0.0, 0.0), |acc, (&k, a)| acc + a * grid[k]);
    let mut best = (sum.norm(), candidates[0]);
    let mut e = events.partition_point(|ev| ev.0 <= candidates[0]);
    for &psi in &candidates[1..] {
        while e < events.len() && events[e].0 <= psi {
            let i = events[e].1;
            let next = (ks[i] + 1) % levels;
            sum += terms64[i] * (grid[next] - grid[ks[i]]);
            ks[i] = next;
            e += 1;
        }
        let val = sum.norm();
        if val > best.0 {
            best = (val, psi);
        }
    }

    let chosen = assignment(best.1);
    let phases = chosen.iter().map(|&k| T::lit(step * k as f64)).collect();
    TuningMatrix::from_phases(phases)
}

/// Lossless natural-scatter surrogate with i.i.d. uniform phases.
pub fn random_phase_tuning<T: Real, R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
) -> Result<TuningMatrix<T>> {
    if n == 0 {
        return Err(invalid("random tuning needs at least one element"));
    }
    let tau = std::f64::consts::TAU;
    let phases = (0..n).map(|_| T::lit(rng.random::<f64>() * tau)).collect();
    TuningMatrix::from_phases(phases)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    Absorption,
    Scattering,
}

/// Out-of-band filter layer. `per_pass_energy` is the fraction of energy kept
/// on one crossing; a reflecting surface crosses twice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec<T> {
    mode: FilterMode,
    per_pass_energy: T,
    passes: u8,
}

impl<T: Real> FilterSpec<T> {
    pub fn new(mode: FilterMode, per_pass_energy: T, passes: u8) -> Result<Self> {
        if !(per_pass_energy >= T::zero() && per_pass_energy <= T::one()) {
            return Err(invalid(format!(
                "per-pass energy {per_pass_energy} outside [0, 1]"
            )));
        }
        if !(passes == 1 || passes == 2) {
            return Err(invalid(format!(
                "filter passes must be 1 or 2, got {passes}"
            )));
        }
        Ok(Self {
            mode,
            per_pass_energy,
            passes,
        })
    }

    /// Reflecting two-pass filter whose net coefficient is `net_energy`.
    pub fn reflective(mode: FilterMode, net_energy: T) -> Result<Self> {
        if !(net_energy >= T::zero() && net_energy <= T::one()) {
            return Err(invalid(format!(
                "net filter energy {net_energy} outside [0, 1]"
            )));
        }
        Self::new(mode, net_energy.sqrt(), 2)
    }

    pub fn mode(&self) -> FilterMode {
        self.mode
    }

    pub fn per_pass_energy(&self) -> T {
        self.per_pass_energy
    }

    pub fn passes(&self) -> u8 {
        self.passes
    }
}

/// `per_pass_energy ^ passes`.
pub fn net_filter_energy<T: Real>(filter: &FilterSpec<T>) -> T {
    filter.per_pass_energy.powi(filter.passes as i32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockLabel {
    A,
    B,
}

/// Static two-block split of a surface.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPartition<T> {
    labels: Vec<BlockLabel>,
    energy_split: T,
}

impl<T: Real> BlockPartition<T> {
    pub fn new(labels: Vec<BlockLabel>, energy_split: T) -> Result<Self> {
        if labels.is_empty() {
            return Err(invalid("partition needs at least one element"));
        }
        if !(energy_split >= T::zero() && energy_split <= T::one()) {
            return Err(invalid(format!(
                "energy split {energy_split} outside [0, 1]"
            )));
        }
        Ok(Self {
            labels,
            energy_split,
        })
    }

    /// Block A takes the first `size_a` elements in flat order.
    pub fn contiguous(n: usize, size_a: usize, energy_split: T) -> Result<Self> {
        if size_a > n {
            return Err(invalid(format!(
                "block A size {size_a} exceeds {n} elements"
            )));
        }
        let labels = (0..n)
            .map(|i| {
                if i < size_a {
                    BlockLabel::A
                } else {
                    BlockLabel::B
                }
            })
            .collect();
        Self::new(labels, energy_split)
    }

    /// Block sizes proportional to the energy split (`round(beta * n)` for A).
    pub fn proportional(n: usize, beta: T) -> Result<Self> {
        if !(beta >= T::zero() && beta <= T::one()) {
            return Err(invalid(format!("energy split {beta} outside [0, 1]")));
        }
        let size_a = (beta.as_f64() * n as f64).round() as usize;
        Self::contiguous(n, size_a.min(n), beta)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[BlockLabel] {
        &self.labels
    }

    pub fn energy_split(&self) -> T {
        self.energy_split
    }

    pub fn indices(&self, label: BlockLabel) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l == label).then_some(i))
            .collect()
    }

    pub fn block_len(&self, label: BlockLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}

/// Full-surface tuning whose block-A elements carry `theta_a` and block-B
/// elements carry `theta_b`, each in block-internal order.
pub fn compose_block<T: Real>(
    partition: &BlockPartition<T>,
    theta_a: &TuningMatrix<T>,
    theta_b: &TuningMatrix<T>,
) -> Result<TuningMatrix<T>> {
    let (na, nb) = (
        partition.block_len(BlockLabel::A),
        partition.block_len(BlockLabel::B),
    );
    if theta_a.len() != na {
        return Err(mismatch("compose_block block A", na, theta_a.len()));
    }
    if theta_b.len() != nb {
        return Err(mismatch("compose_block block B", nb, theta_b.len()));
    }
    let (mut ia, mut ib) = (0, 0);
    let mut amplitudes = Vec::with_capacity(partition.len());
    let mut phases = Vec::with_capacity(partition.len());
    for label in partition.labels() {
        let (src, idx) = match label {
            BlockLabel::A => (theta_a, &mut ia),
            BlockLabel::B => (theta_b, &mut ib),
        };
        amplitudes.push(src.amplitudes[*idx]);
        phases.push(src.phases[*idx]);
        *idx += 1;
    }
    TuningMatrix::new(amplitudes, phases)
}

/// Coefficients of one block, in block-internal order.
pub fn extract_block<T: Real>(
    partition: &BlockPartition<T>,
    theta: &TuningMatrix<T>,
    label: BlockLabel,
) -> Result<TuningMatrix<T>> {
    if theta.len() != partition.len() {
        return Err(mismatch("extract_block", partition.len(), theta.len()));
    }
    let idx = partition.indices(label);
    if idx.is_empty() {
        return Err(invalid(format!("block {label:?} is empty")));
    }
    TuningMatrix::new(
        idx.iter().map(|&i| theta.amplitudes[i]).collect(),
        idx.iter().map(|&i| theta.phases[i]).collect(),
    )
}
