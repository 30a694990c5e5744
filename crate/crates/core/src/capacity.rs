//! Per-realisation achievable rates. Expectations over fading are taken by the
//! caller's Monte-Carlo loop, not here.

use crate::channel::ChannelMatrix;
use crate::error::{invalid, mismatch, Result};
use crate::linalg::singular_values;
use crate::{Complex, Real};

/// Transmit power and receiver noise variance, both in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget<T> {
    transmit_power: T,
    noise_variance: T,
}

impl<T: Real> LinkBudget<T> {
    pub fn new(transmit_power: T, noise_variance: T) -> Result<Self> {
        if !(transmit_power.is_finite() && transmit_power > T::zero()) {
            return Err(invalid(format!(
                "transmit power must be positive, got {transmit_power}"
            )));
        }
        if !(noise_variance.is_finite() && noise_variance > T::zero()) {
            return Err(invalid(format!(
                "noise variance must be positive, got {noise_variance}"
            )));
        }
        Ok(Self {
            transmit_power,
            noise_variance,
        })
    }

    pub fn transmit_power(&self) -> T {
        self.transmit_power
    }

    pub fn noise_variance(&self) -> T {
        self.noise_variance
    }

    pub fn snr(&self) -> T {
        self.transmit_power / self.noise_variance
    }

    pub fn with_power(&self, transmit_power: T) -> Result<Self> {
        Self::new(transmit_power, self.noise_variance)
    }
}

/// `10^((dbm - 30) / 10)` watts.
pub fn dbm_to_watts<T: Real>(dbm: T) -> T {
    T::lit(10.0).powf((dbm - T::lit(30.0)) / T::lit(10.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecoderKind {
    Mrt,
    Isotropic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Precoder<T> {
    pub matrix: ChannelMatrix<T>,
    pub kind: PrecoderKind,
}

impl<T: Real> Precoder<T> {
    /// Column `j` of the precoding matrix.
    pub fn column(&self, j: usize) -> Vec<Complex<T>> {
        self.matrix.column(j)
    }
}

fn row_channel<T: Real>(h: &ChannelMatrix<T>, context: &'static str) -> Result<()> {
    if h.rows() != 1 {
        return Err(mismatch(
            context,
            "1 receive antenna",
            format!("{} rows", h.rows()),
        ));
    }
    Ok(())
}

/// `f = h^H / ||h||`.
pub fn mrt_precoder<T: Real>(h_eff: &ChannelMatrix<T>) -> Result<Precoder<T>> {
    row_channel(h_eff, "mrt_precoder")?;
    let norm = h_eff.frobenius_norm_sqr().sqrt();
    if !(norm > T::zero()) {
        return Err(invalid("MRT precoder needs a non-zero channel"));
    }
    let col = h_eff.row(0).iter().map(|z| z.conj() / norm).collect();
    Ok(Precoder {
        matrix: ChannelMatrix::column_vector(col)?,
        kind: PrecoderKind::Mrt,
    })
}

/// Identity precoder with power `1 / n_t` per antenna.
pub fn isotropic_precoder<T: Real>(n_t: usize) -> Result<Precoder<T>> {
    let scale = T::one() / T::from_usize(n_t).unwrap().sqrt();
    let matrix = ChannelMatrix::from_fn(n_t, n_t, |r, c| {
        if r == c {
            Complex::new(scale, T::zero())
        } else {
            Complex::new(T::zero(), T::zero())
        }
    })?;
    Ok(Precoder {
        matrix,
        kind: PrecoderKind::Isotropic,
    })
}

/// `log2(1 + SNR * sum |h_i|^2)` for a single receive antenna.
pub fn rate_known_csi<T: Real>(h_eff: &ChannelMatrix<T>, budget: &LinkBudget<T>) -> Result<T> {
    row_channel(h_eff, "rate_known_csi")?;
    Ok((budget.snr() * h_eff.frobenius_norm_sqr()).ln_1p() / T::LN_2())
}

/// `log2(1 + SNR / n_t * sum |h_i|^2)` for a single receive antenna.
pub fn rate_unknown_csi<T: Real>(h_eff: &ChannelMatrix<T>, budget: &LinkBudget<T>) -> Result<T> {
    row_channel(h_eff, "rate_unknown_csi")?;
    let n_t = T::from_usize(h_eff.cols()).unwrap();
    Ok((budget.snr() / n_t * h_eff.frobenius_norm_sqr()).ln_1p() / T::LN_2())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MimoCsi {
    /// Equal power over `n_min` SVD streams.
    Known,
    /// Identity precoder, `log2(1 + n_r / n_t * SNR * ||H||_F^2)`.
    Unknown,
}

pub fn mimo_capacity_svd<T: Real>(
    h: &ChannelMatrix<T>,
    budget: &LinkBudget<T>,
    csi: MimoCsi,
) -> Result<T> {
    if h.is_zero() {
        return Err(invalid("MIMO capacity needs a non-zero channel"));
    }
    let snr = budget.snr();
    match csi {
        MimoCsi::Known => {
            let sv = singular_values(h);
            let n_min = T::from_usize(sv.len()).unwrap();
            Ok(sv
                .iter()
                .map(|&l| (snr / n_min * l * l).ln_1p() / T::LN_2())
                .sum())
        }
        MimoCsi::Unknown => {
            let ratio = T::from_usize(h.rows()).unwrap() / T::from_usize(h.cols()).unwrap();
            Ok((ratio * snr * h.frobenius_norm_sqr()).ln_1p() / T::LN_2())
        }
    }
}

/// Singular values of `h`, descending.
pub fn channel_singular_values<T: Real>(h: &ChannelMatrix<T>) -> Vec<T> {
    singular_values(h)
}

/// What the transmitter knows when it forms its precoder.
#[derive(Debug, Clone, Copy)]
pub enum CsiKind<'a, T> {
    Known,
    /// Precoder matched to an outdated snapshot; the rate is evaluated on the
    /// true channel.
    Stale(&'a ChannelMatrix<T>),
}

/// Single-stream rate `log2(1 + p |h f|^2 / sigma)`.
///
/// A zero true channel gives rate 0. A zero stale snapshot leaves the
/// transmitter without usable CSI, so the isotropic rate is returned.
pub fn achievable_rate<T: Real>(
    h_eff: &ChannelMatrix<T>,
    budget: &LinkBudget<T>,
    csi: CsiKind<'_, T>,
) -> Result<T> {
    row_channel(h_eff, "achievable_rate")?;
    if h_eff.is_zero() {
        return Ok(T::zero());
    }
    let snapshot = match csi {
        CsiKind::Known => h_eff,
        CsiKind::Stale(s) => {
            if s.shape() != h_eff.shape() {
                return Err(mismatch(
                    "achievable_rate stale snapshot",
                    format!("{:?}", h_eff.shape()),
                    format!("{:?}", s.shape()),
                ));
            }
            s
        }
    };
    if snapshot.is_zero() {
        return rate_unknown_csi(h_eff, budget);
    }
    let f = mrt_precoder(snapshot)?;
    let gain = h_eff.apply(f.matrix.as_slice())?[0].norm_sqr();
    Ok((budget.snr() * gain).ln_1p() / T::LN_2())
}
