//! Complex channel matrices and the segments that make up a cascaded link.

use std::ops::{Add, Index, IndexMut, Mul};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, mismatch, Result};
use crate::geometry::{ArrayGeometry, PathLoss};
use crate::ris::TuningMatrix;
use crate::{Complex, Real};

/// Dense row-major complex matrix. Rows are receive antennas, columns are
/// transmit antennas.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> ChannelMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid(format!(
                "channel dimensions must be positive, got {rows}x{cols}"
            )));
        }
        Ok(Self {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Complex<T>,
    ) -> Result<Self> {
        let mut m = Self::zeros(rows, cols)?;
        for r in 0..rows {
            for c in 0..cols {
                m.data[r * cols + c] = f(r, c);
            }
        }
        m.check_finite()?;
        Ok(m)
    }

    /// Row-major construction; `data.len()` must equal `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid(format!(
                "channel dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(mismatch("ChannelMatrix::from_vec", rows * cols, data.len()));
        }
        let m = Self { rows, cols, data };
        m.check_finite()?;
        Ok(m)
    }

    pub fn row_vector(data: Vec<Complex<T>>) -> Result<Self> {
        let n = data.len();
        Self::from_vec(1, n, data)
    }

    pub fn column_vector(data: Vec<Complex<T>>) -> Result<Self> {
        let n = data.len();
        Self::from_vec(n, 1, data)
    }

    /// `a * b^H`.
    pub fn outer(a: &[Complex<T>], b: &[Complex<T>]) -> Result<Self> {
        Self::from_fn(a.len(), b.len(), |r, c| a[r] * b[c].conj())
    }

    fn check_finite(&self) -> Result<()> {
        if self
            .data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
        {
            Ok(())
        } else {
            Err(invalid("channel entries must be finite"))
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex<T>] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Complex<T>> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn frobenius_norm_sqr(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re == T::zero() && z.im == T::zero())
    }

    pub fn conj_transpose(&self) -> Self {
        let mut out = Self {
            rows: self.cols,
            cols: self.rows,
            data: vec![Complex::new(T::zero(), T::zero()); self.data.len()],
        };
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(mismatch(
                "ChannelMatrix add",
                format!("{:?}", self.shape()),
                format!("{:?}", other.shape()),
            ));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(mismatch("ChannelMatrix product", self.cols, other.rows));
        }
        let mut out = Self::zeros(self.rows, other.cols)?;
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                let src = other.row(k);
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(src) {
                    *d = *d + a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * v` for a column vector `v`.
    pub fn apply(&self, v: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        if v.len() != self.cols {
            return Err(mismatch("ChannelMatrix apply", self.cols, v.len()));
        }
        Ok((0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| {
                        acc + a * b
                    })
            })
            .collect())
    }

    /// Columns `indices` of `self`, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(invalid("column selection is empty"));
        }
        if let Some(&bad) = indices.iter().find(|&&c| c >= self.cols) {
            return Err(invalid(format!(
                "column {bad} out of range for {} columns",
                self.cols
            )));
        }
        Self::from_fn(self.rows, indices.len(), |r, c| self[(r, indices[c])])
    }

    /// Rows `indices` of `self`, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(invalid("row selection is empty"));
        }
        if let Some(&bad) = indices.iter().find(|&&r| r >= self.rows) {
            return Err(invalid(format!(
                "row {bad} out of range for {} rows",
                self.rows
            )));
        }
        Self::from_fn(indices.len(), self.cols, |r, c| self[(indices[r], c)])
    }
}

impl<T> Index<(usize, usize)> for ChannelMatrix<T> {
    type Output = Complex<T>;
    fn index(&self, (r, c): (usize, usize)) -> &Complex<T> {
        assert!(
            r < self.rows && c < self.cols,
            "index ({r}, {c}) out of bounds"
        );
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for ChannelMatrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex<T> {
        assert!(
            r < self.rows && c < self.cols,
            "index ({r}, {c}) out of bounds"
        );
        &mut self.data[r * self.cols + c]
    }
}

impl<T: Real> Add for &ChannelMatrix<T> {
    type Output = ChannelMatrix<T>;
    fn add(self, rhs: Self) -> ChannelMatrix<T> {
        self.try_add(rhs).expect("matching shapes")
    }
}

impl<T: Real> Mul for &ChannelMatrix<T> {
    type Output = ChannelMatrix<T>;
    fn mul(self, rhs: Self) -> ChannelMatrix<T> {
        self.try_mul(rhs).expect("conformable shapes")
    }
}

/// Far-field line-of-sight segment with the free-space amplitude law.
pub fn los_channel<T: Real>(
    tx: &ArrayGeometry<T>,
    rx: &ArrayGeometry<T>,
    wavelength: T,
) -> Result<ChannelMatrix<T>> {
    los_channel_with(tx, rx, wavelength, &PathLoss::FreeSpace)
}

/// Rank-1 segment `g a_rx a_tx^H` with `g = amplitude(d) e^{-j 2 pi d / lambda}`.
pub fn los_channel_with<T: Real>(
    tx: &ArrayGeometry<T>,
    rx: &ArrayGeometry<T>,
    wavelength: T,
    path_loss: &PathLoss<T>,
) -> Result<ChannelMatrix<T>> {
    let d = (rx.position() - tx.position()).norm();
    if !(d > T::zero()) {
        return Err(invalid("transmitter and receiver positions coincide"));
    }
    let amp = path_loss.amplitude(d, wavelength)?;
    // reduce d/lambda before scaling so the carrier phase keeps precision
    let cycles = d / wavelength;
    let phase = -T::TAU() * (cycles - cycles.floor());
    let g = Complex::from_polar(amp, phase);
    let a_rx = rx.steering_towards(tx.position())?;
    let a_tx = tx.steering_towards(rx.position())?;
    let a_rx: Vec<_> = a_rx.into_iter().map(|z| z * g).collect();
    ChannelMatrix::outer(&a_rx, &a_tx)
}

/// I.i.d. circularly-symmetric complex Gaussian entries of variance `power`.
pub fn rayleigh_channel<T: Real, R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    power: T,
    rng: &mut R,
) -> Result<ChannelMatrix<T>> {
    if !(power.is_finite() && power >= T::zero()) {
        return Err(invalid(format!(
            "Rayleigh power must be non-negative, got {power}"
        )));
    }
    let mut m = ChannelMatrix::zeros(rows, cols)?;
    if power == T::zero() {
        return Ok(m);
    }
    let sigma = (power.as_f64() / 2.0).sqrt();
    for z in m.data.iter_mut() {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *z = Complex::new(T::lit(re * sigma), T::lit(im * sigma));
    }
    Ok(m)
}

/// `h_ris_rx diag(theta) g_tx_ris (+ h_direct)`.
pub fn cascade<T: Real>(
    h_ris_rx: &ChannelMatrix<T>,
    theta: &TuningMatrix<T>,
    g_tx_ris: &ChannelMatrix<T>,
    h_direct: Option<&ChannelMatrix<T>>,
) -> Result<ChannelMatrix<T>> {
    let n = theta.len();
    if h_ris_rx.cols() != n {
        return Err(mismatch(
            "cascade receive segment columns",
            n,
            h_ris_rx.cols(),
        ));
    }
    if g_tx_ris.rows() != n {
        return Err(mismatch(
            "cascade transmit segment rows",
            n,
            g_tx_ris.rows(),
        ));
    }
    let (k, m) = (h_ris_rx.rows(), g_tx_ris.cols());
    let coeffs = theta.coefficients();
    let mut out = match h_direct {
        Some(d) if d.shape() != (k, m) => {
            return Err(mismatch(
                "cascade direct path",
                format!("{:?}", (k, m)),
                format!("{:?}", d.shape()),
            ))
        }
        Some(d) => d.clone(),
        None => ChannelMatrix::zeros(k, m)?,
    };
    let mut acc = vec![Complex::new(T::zero(), T::zero()); m];
    for r in 0..k {
        acc.iter_mut()
            .for_each(|z| *z = Complex::new(T::zero(), T::zero()));
        for (i, (h, th)) in h_ris_rx.row(r).iter().zip(&coeffs).enumerate() {
            let w = h * th;
            for (a, b) in acc.iter_mut().zip(g_tx_ris.row(i)) {
                *a = *a + w * b;
            }
        }
        for (o, a) in out.data[r * m..(r + 1) * m].iter_mut().zip(&acc) {
            *o = *o + a;
        }
    }
    Ok(out)
}
