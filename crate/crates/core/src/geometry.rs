//! Array layouts and far-field propagation.
//!
//! Elements are indexed row-major over `(x, y)`: element `(p, q)` with
//! `p < nx`, `q < ny` sits at flat index `p * ny + q`. The phase reference is
//! element `(0, 0)`. Tuning matrices and block partitions inherit this order.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{invalid, mismatch, Result};
use crate::{Complex, Real};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn wavelength<T: Real>(carrier_hz: T) -> Result<T> {
    if !(carrier_hz.is_finite() && carrier_hz > T::zero()) {
        return Err(invalid(format!(
            "carrier frequency must be positive, got {carrier_hz}"
        )));
    }
    Ok(T::lit(SPEED_OF_LIGHT) / carrier_hz)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn from_f64(v: [f64; 3]) -> Self {
        Self::new(T::lit(v[0]), T::lit(v[1]), T::lit(v[2]))
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Self) -> Self {
        Self::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        (n > T::zero() && n.is_finite()).then(|| self * (T::one() / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrayKind {
    Ula,
    Upa,
}

/// Uniform linear or planar array placed in world coordinates.
///
/// The local frame is derived from `boresight`: `x` is the horizontal axis
/// `z_world x boresight` (world `x` when boresight is vertical) and `y`
/// completes the right-handed frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry<T> {
    kind: ArrayKind,
    nx: usize,
    ny: usize,
    spacing: T,
    position: Vec3<T>,
    boresight: Vec3<T>,
}

impl<T: Real> ArrayGeometry<T> {
    /// `spacing` is in wavelengths; `boresight` is normalised on entry.
    pub fn new(
        kind: ArrayKind,
        nx: usize,
        ny: usize,
        spacing: T,
        position: Vec3<T>,
        boresight: Vec3<T>,
    ) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(invalid(format!(
                "array needs at least one element, got {nx}x{ny}"
            )));
        }
        if kind == ArrayKind::Ula && ny != 1 {
            return Err(invalid(format!("a ULA has ny = 1, got {ny}")));
        }
        if !(spacing.is_finite() && spacing > T::zero()) {
            return Err(invalid(format!(
                "element spacing must be positive, got {spacing}"
            )));
        }
        if !position.is_finite() {
            return Err(invalid("array position must be finite"));
        }
        let boresight = boresight
            .normalized()
            .ok_or_else(|| invalid("boresight must be a non-zero finite vector"))?;
        Ok(Self {
            kind,
            nx,
            ny,
            spacing,
            position,
            boresight,
        })
    }

    pub fn ula(n: usize, position: Vec3<T>, boresight: Vec3<T>) -> Result<Self> {
        Self::new(ArrayKind::Ula, n, 1, T::lit(0.5), position, boresight)
    }

    pub fn upa(nx: usize, ny: usize, position: Vec3<T>, boresight: Vec3<T>) -> Result<Self> {
        Self::new(ArrayKind::Upa, nx, ny, T::lit(0.5), position, boresight)
    }

    /// Single isotropic antenna.
    pub fn point(position: Vec3<T>) -> Result<Self> {
        Self::ula(1, position, Vec3::new(T::one(), T::zero(), T::zero()))
    }

    pub fn with_spacing(mut self, spacing: T) -> Result<Self> {
        if !(spacing.is_finite() && spacing > T::zero()) {
            return Err(invalid(format!(
                "element spacing must be positive, got {spacing}"
            )));
        }
        self.spacing = spacing;
        Ok(self)
    }

    pub fn kind(&self) -> ArrayKind {
        self.kind
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn spacing(&self) -> T {
        self.spacing
    }
    pub fn position(&self) -> Vec3<T> {
        self.position
    }
    pub fn boresight(&self) -> Vec3<T> {
        self.boresight
    }

    fn local_axes(&self) -> (Vec3<T>, Vec3<T>) {
        let up = Vec3::new(T::zero(), T::zero(), T::one());
        let x_axis = up.cross(self.boresight).normalized().unwrap_or(Vec3::new(
            T::one(),
            T::zero(),
            T::zero(),
        ));
        let y_axis = self.boresight.cross(x_axis);
        (x_axis, y_axis)
    }

    /// Direction cosines `(u, v)` of the unit vector pointing at `target`.
    pub fn direction_cosines_to(&self, target: Vec3<T>) -> Result<(T, T)> {
        let d = (target - self.position)
            .normalized()
            .ok_or_else(|| invalid("target coincides with array position"))?;
        let (ex, ey) = self.local_axes();
        Ok((d.dot(ex), d.dot(ey)))
    }

    /// Local-frame direction toward a world point.
    pub fn direction_to(&self, target: Vec3<T>) -> Result<Direction<T>> {
        let d = (target - self.position)
            .normalized()
            .ok_or_else(|| invalid("target coincides with array position"))?;
        let (ex, ey) = self.local_axes();
        let (u, v, w) = (d.dot(ex), d.dot(ey), d.dot(self.boresight));
        let v = v.max(-T::one()).min(T::one());
        Ok(Direction {
            azimuth: u.atan2(w),
            elevation: v.asin(),
        })
    }

    /// Response toward a direction given by its cosines in the local frame.
    pub fn steering_from_cosines(&self, u: T, v: T) -> Vec<Complex<T>> {
        let k = T::TAU() * self.spacing;
        let mut out = Vec::with_capacity(self.len());
        for p in 0..self.nx {
            let pu = T::from_usize(p).unwrap() * u;
            for q in 0..self.ny {
                let phase = k * (pu + T::from_usize(q).unwrap() * v);
                out.push(Complex::from_polar(T::one(), phase));
            }
        }
        out
    }

    pub fn steering_towards(&self, target: Vec3<T>) -> Result<Vec<Complex<T>>> {
        let (u, v) = self.direction_cosines_to(target)?;
        Ok(self.steering_from_cosines(u, v))
    }
}

/// Angles in an array's local frame. Broadside is `(0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction<T> {
    pub azimuth: T,
    pub elevation: T,
}

impl<T: Real> Direction<T> {
    pub fn new(azimuth: T, elevation: T) -> Result<Self> {
        let dir = Self { azimuth, elevation };
        dir.validate()?;
        Ok(dir)
    }

    pub fn broadside() -> Self {
        Self {
            azimuth: T::zero(),
            elevation: T::zero(),
        }
    }

    /// Azimuth-only direction, elevation zero.
    pub fn azimuth(azimuth: T) -> Result<Self> {
        Self::new(azimuth, T::zero())
    }

    fn validate(&self) -> Result<()> {
        if !(self.azimuth.is_finite() && self.elevation.is_finite()) {
            return Err(invalid("direction angles must be finite"));
        }
        if self.azimuth.abs() > T::PI() || self.elevation.abs() > T::FRAC_PI_2() {
            return Err(invalid(format!(
                "direction out of range: azimuth {} elevation {}",
                self.azimuth, self.elevation
            )));
        }
        Ok(())
    }

    /// `(u, v) = (sin az cos el, sin el)`.
    pub fn cosines(&self) -> (T, T) {
        (
            self.azimuth.sin() * self.elevation.cos(),
            self.elevation.sin(),
        )
    }
}

pub fn steering_vector<T: Real>(
    array: &ArrayGeometry<T>,
    dir: Direction<T>,
    wavelength: T,
) -> Result<Vec<Complex<T>>> {
    if !(wavelength.is_finite() && wavelength > T::zero()) {
        return Err(invalid(format!(
            "wavelength must be positive, got {wavelength}"
        )));
    }
    dir.validate()?;
    let (u, v) = dir.cosines();
    Ok(array.steering_from_cosines(u, v))
}

/// Amplitude-domain Friis factor `lambda / (4 pi d)`.
pub fn free_space_amplitude<T: Real>(distance: T, wavelength: T) -> Result<T> {
    if !(distance.is_finite() && distance > T::zero()) {
        return Err(invalid(format!(
            "distance must be positive, got {distance}"
        )));
    }
    if !(wavelength.is_finite() && wavelength > T::zero()) {
        return Err(invalid(format!(
            "wavelength must be positive, got {wavelength}"
        )));
    }
    Ok(wavelength / (T::lit(4.0) * T::PI() * distance))
}

/// Large-scale amplitude law applied to each line-of-sight segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathLoss<T> {
    FreeSpace,
    /// Power gain `10^(reference_gain_db / 10) * (d / reference_distance)^-exponent`.
    LogDistance {
        reference_gain_db: T,
        reference_distance: T,
        exponent: T,
    },
}

impl<T: Real> PathLoss<T> {
    pub fn amplitude(&self, distance: T, wavelength: T) -> Result<T> {
        match *self {
            PathLoss::FreeSpace => free_space_amplitude(distance, wavelength),
            PathLoss::LogDistance {
                reference_gain_db,
                reference_distance,
                exponent,
            } => {
                if !(distance.is_finite() && distance > T::zero()) {
                    return Err(invalid(format!(
                        "distance must be positive, got {distance}"
                    )));
                }
                if !(reference_distance > T::zero() && exponent.is_finite()) {
                    return Err(invalid(
                        "log-distance model needs a positive reference distance",
                    ));
                }
                let power = T::lit(10.0).powf(reference_gain_db / T::lit(10.0))
                    * (distance / reference_distance).powf(-exponent);
                Ok(power.sqrt())
            }
        }
    }
}

/// `|w^H a(dir)|^2` for every direction in `angles`.
pub fn array_factor_pattern<T: Real>(
    array: &ArrayGeometry<T>,
    weights: &[Complex<T>],
    angles: &[Direction<T>],
    wavelength: T,
) -> Result<Vec<T>> {
    if weights.len() != array.len() {
        return Err(mismatch(
            "array_factor_pattern weights",
            array.len(),
            weights.len(),
        ));
    }
    angles
        .iter()
        .map(|&dir| {
            let a = steering_vector(array, dir, wavelength)?;
            let sum: Complex<T> = weights
                .iter()
                .zip(&a)
                .fold(Complex::new(T::zero(), T::zero()), |acc, (w, x)| {
                    acc + w.conj() * x
                });
            Ok(sum.norm_sqr())
        })
        .collect()
}
