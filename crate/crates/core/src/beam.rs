//! TEM₀₀ Gaussian modes.
//!
//! Amplitudes are normalized so the on-axis field at the waist is `1 + 0i`
//! (not unit power). Visibility and distinguishability are ratios, so the
//! normalization never reaches an observable.
//!
//! Two printed forms are corrected here:
//!
//! * The propagated radius uses `w = w₀·√(1 + (zλ/(πw₀²))²)`. A `w₀²`
//!   prefactor is dimensionally inconsistent; with `w₀` the 82.5 µm detector
//!   mode at 661 mm and 808 nm gives the 2.06 mm coherence radius.
//! * The mode function is the standard complex Gaussian
//!   `1/q · exp(−r²/(w₀²q))`, `q = 1 − i·z/z_R`. An extra `−i` in front of
//!   the exponent would leave the on-axis profile undamped and would not give
//!   a Gaussian visibility curve.
//!
//! Tilt is modelled as a transverse walk-off of the mode center
//! (`center(z) = offset + tilt·(z − waist_z)`) together with the linear
//! carrier `exp(−i·k·tilt·r⊥)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

/// Complex field amplitude of a mode at a point.
pub type ComplexAmplitude = Complex64;

/// Largest tilt component accepted, in radians.
pub const MAX_PARAXIAL_TILT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BeamError {
    #[error("waist radius must be > 0 (got {0} m)")]
    WaistRadius(f64),
    #[error("wavelength must be > 0 (got {0} m)")]
    Wavelength(f64),
    #[error("tilt component {0} rad exceeds the paraxial limit of {MAX_PARAXIAL_TILT} rad")]
    NonParaxial(f64),
    #[error("{0} must be finite")]
    NotFinite(&'static str),
}

/// A pair of transverse quantities. The tangential direction (along the
/// emission ring) is mapped to `y`, the radial direction to `x`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Transverse {
    pub tangential: f64,
    pub radial: f64,
}

impl Transverse {
    pub const ZERO: Self = Self { tangential: 0.0, radial: 0.0 };

    pub fn new(tangential: f64, radial: f64) -> Self {
        Self { tangential, radial }
    }

    pub fn tangential(value: f64) -> Self {
        Self { tangential: value, radial: 0.0 }
    }

    pub fn radial(value: f64) -> Self {
        Self { tangential: 0.0, radial: value }
    }

    /// Euclidean length; tangential and radial parts combine in quadrature.
    pub fn norm(&self) -> f64 {
        self.tangential.hypot(self.radial)
    }

    pub fn x(&self) -> f64 {
        self.radial
    }

    pub fn y(&self) -> f64 {
        self.tangential
    }
}

/// A TEM₀₀ beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMode {
    waist_radius: f64,
    wavelength: f64,
    waist_z: f64,
    tilt: Transverse,
    offset: Transverse,
}

impl GaussianMode {
    /// Untilted, centered mode with its waist at `z = 0`.
    pub fn new(waist_radius: f64, wavelength: f64) -> Result<Self, BeamError> {
        if !(waist_radius > 0.0) || !waist_radius.is_finite() {
            return Err(BeamError::WaistRadius(waist_radius));
        }
        if !(wavelength > 0.0) || !wavelength.is_finite() {
            return Err(BeamError::Wavelength(wavelength));
        }
        Ok(Self { waist_radius, wavelength, waist_z: 0.0, tilt: Transverse::ZERO, offset: Transverse::ZERO })
    }

    pub fn with_waist_z(mut self, waist_z: f64) -> Result<Self, BeamError> {
        if !waist_z.is_finite() {
            return Err(BeamError::NotFinite("waist_z"));
        }
        self.waist_z = waist_z;
        Ok(self)
    }

    /// Sets the propagation-direction deviation; rejects non-paraxial tilts.
    pub fn with_tilt(mut self, tilt: Transverse) -> Result<Self, BeamError> {
        for component in [tilt.tangential, tilt.radial] {
            if !component.is_finite() {
                return Err(BeamError::NotFinite("tilt"));
            }
            if component.abs() >= MAX_PARAXIAL_TILT {
                return Err(BeamError::NonParaxial(component));
            }
        }
        self.tilt = tilt;
        Ok(self)
    }

    /// Sets the transverse displacement of the mode axis at the waist plane.
    pub fn with_offset(mut self, offset: Transverse) -> Result<Self, BeamError> {
        if !offset.tangential.is_finite() || !offset.radial.is_finite() {
            return Err(BeamError::NotFinite("offset"));
        }
        self.offset = offset;
        Ok(self)
    }

    pub fn waist_radius(&self) -> f64 {
        self.waist_radius
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn waist_z(&self) -> f64 {
        self.waist_z
    }

    pub fn tilt(&self) -> Transverse {
        self.tilt
    }

    pub fn offset(&self) -> Transverse {
        self.offset
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn rayleigh_range(&self) -> f64 {
        rayleigh_range(self)
    }

    /// 1/e field radius at axial position `z`.
    pub fn radius_at(&self, z: f64) -> f64 {
        propagated_radius(self.waist_radius, z - self.waist_z, self.wavelength)
    }

    /// Transverse center of the mode at axial position `z`.
    pub fn center_at(&self, z: f64) -> Transverse {
        let dz = z - self.waist_z;
        Transverse {
            tangential: self.offset.tangential + self.tilt.tangential * dz,
            radial: self.offset.radial + self.tilt.radial * dz,
        }
    }

    /// Complex amplitude at `(x, y, z)`; see [`mode_amplitude`].
    pub fn amplitude(&self, x: f64, y: f64, z: f64) -> ComplexAmplitude {
        mode_amplitude(self, x, y, z)
    }
}

/// `z_R = π·w₀²/λ`.
pub fn rayleigh_range(mode: &GaussianMode) -> f64 {
    PI * mode.waist_radius * mode.waist_radius / mode.wavelength
}

/// Field radius after propagating a distance `z` from a waist of radius
/// `waist_radius`.
pub fn propagated_radius(waist_radius: f64, z: f64, wavelength: f64) -> f64 {
    let ratio = z * wavelength / (PI * waist_radius * waist_radius);
    waist_radius * ratio.hypot(1.0)
}

/// Complex Gaussian amplitude in the mode's own frame, times the tilt
/// carrier `exp(−i·k·(tilt_x·x + tilt_y·y))`.
pub fn mode_amplitude(mode: &GaussianMode, x: f64, y: f64, z: f64) -> ComplexAmplitude {
    let dz = z - mode.waist_z;
    let q = Complex64::new(1.0, -dz / mode.rayleigh_range());
    let center = mode.center_at(z);
    let xr = x - center.x();
    let yr = y - center.y();
    let r2 = xr * xr + yr * yr;
    let w0sq = mode.waist_radius * mode.waist_radius;
    let envelope = (-(r2 / (w0sq * q))).exp() / q;
    if mode.tilt == Transverse::ZERO {
        return envelope;
    }
    let carrier = -mode.wavenumber() * (mode.tilt.x() * x + mode.tilt.y() * y);
    envelope * Complex64::from_polar(1.0, carrier)
}
