//! Two-arm superposition at the second beam splitter, detector counting
//! rates, visibility, and longitudinal fringe scans.
//!
//! The field behind the interferometer is `U₁ + U₂·e^{−iφ}` with the arm-2
//! displacement carried by mode 2's offset and tilt. The detector rate is
//! the transverse integral of `|U₁ + U₂·e^{−iφ}|²`.
//!
//! Longitudinal coherence is a Gaussian envelope in the path delay Δl,
//! `γ(Δl) = exp(−ln2·(Δl/l_c)²)`, so the fringe visibility has fallen to
//! one half at `Δl = l_c` (half width at half maximum). The fringe carrier
//! has period λ in Δl.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use thiserror::Error;

use crate::beam::GaussianMode;
use crate::exec;
use crate::quadrature::{integrate_2d, QuadratureError, Tolerance};

/// Half-width of the integration window, in units of the local mode radius.
pub const DOMAIN_HALF_WIDTH: f64 = 6.0;

/// Relative tolerance of the detector-rate quadrature.
pub const RATE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterferenceError {
    #[error("arm modes must share a wavelength ({0} m vs {1} m)")]
    WavelengthMismatch(f64, f64),
    #[error("filter bandwidth must satisfy 0 < fwhm < center/10 (fwhm = {fwhm} m, center = {center} m)")]
    Filter { center: f64, fwhm: f64 },
    #[error("invalid scan: {0}")]
    Scan(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// A spectral interference filter in front of the detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralFilter {
    center_wavelength: f64,
    fwhm_bandwidth: f64,
}

impl SpectralFilter {
    pub fn new(center_wavelength: f64, fwhm_bandwidth: f64) -> Result<Self, InterferenceError> {
        let valid = center_wavelength.is_finite()
            && center_wavelength > 0.0
            && fwhm_bandwidth > 0.0
            && fwhm_bandwidth < center_wavelength / 10.0;
        if !valid {
            return Err(InterferenceError::Filter { center: center_wavelength, fwhm: fwhm_bandwidth });
        }
        Ok(Self { center_wavelength, fwhm_bandwidth })
    }

    pub fn center_wavelength(&self) -> f64 {
        self.center_wavelength
    }

    pub fn fwhm_bandwidth(&self) -> f64 {
        self.fwhm_bandwidth
    }

    pub fn coherence_length(&self) -> f64 {
        coherence_length(self)
    }
}

/// The two interferometer arms as they reach the detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmConfiguration {
    mode_1: GaussianMode,
    mode_2: GaussianMode,
    /// Interferometer phase φ applied to arm 2, radians.
    pub phase: f64,
    /// Path-length difference Δl between the arms, meters.
    pub delay: f64,
    /// Axial position of the reference plane where the arms recombine.
    pub reference_z: f64,
}

impl ArmConfiguration {
    pub fn new(mode_1: GaussianMode, mode_2: GaussianMode) -> Result<Self, InterferenceError> {
        if mode_1.wavelength() != mode_2.wavelength() {
            return Err(InterferenceError::WavelengthMismatch(mode_1.wavelength(), mode_2.wavelength()));
        }
        Ok(Self { mode_1, mode_2, phase: 0.0, delay: 0.0, reference_z: 0.0 })
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn with_delay(mut self, delay: f64) -> Self {
        self.delay = delay;
        self
    }

    pub fn with_reference_z(mut self, reference_z: f64) -> Self {
        self.reference_z = reference_z;
        self
    }

    pub fn mode_1(&self) -> &GaussianMode {
        &self.mode_1
    }

    pub fn mode_2(&self) -> &GaussianMode {
        &self.mode_2
    }

    pub fn wavelength(&self) -> f64 {
        self.mode_1.wavelength()
    }

    /// Center-to-center distance of the two modes at the reference plane.
    pub fn separation(&self) -> f64 {
        let c1 = self.mode_1.center_at(self.reference_z);
        let c2 = self.mode_2.center_at(self.reference_z);
        (c2.tangential - c1.tangential).hypot(c2.radial - c1.radial)
    }

    /// Closed-form transverse visibility at the reference plane, using mode
    /// 1's radius there.
    pub fn transverse_visibility(&self) -> f64 {
        visibility_analytic(self.separation(), self.mode_1.radius_at(self.reference_z))
    }
}

/// What the values of a [`ScanResult`] represent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Counts,
    Rate,
    Visibility,
    Distinguishability,
}

/// A one-dimensional sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub axis_label: String,
    pub points: Vec<(f64, f64)>,
    pub value_kind: ValueKind,
    /// Fringe period along the abscissa, when the scan is a fringe.
    pub period: Option<f64>,
}

impl ScanResult {
    /// Validates strictly increasing abscissae and finite, nonnegative values.
    pub fn new(
        axis_label: impl Into<String>,
        points: Vec<(f64, f64)>,
        value_kind: ValueKind,
        period: Option<f64>,
    ) -> Result<Self, InterferenceError> {
        if points.windows(2).any(|p| !(p[1].0 > p[0].0)) {
            return Err(InterferenceError::Scan("abscissae must be strictly increasing".into()));
        }
        if let Some(&(x, v)) = points.iter().find(|(x, v)| !x.is_finite() || !v.is_finite() || *v < 0.0) {
            return Err(InterferenceError::Scan(format!("value {v} at {x} is not finite and nonnegative")));
        }
        if let Some(p) = period {
            if !(p > 0.0 && p.is_finite()) {
                return Err(InterferenceError::Scan(format!("period must be > 0 (got {p})")));
            }
        }
        Ok(Self { axis_label: axis_label.into(), points, value_kind, period })
    }

    pub fn abscissae(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `|U₁(x,y,z) + U₂(x,y,z)·e^{−iφ}|²`.
pub fn superposed_intensity(config: &ArmConfiguration, x: f64, y: f64, z: f64) -> f64 {
    let u1 = config.mode_1.amplitude(x, y, z);
    let u2 = config.mode_2.amplitude(x, y, z);
    (u1 + u2 * Complex64::from_polar(1.0, -config.phase)).norm_sqr()
}

/// Integration window covering both modes to `DOMAIN_HALF_WIDTH` radii.
fn window(config: &ArmConfiguration, z: f64) -> ((f64, f64), (f64, f64)) {
    let mut xs = (f64::INFINITY, f64::NEG_INFINITY);
    let mut ys = (f64::INFINITY, f64::NEG_INFINITY);
    for mode in [&config.mode_1, &config.mode_2] {
        let c = mode.center_at(z);
        let reach = DOMAIN_HALF_WIDTH * mode.radius_at(z);
        xs = (xs.0.min(c.x() - reach), xs.1.max(c.x() + reach));
        ys = (ys.0.min(c.y() - reach), ys.1.max(c.y() + reach));
    }
    (xs, ys)
}

/// Detector counting rate (up to a constant): the transverse integral of the
/// superposed intensity at axial position `z`.
pub fn detector_rate(config: &ArmConfiguration, z: f64) -> Result<f64, QuadratureError> {
    let (xs, ys) = window(config, z);
    let integral =
        integrate_2d(|x, y| superposed_intensity(config, x, y, z), xs, ys, Tolerance::relative(RATE_TOLERANCE))?;
    Ok(integral.value)
}

/// Gaussian visibility fall-off `exp(−Δy²/(2w²))` for two TEM₀₀ modes of
/// field radius `w` displaced by `delta_y`.
pub fn visibility_analytic(delta_y: f64, w: f64) -> f64 {
    (-(delta_y * delta_y) / (2.0 * w * w)).exp()
}

/// Visibility from detector rates, `(R_max − R_min)/(R_max + R_min)`.
///
/// The rate is sinusoidal in φ, so four rates at φ ∈ {0, π/2, π, 3π/2}
/// determine its extrema exactly. For real mode overlap (no relative tilt
/// carrier) this reduces to the φ = 0 / φ = π pair.
pub fn visibility_numeric(config: &ArmConfiguration, z: f64) -> Result<f64, QuadratureError> {
    let phases = [0.0, 0.5 * PI, PI, 1.5 * PI];
    let rates = exec::try_map(&phases, |&phase| detector_rate(&config.with_phase(phase), z))?;
    let in_phase = rates[0] - rates[2];
    let quadrature = rates[1] - rates[3];
    let total = rates[0] + rates[2];
    Ok((in_phase.hypot(quadrature) / total).clamp(0.0, 1.0))
}

/// Longitudinal coherence length `λ²/(π·Δλ)`.
pub fn coherence_length(filter: &SpectralFilter) -> f64 {
    filter.center_wavelength * filter.center_wavelength / (PI * filter.fwhm_bandwidth)
}

/// Coherence envelope `γ(Δl)`, equal to 1/2 at `Δl = ±l_c`.
pub fn coherence_envelope(delay: f64, coherence_length: f64) -> f64 {
    let u = delay / coherence_length;
    (-LN_2 * u * u).exp()
}

/// Fringe visibility at the configuration's own delay: transverse factor
/// times the longitudinal envelope.
pub fn local_visibility(config: &ArmConfiguration, filter: &SpectralFilter) -> f64 {
    config.transverse_visibility() * coherence_envelope(config.delay, filter.coherence_length())
}

/// Expected single-photon rate at path delay `delay` and the configuration's
/// phase: `mean_rate·(1 + V_t·γ(Δl)·cos(2πΔl/λ − φ))`.
pub fn fringe_signal(config: &ArmConfiguration, filter: &SpectralFilter, delay: f64, mean_rate: f64) -> f64 {
    fringe_value(config.transverse_visibility(), filter, delay, config.phase, mean_rate)
}

/// Fringe rate for a given transverse visibility:
/// `mean_rate·(1 + V_t·γ(Δl)·cos(2πΔl/λ − φ))`.
pub fn fringe_value(
    transverse_visibility: f64,
    filter: &SpectralFilter,
    delay: f64,
    phase: f64,
    mean_rate: f64,
) -> f64 {
    let contrast = transverse_visibility * coherence_envelope(delay, filter.coherence_length());
    mean_rate * (1.0 + contrast * (2.0 * PI * delay / filter.center_wavelength - phase).cos())
}

/// Fringe scan over path delay.
pub fn fringe_scan(
    config: &ArmConfiguration,
    filter: &SpectralFilter,
    delays: &[f64],
    mean_rate: f64,
) -> Result<ScanResult, InterferenceError> {
    if !(mean_rate > 0.0) {
        return Err(InterferenceError::Scan(format!("mean rate must be > 0 (got {mean_rate})")));
    }
    let values = exec::map(delays, |&d| fringe_signal(config, filter, d, mean_rate));
    let points = delays.iter().copied().zip(values).collect();
    ScanResult::new("delay", points, ValueKind::Rate, Some(filter.center_wavelength))
}

/// Fringe scan over the interferometer phase at the configuration's delay.
pub fn phase_scan(
    config: &ArmConfiguration,
    filter: &SpectralFilter,
    phases: &[f64],
    mean_rate: f64,
) -> Result<ScanResult, InterferenceError> {
    if !(mean_rate > 0.0) {
        return Err(InterferenceError::Scan(format!("mean rate must be > 0 (got {mean_rate})")));
    }
    let values = exec::map(phases, |&phase| fringe_signal(&config.with_phase(phase), filter, config.delay, mean_rate));
    let points = phases.iter().copied().zip(values).collect();
    ScanResult::new("phase", points, ValueKind::Rate, Some(2.0 * PI))
}
