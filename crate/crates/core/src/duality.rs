//! Click-level Monte Carlo of the complementarity measurement.
//!
//! The vacuum fields seeding the two selected signal modes are represented
//! statistically. Each distinguishable mode carries an independent random
//! phase, so only the overlapping share of the two modes interferes. That
//! share sets the visibility, and the coincidence split against the idler
//! (fixed opposite signal 1) sets the distinguishability.
//!
//! Model:
//!
//! * `V(Δ) = v_max·exp(−|Δ|²/(2w²))`
//! * `D(Δ) = √(1 − exp(−|Δ|²/w²))`, the pure-state saturation evaluated
//!   with the unscaled visibility, so `D² + V² = 1 − (1 − v_max²)·e^{−|Δ|²/w²}`.
//!
//! Tangential and radial displacements combine in quadrature.

use rand_distr::{Binomial, Distribution, Poisson};
use thiserror::Error;

use crate::beam::Transverse;
use crate::estimators::{extract_visibility, percentile_interval, EstimateError, BOOTSTRAP_RESAMPLES};
use crate::exec;
use crate::interference::{coherence_envelope, ScanResult, SpectralFilter, ValueKind};
use crate::rng::substream;

/// Stream index offset reserved for the distinguishability bootstrap.
const BOOTSTRAP_STREAM_BASE: u64 = 1 << 48;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DualityError {
    #[error("mode radius must be > 0 (got {0} m)")]
    Radius(f64),
    #[error("maximum visibility must lie in [0, 1] (got {0})")]
    MaxVisibility(f64),
    #[error("displacement must be finite")]
    Displacement,
    #[error("pairs per phase must be > 0")]
    NoPairs,
    #[error("dark counts per phase must be finite and >= 0 (got {0})")]
    DarkCounts(f64),
    #[error("phase grid must be non-empty and strictly increasing")]
    PhaseGrid,
}

/// Parameters of the duality model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityModel {
    w: f64,
    v_max: f64,
    delta: Transverse,
}

impl DualityModel {
    pub fn new(w: f64, v_max: f64, delta: Transverse) -> Result<Self, DualityError> {
        if !(w > 0.0 && w.is_finite()) {
            return Err(DualityError::Radius(w));
        }
        if !(0.0..=1.0).contains(&v_max) {
            return Err(DualityError::MaxVisibility(v_max));
        }
        if !delta.tangential.is_finite() || !delta.radial.is_finite() {
            return Err(DualityError::Displacement);
        }
        Ok(Self { w, v_max, delta })
    }

    pub fn with_delta(self, delta: Transverse) -> Result<Self, DualityError> {
        Self::new(self.w, self.v_max, delta)
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn delta(&self) -> Transverse {
        self.delta
    }

    fn overlap(&self) -> f64 {
        let d = self.delta.norm();
        (-(d * d) / (self.w * self.w)).exp()
    }
}

pub fn model_visibility(model: &DualityModel) -> f64 {
    model.v_max * model.overlap().sqrt()
}

pub fn model_distinguishability(model: &DualityModel) -> f64 {
    let d = model.delta.norm();
    (-(-(d * d) / (model.w * model.w)).exp_m1()).sqrt()
}

/// `D² + V²` of the model.
pub fn model_duality(model: &DualityModel) -> f64 {
    let d = model_distinguishability(model);
    let v = model_visibility(model);
    d * d + v * v
}

/// Simulated detection record.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickStream {
    pub phase_grid: Vec<f64>,
    pub signal_counts: Vec<u64>,
    pub coincidence_path1: Vec<u64>,
    pub coincidence_path2: Vec<u64>,
    pub seed: u64,
}

impl ClickStream {
    pub fn total_coincidences(&self) -> (u64, u64) {
        (self.coincidence_path1.iter().sum(), self.coincidence_path2.iter().sum())
    }

    /// Signal counts versus phase as a fringe scan.
    pub fn signal_scan(&self) -> Result<ScanResult, EstimateError> {
        let points = self.phase_grid.iter().zip(&self.signal_counts).map(|(&p, &c)| (p, c as f64)).collect();
        ScanResult::new("phase", points, ValueKind::Counts, Some(2.0 * std::f64::consts::PI))
            .map_err(|e| EstimateError::Degenerate(e.to_string()))
    }
}

/// Knobs of the detection model beyond the duality model itself.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DetectionOptions {
    /// Mean dark counts added to the signal detector at every phase point.
    pub dark_counts_per_phase: f64,
}

/// Simulates signal counts and signal-idler coincidences on a phase grid.
pub fn simulate_clicks(
    model: &DualityModel,
    filter: &SpectralFilter,
    delay: f64,
    phase_grid: &[f64],
    pairs_per_phase: u64,
    seed: u64,
) -> Result<ClickStream, DualityError> {
    simulate_clicks_with(model, filter, delay, phase_grid, pairs_per_phase, seed, DetectionOptions::default())
}

pub fn simulate_clicks_with(
    model: &DualityModel,
    filter: &SpectralFilter,
    delay: f64,
    phase_grid: &[f64],
    pairs_per_phase: u64,
    seed: u64,
    options: DetectionOptions,
) -> Result<ClickStream, DualityError> {
    if pairs_per_phase == 0 {
        return Err(DualityError::NoPairs);
    }
    if phase_grid.is_empty() || phase_grid.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(DualityError::PhaseGrid);
    }
    let dark = options.dark_counts_per_phase;
    if !(dark >= 0.0 && dark.is_finite()) {
        return Err(DualityError::DarkCounts(dark));
    }

    let v_eff = model_visibility(model) * coherence_envelope(delay, filter.coherence_length());
    let d = model_distinguishability(model);
    let p_path1 = (0.5 * (1.0 + d)).clamp(0.0, 1.0);
    let pairs = pairs_per_phase as f64;

    let draws = exec::map_range(phase_grid.len(), |i| {
        let mut rng = substream(seed, i as u64);
        let mean = 0.5 * pairs * (1.0 + v_eff * phase_grid[i].cos()) + dark;
        let signal = poisson(mean, &mut rng);
        let coincidences = poisson(pairs, &mut rng);
        let path1 = Binomial::new(coincidences, p_path1).expect("probability clamped to [0, 1]").sample(&mut rng);
        (signal, path1, coincidences - path1)
    });

    Ok(ClickStream {
        phase_grid: phase_grid.to_vec(),
        signal_counts: draws.iter().map(|d| d.0).collect(),
        coincidence_path1: draws.iter().map(|d| d.1).collect(),
        coincidence_path2: draws.iter().map(|d| d.2).collect(),
        seed,
    })
}

fn poisson<R: rand::Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
}

/// `n` equally spaced phases covering one period, starting at 0.
pub fn uniform_phase_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| 2.0 * std::f64::consts::PI * k as f64 / n as f64).collect()
}

/// Fringe visibility of the simulated signal counts.
pub fn estimate_visibility(stream: &ClickStream) -> Result<f64, EstimateError> {
    extract_visibility(&stream.signal_scan()?)
}

/// A point estimate with a 95% confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub ci: (f64, f64),
}

fn which_path(r1: u64, r2: u64) -> Option<f64> {
    let total = r1 + r2;
    (total > 0).then(|| (r1 as f64 - r2 as f64) / total as f64)
}

/// `D = (ΣR₁ − ΣR₂)/(ΣR₁ + ΣR₂)` with a bootstrap interval over phase points.
pub fn estimate_distinguishability(stream: &ClickStream) -> Result<Estimate, EstimateError> {
    let (r1, r2) = stream.total_coincidences();
    let value = which_path(r1, r2).ok_or_else(|| EstimateError::Undefined("no coincidences recorded".into()))?;
    let n = stream.coincidence_path1.len();
    let draws = exec::map_range(BOOTSTRAP_RESAMPLES, |b| {
        let mut rng = substream(stream.seed, BOOTSTRAP_STREAM_BASE + b as u64);
        let (mut s1, mut s2) = (0u64, 0u64);
        for _ in 0..n {
            let k = rand::Rng::random_range(&mut rng, 0..n);
            s1 += stream.coincidence_path1[k];
            s2 += stream.coincidence_path2[k];
        }
        which_path(s1, s2)
    });
    let mut samples: Vec<f64> = draws.into_iter().flatten().collect();
    Ok(Estimate { value, ci: percentile_interval(&mut samples, 0.95, value) })
}

/// `D² + V²` with a flag for exceeding the complementarity bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityAudit {
    pub value: f64,
    pub violation: bool,
}

pub fn duality_audit(v: f64, d: f64) -> DualityAudit {
    let value = d * d + v * v;
    DualityAudit { value, violation: value > 1.0 }
}
