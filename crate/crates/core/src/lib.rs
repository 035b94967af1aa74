//! Desk-scale simulator for single-photon Mach-Zehnder complementarity
//! experiments on down-converted light.
//!
//! The crate is organized bottom-up:
//!
//! * [`beam`]: TEM₀₀ Gaussian modes, free-space propagation and pointwise
//!   complex amplitudes.
//! * [`quadrature`]: adaptive Gauss-Kronrod integration used for detector
//!   counting rates.
//! * [`interference`]: two-arm superposition, detector rates, visibility
//!   (closed form and by quadrature) and longitudinal fringe scans.
//! * [`duality`]: click-level Monte Carlo of signal counts and signal-idler
//!   coincidences, and the `D² + V²` audit.
//! * [`estimators`]: fringe-visibility extraction and Gaussian fall-off fits.
//! * [`scenario`]: declarative scenario files, CSV output and summaries.
//!
//! Data-parallel sweeps go through [`exec`], which uses rayon when the
//! `parallel` feature is enabled (the default) and plain iterators otherwise.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beam;
pub mod duality;
pub mod estimators;
pub mod exec;
pub mod interference;
pub mod quadrature;
pub mod rng;
pub mod scenario;
pub mod units;

pub use beam::{propagated_radius, rayleigh_range, ComplexAmplitude, GaussianMode, Transverse};
pub use duality::{ClickStream, DualityAudit, DualityModel};
pub use estimators::FitReport;
pub use interference::{ArmConfiguration, ScanResult, SpectralFilter, ValueKind};
