//! Declarative experiment scenarios.
//!
//! A scenario is a TOML file with dotted sections; every length accepts a
//! unit suffix (`nm`, `um`, `mm`, `m`):
//!
//! ```toml
//! name = "fig5-tangential"
//!
//! [geometry]
//! waist_radius = "82.5um"
//! wavelength = "808nm"
//! reference_distance = "661mm"
//!
//! [filter]
//! center = "808nm"
//! fwhm = "2.5nm"
//!
//! [model]
//! v_max = 0.90
//!
//! [scan]
//! axis = "tangential"     # delay | tangential | radial | phase
//! start = "-6mm"
//! stop = "6mm"
//! step = "0.5mm"
//! estimated = true        # requires [monte_carlo]
//!
//! [monte_carlo]
//! pairs_per_point = 100000
//! phases = 20
//! seed = 20160423
//! ```
//!
//! Running a scenario writes `<name>.csv` and `<name>.summary.txt` into the
//! output directory. Output is a pure function of the file and the seed.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use rand_distr::{Distribution, Poisson};
use serde::Deserialize;
use thiserror::Error;

use crate::beam::{propagated_radius, Transverse};
use crate::duality::{
    duality_audit, estimate_distinguishability, estimate_visibility, model_distinguishability, model_duality,
    model_visibility, simulate_clicks_with, uniform_phase_grid, DetectionOptions, DualityModel,
};
use crate::estimators::{
    extract_visibility, fit_distinguishability_curve, fit_gaussian_falloff, EstimateError, FitReport,
};
use crate::exec;
use crate::interference::{coherence_envelope, fringe_value, ScanResult, SpectralFilter, ValueKind};
use crate::rng::{derive_seed, substream};
use crate::units::Length;

/// Upper bound on grid points per scan.
pub const MAX_GRID_POINTS: usize = 1_000_000;

/// Scenarios shipped with the crate.
pub const BUNDLED: [(&str, &str); 4] = [
    ("fig4-delay", include_str!("../scenarios/fig4-delay.toml")),
    ("fig5-tangential", include_str!("../scenarios/fig5-tangential.toml")),
    ("fig5-radial", include_str!("../scenarios/fig5-radial.toml")),
    ("fig6-duality", include_str!("../scenarios/fig6-duality.toml")),
];

/// One validation problem, tied to a field path and, when known, a line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub field: String,
    pub reason: String,
    pub line: Option<usize>,
}

impl Diagnostic {
    fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self { field: field.into(), reason: reason.into(), line: None }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {} {}", self.field, self.reason),
            None => write!(f, "{} {}", self.field, self.reason),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario:\n{}", format_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("computation failed: {0}")]
    Fit(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ScenarioError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Invalid(_) => 2,
            ScenarioError::Fit(_) => 3,
            ScenarioError::Io { .. } => 4,
        }
    }
}

impl From<EstimateError> for ScenarioError {
    fn from(e: EstimateError) -> Self {
        ScenarioError::Fit(e.to_string())
    }
}

fn format_diagnostics(diagnostics: &[Diagnostic]) -> String {
    diagnostics.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Delay,
    Tangential,
    Radial,
    Phase,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Delay => "delay",
            Axis::Tangential => "tangential",
            Axis::Radial => "radial",
            Axis::Phase => "phase",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum GridValue {
    Number(f64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    output: Option<PathBuf>,
    geometry: RawGeometry,
    filter: RawFilter,
    model: RawModel,
    scan: RawScan,
    monte_carlo: Option<RawMonteCarlo>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    waist_radius: Length,
    wavelength: Length,
    reference_distance: Length,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFilter {
    center: Length,
    fwhm: Length,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    v_max: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScan {
    axis: Axis,
    start: GridValue,
    stop: GridValue,
    step: GridValue,
    #[serde(default)]
    estimated: bool,
    /// Fixed tangential displacement for delay and phase scans.
    displacement: Option<Length>,
    /// Fixed path delay for displacement and phase scans.
    delay: Option<Length>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMonteCarlo {
    pairs_per_point: i64,
    #[serde(default = "default_phases")]
    phases: i64,
    seed: Option<u64>,
    #[serde(default)]
    dark_counts: f64,
}

fn default_phases() -> i64 {
    20
}

/// Experiment geometry, lengths in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub waist_radius: f64,
    pub wavelength: f64,
    pub reference_distance: f64,
}

impl Geometry {
    /// Detector-mode field radius at the reference plane.
    pub fn reference_radius(&self) -> f64 {
        propagated_radius(self.waist_radius, self.reference_distance, self.wavelength)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    pub axis: Axis,
    /// Abscissae in meters (radians for phase scans).
    pub grid: Vec<f64>,
    pub estimated: bool,
    pub displacement: f64,
    pub delay: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloSpec {
    pub pairs_per_point: u64,
    pub phases: usize,
    pub seed: u64,
    pub dark_counts: f64,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub output_dir: PathBuf,
    pub geometry: Geometry,
    pub filter: SpectralFilter,
    pub v_max: f64,
    pub scan: ScanSpec,
    pub monte_carlo: Option<MonteCarloSpec>,
}

/// Command-line overrides applied before validation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub points: Option<usize>,
}

/// Names of the bundled scenarios.
pub fn bundled_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(name, _)| *name)
}

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

/// Reads a scenario file, falling back to a bundled scenario of that name.
pub fn read_source(path: &Path) -> Result<String, ScenarioError> {
    match fs::read_to_string(path) {
        Ok(text) => Ok(text),
        Err(source) => match path.to_str().and_then(bundled) {
            Some(text) if !path.exists() => Ok(text.to_string()),
            _ => Err(ScenarioError::Io { path: path.to_path_buf(), source }),
        },
    }
}

fn line_of(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

fn grid_number(value: &GridValue, axis: Axis, field: &str, out: &mut Vec<Diagnostic>) -> Option<f64> {
    match (value, axis) {
        (GridValue::Number(v), _) => Some(*v),
        (GridValue::Text(_), Axis::Phase) => {
            out.push(Diagnostic::new(field, "must be a plain number of radians for phase scans"));
            None
        }
        (GridValue::Text(t), _) => match t.parse::<Length>() {
            Ok(l) => Some(l.0),
            Err(e) => {
                out.push(Diagnostic::new(field, e.to_string()));
                None
            }
        },
    }
}

fn positive(value: f64, field: &str, out: &mut Vec<Diagnostic>) {
    if !(value > 0.0 && value.is_finite()) {
        out.push(Diagnostic::new(field, "must be > 0"));
    }
}

/// Parses and validates scenario text, collecting every problem found.
pub fn parse_scenario(source: &str, overrides: &Overrides) -> Result<Scenario, ScenarioError> {
    let raw: RawScenario = toml::from_str(source).map_err(|e| {
        let line = e.span().map(|s| line_of(source, s.start));
        ScenarioError::Invalid(vec![Diagnostic { field: "file".into(), reason: e.message().to_string(), line }])
    })?;
    let mut out = Vec::new();

    if raw.name.trim().is_empty() {
        out.push(Diagnostic::new("name", "must not be empty"));
    } else if raw.name.contains(['/', '\\']) || raw.name.starts_with('.') {
        out.push(Diagnostic::new("name", "must be usable as a file name"));
    }

    let geometry = Geometry {
        waist_radius: raw.geometry.waist_radius.0,
        wavelength: raw.geometry.wavelength.0,
        reference_distance: raw.geometry.reference_distance.0,
    };
    positive(geometry.waist_radius, "geometry.waist_radius", &mut out);
    positive(geometry.wavelength, "geometry.wavelength", &mut out);
    positive(geometry.reference_distance, "geometry.reference_distance", &mut out);

    positive(raw.filter.center.0, "filter.center", &mut out);
    positive(raw.filter.fwhm.0, "filter.fwhm", &mut out);
    let filter = SpectralFilter::new(raw.filter.center.0, raw.filter.fwhm.0);
    if filter.is_err() && raw.filter.fwhm.0 > 0.0 && raw.filter.center.0 > 0.0 {
        out.push(Diagnostic::new("filter.fwhm", "must be less than a tenth of filter.center"));
    }

    if !(0.0..=1.0).contains(&raw.model.v_max) {
        out.push(Diagnostic::new("model.v_max", "must lie in [0, 1]"));
    }

    let axis = raw.scan.axis;
    let start = grid_number(&raw.scan.start, axis, "scan.start", &mut out);
    let stop = grid_number(&raw.scan.stop, axis, "scan.stop", &mut out);
    let step = grid_number(&raw.scan.step, axis, "scan.step", &mut out);
    let mut grid = Vec::new();
    if let (Some(start), Some(stop), Some(step)) = (start, stop, step) {
        grid = build_grid(start, stop, step, overrides.points, &mut out);
        let needed = match axis {
            Axis::Tangential | Axis::Radial => 4,
            Axis::Phase => 3,
            Axis::Delay => 1,
        };
        if !grid.is_empty() && grid.len() < needed {
            out.push(Diagnostic::new(
                "scan.step",
                format!("gives {} grid points; a {} scan needs at least {needed}", grid.len(), axis.name()),
            ));
        }
        if axis == Axis::Phase && grid.len() >= 2 {
            let covered = (stop - start) * grid.len() as f64 / (grid.len() - 1) as f64;
            if covered < 2.0 * std::f64::consts::PI * (1.0 - 1e-9) {
                out.push(Diagnostic::new("scan.stop", "phase scan must cover a full 2π period"));
            }
        }
    }

    let monte_carlo = match (&raw.monte_carlo, raw.scan.estimated) {
        (None, true) => {
            out.push(Diagnostic::new("monte_carlo", "section is required when scan.estimated = true"));
            None
        }
        (Some(_), false) => {
            out.push(Diagnostic::new("monte_carlo", "is only allowed when scan.estimated = true"));
            None
        }
        (None, false) => None,
        (Some(mc), true) => {
            if mc.pairs_per_point <= 0 {
                out.push(Diagnostic::new("monte_carlo.pairs_per_point", "must be > 0"));
            }
            if mc.phases < 3 {
                out.push(Diagnostic::new("monte_carlo.phases", "must be at least 3"));
            }
            if !(mc.dark_counts >= 0.0 && mc.dark_counts.is_finite()) {
                out.push(Diagnostic::new("monte_carlo.dark_counts", "must be >= 0"));
            }
            let seed = overrides.seed.or(mc.seed);
            if seed.is_none() {
                out.push(Diagnostic::new(
                    "monte_carlo.seed",
                    "is required for estimated observables (reproducibility); set it or pass --seed",
                ));
            }
            seed.map(|seed| MonteCarloSpec {
                pairs_per_point: mc.pairs_per_point.max(0) as u64,
                phases: mc.phases.max(0) as usize,
                seed,
                dark_counts: mc.dark_counts,
            })
        }
    };

    let displacement = raw.scan.displacement.map_or(0.0, |l| l.0);
    let delay = raw.scan.delay.map_or(0.0, |l| l.0);
    if !out.is_empty() {
        return Err(ScenarioError::Invalid(out));
    }
    let output_dir = overrides.output_dir.clone().or(raw.output).unwrap_or_else(|| PathBuf::from("."));
    Ok(Scenario {
        name: raw.name,
        output_dir,
        geometry,
        filter: filter.expect("validated above"),
        v_max: raw.model.v_max,
        scan: ScanSpec { axis, grid, estimated: raw.scan.estimated, displacement, delay },
        monte_carlo,
    })
}

fn build_grid(start: f64, stop: f64, step: f64, points: Option<usize>, out: &mut Vec<Diagnostic>) -> Vec<f64> {
    if stop < start {
        out.push(Diagnostic::new("scan.stop", "must be >= scan.start (grid is empty)"));
        return Vec::new();
    }
    let count = match points {
        Some(0) => {
            out.push(Diagnostic::new("--points", "must be > 0 (grid is empty)"));
            return Vec::new();
        }
        Some(n) => n,
        None => {
            if !(step > 0.0 && step.is_finite()) {
                out.push(Diagnostic::new("scan.step", "must be > 0 (grid is empty)"));
                return Vec::new();
            }
            let n = ((stop - start) / step * (1.0 + 1e-12)).floor() + 1.0;
            if n > MAX_GRID_POINTS as f64 {
                out.push(Diagnostic::new("scan.step", format!("gives more than {MAX_GRID_POINTS} grid points")));
                return Vec::new();
            }
            n as usize
        }
    };
    if count > MAX_GRID_POINTS {
        out.push(Diagnostic::new("--points", format!("must not exceed {MAX_GRID_POINTS}")));
        return Vec::new();
    }
    let spacing = match points {
        Some(n) if n > 1 => (stop - start) / (n - 1) as f64,
        Some(_) => 0.0,
        None => step,
    };
    let grid: Vec<f64> = (0..count)
        .map(|i| {
            let x = start + spacing * i as f64;
            if x.abs() < 1e-9 * spacing.abs() {
                0.0
            } else {
                x
            }
        })
        .collect();
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        out.push(Diagnostic::new("scan.step", "grid is not strictly increasing"));
        return Vec::new();
    }
    grid
}

/// Full validation without execution.
pub fn validate_scenario(path: &Path, overrides: &Overrides) -> Result<Scenario, ScenarioError> {
    parse_scenario(&read_source(path)?, overrides)
}

/// Files written by [`run_scenario`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub rows: usize,
    pub summary_text: String,
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn render(&self) -> String {
        let mut text = self.header.join(",");
        text.push('\n');
        for row in &self.rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        text
    }
}

/// Fixed-point formatting without a negative zero.
fn fixed(value: f64, digits: usize) -> String {
    let text = format!("{value:.digits$}");
    if text.starts_with('-') && text[1..].chars().all(|c| c == '0' || c == '.') {
        text[1..].to_string()
    } else {
        text
    }
}

struct Summary(String);

impl Summary {
    fn line(&mut self, key: &str, value: impl fmt::Display) {
        writeln!(self.0, "{key}: {value}").expect("writing to a String");
    }

    fn fit(&mut self, prefix: &str, fit: &FitReport, to_mm: f64) {
        self.line(&format!("{prefix}.amplitude"), fixed(fit.amplitude, 6));
        self.line(
            &format!("{prefix}.amplitude_ci95"),
            format!("{} {}", fixed(fit.ci_amplitude.0, 6), fixed(fit.ci_amplitude.1, 6)),
        );
        self.line(&format!("{prefix}.half_width_mm"), fixed(fit.half_width * to_mm, 6));
        self.line(
            &format!("{prefix}.half_width_ci95_mm"),
            format!("{} {}", fixed(fit.ci_half_width.0 * to_mm, 6), fixed(fit.ci_half_width.1 * to_mm, 6)),
        );
        self.line(&format!("{prefix}.center_mm"), fixed(fit.center * to_mm, 6));
        self.line(&format!("{prefix}.rss"), format!("{:.6e}", fit.rss));
    }
}

/// Runs a validated scenario and writes its CSV and summary.
pub fn run_scenario(scenario: &Scenario) -> Result<RunArtifacts, ScenarioError> {
    let mut summary = Summary(String::new());
    summary.line("scenario", &scenario.name);
    summary.line("axis", scenario.scan.axis.name());
    summary.line("points", scenario.scan.grid.len());
    let w = scenario.geometry.reference_radius();
    summary.line("mode_radius_at_reference_mm", fixed(w * 1e3, 6));
    summary.line("theoretical_half_width_mm", fixed(w * 1e3, 6));
    summary.line("coherence_length_um", fixed(scenario.filter.coherence_length() * 1e6, 3));
    summary.line("v_max", fixed(scenario.v_max, 6));

    let table = match scenario.scan.axis {
        Axis::Tangential | Axis::Radial => displacement_scan(scenario, &mut summary)?,
        Axis::Delay => delay_scan(scenario, &mut summary)?,
        Axis::Phase => phase_axis_scan(scenario, &mut summary)?,
    };

    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ScenarioError::Io { path, source }
    };
    fs::create_dir_all(&scenario.output_dir).map_err(io(&scenario.output_dir))?;
    let csv = scenario.output_dir.join(format!("{}.csv", scenario.name));
    let summary_path = scenario.output_dir.join(format!("{}.summary.txt", scenario.name));
    fs::write(&csv, table.render()).map_err(io(&csv))?;
    fs::write(&summary_path, &summary.0).map_err(io(&summary_path))?;
    Ok(RunArtifacts { csv, summary: summary_path, rows: table.rows.len(), summary_text: summary.0 })
}

fn base_model(scenario: &Scenario) -> Result<DualityModel, ScenarioError> {
    DualityModel::new(scenario.geometry.reference_radius(), scenario.v_max, Transverse::ZERO)
        .map_err(|e| ScenarioError::Fit(e.to_string()))
}

fn fixed_displacement(scenario: &Scenario) -> Transverse {
    Transverse::tangential(scenario.scan.displacement)
}

struct PointEstimate {
    visibility: f64,
    distinguishability: f64,
    ci: (f64, f64),
}

fn estimate_point(
    scenario: &Scenario,
    mc: &MonteCarloSpec,
    model: &DualityModel,
    index: usize,
) -> Result<PointEstimate, ScenarioError> {
    let phases = uniform_phase_grid(mc.phases);
    let options = DetectionOptions { dark_counts_per_phase: mc.dark_counts };
    let stream = simulate_clicks_with(
        model,
        &scenario.filter,
        scenario.scan.delay,
        &phases,
        mc.pairs_per_point,
        derive_seed(mc.seed, index as u64),
        options,
    )
    .map_err(|e| ScenarioError::Fit(e.to_string()))?;
    let d = estimate_distinguishability(&stream)?;
    Ok(PointEstimate { visibility: estimate_visibility(&stream)?, distinguishability: d.value, ci: d.ci })
}

fn displacement_scan(scenario: &Scenario, summary: &mut Summary) -> Result<Table, ScenarioError> {
    let base = base_model(scenario)?;
    let axis = scenario.scan.axis;
    let envelope = coherence_envelope(scenario.scan.delay, scenario.filter.coherence_length());
    let models: Vec<DualityModel> = scenario
        .scan
        .grid
        .iter()
        .map(|&delta| {
            let delta = if axis == Axis::Radial { Transverse::radial(delta) } else { Transverse::tangential(delta) };
            base.with_delta(delta).map_err(|e| ScenarioError::Fit(e.to_string()))
        })
        .collect::<Result<_, _>>()?;

    let analytic_v: Vec<f64> = models.iter().map(|m| model_visibility(m) * envelope).collect();
    let model_d: Vec<f64> = models.iter().map(model_distinguishability).collect();
    let model_sum: Vec<f64> = models.iter().map(model_duality).collect();

    let estimates = match &scenario.monte_carlo {
        Some(mc) => {
            let indexed: Vec<(usize, DualityModel)> = models.iter().copied().enumerate().collect();
            Some(exec::try_map(&indexed, |(i, m)| estimate_point(scenario, mc, m, *i))?)
        }
        None => None,
    };

    let column = if axis == Axis::Radial { "delta_x_mm" } else { "delta_y_mm" };
    let mut header = vec![column, "visibility_analytic", "distinguishability_model", "duality_model"];
    if estimates.is_some() {
        header.extend([
            "visibility_estimated",
            "distinguishability_estimated",
            "distinguishability_ci_low",
            "distinguishability_ci_high",
            "duality_estimated",
        ]);
    }
    let rows = (0..models.len())
        .map(|i| {
            let mut row = vec![
                fixed(scenario.scan.grid[i] * 1e3, 6),
                fixed(analytic_v[i], 9),
                fixed(model_d[i], 9),
                fixed(model_sum[i], 9),
            ];
            if let Some(est) = &estimates {
                let e = &est[i];
                row.extend([
                    fixed(e.visibility, 9),
                    fixed(e.distinguishability, 9),
                    fixed(e.ci.0, 9),
                    fixed(e.ci.1, 9),
                    fixed(duality_audit(e.visibility, e.distinguishability).value, 9),
                ]);
            }
            row
        })
        .collect();

    let grid = &scenario.scan.grid;
    let analytic_points: Vec<(f64, f64)> = grid.iter().copied().zip(analytic_v.iter().copied()).collect();
    let analytic_fit = fit_gaussian_falloff(&analytic_points)?;
    summary.fit("fit_analytic", &analytic_fit, 1e3);

    let (lo, hi) = model_sum.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    summary.line("duality_model_min", fixed(lo, 6));
    summary.line("duality_model_max", fixed(hi, 6));

    let d_points: Vec<(f64, f64)>;
    let reference;
    match &estimates {
        Some(est) => {
            let v_points: Vec<(f64, f64)> = grid.iter().copied().zip(est.iter().map(|e| e.visibility)).collect();
            let estimated_fit = fit_gaussian_falloff(&v_points)?;
            summary.fit("fit_estimated", &estimated_fit, 1e3);
            let audits: Vec<f64> =
                est.iter().map(|e| duality_audit(e.visibility, e.distinguishability).value).collect();
            let max = audits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            summary.line("duality_estimated_max", fixed(max, 6));
            summary.line("duality_violations", audits.iter().filter(|&&v| v > 1.0).count());
            d_points = grid.iter().copied().zip(est.iter().map(|e| e.distinguishability)).collect();
            reference = estimated_fit;
        }
        None => {
            d_points = grid.iter().copied().zip(model_d.iter().copied()).collect();
            reference = analytic_fit;
        }
    }
    let d_fit = fit_distinguishability_curve(&d_points, &reference)?;
    summary.line("fit_distinguishability.center_mm", fixed(d_fit.center * 1e3, 6));
    summary.line(
        "fit_distinguishability.center_ci95_mm",
        format!("{} {}", fixed(d_fit.ci_center.0 * 1e3, 6), fixed(d_fit.ci_center.1 * 1e3, 6)),
    );
    summary.line("fit_distinguishability.rss", format!("{:.6e}", d_fit.rss));

    Ok(Table { header: header.into_iter().map(String::from).collect(), rows })
}

fn poisson_count(mean: f64, seed: u64, index: usize) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let mut rng = substream(seed, index as u64);
    Poisson::new(mean).expect("positive mean").sample(&mut rng) as u64
}

/// Half width at half maximum of a sampled, peaked profile, by linear
/// interpolation on the right-hand flank.
fn half_width_half_max(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let peak = (0..ys.len()).max_by(|&a, &b| ys[a].total_cmp(&ys[b]))?;
    let half = 0.5 * ys[peak];
    (peak..ys.len() - 1).find(|&i| ys[i] >= half && ys[i + 1] < half).map(|i| {
        let t = (ys[i] - half) / (ys[i] - ys[i + 1]);
        xs[i] + t * (xs[i + 1] - xs[i]) - xs[peak]
    })
}

fn delay_scan(scenario: &Scenario, summary: &mut Summary) -> Result<Table, ScenarioError> {
    let model = base_model(scenario)?
        .with_delta(fixed_displacement(scenario))
        .map_err(|e| ScenarioError::Fit(e.to_string()))?;
    let transverse = model_visibility(&model);
    let lc = scenario.filter.coherence_length();
    let grid = &scenario.scan.grid;
    let rates = exec::map(grid, |&d| fringe_value(transverse, &scenario.filter, d, 0.0, 1.0));
    let local: Vec<f64> = grid.iter().map(|&d| transverse * coherence_envelope(d, lc)).collect();
    let counts = scenario.monte_carlo.map(|mc| {
        let mean = 0.5 * mc.pairs_per_point as f64;
        let indices: Vec<usize> = (0..grid.len()).collect();
        exec::map(&indices, |&i| poisson_count(mean * rates[i] + mc.dark_counts, mc.seed, i))
    });

    let mut header = vec!["delay_um", "rate", "local_visibility"];
    if counts.is_some() {
        header.push("counts_estimated");
    }
    let rows = (0..grid.len())
        .map(|i| {
            let mut row = vec![fixed(grid[i] * 1e6, 6), fixed(rates[i], 9), fixed(local[i], 9)];
            if let Some(c) = &counts {
                row.push(c[i].to_string());
            }
            row
        })
        .collect();

    summary.line("transverse_visibility", fixed(transverse, 6));
    match half_width_half_max(grid, &local) {
        Some(hwhm) => summary.line("envelope_hwhm_um", fixed(hwhm * 1e6, 3)),
        None => summary.line("envelope_hwhm_um", "not resolved by the scan range"),
    }
    Ok(Table { header: header.into_iter().map(String::from).collect(), rows })
}

fn phase_axis_scan(scenario: &Scenario, summary: &mut Summary) -> Result<Table, ScenarioError> {
    let model = base_model(scenario)?
        .with_delta(fixed_displacement(scenario))
        .map_err(|e| ScenarioError::Fit(e.to_string()))?;
    let transverse = model_visibility(&model);
    let grid = &scenario.scan.grid;
    let delay = scenario.scan.delay;
    let rates: Vec<f64> = grid.iter().map(|&p| fringe_value(transverse, &scenario.filter, delay, p, 1.0)).collect();
    let counts = scenario.monte_carlo.map(|mc| {
        let mean = 0.5 * mc.pairs_per_point as f64;
        (0..grid.len()).map(|i| poisson_count(mean * rates[i] + mc.dark_counts, mc.seed, i)).collect::<Vec<u64>>()
    });

    let period = Some(2.0 * std::f64::consts::PI);
    let to_scan = |values: Vec<f64>, kind| {
        ScanResult::new("phase", grid.iter().copied().zip(values).collect(), kind, period)
            .map_err(|e| ScenarioError::Fit(e.to_string()))
    };
    let analytic = extract_visibility(&to_scan(rates.clone(), ValueKind::Rate)?)?;
    summary.line("visibility_analytic", fixed(analytic, 9));
    if let Some(c) = &counts {
        let estimated = extract_visibility(&to_scan(c.iter().map(|&v| v as f64).collect(), ValueKind::Counts)?)?;
        summary.line("visibility_estimated", fixed(estimated, 9));
    }

    let mut header = vec!["phase_rad", "rate"];
    if counts.is_some() {
        header.push("counts_estimated");
    }
    let rows = (0..grid.len())
        .map(|i| {
            let mut row = vec![fixed(grid[i], 9), fixed(rates[i], 9)];
            if let Some(c) = &counts {
                row.push(c[i].to_string());
            }
            row
        })
        .collect();
    Ok(Table { header: header.into_iter().map(String::from).collect(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Scenario, ScenarioError> {
        parse_scenario(text, &Overrides::default())
    }

    fn diagnostics(text: &str) -> Vec<Diagnostic> {
        match parse(text) {
            Err(ScenarioError::Invalid(d)) => d,
            other => panic!("expected invalid scenario, got {other:?}"),
        }
    }

    const BASE: &str = r#"
name = "t"
[geometry]
waist_radius = "82.5um"
wavelength = "808nm"
reference_distance = "661mm"
[filter]
center = "808nm"
fwhm = "2.5nm"
[model]
v_max = 0.9
[scan]
axis = "tangential"
start = "-6mm"
stop = "6mm"
step = "0.5mm"
"#;

    #[test]
    fn bundled_scenarios_validate() {
        for (name, text) in BUNDLED {
            let scenario = parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(scenario.name, name);
        }
    }

    #[test]
    fn units_are_normalized() {
        let s = parse(BASE).unwrap();
        assert_eq!(s.geometry.waist_radius, 82.5e-6);
        assert_eq!(s.geometry.reference_distance, 0.661);
        assert_eq!(s.scan.grid.len(), 25);
        assert_eq!(s.scan.grid[12], 0.0);
        assert!((s.scan.grid[24] - 6e-3).abs() < 1e-15);
    }

    #[test]
    fn negative_waist_radius_is_named() {
        let d = diagnostics(&BASE.replace("\"82.5um\"", "\"-82.5um\""));
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].to_string(), "geometry.waist_radius must be > 0");
    }

    #[test]
    fn empty_grid_is_named() {
        let d = diagnostics(&BASE.replace("step = \"0.5mm\"", "step = \"0mm\""));
        assert_eq!(d[0].field, "scan.step");
        let d = diagnostics(&BASE.replace("stop = \"6mm\"", "stop = \"-7mm\""));
        assert_eq!(d[0].field, "scan.stop");
    }

    #[test]
    fn estimation_requires_a_seed() {
        let text = BASE.replace("step = \"0.5mm\"", "step = \"0.5mm\"\nestimated = true")
            + "[monte_carlo]\npairs_per_point = 1000\n";
        let d = diagnostics(&text);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].field, "monte_carlo.seed");
        assert!(d[0].reason.contains("reproducibility"));

        let with_override = Overrides { seed: Some(9), ..Overrides::default() };
        let s = parse_scenario(&text, &with_override).unwrap();
        assert_eq!(s.monte_carlo.unwrap().seed, 9);
    }

    #[test]
    fn monte_carlo_present_iff_estimated() {
        let d = diagnostics(&BASE.replace("step = \"0.5mm\"", "step = \"0.5mm\"\nestimated = true"));
        assert_eq!(d[0].field, "monte_carlo");
        let d = diagnostics(&(BASE.to_string() + "[monte_carlo]\npairs_per_point = 10\nseed = 1\n"));
        assert_eq!(d[0].field, "monte_carlo");
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let d = diagnostics(&BASE.replace("v_max = 0.9", "v_max = \"high\""));
        assert_eq!(d[0].line, Some(11));
        let d = diagnostics(&BASE.replace("\"661mm\"", "\"661 furlongs\""));
        assert!(d[0].line.is_some());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(parse(&(BASE.to_string() + "colour = 3\n")).is_err());
    }

    #[test]
    fn several_problems_are_reported_together() {
        let text = BASE.replace("\"82.5um\"", "\"0um\"").replace("v_max = 0.9", "v_max = 1.5");
        let d = diagnostics(&text);
        let fields: Vec<&str> = d.iter().map(|d| d.field.as_str()).collect();
        assert_eq!(fields, ["geometry.waist_radius", "model.v_max"]);
    }

    #[test]
    fn points_override_resamples_the_grid() {
        let s = parse_scenario(BASE, &Overrides { points: Some(5), ..Overrides::default() }).unwrap();
        let expected = [-6e-3, -3e-3, 0.0, 3e-3, 6e-3];
        assert_eq!(s.scan.grid.len(), expected.len());
        for (got, want) in s.scan.grid.iter().zip(expected) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn phase_scans_need_radians_and_a_full_period() {
        let phase = BASE
            .replace("axis = \"tangential\"", "axis = \"phase\"")
            .replace("start = \"-6mm\"", "start = 0.0")
            .replace("stop = \"6mm\"", "stop = 3.0")
            .replace("step = \"0.5mm\"", "step = 0.5");
        let d = diagnostics(&phase);
        assert_eq!(d[0].field, "scan.stop");
        let d = diagnostics(&phase.replace("stop = 3.0", "stop = \"6mm\""));
        assert_eq!(d[0].field, "scan.stop");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(ScenarioError::Invalid(vec![]).exit_code(), 2);
        assert_eq!(ScenarioError::Fit("x".into()).exit_code(), 3);
        let io = ScenarioError::Io { path: "p".into(), source: std::io::Error::other("x") };
        assert_eq!(io.exit_code(), 4);
    }

    #[test]
    fn negative_zero_is_not_printed() {
        assert_eq!(fixed(-1e-12, 6), "0.000000");
        assert_eq!(fixed(-0.5, 3), "-0.500");
    }

    #[test]
    fn hwhm_interpolation() {
        let xs: Vec<f64> = (0..101).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 - x / 100.0).collect();
        assert!((half_width_half_max(&xs, &ys).unwrap() - 50.0).abs() < 1e-9);
    }
}
