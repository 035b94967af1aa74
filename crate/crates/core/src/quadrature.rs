//! Globally adaptive Gauss-Kronrod (7/15) quadrature in one dimension and an
//! iterated version over rectangles.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("quadrature did not converge: achieved relative error {achieved:.3e}, requested {requested:.3e}")]
pub struct QuadratureError {
    pub achieved: f64,
    pub requested: f64,
}

/// Integral estimate together with its absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
}

impl Integral {
    pub fn relative_error(&self) -> f64 {
        if self.value == 0.0 {
            self.abs_error
        } else {
            self.abs_error / self.value.abs()
        }
    }
}

/// Tolerances and limits for adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub relative: f64,
    pub absolute: f64,
    pub max_segments: usize,
    /// Uniform pre-split of the interval before adaptation starts.
    pub initial_segments: usize,
}

impl Tolerance {
    pub fn relative(relative: f64) -> Self {
        Self { relative, ..Self::default() }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { relative: 1e-8, absolute: 0.0, max_segments: 4000, initial_segments: 8 }
    }
}

// Kronrod abscissae on [0, 1]; even indices (1, 3, 5, 7) are the Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gauss_kronrod<F, E>(f: &mut F, a: f64, b: f64) -> Result<Segment, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&node, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * node;
        let pair = f(center - dx)? + f(center + dx)?;
        kronrod += wk * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Ok(Segment { a, b, value: kronrod * half, error: ((kronrod - gauss) * half).abs() })
}

/// Adaptive integration of a fallible integrand. Inner failures propagate
/// unchanged; failure to reach the tolerance is reported through `on_limit`.
fn adapt<F, E>(
    mut f: F,
    a: f64,
    b: f64,
    tol: Tolerance,
    on_limit: impl FnOnce(QuadratureError) -> E,
) -> Result<Integral, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    if a == b {
        return Ok(Integral { value: 0.0, abs_error: 0.0 });
    }
    let pieces = tol.initial_segments.max(1);
    let width = (b - a) / pieces as f64;
    let mut segments = Vec::with_capacity(pieces * 4);
    for i in 0..pieces {
        let lo = a + width * i as f64;
        let hi = if i + 1 == pieces { b } else { lo + width };
        segments.push(gauss_kronrod(&mut f, lo, hi)?);
    }

    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        let target = tol.absolute.max(tol.relative * value.abs());
        if error <= target {
            return Ok(Integral { value, abs_error: error });
        }
        if segments.len() >= tol.max_segments {
            let achieved = if value == 0.0 { error } else { error / value.abs() };
            return Err(on_limit(QuadratureError { achieved, requested: tol.relative }));
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|l, r| l.1.error.total_cmp(&r.1.error))
            .map(|(i, _)| i)
            .expect("at least one segment");
        let Segment { a: lo, b: hi, .. } = segments.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            let achieved = if value == 0.0 { error } else { error / value.abs() };
            return Err(on_limit(QuadratureError { achieved, requested: tol.relative }));
        }
        segments.push(gauss_kronrod(&mut f, lo, mid)?);
        segments.push(gauss_kronrod(&mut f, mid, hi)?);
    }
}

/// ∫ₐᵇ f(x) dx.
pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral, QuadratureError>
where
    F: FnMut(f64) -> f64,
{
    adapt(|x| Ok(f(x)), a, b, tol, |e| e)
}

/// ∬ f(x, y) dy dx over `[x0, x1] × [y0, y1]` by iterated adaptive
/// integration. The inner integrals run at a hundredth of the outer relative
/// tolerance so their error does not dominate.
pub fn integrate_2d<F>(
    f: F,
    (x0, x1): (f64, f64),
    (y0, y1): (f64, f64),
    tol: Tolerance,
) -> Result<Integral, QuadratureError>
where
    F: Fn(f64, f64) -> f64,
{
    let inner_tol = Tolerance { relative: tol.relative * 1e-2, ..tol };
    let mut inner_rel: f64 = 0.0;
    let outer = adapt(
        |x| {
            let inner = integrate(|y| f(x, y), y0, y1, inner_tol)?;
            inner_rel = inner_rel.max(inner.relative_error());
            Ok(inner.value)
        },
        x0,
        x1,
        tol,
        |e| e,
    )?;
    Ok(Integral { value: outer.value, abs_error: outer.abs_error + inner_rel * outer.value.abs() })
}
