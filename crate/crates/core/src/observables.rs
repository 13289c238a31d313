//! Detector-level quantities: photon fluxes, averaged and time-gated g̅²(0),
//! jitter convolution, monoexponential decay fits, and the scalar HOM
//! visibility/indistinguishability formulas.
//!
//! The two flux channels are N₁(t) = (Γ/2)⟨σ₊σ₋⟩(t) for the first generation
//! and N₂(t) = (Γ/2)⟨S₊S₋⟩(t) for the field re-scattered off the emitter,
//! with S₋ the collective output operator. Averaged statistics follow
//!
//!   g̅²(0) = 2 ∫dt ∫dτ G²(t, t+τ) / |∫dt N(t)|²,
//!
//! evaluated with trapezoidal quadrature; the gated variant restricts both
//! integrals to t ≥ t_start (snapped to the grid).
//!
//! Detector jitter is applied to reported traces and maps only, never inside
//! the dynamics.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lindblad::Trajectory;
use crate::quantum::{collective_jump, SystemParams, TimeGrid};

/// Negative artifacts smaller than this are clamped to zero on export.
const EXPORT_CLAMP: f64 = 1e-12;

/// A sampled time series: photon flux (ps⁻¹) or, for map diagonals, G²
/// values (ps⁻²), on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxTrace {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl FluxTrace {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(Error::InvalidParameter {
                name: "trace",
                reason: format!("{} times vs {} values", times.len(), values.len()),
            });
        }
        Ok(FluxTrace { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Grid spacing (the grid is uniform by construction).
    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    /// Trapezoidal time integral.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.values) * self.dt()
    }

    /// Values with tiny negative artifacts (|v| < 1e-12) clamped to zero;
    /// raw numerics are preserved internally.
    pub fn export_values(&self) -> Vec<f64> {
        self.values.iter().map(|&v| clamp_export(v)).collect()
    }
}

fn clamp_export(v: f64) -> f64 {
    if v < 0.0 && v > -EXPORT_CLAMP {
        0.0
    } else {
        v
    }
}

/// Trapezoid weights: end points count half.
fn trapezoid(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mut acc = 0.5 * (values[0] + values[n - 1]);
    for v in &values[1..n - 1] {
        acc += v;
    }
    acc
}

/// G²(t₁, t₂) sampled on a shared uniform axis, symmetric by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMap {
    axis: Vec<f64>,
    values: Vec<f64>, // row-major, len = axis.len()²
}

impl CorrelationMap {
    pub fn new(axis: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if axis.len() < 2 || values.len() != axis.len() * axis.len() {
            return Err(Error::InvalidParameter {
                name: "map",
                reason: format!("{} axis points vs {} values", axis.len(), values.len()),
            });
        }
        Ok(CorrelationMap { axis, values })
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn len(&self) -> usize {
        self.axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.axis[1] - self.axis[0]
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.axis.len() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// |G²(t₁,t₂) − G²(t₂,t₁)| maximum, for symmetry checks.
    pub fn max_asymmetry(&self) -> f64 {
        let n = self.axis.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.value(i, j) - self.value(j, i)).abs());
            }
        }
        worst
    }

    /// The t₁ = t₂ cut as a labeled series (values in ps⁻²).
    pub fn diagonal(&self) -> FluxTrace {
        let values = (0..self.axis.len()).map(|i| self.value(i, i)).collect();
        FluxTrace {
            times: self.axis.clone(),
            values,
        }
    }

    /// Trapezoid-weighted fraction of the map integral carried by the band
    /// |t₁ − t₂| < halfwidth.
    pub fn band_fraction(&self, halfwidth: f64) -> f64 {
        let n = self.axis.len();
        let w = |k: usize| if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        let mut total = 0.0;
        let mut band = 0.0;
        for i in 0..n {
            for j in 0..n {
                let cell = w(i) * w(j) * self.value(i, j);
                total += cell;
                if (self.axis[i] - self.axis[j]).abs() < halfwidth {
                    band += cell;
                }
            }
        }
        band / total
    }

    pub fn export_value(&self, i: usize, j: usize) -> f64 {
        clamp_export(self.value(i, j))
    }
}

/// First-generation flux N₁(t) = (Γ/2) ⟨σ₊σ₋⟩(t) = (Γ/2) P_e(t).
pub fn flux_first(traj: &Trajectory, params: &SystemParams) -> Result<FluxTrace> {
    if traj.state(0).dim() != 2 {
        return Err(Error::DimensionMismatch {
            op: "flux_first",
            lhs: traj.state(0).dim(),
            rhs: 2,
        });
    }
    let half_gamma = params.gamma / 2.0;
    let values = traj
        .states()
        .iter()
        .map(|s| half_gamma * s.matrix().get(1, 1).re)
        .collect();
    FluxTrace::new(traj.grid().times(), values)
}

/// Second-generation flux N₂(t) = (Γ/2) ⟨S₊S₋⟩(t), with S₋ built from the
/// same parameters.
pub fn flux_second(traj: &Trajectory, params: &SystemParams) -> Result<FluxTrace> {
    if traj.state(0).dim() != 4 {
        return Err(Error::DimensionMismatch {
            op: "flux_second",
            lhs: traj.state(0).dim(),
            rhs: 4,
        });
    }
    let s_minus = collective_jump(params);
    let norm_op = &s_minus.adjoint() * &s_minus;
    let half_gamma = params.gamma / 2.0;
    let values = traj
        .states()
        .iter()
        .map(|s| half_gamma * norm_op.checked_mul(s.matrix()).expect("dim 4").trace().re)
        .collect();
    FluxTrace::new(traj.grid().times(), values)
}

/// Pulse-averaged statistics g̅²(0) = 2∫dt∫dτ G²(t,t+τ) / |∫dt N(t)|².
///
/// By the symmetry of the map, twice the τ ≥ 0 half equals the full-square
/// integral, which is what the 2D trapezoid evaluates.
pub fn g2_bar(map: &CorrelationMap, flux: &FluxTrace) -> Result<f64> {
    g2_bar_gated(map, flux, map.axis()[0])
}

/// Same as [`g2_bar`] with both time arguments restricted to t ≥ t_start;
/// t_start snaps to the nearest grid point.
pub fn g2_bar_gated(map: &CorrelationMap, flux: &FluxTrace, t_start: f64) -> Result<f64> {
    check_compatible(map, flux)?;
    let axis = map.axis();
    let h = map.dt();
    let last = *axis.last().expect("nonempty axis");
    if t_start < axis[0] - 0.5 * h || t_start > last {
        return Err(Error::EmptyGateWindow {
            t_start,
            grid_start: axis[0],
            grid_end: last,
        });
    }
    let i0 = ((t_start - axis[0]) / h).round().max(0.0) as usize;
    if i0 + 1 >= axis.len() {
        return Err(Error::EmptyGateWindow {
            t_start,
            grid_start: axis[0],
            grid_end: last,
        });
    }

    let n = axis.len();
    let w = |k: usize| if k == i0 || k == n - 1 { 0.5 } else { 1.0 };
    let mut numerator = 0.0;
    for i in i0..n {
        let wi = w(i);
        let mut row_acc = 0.0;
        for j in i0..n {
            row_acc += w(j) * map.value(i, j);
        }
        numerator += wi * row_acc;
    }
    numerator *= h * h;

    let mut den = 0.0;
    for (k, v) in flux.values().iter().enumerate().skip(i0) {
        den += w(k) * v;
    }
    den *= h;

    if den == 0.0 {
        return Err(Error::UndefinedStatistics);
    }
    Ok((numerator / (den * den)).max(0.0))
}

fn check_compatible(map: &CorrelationMap, flux: &FluxTrace) -> Result<()> {
    if map.len() != flux.len() {
        return Err(Error::DimensionMismatch {
            op: "g2_bar",
            lhs: map.len(),
            rhs: flux.len(),
        });
    }
    for (a, b) in map.axis().iter().zip(flux.times()) {
        if (a - b).abs() > 1e-9 {
            return Err(Error::InvalidParameter {
                name: "flux",
                reason: format!("flux grid point {b} does not match map axis point {a}"),
            });
        }
    }
    Ok(())
}

/// Normalized Gaussian kernel samples for a FWHM on grid spacing `h`;
/// σ = fwhm / (2√(2 ln 2)) ≈ fwhm / 2.3548, support cut at 4σ.
fn gaussian_kernel(h: f64, fwhm: f64) -> Vec<f64> {
    let sigma = fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
    let halfwidth = (4.0 * sigma / h).ceil() as i64;
    let mut kernel: Vec<f64> = (-halfwidth..=halfwidth)
        .map(|k| {
            let x = k as f64 * h;
            (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let norm: f64 = kernel.iter().sum::<f64>() * h;
    for v in &mut kernel {
        *v /= norm;
    }
    kernel
}

fn convolve_values(values: &[f64], kernel: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let half = (kernel.len() - 1) as i64 / 2;
    (0..n as i64)
        .map(|i| {
            let mut acc = 0.0;
            for (k, kv) in kernel.iter().enumerate() {
                let j = i + (k as i64 - half);
                if j >= 0 && j < n as i64 {
                    acc += kv * values[j as usize];
                }
            }
            acc * h
        })
        .collect()
}

/// Detector-jitter convolution with a normalized Gaussian (zero-padded
/// boundaries); fwhm = 0 is the identity. Preserves the time integral of
/// signals supported away from the boundaries to ~1e-6 relative.
pub fn convolve_jitter_1d(trace: &FluxTrace, fwhm: f64) -> FluxTrace {
    if fwhm == 0.0 {
        return trace.clone();
    }
    let kernel = gaussian_kernel(trace.dt(), fwhm);
    FluxTrace {
        times: trace.times.clone(),
        values: convolve_values(&trace.values, &kernel, trace.dt()),
    }
}

/// Separable 2D jitter convolution: rows, then columns.
pub fn convolve_jitter_2d(map: &CorrelationMap, fwhm: f64) -> CorrelationMap {
    if fwhm == 0.0 {
        return map.clone();
    }
    let n = map.len();
    let h = map.dt();
    let kernel = gaussian_kernel(h, fwhm);

    let row_pass: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| convolve_values(&map.values[i * n..(i + 1) * n], &kernel, h))
        .collect();

    let col_pass: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let column: Vec<f64> = (0..n).map(|i| row_pass[i][j]).collect();
            convolve_values(&column, &kernel, h)
        })
        .collect();

    let mut values = vec![0.0; n * n];
    for (j, col) in col_pass.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            values[i * n + j] = *v;
        }
    }
    CorrelationMap {
        axis: map.axis.clone(),
        values,
    }
}

/// Result of a monoexponential fit v(t) ≈ amplitude · e^{−t/tau}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    /// Extrapolated value at t = 0, same units as the input.
    pub amplitude: f64,
    /// Decay time (ps), positive.
    pub tau: f64,
    /// RMS residual of the straight-line fit in the log domain.
    pub rms_log_residual: f64,
}

/// Least-squares line fit to log(values) over `t ∈ [t_a, t_b]`;
/// tau = −1/slope. All window values must be positive and at least five
/// points must fall inside the window.
pub fn fit_monoexponential(trace: &FluxTrace, t_a: f64, t_b: f64) -> Result<FitResult> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (t, v) in trace.times.iter().zip(&trace.values) {
        if *t >= t_a - 1e-9 && *t <= t_b + 1e-9 {
            if *v <= 0.0 {
                return Err(Error::FitWindow {
                    t_a,
                    t_b,
                    reason: format!("nonpositive value {v} at t = {t} ps"),
                });
            }
            xs.push(*t);
            ys.push(v.ln());
        }
    }
    if xs.len() < 5 {
        return Err(Error::FitWindow {
            t_a,
            t_b,
            reason: format!("only {} points in window, need at least 5", xs.len()),
        });
    }
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    if slope >= 0.0 {
        return Err(Error::FitWindow {
            t_a,
            t_b,
            reason: format!("window does not decay (slope {slope:.3e})"),
        });
    }
    let rms = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(FitResult {
        amplitude: intercept.exp(),
        tau: -1.0 / slope,
        rms_log_residual: rms,
    })
}

/// Raw HOM visibility V = 1 − A₀/A₁ from the central and side peak areas.
pub fn visibility(a0: f64, a1: f64) -> Result<f64> {
    if a1 <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "a1",
            reason: format!("side-peak area must be positive, got {a1}"),
        });
    }
    Ok(1.0 - a0 / a1)
}

/// Indistinguishability I = (V + g²(0)) / (1 − g²(0)).
pub fn indistinguishability(v: f64, g2: f64) -> Result<f64> {
    if g2 >= 1.0 {
        return Err(Error::InvalidParameter {
            name: "g2",
            reason: format!("g²(0) must be below 1, got {g2}"),
        });
    }
    Ok((v + g2) / (1.0 - g2))
}

/// Build a uniform grid trace; helper for tests and synthetic inputs.
pub fn trace_from_fn(grid: &TimeGrid, f: impl Fn(f64) -> f64) -> FluxTrace {
    let times = grid.times();
    let values = times.iter().map(|&t| f(t)).collect();
    FluxTrace { times, values }
}
