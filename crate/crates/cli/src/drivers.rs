//! Experiment drivers: each `cmd_*` runs one reproduction end-to-end from a
//! configuration and writes CSV/JSON artifacts plus a manifest. The
//! `compute_*` functions expose the underlying values so tests can compose
//! the pipeline manually.

use std::path::Path;

use anyhow::{bail, Context};
use rayon::prelude::*;
use serde::Serialize;

use qcascade::lindblad::{correlation_map, propagate, Liouvillian, Trajectory};
use qcascade::observables::{
    convolve_jitter_1d, convolve_jitter_2d, fit_monoexponential, flux_first, flux_second, g2_bar_gated,
    CorrelationMap, FluxTrace,
};
use qcascade::quantum::{collective_jump, sigma_minus, DensityMatrix, SystemParams};
use qcascade::Error;

use crate::config::ExperimentConfig;
use crate::output::{write_json, write_map_csv, write_rows_csv, write_trace_csv, Manifest};

/// Fit window (ps) for the decay of the first output peak, between the
/// leading maximum and the interference dip of the jitter-convolved profile.
pub const FIRST_PEAK_FIT_WINDOW: (f64, f64) = (245.0, 545.0);
/// Fit window (ps) for the tail of the second output peak.
pub const SECOND_PEAK_FIT_WINDOW: (f64, f64) = (975.0, 1500.0);
/// Fit window (ps) for the first-generation emission tail.
pub const INPUT_TAIL_FIT_WINDOW: (f64, f64) = (280.0, 1000.0);
/// Fit window (ps) for the output-map diagonal, starting after the pulse.
pub const DIAGONAL_FIT_WINDOW: (f64, f64) = (260.0, 600.0);
/// Band half-width (ps) for the simultaneity fraction |t₁ − t₂| < w.
pub const BAND_HALFWIDTH: f64 = 30.0;

/// Both generations propagated on the fine grid at one pulse area.
pub struct FluxRun {
    pub flux_in: FluxTrace,
    pub flux_out: FluxTrace,
    pub flux_in_jitter: FluxTrace,
    pub flux_out_jitter: FluxTrace,
}

impl FluxRun {
    /// The traces the statistics should be computed from, honoring the
    /// jitter flag.
    pub fn reported(&self, apply_jitter: bool) -> (&FluxTrace, &FluxTrace) {
        if apply_jitter {
            (&self.flux_in_jitter, &self.flux_out_jitter)
        } else {
            (&self.flux_in, &self.flux_out)
        }
    }
}

fn trajectories(
    cfg: &ExperimentConfig,
    area: f64,
    grid: &qcascade::TimeGrid,
) -> anyhow::Result<(Trajectory, Trajectory, SystemParams)> {
    let params = cfg.system_params();
    let mut pulse = cfg.pulse_spec();
    pulse.area = area;
    let single = propagate(
        &Liouvillian::single(&params, Some(pulse))?,
        &DensityMatrix::ground(1)?,
        grid,
    )
    .context("first-generation propagation")?;
    let cascaded = propagate(
        &Liouvillian::cascaded(&params, Some(pulse))?,
        &DensityMatrix::ground(2)?,
        grid,
    )
    .context("cascaded propagation")?;
    Ok((single, cascaded, params))
}

pub fn compute_flux(cfg: &ExperimentConfig, area: f64) -> anyhow::Result<FluxRun> {
    let grid = cfg.fine_grid()?;
    let (single, cascaded, params) = trajectories(cfg, area, &grid)?;
    let flux_in = flux_first(&single, &params)?;
    let flux_out = flux_second(&cascaded, &params)?;
    let flux_in_jitter = convolve_jitter_1d(&flux_in, params.jitter_fwhm);
    let flux_out_jitter = convolve_jitter_1d(&flux_out, params.jitter_fwhm);
    Ok(FluxRun {
        flux_in,
        flux_out,
        flux_in_jitter,
        flux_out_jitter,
    })
}

/// Correlation maps of both generations with their axis-sampled fluxes
/// (the normalization of g̅² uses the flux on the same grid as the map).
pub struct MapRun {
    pub map_in: CorrelationMap,
    pub map_out: CorrelationMap,
    pub axis_flux_in: FluxTrace,
    pub axis_flux_out: FluxTrace,
    pub map_in_jitter: CorrelationMap,
    pub map_out_jitter: CorrelationMap,
    pub axis_flux_in_jitter: FluxTrace,
    pub axis_flux_out_jitter: FluxTrace,
}

impl MapRun {
    fn selected(&self, apply_jitter: bool) -> (&CorrelationMap, &CorrelationMap, &FluxTrace, &FluxTrace) {
        if apply_jitter {
            (
                &self.map_in_jitter,
                &self.map_out_jitter,
                &self.axis_flux_in_jitter,
                &self.axis_flux_out_jitter,
            )
        } else {
            (&self.map_in, &self.map_out, &self.axis_flux_in, &self.axis_flux_out)
        }
    }

    /// Gated g̅²(0) of both generations; `t_start` at the axis origin gives
    /// the ungated values.
    pub fn g2_gated(&self, apply_jitter: bool, t_start: f64) -> anyhow::Result<(f64, f64)> {
        let (map_in, map_out, flux_in, flux_out) = self.selected(apply_jitter);
        Ok((
            g2_bar_gated(map_in, flux_in, t_start)?,
            g2_bar_gated(map_out, flux_out, t_start)?,
        ))
    }

    pub fn g2(&self, apply_jitter: bool) -> anyhow::Result<(f64, f64)> {
        self.g2_gated(apply_jitter, self.map_in.axis()[0])
    }
}

fn decimate(trace: &FluxTrace, stride: usize) -> FluxTrace {
    let times: Vec<f64> = trace.times().iter().copied().step_by(stride).collect();
    let values: Vec<f64> = trace.values().iter().copied().step_by(stride).collect();
    FluxTrace::new(times, values).expect("decimated trace keeps >= 2 points")
}

pub fn compute_maps(cfg: &ExperimentConfig, area: f64) -> anyhow::Result<MapRun> {
    let grid = cfg.map_fine_grid()?;
    let stride = cfg.map_stride()?;
    let (single, cascaded, params) = trajectories(cfg, area, &grid)?;
    let weight = params.gamma * params.gamma / 4.0;

    let map_in = correlation_map(
        &Liouvillian::single(&params, Some(pulse_with_area(cfg, area)))?,
        &sigma_minus(),
        weight,
        &DensityMatrix::ground(1)?,
        &grid,
        stride,
    )?;
    let map_out = correlation_map(
        &Liouvillian::cascaded(&params, Some(pulse_with_area(cfg, area)))?,
        &collective_jump(&params),
        weight,
        &DensityMatrix::ground(2)?,
        &grid,
        stride,
    )?;

    let axis_flux_in = decimate(&flux_first(&single, &params)?, stride);
    let axis_flux_out = decimate(&flux_second(&cascaded, &params)?, stride);

    let fwhm = params.jitter_fwhm;
    Ok(MapRun {
        map_in_jitter: convolve_jitter_2d(&map_in, fwhm),
        map_out_jitter: convolve_jitter_2d(&map_out, fwhm),
        axis_flux_in_jitter: convolve_jitter_1d(&axis_flux_in, fwhm),
        axis_flux_out_jitter: convolve_jitter_1d(&axis_flux_out, fwhm),
        map_in,
        map_out,
        axis_flux_in,
        axis_flux_out,
    })
}

fn pulse_with_area(cfg: &ExperimentConfig, area: f64) -> qcascade::PulseSpec {
    let mut pulse = cfg.pulse_spec();
    pulse.area = area;
    pulse
}

/// One row of the pulse-area scan.
#[derive(Debug, Clone, Copy)]
pub struct ScanRow {
    pub area: f64,
    pub flux_in_integral: f64,
    pub flux_out_integral: f64,
    /// NaN when the flux vanishes (area 0): the ratio is undefined.
    pub g2_in: f64,
    pub g2_out: f64,
    pub delta_g2: f64,
}

pub fn compute_scan_row(cfg: &ExperimentConfig, area: f64) -> anyhow::Result<ScanRow> {
    let fluxes = compute_flux(cfg, area)?;
    let (flux_in, flux_out) = fluxes.reported(cfg.apply_jitter);
    let flux_in_integral = flux_in.integral();
    let flux_out_integral = flux_out.integral();

    let (g2_in, g2_out) = match compute_maps(cfg, area)?.g2(cfg.apply_jitter) {
        Ok(pair) => pair,
        Err(e) if is_undefined_statistics(&e) => (f64::NAN, f64::NAN),
        Err(e) => return Err(e),
    };
    Ok(ScanRow {
        area,
        flux_in_integral,
        flux_out_integral,
        g2_in,
        g2_out,
        delta_g2: g2_out - g2_in,
    })
}

fn is_undefined_statistics(e: &anyhow::Error) -> bool {
    matches!(e.downcast_ref::<Error>(), Some(Error::UndefinedStatistics))
}

pub fn cmd_flux(cfg: &ExperimentConfig, dir: &Path) -> anyhow::Result<Manifest> {
    let mut manifest = Manifest::new("flux", cfg);
    let run = compute_flux(cfg, cfg.pulse.area)?;
    write_trace_csv(&manifest.file(dir, "flux_in.csv"), "flux_per_ps", &run.flux_in)?;
    write_trace_csv(&manifest.file(dir, "flux_out.csv"), "flux_per_ps", &run.flux_out)?;
    if cfg.apply_jitter {
        write_trace_csv(
            &manifest.file(dir, "flux_in_jitter.csv"),
            "flux_per_ps",
            &run.flux_in_jitter,
        )?;
        write_trace_csv(
            &manifest.file(dir, "flux_out_jitter.csv"),
            "flux_per_ps",
            &run.flux_out_jitter,
        )?;
    }
    manifest.write(dir)?;
    Ok(manifest)
}

pub fn cmd_scan(cfg: &ExperimentConfig, dir: &Path) -> anyhow::Result<Manifest> {
    if cfg.scan.is_empty() {
        bail!("scan list is empty");
    }
    let mut manifest = Manifest::new("scan", cfg);
    let rows: Vec<ScanRow> = cfg
        .scan
        .par_iter()
        .map(|&area| compute_scan_row(cfg, area))
        .collect::<anyhow::Result<_>>()?;
    let table: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            vec![
                r.area,
                r.flux_in_integral,
                r.flux_out_integral,
                r.g2_in,
                r.g2_out,
                r.delta_g2,
            ]
        })
        .collect();
    write_rows_csv(
        &manifest.file(dir, "rabi_scan.csv"),
        "area_rad,flux_in_integral,flux_out_integral,g2_in,g2_out,delta_g2",
        &table,
    )?;
    manifest.write(dir)?;
    Ok(manifest)
}

/// Summary of the output-map diagonal decay plus the band-integral record.
#[derive(Debug, Serialize)]
pub struct DiagonalFit {
    pub tau_ps: f64,
    pub amplitude: f64,
    pub rms_log_residual: f64,
    pub window_start_ps: f64,
    pub window_end_ps: f64,
    pub band_halfwidth_ps: f64,
    /// Fraction of the raw input map integral inside |t₁ − t₂| < halfwidth.
    pub band_fraction_in: f64,
    /// Same for the raw output map.
    pub band_fraction_out: f64,
}

pub fn diagonal_fit(run: &MapRun) -> anyhow::Result<DiagonalFit> {
    let (t_a, t_b) = DIAGONAL_FIT_WINDOW;
    let fit = fit_monoexponential(&run.map_out.diagonal(), t_a, t_b)
        .context("fitting the output-map diagonal")?;
    Ok(DiagonalFit {
        tau_ps: fit.tau,
        amplitude: fit.amplitude,
        rms_log_residual: fit.rms_log_residual,
        window_start_ps: t_a,
        window_end_ps: t_b,
        band_halfwidth_ps: BAND_HALFWIDTH,
        band_fraction_in: run.map_in.band_fraction(BAND_HALFWIDTH),
        band_fraction_out: run.map_out.band_fraction(BAND_HALFWIDTH),
    })
}

pub fn cmd_g2map(cfg: &ExperimentConfig, dir: &Path) -> anyhow::Result<Manifest> {
    let mut manifest = Manifest::new("g2map", cfg);
    let run = compute_maps(cfg, cfg.pulse.area)?;
    write_map_csv(&manifest.file(dir, "g2map_in.csv"), &run.map_in)?;
    write_map_csv(&manifest.file(dir, "g2map_out.csv"), &run.map_out)?;
    if cfg.apply_jitter {
        write_map_csv(&manifest.file(dir, "g2map_in_jitter.csv"), &run.map_in_jitter)?;
        write_map_csv(&manifest.file(dir, "g2map_out_jitter.csv"), &run.map_out_jitter)?;
    }
    let fit = diagonal_fit(&run)?;
    write_json(&manifest.file(dir, "diagonal_fit.json"), &fit)?;
    manifest.write(dir)?;
    Ok(manifest)
}

pub fn cmd_gated(cfg: &ExperimentConfig, dir: &Path) -> anyhow::Result<Manifest> {
    if cfg.gate_starts.is_empty() {
        bail!("gate_starts list is empty");
    }
    let mut manifest = Manifest::new("gated", cfg);
    let run = compute_maps(cfg, cfg.pulse.area)?;
    let mut table = Vec::with_capacity(cfg.gate_starts.len());
    for &t_start in &cfg.gate_starts {
        let (g2_in, g2_out) = run.g2_gated(cfg.apply_jitter, t_start)?;
        table.push(vec![t_start, g2_in, g2_out]);
    }
    write_rows_csv(
        &manifest.file(dir, "gated_g2.csv"),
        "t_start_ps,g2_in_gated,g2_out_gated",
        &table,
    )?;
    manifest.write(dir)?;
    Ok(manifest)
}

/// One row of the η'_loss probe.
#[derive(Debug, Clone, Copy)]
pub struct LossProbeRow {
    pub eta_loss_prime: f64,
    pub g2_out: f64,
    pub flux_out_integral: f64,
    /// L2 distance between the unit-integral output flux profile and the
    /// η'_loss = 1 reference profile.
    pub flux_shape_distance: f64,
}

pub fn cmd_probe_loss(
    cfg: &ExperimentConfig,
    dir: &Path,
    loss_values: &[f64],
) -> anyhow::Result<Manifest> {
    if loss_values.is_empty() {
        bail!("loss value list is empty");
    }
    for v in loss_values {
        if !(*v > 0.0 && *v <= 1.0) {
            bail!("eta_loss_prime value {v} outside (0, 1]");
        }
    }
    let mut manifest = Manifest::new("probe-loss", cfg);

    let with_loss = |value: f64| {
        let mut c = cfg.clone();
        c.system.eta_loss_prime = value;
        c
    };
    let reference = normalized_shape(&compute_flux(&with_loss(1.0), cfg.pulse.area)?, cfg.apply_jitter);

    let rows: Vec<LossProbeRow> = loss_values
        .par_iter()
        .map(|&value| -> anyhow::Result<LossProbeRow> {
            let probe_cfg = with_loss(value);
            let scan = compute_scan_row(&probe_cfg, cfg.pulse.area)?;
            let shape = normalized_shape(&compute_flux(&probe_cfg, cfg.pulse.area)?, cfg.apply_jitter);
            let dt = shape.dt();
            let dist: f64 = shape
                .values()
                .iter()
                .zip(reference.values())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
                * dt.sqrt();
            Ok(LossProbeRow {
                eta_loss_prime: value,
                g2_out: scan.g2_out,
                flux_out_integral: scan.flux_out_integral,
                flux_shape_distance: dist,
            })
        })
        .collect::<anyhow::Result<_>>()?;

    let table: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            vec![
                r.eta_loss_prime,
                r.g2_out,
                r.flux_out_integral,
                r.flux_shape_distance,
            ]
        })
        .collect();
    write_rows_csv(
        &manifest.file(dir, "loss_probe.csv"),
        "eta_loss_prime,g2_out,flux_out_integral,flux_shape_distance",
        &table,
    )?;
    manifest.write(dir)?;
    Ok(manifest)
}

fn normalized_shape(run: &FluxRun, apply_jitter: bool) -> FluxTrace {
    let (_, flux_out) = run.reported(apply_jitter);
    let integral = flux_out.integral();
    let values: Vec<f64> = if integral > 0.0 {
        flux_out.values().iter().map(|v| v / integral).collect()
    } else {
        flux_out.values().to_vec()
    };
    FluxTrace::new(flux_out.times().to_vec(), values).expect("same shape as input")
}
