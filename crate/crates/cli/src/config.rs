//! Experiment configuration: a single TOML file mapping onto the simulator
//! parameters, with defaults equal to the fitted device parameter set.
//! Runs are fully deterministic; there is no seed anywhere.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use qcascade::quantum::{PulseSpec, SystemParams, TimeGrid};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSection,
    pub pulse: PulseSection,
    /// Fine integration grid for trajectories and flux profiles.
    pub grid: GridSection,
    /// Coarser axis for G²(t₁,t₂) maps; its `dt` must be an integer multiple
    /// of `grid.dt`, which is used for the internal sub-stepping.
    pub map_grid: GridSection,
    /// Pulse areas (radians) for the `scan` command.
    pub scan: Vec<f64>,
    /// Gate start times (ps) for the `gated` command.
    pub gate_starts: Vec<f64>,
    pub output_dir: PathBuf,
    /// Convolve exported traces/maps (and the statistics computed from
    /// them) with the detector jitter kernel.
    pub apply_jitter: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub gamma: f64,
    pub gamma_d: f64,
    pub b: f64,
    pub delta_l: f64,
    pub eta_re: f64,
    pub eta_loss_prime: f64,
    pub jitter_fwhm: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        let p = SystemParams::default();
        SystemSection {
            gamma: p.gamma,
            gamma_d: p.gamma_d,
            b: p.b,
            delta_l: p.delta_l,
            eta_re: p.eta_re,
            eta_loss_prime: p.eta_loss_prime,
            jitter_fwhm: p.jitter_fwhm,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct PulseSection {
    pub area: f64,
    pub tau_p: f64,
    pub t_c: f64,
}

impl Default for PulseSection {
    fn default() -> Self {
        let p = PulseSpec::default();
        PulseSection {
            area: p.area,
            tau_p: p.tau_p,
            t_c: p.t_c,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            t_start: 0.0,
            t_end: 2000.0,
            dt: 0.5,
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let step = std::f64::consts::PI / 8.0;
        ExperimentConfig {
            system: SystemSection::default(),
            pulse: PulseSection::default(),
            grid: GridSection::default(),
            map_grid: GridSection {
                t_start: 0.0,
                t_end: 1200.0,
                dt: 4.0,
            },
            scan: (0..=32).map(|k| k as f64 * step).collect(),
            gate_starts: (0..=24).map(|k| k as f64 * 25.0).collect(),
            output_dir: PathBuf::from("out"),
            apply_jitter: true,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn system_params(&self) -> SystemParams {
        SystemParams {
            gamma: self.system.gamma,
            gamma_d: self.system.gamma_d,
            b: self.system.b,
            delta_l: self.system.delta_l,
            eta_re: self.system.eta_re,
            eta_loss_prime: self.system.eta_loss_prime,
            jitter_fwhm: self.system.jitter_fwhm,
        }
    }

    pub fn pulse_spec(&self) -> PulseSpec {
        PulseSpec {
            area: self.pulse.area,
            tau_p: self.pulse.tau_p,
            t_c: self.pulse.t_c,
        }
    }

    /// The fine trajectory grid.
    pub fn fine_grid(&self) -> anyhow::Result<TimeGrid> {
        Ok(TimeGrid::new(self.grid.t_start, self.grid.t_end, self.grid.dt)?)
    }

    /// The map span sampled at the fine step; the axis keeps every
    /// [`Self::map_stride`]-th point.
    pub fn map_fine_grid(&self) -> anyhow::Result<TimeGrid> {
        Ok(TimeGrid::new(
            self.map_grid.t_start,
            self.map_grid.t_end,
            self.grid.dt,
        )?)
    }

    pub fn map_stride(&self) -> anyhow::Result<usize> {
        let ratio = self.map_grid.dt / self.grid.dt;
        let stride = ratio.round();
        if stride < 1.0 || (ratio - stride).abs() > 1e-9 {
            bail!(
                "map_grid.dt = {} must be an integer multiple of grid.dt = {}",
                self.map_grid.dt,
                self.grid.dt
            );
        }
        Ok(stride as usize)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.system_params().validate()?;
        self.pulse_spec().validate()?;
        self.fine_grid()?;
        let map_grid = self.map_fine_grid()?;
        self.map_stride()?;
        TimeGrid::new(self.map_grid.t_start, self.map_grid.t_end, self.map_grid.dt)
            .context("map_grid axis")?;
        for (i, a) in self.scan.iter().enumerate() {
            if !(a.is_finite() && *a >= 0.0) {
                bail!("scan[{i}] = {a} must be a finite non-negative pulse area");
            }
        }
        for (i, t) in self.gate_starts.iter().enumerate() {
            if !(t.is_finite() && *t >= map_grid.t_start() && *t <= map_grid.t_end()) {
                bail!(
                    "gate_starts[{i}] = {t} outside the map span [{}, {}]",
                    map_grid.t_start(),
                    map_grid.t_end()
                );
            }
        }
        Ok(())
    }
}
