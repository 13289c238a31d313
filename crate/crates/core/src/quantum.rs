//! Two-level-system vocabulary.
//!
//! Basis ordering is fixed as |g⟩ = index 0, |e⟩ = index 1, and the tensor
//! order for the cascaded pair is system-1 ⊗ system-2. All rates are in ps⁻¹
//! and all times in ps.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// σ₋ = |g⟩⟨e|.
pub fn sigma_minus() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(2);
    m.set(0, 1, Complex64::new(1.0, 0.0));
    m
}

/// σ₊ = |e⟩⟨g|.
pub fn sigma_plus() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(2);
    m.set(1, 0, Complex64::new(1.0, 0.0));
    m
}

/// σ_z = |e⟩⟨e| − |g⟩⟨g| = diag(−1, +1) in the |g⟩, |e⟩ ordering.
pub fn sigma_z() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(2);
    m.set(0, 0, Complex64::new(-1.0, 0.0));
    m.set(1, 1, Complex64::new(1.0, 0.0));
    m
}

/// Lift a single-system operator onto subsystem `which` (1-based) of an
/// `n`-subsystem register: σ^{(1)} = σ ⊗ I, σ^{(2)} = I ⊗ σ, ...
pub fn embed(op: &ComplexMatrix, which: usize, n: usize) -> Result<ComplexMatrix> {
    if op.dim() != 2 {
        return Err(Error::DimensionMismatch {
            op: "embed",
            lhs: op.dim(),
            rhs: 2,
        });
    }
    if which == 0 || which > n || n == 0 {
        return Err(Error::SubsystemOutOfRange { which, total: n });
    }
    let mut out = if which == 1 {
        op.clone()
    } else {
        ComplexMatrix::identity(2)
    };
    for k in 2..=n {
        let factor = if k == which {
            op.clone()
        } else {
            ComplexMatrix::identity(2)
        };
        out = out.kron(&factor);
    }
    Ok(out)
}

/// Physical rates and optical-path fractions of the emitter/setup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Radiative decay rate Γ (ps⁻¹).
    pub gamma: f64,
    /// Pure-dephasing rate γ_d (ps⁻¹).
    pub gamma_d: f64,
    /// Excitation-induced dephasing coefficient B (ps): B·Ω²(t) is a rate.
    pub b: f64,
    /// Laser detuning δ_L (ps⁻¹); 0 for resonant drive.
    pub delta_l: f64,
    /// Fraction of input light reflected before entering the cavity.
    pub eta_re: f64,
    /// Transmission of the optical path returning light to the emitter.
    pub eta_loss_prime: f64,
    /// Detector jitter FWHM (ps).
    pub jitter_fwhm: f64,
}

impl Default for SystemParams {
    /// The fitted device parameters: Γ⁻¹ = 227 ps, γ_d = 0.035 Γ,
    /// B = 1.3e-4 Γ⁻¹, η_re = 0.05, η'_loss = 1, 60 ps detector jitter.
    fn default() -> Self {
        let gamma = 1.0 / 227.0;
        SystemParams {
            gamma,
            gamma_d: 0.035 * gamma,
            b: 1.3e-4 / gamma,
            delta_l: 0.0,
            eta_re: 0.05,
            eta_loss_prime: 1.0,
            jitter_fwhm: 60.0,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        fn check(name: &'static str, ok: bool, value: f64) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: format!("value {value} out of range"),
                })
            }
        }
        check("gamma", self.gamma > 0.0 && self.gamma.is_finite(), self.gamma)?;
        check("gamma_d", self.gamma_d >= 0.0 && self.gamma_d.is_finite(), self.gamma_d)?;
        check("b", self.b >= 0.0 && self.b.is_finite(), self.b)?;
        check("delta_l", self.delta_l.is_finite(), self.delta_l)?;
        check("eta_re", (0.0..=1.0).contains(&self.eta_re), self.eta_re)?;
        check(
            "eta_loss_prime",
            (0.0..=1.0).contains(&self.eta_loss_prime),
            self.eta_loss_prime,
        )?;
        check(
            "jitter_fwhm",
            self.jitter_fwhm >= 0.0 && self.jitter_fwhm.is_finite(),
            self.jitter_fwhm,
        )?;
        Ok(())
    }

    /// η_loss = (1 − η_re) η'_loss: the fraction of the first generation that
    /// survives the return path into the cavity.
    pub fn eta_loss(&self) -> f64 {
        (1.0 - self.eta_re) * self.eta_loss_prime
    }
}

/// Gaussian drive pulse in pulse-area form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    /// Pulse area A (radians): time integral of the Rabi frequency.
    pub area: f64,
    /// Intensity FWHM τ_p (ps).
    pub tau_p: f64,
    /// Center time t_c (ps).
    pub t_c: f64,
}

impl Default for PulseSpec {
    fn default() -> Self {
        PulseSpec {
            area: std::f64::consts::PI,
            tau_p: 25.0,
            t_c: 200.0,
        }
    }
}

impl PulseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.area >= 0.0 && self.area.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "area",
                reason: format!("value {} out of range", self.area),
            });
        }
        if !(self.tau_p > 0.0 && self.tau_p.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "tau_p",
                reason: format!("value {} out of range", self.tau_p),
            });
        }
        if !self.t_c.is_finite() {
            return Err(Error::InvalidParameter {
                name: "t_c",
                reason: format!("value {} not finite", self.t_c),
            });
        }
        Ok(())
    }

    /// Rabi frequency Ω(t) = A √(2 ln2 / (π τ_p²)) exp(−2 ln2 (t−t_c)²/τ_p²),
    /// normalized so that ∫ Ω dt = A.
    pub fn rabi_frequency(&self, t: f64) -> f64 {
        if self.area == 0.0 {
            return 0.0;
        }
        let ln2 = std::f64::consts::LN_2;
        let peak = self.area * (2.0 * ln2 / (std::f64::consts::PI * self.tau_p * self.tau_p)).sqrt();
        let u = (t - self.t_c) / self.tau_p;
        peak * (-2.0 * ln2 * u * u).exp()
    }
}

/// Free-standing form of [`PulseSpec::rabi_frequency`].
pub fn gaussian_rabi(pulse: &PulseSpec, t: f64) -> f64 {
    pulse.rabi_frequency(t)
}

/// Collective output jump operator of the cascaded pair:
/// S₋ = (√η_loss − √η_re) σ₋^{(1)} + σ₋^{(2)}.
pub fn collective_jump(params: &SystemParams) -> ComplexMatrix {
    let c1 = params.eta_loss().sqrt() - params.eta_re.sqrt();
    let s1 = embed(&sigma_minus(), 1, 2).expect("static operator");
    let s2 = embed(&sigma_minus(), 2, 2).expect("static operator");
    &s1.scale_re(c1) + &s2
}

/// Tolerances for the [`DensityMatrix`] invariants.
pub const STATE_HERMITICITY_TOL: f64 = 1e-10;
pub const STATE_TRACE_TOL: f64 = 1e-9;
pub const STATE_POSITIVITY_TOL: f64 = -1e-9;

/// Hermitian, unit-trace, positive-semidefinite state of one or two
/// two-level systems (dim 2 or 4; dim-4 ordering is system-1 ⊗ system-2).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity (1e-10), unit trace (1e-9), and positivity
    /// (min eigenvalue ≥ −1e-9).
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let asym = matrix.max_asymmetry();
        if asym > STATE_HERMITICITY_TOL {
            return Err(Error::InvalidState {
                reason: format!("not Hermitian: max asymmetry {asym:.3e}"),
            });
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TRACE_TOL || tr.im.abs() > STATE_TRACE_TOL {
            return Err(Error::InvalidState {
                reason: format!("trace {tr} is not 1"),
            });
        }
        let eig = matrix.hermitian_eigenvalues()?;
        let min = eig.first().copied().unwrap_or(0.0);
        if min < STATE_POSITIVITY_TOL {
            return Err(Error::InvalidState {
                reason: format!("min eigenvalue {min:.3e} below {STATE_POSITIVITY_TOL:.0e}"),
            });
        }
        Ok(DensityMatrix { matrix })
    }

    /// Wrap an integrator-produced state without re-running the strict
    /// checks; the propagation loop monitors its own positivity budget.
    pub(crate) fn from_propagation(matrix: ComplexMatrix) -> Self {
        DensityMatrix { matrix }
    }

    /// Pure ground state of `n` ∈ {1, 2} subsystems.
    pub fn ground(n: usize) -> Result<Self> {
        if n == 0 || n > 2 {
            return Err(Error::SubsystemOutOfRange { which: n, total: 2 });
        }
        let dim = 1 << n;
        let mut m = ComplexMatrix::zeros(dim);
        m.set(0, 0, Complex64::new(1.0, 0.0));
        Ok(DensityMatrix { matrix: m })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// ⟨op⟩ = Tr(op ρ).
    pub fn expectation(&self, op: &ComplexMatrix) -> Result<Complex64> {
        Ok(op.checked_mul(&self.matrix)?.trace())
    }
}

/// Uniform time grid: points t_start + k·dt for k = 0..=n_steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    dt: f64,
    n_steps: usize,
}

impl TimeGrid {
    /// The span must be an integer number of steps within rounding
    /// (1e-9 relative).
    pub fn new(t_start: f64, t_end: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: format!("value {dt} out of range"),
            });
        }
        if !(t_end > t_start && t_start.is_finite() && t_end.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "t_end",
                reason: format!("span [{t_start}, {t_end}] is empty or not finite"),
            });
        }
        let span = t_end - t_start;
        let steps = span / dt;
        let n_steps = steps.round() as usize;
        if n_steps == 0 || (steps - n_steps as f64).abs() > 1e-9 * steps.max(1.0) {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: format!("span {span} is not an integer multiple of dt {dt}"),
            });
        }
        Ok(TimeGrid {
            t_start,
            t_end,
            dt,
            n_steps,
        })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of grid points (steps + 1).
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, index: usize) -> f64 {
        self.t_start + index as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }
}
