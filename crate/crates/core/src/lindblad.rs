//! Driven and cascaded Liouvillians, fixed-step RK4 propagation, and
//! two-time correlation maps via the quantum regression construction.
//!
//! The driven single-system generator is
//!
//!   dρ/dt = −i[H(t), ρ] + Γ D[σ₋]ρ + γ_d D[σ_z]ρ + B Ω²(t) D[σ_z]ρ,
//!   H(t) = Ω(t)/2 (σ₊ + σ₋) + δ_L/2 σ_z,
//!
//! with D[X]ρ = XρX† − ½(X†Xρ + ρX†X). The cascaded pair adds an undriven
//! copy (no drive, no B term) and the unidirectional coupling
//!
//!   −(√η_loss/2) Γ ([σ₊⁽²⁾, σ₋⁽¹⁾ρ] + [ρσ₊⁽¹⁾, σ₋⁽²⁾]),
//!
//! so the emission of system 1 drives system 2 without back-action.
//!
//! Generators are assembled term-by-term from operator algebra and cached as
//! superoperator matrices acting on row-major vec(ρ); propagation is then a
//! handful of matrix-vector products per RK4 stage. Since the drive enters
//! linearly (Hamiltonian) and quadratically (excitation-induced dephasing),
//! the cache splits into constant, Ω(t)-, and Ω²(t)-weighted parts.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::observables::CorrelationMap;
use crate::quantum::{embed, sigma_minus, sigma_z, DensityMatrix, PulseSpec, SystemParams, TimeGrid};

/// D[X]ρ = XρX† − ½(X†Xρ + ρX†X).
pub fn dissipator(x: &ComplexMatrix, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    if x.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            op: "dissipator",
            lhs: x.dim(),
            rhs: rho.dim(),
        });
    }
    let xd = x.adjoint();
    let sandwich = &(x * rho) * &xd;
    let norm_op = &xd * x;
    let anti = &(&norm_op * rho) + &(rho * &norm_op);
    Ok(&sandwich - &anti.scale_re(0.5))
}

/// −i[h, ρ].
fn hamiltonian_term(h: &ComplexMatrix, rho: &ComplexMatrix) -> ComplexMatrix {
    let comm = &(h * rho) - &(rho * h);
    comm.scale(Complex64::new(0.0, -1.0))
}

/// Time-indexed generator: `apply(t, ρ)` yields dρ/dt.
#[derive(Clone)]
pub struct Liouvillian {
    dim: usize,
    params: SystemParams,
    pulse: Option<PulseSpec>,
    /// Superoperator of all drive-independent terms.
    m_const: Vec<Complex64>,
    /// Superoperator of −i[(σ₊+σ₋)/2 ⊗ …, ·]; weighted by Ω(t).
    m_drive: Vec<Complex64>,
    /// Superoperator of B D[σ_z⁽¹⁾]; weighted by Ω²(t).
    m_drive2: Vec<Complex64>,
}

impl Liouvillian {
    /// Driven single-system generator (dim 2). `pulse = None` is the
    /// undriven master equation.
    pub fn single(params: &SystemParams, pulse: Option<PulseSpec>) -> Result<Self> {
        params.validate()?;
        if let Some(p) = &pulse {
            p.validate()?;
        }
        let sm = sigma_minus();
        let sz = sigma_z();
        let h_static = sz.scale_re(params.delta_l / 2.0);
        let h_drive = &sigma_minus().adjoint() + &sm;
        let h_drive = h_drive.scale_re(0.5);
        let jumps = vec![(params.gamma, sm), (params.gamma_d, sz.clone())];
        Ok(Self::build(2, *params, pulse, h_static, h_drive, jumps, sz, None))
    }

    /// Cascaded two-system generator (dim 4, ordering system-1 ⊗ system-2).
    /// Only system 1 is driven; system 2 relaxes and dephases at the same
    /// rates but carries no drive and no B Ω² term.
    pub fn cascaded(params: &SystemParams, pulse: Option<PulseSpec>) -> Result<Self> {
        params.validate()?;
        if let Some(p) = &pulse {
            p.validate()?;
        }
        let sm1 = embed(&sigma_minus(), 1, 2)?;
        let sm2 = embed(&sigma_minus(), 2, 2)?;
        let sz1 = embed(&sigma_z(), 1, 2)?;
        let sz2 = embed(&sigma_z(), 2, 2)?;
        let h_static = (&sz1 + &sz2).scale_re(params.delta_l / 2.0);
        let h_drive = (&sm1.adjoint() + &sm1).scale_re(0.5);
        let jumps = vec![
            (params.gamma, sm1.clone()),
            (params.gamma_d, sz1.clone()),
            (params.gamma, sm2.clone()),
            (params.gamma_d, sz2),
        ];
        let cascade = Cascade {
            strength: params.eta_loss().sqrt() * params.gamma / 2.0,
            source_lower: sm1,
            target_lower: sm2,
        };
        Ok(Self::build(4, *params, pulse, h_static, h_drive, jumps, sz1, Some(cascade)))
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        dim: usize,
        params: SystemParams,
        pulse: Option<PulseSpec>,
        h_static: ComplexMatrix,
        h_drive: ComplexMatrix,
        jumps: Vec<(f64, ComplexMatrix)>,
        dephase_op: ComplexMatrix,
        cascade: Option<Cascade>,
    ) -> Self {
        let constant = |rho: &ComplexMatrix| -> ComplexMatrix {
            let mut out = hamiltonian_term(&h_static, rho);
            for (rate, op) in &jumps {
                if *rate != 0.0 {
                    out = &out + &dissipator(op, rho).expect("same dim").scale_re(*rate);
                }
            }
            if let Some(c) = &cascade {
                out = &out - &c.apply(rho).scale_re(c.strength);
            }
            out
        };
        let drive = |rho: &ComplexMatrix| hamiltonian_term(&h_drive, rho);
        let drive2 = |rho: &ComplexMatrix| dissipator(&dephase_op, rho).expect("same dim").scale_re(params.b);
        Liouvillian {
            dim,
            params,
            pulse,
            m_const: superoperator(dim, constant),
            m_drive: superoperator(dim, drive),
            m_drive2: superoperator(dim, drive2),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn pulse(&self) -> Option<&PulseSpec> {
        self.pulse.as_ref()
    }

    fn omega(&self, t: f64) -> f64 {
        self.pulse.as_ref().map_or(0.0, |p| p.rabi_frequency(t))
    }

    /// dρ/dt at time `t`; trace-free and Hermiticity-preserving within 1e-12.
    pub fn apply(&self, t: f64, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                op: "liouvillian apply",
                lhs: self.dim,
                rhs: rho.dim(),
            });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim * self.dim];
        self.apply_vec(self.omega(t), rho.entries(), &mut out);
        Ok(ComplexMatrix::from_vec_unchecked(self.dim, out))
    }

    /// Core matvec: out = (M_const + ω M_drive + ω² M_drive2) v.
    fn apply_vec(&self, omega: f64, v: &[Complex64], out: &mut [Complex64]) {
        let d2 = self.dim * self.dim;
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.m_const[i * d2..(i + 1) * d2];
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, x) in row.iter().zip(v) {
                acc += m * x;
            }
            *o = acc;
        }
        if omega != 0.0 {
            let omega2 = omega * omega;
            for (i, o) in out.iter_mut().enumerate() {
                let row1 = &self.m_drive[i * d2..(i + 1) * d2];
                let row2 = &self.m_drive2[i * d2..(i + 1) * d2];
                let mut a1 = Complex64::new(0.0, 0.0);
                let mut a2 = Complex64::new(0.0, 0.0);
                for ((m1, m2), x) in row1.iter().zip(row2).zip(v) {
                    a1 += m1 * x;
                    a2 += m2 * x;
                }
                *o += a1 * omega + a2 * omega2;
            }
        }
    }
}

/// Unidirectional coupling [σ₊⁽²⁾, σ₋⁽¹⁾ρ] + [ρσ₊⁽¹⁾, σ₋⁽²⁾]
/// (applied with an overall −strength factor by the caller).
#[derive(Clone)]
struct Cascade {
    strength: f64,
    source_lower: ComplexMatrix,
    target_lower: ComplexMatrix,
}

impl Cascade {
    fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let sp1 = self.source_lower.adjoint();
        let sp2 = self.target_lower.adjoint();
        let a = &(&sp2 * &(&self.source_lower * rho)) - &(&(&self.source_lower * rho) * &sp2);
        let b = &(&(rho * &sp1) * &self.target_lower) - &(&self.target_lower * &(rho * &sp1));
        &a + &b
    }
}

/// Build a superoperator matrix column-by-column by probing a linear map
/// with the matrix-unit basis E_ab (row-major vec convention).
fn superoperator(dim: usize, op: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Vec<Complex64> {
    let d2 = dim * dim;
    let mut m = vec![Complex64::new(0.0, 0.0); d2 * d2];
    for col in 0..d2 {
        let basis = ComplexMatrix::from_fn(dim, |i, j| {
            if i * dim + j == col {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let image = op(&basis);
        for (row, v) in image.entries().iter().enumerate() {
            m[row * d2 + col] = *v;
        }
    }
    m
}

/// Density-matrix propagation result on a uniform grid.
pub struct Trajectory {
    grid: TimeGrid,
    states: Vec<DensityMatrix>,
    min_eigenvalue: f64,
    max_trace_drift: f64,
}

impl Trajectory {
    #[cfg(test)]
    pub(crate) fn from_states_for_tests(grid: TimeGrid, states: Vec<DensityMatrix>) -> Self {
        Trajectory {
            grid,
            states,
            min_eigenvalue: 0.0,
            max_trace_drift: 0.0,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn state(&self, index: usize) -> &DensityMatrix {
        &self.states[index]
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Smallest eigenvalue seen across all stored states.
    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    /// Largest |Tr ρ − 1| seen across all stored states.
    pub fn max_trace_drift(&self) -> f64 {
        self.max_trace_drift
    }
}

/// Threshold below which propagation aborts: a state this negative means the
/// step is too coarse for the generator.
pub const POSITIVITY_ABORT: f64 = -1e-6;

/// Classic fixed-step RK4 with per-step Hermitian symmetrization
/// ρ ← (ρ + ρ†)/2. Positivity is monitored (never projected); the run
/// aborts if any eigenvalue falls below [`POSITIVITY_ABORT`].
pub fn propagate(liouv: &Liouvillian, rho0: &DensityMatrix, grid: &TimeGrid) -> Result<Trajectory> {
    if rho0.dim() != liouv.dim() {
        return Err(Error::DimensionMismatch {
            op: "propagate",
            lhs: liouv.dim(),
            rhs: rho0.dim(),
        });
    }
    let dim = liouv.dim();
    let mut stepper = Stepper::new(dim);
    let mut v: Vec<Complex64> = rho0.matrix().entries().to_vec();

    let mut states = Vec::with_capacity(grid.len());
    states.push(rho0.clone());
    let mut min_eig = min_eigenvalue(rho0.matrix())?;
    let mut max_drift = trace_drift(rho0.matrix());

    for k in 0..grid.n_steps() {
        stepper.rk4(liouv, grid.time(k), grid.dt(), &mut v);
        symmetrize(&mut v, dim);
        let m = ComplexMatrix::from_vec_unchecked(dim, v.clone());
        let low = min_eigenvalue(&m)?;
        min_eig = min_eig.min(low);
        if low < POSITIVITY_ABORT {
            return Err(Error::PositivityViolation {
                t: grid.time(k + 1),
                min_eigenvalue: low,
            });
        }
        max_drift = max_drift.max(trace_drift(&m));
        states.push(DensityMatrix::from_propagation(m));
    }
    Ok(Trajectory {
        grid: *grid,
        states,
        min_eigenvalue: min_eig,
        max_trace_drift: max_drift,
    })
}

fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    let eig = m.hermitian_eigenvalues()?;
    Ok(eig.first().copied().unwrap_or(0.0))
}

fn trace_drift(m: &ComplexMatrix) -> f64 {
    (m.trace() - Complex64::new(1.0, 0.0)).norm()
}

fn symmetrize(v: &mut [Complex64], dim: usize) {
    for i in 0..dim {
        for j in i..dim {
            let a = v[i * dim + j];
            let b = v[j * dim + i];
            let s = (a + b.conj()) * 0.5;
            v[i * dim + j] = s;
            v[j * dim + i] = s.conj();
        }
    }
}

/// Reusable RK4 work buffers for one state size.
struct Stepper {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Stepper {
    fn new(dim: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); dim * dim];
        Stepper {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    /// Advance `v` in place from t to t + dt.
    fn rk4(&mut self, liouv: &Liouvillian, t: f64, dt: f64, v: &mut [Complex64]) {
        let w0 = liouv.omega(t);
        let w_half = liouv.omega(t + 0.5 * dt);
        let w1 = liouv.omega(t + dt);

        liouv.apply_vec(w0, v, &mut self.k1);
        for (dst, (x, k)) in self.tmp.iter_mut().zip(v.iter().zip(&self.k1)) {
            *dst = x + k * (0.5 * dt);
        }
        liouv.apply_vec(w_half, &self.tmp, &mut self.k2);
        for (dst, (x, k)) in self.tmp.iter_mut().zip(v.iter().zip(&self.k2)) {
            *dst = x + k * (0.5 * dt);
        }
        liouv.apply_vec(w_half, &self.tmp, &mut self.k3);
        for (dst, (x, k)) in self.tmp.iter_mut().zip(v.iter().zip(&self.k3)) {
            *dst = x + k * dt;
        }
        liouv.apply_vec(w1, &self.tmp, &mut self.k4);

        let sixth = dt / 6.0;
        for (i, x) in v.iter_mut().enumerate() {
            *x += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * sixth;
        }
    }
}

/// Two-time correlation map by quantum regression:
///
///   G²(t₁, t₂) = weight · Tr(J†J · U(t₂ ← t₁)[J ρ(t₁) J†]),   t₂ ≥ t₁,
///
/// completed by symmetry G²(t₁, t₂) = G²(t₂, t₁). Because the generator is
/// time-dependent, U(t₂ ← t₁) propagates from absolute time t₁ under the
/// same L(s) — not from a shifted origin. Conditional states J ρ J† are not
/// renormalized; the trace at t₂ carries the normalization.
///
/// `grid` is the fine integration grid; the map axis keeps every `stride`-th
/// point, so the axis spacing is `stride · grid.dt`. Rows (values of t₁) are
/// computed in parallel against the shared base trajectory.
pub fn correlation_map(
    liouv: &Liouvillian,
    jump: &ComplexMatrix,
    weight: f64,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    stride: usize,
) -> Result<CorrelationMap> {
    if jump.dim() != liouv.dim() {
        return Err(Error::DimensionMismatch {
            op: "correlation_map",
            lhs: liouv.dim(),
            rhs: jump.dim(),
        });
    }
    if stride == 0 || grid.n_steps() % stride != 0 {
        return Err(Error::InvalidParameter {
            name: "stride",
            reason: format!(
                "grid has {} steps, not a multiple of stride {}",
                grid.n_steps(),
                stride
            ),
        });
    }

    let base = propagate(liouv, rho0, grid)?;
    let n_axis = grid.n_steps() / stride + 1;
    let jump_dag = jump.adjoint();
    let norm_op = &jump_dag * jump;
    let dim = liouv.dim();
    let dt = grid.dt();

    let rows: Vec<Vec<f64>> = (0..n_axis)
        .into_par_iter()
        .map(|i| {
            let rho_t1 = base.state(i * stride).matrix();
            let mut cond: Vec<Complex64> = (&(jump * rho_t1) * &jump_dag).entries().to_vec();
            let mut stepper = Stepper::new(dim);
            let mut row = Vec::with_capacity(n_axis - i);
            row.push(weight * trace_product(&norm_op, &cond, dim));
            for k in (i * stride)..grid.n_steps() {
                stepper.rk4(liouv, grid.time(k), dt, &mut cond);
                symmetrize(&mut cond, dim);
                if (k + 1) % stride == 0 {
                    row.push(weight * trace_product(&norm_op, &cond, dim));
                }
            }
            row
        })
        .collect();

    let axis: Vec<f64> = (0..n_axis).map(|j| grid.time(j * stride)).collect();
    let mut values = vec![0.0f64; n_axis * n_axis];
    for (i, row) in rows.iter().enumerate() {
        for (off, v) in row.iter().enumerate() {
            let j = i + off;
            values[i * n_axis + j] = *v;
            values[j * n_axis + i] = *v;
        }
    }
    CorrelationMap::new(axis, values)
}

/// Re(Tr(Q ρ)) with ρ given as a row-major vec.
fn trace_product(q: &ComplexMatrix, rho_vec: &[Complex64], dim: usize) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..dim {
        for k in 0..dim {
            acc += q.get(i, k) * rho_vec[k * dim + i];
        }
    }
    acc.re
}
