//! Independent propagation oracle shared by the integration and acceptance
//! test suites. Not part of the library surface.
//!
//! The generator is rebuilt here as an explicit superoperator matrix from
//! the vectorization identities (row-major convention)
//!
//!   vec(A ρ B) = (A ⊗ Bᵀ) vec(ρ),
//!
//! with no code shared with `Liouvillian`'s term-probing construction. Time
//! stepping is piecewise-constant matrix exponentials: each step applies a
//! 4th-order commutator-free composition of two frozen-generator
//! exponentials (Gauss nodes), so the only shared numerics with the
//! implementation under test is the `expm` kernel, which has its own
//! Taylor-series oracle.

use num_complex::Complex64;
use qcascade::linalg::ComplexMatrix;
use qcascade::quantum::{embed, sigma_minus, sigma_z, PulseSpec, SystemParams};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

fn transpose(m: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.dim(), |i, j| m.get(j, i))
}

/// vec(A ρ) superoperator: A ⊗ I.
fn left(a: &ComplexMatrix) -> ComplexMatrix {
    kron(a, &ComplexMatrix::identity(a.dim()))
}

/// vec(ρ B) superoperator: I ⊗ Bᵀ.
fn right(b: &ComplexMatrix) -> ComplexMatrix {
    kron(&ComplexMatrix::identity(b.dim()), &transpose(b))
}

/// vec(A ρ B) superoperator.
fn sandwich(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    kron(a, &transpose(b))
}

fn dissipator_matrix(x: &ComplexMatrix) -> ComplexMatrix {
    let xd = x.adjoint();
    let norm_op = &xd * x;
    let half = &(&left(&norm_op) + &right(&norm_op)).scale_re(0.5);
    &sandwich(x, &xd) - half
}

fn hamiltonian_matrix(h: &ComplexMatrix) -> ComplexMatrix {
    (&left(h) - &right(h)).scale(c(0.0, -1.0))
}

/// Time-dependent superoperator split L(t) = L₀ + Ω(t) L_x + Ω²(t) L_z.
pub struct SuperOp {
    pub constant: ComplexMatrix,
    pub drive: ComplexMatrix,
    pub drive2: ComplexMatrix,
    pub pulse: Option<PulseSpec>,
}

impl SuperOp {
    pub fn single(params: &SystemParams, pulse: Option<PulseSpec>) -> Self {
        let sm = sigma_minus();
        let sz = sigma_z();
        let mut constant = hamiltonian_matrix(&sz.scale_re(params.delta_l / 2.0));
        constant = &constant + &dissipator_matrix(&sm).scale_re(params.gamma);
        constant = &constant + &dissipator_matrix(&sz).scale_re(params.gamma_d);
        let drive = hamiltonian_matrix(&(&sm.adjoint() + &sm).scale_re(0.5));
        let drive2 = dissipator_matrix(&sz).scale_re(params.b);
        SuperOp {
            constant,
            drive,
            drive2,
            pulse,
        }
    }

    pub fn cascaded(params: &SystemParams, pulse: Option<PulseSpec>) -> Self {
        let sm1 = embed(&sigma_minus(), 1, 2).unwrap();
        let sm2 = embed(&sigma_minus(), 2, 2).unwrap();
        let sp1 = sm1.adjoint();
        let sp2 = sm2.adjoint();
        let sz1 = embed(&sigma_z(), 1, 2).unwrap();
        let sz2 = embed(&sigma_z(), 2, 2).unwrap();

        let mut constant = hamiltonian_matrix(&(&sz1 + &sz2).scale_re(params.delta_l / 2.0));
        for (rate, op) in [
            (params.gamma, &sm1),
            (params.gamma_d, &sz1),
            (params.gamma, &sm2),
            (params.gamma_d, &sz2),
        ] {
            constant = &constant + &dissipator_matrix(op).scale_re(rate);
        }
        // −(√η_loss/2)Γ ([σ₊², σ₋¹ρ] + [ρσ₊¹, σ₋²]) vectorized term by term
        let k = params.eta_loss().sqrt() * params.gamma / 2.0;
        let coupling = &(&left(&(&sp2 * &sm1)) - &sandwich(&sm1, &sp2))
            + &(&right(&(&sp1 * &sm2)) - &sandwich(&sm2, &sp1));
        constant = &constant - &coupling.scale_re(k);

        let drive = hamiltonian_matrix(&(&sp1 + &sm1).scale_re(0.5));
        let drive2 = dissipator_matrix(&sz1).scale_re(params.b);
        SuperOp {
            constant,
            drive,
            drive2,
            pulse,
        }
    }

    pub fn at(&self, t: f64) -> ComplexMatrix {
        let omega = self.pulse.as_ref().map_or(0.0, |p| p.rabi_frequency(t));
        let mut m = self.constant.clone();
        if omega != 0.0 {
            m = &m + &self.drive.scale_re(omega);
            m = &m + &self.drive2.scale_re(omega * omega);
        }
        m
    }

    /// One piecewise-constant exponential step from t to t + dt: the CF4
    /// composition exp(dt(a₁A₁ + a₂A₂)) · exp(dt(a₂A₁ + a₁A₂)) with the
    /// generator frozen at the two Gauss nodes.
    pub fn step_propagator(&self, t: f64, dt: f64) -> ComplexMatrix {
        let root3 = 3.0f64.sqrt();
        let node_a = t + (0.5 - root3 / 6.0) * dt;
        let node_b = t + (0.5 + root3 / 6.0) * dt;
        let a1 = (3.0 - 2.0 * root3) / 12.0;
        let a2 = (3.0 + 2.0 * root3) / 12.0;
        let m_a = self.at(node_a);
        let m_b = self.at(node_b);
        let first = (&m_a.scale_re(a2 * dt) + &m_b.scale_re(a1 * dt)).expm();
        let second = (&m_a.scale_re(a1 * dt) + &m_b.scale_re(a2 * dt)).expm();
        &second * &first
    }

    /// Propagate vec(ρ₀) over n steps, returning every intermediate state.
    pub fn propagate(&self, rho0: &ComplexMatrix, t0: f64, dt: f64, n: usize) -> Vec<ComplexMatrix> {
        let dim = rho0.dim();
        let mut v: Vec<Complex64> = rho0.entries().to_vec();
        let mut out = Vec::with_capacity(n + 1);
        out.push(rho0.clone());
        for k in 0..n {
            let u = self.step_propagator(t0 + k as f64 * dt, dt);
            v = matvec(&u, &v);
            out.push(ComplexMatrix::from_fn(dim, |i, j| v[i * dim + j]));
        }
        out
    }
}

pub fn matvec(m: &ComplexMatrix, v: &[Complex64]) -> Vec<Complex64> {
    let n = m.dim();
    (0..n)
        .map(|i| {
            let mut acc = c(0.0, 0.0);
            for (j, x) in v.iter().enumerate() {
                acc += m.get(i, j) * x;
            }
            acc
        })
        .collect()
}

pub fn vec_of(m: &ComplexMatrix) -> Vec<Complex64> {
    m.entries().to_vec()
}

pub fn unvec(dim: usize, v: &[Complex64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, |i, j| v[i * dim + j])
}
