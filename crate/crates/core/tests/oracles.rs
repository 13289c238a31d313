//! Cross-checks of the RK4 propagation and the regression correlation map
//! against the independent expm-product oracle, plus analytic limits.

use qcascade_testkit::{matvec, unvec, vec_of, SuperOp};
use qcascade::lindblad::{correlation_map, propagate, Liouvillian};
use qcascade::observables::{flux_first, flux_second};
use qcascade::quantum::{sigma_minus, DensityMatrix, PulseSpec, SystemParams, TimeGrid};
use qcascade::ComplexMatrix;

const ORACLE_DT: f64 = 0.1;

fn max_state_diff(states: &[DensityMatrix], oracle: &[ComplexMatrix]) -> f64 {
    assert_eq!(states.len(), oracle.len());
    states
        .iter()
        .zip(oracle)
        .map(|(s, o)| s.matrix().max_abs_diff(o))
        .fold(0.0, f64::max)
}

#[test]
fn single_system_rk4_matches_expm_oracle() {
    let params = SystemParams::default();
    let pulse = PulseSpec::default();
    let grid = TimeGrid::new(0.0, 2000.0, ORACLE_DT).unwrap();

    let liouv = Liouvillian::single(&params, Some(pulse)).unwrap();
    let rho0 = DensityMatrix::ground(1).unwrap();
    let traj = propagate(&liouv, &rho0, &grid).unwrap();

    let oracle = SuperOp::single(&params, Some(pulse));
    let states = oracle.propagate(rho0.matrix(), 0.0, ORACLE_DT, grid.n_steps());

    let diff = max_state_diff(traj.states(), &states);
    assert!(diff <= 1e-8, "max entry difference {diff:.3e}");

    // peak excited population agrees at the same precision
    let peak_rk4 = traj
        .states()
        .iter()
        .map(|s| s.matrix().get(1, 1).re)
        .fold(0.0, f64::max);
    let peak_oracle = states.iter().map(|m| m.get(1, 1).re).fold(0.0, f64::max);
    assert!(
        (peak_rk4 - peak_oracle).abs() <= 1e-8,
        "peak P_e {peak_rk4} vs {peak_oracle}"
    );
    // a π pulse should come close to full inversion
    assert!(peak_rk4 > 0.85 && peak_rk4 < 1.0, "peak P_e = {peak_rk4}");
}

#[test]
fn cascaded_rk4_matches_expm_oracle() {
    let params = SystemParams::default();
    let pulse = PulseSpec::default();
    let grid = TimeGrid::new(0.0, 2000.0, ORACLE_DT).unwrap();

    let liouv = Liouvillian::cascaded(&params, Some(pulse)).unwrap();
    let rho0 = DensityMatrix::ground(2).unwrap();
    let traj = propagate(&liouv, &rho0, &grid).unwrap();

    let oracle = SuperOp::cascaded(&params, Some(pulse));
    let states = oracle.propagate(rho0.matrix(), 0.0, ORACLE_DT, grid.n_steps());

    let diff = max_state_diff(traj.states(), &states);
    assert!(diff <= 1e-8, "max entry difference {diff:.3e}");
}

#[test]
fn paper_run_keeps_trace_and_positivity() {
    let params = SystemParams::default();
    let pulse = PulseSpec::default();
    let grid = TimeGrid::new(0.0, 2000.0, 0.5).unwrap();
    for traj in [
        propagate(
            &Liouvillian::single(&params, Some(pulse)).unwrap(),
            &DensityMatrix::ground(1).unwrap(),
            &grid,
        )
        .unwrap(),
        propagate(
            &Liouvillian::cascaded(&params, Some(pulse)).unwrap(),
            &DensityMatrix::ground(2).unwrap(),
            &grid,
        )
        .unwrap(),
    ] {
        assert!(traj.max_trace_drift() <= 1e-9, "drift {:.3e}", traj.max_trace_drift());
        assert!(
            traj.min_eigenvalue() >= -1e-9,
            "min eigenvalue {:.3e}",
            traj.min_eigenvalue()
        );
    }
}

#[test]
fn halving_dt_leaves_observables_unchanged() {
    let params = SystemParams::default();
    let pulse = PulseSpec::default();
    let run = |dt: f64| {
        let grid = TimeGrid::new(0.0, 2000.0, dt).unwrap();
        let single = propagate(
            &Liouvillian::single(&params, Some(pulse)).unwrap(),
            &DensityMatrix::ground(1).unwrap(),
            &grid,
        )
        .unwrap();
        let cascaded = propagate(
            &Liouvillian::cascaded(&params, Some(pulse)).unwrap(),
            &DensityMatrix::ground(2).unwrap(),
            &grid,
        )
        .unwrap();
        let n1 = flux_first(&single, &params).unwrap();
        let n2 = flux_second(&cascaded, &params).unwrap();
        let peak = n1.values().iter().cloned().fold(0.0, f64::max);
        (n1.integral(), n2.integral(), peak)
    };
    let (a1, a2, a3) = run(0.5);
    let (b1, b2, b3) = run(0.25);
    for (coarse, fine) in [(a1, b1), (a2, b2), (a3, b3)] {
        let rel = (coarse - fine).abs() / fine.abs();
        assert!(rel < 1e-6, "observable changed by {rel:.3e} under dt halving");
    }
}

#[test]
fn mirror_limit_output_flux_equals_input_flux() {
    // η_re = 1: nothing reaches system 2 and S₋ = −σ₋⁽¹⁾ + σ₋⁽²⁾, so the
    // measured flux reduces to the first-generation flux pointwise.
    let params = SystemParams {
        eta_re: 1.0,
        ..SystemParams::default()
    };
    let pulse = PulseSpec::default();
    let grid = TimeGrid::new(0.0, 2000.0, 0.5).unwrap();
    let single = propagate(
        &Liouvillian::single(&params, Some(pulse)).unwrap(),
        &DensityMatrix::ground(1).unwrap(),
        &grid,
    )
    .unwrap();
    let cascaded = propagate(
        &Liouvillian::cascaded(&params, Some(pulse)).unwrap(),
        &DensityMatrix::ground(2).unwrap(),
        &grid,
    )
    .unwrap();
    let n1 = flux_first(&single, &params).unwrap();
    let n2 = flux_second(&cascaded, &params).unwrap();
    for (a, b) in n1.values().iter().zip(n2.values()) {
        assert!((a - b).abs() <= 1e-10, "flux mismatch {a} vs {b}");
    }
}

#[test]
fn integrated_input_flux_cross_checked_against_oracle() {
    let params = SystemParams::default();
    let pulse = PulseSpec::default();
    let grid = TimeGrid::new(0.0, 2000.0, ORACLE_DT).unwrap();
    let traj = propagate(
        &Liouvillian::single(&params, Some(pulse)).unwrap(),
        &DensityMatrix::ground(1).unwrap(),
        &grid,
    )
    .unwrap();
    let flux = flux_first(&traj, &params).unwrap();

    let oracle = SuperOp::single(&params, Some(pulse));
    let states = oracle.propagate(
        DensityMatrix::ground(1).unwrap().matrix(),
        0.0,
        ORACLE_DT,
        grid.n_steps(),
    );
    let oracle_values: Vec<f64> = states
        .iter()
        .map(|m| params.gamma / 2.0 * m.get(1, 1).re)
        .collect();
    let mut oracle_integral = 0.5 * (oracle_values[0] + oracle_values[oracle_values.len() - 1]);
    for v in &oracle_values[1..oracle_values.len() - 1] {
        oracle_integral += v;
    }
    oracle_integral *= ORACLE_DT;

    let integral = flux.integral();
    assert!(
        (integral - oracle_integral).abs() <= 1e-8,
        "integrated flux {integral} vs oracle {oracle_integral}"
    );
    // re-excitation during the 25 ps pulse pushes this slightly above 1/2
    assert!(integral > 0.0 && integral < 0.55, "integrated flux {integral}");
}

/// Brute-force quantum regression: G²(t₁,t₂) rebuilt per pair from products
/// of frozen-generator exponentials, with no shared marching state.
fn brute_force_map(
    oracle: &SuperOp,
    jump: &ComplexMatrix,
    weight: f64,
    rho0: &ComplexMatrix,
    t_axis: &[f64],
    fine_dt: f64,
) -> Vec<Vec<f64>> {
    let dim = rho0.dim();
    let norm_op = &jump.adjoint() * jump;
    let steps_of = |t: f64| (t / fine_dt).round() as usize;

    // per-step propagators, shared across pairs but recombined per pair
    let total_steps = steps_of(*t_axis.last().unwrap());
    let step_props: Vec<ComplexMatrix> = (0..total_steps)
        .map(|k| oracle.step_propagator(k as f64 * fine_dt, fine_dt))
        .collect();
    let product = |from: usize, to: usize| -> ComplexMatrix {
        let mut u = ComplexMatrix::identity(dim * dim);
        for p in step_props.iter().take(to).skip(from) {
            u = p * &u;
        }
        u
    };

    t_axis
        .iter()
        .map(|&t1| {
            let k1 = steps_of(t1);
            let base = unvec(dim, &matvec(&product(0, k1), &vec_of(rho0)));
            let cond = &(jump * &base) * &jump.adjoint();
            t_axis
                .iter()
                .filter(|&&t2| t2 >= t1)
                .map(|&t2| {
                    let k2 = steps_of(t2);
                    let evolved = unvec(dim, &matvec(&product(k1, k2), &vec_of(&cond)));
                    weight * (&norm_op * &evolved).trace().re
                })
                .collect()
        })
        .collect()
}

#[test]
fn regression_map_matches_brute_force_oracle() {
    let params = SystemParams::default();
    let pulse = PulseSpec::default();
    let fine_dt = 0.1;
    let stride = 200; // 20 ps axis spacing
    let grid = TimeGrid::new(0.0, 380.0, fine_dt).unwrap(); // 20 axis points
    let weight = params.gamma * params.gamma / 4.0;

    // first generation: J = σ₋ on the driven single system
    {
        let liouv = Liouvillian::single(&params, Some(pulse)).unwrap();
        let rho0 = DensityMatrix::ground(1).unwrap();
        let map = correlation_map(&liouv, &sigma_minus(), weight, &rho0, &grid, stride).unwrap();

        let oracle = SuperOp::single(&params, Some(pulse));
        let brute = brute_force_map(
            &oracle,
            &sigma_minus(),
            weight,
            rho0.matrix(),
            map.axis(),
            fine_dt,
        );
        compare_maps(&map, &brute);
    }

    // second generation: J = S₋ on the cascaded pair
    {
        let liouv = Liouvillian::cascaded(&params, Some(pulse)).unwrap();
        let rho0 = DensityMatrix::ground(2).unwrap();
        let jump = qcascade::quantum::collective_jump(&params);
        let map = correlation_map(&liouv, &jump, weight, &rho0, &grid, stride).unwrap();

        let oracle = SuperOp::cascaded(&params, Some(pulse));
        let brute = brute_force_map(&oracle, &jump, weight, rho0.matrix(), map.axis(), fine_dt);
        compare_maps(&map, &brute);
    }
}

fn compare_maps(map: &qcascade::CorrelationMap, brute: &[Vec<f64>]) {
    let scale = map.max_value();
    assert!(scale > 0.0);
    let n = map.len();
    let mut worst = 0.0f64;
    for i in 0..n {
        for (off, b) in brute[i].iter().enumerate() {
            let j = i + off;
            worst = worst.max((map.value(i, j) - b).abs());
        }
    }
    assert!(
        worst <= 1e-8 * scale,
        "map deviates from brute force by {worst:.3e} (map max {scale:.3e})"
    );
}
