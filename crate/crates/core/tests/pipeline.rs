use std::f64::consts::TAU;

use approx::assert_relative_eq;
use optomech::entanglement::Bipartition;
use optomech::model::{drive_amplitude, single_photon_coupling, to_effective};
use optomech::steady_state::solve_steady_state;
use optomech::sweep::presets::base_input;
use optomech::sweep::{apply_param, evaluate_point, run_sweep, Axis, ParamField, ParamPath, PointStatus, SweepSpec};
use optomech::model::ModelInput;
use optomech::{PhysicalCavityParams, PhysicalSystem};

fn lab_cavity(decay_hz: f64) -> PhysicalCavityParams {
    PhysicalCavityParams {
        cavity_length: 1e-3,
        mirror_mass: 10e-12,
        mech_freq: TAU * 10e6,
        mech_quality: 1e5,
        cavity_decay: TAU * decay_hz,
        laser_wavelength: 1064e-9,
        laser_power: 50e-3,
        cavity_detuning_bare: TAU * 10e6,
        temperature: 0.6,
    }
}

/// Real roots of `β²n³ - 2βΔ₀n² + (κ² + Δ₀²)n - E² = 0`, ascending.
fn photon_roots(e2: f64, kappa: f64, d0: f64, beta: f64) -> Vec<f64> {
    let (a, b, c) = (-2.0 * d0 / beta, (kappa * kappa + d0 * d0) / (beta * beta), -e2 / (beta * beta));
    let q = (a * a - 3.0 * b) / 9.0;
    let r = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 54.0;
    let mut roots = if r * r < q * q * q {
        let t = (r / (q * q * q).sqrt()).acos();
        (0..3)
            .map(|k| -2.0 * q.sqrt() * ((t + TAU * k as f64) / 3.0).cos() - a / 3.0)
            .collect()
    } else {
        let big = -r.signum() * (r.abs() + (r * r - q * q * q).sqrt()).cbrt();
        vec![big + if big == 0.0 { 0.0 } else { q / big } - a / 3.0]
    };
    for x in roots.iter_mut() {
        for _ in 0..4 {
            *x -= (((*x + a) * *x + b) * *x + c) / ((3.0 * *x + 2.0 * a) * *x + b);
        }
    }
    roots.sort_by(f64::total_cmp);
    roots
}

#[test]
fn lab_parameters_without_hopping_resolve_to_pinned_effective_values() {
    let cav = lab_cavity(5e6);
    let sys = PhysicalSystem::identical(cav, 0.0);
    let st = solve_steady_state(&sys).unwrap();

    let g = single_photon_coupling(&cav);
    let e = drive_amplitude(&cav);
    let beta = g * g / cav.mech_freq;
    let roots = photon_roots(e * e, cav.cavity_decay, cav.cavity_detuning_bare, beta);
    assert_eq!(roots.len(), 1);
    assert_relative_eq!(st.photon_number(0), roots[0], max_relative = 1e-10);
    assert_relative_eq!(st.photon_number(1), roots[0], max_relative = 1e-10);

    let eff = to_effective(&ModelInput::Physical(sys), Some(&st)).unwrap().normalized();
    // ≈ 1.05e10 intracavity photons
    assert!((st.photon_number(0) / 1.0477e10 - 1.0).abs() < 1e-4);
    assert!((eff.effective_coupling[0] - 1.6709).abs() < 1e-4);
    assert!((eff.effective_detuning[0] + 0.3960).abs() < 1e-4);
    assert_relative_eq!(eff.mech_damping[0], 1e-5, max_relative = 1e-12);
    assert_eq!(eff.hopping, 0.0);
}

#[test]
fn lab_parameters_run_through_the_pipeline() {
    let sys = PhysicalSystem::identical(lab_cavity(5e6), 0.0);
    let r = evaluate_point(&ModelInput::Physical(sys), &Bipartition::ALL);
    let report = r.stability.expect("stability computed");
    let resolved = r.resolved.expect("effective parameters resolved");
    // blue-shifted effective detuning drives the mechanics unstable
    assert!(resolved.effective_detuning[0] < 0.0);
    assert!(!report.stable);
    assert_eq!(r.status, PointStatus::Unstable);
    assert!(r.entanglement.iter().all(|(_, e)| e.is_none()));
}

#[test]
fn weak_drive_physical_point_is_stable_and_physical() {
    let mut cav = lab_cavity(15e6);
    cav.laser_power = 1e-4;
    let sys = PhysicalSystem::identical(cav, TAU * 2e6);
    let r = evaluate_point(&ModelInput::Physical(sys), &Bipartition::ALL);
    assert_eq!(r.status, PointStatus::Ok);
    assert_eq!(r.physical, Some(true));
    for (_, e) in &r.entanglement {
        let e = e.unwrap();
        assert!(e.log_negativity >= 0.0);
        assert!(e.theta_minus > 0.0);
    }
}

#[test]
fn asymmetric_physical_system_swaps_exactly() {
    let mut second = lab_cavity(8e6);
    second.laser_power = 20e-3;
    second.mirror_mass = 15e-12;
    let sys = PhysicalSystem {
        cavities: [lab_cavity(5e6), second],
        hopping: TAU * 3e6,
    };
    let a = solve_steady_state(&sys).unwrap();
    let b = solve_steady_state(&sys.swapped()).unwrap();
    assert_eq!(b, a.swapped());
    assert!(a.residual <= 1e-12);
}

#[test]
fn power_sweep_in_physical_mode() {
    let mut cav = lab_cavity(10e6);
    cav.laser_power = 1e-3;
    let spec = SweepSpec {
        base: ModelInput::Physical(PhysicalSystem::identical(cav, TAU * 3e6)),
        axes: vec![Axis::new(
            "laser_power".parse().unwrap(),
            vec![1e-6, 1e-5, 1e-4, 1e-3],
        )],
        bipartitions: vec![Bipartition::MechMech],
    };
    let recs = run_sweep(&spec).unwrap();
    assert_eq!(recs.len(), 4);
    let couplings: Vec<f64> = recs
        .iter()
        .map(|r| r.resolved_params.unwrap().effective_coupling[0])
        .collect();
    // G grows as √P at low power
    assert_relative_eq!(couplings[1] / couplings[0], 10f64.sqrt(), max_relative = 1e-3);
    assert!(couplings.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn below_threshold_curve_has_no_mechanical_entanglement() {
    let spec = SweepSpec {
        base: base_input(1.0, 0.5, 1.0),
        axes: vec![Axis::normalized(
            ParamPath::both(ParamField::Hopping),
            (0..=20).map(|i| i as f64 / 20.0).collect(),
        )],
        bipartitions: vec![Bipartition::MechMech],
    };
    for r in run_sweep(&spec).unwrap() {
        match r.status {
            PointStatus::Ok => assert_eq!(r.log_negativity(Bipartition::MechMech), Some(0.0)),
            PointStatus::Unstable => assert_eq!(r.log_negativity(Bipartition::MechMech), None),
            PointStatus::SolverError(e) => panic!("{e}"),
        }
    }
}

#[test]
fn strong_coupling_on_resonance_is_reported_unstable() {
    // Without hopping Δ = 0 leaves the amplitude quadrature undriven and the
    // system stable for any G; hopping closes a feedback loop through the
    // other cavity.
    let isolated = evaluate_point(&base_input(0.0, 0.5, 50.0), &[Bipartition::MechMech]);
    assert_eq!(isolated.status, PointStatus::Ok);
    let hopping = "hopping".parse().unwrap();
    let omega = isolated.resolved.unwrap().omega_ref();
    let coupled = apply_param(&base_input(0.0, 0.5, 50.0), hopping, 0.5 * omega).unwrap();
    let r = evaluate_point(&coupled, &[Bipartition::MechMech]);
    assert_eq!(r.status, PointStatus::Unstable);
    assert!(r.stability.unwrap().spectral_abscissa > 0.0);
}

#[test]
fn single_precision_pipeline() {
    let input: ModelInput<f32> = base_input(1.0f32, 0.5, 0.5);
    let r = evaluate_point(&input, &Bipartition::ALL);
    assert_eq!(r.status, PointStatus::Ok);
    let r64 = evaluate_point(&base_input(1.0f64, 0.5, 0.5), &Bipartition::ALL);
    for (a, b) in r.entanglement.iter().zip(&r64.entanglement) {
        let (a, b) = (a.1.unwrap(), b.1.unwrap());
        assert!((a.theta_minus as f64 - b.theta_minus).abs() < 1e-3 * b.theta_minus.max(1.0));
    }
}
