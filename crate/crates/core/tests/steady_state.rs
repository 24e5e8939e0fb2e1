use std::f64::consts::TAU;

use optomech::steady_state::{
    fixed_point_residual, solve_problem, Branch, BranchChoice, SteadyStateOptions, SteadyStateProblem,
};
use proptest::prelude::*;

/// Real roots of `β²n³ - 2βδn² + (κ² + δ²)n - E² = 0` by scanning and
/// bisection, `δ` the detuning from the relevant resonance.
fn modulus_roots(e2: f64, kappa: f64, delta: f64, beta: f64) -> Vec<f64> {
    let f = |n: f64| n * (kappa * kappa + (delta - beta * n).powi(2)) - e2;
    let hi = e2 / (kappa * kappa) * 1.01 + 1.0;
    let steps = 20_000;
    let mut roots = Vec::new();
    let mut prev = f(0.0);
    for i in 1..=steps {
        let x = hi * i as f64 / steps as f64;
        let v = f(x);
        if prev.signum() != v.signum() {
            let (mut a, mut b) = (hi * (i - 1) as f64 / steps as f64, x);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if f(a).signum() == f(m).signum() {
                    a = m
                } else {
                    b = m
                }
            }
            roots.push(0.5 * (a + b));
        }
        prev = v;
    }
    roots
}

fn identical(e: f64, kappa: f64, d0: f64, beta: f64, xi: f64) -> SteadyStateProblem<f64> {
    SteadyStateProblem {
        drive: [e; 2],
        cavity_decay: [kappa; 2],
        bare_detuning: [d0; 2],
        coupling: [beta.sqrt(); 2],
        mech_freq: [1.0; 2],
        hopping: xi,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    // Identical cavities with hopping: a = E/(κ + i(Δ - ξ)), so the modulus
    // obeys the single-cavity cubic with Δ₀ replaced by Δ₀ - ξ.
    #[test]
    fn symmetric_hopping_matches_shifted_cubic(
        e in 0.1f64..5.0,
        kappa in 0.2f64..2.0,
        d0 in -2.0f64..6.0,
        beta in 0.05f64..1.0,
        xi in 0.0f64..2.0,
    ) {
        let p = identical(e, kappa, d0, beta, xi);
        let roots = modulus_roots(e * e, kappa, d0 - xi, beta);
        let sol = solve_problem(&p, &SteadyStateOptions::default()).unwrap();
        prop_assert_eq!(sol.state.amp[0], sol.state.amp[1]);
        let n = sol.state.photon_number(0);
        prop_assert!((n - roots[0]).abs() <= 1e-9 * roots[0].max(1e-12), "n {} roots {:?}", n, roots);
        if xi > 0.0 {
            prop_assert_eq!(sol.branches.len(), roots.len());
            let expected = if roots.len() == 1 { Branch::Unique } else { Branch::Lower };
            prop_assert_eq!(sol.state.branch, expected);
        }
    }

    #[test]
    fn coupled_solutions_satisfy_the_equations_and_swap(
        e in proptest::array::uniform2(0.1f64..3.0),
        kappa in proptest::array::uniform2(0.2f64..2.0),
        d0 in proptest::array::uniform2(-1.0f64..4.0),
        beta in proptest::array::uniform2(0.05f64..1.0),
        xi in 0.05f64..2.0,
    ) {
        let p = SteadyStateProblem {
            drive: e,
            cavity_decay: kappa,
            bare_detuning: d0,
            coupling: beta.map(f64::sqrt),
            mech_freq: [1.0; 2],
            hopping: xi,
        };
        let sol = solve_problem(&p, &SteadyStateOptions::default()).unwrap();
        for b in &sol.branches {
            prop_assert!(fixed_point_residual(b, &p) <= 1e-12);
        }
        let swapped = solve_problem(&p.swapped(), &SteadyStateOptions::default()).unwrap();
        prop_assert_eq!(swapped.state, sol.state.swapped());
    }
}

#[test]
fn strict_choice_accepts_unique_states() {
    let p = identical(1.0, 1.0, 0.5, 0.1, 0.3);
    let strict = SteadyStateOptions {
        branch: BranchChoice::Strict,
        ..Default::default()
    };
    let st = solve_problem(&p, &strict).unwrap().state;
    assert_eq!(st.branch, Branch::Unique);
}

#[test]
fn hopping_shifts_the_bistable_window() {
    // Δ₀ - ξ = 3κ is bistable at E² = 4 while Δ₀ - ξ = 1 is not.
    let bistable = identical(2.0, 1.0, 3.5, 1.0, 0.5);
    let sol = solve_problem(&bistable, &SteadyStateOptions::default()).unwrap();
    assert_eq!(sol.branches.len(), 3);
    assert!(!sol.folds.is_empty());
    let upper = SteadyStateOptions {
        branch: BranchChoice::Upper,
        ..Default::default()
    };
    let top = solve_problem(&bistable, &upper).unwrap().state;
    assert!(top.photon_number(0) > sol.state.photon_number(0));

    let single = identical(2.0, 1.0, 1.5, 1.0, 0.5);
    assert_eq!(solve_problem(&single, &SteadyStateOptions::default()).unwrap().branches.len(), 1);
}

#[test]
fn large_dynamic_range() {
    // lab-scale numbers: n ~ 1e10 photons, κ ~ 3e7 rad/s
    let kappa = TAU * 5e6;
    let beta: f64 = 8.37e-3;
    let p = identical(4.1e12, kappa, TAU * 10e6, beta, TAU * 1e6);
    let sol = solve_problem(&p, &SteadyStateOptions::default()).unwrap();
    let roots = modulus_roots(4.1e12f64.powi(2), kappa, TAU * 9e6, beta);
    assert!((sol.state.photon_number(0) / roots[0] - 1.0).abs() < 1e-8);
}
