use std::sync::Arc;

use nalgebra::DMatrix;
use proptest::prelude::*;

use driftlab::integrators::{averaged_gradient, dp_step, ep_midstep, split_det_step, step};
use driftlab::models::{make_oscillator, make_pendulum, make_rigid_body_scalar, model_by_id};
use driftlab::stochastic::sample_path;
use driftlab::{Hamiltonian, ModelKind, NoiseModel, SchemeId, SolverSettings, SplitVariant, State, SystemModel};

fn finite(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    lo..hi
}

fn state2() -> impl Strategy<Value = State> {
    (finite(-3.0, 3.0), finite(-3.0, 3.0)).prop_map(|(a, b)| State::from([a, b]))
}

fn state3() -> impl Strategy<Value = State> {
    (finite(-2.0, 2.0), finite(-2.0, 2.0), finite(-2.0, 2.0)).prop_map(|(a, b, c)| State::from([a, b, c]))
}

fn models() -> Vec<SystemModel> {
    ["oscillator", "pendulum", "rigid_body"]
        .iter()
        .map(|id| model_by_id(id).unwrap())
        .collect()
}

fn state_for(model: &SystemModel, s2: State, s3: State) -> State {
    if model.dim() == 2 {
        s2
    } else {
        s3
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn poisson_is_skew(s2 in state2(), s3 in state3()) {
        for m in models() {
            let b = m.poisson(&state_for(&m, s2, s3));
            let defect = (&b + b.transpose()).amax();
            prop_assert!(defect <= 1e-14, "{} defect {defect}", m.kind());
        }
    }

    #[test]
    fn discrete_gradient_identity(a2 in state2(), b2 in state2(), a3 in state3(), b3 in state3()) {
        let settings = SolverSettings::default();
        for m in models() {
            let (y1, y2) = if m.dim() == 2 { (a2, b2) } else { (a3, b3) };
            let g = averaged_gradient(&m, &y1, &y2, &settings);
            let lhs = g.dot(&(y2 - y1));
            let rhs = m.hamiltonian(&y2) - m.hamiltonian(&y1);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()), "{}: {lhs} vs {rhs}", m.kind());
        }
    }

    #[test]
    fn midstep_preserves_invariants(s2 in state2(), s3 in state3(), h in 0.01f64..0.3) {
        let settings = SolverSettings::default();
        for m in models() {
            let y1 = state_for(&m, s2, s3);
            let (y2, diag) = ep_midstep(&m, &y1, h, &settings).unwrap();
            prop_assert!(diag.converged);
            let dh = (m.hamiltonian(&y2) - m.hamiltonian(&y1)).abs();
            prop_assert!(dh <= 1e-10, "{} energy drift {dh}", m.kind());
            if let Some(c) = m.casimir() {
                let dc = (c.value(&y2) - c.value(&y1)).abs();
                prop_assert!(dc <= 1e-10, "casimir drift {dc}");
            }
        }
    }

    #[test]
    fn casimir_gradient_orthogonal_to_poisson(s in state3()) {
        let m = make_rigid_body_scalar(0.25).unwrap();
        let c = m.casimir().unwrap();
        let b = m.poisson(&s);
        let g = c.gradient(&s);
        let bg = b.transpose() * nalgebra::DVector::from_column_slice(g.as_slice());
        prop_assert!(bg.amax() <= 1e-13);
    }

    #[test]
    fn noise_hessian_matches_finite_differences(s2 in state2(), s3 in state3()) {
        for m in models() {
            let defect = m.noise_hessian_defect(&state_for(&m, s2, s3), 1e-4);
            prop_assert!(defect <= 1e-6, "{} defect {defect}", m.kind());
        }
    }

    #[test]
    fn coarsening_is_associative(seed in any::<u64>(), index in 0u64..1000, d in 1usize..4) {
        let p = sample_path(seed, index, d, 1e-3, 128).unwrap();
        prop_assert_eq!(p.coarsen(2).unwrap().coarsen(4).unwrap(), p.coarsen(8).unwrap());
        prop_assert_eq!(p.coarsen(8).unwrap().coarsen(16).unwrap(), p.coarsen(128).unwrap());
    }

    #[test]
    fn dp_matches_cayley_map(x in state2(), dw in prop::array::uniform2(-0.5f64..0.5), h in 0.01f64..1.0) {
        let m = make_oscillator(0.3).unwrap();
        let (out, _) = dp_step(&m, &x, h, &dw[..1], &dw[1..], &SolverSettings::default()).unwrap();
        let y1 = State::from([x[0] + 0.3 * dw[0], x[1]]);
        let a = h / 2.0;
        let det = 1.0 + a * a;
        let y2 = State::from([
            ((1.0 - a * a) * y1[0] - 2.0 * a * y1[1]) / det,
            (2.0 * a * y1[0] + (1.0 - a * a) * y1[1]) / det,
        ]);
        let expect = State::from([y2[0] + 0.3 * dw[1], y2[1]]);
        prop_assert!((out - expect).norm_inf() <= 1e-11);
    }
}

/// `H(x) = x³/3` on a line, with the trivial structure `B = 0`.
struct Cubic;

impl Hamiltonian for Cubic {
    fn dim(&self) -> usize {
        1
    }
    fn energy(&self, x: &State) -> f64 {
        x[0].powi(3) / 3.0
    }
    fn gradient(&self, x: &State) -> State {
        State::from([x[0] * x[0]])
    }
    fn poisson_apply(&self, _x: &State, v: &State) -> State {
        State::zeros(v.len())
    }
}

#[test]
fn quadrature_integrates_quadratic_gradient() {
    let noise = NoiseModel::new(DMatrix::from_element(1, 1, 0.0), DMatrix::from_element(1, 1, 0.0)).unwrap();
    let m = SystemModel::new(ModelKind::Custom, Arc::new(Cubic), noise, None, State::from([0.0])).unwrap();
    let (y1, y2) = (State::from([0.0]), State::from([1.0]));
    for nodes in 2..=5 {
        let settings = SolverSettings {
            quadrature_nodes: nodes,
            ..SolverSettings::default()
        };
        let g = averaged_gradient(&m, &y1, &y2, &settings);
        assert!((g[0] - 1.0 / 3.0).abs() <= 1e-15, "{nodes} nodes: {}", g[0]);
    }
}

#[test]
fn symplectic_splittings_stay_bounded() {
    let m = make_oscillator(0.0).unwrap();
    let zero = [0.0];
    let h0 = m.hamiltonian(&m.initial_value());
    for variant in [SplitVariant::StormerVerlet, SplitVariant::SymplecticEuler] {
        let mut x = m.initial_value();
        let mut worst: f64 = 0.0;
        for _ in 0..10_000 {
            x = split_det_step(&m, &x, 0.1, &zero, &zero, variant).unwrap();
            worst = worst.max((m.hamiltonian(&x) - h0).abs());
        }
        assert!(worst < 0.1, "{variant:?}: energy error {worst}");
    }
}

#[test]
fn explicit_euler_splitting_grows() {
    let m = make_oscillator(0.0).unwrap();
    let zero = [0.0];
    let mut x = m.initial_value();
    for _ in 0..1000 {
        x = split_det_step(&m, &x, 0.1, &zero, &zero, SplitVariant::Euler).unwrap();
    }
    assert!(m.hamiltonian(&x) > 10.0 * m.hamiltonian(&m.initial_value()));
}

#[test]
fn pendulum_dp_energy_exact_without_noise() {
    let m = make_pendulum(0.0).unwrap();
    let settings = SolverSettings::default();
    let mut x = m.initial_value();
    let zero = [0.0];
    let h0 = m.hamiltonian(&x);
    for _ in 0..2000 {
        x = step(SchemeId::Dp, &m, &x, 0.1, &zero, &zero, &settings).unwrap().0;
    }
    assert!((m.hamiltonian(&x) - h0).abs() < 1e-9);
}

#[test]
fn sample_path_statistics() {
    let h = 0.01;
    let n = 1_000_000usize;
    let p = sample_path(2024, 0, 1, h, n).unwrap();
    let xs: Vec<f64> = p.increments().map(|v| v[0]).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    let skew = xs.iter().map(|x| ((x - mean) / sd).powi(3)).sum::<f64>() / n as f64;
    let kurt = xs.iter().map(|x| ((x - mean) / sd).powi(4)).sum::<f64>() / n as f64 - 3.0;
    assert!(mean.abs() <= 4.0 * (h / n as f64).sqrt(), "mean {mean}");
    assert!((var / h - 1.0).abs() <= 0.01, "variance {var}");
    assert!(skew.abs() <= 0.02, "skewness {skew}");
    assert!(kurt.abs() <= 0.02, "excess kurtosis {kurt}");
}

#[test]
fn sample_paths_are_uncorrelated_across_samples() {
    let n = 200_000;
    let a = sample_path(5, 0, 1, 1.0, n).unwrap();
    let b = sample_path(5, 1, 1, 1.0, n).unwrap();
    let corr = a
        .increments()
        .zip(b.increments())
        .map(|(x, y)| x[0] * y[0])
        .sum::<f64>()
        / n as f64;
    assert!(corr.abs() < 4.0 / (n as f64).sqrt(), "correlation {corr}");
}
