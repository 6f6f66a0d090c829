//! One-step maps for `dX = B(X)∇H(X) dt + Σ dW`.
//!
//! Every stepper receives the two Wiener increments over the half steps
//! `[tₙ, tₙ + h/2]` and `[tₙ + h/2, tₙ₊₁]`. Splitting schemes use them
//! separately; full-step schemes (EM, BEM, STM) use their sum.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::models::{ModelKind, SystemModel};
use crate::state::State;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeId {
    /// Drift-preserving splitting: noise half-kick, energy-preserving
    /// midstep, noise half-kick.
    Dp,
    /// Euler–Maruyama.
    Em,
    /// Backward (drift-implicit) Euler–Maruyama.
    Bem,
    /// Stochastic trigonometric method, oscillator only.
    Stm,
    SplitSymplecticEuler,
    SplitStormerVerlet,
    SplitEuler,
    SplitHeun,
}

impl SchemeId {
    pub const ALL: [SchemeId; 8] = [
        SchemeId::Dp,
        SchemeId::Em,
        SchemeId::Bem,
        SchemeId::Stm,
        SchemeId::SplitSymplecticEuler,
        SchemeId::SplitStormerVerlet,
        SchemeId::SplitEuler,
        SchemeId::SplitHeun,
    ];

    pub fn id(self) -> &'static str {
        match self {
            SchemeId::Dp => "dp",
            SchemeId::Em => "em",
            SchemeId::Bem => "bem",
            SchemeId::Stm => "stm",
            SchemeId::SplitSymplecticEuler => "symp",
            SchemeId::SplitStormerVerlet => "stormer_verlet",
            SchemeId::SplitEuler => "split_euler",
            SchemeId::SplitHeun => "split_heun",
        }
    }

    fn split_variant(self) -> Option<SplitVariant> {
        match self {
            SchemeId::SplitSymplecticEuler => Some(SplitVariant::SymplecticEuler),
            SchemeId::SplitStormerVerlet => Some(SplitVariant::StormerVerlet),
            SchemeId::SplitEuler => Some(SplitVariant::Euler),
            SchemeId::SplitHeun => Some(SplitVariant::Heun),
            _ => None,
        }
    }

    /// Checks that the scheme can integrate `model`.
    pub fn check_model(self, model: &SystemModel) -> Result<()> {
        let ok = match self {
            SchemeId::Stm => model.kind() == ModelKind::Oscillator,
            SchemeId::SplitSymplecticEuler | SchemeId::SplitStormerVerlet => model.dynamics().separable_dim().is_some(),
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::UnsupportedScheme {
                scheme: self.id(),
                model: model.kind().to_string(),
            })
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeId::ALL
            .into_iter()
            .find(|id| id.id() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scheme `{s}`")))
    }
}

/// Deterministic substep used inside a noise–deterministic–noise splitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitVariant {
    /// Momentum update first, then position.
    SymplecticEuler,
    /// Half kick, drift, half kick.
    StormerVerlet,
    Euler,
    Heun,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Tolerance on `|Δy|∞ / (1 + |y|∞)` between successive iterates.
    pub fp_tolerance: f64,
    pub fp_max_iters: usize,
    /// Gauss–Legendre nodes for the averaged gradient when the model has no
    /// closed-form discrete gradient.
    pub quadrature_nodes: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            fp_tolerance: 1e-12,
            fp_max_iters: 100,
            quadrature_nodes: 3,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if self.fp_tolerance.is_nan() || self.fp_tolerance <= 0.0 {
            return Err(Error::InvalidArgument("fp_tolerance must be positive".into()));
        }
        if self.fp_max_iters == 0 {
            return Err(Error::InvalidArgument("fp_max_iters must be at least 1".into()));
        }
        if !(1..=5).contains(&self.quadrature_nodes) {
            return Err(Error::InvalidArgument("quadrature_nodes must be in 1..=5".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub fp_iterations: usize,
    pub fp_residual: f64,
    pub converged: bool,
}

impl StepDiagnostics {
    fn explicit() -> Self {
        StepDiagnostics {
            fp_iterations: 0,
            fp_residual: 0.0,
            converged: true,
        }
    }
}

// Gauss–Legendre nodes and weights on [-1, 1] for 1..=5 points.
const GL_NODES: [&[f64]; 5] = [
    &[0.0],
    &[-0.577_350_269_189_625_8, 0.577_350_269_189_625_8],
    &[-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4],
    &[
        -0.861_136_311_594_052_6,
        -0.339_981_043_584_856_3,
        0.339_981_043_584_856_3,
        0.861_136_311_594_052_6,
    ],
    &[
        -0.906_179_845_938_664,
        -0.538_469_310_105_683_1,
        0.0,
        0.538_469_310_105_683_1,
        0.906_179_845_938_664,
    ],
];

const GL_WEIGHTS: [&[f64]; 5] = [
    &[2.0],
    &[1.0, 1.0],
    &[
        0.555_555_555_555_555_6,
        0.888_888_888_888_888_8,
        0.555_555_555_555_555_6,
    ],
    &[
        0.347_854_845_137_453_9,
        0.652_145_154_862_546_1,
        0.652_145_154_862_546_1,
        0.347_854_845_137_453_9,
    ],
    &[
        0.236_926_885_056_189_1,
        0.478_628_670_499_366_5,
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
    ],
];

/// Gauss–Legendre rule with `nodes` points mapped to `[0, 1]`, as
/// `(θ, weight)` pairs. Exact for polynomials of degree `2·nodes − 1`.
pub fn gauss_legendre_unit(nodes: usize) -> impl Iterator<Item = (f64, f64)> {
    assert!((1..=5).contains(&nodes), "unsupported quadrature order {nodes}");
    GL_NODES[nodes - 1]
        .iter()
        .zip(GL_WEIGHTS[nodes - 1])
        .map(|(x, w)| (0.5 * (1.0 + x), 0.5 * w))
}

/// `∫₀¹ ∇H(y1 + θ(y2 − y1)) dθ`: the model's closed form when it has one,
/// Gauss–Legendre quadrature otherwise.
pub fn averaged_gradient(model: &SystemModel, y1: &State, y2: &State, settings: &SolverSettings) -> State {
    if let Some(g) = model.discrete_gradient(y1, y2) {
        return g;
    }
    let dy = *y2 - *y1;
    let mut acc = State::zeros(y1.len());
    for (theta, w) in gauss_legendre_unit(settings.quadrature_nodes) {
        acc = acc.axpy(w, &model.grad_h(&y1.axpy(theta, &dy)));
    }
    acc
}

/// Solves `y = base + h·F(y)` by fixed-point iteration from `guess`.
fn fixed_point(
    guess: State,
    settings: &SolverSettings,
    mut map: impl FnMut(&State) -> State,
) -> Result<(State, StepDiagnostics)> {
    let mut y = guess;
    let mut residual = f64::INFINITY;
    for k in 1..=settings.fp_max_iters {
        let next = map(&y);
        residual = (next - y).norm_inf() / (1.0 + next.norm_inf());
        y = next;
        if residual <= settings.fp_tolerance {
            return Ok((
                y,
                StepDiagnostics {
                    fp_iterations: k,
                    fp_residual: residual,
                    converged: true,
                },
            ));
        }
    }
    Err(Error::NonConvergence {
        iterations: settings.fp_max_iters,
        residual,
    })
}

/// Energy-preserving midstep
/// `y2 = y1 + h B((y1 + y2)/2) ∫₀¹ ∇H(y1 + θ(y2 − y1)) dθ`,
/// solved by fixed-point iteration started from an explicit Euler predictor.
///
/// Preserves `H` and every quadratic Casimir up to the solver tolerance.
pub fn ep_midstep(
    model: &SystemModel,
    y1: &State,
    h: f64,
    settings: &SolverSettings,
) -> Result<(State, StepDiagnostics)> {
    let dynamics = model.dynamics();
    let guess = y1.axpy(h, &model.drift(y1));
    fixed_point(guess, settings, |y2| {
        let g = averaged_gradient(model, y1, y2, settings);
        y1.axpy(h, &dynamics.poisson_apply(&y1.midpoint(y2), &g))
    })
}

/// Drift-preserving step: `Y1 = x + Σ ΔW₁`, `Y2` from [`ep_midstep`],
/// `x₊ = Y2 + Σ ΔW₂`.
pub fn dp_step(
    model: &SystemModel,
    x: &State,
    h: f64,
    dw_first_half: &[f64],
    dw_second_half: &[f64],
    settings: &SolverSettings,
) -> Result<(State, StepDiagnostics)> {
    let noise = model.noise();
    let y1 = noise.kick(x, dw_first_half);
    let (y2, diag) = ep_midstep(model, &y1, h, settings)?;
    Ok((noise.kick(&y2, dw_second_half), diag))
}

pub fn em_step(model: &SystemModel, x: &State, h: f64, dw_full: &[f64]) -> State {
    model.noise().kick(&x.axpy(h, &model.drift(x)), dw_full)
}

/// Drift-implicit Euler–Maruyama: `y = x + h B(y)∇H(y) + Σ ΔW`.
pub fn bem_step(
    model: &SystemModel,
    x: &State,
    h: f64,
    dw_full: &[f64],
    settings: &SolverSettings,
) -> Result<(State, StepDiagnostics)> {
    let base = model.noise().kick(x, dw_full);
    let guess = em_step(model, x, h, dw_full);
    fixed_point(guess, settings, |y| base.axpy(h, &model.drift(y)))
}

/// Stochastic trigonometric method for the oscillator: left-endpoint noise
/// kick followed by the exact rotation over `h`.
pub fn stm_step(model: &SystemModel, x: &State, h: f64, dw_full: &[f64]) -> Result<State> {
    SchemeId::Stm.check_model(model)?;
    let y = model.noise().kick(x, dw_full);
    let (s, c) = h.sin_cos();
    Ok(State::from([c * y[0] - s * y[1], s * y[0] + c * y[1]]))
}

/// Noise half-kick, one deterministic step of `variant`, noise half-kick.
pub fn split_det_step(
    model: &SystemModel,
    x: &State,
    h: f64,
    dw_first_half: &[f64],
    dw_second_half: &[f64],
    variant: SplitVariant,
) -> Result<State> {
    let noise = model.noise();
    let y1 = noise.kick(x, dw_first_half);
    let y2 = deterministic_step(model, &y1, h, variant)?;
    Ok(noise.kick(&y2, dw_second_half))
}

fn deterministic_step(model: &SystemModel, x: &State, h: f64, variant: SplitVariant) -> Result<State> {
    match variant {
        SplitVariant::Euler => Ok(x.axpy(h, &model.drift(x))),
        SplitVariant::Heun => {
            let k1 = model.drift(x);
            let k2 = model.drift(&x.axpy(h, &k1));
            Ok(x.axpy(0.5 * h, &(k1 + k2)))
        }
        SplitVariant::SymplecticEuler | SplitVariant::StormerVerlet => {
            let m = model.dynamics().separable_dim().ok_or(Error::UnsupportedScheme {
                scheme: if variant == SplitVariant::StormerVerlet {
                    SchemeId::SplitStormerVerlet.id()
                } else {
                    SchemeId::SplitSymplecticEuler.id()
                },
                model: model.kind().to_string(),
            })?;
            Ok(partitioned_step(model, x, h, m, variant))
        }
    }
}

// x = (p, q), ṗ = −∇_q H, q̇ = ∇_p H.
fn partitioned_step(model: &SystemModel, x: &State, h: f64, m: usize, variant: SplitVariant) -> State {
    let kick = |x: &State, dt: f64| {
        let g = model.grad_h(x);
        let mut out = *x;
        for i in 0..m {
            out[i] -= dt * g[m + i];
        }
        out
    };
    let drift = |x: &State, dt: f64| {
        let g = model.grad_h(x);
        let mut out = *x;
        for i in 0..m {
            out[m + i] += dt * g[i];
        }
        out
    };
    match variant {
        SplitVariant::SymplecticEuler => drift(&kick(x, h), h),
        _ => kick(&drift(&kick(x, 0.5 * h), h), 0.5 * h),
    }
}

/// Advances `x` by one step of `scheme`. Full-step schemes consume
/// `dw_first_half + dw_second_half`.
pub fn step(
    scheme: SchemeId,
    model: &SystemModel,
    x: &State,
    h: f64,
    dw_first_half: &[f64],
    dw_second_half: &[f64],
    settings: &SolverSettings,
) -> Result<(State, StepDiagnostics)> {
    if let Some(variant) = scheme.split_variant() {
        let next = split_det_step(model, x, h, dw_first_half, dw_second_half, variant)?;
        return Ok((next, StepDiagnostics::explicit()));
    }
    if scheme == SchemeId::Dp {
        return dp_step(model, x, h, dw_first_half, dw_second_half, settings);
    }
    let mut full = [0.0; crate::state::MAX_DIM];
    let full = &mut full[..dw_first_half.len()];
    for ((f, a), b) in full.iter_mut().zip(dw_first_half).zip(dw_second_half) {
        *f = a + b;
    }
    match scheme {
        SchemeId::Em => Ok((em_step(model, x, h, full), StepDiagnostics::explicit())),
        SchemeId::Bem => bem_step(model, x, h, full, settings),
        SchemeId::Stm => Ok((stm_step(model, x, h, full)?, StepDiagnostics::explicit())),
        _ => unreachable!("splitting and dp handled above"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_free_particle, make_oscillator, make_pendulum, make_rigid_body_scalar};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: &State, b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn scheme_ids_round_trip() {
        for s in SchemeId::ALL {
            assert_eq!(s.id().parse::<SchemeId>().unwrap(), s);
        }
        assert!("rk4".parse::<SchemeId>().is_err());
    }

    #[test]
    fn settings_validation() {
        assert!(SolverSettings::default().validate().is_ok());
        let bad = SolverSettings {
            quadrature_nodes: 6,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverSettings {
            fp_tolerance: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverSettings {
            fp_max_iters: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn averaged_gradient_closed_forms() {
        let s = SolverSettings::default();
        let osc = make_oscillator(1.0).unwrap();
        let g = averaged_gradient(&osc, &State::from([0.0, 0.0]), &State::from([2.0, 2.0]), &s);
        assert_eq!(g.as_slice(), &[1.0, 1.0]);
        let pend = make_pendulum(1.0).unwrap();
        let g = averaged_gradient(&pend, &State::from([0.0, 0.0]), &State::from([0.0, PI]), &s);
        assert!((g[1] - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn oscillator_midstep_matches_cayley_map() {
        let osc = make_oscillator(1.0).unwrap();
        let (y2, diag) = ep_midstep(&osc, &State::from([0.0, 1.0]), 0.5, &SolverSettings::default()).unwrap();
        assert!(diag.converged);
        assert!(diag.fp_residual <= 1e-12);
        let expected = [-0.5 / 1.0625, 0.9375 / 1.0625];
        assert!(close(&y2, &expected, 1e-11), "{y2:?}");
        assert!((expected[0] + 0.470_588_2).abs() < 1e-7);
        assert!((expected[1] - 0.882_352_9).abs() < 1e-7);
    }

    #[test]
    fn midstep_fixes_equilibrium() {
        let osc = make_oscillator(1.0).unwrap();
        let origin = State::from([0.0, 0.0]);
        let (y2, _) = ep_midstep(&osc, &origin, 0.3, &SolverSettings::default()).unwrap();
        assert_eq!(y2, origin);
    }

    #[test]
    fn free_particle_midstep_and_dp() {
        let free = make_free_particle(1.0).unwrap();
        let s = SolverSettings::default();
        let (y2, _) = ep_midstep(&free, &State::from([1.0, 0.0]), 1.0, &s).unwrap();
        assert!(close(&y2, &[1.0, 1.0], 1e-12));
        let (x1, _) = dp_step(&free, &State::from([1.0, 0.0]), 1.0, &[0.3], &[-0.1], &s).unwrap();
        assert!(close(&x1, &[1.2, 1.3], 1e-12), "{x1:?}");
    }

    #[test]
    fn dp_without_noise_is_midstep() {
        let s = SolverSettings::default();
        let osc = make_oscillator(1.0).unwrap();
        let x = State::from([0.0, 1.0]);
        let (a, _) = dp_step(&osc, &x, 0.5, &[0.0], &[0.0], &s).unwrap();
        let (b, _) = ep_midstep(&osc, &x, 0.5, &s).unwrap();
        assert_eq!(a, b);
        assert!(close(&a, &[-0.470_588_235_294_117_6, 0.882_352_941_176_470_6], 1e-11));
    }

    #[test]
    fn non_convergence_reported() {
        let osc = make_oscillator(1.0).unwrap();
        let s = SolverSettings::default();
        // contraction factor h/2 > 1
        let err = ep_midstep(&osc, &State::from([0.0, 1.0]), 5.0, &s).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { iterations: 100, .. }));
        let err = bem_step(&osc, &State::from([0.0, 1.0]), 3.0, &[0.0], &s).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }

    #[test]
    fn em_examples() {
        let osc = make_oscillator(1.0).unwrap();
        let x = State::from([0.0, 1.0]);
        assert!(close(&em_step(&osc, &x, 0.1, &[0.0]), &[-0.1, 1.0], 1e-15));
        assert_eq!(em_step(&osc, &x, 0.0, &[0.0]), x);
        let kicked = em_step(&osc, &State::from([0.0, 0.0]), 0.7, &[0.5]);
        assert_eq!(kicked.as_slice(), &[0.5, 0.0]);
    }

    #[test]
    fn bem_examples() {
        let osc = make_oscillator(1.0).unwrap();
        let s = SolverSettings::default();
        let x = State::from([0.0, 1.0]);
        let (y, _) = bem_step(&osc, &x, 0.5, &[0.0], &s).unwrap();
        assert!(close(&y, &[-0.4, 0.8], 1e-11), "{y:?}");
        let (y, _) = bem_step(&osc, &x, 0.0, &[0.0], &s).unwrap();
        assert_eq!(y, x);
        let origin = State::from([0.0, 0.0]);
        assert_eq!(bem_step(&osc, &origin, 0.2, &[0.0], &s).unwrap().0, origin);
    }

    #[test]
    fn stm_examples() {
        let osc = make_oscillator(1.0).unwrap();
        let x = State::from([0.0, 1.0]);
        let y = stm_step(&osc, &x, FRAC_PI_2, &[0.0]).unwrap();
        assert!(close(&y, &[-1.0, 0.0], 1e-15));
        assert_eq!(stm_step(&osc, &x, 0.0, &[0.0]).unwrap(), x);
        let pend = make_pendulum(1.0).unwrap();
        assert!(stm_step(&pend, &x, 0.1, &[0.0]).is_err());
    }

    #[test]
    fn stm_energy_increment_in_expectation() {
        // E over dw = ±√h (equal weights) reproduces E[dw] = 0, E[dw²] = h.
        let sigma = 0.7;
        let osc = make_oscillator(sigma).unwrap();
        let (x, h) = (State::from([0.4, -1.1]), 0.3_f64);
        let mean: f64 = [h.sqrt(), -h.sqrt()]
            .iter()
            .map(|dw| osc.hamiltonian(&stm_step(&osc, &x, h, &[*dw]).unwrap()))
            .sum::<f64>()
            / 2.0;
        assert!((mean - osc.hamiltonian(&x) - 0.5 * sigma * sigma * h).abs() < 1e-14);
    }

    #[test]
    fn splitting_examples() {
        let osc = make_oscillator(1.0).unwrap();
        let x = State::from([0.0, 1.0]);
        let y = split_det_step(&osc, &x, 0.5, &[0.0], &[0.0], SplitVariant::StormerVerlet).unwrap();
        assert!(close(&y, &[-0.468_75, 0.875], 1e-15));
        let y = split_det_step(&osc, &x, 0.5, &[0.0], &[0.0], SplitVariant::SymplecticEuler).unwrap();
        assert!(close(&y, &[-0.5, 0.75], 1e-15));
        let y = split_det_step(&osc, &x, 0.1, &[0.0], &[0.0], SplitVariant::Euler).unwrap();
        assert_eq!(y, em_step(&osc, &x, 0.1, &[0.0]));
        let y = split_det_step(&osc, &x, 0.5, &[0.0], &[0.0], SplitVariant::Heun).unwrap();
        // k1 = (−1, 0), k2 = f(−0.5, 1) = (−1, −0.5)
        assert!(close(&y, &[-0.5, 0.875], 1e-15));
        for v in [
            SplitVariant::SymplecticEuler,
            SplitVariant::StormerVerlet,
            SplitVariant::Euler,
            SplitVariant::Heun,
        ] {
            assert_eq!(split_det_step(&osc, &x, 0.0, &[0.0], &[0.0], v).unwrap(), x);
        }
    }

    #[test]
    fn symplectic_splitting_needs_separable_model() {
        let rb = make_rigid_body_scalar(0.25).unwrap();
        let x = rb.initial_value();
        assert!(split_det_step(&rb, &x, 0.1, &[0.0], &[0.0], SplitVariant::StormerVerlet).is_err());
        assert!(split_det_step(&rb, &x, 0.1, &[0.0], &[0.0], SplitVariant::Heun).is_ok());
        assert!(SchemeId::SplitSymplecticEuler.check_model(&rb).is_err());
        assert!(SchemeId::Stm.check_model(&rb).is_err());
        assert!(SchemeId::Dp.check_model(&rb).is_ok());
    }

    #[test]
    fn step_dispatch_sums_half_increments() {
        let osc = make_oscillator(1.0).unwrap();
        let s = SolverSettings::default();
        let x = State::from([0.2, 0.9]);
        let (a, _) = step(SchemeId::Em, &osc, &x, 0.1, &[0.3], &[-0.05], &s).unwrap();
        assert_eq!(a, em_step(&osc, &x, 0.1, &[0.3 + -0.05]));
        let (b, _) = step(SchemeId::Dp, &osc, &x, 0.1, &[0.3], &[-0.05], &s).unwrap();
        assert_eq!(b, dp_step(&osc, &x, 0.1, &[0.3], &[-0.05], &s).unwrap().0);
    }
}
