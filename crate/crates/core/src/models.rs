//! Stochastic Poisson systems with additive noise,
//!
//! ```text
//! dX = B(X) ∇H(X) dt + Σ dW,
//! ```
//!
//! with a skew-symmetric structure matrix `B`, a Hamiltonian `H` and a constant
//! diffusion matrix `Σ` acting on the whole state. Three built-in problems are
//! provided: the linear oscillator, the mathematical pendulum and the free
//! rigid body.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::state::{State, MAX_DIM};

/// Deterministic part of a Poisson system: the structure matrix `B(X)` and
/// the Hamiltonian `H`.
pub trait Hamiltonian: Send + Sync {
    fn dim(&self) -> usize;

    fn energy(&self, x: &State) -> f64;

    fn gradient(&self, x: &State) -> State;

    /// `B(x) v`.
    fn poisson_apply(&self, x: &State, v: &State) -> State;

    /// Dense `B(x)`, assembled column by column from [`Hamiltonian::poisson_apply`].
    fn poisson_matrix(&self, x: &State) -> DMatrix<f64> {
        let n = self.dim();
        let mut b = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = State::zeros(n);
            e[j] = 1.0;
            let col = self.poisson_apply(x, &e);
            for i in 0..n {
                b[(i, j)] = col[i];
            }
        }
        b
    }

    /// Closed form of `∫₀¹ ∇H(y1 + θ(y2 − y1)) dθ`, when one is known.
    fn discrete_gradient(&self, _y1: &State, _y2: &State) -> Option<State> {
        None
    }

    /// Analytic Hessian of `H`, when one is known.
    fn hessian(&self, _x: &State) -> Option<DMatrix<f64>> {
        None
    }

    /// For separable Hamiltonians `H = ½|p|² + V(q)` on the canonical
    /// structure `B = J`, the size `m` of the momentum block (`x = (p, q)`).
    fn separable_dim(&self) -> Option<usize> {
        None
    }
}

/// `J v` for the canonical structure `J = [[0, −I], [I, 0]]` on `x = (p, q)`.
fn canonical_apply(v: &State) -> State {
    let m = v.len() / 2;
    let mut out = State::zeros(v.len());
    for i in 0..m {
        out[i] = -v[m + i];
        out[m + i] = v[i];
    }
    out
}

#[derive(Debug, Clone, Copy)]
struct Oscillator;

impl Hamiltonian for Oscillator {
    fn dim(&self) -> usize {
        2
    }

    fn energy(&self, x: &State) -> f64 {
        0.5 * (x[0] * x[0] + x[1] * x[1])
    }

    fn gradient(&self, x: &State) -> State {
        *x
    }

    fn poisson_apply(&self, _x: &State, v: &State) -> State {
        canonical_apply(v)
    }

    fn discrete_gradient(&self, y1: &State, y2: &State) -> Option<State> {
        Some(y1.midpoint(y2))
    }

    fn hessian(&self, _x: &State) -> Option<DMatrix<f64>> {
        Some(DMatrix::identity(2, 2))
    }

    fn separable_dim(&self) -> Option<usize> {
        Some(1)
    }
}

/// Below this separation the pendulum discrete gradient switches to the
/// midpoint sine, which agrees with the divided difference to O(Δq²).
const PENDULUM_COINCIDENT: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
struct Pendulum;

impl Hamiltonian for Pendulum {
    fn dim(&self) -> usize {
        2
    }

    fn energy(&self, x: &State) -> f64 {
        0.5 * x[0] * x[0] - x[1].cos()
    }

    fn gradient(&self, x: &State) -> State {
        State::from([x[0], x[1].sin()])
    }

    fn poisson_apply(&self, _x: &State, v: &State) -> State {
        canonical_apply(v)
    }

    fn discrete_gradient(&self, y1: &State, y2: &State) -> Option<State> {
        let (q1, q2) = (y1[1], y2[1]);
        let dq = q2 - q1;
        let gq = if dq.abs() <= PENDULUM_COINCIDENT {
            (0.5 * (q1 + q2)).sin()
        } else {
            (q1.cos() - q2.cos()) / dq
        };
        Some(State::from([0.5 * (y1[0] + y2[0]), gq]))
    }

    fn hessian(&self, x: &State) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, x[1].cos()]))
    }

    fn separable_dim(&self) -> Option<usize> {
        Some(1)
    }
}

#[derive(Debug, Clone, Copy)]
struct FreeParticle;

impl Hamiltonian for FreeParticle {
    fn dim(&self) -> usize {
        2
    }

    fn energy(&self, x: &State) -> f64 {
        0.5 * x[0] * x[0]
    }

    fn gradient(&self, x: &State) -> State {
        State::from([x[0], 0.0])
    }

    fn poisson_apply(&self, _x: &State, v: &State) -> State {
        canonical_apply(v)
    }

    fn discrete_gradient(&self, y1: &State, y2: &State) -> Option<State> {
        Some(State::from([0.5 * (y1[0] + y2[0]), 0.0]))
    }

    fn hessian(&self, _x: &State) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]))
    }

    fn separable_dim(&self) -> Option<usize> {
        Some(1)
    }
}

/// Principal moments of inertia of the built-in rigid body.
pub const RIGID_BODY_INERTIA: [f64; 3] = [0.345, 0.653, 1.0];

#[derive(Debug, Clone, Copy)]
struct RigidBody {
    inertia: [f64; 3],
}

impl Hamiltonian for RigidBody {
    fn dim(&self) -> usize {
        3
    }

    fn energy(&self, x: &State) -> f64 {
        0.5 * (0..3).map(|i| x[i] * x[i] / self.inertia[i]).sum::<f64>()
    }

    fn gradient(&self, x: &State) -> State {
        State::from([x[0] / self.inertia[0], x[1] / self.inertia[1], x[2] / self.inertia[2]])
    }

    // B(x) v = x × v
    fn poisson_apply(&self, x: &State, v: &State) -> State {
        State::from([
            x[1] * v[2] - x[2] * v[1],
            x[2] * v[0] - x[0] * v[2],
            x[0] * v[1] - x[1] * v[0],
        ])
    }

    fn discrete_gradient(&self, y1: &State, y2: &State) -> Option<State> {
        Some(self.gradient(&y1.midpoint(y2)))
    }

    fn hessian(&self, _x: &State) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            3,
            self.inertia.iter().map(|i| 1.0 / i),
        )))
    }
}

/// Constant additive noise `Σ dW` on the full state.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    sigma_full: DMatrix<f64>,
    noise_block_hessian: DMatrix<f64>,
}

impl NoiseModel {
    /// `noise_block_hessian` must equal `Σᵀ ∇²H Σ` and be independent of the
    /// state; use [`SystemModel::noise_hessian_defect`] to audit the claim.
    pub fn new(sigma_full: DMatrix<f64>, noise_block_hessian: DMatrix<f64>) -> Result<Self> {
        let d = sigma_full.ncols();
        if d == 0 {
            return Err(Error::InvalidModel("noise needs at least one Wiener component".into()));
        }
        if noise_block_hessian.shape() != (d, d) {
            return Err(Error::InvalidModel(format!(
                "noise block Hessian is {:?}, expected {d}x{d}",
                noise_block_hessian.shape()
            )));
        }
        if sigma_full
            .iter()
            .chain(noise_block_hessian.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidModel("noise matrices must be finite".into()));
        }
        Ok(NoiseModel {
            sigma_full,
            noise_block_hessian,
        })
    }

    pub fn sigma_full(&self) -> &DMatrix<f64> {
        &self.sigma_full
    }

    pub fn wiener_dim(&self) -> usize {
        self.sigma_full.ncols()
    }

    pub fn noise_block_hessian(&self) -> &DMatrix<f64> {
        &self.noise_block_hessian
    }

    /// `x + Σ dw`.
    pub fn kick(&self, x: &State, dw: &[f64]) -> State {
        debug_assert_eq!(dw.len(), self.wiener_dim());
        let mut out = *x;
        for (j, w) in dw.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.sigma_full[(i, j)] * w;
            }
        }
        out
    }

    /// Energy drift rate `½ Tr(Σᵀ ∇²H Σ)`.
    pub fn energy_drift_rate(&self) -> f64 {
        0.5 * self.noise_block_hessian.trace()
    }
}

/// Quadratic Casimir `C(X) = ½ XᵀAX`.
#[derive(Debug, Clone, PartialEq)]
pub struct CasimirForm {
    a_matrix: DMatrix<f64>,
}

impl CasimirForm {
    pub fn new(a_matrix: DMatrix<f64>) -> Result<Self> {
        if !a_matrix.is_square() || a_matrix != a_matrix.transpose() {
            return Err(Error::InvalidModel(
                "Casimir matrix must be square and symmetric".into(),
            ));
        }
        Ok(CasimirForm { a_matrix })
    }

    pub fn a_matrix(&self) -> &DMatrix<f64> {
        &self.a_matrix
    }

    pub fn value(&self, x: &State) -> f64 {
        0.5 * x.dot(&self.gradient(x))
    }

    pub fn gradient(&self, x: &State) -> State {
        let n = x.len();
        let mut out = State::zeros(n);
        for i in 0..n {
            out[i] = (0..n).map(|j| self.a_matrix[(i, j)] * x[j]).sum();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Oscillator,
    Pendulum,
    RigidBody,
    FreeParticle,
    Custom,
}

impl ModelKind {
    pub fn id(self) -> &'static str {
        match self {
            ModelKind::Oscillator => "oscillator",
            ModelKind::Pendulum => "pendulum",
            ModelKind::RigidBody => "rigid_body",
            ModelKind::FreeParticle => "free_particle",
            ModelKind::Custom => "custom",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// One SDE instance. Immutable and cheap to clone; safe to share between
/// Monte Carlo workers.
#[derive(Clone)]
pub struct SystemModel {
    kind: ModelKind,
    dynamics: Arc<dyn Hamiltonian>,
    noise: NoiseModel,
    casimir: Option<CasimirForm>,
    initial_value: State,
}

impl fmt::Debug for SystemModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemModel")
            .field("kind", &self.kind)
            .field("dim", &self.dim())
            .field("noise", &self.noise)
            .field("casimir", &self.casimir)
            .field("initial_value", &self.initial_value)
            .finish()
    }
}

impl SystemModel {
    pub fn new(
        kind: ModelKind,
        dynamics: Arc<dyn Hamiltonian>,
        noise: NoiseModel,
        casimir: Option<CasimirForm>,
        initial_value: State,
    ) -> Result<Self> {
        let n = dynamics.dim();
        if n == 0 || n > MAX_DIM {
            return Err(Error::InvalidModel(format!("state dimension {n} not in 1..={MAX_DIM}")));
        }
        if noise.sigma_full.nrows() != n {
            return Err(Error::InvalidModel(format!(
                "noise matrix has {} rows, state dimension is {n}",
                noise.sigma_full.nrows()
            )));
        }
        if let Some(c) = &casimir {
            if c.a_matrix.nrows() != n {
                return Err(Error::InvalidModel(
                    "Casimir matrix does not match state dimension".into(),
                ));
            }
        }
        if initial_value.len() != n {
            return Err(Error::InvalidModel(format!(
                "initial value has {} components, expected {n}",
                initial_value.len()
            )));
        }
        Ok(SystemModel {
            kind,
            dynamics,
            noise,
            casimir,
            initial_value,
        })
    }

    pub fn with_initial_value(mut self, x0: State) -> Result<Self> {
        if x0.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                key: "initial_value".into(),
                detail: format!("{} components, model dimension is {}", x0.len(), self.dim()),
            });
        }
        self.initial_value = x0;
        Ok(self)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dynamics.dim()
    }

    pub fn dynamics(&self) -> &dyn Hamiltonian {
        self.dynamics.as_ref()
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn casimir(&self) -> Option<&CasimirForm> {
        self.casimir.as_ref()
    }

    pub fn initial_value(&self) -> State {
        self.initial_value
    }

    pub fn wiener_dim(&self) -> usize {
        self.noise.wiener_dim()
    }

    pub fn hamiltonian(&self, x: &State) -> f64 {
        self.dynamics.energy(x)
    }

    pub fn grad_h(&self, x: &State) -> State {
        self.dynamics.gradient(x)
    }

    pub fn poisson(&self, x: &State) -> DMatrix<f64> {
        self.dynamics.poisson_matrix(x)
    }

    pub fn discrete_gradient(&self, y1: &State, y2: &State) -> Option<State> {
        self.dynamics.discrete_gradient(y1, y2)
    }

    /// Deterministic vector field `B(x) ∇H(x)`.
    pub fn drift(&self, x: &State) -> State {
        self.dynamics.poisson_apply(x, &self.dynamics.gradient(x))
    }

    /// Max-abs deviation of `Σᵀ ∇²H(x) Σ` from the declared noise block
    /// Hessian. The analytic Hessian is used when available, otherwise a
    /// central finite difference of the gradient with step `fd_step`.
    pub fn noise_hessian_defect(&self, x: &State, fd_step: f64) -> f64 {
        let hess = self
            .dynamics
            .hessian(x)
            .unwrap_or_else(|| finite_difference_hessian(self.dynamics.as_ref(), x, fd_step));
        let sigma = &self.noise.sigma_full;
        let block = sigma.transpose() * hess * sigma;
        (block - &self.noise.noise_block_hessian).amax()
    }

    /// `(E[X(t)], (E[X_i(t)²])_i)` for the linear oscillator.
    pub fn exact_moments(&self, x0: &State, t: f64) -> Result<(State, State)> {
        exact_oscillator_moments(self, x0, t)
    }
}

/// Central finite-difference Hessian of `H`, symmetrised.
pub fn finite_difference_hessian(dynamics: &dyn Hamiltonian, x: &State, step: f64) -> DMatrix<f64> {
    let n = dynamics.dim();
    let mut hess = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut plus = *x;
        let mut minus = *x;
        plus[j] += step;
        minus[j] -= step;
        let gp = dynamics.gradient(&plus);
        let gm = dynamics.gradient(&minus);
        for i in 0..n {
            hess[(i, j)] = (gp[i] - gm[i]) / (2.0 * step);
        }
    }
    0.5 * (&hess + hess.transpose())
}

fn scalar_sigma(sigma_scale: f64) -> Result<DMatrix<f64>> {
    if !sigma_scale.is_finite() {
        return Err(Error::InvalidModel(format!("sigma must be finite, got {sigma_scale}")));
    }
    Ok(DMatrix::from_column_slice(2, 1, &[sigma_scale, 0.0]))
}

/// Separable models: `∇²ₚₚH = I`, so the noise block Hessian is `ΣᵀΣ` for
/// noise confined to the momentum block.
fn separable_noise(sigma_full: DMatrix<f64>) -> Result<NoiseModel> {
    let nbh = sigma_full.transpose() * &sigma_full;
    NoiseModel::new(sigma_full, nbh)
}

/// Linear oscillator `H = ½p² + ½q²`, `B = J`, noise on `p`, `X₀ = (0, 1)`.
pub fn make_oscillator(sigma_scale: f64) -> Result<SystemModel> {
    oscillator_with_sigma(scalar_sigma(sigma_scale)?)
}

/// Linear oscillator with an arbitrary constant `2×d` noise matrix. For the
/// quadratic `H` the Hessian is the identity so any sparsity pattern keeps
/// the trace formula exact.
pub fn oscillator_with_sigma(sigma_full: DMatrix<f64>) -> Result<SystemModel> {
    check_rows(&sigma_full, 2)?;
    SystemModel::new(
        ModelKind::Oscillator,
        Arc::new(Oscillator),
        separable_noise(sigma_full)?,
        None,
        State::from([0.0, 1.0]),
    )
}

/// Mathematical pendulum `H = ½p² − cos q`, `B = J`, `X₀ = (1, √2)`.
pub fn make_pendulum(sigma_scale: f64) -> Result<SystemModel> {
    pendulum_with_sigma(scalar_sigma(sigma_scale)?)
}

/// Pendulum with a `2×d` noise matrix. The `q` row must vanish: `∇²_qq H`
/// depends on the state, so noise on `q` would break the trace formula.
pub fn pendulum_with_sigma(sigma_full: DMatrix<f64>) -> Result<SystemModel> {
    check_rows(&sigma_full, 2)?;
    if sigma_full.row(1).iter().any(|v| *v != 0.0) {
        return Err(Error::InvalidModel(
            "pendulum noise must act on the momentum only".into(),
        ));
    }
    SystemModel::new(
        ModelKind::Pendulum,
        Arc::new(Pendulum),
        separable_noise(sigma_full)?,
        None,
        State::from([1.0, 2f64.sqrt()]),
    )
}

/// Free particle `H = ½p²` on `B = J`; a closed-form test problem.
pub fn make_free_particle(sigma_scale: f64) -> Result<SystemModel> {
    SystemModel::new(
        ModelKind::FreeParticle,
        Arc::new(FreeParticle),
        separable_noise(scalar_sigma(sigma_scale)?)?,
        None,
        State::from([1.0, 0.0]),
    )
}

/// Free rigid body with `I = (0.345, 0.653, 1)`, Casimir `½|X|²` and
/// `X₀ = (0.8, 0.6, 0)`. `sigma` is the `3×d` noise matrix, `d ≤ 3`.
pub fn make_rigid_body(sigma: DMatrix<f64>) -> Result<SystemModel> {
    check_rows(&sigma, 3)?;
    if sigma.ncols() > 3 {
        return Err(Error::InvalidModel(format!(
            "rigid body noise has {} columns, at most 3 allowed",
            sigma.ncols()
        )));
    }
    let body = RigidBody {
        inertia: RIGID_BODY_INERTIA,
    };
    let hess = body.hessian(&State::zeros(3)).expect("quadratic Hamiltonian");
    let nbh = sigma.transpose() * hess * &sigma;
    SystemModel::new(
        ModelKind::RigidBody,
        Arc::new(body),
        NoiseModel::new(sigma, nbh)?,
        Some(CasimirForm::new(DMatrix::identity(3, 3))?),
        State::from([0.8, 0.6, 0.0]),
    )
}

/// Rigid body driven by scalar noise of size `sigma_scale` on `X₁`.
pub fn make_rigid_body_scalar(sigma_scale: f64) -> Result<SystemModel> {
    if !sigma_scale.is_finite() {
        return Err(Error::InvalidModel(format!("sigma must be finite, got {sigma_scale}")));
    }
    make_rigid_body(DMatrix::from_column_slice(3, 1, &[sigma_scale, 0.0, 0.0]))
}

fn check_rows(sigma: &DMatrix<f64>, rows: usize) -> Result<()> {
    if sigma.nrows() != rows {
        return Err(Error::DimensionMismatch {
            key: "sigma".into(),
            detail: format!("{} rows, model dimension is {rows}", sigma.nrows()),
        });
    }
    Ok(())
}

/// Built-in model by id with its default noise (`Σ = 1` for the oscillator
/// and pendulum, `Σ = 0.25` on `X₁` for the rigid body).
pub fn model_by_id(id: &str) -> Result<SystemModel> {
    match id {
        "oscillator" => make_oscillator(1.0),
        "pendulum" => make_pendulum(1.0),
        "rigid_body" => make_rigid_body_scalar(0.25),
        _ => Err(Error::InvalidModel(format!("unknown model `{id}`"))),
    }
}

/// Built-in model by id with an explicit `n×d` noise matrix.
pub fn model_with_sigma(id: &str, sigma: DMatrix<f64>) -> Result<SystemModel> {
    match id {
        "oscillator" => oscillator_with_sigma(sigma),
        "pendulum" => pendulum_with_sigma(sigma),
        "rigid_body" => make_rigid_body(sigma),
        _ => Err(Error::InvalidModel(format!("unknown model `{id}`"))),
    }
}

/// Exact first and second moments of the linear oscillator
/// `dp = −q dt + Σ_p dW`, `dq = p dt + Σ_q dW`.
///
/// The solution is `R(t)x₀ + ∫₀ᵗ R(t−s) Σ dW(s)` with `R` the rotation
/// `(p, q) ↦ (p cos t − q sin t, p sin t + q cos t)`; the covariance follows
/// from the Itô isometry.
pub fn exact_oscillator_moments(model: &SystemModel, x0: &State, t: f64) -> Result<(State, State)> {
    if model.kind() != ModelKind::Oscillator {
        return Err(Error::InvalidModel(format!(
            "exact moments are only available for the oscillator, not `{}`",
            model.kind()
        )));
    }
    let (s, c) = t.sin_cos();
    let mean = State::from([x0[0] * c - x0[1] * s, x0[0] * s + x0[1] * c]);
    // ∫₀ᵗ cos², ∫₀ᵗ sin², ∫₀ᵗ sin·cos
    let int_cc = 0.5 * t + 0.25 * (2.0 * t).sin();
    let int_ss = 0.5 * t - 0.25 * (2.0 * t).sin();
    let int_sc = 0.5 * s * s;
    let sigma = model.noise().sigma_full();
    let (mut var_p, mut var_q) = (0.0, 0.0);
    for j in 0..sigma.ncols() {
        let (a, b) = (sigma[(0, j)], sigma[(1, j)]);
        // R(τ)(a, b) = (a cos τ − b sin τ, a sin τ + b cos τ)
        var_p += a * a * int_cc + b * b * int_ss - 2.0 * a * b * int_sc;
        var_q += a * a * int_ss + b * b * int_cc + 2.0 * a * b * int_sc;
    }
    let second = State::from([mean[0] * mean[0] + var_p, mean[1] * mean[1] + var_q]);
    Ok((mean, second))
}

/// `E[H(X(t))] = E[H(X₀)] + ½ Tr(Σᵀ ∇²H Σ) t`.
pub fn predicted_energy(model: &SystemModel, h0: f64, t: f64) -> f64 {
    h0 + model.noise().energy_drift_rate() * t
}

/// Drift rate `½ Tr(ΣᵀAΣ)` of a quadratic Casimir.
pub fn casimir_drift_rate(model: &SystemModel) -> Result<f64> {
    let casimir = model
        .casimir()
        .ok_or_else(|| Error::InvalidModel(format!("model `{}` has no Casimir", model.kind())))?;
    let sigma = model.noise().sigma_full();
    Ok(0.5 * (sigma.transpose() * casimir.a_matrix() * sigma).trace())
}

/// `E[C(X(t))] = E[C(X₀)] + ½ Tr(ΣᵀAΣ) t`.
pub fn predicted_casimir(model: &SystemModel, c0: f64, t: f64) -> Result<f64> {
    Ok(c0 + casimir_drift_rate(model)? * t)
}
