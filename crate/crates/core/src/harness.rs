//! Monte Carlo experiments: expected energy/Casimir along time, strong and
//! weak convergence studies, and log-log slope fits.
//!
//! Samples are independent work units evaluated on a rayon pool. Results are
//! reduced in fixed-size chunks of consecutive sample indices and the chunk
//! statistics are merged along a fixed binary tree, so reports are bitwise
//! identical for any number of workers.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrators::{step, SchemeId, SolverSettings};
use crate::models::{predicted_casimir, predicted_energy, SystemModel};
use crate::state::State;
use crate::stochastic::{derive_seed, sample_path, BrownianPath};

/// Samples per reduction chunk.
const CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Energy,
    Casimir,
}

impl Observable {
    pub fn id(self) -> &'static str {
        match self {
            Observable::Energy => "energy",
            Observable::Casimir => "casimir",
        }
    }

    fn evaluate(self, model: &SystemModel, x: &State) -> f64 {
        match self {
            Observable::Energy => model.hamiltonian(x),
            Observable::Casimir => model.casimir().map_or(f64::NAN, |c| c.value(x)),
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "energy" => Ok(Observable::Energy),
            "casimir" => Ok(Observable::Casimir),
            _ => Err(Error::InvalidArgument(format!("unknown observable `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceReport {
    pub time_grid: Vec<f64>,
    pub observable: Observable,
    pub sample_mean: Vec<f64>,
    pub std_error: Vec<f64>,
    pub predicted: Vec<f64>,
    pub scheme: SchemeId,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceMode {
    Strong,
    WeakM1,
    WeakM2,
}

impl ConvergenceMode {
    pub fn id(self) -> &'static str {
        match self {
            ConvergenceMode::Strong => "strong",
            ConvergenceMode::WeakM1 => "weak_m1",
            ConvergenceMode::WeakM2 => "weak_m2",
        }
    }
}

impl fmt::Display for ConvergenceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub step_sizes: Vec<f64>,
    /// Root-mean-square error (strong) or the largest per-component moment
    /// error (weak) at the final time.
    pub errors: Vec<f64>,
    /// Weak studies: per step size, the error of each state component.
    pub component_errors: Vec<Vec<f64>>,
    pub fitted_slope: f64,
    pub mode: ConvergenceMode,
    pub scheme: SchemeId,
    pub samples: usize,
    pub reference: String,
}

impl ConvergenceReport {
    /// Slope of the error of state component `i` (weak studies).
    pub fn component_slope(&self, i: usize) -> Result<f64> {
        let errs: Vec<f64> = self.component_errors.iter().map(|e| e[i]).collect();
        fit_slope(&self.step_sizes, &errs)
    }
}

/// Where weak-error references come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeakReference {
    /// Closed-form moments (oscillator).
    Exact,
    /// Monte Carlo moments of `scheme` at step `h_ref`, on independent paths.
    Surrogate { scheme: SchemeId, h_ref: f64 },
}

/// Sample count, mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn merge(a: Moments, b: Moments) -> Moments {
        let n = a.n + b.n;
        let delta = b.mean - a.mean;
        Moments {
            n,
            mean: a.mean + delta * (b.n / n),
            m2: a.m2 + b.m2 + delta * delta * (a.n * b.n / n),
        }
    }

    fn std_error(&self) -> f64 {
        if self.n < 2.0 {
            0.0
        } else {
            (self.m2 / (self.n - 1.0) / self.n).sqrt()
        }
    }
}

/// Fixed-order pairwise sum.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        n if n <= 8 => values.iter().fold(0.0, |a, v| a + v),
        n => {
            let (l, r) = values.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

fn merge_tree(parts: &[Moments]) -> Moments {
    match parts.len() {
        1 => parts[0],
        n => {
            let (l, r) = parts.split_at(n / 2);
            Moments::merge(merge_tree(l), merge_tree(r))
        }
    }
}

fn chunk_moments(values: &[f64], rows: usize, width: usize, column: usize) -> Moments {
    let col: Vec<f64> = (0..rows).map(|r| values[r * width + column]).collect();
    // Shifting by the first value keeps identical samples exact.
    let shift = col[0];
    let shifted: Vec<f64> = col.iter().map(|v| v - shift).collect();
    let mean = shift + pairwise_sum(&shifted) / rows as f64;
    let dev: Vec<f64> = col.iter().map(|v| (v - mean) * (v - mean)).collect();
    Moments {
        n: rows as f64,
        mean,
        m2: pairwise_sum(&dev),
    }
}

/// Experiment runner: solver policy plus worker count.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Harness {
    pub settings: SolverSettings,
    /// Worker threads; 0 lets rayon decide.
    pub workers: usize,
}

impl Harness {
    pub fn new(settings: SolverSettings, workers: usize) -> Self {
        Harness { settings, workers }
    }

    /// Evaluates `width` quantities per sample with `eval(sample, out)` and
    /// returns their per-quantity statistics.
    fn monte_carlo<F>(&self, samples: usize, width: usize, eval: F) -> Result<Vec<Moments>>
    where
        F: Fn(usize, &mut [f64]) -> Result<()> + Sync,
    {
        if samples == 0 {
            return Err(Error::InvalidArgument("need at least one sample".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
        let n_chunks = samples.div_ceil(CHUNK);
        let chunks: Vec<Vec<Moments>> = pool.install(|| {
            (0..n_chunks)
                .into_par_iter()
                .map(|c| {
                    let start = c * CHUNK;
                    let rows = CHUNK.min(samples - start);
                    let mut values = vec![0.0; rows * width];
                    for (r, out) in values.chunks_exact_mut(width).enumerate() {
                        eval(start + r, out)?;
                    }
                    Ok((0..width).map(|j| chunk_moments(&values, rows, width, j)).collect())
                })
                .collect::<Result<_>>()
        })?;
        Ok((0..width)
            .map(|j| {
                let parts: Vec<Moments> = chunks.iter().map(|c| c[j]).collect();
                merge_tree(&parts)
            })
            .collect())
    }

    /// Expected energy (or Casimir) along `[0, t_end]` from `samples`
    /// trajectories started at the model's initial value.
    #[allow(clippy::too_many_arguments)]
    pub fn run_trace(
        &self,
        model: &SystemModel,
        scheme: SchemeId,
        h: f64,
        t_end: f64,
        samples: usize,
        seed: u64,
        observable: Observable,
    ) -> Result<TraceReport> {
        self.settings.validate()?;
        scheme.check_model(model)?;
        if observable == Observable::Casimir && model.casimir().is_none() {
            return Err(Error::InvalidModel(format!("model `{}` has no Casimir", model.kind())));
        }
        let n_steps = steps_in(t_end, h)?;
        let x0 = model.initial_value();
        let d = model.wiener_dim();

        let stats = self.monte_carlo(samples, n_steps + 1, |sample, out| {
            let path = sample_path(seed, sample as u64, d, 0.5 * h, 2 * n_steps)?;
            let mut x = x0;
            out[0] = observable.evaluate(model, &x);
            for n in 0..n_steps {
                x = self.advance(scheme, model, &x, h, &path, n, sample)?;
                out[n + 1] = observable.evaluate(model, &x);
            }
            Ok(())
        })?;

        let time_grid: Vec<f64> = (0..=n_steps).map(|n| n as f64 * h).collect();
        let start = observable.evaluate(model, &x0);
        let predicted = time_grid
            .iter()
            .map(|&t| match observable {
                Observable::Energy => Ok(predicted_energy(model, start, t)),
                Observable::Casimir => predicted_casimir(model, start, t),
            })
            .collect::<Result<_>>()?;
        Ok(TraceReport {
            time_grid,
            observable,
            sample_mean: stats.iter().map(|m| m.mean).collect(),
            std_error: stats.iter().map(Moments::std_error).collect(),
            predicted,
            scheme,
            samples,
        })
    }

    /// Mean-square error at `t_end` against `reference_scheme` at `h_ref`,
    /// both driven by the same fine Brownian path per sample.
    #[allow(clippy::too_many_arguments)]
    pub fn run_strong(
        &self,
        model: &SystemModel,
        scheme: SchemeId,
        h_list: &[f64],
        h_ref: f64,
        t_end: f64,
        samples: usize,
        seed: u64,
        reference_scheme: SchemeId,
    ) -> Result<ConvergenceReport> {
        self.settings.validate()?;
        scheme.check_model(model)?;
        reference_scheme.check_model(model)?;
        check_decreasing(h_list)?;
        let n_ref = steps_in(t_end, h_ref)?;
        let mut factors = Vec::with_capacity(h_list.len());
        for &h in h_list {
            steps_in(t_end, h)?;
            if h <= h_ref {
                return Err(Error::InvalidArgument(format!(
                    "step {h} must exceed the reference step {h_ref}"
                )));
            }
            factors.push(ratio(h, h_ref)?);
        }
        let x0 = model.initial_value();
        let d = model.wiener_dim();

        let stats = self.monte_carlo(samples, h_list.len(), |sample, out| {
            let fine = sample_path(seed, sample as u64, d, 0.5 * h_ref, 2 * n_ref)?;
            let reference = self.integrate(reference_scheme, model, x0, h_ref, &fine, sample)?;
            for ((&h, &factor), slot) in h_list.iter().zip(&factors).zip(out.iter_mut()) {
                let coarse = fine.coarsen(factor)?;
                let x = self.integrate(scheme, model, x0, h, &coarse, sample)?;
                *slot = (x - reference).norm_squared();
            }
            Ok(())
        })?;

        let errors: Vec<f64> = stats.iter().map(|m| m.mean.sqrt()).collect();
        Ok(ConvergenceReport {
            step_sizes: h_list.to_vec(),
            fitted_slope: fit_slope(h_list, &errors)?,
            component_errors: errors.iter().map(|e| vec![*e]).collect(),
            errors,
            mode: ConvergenceMode::Strong,
            scheme,
            samples,
            reference: format!("coupled {reference_scheme} at h_ref={h_ref}"),
        })
    }

    /// First and/or second moment errors at `t_end`. Each step size gets its
    /// own independent paths.
    #[allow(clippy::too_many_arguments)]
    pub fn run_weak(
        &self,
        model: &SystemModel,
        scheme: SchemeId,
        h_list: &[f64],
        t_end: f64,
        samples: usize,
        seed: u64,
        moments: &[ConvergenceMode],
        reference: WeakReference,
    ) -> Result<Vec<ConvergenceReport>> {
        self.settings.validate()?;
        scheme.check_model(model)?;
        check_decreasing(h_list)?;
        if moments.contains(&ConvergenceMode::Strong) {
            return Err(Error::InvalidArgument("weak studies measure moments only".into()));
        }
        let x0 = model.initial_value();
        let n = model.dim();

        let (exact_m1, exact_m2, reference_label) = match reference {
            WeakReference::Exact => {
                let (m1, m2) = model.exact_moments(&x0, t_end)?;
                (m1, m2, "exact moments".to_string())
            }
            WeakReference::Surrogate {
                scheme: ref_scheme,
                h_ref,
            } => {
                ref_scheme.check_model(model)?;
                let (m1, m2) =
                    self.final_moments(model, ref_scheme, h_ref, t_end, samples, derive_seed(seed, u64::MAX))?;
                (m1, m2, format!("{ref_scheme} at h_ref={h_ref}, {samples} samples"))
            }
        };

        let mut per_h = Vec::with_capacity(h_list.len());
        for (level, &h) in h_list.iter().enumerate() {
            per_h.push(self.final_moments(model, scheme, h, t_end, samples, derive_seed(seed, level as u64))?);
        }

        moments
            .iter()
            .map(|&mode| {
                let component_errors: Vec<Vec<f64>> = per_h
                    .iter()
                    .map(|(m1, m2)| {
                        let (est, exact) = match mode {
                            ConvergenceMode::WeakM1 => (m1, &exact_m1),
                            _ => (m2, &exact_m2),
                        };
                        (0..n).map(|i| (est[i] - exact[i]).abs()).collect()
                    })
                    .collect();
                let errors: Vec<f64> = component_errors
                    .iter()
                    .map(|e| e.iter().fold(0.0, |a: f64, v| a.max(*v)))
                    .collect();
                Ok(ConvergenceReport {
                    step_sizes: h_list.to_vec(),
                    fitted_slope: fit_slope(h_list, &errors)?,
                    errors,
                    component_errors,
                    mode,
                    scheme,
                    samples,
                    reference: reference_label.clone(),
                })
            })
            .collect()
    }

    /// Sample first and second moments of every component at `t_end`.
    fn final_moments(
        &self,
        model: &SystemModel,
        scheme: SchemeId,
        h: f64,
        t_end: f64,
        samples: usize,
        seed: u64,
    ) -> Result<(State, State)> {
        let n_steps = steps_in(t_end, h)?;
        let dim = model.dim();
        let x0 = model.initial_value();
        let d = model.wiener_dim();
        let stats = self.monte_carlo(samples, 2 * dim, |sample, out| {
            let path = sample_path(seed, sample as u64, d, 0.5 * h, 2 * n_steps)?;
            let x = self.integrate(scheme, model, x0, h, &path, sample)?;
            for i in 0..dim {
                out[i] = x[i];
                out[dim + i] = x[i] * x[i];
            }
            Ok(())
        })?;
        let m1 = State::from_slice(&stats[..dim].iter().map(|m| m.mean).collect::<Vec<_>>());
        let m2 = State::from_slice(&stats[dim..].iter().map(|m| m.mean).collect::<Vec<_>>());
        Ok((m1, m2))
    }

    /// One trajectory on `[0, t_end]`, as `(t, x)` pairs.
    pub fn run_single(
        &self,
        model: &SystemModel,
        scheme: SchemeId,
        h: f64,
        t_end: f64,
        seed: u64,
    ) -> Result<Vec<(f64, State)>> {
        self.settings.validate()?;
        scheme.check_model(model)?;
        let n_steps = steps_in(t_end, h)?;
        let path = sample_path(seed, 0, model.wiener_dim(), 0.5 * h, 2 * n_steps)?;
        let mut x = model.initial_value();
        let mut out = Vec::with_capacity(n_steps + 1);
        out.push((0.0, x));
        for n in 0..n_steps {
            x = self.advance(scheme, model, &x, h, &path, n, 0)?;
            out.push(((n + 1) as f64 * h, x));
        }
        Ok(out)
    }

    /// Step `n` of size `h` driven by half-step increments `2n`, `2n + 1`.
    #[allow(clippy::too_many_arguments)]
    fn advance(
        &self,
        scheme: SchemeId,
        model: &SystemModel,
        x: &State,
        h: f64,
        half_steps: &BrownianPath,
        n: usize,
        sample: usize,
    ) -> Result<State> {
        step(
            scheme,
            model,
            x,
            h,
            half_steps.increment(2 * n),
            half_steps.increment(2 * n + 1),
            &self.settings,
        )
        .map(|(x, _)| x)
        .map_err(|e| Error::SampleFailed {
            sample,
            step: n,
            source: Box::new(e),
        })
    }

    fn integrate(
        &self,
        scheme: SchemeId,
        model: &SystemModel,
        x0: State,
        h: f64,
        half_steps: &BrownianPath,
        sample: usize,
    ) -> Result<State> {
        let mut x = x0;
        for n in 0..half_steps.len() / 2 {
            x = self.advance(scheme, model, &x, h, half_steps, n, sample)?;
        }
        Ok(x)
    }
}

fn is_positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

/// Number of steps of size `h` in `[0, t_end]`; `h` must divide `t_end`.
pub fn steps_in(t_end: f64, h: f64) -> Result<usize> {
    if !is_positive(h) || !is_positive(t_end) {
        return Err(Error::InvalidArgument(format!(
            "step {h} and final time {t_end} must be positive"
        )));
    }
    ratio(t_end, h)
}

fn ratio(big: f64, small: f64) -> Result<usize> {
    let r = big / small;
    let n = r.round();
    if n < 1.0 || (r - n).abs() > 1e-9 * n {
        return Err(Error::InvalidArgument(format!("{small} does not divide {big}")));
    }
    Ok(n as usize)
}

fn check_decreasing(h_list: &[f64]) -> Result<()> {
    if h_list.len() < 2
        || h_list
            .windows(2)
            .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Less))
    {
        return Err(Error::InvalidArgument(
            "step sizes must be at least two, strictly decreasing".into(),
        ));
    }
    Ok(())
}

/// Least-squares slope of `log err` against `log h`.
pub fn fit_slope(hs: &[f64], errs: &[f64]) -> Result<f64> {
    if hs.len() != errs.len() || hs.len() < 2 {
        return Err(Error::InvalidArgument(
            "slope fit needs two or more (h, error) pairs".into(),
        ));
    }
    if hs.iter().chain(errs).any(|v| !is_positive(*v)) {
        return Err(Error::InvalidArgument("slope fit needs positive finite values".into()));
    }
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let (slope, _) = least_squares(&xs, &ys);
    Ok(slope)
}

/// Ordinary least-squares line `y = slope·x + intercept`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Coefficient of determination of the least-squares line.
pub fn r_squared(xs: &[f64], ys: &[f64]) -> f64 {
    let (slope, intercept) = least_squares(xs, ys);
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_oscillator, make_pendulum};

    #[test]
    fn slope_of_power_laws() {
        let hs: Vec<f64> = (4..9).map(|k| 2f64.powi(-k)).collect();
        let lin: Vec<f64> = hs.iter().map(|h| 3.0 * h).collect();
        let quad: Vec<f64> = hs.iter().map(|h| 0.2 * h * h).collect();
        assert!((fit_slope(&hs, &lin).unwrap() - 1.0).abs() < 1e-12);
        assert!((fit_slope(&hs, &quad).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn slope_flattens_at_noise_floor() {
        let hs: Vec<f64> = (0..8).map(|k| 2f64.powi(-k)).collect();
        let errs: Vec<f64> = hs.iter().map(|h| 1e-3 * h + 1e-7).collect();
        let s = fit_slope(&hs, &errs).unwrap();
        assert!(s < 1.0 && s > 0.9, "{s}");
        let errs: Vec<f64> = hs.iter().map(|h| 1e-3 * h + 1e-4).collect();
        assert!(fit_slope(&hs, &errs).unwrap() < 0.7);
    }

    #[test]
    fn slope_rejects_bad_input() {
        assert!(fit_slope(&[0.1], &[0.1]).is_err());
        assert!(fit_slope(&[0.1, 0.05], &[0.1, 0.0]).is_err());
        assert!(fit_slope(&[0.1, -0.05], &[0.1, 0.2]).is_err());
        assert!(fit_slope(&[0.1, 0.05], &[0.1]).is_err());
    }

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn moment_merge_matches_direct() {
        let v: Vec<f64> = (0..37).map(|i| ((i * 7919) % 101) as f64 / 10.0).collect();
        let direct = chunk_moments(&v, v.len(), 1, 0);
        let parts: Vec<Moments> = v.chunks(5).map(|c| chunk_moments(c, c.len(), 1, 0)).collect();
        let merged = merge_tree(&parts);
        assert!((merged.mean - direct.mean).abs() < 1e-12);
        assert!((merged.m2 - direct.m2).abs() < 1e-9);
        assert_eq!(merged.n, 37.0);
    }

    #[test]
    fn deterministic_single_sample_trace() {
        let osc = make_oscillator(0.0).unwrap();
        let h = Harness::default();
        let rep = h
            .run_trace(&osc, SchemeId::Em, 0.1, 1.0, 1, 3, Observable::Energy)
            .unwrap();
        assert_eq!(rep.time_grid.len(), 11);
        assert!(rep.std_error.iter().all(|s| *s == 0.0));
        let single = h.run_single(&osc, SchemeId::Em, 0.1, 1.0, 3).unwrap();
        for ((_, x), m) in single.iter().zip(&rep.sample_mean) {
            assert_eq!(osc.hamiltonian(x), *m);
        }
        // EM multiplies the oscillator energy by 1 + h² per step.
        assert!((rep.sample_mean[10] - 0.5 * 1.01f64.powi(10)).abs() < 1e-14);
    }

    #[test]
    fn trace_argument_checks() {
        let h = Harness::default();
        let osc = make_oscillator(1.0).unwrap();
        assert!(h
            .run_trace(&osc, SchemeId::Dp, 0.3, 1.0, 4, 0, Observable::Energy)
            .is_err());
        assert!(h
            .run_trace(&osc, SchemeId::Dp, 0.1, 1.0, 4, 0, Observable::Casimir)
            .is_err());
        assert!(h
            .run_trace(&osc, SchemeId::Dp, 0.1, 1.0, 0, 0, Observable::Energy)
            .is_err());
        let pend = make_pendulum(1.0).unwrap();
        assert!(h
            .run_trace(&pend, SchemeId::Stm, 0.1, 1.0, 4, 0, Observable::Energy)
            .is_err());
    }

    #[test]
    fn non_convergence_names_sample_and_step() {
        let h = Harness::default();
        let osc = make_oscillator(1.0).unwrap();
        let err = h
            .run_trace(&osc, SchemeId::Dp, 5.0, 10.0, 3, 0, Observable::Energy)
            .unwrap_err();
        assert!(matches!(err, Error::SampleFailed { sample: 0, step: 0, .. }), "{err}");
    }

    #[test]
    fn weak_requires_reference() {
        let h = Harness::default();
        let pend = make_pendulum(1.0).unwrap();
        let r = h.run_weak(
            &pend,
            SchemeId::Dp,
            &[0.25, 0.125],
            1.0,
            8,
            0,
            &[ConvergenceMode::WeakM1],
            WeakReference::Exact,
        );
        assert!(r.is_err());
    }

    #[test]
    fn strong_argument_checks() {
        let h = Harness::default();
        let osc = make_oscillator(1.0).unwrap();
        // increasing list
        assert!(h
            .run_strong(&osc, SchemeId::Dp, &[0.125, 0.25], 1.0 / 64.0, 1.0, 4, 0, SchemeId::Stm)
            .is_err());
        // reference not finer
        assert!(h
            .run_strong(&osc, SchemeId::Dp, &[0.25, 0.125], 0.125, 1.0, 4, 0, SchemeId::Stm)
            .is_err());
    }

    #[test]
    fn step_counting() {
        assert_eq!(steps_in(100.0, 100.0 / 256.0).unwrap(), 256);
        assert_eq!(steps_in(0.75, 2f64.powi(-12)).unwrap(), 3072);
        assert!(steps_in(1.0, 0.3).is_err());
        assert!(steps_in(1.0, 0.0).is_err());
    }
}
