//! Monte-Carlo protocol: non-uniform sampling, settling time, relative
//! error metric, the direct nonlinear least-squares baseline and sweeps.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimation;
use crate::igs::{InputGenerator, Spectrum};
use crate::model::{LftPlant, ParameterVector};
use crate::response::{simulate_samples, solve_steady_maps, ResponseModel, SampleSet};

/// Uniform law for the gap between consecutive instants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapLaw {
    pub min: f64,
    pub max: f64,
}

impl GapLaw {
    pub fn uniform(min: f64, max: f64) -> Result<Self> {
        if !(min > 0.0 && max >= min && max.is_finite()) {
            return Err(Error::InvalidInput(format!("gap law [{min}, {max}] needs 0 < min <= max")));
        }
        Ok(Self { min, max })
    }

    pub fn constant(gap: f64) -> Result<Self> {
        Self::uniform(gap, gap)
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.max > self.min {
            rng.random_range(self.min..=self.max)
        } else {
            self.min
        }
    }
}

/// `t_1 = t_start + gap_1`, `t_k = t_{k-1} + gap_k`.
pub fn generate_times(law: &GapLaw, n: usize, t_start: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    times_from(law, n, t_start, &mut rng)
}

fn times_from<R: Rng>(law: &GapLaw, n: usize, t_start: f64, rng: &mut R) -> Vec<f64> {
    let mut t = t_start;
    (0..n)
        .map(|_| {
            t += law.draw(rng);
            t
        })
        .collect()
}

/// Settling band used when a configuration does not specify one.
pub const DEFAULT_SETTLE_BAND: f64 = 1e-3;

/// Time after which every step response channel stays within
/// `band_fraction` of its final value, resolved on a 1 ms grid up to
/// `50 / |Re λ_slowest|` and refined by linear interpolation.
pub fn settle_time(plant: &LftPlant, theta: &ParameterVector, band_fraction: f64) -> Result<f64> {
    let report = plant.check_assumptions(theta);
    if !report.well_posed {
        return Err(Error::WellPosednessViolated {
            sigma_min: report.well_posed_sigma_min,
        });
    }
    if !report.regular {
        return Err(Error::IrregularPencil);
    }
    let max_real = report.finite_eigenvalues.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    if max_real >= 0.0 {
        return Err(Error::Unstable { max_real });
    }
    if report.finite_eigenvalues.is_empty() {
        return Ok(0.0);
    }
    let dt = 1e-3;
    let t_end = 50.0 / max_real.abs();
    let steps = (t_end / dt).ceil() as usize;
    let mut settle: f64 = 0.0;
    for j in 0..plant.n_inputs() {
        let mut pi = DMatrix::zeros(plant.n_inputs(), 1);
        pi[(j, 0)] = 1.0;
        let step = InputGenerator::new(DMatrix::zeros(1, 1), pi, DVector::from_element(1, 1.0))?;
        let model = ResponseModel::new(plant, theta, &step, &DVector::zeros(plant.n_states()))?;
        let finals = model.steady.column(0).into_owned();
        let thresholds = finals.map(|f| band_fraction * f.abs());
        let phi = (&model.a_f * dt).exp();
        let mut q = model.q0.clone();
        let dev = |q: &DVector<f64>| -> Vec<f64> {
            let y = &model.c_basis * q;
            y.iter().zip(thresholds.iter()).map(|(v, th)| v.abs() - th).collect()
        };
        let mut prev = dev(&q);
        let mut last_out = if prev.iter().any(|&d| d > 0.0) { Some(0.0) } else { None };
        for k in 1..=steps {
            q = &phi * q;
            let cur = dev(&q);
            for (i, (&p, &c)) in prev.iter().zip(&cur).enumerate() {
                let _ = i;
                if p > 0.0 && c <= 0.0 {
                    let frac = p / (p - c);
                    last_out = Some((k as f64 - 1.0 + frac) * dt);
                } else if c > 0.0 {
                    last_out = Some(k as f64 * dt);
                }
            }
            prev = cur;
        }
        if let Some(t) = last_out {
            settle = settle.max(t);
        }
    }
    Ok(settle)
}

/// `sqrt(Σ ((θ_i - θ̂_i) / θ_i)^2)`.
pub fn relative_error(theta_true: &ParameterVector, theta_hat: &ParameterVector) -> Result<f64> {
    if theta_true.len() != theta_hat.len() {
        return Err(Error::DimensionMismatch("parameter vectors differ in length".into()));
    }
    let mut acc = 0.0;
    for (i, (&t, &h)) in theta_true.as_slice().iter().zip(theta_hat.as_slice()).enumerate() {
        if t == 0.0 {
            return Err(Error::ZeroTrueParameter { index: i });
        }
        acc += ((t - h) / t).powi(2);
    }
    Ok(acc.sqrt())
}

/// Initial plant state of a simulated or fitted experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum InitialState {
    /// `x(0) = 0`.
    #[default]
    Rest,
    /// `x(0) = X ξ(0)`: the response has no transient.
    Steady,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DlseOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
    pub step_tol: f64,
    pub initial_damping: f64,
    /// Initial state assumed by the fitted model.
    pub initial_state: InitialState,
}

impl Default for DlseOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            grad_tol: 1e-10,
            step_tol: 1e-10,
            initial_damping: 1e-3,
            initial_state: InitialState::Rest,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DlseStatus {
    Converged,
    MaxIterations,
    Diverged,
    NumericalFailure,
}

impl DlseStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            DlseStatus::Converged => "converged",
            DlseStatus::MaxIterations => "max_iter",
            DlseStatus::Diverged => "diverged",
            DlseStatus::NumericalFailure => "numerical_failure",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DlseResult {
    pub theta: ParameterVector,
    pub init: ParameterVector,
    /// Mean squared output residual.
    pub cost: f64,
    pub iterations: usize,
    pub status: DlseStatus,
}

/// Output-error residuals of the full (transient plus steady) response.
struct DlseProblem<'a> {
    plant: &'a LftPlant,
    gen: &'a InputGenerator,
    spec: Spectrum,
    samples: &'a SampleSet,
    states: Vec<DVector<f64>>,
    x0: DVector<f64>,
    initial_state: InitialState,
}

impl DlseProblem<'_> {
    fn residuals(&self, theta: &DVector<f64>) -> Option<DVector<f64>> {
        let th = ParameterVector::new(theta.clone());
        let model = ResponseModel::with_spectrum(self.plant, &th, self.gen, &self.spec, &self.x0).ok()?;
        let my = self.samples.n_outputs();
        let mut r = DVector::zeros(my * self.samples.len());
        for (k, ((&t, y), xi)) in self.samples.times.iter().zip(&self.samples.measurements).zip(&self.states).enumerate() {
            let pred = match self.initial_state {
                InitialState::Rest => model.output_at(xi, t),
                InitialState::Steady => &model.steady * xi,
            };
            r.rows_mut(k * my, my).copy_from(&(y - pred));
        }
        r.iter().all(|v| v.is_finite()).then_some(r)
    }

    fn jacobian(&self, theta: &DVector<f64>, rows: usize) -> Option<DMatrix<f64>> {
        let mut jac = DMatrix::zeros(rows, theta.len());
        for i in 0..theta.len() {
            let h = 1e-6 * (1.0 + theta[i].abs());
            let mut plus = theta.clone();
            plus[i] += h;
            let mut minus = theta.clone();
            minus[i] -= h;
            let rp = self.residuals(&plus)?;
            let rm = self.residuals(&minus)?;
            jac.set_column(i, &((rp - rm) / (2.0 * h)));
        }
        Some(jac)
    }
}

/// Damped Gauss–Newton (Levenberg–Marquardt) fit of the output error from
/// the zero initial plant state.
pub fn dlse_fit(
    plant: &LftPlant,
    gen: &InputGenerator,
    samples: &SampleSet,
    init: &ParameterVector,
    opts: &DlseOptions,
) -> DlseResult {
    let fail = |theta: DVector<f64>, iterations| DlseResult {
        theta: ParameterVector::new(theta),
        init: init.clone(),
        cost: f64::INFINITY,
        iterations,
        status: DlseStatus::NumericalFailure,
    };
    let spec = match gen.decompose() {
        Ok(s) => s,
        Err(_) => return fail(init.values().clone(), 0),
    };
    let problem = DlseProblem {
        plant,
        gen,
        spec,
        samples,
        states: samples.times.iter().map(|&t| gen.state_at(t)).collect(),
        x0: DVector::zeros(plant.n_states()),
        initial_state: opts.initial_state,
    };
    let count = samples.len().max(1) as f64;
    let box_scale: f64 = plant.theta_box().iter().map(|(lo, hi)| lo.abs().max(hi.abs())).fold(1.0, f64::max);

    let mut theta = init.values().clone();
    let Some(mut r) = problem.residuals(&theta) else {
        return fail(theta, 0);
    };
    let mut cost = r.norm_squared() / count;
    let mut lambda = opts.initial_damping;
    let mut jac: Option<DMatrix<f64>> = None;
    let n = theta.len();
    for iter in 1..=opts.max_iter {
        if jac.is_none() {
            jac = problem.jacobian(&theta, r.len());
            if jac.is_none() {
                return fail(theta, iter);
            }
        }
        let j = jac.as_ref().expect("computed above");
        let jtj = j.transpose() * j;
        let g = j.transpose() * &r;
        if (&g * (2.0 / count)).amax() <= opts.grad_tol {
            return DlseResult {
                theta: ParameterVector::new(theta),
                init: init.clone(),
                cost,
                iterations: iter,
                status: DlseStatus::Converged,
            };
        }
        let mut lhs = jtj.clone();
        for i in 0..n {
            lhs[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
        }
        let Some(step) = lhs.lu().solve(&(-&g)) else {
            return fail(theta, iter);
        };
        if !step.iter().all(|v| v.is_finite()) {
            return fail(theta, iter);
        }
        let cand = &theta + &step;
        if cand.amax() > 1e3 * box_scale {
            return DlseResult {
                theta: ParameterVector::new(theta),
                init: init.clone(),
                cost,
                iterations: iter,
                status: DlseStatus::Diverged,
            };
        }
        match problem.residuals(&cand) {
            Some(rc) if rc.norm_squared() / count < cost => {
                let small_step = step.norm() <= opts.step_tol * (theta.norm() + opts.step_tol);
                theta = cand;
                r = rc;
                cost = r.norm_squared() / count;
                lambda = (lambda / 10.0).max(1e-15);
                jac = None;
                if small_step {
                    return DlseResult {
                        theta: ParameterVector::new(theta),
                        init: init.clone(),
                        cost,
                        iterations: iter,
                        status: DlseStatus::Converged,
                    };
                }
            }
            _ => {
                lambda *= 10.0;
                if lambda > 1e16 {
                    // no descent direction left at working precision
                    return DlseResult {
                        theta: ParameterVector::new(theta),
                        init: init.clone(),
                        cost,
                        iterations: iter,
                        status: DlseStatus::Converged,
                    };
                }
            }
        }
    }
    DlseResult {
        theta: ParameterVector::new(theta),
        init: init.clone(),
        cost,
        iterations: opts.max_iter,
        status: DlseStatus::MaxIterations,
    }
}

/// Draws a point uniformly from the plant's parameter box.
pub fn sample_box<R: Rng>(plant: &LftPlant, rng: &mut R) -> ParameterVector {
    let v: Vec<f64> = plant
        .theta_box()
        .iter()
        .map(|&(lo, hi)| if hi > lo { rng.random_range(lo..hi) } else { lo })
        .collect();
    ParameterVector::from_slice(&v)
}

/// DLSE fit started from a seeded uniform draw over the parameter box.
pub fn dlse_fit_random(
    plant: &LftPlant,
    gen: &InputGenerator,
    samples: &SampleSet,
    seed: u64,
    opts: &DlseOptions,
) -> DlseResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = sample_box(plant, &mut rng);
    dlse_fit(plant, gen, samples, &init, opts)
}

/// Generator with the real parts of its complex pairs replaced by `shifts`
/// (in the pair order of the spectrum). Extra pairs keep their real part.
pub fn shifted_generator(gen: &InputGenerator, shifts: &[f64]) -> Result<InputGenerator> {
    if shifts.is_empty() {
        return Ok(gen.clone());
    }
    let spec = gen.decompose()?;
    if shifts.len() > spec.n_complex() {
        return Err(Error::InvalidInput(format!(
            "{} real-part shifts for {} complex pairs",
            shifts.len(),
            spec.n_complex()
        )));
    }
    let (r, mut j) = spec.real_modal_basis();
    let mr = spec.n_real();
    for (c, &s) in shifts.iter().enumerate() {
        let k = mr + 2 * c;
        j[(k, k)] = s;
        j[(k + 1, k + 1)] = s;
    }
    let r_inv = r.clone().try_inverse().ok_or(Error::SingularT)?;
    InputGenerator::new(&r * j * r_inv, gen.pi_out().clone(), gen.xi0().clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ThetaLaw {
    /// Per-coordinate uniform over the plant's parameter box.
    UniformBox,
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub sigmas: Vec<f64>,
    pub sample_counts: Vec<usize>,
    /// Real parts for the generator's complex pairs; an empty entry keeps
    /// the configured generator.
    pub generator_shifts: Vec<Vec<f64>>,
    pub trials: usize,
    pub master_seed: u64,
    pub gap: GapLaw,
    pub settle_time: f64,
    /// Upper bound on pre-settling samples used only by the baseline.
    pub pre_samples: usize,
    pub theta_law: ThetaLaw,
    pub initial_state: InitialState,
    pub run_dlse: bool,
    pub dlse: DlseOptions,
}

impl MonteCarloConfig {
    /// SHA-256 of the configuration with the master seed left out.
    pub fn config_hash(&self) -> String {
        let mut copy = self.clone();
        copy.master_seed = 0;
        let text = format!("{copy:?}");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn cells(&self) -> Vec<(f64, usize, Vec<f64>)> {
        let shifts = if self.generator_shifts.is_empty() {
            vec![Vec::new()]
        } else {
            self.generator_shifts.clone()
        };
        let mut out = Vec::new();
        for sh in &shifts {
            for &s in &self.sigmas {
                for &n in &self.sample_counts {
                    out.push((s, n, sh.clone()));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub cell: usize,
    pub trial: usize,
    pub sigma: f64,
    pub n: usize,
    pub shifts: Vec<f64>,
    pub theta_true: ParameterVector,
    pub theta_proposed: Option<ParameterVector>,
    pub proposed_error: Option<String>,
    pub ere_proposed: Option<f64>,
    pub dlse: Option<DlseResult>,
    pub ere_dlse: Option<f64>,
    /// `m_y σ²`, the expected baseline cost at the true parameter.
    pub noise_floor: f64,
    pub dlse_local_minimum: bool,
    pub fs_n: Option<f64>,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub sigma: f64,
    pub n: usize,
    pub shifts: Vec<f64>,
    pub trials: usize,
    pub median_ere_proposed: f64,
    pub mean_ere_proposed: f64,
    pub median_ere_dlse: f64,
    pub dlse_fail_count: usize,
    pub proposed_fail_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloOutput {
    pub trials: Vec<TrialResult>,
    pub summary: Vec<CellSummary>,
    pub config_hash: String,
}

fn trial_rng(master: u64, cell: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(((cell as u64) << 32) | trial as u64);
    rng
}

/// One Monte-Carlo trial at noise level `sigma` with `n` post-settling
/// samples. The baseline additionally sees up to `pre_samples` instants
/// drawn before the settling time.
#[allow(clippy::too_many_arguments)]
pub fn run_trial(
    plant: &LftPlant,
    gen: &InputGenerator,
    cfg: &MonteCarloConfig,
    cell: usize,
    trial: usize,
    sigma: f64,
    n: usize,
    shifts: &[f64],
) -> TrialResult {
    let start = Instant::now();
    let mut rng = trial_rng(cfg.master_seed, cell, trial);
    let theta_true = match &cfg.theta_law {
        ThetaLaw::UniformBox => sample_box(plant, &mut rng),
        ThetaLaw::Fixed(v) => ParameterVector::from_slice(v),
    };
    let pre: Vec<f64> = times_from(&cfg.gap, cfg.pre_samples, 0.0, &mut rng)
        .into_iter()
        .filter(|&t| t < cfg.settle_time)
        .collect();
    let main = times_from(&cfg.gap, n, cfg.settle_time, &mut rng);
    let noise_seed: u64 = rng.random();
    let dlse_seed: u64 = rng.random();
    let mut result = TrialResult {
        cell,
        trial,
        sigma,
        n,
        shifts: shifts.to_vec(),
        theta_true: theta_true.clone(),
        theta_proposed: None,
        proposed_error: None,
        ere_proposed: None,
        dlse: None,
        ere_dlse: None,
        noise_floor: plant.n_outputs() as f64 * sigma * sigma,
        dlse_local_minimum: false,
        fs_n: None,
        runtime_s: 0.0,
    };
    let gen = match shifted_generator(gen, shifts) {
        Ok(g) => g,
        Err(e) => {
            result.proposed_error = Some(e.to_string());
            return result;
        }
    };
    let all_times: Vec<f64> = pre.iter().chain(&main).copied().collect();
    let x0 = match cfg.initial_state {
        InitialState::Rest => Ok(DVector::zeros(plant.n_states())),
        InitialState::Steady => solve_steady_maps(plant, &theta_true, &gen).map(|m| m.x * gen.xi0()),
    };
    let samples = match x0.and_then(|x0| simulate_samples(plant, &theta_true, &x0, &gen, &all_times, sigma, noise_seed)) {
        Ok(s) => s,
        Err(e) => {
            result.proposed_error = Some(e.to_string());
            return result;
        }
    };
    let post = samples.from_time(cfg.settle_time);
    match estimation::identify(plant, &gen, &post, Some(&theta_true)) {
        Ok(est) => {
            result.ere_proposed = relative_error(&theta_true, &est.theta).ok();
            result.fs_n = Some(est.excitation.fs_n);
            result.theta_proposed = Some(est.theta);
        }
        Err(e) => result.proposed_error = Some(e.to_string()),
    }
    if cfg.run_dlse {
        let opts = DlseOptions {
            initial_state: cfg.initial_state,
            ..cfg.dlse
        };
        let fit = dlse_fit_random(plant, &gen, &samples, dlse_seed, &opts);
        if fit.status != DlseStatus::NumericalFailure {
            result.ere_dlse = relative_error(&theta_true, &fit.theta).ok();
        }
        result.dlse_local_minimum = match (result.ere_dlse, result.ere_proposed) {
            (Some(d), Some(p)) => d > 10.0 * p,
            _ => false,
        } || (sigma > 0.0 && fit.cost > 2.0 * result.noise_floor);
        result.dlse = Some(fit);
    }
    result.runtime_s = start.elapsed().as_secs_f64();
    result
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Worker pool capped by `LFT_IDENT_THREADS` when set.
pub fn thread_pool() -> rayon::ThreadPool {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var("LFT_IDENT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            b = b.num_threads(n);
        }
    }
    b.build().expect("thread pool")
}

pub fn monte_carlo(plant: &LftPlant, gen: &InputGenerator, cfg: &MonteCarloConfig) -> MonteCarloOutput {
    let cells = cfg.cells();
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..cfg.trials).map(move |t| (c, t))).collect();
    let pool = thread_pool();
    let mut trials: Vec<TrialResult> = pool.install(|| {
        jobs.par_iter()
            .map(|&(c, t)| {
                let (sigma, n, ref shifts) = cells[c];
                run_trial(plant, gen, cfg, c, t, sigma, n, shifts)
            })
            .collect()
    });
    trials.sort_by_key(|t| (t.cell, t.trial));
    let summary = cells
        .iter()
        .enumerate()
        .map(|(c, (sigma, n, shifts))| {
            let rows: Vec<&TrialResult> = trials.iter().filter(|t| t.cell == c).collect();
            let prop: Vec<f64> = rows.iter().filter_map(|t| t.ere_proposed).collect();
            let dl: Vec<f64> = rows.iter().filter_map(|t| t.ere_dlse).collect();
            let mean = if prop.is_empty() {
                f64::NAN
            } else {
                prop.iter().sum::<f64>() / prop.len() as f64
            };
            CellSummary {
                sigma: *sigma,
                n: *n,
                shifts: shifts.clone(),
                trials: rows.len(),
                median_ere_proposed: median(prop),
                mean_ere_proposed: mean,
                median_ere_dlse: median(dl),
                dlse_fail_count: rows
                    .iter()
                    .filter(|t| t.dlse.as_ref().is_some_and(|d| d.status != DlseStatus::Converged))
                    .count(),
                proposed_fail_count: rows.iter().filter(|t| t.proposed_error.is_some()).count(),
            }
        })
        .collect();
    MonteCarloOutput {
        trials,
        summary,
        config_hash: cfg.config_hash(),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.16e}"))
}

impl MonteCarloOutput {
    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "sigma,N,sigma1,sigma2,trials,median_Ere_proposed,mean_Ere_proposed,median_Ere_dlse,dlse_fail_count\n",
        );
        for c in &self.summary {
            out.push_str(&format!(
                "{},{},{},{},{},{:.16e},{:.16e},{:.16e},{}\n",
                c.sigma,
                c.n,
                c.shifts.first().map_or(String::new(), |v| v.to_string()),
                c.shifts.get(1).map_or(String::new(), |v| v.to_string()),
                c.trials,
                c.median_ere_proposed,
                c.mean_ere_proposed,
                c.median_ere_dlse,
                c.dlse_fail_count
            ));
        }
        out
    }

    pub fn trials_csv(&self) -> String {
        let mt = self.trials.first().map_or(0, |t| t.theta_true.len());
        let mut out = String::from("cell,trial,sigma,N");
        for prefix in ["theta_true", "theta_proposed", "theta_dlse"] {
            for i in 1..=mt {
                out.push_str(&format!(",{prefix}_{i}"));
            }
        }
        out.push_str(",Ere_proposed,Ere_dlse,dlse_status,dlse_cost,dlse_local_minimum,proposed_error\n");
        for t in &self.trials {
            out.push_str(&format!("{},{},{},{}", t.cell, t.trial, t.sigma, t.n));
            for v in t.theta_true.as_slice() {
                out.push_str(&format!(",{v:.16e}"));
            }
            for i in 0..mt {
                out.push(',');
                out.push_str(&fmt_opt(t.theta_proposed.as_ref().map(|p| p.as_slice()[i])));
            }
            for i in 0..mt {
                out.push(',');
                out.push_str(&fmt_opt(t.dlse.as_ref().map(|d| d.theta.as_slice()[i])));
            }
            out.push_str(&format!(
                ",{},{},{},{},{},{}\n",
                fmt_opt(t.ere_proposed),
                fmt_opt(t.ere_dlse),
                t.dlse.as_ref().map_or("", |d| d.status.as_str()),
                fmt_opt(t.dlse.as_ref().map(|d| d.cost)),
                t.dlse_local_minimum,
                t.proposed_error.as_deref().unwrap_or("").replace(',', ";")
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_gap_law() {
        let law = GapLaw::constant(0.5).unwrap();
        assert_eq!(generate_times(&law, 3, 2.0, 7), vec![2.5, 3.0, 3.5]);
    }

    #[test]
    fn relative_error_examples() {
        let t = ParameterVector::from_slice(&[1.0, 1.0, 1.0]);
        assert_eq!(relative_error(&t, &t).unwrap(), 0.0);
        let h = ParameterVector::from_slice(&[1.1, 0.9, 1.0]);
        assert!((relative_error(&t, &h).unwrap() - 0.02f64.sqrt()).abs() < 1e-12);
        let z = ParameterVector::from_slice(&[1.0, 0.0]);
        assert!(matches!(
            relative_error(&z, &ParameterVector::from_slice(&[1.0, 1.0])),
            Err(Error::ZeroTrueParameter { index: 1 })
        ));
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
