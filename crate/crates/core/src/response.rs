//! Steady-state and transient response of the plant driven by the input
//! generator, plus simulation of noisy non-uniformly sampled measurements.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::igs::{InputGenerator, Spectrum};
use crate::model::{pencil_spectrum, LftPlant, ParameterVector, SystemMatrices};
use crate::numerics::{self, im, re, to_complex, CMatrix, CVector, Tolerances};

/// Solution of `E X - Z = 0`, `A X + B Π - Z Ξ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateMaps {
    pub x: DMatrix<f64>,
    pub z: DMatrix<f64>,
    /// `E x(0) - Z ξ(0)` for a zero initial plant state.
    pub xbar0: DVector<f64>,
}

impl SteadyStateMaps {
    pub fn xbar0_for(&self, e: &DMatrix<f64>, x0: &DVector<f64>, xi0: &DVector<f64>) -> DVector<f64> {
        e * x0 - &self.z * xi0
    }
}

/// Noisy output samples at strictly increasing instants.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub times: Vec<f64>,
    pub measurements: Vec<DVector<f64>>,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// Generator with a single real Jordan block: `Ξ = T Λ T^{-1}` where `Λ`
/// has `lambda_r` on the diagonal and ones on the superdiagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct JordanGenerator {
    pub lambda_r: f64,
    pub t: DMatrix<f64>,
    pub pi_out: DMatrix<f64>,
    pub xi0: DVector<f64>,
}

impl JordanGenerator {
    pub fn order(&self) -> usize {
        self.t.nrows()
    }

    pub fn jordan_block(&self) -> DMatrix<f64> {
        let n = self.order();
        let mut l = DMatrix::identity(n, n) * self.lambda_r;
        for i in 0..n.saturating_sub(1) {
            l[(i, i + 1)] = 1.0;
        }
        l
    }

    pub fn xi(&self) -> Result<DMatrix<f64>> {
        let t_inv = self.t.clone().try_inverse().ok_or(Error::SingularT)?;
        Ok(&self.t * self.jordan_block() * t_inv)
    }

    pub fn to_generator(&self) -> Result<InputGenerator> {
        InputGenerator::new(self.xi()?, self.pi_out.clone(), self.xi0.clone())
    }
}

fn check_shared(plant_eigs: &[Complex64], gen_eigs: &[Complex64]) -> Result<()> {
    let rho = plant_eigs.iter().chain(gen_eigs).map(|z| z.norm()).fold(0.0, f64::max);
    let tol = 1e-6 * (1.0 + rho);
    for g in gen_eigs {
        for p in plant_eigs {
            let d = (g - p).norm();
            if d <= tol {
                return Err(Error::SharedEigenvalue {
                    generator: *g,
                    plant: *p,
                    distance: d,
                });
            }
        }
    }
    Ok(())
}

fn real_or_err(m: &CMatrix) -> Result<DMatrix<f64>> {
    let r = re(m);
    let residue = im(m).norm();
    if residue > 1e-8 * (1.0 + r.norm()) {
        return Err(Error::NotReal { residue });
    }
    Ok(r)
}

/// Steady-state maps for the system matrices `sys` and a decomposed generator.
pub fn steady_maps_for(
    e: &DMatrix<f64>,
    sys: &SystemMatrices,
    gen: &InputGenerator,
    spec: &Spectrum,
    tol: &Tolerances,
) -> Result<SteadyStateMaps> {
    let eigs = spec.eigenvalues();
    check_shared(&pencil_spectrum(e, &sys.a).finite, &eigs)?;
    let ec = to_complex(e);
    let ac = to_complex(&sys.a);
    let bc = to_complex(&sys.b);
    let cols: Vec<CVector> = eigs
        .iter()
        .zip(&spec.pi_bars)
        .map(|(&l, pb)| {
            let rhs = &bc * pb;
            let rhs = CMatrix::from_column_slice(rhs.len(), 1, rhs.as_slice());
            numerics::solve_c(&(&ec * l - &ac), &rhs, tol)
                .map(|m| m.column(0).into_owned())
                .map_err(|_| Error::SingularPencil { s: l })
        })
        .collect::<Result<_>>()?;
    let xbar = CMatrix::from_columns(&cols);
    let x = real_or_err(&(xbar * &spec.t_inv))?;
    let z = e * &x;
    let xbar0 = -(&z * gen.xi0());
    Ok(SteadyStateMaps { x, z, xbar0 })
}

pub fn solve_steady_maps(plant: &LftPlant, theta: &ParameterVector, gen: &InputGenerator) -> Result<SteadyStateMaps> {
    let sys = plant.assemble(theta)?;
    let spec = gen.decompose()?;
    steady_maps_for(&plant.base().e, &sys, gen, &spec, plant.tolerances())
}

/// `[H(λ_1) π̄_1, …] T^{-1}`.
pub fn steady_matrix_closed_form(plant: &LftPlant, theta: &ParameterVector, spec: &Spectrum) -> Result<DMatrix<f64>> {
    let sys = plant.assemble(theta)?;
    let eigs = spec.eigenvalues();
    check_shared(&pencil_spectrum(&plant.base().e, &sys.a).finite, &eigs)?;
    let cols: Vec<CVector> = eigs
        .iter()
        .zip(&spec.pi_bars)
        .map(|(&l, pb)| sys.eval_tfm(&plant.base().e, l, plant.tolerances()).map(|h| h * pb))
        .collect::<Result<_>>()?;
    real_or_err(&(CMatrix::from_columns(&cols) * &spec.t_inv))
}

/// Steady-state output at `t`, summed mode by mode: real modes contribute
/// `H(λ) π e^{λt} ξ(0)`, each complex pair contributes
/// `[H^r H^i] [[π^r, π^i], [π^i, -π^r]] e^{σt} [[cos, -sin], [sin, cos]] ξ(0)`
/// in the real modal coordinates of the generator.
pub fn steady_output(plant: &LftPlant, theta: &ParameterVector, gen: &InputGenerator, t: f64) -> Result<DVector<f64>> {
    let sys = plant.assemble(theta)?;
    let spec = gen.decompose()?;
    check_shared(&pencil_spectrum(&plant.base().e, &sys.a).finite, &spec.eigenvalues())?;
    let (r, _) = spec.real_modal_basis();
    let zeta0 = r.clone().lu().solve(gen.xi0()).ok_or(Error::SingularT)?;
    let pi_r = gen.pi_out() * &r;
    let e = &plant.base().e;
    let tol = plant.tolerances();
    let mut y = DVector::zeros(plant.n_outputs());
    for (i, &l) in spec.real_eigs.iter().enumerate() {
        let h = re(&sys.eval_tfm(e, Complex64::new(l, 0.0), tol)?);
        y += h * pi_r.column(i) * ((l * t).exp() * zeta0[i]);
    }
    let mr = spec.n_real();
    for (c, &(s, w)) in spec.complex_pairs.iter().enumerate() {
        let k = mr + 2 * c;
        let h = sys.eval_tfm(e, Complex64::new(s, w), tol)?;
        let (hr, hi) = (re(&h), im(&h));
        let pr = pi_r.column(k);
        let pi = pi_r.column(k + 1);
        let (sn, cs) = (w * t).sin_cos();
        let g = (s * t).exp();
        let a = g * (cs * zeta0[k] - sn * zeta0[k + 1]);
        let b = g * (sn * zeta0[k] + cs * zeta0[k + 1]);
        y += &hr * (pr * a + pi * b) + &hi * (pi * a - pr * b);
    }
    Ok(y)
}

/// Free response of an index-one descriptor system, reduced to its finite
/// dynamics: `x(t) = V e^{A_f t} W x(0)` for consistent directions.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientPropagator {
    /// Orthonormal basis of the finite-dynamics subspace (`m_x × r`).
    pub basis: DMatrix<f64>,
    /// Finite-dynamics matrix (`r × r`).
    pub a_f: DMatrix<f64>,
    /// Projection onto finite-dynamics coordinates (`r × m_x`).
    pub proj: DMatrix<f64>,
}

const SPLIT_RTOL: f64 = 1e-10;

impl TransientPropagator {
    /// Builds the propagator of `L^{-1}{(sE - A)^{-1} E}`.
    pub fn new(e: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<Self> {
        let n = e.nrows();
        let scale = 1.0 + a.norm() / (1.0 + e.norm());
        let mut best: Option<(f64, f64)> = None;
        for c in [0.0, 0.37, -0.61, 1.13, -1.9, 2.7, 0.05] {
            let s0 = c * scale;
            let sv = numerics::singular_values(&(e * s0 - a));
            let ratio = if sv[0] > 0.0 { sv[n - 1] / sv[0] } else { 0.0 };
            if best.is_none_or(|(_, r)| ratio > r) {
                best = Some((s0, ratio));
            }
        }
        let (s0, ratio) = best.expect("candidate list is non-empty");
        if ratio <= n as f64 * f64::EPSILON {
            return Err(Error::IrregularPencil);
        }
        let ehat = (e * s0 - a).lu().solve(e).ok_or(Error::IrregularPencil)?;
        let svd = ehat.clone().svd(true, true);
        let u = svd.u.expect("requested U");
        let v_t = svd.v_t.expect("requested V");
        let smax = svd.singular_values.max();
        let range: Vec<usize> = (0..n).filter(|&i| svd.singular_values[i] > SPLIT_RTOL * smax).collect();
        let null: Vec<usize> = (0..n).filter(|&i| svd.singular_values[i] <= SPLIT_RTOL * smax).collect();
        let r = range.len();
        let mut vmat = DMatrix::zeros(n, n);
        for (j, &i) in range.iter().enumerate() {
            vmat.set_column(j, &u.column(i));
        }
        for (j, &i) in null.iter().enumerate() {
            vmat.set_column(r + j, &v_t.row(i).transpose());
        }
        let vs = numerics::singular_values(&vmat);
        if vs[n - 1] <= 1e-8 * vs[0] {
            return Err(Error::UnsupportedIndex);
        }
        let basis = vmat.columns(0, r).into_owned();
        let v_inv = vmat.try_inverse().ok_or(Error::UnsupportedIndex)?;
        let proj = v_inv.rows(0, r).into_owned();
        let j = basis.transpose() * &ehat * &basis;
        let j_inv = j.try_inverse().ok_or(Error::UnsupportedIndex)?;
        let a_f = DMatrix::identity(r, r) * s0 - j_inv;
        Ok(Self { basis, a_f, proj })
    }

    pub fn rank(&self) -> usize {
        self.a_f.nrows()
    }

    /// `V e^{A_f t} W w0`.
    pub fn state(&self, w0: &DVector<f64>, t: f64) -> DVector<f64> {
        if self.rank() == 0 {
            return DVector::zeros(w0.len());
        }
        &self.basis * ((&self.a_f * t).exp() * (&self.proj * w0))
    }
}

/// Precomputed total response `y(t) = S ξ(t) + C V e^{A_f t} q0` for one
/// plant, parameter, generator and initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseModel {
    pub steady: DMatrix<f64>,
    pub maps: SteadyStateMaps,
    pub(crate) c_basis: DMatrix<f64>,
    pub(crate) a_f: DMatrix<f64>,
    pub(crate) q0: DVector<f64>,
}

impl ResponseModel {
    pub fn new(plant: &LftPlant, theta: &ParameterVector, gen: &InputGenerator, x0: &DVector<f64>) -> Result<Self> {
        let spec = gen.decompose()?;
        Self::with_spectrum(plant, theta, gen, &spec, x0)
    }

    pub fn with_spectrum(
        plant: &LftPlant,
        theta: &ParameterVector,
        gen: &InputGenerator,
        spec: &Spectrum,
        x0: &DVector<f64>,
    ) -> Result<Self> {
        if x0.len() != plant.n_states() {
            return Err(Error::DimensionMismatch(format!(
                "x0 has length {}, expected {}",
                x0.len(),
                plant.n_states()
            )));
        }
        if gen.n_inputs() != plant.n_inputs() {
            return Err(Error::DimensionMismatch(format!(
                "generator drives {} inputs, plant has {}",
                gen.n_inputs(),
                plant.n_inputs()
            )));
        }
        let sys = plant.assemble(theta)?;
        let e = &plant.base().e;
        let maps = steady_maps_for(e, &sys, gen, spec, plant.tolerances())?;
        let steady = &sys.c * &maps.x + &sys.d * gen.pi_out();
        let prop = TransientPropagator::new(e, &sys.a)?;
        let w0 = x0 - &maps.x * gen.xi0();
        Ok(Self {
            steady,
            c_basis: &sys.c * &prop.basis,
            q0: &prop.proj * w0,
            a_f: prop.a_f,
            maps,
        })
    }

    pub fn transient_at(&self, t: f64) -> DVector<f64> {
        if self.q0.is_empty() {
            return DVector::zeros(self.c_basis.nrows());
        }
        &self.c_basis * ((&self.a_f * t).exp() * &self.q0)
    }

    pub fn output_at(&self, xi_t: &DVector<f64>, t: f64) -> DVector<f64> {
        &self.steady * xi_t + self.transient_at(t)
    }
}

pub fn transient_output(
    plant: &LftPlant,
    theta: &ParameterVector,
    x0: &DVector<f64>,
    gen: &InputGenerator,
    t: f64,
) -> Result<DVector<f64>> {
    Ok(ResponseModel::new(plant, theta, gen, x0)?.transient_at(t))
}

pub fn simulate_samples(
    plant: &LftPlant,
    theta: &ParameterVector,
    x0: &DVector<f64>,
    gen: &InputGenerator,
    times: &[f64],
    sigma: f64,
    seed: u64,
) -> Result<SampleSet> {
    check_times(times)?;
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidInput(format!("noise sigma {sigma} must be finite and non-negative")));
    }
    let model = ResponseModel::new(plant, theta, gen, x0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let measurements = times
        .iter()
        .map(|&t| {
            let mut y = model.output_at(&gen.state_at(t), t);
            for v in y.iter_mut() {
                let n: f64 = StandardNormal.sample(&mut rng);
                *v += sigma * n;
            }
            y
        })
        .collect();
    Ok(SampleSet {
        times: times.to_vec(),
        measurements,
        noise_sigma: sigma,
        seed,
    })
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidInput("sampling instants must be finite and non-negative".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("sampling instants must be strictly increasing".into()));
    }
    Ok(())
}

/// `[H π̄_1, H π̄_2 + H' π̄_1, …, Σ_k H^{(k)} π̄_{i-k} / k!] T^{-1}`.
pub fn steady_matrix_jordan(plant: &LftPlant, theta: &ParameterVector, jgen: &JordanGenerator) -> Result<DMatrix<f64>> {
    let n = jgen.order();
    let sys = plant.assemble(theta)?;
    let s = Complex64::new(jgen.lambda_r, 0.0);
    let e = &plant.base().e;
    let mut derivs = Vec::with_capacity(n);
    let mut fact = 1.0;
    for k in 0..n {
        if k > 0 {
            fact *= k as f64;
        }
        derivs.push(re(&sys.tfm_derivative(e, s, k, plant.tolerances())?) / fact);
    }
    let pi_bar = &jgen.pi_out * &jgen.t;
    let mut out = DMatrix::zeros(plant.n_outputs(), n);
    for i in 0..n {
        let mut col = DVector::zeros(plant.n_outputs());
        for (k, d) in derivs.iter().enumerate().take(i + 1) {
            col += d * pi_bar.column(i - k);
        }
        out.set_column(i, &col);
    }
    let t_inv = jgen.t.clone().try_inverse().ok_or(Error::SingularT)?;
    Ok(out * t_inv)
}

/// `H π` assembled from real and imaginary parts:
/// `(H^r π^r - H^i π^i) + j (H^r π^i + H^i π^r)`.
///
/// Passing the conjugate of `H(σ + jω)` yields `H(σ - jω)(π^r + jπ^i)`.
pub fn tangential_value(h: &CMatrix, pi: &CVector) -> Result<CVector> {
    if h.ncols() != pi.len() {
        return Err(Error::DimensionMismatch(format!(
            "H has {} columns, direction has length {}",
            h.ncols(),
            pi.len()
        )));
    }
    let (hr, hi) = (re(h), im(h));
    let pr = pi.map(|z| z.re);
    let pim = pi.map(|z| z.im);
    let real = &hr * &pr - &hi * &pim;
    let imag = &hr * &pim + &hi * &pr;
    Ok(real.zip_map(&imag, Complex64::new))
}

impl SampleSet {
    pub fn new(times: Vec<f64>, measurements: Vec<DVector<f64>>, noise_sigma: f64, seed: u64) -> Result<Self> {
        check_times(&times)?;
        if times.len() != measurements.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} instants but {} measurements",
                times.len(),
                measurements.len()
            )));
        }
        if let Some(first) = measurements.first() {
            if measurements.iter().any(|m| m.len() != first.len()) {
                return Err(Error::DimensionMismatch("measurements differ in length".into()));
            }
        }
        Ok(Self {
            times,
            measurements,
            noise_sigma,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_outputs(&self) -> usize {
        self.measurements.first().map_or(0, |m| m.len())
    }

    /// Samples taken at or after `t_min`.
    pub fn from_time(&self, t_min: f64) -> SampleSet {
        let keep: Vec<usize> = (0..self.len()).filter(|&k| self.times[k] >= t_min).collect();
        SampleSet {
            times: keep.iter().map(|&k| self.times[k]).collect(),
            measurements: keep.iter().map(|&k| self.measurements[k].clone()).collect(),
            noise_sigma: self.noise_sigma,
            seed: self.seed,
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut header = String::from("t");
        for i in 1..=self.n_outputs() {
            header.push_str(&format!(",y_{i}"));
        }
        writeln!(w, "{header}")?;
        for (t, y) in self.times.iter().zip(&self.measurements) {
            let mut line = format!("{t:.16e}");
            for v in y.iter() {
                line.push_str(&format!(",{v:.16e}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> std::result::Result<SampleSet, String> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| "empty sample file".to_string())?
            .map_err(|e| e.to_string())?;
        let cols = header.split(',').count();
        if cols < 2 || header.split(',').next().map(str::trim) != Some("t") {
            return Err(format!("bad header `{header}`"));
        }
        let mut times = Vec::new();
        let mut measurements = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| e.to_string())?;
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| format!("line {}: {e}", i + 2))?;
            if vals.len() != cols {
                return Err(format!("line {}: expected {cols} fields, found {}", i + 2, vals.len()));
            }
            times.push(vals[0]);
            measurements.push(DVector::from_column_slice(&vals[1..]));
        }
        SampleSet::new(times, measurements, f64::NAN, 0).map_err(|e| e.to_string())
    }
}
