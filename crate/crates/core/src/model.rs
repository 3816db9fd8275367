//! LFT-structured descriptor plant.
//!
//! The plant is `E x' = A(θ) x + B(θ) u`, `y = C(θ) x + D(θ) u`, where the
//! system matrices are a linear fractional transformation of the base
//! matrices and `P(θ) = Σ θ_i P_i`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::ComputeEigenvectors;
use faer::linalg::gevd;
use faer::Par;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::{self, to_complex, CMatrix, Tolerances};

/// Base matrices of the plant before the parameter feedback is closed.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseMatrices {
    pub e: DMatrix<f64>,
    pub a_xx: DMatrix<f64>,
    pub b_xu: DMatrix<f64>,
    pub b_xv: DMatrix<f64>,
    pub c_yx: DMatrix<f64>,
    pub c_zx: DMatrix<f64>,
    pub d_zu: DMatrix<f64>,
    pub d_zv: DMatrix<f64>,
    pub d_yu: DMatrix<f64>,
    pub d_yv: DMatrix<f64>,
}

/// Known structural data of the plant: base matrices, parameter basis and
/// the admissible parameter box.
#[derive(Debug, Clone, PartialEq)]
pub struct LftPlant {
    base: BaseMatrices,
    basis: Vec<DMatrix<f64>>,
    theta_box: Vec<(f64, f64)>,
    tol: Tolerances,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector(DVector<f64>);

impl ParameterVector {
    pub fn new(theta: DVector<f64>) -> Self {
        Self(theta)
    }

    pub fn from_slice(theta: &[f64]) -> Self {
        Self(DVector::from_column_slice(theta))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DVector::zeros(n))
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Closed-loop system matrices for one parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrices {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

/// Parameter-independent auxiliary transfer matrices evaluated at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxTfm {
    pub yv: CMatrix,
    pub yu: CMatrix,
    pub zv: CMatrix,
    pub zu: CMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub regular: bool,
    pub qz_regular: bool,
    pub probe_regular: bool,
    pub well_posed: bool,
    pub well_posed_sigma_min: f64,
    pub stable: bool,
    pub finite_eigenvalues: Vec<Complex64>,
    pub infinite_eigenvalues: usize,
    pub theta_in_box: bool,
}

/// Generalized eigenvalues of a real pencil `(E, A)`, i.e. the roots of
/// `det(sE - A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PencilSpectrum {
    pub finite: Vec<Complex64>,
    pub infinite: usize,
    pub indeterminate: usize,
}

pub fn pencil_spectrum(e: &DMatrix<f64>, a: &DMatrix<f64>) -> PencilSpectrum {
    let n = e.nrows();
    if n == 0 {
        return PencilSpectrum {
            finite: Vec::new(),
            infinite: 0,
            indeterminate: 0,
        };
    }
    let mut fa = faer::Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)]);
    let mut fe = faer::Mat::<f64>::from_fn(n, n, |i, j| e[(i, j)]);
    let mut s_re = faer::diag::Diag::<f64>::zeros(n);
    let mut s_im = faer::diag::Diag::<f64>::zeros(n);
    let mut beta = faer::diag::Diag::<f64>::zeros(n);
    let req = gevd::gevd_scratch::<f64>(n, ComputeEigenvectors::No, ComputeEigenvectors::No, Par::Seq, Default::default())
        .and(faer::linalg::temp_mat_scratch::<f64>(n, 4 * n));
    let mut buf = MemBuffer::new(req);
    let status = gevd::gevd_real(
        fa.as_mut(),
        fe.as_mut(),
        s_re.as_mut(),
        s_im.as_mut(),
        beta.as_mut(),
        None,
        None,
        Par::Seq,
        MemStack::new(&mut buf),
        Default::default(),
    );
    if status.is_err() {
        return PencilSpectrum {
            finite: Vec::new(),
            infinite: 0,
            indeterminate: n,
        };
    }
    let small = 100.0 * n as f64 * f64::EPSILON;
    let a_scale = small * a.norm();
    let e_scale = small * e.norm();
    let alphas: Vec<Complex64> = (0..n).map(|i| Complex64::new(s_re[i], s_im[i])).collect();
    let betas: Vec<Complex64> = (0..n).map(|i| Complex64::new(beta[i], 0.0)).collect();
    let mut out = PencilSpectrum {
        finite: Vec::new(),
        infinite: 0,
        indeterminate: 0,
    };
    for (alpha, beta) in alphas.into_iter().zip(betas) {
        let beta_small = beta.norm() <= e_scale;
        if alpha.norm() <= a_scale && beta_small {
            out.indeterminate += 1;
        } else if beta_small {
            out.infinite += 1;
        } else {
            out.finite.push(alpha / beta);
        }
    }
    out.finite.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    out
}

fn dims_err(what: &str, got: (usize, usize), want: (usize, usize)) -> Error {
    Error::DimensionMismatch(format!("{what} is {}x{}, expected {}x{}", got.0, got.1, want.0, want.1))
}

impl LftPlant {
    pub fn new(base: BaseMatrices, basis: Vec<DMatrix<f64>>, theta_box: Vec<(f64, f64)>) -> Result<Self> {
        let mx = base.e.nrows();
        let mu = base.b_xu.ncols();
        let mv = base.b_xv.ncols();
        let my = base.c_yx.nrows();
        let mz = base.c_zx.nrows();
        if mx == 0 {
            return Err(Error::InvalidInput("state dimension must be positive".into()));
        }
        let expect = [
            ("E", &base.e, (mx, mx)),
            ("A_xx", &base.a_xx, (mx, mx)),
            ("B_xu", &base.b_xu, (mx, mu)),
            ("B_xv", &base.b_xv, (mx, mv)),
            ("C_yx", &base.c_yx, (my, mx)),
            ("C_zx", &base.c_zx, (mz, mx)),
            ("D_zu", &base.d_zu, (mz, mu)),
            ("D_zv", &base.d_zv, (mz, mv)),
            ("D_yu", &base.d_yu, (my, mu)),
            ("D_yv", &base.d_yv, (my, mv)),
        ];
        for (name, m, want) in expect {
            if m.shape() != want {
                return Err(dims_err(name, m.shape(), want));
            }
        }
        if basis.is_empty() {
            return Err(Error::InvalidInput("parameter basis is empty".into()));
        }
        for (i, p) in basis.iter().enumerate() {
            if p.shape() != (mv, mz) {
                return Err(dims_err(&format!("P[{}]", i + 1), p.shape(), (mv, mz)));
            }
        }
        if theta_box.len() != basis.len() {
            return Err(Error::DimensionMismatch(format!(
                "theta_box has {} intervals for {} parameters",
                theta_box.len(),
                basis.len()
            )));
        }
        for (i, &(lo, hi)) in theta_box.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidInput(format!("theta_box[{}] = [{lo}, {hi}] is not a bounded interval", i + 1)));
            }
        }
        Ok(Self {
            base,
            basis,
            theta_box,
            tol: Tolerances::default(),
        })
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn base(&self) -> &BaseMatrices {
        &self.base
    }

    pub fn basis(&self) -> &[DMatrix<f64>] {
        &self.basis
    }

    pub fn theta_box(&self) -> &[(f64, f64)] {
        &self.theta_box
    }

    pub fn n_states(&self) -> usize {
        self.base.e.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.base.b_xu.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.base.c_yx.nrows()
    }

    pub fn n_v(&self) -> usize {
        self.base.b_xv.ncols()
    }

    pub fn n_z(&self) -> usize {
        self.base.c_zx.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.basis.len()
    }

    pub fn in_box(&self, theta: &ParameterVector) -> bool {
        theta.len() == self.n_params()
            && theta
                .as_slice()
                .iter()
                .zip(&self.theta_box)
                .all(|(&t, &(lo, hi))| t >= lo && t <= hi)
    }

    fn check_theta(&self, theta: &ParameterVector) -> Result<()> {
        if theta.len() != self.n_params() {
            return Err(Error::DimensionMismatch(format!(
                "theta has length {}, plant has {} parameters",
                theta.len(),
                self.n_params()
            )));
        }
        Ok(())
    }

    /// `P(θ) = Σ θ_i P_i`.
    pub fn p_of(&self, theta: &ParameterVector) -> Result<DMatrix<f64>> {
        self.check_theta(theta)?;
        let mut p = DMatrix::zeros(self.n_v(), self.n_z());
        for (t, pi) in theta.as_slice().iter().zip(&self.basis) {
            p += pi * *t;
        }
        Ok(p)
    }

    /// `(I - P D_zv)^{-1} P`, the closed parameter feedback.
    fn feedback_gain(&self, theta: &ParameterVector) -> Result<DMatrix<f64>> {
        let p = self.p_of(theta)?;
        let m = DMatrix::identity(self.n_v(), self.n_v()) - &p * &self.base.d_zv;
        numerics::solve_r(&m, &p, &self.tol).map_err(|sigma_min| Error::WellPosednessViolated { sigma_min })
    }

    pub fn assemble(&self, theta: &ParameterVector) -> Result<SystemMatrices> {
        let q = self.feedback_gain(theta)?;
        let b = &self.base;
        let left_x = &b.b_xv * &q;
        let left_y = &b.d_yv * &q;
        Ok(SystemMatrices {
            a: &b.a_xx + &left_x * &b.c_zx,
            b: &b.b_xu + &left_x * &b.d_zu,
            c: &b.c_yx + &left_y * &b.c_zx,
            d: &b.d_yu + &left_y * &b.d_zu,
        })
    }

    /// `H(s, θ) = C (sE - A)^{-1} B + D` from the assembled matrices.
    pub fn eval_tfm(&self, theta: &ParameterVector, s: Complex64) -> Result<CMatrix> {
        let sys = self.assemble(theta)?;
        sys.eval_tfm(&self.base.e, s, &self.tol)
    }

    /// `H(s, θ) = G_yu + G_yv P (I - G_zv P)^{-1} G_zu`.
    pub fn eval_tfm_lft(&self, theta: &ParameterVector, s: Complex64) -> Result<CMatrix> {
        let g = self.eval_g(s)?;
        let p = to_complex(&self.p_of(theta)?);
        let m = CMatrix::identity(self.n_z(), self.n_z()) - &g.zv * &p;
        let inner = numerics::solve_c(&m, &g.zu, &self.tol).map_err(|sigma_min| Error::WellPosednessViolated { sigma_min })?;
        Ok(&g.yu + &g.yv * &p * inner)
    }

    pub fn eval_g(&self, s: Complex64) -> Result<AuxTfm> {
        let b = &self.base;
        let pencil = to_complex(&b.e) * s - to_complex(&b.a_xx);
        let rhs = numerics_hcat(&b.b_xv, &b.b_xu);
        let x = numerics::solve_c(&pencil, &to_complex(&rhs), &self.tol).map_err(|_| Error::SingularPencil { s })?;
        let mv = self.n_v();
        let xv = x.columns(0, mv).into_owned();
        let xu = x.columns(mv, self.n_inputs()).into_owned();
        let cy = to_complex(&b.c_yx);
        let cz = to_complex(&b.c_zx);
        Ok(AuxTfm {
            yv: to_complex(&b.d_yv) + &cy * &xv,
            yu: to_complex(&b.d_yu) + &cy * &xu,
            zv: to_complex(&b.d_zv) + &cz * &xv,
            zu: to_complex(&b.d_zu) + &cz * &xu,
        })
    }

    /// k-th derivative of `H(·, θ)` at `s`.
    pub fn tfm_derivative(&self, theta: &ParameterVector, s: Complex64, k: usize) -> Result<CMatrix> {
        let sys = self.assemble(theta)?;
        sys.tfm_derivative(&self.base.e, s, k, &self.tol)
    }

    pub fn check_assumptions(&self, theta: &ParameterVector) -> AssumptionReport {
        let theta_in_box = self.in_box(theta);
        let mut report = AssumptionReport {
            regular: false,
            qz_regular: false,
            probe_regular: false,
            well_posed: false,
            well_posed_sigma_min: 0.0,
            stable: false,
            finite_eigenvalues: Vec::new(),
            infinite_eigenvalues: 0,
            theta_in_box,
        };
        let sys = match self.assemble(theta) {
            Ok(sys) => sys,
            Err(Error::WellPosednessViolated { sigma_min }) => {
                report.well_posed_sigma_min = sigma_min;
                return report;
            }
            Err(_) => return report,
        };
        report.well_posed = true;
        if let Ok(p) = self.p_of(theta) {
            let m = DMatrix::identity(self.n_v(), self.n_v()) - &p * &self.base.d_zv;
            report.well_posed_sigma_min = numerics::singular_values(&m).last().copied().unwrap_or(0.0);
        }
        let spec = pencil_spectrum(&self.base.e, &sys.a);
        report.qz_regular = spec.indeterminate < self.n_states();
        report.probe_regular = probe_regular(&self.base.e, &sys.a, &self.tol);
        report.regular = report.qz_regular && report.probe_regular;
        report.infinite_eigenvalues = spec.infinite;
        report.stable = report.regular && spec.finite.iter().all(|l| l.re < 0.0);
        report.finite_eigenvalues = spec.finite;
        report
    }
}

fn numerics_hcat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Regularity witness: `sE - A` is nonsingular at one of three pseudo-random
/// complex points.
fn probe_regular(e: &DMatrix<f64>, a: &DMatrix<f64>, tol: &Tolerances) -> bool {
    let n = e.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e_ed0f_9e9c);
    let scale = 1.0 + a.norm() / (1.0 + e.norm());
    (0..3).any(|_| {
        let s = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale;
        let m = to_complex(e) * s - to_complex(a);
        let sv = numerics::singular_values_c(&m);
        tol.has_rank(&sv, n, n, n)
    })
}

impl SystemMatrices {
    pub fn eval_tfm(&self, e: &DMatrix<f64>, s: Complex64, tol: &Tolerances) -> Result<CMatrix> {
        let pencil = to_complex(e) * s - to_complex(&self.a);
        let x = numerics::solve_c(&pencil, &to_complex(&self.b), tol).map_err(|_| Error::SingularPencil { s })?;
        Ok(to_complex(&self.c) * x + to_complex(&self.d))
    }

    /// `k! C [-(sE - A)^{-1} E]^k (sE - A)^{-1} B`; `k = 0` gives `H(s)`.
    pub fn tfm_derivative(&self, e: &DMatrix<f64>, s: Complex64, k: usize, tol: &Tolerances) -> Result<CMatrix> {
        if k == 0 {
            return self.eval_tfm(e, s, tol);
        }
        let pencil = to_complex(e) * s - to_complex(&self.a);
        let ec = to_complex(e);
        let mut r = numerics::solve_c(&pencil, &to_complex(&self.b), tol).map_err(|_| Error::SingularPencil { s })?;
        let lu = pencil.lu();
        let mut fact = 1.0;
        for j in 1..=k {
            r = -lu.solve(&(&ec * &r)).ok_or(Error::SingularPencil { s })?;
            fact *= j as f64;
        }
        Ok(to_complex(&self.c) * r * Complex64::new(fact, 0.0))
    }
}
