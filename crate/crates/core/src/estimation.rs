//! Two-step least-squares identification.
//!
//! Step one estimates the stacked transfer values `H̄` at the generator
//! eigenvalues from the sampled outputs (batch or recursive). Step two
//! solves the linear system `Ψ θ = h̄` built from those values.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::igs::{xi_bar_components, InputGenerator, Spectrum};
use crate::model::{AuxTfm, LftPlant, ParameterVector};
use crate::numerics::{self, im, re, to_complex, vec_cols, CMatrix, RankCheck, Tolerances};
use crate::response::SampleSet;

/// Which generator eigenvalue a block of `H̄` (or of `Ψ`) belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BlockTag {
    Real(f64),
    /// Real part of the value at `σ + jω`.
    PairRe { sigma: f64, omega: f64 },
    /// Imaginary part of the value at `σ + jω`.
    PairIm { sigma: f64, omega: f64 },
}

fn block_tags(spec: &Spectrum) -> Vec<BlockTag> {
    let mut tags: Vec<BlockTag> = spec.real_eigs.iter().map(|&l| BlockTag::Real(l)).collect();
    for &(sigma, omega) in &spec.complex_pairs {
        tags.push(BlockTag::PairRe { sigma, omega });
        tags.push(BlockTag::PairIm { sigma, omega });
    }
    tags
}

/// Regression data `Ȳ = H̄ Ū + transient + noise`, plus the raw generator
/// regressor `Ũ` used by the excitation test.
#[derive(Debug, Clone, PartialEq)]
pub struct Regression {
    pub ybar: DMatrix<f64>,
    pub ubar: DMatrix<f64>,
    pub utilde: DMatrix<f64>,
    pub tags: Vec<BlockTag>,
    pub tol: Tolerances,
}

impl Regression {
    pub fn len(&self) -> usize {
        self.ybar.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.ybar.ncols() == 0
    }

    /// Columns `first..first+count` as a new regression.
    pub fn columns(&self, first: usize, count: usize) -> Regression {
        Regression {
            ybar: self.ybar.columns(first, count).into_owned(),
            ubar: self.ubar.columns(first, count).into_owned(),
            utilde: self.utilde.columns(first, count).into_owned(),
            tags: self.tags.clone(),
            tol: self.tol,
        }
    }
}

/// Auxiliary transfer values at one eigenvalue per real mode and per pair.
pub fn g_at_eigenvalues(plant: &LftPlant, spec: &Spectrum) -> Result<Vec<AuxTfm>> {
    spec.representative_eigenvalues()
        .into_iter()
        .map(|l| {
            plant.eval_g(l).map_err(|e| match e {
                Error::SingularPencil { s } => Error::GeneratorEigenvalueIsPole { lambda: s },
                other => other,
            })
        })
        .collect()
}

pub fn build_regression(plant: &LftPlant, gen: &InputGenerator, samples: &SampleSet) -> Result<Regression> {
    let spec = gen.decompose()?;
    build_regression_with(plant, gen, &spec, samples)
}

pub fn build_regression_with(
    plant: &LftPlant,
    gen: &InputGenerator,
    spec: &Spectrum,
    samples: &SampleSet,
) -> Result<Regression> {
    let (my, mz, mu) = (plant.n_outputs(), plant.n_z(), plant.n_inputs());
    if gen.n_inputs() != mu {
        return Err(Error::DimensionMismatch(format!(
            "generator drives {} inputs, plant has {mu}",
            gen.n_inputs()
        )));
    }
    if !samples.is_empty() && samples.n_outputs() != my {
        return Err(Error::DimensionMismatch(format!(
            "samples have {} outputs, plant has {my}",
            samples.n_outputs()
        )));
    }
    let g = g_at_eigenvalues(plant, spec)?;
    let mr = spec.n_real();
    let mc = spec.n_complex();
    let blocks = mr + 2 * mc;
    let pis = spec.representative_pi_bars();
    // G_yu π̄ and G_zu π̄ for each representative eigenvalue
    let gyu_pi: Vec<_> = g.iter().zip(&pis).map(|(gi, p)| &gi.yu * p).collect();
    let gzu_pi: Vec<_> = g.iter().zip(&pis).map(|(gi, p)| &gi.zu * p).collect();

    let n = samples.len();
    let mut ybar = DMatrix::zeros(my, n);
    let mut ubar = DMatrix::zeros(blocks * mz, n);
    let mut utilde = DMatrix::zeros(blocks * mu, n);
    for (k, (&t, y)) in samples.times.iter().zip(&samples.measurements).enumerate() {
        let xb = xi_bar_components(spec, &gen.state_at(t))?;
        let mut yk = y.clone();
        for i in 0..mr {
            let c = xb.real[i];
            yk -= gyu_pi[i].map(|z| z.re) * c;
            ubar.view_mut((i * mz, k), (mz, 1)).copy_from(&(gzu_pi[i].map(|z| z.re) * c));
            utilde.view_mut((i * mu, k), (mu, 1)).copy_from(&(pis[i].map(|z| z.re) * c));
        }
        for c in 0..mc {
            let j = mr + c;
            let xc = xb.complex[c];
            yk -= (&gyu_pi[j] * xc).map(|z| 2.0 * z.re);
            let v = &gzu_pi[j] * xc;
            let row = (mr + 2 * c) * mz;
            ubar.view_mut((row, k), (mz, 1)).copy_from(&v.map(|z| 2.0 * z.re));
            ubar.view_mut((row + mz, k), (mz, 1)).copy_from(&v.map(|z| -2.0 * z.im));
            let w = &pis[j] * xc;
            let row = (mr + 2 * c) * mu;
            utilde.view_mut((row, k), (mu, 1)).copy_from(&w.map(|z| z.re));
            utilde.view_mut((row + mu, k), (mu, 1)).copy_from(&w.map(|z| z.im));
        }
        ybar.set_column(k, &yk);
    }
    Ok(Regression {
        ybar,
        ubar,
        utilde,
        tags: block_tags(spec),
        tol: *plant.tolerances(),
    })
}

/// Nonparametric estimate of the stacked transfer values with the inverse
/// Gram matrix that drives the recursive update.
#[derive(Debug, Clone, PartialEq)]
pub struct TfmEstimate {
    pub hbar: DMatrix<f64>,
    pub phi: DMatrix<f64>,
    pub n: usize,
    pub tags: Vec<BlockTag>,
}

impl TfmEstimate {
    pub fn block_width(&self) -> usize {
        self.hbar.ncols() / self.tags.len().max(1)
    }

    pub fn block(&self, i: usize) -> DMatrix<f64> {
        let w = self.block_width();
        self.hbar.columns(i * w, w).into_owned()
    }
}

pub fn estimate_tfm(reg: &Regression) -> Result<TfmEstimate> {
    let rank = numerics::full_row_rank(&reg.ubar, &reg.tol);
    if !rank.full {
        return Err(Error::NotPersistentlyExciting {
            sigma_min: rank.sigma_min,
        });
    }
    let lhs = reg.ubar.transpose();
    let svd = lhs.svd(true, true);
    let hbar_t = svd
        .solve(&reg.ybar.transpose(), 0.0)
        .map_err(|_| Error::NotPersistentlyExciting {
            sigma_min: rank.sigma_min,
        })?;
    let gram = &reg.ubar * reg.ubar.transpose();
    let phi = gram
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(Error::NotPersistentlyExciting {
            sigma_min: rank.sigma_min,
        })?;
    Ok(TfmEstimate {
        hbar: hbar_t.transpose(),
        phi,
        n: reg.len(),
        tags: reg.tags.clone(),
    })
}

/// Rank-one recursive least-squares update with one new regression column.
pub fn update_tfm(est: &TfmEstimate, y_new: &DVector<f64>, u_new: &DVector<f64>) -> TfmEstimate {
    let phi_u = &est.phi * u_new;
    let denom = 1.0 + u_new.dot(&phi_u);
    let innovation = y_new - &est.hbar * u_new;
    TfmEstimate {
        hbar: &est.hbar + innovation * phi_u.transpose() / denom,
        phi: &est.phi - &phi_u * phi_u.transpose() / denom,
        n: est.n + 1,
        tags: est.tags.clone(),
    }
}

/// `Ψ θ = h̄ + e` and the factors `Ψ_g`, `Ψ_p` of its noise-free part.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricSystem {
    pub psi: DMatrix<f64>,
    pub hbar: DVector<f64>,
    /// Columns `vec(P_k)`.
    pub psi_p: DMatrix<f64>,
    /// Built at `reference_theta`, when one was supplied.
    pub psi_g: Option<DMatrix<f64>>,
    pub reference_theta: Option<ParameterVector>,
}

fn kron_identity(n: usize, m: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::<f64>::identity(n, n).kronecker(m)
}

pub fn build_parametric(
    plant: &LftPlant,
    spec: &Spectrum,
    est: &TfmEstimate,
    reference_theta: Option<&ParameterVector>,
) -> Result<ParametricSystem> {
    let g = g_at_eigenvalues(plant, spec)?;
    let (my, mz, mv) = (plant.n_outputs(), plant.n_z(), plant.n_v());
    let mr = spec.n_real();
    let mc = spec.n_complex();
    let blocks = mr + 2 * mc;
    if est.hbar.shape() != (my, blocks * mz) {
        return Err(Error::DimensionMismatch(format!(
            "estimate is {}x{}, expected {my}x{}",
            est.hbar.nrows(),
            est.hbar.ncols(),
            blocks * mz
        )));
    }
    let basis = plant.basis();
    let mt = basis.len();
    let bsize = my * mz;
    let mut psi = DMatrix::zeros(blocks * bsize, mt);
    let mut hbar = DVector::zeros(blocks * bsize);

    let mut fill = |row_block: usize, left: &DMatrix<f64>, h: &DMatrix<f64>| {
        for (k, p) in basis.iter().enumerate() {
            psi.view_mut((row_block * bsize, k), (bsize, 1)).copy_from(&vec_cols(&(left * p)));
        }
        hbar.rows_mut(row_block * bsize, bsize).copy_from(&vec_cols(h));
    };
    for (i, gi) in g.iter().enumerate().take(mr) {
        let h = est.block(i);
        let left = re(&gi.yv) + &h * re(&gi.zv);
        fill(i, &left, &h);
    }
    for c in 0..mc {
        let gi = &g[mr + c];
        let b = mr + 2 * c;
        let hr = est.block(b);
        let hi = est.block(b + 1);
        let (gyv_r, gyv_i, gzv_r, gzv_i) = (re(&gi.yv), im(&gi.yv), re(&gi.zv), im(&gi.zv));
        let left_re = &gyv_r + &hr * &gzv_r - &hi * &gzv_i;
        let left_im = &gyv_i + &hr * &gzv_i + &hi * &gzv_r;
        fill(b, &left_re, &hr);
        fill(b + 1, &left_im, &hi);
    }

    let psi_p = DMatrix::from_columns(&basis.iter().map(vec_cols).collect::<Vec<_>>());
    let psi_g = match reference_theta {
        None => None,
        Some(theta) => {
            let p = to_complex(&plant.p_of(theta)?);
            let mut pg = DMatrix::zeros(blocks * bsize, mv * mz);
            for (j, gi) in g.iter().enumerate() {
                let m = CMatrix::identity(mv, mv) - &p * &gi.zv;
                let m_inv = numerics::solve_c(&m, &CMatrix::identity(mv, mv), plant.tolerances())
                    .map_err(|sigma_min| Error::WellPosednessViolated { sigma_min })?;
                let w = &gi.yv * m_inv;
                if j < mr {
                    pg.view_mut((j * bsize, 0), (bsize, mv * mz)).copy_from(&kron_identity(mz, &re(&w)));
                } else {
                    let b = mr + 2 * (j - mr);
                    pg.view_mut((b * bsize, 0), (bsize, mv * mz)).copy_from(&kron_identity(mz, &re(&w)));
                    pg.view_mut(((b + 1) * bsize, 0), (bsize, mv * mz)).copy_from(&kron_identity(mz, &im(&w)));
                }
            }
            Some(pg)
        }
    };
    Ok(ParametricSystem {
        psi,
        hbar,
        psi_p,
        psi_g,
        reference_theta: reference_theta.cloned(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaEstimate {
    pub theta: ParameterVector,
    pub residual_norm: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

/// Least-squares solution of `Ψ θ = h̄` through the SVD of `Ψ`.
pub fn estimate_theta(ps: &ParametricSystem, tol: &Tolerances) -> Result<ThetaEstimate> {
    let (rows, cols) = ps.psi.shape();
    let svd = ps.psi.clone().svd(true, true);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let sigma_min = if rows >= cols { sv.get(cols - 1).copied().unwrap_or(0.0) } else { 0.0 };
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    if !tol.has_rank(&sv, rows, cols, cols) {
        return Err(Error::NotIdentifiableFromData { sigma_min });
    }
    let theta = svd
        .solve(&ps.hbar, 0.0)
        .map_err(|_| Error::NotIdentifiableFromData { sigma_min })?;
    let residual_norm = (&ps.psi * &theta - &ps.hbar).norm();
    Ok(ThetaEstimate {
        theta: ParameterVector::new(theta),
        residual_norm,
        sigma_min,
        sigma_max,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationReport {
    pub gzu_block: DMatrix<f64>,
    pub gzu_frr: RankCheck,
    /// Orthonormal right null-space basis of `gzu_block`.
    pub gzu_null: DMatrix<f64>,
    pub ubar_frr: RankCheck,
    pub augmented_frr: RankCheck,
    /// Smallest eigenvalue of `Ũ Ũᵀ`.
    pub fs_n: f64,
    /// `|Ū - D G_zu Ũ| / |Ū|` with `D` doubling the complex-pair rows.
    pub ubar_factor_residual: f64,
    pub psi_fcr: Option<RankCheck>,
    pub identifiable_at_theta: Option<RankCheck>,
    pub n_samples: usize,
}

impl ExcitationReport {
    pub fn excitation_passes(&self) -> bool {
        self.gzu_frr.full && self.augmented_frr.full
    }

    /// Flat `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        let pf = |b: bool| if b { "PASS" } else { "FAIL" }.to_string();
        kv("n_samples", self.n_samples.to_string());
        kv("gzu_frr", pf(self.gzu_frr.full));
        kv("gzu_sigma_min", format!("{:.6e}", self.gzu_frr.sigma_min));
        kv("gzu_null_dim", self.gzu_null.ncols().to_string());
        kv("augmented_frr", pf(self.augmented_frr.full));
        kv("augmented_sigma_min", format!("{:.6e}", self.augmented_frr.sigma_min));
        kv("ubar_frr", pf(self.ubar_frr.full));
        kv("ubar_sigma_min", format!("{:.6e}", self.ubar_frr.sigma_min));
        kv("fs_n", format!("{:.6e}", self.fs_n));
        kv("ubar_factor_residual", format!("{:.3e}", self.ubar_factor_residual));
        if let Some(r) = self.psi_fcr {
            kv("psi_fcr", pf(r.full));
            kv("psi_sigma_min", format!("{:.6e}", r.sigma_min));
        }
        if let Some(r) = self.identifiable_at_theta {
            kv("identifiable_at_theta", pf(r.full));
            kv("psi_g_psi_p_sigma_min", format!("{:.6e}", r.sigma_min));
        }
        out
    }
}

/// Block-diagonal `G_zu` at the generator eigenvalues: `G_zu(λ)` for real
/// modes and `[[G^r, -G^i], [-G^i, -G^r]]` for each complex pair.
pub fn gzu_block(plant: &LftPlant, spec: &Spectrum) -> Result<DMatrix<f64>> {
    let g = g_at_eigenvalues(plant, spec)?;
    let (mz, mu) = (plant.n_z(), plant.n_inputs());
    let mr = spec.n_real();
    let blocks = mr + 2 * spec.n_complex();
    let mut out = DMatrix::zeros(blocks * mz, blocks * mu);
    for (j, gi) in g.iter().enumerate() {
        let (gr, gim) = (re(&gi.zu), im(&gi.zu));
        if j < mr {
            out.view_mut((j * mz, j * mu), (mz, mu)).copy_from(&gr);
        } else {
            let b = mr + 2 * (j - mr);
            out.view_mut((b * mz, b * mu), (mz, mu)).copy_from(&gr);
            out.view_mut((b * mz, (b + 1) * mu), (mz, mu)).copy_from(&(-&gim));
            out.view_mut(((b + 1) * mz, b * mu), (mz, mu)).copy_from(&(-&gim));
            out.view_mut(((b + 1) * mz, (b + 1) * mu), (mz, mu)).copy_from(&(-&gr));
        }
    }
    Ok(out)
}

/// Row scaling that doubles the complex-pair rows of `Ū`.
pub fn pair_doubling(spec: &Spectrum, width: usize) -> DMatrix<f64> {
    let mr = spec.n_real();
    let blocks = mr + 2 * spec.n_complex();
    let diag = DVector::from_fn(blocks * width, |i, _| if i / width < mr { 1.0 } else { 2.0 });
    DMatrix::from_diagonal(&diag)
}

pub fn check_excitation(
    plant: &LftPlant,
    spec: &Spectrum,
    reg: &Regression,
    ps: Option<&ParametricSystem>,
) -> Result<ExcitationReport> {
    let tol = plant.tolerances();
    let block = gzu_block(plant, spec)?;
    let gzu_frr = numerics::full_row_rank(&block, tol);
    let null = numerics::right_null_space(&block, tol);
    let mut stacked = DMatrix::zeros(reg.utilde.nrows(), reg.utilde.ncols() + null.ncols());
    stacked.columns_mut(0, reg.utilde.ncols()).copy_from(&reg.utilde);
    stacked.columns_mut(reg.utilde.ncols(), null.ncols()).copy_from(&null);
    let augmented_frr = numerics::full_row_rank(&stacked, tol);
    let ubar_frr = numerics::full_row_rank(&reg.ubar, tol);
    let gram = &reg.utilde * reg.utilde.transpose();
    let fs_n = if gram.nrows() == 0 {
        0.0
    } else {
        gram.symmetric_eigenvalues().min().max(0.0)
    };
    let predicted = pair_doubling(spec, plant.n_z()) * &block * &reg.utilde;
    let ubar_factor_residual = numerics::rel_diff(&predicted, &reg.ubar);
    let (psi_fcr, identifiable_at_theta) = match ps {
        None => (None, None),
        Some(ps) => (
            Some(numerics::full_col_rank(&ps.psi, tol)),
            ps.psi_g.as_ref().map(|g| numerics::full_col_rank(&(g * &ps.psi_p), tol)),
        ),
    };
    Ok(ExcitationReport {
        gzu_block: block,
        gzu_frr,
        gzu_null: null,
        ubar_frr,
        augmented_frr,
        fs_n,
        ubar_factor_residual,
        psi_fcr,
        identifiable_at_theta,
        n_samples: reg.len(),
    })
}

/// Output of the full two-step identification.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub theta: ParameterVector,
    pub tfm: TfmEstimate,
    pub parametric: ParametricSystem,
    pub excitation: ExcitationReport,
    pub residual_norm: f64,
    pub psi_sigma_min: f64,
}

/// Runs both estimation steps. `reference_theta` enables the
/// identifiability-at-θ check; without it the estimate itself is used.
pub fn identify(
    plant: &LftPlant,
    gen: &InputGenerator,
    samples: &SampleSet,
    reference_theta: Option<&ParameterVector>,
) -> Result<EstimateResult> {
    let spec = gen.decompose()?;
    let reg = build_regression_with(plant, gen, &spec, samples)?;
    let tfm = estimate_tfm(&reg)?;
    let ps = build_parametric(plant, &spec, &tfm, None)?;
    let th = estimate_theta(&ps, plant.tolerances())?;
    let audit_theta = reference_theta.cloned().unwrap_or_else(|| th.theta.clone());
    let ps_audit = build_parametric(plant, &spec, &tfm, Some(&audit_theta)).unwrap_or(ps);
    let excitation = check_excitation(plant, &spec, &reg, Some(&ps_audit))?;
    Ok(EstimateResult {
        theta: th.theta,
        tfm,
        parametric: ps_audit,
        excitation,
        residual_norm: th.residual_norm,
        psi_sigma_min: th.sigma_min,
    })
}

/// Stacked `H̄(θ)` computed from the plant, in the block layout of
/// [`TfmEstimate::hbar`].
pub fn true_hbar(plant: &LftPlant, spec: &Spectrum, theta: &ParameterVector) -> Result<DMatrix<f64>> {
    let g = g_at_eigenvalues(plant, spec)?;
    let (my, mz) = (plant.n_outputs(), plant.n_z());
    let mr = spec.n_real();
    let blocks = mr + 2 * spec.n_complex();
    let p = to_complex(&plant.p_of(theta)?);
    let mut out = DMatrix::zeros(my, blocks * mz);
    for (j, gi) in g.iter().enumerate() {
        let m = CMatrix::identity(mz, mz) - &gi.zv * &p;
        let inv = numerics::solve_c(&m, &CMatrix::identity(mz, mz), plant.tolerances())
            .map_err(|sigma_min| Error::WellPosednessViolated { sigma_min })?;
        let h = &gi.yv * &p * inv;
        if j < mr {
            out.columns_mut(j * mz, mz).copy_from(&re(&h));
        } else {
            let b = mr + 2 * (j - mr);
            out.columns_mut(b * mz, mz).copy_from(&re(&h));
            out.columns_mut((b + 1) * mz, mz).copy_from(&im(&h));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_regressor_leaves_estimate_unchanged() {
        let est = TfmEstimate {
            hbar: DMatrix::from_row_slice(1, 2, &[0.3, -1.2]),
            phi: DMatrix::from_row_slice(2, 2, &[2.0, 0.1, 0.1, 1.0]),
            n: 5,
            tags: vec![BlockTag::Real(0.0), BlockTag::Real(1.0)],
        };
        let next = update_tfm(&est, &DVector::from_element(1, 4.0), &DVector::zeros(2));
        assert_eq!(next.hbar, est.hbar);
        assert_eq!(next.phi, est.phi);
    }

    #[test]
    fn zero_innovation_leaves_hbar_unchanged() {
        let est = TfmEstimate {
            hbar: DMatrix::from_row_slice(1, 2, &[0.3, -1.2]),
            phi: DMatrix::from_row_slice(2, 2, &[2.0, 0.1, 0.1, 1.0]),
            n: 5,
            tags: vec![BlockTag::Real(0.0), BlockTag::Real(1.0)],
        };
        let u = DVector::from_column_slice(&[0.7, 0.2]);
        let y = &est.hbar * &u;
        let next = update_tfm(&est, &y, &u);
        assert!((next.hbar - est.hbar).norm() < 1e-15);
    }

    #[test]
    fn square_parametric_system_is_interpolated() {
        let psi = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 3.0]);
        let h = DVector::from_column_slice(&[1.0, 6.0]);
        let ps = ParametricSystem {
            psi: psi.clone(),
            hbar: h.clone(),
            psi_p: DMatrix::identity(2, 2),
            psi_g: None,
            reference_theta: None,
        };
        let th = estimate_theta(&ps, &Tolerances::default()).unwrap();
        let direct = psi.try_inverse().unwrap() * h;
        assert!((th.theta.values() - direct).norm() < 1e-14);
    }

    #[test]
    fn duplicated_columns_are_not_identifiable() {
        let psi = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, -1.0, -1.0]);
        let ps = ParametricSystem {
            psi,
            hbar: DVector::from_element(3, 1.0),
            psi_p: DMatrix::identity(2, 2),
            psi_g: None,
            reference_theta: None,
        };
        assert!(matches!(
            estimate_theta(&ps, &Tolerances::default()),
            Err(Error::NotIdentifiableFromData { .. })
        ));
    }
}
