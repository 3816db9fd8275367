//! Autonomous input-generating system `ξ' = Ξ ξ`, `u = Π ξ`, and its
//! spectral decomposition.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{self, to_complex, CMatrix, CVector, Tolerances};

#[derive(Debug, Clone, PartialEq)]
pub struct InputGenerator {
    xi: DMatrix<f64>,
    pi_out: DMatrix<f64>,
    xi0: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorWarning {
    /// Two eigenvalues closer than the distinctness tolerance.
    NearRepeatedEigenvalues { first: Complex64, second: Complex64 },
    /// Eigenvalue with negative real part; the generated input decays.
    NegativeRealPart { lambda: Complex64 },
}

/// Ordered eigen-decomposition `Ξ T = T Λ`.
///
/// Column order of `T`: real eigenvalues ascending, then each complex pair
/// `(t_c, conj(t_c))` for `σ + jω`, `ω > 0`, sorted by `ω` then `σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub real_eigs: Vec<f64>,
    pub complex_pairs: Vec<(f64, f64)>,
    pub t: CMatrix,
    pub t_inv: CMatrix,
    /// `Π t_i` for every column of `T`.
    pub pi_bars: Vec<CVector>,
    pub warnings: Vec<GeneratorWarning>,
}

/// Split of `T^{-1} ξ`: the real-mode entries and the first entry of each
/// conjugate pair.
#[derive(Debug, Clone, PartialEq)]
pub struct XiBar {
    pub real: Vec<f64>,
    pub complex: Vec<Complex64>,
}

impl InputGenerator {
    pub fn new(xi: DMatrix<f64>, pi_out: DMatrix<f64>, xi0: DVector<f64>) -> Result<Self> {
        let n = xi.nrows();
        if n == 0 || xi.ncols() != n {
            return Err(Error::DimensionMismatch(format!("Xi is {}x{}, expected square and non-empty", n, xi.ncols())));
        }
        if pi_out.ncols() != n || pi_out.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "Pi is {}x{}, expected m_u x {n}",
                pi_out.nrows(),
                pi_out.ncols()
            )));
        }
        if xi0.len() != n {
            return Err(Error::DimensionMismatch(format!("xi0 has length {}, expected {n}", xi0.len())));
        }
        Ok(Self { xi, pi_out, xi0 })
    }

    pub fn xi(&self) -> &DMatrix<f64> {
        &self.xi
    }

    pub fn pi_out(&self) -> &DMatrix<f64> {
        &self.pi_out
    }

    pub fn xi0(&self) -> &DVector<f64> {
        &self.xi0
    }

    pub fn order(&self) -> usize {
        self.xi.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.pi_out.nrows()
    }

    pub fn with_xi0(&self, xi0: DVector<f64>) -> Result<Self> {
        Self::new(self.xi.clone(), self.pi_out.clone(), xi0)
    }

    /// `ξ(t) = e^{Ξ t} ξ(0)`.
    pub fn state_at(&self, t: f64) -> DVector<f64> {
        (&self.xi * t).exp() * &self.xi0
    }

    pub fn input_at(&self, t: f64) -> DVector<f64> {
        &self.pi_out * self.state_at(t)
    }

    pub fn decompose(&self) -> Result<Spectrum> {
        decompose(self)
    }
}

fn distinct_tol(eigs: &[Complex64]) -> f64 {
    let rho = eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    1e-8 * (1.0 + rho)
}

/// Scale so the first entry that is not negligible becomes exactly one.
fn normalize(v: &mut CVector) {
    let vmax = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(pivot) = v.iter().copied().find(|z| z.norm() > 1e-8 * vmax) {
        *v /= pivot;
    }
}

/// Eigenvectors for a cluster of `k` eigenvalues centred at `lambda`.
fn cluster_vectors(xi: &DMatrix<f64>, lambda: Complex64, k: usize, real: bool) -> Result<Vec<CVector>> {
    let n = xi.nrows();
    let null_tol = f64::EPSILON.sqrt() * (1.0 + xi.norm());
    let mut vecs = Vec::with_capacity(k);
    if real {
        let m = xi - DMatrix::identity(n, n) * lambda.re;
        let svd = m.svd(false, true);
        let v_t = svd.v_t.expect("requested V");
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
        for &i in idx.iter().take(k) {
            if k > 1 && svd.singular_values[i] > null_tol {
                return Err(Error::DefectiveGenerator { lambda });
            }
            vecs.push(v_t.row(i).transpose().map(|x| Complex64::new(x, 0.0)));
        }
    } else {
        let m = to_complex(xi) - CMatrix::identity(n, n) * lambda;
        let svd = m.svd(false, true);
        let v_t = svd.v_t.expect("requested V");
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
        for &i in idx.iter().take(k) {
            if k > 1 && svd.singular_values[i] > null_tol {
                return Err(Error::DefectiveGenerator { lambda });
            }
            vecs.push(v_t.row(i).adjoint());
        }
    }
    for v in vecs.iter_mut() {
        normalize(v);
    }
    Ok(vecs)
}

/// Groups sorted values into runs whose neighbours are closer than `tol`.
fn clusters(values: &[Complex64], tol: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || (values[i] - values[i - 1]).norm() > tol {
            out.push((start, i));
            start = i;
        }
    }
    out
}

pub fn decompose(gen: &InputGenerator) -> Result<Spectrum> {
    let n = gen.order();
    let eigs: Vec<Complex64> = gen.xi.complex_eigenvalues().iter().copied().collect();
    let tol = distinct_tol(&eigs);

    let mut reals: Vec<f64> = eigs.iter().filter(|z| z.im.abs() <= tol).map(|z| z.re).collect();
    reals.sort_by(|a, b| a.total_cmp(b));
    let mut uppers: Vec<Complex64> = eigs.iter().filter(|z| z.im > tol).copied().collect();
    uppers.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    if reals.len() + 2 * uppers.len() != n {
        return Err(Error::InvalidInput("eigenvalues of Xi do not split into real values and conjugate pairs".into()));
    }

    let mut warnings = Vec::new();
    let mut all_sorted: Vec<Complex64> = eigs.clone();
    all_sorted.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    for i in 0..all_sorted.len() {
        for j in i + 1..all_sorted.len() {
            if (all_sorted[i] - all_sorted[j]).norm() <= tol {
                warnings.push(GeneratorWarning::NearRepeatedEigenvalues {
                    first: all_sorted[i],
                    second: all_sorted[j],
                });
            }
        }
    }
    for z in &eigs {
        if z.re < 0.0 && z.im >= -tol {
            warnings.push(GeneratorWarning::NegativeRealPart { lambda: *z });
        }
    }

    let mut columns: Vec<CVector> = Vec::with_capacity(n);
    let real_c: Vec<Complex64> = reals.iter().map(|&r| Complex64::new(r, 0.0)).collect();
    for (a, b) in clusters(&real_c, tol) {
        let centre = real_c[a..b].iter().sum::<Complex64>() / (b - a) as f64;
        let mut vs = cluster_vectors(&gen.xi, centre, b - a, true)?;
        for v in vs.iter_mut() {
            v.apply(|z| *z = Complex64::new(z.re, 0.0));
        }
        columns.extend(vs);
    }
    for (a, b) in clusters(&uppers, tol) {
        let centre = uppers[a..b].iter().sum::<Complex64>() / (b - a) as f64;
        for v in cluster_vectors(&gen.xi, centre, b - a, false)? {
            let conj = v.map(|z| z.conj());
            columns.push(v);
            columns.push(conj);
        }
    }

    let t = CMatrix::from_columns(&columns);
    let sv = numerics::singular_values_c(&t);
    if !Tolerances::default().has_rank(&sv, n, n, n) {
        return Err(Error::SingularT);
    }
    let t_inv = t.clone().try_inverse().ok_or(Error::SingularT)?;
    let pi_c = to_complex(&gen.pi_out);
    let pi_bars = columns.iter().map(|c| &pi_c * c).collect();
    Ok(Spectrum {
        real_eigs: reals,
        complex_pairs: uppers.iter().map(|z| (z.re, z.im)).collect(),
        t,
        t_inv,
        pi_bars,
        warnings,
    })
}

impl Spectrum {
    pub fn n_real(&self) -> usize {
        self.real_eigs.len()
    }

    pub fn n_complex(&self) -> usize {
        self.complex_pairs.len()
    }

    pub fn order(&self) -> usize {
        self.real_eigs.len() + 2 * self.complex_pairs.len()
    }

    /// Eigenvalues in the column order of `T`.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = self.real_eigs.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        for &(s, w) in &self.complex_pairs {
            out.push(Complex64::new(s, w));
            out.push(Complex64::new(s, -w));
        }
        out
    }

    /// One eigenvalue per real mode and per conjugate pair (upper member).
    pub fn representative_eigenvalues(&self) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = self.real_eigs.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        out.extend(self.complex_pairs.iter().map(|&(s, w)| Complex64::new(s, w)));
        out
    }

    /// `Π t` for the representative eigenvalues, same order.
    pub fn representative_pi_bars(&self) -> Vec<CVector> {
        let mr = self.n_real();
        let mut out: Vec<CVector> = self.pi_bars[..mr].to_vec();
        out.extend((0..self.n_complex()).map(|i| self.pi_bars[mr + 2 * i].clone()));
        out
    }

    /// Real basis `R = [t_r .., Re t_c, -Im t_c, ..]` with `Ξ = R J R^{-1}`,
    /// where each complex pair contributes the block `[[σ, -ω], [ω, σ]]` to `J`.
    pub fn real_modal_basis(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = self.order();
        let mr = self.n_real();
        let mut r = DMatrix::zeros(n, n);
        let mut j = DMatrix::zeros(n, n);
        for i in 0..mr {
            r.set_column(i, &self.t.column(i).map(|z| z.re));
            j[(i, i)] = self.real_eigs[i];
        }
        for (c, &(s, w)) in self.complex_pairs.iter().enumerate() {
            let k = mr + 2 * c;
            let col = self.t.column(k);
            r.set_column(k, &col.map(|z| z.re));
            r.set_column(k + 1, &col.map(|z| -z.im));
            j[(k, k)] = s;
            j[(k, k + 1)] = -w;
            j[(k + 1, k)] = w;
            j[(k + 1, k + 1)] = s;
        }
        (r, j)
    }
}

/// Splits `T^{-1} ξ` into real-mode and complex-pair components.
pub fn xi_bar_components(spec: &Spectrum, xi_t: &DVector<f64>) -> Result<XiBar> {
    let z = &spec.t_inv * to_complex(&DMatrix::from_column_slice(xi_t.len(), 1, xi_t.as_slice()));
    let mr = spec.n_real();
    let mut real = Vec::with_capacity(mr);
    for i in 0..mr {
        let v = z[(i, 0)];
        if v.im.abs() > 1e-8 * (1.0 + v.re.abs()) {
            return Err(Error::ComponentNotReal { index: i, imag: v.im });
        }
        real.push(v.re);
    }
    let complex = (0..spec.n_complex()).map(|c| z[(mr + 2 * c, 0)]).collect();
    Ok(XiBar { real, complex })
}

impl XiBar {
    /// Stacked components with the conjugates restored, in `T` column order.
    pub fn stacked(&self) -> CVector {
        let mut out: Vec<Complex64> = self.real.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        for z in &self.complex {
            out.push(*z);
            out.push(z.conj());
        }
        CVector::from_vec(out)
    }
}
