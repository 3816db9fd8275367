//! Small linear-algebra helpers shared by the modules: SVD rank decisions,
//! checked complex solves, real/imaginary splitting and vectorisation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Rank tolerance. A matrix is treated as rank deficient when
/// `sigma_min <= rtol * sigma_max`, where `rtol` defaults to
/// `max(rows, cols) * f64::EPSILON`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Tolerances {
    pub rank_rtol: Option<f64>,
}

impl Tolerances {
    pub fn with_rank_rtol(rtol: f64) -> Self {
        Self {
            rank_rtol: Some(rtol),
        }
    }

    pub fn rank_rtol(&self, rows: usize, cols: usize) -> f64 {
        self.rank_rtol
            .unwrap_or(rows.max(cols).max(1) as f64 * f64::EPSILON)
    }

    /// True when the descending singular values describe a matrix of
    /// rank `needed` (that is, `s[needed-1]` clears the threshold).
    pub fn has_rank(&self, svals: &[f64], rows: usize, cols: usize, needed: usize) -> bool {
        if needed == 0 {
            return true;
        }
        if svals.len() < needed {
            return false;
        }
        let smax = svals[0];
        smax > 0.0 && svals[needed - 1] > self.rank_rtol(rows, cols) * smax
    }
}

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn singular_values_c(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Rank verdict with the singular value that decided it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankCheck {
    pub full: bool,
    pub sigma_min: f64,
}

/// Full row rank test. `sigma_min` is the `rows`-th singular value, or 0
/// when there are fewer columns than rows.
pub fn full_row_rank(m: &DMatrix<f64>, tol: &Tolerances) -> RankCheck {
    rank_check(m, m.nrows(), tol)
}

pub fn full_col_rank(m: &DMatrix<f64>, tol: &Tolerances) -> RankCheck {
    rank_check(m, m.ncols(), tol)
}

fn rank_check(m: &DMatrix<f64>, needed: usize, tol: &Tolerances) -> RankCheck {
    let s = singular_values(m);
    let sigma_min = if needed == 0 {
        f64::INFINITY
    } else {
        s.get(needed - 1).copied().unwrap_or(0.0)
    };
    RankCheck {
        full: tol.has_rank(&s, m.nrows(), m.ncols(), needed),
        sigma_min,
    }
}

/// Solves `m x = rhs` after an SVD singularity check on the square `m`.
/// Returns `Err(sigma_min)` when `m` is numerically singular.
pub fn solve_c(m: &CMatrix, rhs: &CMatrix, tol: &Tolerances) -> Result<CMatrix, f64> {
    let n = m.nrows();
    let s = singular_values_c(m);
    if !tol.has_rank(&s, n, n, n) {
        return Err(s.last().copied().unwrap_or(0.0));
    }
    m.clone().lu().solve(rhs).ok_or(0.0)
}

pub fn solve_r(m: &DMatrix<f64>, rhs: &DMatrix<f64>, tol: &Tolerances) -> Result<DMatrix<f64>, f64> {
    let n = m.nrows();
    let s = singular_values(m);
    if !tol.has_rank(&s, n, n, n) {
        return Err(s.last().copied().unwrap_or(0.0));
    }
    m.clone().lu().solve(rhs).ok_or(0.0)
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn re(m: &CMatrix) -> DMatrix<f64> {
    m.map(|z| z.re)
}

pub fn im(m: &CMatrix) -> DMatrix<f64> {
    m.map(|z| z.im)
}

/// Column-major vectorisation.
pub fn vec_cols(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Orthonormal basis (as columns) of the right null space of `m`.
pub fn right_null_space(m: &DMatrix<f64>, tol: &Tolerances) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    // pad to at least square
    let padded_rows = rows.max(cols);
    let mut padded = DMatrix::zeros(padded_rows, cols);
    padded.view_mut((0, 0), (rows, cols)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let svals = svd.singular_values;
    let smax = svals.iter().copied().fold(0.0, f64::max);
    let thresh = tol.rank_rtol(rows, cols) * smax;
    let null: Vec<DVector<f64>> = (0..svals.len())
        .filter(|&i| smax == 0.0 || svals[i] <= thresh)
        .map(|i| v_t.row(i).transpose())
        .collect();
    if null.is_empty() {
        DMatrix::zeros(cols, 0)
    } else {
        DMatrix::from_columns(&null)
    }
}

/// Frobenius-norm relative difference `|a - b| / max(|b|, tiny)`.
pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let d = (a - b).norm();
    let s = b.norm();
    if s > 0.0 {
        d / s
    } else {
        d
    }
}

pub fn rel_diff_c(a: &CMatrix, b: &CMatrix) -> f64 {
    let d = (a - b).norm();
    let s = b.norm();
    if s > 0.0 {
        d / s
    } else {
        d
    }
}
