//! Independent oracles and random instance builders shared by the
//! integration tests and the acceptance suite.
#![allow(dead_code)]

use lft_ident::igs::InputGenerator;
use lft_ident::model::{BaseMatrices, LftPlant, ParameterVector};
use lft_ident::response::TransientPropagator;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

pub type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, Copy)]
pub struct Dims {
    pub mx: usize,
    pub mu: usize,
    pub my: usize,
    pub mv: usize,
    pub mz: usize,
    pub mt: usize,
    /// Rank of `E`; `mx` gives an ordinary state-space plant.
    pub rank_e: usize,
}

/// Random plant with its coordinate change: `E = M diag(I_r, 0) N`.
pub struct Instance {
    pub plant: LftPlant,
    pub theta: ParameterVector,
    pub m: DMatrix<f64>,
    pub n: DMatrix<f64>,
}

pub fn rand_mat<R: Rng>(rng: &mut R, r: usize, c: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| scale * rng.random_range(-1.0..1.0))
}

pub fn rand_vec<R: Rng>(rng: &mut R, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| scale * rng.random_range(-1.0..1.0))
}

/// Well-conditioned random matrix.
pub fn rand_invertible<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    loop {
        let m = DMatrix::identity(n, n) + rand_mat(rng, n, n, 0.5);
        let sv = m.singular_values();
        if sv.min() > 0.2 * sv.max() {
            return m;
        }
    }
}

pub fn random_dims<R: Rng>(rng: &mut R, max_x: usize, max_t: usize, allow_singular_e: bool) -> Dims {
    let mx = rng.random_range(2..=max_x);
    let rank_e = if allow_singular_e && rng.random_bool(0.4) {
        rng.random_range(1..mx)
    } else {
        mx
    };
    Dims {
        mx,
        mu: rng.random_range(1..=2),
        my: rng.random_range(1..=2),
        mv: rng.random_range(1..=3),
        mz: rng.random_range(1..=3),
        mt: rng.random_range(1..=max_t),
        rank_e,
    }
}

fn build<R: Rng>(rng: &mut R, d: Dims) -> Instance {
    let r = d.rank_e;
    let mut e0 = DMatrix::zeros(d.mx, d.mx);
    for i in 0..r {
        e0[(i, i)] = 1.0;
    }
    let mut a0 = rand_mat(rng, d.mx, d.mx, 0.8);
    for i in 0..r {
        a0[(i, i)] -= 2.5;
    }
    for i in r..d.mx {
        a0[(i, i)] = if rng.random_bool(0.5) { 2.0 } else { -2.0 };
    }
    let m = rand_invertible(rng, d.mx);
    let n = rand_invertible(rng, d.mx);
    let base = BaseMatrices {
        e: &m * e0 * &n,
        a_xx: &m * a0 * &n,
        b_xu: rand_mat(rng, d.mx, d.mu, 1.0),
        b_xv: rand_mat(rng, d.mx, d.mv, 0.6),
        c_yx: rand_mat(rng, d.my, d.mx, 1.0),
        c_zx: rand_mat(rng, d.mz, d.mx, 0.6),
        d_zu: rand_mat(rng, d.mz, d.mu, 0.5),
        d_zv: rand_mat(rng, d.mz, d.mv, 0.3),
        d_yu: rand_mat(rng, d.my, d.mu, 0.5),
        d_yv: rand_mat(rng, d.my, d.mv, 0.5),
    };
    let basis: Vec<DMatrix<f64>> = (0..d.mt).map(|_| rand_mat(rng, d.mv, d.mz, 0.4)).collect();
    let theta_box = vec![(-1.0, 1.0); d.mt];
    let theta = ParameterVector::new(rand_vec(rng, d.mt, 1.0));
    Instance {
        plant: LftPlant::new(base, basis, theta_box).expect("consistent dimensions"),
        theta,
        m,
        n,
    }
}

/// Regular, well-posed random plant (not necessarily stable).
pub fn random_regular<R: Rng>(rng: &mut R, d: Dims) -> Instance {
    loop {
        let inst = build(rng, d);
        let rep = inst.plant.check_assumptions(&inst.theta);
        if rep.regular && rep.well_posed && rep.well_posed_sigma_min > 0.05 {
            return inst;
        }
    }
}

/// Stable, regular, well-posed, index-one random plant.
pub fn random_stable<R: Rng>(rng: &mut R, d: Dims) -> Instance {
    loop {
        let inst = random_regular(rng, d);
        let rep = inst.plant.check_assumptions(&inst.theta);
        let slow = rep.finite_eigenvalues.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
        if rep.finite_eigenvalues.len() != d.rank_e || slow > -0.3 {
            continue;
        }
        let sys = inst.plant.assemble(&inst.theta).unwrap();
        if TransientPropagator::new(&inst.plant.base().e, &sys.a).is_ok() {
            return inst;
        }
    }
}

/// Generator with `n_real` real modes and `n_pairs` complex pairs, all
/// with real parts in `[-0.1, 0.1]`, in a random real basis.
pub fn random_generator<R: Rng>(rng: &mut R, mu: usize, n_real: usize, n_pairs: usize) -> InputGenerator {
    let n = n_real + 2 * n_pairs;
    let mut lam = DMatrix::zeros(n, n);
    for i in 0..n_real {
        lam[(i, i)] = rng.random_range(-0.1..-0.05) + 0.15 * i as f64;
    }
    for p in 0..n_pairs {
        let b = n_real + 2 * p;
        let sigma = rng.random_range(-0.05..0.05);
        let omega = 0.7 + 1.3 * p as f64 + rng.random_range(0.0..0.5);
        lam[(b, b)] = sigma;
        lam[(b + 1, b + 1)] = sigma;
        lam[(b, b + 1)] = omega;
        lam[(b + 1, b)] = -omega;
    }
    let t = rand_invertible(rng, n);
    let xi = &t * lam * t.clone().try_inverse().unwrap();
    let pi = rand_mat(rng, mu, n, 1.0);
    let xi0 = rand_vec(rng, n, 1.0);
    InputGenerator::new(xi, pi, xi0).unwrap()
}

/// `X` solving `E X Ξ - A X = B Π` by brute-force vectorization.
pub fn kronecker_sylvester(
    e: &DMatrix<f64>,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    xi: &DMatrix<f64>,
    pi: &DMatrix<f64>,
) -> DMatrix<f64> {
    let (n, k) = (a.nrows(), xi.nrows());
    let lhs = xi.transpose().kronecker(e) - DMatrix::<f64>::identity(k, k).kronecker(a);
    let rhs = b * pi;
    let rhs_vec = DVector::from_column_slice(rhs.as_slice());
    let x = lhs.lu().solve(&rhs_vec).expect("disjoint spectra");
    DMatrix::from_column_slice(n, k, x.as_slice())
}

/// `C X + D Π` from the Kronecker solve at parameter `theta`.
pub fn kronecker_steady_matrix(plant: &LftPlant, theta: &ParameterVector, gen: &InputGenerator) -> DMatrix<f64> {
    let sys = plant.assemble(theta).unwrap();
    let x = kronecker_sylvester(&plant.base().e, &sys.a, &sys.b, gen.xi(), gen.pi_out());
    &sys.c * x + &sys.d * gen.pi_out()
}

/// `C (sE - A)^{-1} B + D` by a dense complex inverse.
pub fn direct_tfm(e: &DMatrix<f64>, a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>, s: Complex64) -> CMatrix {
    let cx = |m: &DMatrix<f64>| m.map(|v| Complex64::new(v, 0.0));
    let inv = (cx(e) * s - cx(a)).try_inverse().expect("s is not a pole");
    cx(c) * inv * cx(b) + cx(d)
}

/// Output of the plant at `times` via the matrix exponential of the plant
/// and generator combined: `d/dt [x1; ξ] = [[A_r, B_r Π], [0, Ξ]] [x1; ξ]`,
/// where `x1` are the differential coordinates of `N x` and the algebraic
/// ones are eliminated.
pub fn augmented_outputs(
    inst: &Instance,
    gen: &InputGenerator,
    x0: &DVector<f64>,
    times: &[f64],
) -> Vec<DVector<f64>> {
    let plant = &inst.plant;
    let sys = plant.assemble(&inst.theta).unwrap();
    let m_inv = inst.m.clone().try_inverse().unwrap();
    let n_inv = inst.n.clone().try_inverse().unwrap();
    let e0 = &m_inv * &plant.base().e * &n_inv;
    let r = (0..plant.n_states()).filter(|&i| e0[(i, i)].abs() > 0.5).count();
    let mx = plant.n_states();
    let q = mx - r;
    // In w = N x: diag(I, 0) w' = Ã w + B̃ u.
    let at = &m_inv * &sys.a * &n_inv;
    let bt = &m_inv * &sys.b;
    let ct = &sys.c * &n_inv;
    let a11 = at.view((0, 0), (r, r)).into_owned();
    let a12 = at.view((0, r), (r, q)).into_owned();
    let a21 = at.view((r, 0), (q, r)).into_owned();
    let a22_inv = at.view((r, r), (q, q)).into_owned().try_inverse().expect("index one");
    let b1 = bt.rows(0, r).into_owned();
    let b2 = bt.rows(r, q).into_owned();
    // w2 = K1 w1 + K2 u
    let k1 = -&a22_inv * &a21;
    let k2 = -&a22_inv * &b2;
    let ar = &a11 + &a12 * &k1;
    let br = &b1 + &a12 * &k2;
    let c1 = ct.columns(0, r).into_owned();
    let c2 = ct.columns(r, q).into_owned();
    let cr = &c1 + &c2 * &k1;
    let dr = &sys.d + &c2 * &k2;
    let pi = gen.pi_out();
    let k = gen.order();
    let mut big = DMatrix::zeros(r + k, r + k);
    big.view_mut((0, 0), (r, r)).copy_from(&ar);
    big.view_mut((0, r), (r, k)).copy_from(&(&br * pi));
    big.view_mut((r, r), (k, k)).copy_from(gen.xi());
    let w0 = &inst.n * x0;
    let mut z0 = DVector::zeros(r + k);
    z0.rows_mut(0, r).copy_from(&w0.rows(0, r));
    z0.rows_mut(r, k).copy_from(gen.xi0());
    let mut out_map = DMatrix::zeros(plant.n_outputs(), r + k);
    out_map.columns_mut(0, r).copy_from(&cr);
    out_map.columns_mut(r, k).copy_from(&(&dr * pi));
    times.iter().map(|&t| &out_map * ((&big * t).exp() * &z0)).collect()
}

/// Central difference of `f` at `s` along the real axis.
pub fn central_difference<F: Fn(Complex64) -> CMatrix>(f: F, s: Complex64, h: f64) -> CMatrix {
    (f(s + Complex64::new(h, 0.0)) - f(s - Complex64::new(h, 0.0))) / Complex64::new(2.0 * h, 0.0)
}

pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

pub fn rel_err_c(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}
