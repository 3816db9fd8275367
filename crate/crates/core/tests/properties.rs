mod common;

use common::*;
use lft_ident::estimation::{estimate_tfm, update_tfm, BlockTag, Regression};
use lft_ident::experiments::{generate_times, relative_error, GapLaw};
use lft_ident::model::ParameterVector;
use lft_ident::numerics::Tolerances;
use lft_ident::response;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tfm_forms_agree(seed in any::<u64>(), re in -2.0f64..2.0, im in -6.0f64..6.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_dims(&mut rng, 5, 3, true);
        let inst = random_regular(&mut rng, d);
        let s = Complex64::new(re, im);
        if let (Ok(a), Ok(b)) = (inst.plant.eval_tfm(&inst.theta, s), inst.plant.eval_tfm_lft(&inst.theta, s)) {
            let scale = 1.0 + a.norm();
            prop_assert!((a - b).norm() < 1e-8 * scale);
        }
    }

    #[test]
    fn steady_matrix_solves_sylvester(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_dims(&mut rng, 4, 2, true);
        let inst = random_stable(&mut rng, d);
        let gen = random_generator(&mut rng, d.mu, 1, 1);
        if let Ok(maps) = response::solve_steady_maps(&inst.plant, &inst.theta, &gen) {
            let kron = kronecker_sylvester(&inst.plant.base().e, &inst.plant.assemble(&inst.theta).unwrap().a,
                &inst.plant.assemble(&inst.theta).unwrap().b, gen.xi(), gen.pi_out());
            prop_assert!(rel_err(&maps.x, &kron) < 1e-8);
        }
    }

    #[test]
    fn recursive_least_squares_matches_batch(seed in any::<u64>(), n in 8usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = 3;
        let ubar = rand_mat(&mut rng, rows, n, 1.0);
        let ybar = rand_mat(&mut rng, 2, n, 1.0);
        let reg = Regression {
            ybar,
            ubar: ubar.clone(),
            utilde: ubar,
            tags: vec![BlockTag::Real(0.0), BlockTag::Real(1.0), BlockTag::Real(2.0)],
            tol: Tolerances::default(),
        };
        let first = 5;
        if let (Ok(mut est), Ok(batch)) = (estimate_tfm(&reg.columns(0, first)), estimate_tfm(&reg)) {
            for k in first..n {
                est = update_tfm(&est, &reg.ybar.column(k).into_owned(), &reg.ubar.column(k).into_owned());
            }
            prop_assert!(rel_err(&est.hbar, &batch.hbar) < 1e-8);
        }
    }

    #[test]
    fn sampling_instants_respect_the_law(seed in any::<u64>(), lo in 0.05f64..1.0, width in 0.0f64..2.0, n in 1usize..200, t0 in 0.0f64..10.0) {
        let law = GapLaw::uniform(lo, lo + width).unwrap();
        let t = generate_times(&law, n, t0, seed);
        prop_assert_eq!(t.len(), n);
        let mut prev = t0;
        for &tk in &t {
            let g = tk - prev;
            prop_assert!(g >= lo - 1e-12 && g <= lo + width + 1e-12);
            prev = tk;
        }
    }

    #[test]
    fn relative_error_is_scale_invariant(v in proptest::collection::vec(0.1f64..10.0, 1..5), k in 0.1f64..10.0, eps in -0.5f64..0.5) {
        let truth = ParameterVector::from_slice(&v);
        let est: Vec<f64> = v.iter().map(|x| x * (1.0 + eps)).collect();
        let e1 = relative_error(&truth, &ParameterVector::from_slice(&est)).unwrap();
        let scaled_t: Vec<f64> = v.iter().map(|x| x * k).collect();
        let scaled_e: Vec<f64> = est.iter().map(|x| x * k).collect();
        let e2 = relative_error(&ParameterVector::from_slice(&scaled_t), &ParameterVector::from_slice(&scaled_e)).unwrap();
        prop_assert!((e1 - e2).abs() < 1e-12 * (1.0 + e1));
        prop_assert!((e1 - eps.abs() * (v.len() as f64).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn parameter_vector_round_trip(v in proptest::collection::vec(-1e3f64..1e3, 0..8)) {
        let p = ParameterVector::from_slice(&v);
        prop_assert_eq!(p.as_slice(), v.as_slice());
        prop_assert_eq!(p.len(), v.len());
        let m = DMatrix::from_row_slice(1, v.len(), &v);
        prop_assert_eq!(m.ncols(), p.len());
    }
}
