mod common;

use common::*;
use lft_ident::estimation::{self, build_regression, estimate_tfm, update_tfm};
use lft_ident::experiments::{generate_times, relative_error, GapLaw};
use lft_ident::model::{LftPlant, ParameterVector};
use lft_ident::reference::{mass_spring_damper, two_tone_generator, REFERENCE_THETA, SETTLING_TIME};
use lft_ident::response::{simulate_samples, solve_steady_maps, SampleSet};
use lft_ident::Error;
use lft_ident::igs::InputGenerator;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn steady_samples(plant: &LftPlant, theta: &ParameterVector, gen: &InputGenerator, times: &[f64], sigma: f64, seed: u64) -> lft_ident::Result<SampleSet> {
    let maps = solve_steady_maps(plant, theta, gen)?;
    let x0 = maps.x * gen.xi0();
    simulate_samples(plant, theta, &x0, gen, times, sigma, seed)
}

#[test]
fn noise_free_data_recover_random_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut done = 0;
    while done < 15 {
        let mut d = random_dims(&mut rng, 5, 3, true);
        d.mz = 1;
        let inst = random_stable(&mut rng, d);
        let gen = random_generator(&mut rng, d.mu, 1, 2);
        let times = generate_times(&GapLaw::uniform(0.2, 1.0).unwrap(), 80, 0.0, done);
        let s = match steady_samples(&inst.plant, &inst.theta, &gen, &times, 0.0, 0) {
            Ok(s) => s,
            Err(Error::SharedEigenvalue { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        match estimation::identify(&inst.plant, &gen, &s, Some(&inst.theta)) {
            Ok(est) => {
                let err = (est.theta.values() - inst.theta.values()).norm() / inst.theta.values().norm();
                let spec = gen.decompose().unwrap();
                let truth = estimation::true_hbar(&inst.plant, &spec, &inst.theta).unwrap();
                assert!(err < 1e-7, "relative error {err}");
                assert!(rel_err(&est.tfm.hbar, &truth) < 1e-8);
                assert!(est.excitation.excitation_passes());
                done += 1;
            }
            Err(Error::NotIdentifiableFromData { .. }) => continue,
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn recursive_update_reproduces_batch_solution() {
    let plant = mass_spring_damper();
    let theta = ParameterVector::from_slice(&REFERENCE_THETA);
    let gen = two_tone_generator(0.0, 0.0);
    let times = generate_times(&GapLaw::uniform(0.2, 1.0).unwrap(), 300, SETTLING_TIME, 2);
    let s = simulate_samples(&plant, &theta, &DVector::zeros(4), &gen, &times, 0.25, 3).unwrap();
    let reg = build_regression(&plant, &gen, &s).unwrap();
    let start = 20;
    let mut est = estimate_tfm(&reg.columns(0, start)).unwrap();
    for k in start..reg.len() {
        est = update_tfm(&est, &reg.ybar.column(k).into_owned(), &reg.ubar.column(k).into_owned());
    }
    let batch = estimate_tfm(&reg).unwrap();
    assert_eq!(est.n, batch.n);
    assert!(rel_err(&est.hbar, &batch.hbar) < 1e-8);
}

#[test]
fn regressor_factors_through_gzu() {
    let plant = mass_spring_damper();
    let gen = two_tone_generator(0.1, -0.05);
    let times = generate_times(&GapLaw::uniform(0.2, 1.0).unwrap(), 50, 0.0, 4);
    let s = simulate_samples(&plant, &ParameterVector::zeros(3), &DVector::zeros(4), &gen, &times, 0.0, 0).unwrap();
    let spec = gen.decompose().unwrap();
    let reg = build_regression(&plant, &gen, &s).unwrap();
    let rep = estimation::check_excitation(&plant, &spec, &reg, None).unwrap();
    assert!(rep.ubar_factor_residual < 1e-12);
    assert!(rep.excitation_passes());
}

#[test]
fn too_few_samples_are_not_exciting() {
    let plant = mass_spring_damper();
    let gen = two_tone_generator(0.0, 0.0);
    let times = generate_times(&GapLaw::uniform(0.2, 1.0).unwrap(), 3, SETTLING_TIME, 1);
    let s = simulate_samples(&plant, &ParameterVector::zeros(3), &DVector::zeros(4), &gen, &times, 0.0, 0).unwrap();
    assert!(matches!(
        estimation::identify(&plant, &gen, &s, None),
        Err(Error::NotPersistentlyExciting { .. })
    ));
}

fn modified(plant: &LftPlant, f: impl FnOnce(&mut lft_ident::model::BaseMatrices, &mut Vec<DMatrix<f64>>)) -> LftPlant {
    let mut base = plant.base().clone();
    let mut basis = plant.basis().to_vec();
    f(&mut base, &mut basis);
    LftPlant::new(base, basis, plant.theta_box().to_vec()).unwrap()
}

#[test]
fn vanishing_gzu_fails_the_excitation_test() {
    let plant = modified(&mass_spring_damper(), |b, _| {
        b.c_zx.fill(0.0);
        b.d_zu.fill(0.0);
    });
    let gen = two_tone_generator(0.0, 0.0);
    let times = generate_times(&GapLaw::uniform(0.2, 1.0).unwrap(), 100, SETTLING_TIME, 1);
    let s = simulate_samples(&plant, &ParameterVector::zeros(3), &DVector::zeros(4), &gen, &times, 0.0, 0).unwrap();
    let spec = gen.decompose().unwrap();
    let reg = build_regression(&plant, &gen, &s).unwrap();
    let rep = estimation::check_excitation(&plant, &spec, &reg, None).unwrap();
    assert!(!rep.gzu_frr.full);
    assert!(!rep.excitation_passes());
}

#[test]
fn duplicated_basis_is_not_identifiable() {
    let plant = modified(&mass_spring_damper(), |_, p| p[1] = p[0].clone());
    let theta = ParameterVector::from_slice(&[0.1, 0.1, 3.0]);
    let gen = two_tone_generator(0.0, 0.0);
    let times = generate_times(&GapLaw::uniform(0.2, 1.0).unwrap(), 100, SETTLING_TIME, 1);
    let s = simulate_samples(&plant, &theta, &DVector::zeros(4), &gen, &times, 0.0, 0).unwrap();
    assert!(matches!(
        estimation::identify(&plant, &gen, &s, Some(&theta)),
        Err(Error::NotIdentifiableFromData { .. })
    ));
}

#[test]
fn estimation_error_shrinks_with_more_samples() {
    let plant = mass_spring_damper();
    let theta = ParameterVector::from_slice(&REFERENCE_THETA);
    let gen = two_tone_generator(0.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mse = |n: usize, rng: &mut ChaCha8Rng| {
        let trials = 40;
        let mut acc = 0.0;
        for _ in 0..trials {
            let times = generate_times(&GapLaw::uniform(0.2, 1.0).unwrap(), n, SETTLING_TIME, rng.random());
            let s = steady_samples(&plant, &theta, &gen, &times, 0.25, rng.random()).unwrap();
            let est = estimation::identify(&plant, &gen, &s, None).unwrap();
            acc += relative_error(&theta, &est.theta).unwrap().powi(2);
        }
        acc / trials as f64
    };
    let small = mse(100, &mut rng);
    let large = mse(1600, &mut rng);
    assert!(large < small / 4.0, "{small} -> {large}");
}
