//! Mass–spring–damper benchmark and its two-tone input generator.
//!
//! Mass `1 + θ_1`, damping `7 + θ_2`, stiffness `25 + θ_3`, output `100 q`.
//! The realization keeps the nominal dynamics twice (once in the
//! parameter channel), so it has four states.

use nalgebra::{DMatrix, DVector};

use crate::igs::InputGenerator;
use crate::model::{BaseMatrices, LftPlant};

pub const REFERENCE_THETA: [f64; 3] = [0.1852, 0.5126, 6.2582];
pub const SETTLING_TIME: f64 = 2.3258;
pub const OMEGAS: [f64; 2] = [3.0, 4.5];

pub fn mass_spring_damper() -> LftPlant {
    let base = BaseMatrices {
        e: DMatrix::identity(4, 4),
        a_xx: DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, -25.0, 0.0, 0.0, //
                1.0, -7.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, //
                0.0, -1.0, -25.0, -7.0,
            ],
        ),
        b_xu: DMatrix::from_column_slice(4, 1, &[0.0, 0.0, 0.0, 1.0]),
        b_xv: DMatrix::from_row_slice(
            4,
            3,
            &[
                -25.0, 0.0, 1.0, //
                -7.0, 1.0, 0.0, //
                0.0, 0.0, 0.0, //
                -1.0, 0.0, 0.0,
            ],
        ),
        c_yx: DMatrix::from_row_slice(1, 4, &[0.0, 0.0, 100.0, 0.0]),
        c_zx: DMatrix::from_row_slice(1, 4, &[0.0, -1.0, 0.0, 0.0]),
        d_zu: DMatrix::from_element(1, 1, 1.0),
        d_zv: DMatrix::from_row_slice(1, 3, &[-1.0, 0.0, 0.0]),
        d_yu: DMatrix::zeros(1, 1),
        d_yv: DMatrix::zeros(1, 3),
    };
    let basis = (0..3)
        .map(|i| {
            let mut p = DMatrix::zeros(3, 1);
            p[(i, 0)] = 1.0;
            p
        })
        .collect();
    LftPlant::new(base, basis, vec![(-0.5, 0.5), (-3.5, 3.5), (-12.5, 12.5)]).expect("benchmark plant is consistent")
}

/// Two rotation blocks `[[σ_i, ω_i], [-ω_i, σ_i]]` with `ω = (3, 4.5)`.
pub fn two_tone_generator(sigma1: f64, sigma2: f64) -> InputGenerator {
    let mut xi = DMatrix::zeros(4, 4);
    for (b, (s, w)) in [(sigma1, OMEGAS[0]), (sigma2, OMEGAS[1])].into_iter().enumerate() {
        let k = 2 * b;
        xi[(k, k)] = s;
        xi[(k, k + 1)] = w;
        xi[(k + 1, k)] = -w;
        xi[(k + 1, k + 1)] = s;
    }
    InputGenerator::new(
        xi,
        DMatrix::from_row_slice(1, 4, &[0.25, 0.25, 0.5, 0.5]),
        DVector::from_element(4, 1.0),
    )
    .expect("benchmark generator is consistent")
}
