use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("ill-posed LFT: I - P(theta) D_zv is numerically singular (sigma_min = {sigma_min:e})")]
    WellPosednessViolated { sigma_min: f64 },

    #[error("sE - A is singular at s = {s}")]
    SingularPencil { s: Complex64 },

    #[error("generator eigenvalue {lambda} is a pole of (E, A_xx)")]
    GeneratorEigenvalueIsPole { lambda: Complex64 },

    #[error("generator is defective at eigenvalue {lambda}")]
    DefectiveGenerator { lambda: Complex64 },

    #[error("component {index} of T^-1 xi has imaginary part {imag:e}")]
    ComponentNotReal { index: usize, imag: f64 },

    #[error("generator eigenvalue {generator} is within {distance:e} of plant eigenvalue {plant}")]
    SharedEigenvalue {
        generator: Complex64,
        plant: Complex64,
        distance: f64,
    },

    #[error("eigenvector matrix T is singular")]
    SingularT,

    #[error("pencil index exceeds one (impulsive modes are not supported)")]
    UnsupportedIndex,

    #[error("pencil (E, A) is not regular")]
    IrregularPencil,

    #[error("system is unstable (max real part {max_real})")]
    Unstable { max_real: f64 },

    #[error("steady-state map has imaginary residue {residue:e}")]
    NotReal { residue: f64 },

    #[error("regressor matrix lacks full row rank (sigma_min = {sigma_min:e})")]
    NotPersistentlyExciting { sigma_min: f64 },

    #[error("parametric system lacks full column rank (sigma_min = {sigma_min:e})")]
    NotIdentifiableFromData { sigma_min: f64 },

    #[error("true parameter {index} is zero")]
    ZeroTrueParameter { index: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
