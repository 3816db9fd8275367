//! TOML configuration for plant, generator, experiment and numerics.
//!
//! ```toml
//! [plant]
//! E = [[1.0, 0.0], [0.0, 1.0]]     # matrices are lists of rows
//! A_xx = ...                       # also B_xu B_xv C_yx C_zx D_zu D_zv D_yu D_yv
//! P = [ [[1.0]], [[0.0]] ]         # one m_v x m_z matrix per parameter
//! theta_box = [[-1.0, 1.0], [-2.0, 2.0]]
//!
//! [generator]
//! Xi = [[0.0, 3.0], [-3.0, 0.0]]
//! Pi = [[1.0, 0.0]]
//! xi0 = [1.0, 1.0]
//!
//! [experiment]          # optional
//! theta_true = [0.1, 0.2]
//! samples = 200
//! sigma = 0.0
//! seed = 1
//! gap = [0.2, 1.0]
//! settle_time = 2.3258  # or settle_band = 0.001 to compute it
//! x0 = "zero"           # or "steady", or explicit values
//!
//! [montecarlo]          # optional
//! sigmas = [0.05, 0.25]
//! samples = [100, 400]
//! trials = 20
//!
//! [numerics]            # optional
//! rank_rtol = 1e-12
//! ```

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;
use thiserror::Error;

use crate::error::Error;
use crate::experiments::{DlseOptions, GapLaw, InitialState, MonteCarloConfig, ThetaLaw};
use crate::igs::InputGenerator;
use crate::model::{BaseMatrices, LftPlant, ParameterVector};
use crate::numerics::Tolerances;
use crate::response::solve_steady_maps;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] Error),
}

type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlant {
    #[serde(rename = "E")]
    e: Matrix,
    #[serde(rename = "A_xx")]
    a_xx: Matrix,
    #[serde(rename = "B_xu")]
    b_xu: Matrix,
    #[serde(rename = "B_xv")]
    b_xv: Matrix,
    #[serde(rename = "C_yx")]
    c_yx: Matrix,
    #[serde(rename = "C_zx")]
    c_zx: Matrix,
    #[serde(rename = "D_zu")]
    d_zu: Matrix,
    #[serde(rename = "D_zv")]
    d_zv: Matrix,
    #[serde(rename = "D_yu")]
    d_yu: Matrix,
    #[serde(rename = "D_yv")]
    d_yv: Matrix,
    #[serde(rename = "P")]
    p: Vec<Matrix>,
    theta_box: Vec<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGenerator {
    #[serde(rename = "Xi")]
    xi: Matrix,
    #[serde(rename = "Pi")]
    pi: Matrix,
    xi0: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub theta_true: Option<Vec<f64>>,
    pub x0: Option<StateSpec>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_gap")]
    pub gap: [f64; 2],
    pub settle_time: Option<f64>,
    #[serde(default = "default_band")]
    pub settle_band: f64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            theta_true: None,
            x0: None,
            samples: default_samples(),
            sigma: 0.0,
            seed: default_seed(),
            gap: default_gap(),
            settle_time: None,
            settle_band: default_band(),
        }
    }
}

fn default_samples() -> usize {
    200
}
fn default_seed() -> u64 {
    1
}
fn default_gap() -> [f64; 2] {
    [0.2, 1.0]
}
fn default_band() -> f64 {
    crate::experiments::DEFAULT_SETTLE_BAND
}

/// Initial plant state: `"zero"`, `"steady"` (on the steady-state
/// manifold, so the response has no transient) or explicit values.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Named(String),
    Values(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum RawThetaLaw {
    Named(String),
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSection {
    pub sigmas: Vec<f64>,
    pub samples: Vec<usize>,
    #[serde(default)]
    pub generator_shifts: Vec<Vec<f64>>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub theta: Option<RawThetaLaw>,
    #[serde(default = "default_true")]
    pub dlse: bool,
    #[serde(default = "default_pre")]
    pub pre_samples: usize,
    pub dlse_max_iter: Option<usize>,
}

fn default_trials() -> usize {
    10
}
fn default_true() -> bool {
    true
}
fn default_pre() -> usize {
    10
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    pub rank_rtol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    plant: RawPlant,
    generator: RawGenerator,
    experiment: Option<ExperimentSection>,
    montecarlo: Option<MonteCarloSection>,
    numerics: Option<NumericsSection>,
}

/// Parsed and validated configuration.
#[derive(Debug, Clone)]
pub struct Config {
    pub plant: LftPlant,
    pub generator: InputGenerator,
    pub experiment: ExperimentSection,
    pub montecarlo: Option<MonteCarloSection>,
    pub tolerances: Tolerances,
}

fn matrix(name: &str, rows: &Matrix) -> Result<DMatrix<f64>, ConfigError> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if rows.iter().any(|row| row.len() != c) {
        return Err(ConfigError::Invalid(format!("{name}: rows have different lengths")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(ConfigError::Invalid(format!("{name}: non-finite entry")));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

impl Config {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text)?;
        let numerics = raw.numerics.unwrap_or_default();
        if let Some(r) = numerics.rank_rtol {
            if !(r > 0.0 && r < 1.0) {
                return Err(ConfigError::Invalid(format!("rank_rtol {r} must lie in (0, 1)")));
            }
        }
        let tolerances = Tolerances {
            rank_rtol: numerics.rank_rtol,
        };
        let p = &raw.plant;
        let base = BaseMatrices {
            e: matrix("E", &p.e)?,
            a_xx: matrix("A_xx", &p.a_xx)?,
            b_xu: matrix("B_xu", &p.b_xu)?,
            b_xv: matrix("B_xv", &p.b_xv)?,
            c_yx: matrix("C_yx", &p.c_yx)?,
            c_zx: matrix("C_zx", &p.c_zx)?,
            d_zu: matrix("D_zu", &p.d_zu)?,
            d_zv: matrix("D_zv", &p.d_zv)?,
            d_yu: matrix("D_yu", &p.d_yu)?,
            d_yv: matrix("D_yv", &p.d_yv)?,
        };
        let basis = p
            .p
            .iter()
            .enumerate()
            .map(|(i, m)| matrix(&format!("P[{}]", i + 1), m))
            .collect::<Result<Vec<_>, _>>()?;
        let theta_box = p.theta_box.iter().map(|&[lo, hi]| (lo, hi)).collect();
        let plant = LftPlant::new(base, basis, theta_box)?.with_tolerances(tolerances);

        let g = &raw.generator;
        let generator = InputGenerator::new(
            matrix("Xi", &g.xi)?,
            matrix("Pi", &g.pi)?,
            DVector::from_column_slice(&g.xi0),
        )?;
        if generator.n_inputs() != plant.n_inputs() {
            return Err(ConfigError::Invalid(format!(
                "Pi has {} rows but the plant has {} inputs",
                generator.n_inputs(),
                plant.n_inputs()
            )));
        }
        let experiment = raw.experiment.unwrap_or_default();
        if let Some(th) = &experiment.theta_true {
            if th.len() != plant.n_params() {
                return Err(ConfigError::Invalid(format!(
                    "theta_true has {} entries, plant has {} parameters",
                    th.len(),
                    plant.n_params()
                )));
            }
        }
        match &experiment.x0 {
            Some(StateSpec::Values(x0)) if x0.len() != plant.n_states() => {
                return Err(ConfigError::Invalid(format!("x0 has {} entries, expected {}", x0.len(), plant.n_states())));
            }
            Some(StateSpec::Named(name)) if name != "zero" && name != "steady" => {
                return Err(ConfigError::Invalid(format!("x0 must be \"zero\", \"steady\" or a vector, got `{name}`")));
            }
            _ => {}
        }
        GapLaw::uniform(experiment.gap[0], experiment.gap[1]).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if experiment.sigma.is_nan() || experiment.sigma < 0.0 {
            return Err(ConfigError::Invalid("sigma must be non-negative".into()));
        }
        if !(experiment.settle_band > 0.0 && experiment.settle_band < 1.0) {
            return Err(ConfigError::Invalid("settle_band must lie in (0, 1)".into()));
        }
        Ok(Self {
            plant,
            generator,
            experiment,
            montecarlo: raw.montecarlo,
            tolerances,
        })
    }

    pub fn with_rank_rtol(mut self, rtol: f64) -> Self {
        self.tolerances = Tolerances::with_rank_rtol(rtol);
        self.plant = self.plant.with_tolerances(self.tolerances);
        self
    }

    pub fn theta_true(&self) -> Option<ParameterVector> {
        self.experiment.theta_true.as_deref().map(ParameterVector::from_slice)
    }

    /// Initial plant state at parameter `theta`.
    pub fn x0(&self, theta: &ParameterVector) -> Result<DVector<f64>, Error> {
        match &self.experiment.x0 {
            Some(StateSpec::Values(v)) => Ok(DVector::from_column_slice(v)),
            Some(StateSpec::Named(n)) if n == "steady" => {
                let maps = solve_steady_maps(&self.plant, theta, &self.generator)?;
                Ok(maps.x * self.generator.xi0())
            }
            _ => Ok(DVector::zeros(self.plant.n_states())),
        }
    }

    pub fn gap_law(&self) -> GapLaw {
        GapLaw {
            min: self.experiment.gap[0],
            max: self.experiment.gap[1],
        }
    }

    /// Configured settling time, or the computed one at `theta`.
    pub fn settle_time(&self, theta: &ParameterVector) -> Result<f64, Error> {
        match self.experiment.settle_time {
            Some(t) => Ok(t),
            None => crate::experiments::settle_time(&self.plant, theta, self.experiment.settle_band),
        }
    }

    pub fn montecarlo_config(&self, master_seed: u64, settle_time: f64) -> Result<MonteCarloConfig, ConfigError> {
        let mc = self
            .montecarlo
            .as_ref()
            .ok_or_else(|| ConfigError::Invalid("missing [montecarlo] table".into()))?;
        let theta_law = match &mc.theta {
            None => ThetaLaw::UniformBox,
            Some(RawThetaLaw::Named(s)) if s == "box" => ThetaLaw::UniformBox,
            Some(RawThetaLaw::Named(s)) => return Err(ConfigError::Invalid(format!("unknown theta law `{s}`"))),
            Some(RawThetaLaw::Fixed(v)) if v.len() == self.plant.n_params() => ThetaLaw::Fixed(v.clone()),
            Some(RawThetaLaw::Fixed(v)) => {
                return Err(ConfigError::Invalid(format!("montecarlo theta has {} entries", v.len())))
            }
        };
        if mc.sigmas.is_empty() || mc.samples.is_empty() || mc.trials == 0 {
            return Err(ConfigError::Invalid("montecarlo needs sigmas, samples and trials > 0".into()));
        }
        let mut dlse = DlseOptions::default();
        if let Some(m) = mc.dlse_max_iter {
            dlse.max_iter = m;
        }
        let initial_state = match &self.experiment.x0 {
            None => InitialState::Rest,
            Some(StateSpec::Named(n)) if n == "zero" => InitialState::Rest,
            Some(StateSpec::Named(_)) => InitialState::Steady,
            Some(StateSpec::Values(_)) => {
                return Err(ConfigError::Invalid("montecarlo supports only x0 = \"zero\" or \"steady\"".into()))
            }
        };
        Ok(MonteCarloConfig {
            sigmas: mc.sigmas.clone(),
            sample_counts: mc.samples.clone(),
            generator_shifts: mc.generator_shifts.clone(),
            trials: mc.trials,
            master_seed,
            gap: self.gap_law(),
            settle_time,
            pre_samples: mc.pre_samples,
            theta_law,
            initial_state,
            run_dlse: mc.dlse,
            dlse,
        })
    }
}
