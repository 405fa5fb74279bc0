//! Locally stationary data generating mechanisms: simulation, coupling and
//! one-step conditional functionals.

mod conditional;
mod linear;
mod recursive;
mod simulate;

pub use conditional::{conditional_expectation, conditional_functional, conditional_means, gaussian_marginals, one_step};
pub use linear::{LinearModel, Template, MAX_AUTO_TRUNCATION};
pub use recursive::{CustomFn, MeanFamily, ModelFn, RecursiveModel, ScaleFamily};
pub use simulate::{
    coupled_difference, simulate_coupled, simulate_coupled_rep, simulate_path, simulate_path_rep,
    simulate_path_with_innovations, simulate_stationary, simulate_stationary_rep, Path,
};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::innovation::Innovation;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ProcessModel {
    Recursive(RecursiveModel),
    Linear(LinearModel),
}

impl From<RecursiveModel> for ProcessModel {
    fn from(m: RecursiveModel) -> Self {
        ProcessModel::Recursive(m)
    }
}

impl From<LinearModel> for ProcessModel {
    fn from(m: LinearModel) -> Self {
        ProcessModel::Linear(m)
    }
}

impl ProcessModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            ProcessModel::Recursive(m) => m.validate(),
            ProcessModel::Linear(m) => m.validate(),
        }
    }

    pub fn innovation(&self) -> Innovation {
        match self {
            ProcessModel::Recursive(m) => m.innovation,
            ProcessModel::Linear(m) => m.innovation,
        }
    }

    pub fn moment_s(&self) -> f64 {
        match self {
            ProcessModel::Recursive(m) => m.moment_s,
            ProcessModel::Linear(m) => m.moment_s,
        }
    }

    pub fn default_burn_in(&self) -> Result<usize> {
        match self {
            ProcessModel::Recursive(m) => Ok(m.default_burn_in()),
            ProcessModel::Linear(m) => m.default_burn_in(),
        }
    }

    /// Bound C_X on sup_i ||X_i||_{2s}.
    pub fn moment_bound(&self, s: f64) -> Result<f64> {
        match self {
            ProcessModel::Recursive(m) => m.moment_bound(s),
            ProcessModel::Linear(m) => Ok(m.moment_bound(s)),
        }
    }

    /// Lower bound on the conditional scale (sigma_min, or inf a_0).
    pub fn sigma_min(&self) -> f64 {
        match self {
            ProcessModel::Recursive(m) => m.sigma_min(),
            ProcessModel::Linear(m) => m.a0_min(),
        }
    }

    /// Coefficients frozen at rescaled time u.
    pub fn frozen(&self, u: f64) -> Self {
        match self {
            ProcessModel::Recursive(m) => ProcessModel::Recursive(m.frozen(u)),
            ProcessModel::Linear(m) => ProcessModel::Linear(m.frozen(u)),
        }
    }

    pub fn tag(&self) -> String {
        let innov = match self.innovation() {
            Innovation::Normal => "normal".to_string(),
            Innovation::StudentT { df } => format!("t{df}"),
            Innovation::Uniform { half_width } => format!("uniform{half_width}"),
        };
        match self {
            ProcessModel::Recursive(m) => {
                let mean = match &m.mean {
                    MeanFamily::Affine { .. } => "affine",
                    MeanFamily::Custom(_) => "custom",
                };
                let scale = match &m.scale {
                    ScaleFamily::Affine { .. } => "affine",
                    ScaleFamily::Arch { .. } => "arch",
                    ScaleFamily::Custom(_) => "custom",
                };
                format!("recursive/{mean}/{scale}/{innov}")
            }
            ProcessModel::Linear(m) => {
                let t = match m.template {
                    Template::Geometric { .. } => "geometric",
                    Template::Polynomial { .. } => "polynomial",
                };
                format!("linear/{t}/{innov}")
            }
        }
    }
}
