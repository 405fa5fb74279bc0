use serde::{Deserialize, Serialize};

use lsep::kernel::Kernel;
use lsep::poly::Poly;
use lsep::process_models::ProcessModel;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub seed: u64,
    pub n: usize,
    #[serde(default)]
    pub burn_in: Option<usize>,
    /// simulate the stationary approximation at this u
    #[serde(default)]
    pub stationary_u: Option<f64>,
    pub model: ProcessModel,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepmeasureConfig {
    pub seed: u64,
    pub n: usize,
    pub k: Vec<usize>,
    #[serde(default = "two")]
    pub nu: f64,
    pub replications: usize,
    pub model: ProcessModel,
}

fn two() -> f64 {
    2.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorSpec {
    /// Y_i = trend(i/n) + X_i
    KernelRegression {
        #[serde(default = "zero")]
        trend: Poly,
    },
    KernelDensity { bandwidth_x: f64, x: Vec<f64> },
    LocalEdf { x: Vec<f64> },
    LocalMad,
    /// AR least squares with known theta_0(u) for Bahadur residuals
    MEstimate {
        #[serde(default)]
        theta0: Option<Poly>,
        #[serde(default = "theta_box")]
        theta_box: [f64; 2],
    },
}

fn zero() -> Poly {
    Poly::constant(0.0)
}

fn theta_box() -> [f64; 2] {
    [-0.99, 0.99]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub seed: u64,
    pub n: usize,
    pub bandwidth: f64,
    #[serde(default)]
    pub kernel: Kernel,
    /// evaluation points in rescaled time; a single v for EDF and MAD
    #[serde(default)]
    pub v: Option<Vec<f64>>,
    #[serde(default = "points")]
    pub grid_points: usize,
    pub model: ProcessModel,
    pub estimator: EstimatorSpec,
}

fn points() -> usize {
    20
}
