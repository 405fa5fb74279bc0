use serde::{Deserialize, Serialize};

use crate::empirical_process::CovarianceMc;
use crate::error::{LsepError, Result};
use crate::function_class::FunctionClass;
use crate::kernel::Kernel;
use crate::poly::Poly;
use crate::process_models::ProcessModel;

/// h = c n^{-exponent}, or a fixed h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum BandwidthRule {
    Power { c: f64, exponent: f64 },
    Fixed { h: f64 },
}

impl Default for BandwidthRule {
    fn default() -> Self {
        BandwidthRule::Power { c: 1.0, exponent: 0.2 }
    }
}

impl BandwidthRule {
    pub fn h(&self, n: usize) -> f64 {
        match self {
            BandwidthRule::Power { c, exponent } => c * (n as f64).powf(-exponent),
            BandwidthRule::Fixed { h } => *h,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            BandwidthRule::Power { c, exponent } => *c > 0.0 && *exponent > 0.0 && *exponent < 1.0,
            BandwidthRule::Fixed { h } => *h > 0.0 && *h < 1.0,
        };
        if !ok {
            return Err(LsepError::Config("bandwidth rule needs c > 0 and 0 < exponent < 1, or 0 < h < 1".into()));
        }
        Ok(())
    }
}

/// Pass thresholds. The defaults are engineering choices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// max/min of the median sup-ratios across n
    pub rate_factor: f64,
    /// relative variance error in the CLT check
    pub variance_rel: f64,
    /// multiplier on the 1% KS band
    pub ks_safety: f64,
    /// allowed factor between the crossover ratio and sqrt(n2/n1)
    pub crossover_factor: f64,
    /// Monte Carlo standard errors allowed in one-sided checks
    pub mc_se: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rate_factor: 2.0, variance_rel: 0.15, ks_safety: 1.0, crossover_factor: 3.0, mc_se: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "estimator", rename_all = "snake_case")]
pub enum RateEstimator {
    /// Y_i = trend(i/n) + noise_scale X_i
    KernelRegression {
        #[serde(default = "zero_poly")]
        trend: Poly,
        #[serde(default = "one")]
        noise_scale: f64,
    },
    /// h2 = h1; sup over an equispaced x grid
    KernelDensity {
        #[serde(default = "x_range")]
        x_range: [f64; 2],
        #[serde(default = "x_points")]
        x_points: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "statistic", rename_all = "snake_case")]
pub enum CltStatistic {
    /// (1/n) sum K_h(i/n - v) X_i
    LocalMean,
    LocalMad,
    /// local EDF at one or more x; several x add a covariance-matrix check
    LocalEdf { x: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    Rate {
        #[serde(flatten)]
        estimator: RateEstimator,
        #[serde(default = "grid_points")]
        grid_points: usize,
    },
    Clt {
        #[serde(flatten)]
        statistic: CltStatistic,
        v: f64,
        /// closed-form long-run variance; otherwise estimated
        #[serde(default)]
        oracle: Option<f64>,
        #[serde(default)]
        covariance_mc: Option<CovarianceMc>,
    },
    Variance {
        /// run the built-in model x class suite instead of `classes` on `model`
        #[serde(default)]
        builtin_suite: bool,
        #[serde(default)]
        classes: Vec<FunctionClass>,
    },
    Tail {
        class: FunctionClass,
        #[serde(default = "nu")]
        nu: f64,
        #[serde(default = "y_default")]
        y: f64,
        #[serde(default = "tail_points")]
        x_points: usize,
    },
    Bracket {
        gammas: Vec<f64>,
        #[serde(default = "two")]
        s: f64,
        #[serde(default = "half")]
        v: f64,
        #[serde(default = "bracket_h")]
        h: f64,
        #[serde(default = "sampled")]
        sampled: usize,
    },
    Bahadur {
        /// theta_0(u) of the AR loss
        theta0: Poly,
        #[serde(default = "bahadur_points")]
        grid_points: usize,
        #[serde(default = "info_draws")]
        info_draws: usize,
        #[serde(default = "theta_box")]
        theta_box: [f64; 2],
    },
}

fn zero_poly() -> Poly {
    Poly::constant(0.0)
}
fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn half() -> f64 {
    0.5
}
fn nu() -> f64 {
    4.0
}
fn y_default() -> f64 {
    10.0
}
fn x_range() -> [f64; 2] {
    [-2.0, 2.0]
}
fn x_points() -> usize {
    21
}
fn grid_points() -> usize {
    50
}
fn tail_points() -> usize {
    20
}
fn bracket_h() -> f64 {
    0.2
}
fn sampled() -> usize {
    12
}
fn bahadur_points() -> usize {
    9
}
fn info_draws() -> usize {
    20_000
}
fn theta_box() -> [f64; 2] {
    [-0.99, 0.99]
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Rate { .. } => "rate",
            Experiment::Clt { .. } => "clt",
            Experiment::Variance { .. } => "variance",
            Experiment::Tail { .. } => "tail",
            Experiment::Bracket { .. } => "bracket",
            Experiment::Bahadur { .. } => "bahadur",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub seed: u64,
    pub replications: usize,
    #[serde(default)]
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub bandwidth: BandwidthRule,
    #[serde(default)]
    pub kernel: Kernel,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// run the experiment's built-in negative control as the primary check
    #[serde(default)]
    pub negative_control: bool,
    pub model: ProcessModel,
    pub experiment: Experiment,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| LsepError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| LsepError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LsepError::Config(m));
        self.model.validate().map_err(|e| LsepError::Config(format!("model: {e}")))?;
        self.bandwidth.validate()?;
        self.kernel.validate().map_err(|e| LsepError::Config(format!("kernel: {e}")))?;
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return bad("n_list must be strictly increasing".into());
        }
        if self.n_list.iter().any(|n| *n < 10) {
            return bad("every n must be at least 10".into());
        }
        let kind = self.experiment.kind();
        let need_n = match kind {
            "rate" | "tail" | "bahadur" => 2,
            "clt" | "variance" | "bracket" => 1,
            _ => 0,
        };
        if self.n_list.len() < need_n {
            return bad(format!("{kind} experiments need at least {need_n} entries in n_list"));
        }
        if matches!(kind, "clt" | "tail") && self.replications < 100 {
            return bad(format!("{kind} experiments need replications >= 100"));
        }
        if self.replications < 3 {
            return bad("replications must be at least 3".into());
        }
        for n in &self.n_list {
            let h = self.bandwidth.h(*n);
            if !(h > 0.0 && h < 1.0) {
                return bad(format!("bandwidth rule gives h = {h} at n = {n}"));
            }
        }
        // n h must grow along n_list
        let nh: Vec<f64> = self.n_list.iter().map(|n| *n as f64 * self.bandwidth.h(*n)).collect();
        if nh.windows(2).any(|w| w[1] <= w[0]) {
            return bad("bandwidth rule must make n h increase along n_list".into());
        }
        match &self.experiment {
            Experiment::Clt { v, statistic, .. } => {
                if !(*v > 0.0 && *v < 1.0) {
                    return bad("clt: v must lie in (0, 1)".into());
                }
                if let CltStatistic::LocalEdf { x } = statistic {
                    if x.is_empty() {
                        return bad("clt: local_edf needs at least one x".into());
                    }
                }
            }
            Experiment::Variance { builtin_suite, classes } => {
                if !builtin_suite && classes.is_empty() {
                    return bad("variance: give classes or set builtin_suite = true".into());
                }
                for c in classes {
                    c.validate().map_err(|e| LsepError::Config(format!("variance class: {e}")))?;
                }
            }
            Experiment::Tail { class, nu, y, x_points } => {
                class.validate().map_err(|e| LsepError::Config(format!("tail class: {e}")))?;
                if class.base.sup_abs().is_none() {
                    return bad("tail: the class must be bounded".into());
                }
                if *nu < 2.0 || *y <= 0.0 || *x_points < 3 {
                    return bad("tail: needs nu >= 2, y > 0 and x_points >= 3".into());
                }
            }
            Experiment::Bracket { gammas, s, v, h, sampled } => {
                if gammas.is_empty() || gammas.iter().any(|g| !(*g > 0.0 && *g <= 1.0)) {
                    return bad("bracket: gammas must lie in (0, 1]".into());
                }
                if *s <= 0.0 || !(*v > 0.0 && *v < 1.0) || !(*h > 0.0 && *h < 1.0) || *sampled < 2 {
                    return bad("bracket: needs s > 0, v and h in (0, 1), sampled >= 2".into());
                }
                if !matches!(self.model, ProcessModel::Recursive(_)) {
                    return bad("bracket: needs a recursive model".into());
                }
            }
            Experiment::Bahadur { theta_box, grid_points, .. } => {
                if !(theta_box[0] < theta_box[1]) || *grid_points == 0 {
                    return bad("bahadur: theta_box must be increasing and grid_points positive".into());
                }
            }
            Experiment::Rate { grid_points, estimator } => {
                if *grid_points == 0 {
                    return bad("rate: grid_points must be positive".into());
                }
                if let RateEstimator::KernelDensity { x_range, x_points } = estimator {
                    if !(x_range[0] < x_range[1]) || *x_points == 0 {
                        return bad("rate: x_range must be increasing and x_points positive".into());
                    }
                }
            }
        }
        Ok(())
    }
}
