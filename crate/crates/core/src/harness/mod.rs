//! Monte Carlo experiments with pass/fail verdicts and replayable reports.

mod bahadur;
mod bracket;
mod clt;
mod config;
mod depmeasure;
mod rate;
mod report;
mod tail;
mod variance;

pub use config::{BandwidthRule, CltStatistic, Experiment, ExperimentConfig, RateEstimator, Tolerances};
pub use depmeasure::{depmeasure_table, write_depmeasure_csv, DepRow};
pub use report::{sha256_hex, ExperimentReport, PlotPoint, Provenance, Row, Verdict};
pub use variance::{builtin_classes, builtin_models};

use crate::error::Result;
use crate::rng;

#[derive(Debug, Default)]
struct Outcome {
    rows: Vec<Row>,
    verdicts: Vec<Verdict>,
    warnings: Vec<String>,
    plot: Vec<PlotPoint>,
}

/// Seed of the path streams at sample size n.
fn path_seed(cfg: &ExperimentConfig, n: usize) -> u64 {
    rng::derive_seed(rng::derive_seed(cfg.seed, rng::EXPERIMENT), n as u64)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let o = match &cfg.experiment {
        Experiment::Rate { estimator, grid_points } => rate::run(cfg, estimator, *grid_points)?,
        Experiment::Clt { statistic, v, oracle, covariance_mc } => clt::run(cfg, statistic, *v, *oracle, *covariance_mc)?,
        Experiment::Variance { builtin_suite, classes } => variance::run(cfg, *builtin_suite, classes)?,
        Experiment::Tail { class, nu, y, x_points } => tail::run(cfg, class, *nu, *y, *x_points)?,
        Experiment::Bracket { gammas, s, v, h, sampled } => bracket::run(cfg, gammas, *s, *v, *h, *sampled)?,
        Experiment::Bahadur { theta0, grid_points, info_draws, theta_box } => {
            bahadur::run(cfg, theta0, *grid_points, *info_draws, *theta_box)?
        }
    };
    Ok(ExperimentReport {
        kind: cfg.experiment.kind().to_string(),
        name: cfg.name.clone(),
        negative_control: cfg.negative_control,
        rows: o.rows,
        verdicts: o.verdicts,
        warnings: o.warnings,
        plot: o.plot,
        provenance: Provenance::of(cfg)?,
    })
}
