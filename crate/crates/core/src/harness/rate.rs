use rayon::prelude::*;

use super::config::{ExperimentConfig, RateEstimator};
use super::report::{Row, Verdict};
use super::{path_seed, Outcome};
use crate::dependence::{analytic_decay_bound, DecayProfile};
use crate::error::Result;
use crate::estimators::{interior_grid, kernel_density, kernel_regression};
use crate::process_models::simulate_path_rep;
use crate::stats::median;

fn spread(medians: &[f64]) -> f64 {
    let max = medians.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = medians.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        1.0
    } else {
        max / min
    }
}

fn bandwidth_warnings(cfg: &ExperimentConfig, out: &mut Vec<String>) {
    let nu = 2.0 * cfg.model.moment_s();
    let poly = match analytic_decay_bound(&cfg.model, cfg.model.moment_s()) {
        Ok(DecayProfile::Polynomial { alpha, .. }) => Some(alpha),
        _ => None,
    };
    for &n in &cfg.n_list {
        let h = cfg.bandwidth.h(n);
        let nf = n as f64;
        if nf * h < nf.ln() {
            out.push(format!("n = {n}: n h = {:.1} is below log n", nf * h));
        }
        if let Some(alpha) = poly {
            let lower = (nf.ln() / nf.powf(1.0 - 2.0 / nu)).powf((alpha - 1.0) / alpha);
            if h < lower {
                out.push(format!("n = {n}: h = {h:.4} is below the polynomial-decay lower bound {lower:.4}"));
            }
        }
    }
}

/// Median over replications of sup-error / tau_n for each n.
pub(super) fn run(cfg: &ExperimentConfig, estimator: &RateEstimator, grid_points: usize) -> Result<Outcome> {
    let mut out = Outcome::default();
    bandwidth_warnings(cfg, &mut out.warnings);
    let mut med = Vec::new();
    let mut med_ctrl = Vec::new();
    for &n in &cfg.n_list {
        let h = cfg.bandwidth.h(n);
        let v_grid = interior_grid(h, grid_points)?;
        let seed = path_seed(cfg, n);
        let nf = n as f64;
        let sups: Vec<f64> = match estimator {
            RateEstimator::KernelRegression { trend, noise_scale } => (0..cfg.replications as u64)
                .into_par_iter()
                .map(|r| {
                    let p = simulate_path_rep(&cfg.model, n, seed, r, None)?;
                    let y: Vec<f64> = (1..=n).map(|i| trend.eval(p.u(i)) + noise_scale * p.value(i)).collect();
                    let g = |u: f64| trend.eval(u);
                    let est = kernel_regression(&y, &cfg.kernel, h, &v_grid, Some(&g))?;
                    Ok(est.sup_error().unwrap_or(0.0))
                })
                .collect::<Result<_>>()?,
            RateEstimator::KernelDensity { x_range, x_points } => {
                let xs: Vec<f64> = (0..*x_points)
                    .map(|k| x_range[0] + (x_range[1] - x_range[0]) * k as f64 / (*x_points - 1).max(1) as f64)
                    .collect();
                let surfaces: Vec<Vec<f64>> = (0..cfg.replications as u64)
                    .into_par_iter()
                    .map(|r| {
                        let p = simulate_path_rep(&cfg.model, n, seed, r, None)?;
                        Ok(kernel_density(&p.values, &cfg.kernel, &cfg.kernel, h, h, &xs, &v_grid)?.values)
                    })
                    .collect::<Result<_>>()?;
                // expectation estimated by the replication mean
                let m = surfaces[0].len();
                let mut center = vec![0.0; m];
                for s in &surfaces {
                    center.iter_mut().zip(s).for_each(|(c, v)| *c += v);
                }
                center.iter_mut().for_each(|c| *c /= surfaces.len() as f64);
                surfaces
                    .iter()
                    .map(|s| s.iter().zip(&center).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                    .collect()
            }
        };
        let tau = match estimator {
            RateEstimator::KernelRegression { .. } => (nf.ln() / (nf * h)).sqrt(),
            RateEstimator::KernelDensity { .. } => (nf.ln() / (nf * h * h)).sqrt(),
        };
        let ratios: Vec<f64> = sups.iter().map(|s| s / tau).collect();
        let ctrl: Vec<f64> = sups.iter().map(|s| s * nf).collect();
        let (mr, mc) = (median(&ratios), median(&ctrl));
        med.push(mr);
        med_ctrl.push(mc);
        out.rows.push(
            Row::new("rate", Some(n))
                .with("h", h)
                .with("tau", tau)
                .with("median_sup", median(&sups))
                .with("median_ratio", mr)
                .with("median_ratio_control", mc),
        );
    }
    let f = cfg.tolerances.rate_factor;
    let (s, s_ctrl) = (spread(&med), spread(&med_ctrl));
    if cfg.negative_control {
        out.verdicts.push(Verdict::lt("max/min of median sup/tau_n with tau_n = 1/n", s_ctrl, f));
    } else {
        out.verdicts.push(Verdict::lt("max/min of median sup/tau_n across n", s, f));
        out.verdicts.push(Verdict::control("negative control: tau_n = 1/n must not be bounded", s_ctrl, f, s_ctrl >= f));
    }
    Ok(out)
}
