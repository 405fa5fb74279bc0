use rayon::prelude::*;

use super::config::{CltStatistic, ExperimentConfig};
use super::report::{Row, Verdict};
use super::{path_seed, Outcome};
use crate::empirical_process::{long_run_covariance, CovarianceMc, CovarianceSpec};
use crate::error::{LsepError, Result};
use crate::estimators::{edf_reference, local_edf, local_mad, local_mean, mad_reference};
use crate::function_class::Base;
use crate::process_models::simulate_path_rep;
use crate::rng;
use crate::stats::{covariance, ks_band_1pct, ks_distance_normal, mean, variance};

const REFERENCE_DRAWS: usize = 100_000;

/// Unnormalized local mean (1/n) sum K_h(i/n - v) X_i.
fn local_sum(x: &[f64], cfg: &ExperimentConfig, h: f64, v: f64) -> Result<f64> {
    let n = x.len();
    let mass = crate::estimators::kernel_mass(n, &cfg.kernel, h, v)?;
    Ok(local_mean(x, &cfg.kernel, h, v)? * mass)
}

pub(super) fn run(
    cfg: &ExperimentConfig,
    statistic: &CltStatistic,
    v: f64,
    oracle: Option<f64>,
    cov_mc: Option<CovarianceMc>,
) -> Result<Outcome> {
    let mut out = Outcome::default();
    let n = cfg.n_list[0];
    let h = cfg.bandwidth.h(n);
    let nh = n as f64 * h;
    if nh < 50.0 {
        return Err(LsepError::invalid(format!("n h = {nh:.1} is below 50; refusing to run the CLT check")));
    }
    let ref_seed = rng::derive_seed(cfg.seed, rng::DRAWS);
    // centering references and the bases whose long-run covariances are the oracle
    let (refs, bases): (Vec<f64>, Vec<Base>) = match statistic {
        CltStatistic::LocalMean => {
            let (mu, _) = mad_reference(&cfg.model, v, REFERENCE_DRAWS, ref_seed)?;
            let mass = crate::estimators::kernel_mass(n, &cfg.kernel, h, v)?;
            (vec![mu * mass], vec![Base::Identity])
        }
        CltStatistic::LocalMad => {
            let (mu, mad) = mad_reference(&cfg.model, v, REFERENCE_DRAWS, ref_seed)?;
            let g_mu = edf_reference(&cfg.model, &[mu], v, REFERENCE_DRAWS, ref_seed)?[0];
            if (2.0 * g_mu - 1.0).abs() > 0.01 {
                return Err(LsepError::Unsupported(format!(
                    "local MAD check needs G(mu) = 1/2 at the stationary mean; got {g_mu:.4}"
                )));
            }
            (vec![mad], vec![Base::AbsDeviation { theta: mu }])
        }
        CltStatistic::LocalEdf { x } => {
            let mut xs = x.clone();
            xs.sort_by(f64::total_cmp);
            (edf_reference(&cfg.model, &xs, v, REFERENCE_DRAWS, ref_seed)?, xs.iter().map(|x| Base::Indicator { x: *x }).collect())
        }
    };
    let m = bases.len();
    let seed = path_seed(cfg, n);
    let z: Vec<Vec<f64>> = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|r| {
            let p = simulate_path_rep(&cfg.model, n, seed, r, None)?;
            let stat: Vec<f64> = match statistic {
                CltStatistic::LocalMean => vec![local_sum(&p.values, cfg, h, v)?],
                CltStatistic::LocalMad => vec![local_mad(&p.values, &cfg.kernel, h, v)?],
                CltStatistic::LocalEdf { x } => {
                    let mut xs = x.clone();
                    xs.sort_by(f64::total_cmp);
                    local_edf(&p.values, &cfg.kernel, h, &xs, v)?.values
                }
            };
            Ok(stat.iter().zip(&refs).map(|(s, r)| nh.sqrt() * (s - r)).collect())
        })
        .collect::<Result<_>>()?;

    // oracle covariance matrix
    let spec = CovarianceSpec::local(v, h, cfg.kernel.clone());
    let mc = cov_mc.unwrap_or_default();
    let cov_seed = rng::derive_seed(cfg.seed, rng::STATIONARY);
    let mut sigma = vec![vec![0.0; m]; m];
    for a in 0..m {
        for b in a..m {
            let s = match oracle {
                Some(o) if m == 1 => o,
                _ => {
                    let rec = long_run_covariance(&bases[a], &bases[b], &cfg.model, &spec, mc, cov_seed)?;
                    if rec.tail_flag {
                        out.warnings.push(format!("covariance ({a}, {b}): truncated tail may exceed 5% of Sigma"));
                    }
                    rec.sigma
                }
            };
            sigma[a][b] = s;
            sigma[b][a] = s;
        }
    }
    let band = cfg.tolerances.ks_safety * ks_band_1pct(cfg.replications);
    let tol = cfg.tolerances.variance_rel;
    let scale = if cfg.negative_control { 0.5 } else { 1.0 };
    let cols: Vec<Vec<f64>> = (0..m).map(|k| z.iter().map(|row| row[k]).collect()).collect();
    for k in 0..m {
        let var = variance(&cols[k]);
        let s = sigma[k][k];
        let rel = (var / (scale * s) - 1.0).abs();
        let ks = ks_distance_normal(&cols[k], 0.0, (scale * s).sqrt());
        let label = if m > 1 { format!("[{k}]") } else { String::new() };
        out.rows.push(
            Row::new(format!("clt{label}"), Some(n))
                .with("h", h)
                .with("mean", mean(&cols[k]))
                .with("variance", var)
                .with("sigma", s)
                .with("relative_error", rel)
                .with("ks", ks)
                .with("ks_band", band),
        );
        out.verdicts.push(Verdict::le(format!("variance{label} within {tol} of Sigma"), rel, tol));
        out.verdicts.push(Verdict::lt(format!("KS{label} to N(0, Sigma) below the 1% band"), ks, band));
        if !cfg.negative_control {
            let wrong = (var / (0.5 * s) - 1.0).abs();
            out.verdicts.push(Verdict::control(format!("negative control: Sigma{label}/2 must be rejected"), wrong, tol, wrong > tol));
        }
    }
    if m > 1 {
        let mut num = 0.0;
        let mut den = 0.0;
        for a in 0..m {
            for b in 0..m {
                num += (covariance(&cols[a], &cols[b]) - scale * sigma[a][b]).powi(2);
                den += (scale * sigma[a][b]).powi(2);
            }
        }
        let frob = (num / den).sqrt();
        out.rows.push(Row::new("clt_matrix", Some(n)).with("frobenius_relative_error", frob));
        out.verdicts.push(Verdict::le(format!("covariance matrix within {tol} (Frobenius)"), frob, tol));
    }
    Ok(out)
}
