//! G_n(f), its martingale decomposition, long-run covariances of the
//! stationary approximation and the Monte Carlo variance-bound check.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dependence::{analytic_decay_bound, DecayProfile};
use crate::error::{LsepError, Result};
use crate::function_class::{class_profile, Base, FunctionClass};
use crate::kernel::Kernel;
use crate::poly::Poly;
use crate::process_models::{conditional_means, gaussian_marginals, simulate_path_rep, simulate_stationary_rep, Path, ProcessModel};
use crate::rng;
use crate::seminorm::v_norm;
use crate::stats::{mean, std_error, variance};

/// How E f(Z_i, i/n) is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Centering {
    /// Exact Gaussian marginals (homoscedastic affine recursions, linear models).
    Analytic,
    /// Average over independent replications on a separate stream.
    MonteCarlo { reps: usize, seed: u64 },
    /// Caller supplied means for i = 1..n.
    Provided { means: Vec<f64> },
}

impl Centering {
    /// Monte Carlo centering with four times the experiment's replications.
    pub fn default_for(reps: usize, seed: u64) -> Self {
        Centering::MonteCarlo { reps: 4 * reps, seed: rng::derive_seed(seed, rng::CENTER) }
    }
}

/// E f(Z_i, u_i) for i = 1..n, on paths shaped like `path` (same n, burn-in
/// and, for stationary paths, the same frozen u).
pub fn expected_values(f: &FunctionClass, model: &ProcessModel, path: &Path, centering: &Centering) -> Result<Vec<f64>> {
    let n = path.n;
    match centering {
        Centering::Provided { means } => {
            if means.len() != n {
                return Err(LsepError::invalid(format!("expected {n} provided means, got {}", means.len())));
            }
            Ok(means.clone())
        }
        Centering::Analytic => {
            if let Base::Constant { c } = f.base {
                return Ok((1..=n).map(|i| c * f.d(path.u(i))).collect());
            }
            let marg = gaussian_marginals(model, n, path.burn_in, path.frozen_u)?;
            marg.iter()
                .enumerate()
                .map(|(k, (mu, s))| {
                    let d = f.d(path.u(k + 1));
                    if d == 0.0 {
                        Ok(0.0)
                    } else {
                        Ok(d * f.base.gaussian_mean(*mu, *s)?)
                    }
                })
                .collect()
        }
        Centering::MonteCarlo { reps, seed } => {
            if *reps == 0 {
                return Err(LsepError::invalid("Monte Carlo centering needs reps >= 1"));
            }
            let rows = (0..*reps as u64)
                .into_par_iter()
                .map(|r| {
                    let p = match path.frozen_u {
                        Some(u) => simulate_stationary_rep(model, u, n, *seed, r, Some(path.burn_in))?,
                        None => simulate_path_rep(model, n, *seed, r, Some(path.burn_in))?,
                    };
                    Ok((1..=n).map(|i| f.eval(p.value(i), p.u(i))).collect::<Vec<f64>>())
                })
                .collect::<Result<Vec<_>>>()?;
            // fixed summation order keeps results independent of the thread count
            let mut sums = vec![0.0; n];
            for row in rows {
                sums.iter_mut().zip(row).for_each(|(x, y)| *x += y);
            }
            Ok(sums.into_iter().map(|s| s / *reps as f64).collect())
        }
    }
}

/// G_n(f) = n^{-1/2} sum_i (f(Z_i, i/n) - E f(Z_i, i/n)).
pub fn evaluate_gn(f: &FunctionClass, path: &Path, means: &[f64]) -> Result<f64> {
    if means.len() != path.n {
        return Err(LsepError::invalid("means must have one entry per observation"));
    }
    let s: f64 = (1..=path.n).map(|i| f.eval(path.value(i), path.u(i)) - means[i - 1]).sum();
    Ok(s / (path.n as f64).sqrt())
}

/// (G_n^(1), G_n^(2)): the martingale part built from
/// f - E[f | G_{i-1}] and the conditional-mean remainder.
pub fn martingale_parts(f: &FunctionClass, path: &Path, model: &ProcessModel, means: &[f64]) -> Result<(f64, f64)> {
    let (g1, g2) = martingale_increments(f, path, model, means)?;
    let rn = (path.n as f64).sqrt();
    Ok((g1.iter().sum::<f64>() / rn, g2.iter().sum::<f64>() / rn))
}

/// Per-observation increments of the two parts.
pub fn martingale_increments(f: &FunctionClass, path: &Path, model: &ProcessModel, means: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if means.len() != path.n {
        return Err(LsepError::invalid("means must have one entry per observation"));
    }
    let cond = conditional_means(model, path, f)?;
    let g1 = (1..=path.n).map(|i| f.eval(path.value(i), path.u(i)) - cond[i - 1]).collect();
    let g2 = cond.iter().zip(means).map(|(c, m)| c - m).collect();
    Ok((g1, g2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovarianceCase {
    /// int_0^1 omega(u)^2 S(u) du
    Global {
        #[serde(default = "unit")]
        weight: Poly,
    },
    /// int K^2 omega(v)^2 S(v)
    Local {
        center: f64,
        bandwidth: f64,
        #[serde(default)]
        kernel: Kernel,
        #[serde(default = "unit")]
        weight: Poly,
    },
}

fn unit() -> Poly {
    Poly::constant(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    pub case: CovarianceCase,
    /// J; default min{J >= 1 : beta(J) <= 1e-3 beta(1)}
    #[serde(default)]
    pub lag_truncation: Option<usize>,
    #[serde(default = "default_grid")]
    pub u_grid: usize,
}

fn default_grid() -> usize {
    64
}

impl CovarianceSpec {
    pub fn local(center: f64, bandwidth: f64, kernel: Kernel) -> Self {
        CovarianceSpec {
            case: CovarianceCase::Local { center, bandwidth, kernel, weight: unit() },
            lag_truncation: None,
            u_grid: default_grid(),
        }
    }

    pub fn global() -> Self {
        CovarianceSpec { case: CovarianceCase::Global { weight: unit() }, lag_truncation: None, u_grid: default_grid() }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.case {
            CovarianceCase::Local { center, bandwidth, kernel, .. } => {
                if !(*center > 0.0 && *center < 1.0) || !(*bandwidth > 0.0) {
                    return Err(LsepError::invalid("local covariance needs v in (0, 1) and h > 0"));
                }
                kernel.validate()
            }
            CovarianceCase::Global { .. } => {
                if self.u_grid < 2 {
                    return Err(LsepError::invalid("u_grid needs at least 2 points"));
                }
                Ok(())
            }
        }
    }
}

/// Monte Carlo sizing for covariance estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceMc {
    pub reps: usize,
    pub length: usize,
}

impl Default for CovarianceMc {
    fn default() -> Self {
        CovarianceMc { reps: 100, length: 4000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceRecord {
    pub case: String,
    pub f: Base,
    pub g: Base,
    pub sigma: f64,
    pub mc_se: f64,
    pub tail_flag: bool,
    pub lag_truncation: usize,
    pub tail_bound: f64,
}

fn base_profile(model: &ProcessModel, base: &Base) -> Option<DecayProfile> {
    class_profile(model, base, model.moment_s()).ok()
}

/// Default lag truncation from the dependence profile.
pub fn default_lag_truncation(profile: &DecayProfile) -> usize {
    if profile.is_zero() {
        return 1;
    }
    let target = 1e-3 * profile.beta(1);
    (profile.q_beta_below(target) as usize).max(1)
}

/// sum_{|j| <= J} Cov(f(X~_0(u)), g(X~_j(u))) per replication.
fn lagged_sums(f: &Base, g: &Base, model: &ProcessModel, u: f64, lags: usize, mc: CovarianceMc, seed: u64) -> Result<Vec<f64>> {
    let series: Vec<(Vec<f64>, Vec<f64>)> = (0..mc.reps as u64)
        .into_par_iter()
        .map(|r| {
            let p = simulate_stationary_rep(model, u, mc.length, seed, r, None)?;
            Ok((p.values.iter().map(|x| f.eval(*x)).collect(), p.values.iter().map(|x| g.eval(*x)).collect()))
        })
        .collect::<Result<_>>()?;
    let fbar = mean(&series.iter().flat_map(|s| s.0.iter().copied()).collect::<Vec<_>>());
    let gbar = mean(&series.iter().flat_map(|s| s.1.iter().copied()).collect::<Vec<_>>());
    let len = mc.length;
    Ok(series
        .par_iter()
        .map(|(a, b)| {
            let mut total = 0.0;
            for j in 0..=lags.min(len - 1) {
                let mut pos = 0.0;
                let mut neg = 0.0;
                for t in 0..len - j {
                    pos += (a[t] - fbar) * (b[t + j] - gbar);
                    if j > 0 {
                        neg += (b[t] - gbar) * (a[t + j] - fbar);
                    }
                }
                total += (pos + neg) / len as f64;
            }
            total
        })
        .collect())
}

/// Sigma_{f,g} of the global or local version, estimated on stationary paths.
pub fn long_run_covariance(
    f: &Base,
    g: &Base,
    model: &ProcessModel,
    spec: &CovarianceSpec,
    mc: CovarianceMc,
    seed: u64,
) -> Result<CovarianceRecord> {
    spec.validate()?;
    model.validate()?;
    if mc.reps < 2 || mc.length < 2 {
        return Err(LsepError::invalid("covariance Monte Carlo needs reps >= 2 and length >= 2"));
    }
    let pf = base_profile(model, f);
    let pg = base_profile(model, g);
    let lags = match spec.lag_truncation {
        Some(j) => j,
        None => {
            let state = analytic_decay_bound(model, model.moment_s())?;
            let jf = pf.as_ref().map(default_lag_truncation).unwrap_or_else(|| default_lag_truncation(&state));
            let jg = pg.as_ref().map(default_lag_truncation).unwrap_or_else(|| default_lag_truncation(&state));
            jf.max(jg)
        }
    };
    // points and weights of the u-integral
    let (nodes, case): (Vec<(f64, f64)>, &str) = match &spec.case {
        CovarianceCase::Local { center, kernel, weight, .. } => {
            (vec![(*center, kernel.integral_sq() * weight.eval(*center).powi(2))], "local")
        }
        CovarianceCase::Global { weight } => {
            let m = spec.u_grid;
            let du = 1.0 / (m - 1) as f64;
            let pts = (0..m)
                .map(|k| {
                    let u = k as f64 * du;
                    let tw = if k == 0 || k == m - 1 { 0.5 * du } else { du };
                    (u, tw * weight.eval(u).powi(2))
                })
                .collect();
            (pts, "global")
        }
    };
    let mut sigma = 0.0;
    let mut var = 0.0;
    let mut sd_f: f64 = 0.0;
    let mut sd_g: f64 = 0.0;
    let mut weight_sum = 0.0;
    for (k, (u, w)) in nodes.iter().enumerate() {
        let s = lagged_sums(f, g, model, *u, lags, mc, rng::derive_seed(seed, k as u64))?;
        sigma += w * mean(&s);
        var += (w * std_error(&s)).powi(2);
        weight_sum += w;
        sd_f = sd_f.max(lagged_sums(f, f, model, *u, 0, CovarianceMc { reps: mc.reps.min(20), ..mc }, seed)?
            .iter()
            .sum::<f64>()
            .max(0.0)
            .sqrt()
            / (mc.reps.min(20) as f64).sqrt());
        sd_g = sd_g.max(lagged_sums(g, g, model, *u, 0, CovarianceMc { reps: mc.reps.min(20), ..mc }, seed)?
            .iter()
            .sum::<f64>()
            .max(0.0)
            .sqrt()
            / (mc.reps.min(20) as f64).sqrt());
    }
    // |Cov(f_0, g_j)| <= sd_f sum_{k >= j} Delta_g(k), both tails
    let tail_bound = match (&pf, &pg) {
        (Some(a), Some(b)) => weight_sum * (sd_f * b.beta(lags as u64 + 1) + sd_g * a.beta(lags as u64 + 1)),
        _ => f64::INFINITY,
    };
    Ok(CovarianceRecord {
        case: case.into(),
        f: f.clone(),
        g: g.clone(),
        sigma,
        mc_se: var.sqrt(),
        tail_flag: tail_bound > 0.05 * sigma.abs(),
        lag_truncation: lags,
        tail_bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub var_hat: f64,
    /// ||f||_{2,n} estimated on the same replications
    pub f2n: f64,
    pub d_n: f64,
    pub v: f64,
    pub v_scale: f64,
    /// (v_scale V)^2 (1 + 4 relative standard errors of a sample variance)
    pub threshold: f64,
    pub pass: bool,
}

/// Per-replication (sum_i f, sum_i f^2) for each class on shared paths.
fn replication_sums(classes: &[FunctionClass], model: &ProcessModel, n: usize, reps: usize, seed: u64) -> Result<Vec<Vec<(f64, f64)>>> {
    (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let p = simulate_path_rep(model, n, seed, r, None)?;
            Ok(classes
                .iter()
                .map(|f| {
                    let mut s = 0.0;
                    let mut s2 = 0.0;
                    for i in 1..=n {
                        let v = f.eval(p.value(i), p.u(i));
                        s += v;
                        s2 += v * v;
                    }
                    (s, s2)
                })
                .collect())
        })
        .collect()
}

fn variance_verdict(sums: &[(f64, f64)], n: usize, d_n: f64, profile: &DecayProfile, v_scale: f64) -> VarianceReport {
    let rn = (n as f64).sqrt();
    let g: Vec<f64> = sums.iter().map(|(s, _)| s / rn).collect();
    let var_hat = variance(&g);
    let f2n = (sums.iter().map(|(_, s2)| s2).sum::<f64>() / (sums.len() * n) as f64).sqrt();
    let v = v_norm(f2n, d_n, profile);
    let reps = sums.len() as f64;
    let threshold = (v_scale * v).powi(2) * (1.0 + 4.0 * (2.0 / (reps - 1.0)).sqrt());
    VarianceReport { var_hat, f2n, d_n, v, v_scale, threshold, pass: var_hat <= threshold }
}

/// Var(G_n(f)) against V(f)^2. Centering is irrelevant for the variance,
/// so the uncentered sums are used. `v_scale` < 1 gives a negative control.
pub fn variance_bound_check(
    f: &FunctionClass,
    model: &ProcessModel,
    profile: &DecayProfile,
    n: usize,
    reps: usize,
    seed: u64,
    v_scale: f64,
) -> Result<VarianceReport> {
    let all = variance_bound_batch(std::slice::from_ref(f), model, &[*profile], n, reps, seed, v_scale)?;
    Ok(all.into_iter().next().unwrap())
}

/// Several classes checked on one set of simulated paths.
pub fn variance_bound_batch(
    classes: &[FunctionClass],
    model: &ProcessModel,
    profiles: &[DecayProfile],
    n: usize,
    reps: usize,
    seed: u64,
    v_scale: f64,
) -> Result<Vec<VarianceReport>> {
    if reps < 3 {
        return Err(LsepError::invalid("variance check needs at least 3 replications"));
    }
    if classes.len() != profiles.len() {
        return Err(LsepError::invalid("one profile per class is required"));
    }
    let sums = replication_sums(classes, model, n, reps, seed)?;
    Ok(classes
        .iter()
        .zip(profiles)
        .enumerate()
        .map(|(c, (f, p))| {
            let col: Vec<(f64, f64)> = sums.iter().map(|row| row[c]).collect();
            variance_verdict(&col, n, f.d_n(n), p, v_scale)
        })
        .collect())
}
