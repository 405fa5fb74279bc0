use rayon::prelude::*;

use super::{interior, window, EstimatorResult};
use crate::error::{LsepError, Result};
use crate::function_class::Base;
use crate::kernel::Kernel;
use crate::process_models::{conditional_expectation, one_step, simulate_stationary_rep, ProcessModel};
use crate::rng;

/// ghat(v) = (1/n) sum_i K_h(i/n - v) Y_i. With a known trend the reference
/// is the same average applied to g(i/n).
pub fn kernel_regression(
    y: &[f64],
    kernel: &Kernel,
    h: f64,
    v_grid: &[f64],
    trend: Option<&(dyn Fn(f64) -> f64 + Sync)>,
) -> Result<EstimatorResult> {
    let n = y.len();
    let v = interior(v_grid, h)?;
    let values = v
        .par_iter()
        .map(|v| {
            let (lo, w) = window(n, kernel, h, *v)?;
            Ok(w.iter().enumerate().map(|(k, w)| w * y[lo + k - 1]).sum::<f64>() / n as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let reference = match trend {
        Some(g) => Some(v.iter().map(|v| regression_reference(n, kernel, h, *v, g)).collect::<Result<Vec<f64>>>()?),
        None => None,
    };
    Ok(EstimatorResult { estimator: "kernel_regression".into(), v, x: None, values, reference, bandwidths: vec![h] })
}

/// (1/n) sum_i K_h(i/n - v) g(i/n)
pub fn regression_reference(n: usize, kernel: &Kernel, h: f64, v: f64, g: &(dyn Fn(f64) -> f64 + Sync)) -> Result<f64> {
    let (lo, w) = window(n, kernel, h, v)?;
    Ok(w.iter().enumerate().map(|(k, w)| w * g((lo + k) as f64 / n as f64)).sum::<f64>() / n as f64)
}

/// ghat(x, v) = (1/n) sum_i K_{h1}(i/n - v) Kt_{h2}(X_i - x) on the product grid.
pub fn kernel_density(
    x_obs: &[f64],
    kernel: &Kernel,
    kernel_x: &Kernel,
    h1: f64,
    h2: f64,
    x_grid: &[f64],
    v_grid: &[f64],
) -> Result<EstimatorResult> {
    if !(h2 > 0.0) {
        return Err(LsepError::invalid("h2 must be positive"));
    }
    kernel_x.validate()?;
    let n = x_obs.len();
    let v = interior(v_grid, h1)?;
    let xs = sorted(x_grid)?;
    let rows = v
        .par_iter()
        .map(|v| {
            let (lo, w) = window(n, kernel, h1, *v)?;
            Ok(xs
                .iter()
                .map(|x| {
                    w.iter().enumerate().map(|(k, w)| w * kernel_x.scaled(x_obs[lo + k - 1] - x, h2)).sum::<f64>() / n as f64
                })
                .collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut vv = Vec::new();
    let mut xx = Vec::new();
    for v in &v {
        vv.extend(std::iter::repeat_n(*v, xs.len()));
        xx.extend(xs.iter().copied());
    }
    Ok(EstimatorResult {
        estimator: "kernel_density".into(),
        v: vv,
        x: Some(xx),
        values: rows.concat(),
        reference: None,
        bandwidths: vec![h1, h2],
    })
}

fn sorted(x: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() || x.iter().any(|x| x.is_nan()) {
        return Err(LsepError::invalid("x grid must be nonempty and free of NaN"));
    }
    let mut x = x.to_vec();
    x.sort_by(f64::total_cmp);
    Ok(x)
}

/// Ghat(x, v) = (1/n) sum_i K_h(i/n - v) 1{X_i <= x}.
pub fn local_edf(x_obs: &[f64], kernel: &Kernel, h: f64, x_grid: &[f64], v: f64) -> Result<EstimatorResult> {
    let n = x_obs.len();
    let vs = interior(&[v], h)?;
    let xs = sorted(x_grid)?;
    let (lo, w) = window(n, kernel, h, vs[0])?;
    // one pass over the window sorted by X
    let mut pairs: Vec<(f64, f64)> = w.iter().enumerate().map(|(k, w)| (x_obs[lo + k - 1], *w)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut values = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    let mut j = 0;
    for x in &xs {
        while j < pairs.len() && pairs[j].0 <= *x {
            acc += pairs[j].1;
            j += 1;
        }
        values.push(acc / n as f64);
    }
    Ok(EstimatorResult {
        estimator: "local_edf".into(),
        v: vec![vs[0]; xs.len()],
        x: Some(xs),
        values,
        reference: None,
        bandwidths: vec![h],
    })
}

/// Xbar_n(v) = sum_i K_h(i/n - v) X_i / sum_i K_h(i/n - v)
pub fn local_mean(x_obs: &[f64], kernel: &Kernel, h: f64, v: f64) -> Result<f64> {
    let (lo, w) = window(x_obs.len(), kernel, h, v)?;
    Ok(w.iter().enumerate().map(|(k, w)| w * x_obs[lo + k - 1]).sum::<f64>() / w.iter().sum::<f64>())
}

/// mad_n(v) = (1/n) sum_i K_h(i/n - v) |X_i - Xbar_n(v)|.
pub fn local_mad(x_obs: &[f64], kernel: &Kernel, h: f64, v: f64) -> Result<f64> {
    let vs = interior(&[v], h)?;
    let n = x_obs.len();
    let mu = local_mean(x_obs, kernel, h, vs[0])?;
    let (lo, w) = window(n, kernel, h, vs[0])?;
    Ok(w.iter().enumerate().map(|(k, w)| w * (x_obs[lo + k - 1] - mu).abs()).sum::<f64>() / n as f64)
}

/// Conditional (location, scale) pairs of a long stationary path at v.
fn stationary_steps(model: &ProcessModel, v: f64, draws: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    if draws == 0 {
        return Err(LsepError::invalid("reference needs at least one draw"));
    }
    let p = simulate_stationary_rep(model, v, draws, rng::derive_seed(seed, rng::DRAWS), 0, None)?;
    Ok((1..=draws).map(|i| one_step(model, &p, i)).collect())
}

/// G_{X~_1(v)}(x) = E G_eps((x - m)/sigma) over stationary draws.
pub fn edf_reference(model: &ProcessModel, x_grid: &[f64], v: f64, draws: usize, seed: u64) -> Result<Vec<f64>> {
    let steps = stationary_steps(model, v, draws, seed)?;
    let innov = model.innovation();
    Ok(sorted(x_grid)?
        .iter()
        .map(|x| steps.iter().map(|(m, s)| innov.cdf((x - m) / s)).sum::<f64>() / steps.len() as f64)
        .collect())
}

/// Density of X~_1(v): E g_eps((x - m)/sigma)/sigma over stationary draws.
pub fn density_reference(model: &ProcessModel, x_grid: &[f64], v: f64, draws: usize, seed: u64) -> Result<Vec<f64>> {
    let steps = stationary_steps(model, v, draws, seed)?;
    let innov = model.innovation();
    Ok(sorted(x_grid)?
        .iter()
        .map(|x| steps.iter().map(|(m, s)| innov.pdf((x - m) / s) / s).sum::<f64>() / steps.len() as f64)
        .collect())
}

/// (mu, E|X~_0(v) - mu|) with mu = E X~_0(v), inner expectations exact.
pub fn mad_reference(model: &ProcessModel, v: f64, draws: usize, seed: u64) -> Result<(f64, f64)> {
    let steps = stationary_steps(model, v, draws, seed)?;
    let innov = model.innovation();
    // innovations are centered
    let mu = steps.iter().map(|(m, _)| m).sum::<f64>() / steps.len() as f64;
    let base = Base::AbsDeviation { theta: mu };
    let mad = steps
        .par_iter()
        .map(|(m, s)| conditional_expectation(&innov, &base, *m, *s, 1))
        .collect::<Result<Vec<f64>>>()?;
    Ok((mu, mad.iter().sum::<f64>() / mad.len() as f64))
}
