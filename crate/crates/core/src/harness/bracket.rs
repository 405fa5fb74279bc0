use rand::Rng;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::report::{Row, Verdict};
use super::{path_seed, Outcome};
use crate::error::{LsepError, Result};
use crate::estimators::{edf_brackets, BracketParams, Brackets};
use crate::kernel::Kernel;
use crate::process_models::{simulate_path_rep, Path, ProcessModel};
use crate::rng;

/// Positions j (into `points`) of the sampled brackets [x_{j-1}, x_j]:
/// both outer brackets, the central one and an even spread.
fn sampled_positions(len: usize, count: usize) -> Vec<usize> {
    let last = len - 1;
    let mut js: Vec<usize> = (0..count).map(|k| 1 + (last - 1) * k / (count - 1).max(1)).collect();
    js.push(len / 2);
    js.sort_unstable();
    js.dedup();
    js
}

/// ||f_b - f_a||_{2,n}^2 = (1/n) sum D(i/n)^2 P(a < X_i <= b), per replication.
fn bracket_mass(p: &Path, kernel: &Kernel, v: f64, h: f64, a: f64, b: f64) -> f64 {
    let n = p.n;
    (1..=n)
        .map(|i| {
            let d2 = kernel.eval((p.u(i) - v) / h).powi(2) / h;
            let x = p.value(i);
            if d2 > 0.0 && a < x && x <= b {
                d2
            } else {
                0.0
            }
        })
        .sum::<f64>()
        / n as f64
}

/// (norm, se) for each bracket.
fn norms(paths: &[Path], kernel: &Kernel, v: f64, h: f64, brackets: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let per: Vec<Vec<f64>> = paths.par_iter().map(|p| brackets.iter().map(|(a, b)| bracket_mass(p, kernel, v, h, *a, *b)).collect()).collect();
    (0..brackets.len())
        .map(|k| {
            let col: Vec<f64> = per.iter().map(|r| r[k]).collect();
            let m = crate::stats::mean(&col);
            let se = crate::stats::std_error(&col);
            let norm = m.sqrt();
            (norm, if m > 0.0 { se / (2.0 * norm) } else { 0.0 })
        })
        .collect()
}

/// Every 16th interior point: spacing of the grid for 4 gamma.
fn coarsened(b: &Brackets) -> Vec<f64> {
    let inner = &b.points[1..b.points.len() - 1];
    let mid = inner.len() / 2;
    let mut pts = vec![f64::NEG_INFINITY];
    pts.extend(inner.iter().enumerate().filter(|(k, _)| (*k as i64 - mid as i64) % 16 == 0).map(|(_, x)| *x));
    pts.push(f64::INFINITY);
    pts
}

pub(super) fn run(cfg: &ExperimentConfig, gammas: &[f64], s: f64, v: f64, h: f64, sampled: usize) -> Result<Outcome> {
    let mut out = Outcome::default();
    let model = match &cfg.model {
        ProcessModel::Recursive(m) => m,
        ProcessModel::Linear(_) => return Err(LsepError::Unsupported("bracket construction needs a recursive model".into())),
    };
    let params = BracketParams::from_model(model, s)?;
    let n = cfg.n_list[0];
    let seed = path_seed(cfg, n);
    let paths: Vec<Path> =
        (0..cfg.replications as u64).into_par_iter().map(|r| simulate_path_rep(&cfg.model, n, seed, r, None)).collect::<Result<_>>()?;
    let k_sup = cfg.kernel.sup();
    let mut probe = rng::stream(cfg.seed, rng::DRAWS, 0);
    let k = cfg.tolerances.mc_se;
    for &gamma in gammas {
        let b = edf_brackets(gamma, &params, k_sup)?;
        // coverage on wide random points and the extremes
        let mut xs: Vec<f64> = (0..1000).map(|_| (probe.random::<f64>() - 0.5) * 4.0 * b.x_n.max(1.0)).collect();
        xs.extend([f64::MIN, f64::MAX, -b.x_n, b.x_n, 0.0]);
        let uncovered = xs
            .iter()
            .filter(|x| {
                let j = b.locate(**x);
                !(b.points[j - 1] <= **x && **x <= b.points[j])
            })
            .count();
        let js = sampled_positions(b.points.len(), sampled);
        let br: Vec<(f64, f64)> = js.iter().map(|j| (b.points[j - 1], b.points[*j])).collect();
        let nm = norms(&paths, &cfg.kernel, v, h, &br);
        let excess = nm.iter().map(|(norm, se)| norm - gamma - k * se).fold(f64::NEG_INFINITY, f64::max);
        let max_norm = nm.iter().map(|p| p.0).fold(0.0, f64::max);

        let coarse = coarsened(&b);
        let cj = coarse.len() / 2;
        let cn = norms(&paths, &cfg.kernel, v, h, &[(coarse[cj - 1], coarse[cj])])[0];
        let ctrl_excess = cn.0 - gamma - k * cn.1;

        let bound = b.count_bound(gamma, s);
        out.rows.push(
            Row::new(format!("gamma={gamma}"), Some(n))
                .with("gamma", gamma)
                .with("N", b.n as f64)
                .with("count_bound", bound)
                .with("c_n", b.c_n)
                .with("x_n", b.x_n)
                .with("spacing", b.spacing)
                .with("max_sampled_norm", max_norm)
                .with("uncovered", uncovered as f64)
                .with("control_norm", cn.0),
        );
        out.verdicts.push(Verdict::le(format!("gamma = {gamma}: every probe point covered"), uncovered as f64, 0.0));
        out.verdicts.push(Verdict::le(format!("gamma = {gamma}: N <= C_N gamma^(-2/s-2)"), b.n as f64, bound));
        if cfg.negative_control {
            out.verdicts.push(Verdict::le(format!("gamma = {gamma}: coarsened bracket norm <= gamma + 4 se"), ctrl_excess, 0.0));
        } else {
            out.verdicts.push(Verdict::le(format!("gamma = {gamma}: sampled bracket norms <= gamma + 4 se"), excess, 0.0));
            out.verdicts.push(Verdict::control(
                format!("negative control, gamma = {gamma}: 16x coarser bracket must exceed gamma"),
                ctrl_excess,
                0.0,
                ctrl_excess > 0.0,
            ));
        }
    }
    Ok(out)
}
