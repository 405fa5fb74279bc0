use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::report::{PlotPoint, Row, Verdict};
use super::{path_seed, Outcome};
use crate::dependence::Bernstein;
use crate::empirical_process::{evaluate_gn, expected_values, Centering};
use crate::error::{LsepError, Result};
use crate::function_class::{class_profile, FunctionClass};
use crate::process_models::{simulate_path, simulate_path_rep};
use crate::seminorm::v_tilde_with;
use crate::stats::{quantile, std_dev};

/// Everything the envelope needs at one n.
struct TailSample {
    n: usize,
    abs_g: Vec<f64>,
    v_tilde: f64,
    m: f64,
    phi: f64,
    q: u64,
}

impl TailSample {
    /// x^2 / (V~^2 + M Phi x / sqrt n), with V~ scaled by `v_scale`.
    fn t(&self, x: f64, v_scale: f64) -> f64 {
        let v = self.v_tilde * v_scale;
        x * x / (v * v + self.m * self.phi * x / (self.n as f64).sqrt())
    }

    fn crossover(&self) -> f64 {
        self.v_tilde * self.v_tilde * (self.n as f64).sqrt() / (self.m * self.phi)
    }

    fn tail(&self, x: f64) -> (f64, f64) {
        let r = self.abs_g.len() as f64;
        let p = self.abs_g.iter().filter(|g| **g > x).count() as f64 / r;
        (p, (p * (1.0 - p) / r).sqrt())
    }
}

fn sample(cfg: &ExperimentConfig, f: &FunctionClass, nu: f64, y: f64, n: usize) -> Result<TailSample> {
    let seed = path_seed(cfg, n);
    let shape = simulate_path(&cfg.model, n, seed, None)?;
    let means = match expected_values(f, &cfg.model, &shape, &Centering::Analytic) {
        Ok(m) => m,
        Err(e) if matches!(e, LsepError::Unsupported(_)) => {
            expected_values(f, &cfg.model, &shape, &Centering::default_for(cfg.replications, cfg.seed))?
        }
        Err(e) => return Err(e),
    };
    let per_rep: Vec<(f64, f64)> = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|r| {
            let p = simulate_path_rep(&cfg.model, n, seed, r, None)?;
            let g = evaluate_gn(f, &p, &means)?;
            let sq = (1..=n).map(|i| f.eval(p.value(i), p.u(i)).powi(2)).sum::<f64>() / n as f64;
            Ok((g.abs(), sq))
        })
        .collect::<Result<_>>()?;
    let f2n = (per_rep.iter().map(|p| p.1).sum::<f64>() / per_rep.len() as f64).sqrt();
    let profile = class_profile(&cfg.model, &f.base, nu / 2.0)?;
    let b = Bernstein::new(profile, nu)?;
    let v_tilde = v_tilde_with(f2n, f.d_n(n), &b);
    let m = f.sup_abs(n).ok_or_else(|| LsepError::invalid("tail experiment needs a bounded class"))?;
    let d_inf = f.d_inf_nu(n, nu);
    let q = b.q_tilde_star(m / ((n as f64).sqrt() * d_inf * y));
    let phi = b.weights.phi(q as f64);
    Ok(TailSample { n, abs_g: per_rep.into_iter().map(|p| p.0).collect(), v_tilde, m, phi, q })
}

/// x grid from half a standard deviation to the 99.5% quantile of |G_n|.
fn grid(s: &TailSample, points: usize) -> Vec<f64> {
    let lo = 0.5 * std_dev(&s.abs_g).max(1e-12);
    let hi = quantile(&s.abs_g, 0.995).max(lo * 1.5);
    (0..points).map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64).collect()
}

pub(super) fn run(cfg: &ExperimentConfig, f: &FunctionClass, nu: f64, y: f64, points: usize) -> Result<Outcome> {
    let mut out = Outcome::default();
    let samples: Vec<TailSample> = cfg.n_list.iter().map(|n| sample(cfg, f, nu, y, *n)).collect::<Result<_>>()?;
    let cal = &samples[0];

    // enough mass beyond the 99th percentile
    let q99 = quantile(&cal.abs_g, 0.99);
    let beyond = cal.abs_g.iter().filter(|g| **g > q99).count();
    if beyond < 20 {
        out.warnings.push(format!("only {beyond} exceedances beyond the 99th percentile; increase replications"));
    }

    // calibrate: slope of log p on t gives c1, c0 lifts the curve onto the points
    let xs = grid(cal, points);
    let pts: Vec<(f64, f64)> = xs.iter().map(|x| (cal.t(*x, 1.0), cal.tail(*x).0)).filter(|(_, p)| *p > 0.0).collect();
    if pts.len() < 3 {
        return Err(LsepError::Numerical("too few nonzero tail probabilities to fit the envelope".into()));
    }
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let lm = pts.iter().map(|p| p.1.ln()).sum::<f64>() / pts.len() as f64;
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1.ln() - lm)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(LsepError::Numerical(format!("fitted tail slope {slope} is not negative")));
    }
    let c1 = -1.0 / slope;
    let c0 = pts.iter().map(|(t, p)| p * (t / c1).exp()).fold(0.0, f64::max);
    out.rows.push(Row::new("fit", Some(cal.n)).with("c0", c0).with("c1", c1).with("beyond_q99", beyond as f64));

    let env = |s: &TailSample, x: f64, scale: f64| (c0 * (-s.t(x, scale) / c1).exp()).min(1.0);
    let k = cfg.tolerances.mc_se;
    let primary_scale = if cfg.negative_control { 0.1 } else { 1.0 };
    for s in &samples {
        let xs = grid(s, points);
        let mut worst: f64 = f64::NEG_INFINITY;
        let mut worst_ctrl: f64 = f64::NEG_INFINITY;
        for x in &xs {
            let (p, se) = s.tail(*x);
            let e = env(s, *x, primary_scale);
            worst = worst.max(p - k * se - e);
            worst_ctrl = worst_ctrl.max(p - k * se - env(s, *x, 0.1));
            out.plot.push(PlotPoint { series: format!("n={}", s.n), x: *x, empirical: p, envelope: e });
        }
        // beyond 2 sqrt(n) M the tail is exactly zero
        let cap = 2.0 * (s.n as f64).sqrt() * s.m;
        let zero_beyond = s.tail(cap).0;
        out.rows.push(
            Row::new("tail", Some(s.n))
                .with("v_tilde", s.v_tilde)
                .with("m", s.m)
                .with("q_tilde_star", s.q as f64)
                .with("phi", s.phi)
                .with("crossover", s.crossover())
                .with("max_excess", worst)
                .with("max_excess_control", worst_ctrl)
                .with("tail_beyond_cap", zero_beyond),
        );
        let what = if cfg.negative_control { "envelope with V~/10" } else { "envelope" };
        out.verdicts.push(Verdict::le(format!("n = {}: {what} dominates the empirical tail", s.n), worst, 0.0));
        if !cfg.negative_control {
            out.verdicts.push(Verdict::control(
                format!("negative control, n = {}: envelope with V~/10 must not dominate", s.n),
                worst_ctrl,
                0.0,
                worst_ctrl > 0.0,
            ));
        }
    }
    for w in samples.windows(2) {
        let ratio = w[1].crossover() / w[0].crossover();
        let target = (w[1].n as f64 / w[0].n as f64).sqrt();
        let dev = (ratio / target).max(target / ratio);
        out.rows.push(Row::new("crossover", Some(w[1].n)).with("ratio", ratio).with("sqrt_n_ratio", target));
        out.verdicts.push(Verdict::le(
            format!("crossover ratio n = {} vs {} within factor of sqrt(n) ratio", w[1].n, w[0].n),
            dev,
            cfg.tolerances.crossover_factor,
        ));
    }
    Ok(out)
}
