use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dependence::{analytic_decay_bound, estimate_delta_mc};
use crate::error::Result;
use crate::process_models::ProcessModel;

/// One line of the dependence-measure table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepRow {
    pub k: usize,
    pub delta_hat: f64,
    pub mc_se: f64,
    /// analytic Delta(k) for delta_nu
    pub delta_bound: f64,
    /// beta(k) of the analytic profile
    pub beta: f64,
    /// q*(Delta(k))
    pub q_star: u64,
}

/// delta_nu(k) by coupling next to the analytic profile and its functionals.
pub fn depmeasure_table(model: &ProcessModel, n: usize, ks: &[usize], nu: f64, reps: usize, seed: u64) -> Result<Vec<DepRow>> {
    let profile = analytic_decay_bound(model, nu / 2.0)?;
    ks.iter()
        .map(|&k| {
            let est = estimate_delta_mc(model, n, k, nu, reps, None, seed)?;
            let bound = profile.delta(k as u64);
            Ok(DepRow {
                k,
                delta_hat: est.value,
                mc_se: est.mc_se,
                delta_bound: bound,
                beta: profile.beta(k as u64),
                q_star: if bound > 0.0 { profile.q_star(bound) } else { 1 },
            })
        })
        .collect()
}

pub fn write_depmeasure_csv<W: Write>(rows: &[DepRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["k", "delta_hat", "mc_se", "delta_bound", "beta", "q_star"])?;
    for r in rows {
        out.write_record([
            r.k.to_string(),
            r.delta_hat.to_string(),
            r.mc_se.to_string(),
            r.delta_bound.to_string(),
            r.beta.to_string(),
            r.q_star.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
