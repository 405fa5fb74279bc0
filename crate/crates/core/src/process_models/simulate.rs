use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ProcessModel;
use crate::error::{LsepError, Result};
use crate::rng;

/// One realization X_1..X_n with the innovations it consumed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub values: Vec<f64>,
    /// eps_{1-B}, ..., eps_n
    pub innovations: Vec<f64>,
    pub burn_in: usize,
    /// X_0, the state before the first recorded observation.
    pub x0: f64,
    pub n: usize,
    pub seed: u64,
    pub model_tag: String,
    /// Set for stationary approximations.
    pub frozen_u: Option<f64>,
}

impl Path {
    /// eps_i for 1-B <= i <= n.
    pub fn innovation(&self, i: i64) -> Option<f64> {
        let idx = i + self.burn_in as i64 - 1;
        if idx < 0 {
            return None;
        }
        self.innovations.get(idx as usize).copied()
    }

    /// X_i, 1-based.
    #[inline]
    pub fn value(&self, i: usize) -> f64 {
        self.values[i - 1]
    }

    /// X_{i-1}, using X_0 for i = 1.
    #[inline]
    pub fn prev(&self, i: usize) -> f64 {
        if i == 1 {
            self.x0
        } else {
            self.values[i - 2]
        }
    }

    /// Rescaled time attached to observation i.
    #[inline]
    pub fn u(&self, i: usize) -> f64 {
        self.frozen_u.unwrap_or(i as f64 / self.n as f64)
    }

    /// CSV with columns index,u,X.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["index", "u", "X"])?;
        for i in 1..=self.n {
            wr.write_record([i.to_string(), format!("{}", self.u(i)), format!("{}", self.value(i))])?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Clock {
    Path { n: usize },
    Frozen(f64),
}

impl Clock {
    #[inline]
    fn u(self, i: i64) -> f64 {
        match self {
            Clock::Frozen(u) => u,
            Clock::Path { n } => {
                if i <= 0 {
                    1.0 / n as f64
                } else {
                    i as f64 / n as f64
                }
            }
        }
    }
}

/// Runs the model on eps_{1-B}..eps_{stop}; returns (X_0, X_1..X_stop).
fn run(model: &ProcessModel, burn_in: usize, eps: &[f64], clock: Clock, stop: usize) -> (f64, Vec<f64>) {
    let b = burn_in as i64;
    let mut values = Vec::with_capacity(stop);
    match model {
        ProcessModel::Recursive(m) => {
            let mut x = 0.0;
            let mut x0 = 0.0;
            for (idx, e) in eps.iter().take(burn_in + stop).enumerate() {
                let i = idx as i64 + 1 - b;
                x = m.step(x, clock.u(i), *e);
                if i == 0 {
                    x0 = x;
                } else if i > 0 {
                    values.push(x);
                }
            }
            (x0, values)
        }
        ProcessModel::Linear(m) => {
            let jmax = m.truncation().expect("validated model");
            let at = |i: i64| -> f64 {
                let u = clock.u(i);
                let mut acc = 0.0;
                for j in 0..=jmax {
                    let idx = i - j as i64 + b - 1;
                    if idx < 0 {
                        break;
                    }
                    acc += m.coeff(j, u) * eps[idx as usize];
                }
                acc
            };
            let x0 = if burn_in > 0 { at(0) } else { 0.0 };
            for i in 1..=stop as i64 {
                values.push(at(i));
            }
            (x0, values)
        }
    }
}

fn resolve_burn_in(model: &ProcessModel, burn_in: Option<usize>) -> Result<usize> {
    match burn_in {
        Some(b) => Ok(b),
        None => model.default_burn_in(),
    }
}

fn draw(model: &ProcessModel, len: usize, seed: u64, domain: u64, rep: u64) -> Vec<f64> {
    let innov = model.innovation();
    let mut r = rng::stream(seed, domain, rep);
    (0..len).map(|_| innov.sample(&mut r)).collect()
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(LsepError::invalid("n must be at least 1"));
    }
    Ok(())
}

pub fn simulate_path(model: &ProcessModel, n: usize, seed: u64, burn_in: Option<usize>) -> Result<Path> {
    simulate_path_rep(model, n, seed, 0, burn_in)
}

/// Replication `rep` of the path experiment; rep 0 is `simulate_path`.
pub fn simulate_path_rep(
    model: &ProcessModel,
    n: usize,
    seed: u64,
    rep: u64,
    burn_in: Option<usize>,
) -> Result<Path> {
    check_n(n)?;
    model.validate()?;
    let b = resolve_burn_in(model, burn_in)?;
    let eps = draw(model, n + b, seed, rng::PATH, rep);
    let (x0, values) = run(model, b, &eps, Clock::Path { n }, n);
    Ok(Path { values, innovations: eps, burn_in: b, x0, n, seed, model_tag: model.tag(), frozen_u: None })
}

/// Simulation driven by a caller supplied innovation record eps_{1-B}..eps_n.
pub fn simulate_path_with_innovations(model: &ProcessModel, n: usize, innovations: Vec<f64>, burn_in: usize) -> Result<Path> {
    check_n(n)?;
    model.validate()?;
    if innovations.len() != n + burn_in {
        return Err(LsepError::invalid(format!(
            "expected {} innovations (n + burn_in), got {}",
            n + burn_in,
            innovations.len()
        )));
    }
    let (x0, values) = run(model, burn_in, &innovations, Clock::Path { n }, n);
    Ok(Path { values, innovations, burn_in, x0, n, seed: 0, model_tag: model.tag(), frozen_u: None })
}

pub fn simulate_stationary(model: &ProcessModel, u: f64, n: usize, seed: u64, burn_in: Option<usize>) -> Result<Path> {
    simulate_stationary_rep(model, u, n, seed, 0, burn_in)
}

/// Stationary approximation at u. Draws from the same stream as
/// `simulate_path_rep`, so a coefficient-frozen model reproduces it exactly.
pub fn simulate_stationary_rep(
    model: &ProcessModel,
    u: f64,
    n: usize,
    seed: u64,
    rep: u64,
    burn_in: Option<usize>,
) -> Result<Path> {
    if !(0.0..=1.0).contains(&u) {
        return Err(LsepError::invalid(format!("u must lie in [0, 1], got {u}")));
    }
    check_n(n)?;
    model.validate()?;
    let b = resolve_burn_in(model, burn_in)?;
    let eps = draw(model, n + b, seed, rng::PATH, rep);
    let (x0, values) = run(model, b, &eps, Clock::Frozen(u), n);
    Ok(Path { values, innovations: eps, burn_in: b, x0, n, seed, model_tag: model.tag(), frozen_u: Some(u) })
}

fn check_coupling(n: usize, k: usize, i: usize, b: usize, min_lag: usize) -> Result<()> {
    if k < min_lag {
        return Err(LsepError::invalid(format!("coupling lag k must be at least {min_lag}")));
    }
    if i < 1 || i > n {
        return Err(LsepError::invalid(format!("index i = {i} outside 1..={n}")));
    }
    if (i as i64 - k as i64) < 1 - b as i64 {
        return Err(LsepError::HistoryExceeded { lag: k, index: i, burn_in: b });
    }
    Ok(())
}

pub fn simulate_coupled(
    model: &ProcessModel,
    n: usize,
    k: usize,
    i: usize,
    seed: u64,
    burn_in: Option<usize>,
) -> Result<(Path, Path)> {
    simulate_coupled_rep(model, n, k, i, seed, 0, burn_in)
}

/// Two paths sharing every innovation except eps_{i-k}.
pub fn simulate_coupled_rep(
    model: &ProcessModel,
    n: usize,
    k: usize,
    i: usize,
    seed: u64,
    rep: u64,
    burn_in: Option<usize>,
) -> Result<(Path, Path)> {
    check_n(n)?;
    model.validate()?;
    let b = resolve_burn_in(model, burn_in)?;
    check_coupling(n, k, i, b, 1)?;
    let base = simulate_path_rep(model, n, seed, rep, Some(b))?;
    let mut eps = base.innovations.clone();
    let pos = (i as i64 - k as i64 + b as i64 - 1) as usize;
    eps[pos] = draw(model, 1, seed, rng::COUPLE, rep)[0];
    let (x0, values) = run(model, b, &eps, Clock::Path { n }, n);
    let coupled = Path { values, innovations: eps, x0, ..base.clone() };
    Ok((base, coupled))
}

/// X_i - X_i^{*(i-k)} for each index in `indices`, sharing one base path.
/// Only the history up to the largest index is simulated; k = 0 is allowed.
pub fn coupled_difference(
    model: &ProcessModel,
    n: usize,
    k: usize,
    indices: &[usize],
    seed: u64,
    rep: u64,
    burn_in: usize,
) -> Result<Vec<f64>> {
    for &i in indices {
        check_coupling(n, k, i, burn_in, 0)?;
    }
    let stop = indices.iter().copied().max().unwrap_or(0);
    let eps = draw(model, stop + burn_in, seed, rng::PATH, rep);
    let star = draw(model, indices.len(), seed, rng::COUPLE, rep);
    let clock = Clock::Path { n };
    let (_, base) = run(model, burn_in, &eps, clock, stop);
    indices
        .par_iter()
        .zip(star.par_iter())
        .map(|(&i, &e)| {
            let mut alt = eps[..i + burn_in].to_vec();
            alt[(i as i64 - k as i64 + burn_in as i64 - 1) as usize] = e;
            let (_, v) = run(model, burn_in, &alt, clock, i);
            Ok(base[i - 1] - v[i - 1])
        })
        .collect()
}
