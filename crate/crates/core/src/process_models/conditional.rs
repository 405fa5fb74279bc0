use rayon::prelude::*;

use super::{Path, ProcessModel, RecursiveModel};
use crate::error::{LsepError, Result};
use crate::function_class::{Base, FunctionClass};
use crate::innovation::Innovation;
use crate::quadrature::{integrate_breaks, Tolerance};

fn check_kappa(kappa: u32) -> Result<()> {
    if kappa == 1 || kappa == 2 {
        Ok(())
    } else {
        Err(LsepError::invalid(format!("kappa must be 1 or 2, got {kappa}")))
    }
}

/// E[fbar(m + sigma eps)^kappa]^{1/kappa}.
pub fn conditional_expectation(innov: &Innovation, base: &Base, m: f64, sigma: f64, kappa: u32) -> Result<f64> {
    check_kappa(kappa)?;
    let k = kappa as f64;
    match base {
        Base::Constant { c } => Ok(if kappa == 1 { *c } else { c.abs() }),
        Base::Indicator { x } => Ok(innov.cdf((x - m) / sigma).powf(1.0 / k)),
        Base::Identity => Ok(if kappa == 1 { m } else { (m * m + sigma * sigma * innov.variance()).sqrt() }),
        Base::AbsDeviation { theta } => {
            if kappa == 2 {
                let d = m - theta;
                return Ok((d * d + sigma * sigma * innov.variance()).sqrt());
            }
            if let Innovation::Normal = innov {
                return base.gaussian_mean(m, sigma);
            }
            // CDF transform: int_0^1 fbar(m + sigma Q(p)) dp, kink at p0
            let p0 = innov.cdf((theta - m) / sigma);
            let g = |p: f64| base.eval(m + sigma * innov.quantile(p));
            let tol = Tolerance { rel: 1e-8, abs: 1e-14, max_intervals: 4000 };
            Ok(integrate_breaks(g, &[0.0, p0, 1.0], tol)?.value)
        }
        Base::KernelDensity { x, bandwidth, kernel } => {
            let h = *bandwidth;
            // z = m + sigma e = x + h t
            let g = |t: f64| kernel.eval(t).powf(k) * innov.pdf((x - m + h * t) / sigma);
            let mut brk = vec![-0.5, 0.0, 0.5];
            let (lo, hi) = innov.support();
            for e in [lo, hi] {
                if e.is_finite() {
                    let t = (sigma * e - x + m) / h;
                    if t > -0.5 && t < 0.5 {
                        brk.push(t);
                    }
                }
            }
            let tol = Tolerance { rel: 1e-8, abs: 1e-15, max_intervals: 4000 };
            let v = h.powf(-k / 2.0) * (h / sigma) * integrate_breaks(g, &brk, tol)?.value;
            Ok(v.max(0.0).powf(1.0 / k))
        }
    }
}

/// E[fbar(Z_i)^kappa | G_{i-1}]^{1/kappa} for the recursion at state z_prev.
pub fn conditional_functional(model: &RecursiveModel, base: &Base, z_prev: f64, u: f64, kappa: u32) -> Result<f64> {
    let m = model.mean.eval(z_prev, u);
    let s = model.scale.eval(z_prev, u);
    conditional_expectation(&model.innovation, base, m, s, kappa)
}

/// (conditional location, conditional scale) of X_i given G_{i-1}.
pub fn one_step(model: &ProcessModel, path: &Path, i: usize) -> (f64, f64) {
    let u = path.u(i);
    match model {
        ProcessModel::Recursive(m) => {
            let z = path.prev(i);
            (m.mean.eval(z, u), m.scale.eval(z, u))
        }
        ProcessModel::Linear(m) => {
            let jmax = m.truncation().unwrap_or(0);
            let mut loc = 0.0;
            for j in 1..=jmax {
                match path.innovation(i as i64 - j as i64) {
                    Some(e) => loc += m.coeff(j, u) * e,
                    None => break,
                }
            }
            (loc, m.coeff(0, u))
        }
    }
}

/// E[f(Z_i, u_i) | G_{i-1}] for i = 1..n.
pub fn conditional_means(model: &ProcessModel, path: &Path, f: &FunctionClass) -> Result<Vec<f64>> {
    let innov = model.innovation();
    (1..=path.n)
        .into_par_iter()
        .map(|i| {
            let d = f.d(path.u(i));
            if d == 0.0 {
                return Ok(0.0);
            }
            let (m, s) = one_step(model, path, i);
            Ok(d * conditional_expectation(&innov, &f.base, m, s, 1)?)
        })
        .collect()
}

/// Exact (mean, sd) of X_1..X_n for Gaussian homoscedastic affine recursions
/// and Gaussian linear models, started like the simulator.
pub fn gaussian_marginals(model: &ProcessModel, n: usize, burn_in: usize, frozen_u: Option<f64>) -> Result<Vec<(f64, f64)>> {
    if model.innovation() != Innovation::Normal {
        return Err(LsepError::Unsupported("analytic marginals need normal innovations".into()));
    }
    let u_of = |i: i64| match frozen_u {
        Some(u) => u,
        None if i <= 0 => 1.0 / n as f64,
        None => i as f64 / n as f64,
    };
    match model {
        ProcessModel::Recursive(m) => {
            let (a, b, c0) = m
                .affine_homoscedastic()
                .ok_or_else(|| LsepError::Unsupported("analytic marginals need an affine mean and constant-in-x scale".into()))?;
            let (mut mu, mut v) = (0.0, 0.0);
            let mut out = Vec::with_capacity(n);
            for i in (1 - burn_in as i64)..=n as i64 {
                let u = u_of(i);
                let (ai, ci) = (a.eval(u), c0.eval(u));
                mu = ai * mu + b.eval(u);
                v = ai * ai * v + ci * ci;
                if i >= 1 {
                    out.push((mu, v.sqrt()));
                }
            }
            Ok(out)
        }
        ProcessModel::Linear(m) => {
            let jmax = m.truncation()?;
            Ok((1..=n as i64)
                .map(|i| {
                    let u = u_of(i);
                    let v: f64 = (0..=jmax)
                        .take_while(|j| i - *j as i64 >= 1 - burn_in as i64)
                        .map(|j| m.coeff(j, u).powi(2))
                        .sum();
                    (0.0, v.sqrt())
                })
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Kernel;
    use crate::poly::Poly;
    use crate::process_models::simulate_path;
    use crate::rng;

    #[test]
    fn indicator_limits() {
        let m = RecursiveModel::tvar(Poly::constant(0.0), 1.0, Innovation::Normal);
        let b = Base::Indicator { x: 0.0 };
        assert_eq!(conditional_functional(&m, &b, 0.0, 0.5, 1).unwrap(), 0.5);
        let far = Base::Indicator { x: f64::INFINITY };
        assert_eq!(conditional_functional(&m, &far, 0.3, 0.5, 1).unwrap(), 1.0);
        assert_eq!(conditional_functional(&m, &far, 0.3, 0.5, 2).unwrap(), 1.0);
    }

    fn mc_check(innov: Innovation, base: &Base, m: f64, s: f64, kappa: u32) {
        let want = conditional_expectation(&innov, base, m, s, kappa).unwrap();
        let mut r = rng::stream(1, rng::DRAWS, 0);
        let draws: Vec<f64> =
            (0..1_000_000).map(|_| base.eval(m + s * innov.sample(&mut r)).powi(kappa as i32)).collect();
        let mean = crate::stats::mean(&draws);
        let se = crate::stats::std_error(&draws);
        let target = want.powi(kappa as i32);
        assert!((mean - target).abs() <= 4.0 * se + 1e-12, "{base:?} k={kappa}: mc {mean} +- {se} vs {target}");
    }

    #[test]
    fn agrees_with_monte_carlo() {
        let kd = Base::KernelDensity { x: 0.4, bandwidth: 0.8, kernel: Kernel::Epanechnikov };
        for innov in [Innovation::Normal, Innovation::StudentT { df: 5.0 }, Innovation::Uniform { half_width: 1.5 }] {
            for base in [Base::Identity, Base::AbsDeviation { theta: 0.2 }, Base::Indicator { x: 0.5 }, kd.clone()] {
                for kappa in [1, 2] {
                    mc_check(innov, &base, 0.3, 1.2, kappa);
                }
            }
        }
    }

    #[test]
    fn wide_kernel_tends_to_smoothed_density() {
        // h large: fbar ~ K(0) / sqrt(h) for all typical z
        let h = 400.0;
        let kd = Base::KernelDensity { x: 0.0, bandwidth: h, kernel: Kernel::Epanechnikov };
        let v = conditional_expectation(&Innovation::Normal, &kd, 0.0, 1.0, 1).unwrap();
        assert!((v * h.sqrt() - 1.5).abs() < 1e-4);
    }

    #[test]
    fn gaussian_marginals_match_simulation_moments() {
        let model: ProcessModel = RecursiveModel::tvar(Poly::linear(0.3, 0.3), 1.0, Innovation::Normal).into();
        let n = 50;
        let marg = gaussian_marginals(&model, n, 30, None).unwrap();
        let reps = 20_000;
        let xs: Vec<f64> = (0..reps)
            .map(|r| crate::process_models::simulate_path_rep(&model, n, 9, r, Some(30)).unwrap().value(40))
            .collect();
        let sd = crate::stats::std_dev(&xs);
        assert!((sd - marg[39].1).abs() < 0.03, "{sd} vs {}", marg[39].1);
        let _ = simulate_path(&model, n, 9, Some(30)).unwrap();
    }
}
