use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{interior, window, EstimatorResult};
use crate::error::{LsepError, Result};
use crate::kernel::Kernel;
use crate::process_models::{simulate_stationary_rep, Path, ProcessModel};
use crate::rng;

/// (theta, z) -> (loss, gradient, Hessian row-major) with z = (X_i, X_{i-1}).
pub type LossFn = Arc<dyn Fn(&[f64], &[f64; 2]) -> (f64, Vec<f64>, Vec<f64>) + Send + Sync>;

#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Loss {
    /// (x_1 - a x_0)^2 with theta = a
    ArLeastSquares,
    #[serde(skip)]
    Custom { f: LossFn, dim: usize },
}

impl fmt::Debug for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Loss::ArLeastSquares => write!(f, "ArLeastSquares"),
            Loss::Custom { dim, .. } => write!(f, "Custom {{ dim: {dim} }}"),
        }
    }
}

/// Loss and the compact box Theta = [lower, upper].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MObjective {
    pub loss: Loss,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl MObjective {
    pub fn ar(lower: f64, upper: f64) -> Self {
        MObjective { loss: Loss::ArLeastSquares, lower: vec![lower], upper: vec![upper] }
    }

    pub fn dim(&self) -> usize {
        match &self.loss {
            Loss::ArLeastSquares => 1,
            Loss::Custom { dim, .. } => *dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 || self.lower.len() != d || self.upper.len() != d {
            return Err(LsepError::invalid("parameter box must match the loss dimension"));
        }
        if self.lower.iter().zip(&self.upper).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
            return Err(LsepError::invalid("parameter box must be bounded with lower < upper"));
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, theta: &[f64], z: &[f64; 2]) -> (f64, Vec<f64>, Vec<f64>) {
        match &self.loss {
            Loss::ArLeastSquares => {
                let r = z[0] - theta[0] * z[1];
                (r * r, vec![-2.0 * r * z[1]], vec![2.0 * z[1] * z[1]])
            }
            Loss::Custom { f, .. } => f(theta, z),
        }
    }

    fn project(&self, theta: &mut [f64]) {
        for (k, t) in theta.iter_mut().enumerate() {
            *t = t.clamp(self.lower[k], self.upper[k]);
        }
    }

    fn is_interior(&self, theta: &[f64]) -> bool {
        theta.iter().enumerate().all(|(k, t)| *t > self.lower[k] && *t < self.upper[k])
    }
}

/// Localized objective value, gradient and Hessian at theta.
struct Local<'a> {
    obj: &'a MObjective,
    z: Vec<[f64; 2]>,
    w: Vec<f64>,
    n: f64,
}

impl Local<'_> {
    fn value(&self, theta: &[f64]) -> f64 {
        self.z.iter().zip(&self.w).map(|(z, w)| w * self.obj.eval(theta, z).0).sum::<f64>() / self.n
    }

    fn derivs(&self, theta: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
        let d = self.obj.dim();
        let mut v = 0.0;
        let mut g = DVector::zeros(d);
        let mut h = DMatrix::zeros(d, d);
        for (z, w) in self.z.iter().zip(&self.w) {
            let (l, gl, hl) = self.obj.eval(theta, z);
            v += w * l;
            for a in 0..d {
                g[a] += w * gl[a];
                for b in 0..d {
                    h[(a, b)] += w * hl[a * d + b];
                }
            }
        }
        (v / self.n, g / self.n, h / self.n)
    }
}

const NEWTON_ITERATIONS: usize = 50;
const GRADIENT_TOL: f64 = 1e-8;

/// Projected Newton with step halving. None when it fails to converge.
fn newton(loc: &Local, start: Vec<f64>) -> Option<Vec<f64>> {
    let mut theta = start;
    let (mut val, _, _) = loc.derivs(&theta);
    for _ in 0..NEWTON_ITERATIONS {
        let (_, g, h) = loc.derivs(&theta);
        if g.norm() <= 1e-12 * (1.0 + val.abs()) {
            return Some(theta);
        }
        let step = h.clone().cholesky()?.solve(&(-&g));
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let mut cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
            loc.obj.project(&mut cand);
            let cv = loc.value(&cand);
            if cv <= val {
                let moved = cand.iter().zip(&theta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                theta = cand;
                val = cv;
                accepted = true;
                if moved <= 1e-15 * (1.0 + theta.iter().map(|x| x.abs()).fold(0.0, f64::max)) {
                    return Some(theta);
                }
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Some(theta);
        }
    }
    let (_, g, _) = loc.derivs(&theta);
    (g.norm() <= GRADIENT_TOL).then_some(theta)
}

fn golden(loc: &Local, a: f64, b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    for _ in 0..200 {
        if loc.value(&[c]) < loc.value(&[d]) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    0.5 * (a + b)
}

fn grid_search(loc: &Local, obj: &MObjective) -> Vec<f64> {
    let d = obj.dim();
    let m = 21usize;
    let mut best = (f64::INFINITY, obj.lower.clone());
    let total = m.pow(d as u32);
    for idx in 0..total {
        let mut r = idx;
        let theta: Vec<f64> = (0..d)
            .map(|k| {
                let j = r % m;
                r /= m;
                obj.lower[k] + (obj.upper[k] - obj.lower[k]) * j as f64 / (m - 1) as f64
            })
            .collect();
        let v = loc.value(&theta);
        if v < best.0 {
            best = (v, theta);
        }
    }
    best.1
}

/// Ground truth for Bahadur residuals.
pub struct Truth<'a> {
    pub theta0: &'a (dyn Fn(f64) -> Vec<f64> + Sync),
    pub model: &'a ProcessModel,
    /// stationary draws for I(v)
    pub draws: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MEstimate {
    pub result: EstimatorResult,
    pub theta: Vec<Vec<f64>>,
    pub grad_norm: Vec<f64>,
    pub method: Vec<String>,
    /// theta_hat - theta_0
    pub first_order: Option<Vec<Vec<f64>>>,
    /// (theta_hat - theta_0) + I(v)^{-1} grad L(v, theta_0)
    pub bahadur: Option<Vec<Vec<f64>>>,
}

impl MEstimate {
    pub fn sup_first_order(&self) -> Option<f64> {
        sup_abs(self.first_order.as_ref()?)
    }

    pub fn sup_bahadur(&self) -> Option<f64> {
        sup_abs(self.bahadur.as_ref()?)
    }
}

fn sup_abs(x: &[Vec<f64>]) -> Option<f64> {
    Some(x.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max))
}

fn local<'a>(path: &Path, obj: &'a MObjective, kernel: &Kernel, h: f64, v: f64) -> Result<Local<'a>> {
    let (lo, w) = window(path.n, kernel, h, v)?;
    let z = (lo..lo + w.len()).map(|i| [path.value(i), path.prev(i)]).collect();
    Ok(Local { obj, z, w, n: path.n as f64 })
}

/// sum_i w_i x_{i-1} x_i / sum_i w_i x_{i-1}^2
pub fn ar_closed_form(path: &Path, kernel: &Kernel, h: f64, v: f64) -> Result<f64> {
    let (lo, w) = window(path.n, kernel, h, v)?;
    let (mut num, mut den) = (0.0, 0.0);
    for (k, w) in w.iter().enumerate() {
        let i = lo + k;
        num += w * path.prev(i) * path.value(i);
        den += w * path.prev(i).powi(2);
    }
    if den <= 0.0 {
        return Err(LsepError::Numerical("degenerate design in the AR least-squares fit".into()));
    }
    Ok(num / den)
}

/// I(v) = E Hess l_{theta_0(v)}(Z~(v)) over stationary draws.
fn information(obj: &MObjective, truth: &Truth, v: f64) -> Result<DMatrix<f64>> {
    let p = simulate_stationary_rep(truth.model, v, truth.draws.max(2), rng::derive_seed(truth.seed, rng::DRAWS), 0, None)?;
    let theta0 = (truth.theta0)(v);
    let d = obj.dim();
    let mut h = DMatrix::zeros(d, d);
    for i in 1..=p.n {
        let (_, _, hl) = obj.eval(&theta0, &[p.value(i), p.prev(i)]);
        for a in 0..d {
            for b in 0..d {
                h[(a, b)] += hl[a * d + b];
            }
        }
    }
    Ok(h / p.n as f64)
}

/// thetahat(v) = argmin over Theta of (1/n) sum_i K_h(i/n - v) l_theta(X_i, X_{i-1}).
pub fn m_estimate(path: &Path, obj: &MObjective, kernel: &Kernel, h: f64, v_grid: &[f64], truth: Option<&Truth>) -> Result<MEstimate> {
    obj.validate()?;
    let vs = interior(v_grid, h)?;
    let d = obj.dim();
    let per_v = vs
        .par_iter()
        .map(|v| {
            let loc = local(path, obj, kernel, h, *v)?;
            let start: Vec<f64> = obj.lower.iter().zip(&obj.upper).map(|(a, b)| 0.5 * (a + b)).collect();
            let (theta, method) = match newton(&loc, start) {
                Some(t) => (t, "newton"),
                None if d == 1 => (vec![golden(&loc, obj.lower[0], obj.upper[0])], "golden"),
                None => (grid_search(&loc, obj), "grid"),
            };
            if theta.iter().any(|t| !t.is_finite()) {
                return Err(LsepError::Numerical(format!("M-estimation failed at v = {v}")));
            }
            let (_, g, hess) = loc.derivs(&theta);
            if obj.is_interior(&theta) {
                if hess.clone().cholesky().is_none() {
                    return Err(LsepError::Numerical(format!("Hessian not positive definite at v = {v}")));
                }
                if method != "newton" && g.norm() > GRADIENT_TOL {
                    return Err(LsepError::Numerical(format!("no stationary point found at v = {v}")));
                }
            }
            let bahadur = match truth {
                Some(t) => {
                    let theta0 = (t.theta0)(*v);
                    if theta0.len() != d {
                        return Err(LsepError::invalid("theta_0 has the wrong dimension"));
                    }
                    let info = information(obj, t, *v)?;
                    let chol = info
                        .cholesky()
                        .ok_or_else(|| LsepError::Numerical(format!("singular information matrix at v = {v}")))?;
                    let (_, g0, _) = loc.derivs(&theta0);
                    let corr = chol.solve(&g0);
                    let first: Vec<f64> = theta.iter().zip(&theta0).map(|(a, b)| a - b).collect();
                    let res: Vec<f64> = first.iter().zip(corr.iter()).map(|(f, c)| f + c).collect();
                    Some((theta0, first, res))
                }
                None => None,
            };
            Ok((theta, g.norm(), method.to_string(), bahadur))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut v_out = Vec::new();
    let mut comp = Vec::new();
    let mut values = Vec::new();
    let mut reference = Vec::new();
    for (v, (theta, _, _, b)) in vs.iter().zip(&per_v) {
        for k in 0..d {
            v_out.push(*v);
            comp.push(k as f64);
            values.push(theta[k]);
            if let Some((t0, _, _)) = b {
                reference.push(t0[k]);
            }
        }
    }
    let result = EstimatorResult {
        estimator: "m_estimate".into(),
        v: v_out,
        x: (d > 1).then_some(comp),
        values,
        reference: truth.map(|_| reference),
        bandwidths: vec![h],
    };
    let first_order = truth.map(|_| per_v.iter().map(|p| p.3.as_ref().unwrap().1.clone()).collect());
    let bahadur = truth.map(|_| per_v.iter().map(|p| p.3.as_ref().unwrap().2.clone()).collect());
    Ok(MEstimate {
        result,
        theta: per_v.iter().map(|p| p.0.clone()).collect(),
        grad_norm: per_v.iter().map(|p| p.1).collect(),
        method: per_v.iter().map(|p| p.2.clone()).collect(),
        first_order,
        bahadur,
    })
}
