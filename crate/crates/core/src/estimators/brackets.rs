use serde::{Deserialize, Serialize};

use crate::error::{LsepError, Result};
use crate::process_models::RecursiveModel;

/// Model constants entering the EDF bracket grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketParams {
    pub c_m: f64,
    pub c_sigma: f64,
    pub c_eps: f64,
    pub sigma_min: f64,
    /// sup of the innovation density
    pub g_sup: f64,
    pub s: f64,
}

impl BracketParams {
    /// Constants of a recursion whose innovations have 2s moments:
    /// C_M^{2s} = C_m^{2s} + chi_m^{2s} C_X^{2s}, likewise C_Sigma, C_eps = ||eps||_{2s}.
    pub fn from_model(model: &RecursiveModel, s: f64) -> Result<Self> {
        model.validate()?;
        let q = 2.0 * s;
        let cx = model.moment_bound(s)?;
        let comb = |c: f64, chi: f64| (c.powf(q) + (chi * cx).powf(q)).powf(1.0 / q);
        let g_sup = model.innovation.density_sup();
        let p = BracketParams {
            c_m: comb(model.mean.sup_at_zero(), model.chi_m()),
            c_sigma: comb(model.scale.sup_at_zero(), model.chi_sigma()),
            c_eps: model.innovation.norm(q),
            sigma_min: model.sigma_min(),
            g_sup,
            s,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.c_m, self.c_sigma, self.c_eps, self.sigma_min, self.g_sup, self.s];
        if all.iter().any(|x| !x.is_finite() || *x < 0.0) || self.sigma_min == 0.0 || self.g_sup == 0.0 || self.s == 0.0 {
            return Err(LsepError::invalid("bracket constants must be finite, sigma_min, g_sup and s positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Brackets {
    /// x_{-(N+1)} = -inf < x_{-N} < ... < x_N < x_{N+1} = +inf
    pub points: Vec<f64>,
    pub n: usize,
    pub spacing: f64,
    pub x_n: f64,
    /// C_N with N <= C_N gamma^{-2/s-2}
    pub c_n: f64,
}

impl Brackets {
    pub fn count_bound(&self, gamma: f64, s: f64) -> f64 {
        self.c_n * gamma.powf(-2.0 / s - 2.0)
    }

    /// Index j with x_{j-1} <= x <= x_j (positions into `points`).
    pub fn locate(&self, x: f64) -> usize {
        self.points.partition_point(|p| *p < x).max(1)
    }
}

/// Equispaced grid with spacing gamma^2 sigma_min / (|g|_inf |K|_inf^2) up to
/// x_N = C_gamma (1 + C_eps A), A = (gamma^2/(3|K|_inf^2))^{-1/(2s)},
/// C_gamma = max(C_M, C_Sigma) A, closed by +-inf.
pub fn edf_brackets(gamma: f64, params: &BracketParams, k_sup: f64) -> Result<Brackets> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(LsepError::invalid(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    params.validate()?;
    if !(k_sup > 0.0 && k_sup.is_finite()) {
        return Err(LsepError::invalid("kernel sup must be positive"));
    }
    let k2 = k_sup * k_sup;
    let s = params.s;
    let a = (gamma * gamma / (3.0 * k2)).powf(-1.0 / (2.0 * s));
    let m0 = params.c_m.max(params.c_sigma);
    let x_n = m0 * a * (1.0 + params.c_eps * a);
    let spacing = gamma * gamma * params.sigma_min / (params.g_sup * k2);
    let n = ((x_n / spacing).ceil() as usize).max(1);
    let mut points = Vec::with_capacity(2 * n + 3);
    points.push(f64::NEG_INFINITY);
    points.extend((-(n as i64)..=n as i64).map(|j| j as f64 * spacing));
    points.push(f64::INFINITY);
    let a1 = (3.0 * k2).powf(1.0 / (2.0 * s));
    let c_n = 6.0 * params.g_sup * k2 / params.sigma_min * m0 * a1 * (1.0 + params.c_eps * a1);
    Ok(Brackets { points, n, spacing, x_n, c_n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> BracketParams {
        BracketParams { c_m: 1.0, c_sigma: 0.5, c_eps: 1.0, sigma_min: 1.0, g_sup: 0.3989, s: 4.0 }
    }

    #[test]
    fn count_bound() {
        for gamma in [0.5, 0.2, 0.1] {
            let b = edf_brackets(gamma, &params(), 1.5).unwrap();
            assert!((b.n as f64) <= b.count_bound(gamma, 4.0), "{gamma} {} {}", b.n, b.count_bound(gamma, 4.0));
            assert!(b.points[b.points.len() - 2] >= b.x_n);
        }
    }

    proptest! {
        #[test]
        fn grid_covers_the_line(x in -1e6f64..1e6, gamma in 0.05f64..1.0) {
            let b = edf_brackets(gamma, &params(), 1.5).unwrap();
            let j = b.locate(x);
            prop_assert!(b.points[j - 1] <= x && x <= b.points[j]);
            prop_assert!(b.points.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
