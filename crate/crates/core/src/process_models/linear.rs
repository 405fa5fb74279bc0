use serde::{Deserialize, Serialize};

use super::recursive::one;
use crate::error::{LsepError, Result};
use crate::innovation::Innovation;
use crate::poly::Poly;
use crate::special::hurwitz_zeta;

/// Cap on the automatically chosen truncation; beyond it the series has to
/// be truncated explicitly.
pub const MAX_AUTO_TRUNCATION: usize = 20_000;
const TAIL_TOL: f64 = 1e-10;

/// Decay template A_j.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Template {
    /// scale * rho^j
    Geometric { scale: f64, rho: f64 },
    /// scale * j^{-alpha}
    Polynomial { scale: f64, alpha: f64 },
}

impl Template {
    pub fn at(&self, j: usize) -> f64 {
        match *self {
            Template::Geometric { scale, rho } => scale * rho.powi(j as i32),
            Template::Polynomial { scale, alpha } => scale * (j as f64).powf(-alpha),
        }
    }

    /// sum_{j > J} A_j
    pub fn tail(&self, truncation: usize) -> f64 {
        match *self {
            Template::Geometric { scale, rho } => scale * rho.powi(truncation as i32 + 1) / (1.0 - rho),
            Template::Polynomial { scale, alpha } => scale * hurwitz_zeta(alpha, truncation as f64 + 1.0),
        }
    }

    /// sum_{j >= 1} A_j
    pub fn sum(&self) -> f64 {
        self.tail(0)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Template::Geometric { scale, rho } => {
                if !(scale >= 0.0 && scale.is_finite()) {
                    return Err(LsepError::invalid("template scale must be finite and nonnegative"));
                }
                if !(0.0..1.0).contains(&rho) {
                    return Err(LsepError::NotSummable(format!("geometric rate rho = {rho} must lie in [0, 1)")));
                }
            }
            Template::Polynomial { scale, alpha } => {
                if !(scale >= 0.0 && scale.is_finite()) {
                    return Err(LsepError::invalid("template scale must be finite and nonnegative"));
                }
                if !(alpha > 1.0) {
                    return Err(LsepError::NotSummable(format!("polynomial exponent alpha = {alpha} must exceed 1")));
                }
            }
        }
        Ok(())
    }
}

/// X_i = a_0(i/n) eps_i + sum_{j >= 1} a_j(i/n) eps_{i-j} with
/// a_j(u) = shape(u) A_j.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearModel {
    pub lead: Poly,
    #[serde(default = "unit_poly")]
    pub shape: Poly,
    pub template: Template,
    #[serde(default)]
    pub innovation: Innovation,
    #[serde(default)]
    pub truncation: Option<usize>,
    #[serde(default = "one")]
    pub moment_s: f64,
}

fn unit_poly() -> Poly {
    Poly::constant(1.0)
}

impl LinearModel {
    pub fn new(lead: Poly, shape: Poly, template: Template, innovation: Innovation) -> Self {
        LinearModel { lead, shape, template, innovation, truncation: None, moment_s: 1.0 }
    }

    #[inline]
    pub fn coeff(&self, j: usize, u: f64) -> f64 {
        if j == 0 {
            self.lead.eval(u)
        } else {
            self.shape.eval(u) * self.template.at(j)
        }
    }

    /// Envelope A_j >= sup_u |a_j(u)|; for j = 0 the sup of the lead.
    pub fn envelope(&self, j: usize) -> f64 {
        if j == 0 {
            self.lead.sup_abs()
        } else {
            self.template.at(j)
        }
    }

    /// Envelope on the u-derivative: sup_u |a_j'(u)| <= bar A_j.
    pub fn envelope_bar(&self, j: usize) -> f64 {
        if j == 0 {
            self.lead.lipschitz()
        } else {
            self.shape.lipschitz() * self.template.at(j)
        }
    }

    pub fn a0_min(&self) -> f64 {
        self.lead.inf()
    }

    pub fn truncation(&self) -> Result<usize> {
        if let Some(j) = self.truncation {
            return Ok(j);
        }
        let norm = self.innovation.norm(2.0);
        let target = TAIL_TOL / norm;
        if self.template.sum() < target {
            return Ok(0);
        }
        let guess = match self.template {
            Template::Geometric { scale, rho } => {
                if rho == 0.0 {
                    0.0
                } else {
                    ((target * (1.0 - rho) / scale).ln() / rho.ln() - 1.0).max(0.0)
                }
            }
            Template::Polynomial { scale, alpha } => {
                ((scale / ((alpha - 1.0) * target)).powf(1.0 / (alpha - 1.0))).min(1e12)
            }
        };
        if guess > MAX_AUTO_TRUNCATION as f64 {
            return Err(LsepError::invalid(format!(
                "automatic truncation would need about {guess:.3e} terms; set `truncation` explicitly"
            )));
        }
        let mut j = guess.ceil() as usize;
        while j > 0 && self.template.tail(j - 1) < target {
            j -= 1;
        }
        while self.template.tail(j) >= target {
            j += 1;
        }
        Ok(j)
    }

    pub fn default_burn_in(&self) -> Result<usize> {
        self.truncation()
    }

    /// Bound on sup_i ||X_i||_{2s}.
    pub fn moment_bound(&self, s: f64) -> f64 {
        self.innovation.norm(2.0 * s) * (self.lead.sup_abs() + self.shape.sup_abs() * self.template.sum())
    }

    pub fn validate(&self) -> Result<()> {
        self.innovation.validate()?;
        self.template.validate()?;
        if !self.lead.all_finite() || !self.shape.all_finite() {
            return Err(LsepError::invalid("coefficient polynomials must be non-empty and finite"));
        }
        if self.shape.sup_abs() > 1.0 + 1e-12 {
            return Err(LsepError::invalid("|shape(u)| must not exceed 1 so that |a_j(u)| <= A_j"));
        }
        if !(self.a0_min() > 0.0) {
            return Err(LsepError::invalid(format!("inf_u a_0(u) must be positive, got {}", self.a0_min())));
        }
        if !(self.moment_s >= 1.0 && self.moment_s.is_finite()) {
            return Err(LsepError::invalid(format!("moment_s must be >= 1, got {}", self.moment_s)));
        }
        self.truncation()?;
        Ok(())
    }

    pub fn frozen(&self, u: f64) -> Self {
        LinearModel {
            lead: Poly::constant(self.lead.eval(u)),
            shape: Poly::constant(self.shape.eval(u)),
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometric_half() -> LinearModel {
        LinearModel::new(
            Poly::constant(1.0),
            Poly::constant(1.0),
            Template::Geometric { scale: 1.0, rho: 0.5 },
            Innovation::Normal,
        )
    }

    #[test]
    fn truncation_meets_tail_tolerance() {
        let m = geometric_half();
        let j = m.truncation().unwrap();
        assert!(m.template.tail(j) < 1e-10);
        assert!(m.template.tail(j - 1) >= 1e-10);
    }

    #[test]
    fn slow_polynomial_needs_explicit_truncation() {
        let mut m = geometric_half();
        m.template = Template::Polynomial { scale: 1.0, alpha: 2.0 };
        assert!(m.validate().is_err());
        m.truncation = Some(500);
        m.validate().unwrap();
    }

    #[test]
    fn non_summable_is_rejected() {
        let mut m = geometric_half();
        m.template = Template::Polynomial { scale: 1.0, alpha: 1.0 };
        assert!(matches!(m.validate(), Err(LsepError::NotSummable(_))));
    }

    #[test]
    fn envelope_dominates_coefficients() {
        let mut m = LinearModel::new(
            Poly::linear(1.0, 0.5),
            Poly::linear(0.2, 0.6),
            Template::Polynomial { scale: 0.8, alpha: 3.0 },
            Innovation::Normal,
        );
        m.truncation = Some(200);
        m.validate().unwrap();
        for j in 1..50 {
            for k in 0..=20 {
                let u = k as f64 / 20.0;
                assert!(m.coeff(j, u).abs() <= m.envelope(j) + 1e-15);
            }
        }
    }
}
