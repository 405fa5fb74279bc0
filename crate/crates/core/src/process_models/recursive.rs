use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LsepError, Result};
use crate::innovation::Innovation;
use crate::poly::Poly;

pub type ModelFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// User supplied function of `(x, u)` together with the constants the
/// dependence calculus needs. Only reachable through the library API.
#[derive(Clone)]
pub struct CustomFn {
    pub f: ModelFn,
    /// sup over u of the Lipschitz constant in x.
    pub lipschitz_x: f64,
    /// sup over u of |f(0, u)|.
    pub sup_at_zero: f64,
    /// Hölder constant and exponent in u.
    pub holder_c: f64,
    pub holder_exp: f64,
    /// Lower bound of f; only meaningful for scale functions.
    pub lower: f64,
}

impl fmt::Debug for CustomFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomFn")
            .field("lipschitz_x", &self.lipschitz_x)
            .field("sup_at_zero", &self.sup_at_zero)
            .finish_non_exhaustive()
    }
}

/// m(x, u).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeanFamily {
    /// a(u) x + b(u)
    Affine {
        a: Poly,
        #[serde(default = "zero_poly")]
        b: Poly,
    },
    #[serde(skip)]
    Custom(CustomFn),
}

/// sigma(x, u).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScaleFamily {
    /// c0(u) + c1(u) |x|
    Affine {
        c0: Poly,
        #[serde(default = "zero_poly")]
        c1: Poly,
    },
    /// sqrt(c0(u) + c1(u) x^2)
    Arch { c0: Poly, c1: Poly },
    #[serde(skip)]
    Custom(CustomFn),
}

fn zero_poly() -> Poly {
    Poly::constant(0.0)
}

pub(crate) fn one() -> f64 {
    1.0
}

/// X_i = m(X_{i-1}, i/n) + sigma(X_{i-1}, i/n) eps_i.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecursiveModel {
    pub mean: MeanFamily,
    pub scale: ScaleFamily,
    #[serde(default)]
    pub innovation: Innovation,
    /// Moment parameter s; contraction is checked in L^{2s}.
    #[serde(default = "one")]
    pub moment_s: f64,
}

impl MeanFamily {
    #[inline]
    pub fn eval(&self, x: f64, u: f64) -> f64 {
        match self {
            MeanFamily::Affine { a, b } => a.eval(u) * x + b.eval(u),
            MeanFamily::Custom(c) => (c.f)(x, u),
        }
    }

    pub fn chi(&self) -> f64 {
        match self {
            MeanFamily::Affine { a, .. } => a.sup_abs(),
            MeanFamily::Custom(c) => c.lipschitz_x,
        }
    }

    pub fn sup_at_zero(&self) -> f64 {
        match self {
            MeanFamily::Affine { b, .. } => b.sup_abs(),
            MeanFamily::Custom(c) => c.sup_at_zero,
        }
    }

    /// (exponent, constant) of the Hölder condition in u.
    pub fn holder(&self) -> (f64, f64) {
        match self {
            MeanFamily::Affine { a, b } => {
                (1.0, b.sup_abs().max(a.lipschitz()).max(b.lipschitz()))
            }
            MeanFamily::Custom(c) => (c.holder_exp, c.holder_c),
        }
    }

    fn frozen(&self, u: f64) -> MeanFamily {
        match self {
            MeanFamily::Affine { a, b } => MeanFamily::Affine {
                a: Poly::constant(a.eval(u)),
                b: Poly::constant(b.eval(u)),
            },
            MeanFamily::Custom(c) => {
                let f = c.f.clone();
                MeanFamily::Custom(CustomFn { f: Arc::new(move |x, _| f(x, u)), ..c.clone() })
            }
        }
    }
}

impl ScaleFamily {
    #[inline]
    pub fn eval(&self, x: f64, u: f64) -> f64 {
        match self {
            ScaleFamily::Affine { c0, c1 } => c0.eval(u) + c1.eval(u) * x.abs(),
            ScaleFamily::Arch { c0, c1 } => (c0.eval(u) + c1.eval(u) * x * x).sqrt(),
            ScaleFamily::Custom(c) => (c.f)(x, u),
        }
    }

    pub fn chi(&self) -> f64 {
        match self {
            ScaleFamily::Affine { c1, .. } => c1.sup_abs(),
            ScaleFamily::Arch { c1, .. } => c1.sup().max(0.0).sqrt(),
            ScaleFamily::Custom(c) => c.lipschitz_x,
        }
    }

    pub fn sigma_min(&self) -> f64 {
        match self {
            ScaleFamily::Affine { c0, .. } => c0.inf(),
            ScaleFamily::Arch { c0, .. } => c0.inf().max(0.0).sqrt(),
            ScaleFamily::Custom(c) => c.lower,
        }
    }

    pub fn sup_at_zero(&self) -> f64 {
        match self {
            ScaleFamily::Affine { c0, .. } => c0.sup_abs(),
            ScaleFamily::Arch { c0, .. } => c0.sup().max(0.0).sqrt(),
            ScaleFamily::Custom(c) => c.sup_at_zero,
        }
    }

    pub fn holder(&self) -> (f64, f64) {
        match self {
            ScaleFamily::Affine { c0, c1 } => {
                (1.0, c0.sup_abs().max(c0.lipschitz()).max(c1.lipschitz()))
            }
            // |sqrt(p) - sqrt(q)| <= sqrt(|p - q|)
            ScaleFamily::Arch { c0, c1 } => (
                0.5,
                c0.sup().max(0.0).sqrt().max(c0.lipschitz().sqrt()).max(c1.lipschitz().sqrt()),
            ),
            ScaleFamily::Custom(c) => (c.holder_exp, c.holder_c),
        }
    }

    /// True when sigma does not depend on x.
    pub fn is_homoscedastic(&self) -> bool {
        match self {
            ScaleFamily::Affine { c1, .. } => c1.0.iter().all(|c| *c == 0.0),
            ScaleFamily::Arch { c1, .. } => c1.0.iter().all(|c| *c == 0.0),
            ScaleFamily::Custom(c) => c.lipschitz_x == 0.0,
        }
    }

    fn frozen(&self, u: f64) -> ScaleFamily {
        match self {
            ScaleFamily::Affine { c0, c1 } => ScaleFamily::Affine {
                c0: Poly::constant(c0.eval(u)),
                c1: Poly::constant(c1.eval(u)),
            },
            ScaleFamily::Arch { c0, c1 } => ScaleFamily::Arch {
                c0: Poly::constant(c0.eval(u)),
                c1: Poly::constant(c1.eval(u)),
            },
            ScaleFamily::Custom(c) => {
                let f = c.f.clone();
                ScaleFamily::Custom(CustomFn { f: Arc::new(move |x, _| f(x, u)), ..c.clone() })
            }
        }
    }
}

impl RecursiveModel {
    /// tvAR(1): X_i = a(u) X_{i-1} + sigma eps_i.
    pub fn tvar(a: Poly, sigma: f64, innovation: Innovation) -> Self {
        RecursiveModel {
            mean: MeanFamily::Affine { a, b: zero_poly() },
            scale: ScaleFamily::Affine { c0: Poly::constant(sigma), c1: zero_poly() },
            innovation,
            moment_s: 1.0,
        }
    }

    pub fn ar1(a: f64) -> Self {
        Self::tvar(Poly::constant(a), 1.0, Innovation::Normal)
    }

    #[inline]
    pub fn step(&self, x: f64, u: f64, eps: f64) -> f64 {
        self.mean.eval(x, u) + self.scale.eval(x, u) * eps
    }

    pub fn chi_m(&self) -> f64 {
        self.mean.chi()
    }

    pub fn chi_sigma(&self) -> f64 {
        self.scale.chi()
    }

    pub fn sigma_min(&self) -> f64 {
        self.scale.sigma_min()
    }

    /// chi_m + ||eps||_q chi_sigma.
    pub fn contraction(&self, q: f64) -> f64 {
        let chi_s = self.chi_sigma();
        let norm = if chi_s == 0.0 { 0.0 } else { self.innovation.norm(q) };
        self.chi_m() + norm * chi_s
    }

    /// Bound on sup_i ||X_i||_{2s}.
    pub fn moment_bound(&self, s: f64) -> Result<f64> {
        let q = 2.0 * s;
        let rho = self.contraction(q);
        if rho >= 1.0 {
            return Err(LsepError::Contraction { value: rho, q });
        }
        let norm = self.innovation.norm(q);
        Ok((self.mean.sup_at_zero() + self.scale.sup_at_zero() * norm) / (1.0 - rho))
    }

    pub fn default_burn_in(&self) -> usize {
        let rho = self.contraction(2.0);
        if rho <= 0.0 {
            return 0;
        }
        (1e-12f64.ln() / rho.ln()).ceil() as usize
    }

    pub fn validate(&self) -> Result<()> {
        self.innovation.validate()?;
        if !(self.moment_s >= 1.0 && self.moment_s.is_finite()) {
            return Err(LsepError::invalid(format!("moment_s must be >= 1, got {}", self.moment_s)));
        }
        let polys: Vec<&Poly> = match (&self.mean, &self.scale) {
            (MeanFamily::Affine { a, b }, ScaleFamily::Affine { c0, c1 } | ScaleFamily::Arch { c0, c1 }) => {
                vec![a, b, c0, c1]
            }
            (MeanFamily::Affine { a, b }, ScaleFamily::Custom(_)) => vec![a, b],
            (MeanFamily::Custom(_), ScaleFamily::Affine { c0, c1 } | ScaleFamily::Arch { c0, c1 }) => {
                vec![c0, c1]
            }
            _ => vec![],
        };
        if polys.iter().any(|p| !p.all_finite()) {
            return Err(LsepError::invalid("coefficient polynomials must be non-empty and finite"));
        }
        match &self.scale {
            ScaleFamily::Affine { c1, .. } | ScaleFamily::Arch { c1, .. } if c1.inf() < 0.0 => {
                return Err(LsepError::invalid("scale slope c1(u) must be nonnegative"));
            }
            _ => {}
        }
        let smin = self.sigma_min();
        if !(smin > 0.0) {
            return Err(LsepError::invalid(format!("sigma_min must be positive, got {smin}")));
        }
        let q = 2.0 * self.moment_s;
        let rho = self.contraction(q);
        if !(rho < 1.0) {
            return Err(LsepError::Contraction { value: rho, q });
        }
        Ok(())
    }

    pub fn frozen(&self, u: f64) -> Self {
        RecursiveModel {
            mean: self.mean.frozen(u),
            scale: self.scale.frozen(u),
            innovation: self.innovation,
            moment_s: self.moment_s,
        }
    }

    /// (a, b, c0) when the model is a homoscedastic affine recursion.
    pub fn affine_homoscedastic(&self) -> Option<(&Poly, &Poly, &Poly)> {
        match (&self.mean, &self.scale) {
            (MeanFamily::Affine { a, b }, ScaleFamily::Affine { c0, c1 }) if c1.0.iter().all(|c| *c == 0.0) => {
                Some((a, b, c0))
            }
            _ => None,
        }
    }
}
