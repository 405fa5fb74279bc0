//! Innovation laws: sampling, density, CDF, quantile and the moment and
//! shape constants the dependence and bracket calculations need.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal, StudentsT};
use statrs::function::gamma::ln_gamma;

use crate::error::{LsepError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Innovation {
    Normal,
    StudentT { df: f64 },
    Uniform { half_width: f64 },
}

impl Default for Innovation {
    fn default() -> Self {
        Innovation::Normal
    }
}

impl Innovation {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Innovation::Normal => Ok(()),
            Innovation::StudentT { df } if df > 2.0 && df.is_finite() => Ok(()),
            Innovation::StudentT { df } => {
                Err(LsepError::invalid(format!("student_t needs df > 2 for a finite variance, got {df}")))
            }
            Innovation::Uniform { half_width } if half_width > 0.0 && half_width.is_finite() => Ok(()),
            Innovation::Uniform { half_width } => {
                Err(LsepError::invalid(format!("uniform half_width must be positive, got {half_width}")))
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Innovation::Normal => StandardNormal.sample(rng),
            Innovation::StudentT { df } => rand_distr::StudentT::new(df).unwrap().sample(rng),
            Innovation::Uniform { half_width } => half_width * (2.0 * rng.random::<f64>() - 1.0),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Innovation::Normal => crate::stats::normal_pdf(x),
            Innovation::StudentT { df } => StudentsT::new(0.0, 1.0, df).unwrap().pdf(x),
            Innovation::Uniform { half_width } => {
                if x.abs() <= half_width {
                    0.5 / half_width
                } else {
                    0.0
                }
            }
        }
    }

    /// Derivative of the density; `None` for laws without a differentiable density.
    pub fn pdf_derivative(&self, x: f64) -> Option<f64> {
        match *self {
            Innovation::Normal => Some(-x * crate::stats::normal_pdf(x)),
            Innovation::StudentT { df } => Some(-self.pdf(x) * (df + 1.0) * x / (df + x * x)),
            Innovation::Uniform { .. } => None,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x == f64::INFINITY {
            return 1.0;
        }
        if x == f64::NEG_INFINITY {
            return 0.0;
        }
        match *self {
            Innovation::Normal => crate::stats::normal_cdf(x),
            Innovation::StudentT { df } => StudentsT::new(0.0, 1.0, df).unwrap().cdf(x),
            Innovation::Uniform { half_width } => ((x + half_width) / (2.0 * half_width)).clamp(0.0, 1.0),
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            Innovation::Normal => Normal::standard().inverse_cdf(p),
            Innovation::StudentT { df } => StudentsT::new(0.0, 1.0, df).unwrap().inverse_cdf(p),
            Innovation::Uniform { half_width } => half_width * (2.0 * p - 1.0),
        }
    }

    /// Lower and upper end of the support.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Innovation::Uniform { half_width } => (-half_width, half_width),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Innovation::Normal => 1.0,
            Innovation::StudentT { df } => df / (df - 2.0),
            Innovation::Uniform { half_width } => half_width * half_width / 3.0,
        }
    }

    /// E|eps|^q.
    pub fn abs_moment(&self, q: f64) -> f64 {
        let sqrt_pi_ln = 0.5 * std::f64::consts::PI.ln();
        match *self {
            Innovation::Normal => {
                (0.5 * q * 2f64.ln() + ln_gamma(0.5 * (q + 1.0)) - sqrt_pi_ln).exp()
            }
            Innovation::StudentT { df } => {
                if q >= df {
                    return f64::INFINITY;
                }
                (0.5 * q * df.ln() + ln_gamma(0.5 * (q + 1.0)) + ln_gamma(0.5 * (df - q))
                    - sqrt_pi_ln
                    - ln_gamma(0.5 * df))
                .exp()
            }
            Innovation::Uniform { half_width } => half_width.powf(q) / (q + 1.0),
        }
    }

    /// ||eps||_q = (E|eps|^q)^{1/q}.
    pub fn norm(&self, q: f64) -> f64 {
        self.abs_moment(q).powf(1.0 / q)
    }

    /// sup_x g(x).
    pub fn density_sup(&self) -> f64 {
        self.pdf(0.0)
    }

    /// sup_x |g(x) x|.
    pub fn sup_x_density(&self) -> f64 {
        match *self {
            Innovation::Normal => crate::stats::normal_pdf(1.0),
            Innovation::Uniform { .. } => 0.5,
            Innovation::StudentT { .. } => grid_sup(|x| (x * self.pdf(x)).abs()),
        }
    }

    /// sup_x |g'(x)|.
    pub fn derivative_sup(&self) -> Option<f64> {
        match *self {
            Innovation::Normal => Some(crate::stats::normal_pdf(1.0)),
            Innovation::Uniform { .. } => None,
            Innovation::StudentT { .. } => Some(grid_sup(|x| self.pdf_derivative(x).unwrap().abs())),
        }
    }

    /// sup_x |g'(x) x|.
    pub fn sup_x_derivative(&self) -> Option<f64> {
        match *self {
            Innovation::Normal => Some(2.0 * crate::stats::normal_pdf(std::f64::consts::SQRT_2)),
            Innovation::Uniform { .. } => None,
            Innovation::StudentT { .. } => Some(grid_sup(|x| (x * self.pdf_derivative(x).unwrap()).abs())),
        }
    }
}

// Dense grid on [-40, 40] followed by a local golden refinement.
fn grid_sup<F: Fn(f64) -> f64>(f: F) -> f64 {
    let step = 1e-3;
    let mut best = (0.0, f(0.0));
    let mut x = -40.0;
    while x <= 40.0 {
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
        x += step;
    }
    let (mut a, mut b) = (best.0 - step, best.0 + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.1.max(f(0.5 * (a + b)))
}
