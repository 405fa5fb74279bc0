//! Function families f(z, u) = D_{f,n}(u) * fbar(z) and their normalizers.

use serde::{Deserialize, Serialize};

use crate::dependence::{analytic_decay_bound, DecayProfile};
use crate::error::{LsepError, Result};
use crate::kernel::Kernel;
use crate::poly::Poly;
use crate::process_models::{ProcessModel, ScaleFamily};
use crate::quadrature::{integrate_breaks, Tolerance};
use crate::stats::{normal_cdf, normal_pdf};

/// The z-part fbar(z) of a class member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Base {
    Identity,
    /// |z - theta|
    AbsDeviation { theta: f64 },
    /// 1{z <= x}
    Indicator { x: f64 },
    /// K((z - x)/h) / sqrt(h)
    KernelDensity {
        x: f64,
        bandwidth: f64,
        #[serde(default)]
        kernel: Kernel,
    },
    Constant { c: f64 },
}

impl Base {
    #[inline]
    pub fn eval(&self, z: f64) -> f64 {
        match self {
            Base::Identity => z,
            Base::AbsDeviation { theta } => (z - theta).abs(),
            Base::Indicator { x } => {
                if z <= *x {
                    1.0
                } else {
                    0.0
                }
            }
            Base::KernelDensity { x, bandwidth, kernel } => kernel.eval((z - x) / bandwidth) / bandwidth.sqrt(),
            Base::Constant { c } => *c,
        }
    }

    /// sup_z |fbar(z)| when finite.
    pub fn sup_abs(&self) -> Option<f64> {
        match self {
            Base::Identity | Base::AbsDeviation { .. } => None,
            Base::Indicator { .. } => Some(1.0),
            Base::KernelDensity { bandwidth, kernel, .. } => Some(kernel.sup() / bandwidth.sqrt()),
            Base::Constant { c } => Some(c.abs()),
        }
    }

    /// Lipschitz constant in z for the smooth bases.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            Base::Identity | Base::AbsDeviation { .. } => Some(1.0),
            Base::Constant { .. } => Some(0.0),
            _ => None,
        }
    }

    pub fn is_smooth(&self) -> bool {
        self.lipschitz().is_some()
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Base::KernelDensity { bandwidth, kernel, x } => {
                if !(*bandwidth > 0.0 && bandwidth.is_finite()) || !x.is_finite() {
                    return Err(LsepError::invalid("kernel base needs a finite center and positive bandwidth"));
                }
                kernel.validate()
            }
            Base::AbsDeviation { theta } if !theta.is_finite() => Err(LsepError::invalid("theta must be finite")),
            Base::Constant { c } if !c.is_finite() => Err(LsepError::invalid("constant must be finite")),
            _ => Ok(()),
        }
    }

    /// E fbar(Z) for Z ~ N(mu, s^2), s >= 0.
    pub fn gaussian_mean(&self, mu: f64, s: f64) -> Result<f64> {
        if s == 0.0 {
            return Ok(self.eval(mu));
        }
        Ok(match self {
            Base::Identity => mu,
            Base::Constant { c } => *c,
            Base::Indicator { x } => normal_cdf((x - mu) / s),
            Base::AbsDeviation { theta } => {
                let d = (mu - theta) / s;
                s * (2.0 * normal_pdf(d) + d * (2.0 * normal_cdf(d) - 1.0))
            }
            Base::KernelDensity { x, bandwidth, kernel } => {
                let h = *bandwidth;
                let g = |t: f64| kernel.eval(t) * normal_pdf((x + h * t - mu) / s) / s;
                h.sqrt() * integrate_breaks(g, &[-0.5, 0.0, 0.5], Tolerance::default())?.value
            }
        })
    }
}

/// The u-part D_{f,n}(u).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Factor {
    Global {
        #[serde(default = "unit")]
        weight: Poly,
    },
    /// weight(u) K((u - v)/h) / sqrt(h)
    Local {
        #[serde(default)]
        kernel: Kernel,
        bandwidth: f64,
        center: f64,
        #[serde(default = "unit")]
        weight: Poly,
    },
}

fn unit() -> Poly {
    Poly::constant(1.0)
}

fn one() -> f64 {
    1.0
}

impl Factor {
    pub fn global() -> Self {
        Factor::Global { weight: unit() }
    }

    pub fn local(center: f64, bandwidth: f64, kernel: Kernel) -> Self {
        Factor::Local { kernel, bandwidth, center, weight: unit() }
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Factor::Global { weight } => weight.eval(u),
            Factor::Local { kernel, bandwidth, center, weight } => {
                weight.eval(u) * kernel.eval((u - center) / bandwidth) / bandwidth.sqrt()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Factor::Global { weight } if !weight.all_finite() => Err(LsepError::invalid("weight must be finite")),
            Factor::Local { kernel, bandwidth, center, weight } => {
                if !(*bandwidth > 0.0) || !(0.0..=1.0).contains(center) || !weight.all_finite() {
                    return Err(LsepError::invalid("local factor needs h > 0, center in [0, 1] and a finite weight"));
                }
                kernel.validate()
            }
            _ => Ok(()),
        }
    }
}

/// A class member f(z, u) = scale * D(u) * fbar(z).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionClass {
    pub base: Base,
    pub factor: Factor,
    #[serde(default = "one")]
    pub scale: f64,
}

impl FunctionClass {
    pub fn new(base: Base, factor: Factor) -> Self {
        FunctionClass { base, factor, scale: 1.0 }
    }

    pub fn scaled(&self, a: f64) -> Self {
        FunctionClass { scale: self.scale * a, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.factor.validate()?;
        if !self.scale.is_finite() {
            return Err(LsepError::invalid("scale must be finite"));
        }
        Ok(())
    }

    /// D_{f,n}(u), including the scale.
    #[inline]
    pub fn d(&self, u: f64) -> f64 {
        self.scale * self.factor.eval(u)
    }

    #[inline]
    pub fn eval(&self, z: f64, u: f64) -> f64 {
        let d = self.d(u);
        if d == 0.0 {
            0.0
        } else {
            d * self.base.eval(z)
        }
    }

    /// D_n = (1/n sum_i D(i/n)^2)^{1/2}.
    pub fn d_n(&self, n: usize) -> f64 {
        power_mean(n, 2.0, |u| self.d(u))
    }

    /// (1/n sum_i |D(i/n)|^nu)^{1/nu}.
    pub fn d_inf_nu(&self, n: usize, nu: f64) -> f64 {
        power_mean(n, nu, |u| self.d(u))
    }

    /// max_i |D(i/n)|.
    pub fn d_sup(&self, n: usize) -> f64 {
        (1..=n).map(|i| self.d(i as f64 / n as f64).abs()).fold(0.0, f64::max)
    }

    /// sup_{z,u} |f| when the base is bounded.
    pub fn sup_abs(&self, n: usize) -> Option<f64> {
        self.base.sup_abs().map(|b| b * self.d_sup(n))
    }
}

fn power_mean(n: usize, nu: f64, d: impl Fn(f64) -> f64) -> f64 {
    let s: f64 = (1..=n).map(|i| d(i as f64 / n as f64).abs().powf(nu)).sum();
    (s / n as f64).powf(1.0 / nu)
}

/// D^infty_{nu,n} of a family: power mean of the pointwise sup over members.
pub fn family_d_inf_nu(members: &[FunctionClass], n: usize, nu: f64) -> f64 {
    power_mean(n, nu, |u| members.iter().map(|f| f.d(u).abs()).fold(0.0, f64::max))
}

/// D_n of a family: sup over members.
pub fn family_d_n(members: &[FunctionClass], n: usize) -> f64 {
    members.iter().map(|f| f.d_n(n)).fold(0.0, f64::max)
}

/// Lipschitz constant of x -> E fbar(m(x) + sigma(x) eps) for the
/// non-smooth bases, per unit change of m and sigma.
fn smoothed_lipschitz(model: &ProcessModel, base: &Base) -> Result<f64> {
    let (chi_m, chi_s, smin) = match model {
        ProcessModel::Recursive(m) => (m.chi_m(), m.chi_sigma(), m.sigma_min()),
        ProcessModel::Linear(_) => {
            return Err(LsepError::Unsupported(
                "non-smooth bases on linear models have no one-step smoothing bound".into(),
            ))
        }
    };
    let innov = model.innovation();
    match base {
        Base::Indicator { .. } => Ok(innov.density_sup() * chi_m / smin + innov.sup_x_density() * chi_s / smin),
        Base::KernelDensity { bandwidth, .. } => {
            let (d1, dx) = match (innov.derivative_sup(), innov.sup_x_derivative()) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(LsepError::Unsupported(
                        "kernel base needs a differentiable innovation density".into(),
                    ))
                }
            };
            Ok(bandwidth.sqrt() * (d1 * chi_m + (innov.density_sup() + dx) * chi_s) / (smin * smin))
        }
        _ => unreachable!(),
    }
}

/// Dependence profile Delta(k) of a class member (per unit of |D|), built
/// from the model's analytic decay bound with R = C_R = 1.
pub fn class_profile(model: &ProcessModel, base: &Base, s: f64) -> Result<DecayProfile> {
    if let Base::Constant { .. } = base {
        return Ok(DecayProfile::zero());
    }
    let dx = analytic_decay_bound(model, s)?;
    if let Some(l) = base.lipschitz() {
        return Ok(dx.scaled(2.0 * l));
    }
    let lmu = smoothed_lipschitz(model, base)?;
    match dx {
        DecayProfile::Geometric { c, rho } => {
            if lmu == 0.0 || rho == 0.0 {
                Ok(DecayProfile::zero())
            } else {
                // 2 L_mu Delta_X(k - 1)
                Ok(DecayProfile::Geometric { c: 2.0 * lmu * c / rho, rho })
            }
        }
        DecayProfile::Polynomial { .. } => Err(LsepError::Unsupported("polynomial state profile for a non-smooth base".into())),
    }
}

/// True when sigma depends on x (heteroscedastic recursion).
pub fn is_heteroscedastic(model: &ProcessModel) -> bool {
    match model {
        ProcessModel::Recursive(m) => !matches!(&m.scale, ScaleFamily::Affine { c1, .. } if c1.0.iter().all(|c| *c == 0.0)),
        ProcessModel::Linear(_) => false,
    }
}
