use serde::{Deserialize, Serialize};

use crate::error::{LsepError, Result};

/// Smoothing kernel supported on [-1/2, 1/2].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Kernel {
    #[default]
    Epanechnikov,
    Triangular,
    /// Equispaced samples on [-1/2, 1/2] (endpoints included), linearly interpolated.
    Custom { values: Vec<f64> },
}

impl Kernel {
    pub fn custom(values: Vec<f64>) -> Result<Self> {
        let k = Kernel::Custom { values };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if let Kernel::Custom { values } = self {
            if values.len() < 3 || values.iter().any(|v| !v.is_finite()) {
                return Err(LsepError::invalid("custom kernel needs at least 3 finite samples"));
            }
        }
        let mass = self.integral();
        if (mass - 1.0).abs() > 1e-10 {
            return Err(LsepError::invalid(format!("kernel integrates to {mass}, expected 1")));
        }
        if self.integral_sq() <= 0.0 {
            return Err(LsepError::invalid("kernel has zero L2 norm"));
        }
        Ok(())
    }

    pub fn eval(&self, u: f64) -> f64 {
        if !(-0.5..=0.5).contains(&u) {
            return 0.0;
        }
        match self {
            Kernel::Epanechnikov => 6.0 * (0.25 - u * u),
            Kernel::Triangular => 4.0 * (0.5 - u.abs()),
            Kernel::Custom { values } => {
                let m = values.len() - 1;
                let pos = (u + 0.5) * m as f64;
                let i = (pos.floor() as usize).min(m - 1);
                let t = pos - i as f64;
                values[i] * (1.0 - t) + values[i + 1] * t
            }
        }
    }

    /// K_h(x) = K(x/h)/h.
    pub fn scaled(&self, x: f64, h: f64) -> f64 {
        self.eval(x / h) / h
    }

    pub fn sup(&self) -> f64 {
        match self {
            Kernel::Epanechnikov => 1.5,
            Kernel::Triangular => 2.0,
            Kernel::Custom { values } => values.iter().fold(0.0, |a, v| a.max(v.abs())),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            Kernel::Epanechnikov => 6.0,
            Kernel::Triangular => 4.0,
            Kernel::Custom { values } => {
                let dx = 1.0 / (values.len() - 1) as f64;
                let inner = values.windows(2).map(|w| (w[1] - w[0]).abs() / dx).fold(0.0, f64::max);
                // a nonzero boundary value is a jump to zero outside the support
                if values[0] != 0.0 || values[values.len() - 1] != 0.0 {
                    f64::INFINITY
                } else {
                    inner
                }
            }
        }
    }

    pub fn integral(&self) -> f64 {
        match self {
            Kernel::Epanechnikov | Kernel::Triangular => 1.0,
            Kernel::Custom { values } => {
                let dx = 1.0 / (values.len() - 1) as f64;
                values.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dx).sum()
            }
        }
    }

    pub fn integral_sq(&self) -> f64 {
        match self {
            Kernel::Epanechnikov => 1.2,
            Kernel::Triangular => 4.0 / 3.0,
            Kernel::Custom { values } => {
                let dx = 1.0 / (values.len() - 1) as f64;
                values.windows(2).map(|w| (w[0] * w[0] + w[0] * w[1] + w[1] * w[1]) / 3.0 * dx).sum()
            }
        }
    }

    /// int |u| K(u) du
    pub fn abs_first_moment(&self) -> f64 {
        match self {
            Kernel::Epanechnikov => 0.1875,
            Kernel::Triangular => 1.0 / 6.0,
            Kernel::Custom { .. } => crate::quadrature::integrate_breaks(
                |u: f64| u.abs() * self.eval(u),
                &[-0.5, 0.0, 0.5],
                crate::quadrature::Tolerance::default(),
            )
            .map(|r| r.value)
            .unwrap_or(f64::NAN),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_breaks, Tolerance};

    fn quad(f: impl Fn(f64) -> f64) -> f64 {
        integrate_breaks(f, &[-0.5, 0.0, 0.5], Tolerance { rel: 1e-13, abs: 1e-15, max_intervals: 500 })
            .unwrap()
            .value
    }

    #[test]
    fn builtin_moments_match_quadrature() {
        for k in [Kernel::Epanechnikov, Kernel::Triangular] {
            assert!((quad(|u| k.eval(u)) - 1.0).abs() < 1e-12);
            assert!((quad(|u| k.eval(u).powi(2)) - k.integral_sq()).abs() < 1e-12);
            assert!((quad(|u| u.abs() * k.eval(u)) - k.abs_first_moment()).abs() < 1e-12);
        }
    }

    #[test]
    fn epanechnikov_l2_is_six_fifths() {
        assert_eq!(Kernel::Epanechnikov.integral_sq(), 6.0 / 5.0);
    }

    #[test]
    fn custom_triangle_matches_builtin() {
        let k = Kernel::custom(vec![0.0, 2.0, 0.0]).unwrap();
        for u in [-0.4, -0.1, 0.0, 0.2, 0.49] {
            assert!((k.eval(u) - Kernel::Triangular.eval(u)).abs() < 1e-14);
        }
        assert!((k.integral_sq() - 4.0 / 3.0).abs() < 1e-14);
        assert_eq!(k.lipschitz(), 4.0);
    }

    #[test]
    fn custom_rejects_bad_mass() {
        assert!(Kernel::custom(vec![0.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn outside_support_is_zero() {
        assert_eq!(Kernel::Epanechnikov.eval(0.51), 0.0);
        assert_eq!(Kernel::Triangular.eval(-0.7), 0.0);
    }
}
