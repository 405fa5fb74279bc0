use serde::{Deserialize, Serialize};

/// Polynomial in rescaled time `u`, coefficients in increasing degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly(pub Vec<f64>);

const GRID: usize = 2001;

impl Poly {
    pub fn constant(c: f64) -> Self {
        Poly(vec![c])
    }

    pub fn linear(c0: f64, c1: f64) -> Self {
        Poly(vec![c0, c1])
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * u + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly(vec![0.0]);
        }
        Poly(self.0.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect())
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().skip(1).all(|c| *c == 0.0)
    }

    fn grid_fold(&self, init: f64, op: fn(f64, f64) -> f64, map: fn(f64) -> f64) -> f64 {
        (0..GRID).map(|k| map(self.eval(k as f64 / (GRID - 1) as f64))).fold(init, op)
    }

    /// sup over a dense grid of [0,1] of |p(u)|.
    pub fn sup_abs(&self) -> f64 {
        if self.is_constant() {
            return self.eval(0.0).abs();
        }
        self.grid_fold(0.0, f64::max, f64::abs)
    }

    pub fn sup(&self) -> f64 {
        if self.is_constant() {
            return self.eval(0.0);
        }
        self.grid_fold(f64::NEG_INFINITY, f64::max, |x| x)
    }

    pub fn inf(&self) -> f64 {
        if self.is_constant() {
            return self.eval(0.0);
        }
        self.grid_fold(f64::INFINITY, f64::min, |x| x)
    }

    /// Lipschitz constant on [0,1].
    pub fn lipschitz(&self) -> f64 {
        self.derivative().sup_abs()
    }

    pub fn all_finite(&self) -> bool {
        !self.0.is_empty() && self.0.iter().all(|c| c.is_finite())
    }
}
