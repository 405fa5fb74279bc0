//! Adaptive Gauss-Kronrod (7/15) quadrature with global bisection.

use crate::error::{LsepError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { rel: 1e-8, abs: 1e-14, max_intervals: 2000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = hw * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * hw, ((kron - gauss) * hw).abs())
}

/// Single fixed 15-point Kronrod rule; for smooth integrands on short panels.
pub fn kronrod15<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    gk15(&f, a, b).0
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral> {
    integrate_breaks(f, &[a, b], tol)
}

/// Integrates over `[points[0], points[last]]`, seeding the subdivision
/// with the given breakpoints (kinks or jumps of the integrand).
pub fn integrate_breaks<F: Fn(f64) -> f64>(f: F, points: &[f64], tol: Tolerance) -> Result<Integral> {
    if points.len() < 2 {
        return Err(LsepError::invalid("need at least two integration points"));
    }
    let mut pts: Vec<f64> = points.iter().copied().filter(|x| x.is_finite()).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() < 2 {
        return Ok(Integral { value: 0.0, error: 0.0 });
    }
    // (a, b, value, error)
    let mut panels: Vec<(f64, f64, f64, f64)> = pts
        .windows(2)
        .map(|w| {
            let (v, e) = gk15(&f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    loop {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if !total.is_finite() {
            return Err(LsepError::Quadrature { estimate: total, residual: err });
        }
        if err <= tol.abs.max(tol.rel * total.abs()) {
            return Ok(Integral { value: total, error: err });
        }
        if panels.len() >= tol.max_intervals {
            return Err(LsepError::Quadrature { estimate: total, residual: err });
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap())
            .unwrap();
        let (a, b, _, _) = panels.swap_remove(idx);
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            // interval cannot be split further in floating point
            let total: f64 = panels.iter().map(|p| p.2).sum();
            return Err(LsepError::Quadrature { estimate: total, residual: err });
        }
        let (v1, e1) = gk15(&f, a, m);
        let (v2, e2) = gk15(&f, m, b);
        panels.push((a, m, v1, e1));
        panels.push((m, b, v2, e2));
    }
}
