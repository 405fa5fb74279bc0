//! Localized estimators on a single path and the EDF bracket grid.

mod brackets;
mod m_estimation;
mod smoothing;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{LsepError, Result};
use crate::kernel::Kernel;

pub use brackets::{edf_brackets, BracketParams, Brackets};
pub use m_estimation::{ar_closed_form, m_estimate, Loss, LossFn, MEstimate, MObjective, Truth};
pub use smoothing::{
    density_reference, edf_reference, kernel_density, kernel_regression, local_edf, local_mad, local_mean,
    mad_reference, regression_reference,
};

/// Estimates on a grid. Density surfaces and EDF curves carry an x
/// coordinate per entry; M-estimates of a vector parameter use x for the
/// component index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResult {
    pub estimator: String,
    pub v: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Vec<f64>>,
    pub bandwidths: Vec<f64>,
}

impl EstimatorResult {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// sup over the grid of |estimate - reference|.
    pub fn sup_error(&self) -> Option<f64> {
        let r = self.reference.as_ref()?;
        Some(self.values.iter().zip(r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut head = vec!["v"];
        if self.x.is_some() {
            head.push("x");
        }
        head.extend(["estimate", "reference"]);
        out.write_record(&head)?;
        for k in 0..self.values.len() {
            let mut row = vec![self.v[k].to_string()];
            if let Some(x) = &self.x {
                row.push(x[k].to_string());
            }
            row.push(self.values[k].to_string());
            row.push(self.reference.as_ref().map(|r| r[k].to_string()).unwrap_or_default());
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// m equispaced points on [h/2, 1 - h/2].
pub fn interior_grid(h: f64, m: usize) -> Result<Vec<f64>> {
    check_bandwidth(h)?;
    if m == 0 {
        return Err(LsepError::invalid("grid needs at least one point"));
    }
    if m == 1 {
        return Ok(vec![0.5]);
    }
    let (a, b) = (h / 2.0, 1.0 - h / 2.0);
    Ok((0..m).map(|k| a + (b - a) * k as f64 / (m - 1) as f64).collect())
}

fn check_bandwidth(h: f64) -> Result<()> {
    if !(h > 0.0 && h < 1.0) {
        return Err(LsepError::invalid(format!("bandwidth must lie in (0, 1), got {h}")));
    }
    Ok(())
}

/// Sorted grid restricted to [h/2, 1 - h/2]; points outside are dropped.
fn interior(v_grid: &[f64], h: f64) -> Result<Vec<f64>> {
    check_bandwidth(h)?;
    let slack = 1e-12;
    let mut v: Vec<f64> = v_grid.iter().copied().filter(|v| *v >= h / 2.0 - slack && *v <= 1.0 - h / 2.0 + slack).collect();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(LsepError::invalid("grid points must be finite"));
    }
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return Err(LsepError::invalid(format!("no grid point inside [{}, {}]", h / 2.0, 1.0 - h / 2.0)));
    }
    Ok(v)
}

/// Indices i in 1..=n with K_h(i/n - v) possibly nonzero, and the weights
/// K_h(i/n - v).
fn window(n: usize, kernel: &Kernel, h: f64, v: f64) -> Result<(usize, Vec<f64>)> {
    let nf = n as f64;
    let lo = (((v - h / 2.0) * nf).floor().max(1.0)) as usize;
    let hi = (((v + h / 2.0) * nf).ceil().min(nf)) as usize;
    if hi < lo {
        return Err(LsepError::invalid(format!("empty kernel window at v = {v}")));
    }
    let w: Vec<f64> = (lo..=hi).map(|i| kernel.scaled(i as f64 / nf - v, h)).collect();
    if w.iter().all(|x| *x == 0.0) {
        return Err(LsepError::invalid(format!("empty kernel window at v = {v}")));
    }
    Ok((lo, w))
}

/// (1/n) sum_i K_h(i/n - v).
pub fn kernel_mass(n: usize, kernel: &Kernel, h: f64, v: f64) -> Result<f64> {
    let (_, w) = window(n, kernel, h, v)?;
    Ok(w.iter().sum::<f64>() / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_normalize() {
        for n in [500usize, 2000, 8000] {
            let h = 0.1;
            for v in interior_grid(h, 7).unwrap() {
                let m = kernel_mass(n, &Kernel::Epanechnikov, h, v).unwrap();
                assert!((m - 1.0).abs() < 2.0 / (n as f64 * h), "{n} {v} {m}");
            }
        }
    }

    #[test]
    fn boundary_points_are_dropped() {
        let v = interior(&[0.0, 0.5, 0.01, 0.96, 0.3], 0.1).unwrap();
        assert_eq!(v, vec![0.3, 0.5]);
        assert!(interior(&[0.01], 0.1).is_err());
    }

    #[test]
    fn csv_columns() {
        let r = EstimatorResult {
            estimator: "edf".into(),
            v: vec![0.5, 0.5],
            x: Some(vec![0.0, 1.0]),
            values: vec![0.4, 0.8],
            reference: None,
            bandwidths: vec![0.1],
        };
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("v,x,estimate,reference\n0.5,0,0.4,\n"));
    }
}
