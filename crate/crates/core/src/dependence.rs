//! Decay profiles Delta(k) and the calculus built on them: beta, q*, r,
//! the Bernstein weights and their weighted tails, plus the Monte Carlo
//! functional dependence measure.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LsepError, Result};
use crate::process_models::{coupled_difference, ProcessModel};
use crate::quadrature::{integrate_breaks, Tolerance};
use crate::special::hurwitz_zeta;

const Q_CAP: u64 = 1 << 62;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DecayProfile {
    /// c k^{-alpha}
    Polynomial { c: f64, alpha: f64 },
    /// c rho^k
    Geometric { c: f64, rho: f64 },
}

/// Lower and upper closed-form envelope of a computed quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

impl DecayProfile {
    /// Delta == 0 for k >= 1, the independent case.
    pub fn zero() -> Self {
        DecayProfile::Geometric { c: 0.0, rho: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DecayProfile::Polynomial { c, alpha } => {
                if !(c >= 0.0 && c.is_finite()) {
                    return Err(LsepError::invalid(format!("profile constant c = {c} must be finite and >= 0")));
                }
                if !(alpha > 1.0 && alpha.is_finite()) {
                    return Err(LsepError::NotSummable(format!("polynomial exponent alpha = {alpha} must exceed 1")));
                }
            }
            DecayProfile::Geometric { c, rho } => {
                if !(c >= 0.0 && c.is_finite()) {
                    return Err(LsepError::invalid(format!("profile constant c = {c} must be finite and >= 0")));
                }
                if !(0.0..1.0).contains(&rho) {
                    return Err(LsepError::NotSummable(format!("geometric rate rho = {rho} must lie in [0, 1)")));
                }
            }
        }
        Ok(())
    }

    pub fn c(&self) -> f64 {
        match *self {
            DecayProfile::Polynomial { c, .. } | DecayProfile::Geometric { c, .. } => c,
        }
    }

    /// True when Delta(k) = 0 for every k >= 1.
    pub fn is_zero(&self) -> bool {
        match *self {
            DecayProfile::Polynomial { c, .. } => c == 0.0,
            DecayProfile::Geometric { c, rho } => c == 0.0 || rho == 0.0,
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        match *self {
            DecayProfile::Polynomial { c, alpha } => DecayProfile::Polynomial { c: a * c, alpha },
            DecayProfile::Geometric { c, rho } => DecayProfile::Geometric { c: a * c, rho },
        }
    }

    /// Delta(k); Delta(0) is taken as c.
    pub fn delta(&self, k: u64) -> f64 {
        self.delta_f(k as f64)
    }

    fn delta_f(&self, k: f64) -> f64 {
        if k == 0.0 {
            return self.c();
        }
        match *self {
            DecayProfile::Polynomial { c, alpha } => c * k.powf(-alpha),
            DecayProfile::Geometric { c, rho } => c * rho.powf(k),
        }
    }

    /// beta(q) = sum_{j >= q} Delta(j), q >= 1.
    pub fn beta(&self, q: u64) -> f64 {
        self.beta_f(q.max(1) as f64)
    }

    pub(crate) fn beta_f(&self, q: f64) -> f64 {
        match *self {
            DecayProfile::Polynomial { c, alpha } => {
                if c == 0.0 {
                    0.0
                } else {
                    c * hurwitz_zeta(alpha, q)
                }
            }
            DecayProfile::Geometric { c, rho } => c * rho.powf(q) / (1.0 - rho),
        }
    }

    /// Smallest k >= 1 with Delta(k) <= level.
    pub fn first_delta_below(&self, level: f64) -> u64 {
        self.first_delta_below_f(level).min(Q_CAP as f64) as u64
    }

    /// As `first_delta_below`, in floating point and without a cap; exact
    /// while the index stays below 2^52.
    pub fn first_delta_below_f(&self, level: f64) -> f64 {
        if self.is_zero() || self.delta(1) <= level {
            return 1.0;
        }
        if level <= 0.0 {
            return f64::INFINITY;
        }
        let guess = match *self {
            DecayProfile::Polynomial { c, alpha } => (c / level).powf(1.0 / alpha),
            DecayProfile::Geometric { c, rho } => (level / c).ln() / rho.ln(),
        };
        let mut k = guess.ceil().max(1.0);
        if k > 4503599627370496.0 {
            return k;
        }
        while k > 1.0 && self.delta_f(k - 1.0) <= level {
            k -= 1.0;
        }
        while self.delta_f(k) > level {
            k += 1.0;
        }
        k
    }

    /// q*(x) = min{q : beta(q) <= q x}.
    pub fn q_star(&self, x: f64) -> u64 {
        assert!(x > 0.0, "q_star needs x > 0");
        min_q(|q| self.beta_f(q) <= q * x)
    }

    /// min{q : beta(q) <= delta}.
    pub fn q_beta_below(&self, delta: f64) -> u64 {
        min_q(|q| self.beta_f(q) <= delta)
    }

    /// r(delta) = max{r > 0 : q*(r) r <= delta}.
    ///
    /// With Q = min{q : beta(q) <= delta}, r = delta/Q satisfies
    /// q*(r) <= Q, and any larger r would force q*(r) >= Q; so the
    /// maximum is attained at delta/Q.
    pub fn r_of_delta(&self, delta: f64) -> f64 {
        assert!(delta > 0.0, "r_of_delta needs delta > 0");
        delta / self.q_beta_below(delta) as f64
    }

    /// Constants sandwiching q*(x) around max{x^{-1/alpha}, 1} (polynomial)
    /// or max{log(1/x), 1} (geometric).
    pub fn q_star_closed_form(&self, x: f64) -> Bounds {
        if self.is_zero() {
            return Bounds { lower: 1.0, upper: 1.0 };
        }
        match *self {
            DecayProfile::Polynomial { c, alpha } => {
                let form = x.powf(-1.0 / alpha).max(1.0);
                let lo = c / (alpha - 1.0);
                let hi = c * alpha / (alpha - 1.0);
                Bounds { lower: lo.min(1.0).powf(1.0 / alpha) * form, upper: 2.0 * hi.max(1.0).powf(1.0 / alpha) * form }
            }
            DecayProfile::Geometric { c, rho } => {
                let form = (1.0 / x).ln().max(1.0);
                let (c1, upper) = geometric_q_constants(c, rho, |k, lr| k * std::f64::consts::E * lr);
                Bounds { lower: c1 * form, upper: upper * form }
            }
        }
    }

    /// Constants sandwiching r(delta) around min{delta^{alpha/(alpha-1)}, delta}
    /// (polynomial) or delta / max{log(1/delta), 1} (geometric).
    pub fn r_closed_form(&self, delta: f64) -> Bounds {
        if self.is_zero() {
            return Bounds { lower: delta, upper: delta };
        }
        match *self {
            DecayProfile::Polynomial { c, alpha } => {
                let form = delta.powf(alpha / (alpha - 1.0)).min(delta);
                let lo = c / (alpha - 1.0);
                let hi = c * alpha / (alpha - 1.0);
                Bounds {
                    lower: 0.5 * hi.max(1.0).powf(-1.0 / (alpha - 1.0)) * form,
                    upper: lo.min(1.0).powf(-1.0 / (alpha - 1.0)) * form,
                }
            }
            DecayProfile::Geometric { c, rho } => {
                let form = delta / (1.0 / delta).ln().max(1.0);
                let (cq, cu) = geometric_q_constants(c, rho, |k, _| k);
                Bounds { lower: form / cu, upper: form / cq }
            }
        }
    }

    pub fn bernstein(&self, nu: f64) -> Result<Bernstein> {
        Bernstein::new(*self, nu)
    }
}

/// Lower and upper multipliers for a geometric-profile index of the form
/// min{q : K rho^q <= q^a x}. `pivot(K, log(1/rho))` is the quantity whose
/// size against 1 decides the lower constant.
fn geometric_q_constants(c: f64, rho: f64, pivot: impl Fn(f64, f64) -> f64) -> (f64, f64) {
    let k = c / (1.0 - rho);
    let lr = -rho.ln();
    let upper = 1.0 + (1.0 + k.ln().max(0.0)) / lr;
    let p = pivot(k, lr);
    let lower = if p >= 1.0 {
        1.0f64.min(1.0 / (2.0 * lr))
    } else {
        let a = (1.0 / p).ln();
        1.0f64.min(1.0 / (4.0 * lr)).min(1.0 / (2.0 * a).max(1.0))
    };
    (lower, upper)
}

/// Smallest q >= 1 with pred(q), for a predicate monotone in q.
fn min_q(pred: impl Fn(f64) -> bool) -> u64 {
    if pred(1.0) {
        return 1;
    }
    let mut hi: u64 = 2;
    while !pred(hi as f64) {
        if hi >= Q_CAP {
            return Q_CAP;
        }
        hi *= 2;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if pred(mid as f64) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// omega(q) = q^{1/nu} log(e q)^{3/2}, L(q) = log log(e^e q), Phi(q) = q L(q).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernsteinWeights {
    pub nu: f64,
}

impl BernsteinWeights {
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu >= 2.0 && nu.is_finite()) {
            return Err(LsepError::invalid(format!("nu must be >= 2, got {nu}")));
        }
        Ok(BernsteinWeights { nu })
    }

    #[inline]
    pub fn omega(&self, q: f64) -> f64 {
        q.powf(1.0 / self.nu) * (1.0 + q.ln()).powf(1.5)
    }

    #[inline]
    pub fn ell(&self, q: f64) -> f64 {
        (std::f64::consts::E + q.ln()).ln()
    }

    #[inline]
    pub fn phi(&self, q: f64) -> f64 {
        q * self.ell(q)
    }

    /// omega(q) L(q)
    #[inline]
    fn weight(&self, q: f64) -> f64 {
        self.omega(q) * self.ell(q)
    }

    /// d/dq log(omega L)
    fn log_weight_slope(&self, q: f64) -> f64 {
        let lq = q.ln();
        (1.0 / self.nu + 1.5 / (1.0 + lq) + 1.0 / ((std::f64::consts::E + lq) * self.ell(q))) / q
    }
}

/// Weighted tail functionals for one profile and moment order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bernstein {
    pub profile: DecayProfile,
    pub weights: BernsteinWeights,
}

/// Margin on the polynomial summability condition alpha > 1 + 1/nu.
pub const SUMMABILITY_MARGIN: f64 = 0.05;
const POLY_DIRECT: f64 = 1000.0;

impl Bernstein {
    pub fn new(profile: DecayProfile, nu: f64) -> Result<Self> {
        profile.validate()?;
        let weights = BernsteinWeights::new(nu)?;
        if let DecayProfile::Polynomial { alpha, c } = profile {
            if c > 0.0 && alpha <= 1.0 + 1.0 / nu + SUMMABILITY_MARGIN {
                return Err(LsepError::NotSummable(format!(
                    "sum Delta(j) omega(j) L(j) needs alpha > 1 + 1/nu + {SUMMABILITY_MARGIN}; got alpha = {alpha}, nu = {nu}"
                )));
            }
        }
        Ok(Bernstein { profile, weights })
    }

    /// Index from which j -> Delta(j) omega(j) is decreasing.
    pub fn monotone_from(&self) -> u64 {
        match self.profile {
            DecayProfile::Polynomial { .. } => 2,
            DecayProfile::Geometric { rho, .. } => {
                if rho == 0.0 {
                    1
                } else {
                    ((1.0 / self.weights.nu + 1.5) / (-rho.ln())).ceil() as u64 + 1
                }
            }
        }
    }

    #[inline]
    fn term(&self, j: f64) -> f64 {
        self.profile.delta_f(j) * self.weights.weight(j)
    }

    /// beta~(q) = sum_{j >= q} Delta(j) omega(j) L(j).
    pub fn beta_tilde(&self, q: u64) -> f64 {
        self.beta_tilde_f(q.max(1) as f64)
    }

    fn beta_tilde_f(&self, q: f64) -> f64 {
        if self.profile.is_zero() {
            return 0.0;
        }
        match self.profile {
            DecayProfile::Geometric { rho, .. } => {
                // partial sum, then a ratio-bounded geometric tail
                let mut sum = 0.0;
                let mut j = q;
                loop {
                    let t = self.term(j);
                    sum += t;
                    let theta = rho * self.weights.weight(j + 1.0) / self.weights.weight(j);
                    if theta < 1.0 && t * theta / (1.0 - theta) <= 1e-17 * sum {
                        return sum + t * theta / (1.0 - theta);
                    }
                    j += 1.0;
                }
            }
            DecayProfile::Polynomial { alpha, .. } => {
                let n = q.max(POLY_DIRECT);
                let mut sum = 0.0;
                let mut j = q;
                while j < n {
                    sum += self.term(j);
                    j += 1.0;
                }
                sum + self.poly_tail(alpha, n)
            }
        }
    }

    /// sum_{j >= n} t(j) ~ int_n^inf t + t(n)/2 - t'(n)/12.
    fn poly_tail(&self, alpha: f64, n: f64) -> f64 {
        let gamma = alpha - 1.0 - 1.0 / self.weights.nu;
        let s_max = 60.0 / gamma;
        let mut brk = vec![0.0];
        let mut b = 1.0;
        while b < s_max {
            brk.push(b);
            b *= 2.0;
        }
        brk.push(s_max);
        let g = |s: f64| {
            let x = n * s.exp();
            self.term(x) * x
        };
        let tol = Tolerance { rel: 1e-12, abs: 0.0, max_intervals: 4000 };
        let integral = integrate_breaks(g, &brk, tol).map(|r| r.value).unwrap_or_else(|e| match e {
            LsepError::Quadrature { estimate, .. } => estimate,
            _ => f64::NAN,
        });
        let t = self.term(n);
        let dt = t * (-alpha + n * self.weights.log_weight_slope(n)) / n;
        integral + 0.5 * t - dt / 12.0
    }

    /// beta~(q) / Phi(q).
    pub fn beta_tilde_norm(&self, q: u64) -> f64 {
        self.beta_tilde(q) / self.weights.phi(q.max(1) as f64)
    }

    /// q~*(z) = min{q : beta~(q) <= Phi(q) z}.
    pub fn q_tilde_star(&self, z: f64) -> u64 {
        assert!(z > 0.0, "q_tilde_star needs z > 0");
        min_q(|q| self.beta_tilde_f(q) <= self.weights.phi(q) * z)
    }
}

/// Geometric (recursive) or template-matching (linear) bound on
/// delta_{2s}^X(k).
pub fn analytic_decay_bound(model: &ProcessModel, s: f64) -> Result<DecayProfile> {
    let q = 2.0 * s;
    match model {
        ProcessModel::Recursive(m) => {
            let rho = m.contraction(q);
            if rho >= 1.0 {
                return Err(LsepError::Contraction { value: rho, q });
            }
            let norm = m.innovation.norm(q);
            let cx = m.moment_bound(s)?;
            let c = 2.0 * norm * (m.scale.sup_at_zero() + m.chi_sigma() * cx);
            Ok(DecayProfile::Geometric { c, rho })
        }
        ProcessModel::Linear(m) => {
            m.template.validate()?;
            let norm = m.innovation.norm(q);
            Ok(match m.template {
                crate::process_models::Template::Geometric { scale, rho } => {
                    DecayProfile::Geometric { c: 2.0 * norm * scale, rho }
                }
                crate::process_models::Template::Polynomial { scale, alpha } => {
                    DecayProfile::Polynomial { c: 2.0 * norm * scale, alpha }
                }
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub k: usize,
    pub nu: f64,
    /// max over the index set
    pub value: f64,
    pub mc_se: f64,
    /// index attaining the max
    pub index: usize,
    /// (i, estimate, se) for each index in the set
    pub per_index: Vec<(usize, f64, f64)>,
}

/// Default index set {n/4, n/2, 3n/4, n}; a lower bound for the sup over i.
pub fn default_index_set(n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = [n / 4, n / 2, 3 * n / 4, n].into_iter().map(|i| i.max(1)).collect();
    v.dedup();
    v
}

/// Monte Carlo estimate of max_{i in i_set} ||X_i - X_i^{*(i-k)}||_nu.
pub fn estimate_delta_mc(
    model: &ProcessModel,
    n: usize,
    k: usize,
    nu: f64,
    reps: usize,
    i_set: Option<&[usize]>,
    seed: u64,
) -> Result<DeltaEstimate> {
    if reps < 100 {
        return Err(LsepError::invalid(format!("estimate_delta_mc needs reps >= 100, got {reps}")));
    }
    if !(nu >= 1.0) {
        return Err(LsepError::invalid(format!("nu must be >= 1, got {nu}")));
    }
    model.validate()?;
    let idx: Vec<usize> = match i_set {
        Some(s) => s.to_vec(),
        None => default_index_set(n),
    };
    let burn_in = model.default_burn_in()?.max(k);
    let diffs: Vec<Vec<f64>> = (0..reps as u64)
        .into_par_iter()
        .map(|r| coupled_difference(model, n, k, &idx, seed, r, burn_in))
        .collect::<Result<_>>()?;
    let mut per_index = Vec::with_capacity(idx.len());
    for (col, &i) in idx.iter().enumerate() {
        let p: Vec<f64> = diffs.iter().map(|d| d[col].abs().powf(nu)).collect();
        let m = crate::stats::mean(&p);
        let se_m = crate::stats::std_error(&p);
        let est = m.powf(1.0 / nu);
        // delta method for m^{1/nu}
        let se = if m > 0.0 { se_m * m.powf(1.0 / nu - 1.0) / nu } else { 0.0 };
        per_index.push((i, est, se));
    }
    let best = per_index.iter().cloned().fold((0, f64::NEG_INFINITY, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    Ok(DeltaEstimate { k, nu, value: best.1, mc_se: best.2, index: best.0, per_index })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubmultKind {
    Beta,
    BetaTildeNormalized { nu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubmultReport {
    /// smallest C with seq(q1 q2) <= C seq(q1) seq(q2) on the grid
    pub constant: f64,
    pub argmax: (u64, u64),
    pub q_max: u64,
}

pub fn check_submultiplicativity(profile: &DecayProfile, kind: SubmultKind, q_max: u64) -> Result<SubmultReport> {
    if q_max < 4 {
        return Err(LsepError::invalid("q_max must be at least 4"));
    }
    profile.validate()?;
    let seq: Box<dyn Fn(u64) -> f64> = match kind {
        SubmultKind::Beta => Box::new(|q| profile.beta(q)),
        SubmultKind::BetaTildeNormalized { nu } => {
            let b = profile.bernstein(nu)?;
            Box::new(move |q| b.beta_tilde_norm(q))
        }
    };
    let vals: Vec<f64> = (1..=q_max).map(&seq).collect();
    let mut best = (0.0, (1, 1));
    for q1 in 1..=q_max {
        for q2 in q1..=q_max {
            let num = seq(q1 * q2);
            let den = vals[(q1 - 1) as usize] * vals[(q2 - 1) as usize];
            if num == 0.0 {
                continue;
            }
            let ratio = num / den;
            if ratio > best.0 {
                best = (ratio, (q1, q2));
            }
        }
    }
    Ok(SubmultReport { constant: best.0, argmax: best.1, q_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::innovation::Innovation;
    use crate::poly::Poly;
    use crate::process_models::{LinearModel, RecursiveModel, Template};
    use proptest::prelude::*;

    const GEO: DecayProfile = DecayProfile::Geometric { c: 1.0, rho: 0.5 };
    const POLY: DecayProfile = DecayProfile::Polynomial { c: 1.0, alpha: 2.0 };

    #[test]
    fn beta_closed_forms() {
        assert_eq!(GEO.beta(3), 0.25);
        assert!((POLY.beta(1) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-12);
        let brute: f64 = (5..2_000_000u64).map(|j| (j as f64).powi(-2)).sum::<f64>() + 1.0 / 2_000_000.0;
        assert!((POLY.beta(5) - brute).abs() < 1e-11);
    }

    #[test]
    fn q_star_examples() {
        assert_eq!(POLY.q_star(1.0), 2);
        assert_eq!(POLY.q_star(POLY.beta(1)), 1);
        for x in [1e-4, 3e-3, 0.05, 0.7] {
            let q = POLY.q_star(x);
            assert!(POLY.beta(q) <= q as f64 * x);
            assert!(q == 1 || POLY.beta(q - 1) > (q - 1) as f64 * x);
        }
    }

    #[test]
    fn r_matches_brute_force_grid() {
        // max over a fine grid of r with q*(r) r <= delta
        for p in [GEO, POLY] {
            for delta in [0.01, 0.1, 0.5, 2.0] {
                let r = p.r_of_delta(delta);
                assert!(p.q_star(r) as f64 * r <= delta * (1.0 + 1e-12));
                let mut best: f64 = 0.0;
                for k in 1..=20_000 {
                    let cand = delta * k as f64 / 20_000.0;
                    if p.q_star(cand) as f64 * cand <= delta {
                        best = best.max(cand);
                    }
                }
                assert!(best <= r * (1.0 + 1e-12) && best >= r * (1.0 - 1e-3), "{p:?} {delta}: {best} vs {r}");
            }
        }
        assert_eq!(POLY.r_of_delta(10.0), 10.0);
    }

    #[test]
    fn weights_at_one() {
        let w = BernsteinWeights::new(2.0).unwrap();
        assert!((w.omega(1.0) - 1.0).abs() < 1e-15);
        assert!((w.ell(1.0) - 1.0).abs() < 1e-15);
        assert!((w.phi(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn beta_tilde_geometric_brute_force() {
        let b = GEO.bernstein(2.0).unwrap();
        let w = b.weights;
        let mut prev = f64::INFINITY;
        for q in 1..=20u64 {
            let brute: f64 = (q..q + 1_000_000).map(|j| GEO.delta(j) * w.omega(j as f64) * w.ell(j as f64)).sum();
            let got = b.beta_tilde(q);
            assert!(((got - brute) / brute).abs() < 1e-10);
            assert!(got < prev);
            prev = got;
        }
    }

    #[test]
    fn beta_tilde_polynomial_tail() {
        let p = DecayProfile::Polynomial { c: 1.0, alpha: 3.0 };
        let b = p.bernstein(2.0).unwrap();
        let w = b.weights;
        // long direct sum plus a crude integral tail from 4e6
        let n0 = 4_000_000u64;
        let mut brute: f64 = (1..n0).map(|j| p.delta(j) * w.omega(j as f64) * w.ell(j as f64)).sum();
        brute += b.poly_tail(3.0, n0 as f64);
        assert!(((b.beta_tilde(1) - brute) / brute).abs() < 1e-9);
        assert!(DecayProfile::Polynomial { c: 1.0, alpha: 1.5 }.bernstein(2.0).is_err());
    }

    #[test]
    fn submultiplicativity_grid() {
        let r = check_submultiplicativity(&POLY, SubmultKind::Beta, 32).unwrap();
        let mut best: f64 = 0.0;
        for a in 1..=32u64 {
            for b in 1..=32u64 {
                best = best.max(POLY.beta(a * b) / (POLY.beta(a) * POLY.beta(b)));
            }
        }
        assert_eq!(r.constant, best);
        assert!(r.constant >= 1.0 / POLY.beta(1));
        let g = check_submultiplicativity(&GEO, SubmultKind::BetaTildeNormalized { nu: 2.0 }, 16).unwrap();
        assert!(g.constant.is_finite());
    }

    #[test]
    fn analytic_bounds() {
        let tv: ProcessModel = RecursiveModel::tvar(Poly::linear(0.3, 0.3), 1.0, Innovation::Normal).into();
        match analytic_decay_bound(&tv, 1.0).unwrap() {
            DecayProfile::Geometric { rho, .. } => assert!((rho - 0.6).abs() < 1e-15),
            _ => panic!(),
        }
        let lin: ProcessModel = LinearModel::new(
            Poly::constant(1.0),
            Poly::constant(1.0),
            Template::Geometric { scale: 1.0, rho: 0.5 },
            Innovation::Normal,
        )
        .into();
        let p = analytic_decay_bound(&lin, 1.0).unwrap();
        assert!((p.delta(3) - 2.0 * 0.125).abs() < 1e-15);
        assert!(analytic_decay_bound(&RecursiveModel::ar1(1.2).into(), 1.0).is_err());
    }

    #[test]
    fn delta_mc_iid_lag_zero() {
        let m: ProcessModel = RecursiveModel::ar1(0.0).into();
        let d0 = estimate_delta_mc(&m, 100, 0, 2.0, 20_000, None, 4).unwrap();
        assert!((d0.value - 2f64.sqrt()).abs() < 4.0 * d0.mc_se);
        let d1 = estimate_delta_mc(&m, 100, 1, 2.0, 200, None, 4).unwrap();
        assert_eq!(d1.value, 0.0);
    }

    proptest! {
        #[test]
        fn calculus_monotonicity(c in 0.1f64..5.0, alpha in 1.2f64..4.0, rho in 0.05f64..0.95, q in 1u64..200) {
            for p in [DecayProfile::Polynomial { c, alpha }, DecayProfile::Geometric { c, rho }] {
                prop_assert!(p.delta(q + 1) <= p.delta(q));
                prop_assert!(p.beta(q + 1) <= p.beta(q));
                let x = 1.0 / q as f64;
                prop_assert!(p.q_star(x) >= p.q_star(2.0 * x));
                let d = x;
                let r = p.r_of_delta(d);
                prop_assert!(r <= d);
                prop_assert!(p.r_of_delta(2.0 * d) >= r);
                prop_assert!(p.r_of_delta(2.0 * d) / 2.0 >= r * (1.0 - 1e-15));
                prop_assert!(p.q_star(r) as f64 * r <= d * (1.0 + 1e-12));
            }
        }

        #[test]
        fn geometric_beta_is_exact(c in 0.1f64..5.0, rho in 0.01f64..0.99, q in 1u64..60) {
            let p = DecayProfile::Geometric { c, rho };
            // repeated multiplication carries about q/2 ulp of rounding
            let want = c * rho.powi(q as i32) / (1.0 - rho);
            prop_assert!((p.beta(q) - want).abs() <= (q as f64 + 4.0) * f64::EPSILON * want);
        }
    }
}
