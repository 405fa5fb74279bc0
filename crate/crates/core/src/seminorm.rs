//! The V and V~ semi-norms, the L^nu(n) norm of a class member, the
//! threshold m(n, delta, k), entropy integrals and the truncation pair.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dependence::{Bernstein, Bounds, DecayProfile};
use crate::error::{LsepError, Result};
use crate::function_class::FunctionClass;
use crate::process_models::{simulate_path_rep, ProcessModel};
use crate::quadrature::{integrate, Tolerance};
use crate::stats::{mean, std_error, McEstimate};

/// ||f||_{nu,n} = (1/n sum_i ||f(Z_i, i/n)||_nu^nu)^{1/nu} by Monte Carlo.
pub fn norm_nu_n(f: &FunctionClass, model: &ProcessModel, nu: f64, n: usize, reps: usize, seed: u64) -> Result<McEstimate> {
    if reps < 100 {
        return Err(LsepError::invalid(format!("norm_nu_n needs reps >= 100, got {reps}")));
    }
    let per_rep: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let p = simulate_path_rep(model, n, seed, r, None)?;
            Ok((1..=n).map(|i| f.eval(p.value(i), p.u(i)).abs().powf(nu)).sum::<f64>() / n as f64)
        })
        .collect::<Result<_>>()?;
    let m = mean(&per_rep);
    let se = std_error(&per_rep);
    let value = m.powf(1.0 / nu);
    let mc_se = if m > 0.0 { se * m.powf(1.0 / nu - 1.0) / nu } else { 0.0 };
    Ok(McEstimate { value, mc_se })
}

/// V(f) = ||f||_{2,n} + sum_{k >= 1} min{||f||_{2,n}, D_n Delta(k)}.
///
/// The min equals ||f|| up to k* - 1 and D_n Delta(k) from k* on, where k*
/// is the first index with D_n Delta(k) <= ||f||; the sum is then
/// ||f|| (k* - 1) + D_n beta(k*), with no truncation error.
pub fn v_norm(f2n: f64, d_n: f64, profile: &DecayProfile) -> f64 {
    assert!(f2n >= 0.0 && d_n >= 0.0, "v_norm needs f2n >= 0 and D_n >= 0");
    if f2n == 0.0 {
        return 0.0;
    }
    if d_n == 0.0 || profile.is_zero() {
        return f2n;
    }
    let k = profile.first_delta_below_f(f2n / d_n);
    f2n * k + d_n * profile.beta_f(k)
}

/// Inverse of f2n -> V(f2n) for fixed D_n and profile.
pub fn v_norm_inverse(v: f64, d_n: f64, profile: &DecayProfile) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    // V(t) >= t, so the root lies in (0, v]
    let (mut lo, mut hi) = (0.0, v);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if v_norm(mid, d_n, profile) <= v {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Explicit lower and upper closed forms of V:
/// polynomial: ||f|| max{||f||^{-1/alpha}, 1}; geometric: ||f|| max{log(1/||f||), 1}.
pub fn v_closed_form(f2n: f64, d_n: f64, profile: &DecayProfile) -> Bounds {
    if f2n == 0.0 {
        return Bounds { lower: 0.0, upper: 0.0 };
    }
    if d_n == 0.0 || profile.is_zero() {
        return Bounds { lower: f2n, upper: f2n };
    }
    match *profile {
        DecayProfile::Polynomial { c, alpha } => {
            let kappa = c * d_n;
            let form = f2n * f2n.powf(-1.0 / alpha).max(1.0);
            let b = 2.0 * alpha / (alpha - 1.0) * kappa.max(1.0).powf(1.0 / alpha);
            let bl = alpha / (alpha - 1.0) * kappa.powf(1.0 / alpha);
            Bounds { lower: bl.min(1.0) * form, upper: (1.0 + b) * form }
        }
        DecayProfile::Geometric { c, rho } => {
            let kappa = c * d_n;
            let lr = -rho.ln();
            let form = f2n * (1.0 / f2n).ln().max(1.0);
            let b = 2.0 * kappa.ln().max(1.0) * (1.0 / lr + 2.0 / (1.0 - rho));
            let cl = if kappa >= 1.0 {
                1.0f64.min(1.0 / lr)
            } else {
                1.0f64.min(1.0 / (2.0 * lr)).min(1.0 / (2.0 * (1.0 / kappa).ln()).max(1.0))
            };
            Bounds { lower: cl * form, upper: (1.0 + b) * form }
        }
    }
}

/// V~(f) = ||f|| + sum_{j >= 1} min{||f||, D_n Delta(j) omega(j)} L(j).
pub fn v_tilde(f2n: f64, d_n: f64, profile: &DecayProfile, nu: f64) -> Result<f64> {
    let b = Bernstein::new(*profile, nu)?;
    Ok(v_tilde_with(f2n, d_n, &b))
}

pub fn v_tilde_with(f2n: f64, d_n: f64, b: &Bernstein) -> f64 {
    assert!(f2n >= 0.0 && d_n >= 0.0, "v_tilde needs f2n >= 0 and D_n >= 0");
    if f2n == 0.0 {
        return 0.0;
    }
    if d_n == 0.0 || b.profile.is_zero() {
        return f2n;
    }
    let w = b.weights;
    let j0 = b.monotone_from();
    let mut sum = f2n;
    let mut j: u64 = 1;
    loop {
        let jf = j as f64;
        let d = d_n * b.profile.delta(j) * w.omega(jf);
        if j >= j0 && d <= f2n {
            // every later term is the D_n Delta omega L branch
            return sum + d_n * b.beta_tilde(j);
        }
        sum += d.min(f2n) * w.ell(jf);
        j += 1;
    }
}

/// H(k) = max{1, log k}.
pub fn h_of(k: f64) -> f64 {
    k.ln().max(1.0)
}

/// m(n, delta, k) = r(delta / D_n) D_n^infty sqrt(n) / sqrt(H(k)).
pub fn m_threshold(n: usize, delta: f64, k_count: f64, d_n: f64, d_inf: f64, profile: &DecayProfile) -> f64 {
    assert!(n >= 1 && delta > 0.0 && k_count >= 1.0 && d_n > 0.0);
    profile.r_of_delta(delta / d_n) * d_inf * (n as f64).sqrt() / h_of(k_count).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyWeight {
    Unit,
    /// psi(eps) = sqrt(log(1/eps) v 1) log log(1/eps v e)
    Psi,
}

impl EntropyWeight {
    fn at(self, eps: f64) -> f64 {
        match self {
            EntropyWeight::Unit => 1.0,
            EntropyWeight::Psi => {
                let inv = 1.0 / eps;
                inv.ln().max(1.0).sqrt() * inv.max(std::f64::consts::E).ln().ln()
            }
        }
    }
}

const OCTAVES: i32 = 60;
/// Integrands whose octave integrals shrink slower than eps^{margin} are
/// treated as divergent.
const DIVERGENCE_MARGIN: f64 = 0.01;

/// int_0^sigma sqrt(1 v H(eps)) w(eps) d eps over octaves sigma 2^{-j}.
pub fn entropy_integral<H: Fn(f64) -> f64>(h_fn: H, sigma: f64, weight: EntropyWeight) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(LsepError::invalid("sigma must be positive"));
    }
    let g = |e: f64| h_fn(e).max(1.0).sqrt() * weight.at(e);
    let tol = Tolerance { rel: 1e-9, abs: 0.0, max_intervals: 500 };
    let mut octaves = Vec::with_capacity(OCTAVES as usize);
    let mut hi = sigma;
    for _ in 0..OCTAVES {
        let lo = 0.5 * hi;
        octaves.push(integrate(&g, lo, hi, tol)?.value);
        hi = lo;
    }
    // local exponent a in eps^{-a} from the ratio of the last octaves
    let n = octaves.len();
    let ratio = octaves[n - 1] / octaves[n - 2];
    let exponent = 1.0 + ratio.log2();
    if !ratio.is_finite() || exponent >= 1.0 - DIVERGENCE_MARGIN {
        return Err(LsepError::Divergent { exponent });
    }
    let tail = octaves[n - 1] * ratio / (1.0 - ratio);
    Ok(octaves.iter().sum::<f64>() + tail)
}

/// (phi_m^wedge(x), phi_m^vee(x)): the clipped value and its residual.
pub fn truncate(x: f64, m: f64) -> (f64, f64) {
    assert!(m > 0.0, "truncation level must be positive");
    let t = x.max(-m).min(m);
    (t, x - t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_class::{Base, Factor};
    use crate::process_models::RecursiveModel;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    const GEO: DecayProfile = DecayProfile::Geometric { c: 1.0, rho: 0.5 };
    const POLY: DecayProfile = DecayProfile::Polynomial { c: 1.0, alpha: 2.0 };

    fn v_direct(f: f64, d: f64, p: &DecayProfile, terms: u64) -> f64 {
        f + (1..terms).map(|k| f.min(d * p.delta(k))).sum::<f64>()
    }

    #[test]
    fn v_matches_direct_summation() {
        for p in [GEO, POLY] {
            for f in [1e-3, 0.02, 0.3, 2.0] {
                let tail = p.beta(2_000_000);
                let want = v_direct(f, 1.0, &p, 2_000_000) + tail;
                assert!((v_norm(f, 1.0, &p) - want).abs() < 1e-9 * want, "{p:?} {f}");
            }
        }
    }

    #[test]
    fn v_special_values() {
        assert_eq!(v_norm(0.0, 1.0, &GEO), 0.0);
        assert_eq!(v_norm(0.7, 1.0, &DecayProfile::zero()), 0.7);
        let b = v_closed_form(2.0, 1.0, &POLY);
        assert_eq!(b.upper, (1.0 + 4.0) * 2.0);
    }

    #[test]
    fn geometric_upper_constant() {
        let f = (-3.0f64).exp();
        let b = v_closed_form(f, 1.0, &GEO);
        let c = 1.0 + 2.0 * (1.0 / 2f64.ln() + 4.0);
        assert!((b.upper - c * f * 3.0).abs() < 1e-14);
        assert!(b.contains(v_norm(f, 1.0, &GEO)));
    }

    #[test]
    fn sandwich_over_four_decades() {
        for p in [
            GEO,
            POLY,
            DecayProfile::Geometric { c: 5.0, rho: 0.9 },
            DecayProfile::Geometric { c: 0.01, rho: 0.2 },
            DecayProfile::Polynomial { c: 0.05, alpha: 1.3 },
            DecayProfile::Polynomial { c: 30.0, alpha: 4.0 },
        ] {
            for d in [0.3, 1.0, 4.0] {
                for k in 0..40 {
                    let f = 10f64.powf(-4.0 + 4.0 * k as f64 / 39.0);
                    let v = v_norm(f, d, &p);
                    let b = v_closed_form(f, d, &p);
                    assert!(b.contains(v), "{p:?} d={d} f={f}: {v} not in {b:?}");
                }
            }
        }
    }

    #[test]
    fn v_tilde_dominates_and_matches_brute_force() {
        for f in [1e-4, 1e-2, 0.5] {
            let vt = v_tilde(f, 1.0, &GEO, 2.0).unwrap();
            assert!(vt >= v_norm(f, 1.0, &GEO));
            let w = crate::dependence::BernsteinWeights::new(2.0).unwrap();
            let brute: f64 = f + (1..1_000_000u64)
                .map(|j| f.min(GEO.delta(j) * w.omega(j as f64)) * w.ell(j as f64))
                .sum::<f64>();
            assert!(((vt - brute) / brute).abs() < 1e-6);
        }
        assert_eq!(v_tilde(0.0, 1.0, &GEO, 2.0).unwrap(), 0.0);
        assert!(v_tilde(0.1, 1.0, &DecayProfile::Polynomial { c: 1.0, alpha: 1.4 }, 2.0).is_err());
    }

    #[test]
    fn m_threshold_rules() {
        let m1 = m_threshold(100, 0.3, 1.0, 1.0, 1.5, &POLY);
        assert_eq!(m1, POLY.r_of_delta(0.3) * 1.5 * 10.0);
        let m2 = m_threshold(200, 0.3, 1.0, 1.0, 1.5, &POLY);
        assert!((m2 / m1 - 2f64.sqrt()).abs() < 1e-14);
        let big = m_threshold(100, 10.0, 50.0, 2.0, 1.0, &POLY);
        assert!((big - 5.0 * 10.0 / 50f64.ln().sqrt()).abs() < 1e-12);
    }

    #[test]
    fn entropy_integrals() {
        assert!((entropy_integral(|_| 0.0, 0.7, EntropyWeight::Unit).unwrap() - 0.7).abs() < 1e-12);
        let got = entropy_integral(|e: f64| (1.0 / e).ln(), 1.0, EntropyWeight::Unit).unwrap();
        // midpoint rule on 10^6 panels after the substitution eps = exp(-t^2)
        let n = 1_000_000;
        let tmax = 12.0;
        let riemann: f64 = (0..n)
            .map(|k| {
                let t = (k as f64 + 0.5) * tmax / n as f64;
                let e = (-t * t).exp();
                (1.0 / e).ln().max(1.0).sqrt() * 2.0 * t * e * tmax / n as f64
            })
            .sum();
        assert!((got - riemann).abs() < 1e-6 * riemann);
        let mut prev = 0.0;
        for d in [1.0, 2.0, 5.0] {
            let v = entropy_integral(|e: f64| d * (1.0 / e).ln(), 1.0, EntropyWeight::Psi).unwrap();
            assert!(v > prev && v.is_finite());
            prev = v;
        }
        assert!(matches!(
            entropy_integral(|e: f64| e.powf(-2.0), 1.0, EntropyWeight::Unit),
            Err(LsepError::Divergent { .. })
        ));
    }

    #[test]
    fn entropy_substitution_for_polynomial_profile() {
        // H in the V metric is H(tau(eps)) in the L2 metric with V(tau) = eps
        let p = DecayProfile::Polynomial { c: 1.0, alpha: 2.0 };
        let h2 = |t: f64| (1.0 / t).ln();
        for sigma in [0.05, 0.2, 1.0] {
            let via_v = entropy_integral(|e| h2(v_norm_inverse(e, 1.0, &p)), sigma, EntropyWeight::Unit).unwrap();
            let tau = v_norm_inverse(sigma, 1.0, &p);
            // sqrt of t^{-1} (1 v H) is t^{-1/2} sqrt(1 v H)
            let sub = entropy_integral(|t| h2(t).max(1.0) / t, tau, EntropyWeight::Unit).unwrap();
            let ratio = via_v / sub;
            assert!(ratio > 0.1 && ratio < 10.0, "sigma={sigma}: {via_v} vs {sub}");
        }
    }

    #[test]
    fn norm_examples() {
        let m: ProcessModel = RecursiveModel::ar1(0.5).into();
        let c = FunctionClass::new(Base::Constant { c: -2.5 }, Factor::global());
        let r = norm_nu_n(&c, &m, 2.0, 50, 100, 1).unwrap();
        assert!((r.value - 2.5).abs() < 1e-12);
        let id = FunctionClass::new(Base::Identity, Factor::global());
        let r = norm_nu_n(&id, &m, 2.0, 2000, 200, 1).unwrap();
        assert!((r.value - (4.0f64 / 3.0).sqrt()).abs() < 4.0 * r.mc_se + 1e-3, "{r:?}");
        let ind = FunctionClass::new(Base::Indicator { x: f64::INFINITY }, Factor::global());
        assert_eq!(norm_nu_n(&ind, &m, 2.0, 50, 100, 1).unwrap().value, 1.0);
    }

    #[test]
    fn truncation_examples() {
        assert_eq!(truncate(3.0, 2.0), (2.0, 1.0));
        assert_eq!(truncate(-5.0, 2.0), (-2.0, -3.0));
    }

    #[test]
    fn truncation_bound_random_triples() {
        // dyadic inputs keep every sum exact, so the bound is checked without tolerance
        let mut r = rng::stream(3, rng::DRAWS, 0);
        let dy = |k: i64| k as f64 / 1_048_576.0;
        for _ in 0..100_000 {
            let mk: i64 = r.random_range(1..5 << 20);
            let m = dy(mk);
            let k1: i64 = r.random_range(-mk..=mk);
            let rest = mk - k1.abs();
            let x1 = dy(k1);
            let x2 = dy(r.random_range(-rest..=rest));
            let x3 = dy(r.random_range(-(20i64 << 20)..=(20 << 20)));
            let lhs = (truncate(x1 + x2 + x3, m).0 - truncate(x1, m).0 - truncate(x2, m).0).abs();
            assert!(lhs <= x3.abs().min(2.0 * m));
        }
    }

    proptest! {
        #[test]
        fn v_seminorm_laws(a in 1e-5f64..3.0, b in 1e-5f64..3.0, lam in 0.01f64..10.0, d in 0.1f64..5.0) {
            for p in [GEO, POLY] {
                let va = v_norm(a, d, &p);
                prop_assert!(a <= va);
                prop_assert!(v_norm(a + b, d, &p) <= (va + v_norm(b, d, &p)) * (1.0 + 1e-12));
                let scaled = v_norm(lam * a, lam * d, &p);
                prop_assert!((scaled - lam * va).abs() <= 1e-10 * scaled);
            }
        }

        #[test]
        fn truncation_residual_bound(xk in -(50i64 << 20)..(50 << 20), sk in 0i64..(10 << 20), mk in 1i64..(10 << 20)) {
            let (x, slack, m) = (xk as f64 / 1_048_576.0, sk as f64 / 1_048_576.0, mk as f64 / 1_048_576.0);
            let y = x.abs() + slack;
            let (t, v) = truncate(x, m);
            prop_assert_eq!(t + v, x);
            let bound = if y > m { y } else { 0.0 };
            prop_assert!(v.abs() <= bound);
        }

        #[test]
        fn truncation_is_contractive(x in -50.0f64..50.0, y in -50.0f64..50.0, m in 0.01f64..10.0) {
            prop_assert!((truncate(x, m).0 - truncate(y, m).0).abs() <= (x - y).abs());
        }
    }
}
