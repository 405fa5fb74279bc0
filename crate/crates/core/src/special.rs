//! Hurwitz zeta by direct summation followed by Euler-Maclaurin.

// B_{2k} / (2k)!, k = 1..6
const BERNOULLI_OVER_FACT: [f64; 6] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
];

/// zeta(s, q) = sum_{j >= q} j^{-s} for s > 1, q >= 1.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    debug_assert!(s > 1.0 && q >= 1.0);
    let n0 = q.max((2.0 * s + 20.0).ceil());
    let mut direct = 0.0;
    let mut j = q;
    while j < n0 {
        direct += j.powf(-s);
        j += 1.0;
    }
    let n = j;
    let mut tail = n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    // rising factorial s (s+1) ... (s+2k-2)
    let mut rising = s;
    let mut pow = n.powf(-s - 1.0);
    for (k, b) in BERNOULLI_OVER_FACT.iter().enumerate() {
        tail += b * rising * pow;
        let m = 2.0 * k as f64;
        rising *= (s + m + 1.0) * (s + m + 2.0);
        pow /= n * n;
    }
    direct + tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn basel() {
        assert!((hurwitz_zeta(2.0, 1.0) - PI * PI / 6.0).abs() < 1e-14);
        assert!((hurwitz_zeta(4.0, 1.0) - PI.powi(4) / 90.0).abs() < 1e-14);
    }

    #[test]
    fn shift_identity() {
        for s in [1.1, 1.5, 2.0, 3.7] {
            for q in [1.0, 2.0, 7.0, 100.0, 1e6] {
                let lhs = hurwitz_zeta(s, q) - hurwitz_zeta(s, q + 1.0);
                assert!((lhs - q.powf(-s)).abs() <= 1e-12 * q.powf(-s).max(1e-300) + 1e-15, "{s} {q}");
            }
        }
    }

    #[test]
    fn slowly_convergent_case() {
        // zeta(1.1) = 10.5844484649508...
        assert!((hurwitz_zeta(1.1, 1.0) - 10.584_448_464_950_81).abs() < 1e-10);
    }
}
