//! Log-gamma, the (unnormalised) incomplete beta function and the binomial
//! CDF expressed through it.
//!
//! `B(a, b; x) = ∫₀ˣ t^(a-1) (1-t)^(b-1) dt` is evaluated with the
//! continued fraction for the regularised function (modified Lentz), so
//! large parameters stay stable; quadrature is used only as a test oracle.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

// Lanczos g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    if x >= 10.0 {
        // Stirling series, error below 1e-16 relative for x >= 10
        let inv = 1.0 / x;
        let inv2 = inv * inv;
        let series = inv
            * (1.0 / 12.0
                - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))));
        return (x - 0.5) * x.ln() - x + LN_SQRT_2PI + series;
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (x + 0.5) * t.ln() - t + acc.ln()
}

/// ln B(a, b) = ln Γ(a) + ln Γ(b) − ln Γ(a + b).
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// ln C(n, k).
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

fn check_beta_args(a: f64, b: f64, x: f64) -> Result<()> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("beta parameters must be positive, got a={a}, b={b}")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("beta argument {x} outside [0, 1]")));
    }
    Ok(())
}

/// Continued fraction of the regularised incomplete beta, modified Lentz.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    const MAX_ITER: usize = 20_000;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// ln of the leading factor x^a (1−x)^b / a times the continued fraction,
/// i.e. ln B(a, b; x) on the side where the fraction converges quickly.
fn ln_lower_tail(a: f64, b: f64, x: f64) -> f64 {
    a * x.ln() + b * (-x).ln_1p() + beta_cf(a, b, x).ln() - a.ln()
}

/// ln B(a, b; x). Returns −∞ at x = 0.
pub fn ln_incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    check_beta_args(a, b, x)?;
    if x == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if x == 1.0 {
        return Ok(ln_beta(a, b));
    }
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(ln_lower_tail(a, b, x))
    } else {
        // B(a,b;x) = B(a,b) − B(b,a;1−x)
        let lnb = ln_beta(a, b);
        let upper = (ln_lower_tail(b, a, 1.0 - x) - lnb).exp();
        Ok(lnb + (-upper.min(1.0)).ln_1p())
    }
}

/// Unnormalised incomplete beta `∫₀ˣ t^(a-1) (1-t)^(b-1) dt`.
pub fn incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    Ok(ln_incomplete_beta(a, b, x)?.exp())
}

/// Regularised incomplete beta I_x(a, b) = B(a, b; x) / B(a, b).
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    Ok((ln_incomplete_beta(a, b, x)? - ln_beta(a, b)).exp().min(1.0))
}

/// P(X ≤ k) for X ~ Binomial(n, p), via
/// `F(k; n, p) = (n − k) C(n, k) B(n − k, k + 1; 1 − p)`.
pub fn binom_cdf(k: u64, n: u64, p: f64) -> Result<f64> {
    if k > n {
        return Err(Error::Domain(format!("binomial k={k} exceeds n={n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("binomial p={p} outside [0, 1]")));
    }
    if k == n || p == 0.0 {
        return Ok(1.0);
    }
    if p == 1.0 {
        return Ok(0.0);
    }
    let nk = (n - k) as f64;
    let ln = nk.ln() + ln_choose(n, k) + ln_incomplete_beta(nk, k as f64 + 1.0, 1.0 - p)?;
    Ok(ln.exp().min(1.0))
}

/// Elementary bounds on the incomplete beta:
/// `(x^a / a, x^(a−1) (1 − (1−x)^b) / b)`.
pub fn beta_elementary_bounds(a: f64, b: f64, x: f64) -> (f64, f64) {
    let lower = x.powf(a) / a;
    let upper = x.powf(a - 1.0) * (1.0 - (1.0 - x).powf(b)) / b;
    (lower, upper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, QuadOptions};

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn ln_gamma_factorials() {
        let mut f = 1.0f64;
        for n in 1..30u32 {
            f *= f64::from(n);
            let got = ln_gamma(f64::from(n) + 1.0);
            assert!(close(got, f.ln(), 1e-14), "n={n}: {got} vs {}", f.ln());
        }
        assert!(close(ln_gamma(0.5), PI.sqrt().ln(), 1e-14));
        // Γ(10.5) = 1133278.3889487855...
        assert!(close(ln_gamma(10.5), 1_133_278.388_948_785_5_f64.ln(), 1e-14));
    }

    #[test]
    fn uniform_integrand_gives_x() {
        for x in [0.0, 0.1, 0.37, 0.5, 0.99, 1.0] {
            assert!((incomplete_beta(1.0, 1.0, x).unwrap() - x).abs() < 1e-15);
        }
    }

    #[test]
    fn complete_beta_value() {
        assert!(close(incomplete_beta(2.0, 3.0, 1.0).unwrap(), 1.0 / 12.0, 1e-14));
    }

    #[test]
    fn quadrature_oracle() {
        let opts = QuadOptions { abs_tol: 1e-15, rel_tol: 1e-13, ..QuadOptions::default() };
        for &(a, b, x) in &[(7.5, 3.2, 0.4), (2.0, 9.0, 0.8), (30.0, 4.0, 0.93), (3.5, 1.5, 0.05)] {
            let q = integrate(|t| t.powf(a - 1.0) * (1.0 - t).powf(b - 1.0), 0.0, x, &opts);
            let got = incomplete_beta(a, b, x).unwrap();
            assert!(close(got, q.value, 1e-12), "B({a},{b};{x}) = {got} vs quadrature {}", q.value);
        }
    }

    #[test]
    fn large_parameters_stable() {
        // symmetric case: I_{1/2}(a, a) = 1/2
        for a in [10.0, 500.0, 1e4] {
            let i = regularized_incomplete_beta(a, a, 0.5).unwrap();
            assert!((i - 0.5).abs() < 1e-10, "a={a}: {i}");
        }
        // I_x(a, 1) = x^a
        let got = regularized_incomplete_beta(1e4, 1.0, 0.9999).unwrap();
        assert!(close(got, 0.9999f64.powf(1e4), 1e-10));
    }

    #[test]
    fn domain_errors() {
        assert!(incomplete_beta(0.0, 1.0, 0.5).is_err());
        assert!(incomplete_beta(1.0, 1.0, 1.5).is_err());
        assert!(binom_cdf(4, 3, 0.5).is_err());
        assert!(binom_cdf(1, 3, -0.1).is_err());
    }

    fn binom_direct(k: u64, n: u64, p: f64) -> f64 {
        // straightforward term recursion for small n
        let mut term = (1.0 - p).powi(n as i32);
        let mut sum = term;
        for i in 1..=k {
            term *= (n - i + 1) as f64 / i as f64 * p / (1.0 - p);
            sum += term;
        }
        sum
    }

    #[test]
    fn binom_cdf_examples() {
        assert_eq!(binom_cdf(7, 7, 0.3).unwrap(), 1.0);
        for k in 0..5 {
            assert_eq!(binom_cdf(k, 4, 0.0).unwrap(), 1.0);
        }
        let direct: f64 = (0..=3u32)
            .map(|i| {
                let c = [1.0, 10.0, 45.0, 120.0][i as usize];
                c * 0.3f64.powi(i as i32) * 0.7f64.powi(10 - i as i32)
            })
            .sum();
        assert!((binom_cdf(3, 10, 0.3).unwrap() - direct).abs() < 1e-12);
        assert!((binom_cdf(17, 40, 0.45).unwrap() - binom_direct(17, 40, 0.45)).abs() < 1e-12);
    }

    #[test]
    fn beta_identity_prefactor_is_one() {
        // (n−k) C(n,k) B(n−k, k+1) = 1
        for n in 1..50u64 {
            for k in 0..n {
                let ln = ((n - k) as f64).ln() + ln_choose(n, k) + ln_beta((n - k) as f64, k as f64 + 1.0);
                assert!(ln.abs() < 1e-12, "n={n} k={k}: {ln}");
            }
        }
    }

    #[test]
    fn elementary_bounds_on_their_domain() {
        // lower bound needs (1−t)^(b−1) ≥ 1, i.e. b ≤ 1; upper needs t^(a−1) ≤ x^(a−1), i.e. a ≥ 1
        for &a in &[0.5, 1.0, 2.0, 5.0, 20.0] {
            for &b in &[0.5, 1.0, 2.0, 5.0, 20.0] {
                for j in 1..100 {
                    let x = j as f64 / 100.0;
                    let v = incomplete_beta(a, b, x).unwrap();
                    let (lo, hi) = beta_elementary_bounds(a, b, x);
                    if b <= 1.0 {
                        assert!(lo <= v * (1.0 + 1e-12), "lower a={a} b={b} x={x}");
                    }
                    if a >= 1.0 {
                        assert!(v <= hi * (1.0 + 1e-12), "upper a={a} b={b} x={x}");
                    }
                }
            }
        }
    }
}
