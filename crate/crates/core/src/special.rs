//! Modified Bessel function of the second kind and related closed forms.
//!
//! `K_α(x)` is evaluated from `K_α(x) = ∫_0^∞ e^{-x cosh u} cosh(αu) du` with a
//! step-halving trapezoid rule (the integrand is analytic and decays doubly
//! exponentially), and from the Hankel asymptotic series for `x ≥ 30`.

use crate::error::{domain, Result};
use crate::quad::trapezoid_halving;
use std::f64::consts::PI;

/// Argument at and above which the asymptotic series is used.
pub const ASYMPTOTIC_SWITCH: f64 = 30.0;
/// Largest order accepted by [`bessel_k`].
pub const MAX_ORDER: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BesselMethod {
    IntegralRep,
    AsymptoticSeries,
}

/// One evaluation of `K_α(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselEval {
    pub order: f64,
    pub argument: f64,
    /// `K_α(x)`; underflows to zero for very large `x`.
    pub value: f64,
    /// `e^x K_α(x)`, always representable.
    pub scaled: f64,
    pub method: BesselMethod,
}

fn check_args(order: f64, x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("K_alpha needs x > 0, got {x}"));
    }
    if !(0.0..=MAX_ORDER).contains(&order) {
        return domain(format!("K_alpha order must lie in [0, 2], got {order}"));
    }
    Ok(())
}

/// `e^x K_α(x)` from the integral representation, valid for every `x > 0`.
pub fn bessel_k_scaled_integral(order: f64, x: f64) -> Result<f64> {
    check_args(order, x)?;
    // exponent of the integrand relative to e^{-x}: αu − x(cosh u − 1)
    let exponent = |u: f64| order * u - x * (u.cosh() - 1.0);
    let u_peak = if order > 0.0 { (order / x).asinh() } else { 0.0 };
    let peak = exponent(u_peak);
    let mut upper = u_peak + 0.5;
    while exponent(upper) > peak - 60.0 {
        upper += 0.5;
    }
    let integrand = |u: f64| (-x * (u.cosh() - 1.0)).exp() * (order * u).cosh();
    trapezoid_halving(integrand, upper, 1e-15)
}

/// `e^x K_α(x)` from the Hankel expansion, summed to its smallest term.
pub fn bessel_k_scaled_asymptotic(order: f64, x: f64) -> Result<f64> {
    check_args(order, x)?;
    let mu = 4.0 * order * order;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        let next = term * (mu - odd * odd) / (8.0 * k as f64 * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    Ok((PI / (2.0 * x)).sqrt() * sum)
}

/// Evaluates `K_α(x)`, recording which representation was used.
pub fn bessel_k_eval(order: f64, x: f64) -> Result<BesselEval> {
    check_args(order, x)?;
    let (scaled, method) = if x >= ASYMPTOTIC_SWITCH {
        (bessel_k_scaled_asymptotic(order, x)?, BesselMethod::AsymptoticSeries)
    } else {
        (bessel_k_scaled_integral(order, x)?, BesselMethod::IntegralRep)
    };
    Ok(BesselEval { order, argument: x, value: scaled * (-x).exp(), scaled, method })
}

/// Modified Bessel function of the second kind, `0 ≤ α ≤ 2`, `x > 0`.
pub fn bessel_k(order: f64, x: f64) -> Result<f64> {
    bessel_k_eval(order, x).map(|e| e.value)
}

/// `ln K_α(x)`, finite even when `K_α(x)` underflows.
pub fn ln_bessel_k(order: f64, x: f64) -> Result<f64> {
    bessel_k_eval(order, x).map(|e| e.scaled.ln() - x)
}

fn check_pair(alpha: f64, r: f64, s: f64) -> Result<()> {
    if !(alpha > 0.0 && r > 0.0 && s > 0.0) {
        return domain(format!("exp_pair_integral needs alpha, r, s > 0, got ({alpha}, {r}, {s})"));
    }
    Ok(())
}

/// `∫_0^∞ x^{α-1} e^{-rx - s/x} dx = 2 (s/r)^{α/2} K_α(2√(rs))`.
pub fn exp_pair_integral(alpha: f64, r: f64, s: f64) -> Result<f64> {
    ln_exp_pair_integral(alpha, r, s).map(f64::exp)
}

/// Natural logarithm of [`exp_pair_integral`].
pub fn ln_exp_pair_integral(alpha: f64, r: f64, s: f64) -> Result<f64> {
    check_pair(alpha, r, s)?;
    let z = 2.0 * (r * s).sqrt();
    Ok(std::f64::consts::LN_2 + 0.5 * alpha * (s / r).ln() + ln_bessel_k(alpha, z)?)
}

/// Trigamma function `ψ'(z)` for `z > 0`.
pub fn trigamma(z: f64) -> f64 {
    let mut z = z;
    let mut acc = 0.0;
    while z < 20.0 {
        acc += 1.0 / (z * z);
        z += 1.0;
    }
    let z2 = 1.0 / (z * z);
    acc + 1.0 / z + z2 / 2.0 + z2 / z * (1.0 / 6.0 - z2 * (1.0 / 30.0 - z2 * (1.0 / 42.0 - z2 / 30.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_to_infinity;

    fn k_half(x: f64) -> f64 {
        (PI / (2.0 * x)).sqrt() * (-x).exp()
    }

    #[test]
    fn half_order_closed_form() {
        assert!((bessel_k(0.5, 2.0).unwrap() - 0.119_938).abs() < 1e-6);
        assert!((bessel_k(0.5, 1.0).unwrap() - 0.461_069).abs() < 1e-6);
        for &x in &[1e-3, 0.1, 1.0, 5.0, 29.9, 30.0, 45.0, 200.0] {
            let rel: f64 = bessel_k(0.5, x).unwrap() / k_half(x) - 1.0;
            assert!(rel.abs() < 1e-12, "x={x} rel={rel}");
        }
    }

    #[test]
    fn step_halving_oracle() {
        // plain trapezoid on the raw integrand with successively halved steps
        let raw = |h: f64| {
            let f = |u: f64| (-5.0 * u.cosh()).exp() * (u / 3.0).cosh();
            let n = (6.0 / h) as usize;
            h * (0.5 * f(0.0) + (1..=n).map(|k| f(k as f64 * h)).sum::<f64>())
        };
        let coarse = raw(0.05);
        let fine = raw(0.025);
        assert!((coarse - fine).abs() < 1e-14);
        let v = bessel_k(1.0 / 3.0, 5.0).unwrap();
        assert!((v / fine - 1.0).abs() < 1e-10, "{v} {fine}");
    }

    #[test]
    fn methods_agree_on_overlap() {
        for &a in &[0.0, 1.0 / 3.0, 0.5, 1.0, 1.5, 2.0] {
            for i in 0..=15 {
                let x = 25.0 + i as f64;
                let s1 = bessel_k_scaled_integral(a, x).unwrap();
                let s2 = bessel_k_scaled_asymptotic(a, x).unwrap();
                assert!((s1 / s2 - 1.0).abs() < 1e-12, "a={a} x={x}");
            }
        }
    }

    #[test]
    fn seam_is_continuous() {
        for &a in &[0.0, 0.25, 0.5, 0.75, 1.0, 2.0] {
            let below = bessel_k(a, ASYMPTOTIC_SWITCH * (1.0 - 1e-12)).unwrap();
            let above = bessel_k_eval(a, ASYMPTOTIC_SWITCH).unwrap();
            assert_eq!(above.method, BesselMethod::AsymptoticSeries);
            assert!((below / above.value - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn small_argument_limit() {
        // K_α(x) ~ Γ(α)/2 (2/x)^α
        let x: f64 = 1e-8;
        let a = 0.75;
        let lead = statrs::function::gamma::gamma(a) / 2.0 * (2.0 / x).powf(a);
        assert!((bessel_k(a, x).unwrap() / lead - 1.0).abs() < 1e-4);
    }

    #[test]
    fn domain_errors() {
        assert!(bessel_k(0.5, 0.0).is_err());
        assert!(bessel_k(0.5, -1.0).is_err());
        assert!(bessel_k(2.5, 1.0).is_err());
        assert!(exp_pair_integral(0.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn exp_pair_examples() {
        let v = exp_pair_integral(0.5, 1.0, 1.0).unwrap();
        assert!((v - PI.sqrt() * (-2.0f64).exp()).abs() < 1e-12);
        assert!((v - 0.239_877).abs() < 2e-6);
        let r = 1.7;
        assert!((exp_pair_integral(0.3, r, r).unwrap() - 2.0 * bessel_k(0.3, 2.0 * r).unwrap()).abs() < 1e-14);
        let expected = 2.0 * (9.0f64 / 4.0).powf(0.25) * bessel_k(0.5, 12.0).unwrap();
        let direct = integrate_to_infinity(|x| x.powf(-0.5) * (-4.0 * x - 9.0 / x).exp(), 0.0, 1e-12, 0.0);
        assert!((exp_pair_integral(0.5, 4.0, 9.0).unwrap() / expected - 1.0).abs() < 1e-12);
        assert!((direct.value / expected - 1.0).abs() < 1e-9);
    }

    #[test]
    fn trigamma_values() {
        assert!((trigamma(1.0) - PI * PI / 6.0).abs() < 1e-13);
        assert!((trigamma(0.5) - PI * PI / 2.0).abs() < 1e-12);
        // ψ'(2) = π²/6 − 1
        assert!((trigamma(2.0) - (PI * PI / 6.0 - 1.0)).abs() < 1e-13);
    }
}
