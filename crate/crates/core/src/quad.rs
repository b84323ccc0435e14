//! Adaptive Gauss–Kronrod (7/15) quadrature on finite and semi-infinite ranges.

use crate::error::{Error, Result};

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
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

impl Quadrature {
    /// Returns the value, or an evaluation error when it is not finite.
    pub fn finite(self, what: &str) -> Result<f64> {
        if self.value.is_finite() {
            Ok(self.value)
        } else {
            Err(Error::Evaluation(format!("{what}: non-finite integral")))
        }
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err)
}

/// Globally adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// Stops once the summed error estimate is below `max(abs_tol, rel_tol * |I|)`
/// or after `max_intervals` bisections.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Quadrature {
    integrate_with_limit(&f, a, b, rel_tol, abs_tol, 4000)
}

pub fn integrate_with_limit<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_intervals: usize,
) -> Quadrature {
    if a == b {
        return Quadrature { value: 0.0, error: 0.0, converged: true };
    }
    let (v, e) = gk15(f, a, b);
    let mut pieces = vec![(a, b, v, e)];
    let mut total = v;
    let mut total_err = e;
    loop {
        let target = abs_tol.max(rel_tol * total.abs());
        if total_err <= target || !total.is_finite() {
            return Quadrature { value: total, error: total_err, converged: total.is_finite() };
        }
        if pieces.len() >= max_intervals {
            return Quadrature { value: total, error: total_err, converged: false };
        }
        let (idx, _) = pieces.iter().enumerate().max_by(|x, y| x.1 .3.total_cmp(&y.1 .3)).expect("non-empty");
        let (pa, pb, pv, pe) = pieces.swap_remove(idx);
        let mid = 0.5 * (pa + pb);
        if mid <= pa || mid >= pb {
            // interval exhausted at machine precision
            return Quadrature { value: total, error: total_err, converged: false };
        }
        let (lv, le) = gk15(f, pa, mid);
        let (rv, re) = gk15(f, mid, pb);
        total += lv + rv - pv;
        total_err += le + re - pe;
        pieces.push((pa, mid, lv, le));
        pieces.push((mid, pb, rv, re));
        // refresh the running sums now and then to stop drift
        if pieces.len() % 64 == 0 {
            total = pieces.iter().map(|p| p.2).sum();
            total_err = pieces.iter().map(|p| p.3).sum();
        }
    }
}

/// Integrates `f` over `[a, ∞)` through the map `x = a + s / (1 - s)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, rel_tol: f64, abs_tol: f64) -> Quadrature {
    let g = |s: f64| {
        let one_minus = 1.0 - s;
        let x = a + s / one_minus;
        let v = f(x) / (one_minus * one_minus);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate_with_limit(&g, 0.0, 1.0, rel_tol, abs_tol, 4000)
}

/// Trapezoid rule with step halving for smooth integrands on `[0, ∞)` that decay at
/// least exponentially; spectrally accurate for analytic, even-extended integrands.
///
/// `f` must be negligible beyond `upper`.
pub fn trapezoid_halving<F: Fn(f64) -> f64>(f: F, upper: f64, rel_tol: f64) -> Result<f64> {
    let mut n = 16usize;
    let mut h = upper / n as f64;
    let mut sum = 0.5 * f(0.0) + (1..=n).map(|k| f(k as f64 * h)).sum::<f64>();
    let mut prev = sum * h;
    for _ in 0..16 {
        let odd: f64 = (0..n).map(|k| f((2 * k + 1) as f64 * h * 0.5)).sum();
        sum += odd;
        n *= 2;
        h *= 0.5;
        let cur = sum * h;
        if (cur - prev).abs() <= rel_tol * cur.abs() {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Evaluation("trapezoid rule did not converge".into()))
}

/// Composite trapezoid rule on `[a, b]` refined by halving until successive
/// sums agree to `max(abs_tol, rel_tol |I|)` or `max_nodes` is reached.
///
/// Suited to smooth integrands that are negligible at both ends, where the
/// rule converges geometrically and tolerates evaluation noise far better
/// than adaptive bisection does.
pub fn trapezoid_refined<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_nodes: usize,
) -> Quadrature {
    let mut n = 32usize;
    let mut h = (b - a) / n as f64;
    let mut sum = 0.5 * (f(a) + f(b)) + (1..n).map(|k| f(a + k as f64 * h)).sum::<f64>();
    let mut prev = sum * h;
    while 2 * n <= max_nodes {
        sum += (0..n).map(|k| f(a + (k as f64 + 0.5) * h)).sum::<f64>();
        n *= 2;
        h *= 0.5;
        let cur = sum * h;
        let error = (cur - prev).abs();
        if error <= abs_tol.max(rel_tol * cur.abs()) {
            return Quadrature { value: cur, error, converged: true };
        }
        prev = cur;
    }
    Quadrature { value: prev, error: f64::INFINITY, converged: false }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let q = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-14, 0.0);
        assert!((q.value - 8.0).abs() < 1e-13);
        assert!(q.converged);
    }

    #[test]
    fn endpoint_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2
        let q = integrate(|x| x.powf(-0.5), 0.0, 1.0, 1e-10, 0.0);
        assert!((q.value - 2.0).abs() < 1e-8, "{q:?}");
    }

    #[test]
    fn semi_infinite_gamma() {
        // ∫_0^∞ x^2 e^{-x} dx = 2
        let q = integrate_to_infinity(|x| x * x * (-x).exp(), 0.0, 1e-12, 0.0);
        assert!((q.value - 2.0).abs() < 1e-10, "{q:?}");
    }

    #[test]
    fn refined_trapezoid_on_bell() {
        let q = trapezoid_refined(|u| (-u * u).exp() * u.cosh(), -12.0, 12.0, 1e-13, 0.0, 1 << 12);
        assert!(q.converged);
        assert!((q.value - std::f64::consts::PI.sqrt() * 0.25f64.exp()).abs() < 1e-13);
    }

    #[test]
    fn trapezoid_gaussian() {
        let v = trapezoid_halving(|u| (-u * u).exp(), 10.0, 1e-14).unwrap();
        assert!((v - 0.5 * std::f64::consts::PI.sqrt()).abs() < 1e-14);
    }
}
