//! Laplace transform of `ξ_{ρ(t)}` and the quantities derived from it.
//!
//! For a subordinator with exponents `φ` and `Φ = ∫φ`,
//!
//! ```text
//! E[e^{−qξ_{ρ(t)}}] = φ(q) ∫ e^{−Φ(q)x − t/x} V(dx),
//! ```
//!
//! where `V(dx) = x L(dx)` (see [`MeasureV`]). The canonical stable case is
//! a Bessel closed form. Everything else goes through `V̄` after an
//! integration by parts, centred on the saddle `x* = √(t/Φ(q))` with the
//! substitution `x = x* e^u`:
//!
//! ```text
//! E = φ(q) e^{−2s} ∫ V̄(x* e^u) · 2s sinh(u) · e^{−2s(cosh u − 1)} du,   s = √(Φ(q) t).
//! ```
//!
//! All values are carried in log form as well, since `e^{−2s}` underflows
//! long before the times of interest run out.

use crate::error::{domain, Error, Result};
use crate::inversion::{InversionMode, MeasureV};
use crate::levy::{gamma_fn, LevyTriplet};
use crate::quad::{integrate, integrate_to_infinity, trapezoid_refined};
use crate::special::{ln_bessel_k, ln_exp_pair_integral};
use std::cell::{Cell, RefCell};
use std::f64::consts::PI;

const QUAD_REL_TOL: f64 = 1e-11;
/// Stehfest output carries roundoff near 1e-9 relative, so sums built from
/// inverted values are refined only down to this level.
const INVERTED_REL_TOL: f64 = 1e-9;
const MAX_TRAPEZOID_NODES: usize = 2048;
/// Log of the integrand drop, relative to the saddle, at which the
/// `u`-range is truncated.
const TRUNCATION_LOG_DROP: f64 = 40.0;

/// A point `(q, t)` at which the transform is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceQuery {
    pub q: f64,
    pub t: f64,
}

impl LaplaceQuery {
    pub fn new(q: f64, t: f64) -> Result<Self> {
        if !(q > 0.0) || !q.is_finite() {
            return domain(format!("Laplace argument must be finite and > 0, got q = {q}"));
        }
        if !(t >= 0.0) || !t.is_finite() {
            return domain(format!("time must be finite and ≥ 0, got t = {t}"));
        }
        Ok(LaplaceQuery { q, t })
    }
}

/// `E[e^{−qξ_{ρ(t)}}; ξ_{ρ(t)} < ∞]` in linear and log form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceValue {
    pub value: f64,
    pub ln_value: f64,
    /// `P(ξ_{ρ(t)} = ∞)`; zero without killing.
    pub defect: f64,
    /// Largest relative Stehfest spread met while evaluating `V̄`.
    pub inversion_spread: f64,
}

impl LaplaceValue {
    fn from_ln(ln_value: f64, defect: f64, inversion_spread: f64) -> Self {
        LaplaceValue { value: ln_value.exp(), ln_value, defect, inversion_spread }
    }

    fn from_value(value: f64, defect: f64, inversion_spread: f64) -> Self {
        LaplaceValue { value, ln_value: value.ln(), defect, inversion_spread }
    }
}

/// Evaluates `V̄` inside a quadrature closure, remembering the first failure
/// and the worst inversion spread.
struct VBarProbe<'a> {
    measure: &'a MeasureV,
    failure: RefCell<Option<Error>>,
    spread: Cell<f64>,
}

impl<'a> VBarProbe<'a> {
    fn new(measure: &'a MeasureV) -> Self {
        VBarProbe { measure, failure: RefCell::new(None), spread: Cell::new(0.0) }
    }

    fn v_bar(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if !x.is_finite() {
            return f64::NAN;
        }
        match self.measure.v_bar_detailed(x) {
            Ok(r) => {
                if r.value != 0.0 {
                    self.spread.set(self.spread.get().max(r.error_estimate / r.value.abs()));
                }
                r.value
            }
            Err(e) => {
                self.failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    }

    fn increment(&self, lo: f64, hi: f64) -> f64 {
        if let InversionMode::StableClosedForm { .. } = self.measure.mode() {
            return match self.measure.v_bar_increment(lo.max(0.0), hi) {
                Ok(v) => v,
                Err(e) => {
                    self.failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            };
        }
        self.v_bar(hi) - self.v_bar(lo)
    }

    fn finish(self, value: f64, what: &str) -> Result<(f64, f64)> {
        if let Some(e) = self.failure.into_inner() {
            return Err(e);
        }
        if !value.is_finite() {
            return Err(Error::Evaluation(format!("{what}: non-finite integral")));
        }
        Ok((value, self.spread.get()))
    }
}

/// `P(ξ_{ρ(t)} = ∞) = 1 − κ ∫ e^{−t/x} V(dx)`; zero without killing.
pub fn killing_defect(measure: &MeasureV, t: f64) -> Result<f64> {
    let kappa = measure.triplet().killing;
    if kappa == 0.0 {
        return Ok(0.0);
    }
    if !(t >= 0.0) || !t.is_finite() {
        return domain(format!("time must be finite and ≥ 0, got t = {t}"));
    }
    let atom = measure.drift_atom();
    if t == 0.0 {
        return Ok(kappa * atom);
    }
    // ∫e^{−t/x}V(dx) = V̄(∞) − ∫_0^∞ V̄(t/w) e^{−w} dw and V̄(∞) = 1/κ − atom.
    let probe = VBarProbe::new(measure);
    let q = integrate_to_infinity(
        |w| if w == 0.0 { 0.0 } else { probe.v_bar(t / w) * (-w).exp() },
        0.0,
        INVERTED_REL_TOL,
        1e-13,
    );
    let (tail, _) = probe.finish(q.value, "killing defect")?;
    Ok((kappa * (atom + tail)).clamp(0.0, 1.0))
}

/// `u`-range `[−lo, hi]` outside which `2s sinh(u) e^{−2s(cosh u − 1)}`
/// times a linearly growing `V̄` is negligible.
fn saddle_range(s: f64) -> (f64, f64) {
    let drop = |u: f64| 2.0 * s * (u.cosh() - 1.0);
    let mut lo = 1e-3;
    while drop(lo) < TRUNCATION_LOG_DROP && lo < 60.0 {
        lo *= 1.25;
    }
    let mut hi = 1e-3;
    while drop(hi) - 2.0 * hi - (2.0 * s * hi.sinh()).max(1.0).ln() < TRUNCATION_LOG_DROP && hi < 60.0 {
        hi *= 1.25;
    }
    (lo, hi)
}

fn stable_ln_laplace(gamma: f64, triplet: &LevyTriplet, q: f64, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let alpha = gamma / (gamma + 1.0);
    let ln_c = -((gamma + 1.0).ln() + gamma_fn(alpha).ln());
    Ok(triplet.phi(q)?.ln() + ln_c + ln_exp_pair_integral(alpha, triplet.big_phi(q)?, t)?)
}

/// Exact `E[e^{−qξ_{ρ(t)}}; ξ_{ρ(t)} < ∞]`.
pub fn laplace_xi_rho(measure: &MeasureV, query: LaplaceQuery) -> Result<LaplaceValue> {
    let LaplaceQuery { q, t } = LaplaceQuery::new(query.q, query.t)?;
    let triplet = measure.triplet();
    let defect = killing_defect(measure, t)?;
    if let InversionMode::StableClosedForm { gamma } = measure.mode() {
        return Ok(LaplaceValue::from_ln(stable_ln_laplace(gamma, triplet, q, t)?, defect, 0.0));
    }
    let phi = triplet.phi(q)?;
    if t == 0.0 {
        return Ok(LaplaceValue::from_value(1.0 - phi * measure.drift_atom(), defect, 0.0));
    }
    let big = triplet.big_phi(q)?;
    let s = (big * t).sqrt();
    let x_star = (t / big).sqrt();
    let (lo, hi) = saddle_range(s);
    let probe = VBarProbe::new(measure);
    let kernel = |u: f64| {
        let w = 2.0 * s * u.sinh() * (-2.0 * s * (u.cosh() - 1.0)).exp();
        if w == 0.0 {
            0.0
        } else {
            probe.v_bar(x_star * u.exp()) * w
        }
    };
    let sum = trapezoid_refined(kernel, -lo, hi, INVERTED_REL_TOL, 0.0, MAX_TRAPEZOID_NODES);
    let (integral, spread) = probe.finish(sum.value, "laplace_xi_rho")?;
    if !(integral > 0.0) {
        return Err(Error::Evaluation(format!("laplace_xi_rho: integral {integral} not positive at q={q}, t={t}")));
    }
    Ok(LaplaceValue::from_ln(phi.ln() - 2.0 * s + integral.ln(), defect, spread))
}

/// The same transform through the Gaussian-kernel representation
///
/// `φ(q) e^{−2s} ∫_0^∞ 2u e^{−u²} (V̄(a+b) − V̄(a−b)) du`,
///
/// with `a = (u² + 2s)/(2Φ)`, `b = √(u⁴ + 4u²s)/(2Φ)`.
pub fn laplace_xi_rho_gaussian_form(measure: &MeasureV, query: LaplaceQuery) -> Result<LaplaceValue> {
    let LaplaceQuery { q, t } = LaplaceQuery::new(query.q, query.t)?;
    let triplet = measure.triplet();
    let defect = killing_defect(measure, t)?;
    let phi = triplet.phi(q)?;
    let big = triplet.big_phi(q)?;
    let s = (big * t).sqrt();
    let probe = VBarProbe::new(measure);
    let integrand = |u: f64| {
        if u == 0.0 {
            return 0.0;
        }
        let u2 = u * u;
        let a = (u2 + 2.0 * s) / (2.0 * big);
        let b = (u2 * u2 + 4.0 * u2 * s).sqrt() / (2.0 * big);
        let upper = a + b;
        // (a − b)(a + b) = t/Φ, so the lower end is formed without cancellation.
        let lower = t / (upper * big);
        2.0 * u * (-u2).exp() * probe.increment(lower, upper)
    };
    let total = match measure.mode() {
        InversionMode::StableClosedForm { .. } => {
            let mut total = 0.0;
            let mut left = 0.0;
            for right in [0.5, 1.5, 3.0, 9.0] {
                total += integrate(integrand, left, right, QUAD_REL_TOL, 0.0).value;
                left = right;
            }
            total
        }
        // The integrand is even in u, so the plain trapezoid sum is spectrally accurate.
        InversionMode::NumericInversion { .. } => {
            trapezoid_refined(integrand, 0.0, 9.0, INVERTED_REL_TOL, 0.0, MAX_TRAPEZOID_NODES).value
        }
    };
    let (integral, spread) = probe.finish(total, "laplace_xi_rho_gaussian_form")?;
    if !(integral > 0.0) {
        return Err(Error::Evaluation(format!(
            "laplace_xi_rho_gaussian_form: integral {integral} not positive at q={q}, t={t}"
        )));
    }
    Ok(LaplaceValue::from_ln(phi.ln() - 2.0 * s + integral.ln(), defect, spread))
}

/// Large-time equivalent `b(q) t^{1/4} Φ⁻¹(t^{−1/2}) e^{−2√(Φ(q)t)}` for a
/// subordinator whose exponent is regularly varying at zero with the
/// declared index `γ`.
pub fn asymptotic_laplace(triplet: &LevyTriplet, gamma: f64, query: LaplaceQuery) -> Result<LaplaceValue> {
    let LaplaceQuery { q, t } = LaplaceQuery::new(query.q, query.t)?;
    if !(gamma > 0.0 && gamma <= 1.0) {
        return domain(format!("declared index must lie in (0, 1], got {gamma}"));
    }
    if t == 0.0 {
        return Ok(LaplaceValue { value: 0.0, ln_value: f64::NEG_INFINITY, defect: 0.0, inversion_spread: 0.0 });
    }
    let alpha = gamma / (gamma + 1.0);
    let phi = triplet.phi(q)?;
    let big = triplet.big_phi(q)?;
    let ln_b = 0.5 * PI.ln() - (gamma + 1.0).ln() - gamma_fn(alpha).ln()
        + phi.ln()
        + (1.0 / (2.0 * (gamma + 1.0)) - 0.75) * big.ln();
    let ln_value = ln_b + 0.25 * t.ln() + triplet.phi_inverse(t.sqrt().recip())?.ln() - 2.0 * (big * t).sqrt();
    Ok(LaplaceValue::from_ln(ln_value, 0.0, 0.0))
}

/// `R(t) = E[e^{−qξ_{ρ(t)}}] / ((1 + t^{1/8}) e^{−2√(Φ(q)t)})` on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    pub q: f64,
    pub points: Vec<(f64, f64)>,
    pub max_ratio: f64,
    pub argmax_t: f64,
    /// Finite everywhere and non-increasing from the maximum onwards.
    pub bounded: bool,
    /// `1/4 − 1/(2(γ+1))` for the stable index, when known.
    pub variation_index: Option<f64>,
}

pub fn uniform_envelope(measure: &MeasureV, q: f64, t_grid: &[f64]) -> Result<EnvelopeReport> {
    if t_grid.is_empty() || t_grid.windows(2).any(|w| !(w[1] > w[0])) || t_grid.iter().any(|t| !t.is_finite()) {
        return domain("envelope grid must be finite, non-empty and strictly increasing");
    }
    let big = measure.triplet().big_phi(q)?;
    let points = t_grid
        .iter()
        .map(|&t| {
            let exact = laplace_xi_rho(measure, LaplaceQuery::new(q, t)?)?;
            let ln_env = t.powf(0.125).ln_1p() - 2.0 * (big * t).sqrt();
            Ok((t, (exact.ln_value - ln_env).exp()))
        })
        .collect::<Result<Vec<_>>>()?;
    let (argmax, &(argmax_t, max_ratio)) =
        points.iter().enumerate().max_by(|a, b| a.1 .1.total_cmp(&b.1 .1)).expect("non-empty grid");
    let bounded =
        points.iter().all(|p| p.1.is_finite()) && points[argmax..].windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-12));
    let variation_index = measure.triplet().canonical_stable_index().map(|g| 0.25 - 0.5 / (g + 1.0));
    Ok(EnvelopeReport { q, points, max_ratio, argmax_t, bounded, variation_index })
}

/// Laplace transform of the stationary law `D(γ)`,
/// `(2/Γ(α)) λ^{γ/2} K_α(2λ^{(γ+1)/2})` with `α = γ/(γ+1)`.
pub fn d_gamma_laplace(gamma: f64, lambda: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return domain(format!("D(γ) needs γ ∈ (0, 1], got {gamma}"));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return domain(format!("D(γ) Laplace argument must be finite and ≥ 0, got {lambda}"));
    }
    if lambda == 0.0 {
        return Ok(1.0);
    }
    let alpha = gamma / (gamma + 1.0);
    let ln = std::f64::consts::LN_2 - gamma_fn(alpha).ln()
        + 0.5 * gamma * lambda.ln()
        + ln_bessel_k(alpha, 2.0 * lambda.powf(0.5 * (gamma + 1.0)))?;
    Ok(ln.exp().min(1.0))
}

/// The stationary law `D(γ)` of `t^{−1/(γ+1)} ξ_{ρ(t)}` for the canonical
/// stable subordinator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DGammaLaw {
    pub gamma: f64,
}

impl DGammaLaw {
    pub fn new(gamma: f64) -> Result<Self> {
        d_gamma_laplace(gamma, 1.0)?;
        Ok(DGammaLaw { gamma })
    }

    pub fn laplace(&self, lambda: f64) -> Result<f64> {
        d_gamma_laplace(self.gamma, lambda)
    }
}

/// `E[Σ F_i(t)^{q+1}]` for the fragmentation whose tagged-fragment
/// subordinator has the given `V`.
pub fn fragmentation_moment(measure: &MeasureV, q: f64, t: f64) -> Result<f64> {
    laplace_xi_rho(measure, LaplaceQuery::new(q, t)?).map(|v| v.value)
}

/// Law-of-large-numbers centre and CLT variance of `ξ_{ρ(t)}/√t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CltConstants {
    /// `√(2m)`.
    pub center: f64,
    /// `√2 a / (3√m)`.
    pub variance: f64,
}

pub fn clt_constants(triplet: &LevyTriplet) -> Result<CltConstants> {
    let moments = triplet.moments();
    let (m, a) = (moments.mean, moments.second);
    if !m.is_finite() || !a.is_finite() {
        return Err(Error::Unsupported(format!("CLT needs finite m and a, got m = {m}, a = {a}")));
    }
    if !(m > 0.0) {
        return Err(Error::Unsupported("CLT needs m > 0".into()));
    }
    if triplet.killing > 0.0 {
        return Err(Error::Unsupported("CLT is not defined with killing".into()));
    }
    Ok(CltConstants { center: (2.0 * m).sqrt(), variance: 2f64.sqrt() * a / (3.0 * m.sqrt()) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::JumpLaw;
    use crate::quad::integrate_to_infinity;
    use approx::assert_relative_eq;

    fn stable(g: f64) -> MeasureV {
        MeasureV::new(LevyTriplet::stable(g).unwrap())
    }

    fn exp_measure(rate: f64, theta: f64) -> MeasureV {
        MeasureV::new(LevyTriplet::compound_poisson(rate, JumpLaw::Exponential { theta }).unwrap())
    }

    fn lap(m: &MeasureV, q: f64, t: f64) -> f64 {
        laplace_xi_rho(m, LaplaceQuery::new(q, t).unwrap()).unwrap().value
    }

    #[test]
    fn unit_index_is_deterministic() {
        let m = stable(1.0);
        for &q in &[0.5, 1.0, 2.0] {
            for &t in &[1.0, 10.0, 100.0] {
                let expected = (-2.0 * q * f64::sqrt(t)).exp();
                assert!((lap(&m, q, t) - expected).abs() < 1e-12);
                let g = laplace_xi_rho_gaussian_form(&m, LaplaceQuery::new(q, t).unwrap()).unwrap();
                assert_relative_eq!(g.value, expected, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn time_zero_gives_one_without_atom() {
        assert_eq!(lap(&stable(0.5), 1.3, 0.0), 1.0);
        // Finite jump rate: the first split happens at a strictly positive
        // time, so the value is E[e^{−qξ_{T_1}}] = 1 − φ(q)/λ.
        let m = exp_measure(1.0, 1.0);
        assert_relative_eq!(lap(&m, 2.0, 0.0), 1.0 / 3.0, max_relative = 1e-14);
        let g = laplace_xi_rho_gaussian_form(&m, LaplaceQuery::new(2.0, 0.0).unwrap()).unwrap();
        assert_relative_eq!(g.value, 1.0 / 3.0, max_relative = 1e-6);
    }

    #[test]
    fn stable_routes_agree() {
        for &g in &[0.5, 0.3, 0.8] {
            let m = stable(g);
            for &q in &[0.5, 1.0, 2.0] {
                for &t in &[0.01, 1.0, 10.0, 100.0] {
                    let query = LaplaceQuery::new(q, t).unwrap();
                    let a = laplace_xi_rho(&m, query).unwrap();
                    let b = laplace_xi_rho_gaussian_form(&m, query).unwrap();
                    assert_relative_eq!(a.value, b.value, max_relative = 1e-8);
                }
            }
        }
    }

    #[test]
    fn numeric_route_matches_closed_form_for_stable() {
        let closed = stable(0.5);
        let numeric =
            MeasureV::with_mode(LevyTriplet::stable(0.5).unwrap(), InversionMode::NumericInversion { order: 16 });
        for &(q, t) in &[(1.0, 1.0), (0.5, 10.0), (2.0, 0.3)] {
            assert_relative_eq!(lap(&numeric, q, t), lap(&closed, q, t), max_relative = 1e-5);
        }
    }

    #[test]
    fn exponential_routes_agree() {
        let m = exp_measure(1.0, 1.0);
        for &q in &[0.5, 1.0, 2.0] {
            for &t in &[0.1, 1.0, 5.0, 20.0] {
                let query = LaplaceQuery::new(q, t).unwrap();
                let a = laplace_xi_rho(&m, query).unwrap();
                let b = laplace_xi_rho_gaussian_form(&m, query).unwrap();
                assert!(a.value > 0.0 && a.value < 1.0);
                assert!((a.value - b.value).abs() < 1e-6, "q={q} t={t}: {} vs {}", a.value, b.value);
            }
        }
    }

    #[test]
    fn exponential_against_direct_density_quadrature() {
        // φ(q) = q/(q+1): Φ⁻¹ has no closed form, but V has a density that
        // can be read off by inverting g(s) = laplace_of_V(s) directly. Here
        // the oracle integrates the kernel against V̄ on the original x-axis.
        let m = exp_measure(1.0, 1.0);
        let (q, t) = (1.0, 5.0);
        let phi = 0.5;
        let big = 1.0 - 2f64.ln();
        let oracle = integrate_to_infinity(
            |x| {
                if x == 0.0 {
                    return 0.0;
                }
                let k = (-big * x - t / x).exp();
                m.v_bar(x).unwrap() * k * (big - t / (x * x))
            },
            0.0,
            1e-10,
            0.0,
        )
        .value;
        assert_relative_eq!(lap(&m, q, t), phi * oracle, max_relative = 1e-6);
    }

    #[test]
    fn stationarity_of_rescaled_stable() {
        let g = 0.5;
        let m = stable(g);
        for &lambda in &[0.5, 1.0, 2.0] {
            let reference = d_gamma_laplace(g, lambda).unwrap();
            for &t in &[1.0, 10.0, 100.0] {
                let q = lambda * f64::powf(t, -1.0 / (g + 1.0));
                assert!((lap(&m, q, t) - reference).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn d_gamma_special_values() {
        for &l in &[0.1, 1.0, 2.0, 7.0] {
            assert_relative_eq!(d_gamma_laplace(1.0, l).unwrap(), (-2.0 * l).exp(), max_relative = 1e-12);
        }
        assert!((d_gamma_laplace(0.5, 1e-12).unwrap() - 1.0).abs() < 1e-5);
        // u-integral form: (1/Γ(α)) λ^γ ∫ e^{−λ^{γ+1}u − 1/u} u^{−1/(γ+1)} du.
        let (g, l) = (0.5, 1.0);
        let alpha = g / (g + 1.0);
        let oracle = integrate_to_infinity(
            |u: f64| if u == 0.0 { 0.0 } else { (-l * u - 1.0 / u).exp() * u.powf(-1.0 / (g + 1.0)) },
            0.0,
            1e-12,
            0.0,
        )
        .value
            / gamma_fn(alpha);
        assert_relative_eq!(d_gamma_laplace(g, l).unwrap(), oracle, max_relative = 1e-9);
    }

    #[test]
    fn asymptotic_ratio() {
        let t1 = LevyTriplet::stable(1.0).unwrap();
        let m1 = stable(1.0);
        let q = LaplaceQuery::new(1.0, 1e4).unwrap();
        let r = laplace_xi_rho(&m1, q).unwrap().ln_value - asymptotic_laplace(&t1, 1.0, q).unwrap().ln_value;
        assert!(r.abs() < 1e-10);

        let th = LevyTriplet::stable(0.5).unwrap();
        let mh = stable(0.5);
        let mut previous = f64::INFINITY;
        for &t in &[1e3, 1e4, 1e5, 1e6] {
            let q = LaplaceQuery::new(1.0, t).unwrap();
            let ratio =
                (laplace_xi_rho(&mh, q).unwrap().ln_value - asymptotic_laplace(&th, 0.5, q).unwrap().ln_value).exp();
            assert!((ratio - 1.0).abs() < previous);
            previous = (ratio - 1.0).abs();
        }
        assert!(previous < 0.05);
    }

    #[test]
    fn envelope_is_bounded() {
        let grid: Vec<f64> = (0..=6).map(|k| 10f64.powi(k)).collect();
        for &g in &[0.5, 1.0] {
            let report = uniform_envelope(&stable(g), 1.0, &grid).unwrap();
            assert!(report.bounded);
            assert!(report.points.last().unwrap().1 <= report.max_ratio);
            assert!(report.variation_index.unwrap() < 0.125);
        }
    }

    #[test]
    fn clt_examples() {
        let c =
            clt_constants(&LevyTriplet::compound_poisson(1.0, JumpLaw::Exponential { theta: 1.0 }).unwrap()).unwrap();
        assert_relative_eq!(c.center, 2f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(c.variance, 0.942809041582063, max_relative = 1e-12);
        let c =
            clt_constants(&LevyTriplet::compound_poisson(2.0, JumpLaw::Exponential { theta: 2.0 }).unwrap()).unwrap();
        assert_relative_eq!(c.variance, 2f64.sqrt() / 3.0, max_relative = 1e-12);
        let c = clt_constants(&LevyTriplet::stable(1.0).unwrap()).unwrap();
        assert_eq!(c.variance, 0.0);
        assert!(matches!(clt_constants(&LevyTriplet::stable(0.5).unwrap()), Err(Error::Unsupported(_))));
    }

    #[test]
    fn killing_defect_is_reported() {
        let triplet = LevyTriplet::new(
            0.5,
            0.0,
            crate::levy::JumpMeasure::FiniteJump { rate: 1.0, law: JumpLaw::Exponential { theta: 1.0 } },
        )
        .unwrap();
        let m = MeasureV::new(triplet);
        let d0 = killing_defect(&m, 0.0).unwrap();
        assert_relative_eq!(d0, 0.5 / 1.5, max_relative = 1e-14);
        let mut last = d0;
        for &t in &[0.5, 2.0, 10.0] {
            let d = killing_defect(&m, t).unwrap();
            assert!(d > last && d < 1.0);
            last = d;
            let v = laplace_xi_rho(&m, LaplaceQuery::new(1.0, t).unwrap()).unwrap();
            assert!(v.value + d <= 1.0 + 1e-9);
            assert_eq!(v.defect, d);
        }
    }

    #[test]
    fn rejects_bad_queries() {
        assert!(LaplaceQuery::new(0.0, 1.0).is_err());
        assert!(LaplaceQuery::new(1.0, -1.0).is_err());
        assert!(d_gamma_laplace(1.5, 1.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn non_increasing_in_t_and_q(g in 0.2f64..1.0, q in 0.1f64..3.0, t in 0.0f64..50.0, dq in 0.01f64..1.0, dt in 0.01f64..10.0) {
                let m = stable(g);
                let base = lap(&m, q, t);
                prop_assert!(base > 0.0 && base <= 1.0);
                prop_assert!(lap(&m, q + dq, t) <= base * (1.0 + 1e-12));
                prop_assert!(lap(&m, q, t + dt) <= base * (1.0 + 1e-12));
            }

            #[test]
            fn exponential_is_monotone(q in 0.2f64..3.0, t in 0.1f64..20.0) {
                let m = exp_measure(1.0, 1.0);
                let base = lap(&m, q, t);
                prop_assert!(lap(&m, q, t * 1.5) <= base * (1.0 + 1e-6));
                prop_assert!(lap(&m, q * 1.5, t) <= base * (1.0 + 1e-6));
            }
        }
    }
}
