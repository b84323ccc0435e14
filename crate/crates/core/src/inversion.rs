//! The measure `V(dx) = x L(dx)`, where `L` is the Lévy measure of the
//! subordinator with Laplace exponent `Φ⁻¹`.
//!
//! In the canonical stable case `V̄` and `L̄` have closed forms; otherwise they
//! are recovered from their Laplace transforms by Gaver–Stehfest inversion,
//! which is stable here because every transform involved is completely
//! monotone.

use crate::error::{domain, Result};
use crate::levy::{gamma_fn, LevyTriplet};
use std::collections::HashMap;
use std::f64::consts::LN_2;
use std::sync::RwLock;

pub const DEFAULT_STEHFEST_ORDER: usize = 14;
/// Relative spread between successive Stehfest orders above which a result is
/// flagged as low confidence.
pub const LOW_CONFIDENCE_SPREAD: f64 = 1e-4;
const CACHE_LIMIT: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InversionMode {
    StableClosedForm { gamma: f64 },
    NumericInversion { order: usize },
}

/// A value recovered by inversion together with its reliability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inverted {
    pub value: f64,
    /// `|f_N − f_{N−2}|` for numeric inversion, zero for closed forms.
    pub error_estimate: f64,
    pub low_confidence: bool,
}

impl Inverted {
    fn exact(value: f64) -> Self {
        Inverted { value, error_estimate: 0.0, low_confidence: false }
    }
}

/// Gaver–Stehfest weights for an even order `n`.
pub fn stehfest_weights(n: usize) -> Vec<f64> {
    assert!(n >= 2 && n.is_multiple_of(2) && n <= 30, "Stehfest order must be even and at most 30");
    let fact = |k: usize| (1..=k).fold(1.0f64, |acc, i| acc * i as f64);
    let half = n / 2;
    (1..=n)
        .map(|k| {
            let lo = k.div_ceil(2);
            let hi = k.min(half);
            let sum: f64 = (lo..=hi)
                .map(|j| {
                    (j as f64).powi(half as i32) * fact(2 * j)
                        / (fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k))
                })
                .sum();
            if (k + half).is_multiple_of(2) {
                sum
            } else {
                -sum
            }
        })
        .collect()
}

/// Gaver–Stehfest inversion of `transform` at `x > 0`, with the order-`n`
/// against order-`n−2` spread as error estimate.
pub fn stehfest_invert<F: Fn(f64) -> Result<f64>>(transform: F, x: f64, order: usize) -> Result<Inverted> {
    let step = LN_2 / x;
    let values: Vec<f64> = (1..=order).map(|k| transform(k as f64 * step)).collect::<Result<_>>()?;
    let eval = |n: usize| -> f64 {
        let w = stehfest_weights(n);
        step * w.iter().zip(&values).map(|(w, v)| w * v).sum::<f64>()
    };
    let value = eval(order);
    let coarse = eval(order - 2);
    let error_estimate = (value - coarse).abs();
    let low_confidence = !value.is_finite() || error_estimate > LOW_CONFIDENCE_SPREAD * value.abs().max(1e-300);
    Ok(Inverted { value, error_estimate, low_confidence })
}

/// `V(dx) = x L(dx)` for a given subordinator.
#[derive(Debug)]
pub struct MeasureV {
    triplet: LevyTriplet,
    mode: InversionMode,
    drift_atom: f64,
    cache: RwLock<HashMap<u64, f64>>,
}

impl Clone for MeasureV {
    fn clone(&self) -> Self {
        MeasureV {
            triplet: self.triplet.clone(),
            mode: self.mode,
            drift_atom: self.drift_atom,
            cache: RwLock::default(),
        }
    }
}

impl MeasureV {
    /// Closed form for the canonical stable subordinator, Stehfest otherwise.
    pub fn new(triplet: LevyTriplet) -> Self {
        let mode = match triplet.canonical_stable_index() {
            Some(gamma) => InversionMode::StableClosedForm { gamma },
            None => InversionMode::NumericInversion { order: DEFAULT_STEHFEST_ORDER },
        };
        Self::with_mode(triplet, mode)
    }

    /// Forces a mode; a closed form requested for a non-stable triplet falls
    /// back to numeric inversion.
    pub fn with_mode(triplet: LevyTriplet, mode: InversionMode) -> Self {
        let mode = match (mode, triplet.canonical_stable_index()) {
            (InversionMode::StableClosedForm { .. }, Some(gamma)) => InversionMode::StableClosedForm { gamma },
            (InversionMode::StableClosedForm { .. }, None) => {
                InversionMode::NumericInversion { order: DEFAULT_STEHFEST_ORDER }
            }
            (m, _) => m,
        };
        let drift_atom = triplet.drift_atom();
        MeasureV { triplet, mode, drift_atom, cache: RwLock::default() }
    }

    pub fn triplet(&self) -> &LevyTriplet {
        &self.triplet
    }

    pub fn mode(&self) -> InversionMode {
        self.mode
    }

    /// Atom of the renewal measure of `σ∘ξ` at zero.
    pub fn drift_atom(&self) -> f64 {
        self.drift_atom
    }

    /// `∫ e^{−qx} V(dx) = 1/φ(Φ⁻¹(q)) − drift_atom`.
    pub fn laplace_of_v(&self, q: f64) -> Result<f64> {
        if !(q > 0.0) || !q.is_finite() {
            return domain(format!("laplace_of_V needs q > 0, got {q}"));
        }
        if let Some(v) = self.cache.read().expect("cache lock").get(&q.to_bits()) {
            return Ok(*v);
        }
        let root = self.triplet.phi_inverse(q)?;
        let value = 1.0 / self.triplet.phi(root)? - self.drift_atom;
        let mut cache = self.cache.write().expect("cache lock");
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(q.to_bits(), value);
        Ok(value)
    }

    fn check_x(x: f64) -> Result<()> {
        if x > 0.0 && x.is_finite() {
            Ok(())
        } else {
            domain(format!("measure evaluation needs finite x > 0, got {x}"))
        }
    }

    /// `V̄(x) = V([0, x])` with its inversion diagnostics.
    pub fn v_bar_detailed(&self, x: f64) -> Result<Inverted> {
        Self::check_x(x)?;
        match self.mode {
            InversionMode::StableClosedForm { gamma } => {
                let p = gamma / (gamma + 1.0);
                Ok(Inverted::exact(x.powf(p) / (gamma * gamma_fn(p))))
            }
            InversionMode::NumericInversion { order } => {
                stehfest_invert(|s| self.laplace_of_v(s).map(|v| v / s), x, order)
            }
        }
    }

    pub fn v_bar(&self, x: f64) -> Result<f64> {
        if x == 0.0 {
            return Ok(0.0);
        }
        self.v_bar_detailed(x).map(|r| r.value)
    }

    /// `L̄(x) = L(x, ∞)` with its inversion diagnostics.
    pub fn l_bar_detailed(&self, x: f64) -> Result<Inverted> {
        Self::check_x(x)?;
        match self.mode {
            InversionMode::StableClosedForm { gamma } => {
                let p = gamma / (gamma + 1.0);
                Ok(Inverted::exact(x.powf(-1.0 / (gamma + 1.0)) / gamma_fn(p)))
            }
            InversionMode::NumericInversion { order } => {
                let atom = self.drift_atom;
                stehfest_invert(|s| self.triplet.phi_inverse(s).map(|r| (r - atom * s) / s), x, order)
            }
        }
    }

    pub fn l_bar(&self, x: f64) -> Result<f64> {
        self.l_bar_detailed(x).map(|r| r.value)
    }

    /// `V̄(hi) − V̄(lo)` for `0 ≤ lo ≤ hi`, free of cancellation in the closed form.
    pub fn v_bar_increment(&self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo >= 0.0 && hi >= lo) {
            return domain(format!("v_bar_increment needs 0 ≤ lo ≤ hi, got ({lo}, {hi})"));
        }
        if hi == lo {
            return Ok(0.0);
        }
        match self.mode {
            InversionMode::StableClosedForm { gamma } if lo > 0.0 => {
                let p = gamma / (gamma + 1.0);
                Ok(lo.powf(p) * (p * ((hi - lo) / lo).ln_1p()).exp_m1() / (gamma * gamma_fn(p)))
            }
            _ => Ok(self.v_bar(hi)? - self.v_bar(lo)?),
        }
    }

    /// `(V̄(x+Δ) − V̄(x)) / (Δ L̄(x))`, which tends to `1/(1+γ)` under regular
    /// variation of index `γ`.
    pub fn increment_ratio(&self, x: f64, delta: f64) -> Result<f64> {
        Self::check_x(x)?;
        if !(delta > 0.0) {
            return domain(format!("increment needs Δ > 0, got {delta}"));
        }
        Ok(self.v_bar_increment(x, x + delta)? / (delta * self.l_bar(x)?))
    }

    /// Total mass `V̄(∞) = 1/κ − drift_atom`, finite iff `κ > 0`.
    pub fn total_mass(&self) -> f64 {
        if self.triplet.killing > 0.0 {
            1.0 / self.triplet.killing - self.drift_atom
        } else {
            f64::INFINITY
        }
    }

    /// `L(0, ∞)` as `lim_{q→∞} (Φ⁻¹(q) − drift_atom·q)`; `None` when the limit
    /// does not settle (infinite mass).
    pub fn l_total_mass_limit(&self) -> Result<Option<f64>> {
        if self.drift_atom == 0.0 {
            return Ok(None);
        }
        let mut prev = f64::NAN;
        for k in 2..=12 {
            let q = 10f64.powi(k);
            let d = self.triplet.phi_inverse(q)? - self.drift_atom * q;
            if (d - prev).abs() <= 1e-6 * d.abs() {
                return Ok(Some(d));
            }
            prev = d;
        }
        Ok(None)
    }

    /// Closed form `(1/(κ + π(0,∞))) ∫ x⁻¹ π(dx)` of the same quantity.
    pub fn l_total_mass_closed(&self) -> Option<f64> {
        if self.drift_atom == 0.0 {
            return None;
        }
        let v = self.drift_atom * self.triplet.inverse_jump_integral();
        v.is_finite().then_some(v)
    }
}
