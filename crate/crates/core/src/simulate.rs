//! Monte Carlo for `ξ_{ρ(t)}`.
//!
//! A path is stored as a drift plus a jump skeleton, so `ξ` is piecewise
//! linear and `A(s) = ∫_0^s ξ_u du` piecewise quadratic; `ρ(t)` is then the
//! root of a quadratic on the segment where `A` crosses `t`.
//!
//! Compound Poisson paths are exact. The stable subordinator with `γ < 1`
//! has infinitely many jumps, so its paths keep the jumps above a cutoff `ε`
//! and replace the rest by their mean `Cε^{1−γ}/(1−γ)`, which enters as extra
//! drift. The cutoff is chosen from a target jump count; the neglected
//! fluctuation has standard deviation of order `ε^{1−γ/2}` per unit time.
//! Exact stable increments on a fixed grid are available separately through
//! [`sample_positive_stable`].

use crate::error::{domain, Error, Result};
use crate::levy::{stable_levy_constant, JumpLaw, JumpMeasure, LevyTriplet};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Expected number of skeleton jumps of a stable path over its first horizon.
pub const STABLE_SKELETON_JUMPS: f64 = 1000.0;
/// Number of horizon doublings tried before giving up.
pub const MAX_EXTENSIONS: usize = 20;

/// Reproducible random stream identified by `(seed, index)`.
///
/// Streams with different indices are independent ChaCha8 streams under the
/// same key, so a batch of paths is reproducible bit-for-bit however it is
/// scheduled across threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub index: u64,
}

impl RngStream {
    pub fn new(seed: u64, index: u64) -> Self {
        RngStream { seed, index }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.index);
        rng
    }
}

/// Uniform on the open interval `(0, 1)`.
pub(crate) fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Draw of `ξ_h` for the canonical stable subordinator `E[e^{−qξ_h}] = e^{−h(γ+1)q^γ}`,
/// by the Kanter / Chambers–Mallows–Stuck representation.
pub fn sample_positive_stable<R: Rng + ?Sized>(gamma: f64, h: f64, rng: &mut R) -> f64 {
    if gamma == 1.0 {
        return 2.0 * h;
    }
    let u = PI * open_unit(rng);
    let e: f64 = Exp1.sample(rng);
    let s = (gamma * u).sin() / u.sin().powf(1.0 / gamma) * ((1.0 - gamma) * u).sin().powf((1.0 - gamma) / gamma)
        / e.powf((1.0 - gamma) / gamma);
    ((gamma + 1.0) * h).powf(1.0 / gamma) * s
}

#[derive(Debug, Clone, PartialEq)]
enum JumpSizes {
    Law(JumpLaw),
    /// Stable jumps above `eps`: `P(J > x) = (x/eps)^{−γ}`.
    Pareto {
        eps: f64,
        gamma: f64,
    },
}

impl JumpSizes {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            JumpSizes::Law(law) => law.sample(rng),
            JumpSizes::Pareto { eps, gamma } => eps * open_unit(rng).powf(-1.0 / gamma),
        }
    }
}

/// Result of inverting `A` at level `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoSample {
    /// `ρ(t)`, or the killing epoch when the path dies first.
    pub rho: f64,
    /// `ξ_{ρ(t)}` on the open segment containing `ρ(t)`; `+∞` if killed.
    pub xi: f64,
}

impl RhoSample {
    pub fn is_killed(&self) -> bool {
        self.xi.is_infinite()
    }
}

/// Sampled subordinator path on `[0, horizon]`.
///
/// Knot `k` sits at `times[k]` (`times[0] = 0`); on `[times[k], times[k+1])`
/// the path is `values[k] + c (s − times[k])` and `A` starts from `integrals[k]`.
#[derive(Debug, Clone)]
pub struct SubordinatorPath {
    drift: f64,
    times: Vec<f64>,
    values: Vec<f64>,
    integrals: Vec<f64>,
    horizon: f64,
    killing_time: f64,
    rate: f64,
    sizes: Option<JumpSizes>,
    next_arrival: f64,
    rng: ChaCha8Rng,
}

impl SubordinatorPath {
    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Killing epoch, `+∞` without killing.
    pub fn killing_time(&self) -> f64 {
        self.killing_time
    }

    /// Jump epochs and sizes on `[0, horizon]`.
    pub fn jumps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (1..self.times.len()).map(move |k| {
            let before = self.values[k - 1] + self.drift * (self.times[k] - self.times[k - 1]);
            (self.times[k], self.values[k] - before)
        })
    }

    pub fn jump_count(&self) -> usize {
        self.times.len() - 1
    }

    fn segment(&self, s: f64) -> usize {
        self.times.partition_point(|&x| x <= s).saturating_sub(1)
    }

    /// `ξ_s` (right-continuous); `+∞` after the killing epoch.
    pub fn value_at(&self, s: f64) -> f64 {
        if s >= self.killing_time {
            return f64::INFINITY;
        }
        let k = self.segment(s);
        self.values[k] + self.drift * (s - self.times[k])
    }

    /// `A(s) = ∫_0^s ξ_u du`.
    pub fn integral_at(&self, s: f64) -> f64 {
        if s > self.killing_time {
            return f64::INFINITY;
        }
        let k = self.segment(s);
        let d = s - self.times[k];
        self.integrals[k] + self.values[k] * d + 0.5 * self.drift * d * d
    }

    /// Appends jumps until the horizon reaches `new_horizon`.
    pub fn extend_to(&mut self, new_horizon: f64) {
        if new_horizon <= self.horizon {
            return;
        }
        let end = new_horizon.min(self.killing_time);
        if let Some(sizes) = &self.sizes {
            while self.next_arrival <= end {
                let tau = self.next_arrival;
                let k = self.times.len() - 1;
                let d = tau - self.times[k];
                let before = self.values[k] + self.drift * d;
                let integral = self.integrals[k] + self.values[k] * d + 0.5 * self.drift * d * d;
                let jump = sizes.sample(&mut self.rng);
                self.times.push(tau);
                self.values.push(before + jump);
                self.integrals.push(integral);
                let gap: f64 = Exp1.sample(&mut self.rng);
                self.next_arrival = tau + gap / self.rate;
            }
        }
        self.horizon = new_horizon;
    }

    /// Exact `ρ(t) = inf{u : A(u) > t}` and the value of `ξ` there,
    /// extending the path as needed.
    pub fn rho_invert(&mut self, t: f64) -> Result<RhoSample> {
        if !(t >= 0.0) || !t.is_finite() {
            return domain(format!("rho_invert needs finite t ≥ 0, got {t}"));
        }
        let mut extensions = 0;
        loop {
            let end = self.horizon.min(self.killing_time);
            if self.integral_at(end) > t || (end == self.killing_time) {
                break;
            }
            if extensions == MAX_EXTENSIONS {
                return Err(Error::Simulation(format!(
                    "A(horizon) = {} still ≤ t = {t} after {MAX_EXTENSIONS} extensions",
                    self.integral_at(end)
                )));
            }
            self.extend_to(2.0 * self.horizon);
            extensions += 1;
        }
        if self.integral_at(self.horizon.min(self.killing_time)) <= t {
            return Ok(RhoSample { rho: self.killing_time, xi: f64::INFINITY });
        }
        // First knot with A > t; the crossing lies on the segment before it,
        // or on the last (open-ended) segment.
        let j = self.integrals.partition_point(|&a| a <= t);
        let k = j - 1;
        let (xk, r) = (self.values[k], t - self.integrals[k]);
        let d = if r == 0.0 { 0.0 } else { 2.0 * r / (xk + (xk * xk + 2.0 * self.drift * r).sqrt()) };
        let rho = self.times[k] + d;
        if rho >= self.killing_time {
            return Ok(RhoSample { rho: self.killing_time, xi: f64::INFINITY });
        }
        Ok(RhoSample { rho, xi: xk + self.drift * d })
    }
}

/// Jump mechanism of the simulated path: rate, size law and extra drift.
fn jump_plan(triplet: &LevyTriplet, horizon: f64) -> Result<(f64, Option<JumpSizes>, f64)> {
    match &triplet.jumps {
        JumpMeasure::FiniteJump { rate, law } => Ok((*rate, Some(JumpSizes::Law(law.clone())), 0.0)),
        JumpMeasure::StableTail { gamma } if *gamma == 1.0 => Ok((0.0, None, 2.0)),
        JumpMeasure::StableTail { gamma } => {
            let c = stable_levy_constant(*gamma);
            let rate = STABLE_SKELETON_JUMPS / horizon;
            let eps = (c / (gamma * rate)).powf(1.0 / gamma);
            let compensation = c * eps.powf(1.0 - gamma) / (1.0 - gamma);
            Ok((rate, Some(JumpSizes::Pareto { eps, gamma: *gamma }), compensation))
        }
        JumpMeasure::TabulatedDensity(_) => {
            Err(Error::Unsupported("path sampling is implemented for compound Poisson and stable jumps".into()))
        }
    }
}

/// Samples a path on `[0, horizon]`.
pub fn sample_path(triplet: &LevyTriplet, horizon: f64, stream: RngStream) -> Result<SubordinatorPath> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return domain(format!("horizon must be finite and > 0, got {horizon}"));
    }
    let (rate, sizes, extra_drift) = jump_plan(triplet, horizon)?;
    let mut rng = stream.rng();
    let killing_time = if triplet.killing > 0.0 {
        let e: f64 = Exp1.sample(&mut rng);
        e / triplet.killing
    } else {
        f64::INFINITY
    };
    let next_arrival = if sizes.is_some() {
        let e: f64 = Exp1.sample(&mut rng);
        e / rate
    } else {
        f64::INFINITY
    };
    let mut path = SubordinatorPath {
        drift: triplet.drift + extra_drift,
        times: vec![0.0],
        values: vec![0.0],
        integrals: vec![0.0],
        horizon: 0.0,
        killing_time,
        rate,
        sizes,
        next_arrival,
        rng,
    };
    path.extend_to(horizon);
    Ok(path)
}

/// Rough scale of `ρ(t)`, used as first horizon.
fn initial_horizon(triplet: &LevyTriplet, t: f64) -> f64 {
    let scale = match triplet.jumps {
        JumpMeasure::StableTail { gamma } => t.max(1e-12).powf(gamma / (gamma + 1.0)),
        _ => {
            let m = triplet.moments().mean;
            let wait = 1.0 / triplet.jump_rate().max(1e-300);
            (if m.is_finite() && m > 0.0 { (2.0 * t / m).sqrt() } else { 1.0 }) + wait
        }
    };
    2.0 * scale.max(1e-9)
}

/// One draw of `(ρ(t), ξ_{ρ(t)})`.
pub fn xi_rho_sample(triplet: &LevyTriplet, t: f64, stream: RngStream) -> Result<RhoSample> {
    let mut path = sample_path(triplet, initial_horizon(triplet, t), stream)?;
    path.rho_invert(t)
}

/// Draws `ξ_{ρ(t)}` at every `t` in `times` from the same path, for `n`
/// independent paths with streams `(seed, 0..n)`. Row `i` belongs to path `i`.
pub fn xi_rho_batch(triplet: &LevyTriplet, times: &[f64], n: usize, seed: u64) -> Result<Vec<Vec<RhoSample>>> {
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let horizon = initial_horizon(triplet, t_max);
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut path = sample_path(triplet, horizon, RngStream::new(seed, i))?;
            times.iter().map(|&t| path.rho_invert(t)).collect()
        })
        .collect()
}

/// `n` draws of `t^{−1/(γ+1)} ξ_{ρ(t)}` for the canonical stable subordinator,
/// whose law is `D(γ)` for every `t > 0`.
pub fn sample_d_gamma(gamma: f64, t: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    if !(t > 0.0) {
        return domain(format!("sample_d_gamma needs t > 0, got {t}"));
    }
    let triplet = LevyTriplet::stable(gamma)?;
    let scale = t.powf(-1.0 / (gamma + 1.0));
    let rows = xi_rho_batch(&triplet, &[t], n, seed)?;
    Ok(rows.into_iter().map(|r| r[0].xi * scale).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn exp1() -> LevyTriplet {
        LevyTriplet::compound_poisson(1.0, JumpLaw::Exponential { theta: 1.0 }).unwrap()
    }

    #[test]
    fn unit_stable_is_deterministic() {
        let mut path = sample_path(&LevyTriplet::stable(1.0).unwrap(), 1.0, RngStream::new(1, 0)).unwrap();
        assert_eq!(path.jump_count(), 0);
        for &t in &[0.5, 4.0, 100.0] {
            let r = path.rho_invert(t).unwrap();
            assert_relative_eq!(r.rho, f64::sqrt(t), max_relative = 1e-14);
            assert_relative_eq!(r.xi, 2.0 * f64::sqrt(t), max_relative = 1e-14);
        }
        assert!(sample_d_gamma(1.0, 3.0, 10, 5).unwrap().iter().all(|&x| (x - 2.0).abs() < 1e-12));
    }

    #[test]
    fn single_jump_inversion() {
        let law = JumpLaw::Constant { x0: 3.0 };
        let triplet = LevyTriplet::compound_poisson(1e-9, law).unwrap();
        let mut path = sample_path(&triplet, 1.0, RngStream::new(0, 0)).unwrap();
        // Hand-build a one-jump skeleton.
        path.times = vec![0.0, 0.7];
        path.values = vec![0.0, 3.0];
        path.integrals = vec![0.0, 0.0];
        path.next_arrival = f64::INFINITY;
        let r = path.rho_invert(0.6).unwrap();
        assert_relative_eq!(r.rho, 0.7 + 0.2, max_relative = 1e-14);
        assert_eq!(r.xi, 3.0);
        let r0 = path.rho_invert(0.0).unwrap();
        assert_eq!((r0.rho, r0.xi), (0.7, 3.0));
    }

    #[test]
    fn streams_are_reproducible() {
        let a = xi_rho_batch(&exp1(), &[1.0, 5.0], 64, 42).unwrap();
        let b = xi_rho_batch(&exp1(), &[1.0, 5.0], 64, 42).unwrap();
        assert_eq!(a, b);
        let c = xi_rho_batch(&exp1(), &[1.0, 5.0], 64, 43).unwrap();
        assert_ne!(a, c);
        let single = xi_rho_sample(&exp1(), 5.0, RngStream::new(42, 7)).unwrap();
        assert!(single.xi > 0.0);
    }

    #[test]
    fn inversion_is_exact_and_extends() {
        let triplet = exp1();
        for i in 0..200 {
            let mut path = sample_path(&triplet, 0.01, RngStream::new(9, i)).unwrap();
            for &t in &[0.0, 1.0, 50.0, 1e4] {
                let r = path.rho_invert(t).unwrap();
                assert!((path.integral_at(r.rho) - t).abs() <= 1e-12 * t.max(1e-300) || t == 0.0);
                assert!(r.xi >= path.value_at(r.rho - 1e-12 * r.rho.max(1.0)));
            }
        }
    }

    #[test]
    fn killed_paths_report_infinity() {
        let triplet =
            LevyTriplet::new(0.5, 0.0, JumpMeasure::FiniteJump { rate: 1.0, law: JumpLaw::Exponential { theta: 1.0 } })
                .unwrap();
        let n = 20_000;
        let mut total = 0.0;
        let mut killed = 0;
        for i in 0..n {
            let mut path = sample_path(&triplet, 1.0, RngStream::new(3, i)).unwrap();
            total += path.killing_time();
            if path.rho_invert(2.0).unwrap().is_killed() {
                killed += 1;
            }
        }
        let mean = total / n as f64;
        assert!((mean - 2.0).abs() < 3.0 * 2.0 / (n as f64).sqrt());
        assert!(killed > 0 && killed < n);
    }

    #[test]
    fn compound_poisson_counts() {
        let n = 20_000u64;
        let (mut count, mut value) = (0.0, 0.0);
        for i in 0..n {
            let p = sample_path(&exp1(), 10.0, RngStream::new(11, i)).unwrap();
            count += p.jump_count() as f64;
            value += p.value_at(10.0);
        }
        let se = (10.0 / n as f64).sqrt();
        assert!((count / n as f64 - 10.0).abs() < 3.0 * se);
        // Var ξ_10 = 10 · E[J²] = 20
        assert!((value / n as f64 - 10.0).abs() < 3.0 * (20.0 / n as f64).sqrt());
    }

    #[test]
    fn stable_sampler_laplace() {
        let mut rng = RngStream::new(5, 0).rng();
        let (g, h, q) = (0.5, 0.7, 1.3);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| (-q * sample_positive_stable(g, h, &mut rng)).exp()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let expected = (-h * (g + 1.0) * f64::powf(q, g)).exp();
        assert!((mean - expected).abs() < 3.0 * (var / n as f64).sqrt());
    }

    #[test]
    fn stable_skeleton_laplace() {
        let g = 0.5;
        let triplet = LevyTriplet::stable(g).unwrap();
        let (s, q) = (1.0, 0.8);
        let n = 20_000;
        let xs: Vec<f64> =
            (0..n).map(|i| (-q * sample_path(&triplet, s, RngStream::new(21, i)).unwrap().value_at(s)).exp()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let expected = (-s * (g + 1.0) * f64::powf(q, g)).exp();
        assert!((mean - expected).abs() < 3.0 * (var / n as f64).sqrt());
    }
}
