//! Subordinators described by their Lévy triplet `(κ, c, π)`.
//!
//! The Laplace exponent is `φ(q) = κ + cq + ∫(1 − e^{−qx}) π(dx)` and its
//! primitive `Φ(q) = ∫_0^q φ(s) ds` is the Laplace exponent of the associated
//! spectrally negative process.

use crate::error::{domain, Error, Result};
use crate::quad::{integrate, integrate_to_infinity};
use crate::special::trigamma;
use rand::Rng;
use rand_distr::{Beta, Distribution, Exp1};
use statrs::function::gamma::{digamma, gamma, ln_gamma};

const PHI_REL_TOL: f64 = 1e-12;

/// Probability law of a single jump of a compound Poisson subordinator.
#[derive(Debug, Clone, PartialEq)]
pub enum JumpLaw {
    /// Exponential with rate `theta` (mean `1/theta`).
    Exponential { theta: f64 },
    /// Point mass at `x0`.
    Constant { x0: f64 },
    /// Uniform on `(0, b)`.
    Uniform { b: f64 },
    /// Finitely many atoms `(location, weight)`; weights are normalised.
    Atoms(Vec<(f64, f64)>),
    /// Law of `−ln S` for `S ~ Beta(alpha, beta)`.
    NegLogBeta { alpha: f64, beta: f64 },
}

impl JumpLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            JumpLaw::Exponential { theta } => *theta > 0.0 && theta.is_finite(),
            JumpLaw::Constant { x0 } => *x0 > 0.0 && x0.is_finite(),
            JumpLaw::Uniform { b } => *b > 0.0 && b.is_finite(),
            JumpLaw::Atoms(atoms) => {
                !atoms.is_empty()
                    && atoms.iter().all(|&(x, w)| x > 0.0 && x.is_finite() && w >= 0.0)
                    && atoms.iter().map(|a| a.1).sum::<f64>() > 0.0
            }
            JumpLaw::NegLogBeta { alpha, beta } => *alpha > 0.0 && *beta > 0.0,
        };
        if ok {
            Ok(())
        } else {
            domain(format!("invalid jump law {self:?}"))
        }
    }

    fn atoms_normalised(atoms: &[(f64, f64)]) -> impl Iterator<Item = (f64, f64)> + '_ {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        atoms.iter().map(move |&(x, w)| (x, w / total))
    }

    /// `1 − E[e^{−qJ}]`.
    pub fn one_minus_laplace(&self, q: f64) -> f64 {
        match self {
            JumpLaw::Exponential { theta } => q / (theta + q),
            JumpLaw::Constant { x0 } => -(-q * x0).exp_m1(),
            JumpLaw::Uniform { b } => {
                let z = q * b;
                if z < 1e-4 {
                    z / 2.0 - z * z / 6.0 + z * z * z / 24.0
                } else {
                    1.0 + (-z).exp_m1() / z
                }
            }
            JumpLaw::Atoms(atoms) => Self::atoms_normalised(atoms).map(|(x, w)| -w * (-q * x).exp_m1()).sum(),
            JumpLaw::NegLogBeta { alpha, beta } => {
                let ln_ratio =
                    ln_gamma(alpha + q) + ln_gamma(alpha + beta) - ln_gamma(*alpha) - ln_gamma(alpha + beta + q);
                -ln_ratio.exp_m1()
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            JumpLaw::Exponential { theta } => 1.0 / theta,
            JumpLaw::Constant { x0 } => *x0,
            JumpLaw::Uniform { b } => b / 2.0,
            JumpLaw::Atoms(atoms) => Self::atoms_normalised(atoms).map(|(x, w)| w * x).sum(),
            JumpLaw::NegLogBeta { alpha, beta } => digamma(alpha + beta) - digamma(*alpha),
        }
    }

    pub fn second_moment(&self) -> f64 {
        match self {
            JumpLaw::Exponential { theta } => 2.0 / (theta * theta),
            JumpLaw::Constant { x0 } => x0 * x0,
            JumpLaw::Uniform { b } => b * b / 3.0,
            JumpLaw::Atoms(atoms) => Self::atoms_normalised(atoms).map(|(x, w)| w * x * x).sum(),
            JumpLaw::NegLogBeta { alpha, beta } => {
                let mean = self.mean();
                trigamma(*alpha) - trigamma(alpha + beta) + mean * mean
            }
        }
    }

    /// `E[1/J]`, infinite when the law charges a neighbourhood of zero too heavily.
    pub fn inverse_moment(&self) -> f64 {
        match self {
            JumpLaw::Exponential { .. } | JumpLaw::Uniform { .. } => f64::INFINITY,
            JumpLaw::Constant { x0 } => 1.0 / x0,
            JumpLaw::Atoms(atoms) => Self::atoms_normalised(atoms).map(|(x, w)| w / x).sum(),
            JumpLaw::NegLogBeta { alpha, beta } => {
                // density of −ln S near 0 behaves like x^{β−1}
                if *beta <= 1.0 {
                    return f64::INFINITY;
                }
                let ln_b = ln_gamma(*alpha) + ln_gamma(*beta) - ln_gamma(alpha + beta);
                let density = |x: f64| ((-alpha * x) + (beta - 1.0) * (-(-x).exp_m1()).ln() - ln_b).exp() / x;
                integrate_to_infinity(density, 0.0, 1e-12, 0.0).value
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            JumpLaw::Exponential { theta } => {
                let e: f64 = Exp1.sample(rng);
                e / theta
            }
            JumpLaw::Constant { x0 } => *x0,
            JumpLaw::Uniform { b } => b * (1.0 - rng.random::<f64>()),
            JumpLaw::Atoms(atoms) => {
                let total: f64 = atoms.iter().map(|a| a.1).sum();
                let mut u = rng.random::<f64>() * total;
                for &(x, w) in atoms {
                    if u < w {
                        return x;
                    }
                    u -= w;
                }
                atoms.last().expect("validated non-empty").0
            }
            JumpLaw::NegLogBeta { alpha, beta } => {
                let s: f64 = Beta::new(*alpha, *beta).expect("validated parameters").sample(rng);
                -s.max(f64::MIN_POSITIVE).ln()
            }
        }
    }
}

/// Lévy density given on a grid, log-log interpolated, with power-law ends.
///
/// Below the first node the density is `d_0 (x/x_0)^head_exponent`, above the
/// last node `d_n (x/x_n)^tail_exponent`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDensity {
    xs: Vec<f64>,
    densities: Vec<f64>,
    head_exponent: f64,
    tail_exponent: f64,
}

impl TabulatedDensity {
    pub fn new(points: Vec<(f64, f64)>, head_exponent: f64, tail_exponent: f64) -> Result<Self> {
        if points.len() < 2 {
            return domain("tabulated density needs at least two nodes");
        }
        let (xs, densities): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
        if xs[0] <= 0.0 || xs.windows(2).any(|w| !(w[1] > w[0])) {
            return domain("tabulated density nodes must be positive and strictly increasing");
        }
        if densities.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return domain("tabulated density values must be positive and finite");
        }
        if !(head_exponent > -2.0) || !(tail_exponent < -1.0) {
            return domain(format!("power-law ends ({head_exponent}, {tail_exponent}) violate ∫(1∧x)π(dx) < ∞"));
        }
        let tab = TabulatedDensity { xs, densities, head_exponent, tail_exponent };
        let mass = tab.integrate(|x| x.min(1.0))?;
        if !mass.is_finite() {
            return Err(Error::Evaluation("∫(1∧x)π(dx) is not finite".into()));
        }
        Ok(tab)
    }

    pub fn density(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.densities[0] * (x / self.xs[0]).powf(self.head_exponent);
        }
        if x >= self.xs[n - 1] {
            return self.densities[n - 1] * (x / self.xs[n - 1]).powf(self.tail_exponent);
        }
        let i = self.xs.partition_point(|&v| v <= x) - 1;
        let slope = (self.densities[i + 1] / self.densities[i]).ln() / (self.xs[i + 1] / self.xs[i]).ln();
        self.densities[i] * (x / self.xs[i]).powf(slope)
    }

    /// `∫ g(x) π(dx)` over `(0, ∞)`.
    pub fn integrate<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        let n = self.xs.len();
        let (x0, xn) = (self.xs[0], self.xs[n - 1]);
        // head: x = x0 e^{-s}
        let head = integrate_to_infinity(
            |s| {
                let x = x0 * (-s).exp();
                g(x) * self.density(x) * x
            },
            0.0,
            PHI_REL_TOL,
            0.0,
        );
        let mut total = head.value;
        for w in self.xs.windows(2) {
            total += integrate(|x| g(x) * self.density(x), w[0], w[1], PHI_REL_TOL, 0.0).value;
        }
        // tail: x = xn e^{s}
        let tail = integrate_to_infinity(
            |s| {
                let x = xn * s.exp();
                g(x) * self.density(x) * x
            },
            0.0,
            PHI_REL_TOL,
            0.0,
        );
        total += tail.value;
        if total.is_finite() {
            Ok(total)
        } else {
            Err(Error::Evaluation("tabulated Lévy integral is not finite".into()))
        }
    }

    pub fn total_mass(&self) -> f64 {
        if self.head_exponent <= -1.0 {
            f64::INFINITY
        } else {
            self.integrate(|_| 1.0).unwrap_or(f64::INFINITY)
        }
    }

    fn moment(&self, k: i32) -> f64 {
        if self.tail_exponent + k as f64 >= -1.0 {
            return f64::INFINITY;
        }
        self.integrate(|x| x.powi(k)).unwrap_or(f64::INFINITY)
    }
}

/// Jump (Lévy) measure of a subordinator.
#[derive(Debug, Clone, PartialEq)]
pub enum JumpMeasure {
    /// Compound Poisson: `rate` jumps per unit time, sizes drawn from `law`.
    FiniteJump {
        rate: f64,
        law: JumpLaw,
    },
    /// Stable tail normalised so that `φ(q) = (γ+1) q^γ`. The boundary case
    /// `γ = 1` is the pure drift `φ(q) = 2q`.
    StableTail {
        gamma: f64,
    },
    TabulatedDensity(TabulatedDensity),
}

/// Killing rate, drift and jump measure of a subordinator.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyTriplet {
    pub killing: f64,
    pub drift: f64,
    pub jumps: JumpMeasure,
}

/// First two jump moments plus a regular-variation diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    /// `m = c + ∫x π(dx)`, possibly infinite.
    pub mean: f64,
    /// `a = ∫x² π(dx)`, possibly infinite.
    pub second: f64,
    /// Log-log slope of `φ` near zero; diagnostic only.
    pub gamma_est: f64,
}

impl LevyTriplet {
    pub fn new(killing: f64, drift: f64, jumps: JumpMeasure) -> Result<Self> {
        if !(killing >= 0.0) || !killing.is_finite() || !(drift >= 0.0) || !drift.is_finite() {
            return domain(format!("killing and drift must be finite and ≥ 0, got ({killing}, {drift})"));
        }
        match &jumps {
            JumpMeasure::FiniteJump { rate, law } => {
                if !(*rate > 0.0) || !rate.is_finite() {
                    return domain(format!("jump rate must be positive, got {rate}"));
                }
                law.validate()?;
            }
            JumpMeasure::StableTail { gamma } => {
                if !(*gamma > 0.0 && *gamma <= 1.0) {
                    return domain(format!("stable index must lie in (0, 1], got {gamma}"));
                }
            }
            JumpMeasure::TabulatedDensity(_) => {}
        }
        Ok(LevyTriplet { killing, drift, jumps })
    }

    /// Canonical stable subordinator, `φ(q) = (γ+1) q^γ`.
    pub fn stable(gamma: f64) -> Result<Self> {
        Self::new(0.0, 0.0, JumpMeasure::StableTail { gamma })
    }

    /// Compound Poisson subordinator without drift or killing.
    pub fn compound_poisson(rate: f64, law: JumpLaw) -> Result<Self> {
        Self::new(0.0, 0.0, JumpMeasure::FiniteJump { rate, law })
    }

    /// Stable index when this is exactly the canonical stable subordinator.
    pub fn canonical_stable_index(&self) -> Option<f64> {
        match self.jumps {
            JumpMeasure::StableTail { gamma } if self.killing == 0.0 && self.drift == 0.0 => Some(gamma),
            _ => None,
        }
    }

    /// Drift including the `γ = 1` stable boundary case.
    pub fn effective_drift(&self) -> f64 {
        match self.jumps {
            JumpMeasure::StableTail { gamma: 1.0 } => self.drift + 2.0,
            _ => self.drift,
        }
    }

    /// `π(0, ∞)`.
    pub fn jump_rate(&self) -> f64 {
        match &self.jumps {
            JumpMeasure::FiniteJump { rate, .. } => *rate,
            JumpMeasure::StableTail { gamma } if *gamma == 1.0 => 0.0,
            JumpMeasure::StableTail { .. } => f64::INFINITY,
            JumpMeasure::TabulatedDensity(t) => t.total_mass(),
        }
    }

    /// Drift of the subordinator with exponent `Φ⁻¹`: `𝟙{c=0}/(κ + π(0,∞))`.
    pub fn drift_atom(&self) -> f64 {
        if self.effective_drift() > 0.0 {
            return 0.0;
        }
        let denom = self.killing + self.jump_rate();
        if denom.is_finite() {
            1.0 / denom
        } else {
            0.0
        }
    }

    fn check_q(q: f64) -> Result<()> {
        if q >= 0.0 && q.is_finite() {
            Ok(())
        } else {
            domain(format!("Laplace argument must be finite and ≥ 0, got {q}"))
        }
    }

    /// Laplace exponent `φ(q) = κ + cq + ∫(1 − e^{−qx})π(dx)`.
    pub fn phi(&self, q: f64) -> Result<f64> {
        Self::check_q(q)?;
        let jump_part = match &self.jumps {
            JumpMeasure::FiniteJump { rate, law } => rate * law.one_minus_laplace(q),
            JumpMeasure::StableTail { gamma } => (gamma + 1.0) * q.powf(*gamma),
            JumpMeasure::TabulatedDensity(t) => {
                if q == 0.0 {
                    0.0
                } else {
                    t.integrate(|x| -(-q * x).exp_m1())?
                }
            }
        };
        let v = self.killing + self.drift * q + jump_part;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation(format!("φ({q}) is not finite")))
        }
    }

    /// `Φ(q) = ∫_0^q φ(s) ds`.
    pub fn big_phi(&self, q: f64) -> Result<f64> {
        Self::check_q(q)?;
        if q == 0.0 {
            return Ok(0.0);
        }
        let base = self.killing * q + 0.5 * self.drift * q * q;
        let jump_part = match &self.jumps {
            JumpMeasure::FiniteJump { rate, law } => match law {
                JumpLaw::Exponential { theta } => rate * theta * x_minus_log1p(q / theta),
                JumpLaw::Constant { x0 } => rate * exp_remainder(q * x0) / x0,
                JumpLaw::Atoms(atoms) => {
                    rate * JumpLaw::atoms_normalised(atoms).map(|(x, w)| w * exp_remainder(q * x) / x).sum::<f64>()
                }
                JumpLaw::Uniform { .. } | JumpLaw::NegLogBeta { .. } => self.integrate_phi_jumps(q)?,
            },
            JumpMeasure::StableTail { gamma } => q.powf(gamma + 1.0),
            JumpMeasure::TabulatedDensity(_) => self.integrate_phi_jumps(q)?,
        };
        let v = base + jump_part;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation(format!("Φ({q}) is not finite")))
        }
    }

    fn integrate_phi_jumps(&self, q: f64) -> Result<f64> {
        let (k, c) = (self.killing, self.drift);
        let f = |s: f64| self.phi(s).map(|v| v - k - c * s).unwrap_or(f64::NAN);
        integrate(f, 0.0, q, PHI_REL_TOL, 0.0).finite("Φ quadrature")
    }

    /// Inverse of `Φ` by bracketing and Newton iteration from the right,
    /// falling back to bisection when an iterate leaves the bracket.
    pub fn phi_inverse(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) || !y.is_finite() {
            return domain(format!("Φ⁻¹ needs a finite y ≥ 0, got {y}"));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        if let Some(gamma) = self.canonical_stable_index() {
            return Ok(y.powf(1.0 / (gamma + 1.0)));
        }
        let mut hi = 1.0f64;
        let mut lo = 0.0f64;
        let mut f_hi = self.big_phi(hi)?;
        let mut doublings = 0;
        while f_hi < y {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > 1100 || !hi.is_finite() {
                return Err(Error::Range(format!("Φ⁻¹({y}): no bracket below f64::MAX")));
            }
            f_hi = self.big_phi(hi)?;
        }
        while lo == 0.0 && hi > 1e-300 {
            let half = 0.5 * hi;
            let f_half = self.big_phi(half)?;
            if f_half >= y {
                hi = half;
                f_hi = f_half;
            } else {
                lo = half;
            }
        }
        let mut q = hi;
        let mut fq = f_hi;
        for _ in 0..200 {
            let resid = fq - y;
            if resid == 0.0 {
                return Ok(q);
            }
            if resid > 0.0 {
                hi = q;
            } else {
                lo = q;
            }
            let slope = self.phi(q)?;
            let mut next = if slope > 0.0 { q - resid / slope } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - q).abs() <= 2.0 * f64::EPSILON * q || hi - lo <= 4.0 * f64::EPSILON * hi {
                return Ok(next);
            }
            q = next;
            fq = self.big_phi(q)?;
        }
        if (fq - y).abs() <= 1e-12 * y.max(1.0) {
            Ok(q)
        } else {
            Err(Error::Range(format!("Φ⁻¹({y}) did not converge")))
        }
    }

    /// Jump moments `m` and `a`, and the slope diagnostic `γ_est`.
    pub fn moments(&self) -> Moments {
        let (jump_mean, second) = match &self.jumps {
            JumpMeasure::FiniteJump { rate, law } => (rate * law.mean(), rate * law.second_moment()),
            JumpMeasure::StableTail { gamma } if *gamma == 1.0 => (2.0, 0.0),
            JumpMeasure::StableTail { .. } => (f64::INFINITY, f64::INFINITY),
            JumpMeasure::TabulatedDensity(t) => (t.moment(1), t.moment(2)),
        };
        Moments { mean: self.drift + jump_mean, second, gamma_est: self.gamma_estimate() }
    }

    fn gamma_estimate(&self) -> f64 {
        let (q1, q2) = (1e-7, 1e-8);
        match (self.phi(q1), self.phi(q2)) {
            (Ok(a), Ok(b)) if a > 0.0 && b > 0.0 => (a.ln() - b.ln()) / (q1.ln() - q2.ln()),
            _ => f64::NAN,
        }
    }

    /// `∫ x^{-1} π(dx)`; finite iff `L(0, ∞) < ∞` when `c = 0`.
    pub fn inverse_jump_integral(&self) -> f64 {
        match &self.jumps {
            JumpMeasure::FiniteJump { rate, law } => rate * law.inverse_moment(),
            JumpMeasure::StableTail { gamma } if *gamma == 1.0 => 0.0,
            JumpMeasure::StableTail { .. } => f64::INFINITY,
            JumpMeasure::TabulatedDensity(t) => {
                if t.head_exponent <= 0.0 {
                    f64::INFINITY
                } else {
                    t.integrate(|x| 1.0 / x).unwrap_or(f64::INFINITY)
                }
            }
        }
    }
}

/// `x − ln(1 + x)` without cancellation for small `x`.
fn x_minus_log1p(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let mut term = x * x / 2.0;
        let mut sum = 0.0;
        let mut k = 2.0;
        // Σ_{k≥2} (−1)^k x^k / k
        for _ in 0..12 {
            sum += term;
            term *= -x * k / (k + 1.0);
            k += 1.0;
        }
        sum
    } else {
        x - x.ln_1p()
    }
}

/// `y − 1 + e^{−y}` without cancellation for small `y`.
fn exp_remainder(y: f64) -> f64 {
    if y < 1e-3 {
        let mut term = y * y / 2.0;
        let mut sum = 0.0;
        let mut k = 2.0;
        for _ in 0..12 {
            sum += term;
            term *= -y / (k + 1.0);
            k += 1.0;
        }
        sum
    } else {
        y + (-y).exp_m1()
    }
}

/// Constant of the stable Lévy density, `π(dx) = C x^{−1−γ} dx`.
pub fn stable_levy_constant(gamma: f64) -> f64 {
    (gamma + 1.0) * gamma / gamma_fn(1.0 - gamma)
}

pub(crate) fn gamma_fn(x: f64) -> f64 {
    gamma(x)
}
