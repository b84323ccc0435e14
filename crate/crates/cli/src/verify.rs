//! The acceptance matrix.
//!
//! Each criterion reports PASS or FAIL with the measured quantities. The
//! `fast` tier holds the closed-form checks and small simulations; `full`
//! adds the large Monte Carlo and disk criteria.

use crate::config::Suite;
use fraglog_core::disk::{perimeter_deficit, simulate_disk_path, DiskPathConfig, HitAngles};
use fraglog_core::fragmentation::{dislocation_to_triplet, DislocationMeasure, FragmentationConfig, FragmentationSim};
use fraglog_core::quad::integrate_to_infinity;
use fraglog_core::simulate::{sample_d_gamma, xi_rho_batch};
use fraglog_core::special::exp_pair_integral;
use fraglog_core::stats::{ks_two_sample, linear_fit, MeanEstimate};
use fraglog_core::transform::{
    asymptotic_laplace, d_gamma_laplace, fragmentation_moment, laplace_xi_rho, laplace_xi_rho_gaussian_form,
    uniform_envelope, LaplaceQuery,
};
use fraglog_core::{JumpLaw, LevyTriplet, MeasureV, Result, RngStream};
use rayon::prelude::*;
use std::f64::consts::{PI, SQRT_2, TAU};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tier {
    Fast,
    Full,
}

pub struct Outcome {
    pub passed: bool,
    pub detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    pub tier: Tier,
    check: fn(u64) -> Result<Outcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub id: u8,
    pub title: &'static str,
    pub tier: Tier,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tier = match self.tier {
            Tier::Fast => "fast",
            Tier::Full => "full",
        };
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "criterion {:>2} [{tier}] {status} {}: {}", self.id, self.title, self.detail)
    }
}

impl Criterion {
    pub fn in_suite(&self, suite: Suite) -> bool {
        suite == Suite::Full || self.tier == Tier::Fast
    }

    pub fn run(&self, seed: u64) -> CriterionReport {
        let (passed, detail) = match (self.check)(seed) {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        CriterionReport { id: self.id, title: self.title, tier: self.tier, passed, detail }
    }
}

pub fn criteria() -> Vec<Criterion> {
    use Tier::*;
    vec![
        Criterion { id: 1, title: "gamma = 1 exactness", tier: Fast, check: gamma_one_exactness },
        Criterion { id: 2, title: "Bessel identity", tier: Fast, check: bessel_identity },
        Criterion { id: 3, title: "route equivalence", tier: Fast, check: route_equivalence },
        Criterion { id: 4, title: "stationarity of D(gamma)", tier: Full, check: stationarity },
        Criterion { id: 5, title: "Monte Carlo vs transform", tier: Full, check: mc_vs_formula },
        Criterion { id: 6, title: "asymptotic ratio", tier: Fast, check: asymptotic_ratio },
        Criterion { id: 7, title: "uniform envelope", tier: Fast, check: envelope },
        Criterion { id: 8, title: "law of large numbers and CLT", tier: Full, check: slln_clt },
        Criterion { id: 9, title: "fragmentation moment identity", tier: Full, check: moment_identity },
        Criterion { id: 10, title: "tagged fragment law", tier: Fast, check: tagged_fragment },
        Criterion { id: 11, title: "empirical-measure concentration", tier: Full, check: concentration },
        Criterion { id: 12, title: "disk decay shape", tier: Full, check: disk_decay },
        Criterion { id: 13, title: "deficit geometry", tier: Fast, check: deficit_geometry },
        Criterion { id: 14, title: "increment asymptotics", tier: Fast, check: increment_asymptotics },
    ]
}

pub fn run_suite(suite: Suite, seed: u64) -> Vec<CriterionReport> {
    criteria().iter().filter(|c| c.in_suite(suite)).map(|c| c.run(seed)).collect()
}

fn sci(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.4e}")).collect::<Vec<_>>().join(", ")
}

fn exponential_one() -> Result<LevyTriplet> {
    LevyTriplet::compound_poisson(1.0, JumpLaw::Exponential { theta: 1.0 })
}

fn gamma_one_exactness(_: u64) -> Result<Outcome> {
    let measure = MeasureV::new(LevyTriplet::stable(1.0)?);
    let mut worst = 0.0f64;
    for q in [0.5, 1.0, 2.0] {
        for t in [1.0, 10.0, 100.0] {
            let v = laplace_xi_rho(&measure, LaplaceQuery::new(q, t)?)?.value;
            worst = worst.max((v - (-2.0 * q * f64::sqrt(t)).exp()).abs());
        }
    }
    outcome(worst < 1e-8, format!("max |error| = {worst:.3e} (limit 1e-8)"))
}

fn bessel_identity(_: u64) -> Result<Outcome> {
    let mut worst = 0.0f64;
    for alpha in [1.0 / 3.0, 0.5, 2.0 / 3.0] {
        for r in [0.5, 2.0] {
            for s in [0.5, 2.0] {
                let direct = integrate_to_infinity(|x| x.powf(alpha - 1.0) * (-r * x - s / x).exp(), 0.0, 1e-13, 0.0)
                    .finite("Bessel integral")?;
                let closed = exp_pair_integral(alpha, r, s)?;
                worst = worst.max(((direct - closed) / closed).abs());
            }
        }
    }
    outcome(worst < 1e-8, format!("max relative error = {worst:.3e} (limit 1e-8)"))
}

fn route_equivalence(_: u64) -> Result<Outcome> {
    let mut worst = 0.0f64;
    for gamma in [0.5, 1.0] {
        let measure = MeasureV::new(LevyTriplet::stable(gamma)?);
        for q in [0.5, 1.0, 2.0] {
            for t in [1.0, 10.0, 100.0] {
                let query = LaplaceQuery::new(q, t)?;
                let a = laplace_xi_rho(&measure, query)?.value;
                let b = laplace_xi_rho_gaussian_form(&measure, query)?.value;
                worst = worst.max((a - b).abs());
            }
        }
    }
    outcome(worst <= 1e-6, format!("max |difference| = {worst:.3e} (limit 1e-6)"))
}

fn stationarity(seed: u64) -> Result<Outcome> {
    let gamma = 0.5;
    let measure = MeasureV::new(LevyTriplet::stable(gamma)?);
    let mut spread = 0.0f64;
    for lambda in [0.5, 1.0, 2.0] {
        let target = d_gamma_laplace(gamma, lambda)?;
        for t in [1.0, 10.0, 100.0] {
            let q = lambda * f64::powf(t, -1.0 / (gamma + 1.0));
            let v = laplace_xi_rho(&measure, LaplaceQuery::new(q, t)?)?.value;
            spread = spread.max((v - target).abs());
        }
    }
    let n = 100_000;
    let a = sample_d_gamma(gamma, 1.0, n, seed)?;
    let b = sample_d_gamma(gamma, 16.0, n, seed.wrapping_add(1))?;
    let ks = ks_two_sample(&a, &b, 0.001)?;
    outcome(
        spread < 1e-7 && ks.passes(),
        format!(
            "analytic spread = {spread:.3e} (limit 1e-7); KS t=1 vs t=16 = {:.4} (critical {:.4})",
            ks.statistic, ks.critical
        ),
    )
}

fn mc_vs_formula(seed: u64) -> Result<Outcome> {
    let triplet = exponential_one()?;
    let measure = MeasureV::new(triplet.clone());
    let ts = [1.0, 5.0, 20.0];
    let rows = xi_rho_batch(&triplet, &ts, 1_000_000, seed)?;
    let mut worst = 0.0f64;
    for q in [1.0, 2.0] {
        for (k, &t) in ts.iter().enumerate() {
            let xs: Vec<f64> = rows.iter().map(|r| (-q * r[k].xi).exp()).collect();
            let exact = laplace_xi_rho(&measure, LaplaceQuery::new(q, t)?)?.value;
            worst = worst.max(MeanEstimate::from_samples(&xs)?.z_score(exact));
        }
    }
    outcome(worst < 3.0, format!("max |z| = {worst:.3} over 6 (q, t) points, 1e6 paths"))
}

fn asymptotic_ratio(_: u64) -> Result<Outcome> {
    let triplet = LevyTriplet::stable(0.5)?;
    let measure = MeasureV::new(triplet.clone());
    let mut gaps = Vec::new();
    for t in [1e3, 1e4, 1e5, 1e6] {
        let query = LaplaceQuery::new(1.0, t)?;
        let exact = laplace_xi_rho(&measure, query)?;
        let asym = asymptotic_laplace(&triplet, 0.5, query)?;
        gaps.push(((exact.ln_value - asym.ln_value).exp() - 1.0).abs());
    }
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
    let last = gaps[gaps.len() - 1];
    outcome(monotone && last < 0.05, format!("|ratio - 1| at t = 1e3..1e6: [{}]; monotone = {monotone}", sci(&gaps)))
}

fn envelope(_: u64) -> Result<Outcome> {
    let grid: Vec<f64> = (0..=12).map(|k| 10f64.powf(k as f64 / 2.0)).collect();
    let mut passed = true;
    let mut detail = Vec::new();
    for gamma in [0.5, 1.0] {
        let report = uniform_envelope(&MeasureV::new(LevyTriplet::stable(gamma)?), 1.0, &grid)?;
        let last = report.points[report.points.len() - 1].1;
        passed &= report.bounded && last <= report.max_ratio;
        detail.push(format!(
            "gamma = {gamma}: max R = {:.4} at t = {:.0e}, R(1e6) = {last:.4}",
            report.max_ratio, report.argmax_t
        ));
    }
    outcome(passed, detail.join("; "))
}

fn slln_clt(seed: u64) -> Result<Outcome> {
    let t: f64 = 1e4;
    let rows = xi_rho_batch(&exponential_one()?, &[t], 100_000, seed)?;
    let ys: Vec<f64> = rows.iter().map(|r| t.powf(0.25) * (r[0].xi / t.sqrt() - SQRT_2)).collect();
    let est = MeanEstimate::from_samples(&ys)?;
    let target_var = 2.0 * SQRT_2 / 3.0;
    let z = est.z_score(0.0);
    let rel_var = (est.variance / target_var - 1.0).abs();
    outcome(
        z < 3.0 && rel_var < 0.05,
        format!(
            "mean = {:.4} ± {:.4} (|z| = {z:.2}, limit 3); variance = {:.4} vs {target_var:.6} (rel {rel_var:.4}, limit 0.05)",
            est.mean, est.std_error, est.variance
        ),
    )
}

fn moment_identity(seed: u64) -> Result<Outcome> {
    let nu = DislocationMeasure::binary_uniform(1.0)?;
    let measure = MeasureV::new(dislocation_to_triplet(&nu, 0.0)?);
    let config = FragmentationConfig { mass_floor: 1e-8, ..FragmentationConfig::default() };
    let (qs, ts) = ([1.0, 2.0], [1.0, 5.0, 10.0]);
    let rows: Vec<Vec<f64>> = (0..100_000u64)
        .into_par_iter()
        .map(|i| {
            let mut sim = FragmentationSim::new(&nu, config, RngStream::new(seed, i))?;
            let mut row = Vec::new();
            for t in ts {
                sim.advance_to(t)?;
                row.extend(qs.map(|q| sim.moment_sum(q)));
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for (k, &t) in ts.iter().enumerate() {
        for (j, &q) in qs.iter().enumerate() {
            let xs: Vec<f64> = rows.iter().map(|r| r[k * qs.len() + j]).collect();
            worst = worst.max(MeanEstimate::from_samples(&xs)?.z_score(fragmentation_moment(&measure, q, t)?));
        }
    }
    outcome(worst < 3.0, format!("max |z| = {worst:.3} over 6 (q, t) points, 1e5 runs"))
}

fn tagged_fragment(seed: u64) -> Result<Outcome> {
    let (n, t) = (10_000usize, 5.0);
    let nu = DislocationMeasure::binary_uniform(1.0)?;
    let picks: Vec<f64> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut sim = FragmentationSim::new(&nu, FragmentationConfig::default(), RngStream::new(seed, i))?;
            sim.advance_to(t)?;
            Ok(sim.size_biased_pick().unwrap_or(1.0))
        })
        .collect::<Result<_>>()?;
    let triplet = dislocation_to_triplet(&nu, 0.0)?;
    let masses: Vec<f64> =
        xi_rho_batch(&triplet, &[t], n, seed.wrapping_add(1))?.iter().map(|r| (-r[0].xi).exp()).collect();
    let ks = ks_two_sample(&picks, &masses, 0.001)?;
    outcome(ks.passes(), format!("KS = {:.4} (critical {:.4} at the 0.1% level)", ks.statistic, ks.critical))
}

fn concentration(seed: u64) -> Result<Outcome> {
    let (runs, t, points) = (200u64, 400.0, 1000u64);
    let nu = DislocationMeasure::binary_uniform(1.0)?;
    let scale = dislocation_to_triplet(&nu, 0.0)?.phi_inverse(1.0 / t)?;
    let masses: Vec<f64> = (0..runs)
        .into_par_iter()
        .map(|i| {
            let mut sim =
                FragmentationSim::tagged(&nu, points, FragmentationConfig::default(), RngStream::new(seed, i))?;
            sim.advance_to(t)?;
            Ok(sim.empirical_measure(scale).mass_in(1.7, 2.3))
        })
        .collect::<Result<_>>()?;
    let est = MeanEstimate::from_samples(&masses)?;
    outcome(
        est.mean > 0.9,
        format!("mean mass in [1.7, 2.3] at t = 400 = {:.4} ± {:.4} (threshold 0.9)", est.mean, est.std_error),
    )
}

fn disk_decay(seed: u64) -> Result<Outcome> {
    let ts = [4.0, 8.0, 16.0, 32.0, 64.0];
    let config = DiskPathConfig::new(1e-5, 64.0)?;
    let deficits: Vec<Vec<f64>> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let path = simulate_disk_path(config, RngStream::new(seed, i));
            ts.iter().map(|&t| perimeter_deficit(&path.hit_angles_until(t)).perimeter).collect()
        })
        .collect();
    let means: Vec<f64> =
        (0..ts.len()).map(|k| deficits.iter().map(|d| d[k]).sum::<f64>() / deficits.len() as f64).collect();
    let xs: Vec<f64> = ts.iter().map(|t| t.sqrt()).collect();
    let ys: Vec<f64> = means.iter().map(|d| d.ln()).collect();
    let fit = linear_fit(&xs, &ys)?;
    outcome(
        fit.r_squared >= 0.95 && (-3.5..=-1.0).contains(&fit.slope),
        format!(
            "slope = {:.3} (band [-3.5, -1.0]), R^2 = {:.4} (limit 0.95); mean deficits [{}]",
            fit.slope,
            fit.r_squared,
            sci(&means)
        ),
    )
}

fn deficit_geometry(_: u64) -> Result<Outcome> {
    let equal = HitAngles::new((0..1000).map(|k| TAU * k as f64 / 1000.0).collect());
    let d = perimeter_deficit(&equal);
    let ratio_gap = (d.perimeter / d.perimeter_cubic - 1.0).abs();
    let hexagon = HitAngles::new((0..6).map(|k| PI * k as f64 / 3.0).collect());
    let hex_err = (perimeter_deficit(&hexagon).perimeter - (TAU - 6.0)).abs();
    outcome(
        ratio_gap < 1e-4 && hex_err < 1e-12,
        format!("|exact/cubic - 1| = {ratio_gap:.3e} (limit 1e-4); hexagon error = {hex_err:.3e} (limit 1e-12)"),
    )
}

fn increment_asymptotics(_: u64) -> Result<Outcome> {
    let mut worst = 0.0f64;
    for gamma in [0.5, 1.0] {
        let ratio = MeasureV::new(LevyTriplet::stable(gamma)?).increment_ratio(1e8, 1e4)?;
        worst = worst.max((ratio - 1.0 / (1.0 + gamma)).abs());
    }
    outcome(worst < 1e-3, format!("max |ratio - 1/(1+gamma)| = {worst:.3e} (limit 1e-3)"))
}
