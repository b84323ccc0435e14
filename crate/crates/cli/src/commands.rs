//! One function per subcommand; each writes a CSV table to `out`.

use crate::config::{Command, Emit, RunConfig};
use crate::error::{CliError, Context};
use crate::output::Csv;
use crate::verify;
use fraglog_core::disk::{
    hull_comparison, narrow_escape_tail, perimeter_deficit, simulate_disk_path, DiskPathConfig, HullComparison,
};
use fraglog_core::fragmentation::{dislocation_to_triplet, FragmentationConfig, FragmentationSim};
use fraglog_core::stats::MeanEstimate;
use fraglog_core::transform::{
    asymptotic_laplace, d_gamma_laplace, fragmentation_moment, laplace_xi_rho, laplace_xi_rho_gaussian_form,
    LaplaceQuery,
};
use fraglog_core::{LevyTriplet, MeasureV, RngStream};
use rayon::prelude::*;
use std::f64::consts::TAU;
use std::io::Write;

const EXACT: &str = "phi(q) * int exp(-Phi(q) x - t/x) V(dx)";

pub fn run(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    match cfg.command {
        Command::Laplace => laplace(cfg, out),
        Command::Asymptotic => asymptotic(cfg, out),
        Command::Dgamma => dgamma(cfg, out),
        Command::Measure => measure(cfg, out),
        Command::Simulate => simulate(cfg, out),
        Command::Fragsim => fragsim(cfg, out),
        Command::Disk => disk(cfg, out),
        Command::Verify => verify_command(cfg, out),
    }
}

fn or_default(values: &[f64], default: &[f64]) -> Vec<f64> {
    if values.is_empty() {
        default.to_vec()
    } else {
        values.to_vec()
    }
}

fn sorted_times(cfg: &RunConfig, default: &[f64]) -> Result<Vec<f64>, CliError> {
    let mut t = or_default(&cfg.params.t, default);
    if t.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(CliError::Usage("`params.t` entries must be finite and > 0".into()));
    }
    t.sort_by(f64::total_cmp);
    t.dedup();
    Ok(t)
}

fn grid(cfg: &RunConfig) -> Result<Vec<LaplaceQuery>, CliError> {
    let qs = or_default(&cfg.params.q, &[1.0]);
    let ts = or_default(&cfg.params.t, &[1.0]);
    let mut grid = Vec::with_capacity(qs.len() * ts.len());
    for &q in &qs {
        for &t in &ts {
            grid.push(LaplaceQuery::new(q, t).context("query")?);
        }
    }
    Ok(grid)
}

fn laplace(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let measure = cfg.build_measure()?;
    let triplet = measure.triplet();
    let mut csv = Csv::new(out, cfg)?;
    csv.formula("exact", EXACT)?;
    csv.formula("gaussian_form", "same transform with x integrated against the Gaussian kernel in sqrt(2t)-units")?;
    csv.formula("defect", "P(xi_rho(t) = infinity)")?;
    csv.header(&["q", "t", "phi", "big_phi", "exact", "gaussian_form", "defect", "inversion_spread"])?;
    for query in grid(cfg)? {
        let exact = laplace_xi_rho(&measure, query).context("transform")?;
        let gauss = laplace_xi_rho_gaussian_form(&measure, query).context("transform")?;
        csv.row(&[
            query.q,
            query.t,
            triplet.phi(query.q).context("levy_core")?,
            triplet.big_phi(query.q).context("levy_core")?,
            exact.value,
            gauss.value,
            exact.defect,
            exact.inversion_spread.max(gauss.inversion_spread),
        ])?;
    }
    Ok(())
}

fn declared_gamma(cfg: &RunConfig, triplet: &LevyTriplet) -> Result<f64, CliError> {
    if let Some(g) = cfg.params.declared_gamma {
        return Ok(g);
    }
    if let Some(g) = triplet.canonical_stable_index() {
        return Ok(g);
    }
    if triplet.killing == 0.0 && triplet.moments().mean.is_finite() {
        return Ok(1.0);
    }
    Err(CliError::Usage("cannot infer the index of regular variation; set `params.declared_gamma`".into()))
}

fn asymptotic(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let measure = cfg.build_measure()?;
    let gamma = declared_gamma(cfg, measure.triplet())?;
    let mut csv = Csv::new(out, cfg)?;
    csv.comment(&format!("declared index gamma = {gamma}"))?;
    csv.formula("exact", EXACT)?;
    csv.formula("asymptotic", "b(q) t^{1/4} Phi^{-1}(t^{-1/2}) exp(-2 sqrt(Phi(q) t))")?;
    csv.formula("envelope_ratio", "exact / ((1 + t^{1/8}) exp(-2 sqrt(Phi(q) t)))")?;
    csv.header(&["q", "t", "exact", "asymptotic", "ln_exact", "ln_asymptotic", "ratio", "envelope_ratio"])?;
    for query in grid(cfg)? {
        let exact = laplace_xi_rho(&measure, query).context("transform")?;
        let asym = asymptotic_laplace(measure.triplet(), gamma, query).context("transform")?;
        let big = measure.triplet().big_phi(query.q).context("levy_core")?;
        let ln_env = query.t.powf(0.125).ln_1p() - 2.0 * (big * query.t).sqrt();
        csv.row(&[
            query.q,
            query.t,
            exact.value,
            asym.value,
            exact.ln_value,
            asym.ln_value,
            (exact.ln_value - asym.ln_value).exp(),
            (exact.ln_value - ln_env).exp(),
        ])?;
    }
    Ok(())
}

fn dgamma(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let gamma = cfg.triplet.gamma.ok_or_else(|| CliError::Usage("missing key `triplet.gamma`".into()))?;
    let lambdas = or_default(&cfg.params.lambda, &[1.0]);
    let mut csv = Csv::new(out, cfg)?;
    csv.formula("value", "(2/Gamma(a)) lambda^{gamma/2} K_a(2 lambda^{(gamma+1)/2}), a = gamma/(gamma+1)")?;
    csv.header(&["gamma", "lambda", "value"])?;
    for lambda in lambdas {
        csv.row(&[gamma, lambda, d_gamma_laplace(gamma, lambda).context("transform")?])?;
    }
    Ok(())
}

fn measure(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let measure = cfg.build_measure()?;
    let xs = or_default(&cfg.params.x, &[1.0]);
    let mut csv = Csv::new(out, cfg)?;
    csv.comment(&format!("mode = {:?}, drift_atom = {}", measure.mode(), measure.drift_atom()))?;
    csv.formula("v_bar", "V([0, x]) with V(dx) = x L(dx)")?;
    csv.formula("l_bar", "L((x, infinity))")?;
    csv.header(&["x", "v_bar", "l_bar", "v_bar_error", "l_bar_error", "low_confidence"])?;
    for x in xs {
        let v = measure.v_bar_detailed(x).context("measure_inversion")?;
        let l = measure.l_bar_detailed(x).context("measure_inversion")?;
        let flag = if v.low_confidence || l.low_confidence { 1.0 } else { 0.0 };
        csv.row(&[x, v.value, l.value, v.error_estimate, l.error_estimate, flag])?;
    }
    Ok(())
}

fn simulate(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let measure = cfg.build_measure()?;
    let triplet = measure.triplet();
    let qs = or_default(&cfg.params.q, &[1.0]);
    let ts = sorted_times(cfg, &[1.0])?;
    let paths = cfg.params.paths.unwrap_or(10_000);
    let rows = fraglog_core::simulate::xi_rho_batch(triplet, &ts, paths, cfg.seed).context("simulate")?;
    let mut csv = Csv::new(out, cfg)?;
    match cfg.params.emit.unwrap_or(Emit::Summary) {
        Emit::Samples => {
            csv.comment("xi = infinity marks a killed path")?;
            csv.header(&["path", "t", "rho", "xi"])?;
            for (i, row) in rows.iter().enumerate() {
                for (t, s) in ts.iter().zip(row) {
                    csv.row(&[i as f64, *t, s.rho, s.xi])?;
                }
            }
        }
        Emit::Summary => {
            csv.formula("mc_mean", "mean of exp(-q xi_rho(t)) over paths")?;
            csv.formula("exact", EXACT)?;
            csv.header(&["q", "t", "paths", "mc_mean", "std_error", "exact", "z"])?;
            for &q in &qs {
                for (k, &t) in ts.iter().enumerate() {
                    let xs: Vec<f64> = rows.iter().map(|r| (-q * r[k].xi).exp()).collect();
                    let est = MeanEstimate::from_samples(&xs).context("stats")?;
                    let exact =
                        laplace_xi_rho(&measure, LaplaceQuery::new(q, t).context("query")?).context("transform")?.value;
                    csv.row(&[q, t, paths as f64, est.mean, est.std_error, exact, est.z_score(exact)])?;
                }
            }
        }
        other => return Err(CliError::Usage(format!("`simulate` cannot emit {other:?}"))),
    }
    Ok(())
}

fn fragsim(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let nu = cfg.build_dislocation()?;
    let ts = sorted_times(cfg, &[1.0])?;
    let qs = or_default(&cfg.params.q, &[1.0]);
    let runs = cfg.params.runs.unwrap_or(1000);
    let frag_cfg = FragmentationConfig {
        mass_floor: cfg.params.mass_floor.unwrap_or(FragmentationConfig::default().mass_floor),
        ..FragmentationConfig::default()
    };
    let triplet = dislocation_to_triplet(&nu, 0.0).context("fragmentation")?;
    let mut csv = Csv::new(out, cfg)?;
    match cfg.params.emit.unwrap_or(Emit::Summary) {
        Emit::Summary => {
            let moments: Vec<Vec<f64>> = (0..runs as u64)
                .into_par_iter()
                .map(|i| {
                    let mut sim = FragmentationSim::new(&nu, frag_cfg, RngStream::new(cfg.seed, i))?;
                    let mut row = Vec::with_capacity(ts.len() * qs.len());
                    for &t in &ts {
                        sim.advance_to(t)?;
                        row.extend(qs.iter().map(|&q| sim.moment_sum(q)));
                    }
                    Ok(row)
                })
                .collect::<fraglog_core::Result<_>>()
                .context("fragmentation")?;
            let measure = MeasureV::new(triplet);
            csv.comment(&format!("mass floor = {:e}", frag_cfg.mass_floor))?;
            csv.formula("mc_mean", "mean over runs of sum_i F_i(t)^{q+1}")?;
            csv.formula("exact", "E[exp(-q xi_rho(t))] for the tagged-fragment subordinator")?;
            csv.header(&["q", "t", "runs", "mc_mean", "std_error", "exact", "z"])?;
            for (j, &q) in qs.iter().enumerate() {
                for (k, &t) in ts.iter().enumerate() {
                    let xs: Vec<f64> = moments.iter().map(|r| r[k * qs.len() + j]).collect();
                    let est = MeanEstimate::from_samples(&xs).context("stats")?;
                    let exact = fragmentation_moment(&measure, q, t).context("transform")?;
                    csv.row(&[q, t, runs as f64, est.mean, est.std_error, exact, est.z_score(exact)])?;
                }
            }
        }
        Emit::Fragments | Emit::Empirical => {
            let mut sim = FragmentationSim::new(&nu, frag_cfg, RngStream::new(cfg.seed, 0)).context("fragmentation")?;
            let empirical = cfg.params.emit == Some(Emit::Empirical);
            if empirical {
                csv.formula("x", "Phi^{-1}(1/t) |log F_i|")?;
                csv.header(&["t", "x", "weight"])?;
            } else {
                csv.header(&["t", "mass", "birth"])?;
            }
            for &t in &ts {
                sim.advance_to(t).context("fragmentation")?;
                if empirical {
                    let em = fraglog_core::fragmentation::empirical_measure(&sim, &triplet).context("fragmentation")?;
                    for (x, w) in em.points {
                        csv.row(&[t, x, w])?;
                    }
                } else {
                    for f in sim.fragments() {
                        csv.row(&[t, f.mass, f.birth])?;
                    }
                }
            }
        }
        other => return Err(CliError::Usage(format!("`fragsim` cannot emit {other:?}"))),
    }
    Ok(())
}

fn disk(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let h = cfg.params.h.unwrap_or(1e-4);
    let paths = cfg.params.paths.unwrap_or(10);
    let ts = sorted_times(cfg, &[4.0, 8.0, 16.0])?;
    let horizon = cfg.params.horizon.unwrap_or(*ts.last().expect("non-empty grid"));
    let mut csv = Csv::new(out, cfg)?;
    match cfg.params.emit.unwrap_or(Emit::Summary) {
        Emit::Summary | Emit::Hits => {
            let config = DiskPathConfig::new(h, horizon).context("disk")?;
            let sims: Vec<_> = (0..paths as u64)
                .into_par_iter()
                .map(|i| simulate_disk_path(config, RngStream::new(cfg.seed, i)))
                .collect();
            if cfg.params.emit == Some(Emit::Hits) {
                csv.header(&["path", "time", "angle"])?;
                for (i, p) in sims.iter().enumerate() {
                    for hit in &p.hits {
                        csv.row(&[i as f64, hit.time, hit.angle])?;
                    }
                }
                return Ok(());
            }
            csv.formula("perimeter_deficit", "sum over gaps of (l - 2 sin(l/2))")?;
            csv.formula("area_deficit", "sum over gaps of (l - sin l)/2")?;
            csv.formula("perimeter_cubic", "sum over gaps of l^3/24")?;
            csv.header(&["t", "perimeter_deficit", "std_error", "area_deficit", "perimeter_cubic", "mean_hits"])?;
            for &t in ts.iter().filter(|&&t| t <= horizon) {
                let d: Vec<_> = sims
                    .iter()
                    .map(|p| (perimeter_deficit(&p.hit_angles_until(t)), p.hit_angles_until(t).len()))
                    .collect();
                let per: Vec<f64> = d.iter().map(|x| x.0.perimeter).collect();
                let n = d.len() as f64;
                let (mean, se) = match MeanEstimate::from_samples(&per) {
                    Ok(e) => (e.mean, e.std_error),
                    Err(_) => (per.iter().sum::<f64>() / n, f64::NAN),
                };
                csv.row(&[
                    t,
                    mean,
                    se,
                    d.iter().map(|x| x.0.area).sum::<f64>() / n,
                    d.iter().map(|x| x.0.perimeter_cubic).sum::<f64>() / n,
                    d.iter().map(|x| x.1 as f64).sum::<f64>() / n,
                ])?;
            }
        }
        Emit::Hull => {
            let config = DiskPathConfig::new(h, horizon).context("disk")?.with_trajectory_stride(1);
            let per_path: Vec<Vec<HullComparison>> = (0..paths as u64)
                .into_par_iter()
                .map(|i| {
                    let path = simulate_disk_path(config, RngStream::new(cfg.seed, i));
                    ts.iter().filter(|&&t| t <= horizon).map(|&t| hull_comparison(&path, t)).collect()
                })
                .collect();
            csv.formula("hull_deficit", "2 pi - perimeter of the hull of the sampled trajectory")?;
            csv.formula("hit_deficit", "2 pi - perimeter of the polygon inscribed at the hit angles")?;
            csv.header(&["t", "hull_deficit", "hit_deficit", "ordered_fraction"])?;
            let n = paths as f64;
            for (k, &t) in ts.iter().filter(|&&t| t <= horizon).enumerate() {
                let mean = |f: &dyn Fn(&HullComparison) -> f64| per_path.iter().map(|p| f(&p[k])).sum::<f64>() / n;
                csv.row(&[
                    t,
                    mean(&|c| TAU - c.trajectory_perimeter),
                    mean(&|c| TAU - c.hit_perimeter),
                    mean(&|c| if c.ordered { 1.0 } else { 0.0 }),
                ])?;
            }
        }
        Emit::Survival => {
            let x = cfg.params.x.first().copied().unwrap_or(0.9);
            let curve = narrow_escape_tail(x, &ts, paths, h, cfg.seed).context("disk")?;
            csv.comment(&format!(
                "fitted_rate = {}, narrow_escape_rate = {}, low_confidence = {}",
                curve.fitted_rate, curve.predicted_rate, curve.low_confidence
            ))?;
            csv.formula("survival", "P(first time B_t . e_0 > x exceeds t)")?;
            csv.header(&["t", "survival"])?;
            for (t, s) in curve.times.iter().zip(&curve.survival) {
                csv.row(&[*t, *s])?;
            }
        }
        other => return Err(CliError::Usage(format!("`disk` cannot emit {other:?}"))),
    }
    Ok(())
}

fn verify_command(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let suite = cfg.params.suite.unwrap_or_default();
    writeln!(
        out,
        "# fraglog {} verify suite={} seed={}",
        crate::output::VERSION,
        format!("{suite:?}").to_lowercase(),
        cfg.seed
    )?;
    let mut failed = Vec::new();
    for criterion in verify::criteria().into_iter().filter(|c| c.in_suite(suite)) {
        let report = criterion.run(cfg.seed);
        writeln!(out, "{report}")?;
        out.flush()?;
        if !report.passed {
            failed.push(report.id.to_string());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Acceptance(format!("criteria {} failed", failed.join(", "))))
    }
}
