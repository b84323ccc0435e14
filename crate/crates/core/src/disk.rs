//! Reflected Brownian motion in the unit disk and the convex hull of its
//! boundary hits.
//!
//! The walk takes Euler steps of variance `h` per coordinate and is folded
//! back radially (`r ← 2 − r`) when it leaves the disk. Any position within
//! `ε_b` of the circle counts as a hit at its polar angle. If the hit angles
//! cut the circle into arcs `ℓ_i`, the hull of the hit points has
//!
//! ```text
//! 2π − P = Σ (ℓ_i − 2 sin(ℓ_i/2)) ≈ Σ ℓ_i³/24,
//! π − A  = Σ (ℓ_i − sin ℓ_i)/2    ≈ Σ ℓ_i³/12.
//! ```

use crate::error::{domain, Result};
use crate::simulate::RngStream;
use crate::stats::{linear_fit, LinearFit};
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::{LN_2, TAU};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskPathConfig {
    /// Time step.
    pub h: f64,
    pub horizon: f64,
    /// Distance to the circle below which a position is a hit; default `3√h`.
    pub boundary_tol: f64,
    /// A hit is dropped when the previous recorded hit is at most this much
    /// earlier and at most `dedup_angle` away. Defaults `2h` and `√h`.
    pub dedup_time: f64,
    pub dedup_angle: f64,
    /// Keep every `stride`-th position for hull computations (0 keeps none).
    pub trajectory_stride: usize,
}

impl DiskPathConfig {
    pub fn new(h: f64, horizon: f64) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) || !(horizon >= 0.0) || !horizon.is_finite() {
            return domain(format!("disk path needs 0 < h < 1 and finite horizon ≥ 0, got h = {h}, T = {horizon}"));
        }
        Ok(DiskPathConfig {
            h,
            horizon,
            boundary_tol: 3.0 * h.sqrt(),
            dedup_time: 2.0 * h,
            dedup_angle: h.sqrt(),
            trajectory_stride: 0,
        })
    }

    pub fn with_trajectory_stride(mut self, stride: usize) -> Self {
        self.trajectory_stride = stride;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryHit {
    pub time: f64,
    pub angle: f64,
    pub position: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiskPath {
    pub config: DiskPathConfig,
    pub hits: Vec<BoundaryHit>,
    /// `(time, position)` every `trajectory_stride` steps, starting at the origin.
    pub trajectory: Vec<(f64, [f64; 2])>,
    pub final_position: [f64; 2],
}

fn fold(p: [f64; 2]) -> [f64; 2] {
    let r = p[0].hypot(p[1]);
    if r <= 1.0 {
        return p;
    }
    // Folding a step that overshoots by more than the diameter is not
    // meaningful; clamp to stay inside.
    let target = (2.0 - r).max(0.0);
    [p[0] * target / r, p[1] * target / r]
}

fn angle_of(p: [f64; 2]) -> f64 {
    let a = p[1].atan2(p[0]);
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}

fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(TAU - d)
}

/// Simulates one reflected path from the origin up to the horizon.
pub fn simulate_disk_path(config: DiskPathConfig, stream: RngStream) -> DiskPath {
    let mut rng = stream.rng();
    let sd = config.h.sqrt();
    let steps = (config.horizon / config.h).round() as u64;
    let threshold = 1.0 - config.boundary_tol;
    let mut p = [0.0f64, 0.0f64];
    let mut hits: Vec<BoundaryHit> = Vec::new();
    let mut trajectory = Vec::new();
    if config.trajectory_stride > 0 {
        trajectory.push((0.0, p));
    }
    for step in 1..=steps {
        let dx: f64 = StandardNormal.sample(&mut rng);
        let dy: f64 = StandardNormal.sample(&mut rng);
        p = fold([p[0] + sd * dx, p[1] + sd * dy]);
        let time = step as f64 * config.h;
        if p[0] * p[0] + p[1] * p[1] >= threshold * threshold {
            let angle = angle_of(p);
            let duplicate = hits.last().is_some_and(|last| {
                time - last.time <= config.dedup_time && angular_distance(angle, last.angle) <= config.dedup_angle
            });
            if !duplicate {
                hits.push(BoundaryHit { time, angle, position: p });
            }
        }
        if config.trajectory_stride > 0 && step % config.trajectory_stride as u64 == 0 {
            trajectory.push((time, p));
        }
    }
    DiskPath { config, hits, trajectory, final_position: p }
}

impl DiskPath {
    /// Angles of the hits up to time `t`.
    pub fn hit_angles_until(&self, t: f64) -> HitAngles {
        HitAngles::new(self.hits.iter().take_while(|h| h.time <= t).map(|h| h.angle).collect())
    }

    /// Trajectory samples and hit positions up to time `t`.
    pub fn points_until(&self, t: f64) -> Vec<[f64; 2]> {
        let mut pts: Vec<[f64; 2]> = self.trajectory.iter().take_while(|s| s.0 <= t).map(|s| s.1).collect();
        pts.extend(self.hits.iter().take_while(|h| h.time <= t).map(|h| h.position));
        if pts.is_empty() {
            pts.push([0.0, 0.0]);
        }
        pts
    }
}

/// Sorted hit angles in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HitAngles {
    angles: Vec<f64>,
}

impl HitAngles {
    pub fn new(mut angles: Vec<f64>) -> Self {
        angles.iter_mut().for_each(|a| *a = a.rem_euclid(TAU));
        angles.sort_by(f64::total_cmp);
        HitAngles { angles }
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// Arc lengths of the complement of the hit set, non-increasing; a
    /// single `2π` arc with fewer than two hits.
    pub fn gaps(&self) -> Vec<f64> {
        if self.angles.len() < 2 {
            return vec![TAU];
        }
        let mut gaps: Vec<f64> = self.angles.windows(2).map(|w| w[1] - w[0]).collect();
        gaps.push(TAU - self.angles[self.angles.len() - 1] + self.angles[0]);
        gaps.sort_by(|a, b| b.total_cmp(a));
        gaps
    }
}

/// `x − 2 sin(x/2)` without cancellation.
fn chord_defect(x: f64) -> f64 {
    if x < 0.1 {
        let y = x / 2.0;
        let y2 = y * y;
        // 2 Σ_{k≥1} (−1)^{k+1} y^{2k+1}/(2k+1)!
        2.0 * y * y2 * (1.0 / 6.0 - y2 * (1.0 / 120.0 - y2 * (1.0 / 5040.0 - y2 / 362880.0)))
    } else {
        x - 2.0 * (x / 2.0).sin()
    }
}

/// `x − sin x` without cancellation.
fn segment_defect(x: f64) -> f64 {
    if x < 0.1 {
        let x2 = x * x;
        x * x2 * (1.0 / 6.0 - x2 * (1.0 / 120.0 - x2 * (1.0 / 5040.0 - x2 / 362880.0)))
    } else {
        x - x.sin()
    }
}

/// Perimeter and area deficits of the hull of the hit points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deficits {
    /// `2π − P_t`.
    pub perimeter: f64,
    /// `π − A_t`.
    pub area: f64,
    /// `Σ ℓ³/24`.
    pub perimeter_cubic: f64,
    /// `Σ ℓ³/12`.
    pub area_cubic: f64,
}

pub fn perimeter_deficit(hits: &HitAngles) -> Deficits {
    let gaps = hits.gaps();
    let cubes: f64 = gaps.iter().map(|l| l * l * l).sum();
    Deficits {
        perimeter: gaps.iter().map(|&l| chord_defect(l)).sum(),
        area: gaps.iter().map(|&l| 0.5 * segment_defect(l)).sum(),
        perimeter_cubic: cubes / 24.0,
        area_cubic: cubes / 12.0,
    }
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Vertices of the convex hull in counter-clockwise order (monotone chain).
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

pub fn hull_perimeter(points: &[[f64; 2]]) -> f64 {
    let hull = convex_hull(points);
    match hull.len() {
        0 | 1 => 0.0,
        n => (0..n)
            .map(|i| {
                let (a, b) = (hull[i], hull[(i + 1) % n]);
                (a[0] - b[0]).hypot(a[1] - b[1])
            })
            .sum(),
    }
}

/// Hull perimeter of the sampled trajectory against the chord perimeter of the hits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HullComparison {
    /// `P̄_t`: perimeter of the hull of the trajectory samples and hit positions.
    pub trajectory_perimeter: f64,
    /// `P_t`: perimeter of the polygon inscribed at the hit angles.
    pub hit_perimeter: f64,
    /// `(1 − ε_b) P_t ≤ P̄_t ≤ 2π`. Hit points lie up to `ε_b` inside the
    /// circle, so only the shrunken inscribed polygon is guaranteed inside
    /// the trajectory hull.
    pub ordered: bool,
}

pub fn hull_comparison(path: &DiskPath, t: f64) -> HullComparison {
    let trajectory_perimeter = hull_perimeter(&path.points_until(t));
    let hit_perimeter = TAU - perimeter_deficit(&path.hit_angles_until(t)).perimeter;
    let shrink = 1.0 - path.config.boundary_tol;
    let ordered = shrink * hit_perimeter <= trajectory_perimeter * (1.0 + 1e-12) && trajectory_perimeter <= TAU;
    HullComparison { trajectory_perimeter, hit_perimeter, ordered }
}

/// Monte Carlo survival curve of `τ_x = inf{t : B_t · e_0 > x}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve {
    pub x: f64,
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
    /// Decay rate from a log-linear fit over the tail of the curve.
    pub fitted_rate: f64,
    /// `1/(−log(1−x) − log 2 + 1/2)`.
    pub predicted_rate: f64,
    pub fit: Option<LinearFit>,
    /// Set when too few escapes or too few tail points support the fit.
    pub low_confidence: bool,
}

pub fn narrow_escape_rate(x: f64) -> f64 {
    1.0 / (-(-x).ln_1p() - LN_2 + 0.5)
}

pub fn narrow_escape_tail(x: f64, t_grid: &[f64], paths: usize, h: f64, seed: u64) -> Result<SurvivalCurve> {
    if !(x > 0.0 && x < 1.0) {
        return domain(format!("target position must lie in (0, 1), got {x}"));
    }
    if t_grid.is_empty() || t_grid.windows(2).any(|w| !(w[1] > w[0])) || t_grid[0] < 0.0 {
        return domain("survival grid must be non-empty, non-negative and increasing");
    }
    if paths == 0 || !(h > 0.0 && h < 1.0) {
        return domain("need at least one path and 0 < h < 1");
    }
    let t_max = *t_grid.last().expect("non-empty grid");
    let sd = h.sqrt();
    let max_steps = (t_max / h).ceil() as u64;
    let exit_times: Vec<f64> = (0..paths as u64)
        .map(|i| {
            let mut rng = RngStream::new(seed, i).rng();
            let mut p = [0.0f64, 0.0f64];
            for step in 1..=max_steps {
                let dx: f64 = StandardNormal.sample(&mut rng);
                let dy: f64 = StandardNormal.sample(&mut rng);
                p = fold([p[0] + sd * dx, p[1] + sd * dy]);
                if p[0] > x {
                    return step as f64 * h;
                }
            }
            f64::INFINITY
        })
        .collect();
    let n = paths as f64;
    let survival: Vec<f64> = t_grid.iter().map(|&t| exit_times.iter().filter(|&&e| e > t).count() as f64 / n).collect();
    let (tx, ty): (Vec<f64>, Vec<f64>) =
        t_grid.iter().zip(&survival).filter(|(_, &s)| s <= 0.5 && s * n >= 20.0).map(|(&t, &s)| (t, s.ln())).unzip();
    let fit = if tx.len() >= 3 { linear_fit(&tx, &ty).ok() } else { None };
    Ok(SurvivalCurve {
        x,
        times: t_grid.to_vec(),
        survival,
        fitted_rate: fit.map_or(f64::NAN, |f| -f.slope),
        predicted_rate: narrow_escape_rate(x),
        low_confidence: fit.is_none_or(|f| f.r_squared < 0.9),
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ks_one_sample;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn deficit_closed_forms() {
        let antipodal = perimeter_deficit(&HitAngles::new(vec![0.0, PI]));
        assert_relative_eq!(antipodal.perimeter, 2.0 * (PI - 2.0), max_relative = 1e-14);
        assert_relative_eq!(antipodal.area, PI, max_relative = 1e-14);
        let hexagon = perimeter_deficit(&HitAngles::new((0..6).map(|k| k as f64 * PI / 3.0).collect()));
        assert!((hexagon.perimeter - (TAU - 6.0)).abs() < 1e-12);
        assert!((hexagon.area - (PI - 1.5 * 3f64.sqrt())).abs() < 1e-12);
        let none = perimeter_deficit(&HitAngles::new(vec![]));
        assert_eq!(none.perimeter, TAU);
        assert_relative_eq!(none.area, PI, max_relative = 1e-15);
    }

    #[test]
    fn cubic_approximation_for_fine_gaps() {
        let k = 1000;
        let d = perimeter_deficit(&HitAngles::new((0..k).map(|i| i as f64 * TAU / k as f64).collect()));
        assert!((d.perimeter / d.perimeter_cubic - 1.0).abs() < 1e-4);
        assert!((d.area / d.area_cubic - 1.0).abs() < 1e-4);
        assert_relative_eq!(d.area_cubic, 2.0 * d.perimeter_cubic, max_relative = 1e-15);
    }

    #[test]
    fn series_matches_direct_form() {
        for &x in &[0.09, 0.1, 0.11] {
            let direct = x - 2.0 * f64::sin(x / 2.0);
            assert_relative_eq!(chord_defect(x), direct, max_relative = 1e-9);
            assert_relative_eq!(segment_defect(x), x - x.sin(), max_relative = 1e-9);
        }
    }

    #[test]
    fn gaps_close_the_circle() {
        let h = HitAngles::new(vec![6.0, 0.3, 2.0, -0.5, 4.4]);
        let total: f64 = h.gaps().iter().sum();
        assert!((total - TAU).abs() < 1e-12);
        assert!(h.gaps().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn hull_of_simple_sets() {
        assert_eq!(hull_perimeter(&[[0.2, 0.1]]), 0.0);
        let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5], [0.5, 0.0]];
        assert_relative_eq!(hull_perimeter(&square), 4.0, max_relative = 1e-15);
        assert_relative_eq!(hull_perimeter(&[[0.0, 0.0], [3.0, 4.0]]), 10.0, max_relative = 1e-15);
    }

    #[test]
    fn short_horizon_has_no_hits() {
        let config = DiskPathConfig::new(1e-4, 0.0).unwrap();
        let path = simulate_disk_path(config, RngStream::new(1, 0));
        assert!(path.hits.is_empty());
        assert_eq!(path.hit_angles_until(1.0).gaps(), vec![TAU]);
    }

    #[test]
    fn hulls_are_ordered_and_deficits_shrink() {
        let config = DiskPathConfig::new(1e-4, 16.0).unwrap().with_trajectory_stride(10);
        let mut mean = [0.0; 3];
        for i in 0..10 {
            let path = simulate_disk_path(config, RngStream::new(2, i));
            for (j, &t) in [4.0, 8.0, 16.0].iter().enumerate() {
                let c = hull_comparison(&path, t);
                assert!(c.ordered, "{c:?}");
                mean[j] += perimeter_deficit(&path.hit_angles_until(t)).perimeter;
            }
        }
        assert!(mean[0] > mean[1] && mean[1] > mean[2]);
    }

    #[test]
    fn reflected_walk_is_uniform_in_area() {
        let config = DiskPathConfig::new(1e-3, 2.0).unwrap();
        let radii2: Vec<f64> = (0..2000)
            .map(|i| {
                let p = simulate_disk_path(config, RngStream::new(3, i)).final_position;
                p[0] * p[0] + p[1] * p[1]
            })
            .collect();
        assert!(ks_one_sample(&radii2, |r| r.clamp(0.0, 1.0), 0.01).unwrap().passes());
    }

    #[test]
    fn narrow_escape_behaviour() {
        let grid: Vec<f64> = (0..=40).map(|k| k as f64 * 0.25).collect();
        let c = narrow_escape_tail(0.9, &grid, 2000, 1e-3, 4).unwrap();
        assert_eq!(c.survival[0], 1.0);
        assert!(!c.low_confidence);
        // Narrow-escape asymptotics for an absorbing arc of half-angle ε on the
        // unit circle, standard Brownian motion started at the centre:
        // E[τ] ≈ 2 log(1/ε) + 2 log 2 + 1/2.
        let eps = f64::acos(0.9);
        let oracle = 1.0 / (2.0 * (1.0 / eps).ln() + 2.0 * LN_2 + 0.5);
        assert!((c.fitted_rate / oracle - 1.0).abs() < 0.15, "{c:?}");
        let easier = narrow_escape_tail(0.5, &grid, 1000, 1e-3, 4).unwrap();
        assert!(easier.survival.iter().zip(&c.survival).all(|(a, b)| a <= b));
    }
}
