//! Fragmentation in which a fragment of mass `m` splits at rate
//! `ν(S)/|log m|`.
//!
//! Only masses are tracked. The unit mass splits at time zero, then every
//! fragment carries an exponential clock and the simulation is driven by a
//! priority queue of split epochs, so it is exact up to the mass floor below
//! which fragments are frozen. Freezing a fragment of mass `m ≤ μ` changes
//! `Σ F_i^{q+1}` by at most `m^{q+1}`, hence the total moment bias is at most
//! `μ^q`.
//!
//! At large times the number of fragments explodes, while most statistics
//! are mass-weighted averages. The tagged mode therefore follows `K` uniform
//! points of the unit interval: at a split the points of the parent are
//! distributed multinomially according to the child masses, and children
//! that receive no point are dropped. `(1/K) Σ_points f(F(point))` is then an
//! unbiased estimate of `Σ F_i f(F_i)`.

use crate::error::{domain, Error, Result};
use crate::levy::{JumpLaw, JumpMeasure, LevyTriplet};
use crate::simulate::{open_unit, RngStream};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp1};
use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

pub const DEFAULT_MASS_FLOOR: f64 = 1e-12;
pub const DEFAULT_MAX_FRAGMENTS: usize = 20_000_000;

/// Finite dislocation measure `ν`: a total rate and a law of mass partitions.
#[derive(Debug, Clone, PartialEq)]
pub enum DislocationMeasure {
    /// `(max(U, 1−U), min(U, 1−U))` with `U` uniform.
    BinaryUniform { rate: f64 },
    /// Always the same partition (sorted on construction).
    Deterministic { rate: f64, parts: Vec<f64> },
    /// Uniform split into `k` parts (symmetric Dirichlet).
    Dirichlet { rate: f64, k: usize },
}

impl DislocationMeasure {
    pub fn binary_uniform(rate: f64) -> Result<Self> {
        let nu = DislocationMeasure::BinaryUniform { rate };
        nu.validate()?;
        Ok(nu)
    }

    pub fn deterministic(rate: f64, mut parts: Vec<f64>) -> Result<Self> {
        parts.sort_by(|a, b| b.total_cmp(a));
        let nu = DislocationMeasure::Deterministic { rate, parts };
        nu.validate()?;
        Ok(nu)
    }

    pub fn dirichlet(rate: f64, k: usize) -> Result<Self> {
        let nu = DislocationMeasure::Dirichlet { rate, k };
        nu.validate()?;
        Ok(nu)
    }

    pub fn rate(&self) -> f64 {
        match self {
            DislocationMeasure::BinaryUniform { rate }
            | DislocationMeasure::Deterministic { rate, .. }
            | DislocationMeasure::Dirichlet { rate, .. } => *rate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rate = self.rate();
        if !(rate > 0.0) || !rate.is_finite() {
            return domain(format!("dislocation rate must be finite and > 0, got {rate}"));
        }
        match self {
            DislocationMeasure::Deterministic { parts, .. } => {
                let sum: f64 = parts.iter().sum();
                if parts.is_empty() || parts.iter().any(|&s| !(s > 0.0 && s < 1.0)) || sum > 1.0 + 1e-12 {
                    return domain(format!("partition {parts:?} must have parts in (0,1) summing to at most 1"));
                }
            }
            DislocationMeasure::Dirichlet { k, .. } if *k < 2 => {
                return domain("Dirichlet split needs at least two parts");
            }
            _ => {}
        }
        Ok(())
    }

    /// `Σ s_i`, which is the same for every partition of each family.
    fn partition_sum(&self) -> f64 {
        match self {
            DislocationMeasure::Deterministic { parts, .. } => parts.iter().sum(),
            _ => 1.0,
        }
    }

    pub fn is_conservative(&self) -> bool {
        (self.partition_sum() - 1.0).abs() <= 1e-12
    }

    /// A partition drawn from `ν/ν(S)`, sorted non-increasing.
    pub fn sample_partition(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self {
            DislocationMeasure::BinaryUniform { .. } => {
                let u = open_unit(rng);
                let big = u.max(1.0 - u);
                vec![big, 1.0 - big]
            }
            DislocationMeasure::Deterministic { parts, .. } => parts.clone(),
            DislocationMeasure::Dirichlet { k, .. } => {
                let mut parts: Vec<f64> = (0..*k).map(|_| Exp1.sample(rng)).collect();
                let total: f64 = parts.iter().sum();
                parts.iter_mut().for_each(|p| *p /= total);
                parts.sort_by(|a, b| b.total_cmp(a));
                parts
            }
        }
    }
}

/// Subordinator of `−log` of the tagged fragment:
/// `φ(q) = cq + ∫ Σ s_i (1 − s_i^q) ν(ds)`.
///
/// The jumps are `−log` of a size-biased part, at total rate `ν(S) E[Σ s_i]`;
/// mass lost to dust, `1 − Σ s_i`, becomes killing.
pub fn dislocation_to_triplet(nu: &DislocationMeasure, erosion: f64) -> Result<LevyTriplet> {
    nu.validate()?;
    let rate = nu.rate();
    let (jump_rate, law, killing) = match nu {
        DislocationMeasure::BinaryUniform { .. } => (rate, JumpLaw::Exponential { theta: 2.0 }, 0.0),
        DislocationMeasure::Deterministic { parts, .. } => {
            let sum: f64 = parts.iter().sum();
            let atoms = parts.iter().map(|&s| (-s.ln(), s)).collect();
            (rate * sum, JumpLaw::Atoms(atoms), (rate * (1.0 - sum)).max(0.0))
        }
        DislocationMeasure::Dirichlet { k, .. } => {
            (rate, JumpLaw::NegLogBeta { alpha: 2.0, beta: *k as f64 - 1.0 }, 0.0)
        }
    };
    LevyTriplet::new(killing, erosion, JumpMeasure::FiniteJump { rate: jump_rate, law })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FragmentationConfig {
    /// Fragments lighter than this never split again.
    pub mass_floor: f64,
    /// Number of live fragments beyond which the run aborts.
    pub max_fragments: usize,
    /// Keep every fragment ever created, with its parent, for genealogy queries.
    pub record_genealogy: bool,
}

impl Default for FragmentationConfig {
    fn default() -> Self {
        FragmentationConfig {
            mass_floor: DEFAULT_MASS_FLOOR,
            max_fragments: DEFAULT_MAX_FRAGMENTS,
            record_genealogy: false,
        }
    }
}

/// A fragment alive at the observation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fragment {
    pub id: usize,
    pub mass: f64,
    pub birth: f64,
    /// Tagged points carried (tagged mode only; zero otherwise).
    pub points: u64,
    pub frozen: bool,
}

/// Genealogy entry: every fragment ever created and its parent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenealogyRecord {
    pub mass: f64,
    pub birth: f64,
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
struct Epoch(f64);

impl PartialEq for Epoch {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0) == Ordering::Equal
    }
}
impl Eq for Epoch {}
impl PartialOrd for Epoch {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Epoch {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Running simulation, advanced with [`FragmentationSim::advance_to`].
#[derive(Debug, Clone)]
pub struct FragmentationSim {
    nu: DislocationMeasure,
    config: FragmentationConfig,
    /// Total tagged points, or `None` for the full process.
    tagged: Option<u64>,
    rng: ChaCha8Rng,
    time: f64,
    slots: Vec<Option<Fragment>>,
    free: Vec<usize>,
    live: usize,
    next_id: usize,
    queue: BinaryHeap<Reverse<(Epoch, usize)>>,
    genealogy: Vec<GenealogyRecord>,
    splits: u64,
}

impl FragmentationSim {
    /// Full process. The root is split at time zero.
    pub fn new(nu: &DislocationMeasure, config: FragmentationConfig, stream: RngStream) -> Result<Self> {
        Self::build(nu, config, None, stream)
    }

    /// Only fragments holding at least one of `points` uniform tagged points.
    pub fn tagged(
        nu: &DislocationMeasure,
        points: u64,
        config: FragmentationConfig,
        stream: RngStream,
    ) -> Result<Self> {
        if points == 0 {
            return domain("tagged mode needs at least one point");
        }
        Self::build(nu, config, Some(points), stream)
    }

    fn build(
        nu: &DislocationMeasure,
        config: FragmentationConfig,
        tagged: Option<u64>,
        stream: RngStream,
    ) -> Result<Self> {
        nu.validate()?;
        if !nu.is_conservative() {
            return Err(Error::Unsupported("only conservative dislocation measures are simulated".into()));
        }
        if !(config.mass_floor >= 0.0 && config.mass_floor < 1.0) || config.max_fragments < 2 {
            return domain("mass floor must lie in [0, 1) and max_fragments be at least 2");
        }
        let mut sim = FragmentationSim {
            nu: nu.clone(),
            config,
            tagged,
            rng: stream.rng(),
            time: 0.0,
            slots: Vec::new(),
            free: Vec::new(),
            live: 0,
            next_id: 0,
            queue: BinaryHeap::new(),
            genealogy: Vec::new(),
            splits: 0,
        };
        let root = sim.insert(1.0, 0.0, tagged.unwrap_or(0), None, false);
        sim.split(root)?;
        Ok(sim)
    }

    fn insert(&mut self, mass: f64, birth: f64, points: u64, parent: Option<usize>, clock: bool) -> usize {
        let id = self.next_id;
        self.next_id += 1;
        if self.config.record_genealogy {
            self.genealogy.push(GenealogyRecord { mass, birth, parent });
        }
        let frozen = mass < self.config.mass_floor;
        let fragment = Fragment { id, mass, birth, points, frozen };
        let slot = match self.free.pop() {
            Some(s) => {
                self.slots[s] = Some(fragment);
                s
            }
            None => {
                self.slots.push(Some(fragment));
                self.slots.len() - 1
            }
        };
        self.live += 1;
        if clock && !frozen {
            let e: f64 = Exp1.sample(&mut self.rng);
            let epoch = birth + e * (-mass.ln()) / self.nu.rate();
            self.queue.push(Reverse((Epoch(epoch), slot)));
        }
        slot
    }

    fn split(&mut self, slot: usize) -> Result<()> {
        let parent = self.slots[slot].take().expect("queued fragments are alive");
        self.free.push(slot);
        self.live -= 1;
        self.splits += 1;
        let parts = self.nu.sample_partition(&mut self.rng);
        let mut remaining_points = parent.points;
        let mut remaining_mass = 1.0;
        for (i, &s) in parts.iter().enumerate() {
            let points = match self.tagged {
                None => 0,
                Some(_) if i + 1 == parts.len() => remaining_points,
                Some(_) => {
                    let p = (s / remaining_mass).clamp(0.0, 1.0);
                    let k = Binomial::new(remaining_points, p).expect("valid binomial").sample(&mut self.rng);
                    remaining_mass -= s;
                    remaining_points -= k;
                    k
                }
            };
            if self.tagged.is_some() && points == 0 {
                continue;
            }
            self.insert(parent.mass * s, self.time, points, Some(parent.id), true);
        }
        if self.live > self.config.max_fragments {
            return Err(Error::Simulation(format!(
                "{} live fragments at t = {} exceed the limit {} after {} splits",
                self.live, self.time, self.config.max_fragments, self.splits
            )));
        }
        Ok(())
    }

    /// Processes every split up to and including `t`.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        if !(t >= self.time) || !t.is_finite() {
            return domain(format!("cannot advance from {} to {t}", self.time));
        }
        while let Some(&Reverse((Epoch(epoch), slot))) = self.queue.peek() {
            if epoch > t {
                break;
            }
            self.queue.pop();
            self.time = epoch;
            self.split(slot)?;
        }
        self.time = t;
        Ok(())
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn splits(&self) -> u64 {
        self.splits
    }

    pub fn live_count(&self) -> usize {
        self.live
    }

    pub fn fragments(&self) -> impl Iterator<Item = &Fragment> + '_ {
        self.slots.iter().flatten()
    }

    /// Weight of a live fragment in mass-weighted averages: its mass, or its
    /// share of the tagged points.
    fn weight(&self, f: &Fragment) -> f64 {
        match self.tagged {
            None => f.mass,
            Some(k) => f.points as f64 / k as f64,
        }
    }

    /// `Σ F_i^{q+1}` (full mode; in tagged mode an unbiased estimate).
    pub fn moment_sum(&self, q: f64) -> f64 {
        self.fragments().map(|f| self.weight(f) * f.mass.powf(q)).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.fragments().map(|f| self.weight(f)).sum()
    }

    /// Fragment picked with probability proportional to its weight.
    pub fn size_biased_pick(&mut self) -> Option<f64> {
        let total = self.total_mass();
        let mut u = open_unit(&mut self.rng) * total;
        let mut last = None;
        for f in self.slots.iter().flatten() {
            let w = match self.tagged {
                None => f.mass,
                Some(k) => f.points as f64 / k as f64,
            };
            if u < w {
                return Some(f.mass);
            }
            u -= w;
            last = Some(f.mass);
        }
        last
    }

    /// `Σ_i w_i δ_{scale·|log F_i|}`.
    pub fn empirical_measure(&self, scale: f64) -> EmpiricalMeasure {
        EmpiricalMeasure { points: self.fragments().map(|f| (scale * -f.mass.ln(), self.weight(f))).collect() }
    }

    /// Full genealogy when `record_genealogy` was set.
    pub fn genealogy(&self) -> &[GenealogyRecord] {
        &self.genealogy
    }

    /// Time at which the lineages of two fragment ids separated: the split
    /// time of their last common ancestor.
    pub fn divergence_time(&self, a: usize, b: usize) -> Result<f64> {
        if !self.config.record_genealogy {
            return Err(Error::Unsupported("genealogy was not recorded".into()));
        }
        if a >= self.genealogy.len() || b >= self.genealogy.len() {
            return domain("unknown fragment id");
        }
        let ancestors = |mut id: usize| {
            let mut chain = vec![id];
            while let Some(p) = self.genealogy[id].parent {
                chain.push(p);
                id = p;
            }
            chain.reverse();
            chain
        };
        let (ca, cb) = (ancestors(a), ancestors(b));
        let common = ca.iter().zip(&cb).take_while(|(x, y)| x == y).count();
        if common == ca.len() || common == cb.len() {
            return domain("one fragment is an ancestor of the other");
        }
        Ok(self.genealogy[ca[common]].birth)
    }
}

/// Runs the full process up to `t_end`.
pub fn simulate_fragmentation(
    nu: &DislocationMeasure,
    t_end: f64,
    config: FragmentationConfig,
    stream: RngStream,
) -> Result<FragmentationSim> {
    let mut sim = FragmentationSim::new(nu, config, stream)?;
    sim.advance_to(t_end)?;
    Ok(sim)
}

/// Weighted point set `Σ w_i δ_{x_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    pub points: Vec<(f64, f64)>,
}

impl EmpiricalMeasure {
    pub fn total_weight(&self) -> f64 {
        self.points.iter().map(|p| p.1).sum()
    }

    pub fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        self.points.iter().filter(|p| p.0 >= lo && p.0 <= hi).map(|p| p.1).sum()
    }

    /// Weighted mean and variance, normalised by the total weight.
    pub fn mean_variance(&self) -> (f64, f64) {
        let w = self.total_weight();
        let mean = self.points.iter().map(|p| p.0 * p.1).sum::<f64>() / w;
        let var = self.points.iter().map(|p| (p.0 - mean).powi(2) * p.1).sum::<f64>() / w;
        (mean, var)
    }
}

/// `Σ F_i δ_{Φ⁻¹(1/t)|log F_i|}` at the simulation's current time.
pub fn empirical_measure(sim: &FragmentationSim, triplet: &LevyTriplet) -> Result<EmpiricalMeasure> {
    let t = sim.time();
    if !(t > 0.0) {
        return domain("empirical measure needs t > 0");
    }
    Ok(sim.empirical_measure(triplet.phi_inverse(1.0 / t)?))
}

/// `Σ F_i δ_{(|log F_i| − √(2mt)) / t^{1/4}}` at the current time.
pub fn clt_empirical(sim: &FragmentationSim, triplet: &LevyTriplet) -> Result<EmpiricalMeasure> {
    let t = sim.time();
    if !(t > 0.0) {
        return domain("CLT rescaling needs t > 0");
    }
    let center = crate::transform::clt_constants(triplet)?.center * t.sqrt();
    let scale = t.powf(-0.25);
    let mut measure = sim.empirical_measure(1.0);
    measure.points.iter_mut().for_each(|p| p.0 = (p.0 - center) * scale);
    Ok(measure)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn stream(i: u64) -> RngStream {
        RngStream::new(77, i)
    }

    #[test]
    fn triplet_exponents() {
        let bu = dislocation_to_triplet(&DislocationMeasure::binary_uniform(1.0).unwrap(), 0.0).unwrap();
        assert_relative_eq!(bu.phi(2.0).unwrap(), 0.5, max_relative = 1e-14);
        assert_eq!(bu.phi(0.0).unwrap(), 0.0);
        let half = DislocationMeasure::deterministic(1.0, vec![0.5, 0.5]).unwrap();
        assert_relative_eq!(dislocation_to_triplet(&half, 0.0).unwrap().phi(1.0).unwrap(), 0.5, max_relative = 1e-14);
        // Dust: φ(0) = κ = rate·(1 − Σs).
        let lossy = DislocationMeasure::deterministic(2.0, vec![0.5, 0.25]).unwrap();
        let t = dislocation_to_triplet(&lossy, 0.0).unwrap();
        assert_relative_eq!(t.phi(0.0).unwrap(), 0.5, max_relative = 1e-14);
        // Σ s_i(1 − s_i^q) hand value at q = 1: 0.5·0.5 + 0.25·0.75 = 0.4375, plus killing.
        assert_relative_eq!(t.phi(1.0).unwrap(), 2.0 * (0.4375 + 0.25), max_relative = 1e-14);
    }

    #[test]
    fn dirichlet_exponent_matches_monte_carlo() {
        let nu = DislocationMeasure::dirichlet(1.0, 3).unwrap();
        let t = dislocation_to_triplet(&nu, 0.0).unwrap();
        let mut rng = stream(0).rng();
        let q = 1.5;
        let n = 200_000;
        let draws: Vec<f64> =
            (0..n).map(|_| nu.sample_partition(&mut rng).iter().map(|s| s * (1.0 - s.powf(q))).sum()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let sd = (draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!((mean - t.phi(q).unwrap()).abs() < 4.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn root_splits_at_time_zero() {
        let sim = simulate_fragmentation(
            &DislocationMeasure::deterministic(1.0, vec![0.5, 0.5]).unwrap(),
            0.0,
            FragmentationConfig::default(),
            stream(1),
        )
        .unwrap();
        let masses: Vec<f64> = sim.fragments().map(|f| f.mass).collect();
        assert_eq!(masses, vec![0.5, 0.5]);
        assert_eq!(sim.moment_sum(2.0), 0.25);
        let bu = simulate_fragmentation(
            &DislocationMeasure::binary_uniform(1.0).unwrap(),
            0.0,
            FragmentationConfig::default(),
            stream(2),
        )
        .unwrap();
        let m: Vec<f64> = bu.fragments().map(|f| f.mass).collect();
        assert_eq!(m.len(), 2);
        assert!(m[0] >= m[1]);
        assert_relative_eq!(m[0] + m[1], 1.0, max_relative = 1e-15);
    }

    #[test]
    fn mass_is_conserved() {
        let nu = DislocationMeasure::dirichlet(1.0, 3).unwrap();
        let mut sim = FragmentationSim::new(&nu, FragmentationConfig::default(), stream(3)).unwrap();
        for &t in &[0.5, 2.0, 6.0] {
            sim.advance_to(t).unwrap();
            assert!((sim.total_mass() - 1.0).abs() < 1e-9);
            assert!(sim.fragments().all(|f| f.mass > 0.0 && f.mass < 1.0));
        }
        assert!(sim.splits() > 1);
    }

    #[test]
    fn mass_floor_freezes() {
        let config = FragmentationConfig { mass_floor: 0.2, ..Default::default() };
        let sim =
            simulate_fragmentation(&DislocationMeasure::binary_uniform(1.0).unwrap(), 1e6, config, stream(4)).unwrap();
        assert!(sim.fragments().all(|f| f.frozen));
        assert!((sim.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fragment_limit_is_reported() {
        let config = FragmentationConfig { max_fragments: 50, ..Default::default() };
        let err = simulate_fragmentation(&DislocationMeasure::binary_uniform(1.0).unwrap(), 1e3, config, stream(5));
        assert!(matches!(err, Err(Error::Simulation(_))));
    }

    #[test]
    fn lossy_partitions_are_not_simulated() {
        let nu = DislocationMeasure::deterministic(1.0, vec![0.5, 0.25]).unwrap();
        assert!(matches!(
            FragmentationSim::new(&nu, FragmentationConfig::default(), stream(6)),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn tagged_mode_keeps_points() {
        let nu = DislocationMeasure::binary_uniform(1.0).unwrap();
        let mut sim = FragmentationSim::tagged(&nu, 500, FragmentationConfig::default(), stream(7)).unwrap();
        sim.advance_to(20.0).unwrap();
        assert_eq!(sim.fragments().map(|f| f.points).sum::<u64>(), 500);
        assert!(sim.fragments().all(|f| f.points > 0));
        assert!((sim.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn divergence_of_siblings() {
        let config = FragmentationConfig { record_genealogy: true, ..Default::default() };
        let sim =
            simulate_fragmentation(&DislocationMeasure::binary_uniform(1.0).unwrap(), 2.0, config, stream(8)).unwrap();
        // Ids 1 and 2 are the children of the root, born at time zero.
        assert_eq!(sim.divergence_time(1, 2).unwrap(), 0.0);
        let live: Vec<usize> = sim.fragments().map(|f| f.id).collect();
        if live.len() >= 2 {
            let t = sim.divergence_time(live[0], live[1]).unwrap();
            assert!((0.0..=2.0).contains(&t));
        }
    }

    #[test]
    fn empirical_measures() {
        let nu = DislocationMeasure::deterministic(1.0, vec![0.5, 0.5]).unwrap();
        let triplet = dislocation_to_triplet(&nu, 0.0).unwrap();
        let sim = simulate_fragmentation(&nu, 1e-9, FragmentationConfig::default(), stream(9)).unwrap();
        let e = empirical_measure(&sim, &triplet).unwrap();
        assert_eq!(e.points.len(), 2);
        assert_eq!(e.points[0], e.points[1]);
        assert!((e.total_weight() - 1.0).abs() < 1e-15);
        let c = clt_empirical(&sim, &triplet).unwrap();
        assert_eq!(c.points.len(), 2);
    }
}
