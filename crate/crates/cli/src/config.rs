//! Run configuration: one TOML file per run, with flags layered on top.
//!
//! ```toml
//! command = "laplace"
//! seed = 7
//!
//! [triplet]
//! family = "exponential"
//! rate = 1.0
//! theta = 1.0
//!
//! [params]
//! q = [1.0, 2.0]
//! t = [1.0, 5.0, 20.0]
//! ```

use crate::error::{CliError, Context};
use fraglog_core::fragmentation::DislocationMeasure;
use fraglog_core::inversion::{InversionMode, DEFAULT_STEHFEST_ORDER};
use fraglog_core::{JumpLaw, JumpMeasure, LevyTriplet, MeasureV};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    #[default]
    Laplace,
    Asymptotic,
    Dgamma,
    Measure,
    Simulate,
    Fragsim,
    Disk,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Laplace => "laplace",
            Command::Asymptotic => "asymptotic",
            Command::Dgamma => "dgamma",
            Command::Measure => "measure",
            Command::Simulate => "simulate",
            Command::Fragsim => "fragsim",
            Command::Disk => "disk",
            Command::Verify => "verify",
        }
    }
}

/// Jump-measure family of the subordinator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Canonical stable, `φ(q) = (γ+1) q^γ`.
    #[default]
    Stable,
    /// Compound Poisson with `Exp(θ)` jumps.
    Exponential,
    /// Compound Poisson with jumps of size `x0`.
    Constant,
    /// Compound Poisson with `Uniform(0, b)` jumps.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    /// Closed form for the canonical stable family, inversion otherwise.
    #[default]
    Auto,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripletSection {
    #[serde(default)]
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default)]
    pub killing: f64,
    #[serde(default)]
    pub drift: f64,
    #[serde(default)]
    pub mode: ModeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DislocationKind {
    #[default]
    BinaryUniform,
    Deterministic,
    Dirichlet,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DislocationSection {
    #[serde(default)]
    pub kind: DislocationKind,
    #[serde(default = "one")]
    pub rate: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parts: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

impl Default for DislocationSection {
    fn default() -> Self {
        DislocationSection { kind: DislocationKind::default(), rate: 1.0, parts: Vec::new(), k: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    #[default]
    Fast,
    Full,
}

/// What a simulation command writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    /// Monte Carlo estimates next to the exact values (for `disk`, mean deficits).
    #[serde(alias = "deficits")]
    #[value(alias = "deficits")]
    Summary,
    /// Raw samples, one row per path and time.
    Samples,
    /// Live fragments of the first run.
    Fragments,
    /// Rescaled empirical measure of the first run.
    Empirical,
    /// Boundary hits of every disk path.
    Hits,
    /// Narrow-escape survival curve.
    Survival,
    /// Trajectory hull perimeter against the chord perimeter of the hits.
    Hull,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub q: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub t: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lambda: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub x: Vec<f64>,
    /// Index of regular variation used by the asymptotic formula.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<Suite>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emit: Option<Emit>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    /// Worker threads; 0 lets the pool pick.
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub triplet: TripletSection,
    #[serde(default)]
    pub dislocation: DislocationSection,
    #[serde(default)]
    pub params: Params,
}

fn require(value: Option<f64>, key: &str) -> Result<f64, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("missing key `triplet.{key}`")))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {}", e.message().trim())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configs always serialize")
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn build_triplet(&self) -> Result<LevyTriplet, CliError> {
        let s = &self.triplet;
        let jumps = match s.family {
            Family::Stable => JumpMeasure::StableTail { gamma: require(s.gamma, "gamma")? },
            Family::Exponential => JumpMeasure::FiniteJump {
                rate: require(s.rate, "rate")?,
                law: JumpLaw::Exponential { theta: require(s.theta, "theta")? },
            },
            Family::Constant => JumpMeasure::FiniteJump {
                rate: require(s.rate, "rate")?,
                law: JumpLaw::Constant { x0: require(s.x0, "x0")? },
            },
            Family::Uniform => JumpMeasure::FiniteJump {
                rate: require(s.rate, "rate")?,
                law: JumpLaw::Uniform { b: require(s.b, "b")? },
            },
        };
        LevyTriplet::new(s.killing, s.drift, jumps).context("triplet")
    }

    pub fn build_measure(&self) -> Result<MeasureV, CliError> {
        let triplet = self.build_triplet()?;
        let order = self.triplet.order.unwrap_or(DEFAULT_STEHFEST_ORDER);
        Ok(match self.triplet.mode {
            ModeKind::Auto if triplet.canonical_stable_index().is_some() => MeasureV::new(triplet),
            _ => MeasureV::with_mode(triplet, InversionMode::NumericInversion { order }),
        })
    }

    pub fn build_dislocation(&self) -> Result<DislocationMeasure, CliError> {
        let d = &self.dislocation;
        match d.kind {
            DislocationKind::BinaryUniform => DislocationMeasure::binary_uniform(d.rate),
            DislocationKind::Deterministic => DislocationMeasure::deterministic(d.rate, d.parts.clone()),
            DislocationKind::Dirichlet => {
                let k = d.k.ok_or_else(|| CliError::Usage("missing key `dislocation.k`".into()))?;
                DislocationMeasure::dirichlet(d.rate, k)
            }
        }
        .context("dislocation")
    }
}
