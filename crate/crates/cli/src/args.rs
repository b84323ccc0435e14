//! Command-line flags. Each subcommand starts from `--config` (or defaults)
//! and overrides whatever keys were given on the command line.

use crate::config::{Command, DislocationKind, Emit, Family, ModeKind, RunConfig, Suite};
use crate::error::CliError;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "fraglog", version, about = "Fragmentation with |log m|^-1 splitting rates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Run whatever command the `--config` file names.
    Run {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Exact Laplace transform of xi_rho(t) by both integration routes.
    Laplace(TransformArgs),
    /// Exact transform against its large-time equivalent.
    Asymptotic {
        #[command(flatten)]
        inner: TransformArgs,
        /// Index of regular variation of phi at 0.
        #[arg(long)]
        declared_gamma: Option<f64>,
    },
    /// Laplace transform of the stationary law D(gamma).
    Dgamma {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        lambda: Vec<f64>,
    },
    /// V([0, x]) and L((x, infinity)).
    Measure {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        triplet: TripletArgs,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        x: Vec<f64>,
    },
    /// Monte Carlo xi_rho(t) against the exact transform.
    Simulate {
        #[command(flatten)]
        inner: TransformArgs,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long, value_enum)]
        emit: Option<Emit>,
    },
    /// Fragmentation simulation and its moment identity.
    Fragsim {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        dislocation: DislocationArgs,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        q: Vec<f64>,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        t: Vec<f64>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        mass_floor: Option<f64>,
        #[arg(long, value_enum)]
        emit: Option<Emit>,
    },
    /// Reflected Brownian motion in the unit disk.
    Disk {
        #[command(flatten)]
        common: CommonArgs,
        /// Euler time step.
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, alias = "T")]
        horizon: Option<f64>,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        t: Vec<f64>,
        /// Target abscissa for the survival curve.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        x: Vec<f64>,
        #[arg(long, value_enum)]
        emit: Option<Emit>,
    },
    /// Run the acceptance matrix.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        suite: Option<Suite>,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML run configuration; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV destination (stdout when absent).
    #[arg(long)]
    pub output: Option<String>,
    /// Worker threads (0 = automatic).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TripletArgs {
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Jump rate of a compound Poisson family.
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub x0: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub killing: Option<f64>,
    #[arg(long)]
    pub drift: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeKind>,
    /// Gaver–Stehfest order.
    #[arg(long)]
    pub order: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub triplet: TripletArgs,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub q: Vec<f64>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub t: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct DislocationArgs {
    #[arg(long = "dislocation", value_enum)]
    pub kind: Option<DislocationKind>,
    /// Total rate of the dislocation measure.
    #[arg(long = "split-rate")]
    pub rate: Option<f64>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub parts: Vec<f64>,
    #[arg(long)]
    pub k: Option<usize>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

fn set_vec(slot: &mut Vec<f64>, value: Vec<f64>) {
    if !value.is_empty() {
        *slot = value;
    }
}

impl CommonArgs {
    fn base(&self, command: Command) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        cfg.command = command;
        self.apply(&mut cfg);
        Ok(cfg)
    }

    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.seed, self.seed);
        set_opt(&mut cfg.output, self.output.clone());
        set(&mut cfg.threads, self.threads);
    }
}

impl TripletArgs {
    fn apply(self, cfg: &mut RunConfig) {
        let s = &mut cfg.triplet;
        set(&mut s.family, self.family);
        set_opt(&mut s.gamma, self.gamma);
        set_opt(&mut s.rate, self.rate);
        set_opt(&mut s.theta, self.theta);
        set_opt(&mut s.x0, self.x0);
        set_opt(&mut s.b, self.b);
        set(&mut s.killing, self.killing);
        set(&mut s.drift, self.drift);
        set(&mut s.mode, self.mode);
        set_opt(&mut s.order, self.order);
    }
}

impl TransformArgs {
    fn config(self, command: Command) -> Result<RunConfig, CliError> {
        let mut cfg = self.common.base(command)?;
        self.triplet.apply(&mut cfg);
        set_vec(&mut cfg.params.q, self.q);
        set_vec(&mut cfg.params.t, self.t);
        Ok(cfg)
    }
}

impl Sub {
    /// Resolves the subcommand and its flags into a complete run configuration.
    pub fn into_config(self) -> Result<RunConfig, CliError> {
        Ok(match self {
            Sub::Run { common } => {
                let path = common.config.as_ref().ok_or_else(|| CliError::Usage("`run` needs --config".into()))?;
                let mut cfg = RunConfig::load(path)?;
                common.apply(&mut cfg);
                cfg
            }
            Sub::Laplace(inner) => inner.config(Command::Laplace)?,
            Sub::Asymptotic { inner, declared_gamma } => {
                let mut cfg = inner.config(Command::Asymptotic)?;
                set_opt(&mut cfg.params.declared_gamma, declared_gamma);
                cfg
            }
            Sub::Dgamma { common, gamma, lambda } => {
                let mut cfg = common.base(Command::Dgamma)?;
                set_opt(&mut cfg.triplet.gamma, gamma);
                set_vec(&mut cfg.params.lambda, lambda);
                cfg
            }
            Sub::Measure { common, triplet, x } => {
                let mut cfg = common.base(Command::Measure)?;
                triplet.apply(&mut cfg);
                set_vec(&mut cfg.params.x, x);
                cfg
            }
            Sub::Simulate { inner, paths, emit } => {
                let mut cfg = inner.config(Command::Simulate)?;
                set_opt(&mut cfg.params.paths, paths);
                set_opt(&mut cfg.params.emit, emit);
                cfg
            }
            Sub::Fragsim { common, dislocation, q, t, runs, mass_floor, emit } => {
                let mut cfg = common.base(Command::Fragsim)?;
                let d = &mut cfg.dislocation;
                set(&mut d.kind, dislocation.kind);
                set(&mut d.rate, dislocation.rate);
                set_vec(&mut d.parts, dislocation.parts);
                set_opt(&mut d.k, dislocation.k);
                set_vec(&mut cfg.params.q, q);
                set_vec(&mut cfg.params.t, t);
                set_opt(&mut cfg.params.runs, runs);
                set_opt(&mut cfg.params.mass_floor, mass_floor);
                set_opt(&mut cfg.params.emit, emit);
                cfg
            }
            Sub::Disk { common, h, horizon, paths, t, x, emit } => {
                let mut cfg = common.base(Command::Disk)?;
                set_opt(&mut cfg.params.h, h);
                set_opt(&mut cfg.params.horizon, horizon);
                set_opt(&mut cfg.params.paths, paths);
                set_vec(&mut cfg.params.t, t);
                set_vec(&mut cfg.params.x, x);
                set_opt(&mut cfg.params.emit, emit);
                cfg
            }
            Sub::Verify { common, suite } => {
                let mut cfg = common.base(Command::Verify)?;
                set_opt(&mut cfg.params.suite, suite);
                cfg
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> RunConfig {
        Cli::try_parse_from(args).unwrap().command.into_config().unwrap()
    }

    #[test]
    fn flags_fill_the_config() {
        let cfg = parse(&["fraglog", "laplace", "--family", "stable", "--gamma", "1", "--q", "1,2", "--t", "4"]);
        assert_eq!(cfg.command, Command::Laplace);
        assert_eq!(cfg.triplet.gamma, Some(1.0));
        assert_eq!(cfg.params.q, vec![1.0, 2.0]);
        assert_eq!(cfg.params.t, vec![4.0]);
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("fraglog-args-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.toml");
        std::fs::write(&path, "seed = 5\n[triplet]\nfamily = \"exponential\"\nrate = 1.0\ntheta = 2.0\n").unwrap();
        let p = path.to_str().unwrap();
        let cfg = parse(&["fraglog", "simulate", "--config", p, "--theta", "3", "--paths", "10"]);
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.triplet.theta, Some(3.0));
        assert_eq!(cfg.triplet.rate, Some(1.0));
        assert_eq!(cfg.params.paths, Some(10));
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn command_line_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn bad_flag_is_rejected() {
        assert!(Cli::try_parse_from(["fraglog", "dgamma", "--gama", "1"]).is_err());
    }
}
