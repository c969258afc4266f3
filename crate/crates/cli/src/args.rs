use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use topowalk::evolution::Metric;
use topowalk::experiments::WalkKind;
use topowalk::Result;

use crate::angle::{parse_angle, parse_range};
use crate::commands::{Command, RunManifest};
use crate::config::{FileConfig, Params};

#[derive(Debug, Parser)]
#[command(name = "topowalk", version, about = "Split-step quantum walk search on a triangular lattice")]
pub struct Cli {
    #[command(subcommand)]
    pub action: Action,
}

#[derive(Debug, Subcommand)]
pub enum Action {
    /// Defect probability P_def(t) for t = 0..=T.
    Evolve(Flags),
    /// Max defect probability over a grid of bulk angles.
    SweepWalker(Flags),
    /// Max defect probability over a grid of defect angles.
    SweepDefect(Flags),
    /// Max probability and overlap sums along a line of defect theta1.
    Overlap(Flags),
    /// Search time and peak height against lattice size.
    Scaling(Flags),
    /// Eigenphases and overlap products of the defected step (L <= 48).
    Spectrum(Flags),
    /// Clean-lattice quasi-energies on a momentum grid.
    Dispersion(Flags),
    /// Quasi-energy gaps at 0 and pi over a grid of bulk angles.
    Gapmap(Flags),
    /// Chern numbers over a grid of bulk angles.
    Chern(Flags),
    /// Quenched-disorder ensemble of defect probability series.
    Disorder(Flags),
    /// Classical t/N and the marked square-lattice walk.
    Baseline(Flags),
    /// Rerun the command recorded in a JSON manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML file with [lattice], [walker], [defect], [run], [grid], [disorder] sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Linear lattice size; N = L^2.
    #[arg(long = "L")]
    pub size: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Bulk angles, radians or multiples of pi such as 5pi/8.
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    pub theta1: Option<f64>,
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    pub theta2: Option<f64>,
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    pub def_theta1: Option<f64>,
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    pub def_theta2: Option<f64>,
    /// site-density or coherent-sum.
    #[arg(long)]
    pub metric: Option<Metric>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Points per grid axis.
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Axis range as `lo,hi`, e.g. `-pi,pi`.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub theta1_range: Option<[f64; 2]>,
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub theta2_range: Option<[f64; 2]>,
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub def_theta1_range: Option<[f64; 2]>,
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub def_theta2_range: Option<[f64; 2]>,
    /// Comma-separated ascending sizes.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Momenta per axis for band calculations.
    #[arg(long)]
    pub k_resolution: Option<usize>,
    /// Disorder half-width in radians.
    #[arg(long)]
    pub theta_dis: Option<f64>,
    #[arg(long)]
    pub n_configs: Option<usize>,
    #[arg(long, value_parser = parse_walk)]
    pub walk: Option<WalkKind>,
}

fn parse_walk(s: &str) -> std::result::Result<WalkKind, String> {
    match s {
        "topological" => Ok(WalkKind::Topological),
        "non-topological" => Ok(WalkKind::NonTopological),
        _ => Err(format!("expected topological or non-topological, got `{s}`")),
    }
}

impl Flags {
    fn params(&self) -> Params {
        Params {
            size: self.size,
            steps: self.steps,
            theta1: self.theta1,
            theta2: self.theta2,
            def_theta1: self.def_theta1,
            def_theta2: self.def_theta2,
            metric: self.metric,
            seed: self.seed,
            resolution: self.resolution,
            theta1_range: self.theta1_range,
            theta2_range: self.theta2_range,
            def_theta1_range: self.def_theta1_range,
            def_theta2_range: self.def_theta2_range,
            sizes: self.sizes.clone(),
            k_resolution: self.k_resolution,
            theta_dis: self.theta_dis,
            n_configs: self.n_configs,
            walk: self.walk,
        }
    }

    /// File values first, then flags on top.
    pub fn resolve(&self) -> Result<Params> {
        let base = match &self.config {
            Some(path) => FileConfig::load(path)?,
            None => Params::default(),
        };
        Ok(base.overridden_by(&self.params()))
    }
}

/// A fully resolved request.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub params: Params,
    pub out: PathBuf,
}

impl Action {
    pub fn resolve(&self) -> Result<Invocation> {
        let (command, flags) = match self {
            Action::Evolve(f) => (Command::Evolve, f),
            Action::SweepWalker(f) => (Command::SweepWalker, f),
            Action::SweepDefect(f) => (Command::SweepDefect, f),
            Action::Overlap(f) => (Command::Overlap, f),
            Action::Scaling(f) => (Command::Scaling, f),
            Action::Spectrum(f) => (Command::Spectrum, f),
            Action::Dispersion(f) => (Command::Dispersion, f),
            Action::Gapmap(f) => (Command::Gapmap, f),
            Action::Chern(f) => (Command::Chern, f),
            Action::Disorder(f) => (Command::Disorder, f),
            Action::Baseline(f) => (Command::Baseline, f),
            Action::Replay { manifest, out } => {
                let m = RunManifest::load(manifest)?;
                return Ok(Invocation { command: m.command, params: m.params, out: out.clone() });
            }
        };
        Ok(Invocation { command, params: flags.resolve()?, out: flags.out.clone() })
    }
}
