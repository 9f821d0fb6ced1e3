//! Command-line flags and their merge onto a configuration file.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use wpsim_core::BootstrapKind;

use crate::config::{CampaignConfig, Kind};

pub const DEFAULT_OUT_DIR: &str = "wpsim-out";

#[derive(Debug, Parser)]
#[command(name = "wpsim", version, about = "Win-probability estimation experiments on random walk football")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a campaign and write its outputs.
    Run(CampaignArgs),
    /// Check a configuration without running it.
    Validate(CampaignArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CampaignArgs {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: Option<Kind>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Field length.
    #[arg(long = "L")]
    pub field_length: Option<u32>,
    /// Plays per game.
    #[arg(long = "T")]
    pub plays: Option<u32>,
    /// Nominal sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub zeta: Option<Vec<u64>>,
    /// Plays kept per game, comma separated.
    #[arg(long = "K", value_delimiter = ',')]
    pub keep: Option<Vec<u32>>,
    /// Bootstrap fractions, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub phi: Option<Vec<f64>>,
    /// Bootstrap schemes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub schemes: Option<Vec<BootstrapKind>>,
    /// Simulation replicates.
    #[arg(long = "M")]
    pub replicates: Option<usize>,
    /// Bootstrap replicates.
    #[arg(long = "B")]
    pub boot_replicates: Option<usize>,
    #[arg(long)]
    pub test_games: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Field position for bias-by-state.
    #[arg(long)]
    pub x: Option<u32>,
    /// Score differentials for bias-by-state, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub scores: Option<Vec<i32>>,
    /// Sizes at which to report the effective sample size.
    #[arg(long, value_delimiter = ',')]
    pub ess_at: Option<Vec<f64>>,
    /// Worker threads; all cores when unset.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, env = "WPSIM_OUT_DIR")]
    pub out: Option<PathBuf>,
    /// Allow campaigns above the cost threshold.
    #[arg(long)]
    pub full_scale: bool,
    /// Do not read or write the prediction cache.
    #[arg(long)]
    pub no_cache: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum ArgsError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
}

impl CampaignArgs {
    /// The file configuration (or defaults) with every given flag applied.
    pub fn resolve(&self) -> Result<CampaignConfig, ArgsError> {
        let mut c = match &self.config {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).map_err(|source| ArgsError::Read { path: path.clone(), source })?;
                CampaignConfig::from_toml(&text).map_err(|source| ArgsError::Parse { path: path.clone(), source })?
            }
            None => CampaignConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $field:ident),* $(,)?) => {
                $(if let Some(v) = &self.$flag { c.$field = v.clone().into(); })*
            };
        }
        set!(
            kind => kind,
            seed => seed,
            field_length => field_length,
            plays => plays,
            zeta => zeta,
            keep => keep,
            phi => phi,
            schemes => schemes,
            replicates => replicates,
            boot_replicates => boot_replicates,
            test_games => test_games,
            alpha => alpha,
            bins => bins,
            x => x,
            scores => scores,
            ess_at => ess_at,
            workers => workers,
            out => out,
        );
        c.full_scale |= self.full_scale;
        if self.no_cache {
            c.cache = false;
        }
        Ok(c)
    }

    pub fn out_dir(config: &CampaignConfig) -> PathBuf {
        config.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }
}
