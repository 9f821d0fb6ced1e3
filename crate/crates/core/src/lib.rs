//! Win-probability estimation laboratory built on random walk football.
//!
//! * [`game`] simulates the toy sport and [`oracle`] computes its exact win
//!   probability table.
//! * [`data`] draws play-by-play datasets whose rows are clustered into games
//!   sharing one outcome.
//! * [`gbt`] fits the boosted-tree estimator.
//! * [`experiments`] measures bias, variance and interval coverage over many
//!   replicates, [`bootstrap`] builds the resampling intervals and [`ess`]
//!   turns accuracy curves into effective sample sizes.

pub mod bootstrap;
pub mod data;
pub mod ess;
pub mod experiments;
pub mod game;
pub mod gbt;
pub mod oracle;
pub mod seed;
pub mod stats;

pub use bootstrap::{BootstrapKind, BootstrapScheme, CoverageReport, IntervalSet};
pub use data::{DatasetSpec, PlayDataset, PlayRow};
pub use ess::{BiexpFit, EssResult};
pub use experiments::{ExperimentReport, ReplicateResult};
pub use game::{GameConfig, GameState, GameTrace, Step};
pub use gbt::{BoostConfig, BoostedModel};
pub use oracle::WpTable;
pub use seed::Seed;

/// Anything that maps a game-state to a win probability for team one.
pub trait WinProbability {
    fn win_probability(&self, state: &GameState) -> f64;
}

impl<F: Fn(&GameState) -> f64> WinProbability for F {
    fn win_probability(&self, state: &GameState) -> f64 {
        self(state)
    }
}

impl WinProbability for WpTable {
    /// Panics outside the table domain.
    fn win_probability(&self, state: &GameState) -> f64 {
        self.lookup_state(state).expect("state inside oracle domain")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Game(#[from] game::GameError),
    #[error(transparent)]
    Oracle(#[from] oracle::OracleError),
    #[error(transparent)]
    Data(#[from] data::DataError),
    #[error(transparent)]
    Fit(#[from] gbt::FitError),
    #[error(transparent)]
    Ess(#[from] ess::EssError),
    #[error(transparent)]
    Bootstrap(#[from] bootstrap::BootstrapError),
    #[error(transparent)]
    Experiment(#[from] experiments::ExperimentError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
