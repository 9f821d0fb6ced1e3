//! Replicate campaigns: bias/variance of the fitted estimator against the
//! oracle, and bootstrap interval coverage.
//!
//! Every replicate's randomness descends from the campaign's master seed:
//!
//! * test set `m`: `master.branch("test").child(m)`;
//! * training replicate `m` of a `(G, K)` cell:
//!   `master.branch("train").branch("G/K").child(m)`, split into `"data"` and
//!   `"fit"` branches;
//! * bootstrap ensembles: the replicate seed's `"boot"` branch, then the
//!   scheme name and fraction.
//!
//! Seeds depend on cell parameters, not on position in a grid, so adding
//! cells never perturbs existing results.

mod bias_variance;
mod coverage;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bias_variance::{
    bias_by_state, bias_by_state_from_matrix, bias_variance, bias_variance_from_matrix, state_grid, StateBias,
};
pub use coverage::{run_coverage, SchemeCoverage};

use crate::bootstrap::BootstrapError;
use crate::data::{generate_dataset, generate_test_sets, DataError, DatasetSpec, PlayDataset};
use crate::game::{GameConfig, GameState};
use crate::gbt::{self, BoostConfig, FitError};
use crate::oracle::{OracleError, WpTable};
use crate::seed::Seed;
use crate::stats::MeanSe;
use crate::WinProbability;

/// Out-of-sample test games per test set.
pub const DEFAULT_TEST_GAMES: u64 = 10_000;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("need at least 2 replicates, got {0}")]
    TooFewReplicates(usize),
    #[error("{0} models for {1} test sets")]
    Misaligned(usize, usize),
    #[error("no prediction for state {0:?}")]
    MissingState(GameState),
    #[error("empty grid")]
    EmptyGrid,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("replicate {replicate}: {source}")]
    Fit { replicate: usize, source: FitError },
    #[error("replicate {replicate}: {source}")]
    Bootstrap { replicate: usize, source: BootstrapError },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub m: usize,
    pub bias_sq: f64,
    pub variance: f64,
    pub rmse: f64,
}

/// One training configuration in a campaign.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    /// Label of the dataset family the cell belongs to.
    pub family: String,
    /// Nominal size index.
    pub zeta: u64,
    /// `G`.
    pub games: u64,
    /// `K`.
    pub keep: u32,
}

impl Cell {
    /// Constant nominal size `zeta * T`: `G = round(zeta * T / K)`.
    pub fn nominal(config: &GameConfig, zeta: u64, keep: u32) -> Result<Self, DataError> {
        let spec = DatasetSpec::with_nominal_size(*config, zeta, keep)?;
        Ok(Cell { family: "nominal".into(), zeta, games: spec.games, keep })
    }

    /// The three families compared at each `zeta`: `(G=zeta, K=1)`,
    /// `(G=zeta, K=T)` and `(G=zeta*T, K=1)`.
    pub fn families(config: &GameConfig, zeta: u64) -> [Cell; 3] {
        let t = config.plays();
        [
            Cell { family: "g_zeta_k1".into(), zeta, games: zeta, keep: 1 },
            Cell { family: "g_zeta_kT".into(), zeta, games: zeta, keep: t },
            Cell { family: "g_zetaT_k1".into(), zeta, games: zeta * u64::from(t), keep: 1 },
        ]
    }

    pub fn spec(&self, config: &GameConfig) -> Result<DatasetSpec, DataError> {
        DatasetSpec::with_games(*config, self.games, self.keep)
    }

    pub fn seed(&self, master: Seed) -> Seed {
        master.branch("train").branch(&format!("{}/{}", self.games, self.keep))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub cell: Cell,
    pub field_length: u32,
    pub plays: u32,
    pub grid: Vec<BoostConfig>,
    pub bias_sq: MeanSe,
    pub variance: MeanSe,
    pub rmse: MeanSe,
    pub replicates: Vec<ReplicateResult>,
}

impl ExperimentReport {
    pub fn new(cell: Cell, config: &GameConfig, grid: &[BoostConfig], replicates: Vec<ReplicateResult>) -> Self {
        let col = |f: fn(&ReplicateResult) -> f64| MeanSe::of(&replicates.iter().map(f).collect::<Vec<_>>());
        ExperimentReport {
            cell,
            field_length: config.field_length(),
            plays: config.plays(),
            grid: grid.to_vec(),
            bias_sq: col(|r| r.bias_sq),
            variance: col(|r| r.variance),
            rmse: col(|r| r.rmse),
            replicates,
        }
    }
}

/// Predictions of `M` models (rows) at a fixed list of states (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionMatrix {
    pub states: Vec<GameState>,
    pub values: Vec<Vec<f64>>,
}

impl PredictionMatrix {
    pub fn from_models<M: WinProbability + Sync>(models: &[M], states: Vec<GameState>) -> Self {
        let values = models
            .par_iter()
            .map(|m| states.iter().map(|s| m.win_probability(s)).collect())
            .collect();
        PredictionMatrix { states, values }
    }

    pub fn models(&self) -> usize {
        self.values.len()
    }

    /// Column of `state`, if the states are sorted (as produced by
    /// [`union_states`]).
    pub fn column(&self, state: &GameState) -> Option<usize> {
        self.states.binary_search(state).ok()
    }
}

/// Sorted, deduplicated states across datasets.
pub fn union_states<'a, I: IntoIterator<Item = &'a PlayDataset>>(sets: I) -> Vec<GameState> {
    let mut all = BTreeSet::new();
    for d in sets {
        all.extend(d.rows.iter().map(|r| r.state()));
    }
    all.into_iter().collect()
}

/// Storage for prediction matrices keyed by a canonical description of how
/// they were produced. Implementations decide how to hash and persist.
pub trait MatrixStore: Sync {
    fn load(&self, key: &str) -> Option<PredictionMatrix>;
    fn store(&self, key: &str, matrix: &PredictionMatrix);
}

/// A store that never remembers anything.
pub struct NoStore;

impl MatrixStore for NoStore {
    fn load(&self, _: &str) -> Option<PredictionMatrix> {
        None
    }
    fn store(&self, _: &str, _: &PredictionMatrix) {}
}

/// Shared inputs of one campaign: oracle, master seed, estimator grid, the
/// `M` test sets and the states the models are evaluated on.
pub struct CampaignContext<'a> {
    pub table: &'a WpTable,
    pub master: Seed,
    pub grid: Vec<BoostConfig>,
    pub replicates: usize,
    pub test_games: u64,
    pub tests: Vec<PlayDataset>,
    pub states: Vec<GameState>,
}

impl<'a> CampaignContext<'a> {
    /// Draw the test sets from `master.branch("test")`; the evaluation states
    /// are their union plus `extra_states`.
    pub fn new(
        table: &'a WpTable,
        master: Seed,
        grid: Vec<BoostConfig>,
        replicates: usize,
        test_games: u64,
        extra_states: &[GameState],
    ) -> Result<Self, ExperimentError> {
        if replicates < 2 {
            return Err(ExperimentError::TooFewReplicates(replicates));
        }
        if grid.is_empty() {
            return Err(ExperimentError::EmptyGrid);
        }
        let tests = generate_test_sets(replicates, test_games, table, master.branch("test"))?;
        let mut states = union_states(&tests);
        states.extend_from_slice(extra_states);
        states.sort_unstable();
        states.dedup();
        Ok(CampaignContext { table, master, grid, replicates, test_games, tests, states })
    }

    pub fn config(&self) -> &GameConfig {
        self.table.config()
    }

    /// Canonical description of everything that determines a cell's
    /// prediction matrix.
    pub fn cell_key(&self, cell: &Cell) -> String {
        let grid = serde_json::to_string(&self.grid).expect("grid serializes");
        format!(
            "bias-variance;L={};T={};seed={};M={};test_games={};states={};G={};K={};grid={}",
            self.config().field_length(),
            self.config().plays(),
            self.master,
            self.replicates,
            self.test_games,
            state_digest(&self.states),
            cell.games,
            cell.keep,
            grid
        )
    }

    /// Fit the `M` replicates of `cell` and predict at [`Self::states`].
    pub fn predict_cell(&self, cell: &Cell) -> Result<PredictionMatrix, ExperimentError> {
        let spec = cell.spec(self.config())?;
        let root = cell.seed(self.master);
        let rows: Result<Vec<Vec<f64>>, ExperimentError> = (0..self.replicates)
            .into_par_iter()
            .map(|m| {
                let rs = root.child(m as u64);
                let data = generate_dataset(&spec, self.table, rs.branch("data"))?;
                let (_, model) = gbt::fit_tuned(&data, &self.grid, rs.branch("fit"))
                    .map_err(|source| ExperimentError::Fit { replicate: m, source })?;
                Ok(self.states.iter().map(|s| model.win_probability(s)).collect())
            })
            .collect();
        Ok(PredictionMatrix { states: self.states.clone(), values: rows? })
    }

    /// [`Self::predict_cell`] through a store.
    pub fn cell_matrix(&self, cell: &Cell, store: &dyn MatrixStore) -> Result<PredictionMatrix, ExperimentError> {
        let key = self.cell_key(cell);
        if let Some(m) = store.load(&key) {
            if m.states == self.states && m.models() == self.replicates {
                return Ok(m);
            }
        }
        let m = self.predict_cell(cell)?;
        store.store(&key, &m);
        Ok(m)
    }

    pub fn report(&self, cell: &Cell, matrix: &PredictionMatrix) -> Result<ExperimentReport, ExperimentError> {
        let reps = bias_variance_from_matrix(matrix, &self.tests)?;
        Ok(ExperimentReport::new(cell.clone(), self.config(), &self.grid, reps))
    }
}

fn state_digest(states: &[GameState]) -> String {
    let mut bytes = Vec::with_capacity(states.len() * 12);
    for s in states {
        bytes.extend_from_slice(&s.t.to_le_bytes());
        bytes.extend_from_slice(&s.x.to_le_bytes());
        bytes.extend_from_slice(&s.s.to_le_bytes());
    }
    format!("{}:{:016x}", states.len(), crate::seed::fnv1a(&bytes))
}

/// Bias/variance reports for every cell, sharing one set of test sets.
pub fn run_campaign(
    ctx: &CampaignContext<'_>,
    cells: &[Cell],
    store: &dyn MatrixStore,
) -> Result<Vec<ExperimentReport>, ExperimentError> {
    if cells.is_empty() {
        return Err(ExperimentError::EmptyGrid);
    }
    cells
        .iter()
        .map(|cell| {
            let matrix = ctx.cell_matrix(cell, store)?;
            ctx.report(cell, &matrix)
        })
        .collect()
}
