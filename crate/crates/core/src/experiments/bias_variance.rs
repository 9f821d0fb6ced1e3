//! Squared bias, variance and RMSE of replicate fits against the oracle.

use serde::{Deserialize, Serialize};

use super::{ExperimentError, PredictionMatrix, ReplicateResult};
use crate::data::PlayDataset;
use crate::game::GameState;
use crate::oracle::WpTable;
use crate::stats::MeanSe;
use crate::WinProbability;

/// Per replicate `m`, over the rows `x` of test set `m`:
/// `bias2_m = mean (wp(x) - p_m(x))^2` and
/// `var_m = mean (p_m(x) - mean_j p_j(x))^2`, the inner mean taken over all
/// `M` models. `models[m]` is paired with `tests[m]`.
pub fn bias_variance<M: WinProbability + Sync>(
    models: &[M],
    tests: &[PlayDataset],
) -> Result<Vec<ReplicateResult>, ExperimentError> {
    let states = super::union_states(tests);
    bias_variance_from_matrix(&PredictionMatrix::from_models(models, states), tests)
}

/// [`bias_variance`] on cached predictions. The matrix states must be sorted
/// and cover every test row.
pub fn bias_variance_from_matrix(
    matrix: &PredictionMatrix,
    tests: &[PlayDataset],
) -> Result<Vec<ReplicateResult>, ExperimentError> {
    let m_count = matrix.models();
    if m_count < 2 {
        return Err(ExperimentError::TooFewReplicates(m_count));
    }
    if m_count != tests.len() {
        return Err(ExperimentError::Misaligned(m_count, tests.len()));
    }
    // Shifted by the first model's value so identical predictions give an
    // exactly zero spread.
    let centre: Vec<f64> = (0..matrix.states.len())
        .map(|k| {
            let p0 = matrix.values[0][k];
            p0 + matrix.values.iter().map(|row| row[k] - p0).sum::<f64>() / m_count as f64
        })
        .collect();
    tests
        .iter()
        .enumerate()
        .map(|(m, test)| {
            let (mut b2, mut var) = (0.0, 0.0);
            for r in &test.rows {
                let st = r.state();
                let k = matrix.column(&st).ok_or(ExperimentError::MissingState(st))?;
                let p = matrix.values[m][k];
                b2 += (r.true_wp - p).powi(2);
                var += (p - centre[k]).powi(2);
            }
            let n = test.len() as f64;
            let (bias_sq, variance) = (b2 / n, var / n);
            Ok(ReplicateResult { m, bias_sq, variance, rmse: (bias_sq + variance).sqrt() })
        })
        .collect()
}

/// Signed bias `mean_m (p_m - wp)` at one state, with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateBias {
    pub state: GameState,
    pub bias: MeanSe,
}

/// Signed bias over the `(t, s)` grid at field position `x`.
pub fn bias_by_state<M: WinProbability + Sync>(
    models: &[M],
    table: &WpTable,
    x: u32,
    times: &[u32],
    scores: &[i32],
) -> Result<Vec<StateBias>, ExperimentError> {
    let states = state_grid(x, times, scores);
    for st in &states {
        table.lookup_state(st)?;
    }
    let matrix = PredictionMatrix::from_models(models, states.clone());
    bias_by_state_from_matrix(&matrix, table, &states)
}

/// Grid states in `(t, s)` order at field position `x`.
pub fn state_grid(x: u32, times: &[u32], scores: &[i32]) -> Vec<GameState> {
    times.iter().flat_map(|&t| scores.iter().map(move |&s| GameState::new(t, x, s))).collect()
}

/// [`bias_by_state`] on cached predictions at `states`.
pub fn bias_by_state_from_matrix(
    matrix: &PredictionMatrix,
    table: &WpTable,
    states: &[GameState],
) -> Result<Vec<StateBias>, ExperimentError> {
    states
        .iter()
        .map(|st| {
            let truth = table.lookup_state(st)?;
            let k = matrix
                .states
                .iter()
                .position(|s| s == st)
                .ok_or(ExperimentError::MissingState(*st))?;
            let diffs: Vec<f64> = matrix.values.iter().map(|row| row[k] - truth).collect();
            Ok(StateBias { state: *st, bias: MeanSe::of(&diffs) })
        })
        .collect()
}
