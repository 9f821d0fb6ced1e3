//! Coverage and width of bootstrap intervals over replicate training sets.

use rayon::prelude::*;

use super::{CampaignContext, Cell, ExperimentError, MatrixStore, PredictionMatrix};
use crate::bootstrap::{self, BootstrapScheme, CoverageReport, CoverageSample, IntervalSet};
use crate::data::generate_dataset;
use crate::gbt;

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeCoverage {
    pub scheme: BootstrapScheme,
    pub report: CoverageReport,
    /// Intervals of simulation `m` over the states of test set `m`.
    pub intervals: Vec<IntervalSet>,
}

/// For each replicate `m`: draw the training set of `train`, fit the point
/// model, then for each scheme fit a bootstrap ensemble and score its
/// `1 - alpha` intervals on test set `m`.
pub fn run_coverage(
    ctx: &CampaignContext<'_>,
    train: &Cell,
    schemes: &[BootstrapScheme],
    alpha: f64,
    store: &dyn MatrixStore,
) -> Result<Vec<SchemeCoverage>, ExperimentError> {
    if schemes.is_empty() {
        return Err(ExperimentError::EmptyGrid);
    }
    for s in schemes {
        s.validate().map_err(|source| ExperimentError::Bootstrap { replicate: 0, source })?;
    }
    let spec = train.spec(ctx.config())?;
    let root = train.seed(ctx.master);
    let base_key = ctx.cell_key(train);
    let per_m: Vec<Vec<IntervalSet>> = (0..ctx.replicates)
        .into_par_iter()
        .map(|m| {
            let rs = root.child(m as u64);
            let test = &ctx.tests[m];
            let states = test.unique_states();
            let data = generate_dataset(&spec, ctx.table, rs.branch("data"))?;
            let point_key = format!("{base_key};point;m={m}");
            let point = cached(store, &point_key, &states, 1, || {
                let (_, model) = gbt::fit_tuned(&data, &ctx.grid, rs.branch("fit"))
                    .map_err(|source| ExperimentError::Fit { replicate: m, source })?;
                Ok(PredictionMatrix::from_models(&[model], states.clone()))
            })?;
            schemes
                .iter()
                .map(|scheme| {
                    let label = format!("{}/{}/{}", scheme.kind, scheme.phi, scheme.replicates);
                    let key = format!("{base_key};boot={label};m={m}");
                    let ens = cached(store, &key, &states, scheme.replicates, || {
                        let models = bootstrap::fit_bootstrap_ensemble(
                            &data,
                            scheme,
                            &ctx.grid,
                            rs.branch("boot").branch(&label),
                        )
                        .map_err(|source| ExperimentError::Bootstrap { replicate: m, source })?;
                        Ok(PredictionMatrix::from_models(&models, states.clone()))
                    })?;
                    IntervalSet::from_predictions(&ens.values, &point.values[0], &states, alpha)
                        .map_err(|source| ExperimentError::Bootstrap { replicate: m, source })
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, ExperimentError>>()?;

    schemes
        .iter()
        .enumerate()
        .map(|(i, scheme)| {
            let intervals: Vec<IntervalSet> = per_m.iter().map(|sets| sets[i].clone()).collect();
            let samples: Vec<CoverageSample> = intervals
                .iter()
                .zip(&ctx.tests)
                .enumerate()
                .map(|(m, (iv, test))| {
                    bootstrap::evaluate_coverage(iv, test)
                        .map_err(|source| ExperimentError::Bootstrap { replicate: m, source })
                })
                .collect::<Result<_, _>>()?;
            Ok(SchemeCoverage { scheme: *scheme, report: CoverageReport::from_samples(samples), intervals })
        })
        .collect()
}

fn cached(
    store: &dyn MatrixStore,
    key: &str,
    states: &[crate::game::GameState],
    rows: usize,
    compute: impl FnOnce() -> Result<PredictionMatrix, ExperimentError>,
) -> Result<PredictionMatrix, ExperimentError> {
    if let Some(m) = store.load(key) {
        if m.states == states && m.models() == rows {
            return Ok(m);
        }
    }
    let m = compute()?;
    store.store(key, &m);
    Ok(m)
}
