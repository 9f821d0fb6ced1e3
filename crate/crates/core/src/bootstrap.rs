//! Bootstrap confidence intervals for win probability and their coverage.
//!
//! Three resamplers, each with a fraction `phi` of the resampling units:
//!
//! * standard: `round(N * phi)` rows drawn with replacement;
//! * cluster: `round(G * phi)` games drawn with replacement, each bringing
//!   all of its rows;
//! * randomized cluster: as cluster, then each drawn game's rows are
//!   themselves redrawn with replacement (same count).
//!
//! Intervals are order statistics of the ensemble predictions, widened to 0
//! (or 1) where the point estimate is extreme.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{PlayDataset, PlayRow};
use crate::game::GameState;
use crate::gbt::{self, BoostConfig, BoostedModel, FitError};
use crate::seed::Seed;
use crate::stats::MeanSe;
use crate::WinProbability;

/// Point estimates below this get a lower bound of 0.
pub const LOW_WIDEN: f64 = 0.025;
/// Point estimates above this get an upper bound of 1.
pub const HIGH_WIDEN: f64 = 0.975;

#[derive(Debug, thiserror::Error)]
pub enum BootstrapError {
    #[error("fraction must be in (0,1], got {0}")]
    Fraction(f64),
    #[error("need at least 2 replicates, got {0}")]
    Replicates(usize),
    #[error("cannot resample an empty dataset")]
    Empty,
    #[error("fraction too small for dataset: round({units} * {phi}) = 0")]
    FractionTooSmall { units: usize, phi: f64 },
    #[error("replicate {replicate}: {source}")]
    Fit { replicate: usize, source: FitError },
    #[error("no interval for state {0:?}")]
    MissingState(GameState),
    #[error("bin edges must rise strictly from 0 to 1")]
    BadBins,
    #[error("alpha must be in (0,1), got {0}")]
    Alpha(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BootstrapKind {
    Standard,
    Cluster,
    RandomizedCluster,
}

impl BootstrapKind {
    pub const ALL: [BootstrapKind; 3] = [BootstrapKind::Standard, BootstrapKind::Cluster, BootstrapKind::RandomizedCluster];

    pub fn name(self) -> &'static str {
        match self {
            BootstrapKind::Standard => "standard",
            BootstrapKind::Cluster => "cluster",
            BootstrapKind::RandomizedCluster => "randomized-cluster",
        }
    }
}

impl fmt::Display for BootstrapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BootstrapKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "standard" => Ok(BootstrapKind::Standard),
            "cluster" => Ok(BootstrapKind::Cluster),
            "randomized-cluster" | "randomized_cluster" => Ok(BootstrapKind::RandomizedCluster),
            other => Err(format!("unknown bootstrap scheme {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapScheme {
    pub kind: BootstrapKind,
    /// Fraction of units resampled, in (0, 1].
    pub phi: f64,
    /// `B`.
    pub replicates: usize,
}

impl BootstrapScheme {
    pub fn new(kind: BootstrapKind, phi: f64, replicates: usize) -> Result<Self, BootstrapError> {
        let s = BootstrapScheme { kind, phi, replicates };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), BootstrapError> {
        if !(self.phi > 0.0 && self.phi <= 1.0) {
            return Err(BootstrapError::Fraction(self.phi));
        }
        if self.replicates < 2 {
            return Err(BootstrapError::Replicates(self.replicates));
        }
        Ok(())
    }
}

fn fraction_of(units: usize, phi: f64) -> Result<usize, BootstrapError> {
    let n = (units as f64 * phi).round() as usize;
    if n == 0 {
        return Err(BootstrapError::FractionTooSmall { units, phi });
    }
    Ok(n)
}

/// One bootstrap dataset. Cluster schemes give every drawn game a fresh id
/// (its draw index); standard resampling keeps each row's source game id.
pub fn resample<R: Rng + ?Sized>(
    data: &PlayDataset,
    scheme: &BootstrapScheme,
    rng: &mut R,
) -> Result<PlayDataset, BootstrapError> {
    if data.is_empty() {
        return Err(BootstrapError::Empty);
    }
    if !(scheme.phi > 0.0 && scheme.phi <= 1.0) {
        return Err(BootstrapError::Fraction(scheme.phi));
    }
    let rows = match scheme.kind {
        BootstrapKind::Standard => {
            let n = fraction_of(data.len(), scheme.phi)?;
            (0..n).map(|_| data.rows[rng.random_range(0..data.len())]).collect()
        }
        BootstrapKind::Cluster | BootstrapKind::RandomizedCluster => {
            let games: Vec<Vec<usize>> = data.games().into_values().collect();
            let n = fraction_of(games.len(), scheme.phi)?;
            let mut rows = Vec::new();
            for new_id in 0..n as u64 {
                let game = &games[rng.random_range(0..games.len())];
                let relabel = |i: usize| PlayRow { game_id: new_id, ..data.rows[i] };
                if scheme.kind == BootstrapKind::Cluster {
                    rows.extend(game.iter().map(|&i| relabel(i)));
                } else {
                    for _ in 0..game.len() {
                        rows.push(relabel(game[rng.random_range(0..game.len())]));
                    }
                }
            }
            rows
        }
    };
    Ok(PlayDataset::new(data.config, rows))
}

/// Fit `B` models, replicate `b` resampling with `seed.child(b).branch("resample")`
/// and fitting with `seed.child(b).branch("fit")`.
pub fn fit_bootstrap_ensemble(
    data: &PlayDataset,
    scheme: &BootstrapScheme,
    grid: &[BoostConfig],
    seed: Seed,
) -> Result<Vec<BoostedModel>, BootstrapError> {
    scheme.validate()?;
    (0..scheme.replicates)
        .into_par_iter()
        .map(|b| {
            let rs = seed.child(b as u64);
            let boot = resample(data, scheme, &mut rs.branch("resample").stream())?;
            gbt::fit_tuned(&boot, grid, rs.branch("fit"))
                .map(|(_, m)| m)
                .map_err(|source| BootstrapError::Fit { replicate: b, source })
        })
        .collect()
}

/// Nearest-rank order statistics (1-based) for a two-sided `1 - alpha`
/// interval: `ceil(alpha/2 * (B+1))` and `floor((1 - alpha/2) * (B+1))`.
/// For `B = 101`, `alpha = 0.1` these are ranks 6 and 96.
pub fn interval_ranks(replicates: usize, alpha: f64) -> (usize, usize) {
    let n1 = (replicates + 1) as f64;
    let lo = ((alpha / 2.0) * n1 - 1e-9).ceil() as usize;
    let hi = ((1.0 - alpha / 2.0) * n1 + 1e-9).floor() as usize;
    let lo = lo.clamp(1, replicates);
    let hi = hi.clamp(1, replicates);
    if lo > hi {
        (hi, hi)
    } else {
        (lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub state: GameState,
    pub lower: f64,
    pub upper: f64,
    pub point: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// Closed interval: boundary hits count.
    pub fn covers(&self, p: f64) -> bool {
        self.lower <= p && p <= self.upper
    }
}

/// Per-state confidence intervals, sorted by state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalSet {
    pub intervals: Vec<Interval>,
}

impl IntervalSet {
    pub fn get(&self, state: &GameState) -> Option<&Interval> {
        self.intervals.binary_search_by(|iv| iv.state.cmp(state)).ok().map(|i| &self.intervals[i])
    }

    /// Intervals from a `B x S` prediction matrix (`ensemble[b][k]` at `states[k]`).
    pub fn from_predictions(
        ensemble: &[Vec<f64>],
        point: &[f64],
        states: &[GameState],
        alpha: f64,
    ) -> Result<Self, BootstrapError> {
        if ensemble.len() < 2 {
            return Err(BootstrapError::Replicates(ensemble.len()));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(BootstrapError::Alpha(alpha));
        }
        let (lo_rank, hi_rank) = interval_ranks(ensemble.len(), alpha);
        let mut intervals: Vec<Interval> = states
            .iter()
            .enumerate()
            .map(|(k, &state)| {
                let mut col: Vec<f64> = ensemble.iter().map(|row| row[k]).collect();
                col.sort_by(f64::total_cmp);
                let p = point[k];
                let mut lower = col[lo_rank - 1].clamp(0.0, 1.0);
                let mut upper = col[hi_rank - 1].clamp(0.0, 1.0);
                if p < LOW_WIDEN {
                    lower = 0.0;
                }
                if p > HIGH_WIDEN {
                    upper = 1.0;
                }
                Interval { state, lower, upper, point: p }
            })
            .collect();
        intervals.sort_by(|a, b| a.state.cmp(&b.state));
        intervals.dedup_by(|a, b| a.state == b.state);
        Ok(IntervalSet { intervals })
    }
}

/// Intervals at `states` from an ensemble and the point model used for the
/// extreme-value widening.
pub fn build_intervals<M: WinProbability + Sync, P: WinProbability + ?Sized>(
    ensemble: &[M],
    point_model: &P,
    states: &[GameState],
    alpha: f64,
) -> Result<IntervalSet, BootstrapError> {
    let preds: Vec<Vec<f64>> = ensemble
        .par_iter()
        .map(|m| states.iter().map(|s| m.win_probability(s)).collect())
        .collect();
    let point: Vec<f64> = states.iter().map(|s| point_model.win_probability(s)).collect();
    IntervalSet::from_predictions(&preds, &point, states, alpha)
}

/// Coverage and mean width over one test set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageSample {
    pub coverage: f64,
    pub width: f64,
}

pub fn evaluate_coverage(intervals: &IntervalSet, test: &PlayDataset) -> Result<CoverageSample, BootstrapError> {
    let mut hits = 0usize;
    let mut width = 0.0;
    for r in &test.rows {
        let st = r.state();
        let iv = intervals.get(&st).ok_or(BootstrapError::MissingState(st))?;
        hits += usize::from(iv.covers(r.true_wp));
        width += iv.width();
    }
    let n = test.len() as f64;
    Ok(CoverageSample { coverage: hits as f64 / n, width: width / n })
}

/// Coverage and width across simulations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub samples: Vec<CoverageSample>,
    pub coverage: MeanSe,
    pub width: MeanSe,
}

impl CoverageReport {
    pub fn from_samples(samples: Vec<CoverageSample>) -> Self {
        let c: Vec<f64> = samples.iter().map(|s| s.coverage).collect();
        let w: Vec<f64> = samples.iter().map(|s| s.width).collect();
        CoverageReport { coverage: MeanSe::of(&c), width: MeanSe::of(&w), samples }
    }
}

/// Edges of bins over true win probability; bin `i` is `[e_i, e_{i+1})`,
/// the last bin also includes 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bins {
    edges: Vec<f64>,
}

impl Bins {
    pub fn new(edges: Vec<f64>) -> Result<Self, BootstrapError> {
        let ok = edges.len() >= 2
            && edges[0] == 0.0
            && *edges.last().unwrap() == 1.0
            && edges.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(BootstrapError::BadBins);
        }
        Ok(Bins { edges })
    }

    pub fn equal_width(count: usize) -> Result<Self, BootstrapError> {
        if count == 0 {
            return Err(BootstrapError::BadBins);
        }
        let mut edges: Vec<f64> = (0..count).map(|i| i as f64 / count as f64).collect();
        edges.push(1.0);
        Bins::new(edges)
    }

    pub fn len(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bounds(&self, i: usize) -> (f64, f64) {
        (self.edges[i], self.edges[i + 1])
    }

    pub fn index(&self, p: f64) -> Option<usize> {
        if !(0.0..=1.0).contains(&p) {
            return None;
        }
        let i = self.edges.partition_point(|&e| e <= p);
        Some(i.saturating_sub(1).min(self.len() - 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinCoverage {
    pub lo: f64,
    pub hi: f64,
    pub coverage: f64,
    pub se: f64,
    /// Test rows in the bin, summed over simulations.
    pub rows: usize,
}

/// Coverage restricted to rows whose true win probability falls in each bin.
///
/// Per-simulation bin coverages are averaged over the simulations that have
/// rows in the bin, with the across-simulation standard error; with a single
/// contributing simulation the binomial standard error is used. Empty bins
/// are left out.
pub fn binned_coverage(
    sims: &[(&IntervalSet, &PlayDataset)],
    bins: &Bins,
) -> Result<Vec<BinCoverage>, BootstrapError> {
    let mut per_bin: Vec<Vec<f64>> = vec![Vec::new(); bins.len()];
    let mut rows_in: Vec<usize> = vec![0; bins.len()];
    for (intervals, test) in sims {
        let mut hits = vec![0usize; bins.len()];
        let mut count = vec![0usize; bins.len()];
        for r in &test.rows {
            let st = r.state();
            let iv = intervals.get(&st).ok_or(BootstrapError::MissingState(st))?;
            if let Some(b) = bins.index(r.true_wp) {
                count[b] += 1;
                hits[b] += usize::from(iv.covers(r.true_wp));
            }
        }
        for b in 0..bins.len() {
            if count[b] > 0 {
                per_bin[b].push(hits[b] as f64 / count[b] as f64);
                rows_in[b] += count[b];
            }
        }
    }
    let mut out = Vec::new();
    for (b, vals) in per_bin.iter().enumerate() {
        if vals.is_empty() {
            continue;
        }
        let (lo, hi) = bins.bounds(b);
        let summary = MeanSe::of(vals);
        let se = if vals.len() == 1 {
            let c = summary.mean;
            (c * (1.0 - c) / rows_in[b] as f64).sqrt()
        } else {
            summary.se
        };
        out.push(BinCoverage { lo, hi, coverage: summary.mean, se, rows: rows_in[b] });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_dataset, DatasetSpec};
    use crate::game::GameConfig;
    use crate::oracle::WpTable;
    use std::collections::BTreeMap;

    fn clustered(games: u64, keep: u32, seed: u64) -> PlayDataset {
        let c = GameConfig::standard();
        let table = WpTable::build(&c).unwrap();
        generate_dataset(&DatasetSpec::with_games(c, games, keep).unwrap(), &table, Seed(seed)).unwrap()
    }

    fn scheme(kind: BootstrapKind, phi: f64) -> BootstrapScheme {
        BootstrapScheme::new(kind, phi, 2).unwrap()
    }

    #[test]
    fn scheme_validation() {
        assert!(matches!(BootstrapScheme::new(BootstrapKind::Standard, 0.0, 10), Err(BootstrapError::Fraction(_))));
        assert!(matches!(BootstrapScheme::new(BootstrapKind::Standard, 1.1, 10), Err(BootstrapError::Fraction(_))));
        assert!(matches!(BootstrapScheme::new(BootstrapKind::Standard, 0.5, 1), Err(BootstrapError::Replicates(1))));
        assert_eq!("randomized-cluster".parse::<BootstrapKind>().unwrap(), BootstrapKind::RandomizedCluster);
        assert!("bogus".parse::<BootstrapKind>().is_err());
    }

    #[test]
    fn standard_full_fraction_keeps_size() {
        let d = clustered(10, 1, 1);
        let out = resample(&d, &scheme(BootstrapKind::Standard, 1.0), &mut Seed(2).stream()).unwrap();
        assert_eq!(out.len(), 10);
        assert!(out.rows.iter().all(|r| d.rows.contains(r)));
    }

    #[test]
    fn cluster_fraction_count() {
        let d = clustered(4101, 1, 3);
        let out = resample(&d, &scheme(BootstrapKind::Cluster, 0.35), &mut Seed(4).stream()).unwrap();
        assert_eq!(out.game_count(), 1435);
        let out = resample(&d, &scheme(BootstrapKind::Standard, 0.35), &mut Seed(4).stream()).unwrap();
        assert_eq!(out.len(), 1435);
    }

    #[test]
    fn fraction_too_small() {
        let d = clustered(3, 2, 5);
        let err = resample(&d, &scheme(BootstrapKind::Cluster, 0.1), &mut Seed(1).stream()).unwrap_err();
        assert!(matches!(err, BootstrapError::FractionTooSmall { units: 3, .. }));
        let empty = PlayDataset::new(d.config, Vec::new());
        assert!(matches!(resample(&empty, &scheme(BootstrapKind::Standard, 1.0), &mut Seed(1).stream()), Err(BootstrapError::Empty)));
    }

    fn row_key(r: &PlayRow) -> (u32, u32, i32, bool) {
        (r.t, r.x, r.s, r.y)
    }

    #[test]
    fn cluster_resample_keeps_games_intact() {
        let d = clustered(30, 7, 6);
        let mut source: Vec<Vec<(u32, u32, i32, bool)>> =
            d.games().values().map(|rows| rows.iter().map(|&i| row_key(&d.rows[i])).collect()).collect();
        for g in &mut source {
            g.sort();
        }
        for phi in [1.0, 0.5] {
            let out = resample(&d, &scheme(BootstrapKind::Cluster, phi), &mut Seed(7).stream()).unwrap();
            for rows in out.games().values() {
                let mut g: Vec<_> = rows.iter().map(|&i| row_key(&out.rows[i])).collect();
                g.sort();
                assert!(source.contains(&g));
                let y = out.rows[rows[0]].y;
                assert!(rows.iter().all(|&i| out.rows[i].y == y));
            }
        }
    }

    #[test]
    fn randomized_cluster_draws_within_games() {
        let d = clustered(30, 7, 8);
        let out = resample(&d, &scheme(BootstrapKind::RandomizedCluster, 1.0), &mut Seed(9).stream()).unwrap();
        assert_eq!(out.game_count(), 30);
        assert_eq!(out.len(), 210);
        let by_key: BTreeMap<u64, Vec<(u32, u32, i32, bool)>> = d
            .games()
            .into_iter()
            .map(|(g, rows)| (g, rows.iter().map(|&i| row_key(&d.rows[i])).collect()))
            .collect();
        for rows in out.games().values() {
            assert_eq!(rows.len(), 7);
            let keys: Vec<_> = rows.iter().map(|&i| row_key(&out.rows[i])).collect();
            assert!(by_key.values().any(|src| keys.iter().all(|k| src.contains(k))));
        }
    }

    #[test]
    fn order_statistic_ranks() {
        assert_eq!(interval_ranks(101, 0.10), (6, 96));
        assert_eq!(interval_ranks(51, 0.10), (3, 49));
        assert_eq!(interval_ranks(39, 0.10), (2, 38));
        assert_eq!(interval_ranks(2, 0.10), (1, 2));
    }

    #[test]
    fn arithmetic_sequence_interval() {
        let st = [GameState::new(10, 2, 0)];
        let ens: Vec<Vec<f64>> = (0..=100).rev().map(|k| vec![0.01 * k as f64]).collect();
        let iv = IntervalSet::from_predictions(&ens, &[0.5], &st, 0.10).unwrap();
        let i = iv.get(&st[0]).unwrap();
        assert_eq!((i.lower, i.upper), (0.01 * 5.0, 0.01 * 95.0));
    }

    #[test]
    fn widening_at_extremes() {
        let st = [GameState::new(10, 2, 0), GameState::new(10, 1, 3)];
        let ens: Vec<Vec<f64>> = (0..5).map(|b| vec![0.02 + 0.001 * b as f64, 0.96 + 0.001 * b as f64]).collect();
        let iv = IntervalSet::from_predictions(&ens, &[0.01, 0.99], &st, 0.10).unwrap();
        assert_eq!(iv.get(&st[0]).unwrap().lower, 0.0);
        assert_eq!(iv.get(&st[1]).unwrap().upper, 1.0);
        assert!(iv.get(&st[1]).unwrap().lower > 0.9);
    }

    #[test]
    fn identical_predictions_give_point_interval() {
        let st = [GameState::new(3, 2, 1)];
        let ens = vec![vec![0.62]; 11];
        let iv = IntervalSet::from_predictions(&ens, &[0.62], &st, 0.10).unwrap();
        let i = iv.get(&st[0]).unwrap();
        assert_eq!((i.lower, i.upper), (0.62, 0.62));
    }

    fn manual(states_wp: &[(GameState, f64)], bounds: &[(f64, f64)]) -> (IntervalSet, PlayDataset) {
        let rows: Vec<PlayRow> = states_wp
            .iter()
            .enumerate()
            .map(|(i, (s, wp))| PlayRow { game_id: i as u64, t: s.t, x: s.x, s: s.s, y: true, true_wp: *wp })
            .collect();
        let mut intervals: Vec<Interval> = states_wp
            .iter()
            .zip(bounds)
            .map(|((s, _), &(lower, upper))| Interval { state: *s, lower, upper, point: 0.5 })
            .collect();
        intervals.sort_by(|a, b| a.state.cmp(&b.state));
        (IntervalSet { intervals }, PlayDataset::new(crate::game::GameConfig::standard(), rows))
    }

    #[test]
    fn coverage_hand_example() {
        let sw = [(GameState::new(1, 1, 0), 0.3), (GameState::new(2, 1, 0), 0.5), (GameState::new(3, 1, 0), 0.9)];
        let (iv, test) = manual(&sw, &[(0.2, 0.4), (0.6, 0.7), (0.85, 1.0)]);
        let c = evaluate_coverage(&iv, &test).unwrap();
        assert!((c.coverage - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.width - 0.15).abs() < 1e-15);

        let (iv, test) = manual(&sw, &[(0.0, 1.0); 3]);
        assert_eq!(evaluate_coverage(&iv, &test).unwrap(), CoverageSample { coverage: 1.0, width: 1.0 });
        let (iv, test) = manual(&sw, &[(0.3, 0.3), (0.5, 0.5), (0.9, 0.9)]);
        assert_eq!(evaluate_coverage(&iv, &test).unwrap(), CoverageSample { coverage: 1.0, width: 0.0 });

        let (iv, _) = manual(&sw[..1], &[(0.0, 1.0)]);
        assert!(matches!(evaluate_coverage(&iv, &test), Err(BootstrapError::MissingState(_))));
    }

    #[test]
    fn bins_partition_unit_interval() {
        let b = Bins::equal_width(10).unwrap();
        assert_eq!(b.len(), 10);
        assert_eq!(b.index(0.0), Some(0));
        assert_eq!(b.index(0.1), Some(1));
        assert_eq!(b.index(0.999), Some(9));
        assert_eq!(b.index(1.0), Some(9));
        assert_eq!(b.index(1.5), None);
        assert!(Bins::new(vec![0.0, 0.5]).is_err());
        assert!(Bins::new(vec![0.0, 0.6, 0.5, 1.0]).is_err());
    }

    #[test]
    fn binned_counts_and_perfect_coverage() {
        let sw: Vec<(GameState, f64)> =
            (0..10).map(|i| (GameState::new(i + 1, 2, 0), if i < 5 { 0.25 } else { 0.75 })).collect();
        let (iv, test) = manual(&sw, &vec![(0.0, 1.0); 10]);
        let bins = Bins::new(vec![0.0, 0.5, 1.0]).unwrap();
        let out = binned_coverage(&[(&iv, &test)], &bins).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].rows, out[1].rows);
        assert!(out.iter().all(|b| b.coverage == 1.0));
        let out = binned_coverage(&[(&iv, &test)], &Bins::equal_width(10).unwrap()).unwrap();
        assert_eq!(out.len(), 2, "empty bins are absent");
    }

    #[test]
    fn ensemble_is_deterministic_across_pools() {
        let d = clustered(12, 56, 10);
        let s = BootstrapScheme::new(BootstrapKind::RandomizedCluster, 1.0, 2).unwrap();
        let grid = vec![BoostConfig { max_rounds: 30, ..Default::default() }];
        let a = fit_bootstrap_ensemble(&d, &s, &grid, Seed(1)).unwrap();
        let b = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap()
            .install(|| fit_bootstrap_ensemble(&d, &s, &grid, Seed(1)).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        let states = d.unique_states();
        assert!(states.iter().any(|st| a[0].win_probability(st) != a[1].win_probability(st)));
    }
}
