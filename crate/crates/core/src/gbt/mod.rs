//! Gradient-boosted trees with logistic loss over the covariates `(t, x, s)`.
//!
//! Rows sharing a game-state have identical predictions, so the gradient and
//! hessian sums a tree sees depend only on how many rows (and wins) each
//! distinct state has. Training therefore runs on per-state aggregates; the
//! result is the same ensemble that row-level boosting would produce.
//!
//! Half of the games are held out for validation. Boosting stops when the
//! validation log-loss has not improved for `early_stopping_rounds` rounds
//! and the model is truncated to the best round.

mod loss;
mod tree;

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

pub use loss::{logistic_grad_hess, logistic_loss, logit, sigmoid, softplus};
pub use tree::{Features, Node, Tree};

use crate::data::PlayDataset;
use crate::game::GameState;
use crate::seed::{Seed, Stream};
use crate::WinProbability;
use tree::{GrowParams, Grower};

/// Base rate clamp for single-class data.
const DEGENERATE_CLAMP: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum FitError {
    #[error("training data is empty")]
    Empty,
    #[error("need at least two games to split off a validation set, found {0}")]
    TooFewGames(usize),
    #[error("invalid boosting config: {0}")]
    Config(String),
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error("model io: {0}")]
    Io(#[from] std::io::Error),
    #[error("model json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostConfig {
    pub max_depth: u32,
    pub learning_rate: f64,
    pub max_rounds: u32,
    pub early_stopping_rounds: u32,
    /// Minimum hessian sum per child.
    pub min_child_weight: f64,
    /// Fraction of rows drawn (Bernoulli) for each tree.
    pub subsample: f64,
    /// Fraction of the three covariates offered to each tree.
    pub colsample: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// Minimum loss reduction to accept a split.
    pub gamma: f64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig {
            max_depth: 4,
            learning_rate: 0.1,
            max_rounds: 1000,
            early_stopping_rounds: 50,
            min_child_weight: 1.0,
            subsample: 1.0,
            colsample: 1.0,
            lambda: 1.0,
            gamma: 0.0,
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<(), FitError> {
        let bad = |m: &str| Err(FitError::Config(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must be in (0, 1]");
        }
        if self.max_depth < 1 {
            return bad("max_depth must be at least 1");
        }
        if self.max_rounds < 1 {
            return bad("max_rounds must be at least 1");
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad("subsample must be in (0, 1]");
        }
        if !(self.colsample > 0.0 && self.colsample <= 1.0) {
            return bad("colsample must be in (0, 1]");
        }
        if !(self.lambda >= 0.0 && self.min_child_weight >= 0.0 && self.gamma >= 0.0) {
            return bad("lambda, min_child_weight and gamma must be non-negative");
        }
        Ok(())
    }

    /// Depth in {3, 4, 5} crossed with learning rate in {0.05, 0.1}, 1000
    /// rounds, patience 50, L2 penalty 1.
    pub fn default_grid() -> Vec<BoostConfig> {
        let mut grid = Vec::new();
        for max_depth in [3, 4, 5] {
            for learning_rate in [0.05, 0.1] {
                grid.push(BoostConfig { max_depth, learning_rate, ..BoostConfig::default() });
            }
        }
        grid
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMetadata {
    pub config: BoostConfig,
    pub seed: Option<Seed>,
    /// Trees kept after early stopping.
    pub rounds_used: u32,
    pub best_validation_loss: f64,
    /// Mean validation log-loss after each round, starting with the base score.
    pub validation_curve: Vec<f64>,
    /// Mean training log-loss after each round, starting with the base score.
    pub training_curve: Vec<f64>,
    /// Single-class data: constant model, no trees.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    /// Log-odds before any tree.
    pub base_score: f64,
    pub trees: Vec<Tree>,
    pub meta: FitMetadata,
}

impl BoostedModel {
    pub fn constant(p: f64) -> Self {
        BoostedModel {
            base_score: logit(p),
            trees: Vec::new(),
            meta: FitMetadata {
                config: BoostConfig::default(),
                seed: None,
                rounds_used: 0,
                best_validation_loss: f64::NAN,
                validation_curve: Vec::new(),
                training_curve: Vec::new(),
                degenerate: true,
            },
        }
    }

    pub fn margin(&self, t: u32, x: u32, s: i32) -> f64 {
        let f = features(&GameState::new(t, x, s));
        self.base_score + self.trees.iter().map(|tr| tr.predict(&f)).sum::<f64>()
    }

    /// Win probability, strictly inside (0, 1).
    pub fn predict(&self, t: u32, x: u32, s: i32) -> f64 {
        sigmoid(self.margin(t, x, s))
    }

    pub fn to_json(&self) -> Result<String, FitError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, FitError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), FitError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, FitError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl WinProbability for BoostedModel {
    fn win_probability(&self, state: &GameState) -> f64 {
        self.predict(state.t, state.x, state.s)
    }
}

fn features(st: &GameState) -> Features {
    [st.t as i32, st.x as i32, st.s]
}

/// Rows collapsed to distinct states: row count and win count per state.
#[derive(Debug, Clone, Default)]
struct StateCounts {
    feats: Vec<Features>,
    n: Vec<f64>,
    pos: Vec<f64>,
}

impl StateCounts {
    fn from_rows<'a>(rows: impl Iterator<Item = &'a crate::data::PlayRow>) -> Self {
        let mut map: BTreeMap<GameState, (u64, u64)> = BTreeMap::new();
        for r in rows {
            let e = map.entry(r.state()).or_default();
            e.0 += 1;
            e.1 += u64::from(r.y);
        }
        let mut out = StateCounts::default();
        for (st, (n, pos)) in map {
            out.feats.push(features(&st));
            out.n.push(n as f64);
            out.pos.push(pos as f64);
        }
        out
    }

    fn total(&self) -> f64 {
        self.n.iter().sum()
    }

    fn mean_loss(&self, margins: &[f64]) -> f64 {
        let total: f64 = margins
            .iter()
            .zip(self.n.iter().zip(&self.pos))
            .map(|(&m, (&n, &pos))| loss::grouped_loss(m, n, pos))
            .sum();
        total / self.total()
    }
}

/// Partition games (not rows) at random: `round(G/2)` games go to
/// validation, the rest to training.
pub fn split_train_validation<R: Rng + ?Sized>(
    data: &PlayDataset,
    rng: &mut R,
) -> Result<(PlayDataset, PlayDataset), FitError> {
    let games = data.games();
    if games.len() < 2 {
        return Err(FitError::TooFewGames(games.len()));
    }
    let mut ids: Vec<u64> = games.keys().copied().collect();
    ids.shuffle(rng);
    let n_val = ids.len().div_ceil(2);
    let mut val_rows = Vec::new();
    let mut train_rows = Vec::new();
    for (k, id) in ids.iter().enumerate() {
        let target = if k < n_val { &mut val_rows } else { &mut train_rows };
        target.extend(games[id].iter().map(|&i| data.rows[i]));
    }
    Ok((PlayDataset::new(data.config, train_rows), PlayDataset::new(data.config, val_rows)))
}

/// Fit one model. The validation split uses `seed.branch("split")` and
/// boosting randomness uses `seed.branch("boost")`.
pub fn fit(data: &PlayDataset, config: &BoostConfig, seed: Seed) -> Result<BoostedModel, FitError> {
    config.validate()?;
    if let Some(model) = degenerate_model(data, config, seed)? {
        return Ok(model);
    }
    let (train, val) = split_train_validation(data, &mut seed.branch("split").stream())?;
    Ok(boost(&train, &val, config, seed))
}

/// Pick the grid entry with the lowest validation log-loss. Every entry sees
/// the same train/validation split. Ties go to fewer rounds used, then the
/// shallower tree, then grid order.
pub fn tune(data: &PlayDataset, grid: &[BoostConfig], seed: Seed) -> Result<BoostConfig, FitError> {
    Ok(fit_tuned(data, grid, seed)?.0)
}

/// [`tune`], also returning the winning model.
pub fn fit_tuned(
    data: &PlayDataset,
    grid: &[BoostConfig],
    seed: Seed,
) -> Result<(BoostConfig, BoostedModel), FitError> {
    let first = grid.first().ok_or(FitError::EmptyGrid)?;
    for c in grid {
        c.validate()?;
    }
    if grid.len() == 1 {
        return Ok((first.clone(), fit(data, first, seed)?));
    }
    if let Some(model) = degenerate_model(data, first, seed)? {
        return Ok((first.clone(), model));
    }
    let (train, val) = split_train_validation(data, &mut seed.branch("split").stream())?;
    let mut best: Option<(usize, BoostedModel)> = None;
    for (i, c) in grid.iter().enumerate() {
        let model = boost(&train, &val, c, seed);
        let better = match &best {
            None => true,
            Some((j, b)) => {
                let key = |m: &BoostedModel, c: &BoostConfig| (m.meta.best_validation_loss, m.meta.rounds_used, c.max_depth);
                let (lm, rm, dm) = key(&model, c);
                let (lb, rb, db) = key(b, &grid[*j]);
                lm < lb || (lm == lb && (rm < rb || (rm == rb && dm < db)))
            }
        };
        if better {
            best = Some((i, model));
        }
    }
    let (i, model) = best.expect("grid is non-empty");
    Ok((grid[i].clone(), model))
}

fn degenerate_model(data: &PlayDataset, config: &BoostConfig, seed: Seed) -> Result<Option<BoostedModel>, FitError> {
    if data.is_empty() {
        return Err(FitError::Empty);
    }
    let wins = data.rows.iter().filter(|r| r.y).count();
    if wins != 0 && wins != data.len() {
        return Ok(None);
    }
    let rate = (wins as f64 / data.len() as f64).clamp(DEGENERATE_CLAMP, 1.0 - DEGENERATE_CLAMP);
    let mut model = BoostedModel::constant(rate);
    model.meta.config = config.clone();
    model.meta.seed = Some(seed);
    Ok(Some(model))
}

fn boost(train: &PlayDataset, val: &PlayDataset, config: &BoostConfig, seed: Seed) -> BoostedModel {
    let tr = StateCounts::from_rows(train.rows.iter());
    let va = StateCounts::from_rows(val.rows.iter());
    let mut rng = seed.branch("boost").stream();

    let rate = (tr.pos.iter().sum::<f64>() / tr.total()).clamp(DEGENERATE_CLAMP, 1.0 - DEGENERATE_CLAMP);
    let base_score = logit(rate);
    let mut tr_margin = vec![base_score; tr.feats.len()];
    let mut va_margin = vec![base_score; va.feats.len()];

    let params = GrowParams {
        max_depth: config.max_depth,
        min_child_weight: config.min_child_weight,
        lambda: config.lambda,
        gamma: config.gamma,
        learning_rate: config.learning_rate,
    };
    let n_cols = ((config.colsample * tree::N_FEATURES as f64).round() as usize).clamp(1, tree::N_FEATURES);

    let mut trees = Vec::new();
    let mut training_curve = vec![tr.mean_loss(&tr_margin)];
    let mut validation_curve = vec![va.mean_loss(&va_margin)];
    let mut best_loss = validation_curve[0];
    let mut best_round = 0usize;
    let mut grad = vec![0.0; tr.feats.len()];
    let mut hess = vec![0.0; tr.feats.len()];

    for round in 1..=config.max_rounds as usize {
        let mut rows = Vec::with_capacity(tr.feats.len());
        for i in 0..tr.feats.len() {
            let (n, pos) = sample_counts(tr.n[i], tr.pos[i], config.subsample, &mut rng);
            if n == 0.0 {
                continue;
            }
            let p = 1.0 / (1.0 + (-tr_margin[i]).exp());
            grad[i] = n * p - pos;
            hess[i] = n * p * (1.0 - p);
            rows.push(i);
        }
        let cols = column_sample(n_cols, &mut rng);
        let tree = Grower::new(&tr.feats, &grad, &hess, &params, &cols).grow(rows);

        for (m, f) in tr_margin.iter_mut().zip(&tr.feats) {
            *m += tree.predict(f);
        }
        for (m, f) in va_margin.iter_mut().zip(&va.feats) {
            *m += tree.predict(f);
        }
        trees.push(tree);
        training_curve.push(tr.mean_loss(&tr_margin));
        let vl = va.mean_loss(&va_margin);
        validation_curve.push(vl);
        if vl < best_loss {
            best_loss = vl;
            best_round = round;
        }
        if round - best_round >= config.early_stopping_rounds as usize {
            break;
        }
    }
    trees.truncate(best_round);

    BoostedModel {
        base_score,
        trees,
        meta: FitMetadata {
            config: config.clone(),
            seed: Some(seed),
            rounds_used: best_round as u32,
            best_validation_loss: best_loss,
            validation_curve,
            training_curve,
            degenerate: false,
        },
    }
}

/// Bernoulli row subsampling expressed on a state's win/loss counts.
fn sample_counts(n: f64, pos: f64, fraction: f64, rng: &mut Stream) -> (f64, f64) {
    if fraction >= 1.0 {
        return (n, pos);
    }
    let draw = |k: f64, rng: &mut Stream| -> f64 {
        if k == 0.0 {
            0.0
        } else {
            Binomial::new(k as u64, fraction).expect("fraction in (0,1)").sample(rng) as f64
        }
    };
    let w = draw(pos, rng);
    let l = draw(n - pos, rng);
    (w + l, w)
}

fn column_sample(k: usize, rng: &mut Stream) -> Vec<usize> {
    if k >= tree::N_FEATURES {
        return (0..tree::N_FEATURES).collect();
    }
    let mut cols = rand::seq::index::sample(rng, tree::N_FEATURES, k).into_vec();
    cols.sort_unstable();
    cols
}
