//! Observational play-by-play datasets with controlled outcome dependence.
//!
//! A dataset keeps `K` randomly chosen plays from each of `G` independently
//! simulated games. All rows of a game share that game's win indicator, so
//! `K` sets how many rows draw on one outcome.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::game::{simulate_game, GameConfig, GameState};
use crate::oracle::{OracleError, WpTable};
use crate::seed::Seed;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("K={keep} must lie in 1..={plays}")]
    Keep { keep: u32, plays: u32 },
    #[error("dataset must contain at least one game")]
    NoGames,
    #[error("oracle table was built for {table:?}, dataset uses {spec:?}")]
    ConfigMismatch { table: GameConfig, spec: GameConfig },
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: y must be 0 or 1, got {y}")]
    BadLabel { row: usize, y: u8 },
    #[error("game {game_id} has rows with different outcomes")]
    MixedOutcome { game_id: u64 },
}

/// Half-up `round(num / den)` on integers.
pub fn round_ratio(num: u64, den: u64) -> u64 {
    (2 * num + den) / (2 * den)
}

/// Generation parameters for one dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub config: GameConfig,
    /// `G`, simulated games.
    pub games: u64,
    /// `K`, plays kept per game.
    pub keep: u32,
}

impl DatasetSpec {
    /// `G = round(zeta * T / K)`, keeping the nominal size near `zeta * T`
    /// rows regardless of `K`.
    pub fn with_nominal_size(config: GameConfig, zeta: u64, keep: u32) -> Result<Self, DataError> {
        if keep == 0 || keep > config.plays() {
            return Err(DataError::Keep { keep, plays: config.plays() });
        }
        let games = round_ratio(zeta * u64::from(config.plays()), u64::from(keep));
        Self::with_games(config, games, keep)
    }

    pub fn with_games(config: GameConfig, games: u64, keep: u32) -> Result<Self, DataError> {
        if keep == 0 || keep > config.plays() {
            return Err(DataError::Keep { keep, plays: config.plays() });
        }
        if games == 0 {
            return Err(DataError::NoGames);
        }
        Ok(DatasetSpec { config, games, keep })
    }

    pub fn rows(&self) -> u64 {
        self.games * u64::from(self.keep)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlayRow {
    pub game_id: u64,
    pub t: u32,
    pub x: u32,
    pub s: i32,
    #[serde(with = "bool_as_int")]
    pub y: bool,
    pub true_wp: f64,
}

impl PlayRow {
    pub fn state(&self) -> GameState {
        GameState::new(self.t, self.x, self.s)
    }
}

mod bool_as_int {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(serde::de::Error::custom(format!("y must be 0 or 1, got {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayDataset {
    pub config: GameConfig,
    pub rows: Vec<PlayRow>,
}

impl PlayDataset {
    pub fn new(config: GameConfig, rows: Vec<PlayRow>) -> Self {
        PlayDataset { config, rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row indices grouped by game, ordered by game id.
    pub fn games(&self) -> BTreeMap<u64, Vec<usize>> {
        let mut out: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.rows.iter().enumerate() {
            out.entry(r.game_id).or_default().push(i);
        }
        out
    }

    pub fn game_count(&self) -> usize {
        self.games().len()
    }

    /// Distinct states, sorted.
    pub fn unique_states(&self) -> Vec<GameState> {
        let mut v: Vec<GameState> = self.rows.iter().map(PlayRow::state).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// CSV with header `game_id,t,x,s,y,true_wp`. Floats are written in
    /// shortest round-trip form, so reading the file back is bit-exact.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        if self.rows.is_empty() {
            w.write_record(["game_id", "t", "x", "s", "y", "true_wp"])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(config: GameConfig, input: R) -> Result<Self, DataError> {
        let mut rd = csv::Reader::from_reader(input);
        let mut rows = Vec::new();
        for rec in rd.deserialize() {
            rows.push(rec?);
        }
        let ds = PlayDataset { config, rows };
        let mut outcome: HashMap<u64, bool> = HashMap::new();
        for r in &ds.rows {
            if *outcome.entry(r.game_id).or_insert(r.y) != r.y {
                return Err(DataError::MixedOutcome { game_id: r.game_id });
            }
        }
        Ok(ds)
    }
}

/// Simulate `spec.games` games; game `g` uses stream `seed.child(g)` for the
/// game itself and then for choosing which `K` plays to keep.
pub fn generate_dataset(spec: &DatasetSpec, table: &WpTable, seed: Seed) -> Result<PlayDataset, DataError> {
    if *table.config() != spec.config {
        return Err(DataError::ConfigMismatch { table: *table.config(), spec: spec.config });
    }
    let per_game: Result<Vec<Vec<PlayRow>>, OracleError> = (0..spec.games)
        .into_par_iter()
        .map(|g| game_rows(spec, table, g, seed.child(g)))
        .collect();
    let rows = per_game?.into_iter().flatten().collect();
    Ok(PlayDataset { config: spec.config, rows })
}

fn game_rows(spec: &DatasetSpec, table: &WpTable, game_id: u64, seed: Seed) -> Result<Vec<PlayRow>, OracleError> {
    let mut rng = seed.stream();
    let trace = simulate_game(&spec.config, &mut rng);
    let mut kept = index::sample(&mut rng, spec.config.plays() as usize, spec.keep as usize).into_vec();
    kept.sort_unstable();
    kept.into_iter()
        .map(|i| {
            let st = trace.plays[i];
            Ok(PlayRow { game_id, t: st.t, x: st.x, s: st.s, y: trace.y, true_wp: table.lookup_state(&st)? })
        })
        .collect()
}

/// `count` out-of-sample test sets of `games` single-play games each; test
/// set `m` descends from `seed.child(m)`.
pub fn generate_test_sets(
    count: usize,
    games: u64,
    table: &WpTable,
    seed: Seed,
) -> Result<Vec<PlayDataset>, DataError> {
    let spec = DatasetSpec::with_games(*table.config(), games, 1)?;
    (0..count as u64).map(|m| generate_dataset(&spec, table, seed.child(m))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn std_table() -> WpTable {
        WpTable::build(&GameConfig::standard()).unwrap()
    }

    #[test]
    fn nominal_size_arithmetic() {
        let c = GameConfig::standard();
        assert_eq!(DatasetSpec::with_nominal_size(c, 1, 56).unwrap().games, 1);
        let s = DatasetSpec::with_nominal_size(c, 100, 3).unwrap();
        assert_eq!((s.games, s.rows()), (1867, 5601));
        let s = DatasetSpec::with_nominal_size(c, 4101, 1).unwrap();
        assert_eq!((s.games, s.rows()), (229_656, 229_656));
        assert!(matches!(DatasetSpec::with_nominal_size(c, 10, 57), Err(DataError::Keep { .. })));
        assert!(matches!(DatasetSpec::with_nominal_size(c, 10, 0), Err(DataError::Keep { .. })));
        assert!(matches!(DatasetSpec::with_games(c, 0, 1), Err(DataError::NoGames)));
    }

    #[test]
    fn half_up_rounding() {
        assert_eq!(round_ratio(5, 2), 3);
        assert_eq!(round_ratio(7, 2), 4);
        assert_eq!(round_ratio(4, 3), 1);
        assert_eq!(round_ratio(5, 3), 2);
    }

    #[test]
    fn one_full_game() {
        let t = std_table();
        let spec = DatasetSpec::with_nominal_size(GameConfig::standard(), 1, 56).unwrap();
        let d = generate_dataset(&spec, &t, Seed(1)).unwrap();
        assert_eq!(d.len(), 56);
        assert!(d.rows.iter().all(|r| r.y == d.rows[0].y && r.game_id == 0));
        let ts: Vec<u32> = d.rows.iter().map(|r| r.t).collect();
        assert_eq!(ts, (1..=56).collect::<Vec<_>>());
    }

    #[test]
    fn clustered_rows_share_outcome() {
        let t = std_table();
        let spec = DatasetSpec::with_nominal_size(GameConfig::standard(), 100, 3).unwrap();
        let d = generate_dataset(&spec, &t, Seed(2)).unwrap();
        assert_eq!(d.len(), 5601);
        let games = d.games();
        assert_eq!(games.len(), 1867);
        for rows in games.values() {
            assert_eq!(rows.len(), 3);
            let y = d.rows[rows[0]].y;
            assert!(rows.iter().all(|&i| d.rows[i].y == y));
            let mut ts: Vec<u32> = rows.iter().map(|&i| d.rows[i].t).collect();
            ts.dedup();
            assert_eq!(ts.len(), 3, "distinct plays per game");
        }
        for r in d.rows.iter().take(100) {
            assert_eq!(r.true_wp, t.lookup(r.t, r.x, r.s).unwrap());
        }
    }

    #[test]
    fn games_are_independent() {
        // Correlation of y between first rows of consecutive games.
        let t = std_table();
        let spec = DatasetSpec::with_games(GameConfig::standard(), 20_000, 2).unwrap();
        let d = generate_dataset(&spec, &t, Seed(3)).unwrap();
        let ys: Vec<f64> = d.rows.iter().step_by(2).map(|r| f64::from(u8::from(r.y))).collect();
        let a = &ys[..ys.len() - 1];
        let b = &ys[1..];
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
        let corr = cov / (ma * (1.0 - ma) * mb * (1.0 - mb)).sqrt();
        assert!(corr.abs() < 4.0 / n.sqrt(), "corr {corr}");
    }

    #[test]
    fn test_sets_are_single_play_games() {
        let t = std_table();
        let sets = generate_test_sets(3, 500, &t, Seed(4)).unwrap();
        assert_eq!(sets.len(), 3);
        for s in &sets {
            assert_eq!(s.len(), 500);
            assert_eq!(s.game_count(), 500);
        }
        assert_ne!(sets[0], sets[1]);
        let one = generate_test_sets(1, 1, &t, Seed(4)).unwrap();
        assert_eq!(one[0].len(), 1);
    }

    #[test]
    fn generation_is_reproducible() {
        let t = std_table();
        let spec = DatasetSpec::with_nominal_size(GameConfig::standard(), 20, 7).unwrap();
        let a = generate_dataset(&spec, &t, Seed(9)).unwrap();
        let b = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap()
            .install(|| generate_dataset(&spec, &t, Seed(9)).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn table_config_must_match() {
        let t = WpTable::build(&GameConfig::new(4, 10).unwrap()).unwrap();
        let spec = DatasetSpec::with_games(GameConfig::standard(), 2, 1).unwrap();
        assert!(matches!(generate_dataset(&spec, &t, Seed(0)), Err(DataError::ConfigMismatch { .. })));
    }

    #[test]
    fn csv_rejects_mixed_outcomes() {
        let text = "game_id,t,x,s,y,true_wp\n0,1,2,0,1,0.5\n0,2,1,0,0,0.6\n";
        let err = PlayDataset::read_csv(GameConfig::standard(), text.as_bytes()).unwrap_err();
        assert!(matches!(err, DataError::MixedOutcome { game_id: 0 }));
        let text = "game_id,t,x,s,y,true_wp\n0,1,2,0,2,0.5\n";
        assert!(PlayDataset::read_csv(GameConfig::standard(), text.as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_bit_exact(seed in any::<u64>(), keep in 1u32..=8, wp in prop::collection::vec(0.0f64..=1.0, 1..40)) {
            let t = WpTable::build(&GameConfig::new(4, 8).unwrap()).unwrap();
            let spec = DatasetSpec::with_games(*t.config(), 5, keep).unwrap();
            let mut d = generate_dataset(&spec, &t, Seed(seed)).unwrap();
            for (r, w) in d.rows.iter_mut().zip(wp) {
                r.true_wp = w;
            }
            let mut buf = Vec::new();
            d.write_csv(&mut buf).unwrap();
            prop_assert!(buf.starts_with(b"game_id,t,x,s,y,true_wp\n"));
            let back = PlayDataset::read_csv(*t.config(), buf.as_slice()).unwrap();
            prop_assert_eq!(back.rows.len(), d.rows.len());
            for (a, b) in back.rows.iter().zip(&d.rows) {
                prop_assert_eq!(a.true_wp.to_bits(), b.true_wp.to_bits());
                prop_assert_eq!(a, b);
            }
        }
    }
}
