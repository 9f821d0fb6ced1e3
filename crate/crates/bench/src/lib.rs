//! Shared fixtures for the benchmarks.

use wpsim_core::data::generate_dataset;
use wpsim_core::{DatasetSpec, GameConfig, PlayDataset, Seed, WpTable};

/// A training set of `games` full games on the standard field.
pub fn training_set(table: &WpTable, games: u64, seed: u64) -> PlayDataset {
    let config = *table.config();
    let spec = DatasetSpec::with_games(config, games, config.plays()).expect("valid spec");
    generate_dataset(&spec, table, Seed(seed)).expect("dataset")
}

pub fn standard_table() -> WpTable {
    WpTable::build(&GameConfig::standard()).expect("oracle builds")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_sizes() {
        let table = standard_table();
        let data = training_set(&table, 4, 1);
        assert_eq!(data.len(), 4 * 56);
        assert_eq!(data.game_count(), 4);
    }
}
