//! Exact win probability by backward induction, plus a Monte-Carlo
//! cross-check built on the game simulator.

use std::io::Write;

use rand::Rng;

use crate::game::{play_out, step_unchecked, GameConfig, GameState, Step};

/// Refuse tables larger than this many entries.
const MAX_ENTRIES: u64 = 1 << 31;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("state (t={t}, x={x}, s={s}) outside the table domain")]
    OutOfDomain { t: u32, x: u32, s: i32 },
    #[error("table with {0} entries is too large")]
    TooLarge(u64),
    #[error("Monte-Carlo estimate needs at least one game")]
    NoGames,
}

/// `wp(t, x, s)` for `t in 1..=T+1`, `x in 1..=L-1`, `s in -T..=T`.
///
/// Score differentials outside `[-T, T]` cannot occur, so the dense layout
/// loses nothing. Unreachable combinations inside the box still hold the
/// value the recursion assigns them.
#[derive(Debug, Clone, PartialEq)]
pub struct WpTable {
    config: GameConfig,
    values: Vec<f64>,
}

impl WpTable {
    pub fn build(config: &GameConfig) -> Result<Self, OracleError> {
        let plays = config.plays();
        let positions = u64::from(config.last_yardline());
        let scores = 2 * u64::from(plays) + 1;
        let total = (u64::from(plays) + 1) * positions * scores;
        if total > MAX_ENTRIES {
            return Err(OracleError::TooLarge(total));
        }
        let mut table = WpTable { config: *config, values: vec![0.0; total as usize] };

        let t_end = plays + 1;
        let bound = plays as i32;
        for x in 1..=config.last_yardline() {
            for s in -bound..=bound {
                let v = match s.signum() {
                    1 => 1.0,
                    0 => 0.5,
                    _ => 0.0,
                };
                let i = table.index(t_end, x, s);
                table.values[i] = v;
            }
        }

        for t in (1..=plays).rev() {
            for x in 1..=config.last_yardline() {
                for s in -bound..=bound {
                    let here = GameState::new(t, x, s);
                    let left = step_unchecked(here, Step::Left, config);
                    let right = step_unchecked(here, Step::Right, config);
                    let v = 0.5 * table.value_or_decided(left) + 0.5 * table.value_or_decided(right);
                    let i = table.index(t, x, s);
                    table.values[i] = v;
                }
            }
        }
        Ok(table)
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn contains(&self, t: u32, x: u32, s: i32) -> bool {
        let plays = self.config.plays();
        (1..=plays + 1).contains(&t)
            && (1..=self.config.last_yardline()).contains(&x)
            && s.unsigned_abs() <= plays
    }

    pub fn lookup(&self, t: u32, x: u32, s: i32) -> Result<f64, OracleError> {
        if !self.contains(t, x, s) {
            return Err(OracleError::OutOfDomain { t, x, s });
        }
        Ok(self.values[self.index(t, x, s)])
    }

    pub fn lookup_state(&self, state: &GameState) -> Result<f64, OracleError> {
        self.lookup(state.t, state.x, state.s)
    }

    /// Number of stored entries, `(T+1)(L-1)(2T+1)`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// All `(state, wp)` pairs in `t`, `x`, `s` order.
    pub fn iter(&self) -> impl Iterator<Item = (GameState, f64)> + '_ {
        let plays = self.config.plays();
        let bound = plays as i32;
        (1..=plays + 1).flat_map(move |t| {
            (1..=self.config.last_yardline()).flat_map(move |x| {
                (-bound..=bound).map(move |s| {
                    let st = GameState::new(t, x, s);
                    (st, self.values[self.index(t, x, s)])
                })
            })
        })
    }

    /// CSV with header `t,x,s,wp`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "s", "wp"])?;
        for (st, wp) in self.iter() {
            w.serialize((st.t, st.x, st.s, wp))?;
        }
        w.flush()?;
        Ok(())
    }

    fn index(&self, t: u32, x: u32, s: i32) -> usize {
        let positions = self.config.last_yardline() as usize;
        let scores = 2 * self.config.plays() as usize + 1;
        let si = (s + self.config.plays() as i32) as usize;
        ((t as usize - 1) * positions + (x as usize - 1)) * scores + si
    }

    /// A successor that leaves the `[-T, T]` score box has `|s| > T`, which
    /// no remaining sequence of plays can undo.
    fn value_or_decided(&self, st: GameState) -> f64 {
        let bound = self.config.plays() as i32;
        if st.s > bound {
            1.0
        } else if st.s < -bound {
            0.0
        } else {
            self.values[self.index(st.t, st.x, st.s)]
        }
    }
}

/// Monte-Carlo win probability with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Simulate `n` completions of the game from `state`.
pub fn mc_estimate_wp<R: Rng + ?Sized>(
    config: &GameConfig,
    state: GameState,
    n: u64,
    rng: &mut R,
) -> Result<McEstimate, OracleError> {
    if n == 0 {
        return Err(OracleError::NoGames);
    }
    let wins = (0..n).filter(|_| play_out(config, state, rng)).count() as f64;
    let p = wins / n as f64;
    Ok(McEstimate { estimate: p, std_error: (p * (1.0 - p) / n as f64).sqrt() })
}
