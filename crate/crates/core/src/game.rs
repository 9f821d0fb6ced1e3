//! Random walk football.
//!
//! The ball sits on yardlines `1..L-1`. Each play it moves one yardline left
//! or right with equal probability. Reaching yardline 0 is a touchdown for
//! team one (+1), reaching yardline `L` is a touchdown for team two (-1), and
//! after either the ball resets to midfield `L/2`. After `T` plays a tied
//! game is settled by a fair coin.
//!
//! States are recorded at the *start* of each play `t = 1..=T`; the state
//! after the last play carries index `T + 1`.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GameError {
    #[error("field length must be even and at least 2, got {0}")]
    FieldLength(u32),
    #[error("plays per game must be at least 1")]
    NoPlays,
    #[error("field position {x} outside 1..={max}")]
    Position { x: u32, max: u32 },
    #[error("step must be -1 or +1, got {0}")]
    Step(i64),
    #[error("expected {expected} steps, got {got}")]
    StepCount { expected: usize, got: usize },
}

/// Rule parameters of one random-walk-football universe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawConfig", into = "RawConfig")]
pub struct GameConfig {
    field_length: u32,
    plays: u32,
}

#[derive(Serialize, Deserialize)]
struct RawConfig {
    field_length: u32,
    plays: u32,
}

impl TryFrom<RawConfig> for GameConfig {
    type Error = GameError;
    fn try_from(raw: RawConfig) -> Result<Self, GameError> {
        GameConfig::new(raw.field_length, raw.plays)
    }
}

impl From<GameConfig> for RawConfig {
    fn from(c: GameConfig) -> Self {
        RawConfig { field_length: c.field_length, plays: c.plays }
    }
}

impl GameConfig {
    pub fn new(field_length: u32, plays: u32) -> Result<Self, GameError> {
        if field_length < 2 || field_length % 2 != 0 {
            return Err(GameError::FieldLength(field_length));
        }
        if plays == 0 {
            return Err(GameError::NoPlays);
        }
        Ok(GameConfig { field_length, plays })
    }

    /// `L = 4`, `T = 56`.
    pub fn standard() -> Self {
        GameConfig { field_length: 4, plays: 56 }
    }

    /// `L`.
    pub fn field_length(&self) -> u32 {
        self.field_length
    }

    /// `T`.
    pub fn plays(&self) -> u32 {
        self.plays
    }

    pub fn midfield(&self) -> u32 {
        self.field_length / 2
    }

    /// Largest playable yardline, `L - 1`.
    pub fn last_yardline(&self) -> u32 {
        self.field_length - 1
    }

    pub fn kickoff(&self) -> GameState {
        GameState { t: 1, x: self.midfield(), s: 0 }
    }
}

/// Game-state at the start of play `t`: field position `x`, score
/// differential `s` from team one's point of view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GameState {
    pub t: u32,
    pub x: u32,
    pub s: i32,
}

impl GameState {
    pub const fn new(t: u32, x: u32, s: i32) -> Self {
        GameState { t, x, s }
    }
}

/// One play's movement, `xi = -1` (toward team one's scoring end) or `+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Step {
    Left,
    Right,
}

impl Step {
    pub fn delta(self) -> i64 {
        match self {
            Step::Left => -1,
            Step::Right => 1,
        }
    }

    pub fn flipped(self) -> Step {
        match self {
            Step::Left => Step::Right,
            Step::Right => Step::Left,
        }
    }

    fn draw<R: Rng + ?Sized>(rng: &mut R) -> Step {
        if rng.random::<bool>() {
            Step::Right
        } else {
            Step::Left
        }
    }
}

impl TryFrom<i64> for Step {
    type Error = GameError;
    fn try_from(xi: i64) -> Result<Self, GameError> {
        match xi {
            -1 => Ok(Step::Left),
            1 => Ok(Step::Right),
            other => Err(GameError::Step(other)),
        }
    }
}

/// Apply one play to `state`.
pub fn step(state: GameState, xi: Step, config: &GameConfig) -> Result<GameState, GameError> {
    let max = config.last_yardline();
    if state.x < 1 || state.x > max {
        return Err(GameError::Position { x: state.x, max });
    }
    Ok(step_unchecked(state, xi, config))
}

#[inline]
pub(crate) fn step_unchecked(state: GameState, xi: Step, config: &GameConfig) -> GameState {
    let t = state.t + 1;
    match (state.x, xi) {
        (1, Step::Left) => GameState { t, x: config.midfield(), s: state.s + 1 },
        (x, Step::Right) if x == config.last_yardline() => {
            GameState { t, x: config.midfield(), s: state.s - 1 }
        }
        (x, Step::Left) => GameState { t, x: x - 1, s: state.s },
        (x, Step::Right) => GameState { t, x: x + 1, s: state.s },
    }
}

/// Win indicator for team one given the final score differential and the
/// overtime coin.
pub fn outcome(final_s: i32, coin: bool) -> bool {
    match final_s.signum() {
        1 => true,
        -1 => false,
        _ => coin,
    }
}

/// A fully simulated game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameTrace {
    pub config: GameConfig,
    /// States at the start of plays `1..=T`.
    pub plays: Vec<GameState>,
    /// Score differential after play `T`.
    pub final_s: i32,
    pub y: bool,
}

/// Simulate a game from kickoff: `T` step draws followed by one coin draw,
/// all from `rng`.
pub fn simulate_game<R: Rng + ?Sized>(config: &GameConfig, rng: &mut R) -> GameTrace {
    let mut plays = Vec::with_capacity(config.plays as usize);
    let mut state = config.kickoff();
    for _ in 0..config.plays {
        plays.push(state);
        state = step_unchecked(state, Step::draw(rng), config);
    }
    let coin = rng.random::<bool>();
    GameTrace { config: *config, plays, final_s: state.s, y: outcome(state.s, coin) }
}

/// Replay a game from an explicit step sequence.
pub fn simulate_from_steps(
    config: &GameConfig,
    steps: &[Step],
    coin: bool,
) -> Result<GameTrace, GameError> {
    if steps.len() != config.plays as usize {
        return Err(GameError::StepCount { expected: config.plays as usize, got: steps.len() });
    }
    let mut plays = Vec::with_capacity(steps.len());
    let mut state = config.kickoff();
    for &xi in steps {
        plays.push(state);
        state = step_unchecked(state, xi, config);
    }
    Ok(GameTrace { config: *config, plays, final_s: state.s, y: outcome(state.s, coin) })
}

/// Play out the remainder of a game from `state` (which may be the terminal
/// index `T + 1`) and report whether team one wins.
pub fn play_out<R: Rng + ?Sized>(config: &GameConfig, state: GameState, rng: &mut R) -> bool {
    let mut cur = state;
    while cur.t <= config.plays {
        cur = step_unchecked(cur, Step::draw(rng), config);
    }
    outcome(cur.s, rng.random::<bool>())
}
