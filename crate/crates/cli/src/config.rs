//! Campaign configuration: a TOML file, overridden by command-line flags.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use wpsim_core::bootstrap::{BootstrapKind, BootstrapScheme};
use wpsim_core::experiments::DEFAULT_TEST_GAMES;
use wpsim_core::{BoostConfig, GameConfig};

/// K grid used by the K sweep when none is given; values above `T` are dropped
/// and `T` itself is always included.
pub const DEFAULT_KEEP_GRID: [u32; 8] = [1, 2, 4, 7, 8, 14, 28, 56];
/// Nominal sizes `4^2 .. 4^6` for the size sweeps.
pub const DEFAULT_ZETA_SWEEP: [u64; 5] = [16, 64, 256, 1024, 4096];
pub const DEFAULT_ZETA: u64 = 4101;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    OracleExport,
    #[value(name = "bias-variance-vs-K")]
    #[serde(rename = "bias-variance-vs-K")]
    BiasVarianceVsK,
    BiasVarianceVsZeta,
    BiasByState,
    Ess,
    BootstrapCoverage,
    BinnedCoverage,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::OracleExport => "oracle-export",
            Kind::BiasVarianceVsK => "bias-variance-vs-K",
            Kind::BiasVarianceVsZeta => "bias-variance-vs-zeta",
            Kind::BiasByState => "bias-by-state",
            Kind::Ess => "ess",
            Kind::BootstrapCoverage => "bootstrap-coverage",
            Kind::BinnedCoverage => "binned-coverage",
        }
    }

    fn is_coverage(self) -> bool {
        matches!(self, Kind::BootstrapCoverage | Kind::BinnedCoverage)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything that defines a campaign. Unset grids take kind-specific
/// defaults, see the `*_grid` accessors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CampaignConfig {
    pub kind: Option<Kind>,
    /// Master seed; required.
    pub seed: Option<u64>,
    #[serde(rename = "L")]
    pub field_length: u32,
    #[serde(rename = "T")]
    pub plays: u32,
    pub zeta: Option<Vec<u64>>,
    #[serde(rename = "K")]
    pub keep: Option<Vec<u32>>,
    pub phi: Option<Vec<f64>>,
    pub schemes: Option<Vec<BootstrapKind>>,
    #[serde(rename = "M")]
    pub replicates: usize,
    #[serde(rename = "B")]
    pub boot_replicates: usize,
    pub test_games: u64,
    pub alpha: f64,
    pub bins: usize,
    /// Field position for bias-by-state; midfield when unset.
    pub x: Option<u32>,
    pub scores: Vec<i32>,
    /// Sizes at which the effective sample size is reported; the zeta grid
    /// when unset.
    pub ess_at: Option<Vec<f64>>,
    /// Estimator grid; every fit picks its entry on the validation half.
    pub estimator: Vec<BoostConfig>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub cache: bool,
    pub full_scale: bool,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            kind: None,
            seed: None,
            field_length: 4,
            plays: 56,
            zeta: None,
            keep: None,
            phi: None,
            schemes: None,
            replicates: 100,
            boot_replicates: 101,
            test_games: DEFAULT_TEST_GAMES,
            alpha: 0.10,
            bins: 10,
            x: None,
            scores: (-2..=2).collect(),
            ess_at: None,
            estimator: BoostConfig::default_grid(),
            workers: None,
            out: None,
            cache: true,
            full_scale: false,
        }
    }
}

/// One problem found by [`CampaignConfig::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl CampaignConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn kind(&self) -> Kind {
        self.kind.unwrap_or(Kind::OracleExport)
    }

    pub fn game(&self) -> Option<GameConfig> {
        GameConfig::new(self.field_length, self.plays).ok()
    }

    pub fn zeta_grid(&self) -> Vec<u64> {
        match &self.zeta {
            Some(z) => z.clone(),
            None => match self.kind() {
                Kind::BiasVarianceVsZeta | Kind::Ess => DEFAULT_ZETA_SWEEP.to_vec(),
                _ => vec![DEFAULT_ZETA],
            },
        }
    }

    pub fn keep_grid(&self) -> Vec<u32> {
        match &self.keep {
            Some(k) => k.clone(),
            None => match self.kind() {
                Kind::BiasVarianceVsK => {
                    let mut k: Vec<u32> = DEFAULT_KEEP_GRID.iter().copied().filter(|&k| k <= self.plays).collect();
                    if !k.contains(&self.plays) {
                        k.push(self.plays);
                    }
                    k
                }
                _ => vec![self.plays],
            },
        }
    }

    pub fn phi_grid(&self) -> Vec<f64> {
        match &self.phi {
            Some(p) => p.clone(),
            None if self.kind() == Kind::BinnedCoverage => vec![0.35],
            None => vec![1.0],
        }
    }

    pub fn scheme_kinds(&self) -> Vec<BootstrapKind> {
        match &self.schemes {
            Some(s) => s.clone(),
            None if self.kind() == Kind::BinnedCoverage => vec![BootstrapKind::RandomizedCluster],
            None => BootstrapKind::ALL.to_vec(),
        }
    }

    /// Every scheme and fraction pair, schemes outermost.
    pub fn bootstrap_schemes(&self) -> Vec<BootstrapScheme> {
        let phis = self.phi_grid();
        self.scheme_kinds()
            .into_iter()
            .flat_map(|kind| {
                phis.iter().map(move |&phi| BootstrapScheme { kind, phi, replicates: self.boot_replicates })
            })
            .collect()
    }

    pub fn x_fixed(&self) -> u32 {
        self.x.unwrap_or(self.field_length / 2)
    }

    pub fn ess_points(&self) -> Vec<f64> {
        match &self.ess_at {
            Some(p) => p.clone(),
            None => self.zeta_grid().into_iter().map(|z| z as f64).collect(),
        }
    }

    /// Static checks; an empty list means the campaign can run.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut d = Vec::new();
        let mut err = |field: &str, message: String| d.push(Diagnostic { field: field.into(), message });
        let kind = match self.kind {
            Some(k) => k,
            None => {
                err("kind", "experiment kind is required".into());
                Kind::OracleExport
            }
        };
        if self.seed.is_none() {
            err("seed", "master seed is required".into());
        }
        if let Err(e) = GameConfig::new(self.field_length, self.plays) {
            let field = if self.plays == 0 { "T" } else { "L" };
            err(field, e.to_string());
        }
        if self.workers == Some(0) {
            err("workers", "must be at least 1".into());
        }
        if kind == Kind::OracleExport {
            return d;
        }

        let zetas = self.zeta_grid();
        if zetas.is_empty() {
            err("zeta", "grid must not be empty".into());
        }
        if let Some(z) = zetas.iter().find(|&&z| z == 0) {
            err("zeta", format!("sizes must be positive, got {z}"));
        }
        let keeps = self.keep_grid();
        if keeps.is_empty() {
            err("K", "grid must not be empty".into());
        }
        for &k in &keeps {
            if k == 0 || k > self.plays {
                err("K", format!("K={k} must lie in 1..={} (T)", self.plays));
            }
        }
        if self.replicates < 2 {
            err("M", format!("need at least 2 replicates, got {}", self.replicates));
        }
        if self.test_games == 0 {
            err("test_games", "must be positive".into());
        }
        if self.estimator.is_empty() {
            err("estimator", "grid must not be empty".into());
        }
        for (i, c) in self.estimator.iter().enumerate() {
            if let Err(e) = c.validate() {
                err("estimator", format!("entry {i}: {e}"));
            }
        }

        let single = |d: &mut Vec<Diagnostic>, field: &str, n: usize| {
            if n > 1 {
                d.push(Diagnostic { field: field.into(), message: format!("{} takes a single value", kind) });
            }
        };
        match kind {
            Kind::BiasByState => {
                single(&mut d, "zeta", zetas.len());
                single(&mut d, "K", keeps.len());
                let x = self.x_fixed();
                if x == 0 || x >= self.field_length {
                    d.push(Diagnostic { field: "x".into(), message: format!("x={x} must lie in 1..L-1") });
                }
                if self.scores.is_empty() {
                    d.push(Diagnostic { field: "scores".into(), message: "grid must not be empty".into() });
                }
                if let Some(s) = self.scores.iter().find(|s| s.unsigned_abs() > self.plays) {
                    d.push(Diagnostic { field: "scores".into(), message: format!("|s|={} exceeds T", s.abs()) });
                }
            }
            Kind::Ess => {
                let mut distinct = zetas.clone();
                distinct.sort_unstable();
                distinct.dedup();
                if distinct.len() < 4 {
                    d.push(Diagnostic {
                        field: "zeta".into(),
                        message: format!("curve fits need at least 4 distinct sizes, got {}", distinct.len()),
                    });
                }
                if self.ess_points().iter().any(|z| !(*z > 0.0 && z.is_finite())) {
                    d.push(Diagnostic { field: "ess_at".into(), message: "sizes must be positive".into() });
                }
            }
            k if k.is_coverage() => {
                single(&mut d, "zeta", zetas.len());
                single(&mut d, "K", keeps.len());
                let phis = self.phi_grid();
                if phis.is_empty() {
                    d.push(Diagnostic { field: "phi".into(), message: "grid must not be empty".into() });
                }
                for &p in &phis {
                    if !(p > 0.0 && p <= 1.0) {
                        d.push(Diagnostic { field: "phi".into(), message: format!("fraction must be in (0,1], got {p}") });
                    }
                }
                if self.scheme_kinds().is_empty() {
                    d.push(Diagnostic { field: "schemes".into(), message: "grid must not be empty".into() });
                }
                if self.boot_replicates < 2 {
                    d.push(Diagnostic {
                        field: "B".into(),
                        message: format!("need at least 2 bootstrap replicates, got {}", self.boot_replicates),
                    });
                }
                if !(self.alpha > 0.0 && self.alpha < 1.0) {
                    d.push(Diagnostic { field: "alpha".into(), message: format!("must be in (0,1), got {}", self.alpha) });
                }
                if k == Kind::BinnedCoverage && self.bins == 0 {
                    d.push(Diagnostic { field: "bins".into(), message: "must be at least 1".into() });
                }
            }
            _ => {}
        }
        d
    }

    /// The configuration with run-local settings (workers, output location,
    /// cache use) cleared and every grid resolved; hashed into the manifest.
    pub fn canonical(&self) -> CampaignConfig {
        CampaignConfig {
            zeta: Some(self.zeta_grid()),
            keep: Some(self.keep_grid()),
            phi: Some(self.phi_grid()),
            schemes: Some(self.scheme_kinds()),
            x: Some(self.x_fixed()),
            ess_at: Some(self.ess_points()),
            workers: None,
            out: None,
            cache: true,
            full_scale: false,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(kind: Kind) -> CampaignConfig {
        CampaignConfig { kind: Some(kind), seed: Some(7), ..Default::default() }
    }

    fn fields(c: &CampaignConfig) -> Vec<String> {
        c.validate().into_iter().map(|d| d.field).collect()
    }

    #[test]
    fn defaults_validate() {
        for k in [
            Kind::OracleExport,
            Kind::BiasVarianceVsK,
            Kind::BiasVarianceVsZeta,
            Kind::BiasByState,
            Kind::Ess,
            Kind::BootstrapCoverage,
            Kind::BinnedCoverage,
        ] {
            assert!(base(k).validate().is_empty(), "{k}: {:?}", base(k).validate());
        }
    }

    #[test]
    fn keep_above_plays_names_the_field() {
        let c = CampaignConfig { keep: Some(vec![57]), ..base(Kind::BiasVarianceVsK) };
        let d = c.validate();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].field, "K");
        assert!(d[0].message.contains("57"));
    }

    #[test]
    fn zero_fraction_is_rejected() {
        let c = CampaignConfig { phi: Some(vec![0.0]), ..base(Kind::BootstrapCoverage) };
        let d = c.validate();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].field, "phi");
        assert!(d[0].message.contains("fraction must be in (0,1]"));
    }

    #[test]
    fn empty_zeta_grid_is_rejected() {
        let c = CampaignConfig { zeta: Some(vec![]), ..base(Kind::BiasVarianceVsZeta) };
        assert_eq!(fields(&c), vec!["zeta"]);
    }

    #[test]
    fn seed_is_mandatory() {
        let c = CampaignConfig { seed: None, ..base(Kind::OracleExport) };
        assert_eq!(fields(&c), vec!["seed"]);
    }

    #[test]
    fn misc_checks() {
        assert_eq!(fields(&CampaignConfig { field_length: 5, ..base(Kind::OracleExport) }), vec!["L"]);
        assert_eq!(fields(&CampaignConfig { replicates: 1, ..base(Kind::Ess) }), vec!["M"]);
        assert_eq!(fields(&CampaignConfig { zeta: Some(vec![16, 64, 256]), ..base(Kind::Ess) }), vec!["zeta"]);
        assert_eq!(fields(&CampaignConfig { boot_replicates: 1, ..base(Kind::BootstrapCoverage) }), vec!["B"]);
        assert_eq!(fields(&CampaignConfig { zeta: Some(vec![16, 64]), ..base(Kind::BiasByState) }), vec!["zeta"]);
        assert_eq!(fields(&CampaignConfig { x: Some(4), ..base(Kind::BiasByState) }), vec!["x"]);
        assert_eq!(fields(&CampaignConfig { estimator: vec![], ..base(Kind::BiasVarianceVsK) }), vec!["estimator"]);
        assert_eq!(fields(&CampaignConfig { workers: Some(0), ..base(Kind::OracleExport) }), vec!["workers"]);
    }

    #[test]
    fn kind_defaults() {
        assert_eq!(base(Kind::BiasVarianceVsK).keep_grid(), DEFAULT_KEEP_GRID.to_vec());
        let short = CampaignConfig { plays: 10, ..base(Kind::BiasVarianceVsK) };
        assert_eq!(short.keep_grid(), vec![1, 2, 4, 7, 8, 10]);
        assert_eq!(base(Kind::Ess).zeta_grid(), DEFAULT_ZETA_SWEEP.to_vec());
        assert_eq!(base(Kind::BootstrapCoverage).zeta_grid(), vec![4101]);
        assert_eq!(base(Kind::BootstrapCoverage).bootstrap_schemes().len(), 3);
        let b = base(Kind::BinnedCoverage).bootstrap_schemes();
        assert_eq!((b.len(), b[0].kind, b[0].phi), (1, BootstrapKind::RandomizedCluster, 0.35));
        assert_eq!(base(Kind::BiasByState).x_fixed(), 2);
    }

    #[test]
    fn toml_round_trip_and_errors() {
        let text = r#"
kind = "bootstrap-coverage"
seed = 7
L = 4
T = 56
zeta = [64]
phi = [0.35]
B = 101
M = 4
schemes = ["randomized-cluster"]

[[estimator]]
max_depth = 3
learning_rate = 0.1
"#;
        let c = CampaignConfig::from_toml(text).unwrap();
        assert_eq!(c.kind, Some(Kind::BootstrapCoverage));
        assert_eq!((c.replicates, c.boot_replicates), (4, 101));
        assert_eq!(c.estimator.len(), 1);
        assert_eq!(c.estimator[0].max_rounds, BoostConfig::default().max_rounds);
        assert!(c.validate().is_empty());
        let back = CampaignConfig::from_toml(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);

        let err = CampaignConfig::from_toml("seed = 7\nbogus = 1\n").unwrap_err().to_string();
        assert!(err.contains("bogus") && err.contains("line 2"), "{err}");
        let err = CampaignConfig::from_toml("seed = 7\nkind = \"nope\"\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn canonical_ignores_run_local_settings() {
        let a = CampaignConfig { workers: Some(1), out: Some("a".into()), cache: false, ..base(Kind::Ess) };
        let b = CampaignConfig { workers: Some(8), out: Some("b".into()), ..base(Kind::Ess) };
        assert_eq!(a.canonical(), b.canonical());
        assert_ne!(a.canonical(), CampaignConfig { seed: Some(8), ..b }.canonical());
    }
}
