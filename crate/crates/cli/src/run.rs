//! Campaign execution: compute every output in memory, stage the files, then
//! move them into the output directory together with a manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use wpsim_core::bootstrap::{binned_coverage, Bins};
use wpsim_core::ess::{effective_sample_size, fit_biexponential, BiexpFit, EssError};
use wpsim_core::experiments::{
    bias_by_state_from_matrix, run_campaign, run_coverage, state_grid, CampaignContext, Cell, MatrixStore, NoStore,
};
use wpsim_core::{ExperimentReport, GameConfig, Seed, WpTable};

use crate::config::{CampaignConfig, Diagnostic, Kind};
use crate::store::DiskStore;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
/// Campaigns estimated above this many row-fits need `full_scale`.
pub const FULL_SCALE_THRESHOLD: f64 = 1e9;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration:\n{}", format_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("estimated {estimate:.3e} row-fits exceeds {threshold:.0e}; pass --full-scale to run anyway")]
    FullScale { estimate: f64, threshold: f64 },
    #[error(transparent)]
    Core(#[from] wpsim_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

fn format_diagnostics(d: &[Diagnostic]) -> String {
    d.iter().map(|x| format!("  {x}")).collect::<Vec<_>>().join("\n")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_owned(), source }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub version: String,
    pub kind: Kind,
    pub seed: u64,
    /// SHA-256 of the canonical configuration JSON.
    pub config_hash: String,
    pub config: CampaignConfig,
    pub files: Vec<FileEntry>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
    pub warnings: Vec<String>,
    pub estimated_row_fits: f64,
}

struct Output {
    name: &'static str,
    bytes: Vec<u8>,
}

#[derive(Default)]
struct Outputs {
    files: Vec<Output>,
    warnings: Vec<String>,
}

impl Outputs {
    fn add(&mut self, name: &'static str, bytes: Vec<u8>) {
        self.files.push(Output { name, bytes });
    }

    fn warn(&mut self, msg: String) {
        eprintln!("warning: {msg}");
        self.warnings.push(msg);
    }
}

pub fn config_hash(config: &CampaignConfig) -> String {
    let json = serde_json::to_vec(&config.canonical()).expect("config serializes");
    hex::encode(Sha256::digest(json))
}

/// Rough cost of a campaign: training rows times estimator grid size,
/// summed over every fit.
pub fn estimated_row_fits(c: &CampaignConfig) -> f64 {
    let Some(game) = c.game() else { return 0.0 };
    let m = c.replicates as f64;
    let grid = c.estimator.len() as f64;
    let nominal_rows = |zeta: u64, keep: u32| -> f64 {
        Cell::nominal(&game, zeta, keep).map_or(0.0, |cell| (cell.games * u64::from(cell.keep)) as f64)
    };
    let family_rows =
        |zeta: u64| -> f64 { Cell::families(&game, zeta).iter().map(|x| (x.games * u64::from(x.keep)) as f64).sum() };
    let per_fit = match c.kind() {
        Kind::OracleExport => 0.0,
        Kind::BiasVarianceVsK => {
            c.zeta_grid().iter().flat_map(|&z| c.keep_grid().into_iter().map(move |k| nominal_rows(z, k))).sum()
        }
        Kind::BiasVarianceVsZeta | Kind::Ess => c.zeta_grid().iter().map(|&z| family_rows(z)).sum(),
        Kind::BiasByState => c.zeta_grid().iter().flat_map(|&z| c.keep_grid().into_iter().map(move |k| nominal_rows(z, k))).sum(),
        Kind::BootstrapCoverage | Kind::BinnedCoverage => {
            let rows: f64 =
                c.zeta_grid().iter().flat_map(|&z| c.keep_grid().into_iter().map(move |k| nominal_rows(z, k))).sum();
            let boot: f64 = c.bootstrap_schemes().iter().map(|s| s.replicates as f64 * s.phi).sum();
            rows * (1.0 + boot)
        }
    };
    per_fit * m * grid
}

/// Validate, run and publish a campaign into `out`.
///
/// Files appear in `out` only after every output has been computed and
/// written; on failure nothing but the cache is left behind.
pub fn run(config: &CampaignConfig, out: &Path) -> Result<RunSummary, RunError> {
    let diags = config.validate();
    if !diags.is_empty() {
        return Err(RunError::Invalid(diags));
    }
    let estimate = estimated_row_fits(config);
    eprintln!("{}: estimated {estimate:.3e} row-fits", config.kind());
    if estimate > FULL_SCALE_THRESHOLD && !config.full_scale {
        return Err(RunError::FullScale { estimate, threshold: FULL_SCALE_THRESHOLD });
    }

    fs::create_dir_all(out).map_err(io_err(out))?;
    let store: Box<dyn MatrixStore> = if config.cache {
        let dir = out.join("cache");
        Box::new(DiskStore::new(&dir).map_err(io_err(&dir))?)
    } else {
        Box::new(NoStore)
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.workers.unwrap_or(0)).build()?;
    let outputs = pool.install(|| execute(config, store.as_ref()))?;

    let staging = out.join(format!(".staging-{}", std::process::id()));
    match publish(config, &outputs, &staging, out) {
        Ok(manifest) => Ok(RunSummary {
            out_dir: out.to_owned(),
            manifest,
            warnings: outputs.warnings,
            estimated_row_fits: estimate,
        }),
        Err(e) => {
            let _ = fs::remove_dir_all(&staging);
            Err(e)
        }
    }
}

fn publish(config: &CampaignConfig, outputs: &Outputs, staging: &Path, out: &Path) -> Result<Manifest, RunError> {
    if staging.exists() {
        fs::remove_dir_all(staging).map_err(io_err(staging))?;
    }
    fs::create_dir_all(staging).map_err(io_err(staging))?;
    let mut files = Vec::new();
    for o in &outputs.files {
        let path = staging.join(o.name);
        fs::write(&path, &o.bytes).map_err(io_err(&path))?;
        files.push(FileEntry {
            name: o.name.to_owned(),
            sha256: hex::encode(Sha256::digest(&o.bytes)),
            bytes: o.bytes.len() as u64,
        });
    }
    let manifest = Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        version: env!("CARGO_PKG_VERSION").to_owned(),
        kind: config.kind(),
        seed: config.seed.expect("validated"),
        config_hash: config_hash(config),
        config: config.canonical(),
        files,
    };
    let path = staging.join("manifest.json");
    let mut json = serde_json::to_vec_pretty(&manifest)?;
    json.push(b'\n');
    fs::write(&path, json).map_err(io_err(&path))?;

    let mut names: Vec<&str> = outputs.files.iter().map(|o| o.name).collect();
    names.push("manifest.json");
    for name in names {
        let (from, to) = (staging.join(name), out.join(name));
        fs::rename(&from, &to).map_err(io_err(&to))?;
    }
    fs::remove_dir_all(staging).map_err(io_err(staging))?;
    Ok(manifest)
}

fn execute(config: &CampaignConfig, store: &dyn MatrixStore) -> Result<Outputs, RunError> {
    let game = config.game().expect("validated");
    let seed = Seed(config.seed.expect("validated"));
    let table = WpTable::build(&game).map_err(wpsim_core::Error::from)?;
    let mut out = Outputs::default();
    match config.kind() {
        Kind::OracleExport => {
            let mut buf = Vec::new();
            table.write_csv(&mut buf)?;
            out.add("wp_table.csv", buf);
        }
        Kind::BiasVarianceVsK => {
            let ctx = context(config, &table, seed, &[])?;
            let cells = nominal_cells(config, &game)?;
            let reports = run_campaign(&ctx, &cells, store).map_err(wpsim_core::Error::from)?;
            out.add("bias_var_vs_K.csv", bias_variance_csv(&reports, false)?);
            out.add("reports.json", pretty(&reports)?);
        }
        Kind::BiasVarianceVsZeta => {
            let ctx = context(config, &table, seed, &[])?;
            let reports = run_campaign(&ctx, &family_cells(config, &game), store).map_err(wpsim_core::Error::from)?;
            out.add("bias_var_vs_zeta.csv", bias_variance_csv(&reports, true)?);
            out.add("reports.json", pretty(&reports)?);
        }
        Kind::Ess => {
            let ctx = context(config, &table, seed, &[])?;
            let reports = run_campaign(&ctx, &family_cells(config, &game), store).map_err(wpsim_core::Error::from)?;
            ess_outputs(config, &reports, &mut out)?;
            out.add("bias_var_vs_zeta.csv", bias_variance_csv(&reports, true)?);
            out.add("reports.json", pretty(&reports)?);
        }
        Kind::BiasByState => {
            let times: Vec<u32> = (1..=game.plays()).collect();
            let states = state_grid(config.x_fixed(), &times, &config.scores);
            let ctx = context(config, &table, seed, &states)?;
            let cell = nominal_cells(config, &game)?.remove(0);
            let matrix = ctx.cell_matrix(&cell, store).map_err(wpsim_core::Error::from)?;
            let biases = bias_by_state_from_matrix(&matrix, &table, &states).map_err(wpsim_core::Error::from)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["t", "s", "x", "bias_mean", "bias_se"])?;
            for b in &biases {
                w.write_record([
                    b.state.t.to_string(),
                    b.state.s.to_string(),
                    b.state.x.to_string(),
                    b.bias.mean.to_string(),
                    b.bias.se.to_string(),
                ])?;
            }
            out.add("bias_by_state.csv", finish(w)?);
            let report = ctx.report(&cell, &matrix).map_err(wpsim_core::Error::from)?;
            out.add("reports.json", pretty(&[report])?);
        }
        Kind::BootstrapCoverage | Kind::BinnedCoverage => {
            let ctx = context(config, &table, seed, &[])?;
            let cell = nominal_cells(config, &game)?.remove(0);
            let schemes = config.bootstrap_schemes();
            let results =
                run_coverage(&ctx, &cell, &schemes, config.alpha, store).map_err(wpsim_core::Error::from)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["scheme", "phi", "B", "coverage_mean", "coverage_2se", "width_mean", "width_2se"])?;
            for r in &results {
                w.write_record([
                    r.scheme.kind.to_string(),
                    r.scheme.phi.to_string(),
                    r.scheme.replicates.to_string(),
                    r.report.coverage.mean.to_string(),
                    (2.0 * r.report.coverage.se).to_string(),
                    r.report.width.mean.to_string(),
                    (2.0 * r.report.width.se).to_string(),
                ])?;
            }
            out.add("boot_coverage.csv", finish(w)?);
            let reports: Vec<_> = results.iter().map(|r| (&r.scheme, &r.report)).collect();
            out.add("coverage.json", pretty(&reports)?);

            if config.kind() == Kind::BinnedCoverage {
                let bins = Bins::equal_width(config.bins).map_err(wpsim_core::Error::from)?;
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["scheme", "phi", "bin_lo", "bin_hi", "coverage", "se", "rows"])?;
                for r in &results {
                    let sims: Vec<_> = r.intervals.iter().zip(&ctx.tests).collect();
                    for b in binned_coverage(&sims, &bins).map_err(wpsim_core::Error::from)? {
                        w.write_record([
                            r.scheme.kind.to_string(),
                            r.scheme.phi.to_string(),
                            b.lo.to_string(),
                            b.hi.to_string(),
                            b.coverage.to_string(),
                            b.se.to_string(),
                            b.rows.to_string(),
                        ])?;
                    }
                }
                out.add("binned_coverage.csv", finish(w)?);
            }
        }
    }
    Ok(out)
}

fn context<'a>(
    config: &CampaignConfig,
    table: &'a WpTable,
    seed: Seed,
    extra: &[wpsim_core::GameState],
) -> Result<CampaignContext<'a>, RunError> {
    CampaignContext::new(table, seed, config.estimator.clone(), config.replicates, config.test_games, extra)
        .map_err(|e| wpsim_core::Error::from(e).into())
}

fn nominal_cells(config: &CampaignConfig, game: &GameConfig) -> Result<Vec<Cell>, RunError> {
    let mut cells = Vec::new();
    for &z in &config.zeta_grid() {
        for &k in &config.keep_grid() {
            cells.push(Cell::nominal(game, z, k).map_err(wpsim_core::Error::from)?);
        }
    }
    Ok(cells)
}

fn family_cells(config: &CampaignConfig, game: &GameConfig) -> Vec<Cell> {
    config.zeta_grid().iter().flat_map(|&z| Cell::families(game, z)).collect()
}

fn bias_variance_csv(reports: &[ExperimentReport], with_family: bool) -> Result<Vec<u8>, RunError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["zeta", "K", "G"];
    if with_family {
        header.insert(0, "family");
    }
    header.extend(["bias2_mean", "bias2_se", "var_mean", "var_se", "rmse_mean", "rmse_se"]);
    w.write_record(&header)?;
    for r in reports {
        let mut rec = Vec::new();
        if with_family {
            rec.push(r.cell.family.clone());
        }
        rec.extend([r.cell.zeta.to_string(), r.cell.keep.to_string(), r.cell.games.to_string()]);
        for v in [r.bias_sq, r.variance, r.rmse] {
            rec.extend([v.mean.to_string(), v.se.to_string()]);
        }
        w.write_record(&rec)?;
    }
    finish(w)
}

#[derive(Serialize)]
struct EssFits<'a> {
    k1_points: &'a [(f64, f64)],
    kt_points: &'a [(f64, f64)],
    k1: &'a BiexpFit,
    kt: &'a BiexpFit,
}

fn ess_outputs(config: &CampaignConfig, reports: &[ExperimentReport], out: &mut Outputs) -> Result<(), RunError> {
    let points = |family: &str| -> Vec<(f64, f64)> {
        reports.iter().filter(|r| r.cell.family == family).map(|r| (r.cell.zeta as f64, r.rmse.mean)).collect()
    };
    let (k1_points, kt_points) = (points("g_zetaT_k1"), points("g_zeta_kT"));
    let k1 = fit_biexponential(&k1_points).map_err(wpsim_core::Error::from)?;
    let kt = fit_biexponential(&kt_points).map_err(wpsim_core::Error::from)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["zeta", "zeta_prime", "ratio", "status"])?;
    for zeta in config.ess_points() {
        match effective_sample_size(&k1, &kt, zeta) {
            Ok(r) => {
                let status = if r.exceeds_nominal {
                    out.warn(format!("effective size {} exceeds nominal {zeta}", r.zeta_prime));
                    "exceeds-nominal"
                } else {
                    "ok"
                };
                w.write_record([zeta.to_string(), r.zeta_prime.to_string(), r.ratio.to_string(), status.into()])?;
            }
            Err(e @ EssError::Extrapolation { .. }) => {
                out.warn(format!("zeta={zeta}: {e}"));
                w.write_record([zeta.to_string(), String::new(), String::new(), "extrapolation".into()])?;
            }
            Err(e) => return Err(wpsim_core::Error::from(e).into()),
        }
    }
    out.add("ess_curve.csv", finish(w)?);
    out.add("ess_fits.json", pretty(&EssFits { k1_points: &k1_points, kt_points: &kt_points, k1: &k1, kt: &kt })?);
    Ok(())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>, RunError> {
    w.into_inner().map_err(|e| RunError::Csv(e.into_error().into()))
}

fn pretty<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>, RunError> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use wpsim_core::BoostConfig;

    fn small(kind: Kind) -> CampaignConfig {
        CampaignConfig {
            kind: Some(kind),
            seed: Some(11),
            replicates: 2,
            test_games: 50,
            zeta: Some(vec![8]),
            keep: Some(vec![56]),
            boot_replicates: 3,
            estimator: vec![BoostConfig { max_rounds: 20, early_stopping_rounds: 5, ..Default::default() }],
            ..Default::default()
        }
    }

    #[test]
    fn cost_estimate() {
        let c = CampaignConfig { kind: Some(Kind::BiasVarianceVsK), seed: Some(1), ..Default::default() };
        // 8 cells of about 4101 * 56 rows, 100 replicates, 6 grid entries.
        let e = estimated_row_fits(&c);
        assert!((e / (8.0 * 229_656.0 * 600.0) - 1.0).abs() < 1e-3, "{e}");
        assert!(e > FULL_SCALE_THRESHOLD);
        assert_eq!(estimated_row_fits(&small(Kind::OracleExport)), 0.0);
        let cov = small(Kind::BootstrapCoverage);
        assert_eq!(estimated_row_fits(&cov), 8.0 * 56.0 * 2.0 * (1.0 + 9.0));
    }

    #[test]
    fn gate_and_invalid() {
        let dir = tempfile::tempdir().unwrap();
        let c = CampaignConfig { kind: Some(Kind::BiasVarianceVsK), seed: Some(1), ..Default::default() };
        assert!(matches!(run(&c, dir.path()), Err(RunError::FullScale { .. })));
        let bad = CampaignConfig { seed: None, ..small(Kind::OracleExport) };
        assert!(matches!(run(&bad, dir.path()), Err(RunError::Invalid(_))));
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn oracle_export_writes_table_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let s = run(&small(Kind::OracleExport), dir.path()).unwrap();
        let table = fs::read(dir.path().join("wp_table.csv")).unwrap();
        assert_eq!(s.manifest.files.len(), 1);
        assert_eq!(s.manifest.files[0].sha256, hex::encode(Sha256::digest(&table)));
        let lines = table.split(|&b| b == b'\n').filter(|l| !l.is_empty()).count();
        assert_eq!(lines, 1 + 57 * 3 * 113);
        let m: Manifest = serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m, s.manifest);
        assert!(!fs::read_dir(dir.path()).unwrap().any(|e| e.unwrap().file_name().to_string_lossy().starts_with('.')));
    }

    #[test]
    fn coverage_kinds_write_expected_files() {
        let dir = tempfile::tempdir().unwrap();
        let c = CampaignConfig { phi: Some(vec![1.0, 0.5]), bins: 4, ..small(Kind::BinnedCoverage) };
        let s = run(&c, dir.path()).unwrap();
        let names: Vec<_> = s.manifest.files.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["boot_coverage.csv", "coverage.json", "binned_coverage.csv"]);
        let text = fs::read_to_string(dir.path().join("boot_coverage.csv")).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(1).unwrap().starts_with("randomized-cluster,1,3,"));
    }
}
