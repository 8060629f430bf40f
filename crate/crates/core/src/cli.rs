//! Command-line front end.
//!
//! Every command reads a JSON config, writes CSV tables into `--out-dir` and
//! finishes with a `manifest.json` holding the fully resolved configuration,
//! so `replay <manifest>` can rerun it and compare the tables byte for byte.
//!
//! Exit codes: 0 success, 1 invalid input, 2 runtime failure, 3 a requested
//! assertion (`--assert-dome`, replay comparison) did not hold.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::ensemble::{
    critical_point, default_grid, dome_summary, entropy_scan, mobility_edge, r_scan, EigenstateSelector,
    GapRatioOptions, GraphSpec, PartitionSpec, RAveraging, ScanConfig,
};
use crate::error::{Error, Result};
use crate::levelstats::{reference_mean, Ensemble, DEFAULT_DEGENERACY_TOL};
use crate::rng::{derive_seed, mix64};
use crate::svmc::{magnetization_experiment, AnnealSchedule, MagnetizationCurve, Scenario};

pub const MANIFEST_NAME: &str = "manifest.json";
pub const DESK_REALIZATIONS: usize = 500;
pub const FULL_REALIZATIONS: usize = 5000;
pub const FULL_SVMC_REALIZATIONS: usize = 400;
pub const FULL_SVMC_CHAINS: usize = 1000;

#[derive(Debug, Parser)]
#[command(name = "chimera-mbl", version, about = "Localization on Chimera cells: exact diagonalization and SVMC")]
pub struct Cli {
    /// Worker threads (defaults to the available parallelism).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Master seed; overrides the config. Generated and recorded if absent.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Use the large sample counts instead of the desk-scale defaults.
    #[arg(long, global = true)]
    pub full_scale: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Entanglement entropy statistics over a disorder grid.
    EntropyScan { config: PathBuf },
    /// Critical disorder for every eigenstate against its energy density.
    MobilityEdge {
        config: PathBuf,
        /// Fail with exit code 3 unless the middle of the spectrum is hardest to localize.
        #[arg(long)]
        assert_dome: bool,
    },
    /// Mean adjacent gap ratio over a disorder grid.
    LevelStats { config: PathBuf },
    /// Spin-vector Monte Carlo magnetization curves.
    Svmc {
        scenario: PathBuf,
        /// Schedule CSV with header `s,A,B`; the built-in schedule otherwise.
        #[arg(long)]
        schedule: Option<PathBuf>,
    },
    /// Rerun a recorded manifest and compare its tables.
    Replay { manifest: PathBuf },
}

/// On-disk config for the exact-diagonalization commands. Omitted fields take
/// command defaults.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub graph: GraphSpec,
    #[serde(default)]
    pub disorder_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub realizations: Option<usize>,
    #[serde(default)]
    pub eigenstates: Option<EigenstateSelector>,
    #[serde(default)]
    pub partition: Option<PartitionSpec>,
    #[serde(default)]
    pub master_seed: Option<u64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub degeneracy_tol: Option<f64>,
    #[serde(default)]
    pub resamples: Option<usize>,
    #[serde(default)]
    pub averaging: Option<RAveraging>,
}

/// Everything needed to rerun a command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum ResolvedRun {
    EntropyScan {
        scan: ScanConfig,
    },
    MobilityEdge {
        scan: ScanConfig,
        assert_dome: bool,
    },
    LevelStats {
        scan: ScanConfig,
        options: GapRatioOptions,
    },
    Svmc {
        scenarios: Vec<Scenario>,
        schedule: Option<PathBuf>,
    },
}

impl ResolvedRun {
    pub fn name(&self) -> &'static str {
        match self {
            ResolvedRun::EntropyScan { .. } => "entropy-scan",
            ResolvedRun::MobilityEdge { .. } => "mobility-edge",
            ResolvedRun::LevelStats { .. } => "level-stats",
            ResolvedRun::Svmc { .. } => "svmc",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    #[serde(flatten)]
    pub run: ResolvedRun,
    pub master_seed: u64,
    pub version: String,
    pub started_at: String,
    pub finished_at: String,
    pub wall_seconds: f64,
    pub outputs: Vec<String>,
    pub failures: usize,
    pub summary: serde_json::Value,
}

/// Outcome of a command body before the manifest is written.
struct RunOutput {
    outputs: Vec<String>,
    failures: usize,
    summary: serde_json::Value,
    assertion_failed: bool,
}

pub fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::NoConvergence { .. } | Error::TooManyFailures { .. } => 2,
        _ => 1,
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn fresh_seed() -> u64 {
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0);
    mix64(nanos ^ u64::from(std::process::id()))
}

impl ExperimentFile {
    fn resolve(&self, seed_flag: Option<u64>, full_scale: bool, default_selector: EigenstateSelector) -> ScanConfig {
        let realizations = if full_scale {
            FULL_REALIZATIONS
        } else {
            self.realizations.unwrap_or(DESK_REALIZATIONS)
        };
        ScanConfig {
            graph: self.graph,
            disorder_grid: self.disorder_grid.clone().unwrap_or_else(default_grid),
            realizations,
            eigenstates: self.eigenstates.clone().unwrap_or(default_selector),
            partition: self.partition.clone().unwrap_or_else(|| PartitionSpec::default_for(&self.graph)),
            master_seed: seed_flag.or(self.master_seed).unwrap_or_else(fresh_seed),
            delta: self.delta.unwrap_or(1.0),
        }
    }
}

fn load_scenarios(path: &Path) -> Result<Vec<Scenario>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parsed = if text.trim_start().starts_with('[') {
        serde_json::from_str::<Vec<Scenario>>(&text)
    } else {
        serde_json::from_str::<Scenario>(&text).map(|s| vec![s])
    };
    parsed.map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Turns command-line arguments into a fully specified run.
pub fn resolve(cli: &Cli) -> Result<(ResolvedRun, u64)> {
    let run = match &cli.command {
        Command::EntropyScan { config } => {
            let file: ExperimentFile = read_json(config)?;
            ResolvedRun::EntropyScan {
                scan: file.resolve(cli.seed, cli.full_scale, EigenstateSelector::Middle),
            }
        }
        Command::MobilityEdge { config, assert_dome } => {
            let file: ExperimentFile = read_json(config)?;
            ResolvedRun::MobilityEdge {
                scan: file.resolve(cli.seed, cli.full_scale, EigenstateSelector::All),
                assert_dome: *assert_dome,
            }
        }
        Command::LevelStats { config } => {
            let file: ExperimentFile = read_json(config)?;
            let defaults = GapRatioOptions::default();
            ResolvedRun::LevelStats {
                scan: file.resolve(cli.seed, cli.full_scale, EigenstateSelector::Middle),
                options: GapRatioOptions {
                    degeneracy_tol: file.degeneracy_tol.unwrap_or(DEFAULT_DEGENERACY_TOL),
                    resamples: file.resamples.unwrap_or(defaults.resamples),
                    averaging: file.averaging.unwrap_or(defaults.averaging),
                },
            }
        }
        Command::Svmc { scenario, schedule } => {
            let master = cli.seed.unwrap_or_else(fresh_seed);
            let mut scenarios = load_scenarios(scenario)?;
            for (i, sc) in scenarios.iter_mut().enumerate() {
                if cli.seed.is_some() || sc.seed.is_none() {
                    sc.seed = Some(derive_seed(master, &[i as u64]));
                }
                if cli.full_scale {
                    sc.realizations = FULL_SVMC_REALIZATIONS;
                    sc.chains = FULL_SVMC_CHAINS;
                }
            }
            let run = ResolvedRun::Svmc {
                scenarios,
                schedule: schedule.clone(),
            };
            return Ok((run, master));
        }
        Command::Replay { .. } => unreachable!("replay is resolved from its manifest"),
    };
    let seed = match &run {
        ResolvedRun::EntropyScan { scan } | ResolvedRun::MobilityEdge { scan, .. } | ResolvedRun::LevelStats { scan, .. } => {
            scan.master_seed
        }
        ResolvedRun::Svmc { .. } => unreachable!(),
    };
    Ok((run, seed))
}

fn write_csv<T: Serialize>(dir: &Path, name: &str, rows: &[T]) -> Result<String> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(name.to_string())
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

/// Writes `value` as pretty JSON via a temporary file and a rename.
fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    let text = serde_json::to_string_pretty(value).expect("manifest serializes");
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(text.as_bytes())
        .and_then(|_| f.write_all(b"\n"))
        .and_then(|_| f.sync_all())
        .map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct EntropyRow {
    disorder: f64,
    mean_entropy: f64,
    variance: f64,
    std_error: f64,
    samples: usize,
    failures: usize,
}

#[derive(Serialize)]
struct LevelRow {
    disorder: f64,
    mean_r: f64,
    per_realization_mean: f64,
    pooled_mean: f64,
    ci_low: f64,
    ci_high: f64,
    std_error: f64,
    realizations: usize,
    pairs: usize,
    dropped: usize,
    failures: usize,
    goe_reference: f64,
    poisson_reference: f64,
}

#[derive(Serialize)]
struct OnsetRow<'a> {
    scenario: &'a str,
    seed: u64,
    onset_ratio: Option<f64>,
}

fn run_entropy_scan(scan: &ScanConfig, dir: &Path) -> Result<RunOutput> {
    let result = entropy_scan(scan)?;
    let rows: Vec<EntropyRow> = result
        .points
        .iter()
        .map(|p| EntropyRow {
            disorder: p.disorder,
            mean_entropy: p.mean,
            variance: p.variance,
            std_error: p.std_error,
            samples: p.samples,
            failures: p.failures,
        })
        .collect();
    let file = write_csv(dir, "entropy_scan.csv", &rows)?;
    let cp = critical_point(&result)?;
    println!("critical disorder (J/Δ)_c = {} (variance {:.6})", cp.disorder, cp.variance);
    if let Some(r) = cp.refined {
        println!("parabolic refinement: {r:.4}");
    }
    if cp.boundary {
        eprintln!("warning: variance maximum lies on the grid boundary; extend the disorder grid");
    }
    Ok(RunOutput {
        outputs: vec![file],
        failures: result.failures(),
        summary: serde_json::json!({ "critical_point": cp }),
        assertion_failed: false,
    })
}

fn run_mobility_edge(scan: &ScanConfig, assert_dome: bool, dir: &Path) -> Result<RunOutput> {
    let me = mobility_edge(scan)?;
    let edge = write_csv(dir, "mobility_edge.csv", &me.points)?;
    let grid = write_csv(dir, "mobility_grid.csv", &me.grid_rows)?;
    let dome = dome_summary(&me.points);
    println!(
        "mean (J/Δ)_c: ε∈[0.4,0.6] {:.3} ({} states), ε<0.15 {:.3} ({}), ε>0.85 {:.3} ({})",
        dome.center, dome.center_count, dome.low_edge, dome.low_count, dome.high_edge, dome.high_count
    );
    let failed = assert_dome && !dome.is_dome();
    if failed {
        eprintln!("assertion failed: the middle of the spectrum does not have the largest critical disorder");
    }
    Ok(RunOutput {
        outputs: vec![edge, grid],
        failures: me.failures,
        summary: serde_json::json!({ "dome": dome, "is_dome": dome.is_dome() }),
        assertion_failed: failed,
    })
}

fn run_level_stats(scan: &ScanConfig, options: &GapRatioOptions, dir: &Path) -> Result<RunOutput> {
    let points = r_scan(scan, options)?;
    let goe = reference_mean(Ensemble::Goe);
    let poisson = reference_mean(Ensemble::Poisson);
    let rows: Vec<LevelRow> = points
        .iter()
        .map(|p| LevelRow {
            disorder: p.disorder,
            mean_r: p.mean_r,
            per_realization_mean: p.per_realization_mean,
            pooled_mean: p.pooled_mean,
            ci_low: p.ci_low,
            ci_high: p.ci_high,
            std_error: p.std_error,
            realizations: p.realizations,
            pairs: p.pairs,
            dropped: p.dropped,
            failures: p.failures,
            goe_reference: goe,
            poisson_reference: poisson,
        })
        .collect();
    let file = write_csv(dir, "level_stats.csv", &rows)?;
    for p in &points {
        println!("J/Δ = {:<6} ⟨r⟩ = {:.4} [{:.4}, {:.4}]", p.disorder, p.mean_r, p.ci_low, p.ci_high);
    }
    Ok(RunOutput {
        outputs: vec![file],
        failures: points.iter().map(|p| p.failures).sum(),
        summary: serde_json::json!({ "goe": goe, "poisson": poisson }),
        assertion_failed: false,
    })
}

fn csv_name(scenario: &str) -> String {
    let clean: String = scenario
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect();
    format!("svmc_{clean}.csv")
}

fn run_svmc(scenarios: &[Scenario], schedule: Option<&Path>, dir: &Path) -> Result<RunOutput> {
    let sched = match schedule {
        Some(p) => AnnealSchedule::load(p)?,
        None => AnnealSchedule::shipped(),
    };
    let mut names: Vec<&str> = scenarios.iter().map(|s| s.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidSvmc("scenario names must be unique".into()));
    }
    for sc in scenarios {
        sc.validate(&sched)?;
    }
    let mut outputs = Vec::new();
    let mut curves: Vec<MagnetizationCurve> = Vec::new();
    for sc in scenarios {
        let curve = magnetization_experiment(sc, &sched)?;
        if curve.points.iter().any(|p| p.degenerate_ramp) {
            eprintln!("warning: {}: some pause points leave no ramp sweeps", sc.name);
        }
        outputs.push(write_csv(dir, &csv_name(&sc.name), &curve.points)?);
        curves.push(curve);
    }
    let onsets: Vec<OnsetRow> = curves
        .iter()
        .map(|c| OnsetRow {
            scenario: &c.name,
            seed: c.seed,
            onset_ratio: c.onset_ratio(),
        })
        .collect();
    for o in &onsets {
        match o.onset_ratio {
            Some(r) => println!("{}: memory onset at B/A = {r}", o.scenario),
            None => println!("{}: no persistent departure from zero", o.scenario),
        }
    }
    outputs.push(write_csv(dir, "svmc_onsets.csv", &onsets)?);
    Ok(RunOutput {
        outputs,
        failures: 0,
        summary: serde_json::to_value(&onsets).expect("onsets serialize"),
        assertion_failed: false,
    })
}

/// Runs a resolved command into `dir` and writes its manifest.
pub fn execute(run: &ResolvedRun, master_seed: u64, dir: &Path) -> Result<(RunManifest, bool)> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let started_at = chrono::Utc::now().to_rfc3339();
    let clock = Instant::now();
    let out = match run {
        ResolvedRun::EntropyScan { scan } => run_entropy_scan(scan, dir)?,
        ResolvedRun::MobilityEdge { scan, assert_dome } => run_mobility_edge(scan, *assert_dome, dir)?,
        ResolvedRun::LevelStats { scan, options } => run_level_stats(scan, options, dir)?,
        ResolvedRun::Svmc { scenarios, schedule } => run_svmc(scenarios, schedule.as_deref(), dir)?,
    };
    let manifest = RunManifest {
        run: run.clone(),
        master_seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        started_at,
        finished_at: chrono::Utc::now().to_rfc3339(),
        wall_seconds: clock.elapsed().as_secs_f64(),
        outputs: out.outputs,
        failures: out.failures,
        summary: out.summary,
    };
    write_json_atomic(&dir.join(MANIFEST_NAME), &manifest)?;
    Ok((manifest, out.assertion_failed))
}

/// Reruns `manifest_path` into `dir` and lists the outputs whose bytes differ
/// from the recorded ones.
pub fn replay(manifest_path: &Path, dir: &Path) -> Result<Vec<String>> {
    let recorded: RunManifest = read_json(manifest_path)?;
    let source = manifest_path.parent().unwrap_or(Path::new("."));
    let same_dir = fs::canonicalize(source).ok() == fs::canonicalize(dir).ok();
    if same_dir {
        return Err(Error::InvalidConfig(
            "replay output directory must differ from the manifest's directory".into(),
        ));
    }
    let (fresh, _) = execute(&recorded.run, recorded.master_seed, dir)?;
    let mut mismatched = Vec::new();
    for name in &recorded.outputs {
        let old = fs::read(source.join(name)).map_err(|e| Error::io(source.join(name), e))?;
        let new = fs::read(dir.join(name)).map_err(|e| Error::io(dir.join(name), e))?;
        if old != new || !fresh.outputs.contains(name) {
            mismatched.push(name.clone());
        }
    }
    Ok(mismatched)
}

fn dispatch(cli: &Cli) -> Result<u8> {
    if let Command::Replay { manifest } = &cli.command {
        let mismatched = replay(manifest, &cli.out_dir)?;
        if mismatched.is_empty() {
            println!("replay reproduced every output byte for byte");
            return Ok(0);
        }
        eprintln!("replay mismatch: {}", mismatched.join(", "));
        return Ok(3);
    }
    let (run, seed) = resolve(cli)?;
    let (manifest, failed) = execute(&run, seed, &cli.out_dir)?;
    println!(
        "{}: wrote {} to {} (seed {})",
        manifest.run.name(),
        manifest.outputs.join(", "),
        cli.out_dir.display(),
        seed
    );
    Ok(if failed { 3 } else { 0 })
}

pub fn main_with(cli: Cli) -> ExitCode {
    let body = || dispatch(&cli);
    let result = match cli.workers {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(body),
            Err(e) => {
                eprintln!("error: cannot start {n} workers: {e}");
                return ExitCode::from(2);
            }
        },
        None => body(),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
