//! Disorder-ensemble scans: entropy statistics over a grid of disorder
//! strengths, variance-peak critical points, mobility-edge diagrams, gap-ratio
//! curves, and bootstrap confidence intervals.
//!
//! Realization `r` at grid point `g` uses the disorder seed
//! `derive_seed(master_seed, [g, r])`. Realizations may run on any number of
//! workers; results are always collected and reduced in realization order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chimera::{named_bipartition, tile_horizontal, Bipartition, ChimeraGraph, CutName};
use crate::eigen::{diagonalize, eigenvalues, middle_index, EigenDecomposition};
use crate::entanglement::Reducer;
use crate::error::{Error, Result};
use crate::levelstats::{energy_density, gap_ratios, DEFAULT_DEGENERACY_TOL};
use crate::model::{sample_disorder, HamiltonianBuilder};
use crate::rng::{derive_seed, Stream};

/// Maximum tolerated share of eigensolver failures per grid point.
pub const MAX_FAILURE_FRACTION: f64 = 0.01;

const BOOTSTRAP_STREAM: u64 = 0xb007;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    #[serde(default = "one_cell")]
    pub cells: usize,
    pub half_size: usize,
}

fn one_cell() -> usize {
    1
}

impl GraphSpec {
    pub fn cell(half_size: usize) -> Self {
        GraphSpec {
            cells: 1,
            half_size,
        }
    }

    pub fn build(&self) -> Result<ChimeraGraph> {
        tile_horizontal(self.cells, self.half_size)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenstateSelector {
    Middle,
    All,
    Indices(Vec<usize>),
}

impl EigenstateSelector {
    pub fn resolve(&self, dim: usize) -> Result<Vec<usize>> {
        let out = match self {
            EigenstateSelector::Middle => vec![middle_index(dim)],
            EigenstateSelector::All => (0..dim).collect(),
            EigenstateSelector::Indices(list) => {
                if let Some(&bad) = list.iter().find(|&&n| n >= dim) {
                    return Err(Error::InvalidConfig(format!(
                        "eigenstate index {bad} out of range for dimension {dim}"
                    )));
                }
                list.clone()
            }
        };
        if out.is_empty() {
            return Err(Error::InvalidConfig("empty eigenstate selection".into()));
        }
        Ok(out)
    }
}

/// A named unit-cell cut or an explicit list of the vertices in part A.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PartitionSpec {
    Named(CutName),
    Explicit(Vec<usize>),
}

impl PartitionSpec {
    /// Cut used when a config names none: up-down on the 8-spin cell, otherwise
    /// the first `⌈k/2⌉` left and `⌊k/2⌋` right vertices of a single cell.
    /// Tilings have no natural half cut and keep up-down, which then fails
    /// validation and asks for an explicit list.
    pub fn default_for(graph: &GraphSpec) -> Self {
        let k = graph.half_size;
        if graph.cells != 1 || k == 4 {
            return PartitionSpec::Named(CutName::UpDown);
        }
        let mut a: Vec<usize> = (0..k.div_ceil(2)).collect();
        a.extend(k..k + k / 2);
        PartitionSpec::Explicit(a)
    }

    pub fn resolve(&self, g: &ChimeraGraph) -> Result<Bipartition> {
        match self {
            PartitionSpec::Named(name) => named_bipartition(g, *name),
            PartitionSpec::Explicit(a) => Bipartition::from_part_a(a, g.n_spins()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub graph: GraphSpec,
    /// Disorder strengths `J/Δ`, positive and strictly increasing.
    pub disorder_grid: Vec<f64>,
    pub realizations: usize,
    pub eigenstates: EigenstateSelector,
    pub partition: PartitionSpec,
    pub master_seed: u64,
    #[serde(default = "unit_delta")]
    pub delta: f64,
}

fn unit_delta() -> f64 {
    1.0
}

/// Evenly spaced grid `start, start + step, …` up to `stop` inclusive (within
/// rounding).
pub fn linear_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + step * i as f64).collect()
}

pub fn default_grid() -> Vec<f64> {
    linear_grid(0.5, 12.0, 0.5)
}

struct Prepared {
    graph: ChimeraGraph,
    partition: Bipartition,
    indices: Vec<usize>,
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        self.prepare().map(|_| ())
    }

    fn prepare(&self) -> Result<Prepared> {
        if self.disorder_grid.is_empty() {
            return Err(Error::InvalidConfig("disorder grid is empty".into()));
        }
        if self.disorder_grid.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidConfig("disorder grid values must be positive".into()));
        }
        if self.disorder_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "disorder grid must be strictly increasing".into(),
            ));
        }
        if self.realizations < 2 {
            return Err(Error::InvalidConfig("at least two realizations are required".into()));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidConfig("delta must be positive".into()));
        }
        let graph = self.graph.build()?;
        let limit = HamiltonianBuilder::default().max_spins;
        if graph.n_spins() > limit {
            return Err(Error::DimensionOverflow {
                n_spins: graph.n_spins(),
                max: limit,
            });
        }
        let partition = self.partition.resolve(&graph)?;
        let indices = self.eigenstates.resolve(1 << graph.n_spins())?;
        Ok(Prepared {
            graph,
            partition,
            indices,
        })
    }
}

pub fn realization_seed(master_seed: u64, grid_index: usize, realization: usize) -> u64 {
    derive_seed(master_seed, &[grid_index as u64, realization as u64])
}

/// Runs `work` on every realization of one grid point, in parallel, and returns
/// the successful outputs in realization order plus the eigensolver failure
/// count.
fn run_grid_point<T, F>(
    cfg: &ScanConfig,
    graph: &ChimeraGraph,
    grid_index: usize,
    seeder: &(dyn Fn(usize, usize) -> u64 + Sync),
    work: F,
) -> Result<(Vec<T>, usize)>
where
    T: Send,
    F: Fn(&crate::model::DenseHamiltonian) -> Result<T> + Sync,
{
    let strength = cfg.disorder_grid[grid_index] * cfg.delta;
    let outcomes: Vec<Result<T>> = (0..cfg.realizations)
        .into_par_iter()
        .map(|r| {
            let d = sample_disorder(graph, strength, seeder(grid_index, r))?;
            let h = HamiltonianBuilder::default().tfi(graph, &d, cfg.delta)?;
            work(&h)
        })
        .collect();
    let mut kept = Vec::with_capacity(outcomes.len());
    let mut failures = 0;
    for outcome in outcomes {
        match outcome {
            Ok(v) => kept.push(v),
            Err(Error::NoConvergence { .. }) => failures += 1,
            Err(e) => return Err(e),
        }
    }
    if failures as f64 > MAX_FAILURE_FRACTION * cfg.realizations as f64 {
        return Err(Error::TooManyFailures {
            failures,
            total: cfg.realizations,
        });
    }
    Ok((kept, failures))
}

/// Mean, population variance `⟨x²⟩ − ⟨x⟩²` and standard error (sample standard
/// deviation over `√n`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub count: usize,
}

pub fn moments(values: &[f64]) -> Moments {
    let n = values.len();
    if n == 0 {
        return Moments {
            mean: f64::NAN,
            variance: f64::NAN,
            std_error: f64::NAN,
            count: 0,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|x| (x - mean).powi(2)).sum();
    let std_error = if n > 1 {
        (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
    } else {
        0.0
    };
    Moments {
        mean,
        variance: ss / n as f64,
        std_error,
        count: n,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyPoint {
    pub disorder: f64,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub samples: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyScanResult {
    pub partition: Bipartition,
    pub points: Vec<EntropyPoint>,
}

impl EntropyScanResult {
    pub fn failures(&self) -> usize {
        self.points.iter().map(|p| p.failures).sum()
    }

    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.disorder).collect()
    }

    pub fn variances(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.variance).collect()
    }

    pub fn mean_at(&self, disorder: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|p| (p.disorder - disorder).abs() < 1e-9)
            .map(|p| p.mean)
    }
}

/// Entropy statistics of the selected eigenstates over the disorder grid.
pub fn entropy_scan(cfg: &ScanConfig) -> Result<EntropyScanResult> {
    let mut out = entropy_scan_partitions(cfg, std::slice::from_ref(&cfg.partition))?;
    Ok(out.remove(0))
}

/// Like [`entropy_scan`] but evaluates several cuts on the same
/// diagonalizations; `cfg.partition` is ignored in favour of `partitions`.
pub fn entropy_scan_partitions(cfg: &ScanConfig, partitions: &[PartitionSpec]) -> Result<Vec<EntropyScanResult>> {
    let master = cfg.master_seed;
    entropy_scan_seeded(cfg, partitions, &move |g, r| realization_seed(master, g, r))
}

/// Entropy scan with an explicit `(grid_index, realization) -> seed` map.
pub fn entropy_scan_seeded(
    cfg: &ScanConfig,
    partitions: &[PartitionSpec],
    seeder: &(dyn Fn(usize, usize) -> u64 + Sync),
) -> Result<Vec<EntropyScanResult>> {
    let prep = cfg.prepare()?;
    if partitions.is_empty() {
        return Err(Error::InvalidConfig("no partition given".into()));
    }
    let cuts = partitions
        .iter()
        .map(|p| p.resolve(&prep.graph))
        .collect::<Result<Vec<_>>>()?;
    let reducers: Vec<Reducer> = cuts.iter().map(Reducer::new).collect();
    let mut results: Vec<EntropyScanResult> = cuts
        .iter()
        .map(|p| EntropyScanResult {
            partition: p.clone(),
            points: Vec::with_capacity(cfg.disorder_grid.len()),
        })
        .collect();

    for (gi, &disorder) in cfg.disorder_grid.iter().enumerate() {
        let (per_realization, failures) = run_grid_point(cfg, &prep.graph, gi, seeder, |h| {
            let e = diagonalize(h)?;
            reducers
                .iter()
                .map(|red| {
                    prep.indices
                        .iter()
                        .map(|&n| red.entropy_of(e.vector(n)))
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<Vec<f64>>>>()
        })?;
        for (ci, result) in results.iter_mut().enumerate() {
            let samples: Vec<f64> = per_realization
                .iter()
                .flat_map(|cuts| cuts[ci].iter().copied())
                .collect();
            let m = moments(&samples);
            result.points.push(EntropyPoint {
                disorder,
                mean: m.mean,
                variance: m.variance,
                std_error: m.std_error,
                samples: m.count,
                failures,
            });
        }
    }
    Ok(results)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    /// Grid value with the largest variance.
    pub disorder: f64,
    pub grid_index: usize,
    pub variance: f64,
    /// Vertex of the parabola through the argmax and its two neighbours.
    pub refined: Option<f64>,
    /// The maximum sits on the first or last grid point.
    pub boundary: bool,
}

/// Location of the variance maximum on a grid.
pub fn variance_peak(grid: &[f64], variances: &[f64]) -> Result<CriticalPoint> {
    if grid.is_empty() || grid.len() != variances.len() {
        return Err(Error::InsufficientData("empty or mismatched variance curve".into()));
    }
    let mut best = 0;
    for (i, &v) in variances.iter().enumerate() {
        if v > variances[best] {
            best = i;
        }
    }
    let last = grid.len() - 1;
    let boundary = best == 0 || best == last;
    let refined = if boundary {
        None
    } else {
        parabola_vertex(
            (grid[best - 1], variances[best - 1]),
            (grid[best], variances[best]),
            (grid[best + 1], variances[best + 1]),
        )
    };
    Ok(CriticalPoint {
        disorder: grid[best],
        grid_index: best,
        variance: variances[best],
        refined,
        boundary,
    })
}

fn parabola_vertex((x0, y0): (f64, f64), (x1, y1): (f64, f64), (x2, y2): (f64, f64)) -> Option<f64> {
    let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
    let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    if den == 0.0 || !num.is_finite() {
        return None;
    }
    Some((x1 - 0.5 * num / den).clamp(x0, x2))
}

pub fn critical_point(result: &EntropyScanResult) -> Result<CriticalPoint> {
    variance_peak(&result.grid(), &result.variances())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MobilityEdgePoint {
    pub eigenstate: usize,
    pub critical_disorder: f64,
    pub mean_energy_density: f64,
    pub energy_density_error: f64,
    pub boundary: bool,
}

/// Per `(eigenstate, grid point)` statistics behind the mobility edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MobilityGridRow {
    pub eigenstate: usize,
    pub disorder: f64,
    pub mean_entropy: f64,
    pub entropy_variance: f64,
    pub mean_energy_density: f64,
    pub energy_density_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MobilityEdge {
    pub points: Vec<MobilityEdgePoint>,
    pub grid_rows: Vec<MobilityGridRow>,
    pub failures: usize,
}

/// Critical disorder of every selected eigenstate from its own entropy
/// variance peak, with the realization-averaged energy density at that grid
/// point.
pub fn mobility_edge(cfg: &ScanConfig) -> Result<MobilityEdge> {
    let prep = cfg.prepare()?;
    let master = cfg.master_seed;
    let seeder = move |g: usize, r: usize| realization_seed(master, g, r);
    let reducer = Reducer::new(&prep.partition);
    let n_sel = prep.indices.len();
    let mut grid_rows = Vec::with_capacity(n_sel * cfg.disorder_grid.len());
    let mut failures = 0;

    for (gi, &disorder) in cfg.disorder_grid.iter().enumerate() {
        let (per_realization, fails) = run_grid_point(cfg, &prep.graph, gi, &seeder, |h| {
            let e: EigenDecomposition = diagonalize(h)?;
            let eps = energy_density(e.values())?;
            prep.indices
                .iter()
                .map(|&n| Ok((reducer.entropy_of(e.vector(n))?, eps.densities[n])))
                .collect::<Result<Vec<(f64, f64)>>>()
        })?;
        failures += fails;
        for (k, &n) in prep.indices.iter().enumerate() {
            let s: Vec<f64> = per_realization.iter().map(|row| row[k].0).collect();
            let eps: Vec<f64> = per_realization.iter().map(|row| row[k].1).collect();
            let ms = moments(&s);
            let me = moments(&eps);
            grid_rows.push(MobilityGridRow {
                eigenstate: n,
                disorder,
                mean_entropy: ms.mean,
                entropy_variance: ms.variance,
                mean_energy_density: me.mean,
                energy_density_error: me.std_error,
            });
        }
    }

    let n_grid = cfg.disorder_grid.len();
    let mut points = Vec::with_capacity(n_sel);
    for (k, &n) in prep.indices.iter().enumerate() {
        let rows: Vec<&MobilityGridRow> = (0..n_grid).map(|gi| &grid_rows[gi * n_sel + k]).collect();
        let vars: Vec<f64> = rows.iter().map(|r| r.entropy_variance).collect();
        let peak = variance_peak(&cfg.disorder_grid, &vars)?;
        let at = rows[peak.grid_index];
        points.push(MobilityEdgePoint {
            eigenstate: n,
            critical_disorder: peak.disorder,
            mean_energy_density: at.mean_energy_density,
            energy_density_error: at.energy_density_error,
            boundary: peak.boundary,
        });
    }
    Ok(MobilityEdge {
        points,
        grid_rows,
        failures,
    })
}

/// Mean critical disorder in the middle energy-density band versus the two
/// spectral edges.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomeSummary {
    pub center: f64,
    pub low_edge: f64,
    pub high_edge: f64,
    pub center_count: usize,
    pub low_count: usize,
    pub high_count: usize,
}

impl DomeSummary {
    pub fn is_dome(&self) -> bool {
        self.center_count > 0
            && self.low_count > 0
            && self.high_count > 0
            && self.center > self.low_edge
            && self.center > self.high_edge
    }
}

/// Bands: `ε ∈ [0.4, 0.6]`, `ε < 0.15`, `ε > 0.85`.
pub fn dome_summary(points: &[MobilityEdgePoint]) -> DomeSummary {
    let band = |pred: &dyn Fn(f64) -> bool| {
        let sel: Vec<f64> = points
            .iter()
            .filter(|p| pred(p.mean_energy_density))
            .map(|p| p.critical_disorder)
            .collect();
        let mean = if sel.is_empty() {
            f64::NAN
        } else {
            sel.iter().sum::<f64>() / sel.len() as f64
        };
        (mean, sel.len())
    };
    let (center, center_count) = band(&|e| (0.4..=0.6).contains(&e));
    let (low_edge, low_count) = band(&|e| e < 0.15);
    let (high_edge, high_count) = band(&|e| e > 0.85);
    DomeSummary {
        center,
        low_edge,
        high_edge,
        center_count,
        low_count,
        high_count,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RAveraging {
    /// Mean within each realization, then an unweighted mean across them.
    PerRealization,
    /// One mean over all gap pairs of all realizations.
    Pooled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRatioOptions {
    pub degeneracy_tol: f64,
    pub resamples: usize,
    pub averaging: RAveraging,
}

impl Default for GapRatioOptions {
    fn default() -> Self {
        GapRatioOptions {
            degeneracy_tol: DEFAULT_DEGENERACY_TOL,
            resamples: 1000,
            averaging: RAveraging::PerRealization,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRatioPoint {
    pub disorder: f64,
    /// `⟨r⟩` under the requested averaging.
    pub mean_r: f64,
    pub per_realization_mean: f64,
    pub pooled_mean: f64,
    /// 95% bootstrap interval over per-realization means.
    pub ci_low: f64,
    pub ci_high: f64,
    pub std_error: f64,
    pub realizations: usize,
    pub pairs: usize,
    pub dropped: usize,
    pub failures: usize,
}

/// `⟨r⟩` at every grid point. Only eigenvalues are computed.
pub fn r_scan(cfg: &ScanConfig, opts: &GapRatioOptions) -> Result<Vec<GapRatioPoint>> {
    let prep = cfg.prepare()?;
    let master = cfg.master_seed;
    let seeder = move |g: usize, r: usize| realization_seed(master, g, r);
    let mut out = Vec::with_capacity(cfg.disorder_grid.len());
    for (gi, &disorder) in cfg.disorder_grid.iter().enumerate() {
        let (stats, failures) = run_grid_point(cfg, &prep.graph, gi, &seeder, |h| {
            gap_ratios(&eigenvalues(h)?, opts.degeneracy_tol)
        })?;
        let means: Vec<f64> = stats.iter().map(|s| s.mean_r).collect();
        let pairs: usize = stats.iter().map(|s| s.count).sum();
        let dropped = stats.iter().map(|s| s.dropped_degenerate).sum();
        let pooled = stats.iter().map(|s| s.mean_r * s.count as f64).sum::<f64>() / pairs as f64;
        let m = moments(&means);
        let boot = bootstrap(&means, opts.resamples, derive_seed(master, &[BOOTSTRAP_STREAM, gi as u64]))?;
        out.push(GapRatioPoint {
            disorder,
            mean_r: match opts.averaging {
                RAveraging::PerRealization => m.mean,
                RAveraging::Pooled => pooled,
            },
            per_realization_mean: m.mean,
            pooled_mean: pooled,
            ci_low: boot.ci_low,
            ci_high: boot.ci_high,
            std_error: m.std_error,
            realizations: stats.len(),
            pairs,
            dropped,
            failures,
        });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapEstimate {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub resamples: usize,
}

impl BootstrapEstimate {
    pub fn contains(&self, x: f64) -> bool {
        self.ci_low <= x && x <= self.ci_high
    }
}

pub const MIN_RESAMPLES: usize = 100;

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Percentile-method 95% interval for the mean.
///
/// The interval is widened, if needed, to contain the sample mean.
pub fn bootstrap(samples: &[f64], resamples: usize, seed: u64) -> Result<BootstrapEstimate> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("bootstrap of an empty sample".into()));
    }
    if resamples < MIN_RESAMPLES {
        return Err(Error::InvalidParameter(format!(
            "bootstrap needs at least {MIN_RESAMPLES} resamples, got {resamples}"
        )));
    }
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let mut stream = Stream::new(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| samples[stream.index(n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    Ok(BootstrapEstimate {
        mean,
        ci_low: quantile_sorted(&means, 0.025).min(mean),
        ci_high: quantile_sorted(&means, 0.975).max(mean),
        resamples,
    })
}

/// Two-level bootstrap: each group is reduced to its bootstrap mean, then the
/// group means are bootstrapped.
pub fn nested_bootstrap(groups: &[Vec<f64>], resamples: usize, seed: u64) -> Result<BootstrapEstimate> {
    let group_means = groups
        .iter()
        .enumerate()
        .map(|(i, g)| bootstrap(g, resamples, derive_seed(seed, &[i as u64])).map(|b| b.mean))
        .collect::<Result<Vec<f64>>>()?;
    bootstrap(&group_means, resamples, derive_seed(seed, &[u64::MAX]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn quick_cfg() -> ScanConfig {
        ScanConfig {
            graph: GraphSpec::cell(2),
            disorder_grid: vec![0.5, 2.0, 6.0],
            realizations: 8,
            eigenstates: EigenstateSelector::Middle,
            partition: PartitionSpec::Explicit(vec![0, 2]),
            master_seed: 17,
            delta: 1.0,
        }
    }

    #[test]
    fn config_validation() {
        let mut c = quick_cfg();
        c.disorder_grid = vec![1.0, 1.0];
        assert!(c.validate().is_err());
        let mut c = quick_cfg();
        c.disorder_grid = vec![0.0, 1.0];
        assert!(c.validate().is_err());
        let mut c = quick_cfg();
        c.realizations = 1;
        assert!(c.validate().is_err());
        let mut c = quick_cfg();
        c.eigenstates = EigenstateSelector::Indices(vec![]);
        assert!(c.validate().is_err());
        let mut c = quick_cfg();
        c.eigenstates = EigenstateSelector::Indices(vec![16]);
        assert!(c.validate().is_err());
        let mut c = quick_cfg();
        c.partition = PartitionSpec::Named(CutName::UpDown);
        assert!(matches!(c.validate(), Err(Error::PartitionGraphMismatch(4))));
        quick_cfg().validate().unwrap();
    }

    #[test]
    fn config_json_shapes() {
        let text = r#"{"graph":{"half_size":4},"disorder_grid":[1.0,2.0],"realizations":4,
            "eigenstates":"middle","partition":"up-down","master_seed":3}"#;
        let c: ScanConfig = serde_json::from_str(text).unwrap();
        assert_eq!(c.partition, PartitionSpec::Named(CutName::UpDown));
        assert_eq!(c.graph.cells, 1);
        assert_eq!(c.delta, 1.0);
        let text = r#"{"graph":{"half_size":2},"disorder_grid":[1.0],"realizations":4,
            "eigenstates":{"indices":[0,3]},"partition":[0,2],"master_seed":3}"#;
        let c: ScanConfig = serde_json::from_str(text).unwrap();
        assert_eq!(c.eigenstates, EigenstateSelector::Indices(vec![0, 3]));
        assert_eq!(c.partition, PartitionSpec::Explicit(vec![0, 2]));
    }

    #[test]
    fn grids() {
        let g = linear_grid(1.0, 10.0, 0.4);
        assert_eq!(g.len(), 23);
        assert_abs_diff_eq!(g[22], 9.8, epsilon = 1e-12);
        let d = default_grid();
        assert_eq!(d.len(), 24);
        assert_abs_diff_eq!(d[23], 12.0, epsilon = 1e-12);
    }

    #[test]
    fn moments_basic() {
        let m = moments(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert_eq!(m.variance, 1.25);
        assert_abs_diff_eq!(m.std_error, (5.0f64 / 3.0).sqrt() / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn scan_is_deterministic_and_bounded() {
        let c = quick_cfg();
        let a = entropy_scan(&c).unwrap();
        let b = entropy_scan(&c).unwrap();
        assert_eq!(a, b);
        for p in &a.points {
            assert!(p.variance >= 0.0);
            assert!(p.mean >= 0.0 && p.mean <= 2.0);
            assert_eq!(p.samples, 8);
        }
    }

    #[test]
    fn forced_equal_seeds_zero_variance() {
        let mut c = quick_cfg();
        c.realizations = 2;
        let res = entropy_scan_seeded(&c, &[c.partition.clone()], &|_, _| 99).unwrap();
        for p in &res[0].points {
            assert_eq!(p.variance, 0.0);
        }
    }

    #[test]
    fn scan_independent_of_worker_count() {
        let c = quick_cfg();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| entropy_scan(&c)).unwrap();
        let b = three.install(|| entropy_scan(&c)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn multi_partition_matches_single() {
        let c = quick_cfg();
        let other = PartitionSpec::Explicit(vec![0, 1]);
        let both = entropy_scan_partitions(&c, &[c.partition.clone(), other.clone()]).unwrap();
        assert_eq!(both[0], entropy_scan(&c).unwrap());
        let mut c2 = c.clone();
        c2.partition = other;
        assert_eq!(both[1], entropy_scan(&c2).unwrap());
    }

    #[test]
    fn peak_on_synthetic_curve() {
        let grid = linear_grid(1.0, 9.0, 1.0);
        let vars: Vec<f64> = grid.iter().map(|x| -(x - 4.0f64).powi(2)).collect();
        let p = variance_peak(&grid, &vars).unwrap();
        assert_eq!(p.disorder, 4.0);
        assert!(!p.boundary);
        assert_abs_diff_eq!(p.refined.unwrap(), 4.0, epsilon = 1e-12);

        let vars: Vec<f64> = grid.iter().map(|x| -(x - 4.3f64).powi(2)).collect();
        let p = variance_peak(&grid, &vars).unwrap();
        assert_eq!(p.disorder, 4.0);
        assert_abs_diff_eq!(p.refined.unwrap(), 4.3, epsilon = 1e-12);

        let p = variance_peak(&[2.0], &[0.1]).unwrap();
        assert!(p.boundary);
        let p = variance_peak(&grid, &grid).unwrap();
        assert!(p.boundary);
        assert_eq!(p.grid_index, grid.len() - 1);
        assert!(variance_peak(&[], &[]).is_err());
    }

    #[test]
    fn mobility_edge_small() {
        let mut c = quick_cfg();
        c.eigenstates = EigenstateSelector::All;
        let me = mobility_edge(&c).unwrap();
        assert_eq!(me.points.len(), 16);
        assert_eq!(me.grid_rows.len(), 16 * 3);
        for p in &me.points {
            assert!((0.0..=1.0).contains(&p.mean_energy_density));
            assert!(c.disorder_grid.contains(&p.critical_disorder));
        }
        // Ground state has ε = 1 in every realization, the top level ε = 0.
        assert_eq!(me.points[0].mean_energy_density, 1.0);
        assert_eq!(me.points[15].mean_energy_density, 0.0);
    }

    #[test]
    fn dome_summary_bands() {
        let mk = |eps: f64, jc: f64| MobilityEdgePoint {
            eigenstate: 0,
            critical_disorder: jc,
            mean_energy_density: eps,
            energy_density_error: 0.0,
            boundary: false,
        };
        let pts = [mk(0.05, 2.0), mk(0.5, 5.0), mk(0.45, 4.0), mk(0.95, 3.0)];
        let d = dome_summary(&pts);
        assert_eq!(d.center, 4.5);
        assert!(d.is_dome());
        let d = dome_summary(&[mk(0.5, 1.0), mk(0.05, 2.0), mk(0.95, 0.5)]);
        assert!(!d.is_dome());
    }

    #[test]
    fn r_scan_small() {
        let mut c = quick_cfg();
        c.graph = GraphSpec::cell(3);
        c.partition = PartitionSpec::Explicit(vec![0, 1, 3]);
        let pts = r_scan(&c, &GapRatioOptions::default()).unwrap();
        assert_eq!(pts.len(), 3);
        for p in &pts {
            assert!(p.ci_low <= p.per_realization_mean && p.per_realization_mean <= p.ci_high);
            assert_eq!(p.realizations, 8);
            assert!((0.0..=1.0).contains(&p.mean_r));
        }
    }

    #[test]
    fn bootstrap_constant_and_errors() {
        let b = bootstrap(&[2.5; 30], 200, 1).unwrap();
        assert_eq!((b.ci_low, b.mean, b.ci_high), (2.5, 2.5, 2.5));
        assert!(bootstrap(&[], 200, 1).is_err());
        assert!(bootstrap(&[1.0], 10, 1).is_err());
        let data: Vec<f64> = (0..50).map(|i| i as f64).collect();
        assert_eq!(bootstrap(&data, 300, 9).unwrap(), bootstrap(&data, 300, 9).unwrap());
    }

    #[test]
    fn nested_bootstrap_two_levels() {
        let groups = vec![vec![1.0, 1.0, 1.0], vec![3.0, 3.0], vec![2.0; 5]];
        let b = nested_bootstrap(&groups, 500, 4).unwrap();
        assert_abs_diff_eq!(b.mean, 2.0, epsilon = 1e-12);
        assert!(b.ci_low >= 1.0 && b.ci_high <= 3.0);
        assert!(b.ci_low < 2.0 && b.ci_high > 2.0);
    }
}
