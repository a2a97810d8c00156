//! Rate experiments: n-grids, log-log slope fits against the predicted
//! exponents, and the CSV/JSON artifacts.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cumulants::{
    cumulants_mc, exact_record_m2, kappa3_exact, predicted_exponent, regime_limit, ChaosSpec, CumulantRecord, Method,
    RateExponent, RateTarget,
};
use crate::density::{curve_distance, edgeworth_reference, gaussian_curve, CurveMeta, CurveNorm, DensityCurve, UniformGrid};
use crate::error::{Error, Result};
use crate::quadform::{exact_density_m2, QuadFormSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub n_values: Vec<usize>,
    pub log_power_removed: i32,
}

/// Least squares of `log y - log_power * log log n` on `log n`.
pub fn fit_loglog(points: &[(usize, f64)], log_power: i32) -> Result<RateFit> {
    if points.len() < 4 {
        return Err(Error::InvalidParameter(format!("need at least 4 points, got {}", points.len())));
    }
    if points.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidParameter("n values must be strictly increasing".into()));
    }
    if let Some(&(n, y)) = points.iter().find(|(_, y)| !(*y > 0.0) || !y.is_finite()) {
        return Err(Error::InvalidParameter(format!("nonpositive value {y} at n = {n}")));
    }
    if log_power != 0 && points[0].0 < 3 {
        return Err(Error::InvalidParameter("log correction needs n >= 3".into()));
    }
    let xs: Vec<f64> = points.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = points
        .iter()
        .zip(&xs)
        .map(|(&(_, y), &lx)| y.ln() - log_power as f64 * lx.ln())
        .collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = (ssr / (k - 2.0) / sxx).sqrt();
    Ok(RateFit { slope, intercept, stderr, n_values: points.iter().map(|p| p.0).collect(), log_power_removed: log_power })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlopeTolerances {
    pub cumulant: f64,
    pub boundary: f64,
    pub monte_carlo: f64,
    pub distance: f64,
    pub edgeworth: f64,
}

impl Default for SlopeTolerances {
    fn default() -> Self {
        Self { cumulant: 0.02, boundary: 0.1, monte_carlo: 0.1, distance: 0.05, edgeworth: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub m: u32,
    pub hurst: f64,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default = "default_grid")]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_norms")]
    pub norms: Vec<String>,
    #[serde(default = "default_orders")]
    pub derivative_orders: Vec<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Largest n for which exact densities are computed.
    #[serde(default = "default_density_cap")]
    pub density_cap: usize,
    /// Paths per grid point written by `simulate`.
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default)]
    pub tolerances: SlopeTolerances,
}

fn default_nu() -> f64 {
    1.0
}
fn default_grid() -> Vec<usize> {
    (7..=13).map(|k| 1usize << k).collect()
}
fn default_reps() -> usize {
    100_000
}
fn default_norms() -> Vec<String> {
    vec!["sup".into(), "L1".into(), "L2".into()]
}
fn default_orders() -> Vec<usize> {
    vec![0]
}
fn default_density_cap() -> usize {
    2048
}
fn default_paths() -> usize {
    16
}

impl ExperimentConfig {
    pub fn new(m: u32, hurst: f64, n_grid: Vec<usize>) -> Self {
        Self {
            m,
            hurst,
            nu: default_nu(),
            n_grid,
            reps: default_reps(),
            seed: 0,
            norms: default_norms(),
            derivative_orders: default_orders(),
            output_dir: None,
            density_cap: default_density_cap(),
            paths: default_paths(),
            tolerances: SlopeTolerances::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.m < 2 {
            return bad(format!("m must be at least 2, got {}", self.m));
        }
        if !(self.hurst > 0.0 && self.hurst < regime_limit(self.m)) {
            return bad(format!("hurst {} outside (0, {}) for m = {}", self.hurst, regime_limit(self.m), self.m));
        }
        if self.nu == 0.0 || !self.nu.is_finite() {
            return bad("nu must be finite and nonzero".into());
        }
        if self.n_grid.len() < 4 {
            return bad(format!("n_grid needs at least 4 points, got {}", self.n_grid.len()));
        }
        if self.n_grid[0] < 3 || self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return bad("n_grid must be strictly increasing and start at n >= 3".into());
        }
        if self.m > 2 && self.reps < 1000 {
            return bad(format!("reps must be at least 1000, got {}", self.reps));
        }
        if self.norms.is_empty() {
            return bad("norms must not be empty".into());
        }
        for s in &self.norms {
            CurveNorm::parse(s)?;
        }
        if let Some(&j) = self.derivative_orders.iter().find(|&&j| j > 4) {
            return bad(format!("derivative order {j} exceeds 4"));
        }
        let t = &self.tolerances;
        if [t.cumulant, t.boundary, t.monte_carlo, t.distance, t.edgeworth].iter().any(|v| !(*v > 0.0)) {
            return bad("tolerances must be positive".into());
        }
        Ok(())
    }

    pub fn parsed_norms(&self) -> Result<Vec<CurveNorm>> {
        self.norms.iter().map(|s| CurveNorm::parse(s)).collect()
    }
}

/// Per-grid-point seed derived from the master seed and `n`.
pub fn point_seed(seed: u64, n: usize) -> u64 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(n as u64);
    rng.next_u64()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    pub n: usize,
    pub j: usize,
    pub norm: CurveNorm,
    pub distance: f64,
    pub edgeworth_distance: f64,
    pub m_stat: f64,
    pub kappa4: f64,
}

impl DistanceRow {
    pub const CSV_HEADER: &'static str = "n,j,norm,distance,edgeworth_distance,m_stat,ratio,edgeworth_ratio";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeRow {
    pub quantity: String,
    pub fit: RateFit,
    pub predicted: RateExponent,
    pub tolerance: f64,
    pub passed: bool,
}

impl SlopeRow {
    pub const CSV_HEADER: &'static str = "quantity,slope,stderr,intercept,log_power,predicted,tolerance,passed";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub config: ExperimentConfig,
    pub records: Vec<CumulantRecord>,
    pub distances: Vec<DistanceRow>,
    pub slopes: Vec<SlopeRow>,
    /// Grid points where a Monte Carlo standard error exceeds half the estimate.
    pub flags: Vec<String>,
    pub passed: bool,
}

/// Cumulant record at one grid point: exact for `m = 2`; otherwise Monte
/// Carlo, with the exact third cumulant substituted for even `m`.
pub fn grid_record(config: &ExperimentConfig, n: usize) -> Result<CumulantRecord> {
    if config.m == 2 {
        return exact_record_m2(config.hurst, n, config.nu);
    }
    let spec = ChaosSpec::new(config.m, config.nu, config.hurst, n)?;
    let mut rec = cumulants_mc(&spec, config.reps, point_seed(config.seed, n))?.record;
    if config.m % 2 == 0 {
        rec.kappa3 = kappa3_exact(&spec);
        rec.se3 = 0.0;
        rec.method = Method::Mixed;
    } else {
        rec.kappa3 = 0.0;
        rec.se3 = 0.0;
    }
    rec.refresh_m_stat();
    Ok(rec)
}

pub fn cumulant_records(config: &ExperimentConfig) -> Result<Vec<CumulantRecord>> {
    config.validate()?;
    config.n_grid.par_iter().map(|&n| grid_record(config, n)).collect()
}

fn mc_flags(records: &[CumulantRecord]) -> Vec<String> {
    let mut flags = Vec::new();
    for r in records.iter().filter(|r| r.method != Method::Exact) {
        if r.se4 > 0.5 * r.kappa4.abs() {
            flags.push(format!("n = {}: se4 {:.3e} exceeds half of kappa4 {:.3e}", r.n, r.se4, r.kappa4));
        }
        if r.method == Method::MonteCarlo && r.m % 2 == 0 && r.se3 > 0.5 * r.kappa3.abs() {
            flags.push(format!("n = {}: se3 {:.3e} exceeds half of kappa3 {:.3e}", r.n, r.se3, r.kappa3));
        }
    }
    flags
}

/// Exact density of `F_n` (`m = 2`) and its distance to the Gaussian and
/// to the one-term Edgeworth reference, for each order and norm.
pub fn density_distances(
    config: &ExperimentConfig,
    record: &CumulantRecord,
    grid: UniformGrid,
) -> Result<(Vec<DensityCurve>, Vec<DistanceRow>)> {
    let spec = QuadFormSpec::new(config.hurst, record.n, config.nu)?;
    let norms = config.parsed_norms()?;
    let mut curves = Vec::new();
    let mut rows = Vec::new();
    for &j in &config.derivative_orders {
        let mut exact = exact_density_m2(&spec, grid, j)?;
        exact.meta = CurveMeta { hurst: Some(config.hurst), n: Some(record.n), m: Some(2) };
        let gauss = gaussian_curve(grid, j);
        let edge = edgeworth_reference(record.kappa3, grid, j)?;
        for &norm in &norms {
            rows.push(DistanceRow {
                n: record.n,
                j,
                norm,
                distance: curve_distance(&exact, &gauss, norm)?,
                edgeworth_distance: curve_distance(&exact, &edge, norm)?,
                m_stat: record.m_stat,
                kappa4: record.kappa4,
            });
        }
        curves.push(exact);
    }
    Ok((curves, rows))
}

fn slope_row(quantity: String, points: &[(usize, f64)], predicted: RateExponent, tolerance: f64) -> Result<SlopeRow> {
    let fit = fit_loglog(points, predicted.log_power)?;
    let passed = (fit.slope - predicted.exponent).abs() <= tolerance;
    Ok(SlopeRow { quantity, fit, predicted, tolerance, passed })
}

pub fn cumulant_slopes(config: &ExperimentConfig, records: &[CumulantRecord]) -> Result<Vec<SlopeRow>> {
    let tol = &config.tolerances;
    let mut out = Vec::new();
    let mut targets = vec![(RateTarget::Kappa4, "kappa4"), (RateTarget::M, "M")];
    if config.m % 2 == 0 {
        targets.insert(0, (RateTarget::Kappa3, "kappa3"));
    }
    for (target, name) in targets {
        let predicted = predicted_exponent(config.m, config.hurst, target)?;
        let estimated = match target {
            RateTarget::Kappa3 => false,
            _ => config.m > 2,
        };
        let tolerance = if predicted.log_power != 0 {
            tol.boundary
        } else if estimated {
            tol.monte_carlo
        } else {
            tol.cumulant
        };
        let points: Vec<(usize, f64)> = records
            .iter()
            .map(|r| {
                let y = match target {
                    RateTarget::Kappa3 => r.kappa3.abs(),
                    RateTarget::Kappa4 => r.kappa4,
                    RateTarget::M => r.m_stat,
                };
                (r.n, y)
            })
            .collect();
        out.push(slope_row(name.into(), &points, predicted, tolerance)?);
    }
    Ok(out)
}

pub fn distance_slopes(config: &ExperimentConfig, rows: &[DistanceRow]) -> Result<Vec<SlopeRow>> {
    let tol = &config.tolerances;
    let m_rate = predicted_exponent(config.m, config.hurst, RateTarget::M)?;
    let k4_rate = predicted_exponent(config.m, config.hurst, RateTarget::Kappa4)?;
    let mut out = Vec::new();
    for &j in &config.derivative_orders {
        for norm in config.parsed_norms()? {
            let sel: Vec<&DistanceRow> = rows.iter().filter(|r| r.j == j && r.norm == norm).collect();
            if sel.len() < 4 {
                continue;
            }
            let d: Vec<(usize, f64)> = sel.iter().map(|r| (r.n, r.distance)).collect();
            let dist_tol = if m_rate.log_power != 0 { tol.boundary } else { tol.distance };
            out.push(slope_row(format!("distance_j{j}_{}", norm.label()), &d, m_rate, dist_tol)?);
            let e: Vec<(usize, f64)> = sel.iter().map(|r| (r.n, r.edgeworth_distance)).collect();
            let edge_tol = if k4_rate.log_power != 0 { tol.boundary } else { tol.edgeworth };
            out.push(slope_row(format!("edgeworth_j{j}_{}", norm.label()), &e, k4_rate, edge_tol)?);
        }
    }
    Ok(out)
}

pub fn run_rate_experiment(config: &ExperimentConfig) -> Result<RateReport> {
    let records = cumulant_records(config)?;
    let flags = mc_flags(&records);
    for f in &flags {
        log::warn!("{f}");
    }
    let mut slopes = cumulant_slopes(config, &records)?;
    let mut distances = Vec::new();
    if config.m == 2 && !config.derivative_orders.is_empty() {
        let grid = UniformGrid::standard();
        let per_point: Vec<Vec<DistanceRow>> = records
            .par_iter()
            .filter(|r| r.n <= config.density_cap)
            .map(|r| density_distances(config, r, grid).map(|(_, rows)| rows))
            .collect::<Result<_>>()?;
        distances = per_point.into_iter().flatten().collect();
        slopes.extend(distance_slopes(config, &distances)?);
    }
    let passed = slopes.iter().all(|s| s.passed);
    let report = RateReport { config: config.clone(), records, distances, slopes, flags, passed };
    if let Some(dir) = &config.output_dir {
        write_report(&report, dir)?;
    }
    Ok(report)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(dir.join(name))?))
}

pub fn write_cumulants_csv(records: &[CumulantRecord], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = create(dir, "cumulants.csv")?;
    writeln!(w, "{}", CumulantRecord::CSV_HEADER)?;
    for r in records {
        r.write_csv_row(&mut w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_distances_csv(rows: &[DistanceRow], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = create(dir, "distances.csv")?;
    writeln!(w, "{}", DistanceRow::CSV_HEADER)?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{:e},{:e},{:e},{:e},{:e}",
            r.n,
            r.j,
            r.norm.label(),
            r.distance,
            r.edgeworth_distance,
            r.m_stat,
            r.distance / r.m_stat,
            r.edgeworth_distance / r.kappa4
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_slopes_csv(rows: &[SlopeRow], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = create(dir, "slopes.csv")?;
    writeln!(w, "{}", SlopeRow::CSV_HEADER)?;
    for r in rows {
        writeln!(
            w,
            "{},{:.6},{:.3e},{:.6},{},{:.6},{},{}",
            r.quantity,
            r.fit.slope,
            r.fit.stderr,
            r.fit.intercept,
            r.fit.log_power_removed,
            r.predicted.exponent,
            r.tolerance,
            r.passed
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_report(report: &RateReport, dir: &Path) -> Result<()> {
    write_cumulants_csv(&report.records, dir)?;
    write_distances_csv(&report.distances, dir)?;
    write_slopes_csv(&report.slopes, dir)?;
    let mut w = create(dir, "summary.json")?;
    serde_json::to_writer_pretty(&mut w, report)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
