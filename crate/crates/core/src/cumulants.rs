//! Breuer-Major functionals `F_n = V_n / sigma_n`, `V_n = n^{-1/2} sum nu H_m(X_l)`,
//! over fractional Gaussian noise: exact variance and third cumulant, Monte
//! Carlo k-statistics, and the predicted rate exponents.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fgn::{for_each_path, CirculantSampler, CovarianceModel};
use crate::hermite::{hermite_poly, ln_factorial};
use crate::quadform::{cumulants_from_traces, toeplitz_traces};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChaosSpec {
    pub m: u32,
    pub nu: f64,
    pub hurst: f64,
    pub n: usize,
}

/// Upper end of the Breuer-Major regime, `1 - 1/(2m)`.
pub fn regime_limit(m: u32) -> f64 {
    1.0 - 1.0 / (2.0 * m as f64)
}

impl ChaosSpec {
    pub fn new(m: u32, nu: f64, hurst: f64, n: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidParameter(format!("Hermite rank must be at least 2, got {m}")));
        }
        if !(hurst > 0.0 && hurst < regime_limit(m)) {
            return Err(Error::OutsideRegime { rank: m, hurst });
        }
        if nu == 0.0 || !nu.is_finite() {
            return Err(Error::InvalidParameter("nu must be finite and nonzero".into()));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        Ok(Self { m, nu, hurst, n })
    }

    pub fn model(&self) -> CovarianceModel {
        CovarianceModel::fgn(self.hurst).expect("hurst validated on construction")
    }
}

fn factorial(m: u32) -> f64 {
    ln_factorial(m as usize).exp().round()
}

/// `E[V_n^2] = (nu^2 m! / n) sum_{|l|<n} (n - |l|) rho(l)^m`.
pub fn sigma_n2(spec: &ChaosSpec) -> f64 {
    let rho = spec.model().autocovariances(spec.n);
    let nf = spec.n as f64;
    let s: f64 = rho
        .iter()
        .enumerate()
        .map(|(l, r)| if l == 0 { nf } else { 2.0 * (nf - l as f64) } * r.powi(spec.m as i32))
        .sum();
    spec.nu * spec.nu * factorial(spec.m) * s / nf
}

/// `m! nu^2 sum_{l in Z} rho(l)^m`: direct sum up to a cutoff plus the
/// integrated power-law tail.
pub fn sigma2_limit(m: u32, hurst: f64, nu: f64) -> Result<f64> {
    let spec = ChaosSpec::new(m, nu, hurst, 1)?;
    let model = spec.model();
    const CUTOFF: i64 = 1 << 20;
    let direct: f64 = 1.0 + 2.0 * (1..=CUTOFF).map(|l| model.cov(l).powi(m as i32)).sum::<f64>();
    let p = m as f64 * (2.0 * hurst - 2.0);
    let amp = (hurst * (2.0 * hurst - 1.0)).powi(m as i32);
    let start = CUTOFF as f64 + 0.5;
    let tail = if hurst == 0.5 { 0.0 } else { 2.0 * amp * start.powf(p + 1.0) / -(p + 1.0) };
    Ok(factorial(m) * nu * nu * (direct + tail))
}

/// Exact third cumulant of `F_n`; zero for odd `m`. The triple sum over
/// `(i, j, k)` is enumerated by the lag pair `(u, v) = (i - j, j - k)`.
pub fn kappa3_exact(spec: &ChaosSpec) -> f64 {
    if spec.m % 2 == 1 {
        return 0.0;
    }
    let n = spec.n as i64;
    let half = (spec.m / 2) as i32;
    let model = spec.model();
    // rho(l)^{m/2} for |l| < 2n
    let pw: Vec<f64> = (0..2 * n).map(|l| model.cov(l).powi(half)).collect();
    let at = |l: i64| pw[l.unsigned_abs() as usize];
    const BLOCK: i64 = 64;
    let blocks: Vec<f64> = (0..(2 * n - 1 + BLOCK - 1) / BLOCK)
        .into_par_iter()
        .map(|b| {
            let mut acc = 0.0;
            for u in (-(n - 1) + b * BLOCK)..((-(n - 1) + (b + 1) * BLOCK).min(n)) {
                let ru = at(u);
                if ru == 0.0 {
                    continue;
                }
                for v in -(n - 1)..n {
                    // positions relative to k: k = 0, j = v, i = u + v
                    let w = u + v;
                    let span = 0.max(v).max(w) - 0.min(v).min(w);
                    if span >= n {
                        continue;
                    }
                    acc += (n - span) as f64 * ru * at(v) * at(w);
                }
            }
            acc
        })
        .collect();
    let total: f64 = blocks.iter().sum();
    let m = spec.m;
    let c_m = (factorial(m) / factorial(m / 2)).powi(3);
    let scale = spec.nu / ((spec.n as f64).sqrt() * sigma_n2(spec).sqrt());
    scale.powi(3) * c_m * total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    MonteCarlo,
    /// Exact third cumulant, Monte Carlo fourth cumulant.
    Mixed,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::MonteCarlo => "monte-carlo",
            Method::Mixed => "mixed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulantRecord {
    pub m: u32,
    pub hurst: f64,
    pub n: usize,
    pub kappa2: f64,
    pub kappa3: f64,
    pub kappa4: f64,
    pub m_stat: f64,
    pub se2: f64,
    pub se3: f64,
    pub se4: f64,
    pub method: Method,
}

impl CumulantRecord {
    pub const CSV_HEADER: &'static str = "m,H,n,method,kappa3,se3,kappa4,se4,m_stat,kappa2,se2";

    pub fn refresh_m_stat(&mut self) {
        self.m_stat = self.kappa3.abs().max(self.kappa4);
    }

    pub fn write_csv_row<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "{},{},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.m,
            self.hurst,
            self.n,
            self.method.label(),
            self.kappa3,
            self.se3,
            self.kappa4,
            self.se4,
            self.m_stat,
            self.kappa2,
            self.se2
        )?;
        Ok(())
    }
}

/// Exact record for `m = 2` from Toeplitz traces.
pub fn exact_record_m2(hurst: f64, n: usize, nu: f64) -> Result<CumulantRecord> {
    let spec = ChaosSpec::new(2, nu, hurst, n)?;
    let k = cumulants_from_traces(&toeplitz_traces(&spec.model(), n), n, nu);
    let mut rec = CumulantRecord {
        m: 2,
        hurst,
        n,
        kappa2: k[0],
        kappa3: k[1],
        kappa4: k[2],
        m_stat: 0.0,
        se2: 0.0,
        se3: 0.0,
        se4: 0.0,
        method: Method::Exact,
    };
    rec.refresh_m_stat();
    Ok(rec)
}

/// Unbiased k-statistics with delete-one jackknife standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KStatistics {
    pub count: usize,
    pub k: [f64; 4],
    pub se: [f64; 4],
}

fn k_from_power_sums(n: f64, s1: f64, s2: f64, s3: f64, s4: f64) -> [f64; 4] {
    let k1 = s1 / n;
    let k2 = (n * s2 - s1 * s1) / (n * (n - 1.0));
    let k3 = (n * n * s3 - 3.0 * n * s2 * s1 + 2.0 * s1.powi(3)) / (n * (n - 1.0) * (n - 2.0));
    let k4 = (n * n * (n + 1.0) * s4 - 4.0 * n * (n + 1.0) * s3 * s1 - 3.0 * n * (n - 1.0) * s2 * s2
        + 12.0 * n * s2 * s1 * s1
        - 6.0 * s1.powi(4))
        / (n * (n - 1.0) * (n - 2.0) * (n - 3.0));
    [k1, k2, k3, k4]
}

pub fn k_statistics(samples: &[f64]) -> Result<KStatistics> {
    if samples.len() < 5 {
        return Err(Error::InvalidParameter("k-statistics need at least 5 samples".into()));
    }
    let n = samples.len() as f64;
    let shift = samples.iter().sum::<f64>() / n;
    let mut s = [0.0; 5];
    for &x in samples {
        let d = x - shift;
        let mut p = 1.0;
        for v in s.iter_mut() {
            *v += p;
            p *= d;
        }
    }
    let mut k = k_from_power_sums(n, s[1], s[2], s[3], s[4]);
    k[0] += shift;
    let mut sum = [0.0; 4];
    let mut sum_sq = [0.0; 4];
    for &x in samples {
        let d = x - shift;
        let kk = k_from_power_sums(n - 1.0, s[1] - d, s[2] - d * d, s[3] - d.powi(3), s[4] - d.powi(4));
        for r in 0..4 {
            sum[r] += kk[r];
            sum_sq[r] += kk[r] * kk[r];
        }
    }
    let mut se = [0.0; 4];
    for r in 0..4 {
        let mean = sum[r] / n;
        let var = (sum_sq[r] / n - mean * mean).max(0.0);
        se[r] = ((n - 1.0) * var).sqrt();
    }
    Ok(KStatistics { count: samples.len(), k, se })
}

/// `reps` independent copies of `F_n`, indexed by path so the output does
/// not depend on the worker count.
pub fn simulate_statistic(spec: &ChaosSpec, reps: usize, seed: u64) -> Result<Vec<f64>> {
    let sampler = CirculantSampler::new(&spec.model(), spec.n)?;
    let norm = spec.nu / ((spec.n as f64).sqrt() * sigma_n2(spec).sqrt());
    let out: Vec<std::sync::atomic::AtomicU64> = (0..reps).map(|_| std::sync::atomic::AtomicU64::new(0)).collect();
    for_each_path(&sampler, reps, seed, |i, path| {
        let v: f64 = path.iter().map(|&x| hermite_poly(spec.m as usize, x)).sum();
        out[i].store((norm * v).to_bits(), std::sync::atomic::Ordering::Relaxed);
    });
    Ok(out.into_iter().map(|a| f64::from_bits(a.into_inner())).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McCumulants {
    pub record: CumulantRecord,
    pub stats: KStatistics,
}

pub fn cumulants_mc(spec: &ChaosSpec, reps: usize, seed: u64) -> Result<McCumulants> {
    if reps < 1000 {
        return Err(Error::InvalidParameter(format!("need at least 1000 replications, got {reps}")));
    }
    let samples = simulate_statistic(spec, reps, seed)?;
    let stats = k_statistics(&samples)?;
    let mut record = CumulantRecord {
        m: spec.m,
        hurst: spec.hurst,
        n: spec.n,
        kappa2: stats.k[1],
        kappa3: stats.k[2],
        kappa4: stats.k[3],
        m_stat: 0.0,
        se2: stats.se[1],
        se3: stats.se[2],
        se4: stats.se[3],
        method: Method::MonteCarlo,
    };
    record.refresh_m_stat();
    Ok(McCumulants { record, stats })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateTarget {
    Kappa3,
    Kappa4,
    M,
}

/// Asymptotic order `n^exponent (log n)^log_power`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateExponent {
    pub exponent: f64,
    pub log_power: i32,
}

impl RateExponent {
    fn new(exponent: f64, log_power: i32) -> Self {
        Self { exponent, log_power }
    }
}

const BOUNDARY_TOL: f64 = 1e-12;

fn at(h: f64, b: f64) -> bool {
    (h - b).abs() <= BOUNDARY_TOL
}

fn kappa3_rate(m: u32, h: f64) -> RateExponent {
    let mf = m as f64;
    let b = 1.0 - 2.0 / (3.0 * mf);
    if at(h, b) {
        RateExponent::new(-0.5, 2)
    } else if h < b {
        RateExponent::new(-0.5, 0)
    } else {
        RateExponent::new(1.5 - 3.0 * mf + 3.0 * mf * h, 0)
    }
}

fn kappa4_rate(m: u32, h: f64) -> RateExponent {
    let mf = m as f64;
    let tail = 2.0 - 4.0 * mf + 4.0 * mf * h;
    if m <= 3 {
        let b = 1.0 - 3.0 / (4.0 * mf);
        return if at(h, b) {
            RateExponent::new(-1.0, 3)
        } else if h < b {
            RateExponent::new(-1.0, 0)
        } else {
            RateExponent::new(tail, 0)
        };
    }
    let b = 1.0 - 1.0 / (2.0 * mf - 2.0);
    if at(h, 0.75) {
        RateExponent::new(-1.0, 1)
    } else if h < 0.75 {
        RateExponent::new(-1.0, 0)
    } else if at(h, b) {
        RateExponent::new(4.0 * h - 4.0, 2)
    } else if h < b {
        RateExponent::new(4.0 * h - 4.0, 0)
    } else {
        RateExponent::new(tail, 0)
    }
}

/// Order of `|kappa3|`, `kappa4` or `M = max(|kappa3|, kappa4)` as `n -> infinity`.
pub fn predicted_exponent(m: u32, hurst: f64, which: RateTarget) -> Result<RateExponent> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("Hermite rank must be at least 2, got {m}")));
    }
    if !(hurst > 0.0 && hurst < regime_limit(m)) {
        return Err(Error::OutsideRegime { rank: m, hurst });
    }
    let odd = m % 2 == 1;
    match which {
        RateTarget::Kappa3 if odd => Err(Error::IdenticallyZero(format!("kappa3 vanishes for odd rank {m}"))),
        RateTarget::Kappa3 => Ok(kappa3_rate(m, hurst)),
        RateTarget::Kappa4 => Ok(kappa4_rate(m, hurst)),
        RateTarget::M if odd => Ok(kappa4_rate(m, hurst)),
        RateTarget::M => {
            let a = kappa3_rate(m, hurst);
            let b = kappa4_rate(m, hurst);
            let slower = if (a.exponent - b.exponent).abs() <= BOUNDARY_TOL {
                if a.log_power >= b.log_power {
                    a
                } else {
                    b
                }
            } else if a.exponent > b.exponent {
                a
            } else {
                b
            };
            Ok(slower)
        }
    }
}
