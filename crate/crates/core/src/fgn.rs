//! Fractional Gaussian noise: covariance, Toeplitz matrix and exact sampling
//! by circulant embedding.

use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the generator behind every simulated path. Path pair `k` of a
/// batch draws from stream `k` of a ChaCha20 generator keyed by the seed.
pub const PRNG_ALGORITHM: &str = "chacha20-stream-per-path-pair";

const EMBED_TOL: f64 = 1e-10;
const MAX_DOUBLINGS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceKind {
    FractionalGaussianNoise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceModel {
    hurst: f64,
    kind: CovarianceKind,
}

impl CovarianceModel {
    pub fn fgn(hurst: f64) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::InvalidParameter(format!("hurst index must lie in (0, 1), got {hurst}")));
        }
        Ok(Self { hurst, kind: CovarianceKind::FractionalGaussianNoise })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn kind(&self) -> CovarianceKind {
        self.kind
    }

    /// `rho(r) = (|r+1|^{2H} - 2|r|^{2H} + |r-1|^{2H}) / 2`.
    pub fn cov(&self, r: i64) -> f64 {
        let r = r.unsigned_abs() as f64;
        if r == 0.0 {
            return 1.0;
        }
        let h2 = 2.0 * self.hurst;
        if self.hurst == 0.5 {
            return 0.0;
        }
        0.5 * ((r + 1.0).powf(h2) - 2.0 * r.powf(h2) + (r - 1.0).powf(h2))
    }

    /// `[rho(0), ..., rho(n-1)]`.
    pub fn autocovariances(&self, n: usize) -> Vec<f64> {
        (0..n as i64).map(|r| self.cov(r)).collect()
    }

    /// Leading large-lag behaviour `H (2H - 1) r^{2H-2}`.
    pub fn tail_asymptote(&self, r: f64) -> f64 {
        self.hurst * (2.0 * self.hurst - 1.0) * r.powf(2.0 * self.hurst - 2.0)
    }
}

pub fn fgn_cov(model: &CovarianceModel, r: i64) -> f64 {
    model.cov(r)
}

/// `Sigma[i][j] = rho(|i - j|)`.
pub fn toeplitz_cov(model: &CovarianceModel, n: usize) -> DMatrix<f64> {
    let rho = model.autocovariances(n);
    DMatrix::from_fn(n, n, |i, j| rho[i.abs_diff(j)])
}

/// Circulant embedding of the first `n` lags, ready to draw path pairs.
pub struct CirculantSampler {
    n: usize,
    size: usize,
    scales: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CirculantSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantSampler").field("n", &self.n).field("size", &self.size).finish()
    }
}

fn embedding_eigenvalues(model: &CovarianceModel, size: usize, planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let mut row: Vec<Complex64> = (0..size)
        .map(|k| Complex64::new(model.cov(k.min(size - k) as i64), 0.0))
        .collect();
    planner.plan_fft_forward(size).process(&mut row);
    row.iter().map(|c| c.re).collect()
}

impl CirculantSampler {
    pub fn new(model: &CovarianceModel, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("path length must be at least 1".into()));
        }
        let mut planner = FftPlanner::new();
        let mut size = (2 * (n - 1)).max(2);
        let mut last = (0.0, 0.0);
        for _ in 0..=MAX_DOUBLINGS {
            let mut eig = embedding_eigenvalues(model, size, &mut planner);
            let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
            let tol = EMBED_TOL * max;
            if min >= -tol {
                let clipped = eig.iter().filter(|&&v| v < 0.0).count();
                if clipped > 0 {
                    log::warn!("circulant embedding: clipped {clipped} eigenvalues in [-{tol:.2e}, 0) to zero");
                }
                for v in eig.iter_mut() {
                    *v = v.max(0.0);
                }
                let scales = eig.iter().map(|v| (v / size as f64).sqrt()).collect();
                let fft = planner.plan_fft_forward(size);
                return Ok(Self { n, size, scales, fft });
            }
            log::info!("circulant embedding of size {size} not nonnegative (min {min:.3e}); doubling");
            last = (min, tol);
            size *= 2;
        }
        Err(Error::NegativeEmbedding { value: last.0, tol: last.1, size: size / 2 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn embedding_size(&self) -> usize {
        self.size
    }

    /// Two independent paths from stream `pair_index` of the seeded generator.
    pub fn sample_pair(&self, seed: u64, pair_index: u64, first: &mut [f64], second: &mut [f64]) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(pair_index);
        let mut buf: Vec<Complex64> = self
            .scales
            .iter()
            .map(|s| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re * s, im * s)
            })
            .collect();
        self.fft.process(&mut buf);
        for i in 0..self.n {
            first[i] = buf[i].re;
            second[i] = buf[i].im;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    pub n: usize,
    pub count: usize,
    pub seed: u64,
    pub hurst: f64,
    /// Row-major `count x n`.
    pub data: Vec<f64>,
}

impl PathBatch {
    pub fn path(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn paths(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n)
    }

    /// One path per line, comma separated.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for p in self.paths() {
            let line: Vec<String> = p.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Little-endian header `(n, count, seed, hurst)` followed by the data.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.n as u64).to_le_bytes())?;
        w.write_all(&(self.count as u64).to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&self.hurst.to_le_bytes())?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

/// Calls `visit(path_index, path)` for `count` paths, in parallel over path
/// pairs. The values depend only on `(model, n, seed, path_index)`.
pub fn for_each_path<F>(sampler: &CirculantSampler, count: usize, seed: u64, visit: F)
where
    F: Fn(usize, &[f64]) + Sync,
{
    let n = sampler.n();
    (0..count.div_ceil(2)).into_par_iter().for_each_init(
        || (vec![0.0; n], vec![0.0; n]),
        |(a, b), pair| {
            sampler.sample_pair(seed, pair as u64, a, b);
            visit(2 * pair, a);
            if 2 * pair + 1 < count {
                visit(2 * pair + 1, b);
            }
        },
    );
}

pub fn fgn_sample(model: &CovarianceModel, n: usize, count: usize, seed: u64) -> Result<PathBatch> {
    let sampler = CirculantSampler::new(model, n)?;
    let mut data = vec![0.0; count * n];
    data.par_chunks_mut(2 * n).enumerate().for_each(|(pair, chunk)| {
        let (a, b) = chunk.split_at_mut(n.min(chunk.len()));
        if b.is_empty() {
            let mut spare = vec![0.0; n];
            sampler.sample_pair(seed, pair as u64, a, &mut spare);
        } else {
            sampler.sample_pair(seed, pair as u64, a, b);
        }
    });
    Ok(PathBatch { n, count, seed, hurst: model.hurst(), data })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_examples() {
        let m = CovarianceModel::fgn(0.5).unwrap();
        assert_eq!(m.cov(3), 0.0);
        for h in [0.2, 0.5, 0.75] {
            assert_eq!(CovarianceModel::fgn(h).unwrap().cov(0), 1.0);
        }
        let m = CovarianceModel::fgn(0.75).unwrap();
        assert!((m.cov(1) - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert_eq!(m.cov(-4), m.cov(4));
        assert!(CovarianceModel::fgn(1.0).is_err());
    }

    #[test]
    fn long_memory_tail() {
        for h in [0.6, 0.8] {
            let m = CovarianceModel::fgn(h).unwrap();
            let r = 1e4;
            let ratio = m.cov(r as i64) / m.tail_asymptote(r);
            assert!((ratio - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn anti_persistent_sums_telescope() {
        let m = CovarianceModel::fgn(0.3).unwrap();
        for big_r in [10i64, 100, 1000] {
            let s: f64 = (-big_r..=big_r).map(|r| m.cov(r)).sum();
            let t = (big_r as f64 + 1.0).powf(0.6) - (big_r as f64).powf(0.6);
            assert!((s - t).abs() < 1e-10);
        }
    }

    #[test]
    fn toeplitz_shape() {
        let m = CovarianceModel::fgn(0.5).unwrap();
        assert_eq!(toeplitz_cov(&m, 5), DMatrix::identity(5, 5));
        let m = CovarianceModel::fgn(0.7).unwrap();
        assert!((toeplitz_cov(&m, 64).trace() - 64.0).abs() < 1e-12);
        for h in [0.3, 0.7] {
            let m = CovarianceModel::fgn(h).unwrap();
            let eig = toeplitz_cov(&m, 256).symmetric_eigenvalues();
            assert!(eig.min() >= -1e-10);
        }
    }

    #[test]
    fn short_paths() {
        let m = CovarianceModel::fgn(0.7).unwrap();
        let b = fgn_sample(&m, 1, 5, 3).unwrap();
        assert_eq!(b.data.len(), 5);
        assert!(fgn_sample(&m, 0, 5, 3).is_err());
    }

    #[test]
    fn deterministic() {
        let m = CovarianceModel::fgn(0.3).unwrap();
        let a = fgn_sample(&m, 100, 7, 42).unwrap();
        let b = fgn_sample(&m, 100, 7, 42).unwrap();
        assert_eq!(a, b);
        let c = fgn_sample(&m, 100, 7, 43).unwrap();
        assert_ne!(a, c);
        let s = CirculantSampler::new(&m, 100).unwrap();
        let seen = std::sync::Mutex::new(vec![Vec::new(); 7]);
        for_each_path(&s, 7, 42, |i, p| seen.lock().unwrap()[i] = p.to_vec());
        for (i, p) in seen.into_inner().unwrap().iter().enumerate() {
            assert_eq!(p.as_slice(), a.path(i));
        }
    }

    #[test]
    fn white_noise_at_half() {
        let m = CovarianceModel::fgn(0.5).unwrap();
        let b = fgn_sample(&m, 2, 100_000, 9).unwrap();
        let n = b.count as f64;
        let r: f64 = b.paths().map(|p| p[0] * p[1]).sum::<f64>() / n;
        assert!(r.abs() < 4.0 / n.sqrt());
    }
}
