//! Exact law of the second-chaos Breuer-Major statistic
//! `F_n = c (sum_j lambda_j Z_j^2 - n)`, `c = nu / (sqrt(n) sigma_n)`, where
//! `lambda_j` is the spectrum of the fGn Toeplitz covariance.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::density::{CurveMeta, CurveSource, DensityCurve, UniformGrid};
use crate::error::{Error, Result};
use crate::fgn::{toeplitz_cov, CovarianceModel};

pub const MAX_CUMULANT_ORDER: usize = 8;

type EigenKey = (u64, usize);

fn eigen_cache() -> &'static Mutex<HashMap<EigenKey, Arc<Vec<f64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<EigenKey, Arc<Vec<f64>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Ascending spectrum of the `n x n` Toeplitz covariance, cached per `(H, n)`.
/// At `H = 1/2` the matrix is the identity and no eigensolver runs.
pub fn toeplitz_eigenvalues(model: &CovarianceModel, n: usize) -> Arc<Vec<f64>> {
    let key = (model.hurst().to_bits(), n);
    if let Some(v) = eigen_cache().lock().expect("eigen cache poisoned").get(&key) {
        return Arc::clone(v);
    }
    let eigs = if model.hurst() == 0.5 {
        vec![1.0; n]
    } else {
        let mut v: Vec<f64> = toeplitz_cov(model, n).symmetric_eigenvalues().iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let eigs = Arc::new(eigs);
    eigen_cache().lock().expect("eigen cache poisoned").insert(key, Arc::clone(&eigs));
    eigs
}

#[derive(Debug, Clone)]
pub struct QuadFormSpec {
    pub hurst: f64,
    pub n: usize,
    pub nu: f64,
    pub eigs: Arc<Vec<f64>>,
    /// `E[V_n^2] = 2 nu^2 sum lambda^2 / n`.
    pub sigma_n2: f64,
}

impl QuadFormSpec {
    pub fn new(hurst: f64, n: usize, nu: f64) -> Result<Self> {
        let model = CovarianceModel::fgn(hurst)?;
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        Self::from_eigs(hurst, n, nu, toeplitz_eigenvalues(&model, n))
    }

    pub fn from_eigs(hurst: f64, n: usize, nu: f64, eigs: Arc<Vec<f64>>) -> Result<Self> {
        if nu == 0.0 || !nu.is_finite() {
            return Err(Error::InvalidParameter("nu must be finite and nonzero".into()));
        }
        if eigs.len() != n {
            return Err(Error::InvalidParameter(format!("expected {n} eigenvalues, got {}", eigs.len())));
        }
        let s2: f64 = eigs.iter().map(|l| l * l).sum();
        let sigma_n2 = 2.0 * nu * nu * s2 / n as f64;
        if !(sigma_n2 > 0.0) {
            return Err(Error::InvalidParameter("degenerate spectrum".into()));
        }
        Ok(Self { hurst, n, nu, eigs, sigma_n2 })
    }

    /// `c = nu / (sqrt(n) sigma_n)`.
    pub fn scale(&self) -> f64 {
        self.nu / ((self.n as f64).sqrt() * self.sigma_n2.sqrt())
    }

    fn grouped(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for &l in self.eigs.iter() {
            match out.last_mut() {
                Some((v, k)) if *v == l => *k += 1.0,
                _ => out.push((l, 1.0)),
            }
        }
        out
    }
}

fn cumulants_from_power_sums(scale: f64, power_sums: &[f64], p_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(p_max - 1);
    let mut fact = 1.0;
    for p in 2..=p_max {
        fact *= (p - 1) as f64;
        out.push(2f64.powi(p as i32 - 1) * fact * scale.powi(p as i32) * power_sums[p]);
    }
    out
}

fn check_order(p_max: usize) -> Result<()> {
    if p_max > MAX_CUMULANT_ORDER {
        return Err(Error::UnsupportedOrder(p_max));
    }
    if p_max < 2 {
        return Err(Error::InvalidParameter(format!("p_max must be at least 2, got {p_max}")));
    }
    Ok(())
}

/// `[kappa_2, ..., kappa_{p_max}]` with `kappa_p = 2^{p-1} (p-1)! c^p sum lambda^p`.
pub fn exact_cumulants_m2(spec: &QuadFormSpec, p_max: usize) -> Result<Vec<f64>> {
    check_order(p_max)?;
    let mut sums = vec![0.0; p_max + 1];
    for &l in spec.eigs.iter() {
        let mut pw = 1.0;
        for s in sums.iter_mut() {
            *s += pw;
            pw *= l;
        }
    }
    Ok(cumulants_from_power_sums(spec.scale(), &sums, p_max))
}

/// `tr Sigma^p` for `p = 0..=4` in `O(n^2)` time and `O(n)` memory.
///
/// `Sigma^2` is walked diagonal by diagonal with
/// `S[i+1][k+1] = S[i][k] + rho(i+1) rho(k+1) - rho(n-1-i) rho(n-1-k)`.
pub fn toeplitz_traces(model: &CovarianceModel, n: usize) -> [f64; 5] {
    let rho = model.autocovariances(n);
    let nf = n as f64;
    let tr2: f64 = (0..n)
        .map(|l| if l == 0 { nf } else { 2.0 * (nf - l as f64) } * rho[l] * rho[l])
        .sum();
    const BLOCK: usize = 64;
    let partial: Vec<(f64, f64)> = (0..n.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut t3 = 0.0;
            let mut t4 = 0.0;
            for d in b * BLOCK..((b + 1) * BLOCK).min(n) {
                // S[0][d] = sum_j rho(j) rho(j - d)
                let mut s: f64 = (0..n).map(|j| rho[j] * rho[j.abs_diff(d)]).sum();
                let weight = if d == 0 { 1.0 } else { 2.0 };
                let mut d3 = 0.0;
                let mut d4 = 0.0;
                for i in 0..n - d {
                    if i > 0 {
                        let k = i - 1 + d;
                        s += rho[i] * rho[k + 1] - rho[n - i] * rho[n - 1 - k];
                    }
                    d3 += s;
                    d4 += s * s;
                }
                t3 += weight * d3 * rho[d];
                t4 += weight * d4;
            }
            (t3, t4)
        })
        .collect();
    let (tr3, tr4) = partial.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    [nf, nf, tr2, tr3, tr4]
}

/// Cumulants `kappa_2..kappa_4` from Toeplitz traces, without an eigensolver.
pub fn cumulants_from_traces(traces: &[f64; 5], n: usize, nu: f64) -> Vec<f64> {
    let sigma_n2 = 2.0 * nu * nu * traces[2] / n as f64;
    let scale = nu / ((n as f64).sqrt() * sigma_n2.sqrt());
    cumulants_from_power_sums(scale, traces, 4)
}

/// `E exp(i t F_n)`.
pub fn characteristic_function(spec: &QuadFormSpec, t: f64) -> Complex64 {
    log_cf(&spec.grouped(), spec.scale(), spec.n as f64, t).exp()
}

/// `-i t c n - 1/2 sum log(1 - 2 i t c lambda)`, principal branch.
fn log_cf(groups: &[(f64, f64)], c: f64, n: f64, t: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, -t * c * n);
    for &(l, k) in groups {
        acc -= 0.5 * k * Complex64::new(1.0, -2.0 * t * c * l).ln();
    }
    acc
}

fn checked_log_cf(groups: &[(f64, f64)], c: f64, n: f64, t: f64) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, -t * c * n);
    for &(l, k) in groups {
        let z = Complex64::new(1.0, -2.0 * t * c * l).ln();
        // each factor has positive real part, so its argument stays in (-pi/2, pi/2)
        if !z.re.is_finite() || z.im.abs() >= std::f64::consts::FRAC_PI_2 + 1e-12 {
            return Err(Error::BranchTracking { t });
        }
        acc -= 0.5 * k * z;
    }
    if !acc.re.is_finite() || !acc.im.is_finite() {
        return Err(Error::BranchTracking { t });
    }
    Ok(acc)
}

/// Chernoff bound on `P(G > x)` (`upper`) or `P(G < x)` for
/// `G = c (sum lambda Z^2 - n)` with `c > 0`.
fn chernoff_tail(groups: &[(f64, f64)], c: f64, n: f64, x: f64, upper: bool) -> f64 {
    let lmax = groups.iter().fold(0.0f64, |m, g| m.max(g.0));
    let mut best = f64::INFINITY;
    for e in -20..=20 {
        let s = 2f64.powf(e as f64 / 2.0);
        let log_mgf = if upper {
            if 2.0 * s * c * lmax >= 1.0 {
                continue;
            }
            -s * c * n - 0.5 * groups.iter().map(|&(l, k)| k * (1.0 - 2.0 * s * c * l).ln()).sum::<f64>()
        } else {
            s * c * n - 0.5 * groups.iter().map(|&(l, k)| k * (1.0 + 2.0 * s * c * l).ln()).sum::<f64>()
        };
        let b = if upper { -s * x + log_mgf } else { s * x + log_mgf };
        best = best.min(b);
    }
    best.exp()
}

const TAIL_MASS: f64 = 1e-12;
const CF_FLOOR: f64 = 1e-14;
const MAX_REFINE: u32 = 8;
const MAX_FFT: usize = 1 << 23;

/// Density derivative of `G = c (sum lambda Z^2 - n)`, `c > 0`, by FFT
/// inversion. `None` when the characteristic function decays too slowly.
fn invert_fft(groups: &[(f64, f64)], c: f64, n: f64, grid: &UniformGrid, j: usize) -> Result<Option<Vec<f64>>> {
    let edge = -c * n;
    let mut hi = grid.x_max().max(8.0);
    while chernoff_tail(groups, c, n, hi, true) > TAIL_MASS {
        hi += 1.0;
    }
    let mut lo = grid.x_min;
    if edge < lo {
        let mut x = lo;
        while x > edge && chernoff_tail(groups, c, n, x, false) > TAIL_MASS {
            x -= 1.0;
        }
        lo = x.max(edge - 1.0);
    }
    for r in 0..=MAX_REFINE {
        let factor = 1usize << r;
        let dx = grid.step / factor as f64;
        let t_max = std::f64::consts::PI / dx;
        let tail = (j as f64 * t_max.ln() + log_cf(groups, c, n, t_max).re).exp();
        if tail >= CF_FLOOR {
            continue;
        }
        let k0 = ((grid.x_min - lo) / dx).ceil() as usize;
        let x0 = grid.x_min - k0 as f64 * dx;
        let needed = ((hi - x0) / dx).ceil() as usize + 1;
        let size = needed.next_power_of_two();
        if size > MAX_FFT {
            return Ok(None);
        }
        let dt = 2.0 * std::f64::consts::PI / (size as f64 * dx);
        let mut buf = vec![Complex64::new(0.0, 0.0); size];
        buf.par_chunks_mut(4096).enumerate().try_for_each(|(chunk, out)| -> Result<()> {
            for (off, slot) in out.iter_mut().enumerate() {
                let m = chunk * 4096 + off;
                let signed = if m < size / 2 { m as f64 } else { m as f64 - size as f64 };
                let t = signed * dt;
                let lc = checked_log_cf(groups, c, n, t)?;
                let deriv = Complex64::new(0.0, -t).powu(j as u32);
                *slot = deriv * (lc + Complex64::new(0.0, -t * x0)).exp();
            }
            Ok(())
        })?;
        FftPlanner::new().plan_fft_forward(size).process(&mut buf);
        let norm = dt / (2.0 * std::f64::consts::PI);
        let values = (0..grid.len).map(|i| buf[k0 + i * factor].re * norm).collect();
        return Ok(Some(values));
    }
    Ok(None)
}

const TALBOT_TERMS: usize = 32;

/// Fixed Talbot inversion of the Laplace transform of `Y = G + c n >= 0`.
fn talbot_density(groups: &[(f64, f64)], c: f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let m = TALBOT_TERMS as f64;
    let r = 2.0 * m / (5.0 * y);
    let log_lt = |s: Complex64| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(l, k) in groups {
            acc -= 0.5 * k * (Complex64::new(1.0, 0.0) + 2.0 * c * l * s).ln();
        }
        acc
    };
    let mut sum = 0.5 * (r * y + log_lt(Complex64::new(r, 0.0)).re).exp();
    for k in 1..TALBOT_TERMS {
        let theta = k as f64 * std::f64::consts::PI / m;
        let cot = theta.cos() / theta.sin();
        let s = Complex64::new(r * theta * cot, r * theta);
        let sigma = Complex64::new(1.0, theta + (theta * cot - 1.0) * cot);
        sum += ((s * y + log_lt(s)).exp() * sigma).re;
    }
    r / m * sum
}

/// `rho_{F_n}^{(j)}` on `grid` by characteristic-function inversion.
pub fn exact_density_m2(spec: &QuadFormSpec, grid: UniformGrid, j: usize) -> Result<DensityCurve> {
    if j > 4 {
        return Err(Error::InvalidParameter(format!("derivative order {j} exceeds 4")));
    }
    if grid.len < 4096 || grid.x_min > -8.0 || grid.x_max() < 8.0 {
        return Err(Error::GridTooCoarse(format!(
            "need at least 4096 points covering [-8, 8], got {} on [{}, {}]",
            grid.len,
            grid.x_min,
            grid.x_max()
        )));
    }
    if spec.eigs.iter().any(|&l| l < -1e-12) {
        return Err(Error::InvalidParameter("covariance spectrum has a negative eigenvalue".into()));
    }
    let groups = spec.grouped();
    let c = spec.scale();
    let n = spec.n as f64;
    // Work with |c| and mirror when c < 0.
    let mirrored = c < 0.0;
    let work_grid = if mirrored {
        UniformGrid { x_min: -grid.x_max(), ..grid }
    } else {
        grid
    };
    let ca = c.abs();
    let mut values = match invert_fft(&groups, ca, n, &work_grid, j)? {
        Some(v) => v,
        None if j == 0 => {
            log::info!("characteristic function decays slowly (n = {}); using Talbot inversion", spec.n);
            (0..work_grid.len)
                .into_par_iter()
                .map(|i| talbot_density(&groups, ca, work_grid.x(i) + ca * n))
                .collect()
        }
        None => {
            return Err(Error::GridTooCoarse(format!(
                "characteristic function of n = {} decays too slowly to resolve derivative order {j}",
                spec.n
            )))
        }
    };
    if mirrored {
        values.reverse();
        if j % 2 == 1 {
            for v in values.iter_mut() {
                *v = -*v;
            }
        }
    }
    Ok(DensityCurve {
        grid,
        values,
        deriv_order: j,
        source: CurveSource::Exact,
        meta: CurveMeta { hurst: Some(spec.hurst), n: Some(spec.n), m: Some(2) },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::GaussKernel;

    #[test]
    fn white_noise_cumulants() {
        let s = QuadFormSpec::new(0.5, 2, 1.0).unwrap();
        let k = exact_cumulants_m2(&s, 4).unwrap();
        assert!((k[0] - 1.0).abs() < 1e-15);
        assert!((k[1] - 2.0).abs() < 1e-14);
        assert!((k[2] - 6.0).abs() < 1e-13);
        for n in [1usize, 7, 64] {
            let s = QuadFormSpec::new(0.5, n, 1.0).unwrap();
            let k = exact_cumulants_m2(&s, 8).unwrap();
            assert!((k[1] - (8.0 / n as f64).sqrt()).abs() < 1e-13);
            assert_eq!(k.len(), 7);
        }
        assert!(matches!(exact_cumulants_m2(&s, 9), Err(Error::UnsupportedOrder(9))));
    }

    #[test]
    fn traces_match_spectrum() {
        let model = CovarianceModel::fgn(0.7).unwrap();
        let n = 50;
        let tr = toeplitz_traces(&model, n);
        let eig = toeplitz_eigenvalues(&model, n);
        for p in 1..=4 {
            let s: f64 = eig.iter().map(|l| l.powi(p as i32)).sum();
            assert!((s - tr[p]).abs() < 1e-10 * s, "{p}");
        }
    }

    #[test]
    fn negative_nu_mirrors() {
        let pos = QuadFormSpec::new(0.5, 32, 1.0).unwrap();
        let neg = QuadFormSpec::new(0.5, 32, -1.0).unwrap();
        let g = UniformGrid::standard();
        let a = exact_density_m2(&pos, g, 1).unwrap();
        let b = exact_density_m2(&neg, g, 1).unwrap();
        for i in 0..g.len {
            assert!((a.values[i] + b.values[g.len - 1 - i]).abs() < 1e-12);
        }
        let k = exact_cumulants_m2(&neg, 3).unwrap();
        assert!(k[1] < 0.0);
    }

    #[test]
    fn grid_checks() {
        let s = QuadFormSpec::new(0.5, 32, 1.0).unwrap();
        let small = UniformGrid::new(-8.0, 8.0, 1000).unwrap();
        assert!(matches!(exact_density_m2(&s, small, 0), Err(Error::GridTooCoarse(_))));
        let narrow = UniformGrid::new(-4.0, 8.0, 5000).unwrap();
        assert!(exact_density_m2(&s, narrow, 0).is_err());
        assert!(exact_density_m2(&s, UniformGrid::standard(), 5).is_err());
    }

    #[test]
    fn large_n_close_to_gaussian() {
        let s = QuadFormSpec::new(0.5, 4096, 1.0).unwrap();
        let d = exact_density_m2(&s, UniformGrid::standard(), 0).unwrap();
        let gap = d.values.iter().enumerate().fold(0.0f64, |m, (i, v)| {
            m.max((v - GaussKernel::density(d.grid.x(i))).abs())
        });
        let k3 = exact_cumulants_m2(&s, 3).unwrap()[1];
        let x = (3.0 - 6f64.sqrt()).sqrt();
        let sup3 = GaussKernel::derivative(3, x).abs();
        let predicted = k3 / 6.0 * sup3;
        assert!(gap > 0.2 * predicted && gap < 5.0 * predicted, "{gap} {predicted}");
    }
}
