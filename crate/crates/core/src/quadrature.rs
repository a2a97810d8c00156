//! Quadrature rules: Gauss-Legendre panels, adaptive Gauss-Kronrod and
//! Gauss-Hermite nodes for Hermite-function integrands.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hermite::fill_phi;

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 1..order {
                let kf = k as f64;
                let p2 = ((2.0 * kf + 1.0) * z * p1 - kf * p0) / (kf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[order - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre rule over `panels` equal sub-intervals of `[lo, hi]`.
pub fn composite_legendre(lo: f64, hi: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let (nodes, weights) = gauss_legendre(order);
    let width = (hi - lo) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * width;
        for (z, w) in nodes.iter().zip(&weights) {
            out.push((mid + 0.5 * width * z, 0.5 * width * w));
        }
    }
    out
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> (f64, f64) {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let fc = f(c);
    let mut kronrod = fc * GK_WEIGHTS[7];
    let mut gauss = fc * G7_WEIGHTS[3];
    for i in 0..7 {
        let dx = h * GK_NODES[i];
        let s = f(c - dx) + f(c + dx);
        kronrod += GK_WEIGHTS[i] * s;
        if i % 2 == 1 {
            gauss += G7_WEIGHTS[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_segments: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-13, rel: 1e-11, max_segments: 4000 }
    }
}

/// Globally adaptive Gauss-Kronrod (7, 15) quadrature on a finite interval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: Tolerance) -> Result<f64> {
    if lo == hi {
        return Ok(0.0);
    }
    let (v, e) = gk15(&f, lo, hi);
    let mut segs = vec![(lo, hi, v, e)];
    let mut total = v;
    let mut err = e;
    while err > tol.abs.max(tol.rel * total.abs()) {
        if segs.len() >= tol.max_segments {
            return Err(Error::IntegralDiverged { lo, hi });
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .3.total_cmp(&b.1 .3))
            .expect("non-empty");
        let (a, b, v0, e0) = segs.swap_remove(idx);
        let m = 0.5 * (a + b);
        let (v1, e1) = gk15(&f, a, m);
        let (v2, e2) = gk15(&f, m, b);
        total += v1 + v2 - v0;
        err += e1 + e2 - e0;
        segs.push((a, m, v1, e1));
        segs.push((m, b, v2, e2));
        if err <= 0.0 {
            err = segs.iter().map(|s| s.3).sum();
        }
    }
    Ok(segs.iter().map(|s| s.2).sum())
}

/// Integral over the whole real line, split at the sorted `breaks`. Tails are
/// mapped onto finite intervals by `x = b +- t / (1 - t)`.
pub fn integrate_line<F: Fn(f64) -> f64>(f: F, breaks: &[f64], tol: Tolerance) -> Result<f64> {
    let mut pts: Vec<f64> = breaks.to_vec();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    if pts.is_empty() {
        pts.push(0.0);
    }
    let first = pts[0];
    let last = pts[pts.len() - 1];
    let left = integrate(
        |t: f64| {
            let s = 1.0 - t;
            f(first - t / s) / (s * s)
        },
        0.0,
        1.0,
        tol,
    )?;
    let right = integrate(
        |t: f64| {
            let s = 1.0 - t;
            f(last + t / s) / (s * s)
        },
        0.0,
        1.0,
        tol,
    )?;
    let mut total = left + right;
    for w in pts.windows(2) {
        total += integrate(&f, w[0], w[1], tol)?;
    }
    Ok(total)
}

/// Gauss-Hermite rule for integrands of the form `e^{-x^2} p(x)`, with the
/// weight folded into the stored weights so that `sum w_i g(x_i)` approximates
/// `int g` directly. Products of Hermite functions `phi_i phi_j` are integrated
/// exactly when `i + j < 2 * order`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Hermite order must be positive");
        let mut jacobi = DMatrix::<f64>::zeros(order, order);
        for k in 1..order {
            let b = (k as f64 / 2.0).sqrt();
            jacobi[(k, k - 1)] = b;
            jacobi[(k - 1, k)] = b;
        }
        let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
        nodes.sort_by(f64::total_cmp);
        let mut buf = vec![0.0; order + 2];
        for x in nodes.iter_mut() {
            // Newton polish on phi_order using the ladder derivative.
            for _ in 0..3 {
                fill_phi(*x, &mut buf);
                let n = order as f64;
                let d = (n / 2.0).sqrt() * buf[order - 1] - ((n + 1.0) / 2.0).sqrt() * buf[order + 1];
                if d == 0.0 {
                    break;
                }
                let step = buf[order] / d;
                *x -= step;
                if step.abs() < 1e-15 * (1.0 + x.abs()) {
                    break;
                }
            }
        }
        let weights = nodes
            .iter()
            .map(|&x| {
                fill_phi(x, &mut buf[..order]);
                1.0 / buf[..order].iter().map(|v| v * v).sum::<f64>()
            })
            .collect();
        Self { nodes, weights }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * g(x)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::{hermite_phi, GaussKernel};

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((m - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_on_smooth_and_kinked() {
        let v = integrate(|x: f64| x.sin(), 0.0, std::f64::consts::PI, Tolerance::default()).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        let v = integrate(|x: f64| x.abs().sqrt(), -1.0, 1.0, Tolerance::default()).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn line_integral_of_density() {
        let v = integrate_line(GaussKernel::density, &[0.0], Tolerance::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hermite_rule_orthonormality() {
        let rule = GaussHermite::new(60);
        for i in 0..20 {
            for j in 0..20 {
                let v = rule.integrate(|x| hermite_phi(i, x) * hermite_phi(j, x));
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((v - target).abs() < 1e-12, "{i} {j} {v}");
            }
        }
    }
}
