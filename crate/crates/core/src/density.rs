//! Density curves on uniform grids: estimators, distances, Edgeworth
//! references and the limit-shape check.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::{gaussian_density_derivative, hermite_poly_all, ln_factorial, GaussKernel};
use crate::quadform::{exact_cumulants_m2, exact_density_m2, QuadFormSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub x_min: f64,
    pub step: f64,
    pub len: usize,
}

impl UniformGrid {
    pub fn new(x_min: f64, x_max: f64, len: usize) -> Result<Self> {
        if len < 2 || !(x_max > x_min) {
            return Err(Error::InvalidParameter(format!("bad grid [{x_min}, {x_max}] with {len} points")));
        }
        Ok(Self { x_min, step: (x_max - x_min) / (len - 1) as f64, len })
    }

    /// [-8, 8] with 2^12 points.
    pub fn standard() -> Self {
        Self::new(-8.0, 8.0, 4096).expect("valid default grid")
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.step
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.len - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.x(i)).collect()
    }

    fn same_as(&self, other: &UniformGrid) -> bool {
        self.len == other.len
            && (self.x_min - other.x_min).abs() <= 1e-12 * (1.0 + self.x_min.abs())
            && (self.step - other.step).abs() <= 1e-12 * self.step
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveSource {
    Exact,
    GramCharlier,
    Kde,
    Reference,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub hurst: Option<f64>,
    pub n: Option<usize>,
    pub m: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityCurve {
    pub grid: UniformGrid,
    pub values: Vec<f64>,
    pub deriv_order: usize,
    pub source: CurveSource,
    pub meta: CurveMeta,
}

impl DensityCurve {
    pub fn from_fn<F: Fn(f64) -> f64>(grid: UniformGrid, deriv_order: usize, source: CurveSource, f: F) -> Self {
        let values = (0..grid.len).map(|i| f(grid.x(i))).collect();
        Self { grid, values, deriv_order, source, meta: CurveMeta::default() }
    }

    pub fn x_min(&self) -> f64 {
        self.grid.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.grid.x_max()
    }

    pub fn step(&self) -> f64 {
        self.grid.step
    }

    /// Trapezoid integral of `g(x) * value(x)`.
    pub fn integrate_with<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        let h = self.grid.step;
        let last = self.values.len() - 1;
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let w = if i == 0 || i == last { 0.5 } else { 1.0 };
                w * v * g(self.grid.x(i))
            })
            .sum::<f64>()
            * h
    }

    pub fn mass(&self) -> f64 {
        self.integrate_with(|_| 1.0)
    }

    pub fn moment(&self, p: i32) -> f64 {
        self.integrate_with(|x| x.powi(p))
    }

    /// Linear interpolation; zero outside the grid.
    pub fn value_at(&self, x: f64) -> f64 {
        let u = (x - self.grid.x_min) / self.grid.step;
        if u < 0.0 || u > (self.grid.len - 1) as f64 {
            return 0.0;
        }
        let i = (u.floor() as usize).min(self.grid.len - 2);
        let f = u - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }

    pub fn sub(&self, other: &DensityCurve) -> Result<DensityCurve> {
        check_comparable(self, other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(DensityCurve { values, ..self.clone() })
    }

    pub fn scaled(&self, s: f64) -> DensityCurve {
        DensityCurve { values: self.values.iter().map(|v| v * s).collect(), ..self.clone() }
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// CSV with header `x,value,j,H,n,m`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,value,j,H,n,m")?;
        let h = self.meta.hurst.map(|v| v.to_string()).unwrap_or_default();
        let n = self.meta.n.map(|v| v.to_string()).unwrap_or_default();
        let m = self.meta.m.map(|v| v.to_string()).unwrap_or_default();
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{:e},{},{h},{n},{m}", self.grid.x(i), v, self.deriv_order)?;
        }
        Ok(())
    }
}

fn check_comparable(a: &DensityCurve, b: &DensityCurve) -> Result<()> {
    if !a.grid.same_as(&b.grid) {
        return Err(Error::GridMismatch(format!("grids differ: {:?} vs {:?}", a.grid, b.grid)));
    }
    if a.deriv_order != b.deriv_order {
        return Err(Error::GridMismatch(format!(
            "derivative orders differ: {} vs {}",
            a.deriv_order, b.deriv_order
        )));
    }
    Ok(())
}

/// `rho_N^{(j)}` on the grid.
pub fn gaussian_curve(grid: UniformGrid, j: usize) -> DensityCurve {
    DensityCurve::from_fn(grid, j, CurveSource::Reference, |x| gaussian_density_derivative(j, x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveNorm {
    Sup,
    L1,
    L2,
    Lr(f64),
}

impl CurveNorm {
    pub fn label(&self) -> String {
        match self {
            CurveNorm::Sup => "sup".into(),
            CurveNorm::L1 => "L1".into(),
            CurveNorm::L2 => "L2".into(),
            CurveNorm::Lr(r) => format!("L{r}"),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sup" => Ok(CurveNorm::Sup),
            "L1" | "l1" => Ok(CurveNorm::L1),
            "L2" | "l2" => Ok(CurveNorm::L2),
            _ => {
                let r = s
                    .trim_start_matches(['L', 'l'])
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("unknown norm {s:?}")))?;
                if r < 1.0 {
                    return Err(Error::Config(format!("L^r norm needs r >= 1, got {r}")));
                }
                Ok(CurveNorm::Lr(r))
            }
        }
    }
}

pub fn curve_distance(a: &DensityCurve, b: &DensityCurve, norm: CurveNorm) -> Result<f64> {
    let diff = a.sub(b)?;
    Ok(match norm {
        CurveNorm::Sup => diff.sup_abs(),
        CurveNorm::L1 => lr_norm(&diff, 1.0),
        CurveNorm::L2 => lr_norm(&diff, 2.0),
        CurveNorm::Lr(r) => lr_norm(&diff, r),
    })
}

fn lr_norm(c: &DensityCurve, r: f64) -> f64 {
    let abs = DensityCurve { values: c.values.iter().map(|v| v.abs().powf(r)).collect(), ..c.clone() };
    abs.mass().powf(1.0 / r)
}

/// `sum_{j<=k} ||a^{(j)} - b^{(j)}||_{L^r}`; `a[j]`, `b[j]` hold derivative order `j`.
pub fn sobolev_distance(a: &[DensityCurve], b: &[DensityCurve], r: f64) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::GridMismatch("derivative stacks differ in length".into()));
    }
    a.iter().zip(b).map(|(x, y)| curve_distance(x, y, CurveNorm::Lr(r))).sum()
}

/// `rho_N^{(j)} - (kappa3 / 6) rho_N^{(j+3)}`.
pub fn edgeworth_reference(kappa3: f64, grid: UniformGrid, j: usize) -> Result<DensityCurve> {
    if j > 4 {
        return Err(Error::InvalidParameter(format!("derivative order {j} exceeds 4")));
    }
    Ok(DensityCurve::from_fn(grid, j, CurveSource::Reference, |x| {
        gaussian_density_derivative(j, x) - kappa3 / 6.0 * gaussian_density_derivative(j + 3, x)
    }))
}

pub const GRAM_CHARLIER_MAX_ORDER: usize = 30;

#[derive(Debug, Clone)]
pub struct GramCharlier {
    pub curve: DensityCurve,
    /// Pointwise standard error, `sqrt(h^T Cov h / N)`, equal to the
    /// delete-one jackknife error of the linear estimator.
    pub band: Vec<f64>,
    /// Sample Hermite moments `mean H_k(F)`.
    pub moments: Vec<f64>,
}

/// Orthogonal-series estimate `rho^{(j)}(x) = (-1)^j rho_N(x) sum_k (m_k / k!) H_{k+j}(x)`.
pub fn gram_charlier_density(samples: &[f64], order: usize, grid: UniformGrid, j: usize) -> Result<GramCharlier> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no samples".into()));
    }
    if order > GRAM_CHARLIER_MAX_ORDER {
        return Err(Error::InvalidParameter(format!(
            "Gram-Charlier order {order} exceeds {GRAM_CHARLIER_MAX_ORDER}"
        )));
    }
    let k1 = order + 1;
    let n = samples.len() as f64;
    let mut mean = vec![0.0; k1];
    let mut cross = vec![0.0; k1 * k1];
    for &s in samples {
        let h = hermite_poly_all(order, s);
        for a in 0..k1 {
            mean[a] += h[a];
            for b in a..k1 {
                cross[a * k1 + b] += h[a] * h[b];
            }
        }
    }
    for v in mean.iter_mut() {
        *v /= n;
    }
    let mut cov = vec![0.0; k1 * k1];
    let denom = (n - 1.0).max(1.0);
    for a in 0..k1 {
        for b in a..k1 {
            let c = (cross[a * k1 + b] - n * mean[a] * mean[b]) / denom;
            cov[a * k1 + b] = c;
            cov[b * k1 + a] = c;
        }
    }
    let inv_fact: Vec<f64> = (0..k1).map(|k| (-ln_factorial(k)).exp()).collect();
    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
    let mut values = Vec::with_capacity(grid.len);
    let mut band = Vec::with_capacity(grid.len);
    for i in 0..grid.len {
        let x = grid.x(i);
        let rho = GaussKernel::density(x);
        let hx = hermite_poly_all(order + j, x);
        let h: Vec<f64> = (0..k1).map(|k| sign * rho * hx[k + j] * inv_fact[k]).collect();
        values.push(h.iter().zip(&mean).map(|(a, b)| a * b).sum());
        let mut var = 0.0;
        for a in 0..k1 {
            for b in 0..k1 {
                var += h[a] * cov[a * k1 + b] * h[b];
            }
        }
        band.push((var.max(0.0) / n).sqrt());
    }
    let curve = DensityCurve { grid, values, deriv_order: j, source: CurveSource::GramCharlier, meta: CurveMeta::default() };
    Ok(GramCharlier { curve, band, moments: mean })
}

/// Silverman's rule `0.9 min(sd, IQR / 1.34) N^{-1/5}`.
pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let sd = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (sorted.len() - 1) as f64;
        let i = pos.floor() as usize;
        let f = pos - i as f64;
        sorted[i] * (1.0 - f) + sorted[(i + 1).min(sorted.len() - 1)] * f
    };
    let iqr = q(0.75) - q(0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * n.powf(-0.2)
}

/// Gaussian kernel estimate of the `j`-th derivative with linear binning on
/// the output grid. Samples off the grid are dropped from the bins.
pub fn kde_density(samples: &[f64], grid: UniformGrid, j: usize) -> Result<DensityCurve> {
    if samples.len() < 2 {
        return Err(Error::InvalidParameter("kernel estimate needs at least two samples".into()));
    }
    let bw = silverman_bandwidth(samples);
    if !(bw > 0.0) {
        return Err(Error::InvalidParameter("degenerate samples: zero bandwidth".into()));
    }
    let mut bins = vec![0.0; grid.len];
    for &s in samples {
        let u = (s - grid.x_min) / grid.step;
        if u < 0.0 || u > (grid.len - 1) as f64 {
            continue;
        }
        let i = (u.floor() as usize).min(grid.len - 2);
        let f = u - i as f64;
        bins[i] += 1.0 - f;
        bins[i + 1] += f;
    }
    let reach = ((8.0 * bw) / grid.step).ceil() as usize;
    let scale = 1.0 / (samples.len() as f64 * bw.powi(j as i32 + 1));
    let kernel: Vec<f64> = (0..=reach)
        .map(|d| gaussian_density_derivative(j, d as f64 * grid.step / bw) * scale)
        .collect();
    let parity = if j % 2 == 0 { 1.0 } else { -1.0 };
    let mut values = vec![0.0; grid.len];
    for (i, out) in values.iter_mut().enumerate() {
        let lo = i.saturating_sub(reach);
        let hi = (i + reach).min(grid.len - 1);
        let mut acc = 0.0;
        for (k, b) in bins.iter().enumerate().take(hi + 1).skip(lo) {
            if *b == 0.0 {
                continue;
            }
            // kernel at (x_i - x_k) / bw
            acc += if i >= k { kernel[i - k] } else { parity * kernel[k - i] } * b;
        }
        *out = acc;
    }
    Ok(DensityCurve { grid, values, deriv_order: j, source: CurveSource::Kde, meta: CurveMeta::default() })
}

#[derive(Debug, Clone)]
pub struct LimitShape {
    pub scaled_curve: DensityCurve,
    pub target: DensityCurve,
    pub sup_gap: f64,
}

/// `(6 / kappa3) (rho_{F_n} - rho_N)` against `-rho_N^{(3)}` on the standard grid.
pub fn limit_shape_check(spec: &QuadFormSpec) -> Result<LimitShape> {
    let kappa3 = exact_cumulants_m2(spec, 3)?[1];
    if kappa3 == 0.0 {
        return Err(Error::DegenerateScaling);
    }
    let grid = UniformGrid::standard();
    let exact = exact_density_m2(spec, grid, 0)?;
    let diff = exact.sub(&gaussian_curve(grid, 0))?;
    let scaled_curve = diff.scaled(6.0 / kappa3);
    // Tagged as order 0: it is the limit of a scaled order-0 difference.
    let target = DensityCurve::from_fn(grid, 0, CurveSource::Reference, |x| -gaussian_density_derivative(3, x));
    let sup_gap = curve_distance(&scaled_curve, &target, CurveNorm::Sup)?;
    Ok(LimitShape { scaled_curve, target, sup_gap })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distances_basic() {
        let g = UniformGrid::standard();
        let a = gaussian_curve(g, 0);
        assert_eq!(curve_distance(&a, &a, CurveNorm::Sup).unwrap(), 0.0);
        let shifted = DensityCurve::from_fn(g, 0, CurveSource::Reference, |x| GaussKernel::density(x - g.step));
        let d = curve_distance(&a, &shifted, CurveNorm::Sup).unwrap();
        let first_order = g.step * GaussKernel::derivative(1, 1.0).abs();
        assert!((d - first_order).abs() < 0.01 * first_order);
        let other = gaussian_curve(UniformGrid::new(-8.0, 8.0, 4097).unwrap(), 0);
        assert!(matches!(curve_distance(&a, &other, CurveNorm::L1), Err(Error::GridMismatch(_))));
        assert!(curve_distance(&a, &gaussian_curve(g, 1), CurveNorm::L1).is_err());
    }

    #[test]
    fn edgeworth_examples() {
        let g = UniformGrid::standard();
        let e = edgeworth_reference(0.0, g, 2).unwrap();
        assert_eq!(e.values, gaussian_curve(g, 2).values);
        let e = edgeworth_reference(0.4, UniformGrid::new(-8.0, 8.0, 4097).unwrap(), 0).unwrap();
        assert!((e.value_at(0.0) - GaussKernel::density(0.0)).abs() < 1e-15);
        assert!((e.mass() - 1.0).abs() < 1e-12);
        assert!(edgeworth_reference(0.1, g, 5).is_err());
    }

    #[test]
    fn norm_labels_parse() {
        for n in [CurveNorm::Sup, CurveNorm::L1, CurveNorm::L2, CurveNorm::Lr(3.0)] {
            assert_eq!(CurveNorm::parse(&n.label()).unwrap(), n);
        }
        assert!(CurveNorm::parse("L0.5").is_err());
    }

    #[test]
    fn gram_charlier_order_limit() {
        let g = UniformGrid::standard();
        assert!(gram_charlier_density(&[0.1, 0.2], 31, g, 0).is_err());
        assert!(gram_charlier_density(&[], 8, g, 0).is_err());
    }

    #[test]
    fn gram_charlier_derivative_is_consistent() {
        let samples: Vec<f64> = (0..2000).map(|i| ((i as f64 * 0.618_033_988_7) % 1.0) * 3.0 - 1.2).collect();
        let g = UniformGrid::standard();
        let f0 = gram_charlier_density(&samples, 6, g, 0).unwrap().curve;
        let f1 = gram_charlier_density(&samples, 6, g, 1).unwrap().curve;
        for i in 1..g.len - 1 {
            let fd = (f0.values[i + 1] - f0.values[i - 1]) / (2.0 * g.step);
            assert!((fd - f1.values[i]).abs() < 1e-4, "{i}");
        }
    }
}
