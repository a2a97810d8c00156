//! Tempered distributions truncated in the Hermite-function basis.
//!
//! A [`SpectralRep`] stores `c_n = <T, phi_n>` for `n = 0..=K`. The ladder
//! operators act exactly on coefficients and drop the truncation by one, so
//! no boundary coefficient is ever computed from a missing neighbour.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hermite::{fill_phi, gauss_integral_phi, hermite_phi_all, PI_POW_NEG_QUARTER};
use crate::quadrature::composite_legendre;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralRep {
    coeffs: Vec<f64>,
}

impl SpectralRep {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter("a representation needs at least one coefficient".into()));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!("coefficient {i} is not finite")));
        }
        Ok(Self { coeffs })
    }

    pub fn zeros(truncation: usize) -> Self {
        Self { coeffs: vec![0.0; truncation + 1] }
    }

    /// Coefficients of `phi_index`.
    pub fn unit(index: usize, truncation: usize) -> Self {
        let mut r = Self::zeros(truncation.max(index));
        r.coeffs[index] = 1.0;
        r
    }

    pub fn truncation(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn truncated(&self, truncation: usize) -> Self {
        let k = truncation.min(self.truncation());
        Self { coeffs: self.coeffs[..=k].to_vec() }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// `self + s * other`, aligned on the smaller truncation.
    pub fn add_scaled(&self, other: &SpectralRep, s: f64) -> Self {
        let k = self.truncation().min(other.truncation());
        Self { coeffs: (0..=k).map(|i| self.coeffs[i] + s * other.coeffs[i]).collect() }
    }

    /// Reconstruction `sum_n c_n phi_n(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        let phi = hermite_phi_all(self.truncation(), x);
        phi.iter().zip(&self.coeffs).map(|(p, c)| p * c).sum()
    }

    /// Flat text record: truncation, then the coefficients, comma separated.
    pub fn to_record(&self) -> String {
        let mut s = self.truncation().to_string();
        for c in &self.coeffs {
            let _ = write!(s, ",{c:e}");
        }
        s
    }

    pub fn from_record(record: &str) -> Result<Self> {
        let mut parts = record.trim().split(',');
        let k: usize = parts
            .next()
            .and_then(|p| p.trim().parse().ok())
            .ok_or_else(|| Error::InvalidParameter("record must start with the truncation".into()))?;
        let coeffs = parts
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidParameter(format!("bad coefficient: {e}")))?;
        if coeffs.len() != k + 1 {
            return Err(Error::InvalidParameter(format!(
                "record declares truncation {k} but carries {} coefficients",
                coeffs.len()
            )));
        }
        Self::new(coeffs)
    }
}

/// `2^{alpha/2} (sum_n (n+1)^alpha c_n^2)^{1/2}`.
pub fn s_alpha_norm(rep: &SpectralRep, alpha: f64) -> f64 {
    let s: f64 = rep
        .coeffs
        .iter()
        .enumerate()
        .map(|(n, c)| (n as f64 + 1.0).powf(alpha) * c * c)
        .sum();
    2f64.powf(alpha / 2.0) * s.sqrt()
}

/// Bound on the operator norm of one ladder step from `S_alpha` to `S_{alpha-1}`.
pub fn ladder_norm_factor(alpha: f64) -> f64 {
    (2f64.powf(alpha.abs() - 1.0) + 0.5).sqrt()
}

/// Coefficient actions of the derivative and of multiplication by `x`.
pub trait LadderOps {
    fn derivative(&self, rep: &SpectralRep) -> Result<SpectralRep>;
    fn mult_x(&self, rep: &SpectralRep) -> Result<SpectralRep>;
}

/// The exact Hermite-function ladder.
#[derive(Debug, Clone, Copy, Default)]
pub struct HermiteLadder;

fn ladder(rep: &SpectralRep, sign: f64) -> Result<SpectralRep> {
    let k = rep.truncation();
    if k == 0 {
        return Err(Error::TruncationTooSmall { needed: 1, got: 0 });
    }
    let c = &rep.coeffs;
    let out = (0..k)
        .map(|n| {
            let up = ((n as f64 + 1.0) / 2.0).sqrt() * c[n + 1];
            let down = if n > 0 { (n as f64 / 2.0).sqrt() * c[n - 1] } else { 0.0 };
            up + sign * down
        })
        .collect();
    Ok(SpectralRep { coeffs: out })
}

impl LadderOps for HermiteLadder {
    fn derivative(&self, rep: &SpectralRep) -> Result<SpectralRep> {
        ladder(rep, -1.0)
    }

    fn mult_x(&self, rep: &SpectralRep) -> Result<SpectralRep> {
        ladder(rep, 1.0)
    }
}

/// `(DT)_n = sqrt((n+1)/2) c_{n+1} - sqrt(n/2) c_{n-1}`, truncation `K - 1`.
pub fn ladder_derivative(rep: &SpectralRep) -> Result<SpectralRep> {
    HermiteLadder.derivative(rep)
}

/// `(xT)_n = sqrt((n+1)/2) c_{n+1} + sqrt(n/2) c_{n-1}`, truncation `K - 1`.
pub fn ladder_mult_x(rep: &SpectralRep) -> Result<SpectralRep> {
    HermiteLadder.mult_x(rep)
}

/// `times`-fold derivative.
pub fn ladder_derivative_n<L: LadderOps + ?Sized>(ops: &L, rep: &SpectralRep, times: usize) -> Result<SpectralRep> {
    let mut out = rep.clone();
    for _ in 0..times {
        out = ops.derivative(&out)?;
    }
    Ok(out)
}

/// Coefficients of the point mass at `a`: `c_n = phi_n(a)`.
pub fn delta_coeffs(a: f64, truncation: usize) -> SpectralRep {
    SpectralRep { coeffs: hermite_phi_all(truncation, a) }
}

/// Coefficients of the constant function 1.
pub fn one_coeffs(truncation: usize) -> SpectralRep {
    SpectralRep { coeffs: (0..=truncation).map(|n| gauss_integral_phi(n, 0.0)).collect() }
}

/// Exact coefficients of `rho_N^{(q)}`; only indices `<= q` are nonzero.
pub fn gaussian_density_coeffs(q: usize, truncation: usize) -> SpectralRep {
    // rho_N = pi^{-1/4} 2^{-1/2} phi_0
    let mut rep = SpectralRep::zeros(truncation + q);
    rep.coeffs[0] = PI_POW_NEG_QUARTER * std::f64::consts::FRAC_1_SQRT_2;
    for _ in 0..q {
        rep = ladder(&rep, -1.0).expect("truncation stays positive");
    }
    rep
}

/// Parseval pairing, the shorter vector zero-padded.
pub fn pair(t: &SpectralRep, s: &SpectralRep) -> f64 {
    t.coeffs.iter().zip(&s.coeffs).map(|(a, b)| a * b).sum()
}

#[derive(Debug, Clone)]
pub struct Projection {
    pub rep: SpectralRep,
    /// Relative l2 mass carried by the top 10% of indices.
    pub tail_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct ProjectionOptions {
    /// Points where the integrand may be non-smooth.
    pub breaks: Vec<f64>,
    /// Absolute tolerance on each coefficient.
    pub tol: f64,
    /// Integration half-width; defaults to `sqrt(2K+1) + 12` plus the breaks.
    pub half_width: Option<f64>,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self { breaks: Vec::new(), tol: 1e-11, half_width: None }
    }
}

const PANEL_ORDER: usize = 16;

fn panel_rule(lo: f64, hi: f64, breaks: &[f64], width: f64) -> Vec<(f64, f64)> {
    let mut edges = vec![lo];
    edges.extend(breaks.iter().copied().filter(|b| *b > lo && *b < hi));
    edges.push(hi);
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let mut rule = Vec::new();
    for w in edges.windows(2) {
        let panels = ((w[1] - w[0]) / width).ceil().max(1.0) as usize;
        rule.extend(composite_legendre(w[0], w[1], panels, PANEL_ORDER));
    }
    rule
}

fn project_on_rule<F: Fn(f64) -> f64 + Sync>(f: &F, truncation: usize, rule: &[(f64, f64)]) -> Vec<f64> {
    const CHUNK: usize = 256;
    rule.par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; truncation + 1];
            let mut phi = vec![0.0; truncation + 1];
            for &(x, w) in chunk {
                let fx = f(x) * w;
                if fx == 0.0 {
                    continue;
                }
                fill_phi(x, &mut phi);
                for (a, p) in acc.iter_mut().zip(&phi) {
                    *a += fx * p;
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(vec![0.0; truncation + 1], |mut total, part| {
            for (t, p) in total.iter_mut().zip(part) {
                *t += p;
            }
            total
        })
}

/// `c_n = int f phi_n` by composite Gauss-Legendre panels, refined by halving
/// the panel width until successive estimates agree for every index.
pub fn project_function_with<F: Fn(f64) -> f64 + Sync>(
    f: F,
    truncation: usize,
    opts: &ProjectionOptions,
) -> Result<Projection> {
    let reach = opts.breaks.iter().fold(0.0f64, |m, b| m.max(b.abs()));
    let half = opts
        .half_width
        .unwrap_or_else(|| (2.0 * truncation as f64 + 1.0).sqrt() + 12.0 + reach);
    let oscillation = std::f64::consts::PI / (2.0 * truncation as f64 + 1.0).sqrt();
    let mut width = oscillation.clamp(0.05, 1.0);
    let mut prev = project_on_rule(&f, truncation, &panel_rule(-half, half, &opts.breaks, width));
    for _ in 0..6 {
        width /= 2.0;
        let next = project_on_rule(&f, truncation, &panel_rule(-half, half, &opts.breaks, width));
        let (worst, diff) = prev
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .enumerate()
            .fold((0, 0.0), |acc, (i, d)| if d > acc.1 { (i, d) } else { acc });
        prev = next;
        if diff <= opts.tol {
            let rep = SpectralRep::new(prev)?;
            let tail_fraction = tail_fraction(&rep);
            return Ok(Projection { rep, tail_fraction });
        }
        if width < 1e-4 {
            return Err(Error::QuadratureDiverged { index: worst });
        }
        log::debug!("projection refining: index {worst} moved by {diff:.3e}");
    }
    let (worst, _) = prev
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
    Err(Error::QuadratureDiverged { index: worst })
}

pub fn project_function<F: Fn(f64) -> f64 + Sync>(f: F, truncation: usize) -> Result<Projection> {
    project_function_with(f, truncation, &ProjectionOptions::default())
}

pub fn tail_fraction(rep: &SpectralRep) -> f64 {
    let k = rep.truncation();
    let start = k + 1 - (k + 1).div_ceil(10);
    let total: f64 = rep.coeffs.iter().map(|c| c * c).sum();
    if total == 0.0 {
        return 0.0;
    }
    let tail: f64 = rep.coeffs[start..].iter().map(|c| c * c).sum();
    (tail / total).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::{hermite_phi, GaussKernel};
    use proptest::prelude::*;

    #[test]
    fn norm_examples() {
        assert_eq!(s_alpha_norm(&SpectralRep::zeros(5), 1.3), 0.0);
        assert!((s_alpha_norm(&SpectralRep::unit(0, 3), 0.0) - 1.0).abs() < 1e-15);
        assert!((s_alpha_norm(&SpectralRep::unit(1, 3), 2.0) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn ladder_on_ground_state() {
        let d = ladder_derivative(&SpectralRep::unit(0, 4)).unwrap();
        assert_eq!(d.truncation(), 3);
        assert!((d.coeffs()[1] + 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(d.coeffs()[0], 0.0);
        let x = ladder_mult_x(&SpectralRep::unit(0, 4)).unwrap();
        assert!((x.coeffs()[1] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(matches!(ladder_derivative(&SpectralRep::zeros(0)), Err(Error::TruncationTooSmall { .. })));
        assert!(ladder_mult_x(&SpectralRep::zeros(0)).is_err());
    }

    #[test]
    fn parity_of_delta_and_one() {
        let d = delta_coeffs(0.0, 40);
        assert!(d.coeffs().iter().skip(1).step_by(2).all(|c| *c == 0.0));
        let dd = ladder_derivative(&d).unwrap();
        assert!(dd.coeffs().iter().step_by(2).all(|c| *c == 0.0));
        let one = one_coeffs(40);
        assert!(one.coeffs().iter().skip(1).step_by(2).all(|c| *c == 0.0));
        let x1 = ladder_mult_x(&one).unwrap();
        assert!(x1.coeffs().iter().step_by(2).all(|c| c.abs() < 1e-15));
    }

    #[test]
    fn one_matches_fourier_identity() {
        let one = one_coeffs(60);
        for n in (0..=60).step_by(2) {
            let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let alt = (2.0 * std::f64::consts::PI).sqrt() * hermite_phi(n, 0.0) * sign;
            assert!((one.coeffs()[n] - alt).abs() < 1e-12 * (1.0 + alt.abs()), "{n}");
        }
    }

    #[test]
    fn density_pairings() {
        let rho = gaussian_density_coeffs(0, 400);
        assert!((pair(&one_coeffs(400), &rho) - 1.0).abs() < 1e-12);
        let v = pair(&delta_coeffs(1.3, 400), &rho);
        assert!((v - 0.171_368_592_047_807_4).abs() < 1e-12);
        assert!((v - GaussKernel::density(1.3)).abs() < 1e-6);
    }

    #[test]
    fn projection_examples() {
        let p = project_function(|x| hermite_phi(3, x), 20).unwrap();
        for (n, c) in p.rep.coeffs().iter().enumerate() {
            let target = if n == 3 { 1.0 } else { 0.0 };
            assert!((c - target).abs() < 1e-10, "{n} {c}");
        }
        let p = project_function(GaussKernel::density, 30).unwrap();
        for (n, c) in p.rep.coeffs().iter().enumerate() {
            let closed = crate::hermite::FRAC_1_SQRT_2PI * gauss_integral_phi(n, 0.5);
            assert!((c - closed).abs() < 1e-10);
        }
        let p = project_function(|x| x * hermite_phi(0, x), 20).unwrap();
        let lad = ladder_mult_x(&SpectralRep::unit(0, 21)).unwrap();
        for (a, b) in p.rep.coeffs().iter().zip(lad.coeffs()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn derivative_of_ground_state_by_quadrature() {
        let h = 1e-4;
        let p = project_function(|x| (hermite_phi(0, x + h) - hermite_phi(0, x - h)) / (2.0 * h), 10).unwrap();
        let d = ladder_derivative(&SpectralRep::unit(0, 11)).unwrap();
        for (a, b) in p.rep.coeffs().iter().zip(d.coeffs()) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn record_round_trip() {
        let r = delta_coeffs(0.7, 12);
        let back = SpectralRep::from_record(&r.to_record()).unwrap();
        assert_eq!(r, back);
        assert!(SpectralRep::from_record("3,1,2").is_err());
    }

    proptest! {
        #[test]
        fn ladder_contraction(coeffs in proptest::collection::vec(-1.0f64..1.0, 2..60), alpha in -4.0f64..4.0) {
            let t = SpectralRep::new(coeffs).unwrap();
            let bound = ladder_norm_factor(alpha) * s_alpha_norm(&t, alpha);
            let d = ladder_derivative(&t).unwrap();
            let x = ladder_mult_x(&t).unwrap();
            prop_assert!(s_alpha_norm(&d, alpha - 1.0) <= bound * (1.0 + 1e-12));
            prop_assert!(s_alpha_norm(&x, alpha - 1.0) <= bound * (1.0 + 1e-12));
        }

        #[test]
        fn ladder_duality(t in proptest::collection::vec(-1.0f64..1.0, 3..40), s in proptest::collection::vec(-1.0f64..1.0, 3..40)) {
            // With compact coefficient support the truncation boundary plays no role.
            let mut tp = t.clone();
            tp.extend([0.0, 0.0]);
            let mut sp = s.clone();
            sp.extend([0.0, 0.0]);
            let tr = SpectralRep::new(tp).unwrap();
            let sr = SpectralRep::new(sp).unwrap();
            let lhs = pair(&ladder_derivative(&tr).unwrap(), &sr);
            let rhs = -pair(&tr, &ladder_derivative(&sr).unwrap());
            prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
        }
    }
}
