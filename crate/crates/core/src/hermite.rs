//! Probabilists' Hermite polynomials, normalized Hermite functions and their
//! Gaussian integrals.
//!
//! Hermite functions are evaluated with the normalized three-term recurrence
//! carried in mantissa/log-scale form, so `phi_0 = pi^{-1/4} exp(-x^2/2)` never
//! underflows before the recurrence has had a chance to grow.

use std::collections::BTreeMap;

pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
/// pi^{-1/4}
pub const PI_POW_NEG_QUARTER: f64 = 0.751_125_544_464_942_5;

const RESCALE: f64 = 1e100;

/// Standard normal density and its derivatives.
#[derive(Debug, Clone, Copy, Default)]
pub struct GaussKernel;

impl GaussKernel {
    pub fn density(x: f64) -> f64 {
        FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
    }

    /// `d^j/dx^j` of the standard normal density.
    pub fn derivative(j: usize, x: f64) -> f64 {
        let rho = Self::density(x);
        if rho == 0.0 {
            return 0.0;
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        sign * hermite_poly(j, x) * rho
    }
}

/// `rho_N^{(j)}(x) = (-1)^j H_j(x) rho_N(x)`.
pub fn gaussian_density_derivative(j: usize, x: f64) -> f64 {
    GaussKernel::derivative(j, x)
}

/// H_n(x) by the recurrence `H_{n+1} = x H_n - n H_{n-1}`. Overflows to
/// infinity for extreme `n * x`.
pub fn hermite_poly(n: usize, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = x;
    for k in 1..n {
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `[H_0(x), ..., H_{n_max}(x)]`.
pub fn hermite_poly_all(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(1.0);
    if n_max >= 1 {
        out.push(x);
    }
    for k in 1..n_max {
        let next = x * out[k] - k as f64 * out[k - 1];
        out.push(next);
    }
    out
}

/// Monomial coefficients of H_n, lowest degree first. Exact for n <= 30.
pub fn hermite_monomials(n: usize) -> Vec<i64> {
    let mut prev = vec![1i64];
    if n == 0 {
        return prev;
    }
    let mut cur = vec![0i64, 1];
    for k in 1..n {
        let mut next = vec![0i64; k + 2];
        for (i, &c) in cur.iter().enumerate() {
            next[i + 1] += c;
        }
        for (i, &c) in prev.iter().enumerate() {
            next[i] -= k as i64 * c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Linearization `H_m H_n = sum_j binom(m,j) binom(n,j) j! H_{m+n-2j}`,
/// keyed by the order `m + n - 2j`.
pub fn hermite_product_coeffs(m: usize, n: usize) -> BTreeMap<usize, f64> {
    let mut out = BTreeMap::new();
    let mut c = 1.0;
    for j in 0..=m.min(n) {
        out.insert(m + n - 2 * j, c);
        c *= ((m - j) * (n - j)) as f64 / (j + 1) as f64;
    }
    out
}

pub fn ln_factorial(n: usize) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

fn unscale(mantissa: f64, log_scale: f64) -> f64 {
    if mantissa == 0.0 {
        0.0
    } else if log_scale > -700.0 {
        mantissa * log_scale.exp()
    } else {
        mantissa.signum() * (mantissa.abs().ln() + log_scale).exp()
    }
}

/// Fills `out[k] = phi_k(x)` for `k < out.len()`.
pub fn fill_phi(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let mut log_scale = -0.5 * x * x;
    let mut prev = 0.0;
    let mut cur = PI_POW_NEG_QUARTER;
    out[0] = unscale(cur, log_scale);
    for k in 0..out.len() - 1 {
        let kf = k as f64;
        let next = x * (2.0 / (kf + 1.0)).sqrt() * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            prev /= RESCALE;
            cur /= RESCALE;
            log_scale += RESCALE.ln();
        }
        out[k + 1] = unscale(cur, log_scale);
    }
}

/// `[phi_0(x), ..., phi_{n_max}(x)]`.
pub fn hermite_phi_all(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    fill_phi(x, &mut out);
    out
}

/// L2-orthonormal Hermite function `phi_n(x)`, with `phi_0 = pi^{-1/4} e^{-x^2/2}`.
pub fn hermite_phi(n: usize, x: f64) -> f64 {
    if n == 0 {
        return unscale(PI_POW_NEG_QUARTER, -0.5 * x * x);
    }
    let mut buf = vec![0.0; n + 1];
    fill_phi(x, &mut buf);
    buf[n]
}

/// `phi_n'(x) = sqrt(n/2) phi_{n-1} - sqrt((n+1)/2) phi_{n+1}`.
pub fn hermite_phi_derivative(n: usize, x: f64) -> f64 {
    let v = hermite_phi_all(n + 1, x);
    let lower = if n > 0 { (n as f64 / 2.0).sqrt() * v[n - 1] } else { 0.0 };
    lower - ((n as f64 + 1.0) / 2.0).sqrt() * v[n + 1]
}

/// `int phi_n(x) exp(-alpha x^2) dx` in closed form, evaluated in log space.
pub fn gauss_integral_phi(n: usize, alpha: f64) -> f64 {
    if n % 2 == 1 {
        return 0.0;
    }
    let half = n / 2;
    let ratio = (1.0 - 2.0 * alpha) / (1.0 + 2.0 * alpha);
    if half > 0 && ratio == 0.0 {
        return 0.0;
    }
    let hf = half as f64;
    let mut log_val = 0.5 * std::f64::consts::LN_2
        + 0.25 * std::f64::consts::PI.ln()
        + 0.5 * ln_factorial(n)
        - hf * std::f64::consts::LN_2
        - ln_factorial(half)
        - 0.5 * (1.0 + 2.0 * alpha).ln();
    if half > 0 {
        log_val += hf * ratio.abs().ln();
    }
    let sign = if ratio < 0.0 && half % 2 == 1 { -1.0 } else { 1.0 };
    sign * log_val.exp()
}
