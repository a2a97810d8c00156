//! Explicit solutions of the distributional Stein equation
//! `DT - xT = (-1)^n D^n delta_a - rho_N^{(n)}(a)`.

use crate::error::{Error, Result};
use crate::hermite::{gaussian_density_derivative, hermite_monomials, hermite_poly, GaussKernel};
use crate::schwartz::{
    delta_coeffs, gaussian_density_coeffs, ladder_derivative_n, one_coeffs, pair, project_function_with,
    s_alpha_norm, HermiteLadder, LadderOps, ProjectionOptions, SpectralRep,
};

const SQRT_FRAC_PI_2: f64 = 1.253_314_137_315_500_3;

/// Extra truncation required beyond the derivative order.
pub const TRUNCATION_MARGIN: usize = 8;

/// Scaled complementary error function `exp(x^2) erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 * (x * x).exp() - erfcx(-x);
    }
    if x < 4.0 {
        return (x * x).exp() * libm::erfc(x);
    }
    // Continued fraction erfc(x) = e^{-x^2}/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))).
    let mut tail = x;
    for k in (1..=60).rev() {
        tail = x + (k as f64 / 2.0) / tail;
    }
    std::f64::consts::FRAC_2_SQRT_PI / 2.0 / tail
}

/// Mills ratio `e^{x^2/2} int_x^inf e^{-y^2/2} dy` for `x >= 0`.
fn mills(x: f64) -> f64 {
    SQRT_FRAC_PI_2 * erfcx(x * std::f64::consts::FRAC_1_SQRT_2)
}

/// The solution of `f' - x f = delta_a - rho_N(a)`. At `x = a` the right
/// limit is returned.
pub fn f_a_eval(a: f64, x: f64) -> f64 {
    let rho_a = GaussKernel::density(a);
    if x >= a {
        if x >= 0.0 {
            rho_a * mills(x)
        } else {
            (0.5 * (x * x - a * a)).exp() - rho_a * mills(-x)
        }
    } else if x <= 0.0 {
        -rho_a * mills(-x)
    } else {
        -((0.5 * (x * x - a * a)).exp() - rho_a * mills(x))
    }
}

/// Left limit of `f_a` at `x`.
pub fn f_a_left(a: f64, x: f64) -> f64 {
    if x != a {
        return f_a_eval(a, x);
    }
    let rho_a = GaussKernel::density(a);
    if a <= 0.0 {
        -rho_a * mills(-a)
    } else {
        -(1.0 - rho_a * mills(a))
    }
}

#[derive(Debug, Clone)]
pub struct SteinSolution {
    pub a: f64,
    pub n: usize,
    pub rep: SpectralRep,
    /// Jump of the `f_a` component at `x = a`, as it enters `f_{a,n}`.
    pub jump: f64,
}

fn f_a_projection(a: f64, truncation: usize) -> Result<SpectralRep> {
    let opts = ProjectionOptions { breaks: vec![a], ..ProjectionOptions::default() };
    Ok(project_function_with(|x| f_a_eval(a, x), truncation, &opts)?.rep)
}

/// `H_k(x) T` through repeated multiplication by `x`.
fn hermite_times<L: LadderOps + ?Sized>(ops: &L, k: usize, rep: &SpectralRep, truncation: usize) -> Result<SpectralRep> {
    let mono = hermite_monomials(k);
    let mut acc = SpectralRep::zeros(truncation);
    let mut power = rep.clone();
    for (i, &c) in mono.iter().enumerate() {
        if i > 0 {
            power = ops.mult_x(&power)?;
        }
        if c != 0 {
            acc = acc.add_scaled(&power, c as f64);
        }
    }
    Ok(acc.truncated(truncation))
}

pub fn f_an_coeffs(a: f64, n: usize, truncation: usize) -> Result<SteinSolution> {
    f_an_coeffs_with(&HermiteLadder, a, n, truncation)
}

/// Hermite representation of `f_{a,n}` using the given ladder implementation.
pub fn f_an_coeffs_with<L: LadderOps + ?Sized>(ops: &L, a: f64, n: usize, truncation: usize) -> Result<SteinSolution> {
    if truncation < n + TRUNCATION_MARGIN {
        return Err(Error::TruncationTooSmall { needed: n + TRUNCATION_MARGIN, got: truncation });
    }
    let f_a = f_a_projection(a, truncation)?;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let jump_scale = sign * hermite_poly(n, a);
    if n == 0 {
        return Ok(SteinSolution { a, n, rep: f_a, jump: 1.0 });
    }
    let delta = delta_coeffs(a, truncation + n - 1);
    let mut total = f_a.scaled(hermite_poly(n, a));
    for k in 0..n {
        let d = ladder_derivative_n(ops, &delta, n - 1 - k)?;
        total = total.add_scaled(&hermite_times(ops, k, &d, truncation)?, 1.0);
    }
    let jump = jump_scale * (f_a_eval(a, a) - f_a_left(a, a));
    Ok(SteinSolution { a, n, rep: total.scaled(sign), jump })
}

#[derive(Debug, Clone)]
pub struct SteinResidual {
    pub rep: SpectralRep,
    /// `||residual||_{S_{-n-1}} / ||D^n delta_a||_{S_{-n-1}}`.
    pub relative_norm: f64,
    pub rhs_norm: f64,
}

/// Residual of `candidate` in the Stein equation of order `n` at `a`.
pub fn residual_of<L: LadderOps + ?Sized>(ops: &L, candidate: &SpectralRep, a: f64, n: usize) -> Result<SteinResidual> {
    let k = candidate.truncation();
    if k < 1 {
        return Err(Error::TruncationTooSmall { needed: 1, got: k });
    }
    let d = ops.derivative(candidate)?;
    let x = ops.mult_x(candidate)?;
    let delta_n = ladder_derivative_n(ops, &delta_coeffs(a, k - 1 + n), n)?;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let rhs = delta_n.scaled(sign).add_scaled(&one_coeffs(k - 1), -gaussian_density_derivative(n, a));
    let rep = d.add_scaled(&x, -1.0).add_scaled(&rhs, -1.0);
    let alpha = -(n as f64) - 1.0;
    let scale = s_alpha_norm(&delta_n, alpha);
    Ok(SteinResidual { relative_norm: s_alpha_norm(&rep, alpha) / scale, rhs_norm: s_alpha_norm(&rhs, alpha), rep })
}

pub fn stein_residual(a: f64, n: usize, truncation: usize) -> Result<SteinResidual> {
    stein_residual_with(&HermiteLadder, a, n, truncation)
}

pub fn stein_residual_with<L: LadderOps + ?Sized>(ops: &L, a: f64, n: usize, truncation: usize) -> Result<SteinResidual> {
    let sol = f_an_coeffs_with(ops, a, n, truncation)?;
    residual_of(ops, &sol.rep, a, n)
}

/// `(pair(f_{a,n}, rho_N^{(q)}), rho_N^{(n+q+1)}(a) / (q+1))`.
pub fn pairing_identity_check(a: f64, n: usize, q: usize, truncation: usize) -> Result<(f64, f64)> {
    if truncation < n + q + TRUNCATION_MARGIN {
        return Err(Error::TruncationTooSmall { needed: n + q + TRUNCATION_MARGIN, got: truncation });
    }
    let sol = f_an_coeffs(a, n, truncation)?;
    let lhs = pair(&sol.rep, &gaussian_density_coeffs(q, truncation));
    let rhs = gaussian_density_derivative(n + q + 1, a) / (q as f64 + 1.0);
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::hermite_phi;
    use crate::schwartz::ladder_derivative;

    #[test]
    fn erfcx_branches_agree() {
        for &x in &[0.0f64, 0.5, 2.0, 3.9] {
            let direct = (x * x).exp() * libm::erfc(x);
            assert!((erfcx(x) - direct).abs() < 1e-15 * direct.max(1.0));
        }
        for &x in &[4.0f64, 4.5, 5.5] {
            let direct = (x * x).exp() * libm::erfc(x);
            assert!((erfcx(x) - direct).abs() < 1e-13 * direct, "{x}");
        }
        // Asymptotic 1/(x sqrt(pi)) (1 - 1/(2x^2)).
        let x = 1e4;
        let asym = 1.0 / (x * std::f64::consts::PI.sqrt()) * (1.0 - 0.5 / (x * x));
        assert!((erfcx(x) - asym).abs() < 1e-12 * asym);
    }

    #[test]
    fn jump_is_one() {
        for &a in &[-2.0, 0.0, 1.5] {
            let j = f_a_eval(a, a) - f_a_left(a, a);
            assert!((j - 1.0).abs() < 1e-14, "{a} {j}");
            let near = f_a_eval(a, a + 1e-9) - f_a_eval(a, a - 1e-9);
            assert!((near - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn ode_residual_pointwise() {
        let a = 0.7;
        let h = 1e-5;
        for i in -60..=60 {
            let x = i as f64 * 0.1 + 0.013;
            if (x - a).abs() < 1e-3 {
                continue;
            }
            let d = (f_a_eval(a, x + h) - f_a_eval(a, x - h)) / (2.0 * h);
            let r = d - x * f_a_eval(a, x) + GaussKernel::density(a);
            assert!(r.abs() < 1e-7, "{x} {r}");
        }
    }

    #[test]
    fn no_overflow_far_out() {
        for &x in &[-38.0, -30.0, 30.0, 38.0, 200.0] {
            assert!(f_a_eval(0.3, x).is_finite());
            assert!(f_a_eval(-0.3, x).abs() <= 1.0 / x.abs());
        }
    }

    #[test]
    fn projection_matches_exact_shift() {
        // (D - x) acts as the shift c_m -> -sqrt(2(m+1)) c_m on index m+1.
        let a = 0.4;
        let sol = f_an_coeffs(a, 0, 60).unwrap();
        let one = one_coeffs(61);
        let rho = GaussKernel::density(a);
        for m in 0..=60 {
            let exact = -(hermite_phi(m + 1, a) - rho * one.coeffs()[m + 1]) / (2.0 * (m as f64 + 1.0)).sqrt();
            assert!((sol.rep.coeffs()[m] - exact).abs() < 1e-10, "{m}");
        }
    }

    #[test]
    fn truncation_checked() {
        assert!(matches!(f_an_coeffs(0.0, 3, 10), Err(Error::TruncationTooSmall { .. })));
        assert!(pairing_identity_check(0.0, 2, 2, 11).is_err());
    }

    #[test]
    fn residual_examples() {
        let r = stein_residual(0.0, 0, 400).unwrap();
        assert!(r.relative_norm < 1e-5, "{}", r.relative_norm);
        let r = stein_residual(1.5, 2, 400).unwrap();
        assert!(r.relative_norm < 1e-4, "{}", r.relative_norm);
    }

    #[test]
    fn zero_candidate_residual_equals_rhs() {
        let r = residual_of(&HermiteLadder, &SpectralRep::zeros(100), 0.8, 2).unwrap();
        let norm = s_alpha_norm(&r.rep, -3.0);
        assert!((norm - r.rhs_norm).abs() < 1e-12 * r.rhs_norm);
    }

    #[test]
    fn pairing_examples() {
        let (l, r) = pairing_identity_check(0.0, 0, 0, 60).unwrap();
        assert_eq!(r, 0.0);
        assert!(l.abs() < 1e-10);
        let (l, r) = pairing_identity_check(1.0, 0, 0, 60).unwrap();
        assert!((r + 0.241_970_724_519_143_37).abs() < 1e-12);
        assert!((l - r).abs() < 1e-9);
        let (l, r) = pairing_identity_check(0.5, 2, 1, 60).unwrap();
        let x: f64 = 0.5;
        let expected = (x.powi(4) - 6.0 * x * x + 3.0) * GaussKernel::density(x) / 2.0;
        assert!((r - expected).abs() < 1e-14);
        assert!((l - r).abs() < 1e-9 * (1.0 + r.abs()));
    }

    #[test]
    fn first_order_solution_structure() {
        // f_{a,1} = -(delta_a + H_1(a) f_a)
        let a = -0.6;
        let sol = f_an_coeffs(a, 1, 40).unwrap();
        let f_a = f_an_coeffs(a, 0, 40).unwrap().rep;
        let expect = delta_coeffs(a, 40).add_scaled(&f_a, a).scaled(-1.0);
        for (x, y) in sol.rep.coeffs().iter().zip(expect.coeffs()) {
            assert!((x - y).abs() < 1e-13);
        }
        assert!((sol.jump + a).abs() < 1e-12);
        let _ = ladder_derivative(&sol.rep).unwrap();
    }
}
