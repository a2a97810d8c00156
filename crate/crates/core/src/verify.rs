//! Verification suite: one check per acceptance criterion plus the module
//! invariant batteries. Failures are report entries, never panics.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::cumulants::{kappa3_exact, predicted_exponent, sigma_n2, ChaosSpec, RateTarget};
use crate::density::{
    curve_distance, gaussian_curve, gram_charlier_density, limit_shape_check, CurveNorm, UniformGrid,
};
use crate::error::{Error, Result};
use crate::fgn::{fgn_sample, CovarianceModel};
use crate::hermite::{
    fill_phi, gauss_integral_phi, gaussian_density_derivative, hermite_monomials, hermite_phi,
};
use crate::quadform::{exact_cumulants_m2, exact_density_m2, toeplitz_traces, cumulants_from_traces, QuadFormSpec};
use crate::quadrature::{integrate_line, GaussHermite, Tolerance};
use crate::rates::{cumulant_records, cumulant_slopes, density_distances, fit_loglog, ExperimentConfig};
use crate::cumulants::{cumulants_mc, exact_record_m2};
use crate::schwartz::{
    delta_coeffs, gaussian_density_coeffs, ladder_derivative_n, ladder_norm_factor, pair, s_alpha_norm, HermiteLadder,
    LadderOps, SpectralRep,
};
use crate::stein::{f_a_eval, f_an_coeffs, stein_residual, stein_residual_with};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Fast,
    Full,
}

impl std::str::FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Level::Fast),
            "full" => Ok(Level::Full),
            _ => Err(Error::Config(format!("unknown level {s:?}, expected fast or full"))),
        }
    }
}

impl Level {
    /// Wall-clock budget for the whole suite, in seconds.
    pub fn budget_secs(&self) -> f64 {
        match self {
            Level::Fast => 300.0,
            Level::Full => 2700.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub elapsed_secs: f64,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] {} ({:.2}s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.elapsed_secs,
            self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub level: Level,
    pub checks: Vec<CheckOutcome>,
    pub elapsed_secs: f64,
    pub passed: bool,
}

fn timed<F: FnOnce() -> Result<(bool, String)>>(name: &str, f: F) -> CheckOutcome {
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    let out = CheckOutcome { name: name.into(), passed, detail, elapsed_secs: start.elapsed().as_secs_f64() };
    log::info!("{}", out.line());
    out
}

fn pow2(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|k| 1usize << k).collect()
}

fn band_ratio(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::MIN, f64::max);
    let min = values.iter().cloned().fold(f64::MAX, f64::min);
    max / min
}

/// Orthonormality of `phi_0..phi_40` and the closed-form Gaussian integrals
/// against adaptive quadrature.
pub fn check_hermite_identities(_level: Level) -> CheckOutcome {
    timed("hermite identities", || {
        let gh = GaussHermite::new(72);
        let mut phis = vec![vec![0.0; 41]; gh.nodes.len()];
        for (x, row) in gh.nodes.iter().zip(phis.iter_mut()) {
            fill_phi(*x, row);
        }
        let mut worst_orth = 0.0f64;
        for i in 0..=40 {
            for j in 0..=i {
                let v: f64 = phis.iter().zip(&gh.weights).map(|(p, w)| w * p[i] * p[j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst_orth = worst_orth.max((v - target).abs());
            }
        }
        let mut worst_gauss = 0.0f64;
        for n in 0..=30 {
            for alpha in [0.0, 0.25, 0.5, 1.0] {
                let closed = gauss_integral_phi(n, alpha);
                let quad = integrate_line(|x| hermite_phi(n, x) * (-alpha * x * x).exp(), &[-4.0, 0.0, 4.0], Tolerance::default())?;
                worst_gauss = worst_gauss.max((quad - closed).abs() / closed.abs().max(1.0));
            }
        }
        Ok((
            worst_orth < 1e-8 && worst_gauss < 1e-8,
            format!("orthonormality error {worst_orth:.2e}, Gaussian integral error {worst_gauss:.2e}"),
        ))
    })
}

/// `sup |f_a| <= 1` and `||f_a||_{L^2} <= sqrt 5` for `a` in `[-4, 4]`.
pub fn check_stein_bounds(_level: Level) -> CheckOutcome {
    timed("stein solution bounds", || {
        let mut worst_sup = 0.0f64;
        let mut worst_l2 = 0.0f64;
        for i in 0..33 {
            let a = -4.0 + 0.25 * i as f64;
            let mut sup = 0.0f64;
            for k in -40_000..=40_000 {
                sup = sup.max(f_a_eval(a, k as f64 * 1e-3).abs());
            }
            for x in [a - 1e-12, a, a + 1e-12] {
                sup = sup.max(f_a_eval(a, x).abs());
            }
            let l2 = integrate_line(|x| f_a_eval(a, x).powi(2), &[a], Tolerance::default())?.sqrt();
            worst_sup = worst_sup.max(sup);
            worst_l2 = worst_l2.max(l2);
        }
        Ok((
            worst_sup <= 1.0 + 1e-9 && worst_l2 <= 5f64.sqrt() + 1e-6,
            format!("max sup {worst_sup:.6}, max L2 {worst_l2:.6} (bound {:.6})", 5f64.sqrt()),
        ))
    })
}

/// Relative `S_{-n-1}` residual of the Stein solution at `K = 400`.
pub fn check_stein_residual(_level: Level) -> CheckOutcome {
    timed("stein weak residual", || {
        let mut worst = 0.0f64;
        for n in 0..=2 {
            for a in [-2.0, 0.0, 1.5] {
                worst = worst.max(stein_residual(a, n, 400)?.relative_norm);
            }
        }
        Ok((worst < 1e-4, format!("max relative residual {worst:.2e}")))
    })
}

/// `pair(f_{a,n}, rho_N^{(q)}) = rho_N^{(n+q+1)}(a) / (q+1)` for `n, q <= 3`.
pub fn check_pairing_identity(_level: Level) -> CheckOutcome {
    timed("pairing identity", || {
        let k = 400;
        let mut worst = 0.0f64;
        for i in 0..11 {
            let a = -2.5 + 0.5 * i as f64;
            for n in 0..=3 {
                let sol = f_an_coeffs(a, n, k)?;
                for q in 0..=3 {
                    let lhs = pair(&sol.rep, &gaussian_density_coeffs(q, k));
                    let rhs = gaussian_density_derivative(n + q + 1, a) / (q as f64 + 1.0);
                    worst = worst.max((lhs - rhs).abs() / (1.0 + rhs.abs()));
                }
            }
        }
        Ok((worst < 1e-5, format!("max relative error {worst:.2e}")))
    })
}

/// `sup_a ||D^k delta_a||_{S_{-1-k}}` at truncation `k`.
pub fn delta_derivative_sup(k: usize, truncation: usize) -> Result<f64> {
    let mut sup = 0.0f64;
    for i in 0..=100 {
        let a = -5.0 + 0.1 * i as f64;
        let d = ladder_derivative_n(&HermiteLadder, &delta_coeffs(a, truncation), k)?;
        sup = sup.max(s_alpha_norm(&d, -1.0 - k as f64));
    }
    Ok(sup)
}

/// Ladder contraction on random representations and stabilization of the
/// delta-derivative norms.
pub fn check_norm_machinery(_level: Level) -> CheckOutcome {
    timed("norm machinery", || {
        let mut rng = ChaCha20Rng::seed_from_u64(20);
        let mut worst_factor = 0.0f64;
        for _ in 0..100 {
            let k = rng.random_range(2..200);
            let alpha: f64 = rng.random_range(-3.0..3.0);
            let coeffs: Vec<f64> = (0..=k)
                .map(|i| rng.random_range(-1.0..1.0) * (i as f64 + 1.0).powf(rng.random_range(-1.0..0.5)))
                .collect();
            let t = SpectralRep::new(coeffs)?;
            let base = ladder_norm_factor(alpha) * s_alpha_norm(&t, alpha);
            for out in [HermiteLadder.derivative(&t)?, HermiteLadder.mult_x(&t)?] {
                worst_factor = worst_factor.max(s_alpha_norm(&out, alpha - 1.0) / base);
            }
        }
        let mut worst_change = 0.0f64;
        for k in 0..=3 {
            let lo = delta_derivative_sup(k, 300)?;
            let hi = delta_derivative_sup(k, 400)?;
            if hi < lo {
                return Ok((false, format!("norm decreased with truncation at k = {k}")));
            }
            worst_change = worst_change.max((hi - lo) / hi);
        }
        Ok((
            worst_factor <= 1.0 + 1e-12 && worst_change < 0.01,
            format!("max norm ratio to bound {worst_factor:.4}, max change 300->400 {:.3}%", 100.0 * worst_change),
        ))
    })
}

/// Sample autocovariances against the model at lags 0-5, and byte-exact
/// reproducibility.
pub fn check_fgn_simulator(_level: Level) -> CheckOutcome {
    timed("fgn simulator", || {
        let n = 512;
        let count = 10_000;
        let mut worst_z = 0.0f64;
        for h in [0.3, 0.7] {
            let model = CovarianceModel::fgn(h)?;
            let batch = fgn_sample(&model, n, count, 99)?;
            for r in 0..=5usize {
                let stats: Vec<f64> = batch
                    .paths()
                    .map(|p| p.iter().zip(&p[r..]).map(|(a, b)| a * b).sum::<f64>() / (n - r) as f64)
                    .collect();
                let mean = stats.iter().sum::<f64>() / count as f64;
                let var = stats.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
                let se = (var / count as f64).sqrt();
                worst_z = worst_z.max((mean - model.cov(r as i64)).abs() / se);
            }
        }
        let model = CovarianceModel::fgn(0.7)?;
        let mut first = Vec::new();
        let mut second = Vec::new();
        fgn_sample(&model, n, 64, 5)?.write_binary(&mut first)?;
        fgn_sample(&model, n, 64, 5)?.write_binary(&mut second)?;
        let same = first == second;
        Ok((worst_z < 4.0 && same, format!("max |z| {worst_z:.2} over lags 0-5, deterministic: {same}")))
    })
}

/// Eigenvalue, Toeplitz-trace and diagram-sum cumulants agree; Monte Carlo
/// k-statistics agree with them.
pub fn check_cumulant_cross_validation(_level: Level) -> CheckOutcome {
    timed("cumulant cross-validation", || {
        let mut worst_exact = 0.0f64;
        let mut worst_z = 0.0f64;
        let mut min_k4 = f64::MAX;
        for h in [0.5, 0.7] {
            for n in [64usize, 256] {
                let spec = QuadFormSpec::new(h, n, 1.0)?;
                let eig = exact_cumulants_m2(&spec, 4)?;
                let tr = cumulants_from_traces(&toeplitz_traces(&spec_model(h)?, n), n, 1.0);
                let diagram = kappa3_exact(&ChaosSpec::new(2, 1.0, h, n)?);
                for (a, b) in eig.iter().zip(&tr) {
                    worst_exact = worst_exact.max((a - b).abs() / a.abs().max(1.0));
                }
                worst_exact = worst_exact.max((eig[1] - diagram).abs() / eig[1].abs().max(1.0));
                let mc = cumulants_mc(&ChaosSpec::new(2, 1.0, h, n)?, 100_000, 11)?;
                for (p, exact) in [(1usize, eig[0]), (2, eig[1]), (3, eig[2])] {
                    worst_z = worst_z.max((mc.stats.k[p] - exact).abs() / mc.stats.se[p]);
                }
                min_k4 = min_k4.min(eig[2]).min(tr[2]);
            }
        }
        Ok((
            worst_exact < 1e-10 && worst_z < 4.0 && min_k4 > 0.0,
            format!("exact disagreement {worst_exact:.2e}, max MC |z| {worst_z:.2}, min kappa4 {min_k4:.3e}"),
        ))
    })
}

fn spec_model(h: f64) -> Result<CovarianceModel> {
    CovarianceModel::fgn(h)
}

/// Fitted slopes of exact `|kappa3|`, `kappa4`, `M` for `m = 2` and of the
/// Monte Carlo `kappa4` for `m = 3` against the predicted exponents.
pub fn check_exponent_table(level: Level) -> CheckOutcome {
    timed("exponent table", || {
        let exact_grid = match level {
            Level::Fast => pow2(7, 10),
            Level::Full => pow2(7, 13),
        };
        let mut passed = true;
        let mut parts = Vec::new();
        for h in [0.5, 0.7] {
            let cfg = ExperimentConfig::new(2, h, exact_grid.clone());
            let recs = cumulant_records(&cfg)?;
            for s in cumulant_slopes(&cfg, &recs)? {
                passed &= s.passed;
                parts.push(format!(
                    "H={h} {} {:.4} vs {:.4}{}",
                    s.quantity,
                    s.fit.slope,
                    s.predicted.exponent,
                    if s.passed { "" } else { " MISS" }
                ));
            }
        }
        let mut cfg = ExperimentConfig::new(3, 0.5, pow2(4, if level == Level::Fast { 7 } else { 8 }));
        cfg.reps = if level == Level::Fast { 100_000 } else { 200_000 };
        cfg.seed = 3;
        let recs = cumulant_records(&cfg)?;
        let pts: Vec<(usize, f64)> = recs.iter().map(|r| (r.n, r.kappa4)).collect();
        let fit = fit_loglog(&pts, 0)?;
        let target = predicted_exponent(3, 0.5, RateTarget::Kappa4)?.exponent;
        let ok = (fit.slope - target).abs() <= cfg.tolerances.monte_carlo;
        passed &= ok;
        parts.push(format!("m=3 MC kappa4 {:.4} +- {:.4} vs {target}{}", fit.slope, fit.stderr, if ok { "" } else { " MISS" }));
        Ok((passed, parts.join("; ")))
    })
}

fn sandwich_config(level: Level) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(
        2,
        0.5,
        match level {
            Level::Fast => pow2(7, 10),
            Level::Full => pow2(8, 11),
        },
    );
    cfg.derivative_orders = vec![0, 1, 2];
    cfg.density_cap = usize::MAX;
    cfg
}

fn sandwich_rows(level: Level) -> Result<Vec<crate::rates::DistanceRow>> {
    let cfg = sandwich_config(level);
    let grid = UniformGrid::standard();
    let mut rows = Vec::new();
    for &n in &cfg.n_grid {
        let rec = exact_record_m2(cfg.hurst, n, cfg.nu)?;
        rows.extend(density_distances(&cfg, &rec, grid)?.1);
    }
    Ok(rows)
}

/// Distance-to-`M` ratios stay in a band and the distance slope matches `M`.
pub fn check_density_sandwich(level: Level) -> CheckOutcome {
    timed("density sandwich", || {
        let cfg = sandwich_config(level);
        let rows = sandwich_rows(level)?;
        let target = predicted_exponent(2, 0.5, RateTarget::M)?.exponent;
        let mut worst_band = 0.0f64;
        let mut worst_slope = 0.0f64;
        for j in [0usize, 1, 2] {
            for norm in [CurveNorm::Sup, CurveNorm::L1, CurveNorm::L2] {
                let sel: Vec<_> = rows.iter().filter(|r| r.j == j && r.norm == norm).collect();
                let ratios: Vec<f64> = sel.iter().map(|r| r.distance / r.m_stat).collect();
                worst_band = worst_band.max(band_ratio(&ratios));
                let pts: Vec<(usize, f64)> = sel.iter().map(|r| (r.n, r.distance)).collect();
                worst_slope = worst_slope.max((fit_loglog(&pts, 0)?.slope - target).abs());
            }
        }
        Ok((
            worst_band < 10.0 && worst_slope <= cfg.tolerances.distance,
            format!("max band C/c {worst_band:.3}, max |slope + 0.5| {worst_slope:.4}"),
        ))
    })
}

/// Edgeworth-corrected sup distance decays like `kappa4`.
pub fn check_edgeworth(level: Level) -> CheckOutcome {
    timed("edgeworth improvement", || {
        let cfg = sandwich_config(level);
        let rows: Vec<_> = sandwich_rows(level)?
            .into_iter()
            .filter(|r| r.j == 0 && r.norm == CurveNorm::Sup)
            .collect();
        let corrected = fit_loglog(&rows.iter().map(|r| (r.n, r.edgeworth_distance)).collect::<Vec<_>>(), 0)?;
        let plain = fit_loglog(&rows.iter().map(|r| (r.n, r.distance)).collect::<Vec<_>>(), 0)?;
        let ratios: Vec<f64> = rows.iter().map(|r| r.edgeworth_distance / r.kappa4).collect();
        let band = band_ratio(&ratios);
        let target = predicted_exponent(2, 0.5, RateTarget::Kappa4)?.exponent;
        Ok((
            (corrected.slope - target).abs() <= cfg.tolerances.edgeworth && band < 10.0,
            format!(
                "corrected slope {:.4} (uncorrected {:.4}), remainder/kappa4 band {band:.3}",
                corrected.slope, plain.slope
            ),
        ))
    })
}

/// `(6 / kappa3)(rho_{F_n} - rho_N)` approaches `-rho_N'''`.
pub fn check_limit_shape(level: Level) -> CheckOutcome {
    timed("limit shape", || {
        let grid = match level {
            Level::Fast => pow2(8, 10),
            Level::Full => pow2(10, 12),
        };
        let mut gaps = Vec::new();
        for &n in &grid {
            gaps.push(limit_shape_check(&QuadFormSpec::new(0.5, n, 1.0)?)?.sup_gap);
        }
        let inversions = gaps.windows(2).filter(|w| w[1] >= w[0]).count();
        let last = *gaps.last().expect("non-empty grid");
        Ok((
            last < 0.08 && inversions <= 1 && gaps[0] > last,
            format!(
                "gaps {}",
                grid.iter().zip(&gaps).map(|(n, g)| format!("n={n}: {g:.4}")).collect::<Vec<_>>().join(", ")
            ),
        ))
    })
}

/// Ladder with the derivative sign flipped.
#[derive(Debug, Clone, Copy, Default)]
pub struct FlippedLadder;

impl LadderOps for FlippedLadder {
    fn derivative(&self, rep: &SpectralRep) -> Result<SpectralRep> {
        HermiteLadder.mult_x(rep)
    }

    fn mult_x(&self, rep: &SpectralRep) -> Result<SpectralRep> {
        HermiteLadder.mult_x(rep)
    }
}

/// Anti-test: the residual check must reject a corrupted ladder.
pub fn check_ladder_mutation(_level: Level) -> CheckOutcome {
    timed("ladder mutation detected", || {
        let mut min_residual = f64::MAX;
        for n in 0..=2 {
            min_residual = min_residual.min(stein_residual_with(&FlippedLadder, 0.0, n, 200)?.relative_norm);
        }
        Ok((min_residual >= 1e-4, format!("corrupted ladder residual {min_residual:.3e}")))
    })
}

/// Growth envelope of `sup |phi_n|`, Hermite derivative identity, fGn tail
/// and telescoping sums, variance normalization, density positivity and
/// mass, and the Gram-Charlier Gaussian case.
pub fn check_module_invariants(level: Level) -> CheckOutcome {
    timed("module invariants", || {
        let mut notes = Vec::new();
        let mut passed = true;
        let mut record = |ok: bool, msg: String| {
            passed &= ok;
            notes.push(if ok { msg } else { format!("{msg} FAILED") });
        };

        let n_max = if level == Level::Fast { 1000 } else { 2000 };
        let step = if level == Level::Fast { 4e-3 } else { 1e-3 };
        let mut sup = vec![0.0f64; n_max + 1];
        let mut row = vec![0.0; n_max + 1];
        let x_end = (2.0 * n_max as f64 + 1.0).sqrt() + 3.0;
        let mut x = 0.0;
        while x <= x_end {
            fill_phi(x, &mut row);
            for (s, v) in sup.iter_mut().zip(&row) {
                *s = s.max(v.abs());
            }
            x += step;
        }
        let c = sup[100] * 100f64.powf(1.0 / 12.0);
        let worst = (100..=n_max).map(|n| sup[n] * (n as f64).powf(1.0 / 12.0) / c).fold(0.0, f64::max);
        record(worst <= 1.0 + 1e-4, format!("growth envelope max ratio {worst:.6}"));

        let mut identity = true;
        for n in 0..=20usize {
            let next = hermite_monomials(n + 1);
            let cur = hermite_monomials(n);
            for (i, &c) in cur.iter().enumerate() {
                identity &= next[i + 1] * (i as i64 + 1) == (n as i64 + 1) * c;
            }
        }
        record(identity, "Hermite derivative identity exact for n <= 20".into());

        let mut tail_ok = true;
        for h in [0.6, 0.8] {
            let m = CovarianceModel::fgn(h)?;
            tail_ok &= (m.cov(10_000) / m.tail_asymptote(10_000.0) - 1.0).abs() < 0.01;
        }
        let m = CovarianceModel::fgn(0.3)?;
        let r = 2000i64;
        let sum: f64 = (-r..=r).map(|l| m.cov(l)).sum();
        let tele = ((r + 1) as f64).powf(0.6) - (r as f64).powf(0.6);
        tail_ok &= (sum - tele).abs() < 1e-10;
        record(tail_ok, "fgn tail asymptote and telescoping sum".into());

        let mut var_ok = true;
        for (mm, target) in [(2u32, 2.0), (3, 6.0)] {
            var_ok &= (sigma_n2(&ChaosSpec::new(mm, 1.0, 0.5, 77)?) - target).abs() < 1e-12;
        }
        record(var_ok, "variance normalization".into());

        let grid = UniformGrid::standard();
        for h in [0.5, 0.7] {
            let spec = QuadFormSpec::new(h, 256, 1.0)?;
            let d = exact_density_m2(&spec, grid, 0)?;
            let min = d.values.iter().cloned().fold(f64::MAX, f64::min);
            // the long-memory right tail carries mass beyond x = 8
            let mass = exact_density_m2(&spec, UniformGrid::new(-16.0, 48.0, 1 << 15)?, 0)?.mass();
            record(min >= -1e-10 && (mass - 1.0).abs() < 1e-6, format!("H={h} density min {min:.1e}, mass {mass:.9}"));
        }

        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let reps = 100_000;
        let samples: Vec<f64> = (0..reps).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        let gc = gram_charlier_density(&samples, 8, grid, 0)?;
        let gap = curve_distance(&gc.curve, &gaussian_curve(grid, 0), CurveNorm::Sup)?;
        let band = gc.band.iter().cloned().fold(0.0, f64::max);
        record(gap < 3.0 * band, format!("Gram-Charlier normal gap {gap:.2e} vs band {band:.2e}"));

        Ok((passed, notes.join("; ")))
    })
}

pub fn verify_suite(level: Level) -> VerifyReport {
    let start = Instant::now();
    let checks_fns: [fn(Level) -> CheckOutcome; 13] = [
        check_hermite_identities,
        check_stein_bounds,
        check_stein_residual,
        check_pairing_identity,
        check_norm_machinery,
        check_fgn_simulator,
        check_cumulant_cross_validation,
        check_exponent_table,
        check_density_sandwich,
        check_edgeworth,
        check_limit_shape,
        check_ladder_mutation,
        check_module_invariants,
    ];
    let mut checks: Vec<CheckOutcome> = checks_fns.iter().map(|f| f(level)).collect();
    let elapsed = start.elapsed().as_secs_f64();
    checks.push(CheckOutcome {
        name: "runtime budget".into(),
        passed: elapsed < level.budget_secs(),
        detail: format!("{elapsed:.1}s of {:.0}s", level.budget_secs()),
        elapsed_secs: 0.0,
    });
    let passed = checks.iter().all(|c| c.passed);
    VerifyReport { level, checks, elapsed_secs: elapsed, passed }
}
