//! Invariant batteries behind `zml check`. Each check returns a pass flag and
//! the measured numbers; nothing here panics on a numerical failure.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::g_function::{
    build_G, build_G_star, g_continued, lambda_exact, min_series_truncation, translation_residual, GContinuationParams, GRoute,
};
use crate::harness::{
    self, kappa_bound, log_derivative_histogram, mean_square_experiment, zero_proportion_check, RunConfig,
    WindowGrid,
};
use crate::params::ExperimentParams;
use crate::runge_mollifier::{
    conrey_c1r, conrey_c1r_definition, decay_sweep, interpolate_L, JordanRegion, RungeApprox,
};
use crate::selberg_dirichlet::{faa_di_bruno_ratio, partitions_of, selberg_poly, AEvaluator};
use crate::special_fn::{gamma_complex, gauss_laguerre, hyp2f1_11};
use crate::tanh_approx::{bernoulli_tanh_series, build_q, LaguerreExpansion};
use crate::zeta_core::{find_zeros, ln_xi, xi_derivs, zero_count_argument, zeta, zeta_deriv, zeta_with_derivative};

const SEED: u64 = 0x5eed_2024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    FunctionalEquation,
    Translation,
    Tanh,
    Selberg,
    Runge,
    Harness,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 7] =
        ["functional-equation", "translation", "tanh", "selberg", "runge", "harness", "all"];

    pub fn name(self) -> &'static str {
        match self {
            Suite::FunctionalEquation => "functional-equation",
            Suite::Translation => "translation",
            Suite::Tanh => "tanh",
            Suite::Selberg => "selberg",
            Suite::Runge => "runge",
            Suite::Harness => "harness",
            Suite::All => "all",
        }
    }

    fn members(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![
                Suite::FunctionalEquation,
                Suite::Translation,
                Suite::Tanh,
                Suite::Selberg,
                Suite::Runge,
                Suite::Harness,
            ],
            s => vec![s],
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Suite> {
        Ok(match s {
            "functional-equation" => Suite::FunctionalEquation,
            "translation" => Suite::Translation,
            "tanh" => Suite::Tanh,
            "selberg" => Suite::Selberg,
            "runge" => Suite::Runge,
            "harness" => Suite::Harness,
            "all" => Suite::All,
            other => {
                return Err(Error::Config(format!(
                    "unknown suite {other:?}; expected one of {}",
                    Suite::NAMES.join(", ")
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}/{}: {} ({:.1}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

/// Runs `body` and turns an error into a failed check.
pub fn check<F>(suite: &str, name: &str, body: F) -> Check
where
    F: FnOnce() -> Result<(bool, String)>,
{
    let start = Instant::now();
    let (passed, detail) = body().unwrap_or_else(|e| (false, format!("error: {e}")));
    Check { suite: suite.into(), name: name.into(), passed, detail, seconds: start.elapsed().as_secs_f64() }
}

fn rng(salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SEED ^ salt)
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn nonincreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

// ---- functional-equation ------------------------------------------------

/// max |ξ(s) − ξ(1−s)|/|ξ(s)| on random s, σ ∈ [−1, 2], |t| ∈ [10, 10³].
pub fn functional_equation_residual(points: usize) -> Result<f64> {
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let sign = if r.gen::<bool>() { 1.0 } else { -1.0 };
        let s = c(r.gen_range(-1.0..2.0), sign * r.gen_range(10.0..1000.0));
        let ratio = (ln_xi(1.0 - s)? - ln_xi(s)?).exp();
        worst = worst.max((1.0 - ratio).norm());
    }
    Ok(worst)
}

fn gamma_reflection() -> Result<(bool, String)> {
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    while n < 100 {
        let s = c(r.gen_range(-5.0..5.0), r.gen_range(-5.0..5.0));
        if (s.re - s.re.round()).abs() < 0.05 && s.im.abs() < 0.05 {
            continue;
        }
        let rhs = std::f64::consts::PI / (std::f64::consts::PI * s).sin();
        let lhs = gamma_complex(s)? * gamma_complex(1.0 - s)?;
        worst = worst.max((lhs - rhs).norm() / rhs.norm());
        n += 1;
    }
    Ok((worst < 1e-10, format!("max relative residual {worst:.2e} on 100 points (< 1e-10)")))
}

fn laguerre_rule_moment() -> Result<(bool, String)> {
    let v = gauss_laguerre(64).apply(|x| x * x * x);
    let err = (v - 6.0).abs();
    Ok((err < 1e-12, format!("order-64 rule gives {v:.15} for the third moment (error {err:.1e})")))
}

fn hypergeometric_log() -> Result<(bool, String)> {
    let mut r = rng(3);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let z = C64::from_polar(r.gen_range(0.0..0.8), r.gen_range(0.0..std::f64::consts::TAU));
        let v = hyp2f1_11(c(2.0, 0.0), z)? * z + (1.0 - z).ln();
        worst = worst.max(v.norm());
    }
    Ok((worst < 1e-12, format!("max |z 2F1(1,1;2;z) + ln(1-z)| = {worst:.2e} on 50 points")))
}

// k-th central difference along the real direction, Richardson-extrapolated
fn finite_difference(k: usize, s: C64, h: f64) -> Result<C64> {
    let diff = |h: f64| -> Result<C64> {
        let mut total = C64::new(0.0, 0.0);
        let mut binom = 1.0;
        for i in 0..=k {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            total += zeta(s + (k as f64 / 2.0 - i as f64) * h)? * (sign * binom);
            binom *= (k - i) as f64 / (i + 1) as f64;
        }
        Ok(total / h.powi(k as i32))
    };
    Ok((diff(0.5 * h)? * 4.0 - diff(h)?) / 3.0)
}

fn derivative_vs_differences() -> Result<(bool, String)> {
    let mut r = rng(4);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let s = c(r.gen_range(2.0..4.0), r.gen_range(-50.0..50.0));
        for k in 1..=5 {
            let d = zeta_deriv(k, s)?;
            let fd = finite_difference(k, s, 0.1)?;
            worst = worst.max((d - fd).norm() / d.norm());
        }
    }
    Ok((worst < 1e-4, format!("max relative gap {worst:.2e} for k <= 5 on 20 points (< 1e-4)")))
}

fn zero_count_consistency() -> Result<(bool, String)> {
    let zeros = find_zeros(10.0, 5000.0)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for t in [100.0, 500.0, 1000.0, 5000.0] {
        let found = zeros.ordinates.iter().filter(|&&g| g <= t).count() as f64;
        let arg = zero_count_argument(t)?;
        ok &= (found - arg.floor()).abs() <= 2.0;
        parts.push(format!("T={t}: {found} vs {arg:.3}"));
    }
    Ok((ok, parts.join(", ")))
}

fn functional_equation_suite() -> Vec<Check> {
    let s = Suite::FunctionalEquation.name();
    vec![
        check(s, "xi_reflection", || {
            let w = functional_equation_residual(200)?;
            Ok((w < 1e-9, format!("max relative residual {w:.2e} on 200 points (< 1e-9)")))
        }),
        check(s, "gamma_reflection", gamma_reflection),
        check(s, "laguerre_rule_third_moment", laguerre_rule_moment),
        check(s, "hypergeometric_log_identity", hypergeometric_log),
        check(s, "zeta_derivatives_vs_differences", derivative_vs_differences),
        check(s, "zero_count_sign_change_vs_argument", zero_count_consistency),
    ]
}

// ---- translation --------------------------------------------------------

/// Worst relative translation residual: (series route, continuation route).
pub fn translation_battery(series_points: usize, continued_points: usize) -> Result<(f64, f64)> {
    let mut r = rng(5);
    let t_big = 1e3;
    let alphas = [1.0, 3.0, 6.0];
    let mut series: f64 = 0.0;
    for i in 0..series_points {
        let s = c(r.gen_range(1.2..3.0), r.gen_range(-100.0..100.0));
        let alpha = alphas[i % 3];
        let n_trunc = min_series_truncation(alpha, t_big)?;
        let res = translation_residual(alpha, t_big, s, GRoute::Series { n_trunc })?;
        series = series.max(res.relative());
    }
    let mut continued: f64 = 0.0;
    for i in 0..continued_points {
        let s = c(r.gen_range(0.3..1.0), r.gen_range(-100.0..100.0));
        let res = translation_residual(alphas[i % 3], t_big, s, GRoute::Continued { panel_order: 8 })?;
        continued = continued.max(res.relative());
    }
    Ok((series, continued))
}

fn continuation_n_independent() -> Result<(bool, String)> {
    let mut r = rng(6);
    let (alpha, t_big) = (3.0, 1e3);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let s = c(r.gen_range(0.2..1.0), r.gen_range(-100.0..100.0));
        let base = GContinuationParams::new(alpha, t_big);
        let a = g_continued(s, &base)?.value;
        let b = g_continued(s, &base.with_n(base.n + t_big as u64))?.value;
        worst = worst.max((a - b).norm() / a.norm().max(1e-300));
    }
    Ok((worst < 1e-8, format!("max relative change {worst:.2e} for N -> N + T on 50 points")))
}

fn main_term_consistency() -> Result<(bool, String)> {
    let p = ExperimentParams::default();
    let (alpha, t_big) = (8.0, p.t_big);
    let mut sups = Vec::new();
    for k in [4, 8, 16, 32] {
        let g = build_G(alpha, t_big, k, k)?;
        let gs = build_G_star(alpha, t_big, p.r, k)?;
        let mut sup: f64 = 0.0;
        for t in [1.0e4, 1.05e4, 1.1e4, 1.15e4] {
            for sigma in [p.a(), 0.5, 1.0] {
                let s = c(sigma, t);
                sup = sup.max((g.eval(s) - gs.eval(s)).norm());
            }
        }
        sups.push(sup);
    }
    Ok((
        decreasing(&sups),
        format!("sup |G - G*| for K = M = K_cal in 4, 8, 16, 32: {}", sci(&sups)),
    ))
}

fn xi_odd_derivatives() -> Result<(bool, String)> {
    let d = xi_derivs(3, c(0.5, 30.0), 1.0)?;
    let worst = [1, 3].iter().map(|&k| d[k].re.abs() / d[k].norm()).fold(0.0, f64::max);
    Ok((worst < 1e-8, format!("max |Re|/|.| of xi', xi''' at 1/2 + 30i: {worst:.2e}")))
}

fn translation_suite() -> Vec<Check> {
    let s = Suite::Translation.name();
    vec![
        check(s, "translation_series_and_continuation", || {
            let (a, b) = translation_battery(100, 20)?;
            Ok((
                a < 1e-8 && b < 1e-6,
                format!("series max {a:.2e} (< 1e-8), continuation max {b:.2e} (< 1e-6)"),
            ))
        }),
        check(s, "continuation_independent_of_n", continuation_n_independent),
        check(s, "main_terms_converge_together", main_term_consistency),
        check(s, "xi_odd_derivatives_imaginary", xi_odd_derivatives),
    ]
}

// ---- tanh ---------------------------------------------------------------

/// sup over 200 points of |Bernoulli partial sum − (−tanh(α(½ − x)/2))|.
pub fn bernoulli_tanh_sup(alpha: f64, k_max: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let x = i as f64 / 199.0;
        let v = bernoulli_tanh_series(alpha, x, k_max)?;
        worst = worst.max((v + (alpha * (0.5 - x) / 2.0).tanh()).abs());
    }
    Ok(worst)
}

/// Laguerre sup errors at α = 12 for 𝒦 = α/4, α/2, α.
pub fn laguerre_sup_errors(r: f64) -> Result<Vec<(usize, f64)>> {
    [3, 6, 12]
        .iter()
        .map(|&k| Ok((k, LaguerreExpansion::new(12.0, r, k)?.sup_error())))
        .collect()
}

fn q_odd() -> Result<(bool, String)> {
    let mut ok = true;
    for alpha in [1.0, 3.0, 6.0, 8.0] {
        let q = build_q(alpha, 9, 6)?.poly;
        ok &= q.center == 0.5 && q.coeffs.iter().step_by(2).all(|&c| c == 0.0);
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            ok &= (q.eval(x) + q.eval(1.0 - x)).abs() < 1e-14;
        }
    }
    Ok((ok, "q odd about 1/2 (even coefficients zero), so Q(x) + Q(1-x) = 1".into()))
}

fn q_tilde_forms_agree() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for (alpha, k) in [(4.0, 4), (8.0, 8), (12.0, 12)] {
        let e = LaguerreExpansion::new(alpha, 1.3, k)?;
        let poly = e.q_tilde_poly();
        for i in 0..20 {
            let y = i as f64 / 19.0;
            worst = worst.max((poly.eval(y) - e.q_tilde_direct(y)).abs());
        }
    }
    Ok((worst < 1e-9, format!("max |monomial - Laguerre form| = {worst:.2e} on 20 points")))
}

fn bernoulli_monotone() -> Result<(bool, String)> {
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in [1.0, 3.0, 6.0] {
        let errs: Vec<f64> = [5, 11, 21, 41].iter().map(|&k| bernoulli_tanh_sup(alpha, k)).collect::<Result<_>>()?;
        ok &= nonincreasing(&errs);
        parts.push(format!("alpha={alpha}: {}", sci(&errs)));
    }
    Ok((ok, parts.join("; ")))
}

fn tanh_suite() -> Vec<Check> {
    let s = Suite::Tanh.name();
    vec![
        check(s, "bernoulli_series_k61", || {
            let w = bernoulli_tanh_sup(std::f64::consts::PI, 61)?;
            Ok((w < 1e-6, format!("sup error {w:.2e} at alpha = pi, K = 61 (< 1e-6)")))
        }),
        check(s, "bernoulli_series_monotone", bernoulli_monotone),
        check(s, "q_is_odd", q_odd),
        check(s, "q_tilde_monomial_matches_laguerre", q_tilde_forms_agree),
        check(s, "laguerre_error_monotone", || {
            let e = laguerre_sup_errors(ExperimentParams::default().r)?;
            let v: Vec<f64> = e.iter().map(|x| x.1).collect();
            Ok((decreasing(&v), format!("alpha = 12, K_cal 3/6/12: {}", sci(&v))))
        }),
        check(s, "laguerre_error_below_1e-3", || {
            let e = laguerre_sup_errors(ExperimentParams::default().r)?;
            let last = e[2].1;
            Ok((last < 1e-3, format!("alpha = 12, K_cal = 12: {last:.3e} (< 1e-3)")))
        }),
    ]
}

// ---- selberg ------------------------------------------------------------

// number of set partitions of {1..n}, by enumerating restricted growth strings
fn set_partitions_brute(n: usize) -> u64 {
    fn go(i: usize, n: usize, max: usize) -> u64 {
        if i == n {
            return 1;
        }
        (0..=max + 1).map(|v| go(i + 1, n, max.max(v))).sum()
    }
    if n == 0 {
        1
    } else {
        go(1, n, 0)
    }
}

fn bell_numbers() -> Result<(bool, String)> {
    let mut ok = true;
    let mut got = Vec::new();
    for k in 1..=8 {
        let total: u128 = partitions_of(k)?.iter().map(|p| p.coefficient).sum();
        ok &= total == set_partitions_brute(k) as u128;
        got.push(total);
    }
    Ok((ok, format!("partition coefficient sums for k = 1..8: {got:?}")))
}

/// |−ζ′/ζ(2) − Σ Λ_x(n) n^{−2}| for x = 20, 50, 200.
pub fn selberg_errors() -> Result<Vec<(f64, f64)>> {
    let s = c(2.0, 0.0);
    let (z, dz) = zeta_with_derivative(s)?;
    let target = -dz / z;
    [20.0, 50.0, 200.0]
        .iter()
        .map(|&x| Ok((x, (selberg_poly(x, s)? - target).norm())))
        .collect()
}

/// Worst relative gap of the partition form of ζ^{(k)}/ζ, k ≤ 5, on 10 points.
pub fn faa_di_bruno_gap() -> Result<f64> {
    let mut r = rng(7);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let s = c(r.gen_range(1.5..3.0), r.gen_range(-30.0..30.0));
        let z = zeta(s)?;
        for k in 1..=5 {
            let direct = zeta_deriv(k, s)? / z;
            let via = faa_di_bruno_ratio(k, s)?;
            worst = worst.max((via - direct).norm() / direct.norm());
        }
    }
    Ok(worst)
}

fn lambda_x_continuity() -> Result<(bool, String)> {
    // the branch formulas on either side of n = x and n = x²
    let x: f64 = 37.0;
    let lx2 = 2.0 * x.ln().powi(2);
    let mid = |n: f64| ((x.powi(3) / n).ln().powi(2) - 2.0 * (x * x / n).ln().powi(2)) / lx2;
    let outer = |n: f64| (x.powi(3) / n).ln().powi(2) / lx2;
    let a = (mid(x) - 1.0).abs();
    let b = (mid(x * x) - outer(x * x)).abs();
    Ok((a < 1e-12 && b < 1e-12, format!("jumps {a:.1e} at n = x, {b:.1e} at n = x^2")))
}

fn lambda_dominated_by_a() -> Result<(bool, String)> {
    let p = ExperimentParams::default();
    let e = AEvaluator::new(&p)?;
    let n = 500;
    let mut bad = 0;
    for i in 0..n {
        let t = p.t_big * (1.0 + (i as f64 + 0.5) / n as f64);
        let a = e.eval(t, &[])?;
        let lam = lambda_exact(p.alpha, p.t_big, p.r, c(e.sigma, t), p.k_cal)?;
        if lam.norm() > 10.0 * a.norm() {
            bad += 1;
        }
    }
    let frac = bad as f64 / n as f64;
    Ok((frac < 0.05, format!("|lambda| > 10|A| at {bad} of {n} points in [T, 2T]")))
}

fn selberg_suite() -> Vec<Check> {
    let s = Suite::Selberg.name();
    vec![
        check(s, "bell_numbers", bell_numbers),
        check(s, "selberg_polynomial_converges", || {
            let e = selberg_errors()?;
            let v: Vec<f64> = e.iter().map(|x| x.1).collect();
            Ok((
                decreasing(&v) && v[2] < 0.02,
                format!("errors at x = 20/50/200: {} (monotone, last < 0.02)", sci(&v)),
            ))
        }),
        check(s, "faa_di_bruno_ratio", || {
            let w = faa_di_bruno_gap()?;
            Ok((w < 1e-5, format!("max relative gap {w:.2e} for k <= 5 (< 1e-5)")))
        }),
        check(s, "lambda_x_continuity", lambda_x_continuity),
        check(s, "lambda_dominated_by_a", lambda_dominated_by_a),
    ]
}

// ---- runge --------------------------------------------------------------

/// Boundary sup errors of the interpolant at n = 10, 20, 40, 80 on the default region.
pub fn runge_decay() -> Result<Vec<(usize, f64)>> {
    let p = ExperimentParams::default();
    let region = JordanRegion::from_params(&p)?;
    decay_sweep(&region, &[10, 20, 40, 80], p.c0(), p.m_tilde())
}

/// |ℒ(0)c₀/𝓜̃ − 1| at the default degree.
pub fn runge_shift(p: &ExperimentParams) -> Result<(RungeApprox, f64)> {
    let region = JordanRegion::from_params(p)?;
    let l = interpolate_L(&region, p.runge_n, p.c0(), p.m_tilde())?;
    let gap = (l.eval(c(0.0, 0.0)) * p.c0() / p.m_tilde() - 1.0).norm();
    Ok((l, gap))
}

// crossing-number parity against the traced boundary
fn inside_by_crossings(region: &JordanRegion, z: C64) -> bool {
    let mut inside = false;
    for s in &region.boundary {
        let (a, b) = (s.a, s.b);
        if (a.im > z.im) != (b.im > z.im) {
            let x = a.re + (z.im - a.im) * (b.re - a.re) / (b.im - a.im);
            if x > z.re {
                inside = !inside;
            }
        }
    }
    inside
}

fn membership_agrees() -> Result<(bool, String)> {
    let mut r = rng(8);
    let mut mismatches = 0;
    let mut total = 0;
    for rotation in [0.0, 0.3] {
        let p = ExperimentParams { rotation, ..ExperimentParams::default() };
        let region = JordanRegion::from_params(&p)?;
        let v = 1.2 * p.v_half;
        for _ in 0..5000 {
            let z = c(r.gen_range(-v..v), r.gen_range(-v..v));
            if region.distance_to_boundary(z) < 1e-9 {
                continue;
            }
            total += 1;
            if region.contains(z) != inside_by_crossings(&region, z) {
                mismatches += 1;
            }
        }
    }
    Ok((mismatches == 0, format!("{mismatches} disagreements in {total} random points")))
}

fn uniform_error_recorded() -> Result<(bool, String)> {
    let p = ExperimentParams::default();
    let region = JordanRegion::from_params(&p)?;
    let (l, _) = runge_shift(&p)?;
    let recorded = l.uniform_error(&region);
    let dense = region
        .sample_boundary(8000)
        .iter()
        .map(|&z| (l.f(z + l.z0) - l.eval(z)).norm())
        .fold(0.0, f64::max);
    Ok((
        dense <= 1.05 * recorded,
        format!("recorded {recorded:.4e}, dense-grid max {dense:.4e}"),
    ))
}

fn c1r_decreasing() -> Result<(bool, String)> {
    let vals: Vec<f64> = (0..=95).map(|i| conrey_c1r(0.5 + 0.1 * i as f64, 0.5)).collect::<Result<_>>()?;
    let far = conrey_c1r(60.0, 0.5)?;
    Ok((
        decreasing(&vals) && (far - 1.0).abs() < 1e-9,
        format!("c(1, R) on [0.5, 10] from {:.4} to {:.6}; c(1, 60) - 1 = {:.1e}", vals[0], vals[95], far - 1.0),
    ))
}

/// (max |closed form − definition|, c(1, 8)) at θ = 0.4.
pub fn c1r_checks() -> Result<(f64, f64)> {
    let mut worst: f64 = 0.0;
    for (r, th) in [(4.0, 0.4), (1.0, 0.5), (8.0, 0.4), (2.5, 0.3)] {
        worst = worst.max((conrey_c1r(r, th)? - conrey_c1r_definition(r, th)?).abs());
    }
    Ok((worst, conrey_c1r(8.0, 0.4)?))
}

fn runge_suite() -> Vec<Check> {
    let s = Suite::Runge.name();
    vec![
        check(s, "decay_factor_10_to_40", || {
            let d = runge_decay()?;
            let f = d[0].1 / d[2].1;
            Ok((f >= 4.0, format!("errors {:.3?}; factor {f:.3} (>= 4)", d)))
        }),
        check(s, "decay_between_n_and_2n", || {
            let d = runge_decay()?;
            let v: Vec<f64> = d.iter().map(|x| x.1).collect();
            Ok((decreasing(&v), format!("errors at n = 10/20/40/80: {v:.3?}")))
        }),
        check(s, "shift_normalization", || {
            let (l, gap) = runge_shift(&ExperimentParams::default())?;
            Ok((gap < 1e-10, format!("|L(0) c0/M - 1| = {gap:.1e} with z0 = {:.4}", l.z0)))
        }),
        check(s, "membership_matches_boundary", membership_agrees),
        check(s, "uniform_error_is_boundary_max", uniform_error_recorded),
        check(s, "c1r_decreasing_to_one", c1r_decreasing),
        check(s, "c1r_closed_form", || {
            let (gap, c8) = c1r_checks()?;
            Ok((
                gap < 1e-12 && c8 > 0.9 && c8 < 1.1,
                format!("closed form vs definition {gap:.1e}; c(1, 8) = {c8:.6}"),
            ))
        }),
    ]
}

// ---- harness ------------------------------------------------------------

/// Same report JSON on repeated runs and on 1 and 4 worker threads.
pub fn determinism(config: &RunConfig) -> Result<(bool, String)> {
    let json = || harness::run(config)?.to_json_without_timing();
    let pool = |n: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))
    };
    let a = json()?;
    let b = json()?;
    let one = pool(1)?.install(json)?;
    let four = pool(4)?.install(json)?;
    Ok((a == b && a == one && a == four, format!("{} bytes, repeat/1/4 threads identical: {}", a.len(), a == b && a == one && a == four)))
}

fn kappa_monotone() -> Result<(bool, String)> {
    let r = 1.3;
    let mut ok = true;
    let grid = [1.05, 1.3, 2.0, 4.0];
    for &i in &grid {
        for &ie in &grid {
            for &le in &[-0.2, 0.0, 0.3] {
                let k = kappa_bound(r, i, ie, le, 0.2)?.unclamped;
                ok &= kappa_bound(r, i * 1.1, ie, le, 0.2)?.unclamped <= k;
                ok &= kappa_bound(r, i, ie * 1.1, le, 0.2)?.unclamped <= k;
                ok &= kappa_bound(r, i, ie, le + 0.1, 0.2)?.unclamped <= k;
            }
        }
    }
    Ok((ok, "nonincreasing in I, I_E (> 1) and L_E on a 4x4x3 grid".into()))
}

fn harness_suite() -> Vec<Check> {
    let s = Suite::Harness.name();
    let desk = RunConfig::levinson_desk();
    let desk_report = harness::run(&desk);
    let default_report = harness::run(&RunConfig::default());
    let principal = |r: &Result<harness::RunReport>| -> Result<harness::PrincipalReport> {
        match r {
            Ok(rep) => rep.principal.clone().ok_or_else(|| Error::Config("no principal section".into())),
            Err(e) => Err(Error::Config(e.to_string())),
        }
    };
    vec![
        check(s, "splitting_inequality", || {
            let a = principal(&desk_report)?.integrals.splitting;
            let b = principal(&default_report)?.integrals.splitting;
            Ok((
                a.holds && b.holds,
                format!(
                    "desk {:.4} <= {:.4}; default {:.4} <= {:.4}",
                    a.lhs, a.rhs, b.lhs, b.rhs
                ),
            ))
        }),
        check(s, "kappa_monotone", kappa_monotone),
        check(s, "desk_kappa_in_range", || {
            let p = principal(&desk_report)?;
            let k = p.kappa_bound;
            Ok((k.is_finite() && k > 0.0 && k < 1.0, format!("kappa bound {k:.6} with I = {:.6}", p.integrals.i)))
        }),
        check(s, "halving_step_changes_i_below_1pct", || {
            let p = principal(&desk_report)?;
            let coarse = p.integrals.i_coarse.ok_or_else(|| Error::Config("odd panel count".into()))?;
            let rel = (p.integrals.i - coarse).abs() / p.integrals.i;
            Ok((rel < 0.01, format!("relative change {rel:.2e}")))
        }),
        check(s, "determinism", || determinism(&desk)),
        check(s, "exceptional_measure_default", || {
            let p = principal(&default_report)?;
            let e = p.exceptional.ok_or_else(|| Error::Config("no exceptional section".into()))?;
            Ok((
                e.eps_e < 0.2,
                format!(
                    "eps_E = {:.4} (outside U {:.4}, in notch {:.4}); gate < 0.2",
                    e.eps_e, e.outside_square, e.in_notch
                ),
            ))
        }),
        check(s, "disk_law_distance", || {
            let t = 1e4;
            let grid = WindowGrid::new(t, t + 2000.0, 1.0)?;
            let h = log_derivative_histogram(&grid, 0.5 + 3.0 / t.ln(), None)?;
            Ok((h.sup_distance < 0.15, format!("sup CDF distance {:.4} (< 0.15)", h.sup_distance)))
        }),
        check(s, "mean_square_ratio", || {
            let m = mean_square_experiment(4.0, 0.4, 1e4, 5000.0)?;
            Ok((
                m.relative_gap < 0.5,
                format!("ratio {:.5} vs c(1, 4) = {:.5}, gap {:.2}%", m.ratio, m.c1r, 100.0 * m.relative_gap),
            ))
        }),
        check(s, "mean_square_without_mollifier", || {
            let (v, _) = harness::mean_square_integral(1.5, None, 1e4, 1.1e4, 0.1)?;
            let z3 = zeta(c(3.0, 0.0))?.re;
            let rel = (v - z3).abs() / z3;
            Ok((rel < 0.1, format!("mean |zeta(1.5 + it)|^2 = {v:.5} vs zeta(3) = {z3:.5}")))
        }),
        check(s, "zero_proportion", || {
            let a = zero_proportion_check(0.0, 100.0)?;
            let b = zero_proportion_check(1e4, 1e4 + 100.0)?;
            Ok((
                a.consistent && b.consistent && a.n == 29,
                format!("[0,100]: N = {}, N0 = {}; [1e4,1e4+100]: N = {}, N0 = {}", a.n, a.n0, b.n, b.n0),
            ))
        }),
    ]
}

/// Every check of `suite`, in a fixed order.
pub fn run_suite(suite: Suite) -> Vec<Check> {
    suite
        .members()
        .into_iter()
        .flat_map(|s| match s {
            Suite::FunctionalEquation => functional_equation_suite(),
            Suite::Translation => translation_suite(),
            Suite::Tanh => tanh_suite(),
            Suite::Selberg => selberg_suite(),
            Suite::Runge => runge_suite(),
            Suite::Harness => harness_suite(),
            Suite::All => unreachable!("expanded above"),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for name in Suite::NAMES {
            assert_eq!(name.parse::<Suite>().unwrap().name(), name);
        }
        assert!(matches!("bogus".parse::<Suite>(), Err(Error::Config(_))));
    }

    #[test]
    fn brute_force_bell() {
        let bell = [1, 1, 2, 5, 15, 52, 203, 877, 4140];
        for (n, &b) in bell.iter().enumerate() {
            assert_eq!(set_partitions_brute(n), b);
        }
    }

    #[test]
    fn errors_become_failures() {
        let c = check("x", "y", || Err(Error::Domain("nope".into())));
        assert!(!c.passed);
        assert!(c.detail.contains("nope"));
    }
}
