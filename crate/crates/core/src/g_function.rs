//! The translated function g_{α,T}(s) = −½ Σ_l tanh(α/2 (log l/log T − ½)) l^{−s}:
//! series and continued evaluation, the approximate equation, the translation
//! identity, and the main-term polynomials G and G*.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dirichlet::{DirichletPoly, StreamingPoly};
use crate::error::{Error, Result};
use crate::quad;
use crate::special_fn::{bernoulli, gauss_legendre, hyp2f1_11, QuadratureRule};
use crate::tanh_approx::{build_q, LaguerreExpansion, RealPoly};
use crate::zeta_core::{hurwitz_tail, zeta, zeta_derivs};

/// Above this length G and G* are evaluated by blocked streaming.
pub const MATERIALIZE_LIMIT: u64 = 100_000;

const TAIL_TERMS_MAX: usize = 400;
const PANEL_CHUNK: u64 = 4096;

/// A value together with an error estimate (truncation bound or the
/// discrepancy between two quadrature levels).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GValue {
    pub value: C64,
    pub error: f64,
}

fn tanh_arg(alpha: f64, log_t: f64, ln_u: f64) -> f64 {
    0.5 * alpha * (ln_u / log_t - 0.5)
}

fn check_t(t_big: f64) -> Result<f64> {
    if !(t_big > 1.0) || !t_big.is_finite() {
        return Err(Error::Parameter(format!("T = {t_big} must exceed 1")));
    }
    Ok(t_big.ln())
}

/// Smallest N with e^{−α(log N/log T − ½)} ≤ ½, the start of the geometric tail.
pub fn min_series_truncation(alpha: f64, t_big: f64) -> Result<u64> {
    let log_t = check_t(t_big)?;
    let a = alpha.abs();
    if a == 0.0 {
        return Ok(1);
    }
    let ln_n = log_t * (0.5 + std::f64::consts::LN_2 / a);
    Ok(ln_n.exp().ceil() as u64)
}

/// Partial sum to N plus the tail Σ_{l>N}, expanded as
/// tanh(u/2) = 1 + 2Σ_j (−1)^j e^{−ju} and summed with Hurwitz tails.
/// `error` bounds the discarded part of the j-series.
pub fn g_series(alpha: f64, t_big: f64, s: C64, n_trunc: u64) -> Result<GValue> {
    let log_t = check_t(t_big)?;
    if s.re <= 1.0 {
        return Err(Error::Domain(format!("series needs Re s > 1, got {s}")));
    }
    if alpha == 0.0 {
        return Ok(GValue { value: C64::new(0.0, 0.0), error: 0.0 });
    }
    if alpha < 0.0 {
        let v = g_series(-alpha, t_big, s, n_trunc)?;
        return Ok(GValue { value: -v.value, error: v.error });
    }
    let n_min = min_series_truncation(alpha, t_big)?;
    if n_trunc < n_min {
        return Err(Error::InsufficientTruncation(format!(
            "N = {n_trunc} < {n_min} needed for a geometric tail at alpha = {alpha}, T = {t_big}"
        )));
    }
    let mut head = C64::new(0.0, 0.0);
    for l in 1..=n_trunc {
        let ln_l = (l as f64).ln();
        head += (-s * ln_l).exp() * tanh_arg(alpha, log_t, ln_l).tanh();
    }
    let nf = n_trunc as f64;
    let decay = (-alpha * (nf.ln() / log_t - 0.5)).exp();
    // Σ_{l>N} l^{−σ} ≤ N^{1−σ}/(σ−1)
    let abs_tail = nf.powf(1.0 - s.re) / (s.re - 1.0);
    let mut tail = hurwitz_tail(s, n_trunc + 1)?;
    let mut ratio = 1.0;
    let mut bound = f64::INFINITY;
    for j in 1..=TAIL_TERMS_MAX {
        ratio *= decay;
        let jf = j as f64;
        let w = s + jf * alpha / log_t;
        let sign = if j % 2 == 0 { 2.0 } else { -2.0 };
        tail += hurwitz_tail(w, n_trunc + 1)? * (sign * (0.5 * jf * alpha).exp());
        bound = 2.0 * abs_tail * ratio * decay / (1.0 - decay);
        if bound < 1e-17 * (head + tail).norm().max(1e-300) {
            break;
        }
    }
    Ok(GValue { value: -0.5 * (head + tail), error: 0.5 * bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GContinuationParams {
    pub alpha: f64,
    pub t_big: f64,
    /// Partial-sum length, an integer ≥ T.
    pub n: u64,
    /// Gauss–Legendre points per unit panel for the ψ-integrals; the check
    /// level uses 3/2 as many.
    pub panel_order: usize,
}

impl GContinuationParams {
    pub fn new(alpha: f64, t_big: f64) -> GContinuationParams {
        GContinuationParams { alpha, t_big, n: t_big.ceil() as u64, panel_order: 8 }
    }

    pub fn with_n(self, n: u64) -> GContinuationParams {
        GContinuationParams { n, ..self }
    }

    fn validate(&self) -> Result<f64> {
        let log_t = check_t(self.t_big)?;
        if (self.n as f64) < self.t_big {
            return Err(Error::Parameter(format!("N = {} < T = {}", self.n, self.t_big)));
        }
        if self.panel_order < 2 {
            return Err(Error::Parameter("panel order must be >= 2".into()));
        }
        Ok(log_t)
    }
}

/// −2T^{1−s} log T F(1,1;c;(e^{α/2}+1)^{−1}) / (α(e^{α/2}+1)(c−1)), c = 2 − (1−s)log T/α:
/// the integral ∫_T^∞ (tanh(·) − 1) u^{−s} du.
fn hypergeometric_term(alpha: f64, log_t: f64, s: C64) -> Result<C64> {
    let e1 = (0.5 * alpha).exp() + 1.0;
    let c = 2.0 - (1.0 - s) * log_t / alpha;
    let f = hyp2f1_11(c, C64::new(1.0 / e1, 0.0))?;
    let t_pow = ((1.0 - s) * log_t).exp();
    Ok(-2.0 * t_pow * log_t * f / (alpha * e1 * (c - 1.0)))
}

fn pole_term(log_t: f64, s: C64) -> C64 {
    ((1.0 - s) * log_t).exp() / (s - 1.0)
}

// f(u) = tanh(a(u)) u^{−s} at complex u.
fn summand(alpha: f64, log_t: f64, s: C64, u: C64) -> C64 {
    let ln_u = u.ln();
    (0.5 * alpha * (ln_u / log_t - 0.5)).tanh() * (-s * ln_u).exp()
}

// f′(u) = (α/(2 log T) sech²(a) − s tanh(a)) u^{−s−1} at real u.
fn summand_derivative(alpha: f64, log_t: f64, s: C64, u: f64) -> C64 {
    let ln_u = u.ln();
    let th = tanh_arg(alpha, log_t, ln_u).tanh();
    let sech2 = 1.0 - th * th;
    (0.5 * alpha / log_t * sech2 - s * th) * (-(s + 1.0) * ln_u).exp()
}

fn rule_pair(order: usize) -> (QuadratureRule, QuadratureRule) {
    (gauss_legendre(order), gauss_legendre(order + order / 2))
}

/// ∫_T^{N+½} tanh(a(u)) u^{−s} du in v = log u, at two quadrature levels.
fn correction_integral(alpha: f64, log_t: f64, s: C64, upper: f64, order: usize) -> (C64, C64) {
    let v0 = log_t;
    let v1 = upper.ln();
    let width = v1 - v0;
    if width <= 0.0 {
        return (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    }
    let panels = ((s.im.abs() * width).ceil() as usize + (4.0 * width).ceil() as usize).max(4);
    let h = width / panels as f64;
    let (lo, hi) = rule_pair(2 * order);
    let f = |v: f64| tanh_arg(alpha, log_t, v).tanh() * ((1.0 - s) * v).exp();
    let sum = |rule: &QuadratureRule| -> C64 {
        (0..panels)
            .into_par_iter()
            .map(|i| {
                let a = v0 + i as f64 * h;
                rule.apply_on(a, a + h, |v| C64::new(1.0, 0.0) * f(v))
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum()
    };
    (sum(&lo), sum(&hi))
}

/// ∫_{N+½}^∞ ψ(u) f′(u) du: unit panels up to an integer U, then
/// −Σ_m B_{2m}/(2m) · f^{(2m−1)}(U)/(2m−1)! from periodic-Bernoulli integration by parts.
fn sawtooth_integral(alpha: f64, log_t: f64, s: C64, n: u64, order: usize) -> Result<(C64, C64)> {
    let reach = (40.0 * s.norm()).ceil().max(2000.0) as u64;
    let u_end = n + 1 + reach;
    let (lo, hi) = rule_pair(order);
    let fp = |u: f64| summand_derivative(alpha, log_t, s, u);
    let psi_panel = |rule: &QuadratureRule, a: f64, b: f64, k: f64| -> C64 {
        rule.apply_on(a, b, |u| fp(u) * (u - k - 0.5))
    };
    let nf = n as f64;
    let first = |rule: &QuadratureRule| psi_panel(rule, nf + 0.5, nf + 1.0, nf);
    let chunk_sum = |rule: &QuadratureRule| -> C64 {
        let starts: Vec<u64> = (n + 1..u_end).step_by(PANEL_CHUNK as usize).collect();
        starts
            .par_iter()
            .map(|&c0| {
                let c1 = (c0 + PANEL_CHUNK).min(u_end);
                (c0..c1)
                    .map(|k| {
                        let kf = k as f64;
                        psi_panel(rule, kf, kf + 1.0, kf)
                    })
                    .sum::<C64>()
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum()
    };
    let uf = u_end as f64;
    let r = uf * (1.0 / (s.im.abs() + 1.0)).min(0.25);
    const M: usize = 8;
    let taylor = quad::cauchy_taylor(|z| summand(alpha, log_t, s, z), C64::new(uf, 0.0), r, 2 * M, 64);
    let mut tail = C64::new(0.0, 0.0);
    for m in 1..=M {
        tail -= taylor[2 * m - 1] * (bernoulli(2 * m)? / (2 * m) as f64);
    }
    let a = first(&lo) + chunk_sum(&lo) + tail;
    let b = first(&hi) + chunk_sum(&hi) + tail;
    Ok((a, b))
}

/// g_{α,T}(s) for σ > 0 by the continuation formula
/// g = −½[Σ_{n≤N} f(n) + hyp + T^{1−s}/(s−1) − ∫_T^{N+½} f + ∫_{N+½}^∞ ψ f′]
/// with f(u) = tanh(α/2(log u/log T − ½)) u^{−s}. `error` is the discrepancy
/// between the two quadrature levels.
pub fn g_continued(s: C64, params: &GContinuationParams) -> Result<GValue> {
    let log_t = params.validate()?;
    let alpha = params.alpha;
    if s.re <= 0.0 {
        return Err(Error::Domain(format!("continuation needs Re s > 0, got {s}")));
    }
    if s.im.abs() > 2.0 * params.t_big {
        return Err(Error::Domain(format!("|Im s| > 2T at {s}")));
    }
    if (s - 1.0).norm() < 1e-12 {
        return Err(Error::Pole("g at s = 1".into()));
    }
    if alpha == 0.0 {
        return Ok(GValue { value: C64::new(0.0, 0.0), error: 0.0 });
    }
    if alpha < 0.0 {
        let v = g_continued(s, &GContinuationParams { alpha: -alpha, ..*params })?;
        return Ok(GValue { value: -v.value, error: v.error });
    }
    let n = params.n;
    let head: C64 = (1..=n)
        .map(|l| {
            let ln_l = (l as f64).ln();
            (-s * ln_l).exp() * tanh_arg(alpha, log_t, ln_l).tanh()
        })
        .sum();
    let hyp = hypergeometric_term(alpha, log_t, s)?;
    let pole = pole_term(log_t, s);
    let (c_lo, c_hi) = correction_integral(alpha, log_t, s, n as f64 + 0.5, params.panel_order);
    let (p_lo, p_hi) = sawtooth_integral(alpha, log_t, s, n, params.panel_order)?;
    let diff = (c_hi - c_lo - (p_hi - p_lo)).norm() * 0.5;
    if diff > 1e-7 {
        return Err(Error::Quadrature(format!(
            "continuation at {s}: refinement levels differ by {diff:.3e}"
        )));
    }
    let value = -0.5 * (head + hyp + pole - c_hi + p_hi);
    Ok(GValue { value, error: diff })
}

/// −½[Σ_{n≤T} tanh(·) n^{−s} + hyp + T^{1−s}/(s−1)], dropping an O(T^{−σ}) remainder.
pub fn g_approx_eq(alpha: f64, t_big: f64, s: C64) -> Result<C64> {
    let log_t = check_t(t_big)?;
    if alpha == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    if alpha < 0.0 {
        return Ok(-g_approx_eq(-alpha, t_big, s)?);
    }
    let n = t_big.floor() as u64;
    let head: C64 = (1..=n)
        .map(|l| {
            let ln_l = (l as f64).ln();
            (-s * ln_l).exp() * tanh_arg(alpha, log_t, ln_l).tanh()
        })
        .sum();
    Ok(-0.5 * (head + hypergeometric_term(alpha, log_t, s)? + pole_term(log_t, s)))
}

/// How g is evaluated inside the translation identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GRoute {
    Series { n_trunc: u64 },
    Continued { panel_order: usize },
}

impl GRoute {
    pub fn eval(&self, alpha: f64, t_big: f64, s: C64) -> Result<GValue> {
        match *self {
            GRoute::Series { n_trunc } => g_series(alpha, t_big, s, n_trunc),
            GRoute::Continued { panel_order } => {
                let p = GContinuationParams { panel_order, ..GContinuationParams::new(alpha, t_big) };
                g_continued(s, &p)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TranslationResidual {
    pub lhs: C64,
    pub rhs: C64,
    pub residual: C64,
}

impl TranslationResidual {
    /// |LHS − RHS| / (|LHS| + 1)
    pub fn relative(&self) -> f64 {
        self.residual.norm() / (self.lhs.norm() + 1.0)
    }
}

/// 2e^{α/2}(ζ(s+Δσ)/2 − g(s+Δσ)) − 2(ζ(s)/2 + g(s)), Δσ = α/log T.
pub fn translation_residual(alpha: f64, t_big: f64, s: C64, route: GRoute) -> Result<TranslationResidual> {
    let log_t = check_t(t_big)?;
    let w = s + alpha / log_t;
    let g_w = route.eval(alpha, t_big, w)?.value;
    let g_s = route.eval(alpha, t_big, s)?.value;
    let lhs = 2.0 * (0.5 * alpha).exp() * (zeta(w)? * 0.5 - g_w);
    let rhs = 2.0 * (zeta(s)? * 0.5 + g_s);
    Ok(TranslationResidual { lhs, rhs, residual: lhs - rhs })
}

/// δ(s) = log(2πT/s) / (2 log T)
pub fn delta_shift(t_big: f64, s: C64) -> C64 {
    let log_t = t_big.ln();
    (C64::new(2.0 * std::f64::consts::PI * t_big, 0.0) / s).ln() / (2.0 * log_t)
}

fn laguerre_sum_complex(b: &[f64], x: C64) -> C64 {
    let mut prev = C64::new(1.0, 0.0);
    let mut total = prev * b[0];
    if b.len() == 1 {
        return total;
    }
    let mut cur = 1.0 - x;
    total += cur * b[1];
    for (k, bk) in b.iter().enumerate().skip(2) {
        let kf = (k - 1) as f64;
        let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
        total += cur * *bk;
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MainTermKind {
    /// Σ_{l≤T} Q(log l/log T) l^{−s}
    G,
    /// e^{α/2} Σ_{l≤T} (½ − q̃(log l/log T)) l^{−(s+Δσ)}
    GStar,
}

type CoeffOfY = Arc<dyn Fn(C64) -> C64 + Send + Sync>;

/// G(s) or G*(s+Δσ) as a Dirichlet polynomial in s. Tables are kept for
/// T ≤ MATERIALIZE_LIMIT; longer sums are streamed.
#[derive(Clone)]
pub struct MainTerm {
    pub kind: MainTermKind,
    pub alpha: f64,
    pub t_big: f64,
    /// 0 for G, Δσ for G*.
    pub sigma_shift: f64,
    pub len: u64,
    table: Option<DirichletPoly>,
    coeff_of_y: CoeffOfY,
}

impl std::fmt::Debug for MainTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MainTerm")
            .field("kind", &self.kind)
            .field("alpha", &self.alpha)
            .field("t_big", &self.t_big)
            .field("len", &self.len)
            .field("materialized", &self.table.is_some())
            .finish()
    }
}

impl MainTerm {
    fn new(kind: MainTermKind, alpha: f64, t_big: f64, sigma_shift: f64, coeff_of_y: CoeffOfY) -> MainTerm {
        let log_t = t_big.ln();
        let len = t_big.floor() as u64;
        let table = (len <= MATERIALIZE_LIMIT).then(|| {
            DirichletPoly::from_fn(len, sigma_shift, |l| coeff_of_y(C64::new((l as f64).ln() / log_t, 0.0)))
        });
        MainTerm { kind, alpha, t_big, sigma_shift, len, table, coeff_of_y }
    }

    pub fn table(&self) -> Option<&DirichletPoly> {
        self.table.as_ref()
    }

    pub fn coeff(&self, l: u64) -> C64 {
        (self.coeff_of_y)(C64::new((l as f64).ln() / self.t_big.ln(), 0.0))
    }

    pub fn eval(&self, s: C64) -> C64 {
        match &self.table {
            Some(p) => p.eval(s),
            None => self.streaming(C64::new(0.0, 0.0)).eval(s),
        }
    }

    /// Evaluation with the coefficient argument moved to log l/log T + δ,
    /// δ = δ(s) for G and δ(s+Δσ) for G*.
    pub fn eval_with_delta(&self, s: C64) -> C64 {
        let d = delta_shift(self.t_big, s + self.sigma_shift);
        self.streaming(d).eval(s)
    }

    fn streaming(&self, d: C64) -> StreamingPoly {
        let log_t = self.t_big.ln();
        let f = self.coeff_of_y.clone();
        StreamingPoly::new(
            self.len,
            self.sigma_shift,
            Arc::new(move |l| f(C64::new((l as f64).ln() / log_t, 0.0) + d)),
        )
    }
}

/// G with Q = ½ + q and q from the Fourier construction with (K, M).
#[allow(non_snake_case)]
pub fn build_G(alpha: f64, t_big: f64, k_terms: usize, m_terms: usize) -> Result<MainTerm> {
    check_t(t_big)?;
    let q: RealPoly = if alpha == 0.0 {
        RealPoly::zero()
    } else {
        build_q(alpha, k_terms, m_terms)?.poly
    };
    let big_q = q.plus_constant(0.5);
    let coeff: CoeffOfY = Arc::new(move |y| big_q.eval_complex(y));
    Ok(MainTerm::new(MainTermKind::G, alpha, t_big, 0.0, coeff))
}

/// G*(s+Δσ) with ½ − q̃(y) = ½ s_{𝒦−1}((α−R)y), evaluated from the Laguerre sum.
#[allow(non_snake_case)]
pub fn build_G_star(alpha: f64, t_big: f64, r: f64, k_cal: usize) -> Result<MainTerm> {
    let log_t = check_t(t_big)?;
    let exp = LaguerreExpansion::cached(alpha, r, k_cal)?;
    let b: Vec<f64> = exp.b_tilde[..k_cal].to_vec();
    let scale = 0.5 * (0.5 * alpha).exp();
    let slope = alpha - r;
    let coeff: CoeffOfY = Arc::new(move |y| laguerre_sum_complex(&b, y * slope) * scale);
    Ok(MainTerm::new(MainTermKind::GStar, alpha, t_big, alpha / log_t, coeff))
}

/// λ(w) = Σ_{k=1}^{𝒦} c_k(α) (log T)^{−k} ζ^{(k)}(w)/ζ(w).
pub fn lambda_exact(alpha: f64, t_big: f64, r: f64, w: C64, k_cal: usize) -> Result<C64> {
    let log_t = check_t(t_big)?;
    if k_cal == 0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let d = zeta_derivs(k_cal, w)?;
    if d[0].norm() <= 1e-8 {
        return Err(Error::NearZero(format!("|zeta({w})| = {:.3e}", d[0].norm())));
    }
    let exp = LaguerreExpansion::cached(alpha, r, k_cal)?;
    let mut total = C64::new(0.0, 0.0);
    let mut scale = 1.0;
    for (k, dk) in d.iter().enumerate().skip(1) {
        scale /= log_t;
        total += dk * (exp.c_k(k) * scale);
    }
    Ok(total / d[0])
}
