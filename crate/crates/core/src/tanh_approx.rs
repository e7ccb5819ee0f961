//! Polynomial approximations of tanh: the Bernoulli series, the Fourier-sine
//! polynomial q, the Laguerre polynomial q̃ and the coefficients c_k(α).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num::rational::BigRational;
use num::{BigInt, ToPrimitive};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, AdaptiveOpts};
use crate::special_fn::{bernoulli_exact, gauss_laguerre, incomplete_beta, laguerre_all, QuadratureRule};

/// Real polynomial Σ cᵢ (x − center)^i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealPoly {
    pub coeffs: Vec<f64>,
    #[serde(default)]
    pub center: f64,
}

impl RealPoly {
    pub fn new(mut coeffs: Vec<f64>, center: f64) -> RealPoly {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        RealPoly { coeffs, center }
    }

    pub fn zero() -> RealPoly {
        RealPoly { coeffs: vec![], center: 0.0 }
    }

    /// Degree, with the zero polynomial reported as 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let u = x - self.center;
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c)
    }

    pub fn eval_complex(&self, z: C64) -> C64 {
        let u = z - self.center;
        self.coeffs
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, c| acc * u + c)
    }

    /// Adds a constant.
    pub fn plus_constant(&self, c: f64) -> RealPoly {
        let mut coeffs = self.coeffs.clone();
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        coeffs[0] += c;
        RealPoly::new(coeffs, self.center)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpansionKind {
    Fourier,
    Laguerre,
    Bernoulli,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeParams {
    FourierTaylor { k: usize, m: usize },
    Laguerre { k_cal: usize },
    Bernoulli { k_max: usize },
}

/// Coefficient table of one tanh expansion, as dumped to JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TanhExpansion {
    pub alpha: f64,
    pub kind: ExpansionKind,
    pub coeffs: Vec<f64>,
    pub degree_params: DegreeParams,
    pub measured_sup_error: Option<f64>,
}

impl TanhExpansion {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// A built polynomial together with its measured approximation error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuiltPoly {
    pub poly: RealPoly,
    pub sup_error: f64,
    pub expansion: TanhExpansion,
}

/// g_k(Δσ) = −(Δσ/2)^k (2^{k+1} − 4^{k+1}) B_{k+1}/(k+1)! for odd k.
pub fn g_k_coeff(k: usize, delta_sigma: f64) -> Result<f64> {
    if k.is_multiple_of(2) {
        return Err(Error::Domain(format!("g_k needs odd k, got {k}")));
    }
    if k > 199 {
        return Err(Error::Domain(format!("g_k index {k} > 199")));
    }
    let mut fact = BigInt::from(1);
    for j in 2..=(k + 1) {
        fact *= j;
    }
    let ratio = bernoulli_exact(k + 1)? / BigRational::from_integer(fact);
    let ratio = ratio.to_f64().unwrap_or(0.0);
    let p2 = 2f64.powi(k as i32 + 1);
    Ok(-(0.5 * delta_sigma).powi(k as i32) * (p2 - p2 * p2) * ratio)
}

/// Σ_{k odd ≤ K} (−g_k(α))(1/2 − x)^k, the Bernoulli series of −tanh(α(1/2 − x)/2).
pub fn bernoulli_tanh_series(alpha: f64, x: f64, k_max: usize) -> Result<f64> {
    if alpha.abs() >= 2.0 * PI {
        return Err(Error::Domain(format!("|alpha| = {} outside the disk of convergence", alpha.abs())));
    }
    let u = 0.5 - x;
    let mut sum = 0.0;
    for k in (1..=k_max).step_by(2) {
        sum -= g_k_coeff(k, alpha)? * u.powi(k as i32);
    }
    Ok(sum)
}

/// Fourier-sine coefficient of tanh(αx/2) on (0, π), via incomplete beta
/// functions.
pub fn fourier_b_k(alpha: f64, k: usize) -> Result<f64> {
    Ok(fourier_b_k_parts(alpha, k)?.re)
}

/// The complex value whose imaginary part is the rounding residue of the
/// real b_k.
pub fn fourier_b_k_parts(alpha: f64, k: usize) -> Result<C64> {
    if k == 0 {
        return Err(Error::Domain("b_k needs k >= 1".into()));
    }
    let kf = k as f64;
    let jump = 2.0 / PI * (1.0 - (-1f64).powi(k as i32)) / kf;
    if alpha == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    if alpha < 0.0 {
        return Ok(-fourier_b_k_parts(-alpha, k)?);
    }
    let xpi = 1.0 / ((alpha * PI).exp() + 1.0);
    // ∫₀^π e^{±ikx}/(e^{αx}+1) dx = (1/α)(B_{1/2} − B_{x_π})(1 ∓ ik/α, ±ik/α)
    let piece = |sign: f64| -> Result<C64> {
        let a = C64::new(1.0, -sign * kf / alpha);
        let b = C64::new(0.0, sign * kf / alpha);
        let tail = if xpi > 0.0 { incomplete_beta(xpi, a, b)? } else { C64::new(0.0, 0.0) };
        Ok((incomplete_beta(0.5, a, b)? - tail) / alpha)
    };
    let plus = piece(1.0)?;
    let minus = piece(-1.0)?;
    let sine_integral = (plus - minus) / C64::new(0.0, 2.0);
    Ok(C64::new(jump, 0.0) - sine_integral * (4.0 / PI))
}

/// (2/π)∫₀^π tanh(αx/2) sin(kx) dx by adaptive quadrature.
pub fn fourier_b_k_direct(alpha: f64, k: usize) -> Result<f64> {
    let kf = k as f64;
    let opts = AdaptiveOpts {
        initial_panels: k.max(4),
        ..AdaptiveOpts::default()
    };
    let (v, _) = quad::integrate(
        |x| C64::new((0.5 * alpha * x).tanh() * (kf * x).sin(), 0.0),
        0.0,
        PI,
        opts,
    )?;
    Ok(2.0 / PI * v.re)
}

const SUP_GRID: usize = 10_000;

/// q(x) = −½ Σ_k b_k Σ_m (−1)^{m−1} k^{2m−1}/(2m−1)! (x − ½)^{2m−1}.
pub fn build_q(alpha: f64, k_terms: usize, m_terms: usize) -> Result<BuiltPoly> {
    if k_terms == 0 || m_terms == 0 {
        return Err(Error::Parameter("build_q needs K, M >= 1".into()));
    }
    let b: Vec<f64> = (1..=k_terms).map(|k| fourier_b_k(alpha, k)).collect::<Result<_>>()?;
    let mut coeffs = vec![0.0; 2 * m_terms];
    for (i, bk) in b.iter().enumerate() {
        let kf = (i + 1) as f64;
        // k^{2m−1}/(2m−1)! built incrementally
        let mut t = kf;
        for m in 1..=m_terms {
            let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
            coeffs[2 * m - 1] += -0.5 * bk * sign * t;
            let j = (2 * m) as f64;
            t *= kf * kf / (j * (j + 1.0));
        }
    }
    let poly = RealPoly::new(coeffs, 0.5);
    let sup_error = (0..=SUP_GRID)
        .map(|i| {
            let x = i as f64 / SUP_GRID as f64;
            ((0.5 * alpha * (x - 0.5)).tanh() + 2.0 * poly.eval(x)).abs()
        })
        .fold(0.0, f64::max);
    Ok(BuiltPoly {
        poly,
        sup_error,
        expansion: TanhExpansion {
            alpha,
            kind: ExpansionKind::Fourier,
            coeffs: b,
            degree_params: DegreeParams::FourierTaylor { k: k_terms, m: m_terms },
            measured_sup_error: Some(sup_error),
        },
    })
}

fn laguerre_rule(n: usize) -> Arc<QuadratureRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<QuadratureRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().expect("rule cache").get(&n) {
        return r.clone();
    }
    let rule = Arc::new(gauss_laguerre(n));
    cache.lock().expect("rule cache").entry(n).or_insert(rule).clone()
}

/// The Laguerre target 1 + tanh(αx/(2(α−R)) − α/4).
pub fn laguerre_target(alpha: f64, r: f64, x: f64) -> f64 {
    if alpha == 0.0 {
        return 1.0;
    }
    1.0 + (alpha * x / (2.0 * (alpha - r)) - alpha / 4.0).tanh()
}

fn check_alpha_r(alpha: f64, r: f64) -> Result<()> {
    if alpha == 0.0 {
        return Ok(());
    }
    if !(r > 0.0 && r < alpha) {
        return Err(Error::Parameter(format!("need 0 < R < alpha, got R = {r}, alpha = {alpha}")));
    }
    Ok(())
}

fn b_tilde_with_order(alpha: f64, r: f64, k: usize, order: usize) -> f64 {
    let rule = laguerre_rule(order);
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| {
            if w == 0.0 {
                0.0
            } else {
                w * laguerre_target(alpha, r, x) * crate::special_fn::laguerre(k, x)
            }
        })
        .sum()
}

/// b̃_k(α) = ∫₀^∞ (1 + tanh(αx/(2(α−R)) − α/4)) L_k(x) e^{−x} dx.
pub fn laguerre_b_tilde(alpha: f64, r: f64, k: usize) -> Result<f64> {
    check_alpha_r(alpha, r)?;
    if alpha == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    let n1 = 4 * k + 64;
    let v1 = b_tilde_with_order(alpha, r, k, n1);
    let v2 = b_tilde_with_order(alpha, r, k, n1 + 32);
    if (v1 - v2).abs() > 1e-7 {
        return Err(Error::Quadrature(format!(
            "b_tilde_{k}: orders {n1} and {} differ by {:.3e}",
            n1 + 32,
            (v1 - v2).abs()
        )));
    }
    Ok(v2)
}

// φ(b) = e^{−α/2}₂F₁(1, 1−b; 2−b; −e^{−α/2})/(b−1) + e^{−αb/2}π/sin(πb)
fn laguerre_phi(alpha: f64, b: C64) -> C64 {
    let z = -(-alpha / 2.0).exp();
    // ₂F₁(1, 1−b; 2−b; z) = (1−b)Σ zⁿ/(n+1−b)
    let mut sum = C64::new(0.0, 0.0);
    let mut zn = 1.0;
    for n in 0..400 {
        let t = zn / (n as f64 + 1.0 - b);
        sum += t;
        if t.norm() < 1e-18 {
            break;
        }
        zn *= z;
    }
    let f21 = (1.0 - b) * sum;
    f21 * (-alpha / 2.0).exp() / (b - 1.0) + reflection(alpha, b)
}

// e^{−αb/2} π/sin(πb), written with decaying exponentials so large |b| neither overflows nor divides inf by inf
fn reflection(alpha: f64, b: C64) -> C64 {
    let i = C64::new(0.0, 1.0);
    let w = if b.im >= 0.0 { i * PI * b } else { -i * PI * b };
    let num = (-alpha * b / 2.0 + w).exp();
    let den = if b.im >= 0.0 { (2.0 * w).exp() - 1.0 } else { 1.0 - (2.0 * w).exp() };
    2.0 * PI * i * num / den
}

/// b̃_k from the hypergeometric representation:
/// 2 Σ_ν C(k,ν)/ν! c^{ν+1} φ^{(ν)}(c), c = (α−R)/α.
pub fn laguerre_b_tilde_hypergeometric(alpha: f64, r: f64, k: usize) -> Result<f64> {
    check_alpha_r(alpha, r)?;
    let c = (alpha - r) / alpha;
    let radius = 0.5 * c.min(1.0 - c);
    let taylor = quad::try_cauchy_taylor(|b| Ok(laguerre_phi(alpha, b)), C64::new(c, 0.0), radius, k, 128)?;
    let derivs = quad::taylor_to_derivatives(&taylor);
    let mut total = 0.0;
    let mut binom = 1.0;
    let mut fact = 1.0;
    for (nu, d) in derivs.iter().enumerate() {
        if nu > 0 {
            binom *= (k - nu + 1) as f64 / nu as f64;
            fact *= nu as f64;
        }
        total += binom / fact * c.powi(nu as i32 + 1) * d.re;
    }
    Ok(2.0 * total)
}

/// Σ_ν b̃_ν ρ^ν for |ρ| < 1, as 2b φ(b) with b = (α−R)/(α(1−ρ)).
/// Loses accuracy where the two terms of φ nearly cancel (b close to an integer).
pub fn laguerre_generating(alpha: f64, r: f64, rho: C64) -> Result<C64> {
    check_alpha_r(alpha, r)?;
    if rho.norm() >= 1.0 {
        return Err(Error::Domain(format!("|rho| = {} >= 1", rho.norm())));
    }
    let b = (alpha - r) / (alpha * (1.0 - rho));
    Ok(2.0 * b * laguerre_phi(alpha, b))
}

/// Σ_{ν≥k} b̃_ν C(ν, k) = (−1)^k f^{(k)}(0), f(x) = 1 + tanh(αx/(2(α−R)) − α/4).
///
/// The generating function equals ∫₀^∞ f((1−ρ)u) e^{−u} du = Σ_m f^{(m)}(0)(1−ρ)^m
/// near ρ = 1, so the limit ρ → 1⁻ of its k-th derivative over k! is finite.
pub fn laguerre_tail_limit(alpha: f64, r: f64, k: usize) -> Result<f64> {
    check_alpha_r(alpha, r)?;
    if alpha == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    let a = alpha / (2.0 * (alpha - r));
    // nearest pole of tanh(ax − α/4) sits at |α/4 + iπ/2|/a
    let radius = 0.5 * (alpha / 4.0).hypot(PI / 2.0) / a;
    let f = |x: C64| 1.0 + (a * x - alpha / 4.0).tanh();
    let taylor = quad::cauchy_taylor(f, C64::new(0.0, 0.0), radius, k, (2 * k + 64).min(512));
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(sign * fact * taylor[k].re)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailLimitProbe {
    pub k: usize,
    pub limit: f64,
    /// (ρ, (1/k!) d^k/dρ^k of the generating function at ρ)
    pub rows: Vec<(f64, f64)>,
}

/// Derivatives of [`laguerre_generating`] along ρ → 1⁻ next to the limit value.
pub fn laguerre_tail_limit_probe(alpha: f64, r: f64, k: usize, rhos: &[f64]) -> Result<TailLimitProbe> {
    let limit = laguerre_tail_limit(alpha, r, k)?;
    let rows = rhos
        .iter()
        .map(|&rho| {
            if !(0.0..1.0).contains(&rho) {
                return Err(Error::Domain(format!("rho = {rho} outside [0, 1)")));
            }
            let taylor = quad::try_cauchy_taylor(
                |w| laguerre_generating(alpha, r, w),
                C64::new(rho, 0.0),
                0.5 * (1.0 - rho),
                k,
                128,
            )?;
            Ok((rho, taylor[k].re))
        })
        .collect::<Result<_>>()?;
    Ok(TailLimitProbe { k, limit, rows })
}

/// b̃_0, …, b̃_{𝒦} and the derived quantities for one (α, R, 𝒦).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LaguerreExpansion {
    pub alpha: f64,
    pub r: f64,
    pub k_cal: usize,
    /// b̃_0 … b̃_{𝒦}
    pub b_tilde: Vec<f64>,
}

impl LaguerreExpansion {
    pub fn new(alpha: f64, r: f64, k_cal: usize) -> Result<LaguerreExpansion> {
        if k_cal == 0 {
            return Err(Error::Parameter("K_cal must be >= 1".into()));
        }
        check_alpha_r(alpha, r)?;
        let b_tilde = (0..=k_cal)
            .map(|k| laguerre_b_tilde(alpha, r, k))
            .collect::<Result<_>>()?;
        Ok(LaguerreExpansion { alpha, r, k_cal, b_tilde })
    }

    /// Cached constructor keyed by (α, R, 𝒦).
    pub fn cached(alpha: f64, r: f64, k_cal: usize) -> Result<Arc<LaguerreExpansion>> {
        type Key = (u64, u64, usize);
        static CACHE: OnceLock<Mutex<HashMap<Key, Arc<LaguerreExpansion>>>> = OnceLock::new();
        let key = (alpha.to_bits(), r.to_bits(), k_cal);
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(e) = cache.lock().expect("expansion cache").get(&key) {
            return Ok(e.clone());
        }
        let e = Arc::new(LaguerreExpansion::new(alpha, r, k_cal)?);
        Ok(cache.lock().expect("expansion cache").entry(key).or_insert(e).clone())
    }

    /// s_{𝒦−1}(α, x) = Σ_{ν<𝒦} b̃_ν L_ν(x).
    pub fn s(&self, x: f64) -> f64 {
        let l = laguerre_all(self.k_cal - 1, x);
        l.iter().zip(&self.b_tilde).map(|(a, b)| a * b).sum()
    }

    /// q̃(y) from the Laguerre sum.
    pub fn q_tilde_direct(&self, y: f64) -> f64 {
        -0.5 * (self.s((self.alpha - self.r) * y) - 1.0)
    }

    /// Σ_{ν=k}^{𝒦−1} b̃_ν C(ν, k).
    fn binomial_tail(&self, k: usize) -> f64 {
        let mut total = 0.0;
        let mut binom = 1.0;
        for nu in k..self.k_cal {
            if nu > k {
                binom *= nu as f64 / (nu - k) as f64;
            }
            total += self.b_tilde[nu] * binom;
        }
        total
    }

    /// c_k(α) = e^{α/2}/2 (α−R)^k/k! Σ_{ν=k}^{𝒦−1} b̃_ν C(ν, ν−k); zero for k ≥ 𝒦.
    pub fn c_k(&self, k: usize) -> f64 {
        let mut scale = 0.5 * (0.5 * self.alpha).exp();
        for j in 1..=k {
            scale *= (self.alpha - self.r) / j as f64;
        }
        scale * self.binomial_tail(k)
    }

    /// q̃ as a monomial polynomial in y.
    pub fn q_tilde_poly(&self) -> RealPoly {
        let e = (0.5 * self.alpha).exp();
        let coeffs: Vec<f64> = (0..self.k_cal)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let v = -sign * self.c_k(k) / e;
                if k == 0 {
                    0.5 + v
                } else {
                    v
                }
            })
            .collect();
        RealPoly::new(coeffs, 0.0)
    }

    /// sup over x ∈ [0, α/2] of |s_{𝒦−1}(α, x) − (1 + tanh(·))|.
    pub fn sup_error(&self) -> f64 {
        let top = 0.5 * self.alpha;
        (0..=SUP_GRID)
            .map(|i| {
                let x = top * i as f64 / SUP_GRID as f64;
                (self.s(x) - laguerre_target(self.alpha, self.r, x)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// q̃ built from s_{𝒦−1}; q̃ does not depend on log T.
pub fn build_q_tilde(alpha: f64, r: f64, k_cal: usize) -> Result<BuiltPoly> {
    let exp = LaguerreExpansion::cached(alpha, r, k_cal)?;
    let sup_error = exp.sup_error();
    Ok(BuiltPoly {
        poly: exp.q_tilde_poly(),
        sup_error,
        expansion: TanhExpansion {
            alpha,
            kind: ExpansionKind::Laguerre,
            coeffs: exp.b_tilde[..k_cal].to_vec(),
            degree_params: DegreeParams::Laguerre { k_cal },
            measured_sup_error: Some(sup_error),
        },
    })
}

pub fn c_k_alpha(alpha: f64, r: f64, k: usize, k_cal: usize) -> Result<f64> {
    if k > k_cal {
        return Err(Error::Parameter(format!("k = {k} > K_cal = {k_cal}")));
    }
    Ok(LaguerreExpansion::cached(alpha, r, k_cal)?.c_k(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn g_k_values() {
        assert_relative_eq!(g_k_coeff(1, 0.3).unwrap(), 0.15, max_relative = 1e-14);
        let ds: f64 = 0.3;
        let zeta4 = PI.powi(4) / 90.0;
        let expect = -4.0 * ds.powi(3) / PI.powi(4) * zeta4 * (1.0 - 1.0 / 16.0);
        assert_relative_eq!(g_k_coeff(3, ds).unwrap(), expect, max_relative = 1e-13);
        assert!(g_k_coeff(1, 0.5).unwrap() > 0.0 && g_k_coeff(3, 0.5).unwrap() < 0.0);
        assert!(g_k_coeff(2, 0.5).is_err());
        assert!(g_k_coeff(199, 0.5).unwrap().is_finite());
    }

    #[test]
    fn bernoulli_series() {
        assert_eq!(bernoulli_tanh_series(2.0, 0.5, 61).unwrap(), 0.0);
        let v = bernoulli_tanh_series(PI, 0.0, 61).unwrap();
        assert!((v + (PI / 4.0).tanh()).abs() < 1e-6);
        assert!((v + 0.655_794).abs() < 1e-6);
        assert!(bernoulli_tanh_series(6.3, 0.2, 11).is_err());
    }

    #[test]
    fn fourier_coefficients() {
        let b1 = fourier_b_k_parts(4.0, 1).unwrap();
        assert!(b1.im.abs() < 1e-10);
        let direct = fourier_b_k_direct(4.0, 1).unwrap();
        assert!((b1.re - direct).abs() < 1e-8);
        assert!((b1.re - 1.212_211_446_6).abs() < 1e-9);
        for k in [2, 7, 40, 140] {
            let d = fourier_b_k_direct(4.0, k).unwrap();
            assert!((fourier_b_k(4.0, k).unwrap() - d).abs() < 1e-8, "k = {k}");
        }
    }

    #[test]
    fn fourier_partial_sum() {
        let (alpha, x) = (4.0, 1.0);
        let s: f64 = (1..=200).map(|k| fourier_b_k(alpha, k).unwrap() * (k as f64 * x).sin()).sum();
        assert!((s - (alpha * x / 2.0).tanh()).abs() < 1e-3);
    }

    #[test]
    fn q_properties() {
        let built = build_q(8.0, 8, 8).unwrap();
        let q = &built.poly;
        assert_eq!(q.eval(0.5), 0.0);
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            let big_q = |x: f64| 0.5 + q.eval(x);
            assert!((big_q(x) + big_q(1.0 - x) - 1.0).abs() < 1e-12);
        }
        assert!(q.coeffs.iter().step_by(2).all(|&c| c == 0.0));
        let errs: Vec<f64> = [8, 16, 32].iter().map(|&k| build_q(8.0, k, k).unwrap().sup_error).collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn b_tilde_values() {
        // independent adaptive-quadrature reference
        let b = laguerre_b_tilde(10.0, 1.0, 3).unwrap();
        assert!((b - 0.032_355_168_502_530_8).abs() < 1e-10);
        // Bessel: Σ b̃_ν² ≤ ∫(1 + tanh)² e^{−x} dx = 0.040510350486498
        let e = LaguerreExpansion::new(10.0, 1.0, 20).unwrap();
        let energy: f64 = e.b_tilde.iter().map(|b| b * b).sum();
        assert!(energy <= 0.040_510_350_486_498);
        assert!(laguerre_b_tilde(8.0, 1.0, 0).unwrap() > 0.0);
        let quad_v = laguerre_b_tilde(8.0, 1.0, 2).unwrap();
        let hyp_v = laguerre_b_tilde_hypergeometric(8.0, 1.0, 2).unwrap();
        assert!((quad_v - hyp_v).abs() < 1e-6, "{quad_v} vs {hyp_v}");
        assert!(laguerre_b_tilde(8.0, 9.0, 1).is_err());
    }

    #[test]
    fn q_tilde_forms_agree() {
        let e = LaguerreExpansion::new(8.0, 1.0, 8).unwrap();
        let p = e.q_tilde_poly();
        for i in 0..20 {
            let y = i as f64 / 19.0;
            assert!((p.eval(y) - e.q_tilde_direct(y)).abs() < 1e-9);
        }
        // 1 − 2q̃(0) = s(0) ≈ 1 − tanh(α/4)
        let s0 = 1.0 - 2.0 * p.eval(0.0);
        assert!((s0 - (1.0 - 2f64.tanh())).abs() <= e.sup_error() + 1e-12);
    }

    #[test]
    fn laguerre_error_decreases() {
        let errs: Vec<f64> = [3, 6, 12]
            .iter()
            .map(|&k| build_q_tilde(12.0, 1.0, k).unwrap().sup_error)
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
        let c: Vec<f64> = (0..=12).map(|k| c_k_alpha(12.0, 1.0, k, 12).unwrap().abs()).collect();
        assert!(c.iter().all(|v| v.is_finite()));
        // peak at k = 7, monotone decay after it
        assert!(c[7..].windows(2).all(|w| w[1] <= w[0]), "{c:?}");
    }

    #[test]
    fn degenerate_alpha_zero() {
        let e = LaguerreExpansion::new(0.0, 1.0, 4).unwrap();
        assert_eq!(e.s(0.7), 1.0);
        let built = build_q_tilde(0.0, 1.0, 4).unwrap();
        assert!(built.poly.coeffs.is_empty());
        assert_relative_eq!(c_k_alpha(0.0, 1.0, 0, 4).unwrap(), 0.5);
    }

    #[test]
    fn c0_matches_closed_form() {
        let e = LaguerreExpansion::new(10.0, 1.0, 10).unwrap();
        let target = (5.0f64).exp() / ((5.0f64).exp() + 1.0);
        let tol = 0.5 * (5.0f64).exp() * e.sup_error();
        assert!((e.c_k(0) - target).abs() <= tol + 1e-12);
    }

    #[test]
    fn expansion_json() {
        let built = build_q(4.0, 3, 3).unwrap();
        let text = built.expansion.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["kind"], "fourier");
        assert_eq!(v["coeffs"].as_array().unwrap().len(), 3);
        assert!(v["measured_sup_error"].as_f64().is_some());
    }

    #[test]
    fn generating_function_and_tail_limit() {
        // 30-digit reference values of ∫ f((1−ρ)u)e^{−u}du at α = 8, R = 1.3
        for (rho, want) in [(0.0, 0.189524852372029963), (0.5, 0.0791488774456343173), (0.9, 0.0407355452884768441)] {
            let g = laguerre_generating(8.0, 1.3, C64::new(rho, 0.0)).unwrap();
            assert!((g.re - want).abs() < 1e-12 && g.im.abs() < 1e-12, "rho = {rho}: {g}");
        }
        assert!((laguerre_generating(8.0, 1.3, C64::new(0.0, 0.0)).unwrap().re - laguerre_b_tilde(8.0, 1.3, 0).unwrap()).abs() < 1e-9);
        assert!(laguerre_generating(8.0, 1.3, C64::new(1.0, 0.0)).is_err());

        let want = [0.035972420, -0.042179597, 0.048551994, -0.053762797];
        for (k, w) in want.iter().enumerate() {
            assert!((laguerre_tail_limit(8.0, 1.3, k).unwrap() - w).abs() < 1e-8, "k = {k}");
        }
        assert!((laguerre_tail_limit(8.0, 1.3, 0).unwrap() - (1.0 + (-2.0f64).tanh())).abs() < 1e-15);

        // derivatives along ρ → 1⁻ approach the limit; references from the integral form
        let probe = laguerre_tail_limit_probe(8.0, 1.3, 2, &[0.9, 0.99, 0.999]).unwrap();
        let reference = [0.068367884, 0.050198043, 0.04871361];
        for ((rho, v), w) in probe.rows.iter().zip(reference) {
            assert!((v - w).abs() < 1e-6, "rho = {rho}: {v} vs {w}");
        }
        let gaps: Vec<f64> = probe.rows.iter().map(|r| (r.1 - probe.limit).abs()).collect();
        assert!(gaps.windows(2).all(|g| g[1] < g[0]));
        assert!(laguerre_tail_limit_probe(8.0, 1.3, 1, &[1.0]).is_err());
    }
}
