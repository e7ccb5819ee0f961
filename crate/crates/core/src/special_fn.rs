//! Special-function kernel: complex gamma, 2F1(1,1;c;z), incomplete beta,
//! Bernoulli numbers, Laguerre polynomials, Gauss rules and the
//! Riemann–Siegel theta function.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, AdaptiveOpts};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn is_nonpositive_integer(s: C64) -> bool {
    s.im == 0.0 && s.re <= 0.0 && s.re.fract() == 0.0
}

fn ln_gamma_lanczos(z: C64) -> C64 {
    let z = z - 1.0;
    let mut x = C64::new(LANCZOS[0], 0.0);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + x.ln()
}

fn ln_gamma_stirling(mut z: C64) -> C64 {
    let mut shift = C64::new(0.0, 0.0);
    while z.re < 10.0 {
        shift += z.ln();
        z += 1.0;
    }
    let b = bernoulli_table();
    let zinv = z.inv();
    let z2 = zinv * zinv;
    let mut zp = zinv;
    let mut series = C64::new(0.0, 0.0);
    for k in 1..=12 {
        let n = 2 * k;
        series += zp * (b[n] / ((n * (n - 1)) as f64));
        zp *= z2;
    }
    (z - 0.5) * z.ln() - z + LN_SQRT_2PI + series - shift
}

/// log Γ(s). The branch is continuous away from the negative real axis but
/// is only guaranteed modulo 2πi.
pub fn ln_gamma(s: C64) -> Result<C64> {
    if is_nonpositive_integer(s) {
        return Err(Error::Pole(format!("gamma at {s}")));
    }
    if s.im.abs() >= 20.0 {
        return Ok(ln_gamma_stirling(s));
    }
    if s.re < 0.5 {
        let sin = (s * PI).sin();
        return Ok(C64::new(PI.ln(), 0.0) - sin.ln() - ln_gamma_lanczos(1.0 - s));
    }
    Ok(ln_gamma_lanczos(s))
}

pub fn gamma_complex(s: C64) -> Result<C64> {
    if s.im.abs() < 20.0 && s.re < 0.5 {
        // direct reflection keeps the sign of Γ on the negative real axis
        let sin = (s * PI).sin();
        if is_nonpositive_integer(s) {
            return Err(Error::Pole(format!("gamma at {s}")));
        }
        return Ok(PI / (sin * ln_gamma_lanczos(1.0 - s).exp()));
    }
    Ok(ln_gamma(s)?.exp())
}

/// ₂F₁(1, 1; c; z) by its power series Σ n!/(c)_n zⁿ.
pub fn hyp2f1_11(c: C64, z: C64) -> Result<C64> {
    if is_nonpositive_integer(c) {
        return Err(Error::Domain(format!("c = {c} is a non-positive integer")));
    }
    let az = z.norm();
    if az >= 1.0 {
        return Err(Error::NonConvergence(format!("|z| = {az} >= 1")));
    }
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    for n in 0..200_000usize {
        let nf = n as f64;
        term *= z * ((nf + 1.0) / (c + nf));
        sum += term;
        let q = az * (1.0f64).max((nf + 2.0) / (nf + 1.0 + c.re));
        if q < 1.0 && c.re + nf + 1.0 > 0.0 {
            let bound = term.norm() * q / (1.0 - q);
            if bound < 1e-16 * sum.norm().max(1.0) {
                return Ok(sum);
            }
        }
    }
    Err(Error::NonConvergence(format!("2F1(1,1;{c};{z}) series")))
}

/// B_x(a, b) = ∫₀ˣ t^{a−1}(1−t)^{b−1} dt on the real interval, Re a > 0.
pub fn incomplete_beta(x: f64, a: C64, b: C64) -> Result<C64> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::Domain(format!("x = {x} outside (0, 1]")));
    }
    if a.re <= 0.0 {
        return Err(Error::Domain(format!("Re a = {} must be positive", a.re)));
    }
    if x <= 0.5 {
        return beta_lower(x, a, b);
    }
    let head = beta_lower(0.5, a, b)?;
    if x == 1.0 {
        if b.re <= 0.0 {
            return Err(Error::Domain(format!("Re b = {} must be positive at x = 1", b.re)));
        }
        return Ok(head + beta_lower(0.5, b, a)?);
    }
    let f = |t: f64| (a - 1.0) * t.ln() + (b - 1.0) * (1.0 - t).ln();
    let opts = AdaptiveOpts {
        initial_panels: panels_for(a.im.abs().max(b.im.abs()) * (x - 0.5)),
        ..AdaptiveOpts::default()
    };
    let (mid, _) = quad::integrate(|t| f(t).exp(), 0.5, x, opts)?;
    Ok(head + mid)
}

fn panels_for(phase: f64) -> usize {
    (phase / 2.0).ceil().clamp(1.0, 2000.0) as usize
}

// x ≤ 1/2; t = x e^{−u}
fn beta_lower(x: f64, a: C64, b: C64) -> Result<C64> {
    let umax = 40.0 / a.re;
    let lnx = x.ln();
    let integrand = |u: f64| {
        let t = x * (-u).exp();
        (a * (lnx - u) + (b - 1.0) * (-t).ln_1p()).exp()
    };
    let opts = AdaptiveOpts {
        initial_panels: panels_for(a.im.abs() * umax) + 4,
        ..AdaptiveOpts::default()
    };
    let (v, _) = quad::integrate(integrand, 0.0, umax, opts)?;
    Ok(v)
}

pub const BERNOULLI_MAX: usize = 200;

fn bernoulli_exact_table() -> &'static [BigRational] {
    static TABLE: OnceLock<Vec<BigRational>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = BERNOULLI_MAX;
        let mut b: Vec<BigRational> = Vec::with_capacity(n + 1);
        b.push(BigRational::one());
        // binomial row C(m+1, k), updated in place
        let mut row: Vec<BigInt> = vec![BigInt::one(), BigInt::one()];
        for m in 1..=n {
            let mut next = vec![BigInt::one(); m + 2];
            for k in 1..=m {
                next[k] = &row[k - 1] + &row[k];
            }
            row = next;
            let mut acc = BigRational::zero();
            for (k, bk) in b.iter().enumerate() {
                if !bk.is_zero() {
                    acc += bk * BigRational::from_integer(row[k].clone());
                }
            }
            b.push(-acc / BigRational::from_integer(BigInt::from(m + 1)));
        }
        b
    })
}

/// Exact Bernoulli number (B₁ = −1/2).
pub fn bernoulli_exact(n: usize) -> Result<BigRational> {
    if n > BERNOULLI_MAX {
        return Err(Error::Domain(format!("Bernoulli index {n} > {BERNOULLI_MAX}")));
    }
    Ok(bernoulli_exact_table()[n].clone())
}

pub(crate) fn bernoulli_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        bernoulli_exact_table()
            .iter()
            .map(|r| {
                let num = r.numer().to_f64().unwrap_or(f64::NAN);
                let den = r.denom().to_f64().unwrap_or(f64::NAN);
                num / den
            })
            .collect()
    })
}

pub fn bernoulli(n: usize) -> Result<f64> {
    if n > BERNOULLI_MAX {
        return Err(Error::Domain(format!("Bernoulli index {n} > {BERNOULLI_MAX}")));
    }
    Ok(bernoulli_table()[n])
}

/// Laguerre polynomial L_n(x).
pub fn laguerre(n: usize, x: f64) -> f64 {
    let mut p0 = 1.0;
    if n == 0 {
        return p0;
    }
    let mut p1 = 1.0 - x;
    for j in 1..n {
        let jf = j as f64;
        let p2 = ((2.0 * jf + 1.0 - x) * p1 - jf * p0) / (jf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// L_0(x), …, L_n(x).
pub fn laguerre_all(n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n == 0 {
        return out;
    }
    out.push(1.0 - x);
    for j in 1..n {
        let jf = j as f64;
        let v = ((2.0 * jf + 1.0 - x) * out[j] - jf * out[j - 1]) / (jf + 1.0);
        out.push(v);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RuleKind {
    GaussLegendre,
    GaussLaguerre,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub kind: RuleKind,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Σ wᵢ f(xᵢ). For Gauss–Laguerre this approximates ∫₀^∞ f(x)e^{−x}dx.
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Gauss–Legendre rule mapped to [a, b] and applied.
    pub fn apply_on<F: Fn(f64) -> C64>(&self, a: f64, b: f64, f: F) -> C64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = C64::new(0.0, 0.0);
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += f(c + h * x) * w;
        }
        acc * h
    }
}

pub fn gauss_legendre(n: usize) -> QuadratureRule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 1..n {
                let jf = j as f64;
                let p2 = ((2.0 * jf + 1.0) * z * p1 - jf * p0) / (jf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            let (pn, pn1) = if n == 1 { (z, 1.0) } else { (p1, p0) };
            dp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    QuadratureRule {
        kind: RuleKind::GaussLegendre,
        nodes,
        weights,
    }
}

// L_n(x) and L_{n−1}(x) sharing a common scale factor e^{scale}
fn laguerre_pair_scaled(n: usize, x: f64) -> (f64, f64, f64) {
    let (mut p0, mut p1, mut scale) = (1.0, 1.0 - x, 0.0);
    for j in 1..n {
        let jf = j as f64;
        let p2 = ((2.0 * jf + 1.0 - x) * p1 - jf * p0) / (jf + 1.0);
        p0 = p1;
        p1 = p2;
        if p1.abs() > 1e100 {
            p0 *= 1e-100;
            p1 *= 1e-100;
            scale += 100.0 * std::f64::consts::LN_10;
        }
    }
    (p1, p0, scale)
}

/// Gauss–Laguerre rule for weight e^{−x} on [0, ∞). Weights of the largest
/// nodes underflow to zero once n exceeds roughly 180.
pub fn gauss_laguerre(n: usize) -> QuadratureRule {
    let nf = n as f64;
    let mut nodes: Vec<f64> = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut z = 0.0;
    for i in 0..n {
        z = match i {
            0 => 3.0 / (1.0 + 2.4 * nf),
            1 => z + 15.0 / (1.0 + 2.5 * nf),
            _ => {
                let ai = (i - 1) as f64;
                z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2])
            }
        };
        let mut pn1 = 0.0;
        let mut scale = 0.0;
        for _ in 0..200 {
            let (pn, p, sc) = laguerre_pair_scaled(n, z);
            pn1 = p;
            scale = sc;
            let dp = nf * (pn - pn1) / z;
            let dz = pn / dp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs() {
                break;
            }
        }
        let (_, p, sc) = laguerre_pair_scaled(n, z);
        if p != 0.0 {
            pn1 = p;
            scale = sc;
        }
        let ln_w = z.ln() - 2.0 * nf.ln() - 2.0 * (pn1.abs().ln() + scale);
        nodes.push(z);
        weights.push(ln_w.exp());
    }
    QuadratureRule {
        kind: RuleKind::GaussLaguerre,
        nodes,
        weights,
    }
}

/// Riemann–Siegel θ(t) by its asymptotic expansion.
pub fn rs_theta(t: f64) -> Result<f64> {
    if !(t >= 10.0) {
        return Err(Error::AccuracyLoss(format!("theta asymptotics need t >= 10, got {t}")));
    }
    let b = bernoulli_table();
    let mut v = 0.5 * t * (t / (2.0 * PI)).ln() - 0.5 * t - PI / 8.0;
    let tinv = 1.0 / t;
    let t2 = tinv * tinv;
    let mut tp = tinv;
    for k in 1..=10usize {
        let kf = k as f64;
        let factor = 1.0 - 2f64.powi(1 - 2 * k as i32);
        v += factor * b[2 * k].abs() / (4.0 * kf * (2.0 * kf - 1.0)) * tp;
        tp *= t2;
    }
    Ok(v)
}
