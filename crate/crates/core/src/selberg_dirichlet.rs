//! Prime-side machinery: Λ and μ, Selberg's weights Λ_x, σ_{x,t}, the
//! partition (Faà di Bruno) expansion of ζ^{(k)}/ζ, and the polynomial A(s).

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num::{BigUint, One, ToPrimitive};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dirichlet::DirichletPoly;
use crate::error::{Error, Result};
use crate::params::ExperimentParams;
use crate::quad;
use crate::tanh_approx::LaguerreExpansion;
use crate::zeta_core::{zeta, zeta_with_derivative, ZeroList};

pub const SIEVE_BLOCK: usize = 1 << 20;
pub const SIEVE_LIMIT: u64 = 100_000_000;
const PARTITION_K_MAX: usize = 40;
/// Largest index kept by [`AEvaluator::flatten`].
pub const FLATTEN_LIMIT: u64 = 10_000_000;

fn small_primes(limit: u64) -> Vec<u64> {
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Primes ≤ n by a segmented sieve of Eratosthenes.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let base = small_primes(isqrt(n));
    let mut out = Vec::new();
    let mut lo = 2u64;
    let mut composite = vec![false; SIEVE_BLOCK];
    while lo <= n {
        let hi = (lo + SIEVE_BLOCK as u64 - 1).min(n);
        let len = (hi - lo + 1) as usize;
        composite[..len].fill(false);
        for &p in &base {
            if p * p > hi {
                break;
            }
            let start = (p * p).max(lo.div_ceil(p) * p);
            let mut m = start;
            while m <= hi {
                composite[(m - lo) as usize] = true;
                m += p;
            }
        }
        out.extend((0..len).filter(|&i| !composite[i]).map(|i| lo + i as u64));
        lo = hi + 1;
    }
    out
}

/// (p^k, log p) for all prime powers ≤ n, sorted.
pub fn prime_powers_up_to(n: u64) -> Vec<(u64, f64)> {
    let mut out = Vec::new();
    for p in primes_up_to(n) {
        let lp = (p as f64).ln();
        let mut q = p;
        loop {
            out.push((q, lp));
            match q.checked_mul(p) {
                Some(next) if next <= n => q = next,
                _ => break,
            }
        }
    }
    out.sort_by_key(|e| e.0);
    out
}

/// μ(1), …, μ(n) by a segmented sieve; index 0 is unused and set to 0.
pub fn moebius_table(n: u64) -> Result<Vec<i8>> {
    if n > SIEVE_LIMIT {
        return Err(Error::Parameter(format!("moebius table to {n} exceeds {SIEVE_LIMIT}")));
    }
    let base = small_primes(isqrt(n.max(1)));
    let mut mu = vec![0i8; n as usize + 1];
    let mut rem: Vec<u64> = Vec::with_capacity(SIEVE_BLOCK);
    let mut lo = 1u64;
    while lo <= n {
        let hi = (lo + SIEVE_BLOCK as u64 - 1).min(n);
        rem.clear();
        rem.extend(lo..=hi);
        let block = &mut mu[lo as usize..=hi as usize];
        block.fill(1);
        for &p in &base {
            if p * p > hi {
                break;
            }
            let mut m = lo.div_ceil(p) * p;
            while m <= hi {
                let i = (m - lo) as usize;
                block[i] = -block[i];
                rem[i] /= p;
                if rem[i].is_multiple_of(p) {
                    block[i] = 0;
                }
                m += p;
            }
        }
        for (i, r) in rem.iter().enumerate() {
            if *r > 1 {
                block[i] = -block[i];
            }
        }
        lo = hi + 1;
    }
    mu[0] = 0;
    Ok(mu)
}

fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Λ(n): log p if n = p^k, else 0.
pub fn von_mangoldt(n: u64) -> f64 {
    let f = factor(n);
    if f.len() == 1 {
        (f[0].0 as f64).ln()
    } else {
        0.0
    }
}

pub fn moebius(m: u64) -> i8 {
    if m == 0 {
        return 0;
    }
    let f = factor(m);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Weight factor Λ_x(n)/Λ(n) of the three-branch definition.
fn selberg_factor(x: f64, n: f64) -> f64 {
    let lx2 = 2.0 * x.ln().powi(2);
    if n <= x {
        1.0
    } else if n <= x * x {
        ((x.powi(3) / n).ln().powi(2) - 2.0 * (x * x / n).ln().powi(2)) / lx2
    } else {
        (x.powi(3) / n).ln().powi(2) / lx2
    }
}

/// Λ_x(n) for 1 ≤ n ≤ x³.
pub fn lambda_x(x: f64, n: u64) -> Result<f64> {
    if n == 0 || (n as f64) > x.powi(3) * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("n = {n} outside [1, x^3] for x = {x}")));
    }
    let lam = von_mangoldt(n);
    if lam == 0.0 {
        return Ok(0.0);
    }
    Ok(lam * selberg_factor(x, n as f64))
}

/// Nonzero Λ_x(n), n ≤ x³.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelbergWeightTable {
    pub x: f64,
    /// (n, Λ_x(n), log n)
    pub weights: Vec<(u64, f64, f64)>,
}

impl SelbergWeightTable {
    pub fn new(x: f64) -> Result<SelbergWeightTable> {
        let top = x.powi(3);
        if top > SIEVE_LIMIT as f64 {
            return Err(Error::Parameter(format!("x^3 = {top:.3e} exceeds the sieve limit")));
        }
        let n_max = if top < 1.0 { 0 } else { (top * (1.0 + 1e-12)).floor() as u64 };
        let weights = prime_powers_up_to(n_max)
            .into_iter()
            .map(|(n, lp)| {
                let nf = n as f64;
                (n, lp * selberg_factor(x, nf), nf.ln())
            })
            .filter(|e| e.1 != 0.0)
            .collect();
        Ok(SelbergWeightTable { x, weights })
    }

    pub fn cached(x: f64) -> Result<Arc<SelbergWeightTable>> {
        static CACHE: OnceLock<Mutex<HashMap<u64, Arc<SelbergWeightTable>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(t) = cache.lock().expect("weight cache").get(&x.to_bits()) {
            return Ok(t.clone());
        }
        let t = Arc::new(SelbergWeightTable::new(x)?);
        Ok(cache.lock().expect("weight cache").entry(x.to_bits()).or_insert(t).clone())
    }

    /// Σ Λ_x(n) n^{−s}
    pub fn eval(&self, s: C64) -> C64 {
        self.weights.iter().map(|&(_, w, ln)| w * (-s * ln).exp()).sum()
    }

    /// Σ Λ_x(n)/log n · n^{−s}
    pub fn eval_over_log(&self, s: C64) -> C64 {
        self.weights.iter().map(|&(_, w, ln)| w / ln * (-s * ln).exp()).sum()
    }

    pub fn to_dirichlet(&self) -> DirichletPoly {
        let terms = self.weights.iter().map(|&(n, w, _)| (n, C64::new(w, 0.0))).collect();
        DirichletPoly::new(terms, 0.0).expect("indices are positive")
    }
}

/// Σ_{n≤x³} Λ_x(n) n^{−s}, an approximation to −ζ′/ζ(s).
pub fn selberg_poly(x: f64, s: C64) -> Result<C64> {
    Ok(SelbergWeightTable::cached(x)?.eval(s))
}

/// A zero ρ* = β* + iγ*.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Zero {
    pub beta: f64,
    pub gamma: f64,
}

/// Zeros with real parts, complete within `window`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSet {
    pub window: [f64; 2],
    pub zeros: Vec<Zero>,
}

impl From<&ZeroList> for ZeroSet {
    fn from(z: &ZeroList) -> ZeroSet {
        ZeroSet {
            window: z.window,
            zeros: z.ordinates.iter().map(|&g| Zero { beta: 0.5, gamma: g }).collect(),
        }
    }
}

/// σ_{x,t} = ½ + 2 max(β* − ½, 2/log x) over zeros with |γ* − t| ≤ x^{3|β*−½|}/log x.
/// The zero set must cover t ± x^{3/2}/log x.
pub fn sigma_x_t(x: f64, t: f64, zeros: &ZeroSet) -> Result<f64> {
    if x < 2.0 {
        return Err(Error::Parameter(format!("x = {x} < 2")));
    }
    let lx = x.ln();
    let margin = x.powf(1.5) / lx;
    if zeros.window[0] > t - margin || zeros.window[1] < t + margin {
        return Err(Error::Coverage(format!(
            "[{}, {}] needed, have [{}, {}]",
            t - margin,
            t + margin,
            zeros.window[0],
            zeros.window[1]
        )));
    }
    let mut m = 2.0 / lx;
    for z in &zeros.zeros {
        let d = (z.beta - 0.5).abs();
        if (z.gamma - t).abs() <= x.powf(3.0 * d) / lx {
            m = m.max(z.beta - 0.5);
        }
    }
    Ok(0.5 + 2.0 * m)
}

/// One term of the Faà di Bruno expansion: multiplicities (R_1, …, R_k) with
/// Σ j R_j = k and coefficient k!/(R_1! 1!^{R_1} ⋯ R_k! k!^{R_k}).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionTerm {
    pub k: usize,
    pub multiplicities: Vec<u32>,
    pub coefficient: u128,
}

fn factorial_big(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

fn partition_coefficient(k: usize, r: &[u32]) -> u128 {
    let mut den = BigUint::one();
    for (j, &rj) in r.iter().enumerate() {
        den *= factorial_big(rj as usize);
        den *= factorial_big(j + 1).pow(rj);
    }
    (factorial_big(k) / den).to_u128().expect("set-partition counts fit in u128 for k <= 40")
}

fn enumerate(k: usize, j: usize, left: usize, cur: &mut Vec<u32>, out: &mut Vec<PartitionTerm>) {
    if j == 0 {
        if left == 0 {
            out.push(PartitionTerm {
                k,
                multiplicities: cur.clone(),
                coefficient: partition_coefficient(k, cur),
            });
        }
        return;
    }
    for rj in (0..=left / j).rev() {
        cur[j - 1] = rj as u32;
        enumerate(k, j - 1, left - rj * j, cur, out);
    }
    cur[j - 1] = 0;
}

/// All partitions of k in multiplicity form.
pub fn partitions_of(k: usize) -> Result<Arc<Vec<PartitionTerm>>> {
    if k > PARTITION_K_MAX {
        return Err(Error::Parameter(format!("k = {k} > {PARTITION_K_MAX}")));
    }
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<PartitionTerm>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(p) = cache.lock().expect("partition cache").get(&k) {
        return Ok(p.clone());
    }
    let mut out = Vec::new();
    let mut cur = vec![0u32; k];
    enumerate(k, k, k, &mut cur, &mut out);
    let p = Arc::new(out);
    Ok(cache.lock().expect("partition cache").entry(k).or_insert(p).clone())
}

/// Σ_P c_P Π_j v_j^{R_j}, v_j the (j−1)-th factor.
pub fn partition_sum(k: usize, factors: &[C64]) -> Result<C64> {
    if factors.len() < k {
        return Err(Error::Parameter(format!("{} factors for k = {k}", factors.len())));
    }
    let mut total = C64::new(0.0, 0.0);
    for p in partitions_of(k)?.iter() {
        let mut term = C64::new(p.coefficient as f64, 0.0);
        for (j, &rj) in p.multiplicities.iter().enumerate() {
            if rj > 0 {
                term *= factors[j].powu(rj);
            }
        }
        total += term;
    }
    Ok(total)
}

/// (ζ′/ζ)^{(j)}(s), j = 0, …, kmax, from one Cauchy circle.
pub fn log_derivative_derivs(kmax: usize, s: C64) -> Result<Vec<C64>> {
    let d1 = (s - 1.0).norm();
    if d1 < 0.02 {
        return Err(Error::Pole(format!("{s} too close to s = 1")));
    }
    // zero-free for Re > 1; otherwise stay small
    let reach = if s.re > 1.0 { d1.min(s.re - 1.0 + 0.5) } else { d1.min(0.2) };
    let r = 0.5 * reach;
    let nodes = (4 * kmax + 64).min(256);
    let f = |z: C64| -> Result<C64> {
        let (z0, dz) = zeta_with_derivative(z)?;
        Ok(dz / z0)
    };
    let taylor = quad::try_cauchy_taylor(f, s, r, kmax, nodes)?;
    let mut d = quad::taylor_to_derivatives(&taylor);
    d[0] = f(s)?;
    Ok(d)
}

/// ζ^{(k)}/ζ(s) by the partition expansion in derivatives of ζ′/ζ.
pub fn faa_di_bruno_ratio(k: usize, s: C64) -> Result<C64> {
    let z = zeta(s)?;
    if z.norm() <= 1e-8 {
        return Err(Error::NearZero(format!("|zeta({s})| = {:.3e}", z.norm())));
    }
    if k == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    let d = log_derivative_derivs(k - 1, s)?;
    partition_sum(k, &d)
}

/// Precomputed pieces for A_j and A(s) at one parameter set.
#[derive(Debug, Clone)]
pub struct AEvaluator {
    pub k_cal: usize,
    /// ½ + (α − R + δ_T)/log T
    pub sigma: f64,
    log_t: f64,
    /// log T/(α − R − C log α)
    scale: f64,
    mult_mid: f64,
    mult_far: f64,
    shift_mid: f64,
    shift_far: f64,
    c_k: Vec<f64>,
    tab_x: Arc<SelbergWeightTable>,
    tab_x0: Arc<SelbergWeightTable>,
    tab_x1: Arc<SelbergWeightTable>,
}

/// Per-t building blocks shared by every A_j.
#[derive(Debug, Clone, Copy)]
struct ABlocks {
    poly: C64,
    s1: C64,
}

impl AEvaluator {
    pub fn new(p: &ExperimentParams) -> Result<AEvaluator> {
        p.validate()?;
        let alpha = p.alpha;
        if alpha <= 1.0 {
            return Err(Error::Parameter(format!("alpha = {alpha} must exceed 1")));
        }
        let width = alpha - p.r - p.c * alpha.ln();
        if width <= 0.0 {
            return Err(Error::Parameter(format!("alpha - R - C log alpha = {width} <= 0")));
        }
        let (x, x0, x1) = (p.x(), p.x0(), p.x1());
        if x0 <= x || x1 >= x {
            return Err(Error::Parameter(format!("need x1 < x < x0, got {x1}, {x}, {x0}")));
        }
        let log_t = p.log_t();
        let exp = LaguerreExpansion::cached(alpha, p.r, p.k_cal)?;
        let c_k = (0..=p.k_cal).map(|k| exp.c_k(k)).collect();
        let a_mid = alpha.powf(1.0 + p.c / 2.0);
        let a_far = alpha.powf(1.0 + p.c);
        Ok(AEvaluator {
            k_cal: p.k_cal,
            sigma: 0.5 + (alpha - p.r + p.delta_t) / log_t,
            log_t,
            scale: log_t / width,
            mult_mid: a_mid / log_t,
            mult_far: a_far / log_t,
            shift_mid: (a_mid - alpha + p.r) / log_t,
            shift_far: (a_far - alpha + p.r) / log_t,
            c_k,
            tab_x: SelbergWeightTable::cached(x)?,
            tab_x0: SelbergWeightTable::cached(x0)?,
            tab_x1: SelbergWeightTable::cached(x1)?,
        })
    }

    fn blocks(&self, t: f64) -> ABlocks {
        let s1 = C64::new(self.sigma, t);
        let s_mid = s1 + self.shift_mid;
        let s_far = s1 + self.shift_far;
        let first = self.tab_x0.eval_over_log(s_mid) - self.tab_x0.eval_over_log(s_far);
        let mid = self.tab_x.eval(s_mid) + self.tab_x0.eval(s_mid) + self.tab_x0.eval(s_far);
        let far = self.tab_x1.eval(s_far);
        ABlocks {
            poly: first + mid * self.mult_mid + far * self.mult_far,
            s1,
        }
    }

    /// d^j/ds₁^j ∫_{s₁}^{s₁+h} log s ds, h = (α^{1+C} − α + R)/log T.
    fn log_integral_derivative(&self, j: usize, s1: C64) -> C64 {
        let h = self.shift_far;
        if j == 1 {
            return (s1 + h).ln() - s1.ln();
        }
        let m = (j - 1) as i32;
        let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
        let fact: f64 = (1..=j - 2).map(|i| i as f64).product();
        sign * fact * ((s1 + h).powi(-m) - s1.powi(-m))
    }

    fn a_j_from(&self, j: usize, b: &ABlocks, omega: f64) -> C64 {
        let fact: f64 = (1..=j).map(|i| i as f64).product();
        let pref = fact * self.scale.powi(j as i32);
        omega * (b.poly * pref + self.log_integral_derivative(j, b.s1))
    }

    /// A_j(σ + Δσ + it) for j ≥ 1.
    pub fn a_j(&self, j: usize, t: f64, omega: f64) -> Result<C64> {
        if j == 0 {
            return Err(Error::Parameter("A_j needs j >= 1".into()));
        }
        Ok(self.a_j_from(j, &self.blocks(t), omega))
    }

    /// A(σ + Δσ + it) = Σ_k c_k/(log T)^k Σ_P c_P Π_j A_j^{R_j}; ω_j = omegas[j−1],
    /// missing entries default to 1.
    pub fn eval(&self, t: f64, omegas: &[f64]) -> Result<C64> {
        let b = self.blocks(t);
        let a: Vec<C64> = (1..=self.k_cal)
            .map(|j| self.a_j_from(j, &b, omega(omegas, j)))
            .collect();
        self.assemble(&a)
    }

    fn assemble(&self, a: &[C64]) -> Result<C64> {
        let mut total = C64::new(0.0, 0.0);
        let mut lt = 1.0;
        for k in 1..=self.k_cal {
            lt /= self.log_t;
            total += partition_sum(k, a)? * (self.c_k[k] * lt);
        }
        Ok(total)
    }

    /// The Dirichlet block B(s₁) = Σ b(n) n^{−s₁} shared by every A_j, so that
    /// A_j = ω_j (j! scale^j B(s₁) + ℓ_j(s₁)) with ℓ_j the log-integral term.
    pub fn block_poly(&self) -> DirichletPoly {
        let mut terms = Vec::new();
        let mut add = |tab: &SelbergWeightTable, shift: f64, mult: f64, over_log: bool| {
            for &(n, w, ln) in &tab.weights {
                let w = if over_log { w / ln } else { w };
                terms.push((n, C64::new(w * mult * (-shift * ln).exp(), 0.0)));
            }
        };
        add(&self.tab_x0, self.shift_mid, 1.0, true);
        add(&self.tab_x0, self.shift_far, -1.0, true);
        add(&self.tab_x, self.shift_mid, self.mult_mid, false);
        add(&self.tab_x0, self.shift_mid, self.mult_mid, false);
        add(&self.tab_x0, self.shift_far, self.mult_mid, false);
        add(&self.tab_x1, self.shift_far, self.mult_far, false);
        DirichletPoly::new(terms, 0.0).expect("indices are positive")
    }

    /// Coefficient form Σ ã(n) n^{−s₁}, n ≤ max_n, of the Dirichlet part of A:
    /// the assembly with every ℓ_j dropped, expanded in powers of B. The
    /// log-integral terms are not Dirichlet series and are left out.
    pub fn flatten(&self, omegas: &[f64], max_n: u64) -> Result<DirichletPoly> {
        if max_n == 0 || max_n > FLATTEN_LIMIT {
            return Err(Error::Parameter(format!("max_n = {max_n} outside 1..={FLATTEN_LIMIT}")));
        }
        // weight of B^m: Σ_k c_k/(log T)^k Σ_{P: Σ R_j = m} c_P Π (ω_j j! scale^j)^{R_j}
        let a: Vec<f64> = (1..=self.k_cal)
            .map(|j| {
                let fact: f64 = (1..=j).map(|i| i as f64).product();
                omega(omegas, j) * fact * self.scale.powi(j as i32)
            })
            .collect();
        let mut weight = vec![0.0; self.k_cal + 1];
        let mut lt = 1.0;
        for k in 1..=self.k_cal {
            lt /= self.log_t;
            for p in partitions_of(k)?.iter() {
                let mut term = p.coefficient as f64 * self.c_k[k] * lt;
                let mut m = 0;
                for (j, &rj) in p.multiplicities.iter().enumerate() {
                    term *= a[j].powi(rj as i32);
                    m += rj as usize;
                }
                weight[m] += term;
            }
        }
        let block: Vec<(u64, C64)> = self.block_poly().terms().iter().copied().filter(|&(n, _)| n <= max_n).collect();
        let mut out = vec![C64::new(0.0, 0.0); max_n as usize + 1];
        let mut power = vec![C64::new(0.0, 0.0); max_n as usize + 1];
        power[1] = C64::new(1.0, 0.0);
        for w in weight.iter().skip(1) {
            let mut next = vec![C64::new(0.0, 0.0); max_n as usize + 1];
            for (m, &cm) in power.iter().enumerate().skip(1) {
                if cm == C64::new(0.0, 0.0) {
                    continue;
                }
                for &(n, cn) in &block {
                    let idx = m as u64 * n;
                    if idx > max_n {
                        break;
                    }
                    next[idx as usize] += cm * cn;
                }
            }
            power = next;
            for (o, &p) in out.iter_mut().zip(&power) {
                *o += p * *w;
            }
        }
        let terms = out.into_iter().enumerate().skip(1).map(|(n, c)| (n as u64, c)).collect();
        DirichletPoly::new(terms, 0.0)
    }

    pub fn eval_grid(&self, ts: &[f64], omegas: &[f64]) -> Result<Vec<C64>> {
        ts.par_iter().map(|&t| self.eval(t, omegas)).collect()
    }
}

fn omega(omegas: &[f64], j: usize) -> f64 {
    omegas.get(j - 1).copied().unwrap_or(1.0)
}

pub fn a_j_term(j: usize, params: &ExperimentParams, t: f64, omega_j: f64) -> Result<C64> {
    AEvaluator::new(params)?.a_j(j, t, omega_j)
}

#[allow(non_snake_case)]
pub fn assemble_A(params: &ExperimentParams, t: f64, omegas: &[f64]) -> Result<C64> {
    AEvaluator::new(params)?.eval(t, omegas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zeta_core::zeta_derivs;
    use std::f64::consts::LN_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn arithmetic_functions() {
        assert!((von_mangoldt(8) - LN_2).abs() < 1e-15);
        assert_eq!(moebius(8), 0);
        assert_eq!(von_mangoldt(6), 0.0);
        assert_eq!(moebius(6), 1);
        assert_eq!([1u64, 2, 3, 4, 6, 12].iter().map(|&d| moebius(d) as i32).sum::<i32>(), 0);
        let mu = moebius_table(3000).unwrap();
        for m in 1..=3000u64 {
            assert_eq!(mu[m as usize], moebius(m), "m = {m}");
        }
    }

    #[test]
    fn segmented_sieve_counts() {
        assert_eq!(primes_up_to(100).len(), 25);
        assert_eq!(primes_up_to(3_000_000).len(), 216_816);
        let pp = prime_powers_up_to(1000);
        for &(n, lp) in &pp {
            assert!((von_mangoldt(n) - lp).abs() < 1e-14);
        }
        assert_eq!(pp.len(), (2..=1000u64).filter(|&n| von_mangoldt(n) > 0.0).count());
    }

    #[test]
    fn lambda_x_branches() {
        assert!((lambda_x(100.0, 7).unwrap() - 7f64.ln()).abs() < 1e-15);
        let x: f64 = 10.0;
        let lx2 = 2.0 * x.ln().powi(2);
        // continuity at n = x and n = x²
        for n in [x, x * x] {
            let mid = ((x.powi(3) / n).ln().powi(2) - 2.0 * (x * x / n).ln().powi(2)) / lx2;
            let outer = (x.powi(3) / n).ln().powi(2) / lx2;
            let inner = 1.0;
            if n == x {
                assert!((mid - inner).abs() < 1e-12);
            } else {
                assert!((mid - outer).abs() < 1e-12);
            }
        }
        assert!(selberg_factor(x, x.powi(3)).abs() < 1e-12);
        assert!(lambda_x(10.0, 1001).is_err());
    }

    #[test]
    fn selberg_poly_improves_with_x() {
        let s = c(1.5, 100.0);
        let (z, dz) = zeta_with_derivative(s).unwrap();
        let target = -dz / z;
        let e20 = (selberg_poly(20.0, s).unwrap() - target).norm();
        let e200 = (selberg_poly(200.0, s).unwrap() - target).norm();
        assert!(e200 < e20, "{e200} vs {e20}");
        assert_eq!(selberg_poly(1.2, s).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn sigma_x_t_cases() {
        let x = 1000.0f64;
        let on_line = ZeroSet { window: [-1e6, 1e6], zeros: vec![Zero { beta: 0.5, gamma: 100.0 }] };
        assert!((sigma_x_t(x, 100.0, &on_line).unwrap() - (0.5 + 4.0 / x.ln())).abs() < 1e-15);
        let empty = ZeroSet { window: [-1e6, 1e6], zeros: vec![] };
        assert!((sigma_x_t(x, 100.0, &empty).unwrap() - (0.5 + 4.0 / x.ln())).abs() < 1e-15);
        let x = 25f64.exp();
        let off = ZeroSet { window: [-1e20, 1e20], zeros: vec![Zero { beta: 0.6, gamma: 130.0 }] };
        assert!((sigma_x_t(x, 100.0, &off).unwrap() - 0.7).abs() < 1e-12);
        let narrow = ZeroSet { window: [0.0, 200.0], zeros: vec![] };
        assert!(matches!(sigma_x_t(1000.0, 100.0, &narrow), Err(Error::Coverage(_))));
    }

    fn bell_brute(k: usize) -> u64 {
        // restricted growth strings
        fn go(i: usize, k: usize, max: usize) -> u64 {
            if i == k {
                return 1;
            }
            (0..=max + 1).map(|b| go(i + 1, k, max.max(b))).sum()
        }
        if k == 0 {
            1
        } else {
            go(1, k, 0)
        }
    }

    #[test]
    fn partitions_structure() {
        let p2 = partitions_of(2).unwrap();
        assert_eq!(p2.len(), 2);
        assert!(p2.iter().any(|p| p.multiplicities == vec![2, 0] && p.coefficient == 1));
        assert!(p2.iter().any(|p| p.multiplicities == vec![0, 1] && p.coefficient == 1));
        let p3 = partitions_of(3).unwrap();
        assert_eq!(p3.len(), 3);
        assert!(p3.iter().any(|p| p.multiplicities == vec![1, 1, 0] && p.coefficient == 3));
        assert_eq!(partitions_of(6).unwrap().len(), 11);
        for k in 1..=8 {
            let total: u128 = partitions_of(k).unwrap().iter().map(|p| p.coefficient).sum();
            assert_eq!(total as u64, bell_brute(k), "k = {k}");
            for p in partitions_of(k).unwrap().iter() {
                let w: usize = p.multiplicities.iter().enumerate().map(|(j, &r)| (j + 1) * r as usize).sum();
                assert_eq!(w, k);
            }
        }
        assert_eq!(partitions_of(40).unwrap().len(), 37_338);
    }

    #[test]
    fn faa_di_bruno_matches_direct() {
        let s = c(3.0, 0.0);
        let d = zeta_derivs(2, s).unwrap();
        let r = faa_di_bruno_ratio(2, s).unwrap();
        assert!((r - d[2] / d[0]).norm() < 1e-7 * r.norm());
        let s = c(2.0, 10.0);
        let d = zeta_derivs(5, s).unwrap();
        let r = faa_di_bruno_ratio(5, s).unwrap();
        assert!((r - d[5] / d[0]).norm() < 1e-5 * r.norm());
        let (z, dz) = zeta_with_derivative(s).unwrap();
        assert!((faa_di_bruno_ratio(1, s).unwrap() - dz / z).norm() < 1e-13);
    }

    #[test]
    fn a_assembly_edge_cases() {
        let p = ExperimentParams::default();
        let ev = AEvaluator::new(&p).unwrap();
        let zeros = vec![0.0; p.k_cal];
        assert_eq!(ev.eval(12_000.0, &zeros).unwrap(), c(0.0, 0.0));
        let p1 = ExperimentParams { k_cal: 1, ..p.clone() };
        let ev1 = AEvaluator::new(&p1).unwrap();
        let a1 = ev1.a_j(1, 12_000.0, 1.0).unwrap();
        let c1 = LaguerreExpansion::cached(p.alpha, p.r, 1).unwrap().c_k(1);
        let whole = ev1.eval(12_000.0, &[1.0]).unwrap();
        assert!((whole - a1 * (c1 / p.log_t())).norm() < 1e-14 * whole.norm().max(1e-300));
        let bad = ExperimentParams { x1: Some(1e3), ..p.clone() };
        assert!(AEvaluator::new(&bad).is_err());
        let bad = ExperimentParams { alpha: 1.0, ..p };
        assert!(AEvaluator::new(&bad).is_err());
    }

    #[test]
    fn log_integral_derivative_matches_numeric() {
        let ev = AEvaluator::new(&ExperimentParams::default()).unwrap();
        let s1 = c(0.9, 30.0);
        let h = ev.shift_far;
        let big_f = |z: C64| {
            let phi = |w: C64| w * w.ln() - w;
            phi(z + h) - phi(z)
        };
        let taylor = quad::cauchy_taylor(big_f, s1, 0.3, 4, 64);
        let d = quad::taylor_to_derivatives(&taylor);
        for (j, dj) in d.iter().enumerate().skip(1) {
            let exact = ev.log_integral_derivative(j, s1);
            assert!((exact - dj).norm() < 1e-9 * exact.norm().max(1.0), "j = {j}");
        }
    }

    #[test]
    fn flattened_a_matches_assembly_without_log_terms() {
        let p = ExperimentParams { k_cal: 3, x: Some(2.0), x0: Some(3.0), x1: Some(1.5), ..ExperimentParams::default() };
        let ev = AEvaluator::new(&p).unwrap();
        let t = 10_050.0;
        let b = ev.blocks(t);
        let block = ev.block_poly();
        assert!((block.eval(b.s1) - b.poly).norm() < 1e-13 * b.poly.norm().max(1.0));
        // every B^3 index is at most 27^3
        assert!(block.max_index() <= 27);
        let omegas = [1.0, 0.5, 0.25];
        let flat = ev.flatten(&omegas, 27 * 27 * 27).unwrap();
        let a: Vec<C64> = (1..=3)
            .map(|j| {
                let fact: f64 = (1..=j).map(|i| i as f64).product();
                b.poly * (omegas[j - 1] * fact * ev.scale.powi(j as i32))
            })
            .collect();
        let direct = ev.assemble(&a).unwrap();
        assert!((flat.eval(b.s1) - direct).norm() < 1e-10 * direct.norm().max(1.0));
        assert!(ev.flatten(&omegas, 0).is_err());
        assert!(ev.flatten(&[0.0; 3], 1000).unwrap().is_empty());
    }
}
