//! Window integrals for the principal inequality, the exceptional set E,
//! value distribution of ζ′/ζ, the mollified mean square and zero counts.

use std::io::Write;
use std::time::Instant;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::dirichlet::DirichletPoly;
use crate::error::{Error, Result};
use crate::g_function::{build_G, build_G_star, MainTerm, MainTermKind};
use crate::params::ExperimentParams;
use crate::runge_mollifier::{
    conrey_c1r, interpolate_L_to, mollifier_M, mollifier_with, ConreyP, JordanRegion, Placement, RungeApprox, ShiftTarget,
};
use crate::selberg_dirichlet::{prime_powers_up_to, AEvaluator};
use crate::zeta_core::{find_zeros, zero_count_argument, zeta, zeta_with_derivative};

pub const REPORT_SCHEMA: u32 = 1;
/// Nodes with |F| below this are left out of the log integral.
pub const LOG_FLOOR: f64 = 1e-12;
/// |ℒ(A)| below this on E is reported as a near-zero division.
pub const L_FLOOR: f64 = 1e-12;
pub const SPLITTING_TOL: f64 = 1e-9;
const V_CUTOFF: u64 = 10_000_000;

/// Uniform nodes t_lo, t_lo + h, …, t_hi with the mask of E.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowGrid {
    pub t_lo: f64,
    pub t_hi: f64,
    pub step: f64,
    pub exceptional_mask: Vec<bool>,
}

impl WindowGrid {
    pub fn new(t_lo: f64, t_hi: f64, step: f64) -> Result<WindowGrid> {
        if !(step > 0.0 && t_lo.is_finite() && t_hi.is_finite() && t_hi > t_lo) {
            return Err(Error::Parameter(format!("bad window [{t_lo}, {t_hi}] with step {step}")));
        }
        let len = t_hi - t_lo;
        let panels = (len / step).round();
        if panels < 1.0 || (panels * step - len).abs() > 1e-9 * len {
            return Err(Error::Parameter(format!("window length {len} is not a multiple of step {step}")));
        }
        Ok(WindowGrid { t_lo, t_hi, step, exceptional_mask: vec![false; panels as usize + 1] })
    }

    pub fn len(&self) -> usize {
        self.exceptional_mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exceptional_mask.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.t_hi - self.t_lo
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.len() {
            self.t_hi
        } else {
            self.t_lo + i as f64 * self.step
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    /// Composite trapezoid weights; they sum to t_hi − t_lo.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| if i == 0 || i + 1 == n { 0.5 * self.step } else { self.step })
            .collect()
    }

    pub fn set_mask(&mut self, mask: Vec<bool>) -> Result<()> {
        if mask.len() != self.len() {
            return Err(Error::Parameter(format!("mask has {} entries for {} nodes", mask.len(), self.len())));
        }
        self.exceptional_mask = mask;
        Ok(())
    }

    pub fn masked_count(&self) -> usize {
        self.exceptional_mask.iter().filter(|&&m| m).count()
    }

    /// |E| with the trapezoid weights, so the split integrals add up exactly.
    pub fn measure_e(&self) -> f64 {
        self.weights()
            .iter()
            .zip(&self.exceptional_mask)
            .filter(|(_, &m)| m)
            .fold(0.0, |acc, (w, _)| acc + w)
    }

    /// Maximal runs of masked nodes as [first, last] ordinates.
    pub fn masked_runs(&self) -> Vec<[f64; 2]> {
        let mut runs = Vec::new();
        let mut start: Option<usize> = None;
        for (i, &m) in self.exceptional_mask.iter().enumerate() {
            match (m, start) {
                (true, None) => start = Some(i),
                (false, Some(a)) => {
                    runs.push([self.node(a), self.node(i - 1)]);
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(a) = start {
            runs.push([self.node(a), self.t_hi]);
        }
        runs
    }
}

/// F and ℒ(A) at one node; ℒ(A) = 1 when no ℒ factor is used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeValue {
    pub f: C64,
    pub l: C64,
}

impl NodeValue {
    pub fn plain(f: C64) -> NodeValue {
        NodeValue { f, l: C64::new(1.0, 0.0) }
    }
}

/// (1/|W|)∫log|F| against the bounds built from I, I_E, L_E.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Splitting {
    pub lhs: f64,
    /// (1 − ε_E) log I + ε_E log I_E + L_E
    pub rhs: f64,
    /// log I + ε_E log I_E + L_E
    pub rhs_stated: f64,
    pub holds: bool,
    pub holds_stated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsIntegrals {
    pub i: f64,
    pub i_e: f64,
    pub l_e: f64,
    pub eps_e: f64,
    /// I from every other node; None for an odd panel count.
    pub i_coarse: Option<f64>,
    pub richardson_error: Option<f64>,
    pub excluded_measure: f64,
    pub splitting: Splitting,
}

// w log v with 0 log 0 = 0
fn xlog(w: f64, v: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else {
        w * v.ln()
    }
}

fn vacuous_weight(eps_e: f64) -> f64 {
    if eps_e >= 1.0 {
        0.0
    } else {
        1.0
    }
}

struct Sums {
    i: f64,
    i_e: f64,
    l_e: f64,
    eps_e: f64,
}

fn split_sums(weights: &[f64], mask: &[bool], values: &[NodeValue], total: f64) -> Sums {
    let (mut wn, mut we, mut sn, mut se, mut sl) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((&w, &m), v) in weights.iter().zip(mask).zip(values) {
        if m {
            we += w;
            se += w * v.f.norm() / v.l.norm();
            sl += w * v.l.norm().ln();
        } else {
            wn += w;
            sn += w * v.f.norm();
        }
    }
    Sums {
        i: if wn > 0.0 { sn / wn } else { 0.0 },
        i_e: if we > 0.0 { se / we } else { 0.0 },
        l_e: sl / total,
        eps_e: we / total,
    }
}

/// Trapezoid values of I, I_E and L_E split by the grid mask.
pub fn integrals_from_values(grid: &WindowGrid, values: &[NodeValue]) -> Result<AbsIntegrals> {
    if values.len() != grid.len() {
        return Err(Error::Parameter(format!("{} values for {} nodes", values.len(), grid.len())));
    }
    for (i, v) in values.iter().enumerate() {
        if !(v.f.re.is_finite() && v.f.im.is_finite() && v.l.re.is_finite() && v.l.im.is_finite()) {
            return Err(Error::AccuracyLoss(format!("non-finite value at t = {}", grid.node(i))));
        }
        if grid.exceptional_mask[i] && v.l.norm() < L_FLOOR {
            return Err(Error::NearZero(format!("|L(A)| = {:e} at t = {} in E", v.l.norm(), grid.node(i))));
        }
    }
    let total = grid.length();
    let weights = grid.weights();
    let fine = split_sums(&weights, &grid.exceptional_mask, values, total);

    let panels = grid.len() - 1;
    let (i_coarse, richardson_error) = if panels.is_multiple_of(2) && panels >= 2 {
        let idx: Vec<usize> = (0..grid.len()).step_by(2).collect();
        let m = idx.len();
        let w2: Vec<f64> = (0..m)
            .map(|k| if k == 0 || k + 1 == m { grid.step } else { 2.0 * grid.step })
            .collect();
        let mask2: Vec<bool> = idx.iter().map(|&i| grid.exceptional_mask[i]).collect();
        let v2: Vec<NodeValue> = idx.iter().map(|&i| values[i]).collect();
        let coarse = split_sums(&w2, &mask2, &v2, total);
        (Some(coarse.i), Some((fine.i - coarse.i).abs() / 3.0))
    } else {
        (None, None)
    };

    let mut lhs = 0.0;
    let mut excluded = 0.0;
    for (&w, v) in weights.iter().zip(values) {
        let a = v.f.norm();
        if a < LOG_FLOOR {
            excluded += w;
        } else {
            lhs += w * a.ln();
        }
    }
    lhs /= total;
    let e_term = xlog(fine.eps_e, fine.i_e);
    let rhs = xlog(1.0 - fine.eps_e, fine.i) + e_term + fine.l_e;
    let rhs_stated = xlog(vacuous_weight(fine.eps_e), fine.i) + e_term + fine.l_e;
    Ok(AbsIntegrals {
        i: fine.i,
        i_e: fine.i_e,
        l_e: fine.l_e,
        eps_e: fine.eps_e,
        i_coarse,
        richardson_error,
        excluded_measure: excluded,
        splitting: Splitting {
            lhs,
            rhs,
            rhs_stated,
            holds: lhs <= rhs + SPLITTING_TOL,
            holds_stated: lhs <= rhs_stated + SPLITTING_TOL,
        },
    })
}

pub fn evaluate_nodes<F>(grid: &WindowGrid, eval: F) -> Result<Vec<NodeValue>>
where
    F: Fn(f64) -> Result<NodeValue> + Sync,
{
    grid.nodes().par_iter().map(|&t| eval(t)).collect()
}

#[allow(non_snake_case)]
pub fn integrate_abs_F<F>(grid: &WindowGrid, eval: F) -> Result<AbsIntegrals>
where
    F: Fn(f64) -> Result<NodeValue> + Sync,
{
    let values = evaluate_nodes(grid, eval)?;
    integrals_from_values(grid, &values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaBound {
    /// min(unclamped, 1)
    pub value: f64,
    pub unclamped: f64,
}

/// 1 − (2/R)(log I + ε_E log I_E + L_E). Vacuous terms drop out: I_E when
/// ε_E = 0 and I when ε_E = 1.
pub fn kappa_bound(r: f64, i: f64, i_e: f64, l_e: f64, eps_e: f64) -> Result<KappaBound> {
    if !(r > 0.0) {
        return Err(Error::Parameter(format!("R = {r} must be positive")));
    }
    let unclamped = 1.0 - 2.0 / r * (xlog(vacuous_weight(eps_e), i) + xlog(eps_e, i_e) + l_e);
    Ok(KappaBound { value: unclamped.min(1.0), unclamped })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalMeasure {
    /// |E|/|W|
    pub eps_e: f64,
    pub measure: f64,
    /// Parts of |E|/|W| from A outside U and A inside the notch.
    pub outside_square: f64,
    pub in_notch: f64,
    pub intervals: usize,
}

/// Marks nodes where A ∉ 𝒞 and measures E.
pub fn exceptional_mask_from_values(grid: &mut WindowGrid, a: &[C64], region: &JordanRegion) -> Result<ExceptionalMeasure> {
    if a.len() != grid.len() {
        return Err(Error::Parameter(format!("{} values of A for {} nodes", a.len(), grid.len())));
    }
    let place: Vec<Placement> = a.iter().map(|&z| region.classify(z)).collect();
    grid.set_mask(place.iter().map(|&p| p != Placement::Inside).collect())?;
    let total = grid.length();
    let weights = grid.weights();
    let part = |which: Placement| -> f64 {
        weights.iter().zip(&place).filter(|(_, &p)| p == which).fold(0.0, |acc, (w, _)| acc + w) / total
    };
    let measure = grid.measure_e();
    Ok(ExceptionalMeasure {
        eps_e: measure / total,
        measure,
        outside_square: part(Placement::OutsideSquare),
        in_notch: part(Placement::InNotch),
        intervals: grid.masked_runs().len(),
    })
}

pub fn exceptional_mask<F>(grid: &mut WindowGrid, a: F, region: &JordanRegion) -> Result<ExceptionalMeasure>
where
    F: Fn(f64) -> Result<C64> + Sync,
{
    let vals: Vec<C64> = grid.nodes().par_iter().map(|&t| a(t)).collect::<Result<_>>()?;
    exceptional_mask_from_values(grid, &vals, region)
}

/// V = ½ Σ Λ(n)² n^{−2σ} summed to 10⁷, with an estimate of the tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LesterVariance {
    pub sigma: f64,
    pub v: f64,
    pub truncated: f64,
    pub tail: f64,
    pub cutoff: u64,
}

pub fn lester_v(sigma: f64) -> Result<LesterVariance> {
    if !(sigma > 0.5) {
        return Err(Error::Domain(format!("V needs sigma > 1/2, got {sigma}")));
    }
    let truncated: f64 = 0.5
        * prime_powers_up_to(V_CUTOFF)
            .iter()
            .map(|&(n, lam)| lam * lam * (n as f64).powf(-2.0 * sigma))
            .sum::<f64>();
    // prime density 1/log u: ∫_N^∞ log u · u^{−2σ} du
    let e = 2.0 * sigma - 1.0;
    let n = V_CUTOFF as f64;
    let tail = 0.5 * n.powf(-e) * (n.ln() / e + 1.0 / (e * e));
    Ok(LesterVariance { sigma, v: truncated + tail, truncated, tail, cutoff: V_CUTOFF })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectangleHistogram {
    /// Bin edges shared by both axes.
    pub edges: Vec<f64>,
    /// Fractions of samples, indexed [re bin][im bin].
    pub empirical: Vec<Vec<f64>>,
    pub law: Vec<Vec<f64>>,
    pub max_abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueHistogram {
    pub v: f64,
    pub samples: usize,
    pub radii: Vec<f64>,
    pub empirical_cdf: Vec<f64>,
    /// 1 − e^{−r²/2}
    pub law_cdf: Vec<f64>,
    /// Exact Kolmogorov distance of the radial sample to the law.
    pub sup_distance: f64,
    pub rectangle: Option<RectangleHistogram>,
}

impl ValueHistogram {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["r", "empirical", "law"])?;
        for ((r, e), l) in self.radii.iter().zip(&self.empirical_cdf).zip(&self.law_cdf) {
            out.write_record([r.to_string(), e.to_string(), l.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn disk_law(r: f64) -> f64 {
    -(-0.5 * r * r).exp_m1()
}

fn normal_mass(a: f64, b: f64) -> f64 {
    let s = std::f64::consts::SQRT_2;
    0.5 * (erf(b / s) - erf(a / s))
}

/// Radial CDF of values/√V against 1 − e^{−r²/2}, optionally with the
/// 2-D histogram on [−3, 3]² against the standard Gaussian.
pub fn histogram_from_values(values: &[C64], v_norm: f64, rectangle_bins: Option<usize>) -> Result<ValueHistogram> {
    if !(v_norm > 0.0) {
        return Err(Error::Parameter(format!("normalizer V = {v_norm} must be positive")));
    }
    if values.is_empty() {
        return Err(Error::Parameter("no samples".into()));
    }
    let scale = v_norm.sqrt();
    let z: Vec<C64> = values.iter().map(|v| v / scale).collect();
    let mut r: Vec<f64> = z.iter().map(|v| v.norm()).collect();
    r.sort_by(f64::total_cmp);
    let n = r.len() as f64;
    let sup_distance = r
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let law = disk_law(x);
            (i as f64 / n - law).abs().max(((i + 1) as f64 / n - law).abs())
        })
        .fold(0.0, f64::max);
    let radii: Vec<f64> = (0..=80).map(|k| k as f64 * 0.05).collect();
    let empirical_cdf = radii
        .iter()
        .map(|&x| r.partition_point(|&y| y <= x) as f64 / n)
        .collect();
    let law_cdf = radii.iter().map(|&x| disk_law(x)).collect();
    let rectangle = rectangle_bins.map(|bins| {
        let edges: Vec<f64> = (0..=bins).map(|k| -3.0 + 6.0 * k as f64 / bins as f64).collect();
        let bin_of = |x: f64| -> Option<usize> {
            if !(-3.0..3.0).contains(&x) {
                return None;
            }
            Some((((x + 3.0) / 6.0 * bins as f64) as usize).min(bins - 1))
        };
        let mut empirical = vec![vec![0.0; bins]; bins];
        for v in &z {
            if let (Some(a), Some(b)) = (bin_of(v.re), bin_of(v.im)) {
                empirical[a][b] += 1.0 / n;
            }
        }
        let mass: Vec<f64> = edges.windows(2).map(|e| normal_mass(e[0], e[1])).collect();
        let law: Vec<Vec<f64>> = mass.iter().map(|&a| mass.iter().map(|&b| a * b).collect()).collect();
        let max_abs_diff = empirical
            .iter()
            .flatten()
            .zip(law.iter().flatten())
            .map(|(e, l)| (e - l).abs())
            .fold(0.0, f64::max);
        RectangleHistogram { edges, empirical, law, max_abs_diff }
    });
    Ok(ValueHistogram { v: v_norm, samples: values.len(), radii, empirical_cdf, law_cdf, sup_distance, rectangle })
}

pub fn value_histogram<F>(grid: &WindowGrid, eval: F, v_norm: f64) -> Result<ValueHistogram>
where
    F: Fn(f64) -> Result<C64> + Sync,
{
    let vals: Vec<C64> = grid.nodes().par_iter().map(|&t| eval(t)).collect::<Result<_>>()?;
    histogram_from_values(&vals, v_norm, None)
}

/// ζ′/ζ(σ + it) on the grid against the disk law, V from `lester_v(σ)`.
pub fn log_derivative_histogram(grid: &WindowGrid, sigma: f64, rectangle_bins: Option<usize>) -> Result<ValueHistogram> {
    let v = lester_v(sigma)?;
    let vals: Vec<C64> = grid
        .nodes()
        .par_iter()
        .map(|&t| {
            let (z, dz) = zeta_with_derivative(C64::new(sigma, t))?;
            Ok(dz / z)
        })
        .collect::<Result<_>>()?;
    histogram_from_values(&vals, v.v, rectangle_bins)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanSquareResult {
    pub r_bar: f64,
    pub theta: f64,
    pub t_big: f64,
    pub window: [f64; 2],
    pub step: f64,
    /// ½ + R̄/log T
    pub sigma: f64,
    pub ratio: f64,
    pub ratio_coarse: f64,
    pub c1r: f64,
    pub relative_gap: f64,
}

/// (1/W)∫|ζ(σ + it)|²|M(it)|² dt by the trapezoid rule, M ≡ 1 when absent.
/// Also returns the value from every other node. The panel count must be even.
pub fn mean_square_integral(
    sigma: f64,
    mollifier: Option<&DirichletPoly>,
    t_lo: f64,
    t_hi: f64,
    step: f64,
) -> Result<(f64, f64)> {
    let grid = WindowGrid::new(t_lo, t_hi, step)?;
    if (grid.len() - 1) % 2 != 0 {
        return Err(Error::Parameter("mean-square grid needs an even panel count".into()));
    }
    let vals: Vec<f64> = grid
        .nodes()
        .par_iter()
        .map(|&t| {
            let z = zeta(C64::new(sigma, t))?.norm_sqr();
            let m = mollifier.map_or(1.0, |p| p.eval(C64::new(0.0, t)).norm_sqr());
            Ok(z * m)
        })
        .collect::<Result<_>>()?;
    let w = grid.weights();
    let fine: f64 = vals.iter().zip(&w).map(|(v, w)| v * w).sum::<f64>() / grid.length();
    let m = vals.len().div_ceil(2);
    let coarse: f64 = vals
        .iter()
        .step_by(2)
        .enumerate()
        .map(|(k, v)| v * if k == 0 || k + 1 == m { step } else { 2.0 * step })
        .sum::<f64>()
        / grid.length();
    Ok((fine, coarse))
}

pub const MEAN_SQUARE_STEP: f64 = 0.1;

/// Mollified mean square of ζ at ½ + R̄/log T over [T, T + window] with
/// P(x) = sinh(θR̄(1 − x/θ))/sinh(θR̄), compared to c(1, R̄).
pub fn mean_square_experiment(r_bar: f64, theta: f64, t_big: f64, window: f64) -> Result<MeanSquareResult> {
    mean_square_experiment_with_step(r_bar, theta, t_big, window, MEAN_SQUARE_STEP)
}

pub fn mean_square_experiment_with_step(
    r_bar: f64,
    theta: f64,
    t_big: f64,
    window: f64,
    step: f64,
) -> Result<MeanSquareResult> {
    if window < 1e3 {
        return Err(Error::Parameter(format!("window {window} shorter than 1000")));
    }
    if t_big.powf(theta) > 1e7 {
        return Err(Error::Parameter("T^theta above 1e7".into()));
    }
    let c1r = conrey_c1r(r_bar, theta)?;
    let p = ConreyP::new(theta * r_bar, theta)?;
    let log_t = t_big.ln();
    // evaluated at it: coefficients μ(m)P(log m/log T) m^{−1/2}
    let m = mollifier_with(t_big, theta, 0.5, |x| p.eval_exact(x))?;
    let sigma = 0.5 + r_bar / log_t;
    let (ratio, ratio_coarse) = mean_square_integral(sigma, Some(&m), t_big, t_big + window, step)?;
    Ok(MeanSquareResult {
        r_bar,
        theta,
        t_big,
        window: [t_big, t_big + window],
        step,
        sigma,
        ratio,
        ratio_coarse,
        c1r,
        relative_gap: (ratio - c1r).abs() / c1r,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroProportion {
    pub window: [f64; 2],
    /// Argument-principle count N(t_hi) − N(t_lo), before rounding.
    pub n_argument: f64,
    pub n: i64,
    pub n0: usize,
    pub ratio: f64,
    pub consistent: bool,
}

/// N from the argument principle, N₀ from sign changes of Z.
pub fn zero_proportion_check(t_lo: f64, t_hi: f64) -> Result<ZeroProportion> {
    if !(t_lo <= t_hi) {
        return Err(Error::Domain(format!("inverted window [{t_lo}, {t_hi}]")));
    }
    if t_lo == t_hi {
        return Ok(ZeroProportion { window: [t_lo, t_hi], n_argument: 0.0, n: 0, n0: 0, ratio: 1.0, consistent: true });
    }
    let n_argument = zero_count_argument(t_hi)? - zero_count_argument(t_lo)?;
    let n = n_argument.round() as i64;
    let n0 = find_zeros(t_lo, t_hi)?.len();
    let ratio = if n == 0 { 1.0 } else { n0 as f64 / n as f64 };
    let consistent = n == n0 as i64 && (n_argument - n as f64).abs() < 0.1;
    if !consistent {
        log::warn!("zero counts disagree on [{t_lo}, {t_hi}]: N = {n_argument:.4}, N0 = {n0}");
    }
    Ok(ZeroProportion { window: [t_lo, t_hi], n_argument, n, n0, ratio, consistent })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Principal,
    MeanSquare,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Toggles {
    pub experiment: Experiment,
    pub main_term: MainTermKind,
    pub mollifier: bool,
    /// Compute A on the grid and mask E.
    pub exceptional: bool,
    /// Multiply F by ℒ(A); needs `exceptional`.
    pub runge: bool,
    /// Value enforced for ℒ(0).
    pub shift_target: ShiftTarget,
    /// Evaluate the main term with the coefficient shift δ.
    pub delta_option: bool,
    pub histogram: bool,
    pub zero_check: bool,
}

impl Default for Toggles {
    fn default() -> Self {
        Toggles {
            experiment: Experiment::Principal,
            main_term: MainTermKind::G,
            mollifier: true,
            exceptional: true,
            runge: true,
            shift_target: ShiftTarget::C0,
            delta_option: false,
            histogram: false,
            zero_check: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    /// Defaults to T.
    pub t_lo: Option<f64>,
    pub length: f64,
    pub step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { t_lo: None, length: 2000.0, step: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeanSquareSpec {
    pub r_bar: f64,
    pub theta: f64,
    pub t_big: f64,
    pub window: f64,
    pub step: f64,
}

impl Default for MeanSquareSpec {
    fn default() -> Self {
        MeanSquareSpec { r_bar: 4.0, theta: 0.4, t_big: 1e4, window: 5000.0, step: MEAN_SQUARE_STEP }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HistogramSpec {
    /// σ = ½ + offset/log T
    pub sigma_offset: f64,
    pub rectangle_bins: Option<usize>,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        HistogramSpec { sigma_offset: 3.0, rectangle_bins: Some(12) }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub params: ExperimentParams,
    pub grid: GridSpec,
    pub toggles: Toggles,
    /// ω_j for A_j; missing entries are 1.
    pub omegas: Vec<f64>,
    pub mean_square: MeanSquareSpec,
    pub histogram: HistogramSpec,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let c: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.toggles.runge && !self.toggles.exceptional {
            return Err(Error::Config("toggles.runge needs toggles.exceptional".into()));
        }
        if !(self.grid.step > 0.0 && self.grid.length > 0.0) {
            return Err(Error::Config("grid step and length must be positive".into()));
        }
        Ok(())
    }

    /// Classical Levinson setting: G from q at α = 2, mollifier at θ = 0.45,
    /// no A or ℒ, window [T, T + 2000] with unit step.
    pub fn levinson_desk() -> RunConfig {
        RunConfig {
            params: ExperimentParams { alpha: 2.0, ..ExperimentParams::default() },
            toggles: Toggles { exceptional: false, runge: false, ..Toggles::default() },
            ..RunConfig::default()
        }
    }

    /// Mollified mean square at R̄ = 4, θ = 0.4, T = 10⁴ over a 5000 window.
    pub fn mean_square_desk() -> RunConfig {
        RunConfig {
            toggles: Toggles { experiment: Experiment::MeanSquare, ..Toggles::default() },
            ..RunConfig::default()
        }
    }

    pub fn window(&self) -> Result<WindowGrid> {
        let lo = self.grid.t_lo.unwrap_or(self.params.t_big);
        WindowGrid::new(lo, lo + self.grid.length, self.grid.step)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub t_lo: f64,
    pub t_hi: f64,
    pub step: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RungeSummary {
    pub n: usize,
    pub z0: C64,
    pub uniform_error: f64,
    pub interpolation_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrincipalReport {
    pub grid: GridSummary,
    pub integrals: AbsIntegrals,
    pub kappa_bound: f64,
    pub kappa_unclamped: f64,
    /// Argument-principle count on the window.
    pub n_window: f64,
    /// max(κ, 0) · N_window
    pub n00_estimate: f64,
    pub exceptional: Option<ExceptionalMeasure>,
    pub runge: Option<RungeSummary>,
    pub histogram: Option<ValueHistogram>,
    pub zero_check: Option<ZeroProportion>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub t: f64,
    pub f_re: f64,
    pub f_im: f64,
    pub l_abs: f64,
    pub in_e: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub experiment: Experiment,
    pub config: RunConfig,
    pub principal: Option<PrincipalReport>,
    pub mean_square: Option<MeanSquareResult>,
    pub timing: Timing,
    #[serde(skip)]
    pub profile: Vec<ProfileRow>,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// JSON with timing zeroed, for reproducibility comparisons.
    pub fn to_json_without_timing(&self) -> Result<String> {
        let mut r = self.clone();
        r.timing = Timing::default();
        r.to_json()
    }

    pub fn write_profile_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for row in &self.profile {
            out.serialize(row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// F(a + it) = main(s) M(s) ℒ(A(σ + Δσ + it)) with the pieces chosen by the toggles.
pub struct PrincipalEvaluator {
    a: f64,
    main: MainTerm,
    delta_option: bool,
    mollifier: Option<DirichletPoly>,
    a_eval: Option<AEvaluator>,
    omegas: Vec<f64>,
    pub runge: Option<RungeApprox>,
    pub region: Option<JordanRegion>,
}

/// F, ℒ(A) and A at one node.
#[derive(Debug, Clone, Copy)]
pub struct PrincipalNode {
    pub value: NodeValue,
    pub a: Option<C64>,
}

impl PrincipalEvaluator {
    pub fn new(config: &RunConfig) -> Result<PrincipalEvaluator> {
        config.validate()?;
        let p = &config.params;
        let tg = &config.toggles;
        let main = match tg.main_term {
            MainTermKind::G => build_G(p.alpha, p.t_big, p.k_terms, p.m_terms)?,
            MainTermKind::GStar => build_G_star(p.alpha, p.t_big, p.r, p.k_cal)?,
        };
        let mollifier = if tg.mollifier { Some(mollifier_M(p)?) } else { None };
        let (a_eval, region) = if tg.exceptional {
            (Some(AEvaluator::new(p)?), Some(JordanRegion::from_params(p)?))
        } else {
            (None, None)
        };
        let runge = match (&region, tg.runge) {
            (Some(reg), true) => {
                let target = tg.shift_target.value(p)?;
                Some(interpolate_L_to(reg, p.runge_n, p.c0(), p.m_tilde(), target)?)
            }
            _ => None,
        };
        Ok(PrincipalEvaluator {
            a: p.a(),
            main,
            delta_option: tg.delta_option,
            mollifier,
            a_eval,
            omegas: config.omegas.clone(),
            runge,
            region,
        })
    }

    pub fn node(&self, t: f64) -> Result<PrincipalNode> {
        let s = C64::new(self.a, t);
        let g = if self.delta_option { self.main.eval_with_delta(s) } else { self.main.eval(s) };
        let m = self.mollifier.as_ref().map_or(C64::new(1.0, 0.0), |p| p.eval(s));
        let a = self.a_eval.as_ref().map(|e| e.eval(t, &self.omegas)).transpose()?;
        let l = match (&self.runge, a) {
            (Some(r), Some(a)) => r.eval(a),
            _ => C64::new(1.0, 0.0),
        };
        Ok(PrincipalNode { value: NodeValue { f: g * m * l, l }, a })
    }
}

fn run_principal(config: &RunConfig) -> Result<(PrincipalReport, Vec<ProfileRow>)> {
    let p = &config.params;
    let ev = PrincipalEvaluator::new(config)?;
    let mut grid = config.window()?;
    let nodes: Vec<PrincipalNode> = grid.nodes().par_iter().map(|&t| ev.node(t)).collect::<Result<_>>()?;
    let exceptional = match &ev.region {
        Some(region) => {
            let a: Vec<C64> = nodes.iter().map(|n| n.a.expect("A evaluated with the region")).collect();
            Some(exceptional_mask_from_values(&mut grid, &a, region)?)
        }
        None => None,
    };
    let values: Vec<NodeValue> = nodes.iter().map(|n| n.value).collect();
    let integrals = integrals_from_values(&grid, &values)?;
    let kappa = kappa_bound(p.r, integrals.i, integrals.i_e, integrals.l_e, integrals.eps_e)?;
    let n_window = zero_count_argument(grid.t_hi)? - zero_count_argument(grid.t_lo)?;
    let runge = match (&ev.runge, &ev.region) {
        (Some(r), Some(reg)) => Some(RungeSummary {
            n: r.nodes.degree,
            z0: r.z0,
            uniform_error: r.uniform_error(reg),
            interpolation_error: r.interpolation_error(reg),
        }),
        _ => None,
    };
    let histogram = if config.toggles.histogram {
        let sigma = 0.5 + config.histogram.sigma_offset / p.log_t();
        Some(log_derivative_histogram(&grid, sigma, config.histogram.rectangle_bins)?)
    } else {
        None
    };
    let zero_check = if config.toggles.zero_check {
        Some(zero_proportion_check(grid.t_lo, grid.t_hi)?)
    } else {
        None
    };
    let profile = grid
        .nodes()
        .iter()
        .zip(&values)
        .zip(&grid.exceptional_mask)
        .map(|((&t, v), &m)| ProfileRow { t, f_re: v.f.re, f_im: v.f.im, l_abs: v.l.norm(), in_e: m })
        .collect();
    let report = PrincipalReport {
        grid: GridSummary { t_lo: grid.t_lo, t_hi: grid.t_hi, step: grid.step, nodes: grid.len() },
        integrals,
        kappa_bound: kappa.value,
        kappa_unclamped: kappa.unclamped,
        n_window,
        n00_estimate: kappa.value.max(0.0) * n_window,
        exceptional,
        runge,
        histogram,
        zero_check,
    };
    Ok((report, profile))
}

/// Runs the experiment selected by `config.toggles.experiment`.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let start = Instant::now();
    let mut report = RunReport {
        schema: REPORT_SCHEMA,
        experiment: config.toggles.experiment,
        config: config.clone(),
        principal: None,
        mean_square: None,
        timing: Timing::default(),
        profile: Vec::new(),
    };
    match config.toggles.experiment {
        Experiment::Principal => {
            let (p, profile) = run_principal(config)?;
            report.principal = Some(p);
            report.profile = profile;
        }
        Experiment::MeanSquare => {
            let m = &config.mean_square;
            report.mean_square = Some(mean_square_experiment_with_step(m.r_bar, m.theta, m.t_big, m.window, m.step)?);
        }
    }
    report.timing = Timing { wall_seconds: start.elapsed().as_secs_f64(), threads: rayon::current_num_threads() };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::c0_alpha;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn grid_shape() {
        let g = WindowGrid::new(1.0, 2.0, 0.25).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g.nodes(), vec![1.0, 1.25, 1.5, 1.75, 2.0]);
        assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(WindowGrid::new(1.0, 2.0, 0.3).is_err());
        assert!(WindowGrid::new(2.0, 1.0, 0.5).is_err());
        let mut g = g;
        g.set_mask(vec![true, true, false, true, false]).unwrap();
        assert_eq!(g.masked_runs(), vec![[1.0, 1.25], [1.75, 1.75]]);
        assert!(g.set_mask(vec![true]).is_err());
    }

    #[test]
    fn constant_and_linear_integrands() {
        let g = WindowGrid::new(1.0, 2.0, 0.01).unwrap();
        let one = integrate_abs_F(&g, |_| Ok(NodeValue::plain(c(1.0, 0.0)))).unwrap();
        assert_eq!((one.i, one.i_e, one.l_e, one.eps_e), (1.0, 0.0, 0.0, 0.0));
        let lin = integrate_abs_F(&g, |t| Ok(NodeValue::plain(c(t, 0.0)))).unwrap();
        assert!((lin.i - 1.5).abs() < 1e-12);
        assert!(lin.richardson_error.unwrap() < 1e-12);
    }

    #[test]
    fn splitting_with_mask() {
        let mut g = WindowGrid::new(0.0, 10.0, 0.01).unwrap();
        let f = |t: f64| NodeValue { f: c(1.0 + 0.9 * (3.0 * t).sin(), 0.5 * t.cos()), l: c(2.0 + t.sin(), 0.3) };
        let mask = g.nodes().iter().map(|&t| (2.0..4.5).contains(&t) || t > 9.0).collect();
        g.set_mask(mask).unwrap();
        let r = integrate_abs_F(&g, |t| Ok(f(t))).unwrap();
        assert!(r.eps_e > 0.3 && r.eps_e < 0.4);
        assert!(r.splitting.holds, "{:?}", r.splitting);
        assert!(r.splitting.lhs < r.splitting.rhs);
        // the E part with ℒ removed equals the direct sum
        let w = g.weights();
        let direct: f64 = g
            .nodes()
            .iter()
            .zip(&w)
            .zip(&g.exceptional_mask)
            .filter(|(_, &m)| m)
            .map(|((&t, w), _)| w * f(t).l.norm().ln())
            .sum::<f64>()
            / 10.0;
        assert!((direct - r.l_e).abs() < 1e-14);
    }

    #[test]
    fn near_zero_l_on_e_rejected() {
        let mut g = WindowGrid::new(0.0, 1.0, 0.5).unwrap();
        g.set_mask(vec![false, true, false]).unwrap();
        let r = integrate_abs_F(&g, |_| Ok(NodeValue { f: c(1.0, 0.0), l: c(0.0, 0.0) }));
        assert!(matches!(r, Err(Error::NearZero(_))));
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa_bound(1.3, 1.0, 0.0, 0.0, 0.0).unwrap().value, 1.0);
        let k = kappa_bound(1.3, (0.65f64).exp(), 5.0, 0.0, 0.0).unwrap();
        assert!(k.value.abs() < 1e-15);
        let k = kappa_bound(1.3, 0.5, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(k.value, 1.0);
        assert!(k.unclamped > 1.0);
        assert!(kappa_bound(0.0, 1.0, 1.0, 0.0, 0.0).is_err());
        let all_e = kappa_bound(1.3, 0.0, 1.0, 0.65, 1.0).unwrap();
        assert!(all_e.unclamped.abs() < 1e-15);
    }

    #[test]
    fn mask_measures() {
        let p = ExperimentParams::default();
        let region = JordanRegion::from_params(&p).unwrap();
        let mut g = WindowGrid::new(0.0, 10.0, 1.0).unwrap();
        let all_in = exceptional_mask(&mut g, |_| Ok(c(-c0_alpha(8.0), 0.0)), &region).unwrap();
        assert_eq!(all_in.eps_e, 1.0);
        assert_eq!(all_in.in_notch, 1.0);
        assert_eq!(all_in.intervals, 1);
        let huge = JordanRegion::square(1e12);
        let none = exceptional_mask(&mut g, |t| Ok(c(t, -t)), &huge).unwrap();
        assert_eq!(none.eps_e, 0.0);
        let far = exceptional_mask(&mut g, |t| Ok(c(if t < 5.0 { 0.0 } else { 10.0 }, 0.0)), &region).unwrap();
        assert!((far.outside_square - 0.55).abs() < 1e-15);
    }

    #[test]
    fn histogram_limits() {
        let vals: Vec<C64> = (0..500).map(|k| C64::from_polar(0.1 + k as f64 * 0.007, k as f64)).collect();
        let h = histogram_from_values(&vals, 1.0, Some(6)).unwrap();
        assert_eq!(h.empirical_cdf[0], 0.0);
        assert_eq!(*h.empirical_cdf.last().unwrap(), 1.0);
        assert_eq!(h.law_cdf[0], 0.0);
        let law_total: f64 = h.rectangle.unwrap().law.iter().flatten().sum();
        assert!((law_total - normal_mass(-3.0, 3.0).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn variance_tail_small() {
        let v = lester_v(0.5 + 3.0 / 1e4f64.ln()).unwrap();
        assert!(v.tail / v.v < 0.01);
        assert!(v.v > 0.0);
        assert!(lester_v(0.5).is_err());
    }

    #[test]
    fn empty_zero_window() {
        let z = zero_proportion_check(50.0, 50.0).unwrap();
        assert_eq!(z.ratio, 1.0);
        assert!(zero_proportion_check(2.0, 1.0).is_err());
    }

    #[test]
    fn config_rejects_unknown_and_inconsistent() {
        assert!(RunConfig::from_json(r#"{"nope": 1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"toggles": {"runge": true, "exceptional": false}}"#).is_err());
        let c = RunConfig::from_json(r#"{"params": {"alpha": 3.0}}"#).unwrap();
        assert_eq!(c.params.alpha, 3.0);
        assert_eq!(c.window().unwrap().len(), 2001);
    }
}
