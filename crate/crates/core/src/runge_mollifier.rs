//! The notched square 𝒞, Leja interpolation of 𝓜̃/(c₀ + w), the shifted
//! polynomial ℒ, the mollifier M(s) and the mean-square constant c(1, R̄).

use std::io::Write;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dirichlet::DirichletPoly;
use crate::error::{Error, Result};
use crate::params::ExperimentParams;
use crate::quad::{self, AdaptiveOpts};
use crate::selberg_dirichlet::moebius_table;
use crate::tanh_approx::build_q;

pub const DEFAULT_BOUNDARY_SAMPLES: usize = 20_000;
pub const ERROR_GRID: usize = 1000;
const ON_BOUNDARY_TOL: f64 = 1e-9;
const MOLLIFIER_LIMIT: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: C64,
    pub b: C64,
}

impl Segment {
    fn at(&self, t: f64) -> C64 {
        self.a + (self.b - self.a) * t
    }

    fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    fn distance(&self, z: C64) -> f64 {
        let d = self.b - self.a;
        let l2 = d.norm_sqr();
        let t = if l2 == 0.0 { 0.0 } else { ((z - self.a) * d.conj()).re / l2 };
        (z - self.at(t.clamp(0.0, 1.0))).norm()
    }
}

// Convex polygon as counterclockwise vertices.
#[derive(Debug, Clone)]
struct Convex(Vec<C64>);

impl Convex {
    fn rect(x0: f64, x1: f64, y0: f64, y1: f64) -> Convex {
        Convex(vec![C64::new(x0, y0), C64::new(x1, y0), C64::new(x1, y1), C64::new(x0, y1)])
    }

    fn edges(&self) -> Vec<Segment> {
        let n = self.0.len();
        (0..n).map(|i| Segment { a: self.0[i], b: self.0[(i + 1) % n] }).collect()
    }

    /// Parameter interval of `s` inside the closed polygon (Cyrus–Beck).
    fn clip(&self, s: &Segment) -> Option<(f64, f64)> {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let d = s.b - s.a;
        for e in self.edges() {
            let edge = e.b - e.a;
            // inward normal for CCW order
            let n = C64::new(-edge.im, edge.re);
            let num = ((s.a - e.a) * n.conj()).re;
            let den = (d * n.conj()).re;
            if den.abs() < 1e-300 {
                if num < -1e-12 {
                    return None;
                }
                continue;
            }
            let t = -num / den;
            if den > 0.0 {
                lo = lo.max(t);
            } else {
                hi = hi.min(t);
            }
        }
        (hi - lo > 1e-15).then_some((lo, hi))
    }

    fn on_boundary(&self, z: C64, tol: f64) -> bool {
        self.edges().iter().any(|e| e.distance(z) < tol)
    }
}

// Parts of `s` outside every polygon in `cut`.
fn subtract(s: Segment, cut: &[&Convex]) -> Vec<Segment> {
    let mut keep = vec![(0.0, 1.0)];
    for p in cut {
        if let Some((a, b)) = p.clip(&s) {
            keep = keep
                .into_iter()
                .flat_map(|(lo, hi): (f64, f64)| {
                    let mut v = Vec::new();
                    if a > lo {
                        v.push((lo, a.min(hi)));
                    }
                    if b < hi {
                        v.push((b.max(lo), hi));
                    }
                    v
                })
                .filter(|(lo, hi)| hi - lo > 1e-12)
                .collect();
        }
    }
    keep.into_iter().map(|(lo, hi)| Segment { a: s.at(lo), b: s.at(hi) }).collect()
}

/// Where a point sits relative to 𝒞.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Placement {
    Inside,
    OutsideSquare,
    InNotch,
}

/// 𝒞 = U ∖ S_{ε₀,ε₁}: the square U = [−V, V]² minus the notch about −c₀,
/// rotated by `rotation`. With `notched = false` it is U itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JordanRegion {
    pub v_half: f64,
    pub c0: f64,
    pub eps0: f64,
    pub eps1: f64,
    pub rotation: f64,
    pub notched: bool,
    pub boundary: Vec<Segment>,
}

impl JordanRegion {
    pub fn new(v_half: f64, c0: f64, eps0: f64, eps1: f64, rotation: f64) -> Result<JordanRegion> {
        if !(eps0 >= eps1 && eps1 > 0.0) {
            return Err(Error::DegenerateRegion(format!("need eps0 >= eps1 > 0, got {eps0}, {eps1}")));
        }
        if !(v_half > 0.0 && c0 + eps0 * v_half < v_half) {
            return Err(Error::DegenerateRegion(format!(
                "c0 + eps0 V = {} must be below V = {v_half}",
                c0 + eps0 * v_half
            )));
        }
        let mut r = JordanRegion { v_half, c0, eps0, eps1, rotation, notched: true, boundary: Vec::new() };
        r.boundary = r.trace_boundary();
        Ok(r)
    }

    pub fn square(v_half: f64) -> JordanRegion {
        let mut r = JordanRegion {
            v_half,
            c0: 0.0,
            eps0: 0.0,
            eps1: 0.0,
            rotation: 0.0,
            notched: false,
            boundary: Vec::new(),
        };
        r.boundary = r.trace_boundary();
        r
    }

    pub fn from_params(p: &ExperimentParams) -> Result<JordanRegion> {
        JordanRegion::new(p.v_half, p.c0(), p.eps0, p.eps1, p.rotation)
    }

    fn to_local(&self, z: C64) -> C64 {
        C64::from_polar(1.0, -self.rotation) * (z + self.c0) - self.c0
    }

    fn rotated_back(&self, u: C64) -> C64 {
        C64::from_polar(1.0, self.rotation) * (u + self.c0) - self.c0
    }

    // The two notch rectangles in the unrotated frame.
    fn notch_rects(&self) -> (Convex, Convex) {
        let v = self.v_half;
        let left = -self.c0 - self.eps0 * v;
        (
            Convex::rect(left, -self.c0 + self.eps1 * v, -self.eps0 * v, self.eps0 * v),
            Convex::rect(-v, left, -self.eps1 * v, self.eps1 * v),
        )
    }

    fn square_local(&self) -> Convex {
        let v = self.v_half;
        Convex(
            [C64::new(-v, -v), C64::new(v, -v), C64::new(v, v), C64::new(-v, v)]
                .iter()
                .map(|&z| self.to_local(z))
                .collect(),
        )
    }

    fn trace_boundary(&self) -> Vec<Segment> {
        let u = self.square_local();
        if !self.notched {
            return u.edges().into_iter().map(|e| Segment { a: self.rotated_back(e.a), b: self.rotated_back(e.b) }).collect();
        }
        let (r1, r2) = self.notch_rects();
        let mut out = Vec::new();
        for e in u.edges() {
            out.extend(subtract(e, &[&r1, &r2]));
        }
        let scale = self.v_half;
        for (rect, other) in [(&r1, &r2), (&r2, &r1)] {
            for e in rect.edges() {
                for piece in subtract(e, &[other]) {
                    if let Some((lo, hi)) = u.clip(&piece) {
                        let inside = Segment { a: piece.at(lo), b: piece.at(hi) };
                        if !u.on_boundary(inside.at(0.5), 1e-12 * scale) {
                            out.push(inside);
                        }
                    }
                }
            }
        }
        out.into_iter()
            .map(|s| Segment { a: self.rotated_back(s.a), b: self.rotated_back(s.b) })
            .collect()
    }

    /// Segment endpoints, deduplicated.
    pub fn vertices(&self) -> Vec<C64> {
        let mut v: Vec<C64> = Vec::new();
        for s in &self.boundary {
            for p in [s.a, s.b] {
                if !v.iter().any(|q| (q - p).norm() < 1e-12) {
                    v.push(p);
                }
            }
        }
        v
    }

    /// Membership in the closed region, from the set-builder description.
    pub fn contains(&self, z: C64) -> bool {
        self.classify(z) == Placement::Inside
    }

    pub fn classify(&self, z: C64) -> Placement {
        let v = self.v_half;
        if z.re.abs() > v || z.im.abs() > v {
            return Placement::OutsideSquare;
        }
        if !self.notched {
            return Placement::Inside;
        }
        let u = self.to_local(z);
        let left = -self.c0 - self.eps0 * v;
        let in1 = u.re > left && u.re < -self.c0 + self.eps1 * v && u.im.abs() < self.eps0 * v;
        let in2 = u.re >= -v && u.re <= left && u.im.abs() < self.eps1 * v;
        if in1 || in2 {
            Placement::InNotch
        } else {
            Placement::Inside
        }
    }

    pub fn distance_to_boundary(&self, z: C64) -> f64 {
        self.boundary.iter().map(|s| s.distance(z)).fold(f64::INFINITY, f64::min)
    }

    pub fn on_boundary(&self, z: C64) -> bool {
        self.distance_to_boundary(z) < ON_BOUNDARY_TOL
    }

    pub fn perimeter(&self) -> f64 {
        self.boundary.iter().map(Segment::length).sum()
    }

    /// About `m` boundary points: every vertex plus points spread by arc length.
    pub fn sample_boundary(&self, m: usize) -> Vec<C64> {
        let per = self.perimeter();
        let mut out = Vec::with_capacity(m + self.boundary.len());
        for s in &self.boundary {
            let k = ((s.length() / per) * m as f64).ceil().max(1.0) as usize;
            for i in 0..k {
                out.push(s.at(i as f64 / k as f64));
            }
        }
        let mut v = Vec::with_capacity(out.len());
        for p in out {
            if v.last().is_none_or(|q: &C64| (q - p).norm() > 1e-14) {
                v.push(p);
            }
        }
        v
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InterpolationSet {
    pub nodes: Vec<C64>,
    pub degree: usize,
}

/// Greedy Leja sequence on a sample set, starting at max |z| (first index on ties).
pub fn leja_from_samples(samples: &[C64], n: usize) -> Result<InterpolationSet> {
    if n == 0 || n > samples.len() {
        return Err(Error::Parameter(format!("n = {n} with {} samples", samples.len())));
    }
    let rmax = samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let first = samples
        .iter()
        .position(|z| z.norm() >= rmax * (1.0 - 1e-12))
        .expect("nonempty");
    let mut nodes = vec![samples[first]];
    let mut score: Vec<f64> = samples.iter().map(|z| (z - samples[first]).norm().ln()).collect();
    while nodes.len() < n {
        let mut best = 0;
        for (i, &v) in score.iter().enumerate() {
            if v > score[best] {
                best = i;
            }
        }
        if score[best] == f64::NEG_INFINITY {
            return Err(Error::Parameter("sample set exhausted".into()));
        }
        let z = samples[best];
        nodes.push(z);
        score.par_iter_mut().zip(samples.par_iter()).for_each(|(sc, w)| *sc += (w - z).norm().ln());
    }
    Ok(InterpolationSet { nodes, degree: n })
}

pub fn leja_points(region: &JordanRegion, n: usize) -> Result<InterpolationSet> {
    if n > 200 {
        return Err(Error::Parameter(format!("n = {n} > 200")));
    }
    leja_from_samples(&region.sample_boundary(DEFAULT_BOUNDARY_SAMPLES), n)
}

/// p(z) = Σ_k c_k Π_{i<k} (z − x_i).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NewtonPoly {
    pub nodes: Vec<C64>,
    pub coeffs: Vec<C64>,
}

impl NewtonPoly {
    pub fn interpolate<F: Fn(C64) -> C64>(nodes: &[C64], f: F) -> NewtonPoly {
        let n = nodes.len();
        let mut c: Vec<C64> = nodes.iter().map(|&z| f(z)).collect();
        for j in 1..n {
            for i in (j..n).rev() {
                c[i] = (c[i] - c[i - 1]) / (nodes[i] - nodes[i - j]);
            }
        }
        NewtonPoly { nodes: nodes.to_vec(), coeffs: c }
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.eval_with_derivative(z).0
    }

    pub fn eval_with_derivative(&self, z: C64) -> (C64, C64) {
        let n = self.coeffs.len();
        let mut p = self.coeffs[n - 1];
        let mut dp = C64::new(0.0, 0.0);
        for k in (0..n - 1).rev() {
            dp = dp * (z - self.nodes[k]) + p;
            p = p * (z - self.nodes[k]) + self.coeffs[k];
        }
        (p, dp)
    }

    /// Monomial coefficients of p(z + shift).
    pub fn to_monomial(&self, shift: C64) -> Vec<C64> {
        let n = self.coeffs.len();
        let mut m = vec![C64::new(0.0, 0.0); n];
        m[0] = self.coeffs[n - 1];
        for (deg, k) in (0..n - 1).rev().enumerate() {
            // m ← m·(z + shift − x_k) + c_k
            let a = shift - self.nodes[k];
            let mut next = vec![C64::new(0.0, 0.0); n];
            for i in 0..=deg {
                next[i + 1] += m[i];
                next[i] += m[i] * a;
            }
            next[0] += self.coeffs[k];
            m = next;
        }
        m
    }
}

/// ℒ(w) = p_n(w + z₀) with p_n interpolating 𝓜̃/(c₀ + w) at Leja nodes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RungeApprox {
    pub c0: f64,
    pub m_tilde: f64,
    pub target: C64,
    pub z0: C64,
    pub nodes: InterpolationSet,
    pub poly: NewtonPoly,
}

impl RungeApprox {
    pub fn f(&self, w: C64) -> C64 {
        self.m_tilde / (self.c0 + w)
    }

    pub fn eval(&self, w: C64) -> C64 {
        self.poly.eval(w + self.z0)
    }

    /// max over the boundary grid of |f − p_n| (before the shift).
    pub fn interpolation_error(&self, region: &JordanRegion) -> f64 {
        region
            .sample_boundary(ERROR_GRID)
            .par_iter()
            .map(|&z| (self.f(z) - self.poly.eval(z)).norm())
            .reduce(|| 0.0, f64::max)
    }

    /// max over the boundary grid of |𝓜̃/(c₀ + z + z₀) − ℒ(z)|.
    pub fn uniform_error(&self, region: &JordanRegion) -> f64 {
        region
            .sample_boundary(ERROR_GRID)
            .par_iter()
            .map(|&z| (self.f(z + self.z0) - self.eval(z)).norm())
            .reduce(|| 0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Interpolate and shift so that ℒ(0) = 𝓜̃/c₀.
#[allow(non_snake_case)]
pub fn interpolate_L(region: &JordanRegion, n: usize, c0: f64, m_tilde: f64) -> Result<RungeApprox> {
    interpolate_L_to(region, n, c0, m_tilde, C64::new(m_tilde / c0, 0.0))
}

/// Normalization of ℒ(0): 𝓜̃/c₀(α) or 𝓜̃/Q(0) with Q = ½ + q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftTarget {
    #[default]
    C0,
    Q0,
}

impl ShiftTarget {
    pub fn value(self, p: &ExperimentParams) -> Result<C64> {
        let denom = match self {
            ShiftTarget::C0 => p.c0(),
            ShiftTarget::Q0 => 0.5 + build_q(p.alpha, p.k_terms, p.m_terms)?.poly.eval(0.0),
        };
        if denom.abs() < 1e-12 {
            return Err(Error::NearZero(format!("{self:?} normalization {denom:e}")));
        }
        Ok(C64::new(p.m_tilde() / denom, 0.0))
    }
}

/// Interpolate and shift so that ℒ(0) = target.
#[allow(non_snake_case)]
pub fn interpolate_L_to(region: &JordanRegion, n: usize, c0: f64, m_tilde: f64, target: C64) -> Result<RungeApprox> {
    if region.contains(C64::new(-c0, 0.0)) {
        return Err(Error::DegenerateRegion(format!("-c0 = {} lies in the region", -c0)));
    }
    let nodes = leja_points(region, n)?;
    let poly = NewtonPoly::interpolate(&nodes.nodes, |w| m_tilde / (c0 + w));
    let radius = region.eps1 * region.v_half;
    let z = find_shift(&poly, target, radius).ok_or_else(|| {
        Error::ShiftNotFound(format!("no z0 with |z0| <= {radius} reaches {target}"))
    })?;
    Ok(RungeApprox { c0, m_tilde, target, z0: z, nodes, poly })
}

fn newton_root(poly: &NewtonPoly, target: C64, start: C64, radius: f64) -> Option<C64> {
    let mut z = start;
    for _ in 0..60 {
        let (p, dp) = poly.eval_with_derivative(z);
        let res = p - target;
        if res.norm() <= 1e-14 * target.norm() {
            return (z.norm() <= radius).then_some(z);
        }
        if dp.norm() == 0.0 {
            return None;
        }
        z -= res / dp;
        if z.norm() > 2.0 * radius {
            return None;
        }
    }
    None
}

// Smallest-modulus z with p(z) = target in |z| ≤ radius, by Newton from 0
// and then from a fixed set of rings.
fn find_shift(poly: &NewtonPoly, target: C64, radius: f64) -> Option<C64> {
    if let Some(z) = newton_root(poly, target, C64::new(0.0, 0.0), radius) {
        return Some(z);
    }
    let starts: Vec<C64> = (1..=4)
        .flat_map(|k| {
            (0..16).map(move |j| C64::from_polar(radius * k as f64 / 4.0, std::f64::consts::PI * j as f64 / 8.0))
        })
        .collect();
    starts
        .iter()
        .filter_map(|&z| newton_root(poly, target, z, radius))
        .min_by(|a, b| a.norm().total_cmp(&b.norm()))
}

/// (n, interpolation sup error) for each n.
pub fn decay_sweep(region: &JordanRegion, ns: &[usize], c0: f64, m_tilde: f64) -> Result<Vec<(usize, f64)>> {
    ns.iter()
        .map(|&n| {
            let nodes = leja_points(region, n)?;
            let poly = NewtonPoly::interpolate(&nodes.nodes, |w| m_tilde / (c0 + w));
            let err = region
                .sample_boundary(ERROR_GRID)
                .iter()
                .map(|&z| (m_tilde / (c0 + z) - poly.eval(z)).norm())
                .fold(0.0, f64::max);
            Ok((n, err))
        })
        .collect()
}

pub fn write_decay_csv<W: Write>(rows: &[(usize, f64)], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["n", "sup_error"])?;
    for (n, e) in rows {
        out.write_record([n.to_string(), format!("{e:.6e}")])?;
    }
    out.flush()?;
    Ok(())
}

const CHEB_DEGREE: usize = 16;

/// P̂(x) = sinh(κ(1 − x/θ))/sinh κ, κ = (α − R)θ, with P̂(0) = 1 and P̂(θ) = 0,
/// and its degree-16 Chebyshev fit on [0, θ].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConreyP {
    pub kappa: f64,
    pub theta: f64,
    pub cheb: Vec<f64>,
    pub sup_error: f64,
}

impl ConreyP {
    pub fn new(kappa: f64, theta: f64) -> Result<ConreyP> {
        if !(kappa > 0.0 && theta > 0.0) {
            return Err(Error::Parameter(format!("need kappa, theta > 0, got {kappa}, {theta}")));
        }
        let n = CHEB_DEGREE + 1;
        let vals: Vec<f64> = (0..n)
            .map(|k| {
                let u = (std::f64::consts::PI * (k as f64 + 0.5) / n as f64).cos();
                exact(kappa, theta, 0.5 * theta * (u + 1.0))
            })
            .collect();
        let cheb: Vec<f64> = (0..n)
            .map(|j| {
                let s: f64 = (0..n)
                    .map(|k| vals[k] * (std::f64::consts::PI * j as f64 * (k as f64 + 0.5) / n as f64).cos())
                    .sum();
                2.0 * s / n as f64
            })
            .collect();
        let mut p = ConreyP { kappa, theta, cheb, sup_error: 0.0 };
        p.sup_error = (0..=10_000)
            .map(|i| {
                let x = theta * i as f64 / 10_000.0;
                (p.eval(x) - p.eval_exact(x)).abs()
            })
            .fold(0.0, f64::max);
        Ok(p)
    }

    pub fn eval_exact(&self, x: f64) -> f64 {
        exact(self.kappa, self.theta, x)
    }

    /// Chebyshev fit by Clenshaw's recurrence.
    pub fn eval(&self, x: f64) -> f64 {
        let u = 2.0 * x / self.theta - 1.0;
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.cheb.iter().skip(1).rev() {
            let b0 = 2.0 * u * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        u * b1 - b2 + 0.5 * self.cheb[0]
    }

    /// The unreflected form sinh(κx/θ)/sinh κ, which is 0 at x = 0 and 1 at x = θ.
    pub fn eval_unreflected(&self, x: f64) -> f64 {
        (self.kappa * x / self.theta).sinh() / self.kappa.sinh()
    }
}

fn exact(kappa: f64, theta: f64, x: f64) -> f64 {
    (kappa * (1.0 - x / theta)).sinh() / kappa.sinh()
}

#[allow(non_snake_case)]
pub fn conrey_P_optimal(alpha: f64, r: f64, theta: f64) -> Result<ConreyP> {
    if alpha <= r {
        return Err(Error::Parameter(format!("alpha = {alpha} must exceed R = {r}")));
    }
    ConreyP::new((alpha - r) * theta, theta)
}

/// Σ_{m≤T^θ} μ(m) P(log m/log T) m^{−(s + shift)}.
pub fn mollifier_with<P: Fn(f64) -> f64>(t_big: f64, theta: f64, shift: f64, p: P) -> Result<DirichletPoly> {
    let top = t_big.powf(theta);
    if top > MOLLIFIER_LIMIT {
        return Err(Error::Parameter(format!("T^theta = {top:.3e} exceeds {MOLLIFIER_LIMIT:e}")));
    }
    let len = top.floor() as u64;
    let mu = moebius_table(len)?;
    let log_t = t_big.ln();
    Ok(DirichletPoly::from_fn(len, shift, |m| {
        let sign = mu[m as usize];
        if sign == 0 {
            C64::new(0.0, 0.0)
        } else {
            C64::new(sign as f64 * p((m as f64).ln() / log_t), 0.0)
        }
    }))
}

/// M(s) with P = P̂ for κ = (α − R)θ and shift R/log T.
#[allow(non_snake_case)]
pub fn mollifier_M(params: &ExperimentParams) -> Result<DirichletPoly> {
    params.validate()?;
    let p = conrey_P_optimal(params.alpha, params.r, params.theta)?;
    mollifier_with(params.t_big, params.theta, params.r / params.log_t(), |x| p.eval_exact(x))
}

fn check_c1r(r_bar: f64, theta: f64) -> Result<()> {
    if !(r_bar > 0.0) || !(theta > 0.0 && theta < 4.0 / 7.0) {
        return Err(Error::Parameter(format!("need R_bar > 0 and theta in (0, 4/7), got {r_bar}, {theta}")));
    }
    Ok(())
}

/// c(1, R̄) = ½ + ½e^{−2R̄} + ½(1 − e^{−2R̄}) coth(θR̄).
pub fn conrey_c1r(r_bar: f64, theta: f64) -> Result<f64> {
    check_c1r(r_bar, theta)?;
    let e = (-2.0 * r_bar).exp();
    Ok(0.5 + 0.5 * e + 0.5 * (1.0 - e) / (theta * r_bar).tanh())
}

/// c(1, R̄) from w(0), w(1), A, C and ᾱ = √(C/A), with A and C by quadrature.
pub fn conrey_c1r_definition(r_bar: f64, theta: f64) -> Result<f64> {
    check_c1r(r_bar, theta)?;
    let opts = AdaptiveOpts { abs_tol: 1e-16, rel_tol: 1e-14, ..AdaptiveOpts::default() };
    let w = |y: f64| (-r_bar * y).exp();
    let a = quad::integrate(|y| C64::new(w(y).powi(2), 0.0), 0.0, 1.0, opts)?.0.re;
    let c = theta * theta * quad::integrate(|y| C64::new(r_bar * r_bar * w(y).powi(2), 0.0), 0.0, 1.0, opts)?.0.re;
    let alpha_bar = (c / a).sqrt();
    Ok(0.5 * (w(0.0).powi(2) + w(1.0).powi(2)) + a * alpha_bar / alpha_bar.tanh() / theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::c0_alpha;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn default_region() -> JordanRegion {
        JordanRegion::from_params(&ExperimentParams::default()).unwrap()
    }

    #[test]
    fn region_basics() {
        let r = default_region();
        assert!(r.contains(c(0.0, 0.0)));
        assert!(!r.contains(c(-r.c0, 0.0)));
        assert!(JordanRegion::new(2.0, 1.5, 0.4, 0.3, 0.0).is_err());
        assert!(JordanRegion::new(2.0, 0.5, 0.3, 0.4, 0.0).is_err());
    }

    #[test]
    fn unrotated_vertices() {
        let r = default_region();
        let (v, c0, e0, e1) = (r.v_half, r.c0, r.eps0, r.eps1);
        let expected = [
            c(v, -v),
            c(v, v),
            c(-v, v),
            c(-v, e1 * v),
            c(-c0 - e0 * v, e1 * v),
            c(-c0 - e0 * v, e0 * v),
            c(-c0 + e1 * v, e0 * v),
            c(-c0 + e1 * v, -e0 * v),
            c(-c0 - e0 * v, -e0 * v),
            c(-c0 - e0 * v, -e1 * v),
            c(-v, -e1 * v),
            c(-v, -v),
        ];
        let got = r.vertices();
        assert_eq!(got.len(), expected.len(), "{got:?}");
        for e in expected {
            assert!(got.iter().any(|g| (g - e).norm() < 1e-12), "missing {e}");
        }
        let outer = 8.0 * v - 2.0 * e1 * v;
        let notch = 2.0 * (v - c0 - e0 * v) + 2.0 * (e0 - e1) * v + 2.0 * (e0 + e1) * v + 2.0 * e0 * v;
        assert!((r.perimeter() - outer - notch).abs() < 1e-12);
    }

    #[test]
    fn membership_matches_set_builder() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for rot in [0.0, 0.4] {
            let p = ExperimentParams { rotation: rot, ..ExperimentParams::default() };
            let r = JordanRegion::from_params(&p).unwrap();
            let (v, c0, e0, e1) = (r.v_half, r.c0, r.eps0, r.eps1);
            for _ in 0..10_000 {
                let z = c(rng.gen_range(-1.2 * v..1.2 * v), rng.gen_range(-1.2 * v..1.2 * v));
                let u = C64::from_polar(1.0, -rot) * (z + c0) - c0;
                let in_s = (-c0 - e0 * v < u.re && u.re < -c0 + e1 * v && u.im.abs() < e0 * v)
                    || (-v <= u.re && u.re <= -c0 - e0 * v && u.im.abs() < e1 * v);
                let in_u = z.re.abs() <= v && z.im.abs() <= v;
                assert_eq!(r.contains(z), in_u && !in_s, "{z}");
            }
            for z in r.sample_boundary(2000) {
                assert!(r.on_boundary(z));
            }
        }
    }

    #[test]
    fn leja_small_cases() {
        let disk: Vec<C64> = (0..100).map(|k| C64::from_polar(1.0, k as f64 * 0.0628)).collect();
        assert_eq!(leja_from_samples(&disk, 1).unwrap().nodes[0], disk[0]);
        let sq = JordanRegion::square(1.0);
        let l = leja_points(&sq, 2).unwrap();
        assert!((l.nodes[0] + l.nodes[1]).norm() < 1e-12);
        assert!((l.nodes[0].norm() - 2f64.sqrt()).abs() < 1e-12);
        let l = leja_points(&default_region(), 50).unwrap();
        for i in 0..50 {
            for j in 0..i {
                assert!((l.nodes[i] - l.nodes[j]).norm() > 0.0);
            }
        }
    }

    #[test]
    fn interpolation_and_shift() {
        let r = default_region();
        let c0 = r.c0;
        assert!(matches!(interpolate_L(&r, 40, c0, 1.0), Err(Error::ShiftNotFound(_))));
        let a = interpolate_L(&r, 60, c0, 1.0).unwrap();
        for &z in &a.nodes.nodes {
            assert!((a.poly.eval(z) - a.f(z)).norm() < 1e-12);
        }
        assert!((a.eval(c(0.0, 0.0)) * c0 - 1.0).norm() < 1e-10);
        assert!(a.z0.norm() <= r.eps1 * r.v_half);
        let m = a.poly.to_monomial(a.z0);
        let z = c(0.3, -0.2);
        let horner = m.iter().rev().fold(c(0.0, 0.0), |acc, &k| acc * z + k);
        assert!((horner - a.eval(z)).norm() < 1e-8 * a.eval(z).norm());
    }

    #[test]
    fn interpolation_error_decreases() {
        let r = default_region();
        let rows = decay_sweep(&r, &[10, 20, 40], r.c0, 1.0).unwrap();
        assert!(rows[1].1 < rows[0].1 && rows[2].1 < rows[1].1, "{rows:?}");
        let mut buf = Vec::new();
        write_decay_csv(&rows, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("n,sup_error\n10,"));
    }

    #[test]
    fn conrey_p_forms() {
        let p = conrey_P_optimal(8.0, 1.3, 0.45).unwrap();
        assert!((p.eval_exact(0.0) - 1.0).abs() < 1e-15);
        assert!(p.eval_exact(0.45).abs() < 1e-15);
        assert!(p.sup_error < 1e-10, "{}", p.sup_error);
        assert!((p.eval_unreflected(0.45) - 1.0).abs() < 1e-15);
        assert!(p.eval_unreflected(0.0).abs() < 1e-15);
    }

    #[test]
    fn mollifier_coefficients() {
        let params = ExperimentParams::default();
        let m = mollifier_M(&params).unwrap();
        assert!((m.coeff(1).re - 1.0).abs() < 1e-15);
        assert_eq!(m.coeff(4), c(0.0, 0.0));
        let last = params.t_big.powf(params.theta).floor() as u64;
        // last squarefree index near T^θ
        let top = (1..=last).rev().find(|&k| m.coeff(k) != c(0.0, 0.0)).unwrap();
        assert!(m.coeff(top).norm() < 0.05);
        assert!((m.sigma_shift - params.r / params.log_t()).abs() < 1e-15);
    }

    #[test]
    fn c1r_values() {
        assert!(((-2.0f64).exp() - (-2.0f64 * 1.0).exp()).abs() < 1e-15);
        let closed = conrey_c1r(1.0, 0.5).unwrap();
        let def = conrey_c1r_definition(1.0, 0.5).unwrap();
        assert!((closed - def).abs() < 1e-12);
        let c8 = conrey_c1r(8.0, 0.4).unwrap();
        assert!(c8 > 0.9 && c8 < 1.1);
        let mut prev = f64::INFINITY;
        for i in 0..=95 {
            let r = 0.5 + 0.1 * i as f64;
            let v = conrey_c1r(r, 0.5).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert!((conrey_c1r(60.0, 0.5).unwrap() - 1.0).abs() < 1e-10);
        assert!(c0_alpha(8.0) > 0.9);
    }

    #[test]
    fn shift_targets() {
        let p = ExperimentParams::default();
        let c0 = ShiftTarget::C0.value(&p).unwrap();
        assert!((c0.re * p.c0() - p.m_tilde()).abs() < 1e-15 && c0.im == 0.0);
        let q0 = ShiftTarget::Q0.value(&p).unwrap();
        let q = build_q(p.alpha, p.k_terms, p.m_terms).unwrap();
        assert!((q0.re * (0.5 + q.poly.eval(0.0)) - 1.0).abs() < 1e-14);
        let region = JordanRegion::from_params(&p).unwrap();
        match interpolate_L_to(&region, p.runge_n, p.c0(), p.m_tilde(), q0) {
            Ok(l) => assert!((l.eval(C64::new(0.0, 0.0)) - q0).norm() < 1e-10 * q0.norm()),
            Err(e) => assert!(matches!(e, Error::ShiftNotFound(_)), "{e}"),
        }
        let json = serde_json::to_string(&ShiftTarget::Q0).unwrap();
        assert_eq!(json, "\"q0\"");
    }
}
