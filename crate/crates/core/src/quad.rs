//! Adaptive Gauss–Kronrod and Cauchy-circle differentiation for complex
//! integrands.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOpts {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
    pub initial_panels: usize,
}

impl Default for AdaptiveOpts {
    fn default() -> Self {
        AdaptiveOpts {
            abs_tol: 1e-14,
            rel_tol: 1e-12,
            max_intervals: 4000,
            initial_panels: 1,
        }
    }
}

fn gk15<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64) -> (C64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    ((kron * h), ((kron - gauss) * h).norm())
}

/// Globally adaptive G7/K15 quadrature of a complex integrand on `[a, b]`.
/// Returns the value and the summed error estimate.
pub fn integrate<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, opts: AdaptiveOpts) -> Result<(C64, f64)> {
    if a == b {
        return Ok((C64::new(0.0, 0.0), 0.0));
    }
    let n0 = opts.initial_panels.max(1);
    let mut parts: Vec<(f64, f64, C64, f64)> = (0..n0)
        .map(|i| {
            let lo = a + (b - a) * i as f64 / n0 as f64;
            let hi = a + (b - a) * (i + 1) as f64 / n0 as f64;
            let (v, e) = gk15(&f, lo, hi);
            (lo, hi, v, e)
        })
        .collect();
    loop {
        let total: C64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= opts.abs_tol.max(opts.rel_tol * total.norm()) {
            return Ok((total, err));
        }
        if parts.len() >= opts.max_intervals {
            return Err(Error::Quadrature(format!(
                "error estimate {err:.3e} after {} intervals",
                parts.len()
            )));
        }
        let (imax, _) = parts
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (lo, hi, _, _) = parts[imax];
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        parts[imax] = (lo, mid, v1, e1);
        parts.push((mid, hi, v2, e2));
    }
}

/// Taylor coefficients f^{(k)}(z0)/k! for k = 0..=kmax from the trapezoid rule
/// on the circle |w − z0| = r with `nodes` points.
pub fn cauchy_taylor<F: Fn(C64) -> C64>(f: F, z0: C64, r: f64, kmax: usize, nodes: usize) -> Vec<C64> {
    let samples: Vec<C64> = (0..nodes)
        .map(|j| {
            let th = 2.0 * PI * j as f64 / nodes as f64;
            f(z0 + C64::from_polar(r, th))
        })
        .collect();
    taylor_from_samples(&samples, r, kmax)
}

/// Same as [`cauchy_taylor`] for an evaluator that can fail.
pub fn try_cauchy_taylor<F: Fn(C64) -> Result<C64> + Sync>(
    f: F,
    z0: C64,
    r: f64,
    kmax: usize,
    nodes: usize,
) -> Result<Vec<C64>> {
    use rayon::prelude::*;
    let samples: Result<Vec<C64>> = (0..nodes)
        .into_par_iter()
        .map(|j| {
            let th = 2.0 * PI * j as f64 / nodes as f64;
            f(z0 + C64::from_polar(r, th))
        })
        .collect();
    Ok(taylor_from_samples(&samples?, r, kmax))
}

fn taylor_from_samples(samples: &[C64], r: f64, kmax: usize) -> Vec<C64> {
    let n = samples.len();
    (0..=kmax)
        .map(|k| {
            let mut acc = C64::new(0.0, 0.0);
            for (j, v) in samples.iter().enumerate() {
                // e^{-ik th_j}, index reduced mod n to keep the angle small
                let th = -2.0 * PI * ((k * j) % n) as f64 / n as f64;
                acc += v * C64::from_polar(1.0, th);
            }
            acc / (n as f64 * r.powi(k as i32))
        })
        .collect()
}

/// Derivatives f^{(k)}(z0) for k = 0..=kmax.
pub fn taylor_to_derivatives(taylor: &[C64]) -> Vec<C64> {
    let mut fact = 1.0;
    taylor
        .iter()
        .enumerate()
        .map(|(k, c)| {
            if k > 0 {
                fact *= k as f64;
            }
            c * fact
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk_polynomial_exact() {
        let (v, _) = integrate(|x| C64::new(x.powi(5), 0.0), 0.0, 2.0, AdaptiveOpts::default()).unwrap();
        assert!((v.re - 64.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn gk_oscillatory() {
        let (v, _) = integrate(|x| C64::from_polar(1.0, 40.0 * x), 0.0, 3.0, AdaptiveOpts::default()).unwrap();
        let exact = (C64::from_polar(1.0, 120.0) - 1.0) / C64::new(0.0, 40.0);
        assert!((v - exact).norm() < 1e-12);
    }

    #[test]
    fn cauchy_exp_derivatives() {
        let t = cauchy_taylor(|z| z.exp(), C64::new(0.3, 0.1), 1.0, 6, 64);
        let d = taylor_to_derivatives(&t);
        let e = C64::new(0.3, 0.1).exp();
        for v in d {
            assert!((v - e).norm() < 1e-13);
        }
    }
}
