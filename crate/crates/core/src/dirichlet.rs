//! Finite Dirichlet polynomials Σ c(n) n^{−(s+shift)}.

use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const RECORD_BYTES: usize = 24;
const BLOCK: u64 = 1 << 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletPoly {
    /// (n, c(n)) sorted by n, n ≥ 1, no duplicates.
    terms: Vec<(u64, C64)>,
    pub sigma_shift: f64,
}

impl DirichletPoly {
    /// Duplicated indices are summed; zero coefficients are dropped.
    pub fn new(mut terms: Vec<(u64, C64)>, sigma_shift: f64) -> Result<DirichletPoly> {
        if terms.iter().any(|&(n, _)| n == 0) {
            return Err(Error::Parameter("Dirichlet index 0".into()));
        }
        terms.sort_by_key(|&(n, _)| n);
        let mut merged: Vec<(u64, C64)> = Vec::with_capacity(terms.len());
        for (n, c) in terms {
            match merged.last_mut() {
                Some(last) if last.0 == n => last.1 += c,
                _ => merged.push((n, c)),
            }
        }
        merged.retain(|&(_, c)| c != C64::new(0.0, 0.0));
        Ok(DirichletPoly { terms: merged, sigma_shift })
    }

    /// Coefficients c(1), …, c(len) from a function of n.
    pub fn from_fn<F: Fn(u64) -> C64>(len: u64, sigma_shift: f64, f: F) -> DirichletPoly {
        let terms = (1..=len)
            .map(|n| (n, f(n)))
            .filter(|&(_, c)| c != C64::new(0.0, 0.0))
            .collect();
        DirichletPoly { terms, sigma_shift }
    }

    pub fn terms(&self) -> &[(u64, C64)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_index(&self) -> u64 {
        self.terms.last().map_or(0, |t| t.0)
    }

    pub fn coeff(&self, n: u64) -> C64 {
        match self.terms.binary_search_by_key(&n, |t| t.0) {
            Ok(i) => self.terms[i].1,
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn eval(&self, s: C64) -> C64 {
        let w = s + self.sigma_shift;
        self.terms
            .iter()
            .map(|&(n, c)| c * (-w * (n as f64).ln()).exp())
            .sum()
    }

    /// Σ c(n) f(n, s) n^{−(s+shift)}, for per-evaluation coefficient reweighting.
    pub fn eval_weighted<F: Fn(u64, C64) -> C64>(&self, s: C64, weight: F) -> C64 {
        let w = s + self.sigma_shift;
        self.terms
            .iter()
            .map(|&(n, c)| c * weight(n, s) * (-w * (n as f64).ln()).exp())
            .sum()
    }

    pub fn eval_grid(&self, points: &[C64]) -> Vec<C64> {
        points.par_iter().map(|&s| self.eval(s)).collect()
    }

    /// Σ |c(n)| n^{−σ−shift}, an upper bound for |P(σ + it)|.
    pub fn abs_bound(&self, sigma: f64) -> f64 {
        let w = sigma + self.sigma_shift;
        self.terms
            .iter()
            .map(|&(n, c)| c.norm() * (n as f64).powf(-w))
            .sum()
    }

    /// Product of two polynomials with shifts folded into the coefficients.
    pub fn mul(&self, other: &DirichletPoly) -> DirichletPoly {
        let a = self.folded();
        let b = other.folded();
        let mut out: Vec<(u64, C64)> = Vec::with_capacity(a.terms.len() * b.terms.len());
        for &(m, cm) in &a.terms {
            for &(n, cn) in &b.terms {
                out.push((m * n, cm * cn));
            }
        }
        DirichletPoly::new(out, 0.0).expect("indices are positive")
    }

    /// Same polynomial with sigma_shift = 0.
    pub fn folded(&self) -> DirichletPoly {
        if self.sigma_shift == 0.0 {
            return self.clone();
        }
        let terms = self
            .terms
            .iter()
            .map(|&(n, c)| (n, c * (n as f64).powf(-self.sigma_shift)))
            .collect();
        DirichletPoly { terms, sigma_shift: 0.0 }
    }

    /// Little-endian records (n: u64, re: f64, im: f64), shift folded in.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        for &(n, c) in &self.folded().terms {
            w.write_all(&n.to_le_bytes())?;
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<DirichletPoly> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        if buf.len() % RECORD_BYTES != 0 {
            return Err(Error::Parameter(format!(
                "binary table length {} is not a multiple of {RECORD_BYTES}",
                buf.len()
            )));
        }
        let word = |b: &[u8]| -> [u8; 8] { b.try_into().expect("8-byte slice") };
        let terms = buf
            .chunks_exact(RECORD_BYTES)
            .map(|rec| {
                let n = u64::from_le_bytes(word(&rec[0..8]));
                let re = f64::from_le_bytes(word(&rec[8..16]));
                let im = f64::from_le_bytes(word(&rec[16..24]));
                (n, C64::new(re, im))
            })
            .collect();
        DirichletPoly::new(terms, 0.0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<DirichletPoly> {
        let p: DirichletPoly = serde_json::from_str(s)?;
        DirichletPoly::new(p.terms, p.sigma_shift)
    }
}

type CoeffFn = Arc<dyn Fn(u64) -> C64 + Send + Sync>;

/// Coefficients generated on the fly in blocks; used when materializing
/// the whole table would be too large.
#[derive(Clone)]
pub struct StreamingPoly {
    pub len: u64,
    pub sigma_shift: f64,
    coeff: CoeffFn,
}

impl std::fmt::Debug for StreamingPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StreamingPoly")
            .field("len", &self.len)
            .field("sigma_shift", &self.sigma_shift)
            .finish()
    }
}

impl StreamingPoly {
    pub fn new(len: u64, sigma_shift: f64, coeff: CoeffFn) -> StreamingPoly {
        StreamingPoly { len, sigma_shift, coeff }
    }

    pub fn eval(&self, s: C64) -> C64 {
        let w = s + self.sigma_shift;
        let blocks = self.len.div_ceil(BLOCK);
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let lo = b * BLOCK + 1;
                let hi = ((b + 1) * BLOCK).min(self.len);
                (lo..=hi)
                    .map(|n| (self.coeff)(n) * (-w * (n as f64).ln()).exp())
                    .sum::<C64>()
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum()
    }

    pub fn materialize(&self) -> DirichletPoly {
        DirichletPoly::from_fn(self.len, self.sigma_shift, |n| (self.coeff)(n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn merges_and_sorts() {
        let p = DirichletPoly::new(vec![(3, c(1.0, 0.0)), (1, c(2.0, 0.0)), (3, c(0.5, 1.0))], 0.0).unwrap();
        assert_eq!(p.terms(), &[(1, c(2.0, 0.0)), (3, c(1.5, 1.0))]);
        assert!(DirichletPoly::new(vec![(0, c(1.0, 0.0))], 0.0).is_err());
    }

    #[test]
    fn shift_matches_folded() {
        let p = DirichletPoly::from_fn(50, 0.3, |n| c(1.0 / n as f64, (n % 3) as f64));
        let s = c(0.5, 14.0);
        assert!((p.eval(s) - p.folded().eval(s)).norm() < 1e-12);
        assert!(p.eval(s).norm() <= p.abs_bound(0.5) + 1e-12);
    }

    #[test]
    fn binary_and_json_roundtrip() {
        let p = DirichletPoly::from_fn(20, 0.0, |n| c(n as f64, -(n as f64).sqrt()));
        let mut buf = Vec::new();
        p.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 20 * RECORD_BYTES);
        assert_eq!(DirichletPoly::read_binary(&buf[..]).unwrap(), p);
        assert_eq!(DirichletPoly::from_json(&p.to_json().unwrap()).unwrap(), p);
        assert!(DirichletPoly::read_binary(&buf[..23]).is_err());
    }

    #[test]
    fn product_is_dirichlet_convolution() {
        let one = DirichletPoly::from_fn(30, 0.0, |_| c(1.0, 0.0));
        let sq = one.mul(&one);
        // coefficient at n ≤ 30 is the divisor count
        assert_eq!(sq.coeff(12), c(6.0, 0.0));
        let s = c(2.0, 1.0);
        assert!((sq.eval(s) - one.eval(s) * one.eval(s)).norm() < 1e-12);
    }

    #[test]
    fn streaming_matches_table() {
        let f: CoeffFn = Arc::new(|n| c((n as f64).ln(), 1.0));
        let sp = StreamingPoly::new(40_000, 0.1, f);
        let s = c(0.7, 100.0);
        assert!((sp.eval(s) - sp.materialize().eval(s)).norm() < 1e-8);
    }
}
