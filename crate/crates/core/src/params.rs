//! Experiment tunables and the quantities derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentParams {
    pub alpha: f64,
    /// T
    pub t_big: f64,
    /// R
    pub r: f64,
    pub theta: f64,
    /// K: Fourier terms of q.
    pub k_terms: usize,
    /// M: Taylor terms per Fourier mode of q.
    pub m_terms: usize,
    /// 𝒦: Laguerre degree of q̃.
    pub k_cal: usize,
    /// C in x = T^{1/α^{1+C/2}}.
    pub c: f64,
    pub eps: f64,
    /// ε′ in 𝓜̃ = α^{ε′}.
    pub eps_prime: f64,
    pub eps0: f64,
    pub eps1: f64,
    /// Ṽ^{1/2}
    pub v_half: f64,
    /// Orientation of the notch about −c₀, radians.
    pub rotation: f64,
    pub delta_t: f64,
    /// Degree parameter n of ℒ (number of Leja nodes).
    pub runge_n: usize,
    pub x: Option<f64>,
    pub x0: Option<f64>,
    pub x1: Option<f64>,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        ExperimentParams {
            alpha: 8.0,
            t_big: 1e4,
            r: 1.3,
            theta: 0.45,
            k_terms: 9,
            m_terms: 6,
            k_cal: 8,
            c: 1.0,
            eps: 0.1,
            eps_prime: 0.0,
            eps0: 0.45,
            eps1: 0.35,
            v_half: 2.0,
            rotation: 0.0,
            delta_t: 0.0,
            runge_n: 60,
            x: None,
            x0: None,
            x1: None,
        }
    }
}

impl ExperimentParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Parameter(m.to_string()));
        if !(self.t_big > 1.0) {
            return bad("T must exceed 1");
        }
        if !(self.alpha >= 0.0) {
            return bad("alpha must be nonnegative");
        }
        if !(self.r > 0.0) {
            return bad("R must be positive");
        }
        if !(self.theta > 0.0) {
            return bad("theta must be positive");
        }
        if !(self.eps0 >= self.eps1 && self.eps1 > 0.0) {
            return bad("need eps0 >= eps1 > 0");
        }
        if !(self.v_half > 0.0) {
            return bad("V_half must be positive");
        }
        if self.runge_n == 0 || self.runge_n > 200 {
            return bad("runge_n must be in 1..=200");
        }
        Ok(())
    }

    pub fn log_t(&self) -> f64 {
        self.t_big.ln()
    }

    /// Δσ = α / log T
    pub fn delta_sigma(&self) -> f64 {
        self.alpha / self.log_t()
    }

    /// a = ½ − R / log T
    pub fn a(&self) -> f64 {
        0.5 - self.r / self.log_t()
    }

    /// 𝓜̃ = α^{ε′}
    pub fn m_tilde(&self) -> f64 {
        self.alpha.powf(self.eps_prime)
    }

    pub fn c0(&self) -> f64 {
        c0_alpha(self.alpha)
    }

    fn theorem_power(&self, num: f64, exponent: f64) -> f64 {
        self.t_big.powf(num / self.alpha.powf(exponent))
    }

    /// x = T^{1/α^{1+C/2}} unless overridden.
    pub fn x(&self) -> f64 {
        self.x.unwrap_or_else(|| self.theorem_power(1.0, 1.0 + self.c / 2.0))
    }

    /// x₀ = T^{10/α^{1+C/2}} unless overridden.
    pub fn x0(&self) -> f64 {
        self.x0.unwrap_or_else(|| self.theorem_power(10.0, 1.0 + self.c / 2.0))
    }

    /// x₁ = T^{1/α^{1+C}} unless overridden.
    pub fn x1(&self) -> f64 {
        self.x1.unwrap_or_else(|| self.theorem_power(1.0, 1.0 + self.c))
    }
}

/// c₀(α) = e^{α/2}/2 · (1 − tanh(α/4))
pub fn c0_alpha(alpha: f64) -> f64 {
    // e^{α/2}(1 − tanh(α/4))/2 = 1/(1 + e^{−α/2})
    1.0 / (1.0 + (-0.5 * alpha).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_quantities() {
        let p = ExperimentParams::default();
        p.validate().unwrap();
        assert!((p.delta_sigma() - 8.0 / 1e4f64.ln()).abs() < 1e-15);
        assert!(p.a() < 0.5);
        assert!(p.x0() > p.x() && p.x1() < p.x());
        let direct = (4.0f64).exp() / 2.0 * (1.0 - 2.0f64.tanh());
        assert!((p.c0() - direct).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<ExperimentParams>(r#"{"alpha": 3.0, "bogus": 1}"#).is_err());
        let p: ExperimentParams = serde_json::from_str(r#"{"alpha": 3.0}"#).unwrap();
        assert_eq!(p.alpha, 3.0);
        assert_eq!(p.t_big, 1e4);
    }
}
