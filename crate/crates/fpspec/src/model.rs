//! Model constants, the heavy-tailed equilibrium and the potentials built from it.

use serde::Serialize;

use crate::error::{FpError, Result};
use crate::quad;

/// Tolerances shared by every module.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    /// Relative tolerance for scalar quadratures.
    pub scalar: f64,
    /// Local error tolerance of the adaptive ODE integrator.
    pub ode: f64,
    /// Root tolerance for the constraint, relative to the integral of M^2.
    pub root: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { scalar: 1e-10, ode: 1e-11, root: 1e-10 }
    }
}

/// Parameters of the model for one tail exponent.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModelParams {
    pub beta: f64,
    pub gamma: f64,
    /// Scaling exponent (beta + 1) / 3.
    pub alpha: f64,
    /// 1 / integral of (1 + v^2)^-gamma.
    pub c_beta_sq: f64,
    /// Largest admissible |eta|.
    pub eta0: f64,
    /// Largest admissible |lambda|.
    pub lambda0: f64,
    pub tol: Tolerances,
}

/// Equilibrium profile and potentials at one velocity.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PotentialEval {
    pub v: f64,
    pub m: f64,
    pub w: f64,
    pub w_tilde: f64,
    pub v_split: f64,
}

/// Build the parameter record, rejecting beta outside (1, 5) and the logarithmic case beta = 2.
pub fn make_params(beta: f64) -> Result<ModelParams> {
    if !beta.is_finite() || beta <= 1.0 || beta >= 5.0 {
        return Err(FpError::InvalidBeta { beta, reason: "beta must lie in the open interval (1, 5)".into() });
    }
    if (beta - 2.0).abs() < 1e-12 {
        return Err(FpError::InvalidBeta {
            beta,
            reason: "beta = 2 is the excluded logarithmic case (the Frobenius exponents -1 and 2 resonate)".into(),
        });
    }
    let gamma = beta / 2.0;
    let tol = Tolerances::default();
    Ok(ModelParams {
        beta,
        gamma,
        alpha: (beta + 1.0) / 3.0,
        c_beta_sq: c_beta_squared(gamma)?,
        eta0: 0.05,
        lambda0: 0.1,
        tol,
    })
}

impl ModelParams {
    /// Same parameters with another ODE tolerance.
    pub fn with_ode_tol(mut self, tol: f64) -> Self {
        self.tol.ode = tol;
        self
    }

    /// Integral of M^2, i.e. 1 / C_beta^2.
    pub fn m_norm_sq(&self) -> f64 {
        1.0 / self.c_beta_sq
    }
}

/// Japanese bracket (1 + v^2)^(1/2).
#[inline]
pub fn bracket(v: f64) -> f64 {
    (1.0 + v * v).sqrt()
}

/// Equilibrium M(v) = (1 + v^2)^(-gamma/2).
#[inline]
pub fn equilibrium(params: &ModelParams, v: f64) -> f64 {
    equilibrium_gamma(params.gamma, v)
}

#[inline]
pub(crate) fn equilibrium_gamma(gamma: f64, v: f64) -> f64 {
    (1.0 + v * v).powf(-0.5 * gamma)
}

/// W = M''/M.
#[inline]
pub fn potential_w(gamma: f64, v: f64) -> f64 {
    let q = 1.0 + v * v;
    (gamma * (gamma + 1.0) * v * v - gamma) / (q * q)
}

/// The long-range part of W, gamma(gamma+1)/(1+v^2).
#[inline]
pub fn potential_w_tilde(gamma: f64, v: f64) -> f64 {
    gamma * (gamma + 1.0) / (1.0 + v * v)
}

/// The short-range remainder V = W~ - W = gamma(gamma+2)/(1+v^2)^2.
#[inline]
pub fn potential_v(gamma: f64, v: f64) -> f64 {
    let q = 1.0 + v * v;
    gamma * (gamma + 2.0) / (q * q)
}

pub fn potentials(params: &ModelParams, v: f64) -> PotentialEval {
    let g = params.gamma;
    PotentialEval {
        v,
        m: equilibrium_gamma(g, v),
        w: potential_w(g, v),
        w_tilde: potential_w_tilde(g, v),
        v_split: potential_v(g, v),
    }
}

/// 1 / integral over R of (1 + v^2)^-gamma, by panel quadrature on [0, 50] and a series for the tail.
pub fn c_beta_squared(gamma: f64) -> Result<f64> {
    if !(gamma > 0.5) {
        return Err(FpError::InvalidArgument(format!(
            "gamma = {gamma}: (1+v^2)^-gamma is not integrable for gamma <= 1/2"
        )));
    }
    let cut = 50.0;
    let (core, err) = quad::adaptive(|v: f64| (1.0 + v * v).powf(-gamma), 0.0, cut, 1e-15, 1e-13)?;
    if err > 1e-11 * core {
        return Err(FpError::Quadrature { what: "C_beta normalization".into(), estimate: err });
    }
    // (1+v^2)^-g = v^-2g sum_k binom(-g, k) v^-2k for v > 1.
    let mut tail = 0.0;
    let mut coef = 1.0;
    for k in 0..60 {
        let p = 2.0 * gamma + 2.0 * k as f64 - 1.0;
        let term = coef * cut.powf(-p) / p;
        tail += term;
        if term.abs() < 1e-18 * tail.abs() {
            break;
        }
        coef *= (-gamma - k as f64) / (k as f64 + 1.0);
    }
    Ok(1.0 / (2.0 * (core + tail)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponents() {
        let p = make_params(4.0).unwrap();
        assert_eq!(p.gamma, 2.0);
        assert!((p.alpha - 5.0 / 3.0).abs() < 1e-15);
        let p = make_params(3.0).unwrap();
        assert_eq!(p.gamma, 1.5);
        assert!((p.alpha - 4.0 / 3.0).abs() < 1e-15);
        assert!((p.alpha - (2.0 * p.gamma + 1.0) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_excluded_betas() {
        assert!(make_params(2.0).is_err());
        assert!(make_params(1.0).is_err());
        assert!(make_params(5.0).is_err());
        let msg = make_params(2.0).unwrap_err().to_string();
        assert!(msg.contains("logarithmic"));
    }

    #[test]
    fn equilibrium_values() {
        let p = make_params(4.0).unwrap();
        assert_eq!(equilibrium(&p, 0.0), 1.0);
        assert!((equilibrium(&p, 1.0) - 0.5).abs() < 1e-15);
        assert!((equilibrium(&p, 3.0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn potentials_at_origin() {
        let p = make_params(3.0).unwrap();
        let e = potentials(&p, 0.0);
        let g = p.gamma;
        assert_eq!(e.w, -g);
        assert_eq!(e.w_tilde, g * (g + 1.0));
        assert_eq!(e.v_split, g * (g + 2.0));
    }

    #[test]
    fn c_beta_closed_forms() {
        assert!((c_beta_squared(2.0).unwrap() - 2.0 / std::f64::consts::PI).abs() < 1e-12);
        assert!((c_beta_squared(1.5).unwrap() - 0.5).abs() < 1e-12);
        assert!(c_beta_squared(0.5).is_err());
    }
}
