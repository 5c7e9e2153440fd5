//! The macroscopic limit: fractional heat flow of the Fourier-transformed density, a principal
//! value fractional Laplacian, and a time-domain kinetic solve of one Fourier mode.

use num_complex::Complex64 as C64;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::eigen::{default_phi, fd_operator, solve_mu, SolveOptions};
use crate::error::{FpError, Result};
use crate::model::{equilibrium_gamma, ModelParams};
use crate::quad;
use crate::tridiag::Tridiagonal;

#[derive(Debug, Clone)]
pub struct DensityProfile {
    pub xi: Vec<f64>,
    pub rho_hat: Vec<C64>,
    pub t: f64,
}

impl DensityProfile {
    /// Largest |conj(rho_hat(-xi)) - rho_hat(xi)| over mirrored pairs of abscissae.
    pub fn reality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.xi.len() {
            if let Some(j) = self.xi.iter().position(|&x| x == -self.xi[i]) {
                worst = worst.max((self.rho_hat[j].conj() - self.rho_hat[i]).norm());
            }
        }
        worst
    }
}

/// rho_hat(t + dt, xi) = exp(-kappa |xi|^alpha dt) rho_hat(t, xi).
pub fn evolve_rho_hat(profile: &DensityProfile, dt: f64, kappa: f64, alpha: f64) -> Result<DensityProfile> {
    if !(kappa > 0.0) {
        return Err(FpError::InvalidArgument(format!("kappa = {kappa} must be positive")));
    }
    if !(alpha > 2.0 / 3.0 && alpha < 2.0) {
        return Err(FpError::InvalidArgument(format!("alpha = {alpha} must lie in (2/3, 2)")));
    }
    let rho_hat = profile
        .xi
        .iter()
        .zip(&profile.rho_hat)
        .map(|(&xi, &r)| r * (-kappa * xi.abs().powf(alpha) * dt).exp())
        .collect();
    Ok(DensityProfile { xi: profile.xi.clone(), rho_hat, t: profile.t + dt })
}

/// Normalizing constant of the one-dimensional fractional Laplacian of order alpha.
pub fn frac_constant(alpha: f64) -> f64 {
    alpha * 2f64.powf(alpha - 1.0) * gamma(0.5 * (1.0 + alpha)) / (std::f64::consts::PI.sqrt() * gamma(1.0 - 0.5 * alpha))
}

/// (-Delta)^(alpha/2) rho(x) = c_alpha int_0^inf (2 rho(x) - rho(x+t) - rho(x-t)) t^(-1-alpha) dt.
///
/// On [0, 1] the substitution t = u^(2/(2-alpha)) makes the integrand smooth; on [1, inf) the
/// constant part integrates to 2 rho(x) / alpha. rho must be smooth near x.
pub fn frac_laplacian_pv(rho: &dyn Fn(f64) -> f64, x: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(FpError::InvalidArgument(format!("alpha = {alpha} must lie in (0, 2)")));
    }
    let r0 = rho(x);
    // Below t_min the second difference cancels to rounding level; use -rho''(x) t^2 there.
    let t_min: f64 = 1e-3;
    let h = 1e-2;
    let d2 = (-rho(x + 2.0 * h) + 16.0 * rho(x + h) - 30.0 * r0 + 16.0 * rho(x - h) - rho(x - 2.0 * h)) / (12.0 * h * h);
    let inner = -d2 * t_min.powf(2.0 - alpha) / (2.0 - alpha);
    let p = 2.0 / (2.0 - alpha);
    let near = |u: f64| {
        let t = u.powf(p);
        (2.0 * r0 - rho(x + t) - rho(x - t)) * t.powf(-1.0 - alpha) * p * u.powf(p - 1.0)
    };
    // The second difference loses digits relative to rho(x); the tolerance follows that floor.
    let floor = 1e-11 * r0.abs().max(1e-3);
    let (a, _) = quad::adaptive(near, t_min.powf(1.0 / p), 1.0, floor, 1e-10)?;
    let a = a + inner;
    let (b, _) = quad::adaptive_to_infinity(|t: f64| (rho(x + t) + rho(x - t)) * t.powf(-1.0 - alpha), 1.0, 1e-14, 1e-12)?;
    Ok(frac_constant(alpha) * (a + 2.0 * r0 / alpha - b))
}

/// Late-time decay of one kinetic Fourier mode.
#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub eta: f64,
    /// Fitted rate of |int g M_eta|.
    pub rate: f64,
    /// Re mu(eta) from the eigen-solve used for the projection.
    pub mu: f64,
    pub steps: usize,
    /// Root-mean-square residual of the log-linear fit.
    pub fit_residual: f64,
}

/// Evolve d_t g = -L_eta g from g(0) = M by implicit Euler on the finite-difference operator,
/// project on M_eta and fit the decay rate of the projection over the second half of [0, horizon].
pub fn kinetic_mode_decay(params: &ModelParams, eta: f64, horizon: f64, steps: usize) -> Result<DecayFit> {
    if !(horizon > 0.0) || steps < 100 {
        return Err(FpError::InvalidArgument("need a positive horizon and at least 100 steps".into()));
    }
    let g = params.gamma;
    let (v_cut, n) = if eta == 0.0 { (200.0, 4000) } else { (12.0 * eta.abs().powf(-1.0 / 3.0), 4000) };
    let (v, op) = fd_operator(eta, g, v_cut, n);
    let (mode, mu) = if eta == 0.0 {
        (v.iter().map(|&x| C64::new(equilibrium_gamma(g, x), 0.0)).collect::<Vec<_>>(), 0.0)
    } else {
        let r = solve_mu(eta, params, &default_phi(params)?, SolveOptions::default())?;
        let (grid, m) = r.eigenfunction.expect("eigenfunction is returned");
        (v.iter().map(|&x| interpolate(&grid, &m, x)).collect(), r.mu.re)
    };
    let dt = horizon / steps as f64;
    let step = Tridiagonal {
        lower: op.lower.iter().map(|z| z * dt).collect(),
        diag: op.diag.iter().map(|z| z * dt + 1.0).collect(),
        upper: op.upper.iter().map(|z| z * dt).collect(),
    };
    let lu = step.factor()?;
    let mut state: Vec<C64> = v.iter().map(|&x| C64::new(equilibrium_gamma(g, x), 0.0)).collect();
    let project = |s: &[C64]| s.iter().zip(&mode).map(|(a, b)| a * b).sum::<C64>().norm();
    let mut samples = Vec::with_capacity(steps / 2 + 1);
    for k in 1..=steps {
        state = lu.solve(&state);
        if 2 * k >= steps {
            samples.push((k as f64 * dt, project(&state).ln()));
        }
    }
    let (slope, intercept) = crate::eigen::linear_fit(&samples);
    let fit_residual =
        (samples.iter().map(|(t, y)| (y - slope * t - intercept).powi(2)).sum::<f64>() / samples.len() as f64).sqrt();
    // Measured against the total log-decay over the window.
    if eta != 0.0 && fit_residual > 1e-3 * (slope * 0.5 * horizon).abs() {
        return Err(FpError::Fit(format!("decay fit residual {fit_residual:.3e}: horizon too short to separate the rate")));
    }
    Ok(DecayFit { eta, rate: -slope, mu, steps, fit_residual })
}

/// Linear interpolation on an increasing grid; zero outside.
fn interpolate(grid: &[f64], y: &[C64], x: f64) -> C64 {
    if x <= grid[0] || x >= grid[grid.len() - 1] {
        return C64::new(0.0, 0.0);
    }
    let i = grid.partition_point(|&g| g <= x) - 1;
    let t = (x - grid[i]) / (grid[i + 1] - grid[i]);
    y[i] * (1.0 - t) + y[i + 1] * t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_has_zero_laplacian() {
        let r = frac_laplacian_pv(&|_| 1.0, 0.3, 1.2).unwrap();
        assert!(r.abs() < 1e-10);
    }

    #[test]
    fn constant_at_alpha_one() {
        // c_1 = 1/pi.
        assert!((frac_constant(1.0) - 1.0 / std::f64::consts::PI).abs() < 1e-14);
    }
}
