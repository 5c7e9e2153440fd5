use fpspec::diffusion::{evolve_rho_hat, frac_constant, frac_laplacian_pv, kinetic_mode_decay, DensityProfile};
use fpspec::eigen::{default_phi, solve_mu, SolveOptions};
use fpspec::make_params;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use statrs::function::gamma::gamma;

/// (1/pi) int_0^inf xi^alpha sqrt(pi) e^{-xi^2/4} cos(xi x) d xi, the Fourier-side value of the
/// fractional Laplacian of exp(-x^2), by composite Simpson on [0, 40].
fn fourier_side(x: f64, alpha: f64) -> f64 {
    let n = 200_000;
    let h = 40.0 / n as f64;
    let f = |xi: f64| xi.powf(alpha) * std::f64::consts::PI.sqrt() * (-xi * xi / 4.0).exp() * (xi * x).cos();
    let mut s = f(0.0) + f(40.0);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    s * h / 3.0 / std::f64::consts::PI
}

#[test]
fn principal_value_matches_fourier_symbol() {
    for alpha in [0.8, 4.0 / 3.0, 5.0 / 3.0] {
        for x in [0.0, 0.7, 2.5] {
            let pv = frac_laplacian_pv(&|y: f64| (-y * y).exp(), x, alpha).unwrap();
            let f = fourier_side(x, alpha);
            assert!((pv - f).abs() <= 1e-6 * f.abs().max(1e-3), "alpha {alpha}, x {x}: {pv} vs {f}");
        }
    }
    let alpha = 1.3;
    let exact = 2f64.powf(alpha) * gamma((alpha + 1.0) / 2.0) / std::f64::consts::PI.sqrt();
    assert!((frac_laplacian_pv(&|y: f64| (-y * y).exp(), 0.0, alpha).unwrap() / exact - 1.0).abs() < 1e-8);
}

#[test]
fn laplacian_of_a_constant_vanishes() {
    assert!(frac_laplacian_pv(&|_| 2.0, 0.4, 1.5).unwrap().abs() < 1e-10);
    assert!(frac_laplacian_pv(&|_| 1.0, 0.0, 2.5).is_err());
}

#[test]
fn normalizing_constant_limits() {
    assert!((frac_constant(1.0) - 1.0 / std::f64::consts::PI).abs() < 1e-14);
    // c_alpha -> 0 linearly as alpha -> 0.
    assert!(frac_constant(1e-6) < 1e-6);
}

#[test]
fn kinetic_mode_decays_at_the_eigenvalue() {
    let p = make_params(3.0).unwrap();
    let eta: f64 = 1e-2;
    let horizon = 4.0 / (0.37 * eta.powf(p.alpha));
    let coarse = kinetic_mode_decay(&p, eta, horizon, 2000).unwrap();
    let fine = kinetic_mode_decay(&p, eta, horizon, 4000).unwrap();
    let mu = solve_mu(eta, &p, &default_phi(&p).unwrap(), SolveOptions::default()).unwrap().mu.re;
    assert!((fine.rate / mu - 1.0).abs() <= 0.02, "{} vs {mu}", fine.rate);
    assert!((fine.rate / coarse.rate - 1.0).abs() <= 2e-3, "{} vs {}", fine.rate, coarse.rate);
}

#[test]
fn equilibrium_does_not_decay() {
    let p = make_params(3.0).unwrap();
    let r = kinetic_mode_decay(&p, 0.0, 100.0, 1000).unwrap();
    assert!(r.rate.abs() < 1e-6, "{}", r.rate);
    assert!(kinetic_mode_decay(&p, 1e-2, 1.0, 10).is_err());
}

fn profile(xi: &[f64], t: f64) -> DensityProfile {
    // Fourier transform of a real density: rho_hat(-xi) = conj(rho_hat(xi)).
    let rho_hat = xi.iter().map(|&x| C64::from_polar((-x * x).exp(), 0.3 * x)).collect();
    DensityProfile { xi: xi.to_vec(), rho_hat, t }
}

proptest! {
    #[test]
    fn semigroup(dt1 in 0.0..3.0f64, dt2 in 0.0..3.0f64, kappa in 0.05..2.0f64, alpha in 0.7..1.99f64) {
        let xi: Vec<f64> = (-20..=20).map(|k| 0.25 * k as f64).collect();
        let p0 = profile(&xi, 0.0);
        let two = evolve_rho_hat(&evolve_rho_hat(&p0, dt1, kappa, alpha).unwrap(), dt2, kappa, alpha).unwrap();
        let one = evolve_rho_hat(&p0, dt1 + dt2, kappa, alpha).unwrap();
        for (a, b) in two.rho_hat.iter().zip(&one.rho_hat) {
            prop_assert!((a - b).norm() <= 1e-14);
        }
        prop_assert!((two.t - (dt1 + dt2)).abs() < 1e-14);
        prop_assert!(two.reality_defect() <= 1e-15);
        for (a, b) in one.rho_hat.iter().zip(&p0.rho_hat) {
            prop_assert!(a.norm() <= b.norm());
        }
    }

    #[test]
    fn rejects_bad_parameters(alpha in 2.0..3.0f64) {
        let p0 = profile(&[0.0, 1.0], 0.0);
        prop_assert!(evolve_rho_hat(&p0, 1.0, 1.0, alpha).is_err());
        prop_assert!(evolve_rho_hat(&p0, 1.0, -1.0, 1.2).is_err());
    }
}
