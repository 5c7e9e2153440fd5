//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit status if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use fpspec::airy::{ai, j, rotated_pair};
use fpspec::basis0::{apply_t0, build_basis, solve_psi};
use fpspec::basis_eta::{apply_t_eta, basis_eta, weight, weighted_kernel_bound};
use fpspec::diffusion::kinetic_mode_decay;
use fpspec::eigen::{default_phi, logspace_desc, make_phi, oracle_mu, scan, solve_mu, EigenResult, SolveOptions};
use fpspec::kappa::{kappa_from_scan, kappa_shoot, solve_h0, H0Options};
use fpspec::ode::wronskian_drift;
use fpspec::{make_params, Result};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use statrs::function::gamma::gamma;

type Scans = [(f64, Vec<EigenResult>)];
type Check<'a> = Box<dyn Fn() -> Result<Outcome> + 'a>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn scan_results(beta: f64) -> Result<Vec<EigenResult>> {
    let p = make_params(beta)?;
    let r = scan(&logspace_desc(1e-4, 1e-2, 10), &p, &default_phi(&p)?, jobs(), false)?;
    r.points.into_iter().map(|pt| pt.result.map_err(fpspec::FpError::Fit)).collect()
}

fn slope(results: &[EigenResult]) -> f64 {
    let pts: Vec<(f64, f64)> = results.iter().map(|r| (r.eta.ln(), r.mu.norm().ln())).collect();
    fpspec::eigen::linear_fit(&pts).0
}

fn scaling_exponent(scans: &Scans) -> Result<Outcome> {
    let mut pass = true;
    let mut detail = Vec::new();
    for (beta, res) in scans {
        let alpha = (beta + 1.0) / 3.0;
        let s = slope(res);
        pass &= (s - alpha).abs() <= 0.03;
        detail.push(format!("beta {beta}: slope {s:.4} vs {alpha:.4}"));
    }
    outcome(pass, detail.join("; "))
}

fn kappa_consistency(scans: &Scans) -> Result<Outcome> {
    let mut pass = true;
    let mut detail = Vec::new();
    for (beta, res) in scans {
        let p = make_params(*beta)?;
        let shoot = kappa_shoot(&p)?.kappa_shoot;
        let fit = kappa_from_scan(res, &p)?.kappa;
        let gap = (shoot - fit).abs() / shoot;
        pass &= shoot > 0.0 && gap <= 0.05;
        detail.push(format!("beta {beta}: shoot {shoot:.6} scan {fit:.6} gap {:.2}%", 100.0 * gap));
    }
    outcome(pass, detail.join("; "))
}

fn oracle_agreement() -> Result<Outcome> {
    let p = make_params(3.0)?;
    let eta = 1e-3;
    let mu = solve_mu(eta, &p, &default_phi(&p)?, SolveOptions::default())?.mu;
    let o = oracle_mu(eta, &p, 12.0 * eta.powf(-1.0 / 3.0), 4000)?.mu;
    let gap = (mu - o).norm() / mu.norm();
    outcome(gap <= 0.01, format!("mu {:.10e} oracle {:.10e} gap {gap:.2e}", mu.re, o.re))
}

fn conjugation_symmetry() -> Result<Outcome> {
    let p = make_params(3.0)?;
    let v = 12.0 * 1e-3f64.powf(-1.0 / 3.0);
    let plus = oracle_mu(1e-3, &p, v, 4000)?.mu;
    let minus = oracle_mu(-1e-3, &p, v, 4000)?.mu;
    let gap = (plus - minus.conj()).norm() / plus.norm();
    outcome(gap <= 1e-8, format!("|mu(eta) - conj mu(-eta)| / |mu| = {gap:.2e}"))
}

fn eigenfunction_convergence() -> Result<Outcome> {
    let p = make_params(3.0)?;
    let phi = default_phi(&p)?;
    let mut gaps = Vec::new();
    for eta in [1e-2, 1e-3, 1e-4] {
        gaps.push(solve_mu(eta, &p, &phi, SolveOptions::default())?.l2_gap);
    }
    let pass = gaps[0] > gaps[1] && gaps[1] > gaps[2] && gaps[2] <= 0.05;
    outcome(pass, format!("L2 gaps {:.4} {:.4} {:.4}", gaps[0], gaps[1], gaps[2]))
}

fn wronskian_conservation() -> Result<Outcome> {
    let p = make_params(3.0)?;
    let b0 = build_basis(&p, solve_psi(&p, 100.0)?)?;
    let d0 = wronskian_drift(&b0.psi1, &b0.psi2)?;
    let eta = 1e-3;
    let mut worst = 0.0f64;
    for k in 0..8 {
        let lam = C64::from_polar(0.05, PI * k as f64 / 4.0);
        worst = worst.max(basis_eta(&p, lam, eta)?.wronskian_drift(2.0 * eta.powf(-1.0 / 3.0))?);
    }
    worst = worst.max(basis_eta(&p, C64::new(0.0, 0.0), eta)?.wronskian_drift(2.0 * eta.powf(-1.0 / 3.0))?);
    outcome(d0 <= 1e-8 && worst <= 1e-8, format!("eta = 0: {d0:.2e}; eta = 1e-3, |lambda| <= 0.05: {worst:.2e}"))
}

fn airy_suite() -> Result<Outcome> {
    let ai0 = 1.0 / (3f64.powf(2.0 / 3.0) * gamma(2.0 / 3.0));
    let dai0 = -1.0 / (3f64.powf(1.0 / 3.0) * gamma(1.0 / 3.0));
    let v = ai(C64::new(0.0, 0.0));
    let e0 = (v.ai - ai0).norm().max((v.ai_prime - dai0).norm());
    let mut rng = rand::rngs::StdRng::seed_from_u64(2024);
    let jj = j();
    let (mut ident, mut wr) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let lam = C64::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1));
        let s = rng.gen_range(-12.0..12.0);
        let pair = rotated_pair(lam);
        let (a, b, c) = (pair.a(s).0, pair.b(s).0, pair.c(s).0);
        ident = ident.max((a + jj * b + jj * jj * c).norm() / a.norm().max(b.norm()).max(c.norm()).max(1.0));
        wr = wr.max((pair.wronskian(s) - 1.0 / (2.0 * PI)).norm());
    }
    outcome(
        e0 <= 1e-10 && wr <= 1e-9 && ident <= 1e-10,
        format!("Ai(0), Ai'(0) {e0:.1e}; Wronskian {wr:.1e}; three-solution identity {ident:.1e} on 1000 points"),
    )
}

fn right_inverse_residuals() -> Result<Outcome> {
    let p = make_params(3.0)?;
    let phi = default_phi(&p)?;
    let b0 = build_basis(&p, solve_psi(&p, 100.0)?)?;
    let r0_phi = apply_t0(move |v| phi.eval(v), &b0)?.residual;
    let r0_gauss = apply_t0(|v: f64| (-v * v).exp(), &b0)?.residual;
    let be = basis_eta(&p, C64::new(0.02, 0.01), 1e-3)?;
    let re_phi = apply_t_eta(move |v| C64::new(phi.eval(v), 0.0), &be)?.residual;
    let re_gauss = apply_t_eta(|v: f64| C64::new((-v * v).exp(), 0.0), &be)?.residual;
    let worst = r0_phi.max(r0_gauss).max(re_phi).max(re_gauss);
    outcome(
        worst <= 1e-6,
        format!("T0: Phi {r0_phi:.1e}, Gaussian {r0_gauss:.1e}; T_eta: Phi {re_phi:.1e}, Gaussian {re_gauss:.1e}"),
    )
}

fn weighted_kernel() -> Result<Outcome> {
    let p = make_params(3.0)?;
    let lam = C64::new(0.02, 0.0);
    let mut k = Vec::new();
    for eta in [1e-2, 1e-3, 1e-4] {
        k.push(weighted_kernel_bound(&basis_eta(&p, lam, eta)?, &weight(&p, lam, eta, 1.0)?)?);
    }
    let ratio = k.iter().cloned().fold(0.0, f64::max) / k.iter().cloned().fold(f64::INFINITY, f64::min);
    outcome(ratio <= 2.0, format!("sup constants {:.4} {:.4} {:.4}, ratio {ratio:.3}", k[0], k[1], k[2]))
}

fn h0_local_structure() -> Result<Outcome> {
    let p = make_params(4.0)?;
    let h0 = solve_h0(&p, H0Options::default())?;
    let g = p.gamma;
    let c = (0..60)
        .map(|k| 1e-4 * 1000f64.powf(k as f64 / 59.0))
        .map(|s| (h0.eval(s).0 * s.powf(g) - 1.0).norm() / s.powi(3))
        .fold(0.0, f64::max);
    let im = h0.eval(0.05).0.im;
    let target = -1.0 / 120.0;
    let rel = (im / target - 1.0).abs();
    outcome(c.is_finite() && c < 1.0 && rel <= 0.05, format!("C = {c:.4} on (0, 0.1]; Im H0(0.05) = {im:.6e} ({:.2}% off)", 100.0 * rel))
}

fn kinetic_decay() -> Result<Outcome> {
    let p = make_params(3.0)?;
    let eta: f64 = 1e-2;
    let r = kinetic_mode_decay(&p, eta, 4.0 / (0.37 * eta.powf(p.alpha)), 4000)?;
    let gap = (r.rate - r.mu).abs() / r.mu;
    outcome(gap <= 0.02, format!("rate {:.6e} vs Re mu {:.6e}, gap {:.3}%", r.rate, r.mu, 100.0 * gap))
}

fn penalty_independence() -> Result<Outcome> {
    let p = make_params(3.0)?;
    let w = weight(&p, C64::new(0.0, 0.0), 0.0, 1.0)?;
    let a = solve_mu(1e-3, &p, &make_phi(&p, &w, 1.0, 3.0)?, SolveOptions::default())?.mu;
    let b = solve_mu(1e-3, &p, &make_phi(&p, &w, 2.0, 6.0)?, SolveOptions::default())?.mu;
    let gap = (a - b).norm() / a.norm();
    outcome(gap <= 5e-3, format!("(sigma 1, R 3) {:.10e} vs (sigma 2, R 6) {:.10e}, gap {gap:.1e}", a.re, b.re))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let scans: Result<Vec<(f64, Vec<EigenResult>)>> = [3.0, 4.0].into_iter().map(|b| scan_results(b).map(|r| (b, r))).collect();
    let scan_secs = start.elapsed().as_secs_f64();
    let with_scans = |f: fn(&Scans) -> Result<Outcome>| -> Result<Outcome> {
        match &scans {
            Ok(s) => f(s),
            Err(e) => Err(e.clone()),
        }
    };
    let checks: Vec<(&str, Check<'_>)> = vec![
        ("scaling exponent", Box::new(move || with_scans(scaling_exponent))),
        ("kappa consistency", Box::new(move || with_scans(kappa_consistency))),
        ("oracle agreement", Box::new(oracle_agreement)),
        ("conjugation symmetry", Box::new(conjugation_symmetry)),
        ("eigenfunction convergence", Box::new(eigenfunction_convergence)),
        ("Wronskian conservation", Box::new(wronskian_conservation)),
        ("Airy suite", Box::new(airy_suite)),
        ("right-inverse residuals", Box::new(right_inverse_residuals)),
        ("weighted kernel bound", Box::new(weighted_kernel)),
        ("H0 local structure", Box::new(h0_local_structure)),
        ("kinetic-mode decay", Box::new(kinetic_decay)),
        ("penalty independence", Box::new(penalty_independence)),
    ];
    println!("eigenvalue scans for beta = 3, 4: {scan_secs:.1} s");
    let mut failed = 0;
    for (i, (name, f)) in checks.iter().enumerate() {
        let t = Instant::now();
        let (pass, detail) = match f() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!("{} {:>2} {name}: {detail} [{:.1} s]", if pass { "PASS" } else { "FAIL" }, i + 1, t.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria passed", checks.len() - failed, checks.len());
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
