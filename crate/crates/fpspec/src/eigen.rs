//! The penalized equation [-d^2 + W + i eta v - lambda eta^(2/3)] m = b Phi with b = 1 - <m, Phi>,
//! the constraint B(lambda, eta) = int (lambda - i eta^(1/3) v) m M, the root lambda*(eta)
//! giving mu(eta) = eta^(2/3) lambda*, and a finite-difference eigenvalue oracle.

use faer::Mat;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::basis_eta::{basis_eta, weight, BasisEta, WeightProfile, S0};
use crate::error::{FpError, Result};
use crate::green::sinh_grid;
use crate::model::{bracket, equilibrium_gamma, potential_v, potential_w, ModelParams};
use crate::tridiag::Tridiagonal;

/// Step of the uniform grid in x for v = sinh(x).
pub const NYSTROM_DX: f64 = 0.01;

/// Compactly supported penalty Phi(v) = c <v>^-sigma p1(v) (1 - (v/R)^2)^3, with <Phi, M> = 1.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PenaltyFunction {
    pub sigma: f64,
    pub radius: f64,
    pub gamma: f64,
    pub delta: f64,
    pub scale: f64,
}

impl PenaltyFunction {
    pub fn eval(&self, v: f64) -> f64 {
        if v.abs() >= self.radius {
            return 0.0;
        }
        let t = 1.0 - (v / self.radius).powi(2);
        self.scale * bracket(v).powf(-self.sigma - self.gamma - 2.0 - self.delta) * t * t * t
    }
}

/// Penalty with decay sigma and support radius R, normalized against M.
pub fn make_phi(params: &ModelParams, weights: &WeightProfile, sigma: f64, radius: f64) -> Result<PenaltyFunction> {
    if !(sigma > 0.0) {
        return Err(FpError::InvalidArgument(format!("sigma = {sigma} must be positive")));
    }
    let bulk = S0 * params.eta0.powf(-1.0 / 3.0);
    if !(radius > 0.0 && radius < bulk) {
        return Err(FpError::InvalidArgument(format!(
            "support radius {radius} must lie in (0, {bulk:.4}) so that p1 is the bulk weight on it"
        )));
    }
    let mut phi = PenaltyFunction { sigma, radius, gamma: params.gamma, delta: weights.delta, scale: 1.0 };
    let g = params.gamma;
    let (norm, _) = crate::quad::adaptive(|v: f64| phi.eval(v) * equilibrium_gamma(g, v), -radius, radius, 1e-15, 1e-14)?;
    phi.scale = 1.0 / norm;
    Ok(phi)
}

/// Default penalty: sigma = 1, R = 3, delta = 1.
pub fn default_phi(params: &ModelParams) -> Result<PenaltyFunction> {
    let w = weight(params, C64::new(0.0, 0.0), 0.0, 1.0)?;
    make_phi(params, &w, 1.0, 3.0)
}

/// Quadrature grid v = sinh(x) on [-S_MAX eta^(-1/3), S_MAX eta^(-1/3)] with trapezoid weights.
#[derive(Debug, Clone)]
pub struct NystromGrid {
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    /// Actual step in x = asinh v.
    pub dx: f64,
}

impl NystromGrid {
    pub fn new(v_max: f64, dx: f64) -> Self {
        let (v, w) = sinh_grid(v_max, dx, 1.0);
        // The step is adjusted so that the grid ends exactly at v_max.
        let dx = v[1].asinh() - v[0].asinh();
        NystromGrid { v, w, dx }
    }

    pub fn origin(&self) -> usize {
        self.v.len() / 2
    }
}

#[derive(Debug, Clone)]
pub struct PenalizedSolution {
    pub lambda: C64,
    pub eta: f64,
    pub grid: NystromGrid,
    /// M_{lambda,eta} at the grid nodes.
    pub m: Vec<C64>,
    /// m / p2.
    pub h: Vec<C64>,
    /// Penalty coefficient 1 - <m, Phi>.
    pub b: C64,
    /// Finite-difference defect of the differential equation, relative to max |m|.
    pub residual: f64,
    /// Wronskian drift of the basis used.
    pub wronskian_drift: f64,
}

/// Assemble and solve (I - K~ V + (K~ Phi)(w Phi)^T) m = K~ Phi, where K~ is the kernel with
/// trapezoid weights w plus a diagonal end correction.
pub fn solve_penalized(params: &ModelParams, basis: &BasisEta, phi: &PenaltyFunction, dx: f64) -> Result<PenalizedSolution> {
    let g = params.gamma;
    let grid = NystromGrid::new(basis.v_max, dx);
    let (c1, c2) = basis.sample(&grid.v);
    let n = grid.v.len();
    let p1 = &c1.value;
    let p2 = &c2.value;
    let wphi: Vec<f64> = grid.v.iter().zip(&grid.w).map(|(&v, &w)| w * phi.eval(v)).collect();
    let wv: Vec<f64> = grid.v.iter().zip(&grid.w).map(|(&v, &w)| w * potential_v(g, v)).collect();
    let kernel = |i: usize, j: usize| if j <= i { p1[i] * p2[j] } else { p2[i] * p1[j] };
    // Euler-Maclaurin correction of the trapezoid sums at the kernel diagonal. With Wronskian 1 the
    // derivative terms of the two one-sided sums collapse to -(dx^2/12) cosh(x_i)^2 g(v_i).
    let corr: Vec<f64> = grid.v.iter().map(|&v| -grid.dx * grid.dx / 12.0 * (1.0 + v * v)).collect();
    let vpot: Vec<f64> = grid.v.iter().map(|&v| potential_v(g, v)).collect();
    let phis: Vec<f64> = grid.v.iter().map(|&v| phi.eval(v)).collect();
    let kphi: Vec<C64> =
        (0..n).map(|i| (0..n).map(|j| kernel(i, j) * wphi[j]).sum::<C64>() + corr[i] * phis[i]).collect();
    let one = C64::new(1.0, 0.0);
    let a: Mat<C64> = Mat::from_fn(n, n, |i, j| {
        let d = if i == j { one - corr[i] * vpot[i] } else { C64::new(0.0, 0.0) };
        d - kernel(i, j) * wv[j] + kphi[i] * wphi[j]
    });
    let rhs: Mat<C64> = Mat::from_fn(n, 1, |i, _| kphi[i]);
    let sol = dense_solve(a, rhs);
    let m: Vec<C64> = (0..n).map(|i| sol[(i, 0)]).collect();
    if m.iter().any(|z| !z.is_finite()) {
        return Err(FpError::Singular("penalized system".into()));
    }
    let pen: C64 = m.iter().zip(&wphi).map(|(z, w)| z * w).sum();
    let b = one - pen;
    let weights = weight(params, basis.lambda, basis.eta, phi.delta)?;
    let h: Vec<C64> = m.iter().zip(&grid.v).map(|(z, &v)| z / weights.p2(v)).collect();
    let residual = fd_defect(params, basis.lambda, basis.eta, &grid, &m, b, phi);
    let wronskian_drift = crate::ode::wronskian_drift(&c1, &c2)?;
    Ok(PenalizedSolution { lambda: basis.lambda, eta: basis.eta, grid, m, h, b, residual, wronskian_drift })
}

/// Sequential partial-pivoting LU solve. faer's default parallelism follows the enclosing rayon
/// pool, which would make results depend on the scan's thread count.
fn dense_solve(mut a: Mat<C64>, mut rhs: Mat<C64>) -> Mat<C64> {
    use faer::dyn_stack::{MemBuffer, MemStack};
    use faer::linalg::lu::partial_pivoting::{factor, solve};
    let n = a.nrows();
    let par = faer::Par::Seq;
    let mut fwd = vec![0usize; n];
    let mut bwd = vec![0usize; n];
    let req = factor::lu_in_place_scratch::<usize, C64>(n, n, par, Default::default())
        .or(solve::solve_in_place_scratch::<usize, C64>(n, rhs.ncols(), par));
    let mut buf = MemBuffer::new(req);
    let stack = MemStack::new(&mut buf);
    let (_, perm) = factor::lu_in_place(a.as_mut(), &mut fwd, &mut bwd, par, stack, Default::default());
    solve::solve_in_place(a.as_ref(), a.as_ref(), perm, rhs.as_mut(), par, stack);
    rhs
}

/// max |[-d^2 + W + i eta v - lambda eta^(2/3)] m - b Phi| / max |m| over the nodes with |v| <= half the box,
/// with second derivatives from fourth-order differences in x = asinh v.
fn fd_defect(params: &ModelParams, lambda: C64, eta: f64, grid: &NystromGrid, m: &[C64], b: C64, phi: &PenaltyFunction) -> f64 {
    let g = params.gamma;
    let dx = grid.dx;
    let n = m.len();
    let v_lim = 0.5 * grid.v[n - 1];
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let shift = lambda * eta.powf(2.0 / 3.0);
    let mut worst = 0.0f64;
    for i in 2..n - 2 {
        let v = grid.v[i];
        if v.abs() > v_lim {
            continue;
        }
        let m_x = (m[i - 2] - m[i - 1] * 8.0 + m[i + 1] * 8.0 - m[i + 2]) / (12.0 * dx);
        let m_xx = (-m[i - 2] + m[i - 1] * 16.0 - m[i] * 30.0 + m[i + 1] * 16.0 - m[i + 2]) / (12.0 * dx * dx);
        let x = v.asinh();
        let m_vv = (m_xx - m_x * x.tanh()) / x.cosh().powi(2);
        let lhs = -m_vv + (C64::new(potential_w(g, v), eta * v) - shift) * m[i];
        worst = worst.max((lhs - b * phi.eval(v)).norm());
    }
    worst / scale
}

/// Constraint value and its two parts.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Constraint {
    /// int (lambda - i eta^(1/3) v) m M
    pub value: C64,
    /// int m M
    pub mass: C64,
    /// int v m M
    pub first_moment: C64,
    /// -eta^(-2/3) b, equal to `value` for the exact solution.
    pub from_penalty: C64,
}

pub fn constraint_b(sol: &PenalizedSolution, params: &ModelParams) -> Constraint {
    let g = params.gamma;
    let mut mass = C64::new(0.0, 0.0);
    let mut moment = C64::new(0.0, 0.0);
    for ((&v, &w), z) in sol.grid.v.iter().zip(&sol.grid.w).zip(&sol.m) {
        let mm = z * (w * equilibrium_gamma(g, v));
        mass += mm;
        moment += mm * v;
    }
    let e3 = sol.eta.cbrt();
    let value = sol.lambda * mass - C64::i() * e3 * moment;
    Constraint { value, mass, first_moment: moment, from_penalty: -sol.b / (e3 * e3) }
}

/// One eigen-solve.
#[derive(Debug, Clone, Serialize)]
pub struct EigenResult {
    pub eta: f64,
    pub lambda_star: C64,
    pub mu: C64,
    /// |B(lambda*, eta)|
    pub b_residual: f64,
    pub oracle_mu: Option<C64>,
    pub rel_gap: Option<f64>,
    pub iterations: usize,
    /// Finite-difference defect of L_eta M_eta - mu M_eta, relative to max |M_eta|.
    pub eigen_defect: f64,
    /// ||M_eta - M||_2 with M_eta(0) = 1.
    pub l2_gap: f64,
    pub wronskian_drift: f64,
    #[serde(skip)]
    pub eigenfunction: Option<(Vec<f64>, Vec<C64>)>,
}

/// Settings for `solve_mu`.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub dx: f64,
    pub max_iterations: usize,
    /// Also run the oracle and record the gap.
    pub with_oracle: bool,
    /// Initial guess for lambda; the oracle value is used when absent.
    pub guess: Option<C64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { dx: NYSTROM_DX, max_iterations: 50, with_oracle: false, guess: None }
    }
}

/// Secant iteration on lambda -> B(lambda, eta). Negative eta is reduced to |eta| by complex
/// conjugation, which maps the operator at eta to the one at -eta.
pub fn solve_mu(eta: f64, params: &ModelParams, phi: &PenaltyFunction, opts: SolveOptions) -> Result<EigenResult> {
    if eta == 0.0 {
        return Err(FpError::InvalidArgument("eta = 0 has the trivial eigen-couple (0, M)".into()));
    }
    if eta < 0.0 {
        let opts = SolveOptions { guess: opts.guess.map(|g| g.conj()), ..opts };
        let mut r = solve_mu(-eta, params, phi, opts)?;
        r.eta = eta;
        r.lambda_star = r.lambda_star.conj();
        r.mu = r.mu.conj();
        r.oracle_mu = r.oracle_mu.map(|z| z.conj());
        if let Some((_, m)) = r.eigenfunction.as_mut() {
            m.iter_mut().for_each(|z| *z = z.conj());
        }
        return Ok(r);
    }
    if eta > params.eta0 {
        return Err(FpError::InvalidArgument(format!("eta = {eta} exceeds eta0 = {}", params.eta0)));
    }
    let e23 = eta.powf(2.0 / 3.0);
    let quick = oracle_mu(eta, params, 12.0 * eta.powf(-1.0 / 3.0), 4000)?;
    let mut l0 = opts.guess.unwrap_or(quick.mu / e23);
    if l0.norm() > params.lambda0 {
        return Err(FpError::RootEscaped { modulus: l0.norm(), bound: params.lambda0 });
    }
    let tol = params.tol.root * params.m_norm_sq();
    let eval = |l: C64| -> Result<(C64, PenalizedSolution)> {
        let basis = basis_eta(params, l, eta)?;
        let sol = solve_penalized(params, &basis, phi, opts.dx)?;
        Ok((constraint_b(&sol, params).value, sol))
    };
    let (mut f0, _) = eval(l0)?;
    let mut l1 = l0 * 1.001 + C64::new(1e-9, 0.0);
    let (mut f1, mut sol) = eval(l1)?;
    let mut iterations = 2;
    while f1.norm() > tol {
        if iterations >= opts.max_iterations {
            return Err(FpError::RootNotFound { iterations, residual: f1.norm() });
        }
        let denom = f1 - f0;
        if denom.norm() == 0.0 {
            return Err(FpError::Stagnation { iterations });
        }
        let l2 = l1 - f1 * (l1 - l0) / denom;
        if l2.norm() > params.lambda0 {
            return Err(FpError::RootEscaped { modulus: l2.norm(), bound: params.lambda0 });
        }
        l0 = l1;
        f0 = f1;
        l1 = l2;
        let (f, s) = eval(l1)?;
        f1 = f;
        sol = s;
        iterations += 1;
        if (l1 - l0).norm() <= 1e-14 * l1.norm() {
            break;
        }
    }
    let mu = l1 * e23;
    let g = params.gamma;
    let m0 = sol.m[sol.grid.origin()];
    let normalized: Vec<C64> = sol.m.iter().map(|z| z / m0).collect();
    let l2_gap = normalized
        .iter()
        .zip(&sol.grid.v)
        .zip(&sol.grid.w)
        .map(|((z, &v), &w)| w * (z - equilibrium_gamma(g, v)).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let (oracle, rel_gap) = if opts.with_oracle {
        let o = oracle_mu(eta, params, 12.0 * eta.powf(-1.0 / 3.0), 4000)?.mu;
        (Some(o), Some((mu - o).norm() / mu.norm()))
    } else {
        (None, None)
    };
    Ok(EigenResult {
        eta,
        lambda_star: l1,
        mu,
        b_residual: f1.norm(),
        oracle_mu: oracle,
        rel_gap,
        iterations,
        eigen_defect: sol.residual,
        l2_gap,
        wronskian_drift: sol.wronskian_drift,
        eigenfunction: Some((sol.grid.v.clone(), normalized)),
    })
}

/// Output of the finite-difference oracle.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OracleResult {
    /// Richardson extrapolation over n and 2n points.
    pub mu: C64,
    pub coarse: C64,
    pub fine: C64,
    /// |second eigenvalue| / |first| on the coarse grid.
    pub separation: f64,
}

/// Smallest eigenvalue of the tridiagonal discretization of L_eta on [-v_cut, v_cut].
pub fn oracle_mu(eta: f64, params: &ModelParams, v_cut: f64, n: usize) -> Result<OracleResult> {
    if eta != 0.0 && v_cut < 4.0 * eta.abs().powf(-1.0 / 3.0) {
        return Err(FpError::InvalidArgument(format!("v_cut = {v_cut} is below 4 |eta|^(-1/3)")));
    }
    if n < 2000 {
        return Err(FpError::InvalidArgument(format!("n = {n} must be at least 2000")));
    }
    let (coarse, h1, separation) = fd_eigen(eta, params.gamma, v_cut, n, true)?;
    let (fine, h2, _) = fd_eigen(eta, params.gamma, v_cut, 2 * n, false)?;
    if separation < 10.0 {
        return Err(FpError::Cluster { first: coarse.norm(), second: coarse.norm() * separation });
    }
    let mu = (fine * (h1 * h1) - coarse * (h2 * h2)) / (h1 * h1 - h2 * h2);
    Ok(OracleResult { mu, coarse, fine, separation })
}

/// The discrete operator with the balanced potential (M(v+h) - 2M(v) + M(v-h)) / (h^2 M(v)),
/// which keeps the sampled M in the discrete kernel at eta = 0.
pub fn fd_operator(eta: f64, gamma: f64, v_cut: f64, n: usize) -> (Vec<f64>, Tridiagonal) {
    let h = 2.0 * v_cut / (n + 1) as f64;
    let v: Vec<f64> = (1..=n).map(|i| -v_cut + i as f64 * h).collect();
    let m = |x: f64| equilibrium_gamma(gamma, x);
    let off = C64::new(-1.0 / (h * h), 0.0);
    let diag = v
        .iter()
        .map(|&x| {
            let w = (m(x + h) - 2.0 * m(x) + m(x - h)) / (h * h * m(x));
            C64::new(2.0 / (h * h) + w, eta * x)
        })
        .collect();
    (v, Tridiagonal { lower: vec![off; n - 1], diag, upper: vec![off; n - 1] })
}

/// Eigenvalue of smallest modulus, the grid step, and (optionally) the separation ratio.
fn fd_eigen(eta: f64, gamma: f64, v_cut: f64, n: usize, separation: bool) -> Result<(C64, f64, f64)> {
    let (v, a) = fd_operator(eta, gamma, v_cut, n);
    let h = v[1] - v[0];
    let lu = a.factor()?;
    let start: Vec<C64> = v.iter().map(|&x| C64::new(equilibrium_gamma(gamma, x), 0.0)).collect();
    let (mu, x) = inverse_iteration(&lu, start)?;
    let sep = if separation {
        let other: Vec<C64> = v.iter().map(|&x| C64::new(x * equilibrium_gamma(gamma, x), 0.0)).collect();
        deflated_modulus(&lu, other, &x) / mu.norm().max(f64::MIN_POSITIVE)
    } else {
        f64::INFINITY
    };
    Ok((mu, h, sep))
}

fn bilinear(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Modulus of the next eigenvalue after deflating `u`. The next eigenvalues may form a pair of
/// equal modulus, so only the growth rate of the iterates is used.
fn deflated_modulus(lu: &crate::tridiag::TridiagLu, mut x: Vec<C64>, u: &[C64]) -> f64 {
    let uu = bilinear(u, u);
    let project = |x: &mut Vec<C64>| {
        let c = bilinear(u, x) / uu;
        for (xi, ui) in x.iter_mut().zip(u) {
            *xi -= c * ui;
        }
    };
    let norm = |x: &[C64]| x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut rates = Vec::new();
    for _ in 0..60 {
        project(&mut x);
        let nx = norm(&x);
        x.iter_mut().for_each(|z| *z /= nx);
        let mut y = lu.solve(&x);
        project(&mut y);
        rates.push(1.0 / norm(&y));
        x = y;
    }
    // Geometric mean over the last iterations smooths the beating of a pair.
    let tail = &rates[40..];
    (tail.iter().map(|r| r.ln()).sum::<f64>() / tail.len() as f64).exp()
}

/// Inverse iteration with shift 0 and the bilinear Rayleigh quotient (the matrix is complex symmetric).
fn inverse_iteration(lu: &crate::tridiag::TridiagLu, mut x: Vec<C64>) -> Result<(C64, Vec<C64>)> {
    // With y = A^-1 x the quotient (x.x)/(x.y) avoids the cancellation of forming A y.
    let mut prev = C64::new(f64::INFINITY, 0.0);
    let mut last_change = f64::INFINITY;
    for k in 0..200 {
        let mut y = lu.solve(&x);
        let rq = bilinear(&x, &x) / bilinear(&x, &y);
        let nrm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        y.iter_mut().for_each(|z| *z /= nrm);
        x = y;
        let change = (rq - prev).norm() / rq.norm();
        // Either converged, or stalled at the rounding floor of the solve.
        if change <= 1e-13 || (k >= 10 && change >= last_change && change <= 1e-10) {
            return Ok((rq, x));
        }
        last_change = change;
        prev = rq;
    }
    Err(FpError::Stagnation { iterations: 200 })
}

/// Scan output: per-point outcomes and the log-log fit.
#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub beta: f64,
    pub points: Vec<ScanPoint>,
    /// Least-squares slope of log |mu| against log eta.
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanPoint {
    pub eta: f64,
    pub result: std::result::Result<EigenResult, String>,
}

/// Solve at each eta, ordered by descending |eta|, on `jobs` threads. Each point is seeded
/// independently by the finite-difference oracle, so the order only affects scheduling.
pub fn scan(etas: &[f64], params: &ModelParams, phi: &PenaltyFunction, jobs: usize, with_oracle: bool) -> Result<ScanReport> {
    if etas.is_empty() {
        return Err(FpError::InvalidArgument("empty eta list".into()));
    }
    let mut sorted = etas.to_vec();
    sorted.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    let opts = SolveOptions { with_oracle, ..Default::default() };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| FpError::InvalidArgument(format!("thread pool: {e}")))?;
    let points: Vec<ScanPoint> = pool.install(|| {
        sorted
            .par_iter()
            .map(|&eta| ScanPoint { eta, result: solve_mu(eta, params, phi, opts).map_err(|e| e.to_string()) })
            .collect()
    });
    let ok: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.result.as_ref().ok().map(|r| (p.eta.abs().ln(), r.mu.norm().ln())))
        .collect();
    let (slope, intercept) = if ok.len() >= 2 { linear_fit(&ok) } else { (f64::NAN, f64::NAN) };
    Ok(ScanReport { beta: params.beta, points, slope, intercept })
}

/// Ordinary least squares y = slope x + intercept.
pub fn linear_fit(xy: &[(f64, f64)]) -> (f64, f64) {
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Log-spaced values from hi down to lo.
pub fn logspace_desc(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![hi];
    }
    let (a, b) = (hi.ln(), lo.ln());
    (0..points).map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_params;

    #[test]
    fn oracle_kernel_at_zero_eta() {
        let p = make_params(3.0).unwrap();
        let (v, a) = fd_operator(0.0, p.gamma, 40.0, 2000);
        let m: Vec<C64> = v.iter().map(|&x| C64::new(equilibrium_gamma(p.gamma, x), 0.0)).collect();
        let r = a.apply(&m);
        // Only the truncated boundary rows see a defect.
        let interior = r[1..r.len() - 1].iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(interior < 1e-10);
    }

    #[test]
    fn fit_of_exact_line() {
        let (s, c) = linear_fit(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]);
        assert!((s - 2.0).abs() < 1e-14 && (c - 1.0).abs() < 1e-14);
    }
}
