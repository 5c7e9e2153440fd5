//! Solutions of the limiting operator -d^2 + W~: the even solution psi, the decaying pair
//! (psi1, psi2), the growing companion Z of M, and the right inverse T0.

use num_complex::Complex64 as C64;

use crate::error::{FpError, Result};
use crate::green::{sinh_grid, GreenApplication};
use crate::model::{bracket, equilibrium_gamma, potential_w, potential_w_tilde, ModelParams};
use crate::ode::{integrate, SolutionCurve};
use crate::quad;

/// Basis of the limiting operator on [-v_max, v_max] with power-law continuation beyond.
#[derive(Debug, Clone)]
pub struct Basis0 {
    pub gamma: f64,
    pub v_max: f64,
    pub psi: SolutionCurve,
    /// Decays like c1 v^-gamma at +inf.
    pub psi1: SolutionCurve,
    /// psi1 mirrored; decays at -inf.
    pub psi2: SolutionCurve,
    /// psi(v) ~ c v^(gamma+1) (1 + d1 v^-2 + d2 v^-4) for large v.
    pub c: f64,
    pub d1: f64,
    pub d2: f64,
    pub c1: f64,
    pub c2: f64,
    /// Integral of psi^-2 over R.
    pub total: f64,
    pub z: Companion,
}

/// Z(v) = M(v) int_0^v M^-2, the second solution of [-d^2 + W] Z = 0.
#[derive(Debug, Clone)]
pub struct Companion {
    pub curve: SolutionCurve,
    /// Largest |-Z'' + W Z| / max(1, |Z|) at interior probes.
    pub residual: f64,
    /// Largest Z(v) / <v>^(gamma+1).
    pub growth: f64,
}

/// A right inverse applied to one source, with its differential residual.
pub struct RightInverse<'a> {
    pub op: GreenApplication<'a>,
    pub residual: f64,
}

/// Integrate psi'' = W~ psi from psi(0) = 1, psi'(0) = 0 to v_max and extend by evenness.
pub fn solve_psi(params: &ModelParams, v_max: f64) -> Result<SolutionCurve> {
    if v_max < 50.0 {
        return Err(FpError::InvalidArgument(format!("v_max = {v_max} must be at least 50")));
    }
    let g = params.gamma;
    let q = move |v: f64| C64::new(potential_w_tilde(g, v), 0.0);
    let pos = integrate(&q, 0.0, v_max, C64::new(1.0, 0.0), C64::new(0.0, 0.0), params.tol.ode)?;
    let full = pos.mirror().join(&pos);
    if let Some(i) = full.value.iter().position(|y| !(y.re > 0.0)) {
        return Err(FpError::Vanishing { at: full.grid[i] });
    }
    Ok(full)
}

/// Least squares fit of y / v^p = a0 + a1 v^-2 + a2 v^-4 over the nodes in [lo, hi].
pub(crate) fn fit_power_tail(grid: &[f64], y: &[f64], p: f64, lo: f64, hi: f64) -> [f64; 3] {
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for (&v, &yv) in grid.iter().zip(y) {
        if v < lo || v > hi {
            continue;
        }
        let u = v.powi(-2);
        let row = [1.0, u, u * u];
        let t = yv / v.powf(p);
        for i in 0..3 {
            atb[i] += row[i] * t;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    solve3(ata, atb)
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for k in 0..3 {
        let piv = (k..3).max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap()).unwrap();
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..3 {
            let f = a[i][k] / a[k][k];
            for j in k..3 {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = [0.0; 3];
    for k in (0..3).rev() {
        let s: f64 = (k + 1..3).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

/// Build (psi1, psi2) with Wronskian 1 from psi, using int_v^inf psi^-2 with an analytic tail.
pub fn build_basis(params: &ModelParams, psi: SolutionCurve) -> Result<Basis0> {
    let g = params.gamma;
    let v_max = psi.end();
    let re: Vec<f64> = psi.value.iter().map(|y| y.re).collect();
    let [c, a1, a2] = fit_power_tail(&psi.grid, &re, g + 1.0, 0.5 * v_max, v_max);
    let [c_inner, _, _] = fit_power_tail(&psi.grid, &re, g + 1.0, 0.25 * v_max, 0.75 * v_max);
    if !((c - c_inner).abs() <= 1e-4 * c.abs()) {
        return Err(FpError::Fit(format!("psi tail constant not stabilized ({c} vs {c_inner})")));
    }
    let (d1, d2) = (a1 / c, a2 / c);
    let tail = |v: f64| tail_inverse_square(g, c, d1, d2, v);

    let q = move |v: f64| C64::new(potential_w_tilde(g, v), 0.0);
    let n = psi.len();
    let mut a = vec![0.0f64; n];
    a[n - 1] = tail(v_max);
    for i in (0..n - 1).rev() {
        let piece: f64 = psi.integrate_smooth(&q, psi.grid[i], psi.grid[i + 1], |_, y| 1.0 / (y.re * y.re));
        a[i] = a[i + 1] + piece;
    }
    let mid = n / 2;
    debug_assert!(psi.grid[mid] == 0.0);
    let total = 2.0 * a[mid];
    let root = total.sqrt();
    let mut psi1 = SolutionCurve::new(psi.grid.clone(), vec![C64::new(0.0, 0.0); n], vec![C64::new(0.0, 0.0); n]);
    for i in 0..n {
        let (y, dy) = (psi.value[i].re, psi.derivative[i].re);
        psi1.value[i] = C64::new(y * a[i] / root, 0.0);
        psi1.derivative[i] = C64::new((dy * a[i] - 1.0 / y) / root, 0.0);
    }
    let psi2 = psi1.mirror();

    let p1: Vec<f64> = psi1.value.iter().map(|y| y.re).collect();
    let [c1, _, _] = fit_power_tail(&psi1.grid, &p1, -g, 0.5 * v_max, v_max);
    let p2: Vec<f64> = psi2.value.iter().map(|y| y.re).collect();
    let [c2, _, _] = fit_power_tail(&psi2.grid, &p2, g + 1.0, 0.5 * v_max, v_max);
    let z = companion_z(params, v_max)?;
    Ok(Basis0 { gamma: g, v_max, psi, psi1, psi2, c, d1, d2, c1, c2, total, z })
}

/// int_v^inf of psi^-2 for psi = c v^(g+1)(1 + d1 v^-2 + d2 v^-4).
fn tail_inverse_square(g: f64, c: f64, d1: f64, d2: f64, v: f64) -> f64 {
    let e = 2.0 * g + 1.0;
    (v.powf(-e) / e - 2.0 * d1 * v.powf(-e - 2.0) / (e + 2.0) + (3.0 * d1 * d1 - 2.0 * d2) * v.powf(-e - 4.0) / (e + 4.0))
        / (c * c)
}

impl Basis0 {
    /// The potential of the limiting operator.
    pub fn q(&self) -> impl Fn(f64) -> C64 {
        let g = self.gamma;
        move |v| C64::new(potential_w_tilde(g, v), 0.0)
    }

    /// psi and psi' at any v, from the asymptotic fit outside the integrated range.
    pub fn psi_at(&self, v: f64) -> (f64, f64) {
        if v.abs() <= self.v_max {
            let (y, d) = self.psi.eval_smooth(&self.q(), v);
            return (y.re, d.re);
        }
        let x = v.abs();
        let p = self.gamma + 1.0;
        let u = x.powi(-2);
        let y = self.c * x.powf(p) * (1.0 + self.d1 * u + self.d2 * u * u);
        let d = self.c * (p * x.powf(p - 1.0) * (1.0 + self.d1 * u + self.d2 * u * u)
            + x.powf(p) * (-2.0 * self.d1 * u / x - 4.0 * self.d2 * u * u / x));
        (y, d * v.signum())
    }

    /// psi1 and its derivative at any v.
    pub fn psi1_at(&self, v: f64) -> (f64, f64) {
        if v.abs() <= self.v_max {
            let (y, d) = self.psi1.eval_smooth(&self.q(), v);
            return (y.re, d.re);
        }
        let (y, d) = self.psi_at(v);
        let t = tail_inverse_square(self.gamma, self.c, self.d1, self.d2, v.abs());
        let a = if v > 0.0 { t } else { self.total - t };
        let root = self.total.sqrt();
        (y * a / root, (d * a - 1.0 / y) / root)
    }

    /// psi2(v) = psi1(-v).
    pub fn psi2_at(&self, v: f64) -> (f64, f64) {
        let (y, d) = self.psi1_at(-v);
        (y, -d)
    }

    /// Symmetric evaluation grid for kernel quadratures.
    pub fn kernel_grid(&self) -> Vec<f64> {
        sinh_grid(self.v_max, 0.02, 1.0).0
    }
}

fn as_c(p: (f64, f64)) -> (C64, C64) {
    (C64::new(p.0, 0.0), C64::new(p.1, 0.0))
}

/// Estimated decay exponent of f from its values at v_max/2 and v_max on both sides.
pub(crate) fn decay_exponent(f: &dyn Fn(f64) -> f64, v_max: f64) -> f64 {
    let mut worst = f64::INFINITY;
    for s in [1.0, -1.0] {
        let a = f(s * 0.5 * v_max).abs();
        let b = f(s * v_max).abs();
        if b == 0.0 {
            continue;
        }
        if a == 0.0 {
            return 0.0;
        }
        worst = worst.min((a / b).ln() / 2f64.ln());
    }
    worst
}

/// T0 f = psi1(v) int_{-inf}^v psi2 f + psi2(v) int_v^inf psi1 f, with its residual.
pub fn apply_t0<'a>(f: impl Fn(f64) -> f64 + Sync + 'a, basis: &'a Basis0) -> Result<RightInverse<'a>> {
    let g = basis.gamma;
    let sigma = decay_exponent(&f, basis.v_max);
    if sigma <= g + 2.0 {
        return Err(FpError::Decay { estimated: sigma, required: g + 2.0 });
    }
    let vm = basis.v_max;
    let (rt, _) = quad::adaptive_to_infinity(|w: f64| basis.psi1_at(w).0 * f(w), vm, 1e-16, 1e-12)?;
    let (lt, _) = quad::adaptive_to_infinity(|w: f64| basis.psi2_at(-w).0 * f(-w), vm, 1e-16, 1e-12)?;
    let grid = basis.kernel_grid();
    let probes: Vec<f64> = grid.iter().copied().filter(|v| v.abs() <= 0.8 * vm).collect();
    let op = GreenApplication::new(
        grid,
        move |v| as_c(basis.psi1_at(v)),
        move |v| as_c(basis.psi2_at(v)),
        move |v| C64::new(f(v), 0.0),
        C64::new(lt, 0.0),
        C64::new(rt, 0.0),
    );
    let residual = op.residual(&|v| C64::new(potential_w_tilde(g, v), 0.0), &probes);
    Ok(RightInverse { op, residual })
}

/// sup over v of <v>^gamma int |K0(v, w)| <w>^(-gamma-delta-2) dw.
pub fn kernel_bound_check(basis: &Basis0, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 2.0) {
        return Err(FpError::InvalidArgument(format!("delta = {delta} must lie in (0, 2)")));
    }
    let g = basis.gamma;
    // The kernel is positive, so the weighted integral is T0 applied to the weight.
    let t = apply_t0(move |w| bracket(w).powf(-g - delta - 2.0), basis)?;
    let nodes = t.op.at_nodes();
    Ok(nodes.grid.iter().zip(&nodes.value).map(|(v, u)| u.re * bracket(*v).powf(g)).fold(0.0, f64::max))
}

/// Z(v) = M(v) int_0^v M^-2 on [-v_max, v_max], with its residual and growth diagnostics.
pub fn companion_z(params: &ModelParams, v_max: f64) -> Result<Companion> {
    let g = params.gamma;
    let (grid, _) = sinh_grid(v_max, 0.01, 1.0);
    let mid = grid.len() / 2;
    let inv_sq = move |w: f64| (1.0 + w * w).powf(g);
    let rule = quad::gl8();
    let mut acc = vec![0.0f64; grid.len()];
    for i in mid + 1..grid.len() {
        acc[i] = acc[i - 1] + rule.integrate(grid[i - 1], grid[i], inv_sq);
    }
    for i in (0..mid).rev() {
        acc[i] = -acc[grid.len() - 1 - i];
    }
    let m = |v: f64| equilibrium_gamma(g, v);
    let dm = |v: f64| -g * v * (1.0 + v * v).powf(-0.5 * g - 1.0);
    let value: Vec<C64> = grid.iter().zip(&acc).map(|(&v, &j)| C64::new(m(v) * j, 0.0)).collect();
    let deriv: Vec<C64> = grid.iter().zip(&acc).map(|(&v, &j)| C64::new(dm(v) * j + 1.0 / m(v), 0.0)).collect();
    let curve = SolutionCurve::new(grid.clone(), value, deriv);

    // Z at arbitrary points from the nearest node plus a Gauss panel.
    let z_at = |v: f64| {
        let i = curve.locate(v);
        let j = acc[i] + rule.integrate(grid[i], v, inv_sq);
        m(v) * j
    };
    const C: [f64; 4] = [-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];
    let mut residual = 0.0f64;
    let mut growth = 0.0f64;
    for &v in grid.iter().filter(|v| v.abs() <= v_max - 1.0) {
        let h = 0.02 * (1.0 + v.abs()).sqrt();
        let z0 = z_at(v);
        let mut d2 = z0 * C[0];
        for (k, c) in C.iter().enumerate().skip(1) {
            let kh = k as f64 * h;
            d2 += (z_at(v + kh) + z_at(v - kh)) * c;
        }
        d2 /= h * h;
        residual = residual.max((-d2 + potential_w(g, v) * z0).abs() / z0.abs().max(1.0));
        growth = growth.max(z0.abs() / bracket(v).powf(g + 1.0));
    }
    Ok(Companion { curve, residual, growth })
}
