//! Quadrature of Green-kernel integrals
//! u(v) = psi1(v) * int_{-inf}^v psi2 f + psi2(v) * int_v^inf psi1 f,
//! shared by the right inverses of the limiting and perturbed operators.

use num_complex::Complex64 as C64;

use crate::ode::SolutionCurve;
use crate::quad;

type Eval<'a> = Box<dyn Fn(f64) -> (C64, C64) + Sync + 'a>;
type Source<'a> = Box<dyn Fn(f64) -> C64 + Sync + 'a>;

/// A Green-kernel integral applied to a source, with cumulative integrals stored on a grid.
pub struct GreenApplication<'a> {
    pub grid: Vec<f64>,
    psi1: Eval<'a>,
    psi2: Eval<'a>,
    f: Source<'a>,
    /// int_{-inf}^{v_i} psi2 f
    left: Vec<C64>,
    /// int_{v_i}^{inf} psi1 f
    right: Vec<C64>,
}

impl<'a> GreenApplication<'a> {
    /// Cumulative integrals on `grid`; the tails beyond the grid are supplied by the caller.
    pub fn new(
        grid: Vec<f64>,
        psi1: impl Fn(f64) -> (C64, C64) + Sync + 'a,
        psi2: impl Fn(f64) -> (C64, C64) + Sync + 'a,
        f: impl Fn(f64) -> C64 + Sync + 'a,
        left_tail: C64,
        right_tail: C64,
    ) -> Self {
        let n = grid.len();
        let rule = quad::gl8();
        let mut left = vec![C64::new(0.0, 0.0); n];
        let mut right = vec![C64::new(0.0, 0.0); n];
        left[0] = left_tail;
        for i in 1..n {
            let piece: C64 = rule.integrate(grid[i - 1], grid[i], |w| psi2(w).0 * f(w));
            left[i] = left[i - 1] + piece;
        }
        right[n - 1] = right_tail;
        for i in (0..n - 1).rev() {
            let piece: C64 = rule.integrate(grid[i], grid[i + 1], |w| psi1(w).0 * f(w));
            right[i] = right[i + 1] + piece;
        }
        GreenApplication { grid, psi1: Box::new(psi1), psi2: Box::new(psi2), f: Box::new(f), left, right }
    }

    fn locate(&self, v: f64) -> usize {
        let n = self.grid.len();
        match self.grid.binary_search_by(|g| g.partial_cmp(&v).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.clamp(1, n - 1) - 1,
        }
    }

    /// The integral u(v) and its derivative at any v inside the grid.
    pub fn eval(&self, v: f64) -> (C64, C64) {
        let i = self.locate(v);
        let rule = quad::gl8();
        let lo = self.grid[i];
        let hi = self.grid[i + 1];
        let l: C64 = self.left[i] + rule.integrate(lo, v, |w| (self.psi2)(w).0 * (self.f)(w));
        let r: C64 = self.right[i + 1] + rule.integrate(v, hi, |w| (self.psi1)(w).0 * (self.f)(w));
        let (p1, d1) = (self.psi1)(v);
        let (p2, d2) = (self.psi2)(v);
        (p1 * l + p2 * r, d1 * l + d2 * r)
    }

    /// Values at the grid nodes.
    pub fn at_nodes(&self) -> SolutionCurve {
        let mut value = Vec::with_capacity(self.grid.len());
        let mut deriv = Vec::with_capacity(self.grid.len());
        for (i, &v) in self.grid.iter().enumerate() {
            let (p1, d1) = (self.psi1)(v);
            let (p2, d2) = (self.psi2)(v);
            value.push(p1 * self.left[i] + p2 * self.right[i]);
            deriv.push(d1 * self.left[i] + d2 * self.right[i]);
        }
        SolutionCurve::new(self.grid.clone(), value, deriv)
    }

    /// Largest |-u'' + q u - f| over the probe points, with u'' from a seven-point difference.
    pub fn residual(&self, q: &dyn Fn(f64) -> C64, probes: &[f64]) -> f64 {
        const C: [f64; 4] = [-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];
        let (a, b) = (self.grid[0], *self.grid.last().unwrap());
        let mut worst = 0.0f64;
        for &v in probes {
            let h = if v.abs() <= 10.0 { 0.04 } else { 0.004 * v.abs() };
            if v - 3.0 * h < a || v + 3.0 * h > b {
                continue;
            }
            let u0 = self.eval(v).0;
            let mut d2 = u0 * C[0];
            for (k, c) in C.iter().enumerate().skip(1) {
                let kh = k as f64 * h;
                d2 += (self.eval(v + kh).0 + self.eval(v - kh).0) * *c;
            }
            d2 /= h * h;
            let res = (-d2 + q(v) * u0 - (self.f)(v)).norm();
            worst = worst.max(res);
        }
        worst
    }
}

/// Symmetric grid v = a sinh(x), x uniform with step dx, covering [-v_max, v_max] and containing 0.
pub fn sinh_grid(v_max: f64, dx: f64, a: f64) -> (Vec<f64>, Vec<f64>) {
    let x_max = (v_max / a).asinh();
    let half = (x_max / dx).ceil() as usize;
    let step = x_max / half as f64;
    let n = 2 * half + 1;
    let mut v = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for i in 0..n {
        let x = -x_max + i as f64 * step;
        let x = if i == half { 0.0 } else { x };
        v.push(a * x.sinh());
        let mut wt = a * x.cosh() * step;
        if i == 0 || i == n - 1 {
            wt *= 0.5;
        }
        w.push(wt);
    }
    (v, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_particle_green_function() {
        // -u'' + u = f with psi1 = e^{-v}/sqrt2, psi2 = e^{v}/sqrt2 (Wronskian 1).
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (grid, _) = sinh_grid(30.0, 0.02, 1.0);
        let g = GreenApplication::new(
            grid,
            move |v: f64| (C64::new(s * (-v).exp(), 0.0), C64::new(-s * (-v).exp(), 0.0)),
            move |v: f64| (C64::new(s * v.exp(), 0.0), C64::new(s * v.exp(), 0.0)),
            |v: f64| C64::new((-v * v).exp(), 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        );
        let probes: Vec<f64> = (-20..=20).map(|k| k as f64 * 0.25).collect();
        let r = g.residual(&|_| C64::new(1.0, 0.0), &probes);
        assert!(r < 1e-8, "residual {r}");
    }

    #[test]
    fn sinh_grid_contains_origin() {
        let (v, w) = sinh_grid(50.0, 0.01, 1.0);
        assert_eq!(v[v.len() / 2], 0.0);
        assert!((v[0] + 50.0).abs() < 1e-9);
        assert!(w.iter().all(|&x| x > 0.0));
    }
}
