//! Adaptive Dormand-Prince 5(4) integration of y'' = q(x) y with Hermite dense output,
//! and Frobenius startup at the regular singular point s = 0.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{FpError, Result};
use crate::quad::{self, Integrand};

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejected: usize,
    /// Largest accepted local error, in units of the tolerance.
    pub max_local_error: f64,
}

/// A sampled solution with derivative on an increasing grid.
#[derive(Debug, Clone)]
pub struct SolutionCurve {
    pub grid: Vec<f64>,
    pub value: Vec<C64>,
    pub derivative: Vec<C64>,
    pub meta: IntegratorStats,
}

impl SolutionCurve {
    pub fn new(grid: Vec<f64>, value: Vec<C64>, derivative: Vec<C64>) -> Self {
        debug_assert!(grid.len() == value.len() && grid.len() == derivative.len());
        SolutionCurve { grid, value, derivative, meta: IntegratorStats::default() }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.grid[0]
    }

    pub fn end(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.start() && x <= self.end()
    }

    /// Index of the interval [grid[i], grid[i+1]] holding x.
    pub fn locate(&self, x: f64) -> usize {
        let n = self.grid.len();
        match self.grid.binary_search_by(|g| g.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.clamp(1, n - 1) - 1,
        }
    }

    /// Cubic Hermite interpolation of value and derivative.
    pub fn eval(&self, x: f64) -> (C64, C64) {
        assert!(
            self.contains(x) || (x - self.start()).abs() < 1e-9 || (x - self.end()).abs() < 1e-9,
            "x = {x} outside curve range [{}, {}]",
            self.start(),
            self.end()
        );
        let i = self.locate(x);
        hermite(
            self.grid[i],
            self.grid[i + 1],
            self.value[i],
            self.value[i + 1],
            self.derivative[i],
            self.derivative[i + 1],
            x,
        )
    }

    /// The curve of x -> y(-x).
    pub fn mirror(&self) -> SolutionCurve {
        let n = self.len();
        let mut out = SolutionCurve {
            grid: Vec::with_capacity(n),
            value: Vec::with_capacity(n),
            derivative: Vec::with_capacity(n),
            meta: self.meta,
        };
        for i in (0..n).rev() {
            out.grid.push(-self.grid[i]);
            out.value.push(self.value[i]);
            out.derivative.push(-self.derivative[i]);
        }
        out
    }

    /// Join two curves sharing an endpoint (self ends where `next` starts).
    pub fn join(mut self, next: &SolutionCurve) -> SolutionCurve {
        assert!((self.end() - next.start()).abs() <= 1e-12 * (1.0 + next.start().abs()));
        self.grid.extend_from_slice(&next.grid[1..]);
        self.value.extend_from_slice(&next.value[1..]);
        self.derivative.extend_from_slice(&next.derivative[1..]);
        self.meta.steps += next.meta.steps;
        self.meta.rejected += next.meta.rejected;
        self.meta.max_local_error = self.meta.max_local_error.max(next.meta.max_local_error);
        self
    }

    /// Multiply value and derivative by a constant.
    pub fn scaled(mut self, c: C64) -> SolutionCurve {
        for y in self.value.iter_mut().chain(self.derivative.iter_mut()) {
            *y *= c;
        }
        self
    }

    /// Index of an exact grid node, if present.
    pub fn node_index(&self, x: f64) -> Option<usize> {
        self.grid.iter().position(|&g| g == x)
    }

    /// Quintic Hermite interpolation using y'' = q y at the nodes; exact to O(h^6).
    pub fn eval_smooth(&self, q: &dyn Fn(f64) -> C64, x: f64) -> (C64, C64) {
        assert!(
            self.contains(x) || (x - self.start()).abs() < 1e-9 || (x - self.end()).abs() < 1e-9,
            "x = {x} outside curve range [{}, {}]",
            self.start(),
            self.end()
        );
        self.quintic(q, self.locate(x), x)
    }

    fn quintic(&self, q: &dyn Fn(f64) -> C64, i: usize, x: f64) -> (C64, C64) {
        let (x0, x1) = (self.grid[i], self.grid[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let (t2, t3) = (t * t, t * t * t);
        let (t4, t5) = (t3 * t, t3 * t2);
        let hv = [
            1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5,
            t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5,
            0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5),
            10.0 * t3 - 15.0 * t4 + 6.0 * t5,
            -4.0 * t3 + 7.0 * t4 - 3.0 * t5,
            0.5 * (t3 - 2.0 * t4 + t5),
        ];
        let hd = [
            -30.0 * t2 + 60.0 * t3 - 30.0 * t4,
            1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4,
            0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4),
            30.0 * t2 - 60.0 * t3 + 30.0 * t4,
            -12.0 * t2 + 28.0 * t3 - 15.0 * t4,
            0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4),
        ];
        let (y0, y1) = (self.value[i], self.value[i + 1]);
        let c = [
            y0,
            self.derivative[i] * h,
            q(x0) * y0 * (h * h),
            y1,
            self.derivative[i + 1] * h,
            q(x1) * y1 * (h * h),
        ];
        let mut y = C64::new(0.0, 0.0);
        let mut d = C64::new(0.0, 0.0);
        for k in 0..6 {
            y += c[k] * hv[k];
            d += c[k] * hd[k];
        }
        (y, d / h)
    }

    /// Integral of g(x, y(x)) over [a, b] using 8-point Gauss rules on each grid interval.
    pub fn integrate_with<T: Integrand>(&self, a: f64, b: f64, g: impl FnMut(f64, C64) -> T) -> T {
        self.panels(a, b, g, |i, x| {
            hermite(
                self.grid[i],
                self.grid[i + 1],
                self.value[i],
                self.value[i + 1],
                self.derivative[i],
                self.derivative[i + 1],
                x,
            )
            .0
        })
    }

    /// As `integrate_with`, with quintic interpolation of y.
    pub fn integrate_smooth<T: Integrand>(
        &self,
        q: &dyn Fn(f64) -> C64,
        a: f64,
        b: f64,
        g: impl FnMut(f64, C64) -> T,
    ) -> T {
        self.panels(a, b, g, |i, x| self.quintic(q, i, x).0)
    }

    fn panels<T: Integrand>(
        &self,
        a: f64,
        b: f64,
        mut g: impl FnMut(f64, C64) -> T,
        interp: impl Fn(usize, f64) -> C64,
    ) -> T {
        let rule = quad::gl8();
        let mut s = T::zero();
        if b <= a {
            return s;
        }
        let mut i = self.locate(a);
        let mut lo = a;
        loop {
            let hi = self.grid[i + 1].min(b);
            if hi > lo {
                s = s + rule.integrate(lo, hi, |x| g(x, interp(i, x)));
            }
            if hi >= b || i + 2 >= self.grid.len() {
                break;
            }
            lo = hi;
            i += 1;
        }
        s
    }
}

/// Cubic Hermite interpolant through (x0, y0, d0), (x1, y1, d1), evaluated with its derivative.
pub fn hermite(x0: f64, x1: f64, y0: C64, y1: C64, d0: C64, d1: C64, x: f64) -> (C64, C64) {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let value = y0 * h00 + d0 * (h * h10) + y1 * h01 + d1 * (h * h11);
    let g00 = (6.0 * t2 - 6.0 * t) / h;
    let g10 = 3.0 * t2 - 4.0 * t + 1.0;
    let g01 = (-6.0 * t2 + 6.0 * t) / h;
    let g11 = 3.0 * t2 - 2.0 * t;
    let deriv = y0 * g00 + d0 * g10 + y1 * g01 + d1 * g11;
    (value, deriv)
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const MAX_STEPS: usize = 2_000_000;

type State = [C64; 2];

#[inline]
fn rhs(q: &dyn Fn(f64) -> C64, x: f64, y: State) -> State {
    [y[1], q(x) * y[0]]
}

#[inline]
fn comb(y: State, h: f64, ks: &[(f64, &State)]) -> State {
    let mut out = y;
    for (c, k) in ks {
        out[0] += k[0] * (h * c);
        out[1] += k[1] * (h * c);
    }
    out
}

/// Integrate y'' = q(x) y from `from` to `to` (either direction) with local error control `tol`.
pub fn integrate(
    q: &dyn Fn(f64) -> C64,
    from: f64,
    to: f64,
    y0: C64,
    dy0: C64,
    tol: f64,
) -> Result<SolutionCurve> {
    if !(tol > 0.0) {
        return Err(FpError::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let span = (to - from).abs();
    let dir = if to >= from { 1.0 } else { -1.0 };
    let mut grid = vec![from];
    let mut value = vec![y0];
    let mut deriv = vec![dy0];
    let mut stats = IntegratorStats::default();
    if span == 0.0 {
        return Ok(SolutionCurve { grid, value, derivative: deriv, meta: stats });
    }

    let mut x = from;
    let mut y: State = [y0, dy0];
    let mut k1 = rhs(q, x, y);

    // Initial step from the ratio of the state to its rate of change.
    let d0 = y[0].norm().max(y[1].norm());
    let d1 = k1[0].norm().max(k1[1].norm());
    let mut h = if d0 > 0.0 && d1 > 0.0 { 0.01 * d0 / d1 } else { 1e-6 * span.max(1.0) };
    h = h.min(0.1 * span).max(1e-12 * span);
    let mut err_prev = 1e-4f64;
    let mut last_rejected = false;

    loop {
        let remaining = (to - x) * dir;
        if remaining <= 1e-14 * span.max(1.0) {
            break;
        }
        if stats.steps + stats.rejected > MAX_STEPS {
            return Err(FpError::TooManySteps { limit: MAX_STEPS, to });
        }
        let hh = h.min(remaining);
        let hs = hh * dir;
        let k2 = rhs(q, x + C2 * hs, comb(y, hs, &[(A21, &k1)]));
        let k3 = rhs(q, x + C3 * hs, comb(y, hs, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(q, x + C4 * hs, comb(y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = rhs(q, x + C5 * hs, comb(y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = rhs(q, x + hs, comb(y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let ynew = comb(y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let xnew = if hh == remaining { to } else { x + hs };
        let k7 = rhs(q, xnew, ynew);
        let mut e = [C64::new(0.0, 0.0); 2];
        for c in 0..2 {
            e[c] = (k1[c] * E1 + k3[c] * E3 + k4[c] * E4 + k5[c] * E5 + k6[c] * E6 + k7[c] * E7) * hs;
        }
        // Relative control; the derivative is allowed to pass through zero on the scale of the span.
        let sy = tol * y[0].norm().max(ynew[0].norm()).max(1e-300);
        let sd = tol * y[1].norm().max(ynew[1].norm()).max(y[0].norm() / span.max(1.0)).max(1e-300);
        let err = ((e[0].norm() / sy).powi(2) + (e[1].norm() / sd).powi(2)).sqrt() / std::f64::consts::SQRT_2;

        if err <= 1.0 {
            stats.steps += 1;
            stats.max_local_error = stats.max_local_error.max(err);
            x = xnew;
            y = ynew;
            k1 = k7;
            grid.push(x);
            value.push(y[0]);
            deriv.push(y[1]);
            let err_c = err.max(1e-10);
            let mut fac = 0.9 * err_c.powf(-0.17) * err_prev.powf(0.04);
            fac = fac.clamp(0.2, 5.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h = hh * fac;
            err_prev = err_c;
            last_rejected = false;
        } else {
            stats.rejected += 1;
            let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).max(0.2) } else { 0.1 };
            h = hh * fac;
            last_rejected = true;
        }
        if h < 1e-14 * x.abs().max(1e-3) {
            return Err(FpError::StepUnderflow { at: x });
        }
    }

    if dir < 0.0 {
        grid.reverse();
        value.reverse();
        deriv.reverse();
    }
    Ok(SolutionCurve { grid, value, derivative: deriv, meta: stats })
}

/// Integrate through the listed breakpoints in order, so each breakpoint becomes a grid node.
pub fn integrate_through(
    q: &dyn Fn(f64) -> C64,
    points: &[f64],
    y0: C64,
    dy0: C64,
    tol: f64,
) -> Result<SolutionCurve> {
    assert!(points.len() >= 2);
    let forward = points[1] > points[0];
    let mut pieces = Vec::new();
    let (mut y, mut dy) = (y0, dy0);
    for w in points.windows(2) {
        let c = integrate(q, w[0], w[1], y, dy, tol)?;
        if forward {
            y = *c.value.last().unwrap();
            dy = *c.derivative.last().unwrap();
        } else {
            y = c.value[0];
            dy = c.derivative[0];
        }
        pieces.push(c);
    }
    if !forward {
        pieces.reverse();
    }
    let mut it = pieces.into_iter();
    let mut out = it.next().unwrap();
    for p in it {
        out = out.join(&p);
    }
    Ok(out)
}

/// Truncated Frobenius series sum_k b_k s^(rho + k) for -y'' + (g(g+1)/s^2 + i s - lambda) y = 0.
#[derive(Debug, Clone)]
pub struct FrobeniusSeed {
    pub rho: f64,
    pub gamma: f64,
    pub lambda: C64,
    pub coeffs: Vec<C64>,
    pub s_start: f64,
    pub value: C64,
    pub derivative: C64,
}

impl FrobeniusSeed {
    /// Series value and derivative at s > 0.
    pub fn eval(&self, s: f64) -> (C64, C64) {
        let mut v = C64::new(0.0, 0.0);
        let mut d = C64::new(0.0, 0.0);
        for (k, b) in self.coeffs.iter().enumerate() {
            let p = self.rho + k as f64;
            let sp = s.powf(p);
            v += b * sp;
            d += b * (p * sp / s);
        }
        (v, d)
    }

    /// Largest recurrence defect |b_k bracket_k - (i b_{k-3} - lambda b_{k-2})| over the retained orders.
    pub fn recurrence_residual(&self) -> f64 {
        let g = self.gamma;
        let b = &self.coeffs;
        let mut worst = 0.0f64;
        for k in 1..b.len() {
            let r = self.rho + k as f64;
            let br = r * (r - 1.0) - g * (g + 1.0);
            let rhs = recurrence_rhs(b, k, self.lambda);
            worst = worst.max((b[k] * br - rhs).norm());
        }
        worst
    }
}

fn recurrence_rhs(b: &[C64], k: usize, lambda: C64) -> C64 {
    let mut r = C64::new(0.0, 0.0);
    if k >= 3 {
        r += C64::i() * b[k - 3];
    }
    if k >= 2 {
        r -= lambda * b[k - 2];
    }
    r
}

/// Frobenius coefficients from b_k[(rho+k)(rho+k-1) - g(g+1)] = i b_{k-3} - lambda b_{k-2}, b_0 = 1.
///
/// A vanishing bracket with a vanishing right-hand side leaves b_k free; it is set to zero,
/// which only fixes how much of the other branch the series carries.  A vanishing bracket
/// with a nonzero right-hand side needs a logarithm and is reported as a resonance.
pub fn frobenius_seed(rho: f64, gamma: f64, lambda: C64, s_start: f64, order: usize) -> Result<FrobeniusSeed> {
    if !(s_start > 0.0 && s_start < 1.0) {
        return Err(FpError::InvalidArgument(format!("s_start = {s_start} must lie in (0, 1)")));
    }
    let mut b = vec![C64::new(0.0, 0.0); order + 1];
    b[0] = C64::new(1.0, 0.0);
    for k in 1..=order {
        let r = rho + k as f64;
        let br = r * (r - 1.0) - gamma * (gamma + 1.0);
        let rhs = recurrence_rhs(&b, k, lambda);
        if br.abs() < 1e-12 * (1.0 + r * r) {
            let scale = (0..k).map(|i| b[i].norm()).fold(0.0, f64::max);
            if rhs.norm() <= 1e-12 * scale {
                b[k] = C64::new(0.0, 0.0);
                continue;
            }
            return Err(FpError::Resonance { k, gamma });
        }
        b[k] = rhs / br;
    }
    let lead = s_start.powf(rho);
    let last = b[order].norm() * s_start.powf(rho + order as f64);
    if last > 1e-12 * lead {
        return Err(FpError::Truncation { term: last / lead });
    }
    let mut seed = FrobeniusSeed { rho, gamma, lambda, coeffs: b, s_start, value: C64::new(0.0, 0.0), derivative: C64::new(0.0, 0.0) };
    let (v, d) = seed.eval(s_start);
    seed.value = v;
    seed.derivative = d;
    Ok(seed)
}

/// Maximum relative deviation of the Wronskian a b' - a' b from its value at the middle node.
///
/// If that middle value vanishes the absolute maximum is reported.
pub fn wronskian_drift(a: &SolutionCurve, b: &SolutionCurve) -> Result<f64> {
    if a.len() != b.len() || a.grid.iter().zip(&b.grid).any(|(x, y)| x != y) {
        return Err(FpError::InvalidArgument("Wronskian drift needs curves on a common grid".into()));
    }
    let w: Vec<C64> = (0..a.len()).map(|i| a.value[i] * b.derivative[i] - a.derivative[i] * b.value[i]).collect();
    let mid = w[w.len() / 2];
    let scale = a
        .value
        .iter()
        .zip(&a.derivative)
        .zip(b.value.iter().zip(&b.derivative))
        .map(|((ya, da), (yb, db))| (ya * db).norm().max((da * yb).norm()))
        .fold(0.0, f64::max);
    if mid.norm() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
        return Ok(w.iter().map(|x| x.norm()).fold(0.0, f64::max));
    }
    Ok(w.iter().map(|x| (x - mid).norm() / mid.norm()).fold(0.0, f64::max))
}
