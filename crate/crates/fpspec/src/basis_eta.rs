//! Solutions of the perturbed operator -d^2 + W~ + i eta v - lambda eta^(2/3): the Cauchy
//! solution psi_eta, the decaying pair (psi1, psi2) with Wronskian 1, the right inverse
//! T_eta and the weights p1, p2.

use num_complex::Complex64 as C64;

use crate::airy::{decompose_in_airy_basis, rotated_pair, RotatedPair};
use crate::basis0::decay_exponent;
use crate::error::{FpError, Result};
use crate::green::{sinh_grid, GreenApplication};
use crate::model::{bracket, potential_w_tilde, ModelParams};
use crate::ode::{integrate, wronskian_drift, SolutionCurve};

/// Default matching abscissa in the rescaled variable s = eta^(1/3) v.
pub const S0: f64 = 3.0;
/// Default half-width of the box, in units of eta^(-1/3).
pub const S_MAX: f64 = 10.0;

/// The potential W~ + i eta v - lambda eta^(2/3).
pub fn potential_eta(gamma: f64, lambda: C64, eta: f64) -> impl Fn(f64) -> C64 + Copy + Send + Sync {
    let shift = lambda * eta.powf(2.0 / 3.0);
    move |v: f64| C64::new(potential_w_tilde(gamma, v), eta * v) - shift
}

#[derive(Debug, Clone)]
pub struct BasisEta {
    pub gamma: f64,
    pub lambda: C64,
    pub eta: f64,
    pub v_max: f64,
    pub s0: f64,
    /// Cauchy solution with psi(0) = 1, psi'(0) = 0.
    pub psi_le: SolutionCurve,
    /// Coefficient of b_{lambda,eta} in psi_eta at the matching point, times eta^((gamma+1)/3).
    pub c_lambda: C64,
    /// |a-part| / |b-part| of psi_eta at the matching point.
    pub a_share: f64,
    /// Decays like a_{lambda,eta} at +inf; None until `build_basis_eta`.
    pub psi1: Option<SolutionCurve>,
    /// Decays like b_{lambda,eta} at -inf.
    pub psi2: Option<SolutionCurve>,
    /// Integral over R of psi_eta^-2, the complex normalizer forcing W = 1.
    pub wronskian_target: C64,
}

fn check_box(params: &ModelParams, lambda: C64, eta: f64, v_max: f64, s0: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= params.eta0) {
        return Err(FpError::InvalidArgument(format!("eta = {eta} must lie in (0, {}]", params.eta0)));
    }
    if !(lambda.norm() <= params.lambda0) {
        return Err(FpError::InvalidArgument(format!("|lambda| = {} exceeds {}", lambda.norm(), params.lambda0)));
    }
    if v_max < (s0 + 2.0) * eta.powf(-1.0 / 3.0) {
        return Err(FpError::InvalidArgument(format!("v_max = {v_max} is below (s0 + 2) eta^(-1/3)")));
    }
    Ok(())
}

/// Integrate the Cauchy problem outward from v = 0 and read off the matching constant.
pub fn solve_psi_eta(params: &ModelParams, lambda: C64, eta: f64, v_max: f64) -> Result<BasisEta> {
    check_box(params, lambda, eta, v_max, S0)?;
    let g = params.gamma;
    let q = potential_eta(g, lambda, eta);
    let tol = params.tol.ode;
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let right = integrate(&q, 0.0, v_max, one, zero, tol)?;
    let left = integrate(&q, 0.0, -v_max, one, zero, tol)?;
    let psi_le = left.join(&right);
    let floor = psi_le.value.iter().map(|y| y.norm()).fold(f64::INFINITY, f64::min);
    if !(floor > 1e-8) {
        let i = psi_le.value.iter().position(|y| y.norm() == floor).unwrap_or(0);
        return Err(FpError::Vanishing { at: psi_le.grid[i] });
    }
    let e3 = eta.cbrt();
    let vm = S0 / e3;
    let (y, dy) = psi_le.eval_smooth(&q, vm);
    let (ca, cb) = decompose_in_airy_basis(y, dy / e3, S0, lambda);
    let pair = rotated_pair(lambda);
    let a_share = (ca * pair.a(S0).0).norm() / (cb * pair.b(S0).0).norm();
    Ok(BasisEta {
        gamma: g,
        lambda,
        eta,
        v_max,
        s0: S0,
        psi_le,
        c_lambda: cb * eta.powf((g + 1.0) / 3.0),
        a_share,
        psi1: None,
        psi2: None,
        wronskian_target: C64::new(f64::NAN, f64::NAN),
    })
}

/// Complete the basis: psi1 integrated backward from v_max seeded by a_{lambda,eta}, psi2 forward
/// from -v_max seeded by b_{lambda,eta}, both normalized through their Wronskians with psi_eta.
pub fn build_basis_eta(mut basis: BasisEta, tol: f64) -> Result<BasisEta> {
    let q = basis.q();
    let e3 = basis.eta.cbrt();
    let vm = basis.v_max;
    let pair = rotated_pair(basis.lambda);
    let (a, da) = pair.a(e3 * vm);
    let mut t1 = integrate(&q, vm, -vm, a, da * e3, tol)?;
    let (b, db) = pair.b(-e3 * vm);
    let mut t2 = integrate(&q, -vm, vm, b, db * e3, tol)?;
    // At v = 0, psi_eta = 1 and psi_eta' = 0, so W(psi_eta, y) = y'(0).
    let d1 = t1.eval_smooth(&q, 0.0).1;
    let d2 = t2.eval_smooth(&q, 0.0).1;
    let (a1, a2) = (-d1, d2);
    let (y1, dy1) = t1.eval_smooth(&q, 0.0);
    let (y2, dy2) = t2.eval_smooth(&q, 0.0);
    let total = (y1 * dy2 - dy1 * y2) / (a1 * a2);
    if !(total.norm() > 0.0 && total.is_finite()) {
        return Err(FpError::Singular("degenerate Wronskian normalizer".into()));
    }
    let root = total.sqrt();
    t1 = t1.scaled(C64::new(1.0, 0.0) / (a1 * root));
    t2 = t2.scaled(C64::new(1.0, 0.0) / (a2 * root));
    basis.psi1 = Some(t1);
    basis.psi2 = Some(t2);
    basis.wronskian_target = total;
    Ok(basis)
}

/// Both steps with default box and matching point.
pub fn basis_eta(params: &ModelParams, lambda: C64, eta: f64) -> Result<BasisEta> {
    let b = solve_psi_eta(params, lambda, eta, S_MAX * eta.powf(-1.0 / 3.0))?;
    build_basis_eta(b, params.tol.ode)
}

impl BasisEta {
    pub fn q(&self) -> impl Fn(f64) -> C64 + Copy + Send + Sync {
        potential_eta(self.gamma, self.lambda, self.eta)
    }

    fn curves(&self) -> (&SolutionCurve, &SolutionCurve) {
        (
            self.psi1.as_ref().expect("basis not built"),
            self.psi2.as_ref().expect("basis not built"),
        )
    }

    /// psi1 and its derivative; zero beyond the box, where it is below the quadrature resolution.
    pub fn psi1_at(&self, v: f64) -> (C64, C64) {
        let (p1, _) = self.curves();
        if v.abs() > self.v_max {
            if v > 0.0 {
                return (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
            }
            return p1.eval_smooth(&self.q(), -self.v_max);
        }
        p1.eval_smooth(&self.q(), v)
    }

    pub fn psi2_at(&self, v: f64) -> (C64, C64) {
        let (_, p2) = self.curves();
        if v.abs() > self.v_max {
            if v < 0.0 {
                return (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
            }
            return p2.eval_smooth(&self.q(), self.v_max);
        }
        p2.eval_smooth(&self.q(), v)
    }

    /// psi1, psi2 sampled on a common grid inside the box.
    pub fn sample(&self, grid: &[f64]) -> (SolutionCurve, SolutionCurve) {
        let q = self.q();
        let (p1, p2) = self.curves();
        let take = |c: &SolutionCurve| {
            let (v, d): (Vec<C64>, Vec<C64>) = grid.iter().map(|&x| c.eval_smooth(&q, x)).unzip();
            SolutionCurve::new(grid.to_vec(), v, d)
        };
        (take(p1), take(p2))
    }

    /// Wronskian psi1 psi2' - psi1' psi2 at v.
    pub fn wronskian(&self, v: f64) -> C64 {
        let (a, da) = self.psi1_at(v);
        let (b, db) = self.psi2_at(v);
        a * db - da * b
    }

    /// Relative drift of the Wronskian over |v| <= v_lim.
    pub fn wronskian_drift(&self, v_lim: f64) -> Result<f64> {
        let (grid, _) = sinh_grid(v_lim.min(self.v_max), 0.01, 1.0);
        let (a, b) = self.sample(&grid);
        wronskian_drift(&a, &b)
    }

    /// Independent value of the normalizer: quadrature of psi_eta^-2 over the box.
    pub fn normalizer_by_quadrature(&self) -> C64 {
        let q = self.q();
        let c = &self.psi_le;
        c.integrate_smooth(&q, c.start(), c.end(), |_, y| (y * y).inv())
    }

    /// Smallest and largest |psi_eta| / psi on |v| <= s0 eta^(-1/3).
    pub fn matching_zone_bounds(&self, psi: &dyn Fn(f64) -> f64) -> (f64, f64) {
        let lim = self.s0 / self.eta.cbrt();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for (v, y) in self.psi_le.grid.iter().zip(&self.psi_le.value) {
            if v.abs() <= lim {
                let r = y.norm() / psi(*v);
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        (lo, hi)
    }

    pub fn kernel_grid(&self) -> Vec<f64> {
        sinh_grid(self.v_max, 0.02, 1.0).0
    }
}

/// T_eta f by split kernel quadrature, with its residual on |v| <= 0.8 v_max.
pub fn apply_t_eta<'a>(f: impl Fn(f64) -> C64 + Sync + 'a, basis: &'a BasisEta) -> Result<crate::basis0::RightInverse<'a>> {
    let envelope = |v: f64| f(v).norm() * (basis.psi1_at(v).0.norm() + basis.psi2_at(v).0.norm());
    let sigma = decay_exponent(&envelope, basis.v_max);
    if sigma <= 2.0 {
        return Err(FpError::Decay { estimated: sigma, required: 2.0 });
    }
    let grid = basis.kernel_grid();
    let probes: Vec<f64> = grid.iter().copied().filter(|v| v.abs() <= 0.8 * basis.v_max).collect();
    let zero = C64::new(0.0, 0.0);
    let op = GreenApplication::new(grid, move |v| basis.psi1_at(v), move |v| basis.psi2_at(v), f, zero, zero);
    let q = basis.q();
    let residual = op.residual(&q, &probes);
    Ok(crate::basis0::RightInverse { op, residual })
}

/// The weights p1, p2: <v>^-gamma in the bulk, Airy profiles beyond s0 eta^(-1/3).
#[derive(Debug, Clone)]
pub struct WeightProfile {
    pub gamma: f64,
    pub eta: f64,
    pub lambda: C64,
    pub delta: f64,
    pub s0: f64,
    pair: RotatedPair,
    /// Constants making p2 continuous at +-s0 eta^(-1/3).
    pub seam_right: f64,
    pub seam_left: f64,
    /// Ratio of the unscaled Airy branch to <v>^-gamma at the seams.
    pub raw_jump_right: f64,
    pub raw_jump_left: f64,
}

pub fn weight(params: &ModelParams, lambda: C64, eta: f64, delta: f64) -> Result<WeightProfile> {
    if !(delta > 0.0 && delta < 2.0) {
        return Err(FpError::InvalidArgument(format!("delta = {delta} must lie in (0, 2)")));
    }
    if eta < 0.0 {
        return Err(FpError::InvalidArgument(format!("eta = {eta} must be non-negative")));
    }
    let g = params.gamma;
    let pair = rotated_pair(lambda);
    let mut w = WeightProfile {
        gamma: g,
        eta,
        lambda,
        delta,
        s0: S0,
        pair,
        seam_right: 1.0,
        seam_left: 1.0,
        raw_jump_right: 1.0,
        raw_jump_left: 1.0,
    };
    if eta > 0.0 {
        let vs = S0 / eta.cbrt();
        let bulk = bracket(vs).powf(-g);
        let scale = eta.powf(g / 3.0);
        w.raw_jump_right = scale * pair.a(S0).0.norm() / bulk;
        w.raw_jump_left = scale * pair.b(-S0).0.norm() / bulk;
        w.seam_right = 1.0 / w.raw_jump_right;
        w.seam_left = 1.0 / w.raw_jump_left;
    }
    Ok(w)
}

impl WeightProfile {
    pub fn p2(&self, v: f64) -> f64 {
        if self.eta == 0.0 {
            return bracket(v).powf(-self.gamma);
        }
        let e3 = self.eta.cbrt();
        let s = e3 * v;
        let scale = self.eta.powf(self.gamma / 3.0);
        if s > self.s0 {
            self.seam_right * scale * self.pair.a(s).0.norm()
        } else if s < -self.s0 {
            self.seam_left * scale * self.pair.b(s).0.norm()
        } else {
            bracket(v).powf(-self.gamma)
        }
    }

    pub fn p1(&self, v: f64) -> f64 {
        self.p2(v) * bracket(v).powf(-2.0 - self.delta)
    }
}

/// sup over v of int |K_eta(v, w)| p1(w) dw / p2(v).
pub fn weighted_kernel_bound(basis: &BasisEta, weights: &WeightProfile) -> Result<f64> {
    let z = C64::new(0.0, 0.0);
    let modulus = |p: (C64, C64)| (C64::new(p.0.norm(), 0.0), z);
    let op = GreenApplication::new(
        basis.kernel_grid(),
        move |v| modulus(basis.psi1_at(v)),
        move |v| modulus(basis.psi2_at(v)),
        move |v| C64::new(weights.p1(v), 0.0),
        z,
        z,
    );
    let nodes = op.at_nodes();
    Ok(nodes.grid.iter().zip(&nodes.value).map(|(v, u)| u.re / weights.p2(*v)).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_params;

    #[test]
    fn wronskian_is_one() {
        let p = make_params(3.0).unwrap();
        let b = basis_eta(&p, C64::new(0.02, 0.0), 1e-2).unwrap();
        for v in [-4.6, 0.0, 4.6] {
            assert!((b.wronskian(v) - 1.0).norm() < 1e-8, "{:?}", b.wronskian(v));
        }
    }

    #[test]
    fn seam_is_continuous() {
        let p = make_params(4.0).unwrap();
        let w = weight(&p, C64::new(0.0, 0.0), 1e-3, 1.0).unwrap();
        let vs = S0 / 1e-3f64.cbrt();
        let r = w.p2(vs * (1.0 + 1e-12)) / w.p2(vs);
        assert!((r - 1.0).abs() < 1e-6);
    }
}
