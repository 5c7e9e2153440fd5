//! Complex Airy function and the rotated solutions of -y'' + (i s - lambda) y = 0.
//!
//! Ai is summed from its Maclaurin series in double-double arithmetic for |z| <= R_SWITCH
//! and from the large-argument expansion beyond.  Near the negative real axis the large
//! argument branch goes through Ai(z) = -j Ai(jz) - j^2 Ai(j^2 z).

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::Serialize;

/// Radius separating the series from the asymptotic expansion.
pub const R_SWITCH: f64 = 8.0;

/// Ai(0) and -Ai'(0) as double-double pairs.
const AI0: Dd = Dd { hi: 0.3550280538878172, lo: 2.05233632436212e-17 };
const MAI1: Dd = Dd { hi: 0.2588194037928068, lo: -2.522243111610832e-17 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AiryBranch {
    Series,
    Asymptotic,
    /// Asymptotic expansion reached through the three-solution identity.
    Connection,
}

#[derive(Debug, Clone, Copy)]
pub struct AiryValue {
    pub z: C64,
    pub ai: C64,
    pub ai_prime: C64,
    pub branch: AiryBranch,
}

/// j = e^{2 pi i / 3}.
pub fn j() -> C64 {
    C64::from_polar(1.0, 2.0 * PI / 3.0)
}

fn rot() -> C64 {
    C64::from_polar(1.0, PI / 6.0)
}

/// Ai(z) and Ai'(z).
pub fn ai(z: C64) -> AiryValue {
    if z.im < 0.0 {
        let v = ai(z.conj());
        return AiryValue { z, ai: v.ai.conj(), ai_prime: v.ai_prime.conj(), branch: v.branch };
    }
    if z.norm() <= R_SWITCH {
        let (a, d) = series(z);
        return AiryValue { z, ai: a, ai_prime: d, branch: AiryBranch::Series };
    }
    if z.arg() <= 2.0 * PI / 3.0 {
        let (a, d) = asymptotic(z);
        return AiryValue { z, ai: a, ai_prime: d, branch: AiryBranch::Asymptotic };
    }
    let jj = j();
    let j2 = jj * jj;
    let (a1, d1) = asymptotic(jj * z);
    let (a2, d2) = asymptotic(j2 * z);
    let a = -jj * a1 - j2 * a2;
    let d = -j2 * d1 - jj * d2;
    AiryValue { z, ai: a, ai_prime: d, branch: AiryBranch::Connection }
}

/// Ai and Ai' from the Maclaurin series, Ai = Ai(0) f(z) + Ai'(0) g(z).
pub fn series(z: C64) -> (C64, C64) {
    let zd = Cdd::from(z);
    let z3 = zd.mul(zd).mul(zd);
    let mut t = Cdd::from(C64::new(1.0, 0.0)); // terms of f
    let mut u = zd; // terms of g
    let mut a = zd.mul(zd).div(2.0); // terms of f'
    let mut b = Cdd::from(C64::new(1.0, 0.0)); // terms of g'
    let (mut f, mut g, mut fp, mut gp) = (t, u, a, b);
    for k in 1..400 {
        let kf = k as f64;
        t = t.mul(z3).div((3.0 * kf - 1.0) * (3.0 * kf));
        u = u.mul(z3).div((3.0 * kf) * (3.0 * kf + 1.0));
        b = b.mul(z3).div((3.0 * kf) * (3.0 * kf - 2.0));
        if k >= 2 {
            a = a.mul(z3).div((3.0 * kf - 1.0) * (3.0 * kf - 3.0));
            fp = fp.add(a);
        }
        f = f.add(t);
        g = g.add(u);
        gp = gp.add(b);
        let small = |term: Cdd, sum: Cdd| term.norm() <= 1e-33 * sum.norm();
        if small(t, f) && small(u, g) && small(a, fp) && small(b, gp) {
            break;
        }
    }
    let ai = f.scale(AI0).sub(g.scale(MAI1));
    let aip = fp.scale(AI0).sub(gp.scale(MAI1));
    (ai.to_c64(), aip.to_c64())
}

/// Large-|z| expansion, valid for |arg z| < pi; used for |arg z| <= 2 pi / 3.
pub fn asymptotic(z: C64) -> (C64, C64) {
    let zeta = z.powf(1.5) * (2.0 / 3.0);
    let z14 = z.powf(0.25);
    let inv = zeta.inv();
    let mut uk = 1.0f64;
    let mut pw = C64::new(1.0, 0.0);
    let mut su = C64::new(1.0, 0.0);
    let mut sv = C64::new(1.0, 0.0);
    let mut last = f64::INFINITY;
    for k in 1..80 {
        let kf = k as f64;
        uk *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / (216.0 * kf * (2.0 * kf - 1.0));
        let vk = -uk * (6.0 * kf + 1.0) / (6.0 * kf - 1.0);
        pw *= -inv;
        let tu = pw * uk;
        let tv = pw * vk;
        let size = tu.norm().max(tv.norm());
        if size > last {
            break;
        }
        su += tu;
        sv += tv;
        last = size;
        if size < 1e-17 * su.norm().min(sv.norm()) {
            break;
        }
    }
    let e = (-zeta).exp() / (2.0 * PI.sqrt());
    (e * su / z14, -e * z14 * sv)
}

/// The rotated pair a_lambda(s) = Ai(e^{i pi/6}(s + i lambda)), b_lambda(s) = Ai(e^{i pi/6} j (s + i lambda)).
#[derive(Debug, Clone, Copy)]
pub struct RotatedPair {
    pub lambda: C64,
}

pub fn rotated_pair(lambda: C64) -> RotatedPair {
    RotatedPair { lambda }
}

impl RotatedPair {
    fn eval(&self, factor: C64, s: f64) -> (C64, C64) {
        let v = ai(factor * (C64::new(s, 0.0) + C64::i() * self.lambda));
        (v.ai, factor * v.ai_prime)
    }

    /// Decaying solution as s -> +inf, with its s-derivative.
    pub fn a(&self, s: f64) -> (C64, C64) {
        self.eval(rot(), s)
    }

    /// Decaying solution as s -> -inf, with its s-derivative.
    pub fn b(&self, s: f64) -> (C64, C64) {
        self.eval(rot() * j(), s)
    }

    /// Third rotation, Ai(e^{i pi/6} j^2 (s + i lambda)).
    pub fn c(&self, s: f64) -> (C64, C64) {
        let jj = j();
        self.eval(rot() * jj * jj, s)
    }

    /// a b' - a' b, equal to 1/(2 pi).
    pub fn wronskian(&self, s: f64) -> C64 {
        let (a, da) = self.a(s);
        let (b, db) = self.b(s);
        a * db - da * b
    }

    /// The cube of the rotation e^{i pi/6} e^{2 pi i k/3}, which is i for every k.
    pub fn rotation_cube(k: u32) -> C64 {
        let r = rot() * j().powu(k);
        r * r * r
    }
}

/// Ratio |a(t) b(t)| / ((1/4pi)|t + i lambda|^{-1/2}); tends to 1 for large t.
pub fn product_modulus_check(lambda: C64, t: f64) -> f64 {
    let p = rotated_pair(lambda);
    let (a, _) = p.a(t);
    let (b, _) = p.b(t);
    (a * b).norm() / ((C64::new(t, 0.0) + C64::i() * lambda).norm().powf(-0.5) / (4.0 * PI))
}

/// Coefficients (c_a, c_b) with y = c_a a_lambda + c_b b_lambda and y' likewise, at abscissa s.
pub fn decompose_in_airy_basis(value: C64, derivative: C64, s: f64, lambda: C64) -> (C64, C64) {
    let p = rotated_pair(lambda);
    let (a, da) = p.a(s);
    let (b, db) = p.b(s);
    let w = a * db - da * b;
    ((value * db - derivative * b) / w, (a * derivative - da * value) / w)
}

// Double-double arithmetic for the series.

#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

impl Dd {
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let e = e + t;
        let r = quick_two_sum(s, e);
        quick_two_sum(r.hi, r.lo + f)
    }
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        quick_two_sum(p, e + (self.hi * o.lo + self.lo * o.hi))
    }
    fn div_f(self, d: f64) -> Dd {
        let q1 = self.hi / d;
        let p = q1 * d;
        let e = q1.mul_add(d, -p);
        let r = (self.hi - p - e + self.lo) / d;
        quick_two_sum(q1, r)
    }
}

#[derive(Debug, Clone, Copy)]
struct Cdd {
    re: Dd,
    im: Dd,
}

impl Cdd {
    fn from(z: C64) -> Cdd {
        Cdd { re: Dd { hi: z.re, lo: 0.0 }, im: Dd { hi: z.im, lo: 0.0 } }
    }
    fn add(self, o: Cdd) -> Cdd {
        Cdd { re: self.re.add(o.re), im: self.im.add(o.im) }
    }
    fn sub(self, o: Cdd) -> Cdd {
        Cdd { re: self.re.add(o.re.neg()), im: self.im.add(o.im.neg()) }
    }
    fn mul(self, o: Cdd) -> Cdd {
        Cdd {
            re: self.re.mul(o.re).add(self.im.mul(o.im).neg()),
            im: self.re.mul(o.im).add(self.im.mul(o.re)),
        }
    }
    fn scale(self, c: Dd) -> Cdd {
        Cdd { re: self.re.mul(c), im: self.im.mul(c) }
    }
    fn div(self, d: f64) -> Cdd {
        Cdd { re: self.re.div_f(d), im: self.im.div_f(d) }
    }
    fn norm(self) -> f64 {
        self.re.hi.hypot(self.im.hi)
    }
    fn to_c64(self) -> C64 {
        C64::new(self.re.hi + self.re.lo, self.im.hi + self.im.lo)
    }
}
