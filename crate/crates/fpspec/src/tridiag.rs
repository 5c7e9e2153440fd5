//! Complex tridiagonal systems: LU factorization with partial pivoting (one extra
//! superdiagonal of fill-in), as in LAPACK's gttrf/gttrs.

use num_complex::Complex64 as C64;

use crate::error::{FpError, Result};

/// Tridiagonal matrix with sub-, main and superdiagonals (lengths n-1, n, n-1).
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub lower: Vec<C64>,
    pub diag: Vec<C64>,
    pub upper: Vec<C64>,
}

/// LU factors of a tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct TridiagLu {
    l: Vec<C64>,
    d: Vec<C64>,
    u1: Vec<C64>,
    u2: Vec<C64>,
    swapped: Vec<bool>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// y = A x
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    pub fn factor(&self) -> Result<TridiagLu> {
        let n = self.len();
        let mut d = self.diag.clone();
        let mut u1 = self.upper.clone();
        let mut u2 = vec![C64::new(0.0, 0.0); n.saturating_sub(2)];
        let mut l = self.lower.clone();
        let mut dl = self.lower.clone();
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].norm() >= dl[i].norm() {
                if d[i].norm() == 0.0 {
                    return Err(FpError::Singular(format!("zero pivot at row {i}")));
                }
                let f = dl[i] / d[i];
                l[i] = f;
                d[i + 1] -= f * u1[i];
            } else {
                // Swap rows i and i+1.
                let f = d[i] / dl[i];
                d[i] = dl[i];
                l[i] = f;
                let tmp = u1[i];
                u1[i] = d[i + 1];
                d[i + 1] = tmp - f * d[i + 1];
                if i + 1 < n - 1 {
                    u2[i] = u1[i + 1];
                    u1[i + 1] = -f * u1[i + 1];
                }
                swapped[i] = true;
            }
            dl[i] = C64::new(0.0, 0.0);
        }
        if n > 0 && d[n - 1].norm() == 0.0 {
            return Err(FpError::Singular(format!("zero pivot at row {}", n - 1)));
        }
        Ok(TridiagLu { l, d, u1, u2, swapped })
    }
}

impl TridiagLu {
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.d.len();
        let mut x = b.to_vec();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                x.swap(i, i + 1);
            }
            let t = x[i];
            x[i + 1] -= self.l[i] * t;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            if i + 1 < n {
                s -= self.u1[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= self.u2[i] * x[i + 2];
            }
            x[i] = s / self.d[i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn solves_with_pivoting() {
        // A zero leading diagonal forces a row swap.
        let a = Tridiagonal {
            lower: vec![c(1.0, 0.0), c(2.0, 1.0), c(0.5, 0.0)],
            diag: vec![c(0.0, 0.0), c(3.0, 0.0), c(1.0, -1.0), c(4.0, 0.0)],
            upper: vec![c(1.0, 0.0), c(-1.0, 0.5), c(2.0, 0.0)],
        };
        let x = vec![c(1.0, 2.0), c(-1.0, 0.0), c(0.5, 0.5), c(3.0, -1.0)];
        let b = a.apply(&x);
        let y = a.factor().unwrap().solve(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).norm() < 1e-13);
        }
    }
}
