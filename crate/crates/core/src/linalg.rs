//! Tridiagonal kernels: pivoted solves, Sylvester inertia counts and the smallest
//! eigenpair of symmetric tridiagonal pencils `(A, diag(b))` with `b > 0`.

use crate::error::{LabError, Result};
use crate::scalar::Real;

/// Symmetric or general tridiagonal matrix stored by diagonals.
/// `lower[i]` couples rows `i+1 -> i`, `upper[i]` couples `i -> i+1`.
#[derive(Debug, Clone)]
pub struct Tridiagonal<T> {
    pub lower: Vec<T>,
    pub diag: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Real> Tridiagonal<T> {
    pub fn zeros(n: usize) -> Self {
        Tridiagonal {
            lower: vec![T::zero(); n.saturating_sub(1)],
            diag: vec![T::zero(); n],
            upper: vec![T::zero(); n.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                if i > 0 {
                    acc += self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    acc += self.upper[i] * x[i + 1];
                }
                acc
            })
            .collect()
    }

    /// Gaussian elimination with partial pivoting. Fails with the smallest pivot when the
    /// matrix is numerically singular.
    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        let n = self.len();
        if rhs.len() != n {
            return Err(LabError::Shape {
                expected: n,
                found: rhs.len(),
            });
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        // Row i holds (d, u1, u2) for columns (i, i+1, i+2) after pivoting.
        let mut d = self.diag.clone();
        let mut u1: Vec<T> = (0..n)
            .map(|i| if i + 1 < n { self.upper[i] } else { T::zero() })
            .collect();
        let mut u2 = vec![T::zero(); n];
        let mut l: Vec<T> = (0..n)
            .map(|i| if i + 1 < n { self.lower[i] } else { T::zero() })
            .collect();
        let mut b = rhs.to_vec();
        let scale = self
            .diag
            .iter()
            .chain(&self.lower)
            .chain(&self.upper)
            .fold(T::zero(), |a, v| a.max(v.abs()));

        for i in 0..n {
            if i + 1 < n && l[i].abs() > d[i].abs() {
                // swap rows i and i+1
                let (nd, nu1, nu2) = (l[i], d[i + 1], if i + 2 < n { u1[i + 1] } else { T::zero() });
                let (od, ou1, ou2) = (d[i], u1[i], u2[i]);
                d[i] = nd;
                u1[i] = nu1;
                u2[i] = nu2;
                l[i] = od;
                d[i + 1] = ou1;
                if i + 2 < n {
                    u1[i + 1] = ou2;
                }
                b.swap(i, i + 1);
            }
            if d[i].abs() <= scale * T::epsilon() * T::lit(1e-2) || d[i] == T::zero() {
                return Err(LabError::NearKernel {
                    smallest_pivot: d[i].abs().as_f64(),
                });
            }
            if i + 1 < n {
                let f = l[i] / d[i];
                d[i + 1] -= f * u1[i];
                if i + 2 < n {
                    u1[i + 1] -= f * u2[i];
                }
                b[i + 1] = b[i + 1] - f * b[i];
            }
        }
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let mut acc = b[i];
            if i + 1 < n {
                acc -= u1[i] * x[i + 1];
            }
            if i + 2 < n {
                acc -= u2[i] * x[i + 2];
            }
            x[i] = acc / d[i];
        }
        Ok(x)
    }
}

/// Number of eigenvalues of the pencil `(A, diag(b))` strictly below `sigma`, from the
/// signs of the LDL^T pivots of `A - sigma B` (`A` symmetric, `off` its off-diagonal).
pub fn count_below<T: Real>(diag: &[T], off: &[T], b: &[T], sigma: T) -> usize {
    let mut count = 0;
    let mut prev = T::one();
    let tiny = T::min_positive_value().sqrt();
    for i in 0..diag.len() {
        let mut d = diag[i] - sigma * b[i];
        if i > 0 {
            d -= off[i - 1] * off[i - 1] / prev;
        }
        if d == T::zero() {
            d = -tiny;
        }
        if d < T::zero() {
            count += 1;
        }
        prev = d;
    }
    count
}

#[derive(Debug, Clone)]
pub struct Eigenpair<T> {
    pub value: T,
    pub vector: Vec<T>,
    /// `|(A - value B) v|_inf / (|A v|_inf + |value| |B v|_inf)`
    pub relative_residual: T,
}

/// Smallest eigenpair of `A v = lambda diag(b) v` for symmetric tridiagonal `A` and
/// strictly positive `b`, by inertia bisection followed by inverse iteration.
pub fn smallest_generalized_eigenpair<T: Real>(diag: &[T], off: &[T], b: &[T]) -> Result<Eigenpair<T>> {
    let n = diag.len();
    if n == 0 || off.len() + 1 != n || b.len() != n {
        return Err(LabError::Discretization("inconsistent pencil dimensions".into()));
    }
    if b.iter().any(|v| !(*v > T::zero())) {
        return Err(LabError::Discretization("mass matrix is not positive definite".into()));
    }
    // Gershgorin bracket for B^{-1/2} A B^{-1/2}.
    let mut lo = T::infinity();
    let mut hi = T::infinity();
    for i in 0..n {
        let mut r = T::zero();
        if i > 0 {
            r += off[i - 1].abs() / (b[i] * b[i - 1]).sqrt();
        }
        if i + 1 < n {
            r += off[i].abs() / (b[i] * b[i + 1]).sqrt();
        }
        lo = lo.min(diag[i] / b[i] - r);
        hi = hi.min(diag[i] / b[i]);
    }
    hi += hi.abs() * T::lit(1e-12) + T::min_positive_value();
    let two = T::lit(2.0);
    for _ in 0..200 {
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(diag, off, b, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= T::epsilon() * T::lit(4.0) * lo.abs().max(hi.abs()) {
            break;
        }
    }
    let value = (lo + hi) / two;

    // Inverse iteration with a shift just below the eigenvalue (A - sigma B is SPD there).
    let gap = value.abs().max(T::one()) * T::epsilon().sqrt() * T::lit(1e-3);
    let sigma = value - gap;
    let mut shifted = Tridiagonal::zeros(n);
    for i in 0..n {
        shifted.diag[i] = diag[i] - sigma * b[i];
        if i + 1 < n {
            shifted.lower[i] = off[i];
            shifted.upper[i] = off[i];
        }
    }
    let mut v = vec![T::one(); n];
    for _ in 0..4 {
        let rhs: Vec<T> = v.iter().zip(b).map(|(x, w)| *x * *w).collect();
        v = shifted.solve(&rhs)?;
        let norm = v.iter().fold(T::zero(), |a, x| a.max(x.abs()));
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    // Rayleigh quotient sharpens the value; fix sign so the largest entry is positive.
    let a_op = Tridiagonal {
        lower: off.to_vec(),
        diag: diag.to_vec(),
        upper: off.to_vec(),
    };
    let av = a_op.mul_vec(&v);
    let num: T = v.iter().zip(&av).map(|(x, y)| *x * *y).sum();
    let den: T = v.iter().zip(b).map(|(x, w)| *x * *x * *w).sum();
    let value = num / den;
    let imax = v
        .iter()
        .enumerate()
        .fold(
            (0, T::zero()),
            |acc, (i, x)| if x.abs() > acc.1 { (i, x.abs()) } else { acc },
        )
        .0;
    if v[imax] < T::zero() {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
    let av = a_op.mul_vec(&v);
    let mut res = T::zero();
    let mut av_norm = T::zero();
    let mut bv_norm = T::zero();
    for i in 0..n {
        res = res.max((av[i] - value * b[i] * v[i]).abs());
        av_norm = av_norm.max(av[i].abs());
        bv_norm = bv_norm.max((b[i] * v[i]).abs());
    }
    let relative_residual = res / (av_norm + value.abs() * bv_norm);
    Ok(Eigenpair {
        value,
        vector: v,
        relative_residual,
    })
}

/// Finite-difference weights for the `order`-th derivative at `x0` on nodes `xs`
/// (Fornberg's recursion).
pub fn fd_weights<T: Real>(x0: T, xs: &[T], order: usize) -> Vec<T> {
    let n = xs.len();
    let mut c = vec![vec![T::zero(); order + 1]; n];
    let mut c1 = T::one();
    let mut c4 = xs[0] - x0;
    c[0][0] = T::one();
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = T::one();
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (T::from_count(k) * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - T::from_count(k) * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Derivative of sampled data using five-point stencils (centred in the interior,
/// shifted near the ends).
pub fn five_point_derivative<T: Real>(s: &[T], f: &[T]) -> Vec<T> {
    let n = s.len();
    assert!(n >= 5, "five-point derivative needs at least five samples");
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(2).min(n - 5);
            let w = fd_weights(s[i], &s[start..start + 5], 1);
            w.iter().zip(&f[start..start + 5]).map(|(a, b)| *a * *b).sum()
        })
        .collect()
}
