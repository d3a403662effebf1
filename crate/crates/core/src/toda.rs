//! Interaction of two transition layers over a minimal hypersurface.
//!
//! Heights `h1 < h2` of two nearby layers satisfy, to leading order, the Jacobi–Toda
//! system `eps^2 J h1 + a0 e^{-sqrt2 (h2 - h1)} = 0`, `eps^2 J h2 - a0 e^{-sqrt2 (h2 -
//! h1)} = 0`, with `J = Delta + |A|^2` the Jacobi operator. In `v1 = h1 + h2`, `v2 = h2
//! - h1` it decouples; `v1 = 0` solves the first equation and the gap `v = v2` solves
//! the Liouville-type equation `eps^2 (Delta v + |A|^2 v) = 2 a e^{-sqrt2 v}`.
//!
//! Everything here is `O(m) x O(n)`-equivariant: functions are node samples along the
//! generating curve, and `Delta v = v'' + (omega'/omega) v'` is discretised in
//! conservative form with area weights at Hermite interval midpoints.

use crate::error::{LabError, Result};
use crate::geometry::ProfileCurve;
use crate::scalar::Real;

/// `(1/sqrt2) [ln(2 sqrt2 a / eps^2) - ln A2 - ln ln(2 sqrt2 a / (eps^2 A2))]`, the
/// large-`|p|` expansion of the Liouville solution.
pub fn asymptotic_formula<T: Real>(a2: T, epsilon: T, a_star: T) -> Result<T> {
    if !(a2 > T::zero() && epsilon > T::zero() && a_star > T::zero()) {
        return Err(LabError::invalid("asymptotic formula needs positive arguments"));
    }
    let lead = T::lit(2.0) * T::SQRT_2() * a_star / (epsilon * epsilon);
    let inner = lead / a2;
    if !(inner > T::one()) {
        return Err(LabError::Domain(format!(
            "2 sqrt2 a*/(eps^2 A2) = {:e} must exceed 1 for the double logarithm",
            inner.as_f64()
        )));
    }
    Ok((lead.ln() - a2.ln() - inner.ln().ln()) / T::SQRT_2())
}

/// Conservative three-point discretisation of `Delta + |A|^2` on curve nodes
/// `first..=last`, with a reflecting (half-cell) end at `first`.
#[derive(Debug, Clone)]
struct ReducedOperator<T> {
    /// Coefficients of `v_{i-1}`, `v_i` (without the potential) and `v_{i+1}`.
    west: Vec<T>,
    centre: Vec<T>,
    east: Vec<T>,
    a2: Vec<T>,
}

impl<T: Real> ReducedOperator<T> {
    fn new(curve: &ProfileCurve<T>, first: usize, last: usize) -> Self {
        let n = last - first + 1;
        let mut west = vec![T::zero(); n];
        let mut centre = vec![T::zero(); n];
        let mut east = vec![T::zero(); n];
        let two = T::lit(2.0);
        for j in 0..n - 1 {
            let i = first + j;
            let w = curve.weight[i];
            let hp = curve.s[i + 1] - curve.s[i];
            let fp = curve.midpoint_weight(i) / hp;
            if j == 0 {
                let cell = hp / two;
                east[j] = fp / (w * cell);
            } else {
                let hm = curve.s[i] - curve.s[i - 1];
                let fm = curve.midpoint_weight(i - 1) / hm;
                let cell = (hm + hp) / two;
                east[j] = fp / (w * cell);
                west[j] = fm / (w * cell);
            }
            centre[j] = -(east[j] + west[j]);
        }
        ReducedOperator {
            west,
            centre,
            east,
            a2: curve.a2[first..=last].to_vec(),
        }
    }

    fn len(&self) -> usize {
        self.a2.len()
    }

    /// `(Delta + |A|^2) v` at node `j` (`j < len - 1`).
    fn apply_at(&self, v: &[T], j: usize) -> T {
        let mut r = self.centre[j] * v[j] + self.east[j] * v[j + 1] + self.a2[j] * v[j];
        if j > 0 {
            r += self.west[j] * v[j - 1];
        }
        r
    }

    /// Solves `eps^2 (Delta + |A|^2) d + extra d = rhs` at nodes `0..len-1` with
    /// `d_0 = 0` (and the reflecting end) by marching towards the far end: equation `j`
    /// is the first to involve `d_{j+1}`.
    fn march(&self, eps2: T, extra: &[T], rhs: &[T]) -> Result<Vec<T>> {
        let n = self.len();
        let mut d = vec![T::zero(); n];
        for j in 0..n - 1 {
            let pivot = eps2 * self.east[j];
            if !(pivot.abs() > T::zero()) || !pivot.is_finite() {
                return Err(LabError::NearKernel {
                    smallest_pivot: pivot.as_f64(),
                });
            }
            let mut acc = rhs[j] - (eps2 * (self.centre[j] + self.a2[j]) + extra[j]) * d[j];
            if j > 0 {
                acc -= eps2 * self.west[j] * d[j - 1];
            }
            d[j + 1] = acc / pivot;
        }
        Ok(d)
    }
}

fn window<T: Real>(curve: &ProfileCurve<T>, domain: (T, T)) -> Result<(usize, usize)> {
    let (s0, s1) = domain;
    if !(s1 > s0) {
        return Err(LabError::invalid("domain needs s0 < s1"));
    }
    let first = curve.nearest_node(s0);
    let last = curve.nearest_node(s1);
    if curve.is_axis_node(first) || s0 < T::lit(0.01) * (T::one() - T::lit(1e-9)) {
        return Err(LabError::invalid("domain must avoid the axis (s0 >= 0.01)"));
    }
    if last < first + 4 {
        return Err(LabError::invalid("domain must contain at least five nodes"));
    }
    Ok((first, last))
}

/// Converged solution of the Liouville-type equation on a window of a curve.
#[derive(Debug, Clone)]
pub struct LiouvilleSolution<T> {
    pub first: usize,
    pub last: usize,
    pub s: Vec<T>,
    pub a2: Vec<T>,
    pub v: Vec<T>,
    pub v_asymptotic: Vec<T>,
    pub epsilon: T,
    pub a_star: T,
    pub newton_iterations: usize,
    /// Sup norm of the discrete equation over the unknown nodes.
    pub final_residual: T,
    pub residual_history: Vec<f64>,
}

impl<T: Real> LiouvilleSolution<T> {
    /// Sup over nodes of `|v - asymptotic_formula|`.
    pub fn max_deviation(&self) -> T {
        self.v
            .iter()
            .zip(&self.v_asymptotic)
            .fold(T::zero(), |a, (v, w)| a.max((*v - *w).abs()))
    }
}

fn check_params<T: Real>(epsilon: T, a_star: T) -> Result<()> {
    if !(epsilon > T::zero() && epsilon <= T::lit(0.5)) {
        return Err(LabError::invalid("epsilon must lie in (0, 0.5]"));
    }
    if !(a_star > T::zero()) || !a_star.is_finite() {
        return Err(LabError::invalid("a_star must be positive"));
    }
    Ok(())
}

/// Discrete residual `eps^2 (Delta + |A|^2) v - 2 a e^{-sqrt2 v}` at every node of the
/// window except the last, which carries the boundary value.
pub fn liouville_residual<T: Real>(
    curve: &ProfileCurve<T>,
    epsilon: T,
    a_star: T,
    first: usize,
    v: &[T],
) -> Result<Vec<T>> {
    let last = first + v.len() - 1;
    if v.len() < 3 || last >= curve.len() {
        return Err(LabError::Shape {
            expected: curve.len() - first,
            found: v.len(),
        });
    }
    let op = ReducedOperator::new(curve, first, last);
    Ok(residual_with(&op, epsilon * epsilon, a_star, v))
}

fn residual_with<T: Real>(op: &ReducedOperator<T>, eps2: T, a: T, v: &[T]) -> Vec<T> {
    let two_a = T::lit(2.0) * a;
    (0..v.len() - 1)
        .map(|j| eps2 * op.apply_at(v, j) - two_a * (-T::SQRT_2() * v[j]).exp())
        .collect()
}

fn sup<T: Real>(r: &[T]) -> T {
    r.iter().fold(
        T::zero(),
        |a, x| if x.is_nan() { T::infinity() } else { a.max(x.abs()) },
    )
}

/// Damped Newton solve of `eps^2 (Delta v + |A|^2 v) = 2 a e^{-sqrt2 v}` for the
/// invariant solution that is reflection-symmetric at `s0` and takes the asymptotic
/// value there. The initial guess is the asymptotic formula at every node.
///
/// Solutions regular at the axis all relax onto the same far-field profile, whose gap
/// to the asymptotic formula is small but nonzero. Data imposed at the far end would
/// excite modes growing like `(s1/s)^{5/2}` towards the axis, so both conditions sit at
/// `s0` and the discrete system is solved by marching.
pub fn solve_liouville<T: Real>(
    curve: &ProfileCurve<T>,
    epsilon: T,
    a_star: T,
    domain: (T, T),
) -> Result<LiouvilleSolution<T>> {
    check_params(epsilon, a_star)?;
    let (first, last) = window(curve, domain)?;
    let op = ReducedOperator::new(curve, first, last);
    let a2 = curve.a2[first..=last].to_vec();
    let v_asymptotic = a2
        .iter()
        .map(|a| asymptotic_formula(*a, epsilon, a_star))
        .collect::<Result<Vec<T>>>()?;
    let mut v = v_asymptotic.clone();
    let eps2 = epsilon * epsilon;
    let tol = T::lit(1e-11).max(T::epsilon() * T::lit(1e3));
    let max_iter = 100;
    let coupling = T::lit(2.0) * T::SQRT_2() * a_star;
    let mut r = residual_with(&op, eps2, a_star, &v);
    let mut norm = sup(&r);
    let mut history = vec![norm.as_f64()];
    let mut iterations = 0;
    let fail = |iterations, norm: T, history: &Vec<f64>| LabError::ConvergenceFailure {
        what: "Liouville Newton solve".into(),
        iterations,
        residual: norm.as_f64(),
        history: history.clone(),
    };
    while norm > tol {
        if iterations >= max_iter {
            return Err(fail(iterations, norm, &history));
        }
        let extra: Vec<T> = v[..v.len() - 1]
            .iter()
            .map(|x| coupling * (-T::SQRT_2() * *x).exp())
            .collect();
        let rhs: Vec<T> = r.iter().map(|x| -*x).collect();
        let step = op.march(eps2, &extra, &rhs)?;
        let mut damping = T::one();
        let mut accepted = false;
        for _ in 0..=60 {
            let trial: Vec<T> = v.iter().zip(&step).map(|(x, d)| *x + damping * *d).collect();
            // Steps that make v non-positive are rejected and the damping is retried.
            if trial.iter().all(|x| *x > T::zero()) {
                let tr = residual_with(&op, eps2, a_star, &trial);
                let tn = sup(&tr);
                if tn < norm {
                    v = trial;
                    r = tr;
                    norm = tn;
                    accepted = true;
                    break;
                }
            }
            damping /= T::lit(2.0);
            if damping < T::lit(1e-8) {
                break;
            }
        }
        iterations += 1;
        history.push(norm.as_f64());
        if !accepted {
            // At round-off level the residual can no longer decrease strictly.
            if norm <= tol * T::lit(100.0) {
                break;
            }
            return Err(fail(iterations, norm, &history));
        }
    }
    Ok(LiouvilleSolution {
        first,
        last,
        s: curve.s[first..=last].to_vec(),
        a2,
        v,
        v_asymptotic,
        epsilon,
        a_star,
        newton_iterations: iterations,
        final_residual: norm,
        residual_history: history,
    })
}

/// Solves `eps^2 (Delta + |A|^2) v1 + 2 sqrt2 a e^{-sqrt2 v0} v1 = f` on the window of
/// `v0` with the homogeneous version of its boundary conditions (`v1 = 0` and reflecting
/// at `s0`). `f` has one sample per window node; the last sample is ignored.
pub fn solve_linearized<T: Real>(
    curve: &ProfileCurve<T>,
    epsilon: T,
    a_star: T,
    v0: &LiouvilleSolution<T>,
    f: &[T],
) -> Result<Vec<T>> {
    check_params(epsilon, a_star)?;
    let n = v0.v.len();
    if f.len() != n {
        return Err(LabError::Shape {
            expected: n,
            found: f.len(),
        });
    }
    let op = ReducedOperator::new(curve, v0.first, v0.last);
    let coupling = T::lit(2.0) * T::SQRT_2() * a_star;
    let extra: Vec<T> = v0.v[..n - 1]
        .iter()
        .map(|x| coupling * (-T::SQRT_2() * *x).exp())
        .collect();
    op.march(epsilon * epsilon, &extra, &f[..n - 1])
}

/// Relative residual `|L v1 - f|_inf / |f|_inf` of a linearized solve.
pub fn linearized_residual<T: Real>(
    curve: &ProfileCurve<T>,
    epsilon: T,
    a_star: T,
    v0: &LiouvilleSolution<T>,
    f: &[T],
    v1: &[T],
) -> T {
    let op = ReducedOperator::new(curve, v0.first, v0.last);
    let eps2 = epsilon * epsilon;
    let coupling = T::lit(2.0) * T::SQRT_2() * a_star;
    let n = v1.len();
    let mut worst = T::zero();
    for j in 0..n - 1 {
        let l = eps2 * op.apply_at(v1, j) + coupling * (-T::SQRT_2() * v0.v[j]).exp() * v1[j];
        worst = worst.max((l - f[j]).abs());
    }
    let scale = sup(&f[..n - 1]);
    if scale == T::zero() {
        worst
    } else {
        worst / scale
    }
}

/// Terms of the discrete energy identity obtained by testing the equation against `v`
/// and summing by parts:
/// `eps^2 (potential - gradient + boundary) - forcing = sum_j G_j v_j omega_j |cell_j|`.
#[derive(Debug, Clone, Copy)]
pub struct EnergyBalance<T> {
    pub gradient: T,
    pub potential: T,
    pub forcing: T,
    /// Flux through the far end, `omega v v'` there.
    pub boundary: T,
    /// Contribution of the discrete residual.
    pub residual: T,
    /// `|imbalance| / max(|terms|)`.
    pub relative_imbalance: T,
}

pub fn energy_balance<T: Real>(curve: &ProfileCurve<T>, sol: &LiouvilleSolution<T>) -> EnergyBalance<T> {
    let (first, last) = (sol.first, sol.last);
    let v = &sol.v;
    let n = v.len();
    let eps2 = sol.epsilon * sol.epsilon;
    let two = T::lit(2.0);
    let mut gradient = T::zero();
    for j in 0..n - 1 {
        let i = first + j;
        let h = curve.s[i + 1] - curve.s[i];
        let d = v[j + 1] - v[j];
        if j + 1 < n - 1 {
            gradient += curve.midpoint_weight(i) * d * d / h;
        }
    }
    // The last interval couples the unknowns to the boundary value.
    let il = last - 1;
    let hl = curve.s[last] - curve.s[il];
    let boundary = curve.midpoint_weight(il) * (v[n - 1] - v[n - 2]) / hl * v[n - 2];
    let mut potential = T::zero();
    let mut forcing = T::zero();
    let mut residual = T::zero();
    let r = residual_with(&ReducedOperator::new(curve, first, last), eps2, sol.a_star, v);
    for j in 0..n - 1 {
        let i = first + j;
        let hp = curve.s[i + 1] - curve.s[i];
        let hm = if j == 0 { T::zero() } else { curve.s[i] - curve.s[i - 1] };
        let cell = (hm + hp) / two;
        let mass = curve.weight[i] * cell;
        potential += sol.a2[j] * v[j] * v[j] * mass;
        forcing += two * sol.a_star * (-T::SQRT_2() * v[j]).exp() * v[j] * mass;
        residual += r[j] * v[j] * mass;
    }
    let lhs = eps2 * (potential - gradient + boundary) - forcing;
    let scale = (eps2 * potential.abs())
        .max(eps2 * gradient.abs())
        .max(eps2 * boundary.abs())
        .max(forcing.abs());
    EnergyBalance {
        gradient,
        potential,
        forcing,
        boundary,
        residual,
        relative_imbalance: (lhs - residual).abs() / scale,
    }
}

/// Splits layer heights into `(h1 + h2, h2 - h1)`.
pub fn decouple<T: Real>(h1: &[T], h2: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    if h1.len() != h2.len() {
        return Err(LabError::Shape {
            expected: h1.len(),
            found: h2.len(),
        });
    }
    Ok((
        h1.iter().zip(h2).map(|(a, b)| *a + *b).collect(),
        h1.iter().zip(h2).map(|(a, b)| *b - *a).collect(),
    ))
}

/// Inverse of [`decouple`]: `h1 = (v1 - v2)/2`, `h2 = (v1 + v2)/2`.
pub fn recombine<T: Real>(v1: &[T], v2: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    if v1.len() != v2.len() {
        return Err(LabError::Shape {
            expected: v1.len(),
            found: v2.len(),
        });
    }
    let half = T::lit(0.5);
    Ok((
        v1.iter().zip(v2).map(|(a, b)| (*a - *b) * half).collect(),
        v1.iter().zip(v2).map(|(a, b)| (*a + *b) * half).collect(),
    ))
}

/// Two ordered layer heights on the nodes `first..=last` of a curve.
#[derive(Debug, Clone)]
pub struct TodaPair<T> {
    pub first: usize,
    pub h1: Vec<T>,
    pub h2: Vec<T>,
    pub epsilon: T,
    pub a0: T,
}

impl<T: Real> TodaPair<T> {
    pub fn new(first: usize, h1: Vec<T>, h2: Vec<T>, epsilon: T, a0: T) -> Result<Self> {
        if h1.len() != h2.len() {
            return Err(LabError::Shape {
                expected: h1.len(),
                found: h2.len(),
            });
        }
        if let Some(j) = h1.iter().zip(&h2).position(|(a, b)| !(*b - *a > T::zero())) {
            return Err(LabError::invalid(format!("layers are not ordered at window node {j}")));
        }
        Ok(TodaPair {
            first,
            h1,
            h2,
            epsilon,
            a0,
        })
    }

    /// Heights `h2 = -h1 = v/2` from a Liouville solution.
    pub fn from_liouville(sol: &LiouvilleSolution<T>, a0: T) -> Result<Self> {
        let zero = vec![T::zero(); sol.v.len()];
        let (h1, h2) = recombine(&zero, &sol.v)?;
        TodaPair::new(sol.first, h1, h2, sol.epsilon, a0)
    }

    pub fn last(&self) -> usize {
        self.first + self.h1.len() - 1
    }
}

/// Residuals `r1 = eps^2 J h1 + a0 e^{-sqrt2 (h2 - h1)}` and `r2 = eps^2 J h2 - a0
/// e^{-sqrt2 (h2 - h1)}` at every node of the pair but the last.
pub fn toda_residual<T: Real>(pair: &TodaPair<T>, curve: &ProfileCurve<T>) -> Result<(Vec<T>, Vec<T>)> {
    let last = pair.last();
    if pair.h1.len() < 3 || last >= curve.len() {
        return Err(LabError::Shape {
            expected: curve.len().saturating_sub(pair.first),
            found: pair.h1.len(),
        });
    }
    let op = ReducedOperator::new(curve, pair.first, last);
    let eps2 = pair.epsilon * pair.epsilon;
    let n = pair.h1.len();
    let mut r1 = Vec::with_capacity(n - 1);
    let mut r2 = Vec::with_capacity(n - 1);
    for j in 0..n - 1 {
        let e = pair.a0 * (-T::SQRT_2() * (pair.h2[j] - pair.h1[j])).exp();
        r1.push(eps2 * op.apply_at(&pair.h1, j) + e);
        r2.push(eps2 * op.apply_at(&pair.h2, j) - e);
    }
    Ok((r1, r2))
}

/// `eps^2 J f` with the same discretisation, at every node but the last.
pub fn scaled_jacobi<T: Real>(curve: &ProfileCurve<T>, epsilon: T, first: usize, f: &[T]) -> Vec<T> {
    let op = ReducedOperator::new(curve, first, first + f.len() - 1);
    let eps2 = epsilon * epsilon;
    (0..f.len() - 1).map(|j| eps2 * op.apply_at(f, j)).collect()
}
