//! The one-dimensional transition layer `w(z) = tanh(z / sqrt 2)` of the Allen–Cahn
//! equation with potential `F(s) = (1 - s^2)^2 / 4`, together with a Numerov
//! boundary-value solve that validates it, the layer energy and the interaction
//! coefficient of two neighbouring layers.

use crate::error::{LabError, Result};
use crate::linalg::{five_point_derivative, Tridiagonal};
use crate::quad;
use crate::scalar::Real;

/// Sampled heteroclinic profile on a symmetric grid `[-Z, Z]`.
#[derive(Debug, Clone)]
pub struct HeteroclinicProfile<T> {
    pub z_grid: Vec<T>,
    pub w: Vec<T>,
    pub w_prime: Vec<T>,
    pub half_width: T,
    /// Newton iterations used (zero for closed-form samples).
    pub newton_iterations: usize,
    /// Sup norm of `w'' + w - w^3` at interior nodes, with `w''` taken from the
    /// discrete scheme that produced the samples.
    pub ode_residual: T,
}

/// Double-well potential `F(s) = (1 - s^2)^2 / 4`.
#[inline]
pub fn potential<T: Real>(s: T) -> T {
    let q = T::one() - s * s;
    q * q / T::lit(4.0)
}

/// Energy density `|u'|^2 / 2 + F(u)`.
#[inline]
pub fn energy_density<T: Real>(u: T, du: T) -> T {
    du * du / T::lit(2.0) + potential(u)
}

#[inline]
pub(crate) fn profile_unchecked<T: Real>(z: T) -> (T, T) {
    let arg = z / T::SQRT_2();
    let w = arg.tanh();
    let c = arg.cosh();
    (w, T::FRAC_1_SQRT_2() / (c * c))
}

/// Closed-form heteroclinic value and derivative at `z`.
pub fn evaluate_profile<T: Real>(z: T) -> Result<(T, T)> {
    if !z.is_finite() {
        return Err(LabError::invalid("profile argument must be finite"));
    }
    Ok(profile_unchecked(z))
}

fn symmetric_grid<T: Real>(half_width: T, node_count: usize) -> Vec<T> {
    let c = (node_count - 1) / 2;
    let h = half_width / T::from_count(c);
    (0..node_count)
        .map(|i| {
            if i >= c {
                T::from_count(i - c) * h
            } else {
                -(T::from_count(c - i) * h)
            }
        })
        .collect()
}

fn check_grid_args<T: Real>(half_width: T, node_count: usize, min_width: f64) -> Result<()> {
    if !(half_width >= T::lit(min_width)) || !half_width.is_finite() {
        return Err(LabError::invalid(format!("half_width must be at least {min_width}")));
    }
    if node_count < 101 || node_count.is_multiple_of(2) {
        return Err(LabError::invalid(
            "node_count must be odd and at least 101 (the grid carries z = 0)",
        ));
    }
    Ok(())
}

/// Closed-form profile sampled on the symmetric grid.
pub fn sample_profile<T: Real>(half_width: T, node_count: usize) -> Result<HeteroclinicProfile<T>> {
    check_grid_args(half_width, node_count, 0.0)?;
    let z_grid = symmetric_grid(half_width, node_count);
    let (w, w_prime): (Vec<T>, Vec<T>) = z_grid.iter().map(|z| profile_unchecked(*z)).unzip();
    Ok(HeteroclinicProfile {
        z_grid,
        w,
        w_prime,
        half_width,
        newton_iterations: 0,
        ode_residual: T::zero(),
    })
}

/// Solves `w'' = w^3 - w` on `[0, Z]` with `w(0) = 0`, `w(Z) = tanh(Z / sqrt 2)` by
/// Newton's method on the fourth-order Numerov discretisation, then mirrors the result
/// to `[-Z, 0]` so the profile is exactly odd.
pub fn solve_profile_bvp<T: Real>(half_width: T, node_count: usize) -> Result<HeteroclinicProfile<T>> {
    check_grid_args(half_width, node_count, 5.0)?;
    let z_grid = symmetric_grid(half_width, node_count);
    let c = (node_count - 1) / 2;
    let z_half = &z_grid[c..];
    let m = z_half.len();
    let h = z_half[1] - z_half[0];
    let h2 = h * h;
    let twelfth = h2 / T::lit(12.0);
    let f = |w: T| w * w * w - w;
    let df = |w: T| T::lit(3.0) * w * w - T::one();

    // Deliberately not the closed form: a layer of the wrong width.
    let mut w: Vec<T> = z_half.iter().map(|z| z.tanh()).collect();
    w[0] = T::zero();
    w[m - 1] = profile_unchecked(z_half[m - 1]).0;

    let residual = |w: &[T]| -> Vec<T> {
        (1..m - 1)
            .map(|i| {
                (w[i + 1] - T::lit(2.0) * w[i] + w[i - 1])
                    - twelfth * (f(w[i + 1]) + T::lit(10.0) * f(w[i]) + f(w[i - 1]))
            })
            .collect()
    };
    let sup = |r: &[T]| r.iter().fold(T::zero(), |a, x| a.max(x.abs()));

    let max_iter = 50;
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let r = residual(&w);
        let norm = sup(&r);
        history.push(norm.as_f64());
        if norm < T::lit(1e-14).max(T::epsilon() * T::lit(8.0)) {
            break;
        }
        if iterations >= max_iter {
            return Err(LabError::ConvergenceFailure {
                what: "heteroclinic boundary-value solve".into(),
                iterations,
                residual: norm.as_f64(),
                history,
            });
        }
        let n = m - 2;
        let mut jac = Tridiagonal::zeros(n);
        for k in 0..n {
            let i = k + 1;
            jac.diag[k] = -T::lit(2.0) - T::lit(10.0) * twelfth * df(w[i]);
            if k + 1 < n {
                jac.upper[k] = T::one() - twelfth * df(w[i + 1]);
                jac.lower[k] = T::one() - twelfth * df(w[i + 1]);
            }
        }
        let rhs: Vec<T> = r.iter().map(|x| -*x).collect();
        let delta = jac.solve(&rhs)?;
        for k in 0..n {
            w[k + 1] += delta[k];
        }
        iterations += 1;
        if sup(&delta) < T::epsilon() * T::lit(4.0) {
            let r = residual(&w);
            history.push(sup(&r).as_f64());
            break;
        }
    }
    let ode_residual = sup(&residual(&w)) / h2;

    let mut full = vec![T::zero(); node_count];
    for k in 0..m {
        full[c + k] = w[k];
        full[c - k] = -w[k];
    }
    let w_prime = five_point_derivative(&z_grid, &full);
    Ok(HeteroclinicProfile {
        z_grid,
        w: full,
        w_prime,
        half_width,
        newton_iterations: iterations,
        ode_residual,
    })
}

/// Layer energy `sigma_0 = \int (w'^2/2 + F(w)) dz` by adaptive quadrature on `[-20, 20]`.
pub fn energy_constant<T: Real>() -> T {
    energy_constant_on(T::lit(20.0), T::lit(1e-14)).value
}

/// Layer energy restricted to `[-half_width, half_width]`.
pub fn energy_constant_on<T: Real>(half_width: T, tol: T) -> quad::Quadrature<T> {
    quad::integrate(
        |z| {
            let (w, dw) = profile_unchecked(z);
            energy_density(w, dw)
        },
        -half_width,
        half_width,
        tol,
    )
}

/// Energy excess `E(d) - 2 sigma_0` of the well `w(z - d/2) - w(z + d/2) + 1`.
pub fn interaction_deficit<T: Real>(d: T) -> T {
    let half = d / T::lit(2.0);
    let integrand = |z: T| {
        let (wa, da) = profile_unchecked(z - half);
        let (wb, db) = profile_unchecked(z + half);
        let u = wa - wb + T::one();
        let du = da - db;
        energy_density(u, du) - energy_density(wa, da) - energy_density(wb, db)
    };
    let reach = half + T::lit(20.0);
    let tol = T::lit(1e-16).max(T::epsilon() * T::lit(1e-2));
    // Split at the layer centres so the panels see smooth integrands.
    let pieces = [(-reach, -half), (-half, T::zero()), (T::zero(), half), (half, reach)];
    pieces
        .iter()
        .map(|(a, b)| quad::integrate(integrand, *a, *b, tol).value)
        .sum()
}

/// Result of the interaction-energy fit `E(d) - 2 sigma_0 ~ -(a_0 / sqrt 2) e^{-sqrt 2 d}`.
#[derive(Debug, Clone)]
pub struct InteractionFit<T> {
    pub a0: T,
    /// Fitted slope of `log(-deficit)` against `d`.
    pub slope: T,
    pub intercept: T,
    /// Largest relative mismatch between fitted and measured deficits.
    pub relative_fit_residual: T,
    pub samples: Vec<(T, T)>,
    pub warning: Option<String>,
}

/// Interaction coefficient `a_0` from a log-linear fit of the two-layer energy deficit
/// over separations `d` in `[6, 12]`.
pub fn interaction_coefficient<T: Real>() -> InteractionFit<T> {
    interaction_coefficient_on(T::lit(6.0), T::lit(12.0), 13)
}

pub fn interaction_coefficient_on<T: Real>(d_min: T, d_max: T, count: usize) -> InteractionFit<T> {
    let count = count.max(2);
    let samples: Vec<(T, T)> = (0..count)
        .map(|i| {
            let d = d_min + (d_max - d_min) * T::from_count(i) / T::from_count(count - 1);
            (d, interaction_deficit(d))
        })
        .collect();
    let n = T::from_count(count);
    let xs: Vec<T> = samples.iter().map(|p| p.0).collect();
    let ys: Vec<T> = samples.iter().map(|p| (-p.1).ln()).collect();
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let sxy: T = xs.iter().zip(&ys).map(|(x, y)| (*x - mx) * (*y - my)).sum();
    let sxx: T = xs.iter().map(|x| (*x - mx) * (*x - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let relative_fit_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| ((intercept + slope * *x - *y).exp() - T::one()).abs())
        .fold(T::zero(), |a, r| if r.is_nan() { T::infinity() } else { a.max(r) });
    let a0 = T::SQRT_2() * intercept.exp();
    let warning = if relative_fit_residual > T::lit(0.05) {
        Some(format!(
            "interaction fit degraded: relative residual {:.3e}",
            relative_fit_residual.as_f64()
        ))
    } else {
        None
    };
    InteractionFit {
        a0,
        slope,
        intercept,
        relative_fit_residual,
        samples,
        warning,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        let (w, dw) = evaluate_profile(0.0f64).unwrap();
        assert_eq!(w, 0.0);
        assert!((dw - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        // tanh(1/sqrt 2) evaluated independently through exponentials.
        let a = (2.0f64 / 2f64.sqrt()).exp();
        let expected = (a - 1.0) / (a + 1.0);
        let (w1, _) = evaluate_profile(1.0f64).unwrap();
        assert!((w1 - expected).abs() < 1e-15);
        assert!((w1 - 0.60886).abs() < 1e-5);
        let (w5, _) = evaluate_profile(5.0f64).unwrap();
        let tail = 1.0 - 2.0 * (-5.0 * 2f64.sqrt()).exp();
        assert!((w5 - tail).abs() < 2e-6);
        assert!((tail - 0.998301).abs() < 1e-6);
    }

    #[test]
    fn non_finite_argument_is_rejected() {
        assert!(evaluate_profile(f64::NAN).is_err());
        assert!(evaluate_profile(f64::INFINITY).is_err());
    }

    #[test]
    fn odd_symmetry_is_exact() {
        for k in 0..200 {
            let z = k as f64 * 0.173 - 17.0;
            assert_eq!(evaluate_profile(-z).unwrap().0, -evaluate_profile(z).unwrap().0);
        }
    }

    #[test]
    fn tail_law() {
        let mut worst: f64 = 0.0;
        for k in 0..=400 {
            let z = 4.0 + k as f64 * 0.01;
            let (w, _) = evaluate_profile(z).unwrap();
            let dev = (1.0 - w - 2.0 * (-2f64.sqrt() * z).exp()).abs();
            worst = worst.max(dev / (-2.0 * 2f64.sqrt() * z).exp());
        }
        // The exact next coefficient is 2 (1 - w = 2e/(1+e) = 2e - 2e^2 + ...).
        assert!(worst <= 4.0, "tail constant {worst}");
        assert!(worst > 1.9);
    }

    #[test]
    fn first_integral_on_samples() {
        let p = sample_profile(10.0f64, 2001).unwrap();
        for (w, dw) in p.w.iter().zip(&p.w_prime) {
            let q = 0.5 * dw * dw - 0.25 * (1.0 - w * w).powi(2);
            assert!(q.abs() < 1e-10);
        }
    }

    #[test]
    fn bvp_matches_closed_form() {
        let p = solve_profile_bvp(10.0f64, 2001).unwrap();
        let c = 1000;
        assert_eq!(p.z_grid[c], 0.0);
        assert_eq!(p.w[c], 0.0);
        let err = p
            .z_grid
            .iter()
            .zip(&p.w)
            .map(|(z, w)| (w - (z / 2f64.sqrt()).tanh()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "sup error {err:e}");
        assert!(p.ode_residual < 1e-10, "residual {:e}", p.ode_residual);
        for i in 0..p.w.len() {
            assert!((p.w[i] + p.w[p.w.len() - 1 - i]).abs() < 1e-12);
            assert!(p.w_prime[i] > 0.0 && p.w_prime[i] <= p.w_prime[c]);
            if i > 0 {
                assert!(p.w[i] > p.w[i - 1]);
            }
        }
    }

    #[test]
    fn coarse_bvp_still_converges() {
        let p = solve_profile_bvp(5.0f64, 101).unwrap();
        let err = p
            .z_grid
            .iter()
            .zip(&p.w)
            .map(|(z, w)| (w - (z / 2f64.sqrt()).tanh()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-5, "sup error {err:e}");
    }

    #[test]
    fn bvp_argument_validation() {
        assert!(solve_profile_bvp(4.0f64, 2001).is_err());
        assert!(solve_profile_bvp(10.0f64, 99).is_err());
        assert!(solve_profile_bvp(10.0f64, 2000).is_err());
    }

    #[test]
    fn energy_constant_value() {
        let sigma: f64 = energy_constant();
        assert!((sigma - 2.0 * 2f64.sqrt() / 3.0).abs() < 1e-8);
        assert!((sigma - 0.942_809_0).abs() < 1e-7);
        let fine = energy_constant_on(20.0f64, 5e-15).value;
        assert!((fine - sigma).abs() < 1e-10);
    }

    #[test]
    fn energy_window_tail() {
        let z = 10.0f64;
        let a = energy_constant_on(z, 1e-15).value;
        let b = energy_constant_on(2.0 * z, 1e-15).value;
        let tail = (-2.0 * 2f64.sqrt() * z).exp();
        // Both tails together contribute 4 sqrt(2) e^{-2 sqrt 2 Z} to leading order.
        let predicted = 4.0 * 2f64.sqrt() * tail;
        assert!(((b - a) - predicted).abs() < 0.05 * predicted);
        assert!((b - a).abs() < 1e-10);
    }

    #[test]
    fn interaction_fit() {
        let fit: InteractionFit<f64> = interaction_coefficient();
        assert!(fit.a0 > 0.0);
        assert!(fit.relative_fit_residual < 0.05);
        assert!(fit.warning.is_none());
        assert!((fit.slope + 2f64.sqrt()).abs() < 0.02 * 2f64.sqrt());
        for pair in fit.samples.windows(2) {
            assert!(pair[0].1 < 0.0 && pair[1].1 < 0.0);
            assert!(pair[1].1 > pair[0].1);
        }
        // Leading coefficient of the deficit is -8 sqrt 2, so a0 -> 16 as d grows.
        assert!((fit.a0 - 16.0).abs() < 0.2, "a0 = {}", fit.a0);
    }

    #[test]
    fn single_precision_smoke() {
        let (w, dw) = evaluate_profile(0.5f32).unwrap();
        assert!((w - (0.5f32 / 2f32.sqrt()).tanh()).abs() < 1e-7);
        assert!(dw > 0.0);
        let sigma: f32 = energy_constant_on(10.0f32, 1e-6).value;
        assert!((sigma - 0.942_809).abs() < 1e-5);
    }
}
