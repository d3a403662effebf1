//! Embedded Dormand–Prince 5(4) integrator that reports the solution on a prescribed
//! output grid. Steps are clipped so every grid value is hit exactly; between grid
//! values the step size is adapted to the local error estimate.

use crate::error::{LabError, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions<T> {
    pub rtol: T,
    pub atol: T,
    pub initial_step: T,
    pub max_steps: usize,
}

impl<T: Real> OdeOptions<T> {
    pub fn with_tolerance(rtol: T) -> Self {
        OdeOptions {
            rtol,
            atol: rtol / T::lit(100.0),
            initial_step: T::lit(1e-5),
            max_steps: 5_000_000,
        }
    }
}

// Dormand–Prince coefficients.
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
// b - b*, the embedded error weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<T: Real, const N: usize>(y: &[T; N], h: T, terms: &[(f64, &[T; N])]) -> [T; N] {
    let mut out = *y;
    for (c, k) in terms {
        let hc = h * T::lit(*c);
        for i in 0..N {
            out[i] += hc * k[i];
        }
    }
    out
}

/// Integrates `y' = rhs(s, y)` from `(s_start, y0)` and returns the state at every value
/// of `grid` (strictly increasing, all greater than `s_start`).
///
/// `project` runs after every accepted step (used to keep constrained components on
/// their manifold) and `check` may reject the accepted state with an error.
pub fn integrate_on_grid<T, const N: usize, F, P, C>(
    mut rhs: F,
    s_start: T,
    y0: [T; N],
    grid: &[T],
    opts: &OdeOptions<T>,
    mut project: P,
    mut check: C,
) -> Result<Vec<[T; N]>>
where
    T: Real,
    F: FnMut(T, &[T; N]) -> [T; N],
    P: FnMut(&mut [T; N]),
    C: FnMut(T, &[T; N]) -> Result<()>,
{
    let mut out = Vec::with_capacity(grid.len());
    let mut s = s_start;
    let mut y = y0;
    let mut h_free = opts.initial_step;
    let mut k1 = rhs(s, &y);
    let mut steps = 0usize;
    let safety = T::lit(0.9);
    let min_factor = T::lit(0.2);
    let max_factor = T::lit(5.0);
    let exponent = T::lit(-0.2);

    for &target in grid {
        if target <= s {
            return Err(LabError::invalid("output grid must increase past the start"));
        }
        while s < target {
            steps += 1;
            if steps > opts.max_steps {
                return Err(LabError::IntegrationFailure {
                    arclength: s.as_f64(),
                    reason: "step budget exhausted".into(),
                });
            }
            let remaining = target - s;
            let landing = h_free >= remaining * T::lit(0.999_999);
            let h = if landing { remaining } else { h_free };
            let floor = T::epsilon() * T::lit(16.0) * (T::one() + s.abs());
            if h < floor {
                return Err(LabError::IntegrationFailure {
                    arclength: s.as_f64(),
                    reason: format!("step size underflow (h={:e})", h.as_f64()),
                });
            }

            let k2 = rhs(s + h * T::lit(C2), &axpy(&y, h, &[(A21, &k1)]));
            let k3 = rhs(s + h * T::lit(C3), &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
            let k4 = rhs(s + h * T::lit(C4), &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = rhs(
                s + h * T::lit(C5),
                &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = rhs(
                s + h,
                &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let y_new = axpy(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = rhs(s + h, &y_new);

            // Max-norm keeps the error estimate invariant under permutations of the state.
            let mut err = T::zero();
            for i in 0..N {
                let e = h
                    * (T::lit(E1) * k1[i]
                        + T::lit(E3) * k3[i]
                        + T::lit(E4) * k4[i]
                        + T::lit(E5) * k5[i]
                        + T::lit(E6) * k6[i]
                        + T::lit(E7) * k7[i]);
                let scale = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
                let r = e.abs() / scale;
                if !(r <= err) {
                    err = r;
                }
            }
            if !err.is_finite() {
                h_free = h * min_factor;
                continue;
            }

            let factor = if err == T::zero() {
                max_factor
            } else {
                (safety * err.powf(exponent)).max(min_factor).min(max_factor)
            };
            if err <= T::one() {
                s = if landing { target } else { s + h };
                y = y_new;
                project(&mut y);
                check(s, &y)?;
                k1 = rhs(s, &y);
                // A landing step may be artificially short; do not let it shrink h_free.
                let proposal = h * factor;
                h_free = if landing { h_free.max(proposal) } else { proposal };
            } else {
                h_free = h * factor.min(T::one());
            }
        }
        out.push(y);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_matches_closed_form() {
        let grid: Vec<f64> = (1..=100).map(|k| k as f64 * 0.1).collect();
        let sol = integrate_on_grid(
            |_s, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [1.0, 0.0],
            &grid,
            &OdeOptions::with_tolerance(1e-11),
            |_| {},
            |_, _| Ok(()),
        )
        .unwrap();
        for (s, y) in grid.iter().zip(&sol) {
            assert!((y[0] - s.cos()).abs() < 1e-9, "s={s}");
            assert!((y[1] + s.sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn check_can_abort() {
        let grid = [1.0, 2.0];
        let r = integrate_on_grid(
            |_s, _y: &[f64; 1]| [-1.0],
            0.0,
            [0.5],
            &grid,
            &OdeOptions::with_tolerance(1e-8),
            |_| {},
            |s, y| {
                if y[0] < 0.0 {
                    Err(LabError::DomainViolation { arclength: s })
                } else {
                    Ok(())
                }
            },
        );
        assert!(matches!(r, Err(LabError::DomainViolation { .. })));
    }

    #[test]
    fn grid_must_increase() {
        let r = integrate_on_grid(
            |_s, y: &[f64; 1]| [y[0]],
            1.0,
            [1.0],
            &[0.5],
            &OdeOptions::with_tolerance(1e-8),
            |_| {},
            |_, _| Ok(()),
        );
        assert!(r.is_err());
    }
}
