//! Ball energies and the second-variation form of a reduced field.

use rayon::prelude::*;

use super::ansatz::{tube_cutoff, ReducedField2D};
use crate::error::{LabError, Result};
use crate::heteroclinic::{potential, profile_unchecked};
use crate::scalar::{unit_sphere_area, Real};

/// Volume weight `r^{m-1} t^{n-1}` with trapezoid halving on the outer grid edges.
fn node_weight<T: Real>(field: &ReducedField2D<T>, i: usize, j: usize) -> T {
    let (nr, nt) = field.shape();
    let mut w = field.r_grid[i].powi(field.cone.m as i32 - 1) * field.t_grid[j].powi(field.cone.n as i32 - 1);
    if i + 1 == nr {
        w /= T::lit(2.0);
    }
    if j + 1 == nt {
        w /= T::lit(2.0);
    }
    w
}

/// `(pair weight, second node)` for the two forward edges at node `(i, j)`.
fn edge_weights<T: Real>(field: &ReducedField2D<T>, i: usize, j: usize) -> [Option<(T, usize, bool)>; 2] {
    let (nr, nt) = field.shape();
    let half = T::lit(0.5);
    let (mm1, nm1) = (field.cone.m as i32 - 1, field.cone.n as i32 - 1);
    let t_half = |w: T| if j + 1 == nt { w * half } else { w };
    let r_half = |w: T| if i + 1 == nr { w * half } else { w };
    let radial = (i + 1 < nr).then(|| {
        let rm = half * (field.r_grid[i] + field.r_grid[i + 1]);
        (t_half(rm.powi(mm1) * field.t_grid[j].powi(nm1)), (i + 1) * nt + j, true)
    });
    let angular = (j + 1 < nt).then(|| {
        let tm = half * (field.t_grid[j] + field.t_grid[j + 1]);
        (r_half(field.r_grid[i].powi(mm1) * tm.powi(nm1)), i * nt + j + 1, false)
    });
    [radial, angular]
}

fn sphere_factor<T: Real>(field: &ReducedField2D<T>) -> T {
    unit_sphere_area::<T>(field.cone.m) * unit_sphere_area::<T>(field.cone.n)
}

/// `int_{B_R} (|grad u|^2 / 2 + (1 - u^2)^2 / 4)` over `R^{m+n}`, written as the reduced
/// integral with weight `|S^{m-1}| |S^{n-1}| r^{m-1} t^{n-1}`. Gradients are forward
/// differences on edges whose midpoint lies in the ball; `R` is in the blown-up scale.
pub fn energy_in_ball<T: Real>(field: &ReducedField2D<T>, radius: T) -> Result<T> {
    let extent = field.r_grid[field.r_grid.len() - 1].min(field.t_grid[field.t_grid.len() - 1]);
    if !(radius > T::zero()) || radius > extent * (T::one() + T::lit(1e-12)) {
        return Err(LabError::Domain(format!(
            "ball radius {radius} outside (0, {extent}] covered by the grid"
        )));
    }
    let (nr, nt) = field.shape();
    let h = field.spacing;
    let r2 = radius * radius;
    let half = T::lit(0.5);
    let total: T = (0..nr)
        .into_par_iter()
        .map(|i| {
            let mut acc = T::zero();
            let ri = field.r_grid[i];
            for j in 0..nt {
                let tj = field.t_grid[j];
                if ri * ri + tj * tj > r2 + h * h {
                    break;
                }
                let idx = i * nt + j;
                let u = field.u[idx];
                if ri * ri + tj * tj <= r2 {
                    acc += node_weight(field, i, j) * potential(u);
                }
                for (w, other, radial) in edge_weights(field, i, j).into_iter().flatten() {
                    let (mr, mt) = if radial {
                        (ri + half * h, tj)
                    } else {
                        (ri, tj + half * h)
                    };
                    if mr * mr + mt * mt <= r2 {
                        let d = (field.u[other] - u) / h;
                        acc += w * half * d * d;
                    }
                }
            }
            acc
        })
        .collect::<Vec<T>>()
        .into_iter()
        .sum();
    Ok(total * h * h * sphere_factor(field))
}

/// Least-squares slope of `log E` against `log R`.
#[derive(Debug, Clone)]
pub struct EnergyGrowth<T> {
    pub slope: T,
    pub intercept: T,
    /// `(R, E(R), running slope)`; the running slope is the secant slope to the previous
    /// sample (NaN for the first).
    pub samples: Vec<(T, T, T)>,
}

/// Samples `E(R)` at `count` log-spaced radii in `[r_min, r_max]` and fits the growth
/// exponent.
pub fn energy_growth<T: Real>(field: &ReducedField2D<T>, r_min: T, r_max: T, count: usize) -> Result<EnergyGrowth<T>> {
    if count < 2 || !(r_min > T::zero()) || !(r_max > r_min) {
        return Err(LabError::invalid("need at least two radii with 0 < r_min < r_max"));
    }
    let (la, lb) = (r_min.ln(), r_max.ln());
    let mut samples: Vec<(T, T, T)> = Vec::with_capacity(count);
    for k in 0..count {
        let radius = if k + 1 == count {
            r_max
        } else {
            (la + (lb - la) * T::from_count(k) / T::from_count(count - 1)).exp()
        };
        let e = energy_in_ball(field, radius)?;
        let running = match samples.last() {
            Some(&(r0, e0, _)) => (e.ln() - e0.ln()) / (radius.ln() - r0.ln()),
            None => T::nan(),
        };
        samples.push((radius, e, running));
    }
    if samples.iter().any(|s| !(s.1 > T::zero())) {
        return Err(LabError::Domain("energy vanishes on a sampled ball".into()));
    }
    let n = T::from_count(count);
    let xs: Vec<T> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<T> = samples.iter().map(|s| s.1.ln()).collect();
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let sxy: T = xs.iter().zip(&ys).map(|(x, y)| (*x - mx) * (*y - my)).sum();
    let sxx: T = xs.iter().map(|x| (*x - mx) * (*x - mx)).sum();
    let slope = sxy / sxx;
    Ok(EnergyGrowth {
        slope,
        intercept: my - slope * mx,
        samples,
    })
}

/// `B(psi, psi) = int (|grad psi|^2 - (1 - 3u^2) psi^2)` with the reduced volume weight.
pub fn stability_form<T: Real>(field: &ReducedField2D<T>, psi: &[T]) -> Result<T> {
    if psi.len() != field.u.len() {
        return Err(LabError::Shape {
            expected: field.u.len(),
            found: psi.len(),
        });
    }
    let (nr, nt) = field.shape();
    let h = field.spacing;
    let three = T::lit(3.0);
    let total: T = (0..nr)
        .into_par_iter()
        .map(|i| {
            let mut acc = T::zero();
            for j in 0..nt {
                let idx = i * nt + j;
                let p = psi[idx];
                let u = field.u[idx];
                if p != T::zero() {
                    acc -= node_weight(field, i, j) * (T::one() - three * u * u) * p * p;
                }
                for (w, other, _) in edge_weights(field, i, j).into_iter().flatten() {
                    let d = psi[other] - p;
                    if d != T::zero() {
                        acc += w * d * d / (h * h);
                    }
                }
            }
            acc
        })
        .collect::<Vec<T>>()
        .into_iter()
        .sum();
    Ok(total * h * h * sphere_factor(field))
}

/// A test function concentrated on the lowest layer, and its second variation.
#[derive(Debug, Clone)]
pub struct UnstableDirection<T> {
    pub psi: Vec<T>,
    pub b_value: T,
    pub window: (T, T),
}

/// Bump on `(a, b)`: `exp(1 - 1/(1 - x^2))` in the rescaled variable `x in (-1, 1)`.
pub fn window_bump<T: Real>(s: T, window: (T, T)) -> T {
    let (a, b) = window;
    let x = (T::lit(2.0) * s - a - b) / (b - a);
    if x.abs() >= T::one() {
        return T::zero();
    }
    (T::one() - T::one() / (T::one() - x * x)).exp()
}

/// Builds `psi = w'(z - h_1) chi(s)`, tapered by the tube cutoff, with `chi` a bump on the
/// arclength window (curve units), and evaluates `B(psi, psi)`.
///
/// The window must span at least eight grid spacings in the blown-up scale.
pub fn unstable_direction<T: Real>(field: &ReducedField2D<T>, window: (T, T)) -> Result<UnstableDirection<T>> {
    let layers = field
        .layers
        .as_ref()
        .ok_or_else(|| LabError::invalid("field carries no layer geometry"))?;
    let curve = &layers.curve;
    let (lo, hi) = (curve.s[0], curve.s[curve.len() - 1]);
    if !(window.0 >= lo && window.1 <= hi && window.0 < window.1) {
        return Err(LabError::Domain(format!(
            "window ({}, {}) not inside the curve range [{lo}, {hi}]",
            window.0, window.1
        )));
    }
    let width = (window.1 - window.0) / layers.epsilon;
    let minimum = field.spacing * T::lit(8.0);
    if width < minimum {
        return Err(LabError::NarrowWindow {
            width: width.as_f64(),
            minimum: minimum.as_f64(),
        });
    }
    let radius = layers.tube_radius();
    let psi: Vec<T> = (0..field.u.len())
        .map(|idx| {
            let s = layers.fermi_s[idx];
            let z = layers.fermi_z[idx];
            if s.is_nan() {
                return T::zero();
            }
            let chi = window_bump(s, window);
            if chi == T::zero() {
                return T::zero();
            }
            profile_unchecked(z - layers.lowest_height[idx]).1 * chi * tube_cutoff(z, radius)
        })
        .collect();
    let b_value = stability_form(field, &psi)?;
    Ok(UnstableDirection { psi, b_value, window })
}
