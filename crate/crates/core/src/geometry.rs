//! Lawson cones `(n-1)|x|^2 = (m-1)|y|^2` in `R^m x R^n` and the generating curves of
//! `O(m) x O(n)`-invariant minimal hypersurfaces.
//!
//! A hypersurface invariant under `O(m) x O(n)` is determined by a curve
//! `s -> (x(s), y(s))` in the open quadrant, where `x = |x|` and `y = |y|`. With unit
//! tangent `(tx, ty)` and normal `nu = (-ty, tx)` the mean curvature is
//! `H = kappa + (m-1) ty / x - (n-1) tx / y`, and minimality turns into a first-order
//! system for `(x, y, tx, ty)`.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::five_point_derivative;
use crate::ode::{integrate_on_grid, OdeOptions};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConeParams {
    pub m: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `m + n >= 8`: the cone is area minimising and the curves stay on one side.
    High,
    /// `m + n <= 7`: the curves cross the cone infinitely often.
    Low,
}

impl ConeParams {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m < 2 || n < 2 {
            return Err(LabError::invalid(format!("cone needs m, n >= 2 (got m={m}, n={n})")));
        }
        Ok(ConeParams { m, n })
    }

    pub fn dimension(&self) -> usize {
        self.m + self.n
    }

    pub fn regime(&self) -> Regime {
        if self.dimension() >= 8 {
            Regime::High
        } else {
            Regime::Low
        }
    }

    /// Cone with the two factors exchanged.
    pub fn swapped(&self) -> Self {
        ConeParams { m: self.n, n: self.m }
    }

    pub(crate) fn mm1<T: Real>(&self) -> T {
        T::from_count(self.m - 1)
    }

    pub(crate) fn nm1<T: Real>(&self) -> T {
        T::from_count(self.n - 1)
    }

    /// `|A|^2 s^2` along the cone itself.
    pub fn cone_a2_constant<T: Real>(&self) -> T {
        T::from_count(self.m + self.n - 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartAxis {
    /// Start at `(r, 0)` with tangent `(0, 1)`.
    XAxis,
    /// Start at `(0, r)` with tangent `(1, 0)`.
    YAxis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Entirely inside `E+ = {(n-1) x^2 < (m-1) y^2}`.
    Plus,
    /// Entirely inside `E- = {(n-1) x^2 > (m-1) y^2}`.
    Minus,
    Oscillating,
    /// On the cone itself.
    Cone,
}

impl Side {
    pub fn as_str(&self) -> &'static str {
        match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
            Side::Oscillating => "oscillating",
            Side::Cone => "cone",
        }
    }
}

/// Pointwise state of a generating curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveState<T> {
    pub x: T,
    pub y: T,
    pub tx: T,
    pub ty: T,
    pub kappa: T,
}

/// Sampled generating curve. All columns have the same length; the first node is the
/// axis point when the curve was shot from an axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve<T> {
    pub cone: ConeParams,
    pub start_axis: Option<StartAxis>,
    pub s: Vec<T>,
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub tx: Vec<T>,
    pub ty: Vec<T>,
    pub kappa: Vec<T>,
    pub a2: Vec<T>,
    pub weight: Vec<T>,
    pub side: Side,
}

/// Start-up and sampling parameters of the shooting integrator.
#[derive(Debug, Clone, Copy)]
pub struct ShootingConfig<T> {
    /// Distance of the starting axis point from the origin.
    pub start_radius: T,
    /// Output spacing in arclength.
    pub spacing: T,
    /// Length of the explicit series step off the axis.
    pub startup_step: T,
}

impl<T: Real> Default for ShootingConfig<T> {
    fn default() -> Self {
        ShootingConfig {
            start_radius: T::one(),
            spacing: T::lit(0.01),
            startup_step: T::lit(1e-4),
        }
    }
}

impl<T: Real> ShootingConfig<T> {
    /// The same configuration seen through a dilation by `lambda`.
    pub fn dilated(&self, lambda: T) -> Self {
        ShootingConfig {
            start_radius: self.start_radius * lambda,
            spacing: self.spacing * lambda,
            startup_step: self.startup_step * lambda,
        }
    }
}

/// Slope `|y| / |x| = sqrt((n-1)/(m-1))` of the cone's generating ray.
pub fn cone_slope<T: Real>(cone: ConeParams) -> T {
    (cone.nm1::<T>() / cone.mm1::<T>()).sqrt()
}

/// `(cos a, sin a)` of the cone ray.
pub fn cone_direction<T: Real>(cone: ConeParams) -> (T, T) {
    let k = cone_slope::<T>(cone);
    let r = (T::one() + k * k).sqrt();
    (T::one() / r, k / r)
}

fn check_off_axis<T: Real>(x: T, y: T) -> Result<()> {
    if !(x > T::zero()) || !(y > T::zero()) {
        return Err(LabError::AxisSingularity {
            x: x.as_f64(),
            y: y.as_f64(),
        });
    }
    Ok(())
}

/// Mean curvature `kappa + (m-1) ty/x - (n-1) tx/y` of the hypersurface generated by
/// the given curve state.
pub fn mean_curvature<T: Real>(cone: ConeParams, state: &CurveState<T>) -> Result<T> {
    check_off_axis(state.x, state.y)?;
    Ok(state.kappa + cone.mm1::<T>() * state.ty / state.x - cone.nm1::<T>() * state.tx / state.y)
}

/// Mean curvature along a sampled curve with `kappa` recovered from the tangent by
/// five-point differences, so the stored curvature column plays no part. `None` on
/// axis nodes.
pub fn mean_curvature_residual<T: Real>(curve: &ProfileCurve<T>) -> Vec<Option<T>> {
    if curve.len() < 5 {
        return vec![None; curve.len()];
    }
    let dtx = five_point_derivative(&curve.s, &curve.tx);
    let dty = five_point_derivative(&curve.s, &curve.ty);
    (0..curve.len())
        .map(|i| {
            if curve.is_axis_node(i) {
                return None;
            }
            let st = CurveState {
                kappa: curve.tx[i] * dty[i] - curve.ty[i] * dtx[i],
                ..curve.state(i)
            };
            mean_curvature(curve.cone, &st).ok()
        })
        .collect()
}

/// Curvature that makes the hypersurface minimal.
#[inline]
pub fn minimal_kappa<T: Real>(cone: ConeParams, x: T, y: T, tx: T, ty: T) -> T {
    cone.nm1::<T>() * tx / y - cone.mm1::<T>() * ty / x
}

/// `|A|^2 = kappa^2 + (m-1)(ty/x)^2 + (n-1)(tx/y)^2`.
#[inline]
pub fn second_fundamental_form<T: Real>(cone: ConeParams, state: &CurveState<T>) -> T {
    let a = state.ty / state.x;
    let b = state.tx / state.y;
    state.kappa * state.kappa + cone.mm1::<T>() * a * a + cone.nm1::<T>() * b * b
}

/// Area density `x^{m-1} y^{n-1}`.
#[inline]
pub fn area_weight<T: Real>(cone: ConeParams, x: T, y: T) -> T {
    x.powi(cone.m as i32 - 1) * y.powi(cone.n as i32 - 1)
}

/// Shoots the minimal generating curve off an axis at unit distance from the origin.
pub fn integrate_profile<T: Real>(
    cone: ConeParams,
    start_axis: StartAxis,
    max_arclength: T,
    tol: T,
) -> Result<ProfileCurve<T>> {
    integrate_profile_with(cone, start_axis, max_arclength, tol, &ShootingConfig::default())
}

pub fn integrate_profile_with<T: Real>(
    cone: ConeParams,
    start_axis: StartAxis,
    max_arclength: T,
    tol: T,
    config: &ShootingConfig<T>,
) -> Result<ProfileCurve<T>> {
    ConeParams::new(cone.m, cone.n)?;
    let r0 = config.start_radius;
    if !(max_arclength >= T::lit(50.0) * r0) || !max_arclength.is_finite() {
        return Err(LabError::invalid(
            "max_arclength must be at least 50 (in units of the start radius)",
        ));
    }
    if !(tol >= T::lit(1e-12)) || !(tol <= T::lit(1e-6)) {
        return Err(LabError::invalid("tol must lie in [1e-12, 1e-6]"));
    }
    if !(r0 > T::zero()) || !(config.spacing > T::zero()) || !(config.startup_step > T::zero()) {
        return Err(LabError::invalid("shooting parameters must be positive"));
    }
    if config.startup_step >= config.spacing {
        return Err(LabError::invalid(
            "startup step must be shorter than the output spacing",
        ));
    }

    let h = config.startup_step;
    // Regular limit of kappa at the axis: near (r0, 0) the term (n-1) tx / y tends to
    // -kappa_0, so kappa_0 n = -(m-1)/r0 (and symmetrically on the y-axis).
    let (axis_state, start_state, kappa0) = match start_axis {
        StartAxis::XAxis => {
            let k0 = -cone.mm1::<T>() / (T::from_count(cone.n) * r0);
            let a = k0 * h;
            let start = [
                r0 - k0 * h * h / T::lit(2.0),
                h - k0 * k0 * h * h * h / T::lit(6.0),
                -a.sin(),
                a.cos(),
            ];
            ([r0, T::zero(), T::zero(), T::one()], start, k0)
        }
        StartAxis::YAxis => {
            let k0 = cone.nm1::<T>() / (T::from_count(cone.m) * r0);
            let a = k0 * h;
            let start = [
                h - k0 * k0 * h * h * h / T::lit(6.0),
                r0 + k0 * h * h / T::lit(2.0),
                a.cos(),
                a.sin(),
            ];
            ([T::zero(), r0, T::one(), T::zero()], start, k0)
        }
    };

    let count = (max_arclength / config.spacing + T::lit(1e-9))
        .floor()
        .to_usize()
        .unwrap_or(0);
    let grid: Vec<T> = (1..=count).map(|k| T::from_count(k) * config.spacing).collect();

    let rhs = |_s: T, u: &[T; 4]| {
        let k = minimal_kappa(cone, u[0], u[1], u[2], u[3]);
        [u[2], u[3], -k * u[3], k * u[2]]
    };
    let project = |u: &mut [T; 4]| {
        let norm = (u[2] * u[2] + u[3] * u[3]).sqrt();
        u[2] /= norm;
        u[3] /= norm;
    };
    let check = |s: T, u: &[T; 4]| {
        if u[0] > T::zero() && u[1] > T::zero() {
            Ok(())
        } else {
            Err(LabError::DomainViolation { arclength: s.as_f64() })
        }
    };
    let mut opts = OdeOptions::with_tolerance(tol);
    opts.initial_step = config.spacing / T::lit(100.0);
    let states = integrate_on_grid(rhs, h, start_state, &grid, &opts, project, check)?;

    let len = states.len() + 1;
    let mut curve = ProfileCurve {
        cone,
        start_axis: Some(start_axis),
        s: Vec::with_capacity(len),
        x: Vec::with_capacity(len),
        y: Vec::with_capacity(len),
        tx: Vec::with_capacity(len),
        ty: Vec::with_capacity(len),
        kappa: Vec::with_capacity(len),
        a2: Vec::with_capacity(len),
        weight: Vec::with_capacity(len),
        side: Side::Cone,
    };
    let axis_a2 = match start_axis {
        StartAxis::XAxis => kappa0 * kappa0 * T::from_count(cone.n) + cone.mm1::<T>() / (r0 * r0),
        StartAxis::YAxis => kappa0 * kappa0 * T::from_count(cone.m) + cone.nm1::<T>() / (r0 * r0),
    };
    curve.s.push(T::zero());
    curve.x.push(axis_state[0]);
    curve.y.push(axis_state[1]);
    curve.tx.push(axis_state[2]);
    curve.ty.push(axis_state[3]);
    curve.kappa.push(kappa0);
    curve.a2.push(axis_a2);
    curve.weight.push(T::zero());
    for (s, u) in grid.iter().zip(&states) {
        let kappa = minimal_kappa(cone, u[0], u[1], u[2], u[3]);
        let st = CurveState {
            x: u[0],
            y: u[1],
            tx: u[2],
            ty: u[3],
            kappa,
        };
        curve.s.push(*s);
        curve.x.push(u[0]);
        curve.y.push(u[1]);
        curve.tx.push(u[2]);
        curve.ty.push(u[3]);
        curve.kappa.push(kappa);
        curve.a2.push(second_fundamental_form(cone, &st));
        curve.weight.push(area_weight(cone, u[0], u[1]));
    }
    curve.side = classify_side(&cone_distance_series(&curve));
    Ok(curve)
}

/// The cone's generating ray sampled on `[s_min, s_max]`.
pub fn cone_ray<T: Real>(cone: ConeParams, s_min: T, s_max: T, spacing: T) -> Result<ProfileCurve<T>> {
    ConeParams::new(cone.m, cone.n)?;
    if !(s_min > T::zero()) || !(s_max > s_min) || !(spacing > T::zero()) {
        return Err(LabError::invalid(
            "cone ray needs 0 < s_min < s_max and positive spacing",
        ));
    }
    let (c, sn) = cone_direction::<T>(cone);
    let count = ((s_max - s_min) / spacing + T::lit(1e-9))
        .floor()
        .to_usize()
        .unwrap_or(0);
    let s: Vec<T> = (0..=count).map(|k| s_min + T::from_count(k) * spacing).collect();
    let x: Vec<T> = s.iter().map(|v| *v * c).collect();
    let y: Vec<T> = s.iter().map(|v| *v * sn).collect();
    let k2 = cone.cone_a2_constant::<T>();
    Ok(ProfileCurve {
        cone,
        start_axis: None,
        a2: s.iter().map(|v| k2 / (*v * *v)).collect(),
        weight: x.iter().zip(&y).map(|(a, b)| area_weight(cone, *a, *b)).collect(),
        tx: vec![c; s.len()],
        ty: vec![sn; s.len()],
        kappa: vec![T::zero(); s.len()],
        s,
        x,
        y,
        side: Side::Cone,
    })
}

/// Signed distances to the cone ray and the sign changes along the curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeDistance<T> {
    /// Positive on the `E+` side.
    pub signed: Vec<T>,
    pub crossing_count: usize,
    /// Linearly interpolated arclengths of the sign changes.
    pub crossings: Vec<T>,
}

pub fn signed_cone_distance<T: Real>(cone: ConeParams, x: T, y: T) -> T {
    let (c, sn) = cone_direction::<T>(cone);
    // Points behind the origin cannot occur in the closed quadrant, so the distance to
    // the ray equals the distance to its supporting line.
    y * c - x * sn
}

pub fn cone_distance_series<T: Real>(curve: &ProfileCurve<T>) -> ConeDistance<T> {
    let signed: Vec<T> = curve
        .x
        .iter()
        .zip(&curve.y)
        .map(|(x, y)| signed_cone_distance(curve.cone, *x, *y))
        .collect();
    let mut crossings = Vec::new();
    let mut last: Option<usize> = None;
    for i in 0..signed.len() {
        let r = (curve.x[i] * curve.x[i] + curve.y[i] * curve.y[i]).sqrt();
        if signed[i].abs() <= zero_band::<T>(r) {
            continue;
        }
        if let Some(j) = last {
            if (signed[i] > T::zero()) != (signed[j] > T::zero()) {
                let t = signed[j] / (signed[j] - signed[i]);
                crossings.push(curve.s[j] + t * (curve.s[i] - curve.s[j]));
            }
        }
        last = Some(i);
    }
    ConeDistance {
        crossing_count: crossings.len(),
        crossings,
        signed,
    }
}

/// Distances below this band around the cone count as zero.
fn zero_band<T: Real>(radius: T) -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(64.0)) * (T::one() + radius)
}

fn classify_side<T: Real>(d: &ConeDistance<T>) -> Side {
    if d.crossing_count > 0 {
        return Side::Oscillating;
    }
    match d.signed.iter().find(|v| **v != T::zero()) {
        Some(v) if *v > T::zero() => Side::Plus,
        Some(_) => Side::Minus,
        None => Side::Cone,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Closest point to the origin at distance 1.
    UnitDistOrigin,
    /// Largest excursion from the cone equal to 1.
    UnitDistCone,
}

/// Image of the curve under the dilation `p -> lambda p` of the ambient space.
pub fn dilate<T: Real>(curve: &ProfileCurve<T>, lambda: T) -> ProfileCurve<T> {
    let inv = T::one() / lambda;
    let inv2 = inv * inv;
    let x: Vec<T> = curve.x.iter().map(|v| *v * lambda).collect();
    let y: Vec<T> = curve.y.iter().map(|v| *v * lambda).collect();
    ProfileCurve {
        cone: curve.cone,
        start_axis: curve.start_axis,
        s: curve.s.iter().map(|v| *v * lambda).collect(),
        weight: x.iter().zip(&y).map(|(a, b)| area_weight(curve.cone, *a, *b)).collect(),
        x,
        y,
        tx: curve.tx.clone(),
        ty: curve.ty.clone(),
        kappa: curve.kappa.iter().map(|v| *v * inv).collect(),
        a2: curve.a2.iter().map(|v| *v * inv2).collect(),
        side: curve.side,
    }
}

pub fn normalize_curve<T: Real>(curve: &ProfileCurve<T>, convention: Normalization) -> Result<ProfileCurve<T>> {
    let dist = match convention {
        Normalization::UnitDistOrigin => curve
            .x
            .iter()
            .zip(&curve.y)
            .map(|(x, y)| (*x * *x + *y * *y).sqrt())
            .fold(T::infinity(), |a, r| a.min(r)),
        Normalization::UnitDistCone => {
            let d = cone_distance_series(curve);
            let sup = d.signed.iter().fold(T::zero(), |a, v| a.max(v.abs()));
            let reach = curve
                .x
                .iter()
                .zip(&curve.y)
                .fold(T::zero(), |a, (x, y)| a.max(x.hypot(*y)));
            if sup <= zero_band(reach) {
                T::zero()
            } else {
                sup
            }
        }
    };
    if !(dist > T::zero()) || !dist.is_finite() {
        return Err(LabError::DegenerateCurve(format!(
            "normalising distance is {}",
            dist.as_f64()
        )));
    }
    if dist == T::one() {
        return Ok(curve.clone());
    }
    Ok(dilate(curve, T::one() / dist))
}

impl<T: Real> ProfileCurve<T> {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn state(&self, i: usize) -> CurveState<T> {
        CurveState {
            x: self.x[i],
            y: self.y[i],
            tx: self.tx[i],
            ty: self.ty[i],
            kappa: self.kappa[i],
        }
    }

    /// True when node `i` lies on a coordinate axis.
    pub fn is_axis_node(&self, i: usize) -> bool {
        !(self.x[i] > T::zero() && self.y[i] > T::zero())
    }

    /// `omega' / omega = (m-1) tx/x + (n-1) ty/y`; `None` on the axis.
    pub fn log_weight_derivative(&self, i: usize) -> Option<T> {
        if self.is_axis_node(i) {
            return None;
        }
        Some(self.cone.mm1::<T>() * self.tx[i] / self.x[i] + self.cone.nm1::<T>() * self.ty[i] / self.y[i])
    }

    /// Area weight at the midpoint of `[s_i, s_{i+1}]`, with the midpoint position taken
    /// from the cubic Hermite interpolant of the curve.
    pub fn midpoint_weight(&self, i: usize) -> T {
        let h = self.s[i + 1] - self.s[i];
        let eighth = h / T::lit(8.0);
        let half = T::lit(0.5);
        let xm = half * (self.x[i] + self.x[i + 1]) + eighth * (self.tx[i] - self.tx[i + 1]);
        let ym = half * (self.y[i] + self.y[i + 1]) + eighth * (self.ty[i] - self.ty[i + 1]);
        area_weight(self.cone, xm.max(T::zero()), ym.max(T::zero()))
    }

    /// Index of the node interval containing `s` (clamped to the sampled range).
    pub fn locate(&self, s: T) -> usize {
        let n = self.s.len();
        if n < 2 || s <= self.s[0] {
            return 0;
        }
        if s >= self.s[n - 1] {
            return n - 2;
        }
        match self
            .s
            .binary_search_by(|v| v.partial_cmp(&s).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i.min(n - 2),
            Err(i) => i - 1,
        }
    }

    /// Index of the node nearest to `s`.
    pub fn nearest_node(&self, s: T) -> usize {
        let i = self.locate(s);
        if i + 1 < self.len() && (self.s[i + 1] - s).abs() < (s - self.s[i]).abs() {
            i + 1
        } else {
            i
        }
    }

    /// Linear interpolation of a node column at arclength `s`.
    pub fn interpolate(&self, column: &[T], s: T) -> T {
        let i = self.locate(s);
        let t = ((s - self.s[i]) / (self.s[i + 1] - self.s[i]))
            .max(T::zero())
            .min(T::one());
        column[i] + t * (column[i + 1] - column[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cone(m: usize, n: usize) -> ConeParams {
        ConeParams::new(m, n).unwrap()
    }

    #[test]
    fn slopes() {
        assert_eq!(cone_slope::<f64>(cone(2, 2)), 1.0);
        assert_eq!(cone_slope::<f64>(cone(4, 4)), 1.0);
        assert!((cone_slope::<f64>(cone(3, 5)) - std::f64::consts::SQRT_2).abs() < 1e-5);
        assert!(ConeParams::new(1, 4).is_err());
        assert_eq!(cone(4, 4).regime(), Regime::High);
        assert_eq!(cone(3, 4).regime(), Regime::Low);
    }

    #[test]
    fn mean_curvature_examples() {
        let (c, s) = cone_direction::<f64>(cone(3, 5));
        let st = CurveState {
            x: c,
            y: s,
            tx: c,
            ty: s,
            kappa: 0.0,
        };
        assert!(mean_curvature(cone(3, 5), &st).unwrap().abs() < 1e-14);
        let h = 0.5f64.sqrt();
        let st = CurveState {
            x: 2.0 * h,
            y: 2.0 * h,
            tx: h,
            ty: h,
            kappa: 0.0,
        };
        assert!(mean_curvature(cone(2, 2), &st).unwrap().abs() < 1e-15);
        let st = CurveState {
            x: 1.0,
            y: 0.5,
            tx: 1.0,
            ty: 0.0,
            kappa: 0.0,
        };
        assert_eq!(mean_curvature(cone(4, 4), &st).unwrap(), -6.0);
        let st = CurveState {
            x: 1.0,
            y: 0.0,
            tx: 0.0,
            ty: 1.0,
            kappa: 0.0,
        };
        assert!(matches!(
            mean_curvature(cone(4, 4), &st),
            Err(LabError::AxisSingularity { .. })
        ));
    }

    #[test]
    fn high_dimensional_curve_is_one_sided() {
        let c = integrate_profile::<f64>(cone(4, 4), StartAxis::XAxis, 200.0, 1e-10).unwrap();
        assert_eq!(c.side, Side::Minus);
        let d = cone_distance_series(&c);
        assert_eq!(d.crossing_count, 0);
        assert!(d.signed.iter().all(|v| *v < 0.0));
        let last = c.len() - 1;
        let ratio = c.a2[last] * c.s[last] * c.s[last];
        assert!((ratio - 6.0).abs() < 0.02 * 6.0, "s^2 |A|^2 = {ratio}");
        for i in 1..c.len() {
            assert!((c.tx[i] * c.tx[i] + c.ty[i] * c.ty[i] - 1.0).abs() < 1e-12);
            assert!(mean_curvature(c.cone, &c.state(i)).unwrap().abs() < 1e-8);
            assert!(c.weight[i] > 0.0 && c.a2[i] > 0.0);
        }
    }

    #[test]
    fn plus_branch_from_the_y_axis() {
        let c = integrate_profile::<f64>(cone(3, 5), StartAxis::YAxis, 200.0, 1e-10).unwrap();
        assert_eq!(c.side, Side::Plus);
        let d = cone_distance_series(&c);
        let tail: Vec<f64> = d.signed[10_000..].to_vec();
        assert!(tail.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn simons_curve_oscillates() {
        let c = integrate_profile::<f64>(cone(2, 2), StartAxis::XAxis, 400.0, 1e-10).unwrap();
        assert_eq!(c.side, Side::Oscillating);
        let d = cone_distance_series(&c);
        // Frozen from an independent high-order integration of the same system.
        assert_eq!(d.crossing_count, 3);
        let expected = [1.69, 23.29, 255.38];
        for (a, b) in d.crossings.iter().zip(expected) {
            assert!((a - b).abs() < 0.01 * b, "crossing {a} vs {b}");
        }
    }

    #[test]
    fn exchange_symmetry_is_exact() {
        let a = integrate_profile::<f64>(cone(2, 3), StartAxis::XAxis, 60.0, 1e-10).unwrap();
        let b = integrate_profile::<f64>(cone(3, 2), StartAxis::YAxis, 60.0, 1e-10).unwrap();
        assert_eq!(a.len(), b.len());
        for i in 0..a.len() {
            assert!((a.x[i] - b.y[i]).abs() <= 1e-10);
            assert!((a.y[i] - b.x[i]).abs() <= 1e-10);
            assert!((a.kappa[i] + b.kappa[i]).abs() <= 1e-10);
        }
    }

    #[test]
    fn cone_ray_has_zero_distance() {
        let r = cone_ray::<f64>(cone(3, 5), 0.5, 50.0, 0.5).unwrap();
        let d = cone_distance_series(&r);
        assert!(d.signed.iter().all(|v| v.abs() < 1e-13));
        assert_eq!(d.crossing_count, 0);
        assert!(normalize_curve(&r, Normalization::UnitDistCone).is_err());
    }

    #[test]
    fn normalisation() {
        let c = integrate_profile::<f64>(cone(4, 4), StartAxis::XAxis, 60.0, 1e-10).unwrap();
        let n = normalize_curve(&c, Normalization::UnitDistOrigin).unwrap();
        assert_eq!(n, c);
        let big = dilate(&c, 3.7);
        let back = normalize_curve(&big, Normalization::UnitDistOrigin).unwrap();
        for i in 0..c.len() {
            assert!((back.x[i] - c.x[i]).abs() < 1e-10);
            assert!((back.s[i] - c.s[i]).abs() < 1e-10);
            assert!((back.a2[i] - c.a2[i]).abs() < 1e-10 * c.a2[i].max(1.0));
        }
        let u = normalize_curve(&c, Normalization::UnitDistCone).unwrap();
        let d = cone_distance_series(&u);
        let sup = d.signed.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!((sup - 1.0).abs() < 1e-10);
    }

    #[test]
    fn argument_validation() {
        assert!(integrate_profile::<f64>(cone(4, 4), StartAxis::XAxis, 10.0, 1e-10).is_err());
        assert!(integrate_profile::<f64>(cone(4, 4), StartAxis::XAxis, 100.0, 1e-3).is_err());
        assert!(integrate_profile::<f64>(cone(4, 4), StartAxis::XAxis, 100.0, 1e-14).is_err());
    }

    #[test]
    fn single_precision_runs() {
        // Far out the curvature increments fall below single-precision resolution, so
        // only the start of the curve is compared.
        let c = integrate_profile::<f32>(cone(4, 4), StartAxis::XAxis, 60.0f32, 1e-6).unwrap();
        let d = integrate_profile::<f64>(cone(4, 4), StartAxis::XAxis, 60.0, 1e-10).unwrap();
        for i in 0..1000 {
            assert!((c.x[i] as f64 - d.x[i]).abs() < 1e-4);
            assert!((c.y[i] as f64 - d.y[i]).abs() < 1e-4);
        }
    }
}
