//! Nearest-point projection onto the blown-up curve `eps^-1 Sigma`.

use crate::error::{LabError, Result};
use crate::geometry::ProfileCurve;
use crate::scalar::Real;

/// Spacing of the coarse search samples, in curve units.
const COARSE_SPACING: f64 = 0.05;

/// Position, first and second arclength derivatives of the cubic Hermite interpolant
/// through the curve nodes.
#[derive(Debug, Clone, Copy)]
struct Jet<T> {
    p: [T; 2],
    d1: [T; 2],
    d2: [T; 2],
}

/// Reusable projector onto `eps^-1 Sigma` with a bucket index over the curve nodes.
///
/// Points and normal offsets are in the blown-up scale; arclengths are in curve units.
/// The unit normal is the curve normal `nu = (-ty, tx)`.
#[derive(Debug, Clone)]
pub struct FermiFrame<'a, T> {
    curve: &'a ProfileCurve<T>,
    epsilon: T,
    delta_tube: T,
    coarse: Vec<usize>,
    bucket: T,
    origin: [T; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

/// Result of projecting one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FermiPoint<T> {
    /// Arclength of the foot point on the unscaled curve.
    pub s: T,
    /// Signed normal distance in the blown-up scale.
    pub z: T,
}

impl<'a, T: Real> FermiFrame<'a, T> {
    pub fn new(curve: &'a ProfileCurve<T>, epsilon: T, delta_tube: T) -> Result<Self> {
        if curve.len() < 4 {
            return Err(LabError::invalid("curve needs at least four nodes"));
        }
        if !(epsilon > T::zero()) || !(delta_tube > T::zero()) {
            return Err(LabError::invalid("epsilon and tube radius must be positive"));
        }
        let h = curve.s[1] - curve.s[0];
        let stride = ((T::lit(COARSE_SPACING) / h).floor().to_usize().unwrap_or(1)).max(1);
        let mut coarse: Vec<usize> = (0..curve.len()).step_by(stride).collect();
        if *coarse.last().unwrap() != curve.len() - 1 {
            coarse.push(curve.len() - 1);
        }
        let mut lo = [T::infinity(); 2];
        let mut hi = [T::neg_infinity(); 2];
        for &i in &coarse {
            lo[0] = lo[0].min(curve.x[i]);
            lo[1] = lo[1].min(curve.y[i]);
            hi[0] = hi[0].max(curve.x[i]);
            hi[1] = hi[1].max(curve.y[i]);
        }
        // A node within delta of a point is at most one bucket away from it.
        let bucket = delta_tube + h * T::from_count(stride);
        let dims = [
            ((hi[0] - lo[0]) / bucket).floor().to_usize().unwrap_or(0) + 1,
            ((hi[1] - lo[1]) / bucket).floor().to_usize().unwrap_or(0) + 1,
        ];
        let mut buckets = vec![Vec::new(); dims[0] * dims[1]];
        for (c, &i) in coarse.iter().enumerate() {
            let bx = ((curve.x[i] - lo[0]) / bucket)
                .floor()
                .to_usize()
                .unwrap_or(0)
                .min(dims[0] - 1);
            let by = ((curve.y[i] - lo[1]) / bucket)
                .floor()
                .to_usize()
                .unwrap_or(0)
                .min(dims[1] - 1);
            buckets[bx * dims[1] + by].push(c);
        }
        Ok(FermiFrame {
            curve,
            epsilon,
            delta_tube,
            coarse,
            bucket,
            origin: lo,
            dims,
            buckets,
        })
    }

    pub fn curve(&self) -> &ProfileCurve<T> {
        self.curve
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    /// Tube radius in the blown-up scale, `delta / eps`.
    pub fn tube_radius(&self) -> T {
        self.delta_tube / self.epsilon
    }

    fn jet(&self, s: T) -> Jet<T> {
        let c = self.curve;
        let i = c.locate(s);
        let h = c.s[i + 1] - c.s[i];
        let t = (s - c.s[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let (two, three, six) = (T::lit(2.0), T::lit(3.0), T::lit(6.0));
        let h00 = two * t3 - three * t2 + T::one();
        let h10 = t3 - two * t2 + t;
        let h01 = three * t2 - two * t3;
        let h11 = t3 - t2;
        let d00 = (six * t2 - six * t) / h;
        let d10 = three * t2 - T::lit(4.0) * t + T::one();
        let d01 = (six * t - six * t2) / h;
        let d11 = three * t2 - two * t;
        let e00 = (T::lit(12.0) * t - six) / (h * h);
        let e10 = (six * t - T::lit(4.0)) / h;
        let e01 = (six - T::lit(12.0) * t) / (h * h);
        let e11 = (six * t - two) / h;
        let p0 = [c.x[i], c.y[i]];
        let p1 = [c.x[i + 1], c.y[i + 1]];
        let m0 = [c.tx[i], c.ty[i]];
        let m1 = [c.tx[i + 1], c.ty[i + 1]];
        let mut jet = Jet {
            p: [T::zero(); 2],
            d1: [T::zero(); 2],
            d2: [T::zero(); 2],
        };
        for k in 0..2 {
            jet.p[k] = h00 * p0[k] + h10 * h * m0[k] + h01 * p1[k] + h11 * h * m1[k];
            jet.d1[k] = d00 * p0[k] + d10 * m0[k] + d01 * p1[k] + d11 * m1[k];
            jet.d2[k] = e00 * p0[k] + e10 * m0[k] + e01 * p1[k] + e11 * m1[k];
        }
        jet
    }

    /// Foot point and unit normal of the interpolated curve at arclength `s`, in curve
    /// units.
    pub fn frame_at(&self, s: T) -> ([T; 2], [T; 2]) {
        let j = self.jet(s);
        let len = (j.d1[0] * j.d1[0] + j.d1[1] * j.d1[1]).sqrt();
        (j.p, [-j.d1[1] / len, j.d1[0] / len])
    }

    /// Blown-up point `p + z nu` for the foot point at arclength `s`.
    pub fn reconstruct(&self, s: T, z: T) -> [T; 2] {
        let (p, nu) = self.frame_at(s);
        [p[0] / self.epsilon + z * nu[0], p[1] / self.epsilon + z * nu[1]]
    }

    /// Newton polish of the foot point starting at `s`; returns `(s, distance^2)`.
    fn polish(&self, q: [T; 2], mut s: T) -> (T, T) {
        let (lo, hi) = (self.curve.s[0], self.curve.s[self.curve.len() - 1]);
        for _ in 0..40 {
            let j = self.jet(s);
            let d = [q[0] - j.p[0], q[1] - j.p[1]];
            let g = d[0] * j.d1[0] + d[1] * j.d1[1];
            let speed = j.d1[0] * j.d1[0] + j.d1[1] * j.d1[1];
            let mut dg = d[0] * j.d2[0] + d[1] * j.d2[1] - speed;
            if !(dg < T::zero()) {
                dg = -speed;
            }
            let next = (s - g / dg).max(lo).min(hi);
            let done = (next - s).abs() <= T::epsilon() * T::lit(4.0) * (T::one() + s.abs());
            s = next;
            if done {
                break;
            }
        }
        let j = self.jet(s);
        let d = [q[0] - j.p[0], q[1] - j.p[1]];
        (s, d[0] * d[0] + d[1] * d[1])
    }

    fn coarse_dist2(&self, q: [T; 2], c: usize) -> T {
        let i = self.coarse[c];
        let dx = q[0] - self.curve.x[i];
        let dy = q[1] - self.curve.y[i];
        dx * dx + dy * dy
    }

    /// Refines around coarse sample `c`: best fine node in the bracket, then Newton.
    fn refine(&self, q: [T; 2], c: usize) -> (T, T) {
        let lo = self.coarse[c.saturating_sub(1)];
        let hi = self.coarse[(c + 1).min(self.coarse.len() - 1)];
        let curve = self.curve;
        let mut best = lo;
        let mut best_d = T::infinity();
        for i in lo..=hi {
            let dx = q[0] - curve.x[i];
            let dy = q[1] - curve.y[i];
            let d = dx * dx + dy * dy;
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        self.polish(q, curve.s[best])
    }

    /// Fermi coordinates of the blown-up point `(r, t)`, or `None` outside the tube.
    ///
    /// Errors with [`LabError::AmbiguousProjection`] when two separate stretches of the
    /// curve are equally near, and with [`LabError::Domain`] when the foot point is the
    /// last sampled node (the curve is too short for the point).
    pub fn project(&self, point: (T, T)) -> Result<Option<FermiPoint<T>>> {
        let q = [point.0 * self.epsilon, point.1 * self.epsilon];
        let bx = ((q[0] - self.origin[0]) / self.bucket).floor();
        let by = ((q[1] - self.origin[1]) / self.bucket).floor();
        let (nx, ny) = (self.dims[0] as i64, self.dims[1] as i64);
        let bx = bx.to_i64().unwrap_or(i64::MIN / 2);
        let by = by.to_i64().unwrap_or(i64::MIN / 2);
        let delta2 = self.delta_tube * self.delta_tube;
        let reach = self.bucket - self.delta_tube;
        let reach2 = (self.delta_tube + reach) * (self.delta_tube + reach);
        let mut best: Option<(usize, T)> = None;
        let scan = |f: &mut dyn FnMut(usize, T)| {
            for ix in (bx - 1).max(0)..=(bx + 1).min(nx - 1) {
                for iy in (by - 1).max(0)..=(by + 1).min(ny - 1) {
                    for &c in &self.buckets[(ix * ny + iy) as usize] {
                        f(c, self.coarse_dist2(q, c));
                    }
                }
            }
        };
        scan(&mut |c, d| {
            if best.is_none_or(|(bc, bd)| d < bd || (d == bd && c < bc)) {
                best = Some((c, d));
            }
        });
        let Some((bc, bd)) = best else {
            return Ok(None);
        };
        if bd > reach2 {
            return Ok(None);
        }
        let (s, d2) = self.refine(q, bc);
        // A second local minimum far along the curve that comes close to the best one.
        let mut rival: Option<(usize, T)> = None;
        let slack = (bd.sqrt() + reach) * (bd.sqrt() + reach);
        let last = self.coarse.len() - 1;
        scan(&mut |c, d| {
            if c.abs_diff(bc) <= 2 || d > slack || rival.is_some_and(|(rc, rd)| d > rd || (d == rd && c > rc)) {
                return;
            }
            let left = c == 0 || self.coarse_dist2(q, c - 1) >= d;
            let right = c == last || self.coarse_dist2(q, c + 1) >= d;
            if left && right {
                rival = Some((c, d));
            }
        });
        if let Some((rc, _)) = rival {
            let (s2, d2b) = self.refine(q, rc);
            let separate = (s2 - s).abs() > T::lit(2.0 * COARSE_SPACING);
            let tol = T::lit(1e-9) * (T::one() + d2);
            if separate && (d2b - d2).abs() <= tol && d2 < delta2 {
                return Err(LabError::AmbiguousProjection {
                    s_a: s.as_f64(),
                    s_b: s2.as_f64(),
                });
            }
            if separate && d2b < d2 {
                return self.finish(q, s2, d2b);
            }
        }
        self.finish(q, s, d2)
    }

    fn finish(&self, q: [T; 2], s: T, d2: T) -> Result<Option<FermiPoint<T>>> {
        if d2 >= self.delta_tube * self.delta_tube {
            return Ok(None);
        }
        if s >= self.curve.s[self.curve.len() - 1] {
            return Err(LabError::Domain(format!(
                "point ({}, {}) projects onto the end of the sampled curve",
                q[0] / self.epsilon,
                q[1] / self.epsilon
            )));
        }
        let (p, nu) = self.frame_at(s);
        let z = ((q[0] - p[0]) * nu[0] + (q[1] - p[1]) * nu[1]) / self.epsilon;
        Ok(Some(FermiPoint { s, z }))
    }
}

/// One-off Fermi projection of the blown-up point `(r, t)`; `None` outside the tube
/// `|z| < delta / eps`. Bulk callers should build a [`FermiFrame`] once.
pub fn fermi_project<T: Real>(
    curve: &ProfileCurve<T>,
    epsilon: T,
    point: (T, T),
    delta_tube: T,
) -> Result<Option<FermiPoint<T>>> {
    if !(point.0 > T::zero() && point.1 > T::zero()) {
        return Err(LabError::invalid("point must lie in the open quadrant"));
    }
    FermiFrame::new(curve, epsilon, delta_tube)?.project(point)
}
