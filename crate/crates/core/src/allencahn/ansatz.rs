//! Multi-layer ansatz on the `(|x|, |y|)` quadrant and its Allen-Cahn residual.

use rayon::prelude::*;

use super::fermi::FermiFrame;
use crate::error::{LabError, Result};
use crate::geometry::{ConeParams, ProfileCurve};
use crate::heteroclinic::profile_unchecked;
use crate::scalar::Real;
use crate::toda::LiouvilleSolution;

/// Largest grid spacing that still resolves a transition layer.
pub const MAX_SPACING: f64 = 0.25;

/// Bound on `|u|` for a valid field.
pub const FIELD_BOUND: f64 = 1.1;

/// Heights of `k` ordered layers over the curve, sampled at the curve nodes.
#[derive(Debug, Clone)]
pub struct LayerAnsatz<T> {
    pub curve: ProfileCurve<T>,
    pub epsilon: T,
    pub k: usize,
    /// `heights[j][i]` is `h_{j+1}` at curve node `i`, in the blown-up normal scale.
    pub heights: Vec<Vec<T>>,
    /// Tube radius in curve units.
    pub delta_tube: T,
}

impl<T: Real> LayerAnsatz<T> {
    pub fn new(curve: ProfileCurve<T>, epsilon: T, heights: Vec<Vec<T>>, delta_tube: T) -> Result<Self> {
        let k = heights.len();
        if k == 0 {
            return Err(LabError::invalid("need at least one layer"));
        }
        if !(epsilon > T::zero() && epsilon <= T::lit(0.5)) {
            return Err(LabError::invalid("epsilon must lie in (0, 0.5]"));
        }
        if !(delta_tube > T::zero()) {
            return Err(LabError::invalid("tube radius must be positive"));
        }
        for h in &heights {
            if h.len() != curve.len() {
                return Err(LabError::Shape {
                    expected: curve.len(),
                    found: h.len(),
                });
            }
            if h.iter().any(|v| !v.is_finite()) {
                return Err(LabError::invalid("heights must be finite"));
            }
        }
        for j in 1..k {
            if let Some(i) = (0..curve.len()).find(|&i| !(heights[j][i] - heights[j - 1][i] > T::one())) {
                return Err(LabError::invalid(format!(
                    "layers {} and {} are closer than 1 at s = {}",
                    j,
                    j + 1,
                    curve.s[i]
                )));
            }
        }
        Ok(LayerAnsatz {
            curve,
            epsilon,
            k,
            heights,
            delta_tube,
        })
    }

    /// Single layer along the curve itself.
    pub fn single(curve: ProfileCurve<T>, epsilon: T, delta_tube: T) -> Result<Self> {
        let zero = vec![T::zero(); curve.len()];
        Self::new(curve, epsilon, vec![zero], delta_tube)
    }

    /// Symmetric ladder `h_j = (j - (k+1)/2) v` built on a Liouville solution.
    ///
    /// For `k = 2` these are the Toda heights `h2 = -h1 = v/2`. For other `k` the ladder
    /// is a heuristic. Outside the solution window `v` is continued by its end values.
    pub fn from_liouville(
        curve: ProfileCurve<T>,
        solution: &LiouvilleSolution<T>,
        k: usize,
        delta_tube: T,
    ) -> Result<Self> {
        if solution.last >= curve.len() || solution.last - solution.first + 1 != solution.v.len() {
            return Err(LabError::invalid("Liouville solution does not live on this curve"));
        }
        let v: Vec<T> = (0..curve.len())
            .map(|i| solution.v[i.clamp(solution.first, solution.last) - solution.first])
            .collect();
        Self::new(curve, solution.epsilon, ladder(&v, k), delta_tube)
    }

    /// Ladder with a constant gap, ignoring the Toda system.
    pub fn flat(curve: ProfileCurve<T>, epsilon: T, k: usize, gap: T, delta_tube: T) -> Result<Self> {
        let v = vec![gap; curve.len()];
        Self::new(curve, epsilon, ladder(&v, k), delta_tube)
    }

    /// Heights at arclength `s` (linear interpolation between nodes).
    pub fn heights_at(&self, s: T, out: &mut [T]) {
        for (o, h) in out.iter_mut().zip(&self.heights) {
            *o = self.curve.interpolate(h, s);
        }
    }

    /// Constant removed from the alternating sum: 1 for even `k`, 0 for odd `k`.
    pub fn offset(&self) -> T {
        if self.k.is_multiple_of(2) {
            T::one()
        } else {
            T::zero()
        }
    }

    /// Far-field value on the side of the curve with normal offset of sign `z`.
    pub fn far_value(&self, z: T) -> T {
        if self.k.is_multiple_of(2) || z < T::zero() {
            -T::one()
        } else {
            T::one()
        }
    }

    /// Uncut layered profile `sum_j (-1)^{j-1} w(z - h_j) - c_k`.
    pub fn profile(&self, z: T, heights: &[T]) -> T {
        let mut u = -self.offset();
        for (j, h) in heights.iter().enumerate() {
            let w = profile_unchecked(z - *h).0;
            if j % 2 == 0 {
                u += w;
            } else {
                u -= w;
            }
        }
        u
    }
}

fn ladder<T: Real>(v: &[T], k: usize) -> Vec<Vec<T>> {
    let centre = T::lit((k as f64 + 1.0) / 2.0);
    (1..=k)
        .map(|j| {
            let c = T::from_count(j) - centre;
            v.iter().map(|x| c * *x).collect()
        })
        .collect()
}

/// Smooth cutoff: 1 for `|z| <= R/2`, 0 for `|z| >= R`, `C^infinity` in between.
pub fn tube_cutoff<T: Real>(z: T, radius: T) -> T {
    let half = radius / T::lit(2.0);
    let a = z.abs();
    if a <= half {
        return T::one();
    }
    if a >= radius {
        return T::zero();
    }
    let x = (a - half) / half;
    let bump = |t: T| {
        if t > T::zero() {
            (-T::one() / t).exp()
        } else {
            T::zero()
        }
    };
    let up = bump(x);
    let down = bump(T::one() - x);
    down / (up + down)
}

/// Fermi data carried by fields built from an ansatz.
#[derive(Debug, Clone)]
pub struct LayerGeometry<T> {
    pub curve: ProfileCurve<T>,
    pub epsilon: T,
    pub delta_tube: T,
    pub k: usize,
    /// Foot-point arclength per grid node (NaN outside the tube).
    pub fermi_s: Vec<T>,
    /// Blown-up normal offset per grid node (NaN outside the tube).
    pub fermi_z: Vec<T>,
    /// Lowest layer height `h_1` at the foot point (NaN outside the tube).
    pub lowest_height: Vec<T>,
}

impl<T: Real> LayerGeometry<T> {
    pub fn frame(&self) -> Result<FermiFrame<'_, T>> {
        FermiFrame::new(&self.curve, self.epsilon, self.delta_tube)
    }

    /// Tube radius in the blown-up scale.
    pub fn tube_radius(&self) -> T {
        self.delta_tube / self.epsilon
    }
}

/// Equivariant scalar field on a uniform `(r, t) = (|x|, |y|)` grid. Node `(i, j)` is
/// stored at `i * t_grid.len() + j`.
#[derive(Debug, Clone)]
pub struct ReducedField2D<T> {
    pub cone: ConeParams,
    pub r_grid: Vec<T>,
    pub t_grid: Vec<T>,
    pub spacing: T,
    pub u: Vec<T>,
    pub layers: Option<LayerGeometry<T>>,
}

/// `count` nodes `0, h, 2h, ...`.
pub fn uniform_grid<T: Real>(count: usize, spacing: T) -> Vec<T> {
    (0..count).map(|i| T::from_count(i) * spacing).collect()
}

fn check_grid<T: Real>(r_grid: &[T], t_grid: &[T]) -> Result<T> {
    if r_grid.len() < 3 || t_grid.len() < 3 {
        return Err(LabError::invalid("grids need at least three nodes"));
    }
    let h = r_grid[1] - r_grid[0];
    if !(h > T::zero()) {
        return Err(LabError::invalid("grid spacing must be positive"));
    }
    let tol = h * T::lit(1e-9);
    for g in [r_grid, t_grid] {
        if g[0].abs() > tol {
            return Err(LabError::invalid("grids must start on the axis"));
        }
        if g.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > tol) {
            return Err(LabError::invalid("grids must be uniform with a common spacing"));
        }
    }
    if h > T::lit(MAX_SPACING) {
        return Err(LabError::Resolution { spacing: h.as_f64() });
    }
    Ok(h)
}

impl<T: Real> ReducedField2D<T> {
    /// Field from explicit values; checks the grids and `|u| <= 1.1`.
    pub fn from_values(cone: ConeParams, r_grid: Vec<T>, t_grid: Vec<T>, u: Vec<T>) -> Result<Self> {
        let spacing = check_grid(&r_grid, &t_grid)?;
        let n = r_grid.len() * t_grid.len();
        if u.len() != n {
            return Err(LabError::Shape {
                expected: n,
                found: u.len(),
            });
        }
        if u.iter().any(|v| !(v.abs() <= T::lit(FIELD_BOUND))) {
            return Err(LabError::invalid("field values must satisfy |u| <= 1.1"));
        }
        Ok(ReducedField2D {
            cone,
            r_grid,
            t_grid,
            spacing,
            u,
            layers: None,
        })
    }

    pub fn constant(cone: ConeParams, r_grid: Vec<T>, t_grid: Vec<T>, value: T) -> Result<Self> {
        let n = r_grid.len() * t_grid.len();
        Self::from_values(cone, r_grid, t_grid, vec![value; n])
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.r_grid.len(), self.t_grid.len())
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.t_grid.len() + j
    }

    pub fn at(&self, i: usize, j: usize) -> T {
        self.u[self.index(i, j)]
    }
}

/// Field value, foot-point arclength, normal offset and lowest layer height at a node.
type NodeSample<T> = (T, T, T, T);

/// Evaluates the ansatz on the grid: inside the tube the layered profile blended to the
/// far-field value over `|z| in [R/2, R]`, `R = delta/eps`; outside it the far field.
pub fn build_ansatz<T: Real>(ansatz: &LayerAnsatz<T>, r_grid: &[T], t_grid: &[T]) -> Result<ReducedField2D<T>> {
    let h = check_grid(r_grid, t_grid)?;
    let frame = FermiFrame::new(&ansatz.curve, ansatz.epsilon, ansatz.delta_tube)?;
    let radius = frame.tube_radius();
    let (nr, nt) = (r_grid.len(), t_grid.len());
    let n = nr * nt;
    let nan = T::nan();

    let rows: Vec<Result<Vec<NodeSample<T>>>> = (0..nr)
        .into_par_iter()
        .map(|i| {
            let mut heights = vec![T::zero(); ansatz.k];
            let mut row = Vec::with_capacity(nt);
            for &t in t_grid {
                let cell = match frame.project((r_grid[i], t))? {
                    Some(fp) if fp.z.abs() < radius => {
                        ansatz.heights_at(fp.s, &mut heights);
                        let chi = tube_cutoff(fp.z, radius);
                        let far = ansatz.far_value(fp.z);
                        let u = chi * ansatz.profile(fp.z, &heights) + (T::one() - chi) * far;
                        (u, fp.s, fp.z, heights[0])
                    }
                    _ => (nan, nan, nan, nan),
                };
                row.push(cell);
            }
            Ok(row)
        })
        .collect();

    let mut u = Vec::with_capacity(n);
    let mut fermi_s = Vec::with_capacity(n);
    let mut fermi_z = Vec::with_capacity(n);
    let mut lowest = Vec::with_capacity(n);
    for row in rows {
        for (a, b, c, d) in row? {
            u.push(a);
            fermi_s.push(b);
            fermi_z.push(c);
            lowest.push(d);
        }
    }
    fill_far_field(ansatz, nr, nt, &fermi_z, &mut u);

    Ok(ReducedField2D {
        cone: ansatz.curve.cone,
        r_grid: r_grid.to_vec(),
        t_grid: t_grid.to_vec(),
        spacing: h,
        u,
        layers: Some(LayerGeometry {
            curve: ansatz.curve.clone(),
            epsilon: ansatz.epsilon,
            delta_tube: ansatz.delta_tube,
            k: ansatz.k,
            fermi_s,
            fermi_z,
            lowest_height: lowest,
        }),
    })
}

/// Assigns the far-field value outside the tube. With an even number of layers it is -1
/// everywhere; otherwise the side is inherited from the nearest tube node by a
/// breadth-first sweep in index order.
fn fill_far_field<T: Real>(ansatz: &LayerAnsatz<T>, nr: usize, nt: usize, z: &[T], u: &mut [T]) {
    if ansatz.k.is_multiple_of(2) {
        for v in u.iter_mut().filter(|v| v.is_nan()) {
            *v = -T::one();
        }
        return;
    }
    let mut queue = std::collections::VecDeque::new();
    let mut side: Vec<Option<T>> = z
        .iter()
        .enumerate()
        .map(|(idx, zz)| {
            if zz.is_nan() {
                None
            } else {
                queue.push_back(idx);
                Some(ansatz.far_value(*zz))
            }
        })
        .collect();
    while let Some(idx) = queue.pop_front() {
        let (i, j) = (idx / nt, idx % nt);
        let value = side[idx];
        let mut visit = |k: usize| {
            if side[k].is_none() {
                side[k] = value;
                queue.push_back(k);
            }
        };
        if i > 0 {
            visit(idx - nt);
        }
        if i + 1 < nr {
            visit(idx + nt);
        }
        if j > 0 {
            visit(idx - 1);
        }
        if j + 1 < nt {
            visit(idx + 1);
        }
    }
    for (v, s) in u.iter_mut().zip(side) {
        if v.is_nan() {
            // A grid that misses the tube entirely sits on the inner side.
            *v = s.unwrap_or(-T::one());
        }
    }
}

/// `Delta u + u - u^3` with the reduced Laplacian
/// `u_rr + (m-1)/r u_r + u_tt + (n-1)/t u_t`, second-order central differences and the
/// even reflection on the axes. Returns the residual per node (zero on the outer edges,
/// where no stencil fits) and its sup over the remaining nodes.
pub fn residual_field<T: Real>(field: &ReducedField2D<T>) -> (Vec<T>, T) {
    let (nr, nt) = field.shape();
    let h = field.spacing;
    let h2 = h * h;
    let mm1 = T::from_count(field.cone.m - 1);
    let nm1 = T::from_count(field.cone.n - 1);
    let m = T::from_count(field.cone.m);
    let n = T::from_count(field.cone.n);
    let two = T::lit(2.0);
    let u = &field.u;
    let rows: Vec<Vec<T>> = (0..nr)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![T::zero(); nt];
            if i + 1 == nr {
                return row;
            }
            for j in 0..nt - 1 {
                let c = u[i * nt + j];
                let up_r = u[(i + 1) * nt + j];
                let lap_r = if i == 0 {
                    m * two * (up_r - c) / h2
                } else {
                    let dn = u[(i - 1) * nt + j];
                    (up_r - two * c + dn) / h2 + mm1 / field.r_grid[i] * (up_r - dn) / (two * h)
                };
                let up_t = u[i * nt + j + 1];
                let lap_t = if j == 0 {
                    n * two * (up_t - c) / h2
                } else {
                    let dn = u[i * nt + j - 1];
                    (up_t - two * c + dn) / h2 + nm1 / field.t_grid[j] * (up_t - dn) / (two * h)
                };
                row[j] = lap_r + lap_t + c - c * c * c;
            }
            row
        })
        .collect();
    let res: Vec<T> = rows.into_iter().flatten().collect();
    let sup = res.iter().fold(T::zero(), |a, b| a.max(b.abs()));
    (res, sup)
}
