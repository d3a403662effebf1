//! Zero set of a reduced field: crossings, connected components, normal graphs.

use super::ansatz::ReducedField2D;
use crate::error::Result;
use crate::scalar::Real;

/// One connected component of the zero set.
#[derive(Debug, Clone)]
pub struct NodalComponent<T> {
    pub id: usize,
    /// Zero crossings on grid edges, blown-up coordinates.
    pub points: Vec<(T, T)>,
    /// Foot-point arclength of each projected crossing, sorted increasingly.
    pub s: Vec<T>,
    /// Normal offset in curve units (`eps * z`) matching `s`.
    pub z: Vec<T>,
    /// Every crossing projected into the tube.
    pub inside_tube: bool,
    /// Reaches the outer edge of the grid.
    pub truncated: bool,
    /// At most one offset per arclength bin.
    pub single_valued: bool,
}

/// Zero set summary.
#[derive(Debug, Clone)]
pub struct NodalSet<T> {
    /// Components lying entirely inside the tube.
    pub count: usize,
    pub components: Vec<NodalComponent<T>>,
    pub warnings: Vec<String>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller root wins so labels do not depend on visiting order.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Two grid nodes joined by a crossed edge and the cell owning the crossing.
type Crossing = ((usize, usize), (usize, usize), usize);

/// Extracts the zero set by sign changes along grid edges. Cells whose shared edge is
/// crossed belong to the same component. Crossings are located by linear interpolation
/// and, for fields built from an ansatz, projected to Fermi coordinates.
pub fn nodal_components<T: Real>(field: &ReducedField2D<T>) -> Result<NodalSet<T>> {
    let (nr, nt) = field.shape();
    let (cr, ct) = (nr - 1, nt - 1);
    let positive: Vec<bool> = field.u.iter().map(|v| *v > T::zero()).collect();
    let pos = |i: usize, j: usize| positive[i * nt + j];
    let cell = |i: usize, j: usize| i * ct + j;
    let mut uf = UnionFind::new(cr * ct);
    let mut active = vec![false; cr * ct];

    // Edge (i,j)-(i+1,j) is shared by cells (i,j-1) and (i,j).
    let mut crossings: Vec<Crossing> = Vec::new();
    for i in 0..nr {
        for j in 0..nt {
            if i + 1 < nr && pos(i, j) != pos(i + 1, j) {
                let mut owner = None;
                for jc in [j.wrapping_sub(1), j] {
                    if jc < ct {
                        let c = cell(i, jc);
                        active[c] = true;
                        if let Some(o) = owner {
                            uf.union(o, c);
                        }
                        owner = Some(c);
                    }
                }
                crossings.push(((i, j), (i + 1, j), owner.unwrap()));
            }
            if j + 1 < nt && pos(i, j) != pos(i, j + 1) {
                let mut owner = None;
                for ic in [i.wrapping_sub(1), i] {
                    if ic < cr {
                        let c = cell(ic, j);
                        active[c] = true;
                        if let Some(o) = owner {
                            uf.union(o, c);
                        }
                        owner = Some(c);
                    }
                }
                crossings.push(((i, j), (i, j + 1), owner.unwrap()));
            }
        }
    }

    let mut label = vec![usize::MAX; cr * ct];
    let mut roots = Vec::new();
    for (c, &on) in active.iter().enumerate() {
        if on {
            let r = uf.find(c);
            if label[r] == usize::MAX {
                label[r] = roots.len();
                roots.push(r);
            }
        }
    }
    let mut components: Vec<NodalComponent<T>> = (0..roots.len())
        .map(|id| NodalComponent {
            id,
            points: Vec::new(),
            s: Vec::new(),
            z: Vec::new(),
            inside_tube: true,
            truncated: false,
            single_valued: true,
        })
        .collect();

    for &((i0, j0), (i1, j1), owner) in &crossings {
        let id = label[uf.find(owner)];
        let (a, b) = (field.at(i0, j0), field.at(i1, j1));
        let w = a / (a - b);
        let r = field.r_grid[i0] + w * (field.r_grid[i1] - field.r_grid[i0]);
        let t = field.t_grid[j0] + w * (field.t_grid[j1] - field.t_grid[j0]);
        let comp = &mut components[id];
        comp.points.push((r, t));
        if i1 == nr - 1 || j1 == nt - 1 {
            comp.truncated = true;
        }
    }

    let mut warnings = Vec::new();
    match &field.layers {
        Some(layers) => {
            let frame = layers.frame()?;
            let eps = layers.epsilon;
            for comp in &mut components {
                let mut pairs = Vec::with_capacity(comp.points.len());
                for &(r, t) in &comp.points {
                    match frame.project((r, t))? {
                        Some(fp) => pairs.push((fp.s, fp.z * eps)),
                        None => comp.inside_tube = false,
                    }
                }
                pairs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
                comp.single_valued = single_valued(&pairs, field.spacing * eps);
                (comp.s, comp.z) = pairs.into_iter().unzip();
            }
        }
        None => {
            for comp in &mut components {
                comp.inside_tube = false;
            }
            if !components.is_empty() {
                warnings.push("field carries no Fermi frame; components were not projected".to_string());
            }
        }
    }
    for comp in &components {
        if comp.truncated {
            warnings.push(format!("component {} is truncated by the grid boundary", comp.id));
        }
        if !comp.inside_tube && field.layers.is_some() {
            warnings.push(format!("component {} leaves the tube", comp.id));
        }
    }
    let count = components.iter().filter(|c| c.inside_tube).count();
    Ok(NodalSet {
        count,
        components,
        warnings,
    })
}

/// Bins the sorted `(s, offset)` pairs by arclength and requires the offsets in each bin
/// to stay within one bin width plus the grid spacing. A folded component has two
/// branches a layer gap apart in some bin.
fn single_valued<T: Real>(pairs: &[(T, T)], spacing: T) -> bool {
    let width = spacing * T::lit(2.0);
    let limit = width + spacing * T::lit(2.0);
    let mut start = 0;
    while start < pairs.len() {
        let bin = (pairs[start].0 / width).floor();
        let mut lo = pairs[start].1;
        let mut hi = lo;
        let mut k = start;
        while k < pairs.len() && (pairs[k].0 / width).floor() == bin {
            lo = lo.min(pairs[k].1);
            hi = hi.max(pairs[k].1);
            k += 1;
        }
        if hi - lo > limit {
            return false;
        }
        start = k;
    }
    true
}
