//! Second variation of area for `O(m) x O(n)`-invariant normal variations.
//!
//! For `phi` a function of arclength along the generating curve, the second variation
//! reduces to `Q(phi) = \int (phi'^2 - |A|^2 phi^2) omega ds` with `omega = x^{m-1}
//! y^{n-1}`, and the Jacobi operator to `J phi = phi'' + (omega'/omega) phi' + |A|^2
//! phi`.
//!
//! Discrete forms use continuous piecewise-linear elements: stiffness entries carry the
//! interval average of `omega`, potential and mass terms are lumped with trapezoid
//! weights. [`quadratic_form`] evaluates exactly the same discrete form, so for an
//! eigenvector `Q = lambda * <phi, B phi>`.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::{minimal_kappa, second_fundamental_form, CurveState, ProfileCurve, StartAxis};
use crate::linalg::{count_below, five_point_derivative, smallest_generalized_eigenpair};
use crate::ode::{integrate_on_grid, OdeOptions};
use crate::scalar::Real;

/// Reduced Jacobi problem on a node-aligned arclength window of a curve.
#[derive(Debug, Clone, Copy)]
pub struct SturmLiouvilleProblem<'a, T> {
    pub curve: &'a ProfileCurve<T>,
    /// First and last node index of the window (inclusive).
    pub first: usize,
    pub last: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightChoice {
    /// Mass `|A|^2 omega`: a positive eigenvalue certifies strict stability.
    #[serde(rename = "A2_weight")]
    A2Weight,
    /// Mass `omega`.
    AreaWeight,
}

impl WeightChoice {
    pub fn as_str(&self) -> &'static str {
        match self {
            WeightChoice::A2Weight => "A2_weight",
            WeightChoice::AreaWeight => "area_weight",
        }
    }
}

impl<'a, T: Real> SturmLiouvilleProblem<'a, T> {
    /// Window `[s0, s1]`; both ends must coincide with stored nodes.
    pub fn new(curve: &'a ProfileCurve<T>, s0: T, s1: T) -> Result<Self> {
        if curve.len() < 3 {
            return Err(LabError::invalid("curve has too few nodes"));
        }
        if !(s1 > s0) {
            return Err(LabError::invalid("window needs s0 < s1"));
        }
        let first = aligned_node(curve, s0)?;
        let last = aligned_node(curve, s1)?;
        Self::from_nodes(curve, first, last)
    }

    pub fn from_nodes(curve: &'a ProfileCurve<T>, first: usize, last: usize) -> Result<Self> {
        if last >= curve.len() || last < first + 2 {
            return Err(LabError::invalid("window must contain at least one interior node"));
        }
        for i in first..=last {
            if !(curve.a2[i] > T::zero()) {
                return Err(LabError::invalid(format!("potential is not positive at node {i}")));
            }
            if i > first && i < last && !(curve.weight[i] > T::zero()) {
                return Err(LabError::invalid(format!("area weight vanishes at interior node {i}")));
            }
        }
        Ok(SturmLiouvilleProblem { curve, first, last })
    }

    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn s(&self) -> &[T] {
        &self.curve.s[self.first..=self.last]
    }

    pub fn domain(&self) -> (T, T) {
        (self.curve.s[self.first], self.curve.s[self.last])
    }
}

fn aligned_node<T: Real>(curve: &ProfileCurve<T>, s: T) -> Result<usize> {
    let i = curve.nearest_node(s);
    let h = if i + 1 < curve.len() {
        curve.s[i + 1] - curve.s[i]
    } else {
        curve.s[i] - curve.s[i - 1]
    };
    if (curve.s[i] - s).abs() > h * T::lit(1e-6) {
        return Err(LabError::invalid(format!(
            "window end {} is not a curve node",
            s.as_f64()
        )));
    }
    Ok(i)
}

/// Tridiagonal pencil `(K - P, B)` over the interior nodes of a sampled window.
struct Pencil<T> {
    diag: Vec<T>,
    off: Vec<T>,
    mass: Vec<T>,
}

fn stiffness<T: Real>(s: &[T], omega: &[T]) -> Vec<T> {
    (0..s.len() - 1)
        .map(|j| (omega[j] + omega[j + 1]) / T::lit(2.0) / (s[j + 1] - s[j]))
        .collect()
}

fn node_lengths<T: Real>(s: &[T]) -> Vec<T> {
    let n = s.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { s[i] - s[i - 1] } else { T::zero() };
            let right = if i + 1 < n { s[i + 1] - s[i] } else { T::zero() };
            (left + right) / T::lit(2.0)
        })
        .collect()
}

fn assemble<T: Real>(s: &[T], omega: &[T], a2: &[T], choice: WeightChoice) -> Pencil<T> {
    let k = stiffness(s, omega);
    let hn = node_lengths(s);
    let n = s.len();
    let mut diag = Vec::with_capacity(n - 2);
    let mut off = Vec::with_capacity(n.saturating_sub(3));
    let mut mass = Vec::with_capacity(n - 2);
    for i in 1..n - 1 {
        diag.push(k[i - 1] + k[i] - a2[i] * omega[i] * hn[i]);
        if i + 1 < n - 1 {
            off.push(-k[i]);
        }
        let w = match choice {
            WeightChoice::A2Weight => a2[i],
            WeightChoice::AreaWeight => T::one(),
        };
        mass.push(w * omega[i] * hn[i]);
    }
    Pencil { diag, off, mass }
}

fn check_support<T: Real>(phi: &[T]) -> Result<()> {
    let n = phi.len();
    let scale = phi.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    let tol = scale * T::epsilon() * T::lit(16.0);
    if phi[0].abs() > tol || phi[n - 1].abs() > tol {
        return Err(LabError::SupportViolation {
            left: phi[0].as_f64(),
            right: phi[n - 1].as_f64(),
        });
    }
    Ok(())
}

/// Discrete `Q(phi)` for node samples `phi` on the window (ends must vanish).
pub fn quadratic_form<T: Real>(problem: &SturmLiouvilleProblem<T>, phi: &[T]) -> Result<T> {
    if phi.len() != problem.len() {
        return Err(LabError::Shape {
            expected: problem.len(),
            found: phi.len(),
        });
    }
    check_support(phi)?;
    let c = problem.curve;
    let r = problem.first..=problem.last;
    Ok(discrete_form(&c.s[r.clone()], &c.weight[r.clone()], &c.a2[r], phi))
}

fn discrete_form<T: Real>(s: &[T], omega: &[T], a2: &[T], phi: &[T]) -> T {
    let k = stiffness(s, omega);
    let hn = node_lengths(s);
    let mut grad = T::zero();
    for j in 0..s.len() - 1 {
        let d = phi[j + 1] - phi[j];
        grad += k[j] * d * d;
    }
    let mut pot = T::zero();
    for i in 0..s.len() {
        pot += a2[i] * omega[i] * hn[i] * phi[i] * phi[i];
    }
    grad - pot
}

/// Smallest Dirichlet eigenpair on a window, as a stability certificate.
#[derive(Debug, Clone)]
pub struct SpectralCertificate<T> {
    pub lambda_min: T,
    pub weight_choice: WeightChoice,
    /// Samples on `grid`, zero at both ends.
    pub eigenvector: Vec<T>,
    pub grid: Vec<T>,
    pub domain: (T, T),
    pub discretization_size: usize,
    pub relative_residual: T,
    pub converged: bool,
}

/// Smallest eigenvalue of `-(omega phi')' - |A|^2 omega phi = lambda W omega phi` with
/// Dirichlet ends, on a uniform grid of `nodes` points; `omega` and `|A|^2` are
/// interpolated linearly from the curve nodes.
pub fn smallest_eigenvalue<T: Real>(
    problem: &SturmLiouvilleProblem<T>,
    weight_choice: WeightChoice,
    nodes: usize,
) -> Result<SpectralCertificate<T>> {
    if nodes < 200 {
        return Err(LabError::invalid("eigenvalue solve needs at least 200 nodes"));
    }
    let (s0, s1) = problem.domain();
    let c = problem.curve;
    let step = (s1 - s0) / T::from_count(nodes - 1);
    let grid: Vec<T> = (0..nodes)
        .map(|j| {
            if j + 1 == nodes {
                s1
            } else {
                s0 + T::from_count(j) * step
            }
        })
        .collect();
    let omega: Vec<T> = grid.iter().map(|s| c.interpolate(&c.weight, *s)).collect();
    let a2: Vec<T> = grid.iter().map(|s| c.interpolate(&c.a2, *s)).collect();
    let pencil = assemble(&grid, &omega, &a2, weight_choice);
    let pair = smallest_generalized_eigenpair(&pencil.diag, &pencil.off, &pencil.mass)?;
    let mut eigenvector = Vec::with_capacity(nodes);
    eigenvector.push(T::zero());
    eigenvector.extend_from_slice(&pair.vector);
    eigenvector.push(T::zero());
    Ok(SpectralCertificate {
        lambda_min: pair.value,
        weight_choice,
        eigenvector,
        grid,
        domain: (s0, s1),
        discretization_size: nodes,
        relative_residual: pair.relative_residual,
        converged: pair.relative_residual < T::lit(1e-8),
    })
}

/// A compactly supported direction of negative second variation.
#[derive(Debug, Clone)]
pub struct NegativeDirection<T> {
    /// Node indices of the window ends; the function is nonzero only strictly inside.
    pub first: usize,
    pub last: usize,
    pub window: (T, T),
    /// Samples on the window nodes.
    pub phi: Vec<T>,
    pub energy: T,
}

impl<T: Real> NegativeDirection<T> {
    /// Node indices where the function is nonzero.
    pub fn support(&self) -> std::ops::Range<usize> {
        self.first + 1..self.last
    }
}

/// Builds `k` directions with disjoint supports and negative second variation.
///
/// Windows are grown greedily from the left end of the domain: each window is the
/// shortest node interval whose area-weighted Dirichlet pencil has a negative
/// eigenvalue, lengthened by one eighth for margin. Its first eigenfunction is the
/// direction, and the next window starts at its right end.
pub fn morse_index_lower_bound<T: Real>(
    problem: &SturmLiouvilleProblem<T>,
    k: usize,
) -> Result<Vec<NegativeDirection<T>>> {
    if k == 0 {
        return Err(LabError::invalid("k must be at least 1"));
    }
    let c = problem.curve;
    let negative = |a: usize, b: usize| -> bool {
        let r = a..=b;
        let p = assemble(
            &c.s[r.clone()],
            &c.weight[r.clone()],
            &c.a2[r],
            WeightChoice::AreaWeight,
        );
        count_below(&p.diag, &p.off, &p.mass, T::zero()) >= 1
    };
    let mut found = Vec::new();
    let mut a = problem.first;
    while found.len() < k {
        if a + 2 > problem.last || !negative(a, problem.last) {
            break;
        }
        // Exponential search, then bisection, for the shortest negative window.
        let mut len = 2;
        while a + len < problem.last && !negative(a, a + len) {
            len *= 2;
        }
        let mut hi = (a + len).min(problem.last);
        let mut lo = a + len / 2;
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if negative(a, mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let b = (hi + (hi - a) / 8).min(problem.last);
        let r = a..=b;
        let p = assemble(
            &c.s[r.clone()],
            &c.weight[r.clone()],
            &c.a2[r.clone()],
            WeightChoice::AreaWeight,
        );
        let pair = smallest_generalized_eigenpair(&p.diag, &p.off, &p.mass)?;
        let mut phi = Vec::with_capacity(b - a + 1);
        phi.push(T::zero());
        phi.extend_from_slice(&pair.vector);
        phi.push(T::zero());
        let energy = discrete_form(&c.s[r.clone()], &c.weight[r.clone()], &c.a2[r], &phi);
        if !(energy < T::zero()) {
            break;
        }
        found.push(NegativeDirection {
            first: a,
            last: b,
            window: (c.s[a], c.s[b]),
            phi,
            energy,
        });
        a = b;
    }
    if found.len() < k {
        return Err(LabError::InsufficientOscillation {
            requested: k,
            found: found.len(),
        });
    }
    Ok(found)
}

/// Dilation Jacobi field `phi = <p, nu> = -x ty + y tx` with its Jacobi residual.
#[derive(Debug, Clone)]
pub struct DilationField<T> {
    pub phi: Vec<T>,
    /// `J phi` at each node; `None` on axis nodes.
    pub residual: Vec<Option<T>>,
    pub residual_sup: T,
    pub min_abs: T,
    /// Arclengths where `phi` changes sign.
    pub zeros: Vec<T>,
}

pub fn dilation_jacobi_field<T: Real>(curve: &ProfileCurve<T>) -> DilationField<T> {
    let n = curve.len();
    let phi: Vec<T> = (0..n)
        .map(|i| curve.y[i] * curve.tx[i] - curve.x[i] * curve.ty[i])
        .collect();
    let dkappa = if n >= 5 {
        five_point_derivative(&curve.s, &curve.kappa)
    } else {
        vec![T::nan(); n]
    };
    let mut residual = Vec::with_capacity(n);
    let mut residual_sup = T::zero();
    for i in 0..n {
        let Some(lw) = curve.log_weight_derivative(i) else {
            residual.push(None);
            continue;
        };
        let k = curve.kappa[i];
        let p = curve.x[i] * curve.tx[i] + curve.y[i] * curve.ty[i];
        let d1 = -k * p;
        let d2 = -dkappa[i] * p - k * (T::one() + k * phi[i]);
        let r = d2 + lw * d1 + curve.a2[i] * phi[i];
        residual_sup = residual_sup.max(r.abs());
        residual.push(Some(r));
    }
    let min_abs = phi.iter().fold(T::infinity(), |a, v| a.min(v.abs()));
    DilationField {
        zeros: sign_changes(&curve.s, &phi),
        phi,
        residual,
        residual_sup,
        min_abs,
    }
}

fn sign_changes<T: Real>(s: &[T], f: &[T]) -> Vec<T> {
    let mut out = Vec::new();
    let mut last: Option<usize> = None;
    for i in 0..f.len() {
        if f[i] == T::zero() {
            continue;
        }
        if let Some(j) = last {
            if (f[i] > T::zero()) != (f[j] > T::zero()) {
                let t = f[j] / (f[j] - f[i]);
                out.push(s[j] + t * (s[i] - s[j]));
            }
        }
        last = Some(i);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    Bounded,
    Growing,
    Oscillating,
}

#[derive(Debug, Clone)]
pub struct JacobiSolution<T> {
    pub phi: Vec<T>,
    pub dphi: Vec<T>,
    pub growth: Growth,
    /// `|phi(s1)| / |phi(s1/2)|`.
    pub far_ratio: T,
    /// `s0 |phi'(s0)| / |phi(s0)|`, infinite when `phi(s0) = 0`.
    pub axis_ratio: T,
}

/// Two independent solutions of the reduced Jacobi equation on a window.
#[derive(Debug, Clone)]
pub struct JacobiBasis<T> {
    pub s: Vec<T>,
    /// The solution regular at the axis, then the one vanishing at `s0`.
    pub solutions: [JacobiSolution<T>; 2],
    /// `omega (phi_1 phi_2' - phi_2 phi_1')` at the first node.
    pub wronskian: T,
    /// Largest relative departure of the Wronskian from its initial value.
    pub wronskian_drift: T,
    /// Sup relative deviation of the best scalar multiple of each solution from the
    /// dilation field.
    pub dilation_deviation: [T; 2],
    /// Exactly one solution is not growing, and it is the dilation field up to scale.
    pub nondegenerate: bool,
}

const BASIS_TOL: f64 = 1e-13;

/// Integrates the curve system together with the Jacobi equation written as a
/// first-order system in `(phi, phi')`.
fn jacobi_rhs<T: Real>(curve: &ProfileCurve<T>) -> impl Fn(T, &[T; 6]) -> [T; 6] + '_ {
    let cone = curve.cone;
    move |_s, u| {
        let k = minimal_kappa(cone, u[0], u[1], u[2], u[3]);
        let st = CurveState {
            x: u[0],
            y: u[1],
            tx: u[2],
            ty: u[3],
            kappa: k,
        };
        let a2 = second_fundamental_form(cone, &st);
        let lw = T::from_count(cone.m - 1) * u[2] / u[0] + T::from_count(cone.n - 1) * u[3] / u[1];
        [u[2], u[3], -k * u[3], k * u[2], u[5], -lw * u[5] - a2 * u[4]]
    }
}

fn renormalize<T: Real>(u: &mut [T; 6]) {
    let norm = (u[2] * u[2] + u[3] * u[3]).sqrt();
    u[2] /= norm;
    u[3] /= norm;
}

/// Integrates two solutions of `J phi = 0`: the one regular at the axis point the curve
/// starts from, and the one with `phi(s0) = 0`, `omega phi'(s0) = 1`. Each is
/// classified as growing when `|phi(s1)| > 10 |phi(s1/2)|` or when it is singular at the
/// axis end (`s0 |phi'(s0)| > |phi(s0)| / 2`), otherwise as oscillating or bounded
/// according to whether it changes sign.
pub fn jacobi_solution_basis<T: Real>(problem: &SturmLiouvilleProblem<T>) -> Result<JacobiBasis<T>> {
    let c = problem.curve;
    let (s0, s1) = problem.domain();
    let axis = match c.start_axis {
        Some(a) if c.is_axis_node(0) && c.s[0] == T::zero() => a,
        _ => return Err(LabError::invalid("solution basis needs a curve shot from an axis")),
    };
    let cone = c.cone;
    let (r0, kappa0, dim) = match axis {
        StartAxis::XAxis => (c.x[0], c.kappa[0], cone.n),
        StartAxis::YAxis => (c.y[0], c.kappa[0], cone.m),
    };
    // Lengths are measured in units of the starting distance from the origin.
    if s0 < T::lit(0.01) * r0 * (T::one() - T::lit(1e-9)) || c.is_axis_node(problem.first) {
        return Err(LabError::invalid("the window must avoid the axis point (s0 >= 0.01)"));
    }
    let h = r0 * T::lit(1e-4);
    let a = kappa0 * h;
    let curve_start = match axis {
        StartAxis::XAxis => [
            r0 - kappa0 * h * h / T::lit(2.0),
            h - kappa0 * kappa0 * h * h * h / T::lit(6.0),
            -a.sin(),
            a.cos(),
        ],
        StartAxis::YAxis => [
            h - kappa0 * kappa0 * h * h * h / T::lit(6.0),
            r0 + kappa0 * h * h / T::lit(2.0),
            a.cos(),
            a.sin(),
        ],
    };
    // Near the axis phi'' + (d-1)/s phi' + c phi = 0 with c the axis value of |A|^2.
    let c_axis = c.a2[0];
    let d = T::from_count(dim);
    let regular = [
        curve_start[0],
        curve_start[1],
        curve_start[2],
        curve_start[3],
        T::one() - c_axis * h * h / (T::lit(2.0) * d),
        -c_axis * h / d,
    ];
    let grid: Vec<T> = problem.s().to_vec();
    let mut opts = OdeOptions::with_tolerance(T::lit(BASIS_TOL).max(T::epsilon() * T::lit(100.0)));
    opts.initial_step = h / T::lit(10.0);
    let rhs = jacobi_rhs(c);
    let check = |s: T, u: &[T; 6]| {
        if u[0] > T::zero() && u[1] > T::zero() {
            Ok(())
        } else {
            Err(LabError::DomainViolation { arclength: s.as_f64() })
        }
    };
    let reg = integrate_on_grid(&rhs, h, regular, &grid, &opts, renormalize, check)?;

    let i0 = problem.first;
    let forward = |phi0: T, dphi0: T| -> Result<Vec<[T; 6]>> {
        let seed = [c.x[i0], c.y[i0], c.tx[i0], c.ty[i0], phi0, dphi0];
        let mut out = vec![seed];
        let mut o = opts;
        o.initial_step = (grid[1] - grid[0]) / T::lit(100.0);
        out.extend(integrate_on_grid(&rhs, s0, seed, &grid[1..], &o, renormalize, check)?);
        Ok(out)
    };
    let omega = &c.weight[problem.first..=problem.last];
    let sing = forward(T::zero(), T::one() / omega[0])?;

    // Both solutions can share the same dominant behaviour far out, and then the
    // Wronskian cancels badly. It is monitored on the regular solution and the
    // combination `sing - c reg` that is smallest over the far half of the window;
    // the Wronskian is the same, and the cancellation is gone.
    let mid = {
        let target = (s1 / T::lit(2.0)).max(s0);
        let i = c.nearest_node(target);
        i.clamp(problem.first, problem.last) - problem.first
    };
    let (num, den) = (mid..grid.len()).fold((T::zero(), T::zero()), |(n, d), j| {
        (n + sing[j][4] * reg[j][4], d + reg[j][4] * reg[j][4])
    });
    let shift = if den > T::zero() { num / den } else { T::zero() };
    let tame = forward(-shift * reg[0][4], T::one() / omega[0] - shift * reg[0][5])?;
    let wr: Vec<T> = (0..grid.len())
        .map(|j| omega[j] * (reg[j][4] * tame[j][5] - tame[j][4] * reg[j][5]))
        .collect();
    let wronskian = wr[0];
    if !(wronskian.abs() >= T::lit(1e-12)) {
        return Err(LabError::DependentBasis {
            wronskian: wronskian.as_f64(),
        });
    }
    let wronskian_drift = wr
        .iter()
        .fold(T::zero(), |acc, w| acc.max(((*w - wronskian) / wronskian).abs()));

    let dil = dilation_jacobi_field(c);
    let dil = &dil.phi[problem.first..=problem.last];
    let classify = |states: &[[T; 6]]| -> (JacobiSolution<T>, T) {
        let phi: Vec<T> = states.iter().map(|u| u[4]).collect();
        let dphi: Vec<T> = states.iter().map(|u| u[5]).collect();
        let last = phi.len() - 1;
        let far_ratio = phi[last].abs() / phi[mid].abs();
        let axis_ratio = if phi[0] == T::zero() {
            T::infinity()
        } else {
            s0 * dphi[0].abs() / phi[0].abs()
        };
        let changes = !sign_changes(&grid, &phi).is_empty();
        let growth = if far_ratio > T::lit(10.0) || axis_ratio > T::lit(0.5) {
            Growth::Growing
        } else if changes {
            Growth::Oscillating
        } else {
            Growth::Bounded
        };
        let num: T = phi.iter().zip(dil).map(|(a, b)| *a * *b).sum();
        let den: T = phi.iter().map(|a| *a * *a).sum();
        let scale = num / den;
        let dil_sup = dil.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
        let deviation = phi
            .iter()
            .zip(dil)
            .fold(T::zero(), |acc, (a, b)| acc.max((scale * *a - *b).abs()))
            / dil_sup;
        (
            JacobiSolution {
                phi,
                dphi,
                growth,
                far_ratio,
                axis_ratio,
            },
            deviation,
        )
    };
    let (first, dev_a) = classify(&reg);
    let (second, dev_b) = classify(&sing);
    let solutions = [first, second];
    let devs = [dev_a, dev_b];
    let tame: Vec<usize> = (0..2).filter(|i| solutions[*i].growth != Growth::Growing).collect();
    let nondegenerate = tame.len() == 1 && devs[tame[0]] < T::lit(1e-4);
    Ok(JacobiBasis {
        s: grid,
        solutions,
        wronskian,
        wronskian_drift,
        dilation_deviation: devs,
        nondegenerate,
    })
}
