//! Structural invariants of every module, checked on random inputs.

use std::sync::OnceLock;

use lawson_core::allencahn::*;
use lawson_core::geometry::*;
use lawson_core::heteroclinic::*;
use lawson_core::jacobi::*;
use lawson_core::toda::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SQ2: f64 = std::f64::consts::SQRT_2;

fn cone(m: usize, n: usize) -> ConeParams {
    ConeParams::new(m, n).unwrap()
}

fn simons() -> &'static ProfileCurve<f64> {
    static C: OnceLock<ProfileCurve<f64>> = OnceLock::new();
    C.get_or_init(|| integrate_profile(cone(4, 4), StartAxis::XAxis, 200.0, 1e-10).unwrap())
}

fn liouville() -> &'static LiouvilleSolution<f64> {
    static S: OnceLock<LiouvilleSolution<f64>> = OnceLock::new();
    S.get_or_init(|| solve_liouville(simons(), 0.1, 1.0, (0.01, 200.0)).unwrap())
}

fn grid() -> Vec<f64> {
    uniform_grid(300, 0.1)
}

fn field(k: usize) -> &'static ReducedField2D<f64> {
    static F: OnceLock<Vec<ReducedField2D<f64>>> = OnceLock::new();
    &F.get_or_init(|| {
        (1..=3)
            .map(|k| {
                let a = LayerAnsatz::from_liouville(simons().clone(), liouville(), k, 1.0).unwrap();
                build_ansatz(&a, &grid(), &grid()).unwrap()
            })
            .collect()
    })[k - 1]
}

fn bump(s: f64, c: f64, w: f64) -> (f64, f64, f64) {
    // exp(1 - 1/(1 - x^2)) with x = (s - c)/w, and its first two derivatives in s.
    let x = (s - c) / w;
    if x.abs() >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let q = 1.0 - x * x;
    let f = (1.0 - 1.0 / q).exp();
    let g = -2.0 * x / (q * q);
    let dg = (-2.0 * q * q - 8.0 * x * x * q) / q.powi(4);
    (f, f * g / w, f * (g * g + dg) / (w * w))
}

// heteroclinic

proptest! {
    #[test]
    fn profile_is_odd(z in -30.0f64..30.0) {
        let (a, da) = evaluate_profile(z).unwrap();
        let (b, db) = evaluate_profile(-z).unwrap();
        prop_assert_eq!(a, -b);
        prop_assert_eq!(da, db);
        prop_assert!(da > 0.0 || z.abs() > 25.0);
    }

    #[test]
    fn profile_tail_law(z in 4.0f64..8.0) {
        let w = evaluate_profile(z).unwrap().0;
        let gap = (1.0 - w - 2.0 * (-SQ2 * z).exp()).abs();
        prop_assert!(gap <= 4.0 * (-2.0 * SQ2 * z).exp());
    }

    #[test]
    fn first_integral_on_samples(half_width in 5.0f64..15.0, half_nodes in 50usize..400) {
        let p = sample_profile(half_width, 2 * half_nodes + 1).unwrap();
        for (w, dw) in p.w.iter().zip(&p.w_prime) {
            prop_assert!((0.5 * dw * dw - potential(*w)).abs() < 1e-10);
        }
    }
}

#[test]
fn energy_constant_window_invariance() {
    let a = energy_constant_on(10.0f64, 1e-13).value;
    let b = energy_constant_on(20.0f64, 1e-13).value;
    assert!((a - b).abs() < 1e-10);
}

// geometry

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn curvature_residual_along_curves(m in 2usize..7, n in 2usize..7, y_axis in any::<bool>()) {
        let axis = if y_axis { StartAxis::YAxis } else { StartAxis::XAxis };
        let tol = 1e-10;
        let c = integrate_profile::<f64>(cone(m, n), axis, 60.0, tol).unwrap();
        for i in 1..c.len() {
            let h = mean_curvature(c.cone, &c.state(i)).unwrap();
            prop_assert!(h.abs() < 10.0 * tol, "H = {h} at s = {}", c.s[i]);
        }
        let fd = mean_curvature_residual(&c);
        // Curvature from differenced tangents, away from the axes where the 1/x and 1/y
        // factors amplify sampling noise.
        for (i, h) in fd.iter().enumerate().filter(|(i, _)| c.s[*i] >= 1.0) {
            let h = h.unwrap();
            prop_assert!(h.abs() < 1e-7, "finite-difference H = {h} at s = {}", c.s[i]);
        }
    }

    #[test]
    fn dilation_equivariance(lambda in 0.5f64..2.0) {
        let base = ShootingConfig::default();
        let a = integrate_profile_with(cone(4, 4), StartAxis::XAxis, 60.0, 1e-10, &base).unwrap();
        let b = integrate_profile_with(cone(4, 4), StartAxis::XAxis, 60.0 * lambda, 1e-10, &base.dilated(lambda)).unwrap();
        let n = a.len().min(b.len());
        for i in 0..n {
            prop_assert!((b.s[i] - lambda * a.s[i]).abs() < 1e-8);
            prop_assert!((b.x[i] - lambda * a.x[i]).abs() < 1e-8);
            prop_assert!((b.y[i] - lambda * a.y[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn exchange_symmetry(m in 2usize..7, n in 2usize..7) {
        let a = integrate_profile::<f64>(cone(m, n), StartAxis::XAxis, 50.0, 1e-10).unwrap();
        let b = integrate_profile::<f64>(cone(n, m), StartAxis::YAxis, 50.0, 1e-10).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for i in 0..a.len() {
            prop_assert!((a.x[i] - b.y[i]).abs() < 1e-10);
            prop_assert!((a.y[i] - b.x[i]).abs() < 1e-10);
        }
    }
}

#[test]
fn asymptotic_second_fundamental_form() {
    for (m, n, axis) in [
        (4, 4, StartAxis::XAxis),
        (3, 5, StartAxis::XAxis),
        (3, 5, StartAxis::YAxis),
    ] {
        let c = integrate_profile(cone(m, n), axis, 200.0, 1e-10).unwrap();
        let target = (m + n - 2) as f64;
        for i in 0..c.len() {
            if c.s[i] >= 100.0 {
                let v = c.s[i] * c.s[i] * c.a2[i];
                assert!((v - target).abs() <= 0.1, "({m},{n}) s = {} s^2 A2 = {v}", c.s[i]);
            }
        }
    }
}

// jacobi

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn integration_by_parts(c in 6.0f64..40.0, w in 1.0f64..5.0) {
        let curve = simons();
        let p = SturmLiouvilleProblem::new(curve, 0.01, 60.0).unwrap();
        let s = p.s().to_vec();
        let first = curve.nearest_node(0.01);
        let n = s.len();
        let phi: Vec<f64> = s.iter().map(|x| bump(*x, c, w).0).collect();
        let q = quadratic_form(&p, &phi).unwrap();
        let om = &curve.weight[first..first + n];
        let a2 = &curve.a2[first..first + n];

        // Discrete: J phi with averaged-omega fluxes and lumped mass, summed against phi.
        let flux = |j: usize| 0.5 * (om[j] + om[j + 1]) * (phi[j + 1] - phi[j]) / (s[j + 1] - s[j]);
        let mut discrete = 0.0;
        let mut scale = 0.0;
        for i in 1..n - 1 {
            let cell = 0.5 * (s[i + 1] - s[i - 1]);
            let jphi = (flux(i) - flux(i - 1)) / (om[i] * cell) + a2[i] * phi[i];
            discrete -= jphi * phi[i] * om[i] * cell;
            scale += a2[i] * om[i] * cell * phi[i] * phi[i] + flux(i) * (phi[i + 1] - phi[i]);
        }
        prop_assert!((q - discrete).abs() <= 1e-6 * scale, "Q {q} vs {discrete}");

        // Continuum: exact derivatives of the bump, trapezoid rule; agreement is O(h^2).
        let mut continuum = 0.0;
        for (k, x) in s.iter().enumerate() {
            let i = first + k;
            let (f, df, ddf) = bump(*x, c, w);
            let dom = om[k] * curve.log_weight_derivative(i).unwrap();
            let h = if k == 0 || k + 1 == n { 0.5 } else { 1.0 } * (s[1] - s[0]);
            continuum -= ((dom * df + om[k] * ddf) + a2[k] * om[k] * f) * f * h;
        }
        let h = s[1] - s[0];
        prop_assert!((q - continuum).abs() <= 10.0 * (h / w).powi(2) * scale, "Q {q} vs {continuum}");
    }

    #[test]
    fn eigenvalue_decreases_on_larger_windows(a in 0.01f64..5.0, b in 20.0f64..60.0, grow in 1.5f64..3.0) {
        let curve = simons();
        let small = SturmLiouvilleProblem::new(curve, (a * 100.0).round() / 100.0 + 0.01, b.round()).unwrap();
        let large = SturmLiouvilleProblem::new(curve, 0.01, (b * grow).round()).unwrap();
        let ls = smallest_eigenvalue(&small, WeightChoice::A2Weight, 2000).unwrap().lambda_min;
        let ll = smallest_eigenvalue(&large, WeightChoice::A2Weight, 2000).unwrap().lambda_min;
        prop_assert!(ll <= ls, "{ll} > {ls}");
    }
}

#[test]
fn eigenvalue_is_dilation_invariant() {
    let base = ShootingConfig::<f64>::default();
    let a = integrate_profile_with::<f64>(cone(4, 4), StartAxis::XAxis, 100.0, 1e-11, &base).unwrap();
    let la = smallest_eigenvalue(
        &SturmLiouvilleProblem::new(&a, 0.01, 50.0).unwrap(),
        WeightChoice::A2Weight,
        2000,
    )
    .unwrap()
    .lambda_min;
    for lambda in [0.5, 2.0, 4.0] {
        let b = integrate_profile_with(
            cone(4, 4),
            StartAxis::XAxis,
            100.0 * lambda,
            1e-11,
            &base.dilated(lambda),
        )
        .unwrap();
        let p = SturmLiouvilleProblem::new(&b, 0.01 * lambda, 50.0 * lambda).unwrap();
        let lb = smallest_eigenvalue(&p, WeightChoice::A2Weight, 2000)
            .unwrap()
            .lambda_min;
        assert!(((lb - la) / la).abs() < 1e-8, "{lambda}: {lb} vs {la}");
        let back = normalize_curve(&b, Normalization::UnitDistOrigin).unwrap();
        let p = SturmLiouvilleProblem::new(&back, 0.01, 50.0).unwrap();
        let lc = smallest_eigenvalue(&p, WeightChoice::A2Weight, 2000)
            .unwrap()
            .lambda_min;
        assert!(((lc - la) / la).abs() < 1e-8, "{lambda}: {lc} vs {la}");
    }
}

#[test]
fn negative_directions_have_disjoint_supports() {
    let c = integrate_profile(cone(2, 2), StartAxis::XAxis, 200.0, 1e-10).unwrap();
    let p = SturmLiouvilleProblem::new(&c, 0.0, 200.0).unwrap();
    let dirs = morse_index_lower_bound(&p, 2).unwrap();
    for (i, a) in dirs.iter().enumerate() {
        assert!(a.energy < 0.0);
        for b in &dirs[i + 1..] {
            let (sa, sb) = (a.support(), b.support());
            assert!(sa.end <= sb.start || sb.end <= sa.start);
        }
    }
}

// toda

#[test]
fn comparison_principle_in_a_star() {
    let one = liouville();
    let two = solve_liouville(simons(), 0.1, 2.0, (0.01, 200.0)).unwrap();
    assert!(one.v.iter().zip(&two.v).all(|(a, b)| b > a));
}

#[test]
fn liouville_energy_identity() {
    for eps in [0.1, 0.05] {
        let sol = solve_liouville(simons(), eps, 1.0, (0.01, 200.0)).unwrap();
        assert!(energy_balance(simons(), &sol).relative_imbalance < 1e-6);
    }
}

proptest! {
    #[test]
    fn decouple_recombine_inverse(h in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..64)) {
        let (h1, h2): (Vec<f64>, Vec<f64>) = h.into_iter().unzip();
        let (v1, v2) = decouple(&h1, &h2).unwrap();
        let (g1, g2) = recombine(&v1, &v2).unwrap();
        for i in 0..h1.len() {
            let ulp = |x: f64| f64::EPSILON * x.abs().max(h1[i].abs()).max(h2[i].abs());
            prop_assert!((g1[i] - h1[i]).abs() <= 4.0 * ulp(h1[i]));
            prop_assert!((g2[i] - h2[i]).abs() <= 4.0 * ulp(h2[i]));
        }
        // Dyadic data is reproduced bit for bit.
        let d1: Vec<f64> = h1.iter().map(|x| (x * 64.0).round() / 64.0).collect();
        let d2: Vec<f64> = h2.iter().map(|x| (x * 64.0).round() / 64.0).collect();
        let (v1, v2) = decouple(&d1, &d2).unwrap();
        prop_assert_eq!(recombine(&v1, &v2).unwrap(), (d1, d2));
    }
}

#[test]
fn decouple_is_exact_on_liouville_data() {
    let v = &liouville().v;
    let h1: Vec<f64> = v.iter().map(|x| -x / 2.0).collect();
    let h2: Vec<f64> = v.iter().map(|x| x / 2.0).collect();
    let (v1, v2) = decouple(&h1, &h2).unwrap();
    assert!(v1.iter().all(|x| *x == 0.0));
    assert_eq!(&v2, v);
    assert_eq!(recombine(&v1, &v2).unwrap(), (h1, h2));
}

// allencahn

#[test]
fn fermi_round_trip_on_random_tube_points() {
    let curve = simons();
    let frame = FermiFrame::new(curve, 0.1, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let s = rng.gen_range(0.05..25.0);
        let z = rng.gen_range(-9.5..9.5);
        let q = frame.reconstruct(s, z);
        if !(q[0] > 0.0 && q[1] > 0.0) {
            continue;
        }
        let fp = frame.project((q[0], q[1])).unwrap().unwrap();
        let back = frame.reconstruct(fp.s, fp.z);
        let err = ((back[0] - q[0]).powi(2) + (back[1] - q[1]).powi(2)).sqrt();
        assert!(err < 1e-7, "s {s} z {z}: {fp:?} err {err}");
    }
}

#[test]
fn far_field_before_cutoff() {
    let radius = 10.0;
    let bound = |z: f64| z.abs() >= radius / 2.0 && z.abs() < radius;
    // Single layer on the curve: the stated bound.
    let single = LayerAnsatz::single(simons().clone(), 0.1, 1.0).unwrap();
    let h = [0.0];
    for i in 0..2000 {
        let z = -radius + 2.0 * radius * i as f64 / 2000.0;
        if bound(z) {
            let u = single.profile(z, &h);
            assert!((u - z.signum()).abs() < 3.0 * (-SQ2 * radius / 2.0).exp());
        }
    }
    // Two layers at Toda heights: the bound shifted by the layer heights.
    let pair = LayerAnsatz::from_liouville(simons().clone(), liouville(), 2, 1.0).unwrap();
    let mut hs = [0.0; 2];
    for s in [0.5, 3.0, 10.0, 20.0] {
        pair.heights_at(s, &mut hs);
        for i in 0..2000 {
            let z = -radius + 2.0 * radius * i as f64 / 2000.0;
            if bound(z) {
                let u = pair.profile(z, &hs);
                let tail: f64 = hs.iter().map(|h| 3.0 * (-SQ2 * (z.abs() - h.abs())).exp()).sum();
                assert!((u + 1.0).abs() < tail);
            }
        }
    }
}

#[test]
fn residual_is_localised_in_the_tube() {
    for k in 1..=3 {
        let f = field(k);
        let layers = f.layers.as_ref().unwrap();
        let (res, sup) = residual_field(f);
        let (nr, nt) = f.shape();
        let mut inside_sup: f64 = 0.0;
        for i in 0..nr - 1 {
            for j in 0..nt - 1 {
                let idx = f.index(i, j);
                let z = layers.fermi_z[idx];
                if z.is_nan() {
                    assert!(res[idx].abs() < 1e-10, "k {k} ({i},{j}) {}", res[idx]);
                } else {
                    inside_sup = inside_sup.max(res[idx].abs());
                }
            }
        }
        assert_eq!(inside_sup, sup);
    }
}

#[test]
fn energy_increases_with_layer_count() {
    for radius in [20.0, 25.0, 29.9] {
        let e: Vec<f64> = (1..=3).map(|k| energy_in_ball(field(k), radius).unwrap()).collect();
        assert!(e[0] < e[1] && e[1] < e[2], "{e:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn disjoint_windows_are_block_additive(a in 0.2f64..1.0, len in 0.3f64..0.8, gap in 0.1f64..0.5, len2 in 0.3f64..0.8) {
        let f = field(2);
        let w1 = (a, a + len);
        let w2 = (a + len + gap, a + len + gap + len2);
        let d1 = unstable_direction(f, w1).unwrap();
        let d2 = unstable_direction(f, w2).unwrap();
        let sum: Vec<f64> = d1.psi.iter().zip(&d2.psi).map(|(x, y)| x + y).collect();
        let joint = stability_form(f, &sum).unwrap();
        prop_assert!((joint - d1.b_value - d2.b_value).abs() <= 1e-10 * joint.abs().max(1.0));
        let scaled: Vec<f64> = d1.psi.iter().map(|x| 2.0 * x).collect();
        prop_assert!((stability_form(f, &scaled).unwrap() - 4.0 * d1.b_value).abs() <= 1e-12 * d1.b_value.abs());
    }
}
