//! Multi-layer Allen-Cahn ansatz over the blown-up hypersurface `eps^-1 Sigma`.

mod ansatz;
mod energy;
mod fermi;
mod nodal;

pub use ansatz::{
    build_ansatz, residual_field, tube_cutoff, uniform_grid, LayerAnsatz, LayerGeometry, ReducedField2D, FIELD_BOUND,
    MAX_SPACING,
};
pub use energy::{
    energy_growth, energy_in_ball, stability_form, unstable_direction, window_bump, EnergyGrowth, UnstableDirection,
};
pub use fermi::{fermi_project, FermiFrame, FermiPoint};
pub use nodal::{nodal_components, NodalComponent, NodalSet};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::LabError;
    use crate::geometry::{integrate_profile, ConeParams, ProfileCurve, StartAxis};
    use crate::toda::{solve_liouville, LiouvilleSolution};
    use std::sync::OnceLock;

    fn curve() -> &'static ProfileCurve<f64> {
        static CURVE: OnceLock<ProfileCurve<f64>> = OnceLock::new();
        CURVE.get_or_init(|| integrate_profile(ConeParams::new(4, 4).unwrap(), StartAxis::XAxis, 60.0, 1e-10).unwrap())
    }

    fn liouville(eps: f64) -> LiouvilleSolution<f64> {
        solve_liouville(curve(), eps, 1.0, (0.01, 60.0)).unwrap()
    }

    fn grid() -> Vec<f64> {
        uniform_grid(300, 0.1)
    }

    fn toda_field(eps: f64, k: usize) -> ReducedField2D<f64> {
        let a = LayerAnsatz::from_liouville(curve().clone(), &liouville(eps), k, 1.0).unwrap();
        build_ansatz(&a, &grid(), &grid()).unwrap()
    }

    #[test]
    fn projection_round_trip() {
        let c = curve();
        let frame = FermiFrame::new(c, 0.1, 1.0).unwrap();
        for &s in &[0.3, 1.7, 4.2, 11.0] {
            let (p, _) = frame.frame_at(s);
            let on = frame.project((p[0] / 0.1, p[1] / 0.1)).unwrap().unwrap();
            assert!(on.z.abs() < 1e-10, "{on:?}");
            assert!((on.s - s).abs() < 1e-9);
            for &z0 in &[-7.5, -2.0, 0.4, 6.0] {
                let q = frame.reconstruct(s, z0);
                let fp = fermi_project(c, 0.1, (q[0], q[1]), 1.0).unwrap().unwrap();
                assert!((fp.z - z0).abs() < 1e-8, "{s} {z0} {fp:?}");
                assert!((fp.s - s).abs() < 1e-9);
            }
        }
        // Past the tube on the outer side.
        assert!(fermi_project(c, 0.1, (40.0, 2.0), 1.0).unwrap().is_none());
        assert!(fermi_project(c, 0.1, (40.0, 0.0), 1.0).is_err());
        // On the axis the foot point is the axis node.
        let fp = frame.project((12.0, 0.0)).unwrap().unwrap();
        assert_eq!(fp.s, 0.0);
        assert!((fp.z + 2.0).abs() < 1e-12);
    }

    #[test]
    fn ansatz_shape() {
        let c = curve().clone();
        let single = LayerAnsatz::single(c.clone(), 0.1, 1.0).unwrap();
        let f = build_ansatz(&single, &grid(), &grid()).unwrap();
        let layers = f.layers.as_ref().unwrap();
        let mut inside = 0;
        for (idx, u) in f.u.iter().enumerate() {
            assert!(u.abs() <= 1.0 + 1e-12);
            let z = layers.fermi_z[idx];
            if z.abs() < 4.0 {
                inside += 1;
                assert!((u - (z / 2f64.sqrt()).tanh()).abs() < 1e-12);
            }
        }
        assert!(inside > 1000);
        assert!(matches!(
            build_ansatz(&single, &uniform_grid(50, 0.3), &uniform_grid(50, 0.3)),
            Err(LabError::Resolution { .. })
        ));
        let close = vec![vec![0.0; c.len()], vec![0.5; c.len()]];
        assert!(LayerAnsatz::new(c.clone(), 0.1, close, 1.0).is_err());

        // Odd k: opposite far fields.
        let three = toda_field(0.1, 3);
        let (n, _) = three.shape();
        assert_eq!(three.at(0, 0), 1.0);
        assert_eq!(three.at(n - 1, 0), -1.0);
    }

    #[test]
    fn residuals() {
        let g = grid();
        let cone = ConeParams::new(4, 4).unwrap();
        let one = ReducedField2D::constant(cone, g.clone(), g.clone(), 1.0).unwrap();
        let (res, sup) = residual_field(&one);
        assert_eq!(sup, 0.0);
        assert!(res.iter().all(|r| *r == 0.0));

        let coarse = residual_field(&toda_field(0.1, 2)).1;
        let fine = residual_field(&toda_field(0.05, 2)).1;
        assert!(fine < coarse, "{fine} {coarse}");

        // Constant heights at the axis gap of the Toda ladder.
        let sol = liouville(0.1);
        let flat = LayerAnsatz::flat(curve().clone(), 0.1, 2, sol.v[0], 1.0).unwrap();
        let flat_sup = residual_field(&build_ansatz(&flat, &g, &g).unwrap()).1;
        assert!(flat_sup > coarse, "{flat_sup} {coarse}");
    }

    #[test]
    fn nodal_sets() {
        let g = grid();
        let cone = ConeParams::new(4, 4).unwrap();
        let one = ReducedField2D::constant(cone, g.clone(), g, 1.0).unwrap();
        assert_eq!(nodal_components(&one).unwrap().count, 0);
        for k in [1, 2, 3] {
            let set = nodal_components(&toda_field(0.1, k)).unwrap();
            assert_eq!(set.count, k);
            assert_eq!(set.components.len(), k);
            assert!(set.components.iter().all(|c| c.single_valued && c.truncated));
            assert_eq!(set.warnings.len(), k);
        }
        // The k = 2 graphs sit at the zeros of w(z + v/2) - w(z - v/2) - 1, found here
        // by bisection on the closed form.
        let sol = liouville(0.1);
        let set = nodal_components(&toda_field(0.1, 2)).unwrap();
        for comp in &set.components {
            let mid = comp.s.len() / 2;
            let v = curve().interpolate(&extend(&sol), comp.s[mid]);
            let g = |z: f64| ((z + v / 2.0) / 2f64.sqrt()).tanh() - ((z - v / 2.0) / 2f64.sqrt()).tanh() - 1.0;
            let (mut lo, mut hi) = (0.0, v);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if g(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            assert!((comp.z[mid].abs() - 0.1 * lo).abs() < 1e-3, "{} {}", comp.z[mid], lo);
        }
    }

    fn extend(sol: &LiouvilleSolution<f64>) -> Vec<f64> {
        (0..curve().len())
            .map(|i| sol.v[i.clamp(sol.first, sol.last) - sol.first])
            .collect()
    }

    #[test]
    fn energies_and_instability() {
        let g = grid();
        let cone = ConeParams::new(4, 4).unwrap();
        let one = ReducedField2D::constant(cone, g.clone(), g.clone(), 1.0).unwrap();
        assert_eq!(energy_in_ball(&one, 20.0).unwrap(), 0.0);
        assert!(matches!(energy_in_ball(&one, 40.0), Err(LabError::Domain(_))));

        let f = toda_field(0.1, 2);
        let e2 = energy_in_ball(&f, 29.9).unwrap();
        let e1 = energy_in_ball(&toda_field(0.1, 1), 29.9).unwrap();
        assert!(e2 > e1 && e1 > 0.0);

        let a = unstable_direction(&f, (0.5, 2.0)).unwrap();
        let b = unstable_direction(&f, (2.2, 3.5)).unwrap();
        assert!(a.b_value < 0.0 && b.b_value < 0.0, "{} {}", a.b_value, b.b_value);
        let twice: Vec<f64> = a.psi.iter().map(|p| 2.0 * p).collect();
        let b2 = stability_form(&f, &twice).unwrap();
        assert!((b2 - 4.0 * a.b_value).abs() <= 1e-12 * b2.abs());
        let sum: Vec<f64> = a.psi.iter().zip(&b.psi).map(|(x, y)| x + y).collect();
        let joint = stability_form(&f, &sum).unwrap();
        assert!((joint - a.b_value - b.b_value).abs() <= 1e-10 * joint.abs());
        assert!(matches!(
            unstable_direction(&f, (1.0, 1.05)),
            Err(LabError::NarrowWindow { .. })
        ));
        assert!(unstable_direction(&one, (1.0, 2.0)).is_err());
    }
}
