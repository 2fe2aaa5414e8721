use std::f64::consts::PI;

use proptest::prelude::*;
use rigid_dft::exvol::*;
use rigid_dft::projection::*;
use rigid_dft::scf::*;
use rigid_dft::shapes::*;
use rigid_dft::so3::*;
use rigid_dft::Vec3;

fn rotation() -> impl Strategy<Value = Rotation> {
    (-1.0f64..1.0, 0.0..2.0 * PI, 0.0..2.0 * PI)
        .prop_map(|(c, b, g)| euler_to_matrix(&EulerAngles { alpha: c.acos(), beta: b, gamma: g }))
}

fn theta() -> impl Strategy<Value = f64> {
    0.2f64..3.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn euler_roundtrip(p in rotation()) {
        let q = euler_to_matrix(&matrix_to_euler(&p));
        prop_assert!((p.matrix() - q.matrix()).abs().max() < 1e-10);
    }

    #[test]
    fn steiner_swap_symmetry(p in rotation(), th in theta()) {
        let s = MoleculeShape::sphero_triangle(th, 1.0, 0.1).unwrap();
        let a = excluded_volume(&s, &p).unwrap().value;
        let b = excluded_volume(&s, &p.inverse()).unwrap().value;
        prop_assert!((a - b).abs() < 1e-10, "{} vs {}", a, b);
    }

    #[test]
    fn steiner_group_and_reflection(p in rotation(), th in theta()) {
        let s = MoleculeShape::sphero_triangle(th, 1.0, 0.1).unwrap();
        let g = symmetry_group(&s);
        let v = excluded_volume(&s, &p).unwrap().value;
        for t in g.sampled_generators(3) {
            prop_assert!((excluded_volume(&s, &(t * p)).unwrap().value - v).abs() < 1e-10);
            prop_assert!((excluded_volume(&s, &(p * t)).unwrap().value - v).abs() < 1e-10);
        }
        let j = g.reflection_conjugator();
        prop_assert!((excluded_volume(&s, &((j * p) * j)).unwrap().value - v).abs() < 1e-10);
    }

    #[test]
    fn steiner_cubic_in_d(p in rotation(), th in theta()) {
        // fit V(D) at four diameters and recover the Steiner coefficients
        let ds = [0.05, 0.1, 0.2, 0.4];
        let vs: Vec<f64> = ds
            .iter()
            .map(|&d| excluded_volume(&MoleculeShape::sphero_triangle(th, 1.0, d).unwrap(), &p).unwrap().value)
            .collect();
        let m = nalgebra::Matrix4::from_fn(|i, j| ds[i].powi(j as i32));
        let c = m.lu().solve(&nalgebra::Vector4::from_column_slice(&vs)).unwrap();
        let dec = steiner(&EdgeSet::spherotriangle(&MoleculeShape::sphero_triangle(th, 1.0, 0.1).unwrap(), &p).unwrap());
        prop_assert!((c[0] - dec.v3).abs() < 1e-9);
        prop_assert!((c[1] - dec.v2).abs() < 1e-9);
        prop_assert!((c[2] - PI * dec.v1).abs() < 1e-9);
        prop_assert!((c[3] - 4.0 * PI / 3.0).abs() < 1e-9);
    }

    #[test]
    fn v1_is_orientation_free(p in rotation(), th in theta()) {
        let s = MoleculeShape::sphero_triangle(th, 1.0, 0.1).unwrap();
        let e0 = EdgeSet::spherotriangle(&s, &Rotation::identity()).unwrap();
        let e = EdgeSet::spherotriangle(&s, &p).unwrap();
        prop_assert!((steiner_v1(&e) - steiner_v1(&e0)).abs() < 1e-14);
    }

    #[test]
    fn point_reflection_identity(p in rotation(), q in rotation(), th in theta()) {
        let s = MoleculeShape::sphero_triangle(th, 1.0, 0.1).unwrap();
        let (o, a, b) = triangle_vertices(&s).unwrap();
        let t1 = [o, a, b].map(|v| p.apply(&v));
        let t2 = [o, a, b].map(|v| q.apply(&v));
        let e = EdgeSet::from_triangles(&t1, &t2).unwrap();
        let lhs = steiner_v2(&e).0 + steiner_v2(&e.point_reflected()).0;
        prop_assert!((lhs - point_reflection_sum(&e)).abs() < 1e-10);
    }

    #[test]
    fn rod_swap_and_axial(p in rotation(), phi in 0.0..2.0 * PI) {
        let s = MoleculeShape::rod(1.0, 0.1).unwrap();
        let v = excluded_volume(&s, &p).unwrap().value;
        let t = Rotation::about_axis(&Vec3::x(), phi);
        prop_assert!((excluded_volume(&s, &p.inverse()).unwrap().value - v).abs() < 1e-12);
        prop_assert!((excluded_volume(&s, &(t * p)).unwrap().value - v).abs() < 1e-12);
    }

    #[test]
    fn primitive_distance_symmetric(p in rotation(), x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0) {
        // d(T1, P̄T2 + x) = d(T2, P̄ᵀT1 − P̄ᵀx)
        let s = MoleculeShape::sphero_triangle(1.1, 1.0, 0.1).unwrap();
        let xr = Vec3::new(x, y, z);
        let a = primitive_distance(&s, &p, &xr).unwrap();
        let b = primitive_distance(&s, &p.inverse(), &(-p.inverse().apply(&xr))).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn boltzmann_moments_are_valid(c in prop::collection::vec(-6.0f64..6.0, 9), seed in 0usize..4) {
        let q = haar_quadrature(8, 8, 8).unwrap();
        let kp = KernelPolynomial::new(SymmetryClass::C2vCubic, c, Provenance::Manual).unwrap();
        let b = scf_map(&kp, &InitState::PRESETS[seed].moments(true), &q).unwrap();
        b.moments.validate().unwrap();
    }

    #[test]
    fn projection_reproduces_span(c in prop::collection::vec(-3.0f64..3.0, 5)) {
        let q = haar_quadrature(6, 6, 6).unwrap();
        let kp = KernelPolynomial::new(SymmetryClass::C2vQuadratic, c.clone(), Provenance::Manual).unwrap();
        let r = project_kernel(|p| evaluate_kernel(&kp, p), &kp.basis(), &q).unwrap();
        for (a, b) in r.coeffs.iter().zip(&c) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn bentcore_swap_and_bounds(p in rotation(), th in 0.6f64..2.8) {
        let s = MoleculeShape::bent_core(th, 1.0, 0.1).unwrap();
        let a = excluded_volume(&s, &p).unwrap().value;
        let b = excluded_volume(&s, &p.inverse()).unwrap().value;
        prop_assert!((a - b).abs() < 3e-4 * a, "{} vs {}", a, b);
        // the union contains every arm-pair body and is bounded by their sum
        let (h, d) = (0.5, 0.1);
        let (sh, ch) = (th / 2.0).sin_cos();
        let arms = [Vec3::new(-ch, -sh, 0.0), Vec3::new(-ch, sh, 0.0)];
        let pair: Vec<f64> = arms
            .iter()
            .flat_map(|u| arms.iter().map(move |v| (u, v)))
            .map(|(u, v)| 2.0 * h * h * d * u.cross(&p.apply(v)).norm() + 2.0 * PI * h * d * d + 4.0 / 3.0 * PI * d.powi(3))
            .collect();
        let max = pair.iter().cloned().fold(0.0, f64::max);
        prop_assert!(a >= max * (1.0 - 1e-3), "{} < {}", a, max);
        prop_assert!(a <= pair.iter().sum::<f64>() * (1.0 + 1e-3));
    }
}
