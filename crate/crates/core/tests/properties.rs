use ocrdir::almm::{apply_operator, AlmmParams};
use ocrdir::field::{div, grad};
use ocrdir::io::{decode_displacement, encode_displacement};
use ocrdir::meshq::{det_jacobian, unfold_indicator};
use ocrdir::sampler::sample_point;
use ocrdir::{BoundaryKind, CompositeKind, Deformation, GridSpec, ScalarField, VectorField};
use proptest::prelude::*;

fn values(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, len)
}

fn field(m: usize, n: usize, v: Vec<f64>) -> ScalarField {
    ScalarField::new(GridSpec::new(m, n).unwrap(), v).unwrap()
}

proptest! {
    #[test]
    fn interpolating_composites_hit_both_ends(g0 in 0.1f64..10.0, g in 0.1f64..10.0, det in 0.1f64..5.0) {
        for kind in [CompositeKind::P1, CompositeKind::P2] {
            prop_assert!((kind.eval(0.0, g0, g, det) - g0).abs() <= 1e-12 * g0);
            prop_assert!((kind.eval(1.0, g0, g, det) - g).abs() <= 1e-12 * g);
        }
        prop_assert!((CompositeKind::P3.eval(0.0, g0, g, det) - det).abs() <= 1e-12 * det);
        prop_assert_eq!(CompositeKind::P4.eval(0.3, g0, g, det), g);
    }

    #[test]
    fn explicit_time_derivative_matches_differences(
        g0 in 0.2f64..5.0, g in 0.2f64..5.0, det in 0.2f64..5.0, t in 0.05f64..0.95,
    ) {
        let e = 1e-5;
        for kind in CompositeKind::ALL {
            let fd = (kind.eval(t + e, g0, g, det) - kind.eval(t - e, g0, g, det)) / (2.0 * e);
            let h = kind.eval(t, g0, g, det);
            prop_assert!((kind.eval_dt(g0, g, h, det) - fd).abs() <= 1e-6 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn elliptic_operator_is_positive(a in values(2 * 9 * 7), b in values(2 * 9 * 7)) {
        let s = GridSpec::new(9, 7).unwrap();
        let vf = |v: &[f64]| {
            VectorField::new(field(9, 7, v[..63].to_vec()), field(9, 7, v[63..].to_vec()))
                .unwrap()
                .zero_boundary()
        };
        let (a, b) = (vf(&a), vf(&b));
        let p = AlmmParams::default();
        let (la, lb) = (apply_operator(&a, &p), apply_operator(&b, &p));
        prop_assert!(la.dot(&a) >= 0.0);
        prop_assert!((la.dot(&b) - a.dot(&lb)).abs() <= 1e-10 * (1.0 + la.norm2() * b.norm2()));
        prop_assert_eq!(la.spec(), s);
    }

    #[test]
    fn gradient_of_a_constant_vanishes(c in -5.0f64..5.0) {
        let v = ScalarField::constant(GridSpec::new(6, 9).unwrap(), c);
        prop_assert_eq!(grad(&v, BoundaryKind::NeumannMirror).max_abs(), 0.0);
        let u = VectorField::new(v.clone(), v).unwrap();
        prop_assert_eq!(div(&u).norm2(), 0.0);
    }

    #[test]
    fn bicubic_reproduces_node_values(v in values(8 * 6), i in 0usize..8, j in 0usize..6) {
        let f = field(8, 6, v);
        let p = f.spec().center(i as isize, j as isize);
        prop_assert!((sample_point(&f, p) - f.get(i, j)).abs() <= 1e-12);
    }

    #[test]
    fn uniform_scaling_scales_interior_determinant(s in 0.3f64..1.5) {
        let spec = GridSpec::new(10, 12).unwrap();
        let omega = Deformation::from_fn(spec, |i, j| {
            let [x, y] = spec.center(i as isize, j as isize);
            [s * x, s * y]
        });
        let det = det_jacobian(&omega);
        for (i, j) in spec.cells().filter(|&(i, j)| !spec.on_boundary(i, j)) {
            prop_assert!((det.get(i, j) - s * s).abs() <= 1e-10);
        }
    }

    #[test]
    fn small_perturbations_never_fold(v in values(2 * 10 * 10)) {
        let spec = GridSpec::new(10, 10).unwrap();
        let omega = Deformation::from_fn(spec, |i, j| {
            let [x, y] = spec.center(i as isize, j as isize);
            let k = spec.index(i, j);
            [x + 0.2 * spec.hx() * v[k], y + 0.2 * spec.hy() * v[100 + k]]
        });
        let q = unfold_indicator(&omega, 0.0);
        prop_assert!(q.r_min > 0.0);
        prop_assert!(q.folded.is_empty());
    }

    #[test]
    fn displacement_encoding_round_trips(a in values(5 * 4), b in values(5 * 4)) {
        let u = VectorField::new(field(5, 4, a), field(5, 4, b)).unwrap();
        let mut buf = Vec::new();
        encode_displacement(&mut buf, &u).unwrap();
        prop_assert_eq!(buf.len(), 4 + 2 + 4 + 4 + 8 * 2 * 20);
        prop_assert_eq!(&buf[..4], b"OCRD");
        prop_assert_eq!(decode_displacement(&buf).unwrap(), u);
    }
}
