use std::sync::Arc;

use lienf::foliation::{bott_transport, Foliation, LeafPath, VectorField};
use lienf::groupoid::LieGroupoid;
use lienf::linalg::Vector;
use lienf::manifold::Manifold;
use lienf::nerve::{degeneracy_map, face_map, sym_action, Permutation};
use lienf::scenario::so2_plane;
use proptest::prelude::*;

fn rotation(th: f64) -> Vector {
    Vector::from_column_slice(&[th.cos(), -th.sin(), th.sin(), th.cos()])
}

/// Composable SO(2)-action arrows `(k₁, k₂x), (k₂, x)`.
fn string(g: &LieGroupoid, a: f64, b: f64, x: [f64; 2]) -> Vector {
    let x = Vector::from_column_slice(&x);
    let h = lienf::linalg::concat(&[&rotation(b), &x]);
    let gx = g.t(&h);
    let k = lienf::linalg::concat(&[&rotation(a), &gx]);
    lienf::linalg::concat(&[&k, &h])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn faces_commute(a in -3.0..3.0f64, b in -3.0..3.0f64, x0 in -2.0..2.0f64, x1 in -2.0..2.0f64) {
        let g = so2_plane();
        let s = string(&g, a, b, [x0, x1]);
        for j in 1..=2 {
            for i in 0..j {
                let l = face_map(&g, 1, i, &face_map(&g, 2, j, &s).unwrap()).unwrap();
                let r = face_map(&g, 1, j - 1, &face_map(&g, 2, i, &s).unwrap()).unwrap();
                prop_assert!((l - r).amax() < 1e-10);
            }
        }
    }

    #[test]
    fn degeneracies_are_sections_of_faces(a in -3.0..3.0f64, b in -3.0..3.0f64, x0 in -2.0..2.0f64, x1 in -2.0..2.0f64) {
        let g = so2_plane();
        let s = string(&g, a, b, [x0, x1]);
        for j in 1..=2 {
            let d = degeneracy_map(&g, 2, j, &s).unwrap();
            prop_assert!((face_map(&g, 3, j, &d).unwrap() - &s).amax() < 1e-10);
            prop_assert!((face_map(&g, 3, j + 1, &d).unwrap() - &s).amax() < 1e-10);
        }
    }

    #[test]
    fn symmetric_group_acts(a in -3.0..3.0f64, b in -3.0..3.0f64, x0 in -2.0..2.0f64, x1 in -2.0..2.0f64, i in 0usize..6, j in 0usize..6) {
        let g = so2_plane();
        let s = string(&g, a, b, [x0, x1]);
        let p = Permutation::all(3);
        let (si, sj) = (&p[i], &p[j]);
        let l = sym_action(&g, 2, si, &sym_action(&g, 2, sj, &s).unwrap()).unwrap();
        let r = sym_action(&g, 2, &si.compose(sj), &s).unwrap();
        prop_assert!((l - r).amax() < 1e-10);
    }

    #[test]
    fn transport_is_linear_in_the_vector(c0 in -5.0..5.0f64, c1 in -5.0..5.0f64, y0 in 0.1..1.0f64, ds in 0.1..1.5f64) {
        let x: VectorField = Arc::new(|p| Vector::from_column_slice(&[1.0, p[1], 0.0]));
        let a: VectorField = Arc::new(|_| Vector::from_column_slice(&[0.0, 1.0, 0.0]));
        let b: VectorField = Arc::new(|p| Vector::from_column_slice(&[0.0, p[0].sin(), 1.0]));
        let f = Foliation::new("curves", Manifold::euclidean(3), vec![x], vec![a, b]).unwrap();
        let path = LeafPath::new(move |t| Vector::from_column_slice(&[ds * t, y0 * (ds * t).exp(), 0.3]));
        let e0 = bott_transport(&f, &path, &Vector::from_column_slice(&[1.0, 0.0])).unwrap();
        let e1 = bott_transport(&f, &path, &Vector::from_column_slice(&[0.0, 1.0])).unwrap();
        let v = bott_transport(&f, &path, &Vector::from_column_slice(&[c0, c1])).unwrap();
        prop_assert!((v - (e0 * c0 + e1 * c1)).norm() < 1e-6 * (1.0 + c0.abs() + c1.abs()));
    }
}
