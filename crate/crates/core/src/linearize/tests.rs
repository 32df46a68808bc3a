use std::f64::consts::TAU;
use std::sync::Arc;

use super::*;
use crate::error::Error;
use crate::groupoid::{check_axioms, Group, GroupAction, LieGroupoid, SaturatedSubmanifold};
use crate::linalg::{Matrix, Vector};
use crate::manifold::{Constrained, LandsIn, Manifold, Metric, PullbackCombination};
use crate::map::FnMap;
use crate::nmetric::{build_proper_action_2metric, submersion_groupoid_metrics};

fn v(x: &[f64]) -> Vector {
    Vector::from_column_slice(x)
}

fn so2_plane() -> LieGroupoid {
    LieGroupoid::action(GroupAction::linear(Group::special_orthogonal(2), Manifold::euclidean(2)).unwrap()).unwrap()
}

fn z2_line() -> LieGroupoid {
    LieGroupoid::action(GroupAction::linear(Group::z2(), Manifold::euclidean(1)).unwrap()).unwrap()
}

fn origin(g: &LieGroupoid, n: usize) -> SaturatedSubmanifold {
    SaturatedSubmanifold::certify(g, Manifold::finite_set(vec![Vector::zeros(n)]), vec![Vector::zeros(n)], 16).unwrap()
}

/// `S¹ × R → R`, `(c, r) ↦ r`, with the fiber over 0.
fn cylinder() -> (LieGroupoid, SaturatedSubmanifold) {
    let m = Manifold::product(vec![Manifold::circle(), Manifold::euclidean(1)]);
    let pr = FnMap::linear(Matrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0])).into_ref();
    let g = LieGroupoid::submersion(m.clone(), Manifold::euclidean(1), pr.clone(), true).unwrap();
    let fiber = Manifold::new(
        Constrained::new(
            "S¹ × {0}",
            m,
            vec![Arc::new(LandsIn {
                map: pr,
                target: Manifold::finite_set(vec![v(&[0.0])]),
            })],
            1,
        )
        .with_sampler(1, Arc::new(|u: &[f64]| Some(v(&[(TAU * u[0]).cos(), (TAU * u[0]).sin(), 0.0])))),
    );
    let s = SaturatedSubmanifold::certify(&g, fiber, vec![], 16).unwrap();
    (g, s)
}

fn unit_circle(g: &LieGroupoid) -> SaturatedSubmanifold {
    SaturatedSubmanifold::certify(g, Manifold::circle(), vec![], 32).unwrap()
}

fn quick(samples: usize) -> LinearizeOptions {
    LinearizeOptions {
        probe_rays: 24,
        samples,
        ..LinearizeOptions::default()
    }
}

#[test]
fn identity_arrows_act_trivially_and_composition_is_functorial() {
    let g = so2_plane();
    let s = unit_circle(&g);
    let eta = Metric::euclidean(g.objects());
    let gs = crate::groupoid::restrict_to_saturated(&g, &s).unwrap();
    for x in s.points(10, 3).unwrap() {
        let n = v(&[x[0], x[1]]) * 0.7;
        assert!((normal_rep(&g, &eta, &s, &g.u(&x), &n).unwrap() - &n).norm() < 1e-10);
    }
    let tangent = |y: &Vector| Manifold::circle().tangent_basis(y);
    let mut worst: f64 = 0.0;
    for pair in gs.sample_strings(2, 100, 8).unwrap() {
        let (a, b) = (&pair[0], &pair[1]);
        let tab = normal_rep_matrix(&g, &eta, &g.multiply(a, b).unwrap(), &tangent).unwrap();
        let ta = normal_rep_matrix(&g, &eta, a, &tangent).unwrap();
        let tb = normal_rep_matrix(&g, &eta, b, &tangent).unwrap();
        worst = worst.max((tab - ta * tb).norm());
    }
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn normal_frames_are_orthonormal() {
    let g = so2_plane();
    let s = unit_circle(&g);
    let eta = Metric::from_fn(g.objects(), |x| Matrix::identity(2, 2) * (1.0 + x.norm_squared()));
    let b = NormalBundle::new(&s, &eta).unwrap();
    assert_eq!(b.fiber_dim(), 1);
    assert!(b.check_frames(20, 1, 1e-10).unwrap().pass);
}

#[test]
fn linear_models_pass_axioms() {
    let g = z2_line();
    let s = origin(&g, 1);
    let m = linear_model(&g, &s, &Metric::euclidean(g.objects())).unwrap();
    let r = check_axioms(m.groupoid(), 200, 1e-10, 1).unwrap();
    assert!(r.pass, "{}", r.to_json());
    // Z/2 acting on ν₀ = R by −1, as in the original groupoid.
    let a = m.arrow(&v(&[-1.0, 0.0]), &v(&[0.4]));
    assert!((m.groupoid().t(&a) - v(&[0.0, -0.4])).norm() < 1e-12);

    let g = so2_plane();
    let s = origin(&g, 2);
    let m = linear_model(&g, &s, &Metric::euclidean(g.objects())).unwrap();
    let r = check_axioms(m.groupoid(), 200, 1e-10, 2).unwrap();
    assert!(r.pass, "{}", r.to_json());
    let th: f64 = 0.7;
    let k = v(&[th.cos(), -th.sin(), th.sin(), th.cos()]);
    let a = m.arrow(&crate::linalg::concat(&[&k, &v(&[0.0, 0.0])]), &v(&[1.0, 0.5]));
    let moved = m.groupoid().t(&a);
    assert!((moved.rows(2, 2) - v(&[th.cos() - 0.5 * th.sin(), th.sin() + 0.5 * th.cos()])).norm() < 1e-10);

    let (g, s) = cylinder();
    let m = linear_model(&g, &s, &Metric::euclidean(g.objects())).unwrap();
    let r = check_axioms(m.groupoid(), 200, 1e-10, 3).unwrap();
    assert!(r.pass, "{}", r.to_json());
    // Fiber pair groupoid times the trivial action on T₀R: T_g is the identity.
    for a in m.groupoid().sample_arrows(20, 4).unwrap() {
        let (_, w) = m.split(&a);
        let z = m.groupoid().t(&a).rows(3, 3).into_owned();
        assert!((w - z).norm() < 1e-10);
    }
}

#[test]
fn fixed_point_linearization_is_exact() {
    let g = z2_line();
    let m2 = build_proper_action_2metric(&g, None, 0).unwrap();
    let res = linearize_exp(&g, &m2, &origin(&g, 1), 0.5, &quick(12)).unwrap();
    assert!(res.report().pass, "{}", res.report().to_json());
    assert!(res.report().max_defect < 1e-10, "{}", res.report().max_defect);
    let e = res.exp0(&v(&[0.0]), &v(&[0.3])).unwrap();
    assert!((e - v(&[0.3])).norm() < 1e-10);
    assert_eq!(res.kind(), "invariant");
}

#[test]
fn ehresmann_recovery() {
    let (g, s) = cylinder();
    let eta = Metric::euclidean(g.objects());
    let eta_n = Metric::euclidean(&Manifold::euclidean(1));
    let [_, _, m2] = submersion_groupoid_metrics(&g, &eta, &eta_n).unwrap();
    let res = linearize_exp(&g, &m2, &s, 0.1, &quick(12)).unwrap();
    let r = res.report();
    assert!(r.pass, "{}", r.to_json());
    for c in ["diagram_source", "diagram_target", "morphism"] {
        assert!(r.component(c).unwrap().max_defect < 1e-6, "{c}: {}", r.to_json());
    }
    assert_eq!(res.kind(), "invariant");
    // Normal geodesics move straight along R.
    let x = v(&[0.0, 1.0, 0.0]);
    assert!((res.exp0(&x, &v(&[0.0, 0.0, 0.08])).unwrap() - v(&[0.0, 1.0, 0.08])).norm() < 1e-8);
    assert!((res.exp0(&x, &Vector::zeros(3)).unwrap() - &x).norm() < 1e-12);
}

#[test]
fn fault_injection_inflates_diagram_defect() {
    let (g, s) = cylinder();
    let eta = Metric::euclidean(g.objects());
    let eta_n = Metric::euclidean(&Manifold::euclidean(1));
    let [m0, m1, _] = submersion_groupoid_metrics(&g, &eta, &eta_n).unwrap();
    let bump = Metric::from_fn(g.arrows(), |p| {
        let mut d = Matrix::identity(6, 6);
        d[(2, 2)] += 4.0 * p[0] * p[0];
        d
    });
    let id = FnMap::identity(6).into_ref();
    let bad = Metric::new(PullbackCombination::new(g.arrows().clone(), vec![(1.0, id.clone(), m1.metric().clone()), (1.0, id, bump)]));
    let res = linearize_with_metrics(&g, &s, &bad, m0.metric(), 0.1, &quick(8)).unwrap();
    let d = res.report().component("diagram_source").unwrap().max_defect;
    assert!(d > 1e-6, "{d}");
    assert!(!res.report().pass);
}

#[test]
fn slice_recovery_so2() {
    let g = so2_plane();
    let s = unit_circle(&g);
    let m2 = build_proper_action_2metric(&g, None, 8).unwrap();
    let big = linearize_exp(&g, &m2, &s, 0.1, &quick(6)).unwrap();
    let small = linearize_exp(&g, &m2, &s, 0.05, &quick(6)).unwrap();
    let (d1, d2) = (
        big.report().component("morphism").unwrap().max_defect,
        small.report().component("morphism").unwrap().max_defect,
    );
    assert!(big.report().pass, "{}", big.report().to_json());
    assert!(d1 < 1e-4);
    assert!(d1 >= 2.0 * d2, "{d1:e} {d2:e}");
}

#[test]
fn oversized_radius_is_rejected() {
    let g = so2_plane();
    let s = unit_circle(&g);
    let e0 = Metric::euclidean(g.objects());
    let e1 = Metric::euclidean(g.arrows());
    let err = linearize_with_metrics(&g, &s, &e1, &e0, 1.6, &quick(4)).unwrap_err();
    match err {
        Error::RadiusTooLarge { radius, estimate } => {
            assert_eq!(radius, 1.6);
            assert!(estimate > 0.5 && estimate < 1.1, "{estimate}");
        }
        e => panic!("{e}"),
    }
}

#[test]
fn saturated_neighborhoods() {
    let (g, s) = cylinder();
    let n = saturate_neighborhood(&g, &s, 0.3, 32).unwrap();
    assert!(n.certificate().pass);
    assert!(n.contains(&v(&[0.0, -1.0, 0.2])) && !n.contains(&v(&[1.0, 0.0, 0.4])));

    let g = so2_plane();
    let n = saturate_neighborhood(&g, &origin(&g, 2), 0.5, 64).unwrap();
    assert!(n.certificate().pass);
    for th in [0.0, 1.0, 2.5] {
        assert!(n.contains(&v(&[0.49 * f64::cos(th), 0.49 * f64::sin(th)])));
        assert!(!n.contains(&v(&[0.51 * f64::cos(th), 0.51 * f64::sin(th)])));
    }

    let pair = LieGroupoid::pair(Manifold::circle());
    let all = SaturatedSubmanifold::certify(&pair, Manifold::circle(), vec![], 8).unwrap();
    let n = saturate_neighborhood(&pair, &all, 0.1, 8).unwrap();
    assert!(n.certificate().pass);
    assert!(n.contains(&v(&[0.0, 1.0])) && n.contains(&v(&[-1.0, 0.0])));

    let line = LieGroupoid::pair(Manifold::euclidean(1));
    let s = SaturatedSubmanifold::certify(&line, Manifold::euclidean(1), vec![v(&[0.0])], 8).unwrap();
    assert_eq!(saturate_neighborhood(&line, &s, 0.1, 8).unwrap_err(), Error::NotSProper);
}
