use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use lienf::algebroid::{leibniz_check, ScalarFn, Section};
use lienf::foliation::linear_holonomy;
use lienf::foliation::LeafPath;
use lienf::groupoid::{check_axioms, restrict_to_saturated, Group, GroupAction, LieGroupoid};
use lienf::linalg::{Matrix, Vector};
use lienf::linearize::{linearize_exp, normal_rep, normal_rep_matrix, LinearizeOptions};
use lienf::manifold::{geodesic_exp, Manifold, Metric};
use lienf::map::FnMap;
use lienf::nerve::check_simplicial;
use lienf::nmetric::{build_proper_action_2metric, submersion_groupoid_metrics, verify_n_metric};
use lienf::scenario::{cylinder, run, so2_plane, suspension, unit_circle, z2_line, Overrides, Scenario};
use lienf::{Report, Result};

fn v(x: &[f64]) -> Vector {
    Vector::from_column_slice(x)
}

fn pr_plane() -> LieGroupoid {
    let pr = FnMap::linear(Matrix::from_row_slice(1, 2, &[1.0, 0.0])).into_ref();
    LieGroupoid::submersion(Manifold::euclidean(2), Manifold::euclidean(1), pr, false).unwrap()
}

fn zoo() -> Vec<LieGroupoid> {
    vec![
        LieGroupoid::unit(Manifold::euclidean(2)),
        LieGroupoid::unit(Manifold::sphere(2)),
        LieGroupoid::pair(Manifold::euclidean(2)),
        LieGroupoid::pair(Manifold::sphere(2)),
        pr_plane(),
        cylinder().unwrap().0,
        so2_plane(),
        z2_line(),
        LieGroupoid::action(GroupAction::linear(Group::special_orthogonal(3), Manifold::sphere(2)).unwrap()).unwrap(),
        LieGroupoid::action(GroupAction::translation(2)).unwrap(),
    ]
}

fn worst(r: &Report, ops: &[&str]) -> f64 {
    r.components
        .iter()
        .filter(|c| ops.iter().any(|o| c.op.starts_with(o)))
        .map(|c| c.max_defect)
        .fold(0.0, f64::max)
}

fn opts(samples: usize) -> LinearizeOptions {
    LinearizeOptions {
        probe_rays: 24,
        samples,
        ..LinearizeOptions::default()
    }
}

fn axioms() -> Result<(bool, String)> {
    let mut ok = true;
    let mut slowest: f64 = 0.0;
    let mut max: f64 = 0.0;
    for (k, g) in zoo().iter().enumerate() {
        let t = Instant::now();
        let r = check_axioms(g, 200, 1e-10, k as u64)?;
        let dt = t.elapsed().as_secs_f64();
        ok &= r.pass && dt < 5.0;
        slowest = slowest.max(dt);
        max = max.max(worst(&r, &["unit", "inverse", "associativity"]));
    }
    Ok((ok, format!("{} groupoids, worst residual {max:.1e}, slowest {slowest:.2} s", zoo().len())))
}

fn simplicial() -> Result<(bool, String)> {
    let mut ok = true;
    let mut max: f64 = 0.0;
    for g in [so2_plane(), pr_plane(), LieGroupoid::pair(Manifold::sphere(2)), z2_line()] {
        let r = check_simplicial(&g, 200, 1e-10, 5)?;
        ok &= r.pass;
        max = max.max(r.max_defect);
    }
    Ok((ok, format!("worst residual {max:.1e}")))
}

fn explicit_metrics() -> Result<(bool, String)> {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, g) in [("pr", pr_plane()), ("cylinder", cylinder()?.0)] {
        let eta = Metric::euclidean(g.objects());
        let [_, _, m2] = submersion_groupoid_metrics(&g, &eta, &Metric::euclidean(&Manifold::euclidean(1)))?;
        let r = verify_n_metric(&g, &m2, 32, 1e-8, 1);
        let d = [
            worst(&r, &["sym_invariance"]),
            worst(&r, &["face_"]),
            worst(&r, &["cross_face"]),
        ];
        ok &= r.pass && d.iter().all(|&x| x < 1e-8);
        parts.push(format!("{name} {:.1e}/{:.1e}/{:.1e}", d[0], d[1], d[2]));
    }
    Ok((ok, parts.join(", ")))
}

fn gauge_trick() -> Result<(bool, String)> {
    let t = Instant::now();
    let z2 = z2_line();
    let rz = verify_n_metric(&z2, &build_proper_action_2metric(&z2, None, 0)?, 32, 1e-12, 2);
    let so2 = so2_plane();
    let rs = verify_n_metric(&so2, &build_proper_action_2metric(&so2, None, 64)?, 32, 1e-6, 2);
    let dt = t.elapsed().as_secs_f64();
    Ok((
        rz.pass && rs.pass && dt < 60.0,
        format!("Z/2 {:.1e}, SO(2) {:.1e}, {dt:.1} s", rz.max_defect, rs.max_defect),
    ))
}

fn normal_representation() -> Result<(bool, String)> {
    let g = so2_plane();
    let s = unit_circle(&g)?;
    let eta = Metric::from_fn(g.objects(), |x| Matrix::identity(2, 2) * (1.0 + 0.5 * x[0] * x[0]));
    let mut unit: f64 = 0.0;
    for x in s.points(20, 3)? {
        let n = v(&[x[0], x[1]]) * 0.7;
        unit = unit.max((normal_rep(&g, &eta, &s, &g.u(&x), &n)? - &n).norm());
    }
    let gs = restrict_to_saturated(&g, &s)?;
    let tangent = |y: &Vector| Manifold::circle().tangent_basis(y);
    let mut comp: f64 = 0.0;
    for pair in gs.sample_strings(2, 100, 8)? {
        let (a, b) = (&pair[0], &pair[1]);
        let tab = normal_rep_matrix(&g, &eta, &g.multiply(a, b)?, &tangent)?;
        let ta = normal_rep_matrix(&g, &eta, a, &tangent)?;
        let tb = normal_rep_matrix(&g, &eta, b, &tangent)?;
        comp = comp.max((tab - ta * tb).norm());
    }
    Ok((unit < 1e-10 && comp < 1e-6, format!("T_1 {unit:.1e}, T_gh vs T_g T_h {comp:.1e} on 100 pairs")))
}

fn ehresmann() -> Result<(bool, String)> {
    let (g, s) = cylinder()?;
    let eta = Metric::euclidean(g.objects());
    let [_, _, m2] = submersion_groupoid_metrics(&g, &eta, &Metric::euclidean(&Manifold::euclidean(1)))?;
    let res = linearize_exp(&g, &m2, &s, 0.1, &opts(12))?;
    let r = res.report();
    let d = worst(r, &["diagram_source", "diagram_target", "morphism"]);
    let saturated = res.neighborhood().is_some_and(|n| n.certificate().pass) && res.kind() == "invariant";
    Ok((r.pass && d < 1e-6 && saturated, format!("diagram/morphism {d:.1e}, linearization {}", res.kind())))
}

fn slice() -> Result<(bool, String)> {
    let g = so2_plane();
    let s = unit_circle(&g)?;
    let m2 = build_proper_action_2metric(&g, None, 8)?;
    let d = |radius: f64| -> Result<f64> {
        let res = linearize_exp(&g, &m2, &s, radius, &opts(6))?;
        Ok(worst(res.report(), &["morphism"]))
    };
    let (d1, d2) = (d(0.1)?, d(0.05)?);
    Ok((d1 < 1e-4 && d1 >= 2.0 * d2, format!("morphism {d1:.2e} at 0.1, {d2:.2e} at 0.05, ratio {:.2}", d1 / d2)))
}

fn fixed_point() -> Result<(bool, String)> {
    let g = z2_line();
    let m2 = build_proper_action_2metric(&g, None, 0)?;
    let origin = lienf::groupoid::SaturatedSubmanifold::certify(&g, Manifold::finite_set(vec![v(&[0.0])]), vec![v(&[0.0])], 16)?;
    let res = linearize_exp(&g, &m2, &origin, 0.5, &opts(16))?;
    let d = res.report().max_defect;
    Ok((res.report().pass && d < 1e-10, format!("max defect {d:.1e}")))
}

fn geodesics() -> Result<(bool, String)> {
    let g = Metric::euclidean(&Manifold::sphere(2));
    let p = v(&[1.0, 0.0, 0.0]);
    let w = v(&[0.0, 0.6, 0.8]);
    let exact = &p * 1f64.cos() + &w * 1f64.sin();
    let err = |n: usize| -> Result<f64> { Ok((geodesic_exp(&g, &p, &w, n)? - &exact).norm()) };
    let ratio = err(16)? / err(32)?;
    let fine = err(128)?;
    Ok(((12.0..=20.0).contains(&ratio) && fine < 1e-8, format!("halving ratio {ratio:.2}, error {fine:.1e} at 128 steps")))
}

fn holonomy() -> Result<(bool, String)> {
    let f = suspension()?;
    let core = |turns: f64| LeafPath::segment(v(&[0.0, 0.0]), v(&[turns, 0.0]));
    let h1 = linear_holonomy(&f, &core(1.0))?[(0, 0)];
    let h2 = linear_holonomy(&f, &core(2.0))?[(0, 0)];
    Ok(((h1 + 1.0).abs() < 1e-6 && (h2 - 1.0).abs() < 1e-6, format!("one circuit {h1:.9}, two circuits {h2:.9}")))
}

fn leibniz() -> Result<(bool, String)> {
    let g = so2_plane();
    let a: Section = Arc::new(|_| v(&[1.0]));
    let f: ScalarFn = Arc::new(|x| x[0]);
    let r = leibniz_check(&g, &a, &a, &f, 200, 11, 1e-4);
    // non-constant sections exercise the finite-difference terms
    let b: Section = Arc::new(|x| v(&[x[1] * x[0].exp()]));
    let h: ScalarFn = Arc::new(|x| (2.0 * x[0]).sin() + x[1] * x[1]);
    let r2 = leibniz_check(&g, &b, &a, &h, 200, 12, 1e-4);
    Ok((
        r.pass && r2.pass && r.samples == 200,
        format!("residual {:.1e} on {} samples, {:.1e} with varying sections", r.max_defect, r.samples, r2.max_defect),
    ))
}

fn determinism() -> Result<(bool, String)> {
    let sc = Scenario::builtin("ehresmann")?;
    let ov = Overrides {
        seed: Some(17),
        ..Overrides::default()
    };
    let (a, b) = (run(&sc, &ov)?, run(&sc, &ov)?);
    Ok((a.hash == b.hash && a.pass, format!("hash {}", &a.hash[..16])))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<(bool, String)>); 12] = [
        ("groupoid axioms", axioms),
        ("simplicial identities", simplicial),
        ("explicit 2-metrics", explicit_metrics),
        ("gauge trick", gauge_trick),
        ("normal representation", normal_representation),
        ("Ehresmann recovery", ehresmann),
        ("slice recovery", slice),
        ("fixed-point linearization", fixed_point),
        ("geodesic integrator", geodesics),
        ("Bott holonomy", holonomy),
        ("Leibniz identity", leibniz),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
        failed += !ok as usize;
        println!(
            "{} {:>2} {name}: {detail} [{:.1} s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            t.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
