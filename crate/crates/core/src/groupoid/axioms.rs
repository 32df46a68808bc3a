use rayon::prelude::*;

use super::LieGroupoid;
use crate::error::Result;
use crate::linalg::{sorted_svd, Vector};
use crate::report::Report;

struct TripleResiduals {
    unit: f64,
    inverse: f64,
    assoc: f64,
    rank: f64,
    min_sv: f64,
}

fn residuals(g: &LieGroupoid, a: &Vector, b: &Vector, c: &Vector) -> TripleResiduals {
    let x = g.s(a);
    let y = g.t(a);
    let ux = g.u(&x);
    let unit = [
        (g.s(&ux) - &x).norm(),
        (g.t(&ux) - &x).norm(),
        (g.multiply_unchecked(&g.u(&y), a) - a).norm(),
        (g.multiply_unchecked(a, &ux) - a).norm(),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    let ia = g.i(a);
    let inverse = [
        (g.multiply_unchecked(a, &ia) - g.u(&y)).norm(),
        (g.multiply_unchecked(&ia, a) - &ux).norm(),
        (g.i(&ia) - a).norm(),
        (g.t(&ia) - &x).norm(),
        (g.s(&ia) - &y).norm(),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    let left = g.multiply_unchecked(&g.multiply_unchecked(a, b), c);
    let right = g.multiply_unchecked(a, &g.multiply_unchecked(b, c));
    let assoc = (left - right).norm();

    let dim = g.objects().intrinsic_dim();
    let basis = g.arrows().tangent_basis(a);
    let mut min_sv = f64::INFINITY;
    for j in [g.ds(a), g.dt(a)] {
        let (s, _) = sorted_svd(&(j * &basis));
        let sv = if dim == 0 { f64::INFINITY } else { s.get(dim - 1).copied().unwrap_or(0.0) };
        min_sv = min_sv.min(sv);
    }
    let rank = if min_sv > 1e-8 { 0.0 } else { 1.0 };
    TripleResiduals {
        unit,
        inverse,
        assoc,
        rank,
        min_sv,
    }
}

/// Sampled residuals of the unit, inverse and associativity laws, plus the
/// rank of `ds` and `dt` on the arrow tangent spaces.
pub fn check_axioms(g: &LieGroupoid, n_samples: usize, tol: f64, seed: u64) -> Result<Report> {
    let triples = g.sample_strings(3, n_samples, seed)?;
    let res: Vec<TripleResiduals> = triples
        .par_iter()
        .map(|t| residuals(g, &t[0], &t[1], &t[2]))
        .collect();
    let col = |f: fn(&TripleResiduals) -> f64| res.iter().map(f).collect::<Vec<_>>();
    let min_sv = res.iter().map(|r| r.min_sv).fold(f64::INFINITY, f64::min);
    let rank = Report::from_defects("submersive_s_t", col(|r| r.rank), 0.5)
        .with_data("min_singular_value", if min_sv.is_finite() { min_sv } else { -1.0 });
    let report = Report::combine(
        "check_axioms",
        vec![
            Report::from_defects("unit", col(|r| r.unit), tol),
            Report::from_defects("inverse", col(|r| r.inverse), tol),
            Report::from_defects("associativity", col(|r| r.assoc), tol),
            rank,
        ],
    );
    Ok(report.with_data("groupoid", g.descriptor()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::{Group, GroupAction};
    use crate::manifold::Manifold;

    #[test]
    fn pair_groupoid_on_circle_passes_500_triples() {
        let g = LieGroupoid::pair(Manifold::circle());
        let r = check_axioms(&g, 500, 1e-10, 1).unwrap();
        assert!(r.pass, "{}", r.to_json());
        assert_eq!(r.samples, 500);
    }

    #[test]
    fn corrupted_multiply_fails_associativity_by_delta() {
        let g = LieGroupoid::action(GroupAction::linear(Group::special_orthogonal(2), Manifold::euclidean(2)).unwrap())
            .unwrap()
            .with_corrupted_multiply(1e-3);
        let r = check_axioms(&g, 50, 1e-10, 2).unwrap();
        assert!(!r.pass);
        let a = r.component("associativity").unwrap();
        assert!(a.max_defect > 0.5e-3 && a.max_defect < 5e-3, "{}", a.max_defect);
    }
}
