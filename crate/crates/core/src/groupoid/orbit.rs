//! Orbits, isotropy, saturated submanifolds and restriction.

use std::sync::Arc;

use super::{GroupoidKind, LieGroupoid};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::manifold::{Constrained, LandsIn, Manifold, ManifoldKind};
use crate::report::Report;

/// Orbit points `s(t⁻¹(x))`, at most `budget` of them.
pub fn orbit_sample(g: &LieGroupoid, x: &Vector, budget: usize) -> Vec<Vector> {
    if g.kind() == GroupoidKind::Unit {
        return vec![x.clone()];
    }
    g.structure()
        .arrows_into(x, budget, 0)
        .iter()
        .take(budget)
        .map(|a| g.s(a))
        .collect()
}

/// Arrows from `x` to `x` found among the unit and the sampled arrows into `x`.
pub fn isotropy_sample(g: &LieGroupoid, x: &Vector, budget: usize) -> Vec<Vector> {
    let tol = 1e-9;
    let mut out: Vec<Vector> = Vec::new();
    let candidates = std::iter::once(g.u(x)).chain(g.structure().arrows_into(x, budget, 0));
    for a in candidates {
        if (g.s(&a) - x).norm() < tol
            && (g.t(&a) - x).norm() < tol
            && out.iter().all(|b| (b - &a).norm() > 1e-12)
        {
            out.push(a);
        }
    }
    out
}

/// A submanifold `S ⊂ M` certified to be a union of orbits on samples.
#[derive(Debug, Clone)]
pub struct SaturatedSubmanifold {
    parent: Manifold,
    manifold: Manifold,
    seeds: Vec<Vector>,
    certificate: Report,
}

impl SaturatedSubmanifold {
    /// Tolerance on orbit escape.
    pub const TOL: f64 = 1e-8;

    /// Checks that orbits through `seeds` (and through sampled points of `s`,
    /// when it has a sampler) stay in `s`.
    pub fn certify(g: &LieGroupoid, s: Manifold, seeds: Vec<Vector>, budget: usize) -> Result<Self> {
        let mut pts = seeds.clone();
        if s.sample_dim() > 0 {
            pts.extend(s.sample_points(16, 5)?);
        }
        if pts.is_empty() {
            return Err(Error::SamplingFailure("saturation check needs seed points".into()));
        }
        let mut defects = Vec::new();
        for p in &pts {
            let start = s.membership_residual(p);
            let worst = orbit_sample(g, p, budget)
                .iter()
                .map(|q| s.membership_residual(q))
                .fold(start, f64::max);
            defects.push(worst);
        }
        let certificate = Report::from_defects("saturation", defects, Self::TOL);
        if !certificate.pass {
            return Err(Error::NotSaturated {
                distance: certificate.max_defect,
            });
        }
        Ok(Self {
            parent: g.objects().clone(),
            manifold: s,
            seeds,
            certificate,
        })
    }

    pub fn parent(&self) -> &Manifold {
        &self.parent
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn seeds(&self) -> &[Vector] {
        &self.seeds
    }

    pub fn certificate(&self) -> &Report {
        &self.certificate
    }

    /// Seeds plus sampled member points.
    pub fn points(&self, n: usize, seed: u64) -> Result<Vec<Vector>> {
        let mut out = self.seeds.clone();
        if self.manifold.sample_dim() > 0 {
            out.extend(self.manifold.sample_points(n, seed)?);
        }
        Ok(out)
    }
}

/// `G_S = s⁻¹(S)` over a saturated `S`.
pub fn restrict_to_saturated(g: &LieGroupoid, s: &SaturatedSubmanifold) -> Result<LieGroupoid> {
    let sub = s.manifold().clone();
    let dim = g.arrows().intrinsic_dim() - g.objects().intrinsic_dim() + sub.intrinsic_dim();
    let sd = sub.sample_dim();
    let ad = g.structure().arrow_sample_dim();
    let (st, sub_c) = (g.structure().clone(), sub.clone());
    let mut arrows = Constrained::new(
        format!("s⁻¹({})", sub.label()),
        g.arrows().clone(),
        vec![Arc::new(LandsIn {
            map: g.source_map(),
            target: sub.clone(),
        })],
        dim,
    )
    .with_kind(ManifoldKind::FiberProduct);
    if sd > 0 || sub.kind() == ManifoldKind::FiniteSet {
        let sd = sub.sample_dim();
        arrows = arrows.with_sampler(
            sd + ad,
            Arc::new(move |u: &[f64]| {
                let x = sub_c.sample(&u[..sd])?;
                st.arrow_into(&x, &u[sd..])
            }),
        );
    }
    Ok(g.restricted(sub, Manifold::new(arrows)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::{check_axioms, Group, GroupAction};
    use crate::linalg::Matrix;
    use crate::map::FnMap;

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    fn so2_plane() -> LieGroupoid {
        LieGroupoid::action(GroupAction::linear(Group::special_orthogonal(2), Manifold::euclidean(2)).unwrap()).unwrap()
    }

    #[test]
    fn orbits() {
        let unit = LieGroupoid::unit(Manifold::euclidean(2));
        assert_eq!(orbit_sample(&unit, &v(&[1.0, 2.0]), 10), vec![v(&[1.0, 2.0])]);

        let orbit = orbit_sample(&so2_plane(), &v(&[1.0, 0.0]), 64);
        assert_eq!(orbit.len(), 64);
        let spread = orbit.iter().map(|p| (p.norm() - 1.0).abs()).fold(0.0, f64::max);
        assert!(spread < 1e-9);

        let pr = FnMap::linear(Matrix::from_row_slice(1, 2, &[1.0, 0.0])).into_ref();
        let sub = LieGroupoid::submersion(Manifold::euclidean(2), Manifold::euclidean(1), pr, false).unwrap();
        let fiber = orbit_sample(&sub, &v(&[0.0, 5.0]), 50);
        assert!(fiber.iter().all(|p| p[0].abs() < 1e-12));
        let ys: Vec<f64> = fiber.iter().map(|p| p[1]).collect();
        assert!(ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - ys.iter().cloned().fold(f64::INFINITY, f64::min) > 1.0);
    }

    #[test]
    fn isotropy() {
        let pair = LieGroupoid::pair(Manifold::euclidean(1));
        assert_eq!(isotropy_sample(&pair, &v(&[0.4]), 100), vec![v(&[0.4, 0.4])]);

        let iso = isotropy_sample(&so2_plane(), &v(&[0.0, 0.0]), 64);
        assert_eq!(iso.len(), 64);

        let z2 = LieGroupoid::action(GroupAction::linear(Group::z2(), Manifold::euclidean(1)).unwrap()).unwrap();
        assert_eq!(isotropy_sample(&z2, &v(&[3.0]), 10), vec![v(&[1.0, 3.0])]);
        assert_eq!(isotropy_sample(&z2, &v(&[0.0]), 10).len(), 2);
    }

    #[test]
    fn restriction_to_unit_circle_is_transitive() {
        let g = so2_plane();
        let s = SaturatedSubmanifold::certify(&g, Manifold::circle(), vec![], 64).unwrap();
        let gs = restrict_to_saturated(&g, &s).unwrap();
        assert_eq!(gs.arrows().intrinsic_dim(), 2);
        let r = check_axioms(&gs, 100, 1e-10, 3).unwrap();
        assert!(r.pass);
        for a in gs.sample_arrows(20, 4).unwrap() {
            assert!(gs.arrows().contains(&a));
            assert!((gs.t(&a).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn restriction_to_fiber_is_pair_groupoid_of_fiber() {
        let pr = FnMap::linear(Matrix::from_row_slice(1, 2, &[1.0, 0.0])).into_ref();
        let g = LieGroupoid::submersion(Manifold::euclidean(2), Manifold::euclidean(1), pr.clone(), false).unwrap();
        let fiber = Manifold::new(
            Constrained::new(
                "{0} × R",
                Manifold::euclidean(2),
                vec![Arc::new(LandsIn {
                    map: pr,
                    target: Manifold::finite_set(vec![v(&[0.0])]),
                })],
                1,
            )
            .with_sampler(1, Arc::new(|u: &[f64]| Some(v(&[0.0, 4.0 * u[0] - 2.0])))),
        );
        let s = SaturatedSubmanifold::certify(&g, fiber, vec![], 50).unwrap();
        let gs = restrict_to_saturated(&g, &s).unwrap();
        // Arrows ((0, a), (0, b)): every pair of fiber points, i.e. the pair groupoid.
        assert_eq!(gs.arrows().intrinsic_dim(), 2);
        for a in gs.sample_arrows(30, 1).unwrap() {
            assert!(a[0].abs() < 1e-12 && a[2].abs() < 1e-12);
        }
        let b = v(&[0.0, -1.5, 0.0, 0.7]);
        assert!(gs.arrows().contains(&b));
    }

    #[test]
    fn non_saturated_line_is_rejected() {
        let g = so2_plane();
        let line = Manifold::new(Constrained::new(
            "x = 1",
            Manifold::euclidean(2),
            vec![Arc::new(LandsIn {
                map: FnMap::linear(Matrix::from_row_slice(1, 2, &[1.0, 0.0])).into_ref(),
                target: Manifold::finite_set(vec![v(&[1.0])]),
            })],
            1,
        ));
        let e = SaturatedSubmanifold::certify(&g, line, vec![v(&[1.0, 0.0])], 32).unwrap_err();
        assert!(matches!(e, Error::NotSaturated { distance } if distance > 0.1));
    }
}
