//! The linear model `G_S ⋉ ν(S)`.

use std::sync::Arc;

use super::bundle::NormalBundle;
use super::normal::normal_rep_with;
use crate::error::Result;
use crate::groupoid::{restrict_to_saturated, GroupoidKind, LieGroupoid, Properness, SaturatedSubmanifold, Structure};
use crate::linalg::{concat, Vector};
use crate::manifold::{Constrained, LandsIn, Manifold, ManifoldKind, Metric};
use crate::map::{block_selector, FnMap};

/// `T_g` evaluated through lifts in the full groupoid, normal spaces taken
/// `η`-orthogonal to `S`.
#[derive(Clone, Debug)]
pub(crate) struct NormalAction {
    pub(crate) g: LieGroupoid,
    pub(crate) eta: Metric,
    pub(crate) sub: Manifold,
}

impl NormalAction {
    pub(crate) fn apply(&self, arrow: &Vector, v: &Vector) -> Result<Vector> {
        let sub = &self.sub;
        normal_rep_with(&self.g, &self.eta, arrow, v, &|y| sub.tangent_basis(y))
    }
}

/// Arrows `(g, v)` with `v ∈ ν_{s(g)}`; objects `(x, v)`.
struct LinearStructure {
    act: NormalAction,
    gs: LieGroupoid,
    na: usize,
    no: usize,
}

impl LinearStructure {
    fn split(&self, a: &Vector) -> (Vector, Vector) {
        (a.rows(0, self.na).into_owned(), a.rows(self.na, self.no).into_owned())
    }

    fn split_object(&self, p: &Vector) -> (Vector, Vector) {
        (p.rows(0, self.no).into_owned(), p.rows(self.no, self.no).into_owned())
    }

    fn act(&self, g: &Vector, v: &Vector) -> Vector {
        self.act
            .apply(g, v)
            .unwrap_or_else(|_| Vector::from_element(self.no, f64::NAN))
    }
}

impl Structure for LinearStructure {
    fn source(&self, a: &Vector) -> Vector {
        let (g, v) = self.split(a);
        concat(&[&self.gs.s(&g), &v])
    }
    fn target(&self, a: &Vector) -> Vector {
        let (g, v) = self.split(a);
        concat(&[&self.gs.t(&g), &self.act(&g, &v)])
    }
    fn unit(&self, p: &Vector) -> Vector {
        let (x, v) = self.split_object(p);
        concat(&[&self.gs.u(&x), &v])
    }
    fn inverse(&self, a: &Vector) -> Vector {
        let (g, v) = self.split(a);
        concat(&[&self.gs.i(&g), &self.act(&g, &v)])
    }
    fn multiply(&self, a: &Vector, b: &Vector) -> Vector {
        let (g, _) = self.split(a);
        let (h, w) = self.split(b);
        concat(&[&self.gs.multiply_unchecked(&g, &h), &w])
    }
    fn arrow_sample_dim(&self) -> usize {
        self.gs.structure().arrow_sample_dim()
    }
    fn arrow_into(&self, p: &Vector, u: &[f64]) -> Option<Vector> {
        let (y, z) = self.split_object(p);
        let h = self.gs.arrow_into(&y, u)?;
        let v = self.act.apply(&self.gs.i(&h), &z).ok()?;
        Some(concat(&[&h, &v]))
    }
}

/// `G_S ⋉ ν(S)` together with the pieces it is built from.
#[derive(Clone, Debug)]
pub struct LinearModel {
    groupoid: LieGroupoid,
    restricted: LieGroupoid,
    bundle: NormalBundle,
}

impl LinearModel {
    /// The model as a Lie groupoid over `ν(S)`.
    pub fn groupoid(&self) -> &LieGroupoid {
        &self.groupoid
    }

    /// `G_S`.
    pub fn restricted(&self) -> &LieGroupoid {
        &self.restricted
    }

    pub fn bundle(&self) -> &NormalBundle {
        &self.bundle
    }

    /// Ambient dimension of arrows of `G`.
    pub fn arrow_ambient_dim(&self) -> usize {
        self.restricted.arrows().ambient_dim()
    }

    /// `(g, v)` as a model arrow.
    pub fn arrow(&self, g: &Vector, v: &Vector) -> Vector {
        concat(&[g, v])
    }

    /// Splits a model arrow into `(g, v)`.
    pub fn split(&self, a: &Vector) -> (Vector, Vector) {
        let na = self.arrow_ambient_dim();
        (a.rows(0, na).into_owned(), a.rows(na, a.len() - na).into_owned())
    }
}

/// Builds `G_S ⋉ ν(S)`, with `T_g` computed in `G` and normal spaces
/// `η`-orthogonal to `S`.
pub fn linear_model(g: &LieGroupoid, s: &SaturatedSubmanifold, eta: &Metric) -> Result<LinearModel> {
    let gs = restrict_to_saturated(g, s)?;
    let bundle = NormalBundle::new(s, eta)?;
    let (na, no) = (g.arrows().ambient_dim(), g.objects().ambient_dim());
    let act = NormalAction {
        g: g.clone(),
        eta: eta.clone(),
        sub: s.manifold().clone(),
    };

    let gs_c = gs.clone();
    let src = FnMap::new(na + no, 2 * no, move |a: &Vector| {
        concat(&[&gs_c.s(&a.rows(0, na).into_owned()), &a.rows(na, no).into_owned()])
    });
    let dim = gs.arrows().intrinsic_dim() + bundle.fiber_dim();
    let mut arrows = Constrained::new(
        format!("{} ×_S ν(S)", gs.arrows().label()),
        Manifold::product(vec![g.arrows().clone(), Manifold::euclidean(no)]),
        vec![
            Arc::new(LandsIn {
                map: block_selector(na + no, 0, na).into_ref(),
                target: gs.arrows().clone(),
            }),
            Arc::new(LandsIn {
                map: src.into_ref(),
                target: bundle.total_space().clone(),
            }),
        ],
        dim,
    )
    .with_kind(ManifoldKind::FiberProduct);

    let st = Arc::new(LinearStructure {
        act,
        gs: gs.clone(),
        na,
        no,
    });
    let od = bundle.total_space().sample_dim();
    let ad = st.arrow_sample_dim();
    let (objects, st_c) = (bundle.total_space().clone(), st.clone());
    arrows = arrows.with_sampler(
        od + ad,
        Arc::new(move |u: &[f64]| {
            let p = objects.sample(&u[..od])?;
            st_c.arrow_into(&p, &u[od..])
        }),
    );

    let flags = g.flags();
    let groupoid = LieGroupoid::from_parts(
        format!("linear model of {} around {}", g.name(), s.manifold().label()),
        GroupoidKind::LinearModel,
        bundle.total_space().clone(),
        Manifold::new(arrows),
        st,
        Properness {
            proper: flags.proper,
            s_proper: flags.s_proper,
        },
    );
    Ok(LinearModel {
        groupoid,
        restricted: gs,
        bundle,
    })
}
