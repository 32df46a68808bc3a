//! Lie groupoids realized on embedded manifolds.
//!
//! Arrows point from source to target and compose right to left: `gh` is
//! defined when `s(g) = t(h)`, and then `s(gh) = s(h)`, `t(gh) = t(g)`.

mod axioms;
mod group;
mod orbit;
mod structures;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::manifold::{Manifold, Point};
use crate::map::{fd_jacobian, MapRef, SmoothMap, FD_STEP};
use crate::sampling::Halton;

pub use axioms::check_axioms;
pub use group::{Group, GroupAction, QuadratureRule};
pub use orbit::{isotropy_sample, orbit_sample, restrict_to_saturated, SaturatedSubmanifold};
pub use structures::{ActionStructure, PairStructure, SubmersionStructure, UnitStructure};

/// Arrows compose when `|s(g) − t(h)|` is below this.
pub const COMPOSABILITY_TOL: f64 = 1e-9;

/// Default sample budget for orbit and isotropy sampling.
pub const DEFAULT_BUDGET: usize = 500;

/// Structure maps of a groupoid in ambient coordinates, with Jacobians.
pub trait Structure: Send + Sync {
    fn source(&self, g: &Vector) -> Vector;
    fn target(&self, g: &Vector) -> Vector;
    fn unit(&self, x: &Vector) -> Vector;
    fn inverse(&self, g: &Vector) -> Vector;
    /// `gh`, without checking composability.
    fn multiply(&self, g: &Vector, h: &Vector) -> Vector;

    fn source_jacobian(&self, g: &Vector) -> Matrix {
        fd_jacobian(|x| self.source(x), g, FD_STEP)
    }
    fn target_jacobian(&self, g: &Vector) -> Matrix {
        fd_jacobian(|x| self.target(x), g, FD_STEP)
    }
    fn unit_jacobian(&self, x: &Vector) -> Matrix {
        fd_jacobian(|y| self.unit(y), x, FD_STEP)
    }
    fn inverse_jacobian(&self, g: &Vector) -> Matrix {
        fd_jacobian(|x| self.inverse(x), g, FD_STEP)
    }
    /// Partial Jacobians of `(g, h) ↦ gh`.
    fn multiply_jacobian(&self, g: &Vector, h: &Vector) -> (Matrix, Matrix) {
        (
            fd_jacobian(|x| self.multiply(x, h), g, FD_STEP),
            fd_jacobian(|x| self.multiply(g, x), h, FD_STEP),
        )
    }

    /// Unit-cube coordinates consumed by [`Structure::arrow_into`].
    fn arrow_sample_dim(&self) -> usize;
    /// An arrow with target `y`, parametrized by unit-cube coordinates.
    fn arrow_into(&self, y: &Vector, u: &[f64]) -> Option<Vector>;

    /// Arrows with target `x` spread over `t⁻¹(x)`.
    fn arrows_into(&self, x: &Vector, budget: usize, seed: u64) -> Vec<Vector> {
        let d = self.arrow_sample_dim();
        if d == 0 {
            return self.arrow_into(x, &[]).into_iter().collect();
        }
        let mut h = Halton::new(d, seed);
        (0..budget)
            .filter_map(|_| self.arrow_into(x, &h.next_point()))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupoidKind {
    Unit,
    Pair,
    Submersion,
    Action,
    Restricted,
    LinearModel,
}

/// Declared properness of the anchor `(s, t)` and of `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Properness {
    pub proper: bool,
    pub s_proper: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupoidDescriptor {
    pub name: String,
    pub kind: GroupoidKind,
    pub objects: String,
    pub object_dim: usize,
    pub arrow_dim: usize,
    pub proper: bool,
    pub s_proper: bool,
}

/// The submersion behind a submersion groupoid.
#[derive(Clone)]
pub struct SubmersionData {
    pub map: MapRef,
    pub base: Manifold,
}

#[derive(Clone)]
pub struct LieGroupoid {
    name: String,
    kind: GroupoidKind,
    objects: Manifold,
    arrows: Manifold,
    structure: Arc<dyn Structure>,
    flags: Properness,
    action: Option<GroupAction>,
    submersion: Option<SubmersionData>,
}

impl fmt::Debug for LieGroupoid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LieGroupoid")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("objects", &self.objects)
            .field("arrows", &self.arrows)
            .field("flags", &self.flags)
            .finish()
    }
}

/// Parameters for [`build_groupoid`].
#[derive(Clone)]
pub enum BuildParams {
    Unit { objects: Manifold },
    Pair { objects: Manifold },
    Submersion { total: Manifold, base: Manifold, map: MapRef, s_proper: bool },
    Action { action: GroupAction },
}

pub fn build_groupoid(params: BuildParams) -> Result<LieGroupoid> {
    match params {
        BuildParams::Unit { objects } => Ok(LieGroupoid::unit(objects)),
        BuildParams::Pair { objects } => Ok(LieGroupoid::pair(objects)),
        BuildParams::Submersion { total, base, map, s_proper } => {
            LieGroupoid::submersion(total, base, map, s_proper)
        }
        BuildParams::Action { action } => LieGroupoid::action(action),
    }
}

impl LieGroupoid {
    /// Assembles a groupoid from parts; builders below cover the standard cases.
    pub fn from_parts(
        name: impl Into<String>,
        kind: GroupoidKind,
        objects: Manifold,
        arrows: Manifold,
        structure: Arc<dyn Structure>,
        flags: Properness,
    ) -> Self {
        Self {
            name: name.into(),
            kind,
            objects,
            arrows,
            structure,
            flags,
            action: None,
            submersion: None,
        }
    }

    /// Only identity arrows.
    pub fn unit(objects: Manifold) -> Self {
        Self::from_parts(
            format!("unit groupoid of {}", objects.label()),
            GroupoidKind::Unit,
            objects.clone(),
            objects,
            Arc::new(UnitStructure),
            Properness {
                proper: true,
                s_proper: true,
            },
        )
    }

    /// One arrow between any two objects. Compact objects make it s-proper.
    pub fn pair(objects: Manifold) -> Self {
        let compact = matches!(
            objects.kind(),
            crate::manifold::ManifoldKind::Sphere
                | crate::manifold::ManifoldKind::MatrixGroup
                | crate::manifold::ManifoldKind::FiniteSet
        );
        let arrows = Manifold::product(vec![objects.clone(), objects.clone()]);
        Self::from_parts(
            format!("pair groupoid of {}", objects.label()),
            GroupoidKind::Pair,
            objects.clone(),
            arrows,
            Arc::new(PairStructure::new(objects)),
            Properness {
                proper: true,
                s_proper: compact,
            },
        )
    }

    /// `M ×_N M` for a submersion `π: M → N`. Always proper; `s_proper`
    /// declares whether `π` is proper.
    pub fn submersion(total: Manifold, base: Manifold, map: MapRef, s_proper: bool) -> Result<Self> {
        let st = SubmersionStructure::new(total.clone(), base.clone(), map.clone());
        let pts = total.sample_points(32, 7).unwrap_or_default();
        for p in &pts {
            st.check_rank(p)?;
        }
        let arrows = st.arrow_manifold();
        let mut g = Self::from_parts(
            format!("submersion groupoid of {} → {}", total.label(), base.label()),
            GroupoidKind::Submersion,
            total,
            arrows,
            Arc::new(st),
            Properness {
                proper: true,
                s_proper,
            },
        );
        g.submersion = Some(SubmersionData { map, base });
        Ok(g)
    }

    /// `K ⋉ M` with `s(k, x) = x`, `t(k, x) = kx`.
    pub fn action(action: GroupAction) -> Result<Self> {
        let report = action.check(64, 11, 1e-9)?;
        if !report.pass {
            return Err(Error::InvalidParams(format!(
                "action laws fail by {:.3e}",
                report.max_defect
            )));
        }
        let compact = action.group().is_compact();
        let st = ActionStructure::new(action.clone());
        let arrows = Manifold::product(vec![action.group().manifold().clone(), action.space().clone()]);
        let mut g = Self::from_parts(
            format!("action groupoid {}", action.label()),
            GroupoidKind::Action,
            action.space().clone(),
            arrows,
            Arc::new(st),
            Properness {
                proper: compact,
                s_proper: compact,
            },
        );
        g.action = Some(action);
        Ok(g)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn kind(&self) -> GroupoidKind {
        self.kind
    }

    pub fn objects(&self) -> &Manifold {
        &self.objects
    }

    pub fn arrows(&self) -> &Manifold {
        &self.arrows
    }

    pub fn flags(&self) -> Properness {
        self.flags
    }

    pub fn structure(&self) -> &Arc<dyn Structure> {
        &self.structure
    }

    pub fn group_action(&self) -> Option<&GroupAction> {
        self.action.as_ref()
    }

    pub fn submersion_data(&self) -> Option<&SubmersionData> {
        self.submersion.as_ref()
    }

    pub fn descriptor(&self) -> GroupoidDescriptor {
        GroupoidDescriptor {
            name: self.name.clone(),
            kind: self.kind,
            objects: self.objects.label(),
            object_dim: self.objects.intrinsic_dim(),
            arrow_dim: self.arrows.intrinsic_dim(),
            proper: self.flags.proper,
            s_proper: self.flags.s_proper,
        }
    }

    pub fn s(&self, g: &Vector) -> Vector {
        self.structure.source(g)
    }
    pub fn t(&self, g: &Vector) -> Vector {
        self.structure.target(g)
    }
    pub fn u(&self, x: &Vector) -> Vector {
        self.structure.unit(x)
    }
    pub fn i(&self, g: &Vector) -> Vector {
        self.structure.inverse(g)
    }
    pub fn ds(&self, g: &Vector) -> Matrix {
        self.structure.source_jacobian(g)
    }
    pub fn dt(&self, g: &Vector) -> Matrix {
        self.structure.target_jacobian(g)
    }
    pub fn du(&self, x: &Vector) -> Matrix {
        self.structure.unit_jacobian(x)
    }
    pub fn di(&self, g: &Vector) -> Matrix {
        self.structure.inverse_jacobian(g)
    }
    pub fn dm(&self, g: &Vector, h: &Vector) -> (Matrix, Matrix) {
        self.structure.multiply_jacobian(g, h)
    }

    pub fn composability_residual(&self, g: &Vector, h: &Vector) -> f64 {
        (self.s(g) - self.t(h)).norm()
    }

    /// `gh`, rejecting pairs with `|s(g) − t(h)| ≥ 1e−9`.
    pub fn multiply(&self, g: &Vector, h: &Vector) -> Result<Vector> {
        let r = self.composability_residual(g, h);
        if r >= COMPOSABILITY_TOL {
            return Err(Error::NotComposable(r));
        }
        Ok(self.structure.multiply(g, h))
    }

    pub fn multiply_unchecked(&self, g: &Vector, h: &Vector) -> Vector {
        self.structure.multiply(g, h)
    }

    pub fn arrow_into(&self, y: &Vector, u: &[f64]) -> Option<Vector> {
        self.structure.arrow_into(y, u)
    }

    /// Wraps an arrow as a [`Point`] after checking membership.
    pub fn arrow_point(&self, g: Vector) -> Result<Point> {
        Point::on(&self.arrows, g)
    }

    pub fn source_map(&self) -> MapRef {
        Arc::new(StructureMap::new(self, Which::Source))
    }
    pub fn target_map(&self) -> MapRef {
        Arc::new(StructureMap::new(self, Which::Target))
    }
    pub fn unit_map(&self) -> MapRef {
        Arc::new(StructureMap::new(self, Which::Unit))
    }
    pub fn inverse_map(&self) -> MapRef {
        Arc::new(StructureMap::new(self, Which::Inverse))
    }

    /// `n` composable strings `(g₁, …, g_len)` with `s(g_i) = t(g_{i+1})`.
    pub fn sample_strings(&self, len: usize, n: usize, seed: u64) -> Result<Vec<Vec<Vector>>> {
        let od = self.objects.sample_dim();
        let ad = self.structure.arrow_sample_dim();
        let mut h = Halton::new((od + len * ad).max(1), seed);
        let fail = || Error::SamplingFailure(format!("cannot sample arrows of {}", self.name));
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let u = h.next_point();
            let mut x = self.objects.sample(&u[..od]).ok_or_else(fail)?;
            let mut string = Vec::with_capacity(len);
            for k in 0..len {
                let g = self
                    .arrow_into(&x, &u[od + k * ad..od + (k + 1) * ad])
                    .ok_or_else(fail)?;
                x = self.s(&g);
                string.push(g);
            }
            out.push(string);
        }
        Ok(out)
    }

    pub fn sample_arrows(&self, n: usize, seed: u64) -> Result<Vec<Vector>> {
        Ok(self
            .sample_strings(1, n, seed)?
            .into_iter()
            .map(|mut s| s.remove(0))
            .collect())
    }

    /// A copy whose multiplication adds `delta` to the first coordinate.
    pub fn with_corrupted_multiply(&self, delta: f64) -> Self {
        let mut g = self.clone();
        g.structure = Arc::new(Corrupted {
            inner: self.structure.clone(),
            delta,
        });
        g.name = format!("{} (corrupted multiply)", self.name);
        g
    }

    pub(crate) fn restricted(&self, objects: Manifold, arrows: Manifold) -> Self {
        let mut g = self.clone();
        g.name = format!("{} restricted to {}", self.name, objects.label());
        g.kind = GroupoidKind::Restricted;
        g.objects = objects;
        g.arrows = arrows;
        g
    }
}

#[derive(Debug, Clone, Copy)]
enum Which {
    Source,
    Target,
    Unit,
    Inverse,
}

struct StructureMap {
    st: Arc<dyn Structure>,
    which: Which,
    domain: usize,
    codomain: usize,
}

impl StructureMap {
    fn new(g: &LieGroupoid, which: Which) -> Self {
        let (na, no) = (g.arrows.ambient_dim(), g.objects.ambient_dim());
        let (domain, codomain) = match which {
            Which::Source | Which::Target => (na, no),
            Which::Unit => (no, na),
            Which::Inverse => (na, na),
        };
        Self {
            st: g.structure.clone(),
            which,
            domain,
            codomain,
        }
    }
}

impl SmoothMap for StructureMap {
    fn domain_dim(&self) -> usize {
        self.domain
    }
    fn codomain_dim(&self) -> usize {
        self.codomain
    }
    fn eval(&self, x: &Vector) -> Vector {
        match self.which {
            Which::Source => self.st.source(x),
            Which::Target => self.st.target(x),
            Which::Unit => self.st.unit(x),
            Which::Inverse => self.st.inverse(x),
        }
    }
    fn jacobian(&self, x: &Vector) -> Matrix {
        match self.which {
            Which::Source => self.st.source_jacobian(x),
            Which::Target => self.st.target_jacobian(x),
            Which::Unit => self.st.unit_jacobian(x),
            Which::Inverse => self.st.inverse_jacobian(x),
        }
    }
}

struct Corrupted {
    inner: Arc<dyn Structure>,
    delta: f64,
}

impl Structure for Corrupted {
    fn source(&self, g: &Vector) -> Vector {
        self.inner.source(g)
    }
    fn target(&self, g: &Vector) -> Vector {
        self.inner.target(g)
    }
    fn unit(&self, x: &Vector) -> Vector {
        self.inner.unit(x)
    }
    fn inverse(&self, g: &Vector) -> Vector {
        self.inner.inverse(g)
    }
    fn multiply(&self, g: &Vector, h: &Vector) -> Vector {
        let mut p = self.inner.multiply(g, h);
        p[0] += self.delta;
        p
    }
    fn source_jacobian(&self, g: &Vector) -> Matrix {
        self.inner.source_jacobian(g)
    }
    fn target_jacobian(&self, g: &Vector) -> Matrix {
        self.inner.target_jacobian(g)
    }
    fn unit_jacobian(&self, x: &Vector) -> Matrix {
        self.inner.unit_jacobian(x)
    }
    fn inverse_jacobian(&self, g: &Vector) -> Matrix {
        self.inner.inverse_jacobian(g)
    }
    fn multiply_jacobian(&self, g: &Vector, h: &Vector) -> (Matrix, Matrix) {
        self.inner.multiply_jacobian(g, h)
    }
    fn arrow_sample_dim(&self) -> usize {
        self.inner.arrow_sample_dim()
    }
    fn arrow_into(&self, y: &Vector, u: &[f64]) -> Option<Vector> {
        self.inner.arrow_into(y, u)
    }
    fn arrows_into(&self, x: &Vector, budget: usize, seed: u64) -> Vec<Vector> {
        self.inner.arrows_into(x, budget, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    #[test]
    fn unit_groupoid_multiplies_identities() {
        let g = LieGroupoid::unit(Manifold::euclidean(1));
        let x = v(&[0.7]);
        assert_eq!(g.multiply(&g.u(&x), &g.u(&x)).unwrap(), g.u(&x));
    }

    #[test]
    fn pair_groupoid_concatenates() {
        let g = LieGroupoid::pair(Manifold::euclidean(1));
        // (y, z)·(x, y) = (x, z) with arrows written (source, target).
        let p = g.multiply(&v(&[1.0, 2.0]), &v(&[0.0, 1.0])).unwrap();
        assert_eq!(p, v(&[0.0, 2.0]));
        assert!(matches!(
            g.multiply(&v(&[1.0, 2.0]), &v(&[0.0, 3.0])),
            Err(Error::NotComposable(_))
        ));
    }

    #[test]
    fn z2_action_composition() {
        let g = LieGroupoid::action(GroupAction::linear(Group::z2(), Manifold::euclidean(1)).unwrap()).unwrap();
        // (−1, −3) after (−1, 3): s(−1, −3) = −3 = t(−1, 3).
        let p = g.multiply(&v(&[-1.0, -3.0]), &v(&[-1.0, 3.0])).unwrap();
        assert_eq!(p, v(&[1.0, 3.0]));
    }

    #[test]
    fn sampled_strings_are_composable() {
        let g = LieGroupoid::action(
            GroupAction::linear(Group::special_orthogonal(2), Manifold::euclidean(2)).unwrap(),
        )
        .unwrap();
        for s in g.sample_strings(3, 20, 4).unwrap() {
            assert!(g.composability_residual(&s[0], &s[1]) < 1e-14);
            assert!(g.composability_residual(&s[1], &s[2]) < 1e-14);
        }
    }

    #[test]
    fn translation_action_is_not_proper() {
        let g = LieGroupoid::action(GroupAction::translation(1)).unwrap();
        assert!(!g.flags().proper);
    }

    #[test]
    fn descriptor_serializes() {
        let g = LieGroupoid::pair(Manifold::circle());
        let json = serde_json::to_string(&g.descriptor()).unwrap();
        assert!(json.contains("\"kind\":\"pair\""));
        assert!(json.contains("\"s_proper\":true"));
    }
}
