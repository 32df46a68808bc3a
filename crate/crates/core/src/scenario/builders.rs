//! Built-in scenarios.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::sync::Arc;

use super::Check;
use crate::algebroid::{ScalarFn, Section};
use crate::error::{Error, Result};
use crate::foliation::{Deck, Foliation, LeafPath, VectorField};
use crate::groupoid::{Group, GroupAction, LieGroupoid, SaturatedSubmanifold};
use crate::linalg::{Matrix, Vector};
use crate::manifold::{Constrained, LandsIn, Manifold, Metric};
use crate::map::FnMap;
use crate::nmetric::{build_proper_action_2metric, submersion_groupoid_metrics, NMetric};

pub const BUILDERS: &[&str] = &[
    "ehresmann",
    "mobius-holonomy",
    "pr-plane",
    "slice-so2",
    "so2-algebroid",
    "so2-gauge",
    "z2-line",
];

pub struct Loop {
    pub name: String,
    pub path: LeafPath,
    pub expected: Matrix,
}

pub struct Sections {
    pub alpha: Section,
    pub beta: Section,
    pub f: ScalarFn,
}

/// Everything the requested checks need. Fields a builder leaves empty make
/// the corresponding checks fail with a note.
pub struct Setup {
    pub groupoid: Option<LieGroupoid>,
    pub metrics: Vec<NMetric>,
    pub sub: Option<SaturatedSubmanifold>,
    pub radius: f64,
    pub probe_rays: usize,
    pub foliation: Option<Foliation>,
    pub loops: Vec<Loop>,
    pub sections: Option<Sections>,
    pub checks: Vec<Check>,
    defaults: BTreeMap<Check, (f64, usize)>,
}

impl Setup {
    fn new(checks: Vec<Check>) -> Self {
        let defaults = BTreeMap::from([
            (Check::Axioms, (1e-10, 200)),
            (Check::Simplicial, (1e-10, 200)),
            (Check::NMetric, (1e-8, 16)),
            (Check::Linearization, (1e-6, 8)),
            (Check::Holonomy, (1e-6, crate::foliation::TRANSPORT_STEPS)),
            (Check::Algebroid, (1e-4, 200)),
        ]);
        Self {
            groupoid: None,
            metrics: Vec::new(),
            sub: None,
            radius: 0.1,
            probe_rays: 24,
            foliation: None,
            loops: Vec::new(),
            sections: None,
            checks,
            defaults,
        }
    }

    fn default(mut self, check: Check, tol: f64, samples: usize) -> Self {
        self.defaults.insert(check, (tol, samples));
        self
    }

    /// Default `(tolerance, sample budget)` of a check.
    pub fn defaults(&self, check: Check) -> (f64, usize) {
        self.defaults[&check]
    }
}

fn v(x: &[f64]) -> Vector {
    Vector::from_column_slice(x)
}

pub fn so2_plane() -> LieGroupoid {
    LieGroupoid::action(GroupAction::linear(Group::special_orthogonal(2), Manifold::euclidean(2)).expect("linear action")).expect("compact action")
}

pub fn z2_line() -> LieGroupoid {
    LieGroupoid::action(GroupAction::linear(Group::z2(), Manifold::euclidean(1)).expect("linear action")).expect("finite action")
}

pub fn unit_circle(g: &LieGroupoid) -> Result<SaturatedSubmanifold> {
    SaturatedSubmanifold::certify(g, Manifold::circle(), vec![], 32)
}

fn origin(g: &LieGroupoid, n: usize) -> Result<SaturatedSubmanifold> {
    SaturatedSubmanifold::certify(g, Manifold::finite_set(vec![Vector::zeros(n)]), vec![Vector::zeros(n)], 16)
}

/// Submersion groupoid of `S¹ × R → R`, `(c, r) ↦ r`, with the fiber over 0.
pub fn cylinder() -> Result<(LieGroupoid, SaturatedSubmanifold)> {
    let m = Manifold::product(vec![Manifold::circle(), Manifold::euclidean(1)]);
    let pr = FnMap::linear(Matrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0])).into_ref();
    let g = LieGroupoid::submersion(m.clone(), Manifold::euclidean(1), pr.clone(), true)?;
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
    let s = SaturatedSubmanifold::certify(&g, fiber, vec![], 16)?;
    Ok((g, s))
}

/// Covering chart `R × R` of the mapping torus of `y ↦ −y`, foliated by the
/// lines `y = const`; the deck map is `(s, y) ↦ (s − 1, −y)`.
pub fn suspension() -> Result<Foliation> {
    let x: VectorField = Arc::new(|_| v(&[1.0, 0.0]));
    let y: VectorField = Arc::new(|_| v(&[0.0, 1.0]));
    Ok(Foliation::new("suspension of -1", Manifold::euclidean(2), vec![x], vec![y])?.with_deck(Deck {
        point: Arc::new(|p| v(&[p[0] - 1.0, -p[1]])),
        normal: Arc::new(|_| Matrix::from_element(1, 1, -1.0)),
    }))
}

fn param(params: &BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

fn count(params: &BTreeMap<String, f64>, key: &str, default: usize) -> Result<usize> {
    let x = param(params, key, default as f64);
    if x < 0.0 || x.fract() != 0.0 {
        return Err(Error::InvalidParams(format!("{key} must be a non-negative integer, got {x}")));
    }
    Ok(x as usize)
}

fn known_params(name: &str) -> &'static [&'static str] {
    match name {
        "slice-so2" => &["radius", "probe_rays", "nodes"],
        "so2-gauge" => &["nodes"],
        "mobius-holonomy" => &["start"],
        "ehresmann" | "z2-line" => &["radius", "probe_rays"],
        _ => &[],
    }
}

pub fn build(name: &str, params: &BTreeMap<String, f64>) -> Result<Setup> {
    use Check::*;
    if BUILDERS.contains(&name) {
        if let Some(k) = params.keys().find(|k| !known_params(name).contains(&k.as_str())) {
            return Err(Error::InvalidParams(format!("builder {name} takes no parameter {k}")));
        }
    }
    let mut s = match name {
        "ehresmann" => {
            let (g, sub) = cylinder()?;
            let eta = Metric::euclidean(g.objects());
            let eta_n = Metric::euclidean(&Manifold::euclidean(1));
            let metrics = submersion_groupoid_metrics(&g, &eta, &eta_n)?;
            let mut s = Setup::new(vec![Axioms, NMetric, Linearization]).default(Linearization, 1e-6, 12);
            s.groupoid = Some(g);
            s.metrics = metrics.to_vec();
            s.sub = Some(sub);
            s
        }
        "pr-plane" => {
            let pr = FnMap::linear(Matrix::from_row_slice(1, 2, &[1.0, 0.0])).into_ref();
            let g = LieGroupoid::submersion(Manifold::euclidean(2), Manifold::euclidean(1), pr, false)?;
            let eta = Metric::euclidean(g.objects());
            let eta_n = Metric::euclidean(&Manifold::euclidean(1));
            let metrics = submersion_groupoid_metrics(&g, &eta, &eta_n)?;
            let mut s = Setup::new(vec![Axioms, Simplicial, NMetric]);
            s.groupoid = Some(g);
            s.metrics = metrics.to_vec();
            s
        }
        "slice-so2" => {
            let g = so2_plane();
            let m2 = build_proper_action_2metric(&g, None, count(params, "nodes", 8)?)?;
            let mut s = Setup::new(vec![Axioms, Linearization]).default(Linearization, 1e-4, 6);
            s.sub = Some(unit_circle(&g)?);
            s.groupoid = Some(g);
            s.metrics = vec![m2];
            s
        }
        "so2-gauge" => {
            let g = so2_plane();
            let m2 = build_proper_action_2metric(&g, None, count(params, "nodes", 64)?)?;
            let mut s = Setup::new(vec![Axioms, Simplicial, NMetric]).default(NMetric, 1e-6, 16);
            s.groupoid = Some(g);
            s.metrics = vec![m2];
            s
        }
        "z2-line" => {
            let g = z2_line();
            let m2 = build_proper_action_2metric(&g, None, 0)?;
            let mut s = Setup::new(vec![Axioms, Simplicial, NMetric, Linearization])
                .default(NMetric, 1e-12, 16)
                .default(Linearization, 1e-10, 12);
            s.sub = Some(origin(&g, 1)?);
            s.groupoid = Some(g);
            s.metrics = vec![m2];
            s.radius = 0.5;
            s
        }
        "mobius-holonomy" => {
            let f = suspension()?;
            let mut s = Setup::new(vec![Holonomy]);
            // loops run along the core leaf y = 0, the only leaf closing after one circuit
            let s0 = param(params, "start", 0.0);
            for (turns, sign) in [(1.0, -1.0), (2.0, 1.0)] {
                s.loops.push(Loop {
                    name: format!("circuits={turns}"),
                    path: LeafPath::segment(v(&[s0, 0.0]), v(&[s0 + turns, 0.0])),
                    expected: Matrix::from_element(1, 1, sign),
                });
            }
            s.foliation = Some(f);
            s
        }
        "so2-algebroid" => {
            let g = so2_plane();
            let mut s = Setup::new(vec![Algebroid]);
            s.sections = Some(Sections {
                alpha: Arc::new(|_| v(&[1.0])),
                beta: Arc::new(|_| v(&[1.0])),
                f: Arc::new(|x| x[0]),
            });
            s.groupoid = Some(g);
            s
        }
        other => return Err(Error::UnknownBuilder(other.to_string())),
    };
    if let Some(r) = params.get("radius") {
        s.radius = *r;
    }
    s.probe_rays = count(params, "probe_rays", s.probe_rays)?;
    Ok(s)
}
