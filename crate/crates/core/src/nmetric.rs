//! Metrics on the nerve: explicit formulas for submersion groupoids,
//! averaging over compact groups, the gauge-trick 2-metric for proper action
//! groupoids, verification and induced lower metrics.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groupoid::{GroupAction, LieGroupoid, QuadratureRule};
use crate::linalg::{sym_eigenvalues, Matrix, Vector};
use crate::linearize::{normal_rep_matrix, orbit_tangent, orthogonality_defect};
use crate::manifold::{riemannian_submersion_check, Metric, PullbackCombination, Pushforward, Section};
use crate::map::{block_selector, Composed, FnMap, MapRef, SmoothMap};
use crate::nerve::{
    gauge_space, nerve_space, CanonicalLift, DegeneracyMap, FaceMap, GaugeProjection, ObjectMap, Permutation, SymAction,
    TuplePermutation,
};
use crate::report::Report;

/// Tolerance for the precondition of the explicit submersion formulas.
pub const EXPLICIT_TOL: f64 = 1e-8;

/// Tolerance for the consistency check of the gauge-trick pushforward.
pub const PUSHFORWARD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ExplicitFormula,
    GaugeTrick,
    Induced,
    User,
}

/// A metric on `G^(n)` together with where it came from.
#[derive(Debug, Clone)]
pub struct NMetric {
    level: usize,
    metric: Metric,
    provenance: Provenance,
    certificate: Option<Report>,
}

impl NMetric {
    pub fn new(level: usize, metric: Metric, provenance: Provenance) -> Self {
        Self {
            level,
            metric,
            provenance,
            certificate: None,
        }
    }

    pub fn with_certificate(mut self, r: Report) -> Self {
        self.certificate = Some(r);
        self
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn certificate(&self) -> Option<&Report> {
        self.certificate.as_ref()
    }

    pub fn descriptor(&self) -> serde_json::Value {
        serde_json::json!({
            "level": self.level,
            "provenance": self.provenance,
            "metric": self.metric.describe(),
            "manifold": self.metric.manifold().label(),
        })
    }
}

/// `η^(n) = Σ_k x_k*η − n·(π∘x₀)*η_N` on `G^(n)`; `x_k` are the string objects.
fn explicit_level(g: &LieGroupoid, n: usize, eta: &Metric, eta_n: &Metric, map: &MapRef) -> Result<Metric> {
    if n == 0 {
        return Ok(eta.clone());
    }
    let mut terms: Vec<(f64, MapRef, Metric)> = Vec::new();
    for k in 0..=n {
        terms.push((1.0, Arc::new(ObjectMap::new(g, n, k)?), eta.clone()));
    }
    let base: MapRef = Arc::new(Composed {
        outer: map.clone(),
        inner: Arc::new(ObjectMap::new(g, n, 0)?),
    });
    terms.push((-(n as f64), base, eta_n.clone()));
    Ok(Metric::new(
        PullbackCombination::new(nerve_space(g, n), terms).with_label(format!("explicit η^({n})")),
    ))
}

/// The explicit 0-, 1- and 2-metrics of the submersion groupoid `M ×_N M`.
pub fn submersion_groupoid_metrics(g: &LieGroupoid, eta: &Metric, eta_n: &Metric) -> Result<[NMetric; 3]> {
    let data = g
        .submersion_data()
        .ok_or_else(|| Error::InvalidParams("explicit formulas need a submersion groupoid".into()))?;
    let samples = g.objects().sample_points(32, 11)?;
    let check = riemannian_submersion_check(&data.map, eta, eta_n, &samples, EXPLICIT_TOL)?;
    if !check.pass {
        return Err(Error::NotRiemannianSubmersion(check.max_defect));
    }
    let mk = |n| -> Result<NMetric> {
        Ok(NMetric::new(n, explicit_level(g, n, eta, eta_n, &data.map)?, Provenance::ExplicitFormula))
    };
    Ok([mk(0)?, mk(1)?, mk(2)?])
}

/// `Σ w_k (Φ_k)* g` over the nodes of `quad`.
pub fn average_metric(g: &Metric, action: &GroupAction, quad: &QuadratureRule) -> Result<Metric> {
    let n = g.manifold().ambient_dim();
    if action.space().ambient_dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: action.space().ambient_dim(),
        });
    }
    let gm = action.group().manifold();
    let mut terms: Vec<(f64, MapRef, Metric)> = Vec::with_capacity(quad.len());
    for (k, &w) in quad.nodes.iter().zip(&quad.weights) {
        let r = gm.membership_residual(k);
        if r > 1e-8 {
            return Err(Error::QuadratureInvalid(format!("node off the group by {r:.3e}")));
        }
        let (a1, a2) = (action.clone(), action.clone());
        let (k1, k2) = (k.clone(), k.clone());
        let phi = FnMap::new(n, n, move |x| a1.act(&k1, x)).with_jacobian(move |x| a2.jacobians(&k2, x).1);
        terms.push((w, phi.into_ref(), g.clone()));
    }
    Ok(Metric::new(
        PullbackCombination::new(g.manifold().clone(), terms).with_label(format!("average over {}", action.group().label())),
    ))
}

/// Right translation of `m`-tuples of arrows by `K`: `(k_i, x) ↦ (k_i κ, κ⁻¹x)`.
pub fn right_gauge_action(g: &LieGroupoid, action: &GroupAction, m: usize) -> GroupAction {
    let group = action.group().clone();
    let ka = group.ambient_dim();
    let na = g.arrows().ambient_dim();
    let no = na - ka;
    let (ga, aa) = (group.clone(), action.clone());
    let act = move |kappa: &Vector, tuple: &Vector| {
        let inv = ga.inv(kappa);
        let mut out = tuple.clone();
        for i in 0..m {
            let k = tuple.rows(i * na, ka).into_owned();
            let x = tuple.rows(i * na + ka, no).into_owned();
            out.rows_mut(i * na, ka).copy_from(&ga.mul(&k, kappa));
            out.rows_mut(i * na + ka, no).copy_from(&aa.act(&inv, &x));
        }
        out
    };
    let (gj, aj) = (group.clone(), action.clone());
    let jac = move |kappa: &Vector, tuple: &Vector| {
        let inv = gj.inv(kappa);
        let dinv = gj.inv_jacobian(kappa);
        let mut dk = Matrix::zeros(m * na, ka);
        let mut dx = Matrix::zeros(m * na, m * na);
        for i in 0..m {
            let k = tuple.rows(i * na, ka).into_owned();
            let x = tuple.rows(i * na + ka, no).into_owned();
            let (ml, mr) = gj.mul_jacobian(&k, kappa);
            let (ak, ax) = aj.jacobians(&inv, &x);
            dx.view_mut((i * na, i * na), (ka, ka)).copy_from(&ml);
            dx.view_mut((i * na + ka, i * na + ka), (no, no)).copy_from(&ax);
            dk.view_mut((i * na, 0), (ka, ka)).copy_from(&mr);
            dk.view_mut((i * na + ka, 0), (no, ka)).copy_from(&(ak * &dinv));
        }
        (dk, dx)
    };
    let space = if m == 1 { g.arrows().clone() } else { gauge_space(g, m) };
    GroupAction::new(group, space, act, jac)
}

/// Builds a 2-metric on a proper action groupoid `K ⋉ M` by averaging a
/// product metric on `G^[3]` and pushing it down along `π^(2)`.
/// `base` defaults to the ambient Euclidean metric on `M`; `nodes` sets the
/// circle quadrature size (ignored for finite groups).
pub fn build_proper_action_2metric(g: &LieGroupoid, base: Option<&Metric>, nodes: usize) -> Result<NMetric> {
    let action = g
        .group_action()
        .ok_or_else(|| Error::InvalidParams("gauge trick needs an action groupoid".into()))?;
    let group = action.group();
    if !group.is_compact() {
        return Err(Error::NotCompactGroup);
    }
    let quad = group.haar(nodes)?;
    let eta_m = base.cloned().unwrap_or_else(|| Metric::euclidean(g.objects()));

    let ka = group.ambient_dim();
    let na = g.arrows().ambient_dim();
    let no = na - ka;
    let arrow_metric = Metric::new(
        PullbackCombination::new(
            g.arrows().clone(),
            vec![
                (1.0, block_selector(na, 0, ka).into_ref(), Metric::euclidean(group.manifold())),
                (1.0, block_selector(na, ka, no).into_ref(), eta_m),
            ],
        )
        .with_label("bi-invariant ⊕ source metric"),
    );

    // The diagonal right action is factorwise, so averaging the product metric
    // on G^[3] equals taking the product of right-averaged arrow metrics. The
    // right average moves sources by κ⁻¹, which averages the M factor over K.
    let right = right_gauge_action(g, action, 1);
    let arrow_avg = average_metric(&arrow_metric, &right, &quad)?.cached(16);
    let tuples = gauge_space(g, 3);
    let k_avg = Metric::new(
        PullbackCombination::new(
            tuples.clone(),
            (0..3)
                .map(|i| (1.0 / 3.0, block_selector(3 * na, i * na, na).into_ref(), arrow_avg.clone()))
                .collect(),
        )
        .with_label("normalized product of right-averaged arrow metrics on G^[3]"),
    );
    let perms = Permutation::all(3);
    let w = 1.0 / perms.len() as f64;
    let sym = Metric::new(
        PullbackCombination::new(
            tuples.clone(),
            perms
                .into_iter()
                .map(|p| (w, Arc::new(TuplePermutation::new(g, p)) as MapRef, k_avg.clone()))
                .collect(),
        )
        .with_label("S_3-averaged"),
    )
    .cached(8);

    let lift = CanonicalLift::new(g, 2);
    let section: Section = Arc::new(move |y: &Vector| Ok(lift.eval(y)));
    let proj: MapRef = Arc::new(GaugeProjection::new(g, 2));
    let eta2 = Metric::new(Pushforward::new(nerve_space(g, 2), sym.clone(), proj.clone(), section).with_label("gauge-trick η^(2)"));

    let pts = tuples.sample_points(8, 17)?;
    let check = riemannian_submersion_check(&proj, &sym, &eta2, &pts, PUSHFORWARD_TOL)?;
    if !check.pass {
        return Err(Error::PushforwardInconsistent(check.max_defect));
    }
    Ok(NMetric::new(2, eta2, Provenance::GaugeTrick).with_certificate(check))
}

/// Pushforward of an `n`-metric along `ε_face`, read off at the unit-inserting section.
fn pushforward_along_face(g: &LieGroupoid, candidate: &NMetric, face: usize) -> Result<(MapRef, Metric)> {
    let n = candidate.level;
    if n == 0 {
        return Err(Error::IndexOutOfRange { index: face, level: 0 });
    }
    let f: MapRef = Arc::new(FaceMap::new(g, n, face)?);
    let sec_map = DegeneracyMap::insert_unit(g, n - 1, face.min(n - 1))?;
    let section: Section = Arc::new(move |y: &Vector| Ok(sec_map.eval(y)));
    let lower = Metric::new(
        Pushforward::new(nerve_space(g, n - 1), candidate.metric.clone(), f.clone(), section)
            .with_label(format!("induced from ε_{face}")),
    );
    Ok((f, lower))
}

/// The metric on `G^(n−1)` making `ε_face` a Riemannian submersion; fails if
/// the face does not qualify on `samples` sampled strings.
pub fn induce_lower_metric(g: &LieGroupoid, candidate: &NMetric, face: usize, samples: usize, tol: f64) -> Result<NMetric> {
    let (f, lower) = pushforward_along_face(g, candidate, face)?;
    let pts = nerve_space(g, candidate.level).sample_points(samples, 23)?;
    let check = riemannian_submersion_check(&f, &candidate.metric, &lower, &pts, tol)?;
    if !check.pass {
        return Err(Error::FaceNotSubmersive(face));
    }
    let mut comps = vec![check.clone()];
    if candidate.level >= 1 {
        comps.push(cross_face_report(g, candidate, &lower, &pts, tol)?);
    }
    Ok(NMetric::new(candidate.level - 1, lower, Provenance::Induced).with_certificate(Report::combine("induce_lower_metric", comps)))
}

/// Largest absolute eigenvalue of `a − b`.
fn spectral_gap(a: &Matrix, b: &Matrix) -> f64 {
    sym_eigenvalues(&(a - b)).iter().fold(0.0, |m, l| m.max(l.abs()))
}

fn cross_face_report(g: &LieGroupoid, candidate: &NMetric, reference: &Metric, pts: &[Vector], tol: f64) -> Result<Report> {
    let n = candidate.level;
    let lowers: Vec<Metric> = (0..=n)
        .map(|i| pushforward_along_face(g, candidate, i).map(|(_, m)| m))
        .collect::<Result<_>>()?;
    let face0 = FaceMap::new(g, n, 0)?;
    let defects: Result<Vec<f64>> = pts
        .par_iter()
        .map(|p| {
            let q = face0.eval(p);
            let b = reference.manifold().tangent_basis(&q);
            let g0 = reference.gram(&q, &b)?;
            let mut worst: f64 = 0.0;
            for m in &lowers {
                worst = worst.max(spectral_gap(&m.gram(&q, &b)?, &g0));
            }
            Ok(worst)
        })
        .collect();
    Ok(Report::from_defects("cross_face_agreement", defects?, tol))
}

fn invariance_report(g: &LieGroupoid, candidate: &NMetric, pts: &[Vector], tol: f64) -> Result<Report> {
    let n = candidate.level;
    let actions: Vec<SymAction> = Permutation::all(n + 1)
        .into_iter()
        .skip(1)
        .map(|p| SymAction::new(g, n, p))
        .collect::<Result<_>>()?;
    let eta = &candidate.metric;
    let defects: Result<Vec<f64>> = pts
        .par_iter()
        .map(|p| {
            let b = eta.manifold().tangent_basis(p);
            let g0 = eta.gram(p, &b)?;
            let mut worst: f64 = 0.0;
            for a in &actions {
                let moved = eta.gram(&a.eval(p), &(a.jacobian(p) * &b))?;
                worst = worst.max(spectral_gap(&moved, &g0));
            }
            Ok(worst)
        })
        .collect();
    Ok(Report::from_defects("sym_invariance", defects?, tol))
}

fn positivity_report(eta: &Metric, pts: &[Vector]) -> Result<Report> {
    let mins: Result<Vec<f64>> = pts.par_iter().map(|p| eta.min_tangent_eigenvalue(p)).collect();
    let mins = mins?;
    let lowest = mins.iter().copied().fold(f64::INFINITY, f64::min);
    let defects = mins.iter().map(|&l| if l > 0.0 { 0.0 } else { 1.0 }).collect();
    Ok(Report::from_defects("positive_definite", defects, 0.5).with_data("min_eigenvalue", lowest))
}

fn normal_isometry_report(g: &LieGroupoid, eta: &Metric, samples: usize, seed: u64, tol: f64) -> Result<Report> {
    let arrows = g.sample_arrows(samples, seed)?;
    let gg = g.clone();
    let orbit = move |y: &Vector| orbit_tangent(&gg, y);
    let defects: Result<Vec<f64>> = arrows
        .par_iter()
        .map(|a| normal_rep_matrix(g, eta, a, &orbit).map(|m| orthogonality_defect(&m)))
        .collect();
    Ok(Report::from_defects("normal_isometry", defects?, tol))
}

fn verify_inner(g: &LieGroupoid, candidate: &NMetric, samples: usize, tol: f64, seed: u64) -> Result<Report> {
    let n = candidate.level;
    let space = nerve_space(g, n);
    let pts = space.sample_points(samples, seed)?;
    let eta = &candidate.metric;
    let mut comps = vec![positivity_report(eta, &pts)?];
    if n == 0 {
        comps.push(normal_isometry_report(g, eta, samples, seed, tol)?);
        return Ok(Report::combine("verify_n_metric", comps));
    }
    comps.push(invariance_report(g, candidate, &pts, tol)?);
    let (_, lower) = pushforward_along_face(g, candidate, 0)?;
    for i in 0..=n {
        let f: MapRef = Arc::new(FaceMap::new(g, n, i)?);
        let mut r = riemannian_submersion_check(&f, eta, &lower, &pts, tol)?;
        r.op = format!("face_{i}_submersion");
        comps.push(r);
    }
    comps.push(cross_face_report(g, candidate, &lower, &pts, tol)?);
    Ok(Report::combine("verify_n_metric", comps))
}

/// Invariance, face-submersion and cross-face defects of a candidate
/// `n`-metric on sampled strings. At level 0 the check is that normal
/// representations act isometrically on orbit normal spaces.
pub fn verify_n_metric(g: &LieGroupoid, candidate: &NMetric, samples: usize, tol: f64, seed: u64) -> Report {
    match verify_inner(g, candidate, samples, tol, seed) {
        Ok(r) => r.with_data("level", candidate.level).with_data("provenance", candidate.provenance),
        Err(e) => Report::failure("verify_n_metric", tol, e.to_string()),
    }
}
