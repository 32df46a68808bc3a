//! Exponential-map linearization around a saturated submanifold and its
//! sampled verification.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{linear_model, LinearModel, NormalAction};
use super::normal::normal_frame;
use super::saturate::{saturate_neighborhood, SaturatedNeighborhood};
use crate::error::{Error, Result};
use crate::groupoid::{LieGroupoid, SaturatedSubmanifold};
use crate::linalg::{concat, Matrix, Vector};
use crate::manifold::{geodesic_trajectory, Exponential, GeodesicOptions, Metric};
use crate::nmetric::{induce_lower_metric, NMetric};
use crate::report::Report;

/// Smallest accepted ratio of image distance to preimage distance.
pub const INJECTIVITY_RATIO: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearizeOptions {
    pub steps_per_unit: usize,
    /// Normal rays used by the injectivity probe.
    pub probe_rays: usize,
    /// Composable pairs used by the verification run inside `linearize_exp`.
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
    /// Orbit points examined per membership query.
    pub orbit_budget: usize,
    /// Samples for the face-submersion checks when inducing lower metrics.
    pub metric_samples: usize,
}

impl Default for LinearizeOptions {
    fn default() -> Self {
        Self {
            steps_per_unit: 64,
            probe_rays: 200,
            samples: 16,
            tol: 1e-6,
            seed: 0,
            orbit_budget: 32,
            metric_samples: 8,
        }
    }
}

/// `exp₀` on `V = {(x, v) ∈ ν(S) : |v| < radius}` and `exp₁` on the matching
/// arrows of `G_S ⋉ ν(S)`, with the verification report.
#[derive(Clone, Debug)]
pub struct LinearizationResult {
    groupoid: LieGroupoid,
    sub: SaturatedSubmanifold,
    model: LinearModel,
    act: NormalAction,
    eta1: Metric,
    eta0: Metric,
    radius: f64,
    opts: LinearizeOptions,
    neighborhood: Option<SaturatedNeighborhood>,
    report: Report,
}

impl LinearizationResult {
    pub fn groupoid(&self) -> &LieGroupoid {
        &self.groupoid
    }

    pub fn submanifold(&self) -> &SaturatedSubmanifold {
        &self.sub
    }

    pub fn model(&self) -> &LinearModel {
        &self.model
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn options(&self) -> &LinearizeOptions {
        &self.opts
    }

    pub fn report(&self) -> &Report {
        &self.report
    }

    /// Present when `G` is declared s-proper.
    pub fn neighborhood(&self) -> Option<&SaturatedNeighborhood> {
        self.neighborhood.as_ref()
    }

    /// "invariant" when a saturated neighborhood was certified, else "weak".
    pub fn kind(&self) -> &'static str {
        match &self.neighborhood {
            Some(n) if n.certificate().pass => "invariant",
            _ => "weak",
        }
    }

    fn geodesic_opts(&self) -> GeodesicOptions {
        GeodesicOptions {
            steps_per_unit: self.opts.steps_per_unit,
            ..GeodesicOptions::default()
        }
    }

    /// `η⁰`-geodesic from `x ∈ S` with initial velocity `v ∈ ν_x`.
    pub fn exp0(&self, x: &Vector, v: &Vector) -> Result<Vector> {
        Exponential::new(self.eta0.clone())
            .with_options(self.geodesic_opts())
            .exp(x, v)
    }

    /// The `η¹`-normal vector to `G_S` at `g` whose class corresponds to
    /// `(g, v)`, `v ∈ ν_{s(g)}`.
    pub fn normal_lift(&self, g: &Vector, v: &Vector) -> Result<Vector> {
        let gs = self.model.restricted();
        let n = normal_frame(&self.eta1, g, &gs.arrows().tangent_basis(g))?;
        let x = self.groupoid.s(g);
        let f0 = self.model.bundle().frame(&x)?;
        let (k, m) = (f0.ncols(), n.ncols());
        if k != m {
            return Err(Error::LiftFailure(format!("normal ranks differ: {m} at the arrow, {k} at its source")));
        }
        let mut cols = Matrix::zeros(x.len(), 2 * k + 1);
        cols.columns_mut(0, k).copy_from(&f0);
        cols.columns_mut(k, k).copy_from(&(self.groupoid.ds(g) * &n));
        cols.set_column(2 * k, v);
        let gram = self.eta0.gram(&x, &cols)?;
        let a = gram.view((0, k), (k, k)).into_owned();
        let b = gram.view((0, 2 * k), (k, 1)).column(0).into_owned();
        let c = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::LiftFailure("ds is singular on the normal space of G_S".into()))?;
        Ok(n * c)
    }

    /// `η¹`-geodesic from `g` along the normal lift of `v`.
    pub fn exp1(&self, g: &Vector, v: &Vector) -> Result<Vector> {
        let w = self.normal_lift(g, v)?;
        Exponential::new(self.eta1.clone())
            .with_options(self.geodesic_opts())
            .exp(g, &w)
    }

    /// `T_g v`.
    pub fn normal_rep(&self, g: &Vector, v: &Vector) -> Result<Vector> {
        self.act.apply(g, v)
    }

    pub fn to_json(&self) -> String {
        let v = serde_json::json!({
            "groupoid": self.groupoid.descriptor(),
            "submanifold": self.sub.manifold().label(),
            "radius": self.radius,
            "linearization": self.kind(),
            "options": self.opts,
            "report": self.report,
            "neighborhood": self.neighborhood.as_ref().map(|n| n.certificate()),
        });
        serde_json::to_string_pretty(&v).expect("linearization result serializes")
    }

    /// `sample,component,defect` rows of the verification report.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "sample,component,defect")?;
        for c in &self.report.components {
            for (i, d) in c.defects.iter().enumerate() {
                writeln!(f, "{i},{},{d:e}", c.op)?;
            }
        }
        f.flush()?;
        Ok(())
    }
}

/// Induces `η¹` and `η⁰` from a 2-metric and linearizes with them.
pub fn linearize_exp(
    g: &LieGroupoid,
    eta2: &NMetric,
    s: &SaturatedSubmanifold,
    radius: f64,
    opts: &LinearizeOptions,
) -> Result<LinearizationResult> {
    if eta2.level() != 2 {
        return Err(Error::InvalidParams(format!("expected a 2-metric, got level {}", eta2.level())));
    }
    let eta1 = induce_lower_metric(g, eta2, 1, opts.metric_samples, opts.tol)?;
    let eta0 = induce_lower_metric(g, &eta1, 0, opts.metric_samples, opts.tol)?;
    linearize_with_metrics(g, s, eta1.metric(), eta0.metric(), radius, opts)
}

/// Linearization with explicitly supplied arrow and object metrics.
pub fn linearize_with_metrics(
    g: &LieGroupoid,
    s: &SaturatedSubmanifold,
    eta1: &Metric,
    eta0: &Metric,
    radius: f64,
    opts: &LinearizeOptions,
) -> Result<LinearizationResult> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidParams(format!("radius must be positive, got {radius}")));
    }
    if eta1.manifold().ambient_dim() != g.arrows().ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: g.arrows().ambient_dim(),
            got: eta1.manifold().ambient_dim(),
        });
    }
    let model = linear_model(g, s, eta0)?;
    let act = NormalAction {
        g: g.clone(),
        eta: eta0.clone(),
        sub: s.manifold().clone(),
    };
    let neighborhood = if g.flags().s_proper {
        Some(saturate_neighborhood(g, s, radius, opts.orbit_budget)?)
    } else {
        None
    };
    let mut res = LinearizationResult {
        groupoid: g.clone(),
        sub: s.clone(),
        model,
        act,
        eta1: eta1.clone(),
        eta0: eta0.clone(),
        radius,
        opts: *opts,
        neighborhood,
        report: Report::from_defects("verify_linearization", vec![], opts.tol),
    };
    if let Some(estimate) = injectivity_probe(&res)? {
        return Err(Error::RadiusTooLarge { radius, estimate });
    }
    res.report = verify_linearization(&res, opts.samples, opts.tol);
    Ok(res)
}

/// Smallest ratio `|a_i − a_j| / |p_i − p_j|` over pairs with distinct preimages.
fn min_distance_ratio(pre: &[Vector], img: &[Vector]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..pre.len() {
        for j in 0..i {
            let d = (&pre[i] - &pre[j]).norm();
            if d > 1e-12 {
                best = best.min((&img[i] - &img[j]).norm() / d);
            }
        }
    }
    best
}

/// `η⁰`-unit normal directions at sampled points of `S`.
fn normal_rays(res: &LinearizationResult, n: usize, seed: u64) -> Result<Vec<(Vector, Vector)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = res.sub.points(n, seed)?;
    let mut out = Vec::with_capacity(n);
    for x in pts.iter().cycle().take(n) {
        let f = res.model.bundle().frame(x)?;
        if f.ncols() == 0 {
            continue;
        }
        let c = Vector::from_fn(f.ncols(), |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let c = if c.norm() < 1e-3 { Vector::from_fn(f.ncols(), |i, _| (i == 0) as u8 as f64) } else { c.normalize() };
        out.push((x.clone(), f * c));
    }
    Ok(out)
}

/// Whether `exp₀` is injective on sampled rays of length `r`, judged on all
/// integration points along them.
fn probe_at(res: &LinearizationResult, rays: &[(Vector, Vector)], r: f64) -> bool {
    let steps = ((res.opts.steps_per_unit as f64 * r).ceil() as usize).max(8);
    let gopts = res.geodesic_opts();
    let mut pre = Vec::new();
    let mut img = Vec::new();
    for (x, d) in rays {
        let traj = match geodesic_trajectory(&res.eta0, x, &(d * r), steps, &gopts) {
            Ok(t) => t,
            Err(_) => return false,
        };
        for (t, p) in traj.times.iter().zip(&traj.points) {
            pre.push(concat(&[x, &(d * (r * t))]));
            img.push(p.clone());
        }
    }
    min_distance_ratio(&pre, &img) >= INJECTIVITY_RATIO
}

/// `None` when the radius passes; otherwise a bisection estimate of the
/// largest passing radius.
fn injectivity_probe(res: &LinearizationResult) -> Result<Option<f64>> {
    let rays = normal_rays(res, res.opts.probe_rays, res.opts.seed ^ 0x5eed)?;
    if rays.is_empty() || probe_at(res, &rays, res.radius) {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0, res.radius);
    for _ in 0..8 {
        let mid = 0.5 * (lo + hi);
        if probe_at(res, &rays, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

struct PairDefects {
    source: f64,
    target: f64,
    morphism: f64,
    unit: f64,
    inverse: f64,
    pre: Vector,
    img: Vector,
}

/// Composable `(g, v), (h, w)` with `v = T_h w`, `|w| < radius`; checks the
/// commuting squares, the product, the unit and the inverse.
fn pair_defects(res: &LinearizationResult, x: &Vector, w: &Vector, u1: &[f64], u2: &[f64]) -> Result<PairDefects> {
    let g0 = &res.groupoid;
    let gs = res.model.restricted();
    let fail = || Error::SamplingFailure("no arrow into a point of S".into());
    let h = gs.i(&gs.arrow_into(x, u1).ok_or_else(fail)?);
    let y = g0.t(&h);
    let a = gs.i(&gs.arrow_into(&y, u2).ok_or_else(fail)?);
    let v = res.normal_rep(&h, w)?;
    let z = res.normal_rep(&a, &v)?;

    let e_h = res.exp1(&h, w)?;
    let e_a = res.exp1(&a, &v)?;
    let e_ah = res.exp1(&gs.multiply_unchecked(&a, &h), w)?;
    let x0 = res.exp0(x, w)?;
    let y0 = res.exp0(&y, &v)?;
    let z0 = res.exp0(&g0.t(&a), &z)?;

    let source = (g0.s(&e_h) - &x0).norm().max((g0.s(&e_a) - &y0).norm());
    let target = (g0.t(&e_h) - &y0).norm().max((g0.t(&e_a) - &z0).norm());
    let morphism = (&e_ah - g0.multiply_unchecked(&e_a, &e_h)).norm();
    let unit = (res.exp1(&g0.u(x), w)? - g0.u(&x0)).norm();
    let inverse = (res.exp1(&gs.i(&h), &v)? - g0.i(&e_h)).norm();
    Ok(PairDefects {
        source,
        target,
        morphism,
        unit,
        inverse,
        pre: concat(&[x, w]),
        img: x0,
    })
}

/// Diagram, morphism, unit/inverse and injectivity defects over sampled
/// composable pairs of the linear model inside the radius ball.
pub fn verify_linearization(res: &LinearizationResult, samples: usize, tol: f64) -> Report {
    match verify_inner(res, samples, tol) {
        Ok(r) => r,
        Err(e) => Report::failure("verify_linearization", tol, e.to_string()),
    }
}

fn verify_inner(res: &LinearizationResult, samples: usize, tol: f64) -> Result<Report> {
    let seed = res.opts.seed;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ad = res.model.restricted().structure().arrow_sample_dim();
    let pts = res.sub.points(samples, seed)?;
    let mut rows = Vec::with_capacity(samples);
    for x in pts.iter().cycle().take(samples) {
        let f = res.model.bundle().frame(x)?;
        let c = Vector::from_fn(f.ncols(), |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let len = res.radius * (0.25 + 0.75 * rng.random::<f64>());
        let w = if c.norm() > 1e-3 { f * c.normalize() * len } else { Vector::zeros(x.len()) };
        let u1: Vec<f64> = (0..ad).map(|_| rng.random()).collect();
        let u2: Vec<f64> = (0..ad).map(|_| rng.random()).collect();
        rows.push(pair_defects(res, x, &w, &u1, &u2)?);
    }
    let col = |f: fn(&PairDefects) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let pre: Vec<Vector> = rows.iter().map(|r| r.pre.clone()).collect();
    let img: Vec<Vector> = rows.iter().map(|r| r.img.clone()).collect();
    let ratio = min_distance_ratio(&pre, &img);
    let injectivity = Report::from_defects("injectivity", vec![if ratio >= INJECTIVITY_RATIO { 0.0 } else { 1.0 }], 0.5)
        .with_data("min_distance_ratio", if ratio.is_finite() { ratio } else { -1.0 });
    let mut comps = vec![
        Report::from_defects("diagram_source", col(|r| r.source), tol),
        Report::from_defects("diagram_target", col(|r| r.target), tol),
        Report::from_defects("morphism", col(|r| r.morphism), tol),
        Report::from_defects("unit", col(|r| r.unit), tol),
        Report::from_defects("inverse", col(|r| r.inverse), tol),
        injectivity,
    ];
    if let Some(n) = &res.neighborhood {
        comps.push(n.certificate().clone());
    }
    Ok(Report::combine("verify_linearization", comps)
        .with_data("radius", res.radius)
        .with_data("linearization", res.kind()))
}
