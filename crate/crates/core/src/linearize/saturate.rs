//! Saturated neighborhoods of saturated submanifolds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::groupoid::{orbit_sample, LieGroupoid, SaturatedSubmanifold};
use crate::linalg::Vector;
use crate::manifold::Manifold;
use crate::report::Report;

/// Union of the orbits meeting the open `radius`-tube around `S`, as a
/// membership predicate.
#[derive(Clone, Debug)]
pub struct SaturatedNeighborhood {
    groupoid: LieGroupoid,
    sub: Manifold,
    radius: f64,
    budget: usize,
    certificate: Report,
}

impl SaturatedNeighborhood {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn certificate(&self) -> &Report {
        &self.certificate
    }

    /// Ambient distance from `y` to `S`.
    pub fn tube_distance(&self, y: &Vector) -> f64 {
        match self.sub.space().project(y, f64::INFINITY) {
            Ok(q) => (y - q).norm(),
            Err(_) => f64::INFINITY,
        }
    }

    pub fn contains(&self, x: &Vector) -> bool {
        self.tube_distance(x) < self.radius
            || orbit_sample(&self.groupoid, x, self.budget)
                .iter()
                .any(|y| self.tube_distance(y) < self.radius)
    }
}

/// Points of `M` near `S`: member points pushed off `S` by ambient offsets
/// projected back onto `M`, at distances up to twice the radius.
fn candidates(parent: &Manifold, s: &SaturatedSubmanifold, radius: f64, n: usize, seed: u64) -> Result<Vec<Vector>> {
    let base = s.points(n, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(base.len());
    for x in base {
        let dir = Vector::from_fn(x.len(), |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let len = 2.0 * radius * rng.random::<f64>();
        let step = parent.project_tangent(&x, &dir);
        let nrm = step.norm();
        if nrm < 1e-12 {
            out.push(x);
            continue;
        }
        if let Ok(y) = parent.space().project(&(&x + step * (len / nrm)), f64::INFINITY) {
            out.push(y);
        }
    }
    Ok(out)
}

/// Requires `G` declared s-proper. Saturation is certified by checking that
/// sampled orbit points share the membership of their starting point.
pub fn saturate_neighborhood(g: &LieGroupoid, s: &SaturatedSubmanifold, radius: f64, budget: usize) -> Result<SaturatedNeighborhood> {
    if !g.flags().s_proper {
        return Err(Error::NotSProper);
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParams(format!("radius must be positive, got {radius}")));
    }
    let mut nb = SaturatedNeighborhood {
        groupoid: g.clone(),
        sub: s.manifold().clone(),
        radius,
        budget,
        certificate: Report::from_defects("saturated_neighborhood", vec![], 0.5),
    };
    let pts = candidates(g.objects(), s, radius, 24, 41)?;
    let mut defects = Vec::with_capacity(pts.len());
    let mut inside = 0usize;
    for x in &pts {
        let member = nb.contains(x);
        inside += member as usize;
        let escapes = orbit_sample(g, x, budget.min(8))
            .iter()
            .filter(|y| nb.contains(y) != member)
            .count();
        defects.push(escapes as f64);
    }
    nb.certificate = Report::from_defects("saturated_neighborhood", defects, 0.5)
        .with_data("radius", radius)
        .with_data("members", inside);
    Ok(nb)
}
