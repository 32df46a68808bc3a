//! Embedded-manifold numerics.
//!
//! Every space is a subset of some ambient `R^N`. A [`Space`] knows how to
//! project ambient points onto itself and how to produce an orthonormal basis
//! of its tangent space; everything else (projectors, charts, metrics,
//! geodesics) is built on those two primitives.

mod bundle;
mod constrained;
mod geodesic;
mod metric;
mod spaces;
mod submersion;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{solve_min_norm, sorted_svd, Matrix, Vector};
use crate::sampling::Halton;

pub use bundle::VectorBundle;
pub use constrained::{Condition, Constrained, LandsIn, Matching, Sampler};
pub use geodesic::{geodesic_exp, geodesic_trajectory, Exponential, GeodesicOptions, Trajectory};
pub use metric::{AmbientMetric, Metric, MetricField, PullbackCombination, Pushforward, Section};
pub use spaces::{Euclidean, FiniteSet, Product, SpecialOrthogonal, Sphere};
pub use submersion::{pushforward_metric, riemannian_submersion_check, submersion_defect_at};

/// Membership tolerance for points on a manifold.
pub const GEOMETRY_TOL: f64 = 1e-9;
/// Default tolerance for sampled verification.
pub const VERIFY_TOL: f64 = 1e-6;
/// Tolerance for checks limited by finite-difference truncation.
pub const FD_TOL: f64 = 1e-4;
/// Default capture radius for [`Manifold::project_to_manifold`].
pub const DEFAULT_CAPTURE_RADIUS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ManifoldKind {
    Euclidean,
    Sphere,
    MatrixGroup,
    FiniteSet,
    Product,
    FiberProduct,
    VectorBundleTotalSpace,
}

pub trait Space: Send + Sync {
    fn label(&self) -> String;
    fn kind(&self) -> ManifoldKind;
    fn ambient_dim(&self) -> usize;
    fn intrinsic_dim(&self) -> usize;

    /// Nearest (or retracted) member point. `capture` bounds how far `x` may be.
    fn project(&self, x: &Vector, capture: f64) -> Result<Vector>;

    /// Orthonormal basis of `T_x M` as an `N × d` matrix.
    fn tangent_basis(&self, x: &Vector) -> Matrix;

    /// Number of unit-cube coordinates consumed by [`Space::sample`].
    fn sample_dim(&self) -> usize {
        0
    }

    /// Maps a unit-cube point to a member point, when a sampler exists.
    fn sample(&self, _u: &[f64]) -> Option<Vector> {
        None
    }
}

/// Shared handle to a [`Space`].
#[derive(Clone)]
pub struct Manifold {
    space: Arc<dyn Space>,
    capture_radius: f64,
}

impl fmt::Debug for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Manifold({}, N={}, d={})",
            self.label(),
            self.ambient_dim(),
            self.intrinsic_dim()
        )
    }
}

impl Manifold {
    pub fn new(space: impl Space + 'static) -> Self {
        Self {
            space: Arc::new(space),
            capture_radius: DEFAULT_CAPTURE_RADIUS,
        }
    }

    pub fn from_arc(space: Arc<dyn Space>) -> Self {
        Self {
            space,
            capture_radius: DEFAULT_CAPTURE_RADIUS,
        }
    }

    pub fn with_capture_radius(mut self, r: f64) -> Self {
        self.capture_radius = r;
        self
    }

    pub fn euclidean(n: usize) -> Self {
        Self::new(Euclidean::new(n))
    }

    pub fn circle() -> Self {
        Self::new(Sphere::new(1))
    }

    pub fn sphere(n: usize) -> Self {
        Self::new(Sphere::new(n))
    }

    pub fn special_orthogonal(n: usize) -> Self {
        Self::new(SpecialOrthogonal::new(n))
    }

    pub fn finite_set(points: Vec<Vector>) -> Self {
        Self::new(FiniteSet::new(points))
    }

    pub fn product(factors: Vec<Manifold>) -> Self {
        Self::new(Product::new(factors))
    }

    pub fn space(&self) -> &Arc<dyn Space> {
        &self.space
    }

    pub fn label(&self) -> String {
        self.space.label()
    }

    pub fn kind(&self) -> ManifoldKind {
        self.space.kind()
    }

    pub fn ambient_dim(&self) -> usize {
        self.space.ambient_dim()
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.space.intrinsic_dim()
    }

    pub fn capture_radius(&self) -> f64 {
        self.capture_radius
    }

    pub fn project(&self, x: &Vector) -> Result<Vector> {
        self.check_len(x)?;
        self.space.project(x, self.capture_radius)
    }

    pub fn project_to_manifold(&self, x: &Vector) -> Result<Point> {
        self.project(x).map(Point::new)
    }

    /// Distance from `x` to its projection; infinite when projection fails.
    pub fn membership_residual(&self, x: &Vector) -> f64 {
        match self.space.project(x, f64::INFINITY) {
            Ok(p) => (p - x).norm(),
            Err(_) => f64::INFINITY,
        }
    }

    pub fn contains(&self, x: &Vector) -> bool {
        x.len() == self.ambient_dim() && self.membership_residual(x) < GEOMETRY_TOL
    }

    pub fn tangent_basis(&self, x: &Vector) -> Matrix {
        self.space.tangent_basis(x)
    }

    pub fn projector(&self, x: &Vector) -> Matrix {
        let b = self.tangent_basis(x);
        &b * b.transpose()
    }

    pub fn project_tangent(&self, x: &Vector, v: &Vector) -> Vector {
        let b = self.tangent_basis(x);
        &b * (b.transpose() * v)
    }

    pub fn chart_at(&self, x: &Vector) -> Chart {
        Chart::new(self.clone(), x.clone())
    }

    pub fn sample_dim(&self) -> usize {
        self.space.sample_dim()
    }

    pub fn sample(&self, u: &[f64]) -> Option<Vector> {
        self.space.sample(u)
    }

    /// `n` low-discrepancy sample points.
    pub fn sample_points(&self, n: usize, seed: u64) -> Result<Vec<Vector>> {
        let dim = self.sample_dim();
        let mut h = Halton::new(dim.max(1), seed);
        (0..n)
            .map(|_| {
                let u = h.next_point();
                self.sample(&u[..dim])
                    .ok_or_else(|| Error::SamplingFailure(format!("no sampler for {}", self.label())))
            })
            .collect()
    }

    fn check_len(&self, x: &Vector) -> Result<()> {
        if x.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// A point on a manifold, in ambient coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub coords: Vector,
}

impl Point {
    pub fn new(coords: Vector) -> Self {
        Self { coords }
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Self::new(Vector::from_column_slice(s))
    }

    /// Validates membership before wrapping.
    pub fn on(m: &Manifold, coords: Vector) -> Result<Self> {
        let r = m.membership_residual(&coords);
        if r < GEOMETRY_TOL {
            Ok(Self::new(coords))
        } else {
            Err(Error::InvalidParams(format!(
                "point off {} by {r:.3e}",
                m.label()
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub base: Point,
    pub vec: Vector,
}

impl TangentVector {
    pub fn new(base: Point, vec: Vector) -> Self {
        Self { base, vec }
    }

    /// Tangency residual `|P(base) v - v|`.
    pub fn tangency_residual(&self, m: &Manifold) -> f64 {
        (m.project_tangent(&self.base.coords, &self.vec) - &self.vec).norm()
    }
}

/// Graph chart over the tangent plane at `center`: `φ(ξ)` is the member point
/// `y` near `center` with `Bᵀ(y - center) = ξ`.
#[derive(Clone)]
pub struct Chart {
    manifold: Manifold,
    center: Vector,
    basis: Matrix,
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Chart")
            .field("manifold", &self.manifold)
            .field("center", &self.center.as_slice())
            .finish()
    }
}

impl Chart {
    pub fn new(manifold: Manifold, center: Vector) -> Self {
        let basis = manifold.tangent_basis(&center);
        Self {
            manifold,
            center,
            basis,
        }
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn coords(&self, y: &Vector) -> Vector {
        self.basis.transpose() * (y - &self.center)
    }

    pub fn point(&self, xi: &Vector) -> Result<Vector> {
        let mut guess = &self.center + &self.basis * xi;
        let mut best: Option<(f64, Vector)> = None;
        for _ in 0..40 {
            let y = self
                .manifold
                .space
                .project(&guess, f64::INFINITY)
                .map_err(|e| Error::ChartEscape(e.to_string()))?;
            let err = xi - self.coords(&y);
            let e = err.norm();
            let improved = best.as_ref().map_or(true, |(b, _)| e < 0.5 * *b);
            if best.as_ref().map_or(true, |(b, _)| e < *b) {
                best = Some((e, y.clone()));
            }
            if e <= 4e-16 * (1.0 + xi.norm()) || !improved {
                break;
            }
            let t = self.manifold.tangent_basis(&y);
            let bt = self.basis.transpose() * &t;
            let step = solve_min_norm(&bt, &Matrix::from_column_slice(err.len(), 1, err.as_slice()));
            guess = &y + &t * step.column(0);
        }
        match best {
            Some((e, y)) if e < 1e-11 => Ok(y),
            Some((e, _)) => Err(Error::ChartEscape(format!("graph chart solve residual {e:.3e}"))),
            None => Err(Error::ChartEscape("graph chart solve failed".into())),
        }
    }

    /// Chart differential `dφ` at the member point `y`: `T (BᵀT)⁻¹`.
    pub fn differential(&self, y: &Vector) -> Result<Matrix> {
        let t = self.manifold.tangent_basis(y);
        let bt = self.basis.transpose() * &t;
        let (s, _) = sorted_svd(&bt);
        if s.last().copied().unwrap_or(1.0) < 0.05 {
            return Err(Error::ChartEscape("tangent plane tilted past chart".into()));
        }
        let inv = bt
            .try_inverse()
            .ok_or_else(|| Error::ChartEscape("singular chart differential".into()))?;
        Ok(t * inv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_roundtrip_on_sphere() {
        let s = Manifold::sphere(2);
        let c = Vector::from_vec(vec![0.0, 0.0, 1.0]);
        let chart = s.chart_at(&c);
        let xi = Vector::from_vec(vec![0.2, -0.1]);
        let y = chart.point(&xi).unwrap();
        assert!(s.contains(&y));
        assert!((chart.coords(&y) - &xi).norm() < 1e-14);
        let d0 = chart.differential(&c).unwrap();
        assert!((d0 - chart.basis()).norm() < 1e-14);
    }

    #[test]
    fn chart_differential_has_full_rank() {
        let s = Manifold::special_orthogonal(2);
        let c = Vector::from_vec(vec![1.0, 0.0, 0.0, 1.0]);
        let chart = s.chart_at(&c);
        let y = chart.point(&Vector::from_vec(vec![0.0])).unwrap();
        assert!((y - &c).norm() < 1e-15);
        let d = chart.differential(&c).unwrap();
        assert_eq!(crate::linalg::numerical_rank(&d), 1);
    }
}
