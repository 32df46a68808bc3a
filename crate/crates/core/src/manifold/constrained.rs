use std::sync::Arc;

use super::{Manifold, ManifoldKind, Space};
use crate::error::{Error, Result};
use crate::linalg::{null_space, solve_min_norm_vec, Matrix, Vector};
use crate::map::MapRef;

/// An equation cutting a submanifold out of a base manifold.
pub trait Condition: Send + Sync {
    fn residual(&self, x: &Vector) -> Vector;
    /// Linearization of the residual in ambient coordinates.
    fn jacobian(&self, x: &Vector) -> Matrix;
}

/// `left(x) = right(x)`, as in a fiber product.
pub struct Matching {
    pub left: MapRef,
    pub right: MapRef,
}

impl Condition for Matching {
    fn residual(&self, x: &Vector) -> Vector {
        self.left.eval(x) - self.right.eval(x)
    }
    fn jacobian(&self, x: &Vector) -> Matrix {
        self.left.jacobian(x) - self.right.jacobian(x)
    }
}

/// `map(x) ∈ target`, as in a preimage.
pub struct LandsIn {
    pub map: MapRef,
    pub target: Manifold,
}

impl Condition for LandsIn {
    fn residual(&self, x: &Vector) -> Vector {
        let y = self.map.eval(x);
        match self.target.space().project(&y, f64::INFINITY) {
            Ok(q) => y - q,
            Err(_) => Vector::from_element(y.len(), f64::INFINITY),
        }
    }
    fn jacobian(&self, x: &Vector) -> Matrix {
        let y = self.map.eval(x);
        let q = self.target.space().project(&y, f64::INFINITY).unwrap_or(y);
        let n = q.len();
        let normal = Matrix::identity(n, n) - self.target.projector(&q);
        normal * self.map.jacobian(x)
    }
}

pub type Sampler = Arc<dyn Fn(&[f64]) -> Option<Vector> + Send + Sync>;

/// `{x ∈ base : every condition holds}` with a declared intrinsic dimension.
#[derive(Clone)]
pub struct Constrained {
    label: String,
    kind: ManifoldKind,
    base: Manifold,
    conditions: Vec<Arc<dyn Condition>>,
    dim: usize,
    sampler: Option<(usize, Sampler)>,
}

impl Constrained {
    pub fn new(
        label: impl Into<String>,
        base: Manifold,
        conditions: Vec<Arc<dyn Condition>>,
        dim: usize,
    ) -> Self {
        Self {
            label: label.into(),
            kind: ManifoldKind::FiberProduct,
            base,
            conditions,
            dim,
            sampler: None,
        }
    }

    pub fn with_sampler(mut self, sample_dim: usize, sampler: Sampler) -> Self {
        self.sampler = Some((sample_dim, sampler));
        self
    }

    pub fn with_kind(mut self, kind: ManifoldKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn base(&self) -> &Manifold {
        &self.base
    }

    fn stacked_residual(&self, x: &Vector) -> Vector {
        let parts: Vec<Vector> = self.conditions.iter().map(|c| c.residual(x)).collect();
        let refs: Vec<&Vector> = parts.iter().collect();
        crate::linalg::concat(&refs)
    }

    fn stacked_jacobian(&self, x: &Vector) -> Matrix {
        let parts: Vec<Matrix> = self.conditions.iter().map(|c| c.jacobian(x)).collect();
        let rows: usize = parts.iter().map(|p| p.nrows()).sum();
        let mut m = Matrix::zeros(rows, x.len());
        let mut r = 0;
        for p in &parts {
            m.view_mut((r, 0), (p.nrows(), p.ncols())).copy_from(p);
            r += p.nrows();
        }
        m
    }
}

impl Space for Constrained {
    fn label(&self) -> String {
        self.label.clone()
    }
    fn kind(&self) -> ManifoldKind {
        self.kind
    }
    fn ambient_dim(&self) -> usize {
        self.base.ambient_dim()
    }
    fn intrinsic_dim(&self) -> usize {
        self.dim
    }

    fn project(&self, x: &Vector, capture: f64) -> Result<Vector> {
        let mut y = self.base.space().project(x, f64::INFINITY)?;
        let scale = 1.0 + y.norm();
        let mut last = f64::INFINITY;
        for _ in 0..50 {
            let r = self.stacked_residual(&y);
            let rn = r.norm();
            if !rn.is_finite() {
                break;
            }
            if rn <= 1e-15 * scale || rn >= last {
                break;
            }
            last = rn;
            let b = self.base.tangent_basis(&y);
            let a = self.stacked_jacobian(&y) * &b;
            let xi = solve_min_norm_vec(&a, &(-r));
            y = self.base.space().project(&(&y + &b * xi), f64::INFINITY)?;
        }
        let rn = self.stacked_residual(&y).norm();
        let distance = (&y - x).norm();
        if !(rn < 1e-11 * scale) || distance > capture {
            return Err(Error::CaptureRadiusExceeded {
                radius: capture,
                distance: if rn < 1e-11 * scale { distance } else { f64::INFINITY },
            });
        }
        Ok(y)
    }

    fn tangent_basis(&self, x: &Vector) -> Matrix {
        let b = self.base.tangent_basis(x);
        let a = self.stacked_jacobian(x) * &b;
        let k = null_space(&a, self.dim);
        b * k
    }

    fn sample_dim(&self) -> usize {
        self.sampler.as_ref().map_or(0, |(d, _)| *d)
    }

    fn sample(&self, u: &[f64]) -> Option<Vector> {
        self.sampler.as_ref().and_then(|(_, s)| s(u))
    }
}
