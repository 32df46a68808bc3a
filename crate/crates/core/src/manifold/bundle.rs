use std::sync::Arc;

use super::{Manifold, ManifoldKind, Space};
use crate::error::Result;
use crate::linalg::{basis_from_projector, orthonormalize, Matrix, Vector};
use crate::map::FD_STEP;

type FiberProjector = Arc<dyn Fn(&Vector) -> Matrix + Send + Sync>;

/// Total space of a vector subbundle of `base × R^k`, given by the ambient
/// projector onto the fiber at each base point. Points are `(b, v)`.
#[derive(Clone)]
pub struct VectorBundle {
    label: String,
    base: Manifold,
    vec_dim: usize,
    fiber_dim: usize,
    fiber_projector: FiberProjector,
    sample_radius: f64,
}

impl VectorBundle {
    pub fn new(
        label: impl Into<String>,
        base: Manifold,
        vec_dim: usize,
        fiber_dim: usize,
        fiber_projector: impl Fn(&Vector) -> Matrix + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            base,
            vec_dim,
            fiber_dim,
            fiber_projector: Arc::new(fiber_projector),
            sample_radius: 1.0,
        }
    }

    pub fn with_sample_radius(mut self, r: f64) -> Self {
        self.sample_radius = r;
        self
    }

    pub fn base(&self) -> &Manifold {
        &self.base
    }

    pub fn split(&self, x: &Vector) -> (Vector, Vector) {
        let nb = self.base.ambient_dim();
        (
            x.rows(0, nb).into_owned(),
            x.rows(nb, self.vec_dim).into_owned(),
        )
    }

    pub fn fiber_projector(&self, b: &Vector) -> Matrix {
        (self.fiber_projector)(b)
    }
}

impl Space for VectorBundle {
    fn label(&self) -> String {
        self.label.clone()
    }
    fn kind(&self) -> ManifoldKind {
        ManifoldKind::VectorBundleTotalSpace
    }
    fn ambient_dim(&self) -> usize {
        self.base.ambient_dim() + self.vec_dim
    }
    fn intrinsic_dim(&self) -> usize {
        self.base.intrinsic_dim() + self.fiber_dim
    }
    fn project(&self, x: &Vector, capture: f64) -> Result<Vector> {
        let (b, v) = self.split(x);
        let b = self.base.space().project(&b, capture)?;
        let v = self.fiber_projector(&b) * v;
        Ok(crate::linalg::concat(&[&b, &v]))
    }
    fn tangent_basis(&self, x: &Vector) -> Matrix {
        let (b, v) = self.split(x);
        let nb = self.base.ambient_dim();
        let tb = self.base.tangent_basis(&b);
        let db = tb.ncols();
        let p = self.fiber_projector(&b);
        let f = basis_from_projector(&p, self.fiber_dim);
        let mut t = Matrix::zeros(nb + self.vec_dim, db + self.fiber_dim);
        for j in 0..db {
            let e = tb.column(j).into_owned();
            let plus = self.base.space().project(&(&b + &e * FD_STEP), f64::INFINITY);
            let minus = self.base.space().project(&(&b - &e * FD_STEP), f64::INFINITY);
            let dv = match (plus, minus) {
                (Ok(bp), Ok(bm)) => {
                    (self.fiber_projector(&bp) - self.fiber_projector(&bm)) * &v / (2.0 * FD_STEP)
                }
                _ => Vector::zeros(self.vec_dim),
            };
            t.view_mut((0, j), (nb, 1)).copy_from(&e);
            t.view_mut((nb, j), (self.vec_dim, 1)).copy_from(&dv);
        }
        for k in 0..self.fiber_dim {
            t.view_mut((nb, db + k), (self.vec_dim, 1))
                .copy_from(&f.column(k));
        }
        orthonormalize(&t)
    }
    fn sample_dim(&self) -> usize {
        self.base.sample_dim() + self.fiber_dim
    }
    fn sample(&self, u: &[f64]) -> Option<Vector> {
        let k = self.base.sample_dim();
        let b = self.base.sample(&u[..k])?;
        let f = basis_from_projector(&self.fiber_projector(&b), self.fiber_dim);
        let coeffs = Vector::from_iterator(
            self.fiber_dim,
            u[k..].iter().map(|&t| self.sample_radius * (2.0 * t - 1.0)),
        );
        let v = f * coeffs;
        Some(crate::linalg::concat(&[&b, &v]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_bundle_of_circle() {
        // ν(S¹) ⊂ S¹ × R²: fiber spanned by the radial direction.
        let nb = Manifold::new(VectorBundle::new("ν(S¹)", Manifold::circle(), 2, 1, |b| {
            let u = b / b.norm();
            &u * u.transpose()
        }));
        assert_eq!(nb.intrinsic_dim(), 2);
        let x = Vector::from_vec(vec![1.0, 0.0, 0.3, 0.2]);
        let p = nb.project(&x).unwrap();
        assert!((p[3]).abs() < 1e-15);
        let t = nb.tangent_basis(&p);
        assert_eq!(t.ncols(), 2);
        assert!((t.transpose() * &t - Matrix::identity(2, 2)).norm() < 1e-12);
        // The curve θ ↦ (cos θ, sin θ, 0.3 cos θ, 0.3 sin θ) has tangent (0,1,0,0.3) at θ=0.
        let w = Vector::from_vec(vec![0.0, 1.0, 0.0, 0.3]);
        let proj = &t * (t.transpose() * &w);
        assert!((proj - w).norm() < 1e-8);
    }
}
