//! The normal bundle `ν(S)` realized with `η`-orthogonal complements.

use crate::error::{Error, Result};
use crate::groupoid::SaturatedSubmanifold;
use crate::linalg::{range_basis, Matrix, Vector};
use crate::manifold::{Manifold, Metric, VectorBundle};
use crate::report::Report;

use super::normal::{normal_coords, normal_frame};

/// Fibers are the `η`-orthogonal complements of `T_x S` in `T_x M`; points of
/// the total space are `(x, v)` with both parts in the ambient space of `M`.
#[derive(Clone)]
pub struct NormalBundle {
    base: SaturatedSubmanifold,
    eta: Metric,
    fiber_dim: usize,
    total: Manifold,
}

impl std::fmt::Debug for NormalBundle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NormalBundle")
            .field("base", &self.base.manifold().label())
            .field("fiber_dim", &self.fiber_dim)
            .finish()
    }
}

impl NormalBundle {
    pub fn new(base: &SaturatedSubmanifold, eta: &Metric) -> Result<Self> {
        let m = base.parent();
        if eta.manifold().ambient_dim() != m.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: m.ambient_dim(),
                got: eta.manifold().ambient_dim(),
            });
        }
        let fiber_dim = m.intrinsic_dim() - base.manifold().intrinsic_dim();
        let (sub, eta_c, n) = (base.manifold().clone(), eta.clone(), m.ambient_dim());
        let projector = move |x: &Vector| match normal_frame(&eta_c, x, &sub.tangent_basis(x)) {
            Ok(f) => {
                let q = range_basis(&f);
                &q * q.transpose()
            }
            Err(_) => Matrix::zeros(n, n),
        };
        let total = Manifold::new(VectorBundle::new(
            format!("ν({})", base.manifold().label()),
            base.manifold().clone(),
            n,
            fiber_dim,
            projector,
        ));
        Ok(Self {
            base: base.clone(),
            eta: eta.clone(),
            fiber_dim,
            total,
        })
    }

    pub fn base(&self) -> &SaturatedSubmanifold {
        &self.base
    }

    pub fn metric(&self) -> &Metric {
        &self.eta
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    pub fn total_space(&self) -> &Manifold {
        &self.total
    }

    /// `η`-orthonormal frame of `ν_x`.
    pub fn frame(&self, x: &Vector) -> Result<Matrix> {
        normal_frame(&self.eta, x, &self.base.manifold().tangent_basis(x))
    }

    /// `η`-orthogonal projection of a tangent vector at `x` onto `ν_x`.
    pub fn project(&self, x: &Vector, z: &Vector) -> Result<Vector> {
        let f = self.frame(x)?;
        Ok(&f * normal_coords(&self.eta, x, &f, z)?)
    }

    /// Coordinates of `z` in the frame at `x`.
    pub fn coords(&self, x: &Vector, z: &Vector) -> Result<Vector> {
        normal_coords(&self.eta, x, &self.frame(x)?, z)
    }

    /// Frames at sampled base points are `η`-orthonormal and `η`-orthogonal to `T_x S`.
    pub fn check_frames(&self, n: usize, seed: u64, tol: f64) -> Result<Report> {
        let mut defects = Vec::new();
        for x in self.base.points(n, seed)? {
            let f = self.frame(&x)?;
            let t = self.base.manifold().tangent_basis(&x);
            let k = f.ncols();
            let mut both = Matrix::zeros(x.len(), k + t.ncols());
            both.columns_mut(0, k).copy_from(&f);
            both.columns_mut(k, t.ncols()).copy_from(&t);
            let g = self.eta.gram(&x, &both)?;
            let ortho = (g.view((0, 0), (k, k)) - Matrix::identity(k, k)).abs().max();
            let cross = if t.ncols() > 0 && k > 0 { g.view((0, k), (k, t.ncols())).abs().max() } else { 0.0 };
            defects.push(ortho.max(cross));
        }
        Ok(Report::from_defects("normal_frames", defects, tol))
    }
}
