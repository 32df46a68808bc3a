//! Normal spaces and the normal representation `T_g: ν_x → ν_y`.

use crate::groupoid::{LieGroupoid, SaturatedSubmanifold};
use crate::error::{Error, Result};
use crate::linalg::{null_space, orthonormalizing_frame, range_basis, solve_min_norm_vec, sorted_svd, Matrix, Vector, RANK_TOL};
use crate::manifold::Metric;

/// Ambient-orthonormal basis of the orbit tangent `ρ(A_y) = dt(ker ds)` at `u(y)`.
pub fn orbit_tangent(g: &LieGroupoid, y: &Vector) -> Matrix {
    let e = g.u(y);
    let b = g.arrows().tangent_basis(&e);
    let fiber = b.ncols().saturating_sub(g.objects().intrinsic_dim());
    let k = null_space(&(g.ds(&e) * &b), fiber);
    range_basis(&(g.dt(&e) * b * k))
}

/// `η`-orthonormal frame of the `η`-orthogonal complement of `span(tangent)` in `T_y M`.
pub fn normal_frame(eta: &Metric, y: &Vector, tangent: &Matrix) -> Result<Matrix> {
    let b = eta.manifold().tangent_basis(y);
    let d = b.ncols();
    let c = b.transpose() * tangent;
    let r = range_basis(&c).ncols();
    if r == d {
        return Ok(Matrix::zeros(y.len(), 0));
    }
    let gram = eta.gram(y, &b)?;
    let comp = if r == 0 {
        Matrix::identity(d, d)
    } else {
        null_space(&(c.transpose() * &gram), d - r)
    };
    let frame = b * comp;
    let e = orthonormalizing_frame(&eta.gram(y, &frame)?)?;
    Ok(frame * e)
}

/// Coordinates in `frame` (assumed `η`-orthonormal) of the `η`-orthogonal
/// projection of `z` onto its span.
pub fn normal_coords(eta: &Metric, y: &Vector, frame: &Matrix, z: &Vector) -> Result<Vector> {
    let k = frame.ncols();
    let mut f = Matrix::zeros(y.len(), k + 1);
    f.columns_mut(0, k).copy_from(frame);
    f.set_column(k, z);
    let gram = eta.gram(y, &f)?;
    Ok(gram.view((0, k), (k, 1)).column(0).into_owned())
}

/// Minimum-norm solution of `d_g s(w) = v` over `T_g G`.
pub fn lift_along_source(g: &LieGroupoid, arrow: &Vector, v: &Vector) -> Result<Vector> {
    let b = g.arrows().tangent_basis(arrow);
    let a = g.ds(arrow) * &b;
    let (s, _) = sorted_svd(&a);
    let scale = s.first().copied().unwrap_or(0.0).max(1.0);
    let rank = s.iter().filter(|&&x| x > RANK_TOL * scale).count();
    if rank < g.objects().intrinsic_dim() {
        return Err(Error::LiftFailure(format!(
            "ds has rank {rank} < {}",
            g.objects().intrinsic_dim()
        )));
    }
    let c = solve_min_norm_vec(&a, v);
    let resid = (&a * &c - v).norm();
    if resid > 1e-8 * (1.0 + v.norm()) {
        return Err(Error::LiftFailure(format!("source lift misses by {resid:.3e}")));
    }
    Ok(b * c)
}

/// `T_g v` from an explicit lift `w` with `ds(w) = v`, as a vector in the
/// normal space at `t(g)` complementary to `tangent`.
pub fn normal_rep_from_lift(g: &LieGroupoid, eta: &Metric, arrow: &Vector, w: &Vector, tangent: &Matrix) -> Result<Vector> {
    let y = g.t(arrow);
    let z = g.dt(arrow) * w;
    let z = g.objects().project_tangent(&y, &z);
    let frame = normal_frame(eta, &y, tangent)?;
    Ok(&frame * normal_coords(eta, &y, &frame, &z)?)
}

/// `T_g v` with normal spaces taken complementary to `tangent_at(y)`.
pub fn normal_rep_with(
    g: &LieGroupoid,
    eta: &Metric,
    arrow: &Vector,
    v: &Vector,
    tangent_at: &dyn Fn(&Vector) -> Matrix,
) -> Result<Vector> {
    let w = lift_along_source(g, arrow, v)?;
    normal_rep_from_lift(g, eta, arrow, &w, &tangent_at(&g.t(arrow)))
}

/// `T_g v` for an arrow of `G_S`, normal spaces `η`-orthogonal to `S`.
pub fn normal_rep(g: &LieGroupoid, eta: &Metric, s: &SaturatedSubmanifold, arrow: &Vector, v: &Vector) -> Result<Vector> {
    let m = s.manifold().clone();
    normal_rep_with(g, eta, arrow, v, &move |y| m.tangent_basis(y))
}

/// Matrix of `T_g` in the `η`-orthonormal normal frames at `s(g)` and `t(g)`.
pub fn normal_rep_matrix(
    g: &LieGroupoid,
    eta: &Metric,
    arrow: &Vector,
    tangent_at: &dyn Fn(&Vector) -> Matrix,
) -> Result<Matrix> {
    let (x, y) = (g.s(arrow), g.t(arrow));
    let fx = normal_frame(eta, &x, &tangent_at(&x))?;
    let fy = normal_frame(eta, &y, &tangent_at(&y))?;
    let mut m = Matrix::zeros(fy.ncols(), fx.ncols());
    for j in 0..fx.ncols() {
        let w = lift_along_source(g, arrow, &fx.column(j).into_owned())?;
        let z = g.objects().project_tangent(&y, &(g.dt(arrow) * w));
        m.set_column(j, &normal_coords(eta, &y, &fy, &z)?);
    }
    Ok(m)
}

/// `max |σ − 1|` over the singular values of a normal representation matrix.
pub fn orthogonality_defect(m: &Matrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    sorted_svd(m).0.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::{Group, GroupAction};
    use crate::manifold::Manifold;

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    #[test]
    fn z2_reflection_acts_by_minus_one() {
        let g = LieGroupoid::action(GroupAction::linear(Group::z2(), Manifold::euclidean(1)).unwrap()).unwrap();
        let eta = Metric::euclidean(g.objects());
        let arrow = v(&[-1.0, 0.0]);
        let none = |y: &Vector| Matrix::zeros(y.len(), 0);
        let out = normal_rep_with(&g, &eta, &arrow, &v(&[0.7]), &none).unwrap();
        assert!((out - v(&[-0.7])).norm() < 1e-14);
    }

    #[test]
    fn so2_orbit_tangent_and_normal() {
        let g = LieGroupoid::action(GroupAction::linear(Group::special_orthogonal(2), Manifold::euclidean(2)).unwrap()).unwrap();
        let t = orbit_tangent(&g, &v(&[1.0, 0.0]));
        assert_eq!(t.ncols(), 1);
        assert!(t[(0, 0)].abs() < 1e-12 && (t[(1, 0)].abs() - 1.0).abs() < 1e-12);
        assert_eq!(orbit_tangent(&g, &v(&[0.0, 0.0])).ncols(), 0);
        let eta = Metric::euclidean(g.objects());
        let orbit = {
            let g = g.clone();
            move |y: &Vector| orbit_tangent(&g, y)
        };
        for a in g.sample_arrows(10, 3).unwrap() {
            let m = normal_rep_matrix(&g, &eta, &a, &orbit).unwrap();
            assert!(orthogonality_defect(&m) < 1e-10);
        }
    }

    #[test]
    fn lift_independence() {
        let g = LieGroupoid::action(GroupAction::linear(Group::special_orthogonal(2), Manifold::euclidean(2)).unwrap()).unwrap();
        let eta = Metric::euclidean(g.objects());
        let a = g.sample_arrows(1, 9).unwrap().remove(0);
        let x = g.s(&a);
        let w = lift_along_source(&g, &a, &x).unwrap();
        let basis = g.arrows().tangent_basis(&a);
        let kernel = null_space(&(g.ds(&a) * &basis), 1);
        let shifted = &w + &basis * &kernel * v(&[0.37]);
        let tangent = orbit_tangent(&g, &g.t(&a));
        let r1 = normal_rep_from_lift(&g, &eta, &a, &w, &tangent).unwrap();
        let r2 = normal_rep_from_lift(&g, &eta, &a, &shifted, &tangent).unwrap();
        assert!(r1.norm() > 0.1);
        assert!((r1 - r2).norm() < 1e-12);
    }
}
