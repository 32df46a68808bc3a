//! Horizontal lifts and Riemannian-submersion checks.

use rayon::prelude::*;

use super::Metric;
use crate::error::{Error, Result};
use crate::linalg::{null_space, orthonormalizing_frame, solve_min_norm, sorted_svd, sym_eigenvalues, Matrix, Vector, RANK_TOL};
use crate::map::MapRef;
use crate::report::Report;

/// Coordinates (in the orthonormal tangent basis `b` at `p`) of a basis of the
/// `total`-orthogonal complement of `ker df`, together with `df·b`.
fn horizontal_coords(total: &Metric, f: &MapRef, base_dim: usize, p: &Vector) -> Result<(Matrix, Matrix, Matrix)> {
    let b = total.manifold().tangent_basis(p);
    let d = b.ncols();
    let a = f.jacobian(p) * &b;
    let (s, _) = sorted_svd(&a);
    let scale = s.first().copied().unwrap_or(0.0).max(1.0);
    let rank = s.iter().filter(|&&x| x > RANK_TOL * scale).count();
    if base_dim > d || rank < base_dim {
        return Err(Error::RankDeficient {
            rank,
            expected: base_dim,
        });
    }
    let kernel = null_space(&a, d - base_dim);
    let g = total.gram(p, &b)?;
    let h = null_space(&(kernel.transpose() * &g), base_dim);
    Ok((b, a, h))
}

/// Horizontal lift at `p` of the base tangent frame `w` along `f`.
pub fn horizontal_lift(total: &Metric, f: &MapRef, base_dim: usize, p: &Vector, w: &Matrix) -> Result<Matrix> {
    let (b, a, h) = horizontal_coords(total, f, base_dim, p)?;
    let c = solve_min_norm(&(&a * &h), w);
    Ok(b * h * c)
}

/// `max |√λ − 1|` over the eigenvalues of `g_base` on the `df`-image of a
/// `g_total`-orthonormal horizontal frame at `p`.
pub fn submersion_defect_at(f: &MapRef, g_total: &Metric, g_base: &Metric, p: &Vector) -> Result<f64> {
    let base_dim = g_base.manifold().intrinsic_dim();
    let (b, a, h) = horizontal_coords(g_total, f, base_dim, p)?;
    let gh = h.transpose() * g_total.gram(p, &b)? * &h;
    let e = orthonormalizing_frame(&gh)?;
    let images = &a * &h * e;
    let gb = g_base.gram(&f.eval(p), &images)?;
    Ok(sym_eigenvalues(&gb)
        .iter()
        .map(|&l| (l.max(0.0).sqrt() - 1.0).abs())
        .fold(0.0, f64::max))
}

/// Sampled Riemannian-submersion check of `f: (M, g_total) → (N, g_base)`.
pub fn riemannian_submersion_check(
    f: &MapRef,
    g_total: &Metric,
    g_base: &Metric,
    samples: &[Vector],
    tol: f64,
) -> Result<Report> {
    let defects: Result<Vec<f64>> = samples
        .par_iter()
        .map(|p| submersion_defect_at(f, g_total, g_base, p))
        .collect();
    Ok(Report::from_defects("riemannian_submersion_check", defects?, tol))
}

/// Metric on `T_y N` induced by declaring `df` isometric on the horizontal
/// space at `fiber_point`, as an ambient matrix `P g P` on the base.
pub fn pushforward_metric(
    f: &MapRef,
    g_total: &Metric,
    base: &super::Manifold,
    y: &Vector,
    fiber_point: &Vector,
) -> Result<Matrix> {
    let fy = f.eval(fiber_point);
    if (&fy - y).norm() > 1e-8 * (1.0 + y.norm()) {
        return Err(Error::InvalidParams("fiber point does not lie over y".into()));
    }
    let (b, a, h) = horizontal_coords(g_total, f, base.intrinsic_dim(), fiber_point)?;
    let p = base.projector(y);
    let c = solve_min_norm(&(&a * &h), &p);
    let lift = b * h * c;
    g_total.gram(fiber_point, &lift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Manifold;
    use crate::map::FnMap;

    fn pr() -> MapRef {
        FnMap::linear(Matrix::from_row_slice(1, 2, &[1.0, 0.0])).into_ref()
    }

    #[test]
    fn projection_is_riemannian_submersion() {
        let m = Manifold::euclidean(2);
        let n = Manifold::euclidean(1);
        let pts = m.sample_points(20, 1).unwrap();
        let r = riemannian_submersion_check(&pr(), &Metric::euclidean(&m), &Metric::euclidean(&n), &pts, 1e-12).unwrap();
        assert!(r.pass, "{}", r.max_defect);
    }

    #[test]
    fn scaled_base_fails_by_sqrt2_minus_1() {
        let m = Manifold::euclidean(2);
        let n = Manifold::euclidean(1);
        let pts = m.sample_points(5, 2).unwrap();
        let r = riemannian_submersion_check(&pr(), &Metric::euclidean(&m), &Metric::euclidean(&n).scaled(2.0), &pts, 1e-6).unwrap();
        assert!(!r.pass);
        assert!((r.max_defect - (2f64.sqrt() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn pushforward_of_projection_is_euclidean() {
        let m = Manifold::euclidean(2);
        let n = Manifold::euclidean(1);
        let y = Vector::from_vec(vec![0.3]);
        for z in [-1.0, 0.0, 2.5] {
            let g = pushforward_metric(&pr(), &Metric::euclidean(&m), &n, &y, &Vector::from_vec(vec![0.3, z])).unwrap();
            assert!((g[(0, 0)] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rank_deficient_map_is_rejected() {
        let m = Manifold::euclidean(2);
        let n = Manifold::euclidean(1);
        let zero = FnMap::linear(Matrix::zeros(1, 2)).into_ref();
        let e = submersion_defect_at(&zero, &Metric::euclidean(&m), &Metric::euclidean(&n), &Vector::zeros(2));
        assert!(matches!(e, Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn horizontal_lift_is_orthogonal_to_fibers() {
        // Warped metric on R²: diag(1, 1) plus a cross term; lift of ∂x must be g-orthogonal to ∂y.
        let m = Manifold::euclidean(2);
        let g = Metric::from_fn(&m, |_| Matrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]));
        let lift = horizontal_lift(&g, &pr(), 1, &Vector::zeros(2), &Matrix::from_element(1, 1, 1.0)).unwrap();
        let ip = g.inner(&Vector::zeros(2), &lift.column(0).into_owned(), &Vector::from_vec(vec![0.0, 1.0])).unwrap();
        assert!(ip.abs() < 1e-14);
        assert!((lift[(0, 0)] - 1.0).abs() < 1e-14);
    }
}
