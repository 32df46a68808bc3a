use std::f64::consts::PI;


use super::{Manifold, ManifoldKind, Space};
use crate::error::{Error, Result};
use crate::linalg::{block_diag, Matrix, Vector};

/// `R^n`. Samples come from the box `[-half_width, half_width]^n`.
#[derive(Debug, Clone)]
pub struct Euclidean {
    n: usize,
    half_width: f64,
}

impl Euclidean {
    pub fn new(n: usize) -> Self {
        Self { n, half_width: 2.0 }
    }

    pub fn with_half_width(mut self, w: f64) -> Self {
        self.half_width = w;
        self
    }
}

impl Space for Euclidean {
    fn label(&self) -> String {
        format!("R^{}", self.n)
    }
    fn kind(&self) -> ManifoldKind {
        ManifoldKind::Euclidean
    }
    fn ambient_dim(&self) -> usize {
        self.n
    }
    fn intrinsic_dim(&self) -> usize {
        self.n
    }
    fn project(&self, x: &Vector, _capture: f64) -> Result<Vector> {
        Ok(x.clone())
    }
    fn tangent_basis(&self, _x: &Vector) -> Matrix {
        Matrix::identity(self.n, self.n)
    }
    fn sample_dim(&self) -> usize {
        self.n
    }
    fn sample(&self, u: &[f64]) -> Option<Vector> {
        Some(Vector::from_iterator(
            self.n,
            u.iter().map(|&t| self.half_width * (2.0 * t - 1.0)),
        ))
    }
}

/// The unit sphere `S^n ⊂ R^{n+1}`; `n = 1` is the circle.
#[derive(Debug, Clone)]
pub struct Sphere {
    n: usize,
}

impl Sphere {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl Space for Sphere {
    fn label(&self) -> String {
        if self.n == 1 {
            "S^1".into()
        } else {
            format!("S^{}", self.n)
        }
    }
    fn kind(&self) -> ManifoldKind {
        ManifoldKind::Sphere
    }
    fn ambient_dim(&self) -> usize {
        self.n + 1
    }
    fn intrinsic_dim(&self) -> usize {
        self.n
    }
    fn project(&self, x: &Vector, capture: f64) -> Result<Vector> {
        let r = x.norm();
        let distance = (r - 1.0).abs();
        if r < 1e-12 || distance > capture {
            return Err(Error::CaptureRadiusExceeded {
                radius: capture,
                distance,
            });
        }
        Ok(x / r)
    }
    fn tangent_basis(&self, x: &Vector) -> Matrix {
        let u = x / x.norm();
        if self.n == 1 {
            return Matrix::from_column_slice(2, 1, &[-u[1], u[0]]);
        }
        let p = Matrix::identity(self.n + 1, self.n + 1) - &u * u.transpose();
        crate::linalg::basis_from_projector(&p, self.n)
    }
    fn sample_dim(&self) -> usize {
        match self.n {
            1 => 1,
            2 => 2,
            n => 2 * (n + 2) / 2,
        }
    }
    fn sample(&self, u: &[f64]) -> Option<Vector> {
        match self.n {
            1 => {
                let a = 2.0 * PI * u[0];
                Some(Vector::from_vec(vec![a.cos(), a.sin()]))
            }
            2 => {
                let z = 2.0 * u[0] - 1.0;
                let phi = 2.0 * PI * u[1];
                let r = (1.0 - z * z).max(0.0).sqrt();
                Some(Vector::from_vec(vec![r * phi.cos(), r * phi.sin(), z]))
            }
            n => {
                let mut g = Vec::with_capacity(n + 2);
                for pair in u.chunks(2) {
                    let r = (-2.0 * (1.0 - pair[0]).max(1e-300).ln()).sqrt();
                    let t = 2.0 * PI * pair.get(1).copied().unwrap_or(0.0);
                    g.push(r * t.cos());
                    g.push(r * t.sin());
                }
                g.truncate(n + 1);
                let v = Vector::from_vec(g);
                let nv = v.norm();
                (nv > 1e-12).then(|| v / nv)
            }
        }
    }
}

/// `SO(n)` as `n × n` matrices, stored row-major in `R^{n²}`.
#[derive(Debug, Clone)]
pub struct SpecialOrthogonal {
    n: usize,
}

impl SpecialOrthogonal {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn to_matrix(n: usize, x: &Vector) -> Matrix {
        Matrix::from_row_slice(n, n, x.as_slice())
    }

    pub fn from_matrix(m: &Matrix) -> Vector {
        Vector::from_iterator(m.len(), m.transpose().iter().copied())
    }

    /// Orthonormal basis of the skew-symmetric matrices (Frobenius inner product).
    pub fn skew_basis(n: usize) -> Vec<Matrix> {
        let mut out = Vec::new();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for a in 0..n {
            for b in (a + 1)..n {
                let mut e = Matrix::zeros(n, n);
                e[(a, b)] = -s;
                e[(b, a)] = s;
                out.push(e);
            }
        }
        out
    }

    /// Nearest rotation by polar decomposition.
    pub fn nearest_rotation(m: &Matrix) -> Option<Matrix> {
        let n = m.nrows();
        if m.nrows() == 0 || !m.iter().all(|x| x.is_finite()) {
            return None;
        }
        let (mut u, _, v) = crate::linalg::full_svd(m);
        let v_t = v.transpose();
        let mut r = &u * &v_t;
        if r.determinant() < 0.0 {
            // Singular values are sorted, so the smallest is last.
            let imin = n - 1;
            let col = -u.column(imin);
            u.set_column(imin, &col);
            r = &u * &v_t;
        }
        debug_assert_eq!(r.nrows(), n);
        Some(r)
    }
}

impl Space for SpecialOrthogonal {
    fn label(&self) -> String {
        format!("SO({})", self.n)
    }
    fn kind(&self) -> ManifoldKind {
        ManifoldKind::MatrixGroup
    }
    fn ambient_dim(&self) -> usize {
        self.n * self.n
    }
    fn intrinsic_dim(&self) -> usize {
        self.n * (self.n - 1) / 2
    }
    fn project(&self, x: &Vector, capture: f64) -> Result<Vector> {
        let m = Self::to_matrix(self.n, x);
        let r = Self::nearest_rotation(&m).ok_or(Error::CaptureRadiusExceeded {
            radius: capture,
            distance: f64::INFINITY,
        })?;
        let out = Self::from_matrix(&r);
        let distance = (&out - x).norm();
        if distance > capture {
            return Err(Error::CaptureRadiusExceeded {
                radius: capture,
                distance,
            });
        }
        Ok(out)
    }
    fn tangent_basis(&self, x: &Vector) -> Matrix {
        let m = Self::to_matrix(self.n, x);
        let basis = Self::skew_basis(self.n);
        let mut t = Matrix::zeros(self.n * self.n, basis.len());
        for (k, e) in basis.iter().enumerate() {
            t.set_column(k, &Self::from_matrix(&(&m * e)));
        }
        t
    }
    fn sample_dim(&self) -> usize {
        match self.n {
            2 => 1,
            3 => 3,
            _ => 0,
        }
    }
    fn sample(&self, u: &[f64]) -> Option<Vector> {
        match self.n {
            1 => Some(Vector::from_vec(vec![1.0])),
            2 => {
                let a = 2.0 * PI * u[0];
                Some(Vector::from_vec(vec![a.cos(), -a.sin(), a.sin(), a.cos()]))
            }
            3 => {
                let (s1, s2) = ((1.0 - u[0]).sqrt(), u[0].sqrt());
                let (a, b) = (2.0 * PI * u[1], 2.0 * PI * u[2]);
                let (x, y, z, w) = (s1 * a.sin(), s1 * a.cos(), s2 * b.sin(), s2 * b.cos());
                let r = Matrix::from_row_slice(
                    3,
                    3,
                    &[
                        1.0 - 2.0 * (y * y + z * z),
                        2.0 * (x * y - z * w),
                        2.0 * (x * z + y * w),
                        2.0 * (x * y + z * w),
                        1.0 - 2.0 * (x * x + z * z),
                        2.0 * (y * z - x * w),
                        2.0 * (x * z - y * w),
                        2.0 * (y * z + x * w),
                        1.0 - 2.0 * (x * x + y * y),
                    ],
                );
                Some(Self::from_matrix(&r))
            }
            _ => None,
        }
    }
}

/// A finite set of points: a zero-dimensional manifold.
#[derive(Debug, Clone)]
pub struct FiniteSet {
    points: Vec<Vector>,
    dim: usize,
}

impl FiniteSet {
    pub fn new(points: Vec<Vector>) -> Self {
        let dim = points.first().map_or(0, |p| p.len());
        Self { points, dim }
    }

    pub fn points(&self) -> &[Vector] {
        &self.points
    }
}

impl Space for FiniteSet {
    fn label(&self) -> String {
        format!("finite set of {}", self.points.len())
    }
    fn kind(&self) -> ManifoldKind {
        ManifoldKind::FiniteSet
    }
    fn ambient_dim(&self) -> usize {
        self.dim
    }
    fn intrinsic_dim(&self) -> usize {
        0
    }
    fn project(&self, x: &Vector, capture: f64) -> Result<Vector> {
        let (best, d) = self
            .points
            .iter()
            .map(|p| (p, (p - x).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or_else(|| Error::InvalidParams("empty finite set".into()))?;
        if d > capture {
            return Err(Error::CaptureRadiusExceeded {
                radius: capture,
                distance: d,
            });
        }
        Ok(best.clone())
    }
    fn tangent_basis(&self, _x: &Vector) -> Matrix {
        Matrix::zeros(self.dim, 0)
    }
    fn sample_dim(&self) -> usize {
        1
    }
    fn sample(&self, u: &[f64]) -> Option<Vector> {
        let n = self.points.len();
        let i = ((u[0] * n as f64) as usize).min(n.checked_sub(1)?);
        Some(self.points[i].clone())
    }
}

/// Cartesian product; ambient coordinates are concatenated.
#[derive(Debug, Clone)]
pub struct Product {
    factors: Vec<Manifold>,
}

impl Product {
    pub fn new(factors: Vec<Manifold>) -> Self {
        Self { factors }
    }

    pub fn factors(&self) -> &[Manifold] {
        &self.factors
    }

    fn blocks<'a>(&'a self, x: &'a Vector) -> impl Iterator<Item = (&'a Manifold, Vector)> + 'a {
        let mut off = 0;
        self.factors.iter().map(move |f| {
            let n = f.ambient_dim();
            let b = x.rows(off, n).into_owned();
            off += n;
            (f, b)
        })
    }
}

impl Space for Product {
    fn label(&self) -> String {
        self.factors
            .iter()
            .map(|f| f.label())
            .collect::<Vec<_>>()
            .join(" × ")
    }
    fn kind(&self) -> ManifoldKind {
        ManifoldKind::Product
    }
    fn ambient_dim(&self) -> usize {
        self.factors.iter().map(|f| f.ambient_dim()).sum()
    }
    fn intrinsic_dim(&self) -> usize {
        self.factors.iter().map(|f| f.intrinsic_dim()).sum()
    }
    fn project(&self, x: &Vector, capture: f64) -> Result<Vector> {
        let parts = self
            .blocks(x)
            .map(|(f, b)| f.space().project(&b, capture))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&Vector> = parts.iter().collect();
        Ok(crate::linalg::concat(&refs))
    }
    fn tangent_basis(&self, x: &Vector) -> Matrix {
        let blocks: Vec<Matrix> = self.blocks(x).map(|(f, b)| f.tangent_basis(&b)).collect();
        block_diag(&blocks)
    }
    fn sample_dim(&self) -> usize {
        self.factors.iter().map(|f| f.sample_dim()).sum()
    }
    fn sample(&self, u: &[f64]) -> Option<Vector> {
        let mut off = 0;
        let mut parts = Vec::new();
        for f in &self.factors {
            let k = f.sample_dim();
            parts.push(f.sample(&u[off..off + k])?);
            off += k;
        }
        let refs: Vec<&Vector> = parts.iter().collect();
        Some(crate::linalg::concat(&refs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn euclidean_projection_is_identity() {
        let m = Manifold::euclidean(2);
        let p = m.project(&Vector::from_vec(vec![1.0, 2.0])).unwrap();
        assert_eq!(p.as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn circle_radial_projection() {
        let m = Manifold::circle();
        let p = m.project(&Vector::from_vec(vec![2.0, 0.0])).unwrap();
        assert!((p - Vector::from_vec(vec![1.0, 0.0])).norm() < 1e-15);
    }

    #[test]
    fn circle_capture_radius() {
        let m = Manifold::circle().with_capture_radius(0.5);
        let e = m.project(&Vector::from_vec(vec![3.0, 0.0])).unwrap_err();
        assert!(matches!(e, Error::CaptureRadiusExceeded { .. }));
    }

    #[test]
    fn so2_polar_projection_matches_oracle() {
        // Polar decomposition of diag(1.1, 0.9): both singular vectors are the
        // coordinate axes, so the orthogonal factor is the identity.
        let m = Manifold::special_orthogonal(2);
        let x = Vector::from_vec(vec![1.1, 0.0, 0.0, 0.9]);
        let p = m.project(&x).unwrap();
        assert!((p - Vector::from_vec(vec![1.0, 0.0, 0.0, 1.0])).norm() < 1e-14);
    }

    #[test]
    fn so3_projection_of_reflection_lands_in_so3() {
        let m = Manifold::special_orthogonal(3);
        let x = Vector::from_vec(vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -0.9]);
        let m2 = m.clone().with_capture_radius(10.0);
        let p = m2.project(&x).unwrap();
        let r = SpecialOrthogonal::to_matrix(3, &p);
        assert!((r.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn finite_set_snaps() {
        let m = Manifold::finite_set(vec![
            Vector::from_vec(vec![-1.0]),
            Vector::from_vec(vec![1.0]),
        ]);
        assert_eq!(m.project(&Vector::from_vec(vec![0.8])).unwrap()[0], 1.0);
        assert_eq!(m.tangent_basis(&Vector::from_vec(vec![1.0])).ncols(), 0);
    }

    fn check_projector(m: &Manifold, x: &Vector) {
        let p = m.projector(x);
        assert!((&p * &p - &p).norm() < 1e-10);
        assert!((&p - p.transpose()).norm() < 1e-10);
        assert!((p.trace() - m.intrinsic_dim() as f64).abs() < 1e-10);
    }

    #[test]
    fn projector_invariants_at_many_points() {
        let spaces = [
            Manifold::sphere(2),
            Manifold::circle(),
            Manifold::special_orthogonal(3),
            Manifold::product(vec![Manifold::circle(), Manifold::euclidean(1)]),
        ];
        for m in &spaces {
            for x in m.sample_points(250, 3).unwrap() {
                assert!(m.contains(&x));
                check_projector(m, &x);
            }
        }
    }

    proptest! {
        #[test]
        fn sphere_projection_idempotent(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0) {
            let m = Manifold::sphere(2).with_capture_radius(10.0);
            let x = Vector::from_vec(vec![a, b, c]);
            prop_assume!(x.norm() > 1e-3);
            let p = m.project(&x).unwrap();
            let q = m.project(&p).unwrap();
            prop_assert!((p - q).norm() < 1e-15);
        }
    }
}
