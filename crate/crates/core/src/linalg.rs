//! Small dense linear-algebra helpers shared by the geometry modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Singular values below `RANK_TOL * max(1, largest)` count as zero.
pub const RANK_TOL: f64 = 1e-9;

fn to_faer(a: &Matrix) -> faer::Mat<f64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Full SVD `a = u diag(s) vᵀ` with `s` in decreasing order.
pub fn full_svd(a: &Matrix) -> (Matrix, Vec<f64>, Matrix) {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return (Matrix::identity(m, m), Vec::new(), Matrix::identity(n, n));
    }
    let svd = match a.iter().all(|x| x.is_finite()).then(|| to_faer(a).svd().ok()).flatten() {
        Some(svd) => svd,
        None => return (Matrix::identity(m, m), vec![f64::NAN; m.min(n)], Matrix::identity(n, n)),
    };
    let d = svd.S().column_vector();
    let s: Vec<f64> = (0..m.min(n)).map(|i| d[i]).collect();
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    let (u0, v0) = (from_faer(svd.U()), from_faer(svd.V()));
    if idx.iter().enumerate().all(|(k, &i)| k == i) {
        return (u0, s, v0);
    }
    let (mut u, mut v) = (u0.clone(), v0.clone());
    for (k, &i) in idx.iter().enumerate() {
        u.set_column(k, &u0.column(i));
        v.set_column(k, &v0.column(i));
    }
    (u, idx.iter().map(|&i| s[i]).collect(), v)
}

/// Singular values (padded with zeros to `a.ncols()`) and all right singular
/// vectors, sorted by decreasing singular value.
pub fn sorted_svd(a: &Matrix) -> (Vec<f64>, Matrix) {
    let cols = a.ncols();
    if cols == 0 {
        return (Vec::new(), Matrix::zeros(0, 0));
    }
    let (_, mut s, v) = full_svd(a);
    s.resize(cols, 0.0);
    (s, v)
}

/// Orthonormal basis (as columns) of the `dim` least-stretched right singular directions.
pub fn null_space(a: &Matrix, dim: usize) -> Matrix {
    let cols = a.ncols();
    if dim == 0 {
        return Matrix::zeros(cols, 0);
    }
    if a.nrows() == 0 {
        let mut m = Matrix::zeros(cols, dim);
        for k in 0..dim {
            m[(k, k)] = 1.0;
        }
        return m;
    }
    let (_, v) = sorted_svd(a);
    v.columns(cols - dim, dim).into_owned()
}

pub fn numerical_rank(a: &Matrix) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let (s, _) = sorted_svd(a);
    let scale = s.first().copied().unwrap_or(0.0).max(1.0);
    s.iter().filter(|&&x| x > RANK_TOL * scale).count()
}

/// Orthonormal basis of the column space of `a`, rank decided by [`RANK_TOL`].
pub fn range_basis(a: &Matrix) -> Matrix {
    if a.ncols() == 0 || a.nrows() == 0 {
        return Matrix::zeros(a.nrows(), 0);
    }
    let (s, u) = sorted_svd(&a.transpose());
    let scale = s.first().copied().unwrap_or(0.0).max(1.0);
    let rank = s.iter().filter(|&&x| x > RANK_TOL * scale).count();
    u.columns(0, rank).into_owned()
}

/// Minimum-norm least-squares solution of `a x = b` (columns of `b` solved independently).
pub fn solve_min_norm(a: &Matrix, b: &Matrix) -> Matrix {
    if a.ncols() == 0 {
        return Matrix::zeros(0, b.ncols());
    }
    if a.nrows() == 0 {
        return Matrix::zeros(a.ncols(), b.ncols());
    }
    let (u, s, v) = full_svd(a);
    let scale = s.first().copied().unwrap_or(0.0).max(1.0);
    let rank = s.iter().filter(|&&x| x > RANK_TOL * scale).count();
    let mut ut_b = u.columns(0, rank).transpose() * b;
    for (k, mut row) in ut_b.row_iter_mut().enumerate() {
        row /= s[k];
    }
    v.columns(0, rank) * ut_b
}

pub fn solve_min_norm_vec(a: &Matrix, b: &Vector) -> Vector {
    let bm = Matrix::from_column_slice(b.len(), 1, b.as_slice());
    let x = solve_min_norm(a, &bm);
    x.column(0).into_owned()
}

/// Eigenvalues and eigenvectors (as columns) of a symmetric matrix.
pub fn sym_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), Matrix::zeros(0, 0));
    }
    let eig = match a.iter().all(|x| x.is_finite()).then(|| to_faer(a).self_adjoint_eigen(faer::Side::Lower).ok()).flatten() {
        Some(e) => e,
        None => return (vec![f64::NAN; n], Matrix::identity(n, n)),
    };
    let d = eig.S().column_vector();
    ((0..n).map(|i| d[i]).collect(), from_faer(eig.U()))
}

/// Top-`dim` eigenvectors of a symmetric projector.
pub fn basis_from_projector(p: &Matrix, dim: usize) -> Matrix {
    let n = p.nrows();
    if dim == 0 {
        return Matrix::zeros(n, 0);
    }
    let sym = (p + p.transpose()) * 0.5;
    let (values, vectors) = sym_eigen(&sym);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    let mut b = Matrix::zeros(n, dim);
    for k in 0..dim {
        b.set_column(k, &vectors.column(idx[k]));
    }
    b
}

/// Orthonormalize the columns of `f` (assumed full column rank).
pub fn orthonormalize(f: &Matrix) -> Matrix {
    if f.ncols() == 0 {
        return f.clone();
    }
    let qr = f.clone().qr();
    qr.q().columns(0, f.ncols()).into_owned()
}

/// Symmetric eigenvalues of `a`, ascending.
pub fn sym_eigenvalues(a: &Matrix) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let sym = (a + a.transpose()) * 0.5;
    let (mut ev, _) = sym_eigen(&sym);
    ev.sort_by(f64::total_cmp);
    ev
}

/// Change of frame `e` such that `eᵀ gram e = I`.
pub fn orthonormalizing_frame(gram: &Matrix) -> Result<Matrix> {
    let n = gram.nrows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let sym = (gram + gram.transpose()) * 0.5;
    let chol = sym
        .cholesky()
        .ok_or_else(|| Error::InvalidParams("gram matrix not positive definite".into()))?;
    let l = chol.l();
    let inv = l
        .solve_lower_triangular(&Matrix::identity(n, n))
        .ok_or_else(|| Error::InvalidParams("singular cholesky factor".into()))?;
    Ok(inv.transpose())
}

/// Generalized eigenvalues of `other` relative to the positive-definite `reference`.
pub fn relative_eigenvalues(reference: &Matrix, other: &Matrix) -> Result<Vec<f64>> {
    let e = orthonormalizing_frame(reference)?;
    Ok(sym_eigenvalues(&(e.transpose() * other * &e)))
}

/// Operator-norm distance from an isometry: `max |sqrt(λ) - 1|` over relative eigenvalues.
pub fn isometry_defect(reference: &Matrix, other: &Matrix) -> Result<f64> {
    let ev = relative_eigenvalues(reference, other)?;
    Ok(ev
        .iter()
        .map(|&l| (l.max(0.0).sqrt() - 1.0).abs())
        .fold(0.0, f64::max))
}

pub fn block_diag(blocks: &[Matrix]) -> Matrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut m = Matrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        m.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    m
}

pub fn concat(parts: &[&Vector]) -> Vector {
    let n: usize = parts.iter().map(|p| p.len()).sum();
    let mut out = Vector::zeros(n);
    let mut off = 0;
    for p in parts {
        out.rows_mut(off, p.len()).copy_from(p);
        off += p.len();
    }
    out
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0, |a, &b| a.max(b.abs()))
}

#[cfg(test)]
mod tests {
    #[test]
    fn svd_of_a_tall_rank_three_matrix() {
        // A 6×3 horizontal-lift system that a bidiagonal SVD got wrong by 5e-2.
        let a = Matrix::from_column_slice(
            6,
            3,
            &[
                -0.44596813951306313, 0.27826114002411295, 0.07404355579819544, -0.7433933595456195, -0.3861601699479819,
                0.0740435557981953, 0.3254027682908095, -0.20303456065374523, -0.41885360326454674, -0.34499381545655255,
                -0.1792091208470495, -0.41885360326454635, -0.6442098566418133, 0.4019537568752052, -0.2628292428118786,
                0.3403670537317928, 0.17680572152823654, -0.26282924281187847,
            ],
        );
        let (u, s, v) = full_svd(&a);
        let mut sigma = Matrix::zeros(6, 3);
        for (k, x) in s.iter().enumerate() {
            sigma[(k, k)] = *x;
        }
        assert!((&u * sigma * v.transpose() - &a).norm() < 1e-13);
        let b = &a * Vector::from_vec(vec![0.3, -1.0, 2.0]);
        let x = solve_min_norm_vec(&a, &b);
        assert!((x - Vector::from_vec(vec![0.3, -1.0, 2.0])).norm() < 1e-12);
    }

    use super::*;

    #[test]
    fn null_space_of_row() {
        let a = Matrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let n = null_space(&a, 2);
        assert!((&a * &n).norm() < 1e-14);
        assert!((n.transpose() * &n - Matrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn isometry_defect_of_scaled_form() {
        let r = Matrix::identity(2, 2);
        let o = Matrix::identity(2, 2) * 2.0;
        let d = isometry_defect(&r, &o).unwrap();
        assert!((d - (2f64.sqrt() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn min_norm_solution() {
        let a = Matrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let x = solve_min_norm_vec(&a, &Vector::from_vec(vec![2.0]));
        assert!((x - Vector::from_vec(vec![1.0, 1.0])).norm() < 1e-14);
    }
}
