//! Lie algebroids: fiber and anchor at a point for any groupoid, and the
//! bracket of sections for action groupoids.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::foliation::{lie_bracket, VectorField};
use crate::groupoid::{GroupAction, LieGroupoid};
use crate::linalg::{null_space, numerical_rank, solve_min_norm_vec, Matrix, Vector};
use crate::map::FD_STEP;
use crate::report::Report;

pub const LEIBNIZ_TOL: f64 = 1e-4;
pub const ANTISYMMETRY_TOL: f64 = 1e-6;
pub const ANCHOR_TOL: f64 = 1e-3;

/// `A_x = ker d_{1_x}s` with the anchor `ρ_x = d_{1_x}t|_{A_x}`.
#[derive(Clone, Debug, Serialize)]
pub struct AlgebroidFiber {
    pub point: Vector,
    /// Orthonormal ambient basis of `A_x` as columns.
    pub basis: Matrix,
    /// Ambient images of the basis vectors under `dt`.
    pub anchor: Matrix,
}

impl AlgebroidFiber {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn anchor_rank(&self) -> usize {
        numerical_rank(&self.anchor)
    }

    /// Largest `|ds · b|` over basis vectors `b`.
    pub fn kernel_residual(&self, g: &LieGroupoid) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        (g.ds(&g.u(&self.point)) * &self.basis).abs().max()
    }

    /// `ρ` applied to an ambient tangent vector at `1_x`; the vector is first
    /// projected onto `A_x`.
    pub fn anchor_of(&self, v: &Vector) -> Vector {
        &self.anchor * (self.basis.transpose() * v)
    }
}

pub fn algebroid_at(g: &LieGroupoid, x: &Vector) -> Result<AlgebroidFiber> {
    let one = g.u(x);
    let tangent = g.arrows().tangent_basis(&one);
    let m = g.objects().intrinsic_dim();
    let k = tangent.ncols();
    if k < m {
        return Err(Error::RankDeficient { rank: k, expected: m });
    }
    let dst = g.ds(&one) * &tangent;
    let rank = numerical_rank(&dst);
    if rank != m {
        return Err(Error::RankDeficient { rank, expected: m });
    }
    let basis = &tangent * null_space(&dst, k - m);
    let anchor = g.dt(&one) * &basis;
    Ok(AlgebroidFiber {
        point: x.clone(),
        basis,
        anchor,
    })
}

/// `dim A_x = dim G − dim M` at sampled objects.
pub fn check_fiber_dims(g: &LieGroupoid, n: usize, seed: u64) -> Result<Report> {
    let expected = g.arrows().intrinsic_dim() - g.objects().intrinsic_dim();
    let defects = g
        .objects()
        .sample_points(n, seed)?
        .iter()
        .map(|x| match algebroid_at(g, x) {
            Ok(f) => (f.dim() as f64 - expected as f64).abs() + (f.kernel_residual(g) > 1e-8) as u8 as f64,
            Err(_) => f64::INFINITY,
        })
        .collect();
    Ok(Report::from_defects("algebroid_fiber", defects, 0.5).with_data("fiber_dim", expected))
}

/// `x ↦` coefficients in the Lie-algebra basis of the acting group.
pub type Section = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;

/// The action algebroid `M × 𝔨` of `K ↷ M`.
#[derive(Clone)]
pub struct ActionAlgebroid {
    action: GroupAction,
    basis: Matrix,
}

impl std::fmt::Debug for ActionAlgebroid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ActionAlgebroid")
            .field("action", &self.action.label())
            .field("rank", &self.rank())
            .finish()
    }
}

impl ActionAlgebroid {
    pub fn new(action: GroupAction) -> Self {
        let b = action.group().lie_algebra_basis();
        let mut basis = Matrix::zeros(action.group().ambient_dim(), b.len());
        for (j, v) in b.iter().enumerate() {
            basis.set_column(j, v);
        }
        Self { action, basis }
    }

    pub fn of(g: &LieGroupoid) -> Result<Self> {
        g.group_action()
            .cloned()
            .map(Self::new)
            .ok_or_else(|| Error::InvalidParams(format!("{} is not an action groupoid", g.name())))
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    /// Lie-algebra bracket on coefficient vectors.
    pub fn algebra_bracket(&self, a: &Vector, b: &Vector) -> Vector {
        let g = self.action.group();
        let c = g.bracket(&(&self.basis * a), &(&self.basis * b));
        solve_min_norm_vec(&self.basis, &c)
    }

    pub fn anchor(&self, a: &Section, x: &Vector) -> Vector {
        self.action.infinitesimal(&(&self.basis * a(x)), x)
    }

    pub fn anchor_field(&self, a: &Section) -> VectorField {
        let (me, a) = (self.clone(), a.clone());
        Arc::new(move |x| me.anchor(&a, x))
    }

    /// `[α, β](x) = [α(x), β(x)] + L_{ρα}β − L_{ρβ}α`.
    pub fn bracket_at(&self, a: &Section, b: &Section, x: &Vector) -> Vector {
        let ra = self.anchor(a, x);
        let rb = self.anchor(b, x);
        self.algebra_bracket(&a(x), &b(x)) + directional(b, x, &ra) - directional(a, x, &rb)
    }

    pub fn bracket(&self, a: &Section, b: &Section) -> Section {
        let (me, a, b) = (self.clone(), a.clone(), b.clone());
        Arc::new(move |x| me.bracket_at(&a, &b, x))
    }
}

/// Central difference of `σ` at `x` along `v`.
fn directional(sigma: &Section, x: &Vector, v: &Vector) -> Vector {
    let h = FD_STEP;
    (sigma(&(x + v * h)) - sigma(&(x - v * h))) / (2.0 * h)
}

fn directional_scalar(f: &ScalarFn, x: &Vector, v: &Vector) -> f64 {
    let h = FD_STEP;
    (f(&(x + v * h)) - f(&(x - v * h))) / (2.0 * h)
}

/// Points of `M` from the unit ball of the ambient space, projected onto `M`.
fn ball_points(g: &LieGroupoid, n: usize, seed: u64) -> Vec<Vector> {
    let dim = g.objects().ambient_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut tries = 0;
    while out.len() < n && tries < 1000 * n.max(1) {
        tries += 1;
        let y = Vector::from_fn(dim, |_, _| 2.0 * rng.random::<f64>() - 1.0);
        if y.norm() >= 1.0 {
            continue;
        }
        if let Ok(p) = g.objects().project(&y) {
            out.push(p);
        }
    }
    out
}

fn evaluate(op: &str, g: &LieGroupoid, n: usize, seed: u64, tol: f64, residual: impl Fn(&ActionAlgebroid, &Vector) -> f64 + Sync) -> Report {
    let alg = match ActionAlgebroid::of(g) {
        Ok(a) => a,
        Err(e) => return Report::failure(op, tol, e.to_string()),
    };
    let pts = ball_points(g, n, seed);
    if pts.is_empty() {
        return Report::failure(op, tol, "no sample points");
    }
    let defects = pts.par_iter().map(|x| residual(&alg, x)).collect();
    Report::from_defects(op, defects, tol)
}

/// Residual of `[α, fβ] − f[α, β] − (ρ(α)f) β` at `n` points.
pub fn leibniz_check(g: &LieGroupoid, a: &Section, b: &Section, f: &ScalarFn, n: usize, seed: u64, tol: f64) -> Report {
    let fb: Section = {
        let (f, b) = (f.clone(), b.clone());
        Arc::new(move |x| b(x) * f(x))
    };
    evaluate("leibniz", g, n, seed, tol, |alg, x| {
        let lhs = alg.bracket_at(a, &fb, x);
        let rhs = alg.bracket_at(a, b, x) * f(x) + b(x) * directional_scalar(f, x, &alg.anchor(a, x));
        (lhs - rhs).norm()
    })
    .with_note("identity checked: [a, f b] = f [a, b] + (rho(a) f) b")
}

/// Residual of `[α, β] + [β, α]`.
pub fn antisymmetry_check(g: &LieGroupoid, a: &Section, b: &Section, n: usize, seed: u64, tol: f64) -> Report {
    evaluate("antisymmetry", g, n, seed, tol, |alg, x| {
        (alg.bracket_at(a, b, x) + alg.bracket_at(b, a, x)).norm()
    })
}

/// Residual of `ρ[α, β] − [ρα, ρβ]` with the vector-field bracket by central
/// differences.
pub fn anchor_check(g: &LieGroupoid, a: &Section, b: &Section, n: usize, seed: u64, tol: f64) -> Report {
    evaluate("anchor_bracket", g, n, seed, tol, |alg, x| {
        let ab = alg.bracket(a, b);
        let lhs = alg.anchor(&ab, x);
        let rhs = lie_bracket(&alg.anchor_field(a), &alg.anchor_field(b), x);
        (lhs - rhs).norm()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::{Group, GroupAction};
    use crate::manifold::Manifold;
    use nalgebra::dvector;

    fn so2_plane() -> LieGroupoid {
        LieGroupoid::action(GroupAction::linear(Group::special_orthogonal(2), Manifold::euclidean(2)).unwrap()).unwrap()
    }

    fn so3_space() -> LieGroupoid {
        LieGroupoid::action(GroupAction::linear(Group::special_orthogonal(3), Manifold::euclidean(3)).unwrap()).unwrap()
    }

    fn section(f: impl Fn(&Vector) -> Vector + Send + Sync + 'static) -> Section {
        Arc::new(f)
    }

    #[test]
    fn unit_groupoid_has_zero_fiber() {
        let g = LieGroupoid::unit(Manifold::euclidean(2));
        let a = algebroid_at(&g, &dvector![0.3, -1.0]).unwrap();
        assert_eq!(a.dim(), 0);
        assert_eq!(a.anchor.shape(), (2, 0));
    }

    #[test]
    fn pair_groupoid_anchor_is_identity() {
        let g = LieGroupoid::pair(Manifold::euclidean(3));
        let x = dvector![0.1, 0.2, -0.4];
        let a = algebroid_at(&g, &x).unwrap();
        assert_eq!(a.dim(), 3);
        assert!(a.kernel_residual(&g) < 1e-8);
        // ker ds is the target factor; ρ(0, v) = v
        for i in 0..3 {
            let mut v = Vector::zeros(6);
            v[3 + i] = 1.0;
            let mut e = Vector::zeros(3);
            e[i] = 1.0;
            assert!((a.anchor_of(&v) - e).norm() < 1e-8);
        }
    }

    #[test]
    fn rotation_anchor_is_the_orbit_tangent() {
        let g = so2_plane();
        let a = algebroid_at(&g, &dvector![1.0, 0.0]).unwrap();
        assert_eq!(a.dim(), 1);
        assert_eq!(a.anchor_rank(), 1);
        let r = a.anchor.column(0);
        // the generator is J/√2 in the Frobenius-orthonormal basis
        assert!(r[0].abs() < 1e-8);
        assert!((r[1].abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-8, "{r}");
        // at the fixed point the anchor vanishes
        assert_eq!(algebroid_at(&g, &dvector![0.0, 0.0]).unwrap().anchor_rank(), 0);
    }

    #[test]
    fn fiber_dims_match() {
        for g in [so2_plane(), so3_space(), LieGroupoid::pair(Manifold::sphere(2))] {
            let r = check_fiber_dims(&g, 16, 3).unwrap();
            assert!(r.pass, "{}", g.name());
        }
    }

    #[test]
    fn constant_sections_satisfy_leibniz() {
        let g = so2_plane();
        let a = section(|_| dvector![1.0]);
        let b = section(|_| dvector![-2.5]);
        let f: ScalarFn = Arc::new(|_| 3.0);
        let r = leibniz_check(&g, &a, &b, &f, 50, 1, LEIBNIZ_TOL);
        assert!(r.max_defect < 1e-9, "{}", r.max_defect);
    }

    #[test]
    fn leibniz_with_linear_function() {
        let g = so2_plane();
        let alg = ActionAlgebroid::of(&g).unwrap();
        let a = section(|_| dvector![1.0]);
        let b = section(|_| dvector![1.0]);
        let f: ScalarFn = Arc::new(|x| x[0]);
        let r = leibniz_check(&g, &a, &b, &f, 200, 7, LEIBNIZ_TOL);
        assert_eq!(r.samples, 200);
        assert!(r.pass, "{}", r.max_defect);
        // symbolically [a, f b] = ρ(a)(x₁) b, and ρ(a) is a rotation field
        let x = dvector![0.3, -0.6];
        let rho = alg.anchor(&a, &x);
        let fb: Section = Arc::new(|x: &Vector| dvector![x[0]]);
        assert!((alg.bracket_at(&a, &fb, &x)[0] - rho[0]).abs() < 1e-8);
        assert!((rho.norm() - x.norm() * std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-8);
        assert!(rho.dot(&x).abs() < 1e-8);
    }

    #[test]
    fn so3_identities() {
        let g = so3_space();
        let a = section(|x: &Vector| dvector![x[0], 1.0, x[1] * x[2]]);
        let b = section(|x: &Vector| dvector![x[2].sin(), x[0] - x[1], 0.5]);
        let f: ScalarFn = Arc::new(|x| x[0] * x[1] + x[2].cos());
        assert!(leibniz_check(&g, &a, &b, &f, 60, 2, LEIBNIZ_TOL).pass);
        assert!(antisymmetry_check(&g, &a, &b, 60, 2, ANTISYMMETRY_TOL).pass);
        let r = anchor_check(&g, &a, &b, 60, 2, ANCHOR_TOL);
        assert!(r.pass, "{}", r.max_defect);
    }

    #[test]
    fn non_action_groupoid_fails_gracefully() {
        let g = LieGroupoid::pair(Manifold::euclidean(2));
        let a = section(|_| dvector![1.0]);
        let f: ScalarFn = Arc::new(|_| 1.0);
        let r = leibniz_check(&g, &a, &a, &f, 10, 0, LEIBNIZ_TOL);
        assert!(!r.pass);
    }
}
