//! Matrix groups, their actions, and Haar quadrature.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::manifold::{Manifold, SpecialOrthogonal};
use crate::report::Report;
use crate::sampling::Halton;

#[derive(Debug, Clone)]
enum GroupKind {
    /// Finite group of `m × m` matrices.
    Finite { m: usize, elements: Vec<Matrix> },
    SpecialOrthogonal(usize),
    /// `R^n` under addition.
    Translation(usize),
}

/// A Lie group with elements stored as ambient vectors: row-major matrices
/// for matrix groups, plain vectors for translations.
#[derive(Debug, Clone)]
pub struct Group {
    kind: GroupKind,
    manifold: Manifold,
    label: String,
}

impl Group {
    pub fn finite(label: impl Into<String>, elements: Vec<Matrix>) -> Result<Self> {
        let m = elements
            .first()
            .map(|e| e.nrows())
            .ok_or_else(|| Error::InvalidParams("finite group needs elements".into()))?;
        let find = |a: &Matrix| elements.iter().any(|e| (e - a).norm() < 1e-12);
        if !find(&Matrix::identity(m, m)) {
            return Err(Error::InvalidParams("finite group lacks the identity".into()));
        }
        for a in &elements {
            for b in &elements {
                if !find(&(a * b)) {
                    return Err(Error::InvalidParams("finite group not closed under products".into()));
                }
            }
        }
        let points = elements.iter().map(SpecialOrthogonal::from_matrix).collect();
        Ok(Self {
            kind: GroupKind::Finite { m, elements },
            manifold: Manifold::finite_set(points),
            label: label.into(),
        })
    }

    /// `Z/2 = {1, −1}` acting on a line.
    pub fn z2() -> Self {
        Self::finite(
            "Z/2",
            vec![Matrix::identity(1, 1), -Matrix::identity(1, 1)],
        )
        .expect("Z/2 is a group")
    }

    /// The trivial group of `m × m` identity matrices.
    pub fn trivial(m: usize) -> Self {
        Self::finite("trivial", vec![Matrix::identity(m, m)]).expect("trivial group")
    }

    pub fn special_orthogonal(n: usize) -> Self {
        Self {
            kind: GroupKind::SpecialOrthogonal(n),
            manifold: Manifold::special_orthogonal(n),
            label: format!("SO({n})"),
        }
    }

    pub fn translation(n: usize) -> Self {
        Self {
            kind: GroupKind::Translation(n),
            manifold: Manifold::euclidean(n),
            label: format!("R^{n}"),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn dim(&self) -> usize {
        self.manifold.intrinsic_dim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.manifold.ambient_dim()
    }

    pub fn is_compact(&self) -> bool {
        !matches!(self.kind, GroupKind::Translation(_))
    }

    /// Matrix size for matrix groups.
    pub fn matrix_size(&self) -> Option<usize> {
        match &self.kind {
            GroupKind::Finite { m, .. } => Some(*m),
            GroupKind::SpecialOrthogonal(n) => Some(*n),
            GroupKind::Translation(_) => None,
        }
    }

    pub fn to_matrix(&self, k: &Vector) -> Option<Matrix> {
        self.matrix_size().map(|m| SpecialOrthogonal::to_matrix(m, k))
    }

    pub fn identity(&self) -> Vector {
        match self.matrix_size() {
            Some(m) => SpecialOrthogonal::from_matrix(&Matrix::identity(m, m)),
            None => Vector::zeros(self.ambient_dim()),
        }
    }

    pub fn mul(&self, a: &Vector, b: &Vector) -> Vector {
        match self.matrix_size() {
            Some(m) => {
                let p = SpecialOrthogonal::to_matrix(m, a) * SpecialOrthogonal::to_matrix(m, b);
                SpecialOrthogonal::from_matrix(&p)
            }
            None => a + b,
        }
    }

    /// Partial Jacobians of `(a, b) ↦ ab` in ambient coordinates.
    pub fn mul_jacobian(&self, a: &Vector, b: &Vector) -> (Matrix, Matrix) {
        match self.matrix_size() {
            Some(m) => {
                let am = SpecialOrthogonal::to_matrix(m, a);
                let bm = SpecialOrthogonal::to_matrix(m, b);
                let id = Matrix::identity(m, m);
                (id.kronecker(&bm.transpose()), am.kronecker(&id))
            }
            None => {
                let n = self.ambient_dim();
                (Matrix::identity(n, n), Matrix::identity(n, n))
            }
        }
    }

    pub fn inv(&self, a: &Vector) -> Vector {
        match &self.kind {
            GroupKind::SpecialOrthogonal(n) => {
                SpecialOrthogonal::from_matrix(&SpecialOrthogonal::to_matrix(*n, a).transpose())
            }
            GroupKind::Finite { m, elements } => {
                let am = SpecialOrthogonal::to_matrix(*m, a);
                let id = Matrix::identity(*m, *m);
                let inv = elements
                    .iter()
                    .find(|e| (&am * *e - &id).norm() < 1e-9)
                    .cloned()
                    .or_else(|| am.clone().try_inverse())
                    .unwrap_or(id);
                SpecialOrthogonal::from_matrix(&inv)
            }
            GroupKind::Translation(_) => -a,
        }
    }

    pub fn inv_jacobian(&self, a: &Vector) -> Matrix {
        match &self.kind {
            GroupKind::SpecialOrthogonal(n) => transpose_permutation(*n),
            GroupKind::Finite { m, .. } => {
                let ai = SpecialOrthogonal::to_matrix(*m, &self.inv(a));
                -ai.kronecker(&ai.transpose())
            }
            GroupKind::Translation(n) => -Matrix::identity(*n, *n),
        }
    }

    /// Orthonormal basis of the Lie algebra as ambient tangent vectors at the identity.
    pub fn lie_algebra_basis(&self) -> Vec<Vector> {
        match &self.kind {
            GroupKind::Finite { .. } => Vec::new(),
            GroupKind::SpecialOrthogonal(n) => SpecialOrthogonal::skew_basis(*n)
                .iter()
                .map(SpecialOrthogonal::from_matrix)
                .collect(),
            GroupKind::Translation(n) => (0..*n)
                .map(|i| {
                    let mut e = Vector::zeros(*n);
                    e[i] = 1.0;
                    e
                })
                .collect(),
        }
    }

    /// Bracket of Lie-algebra elements, `[ξ, η] = ηξ − ξη` on matrices. With
    /// this sign the infinitesimal action of a left action is a Lie-algebra
    /// homomorphism into vector fields.
    pub fn bracket(&self, xi: &Vector, eta: &Vector) -> Vector {
        match self.matrix_size() {
            Some(m) => {
                let x = SpecialOrthogonal::to_matrix(m, xi);
                let y = SpecialOrthogonal::to_matrix(m, eta);
                SpecialOrthogonal::from_matrix(&(&y * &x - &x * &y))
            }
            None => Vector::zeros(self.ambient_dim()),
        }
    }

    pub fn sample_dim(&self) -> usize {
        self.manifold.sample_dim()
    }

    pub fn sample(&self, u: &[f64]) -> Option<Vector> {
        self.manifold.sample(u)
    }

    /// Haar quadrature. `order` is the node count for the circle and the
    /// per-angle node count for `SO(3)`; finite groups ignore it.
    pub fn haar(&self, order: usize) -> Result<QuadratureRule> {
        match &self.kind {
            GroupKind::Translation(_) => Err(Error::NotCompactGroup),
            GroupKind::Finite { elements, .. } => {
                let w = 1.0 / elements.len() as f64;
                QuadratureRule::new(
                    elements.iter().map(SpecialOrthogonal::from_matrix).collect(),
                    vec![w; elements.len()],
                )
            }
            GroupKind::SpecialOrthogonal(1) => {
                QuadratureRule::new(vec![Vector::from_vec(vec![1.0])], vec![1.0])
            }
            GroupKind::SpecialOrthogonal(2) => {
                if order == 0 {
                    return Err(Error::QuadratureInvalid("circle rule needs nodes".into()));
                }
                let nodes = (0..order)
                    .map(|j| {
                        let a = 2.0 * PI * j as f64 / order as f64;
                        Vector::from_vec(vec![a.cos(), -a.sin(), a.sin(), a.cos()])
                    })
                    .collect();
                QuadratureRule::new(nodes, vec![1.0 / order as f64; order])
            }
            GroupKind::SpecialOrthogonal(3) => {
                if order < 2 {
                    return Err(Error::QuadratureInvalid("SO(3) rule needs order ≥ 2".into()));
                }
                let (cb, wb) = gauss_legendre((order / 2).max(1));
                let mut nodes = Vec::new();
                let mut weights = Vec::new();
                for ia in 0..order {
                    let a = 2.0 * PI * ia as f64 / order as f64;
                    for (c, w) in cb.iter().zip(&wb) {
                        let b = c.clamp(-1.0, 1.0).acos();
                        for ig in 0..order {
                            let g = 2.0 * PI * ig as f64 / order as f64;
                            let r = rot_z(a) * rot_y(b) * rot_z(g);
                            nodes.push(SpecialOrthogonal::from_matrix(&r));
                            weights.push(0.5 * w / (order * order) as f64);
                        }
                    }
                }
                QuadratureRule::new(nodes, weights)
            }
            GroupKind::SpecialOrthogonal(n) => Err(Error::QuadratureInvalid(format!(
                "no Haar rule implemented for SO({n})"
            ))),
        }
    }
}

fn transpose_permutation(n: usize) -> Matrix {
    let mut p = Matrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            p[(j * n + i, i * n + j)] = 1.0;
        }
    }
    p
}

fn rot_z(a: f64) -> Matrix {
    Matrix::from_row_slice(3, 3, &[a.cos(), -a.sin(), 0.0, a.sin(), a.cos(), 0.0, 0.0, 0.0, 1.0])
}

fn rot_y(b: f64) -> Matrix {
    Matrix::from_row_slice(3, 3, &[b.cos(), 0.0, b.sin(), 0.0, 1.0, 0.0, -b.sin(), 0.0, b.cos()])
}

/// Gauss–Legendre nodes and weights on [−1, 1].
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Nodes and positive weights summing to one.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<Vector>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(nodes: Vec<Vector>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::QuadratureInvalid("node and weight counts differ".into()));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::QuadratureInvalid("weights must be positive".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::QuadratureInvalid(format!("weights sum to {sum}")));
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&Vector) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(k, w)| w * f(k)).sum()
    }

    /// `|∫ f(k₀k) − ∫ f(k)|`: how far the rule is from left-invariance for `f`.
    pub fn translation_defect(&self, group: &Group, k0: &Vector, f: impl Fn(&Vector) -> f64) -> f64 {
        let a = self.integrate(|k| f(&group.mul(k0, k)));
        let b = self.integrate(&f);
        (a - b).abs()
    }
}

type ActFn = dyn Fn(&Vector, &Vector) -> Vector + Send + Sync;
type ActJac = dyn Fn(&Vector, &Vector) -> (Matrix, Matrix) + Send + Sync;

/// A smooth left action `K × M → M`.
#[derive(Clone)]
pub struct GroupAction {
    group: Group,
    space: Manifold,
    act: Arc<ActFn>,
    jac: Arc<ActJac>,
    label: String,
}

impl fmt::Debug for GroupAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupAction({})", self.label)
    }
}

impl GroupAction {
    pub fn new(
        group: Group,
        space: Manifold,
        act: impl Fn(&Vector, &Vector) -> Vector + Send + Sync + 'static,
        jac: impl Fn(&Vector, &Vector) -> (Matrix, Matrix) + Send + Sync + 'static,
    ) -> Self {
        let label = format!("{} on {}", group.label(), space.label());
        Self {
            group,
            space,
            act: Arc::new(act),
            jac: Arc::new(jac),
            label,
        }
    }

    /// A matrix group acting linearly on `space ⊂ R^m`.
    pub fn linear(group: Group, space: Manifold) -> Result<Self> {
        let m = group
            .matrix_size()
            .ok_or_else(|| Error::InvalidParams("linear action needs a matrix group".into()))?;
        if m != space.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: space.ambient_dim(),
                got: m,
            });
        }
        Ok(Self::new(
            group,
            space,
            move |k, x| SpecialOrthogonal::to_matrix(m, k) * x,
            move |k, x| {
                let km = SpecialOrthogonal::to_matrix(m, k);
                (Matrix::identity(m, m).kronecker(&x.transpose()), km)
            },
        ))
    }

    /// `R^n` translating `R^n`.
    pub fn translation(n: usize) -> Self {
        Self::new(
            Group::translation(n),
            Manifold::euclidean(n),
            |a, x| x + a,
            move |_, _| (Matrix::identity(n, n), Matrix::identity(n, n)),
        )
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn space(&self) -> &Manifold {
        &self.space
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn act(&self, k: &Vector, x: &Vector) -> Vector {
        (self.act)(k, x)
    }

    /// `(∂/∂k, ∂/∂x)` of the action in ambient coordinates.
    pub fn jacobians(&self, k: &Vector, x: &Vector) -> (Matrix, Matrix) {
        (self.jac)(k, x)
    }

    /// Fundamental vector field of `ξ` at `x`.
    pub fn infinitesimal(&self, xi: &Vector, x: &Vector) -> Vector {
        let (jk, _) = self.jacobians(&self.group.identity(), x);
        jk * xi
    }

    /// Sampled residuals of `e·x = x` and `k₁(k₂x) = (k₁k₂)x`.
    pub fn check(&self, n: usize, seed: u64, tol: f64) -> Result<Report> {
        let gd = self.group.sample_dim();
        let sd = self.space.sample_dim();
        let mut h = Halton::new((sd + 2 * gd).max(1), seed);
        let e = self.group.identity();
        let mut defects = Vec::with_capacity(n);
        for _ in 0..n {
            let u = h.next_point();
            let fail = || Error::SamplingFailure(format!("cannot sample for {}", self.label));
            let x = self.space.sample(&u[..sd]).ok_or_else(fail)?;
            let k1 = self.group.sample(&u[sd..sd + gd]).ok_or_else(fail)?;
            let k2 = self.group.sample(&u[sd + gd..sd + 2 * gd]).ok_or_else(fail)?;
            let unit = (self.act(&e, &x) - &x).norm();
            let comp = (self.act(&k1, &self.act(&k2, &x)) - self.act(&self.group.mul(&k1, &k2), &x)).norm();
            defects.push(unit.max(comp));
        }
        Ok(Report::from_defects("action_laws", defects, tol))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::fd_jacobian;

    #[test]
    fn circle_rule_integrates_trig_exactly() {
        let g = Group::special_orthogonal(2);
        let q = g.haar(64).unwrap();
        let c2 = q.integrate(|k| k[0] * k[0]);
        assert!((c2 - 0.5).abs() < 1e-14);
        let k0 = g.sample(&[0.123]).unwrap();
        assert!(q.translation_defect(&g, &k0, |k| k[0].powi(4) + k[2]) < 1e-14);
    }

    #[test]
    fn so3_rule_has_unit_mass_and_averages_entries_to_zero() {
        let g = Group::special_orthogonal(3);
        let q = g.haar(8).unwrap();
        assert!((q.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for idx in 0..9 {
            assert!(q.integrate(|k| k[idx]).abs() < 1e-12);
        }
        // ∫ R_00² dR = 1/3 for Haar measure on SO(3).
        assert!((q.integrate(|k| k[0] * k[0]) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn translation_group_is_not_compact() {
        assert_eq!(Group::translation(1).haar(8).unwrap_err(), Error::NotCompactGroup);
    }

    #[test]
    fn bad_rules_rejected() {
        let v = Vector::zeros(1);
        assert!(QuadratureRule::new(vec![v.clone()], vec![0.5]).is_err());
        assert!(QuadratureRule::new(vec![v.clone(), v], vec![1.5, -0.5]).is_err());
        assert!(Group::finite("bad", vec![-Matrix::identity(1, 1)]).is_err());
    }

    #[test]
    fn mul_and_inverse_jacobians_match_fd() {
        let g = Group::special_orthogonal(3);
        let a = g.sample(&[0.2, 0.4, 0.7]).unwrap();
        let b = g.sample(&[0.9, 0.1, 0.3]).unwrap();
        let (ja, jb) = g.mul_jacobian(&a, &b);
        assert!((ja - fd_jacobian(|x| g.mul(x, &b), &a, 1e-6)).norm() < 1e-8);
        assert!((jb - fd_jacobian(|x| g.mul(&a, x), &b, 1e-6)).norm() < 1e-8);
        let ji = g.inv_jacobian(&a);
        assert!((ji - fd_jacobian(|x| g.inv(x), &a, 1e-6)).norm() < 1e-8);
    }

    #[test]
    fn linear_rotation_action_laws() {
        let act = GroupAction::linear(Group::special_orthogonal(2), Manifold::euclidean(2)).unwrap();
        assert!(act.check(50, 3, 1e-12).unwrap().pass);
        let (jk, jx) = act.jacobians(&act.group().sample(&[0.3]).unwrap(), &Vector::from_vec(vec![1.0, 2.0]));
        let k = act.group().sample(&[0.3]).unwrap();
        let x = Vector::from_vec(vec![1.0, 2.0]);
        assert!((jk - fd_jacobian(|kk| act.act(kk, &x), &k, 1e-6)).norm() < 1e-8);
        assert!((jx - fd_jacobian(|xx| act.act(&k, xx), &x, 1e-6)).norm() < 1e-8);
    }

    #[test]
    fn so2_bracket_vanishes_and_so3_does_not() {
        let g2 = Group::special_orthogonal(2);
        let b2 = g2.lie_algebra_basis();
        assert!(g2.bracket(&b2[0], &b2[0]).norm() < 1e-15);
        let g3 = Group::special_orthogonal(3);
        let b3 = g3.lie_algebra_basis();
        assert!(g3.bracket(&b3[0], &b3[1]).norm() > 0.1);
    }
}
