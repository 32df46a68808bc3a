//! Composable strings `G^(n)`, their face and degeneracy maps, the action of
//! `S_{n+1}`, and common-source tuples `G^[n+1]` with the projection onto
//! `G^(n)`.
//!
//! A string `(g₁, …, g_n)` has `s(g_i) = t(g_{i+1})` and objects
//! `x₀ = t(g₁)`, `x_i = s(g_i)`. Ambient coordinates are the concatenated
//! arrow coordinates.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groupoid::LieGroupoid;
use crate::linalg::{concat, Matrix, Vector};
use crate::manifold::{Constrained, Manifold, ManifoldKind, Matching};
use crate::map::{block_selector, Composed, MapRef, SmoothMap};
use crate::report::Report;

/// A permutation `σ` of `{0, …, n}` stored as `σ(j) = perm[j]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Permutation(pub Vec<usize>);

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; images.len()];
        for &i in &images {
            if i >= images.len() || seen[i] {
                return Err(Error::InvalidParams(format!("{images:?} is not a permutation")));
            }
            seen[i] = true;
        }
        Ok(Self(images))
    }

    pub fn identity(len: usize) -> Self {
        Self((0..len).collect())
    }

    pub fn transposition(len: usize, a: usize, b: usize) -> Self {
        let mut p: Vec<usize> = (0..len).collect();
        p.swap(a, b);
        Self(p)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn apply(&self, j: usize) -> usize {
        self.0[j]
    }

    /// `(self ∘ other)(j) = self(other(j))`.
    pub fn compose(&self, other: &Self) -> Self {
        Self(other.0.iter().map(|&j| self.0[j]).collect())
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (j, &i) in self.0.iter().enumerate() {
            inv[i] = j;
        }
        Self(inv)
    }

    /// All permutations of `{0, …, len − 1}` in lexicographic order.
    pub fn all(len: usize) -> Vec<Self> {
        let mut out = Vec::new();
        let mut cur: Vec<usize> = (0..len).collect();
        loop {
            out.push(Self(cur.clone()));
            // next lexicographic permutation
            let Some(i) = (1..len).rev().find(|&i| cur[i - 1] < cur[i]) else {
                break;
            };
            let j = (i..len).rev().find(|&j| cur[j] > cur[i - 1]).expect("successor exists");
            cur.swap(i - 1, j);
            cur[i..].reverse();
        }
        out
    }
}

fn block(v: &Vector, k: usize, size: usize) -> Vector {
    v.rows(k * size, size).into_owned()
}

fn split(v: &Vector, size: usize) -> Vec<Vector> {
    (0..v.len() / size.max(1)).map(|k| block(v, k, size)).collect()
}

fn join(parts: &[Vector]) -> Vector {
    let refs: Vec<&Vector> = parts.iter().collect();
    concat(&refs)
}

/// The manifold `G^(n)`; `G^(0) = M`, `G^(1) = G`.
pub fn nerve_space(g: &LieGroupoid, n: usize) -> Manifold {
    match n {
        0 => g.objects().clone(),
        1 => g.arrows().clone(),
        _ => {
            let na = g.arrows().ambient_dim();
            let total = n * na;
            let s = g.source_map();
            let t = g.target_map();
            let conditions = (0..n - 1)
                .map(|k| {
                    let left: MapRef = Arc::new(Composed {
                        outer: s.clone(),
                        inner: block_selector(total, k * na, na).into_ref(),
                    });
                    let right: MapRef = Arc::new(Composed {
                        outer: t.clone(),
                        inner: block_selector(total, (k + 1) * na, na).into_ref(),
                    });
                    Arc::new(Matching { left, right }) as Arc<dyn crate::manifold::Condition>
                })
                .collect();
            let dim = n * g.arrows().intrinsic_dim() - (n - 1) * g.objects().intrinsic_dim();
            let od = g.objects().sample_dim();
            let ad = g.structure().arrow_sample_dim();
            let gc = g.clone();
            let sampler = Arc::new(move |u: &[f64]| {
                let mut x = gc.objects().sample(&u[..od])?;
                let mut parts = Vec::with_capacity(n);
                for k in 0..n {
                    let a = gc.arrow_into(&x, &u[od + k * ad..od + (k + 1) * ad])?;
                    x = gc.s(&a);
                    parts.push(a);
                }
                Some(join(&parts))
            });
            Manifold::new(
                Constrained::new(
                    format!("G^({n}) of {}", g.name()),
                    Manifold::product(vec![g.arrows().clone(); n]),
                    conditions,
                    dim,
                )
                .with_kind(ManifoldKind::FiberProduct)
                .with_sampler(od + n * ad, sampler),
            )
        }
    }
}

/// The manifold `G^[m]` of `m`-tuples of arrows with a common source.
pub fn gauge_space(g: &LieGroupoid, m: usize) -> Manifold {
    let na = g.arrows().ambient_dim();
    let total = m * na;
    let s = g.source_map();
    let conditions = (1..m)
        .map(|k| {
            let left: MapRef = Arc::new(Composed {
                outer: s.clone(),
                inner: block_selector(total, k * na, na).into_ref(),
            });
            let right: MapRef = Arc::new(Composed {
                outer: s.clone(),
                inner: block_selector(total, 0, na).into_ref(),
            });
            Arc::new(Matching { left, right }) as Arc<dyn crate::manifold::Condition>
        })
        .collect();
    let dim = m * g.arrows().intrinsic_dim() - (m.saturating_sub(1)) * g.objects().intrinsic_dim();
    let od = g.objects().sample_dim();
    let ad = g.structure().arrow_sample_dim();
    let gc = g.clone();
    let sampler = Arc::new(move |u: &[f64]| {
        let x = gc.objects().sample(&u[..od])?;
        let parts: Option<Vec<Vector>> = (0..m)
            .map(|k| gc.arrow_into(&x, &u[od + k * ad..od + (k + 1) * ad]).map(|a| gc.i(&a)))
            .collect();
        Some(join(&parts?))
    });
    Manifold::new(
        Constrained::new(
            format!("G^[{m}] of {}", g.name()),
            Manifold::product(vec![g.arrows().clone(); m]),
            conditions,
            dim,
        )
        .with_kind(ManifoldKind::FiberProduct)
        .with_sampler(od + m * ad, sampler),
    )
}

/// Sizes shared by the nerve maps.
#[derive(Clone)]
struct Shape {
    g: LieGroupoid,
    na: usize,
    no: usize,
}

impl Shape {
    fn new(g: &LieGroupoid) -> Self {
        Self {
            g: g.clone(),
            na: g.arrows().ambient_dim(),
            no: g.objects().ambient_dim(),
        }
    }

    fn level_dim(&self, n: usize) -> usize {
        if n == 0 {
            self.no
        } else {
            n * self.na
        }
    }
}

/// `ε_i: G^(n) → G^(n−1)`.
#[derive(Clone)]
pub struct FaceMap {
    shape: Shape,
    n: usize,
    i: usize,
}

impl FaceMap {
    pub fn new(g: &LieGroupoid, n: usize, i: usize) -> Result<Self> {
        if n == 0 || i > n {
            return Err(Error::IndexOutOfRange { index: i, level: n });
        }
        Ok(Self {
            shape: Shape::new(g),
            n,
            i,
        })
    }
}

impl SmoothMap for FaceMap {
    fn domain_dim(&self) -> usize {
        self.shape.level_dim(self.n)
    }
    fn codomain_dim(&self) -> usize {
        self.shape.level_dim(self.n - 1)
    }
    fn eval(&self, x: &Vector) -> Vector {
        let g = &self.shape.g;
        let (n, i) = (self.n, self.i);
        if n == 1 {
            return if i == 0 { g.s(x) } else { g.t(x) };
        }
        let parts = split(x, self.shape.na);
        let out: Vec<Vector> = if i == 0 {
            parts[1..].to_vec()
        } else if i == n {
            parts[..n - 1].to_vec()
        } else {
            let mut v = parts[..i - 1].to_vec();
            v.push(g.multiply_unchecked(&parts[i - 1], &parts[i]));
            v.extend_from_slice(&parts[i + 1..]);
            v
        };
        join(&out)
    }
    fn jacobian(&self, x: &Vector) -> Matrix {
        let g = &self.shape.g;
        let (n, i, na) = (self.n, self.i, self.shape.na);
        if n == 1 {
            return if i == 0 { g.ds(x) } else { g.dt(x) };
        }
        let parts = split(x, na);
        let mut j = Matrix::zeros((n - 1) * na, n * na);
        let id = Matrix::identity(na, na);
        for out_k in 0..n - 1 {
            // source block(s) of output block out_k
            let rows = (out_k * na, 0);
            if i == 0 {
                j.view_mut((rows.0, (out_k + 1) * na), (na, na)).copy_from(&id);
            } else if i == n || out_k < i - 1 {
                j.view_mut((rows.0, out_k * na), (na, na)).copy_from(&id);
            } else if out_k == i - 1 {
                let (jg, jh) = g.dm(&parts[i - 1], &parts[i]);
                j.view_mut((rows.0, (i - 1) * na), (na, na)).copy_from(&jg);
                j.view_mut((rows.0, i * na), (na, na)).copy_from(&jh);
            } else {
                j.view_mut((rows.0, (out_k + 1) * na), (na, na)).copy_from(&id);
            }
        }
        j
    }
}

/// Inserts a unit at block position `p ∈ {0, …, n}`: `G^(n) → G^(n+1)`.
/// Position `p ≥ 1` is the degeneracy `δ_p`, repeating the object `x_p`;
/// position 0 repeats `x₀`.
#[derive(Clone)]
pub struct DegeneracyMap {
    shape: Shape,
    n: usize,
    p: usize,
}

impl DegeneracyMap {
    /// The degeneracy `δ_i`, `1 ≤ i ≤ n`.
    pub fn new(g: &LieGroupoid, n: usize, i: usize) -> Result<Self> {
        if i == 0 || i > n {
            return Err(Error::IndexOutOfRange { index: i, level: n });
        }
        Ok(Self {
            shape: Shape::new(g),
            n,
            p: i,
        })
    }

    /// Unit insertion at any position `0 ≤ p ≤ n`; at level 0 this is `u`.
    pub fn insert_unit(g: &LieGroupoid, n: usize, p: usize) -> Result<Self> {
        if p > n {
            return Err(Error::IndexOutOfRange { index: p, level: n });
        }
        Ok(Self {
            shape: Shape::new(g),
            n,
            p,
        })
    }

    /// The repeated object and its Jacobian with respect to the string.
    fn object(&self, parts: &[Vector], x: &Vector) -> (Vector, Matrix) {
        let g = &self.shape.g;
        let na = self.shape.na;
        if self.n == 0 {
            return (x.clone(), Matrix::identity(x.len(), x.len()));
        }
        let mut j = Matrix::zeros(self.shape.no, self.n * na);
        if self.p == 0 {
            j.view_mut((0, 0), (self.shape.no, na)).copy_from(&g.dt(&parts[0]));
            (g.t(&parts[0]), j)
        } else {
            let a = &parts[self.p - 1];
            j.view_mut((0, (self.p - 1) * na), (self.shape.no, na)).copy_from(&g.ds(a));
            (g.s(a), j)
        }
    }
}

impl SmoothMap for DegeneracyMap {
    fn domain_dim(&self) -> usize {
        self.shape.level_dim(self.n)
    }
    fn codomain_dim(&self) -> usize {
        self.shape.level_dim(self.n + 1)
    }
    fn eval(&self, x: &Vector) -> Vector {
        let g = &self.shape.g;
        if self.n == 0 {
            return g.u(x);
        }
        let mut parts = split(x, self.shape.na);
        let (obj, _) = self.object(&parts, x);
        parts.insert(self.p, g.u(&obj));
        join(&parts)
    }
    fn jacobian(&self, x: &Vector) -> Matrix {
        let g = &self.shape.g;
        if self.n == 0 {
            return g.du(x);
        }
        let na = self.shape.na;
        let parts = split(x, na);
        let (obj, jobj) = self.object(&parts, x);
        let mut j = Matrix::zeros((self.n + 1) * na, self.n * na);
        let id = Matrix::identity(na, na);
        for k in 0..=self.n {
            if k < self.p {
                j.view_mut((k * na, k * na), (na, na)).copy_from(&id);
            } else if k == self.p {
                j.view_mut((k * na, 0), (na, self.n * na)).copy_from(&(g.du(&obj) * &jobj));
            } else {
                j.view_mut((k * na, (k - 1) * na), (na, na)).copy_from(&id);
            }
        }
        j
    }
}

/// `G^(n) → G^[n+1]`: `h_n = u(s(g_n))`, `h_i = g_{i+1} h_{i+1}`.
#[derive(Clone)]
pub struct CanonicalLift {
    shape: Shape,
    n: usize,
}

impl CanonicalLift {
    pub fn new(g: &LieGroupoid, n: usize) -> Self {
        Self {
            shape: Shape::new(g),
            n,
        }
    }

    fn lift_with_jacobian(&self, x: &Vector, want_jac: bool) -> (Vec<Vector>, Option<Matrix>) {
        let g = &self.shape.g;
        let (n, na) = (self.n, self.shape.na);
        if n == 0 {
            let j = want_jac.then(|| g.du(x));
            return (vec![g.u(x)], j);
        }
        let parts = split(x, na);
        let mut h = vec![Vector::zeros(na); n + 1];
        let mut jh = vec![Matrix::zeros(na, n * na); n + 1];
        let last = &parts[n - 1];
        let xs = g.s(last);
        h[n] = g.u(&xs);
        if want_jac {
            let mut jn = Matrix::zeros(na, n * na);
            jn.view_mut((0, (n - 1) * na), (na, na)).copy_from(&(g.du(&xs) * g.ds(last)));
            jh[n] = jn;
        }
        for i in (0..n).rev() {
            h[i] = g.multiply_unchecked(&parts[i], &h[i + 1]);
            if want_jac {
                let (jg, jhh) = g.dm(&parts[i], &h[i + 1]);
                let mut ji = &jhh * &jh[i + 1];
                let mut view = ji.view_mut((0, i * na), (na, na));
                view += &jg;
                jh[i] = ji;
            }
        }
        let jac = want_jac.then(|| {
            let mut j = Matrix::zeros((n + 1) * na, n * na);
            for (k, b) in jh.iter().enumerate() {
                j.view_mut((k * na, 0), (na, n * na)).copy_from(b);
            }
            j
        });
        (h, jac)
    }
}

impl SmoothMap for CanonicalLift {
    fn domain_dim(&self) -> usize {
        self.shape.level_dim(self.n)
    }
    fn codomain_dim(&self) -> usize {
        (self.n + 1) * self.shape.na
    }
    fn eval(&self, x: &Vector) -> Vector {
        join(&self.lift_with_jacobian(x, false).0)
    }
    fn jacobian(&self, x: &Vector) -> Matrix {
        self.lift_with_jacobian(x, true).1.expect("jacobian requested")
    }
}

/// `π^(n): G^[n+1] → G^(n)`, `(h₀, …, h_n) ↦ (h₀h₁⁻¹, …, h_{n−1}h_n⁻¹)`.
/// At `n = 0` it is the common source.
#[derive(Clone)]
pub struct GaugeProjection {
    shape: Shape,
    n: usize,
}

impl GaugeProjection {
    pub fn new(g: &LieGroupoid, n: usize) -> Self {
        Self {
            shape: Shape::new(g),
            n,
        }
    }
}

impl SmoothMap for GaugeProjection {
    fn domain_dim(&self) -> usize {
        (self.n + 1) * self.shape.na
    }
    fn codomain_dim(&self) -> usize {
        self.shape.level_dim(self.n)
    }
    fn eval(&self, x: &Vector) -> Vector {
        let g = &self.shape.g;
        let h = split(x, self.shape.na);
        if self.n == 0 {
            return g.s(&h[0]);
        }
        let out: Vec<Vector> = (0..self.n)
            .map(|i| g.multiply_unchecked(&h[i], &g.i(&h[i + 1])))
            .collect();
        join(&out)
    }
    fn jacobian(&self, x: &Vector) -> Matrix {
        let g = &self.shape.g;
        let na = self.shape.na;
        let h = split(x, na);
        if self.n == 0 {
            let mut j = Matrix::zeros(self.shape.no, na);
            j.copy_from(&g.ds(&h[0]));
            return j;
        }
        let mut j = Matrix::zeros(self.n * na, (self.n + 1) * na);
        for i in 0..self.n {
            let inv = g.i(&h[i + 1]);
            let (jg, jh) = g.dm(&h[i], &inv);
            j.view_mut((i * na, i * na), (na, na)).copy_from(&jg);
            j.view_mut((i * na, (i + 1) * na), (na, na)).copy_from(&(jh * g.di(&h[i + 1])));
        }
        j
    }
}

/// Permutes tuple entries: `(σ·h)_{σ(j)} = h_j`.
#[derive(Clone)]
pub struct TuplePermutation {
    perm: Permutation,
    na: usize,
}

impl TuplePermutation {
    pub fn new(g: &LieGroupoid, perm: Permutation) -> Self {
        Self {
            perm,
            na: g.arrows().ambient_dim(),
        }
    }

    fn matrix(&self) -> Matrix {
        let m = self.perm.len();
        let mut p = Matrix::zeros(m * self.na, m * self.na);
        for j in 0..m {
            let to = self.perm.apply(j);
            p.view_mut((to * self.na, j * self.na), (self.na, self.na))
                .copy_from(&Matrix::identity(self.na, self.na));
        }
        p
    }
}

impl SmoothMap for TuplePermutation {
    fn domain_dim(&self) -> usize {
        self.perm.len() * self.na
    }
    fn codomain_dim(&self) -> usize {
        self.perm.len() * self.na
    }
    fn eval(&self, x: &Vector) -> Vector {
        let h = split(x, self.na);
        let mut out = h.clone();
        for (j, hj) in h.into_iter().enumerate() {
            out[self.perm.apply(j)] = hj;
        }
        join(&out)
    }
    fn jacobian(&self, _x: &Vector) -> Matrix {
        self.matrix()
    }
}

/// `S_{n+1}` acting on `G^(n)` through a lift to `G^[n+1]`.
#[derive(Clone)]
pub struct SymAction {
    lift: CanonicalLift,
    permute: TuplePermutation,
    project: GaugeProjection,
}

impl SymAction {
    pub fn new(g: &LieGroupoid, n: usize, perm: Permutation) -> Result<Self> {
        if perm.len() != n + 1 {
            return Err(Error::InvalidParams(format!(
                "permutation of {} letters acting on level {n}",
                perm.len()
            )));
        }
        Ok(Self {
            lift: CanonicalLift::new(g, n),
            permute: TuplePermutation::new(g, perm),
            project: GaugeProjection::new(g, n),
        })
    }
}

impl SmoothMap for SymAction {
    fn domain_dim(&self) -> usize {
        self.lift.domain_dim()
    }
    fn codomain_dim(&self) -> usize {
        self.project.codomain_dim()
    }
    fn eval(&self, x: &Vector) -> Vector {
        if self.lift.n == 0 {
            return x.clone();
        }
        self.project.eval(&self.permute.eval(&self.lift.eval(x)))
    }
    fn jacobian(&self, x: &Vector) -> Matrix {
        if self.lift.n == 0 {
            return Matrix::identity(x.len(), x.len());
        }
        let h = self.lift.eval(x);
        let ph = self.permute.eval(&h);
        self.project.jacobian(&ph) * self.permute.jacobian(&h) * self.lift.jacobian(x)
    }
}

/// The object `x_k` of a string in `G^(n)`.
#[derive(Clone)]
pub struct ObjectMap {
    shape: Shape,
    n: usize,
    k: usize,
}

impl ObjectMap {
    pub fn new(g: &LieGroupoid, n: usize, k: usize) -> Result<Self> {
        if k > n {
            return Err(Error::IndexOutOfRange { index: k, level: n });
        }
        Ok(Self {
            shape: Shape::new(g),
            n,
            k,
        })
    }
}

impl SmoothMap for ObjectMap {
    fn domain_dim(&self) -> usize {
        self.shape.level_dim(self.n)
    }
    fn codomain_dim(&self) -> usize {
        self.shape.no
    }
    fn eval(&self, x: &Vector) -> Vector {
        let g = &self.shape.g;
        if self.n == 0 {
            return x.clone();
        }
        let na = self.shape.na;
        if self.k == 0 {
            g.t(&block(x, 0, na))
        } else {
            g.s(&block(x, self.k - 1, na))
        }
    }
    fn jacobian(&self, x: &Vector) -> Matrix {
        let g = &self.shape.g;
        if self.n == 0 {
            return Matrix::identity(x.len(), x.len());
        }
        let na = self.shape.na;
        let mut j = Matrix::zeros(self.shape.no, self.n * na);
        let (col, d) = if self.k == 0 {
            (0, g.dt(&block(x, 0, na)))
        } else {
            ((self.k - 1) * na, g.ds(&block(x, self.k - 1, na)))
        };
        j.view_mut((0, col), (self.shape.no, na)).copy_from(&d);
        j
    }
}

pub fn face_map(g: &LieGroupoid, n: usize, i: usize, string: &Vector) -> Result<Vector> {
    Ok(FaceMap::new(g, n, i)?.eval(string))
}

pub fn degeneracy_map(g: &LieGroupoid, n: usize, i: usize, string: &Vector) -> Result<Vector> {
    Ok(DegeneracyMap::new(g, n, i)?.eval(string))
}

pub fn sym_action(g: &LieGroupoid, n: usize, perm: &Permutation, string: &Vector) -> Result<Vector> {
    Ok(SymAction::new(g, n, perm.clone())?.eval(string))
}

/// Projects a common-source tuple; rejects tuples whose sources spread by 1e−9 or more.
pub fn gauge_projection(g: &LieGroupoid, tuple: &Vector) -> Result<Vector> {
    let na = g.arrows().ambient_dim();
    if tuple.len() % na != 0 || tuple.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: na,
            got: tuple.len(),
        });
    }
    let h = split(tuple, na);
    let x0 = g.s(&h[0]);
    let spread = h.iter().map(|a| (g.s(a) - &x0).norm()).fold(0.0, f64::max);
    if spread >= 1e-9 {
        return Err(Error::NotCommonSource(spread));
    }
    Ok(GaugeProjection::new(g, h.len() - 1).eval(tuple))
}

/// Right translation of a tuple by an arrow `k` with `t(k)` the common source.
pub fn right_translate(g: &LieGroupoid, tuple: &Vector, k: &Vector) -> Vector {
    let na = g.arrows().ambient_dim();
    let parts: Vec<Vector> = split(tuple, na)
        .iter()
        .map(|h| g.multiply_unchecked(h, k))
        .collect();
    join(&parts)
}

pub fn split_string(g: &LieGroupoid, x: &Vector) -> Vec<Vector> {
    split(x, g.arrows().ambient_dim())
}

pub fn join_string(parts: &[Vector]) -> Vector {
    join(parts)
}

/// Sampled strings of level `n`; level 0 samples objects.
fn sample_level(g: &LieGroupoid, n: usize, count: usize, seed: u64) -> Result<Vec<Vector>> {
    if n == 0 {
        return g.objects().sample_points(count, seed);
    }
    Ok(g.sample_strings(n, count, seed)?.iter().map(|p| join(p)).collect())
}

fn face(g: &LieGroupoid, n: usize, i: usize, x: &Vector) -> Vector {
    FaceMap::new(g, n, i).expect("valid face").eval(x)
}

fn degen(g: &LieGroupoid, n: usize, j: usize, x: &Vector) -> Vector {
    DegeneracyMap::insert_unit(g, n, j).expect("valid degeneracy").eval(x)
}

/// Face/degeneracy identities on strings of level at most 2, with `s_j` the
/// unit insertion at block `j`, and the composition law of the `S_{n+1}`
/// action for `n = 1, 2`. Each component reports the worst residual per
/// sampled string.
pub fn check_simplicial(g: &LieGroupoid, samples: usize, tol: f64, seed: u64) -> Result<Report> {
    let mut comps = Vec::new();

    let mut faces = Vec::new();
    for n in 2..=2 {
        for x in sample_level(g, n, samples, seed)? {
            let mut worst: f64 = 0.0;
            for j in 1..=n {
                for i in 0..j {
                    let a = face(g, n - 1, i, &face(g, n, j, &x));
                    let b = face(g, n - 1, j - 1, &face(g, n, i, &x));
                    worst = worst.max((a - b).amax());
                }
            }
            faces.push(worst);
        }
    }
    comps.push(Report::from_defects("face_face", faces, tol));

    let mut mixed = Vec::new();
    for n in 0..=1 {
        for x in sample_level(g, n, samples, seed + 1 + n as u64)? {
            let mut worst: f64 = 0.0;
            for j in 0..=n {
                let sx = degen(g, n, j, &x);
                for i in 0..=n + 1 {
                    let lhs = face(g, n + 1, i, &sx);
                    let rhs = if i < j {
                        degen(g, n - 1, j - 1, &face(g, n, i, &x))
                    } else if i == j || i == j + 1 {
                        x.clone()
                    } else {
                        degen(g, n - 1, j, &face(g, n, i - 1, &x))
                    };
                    worst = worst.max((lhs - rhs).amax());
                }
            }
            mixed.push(worst);
        }
    }
    comps.push(Report::from_defects("face_degeneracy", mixed, tol));

    let mut degens = Vec::new();
    for n in 0..=1 {
        for x in sample_level(g, n, samples, seed + 3 + n as u64)? {
            let mut worst: f64 = 0.0;
            for j in 0..=n {
                for i in 0..=j {
                    let a = degen(g, n + 1, i, &degen(g, n, j, &x));
                    let b = degen(g, n + 1, j + 1, &degen(g, n, i, &x));
                    worst = worst.max((a - b).amax());
                }
            }
            degens.push(worst);
        }
    }
    comps.push(Report::from_defects("degeneracy_degeneracy", degens, tol));

    let mut action = Vec::new();
    for n in 1..=2 {
        let perms = Permutation::all(n + 1);
        let maps: Vec<SymAction> = perms
            .iter()
            .map(|p| SymAction::new(g, n, p.clone()))
            .collect::<Result<_>>()?;
        for x in sample_level(g, n, samples, seed + 5 + n as u64)? {
            let mut worst: f64 = 0.0;
            for (a, sa) in perms.iter().zip(&maps) {
                for (b, sb) in perms.iter().zip(&maps) {
                    let ab = SymAction::new(g, n, a.compose(b))?;
                    worst = worst.max((sa.eval(&sb.eval(&x)) - ab.eval(&x)).amax());
                }
            }
            action.push(worst);
        }
    }
    comps.push(Report::from_defects("sym_action_law", action, tol));

    Ok(Report::combine("simplicial", comps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::{Group, GroupAction};
    use crate::map::fd_jacobian;

    fn so2() -> LieGroupoid {
        LieGroupoid::action(GroupAction::linear(Group::special_orthogonal(2), Manifold::euclidean(2)).unwrap()).unwrap()
    }

    fn pair_r() -> LieGroupoid {
        LieGroupoid::pair(Manifold::euclidean(1))
    }

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    #[test]
    fn faces_at_level_two() {
        let g = so2();
        let s = nerve_space(&g, 2).sample_points(1, 3).unwrap().remove(0);
        let p = split_string(&g, &s);
        assert!((face_map(&g, 2, 1, &s).unwrap() - g.multiply(&p[0], &p[1]).unwrap()).norm() < 1e-15);
        assert_eq!(face_map(&g, 2, 0, &s).unwrap(), p[1]);
        assert_eq!(face_map(&g, 2, 2, &s).unwrap(), p[0]);
        assert_eq!(face_map(&g, 1, 0, &p[0]).unwrap(), g.s(&p[0]));
        assert_eq!(face_map(&g, 1, 1, &p[0]).unwrap(), g.t(&p[0]));
        assert!(matches!(face_map(&g, 2, 3, &s), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn degeneracy_examples() {
        let g = pair_r();
        let a = v(&[0.3, 1.2]);
        assert_eq!(degeneracy_map(&g, 1, 1, &a).unwrap(), v(&[0.3, 1.2, 0.3, 0.3]));
        let u = g.u(&v(&[0.5]));
        let d = degeneracy_map(&g, 1, 1, &u).unwrap();
        assert_eq!(d, join_string(&[u.clone(), u]));
        assert!(matches!(degeneracy_map(&g, 1, 0, &a), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(degeneracy_map(&g, 1, 2, &a), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn sym_action_generators_match_closed_forms() {
        let g = so2();
        let s = nerve_space(&g, 2).sample_points(1, 8).unwrap().remove(0);
        let p = split_string(&g, &s);
        let (g1, g2) = (&p[0], &p[1]);
        let tau = Permutation::transposition(3, 0, 2);
        let expect = join_string(&[g.i(g2), g.i(g1)]);
        assert!((sym_action(&g, 2, &tau, &s).unwrap() - expect).norm() < 1e-14);
        let cyc = Permutation::new(vec![1, 2, 0]).unwrap();
        let expect = join_string(&[g.i(&g.multiply(g1, g2).unwrap()), g1.clone()]);
        assert!((sym_action(&g, 2, &cyc, &s).unwrap() - expect).norm() < 1e-14);
        let t1 = Permutation::transposition(2, 0, 1);
        assert!((sym_action(&g, 1, &t1, g1).unwrap() - g.i(g1)).norm() < 1e-15);
    }

    #[test]
    fn pair_groupoid_involution_example() {
        // ((a,b),(c,a)) ↦ ((a,c),(b,a)) with arrows written (source, target).
        let g = pair_r();
        let (a, b, c) = (0.3, -1.1, 2.0);
        let s = v(&[a, b, c, a]);
        let tau = Permutation::transposition(3, 0, 2);
        assert_eq!(sym_action(&g, 2, &tau, &s).unwrap(), v(&[a, c, b, a]));
    }

    #[test]
    fn gauge_projection_examples() {
        let g = so2();
        let a = g.sample_arrows(1, 2).unwrap().remove(0);
        let u = g.u(&g.s(&a));
        let t = join_string(&[a.clone(), u.clone()]);
        assert!((gauge_projection(&g, &t).unwrap() - &a).norm() < 1e-15);
        let swapped = join_string(&[u, a.clone()]);
        assert!((gauge_projection(&g, &swapped).unwrap() - g.i(&a)).norm() < 1e-15);
        let bad = join_string(&[a.clone(), g.u(&(g.s(&a) + v(&[0.1, 0.0])))]);
        assert!(matches!(gauge_projection(&g, &bad), Err(Error::NotCommonSource(_))));
    }

    #[test]
    fn map_jacobians_match_fd() {
        let g = so2();
        let s3 = nerve_space(&g, 3).sample_points(3, 1).unwrap();
        for s in &s3 {
            for i in 0..=3 {
                let f = FaceMap::new(&g, 3, i).unwrap();
                assert!((f.jacobian(s) - fd_jacobian(|x| f.eval(x), s, 1e-6)).norm() < 1e-7);
            }
            for p in 0..=3 {
                let d = DegeneracyMap::insert_unit(&g, 3, p).unwrap();
                assert!((d.jacobian(s) - fd_jacobian(|x| d.eval(x), s, 1e-6)).norm() < 1e-7);
            }
            for perm in Permutation::all(4) {
                let a = SymAction::new(&g, 3, perm).unwrap();
                assert!((a.jacobian(s) - fd_jacobian(|x| a.eval(x), s, 1e-6)).norm() < 1e-7);
            }
            for k in 0..=3 {
                let o = ObjectMap::new(&g, 3, k).unwrap();
                assert!((o.jacobian(s) - fd_jacobian(|x| o.eval(x), s, 1e-6)).norm() < 1e-7);
            }
        }
    }

    #[test]
    fn permutations() {
        assert_eq!(Permutation::all(3).len(), 6);
        let a = Permutation::new(vec![1, 2, 0]).unwrap();
        assert_eq!(a.compose(&a.inverse()), Permutation::identity(3));
        assert!(Permutation::new(vec![0, 0]).is_err());
    }

    #[test]
    fn nerve_and_gauge_spaces() {
        let g = so2();
        let n2 = nerve_space(&g, 2);
        assert_eq!(n2.intrinsic_dim(), 4);
        for p in n2.sample_points(10, 2).unwrap() {
            assert!(n2.contains(&p));
        }
        let g3 = gauge_space(&g, 3);
        assert_eq!(g3.intrinsic_dim(), 5);
        for p in g3.sample_points(10, 2).unwrap() {
            assert!(g3.contains(&p));
            assert!(gauge_projection(&g, &p).is_ok());
        }
    }

    #[test]
    fn simplicial_identities_hold() {
        for g in [so2(), LieGroupoid::pair(Manifold::sphere(2))] {
            let r = check_simplicial(&g, 50, 1e-10, 4).unwrap();
            assert!(r.pass, "{}", r.to_json());
        }
    }
}
