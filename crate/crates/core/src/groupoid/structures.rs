//! Structure maps of the standard groupoids, with analytic Jacobians.

use std::sync::Arc;

use super::{GroupAction, Structure};
use crate::error::{Error, Result};
use crate::linalg::{concat, solve_min_norm_vec, Matrix, Vector};
use crate::manifold::{Constrained, Manifold, ManifoldKind, Matching};
use crate::map::{block_selector, Composed, MapRef};

/// Only identities: every structure map is the identity on objects.
pub struct UnitStructure;

impl Structure for UnitStructure {
    fn source(&self, g: &Vector) -> Vector {
        g.clone()
    }
    fn target(&self, g: &Vector) -> Vector {
        g.clone()
    }
    fn unit(&self, x: &Vector) -> Vector {
        x.clone()
    }
    fn inverse(&self, g: &Vector) -> Vector {
        g.clone()
    }
    fn multiply(&self, g: &Vector, _h: &Vector) -> Vector {
        g.clone()
    }
    fn source_jacobian(&self, g: &Vector) -> Matrix {
        Matrix::identity(g.len(), g.len())
    }
    fn target_jacobian(&self, g: &Vector) -> Matrix {
        Matrix::identity(g.len(), g.len())
    }
    fn unit_jacobian(&self, x: &Vector) -> Matrix {
        Matrix::identity(x.len(), x.len())
    }
    fn inverse_jacobian(&self, g: &Vector) -> Matrix {
        Matrix::identity(g.len(), g.len())
    }
    fn multiply_jacobian(&self, g: &Vector, _h: &Vector) -> (Matrix, Matrix) {
        let n = g.len();
        (Matrix::identity(n, n), Matrix::zeros(n, n))
    }
    fn arrow_sample_dim(&self) -> usize {
        0
    }
    fn arrow_into(&self, y: &Vector, _u: &[f64]) -> Option<Vector> {
        Some(y.clone())
    }
}

/// Arrows `(x, y)` from `x` to `y`; `(y, z)·(x, y) = (x, z)`.
fn pair_split(n: usize, g: &Vector) -> (Vector, Vector) {
    (g.rows(0, n).into_owned(), g.rows(n, n).into_owned())
}

fn pair_jacobians(n: usize) -> [Matrix; 6] {
    let id = Matrix::identity(n, n);
    let z = Matrix::zeros(n, n);
    let ds = crate::linalg::block_diag(&[id.clone(), z.clone()]).rows(0, n).into_owned();
    let mut dt = Matrix::zeros(n, 2 * n);
    dt.view_mut((0, n), (n, n)).copy_from(&id);
    let mut du = Matrix::zeros(2 * n, n);
    du.view_mut((0, 0), (n, n)).copy_from(&id);
    du.view_mut((n, 0), (n, n)).copy_from(&id);
    let mut di = Matrix::zeros(2 * n, 2 * n);
    di.view_mut((0, n), (n, n)).copy_from(&id);
    di.view_mut((n, 0), (n, n)).copy_from(&id);
    let dmg = crate::linalg::block_diag(&[z.clone(), id.clone()]);
    let dmh = crate::linalg::block_diag(&[id, z]);
    [ds, dt, du, di, dmg, dmh]
}

pub struct PairStructure {
    objects: Manifold,
    n: usize,
    jac: [Matrix; 6],
}

impl PairStructure {
    pub fn new(objects: Manifold) -> Self {
        let n = objects.ambient_dim();
        Self {
            objects,
            n,
            jac: pair_jacobians(n),
        }
    }
}

macro_rules! pair_algebra {
    () => {
        fn source(&self, g: &Vector) -> Vector {
            pair_split(self.n, g).0
        }
        fn target(&self, g: &Vector) -> Vector {
            pair_split(self.n, g).1
        }
        fn unit(&self, x: &Vector) -> Vector {
            concat(&[x, x])
        }
        fn inverse(&self, g: &Vector) -> Vector {
            let (x, y) = pair_split(self.n, g);
            concat(&[&y, &x])
        }
        fn multiply(&self, g: &Vector, h: &Vector) -> Vector {
            let (_, z) = pair_split(self.n, g);
            let (x, _) = pair_split(self.n, h);
            concat(&[&x, &z])
        }
        fn source_jacobian(&self, _g: &Vector) -> Matrix {
            self.jac[0].clone()
        }
        fn target_jacobian(&self, _g: &Vector) -> Matrix {
            self.jac[1].clone()
        }
        fn unit_jacobian(&self, _x: &Vector) -> Matrix {
            self.jac[2].clone()
        }
        fn inverse_jacobian(&self, _g: &Vector) -> Matrix {
            self.jac[3].clone()
        }
        fn multiply_jacobian(&self, _g: &Vector, _h: &Vector) -> (Matrix, Matrix) {
            (self.jac[4].clone(), self.jac[5].clone())
        }
    };
}

impl Structure for PairStructure {
    pair_algebra!();
    fn arrow_sample_dim(&self) -> usize {
        self.objects.sample_dim()
    }
    fn arrow_into(&self, y: &Vector, u: &[f64]) -> Option<Vector> {
        let x = self.objects.sample(u)?;
        Some(concat(&[&x, y]))
    }
}

/// `M ×_N M` with the pair-groupoid algebra.
pub struct SubmersionStructure {
    total: Manifold,
    base: Manifold,
    map: MapRef,
    n: usize,
    jac: [Matrix; 6],
}

impl SubmersionStructure {
    pub fn new(total: Manifold, base: Manifold, map: MapRef) -> Self {
        let n = total.ambient_dim();
        Self {
            total,
            base,
            map,
            n,
            jac: pair_jacobians(n),
        }
    }

    pub fn check_rank(&self, x: &Vector) -> Result<()> {
        let a = self.map.jacobian(x) * self.total.tangent_basis(x);
        let r = crate::linalg::numerical_rank(&a);
        if r < self.base.intrinsic_dim() {
            return Err(Error::RankDeficientSubmersion(format!(
                "rank {r} < {} at {:?}",
                self.base.intrinsic_dim(),
                x.as_slice()
            )));
        }
        Ok(())
    }

    /// Moves `start` into the fiber over `π(y)` by minimum-norm Newton steps.
    pub fn fiber_point(&self, y: &Vector, start: &Vector) -> Option<Vector> {
        let target = self.map.eval(y);
        let mut x = start.clone();
        let scale = 1.0 + target.norm();
        for _ in 0..60 {
            let r = &target - self.map.eval(&x);
            if r.norm() < 1e-15 * scale {
                break;
            }
            let b = self.total.tangent_basis(&x);
            let a = self.map.jacobian(&x) * &b;
            let step = solve_min_norm_vec(&a, &r);
            x = self.total.space().project(&(&x + b * step), f64::INFINITY).ok()?;
        }
        ((&target - self.map.eval(&x)).norm() < 1e-11 * scale).then_some(x)
    }

    pub fn arrow_manifold(&self) -> Manifold {
        let n = self.n;
        let left: MapRef = Arc::new(Composed {
            outer: self.map.clone(),
            inner: block_selector(2 * n, 0, n).into_ref(),
        });
        let right: MapRef = Arc::new(Composed {
            outer: self.map.clone(),
            inner: block_selector(2 * n, n, n).into_ref(),
        });
        let dim = 2 * self.total.intrinsic_dim() - self.base.intrinsic_dim();
        let total = self.total.clone();
        let sd = total.sample_dim();
        let st = SubmersionStructure::new(self.total.clone(), self.base.clone(), self.map.clone());
        let sampler = Arc::new(move |u: &[f64]| {
            let y = total.sample(&u[..sd])?;
            let x0 = total.sample(&u[sd..2 * sd])?;
            let x = st.fiber_point(&y, &x0)?;
            Some(concat(&[&x, &y]))
        });
        Manifold::new(
            Constrained::new(
                format!("{} ×_{} {}", self.total.label(), self.base.label(), self.total.label()),
                Manifold::product(vec![self.total.clone(), self.total.clone()]),
                vec![Arc::new(Matching { left, right })],
                dim,
            )
            .with_kind(ManifoldKind::FiberProduct)
            .with_sampler(2 * sd, sampler),
        )
    }
}

impl Structure for SubmersionStructure {
    pair_algebra!();
    fn arrow_sample_dim(&self) -> usize {
        self.total.sample_dim()
    }
    fn arrow_into(&self, y: &Vector, u: &[f64]) -> Option<Vector> {
        let x0 = self.total.sample(u)?;
        let x = self.fiber_point(y, &x0)?;
        Some(concat(&[&x, y]))
    }
}

/// `K ⋉ M`: arrows `(k, x)` from `x` to `kx`, `(k₁, k₂x)(k₂, x) = (k₁k₂, x)`.
pub struct ActionStructure {
    action: GroupAction,
    nk: usize,
    nm: usize,
}

impl ActionStructure {
    pub fn new(action: GroupAction) -> Self {
        let nk = action.group().ambient_dim();
        let nm = action.space().ambient_dim();
        Self { action, nk, nm }
    }

    fn split(&self, g: &Vector) -> (Vector, Vector) {
        (g.rows(0, self.nk).into_owned(), g.rows(self.nk, self.nm).into_owned())
    }
}

impl Structure for ActionStructure {
    fn source(&self, g: &Vector) -> Vector {
        self.split(g).1
    }
    fn target(&self, g: &Vector) -> Vector {
        let (k, x) = self.split(g);
        self.action.act(&k, &x)
    }
    fn unit(&self, x: &Vector) -> Vector {
        concat(&[&self.action.group().identity(), x])
    }
    fn inverse(&self, g: &Vector) -> Vector {
        let (k, x) = self.split(g);
        concat(&[&self.action.group().inv(&k), &self.action.act(&k, &x)])
    }
    fn multiply(&self, g: &Vector, h: &Vector) -> Vector {
        let (k1, _) = self.split(g);
        let (k2, x) = self.split(h);
        concat(&[&self.action.group().mul(&k1, &k2), &x])
    }
    fn source_jacobian(&self, _g: &Vector) -> Matrix {
        let mut j = Matrix::zeros(self.nm, self.nk + self.nm);
        j.view_mut((0, self.nk), (self.nm, self.nm))
            .copy_from(&Matrix::identity(self.nm, self.nm));
        j
    }
    fn target_jacobian(&self, g: &Vector) -> Matrix {
        let (k, x) = self.split(g);
        let (jk, jx) = self.action.jacobians(&k, &x);
        let mut j = Matrix::zeros(self.nm, self.nk + self.nm);
        j.view_mut((0, 0), (self.nm, self.nk)).copy_from(&jk);
        j.view_mut((0, self.nk), (self.nm, self.nm)).copy_from(&jx);
        j
    }
    fn unit_jacobian(&self, _x: &Vector) -> Matrix {
        let mut j = Matrix::zeros(self.nk + self.nm, self.nm);
        j.view_mut((self.nk, 0), (self.nm, self.nm))
            .copy_from(&Matrix::identity(self.nm, self.nm));
        j
    }
    fn inverse_jacobian(&self, g: &Vector) -> Matrix {
        let (k, x) = self.split(g);
        let (jk, jx) = self.action.jacobians(&k, &x);
        let mut j = Matrix::zeros(self.nk + self.nm, self.nk + self.nm);
        j.view_mut((0, 0), (self.nk, self.nk))
            .copy_from(&self.action.group().inv_jacobian(&k));
        j.view_mut((self.nk, 0), (self.nm, self.nk)).copy_from(&jk);
        j.view_mut((self.nk, self.nk), (self.nm, self.nm)).copy_from(&jx);
        j
    }
    fn multiply_jacobian(&self, g: &Vector, h: &Vector) -> (Matrix, Matrix) {
        let (k1, _) = self.split(g);
        let (k2, _) = self.split(h);
        let (ja, jb) = self.action.group().mul_jacobian(&k1, &k2);
        let n = self.nk + self.nm;
        let mut jg = Matrix::zeros(n, n);
        jg.view_mut((0, 0), (self.nk, self.nk)).copy_from(&ja);
        let mut jh = Matrix::zeros(n, n);
        jh.view_mut((0, 0), (self.nk, self.nk)).copy_from(&jb);
        jh.view_mut((self.nk, self.nk), (self.nm, self.nm))
            .copy_from(&Matrix::identity(self.nm, self.nm));
        (jg, jh)
    }
    fn arrow_sample_dim(&self) -> usize {
        self.action.group().sample_dim()
    }
    fn arrow_into(&self, y: &Vector, u: &[f64]) -> Option<Vector> {
        let k = self.action.group().sample(u)?;
        let x = self.action.act(&self.action.group().inv(&k), y);
        Some(concat(&[&k, &x]))
    }
    fn arrows_into(&self, x: &Vector, budget: usize, seed: u64) -> Vec<Vector> {
        let group = self.action.group();
        match group.haar(budget.max(1)) {
            Ok(rule) => rule
                .nodes
                .iter()
                .map(|k| concat(&[k, &self.action.act(&group.inv(k), x)]))
                .collect(),
            Err(_) => {
                let mut h = crate::sampling::Halton::new(self.arrow_sample_dim().max(1), seed);
                (0..budget)
                    .filter_map(|_| self.arrow_into(x, &h.next_point()))
                    .collect()
            }
        }
    }
}
