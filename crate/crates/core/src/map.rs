//! Smooth maps between ambient coordinate spaces, with analytic or
//! finite-difference Jacobians.

use std::fmt;
use std::sync::Arc;

use crate::linalg::{Matrix, Vector};

/// Default central finite-difference step.
pub const FD_STEP: f64 = 1e-5;

pub trait SmoothMap: Send + Sync {
    fn domain_dim(&self) -> usize;
    fn codomain_dim(&self) -> usize;
    fn eval(&self, x: &Vector) -> Vector;

    /// Ambient Jacobian (codomain × domain). Falls back to central differences.
    fn jacobian(&self, x: &Vector) -> Matrix {
        fd_jacobian(|y| self.eval(y), x, FD_STEP)
    }
}

pub type MapRef = Arc<dyn SmoothMap>;

pub fn fd_jacobian(f: impl Fn(&Vector) -> Vector, x: &Vector, h: f64) -> Matrix {
    let f0 = f(x);
    let mut j = Matrix::zeros(f0.len(), x.len());
    let mut xp = x.clone();
    for k in 0..x.len() {
        let orig = xp[k];
        xp[k] = orig + h;
        let fp = f(&xp);
        xp[k] = orig - h;
        let fm = f(&xp);
        xp[k] = orig;
        j.set_column(k, &((fp - fm) / (2.0 * h)));
    }
    j
}

type EvalFn = dyn Fn(&Vector) -> Vector + Send + Sync;
type JacFn = dyn Fn(&Vector) -> Matrix + Send + Sync;

/// A map given by closures; the Jacobian is optional.
#[derive(Clone)]
pub struct FnMap {
    domain: usize,
    codomain: usize,
    f: Arc<EvalFn>,
    jac: Option<Arc<JacFn>>,
    fd_step: f64,
}

impl fmt::Debug for FnMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnMap")
            .field("domain", &self.domain)
            .field("codomain", &self.codomain)
            .field("analytic_jacobian", &self.jac.is_some())
            .finish()
    }
}

impl FnMap {
    pub fn new(
        domain: usize,
        codomain: usize,
        f: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
    ) -> Self {
        Self {
            domain,
            codomain,
            f: Arc::new(f),
            jac: None,
            fd_step: FD_STEP,
        }
    }

    pub fn with_jacobian(
        mut self,
        jac: impl Fn(&Vector) -> Matrix + Send + Sync + 'static,
    ) -> Self {
        self.jac = Some(Arc::new(jac));
        self
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.fd_step = h;
        self
    }

    /// A linear map `x ↦ a x`.
    pub fn linear(a: Matrix) -> Self {
        let (r, c) = a.shape();
        let a2 = a.clone();
        Self::new(c, r, move |x| &a * x).with_jacobian(move |_| a2.clone())
    }

    pub fn identity(n: usize) -> Self {
        Self::linear(Matrix::identity(n, n))
    }

    pub fn into_ref(self) -> MapRef {
        Arc::new(self)
    }
}

impl SmoothMap for FnMap {
    fn domain_dim(&self) -> usize {
        self.domain
    }
    fn codomain_dim(&self) -> usize {
        self.codomain
    }
    fn eval(&self, x: &Vector) -> Vector {
        (self.f)(x)
    }
    fn jacobian(&self, x: &Vector) -> Matrix {
        match &self.jac {
            Some(j) => j(x),
            None => fd_jacobian(|y| (self.f)(y), x, self.fd_step),
        }
    }
}

/// `outer ∘ inner`.
pub struct Composed {
    pub outer: MapRef,
    pub inner: MapRef,
}

impl SmoothMap for Composed {
    fn domain_dim(&self) -> usize {
        self.inner.domain_dim()
    }
    fn codomain_dim(&self) -> usize {
        self.outer.codomain_dim()
    }
    fn eval(&self, x: &Vector) -> Vector {
        self.outer.eval(&self.inner.eval(x))
    }
    fn jacobian(&self, x: &Vector) -> Matrix {
        let y = self.inner.eval(x);
        self.outer.jacobian(&y) * self.inner.jacobian(x)
    }
}

/// Selects the coordinate block `[offset, offset + len)`.
pub fn block_selector(total: usize, offset: usize, len: usize) -> FnMap {
    let mut a = Matrix::zeros(len, total);
    for k in 0..len {
        a[(k, offset + k)] = 1.0;
    }
    FnMap::linear(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd_matches_analytic_for_quadratic() {
        let m = FnMap::new(2, 1, |x| Vector::from_vec(vec![x[0] * x[0] + 3.0 * x[0] * x[1]]));
        let x = Vector::from_vec(vec![0.7, -1.2]);
        let j = m.jacobian(&x);
        assert!((j[(0, 0)] - (2.0 * 0.7 + 3.0 * -1.2)).abs() < 1e-9);
        assert!((j[(0, 1)] - 3.0 * 0.7).abs() < 1e-9);
    }

    #[test]
    fn composition_chain_rule() {
        let a = FnMap::linear(Matrix::from_row_slice(1, 2, &[1.0, 2.0])).into_ref();
        let b = FnMap::new(2, 2, |x| Vector::from_vec(vec![x[0].sin(), x[1] * x[0]])).into_ref();
        let c = Composed { outer: a, inner: b };
        let x = Vector::from_vec(vec![0.3, 0.4]);
        let fd = fd_jacobian(|y| c.eval(y), &x, 1e-6);
        assert!((c.jacobian(&x) - fd).norm() < 1e-8);
    }
}
