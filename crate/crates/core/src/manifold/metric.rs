//! Riemannian metrics on embedded manifolds.
//!
//! A metric is queried through [`MetricField::gram`]: given a member point and
//! a frame of ambient tangent vectors, return their Gram matrix. Composite
//! metrics (pullbacks, averages, pushforwards) only ever evaluate their parts
//! on tangent frames, so ambient forms are allowed to be indefinite off the
//! tangent space.

use std::fmt;
use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use super::submersion::horizontal_lift;
use super::Manifold;
use crate::error::{Error, Result};
use crate::linalg::{sym_eigenvalues, Matrix, Vector};
use crate::map::{FnMap, MapRef};

pub trait MetricField: Send + Sync {
    fn manifold(&self) -> &Manifold;

    /// `frameᵀ g(p) frame` for tangent frame columns at the member point `p`.
    fn gram(&self, p: &Vector, frame: &Matrix) -> Result<Matrix>;

    fn describe(&self) -> String {
        "metric".into()
    }
}

#[derive(Clone)]
pub struct Metric {
    field: Arc<dyn MetricField>,
}

impl fmt::Debug for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Metric({} on {:?})", self.field.describe(), self.manifold())
    }
}

impl Metric {
    pub fn new(field: impl MetricField + 'static) -> Self {
        Self {
            field: Arc::new(field),
        }
    }

    /// The ambient Euclidean inner product restricted to `m`.
    pub fn euclidean(m: &Manifold) -> Self {
        let n = m.ambient_dim();
        Self::from_fn(m, move |_| Matrix::identity(n, n))
    }

    /// A metric from an ambient form `x ↦ A(x)`.
    pub fn from_fn(m: &Manifold, form: impl Fn(&Vector) -> Matrix + Send + Sync + 'static) -> Self {
        Self::new(AmbientMetric {
            manifold: m.clone(),
            form: Arc::new(form),
        })
    }

    pub fn manifold(&self) -> &Manifold {
        self.field.manifold()
    }

    pub fn describe(&self) -> String {
        self.field.describe()
    }

    pub fn gram(&self, p: &Vector, frame: &Matrix) -> Result<Matrix> {
        let g = self.field.gram(p, frame)?;
        Ok((&g + g.transpose()) * 0.5)
    }

    /// Ambient matrix `P g P` whose restriction to `T_p M` is the metric.
    pub fn eval(&self, p: &Vector) -> Result<Matrix> {
        self.gram(p, &self.manifold().projector(p))
    }

    /// Orthonormal tangent basis at `p` and the metric's Gram matrix in it.
    pub fn tangent_gram(&self, p: &Vector) -> Result<(Matrix, Matrix)> {
        let b = self.manifold().tangent_basis(p);
        let g = self.gram(p, &b)?;
        Ok((b, g))
    }

    pub fn inner(&self, p: &Vector, u: &Vector, v: &Vector) -> Result<f64> {
        let mut f = Matrix::zeros(u.len(), 2);
        f.set_column(0, u);
        f.set_column(1, v);
        Ok(self.gram(p, &f)?[(0, 1)])
    }

    pub fn norm(&self, p: &Vector, v: &Vector) -> Result<f64> {
        let f = Matrix::from_column_slice(v.len(), 1, v.as_slice());
        Ok(self.gram(p, &f)?[(0, 0)].max(0.0).sqrt())
    }

    /// Smallest eigenvalue of the tangent-restricted form.
    pub fn min_tangent_eigenvalue(&self, p: &Vector) -> Result<f64> {
        let (_, g) = self.tangent_gram(p)?;
        Ok(sym_eigenvalues(&g).first().copied().unwrap_or(f64::INFINITY))
    }

    pub fn scaled(&self, c: f64) -> Self {
        let m = self.manifold().clone();
        let n = m.ambient_dim();
        Self::new(PullbackCombination::new(
            m,
            vec![(c, FnMap::identity(n).into_ref(), self.clone())],
        ))
    }

    /// `f* self` on the manifold `domain`.
    pub fn pullback(&self, domain: &Manifold, f: MapRef) -> Self {
        Self::new(PullbackCombination::new(
            domain.clone(),
            vec![(1.0, f, self.clone())],
        ))
    }

    /// Memoizes the ambient form `gram(p, I)` at the most recent `capacity`
    /// points. Exact, since every metric here is bilinear in the frame.
    pub fn cached(&self, capacity: usize) -> Self {
        Self::new(CachedMetric {
            inner: self.clone(),
            capacity: capacity.max(1),
            cache: Mutex::new(VecDeque::new()),
        })
    }
}

pub struct CachedMetric {
    inner: Metric,
    capacity: usize,
    cache: Mutex<VecDeque<(Vector, Matrix)>>,
}

impl MetricField for CachedMetric {
    fn manifold(&self) -> &Manifold {
        self.inner.manifold()
    }
    fn gram(&self, p: &Vector, frame: &Matrix) -> Result<Matrix> {
        let hit = {
            let cache = self.cache.lock().expect("metric cache poisoned");
            cache.iter().find(|(q, _)| q == p).map(|(_, m)| m.clone())
        };
        let form = match hit {
            Some(m) => m,
            None => {
                let n = p.len();
                let m = self.inner.field.gram(p, &Matrix::identity(n, n))?;
                let mut cache = self.cache.lock().expect("metric cache poisoned");
                if cache.len() >= self.capacity {
                    cache.pop_front();
                }
                cache.push_back((p.clone(), m.clone()));
                m
            }
        };
        Ok(frame.transpose() * form * frame)
    }
    fn describe(&self) -> String {
        format!("cached {}", self.inner.describe())
    }
}

type Form = Arc<dyn Fn(&Vector) -> Matrix + Send + Sync>;

pub struct AmbientMetric {
    manifold: Manifold,
    form: Form,
}

impl MetricField for AmbientMetric {
    fn manifold(&self) -> &Manifold {
        &self.manifold
    }
    fn gram(&self, p: &Vector, frame: &Matrix) -> Result<Matrix> {
        Ok(frame.transpose() * (self.form)(p) * frame)
    }
    fn describe(&self) -> String {
        "ambient form".into()
    }
}

/// `Σ c_k f_k* g_k`: sums of pullbacks. Covers scaling, averaging over a
/// finite set of transformations, and the explicit nerve formulas.
pub struct PullbackCombination {
    manifold: Manifold,
    terms: Vec<(f64, MapRef, Metric)>,
    label: String,
}

impl PullbackCombination {
    pub fn new(manifold: Manifold, terms: Vec<(f64, MapRef, Metric)>) -> Self {
        Self {
            manifold,
            terms,
            label: "pullback combination".into(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

impl MetricField for PullbackCombination {
    fn manifold(&self) -> &Manifold {
        &self.manifold
    }
    fn gram(&self, p: &Vector, frame: &Matrix) -> Result<Matrix> {
        let k = frame.ncols();
        let mut acc = Matrix::zeros(k, k);
        for (c, f, g) in &self.terms {
            if *c == 0.0 {
                continue;
            }
            let q = f.eval(p);
            let pushed = f.jacobian(p) * frame;
            acc += g.gram(&q, &pushed)? * *c;
        }
        Ok(acc)
    }
    fn describe(&self) -> String {
        self.label.clone()
    }
}

/// Chooses a point in the fiber over a base point.
pub type Section = Arc<dyn Fn(&Vector) -> Result<Vector> + Send + Sync>;

/// The metric on the base of a Riemannian submersion, obtained by declaring
/// the differential an isometry on the horizontal space at `section(y)`.
pub struct Pushforward {
    base: Manifold,
    total: Metric,
    map: MapRef,
    section: Section,
    label: String,
}

impl Pushforward {
    pub fn new(base: Manifold, total: Metric, map: MapRef, section: Section) -> Self {
        Self {
            base,
            total,
            map,
            section,
            label: "pushforward".into(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

impl MetricField for Pushforward {
    fn manifold(&self) -> &Manifold {
        &self.base
    }
    fn gram(&self, y: &Vector, frame: &Matrix) -> Result<Matrix> {
        let p = (self.section)(y)?;
        let fy = self.map.eval(&p);
        if (&fy - y).norm() > 1e-8 * (1.0 + y.norm()) {
            return Err(Error::InvalidParams(format!(
                "section point maps {:.3e} away from base point",
                (&fy - y).norm()
            )));
        }
        let lift = horizontal_lift(&self.total, &self.map, self.base.intrinsic_dim(), &p, frame)?;
        self.total.gram(&p, &lift)
    }
    fn describe(&self) -> String {
        self.label.clone()
    }
}
