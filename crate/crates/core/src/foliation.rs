//! Foliations given by explicit frames, the Bott connection on the normal
//! bundle, parallel transport and linear holonomy.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{solve_min_norm_vec, Matrix, Vector};
use crate::manifold::Manifold;
use crate::map::{fd_jacobian, FD_STEP};
use crate::report::Report;

pub type VectorField = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
pub type MatrixField = Arc<dyn Fn(&Vector) -> Matrix + Send + Sync>;
pub type PointMap = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;

/// Residual tolerance for the normal part of leaf-frame brackets.
pub const INVOLUTIVITY_TOL: f64 = 1e-4;
/// Tangency tolerance for leaf paths.
pub const LEAFWISE_TOL: f64 = 1e-6;

/// `[X, Y] = DY·X − DX·Y` with central differences.
pub fn lie_bracket(x: &VectorField, y: &VectorField, p: &Vector) -> Vector {
    let dx = fd_jacobian(|q| x(q), p, FD_STEP);
    let dy = fd_jacobian(|q| y(q), p, FD_STEP);
    dy * x(p) - dx * y(p)
}

/// A deck transformation of a covering chart together with its action on
/// transverse-frame coefficients.
#[derive(Clone)]
pub struct Deck {
    pub point: PointMap,
    /// Matrix taking coefficients at `p` to coefficients at `point(p)`.
    pub normal: MatrixField,
}

/// Leaves are the integral manifolds of `leaf`; `transverse` completes it to
/// a frame of `TM` and represents the normal bundle.
#[derive(Clone)]
pub struct Foliation {
    label: String,
    space: Manifold,
    leaf: Vec<VectorField>,
    transverse: Vec<VectorField>,
    /// Extra connection 1-form added to Bott's: `Σ aᵢ Ωᵢ(p)` along `Σ aᵢ Xᵢ`.
    twist: Vec<MatrixField>,
    deck: Option<Deck>,
    certificate: Report,
}

impl std::fmt::Debug for Foliation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Foliation")
            .field("label", &self.label)
            .field("leaf_dim", &self.leaf.len())
            .field("codim", &self.transverse.len())
            .finish()
    }
}

impl Foliation {
    /// Checks that the frames span `TM` and that `leaf` is involutive at
    /// sampled points of `space`.
    pub fn new(label: impl Into<String>, space: Manifold, leaf: Vec<VectorField>, transverse: Vec<VectorField>) -> Result<Self> {
        let n = space.ambient_dim();
        if leaf.len() + transverse.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: leaf.len() + transverse.len(),
            });
        }
        let mut f = Self {
            label: label.into(),
            space,
            leaf,
            transverse,
            twist: Vec::new(),
            deck: None,
            certificate: Report::from_defects("involutivity", vec![], INVOLUTIVITY_TOL),
        };
        let pts = f.space.sample_points(32, 13)?;
        let mut defects = Vec::with_capacity(pts.len());
        for p in &pts {
            let frame = f.frame(p);
            if crate::linalg::numerical_rank(&frame) < n {
                return Err(Error::RankDeficient {
                    rank: crate::linalg::numerical_rank(&frame),
                    expected: n,
                });
            }
            let mut worst: f64 = 0.0;
            for i in 0..f.leaf.len() {
                for j in 0..i {
                    let b = lie_bracket(&f.leaf[i], &f.leaf[j], p);
                    worst = worst.max(f.split(p, &b).1.norm());
                }
            }
            defects.push(worst);
        }
        f.certificate = Report::from_defects("involutivity", defects, INVOLUTIVITY_TOL);
        if !f.certificate.pass {
            return Err(Error::InvalidParams(format!(
                "leaf frame not involutive: normal bracket {:.3e}",
                f.certificate.max_defect
            )));
        }
        Ok(f)
    }

    /// Adds `Ωᵢ` to the connection along `Xᵢ`; used to exercise the
    /// curvature check with a connection that is not flat.
    pub fn with_twist(mut self, twist: Vec<MatrixField>) -> Result<Self> {
        if twist.len() != self.leaf.len() {
            return Err(Error::DimensionMismatch {
                expected: self.leaf.len(),
                got: twist.len(),
            });
        }
        self.twist = twist;
        Ok(self)
    }

    pub fn with_deck(mut self, deck: Deck) -> Self {
        self.deck = Some(deck);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn leaf_dim(&self) -> usize {
        self.leaf.len()
    }

    pub fn codim(&self) -> usize {
        self.transverse.len()
    }

    pub fn certificate(&self) -> &Report {
        &self.certificate
    }

    /// `[X₁ … X_k Y₁ … Y_q]` at `p`.
    pub fn frame(&self, p: &Vector) -> Matrix {
        let n = p.len();
        let mut m = Matrix::zeros(n, self.leaf.len() + self.transverse.len());
        for (j, x) in self.leaf.iter().chain(&self.transverse).enumerate() {
            m.set_column(j, &x(p));
        }
        m
    }

    /// Leaf and normal coefficients of a vector at `p`.
    pub fn split(&self, p: &Vector, v: &Vector) -> (Vector, Vector) {
        let c = solve_min_norm_vec(&self.frame(p), v);
        let k = self.leaf.len();
        (c.rows(0, k).into_owned(), c.rows(k, self.transverse.len()).into_owned())
    }

    /// Connection matrix along the leaf vector with coefficients `a` at `p`:
    /// normal coefficients satisfy `c' = −A c`.
    fn connection(&self, p: &Vector, a: &Vector) -> Matrix {
        let q = self.transverse.len();
        let mut m = Matrix::zeros(q, q);
        for (i, x) in self.leaf.iter().enumerate() {
            if a[i] == 0.0 {
                continue;
            }
            for (j, y) in self.transverse.iter().enumerate() {
                let (_, nrm) = self.split(p, &lie_bracket(x, y, p));
                m.set_column(j, &(m.column(j) + nrm * a[i]));
            }
            if let Some(om) = self.twist.get(i) {
                m += om(p) * a[i];
            }
        }
        m
    }
}

/// A curve `γ: [0, 1] → M` meant to stay in one leaf.
#[derive(Clone)]
pub struct LeafPath {
    curve: Arc<dyn Fn(f64) -> Vector + Send + Sync>,
    velocity: Option<Arc<dyn Fn(f64) -> Vector + Send + Sync>>,
    pieces: Option<Arc<Vec<LeafPath>>>,
}

impl LeafPath {
    pub fn new(curve: impl Fn(f64) -> Vector + Send + Sync + 'static) -> Self {
        Self {
            curve: Arc::new(curve),
            velocity: None,
            pieces: None,
        }
    }

    pub fn with_velocity(mut self, v: impl Fn(f64) -> Vector + Send + Sync + 'static) -> Self {
        self.velocity = Some(Arc::new(v));
        self
    }

    /// Straight segment from `a` to `b`.
    pub fn segment(a: Vector, b: Vector) -> Self {
        let d = &b - &a;
        let d2 = d.clone();
        Self::new(move |t| &a + &d * t).with_velocity(move |_| d2.clone())
    }

    /// Runs through the pieces in order, each on an equal share of `[0, 1]`.
    pub fn concat(pieces: Vec<LeafPath>) -> Self {
        assert!(!pieces.is_empty(), "empty path");
        let pieces = Arc::new(pieces);
        let n = pieces.len();
        let locate = move |t: f64| {
            let s = (t * n as f64).clamp(0.0, n as f64);
            let i = (s.floor() as usize).min(n - 1);
            (i, s - i as f64)
        };
        let (pc, pv) = (pieces.clone(), pieces.clone());
        let mut path = Self::new(move |t| {
            let (i, s) = locate(t);
            pc[i].point(s)
        })
        .with_velocity(move |t| {
            let (i, s) = locate(t);
            pv[i].velocity(s) * n as f64
        });
        path.pieces = Some(pieces);
        path
    }

    pub fn point(&self, t: f64) -> Vector {
        (self.curve)(t)
    }

    pub fn velocity(&self, t: f64) -> Vector {
        match &self.velocity {
            Some(v) => v(t),
            None => {
                let h = 1e-6;
                ((self.curve)(t + h) - (self.curve)(t - h)) / (2.0 * h)
            }
        }
    }

    /// `γ ∘ φ` for a reparametrization `φ` of `[0, 1]` with derivative `dφ`.
    pub fn reparametrized(&self, phi: impl Fn(f64) -> f64 + Send + Sync + 'static, dphi: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let (a, b) = (self.clone(), self.clone());
        let phi = Arc::new(phi);
        let phi2 = phi.clone();
        Self::new(move |t| a.point(phi(t))).with_velocity(move |t| b.velocity(phi2(t)) * dphi(t))
    }
}

/// Default number of RK4 steps on `[0, 1]`.
pub const TRANSPORT_STEPS: usize = 200;

impl Foliation {
    /// Leaf coefficients of `γ'(t)`; fails when the normal part exceeds the
    /// tangency tolerance.
    fn leaf_velocity(&self, path: &LeafPath, t: f64) -> Result<(Vector, Vector)> {
        let p = path.point(t);
        let (a, nrm) = self.split(&p, &path.velocity(t));
        let r = nrm.norm();
        if !(r <= LEAFWISE_TOL) {
            return Err(Error::NotLeafwise(r));
        }
        Ok((p, a))
    }

    /// Largest normal component of `γ'` over `n + 1` equally spaced times.
    pub fn tangency_residual(&self, path: &LeafPath, n: usize) -> f64 {
        (0..=n)
            .map(|k| {
                let t = k as f64 / n.max(1) as f64;
                self.split(&path.point(t), &path.velocity(t)).1.norm()
            })
            .fold(0.0, f64::max)
    }

    /// Matrix of Bott transport along `γ` in the transverse frame.
    pub fn transport_matrix(&self, path: &LeafPath, steps: usize) -> Result<Matrix> {
        if steps == 0 {
            return Err(Error::StepCountInvalid(steps));
        }
        let q = self.codim();
        if let Some(pieces) = &path.pieces {
            // integrate piece by piece so no RK stage straddles a corner
            let per = steps.div_ceil(pieces.len());
            let mut m = Matrix::identity(q, q);
            for piece in pieces.iter() {
                m = self.transport_matrix(piece, per)? * m;
            }
            return Ok(m);
        }
        let h = 1.0 / steps as f64;
        let rhs = |t: f64, c: &Matrix| -> Result<Matrix> {
            let (p, a) = self.leaf_velocity(path, t)?;
            Ok(-(self.connection(&p, &a) * c))
        };
        let mut c = Matrix::identity(q, q);
        for k in 0..steps {
            let t = k as f64 * h;
            let k1 = rhs(t, &c)?;
            let k2 = rhs(t + 0.5 * h, &(&c + &k1 * (0.5 * h)))?;
            let k3 = rhs(t + 0.5 * h, &(&c + &k2 * (0.5 * h)))?;
            let k4 = rhs(t + h, &(&c + &k3 * h))?;
            c += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        Ok(c)
    }

    /// Number of deck applications taking `y` to `x`, with the composed
    /// normal matrix.
    fn close_up(&self, x: &Vector, y: &Vector) -> Result<Matrix> {
        let q = self.codim();
        let close = |a: &Vector| (a - x).norm() <= 1e-8 * (1.0 + x.norm());
        let mut m = Matrix::identity(q, q);
        if close(y) {
            return Ok(m);
        }
        if let Some(deck) = &self.deck {
            let mut z = y.clone();
            for _ in 0..8 {
                m = (deck.normal)(&z) * m;
                z = (deck.point)(&z);
                if close(&z) {
                    return Ok(m);
                }
            }
        }
        Err(Error::InvalidParams(format!(
            "loop does not close: endpoint at distance {:.3e}",
            (y - x).norm()
        )))
    }
}

/// Bott transport of the normal vector with transverse coefficients `v`
/// from `γ(0)` to `γ(1)`.
pub fn bott_transport(f: &Foliation, path: &LeafPath, v: &Vector) -> Result<Vector> {
    bott_transport_with(f, path, v, TRANSPORT_STEPS)
}

pub fn bott_transport_with(f: &Foliation, path: &LeafPath, v: &Vector, steps: usize) -> Result<Vector> {
    if v.len() != f.codim() {
        return Err(Error::DimensionMismatch {
            expected: f.codim(),
            got: v.len(),
        });
    }
    Ok(f.transport_matrix(path, steps)? * v)
}

/// Holonomy of a loop, in the transverse frame at `γ(0)`. On a covering chart
/// the endpoint may differ from the start by up to eight deck transformations.
pub fn linear_holonomy(f: &Foliation, path: &LeafPath) -> Result<Matrix> {
    linear_holonomy_with(f, path, TRANSPORT_STEPS)
}

pub fn linear_holonomy_with(f: &Foliation, path: &LeafPath, steps: usize) -> Result<Matrix> {
    let t = f.transport_matrix(path, steps)?;
    let d = f.close_up(&path.point(0.0), &path.point(1.0))?;
    Ok(d * t)
}

/// Holonomies of several loops in parallel.
pub fn holonomies(f: &Foliation, loops: &[LeafPath]) -> Vec<Result<Matrix>> {
    use rayon::prelude::*;
    loops.par_iter().map(|l| linear_holonomy(f, l)).collect()
}

/// Boundary of the ambient rectangle `p + [0,1]u + [0,1]w`.
pub fn rectangle(p: &Vector, u: &Vector, w: &Vector) -> LeafPath {
    let (a, b) = (p.clone(), p + u);
    let (c, d) = (p + u + w, p + w);
    LeafPath::concat(vec![
        LeafPath::segment(a.clone(), b.clone()),
        LeafPath::segment(b, c.clone()),
        LeafPath::segment(c, d.clone()),
        LeafPath::segment(d, a),
    ])
}

/// Compares the holonomy defect `‖H − I‖` of a leafwise rectangle with that of
/// the rectangle with halved sides. A flat connection passes with both
/// defects negligible; otherwise the ratio must lie in `[3.5, 4.5]`.
pub fn flatness_check(f: &Foliation, p: &Vector, u: &Vector, w: &Vector) -> Result<Report> {
    let q = f.codim();
    let defect = |u: &Vector, w: &Vector| -> Result<f64> {
        let h = linear_holonomy(f, &rectangle(p, u, w))?;
        Ok((h - Matrix::identity(q, q)).norm())
    };
    let full = defect(u, w)?;
    let quarter = defect(&(u * 0.5), &(w * 0.5))?;
    let flat = full < 1e-9;
    let ratio = full / quarter;
    let pass = flat || (3.5..=4.5).contains(&ratio);
    let mut r = Report::from_defects("flatness", vec![full, quarter], 1e-9)
        .with_data("full", full)
        .with_data("quarter", quarter)
        .with_data("ratio", if ratio.is_finite() { ratio } else { 0.0 })
        .with_data("flat", flat);
    r.pass = pass;
    Ok(r)
}
