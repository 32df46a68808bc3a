//! Geodesic integration in graph charts.
//!
//! The chart metric is `G(ξ) = dφ(ξ)ᵀ g dφ(ξ)`; Christoffel terms come from
//! central differences of `G`. The state `(ξ, ξ')` is advanced by classical
//! RK4 and transferred to a fresh chart whenever `|ξ|` leaves the half-radius
//! ball.

use super::{Chart, Metric};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::map::FD_STEP;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicOptions {
    pub steps_per_unit: usize,
    pub chart_radius: f64,
    pub fd_step: f64,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        Self {
            steps_per_unit: 64,
            chart_radius: 0.5,
            fd_step: FD_STEP,
        }
    }
}

/// Sampled geodesic: ambient points and velocities at uniform times in [0, 1].
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<Vector>,
    pub velocities: Vec<Vector>,
}

impl Trajectory {
    pub fn endpoint(&self) -> &Vector {
        self.points.last().expect("trajectory has a start point")
    }

    /// Largest deviation of `|γ'(t)|_g` from its initial value.
    pub fn speed_defect(&self, g: &Metric) -> Result<f64> {
        let mut speeds = Vec::with_capacity(self.points.len());
        for (p, v) in self.points.iter().zip(&self.velocities) {
            speeds.push(g.norm(p, v)?);
        }
        let s0 = speeds[0];
        Ok(speeds.iter().map(|s| (s - s0).abs()).fold(0.0, f64::max))
    }
}

struct ChartMetric<'a> {
    metric: &'a Metric,
    chart: Chart,
    h: f64,
}

impl ChartMetric<'_> {
    fn coeffs(&self, xi: &Vector) -> Result<Matrix> {
        let y = self.chart.point(xi)?;
        let d = self.chart.differential(&y)?;
        self.metric.gram(&y, &d)
    }

    fn accel(&self, xi: &Vector, eta: &Vector) -> Result<Vector> {
        let d = xi.len();
        let g = self.coeffs(xi)?;
        let mut dg = Vec::with_capacity(d);
        let mut xp = xi.clone();
        for l in 0..d {
            xp[l] = xi[l] + self.h;
            let gp = self.coeffs(&xp)?;
            xp[l] = xi[l] - self.h;
            let gm = self.coeffs(&xp)?;
            xp[l] = xi[l];
            dg.push((gp - gm) / (2.0 * self.h));
        }
        // w_l = Σ_ij ∂_i G_jl η_i η_j − ½ ηᵀ ∂_l G η
        let mut w = Vector::zeros(d);
        let mut dir = Matrix::zeros(d, d);
        for (i, dgi) in dg.iter().enumerate() {
            dir += dgi * eta[i];
        }
        let first = dir * eta;
        for l in 0..d {
            w[l] = first[l] - 0.5 * eta.dot(&(&dg[l] * eta));
        }
        let chol = g
            .cholesky()
            .ok_or_else(|| Error::InvalidParams("chart metric not positive definite".into()))?;
        Ok(-chol.solve(&w))
    }
}

fn rk4_step(cm: &ChartMetric, xi: &Vector, eta: &Vector, dt: f64) -> Result<(Vector, Vector)> {
    let k1x = eta.clone();
    let k1v = cm.accel(xi, eta)?;
    let x2 = xi + &k1x * (dt / 2.0);
    let v2 = eta + &k1v * (dt / 2.0);
    let k2v = cm.accel(&x2, &v2)?;
    let x3 = xi + &v2 * (dt / 2.0);
    let v3 = eta + &k2v * (dt / 2.0);
    let k3v = cm.accel(&x3, &v3)?;
    let x4 = xi + &v3 * dt;
    let v4 = eta + &k3v * dt;
    let k4v = cm.accel(&x4, &v4)?;
    let xn = xi + (k1x + &v2 * 2.0 + &v3 * 2.0 + &v4) * (dt / 6.0);
    let vn = eta + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (dt / 6.0);
    Ok((xn, vn))
}

/// Integrates the geodesic with `γ(0) = base`, `γ'(0) = vec` over `[0, 1]` in
/// `step_count` RK4 steps.
pub fn geodesic_trajectory(
    g: &Metric,
    base: &Vector,
    vec: &Vector,
    step_count: usize,
    opts: &GeodesicOptions,
) -> Result<Trajectory> {
    if step_count < 1 {
        return Err(Error::StepCountInvalid(step_count));
    }
    let m = g.manifold();
    let dt = 1.0 / step_count as f64;
    let mut cm = ChartMetric {
        metric: g,
        chart: m.chart_at(base),
        h: opts.fd_step,
    };
    let mut xi = Vector::zeros(cm.chart.dim());
    let mut eta = cm.chart.basis().transpose() * vec;
    let mut traj = Trajectory {
        times: vec![0.0],
        points: vec![base.clone()],
        velocities: vec![m.project_tangent(base, vec)],
    };
    if vec.norm() == 0.0 {
        for k in 1..=step_count {
            traj.times.push(k as f64 * dt);
            traj.points.push(base.clone());
            traj.velocities.push(Vector::zeros(base.len()));
        }
        return Ok(traj);
    }
    for k in 1..=step_count {
        let (nx, nv) = match rk4_step(&cm, &xi, &eta, dt) {
            Ok(s) => s,
            Err(e) if xi.norm() > 0.0 => {
                // Retry once from a chart centered at the current point.
                let y = cm.chart.point(&xi)?;
                let vel = cm.chart.differential(&y)? * &eta;
                cm.chart = m.chart_at(&y);
                xi = Vector::zeros(cm.chart.dim());
                eta = cm.chart.basis().transpose() * vel;
                rk4_step(&cm, &xi, &eta, dt).map_err(|_| Error::ChartEscape(e.to_string()))?
            }
            Err(e) => return Err(Error::ChartEscape(e.to_string())),
        };
        xi = nx;
        eta = nv;
        let y = cm.chart.point(&xi)?;
        let vel = cm.chart.differential(&y)? * &eta;
        traj.times.push(k as f64 * dt);
        traj.points.push(y.clone());
        traj.velocities.push(vel.clone());
        if xi.norm() > 0.5 * opts.chart_radius {
            cm.chart = m.chart_at(&y);
            xi = Vector::zeros(cm.chart.dim());
            eta = cm.chart.basis().transpose() * vel;
        }
    }
    Ok(traj)
}

/// `γ(1)` for the geodesic with initial data `(base, vec)`.
pub fn geodesic_exp(g: &Metric, base: &Vector, vec: &Vector, step_count: usize) -> Result<Vector> {
    let t = geodesic_trajectory(g, base, vec, step_count, &GeodesicOptions::default())?;
    Ok(t.endpoint().clone())
}

/// Exponential map with the step count chosen from the vector's length.
#[derive(Debug, Clone)]
pub struct Exponential {
    pub metric: Metric,
    pub opts: GeodesicOptions,
}

impl Exponential {
    pub fn new(metric: Metric) -> Self {
        Self {
            metric,
            opts: GeodesicOptions::default(),
        }
    }

    pub fn with_options(mut self, opts: GeodesicOptions) -> Self {
        self.opts = opts;
        self
    }

    pub fn steps_for(&self, base: &Vector, vec: &Vector) -> Result<usize> {
        let len = self.metric.norm(base, vec)?;
        Ok(((self.opts.steps_per_unit as f64 * len).ceil() as usize).max(1))
    }

    pub fn exp(&self, base: &Vector, vec: &Vector) -> Result<Vector> {
        let n = self.steps_for(base, vec)?;
        Ok(geodesic_trajectory(&self.metric, base, vec, n, &self.opts)?
            .endpoint()
            .clone())
    }

    pub fn trajectory(&self, base: &Vector, vec: &Vector) -> Result<Trajectory> {
        let n = self.steps_for(base, vec)?;
        geodesic_trajectory(&self.metric, base, vec, n, &self.opts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Manifold;

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    #[test]
    fn flat_geodesic_is_a_line() {
        let m = Manifold::euclidean(2);
        let y = geodesic_exp(&Metric::euclidean(&m), &v(&[0.0, 0.0]), &v(&[3.0, 4.0]), 64).unwrap();
        assert!((y - v(&[3.0, 4.0])).norm() < 1e-9);
    }

    #[test]
    fn quarter_turn_on_circle() {
        let m = Manifold::circle();
        let g = Metric::euclidean(&m);
        let y = geodesic_exp(&g, &v(&[1.0, 0.0]), &v(&[0.0, std::f64::consts::FRAC_PI_2]), 128).unwrap();
        assert!((y - v(&[0.0, 1.0])).norm() < 1e-8);
    }

    #[test]
    fn zero_vector_stays_put() {
        let m = Manifold::sphere(2);
        let p = v(&[0.0, 0.6, 0.8]);
        let y = geodesic_exp(&Metric::euclidean(&m), &p, &Vector::zeros(3), 5).unwrap();
        assert!((y - p).norm() < 1e-12);
    }

    #[test]
    fn zero_steps_rejected() {
        let m = Manifold::euclidean(1);
        let e = geodesic_exp(&Metric::euclidean(&m), &v(&[0.0]), &v(&[1.0]), 0);
        assert_eq!(e, Err(Error::StepCountInvalid(0)));
    }

    #[test]
    fn speed_is_preserved_on_sphere() {
        let m = Manifold::sphere(2);
        let g = Metric::euclidean(&m);
        let t = Exponential::new(g.clone())
            .trajectory(&v(&[1.0, 0.0, 0.0]), &v(&[0.0, 1.2, 0.5]))
            .unwrap();
        assert!(t.speed_defect(&g).unwrap() < 1e-8);
    }
}
