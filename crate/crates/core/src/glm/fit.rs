//! Solvers for the estimating equations `sum [y - link(psi^T x)] psi = 0`
//! restricted to a centred ball.

use nalgebra::{DMatrix, DVector};

use super::link::Link;
use crate::error::{ZibError, Result};

pub const MAX_ITERATIONS: usize = 200;
/// Stop once the projected gradient of `||S||^2 / 2` is this small.
pub const GRADIENT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub estimate: DVector<f64>,
    /// Euclidean norm of the estimating function at `estimate`.
    pub residual_norm: f64,
    pub converged: bool,
    /// False when there was no data to fit.
    pub fitted: bool,
    pub iterations: usize,
}

/// Observation log: one feature row and one response per entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    dim: usize,
    features: Vec<f64>,
    responses: Vec<f64>,
}

impl Observations {
    pub fn new(dim: usize) -> Self {
        Observations { dim, features: Vec::new(), responses: Vec::new() }
    }

    pub fn push(&mut self, psi: &DVector<f64>, response: f64) -> Result<()> {
        if psi.len() != self.dim {
            return Err(ZibError::DimensionMismatch { expected: self.dim, got: psi.len() });
        }
        self.features.extend(psi.iter());
        self.responses.push(response);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn response(&self, i: usize) -> f64 {
        self.responses[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.features.chunks_exact(self.dim.max(1)).zip(self.responses.iter().copied())
    }
}

/// A square system `S(x) = 0` with Jacobian `J(x)`.
pub trait EstimatingEquation {
    fn dim(&self) -> usize;
    fn residual(&self, x: &DVector<f64>) -> DVector<f64>;
    fn residual_and_jacobian(&self, x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>);
}

/// `S(x) = sum [y_s - link(psi_s^T x)] psi_s` over a raw observation log.
pub struct GlmEquation<'a> {
    pub obs: &'a Observations,
    pub link: Link,
}

fn dot(a: &[f64], x: &DVector<f64>) -> f64 {
    a.iter().zip(x.iter()).map(|(u, v)| u * v).sum()
}

impl EstimatingEquation for GlmEquation<'_> {
    fn dim(&self) -> usize {
        self.obs.dim()
    }

    fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut s = DVector::zeros(self.dim());
        for (psi, y) in self.obs.iter() {
            let r = y - self.link.value(dot(psi, x));
            for (si, pi) in s.iter_mut().zip(psi) {
                *si += r * pi;
            }
        }
        s
    }

    fn residual_and_jacobian(&self, x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.dim();
        let mut s = DVector::zeros(d);
        let mut j = DMatrix::zeros(d, d);
        for (psi, y) in self.obs.iter() {
            let z = dot(psi, x);
            let r = y - self.link.value(z);
            let w = self.link.derivative(z);
            for a in 0..d {
                s[a] += r * psi[a];
                for b in 0..=a {
                    j[(a, b)] -= w * psi[a] * psi[b];
                }
            }
        }
        j.fill_upper_triangle_with_lower_triangle();
        (s, j)
    }
}

/// Identity-link equation from sufficient statistics: `S(x) = b - A x` with
/// `A = sum psi psi^T` and `b = sum y psi`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEquation {
    pub gram: DMatrix<f64>,
    pub moment: DVector<f64>,
    pub count: u64,
}

impl LinearEquation {
    pub fn new(dim: usize) -> Self {
        LinearEquation { gram: DMatrix::zeros(dim, dim), moment: DVector::zeros(dim), count: 0 }
    }

    pub fn push(&mut self, psi: &DVector<f64>, response: f64) -> Result<()> {
        if psi.len() != self.gram.nrows() {
            return Err(ZibError::DimensionMismatch { expected: self.gram.nrows(), got: psi.len() });
        }
        self.gram.ger(1.0, psi, psi, 1.0);
        self.moment.axpy(response, psi, 1.0);
        self.count += 1;
        Ok(())
    }
}

impl EstimatingEquation for LinearEquation {
    fn dim(&self) -> usize {
        self.gram.nrows()
    }

    fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.moment - &self.gram * x
    }

    fn residual_and_jacobian(&self, x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        (self.residual(x), -&self.gram)
    }
}

pub fn project_ball(x: &mut DVector<f64>, radius: f64) {
    let n = x.norm();
    if n > radius {
        *x *= radius / n;
    }
}

fn projected_gradient_norm(x: &DVector<f64>, g: &DVector<f64>, radius: f64) -> f64 {
    let mut y = x - g;
    project_ball(&mut y, radius);
    (x - y).norm()
}

/// Minimizer of `y^T H y / 2 - b^T y` over `||y|| <= radius` for positive
/// definite `H`: `(H + nu I)^-1 b` with the smallest `nu >= 0` that is feasible.
fn ball_model_minimizer(h: DMatrix<f64>, b: &DVector<f64>, radius: f64) -> Option<DVector<f64>> {
    let eig = h.symmetric_eigen();
    if eig.eigenvalues.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let c = eig.eigenvectors.transpose() * b;
    let coords = |nu: f64| c.zip_map(&eig.eigenvalues, |ci, hi| ci / (hi + nu));
    let mut y = coords(0.0);
    if y.norm() > radius {
        // ||y(nu)|| decreases in nu; bisect on the bracket [lo, hi].
        let (mut lo, mut hi) = (0.0, eig.eigenvalues.max().max(1.0));
        while coords(hi).norm() > radius {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if coords(mid).norm() > radius {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        y = coords(hi);
    }
    let mut out = &eig.eigenvectors * y;
    project_ball(&mut out, radius);
    Some(out)
}

/// Minimize `||S(x)||^2 / 2` over `||x|| <= radius` by Levenberg-Marquardt
/// steps whose damped quadratic model is minimized over the ball, with
/// multiplicative damping backtracking.
///
/// Where an interior root exists this is that root; otherwise the closest
/// feasible point in residual norm.
pub fn solve_projected(eq: &impl EstimatingEquation, radius: f64, init: Option<&DVector<f64>>) -> FitResult {
    let d = eq.dim();
    let mut x = init.cloned().unwrap_or_else(|| DVector::zeros(d));
    project_ball(&mut x, radius);
    let (mut s, mut j) = eq.residual_and_jacobian(&x);
    let mut f = 0.5 * s.norm_squared();
    let mut damping: f64 = {
        let jtj = j.transpose() * &j;
        1e-3 * jtj.diagonal().max().max(1e-12)
    };
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let jt = j.transpose();
        let g = &jt * &s;
        if f == 0.0 || projected_gradient_norm(&x, &g, radius) <= GRADIENT_TOL {
            converged = true;
            break;
        }
        let jtj = &jt * &j;
        let mut accepted = None;
        while damping < 1e30 {
            let mut lhs = jtj.clone();
            for i in 0..d {
                lhs[(i, i)] += damping;
            }
            let rhs = &lhs * &x - &g;
            let Some(xn) = ball_model_minimizer(lhs, &rhs, radius) else {
                damping *= 10.0;
                continue;
            };
            let sn = eq.residual(&xn);
            let fn_ = 0.5 * sn.norm_squared();
            if fn_ < f {
                accepted = Some(xn);
                damping = (damping / 3.0).max(1e-300);
                break;
            }
            damping *= 4.0;
        }
        let Some(xn) = accepted else {
            // No damping level yields descent: stationary to working precision.
            converged = true;
            break;
        };
        let moved = (&xn - &x).norm();
        x = xn;
        (s, j) = eq.residual_and_jacobian(&x);
        f = 0.5 * s.norm_squared();
        if moved <= 1e-15 * (1.0 + x.norm()) {
            converged = true;
            break;
        }
    }
    FitResult { residual_norm: s.norm(), estimate: x, converged, fitted: true, iterations }
}

/// Fit a GLM estimating equation over a raw log; the zero vector flagged as
/// not fitted when the log is empty.
pub fn fit_glm(obs: &Observations, link: Link, radius: f64, init: Option<&DVector<f64>>) -> FitResult {
    if obs.is_empty() {
        return not_fitted(obs.dim());
    }
    solve_projected(&GlmEquation { obs, link }, radius, init)
}

/// Identity-link fit from sufficient statistics.
pub fn fit_linear(eq: &LinearEquation, radius: f64, init: Option<&DVector<f64>>) -> FitResult {
    if eq.count == 0 {
        return not_fitted(eq.dim());
    }
    solve_projected(eq, radius, init)
}

fn not_fitted(dim: usize) -> FitResult {
    FitResult {
        estimate: DVector::zeros(dim),
        residual_norm: 0.0,
        converged: true,
        fitted: false,
        iterations: 0,
    }
}
