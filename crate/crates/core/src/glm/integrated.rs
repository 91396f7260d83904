//! Joint fit of `R ~ x^T beta * h(w^T theta)` for the integrated baseline.

use nalgebra::{DMatrix, DVector};

use super::fit::{project_ball, Observations};
use super::link::Link;

/// Projected-gradient steps taken on `theta` per outer iteration.
const THETA_STEPS: usize = 5;
const REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratedFit {
    pub beta: DVector<f64>,
    pub theta: DVector<f64>,
    pub objective: f64,
    /// Objective after every outer iteration, starting from the initial point.
    pub trace: Vec<f64>,
    pub converged: bool,
}

/// Rows of `obs` are the stacked features `(x, w)` with `x` of length `d`.
pub struct IntegratedProblem<'a> {
    pub obs: &'a Observations,
    pub d: usize,
    pub link: Link,
    /// Ridge on `beta`; zero gives plain (minimum-norm) least squares.
    pub ridge: f64,
    pub theta_radius: f64,
}

impl IntegratedProblem<'_> {
    fn split<'r>(&self, row: &'r [f64]) -> (&'r [f64], &'r [f64]) {
        row.split_at(self.d)
    }

    /// `sum (R - x^T beta h(w^T theta))^2 + ridge ||beta||^2`.
    pub fn objective(&self, beta: &DVector<f64>, theta: &DVector<f64>) -> f64 {
        let mut total = 0.0;
        for (row, r) in self.obs.iter() {
            let (x, w) = self.split(row);
            let e = r - dot(x, beta) * self.link.value(dot(w, theta));
            total += e * e;
        }
        total + self.ridge * beta.norm_squared()
    }

    fn beta_step(&self, theta: &DVector<f64>) -> DVector<f64> {
        let d = self.d;
        let mut gram = DMatrix::<f64>::identity(d, d) * self.ridge;
        let mut rhs = DVector::zeros(d);
        for (row, r) in self.obs.iter() {
            let (x, w) = self.split(row);
            let h = self.link.value(dot(w, theta));
            for a in 0..d {
                rhs[a] += h * r * x[a];
                for b in 0..=a {
                    gram[(a, b)] += h * h * x[a] * x[b];
                }
            }
        }
        gram.fill_upper_triangle_with_lower_triangle();
        if let Some(chol) = gram.clone().cholesky() {
            chol.solve(&rhs)
        } else {
            gram.svd(true, true)
                .solve(&rhs, 1e-12)
                .unwrap_or_else(|_| DVector::zeros(d))
        }
    }

    fn theta_gradient(&self, beta: &DVector<f64>, theta: &DVector<f64>) -> (DVector<f64>, f64) {
        let q = theta.len();
        let mut g = DVector::zeros(q);
        let mut curvature = 0.0;
        for (row, r) in self.obs.iter() {
            let (x, w) = self.split(row);
            let z = dot(w, theta);
            let m = dot(x, beta);
            let e = r - m * self.link.value(z);
            let dz = m * self.link.derivative(z);
            let ww: f64 = w.iter().map(|v| v * v).sum();
            curvature += dz * dz * ww;
            for (gi, wi) in g.iter_mut().zip(w) {
                *gi -= 2.0 * e * dz * wi;
            }
        }
        (g, 2.0 * curvature)
    }

    fn theta_steps(&self, beta: &DVector<f64>, theta: &DVector<f64>, mut f: f64) -> (DVector<f64>, f64) {
        let mut theta = theta.clone();
        for _ in 0..THETA_STEPS {
            let (g, curvature) = self.theta_gradient(beta, &theta);
            if g.norm() == 0.0 {
                break;
            }
            let mut eta = 4.0 / curvature.max(1e-12);
            let mut improved = false;
            for _ in 0..40 {
                let mut cand = &theta - &g * eta;
                project_ball(&mut cand, self.theta_radius);
                let fc = self.objective(beta, &cand);
                // Armijo condition along the projected arc.
                if fc <= f - 1e-4 * g.dot(&(&theta - &cand)) && fc <= f {
                    theta = cand;
                    f = fc;
                    improved = true;
                    break;
                }
                eta *= 0.5;
            }
            if !improved {
                break;
            }
        }
        (theta, f)
    }

    /// Alternate an exact `beta` minimization with projected gradient
    /// steps on `theta`, for at most `max_iter` rounds.
    pub fn fit(&self, init: Option<(&DVector<f64>, &DVector<f64>)>, max_iter: usize) -> IntegratedFit {
        let q = self.obs.dim() - self.d;
        let (mut beta, mut theta) = match init {
            Some((b, t)) => (b.clone(), t.clone()),
            None => (DVector::zeros(self.d), DVector::zeros(q)),
        };
        project_ball(&mut theta, self.theta_radius);
        if self.obs.is_empty() {
            return IntegratedFit { beta, theta, objective: 0.0, trace: vec![0.0], converged: true };
        }
        let mut f = self.objective(&beta, &theta);
        let mut trace = vec![f];
        let mut converged = false;
        for _ in 0..max_iter {
            let candidate = self.beta_step(&theta);
            let fb = self.objective(&candidate, &theta);
            // The step is an exact minimizer; guard only against rounding.
            if fb <= f {
                beta = candidate;
                f = fb;
            }
            let before = f;
            (theta, f) = self.theta_steps(&beta, &theta, f);
            trace.push(f);
            let prev = trace[trace.len() - 2];
            if prev - f <= REL_TOL * prev.max(1e-300) && before - f <= REL_TOL * before.max(1e-300) {
                converged = true;
                break;
            }
        }
        IntegratedFit { beta, theta, objective: f, trace, converged }
    }
}

fn dot(a: &[f64], x: &DVector<f64>) -> f64 {
    a.iter().zip(x.iter()).map(|(u, v)| u * v).sum()
}
