use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result, ZibError};

const REFACTOR_EVERY: u64 = 512;

/// Ridged Gram matrix `lambda I + sum z z^T` with a Cholesky factor kept in
/// sync by rank-one updates.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    lambda: f64,
    matrix: DMatrix<f64>,
    factor: Cholesky<f64, Dyn>,
    updates: u64,
}

impl DesignMatrix {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "must be at least 1"));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid("lambda", format!("must be positive, got {lambda}")));
        }
        let matrix = DMatrix::identity(dim, dim) * lambda;
        let factor = Cholesky::new(matrix.clone()).expect("ridged identity is positive definite");
        Ok(DesignMatrix { lambda, matrix, factor, updates: 0 })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn add(&mut self, z: &DVector<f64>) -> Result<()> {
        if z.len() != self.dim() {
            return Err(ZibError::DimensionMismatch { expected: self.dim(), got: z.len() });
        }
        self.matrix.ger(1.0, z, z, 1.0);
        self.updates += 1;
        if self.updates.is_multiple_of(REFACTOR_EVERY) {
            self.refactor();
        } else {
            self.factor.rank_one_update(z, 1.0);
        }
        Ok(())
    }

    fn refactor(&mut self) {
        // Symmetrize against accumulated rounding before refactoring.
        let sym = (&self.matrix + self.matrix.transpose()) * 0.5;
        self.matrix = sym;
        self.factor = Cholesky::new(self.matrix.clone()).expect("ridged Gram matrix is positive definite");
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.factor.solve(b)
    }

    /// `sqrt(z^T A^{-1} z)`, through the factor rather than an inverse.
    pub fn inv_norm(&self, z: &DVector<f64>) -> f64 {
        let y = self
            .factor
            .l_dirty()
            .solve_lower_triangular(z)
            .expect("Cholesky factor has a positive diagonal");
        y.norm()
    }

    /// Draw from `N(mean, scale^2 A^{-1})`.
    pub fn sample_gaussian(&self, mean: &DVector<f64>, scale: f64, rng: &mut dyn RngCore) -> DVector<f64> {
        let xi = DVector::from_fn(self.dim(), |_, _| StandardNormal.sample(rng));
        // A = L L^T, so L^{-T} xi has covariance A^{-1}.
        let y = self
            .factor
            .l_dirty()
            .tr_solve_lower_triangular(&xi)
            .expect("Cholesky factor has a positive diagonal");
        mean + y * scale
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix.clone().symmetric_eigenvalues().min()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SimRng;
    use rand::{Rng, SeedableRng};

    fn random_vec(dim: usize, rng: &mut SimRng) -> DVector<f64> {
        DVector::from_fn(dim, |_, _| rng.random_range(-2.0..2.0))
    }

    #[test]
    fn inv_norm_matches_explicit_inverse() {
        let mut rng = SimRng::seed_from_u64(11);
        for dim in 1..=6 {
            let mut a = DesignMatrix::new(dim, 0.7).unwrap();
            for _ in 0..20 {
                a.add(&random_vec(dim, &mut rng)).unwrap();
            }
            let inv = a.matrix().clone().try_inverse().unwrap();
            for _ in 0..10 {
                let z = random_vec(dim, &mut rng);
                let explicit = (z.transpose() * &inv * &z)[(0, 0)].sqrt();
                assert!((a.inv_norm(&z) - explicit).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn factor_tracks_matrix_across_refactor() {
        let mut rng = SimRng::seed_from_u64(12);
        let mut a = DesignMatrix::new(4, 1.0).unwrap();
        for _ in 0..1100 {
            a.add(&random_vec(4, &mut rng)).unwrap();
        }
        let rebuilt = Cholesky::new(a.matrix().clone()).unwrap();
        let b = random_vec(4, &mut rng);
        assert!((a.solve(&b) - rebuilt.solve(&b)).norm() < 1e-10);
        assert!(a.min_eigenvalue() >= 1.0 - 1e-9);
    }

    #[test]
    fn dimension_checked() {
        let mut a = DesignMatrix::new(3, 1.0).unwrap();
        assert!(a.add(&DVector::zeros(2)).is_err());
        assert!(DesignMatrix::new(0, 1.0).is_err());
        assert!(DesignMatrix::new(2, 0.0).is_err());
    }

    #[test]
    fn sample_covariance_matches_inverse() {
        let mut rng = SimRng::seed_from_u64(13);
        let mut a = DesignMatrix::new(3, 1.0).unwrap();
        for _ in 0..5 {
            a.add(&random_vec(3, &mut rng)).unwrap();
        }
        let mean = DVector::from_vec(vec![0.5, -1.0, 2.0]);
        let scale = 1.7;
        let n = 10_000;
        let draws: Vec<DVector<f64>> = (0..n).map(|_| a.sample_gaussian(&mean, scale, &mut rng)).collect();
        let m = draws.iter().fold(DVector::zeros(3), |acc, d| acc + d) / n as f64;
        let mut cov = DMatrix::zeros(3, 3);
        for d in &draws {
            let c = d - &m;
            cov += &c * c.transpose();
        }
        cov /= (n - 1) as f64;
        let target = a.matrix().clone().try_inverse().unwrap() * (scale * scale);
        assert!((cov - &target).norm() <= 0.1 * target.norm());
    }
}
