//! Small dense linear-algebra helpers shared by the estimator and the confidence sets.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// A regularized second-moment matrix `Σ w x xᵀ + λI`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    pub entries: Matrix,
    pub lambda: f64,
}

impl DesignMatrix {
    pub fn regularizer(dim: usize, lambda: f64) -> Self {
        Self {
            entries: Matrix::identity(dim, dim) * lambda,
            lambda,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// `entries += weight · x xᵀ`, touching both triangles so the result stays exactly symmetric.
    pub fn add_rank_one(&mut self, weight: f64, x: &Vector) {
        add_outer(&mut self.entries, weight, x);
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.entries)
    }

    pub fn factor(&self) -> Result<FactoredMatrix> {
        FactoredMatrix::new(&self.entries)
    }

    /// `‖v‖_M = sqrt(vᵀ M v)`.
    pub fn norm(&self, v: &Vector) -> f64 {
        v.dot(&(&self.entries * v)).max(0.0).sqrt()
    }

    /// `‖v‖_{M⁻¹}`.
    pub fn inverse_norm(&self, v: &Vector) -> Result<f64> {
        Ok(self.factor()?.inverse_norm_sq(v).sqrt())
    }

    pub fn log_det(&self) -> Result<f64> {
        Ok(self.factor()?.log_det())
    }
}

/// Cholesky factorization of a symmetric positive definite matrix.
pub struct FactoredMatrix {
    chol: Cholesky<f64, Dyn>,
}

impl FactoredMatrix {
    pub fn new(m: &Matrix) -> Result<Self> {
        Cholesky::new(m.clone())
            .map(|chol| Self { chol })
            .ok_or(Error::NotPositiveDefinite)
    }

    pub fn solve(&self, b: &Vector) -> Vector {
        self.chol.solve(b)
    }

    /// `bᵀ M⁻¹ b`, computed as `‖L⁻¹ b‖²`.
    pub fn inverse_norm_sq(&self, b: &Vector) -> f64 {
        let y = self
            .chol
            .l_dirty()
            .solve_lower_triangular(b)
            .expect("cholesky factor has a nonzero diagonal");
        y.norm_squared()
    }

    /// Solves `Lᵀ z = u`, so that `‖z‖_M = ‖u‖₂`. Maps the unit ball onto the unit
    /// ellipsoid of `M`.
    pub fn ellipsoid_point(&self, u: &Vector) -> Vector {
        self.chol
            .l_dirty()
            .tr_solve_lower_triangular(u)
            .expect("cholesky factor has a nonzero diagonal")
    }

    pub fn log_det(&self) -> f64 {
        let l = self.chol.l_dirty();
        (0..l.nrows()).map(|i| 2.0 * l[(i, i)].ln()).sum()
    }
}

pub fn add_outer(m: &mut Matrix, weight: f64, x: &Vector) {
    let d = x.len();
    for r in 0..d {
        let wr = weight * x[r];
        for c in 0..d {
            m[(r, c)] += wr * x[c];
        }
    }
}

pub fn min_eigenvalue(m: &Matrix) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn max_eigenvalue(m: &Matrix) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Uniform draw from the unit sphere in `R^dim`.
pub fn sample_direction<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vector {
    loop {
        let v = Vector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Uniform draw from the ball of the given radius: Gaussian direction, radius `∝ U^{1/d}`.
pub fn sample_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> Vector {
    let dir = sample_direction(rng, dim);
    let u: f64 = rng.random();
    dir * (radius * u.powf(1.0 / dim as f64))
}
