use nalgebra::DMatrix;

use crate::error::Result;
use crate::linalg::{cholesky, symmetrize, State};
use crate::models::StateSpaceModel;

/// `Gamma = L L'`, the negative expected Hessian of the one-step target.
///
/// Auxiliary velocities `u` live in whitened coordinates; a position step is
/// `L^{-T} u`, which has covariance `Gamma^{-1}` when `u` is isotropic.
#[derive(Debug, Clone)]
pub struct Preconditioner {
    gamma: DMatrix<f64>,
    l: DMatrix<f64>,
}

impl Preconditioner {
    pub fn from_matrix(gamma: DMatrix<f64>) -> Result<Self> {
        let gamma = symmetrize(&gamma);
        let l = cholesky(&gamma, "preconditioning matrix")?.l();
        Ok(Self { gamma, l })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            gamma: DMatrix::identity(d, d),
            l: DMatrix::identity(d, d),
        }
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// `L^{-T} u`.
    pub fn step(&self, u: &State) -> State {
        self.l
            .tr_solve_lower_triangular(u)
            .expect("Cholesky factor has a positive diagonal")
    }

    /// `L^{-1} g`: a gradient expressed in whitened coordinates.
    pub fn whiten_grad(&self, g: &State) -> State {
        self.l
            .solve_lower_triangular(g)
            .expect("Cholesky factor has a positive diagonal")
    }
}

/// Preconditioner built from the model's expected negative Hessian at `x_ref`.
pub fn precondition_matrix(model: &dyn StateSpaceModel, x_ref: &State) -> Result<Preconditioner> {
    Preconditioner::from_matrix(model.expected_neg_hessian(x_ref)?)
}
