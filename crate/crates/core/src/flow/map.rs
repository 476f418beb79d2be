use nalgebra::{DMatrix, Dyn, LU};

use crate::error::{Error, Result};
use crate::linalg::{log_abs_det, State};

/// Affine flow `x = C eta_0 + D` with a cached factorisation for inversion.
#[derive(Debug, Clone)]
pub struct FlowMap {
    c: DMatrix<f64>,
    d: State,
    log_abs_det_c: f64,
    lu: LU<f64, Dyn, Dyn>,
}

impl FlowMap {
    /// `log_abs_det_c` is trusted as given; see [`direct_log_abs_det`](Self::direct_log_abs_det).
    pub fn new(c: DMatrix<f64>, d: State, log_abs_det_c: f64) -> Result<Self> {
        if !c.is_square() || c.nrows() != d.len() {
            return Err(Error::DimensionMismatch {
                expected: c.nrows(),
                found: d.len(),
            });
        }
        if !log_abs_det_c.is_finite() {
            return Err(Error::FlowDegenerate { lambda: 1.0 });
        }
        let lu = c.clone().lu();
        Ok(Self {
            c,
            d,
            log_abs_det_c,
            lu,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim), State::zeros(dim), 0.0)
            .expect("identity map is valid")
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn d(&self) -> &State {
        &self.d
    }

    /// Incrementally accumulated `ln |det C|`.
    pub fn log_abs_det(&self) -> f64 {
        self.log_abs_det_c
    }

    /// `ln |det C|` recomputed from the stored factorisation.
    pub fn direct_log_abs_det(&self) -> Option<f64> {
        log_abs_det(&self.c)
    }

    pub fn apply(&self, eta0: &State) -> State {
        &self.c * eta0 + &self.d
    }

    pub fn inverse(&self, x: &State) -> Result<State> {
        self.lu
            .solve(&(x - &self.d))
            .ok_or(Error::FlowDegenerate { lambda: 1.0 })
    }
}
