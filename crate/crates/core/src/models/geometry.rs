use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Sensors on the `{1..s} x {1..s}` lattice, `d = s^2`, in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridGeometry {
    side: usize,
    coords: Vec<[f64; 2]>,
}

impl GridGeometry {
    pub fn square(d: usize) -> Result<Self> {
        let side = (d as f64).sqrt().round() as usize;
        if d == 0 || side * side != d {
            return Err(Error::InvalidGeometry(format!(
                "state dimension {d} is not a positive perfect square"
            )));
        }
        let coords = (0..d)
            .map(|k| [(k / side + 1) as f64, (k % side + 1) as f64])
            .collect();
        Ok(Self { side, coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }
}

/// Parameters of the squared-exponential dispersion kernel plus nugget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionParams {
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta: f64,
}

impl DispersionParams {
    /// `alpha0 >= 0`, `alpha1 >= 0`, `beta > 0`. A zero amplitude leaves `alpha1 I`.
    pub fn new(alpha0: f64, alpha1: f64, beta: f64) -> Result<Self> {
        if !(alpha0 >= 0.0) || !(alpha1 >= 0.0) || !(beta > 0.0) {
            return Err(Error::InvalidModel(format!(
                "dispersion parameters out of range: alpha0={alpha0}, alpha1={alpha1}, beta={beta}"
            )));
        }
        Ok(Self {
            alpha0,
            alpha1,
            beta,
        })
    }

    /// `alpha0 = 3, alpha1 = 0.01, beta = 20`.
    pub fn benchmark() -> Self {
        Self {
            alpha0: 3.0,
            alpha1: 0.01,
            beta: 20.0,
        }
    }
}

/// `[S]_ij = alpha0 exp(-||s_i - s_j||^2 / beta) + alpha1 delta_ij`.
///
/// Only the upper triangle is evaluated and mirrored, so the result is exactly symmetric.
pub fn build_spatial_covariance(geom: &GridGeometry, params: &DispersionParams) -> DMatrix<f64> {
    let d = geom.dim();
    let c = geom.coords();
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let dx = c[i][0] - c[j][0];
            let dy = c[i][1] - c[j][1];
            let mut v = params.alpha0 * (-(dx * dx + dy * dy) / params.beta).exp();
            if i == j {
                v += params.alpha1;
            }
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_square_dimension() {
        assert!(matches!(
            GridGeometry::square(10),
            Err(Error::InvalidGeometry(_))
        ));
        assert!(GridGeometry::square(0).is_err());
        assert_eq!(GridGeometry::square(16).unwrap().side(), 4);
    }

    #[test]
    fn coordinates_are_distinct_lattice_points() {
        let g = GridGeometry::square(9).unwrap();
        assert_eq!(g.coords()[0], [1.0, 1.0]);
        assert_eq!(g.coords()[8], [3.0, 3.0]);
        for i in 0..9 {
            for j in 0..i {
                assert_ne!(g.coords()[i], g.coords()[j]);
            }
        }
    }

    #[test]
    fn diagonal_and_neighbour_entries() {
        let g = GridGeometry::square(4).unwrap();
        let s = build_spatial_covariance(&g, &DispersionParams::benchmark());
        assert!((s[(0, 0)] - 3.01).abs() < 1e-15);
        // (1,1) and (1,2) are one unit apart.
        assert!((s[(0, 1)] - 3.0 * (-1.0_f64 / 20.0).exp()).abs() < 1e-15);
        assert!((s[(0, 1)] - 2.853_688_273_502_142).abs() < 1e-12);
        assert_eq!(s, s.transpose());
    }

    #[test]
    fn zero_amplitude_leaves_nugget() {
        let g = GridGeometry::square(9).unwrap();
        let s = build_spatial_covariance(&g, &DispersionParams::new(0.0, 0.5, 20.0).unwrap());
        assert_eq!(s, DMatrix::identity(9, 9) * 0.5);
    }
}
