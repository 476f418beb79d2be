//! Small dense linear-algebra helpers shared by the models, the flow and the kernels.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

pub type State = DVector<f64>;

/// Cholesky factorisation that reports which matrix failed.
pub fn cholesky(m: &DMatrix<f64>, what: &'static str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m.clone()).ok_or(Error::NotPositiveDefinite(what))
}

/// Inverse of a symmetric positive definite matrix, symmetrised.
pub fn spd_inverse(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let inv = cholesky(m, what)?.inverse();
    Ok(symmetrize(&inv))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `ln |det M|` through an LU factorisation. Returns `None` for a singular matrix.
pub fn log_abs_det(m: &DMatrix<f64>) -> Option<f64> {
    let lu = m.clone().lu();
    let u = lu.u();
    let mut acc = 0.0;
    for i in 0..u.nrows() {
        let p = u[(i, i)].abs();
        if p == 0.0 || !p.is_finite() {
            return None;
        }
        acc += p.ln();
    }
    Some(acc)
}

/// `ln(1 - e^a)` for `a <= 0`, accurate near both ends.
pub fn ln_one_minus_exp(a: f64) -> f64 {
    if a >= 0.0 {
        f64::NEG_INFINITY
    } else if a > -std::f64::consts::LN_2 {
        (-a.exp_m1()).ln()
    } else {
        (-a.exp()).ln_1p()
    }
}

pub fn all_finite(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

pub fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Relative Frobenius error `||a - b||_F / ||b||_F`.
pub fn frobenius_rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_one_minus_exp_matches_naive_in_safe_range() {
        for a in [-30.0, -5.0, -1.0, -0.5, -1e-3, -1e-9] {
            let naive = (1.0 - f64::exp(a)).ln();
            let got = ln_one_minus_exp(a);
            assert!((got - naive).abs() <= 1e-6 * naive.abs().max(1.0), "{a}");
        }
        assert_eq!(ln_one_minus_exp(0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn log_abs_det_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -3.0, 0.5]));
        assert!((log_abs_det(&m).unwrap() - 3.0_f64.ln()).abs() < 1e-14);
        let z = DMatrix::<f64>::zeros(2, 2);
        assert!(log_abs_det(&z).is_none());
    }
}
