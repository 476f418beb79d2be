use crate::error::{Error, Result};

/// Pseudo-time grid `0 = lambda_0 < lambda_1 < ... < lambda_N = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSchedule {
    lambdas: Vec<f64>,
    eps: Vec<f64>,
}

impl LambdaSchedule {
    /// Step sizes grow geometrically, `eps_{m+1} = ratio * eps_m`, normalised to sum to one.
    pub fn geometric(n: usize, ratio: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("filter.n_lambda", "must be at least 1"));
        }
        if !(ratio > 0.0) || !ratio.is_finite() {
            return Err(Error::config(
                "filter.lambda_ratio",
                "must be positive and finite",
            ));
        }
        let raw: Vec<f64> = (0..n).map(|m| ratio.powi(m as i32)).collect();
        let total: f64 = raw.iter().sum();
        let eps: Vec<f64> = raw.iter().map(|r| r / total).collect();
        let mut lambdas = Vec::with_capacity(n);
        let mut acc = 0.0;
        for e in &eps {
            acc += e;
            lambdas.push(acc);
        }
        lambdas[n - 1] = 1.0;
        Ok(Self { lambdas, eps })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::geometric(n, 1.0)
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    /// `(lambda_m, eps_m)` pairs in order.
    pub fn steps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.lambdas.iter().copied().zip(self.eps.iter().copied())
    }

    pub fn step_sizes(&self) -> &[f64] {
        &self.eps
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step() {
        let s = LambdaSchedule::geometric(1, 3.0).unwrap();
        assert_eq!(s.step_sizes(), &[1.0]);
        assert_eq!(s.lambdas(), &[1.0]);
    }

    #[test]
    fn uniform_split() {
        let s = LambdaSchedule::geometric(2, 1.0).unwrap();
        assert_eq!(s.step_sizes(), &[0.5, 0.5]);
    }

    #[test]
    fn doubling_steps() {
        let s = LambdaSchedule::geometric(3, 2.0).unwrap();
        let want = [1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0];
        for (a, b) in s.step_sizes().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(LambdaSchedule::geometric(0, 1.2).is_err());
        assert!(LambdaSchedule::geometric(5, 0.0).is_err());
    }
}
