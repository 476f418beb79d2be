use rand::RngCore;

use super::{Observation, StateSpaceModel};
use crate::error::{Error, Result};
use crate::linalg::State;

/// States `x_{1:T}` and observations `y_{1:T}` of one generative rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub observations: Vec<Observation>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Roll the model forward `steps` times from its known initial state.
pub fn simulate_trajectory(
    model: &dyn StateSpaceModel,
    steps: usize,
    rng: &mut dyn RngCore,
) -> Result<Trajectory> {
    if steps == 0 {
        return Err(Error::Domain("trajectory length must be at least 1".into()));
    }
    let mut states = Vec::with_capacity(steps);
    let mut observations = Vec::with_capacity(steps);
    let mut x = model.initial_state();
    for _ in 0..steps {
        x = model.transition_sample(&x, rng);
        observations.push(model.observation_sample(&x, rng));
        states.push(x.clone());
    }
    Ok(Trajectory {
        states,
        observations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{DispersionParams, LinearGaussianModel};
    use crate::rng::seeded;

    #[test]
    fn zero_steps_is_an_error() {
        let m =
            LinearGaussianModel::sensor_grid(4, 0.9, 1.0, &DispersionParams::benchmark()).unwrap();
        assert!(simulate_trajectory(&m, 0, &mut seeded(0)).is_err());
    }

    #[test]
    fn same_seed_same_trajectory() {
        let m =
            LinearGaussianModel::sensor_grid(4, 0.9, 1.0, &DispersionParams::benchmark()).unwrap();
        let a = simulate_trajectory(&m, 5, &mut seeded(42)).unwrap();
        let b = simulate_trajectory(&m, 5, &mut seeded(42)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
    }
}
