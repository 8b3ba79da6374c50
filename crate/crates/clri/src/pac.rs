//! PAC-style bounds connecting sample complexity to the learning rate of a
//! consistent learner (one that never unlearns, r = 1) chasing a fixed
//! target.

use crate::error::{check_probability, Error, Result};

/// A PAC learning problem: hypothesis-space size, accuracy `epsilon`,
/// confidence parameter `gamma`, and the learner's starting error.
///
/// The hypothesis count is held in log space so that action-space helpers
/// like `|A|^|W|` do not overflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacProblem {
    ln_hypothesis_count: f64,
    epsilon: f64,
    gamma: f64,
    initial_error: f64,
}

impl PacProblem {
    pub fn new(hypothesis_count: u64, epsilon: f64, gamma: f64, initial_error: f64) -> Result<Self> {
        if hypothesis_count == 0 {
            return Err(Error::domain("hypothesis count must be at least 1"));
        }
        Self::from_ln_hypotheses((hypothesis_count as f64).ln(), epsilon, gamma, initial_error)
    }

    /// Hypothesis space of an agent with no prior knowledge: every mapping
    /// from `world_count` states to `action_count` actions.
    pub fn from_action_space(
        action_count: usize,
        world_count: usize,
        epsilon: f64,
        gamma: f64,
        initial_error: f64,
    ) -> Result<Self> {
        if action_count < 2 {
            return Err(Error::ActionCount(action_count));
        }
        if world_count == 0 {
            return Err(Error::domain("world count must be at least 1"));
        }
        let ln_h = world_count as f64 * (action_count as f64).ln();
        Self::from_ln_hypotheses(ln_h, epsilon, gamma, initial_error)
    }

    fn from_ln_hypotheses(
        ln_hypothesis_count: f64,
        epsilon: f64,
        gamma: f64,
        initial_error: f64,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::domain(format!("gamma must lie in (0, 1), got {gamma}")));
        }
        check_probability("initial error", initial_error)?;
        Ok(PacProblem {
            ln_hypothesis_count,
            epsilon,
            gamma,
            initial_error,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn initial_error(&self) -> f64 {
        self.initial_error
    }

    /// The learning-rate bound assumes gamma is small enough to ignore;
    /// callers should surface a warning when it is not.
    pub fn gamma_is_large(&self) -> bool {
        self.gamma > 0.1
    }
}

/// Smallest integer number of examples `m >= (1/epsilon) * ln(|H| / gamma)`
/// after which a consistent learner is probably approximately correct.
pub fn sample_complexity(problem: &PacProblem) -> u64 {
    let bound = (problem.ln_hypothesis_count - problem.gamma.ln()) / problem.epsilon;
    bound.ceil().max(0.0) as u64
}

/// Expected error of a consistent learner (r = 1) against a fixed target
/// after `n` steps: `e0 * (1 - l)^n`.
pub fn fixed_target_error(initial_error: f64, learning_rate: f64, steps: u64) -> Result<f64> {
    check_probability("initial error", initial_error)?;
    check_probability("learning rate", learning_rate)?;
    Ok(initial_error * (1.0 - learning_rate).powf(steps as f64))
}

/// Lower bound on the learning rate a consistent learner needs so that `m`
/// steps shrink the error from `e0` to at most `epsilon`:
/// `l >= 1 - (epsilon / e0)^(1/m)`.
///
/// Returns 0 when `epsilon >= e0` (the target error already holds). The
/// bound is undefined at `e0 = 0`: such an agent keeps error 0 regardless
/// of its learning rate, so no rate can be inferred.
pub fn learning_rate_lower_bound(initial_error: f64, epsilon: f64, samples: u64) -> Result<f64> {
    check_probability("initial error", initial_error)?;
    if initial_error == 0.0 {
        return Err(Error::domain(
            "learning-rate bound undefined for initial error 0: the error stays 0 for any rate",
        ));
    }
    if !(epsilon > 0.0) {
        return Err(Error::domain(format!("epsilon must be positive, got {epsilon}")));
    }
    if samples == 0 {
        return Err(Error::domain("sample count must be at least 1"));
    }
    if epsilon >= initial_error {
        return Ok(0.0);
    }
    Ok(1.0 - (epsilon / initial_error).powf(1.0 / samples as f64))
}
