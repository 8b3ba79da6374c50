//! One-step error recurrences and the volatility calculus.
//!
//! The core object is a difference equation for an agent's expected error,
//! `E[e'] = m(v) * e + b(v)`, affine in the current error `e` for a given
//! volatility `v`. Volatility itself is induced by the other agents: the
//! probability that some other agent's decision change moves this agent's
//! target.

use crate::error::{check_probability, Error, Result};
use crate::theory::types::{AgentSpec, CouplingModel, ErrorState, SystemSpec};

/// Probability that an agent rewrites a given mapping in one step:
/// `c * e + (1 - r) * (1 - e)`. Incorrect mappings change at the change
/// rate, correct ones at the retention-failure rate.
pub fn expected_change_prob(params: &crate::theory::LearningParams, error: f64) -> Result<f64> {
    check_probability("error", error)?;
    Ok(params.change_rate() * error + (1.0 - params.retention_rate()) * (1.0 - error))
}

/// Expected volatility of `agent_index`: the probability that at least one
/// other agent's decision change moves its target,
/// `1 - prod_j (1 - I[j][i] * change_prob_j)`.
///
/// With the identical-agents shortcut the product collapses to an exponent
/// of N-1. A fixed system volatility, when configured, overrides both.
pub fn expected_volatility(
    spec: &SystemSpec,
    state: &ErrorState,
    agent_index: usize,
) -> Result<f64> {
    if state.len() != spec.agent_count() {
        return Err(Error::DimensionMismatch {
            context: "error state vs agent count",
            expected: spec.agent_count(),
            actual: state.len(),
        });
    }
    if agent_index >= spec.agent_count() {
        return Err(Error::DimensionMismatch {
            context: "agent index out of range",
            expected: spec.agent_count(),
            actual: agent_index,
        });
    }
    if let Some(v) = spec.fixed_volatility() {
        return Ok(v);
    }
    if spec.identical_shortcut() {
        let n = spec.agent_count();
        if n == 1 {
            return Ok(0.0);
        }
        let other = (agent_index + 1) % n;
        let impact = spec.impacts().get(other, agent_index);
        let change = expected_change_prob(spec.agent(other).params(), state.get(other))?;
        return Ok(1.0 - (1.0 - impact * change).powi(n as i32 - 1));
    }
    let mut survive = 1.0;
    for j in 0..spec.agent_count() {
        if j == agent_index {
            continue;
        }
        let change = expected_change_prob(spec.agent(j).params(), state.get(j))?;
        survive *= 1.0 - spec.impacts().get(j, agent_index) * change;
    }
    Ok(1.0 - survive)
}

/// A line `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub slope: f64,
    pub intercept: f64,
}

impl Line {
    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Splits the simplified step into its two forces: the learning line
/// (volatility-free terms, pulling the error down) and the volatility line
/// (all terms proportional to `v`). They sum to the full step line.
pub fn decompose(agent: &AgentSpec, volatility: f64) -> Result<(Line, Line)> {
    check_probability("volatility", volatility)?;
    let a = agent.action_count() as f64;
    let c = agent.params().change_rate();
    let l = agent.params().learning_rate();
    let r = agent.params().retention_rate();
    let learning = Line {
        slope: r - l,
        intercept: 1.0 - r,
    };
    let volatility_line = Line {
        slope: volatility * (a * (l - r) + l - c) / (a - 1.0),
        intercept: volatility * (a * r - 1.0) / (a - 1.0),
    };
    Ok((learning, volatility_line))
}

/// Full step line (learning plus volatility components), unclamped.
pub fn step_line(agent: &AgentSpec, volatility: f64) -> Result<Line> {
    let (learning, vol) = decompose(agent, volatility)?;
    Ok(Line {
        slope: learning.slope + vol.slope,
        intercept: learning.intercept + vol.intercept,
    })
}

/// Simplified one-step expected error under a known volatility:
///
/// `e' = 1 - r + v*(|A|r - 1)/(|A| - 1) + e*(r - l + v*(|A|(l - r) + l - c)/(|A| - 1))`
///
/// valid for loosely coupled systems where target movement is independent of
/// the agent's own correctness and new actions are drawn flat. The result is
/// clamped to [0, 1]; extreme parameter combinations can push the raw line
/// outside the unit interval.
pub fn step_simplified(agent: &AgentSpec, error: f64, volatility: f64) -> Result<f64> {
    check_probability("error", error)?;
    let line = step_line(agent, volatility)?;
    Ok(line.eval(error).clamp(0.0, 1.0))
}

/// General four-case one-step recurrence with explicit coupling:
///
/// * target kept, agent correct: misses only on retention failure;
/// * target kept, agent incorrect: misses unless it learned;
/// * target moved, agent correct: retained mappings are now wrong, changed
///   ones miss with the residual probability;
/// * target moved, agent incorrect: kept, learned-the-old-target, and
///   rewired-wrong branches weighted by their residual misses (a mapping
///   that learned the old target is wrong for sure against a moved target).
pub fn step_general(agent: &AgentSpec, error: f64, coupling: &CouplingModel) -> Result<f64> {
    check_probability("error", error)?;
    let c = agent.params().change_rate();
    let l = agent.params().learning_rate();
    let r = agent.params().retention_rate();
    let correct = 1.0 - error;
    let kept_correct = coupling.target_same_given_correct * correct * (1.0 - r);
    let kept_incorrect = coupling.target_same_given_incorrect * error * (1.0 - l);
    let moved_correct = (1.0 - coupling.target_same_given_correct)
        * correct
        * (r + (1.0 - r) * coupling.miss_correct_changed);
    let moved_incorrect = (1.0 - coupling.target_same_given_incorrect)
        * error
        * ((1.0 - c) * coupling.miss_incorrect_kept
            + l
            + (c - l) * coupling.miss_incorrect_changed);
    Ok((kept_correct + kept_incorrect + moved_correct + moved_incorrect).clamp(0.0, 1.0))
}

/// One-step expected error for agent `i` in the matching game, where each
/// agent's target is the other's decision function. `p_correct` is the
/// probability that `i`'s mapping currently matches, i.e. `1 - e`.
///
/// Correctness is perfectly correlated across the two agents (both match or
/// neither does), so this does not reduce to the simplified step. The four
/// cases, from the opponent's behavior:
///
/// * opponent keeps a correct mapping (prob `r_j`): `i` misses only if it
///   changes, `1 - r_i`;
/// * opponent keeps an incorrect mapping (prob `1 - c_j`): `i` misses unless
///   it learned, `1 - l_i`;
/// * opponent breaks a correct mapping (prob `1 - r_j`): `i` misses if it
///   retains, or with the flat residual if it changed;
/// * opponent changes an incorrect mapping (prob `c_j`): if the opponent
///   learned (prob `l_j` of the joint), `i`'s stale or rewired mapping
///   misses unless `i` kept still; if the opponent rewired elsewhere, only
///   `i`'s own rewire can hit, with chance `1/(|A| - 2)`.
pub fn step_matching(agent_i: &AgentSpec, agent_j: &AgentSpec, p_correct: f64) -> Result<f64> {
    if agent_i.action_count() != agent_j.action_count() {
        return Err(Error::DimensionMismatch {
            context: "matching agents' action counts",
            expected: agent_i.action_count(),
            actual: agent_j.action_count(),
        });
    }
    check_probability("p_correct", p_correct)?;
    let a = agent_i.action_count() as f64;
    let c_i = agent_i.params().change_rate();
    let l_i = agent_i.params().learning_rate();
    let r_i = agent_i.params().retention_rate();
    let c_j = agent_j.params().change_rate();
    let l_j = agent_j.params().learning_rate();
    let r_j = agent_j.params().retention_rate();
    let e = 1.0 - p_correct;

    let miss_both_rewired = if agent_i.action_count() == 2 {
        0.0 // weight c_i - l_i vanishes for binary agents
    } else {
        (a - 3.0) / (a - 2.0)
    };
    let kept_correct = r_j * p_correct * (1.0 - r_i);
    let kept_incorrect = (1.0 - c_j) * e * (1.0 - l_i);
    let moved_correct =
        (1.0 - r_j) * p_correct * (r_i + (1.0 - r_i) * (a - 2.0) / (a - 1.0));
    let opponent_learned = l_j * c_i;
    let opponent_rewired =
        (c_j - l_j) * ((1.0 - c_i) + l_i + (c_i - l_i) * miss_both_rewired);
    let moved_incorrect = e * (opponent_learned + opponent_rewired);

    Ok((kept_correct + kept_incorrect + moved_correct + moved_incorrect).clamp(0.0, 1.0))
}
