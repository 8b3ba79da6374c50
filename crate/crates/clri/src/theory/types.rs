//! Domain types for the CLRI model.
//!
//! An agent is described by three rates over its state-to-action mappings:
//! the change rate `c` (probability an incorrect mapping is altered at all in
//! one step), the learning rate `l` (probability an incorrect mapping becomes
//! correct with respect to the old target), and the retention rate `r`
//! (probability a correct mapping stays correct). Always `l <= c`, and with
//! only two actions `c = l`, since the one action that is not wrong must be
//! right. Coupling between agents is captured by an impact matrix: `I[j][i]`
//! is the probability that a change in agent `j`'s decision function moves
//! agent `i`'s target function at a given world state.

use crate::error::{check_probability, Error, Result};

/// Change, learning, and retention rates of one agent's learning algorithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningParams {
    change: f64,
    learn: f64,
    retain: f64,
}

impl LearningParams {
    pub fn new(change: f64, learn: f64, retain: f64) -> Result<Self> {
        check_probability("change rate", change)?;
        check_probability("learning rate", learn)?;
        check_probability("retention rate", retain)?;
        if learn > change {
            return Err(Error::RateOrder { learn, change });
        }
        Ok(LearningParams {
            change,
            learn,
            retain,
        })
    }

    pub fn change_rate(&self) -> f64 {
        self.change
    }

    pub fn learning_rate(&self) -> f64 {
        self.learn
    }

    pub fn retention_rate(&self) -> f64 {
        self.retain
    }
}

/// One agent: its action set size, learning rates, and starting error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentSpec {
    action_count: usize,
    params: LearningParams,
    initial_error: f64,
}

impl AgentSpec {
    pub fn new(action_count: usize, params: LearningParams, initial_error: f64) -> Result<Self> {
        if action_count < 2 {
            return Err(Error::ActionCount(action_count));
        }
        if action_count == 2 && params.change_rate() != params.learning_rate() {
            return Err(Error::BinaryRates {
                change: params.change_rate(),
                learn: params.learning_rate(),
            });
        }
        check_probability("initial error", initial_error)?;
        Ok(AgentSpec {
            action_count,
            params,
            initial_error,
        })
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn params(&self) -> &LearningParams {
        &self.params
    }

    pub fn initial_error(&self) -> f64 {
        self.initial_error
    }
}

/// Pairwise impacts. `get(j, i)` is the probability that a change in agent
/// `j`'s decision function moves agent `i`'s target at one world state.
/// The diagonal is zero: volatility arises only from the other agents.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpactMatrix {
    n: usize,
    values: Vec<f64>,
}

impl ImpactMatrix {
    pub fn zero(n: usize) -> Self {
        ImpactMatrix {
            n,
            values: vec![0.0; n * n],
        }
    }

    /// Builds from rows, `rows[j][i]` being the impact of `j` on `i`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut m = ImpactMatrix::zero(n);
        for (j, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "impact matrix row length",
                    expected: n,
                    actual: row.len(),
                });
            }
            for (i, &v) in row.iter().enumerate() {
                if j == i {
                    if v != 0.0 {
                        return Err(Error::ImpactDiagonal { index: j, value: v });
                    }
                } else {
                    m.set(j, i, v)?;
                }
            }
        }
        Ok(m)
    }

    /// All off-diagonal entries set to `value`.
    pub fn uniform(n: usize, value: f64) -> Result<Self> {
        check_probability("impact", value)?;
        let mut m = ImpactMatrix::zero(n);
        for j in 0..n {
            for i in 0..n {
                if j != i {
                    m.values[j * n + i] = value;
                }
            }
        }
        Ok(m)
    }

    pub fn agent_count(&self) -> usize {
        self.n
    }

    pub fn get(&self, source: usize, target: usize) -> f64 {
        self.values[source * self.n + target]
    }

    pub fn set(&mut self, source: usize, target: usize, value: f64) -> Result<()> {
        check_probability("impact", value)?;
        if source == target && value != 0.0 {
            return Err(Error::ImpactDiagonal {
                index: source,
                value,
            });
        }
        self.values[source * self.n + target] = value;
        Ok(())
    }
}

/// A full system: the agent roster plus their impact coupling.
///
/// `fixed_volatility` pins every agent's volatility to a constant instead of
/// deriving it from the impacts; this models an exogenous target-moving
/// process and is what the single-agent error-progression setting uses.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    agents: Vec<AgentSpec>,
    impacts: ImpactMatrix,
    identical_shortcut: bool,
    fixed_volatility: Option<f64>,
}

impl SystemSpec {
    pub fn new(agents: Vec<AgentSpec>, impacts: ImpactMatrix) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::domain("a system needs at least one agent"));
        }
        if impacts.agent_count() != agents.len() {
            return Err(Error::DimensionMismatch {
                context: "impact matrix size vs agent count",
                expected: agents.len(),
                actual: impacts.agent_count(),
            });
        }
        Ok(SystemSpec {
            agents,
            impacts,
            identical_shortcut: false,
            fixed_volatility: None,
        })
    }

    /// Enables the identical-agents form of the volatility product, which
    /// replaces the product over the other agents with an exponent of N-1.
    /// Requires every agent to share rates and action count and the impact
    /// matrix to be uniform off the diagonal.
    pub fn with_identical_shortcut(mut self) -> Result<Self> {
        let first = &self.agents[0];
        let same_agents = self.agents.iter().all(|a| {
            a.params() == first.params() && a.action_count() == first.action_count()
        });
        let n = self.agents.len();
        let reference = if n > 1 { self.impacts.get(0, 1) } else { 0.0 };
        let uniform = (0..n).all(|j| {
            (0..n).all(|i| j == i || self.impacts.get(j, i) == reference)
        });
        if !same_agents || !uniform {
            return Err(Error::NotIdentical);
        }
        self.identical_shortcut = true;
        Ok(self)
    }

    pub fn with_fixed_volatility(mut self, volatility: f64) -> Result<Self> {
        check_probability("fixed volatility", volatility)?;
        self.fixed_volatility = Some(volatility);
        Ok(self)
    }

    pub fn agents(&self) -> &[AgentSpec] {
        &self.agents
    }

    pub fn agent(&self, index: usize) -> &AgentSpec {
        &self.agents[index]
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn impacts(&self) -> &ImpactMatrix {
        &self.impacts
    }

    pub fn impacts_mut(&mut self) -> &mut ImpactMatrix {
        &mut self.impacts
    }

    pub fn identical_shortcut(&self) -> bool {
        self.identical_shortcut
    }

    pub fn fixed_volatility(&self) -> Option<f64> {
        self.fixed_volatility
    }

    /// Initial error vector taken from the agent specs.
    pub fn initial_state(&self) -> ErrorState {
        ErrorState::new(self.agents.iter().map(|a| a.initial_error()).collect())
            .expect("agent initial errors are validated probabilities")
    }
}

/// Per-agent error vector, each entry in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorState(Vec<f64>);

impl ErrorState {
    pub fn new(errors: Vec<f64>) -> Result<Self> {
        for &e in &errors {
            check_probability("error", e)?;
        }
        Ok(ErrorState(errors))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, agent: usize) -> f64 {
        self.0[agent]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Max-norm distance to another state of the same dimension.
    pub fn max_distance(&self, other: &ErrorState) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// The conditional probabilities a general one-step error recurrence needs.
///
/// `target_same_given_correct` and `target_same_given_incorrect` are the
/// probabilities that the target mapping survives the step, conditioned on
/// whether the agent's mapping was correct. The three residual-miss terms
/// cover the cases where the target moved:
///
/// * `miss_correct_changed`: the agent was correct and changed its mapping;
///   probability the new mapping still misses the moved target.
/// * `miss_incorrect_kept`: the agent was incorrect and kept its mapping;
///   probability the old mapping misses the moved target.
/// * `miss_incorrect_changed`: the agent was incorrect and changed to some
///   other wrong action; probability that action misses the moved target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingModel {
    pub target_same_given_correct: f64,
    pub target_same_given_incorrect: f64,
    pub miss_correct_changed: f64,
    pub miss_incorrect_kept: f64,
    pub miss_incorrect_changed: f64,
}

impl CouplingModel {
    pub fn new(
        target_same_given_correct: f64,
        target_same_given_incorrect: f64,
        miss_correct_changed: f64,
        miss_incorrect_kept: f64,
        miss_incorrect_changed: f64,
    ) -> Result<Self> {
        check_probability("target_same_given_correct", target_same_given_correct)?;
        check_probability("target_same_given_incorrect", target_same_given_incorrect)?;
        check_probability("miss_correct_changed", miss_correct_changed)?;
        check_probability("miss_incorrect_kept", miss_incorrect_kept)?;
        check_probability("miss_incorrect_changed", miss_incorrect_changed)?;
        Ok(CouplingModel {
            target_same_given_correct,
            target_same_given_incorrect,
            miss_correct_changed,
            miss_incorrect_kept,
            miss_incorrect_changed,
        })
    }

    /// Coupling for a loosely coupled system: the target moves with a fixed
    /// probability `volatility` independently of the agent's correctness, and
    /// new actions come from flat distributions.
    ///
    /// The residual-miss value for the incorrect-and-rewired case is the one
    /// consistent with the simplified linear step (so that the general
    /// recurrence specializes to it identically). With two actions that term
    /// is annihilated because `c = l`, and it is pinned to zero.
    pub fn flat_independent(volatility: f64, action_count: usize) -> Result<Self> {
        check_probability("volatility", volatility)?;
        if action_count < 2 {
            return Err(Error::ActionCount(action_count));
        }
        let a = action_count as f64;
        let keep = 1.0 - volatility;
        let miss_changed = if action_count == 2 {
            0.0
        } else {
            (a - 3.0) / (a - 1.0)
        };
        CouplingModel::new(
            keep,
            keep,
            (a - 2.0) / (a - 1.0),
            (a - 2.0) / (a - 1.0),
            miss_changed,
        )
    }

    /// Coupling for the matching game, where agent `i`'s target is literally
    /// the opponent's decision function. Derived from the opponent's rates:
    /// given `i` was correct the opponent was correct too, so the target
    /// survives with probability `r_j`; given `i` was incorrect it survives
    /// with probability `1 - c_j`. The residual-miss terms condition on the
    /// opponent having actually changed, hence the `l_j / c_j` ratio.
    pub fn matching(opponent: &LearningParams, action_count: usize) -> Result<Self> {
        if action_count < 2 {
            return Err(Error::ActionCount(action_count));
        }
        let a = action_count as f64;
        let c_j = opponent.change_rate();
        let l_j = opponent.learning_rate();
        let (miss_kept, miss_changed) = if c_j == 0.0 {
            // The incorrect-target-moved branch has weight c_j = 0.
            (1.0, 0.0)
        } else {
            let learned = l_j / c_j;
            let kept = 1.0 - learned;
            let changed = if action_count == 2 {
                0.0
            } else {
                1.0 - (1.0 - learned) / (a - 2.0)
            };
            (kept, changed)
        };
        CouplingModel::new(
            opponent.retention_rate(),
            1.0 - c_j,
            (a - 2.0) / (a - 1.0),
            miss_kept,
            miss_changed,
        )
    }
}

/// Outcome classification for fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedPointKind {
    Converged,
    Oscillating,
    DivergedToBoundary,
}

impl FixedPointKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FixedPointKind::Converged => "converged",
            FixedPointKind::Oscillating => "oscillating",
            FixedPointKind::DivergedToBoundary => "diverged-to-boundary",
        }
    }
}

/// Result of iterating the coupled step to a fixed point.
///
/// `state` is the converged state, or one pole of the 2-cycle when
/// oscillating (`alternate` holds the other), or the last state visited when
/// the iteration budget ran out.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointResult {
    pub kind: FixedPointKind,
    pub state: ErrorState,
    pub alternate: Option<ErrorState>,
    pub iterations: usize,
}

/// Synchronous time series of error states. `clamped` reports whether any
/// step left [0, 1] before being clamped back.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<ErrorState>,
    pub clamped: bool,
}

impl Trajectory {
    pub fn last(&self) -> &ErrorState {
        self.states.last().expect("trajectory holds the initial state")
    }
}
