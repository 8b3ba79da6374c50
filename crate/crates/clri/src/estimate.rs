//! Recovering CLRI parameters from simulation traces.
//!
//! The rates are conditional frequencies over (world, step) pairs:
//! the change rate conditions on incorrect mappings, the learning rate on
//! incorrect mappings becoming correct with respect to the step's *old*
//! target, the retention rate on correct mappings staying correct, and the
//! impact on the influencing agent having changed that mapping.

use crate::error::{Error, Result};
use crate::sim::Trace;

/// 95% confidence z-score used for the Wilson intervals.
const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for a binomial proportion. Preferred over the
/// normal approximation because conditioning sets can be small.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilsonInterval {
    pub lower: f64,
    pub upper: f64,
}

pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> WilsonInterval {
    assert!(trials > 0, "interval undefined without trials");
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    WilsonInterval {
        lower: (center - half).max(0.0),
        upper: (center + half).min(1.0),
    }
}

/// One estimated proportion with its conditioning-set size. `value` is
/// `None` when the conditioning set was empty, leaving the quantity
/// undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub successes: u64,
    pub trials: u64,
    pub value: Option<f64>,
    pub interval: Option<WilsonInterval>,
}

impl RateEstimate {
    fn from_counts(successes: u64, trials: u64) -> Self {
        if trials == 0 {
            RateEstimate {
                successes,
                trials,
                value: None,
                interval: None,
            }
        } else {
            RateEstimate {
                successes,
                trials,
                value: Some(successes as f64 / trials as f64),
                interval: Some(wilson_interval(successes, trials, Z95)),
            }
        }
    }

    /// Whether the interval contains `truth` (false when undefined).
    pub fn covers(&self, truth: f64) -> bool {
        self.interval
            .map(|iv| iv.lower <= truth && truth <= iv.upper)
            .unwrap_or(false)
    }
}

/// Estimated change, learning, and retention rates for one agent.
///
/// Learning events are change events by definition, so `learn <= change`
/// holds by construction; `ordering_violated` is kept as a tripwire.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimates {
    pub change: RateEstimate,
    pub learn: RateEstimate,
    pub retain: RateEstimate,
    pub ordering_violated: bool,
}

/// Conditional-frequency rate estimates for `agent_index` over all
/// (world, step) pairs of the trace.
pub fn estimate_rates(trace: &Trace, agent_index: usize) -> Result<RateEstimates> {
    if agent_index >= trace.agent_count {
        return Err(Error::DimensionMismatch {
            context: "agent index out of range",
            expected: trace.agent_count,
            actual: agent_index,
        });
    }
    let (mut incorrect, mut changed, mut learned) = (0u64, 0u64, 0u64);
    let (mut correct, mut retained) = (0u64, 0u64);
    for transition in &trace.transitions {
        for f in &transition.flags[agent_index] {
            if f.was_correct {
                correct += 1;
                retained += f.correct_after as u64;
            } else {
                incorrect += 1;
                changed += f.decision_changed as u64;
                learned += f.correct_after as u64;
            }
        }
    }
    let change = RateEstimate::from_counts(changed, incorrect);
    let learn = RateEstimate::from_counts(learned, incorrect);
    let retain = RateEstimate::from_counts(retained, correct);
    let ordering_violated = match (learn.value, change.value) {
        (Some(l), Some(c)) => l > c,
        _ => false,
    };
    Ok(RateEstimates {
        change,
        learn,
        retain,
        ordering_violated,
    })
}

/// Empirical impact of `from_agent` on `to_agent`: the frequency of
/// `to_agent`'s target moving at a world where `from_agent` changed its
/// mapping. With more than one influencing agent the frequency includes
/// coincidental moves triggered by third parties.
pub fn estimate_impact(trace: &Trace, from_agent: usize, to_agent: usize) -> Result<RateEstimate> {
    if from_agent >= trace.agent_count || to_agent >= trace.agent_count {
        return Err(Error::DimensionMismatch {
            context: "agent index out of range",
            expected: trace.agent_count,
            actual: from_agent.max(to_agent),
        });
    }
    if from_agent == to_agent {
        return Err(Error::domain("impact is defined between distinct agents"));
    }
    let (mut trials, mut moved) = (0u64, 0u64);
    for transition in &trace.transitions {
        let source = &transition.flags[from_agent];
        let affected = &transition.flags[to_agent];
        for (f_src, f_dst) in source.iter().zip(affected) {
            if f_src.decision_changed {
                trials += 1;
                moved += f_dst.target_changed as u64;
            }
        }
    }
    Ok(RateEstimate::from_counts(moved, trials))
}
