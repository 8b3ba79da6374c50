//! Agent-based Monte Carlo simulator.
//!
//! This is the mechanism-level counterpart of the `theory` module: agents
//! hold explicit world-to-action decision tables and mutate them per step
//! according to their change/learning/retention rates, while target tables
//! move through impact coupling (or game structure). Runs are deterministic
//! functions of their seed, and per-run seeds derive from a master seed by a
//! counter-based scheme, so batches can execute in parallel without
//! affecting results.

mod coordination;
mod market;
mod matching;
mod synthetic;
mod trace;

pub use coordination::{coordination_success_rate, run_coordination};
pub use market::{run_market, MarketConfig};
pub use matching::run_matching;
pub use synthetic::run_synthetic;
pub use trace::{StepObservation, Trace, Transition, WorldFlags};

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::theory::{LearningParams, SystemSpec};

/// Finite world-state space with a fixed sampling distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldModel {
    distribution: Vec<f64>,
}

impl WorldModel {
    pub fn uniform(world_count: usize) -> Result<Self> {
        if world_count == 0 {
            return Err(Error::domain("world count must be at least 1"));
        }
        Ok(WorldModel {
            distribution: vec![1.0 / world_count as f64; world_count],
        })
    }

    pub fn new(distribution: Vec<f64>) -> Result<Self> {
        if distribution.is_empty() {
            return Err(Error::domain("world count must be at least 1"));
        }
        let mut total = 0.0;
        for &p in &distribution {
            if !(p >= 0.0) {
                return Err(Error::domain(format!(
                    "world probabilities must be non-negative, got {p}"
                )));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!(
                "world probabilities must sum to 1 (within 1e-12), got {total}"
            )));
        }
        Ok(WorldModel { distribution })
    }

    pub fn world_count(&self) -> usize {
        self.distribution.len()
    }

    pub fn probability(&self, world: usize) -> f64 {
        self.distribution[world]
    }

    pub fn sample(&self, rng: &mut ChaCha12Rng) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (w, &p) in self.distribution.iter().enumerate() {
            acc += p;
            if u < acc {
                return w;
            }
        }
        self.distribution.len() - 1
    }
}

/// A world-to-action mapping (used for both decision and target tables).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionTable {
    actions: Vec<usize>,
}

impl DecisionTable {
    pub fn random(world_count: usize, action_count: usize, rng: &mut ChaCha12Rng) -> Self {
        DecisionTable {
            actions: (0..world_count)
                .map(|_| rng.random_range(0..action_count))
                .collect(),
        }
    }

    pub fn get(&self, world: usize) -> usize {
        self.actions[world]
    }

    pub fn set(&mut self, world: usize, action: usize) {
        self.actions[world] = action;
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.actions
    }
}

/// Error of a decision table against a target under the world distribution;
/// this is the exact bookkeeping the trace records.
pub(crate) fn table_error(decision: &DecisionTable, target: &DecisionTable, world: &WorldModel) -> f64 {
    decision
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .enumerate()
        .filter(|(_, (d, t))| d != t)
        .map(|(w, _)| world.probability(w))
        .sum()
}

/// Uniform draw from `0..count` excluding `skip`.
pub(crate) fn draw_excluding_one(rng: &mut ChaCha12Rng, count: usize, skip: usize) -> usize {
    let x = rng.random_range(0..count - 1);
    if x >= skip {
        x + 1
    } else {
        x
    }
}

/// Uniform draw from `0..count` excluding the two distinct values `a`, `b`.
pub(crate) fn draw_excluding_two(rng: &mut ChaCha12Rng, count: usize, a: usize, b: usize) -> usize {
    debug_assert!(a != b && count >= 3);
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let mut x = rng.random_range(0..count - 2);
    if x >= lo {
        x += 1;
    }
    if x >= hi {
        x += 1;
    }
    x
}

/// One learning pass over every world of one agent's decision table, against
/// a frozen target. An incorrect mapping learns with probability `l`, or is
/// rewired to a uniformly random other wrong action with probability
/// `c - l`; a correct mapping breaks to a uniformly random other action with
/// probability `1 - r`. Returns per-world (was_correct, changed,
/// correct_after) flags, all relative to the frozen target.
pub(crate) fn mutate_toward_target(
    rng: &mut ChaCha12Rng,
    decision: &mut DecisionTable,
    target: &DecisionTable,
    params: &LearningParams,
    action_count: usize,
) -> Vec<(bool, bool, bool)> {
    let c = params.change_rate();
    let l = params.learning_rate();
    let r = params.retention_rate();
    (0..decision.as_slice().len())
        .map(|w| {
            let old = decision.get(w);
            let goal = target.get(w);
            let was_correct = old == goal;
            if was_correct {
                if rng.random::<f64>() >= r {
                    decision.set(w, draw_excluding_one(rng, action_count, old));
                }
            } else {
                let u: f64 = rng.random::<f64>();
                if u < l {
                    decision.set(w, goal);
                } else if u < c {
                    // Change to another wrong action. Unreachable for
                    // two-action agents, where c = l.
                    decision.set(w, draw_excluding_two(rng, action_count, old, goal));
                }
            }
            let now = decision.get(w);
            (was_correct, now != old, now == goal)
        })
        .collect()
}

/// Per-run seed derivation: a SplitMix64 step of the master seed offset by
/// the run counter. Runs are reproducible individually and in any order.
pub fn derive_run_seed(master_seed: u64, run_index: u64) -> u64 {
    let mut z = master_seed
        .wrapping_add(run_index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A fully specified stochastic experiment, runnable from a seed.
#[derive(Debug, Clone, PartialEq)]
pub enum GameDef {
    /// Rate-driven agents with impact-coupled (or fixed-volatility) targets.
    Synthetic {
        spec: SystemSpec,
        world: WorldModel,
        steps: usize,
    },
    /// Two agents whose targets are each other's decision tables.
    Matching {
        params_i: LearningParams,
        params_j: LearningParams,
        action_count: usize,
        world: WorldModel,
        steps: usize,
    },
    /// Population convention game under a cumulative-reward update rule.
    Coordination {
        agent_count: usize,
        update_delay: usize,
        steps: usize,
    },
    /// Two reinforcement-learning sellers posting prices for one buyer.
    Market { config: MarketConfig, steps: usize },
}

impl GameDef {
    pub fn run(&self, seed: u64) -> Result<Trace> {
        match self {
            GameDef::Synthetic { spec, world, steps } => run_synthetic(spec, world, seed, *steps),
            GameDef::Matching {
                params_i,
                params_j,
                action_count,
                world,
                steps,
            } => run_matching(params_i, params_j, *action_count, world, seed, *steps),
            GameDef::Coordination {
                agent_count,
                update_delay,
                steps,
            } => run_coordination(*agent_count, *update_delay, seed, *steps).map(|(t, _)| t),
            GameDef::Market { config, steps } => run_market(config, seed, *steps),
        }
    }

    pub fn steps(&self) -> usize {
        match self {
            GameDef::Synthetic { steps, .. }
            | GameDef::Matching { steps, .. }
            | GameDef::Coordination { steps, .. }
            | GameDef::Market { steps, .. } => *steps,
        }
    }
}

/// Per-step mean and standard error of the per-agent error over a batch of
/// independent runs.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloResult {
    pub runs: usize,
    /// `mean[t][agent]`, t running over 0..=steps.
    pub mean: Vec<Vec<f64>>,
    /// `stderr[t][agent]`; zero when `runs == 1`.
    pub stderr: Vec<Vec<f64>>,
}

/// Runs `game``n_runs` times with derived per-run seeds and aggregates the
/// error curves. Runs execute in parallel; the reduction happens in run
/// order, so results are bitwise independent of scheduling.
pub fn monte_carlo(game: &GameDef, n_runs: usize, master_seed: u64) -> Result<MonteCarloResult> {
    if n_runs == 0 {
        return Err(Error::domain("run count must be at least 1"));
    }
    let per_run: Vec<Vec<Vec<f64>>> = (0..n_runs as u64)
        .into_par_iter()
        .map(|k| {
            let trace = game.run(derive_run_seed(master_seed, k))?;
            Ok(trace.errors)
        })
        .collect::<Result<_>>()?;

    let rows = per_run[0].len();
    let agents = per_run[0][0].len();
    let mut sum = vec![vec![0.0; agents]; rows];
    let mut sumsq = vec![vec![0.0; agents]; rows];
    for run in &per_run {
        for (t, row) in run.iter().enumerate() {
            for (a, &e) in row.iter().enumerate() {
                sum[t][a] += e;
                sumsq[t][a] += e * e;
            }
        }
    }
    let n = n_runs as f64;
    let mut mean = vec![vec![0.0; agents]; rows];
    let mut stderr = vec![vec![0.0; agents]; rows];
    for t in 0..rows {
        for a in 0..agents {
            let m = sum[t][a] / n;
            mean[t][a] = m;
            if n_runs > 1 {
                let var = ((sumsq[t][a] - n * m * m) / (n - 1.0)).max(0.0);
                stderr[t][a] = (var / n).sqrt();
            }
        }
    }
    Ok(MonteCarloResult {
        runs: n_runs,
        mean,
        stderr,
    })
}

pub(crate) fn check_alpha(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value <= 1.0 {
        Ok(value)
    } else {
        Err(Error::domain(format!("{name} must lie in (0, 1], got {value}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn world_model_validates() {
        assert!(WorldModel::uniform(0).is_err());
        assert!(WorldModel::new(vec![0.5, 0.6]).is_err());
        assert!(WorldModel::new(vec![0.5, -0.5, 1.0]).is_err());
        let w = WorldModel::new(vec![0.25, 0.75]).unwrap();
        assert_eq!(w.world_count(), 2);

        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let draws = 40_000;
        let ones = (0..draws).filter(|_| w.sample(&mut rng) == 1).count();
        let frac = ones as f64 / draws as f64;
        assert!((frac - 0.75).abs() < 0.01, "sampled fraction {frac}");
    }

    #[test]
    fn excluding_draws_cover_their_support() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let x = draw_excluding_one(&mut rng, 4, 2);
            assert!(x < 4 && x != 2);
            let y = draw_excluding_two(&mut rng, 5, 3, 1);
            assert!(y < 5 && y != 1 && y != 3);
        }
    }

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        let a = derive_run_seed(0, 0);
        assert_eq!(a, derive_run_seed(0, 0));
        let mut seen = std::collections::HashSet::new();
        for k in 0..1000 {
            assert!(seen.insert(derive_run_seed(42, k)));
        }
    }
}
