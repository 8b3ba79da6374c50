//! The matching game: two agents whose targets are each other's decision
//! tables, the tightly coupled case where correctness is perfectly
//! correlated across agents.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::sim::{
    mutate_toward_target, table_error, DecisionTable, StepObservation, Trace, Transition,
    WorldFlags, WorldModel,
};
use crate::theory::LearningParams;

/// Runs the matching game. Both agents mutate against the opponent's frozen
/// table, then the targets snap to the new decision tables, so a target
/// moves exactly when the opponent changed that mapping. Initial tables are
/// uniform random, giving an expected starting error of `1 - 1/|A|`.
pub fn run_matching(
    params_i: &LearningParams,
    params_j: &LearningParams,
    action_count: usize,
    world: &WorldModel,
    seed: u64,
    steps: usize,
) -> Result<Trace> {
    if action_count < 2 {
        return Err(Error::ActionCount(action_count));
    }
    if action_count == 2 {
        for p in [params_i, params_j] {
            if p.change_rate() != p.learning_rate() {
                return Err(Error::BinaryRates {
                    change: p.change_rate(),
                    learn: p.learning_rate(),
                });
            }
        }
    }
    if steps == 0 {
        return Err(Error::domain("step count must be at least 1"));
    }
    let world_count = world.world_count();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut decisions = [
        DecisionTable::random(world_count, action_count, &mut rng),
        DecisionTable::random(world_count, action_count, &mut rng),
    ];
    let params = [params_i, params_j];

    let mut errors = Vec::with_capacity(steps + 1);
    let mut observations = Vec::with_capacity(steps);
    let mut transitions = Vec::with_capacity(steps);

    for _ in 0..steps {
        // Each agent's target is the other's current table; the mismatch
        // probability is symmetric.
        let e = table_error(&decisions[0], &decisions[1], world);
        errors.push(vec![e, e]);
        let drawn = world.sample(&mut rng);
        observations.push(StepObservation {
            world: drawn,
            actions: vec![decisions[0].get(drawn), decisions[1].get(drawn)],
        });

        let old = decisions.clone();
        let mut flags: Vec<Vec<WorldFlags>> = Vec::with_capacity(2);
        for i in 0..2 {
            let target = &old[1 - i];
            let moves = mutate_toward_target(
                &mut rng,
                &mut decisions[i],
                target,
                params[i],
                action_count,
            );
            flags.push(
                moves
                    .into_iter()
                    .map(|(was_correct, decision_changed, correct_after)| WorldFlags {
                        was_correct,
                        decision_changed,
                        correct_after,
                        target_changed: false,
                    })
                    .collect(),
            );
        }
        // The new target of each agent is the opponent's new table.
        for i in 0..2 {
            for w in 0..world_count {
                flags[i][w].target_changed = decisions[1 - i].get(w) != old[1 - i].get(w);
            }
        }
        transitions.push(Transition { flags });
    }
    let e = table_error(&decisions[0], &decisions[1], world);
    errors.push(vec![e, e]);

    Ok(Trace {
        seed,
        agent_count: 2,
        world_count,
        errors,
        observations,
        transitions,
    })
}
