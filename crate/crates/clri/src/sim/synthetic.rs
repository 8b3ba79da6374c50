//! Stochastic instantiation of the rate model with impact-coupled targets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::sim::{
    draw_excluding_one, mutate_toward_target, table_error, DecisionTable, StepObservation, Trace,
    Transition, WorldFlags, WorldModel,
};
use crate::theory::SystemSpec;

/// Places a decision table at the requested initial error: round(e0 * |W|)
/// randomly chosen worlds are set to a wrong action, the rest to the target.
/// Exact for a uniform world distribution.
fn seed_decision(
    rng: &mut ChaCha12Rng,
    target: &DecisionTable,
    action_count: usize,
    initial_error: f64,
    world_count: usize,
) -> DecisionTable {
    let wrong = ((initial_error * world_count as f64).round() as usize).min(world_count);
    let mut order: Vec<usize> = (0..world_count).collect();
    // Partial Fisher-Yates: the first `wrong` entries form the incorrect set.
    for i in 0..wrong {
        let j = rng.random_range(i..world_count);
        order.swap(i, j);
    }
    let mut decision = target.clone();
    for &w in order.iter().take(wrong) {
        decision.set(w, draw_excluding_one(rng, action_count, target.get(w)));
    }
    decision
}

/// Runs the synthetic rate-driven game.
///
/// Each step, every agent mutates its whole decision table against its
/// current target (learn with probability `l`, rewire wrong with `c - l`,
/// break a correct mapping with `1 - r`). Afterwards, for every ordered pair
/// `(j, i)` and every world where `j` changed its mapping, agent `i`'s
/// target at that world is redrawn to a different action with probability
/// `I[j][i]`. A fixed system volatility replaces the coupling phase with an
/// unconditional per-world redraw probability.
pub fn run_synthetic(
    spec: &SystemSpec,
    world: &WorldModel,
    seed: u64,
    steps: usize,
) -> Result<Trace> {
    if steps == 0 {
        return Err(Error::domain("step count must be at least 1"));
    }
    let n = spec.agent_count();
    let world_count = world.world_count();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);

    let mut targets: Vec<DecisionTable> = spec
        .agents()
        .iter()
        .map(|a| DecisionTable::random(world_count, a.action_count(), &mut rng))
        .collect();
    let mut decisions: Vec<DecisionTable> = Vec::with_capacity(n);
    for (i, agent) in spec.agents().iter().enumerate() {
        decisions.push(seed_decision(
            &mut rng,
            &targets[i],
            agent.action_count(),
            agent.initial_error(),
            world_count,
        ));
    }

    let mut errors = Vec::with_capacity(steps + 1);
    let mut observations = Vec::with_capacity(steps);
    let mut transitions = Vec::with_capacity(steps);

    for _ in 0..steps {
        errors.push(
            (0..n)
                .map(|i| table_error(&decisions[i], &targets[i], world))
                .collect::<Vec<f64>>(),
        );
        let drawn = world.sample(&mut rng);
        observations.push(StepObservation {
            world: drawn,
            actions: decisions.iter().map(|d| d.get(drawn)).collect(),
        });

        // Learning phase, against frozen targets.
        let mut flags: Vec<Vec<WorldFlags>> = Vec::with_capacity(n);
        for (i, agent) in spec.agents().iter().enumerate() {
            let moves = mutate_toward_target(
                &mut rng,
                &mut decisions[i],
                &targets[i],
                agent.params(),
                agent.action_count(),
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

        // Coupling phase: decision changes shake the other agents' targets.
        let old_targets = targets.clone();
        if let Some(v) = spec.fixed_volatility() {
            for (i, agent) in spec.agents().iter().enumerate() {
                for w in 0..world_count {
                    if rng.random::<f64>() < v {
                        let current = targets[i].get(w);
                        targets[i].set(w, draw_excluding_one(&mut rng, agent.action_count(), current));
                    }
                }
            }
        } else {
            for source in 0..n {
                for w in 0..world_count {
                    if !flags[source][w].decision_changed {
                        continue;
                    }
                    for i in 0..n {
                        if i == source {
                            continue;
                        }
                        if rng.random::<f64>() < spec.impacts().get(source, i) {
                            let current = targets[i].get(w);
                            targets[i].set(
                                w,
                                draw_excluding_one(&mut rng, spec.agent(i).action_count(), current),
                            );
                        }
                    }
                }
            }
        }
        for i in 0..n {
            for w in 0..world_count {
                flags[i][w].target_changed = targets[i].get(w) != old_targets[i].get(w);
            }
        }
        transitions.push(Transition { flags });
    }
    errors.push(
        (0..n)
            .map(|i| table_error(&decisions[i], &targets[i], world))
            .collect(),
    );

    Ok(Trace {
        seed,
        agent_count: n,
        world_count,
        errors,
        observations,
        transitions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pac::fixed_target_error;
    use crate::sim::{monte_carlo, GameDef};
    use crate::theory::{AgentSpec, ImpactMatrix, LearningParams, SystemSpec};

    fn agent(actions: usize, c: f64, l: f64, r: f64, e0: f64) -> AgentSpec {
        AgentSpec::new(actions, LearningParams::new(c, l, r).unwrap(), e0).unwrap()
    }

    #[test]
    fn perfect_learner_reaches_zero_immediately() {
        let spec = SystemSpec::new(
            vec![agent(20, 1.0, 1.0, 1.0, 1.0), agent(20, 1.0, 1.0, 1.0, 0.8)],
            ImpactMatrix::zero(2),
        )
        .unwrap();
        let world = WorldModel::uniform(30).unwrap();
        let trace = run_synthetic(&spec, &world, 3, 10).unwrap();
        assert!((trace.errors[0][0] - 1.0).abs() < 1e-12);
        assert!((trace.errors[0][1] - 0.8).abs() < 1e-12);
        for t in 1..=10 {
            assert_eq!(trace.errors[t], vec![0.0, 0.0]);
        }
    }

    #[test]
    fn initial_error_is_materialized_exactly() {
        let spec = SystemSpec::new(
            vec![agent(20, 0.5, 0.2, 0.9, 0.6)],
            ImpactMatrix::zero(1),
        )
        .unwrap();
        let world = WorldModel::uniform(50).unwrap();
        for seed in 0..5 {
            let trace = run_synthetic(&spec, &world, seed, 1).unwrap();
            assert!((trace.errors[0][0] - 0.6).abs() < 1e-12, "{}", trace.errors[0][0]);
        }
    }

    #[test]
    fn decay_matches_fixed_target_closed_form() {
        // r=1, c=l=0.5, no impacts: the mean error halves every step.
        let spec = SystemSpec::new(
            vec![agent(20, 0.5, 0.5, 1.0, 1.0)],
            ImpactMatrix::zero(1),
        )
        .unwrap();
        let game = GameDef::Synthetic {
            spec,
            world: WorldModel::uniform(50).unwrap(),
            steps: 8,
        };
        let result = monte_carlo(&game, 1000, 99).unwrap();
        for t in 0..=8u64 {
            let expected = fixed_target_error(1.0, 0.5, t).unwrap();
            let mean = result.mean[t as usize][0];
            let se = result.stderr[t as usize][0].max(1e-4);
            assert!(
                (mean - expected).abs() <= 3.0 * se,
                "step {t}: mean {mean} vs {expected} (se {se})"
            );
        }
    }

    #[test]
    fn fixed_volatility_long_run_error() {
        // The error-progression setting, emulated with an imposed target
        // redraw probability of 0.2: the long-run mean sits near 0.44.
        let spec = SystemSpec::new(
            vec![agent(20, 1.0, 0.3, 1.0, 0.95)],
            ImpactMatrix::zero(1),
        )
        .unwrap()
        .with_fixed_volatility(0.2)
        .unwrap();
        let game = GameDef::Synthetic {
            spec,
            world: WorldModel::uniform(50).unwrap(),
            steps: 300,
        };
        let result = monte_carlo(&game, 200, 4).unwrap();
        let tail: Vec<f64> = (200..=300).map(|t| result.mean[t][0]).collect();
        let long_run = tail.iter().sum::<f64>() / tail.len() as f64;
        assert!(
            (long_run - 0.44).abs() < 0.02,
            "long-run mean error {long_run}"
        );
    }

    #[test]
    fn rate_faithfulness_of_the_mechanism() {
        // Conditional change/learn/retain frequencies recover c, l, r.
        let (c, l, r) = (0.5, 0.2, 0.9);
        let spec = SystemSpec::new(
            vec![agent(20, c, l, r, 0.5), agent(20, c, l, r, 0.5)],
            ImpactMatrix::uniform(2, 0.3).unwrap(),
        )
        .unwrap();
        let world = WorldModel::uniform(50).unwrap();
        let trace = run_synthetic(&spec, &world, 12, 2000).unwrap();

        let (mut n_inc, mut chg, mut lrn, mut n_cor, mut ret) = (0u64, 0u64, 0u64, 0u64, 0u64);
        for transition in &trace.transitions {
            for f in &transition.flags[0] {
                if f.was_correct {
                    n_cor += 1;
                    ret += f.correct_after as u64;
                } else {
                    n_inc += 1;
                    chg += f.decision_changed as u64;
                    lrn += f.correct_after as u64;
                }
            }
        }
        let check = |label: &str, hits: u64, trials: u64, truth: f64| {
            let p = hits as f64 / trials as f64;
            let se = (truth * (1.0 - truth) / trials as f64).sqrt();
            assert!(
                (p - truth).abs() <= 3.0 * se,
                "{label}: {p} vs {truth} over {trials} samples"
            );
        };
        check("change rate", chg, n_inc, c);
        check("learning rate", lrn, n_inc, l);
        check("retention rate", ret, n_cor, r);
    }

    #[test]
    fn error_bookkeeping_matches_flag_counts() {
        let spec = SystemSpec::new(
            vec![agent(10, 0.7, 0.3, 0.8, 0.9), agent(10, 0.4, 0.1, 0.95, 0.4)],
            ImpactMatrix::uniform(2, 0.25).unwrap(),
        )
        .unwrap();
        let world = WorldModel::uniform(40).unwrap();
        let trace = run_synthetic(&spec, &world, 21, 50).unwrap();
        for t in 0..trace.steps() {
            for a in 0..2 {
                // Identical summation order to the recorder, so the match
                // is bitwise.
                let from_flags: f64 = trace.transitions[t].flags[a]
                    .iter()
                    .enumerate()
                    .filter(|(_, f)| !f.was_correct)
                    .map(|(w, _)| world.probability(w))
                    .sum();
                assert_eq!(trace.errors[t][a], from_flags, "step {t} agent {a}");
            }
        }
    }

    #[test]
    fn same_seed_reproduces_the_trace() {
        let spec = SystemSpec::new(
            vec![agent(5, 0.6, 0.3, 0.7, 0.5), agent(5, 0.2, 0.1, 0.9, 1.0)],
            ImpactMatrix::uniform(2, 0.5).unwrap(),
        )
        .unwrap();
        let world = WorldModel::uniform(10).unwrap();
        let a = run_synthetic(&spec, &world, 77, 40).unwrap();
        let b = run_synthetic(&spec, &world, 77, 40).unwrap();
        assert_eq!(a, b);
        let c = run_synthetic(&spec, &world, 78, 40).unwrap();
        assert_ne!(a, c);
    }
}
