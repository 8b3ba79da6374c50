//! Acceptance suite: one test per shipping criterion, each printing a
//! single PASS line with the measured quantities (run with `--nocapture`
//! to see them). These pin the quantitative behavior of the whole stack:
//! the recurrences, the simulator oracle, the estimators, and the CSV
//! emitting runner.

use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use clri::pac::{fixed_target_error, learning_rate_lower_bound};
use clri::repro::{preset_by_name, shoham_comparison, shoham_default_samples, PRESET_NAMES};
use clri::config::ShohamConfig;
use clri::estimate::{estimate_impact, estimate_rates};
use clri::runner::run;
use clri::sim::{monte_carlo, run_synthetic, GameDef, MarketConfig, WorldModel};
use clri::theory::{
    coupled_trajectory, error_surface, fixed_point, step_general, step_matching, step_simplified,
    AgentSpec, CouplingModel, FixedPointKind, ImpactMatrix, LearningParams, SystemSpec,
};

fn agent(actions: usize, c: f64, l: f64, r: f64, e0: f64) -> AgentSpec {
    AgentSpec::new(actions, LearningParams::new(c, l, r).unwrap(), e0).unwrap()
}

fn random_agent(rng: &mut StdRng, actions: usize) -> AgentSpec {
    let c: f64 = rng.random();
    let l = if actions == 2 { c } else { c * rng.random::<f64>() };
    let r: f64 = rng.random();
    agent(actions, c, l, r, 0.0)
}

#[test]
fn criterion_01_error_progression_fixed_point() {
    let start = Instant::now();
    let spec = SystemSpec::new(vec![agent(20, 1.0, 0.3, 1.0, 0.95)], ImpactMatrix::zero(1))
        .unwrap()
        .with_fixed_volatility(0.2)
        .unwrap();
    let result = fixed_point(&spec, &spec.initial_state(), 1e-9, 10_000).unwrap();
    let value = result.state.get(0);
    let elapsed = start.elapsed();
    assert_eq!(result.kind, FixedPointKind::Converged);
    assert!(
        (value - 0.44).abs() <= 0.005,
        "fixed point {value} not within 0.44 +/- 0.005"
    );
    assert!(result.iterations <= 10_000);
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "criterion 1 PASS: fixed volatility 0.2 converges to {value:.6} in {} iterations ({elapsed:?})",
        result.iterations
    );
}

#[test]
fn criterion_02_matching_identities() {
    let mut rng = StdRng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let actions = rng.random_range(3..=40usize);
        let e: f64 = rng.random();

        let ones = agent(actions, 1.0, 1.0, 1.0, 0.0);
        let dev = (step_matching(&ones, &ones, 1.0 - e).unwrap() - e).abs();
        worst = worst.max(dev);
        assert!(dev < 1e-12, "identity map violated by {dev}");

        let c_i: f64 = rng.random();
        let l_i = c_i * rng.random::<f64>();
        let learner_i = agent(actions, c_i, l_i, 1.0, 0.0);
        let teacher_j = agent(actions, 1.0, 1.0, 1.0, 0.0);
        let dev = (step_matching(&learner_i, &teacher_j, 1.0 - e).unwrap() - c_i * e).abs();
        worst = worst.max(dev);
        assert!(dev < 1e-12, "contraction by c_i violated by {dev}");
    }
    println!("criterion 2 PASS: matching identities exact over 1000 draws (worst |diff| {worst:.2e})");
}

#[test]
fn criterion_03_general_step_specializations() {
    let mut rng = StdRng::seed_from_u64(3);
    let mut worst_flat = 0.0f64;
    let mut worst_matching = 0.0f64;
    for _ in 0..10_000 {
        let actions = rng.random_range(2..=40usize);
        let a = random_agent(&mut rng, actions);
        let e: f64 = rng.random();
        let v: f64 = rng.random();

        let flat = CouplingModel::flat_independent(v, actions).unwrap();
        let dev = (step_general(&a, e, &flat).unwrap() - step_simplified(&a, e, v).unwrap()).abs();
        worst_flat = worst_flat.max(dev);
        assert!(dev < 1e-12, "flat specialization off by {dev}");

        let b = random_agent(&mut rng, actions);
        let coupling = CouplingModel::matching(b.params(), actions).unwrap();
        let dev = (step_general(&a, e, &coupling).unwrap()
            - step_matching(&a, &b, 1.0 - e).unwrap())
        .abs();
        worst_matching = worst_matching.max(dev);
        assert!(dev < 1e-12, "matching specialization off by {dev}");
    }
    println!(
        "criterion 3 PASS: general step matches simplified (worst {worst_flat:.2e}) and matching (worst {worst_matching:.2e}) over 10000 draws"
    );
}

/// Known red: the mechanism does not satisfy the independence assumption
/// behind the simplified recurrence at these parameters.
///
/// The per-world pair process is an exact 4-state Markov chain (see the
/// mechanism_oracle test file); its stationary error is 0.244917 and the
/// simulator matches it with no exceedances at 4000 runs, while the
/// recurrence settles at 0.248359. Churn here is wrongness-coupled
/// (c != 1 - r), so worlds where the neighbor is wrong receive more target
/// redraws, correlating the two agents' per-world wrongness; the gap of
/// 0.0034 is about 1.8 standard errors at 1000 runs, capping the
/// within-3-SE fraction near 89%, below the required 95%. A system that
/// does satisfy the assumptions passes the same bar (see
/// recurrence_is_exact_when_assumptions_hold).
#[test]
fn criterion_04_simulator_tracks_the_recurrence() {
    let start = Instant::now();
    let spec = SystemSpec::new(
        vec![agent(20, 0.5, 0.2, 0.95, 1.0), agent(20, 0.5, 0.2, 0.95, 1.0)],
        ImpactMatrix::uniform(2, 0.1).unwrap(),
    )
    .unwrap();
    let steps = 200;
    let theory = coupled_trajectory(&spec, &spec.initial_state(), steps).unwrap();
    let game = GameDef::Synthetic {
        spec,
        world: WorldModel::uniform(50).unwrap(),
        steps,
    };
    let sim = monte_carlo(&game, 1000, 0).unwrap();

    let mut hits = 0usize;
    let mut total = 0usize;
    for t in 1..=steps {
        for a in 0..2 {
            let expected = theory.states[t].get(a);
            let mean = sim.mean[t][a];
            let se = sim.stderr[t][a];
            total += 1;
            if (mean - expected).abs() <= 3.0 * se {
                hits += 1;
            }
        }
    }
    let fraction = hits as f64 / total as f64;
    let elapsed = start.elapsed();
    let verdict = if fraction >= 0.95 { "PASS" } else { "FAIL" };
    println!(
        "criterion 4 {verdict}: simulator mean within 3 standard errors at {:.1}% of steps \
         (need 95%; 1000 runs, {elapsed:?}; the recurrence's independence assumption does not \
         hold exactly for this system, see test comment)",
        100.0 * fraction
    );
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    assert!(
        fraction >= 0.95,
        "only {:.1}% of step/agent pairs within 3 standard errors; the mechanism's stationary \
         error (0.244917, exact pair-chain value, matched by the simulator) sits 0.0034 below \
         the independence-assumption recurrence (0.248359), about 1.8 standard errors at 1000 \
         runs",
        100.0 * fraction
    );
}

#[test]
fn criterion_05_impact_surface_shape() {
    let base = SystemSpec::new(
        vec![agent(20, 1.0, 0.2, 1.0, 1.0), agent(20, 1.0, 0.2, 1.0, 1.0)],
        ImpactMatrix::zero(2),
    )
    .unwrap();
    let surface = error_surface(&base, 11, 1e-9, 1_000_000).unwrap();
    let at = |x: f64, y: f64| {
        surface.values[(x * 10.0).round() as usize][(y * 10.0).round() as usize]
    };
    let full = at(1.0, 1.0);
    let none = at(0.0, 0.0);
    let strong_in = at(0.9, 0.1);
    let strong_out = at(0.1, 0.9);
    assert!(full >= 0.9, "final error at (1,1) is {full}");
    assert!(none <= 0.01, "final error at (0,0) is {none}");
    assert!(
        strong_in > strong_out,
        "asymmetry violated: {strong_in} vs {strong_out}"
    );
    println!(
        "criterion 5 PASS: surface corners (1,1)={full:.4} (0,0)={none:.2e}, asymmetry {strong_in:.4} > {strong_out:.4}"
    );
}

#[test]
fn criterion_06_market_error_curves() {
    let start = Instant::now();
    let game = GameDef::Market {
        config: MarketConfig::default(),
        steps: 600,
    };
    let sim = monte_carlo(&game, 100, 0).unwrap();
    let initial = sim.mean[0][0];
    let final_sim = sim.mean[600][0];
    assert!(
        (initial - 0.5).abs() <= 0.05,
        "initial market error {initial}"
    );
    assert!(final_sim < 0.1, "final market error {final_sim}");

    let spec = SystemSpec::new(
        vec![agent(20, 0.005, 0.005, 1.0, 0.5), agent(20, 0.005, 0.005, 1.0, 0.5)],
        ImpactMatrix::uniform(2, 0.17).unwrap(),
    )
    .unwrap();
    let theory = coupled_trajectory(&spec, &spec.initial_state(), 600).unwrap();
    let final_theory = theory.last().get(0);
    let elapsed = start.elapsed();
    assert!(final_theory < 0.1, "final predicted error {final_theory}");
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    println!(
        "criterion 6 PASS: market error {initial:.3} -> {final_sim:.4} (simulated), {final_theory:.4} (predicted) ({elapsed:?})"
    );
}

#[test]
fn criterion_07_convention_game_comparison() {
    let start = Instant::now();
    let mapping = ShohamConfig::default();
    let samples = shoham_default_samples(&mapping);
    assert_eq!(samples.len(), 50);
    let curve = shoham_comparison(&mapping, &samples).unwrap();
    let elapsed = start.elapsed();
    assert!(
        curve.max_deviation <= 0.08,
        "max deviation {} exceeds 0.08",
        curve.max_deviation
    );
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!(
        "criterion 7 PASS: theory within {:.4} of the experiment fit over 50 samples ({elapsed:?})",
        curve.max_deviation
    );
}

#[test]
fn criterion_08_pac_round_trip() {
    let mut rng = StdRng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let e0 = rng.random::<f64>().max(1e-6);
        let epsilon = rng.random::<f64>() * e0;
        if epsilon <= 0.0 || epsilon >= e0 {
            continue;
        }
        let m = rng.random_range(1..=10_000u64);
        let bound = learning_rate_lower_bound(e0, epsilon, m).unwrap();
        let reached = fixed_target_error(e0, bound, m).unwrap();
        let dev = (reached - epsilon).abs();
        worst = worst.max(dev);
        assert!(
            dev <= 1e-9,
            "round trip off by {dev} at e0={e0} eps={epsilon} m={m}"
        );
    }
    println!("criterion 8 PASS: learning-rate bound round-trips to epsilon (worst |diff| {worst:.2e})");
}

#[test]
fn criterion_09_estimation_coverage() {
    let (c, l, r, impact) = (0.5, 0.2, 0.9, 0.3);
    let spec = SystemSpec::new(
        vec![agent(20, c, l, r, 0.5), agent(20, c, l, r, 0.5)],
        ImpactMatrix::uniform(2, impact).unwrap(),
    )
    .unwrap();
    let world = WorldModel::uniform(50).unwrap();
    let (mut cov_c, mut cov_l, mut cov_r, mut cov_i) = (0u32, 0u32, 0u32, 0u32);
    let repetitions = 100;
    for rep in 0..repetitions {
        // 2000 steps x 50 worlds = 1e5 conditioning samples per agent.
        let trace = run_synthetic(&spec, &world, 1000 + rep, 2000).unwrap();
        let rates = estimate_rates(&trace, 0).unwrap();
        cov_c += rates.change.covers(c) as u32;
        cov_l += rates.learn.covers(l) as u32;
        cov_r += rates.retain.covers(r) as u32;
        cov_i += estimate_impact(&trace, 1, 0).unwrap().covers(impact) as u32;
    }
    for (name, cov) in [("c", cov_c), ("l", cov_l), ("r", cov_r), ("I", cov_i)] {
        assert!(
            cov >= 90,
            "{name} covered in only {cov}/{repetitions} repetitions"
        );
    }
    println!(
        "criterion 9 PASS: 95% interval coverage over 100 runs: c={cov_c} l={cov_l} r={cov_r} I={cov_i}"
    );
}

#[test]
fn criterion_10_preset_determinism() {
    let root = tempfile::tempdir().unwrap();
    for name in PRESET_NAMES {
        let mut outputs: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
        for attempt in 0..2 {
            let dir = root.path().join(format!("{name}-{attempt}"));
            let config = preset_by_name(name).unwrap();
            let outcome = run(&config, &dir).unwrap();
            let mut files: Vec<(String, Vec<u8>)> = outcome
                .files
                .iter()
                .map(|p| {
                    (
                        p.file_name().unwrap().to_string_lossy().into_owned(),
                        std::fs::read(p).unwrap(),
                    )
                })
                .collect();
            files.sort_by(|a, b| a.0.cmp(&b.0));
            assert!(files.iter().any(|(n, _)| n.ends_with(".csv")), "{name} wrote no CSV");
            outputs.push(files);
        }
        assert_eq!(
            outputs[0].len(),
            outputs[1].len(),
            "{name}: differing artifact sets"
        );
        for ((name_a, bytes_a), (name_b, bytes_b)) in outputs[0].iter().zip(&outputs[1]) {
            assert_eq!(name_a, name_b, "{name}: differing artifact names");
            assert_eq!(
                bytes_a, bytes_b,
                "{name}: artifact {name_a} differs between identical runs"
            );
        }
    }
    println!(
        "criterion 10 PASS: all {} presets regenerate byte-identical artifacts",
        PRESET_NAMES.len()
    );
}
