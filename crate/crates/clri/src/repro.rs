//! Named experiment presets and the unit mappings for the cross-literature
//! convention-game comparison.

use crate::config::{
    ExperimentConfig, GameConfig, Mode, ShohamConfig, SystemConfig,
};
use crate::error::{Error, Result};
use crate::theory::{
    coupled_step, AgentSpec, ErrorState, ImpactMatrix, LearningParams, SystemSpec,
};

/// Converts a learning rate into the convention game's update delay,
/// `d = 1/(p*l) - 1`, for scaling constant `p > 0`.
pub fn delay_from_learning_rate(learning_rate: f64, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::domain(format!("scale p must be positive, got {p}")));
    }
    if !(learning_rate > 0.0) || learning_rate > 1.0 / p {
        return Err(Error::domain(format!(
            "learning rate must lie in (0, 1/p] = (0, {}], got {learning_rate}",
            1.0 / p
        )));
    }
    Ok(1.0 / (p * learning_rate) - 1.0)
}

/// Inverse mapping, `l = 1/(p*(d + 1))`.
pub fn learning_rate_from_delay(delay: f64, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::domain(format!("scale p must be positive, got {p}")));
    }
    if !(delay >= 0.0) {
        return Err(Error::domain(format!("delay must be non-negative, got {delay}")));
    }
    Ok(1.0 / (p * (delay + 1.0)))
}

/// Fit of the published convention-game data: successes out of 4000 trials
/// as a function of the update delay, `s = 3900 - 4d - (d - 100)^2 / 100`,
/// valid on d in [0, 200].
pub fn success_from_delay(delay: f64) -> Result<f64> {
    if !(0.0..=200.0).contains(&delay) {
        return Err(Error::domain(format!("delay must lie in [0, 200], got {delay}")));
    }
    Ok(3900.0 - 4.0 * delay - (delay - 100.0).powi(2) / 100.0)
}

/// Maps a success count (out of 4000 trials) to an error: successful trials
/// count as error 0 and failed ones as error 1, giving `(4000 - s) / 4000`.
pub fn error_from_success(success: f64) -> Result<f64> {
    if !(0.0..=4000.0).contains(&success) {
        return Err(Error::domain(format!("success must lie in [0, 4000], got {success}")));
    }
    Ok((4000.0 - success) / 4000.0)
}

/// `count` log-spaced samples covering [lo, hi] inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Paired theory and experiment-fit final-error curves over a learning-rate
/// sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonCurve {
    pub learning_rates: Vec<f64>,
    pub delays: Vec<f64>,
    pub theory: Vec<f64>,
    pub experiment: Vec<f64>,
    pub max_deviation: f64,
}

/// Final error after `horizon` steps of a population of identical
/// two-action consistent learners with pairwise impact `1/(N-1)`, starting
/// from error one half.
fn identical_population_final_error(
    learning_rate: f64,
    mapping: &ShohamConfig,
) -> Result<f64> {
    let params = LearningParams::new(learning_rate, learning_rate, 1.0)?;
    let n = mapping.agent_count;
    let agents = vec![AgentSpec::new(2, params, 0.5)?; n];
    let impacts = ImpactMatrix::uniform(n, mapping.impact())?;
    let spec = SystemSpec::new(agents, impacts)?.with_identical_shortcut()?;
    let mut state = ErrorState::new(vec![0.5; n])?;
    for _ in 0..mapping.horizon {
        state = coupled_step(&spec, &state)?.0;
    }
    Ok(state.get(0))
}

/// Evaluates both curves at each learning rate: the model prediction via
/// the coupled recurrence, and the experiment fit via the
/// delay/success/error mappings. Reports the maximum absolute deviation.
pub fn shoham_comparison(mapping: &ShohamConfig, l_samples: &[f64]) -> Result<ComparisonCurve> {
    if l_samples.is_empty() {
        return Err(Error::domain("need at least one learning-rate sample"));
    }
    let mut delays = Vec::with_capacity(l_samples.len());
    let mut theory = Vec::with_capacity(l_samples.len());
    let mut experiment = Vec::with_capacity(l_samples.len());
    let mut max_deviation = 0.0f64;
    for &l in l_samples {
        let d_raw = delay_from_learning_rate(l, mapping.scale_p)?;
        if d_raw > 200.0 + 1e-6 {
            return Err(Error::domain(format!(
                "learning rate {l} maps to delay {d_raw}, outside the fitted range [0, 200]"
            )));
        }
        let d = d_raw.clamp(0.0, 200.0);
        let s = success_from_delay(d)?;
        let fit = error_from_success(s)?;
        let predicted = identical_population_final_error(l, mapping)?;
        delays.push(d);
        theory.push(predicted);
        experiment.push(fit);
        max_deviation = max_deviation.max((predicted - fit).abs());
    }
    Ok(ComparisonCurve {
        learning_rates: l_samples.to_vec(),
        delays,
        theory,
        experiment,
        max_deviation,
    })
}

/// Default learning-rate sweep for the comparison: log-spaced over the
/// delay range [0, 200], i.e. l in [1/(201 p), 1/p].
pub fn shoham_default_samples(mapping: &ShohamConfig) -> Vec<f64> {
    let lo = 1.0 / (mapping.scale_p * 201.0);
    let hi = 1.0 / mapping.scale_p;
    log_spaced(lo, hi, mapping.samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetName {
    Fig3,
    Fig4,
    Fig5,
    Market,
    Claus,
    Shoham,
}

pub const PRESET_NAMES: [&str; 6] = ["fig3", "fig4", "fig5", "market", "claus", "shoham"];

impl std::str::FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig3" => Ok(PresetName::Fig3),
            "fig4" => Ok(PresetName::Fig4),
            "fig5" => Ok(PresetName::Fig5),
            "market" => Ok(PresetName::Market),
            "claus" => Ok(PresetName::Claus),
            "shoham" => Ok(PresetName::Shoham),
            other => Err(Error::domain(format!(
                "unknown preset {other:?}; known presets: {}",
                PRESET_NAMES.join(", ")
            ))),
        }
    }
}

impl PresetName {
    pub fn as_str(&self) -> &'static str {
        match self {
            PresetName::Fig3 => "fig3",
            PresetName::Fig4 => "fig4",
            PresetName::Fig5 => "fig5",
            PresetName::Market => "market",
            PresetName::Claus => "claus",
            PresetName::Shoham => "shoham",
        }
    }
}

fn uniform_impacts(n: usize, value: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|j| (0..n).map(|i| if i == j { 0.0 } else { value }).collect())
        .collect()
}

/// Fully specified configuration for a named experiment.
///
/// * `fig3`: single agent under a fixed volatility of 0.2 (c=1, l=.3, r=1,
///   20 actions, error starting at .95), compared against the synthetic
///   simulator with the same imposed target-redraw probability.
/// * `fig4`: final-error surface of two fast-changing learners (c=1, l=.2,
///   r=1) over the impact grid.
/// * `fig5`: expected one-step vector field for the mixed pair (c_i=.5,
///   c_j=1), impacts .3 on agent 0 and .1 on agent 1.
/// * `market`: two 20-price sellers with alpha=.1 against the two-agent
///   recurrence with l=c=.005, r=1, and impact .17 both ways.
/// * `claus`: the two-action matching game at l=c=.1 against the matching
///   recurrence.
/// * `shoham`: the convention-game comparison curve.
pub fn preset(name: PresetName) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig {
        mode: Mode::Preset,
        seed: 0,
        steps: None,
        runs: None,
        tolerance: None,
        max_iterations: None,
        resolution: None,
        out_dir: None,
        preset: Some(name.as_str().to_string()),
        trace_in: None,
        trace_out: None,
        system: None,
        game: None,
        pac: None,
        shoham: None,
    };
    match name {
        PresetName::Fig3 => {
            config.mode = Mode::Compare;
            config.steps = Some(100);
            config.runs = Some(200);
            config.system = Some(SystemConfig {
                action_counts: vec![20],
                change_rates: vec![1.0],
                learning_rates: vec![0.3],
                retention_rates: vec![1.0],
                initial_errors: vec![0.95],
                impacts: None,
                identical_shortcut: false,
                fixed_volatility: Some(0.2),
            });
            config.game = Some(GameConfig::Synthetic { world_count: 50 });
        }
        PresetName::Fig4 => {
            config.mode = Mode::Surface;
            config.resolution = Some(50);
            config.system = Some(SystemConfig {
                action_counts: vec![20, 20],
                change_rates: vec![1.0, 1.0],
                learning_rates: vec![0.2, 0.2],
                retention_rates: vec![1.0, 1.0],
                initial_errors: vec![1.0, 1.0],
                impacts: None,
                identical_shortcut: false,
                fixed_volatility: None,
            });
        }
        PresetName::Fig5 => {
            config.mode = Mode::Field;
            config.resolution = Some(50);
            config.system = Some(SystemConfig {
                action_counts: vec![20, 20],
                change_rates: vec![0.5, 1.0],
                learning_rates: vec![0.2, 0.2],
                retention_rates: vec![1.0, 1.0],
                initial_errors: vec![1.0, 1.0],
                impacts: Some(vec![vec![0.0, 0.1], vec![0.3, 0.0]]),
                identical_shortcut: false,
                fixed_volatility: None,
            });
        }
        PresetName::Market => {
            config.mode = Mode::Compare;
            config.steps = Some(600);
            config.runs = Some(100);
            config.system = Some(SystemConfig {
                action_counts: vec![20, 20],
                change_rates: vec![0.005, 0.005],
                learning_rates: vec![0.005, 0.005],
                retention_rates: vec![1.0, 1.0],
                initial_errors: vec![0.5, 0.5],
                impacts: Some(uniform_impacts(2, 0.17)),
                identical_shortcut: false,
                fixed_volatility: None,
            });
            config.game = Some(GameConfig::Market {
                alpha_i: 0.1,
                alpha_j: 0.1,
                price_count: 20,
                exploration_init: 1.0,
                exploration_decay: 0.95,
            });
        }
        PresetName::Claus => {
            config.mode = Mode::Compare;
            config.steps = Some(100);
            config.runs = Some(500);
            config.system = Some(SystemConfig {
                action_counts: vec![2, 2],
                change_rates: vec![0.1, 0.1],
                learning_rates: vec![0.1, 0.1],
                retention_rates: vec![1.0, 1.0],
                initial_errors: vec![0.5, 0.5],
                impacts: None,
                identical_shortcut: false,
                fixed_volatility: None,
            });
            config.game = Some(GameConfig::Matching { world_count: 1 });
        }
        PresetName::Shoham => {
            config.shoham = Some(ShohamConfig::default());
        }
    }
    Ok(config)
}

pub fn preset_by_name(name: &str) -> Result<ExperimentConfig> {
    preset(name.parse()?)
}
