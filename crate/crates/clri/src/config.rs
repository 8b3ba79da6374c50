//! Experiment configuration: a TOML file with nested sections. Unknown keys
//! are rejected so a typo cannot silently change an experiment.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sim::{GameDef, MarketConfig, WorldModel};
use crate::theory::{AgentSpec, ImpactMatrix, LearningParams, SystemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Predict,
    Simulate,
    Compare,
    Surface,
    Field,
    Pac,
    Estimate,
    Preset,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Predict => "predict",
            Mode::Simulate => "simulate",
            Mode::Compare => "compare",
            Mode::Surface => "surface",
            Mode::Field => "field",
            Mode::Pac => "pac",
            Mode::Estimate => "estimate",
            Mode::Preset => "preset",
        }
    }
}

/// Agent roster and coupling for the deterministic model and the synthetic
/// and matching games. Rates are given as parallel per-agent arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub action_counts: Vec<usize>,
    pub change_rates: Vec<f64>,
    pub learning_rates: Vec<f64>,
    pub retention_rates: Vec<f64>,
    pub initial_errors: Vec<f64>,
    /// Row-major impacts: `impacts[j][i]` is the impact of agent j's
    /// decision changes on agent i's target. Defaults to all zeros.
    #[serde(default)]
    pub impacts: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub identical_shortcut: bool,
    /// Overrides the impact-derived volatility with a constant.
    #[serde(default)]
    pub fixed_volatility: Option<f64>,
}

impl SystemConfig {
    pub fn agent_count(&self) -> usize {
        self.action_counts.len()
    }

    pub fn build(&self) -> Result<SystemSpec> {
        let n = self.agent_count();
        for (name, len) in [
            ("change_rates", self.change_rates.len()),
            ("learning_rates", self.learning_rates.len()),
            ("retention_rates", self.retention_rates.len()),
            ("initial_errors", self.initial_errors.len()),
        ] {
            if len != n {
                return Err(crate::error::Error::DimensionMismatch {
                    context: match name {
                        "change_rates" => "change_rates length vs action_counts",
                        "learning_rates" => "learning_rates length vs action_counts",
                        "retention_rates" => "retention_rates length vs action_counts",
                        _ => "initial_errors length vs action_counts",
                    },
                    expected: n,
                    actual: len,
                });
            }
        }
        let mut agents = Vec::with_capacity(n);
        for k in 0..n {
            let params = LearningParams::new(
                self.change_rates[k],
                self.learning_rates[k],
                self.retention_rates[k],
            )?;
            agents.push(AgentSpec::new(
                self.action_counts[k],
                params,
                self.initial_errors[k],
            )?);
        }
        let impacts = match &self.impacts {
            Some(rows) => ImpactMatrix::from_rows(rows)?,
            None => ImpactMatrix::zero(n),
        };
        let mut spec = SystemSpec::new(agents, impacts)?;
        if self.identical_shortcut {
            spec = spec.with_identical_shortcut()?;
        }
        if let Some(v) = self.fixed_volatility {
            spec = spec.with_fixed_volatility(v)?;
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GameConfig {
    /// Rate-driven agents from the `[system]` section.
    Synthetic {
        #[serde(default = "default_world_count")]
        world_count: usize,
    },
    /// Two-agent matching game; rates come from the `[system]` section.
    Matching {
        #[serde(default = "default_world_count")]
        world_count: usize,
    },
    Coordination {
        agent_count: usize,
        update_delay: usize,
    },
    Market {
        alpha_i: f64,
        alpha_j: f64,
        #[serde(default = "default_price_count")]
        price_count: usize,
        #[serde(default = "default_exploration_init")]
        exploration_init: f64,
        #[serde(default = "default_exploration_decay")]
        exploration_decay: f64,
    },
}

fn default_world_count() -> usize {
    50
}

fn default_price_count() -> usize {
    20
}

fn default_exploration_init() -> f64 {
    1.0
}

fn default_exploration_decay() -> f64 {
    0.95
}

/// Inputs for the sample-complexity and learning-rate bounds. The
/// hypothesis count may be given directly or as an action/world space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacConfig {
    #[serde(default)]
    pub hypothesis_count: Option<u64>,
    #[serde(default)]
    pub action_count: Option<usize>,
    #[serde(default)]
    pub world_count: Option<usize>,
    pub epsilon: f64,
    pub gamma: f64,
    #[serde(default)]
    pub initial_error: Option<f64>,
    /// Overrides the derived sample complexity in the learning-rate bound.
    #[serde(default)]
    pub samples: Option<u64>,
}

/// Cross-literature convention-game comparison parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShohamConfig {
    #[serde(default = "default_scale_p")]
    pub scale_p: f64,
    #[serde(default = "default_trials_total")]
    pub trials_total: f64,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_population")]
    pub agent_count: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl ShohamConfig {
    /// Pairwise impact in a randomly paired population: one partner out of
    /// the other N-1 agents moves your target.
    pub fn impact(&self) -> f64 {
        1.0 / (self.agent_count as f64 - 1.0)
    }
}

impl Default for ShohamConfig {
    fn default() -> Self {
        ShohamConfig {
            scale_p: default_scale_p(),
            trials_total: default_trials_total(),
            horizon: default_horizon(),
            agent_count: default_population(),
            samples: default_samples(),
        }
    }
}

fn default_scale_p() -> f64 {
    6.0
}

fn default_trials_total() -> f64 {
    4000.0
}

fn default_horizon() -> usize {
    1600
}

fn default_population() -> usize {
    100
}

fn default_samples() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub runs: Option<usize>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub max_iterations: Option<usize>,
    #[serde(default)]
    pub resolution: Option<usize>,
    #[serde(default)]
    pub out_dir: Option<String>,
    /// Preset name, for `mode = "preset"`.
    #[serde(default)]
    pub preset: Option<String>,
    /// Path to a trace detail CSV consumed by `estimate` mode.
    #[serde(default)]
    pub trace_in: Option<String>,
    /// Where to write a trace detail CSV (single-run simulate/estimate).
    #[serde(default)]
    pub trace_out: Option<String>,
    #[serde(default)]
    pub system: Option<SystemConfig>,
    #[serde(default)]
    pub game: Option<GameConfig>,
    #[serde(default)]
    pub pac: Option<PacConfig>,
    #[serde(default)]
    pub shoham: Option<ShohamConfig>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn steps_or(&self, default: usize) -> usize {
        self.steps.unwrap_or(default)
    }

    pub fn runs_or(&self, default: usize) -> usize {
        self.runs.unwrap_or(default)
    }

    pub fn tolerance_or_default(&self) -> f64 {
        self.tolerance.unwrap_or(crate::theory::DEFAULT_TOLERANCE)
    }

    pub fn max_iterations_or_default(&self) -> usize {
        self.max_iterations
            .unwrap_or(crate::theory::DEFAULT_MAX_ITERATIONS)
    }

    pub fn resolution_or_default(&self) -> usize {
        self.resolution.unwrap_or(crate::theory::DEFAULT_RESOLUTION)
    }

    /// Builds the stochastic game described by `[game]` (plus `[system]`
    /// for the synthetic and matching kinds).
    pub fn build_game(&self, steps: usize) -> Result<GameDef> {
        let game = self
            .game
            .as_ref()
            .ok_or_else(|| crate::error::Error::domain("this mode needs a [game] section"))?;
        match game {
            GameConfig::Synthetic { world_count } => {
                let system = self.require_system()?;
                Ok(GameDef::Synthetic {
                    spec: system.build()?,
                    world: WorldModel::uniform(*world_count)?,
                    steps,
                })
            }
            GameConfig::Matching { world_count } => {
                let system = self.require_system()?;
                let spec = system.build()?;
                if spec.agent_count() != 2 {
                    return Err(crate::error::Error::DimensionMismatch {
                        context: "matching game needs exactly two agents",
                        expected: 2,
                        actual: spec.agent_count(),
                    });
                }
                if spec.agent(0).action_count() != spec.agent(1).action_count() {
                    return Err(crate::error::Error::DimensionMismatch {
                        context: "matching agents' action counts",
                        expected: spec.agent(0).action_count(),
                        actual: spec.agent(1).action_count(),
                    });
                }
                Ok(GameDef::Matching {
                    params_i: *spec.agent(0).params(),
                    params_j: *spec.agent(1).params(),
                    action_count: spec.agent(0).action_count(),
                    world: WorldModel::uniform(*world_count)?,
                    steps,
                })
            }
            GameConfig::Coordination {
                agent_count,
                update_delay,
            } => Ok(GameDef::Coordination {
                agent_count: *agent_count,
                update_delay: *update_delay,
                steps,
            }),
            GameConfig::Market {
                alpha_i,
                alpha_j,
                price_count,
                exploration_init,
                exploration_decay,
            } => Ok(GameDef::Market {
                config: MarketConfig {
                    alpha_i: *alpha_i,
                    alpha_j: *alpha_j,
                    price_count: *price_count,
                    exploration_init: *exploration_init,
                    exploration_decay: *exploration_decay,
                },
                steps,
            }),
        }
    }

    pub fn require_system(&self) -> Result<&SystemConfig> {
        self.system
            .as_ref()
            .ok_or_else(|| crate::error::Error::domain("this mode needs a [system] section"))
    }
}

/// One validation finding: the offending field and what is wrong with it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Checks every constraint the referenced modules would enforce, without
/// running anything, and returns all violations.
pub fn validate(config: &ExperimentConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let diag = |out: &mut Vec<Diagnostic>, field: &str, message: String| {
        out.push(Diagnostic {
            field: field.to_string(),
            message,
        });
    };

    if let Some(system) = &config.system {
        let n = system.agent_count();
        for (name, len) in [
            ("system.change_rates", system.change_rates.len()),
            ("system.learning_rates", system.learning_rates.len()),
            ("system.retention_rates", system.retention_rates.len()),
            ("system.initial_errors", system.initial_errors.len()),
        ] {
            if len != n {
                diag(&mut out, name, format!("expected {n} entries, got {len}"));
            }
        }
        for (k, &a) in system.action_counts.iter().enumerate() {
            if a < 2 {
                diag(
                    &mut out,
                    &format!("system.action_counts[{k}]"),
                    format!("action count must be at least 2, got {a}"),
                );
            }
        }
        let probability_fields: [(&str, &Vec<f64>); 4] = [
            ("system.change_rates", &system.change_rates),
            ("system.learning_rates", &system.learning_rates),
            ("system.retention_rates", &system.retention_rates),
            ("system.initial_errors", &system.initial_errors),
        ];
        for (name, values) in probability_fields {
            for (k, &v) in values.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    diag(
                        &mut out,
                        &format!("{name}[{k}]"),
                        format!("must lie in [0, 1], got {v}"),
                    );
                }
            }
        }
        for k in 0..n.min(system.change_rates.len()).min(system.learning_rates.len()) {
            let (c, l) = (system.change_rates[k], system.learning_rates[k]);
            if l > c {
                diag(
                    &mut out,
                    &format!("system.learning_rates[{k}]"),
                    format!("learning rate {l} exceeds change rate {c}; l <= c must hold"),
                );
            }
            if k < system.action_counts.len() && system.action_counts[k] == 2 && c != l {
                diag(
                    &mut out,
                    &format!("system.change_rates[{k}]"),
                    format!(
                        "two-action agents need c = l (got c={c}, l={l}): the only change available to an incorrect binary mapping is the correct action"
                    ),
                );
            }
        }
        if let Some(rows) = &system.impacts {
            if rows.len() != n {
                diag(
                    &mut out,
                    "system.impacts",
                    format!("expected {n} rows, got {}", rows.len()),
                );
            }
            for (j, row) in rows.iter().enumerate() {
                if row.len() != n {
                    diag(
                        &mut out,
                        &format!("system.impacts[{j}]"),
                        format!("expected {n} entries, got {}", row.len()),
                    );
                }
                for (i, &v) in row.iter().enumerate() {
                    if j == i && v != 0.0 {
                        diag(
                            &mut out,
                            &format!("system.impacts[{j}][{i}]"),
                            format!("diagonal impacts must be zero, got {v}"),
                        );
                    } else if !(0.0..=1.0).contains(&v) {
                        diag(
                            &mut out,
                            &format!("system.impacts[{j}][{i}]"),
                            format!("must lie in [0, 1], got {v}"),
                        );
                    }
                }
            }
        }
        if let Some(v) = system.fixed_volatility {
            if !(0.0..=1.0).contains(&v) {
                diag(
                    &mut out,
                    "system.fixed_volatility",
                    format!("must lie in [0, 1], got {v}"),
                );
            }
        }
        if system.identical_shortcut && system.build().is_err() {
            // Re-check with a precise message only when the arrays are sane.
            if out.is_empty() {
                diag(
                    &mut out,
                    "system.identical_shortcut",
                    "shortcut requires identical agents and a uniform off-diagonal impact"
                        .to_string(),
                );
            }
        }
    }

    match config.mode {
        Mode::Predict => {
            if config.system.is_none() {
                diag(&mut out, "system", "predict mode needs a [system] section".into());
            }
        }
        Mode::Simulate => {
            if config.game.is_none() {
                diag(&mut out, "game", "simulate mode needs a [game] section".into());
            }
        }
        Mode::Compare => {
            if config.system.is_none() {
                diag(&mut out, "system", "compare mode needs a [system] section".into());
            }
            if config.game.is_none() {
                diag(&mut out, "game", "compare mode needs a [game] section".into());
            }
        }
        Mode::Surface | Mode::Field => {
            match &config.system {
                None => diag(
                    &mut out,
                    "system",
                    format!("{} mode needs a [system] section", config.mode.as_str()),
                ),
                Some(s) if s.agent_count() != 2 => diag(
                    &mut out,
                    "system.action_counts",
                    format!(
                        "{} mode needs exactly two agents, got {}",
                        config.mode.as_str(),
                        s.agent_count()
                    ),
                ),
                _ => {}
            }
            if let Some(r) = config.resolution {
                if r < 2 {
                    diag(&mut out, "resolution", format!("must be at least 2, got {r}"));
                }
            }
        }
        Mode::Pac => match &config.pac {
            None => diag(&mut out, "pac", "pac mode needs a [pac] section".into()),
            Some(p) => {
                if !(p.epsilon > 0.0 && p.epsilon < 1.0) {
                    diag(&mut out, "pac.epsilon", format!("must lie in (0, 1), got {}", p.epsilon));
                }
                if !(p.gamma > 0.0 && p.gamma < 1.0) {
                    diag(&mut out, "pac.gamma", format!("must lie in (0, 1), got {}", p.gamma));
                }
                let direct = p.hypothesis_count.is_some();
                let derived = p.action_count.is_some() && p.world_count.is_some();
                if !direct && !derived {
                    diag(
                        &mut out,
                        "pac.hypothesis_count",
                        "give hypothesis_count, or both action_count and world_count".into(),
                    );
                }
                if p.hypothesis_count == Some(0) {
                    diag(&mut out, "pac.hypothesis_count", "must be at least 1".into());
                }
            }
        },
        Mode::Estimate => {
            if config.trace_in.is_none() && config.game.is_none() {
                diag(
                    &mut out,
                    "game",
                    "estimate mode needs a [game] section or a trace_in path".into(),
                );
            }
        }
        Mode::Preset => {
            if config.preset.is_none() {
                diag(&mut out, "preset", "preset mode needs a preset name".into());
            }
        }
    }

    if matches!(
        (&config.mode, &config.game),
        (
            Mode::Simulate | Mode::Compare | Mode::Estimate,
            Some(GameConfig::Synthetic { .. }) | Some(GameConfig::Matching { .. })
        )
    ) && config.system.is_none()
    {
        diag(
            &mut out,
            "system",
            "synthetic and matching games take their agents from [system]".into(),
        );
    }
    if let Some(GameConfig::Matching { .. }) = &config.game {
        if let Some(s) = &config.system {
            if s.agent_count() != 2 {
                diag(
                    &mut out,
                    "system.action_counts",
                    format!("matching game needs exactly two agents, got {}", s.agent_count()),
                );
            }
        }
    }
    if let Some(GameConfig::Coordination { agent_count, .. }) = &config.game {
        if agent_count % 2 != 0 || *agent_count == 0 {
            diag(
                &mut out,
                "game.agent_count",
                format!("must be positive and even, got {agent_count}"),
            );
        }
    }
    if let Some(GameConfig::Market {
        alpha_i, alpha_j, price_count, ..
    }) = &config.game
    {
        for (name, a) in [("game.alpha_i", alpha_i), ("game.alpha_j", alpha_j)] {
            if !(*a > 0.0 && *a <= 1.0) {
                diag(&mut out, name, format!("must lie in (0, 1], got {a}"));
            }
        }
        if *price_count < 2 {
            diag(&mut out, "game.price_count", format!("must be at least 2, got {price_count}"));
        }
    }
    if let Some(r) = config.runs {
        if r == 0 {
            diag(&mut out, "runs", "must be at least 1".into());
        }
    }
    if let Some(s) = config.steps {
        if s == 0 {
            diag(&mut out, "steps", "must be at least 1".into());
        }
    }
    if let Some(t) = config.tolerance {
        if !(t > 0.0) {
            diag(&mut out, "tolerance", format!("must be positive, got {t}"));
        }
    }
    out
}
