//! Experiment dispatch: builds the configured objects, runs them, and emits
//! CSV artifacts plus a plain-text summary.
//!
//! Output is a pure function of (config, seed): no wall clock, no
//! environment reads, and all parallel reductions happen in a fixed order,
//! so rerunning a configuration reproduces every artifact byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::config::{validate, ExperimentConfig, GameConfig, Mode};
use crate::estimate::{estimate_impact, estimate_rates, RateEstimate};
use crate::pac::{fixed_target_error, learning_rate_lower_bound, sample_complexity, PacProblem};
use crate::repro;
use crate::sim::{monte_carlo, MonteCarloResult, Trace};
use crate::theory::{
    coupled_trajectory, error_surface, expected_volatility, step_matching, vector_field,
};

/// Failures are split by exit code: configuration problems are a user
/// error (exit 2), filesystem problems an environment error (exit 3).
#[derive(Debug)]
pub enum RunError {
    Validation(String),
    Io(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Validation(msg) | RunError::Io(msg) => f.write_str(msg),
        }
    }
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Validation(_) => 2,
            RunError::Io(_) => 3,
        }
    }
}

impl From<crate::error::Error> for RunError {
    fn from(e: crate::error::Error) -> Self {
        RunError::Validation(e.to_string())
    }
}

fn io_err(context: &str, e: std::io::Error) -> RunError {
    RunError::Io(format!("{context}: {e}"))
}

/// What a run produced: artifact paths and the human summary that was (or
/// would be) printed.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// Resolves the output directory: explicit flag, then the config, then the
/// CLRI_OUT_DIR environment variable, then ./out.
pub fn resolve_out_dir(flag: Option<&Path>, config: &ExperimentConfig) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = &config.out_dir {
        return PathBuf::from(p);
    }
    if let Ok(p) = std::env::var("CLRI_OUT_DIR") {
        if !p.is_empty() {
            return PathBuf::from(p);
        }
    }
    PathBuf::from("out")
}

/// Runs a configuration, writing artifacts under `out_dir`.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome, RunError> {
    let diagnostics = validate(config);
    if !diagnostics.is_empty() {
        let listing = diagnostics
            .iter()
            .map(|d| format!("  {d}"))
            .collect::<Vec<_>>()
            .join("\n");
        return Err(RunError::Validation(format!(
            "configuration invalid:\n{listing}"
        )));
    }
    fs::create_dir_all(out_dir).map_err(|e| io_err("creating output directory", e))?;

    let mut summary = String::new();
    let _ = writeln!(summary, "mode: {}", config.mode.as_str());
    let _ = writeln!(summary, "seed: {}", config.seed);

    let mut files = Vec::new();
    match config.mode {
        Mode::Predict => run_predict(config, out_dir, &mut files, &mut summary)?,
        Mode::Simulate => run_simulate(config, out_dir, &mut files, &mut summary)?,
        Mode::Compare => run_compare(config, out_dir, &mut files, &mut summary)?,
        Mode::Surface => run_surface(config, out_dir, &mut files, &mut summary)?,
        Mode::Field => run_field(config, out_dir, &mut files, &mut summary)?,
        Mode::Pac => run_pac(config, out_dir, &mut files, &mut summary)?,
        Mode::Estimate => run_estimate(config, out_dir, &mut files, &mut summary)?,
        Mode::Preset => {
            let name = config.preset.as_deref().expect("validated");
            let mut resolved = repro::preset_by_name(name)?;
            resolved.seed = config.seed;
            if let Some(s) = config.steps {
                resolved.steps = Some(s);
            }
            if let Some(r) = config.runs {
                resolved.runs = Some(r);
            }
            if resolved.mode == Mode::Preset {
                // Only the comparison-curve preset stays in preset mode.
                run_shoham(&resolved, out_dir, &mut files, &mut summary)?;
            } else {
                let nested = run(&resolved, out_dir)?;
                return Ok(RunOutcome {
                    files: nested.files,
                    summary: format!("preset: {name}\n{}", nested.summary),
                });
            }
        }
    }
    let summary_path = out_dir.join("summary.txt");
    fs::write(&summary_path, &summary).map_err(|e| io_err("writing summary", e))?;
    files.push(summary_path);
    Ok(RunOutcome { files, summary })
}

fn write_file(path: &Path, contents: &str) -> Result<(), RunError> {
    let mut f = fs::File::create(path)
        .map_err(|e| io_err(&format!("creating {}", path.display()), e))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| io_err(&format!("writing {}", path.display()), e))
}

fn run_predict(
    config: &ExperimentConfig,
    out_dir: &Path,
    files: &mut Vec<PathBuf>,
    summary: &mut String,
) -> Result<(), RunError> {
    let spec = config.require_system()?.build()?;
    let steps = config.steps_or(100);
    let trajectory = coupled_trajectory(&spec, &spec.initial_state(), steps)?;
    let mut csv = String::from("step,agent,expected_error,volatility\n");
    for (t, state) in trajectory.states.iter().enumerate() {
        for agent in 0..spec.agent_count() {
            let v = expected_volatility(&spec, state, agent)?;
            let _ = writeln!(csv, "{t},{agent},{},{v}", state.get(agent));
        }
    }
    let path = out_dir.join("predict.csv");
    write_file(&path, &csv)?;
    files.push(path);
    let _ = writeln!(summary, "steps: {steps}");
    for agent in 0..spec.agent_count() {
        let _ = writeln!(
            summary,
            "final expected error, agent {agent}: {}",
            trajectory.last().get(agent)
        );
    }
    if trajectory.clamped {
        let _ = writeln!(summary, "note: at least one step was clamped into [0, 1]");
    }
    Ok(())
}

fn simulate_csv(result: &MonteCarloResult) -> String {
    let mut csv = String::from("step,agent,mean_error,stderr\n");
    for (t, row) in result.mean.iter().enumerate() {
        for (agent, mean) in row.iter().enumerate() {
            let _ = writeln!(csv, "{t},{agent},{mean},{}", result.stderr[t][agent]);
        }
    }
    csv
}

fn run_simulate(
    config: &ExperimentConfig,
    out_dir: &Path,
    files: &mut Vec<PathBuf>,
    summary: &mut String,
) -> Result<(), RunError> {
    let steps = config.steps_or(100);
    let runs = config.runs_or(100);
    let game = config.build_game(steps)?;
    let result = monte_carlo(&game, runs, config.seed)?;
    let path = out_dir.join("simulate.csv");
    write_file(&path, &simulate_csv(&result))?;
    files.push(path);
    let _ = writeln!(summary, "steps: {steps}\nruns: {runs}");
    let last = result.mean.last().expect("at least one row");
    for (agent, mean) in last.iter().enumerate() {
        let _ = writeln!(summary, "final mean error, agent {agent}: {mean}");
    }
    if runs == 1 {
        // Single runs also export the per-step trace.
        let trace = game.run(crate::sim::derive_run_seed(config.seed, 0))?;
        let mut buf = Vec::new();
        trace
            .write_summary_csv(&mut buf)
            .map_err(|e| io_err("serializing trace", e))?;
        let path = out_dir.join("trace.csv");
        write_file(&path, &String::from_utf8(buf).expect("csv is utf-8"))?;
        files.push(path);
        if let Some(trace_out) = &config.trace_out {
            write_trace_detail(&trace, Path::new(trace_out), files)?;
        }
    }
    Ok(())
}

fn write_trace_detail(
    trace: &Trace,
    path: &Path,
    files: &mut Vec<PathBuf>,
) -> Result<(), RunError> {
    let mut buf = Vec::new();
    trace
        .write_detail_csv(&mut buf)
        .map_err(|e| io_err("serializing trace detail", e))?;
    let text = String::from_utf8(buf).expect("csv is utf-8");
    write_file(path, &text)?;
    files.push(path.to_path_buf());
    Ok(())
}

/// Deterministic expected-error curve matched to the configured game: the
/// coupled recurrence for synthetic and market systems, the matching
/// recurrence for the matching game.
fn theory_curve(config: &ExperimentConfig, steps: usize) -> Result<Vec<Vec<f64>>, RunError> {
    let spec = config.require_system()?.build()?;
    match config.game {
        Some(GameConfig::Matching { .. }) => {
            let (i, j) = (spec.agent(0), spec.agent(1));
            let mut e = i.initial_error();
            let mut rows = vec![vec![e, e]];
            for _ in 0..steps {
                e = step_matching(i, j, 1.0 - e)?;
                rows.push(vec![e, e]);
            }
            Ok(rows)
        }
        _ => {
            let trajectory = coupled_trajectory(&spec, &spec.initial_state(), steps)?;
            Ok(trajectory
                .states
                .iter()
                .map(|s| s.as_slice().to_vec())
                .collect())
        }
    }
}

fn run_compare(
    config: &ExperimentConfig,
    out_dir: &Path,
    files: &mut Vec<PathBuf>,
    summary: &mut String,
) -> Result<(), RunError> {
    if matches!(config.game, Some(GameConfig::Coordination { .. })) {
        return Err(RunError::Validation(
            "compare mode does not support the coordination game; use the shoham preset".into(),
        ));
    }
    let steps = config.steps_or(100);
    let runs = config.runs_or(100);
    let game = config.build_game(steps)?;
    let theory = theory_curve(config, steps)?;
    let sim = monte_carlo(&game, runs, config.seed)?;
    let agents = sim.mean[0].len();
    if theory[0].len() != agents {
        return Err(RunError::Validation(format!(
            "theory curve has {} agents but the game has {agents}",
            theory[0].len()
        )));
    }

    let mut csv = String::from("step,agent,expected_error,mean_error,stderr\n");
    let mut max_dev = 0.0f64;
    for t in 0..=steps {
        for agent in 0..agents {
            let expected = theory[t][agent];
            let mean = sim.mean[t][agent];
            max_dev = max_dev.max((expected - mean).abs());
            let _ = writeln!(
                csv,
                "{t},{agent},{expected},{mean},{}",
                sim.stderr[t][agent]
            );
        }
    }
    let path = out_dir.join("compare.csv");
    write_file(&path, &csv)?;
    files.push(path);
    let _ = writeln!(summary, "steps: {steps}\nruns: {runs}");
    let _ = writeln!(summary, "max |expected - mean| over all steps: {max_dev}");
    for agent in 0..agents {
        let _ = writeln!(
            summary,
            "final: agent {agent} expected {} simulated {}",
            theory[steps][agent], sim.mean[steps][agent]
        );
    }
    Ok(())
}

fn run_surface(
    config: &ExperimentConfig,
    out_dir: &Path,
    files: &mut Vec<PathBuf>,
    summary: &mut String,
) -> Result<(), RunError> {
    let spec = config.require_system()?.build()?;
    let resolution = config.resolution_or_default();
    let surface = error_surface(
        &spec,
        resolution,
        config.tolerance_or_default(),
        config.max_iterations_or_default(),
    )?;
    let mut csv = String::from("I_ij,I_ji,final_error_i\n");
    for (x, &on_i) in surface.axis.iter().enumerate() {
        for (y, &on_j) in surface.axis.iter().enumerate() {
            let _ = writeln!(csv, "{on_i},{on_j},{}", surface.values[x][y]);
        }
    }
    let path = out_dir.join("surface.csv");
    write_file(&path, &csv)?;
    files.push(path);
    let _ = writeln!(summary, "resolution: {resolution}x{resolution}");
    let _ = writeln!(
        summary,
        "corner final errors: (0,0)={} (1,1)={}",
        surface.values[0][0],
        surface.values[resolution - 1][resolution - 1]
    );
    Ok(())
}

fn run_field(
    config: &ExperimentConfig,
    out_dir: &Path,
    files: &mut Vec<PathBuf>,
    summary: &mut String,
) -> Result<(), RunError> {
    let spec = config.require_system()?.build()?;
    let resolution = config.resolution_or_default();
    let field = vector_field(&spec, resolution)?;
    let mut csv = String::from("e_i,e_j,e_i_next,e_j_next\n");
    for (x, &e_i) in field.axis.iter().enumerate() {
        for (y, &e_j) in field.axis.iter().enumerate() {
            let (ni, nj) = field.arrows[x][y];
            let _ = writeln!(csv, "{e_i},{e_j},{ni},{nj}");
        }
    }
    let path = out_dir.join("field.csv");
    write_file(&path, &csv)?;
    files.push(path);
    let _ = writeln!(summary, "resolution: {resolution}x{resolution}");
    Ok(())
}

fn run_pac(
    config: &ExperimentConfig,
    out_dir: &Path,
    files: &mut Vec<PathBuf>,
    summary: &mut String,
) -> Result<(), RunError> {
    let pac = config.pac.as_ref().expect("validated");
    let initial_error = pac.initial_error.unwrap_or(1.0);
    let problem = match (pac.hypothesis_count, pac.action_count, pac.world_count) {
        (Some(h), _, _) => PacProblem::new(h, pac.epsilon, pac.gamma, initial_error)?,
        (None, Some(a), Some(w)) => {
            PacProblem::from_action_space(a, w, pac.epsilon, pac.gamma, initial_error)?
        }
        _ => unreachable!("validated"),
    };
    let m = sample_complexity(&problem);
    let _ = writeln!(summary, "sample complexity m = {m}");
    if problem.gamma_is_large() {
        let _ = writeln!(
            summary,
            "warning: gamma {} is large; the learning-rate bound assumes it is negligible",
            pac.gamma
        );
    }
    let mut csv = String::from("quantity,value\n");
    let _ = writeln!(csv, "epsilon,{}", pac.epsilon);
    let _ = writeln!(csv, "gamma,{}", pac.gamma);
    let _ = writeln!(csv, "sample_complexity,{m}");
    if initial_error > 0.0 {
        let samples = pac.samples.unwrap_or(m).max(1);
        let bound = learning_rate_lower_bound(initial_error, pac.epsilon, samples)?;
        let _ = writeln!(csv, "learning_rate_lower_bound,{bound}");
        let reached = fixed_target_error(initial_error, bound, samples)?;
        let _ = writeln!(csv, "expected_error_at_m,{reached}");
        let _ = writeln!(
            summary,
            "learning-rate lower bound over {samples} samples: {bound}"
        );
    }
    let path = out_dir.join("pac.csv");
    write_file(&path, &csv)?;
    files.push(path);
    Ok(())
}

fn estimate_row(csv: &mut String, subject: &str, parameter: &str, est: &RateEstimate) {
    let value = est.value.map(|v| v.to_string()).unwrap_or_default();
    let (lo, hi) = est
        .interval
        .map(|iv| (iv.lower.to_string(), iv.upper.to_string()))
        .unwrap_or_default();
    let _ = writeln!(
        csv,
        "{subject},{parameter},{value},{lo},{hi},{},{}",
        est.successes, est.trials
    );
}

fn run_estimate(
    config: &ExperimentConfig,
    out_dir: &Path,
    files: &mut Vec<PathBuf>,
    summary: &mut String,
) -> Result<(), RunError> {
    let trace = match &config.trace_in {
        Some(path) => {
            let file = fs::File::open(path)
                .map_err(|e| io_err(&format!("opening trace {path}"), e))?;
            Trace::from_detail_csv(std::io::BufReader::new(file))?
        }
        None => {
            let steps = config.steps_or(2000);
            let game = config.build_game(steps)?;
            game.run(crate::sim::derive_run_seed(config.seed, 0))?
        }
    };
    if let Some(trace_out) = &config.trace_out {
        write_trace_detail(&trace, Path::new(trace_out), files)?;
    }
    let mut csv =
        String::from("subject,parameter,estimate,wilson_lower,wilson_upper,successes,trials\n");
    for agent in 0..trace.agent_count {
        let rates = estimate_rates(&trace, agent)?;
        let subject = format!("agent{agent}");
        estimate_row(&mut csv, &subject, "change_rate", &rates.change);
        estimate_row(&mut csv, &subject, "learning_rate", &rates.learn);
        estimate_row(&mut csv, &subject, "retention_rate", &rates.retain);
    }
    for source in 0..trace.agent_count {
        for target in 0..trace.agent_count {
            if source == target {
                continue;
            }
            let impact = estimate_impact(&trace, source, target)?;
            estimate_row(
                &mut csv,
                &format!("agent{source}->agent{target}"),
                "impact",
                &impact,
            );
        }
    }
    let path = out_dir.join("estimates.csv");
    write_file(&path, &csv)?;
    files.push(path);
    let _ = writeln!(
        summary,
        "estimated {} agents over {} transitions",
        trace.agent_count,
        trace.steps()
    );
    Ok(())
}

fn run_shoham(
    config: &ExperimentConfig,
    out_dir: &Path,
    files: &mut Vec<PathBuf>,
    summary: &mut String,
) -> Result<(), RunError> {
    let mapping = config.shoham.clone().unwrap_or_default();
    let samples = repro::shoham_default_samples(&mapping);
    let curve = repro::shoham_comparison(&mapping, &samples)?;
    let mut csv = String::from("learning_rate,update_delay,theory_final_error,experiment_final_error\n");
    for k in 0..curve.learning_rates.len() {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            curve.learning_rates[k], curve.delays[k], curve.theory[k], curve.experiment[k]
        );
    }
    let path = out_dir.join("shoham.csv");
    write_file(&path, &csv)?;
    files.push(path);
    let _ = writeln!(summary, "samples: {}", curve.learning_rates.len());
    let _ = writeln!(summary, "max |theory - experiment|: {}", curve.max_deviation);
    Ok(())
}
