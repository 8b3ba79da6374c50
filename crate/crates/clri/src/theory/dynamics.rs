//! Multi-agent error dynamics: trajectories, fixed points, and the
//! two-agent surface and vector-field sweeps.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::theory::step::expected_volatility;
use crate::theory::types::{
    ErrorState, FixedPointKind, FixedPointResult, SystemSpec, Trajectory,
};

/// Default convergence tolerance for fixed-point iteration.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
/// Default iteration budget for fixed-point iteration.
pub const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;
/// Default grid resolution for surface and field sweeps.
pub const DEFAULT_RESOLUTION: usize = 50;

/// Consecutive 2-cycle detections required before declaring oscillation.
const OSCILLATION_STREAK: usize = 10;

/// One synchronous update: every agent's volatility is computed from the
/// current state, then every error advances simultaneously. Returns the new
/// state and whether any component had to be clamped into [0, 1].
pub fn coupled_step(spec: &SystemSpec, state: &ErrorState) -> Result<(ErrorState, bool)> {
    if state.len() != spec.agent_count() {
        return Err(Error::DimensionMismatch {
            context: "error state vs agent count",
            expected: spec.agent_count(),
            actual: state.len(),
        });
    }
    let mut next = Vec::with_capacity(state.len());
    let mut clamped = false;
    for i in 0..spec.agent_count() {
        let v = expected_volatility(spec, state, i)?;
        let agent = spec.agent(i);
        let line = crate::theory::step::step_line(agent, v)?;
        let raw = line.eval(state.get(i));
        let bounded = raw.clamp(0.0, 1.0);
        if bounded != raw {
            clamped = true;
        }
        next.push(bounded);
    }
    Ok((ErrorState::new(next)?, clamped))
}

/// Iterates `coupled_step` for `steps` steps, recording every intermediate
/// state (including the initial one).
pub fn coupled_trajectory(
    spec: &SystemSpec,
    initial: &ErrorState,
    steps: usize,
) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(steps + 1);
    states.push(initial.clone());
    let mut clamped = false;
    let mut current = initial.clone();
    for _ in 0..steps {
        let (next, step_clamped) = coupled_step(spec, &current)?;
        clamped |= step_clamped;
        states.push(next.clone());
        current = next;
    }
    Ok(Trajectory { states, clamped })
}

/// Iterates the coupled step until the state settles.
///
/// Convergence is a max-norm move below `tol`. A 2-cycle is declared when
/// the state returns to where it was two steps ago (within `tol`) while
/// still moving step to step, sustained for ten consecutive iterations.
/// Exhausting `max_iter` without either reports `DivergedToBoundary`.
pub fn fixed_point(
    spec: &SystemSpec,
    initial: &ErrorState,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPointResult> {
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    let mut prev2: Option<ErrorState> = None;
    let mut prev = initial.clone();
    let mut streak = 0usize;
    for iteration in 1..=max_iter {
        let (current, _) = coupled_step(spec, &prev)?;
        let step_move = current.max_distance(&prev);
        if step_move < tol {
            return Ok(FixedPointResult {
                kind: FixedPointKind::Converged,
                state: current,
                alternate: None,
                iterations: iteration,
            });
        }
        if let Some(two_back) = &prev2 {
            if current.max_distance(two_back) < tol {
                streak += 1;
                if streak >= OSCILLATION_STREAK {
                    return Ok(FixedPointResult {
                        kind: FixedPointKind::Oscillating,
                        state: prev.clone(),
                        alternate: Some(current),
                        iterations: iteration,
                    });
                }
            } else {
                streak = 0;
            }
        }
        prev2 = Some(std::mem::replace(&mut prev, current));
    }
    Ok(FixedPointResult {
        kind: FixedPointKind::DivergedToBoundary,
        state: prev,
        alternate: None,
        iterations: max_iter,
    })
}

/// Final-error surface for a two-agent system over an impact grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSurface {
    /// Grid coordinates shared by both axes, `resolution` evenly spaced
    /// points covering [0, 1].
    pub axis: Vec<f64>,
    /// `values[x][y]` is agent 0's fixed-point error when the impact felt
    /// by agent 0 is `axis[x]` and the impact felt by agent 1 is `axis[y]`.
    pub values: Vec<Vec<f64>>,
}

impl ErrorSurface {
    pub fn resolution(&self) -> usize {
        self.axis.len()
    }
}

fn two_agent_guard(spec: &SystemSpec) -> Result<()> {
    if spec.agent_count() != 2 {
        return Err(Error::DimensionMismatch {
            context: "surface and field sweeps need exactly two agents",
            expected: 2,
            actual: spec.agent_count(),
        });
    }
    Ok(())
}

fn grid_axis(resolution: usize) -> Result<Vec<f64>> {
    if resolution < 2 {
        return Err(Error::domain(format!(
            "grid resolution must be at least 2, got {resolution}"
        )));
    }
    Ok((0..resolution)
        .map(|k| k as f64 / (resolution - 1) as f64)
        .collect())
}

/// Sweeps the two impact directions over a `resolution x resolution` grid
/// and records agent 0's final error at each point, starting each
/// fixed-point iteration from the base spec's initial state.
///
/// The first axis varies the impact exerted *on* agent 0 (by agent 1), the
/// second the impact on agent 1. The felt impact is the one that dominates
/// an agent's final error: it directly drives that agent's volatility.
pub fn error_surface(
    base: &SystemSpec,
    resolution: usize,
    tol: f64,
    max_iter: usize,
) -> Result<ErrorSurface> {
    two_agent_guard(base)?;
    let axis = grid_axis(resolution)?;
    let initial = base.initial_state();
    let values = axis
        .par_iter()
        .map(|&on_agent0| -> Result<Vec<f64>> {
            let mut row = Vec::with_capacity(axis.len());
            for &on_agent1 in &axis {
                let mut spec = base.clone();
                spec.impacts_mut().set(1, 0, on_agent0)?;
                spec.impacts_mut().set(0, 1, on_agent1)?;
                let result = fixed_point(&spec, &initial, tol, max_iter)?;
                row.push(result.state.get(0));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorSurface { axis, values })
}

/// Expected one-step displacement field over the two agents' error square.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub axis: Vec<f64>,
    /// `arrows[x][y]` maps the state `(axis[x], axis[y])` to its expected
    /// successor `(e0', e1')`.
    pub arrows: Vec<Vec<(f64, f64)>>,
}

/// One synchronous expected step evaluated at every grid point of the
/// `(e_0, e_1)` unit square.
pub fn vector_field(spec: &SystemSpec, resolution: usize) -> Result<VectorField> {
    two_agent_guard(spec)?;
    let axis = grid_axis(resolution)?;
    let mut arrows = Vec::with_capacity(axis.len());
    for &e0 in &axis {
        let mut row = Vec::with_capacity(axis.len());
        for &e1 in &axis {
            let state = ErrorState::new(vec![e0, e1])?;
            let (next, _) = coupled_step(spec, &state)?;
            row.push((next.get(0), next.get(1)));
        }
        arrows.push(row);
    }
    Ok(VectorField { axis, arrows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::{AgentSpec, ImpactMatrix, LearningParams};
    use approx::assert_abs_diff_eq;

    fn agent(actions: usize, c: f64, l: f64, r: f64, e0: f64) -> AgentSpec {
        AgentSpec::new(actions, LearningParams::new(c, l, r).unwrap(), e0).unwrap()
    }

    /// Two agents as in the vector-plot setting: |A|=20, l=.2, r=1,
    /// c_0=.5, c_1=1, impact on agent 0 is .3 and on agent 1 is .1.
    fn vector_plot_spec(e0: f64, e1: f64) -> SystemSpec {
        let i = agent(20, 0.5, 0.2, 1.0, e0);
        let j = agent(20, 1.0, 0.2, 1.0, e1);
        let impacts = ImpactMatrix::from_rows(&[vec![0.0, 0.1], vec![0.3, 0.0]]).unwrap();
        SystemSpec::new(vec![i, j], impacts).unwrap()
    }

    #[test]
    fn coupled_step_hand_value() {
        // From (1, 1), agent 0's expected error after one step is 16.01/19.
        let spec = vector_plot_spec(1.0, 1.0);
        let traj = coupled_trajectory(&spec, &spec.initial_state(), 1).unwrap();
        assert_abs_diff_eq!(traj.last().get(0), 16.01 / 19.0, epsilon = 1e-12);
        assert_abs_diff_eq!(traj.last().get(0), 0.8426, epsilon = 1e-4);
    }

    #[test]
    fn decoupled_agents_decay_independently() {
        let spec = SystemSpec::new(
            vec![agent(20, 1.0, 0.2, 1.0, 1.0), agent(20, 1.0, 0.4, 1.0, 0.5)],
            ImpactMatrix::zero(2),
        )
        .unwrap();
        let traj = coupled_trajectory(&spec, &spec.initial_state(), 10).unwrap();
        for (t, state) in traj.states.iter().enumerate() {
            assert_abs_diff_eq!(state.get(0), 0.8f64.powi(t as i32), epsilon = 1e-12);
            assert_abs_diff_eq!(state.get(1), 0.5 * 0.6f64.powi(t as i32), epsilon = 1e-12);
        }
        assert!(!traj.clamped);
    }

    #[test]
    fn trajectory_can_overshoot_before_settling() {
        // From (0.05, 0.95) the low-error agent is dragged up by the
        // other's churn before both settle: a rise then a fall.
        let spec = vector_plot_spec(0.05, 0.95);
        let traj = coupled_trajectory(&spec, &spec.initial_state(), 200).unwrap();
        let e0: Vec<f64> = traj.states.iter().map(|s| s.get(0)).collect();
        let peak = e0.iter().cloned().fold(f64::MIN, f64::max);
        let peak_at = e0.iter().position(|&x| x == peak).unwrap();
        assert!(peak > e0[0] + 0.05, "no initial rise: peak {peak} vs start {}", e0[0]);
        assert!(
            e0[e0.len() - 1] < peak - 0.05,
            "no decline after the peak: final {} vs peak {peak}",
            e0[e0.len() - 1]
        );
        assert!(peak_at > 0 && peak_at < e0.len() - 1);
    }

    #[test]
    fn fixed_point_error_progression() {
        // Single agent under fixed volatility 0.2 converges to 19/43.2.
        let spec = SystemSpec::new(vec![agent(20, 1.0, 0.3, 1.0, 0.95)], ImpactMatrix::zero(1))
            .unwrap()
            .with_fixed_volatility(0.2)
            .unwrap();
        let result = fixed_point(&spec, &spec.initial_state(), 1e-9, 10_000).unwrap();
        assert_eq!(result.kind, FixedPointKind::Converged);
        assert_abs_diff_eq!(result.state.get(0), 19.0 / 43.2, epsilon = 1e-6);

        // The converged point moves by less than the tolerance.
        let (next, _) = coupled_step(&spec, &result.state).unwrap();
        assert!(next.max_distance(&result.state) < 1e-9);
    }

    #[test]
    fn fixed_point_detects_two_cycle() {
        // c=l=1, r=0 and no volatility gives e' = 1 - e exactly, a slope of
        // -1 through (0.5, 0.5): the iteration flips between 0.3 and 0.7.
        let spec = SystemSpec::new(vec![agent(20, 1.0, 1.0, 0.0, 0.3)], ImpactMatrix::zero(1))
            .unwrap();
        let result = fixed_point(&spec, &spec.initial_state(), 1e-9, 10_000).unwrap();
        assert_eq!(result.kind, FixedPointKind::Oscillating);
        let a = result.state.get(0);
        let b = result.alternate.as_ref().unwrap().get(0);
        let mut pair = [a, b];
        pair.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(pair[0], 0.3, epsilon = 1e-9);
        assert_abs_diff_eq!(pair[1], 0.7, epsilon = 1e-9);
    }

    #[test]
    fn fixed_point_zero_impact_reaches_zero() {
        let spec = SystemSpec::new(
            vec![agent(20, 1.0, 0.2, 1.0, 1.0), agent(20, 1.0, 0.2, 1.0, 1.0)],
            ImpactMatrix::zero(2),
        )
        .unwrap();
        let result = fixed_point(&spec, &spec.initial_state(), 1e-9, 1_000_000).unwrap();
        assert_eq!(result.kind, FixedPointKind::Converged);
        assert!(result.state.get(0) < 1e-8);
        assert!(result.state.get(1) < 1e-8);
    }

    #[test]
    fn fixed_point_budget_exhaustion_reported() {
        let spec = vector_plot_spec(1.0, 1.0);
        let result = fixed_point(&spec, &spec.initial_state(), 1e-12, 3).unwrap();
        assert_eq!(result.kind, FixedPointKind::DivergedToBoundary);
        assert_eq!(result.iterations, 3);
        assert!(fixed_point(&spec, &spec.initial_state(), 0.0, 10).is_err());
    }

    /// Final-error surface base: l=.2, c=1, r=1, |A|=20 for both agents,
    /// starting from (1, 1).
    fn surface_base() -> SystemSpec {
        SystemSpec::new(
            vec![agent(20, 1.0, 0.2, 1.0, 1.0), agent(20, 1.0, 0.2, 1.0, 1.0)],
            ImpactMatrix::zero(2),
        )
        .unwrap()
    }

    #[test]
    fn surface_corners_and_asymmetry() {
        let surface = error_surface(&surface_base(), 11, 1e-9, 1_000_000).unwrap();
        let at = |x: f64, y: f64| {
            let ix = (x * 10.0).round() as usize;
            let iy = (y * 10.0).round() as usize;
            surface.values[ix][iy]
        };
        assert!(at(1.0, 1.0) >= 0.9, "corner (1,1): {}", at(1.0, 1.0));
        assert!(at(0.0, 0.0) <= 0.01, "corner (0,0): {}", at(0.0, 0.0));
        // The impact felt by agent 0 dominates its final error.
        assert!(
            at(0.9, 0.1) > at(0.1, 0.9),
            "expected asymmetry: {} vs {}",
            at(0.9, 0.1),
            at(0.1, 0.9)
        );
        // Monotone in both impact directions across the grid, up to the
        // resolution of the fixed-point solves (stopping-time wobble keeps
        // the near-zero plateau from being exactly flat).
        for x in 0..11 {
            for y in 0..10 {
                assert!(
                    surface.values[x][y + 1] >= surface.values[x][y] - 1e-7,
                    "not monotone in felt impact at ({x},{y})"
                );
                assert!(
                    surface.values[y + 1][x] >= surface.values[y][x] - 1e-7,
                    "not monotone in exerted impact at ({y},{x})"
                );
            }
        }
    }

    #[test]
    fn surface_requires_two_agents() {
        let spec = SystemSpec::new(vec![agent(20, 1.0, 0.2, 1.0, 1.0)], ImpactMatrix::zero(1))
            .unwrap();
        assert!(error_surface(&spec, 5, 1e-9, 1000).is_err());
        assert!(error_surface(&surface_base(), 1, 1e-9, 1000).is_err());
    }

    #[test]
    fn field_fixed_points_and_contraction() {
        let spec = vector_plot_spec(1.0, 1.0);
        let field = vector_field(&spec, 11).unwrap();
        // Zero error with r=1 stays put.
        assert_eq!(field.arrows[0][0], (0.0, 0.0));
        // Hand value at (1, 1).
        assert_abs_diff_eq!(field.arrows[10][10].0, 16.01 / 19.0, epsilon = 1e-12);

        // Arrows shrink near the attractor relative to far away.
        let fp = fixed_point(&spec, &spec.initial_state(), 1e-12, 1_000_000).unwrap();
        let (fx, fy) = (fp.state.get(0), fp.state.get(1));
        let displacement = |e0: f64, e1: f64| {
            let state = ErrorState::new(vec![e0, e1]).unwrap();
            let (next, _) = coupled_step(&spec, &state).unwrap();
            ((next.get(0) - e0).powi(2) + (next.get(1) - e1).powi(2)).sqrt()
        };
        let near = displacement((fx + 0.05).min(1.0), fy);
        let far = displacement((fx + 0.5).min(1.0), fy);
        assert!(near < far, "near {near} vs far {far}");
    }
}
