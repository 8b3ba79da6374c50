//! Per-run simulation records.

use std::io::{self, BufRead, Write};

use crate::error::{Error, Result};

/// Flags for one (agent, world) pair across a single step transition.
/// `correct_after` compares the new decision against the target as it stood
/// *before* the step, which is the conditioning the rate definitions use.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WorldFlags {
    pub was_correct: bool,
    pub decision_changed: bool,
    pub correct_after: bool,
    pub target_changed: bool,
}

/// Flags for one step transition, indexed `[agent][world]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub flags: Vec<Vec<WorldFlags>>,
}

/// What was observable at one step: the drawn world and each agent's action
/// in it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepObservation {
    pub world: usize,
    pub actions: Vec<usize>,
}

/// Full record of one simulation run.
///
/// For a run of `n` steps, `errors` holds `n + 1` rows (the error before
/// each step plus the final state), while `observations` and `transitions`
/// hold `n` entries each.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub seed: u64,
    pub agent_count: usize,
    pub world_count: usize,
    pub errors: Vec<Vec<f64>>,
    pub observations: Vec<StepObservation>,
    pub transitions: Vec<Transition>,
}

impl Trace {
    pub fn steps(&self) -> usize {
        self.transitions.len()
    }

    pub fn error(&self, step: usize, agent: usize) -> f64 {
        self.errors[step][agent]
    }

    pub fn final_errors(&self) -> &[f64] {
        self.errors.last().expect("trace holds the initial error row")
    }

    /// Whether the agent changed any mapping during transition `step`.
    pub fn any_decision_change(&self, step: usize, agent: usize) -> bool {
        self.transitions[step].flags[agent]
            .iter()
            .any(|f| f.decision_changed)
    }

    /// Whether the agent's target moved anywhere during transition `step`.
    pub fn any_target_change(&self, step: usize, agent: usize) -> bool {
        self.transitions[step].flags[agent]
            .iter()
            .any(|f| f.target_changed)
    }

    /// Summary export: one row per (step, agent) with the error at that step
    /// and whether the decision/target changed during the step. The final
    /// row of each agent has no outgoing transition and reports 0 flags.
    pub fn write_summary_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "step,agent,error,delta_changed,target_changed")?;
        for (t, row) in self.errors.iter().enumerate() {
            for (agent, e) in row.iter().enumerate() {
                let (dc, tc) = if t < self.transitions.len() {
                    (
                        self.any_decision_change(t, agent) as u8,
                        self.any_target_change(t, agent) as u8,
                    )
                } else {
                    (0, 0)
                };
                writeln!(out, "{t},{agent},{e},{dc},{tc}")?;
            }
        }
        Ok(())
    }

    /// Detailed export: one row per (step, agent, world) transition with the
    /// four conditioning flags. This is the input schema for estimation.
    pub fn write_detail_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(
            out,
            "step,agent,world,was_correct,decision_changed,correct_after,target_changed"
        )?;
        for (t, transition) in self.transitions.iter().enumerate() {
            for (agent, worlds) in transition.flags.iter().enumerate() {
                for (w, f) in worlds.iter().enumerate() {
                    writeln!(
                        out,
                        "{t},{agent},{w},{},{},{},{}",
                        f.was_correct as u8,
                        f.decision_changed as u8,
                        f.correct_after as u8,
                        f.target_changed as u8
                    )?;
                }
            }
        }
        Ok(())
    }

    /// Reads a detail CSV back into a trace. Only the transition flags are
    /// reconstructed (with error rows recomputed under uniform world
    /// weights); observations are not part of the detail schema.
    pub fn from_detail_csv<R: BufRead>(input: R) -> Result<Trace> {
        let mut rows: Vec<(usize, usize, usize, WorldFlags)> = Vec::new();
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::domain("empty trace detail file"))?
            .map_err(|e| Error::domain(format!("trace detail read error: {e}")))?;
        let expected = "step,agent,world,was_correct,decision_changed,correct_after,target_changed";
        if header.trim() != expected {
            return Err(Error::domain(format!(
                "unexpected trace detail header: {header:?}"
            )));
        }
        for (lineno, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::domain(format!("trace detail read error: {e}")))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(Error::domain(format!(
                    "trace detail line {}: expected 7 fields, got {}",
                    lineno + 2,
                    fields.len()
                )));
            }
            let parse_idx = |s: &str, what: &str| -> Result<usize> {
                s.trim().parse().map_err(|_| {
                    Error::domain(format!("trace detail line {}: bad {what} {s:?}", lineno + 2))
                })
            };
            let parse_flag = |s: &str, what: &str| -> Result<bool> {
                match s.trim() {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(Error::domain(format!(
                        "trace detail line {}: bad {what} {other:?}",
                        lineno + 2
                    ))),
                }
            };
            rows.push((
                parse_idx(fields[0], "step")?,
                parse_idx(fields[1], "agent")?,
                parse_idx(fields[2], "world")?,
                WorldFlags {
                    was_correct: parse_flag(fields[3], "was_correct")?,
                    decision_changed: parse_flag(fields[4], "decision_changed")?,
                    correct_after: parse_flag(fields[5], "correct_after")?,
                    target_changed: parse_flag(fields[6], "target_changed")?,
                },
            ));
        }
        if rows.is_empty() {
            return Err(Error::domain("trace detail file has no data rows"));
        }
        let steps = rows.iter().map(|r| r.0).max().unwrap() + 1;
        let agent_count = rows.iter().map(|r| r.1).max().unwrap() + 1;
        let world_count = rows.iter().map(|r| r.2).max().unwrap() + 1;
        let blank = Transition {
            flags: vec![vec![WorldFlags::default(); world_count]; agent_count],
        };
        let mut transitions = vec![blank; steps];
        for (t, agent, world, flags) in rows {
            transitions[t].flags[agent][world] = flags;
        }
        let mut errors = Vec::with_capacity(steps + 1);
        for t in 0..steps {
            let row: Vec<f64> = (0..agent_count)
                .map(|a| {
                    transitions[t].flags[a]
                        .iter()
                        .filter(|f| !f.was_correct)
                        .count() as f64
                        / world_count as f64
                })
                .collect();
            errors.push(row);
        }
        errors.push(vec![f64::NAN; agent_count]); // final row unknown from flags alone
        Ok(Trace {
            seed: 0,
            agent_count,
            world_count,
            errors,
            observations: Vec::new(),
            transitions,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_trace() -> Trace {
        let f = |wc, dc, ca, tc| WorldFlags {
            was_correct: wc,
            decision_changed: dc,
            correct_after: ca,
            target_changed: tc,
        };
        Trace {
            seed: 7,
            agent_count: 2,
            world_count: 2,
            errors: vec![vec![1.0, 0.5], vec![0.5, 0.5], vec![0.0, 0.5]],
            observations: vec![
                StepObservation { world: 0, actions: vec![1, 0] },
                StepObservation { world: 1, actions: vec![0, 0] },
            ],
            transitions: vec![
                Transition {
                    flags: vec![
                        vec![f(false, true, true, false), f(false, false, false, true)],
                        vec![f(true, false, true, false), f(false, false, false, false)],
                    ],
                },
                Transition {
                    flags: vec![
                        vec![f(true, false, true, false), f(false, true, true, false)],
                        vec![f(true, false, true, false), f(false, false, false, false)],
                    ],
                },
            ],
        }
    }

    #[test]
    fn summary_csv_schema() {
        let mut buf = Vec::new();
        tiny_trace().write_summary_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "step,agent,error,delta_changed,target_changed"
        );
        assert_eq!(lines.next().unwrap(), "0,0,1,1,1");
        assert_eq!(text.lines().count(), 1 + 3 * 2);
        // Final row carries no transition flags.
        assert!(text.lines().last().unwrap().starts_with("2,1,0.5,0,0"));
    }

    #[test]
    fn detail_csv_round_trips_flags() {
        let trace = tiny_trace();
        let mut buf = Vec::new();
        trace.write_detail_csv(&mut buf).unwrap();
        let parsed = Trace::from_detail_csv(buf.as_slice()).unwrap();
        assert_eq!(parsed.transitions, trace.transitions);
        assert_eq!(parsed.agent_count, 2);
        assert_eq!(parsed.world_count, 2);
        assert_eq!(parsed.errors[0], vec![1.0, 0.5]);
    }

    #[test]
    fn detail_csv_rejects_malformed_input() {
        assert!(Trace::from_detail_csv("nonsense\n1,2".as_bytes()).is_err());
        let header = "step,agent,world,was_correct,decision_changed,correct_after,target_changed";
        assert!(Trace::from_detail_csv(format!("{header}\n0,0,0,2,0,0,0\n").as_bytes()).is_err());
        assert!(Trace::from_detail_csv(format!("{header}\n").as_bytes()).is_err());
    }
}
