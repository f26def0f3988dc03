use super::{control_signals, transition, ControlSignals, FsmState, Intention, OrchError, ShowState};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioStep {
    pub t_ms: u64,
    pub intent: Intention,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub t_ms: u64,
    pub intent: Intention,
    pub state: ShowState,
    pub signals: ControlSignals,
}

/// `AT <t_ms> INTENT <name>` per line, times non-decreasing; `#` starts a
/// comment.
pub fn parse_scenario(text: &str) -> Result<Vec<ScenarioStep>, OrchError> {
    let mut steps: Vec<ScenarioStep> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |reason: String| OrchError::Parse { line: i + 1, reason };
        let parts: Vec<&str> = line.split_whitespace().collect();
        let ["AT", t, "INTENT", name] = parts.as_slice() else {
            return Err(err(format!("expected `AT <t_ms> INTENT <name>`, got {line:?}")));
        };
        let t_ms: u64 = t.parse().map_err(|_| err(format!("bad time {t:?}")))?;
        let intent = Intention::parse(name).map_err(|e| err(e.to_string()))?;
        if steps.last().is_some_and(|s| s.t_ms > t_ms) {
            return Err(err("times must not decrease".into()));
        }
        steps.push(ScenarioStep { t_ms, intent });
    }
    Ok(steps)
}

/// Runs the steps from `start` and records the state and gates after each.
pub fn replay(start: FsmState, steps: &[ScenarioStep]) -> Vec<TraceEntry> {
    let mut fsm = start;
    steps
        .iter()
        .map(|s| {
            fsm = transition(fsm, s.intent);
            TraceEntry {
                t_ms: s.t_ms,
                intent: s.intent,
                state: fsm.current,
                signals: control_signals(fsm.current),
            }
        })
        .collect()
}
