//! Battery simulation over a planned path.
//!
//! Three coupled relations are evaluated per step `t` (the step index is the
//! only clock):
//!
//! * consumption: `consumption[t] = factor(step t) * consumption_factor`
//! * power state: `remaining[t] = remaining[t-1] - consumption[t] + charging[t]`,
//!   starting from `capacity`
//! * the run halts before the first step that would leave `remaining < 0`.

use thiserror::Error;

use crate::planners::{CoveragePlanner, Path, PlanError};
use crate::terrain::{classify_step, Position, StepClass, TerrainMap};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation parameters: {0}")]
    InvalidParams(String),
    #[error("path leaves the free cells or makes a non-adjacent move at step {0}")]
    InvalidPath(usize),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

pub const DEFAULT_CAPACITY: f64 = 100.0;
pub const DEFAULT_CONSUMPTION_FACTOR: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub capacity: f64,
    pub consumption_factor: f64,
    /// Energy supplied at each step; missing entries are zero.
    pub charging: Vec<f64>,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            capacity: DEFAULT_CAPACITY,
            consumption_factor: DEFAULT_CONSUMPTION_FACTOR,
            charging: Vec::new(),
        }
    }
}

impl SimParams {
    pub fn new(capacity: f64, consumption_factor: f64) -> Result<SimParams, SimError> {
        let p = SimParams {
            capacity,
            consumption_factor,
            charging: Vec::new(),
        };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<(), SimError> {
        if !(self.capacity.is_finite() && self.capacity > 0.0) {
            return Err(SimError::InvalidParams(format!("capacity must be > 0, got {}", self.capacity)));
        }
        if !(self.consumption_factor.is_finite() && self.consumption_factor > 0.0) {
            return Err(SimError::InvalidParams(format!(
                "consumption factor must be > 0, got {}",
                self.consumption_factor
            )));
        }
        if let Some(c) = self.charging.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(SimError::InvalidParams(format!("charging entries must be >= 0, got {c}")));
        }
        Ok(())
    }

    pub fn charging_at(&self, t: usize) -> f64 {
        self.charging.get(t).copied().unwrap_or(0.0)
    }

    pub fn scaled(&self, k: f64) -> SimParams {
        SimParams {
            consumption_factor: self.consumption_factor * k,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Termination {
    PathComplete,
    BatteryDepleted,
}

impl Termination {
    pub fn label(self) -> &'static str {
        match self {
            Termination::PathComplete => "path_complete",
            Termination::BatteryDepleted => "battery_depleted",
        }
    }
}

fn step_classes(path: &Path, map: &TerrainMap) -> Result<Vec<StepClass>, SimError> {
    if !map.is_free(path.start) {
        return Err(SimError::InvalidPath(0));
    }
    path.positions()
        .zip(path.steps.iter().copied())
        .enumerate()
        .map(|(t, (a, b))| match (map.level(a), map.level(b)) {
            (Some(la), Some(lb)) if a.is_adjacent(b) => Ok(classify_step(la, lb)),
            _ => Err(SimError::InvalidPath(t)),
        })
        .collect()
}

/// Per-step consumption along `path`.
pub fn power_consumption(path: &Path, map: &TerrainMap, consumption_factor: f64) -> Result<Vec<f64>, SimError> {
    Ok(step_classes(path, map)?
        .into_iter()
        .map(|c| c.factor() * consumption_factor)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerTrace {
    /// Remaining charge after each executed step.
    pub remaining: Vec<f64>,
    pub terminated: Termination,
}

/// Threads the charge recurrence through `consumption`, stopping before the
/// first step that would overdraw the battery.
pub fn power_state(params: &SimParams, consumption: &[f64]) -> PowerTrace {
    let mut remaining = Vec::with_capacity(consumption.len());
    let mut charge = params.capacity;
    for (t, c) in consumption.iter().enumerate() {
        let next = charge - c + params.charging_at(t);
        if next < 0.0 {
            return PowerTrace {
                remaining,
                terminated: Termination::BatteryDepleted,
            };
        }
        remaining.push(next);
        charge = next;
    }
    PowerTrace {
        remaining,
        terminated: Termination::PathComplete,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub planner: String,
    pub path: Path,
    /// One entry per executed step.
    pub consumption: Vec<f64>,
    pub remaining: Vec<f64>,
    pub total_consumed: f64,
    pub steps_completed: usize,
    pub terminated: Termination,
    /// Sum of executed step factors in tenths (1.9 -> 19); exact, and
    /// proportional to `total_consumed`.
    pub energy_tenths: u64,
}

impl SimResult {
    pub fn completed(&self) -> bool {
        self.terminated == Termination::PathComplete
    }

    /// Distinct cells entered, start included, over the executed steps.
    pub fn cells_covered(&self) -> usize {
        let executed = std::iter::once(self.path.start).chain(self.path.steps[..self.steps_completed].iter().copied());
        executed.collect::<std::collections::HashSet<Position>>().len()
    }

    /// `t,row,col,consumption,remaining`, one row per executed step; the
    /// position is where step `t` ends.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,row,col,consumption,remaining\n");
        self.write_csv_rows(&mut out, "");
        out
    }

    pub(crate) fn write_csv_rows(&self, out: &mut String, prefix: &str) {
        for t in 0..self.steps_completed {
            let p = self.path.steps[t];
            out.push_str(&format!(
                "{prefix}{t},{},{},{},{}\n",
                p.row, p.col, self.consumption[t], self.remaining[t]
            ));
        }
    }
}

/// Plans a path and simulates the battery along it.
pub fn run(
    map: &TerrainMap,
    planner: &dyn CoveragePlanner,
    start: Position,
    params: &SimParams,
) -> Result<SimResult, SimError> {
    params.check()?;
    let path = planner.plan(map, start)?;
    simulate_path(map, path, planner.name(), params)
}

/// Simulates an already planned path.
pub fn simulate_path(map: &TerrainMap, path: Path, planner: String, params: &SimParams) -> Result<SimResult, SimError> {
    params.check()?;
    let classes = step_classes(&path, map)?;
    let mut consumption: Vec<f64> = classes
        .iter()
        .map(|c| c.factor() * params.consumption_factor)
        .collect();
    let trace = power_state(params, &consumption);
    let steps_completed = trace.remaining.len();
    consumption.truncate(steps_completed);
    let energy_tenths: u64 = classes[..steps_completed].iter().map(|c| c.tenths()).sum();
    Ok(SimResult {
        planner,
        path,
        // from the exact tenths count rather than a running float sum, so equal
        // energy gives bit-equal totals and totals order like the tenths
        total_consumed: energy_tenths as f64 / 10.0 * params.consumption_factor,
        energy_tenths,
        consumption,
        remaining: trace.remaining,
        steps_completed,
        terminated: trace.terminated,
    })
}
