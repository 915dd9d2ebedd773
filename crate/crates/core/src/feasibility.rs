//! Danger zones, the schedulability condition and the baseline schedule builder.

use crate::error::{Error, Result};
use crate::model::{normalize_points, Cycles, FrequencyMenu, ScheduleFunction, StepPoint, TaskSet, Time, FREQ_TOL};

/// Start of each task's danger zone plus the frame end.
///
/// `start(k)` is the latest time task `k` may start and still guarantee that
/// it and all later tasks finish by the deadline at top speed;
/// `start(N)` is the deadline.
#[derive(Debug, Clone, PartialEq)]
pub struct DangerZones {
    z: Vec<Time>,
}

impl DangerZones {
    /// `z_k = D - (1/f_M) * sum_{i >= k} w_i`, computed from exact integer
    /// suffix sums so no error accumulates along the chain.
    pub fn from_wcecs(wcecs: &[Cycles], deadline: Time, f_max: f64) -> Self {
        let n = wcecs.len();
        let mut z = vec![deadline; n + 1];
        let mut suffix: Cycles = 0;
        for k in (0..n).rev() {
            suffix += wcecs[k];
            z[k] = deadline - suffix as f64 / f_max;
        }
        Self { z }
    }

    pub(crate) fn from_raw(z: Vec<Time>) -> Self {
        Self { z }
    }

    pub fn start(&self, k: usize) -> Time {
        self.z[k]
    }

    /// Time by which task `k` must finish: the next task's danger zone start.
    pub fn limit(&self, k: usize) -> Time {
        self.z[k + 1]
    }

    pub fn deadline(&self) -> Time {
        self.z[self.z.len() - 1]
    }

    pub fn as_slice(&self) -> &[Time] {
        &self.z
    }

    pub fn task_count(&self) -> usize {
        self.z.len() - 1
    }
}

pub fn danger_zones(ts: &TaskSet, menu: &FrequencyMenu) -> DangerZones {
    DangerZones::from_wcecs(&ts.wcecs(), ts.deadline(), menu.max())
}

/// First step found violating the schedulability condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub task: usize,
    pub step_start: Time,
    /// Right end of the offending step, clipped to the danger zone start.
    pub t: Time,
    pub frequency: f64,
    pub required: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Schedulability {
    Feasible,
    Violated(Violation),
}

impl Schedulability {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Schedulability::Feasible)
    }
}

/// Checks `S_k(t) >= w_k / (z_{k+1} - t)` for every task and every
/// `t in [0, z_k)`.
///
/// Each step `[a, b)` is tested once against the supremum of the right-hand
/// side on that step, reached at `min(b, z_k)`.
pub fn check_schedulability(
    schedules: &[ScheduleFunction],
    ts: &TaskSet,
    menu: &FrequencyMenu,
) -> Result<Schedulability> {
    if schedules.len() != ts.len() {
        return Err(Error::LengthMismatch { expected: ts.len(), got: schedules.len() });
    }
    let zones = danger_zones(ts, menu);
    Ok(check_against_zones(schedules, &ts.wcecs(), &zones))
}

pub(crate) fn check_against_zones(
    schedules: &[ScheduleFunction],
    wcecs: &[Cycles],
    zones: &DangerZones,
) -> Schedulability {
    for (k, s) in schedules.iter().enumerate() {
        let zk = zones.start(k);
        let horizon = zones.limit(k);
        let w = wcecs[k] as f64;
        for (a, b, f) in s.steps() {
            if a >= zk {
                break;
            }
            let end = b.min(zk);
            let required = w / (horizon - end);
            if f * (1.0 + FREQ_TOL) < required {
                return Schedulability::Violated(Violation { task: k, step_start: a, t: end, frequency: f, required });
            }
        }
    }
    Schedulability::Feasible
}

/// Lowest-frequency step function meeting `f >= work / (horizon - t)`:
/// `ceil(work / (horizon - t))` before `horizon - work / f_M`, `f_M` after.
///
/// Breakpoints sit exactly at `horizon - work / f_k` for each attained `f_k`.
pub fn requirement_schedule(work: f64, horizon: Time, menu: &FrequencyMenu) -> ScheduleFunction {
    let freqs = menu.freqs();
    let last = freqs.len() - 1;
    let mut pts = Vec::with_capacity(freqs.len());
    let mut prev_bp = f64::NEG_INFINITY;
    for (m, &f) in freqs.iter().enumerate() {
        let bp = horizon - work / f;
        if bp > 0.0 || m == last {
            pts.push(StepPoint::new(prev_bp.max(0.0), f));
        }
        prev_bp = bp;
    }
    normalize_points(pts).expect("requirement schedule has at least one point")
}

/// Feasibility-tight schedules: each task runs at the slowest menu frequency
/// that still lets its WCEC finish by the next danger zone.
pub fn build_baseline_schedules(ts: &TaskSet, menu: &FrequencyMenu) -> Vec<ScheduleFunction> {
    let zones = danger_zones(ts, menu);
    ts.tasks().iter().enumerate().map(|(k, t)| requirement_schedule(t.wcec as f64, zones.limit(k), menu)).collect()
}
