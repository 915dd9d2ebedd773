//! Frequency menu, tasks, frames and step scheduling functions.
//!
//! Time and frequency are `f64`, cycle counts are `u64`. Tasks are addressed
//! by their 0-based position in execution order; `TaskSpec::index` keeps the
//! 1-based label used in configuration files and reports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Time = f64;
pub type Freq = f64;
pub type Cycles = u64;

/// Relative tolerance used when comparing a frequency to a required speed.
pub const FREQ_TOL: f64 = 1e-9;

/// Absolute time tolerance for a frame of length `deadline`.
pub fn time_tol(deadline: Time) -> Time {
    1e-9 * deadline.abs().max(1.0)
}

/// The discrete set of CPU frequencies, strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FrequencyMenu {
    freqs: Vec<Freq>,
}

impl FrequencyMenu {
    pub fn new(freqs: Vec<Freq>) -> Result<Self> {
        if freqs.is_empty() {
            return Err(Error::InvalidMenu("at least one frequency is required".into()));
        }
        if let Some(f) = freqs.iter().find(|f| !f.is_finite() || **f <= 0.0) {
            return Err(Error::InvalidMenu(format!("frequency {f} is not a positive number")));
        }
        if freqs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidMenu("frequencies must be strictly increasing".into()));
        }
        Ok(Self { freqs })
    }

    pub fn freqs(&self) -> &[Freq] {
        &self.freqs
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min(&self) -> Freq {
        self.freqs[0]
    }

    pub fn max(&self) -> Freq {
        self.freqs[self.freqs.len() - 1]
    }

    /// First menu frequency `>= x`, or the maximum when `x` exceeds it.
    /// Values `<= 0` map to the slowest frequency.
    pub fn ceil(&self, x: f64) -> Freq {
        let k = self.freqs.partition_point(|&f| f < x);
        self.freqs[k.min(self.freqs.len() - 1)]
    }

    /// Like [`ceil`](Self::ceil) but accepts a frequency that falls short of
    /// `x` by at most the relative tolerance [`FREQ_TOL`]. Guards against
    /// round-off turning an exact requirement into the next step.
    pub fn ceil_tol(&self, x: f64) -> Freq {
        self.ceil(x / (1.0 + FREQ_TOL))
    }

    /// Position of `f` in the menu, if it is a member.
    pub fn position(&self, f: Freq) -> Option<usize> {
        self.freqs.iter().position(|&g| g == f)
    }

    pub fn contains(&self, f: Freq) -> bool {
        self.position(f).is_some()
    }

    /// The frequency `steps` positions above `f` (saturating at the maximum).
    /// `f` need not be a member; its ceiling is used as the starting point.
    pub fn step_up(&self, f: Freq, steps: usize) -> Freq {
        let base = self.freqs.partition_point(|&g| g < f).min(self.freqs.len() - 1);
        self.freqs[(base + steps).min(self.freqs.len() - 1)]
    }
}

impl TryFrom<Vec<f64>> for FrequencyMenu {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<FrequencyMenu> for Vec<f64> {
    fn from(m: FrequencyMenu) -> Self {
        m.freqs
    }
}

/// A periodic task running once per frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    /// 1-based label; equals position + 1 inside a [`TaskSet`].
    pub index: usize,
    /// Assumed worst-case execution cycles.
    pub wcec: Cycles,
    /// Global bound on the cycles any job may ever need.
    pub global_wcec: Option<Cycles>,
    /// Jobs never need more than `wcec * (1 + overrun_factor)`.
    pub overrun_factor: Option<f64>,
    /// Percentile threshold used by the percentile kill policy.
    pub kappa: Option<Cycles>,
}

impl TaskSpec {
    pub fn new(index: usize, wcec: Cycles) -> Self {
        Self { index, wcec, global_wcec: None, overrun_factor: None, kappa: None }
    }

    pub fn with_global_wcec(mut self, w: Cycles) -> Self {
        self.global_wcec = Some(w);
        self
    }

    pub fn with_overrun_factor(mut self, alpha: f64) -> Self {
        self.overrun_factor = Some(alpha);
        self
    }

    pub fn with_kappa(mut self, kappa: Cycles) -> Self {
        self.kappa = Some(kappa);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.wcec == 0 {
            return Err(Error::InvalidTask(format!("task {}: wcec must be >= 1", self.index)));
        }
        if let Some(w) = self.global_wcec {
            if w < self.wcec {
                return Err(Error::InvalidTask(format!(
                    "task {}: global wcec {w} below wcec {}",
                    self.index, self.wcec
                )));
            }
        }
        if let Some(a) = self.overrun_factor {
            if !a.is_finite() || a < 0.0 {
                return Err(Error::InvalidTask(format!(
                    "task {}: overrun factor {a} must be a non-negative number",
                    self.index
                )));
            }
        }
        if let Some(k) = self.kappa {
            if k == 0 || k > self.wcec {
                return Err(Error::InvalidTask(format!("task {}: kappa {k} outside [1, {}]", self.index, self.wcec)));
            }
        }
        Ok(())
    }

    /// Upper bound on the total cycles of a job, from `W_i` or `w_i (1 + alpha)`.
    pub fn remaining_bound(&self) -> Option<f64> {
        self.global_wcec.map(|w| w as f64).or_else(|| self.overrun_factor.map(|a| self.wcec as f64 * (1.0 + a)))
    }
}

/// Tasks sharing one frame of length `deadline`, executed in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSet {
    tasks: Vec<TaskSpec>,
    deadline: Time,
}

impl TaskSet {
    /// Checks the structural invariants. The load condition depends on the
    /// frequency menu and is checked separately by [`TaskSet::check_load`].
    pub fn new(tasks: Vec<TaskSpec>, deadline: Time) -> Result<Self> {
        if tasks.is_empty() {
            return Err(Error::InvalidTaskSet("no tasks".into()));
        }
        if !deadline.is_finite() || deadline <= 0.0 {
            return Err(Error::InvalidTaskSet(format!("deadline {deadline} must be positive")));
        }
        for (pos, t) in tasks.iter().enumerate() {
            if t.index != pos + 1 {
                return Err(Error::InvalidTaskSet(format!(
                    "task at position {pos} has index {}, expected {}",
                    t.index,
                    pos + 1
                )));
            }
            t.validate()?;
        }
        Ok(Self { tasks, deadline })
    }

    /// Convenience constructor from plain WCECs.
    pub fn from_wcecs(wcecs: &[Cycles], deadline: Time) -> Result<Self> {
        let tasks = wcecs.iter().enumerate().map(|(i, &w)| TaskSpec::new(i + 1, w)).collect();
        Self::new(tasks, deadline)
    }

    pub fn tasks(&self) -> &[TaskSpec] {
        &self.tasks
    }

    pub fn task(&self, pos: usize) -> &TaskSpec {
        &self.tasks[pos]
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn deadline(&self) -> Time {
        self.deadline
    }

    pub fn wcecs(&self) -> Vec<Cycles> {
        self.tasks.iter().map(|t| t.wcec).collect()
    }

    pub fn total_wcec(&self) -> Cycles {
        self.tasks.iter().map(|t| t.wcec).sum()
    }

    /// Time needed to run every task's WCEC at the top frequency.
    pub fn max_speed_demand(&self, menu: &FrequencyMenu) -> Time {
        self.total_wcec() as f64 / menu.max()
    }

    /// `sum w_i / f_M <= D`.
    pub fn check_load(&self, menu: &FrequencyMenu) -> Result<()> {
        let demand = self.max_speed_demand(menu);
        if demand > self.deadline + time_tol(self.deadline) {
            return Err(Error::InvalidTaskSet(format!(
                "sum of wcec / f_M = {demand} exceeds deadline {}",
                self.deadline
            )));
        }
        Ok(())
    }

    /// Returns a copy with a different frame length.
    pub fn with_deadline(&self, deadline: Time) -> Result<Self> {
        Self::new(self.tasks.clone(), deadline)
    }

    pub(crate) fn task_mut(&mut self, pos: usize) -> &mut TaskSpec {
        &mut self.tasks[pos]
    }

    pub(crate) fn check_pos(&self, pos: usize) -> Result<()> {
        if pos >= self.tasks.len() {
            return Err(Error::TaskOutOfRange { index: pos, n: self.tasks.len() });
        }
        Ok(())
    }
}

/// One breakpoint of a step function: the value on `[t, next.t)` is `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepPoint {
    pub t: Time,
    pub f: Freq,
}

impl StepPoint {
    pub fn new(t: Time, f: Freq) -> Self {
        Self { t, f }
    }
}

/// Frequency chosen for a task as a function of its start time.
///
/// Intervals are left-closed, right-open; the last step extends to infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFunction {
    points: Vec<StepPoint>,
}

impl ScheduleFunction {
    /// Builds from already-normal points, checking the structural invariants.
    pub fn new(points: Vec<StepPoint>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::EmptySchedule);
        };
        if first.t != 0.0 {
            return Err(Error::InvalidSchedule(format!("first point at t = {}, expected 0", first.t)));
        }
        for p in &points {
            if !p.t.is_finite() || !p.f.is_finite() || p.f <= 0.0 {
                return Err(Error::InvalidSchedule(format!("bad point ({}, {})", p.t, p.f)));
            }
        }
        if points.windows(2).any(|w| w[0].t >= w[1].t) {
            return Err(Error::InvalidSchedule("times must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    /// A single step: frequency `f` everywhere.
    pub fn constant(f: Freq) -> Self {
        Self { points: vec![StepPoint::new(0.0, f)] }
    }

    /// Convenience for tests and literals: `[(t, f), ...]`.
    pub fn from_pairs(pairs: &[(Time, Freq)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(t, f)| StepPoint::new(t, f)).collect())
    }

    pub fn points(&self) -> &[StepPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `S(t)`: value of the last point with `point.t <= t`, by binary search.
    /// Times before 0 evaluate to the first step.
    pub fn eval(&self, t: Time) -> Freq {
        let k = self.points.partition_point(|p| p.t <= t);
        self.points[k.saturating_sub(1)].f
    }

    /// Checks menu membership and the `|S| <= M` bound.
    pub fn validate_against(&self, menu: &FrequencyMenu) -> Result<()> {
        if let Some(p) = self.points.iter().find(|p| !menu.contains(p.f)) {
            return Err(Error::InvalidSchedule(format!("frequency {} is not in the menu", p.f)));
        }
        if self.points.len() > menu.len() {
            return Err(Error::InvalidSchedule(format!(
                "{} steps exceed the menu size {}",
                self.points.len(),
                menu.len()
            )));
        }
        Ok(())
    }

    /// Steps as `(start, end, f)` with `end = +inf` for the last one.
    pub fn steps(&self) -> impl Iterator<Item = (Time, Time, Freq)> + '_ {
        self.points.iter().enumerate().map(move |(k, p)| {
            let end = self.points.get(k + 1).map_or(f64::INFINITY, |q| q.t);
            (p.t, end, p.f)
        })
    }

    /// Pointwise maximum of two step functions.
    pub fn pointwise_max(&self, other: &ScheduleFunction) -> ScheduleFunction {
        let mut times: Vec<Time> = self.points.iter().chain(other.points.iter()).map(|p| p.t).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let pts = times.into_iter().map(|t| StepPoint::new(t, self.eval(t).max(other.eval(t)))).collect();
        normalize_points(pts).expect("non-empty merge of valid schedules")
    }
}

/// Sorts by time, keeps the last-inserted point among equal times and merges
/// adjacent steps with equal frequency.
pub fn normalize_points(mut points: Vec<StepPoint>) -> Result<ScheduleFunction> {
    if points.is_empty() {
        return Err(Error::EmptySchedule);
    }
    points.sort_by(|a, b| a.t.total_cmp(&b.t));
    let mut out: Vec<StepPoint> = Vec::with_capacity(points.len());
    for p in points {
        match out.last_mut() {
            Some(last) if last.t == p.t => *last = p,
            _ => out.push(p),
        }
    }
    out.dedup_by(|next, prev| next.f == prev.f);
    ScheduleFunction::new(out)
}

/// Re-normalizes an existing function (idempotent).
pub fn normalize_schedule(s: &ScheduleFunction) -> Result<ScheduleFunction> {
    normalize_points(s.points.clone())
}
