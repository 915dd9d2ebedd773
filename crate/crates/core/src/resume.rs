//! Suspension and resumption of overrunning jobs on systems with preemption.
//!
//! A job still running at its kill time is suspended instead of killed and
//! placed in a resume queue. Queued jobs get CPU time either after the last
//! task of the frame or whenever a task finishes early, at a frequency chosen
//! from the remaining-cycles bounds they carry.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{time_tol, Cycles, Freq, FrequencyMenu, StepPoint, TaskSet, Time};

/// A job waiting in the resume queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuspendedJob {
    /// Position of the task in execution order.
    pub task: usize,
    pub cycles_done: Cycles,
    pub suspended_at: Time,
    /// Frequency the job was running at when suspended.
    pub speed: Freq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResumeTiming {
    /// After the last task of the frame.
    #[default]
    AtEndOfFrame,
    /// As soon as a task finishes before the next one has to start, and at
    /// the end of the frame.
    AtFirstSlack,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResumeOrder {
    #[default]
    ByIndex,
    Random,
    ShortestRemainingFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResumeSpeed {
    #[default]
    MaxFrequency,
    /// Slowest frequency covering `W_i - c_i` before the deadline.
    GlobalWcecBound,
    /// Slowest frequency covering `w_i (1 + alpha) - c_i` before the deadline.
    AlphaBound,
    /// Keep the frequency the job had when suspended.
    CurrentSpeed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResumeRounds {
    /// Resume one job at a time until it finishes or time runs out.
    #[default]
    RunToCompletion,
    /// Split the available time equally, re-suspending on budget exhaustion.
    FairRounds,
}

/// Frequency policy for a job that exceeded its WCEC while running.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EscalationStrategy {
    /// Switch to the top frequency at once.
    MaxFrequency,
    /// Step up as the time left before the kill limit shrinks: one menu step
    /// immediately, then linearly towards `f_M` reached at the limit.
    LaxityScaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ResumePolicy {
    pub timing: ResumeTiming,
    pub order: ResumeOrder,
    pub speed: ResumeSpeed,
    pub rounds: ResumeRounds,
    /// Raise the frequency of regular tasks by one menu step per queued job.
    pub boost_others: bool,
    pub escalation: Option<EscalationStrategy>,
}

impl ResumePolicy {
    pub fn validate(&self, ts: &TaskSet) -> Result<()> {
        for (k, t) in ts.tasks().iter().enumerate() {
            match self.speed {
                ResumeSpeed::GlobalWcecBound if t.global_wcec.is_none() => {
                    return Err(Error::MissingGlobalWcec(k));
                }
                ResumeSpeed::AlphaBound if t.overrun_factor.is_none() => {
                    return Err(Error::InvalidPolicy(format!(
                        "resume speed alpha-bound needs an overrun factor on task {}",
                        t.index
                    )));
                }
                _ => {}
            }
            if self.order == ResumeOrder::ShortestRemainingFirst && t.remaining_bound().is_none() {
                return Err(Error::MissingRemainingEstimate(k));
            }
        }
        Ok(())
    }
}

fn bounded_frequency(bound: Option<f64>, done: Cycles, window: Time, menu: &FrequencyMenu) -> Freq {
    match bound {
        Some(b) if b - done as f64 > 0.0 => menu.ceil((b - done as f64) / window),
        _ => menu.max(),
    }
}

/// Frequency for resuming a single job at `now`.
pub fn resume_frequency(
    job: &SuspendedJob,
    now: Time,
    ts: &TaskSet,
    menu: &FrequencyMenu,
    mode: ResumeSpeed,
) -> Result<Freq> {
    let d = ts.deadline();
    if now >= d {
        return Err(Error::NoTimeRemaining { now, deadline: d });
    }
    ts.check_pos(job.task)?;
    let task = ts.task(job.task);
    let window = d - now;
    Ok(match mode {
        ResumeSpeed::MaxFrequency => menu.max(),
        ResumeSpeed::CurrentSpeed => job.speed,
        ResumeSpeed::GlobalWcecBound => {
            bounded_frequency(task.global_wcec.map(|w| w as f64), job.cycles_done, window, menu)
        }
        ResumeSpeed::AlphaBound => {
            bounded_frequency(task.overrun_factor.map(|a| task.wcec as f64 * (1.0 + a)), job.cycles_done, window, menu)
        }
    })
}

/// `ceil(sum (bound_i - c_i) / (D - now))` over the queue, `f_M` if any job
/// already exceeded its bound.
pub(crate) fn group_frequency_with(
    jobs: &[SuspendedJob],
    now: Time,
    deadline: Time,
    menu: &FrequencyMenu,
    bound: impl Fn(usize) -> Option<f64>,
) -> Result<Freq> {
    if jobs.is_empty() {
        return Err(Error::EmptyResumeSet);
    }
    if now >= deadline {
        return Err(Error::NoTimeRemaining { now, deadline });
    }
    let mut deficit = 0.0;
    for j in jobs {
        let b = bound(j.task).ok_or(Error::MissingGlobalWcec(j.task))?;
        let left = b - j.cycles_done as f64;
        if left <= 0.0 {
            return Ok(menu.max());
        }
        deficit += left;
    }
    Ok(menu.ceil(deficit / (deadline - now)))
}

/// Shared frequency for a group of suspended jobs using their global WCECs.
/// Call again before each resume: earlier jobs may finish below their bound.
pub fn group_resume_frequency(jobs: &[SuspendedJob], now: Time, ts: &TaskSet, menu: &FrequencyMenu) -> Result<Freq> {
    for j in jobs {
        ts.check_pos(j.task)?;
    }
    group_frequency_with(jobs, now, ts.deadline(), menu, |k| ts.task(k).global_wcec.map(|w| w as f64))
}

/// Orders the queue for resumption.
pub fn order_resume_queue<R: Rng + ?Sized>(
    jobs: &[SuspendedJob],
    order: ResumeOrder,
    ts: &TaskSet,
    rng: &mut R,
) -> Result<Vec<SuspendedJob>> {
    if jobs.is_empty() {
        return Err(Error::EmptyResumeSet);
    }
    let mut out = jobs.to_vec();
    match order {
        ResumeOrder::ByIndex => out.sort_by_key(|j| j.task),
        ResumeOrder::Random => {
            out.sort_by_key(|j| j.task);
            out.shuffle(rng);
        }
        ResumeOrder::ShortestRemainingFirst => {
            let mut keyed = Vec::with_capacity(out.len());
            for j in out {
                ts.check_pos(j.task)?;
                let bound = ts.task(j.task).remaining_bound().ok_or(Error::MissingRemainingEstimate(j.task))?;
                keyed.push((bound - j.cycles_done as f64, j));
            }
            keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.task.cmp(&b.1.task)));
            out = keyed.into_iter().map(|(_, j)| j).collect();
        }
    }
    Ok(out)
}

/// Equal first-round budgets: `(end - start) / count` each.
pub fn fair_round_budgets(count: usize, start: Time, end: Time) -> Vec<Time> {
    if count == 0 {
        return Vec::new();
    }
    vec![(end - start) / count as f64; count]
}

/// Outcome of one slice of CPU time given to a job.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceRun {
    pub used: Time,
    pub finished: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FairSlice {
    pub round: usize,
    pub task: usize,
    pub start: Time,
    pub budget: Time,
    pub used: Time,
    pub finished: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FairRoundsOutcome {
    pub slices: Vec<FairSlice>,
    /// Slices that ended on budget exhaustion with time still left in the window.
    pub preemptions: usize,
    /// Time left when every job finished.
    pub unused: Time,
    /// Tasks still unfinished when the window closed.
    pub unfinished: Vec<usize>,
}

impl FairRoundsOutcome {
    pub fn consumed(&self) -> Time {
        self.slices.iter().map(|s| s.used).sum()
    }
}

/// Multi-round equal-time sharing of `[start, end)` among `tasks`.
///
/// Each round gives every live job `(end - now) / live`. `run(task, at,
/// budget)` executes a job for at most `budget` and reports the time it
/// used. Jobs finishing early free time for another round over the
/// survivors; at most `r (r - 1) / 2` preemptions happen for `r` jobs.
pub fn allocate_fair_rounds(
    tasks: &[usize],
    start: Time,
    end: Time,
    mut run: impl FnMut(usize, Time, Time) -> SliceRun,
) -> FairRoundsOutcome {
    let tol = time_tol(end);
    let mut out = FairRoundsOutcome::default();
    let mut live: Vec<usize> = tasks.to_vec();
    let mut now = start;
    let mut round = 0;
    while !live.is_empty() && end - now > tol {
        let budget = (end - now) / live.len() as f64;
        let mut survivors = Vec::with_capacity(live.len());
        for &task in &live {
            let slice_start = now;
            let r = run(task, slice_start, budget);
            let used = r.used.clamp(0.0, budget);
            now += used;
            if !r.finished {
                survivors.push(task);
                if end - now > tol {
                    out.preemptions += 1;
                }
            }
            out.slices.push(FairSlice { round, task, start: slice_start, budget, used, finished: r.finished });
        }
        let progressed = survivors.len() < live.len();
        live = survivors;
        round += 1;
        if !progressed {
            break;
        }
    }
    out.unfinished = live;
    out.unused = if out.unfinished.is_empty() { (end - now).max(0.0) } else { 0.0 };
    out
}

/// Fair rounds for jobs with known time needs, as `(task, time needed)`.
pub fn allocate_fair_rounds_for_needs(needs: &[(usize, Time)], start: Time, end: Time) -> FairRoundsOutcome {
    let mut left: Vec<(usize, Time)> = needs.to_vec();
    let tasks: Vec<usize> = needs.iter().map(|n| n.0).collect();
    allocate_fair_rounds(&tasks, start, end, |task, _, budget| {
        let entry = left.iter_mut().find(|e| e.0 == task).expect("known task");
        if entry.1 <= budget {
            let used = entry.1;
            entry.1 = 0.0;
            SliceRun { used, finished: true }
        } else {
            entry.1 -= budget;
            SliceRun { used: budget, finished: false }
        }
    })
}

/// Worst-case preemption count of fair rounds over `r` jobs.
pub fn max_fair_preemptions(r: usize) -> usize {
    r * r.saturating_sub(1) / 2
}

/// Frequency for a regular task while `suspended` jobs wait: the scheduled
/// frequency moved up that many menu positions.
pub fn boost_other_frequency(scheduled: Freq, suspended: usize, menu: &FrequencyMenu) -> Freq {
    if suspended == 0 {
        return scheduled;
    }
    menu.step_up(scheduled, suspended)
}

/// Frequency steps taken by an overrunning job from `overrun_start` on.
/// The job ran at `current` until it used up its WCEC; `limit` is the time
/// at which it would be suspended or killed.
pub fn escalation_profile(
    current: Freq,
    overrun_start: Time,
    limit: Time,
    menu: &FrequencyMenu,
    strategy: EscalationStrategy,
) -> Vec<StepPoint> {
    let f_max = menu.max();
    if strategy == EscalationStrategy::MaxFrequency || current >= f_max || limit <= overrun_start {
        return vec![StepPoint::new(overrun_start, f_max)];
    }
    let freqs = menu.freqs();
    let first = menu.step_up(current, 1);
    let mut out = vec![StepPoint::new(overrun_start, first)];
    let span = limit - overrun_start;
    let pos = freqs.partition_point(|&g| g <= first);
    for p in pos..freqs.len() {
        // ceil(current + phi (f_M - current)) reaches freqs[p] once the
        // linear target passes the level just below it
        let phi = (freqs[p - 1] - current) / (f_max - current);
        out.push(StepPoint::new(overrun_start + phi.clamp(0.0, 1.0) * span, freqs[p]));
    }
    out
}

/// Frequency of an overrunning job at `now`.
pub fn intra_task_escalation(
    current: Freq,
    overrun_start: Time,
    limit: Time,
    now: Time,
    menu: &FrequencyMenu,
    strategy: EscalationStrategy,
) -> Freq {
    if now >= limit {
        return menu.max();
    }
    let profile = escalation_profile(current, overrun_start, limit, menu, strategy);
    let k = profile.partition_point(|p| p.t <= now);
    profile[k.saturating_sub(1)].f
}
