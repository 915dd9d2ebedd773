//! Execution of a single frame: tasks in order, kills or suspensions at
//! their kill times, resumption of suspended jobs in leftover time.

use rand::Rng;

use crate::adaptation::{apply_overruns, AdaptNote, AdaptRule, OverrunEvent};
use crate::error::{Error, Result};
use crate::feasibility::{build_baseline_schedules, danger_zones, DangerZones};
use crate::model::{time_tol, Cycles, Freq, FrequencyMenu, ScheduleFunction, StepPoint, TaskSet, Time};
use crate::overrun::{kill_times, KillPolicy, KillTimes};
use crate::resume::{
    allocate_fair_rounds, boost_other_frequency, escalation_profile, group_frequency_with, order_resume_queue,
    ResumePolicy, ResumeRounds, ResumeSpeed, ResumeTiming, SliceRun, SuspendedJob,
};

use super::metrics::energy_of;

/// Scheduling state carried from frame to frame.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineState {
    pub taskset: TaskSet,
    pub schedules: Vec<ScheduleFunction>,
    pub zones: DangerZones,
    pub kill_times: KillTimes,
}

impl EngineState {
    /// Baseline schedules and the policy's kill times for `ts`.
    pub fn new(ts: TaskSet, menu: &FrequencyMenu, policy: &KillPolicy) -> Result<Self> {
        let schedules = build_baseline_schedules(&ts, menu);
        let zones = danger_zones(&ts, menu);
        let kill_times = kill_times(policy, &ts, &zones, menu)?;
        Ok(Self { taskset: ts, schedules, zones, kill_times })
    }

    /// Folds one frame's overrun events into the state.
    pub fn adapt(
        &mut self,
        events: &[OverrunEvent],
        rule: AdaptRule,
        policy: &KillPolicy,
        menu: &FrequencyMenu,
    ) -> Result<Vec<AdaptNote>> {
        if events.is_empty() {
            return Ok(Vec::new());
        }
        let out = apply_overruns(&self.schedules, &self.kill_times, &self.taskset, events, rule, policy, menu)?;
        self.zones = danger_zones(&out.taskset, menu);
        self.schedules = out.schedules;
        self.kill_times = out.kill_times;
        self.taskset = out.taskset;
        Ok(out.notes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobStatus {
    Finished,
    /// Stopped before completion, at its kill time or at the deadline.
    Killed,
    /// Never started: no time was left.
    Dropped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskOutcome {
    pub requested: Cycles,
    pub executed: f64,
    pub status: JobStatus,
    /// The job spent time in the resume queue.
    pub suspended: bool,
    /// Frequencies used, in order.
    pub frequencies: Vec<Freq>,
}

impl TaskOutcome {
    /// Killed or dropped.
    pub fn is_killed(&self) -> bool {
        self.status != JobStatus::Finished
    }

    /// `e / r`.
    pub fn completion(&self) -> f64 {
        self.executed / self.requested as f64
    }
}

/// One stretch of execution at a fixed frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub task: usize,
    pub start: Time,
    pub end: Time,
    pub cycles: f64,
    pub freq: Freq,
    /// Executed from the resume queue.
    pub resumed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub tasks: Vec<TaskOutcome>,
    pub segments: Vec<Segment>,
    pub energy: f64,
    /// Some execution ran past the deadline. Never expected to be set.
    pub deadline_miss: bool,
    /// Jobs that used more cycles than their WCEC.
    pub events: Vec<OverrunEvent>,
    /// Preemptions caused by fair-round resumption.
    pub preemptions: usize,
}

impl FrameResult {
    pub fn killed(&self) -> usize {
        self.tasks.iter().filter(|t| t.is_killed()).count()
    }
}

struct Job {
    requested: f64,
    executed: f64,
    status: Option<JobStatus>,
    suspended: bool,
    freqs: Vec<Freq>,
    speed: Freq,
    suspended_at: Time,
}

impl Job {
    fn remaining(&self) -> f64 {
        (self.requested - self.executed).max(0.0)
    }

    fn done_cycles(&self) -> Cycles {
        (self.executed + 1e-9).floor() as Cycles
    }
}

struct Run {
    end: Time,
    finished: bool,
}

struct Frame<'a> {
    state: &'a EngineState,
    menu: &'a FrequencyMenu,
    policy: Option<&'a ResumePolicy>,
    jobs: Vec<Job>,
    queue: Vec<usize>,
    segments: Vec<Segment>,
    preemptions: usize,
    tol: Time,
}

impl Frame<'_> {
    /// Runs `task` from `start` along the piecewise-constant `profile`
    /// (first point at `start`) until it finishes or `limit` is reached.
    fn execute(&mut self, task: usize, profile: &[StepPoint], limit: Time, resumed: bool) -> Run {
        let mut now = profile[0].t;
        for (i, p) in profile.iter().enumerate() {
            let piece_end = profile.get(i + 1).map_or(limit, |q| q.t.min(limit));
            let last = piece_end >= limit;
            if piece_end <= now && !last {
                continue;
            }
            let left = self.jobs[task].remaining();
            let needed = left / p.f;
            let span = (piece_end - now).max(0.0);
            let job = &mut self.jobs[task];
            if job.freqs.last() != Some(&p.f) {
                job.freqs.push(p.f);
            }
            if needed <= span || (last && needed <= span + self.tol) {
                let end = now + needed;
                job.executed = job.requested;
                self.segments.push(Segment { task, start: now, end, cycles: left, freq: p.f, resumed });
                return Run { end, finished: true };
            }
            let cycles = span * p.f;
            job.executed += cycles;
            if span > 0.0 {
                self.segments.push(Segment { task, start: now, end: piece_end, cycles, freq: p.f, resumed });
            }
            now = piece_end;
            if last {
                break;
            }
        }
        Run { end: limit.max(profile[0].t), finished: false }
    }

    fn run_regular(&mut self, k: usize, t: Time, deadline: Time) -> Time {
        let st = self.state;
        let limit = st.kill_times.kill_time(k).min(deadline);
        if t >= deadline - self.tol || t >= limit - self.tol {
            self.jobs[k].status = Some(JobStatus::Dropped);
            return t;
        }
        let mut f = if t >= st.zones.start(k) { self.menu.max() } else { st.schedules[k].eval(t) };
        if let Some(p) = self.policy {
            if p.boost_others {
                f = boost_other_frequency(f, self.queue.len(), self.menu);
            }
        }
        let mut profile = vec![StepPoint::new(t, f)];
        let wcec = st.taskset.task(k).wcec as f64;
        if let Some(strategy) = self.policy.and_then(|p| p.escalation) {
            let overrun_start = t + wcec / f;
            if self.jobs[k].requested > wcec && overrun_start < limit {
                profile.extend(escalation_profile(f, overrun_start, limit, self.menu, strategy));
            }
        }
        let run = self.execute(k, &profile, limit, false);
        if run.finished {
            self.jobs[k].status = Some(JobStatus::Finished);
        } else if self.policy.is_some() {
            let job = &mut self.jobs[k];
            job.suspended = true;
            job.suspended_at = run.end;
            job.speed = *job.freqs.last().unwrap_or(&f);
            self.queue.push(k);
        } else {
            self.jobs[k].status = Some(JobStatus::Killed);
        }
        run.end
    }

    fn resume_speed(&self, task: usize, live: &[usize], now: Time, end: Time) -> Freq {
        let policy = self.policy.expect("resume policy present");
        let ts = &self.state.taskset;
        let suspended: Vec<SuspendedJob> = live
            .iter()
            .map(|&k| SuspendedJob {
                task: k,
                cycles_done: self.jobs[k].done_cycles(),
                suspended_at: self.jobs[k].suspended_at,
                speed: self.jobs[k].speed,
            })
            .collect();
        let group = |bound: &dyn Fn(usize) -> Option<f64>| {
            group_frequency_with(&suspended, now, end, self.menu, bound).unwrap_or(self.menu.max())
        };
        match policy.speed {
            ResumeSpeed::MaxFrequency => self.menu.max(),
            ResumeSpeed::CurrentSpeed => self.jobs[task].speed,
            ResumeSpeed::GlobalWcecBound => group(&|k| ts.task(k).global_wcec.map(|w| w as f64)),
            ResumeSpeed::AlphaBound => {
                group(&|k| ts.task(k).overrun_factor.map(|a| ts.task(k).wcec as f64 * (1.0 + a)))
            }
        }
    }

    /// Gives `[start, end)` to the resume queue; returns when the CPU is free.
    fn resume_window<R: Rng + ?Sized>(&mut self, start: Time, end: Time, rng: &mut R) -> Result<Time> {
        let policy = *self.policy.expect("resume policy present");
        if self.queue.is_empty() || end - start <= self.tol {
            return Ok(start);
        }
        let jobs: Vec<SuspendedJob> = self
            .queue
            .iter()
            .map(|&k| SuspendedJob {
                task: k,
                cycles_done: self.jobs[k].done_cycles(),
                suspended_at: self.jobs[k].suspended_at,
                speed: self.jobs[k].speed,
            })
            .collect();
        let order: Vec<usize> =
            order_resume_queue(&jobs, policy.order, &self.state.taskset, rng)?.iter().map(|j| j.task).collect();
        let mut now = start;
        match policy.rounds {
            ResumeRounds::RunToCompletion => {
                let mut live = order.clone();
                for &k in &order {
                    if end - now <= self.tol {
                        break;
                    }
                    let f = self.resume_speed(k, &live, now, end);
                    let run = self.execute(k, &[StepPoint::new(now, f)], end, true);
                    now = run.end;
                    if run.finished {
                        self.jobs[k].status = Some(JobStatus::Finished);
                        live.retain(|&j| j != k);
                    }
                }
            }
            ResumeRounds::FairRounds => {
                let mut live = order.clone();
                let outcome = allocate_fair_rounds(&order, start, end, |k, at, budget| {
                    let f = self.resume_speed(k, &live, at, end);
                    let run = self.execute(k, &[StepPoint::new(at, f)], at + budget, true);
                    if run.finished {
                        self.jobs[k].status = Some(JobStatus::Finished);
                        live.retain(|&j| j != k);
                    }
                    SliceRun { used: run.end - at, finished: run.finished }
                });
                self.preemptions += outcome.preemptions;
                now = start + outcome.consumed();
            }
        }
        self.queue.retain(|&k| self.jobs[k].status.is_none());
        Ok(now)
    }
}

/// Executes one frame with per-task demands `demands`. Without a resume
/// policy, jobs still running at their kill time are killed; with one they
/// are suspended and resumed later in the frame.
pub fn run_frame<R: Rng + ?Sized>(
    state: &EngineState,
    demands: &[Cycles],
    menu: &FrequencyMenu,
    resume: Option<&ResumePolicy>,
    rng: &mut R,
) -> Result<FrameResult> {
    let n = state.taskset.len();
    if demands.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: demands.len() });
    }
    let deadline = state.taskset.deadline();
    let mut frame = Frame {
        state,
        menu,
        policy: resume,
        jobs: demands
            .iter()
            .map(|&r| Job {
                requested: r as f64,
                executed: 0.0,
                status: None,
                suspended: false,
                freqs: Vec::new(),
                speed: menu.max(),
                suspended_at: 0.0,
            })
            .collect(),
        queue: Vec::new(),
        segments: Vec::new(),
        preemptions: 0,
        tol: time_tol(deadline),
    };

    let mut t: Time = 0.0;
    for k in 0..n {
        t = frame.run_regular(k, t, deadline);
        let finished_early = frame.jobs[k].status == Some(JobStatus::Finished);
        if let Some(p) = resume {
            if p.timing == ResumeTiming::AtFirstSlack && finished_early && k + 1 < n {
                // slack runs until the next task's danger zone; it then starts at f_M
                let until = state.zones.start(k + 1).min(state.kill_times.kill_time(k + 1)).min(deadline);
                if until > t {
                    t = frame.resume_window(t, until, rng)?;
                }
            }
        }
    }
    if resume.is_some() {
        frame.resume_window(t, deadline, rng)?;
    }

    let tol = frame.tol;
    let mut tasks = Vec::with_capacity(n);
    let mut events = Vec::new();
    for (k, job) in frame.jobs.into_iter().enumerate() {
        let status = job.status.unwrap_or(JobStatus::Killed);
        let requested = demands[k];
        let observed = if status == JobStatus::Finished { requested } else { job.done_cycles() };
        let wcec = state.taskset.task(k).wcec;
        if observed > wcec {
            events.push(OverrunEvent { task: k, observed, old_wcec: wcec, killed: status != JobStatus::Finished });
        }
        tasks.push(TaskOutcome {
            requested,
            executed: job.executed.min(requested as f64),
            status,
            suspended: job.suspended,
            frequencies: job.freqs,
        });
    }
    let energy = frame.segments.iter().map(|s| energy_of(s.cycles, s.freq)).sum();
    let deadline_miss = frame.segments.iter().any(|s| s.end > deadline + tol);
    Ok(FrameResult { tasks, segments: frame.segments, energy, deadline_miss, events, preemptions: frame.preemptions })
}
