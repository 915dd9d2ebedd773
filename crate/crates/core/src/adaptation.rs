//! In-place adaptation of scheduling functions and kill times after a task
//! is observed using more (or fewer) cycles than its assumed WCEC.
//!
//! Rebuilding the schedules from scratch is too slow to do between two
//! frames, so these updates only move breakpoints or raise step frequencies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::{requirement_schedule, DangerZones};
use crate::model::{normalize_points, Cycles, FrequencyMenu, ScheduleFunction, StepPoint, TaskSet, Time};
use crate::overrun::{KappaTransform, KillPolicy, KillTimes};

/// Task `task` ran `observed` cycles in the last frame while `old_wcec` was assumed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverrunEvent {
    pub task: usize,
    pub observed: Cycles,
    pub old_wcec: Cycles,
    /// The job was killed after `observed` cycles; its true need may be larger.
    pub killed: bool,
}

impl OverrunEvent {
    /// An increase event (`observed >= old_wcec`; equality is a no-op).
    pub fn increase(task: usize, observed: Cycles, old_wcec: Cycles, killed: bool) -> Result<Self> {
        if observed < old_wcec {
            return Err(Error::NotAnIncrease { task, observed, wcec: old_wcec });
        }
        Ok(Self { task, observed, old_wcec, killed })
    }

    /// A decrease event (`observed <= old_wcec`; equality is a no-op).
    pub fn decrease(task: usize, observed: Cycles, old_wcec: Cycles) -> Result<Self> {
        if observed > old_wcec {
            return Err(Error::NotADecrease { task, observed, wcec: old_wcec });
        }
        Ok(Self { task, observed, old_wcec, killed: false })
    }

    fn excess(&self) -> Cycles {
        self.observed.saturating_sub(self.old_wcec)
    }

    fn check_increase(&self, ts: &TaskSet) -> Result<()> {
        ts.check_pos(self.task)?;
        if self.observed < self.old_wcec {
            return Err(Error::NotAnIncrease { task: self.task, observed: self.observed, wcec: self.old_wcec });
        }
        Ok(())
    }
}

/// Lower bound used by the schedulability-condition update for tasks before
/// the overrunning one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchedConditionBound {
    /// `w'_i / (z'_{i+1} - t)`: the schedulability condition of the updated
    /// WCEC set, with the shifted danger zones.
    #[default]
    UpdatedWcecs,
    /// `c_j / (z_{i+1} - t)` with the old zones, for every `i <= j`. Not
    /// safe in general for `i < j`; kept for comparison.
    OverrunCycles,
}

/// Work counters for the horizontal-shift update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AdaptStats {
    /// Breakpoints read or written.
    pub breakpoints_touched: usize,
    /// Comparison steps spent in binary searches over breakpoints.
    pub search_steps: usize,
}

fn updated_wcecs(ts: &TaskSet, ev: &OverrunEvent) -> Vec<Cycles> {
    let mut w = ts.wcecs();
    w[ev.task] = ev.observed;
    w
}

fn check_len(schedules: &[ScheduleFunction], ts: &TaskSet) -> Result<()> {
    if schedules.len() != ts.len() {
        return Err(Error::LengthMismatch { expected: ts.len(), got: schedules.len() });
    }
    Ok(())
}

/// `S'_i(t) = max{S_i(t), ceil(bound_i(t))}` for `i <= j`, unchanged for `i > j`.
///
/// The maximum is formed exactly: the bound is itself a step function with
/// one breakpoint per menu frequency, merged into `S_i`.
pub fn adapt_schedulability_condition_with(
    schedules: &[ScheduleFunction],
    ev: &OverrunEvent,
    ts: &TaskSet,
    menu: &FrequencyMenu,
    bound: SchedConditionBound,
) -> Result<Vec<ScheduleFunction>> {
    check_len(schedules, ts)?;
    ev.check_increase(ts)?;
    let d = ts.deadline();
    let old = DangerZones::from_wcecs(&ts.wcecs(), d, menu.max());
    let new_w = updated_wcecs(ts, ev);
    let new = DangerZones::from_wcecs(&new_w, d, menu.max());
    Ok(schedules
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if i > ev.task {
                return s.clone();
            }
            let req = match bound {
                SchedConditionBound::UpdatedWcecs => requirement_schedule(new_w[i] as f64, new.limit(i), menu),
                SchedConditionBound::OverrunCycles => requirement_schedule(ev.observed as f64, old.limit(i), menu),
            };
            s.pointwise_max(&req)
        })
        .collect())
}

/// Schedulability-condition update with the safe bound.
pub fn adapt_schedulability_condition(
    schedules: &[ScheduleFunction],
    ev: &OverrunEvent,
    ts: &TaskSet,
    menu: &FrequencyMenu,
) -> Result<Vec<ScheduleFunction>> {
    adapt_schedulability_condition_with(schedules, ev, ts, menu, SchedConditionBound::UpdatedWcecs)
}

/// Moves every breakpoint by `shift` (negative = left), clamping at 0. Among
/// points landing on 0 the fastest survives.
fn shift_points(s: &ScheduleFunction, shift: Time, stats: &mut AdaptStats) -> ScheduleFunction {
    let mut fastest_at_zero = f64::NEG_INFINITY;
    let mut rest = Vec::with_capacity(s.len());
    for (k, p) in s.points().iter().enumerate() {
        stats.breakpoints_touched += 1;
        let t = if k == 0 { 0.0 } else { (p.t + shift).max(0.0) };
        if t <= 0.0 {
            fastest_at_zero = fastest_at_zero.max(p.f);
        } else {
            rest.push(StepPoint::new(t, p.f));
        }
    }
    let mut pts = Vec::with_capacity(rest.len() + 1);
    pts.push(StepPoint::new(0.0, fastest_at_zero));
    pts.extend(rest);
    normalize_points(pts).expect("shifted schedule keeps a point at 0")
}

fn log2_ceil(n: usize) -> usize {
    (usize::BITS - n.max(1).leading_zeros()) as usize
}

/// Horizontal shift plus counters for the work done.
pub fn adapt_horizontal_shift_with_stats(
    schedules: &[ScheduleFunction],
    ev: &OverrunEvent,
    ts: &TaskSet,
    menu: &FrequencyMenu,
) -> Result<(Vec<ScheduleFunction>, AdaptStats)> {
    check_len(schedules, ts)?;
    ev.check_increase(ts)?;
    let mut stats = AdaptStats::default();
    let shift = ev.excess() as f64 / menu.max();
    let zones = DangerZones::from_wcecs(&ts.wcecs(), ts.deadline(), menu.max());
    let mut out = Vec::with_capacity(schedules.len());
    for (i, s) in schedules.iter().enumerate() {
        if i < ev.task {
            out.push(if shift > 0.0 { shift_points(s, -shift, &mut stats) } else { s.clone() });
        } else if i == ev.task {
            let req = requirement_schedule(ev.observed as f64, zones.limit(i), menu);
            let merged = s.pointwise_max(&req);
            let evaluations = s.len() + req.len();
            stats.breakpoints_touched += evaluations + merged.len();
            stats.search_steps += evaluations * (log2_ceil(s.len()) + log2_ceil(req.len()));
            out.push(merged);
        } else {
            out.push(s.clone());
        }
    }
    Ok((out, stats))
}

/// `S'_i(t) = S_i(t + (c_j - w_j) / f_M)` for `i < j`, the
/// schedulability-condition update for `i = j`, unchanged for `i > j`.
pub fn adapt_horizontal_shift(
    schedules: &[ScheduleFunction],
    ev: &OverrunEvent,
    ts: &TaskSet,
    menu: &FrequencyMenu,
) -> Result<Vec<ScheduleFunction>> {
    adapt_horizontal_shift_with_stats(schedules, ev, ts, menu).map(|(s, _)| s)
}

/// Closed-form danger zone update: `z'_i = z_i - (c_j - w_j) / f_M` for `i <= j`.
pub fn shift_danger_zones(zones: &DangerZones, ev: &OverrunEvent, menu: &FrequencyMenu) -> DangerZones {
    let shift = ev.excess() as f64 / menu.max();
    let n = zones.task_count();
    let mut z = zones.as_slice().to_vec();
    for (i, zi) in z.iter_mut().enumerate().take(n) {
        if i <= ev.task {
            *zi -= shift;
        }
    }
    DangerZones::from_raw(z)
}

/// Closed-form kill time update after an increase of task `j`'s WCEC.
/// `ts` holds the WCECs and thresholds before the event.
pub fn adapt_kill_times(
    kt: &KillTimes,
    policy: &KillPolicy,
    ev: &OverrunEvent,
    ts: &TaskSet,
    menu: &FrequencyMenu,
) -> Result<KillTimes> {
    ev.check_increase(ts)?;
    let n = ts.len();
    policy.validate(n)?;
    let f_max = menu.max();
    let excess = ev.excess() as f64;
    let j = ev.task;
    let mut out = kt.clone();
    let zt = out.as_mut_slice();
    match policy {
        KillPolicy::Percentile { window, transform, .. } => {
            let kappa = ts.task(j).kappa.ok_or(Error::MissingPercentileData(j))? as f64;
            let w = ev.old_wcec as f64;
            let window = window.unwrap_or(n);
            for (m, z) in zt.iter_mut().enumerate().take(j + 1) {
                // kill time m counts kappa for tasks m ..= min(m + K - 1, N - 1)
                let in_window = j < m + window;
                *z -= match (transform, in_window) {
                    (KappaTransform::Stretch, true) => kappa / f_max * (ev.observed as f64 / w - 1.0),
                    _ => excess / f_max,
                };
            }
        }
        _ => {
            for (i, z) in zt.iter_mut().enumerate().take(j + 1) {
                let delta = policy.delta(i).expect("hybrid family");
                *z -= (1.0 - delta) * excess / f_max;
            }
        }
    }
    zt[n] = ts.deadline();
    Ok(out)
}

/// Per-event schedule update used by [`apply_overruns`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdaptRule {
    SchedCondition,
    HorizontalShift,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdaptNote {
    /// The job was killed, so its cycle count is only a lower bound on the
    /// new WCEC; later frames raise it further if needed.
    ProvisionalWcec { task: usize, cycles: Cycles },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptOutcome {
    pub schedules: Vec<ScheduleFunction>,
    pub kill_times: KillTimes,
    pub taskset: TaskSet,
    pub notes: Vec<AdaptNote>,
}

fn updated_kappa(kappa: Cycles, ev: &OverrunEvent, transform: KappaTransform) -> Cycles {
    let k = match transform {
        KappaTransform::Stretch => (kappa as f64 * ev.observed as f64 / ev.old_wcec as f64).ceil() as Cycles,
        KappaTransform::Shift => kappa + ev.excess(),
    };
    k.clamp(1, ev.observed)
}

/// Applies one frame's overrun events in ascending task order, each against
/// the geometry left by the previous one. WCECs become `max{c_j, w_j}`.
pub fn apply_overruns(
    schedules: &[ScheduleFunction],
    kill_times: &KillTimes,
    ts: &TaskSet,
    events: &[OverrunEvent],
    rule: AdaptRule,
    policy: &KillPolicy,
    menu: &FrequencyMenu,
) -> Result<AdaptOutcome> {
    let mut sorted = events.to_vec();
    sorted.sort_by_key(|e| e.task);
    if let Some(w) = sorted.windows(2).find(|w| w[0].task == w[1].task) {
        return Err(Error::DuplicateEvent(w[0].task));
    }
    let mut out = AdaptOutcome {
        schedules: schedules.to_vec(),
        kill_times: kill_times.clone(),
        taskset: ts.clone(),
        notes: Vec::new(),
    };
    for ev in sorted {
        out.taskset.check_pos(ev.task)?;
        let current = out.taskset.task(ev.task).wcec;
        if ev.observed <= current {
            continue;
        }
        // events are relative to the WCEC in force when this one is applied
        let ev = OverrunEvent { old_wcec: current, ..ev };
        out.schedules = match rule {
            AdaptRule::SchedCondition => adapt_schedulability_condition(&out.schedules, &ev, &out.taskset, menu)?,
            AdaptRule::HorizontalShift => adapt_horizontal_shift(&out.schedules, &ev, &out.taskset, menu)?,
        };
        out.kill_times = adapt_kill_times(&out.kill_times, policy, &ev, &out.taskset, menu)?;
        let transform = match policy {
            KillPolicy::Percentile { transform, .. } => *transform,
            _ => KappaTransform::Shift,
        };
        let task = out.taskset.task_mut(ev.task);
        task.wcec = ev.observed;
        if let Some(k) = task.kappa {
            task.kappa = Some(updated_kappa(k, &ev, transform));
        }
        if let Some(w) = task.global_wcec {
            task.global_wcec = Some(w.max(ev.observed));
        }
        if ev.killed {
            out.notes.push(AdaptNote::ProvisionalWcec { task: ev.task, cycles: ev.observed });
        }
    }
    Ok(out)
}

/// Right shift for a WCEC decrease: `S_i(t - (w_j - c_j)/f_M)` for `i < j`
/// (the first point stays at 0), `ceil(S_j(t) c_j / w_j)` for `i = j`.
pub fn adapt_wcec_decrease(
    schedules: &[ScheduleFunction],
    ev: &OverrunEvent,
    ts: &TaskSet,
    menu: &FrequencyMenu,
) -> Result<Vec<ScheduleFunction>> {
    check_len(schedules, ts)?;
    ts.check_pos(ev.task)?;
    if ev.observed > ev.old_wcec {
        return Err(Error::NotADecrease { task: ev.task, observed: ev.observed, wcec: ev.old_wcec });
    }
    if ev.observed == ev.old_wcec {
        return Ok(schedules.to_vec());
    }
    let shift = (ev.old_wcec - ev.observed) as f64 / menu.max();
    let scale = ev.observed as f64 / ev.old_wcec as f64;
    let mut stats = AdaptStats::default();
    Ok(schedules
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if i < ev.task {
                shift_points(s, shift, &mut stats)
            } else if i == ev.task {
                let pts = s.points().iter().map(|p| StepPoint::new(p.t, menu.ceil_tol(p.f * scale))).collect();
                normalize_points(pts).expect("non-empty schedule")
            } else {
                s.clone()
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::{build_baseline_schedules, check_schedulability, danger_zones};
    use crate::model::TaskSpec;
    use crate::overrun::kill_times;

    fn sf(p: &[(f64, f64)]) -> ScheduleFunction {
        ScheduleFunction::from_pairs(p).unwrap()
    }

    fn m12() -> FrequencyMenu {
        FrequencyMenu::new(vec![1.0, 2.0]).unwrap()
    }

    #[test]
    fn sched_condition_single_task() {
        let ts = TaskSet::from_wcecs(&[8], 10.0).unwrap();
        let s = vec![sf(&[(0.0, 1.0), (2.0, 2.0)])];
        let ev = OverrunEvent::increase(0, 9, 8, false).unwrap();
        let out = adapt_schedulability_condition(&s, &ev, &ts, &m12()).unwrap();
        assert_eq!(out, vec![sf(&[(0.0, 1.0), (1.0, 2.0)])]);
    }

    #[test]
    fn sched_condition_noop_and_later_tasks() {
        let m = FrequencyMenu::new(vec![1.0, 2.0, 3.0]).unwrap();
        let ts = TaskSet::from_wcecs(&[5, 9, 4], 20.0).unwrap();
        let s = build_baseline_schedules(&ts, &m);
        let ev = OverrunEvent::increase(1, 9, 9, false).unwrap();
        assert_eq!(adapt_schedulability_condition(&s, &ev, &ts, &m).unwrap(), s);
        let ev = OverrunEvent::increase(1, 12, 9, false).unwrap();
        let out = adapt_schedulability_condition(&s, &ev, &ts, &m).unwrap();
        assert_eq!(out[2], s[2]);
        for i in 0..=1 {
            for k in 0..200 {
                let t = k as f64 * 0.1;
                assert!(out[i].eval(t) >= s[i].eval(t));
            }
        }
    }

    #[test]
    fn increase_constructor_rejects_decrease() {
        assert!(matches!(OverrunEvent::increase(0, 3, 4, false), Err(Error::NotAnIncrease { .. })));
        assert!(matches!(OverrunEvent::decrease(0, 5, 4), Err(Error::NotADecrease { .. })));
    }

    #[test]
    fn shift_examples() {
        let mut st = AdaptStats::default();
        assert_eq!(shift_points(&sf(&[(0.0, 1.0), (4.0, 2.0)]), -1.0, &mut st), sf(&[(0.0, 1.0), (3.0, 2.0)]));
        assert_eq!(shift_points(&sf(&[(0.0, 1.0), (0.5, 2.0)]), -1.0, &mut st), sf(&[(0.0, 2.0)]));
        assert_eq!(shift_points(&sf(&[(0.0, 1.0), (3.0, 2.0)]), 1.0, &mut st), sf(&[(0.0, 1.0), (4.0, 2.0)]));
    }

    #[test]
    fn horizontal_shift_identity_at_zero_excess() {
        let m = FrequencyMenu::new(vec![1.0, 2.0, 3.0]).unwrap();
        let ts = TaskSet::from_wcecs(&[5, 9, 4], 20.0).unwrap();
        let s = build_baseline_schedules(&ts, &m);
        let ev = OverrunEvent::increase(2, 4, 4, false).unwrap();
        assert_eq!(adapt_horizontal_shift(&s, &ev, &ts, &m).unwrap(), s);
    }

    #[test]
    fn horizontal_shift_is_feasible_for_new_wcecs() {
        let m = FrequencyMenu::new(vec![1.0, 2.0, 3.0]).unwrap();
        let ts = TaskSet::from_wcecs(&[5, 9, 4], 20.0).unwrap();
        let s = build_baseline_schedules(&ts, &m);
        let ev = OverrunEvent::increase(2, 10, 4, false).unwrap();
        let out = adapt_horizontal_shift(&s, &ev, &ts, &m).unwrap();
        let new_ts = TaskSet::from_wcecs(&[5, 9, 10], 20.0).unwrap();
        assert!(check_schedulability(&out, &new_ts, &m).unwrap().is_feasible());
    }

    #[test]
    fn kill_time_updates() {
        let m = m12();
        let ts = TaskSet::from_wcecs(&[4, 6], 20.0).unwrap();
        let z = danger_zones(&ts, &m);
        let ev = OverrunEvent::increase(1, 10, 6, false).unwrap();

        let kt1 = kill_times(&KillPolicy::AtDeadline, &ts, &z, &m).unwrap();
        assert_eq!(adapt_kill_times(&kt1, &KillPolicy::AtDeadline, &ev, &ts, &m).unwrap(), kt1);

        let kt0 = kill_times(&KillPolicy::AtDangerZone, &ts, &z, &m).unwrap();
        let out = adapt_kill_times(&kt0, &KillPolicy::AtDangerZone, &ev, &ts, &m).unwrap();
        assert_eq!(out.at(0), kt0.at(0) - 2.0);
        assert_eq!(out.at(1), kt0.at(1) - 2.0);
        assert_eq!(out.at(2), 20.0);
        let new_ts = TaskSet::from_wcecs(&[4, 10], 20.0).unwrap();
        let z_new = danger_zones(&new_ts, &m);
        assert_eq!(shift_danger_zones(&z, &ev, &m), z_new);
    }

    #[test]
    fn percentile_shift_matches_recompute() {
        let m = m12();
        let tasks = vec![
            TaskSpec::new(1, 8).with_kappa(5),
            TaskSpec::new(2, 6).with_kappa(4),
            TaskSpec::new(3, 10).with_kappa(7),
        ];
        let ts = TaskSet::new(tasks, 40.0).unwrap();
        for window in [None, Some(1), Some(2)] {
            let policy = KillPolicy::percentile(0.05, 3, window);
            let kt = kill_times(&policy, &ts, &danger_zones(&ts, &m), &m).unwrap();
            let ev = OverrunEvent::increase(1, 10, 6, false).unwrap();
            let out = adapt_kill_times(&kt, &policy, &ev, &ts, &m).unwrap();
            // same numbers as the zone example: excess 4 at f_M = 2
            assert_eq!(out.at(1), kt.at(1) - 2.0);
            let mut t2 = ts.clone();
            t2.task_mut(1).wcec = 10;
            t2.task_mut(1).kappa = Some(8);
            let recomputed = kill_times(&policy, &t2, &danger_zones(&t2, &m), &m).unwrap();
            for (a, b) in out.as_slice().iter().zip(recomputed.as_slice()) {
                assert!((a - b).abs() < 1e-12, "{window:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn percentile_stretch_in_and_out_of_window() {
        let m = m12();
        let tasks = (1..=3).map(|i| TaskSpec::new(i, 10).with_kappa(5)).collect();
        let ts = TaskSet::new(tasks, 40.0).unwrap();
        let policy =
            KillPolicy::Percentile { epsilon: vec![0.1; 3], window: Some(1), transform: KappaTransform::Stretch };
        let kt = kill_times(&policy, &ts, &danger_zones(&ts, &m), &m).unwrap();
        let ev = OverrunEvent::increase(2, 14, 10, false).unwrap();
        let out = adapt_kill_times(&kt, &policy, &ev, &ts, &m).unwrap();
        // kill time index 2 has task 2 in its window: kappa/f_M * (c/w - 1) = 2.5 * 0.4
        assert!((out.at(2) - (kt.at(2) - 1.0)).abs() < 1e-12);
        // indices 0 and 1 see task 2 through its WCEC
        assert!((out.at(1) - (kt.at(1) - 2.0)).abs() < 1e-12);
        assert!((out.at(0) - (kt.at(0) - 2.0)).abs() < 1e-12);
        assert_eq!(out.at(3), 40.0);
    }

    #[test]
    fn apply_overruns_folds_in_order() {
        let m = FrequencyMenu::new(vec![1.0, 2.0, 3.0]).unwrap();
        let ts = TaskSet::from_wcecs(&[5, 9, 4], 30.0).unwrap();
        let s = build_baseline_schedules(&ts, &m);
        let policy = KillPolicy::hybrid(0.3, 3);
        let kt = kill_times(&policy, &ts, &danger_zones(&ts, &m), &m).unwrap();

        let e0 = OverrunEvent::increase(0, 7, 5, false).unwrap();
        let e2 = OverrunEvent::increase(2, 6, 4, true).unwrap();
        let both = apply_overruns(&s, &kt, &ts, &[e2, e0], AdaptRule::HorizontalShift, &policy, &m).unwrap();

        let one = apply_overruns(&s, &kt, &ts, &[e0], AdaptRule::HorizontalShift, &policy, &m).unwrap();
        let two = apply_overruns(
            &one.schedules,
            &one.kill_times,
            &one.taskset,
            &[e2],
            AdaptRule::HorizontalShift,
            &policy,
            &m,
        )
        .unwrap();
        assert_eq!(both.schedules, two.schedules);
        assert_eq!(both.kill_times, two.kill_times);
        assert_eq!(both.taskset.wcecs(), vec![7, 9, 6]);
        assert_eq!(both.notes, vec![AdaptNote::ProvisionalWcec { task: 2, cycles: 6 }]);

        let empty = apply_overruns(&s, &kt, &ts, &[], AdaptRule::SchedCondition, &policy, &m).unwrap();
        assert_eq!(empty.schedules, s);
        assert_eq!(empty.kill_times, kt);

        let dup = apply_overruns(&s, &kt, &ts, &[e0, e0], AdaptRule::SchedCondition, &policy, &m);
        assert_eq!(dup.unwrap_err(), Error::DuplicateEvent(0));
    }

    #[test]
    fn decrease_examples() {
        let m = m12();
        let ts = TaskSet::from_wcecs(&[6, 4], 20.0).unwrap();
        let s = vec![sf(&[(0.0, 1.0), (3.0, 2.0)]), sf(&[(0.0, 1.0), (2.0, 2.0)])];
        let ev = OverrunEvent::decrease(1, 2, 4).unwrap();
        let out = adapt_wcec_decrease(&s, &ev, &ts, &m).unwrap();
        assert_eq!(out[1], sf(&[(0.0, 1.0)]));
        // shift by (4 - 2) / 2 = 1
        assert_eq!(out[0], sf(&[(0.0, 1.0), (4.0, 2.0)]));
        let same = OverrunEvent::decrease(1, 4, 4).unwrap();
        assert_eq!(adapt_wcec_decrease(&s, &same, &ts, &m).unwrap(), s);
    }
}
