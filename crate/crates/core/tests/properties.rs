use framedvs::adaptation::{
    adapt_horizontal_shift_with_stats, adapt_kill_times, adapt_schedulability_condition, shift_danger_zones,
    OverrunEvent,
};
use framedvs::feasibility::{build_baseline_schedules, check_schedulability, danger_zones};
use framedvs::overrun::{kill_times, percentile_kappa, KillPolicy};
use framedvs::resume::{
    allocate_fair_rounds_for_needs, group_resume_frequency, max_fair_preemptions, order_resume_queue, ResumeOrder,
    ResumePolicy, ResumeSpeed, SuspendedJob,
};
use framedvs::sim::{run_frame, EngineState, JobStatus};
use framedvs::{Cycles, FrequencyMenu, TaskSet, TaskSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn menu_strategy() -> impl Strategy<Value = FrequencyMenu> {
    prop::collection::vec(1.1f64..1.9, 0..6).prop_flat_map(|ratios| {
        (0.5f64..1.5).prop_map(move |f0| {
            let mut f = f0;
            let mut v = vec![f];
            for r in &ratios {
                f *= r;
                v.push(f);
            }
            FrequencyMenu::new(v).unwrap()
        })
    })
}

/// Menu, WCECs and a frame at least as long as `sum(w) / f_M`.
fn instance() -> impl Strategy<Value = (FrequencyMenu, Vec<Cycles>, f64)> {
    (menu_strategy(), prop::collection::vec(1u64..300, 1..9), 1.0f64..3.0)
}

/// Instance plus one overrun `(j, c_j)` that still fits the frame.
fn overrun_instance() -> impl Strategy<Value = (FrequencyMenu, Vec<Cycles>, f64, usize, Cycles)> {
    instance()
        .prop_flat_map(|(menu, w, slack)| {
            let n = w.len();
            (Just(menu), Just(w), Just(slack), 0..n, 0.0f64..=1.0)
        })
        .prop_map(|(menu, w, slack, j, frac)| {
            let c = w[j] + (w[j] as f64 * frac).round() as Cycles;
            let mut after = w.clone();
            after[j] = c;
            let d = after.iter().sum::<Cycles>() as f64 / menu.max() * slack;
            (menu, w, d, j, c)
        })
}

fn taskset(w: &[Cycles], slack: f64, menu: &FrequencyMenu) -> TaskSet {
    TaskSet::from_wcecs(w, w.iter().sum::<Cycles>() as f64 / menu.max() * slack).unwrap()
}

proptest! {
    #[test]
    fn hybrid_kill_times_between_zone_and_deadline((menu, w, slack) in instance(), delta in 0.0f64..=1.0) {
        let ts = taskset(&w, slack, &menu);
        let zones = danger_zones(&ts, &menu);
        let kt = kill_times(&KillPolicy::hybrid(delta, w.len()), &ts, &zones, &menu).unwrap();
        let d = ts.deadline();
        for k in 0..=w.len() {
            prop_assert!(kt.at(k) >= zones.start(k) - 1e-9);
            prop_assert!(kt.at(k) <= d + 1e-9);
        }
        prop_assert_eq!(kt.at(w.len()), d);
    }

    #[test]
    fn hybrid_kill_times_monotone_in_delta((menu, w, slack) in instance(), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let ts = taskset(&w, slack, &menu);
        let zones = danger_zones(&ts, &menu);
        let (lo, hi) = (a.min(b), a.max(b));
        let x = kill_times(&KillPolicy::hybrid(lo, w.len()), &ts, &zones, &menu).unwrap();
        let y = kill_times(&KillPolicy::hybrid(hi, w.len()), &ts, &zones, &menu).unwrap();
        for k in 0..=w.len() {
            prop_assert!(x.at(k) <= y.at(k) + 1e-9);
        }
    }

    #[test]
    fn kill_times_strictly_increasing_below_deadline_policy(
        (menu, w, slack) in instance(),
        delta in 0.0f64..0.999,
        epsilon in 0.0f64..=1.0,
        window in prop::option::of(1usize..5),
    ) {
        let ts = taskset(&w, slack, &menu);
        let zones = danger_zones(&ts, &menu);
        let kt = kill_times(&KillPolicy::hybrid(delta, w.len()), &ts, &zones, &menu).unwrap();
        for k in 0..w.len() {
            prop_assert!(kt.at(k) < kt.at(k + 1));
        }
        let tasks: Vec<TaskSpec> = ts
            .tasks()
            .iter()
            .map(|t| t.clone().with_kappa(((t.wcec as f64 * (1.0 - epsilon)).ceil() as Cycles).max(1)))
            .collect();
        let pts = TaskSet::new(tasks, ts.deadline()).unwrap();
        let kt = kill_times(&KillPolicy::percentile(epsilon, w.len(), window), &pts, &zones, &menu).unwrap();
        for k in 0..w.len() {
            prop_assert!(kt.at(k) < kt.at(k + 1));
            prop_assert!(kt.at(k) >= zones.start(k) - 1e-9);
        }
    }

    #[test]
    fn kappa_non_increasing_in_epsilon(
        samples in prop::collection::vec(1u64..500, 1..60),
        a in 0.0f64..=1.0,
        b in 0.0f64..=1.0,
    ) {
        let wcec = *samples.iter().max().unwrap();
        let (lo, hi) = (a.min(b), a.max(b));
        let k_lo = percentile_kappa(&samples, lo, wcec).unwrap();
        let k_hi = percentile_kappa(&samples, hi, wcec).unwrap();
        prop_assert!(k_hi <= k_lo);
        prop_assert!((1..=wcec).contains(&k_lo));
    }

    #[test]
    fn condition_update_dominates_and_stays_schedulable((menu, w, d, j, c) in overrun_instance()) {
        let ts = TaskSet::from_wcecs(&w, d).unwrap();
        let s = build_baseline_schedules(&ts, &menu);
        let ev = OverrunEvent::increase(j, c, w[j], false).unwrap();
        let out = adapt_schedulability_condition(&s, &ev, &ts, &menu).unwrap();
        let mut after = w.clone();
        after[j] = c;
        let updated = TaskSet::from_wcecs(&after, d).unwrap();
        prop_assert!(check_schedulability(&out, &updated, &menu).unwrap().is_feasible());
        for (old, new) in s.iter().zip(&out) {
            for p in old.points().iter().chain(new.points()) {
                prop_assert!(new.eval(p.t) >= old.eval(p.t));
            }
        }
    }

    #[test]
    fn shift_is_schedulable_and_cheap((menu, w, d, j, c) in overrun_instance()) {
        let ts = TaskSet::from_wcecs(&w, d).unwrap();
        let s = build_baseline_schedules(&ts, &menu);
        let ev = OverrunEvent::increase(j, c, w[j], false).unwrap();
        let (out, stats) = adapt_horizontal_shift_with_stats(&s, &ev, &ts, &menu).unwrap();
        let mut after = w.clone();
        after[j] = c;
        let updated = TaskSet::from_wcecs(&after, d).unwrap();
        prop_assert!(check_schedulability(&out, &updated, &menu).unwrap().is_feasible());
        // nothing after the overrunning task is touched
        prop_assert_eq!(&out[j + 1..], &s[j + 1..]);
        for (old, new) in s.iter().zip(&out).take(j + 1) {
            for p in old.points().iter().chain(new.points()) {
                prop_assert!(new.eval(p.t) >= old.eval(p.t));
            }
        }
        let m = menu.len();
        let before: usize = s[..=j].iter().map(|f| f.len()).sum();
        prop_assert!(stats.breakpoints_touched <= before + 2 * (s[j].len() + m) + m);
        let log = |n: usize| (usize::BITS - n.max(1).leading_zeros()) as usize;
        prop_assert!(stats.search_steps <= (s[j].len() + m + 1) * (log(s[j].len()) + log(m + 1)));
    }

    #[test]
    fn shifted_zones_and_kill_times_match_recompute(
        (menu, w, d, j, c) in overrun_instance(),
        delta in 0.0f64..=1.0,
    ) {
        let n = w.len();
        let ts = TaskSet::from_wcecs(&w, d).unwrap();
        let zones = danger_zones(&ts, &menu);
        let policy = KillPolicy::hybrid(delta, n);
        let kt = kill_times(&policy, &ts, &zones, &menu).unwrap();
        let ev = OverrunEvent::increase(j, c, w[j], false).unwrap();
        let mut after = w.clone();
        after[j] = c;
        let updated = TaskSet::from_wcecs(&after, d).unwrap();
        let fresh_zones = danger_zones(&updated, &menu);
        let shifted = shift_danger_zones(&zones, &ev, &menu);
        for k in 0..=n {
            prop_assert!((shifted.start(k) - fresh_zones.start(k)).abs() < 1e-9);
        }
        let fresh = kill_times(&policy, &updated, &fresh_zones, &menu).unwrap();
        let adapted = adapt_kill_times(&kt, &policy, &ev, &ts, &menu).unwrap();
        for k in 0..=n {
            prop_assert!((adapted.at(k) - fresh.at(k)).abs() < 1e-9);
        }
    }

    #[test]
    fn group_frequency_covers_bounds_when_possible(
        menu in menu_strategy(),
        jobs in prop::collection::vec((1u64..200, 0u64..200), 1..5),
        now_frac in 0.0f64..0.99,
        d in 50.0f64..400.0,
    ) {
        let tasks: Vec<TaskSpec> = jobs
            .iter()
            .enumerate()
            .map(|(k, &(w, extra))| TaskSpec::new(k + 1, w).with_global_wcec(w + extra))
            .collect();
        let ts = TaskSet::new(tasks, d).unwrap();
        let queue: Vec<SuspendedJob> = jobs
            .iter()
            .enumerate()
            .map(|(k, &(w, _))| SuspendedJob { task: k, cycles_done: w, suspended_at: 0.0, speed: menu.max() })
            .collect();
        let now = d * now_frac;
        let f = group_resume_frequency(&queue, now, &ts, &menu).unwrap();
        prop_assert!(menu.contains(f));
        let deficit: f64 = jobs.iter().map(|&(_, extra)| extra as f64).sum();
        if deficit <= menu.max() * (d - now) {
            prop_assert!(f * (d - now) >= deficit * (1.0 - 1e-12));
        }
        // less time left never lowers the frequency
        let later = now + (d - now) / 2.0;
        prop_assert!(group_resume_frequency(&queue, later, &ts, &menu).unwrap() >= f);
    }

    #[test]
    fn group_frequency_monotone_in_progress(
        menu in menu_strategy(),
        w in 1u64..200,
        extra in 1u64..200,
        done_a in 0u64..400,
        done_b in 0u64..400,
    ) {
        let ts = TaskSet::new(vec![TaskSpec::new(1, w).with_global_wcec(w + extra)], 100.0).unwrap();
        let at = |done| {
            let job = SuspendedJob { task: 0, cycles_done: done, suspended_at: 0.0, speed: menu.max() };
            group_resume_frequency(&[job], 10.0, &ts, &menu).unwrap()
        };
        let (lo, hi) = (done_a.min(done_b), done_a.max(done_b));
        prop_assert!(at(hi) <= at(lo) || at(hi) == menu.max());
    }

    #[test]
    fn fair_rounds_conserve_time(
        needs in prop::collection::vec(0.0f64..20.0, 1..7),
        window in 0.1f64..60.0,
    ) {
        let needs: Vec<(usize, f64)> = needs.into_iter().enumerate().collect();
        let out = allocate_fair_rounds_for_needs(&needs, 5.0, 5.0 + window);
        let tol = 1e-9 * (5.0 + window);
        prop_assert!(out.consumed() <= window + tol);
        prop_assert!(out.consumed() + out.unused <= window + tol);
        prop_assert!(out.preemptions <= max_fair_preemptions(needs.len()));
        let total: f64 = needs.iter().map(|n| n.1).sum();
        if out.unfinished.is_empty() {
            prop_assert!((out.consumed() - total).abs() <= tol * needs.len() as f64 + 1e-9);
            prop_assert!((out.consumed() + out.unused - window).abs() <= tol * needs.len() as f64 + 1e-9);
        } else {
            prop_assert!((out.consumed() - window).abs() <= tol * needs.len() as f64 + 1e-9);
        }
        for (task, need) in &needs {
            let used: f64 = out.slices.iter().filter(|s| s.task == *task).map(|s| s.used).sum();
            prop_assert!(used <= need + 1e-9);
        }
    }
}

#[test]
fn random_resume_order_is_uniform() {
    let ts = TaskSet::from_wcecs(&[10, 10, 10], 100.0).unwrap();
    let jobs: Vec<SuspendedJob> =
        (0..3).map(|k| SuspendedJob { task: k, cycles_done: 5, suspended_at: 0.0, speed: 1.0 }).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut counts = [0usize; 6];
    let draws = 10_000;
    for _ in 0..draws {
        let order: Vec<usize> =
            order_resume_queue(&jobs, ResumeOrder::Random, &ts, &mut rng).unwrap().iter().map(|j| j.task).collect();
        let p = perms.iter().position(|p| p[..] == order[..]).unwrap();
        counts[p] += 1;
    }
    let expected = draws as f64 / 6.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 5 degrees of freedom, p = 0.01
    assert!(chi2 < 15.09, "chi-square {chi2}, counts {counts:?}");
}

/// Suspended jobs resumed at the global-WCEC group frequency all finish
/// whenever their worst-case remainder fits at `f_M` in the time left.
#[test]
fn global_wcec_resume_finishes_when_bound_fits() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let policy = ResumePolicy { speed: ResumeSpeed::GlobalWcecBound, ..Default::default() };
    let (mut checked, mut resumed_frames) = (0, 0);
    while checked < 10_000 {
        let menu = FrequencyMenu::new(vec![1.0, 1.5, 2.0, 3.0]).unwrap();
        let n = rng.random_range(1..=6);
        let w: Vec<Cycles> = (0..n).map(|_| rng.random_range(5..=100)).collect();
        let global: Vec<Cycles> = w.iter().map(|&x| x + rng.random_range(0..=x)).collect();
        let d = w.iter().sum::<Cycles>() as f64 / 3.0 * rng.random_range(1.0..2.5);
        let tasks = (0..n).map(|k| TaskSpec::new(k + 1, w[k]).with_global_wcec(global[k])).collect::<Vec<_>>();
        let ts = TaskSet::new(tasks, d).unwrap();
        let state = EngineState::new(ts, &menu, &KillPolicy::hybrid(rng.random_range(0.0..=1.0), n)).unwrap();
        let demands: Vec<Cycles> = global.iter().map(|&g| rng.random_range(1..=g)).collect();
        let r = run_frame(&state, &demands, &menu, Some(&policy), &mut rng).unwrap();
        checked += 1;
        let Some(start) = r.segments.iter().find(|s| s.resumed).map(|s| s.start) else {
            continue;
        };
        let suspended: Vec<usize> = (0..n).filter(|&k| r.tasks[k].suspended).collect();
        let deficit: f64 = suspended
            .iter()
            .map(|&k| {
                let done: f64 = r.segments.iter().filter(|s| s.task == k && !s.resumed).map(|s| s.cycles).sum();
                global[k] as f64 - done.floor()
            })
            .sum();
        if deficit > 3.0 * (d - start) {
            continue;
        }
        resumed_frames += 1;
        for &k in &suspended {
            assert_eq!(r.tasks[k].status, JobStatus::Finished, "task {k} in {r:?}");
        }
        assert!(!r.deadline_miss);
    }
    assert!(resumed_frames > 100, "only {resumed_frames} frames exercised resumption");
}
