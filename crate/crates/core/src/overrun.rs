//! Kill/suspend times for the overrun policy families and empirical
//! percentile thresholds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::DangerZones;
use crate::model::{Cycles, FrequencyMenu, TaskSet, Time};

/// How the kill threshold `kappa_j` is transformed when task `j` overruns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KappaTransform {
    /// `kappa' = kappa * c / w`: the distribution stretches over `[0, c]`.
    Stretch,
    /// `kappa' = kappa + (c - w)`: the distribution shifts upward.
    #[default]
    Shift,
}

/// Which rule places the kill/suspend time of each task.
#[derive(Debug, Clone, PartialEq)]
pub enum KillPolicy {
    /// Kill when the next task's danger zone starts.
    AtDangerZone,
    /// Kill only at the frame deadline.
    AtDeadline,
    /// `z~_k = z_k + (D - z_k) * delta_k`, one delta per task.
    Hybrid { delta: Vec<f64> },
    /// Treat the next `window` tasks as needing only their percentile
    /// threshold `kappa`; `None` means every later task.
    Percentile { epsilon: Vec<f64>, window: Option<usize>, transform: KappaTransform },
}

impl KillPolicy {
    pub fn hybrid(delta: f64, n: usize) -> Self {
        KillPolicy::Hybrid { delta: vec![delta; n] }
    }

    pub fn percentile(epsilon: f64, n: usize, window: Option<usize>) -> Self {
        KillPolicy::Percentile { epsilon: vec![epsilon; n], window, transform: KappaTransform::Shift }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let check_unit = |name: &str, v: &[f64]| -> Result<()> {
            if v.len() != n {
                return Err(Error::InvalidPolicy(format!("{name}: expected {n} values, got {}", v.len())));
            }
            if let Some(x) = v.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                return Err(Error::InvalidPolicy(format!("{name}: value {x} outside [0, 1]")));
            }
            Ok(())
        };
        match self {
            KillPolicy::AtDangerZone | KillPolicy::AtDeadline => Ok(()),
            KillPolicy::Hybrid { delta } => check_unit("delta", delta),
            KillPolicy::Percentile { epsilon, window, .. } => {
                check_unit("epsilon", epsilon)?;
                if *window == Some(0) {
                    return Err(Error::InvalidPolicy("window: must be >= 1".into()));
                }
                Ok(())
            }
        }
    }

    /// Effective `delta_k` for the families that are hybrid special cases.
    pub fn delta(&self, k: usize) -> Option<f64> {
        match self {
            KillPolicy::AtDangerZone => Some(0.0),
            KillPolicy::AtDeadline => Some(1.0),
            KillPolicy::Hybrid { delta } => Some(delta[k]),
            KillPolicy::Percentile { .. } => None,
        }
    }
}

/// `at(k)` for `k in 0..=N`; task `k` is killed or suspended at `kill_time(k) = at(k + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KillTimes {
    ztilde: Vec<Time>,
}

impl KillTimes {
    pub fn new(ztilde: Vec<Time>) -> Self {
        Self { ztilde }
    }

    pub fn at(&self, k: usize) -> Time {
        self.ztilde[k]
    }

    pub fn kill_time(&self, task: usize) -> Time {
        self.ztilde[task + 1]
    }

    pub fn as_slice(&self) -> &[Time] {
        &self.ztilde
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [Time] {
        &mut self.ztilde
    }
}

/// Computes the kill times for `policy`. The last entry is always `D`.
pub fn kill_times(policy: &KillPolicy, ts: &TaskSet, zones: &DangerZones, menu: &FrequencyMenu) -> Result<KillTimes> {
    let n = ts.len();
    policy.validate(n)?;
    let d = ts.deadline();
    let mut zt: Vec<Time> = match policy {
        KillPolicy::AtDangerZone | KillPolicy::AtDeadline | KillPolicy::Hybrid { .. } => (0..=n)
            .map(|k| {
                let z = zones.start(k);
                let delta = if k < n { policy.delta(k).unwrap() } else { 1.0 };
                z + (d - z) * delta
            })
            .collect(),
        KillPolicy::Percentile { window, .. } => {
            let mut kappas = Vec::with_capacity(n);
            for (k, t) in ts.tasks().iter().enumerate() {
                kappas.push(t.kappa.ok_or(Error::MissingPercentileData(k))?);
            }
            let window = window.unwrap_or(n);
            (0..=n)
                .map(|m| {
                    // tasks m .. m+K-1 contribute kappa, the rest their WCEC
                    let cut = (m + window).min(n);
                    let optimistic: Cycles = kappas[m.min(n)..cut].iter().sum();
                    let pessimistic: Cycles = ts.tasks()[cut..].iter().map(|t| t.wcec).sum();
                    d - (optimistic + pessimistic) as f64 / menu.max()
                })
                .collect()
        }
    };
    zt[n] = d;
    Ok(KillTimes::new(zt))
}

/// Empirical `kappa(epsilon)`: the smallest candidate `K` such that at least
/// a `1 - epsilon` fraction of samples is strictly below `K`.
///
/// Candidates are 1, the observed values and `wcec`; the result is clamped to
/// `[1, wcec]`.
pub fn percentile_kappa(samples: &[Cycles], epsilon: f64, wcec: Cycles) -> Result<Cycles> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidPolicy(format!("epsilon {epsilon} outside [0, 1]")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let target = (1.0 - epsilon) * n - 1e-9 * n;

    let mut candidates: Vec<Cycles> = Vec::with_capacity(sorted.len() + 2);
    candidates.push(1);
    candidates.extend_from_slice(&sorted);
    candidates.push(wcec);
    candidates.sort_unstable();
    candidates.dedup();

    let wcec = wcec.max(1);
    for k in candidates {
        let below = sorted.partition_point(|&s| s < k) as f64;
        if below >= target {
            return Ok(k.clamp(1, wcec));
        }
    }
    Ok(wcec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::danger_zones;

    fn setup() -> (TaskSet, FrequencyMenu) {
        let tasks =
            vec![crate::model::TaskSpec::new(1, 4).with_kappa(2), crate::model::TaskSpec::new(2, 6).with_kappa(4)];
        (TaskSet::new(tasks, 10.0).unwrap(), FrequencyMenu::new(vec![1.0, 2.0]).unwrap())
    }

    #[test]
    fn hybrid_extremes() {
        let (ts, m) = setup();
        let z = danger_zones(&ts, &m);
        let kt0 = kill_times(&KillPolicy::hybrid(0.0, 2), &ts, &z, &m).unwrap();
        assert_eq!(kt0.as_slice(), z.as_slice());
        let kt1 = kill_times(&KillPolicy::hybrid(1.0, 2), &ts, &z, &m).unwrap();
        assert!(kt1.as_slice().iter().all(|&t| t == 10.0));
        assert_eq!(kill_times(&KillPolicy::AtDangerZone, &ts, &z, &m).unwrap(), kt0);
        assert_eq!(kill_times(&KillPolicy::AtDeadline, &ts, &z, &m).unwrap(), kt1);
    }

    #[test]
    fn percentile_example() {
        let (ts, m) = setup();
        let z = danger_zones(&ts, &m);
        let kt = kill_times(&KillPolicy::percentile(0.1, 2, None), &ts, &z, &m).unwrap();
        // task 1 is killed at 10 - 4/2 = 8, versus the danger zone 7
        assert_eq!(kt.kill_time(0), 8.0);
        assert_eq!(z.limit(0), 7.0);
        assert_eq!(kt.kill_time(1), 10.0);
        assert_eq!(kt.at(0), 10.0 - 6.0 / 2.0);
    }

    #[test]
    fn percentile_window_one() {
        let tasks = (1..=3).map(|i| crate::model::TaskSpec::new(i, 10).with_kappa(4)).collect();
        let ts = TaskSet::new(tasks, 30.0).unwrap();
        let m = FrequencyMenu::new(vec![1.0, 2.0]).unwrap();
        let z = danger_zones(&ts, &m);
        let kt = kill_times(&KillPolicy::percentile(0.1, 3, Some(1)), &ts, &z, &m).unwrap();
        // task 0 killed at 30 - (kappa_1 + w_2)/2 = 30 - 7
        assert_eq!(kt.kill_time(0), 23.0);
        assert_eq!(kt.kill_time(1), 28.0);
        assert_eq!(kt.kill_time(2), 30.0);
    }

    #[test]
    fn percentile_requires_kappa() {
        let ts = TaskSet::from_wcecs(&[4, 6], 10.0).unwrap();
        let m = FrequencyMenu::new(vec![1.0, 2.0]).unwrap();
        let z = danger_zones(&ts, &m);
        let r = kill_times(&KillPolicy::percentile(0.1, 2, None), &ts, &z, &m);
        assert_eq!(r, Err(Error::MissingPercentileData(0)));
    }

    #[test]
    fn policy_validation() {
        assert!(KillPolicy::hybrid(1.5, 2).validate(2).is_err());
        assert!(KillPolicy::hybrid(0.5, 3).validate(2).is_err());
        assert!(KillPolicy::percentile(0.1, 2, Some(0)).validate(2).is_err());
        assert!(KillPolicy::percentile(-0.1, 2, None).validate(2).is_err());
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(percentile_kappa(&[2, 4, 6, 8, 10], 0.0, 10).unwrap(), 10);
        assert_eq!(percentile_kappa(&[2, 4, 6, 8, 10], 1.0, 10).unwrap(), 1);
        assert_eq!(percentile_kappa(&[2, 4, 6, 8, 10], 0.2, 10).unwrap(), 10);
        assert_eq!(percentile_kappa(&[2, 4, 6, 8, 10], 0.4, 10).unwrap(), 8);
        assert_eq!(percentile_kappa(&[], 0.2, 10), Err(Error::EmptySamples));
    }

    #[test]
    fn kappa_brute_force() {
        // oracle: linear count over every allowed candidate, keep the minimum
        let samples = [12u64, 3, 7, 21, 12, 9, 3, 15, 20, 12];
        let wcec = 25;
        for e in 0..=20 {
            let eps = e as f64 / 20.0;
            let n = samples.len();
            let need = ((1.0 - eps) * n as f64 - 1e-9).ceil() as usize;
            let oracle = std::iter::once(1)
                .chain(samples.iter().copied())
                .chain(std::iter::once(wcec))
                .filter(|&k| samples.iter().filter(|&&s| s < k).count() >= need)
                .min()
                .unwrap_or(wcec);
            assert_eq!(percentile_kappa(&samples, eps, wcec).unwrap(), oracle, "eps = {eps}");
        }
    }
}
