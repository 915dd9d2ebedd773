//! Energy, killing rate and fairness aggregation.

use std::ops::Range;

use super::engine::FrameResult;
use crate::model::Freq;

/// `cycles * f^2`; idle time costs nothing.
pub fn energy_of(cycles: f64, f: Freq) -> f64 {
    cycles * f * f
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FairnessVariant {
    AllInstances,
    KilledOnly,
}

/// `min L_i / max L_i` over the defined entries; `None` when there are none.
pub fn fairness_of(laxity: &[Option<f64>]) -> Option<f64> {
    let defined: Vec<f64> = laxity.iter().flatten().copied().collect();
    if defined.is_empty() {
        return None;
    }
    let min = defined.iter().copied().fold(f64::INFINITY, f64::min);
    let max = defined.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max <= 0.0 {
        // every job killed with nothing executed: equally (un)served
        return Some(1.0);
    }
    Some(min / max)
}

/// Raw counters of one repetition.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RepMetrics {
    pub frame_energy: Vec<f64>,
    pub frame_kills: Vec<usize>,
    /// Per task: sum of `e/r` over all instances and the instance count.
    pub ratio_sum: Vec<f64>,
    pub instances: Vec<u64>,
    /// Per task: the same over killed instances only.
    pub killed_ratio_sum: Vec<f64>,
    pub killed: Vec<u64>,
    pub deadline_misses: usize,
    pub preemptions: usize,
}

impl RepMetrics {
    pub fn new(tasks: usize) -> Self {
        Self {
            ratio_sum: vec![0.0; tasks],
            instances: vec![0; tasks],
            killed_ratio_sum: vec![0.0; tasks],
            killed: vec![0; tasks],
            ..Default::default()
        }
    }

    pub fn record(&mut self, frame: &FrameResult) {
        self.frame_energy.push(frame.energy);
        self.frame_kills.push(frame.killed());
        self.deadline_misses += usize::from(frame.deadline_miss);
        self.preemptions += frame.preemptions;
        for (k, t) in frame.tasks.iter().enumerate() {
            let ratio = t.completion();
            self.ratio_sum[k] += ratio;
            self.instances[k] += 1;
            if t.is_killed() {
                self.killed_ratio_sum[k] += ratio;
                self.killed[k] += 1;
            }
        }
    }
}

/// Metrics pooled over repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSeries {
    pub reps: usize,
    pub tasks: usize,
    /// Mean energy of each frame index over repetitions.
    pub energy_per_frame: Vec<f64>,
    /// Fraction of jobs killed or dropped at each frame index.
    pub kill_rate_per_frame: Vec<f64>,
    /// Mean energy per frame.
    pub energy: f64,
    pub kill_rate: f64,
    pub laxity_all: Vec<Option<f64>>,
    pub laxity_killed: Vec<Option<f64>>,
    pub fairness_all: Option<f64>,
    pub fairness_killed: Option<f64>,
    pub deadline_misses: usize,
    pub preemptions: usize,
}

impl MetricsSeries {
    /// Merges repetitions in the given order.
    pub fn from_reps(reps: &[RepMetrics]) -> Self {
        let tasks = reps.first().map_or(0, |r| r.ratio_sum.len());
        let frames = reps.iter().map(|r| r.frame_energy.len()).max().unwrap_or(0);
        let mut energy_per_frame = vec![0.0; frames];
        let mut kills_per_frame = vec![0.0; frames];
        let mut counts = vec![0usize; frames];
        let mut ratio = vec![0.0; tasks];
        let mut inst = vec![0u64; tasks];
        let mut kratio = vec![0.0; tasks];
        let mut kinst = vec![0u64; tasks];
        let (mut misses, mut preemptions) = (0, 0);
        for r in reps {
            for (f, (&e, &k)) in r.frame_energy.iter().zip(&r.frame_kills).enumerate() {
                energy_per_frame[f] += e;
                kills_per_frame[f] += k as f64;
                counts[f] += 1;
            }
            for k in 0..tasks {
                ratio[k] += r.ratio_sum[k];
                inst[k] += r.instances[k];
                kratio[k] += r.killed_ratio_sum[k];
                kinst[k] += r.killed[k];
            }
            misses += r.deadline_misses;
            preemptions += r.preemptions;
        }
        let total_jobs: u64 = inst.iter().sum();
        let total_killed: u64 = kinst.iter().sum();
        let total_energy: f64 = energy_per_frame.iter().sum();
        let total_frames: usize = counts.iter().sum();
        for f in 0..frames {
            let c = counts[f].max(1) as f64;
            energy_per_frame[f] /= c;
            kills_per_frame[f] /= c * tasks.max(1) as f64;
        }
        let mean = |s: f64, n: u64| (n > 0).then(|| s / n as f64);
        let laxity_all: Vec<Option<f64>> = (0..tasks).map(|k| mean(ratio[k], inst[k])).collect();
        let laxity_killed: Vec<Option<f64>> = (0..tasks).map(|k| mean(kratio[k], kinst[k])).collect();
        Self {
            reps: reps.len(),
            tasks,
            energy_per_frame,
            kill_rate_per_frame: kills_per_frame,
            energy: if total_frames > 0 { total_energy / total_frames as f64 } else { 0.0 },
            kill_rate: if total_jobs > 0 { total_killed as f64 / total_jobs as f64 } else { 0.0 },
            fairness_all: fairness_of(&laxity_all),
            fairness_killed: fairness_of(&laxity_killed),
            laxity_all,
            laxity_killed,
            deadline_misses: misses,
            preemptions,
        }
    }

    pub fn fairness(&self, variant: FairnessVariant) -> Option<f64> {
        match variant {
            FairnessVariant::AllInstances => self.fairness_all,
            FairnessVariant::KilledOnly => self.fairness_killed,
        }
    }

    /// Killing rate over frame indices `frames`.
    pub fn kill_rate_over(&self, frames: Range<usize>) -> f64 {
        mean_of(&self.kill_rate_per_frame[frames])
    }

    /// Mean energy per frame over frame indices `frames`.
    pub fn energy_over(&self, frames: Range<usize>) -> f64 {
        mean_of(&self.energy_per_frame[frames])
    }
}

fn mean_of(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}
