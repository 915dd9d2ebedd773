//! Multi-frame scenarios, repetitions and frame-length sweeps.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::{run_frame, EngineState};
use super::metrics::{MetricsSeries, RepMetrics};
use super::workload::{generate_workload, rep_seed, DemandMatrix, WorkloadModel};
use crate::adaptation::AdaptRule;
use crate::error::{Error, Result};
use crate::model::{Cycles, FrequencyMenu, TaskSet, TaskSpec, Time};
use crate::overrun::{percentile_kappa, KillPolicy};
use crate::resume::ResumePolicy;

/// How the scheduler reacts to WCEC changes between frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdaptationMethod {
    /// Keep the start-up schedules forever.
    None,
    SchedCondition,
    #[default]
    HorizontalShift,
    /// Rebuild everything from the true second-phase WCECs exactly at the
    /// phase change.
    Clairvoyant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub menu: FrequencyMenu,
    pub deadline: Time,
    pub kill_policy: KillPolicy,
    /// `None`: no preemption, overrunning jobs are killed.
    pub resume: Option<ResumePolicy>,
    pub adaptation: AdaptationMethod,
    pub reps: usize,
    pub seed: u64,
    /// Per-task global WCEC; default the larger of the two phase WCECs.
    pub global_wcec: Option<Vec<Cycles>>,
    pub overrun_factor: Option<f64>,
}

impl SimConfig {
    pub fn new(menu: FrequencyMenu, deadline: Time, kill_policy: KillPolicy) -> Self {
        Self {
            menu,
            deadline,
            kill_policy,
            resume: None,
            adaptation: AdaptationMethod::default(),
            reps: 1,
            seed: 0,
            global_wcec: None,
            overrun_factor: None,
        }
    }

    pub fn validate(&self, workload: &WorkloadModel) -> Result<()> {
        workload.validate()?;
        if !(self.deadline.is_finite() && self.deadline > 0.0) {
            return Err(Error::InvalidConfig(format!("deadline: must be positive, got {}", self.deadline)));
        }
        if self.reps == 0 {
            return Err(Error::InvalidConfig("reps: must be >= 1".into()));
        }
        let n = workload.task_count();
        self.kill_policy.validate(n)?;
        if let Some(w) = &self.global_wcec {
            if w.len() != n {
                return Err(Error::InvalidConfig(format!("global_wcec: expected {n} values, got {}", w.len())));
            }
        }
        let ts = self.build_taskset(workload.initial_wcecs(), workload, None)?;
        if let Some(r) = &self.resume {
            r.validate(&ts)?;
        }
        Ok(())
    }

    /// Start-up task set: phase-1 WCECs, thresholds calibrated on the
    /// phase-1 rows of `matrix`.
    pub fn initial_taskset(&self, workload: &WorkloadModel, matrix: &DemandMatrix) -> Result<TaskSet> {
        let split = workload.phase1_frames().min(matrix.frames());
        self.build_taskset(workload.initial_wcecs(), workload, Some((matrix, 0..split)))
    }

    /// Task set for `wcecs`; `samples` supplies percentile calibration data.
    fn build_taskset(
        &self,
        wcecs: Vec<Cycles>,
        workload: &WorkloadModel,
        samples: Option<(&DemandMatrix, std::ops::Range<usize>)>,
    ) -> Result<TaskSet> {
        let top: Vec<Cycles> =
            workload.initial_wcecs().iter().zip(workload.final_wcecs()).map(|(&a, b)| a.max(b)).collect();
        let mut tasks = Vec::with_capacity(wcecs.len());
        for (k, &w) in wcecs.iter().enumerate() {
            let mut t = TaskSpec::new(k + 1, w);
            let global = self.global_wcec.as_ref().map_or(top[k], |g| g[k]);
            t.global_wcec = Some(global.max(w));
            t.overrun_factor = self.overrun_factor;
            if let (KillPolicy::Percentile { epsilon, .. }, Some((m, range))) = (&self.kill_policy, &samples) {
                let range = if range.is_empty() { 0..m.frames() } else { range.clone() };
                t.kappa = Some(percentile_kappa(&m.column(k, range), epsilon[k], w)?);
            }
            tasks.push(t);
        }
        TaskSet::new(tasks, self.deadline)
    }
}

/// One repetition: fresh workload draw, frame loop, adaptation in between.
pub fn run_repetition(config: &SimConfig, workload: &WorkloadModel, rep: usize) -> Result<RepMetrics> {
    let matrix = generate_workload(workload, rep_seed(config.seed, rep))?;
    run_on_matrix(config, workload, &matrix, rep)
}

/// Frame loop over a given demand matrix.
pub fn run_on_matrix(
    config: &SimConfig,
    workload: &WorkloadModel,
    matrix: &DemandMatrix,
    rep: usize,
) -> Result<RepMetrics> {
    let menu = &config.menu;
    let split = workload.phase1_frames().min(matrix.frames());
    let ts = config.initial_taskset(workload, matrix)?;
    let mut state = EngineState::new(ts, menu, &config.kill_policy)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rep_seed(config.seed.rotate_left(29) ^ 0xA5A5_A5A5, rep));
    let mut metrics = RepMetrics::new(matrix.task_count());

    for frame in 0..matrix.frames() {
        if config.adaptation == AdaptationMethod::Clairvoyant && frame == split && split > 0 {
            let ts = config.build_taskset(workload.final_wcecs(), workload, Some((matrix, split..matrix.frames())))?;
            state = EngineState::new(ts, menu, &config.kill_policy)?;
        }
        let result = run_frame(&state, matrix.row(frame), menu, config.resume.as_ref(), &mut rng)?;
        metrics.record(&result);
        let rule = match config.adaptation {
            AdaptationMethod::SchedCondition => AdaptRule::SchedCondition,
            AdaptationMethod::HorizontalShift => AdaptRule::HorizontalShift,
            AdaptationMethod::None | AdaptationMethod::Clairvoyant => continue,
        };
        for note in state.adapt(&result.events, rule, &config.kill_policy, menu)? {
            log::trace!("frame {frame}: {note:?}");
        }
    }
    Ok(metrics)
}

/// Runs all repetitions (in parallel) and pools them in repetition order.
pub fn run_scenario(config: &SimConfig, workload: &WorkloadModel) -> Result<MetricsSeries> {
    config.validate(workload)?;
    let demand: Cycles = workload.initial_wcecs().iter().sum();
    let needed = demand as f64 / config.menu.max();
    if needed > config.deadline {
        log::warn!("task set overloaded: sum(w)/f_M = {needed} exceeds D = {}; running anyway", config.deadline);
    }
    let reps: Vec<RepMetrics> =
        (0..config.reps).into_par_iter().map(|rep| run_repetition(config, workload, rep)).collect::<Result<_>>()?;
    Ok(MetricsSeries::from_reps(&reps))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub deadline: Time,
    pub energy: f64,
    pub kill_rate: f64,
    pub fairness_all: Option<f64>,
    pub fairness_killed: Option<f64>,
}

/// One scenario per frame length, same seeds for each, rows in input order.
pub fn sweep_frame_length(config: &SimConfig, deadlines: &[Time], workload: &WorkloadModel) -> Result<Vec<SweepRow>> {
    if deadlines.is_empty() {
        return Err(Error::EmptySweep);
    }
    deadlines
        .iter()
        .map(|&d| {
            let cfg = SimConfig { deadline: d, ..config.clone() };
            let m = run_scenario(&cfg, workload)?;
            Ok(SweepRow {
                deadline: d,
                energy: m.energy,
                kill_rate: m.kill_rate,
                fairness_all: m.fairness_all,
                fairness_killed: m.fairness_killed,
            })
        })
        .collect()
}
