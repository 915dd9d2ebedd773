//! Experiment files: a TOML document describing the platform, policies,
//! workload and frame lengths of a run or sweep.
//!
//! ```toml
//! seed = 42
//! reps = 300
//! frequencies = [1.0, 1.5, 2.0, 2.5, 3.0]
//! deadline = 420.0
//! deadlines = [380.0, 400.0, 420.0]
//! adaptation = "horizontal-shift"
//!
//! [kill]
//! policy = "hybrid"
//! delta = 0.2
//!
//! [resume]
//! speed = "global-wcec-bound"
//!
//! [workload]
//! kind = "two-phase-normal"
//! phase1_frames = 160
//! phase2_frames = 40
//! phase1 = [{ mean = 100.0, stddev = 10.0 }]
//! phase2 = [{ mean = 130.0, stddev = 12.0 }]
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::model::{Cycles, FrequencyMenu, Time};
use crate::overrun::{KappaTransform, KillPolicy};
use crate::resume::{EscalationStrategy, ResumeOrder, ResumePolicy, ResumeRounds, ResumeSpeed, ResumeTiming};
use crate::sim::{AdaptationMethod, Demand, DemandMatrix, SimConfig, WorkloadModel};

/// Problems found while loading an experiment.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentError {
    /// Bad or missing field; the message starts with the field path.
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ExperimentError> {
    Err(ExperimentError::Invalid(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn expand(&self, field: &str, n: usize) -> Result<Vec<f64>, ExperimentError> {
        let v = match self {
            OneOrMany::One(x) => vec![*x; n],
            OneOrMany::Many(v) if v.len() == n => v.clone(),
            OneOrMany::Many(v) => return invalid(format!("{field}: expected {n} values, got {}", v.len())),
        };
        if let Some(x) = v.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return invalid(format!("{field}: value {x} outside [0, 1]"));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    AtDangerZone,
    AtDeadline,
    Hybrid,
    Percentile,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KillSection {
    pub policy: PolicyKind,
    pub delta: Option<OneOrMany>,
    pub epsilon: Option<OneOrMany>,
    pub window: Option<usize>,
    #[serde(default)]
    pub transform: KappaTransform,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResumeSection {
    #[serde(default)]
    pub timing: ResumeTiming,
    #[serde(default)]
    pub order: ResumeOrder,
    #[serde(default)]
    pub speed: ResumeSpeed,
    #[serde(default)]
    pub rounds: ResumeRounds,
    #[serde(default)]
    pub boost_others: bool,
    pub escalation: Option<EscalationStrategy>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WorkloadKind {
    TwoPhaseNormal,
    Trace,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSection {
    pub kind: WorkloadKind,
    pub phase1: Option<Vec<Demand>>,
    pub phase2: Option<Vec<Demand>>,
    pub phase1_frames: Option<usize>,
    pub phase2_frames: Option<usize>,
    pub wcec_phase1: Option<Vec<Cycles>>,
    pub wcec_phase2: Option<Vec<Cycles>>,
    /// Trace file, relative to the experiment file.
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_reps")]
    pub reps: usize,
    pub output_dir: Option<PathBuf>,
    pub frequencies: Vec<f64>,
    pub deadline: Option<Time>,
    #[serde(default)]
    pub deadlines: Vec<Time>,
    #[serde(default)]
    pub adaptation: AdaptationMethod,
    pub global_wcec: Option<Vec<Cycles>>,
    pub overrun_factor: Option<f64>,
    pub kill: KillSection,
    pub resume: Option<ResumeSection>,
    pub workload: WorkloadSection,
}

fn default_reps() -> usize {
    300
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub config: SimConfig,
    pub workload: WorkloadModel,
    pub deadlines: Vec<Time>,
    pub output_dir: PathBuf,
}

impl Experiment {
    /// Reads and validates `path`. Trace paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Io { path: path.to_path_buf(), message: e.to_string() })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, ExperimentError> {
        let file: ExperimentFile =
            toml::from_str(text).map_err(|e| ExperimentError::Invalid(e.message().to_string()))?;
        file.resolve(base)
    }
}

fn positive_time(field: &str, d: Time) -> Result<Time, ExperimentError> {
    if d.is_finite() && d > 0.0 {
        Ok(d)
    } else {
        invalid(format!("{field}: must be a positive number, got {d}"))
    }
}

impl ExperimentFile {
    fn resolve(self, base: &Path) -> Result<Experiment, ExperimentError> {
        let menu = FrequencyMenu::new(self.frequencies.clone()).or_else(|e| invalid(format!("frequencies: {e}")))?;
        if self.reps == 0 {
            return invalid("reps: must be >= 1");
        }
        for (i, &d) in self.deadlines.iter().enumerate() {
            positive_time(&format!("deadlines[{i}]"), d)?;
        }
        let deadline = match (self.deadline, self.deadlines.first()) {
            (Some(d), _) => positive_time("deadline", d)?,
            (None, Some(&d)) => d,
            (None, None) => return invalid("deadline: set `deadline` or a non-empty `deadlines` list"),
        };
        let workload = self.workload.resolve(base)?;
        let n = workload.task_count();
        let kill = &self.kill;
        let kill_policy = match kill.policy {
            PolicyKind::AtDangerZone => KillPolicy::AtDangerZone,
            PolicyKind::AtDeadline => KillPolicy::AtDeadline,
            PolicyKind::Hybrid => {
                let delta = kill.delta.as_ref().map_or_else(|| invalid("kill.delta: required for hybrid"), Ok)?;
                KillPolicy::Hybrid { delta: delta.expand("kill.delta", n)? }
            }
            PolicyKind::Percentile => {
                let eps = kill.epsilon.as_ref().map_or_else(|| invalid("kill.epsilon: required for percentile"), Ok)?;
                if kill.window == Some(0) {
                    return invalid("kill.window: must be >= 1");
                }
                KillPolicy::Percentile {
                    epsilon: eps.expand("kill.epsilon", n)?,
                    window: kill.window,
                    transform: kill.transform,
                }
            }
        };
        if kill.delta.is_some() && kill.policy != PolicyKind::Hybrid {
            return invalid("kill.delta: only used by the hybrid policy");
        }
        if kill.epsilon.is_some() && kill.policy != PolicyKind::Percentile {
            return invalid("kill.epsilon: only used by the percentile policy");
        }
        if let Some(a) = self.overrun_factor {
            if !(a.is_finite() && a >= 0.0) {
                return invalid(format!("overrun_factor: must be >= 0, got {a}"));
            }
        }
        if let Some(w) = &self.global_wcec {
            if w.len() != n {
                return invalid(format!("global_wcec: expected {n} values, got {}", w.len()));
            }
        }
        let resume = self.resume.map(|r| ResumePolicy {
            timing: r.timing,
            order: r.order,
            speed: r.speed,
            rounds: r.rounds,
            boost_others: r.boost_others,
            escalation: r.escalation,
        });
        let config = SimConfig {
            menu,
            deadline,
            kill_policy,
            resume,
            adaptation: self.adaptation,
            reps: self.reps,
            seed: self.seed,
            global_wcec: self.global_wcec,
            overrun_factor: self.overrun_factor,
        };
        config.validate(&workload).or_else(|e| invalid(e.to_string()))?;
        Ok(Experiment {
            config,
            workload,
            deadlines: self.deadlines,
            output_dir: self.output_dir.unwrap_or_else(|| PathBuf::from("out")),
        })
    }
}

impl WorkloadSection {
    fn resolve(self, base: &Path) -> Result<WorkloadModel, ExperimentError> {
        let model = match self.kind {
            WorkloadKind::TwoPhaseNormal => {
                if self.path.is_some() {
                    return invalid("workload.path: only used by trace workloads");
                }
                let phase1 = self.phase1.map_or_else(|| invalid("workload.phase1: required"), Ok)?;
                let phase2 = self.phase2.unwrap_or_else(|| phase1.clone());
                let phase1_frames =
                    self.phase1_frames.map_or_else(|| invalid("workload.phase1_frames: required"), Ok)?;
                WorkloadModel::TwoPhaseNormal {
                    phase1,
                    phase2,
                    phase1_frames,
                    phase2_frames: self.phase2_frames.unwrap_or(0),
                    wcec_phase1: self.wcec_phase1,
                    wcec_phase2: self.wcec_phase2,
                }
            }
            WorkloadKind::Trace => {
                if self.phase1.is_some() || self.phase2.is_some() || self.phase2_frames.is_some() {
                    return invalid("workload: phase1/phase2/phase2_frames are not used by trace workloads");
                }
                let rel = self.path.map_or_else(|| invalid("workload.path: required for trace workloads"), Ok)?;
                let path = base.join(rel);
                let file = std::fs::File::open(&path)
                    .map_err(|e| ExperimentError::Io { path: path.clone(), message: e.to_string() })?;
                let matrix = DemandMatrix::read_csv(std::io::BufReader::new(file))
                    .or_else(|e| invalid(format!("workload.path: {}: {e}", path.display())))?;
                WorkloadModel::Trace {
                    matrix,
                    phase1_frames: self.phase1_frames,
                    wcec_phase1: self.wcec_phase1,
                    wcec_phase2: self.wcec_phase2,
                }
            }
        };
        model.validate().or_else(|e| invalid(format!("workload: {e}")))?;
        Ok(model)
    }
}
