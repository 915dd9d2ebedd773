//! Frame-by-frame simulation, workloads and metrics.

pub mod engine;
pub mod metrics;
pub mod scenario;
pub mod workload;

pub use engine::{run_frame, EngineState, FrameResult, JobStatus, Segment, TaskOutcome};
pub use metrics::{energy_of, fairness_of, FairnessVariant, MetricsSeries, RepMetrics};
pub use scenario::{
    run_on_matrix, run_repetition, run_scenario, sweep_frame_length, AdaptationMethod, SimConfig, SweepRow,
};
pub use workload::{generate_workload, rep_seed, Demand, DemandMatrix, WorkloadModel};
