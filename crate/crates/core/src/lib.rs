//! Frame-based dynamic voltage scaling with tasks whose worst-case
//! execution cycles change at run time.

pub mod adaptation;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod feasibility;
pub mod model;
pub mod overrun;
pub mod resume;
pub mod sim;

pub use error::{Error, Result};
pub use model::{Cycles, Freq, FrequencyMenu, ScheduleFunction, StepPoint, TaskSet, TaskSpec, Time};
