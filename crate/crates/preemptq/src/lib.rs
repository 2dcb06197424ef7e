//! Analysis and simulation of multiclass single-server priority queues in
//! which preempting a job costs time: interrupting service triggers a pause
//! overhead and continuing it later triggers a resume overhead, and both
//! overheads run without interruption.
//!
//! The crate has two independent routes to the same performance numbers:
//!
//! * an analytical route — closed-form joint transforms, busy-period fixed
//!   points and response-time transforms with moment extraction; and
//! * a discrete-event simulator with regenerative estimates.
//!
//! Keeping both routes honest against each other is the point: the test
//! suite cross-validates every analytical quantity against simulation and
//! against independently derived special cases.

mod error;

pub mod config;

pub mod durations;
pub mod busy;
pub mod joint;
pub mod loads;
pub mod exec;
pub(crate) mod numeric;
pub mod response;
pub mod sim;

pub use config::{ClassSpec, Mode, SystemConfig};
pub use durations::{Distribution, Family};
pub use busy::BusyFixedPoint;
pub use joint::JointKind;
pub use loads::{LoadProfile, StabilityReport};
pub use response::{
    ConditionalResume, ExtraWorkMixture, MixtureComponent, ResponseComponents,
    ResponseResult,
};
pub use sim::{Estimate, SimEstimates, SimOpts, Simulation};
pub use error::{Error, Result};
