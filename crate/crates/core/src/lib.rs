//! Exact periodic operating point and sampled-data small-signal transfer
//! functions of a dual-active-bridge converter modelled as a four-interval
//! piecewise-LTI system.
//!
//! - [`pwlti`]: segment maps, ordered products, closed-form propagation and
//!   the periodic fixed point for any piecewise-LTI schedule.
//! - [`dab`]: the four-interval converter schedule, its sign symmetries and
//!   the half-cycle fixed point.
//! - [`small_signal`]: rectified half-cycle maps on the four sampling
//!   surfaces and their z-domain transfer functions.
//! - [`oracle`]: exact time stepping used to check the closed forms.

pub mod dab;
pub mod error;
pub mod expm;
pub mod oracle;
pub mod pwlti;
pub mod small_signal;
pub mod tolerance;

pub use dab::{DabParams, DabSchedule, SymmetryConstants, TimingOverride};
pub use error::{Error, Result};
pub use expm::expm;
pub use num_complex::Complex64;
pub use oracle::{Injection, InjectionMeasurement, SimConfig, SteadyState, Waveform};
pub use pwlti::{Matrix, Schedule, Segment, SegmentMap, Vector};
pub use small_signal::{
    FrequencyResponseRow, HalfCycleModel, ModelKind, Polarity, Spacing, Surface, SurfaceLabel, SurfacePair,
    SweepSpec,
};
pub use tolerance::{Check, Tolerances};
