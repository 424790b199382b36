//! Audit metrics for synthetic smart-meter load curves.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no IO. It covers:
//!
//! * [`model`]: load curves, temperature series, datasets and their validation;
//! * [`transforms`]: profiles, summary statistics, autocorrelation, PCA;
//! * [`encoder`]: the causal dilated-convolution embedding network used by Context-FID;
//! * [`fidelity`], [`thermo`], [`utility`], [`privacy`]: the three audit axes plus
//!   thermo-sensitivity;
//! * [`surrogate`]: a small statistical generator used as a test double;
//! * [`report`]: the serializable audit report.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod encoder;
pub mod error;
pub mod fidelity;
pub mod linalg;
pub mod model;
pub mod privacy;
pub mod report;
pub mod seed;
pub mod stats;
pub mod surrogate;
pub mod thermo;
pub mod time;
pub mod transforms;
pub mod utility;

pub use error::{Error, Result};
pub use model::{
    partition_by_category, validate, AlignedDataset, Category, ContractedPower, LoadCurve, Role,
    TemperatureSeries, TimeOfUse, Violation, Window,
};
pub use time::{CivilDate, Timestamp};
