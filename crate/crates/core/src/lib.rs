//! Fisher-information toolkit for nanoscale NMR with NV sensors.

pub mod dipolar;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod montecarlo;
pub mod multi;
pub mod polarization;
pub mod qfi;
pub mod quadrature;
pub mod simple;
pub mod spatial;
pub mod undriven;

pub use error::{Error, Result};
pub use qfi::{Coherence, CoherenceDerivative, MeasurementBasis, QfiBreakdown};
