//! State-vector simulation of complete, deterministic Bell measurement built
//! from nonlocal spin-product measurements with shared-entanglement meters.
//!
//! The numerical core is generic over the real scalar ([`Scalar`], `f64` or
//! `f32`); the aliases below fix the usual double-precision instances.

pub mod bellcore;
pub mod error;
pub mod measure;
pub mod photonic;
pub mod protocols;
pub mod qstate;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod verify;

pub use bellcore::{
    bell_state, classify, from_bell, spin_product, to_bell, BellLabel, SpinProductId,
};
pub use error::{Error, Result};
pub use protocols::{Histogram, Scheme};
pub use qstate::{Axis, Sign};
pub use rng::RngStream;
pub use scalar::Scalar;

pub type StateVector = qstate::StateVector<f64>;
pub type StateVectorF32 = qstate::StateVector<f32>;
pub type Operator = qstate::Operator<f64>;
pub type OperatorF32 = qstate::Operator<f32>;
pub type BellCoefficients = bellcore::BellCoefficients<f64>;
pub type SpinProduct = bellcore::SpinProduct<f64>;
pub type PovmElement = measure::PovmElement<f64>;
pub type MeasOperator = measure::MeasOperator<f64>;
pub type ProtocolResult = protocols::ProtocolResult<f64>;
