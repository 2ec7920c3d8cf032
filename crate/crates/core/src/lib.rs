//! Simulation of weak-coupling correlation measurement for unknown
//! multipartite quantum states.
//!
//! The pipeline conveys the state to a single owner through strong couplings
//! and ancilla measurements, broadcasts computational-basis copies for the
//! single-party device lines, couples every device to a Gaussian pointer,
//! postselects once per mutually unbiased basis vector and assembles the
//! correlation functional from the extracted weak values. Every stage has a
//! closed-form density-matrix counterpart used as an oracle.
//!
//! All numerical types are generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the double-precision variants used by the CLI.

pub mod bases;
pub mod cli;
pub mod conveyance;
pub mod error;
pub mod estimator;
pub mod pointer;
pub mod qcore;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{Cx, Real};

pub type ComplexMatrix64 = qcore::ComplexMatrix<f64>;
pub type PureState64 = qcore::PureState<f64>;
pub type DensityMatrix64 = qcore::DensityMatrix<f64>;
pub type BasisSet64 = bases::BasisSet<f64>;
pub type PointerConfig64 = pointer::PointerConfig<f64>;
pub type CorrelationReport64 = estimator::CorrelationReport<f64>;

pub type DensityMatrix32 = qcore::DensityMatrix<f32>;
pub type PureState32 = qcore::PureState<f32>;
