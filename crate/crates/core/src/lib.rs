//! Spin^c Dirac operators on model surfaces and flat 3-tori.
//!
//! The crate builds discretized model spaces ([`domains`]), equips them with
//! Spin^c structures ([`spinc`]), assembles the squared Dirac operator and
//! computes eigenspinors ([`dirac`]), evaluates the Energy-Momentum tensor and
//! its companions ([`emt`]), and checks the spectral identities and
//! inequalities that relate them ([`verify`]). The [`immersion`] module covers
//! surfaces in S²×ℝ: compatibility equations and generalized Killing spinors.

#![allow(clippy::needless_range_loop)]

pub mod clifford;
pub mod dirac;
pub mod domains;
pub mod emt;
pub mod error;
pub mod immersion;
pub mod io;
pub mod linalg;
pub mod report;
pub mod sphere;
pub mod spinc;
pub mod verify;

pub use num_complex::Complex64;

pub use crate::dirac::{Eigenpair, OperatorHandle, OperatorKind};
pub use crate::domains::{Domain, DomainKind};
pub use crate::emt::EmtData;
pub use crate::error::{Error, Result};
pub use crate::immersion::{GksField, ImmersionData};
pub use crate::report::Report;
pub use crate::spinc::{SpincStructure, SpinorField};
