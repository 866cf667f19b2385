//! Simulation of matter-wave four-wave mixing and Raman retrieval in a two-component
//! Bose-Einstein condensate used as an optical AND gate.
//!
//! Modules, bottom up:
//! - [`physical`]: constants, cloud and beam geometry, recoil quantities
//! - [`fwm`]: Thomas-Fermi integrals and the saturating growth law of the FWM product
//! - [`optics`]: Rabi frequencies, pulse areas, retrieval coupling and damping
//! - [`retrieval`]: the damped mean-field ladder equations, visibility scans, gate table
//! - [`fit`]: Levenberg-Marquardt least squares and the fitted model functions
//! - [`config`] and [`validation`]: settings parsing and the acceptance checks

pub mod config;
pub mod error;
pub mod fit;
pub mod fwm;
pub mod ode;
pub mod optics;
pub mod physical;
pub mod quadrature;
pub mod retrieval;
pub mod validation;

pub use error::{Error, Result};
