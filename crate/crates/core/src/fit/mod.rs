//! Nonlinear least squares and the model functions fitted to growth and interference data.

mod data;
mod lsq;
mod models;
pub mod synthetic;

pub use data::DataSeries;
pub use lsq::{least_squares, FitResult, LsqOptions};
pub use models::{
    envelope_model, fit_growth, fit_periodic_sinusoid, fit_sinusoid_envelope, EnvelopeParams,
    PeriodicFit, SinusoidEnvelope, SINUSOID_ENVELOPE_NAMES,
};
