//! Simulation of broadband squeezed vacuum propagating through a three-level
//! EIT medium, in both CW and pulsed regimes, with synthetic homodyne
//! tomography to close the loop: calibrate the medium from classical
//! measurements, predict transmitted quadrature-noise spectra and pulsed-mode
//! states, reconstruct states from quadrature data by maximum likelihood, and
//! score prediction against reconstruction by quantum fidelity.

pub mod calibration;
pub mod config;
pub mod cw;
pub mod eit;
pub mod error;
pub mod excess_noise;
pub mod io;
pub mod opa;
pub mod pulsed;
pub mod spectral;
pub mod tomography;

pub use error::{Error, Result};
pub use spectral::{ComplexSpectrum, FrequencyGrid, TemporalGrid, TemporalSignal};
