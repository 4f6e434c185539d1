//! Homodyne tomography: synthetic quadrature data for Gaussian states,
//! maximum-likelihood density-matrix reconstruction in the Fock basis,
//! Wigner functions, and Uhlmann fidelity.

mod fidelity;
mod fock;
mod maxlik;
mod wigner;

pub use fidelity::fidelity;
pub use fock::{
    build_squeezed_thermal, build_squeezed_thermal_with, FockDensityMatrix,
    DEFAULT_PAD, DEFAULT_TAIL_THRESHOLD,
};
pub use maxlik::{maxlik_reconstruct, MaxLikOptions, MaxLikResult};
pub use wigner::{uniform_axis as wigner_axis, wigner, WignerGrid};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Homodyne samples: (local-oscillator phase, quadrature value), with the
/// vacuum quadrature variance normalized to 1/2.
#[derive(Debug, Clone)]
pub struct QuadratureDataset {
    pub samples: Vec<(f64, f64)>,
    pub seed: Option<u64>,
}

impl QuadratureDataset {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        for &(phase, value) in &samples {
            if !phase.is_finite() || !value.is_finite() {
                return Err(Error::Validation(
                    "quadrature samples must be finite".into(),
                ));
            }
        }
        Ok(Self {
            samples,
            seed: None,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// How local-oscillator phases are assigned to consecutive samples.
#[derive(Debug, Clone)]
pub enum PhaseSchedule {
    /// Uniform sweep over [0, 2 pi).
    LinearSweep,
    /// Phases drawn uniformly at random from [0, 2 pi).
    RandomUniform,
    /// Explicit list, cycled over the samples.
    Fixed(Vec<f64>),
}

impl Default for PhaseSchedule {
    fn default() -> Self {
        PhaseSchedule::LinearSweep
    }
}

/// Stable normalized Hermite-function recurrence;
/// psi_n(q) = H_n(q) e^{-q^2/2} / sqrt(2^n n! sqrt(pi)).
pub fn quadrature_wavefunction(n: usize, q: f64) -> f64 {
    wavefunctions_up_to(n, q)[n]
}

/// psi_0(q) ..= psi_n_max(q) in one upward pass.
pub fn wavefunctions_up_to(n_max: usize, q: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let psi0 = std::f64::consts::PI.powf(-0.25) * (-q * q / 2.0).exp();
    out.push(psi0);
    if n_max >= 1 {
        out.push(std::f64::consts::SQRT_2 * q * psi0);
    }
    for k in 2..=n_max {
        let a = (2.0 / k as f64).sqrt() * q * out[k - 1];
        let b = ((k as f64 - 1.0) / k as f64).sqrt() * out[k - 2];
        out.push(a - b);
    }
    out
}

/// Draw homodyne samples a detector would record for a Gaussian state whose
/// quadrature variance is
/// V(theta) = (v_max + v_min)/2 + (v_max - v_min)/2 * cos(2 (theta - orientation)).
pub fn synthesize_quadratures(
    v_max: f64,
    v_min: f64,
    orientation: f64,
    n_samples: usize,
    schedule: &PhaseSchedule,
    seed: u64,
) -> Result<QuadratureDataset> {
    if !(v_min > 0.0) || v_max < v_min {
        return Err(Error::NonphysicalInput(format!(
            "need v_max >= v_min > 0, got v_max = {v_max}, v_min = {v_min}"
        )));
    }
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean = 0.5 * (v_max + v_min);
    let diff = 0.5 * (v_max - v_min);
    let two_pi = std::f64::consts::TAU;
    let mut samples = Vec::with_capacity(n_samples);
    for j in 0..n_samples {
        let phase = match schedule {
            PhaseSchedule::LinearSweep => two_pi * j as f64 / n_samples as f64,
            PhaseSchedule::RandomUniform => rng.gen::<f64>() * two_pi,
            PhaseSchedule::Fixed(list) => {
                if list.is_empty() {
                    return Err(Error::InvalidParameter("empty fixed phase list".into()));
                }
                list[j % list.len()].rem_euclid(two_pi)
            }
        };
        let variance = mean + diff * (2.0 * (phase - orientation)).cos();
        let normal = Normal::new(0.0, variance.sqrt())
            .map_err(|e| Error::NonphysicalInput(format!("bad variance {variance}: {e}")))?;
        samples.push((phase, normal.sample(&mut rng)));
    }
    Ok(QuadratureDataset {
        samples,
        seed: Some(seed),
    })
}
