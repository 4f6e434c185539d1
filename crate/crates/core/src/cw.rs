//! CW squeezed-vacuum propagation: combine source noise spectra, the cell
//! transmissivity, and atomic excess noise into transmitted quadrature-noise
//! spectra.
//!
//! The production path works from a measured `NoisePair`, so no model
//! parameters beyond the cell are needed; the general phase-resolved form is
//! retained for cross-checks. The transmitted extrema depend only on |T(w)|:
//! any phase of T(w)T(-w) can be absorbed into the local-oscillator phase.

use num_complex::Complex64;

use crate::eit::{transmissivity, SusceptibilityParams, Transmissivity};
use crate::error::{Error, Result};
use crate::excess_noise::NoiseSpectrum;
use crate::opa::{to_db, BogoliubovSpectra, NoisePair, VACUUM_VARIANCE};
use crate::spectral::RealSpectrum;

/// Phase-resolved transmitted noise, keeping the complex phases of T:
/// V'_theta(w) = 1/2 + (eta/2) [ |S(w)|^2 (|T(w)|^2 + |T(-w)|^2)
///                + 2 Re( C(w) S(-w) T(w) T(-w) e^{2 i theta} ) ].
pub fn transmitted_variance_general(
    spectra: &BogoliubovSpectra,
    efficiency: f64,
    medium: &Transmissivity,
    phase: f64,
) -> Result<RealSpectrum> {
    if !(0.0..=1.0).contains(&efficiency) {
        return Err(Error::InvalidParameter(format!(
            "efficiency must be in [0, 1], got {efficiency}"
        )));
    }
    spectra.grid().ensure_same(&medium.spectrum.grid)?;
    let rot = Complex64::from_polar(1.0, 2.0 * phase);
    let grid = spectra.grid().clone();
    let values = (0..grid.n_points())
        .map(|k| {
            let s2 = spectra.s_spec.values[k].norm_sqr();
            let t = medium.spectrum.values[k];
            let t_neg = medium.spectrum.reflected(k);
            let mags = t.norm_sqr() + t_neg.norm_sqr();
            let cross = (spectra.cross_real(k) * t * t_neg * rot).re;
            VACUUM_VARIANCE + 0.5 * efficiency * (s2 * mags + 2.0 * cross)
        })
        .collect();
    RealSpectrum::new(grid, values)
}

/// Transmitted extrema from measured source extrema:
/// V'±(w) = 1/2 + (1/4) [V+ + V- - 1] [|T(w)|^2 + |T(-w)|^2]
///              ± (1/2) [V+ - V-] |T(w)| |T(-w)|  +  V_noise(w).
pub fn transmitted_extrema(
    measured: &NoisePair,
    medium: &Transmissivity,
    noise: &NoiseSpectrum,
) -> Result<NoisePair> {
    measured.validate()?;
    measured.grid().ensure_same(&medium.spectrum.grid)?;
    measured.grid().ensure_same(&noise.spectrum.grid)?;
    let grid = measured.grid().clone();
    let mut plus = Vec::with_capacity(grid.n_points());
    let mut minus = Vec::with_capacity(grid.n_points());
    for k in 0..grid.n_points() {
        let (vp, vm) = (measured.v_plus.values[k], measured.v_minus.values[k]);
        let ta = medium.abs(k);
        let tb = medium.abs_reflected(k);
        let thermal = 0.25 * (vp + vm - 1.0) * (ta * ta + tb * tb);
        let coherent = 0.5 * (vp - vm) * ta * tb;
        let vn = noise.value(k);
        plus.push(VACUUM_VARIANCE + thermal + coherent + vn);
        minus.push(VACUUM_VARIANCE + thermal - coherent + vn);
    }
    NoisePair::new(
        RealSpectrum::new(grid.clone(), plus)?,
        RealSpectrum::new(grid, minus)?,
    )
}

/// One row of a two-photon-detuning scan.
#[derive(Debug, Clone, Copy)]
pub struct DetuningScanRow {
    /// Two-photon detuning offset in rad/us.
    pub detuning: f64,
    /// Best (most negative) transmitted squeezing in dB within the band.
    pub best_squeezing_db: f64,
}

#[derive(Debug, Clone)]
pub struct DetuningScan {
    pub rows: Vec<DetuningScanRow>,
    /// Index into `rows` of the detuning with the deepest squeezing.
    pub best_index: usize,
}

impl DetuningScan {
    pub fn best(&self) -> DetuningScanRow {
        self.rows[self.best_index]
    }
}

/// Evaluate the transmitted extrema across two-photon detunings and report
/// the deepest squeezing within an |w| analysis band (rad/us).
pub fn optimal_detuning_scan(
    measured: &NoisePair,
    medium: &SusceptibilityParams,
    noise: &NoiseSpectrum,
    detunings: &[f64],
    band: (f64, f64),
) -> Result<DetuningScan> {
    if detunings.is_empty() {
        return Err(Error::InvalidParameter("empty detuning range".into()));
    }
    let grid = measured.grid().clone();
    let band_indices: Vec<usize> = (0..grid.n_points())
        .filter(|&k| {
            let w = grid.value(k).abs();
            w >= band.0 && w <= band.1
        })
        .collect();
    if band_indices.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "analysis band [{}, {}] rad/us contains no grid points",
            band.0, band.1
        )));
    }
    let mut rows = Vec::with_capacity(detunings.len());
    let mut best_index = 0;
    for (i, &d2) in detunings.iter().enumerate() {
        let mut params = medium.clone();
        params.two_photon_detuning = d2;
        let t = transmissivity(&params, &grid)?;
        let out = transmitted_extrema(measured, &t, noise)?;
        let best = band_indices
            .iter()
            .map(|&k| out.v_minus.values[k])
            .fold(f64::INFINITY, f64::min);
        rows.push(DetuningScanRow {
            detuning: d2,
            best_squeezing_db: to_db(best),
        });
        if rows[i].best_squeezing_db < rows[best_index].best_squeezing_db {
            best_index = i;
        }
    }
    Ok(DetuningScan { rows, best_index })
}

/// Extrema of a sinusoidal phase sweep V(theta) = A + Re[Z e^{2 i theta}],
/// recovered exactly from uniform samples over one period via the first
/// Fourier coefficient.
pub fn sweep_extrema(samples: &[f64], phases: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean: f64 = samples.iter().sum::<f64>() / n;
    let mut z = Complex64::new(0.0, 0.0);
    for (s, th) in samples.iter().zip(phases.iter()) {
        z += s * Complex64::from_polar(1.0, -2.0 * th);
    }
    z *= 2.0 / n;
    (mean - z.norm(), mean + z.norm())
}
