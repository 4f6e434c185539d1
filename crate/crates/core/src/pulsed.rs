//! Pulsed squeezed-vacuum propagation: chopper gating, spectral filtering by
//! the cell, projection onto the analyzed temporal mode, and the resulting
//! pulsed quadrature variance.
//!
//! The analyzed mode produces a single bosonic operator
//! A = Integral F(w) a(w) dw + vacuum remainder, with
//! F(w) = sqrt(eta / 2 pi) Integral T(w') W(-w') tau(w' - w) dw'.
//! Its quadrature variance against measured source extrema V±(w) is
//! V''(theta) = 1/2 + V_noise
//!            + (1/2) Integral |F(w)|^2 [V+ + V- - 1] dw
//!            + (1/2) Integral |F(w) F(-w)| [V+ - V-] cos(2 theta + phi(w)) dw,
//! with phi(w) = arg[F(w) F(-w)].

use num_complex::Complex64;

use crate::eit::Transmissivity;
use crate::error::{Error, Result};
use crate::excess_noise::NoiseSpectrum;
use crate::opa::NoisePair;
use crate::spectral::{
    forward_transform, inverse_transform, trapezoid, ComplexSpectrum, RealSpectrum, TemporalGrid,
    TemporalSignal,
};
use crate::tomography::{build_squeezed_thermal_with, FockDensityMatrix};

/// Normalized analysis mode W(t): real, nonnegative, unit L2 norm.
#[derive(Debug, Clone)]
pub struct TemporalMode {
    pub profile: TemporalSignal,
}

impl TemporalMode {
    pub fn norm_squared(&self) -> f64 {
        self.profile.energy()
    }
}

/// Chopper gate tau(t), real with 0 <= tau <= 1.
#[derive(Debug, Clone)]
pub struct ChopperWindow {
    pub profile: TemporalSignal,
}

impl ChopperWindow {
    pub fn validate(&self) -> Result<()> {
        for v in &self.profile.values {
            if v.im != 0.0 || v.re < 0.0 || v.re > 1.0 + 1e-12 {
                return Err(Error::InvalidParameter(
                    "chopper transmission must be real in [0, 1]".into(),
                ));
            }
        }
        Ok(())
    }

    /// Fully open gate.
    pub fn open(grid: TemporalGrid) -> Self {
        Self {
            profile: TemporalSignal::from_real_fn(grid, |_| 1.0),
        }
    }
}

/// Smooth raised-cosine gate with the given amplitude FWHM (us), centered at
/// t = 0: tau(t) = cos^2(pi t / (2 fwhm)) for |t| <= fwhm, zero outside.
pub fn raised_cosine_chopper(grid: &TemporalGrid, fwhm_us: f64) -> Result<ChopperWindow> {
    if !(fwhm_us > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "chopper FWHM must be > 0, got {fwhm_us}"
        )));
    }
    let profile = TemporalSignal::from_real_fn(grid.clone(), |t| {
        if t.abs() <= fwhm_us {
            let c = (std::f64::consts::FRAC_PI_2 * t / fwhm_us).cos();
            c * c
        } else {
            0.0
        }
    });
    Ok(ChopperWindow { profile })
}

/// Mode filter F(w) and its pointwise vacuum weight G(w) = sqrt(1 - |F|^2).
#[derive(Debug, Clone)]
pub struct ModeFilter {
    pub f_spec: ComplexSpectrum,
    pub vacuum_weight: RealSpectrum,
}

impl ModeFilter {
    /// F(w) F(-w), whose phase controls quadrature mixing.
    pub fn pair_product(&self, k: usize) -> Complex64 {
        self.f_spec.values[k] * self.f_spec.reflected(k)
    }
}

/// W(t) = sqrt of the transmitted classical pulse intensity, normalized.
pub fn build_mode_from_classical(transmitted: &TemporalSignal) -> Result<TemporalMode> {
    let energy = transmitted.energy();
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(Error::DegenerateInput(
            "cannot build a mode from a zero-energy pulse".into(),
        ));
    }
    let scale = 1.0 / energy.sqrt();
    let values = transmitted
        .values
        .iter()
        .map(|v| Complex64::new(v.norm() * scale, 0.0))
        .collect();
    Ok(TemporalMode {
        profile: TemporalSignal::new(transmitted.grid.clone(), values)?,
    })
}

/// F(w) = sqrt(eta/2 pi) Integral T(w') W(-w') tau(w' - w) dw', evaluated as
/// sqrt(eta) * forward[ tau(-t) * inverse(T(w) W(-w))(t) ](w).
pub fn mode_filter(
    medium: &Transmissivity,
    mode: &TemporalMode,
    chopper: &ChopperWindow,
    efficiency: f64,
) -> Result<ModeFilter> {
    if !(0.0..=1.0).contains(&efficiency) {
        return Err(Error::InvalidParameter(format!(
            "efficiency must be in [0, 1], got {efficiency}"
        )));
    }
    mode.profile.grid.ensure_same(&chopper.profile.grid)?;
    chopper.validate()?;
    if (mode.norm_squared() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParameter(format!(
            "temporal mode must have unit norm, got {}",
            mode.norm_squared()
        )));
    }

    let w_spec = forward_transform(&mode.profile);
    w_spec.grid.ensure_same(&medium.spectrum.grid)?;
    let n = w_spec.grid.n_points();

    // g(w) = T(w) W(-w)
    let g = ComplexSpectrum::new(
        w_spec.grid.clone(),
        (0..n)
            .map(|k| medium.spectrum.values[k] * w_spec.reflected(k))
            .collect(),
    )?;
    let g_t = inverse_transform(&g);

    // multiply by the time-reversed chopper; index (n - m) % n mirrors t -> -t
    let product = TemporalSignal::new(
        g_t.grid.clone(),
        (0..n)
            .map(|m| chopper.profile.values[(n - m) % n] * g_t.values[m])
            .collect(),
    )?;
    let mut f_spec = forward_transform(&product);
    let root_eta = efficiency.sqrt();
    for v in f_spec.values.iter_mut() {
        *v *= root_eta;
    }

    let max_abs = f_spec.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if max_abs > 1.0 + 1e-9 {
        return Err(Error::NormalizationViolation { max_abs });
    }
    let vacuum_weight = RealSpectrum::new(
        f_spec.grid.clone(),
        f_spec
            .values
            .iter()
            .map(|v| (1.0 - v.norm_sqr()).max(0.0).sqrt())
            .collect(),
    )?;
    Ok(ModeFilter {
        f_spec,
        vacuum_weight,
    })
}

/// Mean level and pair coefficient of the pulsed variance:
/// V''(theta) = A + (1/2) Re[ Z e^{2 i theta} ], with
/// A = 1/2 + V_noise + (1/2) Int |F|^2 (V+ + V- - 1) dw and
/// Z = Int (V+ - V-) F(w) F(-w) dw.
fn variance_coefficients(
    measured: &NoisePair,
    filter: &ModeFilter,
    pulsed_noise: f64,
) -> Result<(f64, Complex64)> {
    measured.validate()?;
    measured.grid().ensure_same(&filter.f_spec.grid)?;
    let grid = measured.grid();
    let n = grid.n_points();
    let mut thermal = Vec::with_capacity(n);
    let mut pair_re = Vec::with_capacity(n);
    let mut pair_im = Vec::with_capacity(n);
    for k in 0..n {
        let (vp, vm) = (measured.v_plus.values[k], measured.v_minus.values[k]);
        let f = filter.f_spec.values[k];
        thermal.push(f.norm_sqr() * (vp + vm - 1.0));
        let z = (vp - vm) * filter.pair_product(k);
        pair_re.push(z.re);
        pair_im.push(z.im);
    }
    let dw = grid.spacing();
    let a = 0.5 + pulsed_noise + 0.5 * trapezoid(&thermal, dw);
    let z = Complex64::new(trapezoid(&pair_re, dw), trapezoid(&pair_im, dw));
    Ok((a, z))
}

/// V''_theta for the analyzed pulse mode.
pub fn pulsed_variance(
    measured: &NoisePair,
    filter: &ModeFilter,
    pulsed_noise: f64,
    phase: f64,
) -> Result<f64> {
    let (a, z) = variance_coefficients(measured, filter, pulsed_noise)?;
    Ok(a + 0.5 * (z * Complex64::from_polar(1.0, 2.0 * phase)).re)
}

/// Extremal pulsed variances and the phase of the maximum-variance quadrature.
#[derive(Debug, Clone, Copy)]
pub struct PulsedExtrema {
    pub v_min: f64,
    pub v_max: f64,
    /// Local-oscillator phase at which V'' is maximal, in [0, pi).
    pub orientation: f64,
}

pub fn pulsed_extrema(
    measured: &NoisePair,
    filter: &ModeFilter,
    pulsed_noise: f64,
) -> Result<PulsedExtrema> {
    let (a, z) = variance_coefficients(measured, filter, pulsed_noise)?;
    Ok(PulsedExtrema {
        v_min: a - 0.5 * z.norm(),
        v_max: a + 0.5 * z.norm(),
        orientation: (-0.5 * z.arg()).rem_euclid(std::f64::consts::PI),
    })
}

/// Pulsed excess noise: Integral |W(w)|^2 V_noise(w) dw with the mode spectrum
/// normalized to unit integral.
pub fn pulsed_excess_noise(noise: &NoiseSpectrum, mode: &TemporalMode) -> Result<f64> {
    if (mode.norm_squared() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParameter(format!(
            "temporal mode must have unit norm, got {}",
            mode.norm_squared()
        )));
    }
    let w_spec = forward_transform(&mode.profile);
    w_spec.grid.ensure_same(&noise.spectrum.grid)?;
    let dw = w_spec.grid.spacing();
    let weights: Vec<f64> = w_spec.values.iter().map(|v| v.norm_sqr()).collect();
    let norm = trapezoid(&weights, dw);
    let weighted: Vec<f64> = weights
        .iter()
        .zip(noise.spectrum.values.iter())
        .map(|(w, v)| w * v)
        .collect();
    Ok(trapezoid(&weighted, dw) / norm)
}

/// Squeezed thermal state matching pulsed extrema:
/// n_bar = (sqrt(4 v_max v_min) - 1)/2, r = (1/4) ln(v_max / v_min),
/// with the maximum-variance quadrature at `orientation`.
pub fn predicted_state(
    v_max: f64,
    v_min: f64,
    orientation: f64,
    cutoff: usize,
) -> Result<FockDensityMatrix> {
    if !(v_min > 0.0) || v_max < v_min {
        return Err(Error::NonphysicalInput(format!(
            "need v_max >= v_min > 0, got v_max = {v_max}, v_min = {v_min}"
        )));
    }
    let product = 4.0 * v_max * v_min;
    if product < 1.0 - 1e-9 {
        return Err(Error::NonphysicalInput(format!(
            "v_max * v_min = {} violates the uncertainty bound 1/4",
            v_max * v_min
        )));
    }
    let n_bar = 0.5 * (product.sqrt() - 1.0).max(0.0);
    let r = 0.25 * (v_max / v_min).ln();
    build_squeezed_thermal_with(
        n_bar,
        r,
        orientation,
        cutoff,
        crate::tomography::DEFAULT_PAD,
        crate::tomography::DEFAULT_TAIL_THRESHOLD,
    )
}
