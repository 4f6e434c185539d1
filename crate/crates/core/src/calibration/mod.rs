//! Fit model parameters to classical measurements: EIT transmission spectra
//! and slow-light pulse delays jointly across control powers, and the source
//! cavity parameters from measured noise spectra.
//!
//! All control powers share one parameter set; only the control Rabi
//! frequency varies, as kappa * sqrt(P).

mod lm;

pub use lm::{minimize, LmOptions, LmResult};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::eit::{group_delay_ns, propagate_pulse, transmissivity, SusceptibilityParams};
use crate::error::{Error, Result};
use crate::opa::OpaParams;
use crate::pulsed::raised_cosine_chopper;
use crate::spectral::FrequencyGrid;

/// Classical measurements at one control power.
#[derive(Debug, Clone)]
pub struct PowerRecord {
    pub power_mw: f64,
    /// (two-photon detuning rad/us, intensity transmission normalized to the
    /// off-resonant background).
    pub spectrum: Vec<(f64, f64)>,
    /// (time us, intensity) record of the delayed pulse.
    pub pulse: Vec<(f64, f64)>,
    pub delay_ns: f64,
    pub delay_sigma_ns: f64,
}

#[derive(Debug, Clone)]
pub struct ClassicalDataset {
    pub records: Vec<PowerRecord>,
}

impl ClassicalDataset {
    pub fn validate(&self) -> Result<()> {
        if self.records.is_empty() {
            return Err(Error::Validation(
                "classical dataset needs at least one control power".into(),
            ));
        }
        for r in &self.records {
            if !(r.power_mw > 0.0) {
                return Err(Error::Validation(format!(
                    "control power must be positive, got {}",
                    r.power_mw
                )));
            }
            if !(r.delay_sigma_ns > 0.0) {
                return Err(Error::Validation("delay uncertainty must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Shared medium parameters of the joint fit; rates in rad/us.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EitFitParams {
    pub gamma_bc: f64,
    pub doppler_width: f64,
    pub chi_scale: f64,
    pub one_photon_detuning: f64,
    /// kappa: control Rabi frequency per sqrt(mW).
    pub rabi_per_sqrt_mw: f64,
}

/// Fixed geometry of the cell, not part of the fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumGeometry {
    pub length_cm: f64,
    pub carrier_wavelength_nm: f64,
}

impl EitFitParams {
    pub fn medium_at_power(
        &self,
        geometry: &MediumGeometry,
        power_mw: f64,
        two_photon_detuning: f64,
    ) -> SusceptibilityParams {
        SusceptibilityParams {
            rabi: self.rabi_per_sqrt_mw * power_mw.sqrt(),
            gamma_bc: self.gamma_bc,
            doppler_width: self.doppler_width,
            one_photon_detuning: self.one_photon_detuning,
            two_photon_detuning,
            chi_scale: self.chi_scale,
            length_cm: geometry.length_cm,
            carrier_wavelength_nm: geometry.carrier_wavelength_nm,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EitFitOptions {
    pub lm: LmOptions,
    /// Relative per-point noise on normalized transmission, for weighting.
    pub spectral_noise_fraction: f64,
    /// Per-point waveform noise as a fraction of the record peak.
    pub waveform_noise_fraction: f64,
    /// Delay-block weight relative to the spectral block; None equalizes the
    /// initial residual norms of the two blocks.
    pub delay_block_weight: Option<f64>,
    /// Waveform-block weight relative to the spectral block; None equalizes.
    pub waveform_block_weight: Option<f64>,
    /// Include the time-domain pulse records in the objective. The delayed
    /// waveform is what pins the absolute frequency scale: the CW line shape
    /// is exactly invariant under (W, chi0, Dp0, Omega^2) -> lambda * (...),
    /// so spectra plus bare delays leave that direction nearly free.
    pub fit_waveforms: bool,
    /// Grid used for model pulse propagation inside the fit.
    pub grid_points: usize,
    pub grid_span_mhz: f64,
    /// Classical probe pulse: raised-cosine gate FWHM in us.
    pub pulse_fwhm_us: f64,
}

impl Default for EitFitOptions {
    fn default() -> Self {
        Self {
            lm: LmOptions::default(),
            spectral_noise_fraction: 0.01,
            waveform_noise_fraction: 0.01,
            delay_block_weight: None,
            waveform_block_weight: None,
            fit_waveforms: true,
            grid_points: 4096,
            grid_span_mhz: 50.0,
            pulse_fwhm_us: 0.6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: EitFitParams,
    /// (power mW, fitted Rabi frequency rad/us) per record.
    pub rabi_per_power: Vec<(f64, f64)>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub residual_history: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Intensity transmission at a scanned two-photon detuning, normalized to the
/// off-resonant (two-level) background, at zero sideband frequency.
fn normalized_transmission(
    params: &SusceptibilityParams,
    geometry_depth: f64,
    delta2: f64,
) -> Result<f64> {
    let chi = params.chi_at(params.one_photon_detuning, delta2)?;
    let t2 = (-2.0 * geometry_depth * chi.im).exp();
    // two-level background: the Omega -> 0 limit of the same line
    let chi_bg = -params.chi_scale
        / num_complex::Complex64::new(params.one_photon_detuning, params.doppler_width);
    let bg = (-2.0 * geometry_depth * chi_bg.im).exp();
    Ok(t2 / bg)
}

fn model_transmitted_pulse(
    params: &SusceptibilityParams,
    grid: &FrequencyGrid,
    pulse_fwhm_us: f64,
) -> Result<(crate::spectral::TemporalSignal, crate::spectral::TemporalSignal)> {
    let chopper = raised_cosine_chopper(&grid.dual(), pulse_fwhm_us)?;
    let medium = transmissivity(params, grid)?;
    let out = propagate_pulse(&chopper.profile, &medium)?;
    Ok((chopper.profile, out))
}

/// Linear interpolation of |out(t)|^2 at an arbitrary time, on the uniform grid.
fn intensity_at(out: &crate::spectral::TemporalSignal, t: f64) -> f64 {
    let g = &out.grid;
    let pos = (t - g.origin()) / g.spacing();
    if pos < 0.0 || pos > (g.n_points() - 1) as f64 {
        return 0.0;
    }
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    let a = out.values[i].norm_sqr();
    if frac == 0.0 || i + 1 >= g.n_points() {
        return a;
    }
    let b = out.values[i + 1].norm_sqr();
    a + (b - a) * frac
}

/// Joint weighted least squares over all spectra and delays. Positive
/// parameters are optimized in log space; the one-photon detuning is linear.
pub fn fit_eit(
    dataset: &ClassicalDataset,
    geometry: &MediumGeometry,
    initial: &EitFitParams,
    options: &EitFitOptions,
) -> Result<FitResult> {
    dataset.validate()?;
    let mut warnings = Vec::new();
    let n_spec: usize = dataset.records.iter().map(|r| r.spectrum.len()).sum();
    let n_wave: usize = if options.fit_waveforms {
        dataset.records.iter().map(|r| r.pulse.len()).sum()
    } else {
        0
    };
    let n_res = n_spec + n_wave + dataset.records.len();
    if n_res < 5 {
        warnings.push(format!(
            "only {n_res} residuals for 5 parameters: fit is rank-deficient"
        ));
    }
    if !options.fit_waveforms || n_wave == 0 {
        warnings.push(
            "fitting without pulse waveforms: the absolute frequency scale \
             (W, chi0, Dp0, kappa^2 jointly) is nearly unidentifiable"
                .into(),
        );
    }

    let grid = FrequencyGrid::spanning_mhz(options.grid_points, options.grid_span_mhz)?;
    let depth = SusceptibilityParams {
        rabi: 0.0,
        gamma_bc: 1.0,
        doppler_width: 1.0,
        one_photon_detuning: 0.0,
        two_photon_detuning: 0.0,
        chi_scale: 1.0,
        length_cm: geometry.length_cm,
        carrier_wavelength_nm: geometry.carrier_wavelength_nm,
    }
    .half_phase_depth();

    let unpack = |x: &[f64]| EitFitParams {
        gamma_bc: x[0].exp(),
        doppler_width: x[1].exp(),
        chi_scale: x[2].exp(),
        one_photon_detuning: x[3],
        rabi_per_sqrt_mw: x[4].exp(),
    };

    let residuals = |x: &[f64], wave_weight: f64, delay_weight: f64| -> Result<Vec<f64>> {
        let p = unpack(x);
        let mut out = Vec::with_capacity(n_res);
        for rec in &dataset.records {
            // spectra and delays are both taken on two-photon resonance
            let medium = p.medium_at_power(geometry, rec.power_mw, 0.0);
            medium.validate().map_err(|e| {
                Error::InvalidParameter(format!("parameters left the valid domain: {e}"))
            })?;
            for &(d2, y) in &rec.spectrum {
                let m = normalized_transmission(&medium, depth, d2)?;
                let sigma = options.spectral_noise_fraction * y.abs().max(1e-6);
                out.push((m - y) / sigma);
            }
        }
        for rec in &dataset.records {
            let medium = p.medium_at_power(geometry, rec.power_mw, 0.0);
            let (input, model_out) =
                model_transmitted_pulse(&medium, &grid, options.pulse_fwhm_us)?;
            if options.fit_waveforms && !rec.pulse.is_empty() {
                let peak = rec
                    .pulse
                    .iter()
                    .map(|&(_, y)| y)
                    .fold(0.0f64, f64::max)
                    .max(1e-9);
                let sigma = options.waveform_noise_fraction * peak;
                for &(t, y) in &rec.pulse {
                    out.push(wave_weight * (intensity_at(&model_out, t) - y) / sigma);
                }
            }
            let d = group_delay_ns(&input, &model_out)?;
            out.push(delay_weight * (d - rec.delay_ns) / rec.delay_sigma_ns);
        }
        Ok(out)
    };

    let x0 = [
        initial.gamma_bc.ln(),
        initial.doppler_width.ln(),
        initial.chi_scale.ln(),
        initial.one_photon_detuning,
        initial.rabi_per_sqrt_mw.ln(),
    ];

    // block weighting: equalize initial residual norms unless overridden
    let (wave_weight, delay_weight) = {
        let need_wave = options.waveform_block_weight.is_none() && n_wave > 0;
        let need_delay = options.delay_block_weight.is_none();
        if need_wave || need_delay {
            let r0 = residuals(&x0, 1.0, 1.0)?;
            let norm_of = |s: &[f64]| s.iter().map(|v| v * v).sum::<f64>().sqrt();
            let spec_norm = norm_of(&r0[..n_spec]);
            let wave_norm = norm_of(&r0[n_spec..n_spec + n_wave]);
            let delay_norm = norm_of(&r0[n_spec + n_wave..]);
            let equalize = |n: f64| {
                if spec_norm > 1e-12 && n > 1e-12 {
                    spec_norm / n
                } else {
                    1.0
                }
            };
            (
                options.waveform_block_weight.unwrap_or(equalize(wave_norm)),
                options.delay_block_weight.unwrap_or(equalize(delay_norm)),
            )
        } else {
            (
                options.waveform_block_weight.unwrap_or(1.0),
                options.delay_block_weight.unwrap_or(1.0),
            )
        }
    };

    let objective = |x: &[f64]| residuals(x, wave_weight, delay_weight);
    let lm = minimize(&objective, &x0, &options.lm)?;
    let params = unpack(&lm.x);
    if !lm.converged {
        warnings.push(format!(
            "no convergence after {} iterations; returning best-so-far (cost {:.3e})",
            lm.iterations, lm.cost
        ));
    }
    Ok(FitResult {
        params,
        rabi_per_power: dataset
            .records
            .iter()
            .map(|r| (r.power_mw, params.rabi_per_sqrt_mw * r.power_mw.sqrt()))
            .collect(),
        residual_norm: lm.cost.sqrt(),
        iterations: lm.iterations,
        converged: lm.converged,
        residual_history: lm.cost_history,
        warnings,
    })
}

/// One measured point of the source noise spectra, in shot-noise units.
#[derive(Debug, Clone, Copy)]
pub struct OpaSample {
    pub omega: f64,
    pub v_plus: f64,
    pub v_minus: f64,
}

#[derive(Debug, Clone)]
pub struct OpaFitResult {
    pub params: OpaParams,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Least-squares fit of (gamma, pump ratio, efficiency) to measured extrema.
/// The pump ratio and efficiency are constrained to (0, 1) by a logistic
/// parametrization; `sigma_db` weights residuals by the stated dB error.
pub fn fit_opa(samples: &[OpaSample], initial: &OpaParams, sigma_db: f64) -> Result<OpaFitResult> {
    if samples.len() < 2 {
        return Err(Error::RankDeficient(format!(
            "{} sample frequencies cannot determine (gamma, pump, efficiency); \
             the cavity width is unidentifiable",
            samples.len()
        )));
    }
    for s in samples {
        if s.v_plus < s.v_minus {
            return Err(Error::NonphysicalInput(format!(
                "V+ < V- at omega = {}",
                s.omega
            )));
        }
    }
    let to_sigma = sigma_db * std::f64::consts::LN_10 / 10.0;

    let f = |x: &[f64]| -> Result<Vec<f64>> {
        let p = OpaParams {
            cavity_hwhm: x[0].exp(),
            pump_ratio: sigmoid(x[1]),
            efficiency: sigmoid(x[2]),
        };
        let sp = p.pump_ratio.sqrt();
        let mut out = Vec::with_capacity(2 * samples.len());
        for s in samples {
            let u = s.omega / p.cavity_hwhm;
            let vp = 0.5 + p.efficiency * 2.0 * sp / (u * u + (1.0 - sp) * (1.0 - sp));
            let vm = 0.5 - p.efficiency * 2.0 * sp / (u * u + (1.0 + sp) * (1.0 + sp));
            out.push((vp - s.v_plus) / (to_sigma * s.v_plus));
            out.push((vm - s.v_minus) / (to_sigma * s.v_minus));
        }
        Ok(out)
    };

    let x0 = [
        initial.cavity_hwhm.ln(),
        logit(initial.pump_ratio.clamp(1e-6, 1.0 - 1e-6)),
        logit(initial.efficiency.clamp(1e-6, 1.0 - 1e-6)),
    ];
    let lm = minimize(&f, &x0, &LmOptions::default())?;
    let mut warnings = Vec::new();
    let mut pump_ratio = sigmoid(lm.x[1]);
    if pump_ratio > 1.0 - 1e-9 {
        pump_ratio = 1.0 - 1e-9;
        warnings.push("pump ratio driven to threshold; clamped below 1".into());
    }
    if !lm.converged {
        warnings.push(format!(
            "no convergence after {} iterations; returning best-so-far",
            lm.iterations
        ));
    }
    Ok(OpaFitResult {
        params: OpaParams {
            cavity_hwhm: lm.x[0].exp(),
            pump_ratio,
            efficiency: sigmoid(lm.x[2]),
        },
        residual_norm: lm.cost.sqrt(),
        iterations: lm.iterations,
        converged: lm.converged,
        warnings,
    })
}

#[derive(Debug, Clone)]
pub struct SyntheticScan {
    /// Two-photon detuning scan range (rad/us) and point count.
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

/// Generate a classical dataset from known parameters, with multiplicative
/// spectral noise, additive waveform noise (the same fraction, relative to
/// the record peak), and Gaussian delay jitter.
#[allow(clippy::too_many_arguments)]
pub fn synthesize_classical_dataset(
    truth: &EitFitParams,
    geometry: &MediumGeometry,
    powers_mw: &[f64],
    scan: &SyntheticScan,
    pulse_fwhm_us: f64,
    spectral_noise_fraction: f64,
    delay_jitter_ns: f64,
    seed: u64,
) -> Result<ClassicalDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let grid = FrequencyGrid::spanning_mhz(4096, 50.0)?;
    let depth = SusceptibilityParams {
        rabi: 0.0,
        gamma_bc: 1.0,
        doppler_width: 1.0,
        one_photon_detuning: 0.0,
        two_photon_detuning: 0.0,
        chi_scale: 1.0,
        length_cm: geometry.length_cm,
        carrier_wavelength_nm: geometry.carrier_wavelength_nm,
    }
    .half_phase_depth();

    let mut records = Vec::with_capacity(powers_mw.len());
    for &power in powers_mw {
        let medium = truth.medium_at_power(geometry, power, 0.0);
        let mut spectrum = Vec::with_capacity(scan.points);
        for i in 0..scan.points {
            let d2 = scan.from
                + (scan.to - scan.from) * i as f64 / (scan.points.max(2) - 1) as f64;
            let clean = normalized_transmission(&medium, depth, d2)?;
            let noisy = clean * (1.0 + spectral_noise_fraction * noise.sample(&mut rng));
            spectrum.push((d2, noisy.max(0.0)));
        }
        let chopper = raised_cosine_chopper(&grid.dual(), pulse_fwhm_us)?;
        let t = transmissivity(&medium, &grid)?;
        let out = propagate_pulse(&chopper.profile, &t)?;
        let clean_delay = group_delay_ns(&chopper.profile, &out)?;
        let delay = clean_delay + delay_jitter_ns * noise.sample(&mut rng);
        // record a ~200-point window around the delayed pulse
        let t_lo = -2.0 * pulse_fwhm_us;
        let t_hi = 2.0 * pulse_fwhm_us + 2e-3 * clean_delay.max(0.0);
        let stride =
            (((t_hi - t_lo) / out.grid.spacing()) as usize / 400).max(1);
        let peak = out.values.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
        let pulse = out
            .values
            .iter()
            .enumerate()
            .step_by(stride)
            .filter(|(m, _)| {
                let t = out.grid.value(*m);
                t >= t_lo && t <= t_hi
            })
            .map(|(m, v)| {
                let y = v.norm_sqr() + spectral_noise_fraction * peak * noise.sample(&mut rng);
                (out.grid.value(m), y.max(0.0))
            })
            .collect();
        records.push(PowerRecord {
            power_mw: power,
            spectrum,
            pulse,
            delay_ns: delay,
            delay_sigma_ns: 2.0,
        });
    }
    Ok(ClassicalDataset { records })
}
