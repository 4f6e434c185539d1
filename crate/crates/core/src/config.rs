//! JSON run configuration. File-facing units are MHz, ns, mW, cm, nm and dB;
//! everything converts to the internal rad/us and us system here, at the
//! boundary.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calibration::{EitFitParams, MediumGeometry};
use crate::eit::SusceptibilityParams;
use crate::error::{Error, Result};
use crate::excess_noise::{evaluate_parametric, load_noise_spectrum, NoiseSpectrum, ParametricNoise};
use crate::opa::OpaParams;
use crate::pulsed::{raised_cosine_chopper, ChopperWindow};
use crate::spectral::FrequencyGrid;

pub const TWO_PI: f64 = std::f64::consts::TAU;

pub fn mhz_to_rad_per_us(mhz: f64) -> f64 {
    TWO_PI * mhz
}

pub fn ns_to_us(ns: f64) -> f64 {
    ns * 1e-3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_grid_points")]
    pub n_points: usize,
    #[serde(default = "default_grid_span")]
    pub max_frequency_mhz: f64,
}

fn default_grid_points() -> usize {
    1 << 14
}

fn default_grid_span() -> f64 {
    50.0
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_points: default_grid_points(),
            max_frequency_mhz: default_grid_span(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub gamma_bc_mhz: f64,
    pub doppler_width_mhz: f64,
    #[serde(default)]
    pub one_photon_detuning_mhz: f64,
    #[serde(default)]
    pub two_photon_detuning_mhz: f64,
    pub chi_scale: f64,
    pub length_cm: f64,
    pub carrier_wavelength_nm: f64,
    /// Control Rabi frequency per sqrt(mW), in MHz.
    pub rabi_per_sqrt_mw_mhz: f64,
    pub control_power_mw: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpaConfig {
    pub cavity_hwhm_mhz: f64,
    pub pump_ratio: f64,
    pub efficiency: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExcessNoiseConfig {
    /// CSV file (frequency_MHz, v_noise) overriding the parametric form.
    #[serde(default)]
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default = "default_noise_width")]
    pub width_mhz: f64,
    #[serde(default)]
    pub center_mhz: f64,
}

fn default_noise_width() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChopperConfig {
    #[serde(default = "default_chopper_fwhm")]
    pub fwhm_ns: f64,
}

fn default_chopper_fwhm() -> f64 {
    600.0
}

impl Default for ChopperConfig {
    fn default() -> Self {
        Self {
            fwhm_ns: default_chopper_fwhm(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CwConfig {
    /// |w| band (MHz) scored when reporting best squeezing.
    #[serde(default = "default_band")]
    pub analysis_band_mhz: [f64; 2],
}

fn default_band() -> [f64; 2] {
    [0.2, 2.0]
}

impl Default for CwConfig {
    fn default() -> Self {
        Self {
            analysis_band_mhz: default_band(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetuningScanConfig {
    #[serde(default = "default_scan_start")]
    pub start_mhz: f64,
    #[serde(default = "default_scan_stop")]
    pub stop_mhz: f64,
    #[serde(default = "default_scan_steps")]
    pub steps: usize,
}

fn default_scan_start() -> f64 {
    -2.0
}

fn default_scan_stop() -> f64 {
    2.0
}

fn default_scan_steps() -> usize {
    41
}

impl Default for DetuningScanConfig {
    fn default() -> Self {
        Self {
            start_mhz: default_scan_start(),
            stop_mhz: default_scan_stop(),
            steps: default_scan_steps(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographyConfig {
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_loglik_tolerance")]
    pub loglik_tolerance: f64,
    #[serde(default = "default_tail_threshold")]
    pub tail_threshold: f64,
    /// Optional phase binning for reconstruction speed (approximation).
    #[serde(default)]
    pub phase_bins: Option<usize>,
    /// Standalone synthesis target when no predicted state is supplied.
    #[serde(default)]
    pub state: Option<GaussianStateConfig>,
    #[serde(default)]
    pub wigner: WignerConfig,
}

fn default_cutoff() -> usize {
    12
}

fn default_samples() -> usize {
    50_000
}

fn default_max_iterations() -> usize {
    2000
}

fn default_loglik_tolerance() -> f64 {
    1e-10
}

fn default_tail_threshold() -> f64 {
    1e-4
}

impl Default for TomographyConfig {
    fn default() -> Self {
        Self {
            cutoff: default_cutoff(),
            samples: default_samples(),
            max_iterations: default_max_iterations(),
            loglik_tolerance: default_loglik_tolerance(),
            tail_threshold: default_tail_threshold(),
            phase_bins: None,
            state: None,
            wigner: WignerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianStateConfig {
    pub v_max_db: f64,
    pub v_min_db: f64,
    #[serde(default)]
    pub orientation_rad: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerConfig {
    #[serde(default = "default_wigner_extent")]
    pub extent: f64,
    #[serde(default = "default_wigner_points")]
    pub points: usize,
}

fn default_wigner_extent() -> f64 {
    5.0
}

fn default_wigner_points() -> usize {
    101
}

impl Default for WignerConfig {
    fn default() -> Self {
        Self {
            extent: default_wigner_extent(),
            points: default_wigner_points(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConfig {
    #[serde(default = "default_powers")]
    pub powers_mw: Vec<f64>,
    #[serde(default = "default_cal_scan_mhz")]
    pub scan_half_range_mhz: f64,
    #[serde(default = "default_cal_points")]
    pub scan_points: usize,
    /// Probe pulse FWHM for delay/waveform measurements, ns.
    #[serde(default = "default_cal_pulse")]
    pub pulse_fwhm_ns: f64,
    #[serde(default = "default_noise_fraction")]
    pub spectral_noise_fraction: f64,
    #[serde(default = "default_delay_jitter")]
    pub delay_jitter_ns: f64,
    /// Multiplicative offsets applied to the true parameters to form the
    /// initial guess in synthetic pipelines:
    /// [gamma_bc, W, chi_scale, one-photon detuning, kappa].
    #[serde(default = "default_guess_offsets")]
    pub guess_offsets: [f64; 5],
}

fn default_powers() -> Vec<f64> {
    vec![3.0, 5.0, 7.0]
}

fn default_cal_scan_mhz() -> f64 {
    0.7
}

fn default_cal_points() -> usize {
    81
}

fn default_cal_pulse() -> f64 {
    2500.0
}

fn default_noise_fraction() -> f64 {
    0.01
}

fn default_delay_jitter() -> f64 {
    2.0
}

fn default_guess_offsets() -> [f64; 5] {
    [1.4, 0.8, 1.3, 1.25, 0.85]
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            powers_mw: default_powers(),
            scan_half_range_mhz: default_cal_scan_mhz(),
            scan_points: default_cal_points(),
            pulse_fwhm_ns: default_cal_pulse(),
            spectral_noise_fraction: default_noise_fraction(),
            delay_jitter_ns: default_delay_jitter(),
            guess_offsets: default_guess_offsets(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub grid: GridConfig,
    pub medium: MediumConfig,
    pub opa: OpaConfig,
    #[serde(default)]
    pub excess_noise: ExcessNoiseConfig,
    #[serde(default)]
    pub chopper: ChopperConfig,
    #[serde(default)]
    pub cw: CwConfig,
    #[serde(default)]
    pub detuning_scan: DetuningScanConfig,
    #[serde(default)]
    pub tomography: TomographyConfig,
    #[serde(default)]
    pub calibration: CalibrationConfig,
    #[serde(default)]
    pub seed: u64,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.frequency_grid()?;
        self.susceptibility_params()
            .validate()
            .map_err(|e| Error::Config(format!("medium: {e}")))?;
        self.opa_params()
            .validate()
            .map_err(|e| Error::Config(format!("opa: {e}")))?;
        if !(self.chopper.fwhm_ns > 0.0) {
            return Err(Error::Config("chopper.fwhm_ns must be positive".into()));
        }
        if self.cw.analysis_band_mhz[0] < 0.0
            || self.cw.analysis_band_mhz[1] <= self.cw.analysis_band_mhz[0]
        {
            return Err(Error::Config("cw.analysis_band_mhz must be increasing".into()));
        }
        if self.detuning_scan.steps == 0 {
            return Err(Error::Config("detuning_scan.steps must be >= 1".into()));
        }
        if self.tomography.cutoff < 1 {
            return Err(Error::Config("tomography.cutoff must be >= 1".into()));
        }
        if self.tomography.samples < 100 {
            return Err(Error::Config("tomography.samples must be >= 100".into()));
        }
        if self.calibration.powers_mw.is_empty() {
            return Err(Error::Config("calibration.powers_mw must not be empty".into()));
        }
        Ok(())
    }

    pub fn frequency_grid(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::spanning_mhz(self.grid.n_points, self.grid.max_frequency_mhz)
            .map_err(|e| Error::Config(format!("grid: {e}")))
    }

    pub fn susceptibility_params(&self) -> SusceptibilityParams {
        let m = &self.medium;
        SusceptibilityParams {
            rabi: mhz_to_rad_per_us(m.rabi_per_sqrt_mw_mhz) * m.control_power_mw.sqrt(),
            gamma_bc: mhz_to_rad_per_us(m.gamma_bc_mhz),
            doppler_width: mhz_to_rad_per_us(m.doppler_width_mhz),
            one_photon_detuning: mhz_to_rad_per_us(m.one_photon_detuning_mhz),
            two_photon_detuning: mhz_to_rad_per_us(m.two_photon_detuning_mhz),
            chi_scale: m.chi_scale,
            length_cm: m.length_cm,
            carrier_wavelength_nm: m.carrier_wavelength_nm,
        }
    }

    pub fn eit_fit_truth(&self) -> EitFitParams {
        let m = &self.medium;
        EitFitParams {
            gamma_bc: mhz_to_rad_per_us(m.gamma_bc_mhz),
            doppler_width: mhz_to_rad_per_us(m.doppler_width_mhz),
            chi_scale: m.chi_scale,
            one_photon_detuning: mhz_to_rad_per_us(m.one_photon_detuning_mhz),
            rabi_per_sqrt_mw: mhz_to_rad_per_us(m.rabi_per_sqrt_mw_mhz),
        }
    }

    pub fn medium_geometry(&self) -> MediumGeometry {
        MediumGeometry {
            length_cm: self.medium.length_cm,
            carrier_wavelength_nm: self.medium.carrier_wavelength_nm,
        }
    }

    pub fn opa_params(&self) -> OpaParams {
        OpaParams {
            cavity_hwhm: mhz_to_rad_per_us(self.opa.cavity_hwhm_mhz),
            pump_ratio: self.opa.pump_ratio,
            efficiency: self.opa.efficiency,
        }
    }

    /// Excess-noise spectrum: tabulated file when configured, otherwise the
    /// parametric Lorentzian. Relative paths resolve against `base_dir`.
    pub fn noise_spectrum(&self, grid: &FrequencyGrid, base_dir: &Path) -> Result<NoiseSpectrum> {
        match &self.excess_noise.file {
            Some(file) => {
                let path = if file.is_absolute() {
                    file.clone()
                } else {
                    base_dir.join(file)
                };
                load_noise_spectrum(&path, grid)
            }
            None => evaluate_parametric(
                &ParametricNoise {
                    amplitude: self.excess_noise.amplitude,
                    width: mhz_to_rad_per_us(self.excess_noise.width_mhz),
                    center: mhz_to_rad_per_us(self.excess_noise.center_mhz),
                },
                grid,
            ),
        }
    }

    pub fn chopper_window(&self, grid: &FrequencyGrid) -> Result<ChopperWindow> {
        raised_cosine_chopper(&grid.dual(), ns_to_us(self.chopper.fwhm_ns))
    }

    pub fn analysis_band(&self) -> (f64, f64) {
        (
            mhz_to_rad_per_us(self.cw.analysis_band_mhz[0]),
            mhz_to_rad_per_us(self.cw.analysis_band_mhz[1]),
        )
    }

    pub fn detuning_values(&self) -> Vec<f64> {
        let s = &self.detuning_scan;
        if s.steps == 1 {
            return vec![mhz_to_rad_per_us(0.5 * (s.start_mhz + s.stop_mhz))];
        }
        (0..s.steps)
            .map(|i| {
                let f =
                    s.start_mhz + (s.stop_mhz - s.start_mhz) * i as f64 / (s.steps - 1) as f64;
                mhz_to_rad_per_us(f)
            })
            .collect()
    }
}
