//! Control-field-induced atomic excess quadrature noise, either ingested from
//! a tabulated measurement or modeled as a phenomenological Lorentzian whose
//! amplitude tracks the ground-state population-exchange rate. The noise is
//! phase-insensitive: it adds equally to every quadrature, on top of the 1/2
//! vacuum level.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::spectral::{FrequencyGrid, RealSpectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseSource {
    Tabulated,
    Parametric,
}

/// Nonnegative excess-noise spectrum in shot-noise units.
#[derive(Debug, Clone)]
pub struct NoiseSpectrum {
    pub spectrum: RealSpectrum,
    pub source: NoiseSource,
}

impl NoiseSpectrum {
    pub fn zero(grid: FrequencyGrid) -> Self {
        Self {
            spectrum: RealSpectrum::constant(grid, 0.0),
            source: NoiseSource::Tabulated,
        }
    }

    pub fn value(&self, k: usize) -> f64 {
        self.spectrum.values[k]
    }
}

/// Lorentzian stand-in: A w^2 / ((omega - omega_c)^2 + w^2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParametricNoise {
    /// Peak value, proportional to the population-exchange rate.
    pub amplitude: f64,
    /// Half width at half maximum, rad/us.
    pub width: f64,
    /// Center frequency, rad/us.
    pub center: f64,
}

impl ParametricNoise {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise amplitude must be >= 0, got {}",
                self.amplitude
            )));
        }
        if !(self.width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise width must be > 0, got {}",
                self.width
            )));
        }
        Ok(())
    }
}

pub fn evaluate_parametric(params: &ParametricNoise, grid: &FrequencyGrid) -> Result<NoiseSpectrum> {
    params.validate()?;
    let w2 = params.width * params.width;
    let spectrum = RealSpectrum::from_fn(grid.clone(), |omega| {
        let d = omega - params.center;
        params.amplitude * w2 / (d * d + w2)
    });
    Ok(NoiseSpectrum {
        spectrum,
        source: NoiseSource::Parametric,
    })
}

/// Load a (frequency_MHz, v_noise) table and resample it onto the working grid
/// by linear interpolation, zero-extended beyond the tabulated range.
pub fn load_noise_spectrum(path: &Path, grid: &FrequencyGrid) -> Result<NoiseSpectrum> {
    let mut file = std::fs::File::open(path)?;
    let mut text = String::new();
    file.read_to_string(&mut text)?;
    parse_noise_table(&text, grid)
}

pub fn parse_noise_table(text: &str, grid: &FrequencyGrid) -> Result<NoiseSpectrum> {
    let mut freqs = Vec::new();
    let mut vals = Vec::new();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());
    for record in reader.records() {
        let record = record?;
        if record.len() < 2 {
            return Err(Error::Format(
                "noise table needs columns frequency_MHz, v_noise".into(),
            ));
        }
        let f: f64 = record[0]
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("bad frequency entry `{}`", &record[0])))?;
        let v: f64 = record[1]
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("bad noise entry `{}`", &record[1])))?;
        if v < 0.0 {
            return Err(Error::Validation(format!(
                "negative noise entry {v} at {f} MHz"
            )));
        }
        freqs.push(f * 2.0 * std::f64::consts::PI); // MHz -> rad/us
        vals.push(v);
    }
    if freqs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Format(
            "noise table frequencies must be strictly increasing".into(),
        ));
    }
    let spectrum = RealSpectrum::from_fn(grid.clone(), |omega| interp_or_zero(&freqs, &vals, omega));
    Ok(NoiseSpectrum {
        spectrum,
        source: NoiseSource::Tabulated,
    })
}

fn interp_or_zero(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if xs.is_empty() || x < xs[0] || x > xs[xs.len() - 1] {
        return 0.0;
    }
    let idx = xs.partition_point(|&v| v < x);
    if idx == 0 {
        return ys[0];
    }
    if idx >= xs.len() {
        return ys[ys.len() - 1];
    }
    let (x0, x1) = (xs[idx - 1], xs[idx]);
    let (y0, y1) = (ys[idx - 1], ys[idx]);
    if x1 == x0 {
        return y0;
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}
