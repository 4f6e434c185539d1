//! Uniform grids, complex spectra, and the Fourier convention shared by all modules.
//!
//! Time-domain synthesis uses the e^{-i w t} kernel, so the forward transform is
//! f(w) = (1/sqrt(2 pi)) Integral f(t) e^{+i w t} dt. Angular frequencies are in
//! rad/us and times in us throughout; unit conversions happen at the config and
//! file-format boundary only.

use num_complex::Complex64;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};

pub const SQRT_TWO_PI: f64 = 2.5066282746310002;

/// Uniform angular-frequency grid, symmetric about zero: values[k] = (k - n/2) * spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    n_points: usize,
    spacing: f64,
}

impl FrequencyGrid {
    pub fn new(n_points: usize, spacing: f64) -> Result<Self> {
        if n_points < 2 || !n_points.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "grid size must be a power of two >= 2, got {n_points}"
            )));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid spacing must be positive and finite, got {spacing}"
            )));
        }
        Ok(Self { n_points, spacing })
    }

    /// Grid covering sideband frequencies up to roughly +-2*pi*max_mhz rad/us.
    pub fn spanning_mhz(n_points: usize, max_mhz: f64) -> Result<Self> {
        let spacing = 2.0 * (2.0 * std::f64::consts::PI * max_mhz) / n_points as f64;
        Self::new(n_points, spacing)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn value(&self, k: usize) -> f64 {
        (k as f64 - (self.n_points / 2) as f64) * self.spacing
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.value(k)).collect()
    }

    /// Index holding w = 0 exactly.
    pub fn zero_index(&self) -> usize {
        self.n_points / 2
    }

    /// Index of -w for the point at index k (DFT-consistent reflection).
    pub fn reflect(&self, k: usize) -> usize {
        (self.n_points - k) % self.n_points
    }

    pub fn dual(&self) -> TemporalGrid {
        let spacing_t = 2.0 * std::f64::consts::PI / (self.n_points as f64 * self.spacing);
        TemporalGrid {
            n_points: self.n_points,
            spacing: spacing_t,
            origin: -((self.n_points / 2) as f64) * spacing_t,
        }
    }

    pub fn ensure_same(&self, other: &Self) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "frequency grids differ: {} x {} vs {} x {}",
                self.n_points, self.spacing, other.n_points, other.spacing
            )));
        }
        Ok(())
    }
}

/// Uniform time grid, dual to a `FrequencyGrid`: spacing_t = 2 pi / (n * spacing_w).
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalGrid {
    n_points: usize,
    spacing: f64,
    origin: f64,
}

impl TemporalGrid {
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn value(&self, m: usize) -> f64 {
        self.origin + m as f64 * self.spacing
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n_points).map(|m| self.value(m)).collect()
    }

    pub fn dual(&self) -> FrequencyGrid {
        FrequencyGrid {
            n_points: self.n_points,
            spacing: 2.0 * std::f64::consts::PI / (self.n_points as f64 * self.spacing),
        }
    }

    pub fn ensure_same(&self, other: &Self) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "temporal grids differ: {} x {} vs {} x {}",
                self.n_points, self.spacing, other.n_points, other.spacing
            )));
        }
        Ok(())
    }
}

/// Sampled complex function of sideband frequency.
#[derive(Debug, Clone)]
pub struct ComplexSpectrum {
    pub grid: FrequencyGrid,
    pub values: Vec<Complex64>,
}

impl ComplexSpectrum {
    pub fn new(grid: FrequencyGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::GridMismatch(format!(
                "spectrum has {} values for a {}-point grid",
                values.len(),
                grid.n_points()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: FrequencyGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..grid.n_points()).map(|k| f(grid.value(k))).collect();
        Self { grid, values }
    }

    pub fn zeros(grid: FrequencyGrid) -> Self {
        let n = grid.n_points();
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Sum |f(w)|^2 dw over the grid.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    /// Value at the reflected frequency -w for index k.
    pub fn reflected(&self, k: usize) -> Complex64 {
        self.values[self.grid.reflect(k)]
    }
}

/// Sampled real function of sideband frequency (noise levels, magnitudes).
#[derive(Debug, Clone)]
pub struct RealSpectrum {
    pub grid: FrequencyGrid,
    pub values: Vec<f64>,
}

impl RealSpectrum {
    pub fn new(grid: FrequencyGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::GridMismatch(format!(
                "spectrum has {} values for a {}-point grid",
                values.len(),
                grid.n_points()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: FrequencyGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.n_points()).map(|k| f(grid.value(k))).collect();
        Self { grid, values }
    }

    pub fn constant(grid: FrequencyGrid, value: f64) -> Self {
        let n = grid.n_points();
        Self {
            grid,
            values: vec![value; n],
        }
    }

    pub fn reflected(&self, k: usize) -> f64 {
        self.values[self.grid.reflect(k)]
    }

    /// Trapezoid-rule integral over the grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.values, self.grid.spacing())
    }
}

/// Trapezoid rule on uniformly sampled values.
pub fn trapezoid(values: &[f64], spacing: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let interior: f64 = values[1..values.len() - 1].iter().sum();
    (interior + 0.5 * (values[0] + values[values.len() - 1])) * spacing
}

/// Sampled complex function of time.
#[derive(Debug, Clone)]
pub struct TemporalSignal {
    pub grid: TemporalGrid,
    pub values: Vec<Complex64>,
}

impl TemporalSignal {
    pub fn new(grid: TemporalGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::GridMismatch(format!(
                "signal has {} values for a {}-point grid",
                values.len(),
                grid.n_points()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: TemporalGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..grid.n_points()).map(|m| f(grid.value(m))).collect();
        Self { grid, values }
    }

    pub fn from_real_fn(grid: TemporalGrid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |t| Complex64::new(f(t), 0.0))
    }

    /// Sum |f(t)|^2 dt over the grid.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }
}

fn run_fft(values: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(values.len())
    } else {
        planner.plan_fft_forward(values.len())
    };
    // rustfft's Complex is the same num_complex type.
    let buf: &mut [Complex<f64>] = values;
    fft.process(buf);
}

/// f(w) = (1/sqrt(2 pi)) Integral f(t) e^{+i w t} dt on the dual grid.
pub fn forward_transform(signal: &TemporalSignal) -> ComplexSpectrum {
    let freq_grid = signal.grid.dual();
    let dt = signal.grid.spacing();
    let t0 = signal.grid.origin();

    let mut buf: Vec<Complex64> = signal
        .values
        .iter()
        .enumerate()
        .map(|(m, v)| if m % 2 == 0 { *v } else { -*v })
        .collect();
    run_fft(&mut buf, true);

    let scale = dt / SQRT_TWO_PI;
    for (k, v) in buf.iter_mut().enumerate() {
        let w = freq_grid.value(k);
        *v *= Complex64::from_polar(scale, w * t0);
    }
    ComplexSpectrum {
        grid: freq_grid,
        values: buf,
    }
}

/// f(t) = (1/sqrt(2 pi)) Integral f(w) e^{-i w t} dw on the dual grid.
pub fn inverse_transform(spectrum: &ComplexSpectrum) -> TemporalSignal {
    let time_grid = spectrum.grid.dual();
    let dw = spectrum.grid.spacing();
    let t0 = time_grid.origin();

    let mut buf: Vec<Complex64> = spectrum
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let w = spectrum.grid.value(k);
            *v * Complex64::from_polar(1.0, -w * t0)
        })
        .collect();
    run_fft(&mut buf, false);

    let scale = dw / SQRT_TWO_PI;
    let mut values = buf;
    for (m, v) in values.iter_mut().enumerate() {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        *v *= scale * sign;
    }
    TemporalSignal {
        grid: time_grid,
        values,
    }
}

/// (1/sqrt(2 pi)) Integral a(w - w') b(w') dw', computed by transform-multiply-transform.
pub fn convolve(a: &ComplexSpectrum, b: &ComplexSpectrum) -> Result<ComplexSpectrum> {
    a.grid.ensure_same(&b.grid)?;
    let ta = inverse_transform(a);
    let tb = inverse_transform(b);
    let product = TemporalSignal {
        grid: ta.grid.clone(),
        values: ta
            .values
            .iter()
            .zip(tb.values.iter())
            .map(|(x, y)| x * y)
            .collect(),
    };
    Ok(forward_transform(&product))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn test_grid() -> FrequencyGrid {
        FrequencyGrid::new(1024, 0.05).unwrap()
    }

    fn random_signal(grid: &TemporalGrid, seed: u64) -> TemporalSignal {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.n_points())
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        TemporalSignal {
            grid: grid.clone(),
            values,
        }
    }

    #[test]
    fn grid_contains_zero_and_is_increasing() {
        let g = test_grid();
        assert_eq!(g.value(g.zero_index()), 0.0);
        let vals = g.values();
        for w in vals.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(FrequencyGrid::new(0, 1.0).is_err());
        assert!(FrequencyGrid::new(1000, 1.0).is_err());
        assert!(FrequencyGrid::new(8, -1.0).is_err());
    }

    #[test]
    fn dual_grid_round_trip() {
        let g = test_grid();
        let t = g.dual();
        assert_eq!(t.dual(), g);
        let expected = 2.0 * std::f64::consts::PI / (1024.0 * 0.05);
        assert!((t.spacing() - expected).abs() < 1e-15);
    }

    #[test]
    fn gaussian_transforms_to_gaussian() {
        let grid = test_grid().dual();
        let sigma = 0.8;
        let sig = TemporalSignal::from_real_fn(grid, |t| (-t * t / (2.0 * sigma * sigma)).exp());
        let spec = forward_transform(&sig);
        // expected: sigma * exp(-sigma^2 w^2 / 2)
        for (k, v) in spec.values.iter().enumerate() {
            let w = spec.grid.value(k);
            if w.abs() < 10.0 {
                let expected = sigma * (-sigma * sigma * w * w / 2.0).exp();
                assert!(
                    (v.re - expected).abs() < 1e-9 && v.im.abs() < 1e-9,
                    "w={w}: got {v}, expected {expected}"
                );
            }
        }
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let grid = test_grid().dual();
        let n = grid.n_points();
        let mut values = vec![Complex64::new(0.0, 0.0); n];
        // unit-area impulse at t = 0
        values[n / 2] = Complex64::new(1.0 / grid.spacing(), 0.0);
        let sig = TemporalSignal::new(grid, values).unwrap();
        let spec = forward_transform(&sig);
        let expect = 1.0 / SQRT_TWO_PI;
        for v in &spec.values {
            assert!((v.norm() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let grid = test_grid().dual();
        let sig = random_signal(&grid, 17);
        let back = inverse_transform(&forward_transform(&sig));
        let rms: f64 = sig
            .values
            .iter()
            .zip(back.values.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / (grid.n_points() as f64).sqrt();
        assert!(rms < 1e-12, "round-trip rms {rms}");
    }

    #[test]
    fn parseval_holds() {
        let grid = test_grid().dual();
        for seed in 0..5u64 {
            let sig = random_signal(&grid, seed);
            let spec = forward_transform(&sig);
            let et = sig.energy();
            let ew = spec.energy();
            assert!((et - ew).abs() / et < 1e-10, "{et} vs {ew}");
        }
    }

    #[test]
    fn real_signal_has_hermitian_spectrum() {
        let grid = test_grid().dual();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let values = (0..grid.n_points())
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, 0.0))
            .collect();
        let sig = TemporalSignal::new(grid, values).unwrap();
        let spec = forward_transform(&sig);
        for k in 0..spec.grid.n_points() {
            let v = spec.values[k];
            let r = spec.reflected(k);
            assert!((r - v.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn convolve_with_delta_is_identity() {
        let g = test_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = ComplexSpectrum::new(
            g.clone(),
            (0..g.n_points())
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect(),
        )
        .unwrap();
        let mut delta = ComplexSpectrum::zeros(g.clone());
        delta.values[g.zero_index()] = Complex64::new(SQRT_TWO_PI / g.spacing(), 0.0);
        let c = convolve(&a, &delta).unwrap();
        for (x, y) in a.values.iter().zip(c.values.iter()) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn gaussian_convolution_adds_variances() {
        let g = FrequencyGrid::new(2048, 0.02).unwrap();
        let s1: f64 = 1.3;
        let s2: f64 = 0.7;
        let ga = ComplexSpectrum::from_fn(g.clone(), |w| {
            Complex64::new((-w * w / (2.0 * s1 * s1)).exp(), 0.0)
        });
        let gb = ComplexSpectrum::from_fn(g.clone(), |w| {
            Complex64::new((-w * w / (2.0 * s2 * s2)).exp(), 0.0)
        });
        let c = convolve(&ga, &gb).unwrap();
        // (1/sqrt(2 pi)) int exp(-(w-u)^2/2s1^2) exp(-u^2/2s2^2) du
        //   = s1 s2 / sqrt(s1^2+s2^2) * exp(-w^2 / (2 (s1^2+s2^2)))
        let s12 = (s1 * s1 + s2 * s2).sqrt();
        for (k, v) in c.values.iter().enumerate() {
            let w = g.value(k);
            if w.abs() < 8.0 {
                let expected = s1 * s2 / s12 * (-w * w / (2.0 * s12 * s12)).exp();
                assert!((v.re - expected).abs() < 1e-9, "w={w} {} vs {expected}", v.re);
            }
        }
    }

    #[test]
    fn convolution_matches_direct_sum() {
        let g = FrequencyGrid::new(256, 0.11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut rand_spec = || {
            ComplexSpectrum::new(
                g.clone(),
                (0..g.n_points())
                    .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                    .collect(),
            )
            .unwrap()
        };
        let a = rand_spec();
        let b = rand_spec();
        let c = convolve(&a, &b).unwrap();

        // quadratic-time circular sum oracle
        let n = g.n_points();
        for k in (0..n).step_by(7) {
            let mut acc = Complex64::new(0.0, 0.0);
            for l in 0..n {
                let idx = (k + n / 2 + n - l) % n; // frequency w_k - w_l
                acc += a.values[idx] * b.values[l];
            }
            acc *= g.spacing() / SQRT_TWO_PI;
            assert!((acc - c.values[k]).norm() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn convolve_rejects_mismatched_grids() {
        let a = ComplexSpectrum::zeros(FrequencyGrid::new(256, 0.1).unwrap());
        let b = ComplexSpectrum::zeros(FrequencyGrid::new(512, 0.1).unwrap());
        assert!(matches!(convolve(&a, &b), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn linearity_of_transform() {
        let grid = test_grid().dual();
        let f = random_signal(&grid, 1);
        let g = random_signal(&grid, 2);
        let alpha = Complex64::new(0.3, -1.1);
        let beta = Complex64::new(-0.7, 0.2);
        let combined = TemporalSignal {
            grid: grid.clone(),
            values: f
                .values
                .iter()
                .zip(g.values.iter())
                .map(|(x, y)| alpha * x + beta * y)
                .collect(),
        };
        let lhs = forward_transform(&combined);
        let ft = forward_transform(&f);
        let gt = forward_transform(&g);
        for k in 0..grid.n_points() {
            let rhs = alpha * ft.values[k] + beta * gt.values[k];
            assert!((lhs.values[k] - rhs).norm() < 1e-12);
        }
    }
}
