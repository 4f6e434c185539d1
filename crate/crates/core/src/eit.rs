//! Three-level EIT susceptibility, complex transmissivity of the vapor cell,
//! classical pulse propagation, and group-delay extraction.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{
    forward_transform, inverse_transform, ComplexSpectrum, FrequencyGrid, TemporalSignal,
};

/// Medium parameters. All rates and detunings are angular frequencies in rad/us.
///
/// `chi_scale` is a real fit amplitude absorbing atomic density and dipole
/// factors; the susceptibility formula itself is only a proportionality.
#[derive(Debug, Clone, PartialEq)]
pub struct SusceptibilityParams {
    /// Control Rabi frequency Omega.
    pub rabi: f64,
    /// Ground-state dephasing rate gamma_bc.
    pub gamma_bc: f64,
    /// Doppler-broadened linewidth W.
    pub doppler_width: f64,
    /// One-photon detuning offset at zero sideband.
    pub one_photon_detuning: f64,
    /// Two-photon detuning offset at zero sideband.
    pub two_photon_detuning: f64,
    /// Dimensionless susceptibility amplitude.
    pub chi_scale: f64,
    /// Medium length in cm.
    pub length_cm: f64,
    /// Optical carrier wavelength in nm.
    pub carrier_wavelength_nm: f64,
}

impl SusceptibilityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_bc > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma_bc must be > 0, got {}",
                self.gamma_bc
            )));
        }
        if !(self.doppler_width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "doppler_width must be > 0, got {}",
                self.doppler_width
            )));
        }
        if !(self.chi_scale >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "chi_scale must be >= 0, got {}",
                self.chi_scale
            )));
        }
        if !(self.length_cm > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "length must be > 0, got {}",
                self.length_cm
            )));
        }
        if !(self.rabi >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rabi must be >= 0, got {}",
                self.rabi
            )));
        }
        if !(self.carrier_wavelength_nm > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "carrier wavelength must be > 0, got {}",
                self.carrier_wavelength_nm
            )));
        }
        Ok(())
    }

    /// k0 * L / 2, the dimensionless phase-depth prefactor of the cell
    /// (carrier wavenumber frozen; sideband corrections are < 1e-7).
    pub fn half_phase_depth(&self) -> f64 {
        let wavelength_cm = self.carrier_wavelength_nm * 1e-7;
        std::f64::consts::PI * self.length_cm / wavelength_cm
    }

    /// chi at explicit detunings, before the sideband shift is applied.
    pub fn chi_at(&self, delta_p: f64, delta_2: f64) -> Result<Complex64> {
        let it = Complex64::new(delta_2, self.gamma_bc); // i gamma_bc + delta_2
        let op = Complex64::new(delta_p, self.doppler_width); // delta_p + i W
        let denom = self.rabi * self.rabi - it * op;
        if denom.norm() < 1e-15 {
            return Err(Error::Singularity {
                omega_rad_per_us: delta_2 - self.two_photon_detuning,
            });
        }
        Ok(self.chi_scale * it / denom)
    }
}

/// Amplitude transmissivity T(w) of the cell.
#[derive(Debug, Clone)]
pub struct Transmissivity {
    pub spectrum: ComplexSpectrum,
}

impl Transmissivity {
    pub fn identity(grid: FrequencyGrid) -> Self {
        Self {
            spectrum: ComplexSpectrum::from_fn(grid, |_| Complex64::new(1.0, 0.0)),
        }
    }

    pub fn abs(&self, k: usize) -> f64 {
        self.spectrum.values[k].norm()
    }

    pub fn abs_reflected(&self, k: usize) -> f64 {
        self.spectrum.reflected(k).norm()
    }
}

/// chi(w) on the grid. A sideband at w shifts both detunings equally:
/// delta_2(w) = delta_2_0 + w, delta_p(w) = delta_p_0 + w.
pub fn susceptibility(params: &SusceptibilityParams, grid: &FrequencyGrid) -> Result<ComplexSpectrum> {
    params.validate()?;
    let mut values = Vec::with_capacity(grid.n_points());
    for k in 0..grid.n_points() {
        let w = grid.value(k);
        values.push(params.chi_at(params.one_photon_detuning + w, params.two_photon_detuning + w)?);
    }
    ComplexSpectrum::new(grid.clone(), values)
}

/// T(w) = exp(i k0 chi(w) L / 2).
pub fn transmissivity(params: &SusceptibilityParams, grid: &FrequencyGrid) -> Result<Transmissivity> {
    let chi = susceptibility(params, grid)?;
    let depth = params.half_phase_depth();
    let values = chi
        .values
        .iter()
        .map(|c| (Complex64::new(0.0, depth) * c).exp())
        .collect();
    Ok(Transmissivity {
        spectrum: ComplexSpectrum::new(grid.clone(), values)?,
    })
}

/// Filter a temporal signal through the cell: out = F^{-1}[ T(w) F[in] ].
pub fn propagate_pulse(input: &TemporalSignal, medium: &Transmissivity) -> Result<TemporalSignal> {
    let spec = forward_transform(input);
    spec.grid.ensure_same(&medium.spectrum.grid)?;
    let filtered = ComplexSpectrum::new(
        spec.grid.clone(),
        spec.values
            .iter()
            .zip(medium.spectrum.values.iter())
            .map(|(a, t)| a * t)
            .collect(),
    )?;
    Ok(inverse_transform(&filtered))
}

/// Intensity center of mass in grid time units.
fn center_of_mass(signal: &TemporalSignal) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (m, v) in signal.values.iter().enumerate() {
        let p = v.norm_sqr();
        num += signal.grid.value(m) * p;
        den += p;
    }
    if den <= 0.0 || !den.is_finite() {
        return Err(Error::DegenerateInput(
            "zero-energy signal has no intensity center of mass".into(),
        ));
    }
    Ok(num / den)
}

/// Delay (output minus input intensity center of mass) in ns.
pub fn group_delay_ns(input: &TemporalSignal, output: &TemporalSignal) -> Result<f64> {
    let t_in = center_of_mass(input)?;
    let t_out = center_of_mass(output)?;
    Ok((t_out - t_in) * 1e3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TemporalGrid;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    const TWO_PI: f64 = std::f64::consts::TAU;

    fn representative_params() -> SusceptibilityParams {
        SusceptibilityParams {
            rabi: TWO_PI * 1.5,
            gamma_bc: TWO_PI * 0.02,
            doppler_width: TWO_PI * 350.0,
            one_photon_detuning: 0.0,
            two_photon_detuning: 0.0,
            chi_scale: 1e-3,
            length_cm: 7.5,
            carrier_wavelength_nm: 795.0,
        }
    }

    fn slow_light_params() -> SusceptibilityParams {
        // strong control, narrow dephasing: a wide transparent window with
        // a delay of a few hundred ns over a cm-scale cell
        SusceptibilityParams {
            rabi: 94.0,
            gamma_bc: TWO_PI * 0.02,
            doppler_width: TWO_PI * 350.0,
            one_photon_detuning: 0.0,
            two_photon_detuning: 0.0,
            chi_scale: 7.9e-3,
            length_cm: 7.5,
            carrier_wavelength_nm: 795.0,
        }
    }

    fn grid() -> FrequencyGrid {
        FrequencyGrid::spanning_mhz(8192, 50.0).unwrap()
    }

    #[test]
    fn no_control_reduces_to_two_level_lorentzian() {
        let mut p = representative_params();
        p.rabi = 0.0;
        p.two_photon_detuning = TWO_PI * 0.7; // must not matter
        let g = grid();
        let chi = susceptibility(&p, &g).unwrap();
        for k in (0..g.n_points()).step_by(117) {
            let w = g.value(k);
            let expected = -Complex64::new(p.chi_scale, 0.0)
                / Complex64::new(p.one_photon_detuning + w, p.doppler_width);
            assert!((chi.values[k] - expected).norm() < 1e-15 * expected.norm().max(1.0));
        }
    }

    #[test]
    fn on_resonance_value_is_purely_imaginary() {
        let p = representative_params();
        let chi = p.chi_at(0.0, 0.0).unwrap();
        let expected =
            p.chi_scale * p.gamma_bc / (p.rabi * p.rabi + p.gamma_bc * p.doppler_width);
        assert!((chi.im - expected).abs() < 1e-18);
        assert!(chi.re.abs() < 1e-18);
    }

    /// Exact-rational re-evaluation of the susceptibility formula.
    fn chi_oracle(p: &SusceptibilityParams, delta_p: f64, delta_2: f64) -> Complex64 {
        use num::BigRational;
        use num::FromPrimitive;
        let q = |x: f64| BigRational::from_f64(x).unwrap();
        // N = i g + d2 ; D = W0^2 - N * (dp + i W)
        let (n_re, n_im) = (q(delta_2), q(p.gamma_bc));
        let (o_re, o_im) = (q(delta_p), q(p.doppler_width));
        let w0sq = q(p.rabi) * q(p.rabi);
        let d_re = w0sq - (&n_re * &o_re - &n_im * &o_im);
        let d_im = -(&n_re * &o_im + &n_im * &o_re);
        // chi = chi0 * N / D = chi0 * N * conj(D) / |D|^2
        let den = &d_re * &d_re + &d_im * &d_im;
        let re = (&n_re * &d_re + &n_im * &d_im) / &den;
        let im = (&n_im * &d_re - &n_re * &d_im) / &den;
        let to_f64 = |r: BigRational| {
            use num::ToPrimitive;
            r.to_f64().unwrap()
        };
        p.chi_scale * Complex64::new(to_f64(re), to_f64(im))
    }

    #[test]
    fn matches_exact_rational_evaluation() {
        let p = representative_params();
        for &(dp, d2) in &[
            (0.0, 0.0),
            (TWO_PI * 10.0, TWO_PI * 0.54),
            (-TWO_PI * 120.0, -TWO_PI * 1.3),
            (TWO_PI * 0.01, TWO_PI * 3.0),
        ] {
            let got = p.chi_at(dp, d2).unwrap();
            let want = chi_oracle(&p, dp, d2);
            assert!(
                (got - want).norm() <= 1e-14 * want.norm().max(1e-30),
                "dp={dp} d2={d2}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn empty_cell_is_transparent() {
        let mut p = representative_params();
        p.chi_scale = 0.0;
        let t = transmissivity(&p, &grid()).unwrap();
        for v in &t.spectrum.values {
            assert_eq!(*v, Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn opaque_two_level_limit() {
        let mut p = representative_params();
        p.rabi = 0.0;
        p.chi_scale = 0.15;
        let t = transmissivity(&p, &grid()).unwrap();
        let k0 = t.spectrum.grid.zero_index();
        assert!(t.abs(k0) < 1e-6, "|T(0)| = {}", t.abs(k0));
    }

    #[test]
    fn passivity_over_random_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = FrequencyGrid::spanning_mhz(1024, 50.0).unwrap();
        for _ in 0..50 {
            let p = SusceptibilityParams {
                rabi: rng.gen::<f64>() * 100.0,
                gamma_bc: rng.gen::<f64>() * 5.0 + 1e-4,
                doppler_width: rng.gen::<f64>() * 4000.0 + 1.0,
                one_photon_detuning: (rng.gen::<f64>() - 0.5) * 2000.0,
                two_photon_detuning: (rng.gen::<f64>() - 0.5) * 20.0,
                chi_scale: rng.gen::<f64>() * 0.1,
                length_cm: rng.gen::<f64>() * 10.0 + 0.5,
                carrier_wavelength_nm: 795.0,
            };
            let chi = susceptibility(&p, &g).unwrap();
            assert!(chi.values.iter().all(|c| c.im >= 0.0));
            let t = transmissivity(&p, &g).unwrap();
            assert!(t.spectrum.values.iter().all(|v| v.norm() <= 1.0 + 1e-9));
        }
    }

    #[test]
    fn transparency_window_opens_at_line_center() {
        let p = slow_light_params();
        let g = grid();
        let t = transmissivity(&p, &g).unwrap();
        let center = t.abs(g.zero_index());
        // many Doppler widths away is off the grid; compare to the grid edge,
        // far outside the EIT window
        let far = t.abs(16);
        assert!(center > far, "center {center} vs far {far}");

        let mut narrow = p.clone();
        narrow.gamma_bc = 1e-9;
        let t2 = transmissivity(&narrow, &g).unwrap();
        assert!(t2.abs(g.zero_index()) > 0.999_999);
    }

    #[test]
    fn asymmetric_window_when_detuned() {
        let mut p = slow_light_params();
        p.one_photon_detuning = TWO_PI * 100.0;
        p.two_photon_detuning = TWO_PI * 0.54;
        let g = grid();
        let t = transmissivity(&p, &g).unwrap();
        // |T| should differ between +w and -w inside the window
        let k = g.zero_index() + 40;
        let asym = (t.abs(k) - t.abs_reflected(k)).abs();
        assert!(asym > 1e-4, "expected asymmetry, got {asym}");
    }

    fn gaussian_pulse(grid: &TemporalGrid, fwhm_us: f64) -> TemporalSignal {
        // intensity FWHM
        let sigma = fwhm_us / (2.0 * (2.0f64.ln()).sqrt()) / 2.0f64.sqrt();
        TemporalSignal::from_real_fn(grid.clone(), |t| (-t * t / (2.0 * sigma * sigma)).exp())
    }

    #[test]
    fn identity_filter_returns_input() {
        let g = grid();
        let pulse = gaussian_pulse(&g.dual(), 0.6);
        let out = propagate_pulse(&pulse, &Transmissivity::identity(g)).unwrap();
        for (a, b) in pulse.values.iter().zip(out.values.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
        assert_eq!(group_delay_ns(&pulse, &out).unwrap().abs() < 1e-9, true);
    }

    #[test]
    fn pure_delay_filter_shifts_center_of_mass() {
        let g = grid();
        let t0 = 0.1; // us
        let delay = Transmissivity {
            spectrum: ComplexSpectrum::from_fn(g.clone(), |w| Complex64::from_polar(1.0, w * t0)),
        };
        let pulse = gaussian_pulse(&g.dual(), 0.6);
        let out = propagate_pulse(&pulse, &delay).unwrap();
        let d = group_delay_ns(&pulse, &out).unwrap();
        assert!((d - 100.0).abs() < 0.1, "delay {d} ns");
    }

    #[test]
    fn slow_light_delays_attenuates_and_broadens() {
        let p = slow_light_params();
        let g = grid();
        let t = transmissivity(&p, &g).unwrap();
        let pulse = gaussian_pulse(&g.dual(), 0.6);
        let out = propagate_pulse(&pulse, &t).unwrap();
        let d = group_delay_ns(&pulse, &out).unwrap();
        assert!(d > 100.0, "delay {d} ns");
        assert!(out.energy() < pulse.energy());
        // width via second central moment of intensity
        let width = |s: &TemporalSignal| {
            let cm = s
                .values
                .iter()
                .enumerate()
                .map(|(m, v)| s.grid.value(m) * v.norm_sqr())
                .sum::<f64>()
                / s.values.iter().map(|v| v.norm_sqr()).sum::<f64>();
            (s.values
                .iter()
                .enumerate()
                .map(|(m, v)| (s.grid.value(m) - cm).powi(2) * v.norm_sqr())
                .sum::<f64>()
                / s.values.iter().map(|v| v.norm_sqr()).sum::<f64>())
            .sqrt()
        };
        assert!(width(&out) > width(&pulse));
    }

    #[test]
    fn delay_decreases_with_control_power() {
        let g = grid();
        let pulse = gaussian_pulse(&g.dual(), 0.6);
        let mut last = f64::INFINITY;
        for power in [3.0, 4.0, 5.0, 6.0, 7.0] {
            let mut p = slow_light_params();
            p.rabi = 42.0 * (power as f64).sqrt();
            let t = transmissivity(&p, &g).unwrap();
            let out = propagate_pulse(&pulse, &t).unwrap();
            let d = group_delay_ns(&pulse, &out).unwrap();
            assert!(d < last, "delay should fall with power: {d} !< {last}");
            last = d;
        }
    }

    #[test]
    fn propagation_is_linear() {
        let p = slow_light_params();
        let g = grid();
        let t = transmissivity(&p, &g).unwrap();
        let tg = g.dual();
        let f = gaussian_pulse(&tg, 0.6);
        let h = TemporalSignal::from_fn(tg.clone(), |x| {
            Complex64::new((-x * x).exp() * (3.0 * x).cos(), 0.2 * (-x * x / 2.0).exp())
        });
        let alpha = Complex64::new(0.7, -0.3);
        let beta = Complex64::new(-1.1, 0.4);
        let combined = TemporalSignal {
            grid: tg.clone(),
            values: f
                .values
                .iter()
                .zip(h.values.iter())
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
        };
        let lhs = propagate_pulse(&combined, &t).unwrap();
        let fa = propagate_pulse(&f, &t).unwrap();
        let fb = propagate_pulse(&h, &t).unwrap();
        for k in 0..tg.n_points() {
            let rhs = alpha * fa.values[k] + beta * fb.values[k];
            assert!((lhs.values[k] - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_energy_signal_is_degenerate() {
        let g = grid().dual();
        let zero = TemporalSignal::from_real_fn(g.clone(), |_| 0.0);
        let one = TemporalSignal::from_real_fn(g, |t| (-t * t).exp());
        assert!(matches!(
            group_delay_ns(&zero, &one),
            Err(Error::DegenerateInput(_))
        ));
    }
}
