//! Truncated Fock-basis density matrices: validation, quadrature moments,
//! and the squeezed-thermal constructor used for predictions.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DEFAULT_TAIL_THRESHOLD: f64 = 1e-4;
pub const DEFAULT_PAD: usize = 20;

/// Hermitian, unit-trace, positive-semidefinite state on photon numbers 0..=N.
#[derive(Debug, Clone)]
pub struct FockDensityMatrix {
    dim: usize,
    entries: Vec<Complex64>, // row-major, entries[m * dim + n] = <m|rho|n>
}

impl FockDensityMatrix {
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::InvalidParameter(format!(
                "density matrix needs dim^2 entries, got {} for dim {dim}",
                entries.len()
            )));
        }
        let rho = Self { dim, entries };
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_parts_unchecked(dim: usize, entries: Vec<Complex64>) -> Self {
        Self { dim, entries }
    }

    pub fn vacuum(dim: usize) -> Self {
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        entries[0] = Complex64::new(1.0, 0.0);
        Self { dim, entries }
    }

    pub fn thermal(mean_photons: f64, dim: usize) -> Result<Self> {
        if !(mean_photons >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mean photon number must be >= 0, got {mean_photons}"
            )));
        }
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        let mut norm = 0.0;
        for n in 0..dim {
            let p = mean_photons.powi(n as i32) / (mean_photons + 1.0).powi(n as i32 + 1);
            entries[n * dim + n] = Complex64::new(p, 0.0);
            norm += p;
        }
        for n in 0..dim {
            entries[n * dim + n] /= norm;
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn entry(&self, m: usize, n: usize) -> Complex64 {
        self.entries[m * self.dim + n]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|n| self.entry(n, n)).sum()
    }

    pub fn purity(&self) -> f64 {
        // Tr rho^2 = sum |rho_mn|^2 for Hermitian rho
        self.entries.iter().map(|e| e.norm_sqr()).sum()
    }

    /// Population of the highest retained photon number.
    pub fn tail_population(&self) -> f64 {
        self.entry(self.dim - 1, self.dim - 1).re
    }

    pub fn to_dmatrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.entries)
    }

    pub fn validate(&self) -> Result<()> {
        for m in 0..self.dim {
            for n in 0..=m {
                let d = (self.entry(m, n) - self.entry(n, m).conj()).norm();
                if d > 1e-12 {
                    return Err(Error::NonphysicalInput(format!(
                        "density matrix not Hermitian: |rho[{m},{n}] - rho[{n},{m}]*| = {d}"
                    )));
                }
            }
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-12 {
            return Err(Error::NonphysicalInput(format!(
                "density matrix trace is {tr}, expected 1"
            )));
        }
        let min_eig = self
            .to_dmatrix()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        if min_eig < -1e-9 {
            return Err(Error::NonphysicalInput(format!(
                "density matrix has negative eigenvalue {min_eig}"
            )));
        }
        Ok(())
    }

    /// <a^dag a>.
    pub fn mean_photon_number(&self) -> f64 {
        (0..self.dim).map(|n| n as f64 * self.entry(n, n).re).sum()
    }

    /// <a^2> = sum_m sqrt(m (m-1)) rho[m, m-2].
    pub fn pair_amplitude(&self) -> Complex64 {
        (2..self.dim)
            .map(|m| ((m * (m - 1)) as f64).sqrt() * self.entry(m, m - 2))
            .sum()
    }

    /// Quadrature variance at local-oscillator phase theta, in the convention
    /// where the projector phase factor is e^{i n theta}:
    /// V(theta) = <n> + 1/2 + Re( e^{-2 i theta} <a^2> ).
    pub fn quadrature_variance(&self, theta: f64) -> f64 {
        let a2 = self.pair_amplitude();
        self.mean_photon_number()
            + 0.5
            + (Complex64::from_polar(1.0, -2.0 * theta) * a2).re
    }

    /// (v_min, v_max, orientation of the maximum-variance quadrature).
    pub fn variance_extrema(&self) -> (f64, f64, f64) {
        let base = self.mean_photon_number() + 0.5;
        let a2 = self.pair_amplitude();
        (base - a2.norm(), base + a2.norm(), 0.5 * a2.arg())
    }

    /// Phase-space rotation: rho -> U rho U^dag with U = diag(e^{i theta n}).
    pub fn rotated(&self, theta: f64) -> Self {
        let mut entries = self.entries.clone();
        for m in 0..self.dim {
            for n in 0..self.dim {
                entries[m * self.dim + n] *=
                    Complex64::from_polar(1.0, theta * (m as f64 - n as f64));
            }
        }
        Self {
            dim: self.dim,
            entries,
        }
    }

    /// Zero-padded copy with a larger cutoff.
    pub fn padded(&self, dim: usize) -> Self {
        assert!(dim >= self.dim);
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for m in 0..self.dim {
            for n in 0..self.dim {
                entries[m * dim + n] = self.entry(m, n);
            }
        }
        Self { dim, entries }
    }

    pub(crate) fn hermitized_normalized(mut self) -> Self {
        for m in 0..self.dim {
            for n in 0..m {
                let avg = 0.5 * (self.entries[m * self.dim + n] + self.entries[n * self.dim + m].conj());
                self.entries[m * self.dim + n] = avg;
                self.entries[n * self.dim + m] = avg.conj();
            }
            let d = self.entries[m * self.dim + m];
            self.entries[m * self.dim + m] = Complex64::new(d.re, 0.0);
        }
        let tr = self.trace().re;
        if tr > 0.0 {
            for e in &mut self.entries {
                *e /= tr;
            }
        }
        self
    }
}

/// exp(A) for a real matrix by scaling-and-squaring with a Taylor series.
fn expm_real(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.iter().fold(0.0f64, |m, x| m.max(x.abs())) * n as f64;
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / 2f64.powi(squarings as i32);
    let mut result = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for k in 1..=40 {
        term = (&term * &scaled) / k as f64;
        result += &term;
        if term.iter().fold(0.0f64, |m, x| m.max(x.abs())) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Squeezed thermal state: the squeeze operator exp[(r/2)(a^2 - a^dag^2)] is
/// applied to a thermal state in a padded space, the result is rotated so the
/// maximum-variance quadrature sits at `orientation`, then truncated to
/// `cutoff`. Quadrature variances are (n_bar + 1/2) e^{+-2r}.
pub fn build_squeezed_thermal(
    n_bar: f64,
    r: f64,
    orientation: f64,
    cutoff: usize,
) -> Result<FockDensityMatrix> {
    build_squeezed_thermal_with(n_bar, r, orientation, cutoff, DEFAULT_PAD, DEFAULT_TAIL_THRESHOLD)
}

pub fn build_squeezed_thermal_with(
    n_bar: f64,
    r: f64,
    orientation: f64,
    cutoff: usize,
    pad: usize,
    tail_threshold: f64,
) -> Result<FockDensityMatrix> {
    if !(n_bar >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mean photon number must be >= 0, got {n_bar}"
        )));
    }
    let dim = cutoff + 1;
    let padded_dim = dim + pad;

    // generator (r/2)(a^2 - a^dag^2), real antisymmetric in the Fock basis
    let mut gen = DMatrix::<f64>::zeros(padded_dim, padded_dim);
    for n in 2..padded_dim {
        let c = 0.5 * r * ((n * (n - 1)) as f64).sqrt();
        gen[(n - 2, n)] += c;
        gen[(n, n - 2)] -= c;
    }
    let squeeze = expm_real(&gen);

    let thermal = FockDensityMatrix::thermal(n_bar, padded_dim)?;
    let th = thermal.to_dmatrix().map(|c| c.re);
    let big = &squeeze * th * squeeze.transpose();

    let tail = big[(dim - 1, dim - 1)];
    if tail > tail_threshold {
        return Err(Error::CutoffTooSmall {
            tail,
            threshold: tail_threshold,
        });
    }

    let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
    for m in 0..dim {
        for n in 0..dim {
            entries[m * dim + n] = Complex64::new(big[(m, n)], 0.0);
        }
    }
    let rho = FockDensityMatrix {
        dim,
        entries,
    }
    .hermitized_normalized();
    // base state has its minimum variance at theta = 0; move the maximum to `orientation`
    Ok(rho.rotated(orientation - std::f64::consts::FRAC_PI_2))
}
