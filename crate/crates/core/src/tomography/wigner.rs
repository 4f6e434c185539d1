//! Wigner function on a phase-space grid, from the Fock-basis kernel in the
//! convention where the vacuum gives (1/pi) exp(-x^2 - p^2).

use num_complex::Complex64;

use super::fock::FockDensityMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct WignerGrid {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    /// Row-major over (x, p): values[ix * ps.len() + ip].
    pub values: Vec<f64>,
    pub resolution_warning: Option<String>,
}

impl WignerGrid {
    pub fn value(&self, ix: usize, ip: usize) -> f64 {
        self.values[ix * self.ps.len() + ip]
    }

    /// Grid integral of W over dx dp.
    pub fn integral(&self) -> f64 {
        if self.xs.len() < 2 || self.ps.len() < 2 {
            return 0.0;
        }
        let dx = self.xs[1] - self.xs[0];
        let dp = self.ps[1] - self.ps[0];
        self.values.iter().sum::<f64>() * dx * dp
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Second moments (int x^2 W, int p^2 W, int x p W).
    pub fn second_moments(&self) -> (f64, f64, f64) {
        let dx = self.xs[1] - self.xs[0];
        let dp = self.ps[1] - self.ps[0];
        let (mut xx, mut pp, mut xp) = (0.0, 0.0, 0.0);
        for (ix, &x) in self.xs.iter().enumerate() {
            for (ip, &p) in self.ps.iter().enumerate() {
                let w = self.value(ix, ip);
                xx += x * x * w;
                pp += p * p * w;
                xp += x * p * w;
            }
        }
        (xx * dx * dp, pp * dx * dp, xp * dx * dp)
    }
}

pub fn uniform_axis(min: f64, max: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| min + (max - min) * i as f64 / (n - 1) as f64)
        .collect()
}

/// W(x, p) = sum_{m n} rho_mn W_{|m><n|}(x, p) with, for m >= n,
/// W_{|m><n|} = ((-1)^n / pi) sqrt(n!/m!) (sqrt(2)(x - i p))^{m-n}
///              L_n^{m-n}(2 x^2 + 2 p^2) e^{-x^2 - p^2}.
pub fn wigner(rho: &FockDensityMatrix, xs: &[f64], ps: &[f64]) -> Result<WignerGrid> {
    if xs.len() < 2 || ps.len() < 2 {
        return Err(Error::InvalidParameter(
            "Wigner grid needs at least 2 points per axis".into(),
        ));
    }
    let dim = rho.dim();
    let mut values = vec![0.0; xs.len() * ps.len()];

    // sqrt(k!/(k+alpha)!) falling factors, reused across grid points
    let mut ratio = vec![vec![0.0; dim]; dim];
    for alpha in 0..dim {
        for k in 0..dim - alpha {
            let mut f = 1.0;
            for j in 1..=alpha {
                f /= ((k + j) as f64).sqrt();
            }
            ratio[alpha][k] = f;
        }
    }

    for (ix, &x) in xs.iter().enumerate() {
        for (ip, &p) in ps.iter().enumerate() {
            let r2 = x * x + p * p;
            let z = 2.0 * r2;
            let gauss = (-r2).exp() / std::f64::consts::PI;
            let beta = Complex64::new(x, -p) * std::f64::consts::SQRT_2;

            let mut acc = 0.0;
            let mut beta_pow = Complex64::new(1.0, 0.0);
            for alpha in 0..dim {
                // L_k^alpha(z) by upward recurrence in k
                let mut l_km1 = 0.0;
                let mut l_k = 0.0;
                for k in 0..dim - alpha {
                    let l_next = if k == 0 {
                        1.0
                    } else if k == 1 {
                        1.0 + alpha as f64 - z
                    } else {
                        let kf = k as f64;
                        ((2.0 * kf - 1.0 + alpha as f64 - z) * l_k
                            - (kf - 1.0 + alpha as f64) * l_km1)
                            / kf
                    };
                    l_km1 = l_k;
                    l_k = l_next;

                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    let kernel = sign * ratio[alpha][k] * gauss * beta_pow * l_k;
                    let (m, n) = (k + alpha, k);
                    if alpha == 0 {
                        acc += rho.entry(m, n).re * kernel.re;
                    } else {
                        acc += 2.0 * (rho.entry(m, n) * kernel).re;
                    }
                }
                beta_pow *= beta;
            }
            values[ix * ps.len() + ip] = acc;
        }
    }

    let mut grid = WignerGrid {
        xs: xs.to_vec(),
        ps: ps.to_vec(),
        values,
        resolution_warning: None,
    };
    let integral = grid.integral();
    if (integral - 1.0).abs() > 1e-2 {
        grid.resolution_warning = Some(format!(
            "Wigner grid integral is {integral:.4}; widen or refine the grid"
        ));
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::super::fock::build_squeezed_thermal;
    use super::*;

    fn axis() -> Vec<f64> {
        uniform_axis(-5.0, 5.0, 141)
    }

    #[test]
    fn vacuum_anchor() {
        let rho = FockDensityMatrix::vacuum(8);
        let w = wigner(&rho, &axis(), &axis()).unwrap();
        let center = w.value(70, 70);
        assert!((center - 1.0 / std::f64::consts::PI).abs() < 1e-9);
        assert!((w.integral() - 1.0).abs() < 1e-3);
        assert!(w.resolution_warning.is_none());
    }

    #[test]
    fn single_photon_negativity_anchor() {
        let dim = 8;
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        entries[dim + 1] = Complex64::new(1.0, 0.0);
        let rho = FockDensityMatrix::new(dim, entries).unwrap();
        let w = wigner(&rho, &axis(), &axis()).unwrap();
        let center = w.value(70, 70);
        assert!((center + 1.0 / std::f64::consts::PI).abs() < 1e-9);
        assert!(w.min_value() >= -1.0 / std::f64::consts::PI - 1e-9);
        assert!((w.integral() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn squeezed_thermal_ellipse_moments() {
        let (n_bar, r) = (0.15, 0.3);
        let rho = build_squeezed_thermal(n_bar, r, 0.0, 20).unwrap();
        let w = wigner(&rho, &axis(), &axis()).unwrap();
        let (xx, pp, xp) = w.second_moments();
        // orientation 0: maximum-variance axis along x
        let vmax = (n_bar + 0.5) * (2.0 * r).exp();
        let vmin = (n_bar + 0.5) * (-2.0 * r).exp();
        assert!((xx - vmax).abs() < 1e-3, "xx {xx} vs {vmax}");
        assert!((pp - vmin).abs() < 1e-3, "pp {pp} vs {vmin}");
        assert!(xp.abs() < 1e-6);
    }

    #[test]
    fn coarse_grid_triggers_warning() {
        let rho = FockDensityMatrix::vacuum(6);
        let small = uniform_axis(-1.0, 1.0, 5);
        let w = wigner(&rho, &small, &small).unwrap();
        assert!(w.resolution_warning.is_some());
    }

    #[test]
    fn wigner_bound_holds_for_reconstruction_like_states() {
        let rho = build_squeezed_thermal(0.3, 0.4, 0.7, 16).unwrap();
        let w = wigner(&rho, &axis(), &axis()).unwrap();
        assert!(w.min_value() >= -1.0 / std::f64::consts::PI - 1e-9);
        assert!((w.integral() - 1.0).abs() < 1e-3);
    }
}
