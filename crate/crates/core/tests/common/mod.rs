//! Shared test support: a Monte-Carlo oracle for the pulsed variance.
//!
//! The oracle samples phase-space quadratures of the discretized frequency
//! modes from the Gaussian state defined by the measured noise pair (thermal
//! occupation per mode plus pairwise two-mode squeezing between +-w), applies
//! the mode filter as a linear projection with a vacuum remainder, adds the
//! phase-insensitive excess noise, and estimates the quadrature variance from
//! the realizations. Wigner sampling reproduces symmetrized moments exactly
//! for Gaussian states, so the estimate converges to the deterministic
//! formula without sharing its integration code.

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use sqz_eit::opa::NoisePair;
use sqz_eit::pulsed::ModeFilter;

pub struct McEstimate {
    pub variance: f64,
    pub std_error: f64,
}

pub fn mc_pulsed_variance(
    pair: &NoisePair,
    filter: &ModeFilter,
    pulsed_noise: f64,
    theta: f64,
    realizations: usize,
    seed: u64,
) -> McEstimate {
    let grid = pair.grid();
    let n = grid.n_points();
    let dw = grid.spacing();
    let rot = Complex64::from_polar(1.0, theta);

    // coefficients of Q = sum_k [ Re(c_k) x_k - Im(c_k) p_k ] + remainder
    let coef: Vec<Complex64> = (0..n)
        .map(|k| rot * filter.f_spec.values[k] * dw.sqrt())
        .collect();
    let weight_sq: f64 = coef.iter().map(|c| c.norm_sqr()).sum();
    let remainder = (1.0 - weight_sq).max(0.0).sqrt();

    // unordered mode pairs (k, reflect(k)); self-paired points are single-mode
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for k in 0..n {
        let r = grid.reflect(k);
        if k < r || k == r {
            pairs.push((k, r));
        }
    }
    // per-pair standard deviations of the +-45 degree normal modes
    let stats: Vec<(f64, f64)> = pairs
        .iter()
        .map(|&(k, _)| {
            let big_n = 0.5 * (pair.v_plus.values[k] + pair.v_minus.values[k]);
            let m = 0.5 * (pair.v_plus.values[k] - pair.v_minus.values[k]);
            (((big_n + m) / 2.0).sqrt(), ((big_n - m) / 2.0).max(0.0).sqrt())
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise_std = pulsed_noise.max(0.0).sqrt();
    let vac_std = 0.5f64.sqrt();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..realizations {
        let mut q = 0.0;
        for (pi, &(k, r)) in pairs.iter().enumerate() {
            let (sp, sm) = stats[pi];
            if k == r {
                // self-paired: single mode with <b^2> = m
                let x = sp * std::f64::consts::SQRT_2 * rng.sample::<f64, _>(StandardNormal);
                let p = sm * std::f64::consts::SQRT_2 * rng.sample::<f64, _>(StandardNormal);
                q += coef[k].re * x - coef[k].im * p;
            } else {
                let g1: f64 = rng.sample(StandardNormal);
                let g2: f64 = rng.sample(StandardNormal);
                let g3: f64 = rng.sample(StandardNormal);
                let g4: f64 = rng.sample(StandardNormal);
                let xk = sp * g1 + sm * g2;
                let xr = sp * g1 - sm * g2;
                let pk = sm * g3 + sp * g4;
                let pr = sm * g3 - sp * g4;
                q += coef[k].re * xk - coef[k].im * pk;
                q += coef[r].re * xr - coef[r].im * pr;
            }
        }
        // vacuum remainder completing the mode to commutator one
        let xv: f64 = rng.sample(StandardNormal);
        let pv: f64 = rng.sample(StandardNormal);
        q += remainder * vac_std * (theta.cos() * xv - theta.sin() * pv);
        // phase-insensitive atomic excess noise
        q += noise_std * rng.sample::<f64, _>(StandardNormal);

        sum += q;
        sum_sq += q * q;
    }
    let r = realizations as f64;
    let variance = sum_sq / r - (sum / r).powi(2);
    McEstimate {
        variance,
        std_error: variance * (2.0 / r).sqrt(),
    }
}
