//! Iterative maximum-likelihood reconstruction (the R rho R scheme) from
//! phase-resolved quadrature samples.
//!
//! Projectors are rank-one per sample, Pi_j = |theta_j, q_j><theta_j, q_j|
//! with <n|theta, q> = e^{i n theta} psi_n(q). The iteration
//! rho <- N[R(rho) rho R(rho)], R(rho) = (1/J) sum_j Pi_j / Tr(rho Pi_j),
//! is damped whenever a full step would lower the likelihood, so the
//! per-iteration log-likelihood is non-decreasing by construction.

use num_complex::Complex64;

use super::fock::FockDensityMatrix;
use super::{wavefunctions_up_to, QuadratureDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct MaxLikOptions {
    /// Stop when the per-sample log-likelihood gain drops below this.
    pub loglik_tolerance: f64,
    pub max_iterations: usize,
    /// Warn when the top Fock population exceeds this after convergence.
    pub tail_threshold: f64,
    /// Optional phase binning: phases are rounded to bin centers before
    /// projectors are built (an approximation traded for projector reuse).
    pub phase_bins: Option<usize>,
}

impl Default for MaxLikOptions {
    fn default() -> Self {
        Self {
            loglik_tolerance: 1e-10,
            max_iterations: 2000,
            tail_threshold: super::fock::DEFAULT_TAIL_THRESHOLD,
            phase_bins: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MaxLikResult {
    pub rho: FockDensityMatrix,
    pub iterations: usize,
    /// Mean log-likelihood per included sample at the solution.
    pub log_likelihood: f64,
    /// Per-iteration mean log-likelihood, starting from the initial state.
    pub loglik_history: Vec<f64>,
    /// Samples excluded because Tr(rho Pi_j) underflowed.
    pub excluded_samples: usize,
    pub tail_population: f64,
    pub warnings: Vec<String>,
}

const UNDERFLOW: f64 = 1e-280;

struct Projectors {
    dim: usize,
    // flat [j * dim + n] = e^{i n theta_j} psi_n(q_j)
    psi: Vec<Complex64>,
    n_samples: usize,
}

impl Projectors {
    fn build(data: &QuadratureDataset, dim: usize, phase_bins: Option<usize>) -> Self {
        let mut psi = Vec::with_capacity(data.len() * dim);
        for &(phase, q) in &data.samples {
            let phase = match phase_bins {
                Some(bins) if bins > 0 => {
                    let w = std::f64::consts::TAU / bins as f64;
                    (phase / w).floor() * w + 0.5 * w
                }
                _ => phase,
            };
            let mags = wavefunctions_up_to(dim - 1, q);
            for (n, m) in mags.iter().enumerate() {
                psi.push(Complex64::from_polar(*m, n as f64 * phase));
            }
        }
        Self {
            dim,
            psi,
            n_samples: data.len(),
        }
    }

    fn sample(&self, j: usize) -> &[Complex64] {
        &self.psi[j * self.dim..(j + 1) * self.dim]
    }
}

fn probability(rho: &[Complex64], dim: usize, psi: &[Complex64]) -> f64 {
    // <psi| rho |psi>
    let mut total = Complex64::new(0.0, 0.0);
    for m in 0..dim {
        let mut row = Complex64::new(0.0, 0.0);
        let base = m * dim;
        for n in 0..dim {
            row += rho[base + n] * psi[n];
        }
        total += psi[m].conj() * row;
    }
    total.re
}

fn log_likelihood(rho: &[Complex64], dim: usize, proj: &Projectors) -> (f64, usize) {
    let mut ll = 0.0;
    let mut excluded = 0;
    for j in 0..proj.n_samples {
        let p = probability(rho, dim, proj.sample(j));
        if p > UNDERFLOW {
            ll += p.ln();
        } else {
            excluded += 1;
        }
    }
    let included = proj.n_samples - excluded;
    (ll / included.max(1) as f64, excluded)
}

/// R(rho) = (1/J) sum_j Pi_j / p_j over samples with p_j above underflow.
fn r_operator(rho: &[Complex64], dim: usize, proj: &Projectors) -> (Vec<Complex64>, usize) {
    let mut r = vec![Complex64::new(0.0, 0.0); dim * dim];
    let mut excluded = 0;
    for j in 0..proj.n_samples {
        let psi = proj.sample(j);
        let p = probability(rho, dim, psi);
        if p <= UNDERFLOW {
            excluded += 1;
            continue;
        }
        let w = 1.0 / p;
        for m in 0..dim {
            let wm = w * psi[m];
            let base = m * dim;
            for n in 0..=m {
                let v = wm * psi[n].conj();
                r[base + n] += v;
            }
        }
    }
    // mirror the lower triangle
    for m in 0..dim {
        for n in 0..m {
            r[n * dim + m] = r[m * dim + n].conj();
        }
    }
    let included = (proj.n_samples - excluded).max(1);
    for v in r.iter_mut() {
        *v /= included as f64;
    }
    (r, excluded)
}

fn matmul(a: &[Complex64], b: &[Complex64], dim: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
    for m in 0..dim {
        for k in 0..dim {
            let amk = a[m * dim + k];
            if amk.norm_sqr() == 0.0 {
                continue;
            }
            let bk = &b[k * dim..(k + 1) * dim];
            let om = &mut out[m * dim..(m + 1) * dim];
            for n in 0..dim {
                om[n] += amk * bk[n];
            }
        }
    }
    out
}

fn normalize_trace(rho: &mut [Complex64], dim: usize) {
    let tr: f64 = (0..dim).map(|n| rho[n * dim + n].re).sum();
    if tr > 0.0 {
        for v in rho.iter_mut() {
            *v /= tr;
        }
    }
}

/// One candidate step rho' = N[(I + eps R) rho (I + eps R)]; eps = None means
/// the undiluted R rho R step.
fn step(rho: &[Complex64], r: &[Complex64], dim: usize, eps: Option<f64>) -> Vec<Complex64> {
    let op: Vec<Complex64> = match eps {
        None => r.to_vec(),
        Some(e) => {
            let mut op = r.iter().map(|v| v * e).collect::<Vec<_>>();
            for n in 0..dim {
                op[n * dim + n] += 1.0;
            }
            op
        }
    };
    let mut next = matmul(&op, &matmul(rho, &op, dim), dim);
    normalize_trace(&mut next, dim);
    next
}

pub fn maxlik_reconstruct(
    data: &QuadratureDataset,
    cutoff: usize,
    options: &MaxLikOptions,
) -> Result<MaxLikResult> {
    if data.len() < 100 {
        return Err(Error::InvalidParameter(format!(
            "need at least 100 quadrature samples, got {}",
            data.len()
        )));
    }
    if cutoff < 1 {
        return Err(Error::InvalidParameter("cutoff must be >= 1".into()));
    }
    let dim = cutoff + 1;
    let proj = Projectors::build(data, dim, options.phase_bins);

    // maximally mixed start
    let mut rho = vec![Complex64::new(0.0, 0.0); dim * dim];
    for n in 0..dim {
        rho[n * dim + n] = Complex64::new(1.0 / dim as f64, 0.0);
    }

    let (mut ll, mut excluded) = log_likelihood(&rho, dim, &proj);
    let mut history = vec![ll];
    let mut warnings = Vec::new();
    let mut iterations = 0;

    for it in 0..options.max_iterations {
        iterations = it + 1;
        let (r, exc) = r_operator(&rho, dim, &proj);
        excluded = excluded.max(exc);

        let full = step(&rho, &r, dim, None);
        let (ll_full, _) = log_likelihood(&full, dim, &proj);

        let (next, ll_next) = if ll_full >= ll {
            (full, ll_full)
        } else {
            // damped fallback keeps the likelihood non-decreasing
            let mut chosen = None;
            let mut eps = 0.5;
            while eps > 1e-8 {
                let cand = step(&rho, &r, dim, Some(eps));
                let (ll_c, _) = log_likelihood(&cand, dim, &proj);
                if ll_c >= ll {
                    chosen = Some((cand, ll_c));
                    break;
                }
                eps *= 0.5;
            }
            match chosen {
                Some(c) => c,
                None => break, // no uphill direction left: converged
            }
        };

        let gain = ll_next - ll;
        rho = next;
        ll = ll_next;
        history.push(ll);
        if gain < options.loglik_tolerance {
            break;
        }
    }

    let result = FockDensityMatrix::from_parts_unchecked(dim, rho).hermitized_normalized();
    result.validate()?;
    let tail = result.tail_population();
    if tail > options.tail_threshold {
        warnings.push(format!(
            "tail population {tail:.2e} exceeds {:.2e}: consider a larger Fock cutoff",
            options.tail_threshold
        ));
    }
    if excluded > 0 {
        warnings.push(format!("{excluded} samples excluded (projector underflow)"));
    }
    Ok(MaxLikResult {
        rho: result,
        iterations,
        log_likelihood: ll,
        loglik_history: history,
        excluded_samples: excluded,
        tail_population: tail,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{synthesize_quadratures, PhaseSchedule};
    use super::*;

    #[test]
    fn rejects_tiny_datasets() {
        let data = QuadratureDataset::new(vec![(0.0, 0.1); 10]).unwrap();
        assert!(maxlik_reconstruct(&data, 4, &MaxLikOptions::default()).is_err());
    }

    #[test]
    fn vacuum_data_reconstructs_vacuum() {
        let data =
            synthesize_quadratures(0.5, 0.5, 0.0, 50_000, &PhaseSchedule::LinearSweep, 42).unwrap();
        let res = maxlik_reconstruct(&data, 10, &MaxLikOptions::default()).unwrap();
        assert!(
            res.rho.entry(0, 0).re >= 0.99,
            "rho_00 = {}",
            res.rho.entry(0, 0).re
        );
    }

    #[test]
    fn squeezed_vacuum_is_even_photon_dominated() {
        let r = 0.35f64;
        let vmin = 0.5 * (-2.0 * r).exp();
        let vmax = 0.5 * (2.0 * r).exp();
        let data =
            synthesize_quadratures(vmax, vmin, 0.0, 50_000, &PhaseSchedule::LinearSweep, 5).unwrap();
        let res = maxlik_reconstruct(&data, 10, &MaxLikOptions::default()).unwrap();
        for n in (1..=9).step_by(2) {
            assert!(
                res.rho.entry(n, n).re < 0.01,
                "odd population rho_{n}{n} = {}",
                res.rho.entry(n, n).re
            );
        }
    }

    #[test]
    fn likelihood_is_monotone() {
        for seed in [1u64, 2, 3] {
            let data = synthesize_quadratures(
                1.3,
                0.3,
                0.4,
                5_000,
                &PhaseSchedule::LinearSweep,
                seed,
            )
            .unwrap();
            let res = maxlik_reconstruct(&data, 8, &MaxLikOptions::default()).unwrap();
            for w in res.loglik_history.windows(2) {
                assert!(w[1] >= w[0], "log-likelihood decreased: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn reconstructed_variances_track_the_source() {
        let (vmax, vmin, orient) = (1.2, 0.35, 0.9);
        let data =
            synthesize_quadratures(vmax, vmin, orient, 50_000, &PhaseSchedule::LinearSweep, 9)
                .unwrap();
        let res = maxlik_reconstruct(&data, 12, &MaxLikOptions::default()).unwrap();
        let (got_min, got_max, got_orient) = res.rho.variance_extrema();
        assert!((got_min - vmin).abs() < 0.02, "{got_min} vs {vmin}");
        assert!((got_max - vmax).abs() < 0.05, "{got_max} vs {vmax}");
        let d = (got_orient - orient).abs();
        let d = d.min((d - std::f64::consts::PI).abs());
        assert!(d < 0.03, "orientation {got_orient} vs {orient}");
    }
}
