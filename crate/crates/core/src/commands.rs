//! Subcommand implementations. Each command validates inputs first, then
//! writes its outputs into the run directory and returns the list of files
//! for the manifest.

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use sqz_eit::calibration::{
    fit_eit, fit_opa, synthesize_classical_dataset, EitFitOptions, EitFitParams, SyntheticScan,
};
use sqz_eit::config::{mhz_to_rad_per_us, ns_to_us, Config, TWO_PI};
use sqz_eit::cw::{optimal_detuning_scan, transmitted_extrema};
use sqz_eit::eit::{group_delay_ns, propagate_pulse, transmissivity};
use sqz_eit::error::{Error, Result};
use sqz_eit::io;
use sqz_eit::opa::{noise_pair, to_db, NoisePair};
use sqz_eit::pulsed::{
    build_mode_from_classical, mode_filter, predicted_state, pulsed_excess_noise, pulsed_extrema,
    pulsed_variance,
};
use sqz_eit::spectral::FrequencyGrid;
use sqz_eit::tomography::{
    fidelity, maxlik_reconstruct, synthesize_quadratures, wigner, FockDensityMatrix,
    MaxLikOptions, PhaseSchedule,
};

pub struct OutputFile {
    pub path: PathBuf,
    pub sha256: String,
}

pub struct RunOutcome {
    pub outputs: Vec<OutputFile>,
    /// One-line summaries printed to stdout.
    pub notes: Vec<String>,
}

fn hash_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn record(outputs: &mut Vec<OutputFile>, path: PathBuf) -> Result<()> {
    let sha256 = hash_file(&path)?;
    outputs.push(OutputFile { path, sha256 });
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn measured_pair(config: &Config, grid: &FrequencyGrid) -> Result<NoisePair> {
    noise_pair(&config.opa_params(), grid)
}

pub fn simulate_cw(config: &Config, out_dir: &Path, base_dir: &Path) -> Result<RunOutcome> {
    let grid = config.frequency_grid()?;
    let medium = transmissivity(&config.susceptibility_params(), &grid)?;
    let source = measured_pair(config, &grid)?;
    let noise = config.noise_spectrum(&grid, base_dir)?;
    let transmitted = transmitted_extrema(&source, &medium, &noise)?;

    let mut outputs = Vec::new();
    let p = out_dir.join("source_noise.csv");
    io::write_noise_pair_csv(&p, &source)?;
    record(&mut outputs, p)?;
    let p = out_dir.join("transmissivity.csv");
    io::write_transmissivity_csv(&p, &medium)?;
    record(&mut outputs, p)?;
    let p = out_dir.join("transmitted_noise.csv");
    io::write_noise_pair_csv(&p, &transmitted)?;
    record(&mut outputs, p)?;
    let p = out_dir.join("excess_noise.csv");
    io::write_excess_noise_csv(&p, &noise.spectrum)?;
    record(&mut outputs, p)?;

    let (lo, hi) = config.analysis_band();
    let band_min = |pair: &NoisePair| {
        (0..grid.n_points())
            .filter(|&k| {
                let w = grid.value(k).abs();
                w >= lo && w <= hi
            })
            .map(|k| pair.v_minus.values[k])
            .fold(f64::INFINITY, f64::min)
    };
    let before = to_db(band_min(&source));
    let after = to_db(band_min(&transmitted));
    let summary = serde_json::json!({
        "analysis_band_mhz": config.cw.analysis_band_mhz,
        "best_source_squeezing_db": before,
        "best_transmitted_squeezing_db": after,
    });
    let p = out_dir.join("simulate_cw.json");
    write_json(&p, &summary)?;
    record(&mut outputs, p)?;

    Ok(RunOutcome {
        outputs,
        notes: vec![format!(
            "best squeezing in band: source {before:.2} dB, transmitted {after:.2} dB"
        )],
    })
}

pub fn scan_detuning(config: &Config, out_dir: &Path, base_dir: &Path) -> Result<RunOutcome> {
    let grid = config.frequency_grid()?;
    let source = measured_pair(config, &grid)?;
    let noise = config.noise_spectrum(&grid, base_dir)?;
    let detunings = config.detuning_values();
    let scan = optimal_detuning_scan(
        &source,
        &config.susceptibility_params(),
        &noise,
        &detunings,
        config.analysis_band(),
    )?;

    let mut outputs = Vec::new();
    let p = out_dir.join("detuning_scan.csv");
    io::write_detuning_scan_csv(&p, &scan)?;
    record(&mut outputs, p)?;
    let best = scan.best();
    let summary = serde_json::json!({
        "best_detuning_mhz": best.detuning / TWO_PI,
        "best_squeezing_db": best.best_squeezing_db,
    });
    let p = out_dir.join("scan_detuning.json");
    write_json(&p, &summary)?;
    record(&mut outputs, p)?;

    Ok(RunOutcome {
        outputs,
        notes: vec![format!(
            "optimal two-photon detuning {:.4} MHz ({:.2} dB)",
            best.detuning / TWO_PI,
            best.best_squeezing_db
        )],
    })
}

pub fn propagate_pulse_cmd(config: &Config, out_dir: &Path) -> Result<RunOutcome> {
    let grid = config.frequency_grid()?;
    let chopper = config.chopper_window(&grid)?;
    let medium = transmissivity(&config.susceptibility_params(), &grid)?;
    let out = propagate_pulse(&chopper.profile, &medium)?;
    let delay = group_delay_ns(&chopper.profile, &out)?;
    let energy_fraction = out.energy() / chopper.profile.energy();

    let mut outputs = Vec::new();
    let p = out_dir.join("input_pulse.csv");
    io::write_signal_csv(&p, &chopper.profile)?;
    record(&mut outputs, p)?;
    let p = out_dir.join("output_pulse.csv");
    io::write_signal_csv(&p, &out)?;
    record(&mut outputs, p)?;
    let summary = serde_json::json!({
        "group_delay_ns": delay,
        "transmitted_energy_fraction": energy_fraction,
    });
    let p = out_dir.join("propagate_pulse.json");
    write_json(&p, &summary)?;
    record(&mut outputs, p)?;

    Ok(RunOutcome {
        outputs,
        notes: vec![format!(
            "group delay {delay:.1} ns, transmitted energy fraction {energy_fraction:.3}"
        )],
    })
}

pub struct PulsedPrediction {
    pub v_min: f64,
    pub v_max: f64,
    pub orientation: f64,
    pub pulsed_noise: f64,
    pub rho: FockDensityMatrix,
}

pub fn predict_pulsed_state(
    config: &Config,
    grid: &FrequencyGrid,
    eit: &EitFitParams,
    source: &NoisePair,
    base_dir: &Path,
) -> Result<PulsedPrediction> {
    let geometry = config.medium_geometry();
    let medium_params = eit.medium_at_power(
        &geometry,
        config.medium.control_power_mw,
        mhz_to_rad_per_us(config.medium.two_photon_detuning_mhz),
    );
    let medium = transmissivity(&medium_params, grid)?;
    let chopper = config.chopper_window(grid)?;
    let transmitted = propagate_pulse(&chopper.profile, &medium)?;
    let mode = build_mode_from_classical(&transmitted)?;
    let filter = mode_filter(&medium, &mode, &chopper, 1.0)?;
    let noise = config.noise_spectrum(grid, base_dir)?;
    let pulsed_noise = pulsed_excess_noise(&noise, &mode)?;
    let ext = pulsed_extrema(source, &filter, pulsed_noise)?;
    let rho = predicted_state(ext.v_max, ext.v_min, ext.orientation, config.tomography.cutoff)?;
    Ok(PulsedPrediction {
        v_min: ext.v_min,
        v_max: ext.v_max,
        orientation: ext.orientation,
        pulsed_noise,
        rho,
    })
}

pub fn simulate_pulse(config: &Config, out_dir: &Path, base_dir: &Path) -> Result<RunOutcome> {
    let grid = config.frequency_grid()?;
    let source = measured_pair(config, &grid)?;
    // detection efficiency is already inside the measured source spectra; the
    // channel relative to that measurement is the chopper and the cell
    let medium_params = config.susceptibility_params();
    let medium = transmissivity(&medium_params, &grid)?;
    let chopper = config.chopper_window(&grid)?;
    let transmitted = propagate_pulse(&chopper.profile, &medium)?;
    let mode = build_mode_from_classical(&transmitted)?;
    let filter = mode_filter(&medium, &mode, &chopper, 1.0)?;
    let noise = config.noise_spectrum(&grid, base_dir)?;
    let pulsed_noise = pulsed_excess_noise(&noise, &mode)?;
    let ext = pulsed_extrema(&source, &filter, pulsed_noise)?;

    let n_phases = 181;
    let rows: Vec<(f64, f64)> = (0..n_phases)
        .map(|j| {
            let theta = std::f64::consts::PI * j as f64 / (n_phases - 1) as f64;
            let v = pulsed_variance(&source, &filter, pulsed_noise, theta)?;
            Ok((theta, v))
        })
        .collect::<Result<_>>()?;

    let rho = predicted_state(ext.v_max, ext.v_min, ext.orientation, config.tomography.cutoff)?;

    let mut outputs = Vec::new();
    let p = out_dir.join("variance_vs_phase.csv");
    io::write_variance_table_csv(&p, &rows)?;
    record(&mut outputs, p)?;
    let p = out_dir.join("predicted_state.json");
    io::write_density_matrix_json(&p, &rho)?;
    record(&mut outputs, p)?;
    let summary = serde_json::json!({
        "v_min": ext.v_min,
        "v_max": ext.v_max,
        "v_min_db": to_db(ext.v_min),
        "v_max_db": to_db(ext.v_max),
        "orientation_rad": ext.orientation,
        "pulsed_excess_noise": pulsed_noise,
    });
    let p = out_dir.join("simulate_pulse.json");
    write_json(&p, &summary)?;
    record(&mut outputs, p)?;

    Ok(RunOutcome {
        outputs,
        notes: vec![format!(
            "pulsed extrema: {:.2} dB / {:+.2} dB at orientation {:.3} rad",
            to_db(ext.v_min),
            to_db(ext.v_max),
            ext.orientation
        )],
    })
}

fn state_targets(
    config: &Config,
    state_file: Option<&Path>,
) -> Result<(f64, f64, f64)> {
    if let Some(path) = state_file {
        let rho = io::read_density_matrix_json(path)?;
        let (v_min, v_max, orientation) = rho.variance_extrema();
        return Ok((v_max, v_min, orientation));
    }
    match &config.tomography.state {
        Some(s) => Ok((
            sqz_eit::opa::from_db(s.v_max_db),
            sqz_eit::opa::from_db(s.v_min_db),
            s.orientation_rad,
        )),
        None => Err(Error::Config(
            "synthesize needs tomography.state in the config or --state <file>".into(),
        )),
    }
}

pub fn synthesize_cmd(
    config: &Config,
    out_dir: &Path,
    state_file: Option<&Path>,
    seed: u64,
) -> Result<RunOutcome> {
    let (v_max, v_min, orientation) = state_targets(config, state_file)?;
    let data = synthesize_quadratures(
        v_max,
        v_min,
        orientation,
        config.tomography.samples,
        &PhaseSchedule::LinearSweep,
        seed,
    )?;
    let mut outputs = Vec::new();
    let p = out_dir.join("quadratures.csv");
    io::write_quadratures_csv(&p, &data)?;
    record(&mut outputs, p)?;
    let summary = serde_json::json!({
        "samples": data.len(),
        "v_max": v_max,
        "v_min": v_min,
        "orientation_rad": orientation,
        "seed": seed,
    });
    let p = out_dir.join("synthesize.json");
    write_json(&p, &summary)?;
    record(&mut outputs, p)?;
    Ok(RunOutcome {
        outputs,
        notes: vec![format!("{} quadrature samples written", data.len())],
    })
}

fn maxlik_options(config: &Config) -> MaxLikOptions {
    MaxLikOptions {
        loglik_tolerance: config.tomography.loglik_tolerance,
        max_iterations: config.tomography.max_iterations,
        tail_threshold: config.tomography.tail_threshold,
        phase_bins: config.tomography.phase_bins,
    }
}

pub fn reconstruct_cmd(config: &Config, out_dir: &Path, data_file: &Path) -> Result<RunOutcome> {
    let data = io::read_quadratures_csv(data_file)?;
    let result = maxlik_reconstruct(&data, config.tomography.cutoff, &maxlik_options(config))?;
    let (v_min, v_max, orientation) = result.rho.variance_extrema();

    let mut outputs = Vec::new();
    let p = out_dir.join("reconstructed_state.json");
    io::write_density_matrix_json(&p, &result.rho)?;
    record(&mut outputs, p)?;
    let summary = serde_json::json!({
        "iterations": result.iterations,
        "log_likelihood_per_sample": result.log_likelihood,
        "excluded_samples": result.excluded_samples,
        "tail_population": result.tail_population,
        "warnings": result.warnings,
        "v_min": v_min,
        "v_max": v_max,
        "v_min_db": to_db(v_min),
        "v_max_db": to_db(v_max),
        "orientation_rad": orientation,
    });
    let p = out_dir.join("reconstruction.json");
    write_json(&p, &summary)?;
    record(&mut outputs, p)?;

    Ok(RunOutcome {
        outputs,
        notes: vec![format!(
            "reconstructed in {} iterations: {:.2} dB / {:+.2} dB",
            result.iterations,
            to_db(v_min),
            to_db(v_max)
        )],
    })
}

pub fn wigner_cmd(config: &Config, out_dir: &Path, state_file: &Path) -> Result<RunOutcome> {
    let rho = io::read_density_matrix_json(state_file)?;
    let w = &config.tomography.wigner;
    let axis = sqz_eit::tomography::wigner_axis(-w.extent, w.extent, w.points);
    let grid = wigner(&rho, &axis, &axis)?;
    let mut outputs = Vec::new();
    let p = out_dir.join("wigner.csv");
    io::write_wigner_csv(&p, &grid)?;
    record(&mut outputs, p)?;
    let summary = serde_json::json!({
        "integral": grid.integral(),
        "min_value": grid.min_value(),
        "resolution_warning": grid.resolution_warning,
    });
    let p = out_dir.join("wigner.json");
    write_json(&p, &summary)?;
    record(&mut outputs, p)?;
    let mut notes = vec![format!("Wigner grid integral {:.4}", grid.integral())];
    if let Some(wmsg) = &grid.resolution_warning {
        notes.push(format!("warning: {wmsg}"));
    }
    Ok(RunOutcome { outputs, notes })
}

pub fn fidelity_cmd(
    out_dir: &Path,
    state_a: &Path,
    state_b: &Path,
) -> Result<RunOutcome> {
    let a = io::read_density_matrix_json(state_a)?;
    let b = io::read_density_matrix_json(state_b)?;
    let f = fidelity(&a, &b)?;
    let mut outputs = Vec::new();
    let summary = serde_json::json!({
        "state_a": state_a.display().to_string(),
        "state_b": state_b.display().to_string(),
        "fidelity": f,
    });
    let p = out_dir.join("fidelity_report.json");
    write_json(&p, &summary)?;
    record(&mut outputs, p)?;
    Ok(RunOutcome {
        outputs,
        notes: vec![format!("fidelity = {f:.6}")],
    })
}

fn eit_guess(config: &Config) -> EitFitParams {
    let truth = config.eit_fit_truth();
    let o = &config.calibration.guess_offsets;
    EitFitParams {
        gamma_bc: truth.gamma_bc * o[0],
        doppler_width: truth.doppler_width * o[1],
        chi_scale: truth.chi_scale * o[2],
        one_photon_detuning: truth.one_photon_detuning * o[3],
        rabi_per_sqrt_mw: truth.rabi_per_sqrt_mw * o[4],
    }
}

fn eit_fit_options(config: &Config) -> EitFitOptions {
    EitFitOptions {
        pulse_fwhm_us: ns_to_us(config.calibration.pulse_fwhm_ns),
        spectral_noise_fraction: config.calibration.spectral_noise_fraction.max(1e-4),
        waveform_noise_fraction: config.calibration.spectral_noise_fraction.max(1e-4),
        ..EitFitOptions::default()
    }
}

fn fit_summary_json(fit: &sqz_eit::calibration::FitResult) -> serde_json::Value {
    serde_json::json!({
        "gamma_bc_mhz": fit.params.gamma_bc / TWO_PI,
        "doppler_width_mhz": fit.params.doppler_width / TWO_PI,
        "chi_scale": fit.params.chi_scale,
        "one_photon_detuning_mhz": fit.params.one_photon_detuning / TWO_PI,
        "rabi_per_sqrt_mw_mhz": fit.params.rabi_per_sqrt_mw / TWO_PI,
        "rabi_per_power_mhz": fit.rabi_per_power.iter()
            .map(|(p, r)| serde_json::json!({"power_mw": p, "rabi_mhz": r / TWO_PI}))
            .collect::<Vec<_>>(),
        "residual_norm": fit.residual_norm,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "residual_history": fit.residual_history,
        "warnings": fit.warnings,
    })
}

pub fn fit_eit_cmd(config: &Config, out_dir: &Path, dataset_index: &Path) -> Result<RunOutcome> {
    let dataset = io::read_classical_dataset(dataset_index)?;
    let fit = fit_eit(
        &dataset,
        &config.medium_geometry(),
        &eit_guess(config),
        &eit_fit_options(config),
    )?;
    let mut outputs = Vec::new();
    let p = out_dir.join("eit_fit.json");
    write_json(&p, &fit_summary_json(&fit))?;
    record(&mut outputs, p)?;
    Ok(RunOutcome {
        outputs,
        notes: vec![format!(
            "EIT fit: residual {:.4e} after {} iterations (converged: {})",
            fit.residual_norm, fit.iterations, fit.converged
        )],
    })
}

pub fn fit_opa_cmd(config: &Config, out_dir: &Path, data_file: &Path) -> Result<RunOutcome> {
    let samples = io::read_noise_pair_samples(data_file)?;
    let fit = fit_opa(&samples, &config.opa_params(), 0.05)?;
    let mut outputs = Vec::new();
    let summary = serde_json::json!({
        "cavity_hwhm_mhz": fit.params.cavity_hwhm / TWO_PI,
        "pump_ratio": fit.params.pump_ratio,
        "efficiency": fit.params.efficiency,
        "residual_norm": fit.residual_norm,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "warnings": fit.warnings,
    });
    let p = out_dir.join("opa_fit.json");
    write_json(&p, &summary)?;
    record(&mut outputs, p)?;
    Ok(RunOutcome {
        outputs,
        notes: vec![format!(
            "OPA fit: gamma {:.3} MHz, p {:.4}, eta {:.4}",
            fit.params.cavity_hwhm / TWO_PI,
            fit.params.pump_ratio,
            fit.params.efficiency
        )],
    })
}

/// End-to-end synthetic run: generate classical data, calibrate the medium
/// and the source, predict the pulsed transmitted state, synthesize homodyne
/// data from the prediction, reconstruct, and score by fidelity.
pub fn pipeline(config: &Config, out_dir: &Path, base_dir: &Path, seed: u64) -> Result<RunOutcome> {
    let mut outputs = Vec::new();
    let mut notes = Vec::new();

    // 1. synthetic classical measurements from the configured truth
    let truth = config.eit_fit_truth();
    let geometry = config.medium_geometry();
    let cal = &config.calibration;
    let scan = SyntheticScan {
        from: -mhz_to_rad_per_us(cal.scan_half_range_mhz),
        to: mhz_to_rad_per_us(cal.scan_half_range_mhz),
        points: cal.scan_points,
    };
    let dataset = synthesize_classical_dataset(
        &truth,
        &geometry,
        &cal.powers_mw,
        &scan,
        ns_to_us(cal.pulse_fwhm_ns),
        cal.spectral_noise_fraction,
        cal.delay_jitter_ns,
        seed,
    )?;
    let index = io::write_classical_dataset(&out_dir.join("classical_data"), &dataset)?;
    record(&mut outputs, index.clone())?;
    for rec in &dataset.records {
        let tag = format!("{:.3}mw", rec.power_mw).replace('.', "p");
        record(&mut outputs, index.parent().unwrap().join(format!("spectrum_{tag}.csv")))?;
        record(&mut outputs, index.parent().unwrap().join(format!("pulse_{tag}.csv")))?;
    }

    // 2. calibrate the medium
    let eit_fit_result = fit_eit(&dataset, &geometry, &eit_guess(config), &eit_fit_options(config))?;
    let p = out_dir.join("eit_fit.json");
    write_json(&p, &fit_summary_json(&eit_fit_result))?;
    record(&mut outputs, p)?;
    notes.push(format!(
        "calibration: residual {:.3e}, converged {}",
        eit_fit_result.residual_norm, eit_fit_result.converged
    ));

    // 3. calibrate the source from noisy synthetic spectra (+-0.05 dB)
    let grid = config.frequency_grid()?;
    let source_truth = noise_pair(&config.opa_params(), &grid)?;
    let samples = {
        use rand::prelude::*;
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x6f70615f);
        let normal = Normal::new(0.0, 0.05).unwrap();
        let mut out = Vec::new();
        let hi = mhz_to_rad_per_us(3.0 * config.opa.cavity_hwhm_mhz);
        for k in (grid.zero_index() + 1..grid.n_points()).step_by(32) {
            if grid.value(k) > hi {
                break;
            }
            let jitter = 10f64.powf(normal.sample(&mut rng) / 10.0);
            let jitter2 = 10f64.powf(normal.sample(&mut rng) / 10.0);
            out.push(sqz_eit::calibration::OpaSample {
                omega: grid.value(k),
                v_plus: source_truth.v_plus.values[k] * jitter,
                v_minus: source_truth.v_minus.values[k] * jitter2,
            });
        }
        out
    };
    let opa_fit_result = fit_opa(&samples, &config.opa_params(), 0.05)?;
    let fitted_source = noise_pair(&opa_fit_result.params, &grid)?;
    let p = out_dir.join("opa_fit.json");
    write_json(
        &p,
        &serde_json::json!({
            "cavity_hwhm_mhz": opa_fit_result.params.cavity_hwhm / TWO_PI,
            "pump_ratio": opa_fit_result.params.pump_ratio,
            "efficiency": opa_fit_result.params.efficiency,
            "converged": opa_fit_result.converged,
        }),
    )?;
    record(&mut outputs, p)?;

    // 4. predict the pulsed transmitted state from the calibrated model
    let prediction = predict_pulsed_state(
        config,
        &grid,
        &eit_fit_result.params,
        &fitted_source,
        base_dir,
    )?;
    let p = out_dir.join("predicted_state.json");
    io::write_density_matrix_json(&p, &prediction.rho)?;
    record(&mut outputs, p)?;
    notes.push(format!(
        "prediction: {:.2} dB / {:+.2} dB, pulsed excess noise {:.4}",
        to_db(prediction.v_min),
        to_db(prediction.v_max),
        prediction.pulsed_noise
    ));

    // 5. synthetic homodyne measurement of the predicted state
    let data = synthesize_quadratures(
        prediction.v_max,
        prediction.v_min,
        prediction.orientation,
        config.tomography.samples,
        &PhaseSchedule::LinearSweep,
        seed.wrapping_add(1),
    )?;
    let p = out_dir.join("quadratures.csv");
    io::write_quadratures_csv(&p, &data)?;
    record(&mut outputs, p)?;

    // 6. reconstruct
    let recon = maxlik_reconstruct(&data, config.tomography.cutoff, &maxlik_options(config))?;
    let p = out_dir.join("reconstructed_state.json");
    io::write_density_matrix_json(&p, &recon.rho)?;
    record(&mut outputs, p)?;

    // 7. score
    let f = fidelity(&prediction.rho, &recon.rho)?;
    let (rv_min, rv_max, r_orient) = recon.rho.variance_extrema();
    let report = serde_json::json!({
        "fidelity": f,
        "predicted": {
            "v_min_db": to_db(prediction.v_min),
            "v_max_db": to_db(prediction.v_max),
            "orientation_rad": prediction.orientation,
        },
        "reconstructed": {
            "v_min_db": to_db(rv_min),
            "v_max_db": to_db(rv_max),
            "orientation_rad": r_orient,
        },
        "delta_db": {
            "v_min": to_db(rv_min) - to_db(prediction.v_min),
            "v_max": to_db(rv_max) - to_db(prediction.v_max),
        },
        "maxlik_iterations": recon.iterations,
        "eit_fit_converged": eit_fit_result.converged,
        "opa_fit_converged": opa_fit_result.converged,
    });
    let p = out_dir.join("pipeline_report.json");
    write_json(&p, &report)?;
    record(&mut outputs, p)?;
    notes.push(format!(
        "fidelity(predicted, reconstructed) = {f:.5}; dB deltas {:+.3}/{:+.3}",
        to_db(rv_min) - to_db(prediction.v_min),
        to_db(rv_max) - to_db(prediction.v_max)
    ));

    Ok(RunOutcome { outputs, notes })
}
