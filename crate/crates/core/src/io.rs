//! CSV and JSON readers/writers for spectra, signals, noise tables,
//! quadrature datasets, density matrices, and fit reports.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calibration::{ClassicalDataset, OpaSample, PowerRecord};
use crate::cw::DetuningScan;
use crate::eit::Transmissivity;
use crate::error::{Error, Result};
use crate::opa::{from_db, to_db, NoisePair};
use crate::spectral::{ComplexSpectrum, FrequencyGrid, RealSpectrum, TemporalSignal};
use crate::tomography::{FockDensityMatrix, QuadratureDataset, WignerGrid};

const TWO_PI: f64 = std::f64::consts::TAU;

pub fn write_spectrum_csv(path: &Path, spectrum: &ComplexSpectrum) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["frequency_MHz", "real", "imag"])?;
    for (k, v) in spectrum.values.iter().enumerate() {
        let f = spectrum.grid.value(k) / TWO_PI;
        w.write_record([f.to_string(), v.re.to_string(), v.im.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_signal_csv(path: &Path, signal: &TemporalSignal) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["time_ns", "real", "imag"])?;
    for (m, v) in signal.values.iter().enumerate() {
        let t = signal.grid.value(m) * 1e3;
        w.write_record([t.to_string(), v.re.to_string(), v.im.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct SpectrumJson {
    n_points: usize,
    spacing_rad_per_us: f64,
    re: Vec<f64>,
    im: Vec<f64>,
}

pub fn write_spectrum_json(path: &Path, spectrum: &ComplexSpectrum) -> Result<()> {
    let body = SpectrumJson {
        n_points: spectrum.grid.n_points(),
        spacing_rad_per_us: spectrum.grid.spacing(),
        re: spectrum.values.iter().map(|v| v.re).collect(),
        im: spectrum.values.iter().map(|v| v.im).collect(),
    };
    std::fs::write(path, serde_json::to_string_pretty(&body)?)?;
    Ok(())
}

pub fn read_spectrum_json(path: &Path) -> Result<ComplexSpectrum> {
    let body: SpectrumJson = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if body.re.len() != body.n_points || body.im.len() != body.n_points {
        return Err(Error::Format("spectrum JSON arrays disagree with n_points".into()));
    }
    let grid = FrequencyGrid::new(body.n_points, body.spacing_rad_per_us)?;
    ComplexSpectrum::new(
        grid,
        body.re
            .iter()
            .zip(body.im.iter())
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect(),
    )
}

pub fn write_transmissivity_csv(path: &Path, t: &Transmissivity) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["frequency_MHz", "re_T", "im_T", "abs_T_squared"])?;
    for (k, v) in t.spectrum.values.iter().enumerate() {
        let f = t.spectrum.grid.value(k) / TWO_PI;
        w.write_record([
            f.to_string(),
            v.re.to_string(),
            v.im.to_string(),
            v.norm_sqr().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_noise_pair_csv(path: &Path, pair: &NoisePair) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["frequency_MHz", "v_plus_dB", "v_minus_dB"])?;
    for k in 0..pair.grid().n_points() {
        let f = pair.grid().value(k) / TWO_PI;
        w.write_record([
            f.to_string(),
            to_db(pair.v_plus.values[k]).to_string(),
            to_db(pair.v_minus.values[k]).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Noise-pair samples for fitting: (omega rad/us, V+ shot, V- shot).
pub fn read_noise_pair_samples(path: &Path) -> Result<Vec<OpaSample>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for record in r.records() {
        let record = record?;
        if record.len() < 3 {
            return Err(Error::Format(
                "noise CSV needs columns frequency_MHz, v_plus_dB, v_minus_dB".into(),
            ));
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|_| Error::Format(format!("bad numeric field `{s}`")))
        };
        out.push(OpaSample {
            omega: TWO_PI * parse(&record[0])?,
            v_plus: from_db(parse(&record[1])?),
            v_minus: from_db(parse(&record[2])?),
        });
    }
    Ok(out)
}

pub fn write_excess_noise_csv(path: &Path, spectrum: &RealSpectrum) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["frequency_MHz", "v_noise_shotnoise_units"])?;
    for (k, v) in spectrum.values.iter().enumerate() {
        let f = spectrum.grid.value(k) / TWO_PI;
        w.write_record([f.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_quadratures_csv(path: &Path, data: &QuadratureDataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["phase_rad", "quadrature"])?;
    for (phase, q) in &data.samples {
        w.write_record([phase.to_string(), q.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_quadratures_csv(path: &Path) -> Result<QuadratureDataset> {
    let mut r = csv::Reader::from_path(path)?;
    let mut samples = Vec::new();
    for record in r.records() {
        let record = record?;
        if record.len() < 2 {
            return Err(Error::Format(
                "quadrature CSV needs columns phase_rad, quadrature".into(),
            ));
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|_| Error::Format(format!("bad numeric field `{s}`")))
        };
        samples.push((parse(&record[0])?, parse(&record[1])?));
    }
    QuadratureDataset::new(samples)
}

#[derive(Serialize, Deserialize)]
struct DensityMatrixJson {
    dim: usize,
    /// Row-major real parts.
    re: Vec<f64>,
    /// Row-major imaginary parts.
    im: Vec<f64>,
}

pub fn write_density_matrix_json(path: &Path, rho: &FockDensityMatrix) -> Result<()> {
    let body = DensityMatrixJson {
        dim: rho.dim(),
        re: rho.entries().iter().map(|e| e.re).collect(),
        im: rho.entries().iter().map(|e| e.im).collect(),
    };
    std::fs::write(path, serde_json::to_string_pretty(&body)?)?;
    Ok(())
}

pub fn read_density_matrix_json(path: &Path) -> Result<FockDensityMatrix> {
    let body: DensityMatrixJson = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if body.re.len() != body.dim * body.dim || body.im.len() != body.dim * body.dim {
        return Err(Error::Format(
            "density matrix JSON arrays disagree with dim".into(),
        ));
    }
    FockDensityMatrix::new(
        body.dim,
        body.re
            .iter()
            .zip(body.im.iter())
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect(),
    )
}

pub fn write_wigner_csv(path: &Path, grid: &WignerGrid) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "p", "w"])?;
    for (ix, &x) in grid.xs.iter().enumerate() {
        for (ip, &p) in grid.ps.iter().enumerate() {
            w.write_record([x.to_string(), p.to_string(), grid.value(ix, ip).to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_variance_table_csv(path: &Path, rows: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["theta_rad", "variance_shot_units", "variance_dB"])?;
    for &(theta, v) in rows {
        w.write_record([theta.to_string(), v.to_string(), to_db(v).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_detuning_scan_csv(path: &Path, scan: &DetuningScan) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["two_photon_detuning_MHz", "best_squeezing_dB"])?;
    for row in &scan.rows {
        w.write_record([
            (row.detuning / TWO_PI).to_string(),
            row.best_squeezing_db.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct DatasetIndexEntry {
    power_mw: f64,
    spectrum_csv: String,
    pulse_csv: String,
    delay_ns: f64,
    delay_sigma_ns: f64,
}

#[derive(Serialize, Deserialize)]
struct DatasetIndex {
    powers: Vec<DatasetIndexEntry>,
}

/// Write a classical dataset as an index JSON plus per-power CSV files in the
/// same directory. Returns the index path.
pub fn write_classical_dataset(dir: &Path, dataset: &ClassicalDataset) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    for rec in &dataset.records {
        let tag = format!("{:.3}mw", rec.power_mw).replace('.', "p");
        let spectrum_csv = format!("spectrum_{tag}.csv");
        let pulse_csv = format!("pulse_{tag}.csv");
        {
            let mut w = csv::Writer::from_path(dir.join(&spectrum_csv))?;
            w.write_record(["detuning_MHz", "transmission"])?;
            for &(d2, y) in &rec.spectrum {
                w.write_record([(d2 / TWO_PI).to_string(), y.to_string()])?;
            }
            w.flush()?;
        }
        {
            let mut w = csv::Writer::from_path(dir.join(&pulse_csv))?;
            w.write_record(["time_ns", "intensity"])?;
            for &(t, y) in &rec.pulse {
                w.write_record([(t * 1e3).to_string(), y.to_string()])?;
            }
            w.flush()?;
        }
        entries.push(DatasetIndexEntry {
            power_mw: rec.power_mw,
            spectrum_csv,
            pulse_csv,
            delay_ns: rec.delay_ns,
            delay_sigma_ns: rec.delay_sigma_ns,
        });
    }
    let index = dir.join("classical_dataset.json");
    std::fs::write(
        &index,
        serde_json::to_string_pretty(&DatasetIndex { powers: entries })?,
    )?;
    Ok(index)
}

pub fn read_classical_dataset(index_path: &Path) -> Result<ClassicalDataset> {
    let index: DatasetIndex = serde_json::from_str(&std::fs::read_to_string(index_path)?)?;
    let dir = index_path
        .parent()
        .ok_or_else(|| Error::Format("dataset index has no parent directory".into()))?;
    let parse = |s: &str| -> Result<f64> {
        s.trim()
            .parse()
            .map_err(|_| Error::Format(format!("bad numeric field `{s}`")))
    };
    let mut records = Vec::new();
    for e in index.powers {
        let mut spectrum = Vec::new();
        let mut r = csv::Reader::from_path(dir.join(&e.spectrum_csv))?;
        for record in r.records() {
            let record = record?;
            spectrum.push((TWO_PI * parse(&record[0])?, parse(&record[1])?));
        }
        let mut pulse = Vec::new();
        let mut r = csv::Reader::from_path(dir.join(&e.pulse_csv))?;
        for record in r.records() {
            let record = record?;
            pulse.push((parse(&record[0])? * 1e-3, parse(&record[1])?));
        }
        records.push(PowerRecord {
            power_mw: e.power_mw,
            spectrum,
            pulse,
            delay_ns: e.delay_ns,
            delay_sigma_ns: e.delay_sigma_ns,
        });
    }
    let ds = ClassicalDataset { records };
    ds.validate()?;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{
        synthesize_classical_dataset, EitFitParams, MediumGeometry, SyntheticScan,
    };
    use crate::opa::{noise_pair, OpaParams};
    use crate::tomography::{build_squeezed_thermal, synthesize_quadratures, PhaseSchedule};

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn spectrum_json_round_trip() {
        let g = FrequencyGrid::spanning_mhz(256, 50.0).unwrap();
        let s = ComplexSpectrum::from_fn(g, |w| Complex64::new((w / 10.0).cos(), (w / 7.0).sin()));
        let dir = tmp();
        let path = dir.path().join("spec.json");
        write_spectrum_json(&path, &s).unwrap();
        let back = read_spectrum_json(&path).unwrap();
        assert_eq!(back.grid, s.grid);
        for (a, b) in s.values.iter().zip(back.values.iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn noise_pair_csv_round_trips_through_db() {
        let g = FrequencyGrid::spanning_mhz(128, 20.0).unwrap();
        let pair = noise_pair(
            &OpaParams {
                cavity_hwhm: 44.0,
                pump_ratio: 0.3,
                efficiency: 0.85,
            },
            &g,
        )
        .unwrap();
        let dir = tmp();
        let path = dir.path().join("noise.csv");
        write_noise_pair_csv(&path, &pair).unwrap();
        let samples = read_noise_pair_samples(&path).unwrap();
        assert_eq!(samples.len(), g.n_points());
        for (k, s) in samples.iter().enumerate() {
            assert!((s.omega - g.value(k)).abs() < 1e-9);
            assert!((s.v_plus - pair.v_plus.values[k]).abs() < 1e-12);
            assert!((s.v_minus - pair.v_minus.values[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratures_csv_round_trip() {
        let data = synthesize_quadratures(1.2, 0.3, 0.4, 500, &PhaseSchedule::LinearSweep, 5)
            .unwrap();
        let dir = tmp();
        let path = dir.path().join("quad.csv");
        write_quadratures_csv(&path, &data).unwrap();
        let back = read_quadratures_csv(&path).unwrap();
        assert_eq!(back.samples, data.samples);
    }

    #[test]
    fn density_matrix_json_round_trip() {
        let rho = build_squeezed_thermal(0.2, 0.3, 0.7, 12).unwrap();
        let dir = tmp();
        let path = dir.path().join("rho.json");
        write_density_matrix_json(&path, &rho).unwrap();
        let back = read_density_matrix_json(&path).unwrap();
        assert_eq!(back.dim(), rho.dim());
        for (a, b) in rho.entries().iter().zip(back.entries().iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn classical_dataset_round_trip() {
        const TWO_PI: f64 = std::f64::consts::TAU;
        let truth = EitFitParams {
            gamma_bc: TWO_PI * 0.02,
            doppler_width: TWO_PI * 1.0,
            chi_scale: 5.1e-5,
            one_photon_detuning: TWO_PI * 0.25,
            rabi_per_sqrt_mw: 1.26,
        };
        let ds = synthesize_classical_dataset(
            &truth,
            &MediumGeometry {
                length_cm: 7.5,
                carrier_wavelength_nm: 795.0,
            },
            &[3.0, 5.0],
            &SyntheticScan {
                from: -TWO_PI * 0.7,
                to: TWO_PI * 0.7,
                points: 21,
            },
            2.5,
            0.01,
            2.0,
            3,
        )
        .unwrap();
        let dir = tmp();
        let index = write_classical_dataset(dir.path(), &ds).unwrap();
        let back = read_classical_dataset(&index).unwrap();
        assert_eq!(back.records.len(), 2);
        for (a, b) in ds.records.iter().zip(back.records.iter()) {
            assert_eq!(a.power_mw, b.power_mw);
            assert_eq!(a.spectrum.len(), b.spectrum.len());
            assert_eq!(a.pulse.len(), b.pulse.len());
            assert!((a.delay_ns - b.delay_ns).abs() < 1e-9);
            for (x, y) in a.spectrum.iter().zip(b.spectrum.iter()) {
                assert!((x.0 - y.0).abs() < 1e-9 && (x.1 - y.1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn malformed_csv_is_a_format_error() {
        let dir = tmp();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "phase_rad,quadrature\n0.1,abc\n").unwrap();
        assert!(matches!(
            read_quadratures_csv(&path),
            Err(Error::Format(_))
        ));
    }
}
