//! CSV emission and ingestion.
//!
//! All floating-point columns are written in lowercase scientific notation
//! with 12 significant digits so outputs are byte-stable and diff-able.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use thiserror::Error;

use crate::cm::{Deviation, ImpedanceSweep, RatioCurve};
use crate::dm::{HarmonicSpectrum, Increment};

pub const IMPEDANCE_HEADER: [&str; 3] = ["freq_hz", "re_ohm", "im_ohm"];
pub const VOLTAGE_HEADER: [&str; 3] = ["freq_hz", "re_v", "im_v"];

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
}

/// 12 significant digits, lowercase exponent. Negative zero prints as zero.
pub fn sci(x: f64) -> String {
    format!("{:.11e}", x + 0.0)
}

fn db_ua(i: Complex64, floor: f64) -> f64 {
    20.0 * (i.norm().max(floor) / 1e-6).log10()
}

pub fn impedance_csv(sweep: &ImpedanceSweep) -> String {
    let mut out = String::from("freq_hz,re_ohm,im_ohm\n");
    for (f, z) in sweep.freqs.iter().zip(&sweep.z) {
        let _ = writeln!(out, "{},{},{}", sci(*f), sci(z.re), sci(z.im));
    }
    out
}

pub fn ratio_csv(curve: &RatioCurve) -> String {
    let mut out = String::from("freq_hz,r_db\n");
    for (f, r) in curve.freqs.iter().zip(&curve.r_db) {
        let _ = writeln!(out, "{},{}", sci(*f), sci(*r));
    }
    out
}

pub fn deviation_csv(dev: &Deviation) -> String {
    let mut out = String::from("freq_hz,deviation_db\n");
    for (f, d) in dev.freqs.iter().zip(&dev.db) {
        let _ = writeln!(out, "{},{}", sci(*f), sci(*d));
    }
    out
}

/// CM current spectrum; magnitudes in dB re 1 uA, clamped at `floor` amperes.
pub fn current_spectrum_csv(spectrum: &HarmonicSpectrum, floor: f64) -> String {
    let mut out = String::from("harmonic_n,freq_hz,re_a,im_a,mag_dbua\n");
    for (i, c) in spectrum.coefficients.iter().enumerate() {
        let n = i + 1;
        let _ = writeln!(
            out,
            "{n},{},{},{},{}",
            sci(spectrum.freq(n)),
            sci(c.re),
            sci(c.im),
            sci(db_ua(*c, floor))
        );
    }
    out
}

/// Excitation spectrum; magnitudes in dB re 1 uV.
pub fn voltage_spectrum_csv(spectrum: &HarmonicSpectrum, floor: f64) -> String {
    let mut out = String::from("harmonic_n,freq_hz,re_v,im_v,mag_dbuv\n");
    for (i, c) in spectrum.coefficients.iter().enumerate() {
        let n = i + 1;
        let _ = writeln!(
            out,
            "{n},{},{},{},{}",
            sci(spectrum.freq(n)),
            sci(c.re),
            sci(c.im),
            sci(db_ua(*c, floor))
        );
    }
    out
}

pub fn increment_csv(spectrum: &HarmonicSpectrum, inc: &Increment) -> String {
    let mut out = String::from("harmonic_n,freq_hz,increment_db\n");
    for (i, d) in inc.db.iter().enumerate() {
        let n = i + 1;
        let _ = writeln!(out, "{n},{},{}", sci(spectrum.freq(n)), sci(*d));
    }
    out
}

/// Parses a three-column phasor table with the given header.
pub fn parse_phasor_csv(text: &str, header: [&str; 3]) -> Result<ImpedanceSweep, CsvError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let found = reader.headers().map_err(|e| CsvError::Malformed {
        line: 1,
        message: e.to_string(),
    })?;
    if found.iter().collect::<Vec<_>>() != header {
        return Err(CsvError::Malformed {
            line: 1,
            message: format!("expected header {}", header.join(",")),
        });
    }

    let mut freqs = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CsvError::Malformed {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| -> Result<f64, CsvError> {
            let raw = record.get(i).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CsvError::Malformed {
                    line,
                    message: format!("column {}: cannot read {raw:?} as a number", header[i]),
                })
        };
        if record.len() != 3 {
            return Err(CsvError::Malformed {
                line,
                message: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let f = field(0)?;
        if f <= 0.0 {
            return Err(CsvError::Malformed {
                line,
                message: format!("frequency must be positive, got {f}"),
            });
        }
        if let Some(&prev) = freqs.last() {
            if f <= prev {
                return Err(CsvError::Malformed {
                    line,
                    message: format!("frequency {f} does not increase past {prev}"),
                });
            }
        }
        freqs.push(f);
        values.push(Complex64::new(field(1)?, field(2)?));
    }
    ImpedanceSweep::new(freqs, values).map_err(|e| CsvError::Malformed {
        line: 2,
        message: e.to_string(),
    })
}

pub fn load_impedance_csv(path: &Path) -> Result<ImpedanceSweep, CsvError> {
    load_phasor_csv(path, IMPEDANCE_HEADER)
}

pub fn load_phasor_csv(path: &Path, header: [&str; 3]) -> Result<ImpedanceSweep, CsvError> {
    let text = fs::read_to_string(path).map_err(|source| CsvError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_phasor_csv(&text, header)
}
