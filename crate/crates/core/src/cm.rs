//! Common-mode impedance, common-mode current and the faulted/healthy
//! current ratio.
//!
//! The motor's CM impedance is what an impedance analyzer sees between the
//! three tied phase terminals and ground, the return running through the
//! frame branch. With the inverter modelled as a CM source `V` behind `Z_vfd`
//! and the cable as `Z_cable`,
//!
//! ```text
//! I_cm = V / (Z_vfd + Z_cable + Z_motor)
//! R    = 20 log10 |I'_cm / I_cm| = 20 log10 |(Z_vfd + Z_cable + Z_motor) / (Z_vfd + Z_cable + Z'_motor)|
//! ```
//!
//! where primed quantities belong to the faulted motor.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{driving_point_impedance, CircuitError, GROUND};
use crate::motor::{MotorModel, Phase};

/// Totals below this magnitude make the CM current diverge.
pub const MIN_TOTAL_IMPEDANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),
    #[error("at {freq:e} Hz: {source}")]
    Solve { freq: f64, source: CircuitError },
    #[error("CM current diverges at {freq:e} Hz (total impedance below {MIN_TOTAL_IMPEDANCE:e} ohm)")]
    DivergentCurrent { freq: f64 },
    #[error("frequency grids differ ({0})")]
    GridMismatch(String),
    #[error("{freq:e} Hz lies outside tabulated data [{lo:e}, {hi:e}] Hz")]
    Extrapolation { freq: f64, lo: f64, hi: f64 },
    #[error("invalid table: {0}")]
    InvalidTable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrequencyGrid {
    pub f_start: f64,
    pub f_stop: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl Default for FrequencyGrid {
    /// 1 kHz to 30 MHz, 301 log-spaced points.
    fn default() -> Self {
        Self {
            f_start: 1e3,
            f_stop: 30e6,
            points: 301,
            spacing: Spacing::Log,
        }
    }
}

impl FrequencyGrid {
    pub fn log(f_start: f64, f_stop: f64, points: usize) -> Self {
        Self {
            f_start,
            f_stop,
            points,
            spacing: Spacing::Log,
        }
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        if !(self.f_start > 0.0 && self.f_start < self.f_stop && self.f_stop.is_finite()) {
            return Err(AnalysisError::InvalidGrid(format!(
                "need 0 < f_start < f_stop, got {} and {}",
                self.f_start, self.f_stop
            )));
        }
        if self.points < 2 {
            return Err(AnalysisError::InvalidGrid(format!(
                "need at least 2 points, got {}",
                self.points
            )));
        }
        Ok(())
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i + 1 == self.points {
                    return self.f_stop;
                }
                let t = i as f64 / last;
                match self.spacing {
                    Spacing::Log => self.f_start * (self.f_stop / self.f_start).powf(t),
                    Spacing::Linear => self.f_start + (self.f_stop - self.f_start) * t,
                }
            })
            .collect()
    }
}

/// Complex impedance against frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceSweep {
    pub freqs: Vec<f64>,
    pub z: Vec<Complex64>,
}

impl ImpedanceSweep {
    pub fn new(freqs: Vec<f64>, z: Vec<Complex64>) -> Result<Self, AnalysisError> {
        if freqs.len() != z.len() {
            return Err(AnalysisError::InvalidTable(format!(
                "{} frequencies but {} values",
                freqs.len(),
                z.len()
            )));
        }
        if freqs.is_empty() {
            return Err(AnalysisError::InvalidTable("empty table".into()));
        }
        if let Some(i) = freqs.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(AnalysisError::InvalidTable(format!(
                "frequencies not strictly increasing at entry {}",
                i + 1
            )));
        }
        if freqs[0] <= 0.0 || z.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(AnalysisError::InvalidTable(
                "frequencies must be positive and values finite".into(),
            ));
        }
        Ok(Self { freqs, z })
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn magnitude_db(&self) -> Vec<f64> {
        self.z.iter().map(|z| 20.0 * z.norm().log10()).collect()
    }

    /// Value at `freq`, piecewise linear in log-frequency on the real and
    /// imaginary parts. Extrapolation is an error.
    pub fn interpolate(&self, freq: f64) -> Result<Complex64, AnalysisError> {
        interpolate(&self.freqs, &self.z, freq)
    }
}

fn interpolate(freqs: &[f64], values: &[Complex64], freq: f64) -> Result<Complex64, AnalysisError> {
    let (lo, hi) = (freqs[0], freqs[freqs.len() - 1]);
    if !(freq >= lo && freq <= hi) {
        return Err(AnalysisError::Extrapolation { freq, lo, hi });
    }
    let i = freqs.partition_point(|&f| f < freq);
    if freqs[i] == freq {
        return Ok(values[i]);
    }
    let (f0, f1) = (freqs[i - 1], freqs[i]);
    let t = (freq.ln() - f0.ln()) / (f1.ln() - f0.ln());
    Ok(values[i - 1] + (values[i] - values[i - 1]) * t)
}

fn check_aligned(a: &[f64], b: &[f64]) -> Result<(), AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::GridMismatch(format!(
            "{} vs {} points",
            a.len(),
            b.len()
        )));
    }
    if let Some(i) = a.iter().zip(b).position(|(x, y)| x != y) {
        return Err(AnalysisError::GridMismatch(format!(
            "point {i}: {} Hz vs {} Hz",
            a[i], b[i]
        )));
    }
    Ok(())
}

/// Lumped impedance of the inverter or cable CM path.
#[derive(Debug, Clone, PartialEq)]
pub enum PathImpedance {
    /// `R + jwL + 1/(jwC)`; absent parts are omitted.
    Series {
        r: Option<f64>,
        l: Option<f64>,
        c: Option<f64>,
    },
    /// `R || L || C`; absent parts are omitted.
    Parallel {
        r: Option<f64>,
        l: Option<f64>,
        c: Option<f64>,
    },
    Table(ImpedanceSweep),
}

impl PathImpedance {
    pub fn at(&self, freq: f64) -> Result<Complex64, AnalysisError> {
        let w = 2.0 * std::f64::consts::PI * freq;
        let zero = Complex64::new(0.0, 0.0);
        match self {
            PathImpedance::Series { r, l, c } => {
                let mut z = zero;
                if let Some(r) = r {
                    z += r;
                }
                if let Some(l) = l {
                    z += Complex64::new(0.0, w * l);
                }
                if let Some(c) = c {
                    z += Complex64::new(0.0, -1.0 / (w * c));
                }
                Ok(z)
            }
            PathImpedance::Parallel { r, l, c } => {
                let mut y = zero;
                if let Some(r) = r {
                    y += 1.0 / r;
                }
                if let Some(l) = l {
                    y += Complex64::new(0.0, -1.0 / (w * l));
                }
                if let Some(c) = c {
                    y += Complex64::new(0.0, w * c);
                }
                Ok(1.0 / y)
            }
            PathImpedance::Table(t) => t.interpolate(freq),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceVoltage {
    Flat(Complex64),
    Table(ImpedanceSweep),
}

impl SourceVoltage {
    pub fn at(&self, freq: f64) -> Result<Complex64, AnalysisError> {
        match self {
            SourceVoltage::Flat(v) => Ok(*v),
            SourceVoltage::Table(t) => t.interpolate(freq),
        }
    }
}

/// Inverter CM source and the impedances between it and the motor.
#[derive(Debug, Clone, PartialEq)]
pub struct CmPathModel {
    pub v_source: SourceVoltage,
    pub z_vfd: PathImpedance,
    pub z_cable: PathImpedance,
}

impl Default for CmPathModel {
    /// Synthetic stand-in: 1 V source, 50 ohm || 2 nF inverter, 0.5 ohm +
    /// 1 uH cable.
    fn default() -> Self {
        Self {
            v_source: SourceVoltage::Flat(Complex64::new(1.0, 0.0)),
            z_vfd: PathImpedance::Parallel {
                r: Some(50.0),
                l: None,
                c: Some(2e-9),
            },
            z_cable: PathImpedance::Series {
                r: Some(0.5),
                l: Some(1e-6),
                c: None,
            },
        }
    }
}

impl CmPathModel {
    /// `Z_vfd + Z_cable + z_motor`, guarded against divergence.
    fn total(&self, freq: f64, z_motor: Complex64) -> Result<Complex64, AnalysisError> {
        let total = self.z_vfd.at(freq)? + self.z_cable.at(freq)? + z_motor;
        if total.norm() < MIN_TOTAL_IMPEDANCE {
            return Err(AnalysisError::DivergentCurrent { freq });
        }
        Ok(total)
    }
}

/// Emulates the offline CM impedance measurement: terminals A, B and C tied
/// by ideal shorts, impedance taken from the tied node to ground.
pub fn cm_impedance_sweep(
    model: &MotorModel,
    grid: &FrequencyGrid,
) -> Result<ImpedanceSweep, AnalysisError> {
    grid.validate()?;
    cm_impedance_at(model, &grid.frequencies())
}

/// CM impedance at arbitrary frequencies.
pub fn cm_impedance_at(model: &MotorModel, freqs: &[f64]) -> Result<ImpedanceSweep, AnalysisError> {
    let mut tied = model.network.clone();
    let a = model.terminal(Phase::A);
    tied.short("cm.tie.ab", a, model.terminal(Phase::B));
    tied.short("cm.tie.ac", a, model.terminal(Phase::C));

    let z = freqs
        .par_iter()
        .map(|&freq| {
            driving_point_impedance(&tied, (a, GROUND), freq)
                .map_err(|source| AnalysisError::Solve { freq, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    ImpedanceSweep::new(freqs.to_vec(), z)
}

/// CM current at every point of `z_motor`'s grid.
pub fn cm_current(path: &CmPathModel, z_motor: &ImpedanceSweep) -> Result<Vec<Complex64>, AnalysisError> {
    z_motor
        .freqs
        .iter()
        .zip(&z_motor.z)
        .map(|(&f, &z)| Ok(path.v_source.at(f)? / path.total(f, z)?))
        .collect()
}

/// Ratio of faulted to healthy CM current in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioCurve {
    pub freqs: Vec<f64>,
    pub r_db: Vec<f64>,
}

impl RatioCurve {
    /// Largest R and the frequency where it occurs (first on ties).
    pub fn max(&self) -> (f64, f64) {
        argmax(&self.freqs, &self.r_db)
    }
}

fn argmax(freqs: &[f64], values: &[f64]) -> (f64, f64) {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    (freqs[best], values[best])
}

pub fn ratio_r(
    path: &CmPathModel,
    z_healthy: &ImpedanceSweep,
    z_faulty: &ImpedanceSweep,
) -> Result<RatioCurve, AnalysisError> {
    check_aligned(&z_healthy.freqs, &z_faulty.freqs)?;
    let r_db = z_healthy
        .freqs
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            let healthy = path.total(f, z_healthy.z[i])?;
            let faulty = path.total(f, z_faulty.z[i])?;
            Ok(20.0 * (healthy.norm() / faulty.norm()).log10())
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    Ok(RatioCurve {
        freqs: z_healthy.freqs.clone(),
        r_db,
    })
}

/// Pointwise `20 log10(|b| / |a|)` with its worst point.
#[derive(Debug, Clone, PartialEq)]
pub struct Deviation {
    pub freqs: Vec<f64>,
    pub db: Vec<f64>,
    /// Largest `|db|`.
    pub max_abs_db: f64,
    pub at_freq: f64,
}

pub fn deviation_db(a: &ImpedanceSweep, b: &ImpedanceSweep) -> Result<Deviation, AnalysisError> {
    check_aligned(&a.freqs, &b.freqs)?;
    let db: Vec<f64> = a
        .z
        .iter()
        .zip(&b.z)
        .map(|(za, zb)| 20.0 * (zb.norm() / za.norm()).log10())
        .collect();
    let abs: Vec<f64> = db.iter().map(|d| d.abs()).collect();
    let (at_freq, max_abs_db) = argmax(&a.freqs, &abs);
    Ok(Deviation {
        freqs: a.freqs.clone(),
        db,
        max_abs_db,
        at_freq,
    })
}

/// First frequency where the reactance turns from capacitive to inductive,
/// interpolated linearly in log-frequency between grid points.
pub fn first_series_resonance(sweep: &ImpedanceSweep) -> Option<f64> {
    sweep.freqs.windows(2).zip(sweep.z.windows(2)).find_map(|(f, z)| {
        (z[0].im < 0.0 && z[1].im >= 0.0).then(|| {
            let t = -z[0].im / (z[1].im - z[0].im);
            (f[0].ln() + t * (f[1].ln() - f[0].ln())).exp()
        })
    })
}
