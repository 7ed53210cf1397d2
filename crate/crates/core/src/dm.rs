//! Differential-mode to common-mode conversion.
//!
//! The bench ties terminals A and B together and drives them against
//! terminal C with a floating trapezoidal source. The source's reference tap
//! sits one third of the way from A/B to C, so the three terminal voltages
//! measured from it (`+V/3, +V/3, -2V/3`) carry no common-mode component. That
//! reference couples to the ground plane through a stray capacitance, and the
//! current returning through that path is the CM current. A phase-symmetric
//! winding gives zero return current; asymmetry and faults do not.
//!
//! The network is linear, so the periodic steady state is computed harmonic
//! by harmonic: the CM spectrum is the excitation's Fourier series times the
//! DM-to-CM transfer admittance at each harmonic frequency.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{branch_current, solve_ac, CircuitError, Network, GROUND};
use crate::motor::{MotorError, MotorModel, Phase};

/// Default floor for dB arithmetic on currents, in amperes.
pub const DEFAULT_FLOOR: f64 = 1e-15;

/// CM currents at or below this level count as a balanced (null) result.
pub const BALANCE_THRESHOLD: f64 = 1e-12;

pub const PROBE_LABEL: &str = "bench.probe";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DmError {
    #[error("invalid excitation: {0}")]
    InvalidExcitation(String),
    #[error("invalid bench parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("harmonic {harmonic} ({freq:e} Hz): {source}")]
    Harmonic {
        harmonic: usize,
        freq: f64,
        source: CircuitError,
    },
    #[error("at {freq:e} Hz: {source}")]
    Solve { freq: f64, source: CircuitError },
    #[error("spectra do not match: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Motor(#[from] MotorError),
}

/// Periodic trapezoid swinging between `-amplitude` and `+amplitude`.
///
/// The rising edge starts at `t = 0`; `duty` is the fraction of the period
/// between the midpoints of the rising and falling edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrapezoidExcitation {
    pub amplitude: f64,
    pub f0: f64,
    pub rise_time: f64,
    pub fall_time: f64,
    pub duty: f64,
    pub n_harmonics: usize,
}

impl Default for TrapezoidExcitation {
    /// +/-10 V at 30 kHz, 100 ns edges, 167 harmonics (about 5 MHz).
    fn default() -> Self {
        Self {
            amplitude: 10.0,
            f0: 30e3,
            rise_time: 100e-9,
            fall_time: 100e-9,
            duty: 0.5,
            n_harmonics: 167,
        }
    }
}

impl TrapezoidExcitation {
    pub fn period(&self) -> f64 {
        1.0 / self.f0
    }

    pub fn validate(&self) -> Result<(), DmError> {
        let bad = |msg: String| Err(DmError::InvalidExcitation(msg));
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return bad(format!("amplitude must be positive, got {}", self.amplitude));
        }
        if !(self.f0 > 0.0 && self.f0.is_finite()) {
            return bad(format!("f0 must be positive, got {}", self.f0));
        }
        if !(self.rise_time >= 0.0 && self.fall_time >= 0.0) {
            return bad("edge times must be non-negative".into());
        }
        if !(self.duty > 0.0 && self.duty < 1.0) {
            return bad(format!("duty must lie in (0, 1), got {}", self.duty));
        }
        let period = self.period();
        let edges = 0.5 * (self.rise_time + self.fall_time);
        if !(self.rise_time + self.fall_time < period)
            || self.duty * period < edges
            || (1.0 - self.duty) * period < edges
        {
            return bad(format!(
                "edges of {} s and {} s do not fit the {} s period at duty {}",
                self.rise_time, self.fall_time, period, self.duty
            ));
        }
        if self.n_harmonics == 0 {
            return bad("n_harmonics must be at least 1".into());
        }
        Ok(())
    }
}

/// Complex amplitudes of harmonics `1..=n` of a periodic quantity, such that
/// `x(t) = mean + Re(sum_n c_n exp(j 2 pi n f0 t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicSpectrum {
    pub f0: f64,
    /// `coefficients[n - 1]` belongs to harmonic `n`.
    pub coefficients: Vec<Complex64>,
}

impl HarmonicSpectrum {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn harmonic(&self, n: usize) -> Complex64 {
        self.coefficients[n - 1]
    }

    pub fn freq(&self, n: usize) -> f64 {
        n as f64 * self.f0
    }

    pub fn max_magnitude(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> HarmonicSpectrum {
        HarmonicSpectrum {
            f0: self.f0,
            coefficients: self.coefficients.iter().map(|c| c * factor).collect(),
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Closed-form Fourier coefficients of the trapezoid.
///
/// The waveform's derivative is `+2A/t_r` on the rising edge and `-2A/t_f` on
/// the falling edge, so each edge contributes a phase-shifted sinc.
pub fn trapezoid_harmonics(exc: &TrapezoidExcitation) -> Result<HarmonicSpectrum, DmError> {
    exc.validate()?;
    let period = exc.period();
    let rise_mid = 0.5 * exc.rise_time;
    let fall_mid = rise_mid + exc.duty * period;
    let coefficients = (1..=exc.n_harmonics)
        .map(|n| {
            let n = n as f64;
            let edge = |mid: f64, width: f64| {
                Complex64::from_polar(sinc(PI * n * width / period), -2.0 * PI * n * mid / period)
            };
            let bracket = edge(rise_mid, exc.rise_time) - edge(fall_mid, exc.fall_time);
            // 2 * A / (j pi n) * bracket
            bracket * Complex64::new(0.0, -2.0 * exc.amplitude / (PI * n))
        })
        .collect();
    Ok(HarmonicSpectrum {
        f0: exc.f0,
        coefficients,
    })
}

/// Deliberate manufacturing-style imbalance of the turn-to-frame capacitances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Asymmetry {
    pub enabled: bool,
    /// `None` raises every phase-A turn-to-frame capacitor by `magnitude`;
    /// `Some(seed)` scales every turn-to-frame capacitor of every phase by an
    /// independent factor drawn uniformly from `1 +/- magnitude`.
    pub seed: Option<u64>,
    pub magnitude: f64,
}

impl Default for Asymmetry {
    fn default() -> Self {
        Self {
            enabled: true,
            seed: None,
            magnitude: 0.02,
        }
    }
}

pub fn apply_asymmetry(model: &MotorModel, asym: &Asymmetry) -> Result<MotorModel, DmError> {
    if !asym.enabled {
        return Ok(model.clone());
    }
    if !(asym.magnitude >= 0.0 && asym.magnitude < 1.0) {
        return Err(DmError::InvalidParameter {
            name: "asymmetry magnitude",
            value: asym.magnitude,
        });
    }
    let mut out = model.clone();
    match asym.seed {
        None => {
            for label in model.turn_frame_labels(Phase::A) {
                out = out.scale_element(&label, 1.0 + asym.magnitude)?;
            }
        }
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for phase in Phase::ALL {
                for label in model.turn_frame_labels(phase) {
                    let u: f64 = rng.gen_range(-1.0..=1.0);
                    out = out.scale_element(&label, 1.0 + asym.magnitude * u)?;
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DmBenchParams {
    /// Capacitance from the source reference to the ground plane, F.
    pub source_stray_c: f64,
}

impl Default for DmBenchParams {
    fn default() -> Self {
        Self {
            source_stray_c: 100e-12,
        }
    }
}

/// DM excitation bench around a motor model. The network carries a unit
/// (1 V peak) DM source.
#[derive(Debug, Clone, PartialEq)]
pub struct DmBench {
    pub network: Network,
    pub probe: String,
}

impl DmBench {
    /// A bench from any network carrying a unit DM source, with `probe`
    /// naming the ground-return branch.
    pub fn from_network(network: Network, probe: impl Into<String>) -> Self {
        Self {
            network,
            probe: probe.into(),
        }
    }
}

pub fn build_dm_bench(motor: &MotorModel, params: &DmBenchParams) -> Result<DmBench, DmError> {
    if !(params.source_stray_c > 0.0 && params.source_stray_c.is_finite()) {
        return Err(DmError::InvalidParameter {
            name: "source_stray_c",
            value: params.source_stray_c,
        });
    }
    let mut network = motor.network.clone();
    let reference = network.add_node();
    let probe_node = network.add_node();
    let (a, b, c) = (
        motor.terminal(Phase::A),
        motor.terminal(Phase::B),
        motor.terminal(Phase::C),
    );
    network.short("bench.tie.ab", a, b);
    network.voltage_source("bench.vdm.hi", a, reference, Complex64::new(1.0 / 3.0, 0.0));
    network.voltage_source("bench.vdm.lo", reference, c, Complex64::new(2.0 / 3.0, 0.0));
    network.capacitor("bench.cstray", reference, probe_node, params.source_stray_c);
    network.short(PROBE_LABEL, probe_node, GROUND);
    Ok(DmBench::from_network(network, PROBE_LABEL))
}

/// Ground-return current per volt of DM excitation at `freq`.
pub fn dm_to_cm_transfer(bench: &DmBench, freq: f64) -> Result<Complex64, DmError> {
    let solution = solve_ac(&bench.network, freq).map_err(|source| DmError::Solve { freq, source })?;
    branch_current(&solution, &bench.network, &bench.probe, freq)
        .map_err(|source| DmError::Solve { freq, source })
}

/// CM current spectrum produced by `exc`.
pub fn cm_spectrum(bench: &DmBench, exc: &TrapezoidExcitation) -> Result<HarmonicSpectrum, DmError> {
    let excitation = trapezoid_harmonics(exc)?;
    let coefficients = (1..=exc.n_harmonics)
        .into_par_iter()
        .map(|n| {
            let freq = excitation.freq(n);
            let transfer = dm_to_cm_transfer(bench, freq).map_err(|e| match e {
                DmError::Solve { source, .. } => DmError::Harmonic {
                    harmonic: n,
                    freq,
                    source,
                },
                other => other,
            })?;
            Ok(excitation.harmonic(n) * transfer)
        })
        .collect::<Result<Vec<_>, DmError>>()?;
    Ok(HarmonicSpectrum {
        f0: exc.f0,
        coefficients,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Increment {
    /// Per-harmonic increment, index `n - 1` for harmonic `n`.
    pub db: Vec<f64>,
    pub max_db: f64,
    pub at_harmonic: usize,
}

/// Per-harmonic `20 log10(max(|faulted|, floor) / max(|reference|, floor))`.
pub fn increment_db(
    reference: &HarmonicSpectrum,
    faulted: &HarmonicSpectrum,
    floor: f64,
) -> Result<Increment, DmError> {
    if !(floor > 0.0) {
        return Err(DmError::InvalidParameter {
            name: "floor",
            value: floor,
        });
    }
    if reference.f0 != faulted.f0 || reference.len() != faulted.len() || reference.is_empty() {
        return Err(DmError::Mismatch(format!(
            "{} harmonics of {} Hz vs {} harmonics of {} Hz",
            reference.len(),
            reference.f0,
            faulted.len(),
            faulted.f0
        )));
    }
    let db: Vec<f64> = reference
        .coefficients
        .iter()
        .zip(&faulted.coefficients)
        .map(|(r, f)| 20.0 * (f.norm().max(floor) / r.norm().max(floor)).log10())
        .collect();
    let mut at = 0;
    for (i, v) in db.iter().enumerate() {
        if *v > db[at] {
            at = i;
        }
    }
    Ok(Increment {
        max_db: db[at],
        at_harmonic: at + 1,
        db,
    })
}
