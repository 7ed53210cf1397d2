//! Run configuration: a strict TOML schema where every key is optional and
//! unknown keys are rejected.
//!
//! ```toml
//! [winding]
//! turns_per_phase = 288
//! sections_per_phase = 48
//! taps = { A = [24, 27, 34, 120, 264], B = [120] }
//!
//! [parasitics]
//! r_per_turn = 0.02
//!
//! [fault]
//! contact_r = 1.0
//!
//! [cm_path]
//! v_source = { kind = "flat", re = 1.0, im = 0.0 }
//! z_vfd = { kind = "parallel", r = 50.0, c = 2e-9 }
//! z_cable = { kind = "csv", path = "cable.csv" }
//!
//! [excitation]
//! f0 = 30e3
//!
//! [sweep]
//! f_start = 1e3
//! f_stop = 30e6
//! points = 301
//! spacing = "log"
//!
//! [baseline_asymmetry]
//! enabled = true
//! magnitude = 0.02
//!
//! [dm_bench]
//! source_stray_c = 100e-12
//! floor = 1e-15
//!
//! [output]
//! dir = "out"
//! node_map = false
//! ```
//!
//! CSV paths are resolved relative to the directory of the config file.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cm::{CmPathModel, FrequencyGrid, PathImpedance, SourceVoltage};
use crate::dm::{Asymmetry, DmBenchParams, TrapezoidExcitation, DEFAULT_FLOOR};
use crate::fault::DEFAULT_CONTACT_OHMS;
use crate::io::{load_phasor_csv, CsvError, IMPEDANCE_HEADER, VOLTAGE_HEADER};
use crate::motor::{MotorError, SectionParams, WindingSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid value for `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("cannot load `{field}` table: {source}")]
    Table { field: String, source: CsvError },
}

impl ConfigError {
    fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FaultDefaults {
    /// Contact resistance used when a fault string carries no `@ohms` suffix.
    pub contact_r: f64,
}

impl Default for FaultDefaults {
    fn default() -> Self {
        Self {
            contact_r: DEFAULT_CONTACT_OHMS,
        }
    }
}

/// One lumped CM path impedance, either parametric or tabulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ImpedanceSource {
    Series {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        l: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c: Option<f64>,
    },
    Parallel {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        l: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c: Option<f64>,
    },
    /// `freq_hz,re_ohm,im_ohm`
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum VoltageSource {
    Flat {
        re: f64,
        #[serde(default)]
        im: f64,
    },
    /// `freq_hz,re_v,im_v`
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CmPathConfig {
    pub v_source: VoltageSource,
    pub z_vfd: ImpedanceSource,
    pub z_cable: ImpedanceSource,
}

impl Default for CmPathConfig {
    fn default() -> Self {
        Self {
            v_source: VoltageSource::Flat { re: 1.0, im: 0.0 },
            z_vfd: ImpedanceSource::Parallel {
                r: Some(50.0),
                l: None,
                c: Some(2e-9),
            },
            z_cable: ImpedanceSource::Series {
                r: Some(0.5),
                l: Some(1e-6),
                c: None,
            },
        }
    }
}

impl CmPathConfig {
    /// True when the path equals the built-in stand-in values rather than
    /// user-supplied data.
    pub fn is_synthetic(&self) -> bool {
        *self == CmPathConfig::default()
    }

    /// Builds the path model, reading any CSV tables relative to `base`.
    pub fn resolve(&self, base: &Path) -> Result<CmPathModel, ConfigError> {
        let v_source = match &self.v_source {
            VoltageSource::Flat { re, im } => SourceVoltage::Flat(Complex64::new(*re, *im)),
            VoltageSource::Csv { path } => SourceVoltage::Table(
                load_phasor_csv(&base.join(path), VOLTAGE_HEADER).map_err(|source| {
                    ConfigError::Table {
                        field: "cm_path.v_source".into(),
                        source,
                    }
                })?,
            ),
        };
        Ok(CmPathModel {
            v_source,
            z_vfd: resolve_impedance(&self.z_vfd, base, "cm_path.z_vfd")?,
            z_cable: resolve_impedance(&self.z_cable, base, "cm_path.z_cable")?,
        })
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if let VoltageSource::Flat { re, im } = self.v_source {
            if !(re.is_finite() && im.is_finite()) || (re == 0.0 && im == 0.0) {
                return Err(ConfigError::invalid(
                    "cm_path.v_source",
                    "flat source must be finite and non-zero",
                ));
            }
        }
        for (field, z) in [("cm_path.z_vfd", &self.z_vfd), ("cm_path.z_cable", &self.z_cable)] {
            match z {
                ImpedanceSource::Series { r, l, c } | ImpedanceSource::Parallel { r, l, c } => {
                    if r.is_none() && l.is_none() && c.is_none() {
                        return Err(ConfigError::invalid(field, "needs at least one of r, l, c"));
                    }
                    for (name, v) in [("r", r), ("l", l), ("c", c)] {
                        if let Some(v) = v {
                            if !(*v > 0.0 && v.is_finite()) {
                                return Err(ConfigError::invalid(
                                    format!("{field}.{name}"),
                                    format!("must be positive, got {v}"),
                                ));
                            }
                        }
                    }
                }
                ImpedanceSource::Csv { .. } => {}
            }
        }
        Ok(())
    }
}

fn resolve_impedance(
    src: &ImpedanceSource,
    base: &Path,
    field: &str,
) -> Result<PathImpedance, ConfigError> {
    Ok(match src {
        ImpedanceSource::Series { r, l, c } => PathImpedance::Series {
            r: *r,
            l: *l,
            c: *c,
        },
        ImpedanceSource::Parallel { r, l, c } => PathImpedance::Parallel {
            r: *r,
            l: *l,
            c: *c,
        },
        ImpedanceSource::Csv { path } => PathImpedance::Table(
            load_phasor_csv(&base.join(path), IMPEDANCE_HEADER).map_err(|source| {
                ConfigError::Table {
                    field: field.into(),
                    source,
                }
            })?,
        ),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DmBenchConfig {
    pub source_stray_c: f64,
    /// Magnitude floor for dB arithmetic, A.
    pub floor: f64,
}

impl Default for DmBenchConfig {
    fn default() -> Self {
        Self {
            source_stray_c: DmBenchParams::default().source_stray_c,
            floor: DEFAULT_FLOOR,
        }
    }
}

impl DmBenchConfig {
    pub fn bench_params(&self) -> DmBenchParams {
        DmBenchParams {
            source_stray_c: self.source_stray_c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Also write `node_map.json` for the (possibly faulted) model.
    pub node_map: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            node_map: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub winding: WindingSpec,
    pub parasitics: SectionParams,
    pub fault: FaultDefaults,
    pub cm_path: CmPathConfig,
    pub excitation: TrapezoidExcitation,
    pub sweep: FrequencyGrid,
    pub baseline_asymmetry: Asymmetry,
    pub dm_bench: DmBenchConfig,
    pub output: OutputConfig,
}

fn motor_field(section: &str, err: MotorError) -> ConfigError {
    let field = match &err {
        MotorError::InvalidParameter { name, .. } => format!("{section}.{name}"),
        MotorError::NoTurns => format!("{section}.turns_per_phase"),
        MotorError::TooCoarse { .. } | MotorError::TooFine { .. } => {
            format!("{section}.sections_per_phase")
        }
        _ => format!("{section}.taps"),
    };
    ConfigError::invalid(field, err.to_string())
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            ConfigError::Parse {
                line,
                message: e.message().to_string(),
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Canonical TOML form; every default is spelled out.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// SHA-256 of the canonical TOML form, hex encoded. The `[output]`
    /// section is left out: where results go does not change them.
    pub fn hash(&self) -> String {
        let canonical = RunConfig {
            output: OutputConfig::default(),
            ..self.clone()
        };
        hex::encode(Sha256::digest(canonical.to_toml_string().as_bytes()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.winding
            .validate()
            .map_err(|e| motor_field("winding", e))?;
        self.parasitics
            .validate()
            .map_err(|e| motor_field("parasitics", e))?;
        if !(self.fault.contact_r > 0.0 && self.fault.contact_r.is_finite()) {
            return Err(ConfigError::invalid(
                "fault.contact_r",
                format!("must be positive, got {}", self.fault.contact_r),
            ));
        }
        self.cm_path.validate()?;
        self.excitation
            .validate()
            .map_err(|e| ConfigError::invalid("excitation", e.to_string()))?;
        self.sweep
            .validate()
            .map_err(|e| ConfigError::invalid("sweep", e.to_string()))?;
        let asym = &self.baseline_asymmetry;
        if !(asym.magnitude >= 0.0 && asym.magnitude < 1.0) {
            return Err(ConfigError::invalid(
                "baseline_asymmetry.magnitude",
                format!("must lie in [0, 1), got {}", asym.magnitude),
            ));
        }
        if asym.seed.is_some_and(|s| s > i64::MAX as u64) {
            return Err(ConfigError::invalid(
                "baseline_asymmetry.seed",
                "must not exceed 9223372036854775807",
            ));
        }
        for (field, v) in [
            ("dm_bench.source_stray_c", self.dm_bench.source_stray_c),
            ("dm_bench.floor", self.dm_bench.floor),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::invalid(field, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.display().to_string(),
        source,
    })?;
    RunConfig::from_toml_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motor::Phase;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::from_toml_str("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.winding.turns_per_phase, 288);
        assert_eq!(c.winding.taps[&Phase::A], vec![24, 27, 34, 120, 264]);
        assert_eq!(c.fault.contact_r, 1.0);
        assert_eq!(c.excitation.f0, 30e3);
        assert_eq!(c.excitation.amplitude, 10.0);
        assert!(c.cm_path.is_synthetic());
    }

    #[test]
    fn round_trip_is_exact() {
        let mut c = RunConfig::default();
        c.baseline_asymmetry.seed = Some(7);
        c.cm_path.z_cable = ImpedanceSource::Csv {
            path: "cable.csv".into(),
        };
        let text = c.to_toml_string();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        let d = RunConfig::from_toml_str(&RunConfig::default().to_toml_string()).unwrap();
        assert_eq!(d, RunConfig::default());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.sweep.points = 300;
        assert_eq!(a.hash(), RunConfig::default().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let mut c = a.clone();
        c.output.dir = "elsewhere".into();
        assert_eq!(a.hash(), c.hash());
    }

    #[test]
    fn zero_turns_names_the_field() {
        let err = RunConfig::from_toml_str("[winding]\nturns_per_phase = 0\n").unwrap_err();
        match err {
            ConfigError::Invalid { field, .. } => assert_eq!(field, "winding.turns_per_phase"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected_with_line() {
        let err = RunConfig::from_toml_str("\n[sweep]\npoints = 10\nbogus = 1\n").unwrap_err();
        match err {
            ConfigError::Parse { line, message } => {
                assert_eq!(line, 4);
                assert!(message.contains("bogus"), "{message}");
            }
            e => panic!("{e}"),
        }
        assert!(RunConfig::from_toml_str("[nope]\n").is_err());
        assert!(
            RunConfig::from_toml_str("[cm_path]\nz_vfd = { kind = \"series\", q = 1 }\n").is_err()
        );
    }

    #[test]
    fn out_of_range_values_abort() {
        for text in [
            "[parasitics]\nr_per_turn = -1\n",
            "[fault]\ncontact_r = 0\n",
            "[sweep]\nf_start = 10\nf_stop = 5\n",
            "[excitation]\nduty = 1.5\n",
            "[baseline_asymmetry]\nmagnitude = 2\n",
            "[dm_bench]\nfloor = 0\n",
            "[cm_path]\nz_vfd = { kind = \"series\" }\n",
        ] {
            assert!(
                matches!(RunConfig::from_toml_str(text), Err(ConfigError::Invalid { .. })),
                "{text}"
            );
        }
    }

    #[test]
    fn csv_paths_resolve_relative_to_base() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("vfd.csv"),
            "freq_hz,re_ohm,im_ohm\n1e3,10,0\n1e6,10,-1\n",
        )
        .unwrap();
        let c = RunConfig::from_toml_str(
            "[cm_path]\nz_vfd = { kind = \"csv\", path = \"vfd.csv\" }\n",
        )
        .unwrap();
        assert!(!c.cm_path.is_synthetic());
        let model = c.cm_path.resolve(dir.path()).unwrap();
        assert_eq!(model.z_vfd.at(1e3).unwrap(), Complex64::new(10.0, 0.0));
        let missing = RunConfig::from_toml_str(
            "[cm_path]\nz_cable = { kind = \"csv\", path = \"nope.csv\" }\n",
        )
        .unwrap();
        assert!(matches!(
            missing.cm_path.resolve(dir.path()),
            Err(ConfigError::Table { .. })
        ));
    }
}
