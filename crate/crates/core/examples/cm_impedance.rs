// CM impedance of the healthy motor and of a turn-to-turn short.
//
// ```text
// cargo run --release --example cm_impedance
// ```

use stator_emc::cm::{cm_impedance_sweep, deviation_db, first_series_resonance, FrequencyGrid};
use stator_emc::fault::{apply_fault, parse_fault};
use stator_emc::motor::{build_motor, SectionParams, WindingSpec};

pub struct CmImpedanceResult {
    pub z_start_ohm: f64,
    pub first_resonance_hz: Option<f64>,
    pub max_deviation_db: f64,
    pub at_freq_hz: f64,
}

pub fn run_example() -> Result<CmImpedanceResult, Box<dyn std::error::Error>> {
    let grid = FrequencyGrid::log(1e3, 30e6, 61);
    let healthy = build_motor(&WindingSpec::default(), &SectionParams::default())?;
    let faulted = apply_fault(&healthy, &parse_fault("tt:A:24-34")?)?;

    let z_healthy = cm_impedance_sweep(&healthy, &grid)?;
    let z_faulted = cm_impedance_sweep(&faulted, &grid)?;
    let dev = deviation_db(&z_healthy, &z_faulted)?;
    Ok(CmImpedanceResult {
        z_start_ohm: z_healthy.z[0].norm(),
        first_resonance_hz: first_series_resonance(&z_healthy),
        max_deviation_db: dev.max_abs_db,
        at_freq_hz: dev.at_freq,
    })
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r = run_example()?;
    println!("|Z_cm| at 1 kHz: {:.4e} ohm", r.z_start_ohm);
    if let Some(f) = r.first_resonance_hz {
        println!("first series resonance: {f:.4e} Hz");
    }
    println!(
        "A24-A34 short: max deviation {:.2} dB at {:.4e} Hz",
        r.max_deviation_db, r.at_freq_hz
    );
    Ok(())
}
