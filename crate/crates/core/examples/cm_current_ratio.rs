// CM current through inverter, cable and motor, and the faulted/healthy
// ratio in dB for a ground fault.
//
// ```text
// cargo run --release --example cm_current_ratio
// ```

use stator_emc::cm::{cm_current, cm_impedance_sweep, ratio_r, CmPathModel, FrequencyGrid};
use stator_emc::fault::{apply_fault, FaultSpec};
use stator_emc::motor::{build_motor, Phase, SectionParams, WindingSpec};

pub struct CmCurrentRatioResult {
    pub i_healthy_start_a: f64,
    pub i_faulted_start_a: f64,
    pub max_r_db: f64,
    pub at_freq_hz: f64,
}

pub fn run_example() -> Result<CmCurrentRatioResult, Box<dyn std::error::Error>> {
    let grid = FrequencyGrid::log(1e3, 30e6, 61);
    let path = CmPathModel::default();
    let healthy = build_motor(&WindingSpec::default(), &SectionParams::default())?;
    let faulted = apply_fault(&healthy, &FaultSpec::phase_to_ground(Phase::A, 24))?;

    let z_h = cm_impedance_sweep(&healthy, &grid)?;
    let z_f = cm_impedance_sweep(&faulted, &grid)?;
    let i_h = cm_current(&path, &z_h)?;
    let i_f = cm_current(&path, &z_f)?;
    let (at, max) = ratio_r(&path, &z_h, &z_f)?.max();
    Ok(CmCurrentRatioResult {
        i_healthy_start_a: i_h[0].norm(),
        i_faulted_start_a: i_f[0].norm(),
        max_r_db: max,
        at_freq_hz: at,
    })
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r = run_example()?;
    println!(
        "I_cm at 1 kHz: healthy {:.4e} A, A24-G {:.4e} A",
        r.i_healthy_start_a, r.i_faulted_start_a
    );
    println!("max R = {:.2} dB at {:.4e} Hz", r.max_r_db, r.at_freq_hz);
    Ok(())
}
