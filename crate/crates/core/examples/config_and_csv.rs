// Loads a TOML run configuration and round-trips an impedance table through
// CSV.
//
// ```text
// cargo run --example config_and_csv
// ```

use stator_emc::cm::{cm_impedance_sweep, FrequencyGrid};
use stator_emc::config::RunConfig;
use stator_emc::io::{impedance_csv, parse_phasor_csv, IMPEDANCE_HEADER};
use stator_emc::motor::build_motor;

const CONFIG: &str = r#"
[winding]
turns_per_phase = 288
taps = { A = [24, 34], B = [120] }
sections_per_phase = 24

[sweep]
f_start = 1e4
f_stop = 1e7
points = 13

[cm_path]
z_cable = { kind = "series", r = 1.0, l = 2e-6 }
"#;

pub struct ConfigAndCsvResult {
    pub config_hash: String,
    pub synthetic_path: bool,
    pub csv: String,
    pub max_relative_error: f64,
}

pub fn run_example() -> Result<ConfigAndCsvResult, Box<dyn std::error::Error>> {
    let config = RunConfig::from_toml_str(CONFIG)?;
    let model = build_motor(&config.winding, &config.parasitics)?;
    let grid: &FrequencyGrid = &config.sweep;
    let sweep = cm_impedance_sweep(&model, grid)?;

    let csv = impedance_csv(&sweep);
    let back = parse_phasor_csv(&csv, IMPEDANCE_HEADER)?;
    let max_relative_error = sweep
        .z
        .iter()
        .zip(&back.z)
        .map(|(a, b)| (a - b).norm() / a.norm())
        .fold(0.0, f64::max);
    Ok(ConfigAndCsvResult {
        config_hash: config.hash(),
        synthetic_path: config.cm_path.is_synthetic(),
        csv,
        max_relative_error,
    })
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r = run_example()?;
    println!("config hash {}", r.config_hash);
    println!("synthetic CM path: {}", r.synthetic_path);
    print!("{}", r.csv);
    println!("CSV round-trip max relative error: {:.2e}", r.max_relative_error);
    Ok(())
}
