// Solves a small RLC network at one frequency and measures a driving-point
// impedance.
//
// ```text
// cargo run --example ac_network
// ```

use stator_emc::circuit::{branch_current, driving_point_impedance, solve_ac, Network, GROUND};
use stator_emc::Complex64;

pub struct AcNetworkResult {
    pub freq: f64,
    pub v_out: Complex64,
    pub i_source: Complex64,
    pub z_in: Complex64,
}

/// 1 V source -> 50 ohm -> node 2; node 2 has 1 uH to ground and 1 nF to ground.
pub fn run_example() -> Result<AcNetworkResult, Box<dyn std::error::Error>> {
    let freq = 1e6;
    let mut net = Network::new(3);
    net.voltage_source("vin", 1, GROUND, Complex64::new(1.0, 0.0));
    net.resistor("rs", 1, 2, 50.0);
    net.inductor("l", 2, GROUND, 1e-6);
    net.capacitor("c", 2, GROUND, 1e-9);

    let solution = solve_ac(&net, freq)?;
    let v_out = solution.voltage(2);
    let i_source = branch_current(&solution, &net, "rs", freq)?;

    let mut passive = net.clone();
    passive.element_mut("vin").expect("source exists").kind =
        stator_emc::circuit::ElementKind::Short;
    let z_in = driving_point_impedance(&passive, (2, GROUND), freq)?;

    Ok(AcNetworkResult {
        freq,
        v_out,
        i_source,
        z_in,
    })
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r = run_example()?;
    println!("f = {:.3e} Hz", r.freq);
    println!("V(out) = {:.6} V", r.v_out);
    println!("I(rs)  = {:.6} A", r.i_source);
    println!("Z(out) = {:.6} ohm", r.z_in);
    Ok(())
}
