// Builds the default star-connected stator ladder and inspects it.
//
// ```text
// cargo run --example motor_ladder
// ```

use stator_emc::motor::{build_motor, Phase, SectionParams, WindingSpec};

pub struct MotorLadderResult {
    pub sections: usize,
    pub nodes: usize,
    pub elements: usize,
    pub boundaries: Vec<u32>,
    pub symmetric: bool,
    pub frame_capacitance: f64,
    pub tap_a24: usize,
}

pub fn run_example() -> Result<MotorLadderResult, Box<dyn std::error::Error>> {
    let spec = WindingSpec::default();
    let model = build_motor(&spec, &SectionParams::default())?;
    let report = model.validate_symmetry();
    Ok(MotorLadderResult {
        sections: model.sections(),
        nodes: model.network.node_count(),
        elements: model.network.elements().len(),
        boundaries: model.boundaries.clone(),
        symmetric: report.symmetric,
        frame_capacitance: model.total_frame_capacitance(),
        tap_a24: model.tap_node(Phase::A, 24)?,
    })
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r = run_example()?;
    println!("{} sections per phase, {} nodes, {} elements", r.sections, r.nodes, r.elements);
    println!("section boundaries (turns): {:?}", r.boundaries);
    println!("phase isomorphism holds: {}", r.symmetric);
    println!("total turn-to-frame capacitance: {:.4e} F", r.frame_capacitance);
    println!("tap A24 sits on node {}", r.tap_a24);
    Ok(())
}
