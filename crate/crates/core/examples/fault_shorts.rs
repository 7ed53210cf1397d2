// Parses fault strings and attaches them to a model.
//
// ```text
// cargo run --example fault_shorts
// ```

use stator_emc::fault::{apply_fault, parse_fault};
use stator_emc::motor::{build_motor, SectionParams, WindingSpec};

pub struct FaultShortsResult {
    /// `(input, canonical form, class, added element label)`
    pub applied: Vec<(String, String, String, String)>,
    /// `(input, error message)`
    pub rejected: Vec<(String, String)>,
}

pub fn run_example() -> Result<FaultShortsResult, Box<dyn std::error::Error>> {
    let healthy = build_motor(&WindingSpec::default(), &SectionParams::default())?;
    let mut applied = Vec::new();
    for text in ["tt:A:24-34", "pp:A:120-B:120", "pg:A:24@0.5", "tt:a:24-27@1"] {
        let spec = parse_fault(text)?;
        let faulted = apply_fault(&healthy, &spec)?;
        let added = faulted
            .network
            .elements()
            .last()
            .expect("fault adds an element")
            .label
            .clone();
        applied.push((
            text.to_string(),
            spec.to_string(),
            spec.kind.class().to_string(),
            added,
        ));
    }
    let mut rejected = Vec::new();
    for text in ["tt:A:24-24", "xx:A:1-2", "tt:A:25-34", "pg:D:24"] {
        let err = parse_fault(text).and_then(|spec| apply_fault(&healthy, &spec).map(|_| ()));
        if let Err(e) = err {
            rejected.push((text.to_string(), e.to_string()));
        }
    }
    Ok(FaultShortsResult { applied, rejected })
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r = run_example()?;
    for (text, canon, class, label) in &r.applied {
        println!("{text:<16} -> {canon:<16} {class:<16} element {label}");
    }
    for (text, err) in &r.rejected {
        println!("{text:<16} rejected: {err}");
    }
    Ok(())
}
