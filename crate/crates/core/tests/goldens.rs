//! Regression against the committed reference values of the default
//! scenario. Regenerate with `stator-emc goldens --out crates/core/tests/data`
//! after an intended model change.

use std::collections::BTreeMap;

use stator_emc::cli::{compute_goldens, Context};
use stator_emc::config::RunConfig;

const CSV: &str = include_str!("data/goldens.csv");
const JSON: &str = include_str!("data/goldens.json");

fn committed() -> BTreeMap<String, f64> {
    CSV.lines()
        .skip(1)
        .map(|line| {
            let (name, value) = line.split_once(',').unwrap();
            (name.to_string(), value.parse().unwrap())
        })
        .collect()
}

/// Values at rounding-noise level (the balanced null, the equipotential
/// short) are compared against an absolute floor instead.
fn tolerance(name: &str, expected: f64) -> f64 {
    let floor = if name.ends_with("_a") {
        1e-13
    } else if name.ends_with("_db") || name.ends_with("_deg") {
        1e-6
    } else {
        0.0
    };
    1e-6 * expected.abs() + floor
}

#[test]
fn reference_values_are_for_the_default_config() {
    let json: serde_json::Value = serde_json::from_str(JSON).unwrap();
    assert_eq!(json["config_hash"].as_str().unwrap(), RunConfig::default().hash());
}

#[test]
fn default_scenario_matches_reference_values() {
    let ctx = Context::new(RunConfig::default());
    let computed = compute_goldens(&ctx).unwrap();
    let expected = committed();
    assert_eq!(computed.len(), expected.len());
    for (name, value) in &computed {
        let want = expected[name];
        assert!(
            (value - want).abs() <= tolerance(name, want),
            "{name}: {value:e} vs {want:e}"
        );
    }
}
