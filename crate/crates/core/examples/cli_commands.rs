// Runs the `sweep`, `ratio` and `dmconv` commands in memory on a reduced
// grid and writes their outputs to a temporary directory.
//
// ```text
// cargo run --release --example cli_commands
// ```

use stator_emc::cli::{cmd_dmconv, cmd_ratio, cmd_sweep, Context};
use stator_emc::config::RunConfig;

pub struct CliCommandsResult {
    pub out_dir: std::path::PathBuf,
    pub written: Vec<String>,
    pub sweep_max_deviation_db: f64,
    pub ratio_max_db: f64,
    pub dm_max_increment_db: f64,
}

pub fn run_example() -> Result<CliCommandsResult, Box<dyn std::error::Error>> {
    let mut config = RunConfig::default();
    config.sweep.points = 31;
    config.excitation.n_harmonics = 41;
    let ctx = Context::new(config);

    let out_dir = std::env::temp_dir().join(format!("stator-emc-example-{}", std::process::id()));
    let mut written = Vec::new();

    let sweep = cmd_sweep(&ctx, Some("tt:A:24-34"))?;
    let ratio = cmd_ratio(&ctx, "pg:A:24")?;
    let dm = cmd_dmconv(&ctx, Some("pg:A:24"))?;
    for (name, outputs) in [("sweep", &sweep), ("ratio", &ratio), ("dmconv", &dm)] {
        for path in outputs.write_to(&out_dir.join(name))? {
            written.push(path.display().to_string());
        }
    }

    let summary = |o: &stator_emc::cli::Outputs| o.report.summary.clone();
    Ok(CliCommandsResult {
        out_dir,
        written,
        sweep_max_deviation_db: summary(&sweep).deviation.map_or(f64::NAN, |d| d.max_abs_db),
        ratio_max_db: summary(&ratio).ratio.map_or(f64::NAN, |r| r.max_r_db),
        dm_max_increment_db: summary(&dm)
            .dm
            .and_then(|d| d.max_increment_db)
            .unwrap_or(f64::NAN),
    })
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r = run_example()?;
    for path in &r.written {
        println!("wrote {path}");
    }
    println!("sweep tt:A:24-34 max deviation {:.2} dB", r.sweep_max_deviation_db);
    println!("ratio pg:A:24 max R {:.2} dB", r.ratio_max_db);
    println!("dmconv pg:A:24 max increment {:.2} dB", r.dm_max_increment_db);
    Ok(())
}
