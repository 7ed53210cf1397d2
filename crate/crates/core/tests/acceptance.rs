//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::Instant;

use common::fft::fft_coefficients;
use common::*;
use rand::Rng;
use stator_emc::cli::{compute_goldens, goldens_csv, Context};
use stator_emc::cm::{
    cm_current, cm_impedance_sweep, deviation_db, first_series_resonance, ratio_r, CmPathModel,
    ImpedanceSweep, SourceVoltage,
};
use stator_emc::config::RunConfig;
use stator_emc::dm::{
    apply_asymmetry, build_dm_bench, cm_spectrum, increment_db, trapezoid_harmonics,
    TrapezoidExcitation,
};
use stator_emc::fault::{apply_fault, parse_fault};
use stator_emc::motor::{build_motor, MotorModel};

const BIN: &str = env!("CARGO_BIN_EXE_stator-emc");
const GOLDENS: &str = include_str!("data/goldens.csv");

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct Fixture {
    config: RunConfig,
    healthy: MotorModel,
    healthy_sweep: ImpedanceSweep,
}

impl Fixture {
    fn new() -> Self {
        let config = RunConfig::default();
        let healthy = build_motor(&config.winding, &config.parasitics).unwrap();
        let healthy_sweep = cm_impedance_sweep(&healthy, &config.sweep).unwrap();
        Fixture {
            config,
            healthy,
            healthy_sweep,
        }
    }

    fn faulted(&self, text: &str) -> ImpedanceSweep {
        let fault = parse_fault(text).unwrap();
        let m = apply_fault(&self.healthy, &fault).unwrap();
        cm_impedance_sweep(&m, &self.config.sweep).unwrap()
    }

    fn path(&self) -> CmPathModel {
        self.config.cm_path.resolve(Path::new(".")).unwrap()
    }
}

fn solver_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng(101);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let net = random_driven_network(&mut r, 15);
        let freq = 10f64.powf(r.gen_range(2.0..8.0));
        worst = worst.max(oracle_error(&net, freq));
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-9 && secs < 5.0,
        format!("max relative error {worst:.2e}, {secs:.2} s"),
    )
}

fn circuit_invariants() -> Outcome {
    let mut r = rng(102);
    let (mut kcl, mut recip, mut re_min) = (0.0f64, 0.0f64, f64::INFINITY);
    for _ in 0..100 {
        let driven = random_driven_network(&mut r, 15);
        let nodes = r.gen_range(3..=15);
        let passive = random_passive_network(&mut r, nodes, 2);
        for freq in log_frequencies(1e3, 1e8, 10) {
            kcl = kcl.max(kcl_error(&driven, freq));
            recip = recip.max(reciprocity_error(&passive, freq, &mut r));
            re_min = re_min.min(passivity_margin(&passive, freq, &mut r));
        }
    }
    check(
        kcl <= 1e-9 && recip <= 1e-9 && re_min >= -1e-9,
        format!("KCL {kcl:.2e}, reciprocity {recip:.2e}, min Re Z {re_min:.3e} ohm"),
    )
}

fn balanced_null(fx: &Fixture) -> Outcome {
    let start = Instant::now();
    let bench = build_dm_bench(&fx.healthy, &fx.config.dm_bench.bench_params()).unwrap();
    let spectrum = cm_spectrum(&bench, &fx.config.excitation).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let max = spectrum.max_magnitude();
    check(
        spectrum.len() == 167 && max <= 1e-12 && secs < 10.0,
        format!("{} harmonics, max |I_cm| {max:.2e} A, {secs:.2} s", spectrum.len()),
    )
}

fn equipotential(fx: &Fixture) -> Outcome {
    let dev = deviation_db(&fx.healthy_sweep, &fx.faulted("pp:A:120-B:120")).unwrap();
    check(
        dev.db.len() == 301 && dev.max_abs_db < 0.1,
        format!("{} points, max |deviation| {:.2e} dB", dev.db.len(), dev.max_abs_db),
    )
}

fn severity(fx: &Fixture) -> Outcome {
    let small = deviation_db(&fx.healthy_sweep, &fx.faulted("tt:A:24-27")).unwrap();
    let large = deviation_db(&fx.healthy_sweep, &fx.faulted("tt:A:24-34")).unwrap();
    check(
        large.max_abs_db > small.max_abs_db && small.max_abs_db > 0.0,
        format!(
            "A24-A34 {:.3} dB > A24-A27 {:.3} dB > 0",
            large.max_abs_db, small.max_abs_db
        ),
    )
}

fn ground_fault(fx: &Fixture) -> Outcome {
    let faulted = fx.faulted("pg:A:24");
    let dev = deviation_db(&fx.healthy_sweep, &faulted).unwrap();
    let curve = ratio_r(&fx.path(), &fx.healthy_sweep, &faulted).unwrap();
    let (at, _) = curve.max();
    let resonance = first_series_resonance(&fx.healthy_sweep).unwrap_or(f64::NAN);
    let (low, top) = (dev.db[0], dev.db[dev.db.len() - 1]);
    check(
        fx.healthy_sweep.freqs[0] == 1e3 && low <= -20.0 && top.abs() < 3.0 && at < resonance,
        format!(
            "1 kHz {low:.2} dB, top {top:.3} dB, max R at {at:.3e} Hz < resonance {resonance:.3e} Hz"
        ),
    )
}

fn ratio_consistency(fx: &Fixture) -> Outcome {
    let path = fx.path();
    let faulted = fx.faulted("tt:A:24-34");
    let curve = ratio_r(&path, &fx.healthy_sweep, &faulted).unwrap();
    let i_h = cm_current(&path, &fx.healthy_sweep).unwrap();
    let i_f = cm_current(&path, &faulted).unwrap();
    let direct = (0..curve.r_db.len())
        .map(|k| (curve.r_db[k] - 20.0 * (i_f[k].norm() / i_h[k].norm()).log10()).abs())
        .fold(0.0f64, f64::max);
    let v = match &path.v_source {
        SourceVoltage::Flat(v) => *v,
        other => panic!("default source is flat, got {other:?}"),
    };
    let loud = CmPathModel {
        v_source: SourceVoltage::Flat(v * 10.0),
        ..path.clone()
    };
    let scaled = ratio_r(&loud, &fx.healthy_sweep, &faulted).unwrap();
    let invariance = curve
        .r_db
        .iter()
        .zip(&scaled.r_db)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    check(
        direct <= 1e-9 && invariance <= 1e-9,
        format!("vs currents {direct:.2e} dB, x10 source {invariance:.2e} dB"),
    )
}

fn trapezoid() -> Outcome {
    let square = TrapezoidExcitation {
        rise_time: 0.0,
        fall_time: 0.0,
        ..TrapezoidExcitation::default()
    };
    let s = trapezoid_harmonics(&square).unwrap();
    let a = square.amplitude;
    let mut square_err: f64 = 0.0;
    for n in (1..=s.len()).step_by(2) {
        let ideal = 4.0 * a / (n as f64 * std::f64::consts::PI);
        square_err = square_err.max((s.harmonic(n).norm() - ideal).abs() / ideal);
    }

    let mut fft_err: f64 = 0.0;
    for exc in [
        TrapezoidExcitation::default(),
        TrapezoidExcitation {
            amplitude: 3.0,
            f0: 20e3,
            rise_time: 400e-9,
            fall_time: 900e-9,
            duty: 0.37,
            n_harmonics: 50,
        },
    ] {
        let closed = trapezoid_harmonics(&exc).unwrap();
        let fft = fft_coefficients(&exc, 50);
        let fundamental = closed.harmonic(1).norm();
        for n in 1..=50 {
            let c = closed.harmonic(n);
            // harmonics cancelled by symmetry are compared against the fundamental
            let scale = if c.norm() > 1e-9 * fundamental { c.norm() } else { fundamental };
            fft_err = fft_err.max((c - fft[n - 1]).norm() / scale);
        }
    }
    check(
        square_err <= 1e-9 && fft_err <= 1e-6,
        format!("square wave {square_err:.2e}, FFT n <= 50 {fft_err:.2e}"),
    )
}

fn run_goldens(dir: &Path) -> Vec<u8> {
    let status = Command::new(BIN)
        .args(["goldens", "--out"])
        .arg(dir)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .stdout(Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());
    fs::read(dir.join("goldens.csv")).unwrap()
}

fn mode_conversion(fx: &Fixture) -> Outcome {
    let params = fx.config.dm_bench.bench_params();
    let exc = &fx.config.excitation;
    let reference = apply_asymmetry(&fx.healthy, &fx.config.baseline_asymmetry).unwrap();
    let ref_spec = cm_spectrum(&build_dm_bench(&reference, &params).unwrap(), exc).unwrap();
    let mut maxima = Vec::new();
    for text in ["tt:A:24-34", "pp:A:264-B:120", "pg:A:24"] {
        let m = apply_fault(&reference, &parse_fault(text).unwrap()).unwrap();
        let s = cm_spectrum(&build_dm_bench(&m, &params).unwrap(), exc).unwrap();
        maxima.push(increment_db(&ref_spec, &s, fx.config.dm_bench.floor).unwrap().max_db);
    }
    let ordered = maxima.iter().all(|m| *m > 0.0) && maxima[2] > maxima[0] && maxima[2] > maxima[1];

    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let stable = run_goldens(&a) == run_goldens(&b);
    let in_process = goldens_csv(&compute_goldens(&Context::new(RunConfig::default())).unwrap());
    let committed = in_process == GOLDENS;
    check(
        ordered && stable && committed,
        format!(
            "tt {:.2} dB, pp {:.2} dB, pg {:.2} dB; goldens stable {stable}, match committed {committed}",
            maxima[0], maxima[1], maxima[2]
        ),
    )
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn end_to_end() -> Outcome {
    let runs: [&[&str]; 6] = [
        &["sweep"],
        &["sweep", "--fault", "tt:A:24-34"],
        &["ratio", "--fault", "pg:A:24"],
        &["dmconv"],
        &["dmconv", "--fault", "pp:A:264-B:120"],
        &["goldens"],
    ];
    let tmp = tempfile::tempdir().unwrap();
    let mut differing = Vec::new();
    let mut files = 0;
    for (i, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        // same output directory both times: the report records it
        let dir = tmp.path().join(format!("run-{i}"));
        for _ in 0..2 {
            let _ = fs::remove_dir_all(&dir);
            let status = Command::new(BIN)
                .args(*args)
                .arg("--out")
                .arg(&dir)
                .env("SOURCE_DATE_EPOCH", "1700000000")
                .stdout(Stdio::null())
                .status()
                .unwrap();
            if !status.success() {
                return Err(format!("{} exited with {status}", args.join(" ")));
            }
            outputs.push(snapshot(&dir));
        }
        files += outputs[0].len();
        if outputs[0] != outputs[1] {
            differing.push(args.join(" "));
        }
    }
    check(
        differing.is_empty(),
        format!("{} commands, {files} files per run, differing: {differing:?}", runs.len()),
    )
}

fn main() {
    let fx = Fixture::new();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("solver oracle equivalence", Box::new(solver_oracle)),
        ("passivity, reciprocity and KCL", Box::new(circuit_invariants)),
        ("balanced null", Box::new(|| balanced_null(&fx))),
        ("equipotential invariance", Box::new(|| equipotential(&fx))),
        ("severity ordering", Box::new(|| severity(&fx))),
        ("ground-fault low-frequency collapse", Box::new(|| ground_fault(&fx))),
        ("ratio consistency", Box::new(|| ratio_consistency(&fx))),
        ("trapezoid spectrum", Box::new(trapezoid)),
        ("mode-conversion ordering", Box::new(|| mode_conversion(&fx))),
        ("end-to-end determinism", Box::new(end_to_end)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
