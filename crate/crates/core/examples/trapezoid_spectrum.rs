// Fourier coefficients of the trapezoidal DM excitation.
//
// ```text
// cargo run --example trapezoid_spectrum
// ```

use stator_emc::dm::{trapezoid_harmonics, TrapezoidExcitation};

pub struct TrapezoidSpectrumResult {
    /// `(n, freq, |c_n|)` for the first few harmonics.
    pub lines: Vec<(usize, f64, f64)>,
    /// `|c_1|` of the same wave with ideal edges.
    pub square_fundamental: f64,
}

pub fn run_example() -> Result<TrapezoidSpectrumResult, Box<dyn std::error::Error>> {
    let exc = TrapezoidExcitation::default();
    let spectrum = trapezoid_harmonics(&exc)?;
    let lines = (1..=9)
        .map(|n| (n, spectrum.freq(n), spectrum.harmonic(n).norm()))
        .collect();
    let square = trapezoid_harmonics(&TrapezoidExcitation {
        rise_time: 0.0,
        fall_time: 0.0,
        ..exc
    })?;
    Ok(TrapezoidSpectrumResult {
        lines,
        square_fundamental: square.harmonic(1).norm(),
    })
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r = run_example()?;
    for (n, f, mag) in &r.lines {
        println!("n = {n:>2}  {f:>10.3e} Hz  |c_n| = {mag:.6e} V");
    }
    println!("ideal-edge fundamental: {:.6} V", r.square_fundamental);
    Ok(())
}
