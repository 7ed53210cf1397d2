//! FFT of a sampled trapezoid, written from the waveform's geometry.

use rustfft::num_complex::Complex64 as FftComplex;
use rustfft::FftPlanner;
use stator_emc::dm::TrapezoidExcitation;
use stator_emc::Complex64;

const SAMPLES: usize = 1 << 20;

/// Trapezoid written directly from its geometric description: the rise
/// starts at t = 0, the fall is centred `duty * T` after the centre of the
/// rise.
fn waveform(exc: &TrapezoidExcitation, t: f64) -> f64 {
    let a = exc.amplitude;
    let period = 1.0 / exc.f0;
    let t = t.rem_euclid(period);
    let fall_mid = exc.rise_time / 2.0 + exc.duty * period;
    let fall_start = fall_mid - exc.fall_time / 2.0;
    let fall_end = fall_mid + exc.fall_time / 2.0;
    if t < exc.rise_time {
        -a + 2.0 * a * t / exc.rise_time
    } else if t < fall_start {
        a
    } else if t < fall_end {
        a - 2.0 * a * (t - fall_start) / exc.fall_time
    } else {
        -a
    }
}

/// `c_n = 2 X_n / N` for `x(t) = Re sum c_n exp(j n w t)`.
pub fn fft_coefficients(exc: &TrapezoidExcitation, count: usize) -> Vec<Complex64> {
    let period = 1.0 / exc.f0;
    let mut buf: Vec<FftComplex> = (0..SAMPLES)
        .map(|k| FftComplex::new(waveform(exc, k as f64 * period / SAMPLES as f64), 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(SAMPLES).process(&mut buf);
    (1..=count)
        .map(|n| {
            let x = buf[n] * (2.0 / SAMPLES as f64);
            Complex64::new(x.re, x.im)
        })
        .collect()
}
