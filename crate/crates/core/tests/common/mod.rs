#![allow(dead_code)]

use spin_cooling::{PulseShape, SpinSystemParams};

/// Field at which the spectrum and the 10.01 Hz shift difference were reported.
pub const REPORTED_FIELD: f64 = 16.4;

pub fn reported_params() -> SpinSystemParams {
    SpinSystemParams {
        b0: REPORTED_FIELD,
        ..SpinSystemParams::default()
    }
}

/// Smooth amplitude sweep a(x) = A + B(x − x₀)⁷ from 0 to ω_max, steepest where
/// the nutation frequency crosses the singlet–triplet anticrossing at a 35 Hz
/// offset. Reference waveform for the simulator; not a published shape.
pub fn sweep_fixture() -> PulseShape {
    let ac = (54.141f64.powi(2) - 35.0f64.powi(2)).sqrt() / 181.0;
    let q = (ac / (1.0 - ac)).powf(1.0 / 7.0);
    let x0 = q / (1.0 + q);
    let b = 1.0 / ((1.0 - x0).powi(7) + x0.powi(7));
    let a = b * x0.powi(7);
    let binom = [1.0, 7.0, 21.0, 35.0, 35.0, 21.0, 7.0, 1.0];
    let mut coeffs = [0.0; 21];
    for k in 0..=7 {
        coeffs[k] = b * binom[k] * (-x0).powi(7 - k as i32);
    }
    coeffs[0] += a;
    PulseShape::published().with_coefficients(&coeffs).unwrap()
}
