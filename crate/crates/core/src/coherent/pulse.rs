//! Amplitude-modulated adiabatic pulse and hard composite pulses.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;

use super::propagate::expm_hermitian;
use super::{free_hamiltonian, propagate, CMatrix4, Propagator, SpinOperatorSet};
use crate::error::{domain, invalid, Error, Result};
use crate::state::SpinSystemParams;

pub const APSOC_COEFFICIENT_COUNT: usize = 21;

/// Default number of midpoint steps over the adiabatic pulse (18 µs each).
pub const DEFAULT_STEPS: usize = 20_000;

const PUBLISHED_COEFFICIENTS: &str = include_str!("../../data/apsoc_coefficients.txt");

/// Polynomial amplitude envelope ω(t) = ω_max·Σ Cᵢ (t/T)ⁱ with a carrier
/// offset and rf phase.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseShape {
    /// Nutation frequency scale ω_max, rad/s.
    pub max_amplitude: f64,
    /// Pulse length T, s.
    pub duration: f64,
    coefficients: [f64; APSOC_COEFFICIENT_COUNT],
    /// Carrier offset from the spectrum centre, Hz. The sign selects APSOC(±).
    pub offset_hz: f64,
    /// rf phase, rad.
    pub phase: f64,
}

impl PulseShape {
    pub fn new(max_amplitude: f64, duration: f64, coefficients: &[f64]) -> Result<Self> {
        if coefficients.len() != APSOC_COEFFICIENT_COUNT {
            return Err(invalid(format!(
                "expected {APSOC_COEFFICIENT_COUNT} coefficients, got {}",
                coefficients.len()
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(invalid("pulse coefficients must be finite"));
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(domain(format!(
                "pulse duration must be positive, got {duration}"
            )));
        }
        if !max_amplitude.is_finite() {
            return Err(domain("pulse amplitude must be finite"));
        }
        let mut c = [0.0; APSOC_COEFFICIENT_COUNT];
        c.copy_from_slice(coefficients);
        Ok(Self {
            max_amplitude,
            duration,
            coefficients: c,
            offset_hz: -35.0,
            phase: 0.0,
        })
    }

    /// The published shape: ω_max = 2π·181 Hz, T = 0.36 s, carrier −35 Hz.
    pub fn published() -> Self {
        let c = parse_coefficients(PUBLISHED_COEFFICIENTS).expect("bundled coefficients parse");
        Self::new(2.0 * PI * 181.0, 0.36, &c).expect("bundled coefficients are valid")
    }

    /// Published ω_max, T and offset with other coefficients.
    pub fn with_coefficients(&self, coefficients: &[f64]) -> Result<Self> {
        let mut s = Self::new(self.max_amplitude, self.duration, coefficients)?;
        s.offset_hz = self.offset_hz;
        s.phase = self.phase;
        Ok(s)
    }

    pub fn with_offset(mut self, offset_hz: f64) -> Self {
        self.offset_hz = offset_hz;
        self
    }

    /// Reads coefficients from a text file, one number per line.
    pub fn load_coefficients(path: &Path) -> Result<Vec<f64>> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        parse_coefficients(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn coefficients(&self) -> &[f64; APSOC_COEFFICIENT_COUNT] {
        &self.coefficients
    }

    /// Σ Cᵢ xⁱ by Horner's scheme, x = t/T.
    pub fn envelope(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * x + c)
    }

    /// Minimum and maximum of ω(t) over `samples` evenly spaced points.
    pub fn amplitude_range(&self, samples: usize) -> (f64, f64) {
        let n = samples.max(2);
        (0..n)
            .map(|k| self.max_amplitude * self.envelope(k as f64 / (n - 1) as f64))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), w| {
                (lo.min(w), hi.max(w))
            })
    }

    /// Time-ordered propagator of the pulse at rotating-frame resonance offset
    /// `offset_hz` and rf phase `phase`.
    pub fn propagator(
        &self,
        params: &SpinSystemParams,
        offset_hz: f64,
        phase: f64,
        n_steps: usize,
    ) -> Result<Propagator> {
        let ops = SpinOperatorSet::new();
        let h0 = free_hamiltonian(params, offset_hz);
        let rf = rf_operator(&ops, phase);
        propagate(
            |t| {
                h0 + rf * Complex64::new(self.max_amplitude * self.envelope(t / self.duration), 0.0)
            },
            0.0,
            self.duration,
            n_steps,
        )
    }
}

/// One coefficient per line; blank lines and `#` comments are skipped.
pub fn parse_coefficients(text: &str) -> Result<Vec<f64>> {
    let values = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            l.parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: '{l}': {e}", i + 1)))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.len() != APSOC_COEFFICIENT_COUNT {
        return Err(Error::Parse(format!(
            "expected {APSOC_COEFFICIENT_COUNT} coefficients, found {}",
            values.len()
        )));
    }
    Ok(values)
}

/// ω(t) in rad/s for 0 ≤ t ≤ T.
pub fn apsoc_amplitude(shape: &PulseShape, t: f64) -> Result<f64> {
    if !(0.0..=shape.duration).contains(&t) {
        return Err(domain(format!(
            "t = {t} s lies outside [0, {}] s",
            shape.duration
        )));
    }
    Ok(shape.max_amplitude * shape.envelope(t / shape.duration))
}

fn rf_operator(ops: &SpinOperatorSet, phase: f64) -> CMatrix4 {
    ops.fx() * Complex64::new(phase.cos(), 0.0) + ops.fy() * Complex64::new(phase.sin(), 0.0)
}

/// ω·(F_x cos φ + F_y sin φ).
pub fn rf_hamiltonian(omega: f64, phase: f64) -> CMatrix4 {
    rf_operator(&SpinOperatorSet::new(), phase) * Complex64::new(omega, 0.0)
}

/// Ideal rotation exp(−iβ(F_x cos φ + F_y sin φ)).
pub fn hard_pulse(beta: f64, phase: f64) -> Propagator {
    let u = expm_hermitian(&rf_operator(&SpinOperatorSet::new(), phase), beta);
    Propagator::new(u).expect("rotation is unitary")
}

fn check_pulse_args(sign: f64, scale: f64) -> Result<f64> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(domain(format!(
            "amplitude scale must be positive, got {scale}"
        )));
    }
    if sign == 0.0 || !sign.is_finite() {
        return Err(invalid("pulse sign must be ±1"));
    }
    Ok(sign.signum())
}

/// 180°_{±30} followed by 90°_{±150}, flip angles multiplied by `scale`.
/// At `scale = 1` x-magnetization ends on ∓z.
pub fn composite_pulse_propagator(sign: f64, scale: f64) -> Result<Propagator> {
    let s = check_pulse_args(sign, scale)?;
    let deg = PI / 180.0;
    let first = hard_pulse(180.0 * deg * scale, s * 30.0 * deg);
    let second = hard_pulse(90.0 * deg * scale, s * 150.0 * deg);
    Ok(first.then(&second))
}

/// Plain 90°_{±90} pulse with the same ideal action on x-magnetization.
pub fn simple_pulse_propagator(sign: f64, scale: f64) -> Result<Propagator> {
    let s = check_pulse_args(sign, scale)?;
    Ok(hard_pulse(PI / 2.0 * scale, s * PI / 2.0))
}

/// Overlap of the evolved x-magnetization U·F_x·U† with ∓F_z (sign ±1),
/// normalized by Tr(F_z²).
pub fn transfer_overlap(u: &Propagator, sign: f64) -> f64 {
    let ops = SpinOperatorSet::new();
    let fz = ops.fz();
    let rho = u.matrix() * ops.fx() * u.matrix().adjoint();
    let target = fz * Complex64::new(-sign.signum(), 0.0);
    (rho * target).trace().re / (fz * fz).trace().re
}
