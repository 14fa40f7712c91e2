//! Pulse-sequence realizations of the cyclic permutations, and the ideal
//! rank-0 (T₀₀) filter.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use super::{
    composite_pulse_propagator, hermiticity_error, CMatrix4, Propagator, PulseShape,
    SpinOperatorSet,
};
use crate::error::{invalid, Error, Result};
use crate::protocol::{permutation_matrix, PermutationKind, TransferMatrix};
use crate::state::{OrderObservable, PopulationVector, SpinSystemParams};

/// How laboratory carrier shifts and rf phases map into the rotating frame.
///
/// ¹³C has a positive magnetogyric ratio and hence a negative Larmor
/// frequency: a carrier shifted by +s Hz sees the spins at a rotating-frame
/// offset of −s Hz, and rf phases keep their sign. `Positive` flips both, which
/// exchanges the permutation each sequence realizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LarmorSign {
    #[default]
    Negative,
    Positive,
}

impl LarmorSign {
    /// Rotating-frame resonance offset for a carrier shift, Hz.
    pub fn resonance_offset(self, carrier_hz: f64) -> f64 {
        match self {
            LarmorSign::Negative => -carrier_hz,
            LarmorSign::Positive => carrier_hz,
        }
    }

    /// Rotating-frame phase for a nominal rf phase.
    pub fn phase(self, phase: f64) -> f64 {
        match self {
            LarmorSign::Negative => phase,
            LarmorSign::Positive => -phase,
        }
    }
}

impl fmt::Display for LarmorSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LarmorSign::Negative => "negative",
            LarmorSign::Positive => "positive",
        })
    }
}

impl FromStr for LarmorSign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "negative" | "neg" | "-" => Ok(LarmorSign::Negative),
            "positive" | "pos" | "+" => Ok(LarmorSign::Positive),
            other => Err(invalid(format!("unknown Larmor sign '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PermutationSimulation {
    pub target: PermutationKind,
    pub propagator: Propagator,
    /// |⟨s|U|t⟩|² in the singlet–triplet basis.
    pub transfer: TransferMatrix<f64>,
    /// Tr(Πᵀ·T)/4 against the target permutation.
    pub fidelity: f64,
}

impl PermutationSimulation {
    /// True when the largest entry of every column sits where the target
    /// permutation has its 1.
    pub fn argmax_matches(&self) -> bool {
        argmax_matches(&self.transfer, self.target)
    }
}

pub fn permutation_fidelity(t: &TransferMatrix<f64>, target: PermutationKind) -> f64 {
    let p = permutation_matrix::<f64>(target);
    (0..4)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .map(|(i, j)| p.entry(i, j) * t.entry(i, j))
        .sum::<f64>()
        / 4.0
}

pub fn argmax_matches(t: &TransferMatrix<f64>, target: PermutationKind) -> bool {
    let p = permutation_matrix::<f64>(target);
    (0..4).all(|col| {
        let best = (0..4)
            .max_by(|&a, &b| t.entry(a, col).total_cmp(&t.entry(b, col)))
            .unwrap_or(0);
        p.entry(best, col) == 1.0
    })
}

/// Simulates the adiabatic pulse followed by the composite 90° pulse that
/// implements a cyclic permutation: APSOC(−) + 180₃₀90₁₅₀ for π₁₂₄ and
/// APSOC(+) + 180₋₃₀90₋₁₅₀ for π₁₄₂. The magnitude of `shape.offset_hz` sets
/// the carrier shift.
pub fn simulate_permutation(
    kind: PermutationKind,
    params: &SpinSystemParams,
    shape: &PulseShape,
    n_steps: usize,
    convention: LarmorSign,
) -> Result<PermutationSimulation> {
    params.validate()?;
    let (carrier, phase_sign) = match kind {
        PermutationKind::Pi124 => (-shape.offset_hz.abs(), 1.0),
        PermutationKind::Pi142 => (shape.offset_hz.abs(), -1.0),
        PermutationKind::Pi12 => {
            return Err(invalid(
                "only the cyclic permutations have a pulse implementation",
            ))
        }
    };
    let offset = convention.resonance_offset(carrier);
    let apsoc = shape.propagator(params, offset, convention.phase(shape.phase), n_steps)?;
    let composite = composite_pulse_propagator(convention.phase(phase_sign), 1.0)?;
    let propagator = apsoc.then(&composite);
    let transfer = propagator.transfer_matrix();
    let fidelity = permutation_fidelity(&transfer, kind);
    log::debug!("{kind} via pulses: fidelity {fidelity:.6} (offset {offset} Hz, {convention})");
    Ok(PermutationSimulation {
        target: kind,
        propagator,
        transfer,
        fidelity,
    })
}

const DENSITY_TOLERANCE: f64 = 1e-10;

/// Hermitian, unit-trace 4×4 density operator in the product basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityOperator {
    rho: CMatrix4,
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Singlet-order operator with Tr(Q²) = 1, product basis.
fn singlet_order_operator(ops: &SpinOperatorSet) -> CMatrix4 {
    let ev = OrderObservable::SingletOrder.eigenvalues::<f64>();
    ops.from_singlet_triplet(&CMatrix4::from_diagonal(&nalgebra::Vector4::from_fn(
        |i, _| c(ev[i]),
    )))
}

impl DensityOperator {
    pub fn new(rho: CMatrix4) -> Result<Self> {
        let herr = hermiticity_error(&rho);
        if herr > DENSITY_TOLERANCE {
            return Err(Error::Invariant(format!(
                "density operator is not Hermitian ({herr:e})"
            )));
        }
        let tr = rho.trace();
        if (tr - c(1.0)).norm() > DENSITY_TOLERANCE {
            return Err(Error::Invariant(format!("density operator has trace {tr}")));
        }
        Ok(Self { rho })
    }

    /// Diagonal in the singlet–triplet basis.
    pub fn from_populations(p: &PopulationVector<f64>) -> Self {
        let ops = SpinOperatorSet::new();
        let d = CMatrix4::from_diagonal(&nalgebra::Vector4::from_fn(|i, _| c(p.as_array()[i])));
        Self {
            rho: ops.from_singlet_triplet(&d),
        }
    }

    pub fn maximally_mixed() -> Self {
        Self {
            rho: CMatrix4::identity() * c(0.25),
        }
    }

    pub fn matrix(&self) -> &CMatrix4 {
        &self.rho
    }

    /// Diagonal in the singlet–triplet basis (S, αα, T₀, ββ).
    pub fn populations(&self) -> [f64; 4] {
        let st = SpinOperatorSet::new().to_singlet_triplet(&self.rho);
        std::array::from_fn(|i| st[(i, i)].re)
    }

    /// U·ρ·U†.
    pub fn evolve(&self, u: &Propagator) -> Self {
        Self {
            rho: u.matrix() * self.rho * u.matrix().adjoint(),
        }
    }

    /// ⟨SO⟩ = Tr(ρ·Q_SO).
    pub fn singlet_order(&self) -> f64 {
        (self.rho * singlet_order_operator(&SpinOperatorSet::new()))
            .trace()
            .re
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }
}

/// Ideal T₀₀ filter: projection onto span{𝟙, Q_SO} under the trace inner
/// product. Coherences and triplet-internal population differences vanish.
pub fn t00_project(rho: &DensityOperator) -> DensityOperator {
    let ops = SpinOperatorSet::new();
    let q = singlet_order_operator(&ops);
    let id = CMatrix4::identity();
    let trace = rho.rho.trace();
    let so = (rho.rho * q).trace();
    DensityOperator {
        rho: id * (trace / c(4.0)) + q * so,
    }
}
