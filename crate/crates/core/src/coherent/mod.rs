//! Pulse-level dynamics of the two-spin system in the rotating frame.
//!
//! Operators live in the product basis (αα, αβ, βα, ββ); populations are read
//! out in the singlet–triplet basis (S, αα, T₀, ββ) used everywhere else.

mod permutation;
mod propagate;
mod pulse;

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix4, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::state::SpinSystemParams;

pub use permutation::{
    argmax_matches, permutation_fidelity, simulate_permutation, t00_project, DensityOperator,
    LarmorSign, PermutationSimulation,
};
pub use propagate::{expm_hermitian, propagate, Propagator, UNITARITY_TOLERANCE};
pub use pulse::{
    apsoc_amplitude, composite_pulse_propagator, hard_pulse, parse_coefficients, rf_hamiltonian,
    simple_pulse_propagator, transfer_overlap, PulseShape, APSOC_COEFFICIENT_COUNT, DEFAULT_STEPS,
};

/// 4×4 complex matrix.
pub type CMatrix4 = Matrix4<Complex64>;

const HERMITIAN_TOLERANCE: f64 = 1e-12;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Largest entry of A − A†, relative to the largest entry of A.
pub fn hermiticity_error(a: &CMatrix4) -> f64 {
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    (a - a.adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        / scale
}

pub fn is_hermitian(a: &CMatrix4) -> bool {
    hermiticity_error(a) <= HERMITIAN_TOLERANCE
}

/// Single-spin operators of the pair and the singlet–triplet basis change.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinOperatorSet {
    /// I₁ₓ, I₁ᵧ, I₁z.
    pub i1: [CMatrix4; 3],
    /// I₂ₓ, I₂ᵧ, I₂z.
    pub i2: [CMatrix4; 3],
    /// Columns are |S⟩, |αα⟩, |T₀⟩, |ββ⟩ in the product basis.
    pub basis: CMatrix4,
}

impl Default for SpinOperatorSet {
    fn default() -> Self {
        Self::new()
    }
}

impl SpinOperatorSet {
    pub fn new() -> Self {
        let h = 0.5;
        let sx = Matrix2::new(c(0.0), c(h), c(h), c(0.0));
        let sy = Matrix2::new(
            c(0.0),
            Complex64::new(0.0, -h),
            Complex64::new(0.0, h),
            c(0.0),
        );
        let sz = Matrix2::new(c(h), c(0.0), c(0.0), c(-h));
        let id = Matrix2::<Complex64>::identity();
        let i1 = [sx, sy, sz].map(|s| s.kronecker(&id).fixed_resize::<4, 4>(c(0.0)));
        let i2 = [sx, sy, sz].map(|s| id.kronecker(&s).fixed_resize::<4, 4>(c(0.0)));
        let r = c(0.5f64.sqrt());
        let z = c(0.0);
        let one = c(1.0);
        #[rustfmt::skip]
        let basis = CMatrix4::new(
            z,  one, z, z,
            r,  z,   r, z,
            -r, z,   r, z,
            z,  z,   z, one,
        );
        Self { i1, i2, basis }
    }

    pub fn fx(&self) -> CMatrix4 {
        self.i1[0] + self.i2[0]
    }

    pub fn fy(&self) -> CMatrix4 {
        self.i1[1] + self.i2[1]
    }

    pub fn fz(&self) -> CMatrix4 {
        self.i1[2] + self.i2[2]
    }

    /// I₁·I₂.
    pub fn coupling(&self) -> CMatrix4 {
        (0..3).map(|k| self.i1[k] * self.i2[k]).sum()
    }

    /// Matrix elements in the singlet–triplet basis, B†·A·B.
    pub fn to_singlet_triplet(&self, a: &CMatrix4) -> CMatrix4 {
        self.basis.adjoint() * a * self.basis
    }

    /// Inverse of [`Self::to_singlet_triplet`].
    pub fn from_singlet_triplet(&self, a: &CMatrix4) -> CMatrix4 {
        self.basis * a * self.basis.adjoint()
    }
}

/// Rotating-frame free Hamiltonian in rad/s:
/// ω_off·F_z + (ω_Δ/2)(I₁z − I₂z) + 2πJ·I₁·I₂ with ω_off = 2π·offset_hz.
pub fn free_hamiltonian(params: &SpinSystemParams, offset_hz: f64) -> CMatrix4 {
    let ops = SpinOperatorSet::new();
    let w_off = 2.0 * PI * offset_hz;
    let w_delta = params.shift_difference();
    ops.fz() * c(w_off)
        + (ops.i1[2] - ops.i2[2]) * c(w_delta / 2.0)
        + ops.coupling() * c(params.coupling_angular())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralLine {
    pub frequency_hz: f64,
    /// |⟨a|F_x|b⟩|²; the four intensities sum to 1.
    pub intensity: f64,
}

/// The four single-quantum lines of the pair at zero offset, sorted by
/// frequency.
///
/// The Hamiltonian is diagonalized per F_z sector so that degenerate levels in
/// different sectors never mix.
pub fn ab_spectrum(params: &SpinSystemParams) -> Result<Vec<SpectralLine>> {
    if params.j_coupling == 0.0 || !params.j_coupling.is_finite() {
        return Err(domain("J coupling must be nonzero"));
    }
    let ops = SpinOperatorSet::new();
    let h = free_hamiltonian(params, 0.0);

    // eigenstates as (F_z, energy, product-basis vector)
    let unit = |i: usize| {
        let mut v = nalgebra::Vector4::<Complex64>::zeros();
        v[i] = c(1.0);
        v
    };
    let mut levels = vec![(1, h[(0, 0)].re, unit(0)), (-1, h[(3, 3)].re, unit(3))];
    let block = Matrix2::new(h[(1, 1)].re, h[(1, 2)].re, h[(2, 1)].re, h[(2, 2)].re);
    let eig = SymmetricEigen::new(block);
    for k in 0..2 {
        let v = eig.eigenvectors.column(k);
        let mut w = nalgebra::Vector4::<Complex64>::zeros();
        w[1] = c(v[0]);
        w[2] = c(v[1]);
        levels.push((0, eig.eigenvalues[k], w));
    }

    let fx = ops.fx();
    let mut lines = Vec::with_capacity(4);
    for (m_hi, e_hi, v_hi) in &levels {
        for (m_lo, e_lo, v_lo) in &levels {
            if m_hi - m_lo != 1 {
                continue;
            }
            let amp = (v_hi.adjoint() * fx * v_lo)[(0, 0)];
            lines.push(SpectralLine {
                frequency_hz: (e_hi - e_lo) / (2.0 * PI),
                intensity: amp.norm_sqr(),
            });
        }
    }
    lines.sort_by(|a, b| a.frequency_hz.total_cmp(&b.frequency_hz));
    Ok(lines)
}

/// Distance between the two middle lines of a four-line spectrum, Hz.
pub fn inner_splitting(lines: &[SpectralLine]) -> Option<f64> {
    (lines.len() == 4).then(|| lines[2].frequency_hz - lines[1].frequency_hz)
}
