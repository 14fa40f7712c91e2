use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use super::{hermiticity_error, CMatrix4, SpinOperatorSet, HERMITIAN_TOLERANCE};
use crate::error::{invalid, Error, Result};
use crate::protocol::{TransferLabel, TransferMatrix};

/// Frobenius-norm tolerance on U·U† − I.
pub const UNITARITY_TOLERANCE: f64 = 1e-9;

/// exp(−i·H·dt) for Hermitian H through its eigen-decomposition.
pub fn expm_hermitian(h: &CMatrix4, dt: f64) -> CMatrix4 {
    let eig = SymmetricEigen::new(*h);
    let q = eig.eigenvectors;
    let phases = eig.eigenvalues.map(|w| Complex64::from_polar(1.0, -w * dt));
    q * CMatrix4::from_diagonal(&phases) * q.adjoint()
}

/// A unitary evolution operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Propagator {
    u: CMatrix4,
}

impl Propagator {
    pub fn new(u: CMatrix4) -> Result<Self> {
        let p = Self { u };
        let err = p.unitarity_error();
        if err > UNITARITY_TOLERANCE {
            return Err(Error::Invariant(format!(
                "operator is not unitary: ‖UU† − I‖ = {err:e}"
            )));
        }
        Ok(p)
    }

    pub fn identity() -> Self {
        Self {
            u: CMatrix4::identity(),
        }
    }

    pub fn matrix(&self) -> &CMatrix4 {
        &self.u
    }

    /// ‖U·U† − I‖ in the Frobenius norm.
    pub fn unitarity_error(&self) -> f64 {
        (self.u * self.u.adjoint() - CMatrix4::identity()).norm()
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Propagator) -> Propagator {
        Propagator { u: next.u * self.u }
    }

    pub fn adjoint(&self) -> Propagator {
        Propagator {
            u: self.u.adjoint(),
        }
    }

    /// Population transfer T_st = |⟨s|U|t⟩|² in the singlet–triplet basis.
    /// Doubly stochastic for any unitary U.
    pub fn transfer_matrix(&self) -> TransferMatrix<f64> {
        let ops = SpinOperatorSet::new();
        let st = ops.to_singlet_triplet(&self.u);
        let m = std::array::from_fn(|s| std::array::from_fn(|t| st[(s, t)].norm_sqr()));
        TransferMatrix::from_rows_unchecked(m, TransferLabel::Simulated)
    }
}

/// Time-ordered propagator of `h(t)` over `[t0, t1]` with `n_steps` midpoint
/// steps; each step is exp(−i·H(t_mid)·Δt), later steps multiply on the left.
pub fn propagate<F>(h: F, t0: f64, t1: f64, n_steps: usize) -> Result<Propagator>
where
    F: Fn(f64) -> CMatrix4,
{
    if n_steps == 0 {
        return Err(invalid("propagation needs at least one step"));
    }
    if !(t1 >= t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(invalid(format!("invalid time span [{t0}, {t1}]")));
    }
    let dt = (t1 - t0) / n_steps as f64;
    let mut u = CMatrix4::identity();
    for k in 0..n_steps {
        let t = t0 + (k as f64 + 0.5) * dt;
        let hk = h(t);
        let herr = hermiticity_error(&hk);
        if herr > HERMITIAN_TOLERANCE {
            return Err(Error::Numerical(format!(
                "Hamiltonian at t = {t} s is not Hermitian ({herr:e})"
            )));
        }
        u = expm_hermitian(&hk, dt) * u;
    }
    Propagator::new(u).map_err(|e| Error::Numerical(format!("propagation drifted: {e}")))
}
