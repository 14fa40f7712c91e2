//! 4×4 matrix exponentials for the relaxation propagator.
//!
//! Relaxation generators obey detailed balance with respect to the thermal
//! populations, so `D^{-1/2} A D^{1/2}` is symmetric and the exponential
//! follows from a symmetric eigen-decomposition. Anything else goes through
//! scaling-and-squaring Padé (nalgebra's `Matrix::exp`).

use nalgebra::{Matrix4, SymmetricEigen, Vector4};

/// Condition number of `D^{1/2}` beyond which the balanced route is abandoned.
const MAX_BALANCE_CONDITION: f64 = 1e8;
/// Relative asymmetry tolerated before a matrix is treated as non-symmetric.
const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpmRoute {
    /// Symmetric (possibly after balancing) eigen-decomposition.
    Eigen,
    /// Scaling-and-squaring Padé approximant.
    Pade,
}

pub fn is_symmetric(a: &Matrix4<f64>) -> bool {
    let scale = a.amax().max(f64::MIN_POSITIVE);
    (a - a.transpose()).amax() <= SYMMETRY_TOLERANCE * scale
}

/// exp(A) through the symmetric eigen-decomposition, or Padé when `A` is not
/// symmetric.
pub fn expm(a: &Matrix4<f64>) -> (Matrix4<f64>, ExpmRoute) {
    if is_symmetric(a) {
        (expm_symmetric(a), ExpmRoute::Eigen)
    } else {
        (expm_pade(a), ExpmRoute::Pade)
    }
}

pub fn expm_pade(a: &Matrix4<f64>) -> Matrix4<f64> {
    a.exp()
}

fn expm_symmetric(a: &Matrix4<f64>) -> Matrix4<f64> {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let q = eig.eigenvectors;
    let d = Matrix4::from_diagonal(&eig.eigenvalues.map(f64::exp));
    q * d * q.transpose()
}

/// exp(A) for a generator in detailed balance with the positive weights `w`
/// (`A_ij w_j = A_ji w_i`).
pub fn expm_balanced(a: &Matrix4<f64>, w: &[f64; 4]) -> (Matrix4<f64>, ExpmRoute) {
    let positive = w.iter().all(|&x| x > 0.0 && x.is_finite());
    if !positive {
        return (expm_pade(a), ExpmRoute::Pade);
    }
    let s = Vector4::from_iterator(w.iter().map(|x| x.sqrt()));
    let condition = s.max() / s.min();
    if condition > MAX_BALANCE_CONDITION {
        log::debug!("balancing condition {condition:.3e}; using Padé");
        return (expm_pade(a), ExpmRoute::Pade);
    }
    let balanced = Matrix4::from_fn(|i, j| a[(i, j)] * s[j] / s[i]);
    if !is_symmetric(&balanced) {
        return (expm_pade(a), ExpmRoute::Pade);
    }
    let e = expm_symmetric(&balanced);
    (
        Matrix4::from_fn(|i, j| e[(i, j)] * s[i] / s[j]),
        ExpmRoute::Eigen,
    )
}

/// exp(A₀ + ε A₁) to first order in ε: returns (exp(A₀), L) with
/// exp(A₀ + εA₁) = exp(A₀) + ε L + O(ε²).
///
/// For symmetric `A₀ = QΛQᵀ` the derivative is the Daleckii–Krein form
/// `L = Q [(QᵀA₁Q) ∘ Φ] Qᵀ`, `Φ_ij = (e^λi − e^λj)/(λi − λj)`. Otherwise the
/// upper-right block of exp([[A₀, A₁], [0, A₀]]) is used.
pub fn expm_first_order(
    a0: &Matrix4<f64>,
    a1: &Matrix4<f64>,
) -> (Matrix4<f64>, Matrix4<f64>, ExpmRoute) {
    if !is_symmetric(a0) {
        let (e, l) = expm_block(a0, a1);
        return (e, l, ExpmRoute::Pade);
    }
    let eig = SymmetricEigen::new((a0 + a0.transpose()) * 0.5);
    let q = eig.eigenvectors;
    // eigenvalues at the rounding floor are exact zeros (generators carry a
    // stationary mode); leaving the noise in breaks column sums at long times
    let floor = 8.0 * f64::EPSILON * a0.norm();
    let lam = eig
        .eigenvalues
        .map(|l| if l.abs() <= floor { 0.0 } else { l });
    let phi = Matrix4::from_fn(|i, j| divided_exp(lam[i], lam[j]));
    let inner = (q.transpose() * a1 * q).component_mul(&phi);
    let e0 = q * Matrix4::from_diagonal(&lam.map(f64::exp)) * q.transpose();
    (e0, q * inner * q.transpose(), ExpmRoute::Eigen)
}

/// (e^a − e^b)/(a − b), with the confluent limit e^a.
fn divided_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    let d = lo - hi;
    if d == 0.0 {
        hi.exp()
    } else {
        hi.exp() * d.exp_m1() / d
    }
}

/// Fréchet derivative through the 8×8 block-triangular exponential.
pub fn expm_block(a0: &Matrix4<f64>, a1: &Matrix4<f64>) -> (Matrix4<f64>, Matrix4<f64>) {
    let mut big = nalgebra::SMatrix::<f64, 8, 8>::zeros();
    big.fixed_view_mut::<4, 4>(0, 0).copy_from(a0);
    big.fixed_view_mut::<4, 4>(0, 4).copy_from(a1);
    big.fixed_view_mut::<4, 4>(4, 4).copy_from(a0);
    let e = big.exp();
    (
        e.fixed_view::<4, 4>(0, 0).into_owned(),
        e.fixed_view::<4, 4>(0, 4).into_owned(),
    )
}
