//! Instantaneous, lossless protocol algebra: population permutations, the
//! triplet thermal reset, pumping cycles and the closed-form build-up law.
//!
//! Sequences are written in chronological order; the corresponding matrix
//! product is assembled right to left.

use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use crate::error::{domain, invalid, Error, Result};
use crate::scalar::{FirstOrder, Scalar};
use crate::state::{thermal_populations, PopulationVector, POPULATION_TOLERANCE};

/// Number of permutations after which the ideal build-up is within 1e-9·ε of
/// its limit: (√3/4)·3⁻²⁰ ≈ 1.3e-10.
pub const STEADY_STATE_PERMUTATIONS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PermutationKind {
    /// Cyclic permutation |1⟩ → |2⟩ → |4⟩ → |1⟩.
    Pi124,
    /// The inverse cycle |1⟩ → |4⟩ → |2⟩ → |1⟩.
    Pi142,
    /// Population swap between |1⟩ and |2⟩.
    Pi12,
}

impl PermutationKind {
    /// `image[i]` is the state whose population ends up in state `i`.
    fn source_of(self) -> [usize; 4] {
        match self {
            PermutationKind::Pi124 => [3, 0, 2, 1],
            PermutationKind::Pi142 => [1, 3, 2, 0],
            PermutationKind::Pi12 => [1, 0, 2, 3],
        }
    }
}

impl fmt::Display for PermutationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PermutationKind::Pi124 => "pi124",
            PermutationKind::Pi142 => "pi142",
            PermutationKind::Pi12 => "pi12",
        })
    }
}

impl FromStr for PermutationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pi124" | "π124" => Ok(PermutationKind::Pi124),
            "pi142" | "π142" => Ok(PermutationKind::Pi142),
            "pi12" | "π12" => Ok(PermutationKind::Pi12),
            other => Err(invalid(format!("unknown permutation label '{other}'"))),
        }
    }
}

/// What a transfer matrix represents.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TransferLabel {
    Permutation(PermutationKind),
    IdealReset,
    Cycle,
    /// Relaxation over a finite interval, seconds.
    FiniteReset(f64),
    /// Measured from a simulated pulse sequence.
    Simulated,
    Composite,
}

/// Column-stochastic 4×4 matrix acting on population vectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferMatrix<S> {
    m: [[S; 4]; 4],
    label: TransferLabel,
}

impl<S: Scalar> TransferMatrix<S> {
    /// Checks column sums and the sign of every entry.
    pub fn new(m: [[S; 4]; 4], label: TransferLabel) -> Result<Self> {
        let tol = S::tolerance(POPULATION_TOLERANCE);
        for col in 0..4 {
            let sum = (0..4).fold(S::zero(), |acc, row| acc + m[row][col]);
            if !(sum - S::one()).is_negligible(tol) {
                return Err(Error::Invariant(format!(
                    "column {} of {label:?} sums to {sum:?}",
                    col + 1
                )));
            }
        }
        for (row, entries) in m.iter().enumerate() {
            for (col, x) in entries.iter().enumerate() {
                if !x.is_nonnegative(tol) {
                    return Err(Error::Invariant(format!(
                        "entry ({}, {}) of {label:?} is negative: {x:?}",
                        row + 1,
                        col + 1
                    )));
                }
            }
        }
        Ok(Self { m, label })
    }

    pub(crate) fn from_rows_unchecked(m: [[S; 4]; 4], label: TransferLabel) -> Self {
        Self { m, label }
    }

    pub fn identity() -> Self {
        let mut m = [[S::zero(); 4]; 4];
        (0..4).for_each(|i| m[i][i] = S::one());
        Self {
            m,
            label: TransferLabel::Composite,
        }
    }

    pub fn rows(&self) -> &[[S; 4]; 4] {
        &self.m
    }

    pub fn entry(&self, row: usize, col: usize) -> S {
        self.m[row][col]
    }

    pub fn label(&self) -> TransferLabel {
        self.label
    }

    pub fn with_label(mut self, label: TransferLabel) -> Self {
        self.label = label;
        self
    }

    pub fn column_sums(&self) -> [S; 4] {
        std::array::from_fn(|col| (0..4).fold(S::zero(), |acc, row| acc + self.m[row][col]))
    }

    pub fn transpose(&self) -> Self {
        Self {
            m: std::array::from_fn(|r| std::array::from_fn(|c| self.m[c][r])),
            label: self.label,
        }
    }

    /// Populations after the transfer. Round-off below the population
    /// tolerance that would make an entry negative is clamped to zero.
    pub fn apply(&self, p: &PopulationVector<S>) -> PopulationVector<S> {
        let x = p.as_array();
        let out = std::array::from_fn(|row| {
            let v = (0..4).fold(S::zero(), |acc, col| acc + self.m[row][col] * x[col]);
            if v.is_nonnegative(0.0) {
                v
            } else if v.is_nonnegative(S::tolerance(POPULATION_TOLERANCE)) {
                S::zero()
            } else {
                v
            }
        });
        PopulationVector::from_array_unchecked(out)
    }

    /// `self` followed by `next` in time, i.e. the product `next · self`.
    pub fn then(&self, next: &Self) -> Self {
        *next * *self
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut result = Self::identity();
        let mut base = *self;
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = result * base;
            }
            base = base * base;
            k >>= 1;
        }
        result.label = if self.label == TransferLabel::Cycle {
            TransferLabel::Cycle
        } else {
            TransferLabel::Composite
        };
        result
    }

    /// True when every entry is 0 or 1 with one 1 per row and column.
    pub fn is_permutation(&self) -> bool {
        let binary = self
            .m
            .iter()
            .flatten()
            .all(|&x| x == S::zero() || x == S::one());
        let row_ok = self
            .m
            .iter()
            .all(|r| r.iter().filter(|&&x| x == S::one()).count() == 1);
        let col_ok = (0..4).all(|c| (0..4).filter(|&r| self.m[r][c] == S::one()).count() == 1);
        binary && row_ok && col_ok
    }
}

impl<T: Scalar> TransferMatrix<FirstOrder<T>> {
    /// Numeric matrix at a given polarization.
    pub fn at(&self, eps: T) -> TransferMatrix<T> {
        TransferMatrix {
            m: self.m.map(|row| row.map(|x| x.at(eps))),
            label: self.label,
        }
    }
}

impl<S: Scalar> Mul for TransferMatrix<S> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        let m = std::array::from_fn(|r| {
            std::array::from_fn(|c| {
                (0..4).fold(S::zero(), |acc, k| acc + self.m[r][k] * rhs.m[k][c])
            })
        });
        Self {
            m,
            label: TransferLabel::Composite,
        }
    }
}

pub fn permutation_matrix<S: Scalar>(kind: PermutationKind) -> TransferMatrix<S> {
    let mut m = [[S::zero(); 4]; 4];
    for (row, src) in kind.source_of().into_iter().enumerate() {
        m[row][src] = S::one();
    }
    TransferMatrix {
        m,
        label: TransferLabel::Permutation(kind),
    }
}

/// Triplet thermal reset: the singlet population is untouched and every
/// triplet column is replaced by the thermal triplet shape (1+ε, 1, 1−ε)/3.
pub fn ideal_reset<S: Scalar>(eps: S) -> Result<TransferMatrix<S>> {
    check_polarization(eps)?;
    let third = S::from_ratio(1, 3);
    let shape = [third * (S::one() + eps), third, third * (S::one() - eps)];
    let mut m = [[S::zero(); 4]; 4];
    m[0][0] = S::one();
    for (i, &s) in shape.iter().enumerate() {
        for col in 1..4 {
            m[i + 1][col] = s;
        }
    }
    Ok(TransferMatrix {
        m,
        label: TransferLabel::IdealReset,
    })
}

/// The pumping cycle (reset, π₁₂₄, reset, π₁₄₂) as the single matrix
/// π₁₄₂ · Θ · π₁₂₄ · Θ.
pub fn cycle_matrix<S: Scalar>(eps: S) -> Result<TransferMatrix<S>> {
    let reset = ideal_reset(eps)?;
    let c = permutation_matrix(PermutationKind::Pi142)
        * reset
        * permutation_matrix(PermutationKind::Pi124)
        * reset;
    Ok(c.with_label(TransferLabel::Cycle))
}

fn check_polarization<S: Scalar>(eps: S) -> Result<()> {
    if eps.leading().abs() >= 1.0 {
        Err(domain(format!("|ε| must be below 1, got {eps:?}")))
    } else {
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Step {
    Permute(PermutationKind),
    Reset,
    /// Free relaxation for the given number of seconds.
    Evolve(f64),
}

/// Chronologically ordered list of protocol steps.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ProtocolSequence {
    steps: Vec<Step>,
}

impl ProtocolSequence {
    pub fn new(steps: Vec<Step>) -> Self {
        Self { steps }
    }

    /// Pumping with `n_p` permutations: C^(n_p/2) for even n_p, and
    /// C^((n_p−1)/2) followed by (reset, π₁₂₄) for odd n_p, where
    /// C = (reset, π₁₂₄, reset, π₁₄₂).
    pub fn pumping(n_p: usize) -> Self {
        let cycle = [
            Step::Reset,
            Step::Permute(PermutationKind::Pi124),
            Step::Reset,
            Step::Permute(PermutationKind::Pi142),
        ];
        let mut steps: Vec<Step> = cycle.iter().copied().cycle().take(4 * (n_p / 2)).collect();
        if n_p % 2 == 1 {
            steps.push(Step::Reset);
            steps.push(Step::Permute(PermutationKind::Pi124));
        }
        Self { steps }
    }

    pub fn push(&mut self, step: Step) {
        self.steps.push(step);
    }

    pub fn then(mut self, step: Step) -> Self {
        self.steps.push(step);
        self
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn permutation_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s, Step::Permute(_)))
            .count()
    }

    /// Populations after every step, starting from `p0`. `resolve` supplies
    /// the transfer matrix of each step.
    pub fn trajectory<S, F>(
        &self,
        p0: PopulationVector<S>,
        mut resolve: F,
    ) -> Result<Vec<PopulationVector<S>>>
    where
        S: Scalar,
        F: FnMut(&Step) -> Result<TransferMatrix<S>>,
    {
        let mut out = Vec::with_capacity(self.steps.len());
        let mut p = p0;
        for step in &self.steps {
            p = resolve(step)?.apply(&p);
            out.push(p);
        }
        Ok(out)
    }

    pub fn run<S, F>(&self, p0: PopulationVector<S>, resolve: F) -> Result<PopulationVector<S>>
    where
        S: Scalar,
        F: FnMut(&Step) -> Result<TransferMatrix<S>>,
    {
        Ok(self.trajectory(p0, resolve)?.pop().unwrap_or(p0))
    }
}

/// Populations after `n_p` permutations of the ideal protocol, starting from
/// thermal equilibrium: C^(n_p/2)·p_eq for even n_p, π₁₂₄·Θ·p(n_p − 1) for odd.
pub fn run_ideal<S: Scalar>(n_p: usize, eps: S) -> Result<PopulationVector<S>> {
    let p_eq = thermal_populations(eps)?;
    let even = cycle_matrix(eps)?.pow(n_p / 2).apply(&p_eq);
    if n_p.is_multiple_of(2) {
        Ok(even)
    } else {
        let step = permutation_matrix(PermutationKind::Pi124) * ideal_reset(eps)?;
        Ok(step.apply(&even))
    }
}

/// ⟨SO⟩(n_p) = (−1)^n_p · (ε√3/4) · (1 − 3^(−n_p)).
pub fn closed_form_so(n_p: usize, eps: f64) -> f64 {
    let n = i32::try_from(n_p).unwrap_or(i32::MAX);
    let sign = if n_p.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * eps * 3f64.sqrt() / 4.0 * (1.0 - 3f64.powi(-n))
}

/// Limit of the ideal build-up for even n_p, +ε√3/4.
pub fn steady_state_so(eps: f64) -> f64 {
    eps * 3f64.sqrt() / 4.0
}

/// Ideal even-parity steady state.
pub fn ideal_steady_state<S: Scalar>(eps: S) -> Result<PopulationVector<S>> {
    run_ideal(STEADY_STATE_PERMUTATIONS, eps)
}

/// Converts pumped singlet order into Zeeman order: a further triplet reset
/// followed by the |1⟩ ↔ |2⟩ swap. Meant for even-n_p steady states.
pub fn enhance_zeeman<S: Scalar>(
    p_ss: &PopulationVector<S>,
    eps: S,
) -> Result<PopulationVector<S>> {
    let m = permutation_matrix(PermutationKind::Pi12) * ideal_reset(eps)?;
    Ok(m.apply(p_ss))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{measure_order, unitary_max_order, OrderObservable, SpinState};
    use num_rational::Ratio;
    use proptest::prelude::*;

    type E = FirstOrder<f64>;
    const SO: OrderObservable = OrderObservable::SingletOrder;
    const ZO: OrderObservable = OrderObservable::ZeemanOrder;

    fn so_at(n_p: usize, eps: f64) -> f64 {
        measure_order(&run_ideal(n_p, E::epsilon()).unwrap(), SO).at(eps)
    }

    #[test]
    fn permutation_matrices_match_their_definition() {
        let p124 = permutation_matrix::<f64>(PermutationKind::Pi124);
        let want = [
            [0.0, 0.0, 0.0, 1.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
        ];
        assert_eq!(p124.rows(), &want);
        let p142 = permutation_matrix::<f64>(PermutationKind::Pi142);
        assert_eq!(p142, p124.transpose().with_label(p142.label()));
        for kind in [
            PermutationKind::Pi124,
            PermutationKind::Pi142,
            PermutationKind::Pi12,
        ] {
            let m = permutation_matrix::<f64>(kind);
            assert!(m.is_permutation());
            assert!(TransferMatrix::new(*m.rows(), m.label()).is_ok());
        }
    }

    #[test]
    fn cyclic_permutations_are_inverse_three_cycles() {
        let p124 = permutation_matrix::<Ratio<i64>>(PermutationKind::Pi124);
        let p142 = permutation_matrix::<Ratio<i64>>(PermutationKind::Pi142);
        let id = TransferMatrix::<Ratio<i64>>::identity();
        assert_eq!((p124 * p142).rows(), id.rows());
        assert_eq!(p124.pow(3).rows(), id.rows());
        let p12 = permutation_matrix::<Ratio<i64>>(PermutationKind::Pi12);
        assert_eq!((p12 * p12).rows(), id.rows());
    }

    #[test]
    fn unknown_label_is_rejected() {
        assert!("pi123".parse::<PermutationKind>().is_err());
        assert_eq!(
            "Pi142".parse::<PermutationKind>().unwrap(),
            PermutationKind::Pi142
        );
    }

    #[test]
    fn single_permutation_of_thermal_state() {
        // π₁₂₄·p_eq = (1−ε, 1, 1, 1+ε)/4, SO = −√3ε/6
        let eps = Ratio::<i64>::new(1, 100);
        let p =
            permutation_matrix(PermutationKind::Pi124).apply(&thermal_populations(eps).unwrap());
        let q = Ratio::new(1, 4);
        let one = Ratio::from_integer(1);
        assert_eq!(p.as_array(), &[q * (one - eps), q, q, q * (one + eps)]);
        // SO/N_SO = −ε/3
        assert_eq!(p.singlet_imbalance(), -eps / Ratio::from_integer(3));

        let eps = 1e-4;
        let so = measure_order(
            &permutation_matrix(PermutationKind::Pi124).apply(&thermal_populations(eps).unwrap()),
            SO,
        );
        assert!((so + 3f64.sqrt() * eps / 6.0).abs() < 1e-12 * eps);
    }

    #[test]
    fn reset_fixes_thermal_state_and_singlet_population() {
        let eps = Ratio::<i64>::new(3, 100);
        let theta = ideal_reset(eps).unwrap();
        let p_eq = thermal_populations(eps).unwrap();
        assert_eq!(theta.apply(&p_eq), p_eq);

        let p = PopulationVector::new([
            Ratio::new(1, 2),
            Ratio::new(1, 8),
            Ratio::new(1, 4),
            Ratio::new(1, 8),
        ])
        .unwrap();
        assert_eq!(theta.apply(&p).get(SpinState::Singlet), Ratio::new(1, 2));

        // ε = 0: uniform redistribution over the triplets
        let flat = ideal_reset(Ratio::<i64>::from_integer(0))
            .unwrap()
            .apply(&p);
        let s = Ratio::new(1, 2) / Ratio::from_integer(3);
        assert_eq!(flat.as_array(), &[Ratio::new(1, 2), s, s, s]);
    }

    #[test]
    fn reset_rejects_unphysical_polarization() {
        assert!(ideal_reset(1.0f64).is_err());
        assert!(cycle_matrix(-2.0f64).is_err());
        assert!(run_ideal(3, 1.5f64).is_err());
    }

    #[test]
    fn cycle_is_column_stochastic_and_fixes_uniform_at_zero_polarization() {
        let c = cycle_matrix(0.013f64).unwrap();
        for s in c.column_sums() {
            assert!((s - 1.0).abs() < 1e-15);
        }
        assert!(TransferMatrix::new(*c.rows(), c.label()).is_ok());
        let c0 = cycle_matrix(Ratio::<i64>::from_integer(0)).unwrap();
        let u = PopulationVector::uniform();
        assert_eq!(c0.apply(&u), u);
    }

    #[test]
    fn cycle_powers_follow_closed_form() {
        let eps = 1e-4;
        let c = cycle_matrix(E::epsilon()).unwrap();
        let p_eq = thermal_populations(E::epsilon()).unwrap();
        for k in 1..=10 {
            let so = measure_order(&c.pow(k).apply(&p_eq), SO).at(eps);
            let want = closed_form_so(2 * k, eps);
            assert!((so - want).abs() < 1e-12 * eps, "k={k}: {so} vs {want}");
        }
    }

    #[test]
    fn run_ideal_small_n() {
        let eps = 2e-5;
        assert_eq!(so_at(0, eps), 0.0);
        assert!((so_at(1, eps) + 3f64.sqrt() * eps / 6.0).abs() < 1e-12 * eps);
        let six = so_at(6, eps) / steady_state_so(eps);
        assert!((six - (1.0 - 3f64.powi(-6))).abs() < 1e-9);
        assert!((six - 0.99863).abs() < 1e-5);
    }

    #[test]
    fn closed_form_limits() {
        assert_eq!(closed_form_so(0, 1e-4), 0.0);
        let eps = 1e-4;
        let bound = eps / (2.0 * 3f64.sqrt());
        let limit = closed_form_so(60, eps);
        assert!((limit / bound - 1.5).abs() < 1e-12);
        assert!((limit - steady_state_so(eps)).abs() < 1e-20);
    }

    #[test]
    fn closed_form_matches_matrix_engine() {
        let eps = 1e-4;
        for n in 0..=20 {
            assert!((so_at(n, eps) - closed_form_so(n, eps)).abs() < 1e-12 * eps);
        }
    }

    #[test]
    fn first_order_engine_is_the_linear_part_of_the_exact_one() {
        // exact rational algebra carries O(ε²) terms that the closed form drops:
        // SO(2)/N_SO = (4ε + ε²)/9 exactly, 4ε/9 to first order
        let eps = Ratio::<i128>::new(1, 100);
        let exact = run_ideal(2, eps).unwrap().singlet_imbalance();
        assert_eq!(
            exact,
            (Ratio::from_integer(4) * eps + eps * eps) / Ratio::from_integer(9)
        );

        let linear = run_ideal(2, FirstOrder::<Ratio<i128>>::epsilon()).unwrap();
        assert_eq!(
            linear.singlet_imbalance(),
            FirstOrder::new(Ratio::from_integer(0), Ratio::new(4, 9))
        );

        for n in 0..=8 {
            let lin = run_ideal(n, FirstOrder::<Ratio<i128>>::epsilon())
                .unwrap()
                .singlet_imbalance();
            // closed form divided by N_SO: (−1)^n (ε/2)(1 − 3^−n)
            let sign = if n % 2 == 0 { 1 } else { -1 };
            let pow3 = 3i128.pow(n as u32);
            let want = Ratio::new(sign * (pow3 - 1), 2 * pow3);
            assert_eq!(lin.c0, Ratio::from_integer(0));
            assert_eq!(lin.c1, want, "n = {n}");
        }
    }

    #[test]
    fn sequence_constructor_parity() {
        let even = ProtocolSequence::pumping(4);
        assert_eq!(even.steps().len(), 8);
        assert_eq!(even.permutation_count(), 4);
        assert_eq!(
            &even.steps()[..4],
            &[
                Step::Reset,
                Step::Permute(PermutationKind::Pi124),
                Step::Reset,
                Step::Permute(PermutationKind::Pi142)
            ]
        );
        let odd = ProtocolSequence::pumping(5);
        assert_eq!(odd.permutation_count(), 5);
        assert_eq!(
            &odd.steps()[8..],
            &[Step::Reset, Step::Permute(PermutationKind::Pi124)]
        );
        assert!(ProtocolSequence::pumping(0).steps().is_empty());
    }

    #[test]
    fn stepping_the_sequence_agrees_with_matrix_powers() {
        let eps = E::epsilon();
        for n in 0..=12 {
            let stepped = ProtocolSequence::pumping(n)
                .run(thermal_populations(eps).unwrap(), |step| match step {
                    Step::Reset => ideal_reset(eps),
                    Step::Permute(k) => Ok(permutation_matrix(*k)),
                    Step::Evolve(_) => unreachable!(),
                })
                .unwrap();
            let direct = run_ideal(n, eps).unwrap();
            for (a, b) in stepped.as_array().iter().zip(direct.as_array()) {
                assert!((a.c0 - b.c0).abs() < 1e-15 && (a.c1 - b.c1).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn enhancement_of_steady_state() {
        let eps = 3e-5;
        let p_ss = ideal_steady_state(E::epsilon()).unwrap();
        let out = enhance_zeeman(&p_ss, E::epsilon()).unwrap();
        let zo = measure_order(&out, ZO).at(eps);
        let want = 3.0 * eps / (4.0 * 2f64.sqrt());
        // residual of the finite pump is (√3/4)·3⁻²⁰ in SO units
        assert!((zo - want).abs() < 1e-9 * want, "{zo} vs {want}");
        let zo_eq = eps / (2.0 * 2f64.sqrt());
        assert!((zo / zo_eq - 1.5).abs() < 1e-9);
    }

    #[test]
    fn enhancement_of_thermal_state_halves_zeeman_order() {
        // π₁₂·Θ·p_eq = (1+ε, 1, 1, 1−ε)/4 ⇒ ZO = ε/(4√2)
        let eps = Ratio::<i64>::new(1, 50);
        let out = enhance_zeeman(&thermal_populations(eps).unwrap(), eps).unwrap();
        assert_eq!(out.zeeman_imbalance(), eps / Ratio::from_integer(4));
        let out = enhance_zeeman(&thermal_populations(0.0f64).unwrap(), 0.0).unwrap();
        assert_eq!(measure_order(&out, ZO), 0.0);
    }

    #[test]
    fn pumping_beats_the_unitary_bound_only_after_a_reset() {
        let eps = 1e-4;
        let p_eq = thermal_populations(eps).unwrap();
        let bound = unitary_max_order(&p_eq, SO);
        for kind in [
            PermutationKind::Pi124,
            PermutationKind::Pi142,
            PermutationKind::Pi12,
        ] {
            let so = measure_order(&permutation_matrix(kind).apply(&p_eq), SO);
            assert!(so <= bound + 1e-18);
        }
        assert!(so_at(2, eps) > bound);
    }

    proptest! {
        #[test]
        fn build_up_is_monotone_bounded_and_alternating(eps in 1e-6..1e-2f64) {
            let limit = steady_state_so(eps);
            let mut prev = 0.0;
            for n in 1..=20 {
                let so = so_at(n, eps);
                prop_assert!(so.abs() > prev);
                prop_assert!(so.abs() < limit);
                prop_assert_eq!(so.signum(), if n % 2 == 0 { 1.0 } else { -1.0 });
                prev = so.abs();
            }
        }

        #[test]
        fn transfer_matrices_conserve_population(
            eps in -0.9..0.9f64,
            w in prop::array::uniform4(0.0..1.0f64),
            k in 0usize..6,
        ) {
            let s: f64 = w.iter().sum::<f64>() + 1e-9;
            let p = PopulationVector::new(w.map(|x| (x + 1e-9 / 4.0) / s)).unwrap();
            let mats = [
                ideal_reset(eps).unwrap(),
                cycle_matrix(eps).unwrap().pow(k),
                permutation_matrix(PermutationKind::Pi12) * ideal_reset(eps).unwrap(),
            ];
            for m in mats {
                prop_assert!(TransferMatrix::new(*m.rows(), m.label()).is_ok());
                let q = m.apply(&p);
                prop_assert!(PopulationVector::new(*q.as_array()).is_ok());
            }
        }
    }
}
