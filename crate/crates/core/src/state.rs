//! State space of a single spin-1/2 pair: physical parameters, thermal
//! populations, the Zeeman and singlet order observables and their unitary
//! bounds.
//!
//! States are always indexed as (singlet |1⟩, |αα⟩ = |2⟩, central triplet |3⟩,
//! |ββ⟩ = |4⟩).

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{domain, Error, Result};
use crate::scalar::{FirstOrder, Scalar};

/// Reduced Planck constant, J·s (CODATA 2018).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K (CODATA 2018, exact).
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Magnetogyric ratio of ¹³C, rad·s⁻¹·T⁻¹.
pub const GAMMA_13C: f64 = 6.728_284e7;

/// Validation tolerance for population sums and signs.
pub const POPULATION_TOLERANCE: f64 = 1e-12;

/// Above this the high-temperature expansion is suspect.
const EPSILON_WARN: f64 = 0.01;

/// Basis states of the pair in the fixed order used by every vector and matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpinState {
    Singlet,
    AlphaAlpha,
    Central,
    BetaBeta,
}

impl SpinState {
    pub const ALL: [SpinState; 4] = [
        SpinState::Singlet,
        SpinState::AlphaAlpha,
        SpinState::Central,
        SpinState::BetaBeta,
    ];

    pub const fn index(self) -> usize {
        match self {
            SpinState::Singlet => 0,
            SpinState::AlphaAlpha => 1,
            SpinState::Central => 2,
            SpinState::BetaBeta => 3,
        }
    }
}

/// Physical constants of the spin pair and its environment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinSystemParams {
    /// Scalar coupling, Hz.
    pub j_coupling: f64,
    /// Chemical-shift difference, ppm.
    pub delta_shift: f64,
    /// Static field, T.
    pub b0: f64,
    /// Magnetogyric ratio, rad·s⁻¹·T⁻¹.
    pub gamma: f64,
    /// Sample temperature, K.
    pub temperature: f64,
    /// Longitudinal relaxation time, s.
    pub t1: f64,
    /// Singlet-order decay time, s.
    pub ts: f64,
}

impl Default for SpinSystemParams {
    /// The ¹³C₂-labelled naphthalene derivative at 16.45 T and room temperature.
    fn default() -> Self {
        Self {
            j_coupling: 54.141,
            delta_shift: 0.057,
            b0: 16.45,
            gamma: GAMMA_13C,
            temperature: 298.0,
            t1: 7.36,
            ts: 214.0,
        }
    }
}

impl SpinSystemParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.j_coupling,
            self.delta_shift,
            self.b0,
            self.gamma,
            self.temperature,
            self.t1,
            self.ts,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(domain("spin-system parameters must be finite"));
        }
        if self.j_coupling == 0.0 {
            return Err(domain("J coupling must be nonzero"));
        }
        if self.b0 <= 0.0 {
            return Err(domain(format!("field must be positive, got {} T", self.b0)));
        }
        if self.temperature <= 0.0 {
            return Err(domain(format!(
                "temperature must be positive, got {} K",
                self.temperature
            )));
        }
        if self.t1 <= 0.0 {
            return Err(domain(format!("T1 must be positive, got {} s", self.t1)));
        }
        if self.ts <= self.t1 {
            return Err(domain(format!(
                "singlet lifetime must exceed T1 (TS = {} s, T1 = {} s)",
                self.ts, self.t1
            )));
        }
        Ok(())
    }

    /// Chemical-shift frequency difference ω_Δ = γ·B₀·Δδ, rad/s.
    pub fn shift_difference(&self) -> f64 {
        self.gamma * self.b0 * self.delta_shift * 1e-6
    }

    /// Scalar coupling as an angular frequency, rad/s.
    pub fn coupling_angular(&self) -> f64 {
        2.0 * PI * self.j_coupling
    }

    pub fn epsilon(&self) -> Result<f64> {
        epsilon(self)
    }
}

/// Thermal polarization parameter ε = ħγB₀/(k_B·T).
pub fn epsilon(params: &SpinSystemParams) -> Result<f64> {
    if !(params.temperature > 0.0) {
        return Err(domain(format!(
            "temperature must be positive, got {} K",
            params.temperature
        )));
    }
    if !(params.b0 > 0.0) {
        return Err(domain(format!(
            "field must be positive, got {} T",
            params.b0
        )));
    }
    let eps = HBAR * params.gamma * params.b0 / (BOLTZMANN * params.temperature);
    if eps.abs() > EPSILON_WARN {
        log::warn!("polarization ε = {eps:.3e} is outside the high-temperature regime");
    }
    Ok(eps)
}

/// Populations of the four states. Entries are nonnegative and sum to one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PopulationVector<S> {
    p: [S; 4],
}

impl<S: Scalar> PopulationVector<S> {
    /// Validates the populations; entries negative by less than the tolerance
    /// are clamped to exactly zero.
    pub fn new(p: [S; 4]) -> Result<Self> {
        let tol = S::tolerance(POPULATION_TOLERANCE);
        let mut p = p;
        for (i, x) in p.iter_mut().enumerate() {
            if !x.is_nonnegative(tol) {
                return Err(Error::Invariant(format!(
                    "population {} is negative: {:?}",
                    i + 1,
                    x
                )));
            }
            if !x.is_nonnegative(0.0) {
                *x = S::zero();
            }
        }
        let sum = p[0] + p[1] + p[2] + p[3];
        if !(sum - S::one()).is_negligible(tol) {
            return Err(Error::Invariant(format!(
                "populations sum to {sum:?}, expected 1"
            )));
        }
        Ok(Self { p })
    }

    pub(crate) fn from_array_unchecked(p: [S; 4]) -> Self {
        Self { p }
    }

    /// The maximally mixed state.
    pub fn uniform() -> Self {
        let q = S::from_ratio(1, 4);
        Self { p: [q; 4] }
    }

    /// All population in `state`.
    pub fn pure(state: SpinState) -> Self {
        let mut p = [S::zero(); 4];
        p[state.index()] = S::one();
        Self { p }
    }

    pub fn as_array(&self) -> &[S; 4] {
        &self.p
    }

    pub fn get(&self, state: SpinState) -> S {
        self.p[state.index()]
    }

    /// p₁ − (p₂ + p₃ + p₄)/3, singlet order without its normalization.
    pub fn singlet_imbalance(&self) -> S {
        self.p[0] - (self.p[1] + self.p[2] + self.p[3]) / S::from_ratio(3, 1)
    }

    /// p₂ − p₄, Zeeman order without its normalization.
    pub fn zeeman_imbalance(&self) -> S {
        self.p[1] - self.p[3]
    }

    /// Entry `i` of the result is entry `perm[i]` of `self`.
    pub fn permuted(&self, perm: [usize; 4]) -> Self {
        Self {
            p: perm.map(|i| self.p[i]),
        }
    }
}

impl<T: Scalar> PopulationVector<FirstOrder<T>> {
    /// Numeric populations at a given polarization.
    pub fn at(&self, eps: T) -> PopulationVector<T> {
        PopulationVector {
            p: self.p.map(|x| x.at(eps)),
        }
    }
}

/// Thermal equilibrium populations (1, 1+ε, 1, 1−ε)/4 of the high-temperature
/// expansion.
pub fn thermal_populations<S: Scalar>(eps: S) -> Result<PopulationVector<S>> {
    if eps.leading().abs() >= 1.0 {
        return Err(domain(format!(
            "|ε| must be below 1 for the high-temperature expansion, got {:?}",
            eps
        )));
    }
    let q = S::from_ratio(1, 4);
    Ok(PopulationVector {
        p: [q, q * (S::one() + eps), q, q * (S::one() - eps)],
    })
}

/// The two population-level order observables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OrderObservable {
    ZeemanOrder,
    SingletOrder,
}

impl OrderObservable {
    pub fn normalization(self) -> f64 {
        match self {
            OrderObservable::ZeemanOrder => FRAC_1_SQRT_2,
            OrderObservable::SingletOrder => 3f64.sqrt() / 2.0,
        }
    }

    /// Eigenvalue of the observable on each basis state.
    pub fn eigenvalues<S: Scalar>(self) -> [S; 4] {
        let n = S::from_f64(self.normalization());
        match self {
            OrderObservable::ZeemanOrder => [S::zero(), n, S::zero(), -n],
            OrderObservable::SingletOrder => {
                let t = -n / S::from_ratio(3, 1);
                [n, t, t, t]
            }
        }
    }
}

/// ⟨ZO⟩ = (p₂ − p₄)/√2 or ⟨SO⟩ = (√3/2)(p₁ − (p₂+p₃+p₄)/3).
pub fn measure_order<S: Scalar>(p: &PopulationVector<S>, obs: OrderObservable) -> S {
    let n = S::from_f64(obs.normalization());
    match obs {
        OrderObservable::ZeemanOrder => n * p.zeeman_imbalance(),
        OrderObservable::SingletOrder => n * p.singlet_imbalance(),
    }
}

/// Largest value of `obs` reachable from `p` by any unitary transformation:
/// populations and observable eigenvalues, both sorted in descending order,
/// paired term by term.
pub fn unitary_max_order<S: Scalar + PartialOrd>(
    p: &PopulationVector<S>,
    obs: OrderObservable,
) -> S {
    let desc = |a: &S, b: &S| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal);
    let mut pops = p.p;
    pops.sort_by(desc);
    let mut eig = obs.eigenvalues::<S>();
    eig.sort_by(desc);
    pops.iter()
        .zip(eig.iter())
        .fold(S::zero(), |acc, (&x, &l)| acc + x * l)
}
