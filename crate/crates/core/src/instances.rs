//! Reference state sets used by tests, the acceptance suite, and the docs.

use num_complex::Complex64;

use crate::stateset::{QState, StateSet};

/// `Ψ₁ = e₀, Ψ₂ = (e₀+e₁)/√2, Ψ₃ = (e₀+e₂)/√2, Ψ₄ = (Ψ₂+Ψ₃)/√3`.
///
/// `Ψ₁` is the only clonable state; its optimal efficiency is 1/3.
pub fn four_state() -> StateSet {
    StateSet::from_states(vec![
        QState::from_real(&[1.0, 0.0, 0.0]).unwrap(),
        QState::from_real(&[1.0, 1.0, 0.0]).unwrap(),
        QState::from_real(&[1.0, 0.0, 1.0]).unwrap(),
        QState::from_real(&[2.0, 1.0, 1.0]).unwrap(),
    ])
    .unwrap()
}

/// `{e₀, e₁, (e₀+e₁)/√2}`: both independent states are used by the third, nothing is clonable.
pub fn three_state_blocked() -> StateSet {
    StateSet::from_states(vec![
        QState::from_real(&[1.0, 0.0]).unwrap(),
        QState::from_real(&[0.0, 1.0]).unwrap(),
        QState::from_real(&[1.0, 1.0]).unwrap(),
    ])
    .unwrap()
}

/// The first `n` computational basis states of dimension `n`.
pub fn orthonormal(n: usize) -> StateSet {
    StateSet::from_states((0..n).map(|k| QState::basis(n, k)).collect()).unwrap()
}

/// Two real qubit states with overlap `s` (0 ≤ s < 1).
pub fn two_state(s: f64) -> StateSet {
    let theta = s.acos();
    StateSet::from_states(vec![
        QState::basis(2, 0),
        QState::normalized(vec![
            Complex64::new(s, 0.0),
            Complex64::new(theta.sin(), 0.0),
        ])
        .unwrap(),
    ])
    .unwrap()
}
