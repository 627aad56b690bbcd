//! State sets, their Gram matrix, and the clonable partition.
//!
//! A set `S` of pure states is split greedily (in input order) into a maximal
//! linearly independent subset `S_m` and the dependent remainder `S'_m`. Each
//! dependent state is expanded over `S_m`; a state of `S_m` that is used by no
//! such expansion (usage weight `A_j = Σ_J |a_j^(J)| = 0`) is clonable.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrixkit::{self, hermitian_eig, CMatrix};

/// Inputs whose norm is this close to 1 are renormalized instead of rejected.
pub const NORMALIZATION_SLACK: f64 = 1e-6;
/// Norm deviations below this are float noise and not reported as renormalization.
const ROUNDING_NOISE: f64 = 1e-12;
/// Residual-norm threshold for linear independence.
pub const INDEPENDENCE_TOL: f64 = 1e-8;
/// A usage weight at or below this counts as zero.
pub const USAGE_TOL: f64 = 1e-8;

/// A normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct QState {
    amplitudes: Vec<Complex64>,
}

impl QState {
    /// Normalizes `amplitudes`; fails only for the zero vector.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let n = matrixkit::norm(&amplitudes);
        if n < NORMALIZATION_SLACK {
            return Err(Error::ZeroVector { index: 0 });
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|z| z / n).collect(),
        })
    }

    /// Real-amplitude convenience constructor.
    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::normalized(amplitudes.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Computational basis state `|k⟩` in dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[k] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &QState) -> Complex64 {
        matrixkit::inner(&self.amplitudes, &other.amplitudes)
    }

    /// True when the states differ at most by a global phase.
    pub fn same_up_to_phase(&self, other: &QState, tol: f64) -> bool {
        self.dim() == other.dim() && self.overlap(other).norm() >= 1.0 - tol
    }
}

/// An ordered list of states with their Gram matrix `X⁽¹⁾`.
#[derive(Debug, Clone)]
pub struct StateSet {
    dim: usize,
    states: Vec<QState>,
    gram: CMatrix,
    renormalized: Vec<usize>,
}

impl StateSet {
    /// Validates raw amplitude vectors and computes the Gram matrix.
    pub fn load(dim: usize, raw: Vec<Vec<Complex64>>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::EmptySet);
        }
        let mut states = Vec::with_capacity(raw.len());
        let mut renormalized = Vec::new();
        for (index, amps) in raw.into_iter().enumerate() {
            if amps.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: amps.len(),
                    index: Some(index),
                });
            }
            if let Some(col) = amps
                .iter()
                .position(|z| !z.re.is_finite() || !z.im.is_finite())
            {
                return Err(Error::NonFinite { row: index, col });
            }
            let norm = matrixkit::norm(&amps);
            if norm < NORMALIZATION_SLACK {
                return Err(Error::ZeroVector { index });
            }
            if (norm - 1.0).abs() > NORMALIZATION_SLACK {
                return Err(Error::NotNormalized { index, norm });
            }
            if (norm - 1.0).abs() > ROUNDING_NOISE {
                renormalized.push(index);
            }
            states.push(QState {
                amplitudes: amps.into_iter().map(|z| z / norm).collect(),
            });
        }
        Ok(Self::from_states_unchecked(dim, states, renormalized))
    }

    /// Builds a set from already-normalized states.
    pub fn from_states(states: Vec<QState>) -> Result<Self> {
        let dim = states.first().ok_or(Error::EmptySet)?.dim();
        if let Some((index, s)) = states.iter().enumerate().find(|(_, s)| s.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: s.dim(),
                index: Some(index),
            });
        }
        Ok(Self::from_states_unchecked(dim, states, Vec::new()))
    }

    fn from_states_unchecked(dim: usize, states: Vec<QState>, renormalized: Vec<usize>) -> Self {
        let n = states.len();
        let mut gram = CMatrix::from_fn(n, n, |j, k| states[j].overlap(&states[k]));
        for j in 0..n {
            gram[(j, j)] = Complex64::new(1.0, 0.0);
            for k in j + 1..n {
                gram[(k, j)] = gram[(j, k)].conj();
            }
        }
        Self {
            dim,
            states,
            gram,
            renormalized,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[QState] {
        &self.states
    }

    pub fn state(&self, index: usize) -> &QState {
        &self.states[index]
    }

    /// `X⁽¹⁾[j][k] = ⟨Ψ_j|Ψ_k⟩`.
    pub fn gram(&self) -> &CMatrix {
        &self.gram
    }

    /// Indices whose input norm was slightly off 1 and got renormalized.
    pub fn renormalized(&self) -> &[usize] {
        &self.renormalized
    }

    /// Count of Gram eigenvalues above `tol`.
    pub fn spectral_rank(&self, tol: f64) -> usize {
        hermitian_eig(&self.gram)
            .map(|e| e.eigenvalues.iter().filter(|&&l| l > tol).count())
            .unwrap_or(0)
    }
}

/// Expansion `Ψ_J = Σ_j a_j Ψ_j` of one dependent state over `S_m`.
#[derive(Debug, Clone)]
pub struct Expansion {
    pub state: usize,
    pub coefficients: Vec<Complex64>,
    pub residual: f64,
}

/// Greedy maximal independent subset, in input order.
#[derive(Debug, Clone)]
pub struct IndependentSubset {
    pub indices: Vec<usize>,
    /// Coefficients are aligned with `indices`.
    pub expansions: Vec<Expansion>,
}

/// Scans states in input order; a state joins `S_m` iff its residual against
/// the current `S_m` exceeds `tol`, otherwise its expansion is recorded.
pub fn maximal_independent_subset(set: &StateSet, tol: f64) -> Result<IndependentSubset> {
    let mut indices: Vec<usize> = Vec::new();
    let mut pending: Vec<Expansion> = Vec::new();
    for (j, state) in set.states().iter().enumerate() {
        if indices.is_empty() {
            indices.push(j);
            continue;
        }
        let basis: Vec<Vec<Complex64>> = indices
            .iter()
            .map(|&i| set.state(i).amplitudes().to_vec())
            .collect();
        let fit = matrixkit::least_squares_in_span(&basis, state.amplitudes())?;
        if fit.residual_norm > tol {
            indices.push(j);
        } else {
            pending.push(Expansion {
                state: j,
                coefficients: fit.coefficients,
                residual: fit.residual_norm,
            });
        }
    }
    let m = indices.len();
    let expansions = pending
        .into_iter()
        .map(|mut e| {
            e.coefficients.resize(m, Complex64::new(0.0, 0.0));
            e
        })
        .collect();
    Ok(IndependentSubset {
        indices,
        expansions,
    })
}

/// Index decomposition `S = {S_l, S_m\S_l, S'_m}`.
///
/// `independent` is stored in canonical order: the clonable states first, then
/// the blocked ones, each in input order. Every per-`S_m` vector in this crate
/// (expansion coefficients, usage weights, efficiencies, Gram restrictions) is
/// aligned with that order.
#[derive(Debug, Clone)]
pub struct Partition {
    pub independent: Vec<usize>,
    pub dependent: Vec<usize>,
    pub clonable: Vec<usize>,
    pub blocked: Vec<usize>,
    pub expansions: Vec<Expansion>,
    pub usage: Vec<f64>,
}

impl Partition {
    pub fn m(&self) -> usize {
        self.independent.len()
    }

    pub fn l(&self) -> usize {
        self.clonable.len()
    }

    /// Whether part cloning is possible at all.
    pub fn part_clonable(&self) -> bool {
        !self.clonable.is_empty()
    }

    /// `S_l` followed by `S_m\S_l` followed by `S'_m`.
    pub fn canonical_order(&self) -> Vec<usize> {
        self.independent
            .iter()
            .chain(&self.dependent)
            .copied()
            .collect()
    }

    /// Gram matrix restricted to `S_m` in canonical order.
    pub fn gram_m(&self, set: &StateSet) -> CMatrix {
        set.gram().submatrix(&self.independent)
    }

    /// The states of `S_m` in canonical order.
    pub fn independent_states<'a>(&self, set: &'a StateSet) -> Vec<&'a QState> {
        self.independent.iter().map(|&i| set.state(i)).collect()
    }

    /// Position of input index `state` within `independent`, if any.
    pub fn position(&self, state: usize) -> Option<usize> {
        self.independent.iter().position(|&i| i == state)
    }
}

/// Computes usage weights and the clonable subset.
pub fn clonable_partition(set: &StateSet, subset: &IndependentSubset) -> Partition {
    let m = subset.indices.len();
    let mut usage = vec![0.0; m];
    for e in &subset.expansions {
        for (u, a) in usage.iter_mut().zip(&e.coefficients) {
            *u += a.norm();
        }
    }
    let (clonable_pos, blocked_pos): (Vec<usize>, Vec<usize>) =
        (0..m).partition(|&p| usage[p] <= USAGE_TOL);
    let order: Vec<usize> = clonable_pos.iter().chain(&blocked_pos).copied().collect();

    let clonable: Vec<usize> = clonable_pos.iter().map(|&p| subset.indices[p]).collect();
    let blocked: Vec<usize> = blocked_pos.iter().map(|&p| subset.indices[p]).collect();
    let expansions = subset
        .expansions
        .iter()
        .map(|e| Expansion {
            state: e.state,
            coefficients: order.iter().map(|&p| e.coefficients[p]).collect(),
            residual: e.residual,
        })
        .collect::<Vec<_>>();
    let dependent = expansions.iter().map(|e| e.state).collect();
    debug_assert!(dependent_len_ok(set, m, &expansions));
    Partition {
        independent: order.iter().map(|&p| subset.indices[p]).collect(),
        dependent,
        clonable,
        blocked,
        expansions,
        usage: order.iter().map(|&p| usage[p]).collect(),
    }
}

fn dependent_len_ok(set: &StateSet, m: usize, expansions: &[Expansion]) -> bool {
    m + expansions.len() == set.len()
}

/// Runs the greedy scan and the partition with default tolerances.
pub fn analyze(set: &StateSet) -> Result<Partition> {
    let subset = maximal_independent_subset(set, INDEPENDENCE_TOL)?;
    Ok(clonable_partition(set, &subset))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn load_orthonormal_pair() {
        let set = StateSet::load(2, vec![vec![c(1.0), c(0.0)], vec![c(0.0), c(1.0)]]).unwrap();
        assert!(set.gram().max_abs_diff(&CMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn load_overlapping_pair() {
        let set = StateSet::load(
            2,
            vec![
                vec![c(1.0), c(0.0)],
                vec![c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)],
            ],
        )
        .unwrap();
        let expected = CMatrix::from_real_rows(&[&[1.0, FRAC_1_SQRT_2], &[FRAC_1_SQRT_2, 1.0]]);
        assert!(set.gram().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn load_errors() {
        assert_eq!(
            StateSet::load(2, vec![vec![c(0.0), c(0.0)]]).unwrap_err(),
            Error::ZeroVector { index: 0 }
        );
        assert_eq!(StateSet::load(2, vec![]).unwrap_err(), Error::EmptySet);
        assert!(matches!(
            StateSet::load(2, vec![vec![c(1.0), c(0.0)], vec![c(1.0)]]).unwrap_err(),
            Error::DimensionMismatch { index: Some(1), .. }
        ));
        assert!(matches!(
            StateSet::load(2, vec![vec![c(1.1), c(0.0)]]).unwrap_err(),
            Error::NotNormalized { index: 0, .. }
        ));
    }

    #[test]
    fn load_renormalizes_near_unit() {
        let set = StateSet::load(2, vec![vec![c(1.0 + 5e-7), c(0.0)]]).unwrap();
        assert_eq!(set.renormalized(), &[0]);
        assert!((matrixkit::norm(set.state(0).amplitudes()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn subset_with_orthonormal_prefix() {
        let set = instances::three_state_blocked();
        let sub = maximal_independent_subset(&set, INDEPENDENCE_TOL).unwrap();
        assert_eq!(sub.indices, vec![0, 1]);
        assert_eq!(sub.expansions.len(), 1);
        for a in &sub.expansions[0].coefficients {
            assert!((a - c(FRAC_1_SQRT_2)).norm() < 1e-12);
        }
    }

    #[test]
    fn four_state_partition() {
        let set = instances::four_state();
        let sub = maximal_independent_subset(&set, INDEPENDENCE_TOL).unwrap();
        assert_eq!(sub.indices, vec![0, 1, 2]);
        let part = clonable_partition(&set, &sub);
        assert_eq!(part.clonable, vec![0]);
        assert_eq!(part.blocked, vec![1, 2]);
        assert_eq!(part.dependent, vec![3]);
        let inv_sqrt3 = 1.0 / 3f64.sqrt();
        let expected = [0.0, inv_sqrt3, inv_sqrt3];
        for (u, e) in part.usage.iter().zip(expected) {
            assert!((u - e).abs() < 1e-12);
        }
        for (a, e) in part.expansions[0].coefficients.iter().zip(expected) {
            assert!((a - c(e)).norm() < 1e-12);
        }
    }

    #[test]
    fn blocked_set_has_no_clonable_states() {
        let set = instances::three_state_blocked();
        let part = analyze(&set).unwrap();
        assert!(part.clonable.is_empty());
        assert!(!part.part_clonable());
        for u in &part.usage {
            assert!((u - FRAC_1_SQRT_2).abs() < 1e-12);
        }
    }

    #[test]
    fn independent_set_is_fully_clonable() {
        let set = instances::orthonormal(2);
        let part = analyze(&set).unwrap();
        assert_eq!(part.clonable, vec![0, 1]);
        assert!(part.dependent.is_empty());
        assert_eq!(part.l(), part.m());
    }

    #[test]
    fn canonical_order_puts_clonable_first() {
        // Ψ0 = e0 is blocked (used by Ψ3), Ψ2 = e2 is clonable.
        let s = FRAC_1_SQRT_2;
        let set = StateSet::from_states(vec![
            QState::from_real(&[1.0, 0.0, 0.0]).unwrap(),
            QState::from_real(&[0.0, 1.0, 0.0]).unwrap(),
            QState::from_real(&[0.0, 0.0, 1.0]).unwrap(),
            QState::from_real(&[s, s, 0.0]).unwrap(),
        ])
        .unwrap();
        let part = analyze(&set).unwrap();
        assert_eq!(part.independent, vec![2, 0, 1]);
        assert_eq!(part.canonical_order(), vec![2, 0, 1, 3]);
        let coeffs = &part.expansions[0].coefficients;
        assert!(coeffs[0].norm() < 1e-12);
        assert!((coeffs[1] - c(s)).norm() < 1e-12);
    }

    #[test]
    fn phase_equality() {
        let a = QState::from_real(&[0.6, 0.8]).unwrap();
        let b = QState::normalized(
            a.amplitudes()
                .iter()
                .map(|z| z * Complex64::from_polar(1.0, 0.7))
                .collect(),
        )
        .unwrap();
        assert!(a.same_up_to_phase(&b, 1e-12));
        assert!(!a.same_up_to_phase(&QState::from_real(&[0.8, 0.6]).unwrap(), 1e-12));
    }
}
