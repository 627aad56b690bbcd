//! Explicit 1→N part cloning maps and their simulation.
//!
//! The composite space is `x ⊗ y₁ ⊗ … ⊗ y_{N−1} ⊗ z`, with `x` and every copy
//! register of the input dimension `d`. The flag register `z` has
//! `r + m` levels: the first `r = rank(P)` span the success subspace `H_p`,
//! the remaining `m` carry the failure branch. Basis index is
//! `copy_index · (r + m) + z_level`, `x` being the most significant factor.
//!
//! For `Ψ_j ∈ S_m` the map produces
//!
//! ```text
//! O_j = √γ_j · Ψ_j^{⊗N} ⊗ f_j  +  Σ_k C[k][j] · |0…0⟩ ⊗ |r + k⟩
//! ```
//!
//! where `f_j` realizes the flag overlaps and `C` is the Hermitian square root
//! of the residual `X⁽¹⁾ − √Γ X_z √Γ`, so `⟨O_j|O_k⟩ = ⟨Ψ_j|Ψ_k⟩`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::feasibility::{
    evaluate_unguarded, is_feasible, EfficiencySpec, FeasibilityReport, PGram,
};
use crate::matrixkit::{self, hermitian_eig, psd_sqrt, CMatrix, PSD_TOL};
use crate::stateset::{Partition, QState, StateSet, INDEPENDENCE_TOL};

/// Gram-preservation tolerance for a synthesized map.
pub const ISOMETRY_TOL: f64 = 1e-9;
/// Success probability at or below this counts as "never succeeds".
pub const SUCCESS_FLOOR: f64 = 1e-12;
/// Largest composite dimension represented densely.
pub const MAX_DENSE_DIM: usize = 1 << 16;
/// Largest composite dimension for which a full unitary is materialized.
pub const MAX_UNITARY_DIM: usize = 1024;

const COMPLETION_THRESHOLD: f64 = 1e-8;
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone)]
pub struct CloningMap {
    input_dim: usize,
    n_copies: usize,
    flag_rank: usize,
    input_states: Vec<QState>,
    input_indices: Vec<usize>,
    gamma: Vec<f64>,
    output_columns: CMatrix,
    c_matrix: CMatrix,
    gram_deviation: f64,
}

impl CloningMap {
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn n_copies(&self) -> usize {
        self.n_copies
    }

    /// Dimension of `H_p`.
    pub fn flag_rank(&self) -> usize {
        self.flag_rank
    }

    /// Number of failure levels in `z` (`= |S_m|`).
    pub fn failure_dim(&self) -> usize {
        self.input_states.len()
    }

    pub fn z_dim(&self) -> usize {
        self.flag_rank + self.failure_dim()
    }

    /// `d^N`: dimension of `x` together with the copy registers.
    pub fn copy_dim(&self) -> usize {
        self.input_dim.pow(self.n_copies as u32)
    }

    pub fn total_dim(&self) -> usize {
        self.copy_dim() * self.z_dim()
    }

    /// The states of `S_m` in canonical order.
    pub fn input_states(&self) -> &[QState] {
        &self.input_states
    }

    /// Input-set indices of the columns.
    pub fn input_indices(&self) -> &[usize] {
        &self.input_indices
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// Column `j` is the image of `Ψ_j`.
    pub fn output_columns(&self) -> &CMatrix {
        &self.output_columns
    }

    pub fn c_matrix(&self) -> &CMatrix {
        &self.c_matrix
    }

    /// `max |⟨O_j|O_k⟩ − ⟨Ψ_j|Ψ_k⟩|` measured at construction.
    pub fn gram_deviation(&self) -> f64 {
        self.gram_deviation
    }

    fn is_success_level(&self, index: usize) -> bool {
        index % self.z_dim() < self.flag_rank
    }

    /// Dense projector onto `(x ⊗ copies) ⊗ H_p`.
    pub fn success_projector(&self) -> CMatrix {
        let n = self.total_dim();
        let mut p = CMatrix::zeros(n, n);
        for i in (0..n).filter(|&i| self.is_success_level(i)) {
            p[(i, i)] = ONE;
        }
        p
    }

    /// `Ψ_j ⊗ |0…0⟩_copies ⊗ |0⟩_z` for each `Ψ_j ∈ S_m`, as columns.
    pub fn embedded_inputs(&self) -> CMatrix {
        let stride = self.copy_dim() / self.input_dim * self.z_dim();
        let mut e = CMatrix::zeros(self.total_dim(), self.failure_dim());
        for (j, s) in self.input_states.iter().enumerate() {
            for (a, &amp) in s.amplitudes().iter().enumerate() {
                e[(a * stride, j)] = amp;
            }
        }
        e
    }

    /// Linear combination `Σ_j a_j O_j`.
    pub fn apply(&self, coefficients: &[Complex64]) -> Vec<Complex64> {
        self.output_columns.mul_vec(coefficients)
    }

    /// Expansion of `input` over `S_m`; errors when it is not in the span.
    pub fn expand(&self, input: &QState) -> Result<Vec<Complex64>> {
        if input.dim() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                found: input.dim(),
                index: None,
            });
        }
        let basis: Vec<Vec<Complex64>> = self
            .input_states
            .iter()
            .map(|s| s.amplitudes().to_vec())
            .collect();
        let fit = matrixkit::least_squares_in_span(&basis, input.amplitudes())?;
        if fit.residual_norm > INDEPENDENCE_TOL {
            return Err(Error::OutOfSpan {
                residual: fit.residual_norm,
            });
        }
        Ok(fit.coefficients)
    }

    /// Output state for an input in `span(S_m)`.
    pub fn output_for(&self, input: &QState) -> Result<Vec<Complex64>> {
        Ok(self.apply(&self.expand(input)?))
    }
}

/// Post-measurement statistics of one simulated run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOutcome {
    pub success_probability: f64,
    pub failure_probability: f64,
    /// Probability that the copy registers hold `input^{⊗N}` given success;
    /// `None` when success never happens.
    pub clone_fidelity: Option<f64>,
}

/// Builds the cloning map for feasible `(γ, P)` respecting the zero pattern.
pub fn build_cloning_map(
    set: &StateSet,
    part: &Partition,
    gamma: &EfficiencySpec,
    pgram: &PGram,
) -> Result<CloningMap> {
    let report = is_feasible(set, part, gamma, pgram, PSD_TOL)?;
    from_report(set, part, &report)
}

fn from_report(set: &StateSet, part: &Partition, report: &FeasibilityReport) -> Result<CloningMap> {
    if !report.feasible {
        return Err(Error::InfeasibleGamma {
            min_eigenvalue: report.min_eigenvalue,
        });
    }
    let d = set.dim();
    let n_copies = report.gamma.copies();
    let m = part.m();
    let gamma = report.gamma.gamma().to_vec();

    let c_matrix = psd_sqrt(&report.residual, PSD_TOL)?;
    let flags = report.pgram.flag_factor()?;
    let flag_rank = flags.rows();
    let z_dim = flag_rank + m;
    let copy_dim = d.checked_pow(n_copies as u32).unwrap_or(usize::MAX);
    let total = copy_dim.saturating_mul(z_dim);
    if total > MAX_DENSE_DIM {
        return Err(Error::SpaceTooLarge(total));
    }

    let input_states: Vec<QState> = part.independent_states(set).into_iter().cloned().collect();
    let mut output_columns = CMatrix::zeros(total, m);
    for (j, state) in input_states.iter().enumerate() {
        let root = gamma[j].sqrt();
        if root > 0.0 {
            let copies = matrixkit::tensor_power(state.amplitudes(), n_copies);
            for (ci, &amp) in copies.iter().enumerate() {
                for zr in 0..flag_rank {
                    output_columns[(ci * z_dim + zr, j)] = amp * flags[(zr, j)] * root;
                }
            }
        }
        // Failure reference is |0…0⟩ on x ⊗ copies, i.e. copy index 0.
        for k in 0..m {
            output_columns[(flag_rank + k, j)] += c_matrix[(k, j)];
        }
    }

    let gram_out = &output_columns.adjoint() * &output_columns;
    let gram_deviation = gram_out.max_abs_diff(&part.gram_m(set));
    if gram_deviation > ISOMETRY_TOL {
        return Err(Error::NotIsometry {
            deviation: gram_deviation,
        });
    }
    Ok(CloningMap {
        input_dim: d,
        n_copies,
        flag_rank,
        input_states,
        input_indices: part.independent.clone(),
        gamma,
        output_columns,
        c_matrix,
        gram_deviation,
    })
}

/// Completes the isometry to a unitary on the full composite space.
///
/// With `W_in = E X^{-1/2}` and `W_out = O X^{-1/2}` (both orthonormal), each
/// is extended by Gram-Schmidt over the canonical basis in index order and
/// `U = [W_out B][W_in A]†`, so that `U E = O`.
pub fn extend_to_unitary(map: &CloningMap) -> Result<CMatrix> {
    let total = map.total_dim();
    if total > MAX_UNITARY_DIM {
        return Err(Error::SpaceTooLarge(total));
    }
    let e = map.embedded_inputs();
    let o = map.output_columns();
    let x_in = &e.adjoint() * &e;
    let deviation = (&o.adjoint() * o).max_abs_diff(&x_in);
    if deviation > ISOMETRY_TOL {
        return Err(Error::NotIsometry { deviation });
    }
    let eig = hermitian_eig(&x_in)?;
    if eig.min_eigenvalue() <= 0.0 {
        return Err(Error::NotIsometry { deviation });
    }
    let inv_sqrt = eig.reconstruct_with(|l| 1.0 / l.sqrt());
    let w_in = complete_basis(&(&e * &inv_sqrt));
    let w_out = complete_basis(&(o * &inv_sqrt));
    Ok(&w_out * &w_in.adjoint())
}

/// Extends orthonormal columns to a full orthonormal basis.
fn complete_basis(w: &CMatrix) -> CMatrix {
    let n = w.rows();
    let mut cols: Vec<Vec<Complex64>> = w.columns();
    for i in 0..n {
        if cols.len() == n {
            break;
        }
        let mut v = vec![ZERO; n];
        v[i] = ONE;
        for _pass in 0..2 {
            for q in &cols {
                let h = matrixkit::inner(q, &v);
                matrixkit::axpy(&mut v, -h, q);
            }
        }
        let nv = matrixkit::norm(&v);
        if nv > COMPLETION_THRESHOLD {
            cols.push(v.into_iter().map(|z| z / nv).collect());
        }
    }
    CMatrix::from_columns(&cols).expect("uniform column length")
}

/// Runs the map on `input` and measures the flag register against `H_p`.
pub fn simulate_cloning(map: &CloningMap, input: &QState) -> Result<SimOutcome> {
    let out = map.output_for(input)?;
    let z_dim = map.z_dim();
    let mut success = 0.0;
    let mut failure = 0.0;
    for (i, z) in out.iter().enumerate() {
        if map.is_success_level(i) {
            success += z.norm_sqr();
        } else {
            failure += z.norm_sqr();
        }
    }
    let clone_fidelity = if success > SUCCESS_FLOOR * 1e-2 {
        let target = matrixkit::tensor_power(input.amplitudes(), map.n_copies());
        let mut captured = 0.0;
        for zr in 0..map.flag_rank() {
            let amp: Complex64 = target
                .iter()
                .enumerate()
                .map(|(ci, t)| t.conj() * out[ci * z_dim + zr])
                .sum();
            captured += amp.norm_sqr();
        }
        Some((captured / success).min(1.0))
    } else {
        None
    };
    Ok(SimOutcome {
        success_probability: success,
        failure_probability: failure,
        clone_fidelity,
    })
}

/// One simulated dependent state in a soundness probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeCase {
    pub state: usize,
    pub outcome: SimOutcome,
    /// Succeeds sometimes, yet the copies are not the input: an unsound cloner.
    pub violation: bool,
}

#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub gamma: Vec<f64>,
    pub cases: Vec<ProbeCase>,
}

impl ProbeReport {
    pub fn violations(&self) -> impl Iterator<Item = &ProbeCase> {
        self.cases.iter().filter(|c| c.violation)
    }

    pub fn has_violation(&self) -> bool {
        self.violations().next().is_some()
    }
}

/// Builds the map for `forced_gamma` without the zero-pattern guard and
/// reports every dependent state that succeeds with imperfect copies.
pub fn soundness_probe(
    set: &StateSet,
    part: &Partition,
    forced_gamma: &EfficiencySpec,
    pgram: &PGram,
) -> Result<ProbeReport> {
    let report = evaluate_unguarded(set, part, forced_gamma, pgram, PSD_TOL)?;
    let map = from_report(set, part, &report)?;
    let mut cases = Vec::with_capacity(part.dependent.len());
    for &state in &part.dependent {
        let outcome = simulate_cloning(&map, set.state(state))?;
        let violation = outcome.success_probability > SUCCESS_FLOOR
            && outcome.clone_fidelity.is_some_and(|f| f < 1.0 - 1e-10);
        cases.push(ProbeCase {
            state,
            outcome,
            violation,
        });
    }
    Ok(ProbeReport {
        gamma: forced_gamma.gamma().to_vec(),
        cases,
    })
}
