//! Part unambiguous discrimination and its relation to 1→N part cloning.
//!
//! A discriminator sends `Ψ_j` to `√γ_j |Ψ̃_j⟩ ⊗ |P_j⟩ + √(1−γ_j) |Φ_j⟩ ⊗ |P_{n+1}⟩`
//! with orthonormal flags. It exists iff `X⁽¹⁾ − Γ ⪰ 0` on `S_m`, which is the
//! cloning residual with the flag/overlap correction replaced by the identity,
//! i.e. the `N → ∞` limit of the cloning condition.

use std::thread;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::feasibility::{
    bisect_max, max_uniform_efficiency, optimize_pgram_with, residual_matrix, PGram, PGramMode,
    SearchOptions, BISECTION_PSD_TOL,
};
use crate::matrixkit::{is_psd, psd_sqrt, CMatrix, PSD_TOL};
use crate::stateset::{Partition, QState, StateSet, INDEPENDENCE_TOL};
use crate::{matrixkit, synthesis::ISOMETRY_TOL};

#[derive(Debug, Clone)]
pub struct DiscriminationReport {
    /// `X⁽¹⁾ − Γ` on `S_m`.
    pub residual: CMatrix,
    pub min_eigenvalue: f64,
    pub feasible: bool,
    pub gamma: Vec<f64>,
}

/// `X⁽¹⁾ − Γ`, computed through the cloning residual with `X_z = I`.
pub fn discrimination_residual(set: &StateSet, part: &Partition, gamma: &[f64]) -> Result<CMatrix> {
    residual_matrix(&part.gram_m(set), &CMatrix::identity(part.m()), gamma)
}

fn validate_gamma(part: &Partition, gamma: &[f64]) -> Result<()> {
    if gamma.len() != part.m() {
        return Err(Error::SizeMismatch(format!(
            "gamma has {} entries but S_m has {} states",
            gamma.len(),
            part.m()
        )));
    }
    for (position, &value) in gamma.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidEfficiency { position, value });
        }
        if position >= part.l() && value > PSD_TOL {
            return Err(Error::ZeroPatternViolation {
                index: part.independent[position],
                value,
            });
        }
    }
    Ok(())
}

pub fn disc_feasibility(
    set: &StateSet,
    part: &Partition,
    gamma: &[f64],
) -> Result<DiscriminationReport> {
    validate_gamma(part, gamma)?;
    let residual = discrimination_residual(set, part, gamma)?;
    let (feasible, min_eigenvalue) = is_psd(&residual, PSD_TOL)?;
    Ok(DiscriminationReport {
        residual,
        min_eigenvalue,
        feasible,
        gamma: gamma.to_vec(),
    })
}

/// Largest uniform discrimination efficiency on `S_l`.
pub fn disc_max_uniform(set: &StateSet, part: &Partition) -> Result<(f64, DiscriminationReport)> {
    if !part.part_clonable() {
        return Err(Error::EmptyClonableSubset);
    }
    let gram = part.gram_m(set);
    let identity = CMatrix::identity(part.m());
    let uniform = |t: f64| -> Vec<f64> {
        (0..part.m())
            .map(|p| if p < part.l() { t } else { 0.0 })
            .collect()
    };
    let t_star = bisect_max(|t| {
        let r = residual_matrix(&gram, &identity, &uniform(t))?;
        Ok(is_psd(&r, BISECTION_PSD_TOL)?.0)
    })?;
    let report = disc_feasibility(set, part, &uniform(t_star))?;
    Ok((t_star, report))
}

/// Explicit discriminator on `x ⊗ z`, `z` holding `n + 1` orthonormal flags.
///
/// Flag `i < n` heralds input state `i`; flag `n` is the inconclusive outcome.
/// Basis index is `x_level · (n + 1) + flag`.
#[derive(Debug, Clone)]
pub struct DiscriminationMap {
    input_dim: usize,
    flag_count: usize,
    input_states: Vec<QState>,
    input_indices: Vec<usize>,
    gamma: Vec<f64>,
    columns: CMatrix,
    failure_block: CMatrix,
    gram_deviation: f64,
}

impl DiscriminationMap {
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// `n + 1`.
    pub fn flag_count(&self) -> usize {
        self.flag_count
    }

    pub fn inconclusive_flag(&self) -> usize {
        self.flag_count - 1
    }

    pub fn input_indices(&self) -> &[usize] {
        &self.input_indices
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// Image of each state of `S_m` as a column.
    pub fn columns(&self) -> &CMatrix {
        &self.columns
    }

    /// Square root of `X⁽¹⁾ − Γ`; column `j` is the failure x-vector of `Ψ_j`.
    pub fn failure_block(&self) -> &CMatrix {
        &self.failure_block
    }

    pub fn gram_deviation(&self) -> f64 {
        self.gram_deviation
    }

    fn expand(&self, input: &QState) -> Result<Vec<Complex64>> {
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
}

pub fn build_discrimination_map(
    set: &StateSet,
    part: &Partition,
    gamma: &[f64],
) -> Result<DiscriminationMap> {
    let report = disc_feasibility(set, part, gamma)?;
    if !report.feasible {
        return Err(Error::InfeasibleGamma {
            min_eigenvalue: report.min_eigenvalue,
        });
    }
    let d = set.dim();
    let m = part.m();
    let flag_count = set.len() + 1;
    let failure_block = psd_sqrt(&report.residual, PSD_TOL)?;

    let mut columns = CMatrix::zeros(d * flag_count, m);
    for (j, &state) in part.independent.iter().enumerate() {
        // Post-success x-state fixed to |0⟩; the flag alone carries the answer.
        columns[(state, j)] = Complex64::new(gamma[j].sqrt(), 0.0);
        // m ≤ d since S_m is independent in C^d.
        for a in 0..m {
            columns[(a * flag_count + flag_count - 1, j)] += failure_block[(a, j)];
        }
    }
    let gram_deviation = (&columns.adjoint() * &columns).max_abs_diff(&part.gram_m(set));
    if gram_deviation > ISOMETRY_TOL {
        return Err(Error::NotIsometry {
            deviation: gram_deviation,
        });
    }
    Ok(DiscriminationMap {
        input_dim: d,
        flag_count,
        input_states: part.independent_states(set).into_iter().cloned().collect(),
        input_indices: part.independent.clone(),
        gamma: gamma.to_vec(),
        columns,
        failure_block,
        gram_deviation,
    })
}

/// Probability of each flag; the last entry is the inconclusive outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscOutcome {
    pub flag_probabilities: Vec<f64>,
}

impl DiscOutcome {
    pub fn inconclusive(&self) -> f64 {
        *self.flag_probabilities.last().expect("at least one flag")
    }

    pub fn total(&self) -> f64 {
        self.flag_probabilities.iter().sum()
    }
}

pub fn simulate_discrimination(map: &DiscriminationMap, input: &QState) -> Result<DiscOutcome> {
    let coefficients = map.expand(input)?;
    let out = map.columns.mul_vec(&coefficients);
    let mut flag_probabilities = vec![0.0; map.flag_count];
    for (i, z) in out.iter().enumerate() {
        flag_probabilities[i % map.flag_count] += z.norm_sqr();
    }
    Ok(DiscOutcome { flag_probabilities })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitRow {
    pub copies: usize,
    pub t_star: f64,
    /// `t*(N) − t*_disc`.
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct LimitTable {
    pub rows: Vec<LimitRow>,
    pub t_disc: f64,
}

/// Uniform cloning optimum for each `N` next to the discrimination optimum.
///
/// Each `N` is independent, so they are evaluated on scoped threads.
pub fn pqc_limit_comparison(
    set: &StateSet,
    part: &Partition,
    n_values: &[usize],
    mode: PGramMode,
    options: SearchOptions,
) -> Result<LimitTable> {
    let (t_disc, _) = disc_max_uniform(set, part)?;
    let results: Vec<Result<f64>> = thread::scope(|scope| {
        let handles: Vec<_> = n_values
            .iter()
            .map(|&n| scope.spawn(move || optimum_for(set, part, n, mode, options)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("limit worker panicked"))
            .collect()
    });
    let rows = n_values
        .iter()
        .zip(results)
        .map(|(&copies, t)| {
            t.map(|t_star| LimitRow {
                copies,
                t_star,
                gap: t_star - t_disc,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LimitTable { rows, t_disc })
}

fn optimum_for(
    set: &StateSet,
    part: &Partition,
    n: usize,
    mode: PGramMode,
    options: SearchOptions,
) -> Result<f64> {
    match mode {
        PGramMode::AllOnes => {
            Ok(max_uniform_efficiency(set, part, &PGram::all_ones(part.m()), n)?.0)
        }
        _ => Ok(optimize_pgram_with(set, part, n, mode, options)?.1),
    }
}
