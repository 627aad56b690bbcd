//! Feasibility of cloning efficiencies and their optimization.
//!
//! For `S_m` in canonical order, efficiencies `γ` and flag overlaps `P`, a
//! 1→N part cloner exists iff
//!
//! ```text
//! R(γ) = X⁽¹⁾ − √Γ · X_z⁽ᴺ⁾ · √Γ ⪰ 0,   X_z⁽ᴺ⁾[j][k] = ⟨Ψ_j|Ψ_k⟩ᴺ · ⟨P_j|P_k⟩
//! ```
//!
//! with `γ_j = 0` outside the clonable subset.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrixkit::{self, hermitian_eig, is_psd, CMatrix, PSD_TOL};
use crate::stateset::{Partition, StateSet};

/// Bisection stops once the bracket is this narrow.
pub const BISECTION_PRECISION: f64 = 1e-10;
/// PSD acceptance inside bisection; tighter than [`PSD_TOL`] so the returned
/// optimum does not overshoot the exact boundary.
pub const BISECTION_PSD_TOL: f64 = 1e-12;
/// Coordinate ascent halves its step until an improving pass gains less than this.
pub const SEARCH_IMPROVEMENT_TOL: f64 = 1e-9;

const SEARCH_INITIAL_STEP: f64 = 0.5;
const SEARCH_MIN_STEP: f64 = 1e-7;

/// Overlaps `⟨P_j|P_k⟩` of the success flags: Hermitian, unit diagonal, PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct PGram {
    overlaps: CMatrix,
}

impl PGram {
    /// Orthogonal flags.
    pub fn identity(m: usize) -> Self {
        Self {
            overlaps: CMatrix::identity(m),
        }
    }

    /// One shared flag for every state.
    pub fn all_ones(m: usize) -> Self {
        Self {
            overlaps: CMatrix::from_fn(m, m, |_, _| Complex64::new(1.0, 0.0)),
        }
    }

    /// Overlaps of the given flag vectors (each normalized first).
    pub fn from_flags(flags: &[Vec<Complex64>]) -> Result<Self> {
        let mut unit = Vec::with_capacity(flags.len());
        for f in flags {
            let n = matrixkit::norm(f);
            if n == 0.0 || !n.is_finite() {
                return Err(Error::InvalidPGram("zero flag vector".into()));
            }
            unit.push(f.iter().map(|z| z / n).collect::<Vec<_>>());
        }
        let m = unit.len();
        let mut overlaps = CMatrix::from_fn(m, m, |j, k| matrixkit::inner(&unit[j], &unit[k]));
        for j in 0..m {
            overlaps[(j, j)] = Complex64::new(1.0, 0.0);
            for k in j + 1..m {
                overlaps[(k, j)] = overlaps[(j, k)].conj();
            }
        }
        Ok(Self { overlaps })
    }

    /// Validates an explicit overlap matrix.
    pub fn from_matrix(overlaps: CMatrix) -> Result<Self> {
        if !overlaps.is_square() {
            return Err(Error::InvalidPGram("not square".into()));
        }
        for (j, d) in overlaps.diagonal().iter().enumerate() {
            if (d - Complex64::new(1.0, 0.0)).norm() > 1e-9 {
                return Err(Error::InvalidPGram(format!("diagonal entry {j} is {d}")));
            }
        }
        let (ok, min_eigenvalue) = is_psd(&overlaps, PSD_TOL)?;
        if !ok {
            return Err(Error::InvalidPGram(format!(
                "not PSD (min eigenvalue {min_eigenvalue:.3e})"
            )));
        }
        Ok(Self { overlaps })
    }

    pub fn size(&self) -> usize {
        self.overlaps.rows()
    }

    pub fn overlaps(&self) -> &CMatrix {
        &self.overlaps
    }

    /// Concrete flag vectors `f_j ∈ C^r` with `⟨f_j|f_k⟩ = P[j][k]`, `r = rank(P)`.
    ///
    /// Returned as an `r × m` matrix `F = Λ^{1/2} V†` restricted to the nonzero spectrum.
    pub fn flag_factor(&self) -> Result<CMatrix> {
        let eig = hermitian_eig(&self.overlaps)?;
        let m = self.size();
        let kept: Vec<usize> = (0..m).filter(|&k| eig.eigenvalues[k] > PSD_TOL).collect();
        let v = &eig.eigenvectors;
        Ok(CMatrix::from_fn(kept.len(), m, |r, c| {
            let k = kept[r];
            v[(c, k)].conj() * eig.eigenvalues[k].sqrt()
        }))
    }
}

/// Efficiency vector `γ` over `S_m` (canonical order) and the copy count `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencySpec {
    gamma: Vec<f64>,
    copies: usize,
}

impl EfficiencySpec {
    pub fn new(gamma: Vec<f64>, copies: usize) -> Result<Self> {
        if copies < 2 {
            return Err(Error::InvalidCopies(copies));
        }
        if let Some((position, &value)) = gamma
            .iter()
            .enumerate()
            .find(|(_, g)| !(0.0..=1.0).contains(*g))
        {
            return Err(Error::InvalidEfficiency { position, value });
        }
        Ok(Self { gamma, copies })
    }

    /// `γ_j = t` on the clonable prefix, 0 elsewhere.
    pub fn uniform(part: &Partition, t: f64, copies: usize) -> Result<Self> {
        let gamma = (0..part.m())
            .map(|p| if p < part.l() { t } else { 0.0 })
            .collect();
        Self::new(gamma, copies)
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    /// Efficiency of input state `state`, zero for anything outside `S_m`.
    pub fn for_state(&self, part: &Partition, state: usize) -> f64 {
        part.position(state).map_or(0.0, |p| self.gamma[p])
    }
}

#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub residual: CMatrix,
    pub min_eigenvalue: f64,
    pub feasible: bool,
    pub gamma: EfficiencySpec,
    pub pgram: PGram,
}

/// `X_z⁽ᴺ⁾[j][k] = ⟨Ψ_j|Ψ_k⟩ᴺ · P[j][k]` over `S_m` in canonical order.
pub fn xz_matrix(
    set: &StateSet,
    part: &Partition,
    pgram: &PGram,
    n_copies: usize,
) -> Result<CMatrix> {
    let m = part.m();
    if pgram.size() != m {
        return Err(Error::SizeMismatch(format!(
            "PGram has size {} but S_m has {m} states",
            pgram.size()
        )));
    }
    if n_copies < 2 {
        return Err(Error::InvalidCopies(n_copies));
    }
    let gram = part.gram_m(set);
    let p = pgram.overlaps();
    let mut xz = CMatrix::from_fn(m, m, |j, k| gram[(j, k)].powu(n_copies as u32) * p[(j, k)]);
    for j in 0..m {
        xz[(j, j)] = Complex64::new(1.0, 0.0);
    }
    Ok(xz)
}

/// `X⁽¹⁾ − √Γ · X_z · √Γ`.
pub fn residual_matrix(gram_m: &CMatrix, xz: &CMatrix, gamma: &[f64]) -> Result<CMatrix> {
    let m = gram_m.rows();
    if !gram_m.is_square() || (xz.rows(), xz.cols()) != (m, m) || gamma.len() != m {
        return Err(Error::SizeMismatch(format!(
            "gram {}x{}, xz {}x{}, gamma {}",
            gram_m.rows(),
            gram_m.cols(),
            xz.rows(),
            xz.cols(),
            gamma.len()
        )));
    }
    let root: Vec<f64> = gamma.iter().map(|g| g.max(0.0).sqrt()).collect();
    let mut r = CMatrix::from_fn(m, m, |j, k| {
        gram_m[(j, k)] - xz[(j, k)] * (root[j] * root[k])
    });
    for j in 0..m {
        r[(j, j)] = Complex64::new(r[(j, j)].re, 0.0);
    }
    Ok(r)
}

/// Checks the zero pattern: efficiencies outside the clonable prefix must vanish.
pub fn check_zero_pattern(part: &Partition, gamma: &EfficiencySpec, tol: f64) -> Result<()> {
    for (p, &g) in gamma.gamma().iter().enumerate().skip(part.l()) {
        if g > tol {
            return Err(Error::ZeroPatternViolation {
                index: part.independent[p],
                value: g,
            });
        }
    }
    Ok(())
}

/// Feasibility without the zero-pattern guard; used by diagnostics that
/// deliberately violate it.
pub fn evaluate_unguarded(
    set: &StateSet,
    part: &Partition,
    gamma: &EfficiencySpec,
    pgram: &PGram,
    tol: f64,
) -> Result<FeasibilityReport> {
    if gamma.gamma().len() != part.m() {
        return Err(Error::SizeMismatch(format!(
            "gamma has {} entries but S_m has {} states",
            gamma.gamma().len(),
            part.m()
        )));
    }
    let xz = xz_matrix(set, part, pgram, gamma.copies())?;
    let residual = residual_matrix(&part.gram_m(set), &xz, gamma.gamma())?;
    let (feasible, min_eigenvalue) = is_psd(&residual, tol)?;
    Ok(FeasibilityReport {
        residual,
        min_eigenvalue,
        feasible,
        gamma: gamma.clone(),
        pgram: pgram.clone(),
    })
}

/// Decides whether `(γ, P)` admits a part cloner: residual PSD within `tol`.
pub fn is_feasible(
    set: &StateSet,
    part: &Partition,
    gamma: &EfficiencySpec,
    pgram: &PGram,
    tol: f64,
) -> Result<FeasibilityReport> {
    check_zero_pattern(part, gamma, tol)?;
    evaluate_unguarded(set, part, gamma, pgram, tol)
}

/// Largest `t ∈ [0, 1]` accepted by a monotone predicate with `accept(0)` true.
pub(crate) fn bisect_max(mut accept: impl FnMut(f64) -> Result<bool>) -> Result<f64> {
    if accept(1.0)? {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > BISECTION_PRECISION {
        let mid = 0.5 * (lo + hi);
        if accept(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

fn uniform_gamma(part: &Partition, t: f64) -> Vec<f64> {
    (0..part.m())
        .map(|p| if p < part.l() { t } else { 0.0 })
        .collect()
}

/// Uniform optimum: largest `t` with `γ_j = t` on `S_l` and the residual PSD.
pub fn max_uniform_efficiency(
    set: &StateSet,
    part: &Partition,
    pgram: &PGram,
    n_copies: usize,
) -> Result<(f64, FeasibilityReport)> {
    if !part.part_clonable() {
        return Err(Error::EmptyClonableSubset);
    }
    let gram = part.gram_m(set);
    let xz = xz_matrix(set, part, pgram, n_copies)?;
    let t_star = bisect_max(|t| {
        let r = residual_matrix(&gram, &xz, &uniform_gamma(part, t))?;
        Ok(is_psd(&r, BISECTION_PSD_TOL)?.0)
    })?;
    let gamma = EfficiencySpec::uniform(part, t_star, n_copies)?;
    let report = is_feasible(set, part, &gamma, pgram, PSD_TOL)?;
    Ok((t_star, report))
}

/// Heuristic for a weighted objective `Σ w_j γ_j`: starts at the uniform
/// optimum, then raises one efficiency at a time (largest weight first) by
/// bisection until a full sweep gains less than [`SEARCH_IMPROVEMENT_TOL`].
pub fn max_weighted_efficiency(
    set: &StateSet,
    part: &Partition,
    pgram: &PGram,
    n_copies: usize,
    weights: &[f64],
) -> Result<(EfficiencySpec, FeasibilityReport)> {
    if weights.len() != part.l() {
        return Err(Error::SizeMismatch(format!(
            "{} weights for {} clonable states",
            weights.len(),
            part.l()
        )));
    }
    let (t_star, _) = max_uniform_efficiency(set, part, pgram, n_copies)?;
    let gram = part.gram_m(set);
    let xz = xz_matrix(set, part, pgram, n_copies)?;
    let mut gamma = uniform_gamma(part, t_star);
    let mut order: Vec<usize> = (0..part.l()).filter(|&p| weights[p] > 0.0).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]));

    let objective = |g: &[f64]| -> f64 { weights.iter().zip(g).map(|(w, x)| w * x).sum() };
    for _sweep in 0..50 {
        let before = objective(&gamma);
        for &p in &order {
            let base = gamma[p];
            let raised = bisect_max(|s| {
                let mut trial = gamma.clone();
                trial[p] = base + s * (1.0 - base);
                let r = residual_matrix(&gram, &xz, &trial)?;
                Ok(is_psd(&r, BISECTION_PSD_TOL)?.0)
            })?;
            gamma[p] = base + raised * (1.0 - base);
        }
        if objective(&gamma) - before < SEARCH_IMPROVEMENT_TOL {
            break;
        }
    }
    let spec = EfficiencySpec::new(gamma, n_copies)?;
    let report = is_feasible(set, part, &spec, pgram, PSD_TOL)?;
    Ok((spec, report))
}

/// How the flag overlaps are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PGramMode {
    Identity,
    AllOnes,
    Search,
}

/// Knobs for [`PGramMode::Search`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    pub seed: u64,
    /// Seeded random flag configurations tried in addition to the two fixed starts.
    pub random_restarts: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            random_restarts: 2,
        }
    }
}

/// Picks flag overlaps for the uniform optimum; see [`optimize_pgram_with`].
pub fn optimize_pgram(
    set: &StateSet,
    part: &Partition,
    n_copies: usize,
    mode: PGramMode,
) -> Result<(PGram, f64)> {
    optimize_pgram_with(set, part, n_copies, mode, SearchOptions::default())
}

/// `Identity` and `AllOnes` evaluate the fixed choice. `Search` runs coordinate
/// ascent over unit flag vectors in `C^m`, restarted from both fixed choices
/// (and any random restarts), and keeps the best.
pub fn optimize_pgram_with(
    set: &StateSet,
    part: &Partition,
    n_copies: usize,
    mode: PGramMode,
    options: SearchOptions,
) -> Result<(PGram, f64)> {
    if !part.part_clonable() {
        return Err(Error::EmptyClonableSubset);
    }
    let m = part.m();
    match mode {
        PGramMode::Identity => {
            let p = PGram::identity(m);
            let (t, _) = max_uniform_efficiency(set, part, &p, n_copies)?;
            Ok((p, t))
        }
        PGramMode::AllOnes => {
            let p = PGram::all_ones(m);
            let (t, _) = max_uniform_efficiency(set, part, &p, n_copies)?;
            Ok((p, t))
        }
        PGramMode::Search => {
            let mut starts = vec![identity_flags(m), shared_flags(m)];
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            for _ in 0..options.random_restarts {
                starts.push(random_flags(m, &mut rng));
            }
            let mut best: Option<(PGram, f64)> = None;
            for flags in starts {
                let (p, t) = coordinate_ascent(set, part, n_copies, flags)?;
                if best.as_ref().is_none_or(|(_, bt)| t > *bt) {
                    best = Some((p, t));
                }
            }
            Ok(best.expect("at least two starts"))
        }
    }
}

fn identity_flags(m: usize) -> Vec<Vec<Complex64>> {
    (0..m)
        .map(|j| {
            (0..m)
                .map(|k| Complex64::new(if j == k { 1.0 } else { 0.0 }, 0.0))
                .collect()
        })
        .collect()
}

fn shared_flags(m: usize) -> Vec<Vec<Complex64>> {
    (0..m)
        .map(|_| {
            (0..m)
                .map(|k| Complex64::new(if k == 0 { 1.0 } else { 0.0 }, 0.0))
                .collect()
        })
        .collect()
}

fn random_flags(m: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<Complex64>> {
    (0..m)
        .map(|_| loop {
            let v: Vec<Complex64> = (0..m)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let n = matrixkit::norm(&v);
            if n > 1e-3 {
                break v.into_iter().map(|z| z / n).collect();
            }
        })
        .collect()
}

fn coordinate_ascent(
    set: &StateSet,
    part: &Partition,
    n_copies: usize,
    mut flags: Vec<Vec<Complex64>>,
) -> Result<(PGram, f64)> {
    let m = part.m();
    let evaluate = |flags: &[Vec<Complex64>]| -> Result<(PGram, f64)> {
        let p = PGram::from_flags(flags)?;
        let (t, _) = max_uniform_efficiency(set, part, &p, n_copies)?;
        Ok((p, t))
    };
    // The residual only shrinks as t grows, so one eigenvalue check just above
    // the incumbent rules a candidate out before any bisection.
    let gram = part.gram_m(set);
    let beats = |flags: &[Vec<Complex64>], t: f64| -> Result<bool> {
        let p = PGram::from_flags(flags)?;
        let xz = xz_matrix(set, part, &p, n_copies)?;
        let r = residual_matrix(&gram, &xz, &uniform_gamma(part, t.min(1.0)))?;
        Ok(is_psd(&r, BISECTION_PSD_TOL)?.0)
    };
    let (mut best_p, mut best_t) = evaluate(&flags)?;
    if best_t >= 1.0 {
        return Ok((best_p, best_t));
    }
    let directions = [
        Complex64::new(1.0, 0.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(0.0, -1.0),
    ];
    let mut step = SEARCH_INITIAL_STEP;
    while step >= SEARCH_MIN_STEP {
        let pass_start = best_t;
        // Only clonable flags enter the residual; the others are multiplied by √0.
        for j in 0..part.l() {
            for k in 0..m {
                for dir in directions {
                    let mut candidate = flags.clone();
                    candidate[j][k] += dir * step;
                    let n = matrixkit::norm(&candidate[j]);
                    if n < 1e-12 {
                        continue;
                    }
                    for z in candidate[j].iter_mut() {
                        *z /= n;
                    }
                    if !beats(&candidate, best_t + 2.0 * BISECTION_PRECISION)? {
                        continue;
                    }
                    let (p, t) = evaluate(&candidate)?;
                    if t > best_t + BISECTION_PRECISION {
                        flags = candidate;
                        best_p = p;
                        best_t = t;
                    }
                }
            }
        }
        if best_t - pass_start < SEARCH_IMPROVEMENT_TOL {
            step *= 0.5;
        }
    }
    Ok((best_p, best_t))
}

/// Analytic bounds for the instance shapes that have one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedFormBound {
    /// Two independent states with overlap `s`: `(γ₁ + γ₂)/2 ≤ 1/(1 + |s|)`,
    /// with equality only for `γ₁ = γ₂`.
    PairMean { overlap_abs: f64, bound: f64 },
    /// `|S_m| = 3`, `|S_l| = 1`: the single clonable efficiency satisfies
    /// `γ₁ ≤ 1 − (|x₁₂|² + |x₁₃|² − 2Re(x₁₂x₂₃x₃₁)) / (1 − |x₂₃|²)`.
    SingleClonable { bound: f64 },
}

impl ClosedFormBound {
    /// Value comparable to the uniform optimum `t*`.
    pub fn value(&self) -> f64 {
        match *self {
            Self::PairMean { bound, .. } | Self::SingleClonable { bound } => bound,
        }
    }
}

pub fn closed_form_bounds(set: &StateSet, part: &Partition) -> Result<ClosedFormBound> {
    let x = part.gram_m(set);
    match (part.m(), part.l()) {
        (2, 2) => {
            let s = x[(0, 1)].norm();
            Ok(ClosedFormBound::PairMean {
                overlap_abs: s,
                bound: 1.0 / (1.0 + s),
            })
        }
        (3, 1) => {
            let (x12, x13, x23) = (x[(0, 1)], x[(0, 2)], x[(1, 2)]);
            let x31 = x[(2, 0)];
            let numerator = x12.norm_sqr() + x13.norm_sqr() - 2.0 * (x12 * x23 * x31).re;
            let denominator = 1.0 - x23.norm_sqr();
            Ok(ClosedFormBound::SingleClonable {
                bound: 1.0 - numerator / denominator,
            })
        }
        (m, l) => Err(Error::ShapeNotCovered(format!(
            "|S_m| = {m}, |S_l| = {l}; closed forms cover (2, 2) and (3, 1)"
        ))),
    }
}
