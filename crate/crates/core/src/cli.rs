//! The `pqclone` command-line front end.
//!
//! Input files are JSON: `{"dim": d, "states": [[[re, im], …], …]}`.
//! Exit codes: 0 success, 1 input errors, 2 impossible or infeasible verdicts.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::discrimination::{
    build_discrimination_map, disc_max_uniform, pqc_limit_comparison, simulate_discrimination,
};
use crate::error::Error;
use crate::feasibility::{
    bisect_max, closed_form_bounds, evaluate_unguarded, is_feasible, optimize_pgram_with,
    ClosedFormBound, EfficiencySpec, PGram, PGramMode, SearchOptions, BISECTION_PSD_TOL,
};
use crate::matrixkit::CMatrix;
use crate::stateset::{analyze, Partition, StateSet};
use crate::synthesis::{
    build_cloning_map, extend_to_unitary, simulate_cloning, soundness_probe, MAX_UNITARY_DIM,
    SUCCESS_FLOOR,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_VERDICT: i32 = 2;

const CHECK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Analyze,
    Optimize,
    Synthesize,
    Simulate,
    Discriminate,
    CompareLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PGramChoice {
    Identity,
    #[value(name = "all_ones", alias = "all-ones")]
    AllOnes,
    Search,
}

impl From<PGramChoice> for PGramMode {
    fn from(c: PGramChoice) -> Self {
        match c {
            PGramChoice::Identity => PGramMode::Identity,
            PGramChoice::AllOnes => PGramMode::AllOnes,
            PGramChoice::Search => PGramMode::Search,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Table,
}

/// Analyze part probabilistic cloning and part discrimination of a state set.
#[derive(Debug, Clone, Parser)]
#[command(name = "pqclone", version)]
pub struct RunConfig {
    /// Pipeline to run.
    #[arg(value_enum)]
    pub command: Command,
    /// State-set JSON file.
    pub input_path: PathBuf,
    /// Number of copies N produced by the cloner.
    #[arg(long = "copies", default_value_t = 2)]
    pub n_copies: usize,
    /// How the flag overlaps are chosen.
    #[arg(long = "pgram", value_enum, default_value_t = PGramChoice::Search)]
    pub pgram_mode: PGramChoice,
    /// PSD tolerance for feasibility verdicts.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long = "format", value_enum, default_value_t = OutputFormat::Table)]
    pub output_format: OutputFormat,
    /// Seed for the random restarts of the flag-overlap search.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Explicit efficiencies, one per input state in file order (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub gamma: Option<Vec<f64>>,
    /// Copy counts for compare-limit.
    #[arg(long = "n-values", value_delimiter = ',', default_values_t = vec![2, 3, 5, 10, 20])]
    pub n_values: Vec<usize>,
    /// Build a cloner that ignores the zero pattern and report unsound behaviour.
    #[arg(long)]
    pub probe_soundness: bool,
}

impl RunConfig {
    fn validate(&self) -> Result<(), Failure> {
        if self.n_copies < 2 {
            return Err(Failure::input(format!(
                "--copies must be at least 2 (got {})",
                self.n_copies
            )));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Failure::input(format!(
                "--tol must be positive (got {})",
                self.tol
            )));
        }
        if let Some(n) = self.n_values.iter().find(|&&n| n < 2) {
            return Err(Failure::input(format!(
                "--n-values entries must be at least 2 (got {n})"
            )));
        }
        Ok(())
    }

    fn search_options(&self) -> SearchOptions {
        SearchOptions {
            seed: self.seed,
            ..SearchOptions::default()
        }
    }
}

/// On-disk state-set format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputFile {
    pub dim: usize,
    pub states: Vec<Vec<[f64; 2]>>,
}

impl InputFile {
    pub fn from_set(set: &StateSet) -> Self {
        Self {
            dim: set.dim(),
            states: set
                .states()
                .iter()
                .map(|s| s.amplitudes().iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }

    pub fn to_set(&self) -> crate::Result<StateSet> {
        StateSet::load(
            self.dim,
            self.states
                .iter()
                .map(|s| s.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
                .collect(),
        )
    }
}

/// Reads and validates a state-set file.
pub fn load_input(path: &Path) -> Result<StateSet, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    let file: InputFile = serde_json::from_str(&text).map_err(|e| {
        Failure::input(format!(
            "parse error in {} at line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    file.to_set().map_err(Failure::from)
}

/// A run that ends with a nonzero exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn input(message: String) -> Self {
        Self {
            code: EXIT_INPUT,
            message,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::EmptyClonableSubset
            | Error::InfeasibleGamma { .. }
            | Error::ZeroPatternViolation { .. } => EXIT_VERDICT,
            _ => EXIT_INPUT,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

// ---------------------------------------------------------------------------
// JSON report

/// Rounds to 12 significant digits so the printed value re-parses to itself.
fn r12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

fn c12(z: Complex64) -> [f64; 2] {
    [r12(z.re), r12(z.im)]
}

fn matrix12(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.rows())
        .map(|r| m.row(r).iter().map(|&z| c12(z)).collect())
        .collect()
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct Report {
    pub command: String,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
    pub partition: PartitionJson,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub efficiencies: Option<EfficienciesJson>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub feasibility: Option<FeasibilityJson>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub closed_form: Option<ClosedFormJson>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub synthesis: Option<SynthesisJson>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub simulation: Vec<SimulationRow>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub probe: Option<ProbeJson>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub discrimination: Option<DiscriminationJson>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub limit: Option<LimitJson>,
    pub verdict: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct PartitionJson {
    pub independent: Vec<usize>,
    pub dependent: Vec<usize>,
    pub clonable: Vec<usize>,
    pub blocked: Vec<usize>,
    /// Aligned with `independent`.
    pub usage: Vec<f64>,
    pub expansions: Vec<ExpansionJson>,
    pub part_pqc_possible: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExpansionJson {
    pub state: usize,
    /// Aligned with `independent`.
    pub coefficients: Vec<[f64; 2]>,
    pub residual: f64,
}

impl PartitionJson {
    fn from_partition(part: &Partition) -> Self {
        Self {
            independent: part.independent.clone(),
            dependent: part.dependent.clone(),
            clonable: part.clonable.clone(),
            blocked: part.blocked.clone(),
            usage: part.usage.iter().map(|&u| r12(u)).collect(),
            expansions: part
                .expansions
                .iter()
                .map(|e| ExpansionJson {
                    state: e.state,
                    coefficients: e.coefficients.iter().map(|&z| c12(z)).collect(),
                    residual: r12(e.residual),
                })
                .collect(),
            part_pqc_possible: part.part_clonable(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EfficienciesJson {
    pub copies: usize,
    pub pgram_mode: String,
    /// Uniform optimum on the clonable states, when the efficiencies come from optimization.
    pub t_star: Option<f64>,
    /// One entry per input state, in file order.
    pub gamma: Vec<f64>,
    /// Flag overlaps over `independent`.
    pub pgram: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FeasibilityJson {
    pub min_eigenvalue: f64,
    pub feasible: bool,
    pub tol: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ClosedFormJson {
    pub kind: String,
    pub bound: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SynthesisJson {
    pub input_dim: usize,
    pub copies: usize,
    pub flag_rank: usize,
    pub failure_dim: usize,
    pub total_dim: usize,
    pub gram_deviation: f64,
    pub c_rank: usize,
    pub unitarity_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SimulationRow {
    pub state: usize,
    pub role: String,
    pub gamma: f64,
    pub success_probability: f64,
    pub failure_probability: f64,
    pub clone_fidelity: Option<f64>,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProbeJson {
    /// Forced efficiencies over `independent`.
    pub forced_gamma: Vec<f64>,
    pub cases: Vec<ProbeCaseJson>,
    pub violation: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProbeCaseJson {
    pub state: usize,
    pub success_probability: f64,
    pub clone_fidelity: Option<f64>,
    pub violation: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DiscriminationJson {
    pub t_star: f64,
    pub gamma: Vec<f64>,
    pub min_eigenvalue: f64,
    pub gram_deviation: f64,
    pub outcomes: Vec<DiscRowJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DiscRowJson {
    pub state: usize,
    /// One entry per flag; the last is inconclusive.
    pub flag_probabilities: Vec<f64>,
    pub unambiguous: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LimitJson {
    pub pgram_mode: String,
    pub t_disc: f64,
    pub rows: Vec<LimitRowJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LimitRowJson {
    pub copies: usize,
    pub t_star: f64,
    pub gap: f64,
}

fn role(part: &Partition, state: usize) -> &'static str {
    if part.clonable.contains(&state) {
        "clonable"
    } else if part.blocked.contains(&state) {
        "blocked"
    } else {
        "dependent"
    }
}

fn mode_name(mode: PGramChoice) -> &'static str {
    match mode {
        PGramChoice::Identity => "identity",
        PGramChoice::AllOnes => "all_ones",
        PGramChoice::Search => "search",
    }
}

// ---------------------------------------------------------------------------
// Pipelines

/// Result of a run: the report (if one was produced) and the exit code.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub code: i32,
}

struct Context {
    set: StateSet,
    part: Partition,
    report: Report,
}

/// Runs `config` and returns the structured outcome.
pub fn execute(config: &RunConfig) -> Result<Outcome, Failure> {
    config.validate()?;
    let set = load_input(&config.input_path)?;
    let part = analyze(&set)?;
    let warnings = set
        .renormalized()
        .iter()
        .map(|i| format!("state {i} renormalized (norm within 1e-6 of 1)"))
        .collect();
    let report = Report {
        command: config
            .command
            .to_possible_value()
            .map(|v| v.get_name().to_string())
            .unwrap_or_default(),
        warnings,
        partition: PartitionJson::from_partition(&part),
        ..Report::default()
    };
    let mut ctx = Context { set, part, report };

    let code = match config.command {
        Command::Analyze => cmd_analyze(&mut ctx),
        Command::Optimize => cmd_optimize(config, &mut ctx)?,
        Command::Synthesize => cmd_synthesize(config, &mut ctx)?,
        Command::Simulate => cmd_simulate(config, &mut ctx)?,
        Command::Discriminate => cmd_discriminate(&mut ctx)?,
        Command::CompareLimit => cmd_compare_limit(config, &mut ctx)?,
    };
    Ok(Outcome {
        report: ctx.report,
        code,
    })
}

fn cmd_analyze(ctx: &mut Context) -> i32 {
    if ctx.part.part_clonable() {
        ctx.report.verdict = "part PQC possible".into();
        EXIT_OK
    } else {
        ctx.report.verdict =
            "part PQC impossible: every independent state is used by a dependent state".into();
        EXIT_VERDICT
    }
}

fn require_clonable(ctx: &mut Context) -> Result<(), Failure> {
    if cmd_analyze(ctx) != EXIT_OK {
        return Err(Error::EmptyClonableSubset.into());
    }
    Ok(())
}

/// Optimal uniform efficiencies and the flag overlaps that reach them.
fn optimize(config: &RunConfig, ctx: &mut Context) -> Result<(EfficiencySpec, PGram), Failure> {
    require_clonable(ctx)?;
    let (set, part) = (&ctx.set, &ctx.part);
    let (pgram, t_star) = optimize_pgram_with(
        set,
        part,
        config.n_copies,
        config.pgram_mode.into(),
        config.search_options(),
    )?;
    let gamma = EfficiencySpec::uniform(part, t_star, config.n_copies)?;
    let feas = is_feasible(set, part, &gamma, &pgram, config.tol)?;
    ctx.report.efficiencies = Some(EfficienciesJson {
        copies: config.n_copies,
        pgram_mode: mode_name(config.pgram_mode).into(),
        t_star: Some(r12(t_star)),
        gamma: (0..set.len())
            .map(|i| r12(gamma.for_state(part, i)))
            .collect(),
        pgram: matrix12(pgram.overlaps()),
    });
    ctx.report.feasibility = Some(FeasibilityJson {
        min_eigenvalue: r12(feas.min_eigenvalue),
        feasible: feas.feasible,
        tol: config.tol,
    });
    // The pair bound is the two-copy form.
    if let Some((kind, bound)) = closed_form_bounds(set, part).ok().and_then(|b| match b {
        ClosedFormBound::PairMean { .. } if config.n_copies != 2 => None,
        ClosedFormBound::PairMean { .. } => Some(("pair_mean", b)),
        ClosedFormBound::SingleClonable { .. } => Some(("single_clonable", b)),
    }) {
        ctx.report.closed_form = Some(ClosedFormJson {
            kind: kind.into(),
            bound: r12(bound.value()),
            delta: r12(t_star - bound.value()),
        });
    }
    ctx.report.verdict = "part PQC possible".into();
    Ok((gamma, pgram))
}

fn cmd_optimize(config: &RunConfig, ctx: &mut Context) -> Result<i32, Failure> {
    optimize(config, ctx)?;
    Ok(EXIT_OK)
}

fn cmd_synthesize(config: &RunConfig, ctx: &mut Context) -> Result<i32, Failure> {
    let (gamma, pgram) = optimize(config, ctx)?;
    let map = build_cloning_map(&ctx.set, &ctx.part, &gamma, &pgram)?;
    let unitarity_error = if map.total_dim() <= MAX_UNITARY_DIM {
        Some(r12(extend_to_unitary(&map)?.unitarity_error()))
    } else {
        None
    };
    ctx.report.synthesis = Some(SynthesisJson {
        input_dim: map.input_dim(),
        copies: map.n_copies(),
        flag_rank: map.flag_rank(),
        failure_dim: map.failure_dim(),
        total_dim: map.total_dim(),
        gram_deviation: r12(map.gram_deviation()),
        c_rank: map.c_matrix().rank(1e-6),
        unitarity_error,
    });
    Ok(EXIT_OK)
}

/// `--gamma` (file order) mapped onto `independent`; dependent entries must be zero.
fn gamma_from_flag(
    ctx: &Context,
    values: &[f64],
    copies: usize,
) -> Result<EfficiencySpec, Failure> {
    let (set, part) = (&ctx.set, &ctx.part);
    if values.len() != set.len() {
        return Err(Failure::input(format!(
            "--gamma has {} entries but the file has {} states",
            values.len(),
            set.len()
        )));
    }
    for &j in &part.dependent {
        if values[j] != 0.0 {
            return Err(Error::ZeroPatternViolation {
                index: j,
                value: values[j],
            }
            .into());
        }
    }
    Ok(EfficiencySpec::new(
        part.independent.iter().map(|&i| values[i]).collect(),
        copies,
    )?)
}

fn pgram_for(config: &RunConfig, ctx: &Context) -> Result<PGram, Failure> {
    let m = ctx.part.m();
    Ok(match config.pgram_mode {
        PGramChoice::Identity => PGram::identity(m),
        PGramChoice::AllOnes => PGram::all_ones(m),
        PGramChoice::Search if ctx.part.part_clonable() => {
            optimize_pgram_with(
                &ctx.set,
                &ctx.part,
                config.n_copies,
                PGramMode::Search,
                config.search_options(),
            )?
            .0
        }
        PGramChoice::Search => PGram::identity(m),
    })
}

fn cmd_simulate(config: &RunConfig, ctx: &mut Context) -> Result<i32, Failure> {
    let mut code = EXIT_OK;
    if config.probe_soundness {
        code = run_probe(config, ctx)?;
        if !ctx.part.part_clonable() {
            let probe_verdict = std::mem::take(&mut ctx.report.verdict);
            cmd_analyze(ctx);
            ctx.report.verdict = format!("{}; {probe_verdict}", ctx.report.verdict);
            return Ok(code);
        }
    }

    let (gamma, pgram) = match &config.gamma {
        Some(values) if !config.probe_soundness => {
            require_clonable(ctx)?;
            let gamma = gamma_from_flag(ctx, values, config.n_copies)?;
            let pgram = pgram_for(config, ctx)?;
            let feas = is_feasible(&ctx.set, &ctx.part, &gamma, &pgram, config.tol)?;
            ctx.report.efficiencies = Some(EfficienciesJson {
                copies: config.n_copies,
                pgram_mode: mode_name(config.pgram_mode).into(),
                t_star: None,
                gamma: (0..ctx.set.len())
                    .map(|i| r12(gamma.for_state(&ctx.part, i)))
                    .collect(),
                pgram: matrix12(pgram.overlaps()),
            });
            ctx.report.feasibility = Some(FeasibilityJson {
                min_eigenvalue: r12(feas.min_eigenvalue),
                feasible: feas.feasible,
                tol: config.tol,
            });
            if !feas.feasible {
                ctx.report.verdict = Error::InfeasibleGamma {
                    min_eigenvalue: feas.min_eigenvalue,
                }
                .to_string();
                return Ok(EXIT_VERDICT);
            }
            (gamma, pgram)
        }
        _ => optimize(config, ctx)?,
    };

    let (set, part) = (&ctx.set, &ctx.part);
    let map = build_cloning_map(set, part, &gamma, &pgram)?;
    let mut all_ok = true;
    for (state, input) in set.states().iter().enumerate() {
        let g = gamma.for_state(part, state);
        let out = simulate_cloning(&map, input)?;
        let conserved =
            (out.success_probability + out.failure_probability - 1.0).abs() <= CHECK_TOL;
        let ok = conserved
            && if part.dependent.contains(&state) || g == 0.0 {
                out.success_probability <= SUCCESS_FLOOR
            } else {
                (out.success_probability - g).abs() <= CHECK_TOL
                    && out
                        .clone_fidelity
                        .is_some_and(|f| (f - 1.0).abs() <= CHECK_TOL)
            };
        all_ok &= ok;
        ctx.report.simulation.push(SimulationRow {
            state,
            role: role(part, state).into(),
            gamma: r12(g),
            success_probability: r12(out.success_probability),
            failure_probability: r12(out.failure_probability),
            clone_fidelity: out.clone_fidelity.map(r12),
            ok,
        });
    }
    if !all_ok {
        ctx.report.verdict = "simulation failed an invariant check".into();
        return Ok(EXIT_VERDICT);
    }
    ctx.report.verdict = match &ctx.report.probe {
        Some(p) if p.violation => {
            "cloner verified; unsound cloner: a dependent state succeeds with imperfect copies"
                .into()
        }
        _ => "cloner verified".into(),
    };
    Ok(code)
}

/// Forced efficiencies: `--gamma` verbatim, otherwise half the largest uniform
/// value on all of `S_m` that keeps the residual PSD.
fn run_probe(config: &RunConfig, ctx: &mut Context) -> Result<i32, Failure> {
    let (set, part) = (&ctx.set, &ctx.part);
    let m = part.m();
    let pgram = PGram::identity(m);
    let forced = match &config.gamma {
        Some(values) => {
            if values.len() != set.len() {
                return Err(Failure::input(format!(
                    "--gamma has {} entries but the file has {} states",
                    values.len(),
                    set.len()
                )));
            }
            EfficiencySpec::new(
                part.independent.iter().map(|&i| values[i]).collect(),
                config.n_copies,
            )?
        }
        None => {
            let t = bisect_max(|t| {
                let spec = EfficiencySpec::new(vec![t; m], config.n_copies)?;
                let rep = evaluate_unguarded(set, part, &spec, &pgram, BISECTION_PSD_TOL)?;
                Ok(rep.feasible)
            })?;
            EfficiencySpec::new(vec![0.5 * t; m], config.n_copies)?
        }
    };
    let report = soundness_probe(set, part, &forced, &pgram)?;
    let violation = report.has_violation();
    ctx.report.probe = Some(ProbeJson {
        forced_gamma: forced.gamma().iter().map(|&g| r12(g)).collect(),
        cases: report
            .cases
            .iter()
            .map(|c| ProbeCaseJson {
                state: c.state,
                success_probability: r12(c.outcome.success_probability),
                clone_fidelity: c.outcome.clone_fidelity.map(r12),
                violation: c.violation,
            })
            .collect(),
        violation,
    });
    if violation {
        ctx.report.verdict =
            "unsound cloner: a dependent state succeeds with imperfect copies".into();
        Ok(EXIT_VERDICT)
    } else {
        ctx.report.verdict = "no soundness violation".into();
        Ok(EXIT_OK)
    }
}

fn cmd_discriminate(ctx: &mut Context) -> Result<i32, Failure> {
    require_clonable(ctx)?;
    let (set, part) = (&ctx.set, &ctx.part);
    let (t_star, report) = disc_max_uniform(set, part)?;
    let map = build_discrimination_map(set, part, &report.gamma)?;
    let mut outcomes = Vec::with_capacity(set.len());
    let mut all_ok = true;
    for (state, input) in set.states().iter().enumerate() {
        let out = simulate_discrimination(&map, input)?;
        let unambiguous = out
            .flag_probabilities
            .iter()
            .enumerate()
            .all(|(k, &p)| k == state || k == map.inconclusive_flag() || p <= SUCCESS_FLOOR);
        all_ok &= unambiguous && (out.total() - 1.0).abs() <= CHECK_TOL;
        outcomes.push(DiscRowJson {
            state,
            flag_probabilities: out.flag_probabilities.iter().map(|&p| r12(p)).collect(),
            unambiguous,
        });
    }
    ctx.report.discrimination = Some(DiscriminationJson {
        t_star: r12(t_star),
        gamma: (0..set.len())
            .map(|i| r12(part.position(i).map_or(0.0, |p| report.gamma[p])))
            .collect(),
        min_eigenvalue: r12(report.min_eigenvalue),
        gram_deviation: r12(map.gram_deviation()),
        outcomes,
    });
    ctx.report.verdict = if all_ok {
        "part discrimination possible".into()
    } else {
        "discriminator failed an invariant check".into()
    };
    Ok(if all_ok { EXIT_OK } else { EXIT_VERDICT })
}

fn cmd_compare_limit(config: &RunConfig, ctx: &mut Context) -> Result<i32, Failure> {
    require_clonable(ctx)?;
    let table = pqc_limit_comparison(
        &ctx.set,
        &ctx.part,
        &config.n_values,
        config.pgram_mode.into(),
        config.search_options(),
    )?;
    ctx.report.limit = Some(LimitJson {
        pgram_mode: mode_name(config.pgram_mode).into(),
        t_disc: r12(table.t_disc),
        rows: table
            .rows
            .iter()
            .map(|r| LimitRowJson {
                copies: r.copies,
                t_star: r12(r.t_star),
                gap: r12(r.gap),
            })
            .collect(),
    });
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// Rendering

/// Six significant digits.
fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..=6).contains(&mag) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

fn opt6(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), sig6)
}

fn list(v: &[usize]) -> String {
    let items: Vec<String> = v.iter().map(usize::to_string).collect();
    format!("{{{}}}", items.join(", "))
}

fn complex6(z: &[f64; 2]) -> String {
    if z[1] == 0.0 {
        sig6(z[0])
    } else {
        format!(
            "{}{}{}i",
            sig6(z[0]),
            if z[1] < 0.0 { "-" } else { "+" },
            sig6(z[1].abs())
        )
    }
}

/// Human-readable rendering of a report.
pub fn render_table(report: &Report) -> String {
    let mut s = String::new();
    let p = &report.partition;
    let _ = writeln!(s, "S_m (independent): {}", list(&p.independent));
    let _ = writeln!(s, "S'_m (dependent):  {}", list(&p.dependent));
    let _ = writeln!(s, "S_l (clonable):    {}", list(&p.clonable));
    let _ = writeln!(s, "blocked:           {}", list(&p.blocked));
    let _ = writeln!(s, "usage A_j:");
    for (i, u) in p.independent.iter().zip(&p.usage) {
        let _ = writeln!(s, "  state {i:>3}  A = {}", sig6(*u));
    }
    for e in &p.expansions {
        let coeffs: Vec<String> = e.coefficients.iter().map(complex6).collect();
        let _ = writeln!(
            s,
            "  state {:>3} = [{}] over S_m",
            e.state,
            coeffs.join(", ")
        );
    }

    if let Some(e) = &report.efficiencies {
        let _ = writeln!(
            s,
            "\nefficiencies (N = {}, pgram = {}):",
            e.copies, e.pgram_mode
        );
        if let Some(t) = e.t_star {
            let _ = writeln!(s, "  t* = {}", sig6(t));
        }
        for (i, g) in e.gamma.iter().enumerate() {
            let _ = writeln!(s, "  gamma[{i}] = {}", sig6(*g));
        }
        let _ = writeln!(s, "  PGram:");
        for row in &e.pgram {
            let cells: Vec<String> = row.iter().map(complex6).collect();
            let _ = writeln!(s, "    [{}]", cells.join(", "));
        }
    }
    if let Some(f) = &report.feasibility {
        let _ = writeln!(
            s,
            "  min residual eigenvalue = {} (feasible: {})",
            sig6(f.min_eigenvalue),
            f.feasible
        );
    }
    if let Some(c) = &report.closed_form {
        let _ = writeln!(
            s,
            "  closed form ({}) = {}, delta = {}",
            c.kind,
            sig6(c.bound),
            sig6(c.delta)
        );
    }
    if let Some(m) = &report.synthesis {
        let _ = writeln!(
            s,
            "\ncloning map: d = {}, N = {}, flag rank = {}, failure levels = {}, total dim = {}",
            m.input_dim, m.copies, m.flag_rank, m.failure_dim, m.total_dim
        );
        let _ = writeln!(
            s,
            "  Gram deviation = {}, rank C = {}, unitarity error = {}",
            sig6(m.gram_deviation),
            m.c_rank,
            opt6(m.unitarity_error)
        );
    }
    if !report.simulation.is_empty() {
        let _ = writeln!(
            s,
            "\n{:>5}  {:<9}  {:>10}  {:>10}  {:>10}  ok",
            "state", "role", "gamma", "success", "fidelity"
        );
        for r in &report.simulation {
            let _ = writeln!(
                s,
                "{:>5}  {:<9}  {:>10}  {:>10}  {:>10}  {}",
                r.state,
                r.role,
                sig6(r.gamma),
                sig6(r.success_probability),
                opt6(r.clone_fidelity),
                r.ok
            );
        }
    }
    if let Some(p) = &report.probe {
        let forced: Vec<String> = p.forced_gamma.iter().map(|g| sig6(*g)).collect();
        let _ = writeln!(
            s,
            "\nsoundness probe, forced gamma over S_m = [{}]",
            forced.join(", ")
        );
        for c in &p.cases {
            let _ = writeln!(
                s,
                "  state {:>3}: success {}, fidelity {}{}",
                c.state,
                sig6(c.success_probability),
                opt6(c.clone_fidelity),
                if c.violation { "  <-- VIOLATION" } else { "" }
            );
        }
    }
    if let Some(d) = &report.discrimination {
        let _ = writeln!(
            s,
            "\ndiscrimination: t* = {}, min eigenvalue = {}, Gram deviation = {}",
            sig6(d.t_star),
            sig6(d.min_eigenvalue),
            sig6(d.gram_deviation)
        );
        for o in &d.outcomes {
            let probs: Vec<String> = o.flag_probabilities.iter().map(|x| sig6(*x)).collect();
            let _ = writeln!(
                s,
                "  state {:>3}: [{}] unambiguous: {}",
                o.state,
                probs.join(", "),
                o.unambiguous
            );
        }
    }
    if let Some(l) = &report.limit {
        let _ = writeln!(
            s,
            "\n{:>5}  {:>12}  {:>12}   (pgram = {})",
            "N", "t*(N)", "gap", l.pgram_mode
        );
        for r in &l.rows {
            let _ = writeln!(
                s,
                "{:>5}  {:>12}  {:>12}",
                r.copies,
                sig6(r.t_star),
                sig6(r.gap)
            );
        }
        let _ = writeln!(s, "{:>5}  {:>12}", "disc", sig6(l.t_disc));
    }
    for w in &report.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    if !report.verdict.is_empty() {
        let _ = writeln!(s, "\nverdict: {}", report.verdict);
    }
    s
}

/// Runs `config`, writing the report to `out` and diagnostics to `err`.
/// Returns the process exit code.
pub fn run(config: &RunConfig, out: &mut impl Write, err: &mut impl Write) -> i32 {
    match execute(config) {
        Ok(outcome) => {
            for w in &outcome.report.warnings {
                let _ = writeln!(err, "warning: {w}");
            }
            let text = match config.output_format {
                OutputFormat::Json => {
                    serde_json::to_string_pretty(&outcome.report).expect("report serializes") + "\n"
                }
                OutputFormat::Table => render_table(&outcome.report),
            };
            let _ = out.write_all(text.as_bytes());
            outcome.code
        }
        Err(failure) => {
            let _ = writeln!(err, "error: {}", failure.message);
            failure.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_is_idempotent() {
        for x in [1.0 / 3.0, 2.0 - 2f64.sqrt(), 1e-17, -4.2e-13, 123456.789] {
            let once = r12(x);
            assert_eq!(r12(once), once);
            let printed = serde_json::to_string(&once).unwrap();
            let back: f64 = serde_json::from_str(&printed).unwrap();
            assert_eq!(back.to_bits(), once.to_bits());
        }
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(1.0 / 3.0), "0.333333");
        assert_eq!(sig6(1.0), "1.00000");
        assert_eq!(sig6(0.585_786_437_6), "0.585786");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(1.5e-13), "1.50000e-13");
    }

    #[test]
    fn failure_codes() {
        assert_eq!(Failure::from(Error::EmptyClonableSubset).code, EXIT_VERDICT);
        assert_eq!(
            Failure::from(Error::ZeroVector { index: 0 }).code,
            EXIT_INPUT
        );
    }

    #[test]
    fn config_validation() {
        let cfg =
            RunConfig::try_parse_from(["pqclone", "analyze", "x.json", "--copies", "1"]).unwrap();
        assert_eq!(cfg.validate().unwrap_err().code, EXIT_INPUT);
        let cfg =
            RunConfig::try_parse_from(["pqclone", "optimize", "x.json", "--pgram", "all_ones"])
                .unwrap();
        assert_eq!(cfg.pgram_mode, PGramChoice::AllOnes);
        assert_eq!(cfg.n_values, vec![2, 3, 5, 10, 20]);
        assert!(RunConfig::try_parse_from(["pqclone", "bogus", "x.json"]).is_err());
    }
}
