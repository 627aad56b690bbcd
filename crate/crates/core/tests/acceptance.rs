//! Acceptance criteria. Runs without the libtest harness so every criterion
//! prints its own PASS/FAIL line; exits nonzero if any fails.

mod common;

use common::*;
use pqclone::discrimination::{
    build_discrimination_map, disc_max_uniform, pqc_limit_comparison, simulate_discrimination,
};
use pqclone::feasibility::{
    closed_form_bounds, evaluate_unguarded, max_uniform_efficiency, optimize_pgram,
    optimize_pgram_with, EfficiencySpec, PGram, PGramMode, SearchOptions,
};
use pqclone::instances;
use pqclone::matrixkit::{hermitian_eig, is_psd, psd_sqrt};
use pqclone::stateset::analyze;
use pqclone::synthesis::{build_cloning_map, simulate_cloning, soundness_probe};
use pqclone::{Complex64, QState, StateSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: pqclone::Error) -> String {
    e.to_string()
}

fn two_state_optimum_matches_pair_bound() -> Check {
    let mut worst = 0.0_f64;
    for s in [0.1, 0.3, std::f64::consts::FRAC_1_SQRT_2, 0.9] {
        let set = instances::two_state(s);
        let part = analyze(&set).map_err(err)?;
        let (_, t) = optimize_pgram(&set, &part, 2, PGramMode::Search).map_err(err)?;
        let expected = 1.0 / (1.0 + s);
        let d = (t - expected).abs();
        worst = worst.max(d);
        ensure(d <= 1e-7, || {
            format!("s = {s}: t* = {t}, expected {expected}")
        })?;
    }
    Ok(format!("4 overlaps, max |t* - 1/(1+s)| = {worst:.2e}"))
}

fn single_clonable_closed_form() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst = 0.0_f64;
    let canonical = instances::four_state();
    let mut sets = vec![canonical];
    sets.extend((0..20).map(|_| single_clonable_instance(&mut rng)));
    for (k, set) in sets.iter().enumerate() {
        let part = analyze(set).map_err(err)?;
        ensure(part.m() == 3 && part.l() == 1, || {
            format!("instance {k}: |S_m| = {}, |S_l| = {}", part.m(), part.l())
        })?;
        let bound = closed_form_bounds(set, &part).map_err(err)?.value();
        let (t, _) = max_uniform_efficiency(set, &part, &PGram::identity(3), 2).map_err(err)?;
        let d = (t - bound).abs();
        worst = worst.max(d);
        ensure(d <= 1e-8, || {
            format!("instance {k}: bisection {t}, closed form {bound}")
        })?;
        if k == 0 {
            ensure((bound - 1.0 / 3.0).abs() <= 1e-8, || {
                format!("canonical bound {bound} != 1/3")
            })?;
        }
    }
    Ok(format!(
        "canonical + 20 random, max |bisection - closed form| = {worst:.2e}"
    ))
}

fn clonability_gate() -> Check {
    let blocked = instances::three_state_blocked();
    let part = analyze(&blocked).map_err(err)?;
    ensure(part.clonable.is_empty() && !part.part_clonable(), || {
        format!("three-state set has S_l = {:?}", part.clonable)
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut appended = 0;
    for _ in 0..50 {
        let dim = rng.gen_range(2..=4);
        let mut states: Vec<QState> = (0..rng.gen_range(2..=dim))
            .map(|_| random_state(&mut rng, dim))
            .collect();
        let refs: Vec<&QState> = states.iter().collect();
        let k = rng.gen_range(1..=refs.len());
        let dep = combination(&refs[..k], &random_coeffs(&mut rng, k));
        states.push(dep);
        let before = analyze(&StateSet::from_states(states.clone()).unwrap()).map_err(err)?;
        for _ in 0..rng.gen_range(1..=3) {
            let extra = if rng.gen_bool(0.5) {
                random_state(&mut rng, dim)
            } else {
                let refs: Vec<&QState> = states.iter().collect();
                let k = rng.gen_range(1..=refs.len());
                combination(&refs[..k], &random_coeffs(&mut rng, k))
            };
            states.push(extra);
            appended += 1;
        }
        let after = analyze(&StateSet::from_states(states).unwrap()).map_err(err)?;
        for b in &before.blocked {
            ensure(after.blocked.contains(b), || {
                format!(
                    "index {b} blocked before appending, clonable after: {:?}",
                    after.clonable
                )
            })?;
        }
    }

    // Ψ₂ = Ψ₃ = Ψ₄ up to phase: the copies are dependent on Ψ₂ and block it.
    let e0 = QState::basis(3, 0);
    let psi = QState::from_real(&[1.0, 1.0, 1.0]).unwrap();
    let phased = |phi: f64| {
        QState::normalized(
            psi.amplitudes()
                .iter()
                .map(|z| z * Complex64::from_polar(1.0, phi))
                .collect(),
        )
        .unwrap()
    };
    let set = StateSet::from_states(vec![e0, psi.clone(), phased(0.7), phased(-2.1)]).unwrap();
    ensure(
        set.state(2).same_up_to_phase(set.state(1), 1e-10)
            && set.state(3).same_up_to_phase(set.state(1), 1e-10),
        || "duplicate states not detected as equal up to phase".into(),
    )?;
    ensure(!set.state(0).same_up_to_phase(set.state(1), 1e-10), || {
        "distinct states reported equal".into()
    })?;
    let part = analyze(&set).map_err(err)?;
    ensure(
        part.clonable == vec![0] && part.blocked == vec![1] && part.dependent == vec![2, 3],
        || {
            format!(
                "degenerate partition: S_l {:?}, blocked {:?}, dependent {:?}",
                part.clonable, part.blocked, part.dependent
            )
        },
    )?;
    Ok(format!(
        "blocked set rejected, 50 sets / {appended} appended states, degeneracy detected"
    ))
}

fn synthesis_soundness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut cases: Vec<(StateSet, usize, PGramMode)> = Vec::new();
    for mode in [PGramMode::Identity, PGramMode::AllOnes, PGramMode::Search] {
        for n in [2, 3] {
            cases.push((instances::four_state(), n, mode));
        }
        cases.push((instances::two_state(0.6), 2, mode));
    }
    cases.push((instances::orthonormal(3), 4, PGramMode::Identity));
    for _ in 0..6 {
        cases.push((
            single_clonable_instance(&mut rng),
            rng.gen_range(2..=3),
            PGramMode::Search,
        ));
        cases.push((two_clonable_instance(&mut rng), 2, PGramMode::Search));
    }

    let (mut maps, mut worst_gram, mut worst_sim) = (0, 0.0_f64, 0.0_f64);
    for (k, (set, n, mode)) in cases.iter().enumerate() {
        let part = analyze(set).map_err(err)?;
        let (pgram, t_star) = optimize_pgram(set, &part, *n, *mode).map_err(err)?;
        for t in [t_star, 0.5 * t_star] {
            let gamma = EfficiencySpec::uniform(&part, t, *n).map_err(err)?;
            let map = build_cloning_map(set, &part, &gamma, &pgram).map_err(err)?;
            maps += 1;
            worst_gram = worst_gram.max(map.gram_deviation());
            ensure(map.gram_deviation() <= 1e-9, || {
                format!("case {k}: Gram deviation {:.3e}", map.gram_deviation())
            })?;
            for (i, input) in set.states().iter().enumerate() {
                let out = simulate_cloning(&map, input).map_err(err)?;
                let g = gamma.for_state(&part, i);
                if part.dependent.contains(&i) {
                    ensure(out.success_probability <= 1e-12, || {
                        format!(
                            "case {k}: dependent state {i} succeeds with {:.3e}",
                            out.success_probability
                        )
                    })?;
                    continue;
                }
                let dp = (out.success_probability - g).abs();
                worst_sim = worst_sim.max(dp);
                ensure(dp <= 1e-10, || {
                    format!(
                        "case {k}: state {i} success {} vs gamma {g}",
                        out.success_probability
                    )
                })?;
                if g > 0.0 {
                    let f = out
                        .clone_fidelity
                        .ok_or_else(|| format!("case {k}: no fidelity for state {i}"))?;
                    worst_sim = worst_sim.max((f - 1.0).abs());
                    ensure((f - 1.0).abs() <= 1e-10, || {
                        format!("case {k}: state {i} fidelity {f}")
                    })?;
                }
            }
        }
    }
    Ok(format!("{maps} maps, max Gram deviation {worst_gram:.2e}, max success/fidelity error {worst_sim:.2e}"))
}

fn necessity_probe() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_fidelity = 0.0_f64;
    for k in 0..10 {
        let dim = rng.gen_range(2..=4);
        let m = rng.gen_range(2..=dim);
        let set = fully_blocked_instance(&mut rng, dim, m);
        let part = analyze(&set).map_err(err)?;
        ensure(!part.blocked.is_empty(), || {
            format!("instance {k} has no blocked index")
        })?;
        let pgram = PGram::identity(part.m());
        // Half the largest uniform γ on all of S_m that keeps the residual PSD.
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let spec = EfficiencySpec::new(vec![mid; part.m()], 2).map_err(err)?;
            if evaluate_unguarded(&set, &part, &spec, &pgram, 1e-12)
                .map_err(err)?
                .feasible
            {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let forced = EfficiencySpec::new(vec![0.5 * lo; part.m()], 2).map_err(err)?;
        let report = soundness_probe(&set, &part, &forced, &pgram).map_err(err)?;
        let hit = report
            .violations()
            .next()
            .ok_or_else(|| format!("instance {k}: no violation detected"))?;
        let f = hit.outcome.clone_fidelity.unwrap_or(0.0);
        worst_fidelity = worst_fidelity.max(f);
    }
    Ok(format!(
        "10 blocked instances, all violate; highest offending fidelity {worst_fidelity:.4}"
    ))
}

fn discrimination_limit() -> Check {
    let n_values = [2, 3, 5, 10, 20];
    let mut worst = 0.0_f64;
    for s in [0.1, 0.3, std::f64::consts::FRAC_1_SQRT_2, 0.9] {
        let set = instances::two_state(s);
        let part = analyze(&set).map_err(err)?;
        let (t_disc, report) = disc_max_uniform(&set, &part).map_err(err)?;
        worst = worst.max((t_disc - (1.0 - s)).abs());
        ensure((t_disc - (1.0 - s)).abs() <= 1e-8, || {
            format!("s = {s}: discrimination optimum {t_disc}")
        })?;
        let map = build_discrimination_map(&set, &part, &report.gamma).map_err(err)?;
        for (i, input) in set.states().iter().enumerate() {
            let out = simulate_discrimination(&map, input).map_err(err)?;
            let wrong: f64 = out
                .flag_probabilities
                .iter()
                .enumerate()
                .filter(|&(f, _)| f != i && f != map.inconclusive_flag())
                .map(|(_, p)| p)
                .sum();
            ensure(wrong <= 1e-12, || {
                format!("s = {s}: state {i} misidentified with probability {wrong:.3e}")
            })?;
        }

        let table = pqc_limit_comparison(
            &set,
            &part,
            &n_values,
            PGramMode::AllOnes,
            SearchOptions::default(),
        )
        .map_err(err)?;
        let mut prev = f64::INFINITY;
        for row in &table.rows {
            let n = row.copies as i32;
            let expected = (1.0 - s) / (1.0 - s.powi(n));
            worst = worst.max((row.t_star - expected).abs());
            ensure((row.t_star - expected).abs() <= 1e-8, || {
                format!("s = {s}, N = {n}: t* = {}, expected {expected}", row.t_star)
            })?;
            ensure(row.t_star <= prev && row.t_star >= t_disc - 1e-8, || {
                format!("s = {s}, N = {n}: not monotone toward the limit")
            })?;
            prev = row.t_star;
        }
    }

    let four = instances::four_state();
    let part = analyze(&four).map_err(err)?;
    let table = pqc_limit_comparison(
        &four,
        &part,
        &n_values,
        PGramMode::Search,
        SearchOptions::default(),
    )
    .map_err(err)?;
    ensure((table.t_disc - 1.0 / 3.0).abs() <= 1e-8, || {
        format!("four-state discrimination optimum {}", table.t_disc)
    })?;
    for row in &table.rows {
        worst = worst.max((row.t_star - 1.0 / 3.0).abs());
        ensure((row.t_star - 1.0 / 3.0).abs() <= 1e-8, || {
            format!("four-state N = {}: t* = {}", row.copies, row.t_star)
        })?;
    }
    let searched = optimize_pgram_with(
        &four,
        &part,
        20,
        PGramMode::Search,
        SearchOptions {
            seed: 9,
            random_restarts: 4,
        },
    )
    .map_err(err)?;
    ensure((searched.1 - 1.0 / 3.0).abs() <= 1e-8, || {
        format!("four-state N = 20 with extra restarts: {}", searched.1)
    })?;
    Ok(format!(
        "two-state limits and four-state identity hold, max error {worst:.2e}"
    ))
}

fn kernel_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst_rec, mut worst_sqrt, mut minor_checks) = (0.0_f64, 0.0_f64, 0);
    for k in 0..1000 {
        let n = rng.gen_range(2..=8);
        let u = random_unitary(&mut rng, n);
        let kind = k % 3;
        // 0: positive definite, 1: exactly one negative eigenvalue, 2: arbitrary signs.
        let mut spectrum: Vec<f64> = (0..n)
            .map(|_| {
                let mag = rng.gen_range(0.05..2.0);
                if kind == 2 && rng.gen_bool(0.5) {
                    -mag
                } else {
                    mag
                }
            })
            .collect();
        if kind == 1 {
            spectrum[0] = -spectrum[0];
        }
        let m = hermitian_with_spectrum(&u, &spectrum);

        let eig = hermitian_eig(&m).map_err(err)?;
        let rec = eig.reconstruct_with(|x| x).max_abs_diff(&m);
        let unit = eig.eigenvectors.unitarity_error();
        let mut sorted = spectrum.clone();
        sorted.sort_by(f64::total_cmp);
        let spec_err = eig
            .eigenvalues
            .iter()
            .zip(&sorted)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst_rec = worst_rec.max(rec).max(unit).max(spec_err);
        ensure(rec <= 1e-10 && unit <= 1e-10 && spec_err <= 1e-10, || {
            format!("matrix {k} (n = {n}): reconstruction {rec:.2e}, unitarity {unit:.2e}, spectrum {spec_err:.2e}")
        })?;

        let abs_spec: Vec<f64> = spectrum.iter().map(|x| x.abs()).collect();
        let p = hermitian_with_spectrum(&u, &abs_spec);
        let r = psd_sqrt(&p, 1e-9).map_err(err)?;
        let sq = (&r * &r).max_abs_diff(&p);
        worst_sqrt = worst_sqrt.max(sq);
        ensure(sq <= 1e-9 && r.hermitian_deviation() <= 1e-10, || {
            format!("matrix {k}: psd_sqrt error {sq:.2e}")
        })?;

        let (psd, min_eig) = is_psd(&m, 1e-9).map_err(err)?;
        ensure(psd == (sorted[0] >= 0.0), || {
            format!("matrix {k}: is_psd {psd} with min eigenvalue {min_eig}")
        })?;
        if kind != 2 {
            let minors = principal_minors(&m);
            let min_minor = minors.iter().copied().fold(f64::INFINITY, f64::min);
            // Positive definite iff every principal minor is positive; one negative eigenvalue makes the determinant negative.
            let minors_say_psd = if kind == 0 {
                min_minor > 0.0
            } else {
                minors[minors.len() - 1] >= 0.0
            };
            minor_checks += 1;
            ensure(
                minors_say_psd == (kind == 0) && minors_say_psd == psd,
                || format!("matrix {k}: principal minors disagree with is_psd = {psd}"),
            )?;
        }
    }
    Ok(format!("1000 matrices, max eig error {worst_rec:.2e}, max sqrt error {worst_sqrt:.2e}, {minor_checks} minor cross-checks"))
}

fn main() {
    let criteria: [Criterion; 7] = [
        (
            "two-state optimum equals 1/(1+s)",
            two_state_optimum_matches_pair_bound,
        ),
        (
            "single-clonable closed form matches bisection",
            single_clonable_closed_form,
        ),
        ("clonability gate", clonability_gate),
        ("synthesis soundness", synthesis_soundness),
        ("necessity probe", necessity_probe),
        ("discrimination and large-N limit", discrimination_limit),
        ("kernel properties", kernel_properties),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        match check() {
            Ok(detail) => println!(
                "criterion {}: PASS  {name} ({detail}; {:.2?})",
                i + 1,
                start.elapsed()
            ),
            Err(reason) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {reason}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
