//! Acceptance suite: one line per criterion, non-zero exit if any fails.

mod common;

use std::process::Command;
use std::time::Instant;

use hardball::analysis::{check_conditions_slice, cross_validate};
use hardball::embedding::neighbor_gram_closed_form;
use hardball::game::{longest_negative_play, BuiltinStrategy, StrategyKind};
use hardball::sampling::SystemSampler;
use hardball::{
    build_embedding, collide, collision_bound, embed_velocities, max_collision_initial, play_negative_game, reflect,
    search_violations, simulate, Exact, GamePosition, MassProfile, Scalar, SimConfig, SimultaneityPolicy,
    Termination, Tolerance, WeightMatrix,
};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const SEED: u64 = 20_240_601;
const CONFORMING_TRIALS: u64 = 10_000;

struct Outcome {
    passed: bool,
    detail: String,
}

type Criterion<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn hardball_cli(args: &[String]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_hardball"))
        .args(args)
        .env_remove(hardball::cli::OUT_DIR_ENV)
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn join<S: Scalar>(xs: &[S]) -> String {
    xs.iter().map(Scalar::render).collect::<Vec<_>>().join(",")
}

fn max_collision_args(n: usize) -> Vec<String> {
    let (m, s) = max_collision_initial::<Exact>(n);
    ["simulate", "--exact", "--masses", &join(m.as_slice()), "--positions", &join(&s.positions), "--velocities", &join(&s.velocities)]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

fn light_middle_args() -> Vec<String> {
    ["simulate", "--exact", "--masses", "1,1/100,1", "--positions", "0,1,2", "--velocities", "1,0,-1", "--simultaneity", "left-first"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

fn equal_mass_attainment() -> Outcome {
    let mut wrong = Vec::new();
    for n in 1..=30 {
        let (m, s) = max_collision_initial::<Exact>(n);
        let trace = simulate(&s, &m, &SimConfig::for_balls(n + 1)).unwrap();
        if trace.termination != Termination::Sorted || trace.total_collisions() != collision_bound(n) {
            wrong.push(format!("n={n}: {} ({})", trace.total_collisions(), trace.termination.label()));
        }
    }
    if wrong.is_empty() {
        outcome(true, "n = 1..30 each give exactly n(n+1)/2 collisions")
    } else {
        outcome(false, wrong.join("; "))
    }
}

/// Per-trial record for the conforming ensemble, shared by criteria 2, 3 and 6.
struct Audit {
    exceeded: bool,
    defined: bool,
    certified: Result<(), String>,
    conserved: bool,
}

fn audit_trial<S: Scalar>(n: usize, trial: u64) -> Audit {
    let sampler = SystemSampler::conforming(n);
    let (m, s) = sampler.sample::<S>(SEED, trial).unwrap();
    let trace = simulate(&s, &m, &SimConfig::for_balls(n + 1)).unwrap();
    let defined = trace.termination == Termination::Sorted;
    let certified = cross_validate(&trace, &m, Tolerance::default())
        .map_err(|e| format!("n={n} trial={trial}: {e}"))
        .and_then(|cv| {
            let drops = cv.inversion_sequence.windows(2).zip(&trace.events).all(|(w, e)| w[0] >= w[1] + e.pairs.len() as u64);
            if cv.weights_ok && drops {
                Ok(())
            } else {
                Err(format!("n={n} trial={trial}: weights_ok={} drops={drops}", cv.weights_ok))
            }
        });
    let history = trace.velocity_history();
    let p0 = m.momentum(&s.velocities);
    let e0 = m.vis_viva(&s.velocities);
    let conserved = match S::MODE {
        hardball::NumericMode::Exact => history.iter().all(|v| m.momentum(v) == p0 && m.vis_viva(v) == e0),
        hardball::NumericMode::Float => {
            let p_scale: f64 = m.as_slice().iter().zip(&s.velocities).map(|(a, b)| (a.to_f64() * b.to_f64()).abs()).sum();
            let e_scale = e0.to_f64();
            history.iter().all(|v| {
                (m.momentum(v).to_f64() - p0.to_f64()).abs() <= 1e-8 * p_scale
                    && (m.vis_viva(v).to_f64() - e_scale).abs() <= 1e-8 * e_scale
            })
        }
    };
    Audit {
        exceeded: trace.total_collisions() > collision_bound(n),
        defined,
        certified,
        conserved,
    }
}

/// Trials per n so that n = 1..6 together cover `CONFORMING_TRIALS`.
fn trials_for(n: usize) -> u64 {
    CONFORMING_TRIALS / 6 + u64::from((n as u64) <= CONFORMING_TRIALS % 6)
}

fn conforming_audits<S: Scalar>() -> Vec<Audit> {
    (1..=6usize)
        .flat_map(|n| (0..trials_for(n)).map(move |t| (n, t)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(n, t)| audit_trial::<S>(n, t))
        .collect()
}

fn conforming_bound(exact: &[Audit], float: &[Audit]) -> Outcome {
    let mut critical = 0;
    for n in 1..=6 {
        let sampler = SystemSampler::conforming(n);
        let config = SimConfig::for_balls(n + 1);
        critical += search_violations::<Exact>(&sampler, trials_for(n), SEED, &config).is_err() as u32;
        critical += search_violations::<f64>(&sampler, trials_for(n), SEED, &config).is_err() as u32;
    }
    let exceeded = exact.iter().chain(float).filter(|a| a.exceeded).count();
    let undefined = exact.iter().chain(float).filter(|a| !a.defined).count();
    outcome(
        exceeded == 0 && critical == 0 && undefined == 0,
        format!(
            "{} systems per mode, n = 1..6: {exceeded} above n(n+1)/2, {critical} critical findings, {undefined} aborted or capped",
            exact.len()
        ),
    )
}

fn monotone_certificate(exact: &[Audit], float: &[Audit]) -> Outcome {
    let failures: Vec<&String> = exact.iter().chain(float).filter_map(|a| a.certified.as_ref().err()).collect();
    let mut cli_failures = Vec::new();
    for n in 1..=6 {
        for mode in ["--exact", "--float"] {
            let args: Vec<String> = ["certify", mode, "--n", &n.to_string(), "--trials", &trials_for(n).to_string(), "--seed", &SEED.to_string()]
                .iter()
                .map(|s| s.to_string())
                .collect();
            let (code, _) = hardball_cli(&args);
            if code != 0 {
                cli_failures.push(format!("n={n} {mode}: exit {code}"));
            }
        }
    }
    outcome(
        failures.is_empty() && cli_failures.is_empty(),
        format!(
            "{} traces audited, {} failures; certify command: {}",
            exact.len() + float.len(),
            failures.len(),
            if cli_failures.is_empty() { "all exit 0".to_string() } else { cli_failures.join(", ") }
        ),
    )
}

fn violation_witness() -> Outcome {
    let (m, s) = common::system::<Exact>(&["1", "1/100", "1"], &["0", "1", "2"], &["1", "0", "-1"]);
    let default = simulate(&s, &m, &SimConfig::for_balls(3)).unwrap();
    let aborts = matches!(default.termination, Termination::MultipleCollision { .. });
    let resolved = simulate(&s, &m, &SimConfig::for_balls(3).with_policy(SimultaneityPolicy::ResolveLeftFirst)).unwrap();
    let count = resolved.total_collisions();
    let oracle = common::fine_step_collisions(&[1.0, 0.01, 1.0], &[0.0, 1.0, 2.0], &[1.0, 0.0, -1.0], 1e-4, 1_000_000);
    outcome(
        aborts && count > 3 && oracle == count && resolved.termination == Termination::Sorted,
        format!(
            "exact count {count} with left-first resolution of the triple contact, fine-step oracle {oracle}; default policy {}",
            default.termination.label()
        ),
    )
}

fn embedding_identities() -> Outcome {
    let tol = Tolerance::default().scaled(10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut failures = Vec::new();
    let mut bridge_checks = 0;
    for profile in 0..1000 {
        let balls = rng.random_range(2..=9);
        let m: Vec<f64> = (0..balls).map(|_| rng.random_range(-4.0f64..4.0).exp()).collect();
        let masses = MassProfile::new(m.clone()).unwrap();
        let g = build_embedding(&masses);
        let mut bad = g.identity_violations(tol);
        for i in 1..g.n() {
            let closed = neighbor_gram_closed_form(&masses, i);
            if !tol.eq_f64(closed, g.gram(i, i + 1)) {
                bad.push(format!("closed-form gram {i}"));
            }
        }
        if g.basis_rank(Tolerance::default()) != balls {
            bad.push("rank".into());
        }
        let v: Vec<f64> = (0..balls).map(|_| rng.random_range(-10.0..10.0)).collect();
        let embedded = embed_velocities(&masses, &v).unwrap();
        for i in 1..balls {
            if v[i - 1] <= v[i] {
                continue;
            }
            let (l, r) = collide(&m[i - 1], &m[i], &v[i - 1], &v[i], Tolerance::default()).unwrap();
            let mut after = v.clone();
            after[i - 1] = l;
            after[i] = r;
            let lhs = embed_velocities(&masses, &after).unwrap();
            let rhs = reflect(&g, &embedded, i);
            bridge_checks += 1;
            if !lhs.coords().iter().zip(rhs.coords()).all(|(a, b)| tol.eq_f64(*a, *b)) {
                bad.push(format!("bridge at {i}"));
            }
        }
        if !bad.is_empty() {
            failures.push(format!("profile {profile}: {}", bad.join(", ")));
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "1000 profiles with up to 9 balls, {bridge_checks} bridge checks, {} failing{}",
            failures.len(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    )
}

fn conservation(exact: &[Audit], float: &[Audit]) -> Outcome {
    let bad_exact = exact.iter().filter(|a| !a.conserved).count();
    let bad_float = float.iter().filter(|a| !a.conserved).count();
    outcome(
        bad_exact == 0 && bad_float == 0,
        format!("exact traces not bit-identical: {bad_exact}; float traces beyond 1e-8 relative: {bad_float}"),
    )
}

fn game_bound() -> Outcome {
    let results: Vec<Result<usize, String>> = (0..10_000u64)
        .into_par_iter()
        .map(|case| {
            let mut rng = ChaCha8Rng::seed_from_u64(SEED);
            rng.set_stream(case);
            let n = rng.random_range(1..=6usize);
            let k: Vec<Exact> = (1..n)
                .map(|_| Exact::new(BigInt::from(rng.random_range(0..=1000)), BigInt::from(1000)))
                .collect();
            let k = WeightMatrix::from_neighbors(n, k).unwrap();
            let start = GamePosition::new((0..n).map(|_| Exact::from_i64(rng.random_range(-10..=10))).collect()).unwrap();
            let bound = collision_bound(n) as usize;
            let mut longest = 0;
            for kind in StrategyKind::ALL {
                let mut strategy = BuiltinStrategy::new(kind, case);
                let play = play_negative_game(&start, &k, &mut strategy, bound + 1, Tolerance::ZERO).unwrap();
                if !play.terminated || play.len() > bound || !play.strictly_decreasing() {
                    return Err(format!("case {case} strategy {kind}: {} moves", play.len()));
                }
                longest = longest.max(play.len());
            }
            Ok(longest)
        })
        .collect();
    let failures: Vec<&String> = results.iter().filter_map(|r| r.as_ref().err()).collect();
    let longest = results.iter().filter_map(|r| r.as_ref().ok()).max().copied().unwrap_or(0);
    outcome(
        failures.is_empty(),
        format!(
            "10000 weight matrices x 4 strategies: {} failures, longest play {longest} moves{}",
            failures.len(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    )
}

fn converse_probe() -> Outcome {
    let k = WeightMatrix::from_neighbors(2, vec![Exact::new(BigInt::from(3), BigInt::from(2))]).unwrap();
    let mut best = (0, Vec::new(), Vec::new());
    for a in -5..=5 {
        for b in -5..=5 {
            let start = GamePosition::new(vec![Exact::from_i64(a), Exact::from_i64(b)]).unwrap();
            let (len, path) = longest_negative_play(&start, &k, 1000, Tolerance::ZERO);
            if len > best.0 {
                best = (len, vec![a, b], path);
            }
        }
    }
    outcome(
        best.0 > 3,
        format!("longest negative play {} moves from start {:?} firing {:?}", best.0, best.1, best.2),
    )
}

fn am_gm_separation() -> Outcome {
    let m: Vec<Exact> = ["1", "2", "4"].iter().map(|s| common::ex(s)).collect();
    let r = check_conditions_slice(&m, Tolerance::ZERO).unwrap();
    outcome(
        r.geometric_ok && !r.arithmetic_ok,
        format!("(1,2,4): geometric {} arithmetic {}", r.geometric_ok, r.arithmetic_ok),
    )
}

fn determinism() -> Outcome {
    let mut runs = (1..=30).map(max_collision_args).collect::<Vec<_>>();
    runs.push(light_middle_args());
    let mut differing = Vec::new();
    for args in &runs {
        let (code_a, a) = hardball_cli(args);
        let (code_b, b) = hardball_cli(args);
        if a != b || code_a != code_b || code_a != 0 || a.is_empty() {
            differing.push(args[3].clone());
        }
    }
    outcome(
        differing.is_empty(),
        format!("{} repeated command-line runs, {} differing", runs.len(), differing.len()),
    )
}

fn main() {
    let started = Instant::now();
    let exact = conforming_audits::<Exact>();
    let float = conforming_audits::<f64>();
    let criteria: Vec<(&str, Criterion<'_>)> = vec![
        ("equal-mass attainment", Box::new(equal_mass_attainment)),
        ("bound under the geometric-mean condition", Box::new(|| conforming_bound(&exact, &float))),
        ("monotone inversion certificate", Box::new(|| monotone_certificate(&exact, &float))),
        ("violation witness", Box::new(violation_witness)),
        ("embedding identities", Box::new(embedding_identities)),
        ("conservation", Box::new(|| conservation(&exact, &float))),
        ("numbers-game bound", Box::new(game_bound)),
        ("converse probe", Box::new(converse_probe)),
        ("AM-GM separation", Box::new(am_gm_separation)),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = check();
        failed += usize::from(!result.passed);
        println!(
            "criterion {:>2} {} {name}: {} ({:.2}s)",
            i + 1,
            if result.passed { "PASS" } else { "FAIL" },
            result.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
