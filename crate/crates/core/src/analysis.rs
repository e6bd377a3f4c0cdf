//! Mass conditions, the simulation-to-game bridge, extremal initial data and
//! the violation search.

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{simulate, SimConfig};
use crate::game::{fire, inversion_number, is_negative_move, neighbor_weights_of_masses, potential, GamePosition, WeightMatrix};
use crate::model::{collision_bound, CollisionTrace, MassProfile, ModelError, SystemState, Termination};
use crate::sampling::SystemSampler;
use crate::scalar::{Scalar, Tolerance};

/// Which hypotheses a mass profile satisfies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    /// `m_i >= sqrt(m_{i-1} m_{i+1})` for every interior ball.
    pub geometric_ok: bool,
    /// `m_i >= (m_{i-1} + m_{i+1}) / 2` for every interior ball.
    pub arithmetic_ok: bool,
    /// Every `k_{i,i+1} <= 1`.
    pub weights_ok: bool,
    /// `m_i - sqrt(m_{i-1} m_{i+1})`, interior balls `1..n-1`.
    pub geometric_margins: Vec<f64>,
    /// `m_i - (m_{i-1} + m_{i+1}) / 2`, interior balls `1..n-1`.
    pub arithmetic_margins: Vec<f64>,
    /// `k_{i,i+1}`, `1 <= i <= n - 1`.
    pub weights: Vec<f64>,
}

/// Evaluates both mass conditions (exactly in exact mode, via the squared
/// form for the geometric one) and the weight bound.
pub fn check_conditions<S: Scalar>(masses: &MassProfile<S>, tol: Tolerance) -> ConditionReport {
    check_conditions_slice(masses.as_slice(), tol).expect("mass profile already validated")
}

/// Same as [`check_conditions`] but accepts a single ball, which satisfies
/// every condition vacuously.
pub fn check_conditions_slice<S: Scalar>(m: &[S], tol: Tolerance) -> Result<ConditionReport, ModelError> {
    if m.is_empty() {
        return Err(ModelError::TooFewBalls(0));
    }
    if let Some(index) = m.iter().position(|x| !x.is_positive_strict()) {
        return Err(ModelError::NonPositiveMass { index });
    }
    let two = S::from_i64(2);
    let interior = 1..m.len().saturating_sub(1);
    let geometric_ok = interior
        .clone()
        .all(|i| !(m[i].clone() * m[i].clone()).lt_tol(&(m[i - 1].clone() * m[i + 1].clone()), tol));
    let arithmetic_ok = interior
        .clone()
        .all(|i| !(two.clone() * m[i].clone()).lt_tol(&(m[i - 1].clone() + m[i + 1].clone()), tol));
    let mf: Vec<f64> = m.iter().map(Scalar::to_f64).collect();
    let geometric_margins = interior.clone().map(|i| mf[i] - (mf[i - 1] * mf[i + 1]).sqrt()).collect();
    let arithmetic_margins = interior.map(|i| mf[i] - (mf[i - 1] + mf[i + 1]) / 2.0).collect();
    let weights = neighbor_weights_of_masses(&mf);
    let weights_ok = weights.iter().all(|k| !tol.gt_f64(*k, 1.0));
    Ok(ConditionReport {
        geometric_ok,
        arithmetic_ok,
        weights_ok,
        geometric_margins,
        arithmetic_margins,
        weights,
    })
}

/// `p_i = (v_i - v_{i-1}) / sqrt(1/m_i + 1/m_{i-1})`, the collision coordinates of the velocity profile.
pub fn game_position_of_state(masses: &MassProfile<f64>, velocities: &[f64]) -> Result<GamePosition<f64>, ModelError> {
    if velocities.len() != masses.len() {
        return Err(ModelError::LengthMismatch {
            field: "velocities",
            expected: masses.len(),
            got: velocities.len(),
        });
    }
    let m = masses.as_slice();
    let p = (1..m.len())
        .map(|i| (velocities[i] - velocities[i - 1]) / (1.0 / m[i] + 1.0 / m[i - 1]).sqrt())
        .collect();
    Ok(GamePosition::new(p).expect("at least two balls"))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CrossValidationError {
    #[error("game position diverges from simulated velocities after event {event}")]
    MismatchAt {
        event: usize,
        game: Vec<f64>,
        simulated: Vec<f64>,
    },
    #[error("event {event} fires pair {index}, which is not a negative move")]
    NonNegativeFiring { event: usize, index: usize },
    #[error("inversion number went from {before} to {after} across event {event} with {pairs} pair(s)")]
    InversionNotDecreasing {
        event: usize,
        before: u64,
        after: u64,
        pairs: usize,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossValidation {
    /// Inversion number of the potential before the first event and after each event.
    pub inversion_sequence: Vec<u64>,
    pub weights_ok: bool,
    /// Events after which the potential had float near-ties.
    pub near_tie_events: Vec<usize>,
    pub firings: u64,
}

/// Replays a trace as numbers-game firings and audits it against the simulator.
///
/// Starting from the game position of the initial velocities, each event's
/// pairs are fired in order. After every event the position must match the
/// game position of the simulated velocities within `10 * tol`, every firing
/// must be a negative move, and when all weights are at most one the
/// inversion number must drop by at least the number of pairs.
pub fn cross_validate<S: Scalar>(
    trace: &CollisionTrace<S>,
    masses: &MassProfile<S>,
    tol: Tolerance,
) -> Result<CrossValidation, CrossValidationError> {
    let mf = masses.to_f64();
    let k = WeightMatrix::from_masses(&mf);
    let weights_ok = k.certificate_holds(tol);
    let match_tol = tol.scaled(10.0);
    let history = trace.velocity_history();

    let velocities: Vec<f64> = history[0].iter().map(Scalar::to_f64).collect();
    let mut p = game_position_of_state(&mf, &velocities)?;
    let mut inv = inversion_number(&potential(&p), tol);
    let mut inversion_sequence = vec![inv.count];
    let mut near_tie_events = Vec::new();
    let mut firings = 0;

    for (event_index, (event, after)) in trace.events.iter().zip(&history[1..]).enumerate() {
        for &i in &event.pairs {
            if !is_negative_move(&p, i, tol) {
                return Err(CrossValidationError::NonNegativeFiring {
                    event: event_index,
                    index: i,
                });
            }
            p = fire(&p, &k, i);
            firings += 1;
        }
        let velocities: Vec<f64> = after.iter().map(Scalar::to_f64).collect();
        let simulated = game_position_of_state(&mf, &velocities)?;
        let agrees = p
            .as_slice()
            .iter()
            .zip(simulated.as_slice())
            .all(|(a, b)| match_tol.eq_f64(*a, *b));
        if !agrees {
            return Err(CrossValidationError::MismatchAt {
                event: event_index,
                game: p.as_slice().to_vec(),
                simulated: simulated.as_slice().to_vec(),
            });
        }
        let next = inversion_number(&potential(&p), tol);
        if !next.near_ties.is_empty() {
            near_tie_events.push(event_index);
        }
        if weights_ok && next.count + event.pairs.len() as u64 > inv.count {
            return Err(CrossValidationError::InversionNotDecreasing {
                event: event_index,
                before: inv.count,
                after: next.count,
                pairs: event.pairs.len(),
            });
        }
        inversion_sequence.push(next.count);
        inv = next;
    }
    Ok(CrossValidation {
        inversion_sequence,
        weights_ok,
        near_tie_events,
        firings,
    })
}

/// Equal masses at positions `2^j - 1` with velocities `-j`.
///
/// With equal masses every collision exchanges velocities, so the count is
/// the inversion number `n(n+1)/2` of the reversed velocity sequence. The
/// doubling gaps keep every crossing time distinct, so no two collisions are
/// simultaneous.
pub fn max_collision_initial<S: Scalar>(n: usize) -> (MassProfile<S>, SystemState<S>) {
    assert!(n >= 1, "need at least two balls");
    let masses = MassProfile::equal(n + 1).expect("n >= 1");
    let positions = (0..=n)
        .map(|j| {
            let x = (BigInt::from(1u8) << j) - 1;
            S::from_rational(&BigRational::from_integer(x))
        })
        .collect();
    let velocities = (0..=n).map(|j| S::from_i64(-(j as i64))).collect();
    let state = SystemState::new(positions, velocities, &masses).expect("positions are increasing");
    (masses, state)
}

/// A collision count, or a lower bound when the event cap cut the run short.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum CollisionCount {
    Exact(u64),
    AtLeast(u64),
}

impl CollisionCount {
    pub fn value(self) -> u64 {
        match self {
            CollisionCount::Exact(v) | CollisionCount::AtLeast(v) => v,
        }
    }

    pub fn of_trace<S: Scalar>(trace: &CollisionTrace<S>) -> Self {
        match trace.termination {
            Termination::EventCapReached => CollisionCount::AtLeast(trace.total_collisions()),
            _ => CollisionCount::Exact(trace.total_collisions()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Finding<S> {
    pub trial: u64,
    pub masses: MassProfile<S>,
    pub initial: SystemState<S>,
    pub count: CollisionCount,
    pub conditions: ConditionReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchReport<S> {
    pub n: usize,
    pub trials: u64,
    /// Systems exceeding `n(n+1)/2`, in trial order.
    pub findings: Vec<Finding<S>>,
    pub conforming_trials: u64,
    /// Trials whose dynamics hit a multiple collision (undefined continuation).
    pub multiple_collision_trials: u64,
    pub capped_trials: u64,
}

#[derive(Debug, Error)]
pub enum SearchError<S: std::fmt::Debug> {
    /// A profile satisfying the geometric-mean condition exceeded the bound.
    #[error("critical finding: conforming system in trial {} exceeded the bound", .0.trial)]
    CriticalFinding(Box<Finding<S>>),
    #[error("sampler produced an invalid system in trial {trial}: {source}")]
    Sampler { trial: u64, source: ModelError },
}

struct TrialOutcome<S> {
    conforming: bool,
    multiple_collision: bool,
    capped: bool,
    finding: Option<Finding<S>>,
}

/// Simulates `trials` sampled systems in parallel and collects those whose
/// collision count exceeds `n(n+1)/2`. Results are ordered by trial index,
/// so the outcome depends only on the seed.
pub fn search_violations<S: Scalar>(
    sampler: &SystemSampler,
    trials: u64,
    seed: u64,
    config: &SimConfig,
) -> Result<SearchReport<S>, SearchError<S>> {
    let bound = collision_bound(sampler.n);
    let outcomes: Vec<Result<TrialOutcome<S>, SearchError<S>>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let (masses, initial) = sampler
                .sample::<S>(seed, trial)
                .map_err(|source| SearchError::Sampler { trial, source })?;
            let conditions = check_conditions(&masses, config.tolerance);
            let trace = simulate(&initial, &masses, config).map_err(|source| SearchError::Sampler { trial, source })?;
            let count = CollisionCount::of_trace(&trace);
            let conforming = conditions.geometric_ok;
            let finding = (count.value() > bound).then(|| Finding {
                trial,
                masses,
                initial,
                count,
                conditions,
            });
            Ok(TrialOutcome {
                conforming,
                multiple_collision: matches!(trace.termination, Termination::MultipleCollision { .. }),
                capped: trace.termination == Termination::EventCapReached,
                finding,
            })
        })
        .collect();

    let mut report = SearchReport {
        n: sampler.n,
        trials,
        findings: Vec::new(),
        conforming_trials: 0,
        multiple_collision_trials: 0,
        capped_trials: 0,
    };
    for outcome in outcomes {
        let outcome = outcome?;
        report.conforming_trials += outcome.conforming as u64;
        report.multiple_collision_trials += outcome.multiple_collision as u64;
        report.capped_trials += outcome.capped as u64;
        if let Some(finding) = outcome.finding {
            if finding.conditions.geometric_ok {
                return Err(SearchError::CriticalFinding(Box::new(finding)));
            }
            report.findings.push(finding);
        }
    }
    Ok(report)
}
