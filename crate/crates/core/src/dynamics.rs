//! Event-driven simulation of point balls on a line.
//!
//! Between collisions every ball moves ballistically, so the next contact
//! time of each approaching adjacent pair is a closed-form quotient
//! `gap / closing_speed`. All pairs reaching contact at the minimal time
//! form one batch.

use serde::Serialize;
use thiserror::Error;

use crate::model::{collision_bound, CollisionEvent, CollisionTrace, MassProfile, ModelError, SystemState, Termination};
use crate::scalar::{Scalar, Tolerance};

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum CollideError {
    #[error("masses must be strictly positive")]
    NonPositiveMass,
    #[error("balls are not approaching (left velocity must exceed right velocity)")]
    NonApproaching,
}

/// What to do when several pairs reach contact at the same instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimultaneityPolicy {
    /// Batch non-adjacent pairs; abort when two adjacent pairs share a ball.
    #[default]
    ErrorOnAdjacent,
    /// Abort on any batch of more than one pair.
    Forbidden,
    /// Resolve a cluster of coincident balls by firing the leftmost pairs
    /// first; the skipped pairs then fire at the same instant with zero gap.
    /// For a three-ball cluster this is the limit of shrinking the left gap.
    ResolveLeftFirst,
    /// Mirror image of [`SimultaneityPolicy::ResolveLeftFirst`].
    ResolveRightFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub max_events: usize,
    pub simultaneity: SimultaneityPolicy,
    pub tolerance: Tolerance,
}

impl SimConfig {
    /// `10 * n(n+1)/2 + 100` for `n + 1` balls.
    pub fn default_max_events(balls: usize) -> usize {
        10 * collision_bound(balls.saturating_sub(1)) as usize + 100
    }

    pub fn for_balls(balls: usize) -> Self {
        SimConfig {
            max_events: Self::default_max_events(balls),
            simultaneity: SimultaneityPolicy::default(),
            tolerance: Tolerance::default(),
        }
    }

    pub fn with_policy(mut self, policy: SimultaneityPolicy) -> Self {
        self.simultaneity = policy;
        self
    }

    pub fn with_max_events(mut self, max_events: usize) -> Self {
        self.max_events = max_events.max(1);
        self
    }

    pub fn with_tolerance(mut self, tolerance: Tolerance) -> Self {
        self.tolerance = tolerance;
        self
    }
}

/// Post-collision velocities of two balls in an elastic collision.
///
/// `v'_l = ((m_l - m_r) v_l + 2 m_r v_r) / (m_l + m_r)` and
/// `v'_r = (2 m_l v_l + (m_r - m_l) v_r) / (m_l + m_r)`.
pub fn collide<S: Scalar>(m_left: &S, m_right: &S, v_left: &S, v_right: &S, tol: Tolerance) -> Result<(S, S), CollideError> {
    if !m_left.is_positive_strict() || !m_right.is_positive_strict() {
        return Err(CollideError::NonPositiveMass);
    }
    if !v_left.gt_tol(v_right, tol) {
        return Err(CollideError::NonApproaching);
    }
    let total = m_left.clone() + m_right.clone();
    let two = S::from_i64(2);
    let left = ((m_left.clone() - m_right.clone()) * v_left.clone() + two.clone() * m_right.clone() * v_right.clone())
        / total.clone();
    let right = (two * m_left.clone() * v_left.clone() + (m_right.clone() - m_left.clone()) * v_right.clone()) / total;
    Ok((left, right))
}

/// Velocities of one pair before and after a collision.
pub type PairUpdate<S> = ((S, S), (S, S));

/// Applies `collide` to each listed pair, in the given order, updating `velocities` in place.
///
/// Returns `((pre_l, pre_r), (post_l, post_r))` per pair.
pub fn apply_collisions<S: Scalar>(
    velocities: &mut [S],
    masses: &MassProfile<S>,
    pairs: &[usize],
    tol: Tolerance,
) -> Result<Vec<PairUpdate<S>>, CollideError> {
    pairs
        .iter()
        .map(|&i| {
            let pre = (velocities[i - 1].clone(), velocities[i].clone());
            let post = collide(masses.get(i - 1), masses.get(i), &pre.0, &pre.1, tol)?;
            velocities[i - 1] = post.0.clone();
            velocities[i] = post.1.clone();
            Ok((pre, post))
        })
        .collect()
}

/// The next contact instant and every pair reaching contact then.
#[derive(Debug, Clone, PartialEq)]
pub struct NextEvent<S> {
    pub time: S,
    /// Time until the event from the state's clock; zero for already-touching approaching pairs.
    pub dt: S,
    pub pairs: Vec<usize>,
}

/// Finds the earliest future contact, or `None` when velocities are non-decreasing.
pub fn next_event<S: Scalar>(state: &SystemState<S>, tol: Tolerance) -> Option<NextEvent<S>> {
    let x = &state.positions;
    let v = &state.velocities;
    let candidates: Vec<(usize, S)> = (1..x.len())
        .filter(|&i| v[i - 1].gt_tol(&v[i], tol))
        .map(|i| {
            let gap = x[i].clone() - x[i - 1].clone();
            let gap = if gap < S::zero() { S::zero() } else { gap };
            (i, gap / (v[i - 1].clone() - v[i].clone()))
        })
        .collect();
    let dt = candidates
        .iter()
        .map(|(_, dt)| dt)
        .fold(None::<&S>, |best, dt| match best {
            Some(b) if b <= dt => Some(b),
            _ => Some(dt),
        })?
        .clone();
    let pairs = candidates
        .iter()
        .filter(|(_, t)| t.eq_tol(&dt, tol))
        .map(|(i, _)| *i)
        .collect();
    Some(NextEvent {
        time: state.time.clone() + dt.clone(),
        dt,
        pairs,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome<S> {
    Event { state: SystemState<S>, event: CollisionEvent<S> },
    Terminated,
    MultipleCollision { time: S, pairs: Vec<usize> },
}

fn select_pairs(pairs: &[usize], policy: SimultaneityPolicy) -> Option<Vec<usize>> {
    let has_adjacent = pairs.windows(2).any(|w| w[1] == w[0] + 1);
    match policy {
        SimultaneityPolicy::Forbidden if pairs.len() > 1 => None,
        SimultaneityPolicy::ErrorOnAdjacent if has_adjacent => None,
        SimultaneityPolicy::Forbidden | SimultaneityPolicy::ErrorOnAdjacent => Some(pairs.to_vec()),
        SimultaneityPolicy::ResolveLeftFirst => {
            let mut chosen: Vec<usize> = Vec::new();
            for &p in pairs {
                if chosen.last().is_none_or(|&last| last + 1 != p) {
                    chosen.push(p);
                }
            }
            Some(chosen)
        }
        SimultaneityPolicy::ResolveRightFirst => {
            let mut chosen: Vec<usize> = Vec::new();
            for &p in pairs.iter().rev() {
                if chosen.last().is_none_or(|&last| p + 1 != last) {
                    chosen.push(p);
                }
            }
            chosen.reverse();
            Some(chosen)
        }
    }
}

/// Advances to the next event and applies it.
pub fn step<S: Scalar>(
    state: &SystemState<S>,
    masses: &MassProfile<S>,
    config: &SimConfig,
) -> Result<StepOutcome<S>, ModelError> {
    let expected = masses.len();
    for (field, got) in [("positions", state.positions.len()), ("velocities", state.velocities.len())] {
        if got != expected {
            return Err(ModelError::LengthMismatch { field, expected, got });
        }
    }
    if let Some(w) = state.positions.windows(2).position(|w| w[0] > w[1]) {
        return Err(ModelError::PositionsNotIncreasing { index: w + 1 });
    }

    let tol = config.tolerance;
    let Some(next) = next_event(state, tol) else {
        return Ok(StepOutcome::Terminated);
    };
    let Some(chosen) = select_pairs(&next.pairs, config.simultaneity) else {
        return Ok(StepOutcome::MultipleCollision {
            time: next.time,
            pairs: next.pairs,
        });
    };

    let mut positions: Vec<S> = state
        .positions
        .iter()
        .zip(&state.velocities)
        .map(|(x, v)| x.clone() + v.clone() * next.dt.clone())
        .collect();
    for &i in &next.pairs {
        positions[i] = positions[i - 1].clone();
    }
    // float rounding only; exact arithmetic never reorders
    for i in 1..positions.len() {
        if positions[i] < positions[i - 1] {
            positions[i] = positions[i - 1].clone();
        }
    }

    let mut velocities = state.velocities.clone();
    let updates = apply_collisions(&mut velocities, masses, &chosen, tol)
        .expect("next_event only reports approaching pairs of positive masses");
    let (pre, post) = updates.into_iter().unzip();
    Ok(StepOutcome::Event {
        state: SystemState {
            positions,
            velocities,
            time: next.time.clone(),
        },
        event: CollisionEvent {
            time: next.time,
            pairs: chosen,
            pre,
            post,
        },
    })
}

/// Runs `step` until no collision remains, the event cap is hit, or a multiple collision occurs.
pub fn simulate<S: Scalar>(
    initial: &SystemState<S>,
    masses: &MassProfile<S>,
    config: &SimConfig,
) -> Result<CollisionTrace<S>, ModelError> {
    initial.validate(masses)?;
    let mut state = initial.clone();
    let mut events = Vec::new();
    let termination = loop {
        match step(&state, masses, config)? {
            StepOutcome::Terminated => break Termination::Sorted,
            StepOutcome::MultipleCollision { time, pairs } => break Termination::MultipleCollision { time, pairs },
            StepOutcome::Event { state: next, event } => {
                if events.len() >= config.max_events {
                    break Termination::EventCapReached;
                }
                events.push(event);
                state = next;
            }
        }
    };
    Ok(CollisionTrace {
        initial: initial.clone(),
        events,
        termination,
        final_state: state,
    })
}
