//! Core domain types: masses, kinematic state, collision events and traces.
//!
//! Ball indices run `0..=n` left to right. A collision *pair* `i` (with
//! `1 <= i <= n`) always means "ball `i - 1` hits ball `i`".

use serde::Serialize;
use thiserror::Error;

use crate::scalar::{Rendered, RenderedSeq, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("a system needs at least two balls, got {0}")]
    TooFewBalls(usize),
    #[error("mass of ball {index} is not strictly positive")]
    NonPositiveMass { index: usize },
    #[error("{field} has length {got}, expected {expected}")]
    LengthMismatch {
        field: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("positions must be strictly increasing (ball {index} is not right of ball {prev})", prev = index - 1)]
    PositionsNotIncreasing { index: usize },
}

/// Positive masses `m_0..=m_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MassProfile<S> {
    masses: Vec<S>,
}

impl<S: Scalar> MassProfile<S> {
    pub fn new(masses: Vec<S>) -> Result<Self, ModelError> {
        if masses.len() < 2 {
            return Err(ModelError::TooFewBalls(masses.len()));
        }
        if let Some(index) = masses.iter().position(|m| !m.is_positive_strict()) {
            return Err(ModelError::NonPositiveMass { index });
        }
        Ok(Self { masses })
    }

    /// `n + 1` balls of mass one.
    pub fn equal(balls: usize) -> Result<Self, ModelError> {
        Self::new(vec![S::one(); balls])
    }

    pub fn as_slice(&self) -> &[S] {
        &self.masses
    }

    /// Number of balls, `n + 1`.
    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Number of adjacent pairs, `n`.
    pub fn pairs(&self) -> usize {
        self.masses.len() - 1
    }

    pub fn get(&self, ball: usize) -> &S {
        &self.masses[ball]
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> MassProfile<T> {
        MassProfile {
            masses: self.masses.iter().map(f).collect(),
        }
    }

    pub fn to_f64(&self) -> MassProfile<f64> {
        self.map(|m| m.to_f64())
    }

    pub fn momentum(&self, velocities: &[S]) -> S {
        self.masses
            .iter()
            .zip(velocities)
            .fold(S::zero(), |acc, (m, v)| acc + m.clone() * v.clone())
    }

    /// Twice the kinetic energy, `sum m_i v_i^2`.
    pub fn vis_viva(&self, velocities: &[S]) -> S {
        self.masses
            .iter()
            .zip(velocities)
            .fold(S::zero(), |acc, (m, v)| acc + m.clone() * v.clone() * v.clone())
    }
}

/// Maximum collision count `n(n+1)/2` for `n + 1` balls.
pub fn collision_bound(n: usize) -> u64 {
    let n = n as u64;
    n * (n + 1) / 2
}

/// Positions, velocities and clock of the system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState<S> {
    pub positions: Vec<S>,
    pub velocities: Vec<S>,
    pub time: S,
}

impl<S: Scalar> SystemState<S> {
    /// State at time zero, validated against `masses`.
    pub fn new(positions: Vec<S>, velocities: Vec<S>, masses: &MassProfile<S>) -> Result<Self, ModelError> {
        let state = Self {
            positions,
            velocities,
            time: S::zero(),
        };
        state.validate(masses)?;
        Ok(state)
    }

    pub fn validate(&self, masses: &MassProfile<S>) -> Result<(), ModelError> {
        let expected = masses.len();
        for (field, got) in [("positions", self.positions.len()), ("velocities", self.velocities.len())] {
            if got != expected {
                return Err(ModelError::LengthMismatch { field, expected, got });
            }
        }
        if let Some(w) = self.positions.windows(2).position(|w| w[0] >= w[1]) {
            return Err(ModelError::PositionsNotIncreasing { index: w + 1 });
        }
        Ok(())
    }

    pub fn balls(&self) -> usize {
        self.positions.len()
    }

    pub fn to_f64(&self) -> SystemState<f64> {
        SystemState {
            positions: self.positions.iter().map(Scalar::to_f64).collect(),
            velocities: self.velocities.iter().map(Scalar::to_f64).collect(),
            time: self.time.to_f64(),
        }
    }
}

/// One instant at which one or more pairwise non-adjacent pairs collide.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionEvent<S> {
    pub time: S,
    /// Pair indices in increasing order.
    pub pairs: Vec<usize>,
    /// `(v_{i-1}, v_i)` before the collision, one entry per pair.
    pub pre: Vec<(S, S)>,
    /// `(v'_{i-1}, v'_i)` after the collision, one entry per pair.
    pub post: Vec<(S, S)>,
}

impl<S: Scalar> CollisionEvent<S> {
    pub fn collisions(&self) -> usize {
        self.pairs.len()
    }

    /// Checks non-adjacency of pairs and strict approach before impact.
    pub fn is_well_formed(&self) -> bool {
        let adjacent_free = self.pairs.windows(2).all(|w| w[1] > w[0] + 1);
        let approaching = self.pre.iter().all(|(l, r)| l > r);
        adjacent_free && approaching && self.pre.len() == self.pairs.len() && self.post.len() == self.pairs.len()
    }
}

/// Why a simulation stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum Termination<S> {
    /// Velocities are non-decreasing left to right; no further collision is possible.
    Sorted,
    EventCapReached,
    /// Two adjacent pairs (three balls) met at the same instant.
    MultipleCollision { time: S, pairs: Vec<usize> },
}

impl<S> Termination<S> {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::Sorted => "sorted",
            Termination::EventCapReached => "event_cap_reached",
            Termination::MultipleCollision { .. } => "multiple_collision",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionTrace<S> {
    pub initial: SystemState<S>,
    pub events: Vec<CollisionEvent<S>>,
    pub termination: Termination<S>,
    pub final_state: SystemState<S>,
}

impl<S: Scalar> CollisionTrace<S> {
    pub fn total_collisions(&self) -> u64 {
        total_collisions(self)
    }

    /// Velocity snapshots: the initial velocities followed by the velocities after each event.
    pub fn velocity_history(&self) -> Vec<Vec<S>> {
        let mut current = self.initial.velocities.clone();
        let mut history = Vec::with_capacity(self.events.len() + 1);
        history.push(current.clone());
        for event in &self.events {
            for (&i, (left, right)) in event.pairs.iter().zip(&event.post) {
                current[i - 1] = left.clone();
                current[i] = right.clone();
            }
            history.push(current.clone());
        }
        history
    }

    /// One `{t, pairs, pre, post}` JSON object per line, one line per event.
    pub fn to_jsonl(&self) -> String {
        self.events
            .iter()
            .map(|e| serde_json::to_string(&EventRecord::from(e)).expect("event records serialize") + "\n")
            .collect()
    }

    /// Times non-decreasing and every event well formed.
    pub fn is_consistent(&self) -> bool {
        self.events.windows(2).all(|w| w[0].time <= w[1].time) && self.events.iter().all(CollisionEvent::is_well_formed)
    }
}

/// Sum of collided pairs over all events.
pub fn total_collisions<S: Scalar>(trace: &CollisionTrace<S>) -> u64 {
    trace.events.iter().map(|e| e.collisions() as u64).sum()
}

/// JSON view of one event: `{t, pairs, pre, post}`.
#[derive(Serialize)]
#[serde(bound = "")]
pub struct EventRecord<'a, S: Scalar> {
    t: Rendered<'a, S>,
    pairs: &'a [usize],
    pre: Vec<[Rendered<'a, S>; 2]>,
    post: Vec<[Rendered<'a, S>; 2]>,
}

impl<'a, S: Scalar> From<&'a CollisionEvent<S>> for EventRecord<'a, S> {
    fn from(event: &'a CollisionEvent<S>) -> Self {
        let pair = |(l, r): &'a (S, S)| [Rendered(l), Rendered(r)];
        EventRecord {
            t: Rendered(&event.time),
            pairs: &event.pairs,
            pre: event.pre.iter().map(pair).collect(),
            post: event.post.iter().map(pair).collect(),
        }
    }
}

/// JSON view of a state.
#[derive(Serialize)]
#[serde(bound = "")]
pub struct StateRecord<'a, S: Scalar> {
    pub time: Rendered<'a, S>,
    pub positions: RenderedSeq<'a, S>,
    pub velocities: RenderedSeq<'a, S>,
}

impl<'a, S: Scalar> From<&'a SystemState<S>> for StateRecord<'a, S> {
    fn from(state: &'a SystemState<S>) -> Self {
        StateRecord {
            time: Rendered(&state.time),
            positions: RenderedSeq(&state.positions),
            velocities: RenderedSeq(&state.velocities),
        }
    }
}
