//! Elastic collisions of point balls on a line, the reflection picture of
//! their velocities, and the numbers game that bounds how often they collide.
//!
//! Balls are indexed `0..=n` left to right; collision pairs and game
//! vertices are indexed `1..=n`, pair `i` being balls `i - 1` and `i`.
//! Computations are generic over [`Scalar`], implemented for exact
//! rationals ([`Exact`]) and `f64`.

pub mod analysis;
pub mod cli;
pub mod dynamics;
pub mod embedding;
pub mod game;
pub mod model;
pub mod sampling;
pub mod scalar;

pub use analysis::{check_conditions, cross_validate, max_collision_initial, search_violations, ConditionReport};
pub use dynamics::{collide, simulate, step, SimConfig, SimultaneityPolicy};
pub use embedding::{build_embedding, embed_velocities, reflect, GramData};
pub use game::{fire, inversion_number, is_terminal, play_negative_game, potential, GamePosition, WeightMatrix};
pub use model::{collision_bound, total_collisions, CollisionTrace, MassProfile, SystemState, Termination};
pub use scalar::{Exact, NumericMode, Scalar, Tolerance};
