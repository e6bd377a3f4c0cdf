//! Numbers game on a weighted path.
//!
//! A position `p = (p_1, ..., p_n)` is augmented with `p_0 = p_{n+1} = 0`.
//! Firing `i` negates `p_i` and adds `p_i * k_{i,j}` to each neighbour `p_j`.
//! A firing is *negative* when `p_i < 0`; a negative play stops at a
//! nonnegative position. The potential `q_i = p_0 + ... + p_i` turns the
//! termination question into sorting: the position is nonnegative iff `q`
//! is non-decreasing, and when every `k_{i,i+1} <= 1` each negative firing
//! removes at least one inversion of `q`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::embedding::build_embedding;
use crate::model::{collision_bound, MassProfile};
use crate::scalar::{Scalar, Tolerance};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GameError {
    #[error("a game needs at least one coordinate")]
    Empty,
    #[error("weight matrix is not square ({rows} rows, row {row} has {len} entries)")]
    NotSquare { rows: usize, row: usize, len: usize },
    #[error("weight matrix is not symmetric at ({i}, {j})")]
    Asymmetric { i: usize, j: usize },
    #[error("diagonal weight k_{i}{i} must be -2")]
    BadDiagonal { i: usize },
    #[error("weight k_{i}{j} must be zero (only neighbours interact)")]
    NotTridiagonal { i: usize, j: usize },
    #[error("expected {expected} neighbour weights, got {got}")]
    NeighborCount { expected: usize, got: usize },
    #[error("position has {got} coordinates, weights expect {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("strategy chose {index}, which is not a negative move")]
    StrategyIllegalMove { index: usize },
    #[error("unknown strategy `{0}` (expected leftmost, rightmost, random or most-negative)")]
    UnknownStrategy(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightProvenance {
    FromMasses(MassProfile<f64>),
    UserSupplied,
}

/// Symmetric tridiagonal weights with `k_ii = -2`, stored as the
/// neighbour entries `k_{i,i+1}` for `1 <= i <= n - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix<S> {
    n: usize,
    neighbors: Vec<S>,
    provenance: WeightProvenance,
}

impl WeightMatrix<f64> {
    /// `k_{i,i+1} = (1/m_i) sqrt( 2/(1/m_i + 1/m_{i-1}) * 2/(1/m_{i+1} + 1/m_i) )`.
    pub fn from_masses(masses: &MassProfile<f64>) -> Self {
        WeightMatrix {
            n: masses.pairs(),
            neighbors: neighbor_weights_of_masses(masses.as_slice()),
            provenance: WeightProvenance::FromMasses(masses.clone()),
        }
    }

    /// Weights read off the reflection embedding, `k_ij = -2 (alpha_i, alpha_j)`.
    pub fn from_embedding(masses: &MassProfile<f64>) -> Self {
        let g = build_embedding(masses);
        let n = g.n();
        WeightMatrix {
            n,
            neighbors: (1..n).map(|i| g.weight(i, i + 1)).collect(),
            provenance: WeightProvenance::FromMasses(masses.clone()),
        }
    }
}

impl<S: Scalar> WeightMatrix<S> {
    /// User-supplied neighbour weights `k_{1,2}, ..., k_{n-1,n}`.
    pub fn from_neighbors(n: usize, neighbors: Vec<S>) -> Result<Self, GameError> {
        if n == 0 {
            return Err(GameError::Empty);
        }
        if neighbors.len() != n - 1 {
            return Err(GameError::NeighborCount {
                expected: n - 1,
                got: neighbors.len(),
            });
        }
        Ok(WeightMatrix {
            n,
            neighbors,
            provenance: WeightProvenance::UserSupplied,
        })
    }

    /// Validates a full matrix (symmetric, diagonal `-2`, tridiagonal support).
    pub fn from_matrix(rows: &[Vec<S>], tol: Tolerance) -> Result<Self, GameError> {
        let n = rows.len();
        if n == 0 {
            return Err(GameError::Empty);
        }
        if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(GameError::NotSquare {
                rows: n,
                row: row + 1,
                len: r.len(),
            });
        }
        let minus_two = S::from_i64(-2);
        for (i, row) in rows.iter().enumerate() {
            if !row[i].eq_tol(&minus_two, tol) {
                return Err(GameError::BadDiagonal { i: i + 1 });
            }
            for (j, entry) in row.iter().enumerate() {
                if !entry.eq_tol(&rows[j][i], tol) {
                    return Err(GameError::Asymmetric { i: i + 1, j: j + 1 });
                }
                if i.abs_diff(j) > 1 && !entry.eq_tol(&S::zero(), tol) {
                    return Err(GameError::NotTridiagonal { i: i + 1, j: j + 1 });
                }
            }
        }
        Self::from_neighbors(n, (1..n).map(|i| rows[i - 1][i].clone()).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn provenance(&self) -> &WeightProvenance {
        &self.provenance
    }

    pub fn neighbors(&self) -> &[S] {
        &self.neighbors
    }

    /// `k_ij` for `0 <= i, j <= n + 1`; entries touching the augmentation indices are zero.
    pub fn k(&self, i: usize, j: usize) -> S {
        let inside = |x: usize| (1..=self.n).contains(&x);
        if !inside(i) || !inside(j) {
            S::zero()
        } else if i == j {
            S::from_i64(-2)
        } else if i.abs_diff(j) == 1 {
            self.neighbors[i.min(j) - 1].clone()
        } else {
            S::zero()
        }
    }

    pub fn to_matrix(&self) -> Vec<Vec<S>> {
        (1..=self.n)
            .map(|i| (1..=self.n).map(|j| self.k(i, j)).collect())
            .collect()
    }

    /// Every neighbour weight is at most one, the hypothesis of the inversion certificate.
    pub fn certificate_holds(&self, tol: Tolerance) -> bool {
        let one = S::one();
        self.neighbors.iter().all(|k| !k.gt_tol(&one, tol))
    }
}

/// `k_{i,i+1} = (1/m_i) sqrt((2 / (1/m_i + 1/m_{i-1})) (2 / (1/m_{i+1} + 1/m_i)))` for interior balls `i`.
pub fn neighbor_weights_of_masses(m: &[f64]) -> Vec<f64> {
    (1..m.len().saturating_sub(1))
        .map(|i| {
            let left = 2.0 / (1.0 / m[i] + 1.0 / m[i - 1]);
            let right = 2.0 / (1.0 / m[i + 1] + 1.0 / m[i]);
            (left * right).sqrt() / m[i]
        })
        .collect()
}

/// Position `(p_1, ..., p_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GamePosition<S> {
    p: Vec<S>,
}

impl<S: Scalar> GamePosition<S> {
    pub fn new(p: Vec<S>) -> Result<Self, GameError> {
        if p.is_empty() {
            return Err(GameError::Empty);
        }
        Ok(Self { p })
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    /// `p_i` under the zero augmentation (`p_0 = p_{n+1} = ... = 0`).
    pub fn get(&self, i: usize) -> S {
        match i {
            0 => S::zero(),
            i if i <= self.p.len() => self.p[i - 1].clone(),
            _ => S::zero(),
        }
    }

    pub fn as_slice(&self) -> &[S] {
        &self.p
    }

    pub fn to_f64(&self) -> GamePosition<f64> {
        GamePosition {
            p: self.p.iter().map(Scalar::to_f64).collect(),
        }
    }

    /// Indices `i` with `p_i < 0`.
    pub fn negative_moves(&self, tol: Tolerance) -> Vec<usize> {
        (1..=self.n()).filter(|&i| is_negative_move(self, i, tol)).collect()
    }
}

/// Prefix sums `q_0 = 0, q_i = p_1 + ... + p_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential<S> {
    q: Vec<S>,
}

impl<S: Scalar> Potential<S> {
    pub fn as_slice(&self) -> &[S] {
        &self.q
    }

    pub fn from_values(q: Vec<S>) -> Self {
        Potential { q }
    }

    /// Non-decreasing under `tol`.
    pub fn is_increasing(&self, tol: Tolerance) -> bool {
        self.q.windows(2).all(|w| !w[0].gt_tol(&w[1], tol))
    }
}

pub fn fire<S: Scalar>(p: &GamePosition<S>, k: &WeightMatrix<S>, i: usize) -> GamePosition<S> {
    let n = p.n();
    assert!((1..=n).contains(&i), "firing index {i} outside 1..={n}");
    let pi = p.p[i - 1].clone();
    let mut out = p.p.clone();
    out[i - 1] = -pi.clone();
    if i > 1 {
        out[i - 2] = out[i - 2].clone() + pi.clone() * k.k(i, i - 1);
    }
    if i < n {
        out[i] = out[i].clone() + pi * k.k(i, i + 1);
    }
    GamePosition { p: out }
}

pub fn is_negative_move<S: Scalar>(p: &GamePosition<S>, i: usize, tol: Tolerance) -> bool {
    p.get(i).lt_tol(&S::zero(), tol)
}

pub fn is_terminal<S: Scalar>(p: &GamePosition<S>, tol: Tolerance) -> bool {
    p.p.iter().all(|x| !x.lt_tol(&S::zero(), tol))
}

pub fn potential<S: Scalar>(p: &GamePosition<S>) -> Potential<S> {
    let mut q = Vec::with_capacity(p.n() + 1);
    let mut acc = S::zero();
    q.push(acc.clone());
    for x in &p.p {
        acc = acc + x.clone();
        q.push(acc.clone());
    }
    Potential { q }
}

/// Inversion count of a potential, with float near-tie diagnostics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InversionCount {
    pub count: u64,
    /// Pairs `(i, j)`, `i < j`, whose values differ but lie within the tolerance.
    /// Such pairs are treated as ties and never counted.
    pub near_ties: Vec<(usize, usize)>,
}

/// Number of pairs `i < j` with `q_i > q_j`.
pub fn inversion_number<S: Scalar>(q: &Potential<S>, tol: Tolerance) -> InversionCount {
    let q = &q.q;
    let mut count = 0;
    let mut near_ties = Vec::new();
    for i in 0..q.len() {
        for j in i + 1..q.len() {
            match q[i].cmp_tol(&q[j], tol) {
                std::cmp::Ordering::Greater => count += 1,
                std::cmp::Ordering::Equal if q[i] != q[j] => near_ties.push((i, j)),
                _ => {}
            }
        }
    }
    InversionCount { count, near_ties }
}

/// Potential after firing `i`, computed from the closed four-case formula
/// rather than from the fired position:
///
/// ```text
/// q'_j = q_j                                   j <= i-2
///        q_i     - p_i (1 - k_{i,i-1})         j  = i-1
///        q_{i-1} - p_i (1 - k_{i,i-1})         j  = i
///        q_j     - p_i (2 - k_{i,i-1} - k_{i,i+1})  j >= i+1
/// ```
pub fn potential_after_firing<S: Scalar>(q: &Potential<S>, k: &WeightMatrix<S>, i: usize) -> Potential<S> {
    let q = &q.q;
    let one = S::one();
    let p_i = q[i].clone() - q[i - 1].clone();
    let left = one.clone() - k.k(i, i - 1);
    let both = left.clone() + one - k.k(i, i + 1);
    let out = (0..q.len())
        .map(|j| {
            if j + 2 <= i {
                q[j].clone()
            } else if j + 1 == i {
                q[i].clone() - p_i.clone() * left.clone()
            } else if j == i {
                q[i - 1].clone() - p_i.clone() * left.clone()
            } else {
                q[j].clone() - p_i.clone() * both.clone()
            }
        })
        .collect();
    Potential { q: out }
}

/// The correction `-p_i (0, ..., 0, 1-k_{i,i-1}, 1-k_{i,i-1}, 2-k_{i,i-1}-k_{i,i+1}, ...)`
/// added to `q` with entries `i-1` and `i` swapped to obtain the post-firing potential.
pub fn correction_sequence<S: Scalar>(p: &GamePosition<S>, k: &WeightMatrix<S>, i: usize) -> Vec<S> {
    let one = S::one();
    let minus_p = -p.get(i);
    let left = one.clone() - k.k(i, i - 1);
    let both = left.clone() + one - k.k(i, i + 1);
    (0..=p.n())
        .map(|j| {
            if j + 2 <= i {
                S::zero()
            } else if j <= i {
                minus_p.clone() * left.clone()
            } else {
                minus_p.clone() * both.clone()
            }
        })
        .collect()
}

/// Chooses the next firing among the legal negative moves.
pub trait Strategy<S> {
    fn choose(&mut self, p: &GamePosition<S>, legal: &[usize]) -> usize;
}

impl<S, F> Strategy<S> for F
where
    F: FnMut(&GamePosition<S>, &[usize]) -> usize,
{
    fn choose(&mut self, p: &GamePosition<S>, legal: &[usize]) -> usize {
        self(p, legal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Leftmost,
    Rightmost,
    Random,
    MostNegative,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::Leftmost,
        StrategyKind::Rightmost,
        StrategyKind::Random,
        StrategyKind::MostNegative,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Leftmost => "leftmost",
            StrategyKind::Rightmost => "rightmost",
            StrategyKind::Random => "random",
            StrategyKind::MostNegative => "most-negative",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| GameError::UnknownStrategy(s.to_string()))
    }
}

/// One of the built-in move-selection rules; `Random` is seeded and reproducible.
#[derive(Debug, Clone)]
pub struct BuiltinStrategy {
    kind: StrategyKind,
    rng: ChaCha8Rng,
}

impl BuiltinStrategy {
    pub fn new(kind: StrategyKind, seed: u64) -> Self {
        BuiltinStrategy {
            kind,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn kind(&self) -> StrategyKind {
        self.kind
    }
}

impl<S: Scalar> Strategy<S> for BuiltinStrategy {
    fn choose(&mut self, p: &GamePosition<S>, legal: &[usize]) -> usize {
        match self.kind {
            StrategyKind::Leftmost => legal[0],
            StrategyKind::Rightmost => legal[legal.len() - 1],
            StrategyKind::Random => legal[self.rng.random_range(0..legal.len())],
            StrategyKind::MostNegative => {
                let mut best = legal[0];
                for &i in &legal[1..] {
                    if p.get(i) < p.get(best) {
                        best = i;
                    }
                }
                best
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameMove<S> {
    pub index: usize,
    pub position: GamePosition<S>,
    pub inversions: InversionCount,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GamePlay<S> {
    pub start: GamePosition<S>,
    pub start_inversions: InversionCount,
    pub moves: Vec<GameMove<S>>,
    /// Reached a nonnegative position (as opposed to running out of moves).
    pub terminated: bool,
}

impl<S: Scalar> GamePlay<S> {
    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// Inversion numbers from the start through every move.
    pub fn inversion_sequence(&self) -> Vec<u64> {
        std::iter::once(self.start_inversions.count)
            .chain(self.moves.iter().map(|m| m.inversions.count))
            .collect()
    }

    /// Each firing removed at least one inversion.
    pub fn strictly_decreasing(&self) -> bool {
        self.inversion_sequence().windows(2).all(|w| w[1] < w[0])
    }
}

/// `n(n+1)/2 + 1` when the certificate holds, else the dynamics event cap.
pub fn default_max_moves<S: Scalar>(k: &WeightMatrix<S>, tol: Tolerance) -> usize {
    let bound = collision_bound(k.n()) as usize;
    if k.certificate_holds(tol) {
        bound + 1
    } else {
        10 * bound + 100
    }
}

/// Plays negative moves chosen by `strategy` until the position is nonnegative or `max_moves` is reached.
pub fn play_negative_game<S: Scalar>(
    start: &GamePosition<S>,
    k: &WeightMatrix<S>,
    strategy: &mut dyn Strategy<S>,
    max_moves: usize,
    tol: Tolerance,
) -> Result<GamePlay<S>, GameError> {
    if start.n() != k.n() {
        return Err(GameError::LengthMismatch {
            expected: k.n(),
            got: start.n(),
        });
    }
    let mut position = start.clone();
    let mut moves = Vec::new();
    let terminated = loop {
        let legal = position.negative_moves(tol);
        if legal.is_empty() {
            break true;
        }
        if moves.len() >= max_moves {
            break false;
        }
        let index = strategy.choose(&position, &legal);
        if !legal.contains(&index) {
            return Err(GameError::StrategyIllegalMove { index });
        }
        position = fire(&position, k, index);
        let inversions = inversion_number(&potential(&position), tol);
        moves.push(GameMove {
            index,
            position: position.clone(),
            inversions,
        });
    };
    Ok(GamePlay {
        start_inversions: inversion_number(&potential(start), tol),
        start: start.clone(),
        moves,
        terminated,
    })
}

/// Longest negative play from `start` over every possible sequence of choices,
/// explored depth-first up to `depth_cap` moves. Returns the length and one
/// sequence of fired indices achieving it.
pub fn longest_negative_play<S: Scalar>(
    start: &GamePosition<S>,
    k: &WeightMatrix<S>,
    depth_cap: usize,
    tol: Tolerance,
) -> (usize, Vec<usize>) {
    fn go<S: Scalar>(
        p: &GamePosition<S>,
        k: &WeightMatrix<S>,
        depth_left: usize,
        tol: Tolerance,
        path: &mut Vec<usize>,
        best: &mut Vec<usize>,
    ) {
        if path.len() > best.len() {
            *best = path.clone();
        }
        if depth_left == 0 {
            return;
        }
        for i in p.negative_moves(tol) {
            path.push(i);
            go(&fire(p, k, i), k, depth_left - 1, tol, path, best);
            path.pop();
        }
    }
    let mut best = Vec::new();
    go(start, k, depth_cap, tol, &mut Vec::new(), &mut best);
    (best.len(), best)
}
