//! Mass-weighted embedding of the velocity profile into `R^{n+1}`.
//!
//! With `v = sum sqrt(m_j) v_j e_j` the momentum is `(m, v)` for
//! `m = sum sqrt(m_j) e_j` and twice the kinetic energy is `|v|^2`. A
//! collision between balls `i - 1` and `i` becomes the orthogonal reflection
//! in the hyperplane with unit normal `alpha_i`, the normalised
//! `e_i / sqrt(m_i) - e_{i-1} / sqrt(m_{i-1})`.
//!
//! Public indices follow the collision-pair convention: `alpha_i` couples
//! balls `i - 1` and `i`, `1 <= i <= n`.

use nalgebra::DMatrix;

use crate::model::{MassProfile, ModelError};
use crate::scalar::Tolerance;

/// The unit normals, the momentum direction and their Gram/weight matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct GramData {
    n: usize,
    alpha: Vec<Vec<f64>>,
    m_vec: Vec<f64>,
    gram: Vec<Vec<f64>>,
    weights: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn build_embedding(masses: &MassProfile<f64>) -> GramData {
    let m = masses.as_slice();
    let dim = m.len();
    let n = dim - 1;
    let m_vec: Vec<f64> = m.iter().map(|mj| mj.sqrt()).collect();
    let alpha: Vec<Vec<f64>> = (1..=n)
        .map(|i| {
            let mut a = vec![0.0; dim];
            a[i - 1] = -1.0 / m[i - 1].sqrt();
            a[i] = 1.0 / m[i].sqrt();
            let norm = dot(&a, &a).sqrt();
            a.iter_mut().for_each(|x| *x /= norm);
            a
        })
        .collect();
    let gram: Vec<Vec<f64>> = alpha
        .iter()
        .map(|ai| alpha.iter().map(|aj| dot(ai, aj)).collect())
        .collect();
    let weights = gram
        .iter()
        .map(|row| row.iter().map(|g| -2.0 * g).collect())
        .collect();
    GramData {
        n,
        alpha,
        m_vec,
        gram,
        weights,
    }
}

impl GramData {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `alpha_i`, `1 <= i <= n`.
    pub fn alpha(&self, i: usize) -> &[f64] {
        assert!((1..=self.n).contains(&i), "alpha index {i} outside 1..={}", self.n);
        &self.alpha[i - 1]
    }

    pub fn m_vec(&self) -> &[f64] {
        &self.m_vec
    }

    /// `(alpha_i, alpha_j)`, 1-based.
    pub fn gram(&self, i: usize, j: usize) -> f64 {
        self.gram[i - 1][j - 1]
    }

    /// `k_ij = -2 (alpha_i, alpha_j)`, 1-based.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i - 1][j - 1]
    }

    pub fn gram_matrix(&self) -> &[Vec<f64>] {
        &self.gram
    }

    pub fn weight_matrix(&self) -> &[Vec<f64>] {
        &self.weights
    }

    /// Numerical rank of `{m, alpha_1, ..., alpha_n}` from singular values above `tol`.
    pub fn basis_rank(&self, tol: Tolerance) -> usize {
        let dim = self.n + 1;
        let columns = std::iter::once(&self.m_vec).chain(self.alpha.iter());
        let matrix = DMatrix::from_iterator(dim, dim, columns.flat_map(|c| c.iter().copied()));
        let svd = matrix.svd(false, false);
        let largest = svd.singular_values.max();
        svd.singular_values
            .iter()
            .filter(|&&s| s > tol.tau() * largest.max(1.0))
            .count()
    }

    /// Checks the unit-norm, momentum-orthogonality and tridiagonality identities.
    pub fn identity_violations(&self, tol: Tolerance) -> Vec<String> {
        let mut out = Vec::new();
        for i in 1..=self.n {
            let a = self.alpha(i);
            if !tol.eq_f64(dot(a, a), 1.0) {
                out.push(format!("|alpha_{i}|^2 = {}", dot(a, a)));
            }
            if !tol.eq_f64(dot(a, &self.m_vec), 0.0) {
                out.push(format!("(alpha_{i}, m) = {}", dot(a, &self.m_vec)));
            }
            for j in 1..=self.n {
                if i.abs_diff(j) > 1 && !tol.eq_f64(self.gram(i, j), 0.0) {
                    out.push(format!("(alpha_{i}, alpha_{j}) = {}", self.gram(i, j)));
                }
                if self.weight(i, j) != self.weight(j, i) {
                    out.push(format!("k_{i}{j} != k_{j}{i}"));
                }
            }
            if !tol.eq_f64(self.weight(i, i), -2.0) {
                out.push(format!("k_{i}{i} = {}", self.weight(i, i)));
            }
        }
        out
    }
}

/// Closed form `(alpha_i, alpha_{i+1}) = -(1/m_i) / sqrt(1/m_i + 1/m_{i-1}) / sqrt(1/m_{i+1} + 1/m_i)`
/// for `1 <= i <= n - 1`.
pub fn neighbor_gram_closed_form(masses: &MassProfile<f64>, i: usize) -> f64 {
    let m = masses.as_slice();
    assert!(i >= 1 && i + 1 < m.len(), "neighbor index {i} outside 1..n-1");
    -(1.0 / m[i]) / (1.0 / m[i] + 1.0 / m[i - 1]).sqrt() / (1.0 / m[i + 1] + 1.0 / m[i]).sqrt()
}

/// Coordinates `sqrt(m_j) v_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityVector(Vec<f64>);

impl VelocityVector {
    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// Recovers `v_j = coordinate_j / sqrt(m_j)`.
    pub fn decode(&self, masses: &MassProfile<f64>) -> Vec<f64> {
        self.0.iter().zip(masses.as_slice()).map(|(c, m)| c / m.sqrt()).collect()
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.0, &self.0)
    }

    /// `(m, v)`, the total momentum.
    pub fn momentum(&self, g: &GramData) -> f64 {
        dot(&self.0, &g.m_vec)
    }
}

pub fn embed_velocities(masses: &MassProfile<f64>, velocities: &[f64]) -> Result<VelocityVector, ModelError> {
    if velocities.len() != masses.len() {
        return Err(ModelError::LengthMismatch {
            field: "velocities",
            expected: masses.len(),
            got: velocities.len(),
        });
    }
    Ok(VelocityVector(
        masses.as_slice().iter().zip(velocities).map(|(m, v)| m.sqrt() * v).collect(),
    ))
}

/// `sigma_i(v) = v - 2 (alpha_i, v) alpha_i`.
pub fn reflect(g: &GramData, v: &VelocityVector, i: usize) -> VelocityVector {
    let a = g.alpha(i);
    let c = 2.0 * dot(a, &v.0);
    VelocityVector(v.0.iter().zip(a).map(|(x, ai)| x - c * ai).collect())
}

/// `(alpha_i, v)`; negative exactly when ball `i - 1` is faster than ball `i`.
pub fn collision_coordinate(g: &GramData, v: &VelocityVector, i: usize) -> f64 {
    dot(g.alpha(i), &v.0)
}
