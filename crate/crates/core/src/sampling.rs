//! Seeded random generators for mass profiles, velocities and positions.
//!
//! Every sample is drawn as exact rationals first and converted into the
//! run's scalar type afterwards, so exact and float runs with the same seed
//! see the same systems. Each trial owns an independent ChaCha stream keyed
//! by `(seed, trial)`, which keeps results independent of thread scheduling.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::model::{MassProfile, ModelError, SystemState};
use crate::scalar::Scalar;

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MassSampler {
    /// All masses one.
    Equal,
    /// `m_i = m_{i-1} r_i` with non-increasing rational ratios `r_i`, which
    /// is exactly `m_i^2 >= m_{i-1} m_{i+1}`. Ratios are `a/b`, `1 <= a, b <= max_term`.
    LogConcave { max_term: i64 },
    /// Independent masses `a/b`, `1 <= a, b <= max_term`; no condition enforced.
    Unconstrained { max_term: i64 },
    #[serde(serialize_with = "ser_rationals")]
    Fixed(Vec<BigRational>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VelocitySampler {
    /// Integers in `[-bound, bound]` (default bound `max(n, 1)`), adjacent entries distinct.
    Integers { bound: Option<i64> },
    #[serde(serialize_with = "ser_rationals")]
    Fixed(Vec<BigRational>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PositionSampler {
    /// Starts at zero; gaps `g / 1000` with integer `g` uniform in `1..=10^6`.
    RandomGaps,
    #[serde(serialize_with = "ser_rationals")]
    Fixed(Vec<BigRational>),
}

fn ser_rationals<Ser: serde::Serializer>(v: &[BigRational], s: Ser) -> Result<Ser::Ok, Ser::Error> {
    s.collect_seq(v.iter().map(Scalar::render))
}

/// Masses, positions and velocities of one sampled system.
pub type ExactSample = (Vec<BigRational>, Vec<BigRational>, Vec<BigRational>);

/// A complete recipe for random systems of `n + 1` balls.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemSampler {
    pub n: usize,
    pub masses: MassSampler,
    pub velocities: VelocitySampler,
    pub positions: PositionSampler,
}

impl SystemSampler {
    /// Log-concave masses, integer velocities, random gaps.
    pub fn conforming(n: usize) -> Self {
        SystemSampler {
            n,
            masses: MassSampler::LogConcave { max_term: 12 },
            velocities: VelocitySampler::Integers { bound: None },
            positions: PositionSampler::RandomGaps,
        }
    }

    pub fn rng(seed: u64, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        rng
    }

    /// Exact sample for one trial.
    pub fn sample_exact(&self, seed: u64, trial: u64) -> Result<ExactSample, ModelError> {
        let mut rng = Self::rng(seed, trial);
        let balls = self.n + 1;
        let masses = sample_masses(&self.masses, balls, &mut rng);
        let velocities = match &self.velocities {
            VelocitySampler::Integers { bound } => {
                let bound = bound.unwrap_or(self.n.max(1) as i64).max(1);
                let mut out: Vec<i64> = Vec::with_capacity(balls);
                for _ in 0..balls {
                    let v = loop {
                        let v = rng.random_range(-bound..=bound);
                        if out.last() != Some(&v) {
                            break v;
                        }
                    };
                    out.push(v);
                }
                out.into_iter().map(|v| ratio(v, 1)).collect()
            }
            VelocitySampler::Fixed(v) => v.clone(),
        };
        let positions = match &self.positions {
            PositionSampler::RandomGaps => {
                let mut acc = ratio(0, 1);
                let mut out = Vec::with_capacity(balls);
                for j in 0..balls {
                    if j > 0 {
                        acc += ratio(rng.random_range(1..=1_000_000), 1000);
                    }
                    out.push(acc.clone());
                }
                out
            }
            PositionSampler::Fixed(x) => x.clone(),
        };
        for (field, got) in [("masses", masses.len()), ("velocities", velocities.len()), ("positions", positions.len())] {
            if got != balls {
                return Err(ModelError::LengthMismatch {
                    field,
                    expected: balls,
                    got,
                });
            }
        }
        Ok((masses, positions, velocities))
    }

    /// Sample converted into the run's scalar type and validated.
    pub fn sample<S: Scalar>(&self, seed: u64, trial: u64) -> Result<(MassProfile<S>, SystemState<S>), ModelError> {
        let (m, x, v) = self.sample_exact(seed, trial)?;
        let conv = |xs: &[BigRational]| xs.iter().map(S::from_rational).collect::<Vec<S>>();
        let masses = MassProfile::new(conv(&m))?;
        let state = SystemState::new(conv(&x), conv(&v), &masses)?;
        Ok((masses, state))
    }
}

fn sample_masses(sampler: &MassSampler, balls: usize, rng: &mut ChaCha8Rng) -> Vec<BigRational> {
    let mut draw = |max_term: i64| ratio(rng.random_range(1..=max_term), rng.random_range(1..=max_term));
    match sampler {
        MassSampler::Equal => vec![ratio(1, 1); balls],
        MassSampler::LogConcave { max_term } => {
            let max_term = (*max_term).max(1);
            let first = draw(4);
            let mut ratios: Vec<BigRational> = (1..balls).map(|_| draw(max_term)).collect();
            ratios.sort_by(|a, b| b.cmp(a));
            let mut masses = Vec::with_capacity(balls);
            masses.push(first);
            for r in ratios {
                let next = masses.last().expect("non-empty") * r;
                masses.push(next);
            }
            masses
        }
        MassSampler::Unconstrained { max_term } => {
            let max_term = (*max_term).max(1);
            (0..balls).map(|_| draw(max_term)).collect()
        }
        MassSampler::Fixed(m) => m.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::check_conditions;
    use crate::scalar::{Exact, Tolerance};

    #[test]
    fn log_concave_masses_conform_exactly() {
        for n in 1..=6 {
            let sampler = SystemSampler::conforming(n);
            for trial in 0..200 {
                let (m, _) = sampler.sample::<Exact>(7, trial).unwrap();
                assert!(check_conditions(&m, Tolerance::ZERO).geometric_ok, "n={n} trial={trial}");
            }
        }
    }

    #[test]
    fn velocities_have_distinct_neighbours_in_range() {
        let sampler = SystemSampler::conforming(4);
        for trial in 0..100 {
            let (_, s) = sampler.sample::<f64>(1, trial).unwrap();
            assert!(s.velocities.windows(2).all(|w| w[0] != w[1]));
            assert!(s.velocities.iter().all(|v| v.abs() <= 4.0 && v.fract() == 0.0));
        }
    }

    #[test]
    fn same_seed_same_system_in_both_modes() {
        let sampler = SystemSampler::conforming(5);
        let (me, se) = sampler.sample::<Exact>(99, 3).unwrap();
        let (mf, sf) = sampler.sample::<f64>(99, 3).unwrap();
        assert_eq!(me.to_f64(), mf);
        assert_eq!(se.to_f64(), sf);
        assert_ne!(sampler.sample_exact(99, 3).unwrap(), sampler.sample_exact(99, 4).unwrap());
    }

    #[test]
    fn fixed_samplers_check_lengths() {
        let sampler = SystemSampler {
            n: 2,
            masses: MassSampler::Fixed(vec![ratio(1, 1); 2]),
            velocities: VelocitySampler::Integers { bound: None },
            positions: PositionSampler::RandomGaps,
        };
        assert!(matches!(sampler.sample_exact(0, 0), Err(ModelError::LengthMismatch { field: "masses", .. })));
    }
}
