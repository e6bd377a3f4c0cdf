#![allow(dead_code)]

use hardball::scalar::parse_rational;
use hardball::{Exact, MassProfile, Scalar, SystemState};

pub fn ex(s: &str) -> Exact {
    parse_rational(s).unwrap()
}

pub fn exs(xs: &[&str]) -> Vec<Exact> {
    xs.iter().map(|s| ex(s)).collect()
}

pub fn system<S: Scalar>(m: &[&str], x: &[&str], v: &[&str]) -> (MassProfile<S>, SystemState<S>) {
    let conv = |xs: &[&str]| xs.iter().map(|s| S::from_rational(&ex(s))).collect::<Vec<S>>();
    let masses = MassProfile::new(conv(m)).unwrap();
    let state = SystemState::new(conv(x), conv(v), &masses).unwrap();
    (masses, state)
}

/// Fixed-step ballistic integration: after each step, any pair that has met
/// and is still approaching exchanges momentum by the elastic law; sweeps
/// repeat left to right until no such pair remains. No event times are
/// computed. Returns the number of pair collisions until velocities are
/// non-decreasing or `max_steps` is exhausted.
pub fn fine_step_collisions(m: &[f64], x: &[f64], v: &[f64], dt: f64, max_steps: usize) -> u64 {
    let mut x = x.to_vec();
    let mut v = v.to_vec();
    let mut count = 0;
    for _ in 0..max_steps {
        if v.windows(2).all(|w| w[0] <= w[1]) {
            break;
        }
        for (xi, vi) in x.iter_mut().zip(&v) {
            *xi += vi * dt;
        }
        loop {
            let mut changed = false;
            for i in 1..x.len() {
                if x[i - 1] >= x[i] && v[i - 1] > v[i] {
                    let (ml, mr, vl, vr) = (m[i - 1], m[i], v[i - 1], v[i]);
                    // reflect relative velocity in the centre-of-mass frame
                    let vcm = (ml * vl + mr * vr) / (ml + mr);
                    v[i - 1] = 2.0 * vcm - vl;
                    v[i] = 2.0 * vcm - vr;
                    count += 1;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }
    count
}

/// Number of adjacent swaps bubble sort needs to make `q` non-decreasing.
pub fn bubble_sort_swaps(q: &[f64]) -> u64 {
    let mut q = q.to_vec();
    let mut swaps = 0;
    for end in (1..q.len()).rev() {
        for i in 0..end {
            if q[i] > q[i + 1] {
                q.swap(i, i + 1);
                swaps += 1;
            }
        }
    }
    swaps
}
