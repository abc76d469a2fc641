//! Angles in ℝ/2πℤ: principal values, circular distances and statistics.

use crate::scalar::Real;

/// Principal value in (−π, π].
pub fn principal<T: Real>(a: T) -> T {
    let two_pi = T::TAU();
    let mut r = a % two_pi;
    if r > T::PI() {
        r -= two_pi;
    } else if r <= -T::PI() {
        r += two_pi;
    }
    r
}

/// Unsigned distance on the circle, in [0, π].
pub fn distance<T: Real>(a: T, b: T) -> T {
    principal(a - b).abs()
}

/// Lifts `a` onto the branch closest to `reference`.
pub fn lift_near<T: Real>(a: T, reference: T) -> T {
    reference + principal(a - reference)
}

/// Unwraps a sequence so consecutive values differ by less than π.
pub fn unwrap<T: Real>(values: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(values.len());
    for &v in values {
        let next = match out.last() {
            Some(&prev) => lift_near(v, prev),
            None => v,
        };
        out.push(next);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircularStats {
    /// Circular mean, principal value.
    pub mean: f64,
    /// Mean resultant length R in [0, 1].
    pub resultant: f64,
    /// Circular standard deviation √(−2 ln R).
    pub spread: f64,
}

pub fn stats(angles: &[f64]) -> CircularStats {
    if angles.is_empty() {
        return CircularStats { mean: 0.0, resultant: 0.0, spread: f64::INFINITY };
    }
    // accumulate deviations from the first sample for accuracy at tiny spreads
    let reference = angles[0];
    let (mut s, mut c) = (0.0, 0.0);
    for &a in angles {
        let d = principal(a - reference);
        s += d.sin();
        c += d.cos();
    }
    let count = angles.len() as f64;
    let resultant = (s * s + c * c).sqrt() / count;
    let mean = principal(reference + s.atan2(c));
    // for R ≈ 1 use the small-angle form to avoid cancellation in ln R
    let spread = if resultant >= 1.0 {
        0.0
    } else if resultant > 1.0 - 1e-6 {
        let var: f64 = angles
            .iter()
            .map(|&a| {
                let d = principal(a - mean);
                d * d
            })
            .sum::<f64>()
            / count;
        var.sqrt()
    } else {
        (-2.0 * resultant.ln()).sqrt()
    };
    CircularStats { mean, resultant: resultant.min(1.0), spread }
}
