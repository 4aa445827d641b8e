//! Deterministic point-pair sampling for sup-type estimates.
//!
//! Half of the pairs (rounded up) come from a 2n-dimensional Halton
//! sequence over box × box, shifted by a seeded Cranley-Patterson
//! rotation. The rest are near-diagonal: a base point, a random unit
//! direction and a separation `2^{-j}` with `j` cycling through `0..=12`.
//! Base points visit the box corners first, then Halton points.
//!
//! Both streams are generated sequentially, so the pairs for a count `N`
//! are contained in the pairs for any larger count.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math;
use crate::rect::Rectangle;
use crate::report::SamplerInfo;

/// Finest near-diagonal scale is `2^{-MAX_SCALE}`.
pub const MAX_SCALE: u32 = 12;

const PRIMES: [u32; 40] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109,
    113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173,
];

/// Which side of `|x - x'| = 1` a pair falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `|x - x'| ≤ 1`
    Local,
    /// `|x - x'| > 1`
    Global,
}

impl Regime {
    pub fn of(distance: f64) -> Self {
        if distance <= 1.0 {
            Self::Local
        } else {
            Self::Global
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Local => "local",
            Self::Global => "global",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledPair {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub distance: f64,
    pub regime: Regime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairSampler {
    pub seed: u64,
    pub count: usize,
}

/// Van der Corput radical inverse of `i` in base `b`.
fn radical_inverse(mut i: u64, b: u32) -> f64 {
    let b = u64::from(b);
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    out
}

fn frac(x: f64) -> f64 {
    x - math::floor(x)
}

impl PairSampler {
    pub fn new(seed: u64, count: usize) -> Self {
        Self { seed, count }
    }

    pub fn info(&self) -> SamplerInfo {
        SamplerInfo {
            seed: self.seed,
            count: self.count,
        }
    }

    /// Number of global (Halton) pairs; the rest are near-diagonal.
    pub fn global_count(&self) -> usize {
        self.count.div_ceil(2)
    }

    /// All pairs inside `rect`. Pairs with `x = x'` are skipped, so the
    /// result can be slightly shorter than `count`.
    pub fn pairs(&self, rect: &Rectangle) -> Vec<SampledPair> {
        let n = rect.dim();
        let mut out = Vec::with_capacity(self.count);
        let mut rot_rng = ChaCha8Rng::seed_from_u64(self.seed);
        rot_rng.set_stream(1);
        let rotation: Vec<f64> = (0..2 * n).map(|_| rot_rng.random::<f64>()).collect();
        let halton = |i: usize, dim: usize| -> f64 {
            let prime = PRIMES[dim % PRIMES.len()];
            frac(radical_inverse(i as u64 + 1, prime) + rotation[dim])
        };
        let scale = |axis: usize, t: f64| rect.lo()[axis] + t * rect.width(axis);

        for i in 0..self.global_count() {
            let x: Vec<f64> = (0..n).map(|a| scale(a, halton(i, a))).collect();
            let y: Vec<f64> = (0..n).map(|a| scale(a, halton(i, n + a))).collect();
            push_pair(&mut out, x, y);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(2);
        let corners = if n < 16 { 1usize << n } else { 0 };
        let near = self.count - self.global_count();
        let mut dir = vec![0.0; n];
        for i in 0..near {
            let x: Vec<f64> = if i < corners {
                (0..n)
                    .map(|a| if i >> a & 1 == 1 { rect.hi()[a] } else { rect.lo()[a] })
                    .collect()
            } else {
                (0..n).map(|a| scale(a, halton(i - corners + 7919, a))).collect()
            };
            unit_direction(&mut rng, &mut dir);
            let h = math::powi(0.5, i as u32 % (MAX_SCALE + 1));
            let y: Vec<f64> = (0..n)
                .map(|a| {
                    let (lo, hi) = (rect.lo()[a], rect.hi()[a]);
                    let fwd = x[a] + h * dir[a];
                    if (lo..=hi).contains(&fwd) {
                        return fwd;
                    }
                    let back = x[a] - h * dir[a];
                    if (lo..=hi).contains(&back) {
                        back
                    } else {
                        fwd.clamp(lo, hi)
                    }
                })
                .collect();
            push_pair(&mut out, x, y);
        }
        out
    }
}

fn push_pair(out: &mut Vec<SampledPair>, x: Vec<f64>, y: Vec<f64>) {
    if x == y {
        return;
    }
    let distance = math::distance(&x, &y);
    out.push(SampledPair {
        regime: Regime::of(distance),
        x,
        y,
        distance,
    });
}

/// Uniform direction on the sphere by normalizing a Gaussian vector
/// (Box-Muller).
fn unit_direction(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    loop {
        for v in out.iter_mut() {
            let u1: f64 = 1.0 - rng.random::<f64>();
            let u2: f64 = rng.random::<f64>();
            *v = math::sqrt(-2.0 * math::ln(u1)) * math::cos(2.0 * math::PI * u2);
        }
        let norm = math::sqrt(out.iter().map(|v| v * v).sum::<f64>());
        if norm > 1e-12 {
            out.iter_mut().for_each(|v| *v /= norm);
            return;
        }
    }
}

/// `count` boxes inside `bounds` with edges at least `min_width` long.
pub fn random_boxes(bounds: &Rectangle, count: usize, seed: u64, min_width: f64) -> Vec<Rectangle> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = bounds.dim();
    (0..count)
        .map(|_| {
            let mut lo = Vec::with_capacity(n);
            let mut hi = Vec::with_capacity(n);
            for a in 0..n {
                let (b0, w) = (bounds.lo()[a], bounds.width(a));
                let mw = min_width.min(w);
                let width = mw + rng.random::<f64>() * (w - mw);
                let start = b0 + rng.random::<f64>() * (w - width);
                lo.push(start);
                hi.push((start + width).max(start + mw * 0.5).min(b0 + w));
            }
            Rectangle::new(lo, hi).expect("positive widths")
        })
        .collect()
}
