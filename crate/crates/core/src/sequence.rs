//! Step-size sequences for fixed and random-ratio runs.
//!
//! Random sequences are reproducible across implementations. The generator is
//! xorshift64* (Marsaglia shifts 12, 25, 27; output multiplier
//! `0x2545F4914F6CDD1D`), with the 64-bit state initialised by one round of
//! SplitMix64 applied to the user seed (a zero state is replaced by
//! `0x9E3779B97F4A7C15`). Uniform doubles are `(x >> 11) * 2^-53`. A step
//! ratio in `[lo, hi]` is drawn log-uniformly as
//! `exp(ln lo + u (ln hi - ln lo))`.

use alloc::vec::Vec;

use crate::error::{domain, Error};
use crate::math::{exp, ln};

/// xorshift64* generator.
#[derive(Debug, Clone)]
pub struct Xorshift64Star {
    state: u64,
}

impl Xorshift64Star {
    pub fn new(seed: u64) -> Self {
        let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        Self {
            state: if z == 0 { 0x9E37_79B9_7F4A_7C15 } else { z },
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Log-uniform in `[lo, hi]`.
    pub fn next_ratio(&mut self, bounds: RatioBounds) -> f64 {
        let (a, b) = (ln(bounds.lo), ln(bounds.hi));
        exp(a + self.next_f64() * (b - a))
    }
}

/// Closed interval of admissible consecutive step ratios `k_n / k_{n-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioBounds {
    pub lo: f64,
    pub hi: f64,
}

impl RatioBounds {
    pub fn new(lo: f64, hi: f64) -> Result<Self, Error> {
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(domain(alloc::format!("invalid ratio bounds [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, r: f64) -> bool {
        r >= self.lo && r <= self.hi
    }
}

impl Default for RatioBounds {
    fn default() -> Self {
        Self { lo: 0.5, hi: 2.0 }
    }
}

fn check_span(k0: f64, span: f64) -> Result<(), Error> {
    if !(k0 > 0.0 && span > 0.0 && k0.is_finite() && span.is_finite()) {
        return Err(domain("step size and time span must be positive"));
    }
    Ok(())
}

/// Equal steps covering `span`, the largest size not exceeding `k0`
/// (up to a relative `1e-9`).
pub fn fixed_steps(k0: f64, span: f64) -> Result<Vec<f64>, Error> {
    check_span(k0, span)?;
    let n = libm::ceil(span / k0 * (1.0 - 1e-9)).max(1.0) as usize;
    Ok(alloc::vec![span / n as f64; n])
}

/// Steps starting at `k0` with log-uniform ratios in `bounds`, generated until
/// they cover `span` and then rescaled as a whole so they sum to `span`.
/// Rescaling keeps every ratio inside `bounds`.
pub fn random_ratio_steps(
    k0: f64,
    span: f64,
    bounds: RatioBounds,
    seed: u64,
) -> Result<Vec<f64>, Error> {
    check_span(k0, span)?;
    let mut rng = Xorshift64Star::new(seed);
    let mut steps = alloc::vec![k0];
    let mut total = k0;
    while total < span {
        let k = steps[steps.len() - 1] * rng.next_ratio(bounds);
        steps.push(k);
        total += k;
        if steps.len() > 50_000_000 {
            return Err(domain("random step sequence does not reach the end time"));
        }
    }
    rescale(&mut steps, span);
    Ok(steps)
}

/// Exactly `count` steps starting at `k0` with log-uniform ratios in
/// `bounds`, without rescaling.
pub fn random_ratio_steps_n(
    k0: f64,
    count: usize,
    bounds: RatioBounds,
    seed: u64,
) -> Result<Vec<f64>, Error> {
    check_span(k0, 1.0)?;
    let mut rng = Xorshift64Star::new(seed);
    let mut steps = Vec::with_capacity(count);
    if count > 0 {
        steps.push(k0);
    }
    while steps.len() < count {
        let k = steps[steps.len() - 1] * rng.next_ratio(bounds);
        steps.push(k);
    }
    Ok(steps)
}

/// A palindromic pattern of relative step weights with `2 * half_len`
/// entries whose consecutive ratios (including the wrap-around) lie in
/// `bounds`. Repeating the pattern gives a variable mesh whose shape does not
/// change under refinement.
pub fn ratio_pattern(half_len: usize, bounds: RatioBounds, seed: u64) -> Vec<f64> {
    let mut rng = Xorshift64Star::new(seed);
    let mut half = Vec::with_capacity(half_len.max(1));
    half.push(1.0);
    for _ in 1..half_len.max(1) {
        let w = half[half.len() - 1] * rng.next_ratio(bounds);
        half.push(w);
    }
    let mut pattern = half.clone();
    pattern.extend(half.iter().rev());
    pattern
}

/// `cycles` repetitions of `pattern`, scaled to sum to `span`.
pub fn patterned_steps(pattern: &[f64], cycles: usize, span: f64) -> Result<Vec<f64>, Error> {
    if pattern.is_empty() || cycles == 0 {
        return Err(domain("empty step pattern"));
    }
    let mut steps: Vec<f64> = core::iter::repeat_n(pattern, cycles)
        .flatten()
        .copied()
        .collect();
    rescale(&mut steps, span);
    Ok(steps)
}

fn rescale(steps: &mut [f64], span: f64) {
    let total: f64 = steps.iter().sum();
    let s = span / total;
    for k in steps.iter_mut() {
        *k *= s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_reproducible() {
        let a: Vec<u64> = {
            let mut r = Xorshift64Star::new(42);
            (0..5).map(|_| r.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut r = Xorshift64Star::new(42);
            (0..5).map(|_| r.next_u64()).collect()
        };
        assert_eq!(a, b);
        let mut r = Xorshift64Star::new(7);
        assert_ne!(r.next_u64(), Xorshift64Star::new(8).next_u64());
        for _ in 0..1000 {
            let u = r.next_f64();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn reference_values() {
        // Computed independently from the documented algorithm so other
        // implementations can compare against the same numbers.
        let cases: [(u64, [u64; 3]); 2] = [
            (
                0,
                [
                    0x7bbc_b40d_5506_82d0,
                    0xde7f_e413_d00c_c9fd,
                    0xb3c6_3835_3c66_8c91,
                ],
            ),
            (
                42,
                [
                    0x31b0_ece7_c4f6_97a2,
                    0x9008_a3b1_cb68_6f03,
                    0x7c71_73ab_d97b_e16f,
                ],
            ),
        ];
        for (seed, expected) in cases {
            let mut r = Xorshift64Star::new(seed);
            let got = [r.next_u64(), r.next_u64(), r.next_u64()];
            assert_eq!(got, expected, "seed {seed}");
        }
    }

    #[test]
    fn fixed_steps_cover_span() {
        let s = fixed_steps(0.1, 1.0).unwrap();
        assert_eq!(s.len(), 10);
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let s = fixed_steps(0.3, 1.0).unwrap();
        assert_eq!(s.len(), 4);
        assert!(fixed_steps(0.0, 1.0).is_err());
    }

    #[test]
    fn random_steps_respect_bounds() {
        let b = RatioBounds::new(0.5, 2.0).unwrap();
        let s = random_ratio_steps(0.01, 1.0, b, 7).unwrap();
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-13);
        for w in s.windows(2) {
            assert!(
                b.contains(w[1] / w[0] * (1.0 - 1e-14)) || b.contains(w[1] / w[0] * (1.0 + 1e-14))
            );
        }
        assert_eq!(s, random_ratio_steps(0.01, 1.0, b, 7).unwrap());
        let s = random_ratio_steps_n(0.01, 200, b, 7).unwrap();
        assert_eq!(s.len(), 200);
        assert_eq!(s[0], 0.01);
        assert!(RatioBounds::new(0.0, 2.0).is_err());
        assert!(RatioBounds::new(2.0, 1.0).is_err());
    }

    #[test]
    fn pattern_is_closed_under_repetition() {
        let b = RatioBounds::default();
        let p = ratio_pattern(8, b, 3);
        assert_eq!(p.len(), 16);
        let steps = patterned_steps(&p, 4, 2.0).unwrap();
        assert_eq!(steps.len(), 64);
        for w in steps.windows(2) {
            let r = w[1] / w[0];
            assert!((0.5 * (1.0 - 1e-12)..=2.0 * (1.0 + 1e-12)).contains(&r));
        }
        assert!((steps.iter().sum::<f64>() - 2.0).abs() < 1e-13);
    }
}
