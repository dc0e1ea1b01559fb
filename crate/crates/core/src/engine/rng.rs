//! SplitMix64 (Steele, Lea and Flood, 2014) and exponential sampling.
//!
//! Each random purpose in a run draws from its own stream, derived from the
//! workload seed and a stream label, so adding a template or feed does not
//! shift the draws of the others.

use thiserror::Error;

use crate::time::DurationMs;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
#[error("rate must be positive and finite, got {0}")]
pub struct NonPositiveRate(pub f64);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Independent stream for `label` under `seed`.
    pub fn stream(seed: u64, label: &str) -> Self {
        // FNV-1a over the label, then mixed with the seed
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in label.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01B3);
        }
        Self::new(mix(seed ^ mix(h)))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix(self.state)
    }

    /// Uniform in (0, 1], from the top 53 bits.
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 / (1u64 << 53) as f64
    }

    /// Uniform integer in `[0, n)`; `n` must be non-zero.
    pub fn below(&mut self, n: u64) -> u64 {
        // multiply-shift; bias is below 2^-64 * n and irrelevant here
        ((u128::from(self.next_u64()) * u128::from(n)) >> 64) as u64
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn range_i64(&mut self, lo: i64, hi: i64) -> i64 {
        let span = (hi as i128 - lo as i128 + 1) as u64;
        if span == 0 {
            return self.next_u64() as i64;
        }
        (lo as i128 + self.below(span) as i128) as i64
    }

    /// Uniform real in `[lo, hi)`.
    pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * (1.0 - self.next_open01())
    }

    /// Exponential inter-arrival time for `rate_per_sec` events per second,
    /// by inverse CDF, rounded up to whole milliseconds and at least 1 ms.
    pub fn exp_sample(&mut self, rate_per_sec: f64) -> Result<DurationMs, NonPositiveRate> {
        if !(rate_per_sec > 0.0 && rate_per_sec.is_finite()) {
            return Err(NonPositiveRate(rate_per_sec));
        }
        let u = self.next_open01();
        let ms = (-u.ln() / rate_per_sec * 1000.0).ceil();
        Ok(DurationMs::from_millis((ms as u64).max(1)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_vector() {
        // published SplitMix64 outputs for seed 1234567
        let mut r = SplitMix64::new(1234567);
        let got: Vec<u64> = (0..5).map(|_| r.next_u64()).collect();
        assert_eq!(
            got,
            [
                6457827717110365317,
                3203168211198807973,
                9817491932198370423,
                4593380528125082431,
                16408922859458223821
            ]
        );
    }

    #[test]
    fn same_seed_same_draws() {
        let mut a = SplitMix64::new(42);
        let mut b = SplitMix64::new(42);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        assert_ne!(SplitMix64::stream(42, "a").next_u64(), SplitMix64::stream(42, "b").next_u64());
    }

    #[test]
    fn exp_sample_is_at_least_one_ms() {
        let mut r = SplitMix64::new(7);
        for _ in 0..100_000 {
            assert!(r.exp_sample(1000.0).unwrap().millis() >= 1);
        }
        assert!(r.exp_sample(0.0).is_err());
        assert!(r.exp_sample(-1.0).is_err());
        assert!(r.exp_sample(f64::NAN).is_err());
    }

    #[test]
    fn exp_sample_mean_matches_discretised_law() {
        // ceil(X) for X ~ Exp(mean m ms) is geometric: E = 1 / (1 - e^(-1/m)).
        // For m >= 20 ms that is within 5 % of m; at m = 1 ms it is ~1.582.
        for (rate, n) in [(1000.0, 100_000), (50.0, 100_000), (2.0, 100_000)] {
            let m: f64 = 1000.0 / rate;
            let expected = 1.0 / (1.0 - (-1.0 / m).exp());
            let mut r = SplitMix64::new(99);
            let sum: u64 = (0..n).map(|_| r.exp_sample(rate).unwrap().millis()).sum();
            let mean = sum as f64 / n as f64;
            assert!((mean - expected).abs() / expected < 0.05, "rate {rate}: mean {mean} vs {expected}");
        }
    }

    #[test]
    fn range_bounds() {
        let mut r = SplitMix64::new(3);
        for _ in 0..10_000 {
            let v = r.range_i64(-2, 2);
            assert!((-2..=2).contains(&v));
            let f = r.range_f64(-1.5, 1.5);
            assert!((-1.5..1.5).contains(&f));
        }
    }
}
