//! Seedable bit source shared by every sampler.
//!
//! All randomness is consumed as raw bits from a 64-bit word buffer, and
//! every bounded draw is built from those bits by rejection. Nothing depends
//! on platform-specific float or integer-range algorithms, so a seed fixes
//! the output bit-for-bit everywhere.

use num_bigint::BigUint;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};

pub struct RandomSource {
    inner: Box<dyn RngCore + Send>,
    buf: u64,
    avail: u32,
    consumed: u64,
}

impl std::fmt::Debug for RandomSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RandomSource")
            .field("bits_consumed", &self.consumed)
            .finish()
    }
}

impl RandomSource {
    /// ChaCha8 stream 0 for `seed`.
    pub fn seeded(seed: u64) -> Self {
        Self::for_sample(seed, 0)
    }

    /// Independent stream number `index` under one seed. Sample `i` of a
    /// batch can be regenerated alone with `for_sample(seed, i)`.
    pub fn for_sample(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self::from_rng(rng)
    }

    pub fn from_rng<R: RngCore + Send + 'static>(rng: R) -> Self {
        RandomSource {
            inner: Box::new(rng),
            buf: 0,
            avail: 0,
            consumed: 0,
        }
    }

    /// Number of bits handed out so far.
    pub fn bits_consumed(&self) -> u64 {
        self.consumed
    }

    pub fn bit(&mut self) -> bool {
        self.bits(1) == 1
    }

    /// The next `t` bits (`t <= 64`) as an integer, first bit least significant.
    pub fn bits(&mut self, t: u32) -> u64 {
        debug_assert!(t <= 64);
        if t == 0 {
            return 0;
        }
        self.consumed += u64::from(t);
        if t <= self.avail {
            let out = if t == 64 { self.buf } else { self.buf & ((1u64 << t) - 1) };
            self.buf = if t == 64 { 0 } else { self.buf >> t };
            self.avail -= t;
            return out;
        }
        let low = self.buf;
        let have = self.avail;
        let fresh = self.inner.next_u64();
        let need = t - have;
        let high = if need == 64 { fresh } else { fresh & ((1u64 << need) - 1) };
        self.buf = if need == 64 { 0 } else { fresh >> need };
        self.avail = 64 - need;
        if have == 0 {
            high
        } else {
            low | (high << have)
        }
    }

    pub fn word(&mut self) -> u64 {
        self.bits(64)
    }

    /// Uniform on `[0, bound)` by bit-string rejection. `bound` must be positive.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let t = 64 - (bound - 1).leading_zeros();
        loop {
            let x = self.bits(t);
            if x < bound {
                return x;
            }
        }
    }

    /// Bernoulli(num/den) with exact integer comparison.
    pub fn bernoulli(&mut self, num: u64, den: u64) -> bool {
        if num == 0 {
            return false;
        }
        if num >= den {
            return true;
        }
        self.below(den) < num
    }

    /// Uniform on `[0, bound)` for an arbitrary-precision bound.
    pub fn below_big(&mut self, bound: &BigUint) -> BigUint {
        assert!(bound.bits() > 0, "empty range");
        let t = (bound - 1u32).bits();
        loop {
            let x = self.big_bits(t);
            if &x < bound {
                return x;
            }
        }
    }

    fn big_bits(&mut self, t: u64) -> BigUint {
        let mut digits = Vec::with_capacity(t.div_ceil(64) as usize);
        let mut left = t;
        while left > 0 {
            let take = left.min(64) as u32;
            digits.push(self.bits(take));
            left -= u64::from(take);
        }
        BigUint::from_slice(
            &digits
                .iter()
                .flat_map(|d| [*d as u32, (*d >> 32) as u32])
                .collect::<Vec<_>>(),
        )
    }
}

/// Uniform integer on `[1, bound]`: draw as many bits as `bound - 1` needs,
/// redraw while the value is `>= bound`, then shift by one. Each round
/// accepts with probability above one half.
pub fn draw_uniform_bigint(bound: &BigUint, rng: &mut RandomSource) -> Result<BigUint> {
    if bound.bits() == 0 {
        return Err(invalid("uniform draw bound must be at least 1"));
    }
    Ok(rng.below_big(bound) + 1u32)
}

#[cfg(test)]
pub(crate) mod testing {
    use rand_chacha::rand_core::{impls, RngCore};

    /// Emits only zero bits.
    pub struct ZeroRng;

    impl RngCore for ZeroRng {
        fn next_u32(&mut self) -> u32 {
            0
        }
        fn next_u64(&mut self) -> u64 {
            0
        }
        fn fill_bytes(&mut self, dst: &mut [u8]) {
            impls::fill_bytes_via_next(self, dst)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_are_stream_order() {
        let mut a = RandomSource::seeded(11);
        let mut b = RandomSource::seeded(11);
        let w = a.word();
        let lo = b.bits(5);
        let hi = b.bits(59);
        assert_eq!(w, lo | (hi << 5));
        // Straddling a word boundary keeps the stream contiguous.
        let mut c = RandomSource::seeded(11);
        let _ = c.bits(60);
        let x = c.bits(10);
        let mut d = RandomSource::seeded(11);
        let w0 = d.word();
        let w1 = d.word();
        assert_eq!(x, (w0 >> 60) | ((w1 & 0x3f) << 4));
    }

    #[test]
    fn streams_differ_and_repeat() {
        let mut a = RandomSource::for_sample(3, 0);
        let mut b = RandomSource::for_sample(3, 1);
        let mut a2 = RandomSource::for_sample(3, 0);
        let xa: Vec<u64> = (0..4).map(|_| a.word()).collect();
        let xb: Vec<u64> = (0..4).map(|_| b.word()).collect();
        let xa2: Vec<u64> = (0..4).map(|_| a2.word()).collect();
        assert_ne!(xa, xb);
        assert_eq!(xa, xa2);
    }

    #[test]
    fn bound_one_is_always_one() {
        let mut rng = RandomSource::seeded(1);
        for _ in 0..100 {
            assert_eq!(draw_uniform_bigint(&BigUint::from(1u32), &mut rng).unwrap(), BigUint::from(1u32));
        }
        assert_eq!(rng.bits_consumed(), 0);
    }

    #[test]
    fn power_of_two_bound_never_rejects() {
        let mut rng = RandomSource::seeded(2);
        for t in [1u64, 5, 64, 65, 200] {
            let before = rng.bits_consumed();
            let bound = BigUint::from(1u32) << t;
            let x = draw_uniform_bigint(&bound, &mut rng).unwrap();
            assert_eq!(rng.bits_consumed() - before, t);
            assert!(x >= BigUint::from(1u32) && x <= bound);
        }
    }

    #[test]
    fn zero_bound_rejected() {
        let mut rng = RandomSource::seeded(0);
        assert!(draw_uniform_bigint(&BigUint::from(0u32), &mut rng).is_err());
    }

    #[test]
    fn bound_three_is_flat() {
        // 30000 draws, each face expected 10000 with sd ~81.6; 3.5 sd ~ 286 < 300.
        let mut rng = RandomSource::seeded(2024);
        let mut counts = [0u32; 3];
        let bound = BigUint::from(3u32);
        for _ in 0..30000 {
            let x = draw_uniform_bigint(&bound, &mut rng).unwrap();
            counts[(u64::try_from(x).unwrap() - 1) as usize] += 1;
        }
        for c in counts {
            assert!((9700..=10300).contains(&c), "{counts:?}");
        }
    }

    #[test]
    fn zero_stub_always_draws_zero() {
        let mut rng = RandomSource::from_rng(testing::ZeroRng);
        assert_eq!(rng.below(7), 0);
        // A zero draw lands below the numerator.
        assert!(rng.bernoulli(1, 2));
        assert!(!rng.bernoulli(0, 2));
    }
}
