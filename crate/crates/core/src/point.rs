//! Bit-string genotypes and the OneMax fitness function.
//!
//! Fitness is minimized: the fitness distance of a point is its number of
//! one-bits, so the all-zeros string is the optimum.

use rand::RngCore;

use crate::error::{config_err, Result};

const WORD_BITS: usize = 64;

/// A fixed-length bit string stored in 64-bit words.
///
/// Bits beyond `len` in the last word are always zero, so a population count
/// over the words is the OneMax value.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SearchPoint {
    words: Vec<u64>,
    len: usize,
}

impl SearchPoint {
    pub fn zeros(len: usize) -> Result<Self> {
        if len == 0 {
            return config_err("problem size n must be at least 1");
        }
        Ok(Self {
            words: vec![0; len.div_ceil(WORD_BITS)],
            len,
        })
    }

    pub fn ones(len: usize) -> Result<Self> {
        let mut point = Self::zeros(len)?;
        point.words.iter_mut().for_each(|w| *w = u64::MAX);
        point.mask_tail();
        Ok(point)
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let mut point = Self::zeros(bits.len())?;
        for (i, &b) in bits.iter().enumerate() {
            if b {
                point.flip(i);
            }
        }
        Ok(point)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    /// Always false: zero-length points cannot be constructed.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        self.words[i / WORD_BITS] ^= 1 << (i % WORD_BITS);
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn complement(&self) -> Self {
        let mut out = self.clone();
        out.words.iter_mut().for_each(|w| *w = !*w);
        out.mask_tail();
        out
    }

    pub fn hamming_distance(&self, other: &Self) -> usize {
        assert_eq!(self.len, other.len, "length mismatch");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Positions of the one-bits, ascending.
    pub fn one_positions(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (wi, &word) in self.words.iter().enumerate() {
            let mut w = word;
            while w != 0 {
                out.push(wi * WORD_BITS + w.trailing_zeros() as usize);
                w &= w - 1;
            }
        }
        out
    }

    pub(crate) fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }

    pub(crate) fn mask_tail(&mut self) {
        let rem = self.len % WORD_BITS;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl std::fmt::Debug for SearchPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s: String = self.bits().map(|b| if b { '1' } else { '0' }).collect();
        write!(f, "SearchPoint({s})")
    }
}

/// Fitness distance of `x`: its number of one-bits.
#[inline]
pub fn onemax(x: &SearchPoint) -> usize {
    x.words.iter().map(|w| w.count_ones() as usize).sum()
}

/// Bit-by-bit OneMax, kept as the reference for [`onemax`].
pub fn onemax_per_bit(x: &SearchPoint) -> usize {
    x.bits().filter(|&b| b).count()
}

/// Uniformly random point of length `n`.
pub fn random_search_point<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Result<SearchPoint> {
    let mut point = SearchPoint::zeros(n)?;
    point.words_mut().iter_mut().for_each(|w| *w = rng.next_u64());
    point.mask_tail();
    Ok(point)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn optimum_and_antipode() {
        assert_eq!(onemax(&SearchPoint::zeros(8).unwrap()), 0);
        assert_eq!(onemax(&SearchPoint::ones(8).unwrap()), 8);
        assert_eq!(onemax(&SearchPoint::ones(130).unwrap()), 130);
    }

    #[test]
    fn zero_length_rejected() {
        assert!(SearchPoint::zeros(0).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(random_search_point(0, &mut rng).is_err());
    }

    #[test]
    fn popcount_matches_per_bit_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let n = rng.random_range(1..300);
            let x = random_search_point(n, &mut rng).unwrap();
            assert_eq!(onemax(&x), onemax_per_bit(&x));
            assert_eq!(onemax(&x) + onemax(&x.complement()), n);
            assert_eq!(x.one_positions().len(), onemax(&x));
        }
    }

    #[test]
    fn single_bit_is_fair() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 100_000;
        let ones: usize = (0..draws)
            .map(|_| onemax(&random_search_point(1, &mut rng).unwrap()))
            .sum();
        let frac = ones as f64 / draws as f64;
        assert!((0.495..=0.505).contains(&frac), "fraction {frac}");
    }

    #[test]
    fn mean_distance_n100() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let draws = 10_000;
        let total: usize = (0..draws)
            .map(|_| onemax(&random_search_point(100, &mut rng).unwrap()))
            .sum();
        let mean = total as f64 / draws as f64;
        assert!((mean - 50.0).abs() <= 0.5, "mean {mean}");
    }

    #[test]
    fn flip_and_get() {
        let mut x = SearchPoint::zeros(70).unwrap();
        x.flip(0);
        x.flip(69);
        assert!(x.get(0) && x.get(69) && !x.get(1));
        assert_eq!(x.one_positions(), vec![0, 69]);
        assert_eq!(x.hamming_distance(&SearchPoint::zeros(70).unwrap()), 2);
    }
}
