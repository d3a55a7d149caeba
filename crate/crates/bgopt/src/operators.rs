//! Genetic operators shared by every algorithm: uniform genotype sampling,
//! one-point crossover, per-bit flip mutation, and stochastic universal
//! sampling for archive-injection draws.

use rand::Rng;

use crate::encoding::BitString;

pub fn random_bitstring<R: Rng + ?Sized>(len: usize, rng: &mut R) -> BitString {
    let mut b = BitString::zeros(len);
    for i in 0..len {
        if rng.gen_bool(0.5) {
            b.set_bit(i, 1);
        }
    }
    b
}

/// One-point crossover: the child takes the prefix of `a` up to the cut and
/// the suffix of `b` from it. The cut lies strictly inside the string; for
/// single-bit genotypes the child is a copy of `a`.
pub fn crossover_one_point<R: Rng + ?Sized>(
    a: &BitString,
    b: &BitString,
    rng: &mut R,
) -> BitString {
    assert_eq!(a.len(), b.len());
    if a.len() < 2 {
        return a.clone();
    }
    let cut = rng.gen_range(1..a.len());
    crossover_at(a, b, cut)
}

pub fn crossover_at(a: &BitString, b: &BitString, cut: usize) -> BitString {
    let mut bits = Vec::with_capacity(a.len());
    bits.extend_from_slice(&a.bits()[..cut]);
    bits.extend_from_slice(&b.bits()[cut..]);
    BitString::from_bits(bits).expect("parents carry valid bits")
}

/// Independent per-bit flip mutation.
pub fn mutate_bits<R: Rng + ?Sized>(g: &mut BitString, per_bit_prob: f64, rng: &mut R) {
    for i in 0..g.len() {
        if rng.gen_bool(per_bit_prob) {
            g.flip_bit(i);
        }
    }
}

/// Stochastic universal sampling over `n` equally weighted items: `k`
/// evenly spaced pointers from one random offset, yielding a spread draw
/// without replacement while k <= n.
pub fn sus_indices<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    if n == 0 || k == 0 {
        return Vec::new();
    }
    let start: f64 = rng.gen_range(0.0..1.0);
    (0..k)
        .map(|j| (((start + j as f64) / k as f64) * n as f64).floor() as usize % n)
        .collect()
}
