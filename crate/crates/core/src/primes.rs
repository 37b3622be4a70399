//! Word-sized primality and prime sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin; the first twelve prime bases are exact for all of u64.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub fn ensure_odd_prime(p: u64) -> Result<()> {
    if p > 2 && is_prime(p) {
        Ok(())
    } else {
        Err(Error::NotOddPrime(p))
    }
}

/// Draws `count` distinct primes of exactly `bits` bits from a seeded stream.
///
/// `bits` must lie in 20..=63; the upper limit keeps sums of two residues
/// inside a u64.
pub fn sample_primes(count: usize, bits: u32, seed: u64) -> Result<Vec<u64>> {
    if !(20..=63).contains(&bits) {
        return Err(Error::InvalidArgument(format!(
            "prime size must be between 20 and 63 bits, got {bits}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = 1u64 << (bits - 1);
    let hi = (1u64 << bits) - 1;
    let mut out: Vec<u64> = Vec::with_capacity(count);
    while out.len() < count {
        let candidate = rng.gen_range(lo..=hi) | 1;
        if is_prime(candidate) && !out.contains(&candidate) {
            out.push(candidate);
        }
    }
    Ok(out)
}
