//! Closed-form dimensions of spaces of modular forms.

use crate::primes::ensure_odd_prime;
use crate::{Error, Result};

fn ensure_weight(k: u64, min: u64) -> Result<()> {
    if k < min {
        Err(Error::WeightTooSmall { got: k, min })
    } else {
        Ok(())
    }
}

/// dim M_k(Γ(4)) = 2k + 1.
pub fn dim_mk_gamma4(k: u64) -> u64 {
    2 * k + 1
}

/// dim M_k(Γ±(4p)) = (p² − 1)((k − 1)p + 3/2), for k ≥ 2.
pub fn dim_mk_gammapm(p: u64, k: u64) -> Result<u64> {
    ensure_odd_prime(p)?;
    ensure_weight(k, 2)?;
    let twice = (p * p - 1) * (2 * (k - 1) * p + 3);
    assert!(twice.is_multiple_of(2), "half-integral dimension at p = {p}, k = {k}");
    Ok(twice / 2)
}

/// dim M_k(Γ(4p)), twice the Γ± value.
pub fn dim_mk_gamma4p(p: u64, k: u64) -> Result<u64> {
    Ok(2 * dim_mk_gammapm(p, k)?)
}

/// Number of conditions imposed by cusp identifications: 3(p+1)(p−3).
pub fn cusp_deficit(p: u64) -> u64 {
    3 * (p + 1) * (p - 3)
}

/// The upper bound (k−1)p³ − 3p²/2 + (7−k)p + 15/2 on dim W_k, computed by
/// both closed forms and checked for agreement.
pub fn conjecture_bound(p: u64, k: u64) -> Result<u64> {
    let via_dim = dim_mk_gammapm(p, k)? - cusp_deficit(p);
    let (p, k) = (p as i128, k as i128);
    let twice = 2 * (k - 1) * p * p * p - 3 * p * p + 2 * (7 - k) * p + 15;
    assert!(twice % 2 == 0, "half-integral bound at p = {p}, k = {k}");
    let polynomial = twice / 2;
    assert_eq!(polynomial, via_dim as i128, "closed forms disagree at p = {p}, k = {k}");
    Ok(via_dim)
}
