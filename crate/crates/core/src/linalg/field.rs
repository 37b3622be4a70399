//! Prime-field arithmetic and Gauss-Jordan elimination over GF(q).

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;

use crate::primes::{mul_mod, pow_mod};

pub(crate) trait PrimeField: Copy + Send + Sync {
    fn modulus(&self) -> u64;
    /// Maps a canonical residue in [0, q) into the internal representation.
    fn enter(&self, a: u64) -> u64;
    /// Maps back to a canonical residue.
    fn leave(&self, a: u64) -> u64;
    fn mul(&self, a: u64, b: u64) -> u64;

    #[inline]
    fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.modulus() - b
        }
    }

    fn inv(&self, a: u64) -> u64 {
        let q = self.modulus();
        self.enter(pow_mod(self.leave(a), q - 2, q))
    }
}

/// Plain reduction, for moduli below 2^32 (products fit a u64).
#[derive(Clone, Copy, Debug)]
pub(crate) struct SmallField {
    q: u64,
}

impl SmallField {
    pub(crate) fn new(q: u64) -> Self {
        debug_assert!(q < 1 << 32);
        SmallField { q }
    }
}

impl PrimeField for SmallField {
    fn modulus(&self) -> u64 {
        self.q
    }
    fn enter(&self, a: u64) -> u64 {
        a
    }
    fn leave(&self, a: u64) -> u64 {
        a
    }
    #[inline]
    fn mul(&self, a: u64, b: u64) -> u64 {
        a * b % self.q
    }
    fn inv(&self, a: u64) -> u64 {
        pow_mod(a, self.q - 2, self.q)
    }
}

/// Montgomery arithmetic with R = 2^64, for odd moduli below 2^63.
#[derive(Clone, Copy, Debug)]
pub(crate) struct MontgomeryField {
    q: u64,
    /// -q^{-1} mod 2^64
    q_neg_inv: u64,
    /// R^2 mod q
    r2: u64,
}

impl MontgomeryField {
    pub(crate) fn new(q: u64) -> Self {
        assert!(q % 2 == 1 && q < 1 << 63);
        // Newton iteration for q^{-1} mod 2^64
        let mut inv: u64 = 1;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(q.wrapping_mul(inv)));
        }
        let r = ((1u128 << 64) % q as u128) as u64;
        MontgomeryField {
            q,
            q_neg_inv: inv.wrapping_neg(),
            r2: mul_mod(r, r, q),
        }
    }

    #[inline]
    fn redc(&self, t: u128) -> u64 {
        let m = (t as u64).wrapping_mul(self.q_neg_inv);
        let u = ((t + m as u128 * self.q as u128) >> 64) as u64;
        if u >= self.q {
            u - self.q
        } else {
            u
        }
    }
}

impl PrimeField for MontgomeryField {
    fn modulus(&self) -> u64 {
        self.q
    }
    fn enter(&self, a: u64) -> u64 {
        self.redc(a as u128 * self.r2 as u128)
    }
    fn leave(&self, a: u64) -> u64 {
        self.redc(a as u128)
    }
    #[inline]
    fn mul(&self, a: u64, b: u64) -> u64 {
        self.redc(a as u128 * b as u128)
    }
}

pub(crate) fn reduce_i64(x: i64, q: u64) -> u64 {
    if q <= i64::MAX as u64 {
        x.rem_euclid(q as i64) as u64
    } else {
        (x as i128).rem_euclid(q as i128) as u64
    }
}

pub(crate) fn reduce_big(x: &BigInt, q: u64) -> u64 {
    x.mod_floor(&BigInt::from(q)).to_u64().expect("residue fits u64")
}

/// Row-major matrix over GF(q), entries in the field's internal form.
pub(crate) struct ModMatrix<F: PrimeField> {
    pub field: F,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u64>,
}

impl<F: PrimeField> ModMatrix<F> {
    /// Gauss-Jordan with leftmost-column, topmost-row pivoting. Pivot rows are
    /// scaled to 1. With `full`, entries above pivots are cleared as well,
    /// leaving the reduced row echelon form. Returns the pivot columns.
    pub(crate) fn row_reduce(&mut self, full: bool) -> Vec<usize> {
        let (rows, cols, f) = (self.rows, self.cols, self.field);
        let mut pivots = Vec::new();
        let mut rank = 0;
        for c in 0..cols {
            if rank == rows {
                break;
            }
            let Some(r) = (rank..rows).find(|&r| self.data[r * cols + c] != 0) else {
                continue;
            };
            if r != rank {
                for j in c..cols {
                    self.data.swap(r * cols + j, rank * cols + j);
                }
            }
            let inv = f.inv(self.data[rank * cols + c]);
            for j in c..cols {
                let x = &mut self.data[rank * cols + j];
                *x = f.mul(*x, inv);
            }
            let (above, rest) = self.data.split_at_mut(rank * cols);
            let (pivot_row, below) = rest.split_at_mut(cols);
            let pivot_tail = &pivot_row[c..];
            let eliminate = |row: &mut [u64]| {
                let factor = row[c];
                if factor == 0 {
                    return;
                }
                for (x, &y) in row[c..].iter_mut().zip(pivot_tail) {
                    *x = f.sub(*x, f.mul(factor, y));
                }
            };
            for row in below.chunks_exact_mut(cols) {
                eliminate(row);
            }
            if full {
                for row in above.chunks_exact_mut(cols) {
                    eliminate(row);
                }
            }
            pivots.push(c);
            rank += 1;
        }
        pivots
    }

    /// Right null space basis from a reduced row echelon form: one vector
    /// per free column, with a 1 in that column. Canonical residues.
    pub(crate) fn kernel_from_rref(&self, pivots: &[usize]) -> Vec<Vec<u64>> {
        let f = self.field;
        let mut is_pivot = vec![false; self.cols];
        for &p in pivots {
            is_pivot[p] = true;
        }
        (0..self.cols)
            .filter(|&c| !is_pivot[c])
            .map(|free| {
                let mut v = vec![0u64; self.cols];
                v[free] = 1;
                for (r, &pc) in pivots.iter().enumerate() {
                    let x = self.data[r * self.cols + free];
                    v[pc] = f.leave(f.sub(0, x));
                }
                v
            })
            .collect()
    }
}
