//! Exact elimination over ℤ and ℚ, used as the reference oracle.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Fraction-free (Bareiss) forward elimination with leftmost-column,
/// topmost-row pivoting. Every division is exact. Returns the pivot columns.
pub(crate) fn bareiss_pivots(mut a: Vec<Vec<BigInt>>, cols: usize) -> Vec<usize> {
    let rows = a.len();
    let mut prev = BigInt::one();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(i) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, i);
        let (top, bottom) = a.split_at_mut(r + 1);
        let pivot_row = &top[r];
        let pivot = &pivot_row[c];
        for row in bottom.iter_mut() {
            let lead = std::mem::take(&mut row[c]);
            for j in c + 1..cols {
                let t = pivot * &row[j] - &lead * &pivot_row[j];
                debug_assert!((&t % &prev).is_zero());
                row[j] = t / &prev;
            }
        }
        prev = pivot.clone();
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Basis of the rational right null space, each vector scaled to a
/// primitive integer vector with a positive entry in its free column.
pub(crate) fn rational_kernel(rows: &[Vec<BigInt>], cols: usize) -> Vec<Vec<BigInt>> {
    let mut a: Vec<Vec<BigRational>> = rows
        .iter()
        .map(|r| r.iter().map(|x| BigRational::from_integer(x.clone())).collect())
        .collect();
    let mut pivots = Vec::new();
    let mut rank = 0;
    for c in 0..cols {
        if rank == a.len() {
            break;
        }
        let Some(i) = (rank..a.len()).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(rank, i);
        let inv = a[rank][c].recip();
        for x in a[rank][c..].iter_mut() {
            *x = &*x * &inv;
        }
        let pivot_row = a[rank].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i == rank || row[c].is_zero() {
                continue;
            }
            let factor = row[c].clone();
            for (x, y) in row[c..].iter_mut().zip(&pivot_row[c..]) {
                *x -= &factor * y;
            }
        }
        pivots.push(c);
        rank += 1;
    }
    let mut is_pivot = vec![false; cols];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    (0..cols)
        .filter(|&c| !is_pivot[c])
        .map(|free| {
            let mut v = vec![BigRational::zero(); cols];
            v[free] = BigRational::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[r][free].clone();
            }
            primitive_integer_vector(&v)
        })
        .collect()
}

fn primitive_integer_vector(v: &[BigRational]) -> Vec<BigInt> {
    let lcm = v.iter().fold(BigInt::one(), |l, x| l.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    let g = ints.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    if g.is_zero() {
        return ints;
    }
    ints.into_iter().map(|x| x / &g).collect()
}
