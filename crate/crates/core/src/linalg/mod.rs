//! Exact rank, pivots and kernels of integer matrices.
//!
//! The fast path reduces modulo word-sized primes and certifies the result
//! by agreement of several primes on both the rank and the pivot columns.
//! Fraction-free elimination over ℤ is the exact reference. All routines
//! pivot on the leftmost column first and, within a column, the topmost
//! remaining row, so pivot columns are reproducible everywhere.

mod field;
mod fraction_free;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::Serialize;

use crate::primes::{is_prime, sample_primes};
use crate::series::Stored;
use crate::{Error, Result};
use field::{reduce_big, reduce_i64, ModMatrix, MontgomeryField, PrimeField, SmallField};

/// Identifier of the pivoting rule, recorded in cache keys.
pub const PIVOT_RULE_ID: u8 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Entries {
    Small(Vec<i64>),
    Big(Vec<BigInt>),
}

/// Dense integer matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    entries: Entries,
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<BigInt>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(IntMatrix {
            rows,
            cols,
            entries: Entries::Big(entries),
        })
    }

    pub fn from_i64(rows: usize, cols: usize, entries: Vec<i64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(IntMatrix {
            rows,
            cols,
            entries: Entries::Small(entries),
        })
    }

    pub fn from_rows<T: Into<BigInt> + Clone>(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidArgument("ragged rows".into()));
        }
        let entries = rows.iter().flatten().cloned().map(Into::into).collect();
        Self::new(rows.len(), cols, entries)
    }

    /// Stacks stored coefficient slices as rows; all must have equal length.
    pub fn from_stored_rows(rows: &[Stored<'_>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidArgument("ragged rows".into()));
        }
        if rows.iter().all(|r| matches!(r, Stored::Small(_))) {
            let mut entries = Vec::with_capacity(rows.len() * cols);
            for r in rows {
                if let Stored::Small(v) = r {
                    entries.extend_from_slice(v);
                }
            }
            return Self::from_i64(rows.len(), cols, entries);
        }
        let entries = rows.iter().flat_map(|r| (0..cols).map(move |j| r.get(j))).collect();
        Self::new(rows.len(), cols, entries)
    }

    pub fn identity(n: usize) -> Self {
        let mut e = vec![0i64; n * n];
        for i in 0..n {
            e[i * n + i] = 1;
        }
        IntMatrix {
            rows: n,
            cols: n,
            entries: Entries::Small(e),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> BigInt {
        let i = r * self.cols + c;
        match &self.entries {
            Entries::Small(v) => BigInt::from(v[i]),
            Entries::Big(v) => v[i].clone(),
        }
    }

    pub fn row(&self, r: usize) -> Vec<BigInt> {
        (0..self.cols).map(|c| self.get(r, c)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|r| self.row(r)).collect()
    }

    pub fn transpose(&self) -> IntMatrix {
        let (rows, cols) = (self.rows, self.cols);
        let entries = match &self.entries {
            Entries::Small(v) => Entries::Small((0..rows * cols).map(|i| v[(i % rows) * cols + i / rows]).collect()),
            Entries::Big(v) => Entries::Big(
                (0..rows * cols)
                    .map(|i| v[(i % rows) * cols + i / rows].clone())
                    .collect(),
            ),
        };
        IntMatrix {
            rows: cols,
            cols: rows,
            entries,
        }
    }

    /// Multiplies by an integer column vector.
    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                (0..self.cols)
                    .filter(|&c| !v[c].is_zero())
                    .map(|c| self.get(r, c) * &v[c])
                    .sum()
            })
            .collect()
    }

    fn reduce<F: PrimeField>(&self, field: F) -> ModMatrix<F> {
        let q = field.modulus();
        let data = match &self.entries {
            Entries::Small(v) => v.iter().map(|&x| field.enter(reduce_i64(x, q))).collect(),
            Entries::Big(v) => v.iter().map(|x| field.enter(reduce_big(x, q))).collect(),
        };
        ModMatrix {
            field,
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }
}

fn check_modulus(q: u64) -> Result<()> {
    if !is_prime(q) {
        return Err(Error::NotPrime(q));
    }
    if q >= 1 << 63 {
        return Err(Error::InvalidArgument(format!("modulus {q} exceeds the 63-bit limit")));
    }
    Ok(())
}

fn eliminate<F: PrimeField, R>(
    m: &IntMatrix,
    field: F,
    full: bool,
    finish: impl FnOnce(&ModMatrix<F>, Vec<usize>) -> R,
) -> R {
    let mut red = m.reduce(field);
    let pivots = red.row_reduce(full);
    finish(&red, pivots)
}

/// Rank and pivot columns over GF(q).
pub fn rank_mod_prime(m: &IntMatrix, q: u64) -> Result<(usize, Vec<usize>)> {
    check_modulus(q)?;
    let pivots = if q < 1 << 32 {
        eliminate(m, SmallField::new(q), false, |_, p| p)
    } else {
        eliminate(m, MontgomeryField::new(q), false, |_, p| p)
    };
    Ok((pivots.len(), pivots))
}

/// Basis of the right null space over GF(q): one vector per non-pivot
/// column, entries as canonical residues in [0, q).
pub fn kernel_mod_prime(m: &IntMatrix, q: u64) -> Result<Vec<Vec<u64>>> {
    check_modulus(q)?;
    Ok(if q < 1 << 32 {
        eliminate(m, SmallField::new(q), true, |red, p| red.kernel_from_rref(&p))
    } else {
        eliminate(m, MontgomeryField::new(q), true, |red, p| red.kernel_from_rref(&p))
    })
}

/// Rank by fraction-free elimination over ℤ.
pub fn rank_fraction_free(m: &IntMatrix) -> (usize, Vec<usize>) {
    let pivots = fraction_free::bareiss_pivots(m.to_rows(), m.cols);
    (pivots.len(), pivots)
}

/// Basis of the rational right null space as primitive integer vectors.
pub fn kernel_exact(m: &IntMatrix) -> Vec<Vec<BigInt>> {
    fraction_free::rational_kernel(&m.to_rows(), m.cols)
}

/// The fraction a/b with a ≡ b·x (mod q), |a| and b at most √(q/2), if any.
pub fn rational_reconstruct(x: u64, q: u64) -> Option<(i128, i128)> {
    let bound = ((q / 2) as f64).sqrt() as i128;
    let (mut r0, mut r1) = (q as i128, (x % q) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 > bound {
        let k = r0 / r1;
        (r0, r1) = (r1, r0 - k * r1);
        (t0, t1) = (t1, t0 - k * t1);
    }
    if t1 == 0 || t1.abs() > bound {
        return None;
    }
    let (a, b) = if t1 < 0 { (-r1, -t1) } else { (r1, t1) };
    (num_integer::Integer::gcd(&a, &b) == 1).then_some((a, b))
}

/// Lifts a kernel vector over GF(q) to a primitive integer vector by
/// rational reconstruction of every entry. The caller must still check the
/// lift over ℤ.
pub fn lift_kernel_vector(v: &[u64], q: u64) -> Option<Vec<BigInt>> {
    let fracs = v
        .iter()
        .map(|&x| rational_reconstruct(x, q))
        .collect::<Option<Vec<_>>>()?;
    let den = fracs.iter().fold(BigInt::from(1), |acc, &(_, b)| {
        num_integer::Integer::lcm(&acc, &BigInt::from(b))
    });
    let scaled: Vec<BigInt> = fracs
        .iter()
        .map(|&(a, b)| BigInt::from(a) * (&den / BigInt::from(b)))
        .collect();
    let g = scaled
        .iter()
        .fold(BigInt::zero(), |g, x| num_integer::Integer::gcd(&g, x));
    if g.is_zero() {
        return Some(scaled);
    }
    Some(scaled.into_iter().map(|x| x / &g).collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RankMethod {
    ModularAgreed { primes: Vec<u64> },
    FractionFree,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RankCertificate {
    pub rank: usize,
    pub method: RankMethod,
    pub pivot_columns: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CertPolicy {
    /// Reduce modulo `primes` in order until `agreement` of them report the
    /// same pivot set at the largest rank seen.
    Modular { primes: Vec<u64>, agreement: usize },
    /// Bareiss elimination over ℤ.
    FractionFree,
}

impl CertPolicy {
    pub fn modular(agreement: usize, max_primes: usize, bits: u32, seed: u64) -> Result<Self> {
        if agreement < 1 || max_primes < agreement {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= agreement ({agreement}) <= prime budget ({max_primes})"
            )));
        }
        Ok(CertPolicy::Modular {
            primes: sample_primes(max_primes, bits, seed)?,
            agreement,
        })
    }

    /// Two agreeing 62-bit primes out of a budget of eight.
    pub fn default_modular(seed: u64) -> Self {
        Self::modular(2, 8, 62, seed).expect("valid defaults")
    }

    /// Prime used for kernel computations under this policy, if any.
    pub fn kernel_prime(&self) -> Option<u64> {
        match self {
            CertPolicy::Modular { primes, .. } => primes.first().copied(),
            CertPolicy::FractionFree => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            CertPolicy::Modular { agreement, .. } => format!("modular{agreement}"),
            CertPolicy::FractionFree => "fraction-free".into(),
        }
    }
}

pub fn rank_exact(m: &IntMatrix, policy: &CertPolicy) -> Result<RankCertificate> {
    match policy {
        CertPolicy::FractionFree => {
            let (rank, pivot_columns) = rank_fraction_free(m);
            Ok(RankCertificate {
                rank,
                method: RankMethod::FractionFree,
                pivot_columns,
            })
        }
        CertPolicy::Modular { primes, agreement } => {
            let mut seen: Vec<(u64, Vec<usize>)> = Vec::new();
            for &q in primes {
                let (_, pivots) = rank_mod_prime(m, q)?;
                seen.push((q, pivots));
                let top = seen.iter().map(|(_, p)| p.len()).max().unwrap_or(0);
                let mut groups: Vec<(&Vec<usize>, Vec<u64>)> = Vec::new();
                for (q, p) in seen.iter().filter(|(_, p)| p.len() == top) {
                    match groups.iter_mut().find(|(g, _)| *g == p) {
                        Some((_, qs)) => qs.push(*q),
                        None => groups.push((p, vec![*q])),
                    }
                }
                if let Some((pivots, qs)) = groups.into_iter().find(|(_, qs)| qs.len() >= *agreement) {
                    return Ok(RankCertificate {
                        rank: top,
                        pivot_columns: pivots.clone(),
                        method: RankMethod::ModularAgreed { primes: qs },
                    });
                }
            }
            Err(Error::CertificationFailed {
                primes_tried: primes.len(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(rows: &[Vec<i64>]) -> IntMatrix {
        IntMatrix::from_rows(rows).unwrap()
    }

    /// Rank over ℚ by brute-force minors: the largest r with a nonzero r×r minor.
    fn rank_by_minors(a: &IntMatrix) -> usize {
        fn det(rows: &[Vec<BigInt>]) -> BigInt {
            let n = rows.len();
            if n == 0 {
                return BigInt::from(1);
            }
            (0..n)
                .map(|j| {
                    let minor: Vec<Vec<BigInt>> = rows[1..]
                        .iter()
                        .map(|r| {
                            r.iter()
                                .enumerate()
                                .filter(|&(c, _)| c != j)
                                .map(|(_, x)| x.clone())
                                .collect()
                        })
                        .collect();
                    let sign = if j % 2 == 0 { 1 } else { -1 };
                    &rows[0][j] * det(&minor) * sign
                })
                .sum()
        }
        fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
            if k == 0 {
                return vec![vec![]];
            }
            if n < k {
                return vec![];
            }
            let mut out = subsets(n - 1, k);
            for mut s in subsets(n - 1, k - 1) {
                s.push(n - 1);
                out.push(s);
            }
            out
        }
        let full = a.to_rows();
        for r in (1..=a.rows().min(a.cols())).rev() {
            for rs in subsets(a.rows(), r) {
                for cs in subsets(a.cols(), r) {
                    let sub: Vec<Vec<BigInt>> = rs
                        .iter()
                        .map(|&i| cs.iter().map(|&j| full[i][j].clone()).collect())
                        .collect();
                    if !det(&sub).is_zero() {
                        return r;
                    }
                }
            }
        }
        0
    }

    #[test]
    fn identity_rank_and_pivots() {
        assert_eq!(
            rank_mod_prime(&IntMatrix::identity(3), 101).unwrap(),
            (3, vec![0, 1, 2])
        );
        let id4 = IntMatrix::identity(4);
        assert_eq!(rank_exact(&id4, &CertPolicy::default_modular(1)).unwrap().rank, 4);
        assert_eq!(rank_exact(&id4, &CertPolicy::FractionFree).unwrap().rank, 4);
    }

    #[test]
    fn proportional_rows() {
        assert_eq!(rank_mod_prime(&m(&[vec![2, 4], vec![1, 2]]), 101).unwrap().0, 1);
    }

    #[test]
    fn bad_prime_drops_rank() {
        let a = m(&[vec![1, 1], vec![1, -1]]);
        assert_eq!(rank_mod_prime(&a, 2).unwrap().0, 1);
        assert_eq!(rank_mod_prime(&a, 101).unwrap().0, 2);
    }

    #[test]
    fn composite_modulus_rejected() {
        assert!(matches!(
            rank_mod_prime(&IntMatrix::identity(2), 100),
            Err(Error::NotPrime(100))
        ));
        assert!(kernel_mod_prime(&IntMatrix::identity(2), 1).is_err());
    }

    #[test]
    fn kernels() {
        assert!(kernel_mod_prime(&IntMatrix::identity(3), 101).unwrap().is_empty());
        assert_eq!(kernel_mod_prime(&m(&[vec![1, 1]]), 101).unwrap(), vec![vec![100, 1]]);
        let k = kernel_exact(&m(&[vec![2, 4, 6], vec![1, 2, 4]]));
        assert_eq!(k, vec![vec![BigInt::from(-2), BigInt::from(1), BigInt::from(0)]]);
    }

    #[test]
    fn pivots_skip_dependent_columns() {
        let a = m(&[vec![1, 2, 0, 1], vec![2, 4, 1, 0], vec![3, 6, 1, 1]]);
        assert_eq!(rank_mod_prime(&a, 1_000_003).unwrap(), (2, vec![0, 2]));
        assert_eq!(rank_fraction_free(&a), (2, vec![0, 2]));
    }

    #[test]
    fn modular_policy_recovers_from_bad_primes() {
        // det = 210 = 2·3·5·7, so 2, 3 and 5 lose rank
        let a = m(&[vec![210, 0], vec![0, 1]]);
        let policy = CertPolicy::Modular {
            primes: vec![2, 11, 3, 13],
            agreement: 2,
        };
        let cert = rank_exact(&a, &policy).unwrap();
        assert_eq!(cert.rank, 2);
        assert_eq!(cert.method, RankMethod::ModularAgreed { primes: vec![11, 13] });
        let starved = CertPolicy::Modular {
            primes: vec![2, 11, 3, 5],
            agreement: 2,
        };
        // bad primes that agree with each other are accepted when no larger rank was seen
        let fooled = CertPolicy::Modular {
            primes: vec![2, 3],
            agreement: 2,
        };
        assert_eq!(rank_exact(&a, &fooled).unwrap().rank, 1);
        assert!(matches!(
            rank_exact(&a, &starved),
            Err(Error::CertificationFailed { .. })
        ));
    }

    #[test]
    fn transpose_and_mixed_storage() {
        let a = m(&[vec![1, 2, 3], vec![4, 5, 6]]);
        let t = a.transpose();
        assert_eq!(
            t.to_rows(),
            IntMatrix::from_rows(&[vec![1, 4], vec![2, 5], vec![3, 6]])
                .unwrap()
                .to_rows()
        );
        let big = BigInt::from(1u64 << 62) * BigInt::from(1u64 << 62);
        let b = IntMatrix::from_rows(&[vec![big.clone(), BigInt::from(1)], vec![big, BigInt::from(1)]]).unwrap();
        assert_eq!(rank_exact(&b, &CertPolicy::default_modular(3)).unwrap().rank, 1);
        assert_eq!(rank_fraction_free(&b).0, 1);
    }

    #[test]
    fn random_matrices_agree_with_fraction_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let policy = CertPolicy::default_modular(99);
        for trial in 0..1000 {
            let rows = rng.gen_range(1..=8);
            let cols = rng.gen_range(1..=8);
            // low-rank products exercise dependent columns
            let inner = rng.gen_range(1..=8);
            let left: Vec<i64> = (0..rows * inner).map(|_| rng.gen_range(-6..=6)).collect();
            let right: Vec<i64> = (0..inner * cols).map(|_| rng.gen_range(-6..=6)).collect();
            let entries: Vec<i64> = (0..rows * cols)
                .map(|i| {
                    (0..inner)
                        .map(|t| left[(i / cols) * inner + t] * right[t * cols + i % cols])
                        .sum()
                })
                .collect();
            let a = IntMatrix::from_i64(rows, cols, entries).unwrap();
            let exact = rank_exact(&a, &CertPolicy::FractionFree).unwrap();
            let modular = rank_exact(&a, &policy).unwrap();
            assert_eq!(exact.rank, modular.rank, "trial {trial}");
            assert_eq!(exact.pivot_columns, modular.pivot_columns, "trial {trial}");
            let ker = kernel_exact(&a);
            assert_eq!(ker.len(), cols - exact.rank);
            for v in &ker {
                assert!(a.mul_vec(v).iter().all(Zero::is_zero));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn modular_agrees_with_exact(rows in 1usize..=12, cols in 1usize..=12, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let entries: Vec<i64> = (0..rows * cols).map(|_| rng.gen_range(-50..=50)).collect();
            let a = IntMatrix::from_i64(rows, cols, entries).unwrap();
            let exact = rank_fraction_free(&a);
            let cert = rank_exact(&a, &CertPolicy::default_modular(seed)).unwrap();
            prop_assert_eq!(cert.rank, exact.0);
            prop_assert_eq!(cert.pivot_columns, exact.1);
        }

        #[test]
        fn mod_rank_never_exceeds_rational_rank(rows in 1usize..=5, cols in 1usize..=5, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let entries: Vec<i64> = (0..rows * cols).map(|_| rng.gen_range(-4..=4)).collect();
            let a = IntMatrix::from_i64(rows, cols, entries).unwrap();
            let exact = rank_by_minors(&a);
            prop_assert_eq!(rank_fraction_free(&a).0, exact);
            for q in [2u64, 3, 5, 7, 101] {
                prop_assert!(rank_mod_prime(&a, q).unwrap().0 <= exact);
            }
        }

        #[test]
        fn mod_kernel_vectors_annihilate(rows in 1usize..=6, cols in 1usize..=9, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let entries: Vec<i64> = (0..rows * cols).map(|_| rng.gen_range(-9..=9)).collect();
            let a = IntMatrix::from_i64(rows, cols, entries).unwrap();
            let q = 4_611_686_018_427_388_039u64;
            let (rank, _) = rank_mod_prime(&a, q).unwrap();
            let ker = kernel_mod_prime(&a, q).unwrap();
            prop_assert_eq!(ker.len(), cols - rank);
            for v in ker {
                let v: Vec<BigInt> = v.into_iter().map(BigInt::from).collect();
                for x in a.mul_vec(&v) {
                    prop_assert!((x % BigInt::from(q)).is_zero());
                }
            }
        }
    }
}
