//! Truncated exact-integer q-expansions on the grid q^(n/D).
//!
//! An expansion stores the coefficients of q^(n/D) for 0 ≤ n < L. When a
//! support class b is set, only the sub-grid n ≡ b (mod D) is stored, densely.
//! Coefficients live in machine words while they fit and are promoted to
//! big integers otherwise; the promotion is invisible through the public API.

use std::borrow::Cow;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::{Error, Result};

#[derive(Clone, Debug)]
pub(crate) enum Coeffs {
    Small(Vec<i64>),
    Big(Vec<BigInt>),
}

/// Borrowed view of the stored coefficients.
#[derive(Clone, Copy, Debug)]
pub enum Stored<'a> {
    Small(&'a [i64]),
    Big(&'a [BigInt]),
}

impl Stored<'_> {
    pub fn len(&self) -> usize {
        match self {
            Stored::Small(v) => v.len(),
            Stored::Big(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> BigInt {
        match self {
            Stored::Small(v) => BigInt::from(v[i]),
            Stored::Big(v) => v[i].clone(),
        }
    }
}

impl Coeffs {
    fn len(&self) -> usize {
        match self {
            Coeffs::Small(v) => v.len(),
            Coeffs::Big(v) => v.len(),
        }
    }

    fn get(&self, i: usize) -> BigInt {
        match self {
            Coeffs::Small(v) => BigInt::from(v[i]),
            Coeffs::Big(v) => v[i].clone(),
        }
    }

    fn is_zero_at(&self, i: usize) -> bool {
        match self {
            Coeffs::Small(v) => v[i] == 0,
            Coeffs::Big(v) => v[i].is_zero(),
        }
    }

    fn to_big(&self) -> Cow<'_, [BigInt]> {
        match self {
            Coeffs::Small(v) => Cow::Owned(v.iter().map(|&x| BigInt::from(x)).collect()),
            Coeffs::Big(v) => Cow::Borrowed(v),
        }
    }

    /// Demotes to machine words when every entry fits.
    fn normalized(self) -> Coeffs {
        match self {
            Coeffs::Big(v) => {
                let small: Option<Vec<i64>> = v.iter().map(|x| x.to_i64()).collect();
                match small {
                    Some(s) => Coeffs::Small(s),
                    None => Coeffs::Big(v),
                }
            }
            small => small,
        }
    }

    fn from_i128(acc: Vec<i128>) -> Coeffs {
        let small: Option<Vec<i64>> = acc.iter().map(|&x| i64::try_from(x).ok()).collect();
        match small {
            Some(s) => Coeffs::Small(s),
            None => Coeffs::Big(acc.into_iter().map(BigInt::from).collect()),
        }
    }

    fn max_abs_and_nnz(v: &[i64]) -> (u128, usize) {
        v.iter().fold((0u128, 0usize), |(m, nz), &x| {
            (m.max(x.unsigned_abs() as u128), nz + (x != 0) as usize)
        })
    }
}

/// Number of indices n in [0, len) with n ≡ class (mod denom).
pub fn class_len(len: usize, denom: u64, class: u64) -> usize {
    let class = class as usize;
    if class >= len {
        0
    } else {
        (len - 1 - class) / denom as usize + 1
    }
}

/// Truncated convolution `out[t] = Σ_{i+j+shift=t} a[i]·b[j]` for `t < out_len`.
fn convolve(a: &Coeffs, b: &Coeffs, shift: usize, out_len: usize) -> Coeffs {
    if let (Coeffs::Small(x), Coeffs::Small(y)) = (a, b) {
        let (ma, na) = Coeffs::max_abs_and_nnz(x);
        let (mb, nb) = Coeffs::max_abs_and_nnz(y);
        let bound = ma
            .checked_mul(mb)
            .and_then(|m| m.checked_mul(na.min(nb).max(1) as u128));
        match bound {
            Some(bd) if bd <= i64::MAX as u128 => {
                let mut acc = vec![0i64; out_len];
                convolve_words(x, y, shift, &mut acc, |d, p, q| *d += p * q);
                return Coeffs::Small(acc);
            }
            Some(bd) if bd <= i128::MAX as u128 => {
                let mut acc = vec![0i128; out_len];
                convolve_words(x, y, shift, &mut acc, |d, p, q| *d += p as i128 * q as i128);
                return Coeffs::from_i128(acc);
            }
            _ => {}
        }
    }
    let (x, y) = (a.to_big(), b.to_big());
    let mut acc = vec![BigInt::zero(); out_len];
    for (i, xi) in x.iter().enumerate() {
        if xi.is_zero() || i + shift >= out_len {
            continue;
        }
        let lim = y.len().min(out_len - i - shift);
        for (d, yj) in acc[i + shift..i + shift + lim].iter_mut().zip(&y[..lim]) {
            if !yj.is_zero() {
                *d += xi * yj;
            }
        }
    }
    Coeffs::Big(acc).normalized()
}

#[inline]
fn convolve_words<T>(x: &[i64], y: &[i64], shift: usize, acc: &mut [T], fma: impl Fn(&mut T, i64, i64)) {
    let out_len = acc.len();
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0 {
            continue;
        }
        if i + shift >= out_len {
            break;
        }
        let lim = y.len().min(out_len - i - shift);
        for (d, &yj) in acc[i + shift..i + shift + lim].iter_mut().zip(&y[..lim]) {
            fma(d, xi, yj);
        }
    }
}

#[derive(Clone, Debug)]
pub struct QExpansion {
    denom: u64,
    len: usize,
    class: Option<u64>,
    coeffs: Coeffs,
}

impl QExpansion {
    pub fn zero(denom: u64, len: usize) -> Self {
        QExpansion {
            denom,
            len,
            class: None,
            coeffs: Coeffs::Small(vec![0; len]),
        }
    }

    /// Expansion with the given full-grid coefficients; `len = coeffs.len()`.
    pub fn from_coeffs(denom: u64, coeffs: Vec<BigInt>) -> Self {
        QExpansion {
            denom,
            len: coeffs.len(),
            class: None,
            coeffs: Coeffs::Big(coeffs).normalized(),
        }
    }

    pub fn from_i64(denom: u64, coeffs: Vec<i64>) -> Self {
        QExpansion {
            denom,
            len: coeffs.len(),
            class: None,
            coeffs: Coeffs::Small(coeffs),
        }
    }

    /// Class-supported expansion from its sub-grid coefficients:
    /// `sub[i]` is the coefficient of q^((class + denom·i)/denom).
    pub fn with_class(denom: u64, len: usize, class: u64, sub: Vec<i64>) -> Result<Self> {
        Self::with_class_coeffs(denom, len, class, Coeffs::Small(sub))
    }

    pub fn with_class_big(denom: u64, len: usize, class: u64, sub: Vec<BigInt>) -> Result<Self> {
        Self::with_class_coeffs(denom, len, class, Coeffs::Big(sub).normalized())
    }

    fn with_class_coeffs(denom: u64, len: usize, class: u64, coeffs: Coeffs) -> Result<Self> {
        if class >= denom {
            return Err(Error::InvalidArgument(format!(
                "support class {class} is not reduced mod {denom}"
            )));
        }
        let expected = class_len(len, denom, class);
        if coeffs.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "class {class} mod {denom} has {expected} slots below {len}, got {}",
                coeffs.len()
            )));
        }
        Ok(QExpansion {
            denom,
            len,
            class: Some(class),
            coeffs,
        })
    }

    pub fn grid_denominator(&self) -> u64 {
        self.denom
    }

    /// Truncation length L: indices 0 ≤ n < L are represented.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn support_class(&self) -> Option<u64> {
        self.class
    }

    /// Stored coefficients: the class sub-grid when a class is set,
    /// the full grid otherwise.
    pub fn stored(&self) -> Stored<'_> {
        match &self.coeffs {
            Coeffs::Small(v) => Stored::Small(v),
            Coeffs::Big(v) => Stored::Big(v),
        }
    }

    /// Coefficient of q^(n/D).
    pub fn coeff(&self, n: usize) -> BigInt {
        assert!(n < self.len, "index {n} beyond truncation {}", self.len);
        match self.class {
            None => self.coeffs.get(n),
            Some(b) => {
                let d = self.denom as usize;
                let b = b as usize;
                if n % d == b % d {
                    self.coeffs.get((n - b) / d)
                } else {
                    BigInt::zero()
                }
            }
        }
    }

    pub fn to_dense(&self) -> Vec<BigInt> {
        (0..self.len).map(|n| self.coeff(n)).collect()
    }

    /// Nonzero terms as (n, a_n), in increasing n.
    pub fn terms(&self) -> Vec<(usize, BigInt)> {
        let (start, step) = match self.class {
            Some(b) => (b as usize, self.denom as usize),
            None => (0, 1),
        };
        (0..self.coeffs.len())
            .filter(|&i| !self.coeffs.is_zero_at(i))
            .map(|i| (start + step * i, self.coeffs.get(i)))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        (0..self.coeffs.len()).all(|i| self.coeffs.is_zero_at(i))
    }

    /// Largest absolute coefficient, in bits.
    pub fn max_bits(&self) -> u64 {
        match &self.coeffs {
            Coeffs::Small(v) => v
                .iter()
                .map(|x| 64 - x.unsigned_abs().leading_zeros() as u64)
                .max()
                .unwrap_or(0),
            Coeffs::Big(v) => v.iter().map(|x| x.bits()).max().unwrap_or(0),
        }
    }

    /// Drops the class tag and stores the full grid.
    pub fn to_full_grid(&self) -> QExpansion {
        match self.class {
            None => self.clone(),
            Some(_) => QExpansion {
                denom: self.denom,
                len: self.len,
                class: None,
                coeffs: Coeffs::Big(self.to_dense()).normalized(),
            },
        }
    }

    /// Returns a copy tagged with the class shared by all nonzero terms, if
    /// there is exactly one such class (the zero expansion gets none).
    pub fn detect_class(&self) -> Option<u64> {
        let mut found = None;
        for (n, _) in self.terms() {
            let c = n as u64 % self.denom;
            match found {
                None => found = Some(c),
                Some(f) if f != c => return None,
                _ => {}
            }
        }
        found
    }

    /// Re-tags the expansion with support class `class`, rejecting any
    /// nonzero term outside it.
    pub fn restrict_to_class(&self, class: u64) -> Result<QExpansion> {
        let class = class % self.denom;
        let d = self.denom as usize;
        let mut sub = Vec::with_capacity(class_len(self.len, self.denom, class));
        if let Some((n, _)) = self.terms().into_iter().find(|(n, _)| n % d != class as usize) {
            return Err(Error::OffClass { index: n, class });
        }
        let mut n = class as usize;
        while n < self.len {
            sub.push(self.coeff(n));
            n += d;
        }
        Self::with_class_big(self.denom, self.len, class, sub)
    }

    pub fn truncate(&self, new_len: usize) -> Result<QExpansion> {
        if new_len > self.len {
            return Err(Error::InvalidArgument(format!(
                "cannot extend truncation {} to {new_len}",
                self.len
            )));
        }
        let keep = match self.class {
            Some(b) => class_len(new_len, self.denom, b),
            None => new_len,
        };
        let coeffs = match &self.coeffs {
            Coeffs::Small(v) => Coeffs::Small(v[..keep].to_vec()),
            Coeffs::Big(v) => Coeffs::Big(v[..keep].to_vec()).normalized(),
        };
        Ok(QExpansion {
            denom: self.denom,
            len: new_len,
            class: self.class,
            coeffs,
        })
    }

    fn check_compatible(&self, other: &QExpansion) -> Result<()> {
        if self.denom != other.denom || self.len != other.len {
            return Err(Error::Mismatch {
                left_grid: self.denom,
                right_grid: other.denom,
                left_len: self.len,
                right_len: other.len,
            });
        }
        Ok(())
    }

    /// Truncated Cauchy product. Class-supported operands multiply on their
    /// sub-grids and the product is supported on the summed class.
    pub fn mul(&self, other: &QExpansion) -> Result<QExpansion> {
        self.check_compatible(other)?;
        let d = self.denom;
        match (self.class, other.class) {
            (Some(a), Some(b)) => {
                let sum = a + b;
                let class = sum % d;
                let out_len = class_len(self.len, d, class);
                let coeffs = convolve(&self.coeffs, &other.coeffs, (sum / d) as usize, out_len);
                Ok(QExpansion {
                    denom: d,
                    len: self.len,
                    class: Some(class),
                    coeffs,
                })
            }
            _ => {
                let (x, y) = (self.to_full_grid(), other.to_full_grid());
                Ok(QExpansion {
                    denom: d,
                    len: self.len,
                    class: None,
                    coeffs: convolve(&x.coeffs, &y.coeffs, 0, self.len),
                })
            }
        }
    }

    pub fn add(&self, other: &QExpansion) -> Result<QExpansion> {
        self.check_compatible(other)?;
        match (self.class, other.class) {
            (Some(a), Some(b)) if a == b => Ok(QExpansion {
                denom: self.denom,
                len: self.len,
                class: Some(a),
                coeffs: add_coeffs(&self.coeffs, &other.coeffs),
            }),
            _ => {
                let (x, y) = (self.to_full_grid(), other.to_full_grid());
                Ok(QExpansion {
                    denom: self.denom,
                    len: self.len,
                    class: None,
                    coeffs: add_coeffs(&x.coeffs, &y.coeffs),
                })
            }
        }
    }

    pub fn sub(&self, other: &QExpansion) -> Result<QExpansion> {
        self.add(&other.scale(&BigInt::from(-1)))
    }

    pub fn scale(&self, c: &BigInt) -> QExpansion {
        let coeffs = match (&self.coeffs, c.to_i64()) {
            (Coeffs::Small(v), Some(c)) => {
                let scaled: Option<Vec<i64>> = v.iter().map(|x| x.checked_mul(c)).collect();
                match scaled {
                    Some(s) => Coeffs::Small(s),
                    None => Coeffs::Big(v.iter().map(|&x| BigInt::from(x) * c).collect()),
                }
            }
            _ => Coeffs::Big(self.coeffs.to_big().iter().map(|x| x * c).collect()).normalized(),
        };
        QExpansion {
            denom: self.denom,
            len: self.len,
            class: self.class,
            coeffs,
        }
    }
}

fn add_coeffs(a: &Coeffs, b: &Coeffs) -> Coeffs {
    if let (Coeffs::Small(x), Coeffs::Small(y)) = (a, b) {
        let sum: Option<Vec<i64>> = x.iter().zip(y).map(|(p, q)| p.checked_add(*q)).collect();
        if let Some(s) = sum {
            return Coeffs::Small(s);
        }
    }
    let (x, y) = (a.to_big(), b.to_big());
    Coeffs::Big(x.iter().zip(y.iter()).map(|(p, q)| p + q).collect()).normalized()
}

/// Coefficientwise equality on the same grid and truncation; the class tag
/// is a storage detail and does not take part.
impl PartialEq for QExpansion {
    fn eq(&self, other: &Self) -> bool {
        if self.denom != other.denom || self.len != other.len {
            return false;
        }
        if self.class.is_some() && self.class == other.class {
            return (0..self.coeffs.len()).all(|i| self.coeffs.get(i) == other.coeffs.get(i));
        }
        self.terms() == other.terms()
    }
}

impl Eq for QExpansion {}

/// Sum of absolute values of the coefficients, used in tests and diagnostics.
pub fn l1_norm(e: &QExpansion) -> BigInt {
    e.terms().iter().map(|(_, a)| a.abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn theta_on_grid(len: usize) -> QExpansion {
        // θ(z/p) on the q^(1/4p) grid: 1 at n = 0, 2 at n = 4j²
        let mut c = vec![0i64; len];
        c[0] = 1;
        let mut j = 1;
        while 4 * j * j < len {
            c[4 * j * j] = 2;
            j += 1;
        }
        QExpansion::from_i64(12, c)
    }

    fn phi_on_grid(len: usize) -> QExpansion {
        let mut c = vec![0i64; len];
        let mut j = 1;
        while j * j < len {
            c[j * j] = 2;
            j += 2;
        }
        QExpansion::from_i64(12, c)
    }

    #[test]
    fn theta_squared_leading_terms() {
        let t = theta_on_grid(49);
        let sq = t.mul(&t).unwrap();
        assert_eq!(sq.coeff(0), 1.into());
        assert_eq!(sq.coeff(4), 4.into());
        assert_eq!(sq.coeff(8), 4.into());
        assert_eq!(sq.coeff(12), 0.into());
        assert_eq!(sq.coeff(16), 4.into());
    }

    #[test]
    fn phi_squared_leading_terms() {
        let f = phi_on_grid(49);
        let sq = f.mul(&f).unwrap();
        assert_eq!(sq.coeff(2), 4.into());
        assert_eq!(sq.coeff(10), 8.into());
        assert_eq!(sq.terms()[..2], [(2, 4.into()), (10, 8.into())]);
    }

    #[test]
    fn zero_absorbs() {
        let g = theta_on_grid(30);
        let z = QExpansion::zero(12, 30);
        assert!(z.mul(&g).unwrap().is_zero());
        assert!(g.mul(&z).unwrap().is_zero());
    }

    #[test]
    fn add_and_scale_identities() {
        let g = phi_on_grid(40);
        let z = QExpansion::zero(12, 40);
        assert_eq!(g.add(&z).unwrap(), g);
        assert!(g.scale(&0.into()).is_zero());
        let lhs = g.add(&g).unwrap().scale(&(-1).into()).add(&g.scale(&2.into())).unwrap();
        assert!(lhs.is_zero());
    }

    #[test]
    fn mismatches_are_rejected() {
        let a = QExpansion::zero(12, 10);
        assert!(a.mul(&QExpansion::zero(12, 11)).is_err());
        assert!(a.add(&QExpansion::zero(20, 10)).is_err());
    }

    #[test]
    fn class_supported_product_lands_in_summed_class() {
        // classes 7 and 9 mod 12 sum to 16 ≡ 4, carrying one sub-grid step
        let a = QExpansion::with_class(12, 50, 7, vec![1, 2, 3, 4]).unwrap();
        let b = QExpansion::with_class(12, 50, 9, vec![5, 0, 1, 1]).unwrap();
        let prod = a.mul(&b).unwrap();
        assert_eq!(prod.support_class(), Some(4));
        let full = a.to_full_grid().mul(&b.to_full_grid()).unwrap();
        assert_eq!(prod, full);
        assert_eq!(prod.coeff(16), 5.into());
    }

    #[test]
    fn support_class_bookkeeping() {
        let a = QExpansion::with_class(12, 30, 3, vec![1, 1, 1]).unwrap();
        let b = QExpansion::with_class(12, 30, 5, vec![1, 1, 1]).unwrap();
        assert_eq!(a.add(&a).unwrap().support_class(), Some(3));
        assert_eq!(a.add(&b).unwrap().support_class(), None);
        assert_eq!(a.mul(&a.to_full_grid()).unwrap().support_class(), None);
        assert!(QExpansion::with_class(12, 30, 3, vec![1, 1]).is_err());
        assert!(QExpansion::with_class(12, 30, 12, vec![]).is_err());
        assert_eq!(a.to_full_grid().detect_class(), Some(3));
        assert!(b.to_full_grid().restrict_to_class(3).is_err());
        assert_eq!(a.to_full_grid().restrict_to_class(3).unwrap(), a);
    }

    #[test]
    fn promotes_to_big_integers() {
        let big = 1i64 << 40;
        let a = QExpansion::with_class(4, 20, 0, vec![big; 5]).unwrap();
        let sq = a.mul(&a).unwrap();
        let sq4 = sq.mul(&sq).unwrap();
        assert!(matches!(sq4.stored(), Stored::Big(_)));
        let expect = BigInt::from(big).pow(4);
        assert_eq!(sq4.coeff(0), expect);
        // the number of ordered compositions of 4 into four non-negative parts is 35
        assert_eq!(sq4.coeff(16), expect * 35);
        // and the big path agrees with an all-BigInt recomputation
        let a_big = QExpansion::from_coeffs(4, a.to_dense());
        let r = a_big.mul(&a_big).unwrap();
        assert_eq!(r.mul(&r).unwrap(), sq4);
    }

    #[test]
    fn truncate_and_class_len() {
        assert_eq!(class_len(49, 12, 0), 5);
        assert_eq!(class_len(49, 12, 1), 4);
        assert_eq!(class_len(5, 12, 7), 0);
        let a = QExpansion::with_class(12, 49, 1, vec![1, 2, 3, 4]).unwrap();
        let t = a.truncate(26).unwrap();
        assert_eq!(t.len(), 26);
        assert_eq!(t.terms(), vec![(1, 1.into()), (13, 2.into()), (25, 3.into())]);
        assert!(a.truncate(50).is_err());
    }

    fn sparse_expansion(len: usize) -> impl Strategy<Value = QExpansion> {
        proptest::collection::vec((0..len, -30i64..30), 0..8).prop_map(move |terms| {
            let mut c = vec![0i64; len];
            for (n, v) in terms {
                c[n] = v;
            }
            QExpansion::from_i64(12, c)
        })
    }

    fn class_expansion(len: usize) -> impl Strategy<Value = QExpansion> {
        (0u64..12).prop_flat_map(move |b| {
            proptest::collection::vec(-1000i64..1000, class_len(len, 12, b))
                .prop_map(move |sub| QExpansion::with_class(12, len, b, sub).unwrap())
        })
    }

    proptest! {
        #[test]
        fn ring_laws(a in sparse_expansion(40), b in sparse_expansion(40), c in sparse_expansion(40)) {
            let ab = a.mul(&b).unwrap();
            prop_assert_eq!(&ab, &b.mul(&a).unwrap());
            prop_assert_eq!(ab.mul(&c).unwrap(), a.mul(&b.mul(&c).unwrap()).unwrap());
            let lhs = a.mul(&b.add(&c).unwrap()).unwrap();
            let rhs = ab.add(&a.mul(&c).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn class_products_stay_in_class(a in class_expansion(60), b in class_expansion(60)) {
            let prod = a.mul(&b).unwrap();
            let expected = (a.support_class().unwrap() + b.support_class().unwrap()) % 12;
            prop_assert_eq!(prod.support_class(), Some(expected));
            for (n, _) in prod.to_full_grid().terms() {
                prop_assert_eq!(n as u64 % 12, expected);
            }
            prop_assert_eq!(prod, a.to_full_grid().mul(&b.to_full_grid()).unwrap());
        }

        #[test]
        fn truncation_coherence(a in class_expansion(90), b in class_expansion(90), short in 1usize..90) {
            let at_long = a.mul(&b).unwrap().truncate(short).unwrap();
            let direct = a.truncate(short).unwrap().mul(&b.truncate(short).unwrap()).unwrap();
            prop_assert_eq!(at_long, direct);
        }
    }
}
