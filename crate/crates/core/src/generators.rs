//! The forms θ, φ, M, N, P on Γ(4) and the integral generators of V.
//!
//! On the grid q^(n/4p), the base form f(pz) = p·(f|(p 0; 0 1)) puts its
//! q^(m/4) coefficient at n = p²·m, and the twist f_(b) keeps the terms of
//! f(z/p) with n ≡ b (mod p). Each generator is therefore supported on one
//! residue class mod 4p; f(pz) shares its class with f_(0).

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::linalg::{rank_exact, CertPolicy, IntMatrix, RankCertificate};
use crate::primes::ensure_odd_prime;
use crate::series::{class_len, QExpansion};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Form {
    M,
    N,
    P,
}

impl Form {
    pub const ALL: [Form; 3] = [Form::M, Form::N, Form::P];

    /// Residue mod 4 carrying every nonzero q^(m/4) coefficient.
    pub fn quarter_class(self) -> u64 {
        match self {
            Form::M => 0,
            Form::N => 1,
            Form::P => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Kind {
    /// f(pz)
    Base,
    /// f_(b), the residue-class selection of f(z/p)
    Twist(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct GeneratorLabel {
    pub form: Form,
    pub kind: Kind,
}

impl GeneratorLabel {
    pub fn base(form: Form) -> Self {
        GeneratorLabel { form, kind: Kind::Base }
    }

    pub fn twist(form: Form, b: u64) -> Self {
        GeneratorLabel {
            form,
            kind: Kind::Twist(b),
        }
    }

    /// All 3(p+1) labels in pivot order: M, N, P, then for each b ascending
    /// the twists of M, N, P.
    pub fn all(p: u64) -> Vec<GeneratorLabel> {
        let mut out: Vec<_> = Form::ALL.iter().map(|&f| Self::base(f)).collect();
        for b in 0..p {
            out.extend(Form::ALL.iter().map(|&f| Self::twist(f, b)));
        }
        out
    }

    /// Support class mod 4p.
    pub fn class_of(&self, p: u64) -> u64 {
        let r = self.form.quarter_class();
        match self.kind {
            Kind::Base => crt_mod_4p(r, 0, p),
            Kind::Twist(b) => crt_mod_4p(r, b % p, p),
        }
    }
}

impl fmt::Display for GeneratorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            Kind::Base => write!(f, "{:?}(pz)", self.form),
            Kind::Twist(b) => write!(f, "{:?}_({b})", self.form),
        }
    }
}

/// The n in [0, 4p) with n ≡ r (mod 4) and n ≡ b (mod p).
fn crt_mod_4p(r: u64, b: u64, p: u64) -> u64 {
    (0..4 * p)
        .find(|n| n % 4 == r && n % p == b)
        .expect("4 and p are coprime")
}

/// θ in the variable q^(1/4): 1 at m = 0 and 2 at m = 4j², j ≥ 1.
pub fn theta_quarter(count: usize) -> Vec<i64> {
    let mut c = vec![0i64; count];
    if count > 0 {
        c[0] = 1;
    }
    for j in 1.. {
        let m = 4 * j * j;
        if m >= count {
            break;
        }
        c[m] = 2;
    }
    c
}

/// φ in the variable q^(1/4): 2 at m = j² for odd j ≥ 1.
pub fn phi_quarter(count: usize) -> Vec<i64> {
    let mut c = vec![0i64; count];
    for j in (1..).step_by(2) {
        let m = j * j;
        if m >= count {
            break;
        }
        c[m] = 2;
    }
    c
}

fn sparse_product(a: &[i64], b: &[i64], scale: i64) -> Vec<i64> {
    let count = a.len();
    let nz = |v: &[i64]| -> Vec<(usize, i64)> {
        v.iter()
            .enumerate()
            .filter(|(_, x)| **x != 0)
            .map(|(i, x)| (i, *x))
            .collect()
    };
    let (na, nb) = (nz(a), nz(b));
    let mut out = vec![0i64; count];
    for &(i, x) in &na {
        for &(j, y) in &nb {
            if i + j >= count {
                break;
            }
            out[i + j] += scale * x * y;
        }
    }
    out
}

/// Coefficients c_0, …, c_{count−1} of M = θ², N = 2θφ or P = φ² in q^(1/4).
pub fn quarter_coefficients(form: Form, count: usize) -> Result<Vec<i64>> {
    if count == 0 {
        return Err(Error::InvalidArgument("coefficient count must be positive".into()));
    }
    let (theta, phi) = (theta_quarter(count), phi_quarter(count));
    Ok(match form {
        Form::M => sparse_product(&theta, &theta, 1),
        Form::N => sparse_product(&theta, &phi, 2),
        Form::P => sparse_product(&phi, &phi, 1),
    })
}

/// θ^(2k−j)·φ^j for j = 0, …, 2k: the weight-k monomials on Γ(4), as
/// expansions in q^(1/4) with `count` coefficients.
pub fn theta_phi_monomials(k: u32, count: usize) -> Result<Vec<QExpansion>> {
    if count == 0 {
        return Err(Error::InvalidArgument("coefficient count must be positive".into()));
    }
    let theta = QExpansion::from_i64(4, theta_quarter(count));
    let phi = QExpansion::from_i64(4, phi_quarter(count));
    let one = QExpansion::from_i64(4, {
        let mut c = vec![0; count];
        c[0] = 1;
        c
    });
    let power = |f: &QExpansion, e: u32| -> Result<QExpansion> { (0..e).try_fold(one.clone(), |acc, _| acc.mul(f)) };
    (0..=2 * k)
        .map(|j| power(&theta, 2 * k - j)?.mul(&power(&phi, j)?))
        .collect()
}

/// Rank of the 2k+1 weight-k monomials in θ and φ.
pub fn theta_phi_rank(k: u32, policy: &CertPolicy) -> Result<usize> {
    let count = 8 * (k as usize + 1);
    let rows: Vec<Vec<_>> = theta_phi_monomials(k, count)?
        .iter()
        .map(QExpansion::to_dense)
        .collect();
    Ok(rank_exact(&IntMatrix::from_rows(&rows)?, policy)?.rank)
}

/// Truncation length L = 2kp(p²−1) + 1: a weight-k form on Γ(4p) vanishing
/// to this order at ∞ in q^(1/4p) is zero.
pub fn truncation_bound(p: u64, k: u64) -> Result<usize> {
    ensure_odd_prime(p)?;
    if k < 1 {
        return Err(Error::WeightTooSmall { got: k, min: 1 });
    }
    Ok((2 * k * p * (p * p - 1) + 1) as usize)
}

pub fn build_generator(label: GeneratorLabel, p: u64, len: usize) -> Result<QExpansion> {
    ensure_odd_prime(p)?;
    if let Kind::Twist(b) = label.kind {
        if b >= p {
            return Err(Error::InvalidArgument(format!("twist index {b} not reduced mod {p}")));
        }
    }
    let denom = 4 * p;
    let class = label.class_of(p);
    let mut sub = vec![0i64; class_len(len, denom, class)];
    let (stride, count) = match label.kind {
        Kind::Base => ((p * p) as usize, len.div_ceil((p * p) as usize)),
        Kind::Twist(_) => (1, len),
    };
    let c = quarter_coefficients(label.form, count.max(1))?;
    for (m, &cm) in c.iter().enumerate() {
        if cm == 0 {
            continue;
        }
        let n = m * stride;
        if let Kind::Twist(b) = label.kind {
            if m as u64 % p != b {
                continue;
            }
        }
        debug_assert_eq!(n as u64 % denom, class);
        sub[(n - class as usize) / denom as usize] = cm;
    }
    QExpansion::with_class(denom, len, class, sub)
}

/// The 3(p+1) generators of V, optionally reduced to a basis.
#[derive(Clone, Debug)]
pub struct GeneratorSet {
    pub p: u64,
    pub len: usize,
    pub entries: Vec<(GeneratorLabel, QExpansion)>,
    /// Indices into `entries` of the selected basis f_1, …, f_d.
    pub basis_indices: Vec<usize>,
    /// Per-class rank certificates of the selection; empty when loaded from
    /// the cache.
    pub certificates: BTreeMap<u64, RankCertificate>,
}

impl GeneratorSet {
    pub fn dim(&self) -> usize {
        self.basis_indices.len()
    }

    pub fn basis(&self) -> impl Iterator<Item = &(GeneratorLabel, QExpansion)> {
        self.basis_indices.iter().map(|&i| &self.entries[i])
    }

    pub fn basis_expansion(&self, i: usize) -> &QExpansion {
        &self.entries[self.basis_indices[i]].1
    }

    pub fn basis_class(&self, i: usize) -> u64 {
        self.basis_expansion(i)
            .support_class()
            .expect("generators are class-supported")
    }

    pub fn basis_labels(&self) -> Vec<GeneratorLabel> {
        self.basis().map(|(l, _)| *l).collect()
    }

    pub fn modulus(&self) -> u64 {
        4 * self.p
    }
}

pub fn spanning_set(p: u64, len: usize) -> Result<GeneratorSet> {
    ensure_odd_prime(p)?;
    if len == 0 {
        return Err(Error::InvalidArgument("truncation length must be positive".into()));
    }
    let entries = GeneratorLabel::all(p)
        .into_par_iter()
        .map(|label| build_generator(label, p, len).map(|e| (label, e)))
        .collect::<Result<Vec<_>>>()?;
    Ok(GeneratorSet {
        p,
        len,
        entries,
        basis_indices: Vec::new(),
        certificates: BTreeMap::new(),
    })
}

/// Selects a maximal independent subset of the generators, earliest labels
/// first. Generators in distinct classes are independent of each other, so
/// the selection runs class by class.
pub fn reduce_to_basis(gs: GeneratorSet, policy: &CertPolicy) -> Result<GeneratorSet> {
    let needed = truncation_bound(gs.p, 1)?;
    if gs.len < needed {
        return Err(Error::TruncationTooSmall { got: gs.len, needed });
    }
    select_basis(gs, policy)
}

/// The selection of [`reduce_to_basis`] without the truncation check; below
/// the weight-1 bound the result may overcount.
pub fn select_basis(mut gs: GeneratorSet, policy: &CertPolicy) -> Result<GeneratorSet> {
    let mut by_class: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, (_, e)) in gs.entries.iter().enumerate() {
        let class = e.support_class().ok_or(Error::MissingSupportClass)?;
        by_class.entry(class).or_default().push(i);
    }
    let mut basis = Vec::new();
    let mut certificates = BTreeMap::new();
    for (&class, members) in &by_class {
        let rows: Vec<_> = members.iter().map(|&i| gs.entries[i].1.stored()).collect();
        let block = IntMatrix::from_stored_rows(&rows)?.transpose();
        let cert = rank_exact(&block, policy)?;
        basis.extend(cert.pivot_columns.iter().map(|&c| members[c]));
        certificates.insert(class, cert);
    }
    basis.sort_unstable();
    gs.basis_indices = basis;
    gs.certificates = certificates;
    Ok(gs)
}

/// Spanning set at the weight-1 bound, reduced to a basis.
pub fn basis_of_v(p: u64, len: usize, policy: &CertPolicy) -> Result<GeneratorSet> {
    reduce_to_basis(spanning_set(p, len)?, policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    /// r₂(n): representations of n as an ordered sum of two squares.
    fn r2(n: i64) -> i64 {
        let s = (n as f64).sqrt() as i64 + 1;
        let mut count = 0;
        for a in -s..=s {
            for b in -s..=s {
                count += (a * a + b * b == n) as i64;
            }
        }
        count
    }

    #[test]
    fn quarter_coefficient_examples() {
        let n = quarter_coefficients(Form::N, 2).unwrap();
        assert_eq!(n, vec![0, 4]);
        let m = quarter_coefficients(Form::M, 13).unwrap();
        assert_eq!(m, vec![1, 0, 0, 0, 4, 0, 0, 0, 4, 0, 0, 0, 0]);
        let p = quarter_coefficients(Form::P, 11).unwrap();
        assert_eq!(p, vec![0, 0, 4, 0, 0, 0, 0, 0, 0, 0, 8]);
        assert!(quarter_coefficients(Form::M, 0).is_err());
    }

    #[test]
    fn m_coefficients_are_sums_of_two_squares() {
        let m = quarter_coefficients(Form::M, 4 * 300).unwrap();
        for n in 0..300 {
            assert_eq!(m[4 * n], r2(n as i64), "n = {n}");
            for off in 1..4 {
                assert_eq!(m[4 * n + off], 0);
            }
        }
    }

    #[test]
    fn residue_discipline_mod_4() {
        for form in Form::ALL {
            let c = quarter_coefficients(form, 500).unwrap();
            for (m, &x) in c.iter().enumerate() {
                if x != 0 {
                    assert_eq!(m as u64 % 4, form.quarter_class());
                }
            }
        }
    }

    #[test]
    fn truncation_bounds() {
        assert_eq!(truncation_bound(3, 1).unwrap(), 49);
        assert_eq!(truncation_bound(3, 4).unwrap(), 193);
        assert_eq!(truncation_bound(7, 3).unwrap(), 2017);
        assert!(truncation_bound(4, 1).is_err());
        assert!(truncation_bound(2, 1).is_err());
        assert!(truncation_bound(3, 0).is_err());
    }

    #[test]
    fn generator_classes_for_p3() {
        let base_n = build_generator(GeneratorLabel::base(Form::N), 3, 49).unwrap();
        assert_eq!(base_n.support_class(), Some(9));
        assert_eq!(base_n.terms()[0], (9, BigInt::from(4)));
        let classes: std::collections::BTreeSet<u64> = GeneratorLabel::all(3).iter().map(|l| l.class_of(3)).collect();
        assert_eq!(
            classes.into_iter().collect::<Vec<_>>(),
            vec![0, 1, 2, 4, 5, 6, 8, 9, 10]
        );
        assert_eq!(GeneratorLabel::twist(Form::M, 0).class_of(3), 0);
        assert_eq!(GeneratorLabel::twist(Form::P, 1).class_of(3), 10);
    }

    #[test]
    fn twists_partition_the_rescaled_form() {
        // Σ_b f_(b) = f(z/p)
        let p = 5;
        let len = truncation_bound(p, 1).unwrap();
        for form in Form::ALL {
            let mut sum = QExpansion::zero(4 * p, len);
            for b in 0..p {
                let t = build_generator(GeneratorLabel::twist(form, b), p, len).unwrap();
                sum = sum.add(&t).unwrap();
            }
            let expect = quarter_coefficients(form, len).unwrap();
            assert_eq!(sum, QExpansion::from_i64(4 * p, expect));
        }
    }

    #[test]
    fn dilated_base_equals_untwisted_selection_for_inert_primes() {
        // for p ≡ 3 (mod 4), f_(0) = f(pz); for p ≡ 1 (mod 4) they differ
        for p in [3u64, 5, 7, 11, 13] {
            let len = truncation_bound(p, 1).unwrap();
            for form in Form::ALL {
                let base = build_generator(GeneratorLabel::base(form), p, len).unwrap();
                let twist = build_generator(GeneratorLabel::twist(form, 0), p, len).unwrap();
                assert_eq!(base == twist, p % 4 == 3, "p = {p}, {form:?}");
            }
        }
    }

    #[test]
    fn spanning_set_sizes() {
        for (p, n) in [(3, 12), (5, 18), (13, 42)] {
            let len = truncation_bound(p, 1).unwrap();
            let gs = spanning_set(p, len).unwrap();
            assert_eq!(gs.entries.len(), n);
            assert!(gs.entries.iter().all(|(_, e)| e.support_class().is_some()));
        }
    }

    #[test]
    fn basis_dimensions() {
        let policy = CertPolicy::default_modular(11);
        for (p, d) in [(3, 9), (5, 18), (13, 42)] {
            let len = truncation_bound(p, 1).unwrap();
            let gs = basis_of_v(p, len, &policy).unwrap();
            assert_eq!(gs.dim(), d, "p = {p}");
            assert_eq!(&gs.basis_indices[..3], &[0, 1, 2]);
        }
    }

    #[test]
    fn basis_needs_weight_one_truncation() {
        let gs = spanning_set(3, 48).unwrap();
        assert!(matches!(
            reduce_to_basis(gs, &CertPolicy::FractionFree),
            Err(Error::TruncationTooSmall { got: 48, needed: 49 })
        ));
    }

    #[test]
    fn gamma4_monomials_are_independent() {
        for k in 0..=5 {
            assert_eq!(
                theta_phi_rank(k, &CertPolicy::FractionFree).unwrap(),
                2 * k as usize + 1
            );
        }
        let m = theta_phi_monomials(1, 13).unwrap();
        let expect_m = quarter_coefficients(Form::M, 13).unwrap();
        assert_eq!(m[0], QExpansion::from_i64(4, expect_m));
        let expect_n: Vec<i64> = quarter_coefficients(Form::N, 13)
            .unwrap()
            .iter()
            .map(|x| x / 2)
            .collect();
        assert_eq!(m[1], QExpansion::from_i64(4, expect_n));
    }

    #[test]
    fn relation_n2_minus_4mp() {
        for p in [3u64, 5, 7] {
            let len = truncation_bound(p, 2).unwrap();
            let m = build_generator(GeneratorLabel::base(Form::M), p, len).unwrap();
            let n = build_generator(GeneratorLabel::base(Form::N), p, len).unwrap();
            let pp = build_generator(GeneratorLabel::base(Form::P), p, len).unwrap();
            let rel = n.mul(&n).unwrap().sub(&m.mul(&pp).unwrap().scale(&4.into())).unwrap();
            assert!(rel.is_zero());
        }
    }
}
