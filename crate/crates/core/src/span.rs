//! Dimensions of W_k, the span of degree-k monomials in a basis of V.
//!
//! W_1 = V, and W_{k+1} is spanned by the products f_i·m with f_i a basis
//! generator and m running over a monomial basis B_k of W_k. Each degree
//! therefore needs at most d·dim W_k candidate products, one series
//! multiplication each. Candidates are grouped by support class mod 4p and
//! every block is ranked on its own; the pivot candidates of all blocks form
//! B_{k+1}.
//!
//! Monomials are ordered by degree and then by their exponent vectors in
//! decreasing lexicographic order, so x_0² < x_0·x_1 < x_1². Candidate
//! lists, pivot ties and basis lists all follow this order.

use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::cache::Cache;
use crate::formulas::conjecture_bound;
use crate::generators::{self, truncation_bound, GeneratorSet};
use crate::linalg::{
    kernel_exact, kernel_mod_prime, lift_kernel_vector, rank_exact, CertPolicy, IntMatrix, RankCertificate,
};
use crate::series::QExpansion;
use crate::{Error, Result};

/// Largest monomial count [`GradedSpans::exhaustive_check`] will enumerate.
pub const EXHAUSTIVE_LIMIT: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial {
    exponents: Vec<u32>,
}

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Result<Self> {
        if exponents.iter().all(|&e| e == 0) {
            return Err(Error::InvalidArgument("monomials have degree at least 1".into()));
        }
        Ok(Monomial { exponents })
    }

    pub fn variable(d: usize, i: usize) -> Self {
        let mut exponents = vec![0; d];
        exponents[i] = 1;
        Monomial { exponents }
    }

    pub fn times(&self, i: usize) -> Self {
        let mut exponents = self.exponents.clone();
        exponents[i] += 1;
        Monomial { exponents }
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    pub fn num_vars(&self) -> usize {
        self.exponents.len()
    }

    /// Variable indices with multiplicity, ascending.
    pub fn variables(&self) -> Vec<usize> {
        self.exponents
            .iter()
            .enumerate()
            .flat_map(|(i, &e)| std::iter::repeat_n(i, e as usize))
            .collect()
    }

    /// Support class mod 4p: the exponent-weighted sum of generator classes.
    pub fn class(&self, gens: &GeneratorSet) -> u64 {
        let n = gens.modulus();
        self.exponents
            .iter()
            .enumerate()
            .map(|(i, &e)| e as u64 * gens.basis_class(i))
            .sum::<u64>()
            % n
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.exponents.cmp(&self.exponents))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &e) in self.exponents.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            match e {
                1 => write!(f, "x{i}")?,
                _ => write!(f, "x{i}^{e}")?,
            }
        }
        Ok(())
    }
}

impl Serialize for Monomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// How the truncation length is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Truncation {
    /// The valence bound for the largest weight computed.
    Sturm,
    /// A fixed length. Below the valence bound it is rejected unless
    /// `allow_unsound` is set, in which case results are marked unsound.
    Fixed { len: usize, allow_unsound: bool },
}

impl Truncation {
    /// Resolves to (length, unsound).
    pub fn resolve(&self, p: u64, k_max: u32) -> Result<(usize, bool)> {
        let needed = truncation_bound(p, k_max as u64)?;
        match *self {
            Truncation::Sturm => Ok((needed, false)),
            Truncation::Fixed { len, .. } if len >= needed => Ok((len, false)),
            Truncation::Fixed {
                len,
                allow_unsound: true,
            } if len > 0 => Ok((len, true)),
            Truncation::Fixed { len, .. } => Err(Error::TruncationTooSmall { got: len, needed }),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpanBasis {
    pub degree: u32,
    pub basis_monomials: Vec<Monomial>,
    /// Rank of each candidate block, keyed by class mod 4p.
    pub per_block_dims: BTreeMap<u64, usize>,
    pub candidate_count: usize,
    /// Per-block certificates; empty when the basis came from the cache.
    pub certificates: BTreeMap<u64, RankCertificate>,
    pub from_cache: bool,
    pub elapsed: Duration,
}

impl SpanBasis {
    pub fn dim(&self) -> usize {
        self.basis_monomials.len()
    }
}

/// A block of candidates sharing one support class. Row i of `matrix` holds
/// the class sub-grid coefficients of `monomials[i]`.
#[derive(Clone, Debug)]
pub struct Block {
    pub class: u64,
    pub monomials: Vec<Monomial>,
    pub matrix: IntMatrix,
}

/// Groups evaluated candidates by support class; within a block, rows keep
/// the input order.
pub fn block_partition(candidates: &[(Monomial, QExpansion)]) -> Result<BTreeMap<u64, Block>> {
    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, (_, e)) in candidates.iter().enumerate() {
        let class = e.support_class().ok_or(Error::MissingSupportClass)?;
        groups.entry(class).or_default().push(i);
    }
    groups
        .into_iter()
        .map(|(class, members)| {
            let rows: Vec<_> = members.iter().map(|&i| candidates[i].1.stored()).collect();
            let block = Block {
                class,
                monomials: members.iter().map(|&i| candidates[i].0.clone()).collect(),
                matrix: IntMatrix::from_stored_rows(&rows)?,
            };
            Ok((class, block))
        })
        .collect()
}

#[derive(Clone, Debug)]
struct Candidate {
    monomial: Monomial,
    var: usize,
    parent: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "prime", rename_all = "snake_case")]
pub enum RelationStatus {
    /// Multiplies out to the zero expansion over ℤ.
    Exact,
    /// Known to vanish modulo the given prime only.
    ModPrime(u64),
}

/// A linear relation Σ c·m = 0 among degree-k candidate monomials.
#[derive(Clone, Debug, Serialize)]
pub struct Relation {
    pub degree: u32,
    pub class: u64,
    #[serde(serialize_with = "terms_as_strings")]
    pub terms: Vec<(Monomial, BigInt)>,
    pub status: RelationStatus,
}

fn terms_as_strings<S: serde::Serializer>(terms: &[(Monomial, BigInt)], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(terms.iter().map(|(m, c)| (m.to_string(), c.to_string())))
}

/// Bases of W_1, …, W_k together with the expansions of their members.
#[derive(Clone, Debug)]
pub struct GradedSpans {
    pub generators: GeneratorSet,
    pub cert: CertPolicy,
    pub unsound: bool,
    spans: Vec<SpanBasis>,
    expansions: Vec<Vec<QExpansion>>,
}

pub fn compute_spans(p: u64, k_max: u32, truncation: Truncation, cert: &CertPolicy) -> Result<GradedSpans> {
    compute_spans_cached(p, k_max, truncation, cert, None)
}

pub fn compute_spans_cached(
    p: u64,
    k_max: u32,
    truncation: Truncation,
    cert: &CertPolicy,
    cache: Option<&Cache>,
) -> Result<GradedSpans> {
    if k_max < 1 {
        return Err(Error::WeightTooSmall {
            got: k_max as u64,
            min: 1,
        });
    }
    let (len, unsound) = truncation.resolve(p, k_max)?;
    let start = Instant::now();
    let gens = match cache.map(|c| c.load_generators(p, len)).transpose()?.flatten() {
        Some(g) => g,
        None => {
            let raw = generators::spanning_set(p, len)?;
            let g = if unsound {
                generators::select_basis(raw, cert)?
            } else {
                generators::reduce_to_basis(raw, cert)?
            };
            if let Some(c) = cache {
                c.store_generators(&g)?;
            }
            g
        }
    };
    let mut spans = GradedSpans::from_generators(gens, cert.clone(), unsound, start.elapsed());
    while spans.max_degree() < k_max {
        spans.extend(cache)?;
    }
    Ok(spans)
}

impl GradedSpans {
    /// Degree-1 data from a reduced generator set.
    pub fn from_generators(generators: GeneratorSet, cert: CertPolicy, unsound: bool, elapsed: Duration) -> Self {
        let d = generators.dim();
        let mut per_block_dims = BTreeMap::new();
        for (label, _) in &generators.entries {
            per_block_dims.insert(label.class_of(generators.p), 0);
        }
        for i in 0..d {
            *per_block_dims.entry(generators.basis_class(i)).or_default() += 1;
        }
        let degree_one = SpanBasis {
            degree: 1,
            basis_monomials: (0..d).map(|i| Monomial::variable(d, i)).collect(),
            per_block_dims,
            candidate_count: generators.entries.len(),
            certificates: generators.certificates.clone(),
            from_cache: generators.certificates.is_empty(),
            elapsed,
        };
        let expansions = vec![(0..d).map(|i| generators.basis_expansion(i).clone()).collect()];
        GradedSpans {
            generators,
            cert,
            unsound,
            spans: vec![degree_one],
            expansions,
        }
    }

    pub fn p(&self) -> u64 {
        self.generators.p
    }

    pub fn truncation(&self) -> usize {
        self.generators.len
    }

    /// dim V.
    pub fn d(&self) -> usize {
        self.generators.dim()
    }

    pub fn max_degree(&self) -> u32 {
        self.spans.len() as u32
    }

    pub fn spans(&self) -> &[SpanBasis] {
        &self.spans
    }

    pub fn span(&self, k: u32) -> Option<&SpanBasis> {
        self.spans.get((k as usize).checked_sub(1)?)
    }

    pub fn dims(&self) -> Vec<usize> {
        self.spans.iter().map(SpanBasis::dim).collect()
    }

    pub fn basis_expansions(&self, k: u32) -> Option<&[QExpansion]> {
        self.expansions.get((k as usize).checked_sub(1)?).map(Vec::as_slice)
    }

    /// Expansion of an arbitrary monomial, multiplied out from the generators.
    pub fn evaluate(&self, m: &Monomial) -> Result<QExpansion> {
        let vars = m.variables();
        let mut acc = self.generators.basis_expansion(vars[0]).clone();
        for &i in &vars[1..] {
            acc = acc.mul(self.generators.basis_expansion(i))?;
        }
        Ok(acc)
    }

    fn candidates(&self, k: u32) -> Result<Vec<Candidate>> {
        if k < 2 {
            return Err(Error::InvalidArgument("candidates start in degree 2".into()));
        }
        let prev = self.span(k - 1).ok_or(Error::DegreeUnavailable(k - 1))?;
        let d = self.d();
        let mut seen: BTreeMap<Monomial, (usize, usize)> = BTreeMap::new();
        for (j, m) in prev.basis_monomials.iter().enumerate() {
            for i in 0..d {
                seen.entry(m.times(i)).or_insert((i, j));
            }
        }
        Ok(seen
            .into_iter()
            .map(|(monomial, (var, parent))| Candidate { monomial, var, parent })
            .collect())
    }

    fn candidate_blocks(&self, k: u32) -> Result<Vec<(u64, Vec<Candidate>)>> {
        let mut by_class: BTreeMap<u64, Vec<Candidate>> = BTreeMap::new();
        for c in self.candidates(k)? {
            by_class.entry(c.monomial.class(&self.generators)).or_default().push(c);
        }
        Ok(by_class.into_iter().collect())
    }

    fn evaluate_candidates(&self, k: u32, cands: &[Candidate]) -> Result<Vec<(Monomial, QExpansion)>> {
        let parents = &self.expansions[k as usize - 2];
        cands
            .par_iter()
            .map(|c| {
                let e = self.generators.basis_expansion(c.var).mul(&parents[c.parent])?;
                Ok((c.monomial.clone(), e))
            })
            .collect()
    }

    /// Computes B_{k+1} from B_k.
    pub fn extend(&mut self, cache: Option<&Cache>) -> Result<&SpanBasis> {
        let k = self.max_degree() + 1;
        let start = Instant::now();
        let (p, len) = (self.p(), self.truncation());
        if let Some(cached) = cache.map(|c| c.load_span(p, len, k, self.d())).transpose()?.flatten() {
            let (monomials, per_block_dims, candidate_count) = cached;
            let expansions = monomials
                .par_iter()
                .map(|m| self.evaluate(m))
                .collect::<Result<Vec<_>>>()?;
            let basis = SpanBasis {
                degree: k,
                basis_monomials: monomials,
                per_block_dims,
                candidate_count,
                certificates: BTreeMap::new(),
                from_cache: true,
                elapsed: start.elapsed(),
            };
            return self.push(basis, expansions);
        }

        let blocks = self.candidate_blocks(k)?;
        let candidate_count = blocks.iter().map(|(_, c)| c.len()).sum();
        let ranked = blocks
            .par_iter()
            .map(|(class, cands)| {
                let evaluated = self.evaluate_candidates(k, cands)?;
                let block = block_partition(&evaluated)?
                    .remove(class)
                    .ok_or(Error::MissingSupportClass)?;
                let cert = rank_exact(&block.matrix.transpose(), &self.cert)?;
                let keep: Vec<(Monomial, QExpansion)> =
                    cert.pivot_columns.iter().map(|&i| evaluated[i].clone()).collect();
                Ok((*class, cert, keep))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut per_block_dims = BTreeMap::new();
        let mut certificates = BTreeMap::new();
        let mut members = Vec::new();
        for (class, cert, keep) in ranked {
            per_block_dims.insert(class, cert.rank);
            certificates.insert(class, cert);
            members.extend(keep);
        }
        members.sort_by(|a, b| a.0.cmp(&b.0));
        let (monomials, expansions): (Vec<_>, Vec<_>) = members.into_iter().unzip();
        let basis = SpanBasis {
            degree: k,
            basis_monomials: monomials,
            per_block_dims,
            candidate_count,
            certificates,
            from_cache: false,
            elapsed: start.elapsed(),
        };
        if let Some(c) = cache {
            c.store_span(p, len, &basis)?;
        }
        self.push(basis, expansions)
    }

    fn push(&mut self, basis: SpanBasis, expansions: Vec<QExpansion>) -> Result<&SpanBasis> {
        let k = basis.degree;
        if k >= 3 {
            let bound = conjecture_bound(self.p(), k as u64)?;
            if basis.dim() as u64 > bound {
                return Err(Error::BoundViolation {
                    p: self.p(),
                    k,
                    dim: basis.dim(),
                    bound,
                });
            }
        }
        self.spans.push(basis);
        self.expansions.push(expansions);
        Ok(self.spans.last().expect("just pushed"))
    }

    /// Ranks the span of every degree-k monomial, enumerated directly, and
    /// compares it with the recursion's dim W_k.
    pub fn exhaustive_check(&self, k: u32) -> Result<bool> {
        let target = self.span(k).ok_or(Error::DegreeUnavailable(k))?.dim();
        let d = self.d();
        let count = binomial(d + k as usize - 1, k as usize);
        if count > EXHAUSTIVE_LIMIT {
            return Err(Error::InvalidArgument(format!(
                "{count} degree-{k} monomials exceed the enumeration limit {EXHAUSTIVE_LIMIT}"
            )));
        }
        // (monomial, largest variable, expansion); extending only by variables
        // at or above the largest one enumerates each monomial once
        let mut level: Vec<(Monomial, usize, QExpansion)> = (0..d)
            .map(|i| (Monomial::variable(d, i), i, self.generators.basis_expansion(i).clone()))
            .collect();
        for _ in 1..k {
            level = level
                .par_iter()
                .flat_map_iter(|(m, last, e)| {
                    (*last..d).map(move |i| {
                        e.mul(self.generators.basis_expansion(i))
                            .map(|prod| (m.times(i), i, prod))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
        }
        debug_assert_eq!(level.len(), count);
        let evaluated: Vec<(Monomial, QExpansion)> = level.into_iter().map(|(m, _, e)| (m, e)).collect();
        let blocks = block_partition(&evaluated)?;
        let total = blocks
            .par_iter()
            .map(|(_, b)| rank_exact(&b.matrix, &self.cert).map(|c| c.rank))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .sum::<usize>();
        Ok(total == target)
    }

    /// Kernel of the evaluation map on the degree-k candidates, block by
    /// block. With `verify`, every relation is multiplied out over ℤ and
    /// marked exact when it vanishes identically up to the truncation.
    pub fn extract_relations(&self, k: u32, verify: bool) -> Result<Vec<Relation>> {
        if k > self.max_degree() {
            return Err(Error::DegreeUnavailable(k));
        }
        let mut out = Vec::new();
        for (class, cands) in self.candidate_blocks(k)? {
            out.extend(self.block_relations(k, class, &cands, verify)?.1);
        }
        Ok(out)
    }

    /// Relations of one candidate block, with the block's monomials.
    fn block_relations(
        &self,
        k: u32,
        class: u64,
        cands: &[Candidate],
        verify: bool,
    ) -> Result<(Vec<Monomial>, Vec<Relation>)> {
        let evaluated = self.evaluate_candidates(k, cands)?;
        let block = block_partition(&evaluated)?
            .remove(&class)
            .ok_or(Error::MissingSupportClass)?;
        let columns = block.matrix.transpose();
        let vectors: Vec<(Vec<BigInt>, RelationStatus)> = match self.cert.kernel_prime() {
            None => kernel_exact(&columns)
                .into_iter()
                .map(|v| (v, RelationStatus::Exact))
                .collect(),
            Some(q) => kernel_mod_prime(&columns, q)?
                .into_iter()
                .map(|v| {
                    let lifted = lift_kernel_vector(&v, q).unwrap_or_else(|| symmetric_lift(&v, q));
                    (lifted, RelationStatus::ModPrime(q))
                })
                .collect(),
        };
        let mut out = Vec::with_capacity(vectors.len());
        for (coeffs, mut status) in vectors {
            if verify {
                let vanishes = combination_vanishes(&evaluated, &coeffs)?;
                status = match (status, vanishes) {
                    (_, true) => RelationStatus::Exact,
                    (RelationStatus::Exact, false) => {
                        return Err(Error::InvalidArgument(format!(
                            "exact kernel vector in class {class} does not vanish"
                        )))
                    }
                    (s, false) => s,
                };
            }
            let terms = coeffs
                .into_iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(i, c)| (block.monomials[i].clone(), c))
                .collect();
            out.push(Relation {
                degree: k,
                class,
                terms,
                status,
            });
        }
        Ok((block.monomials, out))
    }

    /// Whether Σ c·m is a combination of the degree-k relations from
    /// [`Self::extract_relations`]. False when some monomial is not a
    /// candidate or the terms span several classes.
    pub fn in_relation_span(&self, k: u32, terms: &[(Monomial, BigInt)]) -> Result<bool> {
        if k > self.max_degree() {
            return Err(Error::DegreeUnavailable(k));
        }
        let Some((first, _)) = terms.first() else {
            return Ok(true);
        };
        let class = first.class(&self.generators);
        let Some((_, cands)) = self.candidate_blocks(k)?.into_iter().find(|(c, _)| *c == class) else {
            return Ok(false);
        };
        let (monomials, relations) = self.block_relations(k, class, &cands, false)?;
        let position = |m: &Monomial| monomials.iter().position(|x| x == m);
        let to_row = |ts: &[(Monomial, BigInt)]| -> Option<Vec<BigInt>> {
            let mut row = vec![BigInt::zero(); monomials.len()];
            for (m, c) in ts {
                row[position(m)?] += c;
            }
            Some(row)
        };
        let Some(target) = to_row(terms) else {
            return Ok(false);
        };
        let mut rows: Vec<Vec<BigInt>> = relations
            .iter()
            .map(|r| to_row(&r.terms).expect("relation terms are block candidates"))
            .collect();
        let before = rank_exact(&IntMatrix::from_rows(&rows)?, &self.cert)?.rank;
        rows.push(target);
        let after = rank_exact(&IntMatrix::from_rows(&rows)?, &self.cert)?.rank;
        Ok(before == after)
    }

    /// Rank of all degree-k candidates (the spanning generators for k = 1)
    /// as one matrix over the full grid, without the class partition.
    pub fn unpartitioned_rank(&self, k: u32) -> Result<usize> {
        if k > self.max_degree() {
            return Err(Error::DegreeUnavailable(k));
        }
        let expansions: Vec<QExpansion> = if k == 1 {
            self.generators.entries.iter().map(|(_, e)| e.clone()).collect()
        } else {
            let cands = self.candidates(k)?;
            self.evaluate_candidates(k, &cands)?
                .into_iter()
                .map(|(_, e)| e)
                .collect()
        };
        let rows: Vec<Vec<BigInt>> = expansions.par_iter().map(QExpansion::to_dense).collect();
        Ok(rank_exact(&IntMatrix::from_rows(&rows)?, &self.cert)?.rank)
    }

    /// Number of degree-k candidates, without evaluating them.
    pub fn candidate_count(&self, k: u32) -> Result<usize> {
        if k == 1 {
            return Ok(self.generators.entries.len());
        }
        Ok(self.candidates(k)?.len())
    }

    /// Whether Σ c·m vanishes identically up to the truncation.
    pub fn evaluates_to_zero(&self, terms: &[(Monomial, BigInt)]) -> Result<bool> {
        let mut acc = QExpansion::zero(self.generators.modulus(), self.truncation());
        for (m, c) in terms {
            acc = acc.add(&self.evaluate(m)?.scale(c))?;
        }
        Ok(acc.is_zero())
    }
}

fn combination_vanishes(evaluated: &[(Monomial, QExpansion)], coeffs: &[BigInt]) -> Result<bool> {
    let mut acc: Option<QExpansion> = None;
    for ((_, e), c) in evaluated.iter().zip(coeffs) {
        if c.is_zero() {
            continue;
        }
        let term = e.scale(c);
        acc = Some(match acc {
            None => term,
            Some(a) => a.add(&term)?,
        });
    }
    Ok(acc.is_none_or(|a| a.is_zero()))
}

fn symmetric_lift(v: &[u64], q: u64) -> Vec<BigInt> {
    v.iter()
        .map(|&x| {
            if x > q / 2 {
                BigInt::from(x) - q
            } else {
                BigInt::from(x)
            }
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Computes W_1..W_k at the valence bound for weight k and checks the
/// degree-k dimension against full monomial enumeration.
pub fn exhaustive_span_check(p: u64, k: u32, cert: &CertPolicy) -> Result<bool> {
    compute_spans(p, k, Truncation::Sturm, cert)?.exhaustive_check(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn policy() -> CertPolicy {
        CertPolicy::default_modular(5)
    }

    #[test]
    fn monomial_order() {
        let a = Monomial::new(vec![2, 0]).unwrap();
        let b = Monomial::new(vec![1, 1]).unwrap();
        let c = Monomial::new(vec![0, 2]).unwrap();
        let x0 = Monomial::variable(2, 0);
        assert!(x0 < a && a < b && b < c);
        assert_eq!(b.to_string(), "x0*x1");
        assert_eq!(Monomial::new(vec![0, 3, 1]).unwrap().to_string(), "x1^3*x2");
        assert_eq!(c.variables(), vec![1, 1]);
        assert!(Monomial::new(vec![0, 0]).is_err());
    }

    #[test]
    fn truncation_policy() {
        assert_eq!(Truncation::Sturm.resolve(3, 4).unwrap(), (193, false));
        let short = Truncation::Fixed {
            len: 100,
            allow_unsound: false,
        };
        assert!(matches!(
            short.resolve(3, 4),
            Err(Error::TruncationTooSmall { got: 100, needed: 193 })
        ));
        let forced = Truncation::Fixed {
            len: 100,
            allow_unsound: true,
        };
        assert_eq!(forced.resolve(3, 4).unwrap(), (100, true));
        let long = Truncation::Fixed {
            len: 400,
            allow_unsound: false,
        };
        assert_eq!(long.resolve(3, 4).unwrap(), (400, false));
    }

    #[test]
    fn p3_dims() {
        let s = compute_spans(3, 4, Truncation::Sturm, &policy()).unwrap();
        assert_eq!(s.dims(), vec![9, 33, 60, 84]);
        for span in s.spans() {
            assert_eq!(span.dim(), span.per_block_dims.values().sum::<usize>());
            let classes: Vec<u64> = span.basis_monomials.iter().map(|m| m.class(&s.generators)).collect();
            for (i, e) in s.basis_expansions(span.degree).unwrap().iter().enumerate() {
                assert_eq!(e.support_class(), Some(classes[i]));
            }
        }
    }

    #[test]
    fn degree_one_blocks_for_p3() {
        let s = compute_spans(3, 1, Truncation::Sturm, &policy()).unwrap();
        let d = s.generators.entries.len();
        let evaluated: Vec<_> = s
            .generators
            .entries
            .iter()
            .enumerate()
            .map(|(i, (_, e))| (Monomial::variable(d, i), e.clone()))
            .collect();
        let blocks = block_partition(&evaluated).unwrap();
        assert_eq!(
            blocks.keys().copied().collect::<Vec<_>>(),
            vec![0, 1, 2, 4, 5, 6, 8, 9, 10]
        );
        let total: usize = blocks
            .values()
            .map(|b| rank_exact(&b.matrix, &policy()).unwrap().rank)
            .sum();
        assert_eq!(total, 9);
        let w1 = s.span(1).unwrap();
        assert_eq!(
            w1.per_block_dims.keys().copied().collect::<Vec<_>>(),
            vec![0, 1, 2, 4, 5, 6, 8, 9, 10]
        );
        assert_eq!(w1.per_block_dims.values().sum::<usize>(), 9);
    }

    #[test]
    fn single_candidate_block() {
        let e = QExpansion::with_class(12, 49, 5, vec![0, 3, 0, 1]).unwrap();
        let blocks = block_partition(&[(Monomial::variable(1, 0), e)]).unwrap();
        assert_eq!(blocks.len(), 1);
        let rank = rank_exact(&blocks[&5].matrix, &policy()).unwrap().rank;
        assert_eq!(rank, 1);
        let zero = QExpansion::with_class(12, 49, 5, vec![0; 4]).unwrap();
        let blocks = block_partition(&[(Monomial::variable(1, 0), zero)]).unwrap();
        assert_eq!(rank_exact(&blocks[&5].matrix, &policy()).unwrap().rank, 0);
        let untagged = QExpansion::zero(12, 49);
        assert!(matches!(
            block_partition(&[(Monomial::variable(1, 0), untagged)]),
            Err(Error::MissingSupportClass)
        ));
    }

    #[test]
    fn p3_degree_two_blocks_and_relations() {
        let s = compute_spans(3, 2, Truncation::Sturm, &policy()).unwrap();
        let w2 = s.span(2).unwrap();
        assert_eq!(w2.candidate_count, 45);
        assert!(w2.per_block_dims.len() <= 12);
        assert_eq!(w2.per_block_dims.values().sum::<usize>(), 33);
        let rels = s.extract_relations(2, true).unwrap();
        assert_eq!(rels.len(), 12);
        assert!(rels.iter().all(|r| r.status == RelationStatus::Exact));
        for r in &rels {
            assert!(s.evaluates_to_zero(&r.terms).unwrap());
        }
    }

    #[test]
    fn n_squared_minus_4mp_is_a_degree_two_relation() {
        for p in [3u64, 5] {
            let s = compute_spans(p, 2, Truncation::Sturm, &policy()).unwrap();
            // basis members 0, 1, 2 are M(pz), N(pz), P(pz)
            let d = s.d();
            let n2 = Monomial::variable(d, 1).times(1);
            let mp = Monomial::variable(d, 0).times(2);
            let rel = vec![(n2.clone(), BigInt::from(1)), (mp.clone(), BigInt::from(-4))];
            assert!(s.evaluates_to_zero(&rel).unwrap());
            assert!(s.in_relation_span(2, &rel).unwrap());
            let not_rel = vec![(n2, BigInt::from(1)), (mp, BigInt::from(-3))];
            assert!(!s.in_relation_span(2, &not_rel).unwrap());
        }
    }

    #[test]
    fn p5_relation_count() {
        let s = compute_spans(5, 2, Truncation::Sturm, &policy()).unwrap();
        let rels = s.extract_relations(2, true).unwrap();
        assert_eq!(rels.len(), s.span(2).unwrap().candidate_count - 115);
        assert!(rels.iter().all(|r| r.status == RelationStatus::Exact));
    }

    #[test]
    fn fraction_free_relations_are_exact() {
        let s = compute_spans(3, 2, Truncation::Sturm, &CertPolicy::FractionFree).unwrap();
        assert_eq!(s.dims(), vec![9, 33]);
        let rels = s.extract_relations(2, false).unwrap();
        assert_eq!(rels.len(), 12);
        assert!(rels.iter().all(|r| r.status == RelationStatus::Exact));
    }

    #[test]
    fn unavailable_degrees() {
        let s = compute_spans(3, 1, Truncation::Sturm, &policy()).unwrap();
        assert!(matches!(s.exhaustive_check(2), Err(Error::DegreeUnavailable(2))));
        assert!(matches!(
            s.extract_relations(2, false),
            Err(Error::DegreeUnavailable(2))
        ));
        assert!(s.span(0).is_none());
        assert!(compute_spans(3, 0, Truncation::Sturm, &policy()).is_err());
    }

    #[test]
    fn evaluation_matches_cached_expansions() {
        let s = compute_spans(5, 2, Truncation::Sturm, &policy()).unwrap();
        let exps = s.basis_expansions(2).unwrap();
        for (m, e) in s.span(2).unwrap().basis_monomials.iter().zip(exps).step_by(7) {
            assert_eq!(&s.evaluate(m).unwrap(), e);
        }
    }

    #[test]
    fn partition_does_not_change_rank() {
        let s = compute_spans(3, 3, Truncation::Sturm, &policy()).unwrap();
        for k in 1..=3 {
            assert_eq!(s.unpartitioned_rank(k).unwrap(), s.span(k).unwrap().dim());
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(10, 2), 45);
        assert_eq!(binomial(11, 3), 165);
        assert_eq!(binomial(19, 2), 171);
    }
}
