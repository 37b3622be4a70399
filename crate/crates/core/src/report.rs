//! Per-(p, k) dimension records.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::formulas::{conjecture_bound, dim_mk_gammapm};
use crate::linalg::{RankCertificate, RankMethod};
use crate::span::{GradedSpans, SpanBasis};
use crate::Result;

/// Bumped whenever a field is added, removed or renamed.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DimensionReport {
    pub schema_version: u32,
    pub p: u64,
    /// Truncation length on the grid q^(n/4p).
    pub truncation: usize,
    pub unsound: bool,
    pub cert_policy: String,
    pub rows: Vec<DimensionRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DimensionRow {
    pub k: u32,
    pub dim: usize,
    /// Upper bound, present for k ≥ 2.
    pub bound: Option<u64>,
    /// dim M_k(Γ±(4p)), present for k ≥ 2.
    pub dim_mk_gammapm: Option<u64>,
    /// dim W_k equals the bound; absent for k = 1.
    #[serde(rename = "match")]
    pub matches: Option<bool>,
    pub candidate_count: usize,
    pub per_block_dims: BTreeMap<u64, usize>,
    pub certification: Certification,
    pub soundness: Soundness,
    /// Only filled when timings are requested, so default output is
    /// reproducible byte for byte.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<u64>,
}

/// Serialized as the literal markers "SOUND" and "UNSOUND".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Soundness {
    Sound,
    Unsound,
}

impl Soundness {
    pub fn from_flag(unsound: bool) -> Self {
        if unsound {
            Soundness::Unsound
        } else {
            Soundness::Sound
        }
    }

    pub fn marker(self) -> &'static str {
        match self {
            Soundness::Sound => "SOUND",
            Soundness::Unsound => "UNSOUND",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certification {
    /// "modular_agreed", "fraction_free", "cached" or "mixed".
    pub method: String,
    /// Union of the primes that certified some block, ascending.
    pub primes: Vec<u64>,
    pub blocks: usize,
}

impl Certification {
    fn summarize(certs: &BTreeMap<u64, RankCertificate>, from_cache: bool) -> Self {
        if from_cache || certs.is_empty() {
            return Certification {
                method: "cached".into(),
                primes: Vec::new(),
                blocks: 0,
            };
        }
        let mut primes: Vec<u64> = Vec::new();
        let (mut modular, mut exact) = (false, false);
        for c in certs.values() {
            match &c.method {
                RankMethod::ModularAgreed { primes: qs } => {
                    modular = true;
                    primes.extend(qs);
                }
                RankMethod::FractionFree => exact = true,
            }
        }
        primes.sort_unstable();
        primes.dedup();
        let method = match (modular, exact) {
            (true, false) => "modular_agreed",
            (false, true) => "fraction_free",
            _ => "mixed",
        };
        Certification {
            method: method.into(),
            primes,
            blocks: certs.len(),
        }
    }
}

impl DimensionRow {
    pub fn from_span(p: u64, span: &SpanBasis, unsound: bool, timings: bool) -> Result<Self> {
        let k = span.degree;
        let (bound, gammapm) = if k >= 2 {
            (Some(conjecture_bound(p, k as u64)?), Some(dim_mk_gammapm(p, k as u64)?))
        } else {
            (None, None)
        };
        Ok(DimensionRow {
            k,
            dim: span.dim(),
            bound,
            dim_mk_gammapm: gammapm,
            matches: bound.map(|b| b == span.dim() as u64),
            candidate_count: span.candidate_count,
            per_block_dims: span.per_block_dims.clone(),
            certification: Certification::summarize(&span.certificates, span.from_cache),
            soundness: Soundness::from_flag(unsound),
            wall_ms: timings.then_some(span.elapsed.as_millis() as u64),
        })
    }
}

impl DimensionReport {
    pub fn from_spans(spans: &GradedSpans, timings: bool) -> Result<Self> {
        let rows = spans
            .spans()
            .iter()
            .map(|s| DimensionRow::from_span(spans.p(), s, spans.unsound, timings))
            .collect::<Result<Vec<_>>>()?;
        Ok(DimensionReport {
            schema_version: SCHEMA_VERSION,
            p: spans.p(),
            truncation: spans.truncation(),
            unsound: spans.unsound,
            cert_policy: spans.cert.label(),
            rows,
        })
    }

    pub fn dims(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.dim).collect()
    }

    pub fn row(&self, k: u32) -> Option<&DimensionRow> {
        self.rows.iter().find(|r| r.k == k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::span::{compute_spans, Truncation};
    use crate::CertPolicy;

    #[test]
    fn p3_rows() {
        let s = compute_spans(3, 3, Truncation::Sturm, &CertPolicy::default_modular(1)).unwrap();
        let r = DimensionReport::from_spans(&s, false).unwrap();
        assert_eq!(r.schema_version, SCHEMA_VERSION);
        assert_eq!(r.dims(), vec![9, 33, 60]);
        let k1 = r.row(1).unwrap();
        assert_eq!((k1.bound, k1.matches), (None, None));
        let k2 = r.row(2).unwrap();
        assert_eq!(
            (k2.bound, k2.dim_mk_gammapm, k2.matches),
            (Some(36), Some(36), Some(false))
        );
        let k3 = r.row(3).unwrap();
        assert_eq!((k3.bound, k3.matches), (Some(60), Some(true)));
        assert_eq!(k3.certification.method, "modular_agreed");
        assert!(r
            .rows
            .iter()
            .all(|row| row.wall_ms.is_none() && row.soundness == Soundness::Sound));
        let timed = DimensionReport::from_spans(&s, true).unwrap();
        assert!(timed.rows.iter().all(|row| row.wall_ms.is_some()));
    }
}
