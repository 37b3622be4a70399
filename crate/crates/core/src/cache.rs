//! On-disk cache of generator sets and degree-k bases.
//!
//! Every file starts with a fixed header, all integers little-endian:
//!
//! | bytes | field                                        |
//! |-------|----------------------------------------------|
//! | 8     | magic `X4PCACHE`                             |
//! | 1     | format version                               |
//! | 1     | payload kind: 1 generators, 2 span basis     |
//! | 1     | pivot rule identifier                        |
//! | 8     | p                                            |
//! | 8     | truncation length L                          |
//! | 4     | degree k (0 for generators)                  |
//!
//! Generator payload: u32 entry count, then per entry the form (u8: 0 M,
//! 1 N, 2 P), the kind (u8: 0 base, 1 twist), the twist index (u64), the
//! support class (u64) and a coefficient vector; then u32 basis size and
//! one u32 index per basis member.
//!
//! Coefficient vector: u64 length, a tag byte (0 for i64 values, 1 for big
//! integers), then the values. An i64 is 8 bytes; a big integer is a u32
//! byte count followed by its two's complement bytes, least significant
//! first.
//!
//! Span payload: u64 candidate count, u32 variable count d, u32 monomial
//! count, then per monomial a u32 count of nonzero exponents followed by
//! (u32 variable, u32 exponent) pairs; then u32 block count and per block
//! (u64 class, u64 rank).
//!
//! A file whose header names another version, pivot rule, p, L or k is
//! stale and ignored. A bad magic or a short or malformed payload is
//! reported as corruption.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;

use crate::generators::{Form, GeneratorLabel, GeneratorSet, Kind};
use crate::linalg::PIVOT_RULE_ID;
use crate::series::{QExpansion, Stored};
use crate::span::{Monomial, SpanBasis};
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"X4PCACHE";
pub const FORMAT_VERSION: u8 = 1;
const KIND_GENERATORS: u8 = 1;
const KIND_SPAN: u8 = 2;
const HEADER_LEN: usize = 31;

/// Loaded degree-k basis: monomials, per-block ranks, candidate count.
pub type CachedSpan = (Vec<Monomial>, BTreeMap<u64, usize>, usize);

#[derive(Clone, Debug)]
pub struct Cache {
    dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Header {
    version: u8,
    kind: u8,
    pivot_rule: u8,
    p: u64,
    len: u64,
    k: u32,
}

impl Header {
    fn current(kind: u8, p: u64, len: usize, k: u32) -> Self {
        Header {
            version: FORMAT_VERSION,
            kind,
            pivot_rule: PIVOT_RULE_ID,
            p,
            len: len as u64,
            k,
        }
    }

    fn write(&self, w: &mut Writer) {
        w.bytes(MAGIC);
        w.u8(self.version);
        w.u8(self.kind);
        w.u8(self.pivot_rule);
        w.u64(self.p);
        w.u64(self.len);
        w.u32(self.k);
    }

    fn read(r: &mut Reader<'_>) -> Result<Self> {
        if r.take(8)? != MAGIC {
            return Err(r.corrupt("bad magic"));
        }
        Ok(Header {
            version: r.u8()?,
            kind: r.u8()?,
            pivot_rule: r.u8()?,
            p: r.u64()?,
            len: r.u64()?,
            k: r.u32()?,
        })
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn bytes(&mut self, b: &[u8]) {
        self.0.extend_from_slice(b);
    }
    fn u8(&mut self, x: u8) {
        self.0.push(x);
    }
    fn u32(&mut self, x: u32) {
        self.bytes(&x.to_le_bytes());
    }
    fn u64(&mut self, x: u64) {
        self.bytes(&x.to_le_bytes());
    }
    fn i64(&mut self, x: i64) {
        self.bytes(&x.to_le_bytes());
    }
    fn coeffs(&mut self, s: Stored<'_>) {
        self.u64(s.len() as u64);
        match s {
            Stored::Small(v) => {
                self.u8(0);
                v.iter().for_each(|&x| self.i64(x));
            }
            Stored::Big(v) => {
                self.u8(1);
                for x in v {
                    let b = x.to_signed_bytes_le();
                    self.u32(b.len() as u32);
                    self.bytes(&b);
                }
            }
        }
    }
}

enum Coefficients {
    Small(Vec<i64>),
    Big(Vec<BigInt>),
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn corrupt(&self, reason: &str) -> Error {
        Error::CacheCorrupt {
            path: self.path.display().to_string(),
            reason: format!("{reason} at byte {}", self.pos),
        }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.data.len() - self.pos < n {
            return Err(self.corrupt("unexpected end of file"));
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    /// A length that must fit in the remaining bytes at `unit` bytes each.
    fn count(&mut self, wide: bool, unit: usize) -> Result<usize> {
        let n = if wide { self.u64()? } else { self.u32()? as u64 };
        if n.saturating_mul(unit as u64) > (self.data.len() - self.pos) as u64 {
            return Err(self.corrupt("length exceeds file size"));
        }
        Ok(n as usize)
    }
    fn coeffs(&mut self) -> Result<Coefficients> {
        let n = self.count(true, 1)?;
        match self.u8()? {
            0 => Ok(Coefficients::Small((0..n).map(|_| self.i64()).collect::<Result<_>>()?)),
            1 => {
                let mut v = Vec::with_capacity(n);
                for _ in 0..n {
                    let len = self.count(false, 1)?;
                    v.push(BigInt::from_signed_bytes_le(self.take(len)?));
                }
                Ok(Coefficients::Big(v))
            }
            _ => Err(self.corrupt("unknown coefficient tag")),
        }
    }
    fn finish(&self) -> Result<()> {
        if self.pos != self.data.len() {
            return Err(self.corrupt("trailing bytes"));
        }
        Ok(())
    }
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Cache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn generators_path(&self, p: u64, len: usize) -> PathBuf {
        self.dir.join(format!("generators-p{p}-L{len}.bin"))
    }

    pub fn span_path(&self, p: u64, len: usize, k: u32) -> PathBuf {
        self.dir.join(format!("span-p{p}-L{len}-k{k}.bin"))
    }

    fn write_atomic(&self, path: &Path, bytes: &[u8]) -> Result<()> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    /// Reads a file and checks its header; stale or missing files give None.
    fn open(&self, path: &Path, expect: Header) -> Result<Option<Vec<u8>>> {
        let data = match fs::read(path) {
            Ok(d) => d,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let header = Header::read(&mut Reader {
            data: &data,
            pos: 0,
            path,
        })?;
        Ok((header == expect).then_some(data))
    }

    pub fn store_generators(&self, gs: &GeneratorSet) -> Result<()> {
        let mut w = Writer(Vec::new());
        Header::current(KIND_GENERATORS, gs.p, gs.len, 0).write(&mut w);
        w.u32(gs.entries.len() as u32);
        for (label, e) in &gs.entries {
            w.u8(match label.form {
                Form::M => 0,
                Form::N => 1,
                Form::P => 2,
            });
            match label.kind {
                Kind::Base => {
                    w.u8(0);
                    w.u64(0);
                }
                Kind::Twist(b) => {
                    w.u8(1);
                    w.u64(b);
                }
            }
            w.u64(e.support_class().ok_or(Error::MissingSupportClass)?);
            w.coeffs(e.stored());
        }
        w.u32(gs.basis_indices.len() as u32);
        gs.basis_indices.iter().for_each(|&i| w.u32(i as u32));
        self.write_atomic(&self.generators_path(gs.p, gs.len), &w.0)
    }

    pub fn load_generators(&self, p: u64, len: usize) -> Result<Option<GeneratorSet>> {
        let path = self.generators_path(p, len);
        let Some(data) = self.open(&path, Header::current(KIND_GENERATORS, p, len, 0))? else {
            return Ok(None);
        };
        let mut r = Reader {
            data: &data,
            pos: HEADER_LEN,
            path: &path,
        };
        let denom = 4 * p;
        let n = r.count(false, 18)?;
        let mut entries = Vec::with_capacity(n);
        for _ in 0..n {
            let form = match r.u8()? {
                0 => Form::M,
                1 => Form::N,
                2 => Form::P,
                _ => return Err(r.corrupt("unknown form")),
            };
            let kind = match (r.u8()?, r.u64()?) {
                (0, _) => Kind::Base,
                (1, b) if b < p => Kind::Twist(b),
                _ => return Err(r.corrupt("bad generator kind")),
            };
            let class = r.u64()?;
            let label = GeneratorLabel { form, kind };
            if class != label.class_of(p) {
                return Err(r.corrupt("class does not match label"));
            }
            let e = match r.coeffs()? {
                Coefficients::Small(v) => QExpansion::with_class(denom, len, class, v),
                Coefficients::Big(v) => QExpansion::with_class_big(denom, len, class, v),
            }
            .map_err(|_| r.corrupt("coefficient vector has the wrong length"))?;
            entries.push((label, e));
        }
        let m = r.count(false, 4)?;
        let basis_indices = (0..m)
            .map(|_| r.u32().map(|i| i as usize))
            .collect::<Result<Vec<_>>>()?;
        if basis_indices.iter().any(|&i| i >= entries.len()) || !basis_indices.windows(2).all(|w| w[0] < w[1]) {
            return Err(r.corrupt("bad basis indices"));
        }
        r.finish()?;
        Ok(Some(GeneratorSet {
            p,
            len,
            entries,
            basis_indices,
            certificates: BTreeMap::new(),
        }))
    }

    pub fn store_span(&self, p: u64, len: usize, span: &SpanBasis) -> Result<()> {
        let mut w = Writer(Vec::new());
        Header::current(KIND_SPAN, p, len, span.degree).write(&mut w);
        w.u64(span.candidate_count as u64);
        let d = span.basis_monomials.first().map_or(0, Monomial::num_vars);
        w.u32(d as u32);
        w.u32(span.basis_monomials.len() as u32);
        for m in &span.basis_monomials {
            let nz: Vec<(usize, u32)> = m
                .exponents()
                .iter()
                .copied()
                .enumerate()
                .filter(|(_, e)| *e > 0)
                .collect();
            w.u32(nz.len() as u32);
            for (i, e) in nz {
                w.u32(i as u32);
                w.u32(e);
            }
        }
        w.u32(span.per_block_dims.len() as u32);
        for (&class, &rank) in &span.per_block_dims {
            w.u64(class);
            w.u64(rank as u64);
        }
        self.write_atomic(&self.span_path(p, len, span.degree), &w.0)
    }

    /// The cached degree-k basis over `d` variables, if present and current.
    pub fn load_span(&self, p: u64, len: usize, k: u32, d: usize) -> Result<Option<CachedSpan>> {
        let path = self.span_path(p, len, k);
        let Some(data) = self.open(&path, Header::current(KIND_SPAN, p, len, k))? else {
            return Ok(None);
        };
        let mut r = Reader {
            data: &data,
            pos: HEADER_LEN,
            path: &path,
        };
        let candidates = r.u64()? as usize;
        if r.u32()? as usize != d {
            return Err(r.corrupt("variable count differs from the generator basis"));
        }
        let n = r.count(false, 4)?;
        let mut monomials = Vec::with_capacity(n);
        for _ in 0..n {
            let nz = r.count(false, 8)?;
            let mut exps = vec![0u32; d];
            for _ in 0..nz {
                let (i, e) = (r.u32()? as usize, r.u32()?);
                if i >= d {
                    return Err(r.corrupt("variable index out of range"));
                }
                exps[i] = e;
            }
            let m = Monomial::new(exps).map_err(|_| r.corrupt("empty monomial"))?;
            if m.degree() != k {
                return Err(r.corrupt("monomial of the wrong degree"));
            }
            monomials.push(m);
        }
        let b = r.count(false, 16)?;
        let mut per_block = BTreeMap::new();
        for _ in 0..b {
            per_block.insert(r.u64()?, r.u64()? as usize);
        }
        r.finish()?;
        if per_block.values().sum::<usize>() != monomials.len() {
            return Err(r.corrupt("block ranks do not add up"));
        }
        Ok(Some((monomials, per_block, candidates)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{basis_of_v, truncation_bound};
    use crate::span::{compute_spans, compute_spans_cached, Truncation};
    use crate::CertPolicy;

    #[test]
    fn generator_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path()).unwrap();
        let len = truncation_bound(5, 1).unwrap();
        let gs = basis_of_v(5, len, &CertPolicy::FractionFree).unwrap();
        assert!(cache.load_generators(5, len).unwrap().is_none());
        cache.store_generators(&gs).unwrap();
        let back = cache.load_generators(5, len).unwrap().unwrap();
        assert_eq!(back.entries, gs.entries);
        assert_eq!(back.basis_indices, gs.basis_indices);
        assert!(cache.load_generators(5, len + 1).unwrap().is_none());
    }

    #[test]
    fn big_coefficients_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path()).unwrap();
        let len = truncation_bound(3, 1).unwrap();
        let mut gs = basis_of_v(3, len, &CertPolicy::FractionFree).unwrap();
        let huge: BigInt = BigInt::from(1u8) << 200usize;
        gs.entries[0].1 = gs.entries[0].1.scale(&-huge);
        cache.store_generators(&gs).unwrap();
        let back = cache.load_generators(3, len).unwrap().unwrap();
        assert_eq!(back.entries, gs.entries);
    }

    #[test]
    fn corruption_and_staleness() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path()).unwrap();
        let len = truncation_bound(3, 1).unwrap();
        let gs = basis_of_v(3, len, &CertPolicy::FractionFree).unwrap();
        cache.store_generators(&gs).unwrap();
        let path = cache.generators_path(3, len);
        let bytes = fs::read(&path).unwrap();

        fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(cache.load_generators(3, len), Err(Error::CacheCorrupt { .. })));

        let mut bad = bytes.clone();
        bad[0] = b'Y';
        fs::write(&path, &bad).unwrap();
        assert!(matches!(cache.load_generators(3, len), Err(Error::CacheCorrupt { .. })));

        let mut old = bytes.clone();
        old[8] = FORMAT_VERSION + 1;
        fs::write(&path, &old).unwrap();
        assert!(cache.load_generators(3, len).unwrap().is_none());

        let mut other_rule = bytes;
        other_rule[10] = PIVOT_RULE_ID + 1;
        fs::write(&path, &other_rule).unwrap();
        assert!(cache.load_generators(3, len).unwrap().is_none());
    }

    #[test]
    fn cached_spans_reproduce_fresh_ones() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path()).unwrap();
        let policy = CertPolicy::default_modular(3);
        let fresh = compute_spans(3, 3, Truncation::Sturm, &policy).unwrap();
        let first = compute_spans_cached(3, 3, Truncation::Sturm, &policy, Some(&cache)).unwrap();
        let second = compute_spans_cached(3, 3, Truncation::Sturm, &policy, Some(&cache)).unwrap();
        assert!(second.spans().iter().all(|s| s.from_cache));
        for s in [&first, &second] {
            assert_eq!(s.dims(), fresh.dims());
            for (a, b) in s.spans().iter().zip(fresh.spans()) {
                assert_eq!(a.basis_monomials, b.basis_monomials);
                assert_eq!(a.per_block_dims, b.per_block_dims);
                assert_eq!(a.candidate_count, b.candidate_count);
            }
            assert_eq!(s.basis_expansions(3), fresh.basis_expansions(3));
        }
    }
}
