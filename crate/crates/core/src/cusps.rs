//! Cusp classes of X(4p) under the relations ∼ and ≈, by enumeration of
//! primitive vectors mod 4p.
//!
//! (a′, c′) ∼ (a, c) when (a′, c′) ≡ μ(a, c) mod 4p for a unit μ; the finer
//! (a′, c′) ≈ (a, c) asks for signs ±1 mod 4 and mod p separately, which
//! amounts to units μ ≡ ±1 (mod p).

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use serde::Serialize;

use crate::primes::ensure_odd_prime;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CuspVector {
    pub a: i64,
    pub c: i64,
}

impl CuspVector {
    pub fn new(a: i64, c: i64) -> Self {
        CuspVector { a, c }
    }

    /// Some integer lift is primitive iff gcd(a, c, modulus) = 1.
    pub fn is_primitive_mod(&self, modulus: i64) -> bool {
        self.a.gcd(&self.c).gcd(&modulus) == 1
    }

    fn reduced(&self, modulus: i64) -> CuspVector {
        CuspVector::new(self.a.rem_euclid(modulus), self.c.rem_euclid(modulus))
    }
}

impl fmt::Display for CuspVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.a, self.c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CuspRelation {
    /// Scaling by any unit mod 4p.
    Sim,
    /// Independent signs mod 4 and mod p.
    Approx,
}

impl std::str::FromStr for CuspRelation {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sim" => Ok(CuspRelation::Sim),
            "approx" => Ok(CuspRelation::Approx),
            other => Err(format!("unknown relation {other:?}; expected sim or approx")),
        }
    }
}

/// Whether v and w map to the same cusp of X(4): v ≡ ±w (mod 4).
pub fn identified_at_level4(v: CuspVector, w: CuspVector) -> bool {
    let same = (v.a - w.a).rem_euclid(4) == 0 && (v.c - w.c).rem_euclid(4) == 0;
    let opposite = (v.a + w.a).rem_euclid(4) == 0 && (v.c + w.c).rem_euclid(4) == 0;
    same || opposite
}

#[derive(Clone, Debug, Serialize)]
pub struct CuspClassTable {
    pub p: u64,
    pub relation: CuspRelation,
    pub modulus: u64,
    /// Classes sorted by representative; each class is sorted and its first
    /// element, the lexicographically smallest lift in [0, 4p)², is the
    /// representative.
    pub classes: Vec<Vec<CuspVector>>,
}

impl CuspClassTable {
    pub fn count(&self) -> usize {
        self.classes.len()
    }

    pub fn representatives(&self) -> Vec<CuspVector> {
        self.classes.iter().map(|c| c[0]).collect()
    }

    /// Index of the class containing `v`.
    pub fn class_of(&self, v: CuspVector) -> Option<usize> {
        let v = v.reduced(self.modulus as i64);
        self.classes.iter().position(|c| c.binary_search(&v).is_ok())
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn multipliers(p: u64, relation: CuspRelation) -> Vec<i64> {
    let n = 4 * p as i64;
    (1..n)
        .filter(|u| u.gcd(&n) == 1)
        .filter(|u| match relation {
            CuspRelation::Sim => true,
            CuspRelation::Approx => {
                let r = u % p as i64;
                r == 1 || r == p as i64 - 1
            }
        })
        .collect()
}

pub fn cusp_classes(p: u64, relation: CuspRelation) -> Result<CuspClassTable> {
    ensure_odd_prime(p)?;
    let n = 4 * p as i64;
    let idx = |v: CuspVector| (v.a * n + v.c) as usize;
    let mut parent: Vec<usize> = (0..(n * n) as usize).collect();
    let units = multipliers(p, relation);
    let primitive: Vec<CuspVector> = (0..n)
        .flat_map(|a| (0..n).map(move |c| CuspVector::new(a, c)))
        .filter(|v| v.is_primitive_mod(n))
        .collect();
    for &v in &primitive {
        for &u in &units {
            let w = CuspVector::new(u * v.a, u * v.c).reduced(n);
            let (rv, rw) = (find(&mut parent, idx(v)), find(&mut parent, idx(w)));
            if rv != rw {
                parent[rv.max(rw)] = rv.min(rw);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<CuspVector>> = BTreeMap::new();
    for &v in &primitive {
        let root = find(&mut parent, idx(v));
        groups.entry(root).or_default().push(v);
    }
    let mut classes: Vec<Vec<CuspVector>> = groups.into_values().collect();
    for c in classes.iter_mut() {
        c.sort();
    }
    classes.sort();
    let table = CuspClassTable {
        p,
        relation,
        modulus: n as u64,
        classes,
    };
    let expected = expected_count(p, relation);
    assert_eq!(table.count() as u64, expected, "{relation:?} class count at p = {p}");
    Ok(table)
}

/// 6(p+1) for ∼, 3(p²−1) for ≈.
pub fn expected_count(p: u64, relation: CuspRelation) -> u64 {
    match relation {
        CuspRelation::Sim => 6 * (p + 1),
        CuspRelation::Approx => 3 * (p * p - 1),
    }
}

/// How ≈ refines ∼: maps "number of ≈-classes inside a ∼-class" to the
/// number of ∼-classes with that many. Also returns whether every ≈-class
/// sits inside a single ∼-class.
pub fn refinement(p: u64) -> Result<(BTreeMap<usize, usize>, bool)> {
    let sim = cusp_classes(p, CuspRelation::Sim)?;
    let approx = cusp_classes(p, CuspRelation::Approx)?;
    let mut inside: Vec<usize> = vec![0; sim.count()];
    let mut nested = true;
    for class in &approx.classes {
        let home = sim.class_of(class[0]).expect("every primitive vector is classified");
        nested &= class.iter().all(|&v| sim.class_of(v) == Some(home));
        inside[home] += 1;
    }
    let mut multiplicities = BTreeMap::new();
    for m in inside {
        *multiplicities.entry(m).or_insert(0) += 1;
    }
    Ok((multiplicities, nested))
}
