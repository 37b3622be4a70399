//! The invariant suite behind `x4p verify`.

use num_bigint::BigInt;
use serde::Serialize;

use x4p_core::cusps::{cusp_classes, expected_count, refinement, CuspRelation};
use x4p_core::formulas::{conjecture_bound, dim_mk_gammapm};
use x4p_core::generators::{build_generator, quarter_coefficients, spanning_set, theta_phi_rank, truncation_bound};
use x4p_core::span::{compute_spans, GradedSpans, Monomial, RelationStatus, Truncation, EXHAUSTIVE_LIMIT};
use x4p_core::{CertPolicy, Error, Form, GeneratorLabel, QExpansion};

use crate::{CliError, Common, SpanArgs};

/// Largest p for which the spans are recomputed with fraction-free ranks.
const FRACTION_FREE_MAX_P: u64 = 7;
/// Largest candidate-matrix size ranked without the class partition.
const UNPARTITIONED_MAX_ENTRIES: usize = 20_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skip => "skip",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub p: u64,
    pub kmax: u32,
    pub passed: bool,
    pub checks: Vec<Check>,
}

struct Suite {
    checks: Vec<Check>,
}

impl Suite {
    fn record(&mut self, name: &str, outcome: Result<(bool, String), Error>) {
        let (status, detail) = match outcome {
            Ok((true, d)) => (Status::Pass, d),
            Ok((false, d)) => (Status::Fail, d),
            Err(e) => (Status::Fail, format!("error: {e}")),
        };
        self.checks.push(Check {
            name: name.into(),
            status,
            detail,
        });
    }

    fn skip(&mut self, name: &str, detail: String) {
        self.checks.push(Check {
            name: name.into(),
            status: Status::Skip,
            detail,
        });
    }
}

fn generators_class_supported(p: u64) -> Result<(bool, String), Error> {
    let len = truncation_bound(p, 1)?;
    let gs = spanning_set(p, len)?;
    let bad: Vec<String> = gs
        .entries
        .iter()
        .filter(|(label, e)| {
            let class = label.class_of(p);
            e.support_class() != Some(class) || !matches!(e.to_full_grid().detect_class(), Some(c) if c == class)
        })
        .map(|(label, _)| label.to_string())
        .collect();
    Ok((
        bad.is_empty(),
        format!("{} generators at L = {len}; off-class: {bad:?}", gs.entries.len()),
    ))
}

fn twists_partition(p: u64) -> Result<(bool, String), Error> {
    let len = truncation_bound(p, 1)?;
    for form in Form::ALL {
        let mut sum = QExpansion::zero(4 * p, len);
        for b in 0..p {
            sum = sum.add(&build_generator(GeneratorLabel::twist(form, b), p, len)?)?;
        }
        if sum != QExpansion::from_i64(4 * p, quarter_coefficients(form, len)?) {
            return Ok((false, format!("twists of {form:?} do not sum to {form:?}(z/p)")));
        }
    }
    Ok((
        true,
        format!("sum over b of f_(b) = f(z/p) for M, N, P up to L = {len}"),
    ))
}

fn n2_minus_4mp(p: u64) -> Result<(bool, String), Error> {
    let count = 4096;
    let q = |f| quarter_coefficients(f, count).map(|c| QExpansion::from_i64(4, c));
    let (m, n, pp) = (q(Form::M)?, q(Form::N)?, q(Form::P)?);
    let level4 = n.mul(&n)?.sub(&m.mul(&pp)?.scale(&BigInt::from(4)))?.is_zero();
    let len = truncation_bound(p, 2)?;
    let g = |f| build_generator(GeneratorLabel::base(f), p, len);
    let (m, n, pp) = (g(Form::M)?, g(Form::N)?, g(Form::P)?);
    let pulled = n.mul(&n)?.sub(&m.mul(&pp)?.scale(&BigInt::from(4)))?.is_zero();
    Ok((
        level4 && pulled,
        format!("N^2 - 4MP = 0 in q^(1/4) to {count} terms: {level4}; for f(pz) to L = {len}: {pulled}"),
    ))
}

fn gamma4_dims(policy: &CertPolicy) -> Result<(bool, String), Error> {
    let ranks = (0..=5)
        .map(|k| theta_phi_rank(k, policy))
        .collect::<Result<Vec<_>, _>>()?;
    let ok = ranks.iter().enumerate().all(|(k, &r)| r == 2 * k + 1);
    Ok((ok, format!("ranks of theta^(2k-j) phi^j for k = 0..5: {ranks:?}")))
}

fn bounds(spans: &GradedSpans) -> Result<(bool, String), Error> {
    let p = spans.p();
    let mut ok = spans.d() as u64 <= 3 * (p + 1);
    let mut parts = vec![format!("d = {} <= {}", spans.d(), 3 * (p + 1))];
    for s in spans.spans().iter().filter(|s| s.degree >= 2) {
        let b = conjecture_bound(p, s.degree as u64)?;
        ok &= s.dim() as u64 <= b;
        parts.push(format!("dim W_{} = {} <= {b}", s.degree, s.dim()));
    }
    Ok((ok, parts.join(", ")))
}

fn bound_identity(p: u64) -> Result<(bool, String), Error> {
    let deficit = 3 * (p + 1) * (p - 3);
    let mut ok = true;
    for k in 2..=10u64 {
        let bound = conjecture_bound(p, k)? as i64;
        let gammapm = dim_mk_gammapm(p, k)? as i64;
        let (pi, ki) = (p as i64, k as i64);
        // 2·bound = 2(k−1)p³ − 3p² + 2(7−k)p + 15
        let poly2 = 2 * (ki - 1) * pi.pow(3) - 3 * pi * pi + 2 * (7 - ki) * pi + 15;
        ok &= 2 * bound == poly2 && bound == gammapm - 3 * (pi + 1) * (pi - 3);
    }
    Ok((
        ok,
        format!("bound = dim M_k(Gamma_pm) - {deficit} = polynomial form, k = 2..10"),
    ))
}

fn block_additivity(spans: &GradedSpans) -> Result<(bool, String), Error> {
    let mut ok = true;
    let mut parts = Vec::new();
    for s in spans.spans() {
        let sum: usize = s.per_block_dims.values().sum();
        ok &= sum == s.dim();
        let entries = spans.candidate_count(s.degree)? * spans.truncation();
        if entries <= UNPARTITIONED_MAX_ENTRIES {
            let r = spans.unpartitioned_rank(s.degree)?;
            ok &= r == s.dim();
            parts.push(format!("k={}: blocks {sum}, single matrix {r}", s.degree));
        } else {
            parts.push(format!("k={}: blocks {sum}", s.degree));
        }
    }
    Ok((ok, parts.join("; ")))
}

fn relations(spans: &GradedSpans) -> Result<(bool, String), Error> {
    let rels = spans.extract_relations(2, true)?;
    let w2 = spans.span(2).expect("degree 2 computed");
    let all_exact = rels.iter().all(|r| r.status == RelationStatus::Exact);
    let count_ok = rels.len() == w2.candidate_count - w2.dim();
    let d = spans.d();
    // basis members 0, 1, 2 are M(pz), N(pz), P(pz)
    let target = vec![
        (Monomial::variable(d, 1).times(1), BigInt::from(1)),
        (Monomial::variable(d, 0).times(2), BigInt::from(-4)),
    ];
    let contains = spans.in_relation_span(2, &target)?;
    Ok((
        all_exact && count_ok && contains,
        format!(
            "{} degree-2 relations, all exact: {all_exact}; N(pz)^2 - 4 M(pz) P(pz) among them: {contains}",
            rels.len()
        ),
    ))
}

fn cusps(p: u64) -> Result<(bool, String), Error> {
    let sim = cusp_classes(p, CuspRelation::Sim)?.count() as u64;
    let approx = cusp_classes(p, CuspRelation::Approx)?.count() as u64;
    let (mult, nested) = refinement(p)?;
    let ok = sim == expected_count(p, CuspRelation::Sim)
        && approx == expected_count(p, CuspRelation::Approx)
        && nested
        && mult.len() == 1;
    Ok((
        ok,
        format!("sim {sim}, approx {approx}, approx classes per sim class {mult:?}"),
    ))
}

pub fn run(span: &SpanArgs, common: &Common) -> Result<VerifyReport, CliError> {
    let p = span.p;
    x4p_core::primes::ensure_odd_prime(p)?;
    if span.kmax < 2 {
        return Err(CliError {
            code: crate::EXIT_CONFIG,
            message: "verify needs --kmax of at least 2".into(),
        });
    }
    let policy = common.policy()?;
    let spans = compute_spans(p, span.kmax, span.truncation(), &policy)?;
    let mut suite = Suite { checks: Vec::new() };

    suite.record("generators_class_supported", generators_class_supported(p));
    suite.record("twists_partition_rescaled_form", twists_partition(p));
    suite.record("relation_n2_minus_4mp", n2_minus_4mp(p));
    suite.record("gamma4_dimensions", gamma4_dims(&policy));
    suite.record("bound_identity", bound_identity(p));
    suite.record("bound_compliance", bounds(&spans));
    suite.record("block_additivity", block_additivity(&spans));
    suite.record("degree2_relations", relations(&spans));
    suite.record("cusp_counts", cusps(p));

    for k in 2..=span.kmax.min(3) {
        let name = format!("exhaustive_span_k{k}");
        match spans.exhaustive_check(k) {
            Err(Error::InvalidArgument(msg)) if msg.contains("enumeration limit") => {
                suite.skip(&name, format!("more than {EXHAUSTIVE_LIMIT} monomials"))
            }
            outcome => suite.record(
                &name,
                outcome.map(|ok| {
                    (
                        ok,
                        format!(
                            "all degree-{k} monomials vs dim W_{k} = {}",
                            spans.dims()[k as usize - 1]
                        ),
                    )
                }),
            ),
        }
    }

    if p <= FRACTION_FREE_MAX_P && policy != CertPolicy::FractionFree {
        let kff = span.kmax.min(3);
        let outcome = compute_spans(p, kff, span.truncation(), &CertPolicy::FractionFree).map(|ff| {
            let same = ff
                .spans()
                .iter()
                .zip(spans.spans())
                .all(|(a, b)| a.per_block_dims == b.per_block_dims && a.basis_monomials == b.basis_monomials);
            (same, format!("fraction-free dims {:?} for k <= {kff}", ff.dims()))
        });
        suite.record("fraction_free_agreement", outcome);
    } else {
        suite.skip(
            "fraction_free_agreement",
            format!("only run for p <= {FRACTION_FREE_MAX_P} under modular policies"),
        );
    }

    let doubled = Truncation::Fixed {
        len: 2 * spans.truncation(),
        allow_unsound: false,
    };
    let outcome = compute_spans(p, span.kmax, doubled, &policy).map(|s2| {
        (
            s2.dims() == spans.dims(),
            format!(
                "L = {}: {:?}; L = {}: {:?}",
                spans.truncation(),
                spans.dims(),
                s2.truncation(),
                s2.dims()
            ),
        )
    });
    suite.record("sturm_stability", outcome);

    if spans.unsound {
        suite.record(
            "soundness",
            Ok((false, "truncation below the valence bound: UNSOUND".into())),
        );
    }
    let passed = suite.checks.iter().all(|c| c.status != Status::Fail);
    Ok(VerifyReport {
        schema_version: x4p_core::report::SCHEMA_VERSION,
        p,
        kmax: span.kmax,
        passed,
        checks: suite.checks,
    })
}
