"""Smoke test for the x4p extension module.

Build and install with `maturin develop -m crates/py/Cargo.toml` (or
`pip install crates/py`), then run `python python/smoke_test.py`.
"""

import json

import x4p


def main():
    spans = x4p.GradedSpans(3, 2)
    assert spans.p == 3
    assert spans.dims() == [9, 33], spans.dims()
    assert not spans.unsound
    assert len(spans.basis(2)) == 33
    assert all(e.support_class is not None for e in spans.basis_expansions(1))

    relations = spans.relations(2)
    assert len(relations) == 12
    assert all(exact for _, exact in relations)

    report = json.loads(spans.report_json())
    assert [row["dim"] for row in report["rows"]] == [9, 33]
    assert report["rows"][1]["bound"] == 36

    gens = dict(x4p.spanning_set(3, length=97))
    assert len(gens) == 12
    m, n, p = gens["M(pz)"], gens["N(pz)"], gens["P(pz)"]
    assert (n * n - (m * p).scale(4)).terms() == []

    theta = x4p.QExpansion(4, [1, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2])
    assert theta[4] == 2 and len(theta) == 17
    assert (theta * theta)[4] == 4

    assert len(x4p.cusp_classes(5)) == 36
    assert len(x4p.cusp_classes(3, "approx")) == 24
    assert x4p.conjecture_bound(3, 2) == 36
    assert x4p.dim_mk_gamma4(3) == 7
    assert x4p.dim_mk_gammapm(5, 2) == 156

    rows = [[1, 2, 3], [2, 4, 6], [1, 0, 1]]
    assert x4p.rank_exact(rows) == 2
    assert x4p.rank_mod_prime(rows, 101)[0] == 2
    assert len(x4p.kernel_exact(rows)) == 1
    big = 2**100
    assert x4p.rank_exact([[big, 1], [big * 3, 3]]) == 1
    assert x4p.is_prime(1000003)

    try:
        x4p.GradedSpans(9, 2)
    except ValueError:
        pass
    else:
        raise AssertionError("non-prime p accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
