"""Acceptance criteria 1-10; a pass/fail line per criterion is printed in the summary."""

import itertools
import math
import zlib

import numpy as np
import pytest

from replacer_lab.channels import (
    PartialReplacerChannel,
    ReplacerChannel,
    erasure_kraus_set,
    partial_replacer_kraus_set,
)
from replacer_lab.codes import CodeSubspace, DimensionBoundError, generate_code
from replacer_lab.corpus import fixture, list_fixtures
from replacer_lab.stabilizer import (
    PauliOperator,
    StabilizerGroup,
    cleaning_check,
    codewords_from_stabilizer,
    erasure_correctable_subset,
    group_membership_up_to_phase,
    is_logical,
    logicals_on,
    normalizer_membership,
    random_stabilizer_group,
)
from replacer_lab.structure import (
    NotCorrectable,
    build_recovery,
    decompose,
    entropy_terms,
    full_report,
    kl_scaling_residual,
    knill_laflamme_check,
    mutual_information,
    verify_recovery,
)
from replacer_lab.tensor import SystemLayout, random_density, random_state

acceptance = pytest.mark.acceptance

FIXTURES = list_fixtures()
CORRECTABLE_INSTANCES = [(n, e) for n in FIXTURES for e in fixture(n).expected_correctable]


def all_subsets(n):
    return [c for k in range(1, n + 1) for c in itertools.combinations(range(1, n + 1), k)]


CORPUS_PAIRS = [(n, e) for n in FIXTURES for e in all_subsets(fixture(n).code.layout.n)]


# 1 ------------------------------------------------------------------------------

@acceptance(1, "fixture reproduction of dim A and Gamma_A")
@pytest.mark.parametrize(
    "name, subset, dim_a",
    [("grassl4", (4,), 2), ("cgl_qutrit", (1,), 3), ("ququart", (2,), 2), ("five_qubit", (4, 5), 4)],
)
def test_c1_gamma_and_dim_a(name, subset, dim_a):
    d = decompose(fixture(name).code, subset)
    assert d.dim_a == dim_a
    np.testing.assert_allclose(d.gamma, np.full(dim_a, 1 / dim_a), rtol=0, atol=1e-9)
    eig = np.sort(np.linalg.eigvalsh(d.gamma_matrix()))[::-1]
    np.testing.assert_allclose(eig, np.full(dim_a, 1 / dim_a), rtol=0, atol=1e-9)


# 2 ------------------------------------------------------------------------------

@acceptance(2, "published isometry tables and decompose reconstruct the codewords")
@pytest.mark.parametrize("name", FIXTURES)
def test_c2_tables(name):
    fx = fixture(name)
    assert fx.expected.reconstruction_residual(fx.code) <= 1e-12
    assert fx.expected.isometry_residual() <= 1e-12
    d = decompose(fx.code, fx.documented_e)
    assert d.reconstruction_residual(fx.code) <= 1e-8
    assert d.isometry_residual() <= 1e-8


# 3 ------------------------------------------------------------------------------

@acceptance(3, "mutual information values")
@pytest.mark.parametrize("name, subset", CORRECTABLE_INSTANCES)
def test_c3_mutual_information_zero(name, subset):
    assert abs(mutual_information(fixture(name).code, subset)) <= 1e-9


@acceptance(3, "mutual information values")
def test_c3_ququart_entropies():
    t = entropy_terms(fixture("ququart").code, (2,))
    assert abs(t.h_q - math.log(2)) <= 1e-9
    assert abs(t.h_e - math.log(2)) <= 1e-9
    assert abs(t.h_qe - math.log(4)) <= 1e-9
    assert abs(t.mutual_information) <= 1e-9


# 4 ------------------------------------------------------------------------------

@acceptance(4, "threshold behavior of the qutrit and five-qubit codes")
@pytest.mark.parametrize(
    "name, size, expected",
    [("cgl_qutrit", 1, True), ("cgl_qutrit", 2, False), ("five_qubit", 2, True), ("five_qubit", 3, False)],
)
def test_c4_thresholds(name, size, expected):
    fx = fixture(name)
    subsets = list(itertools.combinations(range(1, fx.code.layout.n + 1), size))
    assert len(subsets) == {("cgl_qutrit", 1): 3, ("cgl_qutrit", 2): 3}.get((name, size), 10)
    for subset in subsets:
        report = full_report(fx.code, subset)
        assert report.correctable is expected, (subset, report.to_dict())


# 5 ------------------------------------------------------------------------------

def _mixed_instances():
    rng = np.random.default_rng(20240601)
    layouts = [(2, 2, 2), (2, 2, 2, 2), (3, 3), (3, 3, 3), (2, 3, 2), (4, 4), (2, 2, 3), (3, 3, 2, 2), (2,) * 5]
    out = []
    for _ in range(240):
        dims = layouts[rng.integers(len(layouts))]
        n = len(dims)
        k = int(rng.integers(1, n))
        subset = tuple(sorted(rng.choice(np.arange(1, n + 1), size=k, replace=False).tolist()))
        layout = SystemLayout(dims)
        d_e = layout.sub(subset).total_dim
        d_keep = layout.total_dim // d_e
        dim_a = int(rng.integers(1, min(d_e, d_keep) + 1))
        dim_s = int(rng.integers(1, d_keep // dim_a + 1))
        code, _ = generate_code(layout, subset, dim_s, dim_a, seed=rng)
        out.append(("generated", code, subset))
        # the same code on another subset is generically not correctable
        other = tuple(sorted(rng.choice(np.arange(1, n + 1), size=int(rng.integers(1, n)), replace=False).tolist()))
        out.append(("generated-other", code, other))
    for name, subset in CORPUS_PAIRS:
        out.append(("corpus", fixture(name).code, subset))
    for _ in range(150):
        dims = layouts[rng.integers(len(layouts))]
        layout = SystemLayout(dims)
        n = len(dims)
        k = int(rng.integers(1, min(4, layout.total_dim) + 1))
        vecs = np.array([random_state(rng, layout.total_dim) for _ in range(k)])
        q, _ = np.linalg.qr(vecs.T)
        code = CodeSubspace(layout, q.T.copy(), "random")
        subset = tuple(sorted(rng.choice(np.arange(1, n + 1), size=int(rng.integers(1, n)), replace=False).tolist()))
        out.append(("random", code, subset))
    return out


@acceptance(5, "theorem equivalence over at least 500 mixed instances")
def test_c5_theorem_equivalence():
    instances = _mixed_instances()
    assert len(instances) >= 500
    kinds = {"correctable": 0, "not_correctable": 0}
    disagreements = []
    for kind, code, subset in instances:
        report = full_report(code, subset, trials=3, seed=1)
        if report.overall == "disagreement":
            disagreements.append((kind, code.label, subset, report.to_dict()))
        else:
            kinds[report.overall] += 1
        if kind == "generated":
            assert report.correctable is True
    assert not disagreements, disagreements[:3]
    assert kinds["correctable"] > 100 and kinds["not_correctable"] > 100


# 6 ------------------------------------------------------------------------------

@acceptance(6, "verdict and recovery independent of the replacement state")
@pytest.mark.parametrize("name, subset", CORRECTABLE_INSTANCES)
def test_c6_sigma_independence(name, subset):
    code = fixture(name).code
    rng = np.random.default_rng(zlib.crc32(f"{name}{subset}".encode()))
    d_e = code.layout.sub(subset).total_dim
    baseline = full_report(code, subset).overall
    assert baseline == "correctable"
    for t in range(5):
        sigma = random_density(rng, d_e, rank=None if t % 2 == 0 else 1)
        report = full_report(code, subset, sigma=sigma, trials=10, seed=t)
        assert report.overall == baseline
        assert report.conditions["recovery_roundtrip"].residual <= 1e-9
        rec = build_recovery(decompose(code, subset, sigma=sigma))
        check = verify_recovery(code, ReplacerChannel(code.layout, subset, sigma), rec, trials=10, seed=t)
        assert check.residual <= 1e-9 and check.trace_error <= 1e-9


# 7 ------------------------------------------------------------------------------

@acceptance(7, "partial-replacer Knill-Laflamme verdicts and constant scaling")
@pytest.mark.parametrize("name, subset", CORPUS_PAIRS)
def test_c7_partial_replacer(name, subset):
    code = fixture(name).code
    layout = code.layout
    erasure = knill_laflamme_check(code, erasure_kraus_set(layout, subset)).passed
    d_e = layout.sub(subset).total_dim
    for lam in (0.0, 0.3, 0.9):
        ch = PartialReplacerChannel(layout, subset, lam, np.eye(d_e) / d_e)
        assert knill_laflamme_check(code, partial_replacer_kraus_set(ch)).passed == erasure
        assert kl_scaling_residual(code, ch) <= 1e-9


# 8 ------------------------------------------------------------------------------

@acceptance(8, "recovery round trip on 50 random code states")
@pytest.mark.parametrize("name, subset", CORRECTABLE_INSTANCES)
def test_c8_recovery_roundtrip(name, subset):
    code = fixture(name).code
    rec = build_recovery(decompose(code, subset))
    check = verify_recovery(code, ReplacerChannel.erasure(code.layout, subset), rec, trials=50, seed=8)
    assert check.residual <= 1e-9
    assert check.trace_error <= 1e-9


# 9 ------------------------------------------------------------------------------

FIVE = StabilizerGroup.from_strings(["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"])


@acceptance(9, "stabilizer criterion agrees with the deciders; cleaning witnesses")
def test_c9_five_qubit_all_subsets():
    code = codewords_from_stabilizer(FIVE)
    assert len(all_subsets(5)) == 31
    for subset in all_subsets(5):
        crit = erasure_correctable_subset(FIVE, subset)
        assert full_report(code, subset, trials=5).correctable is crit, subset
        res = cleaning_check(FIVE, subset)
        if crit:
            assert res.passed and res.witness is None
        else:
            assert not res.passed
            w = res.witness
            assert set(w.support) <= set(subset)
            assert normalizer_membership(FIVE, w) and not group_membership_up_to_phase(FIVE, w)


@acceptance(9, "stabilizer criterion agrees with the deciders; cleaning witnesses")
def test_c9_witness_on_123_matches_cleaned_logicals():
    res = cleaning_check(FIVE, (1, 2, 3))
    assert not res.passed
    found = {str(p) for p in logicals_on(FIVE, (1, 2, 3))}
    assert {"ZXZII", "YZYII"} <= found
    x_clean, z_clean = PauliOperator.parse("ZXZII"), PauliOperator.parse("YZYII")
    assert not x_clean.commutes(z_clean)
    # the witness is a product of the cleaned logicals, modulo the stabilizer
    classes = [x_clean, z_clean, x_clean * z_clean]
    assert any(group_membership_up_to_phase(FIVE, res.witness * c) for c in classes)


@acceptance(9, "stabilizer criterion agrees with the deciders; cleaning witnesses")
def test_c9_random_groups():
    rng = np.random.default_rng(909)
    for t in range(50):
        n = int(rng.integers(2, 6))
        r = int(rng.integers(1, n + 1))
        group = random_stabilizer_group(rng, n, r)
        code = codewords_from_stabilizer(group)
        for subset in all_subsets(n):
            if len(subset) > 3 and n == 5:
                continue
            crit = erasure_correctable_subset(group, subset)
            assert full_report(code, subset, trials=2, seed=t).correctable is crit, (str(group), subset)
            res = cleaning_check(group, subset)
            assert res.passed is crit
            if not crit:
                assert set(res.witness.support) <= set(subset) and is_logical(group, res.witness)


# 10 -----------------------------------------------------------------------------

@acceptance(10, "dimension bound (dim A)(dim S) <= dim of the kept sites")
def test_c10_dimension_bound():
    for name, subset in CORPUS_PAIRS:
        code = fixture(name).code
        try:
            d = decompose(code, subset)
        except NotCorrectable:
            continue
        assert d.dim_r * d.dim_a <= d.dim_kept
    rng = np.random.default_rng(10)
    for _ in range(100):
        layout = SystemLayout((2, 2, 3))
        subset = (int(rng.integers(1, 4)),)
        d_e = layout.sub(subset).total_dim
        d_keep = layout.total_dim // d_e
        dim_a = int(rng.integers(1, d_e + 1))
        dim_s = d_keep // dim_a + int(rng.integers(1, 3))
        with pytest.raises(DimensionBoundError):
            generate_code(layout, subset, dim_s, dim_a, seed=rng)
        code, _ = generate_code(layout, subset, d_keep // dim_a, dim_a, seed=rng)
        d = decompose(code, subset)
        assert d.dim_r * d.dim_a <= d.dim_kept
