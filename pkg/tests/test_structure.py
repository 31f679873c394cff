import math

import numpy as np
import pytest

from replacer_lab.channels import (
    PartialReplacerChannel,
    ReplacerChannel,
    erasure_kraus_set,
    partial_replacer_kraus_set,
)
from replacer_lab.codes import CodeSubspace, generate_code, shared_tensor_factor
from replacer_lab.corpus import fixture
from replacer_lab.structure import (
    DegenerateCodeword,
    InternalConsistencyError,
    NotCorrectable,
    StructureDecomposition,
    build_recovery,
    check_separability,
    classify,
    decompose,
    entropy_terms,
    expectation_constancy,
    full_report,
    knill_laflamme_check,
    mutual_information,
    verify_recovery,
)
from replacer_lab.tensor import SystemLayout, random_density, random_isometry

SZ = np.diag([1.0, -1.0]).astype(complex)


class TestDecompose:
    @pytest.mark.parametrize("name", ["grassl4", "cgl_qutrit", "ququart", "ququart_as_3qubit"])
    def test_matches_stored_table(self, name):
        fx = fixture(name)
        dec = decompose(fx.code, fx.documented_e)
        assert dec.dim_a == fx.expected.dim_a
        np.testing.assert_allclose(dec.gamma, fx.expected.gamma, atol=1e-12)
        np.testing.assert_allclose(dec.isometry, fx.expected.isometry, atol=1e-12)
        assert dec.reconstruction_residual(fx.code) <= 1e-12

    def test_five_qubit(self):
        fx = fixture("five_qubit")
        dec = decompose(fx.code, (4, 5))
        assert (dec.dim_r, dec.dim_a) == (2, 4)
        np.testing.assert_allclose(dec.gamma, [0.25] * 4, atol=1e-12)
        assert dec.isometry_residual() <= 1e-12
        assert dec.reconstruction_residual(fx.code) <= 1e-12

    def test_degenerate_codeword(self):
        layout = SystemLayout((2, 2))
        # |00> is a product state, |01>+|10> has Schmidt rank 2
        code = CodeSubspace.from_vectors(layout, [[1, 0, 0, 0], [0, 1, 1, 0]])
        with pytest.raises(DegenerateCodeword):
            decompose(code, (2,))

    def test_not_correctable(self):
        with pytest.raises(NotCorrectable) as info:
            decompose(fixture("grassl4").code, (3, 4))
        assert info.value.residual > 1e-6

    def test_gauge_covariance(self):
        rng = np.random.default_rng(11)
        code, _ = generate_code((2, 3, 2), (3,), 2, 2, seed=rng)
        ref = decompose(code, (3,))
        phases = np.exp(2j * np.pi * rng.random(code.dim))
        rotated = CodeSubspace(code.layout, phases[:, None] * code.basis)
        dec = decompose(rotated, (3,))
        np.testing.assert_allclose(dec.gamma, ref.gamma, atol=1e-8)
        assert dec.reconstruction_residual(rotated) <= 1e-8
        # ancilla spectrum and the induced code projector are basis independent
        np.testing.assert_allclose(
            np.linalg.eigvalsh(dec.gamma_matrix()), np.linalg.eigvalsh(ref.gamma_matrix()), atol=1e-8
        )

    def test_generated_codes_round_trip(self):
        rng = np.random.default_rng(12)
        cases = [
            ((2, 2, 2), (1,), 2, 2),
            ((3, 3), (2,), 1, 3),
            ((2, 3, 2, 2), (1, 4), 1, 4),
            ((2, 3, 2, 2), (4,), 6, 2),
        ]
        for dims, subset, ds, da in cases:
            code, truth = generate_code(dims, subset, ds, da, seed=rng)
            dec = decompose(code, subset)
            assert dec.dim_a == da
            np.testing.assert_allclose(dec.gamma, truth.gamma, atol=1e-8)
            assert dec.dim_r * dec.dim_a <= dec.dim_kept

    def test_json_round_trip(self, tmp_path):
        dec = decompose(fixture("cgl_qutrit").code, (1,))
        path = tmp_path / "dec.json"
        dec.save(path)
        back = StructureDecomposition.load(path)
        assert back.subset == dec.subset and back.dim_a == dec.dim_a
        np.testing.assert_array_equal(back.isometry, dec.isometry)
        np.testing.assert_array_equal(back.psi, dec.psi)


class TestDeciders:
    def test_mutual_information_regression(self):
        # two maximally entangled qubits between the reference and E
        assert mutual_information(fixture("grassl4").code, (3, 4)) == pytest.approx(math.log(4), abs=1e-12)

    def test_entropy_terms_consistent(self):
        t = entropy_terms(fixture("cgl_qutrit").code, (1,))
        assert t.h_q == pytest.approx(math.log(3), abs=1e-12)
        assert abs(t.mutual_information) <= 1e-12

    def test_separability_and_kl_agree_on_fixture_tables(self):
        for name in ["grassl4", "cgl_qutrit", "ququart", "trivial_demo"]:
            fx = fixture(name)
            for subset in fx.expected_correctable:
                assert check_separability(fx.code, subset).passed
                assert knill_laflamme_check(fx.code, erasure_kraus_set(fx.code.layout, subset)).passed
            for subset in fx.expected_uncorrectable:
                assert not check_separability(fx.code, subset).passed
                assert not knill_laflamme_check(fx.code, erasure_kraus_set(fx.code.layout, subset)).passed

    def test_kl_constants_are_traces(self):
        fx = fixture("grassl4")
        kraus = erasure_kraus_set(fx.code.layout, (2,))
        res = knill_laflamme_check(fx.code, kraus)
        assert res.passed
        assert np.trace(res.constants).real == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("lam", [0.0, 0.3, 0.9])
    def test_partial_replacer_verdicts(self, lam):
        fx = fixture("cgl_qutrit")
        layout = fx.code.layout
        for subset, ok in [((1,), True), ((1, 2), False)]:
            d_e = layout.sub(subset).total_dim
            kraus = partial_replacer_kraus_set(PartialReplacerChannel(layout, subset, lam, np.eye(d_e) / d_e))
            assert knill_laflamme_check(fx.code, kraus).passed is ok

    def test_lambda_zero_matches_erasure(self):
        fx = fixture("grassl4")
        layout = fx.code.layout
        for subset in [(1,), (2, 3)]:
            d_e = layout.sub(subset).total_dim
            partial = knill_laflamme_check(fx.code, partial_replacer_kraus_set(
                PartialReplacerChannel(layout, subset, 0.0, np.eye(d_e) / d_e)
            ))
            bare = knill_laflamme_check(fx.code, erasure_kraus_set(layout, subset))
            assert partial.passed is bare.passed
            assert (partial.residual <= 1e-9) is (bare.residual <= 1e-9)

    def test_classify_bands(self):
        assert classify(1e-10, 1e-9) == "pass"
        assert classify(5e-9, 1e-9) == "indeterminate"
        assert classify(1e-7, 1e-9) == "fail"


class TestRecovery:
    def test_kraus_set_is_trace_preserving_and_matches(self):
        rng = np.random.default_rng(21)
        code, dec = generate_code((2, 3, 2), (1,), 2, 2, seed=rng)
        rec = build_recovery(dec)
        kraus = rec.kraus_set()
        assert kraus.is_trace_preserving()
        for _ in range(5):
            rho = random_density(rng, code.layout.total_dim)
            np.testing.assert_allclose(kraus.apply(rho), rec(rho), atol=1e-10)

    @pytest.mark.parametrize("name", ["grassl4", "cgl_qutrit", "five_qubit"])
    def test_round_trip_on_fixtures(self, name):
        fx = fixture(name)
        dec = decompose(fx.code, fx.documented_e)
        d_e = dec.dim_e
        sigma = random_density(np.random.default_rng(1), d_e)
        ch = ReplacerChannel(fx.code.layout, fx.documented_e, sigma)
        check = verify_recovery(fx.code, ch, build_recovery(dec), trials=10)
        assert check.residual <= 1e-10 and check.trace_error <= 1e-10

    def test_partial_replacer_round_trip(self):
        fx = fixture("ququart")
        dec = decompose(fx.code, (2,))
        ch = PartialReplacerChannel(fx.code.layout, (2,), 0.4, np.eye(4) / 4)
        assert verify_recovery(fx.code, ch, build_recovery(dec), trials=10).residual <= 1e-10

    def test_corrupted_isometry_is_detected(self):
        fx = fixture("grassl4")
        dec = decompose(fx.code, (4,))
        u = dec.isometry.copy()
        u[:, [0, 1]] = u[:, [1, 0]]
        bad = StructureDecomposition(**{**dec.__dict__, "isometry": u})
        assert bad.reconstruction_residual(fx.code) > 1e-3
        ch = ReplacerChannel(fx.code.layout, (4,), np.eye(2) / 2)
        assert verify_recovery(fx.code, ch, build_recovery(bad), trials=5).residual > 1e-3

    def test_random_isometry_corruption(self):
        rng = np.random.default_rng(22)
        code, dec = generate_code((2, 2, 2), (2,), 2, 2, seed=rng)
        bad = StructureDecomposition(**{**dec.__dict__, "isometry": random_isometry(rng, 4, 4)})
        assert bad.reconstruction_residual(code) > 1e-3


class TestConstancy:
    def test_identity(self):
        res = expectation_constancy(fixture("grassl4").code, (4,), np.eye(2))
        assert res.passed and res.value == pytest.approx(1.0)

    def test_sigma_z_on_correctable_site(self):
        res = expectation_constancy(fixture("grassl4").code, (4,), SZ)
        assert res.passed
        assert abs(res.value) <= 1e-12 and abs(res.psi_value) <= 1e-12

    def test_fails_on_uncorrectable_pair(self):
        code = fixture("cgl_qutrit").code
        # some matrix unit on E = {1, 2} must distinguish code states
        spreads = []
        for a in range(9):
            for b in range(9):
                unit = np.zeros((9, 9))
                unit[a, b] = 1
                spreads.append(expectation_constancy(code, (1, 2), unit).spread)
        assert max(spreads) > 1e-3

    def test_bilinear_in_operator(self):
        rng = np.random.default_rng(31)
        code, dec = generate_code((2, 3, 2), (2,), 2, 2, seed=rng)
        x = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        y = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        vx = expectation_constancy(code, (2,), x, decomposition=dec)
        vy = expectation_constancy(code, (2,), y, decomposition=dec)
        vs = expectation_constancy(code, (2,), 2 * x - 3j * y, decomposition=dec)
        assert vx.passed and vy.passed and vs.passed
        assert abs(vs.value - (2 * vx.value - 3j * vy.value)) <= 1e-10


class TestSharedFactor:
    def test_trivial_decomposition_gives_shared_factor(self):
        fx = fixture("trivial_demo")
        factor = shared_tensor_factor(fx.code, (3,))
        assert factor is not None
        np.testing.assert_allclose(factor, [2**-0.5, 2**-0.5], atol=1e-12)

    def test_entangled_code_has_none(self):
        assert shared_tensor_factor(fixture("grassl4").code, (4,)) is None

    def test_generated_product_psi(self):
        code, _ = generate_code((2, 2, 3), (3,), 2, 1, seed=5)
        assert shared_tensor_factor(code, (3,)) is not None


class TestReport:
    def test_sigma_independence(self):
        fx = fixture("cgl_qutrit")
        rng = np.random.default_rng(41)
        overall = {
            full_report(fx.code, (1,), sigma=random_density(rng, 3, rank=r), trials=3).overall for r in (1, 2, 3)
        }
        assert overall == {"correctable"}

    def test_report_dict(self):
        rep = full_report(fixture("ququart").code, (1,), trials=3)
        out = rep.to_dict()
        assert out["overall"] == "not_correctable"
        assert set(out["conditions"]) == {
            "separability", "mutual_information", "knill_laflamme", "decomposition", "recovery_roundtrip"
        }

    def test_raise_on_disagreement(self):
        rep = full_report(fixture("grassl4").code, (1,), trials=3)
        rep.raise_on_disagreement()
        rep.conditions["knill_laflamme"].status = "fail"
        assert rep.overall == "disagreement" and rep.correctable is None
        with pytest.raises(InternalConsistencyError):
            rep.raise_on_disagreement()
