"""Correctability deciders, structure decompositions and recovery channels.

For a code ``S`` and a site subset ``E`` the following are checked
independently and are expected to agree:

* the reference-state factorization ``rho^{QE} = rho^Q (x) rho^E``,
* vanishing mutual information ``I(Q:E)``,
* the Knill-Laflamme conditions for the erasure Kraus set,
* the constructive decomposition ``|i~> = (U (x) I_E)(|i>_R (x) |psi>_AE)``,
* an explicit recovery round trip.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .channels import (
    Channel,
    KrausSet,
    PartialReplacerChannel,
    ReplacerChannel,
    erasure_kraus_set,
    partial_replacer_family,
    partial_replacer_kraus_set,
)
from .codes import CodeFormatError, CodeSubspace, decode_complex, encode_complex
from .tensor import (
    DEFAULT_TOL,
    RANK_TOL,
    LayoutLike,
    SystemLayout,
    as_layout,
    canonical_basis,
    check_subset,
    embed_operator,
    from_bipartite,
    hermitian_eig,
    max_abs,
    partial_trace,
    random_density,
    schmidt,
    to_bipartite,
    von_neumann_entropy,
)

DECOMPOSITION_SCHEMA = "replacer-lab/decomposition@1"
CONDITIONS = (
    "separability",
    "mutual_information",
    "knill_laflamme",
    "decomposition",
    "recovery_roundtrip",
)


class NotCorrectable(Exception):
    """The code is not correctable for replacers on the given subset."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class DegenerateCodeword(NotCorrectable):
    """Code basis states have different Schmidt ranks across the cut."""


class InternalConsistencyError(RuntimeError):
    """Deciders that must agree by theorem disagreed."""


class Verdict(NamedTuple):
    passed: bool
    residual: float


def _bipartite_basis(code: CodeSubspace, subset: Sequence[int]) -> np.ndarray:
    """Code basis as an array ``(k, dim kept, dim E)``."""
    d_e = code.layout.sub(subset).total_dim
    return np.array([to_bipartite(v, code.layout, subset) for v in code.basis]).reshape(
        code.dim, -1, d_e
    )


@dataclass(frozen=True)
class StructureDecomposition:
    """``|i~> = (U (x) I_E)(|i>_R (x) |psi>_AE)`` with ``U`` an isometry ``R(x)A -> kept``.

    ``isometry`` columns are ordered ``(i, a)`` with ``a`` fastest; ``psi``
    is a vector on ``A (x) E``; ``gamma`` holds the eigenvalues of the
    ancilla state in descending order.
    """

    layout: SystemLayout
    subset: tuple[int, ...]
    dim_r: int
    dim_a: int
    isometry: np.ndarray = field(repr=False)
    gamma: np.ndarray
    psi: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)

    @property
    def dim_e(self) -> int:
        return self.layout.sub(self.subset).total_dim

    @property
    def dim_kept(self) -> int:
        return self.layout.total_dim // self.dim_e

    def gamma_matrix(self) -> np.ndarray:
        """The ancilla state ``Tr_E |psi><psi|``."""
        m = self.psi.reshape(self.dim_a, self.dim_e)
        return m @ m.conj().T

    def sigma_ae(self) -> np.ndarray:
        return np.kron(self.gamma_matrix(), self.sigma)

    def codewords(self) -> np.ndarray:
        """Rows ``(U (x) I)(|i> (x) |psi>)`` in the original site order."""
        u = self.isometry.reshape(self.dim_kept, self.dim_r, self.dim_a)
        m = self.psi.reshape(self.dim_a, self.dim_e)
        return np.array(
            [from_bipartite((u[:, i, :] @ m).reshape(-1), self.layout, self.subset) for i in range(self.dim_r)]
        )

    def isometry_residual(self) -> float:
        u = self.isometry
        return max_abs(u.conj().T @ u - np.eye(u.shape[1]))

    def reconstruction_residual(self, code: CodeSubspace) -> float:
        """``max_i || |i~> - (U (x) I)(|i> (x) |psi>) ||`` against ``code``'s basis."""
        diff = self.codewords() - code.basis
        return float(np.linalg.norm(diff, axis=1).max())

    def expectation(self, x_e: np.ndarray) -> complex:
        """``<psi| I_A (x) X_E |psi>``."""
        op = np.kron(np.eye(self.dim_a), x_e)
        return complex(np.vdot(self.psi, op @ self.psi))

    def to_dict(self) -> dict:
        return {
            "schema": DECOMPOSITION_SCHEMA,
            "dims": list(self.layout.dims),
            "E": list(self.subset),
            "dimR": self.dim_r,
            "dimA": self.dim_a,
            "U": encode_complex(self.isometry),
            "Gamma": [float(g) for g in self.gamma],
            "psi": encode_complex(self.psi),
            "sigma": encode_complex(self.sigma),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StructureDecomposition":
        try:
            layout = SystemLayout(tuple(data["dims"]))
            subset = check_subset(data["E"], layout.n)
            d_e = layout.sub(subset).total_dim
            sigma = (
                decode_complex(data["sigma"], 2) if "sigma" in data else np.eye(d_e) / d_e
            )
            return cls(
                layout=layout,
                subset=subset,
                dim_r=int(data["dimR"]),
                dim_a=int(data["dimA"]),
                isometry=decode_complex(data["U"], 2),
                gamma=np.array(data["Gamma"], dtype=float),
                psi=decode_complex(data["psi"], 1),
                sigma=sigma,
            )
        except KeyError as exc:
            raise CodeFormatError(f"decomposition document missing {exc}") from exc

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "StructureDecomposition":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# -- deciders --------------------------------------------------------------


def reference_marginals(code: CodeSubspace, subset: Sequence[int]):
    """``(rho^{QE}, rho^Q, rho^E)`` for ``|phi> = k^{-1/2} sum_i |i>_Q |i~>``."""
    subset = check_subset(subset, code.layout.n)
    t = _bipartite_basis(code, subset)
    k, _, d_e = t.shape
    rho_qe = np.einsum("ixe,jxf->iejf", t, t.conj()).reshape(k * d_e, k * d_e) / code.dim
    r = rho_qe.reshape(k, d_e, k, d_e)
    return rho_qe, np.einsum("iaja->ij", r), np.einsum("iaib->ab", r)


def check_separability(code: CodeSubspace, subset: Sequence[int], tol: float = DEFAULT_TOL) -> Verdict:
    """Does the reference state satisfy ``rho^{QE} = rho^Q (x) rho^E``?"""
    rho_qe, rho_q, rho_e = reference_marginals(code, subset)
    residual = max_abs(rho_qe - np.kron(rho_q, rho_e))
    return Verdict(residual <= tol, residual)


class EntropyTerms(NamedTuple):
    h_q: float
    h_e: float
    h_qe: float

    @property
    def mutual_information(self) -> float:
        return self.h_q + self.h_e - self.h_qe


def entropy_terms(code: CodeSubspace, subset: Sequence[int]) -> EntropyTerms:
    rho_qe, rho_q, rho_e = reference_marginals(code, subset)
    return EntropyTerms(
        von_neumann_entropy(rho_q), von_neumann_entropy(rho_e), von_neumann_entropy(rho_qe)
    )


def mutual_information(code: CodeSubspace, subset: Sequence[int]) -> float:
    """``I(Q:E) = H(Q) + H(E) - H(QE)`` in nats; zero exactly for correctable codes."""
    return entropy_terms(code, subset).mutual_information


class KLResult(NamedTuple):
    passed: bool
    constants: np.ndarray
    residual: float


def knill_laflamme_check(code: CodeSubspace, kraus: KrausSet, tol: float = DEFAULT_TOL) -> KLResult:
    """Test ``<i~|M_a^dag M_b|j~> = c_ab delta_ij`` for every pair of Kraus operators.

    ``constants`` is the matrix ``c``; it is Hermitian PSD and has unit trace
    when the Kraus set is trace preserving.
    """
    ops = kraus.operators
    if ops.shape[1] != code.layout.total_dim:
        raise ValueError("Kraus operators do not act on the code's space")
    m = ops.shape[0]
    # columns (a, i) hold M_a |i~>; one Hermitian product gives every block
    w = (ops @ code.matrix).transpose(1, 0, 2).reshape(ops.shape[1], m * code.dim)
    gram = (w.conj().T @ w).reshape(m, code.dim, m, code.dim)
    c = np.trace(gram, axis1=1, axis2=3) / code.dim
    residual = max_abs(gram - c[:, None, :, None] * np.eye(code.dim)[None, :, None, :])
    return KLResult(residual <= tol, c, residual)


def kl_scaling_residual(
    code: CodeSubspace, ch: PartialReplacerChannel, tol: float = DEFAULT_TOL
) -> float:
    """Check ``c' = dim(E) / (1 - lam) * c`` on the non-identity block.

    ``c`` are the Knill-Laflamme constants of the partial-replacer Kraus set
    restricted to its Weyl operators, ``c'`` those of the unscaled family
    ``I (x) sqrt(sigma) X(l) Z(k)``.  Returns the max entrywise mismatch.
    """
    c = knill_laflamme_check(code, partial_replacer_kraus_set(ch, tol), tol).constants[1:, 1:]
    bare = knill_laflamme_check(code, KrausSet(partial_replacer_family(ch, tol)), tol).constants
    return max_abs(bare - ch.dim_e / (1 - ch.lam) * c)


class _Candidate(NamedTuple):
    decomposition: StructureDecomposition
    residual: float
    degenerate: bool


def _anchored_candidate(
    code: CodeSubspace, subset: Sequence[int], sigma: np.ndarray | None, rank_tol: float
) -> _Candidate:
    layout = code.layout
    t = _bipartite_basis(code, subset)
    k, d_keep, d_e = t.shape
    # (1) Schmidt data of the first codeword fixes A, Gamma and psi
    sch = schmidt(code.basis[0], layout, subset, rank_tol)
    s, right = sch.coeffs, sch.right
    dim_a = len(s)
    psi = np.einsum("k,ka->ka", s, np.eye(dim_a)).astype(complex)
    psi = (psi @ right.T).reshape(-1)
    ranks = [len(schmidt(v, layout, subset, rank_tol).coeffs) for v in code.basis]
    # (2) U(|i>|k>) = s_k^{-1} (I (x) <v_k|) |i~>
    cols = np.einsum("ixe,ek->ixk", t, right.conj()) / s
    u = cols.transpose(1, 0, 2).reshape(d_keep, k * dim_a)
    if sigma is None:
        sigma = np.eye(d_e, dtype=complex) / d_e
    d = StructureDecomposition(layout, tuple(subset), k, dim_a, u, s**2, psi, sigma)
    # (3) verification
    residual = max(d.isometry_residual(), d.reconstruction_residual(code))
    return _Candidate(d, residual, len(set(ranks)) > 1)


def decompose(
    code: CodeSubspace,
    subset: Sequence[int],
    tol: float = DEFAULT_TOL,
    sigma: np.ndarray | None = None,
    rank_tol: float = RANK_TOL,
) -> StructureDecomposition:
    """Construct ``(R, A, U, Gamma_A, |psi>_AE)`` for the code and subset.

    The first basis vector's Schmidt decomposition across kept:E gives
    ``dim A`` (its rank), ``Gamma_A`` (squared coefficients) and
    ``|psi>_AE = sum_k s_k |k>_A |v_k>_E``.  Each column
    ``U(|i>|k>) = s_k^{-1} (I (x) <v_k|)|i~>`` is then read off and the result
    is only returned if ``U`` is an isometry and reproduces every basis vector.

    Raises:
        DegenerateCodeword: basis states have different Schmidt ranks.
        NotCorrectable: the verification step fails.
    """
    subset = check_subset(subset, code.layout.n)
    cand = _anchored_candidate(code, subset, sigma, rank_tol)
    if cand.degenerate:
        raise DegenerateCodeword(
            "code basis states have different Schmidt ranks across the cut", cand.residual
        )
    if cand.residual > tol:
        raise NotCorrectable(
            f"decomposition does not verify (residual {cand.residual:.3g} > {tol:g})",
            cand.residual,
        )
    d = cand.decomposition
    assert d.dim_r * d.dim_a <= d.dim_kept
    return d


# -- recovery ----------------------------------------------------------------


def _bipartite_index(layout: SystemLayout, subset: Sequence[int]) -> np.ndarray:
    return to_bipartite(np.arange(layout.total_dim), layout, subset)


@dataclass(frozen=True)
class RecoveryChannel:
    """``V^dag . Tr_A . U^dag . Tr_E`` completed to a trace-preserving map.

    Weight outside the range of ``U`` is sent to the fixed state
    ``completion`` (by default the first codeword).
    """

    decomposition: StructureDecomposition
    completion: np.ndarray = field(repr=False)

    @property
    def encoder(self) -> np.ndarray:
        return self.decomposition.codewords().T

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        d = self.decomposition
        tau = partial_trace(rho, d.layout, d.subset)
        mu = (d.isometry.conj().T @ tau @ d.isometry).reshape(d.dim_r, d.dim_a, d.dim_r, d.dim_a)
        rho_r = np.einsum("iaja->ij", mu)
        enc = self.encoder
        leaked = np.trace(tau).real - np.trace(rho_r).real
        return enc @ rho_r @ enc.conj().T + leaked * self.completion

    def kraus_set(self) -> KrausSet:
        d = self.decomposition
        enc = self.encoder
        n = d.layout.total_dim
        idx = _bipartite_index(d.layout, d.subset)
        u = d.isometry.reshape(d.dim_kept, d.dim_r, d.dim_a)
        ops = []

        def embed(m_bip: np.ndarray) -> np.ndarray:
            out = np.zeros((n, n), dtype=complex)
            out[:, idx] = m_bip
            return out

        eye_e = np.eye(d.dim_e)
        for a in range(d.dim_a):
            left = enc @ u[:, :, a].conj().T  # n x kept
            for e in range(d.dim_e):
                ops.append(embed(np.kron(left, eye_e[e])))
        leak = np.eye(d.dim_kept) - d.isometry @ d.isometry.conj().T
        w, v = hermitian_eig(leak)
        q = v[:, w > 0.5]
        cw, cv = hermitian_eig(self.completion)
        for lam, vec in zip(cw, cv.T):
            if lam <= RANK_TOL:
                continue
            for col in q.T:
                for e in range(d.dim_e):
                    ops.append(embed(np.sqrt(lam) * np.kron(np.outer(vec, col.conj()), eye_e[e])))
        return KrausSet(np.array(ops))


def build_recovery(
    decomposition: StructureDecomposition, completion: np.ndarray | None = None
) -> RecoveryChannel:
    if completion is None:
        first = decomposition.codewords()[0]
        completion = np.outer(first, first.conj())
    return RecoveryChannel(decomposition, np.asarray(completion, dtype=complex))


@dataclass(frozen=True)
class TransposeRecovery:
    """Petz recovery of ``Tr_E`` relative to the maximally mixed code state.

    Exact on the code whenever the code is correctable, and defined for any
    code, so it gives a meaningful round-trip residual when no structure
    decomposition exists.
    """

    code: CodeSubspace
    subset: tuple[int, ...]

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        layout = self.code.layout
        p = self.code.projector()
        ref = partial_trace(p / self.code.dim, layout, self.subset)
        w, v = hermitian_eig(ref)
        keep = w > RANK_TOL
        inv_half = (v[:, keep] / np.sqrt(w[keep])) @ v[:, keep].conj().T
        tau = partial_trace(rho, layout, self.subset)
        y = embed_operator_inverse(inv_half @ tau @ inv_half, layout, self.subset)
        out = p @ y @ p / self.code.dim
        leaked = np.trace(tau).real - np.trace(out).real
        first = self.code.basis[0]
        return out + leaked * np.outer(first, first.conj())


def embed_operator_inverse(op_kept: np.ndarray, layout: SystemLayout, subset: Sequence[int]) -> np.ndarray:
    """``op_kept (x) I_E`` back in site order."""
    d_e = layout.sub(subset).total_dim
    return from_bipartite(np.kron(op_kept, np.eye(d_e)), layout, subset)


class RecoveryCheck(NamedTuple):
    residual: float
    trace_error: float


def verify_recovery(
    code: CodeSubspace,
    channel: Channel,
    recovery,
    trials: int = 50,
    seed: int | np.random.Generator | None = 0,
) -> RecoveryCheck:
    """Max ``||R(E(rho~)) - rho~||`` over random mixed code states.

    Also reports the worst trace error of ``R`` on random full-space states.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    enc = code.matrix
    residual = trace_error = 0.0
    for _ in range(trials):
        rho = enc @ random_density(rng, code.dim) @ enc.conj().T
        residual = max(residual, max_abs(recovery(channel(rho)) - rho))
        full = random_density(rng, code.layout.total_dim)
        trace_error = max(trace_error, abs(np.trace(recovery(full)) - 1))
    return RecoveryCheck(float(residual), float(trace_error))


class ConstancyResult(NamedTuple):
    passed: bool
    value: complex
    spread: float
    psi_value: complex | None


def _spanning_states(code: CodeSubspace):
    yield from code.basis
    for i, j in itertools.combinations(range(code.dim), 2):
        for phase in (1, -1, 1j, -1j):
            yield (code.basis[i] + phase * code.basis[j]) / np.sqrt(2)


def expectation_constancy(
    code: CodeSubspace,
    subset: Sequence[int],
    x_e: np.ndarray,
    tol: float = DEFAULT_TOL,
    decomposition: StructureDecomposition | None = None,
) -> ConstancyResult:
    """Is ``<phi|I (x) X_E|phi>`` the same scalar for every code state?

    Evaluated on the basis and all pairwise superpositions with phases
    ``+-1, +-i``, which determine the compressed operator completely.  When
    a decomposition is available (or can be computed) the constant must also
    equal ``<psi|I_A (x) X_E|psi>``.
    """
    subset = check_subset(subset, code.layout.n)
    op = embed_operator(np.asarray(x_e, dtype=complex), code.layout, subset)
    values = np.array([np.vdot(s, op @ s) for s in _spanning_states(code)])
    spread = float(np.abs(values - values[0]).max())
    value = complex(values[0])
    if decomposition is None:
        try:
            decomposition = decompose(code, subset, tol)
        except NotCorrectable:
            decomposition = None
    psi_value = decomposition.expectation(x_e) if decomposition is not None else None
    passed = spread <= tol and (psi_value is None or abs(psi_value - value) <= tol)
    return ConstancyResult(passed, value, spread, psi_value)


# -- aggregate report --------------------------------------------------------


def classify(residual: float, tol: float) -> str:
    if residual <= tol:
        return "pass"
    if residual < 10 * tol:
        return "indeterminate"
    return "fail"


@dataclass
class ConditionResult:
    status: str
    residual: float
    detail: str = ""


@dataclass
class CorrectabilityReport:
    label: str
    subset: tuple[int, ...]
    tol: float
    conditions: dict[str, ConditionResult]
    decomposition: StructureDecomposition | None = None

    @property
    def overall(self) -> str:
        statuses = {c.status for c in self.conditions.values()}
        if statuses == {"pass"}:
            return "correctable"
        if statuses == {"fail"}:
            return "not_correctable"
        return "disagreement"

    @property
    def correctable(self) -> bool | None:
        return {"correctable": True, "not_correctable": False}.get(self.overall)

    def raise_on_disagreement(self) -> None:
        if self.overall == "disagreement":
            detail = ", ".join(f"{k}={c.status}({c.residual:.3g})" for k, c in self.conditions.items())
            raise InternalConsistencyError(f"deciders disagree on {self.label} E={self.subset}: {detail}")

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "E": list(self.subset),
            "tol": self.tol,
            "overall": self.overall,
            "conditions": {
                k: {"status": c.status, "residual": c.residual, "detail": c.detail}
                for k, c in self.conditions.items()
            },
        }


def full_report(
    code: CodeSubspace,
    subset: Sequence[int],
    sigma: np.ndarray | None = None,
    tol: float = DEFAULT_TOL,
    trials: int = 20,
    seed: int | None = 0,
    lam: float | None = None,
) -> CorrectabilityReport:
    """Run all five deciders; the overall verdict is their conjunction.

    ``sigma`` (default maximally mixed) and ``lam`` choose the replacer or
    partial replacer used for the recovery round trip.  Disagreement is
    reported as ``overall == "disagreement"``, never resolved.
    """
    layout = code.layout
    subset = check_subset(subset, layout.n)
    d_e = layout.sub(subset).total_dim
    if sigma is None:
        sigma = np.eye(d_e, dtype=complex) / d_e
    channel: Channel
    if lam is None:
        channel = ReplacerChannel(layout, subset, sigma)
    else:
        channel = PartialReplacerChannel(layout, subset, lam, sigma)
    results: dict[str, ConditionResult] = {}

    sep = check_separability(code, subset, tol)
    results["separability"] = ConditionResult(classify(sep.residual, tol), sep.residual)

    terms = entropy_terms(code, subset)
    mi = terms.mutual_information
    results["mutual_information"] = ConditionResult(
        classify(max(mi, 0.0), tol),
        mi,
        f"H(Q)={terms.h_q:.12g} H(E)={terms.h_e:.12g} H(QE)={terms.h_qe:.12g}",
    )

    kl = knill_laflamme_check(code, erasure_kraus_set(layout, subset), tol)
    results["knill_laflamme"] = ConditionResult(classify(kl.residual, tol), kl.residual)

    cand = _anchored_candidate(code, subset, sigma, RANK_TOL)
    dec_status = "fail" if cand.degenerate else classify(cand.residual, tol)
    results["decomposition"] = ConditionResult(
        dec_status,
        cand.residual,
        f"dimA={cand.decomposition.dim_a}" + (" (degenerate codeword ranks)" if cand.degenerate else ""),
    )
    decomposition = cand.decomposition if dec_status == "pass" else None

    if decomposition is not None:
        recovery = build_recovery(decomposition)
        detail = "structure recovery"
    else:
        recovery = TransposeRecovery(code, subset)
        detail = "transpose recovery (no decomposition)"
    check = verify_recovery(code, channel, recovery, trials, seed)
    rec_residual = max(check.residual, check.trace_error)
    results["recovery_roundtrip"] = ConditionResult(classify(rec_residual, tol), rec_residual, detail)

    return CorrectabilityReport(code.label, subset, tol, results, decomposition)
