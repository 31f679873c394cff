"""``replacer-lab`` command line interface.

Exit codes: 0 correctable / success, 1 not correctable, 2 decider
disagreement or indeterminate verdict, 3 input error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .channels import PartialReplacerChannel, ReplacerChannel, parse_sigma
from .codes import CodeSubspace, load_code, save_code
from .corpus import UnknownFixture, fixture, list_fixtures
from .stabilizer import (
    StabilizerGroup,
    cleaning_check,
    codewords_from_stabilizer,
    erasure_correctable_subset,
    logicals_on,
    parse_generator_list,
    scan_subsets,
)
from .structure import (
    NotCorrectable,
    StructureDecomposition,
    build_recovery,
    decompose,
    full_report,
    verify_recovery,
)
from .tensor import DEFAULT_TOL, SystemLayout, check_subset

EXIT_OK, EXIT_NOT_CORRECTABLE, EXIT_DISAGREEMENT, EXIT_INPUT = 0, 1, 2, 3
TOL_ENV = "REPLACER_LAB_TOL"
SCHEMA = "replacer-lab/{}@1"


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _num(x: float) -> float:
    return float(f"{x:.12g}") if math.isfinite(x) else x


def _round(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return [_num(obj.real), _num(obj.imag)]
    return obj


def _emit(args, kind: str, payload: dict, text: str) -> None:
    if args.format == "json":
        doc = {"schema": SCHEMA.format(kind), **payload}
        print(json.dumps(_round(doc), sort_keys=True, indent=1))
    else:
        print(text)


def _g(x: float) -> str:
    return f"{x:.12g}"


def _sites(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.replace(" ", "").split(",") if t)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad site list {text!r}") from exc


def _tolerance(args) -> float:
    if args.tol is not None:
        return args.tol
    raw = os.environ.get(TOL_ENV)
    if raw is None:
        return DEFAULT_TOL
    try:
        tol = float(raw)
    except ValueError as exc:
        raise InputError(f"{TOL_ENV}={raw!r} is not a number") from exc
    if not tol > 0:
        raise InputError(f"{TOL_ENV} must be positive")
    return tol


def _read_generators(args) -> list[str]:
    gens: list[str] = []
    for g in args.gen or []:
        gens.extend(parse_generator_list(g))
    if getattr(args, "gen_file", None):
        gens.extend(parse_generator_list(Path(args.gen_file).read_text(encoding="utf-8")))
    return gens


def _load_source(args) -> tuple[CodeSubspace, StabilizerGroup | None]:
    chosen = [bool(args.corpus), bool(args.code), bool(getattr(args, "gen", None) or getattr(args, "gen_file", None))]
    if sum(chosen) != 1:
        raise InputError("give exactly one of --corpus, --code or --gen/--gen-file")
    if args.corpus:
        fx = fixture(args.corpus)
        return fx.code, fx.stabilizer_group()
    if args.code:
        return load_code(args.code), None
    group = StabilizerGroup.from_strings(_read_generators(args))
    return codewords_from_stabilizer(group), group


def _subset(args, code: CodeSubspace) -> tuple[int, ...]:
    if args.E is None:
        raise InputError("--E is required")
    return check_subset(args.E, code.layout.n)


def _sigma(args, code: CodeSubspace, subset) -> np.ndarray:
    return parse_sigma(args.sigma, code.layout.sub(subset).total_dim)


def _ket(layout: SystemLayout, index: int) -> str:
    return "|" + "".join(str(d) for d in layout.digits(index)) + ">"


def format_vector(v: np.ndarray, layout: SystemLayout, eps: float = 1e-12) -> str:
    """Signed ket sum such as ``+0.5|000> -0.5|011>``."""
    terms = []
    for i in np.flatnonzero(np.abs(v) > eps):
        c = complex(v[i])
        if abs(c.imag) <= eps:
            coef = f"{c.real:+.12g}"
        else:
            coef = f"+({c.real:.12g}{c.imag:+.12g}j)"
        terms.append(coef + _ket(layout, int(i)))
    return " ".join(terms) if terms else "0"


def render_table(d: StructureDecomposition) -> str:
    kept = d.layout.sub(d.layout.complement(d.subset))
    lines = ["R  A  ->  kept sites " + ",".join(map(str, d.layout.complement(d.subset)))]
    for col in range(d.dim_r * d.dim_a):
        i, a = divmod(col, d.dim_a)
        lines.append(f"|{i}> |{a}>  ->  {format_vector(d.isometry[:, col], kept)}")
    return "\n".join(lines)


# -- subcommands ---------------------------------------------------------------


def cmd_check(args) -> int:
    tol = _tolerance(args)
    code, _ = _load_source(args)
    subset = _subset(args, code)
    report = full_report(code, subset, _sigma(args, code, subset), tol, args.trials, args.seed, args.lam)
    lines = [f"code {code.label}  E={list(subset)}  tol={tol:g}"]
    for name, c in report.conditions.items():
        lines.append(f"  {name:<20} {c.status:<14} residual={_g(c.residual)}  {c.detail}".rstrip())
    lines.append(f"overall: {report.overall}")
    payload = report.to_dict()
    payload["lambda"] = args.lam
    _emit(args, "check", payload, "\n".join(lines))
    return {"correctable": EXIT_OK, "not_correctable": EXIT_NOT_CORRECTABLE}.get(
        report.overall, EXIT_DISAGREEMENT
    )


def cmd_decompose(args) -> int:
    tol = _tolerance(args)
    code, _ = _load_source(args)
    subset = _subset(args, code)
    try:
        d = decompose(code, subset, tol, sigma=_sigma(args, code, subset))
    except NotCorrectable as exc:
        _emit(
            args, "decompose",
            {"label": code.label, "E": list(subset), "correctable": False, "residual": exc.residual, "error": str(exc)},
            f"not correctable: {exc}",
        )
        return EXIT_NOT_CORRECTABLE
    residual = d.reconstruction_residual(code)
    if residual > tol:  # re-verified before anything is written
        return EXIT_NOT_CORRECTABLE
    if args.out:
        d.save(args.out)
    text = "\n".join(
        [
            f"code {code.label}  E={list(subset)}  dimR={d.dim_r}  dimA={d.dim_a}",
            "Gamma = (" + ", ".join(_g(g) for g in d.gamma) + ")",
            render_table(d),
            "psi_AE = " + format_vector(d.psi, SystemLayout((d.dim_a, d.dim_e)) if d.dim_a > 1 else SystemLayout((d.dim_e,))),
            f"reconstruction residual {_g(residual)}  isometry residual {_g(d.isometry_residual())}",
        ]
    )
    payload = {
        "label": code.label,
        "correctable": True,
        "reconstruction_residual": residual,
        "isometry_residual": d.isometry_residual(),
        "decomposition": d.to_dict(),
    }
    _emit(args, "decompose", payload, text)
    return EXIT_OK


def cmd_recover(args) -> int:
    tol = _tolerance(args)
    code, _ = _load_source(args)
    subset = _subset(args, code)
    sigma = _sigma(args, code, subset)
    try:
        d = decompose(code, subset, tol, sigma=sigma)
    except NotCorrectable as exc:
        _emit(args, "recover", {"label": code.label, "E": list(subset), "error": str(exc)}, f"not correctable: {exc}")
        return EXIT_NOT_CORRECTABLE
    if args.lam is None:
        channel = ReplacerChannel(code.layout, subset, sigma)
    else:
        channel = PartialReplacerChannel(code.layout, subset, args.lam, sigma)
    check = verify_recovery(code, channel, build_recovery(d), args.trials, args.seed)
    ok = max(check.residual, check.trace_error) <= tol
    payload = {
        "label": code.label,
        "E": list(subset),
        "trials": args.trials,
        "seed": args.seed,
        "max_residual": check.residual,
        "trace_error": check.trace_error,
        "passed": ok,
    }
    text = (
        f"code {code.label}  E={list(subset)}  trials={args.trials}\n"
        f"max round-trip residual {_g(check.residual)}  trace error {_g(check.trace_error)}  "
        + ("ok" if ok else "FAILED")
    )
    _emit(args, "recover", payload, text)
    return EXIT_OK if ok else EXIT_NOT_CORRECTABLE


def cmd_scan(args) -> int:
    tol = _tolerance(args)
    code, group = _load_source(args)
    n = code.layout.n
    if not 0 <= args.k <= n:
        raise InputError(f"--k must lie in [0, {n}]")
    if group is not None:
        rows = scan_subsets(group, args.k)
        method = "stabilizer"
    else:
        from itertools import combinations

        rows = []
        for subset in combinations(range(1, n + 1), args.k):
            verdict = full_report(code, subset, tol=tol).correctable if subset else True
            rows.append((subset, verdict))
        method = "structure"
    count = sum(1 for _, v in rows if v)
    lines = [f"{'E':<16} correctable"] + [f"{str(list(s)):<16} {v}" for s, v in rows]
    lines.append(f"{count}/{len(rows)} correctable ({method})")
    payload = {
        "label": code.label,
        "k": args.k,
        "method": method,
        "rows": [{"E": list(s), "correctable": v} for s, v in rows],
        "correctable_count": count,
        "total": len(rows),
    }
    _emit(args, "scan", payload, "\n".join(lines))
    return EXIT_OK


def cmd_stabilizer(args) -> int:
    gens = _read_generators(args)
    if not gens:
        raise InputError("give generators with --gen or --gen-file")
    group = StabilizerGroup.from_strings(gens)
    payload: dict[str, Any] = {"generators": [str(g) for g in group.generators], "n": group.n, "k": group.n - group.r}
    lines = [f"stabilizer <{group}>  n={group.n}  logical qubits={group.n - group.r}"]
    status = EXIT_OK
    if args.correctable is not None:
        subset = check_subset(args.correctable, group.n)
        ok = erasure_correctable_subset(group, subset)
        payload["correctable"] = {"E": list(subset), "value": ok}
        lines.append(f"erasure on {list(subset)} correctable: {ok}")
        status = max(status, EXIT_OK if ok else EXIT_NOT_CORRECTABLE)
    if args.clean is not None:
        subset = check_subset(args.clean, group.n)
        res = cleaning_check(group, subset)
        payload["cleaning"] = {
            "E": list(subset),
            "passed": res.passed,
            "witness": str(res.witness) if res.witness else None,
            "centralizer_on_E": res.centralizer_on_e,
            "stabilizer_on_E": res.stabilizer_on_e,
            "logicals_on_E": [str(p) for p in logicals_on(group, subset)],
        }
        lines.append(
            f"cleaning on {list(subset)}: {'holds' if res.passed else 'fails'}"
            + (f", witness {res.witness}" if res.witness else "")
        )
        if res.witness:
            lines.append("logicals on E: " + " ".join(payload["cleaning"]["logicals_on_E"]))
        status = max(status, EXIT_OK if res.passed else EXIT_NOT_CORRECTABLE)
    _emit(args, "stabilizer", payload, "\n".join(lines))
    return status


def cmd_corpus(args) -> int:
    if args.action == "list":
        names = list_fixtures()
        rows = []
        for name in names:
            fx = fixture(name)
            rows.append({"name": name, "dims": list(fx.code.dims), "dim": fx.code.dim, "E": list(fx.documented_e)})
        text = "\n".join(f"{r['name']:<20} dims={r['dims']} dimS={r['dim']} E={r['E']}" for r in rows)
        _emit(args, "corpus", {"fixtures": rows}, text)
        return EXIT_OK
    if not args.name:
        raise InputError("corpus export needs a fixture name")
    fx = fixture(args.name)
    if args.out:
        save_code(fx.code, args.out)
        _emit(args, "corpus", {"exported": args.name, "path": str(args.out)}, f"wrote {args.out}")
    else:
        from .codes import code_to_dict

        print(json.dumps(code_to_dict(fx.code), indent=1))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--tol", type=float, default=None, help=f"tolerance (default ${TOL_ENV} or {DEFAULT_TOL:g})")

    source = _Parser(add_help=False)
    source.add_argument("--corpus", choices=list_fixtures())
    source.add_argument("--code", type=Path, help="CodeFile JSON")
    source.add_argument("--gen", action="append", help="comma-separated stabilizer generators")
    source.add_argument("--gen-file", type=Path, help="file with one generator per line")

    channel = _Parser(add_help=False)
    channel.add_argument("--E", type=_sites, help="comma-separated 1-based sites")
    channel.add_argument("--sigma", default="maximally_mixed", help="maximally_mixed | pure:[...] | JSON matrix")
    channel.add_argument("--lambda", dest="lam", type=float, default=None)
    channel.add_argument("--trials", type=int, default=20)
    channel.add_argument("--seed", type=int, default=0)

    parser = _Parser(prog="replacer-lab", description="Correctability of codes under replacer channels.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("check", parents=[common, source, channel], help="run all correctability deciders").set_defaults(func=cmd_check)
    p = sub.add_parser("decompose", parents=[common, source, channel], help="construct the structure decomposition")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_decompose)
    p = sub.add_parser("recover", parents=[common, source, channel], help="round-trip test of the recovery channel")
    p.set_defaults(func=cmd_recover, trials=50)
    p = sub.add_parser("scan", parents=[common, source], help="correctability of every size-k subset")
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=cmd_scan)
    p = sub.add_parser("stabilizer", parents=[common], help="stabilizer criterion and cleaning check")
    p.add_argument("--gen", action="append")
    p.add_argument("--gen-file", type=Path)
    p.add_argument("--clean", type=_sites)
    p.add_argument("--correctable", type=_sites)
    p.set_defaults(func=cmd_stabilizer)
    p = sub.add_parser("corpus", parents=[common], help="list or export built-in fixtures")
    p.add_argument("action", choices=("list", "export"))
    p.add_argument("name", nargs="?")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_corpus)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, UnknownFixture, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"replacer-lab: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
