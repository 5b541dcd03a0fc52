"""Command-line experiment runner.

Every run writes one JSON report ``{"command", "config", "rows", "verdict",
"probes", "notes"}`` (stdout unless ``--output`` is given) and optionally a
CSV of the rows.  Exit codes: 0 pass, 1 verdict failed, 2 invalid
configuration, 3 internal check failed.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import constructions as cons
from . import groups, lifts, linalg, spaces, tensor
from .spaces import INF, HostSpace

COMMANDS = ("verify-diagonal", "irreducible", "certify-a", "converge", "construct")
GROUP_KINDS = ("default", "monomial", "cyclic_monomial", "signs", "auto", "file")
HOST_KINDS = ("lp", "dissection", "lorentz")
OPERATORS = ("harmonic-diag", "projection", "random-compact")
MODELS = ("direct-sum", "cutdown", "ideal", "hyperplane")

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_INTERNAL = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    command: str
    n: int = 3
    group: str = "default"
    generators_file: str | None = None
    host: str = "lp"
    p: float = 2.0
    dim: int = 8
    weights: list | None = None
    schedule: list = field(default_factory=list)
    operator: str = "harmonic-diag"
    rank: int | None = None
    model: str = "direct-sum"
    m: int = 2
    k: int = 2
    seed: int = 0
    tolerance: float = 1e-9
    output: str | None = None
    csv: str | None = None

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.group not in GROUP_KINDS:
            raise ConfigError(f"unknown group kind {self.group!r}")
        if self.group == "file" and not self.generators_file:
            raise ConfigError("group 'file' needs generators_file")
        if self.host not in HOST_KINDS:
            raise ConfigError(f"unknown host kind {self.host!r}")
        if self.operator not in OPERATORS:
            raise ConfigError(f"unknown operator {self.operator!r}")
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}")
        self.p = parse_exponent(self.p)
        for name in ("n", "dim", "m", "k", "seed"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(f"{name} must be an integer")
        if self.n < 1 or self.dim < 1 or self.m < 1 or self.k < 0:
            raise ConfigError("n, dim, m must be positive and k nonnegative")
        self.schedule = [int(s) for s in self.schedule]
        if any(s < 1 for s in self.schedule):
            raise ConfigError("schedule entries must be positive")
        if not self.tolerance > 0:
            raise ConfigError("tolerance must be positive")

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["p"] = "inf" if self.p == INF else self.p
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def parse_exponent(p) -> float:
    if isinstance(p, str):
        if p.strip().lower() in ("inf", "infinity"):
            return INF
        try:
            p = float(p)
        except ValueError:
            raise ConfigError(f"bad exponent {p!r}") from None
    if isinstance(p, bool) or not isinstance(p, (int, float)):
        raise ConfigError(f"bad exponent {p!r}")
    p = float(p)
    if not 1 <= p <= INF:
        raise ConfigError(f"exponent {p} outside [1, inf]")
    return p


# --- serialization ----------------------------------------------------------------


def _plain(x: Any) -> Any:
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return x


def _format_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    text = format(x, ".17g")
    return text if any(ch in text for ch in ".en") else text + ".0"


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float written to 17 significant digits and
    non-finite floats as null."""
    obj = _plain(obj)
    pad, inner = " " * (indent * _level), " " * (indent * (_level + 1))
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return json.dumps(obj)
    if isinstance(obj, float):
        return _format_float(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        items = [inner + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def rows_to_csv(rows: Sequence[dict]) -> str:
    if not rows:
        return ""
    cols = [k for k, v in rows[0].items() if not isinstance(v, (dict, list))]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for r in rows:
        cells = []
        for c in cols:
            v = _plain(r.get(c))
            cells.append(_format_float(v) if isinstance(v, float) else ("" if v is None else v))
        writer.writerow(cells)
    return buf.getvalue()


# --- experiment pieces ---------------------------------------------------------------


DEFAULT_GROUPS = {"certify-a": "cyclic_monomial", "converge": "auto"}


def build_group(cfg: ExperimentConfig, n: int) -> groups.MatrixGroup:
    """The configured group on n; ``default`` means monomial, except
    cyclic_monomial for certify-a and ``auto`` for converge."""
    kind = DEFAULT_GROUPS.get(cfg.command, "monomial") if cfg.group == "default" else cfg.group
    if kind == "file":
        try:
            G = groups.load_group_spec(cfg.generators_file)
        except (OSError, KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read group spec: {exc}") from None
        if G.n != n:
            raise ConfigError(f"group spec has n={G.n}, expected {n}")
        return G
    if kind == "signs":
        return groups.sign_group(n)
    if kind == "auto":
        return groups.smallest_named_group(n)
    return groups.make_group(kind, n=n)


def lorentz_weights(dim: int, weights) -> list[float]:
    return list(weights) if weights else [k**-0.5 for k in range(1, dim + 1)]


def _verdict_report(cfg: ExperimentConfig, rows: list[dict], verdict: bool, probes: dict | None = None, notes=()) -> dict:
    return {
        "command": cfg.command,
        "config": cfg.to_dict(),
        "rows": rows,
        "verdict": "pass" if verdict else "fail",
        "probes": probes or {},
        "notes": list(notes),
    }


def run_verify_diagonal(cfg: ExperimentConfig) -> dict:
    G = build_group(cfg, cfg.n)
    d = tensor.group_diagonal(G)
    irreducible = groups.is_irreducible(G)
    equal = tensor.coordinates_equal(d, tensor.canonical_diagonal(cfg.n))
    checks = tensor.diagonal_checks(d)
    row = {
        "n": cfg.n,
        "group": G.name,
        "group_order": len(G),
        "irreducible": irreducible,
        "equals_canonical": equal,
        **checks,
        "projective_upper_spectral": tensor.projective_upper(d),
    }
    ok = irreducible and equal and all(checks.values())
    if cfg.n <= 4:
        u, nullity = tensor.unique_bidiagonal(cfg.n, return_nullity=True)
        row["unique_solution_nullity"] = nullity
        row["unique_equals_canonical"] = tensor.coordinates_equal(u, tensor.canonical_diagonal(cfg.n))
        ok = ok and row["unique_equals_canonical"]
    return _verdict_report(cfg, [row], ok)


def run_irreducible(cfg: ExperimentConfig) -> dict:
    G = build_group(cfg, cfg.n)
    rank = groups.span_rank(G)
    row = {"n": G.n, "group": G.name, "group_order": len(G), "span_rank": rank, "irreducible": rank == G.n**2}
    return _verdict_report(cfg, [row], row["irreducible"])


def _schedule(cfg: ExperimentConfig, default: list[int]) -> list[int]:
    sched = cfg.schedule or default
    if any(a > b for a, b in zip(sched, sched[1:])):
        raise ConfigError("schedule must be nondecreasing")
    if max(sched) > cfg.dim:
        raise ConfigError("schedule entries cannot exceed dim")
    return sched


def run_certify_a(cfg: ExperimentConfig) -> dict:
    sched = _schedule(cfg, list(range(1, cfg.dim + 1)))
    pairs = []
    if cfg.host == "lp":
        for n in sched:
            pairs.append((lifts.make_system("lp_truncation", p=cfg.p, dim=cfg.dim, n=n), build_group(cfg, n)))
    elif cfg.host == "lorentz":
        if cfg.p == INF:
            raise ConfigError("lorentz hosts need finite p")
        w = lorentz_weights(cfg.dim, cfg.weights)
        for n in sched:
            pairs.append((lifts.make_system("lorentz", weights=w, p=cfg.p, n=n), build_group(cfg, n)))
    else:
        atoms = [Fraction(1, cfg.dim)] * cfg.dim if not cfg.weights else [Fraction(w).limit_denominator(10**6) for w in cfg.weights]
        chain = lifts.dyadic_chain(atoms, cfg.dim - 1)
        for n in sched:
            pairs.append((lifts.make_system("dissection", p=cfg.p, atom_weights=atoms, cells=chain[n - 1]), build_group(cfg, n)))
    try:
        report = lifts.certify_A(pairs, seed=cfg.seed, tol=cfg.tolerance)
    except lifts.ReducibleGroupError as exc:
        raise ConfigError(str(exc)) from None
    rows = [r.to_dict() for r in report.rows]
    return _verdict_report(cfg, rows, report.verdict, report.probes, report.notes)


def make_operator(cfg: ExperimentConfig) -> np.ndarray:
    dim = cfg.dim
    if cfg.operator == "harmonic-diag":
        F = linalg.zeros(dim, dim)
        for i in range(dim):
            F[i, i] = Fraction(1, i + 1)
        return F
    if cfg.operator == "projection":
        rank = cfg.rank if cfg.rank is not None else dim // 2
        return cons.block_projection(dim, 0, rank)
    rng = np.random.default_rng(cfg.seed)
    i = np.arange(1, dim + 1)
    return rng.standard_normal((dim, dim)) / (i[:, None] + i[None, :])


def run_converge(cfg: ExperimentConfig) -> dict:
    if cfg.host != "lp":
        raise ConfigError("converge runs on lp hosts")
    sched = _schedule(cfg, [n for n in (2, 4, 8, 16, 32) if n <= cfg.dim])
    host = HostSpace.lp(cfg.p, cfg.dim)
    F = make_operator(cfg)
    rows = []
    for n in sched:
        G = build_group(cfg, n)
        L = lifts.Lift(lifts.make_system("lp_truncation", p=cfg.p, dim=cfg.dim, n=n))
        d = cons.approx_diagonal(L, G)
        rep = cons.defects(d, F, host, n=n, seed=cfg.seed)
        rows.append({"n": n, "group": G.name, "group_order": len(G), **rep.to_dict()})
    tol = cfg.tolerance
    ok = all(
        b[key] <= a[key] + tol for a, b in zip(rows, rows[1:]) for key in ("pi_defect", "commutator_bound")
    )
    probes = {"operator": cfg.operator, "seed": cfg.seed, "rank": cfg.rank if cfg.operator == "projection" else None}
    return _verdict_report(cfg, rows, ok, probes)


def _construct_rows(model: str, m: int, k: int) -> list[dict]:
    n = m + k
    rows = []
    if model in ("direct-sum", "hyperplane"):
        d11 = cons.embed(tensor.canonical_diagonal(m), n, 0)
        c = cons.standard_c(m, k)
        d = cons.direct_sum_diagonal(m, k, d11, c)
        rows.append({
            "model": "direct-sum", "m": m, "k": k, "terms": len(d),
            "is_diagonal_std": tensor.is_diagonal(d, "std"),
            "pi_is_identity": linalg.equal(tensor.pi(d), linalg.identity(n)),
        })
    if model in ("cutdown", "hyperplane"):
        c = cons.standard_c(m, k)
        d = cons.cutdown_diagonal(tensor.canonical_diagonal(n), m, k, c)
        rows.append({
            "model": "cutdown", "m": m, "k": k, "terms": len(d),
            "is_diagonal_std": tensor.is_diagonal(d, "std"),
            "pi_is_identity": linalg.equal(tensor.pi(d), linalg.identity(m)),
        })
    if model == "ideal":
        B = cons.BlockAlgebra(m, k)
        dA = B.diagonal()
        for which in (0, 1) if k else (0,):
            e = B.ideal_unit(which)
            d = cons.ideal_diagonal(dA, e)
            rows.append({
                "model": "ideal", "a": m, "b": k, "ideal": which, "terms": len(d),
                "is_diagonal_relative": tensor.is_diagonal_relative(d, B.ideal_basis(which), e, "both"),
            })
    return rows


def run_construct(cfg: ExperimentConfig) -> dict:
    m, k = (1, 1) if cfg.model == "hyperplane" else (cfg.m, cfg.k)
    rows = _construct_rows(cfg.model, m, k)
    ok = all(v for r in rows for key, v in r.items() if key.startswith(("is_", "pi_")))
    notes = ["m=1, k=1: the hyperplane model (one-dimensional complement)"] if (m, k) == (1, 1) else []
    return _verdict_report(cfg, rows, ok, notes=notes)


RUNNERS = {
    "verify-diagonal": run_verify_diagonal,
    "irreducible": run_irreducible,
    "certify-a": run_certify_a,
    "converge": run_converge,
    "construct": run_construct,
}


def run(cfg: ExperimentConfig) -> tuple[int, dict]:
    """Execute one experiment and write its artifacts."""
    report = RUNNERS[cfg.command](cfg)
    text = dumps(report) + "\n"
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)
    if cfg.csv:
        Path(cfg.csv).write_text(rows_to_csv(report["rows"]))
    return (EXIT_PASS if report["verdict"] == "pass" else EXIT_FAIL), report


# --- argument parsing ---------------------------------------------------------------------


def _int_list(s: str) -> list[int]:
    try:
        return [int(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None


def _float_list(s: str) -> list[float]:
    try:
        return [float(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}") from None


def _add_common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="JSON config file; explicit flags override it")
    p.add_argument("--n", type=int, default=S)
    p.add_argument("--group", choices=GROUP_KINDS, default=S)
    p.add_argument("--generators-file", dest="generators_file", default=S)
    p.add_argument("--host", choices=HOST_KINDS, default=S)
    p.add_argument("--p", default=S, help="exponent; 'inf' allowed")
    p.add_argument("--dim", type=int, default=S)
    p.add_argument("--weights", type=_float_list, default=S)
    p.add_argument("--schedule", type=_int_list, default=S)
    p.add_argument("--operator", choices=OPERATORS, default=S)
    p.add_argument("--rank", type=int, default=S)
    p.add_argument("--model", choices=MODELS, default=S)
    p.add_argument("--m", type=int, default=S)
    p.add_argument("--k", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--tolerance", type=float, default=S)
    p.add_argument("--output", default=S, help="JSON report path (default: stdout)")
    p.add_argument("--csv", default=S, help="also write the rows as CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="approxdiag", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "verify-diagonal": "group average vs canonical diagonal, exactly",
        "irreducible": "exact span-rank test for a group",
        "certify-a": "strong-convergence residuals and lifted group norms",
        "converge": "defects of lifted group averages along a schedule",
        "construct": "direct-sum, cut-down and ideal diagonal models",
    }
    for name in COMMANDS:
        _add_common(sub.add_parser(name, help=helps[name]))
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    values = vars(args).copy()
    data: dict = {}
    path = values.pop("config", None)
    if path:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        if data.get("command", values["command"]) != values["command"]:
            raise ConfigError(f"config is for {data['command']!r}, not {values['command']!r}")
    data.update(values)
    return ExperimentConfig.from_dict(data)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        code, _ = run(cfg)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (tensor.InternalCheckError, AssertionError) as exc:
        print(f"internal check failed: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return code


if __name__ == "__main__":
    sys.exit(main())
