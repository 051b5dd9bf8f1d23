"""Command-line front end.

Subcommands:

  curvature   evaluate a curvature operator at a point or over a grid
  rank        bracket-closure and two-form rank checks
  scenario    run comparison scenarios and write reports

Configuration files are minimal INI-style text (sections + key=value,
``#`` comments) with all expressions parsed by the expression grammar.
Reports are deterministic: floats are serialized with 17 significant
digits, keys and arrays have fixed order, and results are identical for
any ``--jobs`` value.

Exit codes: 0 success, 2 configuration error, 3 evaluation error,
4 missing frame metadata.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Optional, Sequence

from . import calculus as ca
from .calculus import CalculusError, CoordSystem, EvaluationError
from .core import (
    GridSpec,
    MissingFrames,
    ScalarField,
    SingularPoint,
    SubriemannianStructure,
    VectorFieldExpr,
    default_eps_sing,
    p_mean_curvature,
    p_mean_curvature_expr,
    conorm_sq_expr,
)
from .brackets import bracket_generate_rank, tangent_distribution_fields, two_form_rank
from .heisenberg import cylinder_structure, standard_structure, drift_graph_structure
from . import smp

__all__ = [
    "ConfigError",
    "ConfigDocument",
    "parse_config",
    "load_config",
    "format_number",
    "dumps_report",
    "scenario_to_config",
    "main",
]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_EVAL = 3
EXIT_FRAMES = 4


class ConfigError(Exception):
    """Malformed configuration; message carries the line number."""


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------


class ConfigDocument:
    """Parsed sections: structure, functions, fields, scenario."""

    def __init__(self):
        self.structure_raw: Optional[dict] = None
        self.functions: dict = {}
        self.fields_raw: dict = {}
        self.scenario_raw: Optional[dict] = None
        self._structure_cache = None

    # -- resolution -------------------------------------------------------

    def structure(self) -> SubriemannianStructure:
        if self.structure_raw is None:
            raise ConfigError("no [structure] section")
        if self._structure_cache is None:
            self._structure_cache = _build_structure(self.structure_raw)
        return self._structure_cache

    def function(self, name: str, coords: CoordSystem) -> ScalarField:
        if name not in self.functions:
            raise ConfigError(f"no [function {name}] section")
        raw = self.functions[name]
        if "expr" not in raw:
            raise ConfigError(f"function {name!r} has no expr")
        try:
            expr = ca.parse_expr(raw["expr"], coords)
        except CalculusError as exc:
            raise ConfigError(f"function {name!r}: {exc}") from exc
        box = _parse_box(raw["box"], len(coords)) if "box" in raw else None
        return ScalarField(expr, coords, box)

    def field(self, name: str, coords: CoordSystem) -> VectorFieldExpr:
        if name not in self.fields_raw:
            raise ConfigError(f"no [field {name}] section")
        raw = self.fields_raw[name]
        if "components" not in raw:
            raise ConfigError(f"field {name!r} has no components")
        comps = _parse_expr_list(raw["components"], coords, f"field {name}")
        if len(comps) != len(coords):
            raise ConfigError(
                f"field {name!r} has {len(comps)} components for "
                f"{len(coords)} coordinates"
            )
        return VectorFieldExpr(coords, comps)


def parse_config(text: str) -> ConfigDocument:
    doc = ConfigDocument()
    current: Optional[dict] = None
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"line {lineno}: unterminated section header")
            header = line[1:-1].strip()
            if header == "structure":
                doc.structure_raw = current = {}
            elif header == "scenario":
                doc.scenario_raw = current = {}
            elif header.startswith("function "):
                name = header[len("function ") :].strip()
                if not name:
                    raise ConfigError(f"line {lineno}: function section needs a name")
                doc.functions[name] = current = {}
            elif header.startswith("field "):
                name = header[len("field ") :].strip()
                if not name:
                    raise ConfigError(f"line {lineno}: field section needs a name")
                doc.fields_raw[name] = current = {}
            else:
                raise ConfigError(f"line {lineno}: unknown section [{header}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        if current is None:
            raise ConfigError(f"line {lineno}: key outside any section")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if len(value) >= 2 and value[0] == value[-1] == '"':
            value = value[1:-1]
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in current:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        current[key] = value
    return doc


def load_config(path: str) -> ConfigDocument:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def _parse_expr_list(value: str, coords: CoordSystem, where: str) -> list:
    out = []
    for part in value.split(","):
        part = part.strip()
        if not part:
            raise ConfigError(f"{where}: empty expression in list")
        try:
            out.append(ca.parse_expr(part, coords))
        except CalculusError as exc:
            raise ConfigError(f"{where}: {exc}") from exc
    return out


def _parse_box(value: str, expected: Optional[int] = None):
    intervals = []
    for part in value.split(","):
        part = part.strip()
        if ":" not in part:
            raise ConfigError(f"box interval {part!r} must be lo:hi")
        lo, hi = part.split(":", 1)
        try:
            intervals.append((float(lo), float(hi)))
        except ValueError as exc:
            raise ConfigError(f"bad box interval {part!r}") from exc
    if expected is not None and len(intervals) != expected:
        raise ConfigError(
            f"box has {len(intervals)} intervals, chart needs {expected}"
        )
    return tuple(intervals)


def _require_int(raw: dict, key: str, where: str) -> int:
    if key not in raw:
        raise ConfigError(f"{where}: missing {key}")
    try:
        return int(raw[key])
    except ValueError as exc:
        raise ConfigError(f"{where}: {key} must be an integer") from exc


def _build_structure(raw: dict) -> SubriemannianStructure:
    kind = raw.get("kind")
    if kind is None:
        raise ConfigError("[structure]: missing kind")
    # compact spellings: heisenberg(2), cylinder(1), graph_F(4)
    if kind.endswith(")") and "(" in kind:
        base, arg = kind[:-1].split("(", 1)
        kind = base.strip()
        raw = dict(raw)
        try:
            raw.setdefault("n" if kind != "graph_F" else "m", str(int(arg)))
        except ValueError as exc:
            raise ConfigError(f"[structure]: bad size in kind {raw['kind']!r}") from exc
    if kind == "heisenberg":
        return standard_structure(_require_int(raw, "n", "[structure]"))
    if kind == "cylinder":
        return cylinder_structure(_require_int(raw, "n", "[structure]"))
    if kind == "graph_F":
        m = _require_int(raw, "m", "[structure]")
        if "F" not in raw:
            raise ConfigError("[structure]: graph_F needs F = expr, expr, ...")
        chart = CoordSystem(tuple(f"x{j + 1}" for j in range(m)))
        F = _parse_expr_list(raw["F"], chart, "[structure] F")
        if len(F) != m:
            raise ConfigError(f"[structure]: F has {len(F)} components for m={m}")
        return drift_graph_structure(F, m)
    if kind == "custom":
        if "coords" not in raw:
            raise ConfigError("[structure]: custom needs coords = name, name, ...")
        names = tuple(s.strip() for s in raw["coords"].split(","))
        coords = CoordSystem(names)
        n = len(coords)
        cometric = [[None] * n for _ in range(n)]
        for key, value in raw.items():
            if not key.startswith("cometric."):
                continue
            parts = key.split(".")
            if len(parts) != 3:
                raise ConfigError(f"[structure]: bad cometric key {key!r}")
            try:
                l, k = int(parts[1]), int(parts[2])
            except ValueError as exc:
                raise ConfigError(f"[structure]: bad cometric key {key!r}") from exc
            if not (0 <= l < n and 0 <= k < n):
                raise ConfigError(f"[structure]: cometric index out of range in {key}")
            try:
                entry = ca.parse_expr(value, coords)
            except CalculusError as exc:
                raise ConfigError(f"[structure] {key}: {exc}") from exc
            cometric[l][k] = entry
            if cometric[k][l] is None:
                cometric[k][l] = entry
        for l in range(n):
            for k in range(n):
                if cometric[l][k] is None:
                    cometric[l][k] = ca.ZERO
        if "density" in raw:
            try:
                density = ca.parse_expr(raw["density"], coords)
            except CalculusError as exc:
                raise ConfigError(f"[structure] density: {exc}") from exc
        else:
            density = ca.ONE
        degeneracy = int(raw.get("degeneracy", 0))
        box = _parse_box(raw["box"], n) if "box" in raw else None
        try:
            return SubriemannianStructure(
                coords, cometric, density, degeneracy=degeneracy, domain_box=box
            )
        except ValueError as exc:
            raise ConfigError(f"[structure]: {exc}") from exc
    raise ConfigError(f"[structure]: unknown kind {kind!r}")


def _build_operator(doc: ConfigDocument, raw: dict):
    name = raw.get("operator")
    if name is None:
        raise ConfigError("[scenario]: missing operator")
    if name == "generic":
        S = doc.structure()
        p = Fraction(raw.get("p", "0"))
        graph_dir = S.dim - 1
        if "graph_dir" in raw:
            try:
                graph_dir = S.coords.index(raw["graph_dir"])
            except KeyError:
                raise ConfigError(
                    f"[scenario]: unknown graph_dir {raw['graph_dir']!r}"
                ) from None
        return smp.GenericOperator(S, p, graph_dir)
    if name == "graph_HF":
        S = doc.structure()
        if S.null_coform is None or S.dim < 2:
            raise ConfigError("[scenario]: graph_HF needs a graph_F structure")
        m = S.dim - 1
        chart = CoordSystem(S.coords.names[:m])
        F = [ca.substitute(c, {}) for c in S.null_coform[:m]]
        return smp.GraphHFOperator(F, m)
    if name == "intrinsic":
        return smp.IntrinsicOperator(_require_int(raw, "n", "[scenario]"))
    if name == "la_graph":
        return smp.LaGraphOperator(_require_int(raw, "n", "[scenario]"))
    if name == "radial_cylinder":
        return smp.RadialCylinderOperator(_require_int(raw, "n", "[scenario]"))
    raise ConfigError(f"[scenario]: unknown operator {name!r}")


def scenario_from_config(doc: ConfigDocument) -> smp.ComparisonScenario:
    raw = doc.scenario_raw
    if raw is None:
        raise ConfigError("no [scenario] section")
    operator = _build_operator(doc, raw)
    chart = operator.chart
    for key in ("u", "v"):
        if key not in raw:
            raise ConfigError(f"[scenario]: missing {key}")
    u = doc.function(raw["u"], chart)
    v = doc.function(raw["v"], chart)
    if "box" in raw:
        box = _parse_box(raw["box"], len(chart))
    elif u.box is not None:
        box = u.box
    else:
        raise ConfigError("[scenario]: no box (set box= or give u a box)")
    grid_raw = raw.get("grid", "65")
    if "," in grid_raw:
        grid = tuple(int(v.strip()) for v in grid_raw.split(","))
    else:
        grid = int(grid_raw)
    tol = smp.Tolerances(
        eps_touch=float(raw.get("eps_touch", 1e-6)),
        eps_order=float(raw.get("eps_order", 1e-9)),
        eps_h=float(raw.get("eps_h", 1e-7)),
        eps_sing=float(raw["eps_sing"]) if "eps_sing" in raw else None,
    )
    try:
        return smp.ComparisonScenario(
            raw.get("name", "config-scenario"),
            operator,
            u.expr,
            v.expr,
            box=box,
            grid_counts=grid,
            tolerances=tol,
            T=float(raw.get("T", 0.5)),
            step=float(raw.get("step", 1e-3)),
            max_propagation_starts=int(raw.get("max_propagation_starts", 8)),
            rank_depth=int(raw.get("rank_depth", 2)),
            description=raw.get("description", ""),
        )
    except ValueError as exc:
        raise ConfigError(f"[scenario]: {exc}") from exc


def scenario_to_config(sc: smp.ComparisonScenario) -> str:
    """Render a scenario as a config file reproducing its report."""
    op = sc.operator
    chart = op.chart
    lines = []
    if isinstance(op, smp.GenericOperator):
        S = op.structure
        lines.append("[structure]")
        lines.extend(_structure_config_lines(S))
        lines.append("")
    elif isinstance(op, smp.GraphHFOperator):
        lines.append("[structure]")
        lines.append("kind = graph_F")
        lines.append(f"m = {op.m}")
        lines.append("F = " + ", ".join(ca.unparse(f, chart) for f in op.F))
        lines.append("")
    lines.append("[function u]")
    lines.append("expr = " + ca.unparse(sc.u.expr, chart))
    lines.append("")
    lines.append("[function v]")
    lines.append("expr = " + ca.unparse(sc.v.expr, chart))
    lines.append("")
    lines.append("[scenario]")
    lines.append(f"name = {sc.name}")
    if sc.description:
        lines.append(f"description = {sc.description}")
    lines.append(f"operator = {op.kind}")
    if isinstance(op, smp.GenericOperator):
        lines.append(f"p = {op.p}")
        lines.append(f"graph_dir = {op.structure.coords.names[op.graph_dir]}")
    if hasattr(op, "n"):
        lines.append(f"n = {op.n}")
    lines.append("u = u")
    lines.append("v = v")
    lines.append("box = " + ", ".join(f"{_fmt(lo)}:{_fmt(hi)}" for lo, hi in sc.box))
    lines.append("grid = " + ", ".join(str(c) for c in sc.grid_counts))
    t = sc.tolerances
    lines.append(f"eps_touch = {_fmt(t.eps_touch)}")
    lines.append(f"eps_order = {_fmt(t.eps_order)}")
    lines.append(f"eps_h = {_fmt(t.eps_h)}")
    lines.append(f"eps_sing = {_fmt(t.eps_sing)}")
    lines.append(f"T = {_fmt(sc.T)}")
    lines.append(f"step = {_fmt(sc.step)}")
    lines.append(f"max_propagation_starts = {sc.max_propagation_starts}")
    lines.append(f"rank_depth = {sc.rank_depth}")
    return "\n".join(lines) + "\n"


def _structure_config_lines(S: SubriemannianStructure) -> list:
    # builtin structures round-trip through their construction parameters
    dim = S.dim
    if S.coords.names[-1] == "z" and dim % 2 == 1:
        n = (dim - 1) // 2
        if S.volume_density == ca.ONE:
            return ["kind = heisenberg", f"n = {n}"]
        return ["kind = cylinder", f"n = {n}"]
    lines = ["kind = custom", "coords = " + ", ".join(S.coords.names)]
    for l in range(dim):
        for k in range(l, dim):
            entry = S.cometric[l][k]
            if not (isinstance(entry, ca.Const) and entry.value == 0):
                lines.append(f"cometric.{l}.{k} = " + ca.unparse(entry, S.coords))
    lines.append("density = " + ca.unparse(S.volume_density, S.coords))
    lines.append(f"degeneracy = {S.degeneracy}")
    return lines


# ---------------------------------------------------------------------------
# Deterministic serialization (17 significant digits, fixed key order)
# ---------------------------------------------------------------------------


def format_number(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    x = float(x) + 0.0  # normalizes -0.0
    if x != x or x in (float("inf"), float("-inf")):
        raise ValueError(f"non-finite number in report: {x}")
    return f"{x:.17g}"


def _fmt(x: float) -> str:
    return format_number(x)


def dumps_report(obj, indent: int = 0) -> str:
    """JSON with deterministic float formatting and insertion key order."""
    pad = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, float)):
        return format_number(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        inner = ",\n".join(
            "  " * (indent + 1) + dumps_report(v, indent + 1) for v in obj
        )
        return "[\n" + inner + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        parts = []
        for k, v in obj.items():
            parts.append(
                "  " * (indent + 1)
                + json.dumps(str(k), ensure_ascii=False)
                + ": "
                + dumps_report(v, indent + 1)
            )
        return "{\n" + ",\n".join(parts) + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _write_text(path: Optional[str], text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    return format_number(v)


def write_scenario_csv(report: smp.ScenarioReport, coords: Sequence[str]) -> str:
    header = list(coords) + ["v_minus_u", "H_u", "H_v", "singular_u", "singular_v"]
    lines = [",".join(header)]
    for row in report.table:
        lines.append(",".join(_csv_cell(v) for v in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _parse_point(text: str, expected: int) -> tuple:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != expected:
        raise ConfigError(f"point has {len(parts)} coordinates, chart needs {expected}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"bad point {text!r}") from exc


def cmd_curvature(args) -> int:
    doc = load_config(args.config)
    S = doc.structure()
    phi = doc.function(args.function, S.coords)
    p = Fraction(args.p)
    if args.at is not None:
        point = _parse_point(args.at, S.dim)
        value = p_mean_curvature(S, phi, p, point)
        print(format_number(value))
        return EXIT_OK
    # grid mode over the function's box
    box = phi.box or S.domain_box
    if box is None:
        raise ConfigError("grid mode needs a box on the function or structure")
    grid = GridSpec.from_box(box, args.grid)
    h_expr = p_mean_curvature_expr(S, phi, p)
    h_fn = ca.compile_expr(h_expr, S.dim)
    sing_fn = ca.compile_expr(conorm_sq_expr(S, phi), S.dim)
    eps_sq = default_eps_sing() ** 2
    rows = []
    for _, pt in grid.points():
        if sing_fn(pt) < eps_sq:
            rows.append((pt, None))
            continue
        try:
            rows.append((pt, h_fn(pt)))
        except (EvaluationError, OverflowError):
            rows.append((pt, None))
    if args.format == "csv":
        lines = [",".join(list(S.coords.names) + ["H"])]
        for pt, h in rows:
            lines.append(",".join([format_number(c) for c in pt] + [_csv_cell(h)]))
        _write_text(args.out, "\n".join(lines) + "\n")
    else:
        payload = {
            "schema_version": "1",
            "function": args.function,
            "p": str(p),
            "grid": grid.as_dict(),
            "values": [
                {"point": list(pt), "H": h} for pt, h in rows
            ],
        }
        _write_text(args.out, dumps_report(payload) + "\n")
    return EXIT_OK


def cmd_rank(args) -> int:
    doc = load_config(args.config)
    S = doc.structure()
    if args.at is not None:
        point = _parse_point(args.at, S.dim)
    elif S.domain_box is not None:
        point = tuple((lo + hi) / 2.0 for lo, hi in S.domain_box)
    else:
        point = tuple(0.1 * (i + 1) for i in range(S.dim))

    if args.surface is not None:
        if not S.frame_fields:
            raise MissingFrames("surface rank check needs structure frame fields")
        phi = doc.function(args.surface, S.coords)
        fields = tangent_distribution_fields(S, phi)
        target = S.dim - 1
        mode = "surface"
    elif args.fields:
        fields = [doc.field(name, S.coords) for name in args.fields]
        target = S.dim
        mode = "fields"
    else:
        if not S.frame_fields:
            raise MissingFrames("no --fields given and structure has no frames")
        fields = list(S.frame_fields)
        target = S.dim
        mode = "frames"

    report = bracket_generate_rank(fields, point, args.depth, target_rank=target)
    hormander = report.rank >= target
    payload = {
        "schema_version": "1",
        "mode": mode,
        "point": list(point),
        "rank": report.rank,
        "depth": report.depth,
        "words_generated": report.words_generated,
        "pivot_tol": report.pivot_tol,
        "target_rank": target,
        "hormander": f"{'yes' if hormander else 'no'} (rank {report.rank} of {target})",
    }
    if S.null_coform is not None:
        m = [
            [
                ca.sub(
                    ca.differentiate(S.null_coform[j], k),
                    ca.differentiate(S.null_coform[k], j),
                )
                for j in range(S.dim)
            ]
            for k in range(S.dim)
        ]
        basis = S.frame_fields if S.frame_fields else None
        tf_rank = two_form_rank(m, point, restriction_basis=basis)
        payload["two_form_rank"] = tf_rank
        payload["two_form_verdict"] = (
            f"two-form rank {tf_rank} >= 3: bracket-generating criterion holds"
            if tf_rank >= 3
            else f"two-form rank {tf_rank} < 3: bracket-generating criterion fails"
        )
    _write_text(args.out, dumps_report(payload) + "\n")
    return EXIT_OK


def cmd_scenario(args) -> int:
    if args.action == "list":
        for name in smp.builtin_names():
            print(f"{name}  -  {smp.BUILTIN_DESCRIPTIONS[name]}")
        return EXIT_OK
    if args.name:
        sc = smp.builtin_scenario(args.name)
    elif args.config:
        sc = scenario_from_config(load_config(args.config))
    else:
        raise ConfigError("scenario run needs a NAME or --config")
    report = smp.run_scenario(sc, jobs=args.jobs)
    _write_text(args.out, dumps_report(report.as_dict()) + "\n")
    if args.csv:
        _write_text(args.csv, write_scenario_csv(report, sc.operator.chart.names))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subcurv",
        description=(
            "horizontal p-mean curvature, bracket rank checks, and "
            "comparison scenarios for subriemannian structures"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("curvature", help="evaluate a curvature operator")
    c.add_argument("--config", required=True)
    c.add_argument("--function", required=True)
    c.add_argument("--p", default="0", help="curvature exponent (rational)")
    c.add_argument("--at", help="comma-separated evaluation point")
    c.add_argument("--grid", type=int, default=17, help="grid points per axis")
    c.add_argument("--out", default=None)
    c.add_argument("--format", choices=("json", "csv"), default="json")
    c.set_defaults(func=cmd_curvature)

    r = sub.add_parser("rank", help="bracket-closure rank checks")
    r.add_argument("--config", required=True)
    r.add_argument("--fields", nargs="*", default=None)
    r.add_argument("--surface", default=None)
    r.add_argument("--at", default=None)
    r.add_argument("--depth", type=int, default=4)
    r.add_argument("--out", default=None)
    r.set_defaults(func=cmd_rank)

    s = sub.add_parser("scenario", help="run comparison scenarios")
    s.add_argument("action", choices=("run", "list"))
    s.add_argument("name", nargs="?", default=None)
    s.add_argument("--config", default=None)
    s.add_argument("--out", default=None)
    s.add_argument("--csv", default=None)
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_scenario)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingFrames as exc:
        print(f"missing frames: {exc}", file=sys.stderr)
        return EXIT_FRAMES
    except (SingularPoint, EvaluationError) as exc:
        print(f"evaluation error: {exc}", file=sys.stderr)
        return EXIT_EVAL


if __name__ == "__main__":
    sys.exit(main())
