"""Reading, writing, and pretty-printing model files.

Models are stored as JSON with a fixed canonical layout:

* a factor graph file has ``format: "factor-graph"``, a ``rvs`` list of
  ``{name, range}`` records and a ``factors`` list of
  ``{name, args, table}`` records;
* a parametric factor graph file has ``format: "parametric-factor-graph"``,
  ``lvs`` (``{name, domain}``), ``prvs`` (``{name, lvs, range}``),
  ``constraints`` (``{name, lvs, tuples}`` with ``tuples: null`` meaning no
  restriction), and ``parfactors`` (``{name, args, constraint, table}`` where
  ``args`` reference PRVs by ``{name, lvs}`` and ``constraint`` is a record
  name).

Tables are flat lists in mixed-radix order (first argument most significant,
range order within an argument).  Records are sorted by name and floats are
printed with full shortest-roundtrip precision, so ``dumps`` is canonical:
parsing a dumped model and dumping it again reproduces the bytes exactly.
"""

from __future__ import annotations

import json
from typing import Union

from .errors import LoadError
from .model import (
    Constraint,
    Factor,
    FactorGraph,
    LogicalVariable,
    Parfactor,
    ParametricFactorGraph,
    PRV,
    RandomVariable,
)

Model = Union[FactorGraph, ParametricFactorGraph]

FG_FORMAT = "factor-graph"
PFG_FORMAT = "parametric-factor-graph"


def dumps(model: Model) -> str:
    if isinstance(model, FactorGraph):
        doc = {
            "format": FG_FORMAT,
            "version": 1,
            "rvs": [
                {"name": v.name, "range": list(v.range)} for v in model.variables.values()
            ],
            "factors": [
                {"name": f.name, "args": list(f.args), "table": f.table.ravel().tolist()}
                for f in model.factors.values()
            ],
        }
    elif isinstance(model, ParametricFactorGraph):
        constraints = []
        refs = {}
        for g in model.parfactors.values():
            c = g.constraint
            key = (c.lvs, c.tuples)
            if key not in refs:
                refs[key] = f"c{len(refs)}"
                constraints.append(
                    {
                        "name": refs[key],
                        "lvs": list(c.lvs),
                        "tuples": None if c.tuples is None else [list(t) for t in c.tuples],
                    }
                )
        doc = {
            "format": PFG_FORMAT,
            "version": 1,
            "lvs": [{"name": l.name, "domain": list(l.domain)} for l in model.lvs.values()],
            "prvs": [
                {"name": p.name, "lvs": list(p.lvs), "range": list(p.range)}
                for p in model.prvs.values()
            ],
            "constraints": constraints,
            "parfactors": [
                {
                    "name": g.name,
                    "args": [{"name": p.name, "lvs": list(p.lvs)} for p in g.args],
                    "constraint": refs[(g.constraint.lvs, g.constraint.tuples)],
                    "table": g.table.ravel().tolist(),
                }
                for g in model.parfactors.values()
            ],
        }
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return json.dumps(doc, indent=1) + "\n"


def loads(text: str) -> Model:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise LoadError(f"model file is not valid JSON at line {e.lineno}: {e.msg}") from e
    fmt = doc.get("format")
    try:
        if fmt == FG_FORMAT:
            rvs = [RandomVariable(r["name"], tuple(r["range"])) for r in doc["rvs"]]
            factors = [Factor(f["name"], tuple(f["args"]), f["table"]) for f in doc["factors"]]
            return FactorGraph(rvs, factors)
        if fmt == PFG_FORMAT:
            lvs = [LogicalVariable(l["name"], tuple(l["domain"])) for l in doc["lvs"]]
            prv_index = {}
            for p in doc["prvs"]:
                prv = PRV(p["name"], tuple(p["lvs"]), tuple(p["range"]))
                prv_index[prv.key] = prv
            constraints = {}
            for c in doc["constraints"]:
                tuples = None if c["tuples"] is None else tuple(tuple(t) for t in c["tuples"])
                constraints[c["name"]] = Constraint(tuple(c["lvs"]), tuples)
            parfactors = []
            for g in doc["parfactors"]:
                args = []
                for a in g["args"]:
                    key = (a["name"], tuple(a["lvs"]))
                    if key not in prv_index:
                        raise LoadError(f"parfactor {g['name']!r} references undeclared PRV {key!r}")
                    args.append(prv_index[key])
                parfactors.append(
                    Parfactor(g["name"], tuple(args), constraints[g["constraint"]], g["table"])
                )
            return ParametricFactorGraph(lvs, list(prv_index.values()), parfactors)
    except LoadError:
        raise
    except KeyError as e:
        raise LoadError(f"model file is missing field {e.args[0]!r}") from e
    raise LoadError(f"unknown model format {fmt!r}")


def save(model: Model, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(model))


def load(path) -> Model:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise LoadError(f"cannot read model file {path}: {e}") from e
    return loads(text)


def _fmt_prv(name: str, lvs: tuple[str, ...]) -> str:
    shown = name or "*"
    return f"{shown}({', '.join(lvs)})" if lvs else shown


def render_report(model: Model) -> str:
    """Human-readable description of a model: nodes, edges, tables, constraints."""
    lines: list[str] = []
    if isinstance(model, FactorGraph):
        lines.append(f"factor graph: {len(model.variables)} variables, {len(model.factors)} factors")
        lines.append("")
        lines.append("variables:")
        for v in model.variables.values():
            lines.append(f"  {v.name}: {{{', '.join(v.range)}}}")
        lines.append("")
        lines.append("factors:")
        for f in model.factors.values():
            lines.append(f"  {f.name} over ({', '.join(f.args)})")
            ranges = [model.variables[a].range for a in f.args]
            for idx, value in _table_rows(ranges, f.table):
                lines.append(f"    ({', '.join(idx)}) -> {value!r}")
    else:
        lines.append(
            f"parametric factor graph: {len(model.prvs)} PRVs, "
            f"{len(model.parfactors)} parfactors, {len(model.lvs)} logical variables"
        )
        lines.append("")
        lines.append("logical variables:")
        for l in model.lvs.values():
            lines.append(f"  {l.name}: {{{', '.join(l.domain)}}}")
        lines.append("")
        lines.append("PRVs:")
        for p in model.prvs.values():
            lines.append(f"  {_fmt_prv(p.name, p.lvs)}: {{{', '.join(p.range)}}}")
        lines.append("")
        lines.append("parfactors:")
        for g in model.parfactors.values():
            args = ", ".join(_fmt_prv(p.name, p.lvs) for p in g.args)
            lines.append(f"  {g.name} over ({args})")
            c = g.constraint
            if c.is_top:
                if c.lvs:
                    lines.append(f"    constraint: none (full cross product over {', '.join(c.lvs)})")
            else:
                shown = "; ".join("(" + ", ".join(t) + ")" for t in c.tuples)
                lines.append(f"    constraint on ({', '.join(c.lvs)}): {shown}")
            ranges = [p.range for p in g.args]
            for idx, value in _table_rows(ranges, g.table):
                lines.append(f"    ({', '.join(idx)}) -> {value!r}")
    return "\n".join(lines) + "\n"


def _table_rows(ranges, table):
    import itertools

    flat = table.ravel()
    for i, combo in enumerate(itertools.product(*ranges)):
        yield combo, float(flat[i])
