"""Model file format: canonical JSON layout with bit-exact round-trips."""

import numpy as np
import pytest

from relgen import modelio
from relgen.errors import LoadError
from relgen.model import (
    Constraint,
    Factor,
    FactorGraph,
    LogicalVariable,
    Parfactor,
    ParametricFactorGraph,
    PRV,
    RandomVariable,
)

from test_model import epidemic_pfg


def small_fg():
    rvs = [
        RandomVariable("Age.p1", ("<18", ">=18")),
        RandomVariable("Treat.p1.m1", ("true", "false")),
    ]
    # Deliberately awkward potentials to exercise float round-tripping.
    f1 = Factor("phi(Age.p1)", ("Age.p1",), [0.1, 10.5])
    f2 = Factor(
        "phi(Age.p1,Treat.p1.m1)",
        ("Age.p1", "Treat.p1.m1"),
        [1 / 3, 0.0, 2.0000000000000004, 7.0],
    )
    return FactorGraph(rvs, [f1, f2])


def test_fg_roundtrip_values():
    fg = small_fg()
    back = modelio.loads(modelio.dumps(fg))
    assert isinstance(back, FactorGraph)
    assert list(back.variables) == list(fg.variables)
    for name, f in fg.factors.items():
        assert back.factors[name].args == f.args
        assert back.factors[name].table.tobytes() == f.table.tobytes()


def test_fg_print_parse_print_is_bit_exact():
    text = modelio.dumps(small_fg())
    assert modelio.dumps(modelio.loads(text)) == text


def test_pfg_roundtrip_values():
    pfg = epidemic_pfg()
    back = modelio.loads(modelio.dumps(pfg))
    assert isinstance(back, ParametricFactorGraph)
    assert list(back.lvs) == list(pfg.lvs)
    assert set(back.prvs) == set(pfg.prvs)
    for name, g in pfg.parfactors.items():
        got = back.parfactors[name]
        assert tuple(p.key for p in got.args) == tuple(p.key for p in g.args)
        assert got.constraint == g.constraint
        assert got.table.tobytes() == g.table.tobytes()


def test_pfg_print_parse_print_is_bit_exact():
    x = LogicalVariable("X", ("a", "b", "c"))
    r = PRV("R", ("X",), ("true", "false"))
    g = Parfactor("g", (r,), Constraint(("X",), (("a",), ("c",))), [0.25, 1e-17])
    pfg = ParametricFactorGraph([x], [r], [g])
    text = modelio.dumps(pfg)
    assert modelio.dumps(modelio.loads(text)) == text


def test_file_roundtrip(tmp_path):
    path = tmp_path / "model.json"
    fg = small_fg()
    modelio.save(fg, path)
    assert modelio.dumps(modelio.load(path)) == modelio.dumps(fg)


def test_truncated_file_reports_line():
    text = modelio.dumps(small_fg())
    with pytest.raises(LoadError, match="line"):
        modelio.loads(text[: len(text) // 2])


def test_unknown_format_rejected():
    with pytest.raises(LoadError, match="format"):
        modelio.loads('{"format": "something-else"}')


def test_report_mentions_structure():
    report = modelio.render_report(small_fg())
    assert "Age.p1" in report
    assert "phi(Age.p1,Treat.p1.m1)" in report
    report = modelio.render_report(epidemic_pfg())
    assert "Treat(P, M)" in report
    assert "alice" in report
