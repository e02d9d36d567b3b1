"""Model core: grounding, joint semantics, enumeration, multiset comparison."""

import itertools
import math

import numpy as np
import pytest

from relgen.errors import (
    AssignmentError,
    DegenerateFactorError,
    ModelError,
    TooLargeError,
)
from relgen.model import (
    Constraint,
    Factor,
    FactorGraph,
    LogicalVariable,
    Parfactor,
    ParametricFactorGraph,
    PRV,
    RandomVariable,
    exact_distribution,
    factor_multiset_equal,
    ground,
    unnormalized_joint,
)

BOOL = ("true", "false")


def epidemic_pfg():
    """Four patients, two medications: one shared risk flag, per-patient and
    per-pair templates."""
    p = LogicalVariable("P", ("alice", "bob", "dave", "eve"))
    m = LogicalVariable("M", ("m1", "m2"))
    epid = PRV("Epid", (), BOOL)
    travel = PRV("Travel", ("P",), BOOL)
    sick = PRV("Sick", ("P",), BOOL)
    treat = PRV("Treat", ("P", "M"), BOOL)
    g0 = Parfactor("g0", (epid,), Constraint((), None), [2.0, 3.0])
    g1 = Parfactor(
        "g1", (travel, sick, epid), Constraint(("P",), None), np.arange(1.0, 9.0)
    )
    g2 = Parfactor(
        "g2", (treat, sick, epid), Constraint(("P", "M"), None), np.arange(2.0, 10.0)
    )
    g3 = Parfactor("g3", (travel,), Constraint(("P",), None), [1.0, 4.0])
    return ParametricFactorGraph([p, m], [epid, travel, sick, treat], [g0, g1, g2, g3])


class TestGround:
    def test_epidemic_counts(self):
        fg = ground(epidemic_pfg())
        assert len(fg.variables) == 17  # 1 Epid + 4 Sick + 4 Travel + 8 Treat
        assert len(fg.factors) == 17  # 1 + 4 + 8 + 4
        assert "Treat.alice.m1" in fg.variables
        assert "Epid" in fg.variables
        by_template = {}
        for name in fg.factors:
            by_template.setdefault(name.split("[")[0], 0)
            by_template[name.split("[")[0]] += 1
        assert by_template == {"g0": 1, "g1": 4, "g2": 8, "g3": 4}

    def test_parameterless_is_identity(self):
        a = PRV("A", (), BOOL)
        b = PRV("B", (), BOOL)
        g = Parfactor("g", (a, b), Constraint((), None), [1.0, 2.0, 3.0, 4.0])
        fg = ground(ParametricFactorGraph([], [a, b], [g]))
        assert set(fg.variables) == {"A", "B"}
        assert len(fg.factors) == 1
        np.testing.assert_array_equal(fg.factors["g"].table, [[1.0, 2.0], [3.0, 4.0]])

    def test_explicit_constraint_filters(self):
        x = LogicalVariable("X", ("a", "b", "c"))
        r = PRV("R", ("X",), BOOL)
        g = Parfactor("g", (r,), Constraint(("X",), (("a",), ("b",))), [5.0, 7.0])
        fg = ground(ParametricFactorGraph([x], [r], [g]))
        assert set(fg.variables) == {"R.a", "R.b"}
        assert len(fg.factors) == 2

    def test_grounding_count_matches_constraint(self):
        pfg = epidemic_pfg()
        fg = ground(pfg)
        domains = {n: lv.domain for n, lv in pfg.lvs.items()}
        for g in pfg.parfactors.values():
            expected = len(list(g.constraint.groundings(domains)))
            emitted = sum(1 for name in fg.factors if name.split("[")[0] == g.name)
            assert emitted == expected

    def test_constraint_outside_domain_rejected(self):
        x = LogicalVariable("X", ("a", "b"))
        r = PRV("R", ("X",), BOOL)
        with pytest.raises(ModelError):
            ParametricFactorGraph(
                [x],
                [r],
                [Parfactor("g", (r,), Constraint(("X",), (("zed",),)), [1.0, 1.0])],
            )

    def test_deterministic(self):
        a = ground(epidemic_pfg())
        b = ground(epidemic_pfg())
        assert list(a.variables) == list(b.variables)
        assert list(a.factors) == list(b.factors)


class TestJoint:
    def test_single_factor_lookup(self):
        fg = FactorGraph(
            [RandomVariable("A", BOOL)], [Factor("f", ("A",), [2.0, 3.0])]
        )
        assert unnormalized_joint(fg, {"A": "true"}) == 2.0
        assert unnormalized_joint(fg, {"A": "false"}) == 3.0

    def test_missing_variable_rejected(self):
        fg = FactorGraph(
            [RandomVariable("A", BOOL), RandomVariable("B", BOOL)],
            [Factor("f", ("A", "B"), [1.0, 2.0, 3.0, 4.0])],
        )
        with pytest.raises(AssignmentError):
            unnormalized_joint(fg, {"A": "true"})
        with pytest.raises(AssignmentError):
            unnormalized_joint(fg, {"A": "true", "B": "maybe"})

    def test_empty_graph_rejected_at_construction(self):
        with pytest.raises(ModelError):
            FactorGraph([RandomVariable("A", BOOL)], [])

    def test_multiplicative_over_components(self):
        rng = np.random.default_rng(7)
        rvs1 = [RandomVariable(f"X{i}", BOOL) for i in range(3)]
        rvs2 = [RandomVariable(f"Y{i}", ("a", "b", "c")) for i in range(2)]
        f1 = Factor("f1", ("X0", "X1", "X2"), rng.integers(1, 9, 8).astype(float))
        f2 = Factor("f2", ("Y0", "Y1"), rng.integers(1, 9, 9).astype(float))
        left = FactorGraph(rvs1, [f1])
        right = FactorGraph(rvs2, [f2])
        both = FactorGraph(rvs1 + rvs2, [f1, f2])
        for _ in range(20):
            asn = {rv.name: rv.range[rng.integers(len(rv.range))] for rv in rvs1 + rvs2}
            assert unnormalized_joint(both, asn) == pytest.approx(
                unnormalized_joint(left, asn) * unnormalized_joint(right, asn), abs=0
            )


class TestExactDistribution:
    def test_fair(self):
        fg = FactorGraph([RandomVariable("A", BOOL)], [Factor("f", ("A",), [1.0, 1.0])])
        dist = exact_distribution(fg)
        assert dist.marginal("A") == {"true": 0.5, "false": 0.5}

    def test_skewed(self):
        fg = FactorGraph([RandomVariable("A", BOOL)], [Factor("f", ("A",), [3.0, 1.0])])
        dist = exact_distribution(fg)
        assert dist.marginal("A") == {"true": 0.75, "false": 0.25}

    def test_sums_to_one(self):
        fg = ground(epidemic_pfg())
        dist = exact_distribution(fg)
        assert abs(float(dist.probs.sum()) - 1.0) < 1e-9
        assert np.all(dist.probs >= 0)

    def test_matches_pointwise_enumeration(self):
        # Independent oracle: recompute each state's probability from
        # unnormalized_joint, iterating assignments in a different order.
        fg = ground(epidemic_pfg())
        dist = exact_distribution(fg)
        names = list(reversed(fg.var_names))
        z = 0.0
        table = {}
        for combo in itertools.product(*(fg.variables[n].range for n in names)):
            asn = dict(zip(names, combo))
            w = unnormalized_joint(fg, asn)
            z += w
            table[tuple(asn[n] for n in fg.var_names)] = w
        for state, p in dist.items():
            assert p == pytest.approx(table[state] / z, rel=1e-12)

    def test_cap(self):
        rvs = [RandomVariable(f"X{i}", BOOL) for i in range(10)]
        factors = [Factor(f"f{i}", (f"X{i}",), [1.0, 1.0]) for i in range(10)]
        fg = FactorGraph(rvs, factors)
        with pytest.raises(TooLargeError):
            exact_distribution(fg, max_states=512)


class TestFactorMultisetEqual:
    def base(self):
        rvs = [RandomVariable("A", BOOL), RandomVariable("B", ("x", "y", "z"))]
        f1 = Factor("f1", ("A", "B"), np.arange(1.0, 7.0))
        f2 = Factor("f2", ("A",), [2.0, 5.0])
        return rvs, f1, f2

    def test_renaming_is_ignored(self):
        rvs, f1, f2 = self.base()
        a = FactorGraph(rvs, [f1, f2])
        b = FactorGraph(rvs, [Factor("other", f1.args, f1.table), Factor("names", f2.args, f2.table)])
        assert factor_multiset_equal(a, b)

    def test_perturbed_entry_detected(self):
        rvs, f1, f2 = self.base()
        a = FactorGraph(rvs, [f1, f2])
        t = np.array(f1.table, dtype=float)
        t[0] += 1e-9
        b = FactorGraph(rvs, [Factor("f1", f1.args, t), f2])
        assert not factor_multiset_equal(a, b)

    def test_argument_reorder_with_transposed_table_is_equal(self):
        rvs, f1, f2 = self.base()
        a = FactorGraph(rvs, [f1, f2])
        swapped = Factor("f1", ("B", "A"), np.arange(1.0, 7.0).reshape(2, 3).T)
        b = FactorGraph(rvs, [swapped, f2])
        assert factor_multiset_equal(a, b)

    def test_multiset_counts_matter(self):
        rvs, f1, f2 = self.base()
        a = FactorGraph(rvs, [f1, f2])
        b = FactorGraph(rvs, [f1, Factor("f2b", f1.args, f1.table)])
        assert not factor_multiset_equal(a, b)


class TestValidation:
    def test_isolated_variable_rejected(self):
        with pytest.raises(ModelError):
            FactorGraph(
                [RandomVariable("A", BOOL), RandomVariable("B", BOOL)],
                [Factor("f", ("A",), [1.0, 1.0])],
            )

    def test_all_zero_table_rejected(self):
        with pytest.raises(DegenerateFactorError):
            FactorGraph([RandomVariable("A", BOOL)], [Factor("f", ("A",), [0.0, 0.0])])

    def test_negative_potential_rejected(self):
        with pytest.raises(ModelError):
            FactorGraph([RandomVariable("A", BOOL)], [Factor("f", ("A",), [1.0, -1.0])])

    def test_wrong_table_size_rejected(self):
        with pytest.raises(ModelError):
            FactorGraph([RandomVariable("A", BOOL)], [Factor("f", ("A",), [1.0, 2.0, 3.0])])

    def test_short_range_rejected(self):
        with pytest.raises(ModelError):
            RandomVariable("A", ("only",))

    def test_tables_are_read_only(self):
        fg = FactorGraph([RandomVariable("A", BOOL)], [Factor("f", ("A",), [1.0, 2.0])])
        with pytest.raises(ValueError):
            fg.factors["f"].table[0] = 9.0
