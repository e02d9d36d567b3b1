"""Discrete factor graphs and parametric factor graphs.

A factor graph is a bipartite graph of categorical random variables and
nonnegative potential tables; its semantics is the normalized product of all
tables.  A parametric factor graph compresses groups of interchangeable
variables behind logical variables and recovers the propositional model by
grounding.

All types are immutable after construction and safe to share across threads;
every operation in this module is a pure function.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional, Sequence

import numpy as np

from .errors import (
    AssignmentError,
    DegenerateFactorError,
    ModelError,
    TooLargeError,
)

DEFAULT_MAX_STATES = 1 << 22


def _frozen_table(table, shape: tuple[int, ...]) -> np.ndarray:
    arr = np.asarray(table, dtype=np.float64)
    if arr.size != math.prod(shape):
        raise ModelError(
            f"table has {arr.size} entries, expected {math.prod(shape)} for shape {shape}"
        )
    arr = arr.reshape(shape).copy()
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ModelError("potentials must be finite and nonnegative")
    if not np.any(arr > 0):
        raise DegenerateFactorError("factor table is all zeros")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class RandomVariable:
    """A categorical variable with a fixed, ordered range of values."""

    name: str
    range: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "range", tuple(self.range))
        if len(self.range) < 2:
            raise ModelError(f"variable {self.name!r} needs a range of at least 2 values")
        if len(set(self.range)) != len(self.range):
            raise ModelError(f"variable {self.name!r} has duplicate range values")


@dataclass(frozen=True)
class Factor:
    """A potential table over an ordered list of variable names.

    The table is stored dense in mixed-radix layout: axis i enumerates the
    range of argument i in range order, flattening is C order.
    """

    name: str
    args: tuple[str, ...]
    table: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if len(self.args) == 0:
            raise ModelError(f"factor {self.name!r} has no arguments")
        table = np.asarray(self.table, dtype=np.float64)
        object.__setattr__(self, "table", table)

    @property
    def arity(self) -> int:
        return len(self.args)


class FactorGraph:
    """An immutable bipartite model of variables and factors.

    Construction validates every structural invariant: argument names resolve
    to declared variables, table shapes match argument ranges, potentials are
    nonnegative with at least one positive entry, and no variable is isolated.
    Variables and factors are kept sorted by name so that identical models
    produce identical iteration orders and serializations.
    """

    def __init__(self, variables: Sequence[RandomVariable], factors: Sequence[Factor]):
        vs = sorted(variables, key=lambda v: v.name)
        if len({v.name for v in vs}) != len(vs):
            raise ModelError("duplicate variable names")
        self._vars: dict[str, RandomVariable] = {v.name: v for v in vs}
        if not factors:
            raise ModelError("a factor graph needs at least one factor")
        fs = sorted(factors, key=lambda f: f.name)
        if len({f.name for f in fs}) != len(fs):
            raise ModelError("duplicate factor names")
        checked = []
        for f in fs:
            shape = []
            for a in f.args:
                if a not in self._vars:
                    raise ModelError(f"factor {f.name!r} references unknown variable {a!r}")
                shape.append(len(self._vars[a].range))
            checked.append(Factor(f.name, f.args, _frozen_table(f.table, tuple(shape))))
        self._factors: dict[str, Factor] = {f.name: f for f in checked}
        self._adjacency: dict[str, tuple[str, ...]] = {v: () for v in self._vars}
        adj: dict[str, list[str]] = {v: [] for v in self._vars}
        for f in checked:
            for a in set(f.args):
                adj[a].append(f.name)
        for v, fnames in adj.items():
            if not fnames:
                raise ModelError(f"variable {v!r} is isolated (appears in no factor)")
            self._adjacency[v] = tuple(sorted(fnames))

    @property
    def variables(self) -> Mapping[str, RandomVariable]:
        return self._vars

    @property
    def factors(self) -> Mapping[str, Factor]:
        return self._factors

    @property
    def var_names(self) -> tuple[str, ...]:
        return tuple(self._vars)

    def factors_of(self, var: str) -> tuple[str, ...]:
        return self._adjacency[var]

    def state_count(self) -> int:
        return math.prod(len(v.range) for v in self._vars.values())

    def __repr__(self):
        return f"FactorGraph({len(self._vars)} variables, {len(self._factors)} factors)"


@dataclass(frozen=True)
class LogicalVariable:
    """A parameter ranging over an ordered, nonempty domain of constants."""

    name: str
    domain: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "domain", tuple(self.domain))
        if not self.domain:
            raise ModelError(f"logical variable {self.name!r} has an empty domain")
        if len(set(self.domain)) != len(self.domain):
            raise ModelError(f"logical variable {self.name!r} has duplicate constants")


@dataclass(frozen=True)
class Constraint:
    """Admissible joint assignments for a sequence of logical variables.

    ``tuples is None`` is the unrestricted constraint (the full cross product
    of the domains).  An explicit tuple set must be nonempty, have matching
    arity, and stay within the domains.
    """

    lvs: tuple[str, ...]
    tuples: Optional[tuple[tuple[str, ...], ...]]

    def __post_init__(self):
        object.__setattr__(self, "lvs", tuple(self.lvs))
        if self.tuples is not None:
            tups = tuple(tuple(t) for t in self.tuples)
            if not tups and self.lvs:
                raise ModelError("explicit constraint has no tuples")
            if len(set(tups)) != len(tups):
                raise ModelError("constraint tuples must be distinct")
            for t in tups:
                if len(t) != len(self.lvs):
                    raise ModelError(f"constraint tuple {t!r} has arity {len(t)}, expected {len(self.lvs)}")
            object.__setattr__(self, "tuples", tups)

    @property
    def is_top(self) -> bool:
        return self.tuples is None

    def groundings(self, domains: Mapping[str, tuple[str, ...]]) -> Iterator[tuple[str, ...]]:
        """Iterate admissible assignments in deterministic order."""
        if self.tuples is None:
            yield from itertools.product(*(domains[lv] for lv in self.lvs))
        else:
            yield from self.tuples


@dataclass(frozen=True)
class PRV:
    """A variable template: a base name combined with zero or more logical variables.

    With no logical variables the template is a plain propositional variable.
    An empty base name marks an anonymous template whose groundings are the
    constants themselves (used when lifting variables whose names carry no
    shared structure).
    """

    name: str
    lvs: tuple[str, ...]
    range: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "lvs", tuple(self.lvs))
        object.__setattr__(self, "range", tuple(self.range))
        if self.name == "" and not self.lvs:
            raise ModelError("a PRV needs a base name or at least one logical variable")

    @property
    def key(self) -> tuple:
        return (self.name, self.lvs)

    def ground_name(self, constants: Sequence[str]) -> str:
        if len(constants) != len(self.lvs):
            raise ModelError(f"PRV {self.name!r} expects {len(self.lvs)} constants")
        parts = ([self.name] if self.name else []) + list(constants)
        return ".".join(parts)


@dataclass(frozen=True)
class Parfactor:
    """A potential table over PRVs, replicated per admissible constraint tuple."""

    name: str
    args: tuple[PRV, ...]
    constraint: Constraint
    table: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        used = []
        for prv in self.args:
            for lv in prv.lvs:
                if lv not in used:
                    used.append(lv)
        if set(used) != set(self.constraint.lvs) or len(self.constraint.lvs) != len(set(self.constraint.lvs)):
            raise ModelError(
                f"parfactor {self.name!r}: constraint is over {self.constraint.lvs!r} "
                f"but arguments use {tuple(used)!r}"
            )
        shape = tuple(len(p.range) for p in self.args)
        object.__setattr__(self, "table", _frozen_table(self.table, shape))


class ParametricFactorGraph:
    """An immutable bipartite model of PRVs and parfactors with declared LVs."""

    def __init__(
        self,
        lvs: Sequence[LogicalVariable],
        prvs: Sequence[PRV],
        parfactors: Sequence[Parfactor],
    ):
        lvs = sorted(lvs, key=lambda l: l.name)
        if len({l.name for l in lvs}) != len(lvs):
            raise ModelError("duplicate logical variable names")
        self._lvs = {l.name: l for l in lvs}
        prvs = sorted(prvs, key=lambda p: p.key)
        if len({p.key for p in prvs}) != len(prvs):
            raise ModelError("duplicate PRVs")
        self._prvs = {p.key: p for p in prvs}
        if not parfactors:
            raise ModelError("a parametric factor graph needs at least one parfactor")
        pfs = sorted(parfactors, key=lambda g: g.name)
        if len({g.name for g in pfs}) != len(pfs):
            raise ModelError("duplicate parfactor names")
        for g in pfs:
            for prv in g.args:
                if prv.key not in self._prvs:
                    raise ModelError(f"parfactor {g.name!r} references undeclared PRV {prv.key!r}")
                for lv in prv.lvs:
                    if lv not in self._lvs:
                        raise ModelError(f"PRV {prv.key!r} references undeclared LV {lv!r}")
            domains = {lv: self._lvs[lv].domain for lv in g.constraint.lvs}
            if g.constraint.tuples is not None:
                for t in g.constraint.tuples:
                    for lv, const in zip(g.constraint.lvs, t):
                        if const not in domains[lv]:
                            raise ModelError(
                                f"constraint tuple {t!r} of parfactor {g.name!r} uses "
                                f"constant {const!r} outside the domain of {lv!r}"
                            )
        self._parfactors = {g.name: g for g in pfs}

    @property
    def lvs(self) -> Mapping[str, LogicalVariable]:
        return self._lvs

    @property
    def prvs(self) -> Mapping[tuple, PRV]:
        return self._prvs

    @property
    def parfactors(self) -> Mapping[str, Parfactor]:
        return self._parfactors

    def __repr__(self):
        return (
            f"ParametricFactorGraph({len(self._prvs)} PRVs, "
            f"{len(self._parfactors)} parfactors, {len(self._lvs)} LVs)"
        )


def ground(pfg: ParametricFactorGraph) -> FactorGraph:
    """Instantiate every parfactor per admissible constraint tuple.

    Ground variables are deduplicated by name; a name clash with conflicting
    ranges is a modelling error.  Output ordering is canonical (sorted by
    name), so identical inputs ground to identical factor graphs.
    """
    domains = {name: lv.domain for name, lv in pfg.lvs.items()}
    rvs: dict[str, RandomVariable] = {}
    factors: list[Factor] = []
    for g in pfg.parfactors.values():
        lv_order = g.constraint.lvs
        for tup in g.constraint.groundings(domains):
            binding = dict(zip(lv_order, tup))
            arg_names = []
            for prv in g.args:
                name = prv.ground_name([binding[lv] for lv in prv.lvs])
                prior = rvs.get(name)
                if prior is None:
                    rvs[name] = RandomVariable(name, prv.range)
                elif prior.range != prv.range:
                    raise ModelError(f"ground variable {name!r} has conflicting ranges")
                arg_names.append(name)
            suffix = "[" + ",".join(tup) + "]" if tup else ""
            factors.append(Factor(g.name + suffix, tuple(arg_names), g.table))
    return FactorGraph(list(rvs.values()), factors)


def _check_assignment(fg: FactorGraph, assignment: Mapping[str, str]) -> None:
    for name, rv in fg.variables.items():
        if name not in assignment:
            raise AssignmentError(f"assignment is missing variable {name!r}")
        if assignment[name] not in rv.range:
            raise AssignmentError(
                f"value {assignment[name]!r} is not in the range of {name!r}"
            )


def unnormalized_joint(fg: FactorGraph, assignment: Mapping[str, str]) -> float:
    """Product over all factors of the potential at the restricted assignment."""
    _check_assignment(fg, assignment)
    result = 1.0
    for f in fg.factors.values():
        idx = tuple(fg.variables[a].range.index(assignment[a]) for a in f.args)
        result *= float(f.table[idx])
    return result


class JointDistribution:
    """The fully enumerated joint distribution of a small factor graph.

    States are indexed in mixed-radix order over the variables sorted by name
    (first variable most significant, range order within each variable).
    """

    def __init__(self, variables: tuple[str, ...], ranges: tuple[tuple[str, ...], ...], probs: np.ndarray):
        self.variables = variables
        self.ranges = ranges
        self.probs = probs
        self._sizes = tuple(len(r) for r in ranges)
        self._index = {name: i for i, name in enumerate(variables)}

    def state_values(self, flat_index: int) -> tuple[str, ...]:
        out = []
        for size, rng in zip(reversed(self._sizes), reversed(self.ranges)):
            out.append(rng[flat_index % size])
            flat_index //= size
        return tuple(reversed(out))

    def prob(self, assignment: Mapping[str, str]) -> float:
        idx = 0
        for name, rng in zip(self.variables, self.ranges):
            idx = idx * len(rng) + rng.index(assignment[name])
        return float(self.probs[idx])

    def marginal(self, var: str) -> dict[str, float]:
        i = self._index[var]
        size = self._sizes[i]
        stride = math.prod(self._sizes[i + 1:])
        digits = (np.arange(self.probs.size) // stride) % size
        return {
            self.ranges[i][v]: float(self.probs[digits == v].sum())
            for v in range(size)
        }

    def items(self) -> Iterator[tuple[tuple[str, ...], float]]:
        for idx, p in enumerate(self.probs):
            yield self.state_values(idx), float(p)


def exact_distribution(fg: FactorGraph, max_states: int = DEFAULT_MAX_STATES) -> JointDistribution:
    """Enumerate the normalized joint distribution.

    Raises :class:`TooLargeError` when the state space exceeds ``max_states``;
    use Gibbs sampling for such models.
    """
    total = fg.state_count()
    if total > max_states:
        raise TooLargeError(f"joint has {total} states, enumeration cap is {max_states}")
    names = fg.var_names
    sizes = [len(fg.variables[n].range) for n in names]
    strides = {}
    acc = 1
    for name, size in zip(reversed(names), reversed(sizes)):
        strides[name] = acc
        acc *= size
    flat = np.arange(total, dtype=np.int64)
    weights = np.ones(total, dtype=np.float64)
    for f in fg.factors.values():
        idx = np.zeros(total, dtype=np.int64)
        for a in f.args:
            digit = (flat // strides[a]) % len(fg.variables[a].range)
            idx = idx * len(fg.variables[a].range) + digit
        weights *= f.table.ravel()[idx]
    z = weights.sum()
    if z <= 0:
        raise ModelError("all joint states have zero mass; model cannot be normalized")
    probs = weights / z
    probs.flags.writeable = False
    return JointDistribution(names, tuple(fg.variables[n].range for n in names), probs)


def _range_blocks(ranges: Sequence[tuple[str, ...]]) -> list[list[int]]:
    """Positions grouped by equal range, blocks sorted by range key."""
    by_range: dict[tuple[str, ...], list[int]] = {}
    for i, r in enumerate(ranges):
        by_range.setdefault(r, []).append(i)
    return [by_range[r] for r in sorted(by_range)]


def _argument_permutations(ranges: Sequence[tuple[str, ...]]) -> Iterator[tuple[int, ...]]:
    """All axis orders that sort arguments by range and permute within equal-range blocks."""
    blocks = _range_blocks(ranges)
    for per_block in itertools.product(*(itertools.permutations(b) for b in blocks)):
        yield tuple(itertools.chain.from_iterable(per_block))


def _canonical_factor_key(
    args: tuple[str, ...], ranges: tuple[tuple[str, ...], ...], table: np.ndarray, max_arity: int = 8
) -> tuple:
    """Order-independent identity of a factor: minimal (table, args) over argument reorders."""
    if len(args) > max_arity:
        return (tuple(sorted(ranges)), table.tobytes(), args)
    best = None
    for perm in _argument_permutations(ranges):
        t = np.transpose(table, perm) if len(perm) > 1 else table
        cand = (tuple(t.ravel()), tuple(args[i] for i in perm))
        if best is None or cand < best:
            best = cand
    return (tuple(sorted(ranges)),) + best


def factor_multiset_equal(a: FactorGraph, b: FactorGraph) -> bool:
    """Whether two factor graphs carry the same factors, ignoring factor names.

    Factors compare as (argument names, potential table) pairs after putting
    the arguments of each factor into a canonical order, so consistently
    transposing a factor's table and argument list does not affect equality.
    Potentials compare exactly (no tolerance).
    """
    def keys(fg: FactorGraph) -> list:
        out = []
        for f in fg.factors.values():
            ranges = tuple(fg.variables[x].range for x in f.args)
            out.append(_canonical_factor_key(f.args, ranges, f.table))
        out.sort()
        return out

    if set(a.var_names) != set(b.var_names):
        return False
    return keys(a) == keys(b)
