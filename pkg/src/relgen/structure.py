"""Conditional-independence structure learning over join columns.

Pairwise dependence is decided with a G-test (log-likelihood-ratio chi
squared) stratified by the conditioning assignment.  The skeleton search is
the classic constraint-based scheme: start from the complete graph and, for
growing conditioning-set sizes, drop an edge as soon as some conditioning set
drawn from the current neighbourhoods renders its endpoints independent.
Everything is iterated in lexicographic order so results are reproducible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.stats import chi2

from .errors import ParameterError, RelgenError
from .ingest import AugmentedJoin


@dataclass(frozen=True)
class ColumnSkeleton:
    """Undirected structure over join columns after CI pruning."""

    nodes: tuple[str, ...]
    edges: frozenset[frozenset]
    cliques: tuple[tuple[str, ...], ...]

    def neighbours(self, node: str) -> tuple[str, ...]:
        return tuple(sorted(n for e in self.edges if node in e for n in e if n != node))


def _frame_and_ranges(join, ranges: Optional[Mapping[str, Sequence[str]]]):
    if isinstance(join, AugmentedJoin):
        frame = join.frame
        known = dict(join.column_ranges)
        # relationship attributes carry the absent marker in the join
        for col in known:
            extra = set(frame[col]) - set(known[col])
            if extra:
                known[col] = tuple(known[col]) + tuple(sorted(extra))
    else:
        frame = join
        known = {}
    if ranges:
        known.update({c: tuple(r) for c, r in ranges.items()})
    for col in frame.columns:
        if col not in known:
            known[col] = tuple(sorted(set(frame[col])))
    return frame, known


def g_statistic(
    frame: pd.DataFrame,
    x: str,
    y: str,
    z: Sequence[str],
    ranges: Mapping[str, tuple[str, ...]],
) -> tuple[float, int]:
    """G statistic and degrees of freedom for x independent of y given z.

    Strata with no observations are skipped and do not contribute degrees of
    freedom.
    """
    rx, ry = len(ranges[x]), len(ranges[y])
    x_codes = frame[x].map({v: i for i, v in enumerate(ranges[x])}).to_numpy()
    y_codes = frame[y].map({v: i for i, v in enumerate(ranges[y])}).to_numpy()
    if z:
        strata_codes = np.zeros(len(frame), dtype=np.int64)
        for col in z:
            codes = frame[col].map({v: i for i, v in enumerate(ranges[col])}).to_numpy()
            strata_codes = strata_codes * len(ranges[col]) + codes
    else:
        strata_codes = np.zeros(len(frame), dtype=np.int64)
    g = 0.0
    nonempty = 0
    for s in np.unique(strata_codes):
        sel = strata_codes == s
        n = int(sel.sum())
        if n == 0:
            continue
        nonempty += 1
        counts = np.zeros((rx, ry), dtype=np.float64)
        np.add.at(counts, (x_codes[sel], y_codes[sel]), 1.0)
        row = counts.sum(axis=1, keepdims=True)
        col = counts.sum(axis=0, keepdims=True)
        expected = row @ col / n
        mask = counts > 0
        g += 2.0 * float((counts[mask] * np.log(counts[mask] / expected[mask])).sum())
    dof = (rx - 1) * (ry - 1) * nonempty
    return g, dof


def ci_test(
    join,
    x: str,
    y: str,
    z: Sequence[str] = (),
    alpha: float = 0.05,
    ranges: Optional[Mapping[str, Sequence[str]]] = None,
) -> bool:
    """True when x and y test as conditionally independent given z.

    ``join`` is an :class:`AugmentedJoin` or a plain string-valued DataFrame.
    Category sets come from the join's declared ranges (or the observed values
    for a raw frame) unless overridden via ``ranges``.
    """
    if x == y or x in z or y in z:
        raise ParameterError("x, y, and z must be distinct columns")
    frame, known = _frame_and_ranges(join, ranges)
    for col in (x, y, *z):
        if col not in frame.columns:
            raise ParameterError(f"unknown column {col!r}")
    if frame.empty:
        raise RelgenError("cannot test independence on an empty table")
    g, dof = g_statistic(frame, x, y, list(z), known)
    if dof <= 0:
        return True
    p = float(chi2.sf(g, dof))
    return p > alpha


def bron_kerbosch(nodes: Sequence[str], edges: frozenset) -> list[tuple[str, ...]]:
    """Maximal cliques of an undirected graph, with pivoting, sorted output."""
    adj = {n: set() for n in nodes}
    for e in edges:
        a, b = sorted(e)
        adj[a].add(b)
        adj[b].add(a)
    cliques: list[tuple[str, ...]] = []

    def expand(r: set, p: set, x: set) -> None:
        if not p and not x:
            if r:
                cliques.append(tuple(sorted(r)))
            return
        pivot = max(sorted(p | x), key=lambda u: len(adj[u] & p))
        for v in sorted(p - adj[pivot]):
            expand(r | {v}, p & adj[v], x & adj[v])
            p = p - {v}
            x = x | {v}

    expand(set(), set(nodes), set())
    return sorted(cliques)


def learn_skeleton(
    join,
    columns: Optional[Sequence[str]] = None,
    alpha: float = 0.05,
    max_condition_size: int = 2,
    ranges: Optional[Mapping[str, Sequence[str]]] = None,
) -> ColumnSkeleton:
    """Constraint-based skeleton over the given columns.

    Edges are removed in lexicographic order; for each edge the candidate
    conditioning sets are subsets of either endpoint's current neighbourhood,
    enumerated smallest-first.  Cliques are the maximal cliques of the final
    adjacency plus a singleton per isolated column, so every column is covered.
    """
    if max_condition_size < 0:
        raise ParameterError("max_condition_size must be >= 0")
    frame, known = _frame_and_ranges(join, ranges)
    if columns is None:
        columns = (
            join.test_columns if isinstance(join, AugmentedJoin) else tuple(frame.columns)
        )
    nodes = tuple(sorted(columns))
    adj: dict[str, set] = {n: set(nodes) - {n} for n in nodes}
    for size in range(0, max_condition_size + 1):
        for a, b in itertools.combinations(nodes, 2):
            if b not in adj[a]:
                continue
            found = False
            tried = set()
            for x, y in ((a, b), (b, a)):
                candidates = sorted(adj[x] - {y})
                if len(candidates) < size:
                    continue
                for zs in itertools.combinations(candidates, size):
                    if zs in tried:
                        continue
                    tried.add(zs)
                    if ci_test(frame, x, y, zs, alpha=alpha, ranges=known):
                        found = True
                        break
                if found:
                    break
            if found:
                adj[a].discard(b)
                adj[b].discard(a)
    edges = frozenset(
        frozenset((a, b)) for a in nodes for b in adj[a] if a < b
    )
    cliques = bron_kerbosch(nodes, edges)
    return ColumnSkeleton(nodes, edges, tuple(sorted(cliques)))
