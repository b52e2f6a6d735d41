"""Colored bipartite graph view of placement delivery arrays.

An array and a colored bipartite graph carry the same information: users
on one side, packet rows on the other, one edge per integer cell.  The
array is valid exactly when every user vertex has the same degree and the
edge coloring is strong (same-colored edges are pairwise non-adjacent and
share no common neighboring edge).  This module converts both ways,
validates colorings, provides a greedy colorer baseline, and subsamples
edges per user to mint new valid arrays from existing ones.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    ColoringViolation,
    DegreeViolation,
    IncompleteColoring,
    InvalidParameter,
    InvalidPda,
    ParseError,
)
from .pda import STAR, Pda, verify

Edge = tuple[int, int, Optional[int]]


@dataclass(frozen=True)
class BipartiteColoredGraph:
    """Bipartite graph with user vertices 0..k-1, packet vertices 0..f-1.

    Edges are (user, packet, color) with color a positive integer or None
    while uncolored.  Edges are stored sorted by (user, packet); duplicate
    (user, packet) pairs are rejected.
    """

    k: int
    f: int
    edges: tuple[Edge, ...]

    def __post_init__(self):
        seen = set()
        for u, v, c in self.edges:
            if not (0 <= u < self.k and 0 <= v < self.f):
                raise InvalidParameter(f"edge ({u}, {v}) outside vertex ranges")
            if c is not None and c < 1:
                raise InvalidParameter(f"edge ({u}, {v}) has non-positive color {c}")
            if (u, v) in seen:
                raise InvalidParameter(f"duplicate edge ({u}, {v})")
            seen.add((u, v))
        object.__setattr__(self, "edges", tuple(sorted(self.edges)))

    @property
    def n_colors(self) -> int:
        return len({c for _, _, c in self.edges if c is not None})

    def k_degrees(self) -> list[int]:
        deg = [0] * self.k
        for u, _, _ in self.edges:
            deg[u] += 1
        return deg

    def is_fully_colored(self) -> bool:
        return all(c is not None for _, _, c in self.edges)


def pda_to_graph(p) -> BipartiteColoredGraph:
    """One edge (user, row, color) per integer cell; stars give no edge."""
    if isinstance(p, Pda):
        grid = p.grid
    else:
        grid = np.asarray(p)
        report = verify(grid)
        if not report.valid:
            raise InvalidPda("array fails validation", report.violations)
    return _grid_to_graph(grid)


def _grid_to_graph(grid: np.ndarray) -> BipartiteColoredGraph:
    """Mechanical cell-to-edge mapping with no validity check."""
    grid = np.asarray(grid)
    f, k = grid.shape
    edges = []
    ii, jj = np.nonzero(grid != STAR)
    for i, j in zip(ii.tolist(), jj.tolist()):
        edges.append((j, i, int(grid[i, j])))
    return BipartiteColoredGraph(k=k, f=f, edges=tuple(edges))


def is_strong_coloring(g: BipartiteColoredGraph) -> bool:
    """True iff every same-colored pair is an induced matching.

    For edges (k1,f1), (k2,f2) of equal color this requires k1 != k2,
    f1 != f2, and neither (k1,f2) nor (k2,f1) present in the graph.
    """
    if not g.is_fully_colored():
        raise IncompleteColoring("graph has uncolored edges")
    present = {(u, v) for u, v, _ in g.edges}
    by_color: dict[int, list[tuple[int, int]]] = {}
    for u, v, c in g.edges:
        by_color.setdefault(c, []).append((u, v))
    for members in by_color.values():
        for a in range(len(members)):
            k1, f1 = members[a]
            for b in range(a + 1, len(members)):
                k2, f2 = members[b]
                if k1 == k2 or f1 == f2:
                    return False
                if (k1, f2) in present or (k2, f1) in present:
                    return False
    return True


def graph_to_pda(g: BipartiteColoredGraph) -> Pda:
    """Inverse of pda_to_graph; requires equal user degrees and a strong coloring."""
    degrees = g.k_degrees()
    if g.k >= 1 and len(set(degrees)) > 1:
        raise DegreeViolation(f"user degrees differ: {sorted(set(degrees))}")
    if not is_strong_coloring(g):
        raise ColoringViolation("edge coloring is not strong")
    grid = np.zeros((g.f, g.k), dtype=np.int64)
    for u, v, c in g.edges:
        grid[v, u] = c
    return Pda.from_grid(grid)


def greedy_strong_color(
    g: BipartiteColoredGraph, order: str = "lex", seed: Optional[int] = None
) -> BipartiteColoredGraph:
    """Color edges one by one with the smallest color legal at distance two.

    An edge (u, v) conflicts with every colored edge incident to a
    neighbor of u or a neighbor of v; those cover both shared endpoints
    and common third edges.  Ordering policies: "lex" (by user then
    packet, the default, reproducible) or "random" (seeded shuffle).
    Always completes; quadratic in the worst case.
    """
    edges = [(u, v) for u, v, _ in g.edges]
    if order == "lex":
        edges.sort()
    elif order == "random":
        rng = np.random.default_rng(seed)
        edges.sort()
        rng.shuffle(edges)
    else:
        raise InvalidParameter(f"unknown ordering policy {order!r}")

    nbr_of_user: dict[int, list[int]] = {}
    nbr_of_packet: dict[int, list[int]] = {}
    for u, v in edges:
        nbr_of_user.setdefault(u, []).append(v)
        nbr_of_packet.setdefault(v, []).append(u)
    colors_at_user: dict[int, set[int]] = {u: set() for u in nbr_of_user}
    colors_at_packet: dict[int, set[int]] = {v: set() for v in nbr_of_packet}

    assigned: dict[tuple[int, int], int] = {}
    for u, v in edges:
        forbidden = set()
        for v2 in nbr_of_user[u]:
            forbidden |= colors_at_packet[v2]
        for u2 in nbr_of_packet[v]:
            forbidden |= colors_at_user[u2]
        c = 1
        while c in forbidden:
            c += 1
        assigned[(u, v)] = c
        colors_at_user[u].add(c)
        colors_at_packet[v].add(c)

    return BipartiteColoredGraph(
        k=g.k,
        f=g.f,
        edges=tuple((u, v, assigned[(u, v)]) for u, v, _ in g.edges),
    )


def _renumber_canonical(edges: Sequence[Edge]) -> tuple[Edge, ...]:
    """Renumber colors 1..s by first occurrence in (user, packet) order."""
    mapping: dict[int, int] = {}
    out = []
    for u, v, c in sorted(edges):
        if c not in mapping:
            mapping[c] = len(mapping) + 1
        out.append((u, v, mapping[c]))
    return tuple(out)


def subsample(g: BipartiteColoredGraph, delta: int, rng_seed: int) -> BipartiteColoredGraph:
    """Keep delta uniformly chosen edges per user vertex, colors retained.

    Dropping edges cannot break a strong coloring, so the result converts
    to a valid array with z grown to f - delta.  Surviving colors are
    renumbered consecutively.  All randomness comes from rng_seed.
    """
    degrees = g.k_degrees()
    if len(set(degrees)) > 1:
        raise DegreeViolation(f"user degrees differ: {sorted(set(degrees))}")
    big_delta = degrees[0] if degrees else 0
    if not 0 < delta < big_delta:
        raise InvalidParameter(
            f"delta={delta} outside open range (0, {big_delta})"
        )
    if not is_strong_coloring(g):
        raise ColoringViolation("edge coloring is not strong")
    by_user: dict[int, list[Edge]] = {u: [] for u in range(g.k)}
    for e in g.edges:
        by_user[e[0]].append(e)
    rng = np.random.default_rng(rng_seed)
    kept: list[Edge] = []
    for u in range(g.k):
        members = by_user[u]
        idx = rng.choice(len(members), size=delta, replace=False)
        kept.extend(members[i] for i in sorted(int(x) for x in idx))
    return BipartiteColoredGraph(k=g.k, f=g.f, edges=_renumber_canonical(kept))


# --- JSON format ----------------------------------------------------------
#
# {"k": int, "f": int, "edges": [[user, packet, color-or-null], ...]}
# Edges are written sorted by (user, packet).  An optional "meta" object
# carries seed/config provenance; unknown keys are ignored on read.


def graph_to_json(g: BipartiteColoredGraph, meta: Optional[dict] = None) -> str:
    doc = {
        "k": g.k,
        "f": g.f,
        "edges": [[u, v, c] for u, v, c in g.edges],
    }
    if meta is not None:
        doc["meta"] = meta
    return json.dumps(doc, separators=(",", ":"), sort_keys=True) + "\n"


def graph_from_json(text: str) -> BipartiteColoredGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad graph JSON: {exc}") from exc
    try:
        edges = tuple((int(u), int(v), None if c is None else int(c)) for u, v, c in doc["edges"])
        return BipartiteColoredGraph(k=int(doc["k"]), f=int(doc["f"]), edges=edges)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad graph JSON structure: {exc}") from exc
