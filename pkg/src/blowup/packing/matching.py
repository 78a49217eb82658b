"""Maximum matchings in the reduced graph."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from .reduced import ReducedGraph


@dataclass
class MatchingResult:
    edges: list[tuple]
    uncovered: list[tuple]
    exact: bool
    nodes: int = 0
    cover: list[tuple] | None = None

    @property
    def size(self) -> int:
        return len(self.edges)


def reduced_matching(R: ReducedGraph, exact_limit: int = 30, node_limit: int = 2_000_000) -> MatchingResult:
    """Maximum-cardinality matching; exhaustive up to ``exact_limit`` clusters.

    Above the limit (or if the search exceeds ``node_limit`` nodes) the result
    is a greedy heaviest-first matching and ``exact`` is False.  ``cover`` is
    a set of ``size`` clusters meeting every edge when one is found, which
    certifies optimality on its own.
    """
    edges = R.edges
    if len(R.Z) <= exact_limit:
        found = _branch_and_bound(edges, node_limit)
        if found is not None:
            best, nodes = found
            return _result(R, best, True, nodes)
    greedy = []
    used: set = set()
    for S in sorted(edges, key=lambda S: (-R.weights[S], S)):
        if not used.intersection(S):
            greedy.append(S)
            used.update(S)
    return _result(R, greedy, False, 0)


def _result(R: ReducedGraph, chosen: list[tuple], exact: bool, nodes: int) -> MatchingResult:
    chosen = sorted(chosen)
    covered = {z for S in chosen for z in S}
    return MatchingResult(chosen, sorted(R.Z - covered), exact, nodes, _cover_certificate(R.edges, chosen))


def _branch_and_bound(edges: list[tuple], node_limit: int) -> tuple[list[tuple], int] | None:
    best: list[list[tuple]] = [[]]
    nodes = 0

    def bound(alive: list[tuple]) -> int:
        live = {z for S in alive for z in S}
        per_part: dict = {}
        for z in live:
            per_part[z[0]] = per_part.get(z[0], 0) + 1
        k = len(alive[0]) if alive else 1
        if len(per_part) == k:
            # every live edge meets every live part
            return min(per_part.values())
        return len(live) // k

    def go(alive: list[tuple], cur: list[tuple]) -> bool:
        nonlocal nodes
        nodes += 1
        if nodes > node_limit:
            return False
        if len(cur) > len(best[0]):
            best[0] = list(cur)
        if not alive or len(cur) + bound(alive) <= len(best[0]):
            return True
        # branch on the live cluster with fewest incident edges
        count: dict = {}
        for S in alive:
            for z in S:
                count[z] = count.get(z, 0) + 1
        z = min(count, key=lambda q: (count[q], q))
        for S in [S for S in alive if z in S]:
            rest = [T for T in alive if not set(T) & set(S)]
            if not go(rest, cur + [S]):
                return False
        return go([T for T in alive if z not in T], cur)

    if not go(sorted(edges), []):
        return None
    return best[0], nodes


def _cover_certificate(edges: list[tuple], chosen: list[tuple], limit: int = 8) -> list[tuple] | None:
    """One cluster per matching edge that together meet every edge, if such a choice exists."""
    if len(chosen) > limit:
        return None
    if not chosen:
        return [] if not edges else None
    for pick in product(*chosen):
        hit = set(pick)
        if all(hit.intersection(S) for S in edges):
            return sorted(hit)
    return None
