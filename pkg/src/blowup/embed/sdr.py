"""Bipartite matching for the concluding step."""
from __future__ import annotations

from collections import deque
from typing import Sequence

INF = float("inf")


def hopcroft_karp(adj: Sequence[Sequence[int]], n_right: int) -> tuple[list[int], list[int]]:
    """Maximum matching; returns (match of each left vertex, match of each right vertex), -1 if free."""
    n_left = len(adj)
    match_l = [-1] * n_left
    match_r = [-1] * n_right
    dist = [0.0] * n_left

    def bfs() -> bool:
        queue = deque()
        for u in range(n_left):
            if match_l[u] == -1:
                dist[u] = 0
                queue.append(u)
            else:
                dist[u] = INF
        found = False
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                m = match_r[w]
                if m == -1:
                    found = True
                elif dist[m] == INF:
                    dist[m] = dist[u] + 1
                    queue.append(m)
        return found

    def dfs(u: int) -> bool:
        # iterative to avoid recursion limits on long augmenting paths
        stack = [(u, iter(adj[u]))]
        path = []
        while stack:
            v, it = stack[-1]
            advanced = False
            for w in it:
                m = match_r[w]
                if m == -1:
                    path.append((v, w))
                    for a, b in path:
                        match_l[a] = b
                        match_r[b] = a
                    return True
                if dist[m] == dist[v] + 1:
                    path.append((v, w))
                    stack.append((m, iter(adj[m])))
                    advanced = True
                    break
            if not advanced:
                dist[v] = INF
                stack.pop()
                if path:
                    path.pop()
        return False

    while bfs():
        for u in range(n_left):
            if match_l[u] == -1:
                dfs(u)
    return match_l, match_r


def hall_witness(adj: Sequence[Sequence[int]], match_l: Sequence[int], match_r: Sequence[int]) -> tuple[list[int], list[int]] | None:
    """A left set ``S`` with ``|N(S)| < |S|`` grown from one free left vertex, or None."""
    free = [u for u, m in enumerate(match_l) if m == -1]
    if not free:
        return None
    start = free[0]
    seen_l = {start}
    seen_r = set()
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w in seen_r:
                continue
            seen_r.add(w)
            m = match_r[w]
            if m != -1 and m not in seen_l:
                seen_l.add(m)
                queue.append(m)
    return sorted(seen_l), sorted(seen_r)
