"""Benchmark suite: compiled kernels against the numpy fallback, plus pipeline stages."""
from __future__ import annotations

import time
from typing import Any, Callable

import numpy as np

from . import _kernels_py as pure

try:
    from . import _kernels as compiled  # type: ignore[attr-defined]
except ImportError:
    compiled = None

DEFAULT_SUITE: dict[str, Any] = {
    "repeats": 3,
    "cases": [
        {"case": "pair_deviation", "n": 10, "density": 0.5},
        {"case": "pair_deviation", "n": 14, "density": 0.5},
        {"case": "hom_count", "n": 12, "density": 0.5},
        {"case": "hom_count", "n": 24, "density": 0.5},
        {"case": "embed", "k": 2, "n": 30, "density": 0.9},
        {"case": "pack", "k": 2, "a1": 4, "n1": 20},
    ],
}


def _pair_input(n: int, density: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return (rng.random((n, n)) < density).astype(np.int64)


def _triangle_input(n: int, density: float, seed: int) -> tuple[list[int], list]:
    rng = np.random.default_rng(seed)
    cons = [(rng.random((n, n)) < density, (0, 1)), (rng.random((n, n)) < density, (1, 2)),
            (rng.random((n, n)) < density, (0, 2))]
    return [n, n, n], cons


def _timed(fn: Callable[[], Any], repeats: int) -> tuple[float, Any]:
    best, out = float("inf"), None
    for _ in range(repeats):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def run_case(case: dict[str, Any], repeats: int = 3, seed: int = 0) -> list[dict[str, Any]]:
    """Rows ``{case, params, backend, seconds, result}``; kernel cases run on both backends."""
    name = case["case"]
    params = {k: v for k, v in case.items() if k != "case"}
    rows = []
    if name in ("pair_deviation", "hom_count"):
        if name == "pair_deviation":
            adj = _pair_input(case["n"], case.get("density", 0.5), seed)
            d = float(adj.mean())
            calls = {b: (lambda m=m: m.pair_deviation_exact(adj, 0.1 * adj.size, d))
                     for b, m in (("python", pure), ("cython", compiled)) if m is not None}
        else:
            doms, cons = _triangle_input(case["n"], case.get("density", 0.5), seed)
            calls = {b: (lambda m=m: m.hom_count(doms, cons))
                     for b, m in (("python", pure), ("cython", compiled)) if m is not None}
        for backend, fn in calls.items():
            secs, res = _timed(fn, repeats)
            val = round(float(res[0]), 12) if isinstance(res, tuple) else int(res)
            rows.append({"case": name, "params": params, "backend": backend, "seconds": secs, "result": val})
        return rows
    if name == "embed":
        from .embed import calibrated, embed
        from .gen import InstanceSpec, build_instance
        k, n = case.get("k", 2), case.get("n", 30)
        spec = InstanceSpec(k=k, r=k + 1, sizes=n, densities={2: case.get("density", 0.9), 3: case.get("density", 0.9)},
                            family="random" if k == 2 else "clique-factor", family_args={"D": 3}, seed=seed)
        inst = build_instance(spec)
        secs, res = _timed(lambda: embed(inst["H"], inst["G"], None, calibrated(k), seed=seed), repeats)
        rows.append({"case": name, "params": params, "backend": "engine", "seconds": secs, "result": bool(res.ok)})
        return rows
    if name == "pack":
        from .packing import pack, plant_packing_instance
        k = case.get("k", 2)
        G0, cells = plant_packing_instance(r=k, k=k, a1=case.get("a1", 4), n1=case.get("n1", 20), seed=seed)
        F = (1, 2) if k == 2 else (1, 1, 2)
        secs, res = _timed(lambda: pack(G0, F, cells, seed=seed), repeats)
        rows.append({"case": name, "params": params, "backend": "pipeline", "seconds": secs,
                     "result": int(res.uncovered)})
        return rows
    raise ValueError(f"unknown bench case {name!r}")


def run_suite(suite: dict[str, Any] | None = None, seed: int = 0) -> list[dict[str, Any]]:
    suite = suite or DEFAULT_SUITE
    rows = []
    for case in suite.get("cases", []):
        rows.extend(run_case(case, suite.get("repeats", 3), seed))
    return rows
