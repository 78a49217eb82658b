"""Command-line front end: ``blowup gen|check|embed|pack|bench``.

Every file written carries a manifest (subcommand, argument list, seed,
config overrides, output names, package version).  JSON outputs hold it
under ``"manifest"``; CSV and complex text files start with a
``# manifest {...}`` comment line.  Structured outputs contain no wall-clock
data, so a rerun with the same arguments reproduces them byte for byte;
timings go to separate ``timings.csv`` files.

Exit status is 0 when the command ran without errors, 2 on bad input.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io as _io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from statistics import NormalDist
from typing import Any, Sequence

import numpy as np

from . import __version__
from . import io as cio
from .complex import Complex, ComplexError, MarkedComplex
from .embed import HypothesisError, ParamConfig, calibrated, embed, parse_config_text
from .embed.engine import check_hypotheses
from .superreg import SuperRegParams

log = logging.getLogger("blowup")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- outputs

class Outputs:
    """Collects files under ``--out`` and stamps each with the manifest."""

    def __init__(self, args: argparse.Namespace, argv: Sequence[str], overrides: dict[str, str]):
        self.dir = args.out
        self.manifest = {
            "subcommand": args.cmd, "args": list(argv), "seed": args.seed,
            "overrides": dict(sorted(overrides.items())), "outputs": [], "version": __version__,
        }
        os.makedirs(self.dir, exist_ok=True)

    def path(self, name: str) -> str:
        if name not in self.manifest["outputs"]:
            self.manifest["outputs"].append(name)
        return os.path.join(self.dir, name)

    def declare(self, *names: str) -> None:
        for n in names:
            self.path(n)

    def _header(self) -> str:
        return "# manifest " + json.dumps(self.manifest, sort_keys=True) + "\n"

    def json(self, name: str, payload: dict[str, Any]) -> str:
        path = self.path(name)
        with open(path, "w") as fh:
            json.dump({"manifest": self.manifest, **payload}, fh, sort_keys=True, indent=1)
            fh.write("\n")
        return path

    def csv(self, name: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
        path = self.path(name)
        with open(path, "w", newline="") as fh:
            fh.write(self._header())
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
        return path

    def complex(self, name: str, obj: Complex | MarkedComplex) -> str:
        path = self.path(name)
        with open(path, "w") as fh:
            fh.write(self._header())
            fh.write(cio.to_text(obj))
        return path

    def text(self, name: str, body: str) -> str:
        path = self.path(name)
        with open(path, "w") as fh:
            fh.write(self._header())
            fh.write(body)
        return path


def sha256_file(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


# ---------------------------------------------------------------- config

def read_config(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    with open(path) as fh:
        try:
            return parse_config_text(fh.read())
        except ValueError as exc:
            raise UsageError(f"{path}: {exc}") from None


def split_config(flat: dict[str, str]) -> dict[str, dict[str, str]]:
    """Route ``pack.*``, ``superreg.*`` and ``check.*`` keys; everything else is an engine setting."""
    groups: dict[str, dict[str, str]] = {"engine": {}, "pack": {}, "superreg": {}, "check": {}}
    for key, val in flat.items():
        head, _, tail = key.partition(".")
        if head in ("pack", "superreg", "check") and tail:
            groups[head][tail] = val
        else:
            groups["engine"][key] = val
    return groups


def engine_config(k: int, D: int, over: dict[str, str]) -> ParamConfig:
    """Calibrated desk-scale preset unless ``preset=plain`` asks for the plain defaults."""
    over = dict(over)
    preset = over.pop("preset", "calibrated")
    if preset not in ("calibrated", "plain"):
        raise UsageError(f"unknown preset {preset!r}")
    base = calibrated(k) if preset == "calibrated" else ParamConfig(k=k)
    try:
        return base.override({"D": max(D, 1), **over})
    except (KeyError, ValueError) as exc:
        raise UsageError(f"config: {exc}") from None


def superreg_params(over: dict[str, str]) -> SuperRegParams:
    vals = {"eps": 0.1, "eps_prime": 0.15, "d_a": 0.3, "theta": 0.1, "d": 0.3}
    for key, raw in over.items():
        if key not in vals:
            raise UsageError(f"unknown config key superreg.{key}")
        vals[key] = float(raw)
    try:
        return SuperRegParams(**vals)
    except ValueError as exc:
        raise UsageError(f"config: {exc}") from None


def _typed(raw: str, current: Any) -> Any:
    if isinstance(current, bool):
        return raw.lower() in ("1", "true", "yes")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    return raw


def pack_params(over: dict[str, str], superreg: dict[str, str]):
    from .packing import PackParams
    p = PackParams()
    for key, raw in over.items():
        if key.startswith("embed."):
            p.embed_overrides[key[len("embed."):]] = raw
        elif key in ("d3", "nu", "gamma", "embed_attempts", "exact_limit", "cover_budget"):
            setattr(p, key, _typed(raw, getattr(p, key)))
        else:
            raise UsageError(f"unknown config key pack.{key}")
    if superreg:
        base = dict(zip(("eps", "eps_prime", "d_a", "theta", "d"), p.superreg.as_tuple()))
        p.superreg = superreg_params({**{k: str(v) for k, v in base.items()}, **superreg})
    return p


# ---------------------------------------------------------------- loading

def load_json(path: str) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise cio.ParseError(exc.lineno, f"{path}: {exc.msg}") from None


def load_complex(path: str) -> Complex | MarkedComplex:
    try:
        return cio.load(path)
    except cio.ParseError as exc:
        raise cio.ParseError(exc.line, f"{path}: {str(exc).split(': ', 1)[1]}") from None


def _sibling(base: str, name: str) -> str:
    return os.path.join(os.path.dirname(os.path.abspath(base)), name)


def load_instance(path: str) -> dict[str, Any]:
    """An ``instance.json`` written by ``gen``; the files it lists must still match their hashes."""
    data = load_json(path)
    files = data.get("files", {})
    for name, digest in files.items():
        if sha256_file(_sibling(path, name)) != digest:
            raise UsageError(f"{name} does not match the hash recorded in {path}")
    return data


# ---------------------------------------------------------------- gen

def cmd_gen(args: argparse.Namespace, out: Outputs, groups: dict) -> int:
    from .gen import InstanceSpec, build_instance
    spec = load_json(args.spec)
    kind = spec.pop("kind", "embed")
    if kind == "embed":
        spec["seed"] = args.seed
        try:
            ispec = InstanceSpec.from_dict(spec)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"{args.spec}: {exc}") from None
        inst = build_instance(ispec)
        out.declare("G.txt", "H.txt", "gamma.json", "instance.json")
        out.complex("G.txt", inst["G"])
        out.complex("H.txt", inst["H"])
        out.json("gamma.json", {"gamma": cio.gamma_to_json_obj(inst["gamma"])})
        files = {n: sha256_file(out.path(n)) for n in ("G.txt", "H.txt", "gamma.json")}
        out.json("instance.json", {"kind": "embed", "spec": ispec.to_dict(), "files": files,
                                   "degree": inst["degree"], "leftovers": inst["leftovers"]})
        log.info("instance: %s parts, max degree %s", ispec.r, inst["degree"])
        return 0
    if kind == "packing":
        from .packing import plant_packing_instance
        allowed = {"r", "k", "a1", "n1", "density", "noise", "graph_cells", "triads_per_cluster", "shuffle"}
        extra = set(spec) - allowed
        if extra:
            raise UsageError(f"{args.spec}: unknown keys {sorted(extra)}")
        try:
            G0, cells = plant_packing_instance(seed=args.seed, **spec)
        except ComplexError as exc:
            raise UsageError(f"{args.spec}: {exc}") from None
        out.declare("G0.txt", "approx.txt", "cells.json", "instance.json")
        out.complex("G0.txt", G0)
        out.complex("approx.txt", cells.approximation)
        out.json("cells.json", {"cells": cells.to_json_obj()})
        files = {n: sha256_file(out.path(n)) for n in ("G0.txt", "approx.txt", "cells.json")}
        out.json("instance.json", {"kind": "packing", "spec": {**spec, "seed": args.seed}, "files": files})
        return 0
    raise UsageError(f"{args.spec}: unknown instance kind {kind!r}")


# ---------------------------------------------------------------- check

def _complex_from(path: str) -> MarkedComplex:
    if path.endswith("instance.json"):
        data = load_instance(path)
        name = "G.txt" if data.get("kind") == "embed" else "G0.txt"
        obj = load_complex(_sibling(path, name))
    else:
        obj = load_complex(path)
    return obj if isinstance(obj, MarkedComplex) else MarkedComplex.unmarked(obj)


def cmd_check(args: argparse.Namespace, out: Outputs, groups: dict) -> int:
    from .regularity import BudgetExceeded, regularity_deviation
    from .superreg import check_super_regular
    GM = _complex_from(args.instance)
    G = GM.complex
    opts = groups["check"]
    tol = float(opts.get("eps", 0.15))
    min_frac = float(opts.get("min_frac", 0.3))
    samples = int(opts.get("samples", 200))
    if args.mode == "reg":
        rows = []
        for c in sorted(G.parts):
            if G.index.size(c) < 2:
                continue
            try:
                rep = regularity_deviation(G, c, "exact", budget=args.budget, min_frac=min_frac)
            except (BudgetExceeded, ComplexError):
                rep = regularity_deviation(G, c, "sampled", min_frac=min_frac, seed=args.seed, samples=samples)
            rows.append({"copy": c, "subset": list(G.index.subset(c)), "mode": rep.method,
                         "density": round(rep.density, 12), "deviation": round(rep.deviation, 12),
                         "flagged": rep.deviation > tol})
        flagged = [r["copy"] for r in rows if r["flagged"]]
        out.json("report.json", {"mode": "reg", "tolerance": tol, "min_frac": min_frac, "copies": rows,
                                 "flagged": flagged, "ok": not flagged})
        log.info("regularity: %d copies checked, %d flagged", len(rows), len(flagged))
        return 0
    p = superreg_params(groups["superreg"])
    rep = check_super_regular(GM, p, samples=min(samples, 60), seed=args.seed)
    out.json("report.json", {"mode": "super", **json.loads(rep.to_json())})
    log.info("super-regularity: %d violations", len(rep.violations))
    return 0


# ---------------------------------------------------------------- embed

def wilson(successes: int, n: int, level: float = 0.95) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    z = NormalDist().inv_cdf(0.5 + level / 2)
    p = successes / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, mid - half), min(1.0, mid + half)


def _trial(job: tuple) -> tuple[dict[str, Any], str]:
    H, GM, gamma, cfg, seed, trial, want_transcript = job
    buf = _io.StringIO() if want_transcript else None
    res = embed(H, GM, gamma, cfg, seed=seed, transcript=buf)
    row: dict[str, Any] = {"trial": trial, "seed": seed, "ok": res.ok}
    if res.ok:
        row.update(T=res.T, phi=res.to_dict()["phi"])
    else:
        row.update(stage=res.stage, t=res.t)
    return row, buf.getvalue() if buf is not None else ""


def _embed_inputs(args: argparse.Namespace):
    gamma = None
    if args.instance:
        data = load_instance(args.instance)
        if data.get("kind") != "embed":
            raise UsageError(f"{args.instance} is not an embedding instance")
        H = load_complex(_sibling(args.instance, "H.txt"))
        G = load_complex(_sibling(args.instance, "G.txt"))
        gamma = cio.gamma_from_json_obj(load_json(_sibling(args.instance, "gamma.json"))["gamma"])
    else:
        if not (args.H and args.G):
            raise UsageError("embed needs H and G files or --instance")
        H, G = load_complex(args.H), load_complex(args.G)
    if isinstance(H, MarkedComplex):
        H = H.complex
    GM = G if isinstance(G, MarkedComplex) else MarkedComplex.unmarked(G)
    if args.marks:
        M = load_complex(args.marks)
        M = M.complex if isinstance(M, MarkedComplex) else M
        if not M.same_frame(GM.complex):
            raise UsageError("marks file does not share the frame of G")
        GM = MarkedComplex(GM.complex, {c: M.part(c) for c in M.top_copies()
                                        if M.index.size(c) == M.k and M.part(c).any()})
    if args.gamma:
        gamma = cio.gamma_from_json_obj(load_json(args.gamma)["gamma"])
    return H, GM, gamma or None


def cmd_embed(args: argparse.Namespace, out: Outputs, groups: dict) -> int:
    from .gen import max_degree
    H, GM, gamma = _embed_inputs(args)
    cfg = engine_config(GM.complex.k, max_degree(H), groups["engine"])
    problems = check_hypotheses(H, GM, gamma, cfg)
    if problems:
        raise HypothesisError(problems)
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(args.seed).spawn(args.trials)]
    jobs = [(H, GM, gamma, cfg, s, i, bool(args.transcript)) for i, s in enumerate(seeds)]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            done = list(pool.map(_trial, jobs))
    else:
        done = [_trial(j) for j in jobs]
    rows = [r for r, _ in done]
    hist: dict[str, int] = {}
    for r in rows:
        key = "ok" if r["ok"] else r["stage"]
        hist[key] = hist.get(key, 0) + 1
    wins = sum(r["ok"] for r in rows)
    lo, hi = wilson(wins, len(rows))
    if args.transcript:
        out.manifest["outputs"].append(args.transcript)
    out.json("results.json", {"config": cfg.to_dict(), "trials": rows, "histogram": hist,
                              "success_rate": wins / len(rows), "ci95": [round(lo, 12), round(hi, 12)]})
    if args.transcript:
        with open(args.transcript, "w") as fh:
            fh.write(out._header())
            for _, text in done:
                fh.write(text)
    log.info("embedding: %d/%d trials succeeded", wins, len(rows))
    return 0


# ---------------------------------------------------------------- pack

def parse_F(text: str) -> tuple[int, ...]:
    try:
        F = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"F must be comma separated class sizes, got {text!r}") from None
    if not F or min(F) < 1:
        raise UsageError("class sizes of F must be positive")
    return F


def cmd_pack(args: argparse.Namespace, out: Outputs, groups: dict) -> int:
    from .packing import CellSystem, MajorizationError, pack, validate_packing
    data = load_instance(args.instance)
    if data.get("kind") != "packing":
        raise UsageError(f"{args.instance} is not a packing instance")
    G0 = load_complex(_sibling(args.instance, "G0.txt"))
    approx = load_complex(_sibling(args.instance, "approx.txt"))
    cells = CellSystem.from_json_obj(load_json(_sibling(args.instance, "cells.json"))["cells"], approx)
    F = parse_F(args.F)
    if len(F) != cells.k:
        raise UsageError(f"F needs {cells.k} classes for this instance")
    params = pack_params(groups["pack"], groups["superreg"])
    try:
        res = pack(G0, F, cells, params, seed=args.seed)
    except MajorizationError as exc:
        raise UsageError(f"F cannot be balanced: {exc}") from None
    errors = validate_packing(G0, res.copies, F)
    out.declare("packing.json", "summary.csv", "timings.csv")
    out.json("packing.json", {"params": params.to_dict(), "result": res.to_dict(), "errors": errors})
    cells_ok = sum(1 for c in res.cells if not c.failure)
    out.csv("summary.csv", ["metric", "value"], [
        ["n", res.n], ["copies", len(res.copies)], ["covered", res.covered], ["uncovered", res.uncovered],
        ["allowance", res.allowance], ["matched_cells", res.matching.size],
        ["unmatched_clusters", len(res.matching.uncovered)], ["cells_embedded", cells_ok],
        ["cover_copies", len(res.cover.copies)], ["cover_failed", len(res.cover.failed)],
        ["ok", int(res.ok)], ["within_allowance", int(res.uncovered <= res.allowance)],
    ])
    out.csv("timings.csv", ["stage", "seconds"], [[k, f"{v:.6f}"] for k, v in sorted(res.timings.items())])
    log.info("packing: %d copies, %d uncovered (allowance %d)", len(res.copies), res.uncovered, res.allowance)
    if errors:
        for e in errors:
            print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------- bench

def cmd_bench(args: argparse.Namespace, out: Outputs, groups: dict) -> int:
    from .bench import DEFAULT_SUITE, compiled, run_suite
    suite = load_json(args.suite) if args.suite else DEFAULT_SUITE
    rows = run_suite(suite, seed=args.seed)
    out.declare("bench.json", "timings.csv")
    agree: dict[str, bool] = {}
    for r in rows:
        key = json.dumps([r["case"], r["params"]], sort_keys=True)
        same = [q["result"] for q in rows if json.dumps([q["case"], q["params"]], sort_keys=True) == key]
        agree[key] = all(v == same[0] for v in same)
    out.json("bench.json", {
        "compiled": compiled is not None, "suite": suite,
        "results": [{k: v for k, v in r.items() if k != "seconds"} for r in rows],
        "backends_agree": all(agree.values()),
    })
    out.csv("timings.csv", ["case", "params", "backend", "seconds", "result"],
            [[r["case"], json.dumps(r["params"], sort_keys=True), r["backend"], f"{r['seconds']:.6f}", r["result"]]
             for r in rows])
    return 0 if all(agree.values()) else 1


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--config", help="flat key=value config file")
    common.add_argument("--jobs", type=int, default=1, help="worker processes (trials run in parallel)")
    common.add_argument("--verbose", action="store_true")

    def seeded(sp: argparse.ArgumentParser, required: bool = True) -> None:
        sp.add_argument("--seed", type=int, required=required, default=None if required else 0,
                        help="64-bit seed" + ("" if required else " (default 0)"))

    ap = argparse.ArgumentParser(prog="blowup", description="Blow-up embeddings, regularity checks and packings.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate an instance from a JSON spec")
    g.add_argument("spec")
    seeded(g)

    c = sub.add_parser("check", parents=[common], help="measure regularity or super-regularity")
    c.add_argument("instance", help="complex file or instance.json")
    c.add_argument("--mode", choices=("reg", "super"), default="reg")
    c.add_argument("--budget", type=int, default=1 << 22, help="work limit for exact regularity")
    seeded(c)

    e = sub.add_parser("embed", parents=[common], help="run the randomized embedding")
    e.add_argument("H", nargs="?")
    e.add_argument("G", nargs="?")
    e.add_argument("--instance", help="instance.json from gen")
    e.add_argument("--marks", help="complex whose top level marks edges of G")
    e.add_argument("--gamma", help="restricted positions (gamma.json)")
    e.add_argument("--trials", type=int, default=1)
    e.add_argument("--transcript", help="JSON-lines step log of every trial")
    seeded(e)

    p = sub.add_parser("pack", parents=[common], help="run the packing pipeline")
    p.add_argument("instance", help="packing instance.json from gen")
    p.add_argument("F", help="class sizes of the complete partite F, e.g. 1,1,2")
    seeded(p)

    b = sub.add_parser("bench", parents=[common], help="time kernels and pipeline stages")
    b.add_argument("suite", nargs="?", help="suite JSON (default: built-in suite)")
    seeded(b, required=False)
    return ap


COMMANDS = {"gen": cmd_gen, "check": cmd_check, "embed": cmd_embed, "pack": cmd_pack, "bench": cmd_bench}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    if args.jobs < 1 or getattr(args, "trials", 1) < 1:
        print("error: --jobs and --trials must be positive", file=sys.stderr)
        return 2
    try:
        flat = read_config(args.config)
        groups = split_config(flat)
        out = Outputs(args, argv, flat)
        return COMMANDS[args.cmd](args, out, groups)
    except cio.ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except HypothesisError as exc:
        print(f"hypothesis error: {exc}", file=sys.stderr)
        return 2
    except (UsageError, ComplexError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
