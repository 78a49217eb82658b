"""Text and JSON serialization of complexes.

Text layout::

    blowup-complex 1
    r <base_size>
    k <max copy size>
    copy <id> <subset> <J>:<copy> ...
    ground <part>:<size> ...
    marked 0|1
    part <copy> <count>
    <ordinals> (one sorted tuple per line, '-' for the empty tuple)
    marks <copy> <count>
    ...
    end

Subsets are written comma separated with ``-`` for the empty set.
"""
from __future__ import annotations

import json
from typing import Any, Iterable

import numpy as np

from .complex import Complex, ComplexError, Ground, IndexComplex, MarkedComplex

MAGIC = "blowup-complex 1"
JSON_FORMAT = "blowup.complex/1"


class ParseError(ComplexError):
    def __init__(self, line: int, msg: str):
        super().__init__(f"line {line}: {msg}")
        self.line = line


def _fmt_subset(s: Iterable[int]) -> str:
    s = tuple(s)
    return ",".join(map(str, s)) if s else "-"


def _parse_subset(tok: str) -> tuple:
    return () if tok == "-" else tuple(int(x) for x in tok.split(","))


def _tuples(arr: np.ndarray) -> list[tuple]:
    return [tuple(int(v) for v in row) for row in np.argwhere(arr)]


def to_text(obj: Complex | MarkedComplex) -> str:
    G, marks = (obj.complex, obj.marks) if isinstance(obj, MarkedComplex) else (obj, {})
    idx = G.index
    lines = [MAGIC, f"r {idx.base_size}", f"k {idx.k}"]
    for c in idx.copies:
        below = " ".join(f"{_fmt_subset(j)}:{d}" for j, d in sorted(idx.below(c).items()))
        lines.append(f"copy {c} {_fmt_subset(idx.subset(c))} {below}")
    lines.append("ground " + " ".join(f"{p}:{n}" for p, n in G.ground.sizes))
    lines.append(f"marked {int(isinstance(obj, MarkedComplex))}")
    for tag, table in (("part", G.parts), ("marks", marks)):
        for c in sorted(table):
            tups = _tuples(table[c])
            lines.append(f"{tag} {c} {len(tups)}")
            lines.extend(" ".join(map(str, t)) or "-" for t in tups)
    lines.append("end")
    return "\n".join(lines) + "\n"


def from_text(text: str) -> Complex | MarkedComplex:
    lines = text.splitlines()
    pos = 0

    def take() -> tuple[int, list[str]]:
        nonlocal pos
        while pos < len(lines):
            raw = lines[pos].strip()
            pos += 1
            if raw and not raw.startswith("#"):
                return pos, raw.split()
        raise ParseError(pos, "unexpected end of input")

    ln, toks = take()
    if " ".join(toks) != MAGIC:
        raise ParseError(ln, f"expected header {MAGIC!r}")
    ln, toks = take()
    if toks[0] != "r" or len(toks) != 2:
        raise ParseError(ln, "expected 'r <int>'")
    r = _int(toks[1], ln)
    ln, toks = take()
    if toks[0] != "k":
        raise ParseError(ln, "expected 'k <int>'")
    table = []
    ln, toks = take()
    while toks[0] == "copy":
        try:
            below = []
            for t in toks[3:]:
                j, d = t.rsplit(":", 1)
                below.append([list(_parse_subset(j)), int(d)])
            table.append({"id": int(toks[1]), "subset": list(_parse_subset(toks[2])), "below": below})
        except (ValueError, IndexError):
            raise ParseError(ln, "malformed copy line") from None
        ln, toks = take()
    try:
        idx = IndexComplex.from_table(r, table)
    except (ComplexError, IndexError, KeyError, ValueError) as exc:
        raise ParseError(ln, f"inconsistent copy table: {exc}") from None
    if toks[0] != "ground":
        raise ParseError(ln, "expected ground line")
    try:
        ground = Ground.of({int(a): int(b) for a, b in (t.split(":") for t in toks[1:])})
    except ValueError:
        raise ParseError(ln, "malformed ground line") from None
    ln, toks = take()
    if toks[0] != "marked" or len(toks) != 2:
        raise ParseError(ln, "expected 'marked 0|1'")
    marked = bool(_int(toks[1], ln))
    parts: dict[int, np.ndarray] = {}
    marks: dict[int, np.ndarray] = {}
    ln, toks = take()
    while toks[0] in ("part", "marks"):
        if len(toks) != 3:
            raise ParseError(ln, f"expected '{toks[0]} <copy> <count>'")
        c, cnt = _int(toks[1], ln), _int(toks[2], ln)
        if not 0 <= c < len(idx):
            raise ParseError(ln, f"unknown copy {c}")
        shape = tuple(ground.size(p) for p in idx.axes(c))
        arr = np.zeros(shape, dtype=bool)
        for _ in range(cnt):
            ln, row = take()
            t = () if row == ["-"] else tuple(_int(x, ln) for x in row)
            if len(t) != len(shape) or any(not 0 <= v < n for v, n in zip(t, shape)):
                raise ParseError(ln, f"tuple {t} is not a valid tuple of copy {c}")
            arr[t] = True
        (parts if toks[0] == "part" else marks)[c] = arr
        ln, toks = take()
    if toks != ["end"]:
        raise ParseError(ln, "expected 'end'")
    try:
        G = Complex(idx, ground, parts)
        return MarkedComplex(G, marks) if marked else G
    except ComplexError as exc:
        raise ParseError(ln, str(exc)) from None


def _int(tok: str, ln: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(ln, f"expected an integer, got {tok!r}") from None


def to_json_obj(obj: Complex | MarkedComplex) -> dict[str, Any]:
    G, marks = (obj.complex, obj.marks) if isinstance(obj, MarkedComplex) else (obj, {})
    idx = G.index
    return {
        "format": JSON_FORMAT,
        "r": idx.base_size,
        "k": idx.k,
        "copies": idx.to_table(),
        "ground": [[p, n] for p, n in G.ground.sizes],
        "marked": isinstance(obj, MarkedComplex),
        "parts": {str(c): [list(t) for t in _tuples(G.parts[c])] for c in sorted(G.parts)},
        "marks": {str(c): [list(t) for t in _tuples(marks[c])] for c in sorted(marks)},
    }


def from_json_obj(data: dict[str, Any]) -> Complex | MarkedComplex:
    if data.get("format") != JSON_FORMAT:
        raise ComplexError(f"expected format {JSON_FORMAT!r}")
    idx = IndexComplex.from_table(data["r"], data["copies"])
    ground = Ground.of({int(p): int(n) for p, n in data["ground"]})

    def load(table: dict) -> dict[int, np.ndarray]:
        out = {}
        for key, tups in table.items():
            c = int(key)
            shape = tuple(ground.size(p) for p in idx.axes(c))
            arr = np.zeros(shape, dtype=bool)
            for t in tups:
                t = tuple(t)
                if len(t) != len(shape) or any(not 0 <= v < n for v, n in zip(t, shape)):
                    raise ComplexError(f"tuple {t} is not a valid tuple of copy {c}")
                arr[t] = True
            out[c] = arr
        return out

    G = Complex(idx, ground, load(data.get("parts", {})))
    marks = load(data.get("marks", {}))
    return MarkedComplex(G, marks) if data.get("marked") else G


def to_json(obj: Complex | MarkedComplex) -> str:
    return json.dumps(to_json_obj(obj), sort_keys=True, separators=(",", ":"))


def from_json(text: str) -> Complex | MarkedComplex:
    return from_json_obj(json.loads(text))


def load(path: str) -> Complex | MarkedComplex:
    with open(path) as fh:
        text = fh.read()
    return from_json(text) if text.lstrip().startswith("{") else from_text(text)


def save(obj: Complex | MarkedComplex, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(to_json(obj) if path.endswith(".json") else to_text(obj))


def gamma_to_json_obj(gamma: dict | None) -> list[dict[str, Any]]:
    """Restricted positions as ``[{"simplex": [[part, ord], ...], "shape": [...], "allowed": [...]}]``."""
    out = []
    for key, arr in sorted((gamma or {}).items()):
        arr = np.asarray(arr, dtype=bool)
        out.append({"simplex": [list(v) for v in key], "shape": list(arr.shape), "allowed": _tuples(arr)})
    return out


def gamma_from_json_obj(data: list[dict[str, Any]]) -> dict[tuple, np.ndarray]:
    out = {}
    for n, item in enumerate(data):
        try:
            key = tuple(tuple(int(x) for x in v) for v in item["simplex"])
            arr = np.zeros(tuple(item["shape"]), dtype=bool)
            for t in item["allowed"]:
                arr[tuple(t)] = True
        except (KeyError, TypeError, IndexError, ValueError) as exc:
            raise ComplexError(f"restriction entry {n}: {exc}") from None
        out[key] = arr
    return out
