"""Runtime constants for the embedding engine."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Mapping


@dataclass
class EpsSchedule:
    """Density tolerances ``eps(i, j)``, geometric in the lexicographic rank of ``(i, j)``."""

    lo: float = 0.05
    hi: float = 0.30
    star: float = 0.35

    def value(self, i: int, j: int, imax: int) -> float:
        i = min(max(int(i), 0), imax)
        rank = 4 * i + min(max(int(j), 0), 3)
        top = 4 * imax + 3
        return self.lo * (self.hi / self.lo) ** (rank / top if top else 0.0)


@dataclass
class ThetaSchedule:
    """Marking ceilings ``theta_i < theta'_i < theta_{i+1}``.

    Starts at ``2 * base`` and grows by ``ratio`` per half-step until it reaches
    half of ``cap``; after that it closes half the remaining gap to ``cap`` per
    half-step, so the sequence stays strictly increasing and below ``cap``.
    """

    base: float = 0.02
    ratio: float = 1.5
    cap: float = 0.45
    star: float = 0.5

    def _seq(self, n: int) -> float:
        s = 2 * self.base
        if s >= self.cap:
            return self.cap * (1 - 0.5 ** (n + 1))
        for _ in range(n):
            nxt = s * self.ratio
            s = nxt if nxt <= self.cap / 2 else s + (self.cap - s) / 2
        return s

    def theta(self, i: int) -> float:
        return self._seq(2 * max(int(i), 0))

    def theta_prime(self, i: int) -> float:
        return self._seq(2 * max(int(i), 0) + 1)


@dataclass
class ParamConfig:
    k: int = 3
    buffer_fraction: float = 0.05
    buffer_distance: int | None = None
    queue_abort: float = 0.01
    queue_admission: float = 0.10
    universal_floor: float = 0.01
    eps: EpsSchedule = field(default_factory=EpsSchedule)
    theta: ThetaSchedule = field(default_factory=ThetaSchedule)
    c: float = 0.02
    c_prime: float = 0.5
    D: int = 3
    D_R: int = 1
    C: float = 1.0
    jump_distance: int = 4
    list_order: str = "bfs"
    reg_cadence: int = 0
    reg_samples: int = 8
    # analysis-only constants, logged but never branched on
    p0: float = 0.01
    p: float = 0.001
    gamma: float = 0.1

    def __post_init__(self) -> None:
        if isinstance(self.eps, Mapping):
            self.eps = EpsSchedule(**self.eps)
        if isinstance(self.theta, Mapping):
            self.theta = ThetaSchedule(**self.theta)
        self.validate()

    @property
    def distance(self) -> int:
        if self.buffer_distance is not None:
            return self.buffer_distance
        return 4 if self.k == 2 else 9

    @property
    def imax(self) -> int:
        return self.k ** 3 * self.D

    def eps_at(self, i: int, j: int = 0) -> float:
        return self.eps.value(i, j, self.imax)

    def theta_at(self, i: int) -> float:
        return self.theta.theta(min(i, self.imax))

    def validate(self) -> None:
        ratios = {
            "buffer_fraction": self.buffer_fraction, "queue_abort": self.queue_abort,
            "queue_admission": self.queue_admission, "universal_floor": self.universal_floor,
            "eps.lo": self.eps.lo, "eps.hi": self.eps.hi, "theta.cap": self.theta.cap,
            "c": self.c, "c_prime": self.c_prime,
        }
        for name, v in ratios.items():
            if not 0 <= v < 1 and not (name == "queue_abort" and v == 1):
                raise ValueError(f"{name}={v} must lie in [0, 1)")
        if not self.eps.lo < self.eps.hi:
            raise ValueError("eps schedule must increase")
        if self.theta.ratio <= 1:
            raise ValueError("theta.ratio must exceed 1")
        if self.queue_admission <= self.queue_abort and self.queue_abort < 1:
            raise ValueError("queue_admission must exceed queue_abort")
        if self.buffer_distance is not None and self.buffer_distance < 2:
            # adjacent buffer vertices would be matched independently in the conclusion
            raise ValueError("buffer_distance must be at least 2")
        if self.k < 1 or self.D < 0:
            raise ValueError("k and D must be positive")
        if self.list_order not in ("bfs", "id", "random"):
            raise ValueError(f"unknown list_order {self.list_order!r}")

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def flat(self) -> dict[str, Any]:
        out = {}
        for key, val in self.to_dict().items():
            if isinstance(val, dict):
                out.update({f"{key}.{k}": v for k, v in val.items()})
            else:
                out[key] = val
        return out

    def override(self, pairs: Mapping[str, Any]) -> "ParamConfig":
        data = self.to_dict()
        for key, raw in pairs.items():
            head, _, tail = key.partition(".")
            if head not in data:
                raise KeyError(f"unknown config key {key!r}")
            if tail:
                if not isinstance(data[head], dict) or tail not in data[head]:
                    raise KeyError(f"unknown config key {key!r}")
                data[head][tail] = _coerce(raw, data[head][tail])
            else:
                data[head] = _coerce(raw, data[head])
        return ParamConfig(**data)


def _coerce(raw: Any, current: Any) -> Any:
    if not isinstance(raw, str):
        return raw
    if raw.lower() in ("none", "null"):
        return None
    if isinstance(current, bool):
        return raw.lower() in ("1", "true", "yes")
    if isinstance(current, int) or current is None:
        try:
            return int(raw)
        except ValueError:
            if current is None:
                return raw
            raise
    if isinstance(current, float):
        return float(raw)
    return raw


def parse_config_text(text: str) -> dict[str, str]:
    """Flat ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {n}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key] = val
    return out


# Desk-scale settings found by sweeping small generated instances.  The
# density tolerances must be loose at n ~ 50 and admission must sit well
# below the buffer fraction or buffer vertices get queued.
CALIBRATED = {
    "eps.lo": 0.6, "eps.hi": 0.95, "buffer_fraction": 0.2, "buffer_distance": 2,
    "queue_abort": 1, "queue_admission": 0.05,
}


def calibrated(k: int = 3, **extra: Any) -> ParamConfig:
    return ParamConfig(k=k).override({**CALIBRATED, **extra})
