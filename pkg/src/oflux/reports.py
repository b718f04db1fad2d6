"""Run configuration and deterministic JSON/CSV report emission."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import __version__
from .errors import DomainError
from .io import atomic_write_text, sha256_file

__all__ = ["RunConfig", "TOLERANCE_PROFILES", "dump_json", "write_report", "csv_text"]

TOLERANCE_PROFILES = {
    "default": {"lemma": 1e-11, "boundary": 1e-10, "divergence": 1e-6,
                "identity_residual": 5e-2, "weak_residual": 1e-6},
    "strict": {"lemma": 1e-12, "boundary": 1e-12, "divergence": 1e-8,
               "identity_residual": 1e-3, "weak_residual": 1e-8},
}


@dataclass
class RunConfig:
    command: str = ""
    inputs: list = field(default_factory=list)
    out: str = "."
    nx: int = 32
    ny: int = 32
    nz_half: int = 16
    lz: float = math.pi
    times: list = field(default_factory=lambda: [0.0])
    spec: dict = field(default_factory=dict)   # FieldSpec for gen
    epsilons: list = field(default_factory=list)
    epsilon: float | None = None
    gamma: float | None = None
    scale_count: int = 4
    base: int = 1
    directions: list = field(default_factory=lambda: [[1, 0, 0], [0, 1, 0], [1, 1, 0]])
    t: float | None = None
    delta: float | None = None
    region: str = "above"
    seed: int = 0
    tolerance_profile: str = "default"
    tolerances: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise DomainError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**d)

    def tol(self) -> dict:
        if self.tolerance_profile not in TOLERANCE_PROFILES:
            raise DomainError(f"unknown tolerance profile {self.tolerance_profile!r}; "
                              f"expected one of {sorted(TOLERANCE_PROFILES)}")
        out = dict(TOLERANCE_PROFILES[self.tolerance_profile])
        out.update(self.tolerances)
        return out

    def validate(self) -> None:
        for k, v in self.tol().items():
            if not (isinstance(v, (int, float)) and v > 0):
                raise DomainError(f"tolerance {k} must be > 0, got {v!r}")
        eps = [float(e) for e in self.epsilons]
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise DomainError(f"epsilon ladder must be strictly decreasing, got {eps}")
        if any(e <= 0 for e in eps):
            raise DomainError("epsilon values must be positive")
        if self.scale_count < 2:
            raise DomainError(f"scale_count must be >= 2, got {self.scale_count}")
        if self.region not in ("above", "full"):
            raise DomainError(f"region must be 'above' or 'full', got {self.region!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tolerances"] = self.tol()
        return d


def _clean(x):
    # JSON has no NaN or infinity; map them to null so the output stays valid
    if isinstance(x, float):
        return float(x) if math.isfinite(x) else None
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if hasattr(x, "item") and not isinstance(x, (str, bytes)):
        return _clean(x.item())
    return x


def dump_json(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _cell(v):
    v = _clean(v)
    if v is None:
        return ""
    return repr(v) if isinstance(v, float) else v


def csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def input_digests(paths) -> list[dict]:
    return [{"path": str(p), "sha256": sha256_file(p)} for p in paths]


def write_report(cfg: RunConfig, name: str, result: dict, status: str,
                 csv_rows=None, inputs=None) -> Path:
    """Write <out>/<name>.json (and .csv when rows are given); returns the JSON path."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = {"tool": "oflux", "version": __version__, "command": cfg.command,
               "config": cfg.to_dict(), "inputs": input_digests(cfg.inputs if inputs is None else inputs),
               "status": status, "result": result}
    path = out / f"{name}.json"
    atomic_write_text(path, dump_json(payload))
    if csv_rows is not None:
        atomic_write_text(out / f"{name}.csv", csv_text(csv_rows))
    return path
