"""Problem instances: data model, random generator, validation and JSON codec.

An instance holds ``n_jobs`` jobs to be scheduled on ``n_machines``
unrelated machines.  ``p[j, m]`` is the processing time of job ``j`` on
machine ``m`` and ``s[i, j, m]`` the setup time of job ``j`` when it directly
follows job ``i`` on machine ``m`` (the diagonal is unused).  At most ``R``
setups may run at the same time.  Due dates ``d`` are only needed for the
total-tardiness objective.

File format (JSON, one object)::

    {
      "name": "J6_M2_τ0.5_α0",
      "n_jobs": 6,
      "n_machines": 2,
      "R": 1,
      "p": [[...], ...],              # n_jobs rows, n_machines columns
      "s": [[[...], ...], ...],       # dense s[i][j][m]
      "d": [...]                      # optional, n_jobs entries
    }

``s`` may alternatively be a list of ``[i, j, m, value]`` entries covering
every ``i != j``; missing diagonal entries are filled with 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path

import numpy as np

__all__ = [
    "Instance",
    "GenParams",
    "InstanceFormatError",
    "generate_instance",
    "validate_instance",
    "min_successor_setup",
    "instance_to_dict",
    "instance_from_dict",
    "dumps_instance",
    "loads_instance",
    "write_instance",
    "read_instance",
]


class InstanceFormatError(ValueError):
    """Raised when an instance document cannot be parsed."""


def _frozen(a, dtype=None) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    if arr.dtype.kind == "f" and arr.size and np.all(np.isfinite(arr)) \
            and np.all(arr == np.round(arr)):
        arr = arr.astype(np.int64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Instance:
    n_jobs: int
    n_machines: int
    R: int
    p: np.ndarray
    s: np.ndarray
    d: np.ndarray | None = None
    name: str = "instance"

    def __post_init__(self):
        object.__setattr__(self, "p", _frozen(self.p))
        object.__setattr__(self, "s", _frozen(self.s))
        if self.d is not None:
            object.__setattr__(self, "d", _frozen(self.d))

    @property
    def has_due_dates(self) -> bool:
        return self.d is not None

    # Plain nested lists are much faster than numpy scalars inside the
    # combinatorial loops of the subproblem and the heuristics.
    @cached_property
    def p_list(self) -> list[list]:
        return self.p.tolist()

    @cached_property
    def s_list(self) -> list[list[list]]:
        return self.s.tolist()

    @cached_property
    def d_list(self) -> list | None:
        return None if self.d is None else self.d.tolist()

    def with_resources(self, R: int) -> "Instance":
        return Instance(self.n_jobs, self.n_machines, R, self.p, self.s,
                        self.d, self.name)

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        if (self.n_jobs, self.n_machines, self.R, self.name) != \
                (other.n_jobs, other.n_machines, other.R, other.name):
            return False
        if (self.d is None) != (other.d is None):
            return False
        return (np.array_equal(self.p, other.p)
                and np.array_equal(self.s, other.s)
                and (self.d is None or np.array_equal(self.d, other.d)))

    __hash__ = None


_R_FRACTIONS = (Fraction(2, 5), Fraction(3, 5))
_ALPHAS = (0, 1, 2)
_TAUS = (0.5, 0.8)


@dataclass(frozen=True)
class GenParams:
    """Parameters of the random instance generator.

    ``R_fraction`` is the share of machines that can be set up
    simultaneously (2/5 or 3/5), ``alpha`` selects the setup-time family,
    ``tau`` the due-date tightness and ``rho`` the due-date range.
    """

    n_jobs: int
    n_machines: int
    R_fraction: Fraction = Fraction(2, 5)
    alpha: int = 0
    tau: float = 0.5
    rho: float = 0.2
    seed: int = 0

    def __post_init__(self):
        frac = Fraction(self.R_fraction).limit_denominator(100)
        object.__setattr__(self, "R_fraction", frac)

    def validate(self) -> None:
        if self.n_jobs < 1 or self.n_machines < 1:
            raise ValueError("n_jobs and n_machines must be positive")
        if self.n_machines > self.n_jobs:
            raise ValueError(
                f"n_machines={self.n_machines} exceeds n_jobs={self.n_jobs}; "
                "the setup estimate S1 is undefined")
        if self.R_fraction not in _R_FRACTIONS:
            raise ValueError(f"R_fraction must be 2/5 or 3/5, got {self.R_fraction}")
        if self.alpha not in _ALPHAS:
            raise ValueError(f"alpha must be one of {_ALPHAS}, got {self.alpha}")
        if not any(math.isclose(self.tau, t) for t in _TAUS):
            raise ValueError(f"tau must be one of {_TAUS}, got {self.tau}")
        if not math.isclose(self.rho, 0.2):
            raise ValueError(f"rho is fixed to 0.2, got {self.rho}")

    @property
    def R(self) -> int:
        return max(1, round(self.R_fraction * self.n_machines))

    @property
    def name(self) -> str:
        return f"J{self.n_jobs}_M{self.n_machines}_τ{self.tau:g}_α{self.alpha}"


def processing_time(a: float, b: float, eps: float) -> float:
    return a * b + eps


def due_date_window(c_max: float, tau: float, rho: float = 0.2) -> tuple[float, float]:
    return c_max * (1 - tau - rho / 2), c_max * (1 - tau + rho / 2)


def estimated_makespan(p: np.ndarray, s: np.ndarray) -> float:
    """``(sum_j min_m p[j, m] + S1) / |M|``.

    S1 sums the ``n_jobs - n_machines`` smallest per-job values of
    ``min_{i != j, m} s[i, j, m]``: the machines' starting jobs need no setup.
    """
    n, m = p.shape
    p1 = p.min(axis=1).sum()
    masked = np.where(np.eye(n, dtype=bool)[:, :, None], np.inf, s.astype(float))
    kappa = np.sort(masked.min(axis=(0, 2))) if n > 1 else np.zeros(0)
    s1 = kappa[: n - m].sum()
    return float(p1 + s1) / m


def generate_instance(params: GenParams) -> Instance:
    """Draw a random instance.

    Random stream (``numpy`` PCG64 seeded with ``params.seed``), in order:
    ``a`` (n x m), ``b`` (n), ``eps`` (n x m), setup draws (n x n x m,
    diagonal drawn and discarded), due-date draws (n).  All durations are
    rounded half-to-even to integers.
    """
    params.validate()
    n, m = params.n_jobs, params.n_machines
    rng = np.random.Generator(np.random.PCG64(params.seed))

    a = rng.uniform(1.0, 10.0, size=(n, m))
    b = rng.uniform(1.0, 10.0, size=n)
    eps = rng.uniform(0.0, 10.0, size=(n, m))
    p = np.rint(processing_time(a, b[:, None], eps)).astype(np.int64)

    if params.alpha == 2:
        s = rng.uniform(5.0, 25.0, size=(n, n, m))
    else:
        lo, hi = (0.1, 0.5) if params.alpha == 0 else (0.5, 1.0)
        beta = rng.uniform(lo, hi, size=(n, n, m))
        s = beta * p[None, :, :]
    s = np.rint(s).astype(np.int64)
    s[np.arange(n), np.arange(n), :] = 0

    lo, hi = due_date_window(estimated_makespan(p, s), params.tau, params.rho)
    d = np.rint(rng.uniform(lo, hi, size=n)).astype(np.int64)

    return Instance(n, m, params.R, p, s, d, params.name)


def validate_instance(inst: Instance) -> list[str]:
    """Return the list of violated instance invariants (empty if valid)."""
    out = []
    n, m = inst.n_jobs, inst.n_machines
    if not isinstance(n, (int, np.integer)) or n < 1:
        out.append(f"n_jobs: must be >= 1, got {n}")
    if not isinstance(m, (int, np.integer)) or m < 1:
        out.append(f"n_machines: must be >= 1, got {m}")
    if not (1 <= inst.R <= max(m, 1)):
        out.append(f"R: must satisfy 1 <= R <= n_machines, got {inst.R}")
    if out:
        return out

    p = np.asarray(inst.p)
    if p.shape != (n, m):
        out.append(f"p: shape {p.shape} != {(n, m)}")
    else:
        for j, k in zip(*np.nonzero(~np.isfinite(p.astype(float)) | (p < 0))):
            out.append(f"p[{j}][{k}]: must be finite and >= 0, got {p[j, k]}")

    s = np.asarray(inst.s)
    if s.shape != (n, n, m):
        out.append(f"s: shape {s.shape} != {(n, n, m)}")
    else:
        bad = ~np.isfinite(s.astype(float)) | (s < 0)
        bad[np.arange(n), np.arange(n), :] = False
        for i, j, k in zip(*np.nonzero(bad)):
            out.append(f"s[{i}][{j}][{k}]: must be finite and >= 0, got {s[i, j, k]}")

    if inst.d is not None:
        d = np.asarray(inst.d)
        if d.shape != (n,):
            out.append(f"d: shape {d.shape} != {(n,)}")
        else:
            for j in np.nonzero(~np.isfinite(d.astype(float)) | (d < 0))[0]:
                out.append(f"d[{j}]: must be finite and >= 0, got {d[j]}")
    return out


def min_successor_setup(inst: Instance) -> np.ndarray:
    """``out[j, m] = min_{l != j} s[j, l, m]``, the cheapest setup after ``j``."""
    n = inst.n_jobs
    if n < 2:
        raise ValueError("min_successor_setup needs at least two jobs")
    masked = np.where(np.eye(n, dtype=bool)[:, :, None], np.inf,
                      inst.s.astype(float))
    out = masked.min(axis=1)
    if inst.s.dtype.kind == "i":
        out = out.astype(np.int64)
    return out


def max_predecessor_setup(inst: Instance) -> np.ndarray:
    """``out[j, m] = max_{k != j} s[k, j, m]`` (0 for single-job instances)."""
    n = inst.n_jobs
    if n < 2:
        return np.zeros((n, inst.n_machines), dtype=inst.s.dtype)
    masked = np.where(np.eye(n, dtype=bool)[:, :, None], -np.inf,
                      inst.s.astype(float))
    out = masked.max(axis=0)
    if inst.s.dtype.kind == "i":
        out = out.astype(np.int64)
    return out


# -- codec -----------------------------------------------------------------

_REQUIRED = ("name", "n_jobs", "n_machines", "R", "p", "s")


def instance_to_dict(inst: Instance) -> dict:
    doc = {
        "name": inst.name,
        "n_jobs": int(inst.n_jobs),
        "n_machines": int(inst.n_machines),
        "R": int(inst.R),
        "p": inst.p.tolist(),
        "s": inst.s.tolist(),
    }
    if inst.d is not None:
        doc["d"] = inst.d.tolist()
    return doc


def _parse_setups(raw, n: int, m: int) -> np.ndarray:
    if not isinstance(raw, list):
        raise InstanceFormatError("s: expected a dense tensor or a list of [i, j, m, value]")
    if raw and isinstance(raw[0], list) and len(raw) == n and raw[0] \
            and isinstance(raw[0][0], list):
        arr = np.array(raw, dtype=float)
        if arr.shape != (n, n, m):
            raise InstanceFormatError(f"s: dense tensor has shape {arr.shape}, expected {(n, n, m)}")
        return arr
    arr = np.full((n, n, m), np.nan)
    arr[np.arange(n), np.arange(n), :] = 0.0
    for entry in raw:
        if not (isinstance(entry, list) and len(entry) == 4):
            raise InstanceFormatError(f"s: bad sparse entry {entry!r}")
        i, j, k, v = entry
        if not (0 <= i < n and 0 <= j < n and 0 <= k < m):
            raise InstanceFormatError(f"s: index out of range in {entry!r}")
        arr[i, j, k] = v
    missing = np.argwhere(np.isnan(arr))
    if len(missing):
        i, j, k = missing[0]
        raise InstanceFormatError(f"s: missing entry for (i={i}, j={j}, m={k})")
    return arr


def instance_from_dict(doc: dict) -> Instance:
    if not isinstance(doc, dict):
        raise InstanceFormatError("instance document must be a JSON object")
    for key in _REQUIRED:
        if key not in doc:
            raise InstanceFormatError(f"missing field {key!r}")
    try:
        n, m, R = int(doc["n_jobs"]), int(doc["n_machines"]), int(doc["R"])
    except (TypeError, ValueError) as exc:
        raise InstanceFormatError(f"n_jobs/n_machines/R must be integers: {exc}") from None
    try:
        p = np.array(doc["p"], dtype=float)
    except (TypeError, ValueError):
        raise InstanceFormatError("p: not a numeric matrix") from None
    if p.shape != (n, m):
        raise InstanceFormatError(f"p: shape {p.shape}, expected {(n, m)}")
    try:
        s = _parse_setups(doc["s"], n, m)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InstanceFormatError):
            raise
        raise InstanceFormatError(f"s: {exc}") from None
    d = None
    if doc.get("d") is not None:
        try:
            d = np.array(doc["d"], dtype=float)
        except (TypeError, ValueError):
            raise InstanceFormatError("d: not a numeric vector") from None
        if d.shape != (n,):
            raise InstanceFormatError(f"d: shape {d.shape}, expected {(n,)}")
    return Instance(n, m, R, p, s, d, str(doc["name"]))


def dumps_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), ensure_ascii=False, sort_keys=True,
                      separators=(",", ":")) + "\n"


def loads_instance(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"invalid JSON: {exc}") from None
    return instance_from_dict(doc)


def write_instance(inst: Instance, path) -> None:
    Path(path).write_text(dumps_instance(inst), encoding="utf-8")


def read_instance(path) -> Instance:
    return loads_instance(Path(path).read_text(encoding="utf-8"))
