"""Shared fixtures data and random instance builders for the tests."""

from __future__ import annotations

import numpy as np

from upmsched.encoding import Assignment
from upmsched.instance import Instance


def t1(R: int = 1) -> Instance:
    """4 jobs, 2 machines, every p = 2, every setup = 3, d = [4, 8, 4, 8]."""
    s = np.full((4, 4, 2), 3)
    for i in range(4):
        s[i, i, :] = 0
    return Instance(4, 2, R, np.full((4, 2), 2), s, [4, 8, 4, 8], "T1")


T1_REF = Assignment([[0, 1], [2, 3]])


def small_instance(rng: np.random.Generator, n: int, m: int, R: int = 1,
                   p_max: int = 4, s_max: int = 4, name: str = "small") -> Instance:
    """Random integral instance with short durations (keeps time enumeration cheap)."""
    p = rng.integers(1, p_max + 1, size=(n, m))
    s = rng.integers(0, s_max + 1, size=(n, n, m))
    s[np.arange(n), np.arange(n), :] = 0
    total = int(p.min(axis=1).sum())
    d = rng.integers(1, max(2, total), size=n)
    return Instance(n, m, R, p, s, d, name)


def random_assignment(rng: np.random.Generator, n: int, m: int) -> Assignment:
    perm = rng.permutation(n).tolist()
    cuts = sorted(rng.integers(0, n + 1, size=m - 1).tolist())
    bounds = [0] + cuts + [n]
    return Assignment([perm[a:b] for a, b in zip(bounds, bounds[1:])])
