"""Smooth test maps F with closed-form Jacobians.

A desk-scale subset of the More-Wild least-squares problems, with their
standard starting points. Jacobians are p x n (row i is grad F_i).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class RegistryMap:
    name: str
    n: int
    p: int
    fun: Callable
    jacobian: Callable
    x0: np.ndarray


def rosenbrock(x):
    return np.array([10.0 * (x[1] - x[0] ** 2), 1.0 - x[0]])


def rosenbrock_jac(x):
    return np.array([[-20.0 * x[0], 10.0], [-1.0, 0.0]])


def linear_full_rank(x, p):
    n = len(x)
    out = np.full(p, -2.0 * x.sum() / p - 1.0)
    out[:n] += x
    return out


def linear_full_rank_jac(x, p):
    n = len(x)
    J = np.full((p, n), -2.0 / p)
    J[:n] += np.eye(n)
    return J


def powell_badly_scaled(x):
    return np.array([1e4 * x[0] * x[1] - 1.0, np.exp(-x[0]) + np.exp(-x[1]) - 1.0001])


def powell_badly_scaled_jac(x):
    return np.array([[1e4 * x[1], 1e4 * x[0]], [-np.exp(-x[0]), -np.exp(-x[1])]])


def freudenstein_roth(x):
    return np.array([
        -13.0 + x[0] + ((5.0 - x[1]) * x[1] - 2.0) * x[1],
        -29.0 + x[0] + ((1.0 + x[1]) * x[1] - 14.0) * x[1],
    ])


def freudenstein_roth_jac(x):
    t = x[1]
    return np.array([[1.0, -3.0 * t**2 + 10.0 * t - 2.0], [1.0, 3.0 * t**2 + 2.0 * t - 14.0]])


def brown_almost_linear(x):
    n = len(x)
    out = x + x.sum() - (n + 1.0)
    out[-1] = np.prod(x) - 1.0
    return out


def brown_almost_linear_jac(x):
    n = len(x)
    J = np.ones((n, n)) + np.eye(n)
    J[-1] = [np.prod(np.delete(x, j)) for j in range(n)]
    return J


def trigonometric(x):
    n = len(x)
    i = np.arange(1, n + 1)
    return n - np.cos(x).sum() + i * (1.0 - np.cos(x)) - np.sin(x)


def trigonometric_jac(x):
    n = len(x)
    i = np.arange(1, n + 1)
    J = np.tile(np.sin(x), (n, 1))
    J[np.diag_indices(n)] += i * np.sin(x) - np.cos(x)
    return J


def _catalog() -> dict[str, RegistryMap]:
    lfr_p = 5
    entries = [
        RegistryMap("rosenbrock", 2, 2, rosenbrock, rosenbrock_jac, np.array([-1.2, 1.0])),
        RegistryMap(
            "linear_full_rank", 3, lfr_p,
            lambda x: linear_full_rank(x, lfr_p),
            lambda x: linear_full_rank_jac(x, lfr_p),
            np.ones(3),
        ),
        RegistryMap("powell_badly_scaled", 2, 2, powell_badly_scaled, powell_badly_scaled_jac,
                    np.array([0.0, 1.0])),
        RegistryMap("freudenstein_roth", 2, 2, freudenstein_roth, freudenstein_roth_jac,
                    np.array([0.5, -2.0])),
        RegistryMap("brown_almost_linear", 3, 3, brown_almost_linear, brown_almost_linear_jac,
                    np.full(3, 0.5)),
        RegistryMap("trigonometric", 4, 4, trigonometric, trigonometric_jac, np.full(4, 0.25)),
    ]
    for m in entries:
        m.x0.flags.writeable = False  # shared across every problem built from the map
    return {m.name: m for m in entries}


_MAPS = _catalog()


def registry_maps() -> dict[str, RegistryMap]:
    return dict(_MAPS)


def get_map(name: str) -> RegistryMap:
    try:
        return _MAPS[name]
    except KeyError:
        raise KeyError(f"unknown map {name!r}; known: {sorted(_MAPS)}") from None
