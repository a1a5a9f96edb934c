"""Built-in closed-form test data.

Every function takes ``d`` coordinate arrays and is smooth and bounded with
at least Gaussian decay, so each belongs to ``L^1 cap L^inf`` and to the
closure of ``C_0^inf`` in the exponential Orlicz spaces.
"""

from __future__ import annotations

import math

import numpy as np

from .hermite import hermite_function


def _r2(*xs):
    return sum(x * x for x in xs)


def smooth_step(z):
    """C-infinity step: 0 for ``z <= 0``, 1 for ``z >= 1``, ``S(z) + S(1-z) = 1``."""
    z = np.asarray(z, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(z > 0, np.exp(-1.0 / np.where(z > 0, z, 1.0)), 0.0)
        b = np.where(z < 1, np.exp(-1.0 / np.where(z < 1, 1.0 - z, 1.0)), 0.0)
    return a / (a + b)


def smoothed_indicator(d: int, measure: float = 1.0, height: float = 1.0, width: float = 0.25):
    """Mollified ``height * 1_A`` where ``A`` is a centred interval/disc of the given
    measure; the ramp of length ``width`` is symmetric about the boundary, so the
    integral equals ``height * measure``."""
    radius = measure / 2 if d == 1 else math.sqrt(measure / math.pi)

    def f(*xs):
        rho = np.sqrt(_r2(*xs))
        return height * smooth_step((radius + width / 2 - rho) / width)

    return f


def bump(d: int, radius: float = 3.0):
    """``exp(1 - 1/(1 - |x|^2/R^2))`` on ``|x| < R``, zero outside; peak value 1."""

    def f(*xs):
        z = _r2(*xs) / radius ** 2
        inside = z < 1
        with np.errstate(divide="ignore", over="ignore"):
            val = np.exp(1.0 - 1.0 / np.where(inside, 1.0 - z, 1.0))
        return np.where(inside, val, 0.0)

    return f


def ground_state(d: int):
    def f(*xs):
        return np.pi ** (-d / 4) * np.exp(-0.5 * _r2(*xs))

    return f


def ground_state_norm(d: int, q: float) -> float:
    """Closed-form ``||Phi_0||_{L^q(R^d)}``."""
    if math.isinf(q):
        return math.pi ** (-d / 4)
    return math.pi ** (-d / 4) * (2 * math.pi / q) ** (d / (2 * q))


def family(d: int) -> list:
    """The eight-member test family as ``(name, function)`` pairs."""

    def ground_plus_2(*xs):
        out = ground_state(d)(*xs) + hermite_function(2, xs[0]) * (
            1.0 if d == 1 else hermite_function(0, xs[1]))
        return out

    def narrow(*xs):
        return np.exp(-2.0 * _r2(*xs))

    def wide(*xs):
        return 0.5 * np.exp(-_r2(*xs) / 8.0)

    def shifted(*xs):
        return np.exp(-((xs[0] - 1.5) ** 2 + _r2(*xs[1:])))

    def modulated(*xs):
        return np.exp(-0.5 * _r2(*xs)) * np.cos(2.0 * xs[0])

    return [
        ("ground", ground_state(d)),
        ("ground_plus_2", ground_plus_2),
        ("narrow_gauss", narrow),
        ("wide_gauss", wide),
        ("shifted_gauss", shifted),
        ("indicator", smoothed_indicator(d, measure=2.0)),
        ("bump", bump(d, 2.0)),
        ("modulated", modulated),
    ]
