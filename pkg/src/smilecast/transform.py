"""Map SABR parameters to the real line and back.

``a = log(alpha)``, ``n = log(nu)``, ``r = log((1 + rho) / (1 - rho))``.
Any finite triple maps back to a valid :class:`SabrParams`, which is what
keeps forecasts made in these coordinates arbitrage-free.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import InvalidInputError
from .sabr import SabrParams


class TransformedParams(NamedTuple):
    a: float
    n: float
    r: float


def to_unconstrained(p: SabrParams) -> TransformedParams:
    # log1p form keeps full precision for |rho| near 0
    return TransformedParams(math.log(p.alpha), math.log(p.nu), math.log1p(p.rho) - math.log1p(-p.rho))


def from_unconstrained(t: TransformedParams) -> SabrParams:
    a, n, r = t
    if not all(math.isfinite(v) for v in (a, n, r)):
        raise InvalidInputError("transformed parameters must be finite")
    return SabrParams(alpha=_positive(a), nu=_positive(n), rho=_correlation(r))


# float64 saturation: exp over/underflows and tanh(r/2) rounds to +-1 for |r| > ~38
_TINY = float(np.finfo(float).tiny)
_HUGE = float(np.finfo(float).max)
_RHO_MAX = float(np.nextafter(1.0, 0.0))


def _positive(x: float) -> float:
    if x > 709.0:
        return _HUGE
    return max(math.exp(x), _TINY)


def _correlation(r: float) -> float:
    return min(max(math.tanh(0.5 * r), -_RHO_MAX), _RHO_MAX)


def series_to_unconstrained(alpha, nu, rho) -> np.ndarray:
    """Vectorised forward map; returns an (n, 3) array of (a, n, r)."""
    alpha = np.asarray(alpha, dtype=float)
    nu = np.asarray(nu, dtype=float)
    rho = np.asarray(rho, dtype=float)
    return np.column_stack([np.log(alpha), np.log(nu), np.log1p(rho) - np.log1p(-rho)])


def series_from_unconstrained(coords: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    coords = np.asarray(coords, dtype=float)
    with np.errstate(over="ignore"):
        alpha = np.clip(np.exp(coords[:, 0]), _TINY, _HUGE)
        nu = np.clip(np.exp(coords[:, 1]), _TINY, _HUGE)
    return alpha, nu, np.clip(np.tanh(0.5 * coords[:, 2]), -_RHO_MAX, _RHO_MAX)
