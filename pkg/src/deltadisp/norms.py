"""Strong (weighted) L^p norms and the weak Lorentz quasi-norm L^{q,inf} on
radial samplings, Cartesian boxes and radial profiles given as callables.

Callables can be resampled, so only they get the refinement-based
divergence test; sampled functions are integrated as they stand.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config import Field3D, RadialFunction, RadialGrid, WeightSpec, evaluate_weight, evaluate_weight_radial
from .errors import DomainError, SingularPointError

EXCLUDE_RADIUS = 1e-3
DIVERGENCE_GROWTH = 1.25

STRONG, WEAK = "STRONG", "WEAK-LORENTZ"


@dataclass(frozen=True)
class NormRequest:
    function: object                  # RadialFunction | Field3D | callable radial profile
    exponent: float
    weight: WeightSpec | None = None
    power: float = 1.0
    flavor: str = STRONG
    r_max: float = 10.0               # callables only

    def __post_init__(self):
        if not self.exponent >= 1:
            raise DomainError("norm exponent must be >= 1")
        if self.flavor not in (STRONG, WEAK):
            raise ValueError(f"unknown flavor {self.flavor!r}")
        if self.flavor == WEAK and math.isinf(self.exponent):
            raise DomainError("WEAK-LORENTZ needs a finite exponent")


def _excluded(weight: WeightSpec | None, power: float) -> bool:
    return weight is not None and weight.kind == "SINGULAR-SUM" and power < 0


def _samples(f, weight: WeightSpec | None, power: float, *, for_sup: bool = False):
    """``(|w^power f|, measure)`` at the sample points of ``f``."""
    if isinstance(f, RadialFunction):
        vals, meas = np.abs(f.values), f.grid.weights
        if weight is not None and weight.kind != "UNIT":
            if tuple(weight.centers[0]) != (0.0, 0.0, 0.0) or not weight.is_radial:
                raise DomainError("radial samples need a weight centred at the origin")
            vals = vals * evaluate_weight_radial(weight, f.r, power)
        keep = np.ones(vals.shape, dtype=bool)
        if for_sup and _excluded(weight, power):
            keep = f.r >= EXCLUDE_RADIUS
        return vals[keep], meas[keep]
    if isinstance(f, Field3D):
        vals = np.abs(f.values).ravel()
        meas = np.full(vals.shape, f.cell_volume)
        pts = f.points.reshape(-1, 3)
        if weight is not None and weight.kind != "UNIT":
            vals = vals * evaluate_weight(weight, pts, power)
        keep = np.ones(vals.shape, dtype=bool)
        if for_sup and _excluded(weight, power):
            c = np.asarray(weight.centers)
            d = np.min(np.linalg.norm(pts[:, None, :] - c[None], axis=-1), axis=1)
            keep = d >= EXCLUDE_RADIUS
        return vals[keep], meas[keep]
    raise TypeError("expected a RadialFunction or a Field3D")


def _power_integral(vals, meas, p) -> float:
    with np.errstate(over="ignore"):
        return float(np.sum(meas * vals**p))


def _sampled_lp(f, p, weight, power) -> float:
    if math.isinf(p):
        vals, _ = _samples(f, weight, power, for_sup=True)
        return float(np.max(vals)) if vals.size else 0.0
    vals, meas = _samples(f, weight, power)
    return _power_integral(vals, meas, p) ** (1.0 / p)


@dataclass(frozen=True)
class NormReport:
    value: float
    divergent: bool
    history: tuple[float, ...]   # p-th power integrals (or sups) per refinement


def _profile_grids(r_max: float, levels: int = 3):
    r_min, width = 1e-3, 0.25
    for _ in range(levels):
        yield RadialGrid.geometric(r_max, r_min=r_min, max_width=width)
        r_min, width = r_min * 1e-3, width / 2


def profile_norm(fn: Callable[[np.ndarray], np.ndarray], p: float, weight: WeightSpec | None = None,
                 power: float = 1.0, *, r_max: float = 10.0) -> NormReport:
    """``L^p`` norm of the radial function ``fn(|x|)`` on ``|x| <= r_max``
    with the refinement divergence test: the p-th power integral is flagged
    when two successive refinements (``r_min / 1e3``, double density) each
    grow it by more than 25%."""
    hist = []
    for g in _profile_grids(r_max):
        f = RadialFunction(g, np.asarray(fn(g.nodes), dtype=complex) * np.ones(g.size))
        if math.isinf(p):
            hist.append(_sampled_lp(f, p, weight, power))
        else:
            vals, meas = _samples(f, weight, power)
            hist.append(_power_integral(vals, meas, p))
    growth = [b > DIVERGENCE_GROWTH * a for a, b in zip(hist[:-1], hist[1:])]
    divergent = all(growth) or not np.isfinite(hist[-1])
    val = hist[-1] if math.isinf(p) else hist[-1] ** (1.0 / p)
    return NormReport(float(val), bool(divergent), tuple(hist))


def lp_norm(f, p: float, weight: WeightSpec | None = None, power: float = 1.0, *,
            r_max: float = 10.0) -> float:
    """``(int |w^power f|^p)^{1/p}``; ``p = inf`` gives the max over samples.

    ``f`` may be a ``RadialFunction``, a ``Field3D`` or a callable radial
    profile (the last is checked for divergence under refinement).
    """
    if not p >= 1:
        raise DomainError("p must be >= 1")
    if callable(f) and not isinstance(f, (RadialFunction, Field3D)):
        rep = profile_norm(f, p, weight, power, r_max=r_max)
        if rep.divergent:
            raise SingularPointError(
                f"L^{p} integral grows under refinement: {', '.join(f'{h:.4g}' for h in rep.history)}",
                code="SINGULAR-POINT")
        return rep.value
    return _sampled_lp(f, p, weight, power)


def weak_lorentz_norm(f, q: float, weight: WeightSpec | None = None, power: float = 1.0, *,
                      r_max: float = 10.0) -> float:
    """``sup_lambda lambda |{|w^power f| > lambda}|^{1/q}`` from samples sorted
    by size with their cumulative measure.

    At a level ``lambda = v_k`` only samples strictly above it are counted, so
    an isolated sample next to a singularity does not get credited with its
    whole quadrature weight; a level shared by several samples (a plateau)
    counts the plateau, which keeps step functions exact.
    """
    if not 1 <= q < math.inf:
        raise DomainError("q must lie in [1, inf)")
    if callable(f) and not isinstance(f, (RadialFunction, Field3D)):
        g = list(_profile_grids(r_max))[-1]
        f = RadialFunction(g, np.asarray(f(g.nodes), dtype=complex) * np.ones(g.size))
    vals, meas = _samples(f, weight, power)
    if vals.size == 0:
        return 0.0
    order = np.argsort(-vals, kind="stable")
    v, m = vals[order], meas[order]
    levels, start, count = np.unique(-v, return_index=True, return_counts=True)
    mu = np.concatenate([[0.0], np.cumsum(m)])
    above = mu[start]
    incl = mu[start + count]
    measure = np.where(count > 1, incl, above)
    return float(np.max(-levels * measure ** (1.0 / q)))


def compute_norm(req: NormRequest) -> float:
    if req.flavor == WEAK:
        return weak_lorentz_norm(req.function, req.exponent, req.weight, req.power, r_max=req.r_max)
    return lp_norm(req.function, req.exponent, req.weight, req.power, r_max=req.r_max)
