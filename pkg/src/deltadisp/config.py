"""Shared domain types: interaction configurations, radial grids and sampled
functions, Cartesian boxes and weights.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, SingularPointError
from .quadrature import PanelInterpolant, graded_breaks, panel_rule

INERT = math.inf
"""Strength tag for a center with no interaction (Friedrichs extension)."""


def _frozen(a) -> np.ndarray:
    a = np.array(a)
    a.flags.writeable = False
    return a


def _parse_strength(v) -> float:
    if isinstance(v, str):
        s = v.strip().lower()
        if s in ("inf", "+inf", "infinity", "+infinity"):
            return INERT
        try:
            v = float(s)
        except ValueError:
            raise ConfigError(f"cannot parse strength {v!r}") from None
    v = float(v)
    if math.isnan(v) or v == -math.inf:
        raise ConfigError(f"strength must lie in (-inf, +inf], got {v}")
    return v


@dataclass(frozen=True)
class InteractionConfig:
    """Centers ``y_j`` in R^3 and strengths ``alpha_j`` in (-inf, +inf]."""

    centers: np.ndarray
    strengths: tuple[float, ...]

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=float).reshape(-1, 3) if np.size(self.centers) else np.zeros((0, 3))
        object.__setattr__(self, "centers", _frozen(c))
        object.__setattr__(self, "strengths", tuple(_parse_strength(a) for a in self.strengths))
        if len(self.strengths) != len(c):
            raise ConfigError("need exactly one strength per center")

    @classmethod
    def single(cls, alpha, center=(0.0, 0.0, 0.0)) -> "InteractionConfig":
        return cls(np.array([center], dtype=float), (alpha,))

    @property
    def n(self) -> int:
        return len(self.strengths)

    @property
    def active(self) -> np.ndarray:
        """Indices of centers that actually interact (finite strength)."""
        return np.array([j for j, a in enumerate(self.strengths) if a != INERT], dtype=int)

    def min_distance(self) -> float:
        if self.n < 2:
            return math.inf
        d = np.linalg.norm(self.centers[:, None, :] - self.centers[None, :, :], axis=-1)
        return float(d[np.triu_indices(self.n, 1)].min())

    def to_dict(self) -> dict:
        return {
            "centers": self.centers.tolist(),
            "strengths": ["inf" if a == INERT else a for a in self.strengths],
        }


def validate_config(cfg: InteractionConfig) -> InteractionConfig:
    if cfg.n == 0:
        raise ConfigError("configuration has no centers", code="EMPTY")
    if cfg.min_distance() <= 0.0:
        raise ConfigError("two centers coincide", code="DUPLICATE-CENTER")
    return cfg


@dataclass(frozen=True)
class RadialGrid:
    """Composite Gauss-Legendre grid on ``[0, breaks[-1]]``.

    ``weights`` integrate against the 3-D radial measure ``4 pi r^2 dr``;
    ``line_weights`` are the plain ``dr`` weights. No node sits at ``r = 0``.
    """

    breaks: np.ndarray
    order: int = 10
    nodes: np.ndarray = field(init=False, repr=False)
    line_weights: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        b = np.asarray(self.breaks, dtype=float)
        if b[0] != 0.0:
            b = np.concatenate([[0.0], b])
        nodes, lw = panel_rule(b, self.order)
        object.__setattr__(self, "breaks", _frozen(b))
        object.__setattr__(self, "nodes", _frozen(nodes))
        object.__setattr__(self, "line_weights", _frozen(lw))
        object.__setattr__(self, "weights", _frozen(4.0 * np.pi * nodes**2 * lw))

    @classmethod
    def geometric(cls, r_max: float = 10.0, *, r_min: float = 1e-3,
                  max_width: float = 0.25, order: int = 10) -> "RadialGrid":
        """Log-spaced panels from ``r_min`` (plus a cap panel ``[0, r_min]``)
        that saturate at ``max_width``."""
        b = graded_breaks(r_min, r_max, first=r_min, max_width=max_width)
        return cls(np.concatenate([[0.0], b]), order)

    @property
    def extent(self) -> float:
        return float(self.breaks[-1])

    @property
    def size(self) -> int:
        return self.nodes.size

    def refined(self) -> "RadialGrid":
        """Every panel split in two."""
        b = self.breaks
        mids = 0.5 * (b[:-1] + b[1:])
        return RadialGrid(np.sort(np.concatenate([b, mids])), self.order)


@dataclass(frozen=True)
class RadialFunction:
    """Samples of a radial profile ``f(x) = profile(|x|)`` on a radial grid."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.grid.nodes.shape:
            raise ValueError("values must match the grid nodes")
        if not np.all(np.isfinite(v)):
            raise ValueError("radial samples must be finite")
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def from_callable(cls, fn: Callable[[np.ndarray], np.ndarray], grid: RadialGrid) -> "RadialFunction":
        return cls(grid, np.asarray(fn(grid.nodes), dtype=complex) * np.ones(grid.size))

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    def reduced(self) -> PanelInterpolant:
        """Interpolant of ``r * profile(r)``, which stays smooth for profiles
        with a ``1/r`` singularity; zero beyond the grid."""
        return PanelInterpolant(self.grid.breaks, self.grid.order, self.r * self.values)

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.reduced()(r) / r

    def inner(self, other: "RadialFunction") -> complex:
        """``<self, other>`` in L^2(R^3), conjugate-linear in ``self``."""
        if other.grid is not self.grid and not np.array_equal(other.grid.nodes, self.grid.nodes):
            other = RadialFunction(self.grid, other(self.r))
        return complex(np.sum(self.grid.weights * np.conj(self.values) * other.values))

    def norm(self) -> float:
        return math.sqrt(max(self.inner(self).real, 0.0))

    def with_values(self, values) -> "RadialFunction":
        return RadialFunction(self.grid, values)

    def __add__(self, other: "RadialFunction") -> "RadialFunction":
        return self.with_values(self.values + other(self.r) if other.grid is not self.grid else self.values + other.values)

    def __sub__(self, other: "RadialFunction") -> "RadialFunction":
        return self + (-1.0) * other

    def __mul__(self, c) -> "RadialFunction":
        return self.with_values(self.values * c)

    __rmul__ = __mul__


@dataclass(frozen=True)
class Field3D:
    """Cell-centred samples on the box ``center + [-half_width, half_width]^3``."""

    values: np.ndarray
    half_width: float
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 3 or len(set(v.shape)) != 1:
            raise ValueError("Field3D values must be an n x n x n array")
        if self.half_width <= 0:
            raise ValueError("box half width must be positive")
        object.__setattr__(self, "values", _frozen(v))
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @classmethod
    def from_callable(cls, fn, n: int, half_width: float, center=(0.0, 0.0, 0.0)) -> "Field3D":
        axes = cls.axis_nodes(n, half_width, center)
        X, Y, Z = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([X, Y, Z], axis=-1)
        return cls(np.asarray(fn(pts), dtype=complex) * np.ones(X.shape), half_width, center)

    @staticmethod
    def axis_nodes(n: int, half_width: float, center=(0.0, 0.0, 0.0)) -> list[np.ndarray]:
        h = 2.0 * half_width / n
        base = -half_width + h * (np.arange(n) + 0.5)
        return [base + c for c in center]

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing**3

    @property
    def axes(self) -> list[np.ndarray]:
        return self.axis_nodes(self.n, self.half_width, self.center)

    @property
    def points(self) -> np.ndarray:
        X, Y, Z = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([X, Y, Z], axis=-1)

    def contains(self, pts) -> bool:
        p = np.asarray(pts, dtype=float).reshape(-1, 3) - np.asarray(self.center)
        return bool(np.all(np.abs(p) <= self.half_width))

    def with_values(self, values) -> "Field3D":
        return Field3D(values, self.half_width, self.center)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.cell_volume))


WEIGHT_KINDS = ("UNIT", "SINGULAR-SUM", "CONJ-Q", "LOCAL-CUTOFF")


@dataclass(frozen=True)
class WeightSpec:
    """One of the weight families used by the dispersive estimates.

    * ``UNIT``: w = 1
    * ``SINGULAR-SUM``: w(x) = sum_j (1 + 1/|x - y_j|) over ``centers``
    * ``CONJ-Q``: w(x) = 1 + |x - c|^(3/q - 1), ``c = centers[0]``
    * ``LOCAL-CUTOFF``: w = 1 outside the ball of ``radius`` about ``centers[0]``;
      inside, ``profile="power"`` gives (radius/|x|)^kappa and
      ``profile="log"`` gives 1 + kappa*log(radius/|x|).
    """

    kind: str = "UNIT"
    centers: tuple = ((0.0, 0.0, 0.0),)
    q: float | None = None
    radius: float = 1.0
    profile: str = "log"
    kappa: float = 1.0

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise ValueError(f"unknown weight kind {self.kind!r}")
        object.__setattr__(self, "centers", tuple(tuple(float(v) for v in c) for c in self.centers))
        if self.kind == "CONJ-Q" and (self.q is None or self.q < 1):
            raise ValueError("CONJ-Q weight needs q >= 1")
        if self.kind == "LOCAL-CUTOFF" and self.profile not in ("power", "log"):
            raise ValueError("LOCAL-CUTOFF profile must be 'power' or 'log'")

    @property
    def is_radial(self) -> bool:
        return self.kind == "UNIT" or len(self.centers) == 1

    def describe(self) -> dict:
        d = {"kind": self.kind}
        if self.kind != "UNIT":
            d["centers"] = [list(c) for c in self.centers]
        if self.kind == "CONJ-Q":
            d["q"] = self.q
        if self.kind == "LOCAL-CUTOFF":
            d.update(radius=self.radius, profile=self.profile, kappa=self.kappa)
        return d


def _weight_of_distances(w: WeightSpec, dist: np.ndarray, power: float) -> np.ndarray:
    """``w^power`` for a weight depending on the distances ``dist[..., j]``."""
    if w.kind == "UNIT":
        return np.ones(dist.shape[:-1])
    if w.kind == "SINGULAR-SUM":
        if power == 0:
            return np.ones(dist.shape[:-1])
        at_center = np.any(dist == 0.0, axis=-1)
        if np.any(at_center) and power > 0:
            raise SingularPointError("SINGULAR-SUM weight diverges at a center")
        with np.errstate(divide="ignore"):
            if dist.shape[-1] == 1:
                d = dist[..., 0]
                # (1 + 1/d)^p written as (d/(1+d))^(-p): finite down to d = 0
                base = d / (1.0 + d)
                out = np.where(at_center, 0.0, base ** (-power) if power < 0 else (1.0 + 1.0 / np.where(at_center, 1.0, d)) ** power)
                return out
            s = np.sum(1.0 + 1.0 / dist, axis=-1)
            return np.where(at_center, 0.0, s ** power)
    d = dist[..., 0]
    if w.kind == "CONJ-Q":
        e = 3.0 / w.q - 1.0
        with np.errstate(divide="ignore"):
            val = 1.0 + d**e if e != 0 else np.full(d.shape, 2.0)
        if e < 0 and np.any(d == 0):
            if power > 0:
                raise SingularPointError("CONJ-Q weight diverges at its center")
            val = np.where(d == 0, np.inf, val)
        return val ** power
    # LOCAL-CUTOFF
    inside = d < w.radius
    with np.errstate(divide="ignore"):
        ratio = np.where(inside, w.radius / np.where(d > 0, d, 1.0), 1.0)
        if w.profile == "power":
            val = np.where(inside, ratio**w.kappa, 1.0)
        else:
            val = np.where(inside, 1.0 + w.kappa * np.log(ratio), 1.0)
    if np.any(d == 0):
        if power > 0:
            raise SingularPointError("LOCAL-CUTOFF weight diverges at its center")
        val = np.where(d == 0, np.inf, val)
    return val**power


def evaluate_weight(w: WeightSpec, x, power: float = 1.0):
    """``w(x)**power`` at one point or an array of points (last axis 3)."""
    pts = np.asarray(x, dtype=float)
    scalar = pts.ndim == 1
    pts = pts.reshape(-1, 3) if scalar else pts
    c = np.asarray(w.centers, dtype=float)
    dist = np.linalg.norm(pts[..., None, :] - c, axis=-1)
    out = _weight_of_distances(w, dist, power)
    return float(out.reshape(-1)[0]) if scalar else out


def evaluate_weight_radial(w: WeightSpec, r, power: float = 1.0) -> np.ndarray:
    """``w^power`` at distance ``r`` from the (single) weight center."""
    if not w.is_radial:
        raise ValueError("weight is not radial about a single center")
    r = np.asarray(r, dtype=float)
    return _weight_of_distances(w, r[..., None], power)


# ---------------------------------------------------------------- config files

def load_config(path) -> dict:
    """Read a JSON run configuration.

    Schema::

        {"centers": [[x, y, z], ...],
         "strengths": [alpha or "inf", ...],
         "grid": {"r_min": 1e-3, "r_max": 10, "max_width": 0.25, "order": 10},
         "box": {"n": 24, "half_width": 6.0}}

    Only ``centers`` and ``strengths`` are required.
    """
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(raw)


def parse_config(raw: dict) -> dict:
    if not isinstance(raw, dict) or "centers" not in raw or "strengths" not in raw:
        raise ConfigError("config needs 'centers' and 'strengths'")
    try:
        cfg = InteractionConfig(np.asarray(raw["centers"], dtype=float), tuple(raw["strengths"]))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad centers/strengths: {exc}") from exc
    validate_config(cfg)
    grid = dict(r_min=1e-3, r_max=10.0, max_width=0.25, order=10)
    grid.update(raw.get("grid", {}))
    box = dict(n=24, half_width=6.0)
    box.update(raw.get("box", {}))
    return {"interaction": cfg, "grid": grid, "box": box}


def interaction_from_points(centers: Sequence, strengths: Sequence) -> InteractionConfig:
    return validate_config(InteractionConfig(np.asarray(centers, dtype=float), tuple(strengths)))
