"""Pitt's weighted Fourier inequality on the line,

    (int |h^(xi)|^eta |xi|^(beta eta) dxi)^(1/eta) <= C (int |h(x)|^gamma |x|^(b gamma) dx)^(1/gamma),

with ``h^(xi) = int h(rho) exp(-i xi rho) drho``, checked on a seeded corpus.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import DomainError
from .quadrature import _gl, filon_fourier, graded_breaks, panel_rule

H_ORDER = 16
XI_MIN, XI_MID, XI_MAX = 1e-3, 64.0, 1e3


def _exact(x) -> Fraction | float:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    fr = Fraction(x).limit_denominator(10_000)
    return fr if abs(float(fr) - x) < 1e-15 else float(x)


@dataclass(frozen=True)
class PittInstance:
    """Exponents of the inequality; rational inputs are kept as ``Fraction``."""

    gamma: Fraction | float
    eta: Fraction | float
    b: Fraction | float
    checked: bool = True

    def __post_init__(self):
        g, e, b = (_exact(v) for v in (self.gamma, self.eta, self.b))
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "eta", e)
        object.__setattr__(self, "b", b)
        if not self.checked:
            return
        if not 1 < g <= e:
            raise DomainError("need 1 < gamma <= eta < inf")
        gprime_inv = 1 - 1 / g
        if not 0 < b < gprime_inv:
            raise DomainError(f"need 0 < b < 1/gamma' = {gprime_inv}")
        if not self.beta < 0:
            raise DomainError("beta = 1 - 1/gamma - 1/eta - b must be negative")

    @property
    def beta(self):
        return 1 - 1 / self.gamma - 1 / self.eta - self.b

    @classmethod
    def from_pq(cls, p, q, *, checked: bool = True) -> "PittInstance":
        """``gamma = p``, ``eta = q``, ``b = (2-p)/p``; then ``beta = (2-q)/q``
        exactly when ``p`` and ``q`` are dual. For dual pairs the hypothesis
        ``b < 1/gamma'`` is equivalent to ``q < 3``."""
        p, q = _exact(p), _exact(q)
        return cls(p, q, (2 - p) / p, checked)

    def describe(self) -> dict:
        return {k: str(v) if isinstance(v, Fraction) else v
                for k, v in dict(gamma=self.gamma, eta=self.eta, b=self.b, beta=self.beta).items()}


# ------------------------------------------------------------------ samples

@dataclass(frozen=True)
class LineSamples:
    """``h`` at the Gauss-Legendre nodes of panels on ``[0, breaks[-1]]``;
    zero elsewhere on the line."""

    breaks: np.ndarray
    values: np.ndarray
    order: int = H_ORDER

    @property
    def nodes_weights(self):
        return panel_rule(self.breaks, self.order)

    @classmethod
    def from_callable(cls, fn: Callable, support: float, *, panels: int = 32,
                      order: int = H_ORDER) -> "LineSamples":
        width = support / panels
        b = graded_breaks(0.0, support, first=width / 64, max_width=width)
        x, _ = panel_rule(b, order)
        return cls(b, np.asarray(fn(x), dtype=complex) * np.ones(x.size), order)

    def scaled(self, c) -> "LineSamples":
        return LineSamples(self.breaks, self.values * c, self.order)


def fourier_transform_line(h: LineSamples, xi) -> np.ndarray:
    """``int h(rho) exp(-i xi rho) drho`` at each ``xi`` (Filon rule on the
    panels of ``h``)."""
    return filon_fourier(h.breaks, h.order, h.values, xi)


# ------------------------------------------------------------------ ratio

def _xi_rule(level: int, eta: float, beta_eta: float):
    """Nodes on ``(0, XI_MAX]`` and weights for ``int F(xi) xi^beta_eta dxi``
    (the power weight folded in)."""
    k = 2 ** level
    nodes, weights = [], []
    a = 1.0 + beta_eta
    if a > 0:
        # xi = XI_MIN s^(1/a) turns int_0^XI_MIN F xi^(a-1) into a smooth integral
        s, ws = panel_rule(np.linspace(0.0, 1.0, 2 * k + 1), 8)
        nodes.append(XI_MIN * s ** (1.0 / a))
        weights.append(ws * XI_MIN**a / a)
    for lo, hi, n, log in ((XI_MIN, 1.0, 12 * k, True), (1.0, XI_MID, 63 * k, False),
                           (XI_MID, XI_MAX, 12 * k, True)):
        b = np.geomspace(lo, hi, n + 1) if log else np.linspace(lo, hi, n + 1)
        x, w = panel_rule(b, 8)
        nodes.append(x)
        weights.append(w * x**beta_eta)
    return np.concatenate(nodes), np.concatenate(weights)


def lhs_integral(inst: PittInstance, h: LineSamples, level: int = 0) -> float:
    """``int_R |h^|^eta |xi|^(beta eta)``; the range ``|xi| < 1e-3`` is
    included (by substitution) only when the weight is integrable there."""
    eta, be = float(inst.eta), float(inst.beta * inst.eta)
    xi, w = _xi_rule(level, eta, be)
    both = np.concatenate([xi, -xi])
    hh = np.abs(fourier_transform_line(h, both)) ** eta
    return float(np.sum(np.concatenate([w, w]) * hh))


def rhs_integral(inst: PittInstance, h: LineSamples) -> float:
    x, w = h.nodes_weights
    g = float(inst.gamma)
    return float(np.sum(w * np.abs(h.values) ** g * np.abs(x) ** (float(inst.b) * g)))


def pitt_ratio(inst: PittInstance, h: LineSamples, level: int = 0) -> float:
    rhs = rhs_integral(inst, h)
    if rhs == 0.0:
        raise DomainError("h vanishes identically", code="ZERO-DENOMINATOR")
    return lhs_integral(inst, h, level) ** (1.0 / float(inst.eta)) / rhs ** (1.0 / float(inst.gamma))


# ------------------------------------------------------------------ corpus

CORPUS_VERSION = 1


@dataclass(frozen=True)
class CorpusEntry:
    kind: str
    params: dict
    fn: Callable = None
    support: float = 1.0

    def sample(self, level: int = 0) -> LineSamples:
        return LineSamples.from_callable(self.fn, self.support, panels=32 * 2**level)


def _bump(x):
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 1.0
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(inside, np.exp(1.0 - 1.0 / np.where(inside, 1.0 - x**2, 1.0)), 0.0)


def make_corpus(seed: int, count: int) -> list[CorpusEntry]:
    """Seeded corpus cycling through three families:

    * ``gauss``: ``A exp(-a (rho - c)^2)`` with ``c >= 4/sqrt(a)``
    * ``chirp``: ``exp(-i rho^2/4t) rho exp(-a rho^2)``
    * ``bump``: ``A exp(1 - 1/(1 - ((rho - c)/w)^2))`` on ``|rho - c| < w``, ``c > w``
    """
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        kind = ("gauss", "chirp", "bump")[i % 3]
        if kind == "gauss":
            a = float(rng.uniform(0.5, 4.0))
            c = float(4.0 / math.sqrt(a) + rng.uniform(0.0, 2.0))
            amp = complex(np.exp(1j * rng.uniform(0, 2 * np.pi)))
            fn = (lambda a, c, amp: lambda x: amp * np.exp(-a * (x - c) ** 2))(a, c, amp)
            out.append(CorpusEntry(kind, dict(a=a, c=c, phase=float(np.angle(amp))), fn, c + 6.5 / math.sqrt(a)))
        elif kind == "chirp":
            a = float(rng.uniform(0.5, 4.0))
            t = float(rng.uniform(0.5, 4.0))
            fn = (lambda a, t: lambda x: np.exp(-1j * x**2 / (4 * t)) * x * np.exp(-a * x**2))(a, t)
            out.append(CorpusEntry(kind, dict(a=a, t=t), fn, 6.5 / math.sqrt(a)))
        else:
            w = float(rng.uniform(0.3, 1.5))
            c = float(w + rng.uniform(0.2, 3.0))
            amp = float(rng.uniform(0.5, 2.0))
            fn = (lambda w, c, amp: lambda x: amp * _bump((x - c) / w))(w, c, amp)
            out.append(CorpusEntry(kind, dict(w=w, c=c, amp=amp), fn, c + w))
    return out


@dataclass(frozen=True)
class PittScan:
    instance: PittInstance
    ratios: tuple[float, ...]
    refined: tuple[tuple[float, ...], ...]   # ratios at each further refinement level
    kinds: tuple[str, ...]

    @property
    def max_ratio(self) -> float:
        return max(self.ratios)

    @property
    def refinement_delta(self) -> float:
        """Largest relative change of the corpus max across refinements."""
        seq = [self.max_ratio] + [max(r) for r in self.refined]
        return max(abs(b - a) / abs(a) for a, b in zip(seq[:-1], seq[1:])) if len(seq) > 1 else 0.0


def pitt_scan(seed: int, count: int, p, q, *, refinements: int = 2,
              instance: PittInstance | None = None) -> PittScan:
    """Pitt ratios of a seeded corpus with the dictionary
    ``gamma=p, eta=q, b=(2-p)/p``, repeated at ``refinements`` finer levels.
    ``p=None`` takes the dual exponent of ``q``."""
    if instance is None:
        q = _exact(q)
        p = _exact(p) if p is not None else q / (q - 1)
    inst = instance or PittInstance.from_pq(p, q)
    if float(inst.eta) >= 3.0:
        raise DomainError("the bounded regime needs q < 3; use pitt_blowup_demo", code="REGIME")
    corpus = make_corpus(seed, count)
    levels = [[pitt_ratio(inst, e.sample(lv), lv) for e in corpus] for lv in range(refinements + 1)]
    return PittScan(inst, tuple(levels[0]), tuple(tuple(l) for l in levels[1:]), tuple(e.kind for e in corpus))


# ------------------------------------------------------------------ q >= 3

def smooth_indicator(x, eps: float = 0.2):
    """``C^inf`` approximation of the indicator of ``[0, 1]``: rises on
    ``[0, eps]``, falls on ``[1 - eps, 1]``."""
    x = np.asarray(x, dtype=float)

    def step(u):
        u = np.clip(u, 0.0, 1.0)
        with np.errstate(divide="ignore"):
            a = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
            b = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1.0 - u, 1.0)), 0.0)
        return a / (a + b)

    return step(x / eps) * step((1.0 - x) / eps)


def blowup_family(n: int, eps: float = 0.2) -> LineSamples:
    """``h_n(rho) = n S(n rho)`` with ``S`` the smoothed indicator of ``[0,1]``."""
    return LineSamples.from_callable(lambda x: n * smooth_indicator(n * x, eps), 1.0 / n, panels=32)


def pitt_blowup_demo(q, ns=(2, 4, 8, 16, 32), *, eps: float = 0.2, p=None) -> list[float]:
    """Pitt ratios along the concentrating family for the dual pair
    ``(q', q)`` (or a given ``p``). For ``q >= 3`` the weight ``|xi|^(2-q)``
    is not integrable at 0 and the frequency integral is taken over
    ``|xi| >= 1e-3``; the dual exponents then also leave the hypotheses of
    the inequality (``b >= 1/gamma'``), so the instance is not validated."""
    q = _exact(q)
    p = _exact(p) if p is not None else q / (q - 1)
    inst = PittInstance.from_pq(p, q, checked=False)
    return [pitt_ratio(inst, blowup_family(n, eps)) for n in ns]
