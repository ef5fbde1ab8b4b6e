"""Composite Gauss-Legendre rules on panels, panel interpolation and a
Filon-type Fourier rule.

Everything here works on a list of panel break points ``b_0 < b_1 < ... < b_P``
with a fixed number of Legendre nodes per panel.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss, legvander
from scipy.special import spherical_jn


@lru_cache(maxsize=64)
def _gl(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(order)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def panel_rule(breaks, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the composite Gauss-Legendre rule on ``breaks``."""
    b = np.asarray(breaks, dtype=float)
    if b.ndim != 1 or b.size < 2 or np.any(np.diff(b) <= 0):
        raise ValueError("panel breaks must be a strictly increasing 1-D array")
    x, w = _gl(order)
    a, c = b[:-1, None], b[1:, None]
    nodes = 0.5 * (c - a) * x[None, :] + 0.5 * (a + c)
    weights = 0.5 * (c - a) * w[None, :]
    return nodes.ravel(), weights.ravel()


def graded_breaks(lo: float, hi: float, *, first: float, max_width: float,
                  ratio: float = 2.0) -> np.ndarray:
    """Breaks on ``[lo, hi]`` that grow geometrically from ``lo`` (first panel
    ``first`` wide) until ``max_width`` is reached, then stay uniform."""
    if hi <= lo:
        raise ValueError("need hi > lo")
    out = [lo]
    width = min(first, max_width)
    x = lo
    while x + width < hi:
        x += width
        out.append(x)
        width = min(width * ratio, max_width)
    last = out[-1]
    # even out the tail so the final panel is not a sliver
    n_tail = max(1, int(np.ceil((hi - last) / max_width - 1e-12)))
    if len(out) > 1 and hi - last < 0.25 * width:
        out.pop()
        last = out[-1]
        n_tail = max(1, int(np.ceil((hi - last) / max_width - 1e-12)))
    out.extend(np.linspace(last, hi, n_tail + 1)[1:])
    return np.asarray(out)


def two_sided_breaks(lo: float, hi: float, *, first: float,
                     max_width: float) -> np.ndarray:
    """Breaks on ``[lo, hi]`` with ``lo <= 0 <= hi``, graded towards 0 from both
    sides."""
    pieces = []
    if lo < 0:
        left = -graded_breaks(0.0, -lo, first=first, max_width=max_width)[::-1]
        pieces.append(left[:-1])
    if hi > 0:
        pieces.append(graded_breaks(0.0, hi, first=first, max_width=max_width))
    else:
        pieces.append(np.array([0.0]))
    return np.concatenate(pieces)


class PanelInterpolant:
    """Piecewise polynomial interpolant through Gauss-Legendre samples.

    On each panel the samples determine a unique polynomial of degree
    ``order - 1``; evaluation outside ``[breaks[0], breaks[-1]]`` returns
    ``fill``.
    """

    def __init__(self, breaks, order: int, values, fill=0.0):
        self.breaks = np.asarray(breaks, dtype=float)
        self.order = order
        vals = np.asarray(values).reshape(self.breaks.size - 1, order)
        x, _ = _gl(order)
        # Legendre coefficients per panel (rows), exact for polynomial data
        vinv = np.linalg.inv(legvander(x, order - 1))
        self.coeffs = vals @ vinv.T
        self.fill = fill

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        flat = r.ravel()
        out = np.full(flat.shape, self.fill, dtype=self.coeffs.dtype)
        inside = (flat >= self.breaks[0]) & (flat <= self.breaks[-1])
        if np.any(inside):
            ri = flat[inside]
            k = np.clip(np.searchsorted(self.breaks, ri, side="right") - 1,
                        0, self.breaks.size - 2)
            a, b = self.breaks[k], self.breaks[k + 1]
            s = (2.0 * ri - a - b) / (b - a)
            basis = legvander(s, self.order - 1)
            out[inside] = np.einsum("ij,ij->i", basis, self.coeffs[k])
        return out.reshape(r.shape)

    def derivative(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        flat = r.ravel()
        out = np.zeros(flat.shape, dtype=self.coeffs.dtype)
        inside = (flat >= self.breaks[0]) & (flat <= self.breaks[-1])
        if np.any(inside):
            ri = flat[inside]
            k = np.clip(np.searchsorted(self.breaks, ri, side="right") - 1,
                        0, self.breaks.size - 2)
            a, b = self.breaks[k], self.breaks[k + 1]
            s = (2.0 * ri - a - b) / (b - a)
            dc = np.polynomial.legendre.legder(self.coeffs.T).T
            basis = legvander(s, self.order - 2)
            out[inside] = np.einsum("ij,ij->i", basis, dc[k]) * 2.0 / (b - a)
        return out.reshape(r.shape)


def filon_fourier(breaks, order: int, values, xi) -> np.ndarray:
    """``int h(x) exp(-i xi x) dx`` over the panels, with ``h`` replaced by its
    per-panel interpolating polynomial.

    The oscillatory factor is integrated exactly through
    ``int_{-1}^{1} P_k(s) e^{-i w s} ds = 2 (-i)^k j_k(w)``, so the rule stays
    accurate for any ``xi`` regardless of how many oscillations fit in a panel.
    """
    b = np.asarray(breaks, dtype=float)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    interp = PanelInterpolant(b, order, values)
    half = 0.5 * np.diff(b)
    mid = 0.5 * (b[:-1] + b[1:])
    k = np.arange(order)
    phase_k = (-1j) ** k
    out = np.zeros(xi.shape, dtype=complex)
    # panels sharing a width share the Bessel table
    widths, inverse = np.unique(np.round(half, 14), return_inverse=True)
    for g, hw in enumerate(widths):
        sel = np.nonzero(inverse == g)[0]
        w = xi[:, None] * hw
        jk = spherical_jn(k[None, :], np.abs(w))
        # j_k(-w) = (-1)^k j_k(w)
        jk = np.where(w < 0, jk * (-1.0) ** k[None, :], jk)
        panel_int = (2.0 * hw) * (jk * phase_k[None, :]) @ interp.coeffs[sel].T
        out += np.sum(panel_int * np.exp(-1j * np.outer(xi, mid[sel])), axis=1)
    return out
