"""The Gamma matrix of a point-interaction configuration, its poles on the
positive imaginary axis, the N=1 bound state and the invertibility scan.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import INERT, InteractionConfig, RadialFunction, RadialGrid, validate_config
from .errors import DomainError, ResolutionError

FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class GammaMatrix:
    z: complex
    entries: np.ndarray
    active: np.ndarray  # indices of the centers kept (finite strength)

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def _active_geometry(cfg: InteractionConfig):
    idx = cfg.active
    alpha = np.array([cfg.strengths[j] for j in idx], dtype=float)
    pts = cfg.centers[idx]
    dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    return idx, alpha, dist


def _gamma_from(alpha, dist, z) -> np.ndarray:
    n = alpha.size
    off = ~np.eye(n, dtype=bool)
    g = np.zeros((n, n), dtype=complex)
    g[off] = np.exp(1j * z * dist[off]) / (FOUR_PI * dist[off])
    return np.diag(alpha - 1j * z / FOUR_PI) - g


def build_gamma(cfg: InteractionConfig, z: complex) -> GammaMatrix:
    """``Gamma(z)_{jl} = (alpha_j - i z/4pi) delta_jl - G~_z(y_j - y_l)`` over
    the interacting centers; inert centers (alpha = inf) are dropped."""
    validate_config(cfg)
    idx, alpha, dist = _active_geometry(cfg)
    return GammaMatrix(complex(z), _gamma_from(alpha, dist, complex(z)), idx)


def _gamma_imag_axis(alpha, dist, lam: float) -> np.ndarray:
    """Real symmetric ``Gamma(i lam)``."""
    n = alpha.size
    off = ~np.eye(n, dtype=bool)
    g = np.zeros((n, n))
    g[off] = np.exp(-lam * dist[off]) / (FOUR_PI * dist[off])
    return np.diag(alpha + lam / FOUR_PI) - g


def default_lambda_max(cfg: InteractionConfig) -> float:
    idx, alpha, dist = _active_geometry(cfg)
    if alpha.size == 0:
        return 1.0
    amax = float(np.max(np.abs(alpha)))
    if alpha.size == 1:
        return FOUR_PI * amax + 1.0
    dmin = float(dist[~np.eye(alpha.size, dtype=bool)].min())
    return FOUR_PI * amax + 10.0 / dmin


@dataclass(frozen=True)
class Pole:
    lam: float
    multiplicity: int

    @property
    def eigenvalue(self) -> float:
        return -self.lam**2


def find_poles(cfg: InteractionConfig, lam_max: float | None = None, *,
               cells: int = 64, tol: float = 1e-13, max_depth: int = 40) -> list[Pole]:
    """All ``lam`` in ``(0, lam_max]`` where ``Gamma(i lam)`` is singular.

    On the imaginary axis ``Gamma(i lam)`` is real symmetric and its
    derivative in ``lam`` is the positive definite matrix
    ``[exp(-lam |y_j - y_l|)]/4pi``, so every ordered eigenvalue increases
    strictly with ``lam`` and crosses zero at most once. The number of
    negative eigenvalues therefore counts the poles above ``lam``; the k-th
    crossing is located by bisection on the k-th eigenvalue.
    """
    validate_config(cfg)
    if lam_max is None:
        lam_max = default_lambda_max(cfg)
    if lam_max <= 0:
        raise DomainError("lam_max must be positive")
    _, alpha, dist = _active_geometry(cfg)
    if alpha.size == 0:
        return []

    def eigs(lam):
        return np.linalg.eigvalsh(_gamma_imag_axis(alpha, dist, lam))

    def negcount(lam):
        return int(np.sum(eigs(lam) < 0.0))

    grid = np.linspace(0.0, lam_max, cells + 1)
    counts = [negcount(l) for l in grid]
    roots = []
    for a, b, na, nb in zip(grid[:-1], grid[1:], counts[:-1], counts[1:]):
        if nb > na:
            raise ResolutionError("negative-eigenvalue count increased along the axis",
                                  code="GRID-TOO-COARSE")
        for k in range(nb, na):
            lo, hi = a, b
            for _ in range(max_depth + 200):
                if hi - lo <= tol * max(1.0, hi):
                    break
                mid = 0.5 * (lo + hi)
                if eigs(mid)[k] < 0.0:
                    lo = mid
                else:
                    hi = mid
            else:
                raise ResolutionError("bisection did not reach tolerance", code="GRID-TOO-COARSE")
            roots.append(0.5 * (lo + hi))
    roots.sort()
    poles: list[Pole] = []
    for lam in roots:
        if poles and abs(lam - poles[-1].lam) <= 1e-9 * max(1.0, lam):
            continue
        poles.append(Pole(lam, _multiplicity(alpha, dist, lam)))
    return poles


def _multiplicity(alpha, dist, lam) -> int:
    m = _gamma_imag_axis(alpha, dist, lam)
    s = np.linalg.svd(m, compute_uv=False)
    thr = 1e-8 * max(np.linalg.norm(m, 2), 1.0)
    return max(1, int(np.sum(s <= thr)))


def bound_state_n1(alpha: float, grid: RadialGrid | None = None) -> RadialFunction:
    """Normalized eigenfunction ``sqrt(-2 alpha) exp(4 pi alpha r)/r`` of the
    single-center Hamiltonian with ``alpha < 0``."""
    if not alpha < 0 or alpha == INERT:
        raise DomainError(f"bound state needs alpha < 0, got {alpha}", code="POSITIVE-ALPHA")
    if grid is None:
        # resolve the decay length 1/(4 pi |alpha|) and reach 40 of them
        ell = 1.0 / (FOUR_PI * abs(alpha))
        grid = RadialGrid.geometric(40.0 * ell, r_min=1e-3 * ell, max_width=ell)
    return RadialFunction.from_callable(lambda r: bound_state_profile(alpha, r), grid)


def bound_state_profile(alpha: float, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return math.sqrt(-2.0 * alpha) * np.exp(FOUR_PI * alpha * r) / r


@dataclass(frozen=True)
class ScanProfile:
    z: np.ndarray
    sigma_min: np.ndarray
    threshold: float
    assumption1_ok: bool


def assumption1_scan(cfg: InteractionConfig, z_max: float, samples: int = 201,
                     threshold: float = 1e-6) -> ScanProfile:
    """Smallest singular value of ``Gamma(z)`` on ``samples`` points of
    ``[0, z_max]``."""
    if z_max <= 0:
        raise DomainError("z_max must be positive")
    validate_config(cfg)
    _, alpha, dist = _active_geometry(cfg)
    z = np.linspace(0.0, z_max, samples)
    if alpha.size == 0:
        smin = np.full(z.shape, np.inf)
    else:
        smin = np.array([np.linalg.svd(_gamma_from(alpha, dist, zz), compute_uv=False)[-1] for zz in z])
    return ScanProfile(z, smin, threshold, bool(np.min(smin) > threshold))


@dataclass(frozen=True)
class SpectralReport:
    poles: tuple[float, ...]
    multiplicities: tuple[int, ...]
    eigenvalues: tuple[float, ...]
    lam_max: float
    scan: ScanProfile

    @property
    def assumption1_ok(self) -> bool:
        return self.scan.assumption1_ok

    def to_dict(self) -> dict:
        return {
            "poles": list(self.poles),
            "eigenvalues": list(self.eigenvalues),
            "multiplicities": list(self.multiplicities),
            "lambda_max": self.lam_max,
            "assumption1_ok": self.assumption1_ok,
            "threshold": self.scan.threshold,
        }


def spectral_report(cfg: InteractionConfig, lam_max: float | None = None,
                    z_max: float = 10.0, samples: int = 201,
                    threshold: float = 1e-6) -> SpectralReport:
    lam_max = default_lambda_max(cfg) if lam_max is None else lam_max
    poles = find_poles(cfg, lam_max)
    scan = assumption1_scan(cfg, z_max, samples, threshold)
    return SpectralReport(
        tuple(p.lam for p in poles),
        tuple(p.multiplicity for p in poles),
        tuple(p.eigenvalue for p in poles),
        float(lam_max),
        scan,
    )
