"""Green's function, free and perturbed resolvents, domain elements and the
Bethe-Peierls fit.

Fields are kept in a lazy form: a finite sum of terms ``coef * phi(|x - c|)``
where each radial profile ``phi`` knows its reduced form ``u(r) = r phi(r)``.
Applying the free resolvent to a radial term gives another radial term about
the same center, whose profile solves the outgoing radial ODE

    -w'' - z^2 w = u,   w(0) = 0,

so nested resolvents (``R(z1) R(z2) f``) stay exact up to 1-D quadrature.
A coarse cell-sum path on ``Field3D`` boxes is kept as an independent check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import Field3D, InteractionConfig, validate_config
from .errors import DomainError, ResolutionError
from .quadrature import _gl
from .spectral import FOUR_PI, build_gamma

# e^{-37} ~ 8.5e-17: profiles decaying like e^{-Im z r} are cut there
REACH_DECAY = 37.0
# integral of 1/|x| over the unit cube centred at the origin
CUBE_INV_R = 3.0 * math.log((math.sqrt(3.0) + 1.0) / (math.sqrt(3.0) - 1.0)) - math.pi / 2.0


def green_kernel(z: complex, x) -> complex | np.ndarray:
    """``G_z(x) = exp(i z |x|) / (4 pi |x|)``."""
    r = _radius(x)
    if np.any(r == 0.0):
        raise DomainError("G_z is singular at the origin", code="ORIGIN")
    out = np.exp(1j * z * r) / (FOUR_PI * r)
    return complex(out) if np.ndim(out) == 0 else out


def green_kernel_tilde(z: complex, x) -> complex | np.ndarray:
    """``G_z`` off the origin and ``0`` at the origin."""
    r = np.asarray(_radius(x), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(r == 0.0, 0.0, np.exp(1j * z * r) / (FOUR_PI * np.where(r == 0.0, 1.0, r)))
    return complex(out) if np.ndim(out) == 0 else out


def _radius(x):
    x = np.asarray(x, dtype=float)
    if x.shape and x.shape[-1] == 3:
        return np.linalg.norm(x, axis=-1)
    return np.abs(x)


def _check_z(z: complex):
    if not complex(z).imag > 0:
        raise DomainError("the resolvent needs Im z > 0")


# ------------------------------------------------------------ radial profiles

class Profile:
    """Radial profile ``phi(r)`` with reduced form ``u(r) = r phi(r)``
    negligible beyond ``reach``."""

    reach: float
    max_width: float

    def reduced(self, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def value(self, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class GaussianProfile(Profile):
    """``amp * exp(-(r/width)^2)``."""

    amp: complex
    width: float

    @property
    def reach(self) -> float:
        return 6.5 * self.width

    @property
    def max_width(self) -> float:
        return 0.25 * self.width

    def value(self, r):
        return self.amp * np.exp(-(np.asarray(r) / self.width) ** 2)

    def reduced(self, r):
        r = np.asarray(r)
        return r * self.value(r)


@dataclass(frozen=True, eq=False)
class KernelProfile(Profile):
    """``G_z`` itself, ``exp(i z r)/(4 pi r)``."""

    z: complex

    @property
    def reach(self) -> float:
        return REACH_DECAY / self.z.imag

    @property
    def max_width(self) -> float:
        return min(0.5, 1.0 / abs(self.z))

    def reduced(self, r):
        return np.exp(1j * self.z * np.asarray(r)) / FOUR_PI

    def value(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            return np.exp(1j * self.z * r) / (FOUR_PI * r)


@dataclass(frozen=True, eq=False)
class ResolventProfile(Profile):
    """Outgoing free resolvent ``R_0(z)`` applied to a radial ``source``."""

    source: Profile
    z: complex
    order: int = 10

    @property
    def reach(self) -> float:
        return self.source.reach + REACH_DECAY / self.z.imag

    @property
    def max_width(self) -> float:
        return min(self.source.max_width, 1.0 / abs(self.z))

    def _cs(self, r):
        """``C(r) = int_r^inf u e^{iz rho}`` and ``S(r) = int_0^r u sin(z rho)``
        of the source, evaluated at every ``r``."""
        z = self.z
        L = self.source.reach
        r = np.asarray(r, dtype=float)
        rc = np.clip(r.ravel(), 0.0, L)
        n_base = max(1, int(math.ceil(L / min(self.source.max_width, 1.0 / abs(z)))))
        base = np.linspace(0.0, L, n_base + 1)
        b = np.unique(np.concatenate([base, rc]))
        x, w = _gl(self.order)
        lo, hi = b[:-1, None], b[1:, None]
        nodes = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        wts = 0.5 * (hi - lo) * w
        u = self.source.reduced(nodes.ravel()).reshape(nodes.shape)
        seg_c = np.sum(wts * u * np.exp(1j * z * nodes), axis=1)
        seg_s = np.sum(wts * u * np.sin(z * nodes), axis=1)
        c_at = np.concatenate([np.cumsum(seg_c[::-1])[::-1], [0.0]])
        s_at = np.concatenate([[0.0], np.cumsum(seg_s)])
        k = np.searchsorted(b, rc)
        return c_at[k].reshape(r.shape), s_at[k].reshape(r.shape)

    def reduced(self, r):
        r = np.asarray(r, dtype=float)
        c, s = self._cs(r)
        return (np.sin(self.z * r) * c + np.exp(1j * self.z * r) * s) / self.z

    def value(self, r):
        r = np.asarray(r, dtype=float)
        c, s = self._cs(r)
        zr = self.z * r
        safe = np.where(r == 0.0, 1.0, zr)
        # sin(zr)/(zr) -> 1 and S(r) = O(r^2) as r -> 0
        return np.where(r == 0.0, c, np.sin(safe) / safe * c + np.exp(1j * zr) / safe * s)


# --------------------------------------------------------------- lazy fields

@dataclass(frozen=True)
class RadialTerm:
    coef: complex
    center: tuple[float, float, float]
    profile: Profile


@dataclass(frozen=True)
class LazyField:
    """Finite sum of radial terms about various centers."""

    terms: tuple[RadialTerm, ...] = ()

    @classmethod
    def gaussian_blobs(cls, centers, amps, widths) -> "LazyField":
        return cls(tuple(RadialTerm(1.0, tuple(map(float, c)), GaussianProfile(complex(a), float(w)))
                         for c, a, w in zip(centers, amps, widths)))

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        out = np.zeros(pts.shape[:-1], dtype=complex)
        for t in self.terms:
            r = np.linalg.norm(pts - np.asarray(t.center), axis=-1)
            out += t.coef * t.profile.value(r)
        return out

    def __add__(self, other: "LazyField") -> "LazyField":
        return LazyField(self.terms + other.terms)

    def scaled(self, c: complex) -> "LazyField":
        return LazyField(tuple(RadialTerm(t.coef * c, t.center, t.profile) for t in self.terms))

    def sample(self, n: int, half_width: float, center=(0.0, 0.0, 0.0)) -> Field3D:
        axes = Field3D.axis_nodes(n, half_width, center)
        X, Y, Z = np.meshgrid(*axes, indexing="ij")
        return Field3D(self(np.stack([X, Y, Z], axis=-1)), half_width, center)


def free_resolvent(z: complex, f: LazyField) -> LazyField:
    """``R_0(z) f = G_z * f`` term by term."""
    _check_z(z)
    z = complex(z)
    return LazyField(tuple(RadialTerm(t.coef, t.center, ResolventProfile(t.profile, z)) for t in f.terms))


def kernel_term(z: complex, center, coef: complex = 1.0) -> RadialTerm:
    return RadialTerm(complex(coef), tuple(map(float, center)), KernelProfile(complex(z)))


def _inverse_gamma(cfg: InteractionConfig, z: complex):
    gam = build_gamma(cfg, z)
    if gam.size == 0:
        return gam, np.zeros((0, 0), dtype=complex)
    try:
        inv = np.linalg.inv(gam.entries)
    except np.linalg.LinAlgError:
        raise DomainError(f"Gamma({z}) is singular", code="AT-POLE") from None
    if np.linalg.norm(inv, 2) > 1e12:
        raise DomainError(f"z={z} is numerically at a pole", code="AT-POLE")
    return gam, inv


def apply_perturbed_resolvent(cfg: InteractionConfig, z: complex, f):
    """``R(z) f = R_0(z) f + sum_{jk} [Gamma(z)^{-1}]_{jk} G_z(. - y_j) <G_z(. - y_k), f>``.

    The pairing is bilinear, ``<G_z(. - y_k), f> = int G_z(y - y_k) f(y) dy
    = (R_0(z) f)(y_k)``. Accepts a ``LazyField`` (exact path) or a
    ``Field3D`` (cell-sum path).
    """
    if isinstance(f, Field3D):
        return apply_perturbed_resolvent_field(cfg, z, f)
    _check_z(z)
    validate_config(cfg)
    z = complex(z)
    gam, inv = _inverse_gamma(cfg, z)
    r0f = free_resolvent(z, f)
    if gam.size == 0:
        return r0f
    ys = cfg.centers[gam.active]
    pair = r0f(ys)
    q = inv @ pair
    return r0f + LazyField(tuple(kernel_term(z, y, qj) for y, qj in zip(ys, q)))


def correction_charges(cfg: InteractionConfig, z: complex, f: LazyField) -> np.ndarray:
    """Coefficients ``Gamma(z)^{-1} (R_0(z) f)(Y)`` of the rank-N correction."""
    gam, inv = _inverse_gamma(cfg, complex(z))
    return inv @ free_resolvent(z, f)(cfg.centers[gam.active])


# ----------------------------------------------------------- cell-sum path

def free_resolvent_field(z: complex, f: Field3D) -> Field3D:
    """Cell-sum convolution with ``G_z`` on the box of ``f``.

    Off-diagonal cells use the midpoint value of ``G_z``; the self cell uses
    the exact cell integral of ``1/(4 pi |x|)`` plus the midpoint value of the
    bounded remainder ``G_z - G_0`` (whose limit at 0 is ``i z / 4 pi``).
    Second-order accurate; meant as a coarse independent check.
    """
    _check_z(z)
    n, h = f.n, f.spacing
    off = h * np.arange(-(n - 1), n)
    X, Y, Z = np.meshgrid(off, off, off, indexing="ij")
    r = np.sqrt(X**2 + Y**2 + Z**2)
    kern = green_kernel_tilde(z, r) * h**3
    c = n - 1
    kern[c, c, c] = h**2 * CUBE_INV_R / FOUR_PI + 1j * z / FOUR_PI * h**3
    m = 2 * n - 1
    shape = (m + n - 1,) * 3
    ax = (0, 1, 2)
    conv = np.fft.ifftn(np.fft.fftn(kern, shape, ax) * np.fft.fftn(f.values, shape, ax), axes=ax)
    return f.with_values(conv[c:c + n, c:c + n, c:c + n])


def pair_kernel_field(z: complex, y, f: Field3D) -> complex:
    """Cell-sum approximation of ``int G_z(x - y) f(x) dx``."""
    r = np.linalg.norm(f.points - np.asarray(y, dtype=float), axis=-1)
    if np.any(r == 0.0):
        raise DomainError("center lies on a cell midpoint", code="ORIGIN")
    return complex(np.sum(green_kernel(z, r) * f.values) * f.cell_volume)


def apply_perturbed_resolvent_field(cfg: InteractionConfig, z: complex, f: Field3D) -> Field3D:
    validate_config(cfg)
    _check_z(z)
    gam, inv = _inverse_gamma(cfg, complex(z))
    out = free_resolvent_field(z, f).values
    if gam.size:
        ys = cfg.centers[gam.active]
        pair = np.array([pair_kernel_field(z, y, f) for y in ys])
        q = inv @ pair
        pts = f.points
        for y, qj in zip(ys, q):
            out = out + qj * green_kernel_tilde(z, pts - y)
    return f.with_values(out)


# ----------------------------------------------------------- domain elements

@dataclass(frozen=True)
class DomainElement:
    """``psi = phi_z + sum_j q_j G_z(. - y_j)`` with ``q = Gamma(z)^{-1} phi_z(Y)``.

    ``regular`` is any callable on points of shape ``(..., 3)``.
    """

    cfg: InteractionConfig
    z: complex
    regular: object
    charges: np.ndarray
    active: np.ndarray = field(repr=False)

    def singular(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        out = np.zeros(pts.shape[:-1], dtype=complex)
        for j, qj in zip(self.active, self.charges):
            out += qj * green_kernel_tilde(self.z, pts - self.cfg.centers[j])
        return out

    def __call__(self, pts) -> np.ndarray:
        return np.asarray(self.regular(pts)) + self.singular(pts)


def _regular_callable(phi):
    if isinstance(phi, Field3D):
        from scipy.interpolate import RegularGridInterpolator

        interp = RegularGridInterpolator(tuple(phi.axes), phi.values, method="cubic",
                                         bounds_error=False, fill_value=0.0)
        return lambda pts: interp(np.asarray(pts, dtype=float).reshape(-1, 3)).reshape(np.shape(pts)[:-1])
    return phi


def build_domain_element(cfg: InteractionConfig, z: complex, phi) -> DomainElement:
    """Domain element with regular part ``phi`` (a callable or a ``Field3D``)."""
    validate_config(cfg)
    _check_z(z)
    gam, inv = _inverse_gamma(cfg, complex(z))
    reg = _regular_callable(phi)
    ys = cfg.centers[gam.active]
    vals = np.asarray(reg(ys), dtype=complex).reshape(-1) if len(ys) else np.zeros(0, complex)
    return DomainElement(cfg, complex(z), reg, inv @ vals, gam.active)


def redecompose(elem: DomainElement, z_new: complex) -> DomainElement:
    """The same ``psi`` written at another spectral parameter.

    The new regular part is ``phi + sum_j q_j (G_z - G_z')(. - y_j)``, a
    bounded function whose value at ``y_j`` uses the limit
    ``(G_z - G_z')(0) = i (z - z')/4 pi``; the new charges are recomputed from
    it through ``Gamma(z')^{-1}``.
    """
    z, zn = elem.z, complex(z_new)
    _check_z(zn)
    cfg, act, q = elem.cfg, elem.active, elem.charges
    ys = cfg.centers[act]

    def regular(pts):
        pts = np.asarray(pts, dtype=float)
        out = np.asarray(elem.regular(pts), dtype=complex).copy()
        for y, qj in zip(ys, q):
            r = np.linalg.norm(pts - y, axis=-1)
            with np.errstate(divide="ignore", invalid="ignore"):
                diff = (np.exp(1j * z * r) - np.exp(1j * zn * r)) / (FOUR_PI * np.where(r == 0, 1.0, r))
            out += qj * np.where(r == 0.0, 1j * (z - zn) / FOUR_PI, diff)
        return out

    return build_domain_element(cfg, zn, regular)


# ----------------------------------------------------------- Bethe-Peierls

@dataclass(frozen=True)
class ContactFit:
    center: int
    c: complex
    b: complex
    residual: float

    @property
    def ratio(self) -> complex:
        """``b / (4 pi c)``, equal to ``alpha_j`` for a domain element."""
        return self.b / (FOUR_PI * self.c)


_AXES = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float)


def bethe_peierls_extract(psi, cfg: InteractionConfig, j: int, *, n_radii: int = 20,
                          tol: float = 1e-2) -> ContactFit:
    """Least-squares fit ``psi ~ c/|x - y_j| + b`` on radii
    ``{1e-1 .. 1e-3} * d_min`` averaged over the six axis directions.

    A column ``r`` absorbs the first-order remainder (e.g. the ``-z^2 r/8pi``
    term of ``G_z``), which would otherwise bias ``b`` by a few percent.
    """
    d = cfg.min_distance()
    d = 1.0 if not math.isfinite(d) else d
    radii = np.geomspace(1e-1, 1e-3, n_radii) * d
    y = cfg.centers[j]
    pts = y + radii[:, None, None] * _AXES[None, :, :]
    vals = np.mean(np.asarray(psi(pts), dtype=complex), axis=1)
    A = np.stack([1.0 / radii, np.ones_like(radii), radii], axis=1)
    coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
    resid = float(np.linalg.norm(A @ coef - vals) / max(np.linalg.norm(vals), 1e-300))
    if not np.isfinite(resid) or resid > tol:
        raise ResolutionError(f"contact fit residual {resid:.3g} exceeds {tol}", code="FIT-DIVERGED")
    return ContactFit(j, complex(coef[0]), complex(coef[1]), resid)


# ----------------------------------------------------------- identity check

def random_blobs(rng: np.random.Generator, count: int = 2, spread: float = 1.5) -> LazyField:
    centers = rng.uniform(-spread, spread, (count, 3))
    amps = rng.normal(size=count) + 1j * rng.normal(size=count)
    return LazyField.gaussian_blobs(centers, amps, rng.uniform(0.4, 0.8, count))


def random_z(rng: np.random.Generator) -> complex:
    return complex(rng.uniform(0.2, 1.5), rng.uniform(1.0, 3.0))


def resolvent_identity_residual(cfg: InteractionConfig, f: LazyField, z1: complex, z2: complex, *,
                                n: int = 32, half_width: float = 4.0) -> float:
    """``||(R(z1) - R(z2)) f - (z1^2 - z2^2) R(z1) R(z2) f|| / ||f||`` in L^2
    of an ``n^3`` box; both sides are built independently."""
    lhs1 = apply_perturbed_resolvent(cfg, z1, f)
    lhs2 = apply_perturbed_resolvent(cfg, z2, f)
    rhs = apply_perturbed_resolvent(cfg, z1, apply_perturbed_resolvent(cfg, z2, f))
    axes = Field3D.axis_nodes(n, half_width)
    P = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    diff = lhs1(P) - lhs2(P) - (complex(z1) ** 2 - complex(z2) ** 2) * rhs(P)
    return float(np.linalg.norm(diff) / np.linalg.norm(f(P)))
