"""Decay experiments: evolve, measure weighted norms against time, fit the
log-log slope and compare it with the rate of the corresponding estimate.
"""
from __future__ import annotations

import ast
import csv
import io
import json
import math
import operator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

import numpy as np
from scipy import stats

from .config import INERT, InteractionConfig, RadialFunction, RadialGrid, WeightSpec
from .errors import ConfigError, DeltaDispError, DomainError
from .norms import STRONG, WEAK, lp_norm, weak_lorentz_norm
from .propagator import EvolutionRequest, evolve

CASES = ("GENERIC", "RESONANT", "RESONANT-WEIGHTED-EPS")
DEFAULT_TIMES = tuple(float(2**k) for k in range(7))
DEFAULT_EPS = 0.1
EPS_SWEEP = (0.05, 0.1, 0.2)
TOLERANCE = 0.05
# narrow data reach the dispersive regime (spread 4t/width >> weight scale 1) early in t in [1, 64]
DEFAULT_WIDTH = 0.125
DUAL_TOL = 1e-12


# ------------------------------------------------------------------ exponents

def _inv(x: float) -> float:
    return 0.0 if math.isinf(x) else 1.0 / x


def dual_exponent(q: float) -> float:
    if q == 1:
        return math.inf
    return 1.0 if math.isinf(q) else q / (q - 1.0)


def predicted_exponent(p: float, q: float, case: str, eps: float = DEFAULT_EPS) -> float:
    """Time exponent of the estimate: ``-(3/2)(1/p - 1/q)`` (GENERIC),
    ``-(1/2)(1/p - 1/q)`` (RESONANT), ``-1/2 + eps/q`` (RESONANT-WEIGHTED-EPS)."""
    case = case.upper().replace("ε", "EPS")
    if case not in CASES:
        raise ValueError(f"unknown case {case!r}")
    if abs(_inv(p) + _inv(q) - 1.0) > DUAL_TOL:
        raise DomainError(f"p={p}, q={q} are not dual", code="NON-DUAL")
    d = _inv(p) - _inv(q)
    if case == "GENERIC":
        return -1.5 * d
    if case == "RESONANT":
        return -0.5 * d
    return -0.5 + eps * _inv(q)


# ------------------------------------------------------------------ tables

@dataclass(frozen=True)
class NormSide:
    """``|| w^power u ||`` in ``L^exponent`` (strong) or ``L^{exponent,inf}``."""

    weight: WeightSpec | None = None
    power: float = 0.0
    flavor: str = STRONG

    def describe(self) -> dict:
        w = self.weight.describe() if self.weight is not None else {"kind": "UNIT"}
        return {"weight": w, "power": self.power, "flavor": self.flavor}

    def measure(self, u, exponent: float) -> float:
        if self.flavor == WEAK:
            return weak_lorentz_norm(u, exponent, self.weight, self.power)
        return lp_norm(u, exponent, self.weight, self.power)


@dataclass(frozen=True)
class DecayRow:
    t: float
    norm_left: float
    norm_right: float
    status: str = "OK"          # OK | DIVERGENT
    reason: str = ""

    @property
    def ratio(self) -> float:
        return self.norm_left / self.norm_right if self.norm_right else math.inf


@dataclass(frozen=True)
class DecayTable:
    rows: tuple[DecayRow, ...]
    p: float
    q: float
    left: NormSide
    right: NormSide
    projection: str
    case: str
    alpha: float
    predicted: float | None = None
    preset: str | None = None
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        ts = [r.t for r in self.rows]
        if any(b <= a for a, b in zip(ts[:-1], ts[1:])):
            raise ValueError("t must be strictly increasing")

    @property
    def t(self) -> np.ndarray:
        return np.array([r.t for r in self.rows])

    @property
    def valid(self) -> tuple[DecayRow, ...]:
        return tuple(r for r in self.rows if r.status == "OK")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "norm_left", "norm_right", "ratio", "status"])
        for r in self.rows:
            w.writerow([repr(r.t), repr(r.norm_left), repr(r.norm_right), repr(r.ratio), r.status])
        return buf.getvalue()

    def describe(self) -> dict:
        return {
            "p": _num(self.p), "q": _num(self.q), "alpha": _num(self.alpha),
            "left": self.left.describe(), "right": self.right.describe(),
            "projection": self.projection, "case": self.case, "predicted": self.predicted,
            "preset": self.preset, "flags": list(self.flags),
            "excluded": [{"t": r.t, "reason": r.reason} for r in self.rows if r.status != "OK"],
        }


def _num(x):
    return "inf" if isinstance(x, float) and math.isinf(x) else x


def gaussian_input(width: float = DEFAULT_WIDTH, r_max: float = 8.0) -> RadialFunction:
    """``exp(-r^2/width^2)`` on a geometric radial grid."""
    g = RadialGrid.geometric(r_max * width, r_min=1e-3 * width, max_width=0.25 * width)
    return RadialFunction.from_callable(lambda r: np.exp(-(r / width) ** 2), g)


def _alpha_of(cfg: InteractionConfig) -> float:
    if cfg.n != 1:
        raise DomainError("decay experiments need a single center (or the free flow)")
    return float(cfg.strengths[0])


def run_decay(cfg: InteractionConfig, f: RadialFunction, p: float, q: float,
              left: NormSide = NormSide(), right: NormSide = NormSide(),
              t_grid=DEFAULT_TIMES, projection: str = "AC", *, case: str = "GENERIC",
              eps: float = DEFAULT_EPS, preset: str | None = None, flags=(),
              workers: int = 1, evolve_kw: dict | None = None) -> DecayTable:
    """One row per ``t``: the left norm of the evolved state and the right
    norm of ``f``. Rows whose norm is not finite are kept as DIVERGENT and
    left out of fits."""
    alpha = _alpha_of(cfg)
    t_grid = tuple(float(t) for t in t_grid)
    right_norm = right.measure(f, p)
    evolve_kw = evolve_kw or {}

    def row(t):
        try:
            res = evolve(EvolutionRequest(cfg, f, t, projection=projection, **evolve_kw))
            val = left.measure(res.output, q)
        except DeltaDispError as exc:
            return DecayRow(t, math.nan, right_norm, "DIVERGENT", str(exc))
        if not np.isfinite(val):
            return DecayRow(t, val, right_norm, "DIVERGENT", "non-finite norm")
        return DecayRow(t, float(val), right_norm)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(row, t_grid))
    else:
        rows = [row(t) for t in t_grid]
    try:
        pred = predicted_exponent(p, q, case, eps)
    except DomainError:
        pred = None
    return DecayTable(tuple(rows), float(p), float(q), left, right, projection.upper(), case,
                      alpha, pred, preset, tuple(flags))


# ------------------------------------------------------------------ fits

@dataclass(frozen=True)
class DecayFit:
    slope: float
    stderr: float
    intercept: float
    window: tuple[float, float]
    n_points: int
    predicted: float | None
    tolerance: float
    verdict: str                # PASS | FAIL | NONE
    bound_ok: bool | None = None  # slope <= predicted + tolerance (the estimates are upper bounds)
    label: str = "ASSERTED"     # ASSERTED | EXPLORATORY
    preset: str | None = None
    flags: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "slope": self.slope, "stderr": self.stderr, "intercept": self.intercept,
            "window": list(self.window), "n_points": self.n_points, "predicted": self.predicted,
            "tolerance": self.tolerance, "verdict": self.verdict, "bound_ok": self.bound_ok,
            "label": self.label,
            "preset": self.preset, "flags": list(self.flags),
        }


def fit_decay(table: DecayTable, window: tuple[float, float] | None = None, *,
              predicted: float | None = None, tolerance: float = TOLERANCE,
              label: str = "ASSERTED") -> DecayFit:
    """Least squares of ``log(norm_left)`` against ``log t`` over the rows
    with ``t`` in ``window`` (default: the whole table)."""
    rows = table.valid
    if window is None:
        window = (table.rows[0].t, table.rows[-1].t) if table.rows else (0.0, 0.0)
    lo, hi = window
    if table.rows and (lo < table.rows[0].t - 1e-12 or hi > table.rows[-1].t + 1e-12):
        raise DomainError("fit window exceeds the table's t range")
    sel = [r for r in rows if lo <= r.t <= hi and r.norm_left > 0]
    if len(sel) < 4:
        raise DomainError(f"{len(sel)} usable rows in the window, need 4", code="TOO-FEW-POINTS")
    x = np.log([r.t for r in sel])
    y = np.log([r.norm_left for r in sel])
    fit = stats.linregress(x, y)
    pred = table.predicted if predicted is None else predicted
    if pred is None:
        verdict, bound_ok = "NONE", None
    else:
        verdict = "PASS" if abs(fit.slope - pred) <= tolerance else "FAIL"
        bound_ok = bool(fit.slope <= pred + tolerance)
    return DecayFit(float(fit.slope), float(fit.stderr), float(fit.intercept), (float(lo), float(hi)),
                    len(sel), pred, tolerance, verdict, bound_ok, label, table.preset, table.flags)


def shifted_windows(table: DecayTable, points: int = 6) -> list[tuple[float, float]]:
    """Windows of ``points`` consecutive rows, each one step right of the last."""
    t = [r.t for r in table.valid]
    return [(t[i], t[i + points - 1]) for i in range(len(t) - points + 1)]


# ------------------------------------------------------------------ presets

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.Pow: operator.pow}


def eval_formula(expr: str, **names) -> float:
    """Arithmetic expression in the given names (plus ``inf``); nothing else."""
    env = {"inf": math.inf, **names}

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in env:
            return float(env[node.id])
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            a, b = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Div) and math.isinf(b):
                return 0.0 if not math.isinf(a) else math.nan
            return _OPS[type(node.op)](a, b)
        raise ConfigError(f"unsupported element in formula {expr!r}")

    return ev(ast.parse(expr, mode="eval"))


def load_presets() -> dict:
    text = resources.files("deltadisp").joinpath("presets.json").read_text()
    return json.loads(text)["presets"]


@dataclass(frozen=True)
class ResolvedPreset:
    name: str
    p: float
    q: float
    eps: float
    case: str
    projection: str
    left: NormSide
    right: NormSide
    exploratory: bool
    definition: dict = field(repr=False, default_factory=dict)
    variant: str | None = None
    flags: tuple[str, ...] = ()

    def describe(self) -> dict:
        return {"name": self.name, "variant": self.variant, "p": _num(self.p), "q": _num(self.q),
                "eps": self.eps, "case": self.case, "projection": self.projection,
                "left": self.left.describe(), "right": self.right.describe(),
                "definition": self.definition, "flags": list(self.flags)}


def _parse_q(s: str) -> float:
    return math.inf if s.strip() == "inf" else float(Fraction(s.strip()))


def _side(spec: dict, q: float, p: float, eps: float) -> NormSide:
    kind = spec["weight"]
    power = eval_formula(spec["power"], p=p, q=q, eps=eps)
    if kind == "UNIT":
        return NormSide(None, 0.0, spec.get("flavor", STRONG))
    weight = WeightSpec(kind, q=q if kind == "CONJ-Q" else None)
    return NormSide(weight, power, spec.get("flavor", STRONG))


def resolve_preset(name: str, alpha: float, q: float | None = None, eps: float | None = None,
                   variant: str | None = None) -> ResolvedPreset:
    """Exponents, weights, case and projection of a named preset."""
    presets = load_presets()
    if name not in presets:
        raise ConfigError(f"unknown preset {name!r}; known: {', '.join(sorted(presets))}",
                          code="UNKNOWN-PRESET")
    d = presets[name]
    want = d["alpha"]
    if (want == "zero" and alpha != 0) or (want == "nonzero" and (alpha == 0 or alpha == INERT)):
        raise DomainError(f"{name} is stated for alpha {want}, got {alpha}", code="PRESET-ALPHA")
    qr = d["q"]
    q = _parse_q(qr["default"]) if q is None else float(q)
    q_lo, q_hi = _parse_q(qr["min"]), _parse_q(qr["max"])
    if q < q_lo or q > q_hi or (qr.get("max_open") and q >= q_hi):
        raise DomainError(f"{name} needs q in [{qr['min']}, {qr['max']}{')' if qr.get('max_open') else ']'}",
                          code="Q-RANGE")
    p = dual_exponent(q)
    # a preset may pin eps (the endpoint form of the conjecture uses eps = 0)
    eps = float(d["eps"]) if "eps" in d else (DEFAULT_EPS if eps is None else float(eps))
    case = d["case"]
    if case == "BY-ALPHA":
        case = "RESONANT" if alpha == 0 else "GENERIC"
    right = d["right"]
    if variant is not None:
        if variant not in d.get("variants", {}):
            raise ConfigError(f"{name} has no variant {variant!r}", code="UNKNOWN-PRESET")
        right = d["variants"][variant]["right"]
    flags = []
    if any(s["weight"] == "CONJ-Q" for s in (d["left"], d["right"])):
        if q == 3:
            flags.append("CONSTANT-WEIGHT: w_3 = 2")
        if right.get("flavor", STRONG) == STRONG:
            flags.append("L^{p,1} input norm replaced by L^p")
    return ResolvedPreset(name, p, q, eps, case, d["projection"],
                          _side(d["left"], q, p, eps), _side(right, q, p, eps),
                          bool(d.get("exploratory", False)), d, variant, tuple(flags))


def run_preset(name: str, alpha: float, q: float | None = None, *, eps: float | None = None,
               variant: str | None = None, f: RadialFunction | None = None,
               t_grid=DEFAULT_TIMES, window=None, tolerance: float = TOLERANCE,
               workers: int = 1) -> tuple[DecayTable, DecayFit, ResolvedPreset]:
    rp = resolve_preset(name, alpha, q, eps, variant)
    f = gaussian_input() if f is None else f
    table = run_decay(InteractionConfig.single(alpha), f, rp.p, rp.q, rp.left, rp.right, t_grid,
                      rp.projection, case=rp.case, eps=rp.eps, preset=name, flags=rp.flags,
                      workers=workers)
    fit = fit_decay(table, window, tolerance=tolerance,
                    label="EXPLORATORY" if rp.exploratory else "ASSERTED")
    return table, fit, rp


# ------------------------------------------------------------------ conjectures

def conjecture_family(alpha: float, q: float, eps_values=EPS_SWEEP) -> list[tuple[str, NormSide, NormSide, str, float]]:
    """``(label, left, right, case, eps)`` for each weight tried at ``q >= 3``:
    CONJ-Q strong, CONJ-Q weak-Lorentz, the almost optimal powers of ``w``
    for each ``eps``, and a weight equal to 1 outside the unit ball."""
    resonant = alpha == 0
    conj_case, conj_eps = ("RESONANT-WEIGHTED-EPS", 0.0) if resonant else ("GENERIC", 0.0)
    wq = WeightSpec("CONJ-Q", q=q)
    fam = [("CONJ-Q/STRONG", NormSide(wq, -1.0), NormSide(wq, 1.0), conj_case, conj_eps)]
    if not math.isinf(q):
        fam.append(("CONJ-Q/WEAK-LORENTZ", NormSide(wq, -1.0, WEAK), NormSide(wq, 1.0), conj_case, conj_eps))
    w = WeightSpec("SINGULAR-SUM")
    for e in eps_values:
        k = 1.0 - (3.0 - e) * _inv(q)
        case = "RESONANT-WEIGHTED-EPS" if resonant else "GENERIC"
        fam.append((f"ALMOST-OPTIMAL/eps={e:g}", NormSide(w, -k), NormSide(w, k), case, e))
    # w = 1 outside the unit ball with w^-1 G_i in L^q: a log profile at q = 3,
    # a power just above 1 - 3/q otherwise
    if q == 3:
        loc = WeightSpec("LOCAL-CUTOFF", radius=1.0, profile="log", kappa=1.0)
    else:
        loc = WeightSpec("LOCAL-CUTOFF", radius=1.0, profile="power", kappa=1.0 - 3.0 * _inv(q) + 0.05)
    fam.append(("LOCAL-CUTOFF", NormSide(loc, -1.0), NormSide(loc, 1.0), conj_case, conj_eps))
    return fam


def conjecture_scan(alpha: float, q: float, *, t_grid=DEFAULT_TIMES, eps_values=EPS_SWEEP,
                    f: RadialFunction | None = None, workers: int = 1,
                    tolerance: float = TOLERANCE) -> list[tuple[str, DecayTable, DecayFit]]:
    """Decay tables and fits for the weight family at ``q >= 3``; all fits
    carry the EXPLORATORY label."""
    if not q >= 3:
        raise DomainError("conjecture scans need q >= 3", code="Q-RANGE")
    f = gaussian_input() if f is None else f
    cfg = InteractionConfig.single(alpha)
    p = dual_exponent(q)
    projection = "FULL" if alpha == 0 else "AC"
    out = []
    for label, left, right, case, e in conjecture_family(alpha, q, eps_values):
        flags = []
        if left.weight is not None and left.weight.kind == "CONJ-Q":
            if q == 3:
                flags.append("CONSTANT-WEIGHT: w_3 = 2")
            flags.append("L^{p,1} input norm replaced by L^p")
        table = run_decay(cfg, f, p, q, left, right, t_grid, projection, case=case, eps=e,
                          preset=label, flags=flags, workers=workers)
        out.append((label, table, fit_decay(table, tolerance=tolerance, label="EXPLORATORY")))
    return out
