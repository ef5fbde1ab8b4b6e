"""Command-line entry point: ``deltadisp <subcommand> [flags]``.

Every run writes its outputs and a ``manifest.json`` into ``--out``.
Exit status: 0 success, 2 verdict failure, 1 error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import INERT, InteractionConfig, WeightSpec, load_config
from .errors import ConfigError, DeltaDispError

SCHEMA_VERSION = 1
SUBCOMMANDS = ("spectrum", "assumption-scan", "resolvent-check", "bethe-peierls", "evolve", "norm",
               "pitt", "decay-fit", "conjecture", "oracle-compare")


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; here usage errors are errors (1)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        code = "UNKNOWN-SUBCOMMAND" if "invalid choice" in message else "CONFIG-PARSE"
        sys.stderr.write(f"{self.prog}: [{code}] {message}\n")
        raise SystemExit(1)


def _float(s: str) -> float:
    s = s.strip().lower()
    if s in ("inf", "+inf", "infinity"):
        return math.inf
    if "/" in s:
        a, b = s.split("/")
        return float(a) / float(b)
    return float(s)


def _floats(s: str) -> list[float]:
    return [_float(x) for x in s.split(",") if x.strip()]


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": float(x.real), "im": float(x.imag)}
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


class Bundle:
    def __init__(self, out: Path, args: argparse.Namespace):
        self.out = out
        self.args = args
        self.files: list[str] = []
        out.mkdir(parents=True, exist_ok=True)

    def json(self, name: str, payload: dict):
        data = {"schema_version": SCHEMA_VERSION, **_jsonable(payload)}
        (self.out / name).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
        self.files.append(name)

    def csv(self, name: str, header, rows):
        with open(self.out / name, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
        self.files.append(name)

    def text(self, name: str, body: str):
        (self.out / name).write_text(body)
        self.files.append(name)

    def manifest(self, resolved: dict):
        params = {k: v for k, v in vars(self.args).items() if k not in ("func",)}
        self.json("manifest.json", {
            "subcommand": self.args.command, "config": self.args.config, "seed": self.args.seed,
            "out": str(self.out), "tool_version": __version__, "parameters": params,
            "resolved": resolved, "files": sorted(self.files),
        })


def _interaction(args) -> InteractionConfig:
    if args.config:
        return load_config(args.config)["interaction"]
    alpha = getattr(args, "alpha", None)
    if alpha is None:
        raise ConfigError("give --config or --alpha")
    return InteractionConfig.single(alpha)


# ------------------------------------------------------------------ commands

def cmd_spectrum(args, b: Bundle) -> int:
    from .spectral import spectral_report

    cfg = _interaction(args)
    rep = spectral_report(cfg, args.lam_max, args.z_max, args.samples, args.threshold)
    b.json("spectrum.json", rep.to_dict())
    b.csv("scan.csv", ["z", "sigma_min"], zip(rep.scan.z, rep.scan.sigma_min))
    b.manifest({"config": cfg.to_dict()})
    print(json.dumps(_jsonable(rep.to_dict())))
    return 0


def cmd_assumption_scan(args, b: Bundle) -> int:
    from .spectral import assumption1_scan

    cfg = _interaction(args)
    scan = assumption1_scan(cfg, args.z_max, args.samples, args.threshold)
    summary = {"assumption1_ok": scan.assumption1_ok, "threshold": scan.threshold,
               "min_sigma": float(np.min(scan.sigma_min)), "z_max": args.z_max}
    b.json("assumption.json", summary)
    b.csv("scan.csv", ["z", "sigma_min"], zip(scan.z, scan.sigma_min))
    b.manifest({"config": cfg.to_dict()})
    print(json.dumps(_jsonable(summary)))
    return 0


def cmd_resolvent_check(args, b: Bundle) -> int:
    from .resolvent import random_blobs, random_z, resolvent_identity_residual

    cfg = load_config(args.config)["interaction"] if args.config else \
        InteractionConfig(np.array([[0.0, 0.0, 0.0], [1.2, 0.3, -0.4]]), (0.7, -0.3))
    rng = np.random.default_rng(args.seed)
    draws = []
    for k in range(args.draws):
        f = random_blobs(rng)
        if args.z1 is not None and k == 0:
            z1, z2 = complex(args.z1), complex(args.z2)
        else:
            z1, z2 = random_z(rng), random_z(rng)
        res = resolvent_identity_residual(cfg, f, z1, z2, n=args.n, half_width=args.half_width)
        draws.append({"residual": res, "z1": z1, "z2": z2, "seed": args.seed, "draw": k})
    worst = max(d["residual"] for d in draws)
    ok = worst < args.tol
    b.json("resolvent_check.json", {"draws": draws, "max_residual": worst, "tolerance": args.tol,
                                    "verdict": "PASS" if ok else "FAIL"})
    b.manifest({"config": cfg.to_dict()})
    print(json.dumps(_jsonable({"max_residual": worst, "verdict": "PASS" if ok else "FAIL"})))
    return 0 if ok else 2


def cmd_bethe_peierls(args, b: Bundle) -> int:
    from .resolvent import bethe_peierls_extract, build_domain_element

    cfg = _interaction(args)
    z = complex(args.z_re, args.z_im)
    ys = cfg.centers

    def phi(pts):
        pts = np.asarray(pts, dtype=float)
        return sum(np.exp(-np.sum((pts - y) ** 2, axis=-1)) for y in ys)

    elem = build_domain_element(cfg, z, phi)
    rows, ok = [], True
    for j in cfg.active:
        fit = bethe_peierls_extract(elem, cfg, int(j))
        alpha = cfg.strengths[j]
        err = abs(fit.ratio - alpha) / max(abs(alpha), 1.0)
        ok &= err < args.tol
        rows.append({"center": int(j), "c": fit.c, "b": fit.b, "ratio": fit.ratio, "alpha": alpha,
                     "rel_error": err, "residual": fit.residual})
    b.json("bethe_peierls.json", {"centers": rows, "tolerance": args.tol, "verdict": "PASS" if ok else "FAIL"})
    b.manifest({"config": cfg.to_dict(), "z": z})
    print(json.dumps(_jsonable(rows)))
    return 0 if ok else 2


def cmd_evolve(args, b: Bundle) -> int:
    from .decay import gaussian_input
    from .propagator import EvolutionRequest, evolve

    cfg = _interaction(args)
    f = gaussian_input(args.width)
    meta = []
    for t in args.t:
        res = evolve(EvolutionRequest(cfg, f, t, R=args.R, s_cut=args.s_cut, projection=args.projection,
                                      xi_max=args.xi_max))
        u = res.output
        b.csv(f"evolve_t{t:g}.csv", ["r", "re_u", "im_u"], zip(u.r, u.values.real, u.values.imag))
        meta.append({**res.metadata(), "input_norm": f.norm()})
    b.json("evolve.json", {"runs": meta})
    b.manifest({"config": cfg.to_dict(), "width": args.width})
    print(json.dumps(_jsonable([{k: m[k] for k in ("t", "R", "norm", "escalations")} for m in meta])))
    return 0


def _profile(name: str, width: float):
    if name == "gaussian":
        return lambda r: np.exp(-(r / width) ** 2)
    if name == "green":
        return lambda r: 1.0 / (4.0 * math.pi * r)
    if name == "ball":
        return lambda r: (r <= width).astype(float)
    raise ConfigError(f"unknown profile {name!r}")


def cmd_norm(args, b: Bundle) -> int:
    from .norms import WEAK, profile_norm, weak_lorentz_norm

    fn = _profile(args.profile, args.width)
    weight = None if args.weight == "UNIT" else WeightSpec(args.weight, q=args.weight_q)
    if args.flavor == WEAK:
        val = weak_lorentz_norm(fn, args.p, weight, args.power, r_max=args.r_max)
        out = {"value": val, "divergent": False, "flavor": WEAK}
    else:
        rep = profile_norm(fn, args.p, weight, args.power, r_max=args.r_max)
        out = {"value": rep.value, "divergent": rep.divergent, "history": list(rep.history), "flavor": "STRONG"}
    out.update(profile=args.profile, p=args.p, weight=weight.describe() if weight else {"kind": "UNIT"},
               power=args.power)
    b.json("norm.json", out)
    b.manifest({})
    print(json.dumps(_jsonable(out)))
    return 0


def cmd_pitt(args, b: Bundle) -> int:
    from .pitt import PittInstance, pitt_blowup_demo, pitt_scan

    if args.gamma is not None:
        inst = PittInstance(args.gamma, args.eta, args.b)
        q = float(inst.eta)
    else:
        q = args.q
        inst = None
    if q < 3:
        scan = pitt_scan(args.seed, args.count, args.p, q, refinements=args.refinements, instance=inst)
        b.csv("pitt_ratios.csv", ["index", "kind", "ratio"] + [f"ratio_level{k + 1}" for k in range(len(scan.refined))],
              [(i, k, r, *[lv[i] for lv in scan.refined]) for i, (k, r) in enumerate(zip(scan.kinds, scan.ratios))])
        drift_ok = scan.refinement_delta < args.drift_tol
        summary = {"max_ratio": scan.max_ratio, "refinement_delta": scan.refinement_delta, "regime": "BOUNDED",
                   "instance": scan.instance.describe(), "verdict": "PASS" if drift_ok else "FAIL"}
        code = 0 if drift_ok else 2
    else:
        ns = [int(n) for n in args.ns.split(",")]
        ratios = pitt_blowup_demo(q, ns, p=args.p)
        b.csv("pitt_blowup.csv", ["n", "ratio"], zip(ns, ratios))
        growth = ratios[-1] / ratios[0]
        summary = {"max_ratio": max(ratios), "growth": growth, "regime": "BLOWUP", "ns": ns, "ratios": ratios,
                   "verdict": "PASS" if growth > args.growth else "FAIL"}
        code = 0 if growth > args.growth else 2
    b.json("pitt.json", summary)
    b.manifest({})
    print(json.dumps(_jsonable(summary)))
    return code


def cmd_decay_fit(args, b: Bundle) -> int:
    from . import decay

    times = args.times or list(decay.DEFAULT_TIMES)
    f = decay.gaussian_input(args.width)
    window = tuple(args.window) if args.window else None
    if args.preset:
        table, fit, rp = decay.run_preset(args.preset, args.alpha, args.q, eps=args.eps, variant=args.variant,
                                          f=f, t_grid=times, window=window, tolerance=args.tol)
        resolved = rp.describe()
    else:
        if args.q is None:
            raise ConfigError("explicit runs need --q (and optionally --p)")
        p = args.p if args.p is not None else decay.dual_exponent(args.q)
        lw = None if args.left_weight == "UNIT" else WeightSpec(args.left_weight, q=args.q)
        rw = None if args.right_weight == "UNIT" else WeightSpec(args.right_weight, q=args.q)
        left = decay.NormSide(lw, args.left_power, args.left_flavor)
        right = decay.NormSide(rw, args.right_power)
        table = decay.run_decay(InteractionConfig.single(args.alpha), f, p, args.q, left, right, times,
                                args.projection, case=args.case, eps=args.eps if args.eps is not None else decay.DEFAULT_EPS)
        fit = decay.fit_decay(table, window, tolerance=args.tol)
        resolved = {"p": p, "q": args.q, "left": left.describe(), "right": right.describe(), "case": args.case}
    b.text("decay_table.csv", table.to_csv())
    b.json("decay_fit.json", {**fit.to_dict(), "table": table.describe(), "preset_definition": resolved})
    b.manifest({"width": args.width, "times": times, **({"preset": resolved} if args.preset else {})})
    print(json.dumps(_jsonable({k: v for k, v in fit.to_dict().items()
                                if k in ("slope", "stderr", "predicted", "verdict", "preset")})))
    return 2 if fit.verdict == "FAIL" and fit.label == "ASSERTED" else 0


def cmd_conjecture(args, b: Bundle) -> int:
    from . import decay

    times = args.times or list(decay.DEFAULT_TIMES)
    eps = args.eps_values or list(decay.EPS_SWEEP)
    res = decay.conjecture_scan(args.alpha, args.q, t_grid=times, eps_values=eps,
                                f=decay.gaussian_input(args.width), tolerance=args.tol)
    fits = []
    for k, (label, table, fit) in enumerate(res):
        b.text(f"conjecture_{k}.csv", table.to_csv())
        fits.append({"family": label, "table_file": f"conjecture_{k}.csv", **fit.to_dict(), "table": table.describe()})
    b.json("conjecture.json", {"label": "EXPLORATORY", "alpha": args.alpha, "q": args.q, "fits": fits})
    b.manifest({"width": args.width, "times": times, "eps": eps})
    for fd in fits:
        print(f"{fd['family']}: slope {fd['slope']:.4f} vs {fd['predicted']:.4f} [EXPLORATORY]")
    return 0


def cmd_oracle_compare(args, b: Bundle) -> int:
    from .propagator import oracle_compare

    out = oracle_compare(args.n, args.half_width, args.t)
    out["tolerance"] = args.tol
    out["verdict"] = "PASS" if out["rel_l2_error"] < args.tol else "FAIL"
    b.json("oracle_compare.json", out)
    b.manifest({})
    print(json.dumps(_jsonable(out)))
    return 0 if out["verdict"] == "PASS" else 2


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (centers, strengths, grid, box)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default="deltadisp-out", help="output directory")

    ap = _Parser(prog="deltadisp", description="Point-interaction spectra, propagators and decay fits.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
        return p

    p = add("spectrum", cmd_spectrum, "poles of Gamma on the imaginary axis and the invertibility scan")
    p.add_argument("--alpha", type=_float)
    p.add_argument("--lam-max", type=float)
    p.add_argument("--z-max", type=float, default=10.0)
    p.add_argument("--samples", type=int, default=201)
    p.add_argument("--threshold", type=float, default=1e-6)

    p = add("assumption-scan", cmd_assumption_scan, "smallest singular value of Gamma(z) on [0, z_max]")
    p.add_argument("--alpha", type=_float)
    p.add_argument("--z-max", type=float, default=10.0)
    p.add_argument("--samples", type=int, default=201)
    p.add_argument("--threshold", type=float, default=1e-6)

    p = add("resolvent-check", cmd_resolvent_check, "resolvent identity on seeded Gaussian data")
    p.add_argument("--draws", type=int, default=10)
    p.add_argument("--z1", type=complex)
    p.add_argument("--z2", type=complex)
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--half-width", type=float, default=4.0)
    p.add_argument("--tol", type=float, default=1e-6)

    p = add("bethe-peierls", cmd_bethe_peierls, "contact-condition fit at each center")
    p.add_argument("--alpha", type=_float)
    p.add_argument("--z-re", type=float, default=0.0)
    p.add_argument("--z-im", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-2)

    p = add("evolve", cmd_evolve, "single-center evolution of a Gaussian")
    p.add_argument("--alpha", type=_float, default=INERT)
    p.add_argument("--t", type=_floats, default=[1.0])
    p.add_argument("--R", type=float, help="fixed truncation radius (default: escalate)")
    p.add_argument("--s-cut", type=float)
    p.add_argument("--projection", choices=["FULL", "AC"], default="FULL")
    p.add_argument("--width", type=float, default=1.0)
    p.add_argument("--xi-max", type=float, default=80.0)

    p = add("norm", cmd_norm, "weighted strong or weak-Lorentz norm of a radial profile")
    p.add_argument("--profile", choices=["gaussian", "green", "ball"], default="gaussian",
                   help="exp(-(r/width)^2), 1/(4 pi r), or the indicator of r <= width")
    p.add_argument("--width", type=float, default=1.0)
    p.add_argument("--p", type=_float, default=2.0)
    p.add_argument("--flavor", choices=["STRONG", "WEAK-LORENTZ"], default="STRONG")
    p.add_argument("--weight", choices=["UNIT", "SINGULAR-SUM", "CONJ-Q", "LOCAL-CUTOFF"], default="UNIT")
    p.add_argument("--weight-q", type=_float)
    p.add_argument("--power", type=float, default=1.0)
    p.add_argument("--r-max", type=float, default=10.0)

    p = add("pitt", cmd_pitt, "Pitt ratios on a seeded corpus (q < 3) or the concentrating family (q >= 3)")
    p.add_argument("--p", type=_float)
    p.add_argument("--q", type=_float, default=2.5)
    p.add_argument("--gamma", type=_float)
    p.add_argument("--eta", type=_float)
    p.add_argument("--b", type=_float)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--refinements", type=int, default=2)
    p.add_argument("--ns", default="2,4,8,16,32")
    p.add_argument("--drift-tol", type=float, default=0.05)
    p.add_argument("--growth", type=float, default=10.0)

    for name, func, help_ in (("decay-fit", cmd_decay_fit, "decay table and log-log fit"),
                              ("conjecture", cmd_conjecture, "exploratory decay fits for q >= 3")):
        p = add(name, func, help_)
        p.add_argument("--alpha", type=_float, default=1.0)
        p.add_argument("--q", type=_float, default=None if name == "decay-fit" else 4.0)
        p.add_argument("--times", type=_floats)
        p.add_argument("--width", type=float, default=0.125)
        p.add_argument("--tol", type=float, default=0.05)
        if name == "decay-fit":
            p.add_argument("--preset")
            p.add_argument("--variant")
            p.add_argument("--eps", type=float)
            p.add_argument("--p", type=_float)
            p.add_argument("--window", type=_floats)
            p.add_argument("--projection", choices=["FULL", "AC"], default="AC")
            p.add_argument("--case", choices=["GENERIC", "RESONANT", "RESONANT-WEIGHTED-EPS"], default="GENERIC")
            for side in ("left", "right"):
                p.add_argument(f"--{side}-weight", choices=["UNIT", "SINGULAR-SUM", "CONJ-Q"], default="UNIT")
                p.add_argument(f"--{side}-power", type=float, default=0.0)
            p.add_argument("--left-flavor", choices=["STRONG", "WEAK-LORENTZ"], default="STRONG")
        else:
            p.add_argument("--eps-values", type=_floats)

    p = add("oracle-compare", cmd_oracle_compare, "radial free flow against the 3-D cell-sum oracle")
    p.add_argument("--n", type=int, default=24)
    p.add_argument("--half-width", type=float, default=6.0)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-6)
    return ap


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    bundle = Bundle(Path(args.out), args)
    try:
        return args.func(args, bundle)
    except DeltaDispError as exc:
        sys.stderr.write(f"deltadisp {args.command}: {exc}\n")
        return 1


def main(argv=None):
    sys.exit(run(argv))
