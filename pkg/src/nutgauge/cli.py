"""Command line front end.

    nutgauge <command> --config <path> [--out <path>] [--format json|csv] [--seed N]

The config is a single JSON object.  Exit status: 0 when every check passes,
1 when a tolerance check fails, 2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import gauge, geometry, harmonic, moduli, twistor
from .errors import ConfigError, NutGaugeError, ParseError, ValidationError

COMMANDS = (
    "verify-geometry",
    "green-identity",
    "harmonic-suite",
    "build-instanton",
    "energy",
    "decay",
    "twistor-lines",
    "equivariance",
    "moduli-sample",
)

DEFAULT_NUMERIC = {
    "h": None,
    "R_max": 40.0,
    "eps": None,
    "K": 1000,
    "j_max": 3,
    "seed": 0,
    "n_points": 50,
    "n_green": 1000,
}

DEFAULT_TOLERANCES = {
    "geometry": 1e-5,
    "riemann_min": 1e-2,
    "green": 1e-6,
    "lens": 1e-6,
    "radial_exact": 1e-12,
    "radial_exponent": 0.02,
    "energy": 0.02,
    "asd": 1e-5,
    "twistor": 1e-9,
    "gluing": 1e-10,
    "equivariance": 1e-10,
}

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


@dataclass
class RunConfig:
    geometry: geometry.NutConfiguration
    command: str | None = None
    numeric: dict = field(default_factory=lambda: dict(DEFAULT_NUMERIC))
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    instanton: dict | None = None
    output: dict = field(default_factory=lambda: {"path": None, "format": "json"})

    @property
    def seed(self) -> int:
        return int(self.numeric["seed"])


# ---------------------------------------------------------------------------
# parsing


def _positive(name: str, v, integer: bool = False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(name, "must be a number")
    if integer and int(v) != v:
        raise ValidationError(name, "must be an integer")
    if not v > 0 or (isinstance(v, float) and not math.isfinite(v)):
        raise ValidationError(name, "must be positive and finite")
    return int(v) if integer else float(v)


def _lambda(name: str, v) -> float:
    if isinstance(v, str) and v.lower() in ("inf", "+inf", "infinity"):
        return math.inf
    if v is None:
        return math.inf
    return _positive(name, v)


def _instanton(raw, cfg: geometry.NutConfiguration) -> dict:
    if not isinstance(raw, dict):
        raise ValidationError("instanton", "must be an object")
    space = raw.get("space", "FlatR3xS1")
    try:
        space = harmonic.Space(space)
    except ValueError:
        raise ValidationError("instanton.space", f"unknown space {space!r}; valid: {[s.value for s in harmonic.Space]}")
    sources = raw.get("sources")
    if sources is None:
        sources = [{"y": raw.get("y"), "lambda": raw.get("lambda", 1.0)}]
    if not isinstance(sources, list) or not sources:
        raise ValidationError("instanton.sources", "must be a non-empty list")
    out = []
    for i, src in enumerate(sources):
        y = src.get("y")
        if space in (harmonic.Space.FLAT_R3xS1, harmonic.Space.FLAT_R4):
            y = [0.0, 0.0, 0.0, 0.0] if y is None else y
            n = 4
        else:
            y = [0.0, 0.0, 0.0] if y is None else y
            n = 3
        if not isinstance(y, list) or len(y) != n or not all(isinstance(v, (int, float)) for v in y):
            raise ValidationError(f"instanton.sources[{i}].y", f"must be a list of {n} numbers")
        out.append({"y": [float(v) for v in y], "lambda": _lambda(f"instanton.sources[{i}].lambda", src.get("lambda", 1.0))})
    s = raw.get("s", 1)
    return {"space": space, "sources": out, "s": _positive("instanton.s", s, integer=True)}


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON run configuration, filling defaults."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(raw, dict):
        raise ParseError("top level must be a JSON object", 1, 1)
    known = {"nuts", "c", "charges", "command", "numeric", "tolerances", "instanton", "output"}
    for key in raw:
        if key not in known:
            raise ValidationError(key, f"unknown field; valid fields: {sorted(known)}")
    nuts = raw.get("nuts", [])
    if not isinstance(nuts, list):
        raise ValidationError("nuts", "must be a list of 3-vectors")
    for i, q in enumerate(nuts):
        if not isinstance(q, list) or len(q) != 3 or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in q):
            raise ValidationError(f"nuts[{i}]", "must be a list of 3 numbers")
    c = _positive("c", raw.get("c", 1.0))
    charges = raw.get("charges")
    try:
        cfg = geometry.NutConfiguration(np.array(nuts, dtype=float).reshape(-1, 3), c=c, charges=charges)
    except NutGaugeError as exc:
        raise ValidationError("nuts", str(exc)) from None
    except ValueError as exc:
        raise ValidationError("nuts", str(exc)) from None
    command = raw.get("command")
    if command is not None and command not in COMMANDS:
        raise ValidationError("command", f"unknown command {command!r}; valid commands: {', '.join(COMMANDS)}")
    numeric = dict(DEFAULT_NUMERIC)
    for k, v in (raw.get("numeric") or {}).items():
        if k not in DEFAULT_NUMERIC:
            raise ValidationError(f"numeric.{k}", f"unknown parameter; valid: {sorted(DEFAULT_NUMERIC)}")
        if k == "seed":
            if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                raise ValidationError("numeric.seed", "must be a non-negative integer")
            numeric[k] = v
        elif v is None:
            numeric[k] = None
        else:
            numeric[k] = _positive(f"numeric.{k}", v, integer=k in ("K", "j_max", "n_points", "n_green"))
    tolerances = dict(DEFAULT_TOLERANCES)
    for k, v in (raw.get("tolerances") or {}).items():
        if k not in DEFAULT_TOLERANCES:
            raise ValidationError(f"tolerances.{k}", f"unknown tolerance; valid: {sorted(DEFAULT_TOLERANCES)}")
        tolerances[k] = _positive(f"tolerances.{k}", v)
    inst = _instanton(raw["instanton"], cfg) if "instanton" in raw else None
    output = {"path": None, "format": "json"}
    out_raw = raw.get("output") or {}
    if not isinstance(out_raw, dict):
        raise ValidationError("output", "must be an object")
    output.update(out_raw)
    if output["format"] not in ("json", "csv"):
        raise ValidationError("output.format", "must be 'json' or 'csv'")
    return RunConfig(cfg, command, numeric, tolerances, inst, output)


# ---------------------------------------------------------------------------
# commands


def _harmonic_from(run: RunConfig) -> harmonic.HarmonicFunction:
    inst = run.instanton or {"space": harmonic.Space.FLAT_R3xS1, "sources": [{"y": [0, 0, 0, 0], "lambda": 1.0}], "s": 1}
    space = inst["space"]
    s = inst["s"]
    greens, lams = [], []
    for src in inst["sources"]:
        norm = 4 * np.pi**2 if space is harmonic.Space.FLAT_R4 else 1.0
        greens.append(harmonic.GreenSpec(space, tuple(src["y"]), normalization=norm, s=s))
        lams.append(src["lambda"])
    return harmonic.HarmonicFunction(tuple(greens), tuple(lams))


def cmd_verify_geometry(run: RunConfig) -> tuple[dict, bool]:
    cfg = run.geometry
    rng = np.random.default_rng(run.seed)
    n = int(run.numeric["n_points"])
    center = cfg.points.mean(axis=0) if cfg.s else None
    pts = geometry.sample_points(cfg, n, rng, center=center)
    rows = []
    for p in pts:
        d = geometry.curvature_diagnostics(cfg, p, run.numeric["h"])
        e1 = rng.normal(size=3)
        rows.append({
            "x1": p.x[0], "x2": p.x[1], "x3": p.x[2], "tau": p.tau,
            "scalar": d.scalar_curvature, "weyl_plus": d.weyl_plus_norm, "ricci": d.ricci_norm,
            "riemann": d.riemann_norm,
            "monopole": float(np.linalg.norm(geometry.monopole_residual(cfg, p.x, 1e-3 if cfg.s else None))),
            "kahler": geometry.kahler_form_closure(cfg, e1, p, 1e-3 if cfg.s else None),
        })
    tol = run.tolerances["geometry"]
    summary = {k: max(r[k] for r in rows) for k in ("scalar", "weyl_plus", "ricci", "monopole", "kahler")}
    summary["riemann_min"] = min(r["riemann"] for r in rows)
    ok = all(summary[k] < tol for k in ("scalar", "weyl_plus", "ricci", "monopole", "kahler"))
    if cfg.s:
        ok = ok and summary["riemann_min"] > run.tolerances["riemann_min"]
    return {"summary": summary, "rows": rows, "pass": ok}, ok


def cmd_green_identity(run: RunConfig) -> tuple[dict, bool]:
    rng = np.random.default_rng(run.seed)
    n = int(run.numeric["n_green"])
    K = int(run.numeric["K"])
    a = rng.uniform(0.05, 4.0, n)
    b = rng.uniform(-np.pi, np.pi, n)
    series = harmonic.flat_green_series_extrapolated(a, b, K)
    unit = harmonic.flat_green_closed(a, b, 1.0)
    C_fit = float(np.sum(series * unit) / np.sum(unit * unit))
    closed = harmonic.flat_green_closed(a, b)
    rel = float(np.max(np.abs(closed - series) / np.abs(series)))
    ok = rel < run.tolerances["green"]
    res = {
        "max_relative_error": rel,
        "C_fitted": C_fit,
        "C_series_forced": harmonic.FLAT_GREEN_C,
        "C_printed": harmonic.PRINTED_FLAT_GREEN_C,
        "printed_over_fitted": harmonic.PRINTED_FLAT_GREEN_C / C_fit,
        "discrepancy_factor": C_fit / harmonic.PRINTED_FLAT_GREEN_C,
        "pass": ok,
    }
    return res, ok


def cmd_harmonic_suite(run: RunConfig) -> tuple[dict, bool]:
    rng = np.random.default_rng(run.seed)
    s = int(run.instanton["s"]) if run.instanton else max(1, int(run.geometry.total_charge) or 1)
    j_max = int(run.numeric["j_max"])
    tol = run.tolerances
    eig = 0.0
    sign_ok = True
    for j in range(j_max + 1):
        for k, l in harmonic.lens_indices(j, s):
            Y = harmonic.LensHarmonic(j, k, l, s)
            p = (rng.uniform(0, 4 * np.pi / s), rng.uniform(0, 2 * np.pi), rng.uniform(0.4, np.pi - 0.4))
            lap = harmonic.lens_laplacian_apply(s, Y, p, 1e-2)
            eig = max(eig, abs(lap + j * (j + 1) * Y(*p)) / max(1.0, abs(Y(*p))))
            if j > 0:
                re, im = harmonic.shell_sign_change(Y)
                sign_ok = sign_ok and re and im
    r = np.linspace(0.5, 10, 40)
    exact = 0.0
    for j in range(j_max + 1):
        d = harmonic.radial_solve(j, 0, s, harmonic.Branch.DECAYING, r).value
        g = harmonic.radial_solve(j, 0, s, harmonic.Branch.GROWING, r).value
        exact = max(exact, float(np.max(np.abs(d - r ** (-j - 1)) / r ** (-j - 1))), float(np.max(np.abs(g - r**j) / r**j)))
    grid = np.linspace(1.0, 40.0, 400)
    fits = {}
    exp_ok = True
    for br, sign in ((harmonic.Branch.DECAYING, -1), (harmonic.Branch.GROWING, 1)):
        fit = harmonic.fit_large_r_exponents(harmonic.radial_solve(0, 1, s, br, grid), 15.0)
        want_rate, want_pow = sign * 1.0, sign * s / 2.0 - 1.0
        fits[br.value] = {"rate": fit["rate"], "power": fit["power"], "expected_rate": want_rate, "expected_power": want_pow}
        t = tol["radial_exponent"]
        exp_ok = exp_ok and abs(fit["rate"] - want_rate) <= t * abs(want_rate) and abs(fit["power"] - want_pow) <= t * max(1.0, abs(want_pow))
    ok = eig < tol["lens"] and exact < tol["radial_exact"] and exp_ok and sign_ok
    return {"s": s, "lens_eigen_residual": eig, "radial_l0_error": exact, "l1_fits": fits, "sign_changes": sign_ok, "pass": ok}, ok


def cmd_build_instanton(run: RunConfig) -> tuple[dict, bool]:
    f = _harmonic_from(run)
    cfg = f.background()
    rng = np.random.default_rng(run.seed)
    n = int(run.numeric["n_points"])
    y = np.asarray(f.green[0].y)
    yx = y[-3:]
    dirs = rng.normal(size=(n, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    X = np.concatenate([rng.uniform(0, 2 * np.pi, (n, 1)), yx + rng.uniform(0.3, 5.0, (n, 1)) * dirs], axis=1)
    if cfg.s:
        X = X[[geometry.string_clearance(cfg, Z[1:]) > 0.2 for Z in X]]
    if f.green[0].space is harmonic.Space.FLAT_R4:
        X = y + rng.uniform(0.3, 5.0, (n, 1)) * rng.normal(size=(n, 4)) / 2.0
    out = gauge.curvature_many(f, cfg, X)
    rows = [
        {"tau": Z[0], "x1": Z[1], "x2": Z[2], "x3": Z[3], "F_norm": float(math.sqrt(n2)), "asd_residual": float(a), "density": float(d)}
        for Z, n2, a, d in zip(X, out["norm2"], out["asd_residual"], out["density"])
    ]
    mx = float(np.max(out["asd_residual"]))
    ok = mx < run.tolerances["asd"]
    return {"asd_residual_max": mx, "rows": rows, "pass": ok}, ok


def cmd_energy(run: RunConfig) -> tuple[dict, bool]:
    f = _harmonic_from(run)
    spec = gauge.QuadratureSpec(R_max=run.numeric["R_max"], eps=run.numeric["eps"])
    e = gauge.energy(f, spec)
    k = len(f.green)
    ok = abs(e["energy_units"] - k) <= run.tolerances["energy"] * k
    return {"energy": e["energy_units"], "tail": e["tail_estimate"], "excision": e["excision_estimate"],
            "quadrature": e["quadrature"], "expected": k, "pass": ok}, ok


def cmd_decay(run: RunConfig) -> tuple[dict, bool]:
    f = _harmonic_from(run)
    R = [10.0, 20.0, 40.0, 80.0]
    rep = gauge.decay_report(f, R, seed=run.seed)
    lo, hi = (0.9, 1.1) if f.infinite else (1.8, 2.2)
    ok = lo <= rep["p_a"] <= hi and rep["rapid_decay"]
    return {"decay_exponents": {"p_a": rep["p_a"], "p_F": rep["p_F"]}, "band": [lo, hi], **rep, "pass": ok}, ok


def _config_sections(run: RunConfig, rng) -> list:
    pts = run.geometry.points if run.geometry.s else rng.normal(size=(2, 3))
    out = []
    for _ in range(int(run.numeric["n_points"])):
        out.append(twistor.RealTwistorSection.from_point(rng.normal(size=3) * 2, pts, rng.uniform(0, 2 * np.pi)))
    return out


def cmd_twistor_lines(run: RunConfig) -> tuple[dict, bool]:
    rng = np.random.default_rng(run.seed)
    fact = tauc = glue = det = 0.0
    for sec in _config_sections(run, rng):
        line = twistor.real_line(sec)
        for _ in range(20):
            a, b = twistor.random_direction(rng)
            fact = max(fact, line.factorization_residual(a, b))
            tauc = max(tauc, twistor.tau_c_defect(line, a, b))
            x, y, z = twistor.surface_point(sec.nuts, a, b, rng)
            g = twistor.theta_and_gluing(line, x, y, z, a, b)
            glue = max(glue, *g.identity_residuals(x, y))
            det = max(det, g.det_residual())
    sec = _config_sections(run, rng)[0]
    _, rem = twistor.theta_exact(sec.zeta, sec.nuts)
    res = {"factorization": fact, "tau_c": tauc, "gluing": glue, "det": det, "exact_remainder": str(rem)}
    cfg = run.geometry
    if cfg.s >= 2:
        res["exceptional_directions"] = len(twistor.exceptional_directions(cfg))
        res["expected_exceptional"] = cfg.s * (cfg.s - 1)
    t = run.tolerances
    ok = fact < t["twistor"] and tauc < t["twistor"] and glue < t["gluing"] and det < t["gluing"] and rem == 0
    if "exceptional_directions" in res:
        ok = ok and res["exceptional_directions"] == res["expected_exceptional"]
    res["pass"] = ok
    return res, ok


def cmd_equivariance(run: RunConfig) -> tuple[dict, bool]:
    rng = np.random.default_rng(run.seed)
    rows = []
    for sec in _config_sections(run, rng)[:20]:
        tau = rng.uniform(0, 2 * np.pi)
        d = twistor.s1_equivariance(sec, tau, n=10, seed=int(rng.integers(2**31)))
        rows.append({"alpha_re": sec.zeta.alpha.real, "alpha_im": sec.zeta.alpha.imag, "beta": sec.zeta.beta,
                     "arg_A": float(np.angle(sec.A)), "tau": tau, **d})
    mx = max(r["deviation"] for r in rows)
    ok = mx < run.tolerances["equivariance"]
    return {"max_deviation": mx, "max_printed_law_deviation": max(r["printed_law_deviation"] for r in rows),
            "rows": rows, "pass": ok}, ok


def cmd_moduli_sample(run: RunConfig) -> tuple[dict, bool]:
    rng = np.random.default_rng(run.seed)
    cfg = run.geometry
    pts = moduli.sample(cfg, int(run.numeric["n_points"]), rng)
    rows = []
    for m in pts:
        rep = moduli.fiber_type(m.y.x, cfg)
        u = np.atleast_1d(moduli.point_chart(m, cfg))
        rows.append({
            "x1": m.y.x[0], "x2": m.y.x[1], "x3": m.y.x[2], "tau": m.y.tau,
            "lambda": m.lam, "fiber": rep.kind.value,
            "chart_u": float(u[0]), "chart_v": float(u[1]) if u.size > 1 else 0.0,
            "reducible": moduli.is_reducible(m, cfg),
        })
    count = moduli.singular_fiber_count(cfg)
    ok = count == cfg.s
    return {"singular_fibers": count, "s": cfg.s, "rows": rows, "pass": ok}, ok


HANDLERS: dict[str, Callable[[RunConfig], tuple[dict, bool]]] = {
    "verify-geometry": cmd_verify_geometry,
    "green-identity": cmd_green_identity,
    "harmonic-suite": cmd_harmonic_suite,
    "build-instanton": cmd_build_instanton,
    "energy": cmd_energy,
    "decay": cmd_decay,
    "twistor-lines": cmd_twistor_lines,
    "equivariance": cmd_equivariance,
    "moduli-sample": cmd_moduli_sample,
}


# ---------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if isinstance(v, bool) or v is None:
        return str(v).lower() if isinstance(v, bool) else ""
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else ("inf" if v > 0 else ("-inf" if v < 0 else "nan"))
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    return v


def _flatten(d: dict, prefix: str = "") -> list[tuple[str, Any]]:
    out = []
    for k, v in d.items():
        if k == "rows":
            continue
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out += _flatten(v, key + ".")
        elif isinstance(v, (list, tuple)):
            out += [(f"{key}[{i}]", x) for i, x in enumerate(v)]
        else:
            out.append((key, v))
    return out


def render(results: dict, meta: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps({"meta": _jsonable(meta), "results": _jsonable(results)}, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    rows = results.get("rows")
    if rows:
        header = list(rows[0].keys())
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(r[k]) for k in header])
    else:
        w.writerow(["key", "value"])
        for k, v in _flatten(results):
            w.writerow([k, _fmt(v)])
    return buf.getvalue()


def run(config: RunConfig, command: str | None = None, out: str | None = None, fmt: str | None = None) -> int:
    command = command or config.command
    if command not in HANDLERS:
        raise ValidationError("command", f"unknown command {command!r}; valid commands: {', '.join(COMMANDS)}")
    fmt = fmt or config.output.get("format", "json")
    results, ok = HANDLERS[command](config)
    meta = {"command": command, "seed": config.seed, "s": config.geometry.s, "c": config.geometry.c,
            "nuts": config.geometry.points.tolist(), "status": "pass" if ok else "fail"}
    text = render(results, meta, fmt)
    path = out or config.output.get("path")
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nutgauge", description="ALF geometry and rescaled instanton checks")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default=None)
    p.add_argument("--seed", type=int, default=None)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        with open(args.config, encoding="utf-8") as fh:
            config = parse_config(fh.read())
        if config.command is not None and config.command != args.command:
            raise ValidationError("command", f"config names {config.command!r} but {args.command!r} was requested")
        if args.seed is not None:
            if args.seed < 0:
                raise ValidationError("seed", "must be a non-negative integer")
            config.numeric["seed"] = args.seed
        return run(config, args.command, args.out, args.format)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NutGaugeError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
