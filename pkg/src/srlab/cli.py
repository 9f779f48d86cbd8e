"""Command-line front end ``sr``.

Every subcommand reads its parameters from flags and, optionally, from a JSON
file given with ``--config``; flags override the file.  Grids are written as
explicit lists (``1,2,3`` or a JSON array) or as ``linspace:a:b:n`` /
``logspace:a:b:n`` (the logspace endpoints are the actual values, not
exponents).  Tables are written as CSV (header row, 17 significant digits,
LF line endings, NaN as an empty cell) or JSON (array of objects, columns in
a fixed order, NaN as null).

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from srlab.errors import ConfigError, NumericalError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

COMMANDS = (
    "geodesic",
    "pendulum",
    "sphere-trace",
    "wavefront",
    "cut-locus",
    "branch",
    "flat-term",
    "conjugate",
    "engel-check",
    "elliptic",
)

MODEL_NAMES = (
    "flat",
    "graded0",
    "contact",
    "heisenberg",
    "tangential-elliptic",
    "tangential-hyperbolic",
    "engel",
    "liu-sussmann",
)


# ---------------------------------------------------------------------------
# grids and tables


def parse_grid(value) -> list:
    """Grid from a number, a list, ``"a,b,c"``, ``"linspace:a:b:n"`` or ``"logspace:a:b:n"``."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return [float(value)]
    if isinstance(value, (list, tuple)):
        try:
            return [float(v) for v in value]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"grid entries must be numbers: {value!r}") from exc
    if not isinstance(value, str):
        raise ConfigError(f"cannot read a grid from {value!r}")
    s = value.strip()
    if s.startswith("[") and s.endswith("]"):
        try:
            return parse_grid(json.loads(s))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad grid list {value!r}") from exc
    if s.startswith(("linspace:", "logspace:")):
        parts = s.split(":")
        if len(parts) != 4:
            raise ConfigError(f"grid {value!r} must read kind:a:b:n")
        try:
            a, b, n = float(parts[1]), float(parts[2]), int(parts[3])
        except ValueError as exc:
            raise ConfigError(f"bad grid {value!r}") from exc
        if n < 1:
            raise ConfigError(f"grid {value!r} needs n >= 1")
        if parts[0] == "linspace":
            return [float(v) for v in np.linspace(a, b, n)]
        if a <= 0.0 or b <= 0.0:
            raise ConfigError(f"logspace endpoints must be positive: {value!r}")
        return [float(v) for v in np.geomspace(a, b, n)]
    try:
        return [float(v) for v in s.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad grid {value!r}") from exc


def parse_sweep(value) -> tuple[str, list]:
    """``"variable:grid"`` (for example ``lambda:logspace:1e2:1e5:30``) or ``{"variable": ..., "grid": ...}``."""
    if isinstance(value, dict):
        if "variable" not in value or "grid" not in value:
            raise ConfigError("a sweep object needs 'variable' and 'grid'")
        var, grid = value["variable"], value["grid"]
    elif isinstance(value, str) and ":" in value:
        var, grid = value.split(":", 1)
    else:
        raise ConfigError(f"cannot read a sweep from {value!r}")
    var = {"lam": "lambda", "theta": "theta0"}.get(var, var)
    if var not in ("theta0", "lambda", "k", "kprime"):
        raise ConfigError(f"sweep variable must be theta0, lambda, k or kprime, got {var!r}")
    return var, parse_grid(grid)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return ""
        return format(v, ".17g")
    s = str(v)
    if any(c in s for c in ',"\n'):
        return '"' + s.replace('"', '""') + '"'
    return s


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return None if math.isnan(v) else v
    return v


def format_table(rows: Sequence[dict], columns: Sequence[str], fmt: str = "csv") -> str:
    """Serialize ``rows`` with the column order ``columns``."""
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(",".join(columns) + "\n")
        for row in rows:
            buf.write(",".join(_cell(row.get(c)) for c in columns) + "\n")
        return buf.getvalue()
    if fmt == "json":
        data = [{c: _json_value(row.get(c)) for c in columns} for row in rows]
        return json.dumps(data, indent=1, allow_nan=False) + "\n"
    raise ConfigError(f"unknown format {fmt!r}")


def write_table(rows: Sequence[dict], columns: Sequence[str], path: Optional[str], fmt: str = "csv") -> None:
    """Write a table to ``path`` (``None`` or ``"-"`` for standard output)."""
    text = format_table(rows, columns, fmt)
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _parse_cell(s: str):
    if s == "":
        return math.nan
    if s in ("true", "false"):
        return s == "true"
    try:
        return float(s)
    except ValueError:
        return s


def read_table(path: str) -> tuple[list, list]:
    """Read a CSV or JSON table written by :func:`write_table`; returns ``(columns, rows)``."""
    import csv

    with open(path, "r", encoding="utf-8", newline="") as fh:
        text = fh.read()
    if path.endswith(".json"):
        data = json.loads(text)
        cols = list(data[0].keys()) if data else []
        rows = [{k: (math.nan if v is None else v) for k, v in d.items()} for d in data]
        return cols, rows
    reader = csv.reader(io.StringIO(text))
    cols = next(reader)
    rows = [{c: _parse_cell(v) for c, v in zip(cols, rec)} for rec in reader]
    return cols, rows


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    """A fully resolved run: command, parameters, output path and format."""

    command: str
    params: dict = field(default_factory=dict)
    out: Optional[str] = None
    fmt: str = "csv"

    def get(self, key: str, default=None):
        return self.params.get(key, default)

    def number(self, key: str, default=None) -> float:
        v = self.params.get(key, default)
        if v is None:
            raise ConfigError(f"missing required parameter '{key}'")
        try:
            return float(v)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"parameter '{key}' must be a number, got {v!r}") from exc

    def integer(self, key: str, default=None) -> int:
        v = self.number(key, default)
        if v != int(v):
            raise ConfigError(f"parameter '{key}' must be an integer, got {v!r}")
        return int(v)

    def grid(self, key: str, default=None) -> list:
        v = self.params.get(key, default)
        if v is None:
            raise ConfigError(f"missing required grid '{key}'")
        return parse_grid(v)


def _normalize_keys(d: dict) -> dict:
    return {str(k).replace("-", "_"): v for k, v in d.items()}


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path}: top level must be an object")
    return _normalize_keys(data)


def build_model(cfg: RunConfig):
    from srlab.models import ModelSpec

    name = cfg.get("model", "flat")
    g = lambda k: cfg.number(k, 0.0)
    if name == "flat":
        return ModelSpec.martinet_flat()
    if name == "graded0":
        return ModelSpec.martinet_graded0(g("alpha"), g("beta"), g("gamma"))
    if name == "contact":
        return ModelSpec.contact_graded1(g("a"), g("b"), g("c"))
    if name == "heisenberg":
        return ModelSpec.heisenberg()
    if name == "tangential-elliptic":
        return ModelSpec.tangential_elliptic(g("eps"), g("m"))
    if name == "tangential-hyperbolic":
        return ModelSpec.tangential_hyperbolic(g("eps"), g("m"))
    if name == "engel":
        return ModelSpec.engel_flat()
    if name == "liu-sussmann":
        return ModelSpec.liu_sussmann(g("eps"))
    raise ConfigError(f"unknown model {name!r}; choose from {', '.join(MODEL_NAMES)}")


# ---------------------------------------------------------------------------
# commands: each returns (columns, rows, summary)


def _lam(cfg: RunConfig) -> float:
    return cfg.number("lambda")


def cmd_geodesic(cfg: RunConfig):
    from srlab.flow import integrate
    from srlab.models import cylinder_lift

    spec = build_model(cfg)
    p3 = cfg.get("p3")
    s0 = cylinder_lift(spec, cfg.number("theta0"), _lam(cfg), None if p3 is None else float(p3))
    t_end = cfg.number("t_end", 1.0)
    tr = integrate(spec, s0, t_end, tol=cfg.number("tol", 1e-10))
    ts = parse_grid(cfg.get("t")) if cfg.get("t") is not None else list(np.linspace(0.0, t_end, cfg.integer("samples", 101)))
    names = ["x", "y", "z", "w"][: spec.dim]
    pn = [f"P{i + 1}" for i in range(s0.P.size)]
    cols = ["t"] + names + pn + ["H"]
    rows = []
    for t in ts:
        v = tr(t)
        row = {"t": t, "H": 0.5 * float(v[spec.dim] ** 2 + v[spec.dim + 1] ** 2)}
        row.update({c: float(x) for c, x in zip(names + pn, v)})
        rows.append(row)
    return cols, rows, f"geodesic: {len(rows)} samples, steps={tr.diagnostics['steps']}, energy drift={tr.energy_drift:.3e}"


def cmd_pendulum(cfg: RunConfig):
    from srlab.flow import integrate, pendulum_project
    from srlab.models import cylinder_lift

    spec = build_model(cfg)
    if not spec.is_martinet:
        raise ConfigError("pendulum needs a Martinet model (flat or graded0)")
    s0 = cylinder_lift(spec, cfg.number("theta0"), _lam(cfg))
    t_end = cfg.number("t_end", 5.0)
    tr = integrate(spec, s0, t_end, tol=cfg.number("tol", 1e-11))
    ts = np.linspace(0.0, t_end, cfg.integer("samples", 201))
    pp = pendulum_project(spec, tr, ts)
    cols = ["t", "s", "theta", "dtheta_ds", "energy", "y"]
    rows = [
        {"t": pp.t[i], "s": pp.s[i], "theta": pp.theta[i], "dtheta_ds": pp.dtheta_ds[i], "energy": pp.energy[i], "y": pp.y[i]}
        for i in range(len(ts))
    ]
    drift = float(np.nanmax(np.abs(pp.energy - pp.energy[0]))) if np.all(np.isfinite(pp.energy)) else math.nan
    return cols, rows, f"pendulum: {len(rows)} samples, energy drift={tr.energy_drift:.3e}, first-integral drift={drift:.3e}"


def _point_row(p, **extra):
    row = {"theta0": p.theta0, "lambda": p.lam, "n": p.n, "t": p.t, "x": p.x, "z": p.z, "X": p.X, "Z": p.Z, "tag": p.tag, "status": "ok"}
    row.update(extra)
    return row


def cmd_sphere_trace(cfg: RunConfig):
    from srlab.sphere import Sweep, sphere_trace_flat, sphere_trace_numeric

    r = cfg.number("radius", 1.0)
    if r <= 0.0:
        raise ConfigError("radius must be positive")
    if cfg.get("k") is not None:
        if cfg.get("model", "flat") != "flat":
            raise ConfigError("the closed-form trace (--k) is defined for the flat model")
        ks = cfg.grid("k")
        curve = sphere_trace_flat(r, cfg.integer("i", 1), ks)
        cols = ["k", "x", "z", "X", "Z"]
        rows = [{"k": k, "x": p.x, "z": p.z, "X": p.X, "Z": p.Z} for k, p in zip(ks, curve.points)]
        return cols, rows, f"sphere-trace: closed-form C_{cfg.integer('i', 1)} with {len(rows)} points"
    spec = build_model(cfg)
    var, grid = parse_sweep(cfg.get("sweep")) if cfg.get("sweep") is not None else (None, None)
    if var not in ("theta0", "lambda"):
        raise ConfigError("sphere-trace needs --k (flat closed form) or --sweep theta0:... / lambda:...")
    sweep = Sweep(var, grid, cfg.integer("sign", 1))
    curve = sphere_trace_numeric(spec, r, cfg.integer("n", 1), sweep, tol=cfg.number("tol", 1e-12))
    key = "theta0" if var == "theta0" else "lam"
    found = {getattr(p, key): p for p in curve.points}
    skipped = dict(curve.skipped)
    cols = ["grid", "theta0", "lambda", "n", "t", "x", "z", "X", "Z", "tag", "status"]
    rows = []
    for g in grid:
        p = _match(found, g)
        if p is not None:
            rows.append(_point_row(p, grid=g))
        else:
            rows.append({"grid": g, "status": skipped.get(g, "skipped")})
    return cols, rows, f"sphere-trace: {len(curve.points)} of {len(grid)} points, tag={curve.tag}"


def _match(found: dict, g: float):
    for k, p in found.items():
        if k == g or (abs(k - g) <= 1e-15 * max(1.0, abs(g))):
            return p
    return None


def cmd_wavefront(cfg: RunConfig):
    from srlab.sphere import wavefront_trace

    spec = build_model(cfg)
    r = cfg.number("radius", 1.0)
    mode = cfg.get("mode", "slice_y0")
    thetas = cfg.grid("theta")
    lams = cfg.grid("lambda") if mode == "cloud3d" else []
    pts = wavefront_trace(spec, r, thetas, lams, mode=mode, n_max=cfg.integer("n_max", 2), tol=cfg.number("tol", 1e-12))
    cols = ["x", "y", "z", "theta0", "lambda", "n", "abnormal", "flag"]
    rows = [{"x": p.x, "y": p.y, "z": p.z, "theta0": p.theta0, "lambda": p.lam, "n": p.n, "abnormal": p.abnormal, "flag": p.flag} for p in pts]
    nflag = sum(1 for p in pts if p.flag)
    return cols, rows, f"wavefront: {len(rows)} points ({mode}), {nflag} flagged"


def cmd_cut_locus(cfg: RunConfig):
    from srlab.sphere import cut_locus_flat

    r = cfg.number("radius", 1.0)
    ks = cfg.grid("k")
    plus, minus = cut_locus_flat(r, ks)
    cols = ["curve", "k", "x", "z", "theta0_a", "lambda_a", "theta0_b", "lambda_b"]
    rows = []
    for sign, curve in ((1, plus), (-1, minus)):
        for k, p in zip(ks, curve.points):
            (tb, lb), = p.alternates
            rows.append({"curve": sign, "k": k, "x": p.x, "z": p.z, "theta0_a": p.theta0, "lambda_a": p.lam, "theta0_b": tb, "lambda_b": lb})
    return cols, rows, f"cut-locus: {len(rows)} points on C1 and -C1"


def cmd_branch(cfg: RunConfig):
    from srlab.asymptotics import branch_law, fit_contact
    from srlab.sphere import d1_branch, saddle_branch, sphere_trace_flat

    which = cfg.get("which")
    if which not in ("D1", "C1", "C2", "D2", "C1bar"):
        raise ConfigError("--which must be one of D1, C1, C2, D2, C1bar")
    r = cfg.number("radius", 0.5)
    alpha, gamma = cfg.number("alpha", 0.0), cfg.number("gamma", 0.0)
    if which == "C1bar":
        var, grid = parse_sweep(cfg.get("sweep", "k:logspace:1e-3:5e-2:12"))
        if var != "k":
            raise ConfigError("the C1bar branch is swept over k")
        curve = sphere_trace_flat(r, 1, grid)
    else:
        if cfg.get("model") is None:
            cfg.params["model"] = "graded0"
        spec = build_model(cfg)
        var, grid = parse_sweep(cfg.get("sweep"))
        if var != "lambda":
            raise ConfigError(f"the {which} branch is swept over lambda")
        if which == "D1":
            curve = d1_branch(spec, r, grid)
        else:
            curve = saddle_branch(spec, r, which, grid, side=cfg.integer("side", -1))
    cols = ["grid", "theta0", "lambda", "n", "t", "x", "z", "X", "Z", "tag", "status"]
    if which == "C1bar":
        rows = [_point_row(p, grid=g) for g, p in zip(grid, curve.points)]
    else:
        rows = [_point_row(p, grid=p.lam) for p in curve.points]
    rows += [{"grid": g, "status": reason} for g, reason in curve.skipped]
    # restore grid order (skipped values are collected separately)
    order = {g: i for i, g in enumerate(grid)}
    rows.sort(key=lambda row: order.get(row["grid"], len(grid)))
    summary = f"branch {which}: {len(curve.points)} of {len(grid)} points"
    if cfg.get("fit") is not None:
        p = cfg.integer("fit")
        raw = which == "C1bar"
        fit = fit_contact(curve.points, p, raw=raw, r=r if raw else None)
        law = branch_law(which, r, alpha, gamma)
        target = law.coeffs.get(p, math.nan)
        summary += f", fitted coefficient={fit.coefficient:.6g} (exponent {p}, residual {fit.residual:.3g}), law coefficient={target:.6g}"
    return cols, rows, summary


def cmd_flat_term(cfg: RunConfig):
    from srlab.asymptotics import flat_term_ratio

    pts = flat_term_ratio(cfg.number("radius", 1.0), cfg.grid("kprime"), decay=cfg.number("decay", 1.0))
    cols = ["kprime", "X", "Z", "delta", "ratio", "lead_relation", "error", "flagged"]
    rows = [{c: getattr(p, c) for c in cols} for p in pts]
    good = [p for p in pts if not p.flagged]
    tail = f", ratio at smallest X={min(good, key=lambda p: p.X).ratio:.6g}" if good else ""
    return cols, rows, f"flat-term: {len(pts)} points, {len(pts) - len(good)} flagged{tail}"


def cmd_conjugate(cfg: RunConfig):
    from srlab.variational import conjugate_times, fd_conjugate_times

    spec = build_model(cfg)
    th, lam, t_max = cfg.number("theta0"), _lam(cfg), cfg.number("t_max")
    p3 = cfg.get("p3")
    res = conjugate_times(spec, th, lam, t_max, None if p3 is None else float(p3), tol=cfg.number("tol", 1e-11))
    oracle = fd_conjugate_times(spec, th, lam, t_max, None if p3 is None else float(p3)) if cfg.get("oracle", True) else []
    cols = ["index", "t_jacobi", "t_oracle", "difference"]
    rows = []
    for i, t in enumerate(res.times):
        to = min(oracle, key=lambda s: abs(s - t)) if oracle else math.nan
        rows.append({"index": i + 1, "t_jacobi": t, "t_oracle": to, "difference": abs(t - to) if oracle else math.nan})
    first = f"{res.times[0]:.10g}" if res.times else "none"
    return cols, rows, f"conjugate: {len(res.times)} conjugate times in (0, {t_max:g}], first={first}"


def cmd_engel_check(cfg: RunConfig):
    from srlab.engel import pendulum_residual, reduction_check

    thetas = cfg.grid("theta0")
    lams = cfg.grid("lambda")
    ts = cfg.grid("t", "linspace:0:5:51")
    cols = ["theta0", "lambda", "dev_heisenberg", "dev_martinet", "casimir_drift", "h_drift", "pendulum_residual"]
    rows = []
    for th in thetas:
        for lam in lams:
            rep = reduction_check(th, lam, ts, tol=cfg.number("tol", 1e-12))
            res = pendulum_residual(th, 0.3, lam) if math.sin(th) != 0.0 else math.nan
            rows.append({
                "theta0": th, "lambda": lam, "dev_heisenberg": rep.max_dev_heisenberg, "dev_martinet": rep.max_dev_martinet,
                "casimir_drift": max(rep.drift_heisenberg.casimir_c, rep.drift_martinet.casimir_c),
                "h_drift": max(rep.drift_heisenberg.h, rep.drift_martinet.h), "pendulum_residual": res,
            })
    worst = max(max(r["dev_heisenberg"], r["dev_martinet"]) for r in rows) if rows else math.nan
    return cols, rows, f"engel-check: {len(rows)} cases, max reduction deviation={worst:.3e}"


def cmd_elliptic(cfg: RunConfig):
    from srlab.elliptic import Modulus, complete_integrals, jacobi_amplitude, jacobi_epsilon, jacobi_functions, jacobi_zeta

    if cfg.get("u") is not None:
        k = cfg.number("k")
        mod = Modulus.from_k(k)
        us = cfg.grid("u")
        cols = ["u", "sn", "cn", "dn", "am", "zeta", "epsilon"]
        rows = []
        for u in us:
            sn, cn, dn = jacobi_functions(u, mod)
            rows.append({"u": u, "sn": sn, "cn": cn, "dn": dn, "am": jacobi_amplitude(u, mod), "zeta": jacobi_zeta(u, mod), "epsilon": jacobi_epsilon(u, mod)})
        return cols, rows, f"elliptic: Jacobi functions at {len(rows)} arguments, k={k:g}"
    if cfg.get("kprime") is not None:
        mods = [Modulus.from_kprime(v) for v in cfg.grid("kprime")]
    else:
        mods = [Modulus.from_k(v) for v in cfg.grid("k")]
    cols = ["k", "kprime", "K", "E"]
    rows = []
    for m in mods:
        pair = complete_integrals(m)
        rows.append({"k": m.k, "kprime": m.kprime, "K": pair.K, "E": pair.E})
    return cols, rows, f"elliptic: K and E at {len(rows)} moduli"


HANDLERS = {
    "geodesic": cmd_geodesic,
    "pendulum": cmd_pendulum,
    "sphere-trace": cmd_sphere_trace,
    "wavefront": cmd_wavefront,
    "cut-locus": cmd_cut_locus,
    "branch": cmd_branch,
    "flat-term": cmd_flat_term,
    "conjugate": cmd_conjugate,
    "engel-check": cmd_engel_check,
    "elliptic": cmd_elliptic,
}

# flags accepted by every subcommand: (name, type, help)
_COMMON = [
    ("model", str, "model family: " + ", ".join(MODEL_NAMES)),
    ("alpha", float, "Martinet alpha"),
    ("beta", float, "Martinet beta"),
    ("gamma", float, "Martinet gamma"),
    ("a", float, "contact a"),
    ("b", float, "contact b"),
    ("c", float, "contact c"),
    ("eps", float, "tangential or Liu-Sussmann epsilon"),
    ("m", float, "tangential m"),
    ("tol", float, "integration tolerance"),
    ("radius", float, "radius r"),
]

_SPECIFIC = {
    "geodesic": [("theta0", float, ""), ("lambda", float, ""), ("p3", float, "Engel P3(0)"), ("t-end", float, ""), ("samples", int, ""), ("t", str, "time grid")],
    "pendulum": [("theta0", float, ""), ("lambda", float, ""), ("t-end", float, ""), ("samples", int, "")],
    "sphere-trace": [("i", int, "curve index (closed form)"), ("k", str, "k grid (closed form)"), ("n", int, "hit index"), ("sweep", str, "theta0:GRID or lambda:GRID"), ("sign", int, "sign of the solved parameter")],
    "wavefront": [("theta", str, "theta0 grid"), ("lambda", str, "lambda grid (cloud3d)"), ("mode", str, "slice_y0 or cloud3d"), ("n-max", int, "")],
    "cut-locus": [("k", str, "k grid")],
    "branch": [("which", str, "D1, C1, C2, D2 or C1bar"), ("sweep", str, "lambda:GRID (k:GRID for C1bar)"), ("fit", int, "fit exponent"), ("side", int, "side of theta0")],
    "flat-term": [("kprime", str, "k' grid"), ("decay", float, "exponent factor in exp(-decay/X)")],
    "conjugate": [("theta0", float, ""), ("lambda", float, ""), ("p3", float, ""), ("t-max", float, ""), ("oracle", int, "1 to run the finite-difference oracle")],
    "engel-check": [("theta0", str, "theta0 grid"), ("lambda", str, "lambda grid"), ("t", str, "time grid in [0, 5]")],
    "elliptic": [("k", str, "modulus grid"), ("kprime", str, "complementary modulus grid"), ("u", str, "argument grid (needs a single k)")],
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sr", description="Sub-Riemannian Martinet-case numerical laboratory.")
    parser.add_argument("--config", help="JSON run configuration; flags override it")
    sub = parser.add_subparsers(dest="command")
    for name in COMMANDS:
        sp = sub.add_parser(name, argument_default=argparse.SUPPRESS)
        sp.add_argument("--config", help="JSON run configuration; flags override it")
        sp.add_argument("--out", help="output file (.csv or .json); standard output if omitted")
        sp.add_argument("--format", choices=("csv", "json"), help="output format (default from the extension)")
        for flag, typ, hlp in _COMMON + _SPECIFIC[name]:
            sp.add_argument(f"--{flag}", type=typ, help=hlp)
    return parser


def resolve(argv: Sequence[str]) -> RunConfig:
    threads = os.environ.get("SR_THREADS")
    if threads is not None and threads.strip() and not (threads.strip().isdigit() and int(threads) >= 1):
        raise ConfigError(f"SR_THREADS must be a positive integer, got {threads!r}")
    parser = build_parser()
    ns = parser.parse_args(list(argv))
    flags = _normalize_keys({k: v for k, v in vars(ns).items() if v is not None})
    file_cfg = {}
    cfg_path = flags.pop("config", None)
    if cfg_path is not None:
        try:
            file_cfg = load_config(cfg_path)
        except OSError as exc:
            raise ConfigError(f"cannot read config {cfg_path}: {exc}") from exc
    command = flags.pop("command", None) or file_cfg.pop("command", None)
    file_cfg.pop("command", None)
    if command is None:
        raise ConfigError("no command given")
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    allowed = {f.replace("-", "_") for f, _, _ in _COMMON + _SPECIFIC[command]} | {"out", "format"}
    unknown = sorted(set(file_cfg) - allowed)
    if unknown:
        raise ConfigError(f"unknown keys for {command}: {', '.join(unknown)}")
    params = dict(file_cfg)
    params.update(flags)
    out = params.pop("out", None)
    fmt = params.pop("format", None)
    if fmt is None:
        fmt = "json" if out is not None and str(out).endswith(".json") else "csv"
    return RunConfig(command=command, params=params, out=out, fmt=fmt)


def run(cfg: RunConfig) -> str:
    cols, rows, summary = HANDLERS[cfg.command](cfg)
    write_table(rows, cols, cfg.out, cfg.fmt)
    return summary


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = resolve(argv)
        summary = run(cfg)
    except ConfigError as exc:
        print(f"sr: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"sr: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"sr: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    stream = sys.stderr if cfg.out in (None, "-") else sys.stdout
    print(summary, file=stream)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
