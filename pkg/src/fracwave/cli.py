"""Command-line front end: ``fracwave {solve,ml,verify,oscillation}``.

Configuration is a single JSON object, or equivalently ``key = value`` lines
whose values are JSON literals and whose keys may be dotted
(``grid.dt = 1e-3``).  ``#`` starts a comment in the key-value form.
Defaults are in :data:`DEFAULTS`.  The output directory is taken from
``--out``, then the ``FRACWAVE_OUT`` environment variable, then the config.

Every CSV written starts with ``# config_sha256=<hash>`` followed by a
header row.  The hash covers the resolved config except the output
directory.  Exit status: 0 success, 1 some verification failed, 2 usage or
config error, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import math
import os
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import ConfigError, FracwaveError
from .fraccalc import TimeGrid
from .mlfunc import ml_two
from .oscillation import elongated_oscillation, fit_decay_exponent, oscillation_decay_experiment
from .spectral import (
    BoxDomain,
    InitialData,
    solve_with_ic,
    solve_zero_ic,
    write_field_binary,
    write_field_csv,
)
from .verify import (
    EXPERIMENTS,
    SuiteSettings,
    experiment_rng,
    random_coefficient,
    random_forcing,
    run_suite,
    write_reports_csv,
    write_timings_csv,
)
from .weights import Weight, ap_products, dyadic_plan

__all__ = ["DEFAULTS", "SUBCOMMANDS", "RunConfig", "parse_config", "dispatch", "main"]

SUBCOMMANDS = ("solve", "ml", "verify", "oscillation")
OUT_ENV = "FRACWAVE_OUT"

DEFAULTS: dict[str, Any] = {
    "subcommand": None,
    "alpha": 1.5,
    "p": 2.0,
    "q": 2.0,
    "mu": 0.0,
    "seed": 0,
    "out": "fracwave-out",
    "domain": {"lower": [0.0], "upper": [1.0], "a": 1.0},
    "grid": {"T": 1.0, "dt": 1e-3, "n_points": 64, "n_modes": 8},
    "weight": {"kind": "power", "mu": None, "table": None},
    "forcing": {"kind": "eigen"},
    "format": "csv",
    "ml": {"beta": 1.0, "z": None, "z_range": [-10.0, 0.0, 101]},
    "oscillation": {"kappas": [0.25, 0.125, 0.0625], "r": 0.5, "t0": None, "x0": None,
                    "p0": 1.5, "p1": None, "heights": [1, 2, 4, 8]},
    "verify": {"experiments": None, "alphas": [1.25, 1.5, 1.75], "n_samples": 100,
               "n_fields": 100, "timings": False},
}

_FORCINGS = ("eigen", "manufactured", "random", "zero")
_FORMATS = ("csv", "binary", "both")
_WEIGHT_KINDS = ("power", "constant", "tabulated")


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration; ``values`` is the resolved nested dict."""

    values: dict

    def __getitem__(self, key: str):
        return self.values[key]

    @property
    def subcommand(self) -> str | None:
        return self.values["subcommand"]

    @property
    def out(self) -> Path:
        return Path(self.values["out"])

    def digest(self) -> str:
        data = {k: v for k, v in self.values.items() if k != "out"}
        text = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def with_overrides(self, **changes) -> "RunConfig":
        values = copy.deepcopy(self.values)
        values.update({k: v for k, v in changes.items() if v is not None})
        return RunConfig(values)


# ------------------------------------------------------------- parsing


def _line_of(text: str, key: str) -> int | None:
    leaf = key.split(".")[-1]
    pattern = re.compile(rf'(^|[\s{{,"]){re.escape(leaf)}"?\s*[:=]')
    for i, line in enumerate(text.splitlines(), start=1):
        if pattern.search(line):
            return i
    return None


def _where(text: str, key: str) -> str:
    line = _line_of(text, key)
    return f"line {line}: " if line else ""


def _parse_kv(text: str) -> tuple[dict, list[str]]:
    data: dict = {}
    errors: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value'")
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        if not re.fullmatch(r"[A-Za-z_][\w]*(\.[A-Za-z_]\w*)*", key):
            errors.append(f"line {lineno}: invalid key '{key}'")
            continue
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError:
            parsed = value
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                errors.append(f"line {lineno}: '{part}' is not a section")
                break
        else:
            node[parts[-1]] = parsed
    return data, errors


def _merge(base: dict, update: dict, prefix: str, text: str, errors: list[str]) -> dict:
    out = copy.deepcopy(base)
    for key, value in update.items():
        name = f"{prefix}{key}"
        if key not in base:
            errors.append(f"{_where(text, name)}unknown key '{name}'")
        elif isinstance(base[key], dict):
            if not isinstance(value, dict):
                errors.append(f"{_where(text, name)}'{name}' must be an object")
            else:
                out[key] = _merge(base[key], value, name + ".", text, errors)
        else:
            out[key] = value
    return out


def _number(v, name, text, errors, positive=False, integer=False):
    ok = isinstance(v, (int, float)) and not isinstance(v, bool)
    if ok and integer:
        ok = float(v).is_integer()
    if ok and positive:
        ok = v > 0
    if not ok:
        kind = "positive " if positive else ""
        kind += "integer" if integer else "number"
        errors.append(f"{_where(text, name)}'{name}' must be a {kind}, got {v!r}")
    return ok


def _validate(cfg: dict, text: str) -> list[str]:
    errors: list[str] = []
    num = lambda v, name, **kw: _number(v, name, text, errors, **kw)  # noqa: E731
    if cfg["subcommand"] is not None and cfg["subcommand"] not in SUBCOMMANDS:
        errors.append(f"{_where(text, 'subcommand')}unknown subcommand '{cfg['subcommand']}'")
    if num(cfg["alpha"], "alpha") and not 1 < cfg["alpha"] < 2:
        errors.append(f"{_where(text, 'alpha')}alpha = {cfg['alpha']} violates the standing hypothesis "
                      "that the order lies in the open interval (1, 2)")
    p_ok = num(cfg["p"], "p") and cfg["p"] > 1
    if not p_ok:
        errors.append(f"{_where(text, 'p')}'p' must exceed 1")
    if num(cfg["q"], "q") and not cfg["q"] > 1:
        errors.append(f"{_where(text, 'q')}'q' must exceed 1")
    for name, mu in (("mu", cfg["mu"]), ("weight.mu", cfg["weight"]["mu"])):
        if mu is None and name == "weight.mu":
            continue
        if num(mu, name) and p_ok and not -1 < mu < cfg["p"] - 1:
            errors.append(f"{_where(text, name)}{name} = {mu} is not admissible: the power weight "
                          f"|t|^mu is A_p only for mu in the open interval (-1, p - 1) = (-1, {cfg['p'] - 1:g})")
    if not isinstance(cfg["seed"], int) or isinstance(cfg["seed"], bool) or not 0 <= cfg["seed"] < 2**64:
        errors.append(f"{_where(text, 'seed')}'seed' must be an unsigned 64-bit integer")
    if not isinstance(cfg["out"], str) or not cfg["out"]:
        errors.append(f"{_where(text, 'out')}'out' must be a non-empty path")

    dom = cfg["domain"]
    lo, hi = dom["lower"], dom["upper"]
    if not (isinstance(lo, list) and isinstance(hi, list) and len(lo) == len(hi) >= 1
            and all(isinstance(v, (int, float)) for v in lo + hi)):
        errors.append(f"{_where(text, 'domain.lower')}'domain.lower' and 'domain.upper' must be equal-length number lists")
    elif any(b <= a for a, b in zip(lo, hi)):
        errors.append(f"{_where(text, 'domain.upper')}domain upper corner must exceed lower corner on every axis")
    num(dom["a"], "domain.a", positive=True)

    g = cfg["grid"]
    num(g["T"], "grid.T", positive=True)
    num(g["dt"], "grid.dt", positive=True)
    if num(g["n_points"], "grid.n_points", positive=True, integer=True) and g["n_points"] < 4:
        errors.append(f"{_where(text, 'grid.n_points')}'grid.n_points' must be at least 4")
    if num(g["n_modes"], "grid.n_modes", positive=True, integer=True) \
            and isinstance(g["n_points"], int) and g["n_modes"] >= g["n_points"]:
        errors.append(f"{_where(text, 'grid.n_modes')}'grid.n_modes' must be below 'grid.n_points'")

    w = cfg["weight"]
    if w["kind"] not in _WEIGHT_KINDS:
        errors.append(f"{_where(text, 'weight.kind')}'weight.kind' must be one of {', '.join(_WEIGHT_KINDS)}")
    elif w["kind"] == "tabulated" and not isinstance(w["table"], str):
        errors.append(f"{_where(text, 'weight.table')}tabulated weight needs 'weight.table' (CSV path)")

    if cfg["forcing"]["kind"] not in _FORCINGS:
        errors.append(f"{_where(text, 'forcing.kind')}'forcing.kind' must be one of {', '.join(_FORCINGS)}")
    if cfg["format"] not in _FORMATS:
        errors.append(f"{_where(text, 'format')}'format' must be one of {', '.join(_FORMATS)}")

    ml = cfg["ml"]
    num(ml["beta"], "ml.beta", positive=True)
    if ml["z"] is not None and not (isinstance(ml["z"], list) and all(isinstance(v, (int, float)) for v in ml["z"])):
        errors.append(f"{_where(text, 'ml.z')}'ml.z' must be a list of numbers")
    zr = ml["z_range"]
    if not (isinstance(zr, list) and len(zr) == 3 and isinstance(zr[2], int) and zr[2] >= 1):
        errors.append(f"{_where(text, 'ml.z_range')}'ml.z_range' must be [start, stop, count]")

    osc = cfg["oscillation"]
    if not (isinstance(osc["kappas"], list) and osc["kappas"]
            and all(isinstance(k, (int, float)) and 0 < k <= 0.25 for k in osc["kappas"])):
        errors.append(f"{_where(text, 'oscillation.kappas')}'oscillation.kappas' must be numbers in (0, 1/4]")
    num(osc["r"], "oscillation.r", positive=True)
    if num(osc["p0"], "oscillation.p0") and not 1 < osc["p0"] < 2:
        errors.append(f"{_where(text, 'oscillation.p0')}'oscillation.p0' must lie in (1, 2)")

    ver = cfg["verify"]
    if ver["experiments"] is not None:
        if not isinstance(ver["experiments"], list):
            errors.append(f"{_where(text, 'verify.experiments')}'verify.experiments' must be a list of ids")
        else:
            for name in ver["experiments"]:
                if name not in EXPERIMENTS:
                    errors.append(f"{_where(text, 'verify.experiments')}unknown experiment id '{name}'")
    if not (isinstance(ver["alphas"], list) and ver["alphas"]
            and all(isinstance(a, (int, float)) and 1 < a < 2 for a in ver["alphas"])):
        errors.append(f"{_where(text, 'verify.alphas')}'verify.alphas' must be orders in (1, 2)")
    num(ver["n_samples"], "verify.n_samples", positive=True, integer=True)
    num(ver["n_fields"], "verify.n_fields", positive=True, integer=True)
    return errors


def parse_config(text: str) -> RunConfig:
    """Parse and validate config text; raises :class:`ConfigError` with every problem found."""
    stripped = text.strip()
    if not stripped:
        data, errors = {}, []
    elif stripped.startswith("{"):
        try:
            data = json.loads(text)
            errors = []
        except json.JSONDecodeError as exc:
            raise ConfigError([f"line {exc.lineno}: {exc.msg}"]) from None
    else:
        data, errors = _parse_kv(text)
    if not isinstance(data, dict):
        raise ConfigError(["line 1: config must be an object"])
    merged = _merge(DEFAULTS, data, "", text, errors)
    if not errors:
        errors = _validate(merged, text)
    if errors:
        raise ConfigError(errors)
    return RunConfig(merged)


# ------------------------------------------------------------- subcommands


def _open_csv(path: Path, digest: str, header: Sequence[str]):
    fh = path.open("w", newline="")
    fh.write(f"# config_sha256={digest}\n")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    return fh, writer


def _domain(cfg: RunConfig) -> BoxDomain:
    d = cfg["domain"]
    return BoxDomain(tuple(d["lower"]), tuple(d["upper"]), d["a"])


def _time_grid(cfg: RunConfig) -> TimeGrid:
    return TimeGrid.from_step(cfg["grid"]["T"], cfg["grid"]["dt"])


def _forcing(cfg: RunConfig, domain: BoxDomain):
    kind = cfg["forcing"]["kind"]
    lo, length = np.asarray(domain.lower), domain.lengths
    alpha = cfg["alpha"]

    def sines(x):
        return np.prod([np.sin(np.pi * (xi - lo[i]) / length[i]) for i, xi in enumerate(x)], axis=0)

    if kind == "eigen":
        return lambda t, *x: sines(x) + 0.0 * t
    if kind == "manufactured":
        lam = float(domain.eigenvalues(1).ravel()[0])
        c = 2.0 / math.gamma(3.0 - alpha)
        return lambda t, *x: (c * t ** (2.0 - alpha) + lam * t**2) * sines(x)
    if kind == "random":
        f1, _ = random_forcing(experiment_rng(cfg["seed"], "solve"), T=cfg["grid"]["T"])

        def rand(t, *x):
            return f1(t, (x[0] - lo[0]) / length[0]) * (sines(x[1:]) if len(x) > 1 else 1.0)
        return rand
    return None


def _run_solve(cfg: RunConfig, out: Path) -> int:
    domain = _domain(cfg)
    grid = _time_grid(cfg)
    g = cfg["grid"]
    f = _forcing(cfg, domain)
    if f is None:
        data = InitialData(u0=lambda *x: np.prod([np.sin(np.pi * (xi - lo) / ln)
                                                  for xi, lo, ln in zip(x, domain.lower, domain.lengths)], axis=0))
        u = solve_with_ic(cfg["alpha"], data, domain, g["n_modes"], grid, n_points=g["n_points"])
    else:
        u = solve_zero_ic(cfg["alpha"], f, domain, g["n_modes"], grid, n_points=g["n_points"])
    if cfg["format"] in ("csv", "both"):
        write_field_csv(u, out / "field.csv", header_comment=f"config_sha256={cfg.digest()}")
    if cfg["format"] in ("binary", "both"):
        write_field_binary(u, out / "field.bin")
    return 0


def _run_ml(cfg: RunConfig, out: Path) -> int:
    ml = cfg["ml"]
    z = np.asarray(ml["z"], dtype=float) if ml["z"] is not None else np.linspace(*ml["z_range"][:2], ml["z_range"][2])
    values = np.atleast_1d(ml_two(cfg["alpha"], ml["beta"], z))
    fh, writer = _open_csv(out / "ml.csv", cfg.digest(), ["alpha", "beta", "z", "value"])
    with fh:
        for zi, vi in zip(z, values):
            writer.writerow([repr(float(cfg["alpha"])), repr(float(ml["beta"])), repr(float(zi)), repr(float(vi))])
    return 0


def _weight(cfg: RunConfig) -> Weight:
    w = cfg["weight"]
    if w["kind"] == "constant":
        return Weight.constant()
    if w["kind"] == "tabulated":
        table = np.loadtxt(w["table"], delimiter=",", comments="#", ndmin=2)
        return Weight.tabulated(table[:, 0], table[:, 1])
    return Weight.power(cfg["mu"] if w["mu"] is None else w["mu"])


def _run_verify(cfg: RunConfig, out: Path) -> int:
    ver = cfg["verify"]
    settings = SuiteSettings(alphas=tuple(ver["alphas"]), alpha=cfg["alpha"], p=cfg["p"], q=cfg["q"],
                             mu=cfg["mu"], dt=cfg["grid"]["dt"], n_samples=ver["n_samples"],
                             n_fields=ver["n_fields"], seed=cfg["seed"])
    reports = run_suite(ver["experiments"], settings)
    digest = cfg.digest()
    write_reports_csv(reports, out / "reports.csv", digest)
    if ver["timings"]:
        write_timings_csv(reports, out / "timings.csv", digest)
    plan = dyadic_plan(-1.0, 1.0, 9)
    products = ap_products(_weight(cfg), cfg["p"], plan)
    fh, writer = _open_csv(out / "weights.csv", digest, ["center", "radius", "product"])
    with fh:
        for ball, prod in zip(plan, products):
            writer.writerow([repr(float(ball.center[0])), repr(float(ball.radius)), repr(float(prod))])
    for r in reports:
        flag = {True: "pass", False: "FAIL", None: "inconclusive"}[r.passed]
        print(f"{flag:12s} {r.id} {r.param_json()} value={r.value:.6g} {r.relation} {r.tolerance:.6g}")
    return 1 if any(r.passed is False for r in reports) else 0


def _run_oscillation(cfg: RunConfig, out: Path) -> int:
    domain = _domain(cfg)
    grid = _time_grid(cfg)
    g, osc, alpha = cfg["grid"], cfg["oscillation"], cfg["alpha"]
    f = _forcing(cfg, domain)
    if f is None:
        data = InitialData(u0=lambda *x: np.prod([np.sin(np.pi * (xi - lo) / ln)
                                                  for xi, lo, ln in zip(x, domain.lower, domain.lengths)], axis=0))
        u = solve_with_ic(alpha, data, domain, g["n_modes"], grid, n_points=g["n_points"])
        f_field = None
    else:
        u = solve_zero_ic(alpha, f, domain, g["n_modes"], grid, n_points=g["n_points"])
        mesh = u.mesh()
        f_field = u.with_values(np.broadcast_to(f(*mesh), u.values.shape).copy(), bc="none")
    t0 = grid.t_end if osc["t0"] is None else osc["t0"]
    x0 = [0.5 * (a + b) for a, b in zip(domain.lower, domain.upper)] if osc["x0"] is None else osc["x0"]
    digest = cfg.digest()
    rows = []
    fh, writer = _open_csv(out / "oscillation.csv", digest,
                           ["t0", "x0", "kappa", "r", "p0", "lhs", "hessian_sum", "forcing_sum", "ratio", "truncated"])
    with fh:
        for kappa in osc["kappas"]:
            res = oscillation_decay_experiment(u, f_field, kappa, osc["r"], (t0, x0), p0=osc["p0"])
            rows.append(res.lhs)
            writer.writerow([repr(float(t0)), json.dumps([float(v) for v in x0]), repr(float(kappa)),
                             repr(float(osc["r"])), repr(float(osc["p0"])), repr(res.lhs), repr(res.hessian_sum),
                             repr(res.forcing_sum), repr(res.ratio), str(bool(res.truncated)).lower()])
    if len(rows) > 1 and all(v > 0 for v in rows):
        fh, writer = _open_csv(out / "decay_fit.csv", digest, ["kappas", "sigma"])
        with fh:
            writer.writerow([json.dumps([float(k) for k in osc["kappas"]]),
                             repr(fit_decay_exponent(osc["kappas"], rows))])
    a = random_coefficient(experiment_rng(cfg["seed"], "oscillation"), domain.dim)
    r = osc["r"] / 4
    fh, writer = _open_csv(out / "elongated.csv", digest,
                           ["t0", "x0", "r", "h", "lhs", "bound", "gamma0", "chain", "holds"])
    with fh:
        for mult in osc["heights"]:
            h = mult * r ** (2.0 / alpha)
            res = elongated_oscillation(a, t0, x0, r, h, alpha)
            writer.writerow([repr(float(t0)), json.dumps([float(v) for v in x0]), repr(r), repr(h),
                             repr(res.lhs), repr(res.bound), repr(res.gamma0), repr(res.chain),
                             str(bool(res.holds)).lower()])
    return 0


_RUNNERS = {"solve": _run_solve, "ml": _run_ml, "verify": _run_verify, "oscillation": _run_oscillation}


def dispatch(config: RunConfig) -> int:
    """Run the configured subcommand and write its outputs; returns the exit status."""
    if config.subcommand not in _RUNNERS:
        raise ConfigError([f"unknown subcommand '{config.subcommand}'"])
    out = config.out
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror}") from exc
    return _RUNNERS[config.subcommand](config, out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracwave", description="Time-fractional wave equation toolkit.")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", metavar="PATH", help="JSON or key = value config file")
    parser.add_argument("--out", metavar="DIR", help=f"output directory (overrides ${OUT_ENV} and the config)")
    parser.add_argument("--seed", metavar="U64", type=int, help="64-bit seed for random families")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8") if args.config else ""
    except OSError as exc:
        print(f"fracwave: cannot read config {args.config}: {exc.strerror}", file=sys.stderr)
        return 3
    try:
        config = parse_config(text)
        out = args.out or os.environ.get(OUT_ENV) or None
        config = config.with_overrides(subcommand=args.subcommand, out=out, seed=args.seed)
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError(["--seed must be an unsigned 64-bit integer"])
        return dispatch(config)
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"fracwave: config error: {msg}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"fracwave: {exc}", file=sys.stderr)
        return 3
    except FracwaveError as exc:
        print(f"fracwave: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
