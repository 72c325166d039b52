"""Batch front-end: ``sweep``, ``compare`` and ``evolve`` subcommands.

Configuration is one JSON document.  Exit codes: 0 success, 1 config or
input error, 2 some rows failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.special import j1

from dsscatter.asymptotics import (
    AsymptoticConfig,
    leading_term,
    phase_at_poles,
    reflection_asymptotic,
    reflection_disk_closed_form,
    reflection_full,
    reflection_hybrid,
)
from dsscatter.cauchy_transform import domain_quadrature
from dsscatter.dirac_solver import DiracProblem, auto_grid, solve_cgo
from dsscatter.geometry import ConvexCurve, CurveError, SpectralPoint
from dsscatter.reflection import (
    CSV_FIELDS,
    METHODS,
    ReflectionRecord,
    evolve_reflection,
    reflection_numeric,
)

log = logging.getLogger("dsscatter")

METHOD_ALIASES = {"closed_form": "closed_form_disk", "asymptotic": "asymptotic_spa"}
CONFIG_KEYS = {
    "curve", "sigma", "k_sweep", "grid", "grid_budget", "methods", "tolerance",
    "time", "workers", "richardson", "asymptotic",
}


class ConfigError(ValueError):
    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


@dataclass
class RunConfig:
    curve: ConvexCurve
    sigma: int = 1
    k_values: list = field(default_factory=list)
    grid: object = "auto"
    grid_budget: int = 2048
    methods: list = field(default_factory=lambda: ["numeric"])
    tolerance: float = 1e-10
    time: float = 0.0
    workers: int = 1
    richardson: bool = False
    asymptotic: AsymptoticConfig = field(default_factory=AsymptoticConfig)

    @property
    def unvalidated(self) -> bool:
        return self.sigma == -1


def _num(value, where, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(where, f"expected a number, got {value!r}")
    return kind(value)


def _complex(value, where) -> complex:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(_num(value[0], where + "[0]"), _num(value[1], where + "[1]"))
    if isinstance(value, dict) and set(value) <= {"re", "im"}:
        return complex(_num(value.get("re", 0.0), where + ".re"), _num(value.get("im", 0.0), where + ".im"))
    return complex(_num(value, where))


def _range(spec, where) -> np.ndarray:
    if not isinstance(spec, dict):
        raise ConfigError(where, "expected {start, stop, count}")
    for key in ("start", "stop", "count"):
        if key not in spec:
            raise ConfigError(f"{where}.{key}", "missing")
    start, stop = _num(spec["start"], where + ".start"), _num(spec["stop"], where + ".stop")
    count = _num(spec["count"], where + ".count", int)
    if count < 0:
        raise ConfigError(where + ".count", "must be >= 0")
    if spec.get("spacing", "linear") == "log":
        if start <= 0 or stop <= 0:
            raise ConfigError(where, "log spacing needs positive bounds")
        return np.geomspace(start, stop, count)
    if spec.get("spacing", "linear") != "linear":
        raise ConfigError(where + ".spacing", "must be 'linear' or 'log'")
    return np.linspace(start, stop, count)


def parse_k_sweep(spec, where="k_sweep") -> list[complex]:
    if isinstance(spec, list):
        return [_complex(v, f"{where}[{i}]") for i, v in enumerate(spec)]
    if not isinstance(spec, dict):
        raise ConfigError(where, "expected a list or an object")
    if "values" in spec:
        return parse_k_sweep(spec["values"], where + ".values")
    if isinstance(spec.get("modulus"), dict):
        theta = _num(spec.get("theta", 0.0), where + ".theta")
        return [complex(m * np.exp(1j * theta)) for m in _range(spec["modulus"], where + ".modulus")]
    if isinstance(spec.get("theta"), dict):
        if "modulus" not in spec:
            raise ConfigError(where + ".modulus", "required with a theta range")
        m = _num(spec["modulus"], where + ".modulus")
        return [complex(m * np.exp(1j * th)) for th in _range(spec["theta"], where + ".theta")]
    raise ConfigError(where, "needs 'values', a 'modulus' range or a 'theta' range")


def parse_config(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    unknown = set(doc) - CONFIG_KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")
    if "curve" not in doc:
        raise ConfigError("curve", "missing")
    try:
        curve = ConvexCurve.from_config(doc["curve"])
    except (CurveError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError("curve", str(exc)) from exc
    sigma = doc.get("sigma", 1)
    if sigma not in (1, -1) or isinstance(sigma, bool):
        raise ConfigError("sigma", f"must be 1 or -1, got {sigma!r}")
    k_values = parse_k_sweep(doc.get("k_sweep", []))
    grid = doc.get("grid", "auto")
    if grid != "auto":
        if not isinstance(grid, dict) or "n" not in grid:
            raise ConfigError("grid", "must be 'auto' or {n, L}")
        n = _num(grid["n"], "grid.n", int)
        if n < 16 or n & (n - 1):
            raise ConfigError("grid.n", f"must be a power of two >= 16, got {n}")
        L = _num(grid.get("L", 4.0 * curve.circumradius), "grid.L")
        if L <= 0:
            raise ConfigError("grid.L", "must be positive")
        grid = (n, L)
    methods = doc.get("methods", ["numeric"])
    if not isinstance(methods, list):
        raise ConfigError("methods", "expected a list")
    methods = [METHOD_ALIASES.get(m, m) for m in methods]
    for i, m in enumerate(methods):
        if m not in METHODS:
            raise ConfigError(f"methods[{i}]", f"unknown method {m!r}")
    tol = doc.get("tolerance", 1e-10)
    if isinstance(tol, dict):
        tol = tol.get("solver", 1e-10)
    tol = _num(tol, "tolerance")
    if tol <= 0:
        raise ConfigError("tolerance", "must be positive")
    workers = _num(doc.get("workers", 1), "workers", int)
    if workers < 1:
        raise ConfigError("workers", "must be >= 1")
    richardson = doc.get("richardson", False)
    if not isinstance(richardson, bool):
        raise ConfigError("richardson", "must be true or false")
    asym = doc.get("asymptotic", {})
    if not isinstance(asym, dict):
        raise ConfigError("asymptotic", "expected an object")
    try:
        budget = _num(doc.get("grid_budget", 2048), "grid_budget", int)
        aconf = AsymptoticConfig(
            k_threshold=_num(asym.get("k_threshold", 50.0), "asymptotic.k_threshold"),
            include_correction=bool(asym.get("include_correction", True)),
            d_omega_source=asym.get("d_omega_source", "auto"),
            grid_budget=budget,
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("asymptotic", str(exc)) from exc
    return RunConfig(
        curve, sigma, k_values, grid, budget, methods, tol,
        _num(doc.get("time", 0.0), "time"), workers, richardson, aconf,
    )


def load_config(path) -> RunConfig:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from exc
    return parse_config(doc)


def _grid_for(cfg: RunConfig, k) -> tuple[int, float]:
    if cfg.grid == "auto":
        return auto_grid(cfg.curve, k, budget=cfg.grid_budget)
    return cfg.grid


def _numeric(cfg: RunConfig, k, sigma=None) -> ReflectionRecord:
    n, L = _grid_for(cfg, k)
    problem = DiracProblem(cfg.curve, k, cfg.sigma if sigma is None else sigma, n, L)
    return reflection_numeric(problem, solve_cgo(problem, tol=cfg.tolerance), richardson=cfg.richardson, tol=cfg.tolerance)


def evaluate(cfg: RunConfig, k: complex, method: str) -> ReflectionRecord:
    if method == "numeric":
        return _numeric(cfg, k)
    if method == "asymptotic_spa":
        return reflection_asymptotic(cfg.curve, k, cfg.asymptotic, cfg.sigma)
    if method == "asymptotic_full":
        return reflection_full(cfg.curve, k, cfg.asymptotic, cfg.sigma)
    if method == "closed_form_disk":
        if cfg.curve.mode != "disk" or cfg.curve.radius != 1.0:
            raise ValueError("the closed form applies to the unit disk only")
        if cfg.sigma != 1:
            raise ValueError("the closed form applies to sigma=+1 only")
        return reflection_disk_closed_form(abs(k))
    if method == "hybrid":
        return reflection_hybrid(
            cfg.curve, k, cfg.asymptotic, lambda c, kv, s: _numeric(cfg, kv, s), cfg.sigma
        )
    raise ValueError(f"unknown method {method!r}")


def _task(args):
    cfg, k, method = args
    try:
        rec = evaluate(cfg, k, method)
        if cfg.time:
            rec = evolve_reflection(rec, cfg.time)
        return rec, ""
    except Exception as exc:  # a failed row must not abort the sweep
        return None, f"{type(exc).__name__}: {exc}"


def sort_key(k: complex, method: str):
    return (round(abs(k), 12), round(SpectralPoint.of(k).theta, 12), method)


def run_tasks(cfg: RunConfig, tasks):
    if cfg.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(_task, tasks))
    return [_task(t) for t in tasks]


def _failed_row(k: complex, method: str, t: float, msg: str) -> dict:
    return {
        "k_re": f"{k.real:.17g}", "k_im": f"{k.imag:.17g}", "R_re": "nan", "R_im": "nan",
        "method": method, "error_estimate": "nan", "time": f"{t:.17g}", "error": msg,
    }


def cmd_sweep(cfg: RunConfig, out) -> int:
    tasks = sorted(((cfg, k, m) for k in cfg.k_values for m in cfg.methods), key=lambda a: sort_key(a[1], a[2]))
    if cfg.unvalidated:
        log.warning("sigma=-1: unvalidated regime")
    results = run_tasks(cfg, tasks)
    failures = 0
    with open(out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS + ["error"])
        w.writeheader()
        for (_, k, m), (rec, err) in zip(tasks, results):
            if rec is None:
                failures += 1
                log.error("k=%s method=%s failed: %s", k, m, err)
                w.writerow(_failed_row(k, m, cfg.time, err))
            else:
                w.writerow({**rec.to_row(), "error": ""})
    return 2 if failures else 0


def _fit_exponent(ks, vals) -> Optional[float]:
    pts = [(math.log(k), math.log(v)) for k, v in zip(ks, vals) if v and v > 0 and np.isfinite(v)]
    if len(pts) < 2:
        return None
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


def _cplx(z):
    return None if z is None else [float(np.real(z)), float(np.imag(z))]


def cmd_compare(cfg: RunConfig, report_path, plot_path) -> int:
    curve = cfg.curve
    if curve.mode not in ("disk", "ellipse"):
        raise ConfigError("curve", "compare needs a disk or an ellipse")
    ks = cfg.k_values or [8.0 + 0j, 16.0 + 0j, 32.0 + 0j]
    ks = sorted(ks, key=lambda k: sort_key(k, ""))
    methods = ["numeric", "asymptotic_spa", "asymptotic_full"]
    unit_disk = curve.mode == "disk" and curve.radius == 1.0 and cfg.sigma == 1
    if unit_disk:
        methods.append("closed_form_disk")
    tasks = [(cfg, k, m) for k in ks for m in methods]
    results = dict(zip(((k, m) for _, k, m in tasks), run_tasks(cfg, tasks)))
    rows, plot_rows, failures = [], [], 0
    for k in ks:
        R = {}
        errors = {}
        for m in methods:
            rec, err = results[(k, m)]
            if rec is None:
                failures += 1
                errors[m] = err
            else:
                R[m] = rec.R
        km = abs(k)
        lead = leading_term(curve, k)
        if curve.mode == "disk":
            oracle = complex((2.0 / np.pi) * np.pi * curve.radius * j1(2 * km * curve.radius) / km)
            oracle_name = "bessel"
        else:
            kk = complex(k)
            oracle = complex((2.0 / np.pi) * domain_quadrature(
                curve, lambda w: np.exp(2j * np.imag(kk * w)),
                t_panels=max(32, int(4 * km * curve.max_speed) // 8), s_panels=max(4, int(km) // 4), tol=1e-12,
            ))
            oracle_name = "domain_quadrature"
        row = {
            "k": _cplx(k), "abs_k": km, "theta": SpectralPoint.of(k).theta,
            **{f"R_{m}": _cplx(v) for m, v in R.items()},
            "leading_term": _cplx(lead), "leading_oracle": _cplx(oracle), "leading_oracle_kind": oracle_name,
            "leading_diff_scaled": abs(lead - oracle) * km**3.5,
            "phase_at_poles": {s: _cplx(v) for s, v in phase_at_poles(curve, k).items()},
        }
        if "numeric" in R and "asymptotic_spa" in R:
            row["diff_scaled"] = abs(R["numeric"] - R["asymptotic_spa"]) * km**2.5
            row["diff_full_scaled"] = abs(R["numeric"] - R["asymptotic_full"]) * km**2.5
        if "closed_form_disk" in R and "numeric" in R:
            row["diff_closed_form_scaled"] = abs(R["numeric"] - R["closed_form_disk"]) * km**2.5
        if errors:
            row["errors"] = errors
        rows.append(row)
        prow = {"abs_k": km, "theta": row["theta"]}
        for m, v in R.items():
            prow[f"{m}_re"], prow[f"{m}_im"] = v.real, v.imag
        names = sorted(R)
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                prow[f"absdiff_{a}__{b}"] = abs(R[a] - R[b])
        plot_rows.append(prow)
    report = {
        "curve": curve.to_config(),
        "sigma": cfg.sigma,
        "flags": ["unvalidated regime"] if cfg.unvalidated else [],
        "rows": rows,
        "decay_exponents": {
            "numeric_vs_asymptotic": _fit_exponent([r["abs_k"] for r in rows], [r.get("diff_scaled", 0) / r["abs_k"] ** 2.5 for r in rows]),
            "leading_vs_oracle": _fit_exponent([r["abs_k"] for r in rows], [r["leading_diff_scaled"] / r["abs_k"] ** 3.5 for r in rows]),
        },
        "constants": {
            "max_diff_scaled": max((r["diff_scaled"] for r in rows if "diff_scaled" in r), default=None),
            "max_leading_diff_scaled": max((r["leading_diff_scaled"] for r in rows), default=None),
        },
    }
    Path(report_path).write_text(json.dumps(report, indent=2, sort_keys=True))
    _write_plot(plot_path, plot_rows)
    return 2 if failures else 0


def _write_plot(path, rows):
    keys = ["abs_k", "theta"] + sorted({k for r in rows for k in r} - {"abs_k", "theta"})
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys, restval="")
        w.writeheader()
        for r in rows:
            w.writerow({k: f"{v:.17g}" for k, v in r.items()})
    script = Path(str(path) + ".plot.py")
    script.write_text(
        "import csv, sys\n"
        "import matplotlib.pyplot as plt\n\n"
        f"rows = list(csv.DictReader(open({str(path)!r})))\n"
        "k = [float(r['abs_k']) for r in rows]\n"
        "fig, ax = plt.subplots(1, 2, figsize=(10, 4))\n"
        "for col in rows[0] if rows else []:\n"
        "    if col.endswith('_re'):\n"
        "        ax[0].plot(k, [float(r[col]) if r[col] else float('nan') for r in rows], 'o-', label=col[:-3])\n"
        "    if col.startswith('absdiff_'):\n"
        "        ax[1].loglog(k, [float(r[col]) if r[col] else float('nan') for r in rows], 'o-', label=col[8:])\n"
        "ax[0].set_xlabel('|k|'); ax[0].set_ylabel('Re R'); ax[0].legend()\n"
        "ax[1].set_xlabel('|k|'); ax[1].set_ylabel('|difference|'); ax[1].legend(fontsize=6)\n"
        "fig.tight_layout()\n"
        "fig.savefig(sys.argv[1] if len(sys.argv) > 1 else 'compare.png')\n"
    )


def cmd_evolve(in_path, t: float, out) -> int:
    """Evolve every row at time 0; rows that carry a sweep failure are copied unchanged."""
    with open(in_path, newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        missing = [f for f in CSV_FIELDS if f not in fields]
        if missing:
            raise ConfigError(str(in_path), f"missing columns {missing}")
        rows = list(reader)
    out_rows = []
    for line, row in enumerate(rows, start=2):
        if row.get("error"):
            out_rows.append(row)
            continue
        try:
            rec = ReflectionRecord.from_row(row)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{in_path}:{line}", str(exc)) from exc
        if rec.time != 0:
            raise ConfigError(f"{in_path}:{line}", f"row is at time {rec.time}; expected 0")
        out_rows.append({**row, **evolve_reflection(rec, t).to_row()})
    with open(out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        w.writerows(out_rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dsscatter", description="Scattering data for d-bar Dirac systems")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("sweep", help="evaluate R over a k sweep")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    c = sub.add_parser("compare", help="numeric vs asymptotic vs closed form comparison")
    c.add_argument("--config", required=True)
    c.add_argument("--report", required=True)
    c.add_argument("--plotdata", required=True)
    e = sub.add_parser("evolve", help="apply the time-evolution phase")
    e.add_argument("--in", dest="inp", required=True)
    e.add_argument("--t", type=float, required=True)
    e.add_argument("--out", required=True)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "evolve":
            return cmd_evolve(args.inp, args.t, args.out)
        cfg = load_config(args.config)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.out)
        return cmd_compare(cfg, args.report, args.plotdata)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
