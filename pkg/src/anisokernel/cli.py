"""Command-line front end.

Subcommands: ``spectrum``, ``bounds``, ``tc``, ``sweep``, ``widom`` and
``uncertainty``. Each run writes one result file (CSV or JSON) into ``--out``
and, with ``--plot``, an SVG log-log plot. Results are cached by a content hash
of the computational parameters and the code version.

Exit status: 0 ok, 2 configuration error, 3 computation error, 4 a proven
inequality failed numerically.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
import tempfile
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .errors import AnisoKernelError, InvariantViolation, ParameterError

log = logging.getLogger("anisokernel")

SCHEMA_VERSION = 1
CODE_VERSION = f"anisokernel-{__version__}"
CACHE_ENV = "ANISOKERNEL_CACHE"
EXIT_OK, EXIT_CONFIG, EXIT_COMPUTE, EXIT_INVARIANT = 0, 2, 3, 4

CSV_COLUMNS = {
    "spectrum": ["j", "eigenvalue", "deficiency", "residual"],
    "bounds": ["a", "lower_odd", "upper_odd", "upper_full", "theorem_lower", "theorem_upper",
               "E_even", "E_odd", "uncertainty_even", "uncertainty_odd", "sandwich_ok"],
    "tc": ["a", "tau", "residual", "iterations", "lower_cap", "upper_cap"],
    "sweep": ["a", "deficiency"],
    "widom": ["a", "alignment", "j", "deficiency", "ratio", "mu", "relative_gap",
              "relative_change", "extrapolated"],
    "uncertainty": ["check", "value"],
}

# options that only affect where/how results are written, not their content
_OUTPUT_KEYS = {"command", "config", "format", "out", "plot", "cache_dir", "no_cache",
                "workers", "verbose"}


class ConfigError(ParameterError):
    pass


# ---------------------------------------------------------------------------
# argument parsing


def _a_grid(ns):
    if getattr(ns, "a_log", None):
        lo, hi, count = ns.a_log
        count = int(count)
        if not (0 < lo < hi) or count < 2:
            raise ConfigError("--a-log needs 0 < min < max and count >= 2")
        return [float(v) for v in np.geomspace(lo, hi, count)]
    if getattr(ns, "a", None):
        vals = [float(v) for v in ns.a]
        if any(not (v > 0) for v in vals):
            raise ConfigError("a values must be > 0")
        return vals
    return None


def _common(p):
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--plot", action="store_true", help="also write an SVG log-log plot")
    p.add_argument("--cache-dir", default=None,
                   help=f"cache directory (default ${CACHE_ENV} or ~/.cache/anisokernel)")
    p.add_argument("--no-cache", action="store_true")
    p.add_argument("--workers", type=int, default=1, help="process pool size; 1 = serial")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-v", "--verbose", action="store_true")


def _a_options(p, default=None):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--a", type=float, nargs="+", default=default)
    g.add_argument("--a-log", type=float, nargs=3, metavar=("MIN", "MAX", "COUNT"))


def build_parser():
    parser = argparse.ArgumentParser(prog="anisokernel", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=CODE_VERSION)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="top eigenvalues at one parameter point")
    _common(p)
    p.add_argument("--a", type=float, default=0.01)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--t", type=float, default=2.0)
    p.add_argument("--sector", default="even", choices=("full", "even", "odd"))
    p.add_argument("--k", type=int, default=3)

    p = sub.add_parser("bounds", help="variational, Schur and uncertainty bounds per a")
    _common(p)
    _a_options(p, [0.01])

    p = sub.add_parser("tc", help="critical temperature shift tau(a)")
    _common(p)
    _a_options(p, [0.005, 0.01, 0.02, 0.05])

    p = sub.add_parser("sweep", help="deficiency sweep and exponent fit")
    _common(p)
    _a_options(p)
    p.add_argument("--t", type=float, default=2.0)
    p.add_argument("--sector", default="even", choices=("full", "even", "odd"))
    p.add_argument("--j", type=int, default=0)

    p = sub.add_parser("widom", help="rescaled deficiencies against |s| + 4x^4")
    _common(p)
    _a_options(p, [0.04, 0.02, 0.01, 0.005])
    p.add_argument("--j-max", type=int, default=1)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--half-width", type=float, default=12.0)

    p = sub.add_parser("uncertainty", help="randomized uncertainty-principle suite and sinc norms")
    _common(p)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--n", type=int, default=200, help="sinc quadrature nodes")
    return parser


def read_config_file(path):
    """``key = value`` lines; ``#`` starts a comment. Keys may use ``-`` or ``_``."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _subparser(parser, name):
    for action in parser._subparsers._group_actions:
        if name in action.choices:
            return action.choices[name]
    raise ConfigError(f"unknown subcommand {name}")


def parse_args(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.config:
        sp = _subparser(parser, ns.command)
        actions = {a.dest: a for a in sp._actions}
        defaults = {}
        for key, value in read_config_file(ns.config).items():
            if key not in actions or key in ("config", "help"):
                raise ConfigError(f"unknown config key {key!r} for {ns.command}")
            act = actions[key]
            conv = act.type or str
            try:
                if act.nargs in ("+", "*") or isinstance(act.nargs, int):
                    defaults[key] = [conv(v) for v in value.replace(",", " ").split()]
                elif isinstance(act, argparse._StoreTrueAction):
                    defaults[key] = value.lower() in ("1", "true", "yes", "on")
                else:
                    defaults[key] = conv(value)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {value!r}") from exc
        sp.set_defaults(**defaults)
        ns = parser.parse_args(argv)
        given = sys.argv[1:] if argv is None else list(argv)
        if "a_log" in defaults and "--a" in given:
            ns.a_log = None
    if ns.tol <= 0:
        raise ConfigError("--tol must be > 0")
    if ns.workers < 1:
        raise ConfigError("--workers must be >= 1")
    return ns


def config_dict(ns):
    d = {k: v for k, v in sorted(vars(ns).items()) if k not in _OUTPUT_KEYS}
    d["command"] = ns.command
    if "a_log" in d:
        # either form of the grid is stored as the explicit list
        grid = _a_grid(ns)
        d.pop("a", None)
        d.pop("a_log")
        d["a_values"] = grid or []
    return d


# ---------------------------------------------------------------------------
# cache


def cache_key(config, version=None, parallel=False):
    blob = json.dumps({"config": config, "version": version or CODE_VERSION,
                       "parallel": bool(parallel)},
                      sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _cache_dir(ns):
    if ns.cache_dir:
        return Path(ns.cache_dir)
    env = os.environ.get(CACHE_ENV)
    return Path(env) if env else Path.home() / ".cache" / "anisokernel"


def cache_lookup(directory, key):
    path = Path(directory) / f"{key}.json"
    if not path.exists():
        return None
    try:
        return json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        warnings.warn(f"ignoring corrupt cache entry {path}: {exc}", RuntimeWarning, stacklevel=2)
        return None


def _atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def cache_store(directory, key, result):
    _atomic_write(Path(directory) / f"{key}.json", _dumps(result))


# ---------------------------------------------------------------------------
# computations; module-level so the process pool can pickle them


def _pool_map(fn, items, workers):
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as ex:
        return list(ex.map(fn, items))


def _bounds_point(args):
    from .bounds import certify

    a, tol = args
    return certify(a, tol=tol).as_dict()


def _tc_point(args):
    from .scaling_tc import solve_tau

    a, tol = args
    try:
        return solve_tau(a, tol).as_dict()
    except AnisoKernelError as exc:
        return {"a": a, "error": str(exc)}


def _sweep_point(args):
    from .asymptotics import deficiency_sweep

    t, a, sector, j, tol = args
    return deficiency_sweep(t, [a], sector, j, tol=tol)[0]


def _uncertainty_task(args):
    from . import uncertainty as up

    name, trials, seed, n = args
    if name == "sinc":
        res = up.sinc_top_eigenvalue(n)
        res["schur"] = up.sinc_schur_bound()
        return name, res
    if name == "up":
        return name, up.random_up_trials(trials, [seed, 1])
    if name == "angle":
        return name, up.random_angle_trials(10 * trials, [seed, 2])
    return name, up.random_dichotomy_trials(trials, [seed, 3])


def run_spectrum(cfg, workers):
    from .discretize import refine_until
    from .kernel import KernelParams
    from .spectra import top_eigenvalues

    p = KernelParams(cfg["a"], cfg["T"], cfg["t"])
    op, report = refine_until(p, cfg["sector"], cfg["tol"])
    spec = top_eigenvalues(op, min(cfg["k"], op.size), tol=1e-8)
    rows = [{"j": j, "eigenvalue": float(v), "deficiency": float(1 - v), "residual": float(r)}
            for j, (v, r) in enumerate(zip(spec.eigenvalues, spec.residuals))]
    summary = {"refinement": report.as_dict(), "uncertainty": report.uncertainty}
    return rows, summary, True


def run_bounds(cfg, workers):
    reports = _pool_map(_bounds_point, [(a, cfg["tol"]) for a in cfg["a_values"]], workers)
    rows = []
    for r in reports:
        rows.append({"a": r["a"], "lower_odd": r["lower_odd"], "upper_odd": r["upper_odd"],
                     "upper_full": r["upper_full"], "theorem_lower": r["theorem_lower"],
                     "theorem_upper": r["theorem_upper"], "E_even": r["numeric_E_even"],
                     "E_odd": r["numeric_E_odd"], "uncertainty_even": r["uncertainty_even"],
                     "uncertainty_odd": r["uncertainty_odd"], "sandwich_ok": r["sandwich_ok"]})
    ok = all(r["sandwich_ok"] for r in reports)
    return rows, {"sandwich_ok": ok, "reports": reports}, ok


def run_tc(cfg, workers):
    from .asymptotics import fit_exponent

    pts = _pool_map(_tc_point, [(a, cfg["tol"]) for a in sorted(cfg["a_values"])], workers)
    rows = [p for p in pts if "error" not in p]
    errors = {str(p["a"]): p["error"] for p in pts if "error" in p}
    ok = all(r["lower_cap"] <= r["tau"] <= r["upper_cap"] for r in rows)
    summary = {"errors": errors, "sandwich_ok": ok}
    if len(rows) >= 3:
        summary["fit"] = fit_exponent([(r["a"], r["tau"]) for r in rows]).as_dict()
    return rows, summary, ok


def run_sweep(cfg, workers):
    from .asymptotics import fit_exponent

    if not cfg["a_values"]:
        return [], {"fit": None, "reference_exponent": 2.0 / (1.0 + 2.0 * cfg["t"])}, True
    tasks = [(cfg["t"], a, cfg["sector"], cfg["j"], cfg["tol"]) for a in cfg["a_values"]]
    pairs = _pool_map(_sweep_point, tasks, workers)
    rows = [{"a": a, "deficiency": d} for a, d in pairs]
    summary = {"reference_exponent": 2.0 / (1.0 + 2.0 * cfg["t"]), "fit": None}
    if len(pairs) >= 3:
        summary["fit"] = fit_exponent(pairs).as_dict()
    return rows, summary, True


def run_widom(cfg, workers):
    from .asymptotics import widom_compare

    rep = widom_compare(cfg["j_max"], cfg["a_values"], n=cfg["n"], half_width=cfg["half_width"],
                        tol=cfg["tol"])
    d = rep.as_dict()
    rows = d.pop("rows")
    return rows, d, True


def run_uncertainty(cfg, workers):
    from . import uncertainty as up

    tasks = [(name, cfg["trials"], cfg["seed"], cfg["n"]) for name in ("sinc", "up", "angle", "lemma6")]
    results = dict(_pool_map(_uncertainty_task, tasks, workers))
    sinc = results["sinc"]
    b_bound = math.sqrt(sinc["schur"])
    rows = [
        ("sinc_lambda0", sinc["value"]),
        ("sinc_lambda0_2n", sinc["value_2n"]),
        ("sinc_richardson", sinc["richardson"]),
        ("sinc_fifth_digit_flag", sinc["flag"]),
        ("sinc_schur", sinc["schur"]),
        ("b_bound", b_bound),
        ("half_gap", (1.0 - b_bound) / 2.0),
        ("up_trials", results["up"]["trials"]),
        ("up_min_slack", results["up"]["min_slack"]),
        ("up_min_corollary_slack", results["up"]["min_corollary_slack"]),
        ("up_violations", results["up"]["violations"]),
        ("angle_trials", results["angle"]["trials"]),
        ("angle_min_slack", results["angle"]["min_slack"]),
        ("lemma6_trials", results["lemma6"]["trials"]),
        ("lemma6_min_max_tail", results["lemma6"]["min_max_tail"]),
    ]
    rows = [{"check": k, "value": v} for k, v in rows]
    ok = (results["up"]["violations"] == 0 and sinc["schur"] < 0.60232
          and (1.0 - b_bound) / 2.0 > up.ONE_NINTH)
    return rows, {"sinc_lambda0": sinc["value"], "violations": results["up"]["violations"],
                  "lemma6_counts": results["lemma6"]["counts"], "ok": ok}, ok


RUNNERS = {"spectrum": run_spectrum, "bounds": run_bounds, "tc": run_tc, "sweep": run_sweep,
           "widom": run_widom, "uncertainty": run_uncertainty}


# ---------------------------------------------------------------------------
# output


def _dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_csv(result):
    buf = io.StringIO()
    buf.write(f"# code_version={result['code_version']} schema_version={result['schema_version']}\n")
    buf.write(f"# config={json.dumps(result['config'], sort_keys=True)}\n")
    cols = CSV_COLUMNS[result["command"]]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in result["rows"]:
        w.writerow([_fmt(row.get(c)) for c in cols])
    return buf.getvalue()


def to_svg(points, slopes, *, title="", xlabel="a", ylabel="", metadata=None,
           width=480, height=360):
    """Log-log scatter plot with reference lines of the given slopes.

    ``points`` are ``(x, y)`` pairs with positive entries; every reference
    line is anchored at the geometric mean of the data. Output depends only
    on the arguments.
    """
    pts = [(float(x), float(y)) for x, y in points if x > 0 and y > 0]
    m = 50.0
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">']
    if metadata is not None:
        meta = json.dumps(metadata, sort_keys=True).replace("--", "- -")
        out.append(f"<!-- {meta} -->")
    out.append(f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>')
    out.append(f'<text x="{width / 2:.2f}" y="20" text-anchor="middle" font-size="13">{title}</text>')
    out.append(f'<rect x="{m:.2f}" y="{m:.2f}" width="{width - 2 * m:.2f}" '
               f'height="{height - 2 * m:.2f}" fill="none" stroke="black"/>')
    out.append(f'<text x="{width / 2:.2f}" y="{height - 12}" text-anchor="middle" font-size="12">'
               f'log {xlabel}</text>')
    out.append(f'<text x="14" y="{height / 2:.2f}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 14 {height / 2:.2f})">log {ylabel}</text>')
    if pts:
        lx = [math.log10(x) for x, _ in pts]
        ly = [math.log10(y) for _, y in pts]
        x0, x1 = min(lx), max(lx)
        y0, y1 = min(ly), max(ly)
        if x1 - x0 < 1e-12:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 - y0 < 1e-12:
            y0, y1 = y0 - 0.5, y1 + 0.5
        padx, pady = 0.05 * (x1 - x0), 0.05 * (y1 - y0)
        x0, x1, y0, y1 = x0 - padx, x1 + padx, y0 - pady, y1 + pady

        def sx(v):
            return m + (v - x0) / (x1 - x0) * (width - 2 * m)

        def sy(v):
            return height - m - (v - y0) / (y1 - y0) * (height - 2 * m)

        cx, cy = sum(lx) / len(lx), sum(ly) / len(ly)
        for k, slope in enumerate(sorted(set(round(s, 12) for s in slopes))):
            ya, yb = cy + slope * (x0 - cx), cy + slope * (x1 - cx)
            dash = ' stroke-dasharray="6,4"' if k else ""
            out.append(f'<line class="ref-slope" x1="{sx(x0):.2f}" y1="{sy(ya):.2f}" '
                       f'x2="{sx(x1):.2f}" y2="{sy(yb):.2f}" stroke="gray"{dash}>'
                       f"<title>slope {slope:.6g}</title></line>")
        for a, b in zip(lx, ly):
            out.append(f'<circle class="marker" cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="3.5" '
                       f'fill="steelblue"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _plot_data(result):
    cmd, rows, cfg = result["command"], result["rows"], result["config"]
    if cmd == "sweep":
        return [(r["a"], r["deficiency"]) for r in rows], [0.4, 2.0 / (1.0 + 2.0 * cfg["t"])], \
            "1 - E"
    if cmd == "tc":
        return [(r["a"], r["tau"]) for r in rows], [0.4], "tau"
    if cmd == "bounds":
        return [(r["a"], 1.0 - r["E_even"]) for r in rows], [0.4], "1 - E"
    if cmd == "widom":
        pts = [(r["a"], r["deficiency"]) for r in rows if r["alignment"] == "even" and r["j"] == 0]
        return pts, [0.4], "phi_0"
    return None


def emit(result, out_dir, fmt, plot):
    """Write the result file (and optional plot); returns the written paths."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc
    name = result["command"]
    paths = []
    text = to_csv(result) if fmt == "csv" else _dumps(result)
    path = out_dir / f"{name}.{fmt}"
    _atomic_write(path, text)
    paths.append(path)
    if plot:
        data = _plot_data(result)
        if data is not None:
            pts, slopes, ylabel = data
            svg = to_svg(pts, slopes, title=name, ylabel=ylabel,
                         metadata={"code_version": result["code_version"],
                                   "config": result["config"]})
            sp = out_dir / f"{name}.svg"
            _atomic_write(sp, svg)
            paths.append(sp)
    return paths


# ---------------------------------------------------------------------------


def compute(ns):
    cfg = config_dict(ns)
    rows, summary, ok = RUNNERS[ns.command](cfg, ns.workers)
    result = {"schema_version": SCHEMA_VERSION, "code_version": CODE_VERSION,
              "command": ns.command, "config": cfg, "rows": rows, "summary": summary, "ok": ok}
    # normalize through JSON so fresh and cached results emit identical bytes
    return json.loads(_dumps(result))


def main(argv=None):
    try:
        ns = parse_args(argv)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_dict(ns)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    key = cache_key(cfg, parallel=ns.workers > 1)
    cdir = _cache_dir(ns)
    result = None if ns.no_cache else cache_lookup(cdir, key)
    if result is not None:
        print(f"cache hit {key}", file=sys.stderr)
    else:
        try:
            result = compute(ns)
        except InvariantViolation as exc:
            print(f"invariant violation: {exc}", file=sys.stderr)
            return EXIT_INVARIANT
        except ConfigError as exc:
            print(f"configuration error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except (AnisoKernelError, ArithmeticError, np.linalg.LinAlgError) as exc:
            print(f"computation error: {exc}", file=sys.stderr)
            return EXIT_COMPUTE
        if not ns.no_cache:
            try:
                cache_store(cdir, key, result)
            except OSError as exc:
                warnings.warn(f"could not write cache entry: {exc}", RuntimeWarning, stacklevel=1)
    try:
        paths = emit(result, ns.out, ns.format, ns.plot)
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    for p in paths:
        print(p)
    if not result.get("ok", True):
        print("a checked inequality failed; see the result file", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
