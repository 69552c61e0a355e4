"""Command line interface.

Exit codes: 0 success, 2 invalid input, 3 resource budget exceeded,
4 insufficient data.
"""
import argparse
import csv
import datetime as _dt
import io
import json
import logging
import math
import sys
from pathlib import Path

from . import __version__
from ._backend import BACKEND
from .connectivity import analyze, build_network
from .experiments import (
    InsufficientDataError,
    NoMatchingPairsError,
    SweepConfig,
    SweepRow,
    fit_stretched_exponential,
    run_sweep,
    scaling_check,
)
from .geometry import (
    DEFAULT_MAX_DEPTH,
    GeometryError,
    VertexBudgetError,
    domain_boundary_polyline,
    make_domain,
)
from .sampling import DEFAULT_SEED, sample_poisson_nodes

log = logging.getLogger("fraclos")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_BUDGET = 3
EXIT_NO_DATA = 4

SWEEP_COLUMNS = [
    "family", "theta", "rho", "trials", "successes", "p_hat",
    "ci_low", "ci_high", "mean_n", "mean_isolated", "depth_exhausted",
]
_INT_COLUMNS = {"family", "trials", "successes", "depth_exhausted"}


class InputError(ValueError):
    pass


# -- formats ---------------------------------------------------------------

def fmt12(x):
    # adding 0.0 turns -0.0 into 0.0
    return f"{x + 0.0:.12g}"


def write_sweep_csv(rows, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for row in rows:
        w.writerow([
            row.family, repr(row.theta), repr(row.rho), row.trials, row.successes,
            repr(row.p_hat), repr(row.ci_low), repr(row.ci_high),
            repr(row.mean_n), repr(row.mean_isolated), row.depth_exhausted,
        ])


def read_sweep_csv(fh):
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise InputError("empty sweep CSV") from None
    if [h.strip() for h in header] != SWEEP_COLUMNS:
        raise InputError(f"unexpected sweep CSV header {header!r}")
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != len(SWEEP_COLUMNS):
            raise InputError(f"line {lineno}: expected {len(SWEEP_COLUMNS)} fields, got {len(rec)}")
        vals = {}
        try:
            for key, raw in zip(SWEEP_COLUMNS, rec):
                vals[key] = int(raw) if key in _INT_COLUMNS else float(raw)
        except ValueError as exc:
            raise InputError(f"line {lineno}: {exc}") from None
        if not 0 <= vals["successes"] <= vals["trials"] or vals["trials"] < 1:
            raise InputError(f"line {lineno}: inconsistent successes/trials")
        rows.append(SweepRow(**vals))
    return rows


def boundary_csv(vertices):
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["x", "y"])
    for x, y in vertices:
        w.writerow([fmt12(x), fmt12(y)])
    return out.getvalue()


def boundary_svg(domain, vertices, nodes=None, edges=None):
    h = domain.y_max
    path = "M " + " L ".join(f"{x:.12g},{y:.12g}" for x, y in vertices) + " Z"
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{-h:.12g} {-h:.12g} {2 * h:.12g} {2 * h:.12g}">',
        '<g transform="scale(1,-1)">',
        f'<path d="{path}" fill="none" stroke="black" stroke-width="{0.004 * h:.6g}"/>',
    ]
    if nodes is not None and edges is not None:
        for a, b in edges:
            (x1, y1), (x2, y2) = nodes[a], nodes[b]
            parts.append(
                f'<line x1="{x1:.12g}" y1="{y1:.12g}" x2="{x2:.12g}" y2="{y2:.12g}" '
                f'stroke="steelblue" stroke-width="{0.002 * h:.6g}"/>'
            )
    if nodes is not None:
        for x, y in nodes:
            parts.append(f'<circle cx="{x:.12g}" cy="{y:.12g}" r="{0.008 * h:.6g}" fill="crimson"/>')
    parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def manifest(command, config, seed=None):
    return {
        "tool": "fraclos",
        "version": __version__,
        "backend": BACKEND,
        "command": command,
        "config": config,
        "seed": seed,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


def _write_manifest(path, data):
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def manifest_path(output):
    return Path(str(output) + ".manifest.json")


def parse_config_file(path):
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _floats(text):
    try:
        return [float(v) for v in str(text).replace(",", " ").split()]
    except ValueError:
        raise InputError(f"not a list of numbers: {text!r}") from None


def _theta_of(args):
    if getattr(args, "theta_deg", None) is not None:
        return math.radians(args.theta_deg)
    if args.theta is None:
        raise InputError("--theta or --theta-deg is required")
    return args.theta


# -- commands --------------------------------------------------------------

def cmd_info(args):
    d = make_domain(args.family, _theta_of(args))
    info = {
        "family": d.n,
        "theta": d.theta,
        "r": d.r,
        "D": d.D,
        "D_over_2": d.D / 2,
        "V": d.V,
        "y_max": d.y_max,
        "circle_center": list(d.circle_center),
        "circle_radius": d.circle_radius,
    }
    if args.json:
        print(json.dumps(info, indent=2))
    else:
        for key in ("family", "theta", "r", "D", "D_over_2", "V", "y_max", "circle_radius"):
            val = info[key]
            print(f"{key:>13} = {val if isinstance(val, int) else fmt12(val)}")
    return EXIT_OK


def cmd_render(args):
    d = make_domain(args.family, _theta_of(args))
    verts = domain_boundary_polyline(d, args.level, max_vertices=args.max_vertices)
    if args.format == "csv":
        text = boundary_csv(verts)
    else:
        nodes = edges = None
        if args.nodes:
            nodes = [(float(r["x"]), float(r["y"])) for r in csv.DictReader(open(args.nodes))]
            if args.edges:
                edges = [(int(r["id_a"]), int(r["id_b"])) for r in csv.DictReader(open(args.edges))]
        text = boundary_svg(d, verts, nodes, edges)
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.output).write_text(text)
        cfg = {"family": d.n, "theta": d.theta, "level": args.level, "format": args.format}
        _write_manifest(manifest_path(args.output), manifest("render", cfg))
    return EXIT_OK


def run_sample(cfg, out_dir, fmt):
    d = make_domain(cfg["family"], cfg["theta"])
    nodes = sample_poisson_nodes(d, cfg["rho"], cfg["seed"], cfg["max_depth"])
    net = build_network(d, nodes, cfg["r0"], cfg["max_depth"])
    report = analyze(net)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    man = manifest("sample", cfg, cfg["seed"])
    # the timestamp stays in manifest.json so reruns give byte-identical reports
    stamp_free = {k: v for k, v in man.items() if k != "timestamp"}
    rep = dict(report.as_dict(), depth_exhausted_count=net.depth_exhausted_count, manifest=stamp_free)
    if fmt == "csv":
        with open(out_dir / "nodes.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["id", "x", "y"])
            for i, (x, y) in enumerate(nodes.points.tolist()):
                w.writerow([i, repr(x), repr(y)])
        with open(out_dir / "edges.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["id_a", "id_b"])
            w.writerows(net.edges.tolist())
        files = ["nodes.csv", "edges.csv", "report.json"]
    else:
        doc = {
            "nodes": [{"id": i, "x": x, "y": y} for i, (x, y) in enumerate(nodes.points.tolist())],
            "edges": net.edges.tolist(),
        }
        (out_dir / "network.json").write_text(json.dumps(doc) + "\n")
        files = ["network.json", "report.json"]
    (out_dir / "report.json").write_text(json.dumps(rep, indent=2, sort_keys=True) + "\n")
    _write_manifest(out_dir / "manifest.json", dict(man, format=fmt, files=files))
    return report


def cmd_sample(args):
    cfg = {
        "family": args.family,
        "theta": _theta_of(args),
        "rho": args.rho,
        "seed": args.seed,
        "r0": args.r0,
        "max_depth": args.max_depth,
    }
    if cfg["rho"] < 0:
        raise InputError("rho must be non-negative")
    if cfg["r0"] <= 0:
        raise InputError("r0 must be positive")
    report = run_sample(cfg, args.out_dir, args.format)
    print(json.dumps(report.as_dict()))
    return EXIT_OK


_SWEEP_KEYS = {
    "family": int,
    "thetas": _floats,
    "rhos": _floats,
    "trials": int,
    "seed": int,
    "r0": float,
    "max_depth": int,
    "confidence": float,
    "threads": int,
}
_ALIASES = {"theta": "thetas", "rho": "rhos"}


def resolve_sweep_config(args):
    raw = {}
    if args.config:
        for key, value in parse_config_file(args.config).items():
            key = _ALIASES.get(key, key)
            if key not in _SWEEP_KEYS:
                raise InputError(f"unknown config key {key!r}")
            raw[key] = value
    for key in _SWEEP_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            raw[key] = flag
    if "theta_deg" in vars(args) and args.theta_deg is not None:
        raw["thetas"] = [math.radians(v) for v in _floats(args.theta_deg)]
    cfg = {}
    try:
        for key, value in raw.items():
            conv = _SWEEP_KEYS[key]
            cfg[key] = value if isinstance(value, list) else conv(value)
    except ValueError as exc:
        raise InputError(f"bad config value: {exc}") from None
    for required in ("family", "thetas", "rhos"):
        if required not in cfg:
            raise InputError(f"missing sweep setting {required!r}")
    threads = cfg.pop("threads", 1)
    try:
        config = SweepConfig(**cfg)
        for theta in config.thetas:
            make_domain(config.family, theta)
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from None
    return config, threads


def run_sweep_to(config, threads, output):
    rows = run_sweep(config, threads=threads)
    buf = io.StringIO()
    write_sweep_csv(rows, buf)
    if output in (None, "-"):
        sys.stdout.write(buf.getvalue())
    else:
        Path(output).write_text(buf.getvalue())
        _write_manifest(manifest_path(output), manifest("sweep", config.as_dict(), config.seed))
    return rows


def cmd_sweep(args):
    config, threads = resolve_sweep_config(args)
    run_sweep_to(config, threads, args.output)
    return EXIT_OK


def _load_rows(path):
    try:
        with open(path, newline="") as fh:
            return read_sweep_csv(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


def _groups(rows, family=None, theta=None):
    groups = {}
    for row in rows:
        if family is not None and row.family != family:
            continue
        if theta is not None and not math.isclose(row.theta, theta, rel_tol=1e-9):
            continue
        groups.setdefault((row.family, row.theta), []).append(row)
    return groups


def cmd_fit(args):
    groups = _groups(_load_rows(args.input), args.family, args.theta)
    if not groups:
        raise InsufficientDataError("no rows in input")
    fitted = 0
    for (family, theta), rows in groups.items():
        d = make_domain(family, theta)
        try:
            fit = fit_stretched_exponential(rows, args.rho_min, args.estimator)
        except InsufficientDataError as exc:
            print(f"F{family}({theta:.12g}): {exc}")
            continue
        fitted += 1
        print(f"F{family}({theta:.12g})  estimator={fit.estimator}  rows={fit.rows_used}  rho_min={fit.rho_min:g}")
        print(f"  beta_hat = {fmt12(fit.beta_hat)} +/- {fmt12(fit.beta_se)}")
        print(f"  a_hat    = {fmt12(fit.a_hat)} +/- {fmt12(fit.a_se)}")
        print(f"  D/2      = {fmt12(d.D / 2)}")
    if not fitted:
        return EXIT_NO_DATA
    return EXIT_OK


def cmd_check(args):
    d = make_domain(args.family, _theta_of(args))
    pairs = scaling_check(_load_rows(args.input), d, args.rel_tol)
    print(f"F{d.n}({d.theta:.12g})  r^-2 = {fmt12(d.r ** -2)}  n = {d.n}")
    print(f"{'rho':>10} {'rho/r^2':>10} {'P(rho/r^2)':>12} {'P(rho)^n':>12}  overlap")
    for p in pairs:
        print(f"{p.rho:10.4g} {p.rho_scaled:10.4g} {p.lhs:12.6g} {p.rhs:12.6g}  {'yes' if p.overlap else 'no'}")
    return EXIT_OK


def cmd_replay(args):
    data = json.loads(Path(args.manifest).read_text())
    cfg = data.get("config") or {}
    command = data.get("command")
    if command == "sweep":
        try:
            config = SweepConfig(**cfg)
        except (TypeError, ValueError) as exc:
            raise InputError(f"bad manifest config: {exc}") from None
        run_sweep_to(config, args.threads, args.output)
    elif command == "sample":
        if not args.output:
            raise InputError("--output DIR is required to replay a sample")
        run_sample(cfg, args.output, data.get("format", "csv"))
    else:
        raise InputError(f"cannot replay command {command!r}")
    return EXIT_OK


# -- parser ----------------------------------------------------------------

def _add_domain_args(p, required=True):
    p.add_argument("--family", type=int, choices=(2, 3), required=required)
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--theta", type=float, help="opening angle in radians")
    g.add_argument("--theta-deg", type=float, help="opening angle in degrees")


def build_parser():
    parser = argparse.ArgumentParser(prog="fraclos", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("info", help="derived constants of a domain")
    _add_domain_args(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("render", help="boundary polyline as SVG or CSV")
    _add_domain_args(p)
    p.add_argument("--level", type=int, default=5)
    p.add_argument("--format", choices=("svg", "csv"), default="svg")
    p.add_argument("--output", "-o")
    p.add_argument("--max-vertices", type=int, default=1_000_000)
    p.add_argument("--nodes", help="nodes CSV from `sample` to overlay (svg only)")
    p.add_argument("--edges", help="edges CSV from `sample` to overlay (svg only)")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("sample", help="one Poisson network and its connectivity report")
    _add_domain_args(p)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--r0", type=float, default=1.0)
    p.add_argument("--max-depth", type=int, default=DEFAULT_MAX_DEPTH)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("sweep", help="P_fc over a density grid")
    p.add_argument("--config", help="key=value file; flags override it")
    p.add_argument("--family", type=int, choices=(2, 3))
    p.add_argument("--thetas", "--theta", dest="thetas", help="comma-separated radians")
    p.add_argument("--theta-deg", help="comma-separated degrees")
    p.add_argument("--rhos", "--rho", dest="rhos", help="comma-separated ascending densities")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--r0", type=float)
    p.add_argument("--max-depth", type=int)
    p.add_argument("--confidence", type=float)
    p.add_argument("--threads", type=int)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", help="fit exp(-a rho^beta) to a sweep CSV")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--rho-min", type=float, default=0.0)
    p.add_argument("--estimator", choices=("p_hat", "isolated"), default="p_hat")
    p.add_argument("--family", type=int, choices=(2, 3))
    p.add_argument("--theta", type=float)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("check", help="compare P(rho/r^2) with P(rho)^n")
    p.add_argument("--input", "-i", required=True)
    _add_domain_args(p)
    p.add_argument("--rel-tol", type=float, default=0.01)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("replay", help="re-run a sweep or sample from its manifest")
    p.add_argument("manifest")
    p.add_argument("--output", "-o")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except VertexBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (InsufficientDataError, NoMatchingPairsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_DATA
    except (GeometryError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
