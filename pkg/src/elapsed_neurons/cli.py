"""Command line front end: ``simulate``, ``analytic``, ``verify``, ``scan`` and ``plot``.

Exit codes: 0 success, 1 verification residual above tolerance, 2 bad
configuration or usage, 3 numerical failure, 4 a periodic family could not
be constructed.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import analysis, analytic
from .model import (AffineThreshold, ConfigError, ConstantThreshold, DomainError, Exponential,
                    InitialDataError, LinearStationary, ModelConfig, PaperThreshold, UnitBlock)
from .solver import NumericalBlowup, run

EXIT_OK = 0
EXIT_RESIDUAL = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_CONSTRUCTION = 4

NUMBER_FORMAT = ".15g"


class ConfigParseError(ValueError):
    def __init__(self, path: str, line: int, column: int, message: str):
        super().__init__(f"{path}:{line}:{column}: {message}")
        self.line = line
        self.column = column


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration files
# ---------------------------------------------------------------------------

NUMERIC_KEYS = {
    "threshold.alpha", "threshold.sigma", "threshold.sigma0", "threshold.slope", "threshold.floor",
    "J", "lambda", "ds", "smax", "tmax",
}
TEXT_KEYS = {"threshold.kind", "init.kind", "snapshots", "out"}
THRESHOLD_KINDS = ("constant", "paper", "affine")
INIT_KINDS = ("block", "exponential", "stationary")


@dataclass
class RunFile:
    config: ModelConfig
    snapshots: Tuple[float, ...]
    out: str


def parse_config_text(text: str, path: str = "<config>") -> Dict[str, object]:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Returns numbers as floats and everything else as stripped strings.
    """
    values: Dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if "=" not in line:
            raise ConfigParseError(path, lineno, len(line.rstrip()) + 1, "expected key=value")
        key_part, value_part = line.split("=", 1)
        key = key_part.strip()
        key_col = len(key_part) - len(key_part.lstrip()) + 1
        value_col = len(key_part) + 2 + len(value_part) - len(value_part.lstrip())
        value = value_part.strip()
        if key not in NUMERIC_KEYS | TEXT_KEYS:
            raise ConfigParseError(path, lineno, key_col, f"unknown key {key!r}")
        if key in values:
            raise ConfigParseError(path, lineno, key_col, f"duplicate key {key!r}")
        if key in NUMERIC_KEYS:
            try:
                number = float(value)
            except ValueError:
                raise ConfigParseError(path, lineno, value_col, f"{key}: not a number: {value!r}") from None
            if not math.isfinite(number):
                raise ConfigParseError(path, lineno, value_col, f"{key}: value must be finite")
            values[key] = number
        elif key == "snapshots":
            try:
                times = tuple(float(x) for x in value.split(",") if x.strip())
            except ValueError:
                raise ConfigParseError(path, lineno, value_col, f"snapshots: bad time list {value!r}") from None
            if not all(math.isfinite(x) and x >= 0 for x in times):
                raise ConfigParseError(path, lineno, value_col, "snapshots: times must be finite and non-negative")
            values[key] = times
        else:
            values[key] = value
    return values


def _threshold_from(values: Dict[str, object]):
    kind = values.get("threshold.kind")
    if kind is None:
        raise ConfigError("threshold.kind is required")
    needed = {"constant": ("threshold.sigma",), "paper": ("threshold.alpha",),
              "affine": ("threshold.sigma0", "threshold.slope", "threshold.floor")}
    if kind not in needed:
        raise ConfigError(f"threshold.kind must be one of {', '.join(THRESHOLD_KINDS)}")
    extra = [k for k in values if k.startswith("threshold.") and k != "threshold.kind" and k not in needed[kind]]
    if extra:
        raise ConfigError(f"{', '.join(extra)} not used by threshold.kind={kind}")
    missing = [k for k in needed[kind] if k not in values]
    if missing:
        raise ConfigError(f"missing {', '.join(missing)}")
    if kind == "constant":
        return ConstantThreshold(values["threshold.sigma"])
    if kind == "paper":
        return PaperThreshold(values["threshold.alpha"])
    return AffineThreshold(values["threshold.sigma0"], values["threshold.slope"], values["threshold.floor"])


def build_run(values: Dict[str, object]) -> RunFile:
    threshold = _threshold_from(values)
    init_kind = values.get("init.kind", "block")
    if init_kind == "block":
        initial = UnitBlock()
    elif init_kind == "exponential":
        initial = Exponential()
    elif init_kind == "stationary":
        if not isinstance(threshold, ConstantThreshold):
            raise ConfigError("init.kind=stationary needs threshold.kind=constant")
        initial = LinearStationary(threshold.sigma)
    else:
        raise ConfigError(f"init.kind must be one of {', '.join(INIT_KINDS)}")
    config = ModelConfig(
        threshold,
        J=values.get("J", 1.0),
        delay=values.get("lambda", 0.0),
        ds=values.get("ds", 1e-3),
        t_max=values.get("tmax", 20.0),
        s_max=values.get("smax"),
        initial=initial,
    )
    return RunFile(config, tuple(values.get("snapshots", ())), str(values.get("out", "run")))


def load_run(path: str) -> RunFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    return build_run(parse_config_text(text, path))


# ---------------------------------------------------------------------------
# CSV and SVG
# ---------------------------------------------------------------------------


def format_number(x: float) -> str:
    return format(float(x), NUMBER_FORMAT)


def _prepared(path) -> Path:
    """Return ``path`` as a Path after creating its parent directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_csv(path: Path, header: Sequence[str], columns: Sequence[Sequence[float]]) -> None:
    rows = zip(*columns)
    with open(_prepared(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_number(v) for v in row) + "\n")


def write_table(path: Optional[Path], header: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    def cell(v):
        return format_number(v) if isinstance(v, (float, np.floating)) else str(v)

    text = ",".join(header) + "\n" + "".join(",".join(cell(v) for v in row) + "\n" for row in rows)
    if path is not None:
        with open(_prepared(path), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text


def read_csv(path: str) -> Tuple[List[str], np.ndarray]:
    try:
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read CSV {path}: {exc}") from None
    if data.size and data.shape[1] != len(header):
        raise UsageError(f"{path}: {data.shape[1]} columns but header has {len(header)}")
    return header, data


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _nice_ticks(lo: float, hi: float, count: int = 5) -> np.ndarray:
    if hi <= lo:
        return np.array([lo])
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step - 1e-9) * step
    return np.arange(start, hi + 1e-9 * step, step)


def render_svg(x: np.ndarray, series: Dict[str, np.ndarray], x_label: str = "",
               width: int = 720, height: int = 400) -> str:
    """Line plot with axes, tick labels and one polyline per series (legend if several)."""
    left, right, top, bottom = 60, 20, 20, 45
    pw, ph = width - left - right, height - top - bottom
    ys = np.concatenate([np.asarray(v, dtype=float) for v in series.values()]) if series else np.zeros(1)
    x0, x1 = float(np.min(x)), float(np.max(x))
    y0, y1 = float(np.min(ys)), float(np.max(ys))
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def px(v):
        return left + (v - x0) / (x1 - x0) * pw

    def py(v):
        return top + (y1 - v) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<g class="axes" stroke="black" stroke-width="1">'
           f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}"/>'
           f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}"/></g>']
    ticks = ['<g class="ticks" font-family="sans-serif" font-size="11">']
    for tx in _nice_ticks(x0, x1):
        ticks.append(f'<line x1="{px(tx):.2f}" y1="{top + ph}" x2="{px(tx):.2f}" y2="{top + ph + 4}" stroke="black"/>'
                     f'<text x="{px(tx):.2f}" y="{top + ph + 16}" text-anchor="middle">{tx:.6g}</text>')
    for ty in _nice_ticks(y0, y1):
        ticks.append(f'<line x1="{left - 4}" y1="{py(ty):.2f}" x2="{left}" y2="{py(ty):.2f}" stroke="black"/>'
                     f'<text x="{left - 6}" y="{py(ty) + 4:.2f}" text-anchor="end">{ty:.6g}</text>')
    ticks.append("</g>")
    out.extend(ticks)
    if x_label:
        out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 8}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="12">{x_label}</text>')
    for i, (name, y) in enumerate(series.items()):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline class="series" data-name="{name}" fill="none" stroke="{color}" '
                   f'stroke-width="1.2" points="{pts}"/>')
    if len(series) > 1:
        out.append('<g class="legend" font-family="sans-serif" font-size="12">')
        for i, name in enumerate(series):
            y = top + 12 + 16 * i
            color = _PALETTE[i % len(_PALETTE)]
            out.append(f'<line x1="{left + pw - 70}" y1="{y}" x2="{left + pw - 50}" y2="{y}" stroke="{color}" stroke-width="2"/>'
                       f'<text x="{left + pw - 45}" y="{y + 4}">{name}</text>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _classify_window(config: ModelConfig, duration: float) -> float:
    return min(max(4.0 * config.threshold.sigma_plus, 5.0), duration / 3.0)


def cmd_simulate(args) -> int:
    spec = load_run(args.config)
    prefix = args.out or spec.out
    trace = run(spec.config, spec.snapshots)
    base = Path(prefix)
    if base.parent != Path("."):
        base.parent.mkdir(parents=True, exist_ok=True)
    write_csv(Path(f"{prefix}_trace.csv"), ("t", "N", "X", "mass"), (trace.t, trace.N, trace.X, trace.mass))
    for ts, (s, n) in sorted(trace.snapshots.items()):
        write_csv(Path(f"{prefix}_snapshot_{format_number(ts)}.csv"), ("s", "n"), (s, n))
    duration = trace.t[-1] - trace.t[0] if len(trace) else 0.0
    lines = [f"steps={len(trace) - 1} dt={format_number(trace.dt)} t_max={format_number(spec.config.t_max)}"]
    if duration > 0:
        window = _classify_window(spec.config, duration)
        report = analysis.classify_trace(trace, window, args.tol, sigma_plus=spec.config.threshold.sigma_plus)
        lines.append(report.summary())
        lines.append(f"window={format_number(window)} tol={format_number(args.tol)}")
    else:
        lines.append("classification=Undetermined reason=empty run")
    lines.append(f"N_final={format_number(trace.N[-1])} max_mass_error={abs(trace.mass - 1).max():.3e}")
    text = "\n".join(lines) + "\n"
    _prepared(f"{prefix}_report.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def _build_profile(kind: str, alpha: float, p: Optional[float], strict: bool = True):
    if kind == "one":
        return analytic.build_class_one(alpha)
    if p is None:
        raise UsageError(f"class {kind} needs --p")
    if kind == "two":
        return analytic.build_class_two(alpha, p, strict=strict)
    return analytic.build_class_flat(alpha, p)


def _report_lines(profile, report) -> List[str]:
    lines = [f"class={profile.kind} period={format_number(profile.period)} jumps={len(profile.jump_times)}",
             f"mass_residual={report.mass_residual:.3e}",
             f"boundary_residual={report.boundary_residual:.3e}",
             f"root_residual={report.root_residual:.3e}"]
    for key, value in profile.params.items():
        lines.append(f"param.{key}={format_number(value)}")
    for key, value in report.paper_crosscheck.items():
        if key in ("kind", "alpha", "p"):
            continue
        if isinstance(value, tuple):
            value = "[" + ",".join(format_number(v) for v in value) + "]"
        elif isinstance(value, float):
            value = format_number(value)
        lines.append(f"crosscheck.{key}={value}")
    return lines


def cmd_analytic(args) -> int:
    profile = _build_profile(args.kind, args.alpha, args.p, strict=not args.allow_inadmissible)
    t = np.arange(args.samples) * profile.period / args.samples
    N = analytic.eval_profile(profile, t)
    report = analytic.verification_report(profile, n_samples=args.verify_samples)
    out = args.out or f"profile_{args.kind}"
    write_csv(Path(f"{out}.csv"), ("t", "N"), (t, N))
    lines = _report_lines(profile, report)
    lines.insert(1, f"min={format_number(N.min())} max={format_number(N.max())}")
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    profile = _build_profile(args.kind, args.alpha, args.p, strict=not args.allow_inadmissible)
    if args.corrupt is not None:
        profile = profile.scaled(args.corrupt)
    report = analytic.verification_report(profile, n_samples=args.samples)
    ok = report.ok(args.tol)
    lines = _report_lines(profile, report) + [f"tolerance={args.tol:.3e}", "status=" + ("ok" if ok else "FAILED")]
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK if ok else EXIT_RESIDUAL


def cmd_scan(args) -> int:
    spec = load_run(args.config)
    if args.values:
        try:
            values = [float(v) for v in args.values.split(",") if v.strip()]
        except ValueError:
            raise UsageError(f"--values: bad number list {args.values!r}") from None
        result = analysis.scan_parameter(spec.config, args.param, values, window=args.window, tol=args.tol,
                                         bisect=args.param == "J")
    else:
        if args.start is None or args.stop is None:
            raise UsageError("give --from and --to, or --values")
        if args.param == "J":
            result = analysis.scan_connectivity(spec.config, args.start, args.stop, args.steps,
                                                window=args.window, tol=args.tol)
        else:
            values = [args.start] if args.steps == 1 else np.linspace(args.start, args.stop, args.steps)
            result = analysis.scan_delay(spec.config, values, window=args.window, tol=args.tol)
    rows = []
    for row in result.rows:
        c = row.report.classification
        period = getattr(c, "period", float("nan"))
        lo = getattr(c, "min", getattr(c, "limit", float("nan")))
        hi = getattr(c, "max", getattr(c, "limit", float("nan")))
        rows.append((float(row.value), row.report.kind, float(period), float(lo), float(hi)))
    text = write_table(Path(args.out) if args.out else None, (args.param, "classification", "period", "min", "max"), rows)
    if not args.out:
        sys.stdout.write(text)
    name = "J*" if args.param == "J" else "lambda*"
    if result.critical is None:
        sys.stdout.write(f"{name}=none\n")
    else:
        lo, hi = result.critical
        state = "resolved" if result.resolved else "unresolved"
        sys.stdout.write(f"{name}=[{format_number(lo)},{format_number(hi)}] {state}\n")
    return EXIT_OK


def cmd_plot(args) -> int:
    header, data = read_csv(args.input)
    if data.size == 0:
        raise UsageError(f"{args.input}: no rows")
    x_name = args.x or header[0]
    wanted = [c.strip() for c in args.columns.split(",")] if args.columns else header[1:2]
    missing = [c for c in [x_name, *wanted] if c not in header]
    if missing:
        raise UsageError(f"{args.input}: no column {', '.join(missing)}; have {', '.join(header)}")
    x = data[:, header.index(x_name)]
    series = {c: data[:, header.index(c)] for c in wanted}
    _prepared(args.output).write_text(render_svg(x, series, x_label=x_name), encoding="utf-8")
    return EXIT_OK


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="elapsed-neurons", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the finite-volume solver from a config file")
    p.add_argument("config")
    p.add_argument("--out", help="output path prefix (overrides the config's out)")
    p.add_argument("--tol", type=float, default=1e-3, help="classification tolerance")
    p.set_defaults(func=cmd_simulate)

    for name, func, help_text in (("analytic", cmd_analytic, "tabulate an explicit periodic activity"),
                                  ("verify", cmd_verify, "check mass and boundary identities of a family")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("kind", choices=("one", "two", "flat"))
        p.add_argument("--alpha", type=float, required=True)
        p.add_argument("--p", type=float)
        p.add_argument("--allow-inadmissible", action="store_true",
                       help="build the two-jump family even when its period is too short to conserve mass")
        if name == "analytic":
            p.add_argument("--samples", type=_positive_int, default=10_000)
            p.add_argument("--verify-samples", type=_positive_int, default=200)
            p.add_argument("--out", help="CSV path without extension")
        else:
            p.add_argument("--samples", type=_positive_int, default=200)
            p.add_argument("--tol", type=float, default=1e-6)
            p.add_argument("--corrupt", type=float, metavar="FACTOR",
                           help="scale the activity by FACTOR before checking (self-test)")
        p.set_defaults(func=func)

    p = sub.add_parser("scan", help="classify runs over a range of J or lambda")
    p.add_argument("config")
    p.add_argument("--param", choices=("J", "lambda"), default="J")
    p.add_argument("--from", dest="start", type=float)
    p.add_argument("--to", dest="stop", type=float)
    p.add_argument("--steps", type=_positive_int, default=20)
    p.add_argument("--values", help="comma separated values instead of a range")
    p.add_argument("--window", type=float)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--out", help="CSV table path (default: stdout)")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("plot", help="SVG line plot of CSV columns")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--columns", help="comma separated column names (default: second column)")
    p.add_argument("--x", help="abscissa column (default: first column)")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ConfigParseError, ConfigError, UsageError, DomainError, InitialDataError,
            analysis.TraceTooShort) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except analytic.ConstructionError as exc:
        print(f"construction failed: {exc}", file=sys.stderr)
        for key, value in exc.diagnostic.items():
            print(f"  {key}: {value}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    except (NumericalBlowup, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
