"""Regime classification, period estimation and stability diagnostics.

All functions take an :class:`~elapsed_neurons.solver.ActivityTrace` (or
anything with uniformly spaced ``t`` and ``N`` arrays) and never modify it.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .analytic import steady_state_nonlinear
from .model import ModelConfig, ThresholdSpec
from .solver import ActivityTrace, run

__all__ = [
    "TraceTooShort", "Converged", "Periodic", "Undetermined", "RegimeReport", "JumpEvent",
    "DesyncCertificate", "ConvergenceReport", "FluxReport", "ScanRow", "ScanResult",
    "detect_jumps", "classify_trace", "estimate_period", "desync_certificate", "crossing_check",
    "convergence_rate", "flux_residual", "threshold_velocity", "scan_parameter",
    "scan_connectivity", "scan_delay", "trace_from_samples", "worker_count",
]

#: Jump steps closer than this (in time) belong to one discharge event.
MERGE_GAP = 0.1
PERIOD_SPREAD = 0.02
MAX_PATTERN = 6


class TraceTooShort(ValueError):
    pass


@dataclass(frozen=True)
class Converged:
    limit: float
    rate: float
    saturated: bool = False
    name = "Converged"


@dataclass(frozen=True)
class Periodic:
    period: float
    jumps: int
    min: float
    max: float
    name = "Periodic"


@dataclass(frozen=True)
class Undetermined:
    reason: str = ""
    name = "Undetermined"


@dataclass(frozen=True)
class RegimeReport:
    classification: object
    window: float
    tol: float

    @property
    def kind(self) -> str:
        return self.classification.name

    def summary(self) -> str:
        c = self.classification
        if isinstance(c, Converged):
            rate = "saturated" if c.saturated else f"{c.rate:.6g}"
            return f"classification=Converged limit={c.limit:.6g} rate={rate}"
        if isinstance(c, Periodic):
            return (f"classification=Periodic period={c.period:.6g} jumps={c.jumps} "
                    f"min={c.min:.6g} max={c.max:.6g}")
        return f"classification=Undetermined reason={c.reason}"


@dataclass(frozen=True)
class JumpEvent:
    t: float
    amplitude: float


def trace_from_samples(t: Sequence[float], N: Sequence[float]) -> ActivityTrace:
    """Wrap uniformly spaced samples (for example of an analytic profile) as a trace."""
    t = np.asarray(t, dtype=float)
    N = np.asarray(N, dtype=float)
    dt = float(t[1] - t[0]) if len(t) > 1 else 0.0
    ones = np.ones_like(N)
    return ActivityTrace(t, N, N.copy(), ones, np.zeros_like(N), dt)


def _post_transient(trace: ActivityTrace, sigma_plus: Optional[float]) -> ActivityTrace:
    skip = 5.0 if sigma_plus is None else max(2.0 * sigma_plus, 5.0)
    return trace.window(trace.t[0] + skip)


def detect_jumps(trace: ActivityTrace, threshold: float, merge_gap: float = MERGE_GAP) -> List[JumpEvent]:
    """Group steps with ``|N^{k+1} - N^k| > threshold`` into discharge events.

    Consecutive jump steps less than ``merge_gap`` apart form one event,
    timed at its first step; the amplitude is the net change over the event.
    """
    dN = np.diff(trace.N)
    idx = np.nonzero(np.abs(dN) > threshold)[0]
    events: List[JumpEvent] = []
    if len(idx) == 0:
        return events
    start = prev = idx[0]
    for i in list(idx[1:]) + [None]:
        if i is not None and trace.t[i] - trace.t[prev] < merge_gap:
            prev = i
            continue
        events.append(JumpEvent(float(trace.t[start]), float(trace.N[prev + 1] - trace.N[start])))
        if i is not None:
            start = prev = i
    return events


def _pattern(events: List[JumpEvent], tol: float):
    """Smallest ``k`` such that events recur every ``k`` with consistent times and amplitudes.

    Leading events may be dropped as a longer transient, but at least half
    of them must take part in the pattern.  Returns ``(k, recurrence
    intervals, first event used)`` or ``None``.
    """
    times = np.array([e.t for e in events])
    amps = np.array([e.amplitude for e in events])
    n = len(events)
    for k in range(1, MAX_PATTERN + 1):
        for start in range(0, n // 2 + 1):
            t, a = times[start:], amps[start:]
            if len(t) - k < 3:
                break
            rec = t[k:] - t[:-k]
            med = float(np.median(rec))
            if med <= 0 or (rec.max() - rec.min()) / med > PERIOD_SPREAD:
                continue
            same_sign = np.all(np.sign(a[k:]) == np.sign(a[:-k]))
            close = np.all(np.abs(a[k:] - a[:-k]) <= 0.1 * np.abs(a[:-k]) + 10 * tol)
            if same_sign and close:
                return k, rec, start
    return None


def _autocorr_period(trace: ActivityTrace, guess: float) -> Optional[float]:
    """Lag of the autocorrelation maximum within ``[0.8, 1.2] * guess``."""
    x = trace.N - trace.N.mean()
    n = len(x)
    lo, hi = int(math.floor(0.8 * guess / trace.dt)), int(math.ceil(1.2 * guess / trace.dt))
    if hi + 2 >= n or lo < 1:
        return None
    size = 1 << int(math.ceil(math.log2(2 * n)))
    spec = np.fft.rfft(x, size)
    acf = np.fft.irfft(spec * np.conj(spec), size)[:n]
    acf = acf / (n - np.arange(n))
    j = lo + int(np.argmax(acf[lo:hi + 1]))
    if j <= lo or j >= hi:
        return None
    # parabolic refinement of the peak
    y0, y1, y2 = acf[j - 1], acf[j], acf[j + 1]
    denom = y0 - 2 * y1 + y2
    shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
    return (j + shift) * trace.dt


def _periodic_or_reason(trace: ActivityTrace, tol: float):
    events = detect_jumps(trace, 10 * tol)
    if len(events) < 4:
        return None, f"only {len(events)} jumps after the transient"
    pat = _pattern(events, tol)
    if pat is None:
        return None, "jump times do not recur with a consistent period"
    k, rec, start = pat
    return (k, rec, events[start:]), ""


def estimate_period(trace: ActivityTrace, tol: float = 1e-3, sigma_plus: Optional[float] = None) -> Optional[float]:
    """Median recurrence time of the dominant (largest) jump of the pattern.

    Returns ``None`` when no periodic jump pattern exists or the
    autocorrelation peak disagrees by more than 2%.
    """
    post = _post_transient(trace, sigma_plus)
    found, _ = _periodic_or_reason(post, tol)
    if found is None:
        return None
    k, rec, events = found
    amps = np.array([abs(e.amplitude) for e in events])
    dominant = int(np.argmax(amps[:k]))
    period = float(np.median(rec[dominant::k]))
    acf = _autocorr_period(post, period)
    if acf is None or abs(acf - period) > PERIOD_SPREAD * period:
        return None
    return period


def classify_trace(trace: ActivityTrace, window: float, tol: float = 1e-3,
                   sigma_plus: Optional[float] = None) -> RegimeReport:
    """Converged, Periodic or Undetermined, judged after the transient.

    The transient ``t < max(2 sigma_plus, 5)`` is ignored (``5`` when
    ``sigma_plus`` is not given).
    """
    duration = trace.t[-1] - trace.t[0] if len(trace) else 0.0
    if not duration >= 3 * window:
        raise TraceTooShort(f"trace lasts {duration:.6g}, need at least 3 * window = {3 * window:.6g}")
    post = _post_transient(trace, sigma_plus)
    if len(post) < 3:
        return RegimeReport(Undetermined("nothing left after the transient"), window, tol)
    tail = post.window(post.t[-1] - window)
    if tail.N.max() - tail.N.min() <= tol:
        limit = float(tail.N.mean())
        conv = convergence_rate(post, limit)
        return RegimeReport(Converged(limit, conv.rate, conv.saturated), window, tol)

    found, reason = _periodic_or_reason(post, tol)
    if found is None:
        return RegimeReport(Undetermined(reason), window, tol)
    k, rec, events = found
    period = estimate_period(trace, tol, sigma_plus)
    if period is None:
        return RegimeReport(Undetermined("autocorrelation disagrees with jump recurrence"), window, tol)
    span = post.window(post.t[-1] - max(window, 2 * period))
    return RegimeReport(Periodic(period, k, float(span.N.min()), float(span.N.max())), window, tol)


# ---------------------------------------------------------------------------
# convergence diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DesyncCertificate:
    m: float
    N_bar: float
    sigma_plus: float
    condition: float
    holds: bool
    factor: float


def desync_certificate(spec: ThresholdSpec, J: float = 1.0) -> DesyncCertificate:
    """Sufficient condition ``sigma+ < 1 - m N_bar`` with ``m = J * lipschitz < 1``."""
    m = J * spec.lipschitz
    N_bar = steady_state_nonlinear(spec, J)
    cond = 1.0 - m * N_bar
    holds = spec.sigma_plus < cond and m < 1
    factor = spec.sigma_plus / cond if cond > 0 else math.inf
    return DesyncCertificate(m, N_bar, spec.sigma_plus, cond, bool(holds), factor)


@dataclass(frozen=True)
class ConvergenceReport:
    rate: float
    saturated: bool
    # sup |N - level| over consecutive windows of length sigma
    window_sups: Tuple[float, ...] = ()

    def ratios(self) -> np.ndarray:
        a = np.asarray(self.window_sups)
        with np.errstate(divide="ignore", invalid="ignore"):
            return a[1:] / a[:-1]


SATURATION = 1e-12
ROUNDING_FLOOR = 1e-10


def convergence_rate(trace: ActivityTrace, level: float, sigma: Optional[float] = None,
                     blocks: int = 50) -> ConvergenceReport:
    """Exponential decay rate of ``|N - level|`` and per-window sup errors.

    The rate is minus the least-squares slope of ``log`` of block-wise
    maxima, so zero crossings do not spoil the fit.  The fit uses the
    trailing half of the blocks before the error first reaches the rounding
    floor (``1e-10``); later samples carry no information about the rate.  When every error is below ``1e-12`` or
    fewer than three blocks remain the rate is reported as saturated (``0``).
    """
    err = np.abs(trace.N - level)
    sups: Tuple[float, ...] = ()
    if sigma is not None:
        idx = np.floor((trace.t - trace.t[0]) / sigma + 1e-9).astype(int)
        n_win = int(idx.max()) + 1
        sups = tuple(float(err[idx == n].max()) for n in range(n_win) if np.any(idx == n))
    if len(err) < 3 or err.max() < SATURATION:
        return ConvergenceReport(0.0, True, sups)
    n_blocks = min(2 * blocks, len(err))
    chunks = np.array_split(np.arange(len(err)), n_blocks)
    bt = np.array([trace.t[c].mean() for c in chunks])
    be = np.array([err[c].max() for c in chunks])
    below = np.nonzero(be <= ROUNDING_FLOOR)[0]
    last = int(below[0]) if len(below) else len(be)
    sel = np.arange(last // 2, last)
    if len(sel) < 3:
        return ConvergenceReport(0.0, True, sups)
    slope = np.polyfit(bt[sel], np.log(be[sel]), 1)[0]
    return ConvergenceReport(float(-slope), False, sups)


def crossing_check(trace: ActivityTrace, level: float, sigma: float, t_from: Optional[float] = None,
                   t_to: Optional[float] = None, tol: Optional[float] = None) -> bool:
    """True iff every window of length ``sigma`` in ``[t_from, t_to]`` meets ``N = level``.

    A sample meets the level when ``|N - level| <= tol`` (default ``5 dt``)
    or when the sign of ``N - level`` changes before the next sample.
    """
    part = trace.window(sigma if t_from is None else t_from, t_to)
    if len(part) < 2:
        return False
    tol = 5 * trace.dt if tol is None else tol
    d = part.N - level
    hit = np.abs(d) <= tol
    hit[:-1] |= np.sign(d[:-1]) * np.sign(d[1:]) < 0
    times = part.t[hit]
    if len(times) == 0:
        return False
    gaps = np.diff(np.concatenate([[part.t[0]], times, [part.t[-1]]]))
    return bool(gaps.max() <= sigma + trace.dt * (1 + 1e-9))


# ---------------------------------------------------------------------------
# flux identity and threshold velocity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FluxReport:
    residual: float
    max_velocity: float
    flagged: bool
    samples: int


def _smooth_derivative(t: np.ndarray, N: np.ndarray, jump_tol: float):
    """Centered differences at interior samples whose neighbors are not across a jump."""
    dt = t[1] - t[0]
    d = np.diff(N)
    ok = (np.abs(d[:-1]) <= jump_tol) & (np.abs(d[1:]) <= jump_tol)
    idx = np.nonzero(ok)[0] + 1
    return idx, (N[idx + 1] - N[idx - 1]) / (2 * dt)


def threshold_velocity(t, N, spec: ThresholdSpec, J: float = 1.0, jump_tol: float = 1e-2):
    """``dN/dt * d/dx sigma(J x)`` at smooth samples; returns ``(times, velocities)``."""
    t = np.asarray(t, dtype=float)
    N = np.asarray(N, dtype=float)
    idx, dN = _smooth_derivative(t, N, jump_tol)
    v = dN * J * spec.derivative(J * N[idx])
    return t[idx], v


def flux_residual(trace: ActivityTrace, spec: ThresholdSpec, J: float = 1.0,
                  jump_tol: float = 1e-2, flag_tol: float = 1e-6) -> FluxReport:
    """Residual of ``N' (1 + sigma'(N) n(sigma(N), t)) + N - n(sigma(N), t)`` at the snapshots.

    ``n`` at the threshold is interpolated linearly between cell centers.
    Velocities ``N' sigma'(N)`` are taken over the whole trace and flagged
    when they reach one.
    """
    idx_all, dN_all = _smooth_derivative(trace.t, trace.N, jump_tol)
    deriv = dict(zip(idx_all.tolist(), dN_all.tolist()))
    worst = 0.0
    used = 0
    for ts, (s, n) in sorted(trace.snapshots.items()):
        k = int(round((ts - trace.t[0]) / trace.dt))
        if k not in deriv:
            continue
        N_k = trace.N[k]
        x = J * N_k
        slope = J * spec.derivative(x)
        n_sig = float(np.interp(spec(x), s, n))
        r = deriv[k] * (1.0 + slope * n_sig) + N_k - n_sig
        worst = max(worst, abs(r))
        used += 1
    _, v = threshold_velocity(trace.t, trace.N, spec, J, jump_tol)
    vmax = float(v.max()) if len(v) else 0.0
    return FluxReport(worst, vmax, vmax >= 1.0 - flag_tol, used)


# ---------------------------------------------------------------------------
# parameter scans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScanRow:
    value: float
    report: RegimeReport
    max_mass_error: float = 0.0


@dataclass
class ScanResult:
    param: str
    rows: List[ScanRow]
    # (lo, hi) bracketing the change from Converged to Periodic
    critical: Optional[Tuple[float, float]] = None
    resolved: bool = False
    bisection: List[ScanRow] = field(default_factory=list)

    @property
    def critical_mid(self) -> Optional[float]:
        return None if self.critical is None else 0.5 * sum(self.critical)


def worker_count() -> int:
    env = os.environ.get("ELAPSED_NEURONS_THREADS")
    if env:
        return max(1, int(env))
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:  # pragma: no cover - non-Linux
        return os.cpu_count() or 1


def _with_param(base: ModelConfig, param: str, value: float) -> ModelConfig:
    if param == "J":
        return base.replace(J=value)
    if param in ("lambda", "delay"):
        return base.replace(delay=value)
    raise ValueError(f"unknown scan parameter {param!r}")


def _classify_run(base: ModelConfig, param: str, value: float, window: float, tol: float) -> ScanRow:
    config = _with_param(base, param, value)
    trace = run(config)
    report = classify_trace(trace, window, tol, sigma_plus=config.threshold.sigma_plus)
    return ScanRow(value, report, float(np.abs(trace.mass - 1.0).max()))


def _run_many(base, param, values, window, tol, workers):
    if workers <= 1 or len(values) <= 1:
        return [_classify_run(base, param, v, window, tol) for v in values]
    n = len(values)
    with ProcessPoolExecutor(max_workers=min(workers, n)) as pool:
        # map preserves input order whatever the completion order
        return list(pool.map(_classify_run, [base] * n, [param] * n, values, [window] * n, [tol] * n))


def _default_window(base: ModelConfig) -> float:
    return max(4.0 * base.threshold.sigma_plus, 10.0)


def scan_parameter(base: ModelConfig, param: str, values: Sequence[float], window: Optional[float] = None,
                   tol: float = 1e-3, width: float = 0.05, workers: Optional[int] = None,
                   bisect: bool = True) -> ScanResult:
    """Classify one run per value; bisect the first Converged/Periodic boundary.

    The boundary is refined until its bracket is at most ``width`` wide.
    An Undetermined midpoint stops the refinement and the bracket is
    returned unresolved.
    """
    window = _default_window(base) if window is None else window
    workers = worker_count() if workers is None else workers
    values = [float(v) for v in values]
    rows = _run_many(base, param, values, window, tol, workers)
    result = ScanResult(param, rows)
    for left, right in zip(rows, rows[1:]):
        kinds = {left.report.kind, right.report.kind}
        if kinds == {"Converged", "Periodic"}:
            break
    else:
        return result
    lo, hi = left.value, right.value
    lo_kind = left.report.kind
    resolved = True
    while bisect and abs(hi - lo) > width:
        mid = 0.5 * (lo + hi)
        row = _classify_run(base, param, mid, window, tol)
        result.bisection.append(row)
        if row.report.kind == "Undetermined":
            resolved = False
            break
        if row.report.kind == lo_kind:
            lo = mid
        else:
            hi = mid
    result.critical = (min(lo, hi), max(lo, hi))
    result.resolved = resolved and abs(hi - lo) <= width
    return result


def scan_connectivity(base: ModelConfig, J_min: float, J_max: float, steps: int, **kwargs) -> ScanResult:
    """Scan ``J`` over ``steps`` evenly spaced values in ``[J_min, J_max]``."""
    if J_min > J_max:
        raise ValueError("need J_min <= J_max")
    if steps < 1:
        raise ValueError("steps must be positive")
    values = [J_min] if J_min == J_max or steps == 1 else np.linspace(J_min, J_max, steps)
    return scan_parameter(base, "J", values, **kwargs)


def scan_delay(base: ModelConfig, delays: Sequence[float], **kwargs) -> ScanResult:
    """Classify runs for each synaptic relaxation time; no bisection."""
    kwargs.setdefault("bisect", False)
    return scan_parameter(base, "lambda", delays, **kwargs)
