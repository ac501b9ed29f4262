"""Transmission sweeps, symmetry checks, suppression bands, and peaks.

A sweep evaluates |T(kl)|^2 on a uniform grid.  Inside wide bands where the
transmission is suppressed, chained cycle graphs develop very narrow
resonances of full transmission; the detectors here locate those bands by
interval arithmetic on the grid and then refine each peak against the
solver itself (golden-section for the center, bisection for the half-height
crossings), since the interesting widths are only a few grid steps wide.
"""

from __future__ import annotations

import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .graphs import QuantumGraph
from .solver import scattering_or_limit, solve_many

DEFAULT_BAND_FLOOR = 0.01
FULL_TRANSMISSION_HEIGHT = 0.999
REFINE_TOL = 1e-9

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class Sweep:
    """Uniform-grid transmission data with the graph it came from."""

    graph: QuantumGraph
    kl: np.ndarray
    t: np.ndarray
    r: np.ndarray
    resolution: float

    def __post_init__(self):
        kl = np.asarray(self.kl, dtype=float)
        if kl.ndim != 1 or len(kl) < 2 or not np.all(np.diff(kl) > 0):
            raise ValueError("sweep grid must be 1-D and strictly increasing")
        for name in ("kl", "t", "r"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def t2(self) -> np.ndarray:
        return np.abs(self.t) ** 2

    @property
    def r2(self) -> np.ndarray:
        return np.abs(self.r) ** 2


@dataclass(frozen=True)
class PeakReport:
    """One resonance: solver-refined center/height, FWHM, enclosing band."""

    center: float
    height: float
    width: float
    band: tuple

    @property
    def is_full_transmission(self) -> bool:
        return self.height >= FULL_TRANSMISSION_HEIGHT


def sweep_transmission(
    graph: QuantumGraph,
    kl_min: float,
    kl_max: float,
    samples: int,
    threads: int | None = None,
) -> Sweep:
    """Evaluate the two-port amplitudes on a uniform inclusive grid.

    Grid points where the solve came back non-finite or visibly non-unitary
    (on-shell singularities) are re-evaluated by the two-sided limit policy.
    ``threads`` splits the grid into contiguous blocks solved concurrently;
    results are written by index, so the output never depends on scheduling.
    """
    if not (0 < kl_min < kl_max):
        raise ValueError(f"need 0 < kl_min < kl_max, got {kl_min!r}, {kl_max!r}")
    if samples < 2:
        raise ValueError(f"samples must be >= 2, got {samples!r}")
    grid = np.linspace(kl_min, kl_max, int(samples))

    nthreads = max(1, int(threads or 1))
    if nthreads == 1 or len(grid) < 4 * nthreads:
        t, r = solve_many(graph, grid)
    else:
        t = np.empty(len(grid), dtype=complex)
        r = np.empty(len(grid), dtype=complex)
        blocks = np.array_split(np.arange(len(grid)), nthreads)
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            futures = [
                (idx, pool.submit(solve_many, graph, grid[idx])) for idx in blocks
            ]
            for idx, fut in futures:
                t[idx], r[idx] = fut.result()

    unitary_defect = np.abs(np.abs(t) ** 2 + np.abs(r) ** 2 - 1.0)
    bad = ~np.isfinite(t) | ~np.isfinite(r) | (unitary_defect > 1e-6)
    for i in np.nonzero(bad)[0]:
        res = scattering_or_limit(graph, float(grid[i]))
        t[i], r[i] = res.t_global, res.r_global

    t2max = float(np.max(np.abs(t) ** 2))
    if not np.isfinite(t2max) or t2max > 1.0 + 1e-9:
        raise ArithmeticError(
            f"sweep produced |T|^2 up to {t2max}; singularities were not resolved"
        )
    resolution = float(grid[1] - grid[0])
    return Sweep(graph=graph, kl=grid, t=t, r=r, resolution=resolution)


def check_reflection_symmetry(sweep: Sweep) -> float:
    """Max over mirror pairs of | |T(pi+x)|^2 - |T(pi-x)|^2 |.

    The grid must itself be symmetric about kl = pi (each point pairs with
    its mirror); asymmetric grids are rejected instead of silently
    interpolated.
    """
    kl = sweep.kl
    mismatch = np.max(np.abs((kl + kl[::-1]) - 2.0 * np.pi))
    if mismatch > 1e-9:
        raise ValueError(
            f"sweep grid is not symmetric about pi (mismatch {mismatch:.3e})"
        )
    t2 = sweep.t2
    return float(np.max(np.abs(t2 - t2[::-1])))


def detect_suppression_bands(sweep: Sweep, floor: float = DEFAULT_BAND_FLOOR):
    """Maximal intervals where |T|^2 stays below the floor, peaks excluded.

    Grid runs below the floor become intervals; an above-floor gap between
    two neighboring intervals is absorbed when it is narrower than their
    combined below-floor width, so narrow resonances do not split a band
    while genuinely transmitting regions do.  Returns a list of
    (kl_low, kl_high) pairs.
    """
    if not (0.0 < floor < 1.0):
        raise ValueError(f"floor must be in (0, 1), got {floor!r}")
    below = sweep.t2 < floor
    kl = sweep.kl

    clusters = []  # [lo, hi, total below-floor width]
    i = 0
    n = len(below)
    while i < n:
        if below[i]:
            j = i
            while j + 1 < n and below[j + 1]:
                j += 1
            clusters.append([kl[i], kl[j], kl[j] - kl[i]])
            i = j + 1
        else:
            i += 1

    merged = True
    while merged:
        merged = False
        for i in range(len(clusters) - 1):
            cur, nxt = clusters[i], clusters[i + 1]
            gap = nxt[0] - cur[1]
            if gap < cur[2] + nxt[2]:
                clusters[i:i + 2] = [[cur[0], nxt[1], cur[2] + nxt[2]]]
                merged = True
                break

    return [(float(lo), float(hi)) for lo, hi, _ in clusters]


def _golden_max(f, a: float, b: float, tol: float = REFINE_TOL):
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def _bisect_crossing(f, inside: float, outside: float, level: float,
                     tol: float = REFINE_TOL) -> float:
    """Point where f crosses the level, given f(inside) > level >= f(outside)."""
    while abs(outside - inside) > tol:
        mid = 0.5 * (inside + outside)
        if f(mid) > level:
            inside = mid
        else:
            outside = mid
    return 0.5 * (inside + outside)


def detect_peaks(sweep: Sweep, min_height: float = 0.99):
    """Solver-refined transmission peaks inside the suppression bands.

    Grid-level local maxima inside each band seed a golden-section
    maximization of the solver's |T|^2 between the neighboring grid points
    (centers to 1e-9); the full width at half maximum comes from marching to
    the half-height crossings and bisecting them to 1e-9.  Peaks whose
    refined height stays below ``min_height`` are dropped.  Heights are
    always direct solver evaluations, never grid interpolations.
    """
    if not (0.0 < min_height <= 1.0):
        raise ValueError(f"min_height must be in (0, 1], got {min_height!r}")
    graph = sweep.graph
    kl, t2 = sweep.kl, sweep.t2
    bands = detect_suppression_bands(sweep)

    def f(x: float) -> float:
        return scattering_or_limit(graph, x).t2

    reports = []
    for lo, hi in bands:
        sel = np.nonzero((kl >= lo) & (kl <= hi))[0]
        for i in sel:
            if i == 0 or i == len(kl) - 1:
                continue
            if not (t2[i] > t2[i - 1] and t2[i] >= t2[i + 1]):
                continue
            # Refinement recovers the true height of undersampled peaks, so
            # the grid filter stays deliberately loose.
            if t2[i] < 0.5 * min_height:
                continue
            center, height = _golden_max(f, float(kl[i - 1]), float(kl[i + 1]))
            if height < min_height:
                continue
            if reports and abs(center - reports[-1].center) < 0.5 * sweep.resolution \
                    and reports[-1].band == (lo, hi):
                continue

            half = 0.5 * height
            step = sweep.resolution
            left = center
            while f(left) > half and left > kl[0]:
                left = max(kl[0], left - step)
            right = center
            while f(right) > half and right < kl[-1]:
                right = min(kl[-1], right + step)
            x_left = _bisect_crossing(f, min(center, left + step), left, half)
            x_right = _bisect_crossing(f, max(center, right - step), right, half)
            reports.append(
                PeakReport(
                    center=center,
                    height=height,
                    width=x_right - x_left,
                    band=(lo, hi),
                )
            )
    return reports


# ---------------------------------------------------------------------------
# Exports.  All numbers are written with 17 significant digits so files
# round-trip exactly, and writes go through a temp file plus rename.
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sweep_to_csv(sweep: Sweep) -> str:
    lines = ["kl,re_t,im_t,t2,r2"]
    t2, r2 = sweep.t2, sweep.r2
    for i in range(len(sweep.kl)):
        lines.append(
            ",".join(
                _fmt(v)
                for v in (
                    sweep.kl[i], sweep.t[i].real, sweep.t[i].imag, t2[i], r2[i],
                )
            )
        )
    return "\n".join(lines) + "\n"


def write_sweep_csv(sweep: Sweep, path: str) -> None:
    atomic_write_text(path, sweep_to_csv(sweep))


def peaks_to_json(peaks) -> str:
    rows = []
    for p in peaks:
        rows.append(
            "  {"
            + f'"center": {_fmt(p.center)}, "height": {_fmt(p.height)}, '
            + f'"fwhm": {_fmt(p.width)}, '
            + f'"band": [{_fmt(p.band[0])}, {_fmt(p.band[1])}]'
            + "}"
        )
    return "[\n" + ",\n".join(rows) + "\n]\n" if rows else "[]\n"


def write_peaks_json(peaks, path: str) -> None:
    atomic_write_text(path, peaks_to_json(peaks))
