"""Stability maps over the (omega, h1) plane and resonance bookkeeping."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import logging
import os
from typing import Iterable, Sequence, TextIO

import numpy as np

from .chain import DEFAULT_STEPS, ChainSpec, gauge_product, hermitian_propagator, stationary_spectrum
from .numerics import eigvals_stack
from .perturbation import coupling_matrix

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 1e-6
WORKERS_ENV = "IMGAUGE_WORKERS"
FAMILIES = ("square", "sin")
CSV_HEADER = "omega_over_kappa,h1,max_im_quasienergy_over_kappa,unstable"
# (omega_min, omega_max, count), (h1_min, h1_max, count)
DEFAULT_OMEGA_AXIS = (0.2, 5.0, 400)
DEFAULT_H1_AXIS = (0.0, 1.0, 200)
PRESET_SIZES = (3, 10, 20, 50)


@dataclass
class TongueGrid:
    omega_axis: np.ndarray
    h1_axis: np.ndarray
    measure: np.ndarray  # (len(omega_axis), len(h1_axis)), max |Im E| / kappa
    threshold: float = DEFAULT_THRESHOLD
    nan_count: int = 0
    # |sum Im E| / kappa per cell; exactly zero in exact arithmetic
    imbalance: np.ndarray | None = None

    @property
    def flags(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            return self.measure > self.threshold

    @property
    def unreliable(self) -> np.ndarray:
        """Cells whose rounding error (seen as ``imbalance``) reaches the threshold."""
        if self.imbalance is None:
            return np.zeros(self.measure.shape, dtype=bool)
        with np.errstate(invalid="ignore"):
            return self.imbalance > self.threshold

    def csv_lines(self) -> Iterable[str]:
        yield CSV_HEADER
        flags = self.flags
        for i, w in enumerate(self.omega_axis):
            for j, h in enumerate(self.h1_axis):
                yield f"{float(w)!r},{float(h)!r},{float(self.measure[i, j])!r},{int(flags[i, j])}"

    def write_csv(self, fh: TextIO) -> None:
        for line in self.csv_lines():
            fh.write(line + "\n")


@dataclass(frozen=True)
class ResonancePrediction:
    frequencies: np.ndarray
    provenance: list[list[tuple[int, int, int]]] = field(default_factory=list)


def predicted_resonances(spec: ChainSpec, l_max: int, selection_rules: bool = True,
                         field_family: str = "square") -> ResonancePrediction:
    """Frequencies ``|E_n - E_m| / l`` in ``(0, 4 kappa]`` where tongues may start.

    With ``selection_rules`` pairs with vanishing coupling (``n + m`` even) are
    dropped and, for the square wave, so are even harmonics.  Each frequency
    carries every ``(n, m, l)`` (1-based, ``n < m``) that produces it.
    """
    if l_max < 1:
        raise ValueError("l_max must be >= 1")
    E = stationary_spectrum(spec)
    P = coupling_matrix(spec)
    found: list[tuple[float, tuple[int, int, int]]] = []
    for n in range(spec.N):
        for m in range(n + 1, spec.N):
            if selection_rules and P[n, m] == 0:
                continue
            for l in range(1, l_max + 1):
                if selection_rules and field_family == "square" and l % 2 == 0:
                    continue
                w = abs(E[n] - E[m]) / l
                if 0 < w <= 4 * spec.kappa * (1 + 1e-12):
                    found.append((w, (n + 1, m + 1, l)))
    found.sort()
    freqs: list[float] = []
    prov: list[list[tuple[int, int, int]]] = []
    for w, triple in found:
        if freqs and abs(w - freqs[-1]) <= 1e-12 * spec.kappa:
            prov[-1].append(triple)
        else:
            freqs.append(w)
            prov.append([triple])
    return ResonancePrediction(np.array(freqs), prov)


def _scan_row(N: int, kappa: float, family: str, omega: float,
              h1: np.ndarray, steps: int) -> tuple[np.ndarray, np.ndarray, int]:
    spec = ChainSpec(N, kappa)
    T = 2 * np.pi / omega
    if family == "square":
        W = hermitian_propagator(spec, T / 2)
        hs = np.stack([h1, -h1], axis=1)
        Ws = [W, W]
    else:
        dt = T / steps
        W = hermitian_propagator(spec, dt)
        hs = np.outer(h1, np.sin(omega * (np.arange(steps) + 0.5) * dt))
        Ws = [W] * steps
    with np.errstate(over="ignore", invalid="ignore"):
        _, K = gauge_product(Ws, hs)
        mu, failed = eigvals_stack(K)
        im = np.log(np.abs(mu)) / T
    row = np.max(np.abs(im), axis=1) / kappa
    imbalance = np.abs(np.sum(im, axis=1)) / kappa
    row[failed] = np.nan
    imbalance[failed] = np.nan
    return row, imbalance, int(failed.sum())


def _row_task(args):
    return _scan_row(*args)


def worker_count(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def tongue_scan(spec: ChainSpec, field_family: str, omega_grid: Sequence[float],
                h1_grid: Sequence[float], steps: int = DEFAULT_STEPS,
                threshold: float = DEFAULT_THRESHOLD, workers: int | None = None) -> TongueGrid:
    """``max |Im E| / kappa`` of the monodromy on every ``(omega, h1)`` cell.

    ``omega_grid`` is in units of kappa.  Each omega row is an independent
    task; rows are merged in grid order whatever the completion order.
    Cells whose eigenvalue computation fails are NaN and counted.  The
    per-cell ``|sum Im E|`` is kept as an accuracy check; cells where it
    reaches the threshold are logged.
    """
    if field_family not in FAMILIES:
        raise ValueError(f"field_family must be one of {FAMILIES}, got {field_family!r}")
    w = np.asarray(omega_grid, dtype=float)
    h = np.asarray(h1_grid, dtype=float)
    if w.size == 0 or h.size == 0:
        raise ValueError("grids must be non-empty")
    if np.any(np.diff(w) <= 0) or np.any(np.diff(h) <= 0):
        raise ValueError("grids must be strictly ascending")
    if np.any(w <= 0):
        raise ValueError("frequencies must be positive")
    tasks = [(spec.N, spec.kappa, field_family, float(wi) * spec.kappa, h, steps) for wi in w]
    n_workers = min(worker_count(workers), len(tasks))
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_row_task, tasks, chunksize=max(1, len(tasks) // (4 * n_workers))))
    else:
        results = [_row_task(t) for t in tasks]
    measure = np.vstack([r[0] for r in results])
    imbalance = np.vstack([r[1] for r in results])
    nans = sum(r[2] for r in results)
    if nans:
        log.warning("%d scan cells failed and were set to NaN", nans)
    grid = TongueGrid(w, h, measure, threshold, nans, imbalance)
    bad = int(grid.unreliable.sum())
    if bad:
        log.warning("%d scan cells are too ill-conditioned to resolve the threshold", bad)
    return grid


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Inclusive index ranges of consecutive True entries."""
    padded = np.concatenate([[False], mask, [False]]).astype(int)
    d = np.diff(padded)
    return list(zip(np.flatnonzero(d == 1), np.flatnonzero(d == -1) - 1))


def tongue_tips(grid: TongueGrid, h1_max: float | None = None,
                include_edges: bool = False) -> list[float]:
    """Frequencies at which unstable regions start, scanning upward in h1.

    A flagged run of omega cells in some h1 row is the birth of a tongue when
    no lower row has a flag within one cell of it; its tip is the centroid
    omega of that run.  Looking at all lower rows (not only the previous one)
    keeps a narrow, bending tongue that the grid samples intermittently from
    being counted twice.  Tongues that merge higher up keep their separate
    tips.  ``h1_max`` ignores births above that amplitude.  Births touching
    the first or last omega column are skipped unless ``include_edges``: they
    are usually tongues rooted outside the grid.
    """
    flags = grid.flags
    if flags.size == 0:
        return []
    tips = []
    last = flags.shape[0] - 1
    seen = np.zeros(flags.shape[0], dtype=bool)
    for j, h in enumerate(grid.h1_axis):
        for a, b in _runs(flags[:, j]):
            born = not seen[max(a - 1, 0):b + 2].any()
            on_edge = a == 0 or b == last
            if born and (h1_max is None or h <= h1_max) and (include_edges or not on_edge):
                tips.append(float(np.mean(grid.omega_axis[a:b + 1])))
        seen |= flags[:, j]
    return sorted(tips)


def count_tongues(grid: TongueGrid, omega_max: float = 4.0, h1_max: float | None = None) -> int:
    return sum(1 for w in tongue_tips(grid, h1_max) if w < omega_max)


def axis(start: float, stop: float, count: int) -> np.ndarray:
    """Inclusive evenly spaced axis (``start:stop:count`` on the command line)."""
    return np.linspace(start, stop, int(count))
