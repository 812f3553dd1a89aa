"""Correlated sample paths: Brownian driver, jump process, power jumps, martingales.

Each path draws from its own counter-based Philox stream keyed by
(seed, path_id), so a bundle is bitwise reproducible and independent of how
paths are split into blocks.  Jump times are sampled exactly (Poisson count
per step, uniform placement inside the step) and kept as flat per-jump
records, which later checks rely on.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import ValidationError
from .measures import LevyMeasureModel, PolynomialBasis

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_i = t0 + i * (T - t0) / n_steps."""

    t0: float
    T: float
    n_steps: int

    def __post_init__(self):
        if not self.t0 < self.T:
            raise ValidationError(f"need t0 < T, got [{self.t0}, {self.T}]")
        if self.n_steps < 1:
            raise ValidationError("n_steps must be >= 1")

    @property
    def dt(self) -> float:
        return (self.T - self.t0) / self.n_steps

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.t0, self.T, self.n_steps + 1)


@dataclass(eq=False)
class PathBundle:
    """Per-path, per-node values of every driving process on one grid.

    Arrays are laid out (n_paths, n_nodes) with martingales stacked last:
    ``H[p, i, j]`` is the j-th martingale of path p at node i.  Jump records
    are flat arrays sorted by (path row, step, time).  Treat instances as
    immutable; derived bundles come from :func:`attach_increasing_process`.
    """

    grid: TimeGrid
    model: LevyMeasureModel
    seed: int
    path_ids: np.ndarray
    B: np.ndarray
    L: np.ndarray
    H: np.ndarray
    A: np.ndarray
    power_jumps: Optional[np.ndarray]
    jump_row: np.ndarray
    jump_step: np.ndarray
    jump_time: np.ndarray
    jump_size: np.ndarray

    @property
    def n_paths(self) -> int:
        return self.B.shape[0]

    @property
    def m(self) -> int:
        return self.H.shape[2]


def _path_rng(seed: int, path_id: int) -> np.random.Generator:
    key = ((int(seed) & _MASK64) << 64) | (int(path_id) & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


class _PathStreams:
    """One Philox re-keyed per (seed, path_id): counter-based, constructor-free.

    Re-setting the bit-generator state gives the same stream as constructing
    Philox(key=(seed << 64) | path_id) but skips the per-path entropy pull.
    """

    def __init__(self, seed: int):
        self._seed = int(seed) & _MASK64
        self._bg = np.random.Philox(key=0)
        self.generator = np.random.Generator(self._bg)
        self._template = self._bg.state
        self._zeros = np.zeros(4, dtype=np.uint64)

    def rekey(self, path_id: int) -> np.random.Generator:
        st = self._template
        st["state"]["key"] = np.array([int(path_id) & _MASK64, self._seed],
                                      dtype=np.uint64)
        st["state"]["counter"] = self._zeros
        st["buffer_pos"] = 4
        st["has_uint32"] = 0
        st["uinteger"] = 0
        self._bg.state = st
        return self.generator


def simulate_bundle(model: LevyMeasureModel, basis: PolynomialBasis, grid: TimeGrid,
                    n_paths: int, seed: int, *, path_offset: int = 0,
                    store_power_jumps: bool = True,
                    forced_jumps: Optional[Sequence[Sequence[float]]] = None) -> PathBundle:
    """Simulate a bundle of driver paths.

    B is a standard Brownian path started at 0 and independent of the jump
    process.  L is drift plus compound Poisson (no Brownian component; sigma0
    only shapes the polynomial basis).  The i-th power-jump process cumulates
    (jump size)^i, the compensated versions are combined through the basis
    coefficients into the martingales H, and A starts as zero until an
    increasing process is attached.

    ``forced_jumps`` is a test hook: a list of (time, size) applied to every
    path instead of random jump sampling (the Brownian draw is unchanged).
    """
    if basis.model != model:
        raise ValidationError("polynomial basis was built for a different measure model")
    if n_paths < 1:
        raise ValidationError("n_paths must be >= 1")
    N = grid.n_steps
    dt = grid.dt
    m = basis.m
    nodes = grid.nodes
    tau = nodes - grid.t0
    comp_rates = np.array([model.power_mean_rate(i) for i in range(1, m + 1)])
    C = np.asarray(basis.coeffs)
    sizes = model.jump_sizes
    rates = model.jump_rates
    total_rate = model.total_rate
    if total_rate > 0:
        cum_p = np.cumsum(rates) / total_rate
    n_atoms = len(sizes)

    if forced_jumps is not None:
        f_times = np.array([float(j[0]) for j in forced_jumps])
        f_sizes = np.array([float(j[1]) for j in forced_jumps])
        if f_times.size and (f_times.min() <= grid.t0 or f_times.max() > grid.T):
            raise ValidationError("forced jump times must lie in (t0, T]")
        f_steps = np.minimum(((f_times - grid.t0) / dt).astype(int), N - 1)
        order = np.lexsort((f_times, f_steps))
        f_steps, f_times, f_sizes = f_steps[order], f_times[order], f_sizes[order]

    B = np.empty((n_paths, N + 1))
    L = np.empty((n_paths, N + 1))
    H = np.empty((n_paths, N + 1, m))
    PJ = np.empty((n_paths, N + 1, m)) if store_power_jumps else None
    A = np.zeros((n_paths, N + 1))
    rec_row, rec_step, rec_time, rec_size = [], [], [], []

    sqdt = np.sqrt(dt)
    Y = np.empty((N + 1, m))
    streams = _PathStreams(seed)
    for p in range(n_paths):
        pid = path_offset + p
        rng = streams.rekey(pid)
        zb = rng.standard_normal(N)
        B[p, 0] = 0.0
        np.cumsum(sqdt * zb, out=B[p, 1:])

        if forced_jumps is not None:
            steps, times, jsizes = f_steps, f_times, f_sizes
        elif total_rate > 0:
            counts = rng.poisson(total_rate * dt, N)
            k = int(counts.sum())
            if k:
                steps = np.repeat(np.arange(N), counts)
                u = rng.random(k)
                av = rng.random(k)
                order = np.lexsort((u, steps))
                u, av = u[order], av[order]
                times = grid.t0 + (steps + u) * dt
                idx = np.minimum(np.searchsorted(cum_p, av, side="right"), n_atoms - 1)
                jsizes = sizes[idx]
            else:
                steps = np.empty(0, dtype=int)
                times = jsizes = np.empty(0)
        else:
            steps = np.empty(0, dtype=int)
            times = jsizes = np.empty(0)

        s1 = np.bincount(steps, weights=jsizes, minlength=N) if steps.size else np.zeros(N)
        L[p, 0] = 0.0
        np.cumsum(model.drift_a * dt + s1, out=L[p, 1:])

        for i0 in range(m):
            power = i0 + 1
            if power == 1:
                Li = L[p]
            else:
                Li = np.empty(N + 1)
                Li[0] = 0.0
                si = np.bincount(steps, weights=jsizes**power, minlength=N) if steps.size else np.zeros(N)
                np.cumsum(si, out=Li[1:])
            if store_power_jumps:
                PJ[p, :, i0] = Li
            Y[:, i0] = Li - tau * comp_rates[i0]
        H[p] = Y @ C.T

        if steps.size:
            rec_row.append(np.full(steps.size, p, dtype=np.int64))
            rec_step.append(steps.astype(np.int64))
            rec_time.append(np.asarray(times, dtype=float))
            rec_size.append(np.asarray(jsizes, dtype=float))

    def _cat(parts, dtype):
        return np.concatenate(parts) if parts else np.empty(0, dtype=dtype)

    return PathBundle(
        grid=grid,
        model=model,
        seed=int(seed),
        path_ids=np.arange(path_offset, path_offset + n_paths, dtype=np.int64),
        B=B,
        L=L,
        H=H,
        A=A,
        power_jumps=PJ,
        jump_row=_cat(rec_row, np.int64),
        jump_step=_cat(rec_step, np.int64),
        jump_time=_cat(rec_time, float),
        jump_size=_cat(rec_size, float),
    )


def backward_increments(bundle: PathBundle, grid: TimeGrid) -> np.ndarray:
    """Per-step Brownian increments dB_i = B_{i+1} - B_i, shape (n_paths, n_steps).

    The backward-integral convention (integrand at the right endpoint) is the
    solver's job; this just hands out the increments.
    """
    if bundle.grid != grid:
        raise ValidationError("bundle was simulated on a different grid")
    return np.diff(bundle.B, axis=1)


IncreasingSpec = Union[Callable[[np.ndarray], np.ndarray], np.ndarray, "object"]


def attach_increasing_process(bundle: PathBundle, spec: IncreasingSpec) -> PathBundle:
    """Return a copy of the bundle with the increasing process A filled in.

    ``spec`` may be a deterministic function of time t -> A_t (applied to the
    grid nodes and shared by all paths), an array of per-path node values, or
    a reflected path object exposing ``abs_eta`` (the boundary local time).
    A must start at 0 and be nondecreasing.
    """
    nodes = bundle.grid.nodes
    n_paths = bundle.n_paths
    if callable(spec):
        row = np.asarray(spec(nodes), dtype=float)
        if row.shape != nodes.shape:
            raise ValidationError("increasing-process function must map nodes to node values")
        A = np.tile(row, (n_paths, 1))
    elif hasattr(spec, "abs_eta"):
        A = np.array(spec.abs_eta, dtype=float)
    else:
        A = np.asarray(spec, dtype=float)
        if A.ndim == 1:
            A = np.tile(A, (n_paths, 1))
    if A.shape != (n_paths, len(nodes)):
        raise ValidationError(f"increasing process has shape {A.shape}, "
                              f"expected {(n_paths, len(nodes))}")
    scale = max(1.0, float(np.max(np.abs(A))))
    if np.max(np.abs(A[:, 0])) > 1e-12 * scale:
        raise ValidationError("increasing process must start at 0")
    diffs = np.diff(A, axis=1)
    if diffs.size and diffs.min() < -1e-12 * scale:
        step = int(np.unravel_index(np.argmin(diffs), diffs.shape)[1])
        raise ValidationError(f"increasing process decreases at step {step}")
    A = np.maximum.accumulate(np.maximum(A, 0.0), axis=1)  # clip roundoff dips
    A[:, 0] = 0.0
    return dataclasses.replace(bundle, A=A)
