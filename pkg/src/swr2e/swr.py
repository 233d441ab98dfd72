"""The Schwarz waveform relaxation engine.

Each sweep re-solves every subdomain over its whole time horizon, real or
imaginary, against boundary data frozen from the previous sweep; traces
are exchanged only between sweeps, so subdomain solves within a sweep are
independent and may run on a thread pool.  All reductions (corner
averages, residuals, reconstructions) happen on the calling thread in
fixed index order, which makes runs bitwise reproducible for any worker
count.

Boundary data on one subdomain edge can come from several neighbors: away
from corners exactly one partner covers each interface point, while the
corner zones of an L x L decomposition see up to three.  The per-point
arithmetic mean of the partner data is the multi-overlap rule; with three
partners each carries weight 1/3.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .basis import LocalBasis, trapezoid_weights
from .geometry import SubdomainLayout
from .operators import LocalOperators
from .reconstruct import GlobalField, local_field, reconstruct_global
from .timestep import NgfConfig, TdseConfig, TdseStepper, ngf_run


class SwrError(RuntimeError):
    """A subdomain solve failed during a sweep."""


@dataclass(frozen=True)
class TransmissionSpec:
    """Interface coupling: classical Dirichlet or Robin with parameter mu.

    mu is real and positive in imaginary time and purely imaginary with a
    negative imaginary part in real time; the regime check happens when a
    run is configured, since the spec itself does not know the mode.
    """

    kind: str
    mu: complex = 0.0

    def __post_init__(self):
        if self.kind not in ("dirichlet", "robin"):
            raise ValueError(f"unknown transmission kind '{self.kind}'")
        if self.kind == "robin" and self.mu == 0:
            raise ValueError("robin transmission requires mu != 0")


@dataclass
class TraceEntry:
    """One neighbor's data on the covered points of one edge.

    values[l, t] samples psi_j at stored time level l on the t-th covered
    point; derivs holds the derivative along the owner's outward normal,
    or None when the transmission kind never needs it.
    """

    values: np.ndarray
    derivs: np.ndarray | None = None

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ValueError("trace samples must be (levels, points)")
        if self.derivs is not None and self.derivs.shape != self.values.shape:
            raise ValueError("derivative samples do not match value samples")

    @property
    def n_levels(self) -> int:
        return self.values.shape[0]


@dataclass
class TraceBuffer:
    """All neighbor traces of one sweep, keyed (owner, side, neighbor)."""

    entries: dict[tuple[int, str, int], TraceEntry]

    @property
    def n_levels(self) -> int:
        if not self.entries:
            return 1
        return next(iter(self.entries.values())).n_levels


def robin_data(trace: TraceEntry, mu: complex) -> np.ndarray:
    """g = d_n psi_j + mu psi_j on the interface samples, all levels.

    mu = 0 degenerates to pure Neumann data and is allowed here; the
    TransmissionSpec invariant guards the actual Robin configuration.
    """
    if trace.derivs is None:
        raise ValueError("robin data needs derivative samples")
    return trace.derivs + mu * trace.values


def corner_average(edge, data: list[tuple[np.ndarray, np.ndarray]]):
    """Average per-neighbor boundary data over an edge, pointwise.

    data lists (covered point indices, samples over those points) pairs in
    a fixed order; each edge point is the arithmetic mean of the partners
    covering it, so interior corner points crossed by three neighbors get
    weight 1/3 each.  Samples may carry any number of leading time levels.
    """
    if not data:
        raise ValueError("no neighbor data on a transmission edge")
    levels = data[0][1].shape[0]
    dtype = np.result_type(*(g.dtype for _, g in data))
    out = np.zeros((levels, edge.n_points), dtype=dtype)
    count = np.zeros(edge.n_points, dtype=int)
    for cols, g in data:
        out[:, cols] += g
        count[cols] += 1
    if np.any(count == 0):
        raise ValueError("a transmission edge point has no covering neighbor")
    return out / count


@dataclass
class SwrState:
    """Mutable driver state across sweeps; residual history is append-only."""

    k: int
    trajectories: dict[int, list[np.ndarray]]
    traces: TraceBuffer
    boundary: dict[tuple[int, str], np.ndarray]
    line_weights: dict[tuple[int, str], np.ndarray]
    dt: float
    stationary: bool
    residuals: list[float] = field(default_factory=list)
    t_cvg: list[float] = field(default_factory=list)
    level_counts: list[int] = field(default_factory=list)
    norms: list[float] = field(default_factory=list)
    energies: list[float] = field(default_factory=list)
    converged: bool = False
    prev_boundary: dict[tuple[int, str], np.ndarray] | None = None


def residual(state: SwrState, mode: str = "trace") -> float:
    """Sweep-to-sweep mismatch of the subdomain boundary traces.

    trace mode integrates |psi^(k) - psi^(k-1)|^2 over every subdomain
    boundary: in real time by the trapezoid rule across all stored levels,
    in imaginary time from the relaxed states scaled by sqrt(T_cvg).
    tcvg mode (stationary only) compares consecutive NGF convergence
    times instead.
    """
    if state.k < 1:
        raise ValueError("residual needs at least one completed sweep")
    if mode == "tcvg":
        if not state.stationary:
            raise ValueError("tcvg residual only applies in imaginary time")
        t_now = state.t_cvg[-1]
        t_before = state.t_cvg[-2] if len(state.t_cvg) > 1 else 0.0
        return abs(t_now - t_before) / abs(t_now)
    if mode != "trace":
        raise ValueError(f"unknown residual mode '{mode}'")

    keys = sorted(state.boundary)
    if state.stationary:
        total = 0.0
        for key in keys:
            d = state.boundary[key][-1] - state.prev_boundary[key][-1]
            total += float(np.sum(state.line_weights[key] * np.abs(d) ** 2))
        return float(np.sqrt(total) * np.sqrt(state.t_cvg[-1]))
    n_levels = state.boundary[keys[0]].shape[0] if keys else 1
    per_level = np.zeros(n_levels)
    for key in keys:
        cur, prev, w = (state.boundary[key], state.prev_boundary[key],
                        state.line_weights[key])
        for level in range(n_levels):
            d = cur[level] - prev[min(level, prev.shape[0] - 1)]
            per_level[level] += float(np.sum(w * np.abs(d) ** 2))
    times = state.dt * np.arange(n_levels)
    return float(np.sqrt(np.trapezoid(per_level, times)))


@dataclass
class SwrProblem:
    """One fully assembled relaxation run."""

    layout: SubdomainLayout
    bases: dict[int, LocalBasis]
    ops: dict[int, LocalOperators]
    tc: TransmissionSpec | None
    cfg: NgfConfig | TdseConfig
    c0: dict[int, np.ndarray]
    global_potential: np.ndarray | None = None
    delta_sc: float = 1e-14
    max_sweeps: int = 200
    residual_mode: str = "trace"
    workers: int | None = None

    def __post_init__(self):
        ids = {s.n for s in self.layout.subdomains}
        for name, mapping in (("bases", self.bases), ("ops", self.ops),
                              ("c0", self.c0)):
            if set(mapping) != ids:
                raise ValueError(f"{name} must cover every subdomain")
        stationary = isinstance(self.cfg, NgfConfig)
        if self.layout.L > 1:
            if self.tc is None:
                raise ValueError("a decomposed layout needs a transmission "
                                 "spec")
            if self.tc.kind == "dirichlet" and (self.layout.n_half1 == 0
                                                or self.layout.n_half2 == 0):
                raise ValueError("dirichlet transmission needs overlap")
            if self.tc.kind == "robin":
                mu = complex(self.tc.mu)
                if stationary and not (mu.imag == 0 and mu.real > 0):
                    raise ValueError("imaginary time needs real positive mu")
                if not stationary and not (mu.real == 0 and mu.imag < 0):
                    raise ValueError("real time needs purely imaginary mu "
                                     "with negative imaginary part")
        if self.residual_mode not in ("trace", "tcvg"):
            raise ValueError(f"unknown residual mode '{self.residual_mode}'")
        if self.residual_mode == "tcvg" and not stationary:
            raise ValueError("tcvg residual only applies in imaginary time")
        if self.delta_sc <= 0:
            raise ValueError("delta_sc must be positive")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be at least 1")
        if self.workers is not None and self.workers < 1:
            raise ValueError("workers must be at least 1")

    @property
    def stationary(self) -> bool:
        return isinstance(self.cfg, NgfConfig)


@dataclass
class SwrResult:
    """Converged state (or the partial state at the sweep cap)."""

    converged: bool
    sweeps: int
    residuals: list[float]
    residual_mode: str
    trajectories: dict[int, list[np.ndarray]]
    coeffs: dict[int, np.ndarray]
    t_cvg: list[float]
    level_counts: list[int]
    solves: dict[int, int]
    norms: list[float]
    energies: list[float]
    layout: SubdomainLayout
    bases: dict[int, LocalBasis]
    wallclock_s: float
    sweep_seconds: list[float]

    def field(self, level: int = -1) -> GlobalField:
        fields = {n: local_field(self.bases[n], traj[level])
                  for n, traj in self.trajectories.items()}
        return reconstruct_global(fields, self.layout)


_SIDES = ("W", "E", "S", "N")


class _SweepContext:
    """Static tables shared by every sweep of one run."""

    def __init__(self, problem: SwrProblem, workers: int):
        self.problem = problem
        layout, bases = problem.layout, problem.bases
        self.order = sorted(bases)
        self.trace_dtype = float if problem.stationary else complex
        self.c0 = {n: np.asarray(problem.c0[n],
                                 dtype=self.trace_dtype).copy()
                   for n in self.order}

        # neighbor-side tables: (owner, side) -> [(j, covered edge indices,
        # value map, oriented derivative map), ...] sorted by neighbor
        self.partner_maps = {}
        # own-boundary tables for the residual: full lines, all four sides
        self.own_lines = {}
        self.line_weights = {}
        for n in self.order:
            sub = layout.subdomain(n)
            for side in _SIDES:
                edge = layout.edge(n, side)
                axis = edge.axis
                own_idx = edge.line - (sub.i0 if axis == 0 else sub.j0)
                other = bases[n].x2 if axis == 0 else bases[n].x1
                self.own_lines[(n, side)] = bases[n].line_values(axis,
                                                                 own_idx)
                self.line_weights[(n, side)] = trapezoid_weights(other)
                if not edge.transmission:
                    continue
                plist = []
                for j in sorted({p for ps in edge.partners for p in ps}):
                    cols = np.array([t for t, ps in enumerate(edge.partners)
                                     if j in ps], dtype=int)
                    sub_j = layout.subdomain(j)
                    idx_j = edge.line - (sub_j.i0 if axis == 0
                                         else sub_j.j0)
                    off = sub_j.j0 if axis == 0 else sub_j.i0
                    local_cols = edge.lo + cols - off
                    mval = bases[j].line_values(axis, idx_j)[:, local_cols].T
                    mder = None
                    if problem.tc.kind == "robin":
                        ders = bases[j].line_derivatives(axis, idx_j)
                        mder = edge.sign * ders[:, local_cols].T
                    plist.append((j, cols, mval, mder))
                self.partner_maps[(n, side)] = plist

        if problem.stationary:
            self.steppers = None
        else:
            self.steppers = {n: TdseStepper(problem.ops[n], problem.cfg.dt,
                                            problem.cfg.laser)
                             for n in self.order}

        self.pool = (ThreadPoolExecutor(max_workers=workers)
                     if workers > 1 else None)

    def pmap(self, fn, items):
        def guarded(n):
            try:
                return fn(n)
            except Exception as exc:
                raise SwrError(f"subdomain {n}: {exc}") from exc

        if self.pool is None:
            return [guarded(n) for n in items]
        return list(self.pool.map(guarded, items))

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()

    def extract_traces(self, trajectories) -> TraceBuffer:
        mats = {n: np.asarray(trajectories[n]) for n in self.order}
        entries = {}
        for (n, side), plist in self.partner_maps.items():
            for j, cols, mval, mder in plist:
                vals = mats[j] @ mval.T
                ders = None if mder is None else mats[j] @ mder.T
                entries[(n, side, j)] = TraceEntry(vals, ders)
        return TraceBuffer(entries)

    def extract_boundary(self, trajectories, final_only: bool):
        out = {}
        for (n, side), vown in self.own_lines.items():
            mat = np.asarray(trajectories[n][-1:] if final_only
                             else trajectories[n])
            out[(n, side)] = mat @ vown
        return out

    def boundary_rhs_tables(self, traces: TraceBuffer):
        """Per-subdomain right-hand-side vectors for every stored level."""
        tc, ops = self.problem.tc, self.problem.ops
        rhs = {}
        for (n, side), plist in self.partner_maps.items():
            data = []
            for j, cols, _, _ in plist:
                entry = traces.entries[(n, side, j)]
                g = (robin_data(entry, tc.mu) if tc.kind == "robin"
                     else entry.values)
                data.append((cols, g))
            edge = self.problem.layout.edge(n, side)
            averaged = corner_average(edge, data)
            block = averaged @ ops[n].boundary_rhs_maps[side].T
            rhs[n] = block if n not in rhs else rhs[n] + block
        return rhs


def schwarz_sweep(state: SwrState, ctx: _SweepContext) -> SwrState:
    """Advance every subdomain through its horizon on frozen k-1 data."""
    problem = ctx.problem
    rhs_tables = ctx.boundary_rhs_tables(state.traces)
    stored = state.traces.n_levels

    def rhs_of(n, level):
        table = rhs_tables.get(n)
        if table is None:
            return None
        return table[min(level, stored - 1)]

    if problem.stationary:
        res = ngf_run(problem.layout, problem.bases, problem.ops,
                      problem.cfg, ctx.c0, boundary_rhs=rhs_of,
                      global_potential=problem.global_potential,
                      pmap=ctx.pmap)
        trajectories = {n: [lvl[n] for lvl in res.history]
                        for n in ctx.order}
        state.t_cvg.append(res.t_cvg)
        state.level_counts.append(res.n_steps)
        state.norms = res.norms
        state.energies = res.energies
    else:
        n_steps, dt = problem.cfg.n_steps, problem.cfg.dt

        def propagate(n):
            c = ctx.c0[n]
            traj = [c]
            for level in range(n_steps):
                c = ctx.steppers[n].step(c, level * dt, rhs_of(n, level),
                                         rhs_of(n, level + 1))
                traj.append(c)
            return traj

        results = ctx.pmap(propagate, ctx.order)
        trajectories = dict(zip(ctx.order, results))
        state.level_counts.append(n_steps)

    state.k += 1
    state.trajectories = trajectories
    state.prev_boundary = state.boundary
    state.boundary = ctx.extract_boundary(trajectories,
                                          final_only=problem.stationary)
    state.traces = ctx.extract_traces(trajectories)
    if ctx.partner_maps:
        state.residuals.append(residual(state, problem.residual_mode))
    else:
        state.residuals.append(0.0)
    return state


def run_swr(problem: SwrProblem, sweep_hook=None) -> SwrResult:
    """Iterate Schwarz sweeps until the residual meets delta_sc.

    Every sweep restarts from the projected initial data; the first sweep
    sees neighbor traces built from those projections, held constant in
    time.  Hitting the sweep cap returns the partial result flagged
    non-converged rather than raising.  sweep_hook(k, coeffs), when given,
    observes the final-level coefficients after each sweep.
    """
    workers = problem.workers
    if workers is None:
        workers = int(os.environ.get("SWR2E_WORKERS", "1"))
    if workers < 1:
        raise ValueError("workers must be at least 1")

    started = time.perf_counter()
    ctx = _SweepContext(problem, workers)
    try:
        seeds = {n: [ctx.c0[n]] for n in ctx.order}
        state = SwrState(k=0, trajectories=seeds,
                         traces=ctx.extract_traces(seeds),
                         boundary=ctx.extract_boundary(
                             seeds, final_only=problem.stationary),
                         line_weights=ctx.line_weights,
                         dt=problem.cfg.dt,
                         stationary=problem.stationary)
        sweep_seconds = []
        while state.k < problem.max_sweeps and not state.converged:
            tick = time.perf_counter()
            state = schwarz_sweep(state, ctx)
            sweep_seconds.append(time.perf_counter() - tick)
            if not ctx.partner_maps or state.residuals[-1] <= problem.delta_sc:
                state.converged = True
            if sweep_hook is not None:
                sweep_hook(state.k, {n: state.trajectories[n][-1]
                                     for n in ctx.order})
    finally:
        ctx.close()

    total_steps = sum(state.level_counts)
    return SwrResult(
        converged=state.converged,
        sweeps=state.k,
        residuals=list(state.residuals),
        residual_mode=problem.residual_mode,
        trajectories=state.trajectories,
        coeffs={n: state.trajectories[n][-1] for n in ctx.order},
        t_cvg=list(state.t_cvg),
        level_counts=list(state.level_counts),
        solves={n: total_steps for n in ctx.order},
        norms=list(state.norms),
        energies=list(state.energies),
        layout=problem.layout,
        bases=problem.bases,
        wallclock_s=time.perf_counter() - started,
        sweep_seconds=sweep_seconds,
    )
