"""Time integrators over one Schwarz sweep.

Imaginary time uses implicit Euler on the Galerkin system,
(A + dt Htot) c^{n+1} = A c^n + dt b^{n+1}, followed by one global
normalization (all subdomains divided by the same reconstructed norm) and
an optional antisymmetrization each step.  Real time uses Crank-Nicolson,
(A + i dt/2 (Htot + T^{n+1})) c^{n+1}
    = (A - i dt/2 (Htot + T^n)) c^n + i dt/2 (b^n + b^{n+1}),
with the laser entering through the dipole matrices.  Htot is the volume
Hamiltonian plus the weak transmission term; b collects the neighbor
boundary data.  Left-hand sides are factorized once and reused, except
when a time-dependent field forces a refactorization per step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import trapezoid_weights
from .linalg import Prefactored
from .operators import LocalOperators, assemble_field_matrix
from .potentials import LaserField
from .reconstruct import (GlobalField, field_l2_diff, local_field,
                          reconstruct_global)


class ConvergenceError(RuntimeError):
    """An iteration hit its step cap before reaching its tolerance."""


@dataclass(frozen=True)
class NgfConfig:
    """Normalized-gradient-flow settings (imaginary time).

    With `n_steps` set the flow runs for exactly that many implicit Euler
    levels instead of relaxing to `delta` (plain diffusion over a fixed
    horizon rather than a ground-state search).
    """

    dt: float
    delta: float = 1e-8
    antisymmetrize: bool = False
    normalize: bool = True
    max_steps: int = 100_000
    n_steps: int | None = None

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.n_steps is not None and self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")


@dataclass(frozen=True)
class TdseConfig:
    """Real-time propagation settings."""

    dt: float
    T: float
    laser: LaserField | None = None

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.T <= 0:
            raise ValueError("T must be positive")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))


def _h_total(ops: LocalOperators):
    return ops.H + ops.H_bdry


class NgfStepper:
    """Implicit Euler with the left-hand side factorized once."""

    def __init__(self, ops: LocalOperators, dt: float):
        self.ops = ops
        self.dt = dt
        self._lhs = Prefactored(ops.A + dt * _h_total(ops))

    def step(self, c: np.ndarray, rhs: np.ndarray | None = None) -> np.ndarray:
        b = self.ops.A @ c
        if rhs is not None:
            b = b + self.dt * rhs
        return self._lhs.solve(b)


def ngf_step(ops: LocalOperators, dt: float, c: np.ndarray,
             rhs: np.ndarray | None = None) -> np.ndarray:
    """One-shot implicit-Euler update (tests and small drivers)."""
    return NgfStepper(ops, dt).step(c, rhs)


class TdseStepper:
    """Crank-Nicolson with laser coupling.

    `laser` may be None (field-free: one factorization for the whole run).
    With a laser the dipole matrices in ops.Q are combined into T(t) and
    the left-hand side is refactorized every step.
    """

    def __init__(self, ops: LocalOperators, dt: float,
                 laser: LaserField | None = None):
        self.ops = ops
        self.dt = dt
        self.laser = laser
        self._h = _h_total(ops)
        if laser is None:
            self._lhs = Prefactored(ops.A + 0.5j * dt * self._h)
        elif not ops.Q:
            raise ValueError("laser given but dipole matrices are missing")

    def _field(self, t: float) -> np.ndarray | None:
        if self.laser is None:
            return None
        return assemble_field_matrix(self.ops.Q, self.laser, t)

    def step(self, c: np.ndarray, t: float,
             rhs_n: np.ndarray | None = None,
             rhs_np1: np.ndarray | None = None) -> np.ndarray:
        dt = self.dt
        if self.laser is None:
            b = (self.ops.A - 0.5j * dt * self._h) @ c
            lhs = self._lhs
        else:
            h_n = self._h + self._field(t)
            h_np1 = self._h + self._field(t + dt)
            b = (self.ops.A - 0.5j * dt * h_n) @ c
            lhs = Prefactored(self.ops.A + 0.5j * dt * h_np1)
        if rhs_n is not None or rhs_np1 is not None:
            zero = np.zeros(self.ops.size)
            b = b + 0.5j * dt * ((rhs_n if rhs_n is not None else zero)
                                 + (rhs_np1 if rhs_np1 is not None else zero))
        return lhs.solve(b)


def tdse_step(ops: LocalOperators, dt: float, c: np.ndarray, t: float = 0.0,
              laser: LaserField | None = None,
              rhs_n: np.ndarray | None = None,
              rhs_np1: np.ndarray | None = None) -> np.ndarray:
    """One-shot Crank-Nicolson update."""
    return TdseStepper(ops, dt, laser).step(c, t, rhs_n, rhs_np1)


def normalize_global(coeffs: dict[int, np.ndarray], bases: dict,
                     layout) -> tuple[dict[int, np.ndarray], float]:
    """Divide every subdomain's coefficients by the reconstructed L2 norm."""
    fields = {n: local_field(bases[n], coeffs[n]) for n in coeffs}
    norm = reconstruct_global(fields, layout).norm
    if not np.isfinite(norm) or norm < 1e-200:
        raise ValueError("cannot normalize a zero field")
    return {n: c / norm for n, c in coeffs.items()}, norm


def antisymmetrize_field(values: np.ndarray) -> np.ndarray:
    """Pointwise antisymmetrizer: keep x1 > x2, mirror-negate x1 <= x2.

    The grid must be square (same axis both ways); the diagonal is set to
    zero.  Applying the operator twice reproduces its output bitwise.
    """
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ValueError("antisymmetrization needs a square grid field")
    kept = np.tril(values, -1)  # rows are x1, so x1 > x2 is below the diagonal
    return kept - kept.T


@dataclass
class NgfResult:
    """Trajectory of one imaginary-time relaxation."""

    history: list  # per time level: dict subdomain -> coefficients
    norms: list
    energies: list
    n_steps: int
    t_cvg: float
    converged: bool


def ngf_run(layout, bases: dict, ops: dict[int, LocalOperators],
            cfg: NgfConfig, c0: dict[int, np.ndarray],
            boundary_rhs=None, global_potential: np.ndarray | None = None,
            grams: dict | None = None, pmap=None) -> NgfResult:
    """Relax all subdomains under frozen neighbor data until stationary.

    boundary_rhs(n, level) must return the right-hand-side vector for
    subdomain n at target time level `level` (1-based), or None.  Stops
    when consecutive reconstructed iterates differ by <= cfg.delta in L2;
    raises ConvergenceError at the step cap.  When cfg.antisymmetrize is
    set, each step's global field is antisymmetrized and re-projected onto
    every subdomain basis (`grams` can pass prefactored Gram solvers).
    pmap(fn, items) may run the per-subdomain solves concurrently; both
    global hooks stay on the calling thread, so results do not depend on
    the worker count.
    """
    order = sorted(c0)
    steppers = {n: NgfStepper(ops[n], cfg.dt) for n in order}
    if cfg.antisymmetrize and grams is None:
        grams = {n: Prefactored(ops[n].A) for n in order}

    coeffs = {n: np.array(c0[n], dtype=float, copy=True) for n in order}
    history = [dict(coeffs)]
    norms, energies = [], []
    g = layout.grid

    prev = reconstruct_global(
        {n: local_field(bases[n], coeffs[n]) for n in order}, layout)
    converged = False
    steps = 0
    cap = cfg.n_steps if cfg.n_steps is not None else cfg.max_steps
    for level in range(1, cap + 1):
        def advance(n):
            rhs = boundary_rhs(n, level) if boundary_rhs is not None else None
            return steppers[n].step(coeffs[n], rhs)

        stepped = [advance(n) for n in order] if pmap is None \
            else pmap(advance, order)
        coeffs = dict(zip(order, stepped))
        current = reconstruct_global(
            {n: local_field(bases[n], coeffs[n]) for n in order}, layout)
        if cfg.normalize:
            nrm = current.norm
            if not np.isfinite(nrm) or nrm < 1e-200:
                raise ValueError("cannot normalize a zero field")
            coeffs = {n: c / nrm for n, c in coeffs.items()}
            current = GlobalField(current.x1, current.x2,
                                  current.values / nrm, current.cover)
        if cfg.antisymmetrize:
            anti = antisymmetrize_field(current.values)
            for n in order:
                sub = layout.subdomain(n)
                patch = anti[sub.i0:sub.i1 + 1, sub.j0:sub.j1 + 1]
                rhs_proj = bases[n].fields.reshape(bases[n].size, -1) @ (
                    _slice_weights(bases[n]) * patch.ravel())
                coeffs[n] = grams[n].solve(rhs_proj)
            current = reconstruct_global(
                {n: local_field(bases[n], coeffs[n]) for n in order}, layout)
        history.append(dict(coeffs))
        norms.append(current.norm)
        if global_potential is not None:
            energies.append(energy(g.x1, g.x2, current.values,
                                   global_potential))
        steps = level
        if cfg.n_steps is not None:
            converged = level == cfg.n_steps
            continue
        diff = field_l2_diff(g.x1, g.x2, current.values, prev.values)
        if diff <= cfg.delta:
            converged = True
            break
        prev = current
    if not converged:
        raise ConvergenceError(
            f"gradient flow did not reach delta={cfg.delta:g} "
            f"within {cfg.max_steps} steps")
    return NgfResult(history, norms, energies, steps, steps * cfg.dt, True)


def _slice_weights(basis) -> np.ndarray:
    return np.outer(trapezoid_weights(basis.x1),
                    trapezoid_weights(basis.x2)).ravel()


def energy(x1: np.ndarray, x2: np.ndarray, values: np.ndarray,
           potential: np.ndarray) -> float:
    """E = int 1/2 |grad chi|^2 + V |chi|^2 on the global grid."""
    gx = np.gradient(values, x1, axis=0)
    gy = np.gradient(values, x2, axis=1)
    density = 0.5 * (np.abs(gx) ** 2 + np.abs(gy) ** 2)
    density = density + potential * np.abs(values) ** 2
    w = np.outer(trapezoid_weights(x1), trapezoid_weights(x2))
    return float(np.sum(w * density))
