"""Cost accounting for relaxation runs.

The model: one implicit solve on subdomain p costs K_p^beta for some
exponent beta between 1 (ideally sparse) and 3 (dense factorization), so a
stationary run costs sum_k sum_p n_p^(k) K_p^beta and a real-time run
n_T k_cvg sum_p K_p^beta.  Decomposing into L^(dN) subdomains divides the
uniform-size cost by L^(dN (beta-1)); decomposition pays off while the
accumulated sweep count stays below that factor.  The attractiveness
ratio reported next to each estimate is exactly that quotient.

beta itself is measured, never assumed: fit_beta regresses log solve time
against log subdomain size and returns None when the sizes carry no
spread (uniform decompositions).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ComplexityModel:
    """Inputs of the cost formulas.

    counts lists the per-sweep time-level counts N^(k) (the same for every
    subdomain within a sweep); sizes lists K_p per subdomain and defaults
    to an even split of k_tot over the L^(dN) subdomains.
    """

    k_tot: int
    L: int
    counts: tuple[int, ...] = ()
    sizes: tuple[int, ...] | None = None
    d: int = 1
    N: int = 2
    beta: float = 2.0
    n_T: int = 0
    k_cvg: int = 0

    def __post_init__(self):
        if self.k_tot < 1:
            raise ValueError("k_tot must be positive")
        if self.L < 1:
            raise ValueError("L must be at least 1")
        if self.d < 1 or self.N < 1:
            raise ValueError("d and N must be at least 1")
        if not 1.0 < self.beta < 3.0:
            raise ValueError("beta must lie in (1, 3)")
        if any(c < 1 for c in self.counts):
            raise ValueError("level counts must be positive")
        if self.n_T < 0 or self.k_cvg < 0:
            raise ValueError("n_T and k_cvg cannot be negative")
        if self.sizes is not None:
            if len(self.sizes) != self.n_subdomains:
                raise ValueError("sizes must list every subdomain")
            if any(s < 1 for s in self.sizes):
                raise ValueError("subdomain sizes must be positive")
            if sum(self.sizes) != self.k_tot:
                raise ValueError("subdomain sizes must sum to k_tot")

    @property
    def n_subdomains(self) -> int:
        return self.L ** (self.d * self.N)

    @property
    def scaling_gain(self) -> float:
        """L^(dN (beta-1)), the uniform-split cost divisor."""
        return float(self.L) ** (self.d * self.N * (self.beta - 1.0))

    def size_cost(self) -> float:
        """sum_p K_p^beta, with the even split when sizes are not given."""
        if self.sizes is None:
            return self.n_subdomains * (self.k_tot
                                        / self.n_subdomains) ** self.beta
        return float(sum(s ** self.beta for s in self.sizes))


@dataclass(frozen=True)
class CostEstimate:
    value: float
    attractiveness: float  # decomposition pays off while this is << 1


def cc_stationary(model: ComplexityModel) -> CostEstimate:
    """sum_k sum_p N^(k) K_p^beta and its ratio to the scaling gain."""
    total_levels = sum(model.counts)
    return CostEstimate(total_levels * model.size_cost(),
                        total_levels / model.scaling_gain)


def cc_tdse(model: ComplexityModel) -> CostEstimate:
    """n_T k_cvg sum_p K_p^beta; attractive while k_cvg << the gain."""
    return CostEstimate(model.n_T * model.k_cvg * model.size_cost(),
                        model.k_cvg / model.scaling_gain)


@dataclass(frozen=True)
class RunCounters:
    """Exact integer accounting of one finished run."""

    mode: str  # "stationary" or "tdse"
    sweeps: int
    level_counts: tuple[int, ...]
    solves_per_subdomain: dict[int, int]
    total_solves: int
    wallclock_s: float
    sweep_seconds: tuple[float, ...]


def measure(result) -> RunCounters:
    """Counters of a finished relaxation run (exact integers).

    The total equals sum_k sum_p n_p^(k): every subdomain performs one
    linear solve per time level of every sweep.
    """
    return RunCounters(
        mode="stationary" if result.t_cvg else "tdse",
        sweeps=result.sweeps,
        level_counts=tuple(result.level_counts),
        solves_per_subdomain=dict(result.solves),
        total_solves=int(sum(result.solves.values())),
        wallclock_s=result.wallclock_s,
        sweep_seconds=tuple(result.sweep_seconds),
    )


def model_from_run(result, beta: float = 2.0) -> ComplexityModel:
    """ComplexityModel with the counts a finished run actually used."""
    sizes = tuple(result.bases[n].size for n in sorted(result.bases))
    counts = tuple(result.level_counts)
    stationary = bool(result.t_cvg)
    return ComplexityModel(
        k_tot=sum(sizes),
        L=result.layout.L,
        counts=counts,
        sizes=sizes,
        beta=beta,
        n_T=0 if stationary else (counts[0] if counts else 0),
        k_cvg=result.sweeps,
    )


def fit_beta(samples) -> float | None:
    """Slope of log solve-time vs log size; None without size spread.

    samples iterates over (subdomain size, seconds) pairs.  A uniform
    decomposition gives a single distinct size and no fit.
    """
    pts = [(float(k), float(t)) for k, t in samples if k > 0 and t > 0]
    if len({k for k, _ in pts}) < 2:
        return None
    logk = np.log([k for k, _ in pts])
    logt = np.log([t for _, t in pts])
    return float(np.polyfit(logk, logt, 1)[0])
