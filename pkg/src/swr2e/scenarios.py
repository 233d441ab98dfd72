"""Scenario assembly: a validated RunConfig into a ready relaxation run.

This is the glue between the configuration and the numerical modules.
Assembly walks the pipeline in order: global grid and overlapping layout,
initial packet and potential tables, one local basis per subdomain
(tensor Gaussian frames, local Slater determinants with optional
boundary-Gaussian augmentation, or antisymmetrized Gaussian pairs),
Galerkin operators, projected initial coefficients, and finally the
SwrProblem.  Projection mode stops after the projection and carries no
problem; the caller reconstructs and reports.

Slater geometry:  each 1-d block solves its confined orbital problem on
the global lattice with the barrier transition laid exactly across the
overlap region: the flat interior is the block itself, saturation is
reached half an overlap width beyond the subdomain boundary.  Orbitals
therefore keep a small but nonzero amplitude on the transmission lines,
which is what couples adjacent subdomains during relaxation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import (
    AugmentSpec,
    LocalBasis,
    OrbitalSet,
    augment_basis,
    gaussian_basis,
    gaussian_determinant_basis,
    local_orbitals,
    project_initial,
    slater_basis,
)
from .config import (
    ConfigError,
    InitialConfig,
    PotentialConfig,
    RunConfig,
    validate_config,
)
from .geometry import SIDES, GlobalGrid, SubdomainLayout, build_layout
from .operators import (LocalOperators, assemble_overlap,
                        build_local_operators)
from .potentials import (
    BarrierSpec,
    LaserField,
    Mollifier,
    NucleusSet,
    two_electron_table,
)
from .reconstruct import field_norm
from .swr import SwrProblem, TransmissionSpec
from .timestep import NgfConfig, TdseConfig


@dataclass
class Scenario:
    """Everything one run needs, fully assembled."""

    cfg: RunConfig
    grid: GlobalGrid
    layout: SubdomainLayout
    phi0: np.ndarray
    potential: np.ndarray
    bases: dict[int, LocalBasis]
    grams: dict[int, np.ndarray]
    c0: dict[int, np.ndarray]
    ops: dict[int, LocalOperators] | None
    problem: SwrProblem | None

    @property
    def projection_only(self) -> bool:
        return self.problem is None


def evaluate_initial(init: InitialConfig, x1: np.ndarray,
                     x2: np.ndarray) -> np.ndarray:
    """Tabulate the initial packet on a grid, optionally unit-normalized."""
    X1, X2 = x1[:, None], x2[None, :]
    c = init.center
    if init.kind == "gaussian":
        f = np.exp(-init.alpha * ((X1 - c) ** 2 + (X2 - c) ** 2))
    elif init.kind == "antisym-pair":
        f = (np.exp(-(X1 - c) ** 2 / init.a - (X2 - c) ** 2 / init.b)
             - np.exp(-(X2 - c) ** 2 / init.a - (X1 - c) ** 2 / init.b))
    else:
        raise ConfigError(f"initial.kind: unknown kind '{init.kind}'")
    if init.normalize:
        nrm = field_norm(x1, x2, f)
        if nrm < 1e-300:
            raise ConfigError("initial.normalize: the packet has zero norm")
        f = f / nrm
    return f


def potential_table(pot: PotentialConfig, x1: np.ndarray,
                    x2: np.ndarray) -> np.ndarray:
    """Global two-electron potential tabulation (zeros for the free case)."""
    if pot.model == "none":
        return np.zeros((x1.size, x2.size))
    nuclei = NucleusSet(pot.nuclei, pot.charges)
    mol = (Mollifier(pot.mollifier_eps, pot.mollifier_order)
           if pot.model == "smoothed" else None)
    return two_electron_table(x1, x2, nuclei=nuclei, model=pot.model,
                              mollifier=mol, eta=pot.eta, eta_ee=pot.eta_ee,
                              ee=pot.ee, scale_4pi=pot.scale_4pi)


def block_orbitals(cfg: RunConfig, layout: SubdomainLayout) -> list[OrbitalSet]:
    """Confined orbital sets of the L 1-d blocks, on the global lattice.

    The barrier transition spans the overlap: flat over the block, saturated
    at half an overlap width past the extended subdomain edge.  A layout
    without overlap falls back to the narrowest transition the lattice
    resolves.  The orbital Hamiltonian sees the same nuclear model as the
    two-electron potential.
    """
    grid, L = layout.grid, layout.L
    edges = layout.block_edges1
    eps = layout.eps1 if layout.eps1 > 0 else 3.0 * grid.h1
    pot = cfg.potential
    nuclei = NucleusSet(pot.nuclei, pot.charges)
    mol = (Mollifier(pot.mollifier_eps, pot.mollifier_order)
           if pot.model == "smoothed" else None)
    sets = []
    for r in range(L):
        lo, hi = grid.x1[edges[r]], grid.x1[edges[r + 1]]
        barrier = BarrierSpec(x_b=(hi - lo) / 2 + eps / 2, eps_b=eps,
                              V_inf=cfg.basis.barrier_height)
        if pot.model == "smoothed":
            oset = local_orbitals(r + 1, (lo, hi), (grid.a, grid.h1), nuclei,
                                  barrier, cfg.basis.orbitals, mollifier=mol)
        elif pot.model == "softcore":
            oset = local_orbitals(r + 1, (lo, hi), (grid.a, grid.h1), nuclei,
                                  barrier, cfg.basis.orbitals, mollify=False,
                                  eta=pot.eta)
        else:
            oset = local_orbitals(r + 1, (lo, hi), (grid.a, grid.h1), nuclei,
                                  barrier, cfg.basis.orbitals, mollify=False)
        sets.append(oset)
    return sets


def transmission_bands(layout: SubdomainLayout,
                       n: int) -> dict[str, tuple[float, float, float, float]]:
    """Overlap strips along the transmission sides of subdomain n."""
    x1lo, x1hi, x2lo, x2hi = layout.rect(n)
    eps1, eps2 = layout.eps1, layout.eps2
    bands = {}
    if layout.edge(n, "W").transmission:
        bands["W"] = (x1lo, x1lo + eps1, x2lo, x2hi)
    if layout.edge(n, "E").transmission:
        bands["E"] = (x1hi - eps1, x1hi, x2lo, x2hi)
    if layout.edge(n, "S").transmission:
        bands["S"] = (x1lo, x1hi, x2lo, x2lo + eps2)
    if layout.edge(n, "N").transmission:
        bands["N"] = (x1lo, x1hi, x2hi - eps2, x2hi)
    return bands


def build_bases(cfg: RunConfig,
                layout: SubdomainLayout) -> dict[int, LocalBasis]:
    """One local basis per subdomain, per the [basis] section."""
    kind = cfg.basis.kind
    bases = {}
    if kind == "gaussian":
        for sub in layout.subdomains:
            x1, x2 = layout.axes(sub.n)
            bases[sub.n] = gaussian_basis(sub.n, x1, x2, cfg.basis.n_phi,
                                          cfg.basis.delta)
        return bases
    if kind == "gaussian-determinant":
        centers = np.asarray(cfg.basis.centers, dtype=float)
        for sub in layout.subdomains:
            x1, x2 = layout.axes(sub.n)
            bases[sub.n] = gaussian_determinant_basis(sub.n, x1, x2, centers,
                                                      cfg.basis.delta)
        return bases

    sets = block_orbitals(cfg, layout)
    L = layout.L
    aug = None
    if cfg.basis.augment_delta is not None:
        aug = AugmentSpec(cfg.basis.augment_delta, cfg.basis.augment_per_side,
                          cfg.basis.augment_drop_tol)
    for sub in layout.subdomains:
        x1, x2 = layout.axes(sub.n)
        r, s = sub.col - 1, sub.row - 1
        if r == s:
            cross = None
            if cfg.basis.cross_pairs and L > 1:
                cross = sets[r + 1] if r + 1 < L else sets[r - 1]
            b = slater_basis(sub.n, x1, x2, sub.i0, sub.j0, sets[r], sets[r],
                             cross_set=cross)
        else:
            b = slater_basis(sub.n, x1, x2, sub.i0, sub.j0, sets[r], sets[s],
                             mirrored=(r > s))
        if aug is not None:
            b = augment_basis(b, aug, transmission_bands(layout, sub.n))
        bases[sub.n] = b
    return bases


def assemble_scenario(cfg: RunConfig, workers: int | None = None) -> Scenario:
    """Build the full pipeline for one run.

    `workers` overrides the configured worker count when given; the
    library default (resolve from the environment, then serial) applies
    when both are unset.
    """
    validate_config(cfg)
    a, b, c, d = cfg.domain.bounds
    grid = GlobalGrid(a, b, c, d, *cfg.domain.points)
    layout = build_layout(grid, cfg.layout.L, cfg.layout.overlap,
                          fraction=(cfg.layout.overlap_kind == "fraction"))
    phi0 = evaluate_initial(cfg.initial, grid.x1, grid.x2)
    table = potential_table(cfg.potential, grid.x1, grid.x2)
    bases = build_bases(cfg, layout)

    def phi0_slice(sub):
        return phi0[sub.i0:sub.i1 + 1, sub.j0:sub.j1 + 1]

    if cfg.evolution.mode == "projection":
        grams = {n: assemble_overlap(bases[n]) for n in sorted(bases)}
        c0 = {s.n: project_initial(phi0_slice(s), bases[s.n], grams[s.n])
              for s in layout.subdomains}
        return Scenario(cfg, grid, layout, phi0, table, bases, grams, c0,
                        ops=None, problem=None)

    tc = None
    if layout.L > 1:
        tc = TransmissionSpec(cfg.transmission.kind,
                              complex(cfg.transmission.mu))
    laser = None
    dipole_mode = None
    if cfg.evolution.mode == "real" and cfg.laser is not None \
            and cfg.laser.E0 > 0:
        laser = LaserField(cfg.laser.E0, cfg.laser.omega0, cfg.laser.nu0,
                           cfg.evolution.T, cfg.laser.mode)
        dipole_mode = cfg.laser.mode

    ops = {}
    for sub in layout.subdomains:
        pslice = table[sub.i0:sub.i1 + 1, sub.j0:sub.j1 + 1]
        edges = [layout.edge(sub.n, side) for side in SIDES]
        ops[sub.n] = build_local_operators(bases[sub.n], pslice, sub, edges,
                                           tc, dipole_mode)
    grams = {n: ops[n].A for n in sorted(ops)}
    c0 = {s.n: project_initial(phi0_slice(s), bases[s.n], grams[s.n])
          for s in layout.subdomains}

    if cfg.evolution.mode == "imaginary":
        step_cfg = NgfConfig(dt=cfg.evolution.dt, delta=cfg.evolution.delta,
                             antisymmetrize=cfg.evolution.antisymmetrize,
                             normalize=cfg.evolution.normalize,
                             n_steps=cfg.evolution.n_steps)
    else:
        step_cfg = TdseConfig(dt=cfg.evolution.dt, T=cfg.evolution.T,
                              laser=laser)

    problem = SwrProblem(
        layout, bases, ops, tc, step_cfg, c0,
        global_potential=table,
        delta_sc=cfg.swr.delta_sc,
        max_sweeps=cfg.swr.max_sweeps,
        residual_mode=cfg.swr.residual_mode,
        workers=workers if workers is not None else cfg.swr.workers,
    )
    return Scenario(cfg, grid, layout, phi0, table, bases, grams, c0,
                    ops=ops, problem=problem)
