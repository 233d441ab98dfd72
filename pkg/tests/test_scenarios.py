"""Scenario assembly: initial packets, orbital blocks, bases, problems."""

import numpy as np
import pytest

from swr2e.config import parse_config
from swr2e.geometry import GlobalGrid, build_layout
from swr2e.reconstruct import field_norm
from swr2e.scenarios import (assemble_scenario, block_orbitals, build_bases,
                             evaluate_initial, potential_table,
                             transmission_bands)
from swr2e.timestep import NgfConfig, TdseConfig

GAUSS_TEXT = """
[domain]
bounds = -6 6 -6 6
points = 61 61

[layout]
L = 2
overlap = 0.2
overlap_kind = fraction

[basis]
kind = gaussian
n_phi = 2
delta = 1.5

[initial]
alpha = 0.3
normalize = true

[transmission]
kind = robin
mu = 2.0

[evolution]
mode = imaginary
dt = 0.1
n_steps = 4
normalize = false
"""

SLATER_TEXT = """
[domain]
bounds = -4 4 -4 4
points = 81 81

[layout]
L = 2
overlap = 0.4
overlap_kind = absolute

[basis]
kind = slater
orbitals = 3

[potential]
model = softcore
nuclei = -0.5 0.5
eta = 0.5

[initial]
alpha = 1.0
normalize = true

[evolution]
mode = projection
"""


def grid_and_layout(L=2, overlap=0.2):
    grid = GlobalGrid(-4.0, 4.0, -4.0, 4.0, 81, 81)
    return grid, build_layout(grid, L, overlap, fraction=True)


# ---------------------------------------------------------------------------
# initial packets and potential tables


def test_gaussian_packet_normalized():
    cfg = parse_config(GAUSS_TEXT, "t")
    x = np.linspace(-6, 6, 61)
    f = evaluate_initial(cfg.initial, x, x)
    assert f.shape == (61, 61)
    assert field_norm(x, x, f) == pytest.approx(1.0, abs=1e-12)
    assert f[30, 30] == f.max()


def test_antisym_pair_is_antisymmetric():
    cfg = parse_config(GAUSS_TEXT, "t")
    init = cfg.initial.__class__(kind="antisym-pair", center=0.5,
                                 a=10.0, b=5.0, normalize=True)
    x = np.linspace(-6, 6, 61)
    f = evaluate_initial(init, x, x)
    assert np.max(np.abs(f + f.T)) < 1e-14
    assert field_norm(x, x, f) == pytest.approx(1.0, abs=1e-12)


def test_potential_table_free_case_is_zero():
    cfg = parse_config(GAUSS_TEXT, "t")
    x = np.linspace(-6, 6, 31)
    assert not potential_table(cfg.potential, x, x).any()


def test_potential_table_softcore_symmetric():
    cfg = parse_config(SLATER_TEXT, "t")
    x = np.linspace(-4, 4, 41)
    v = potential_table(cfg.potential, x, x)
    assert np.allclose(v, v.T)
    assert v.min() < 0

    no_ee = cfg.potential.__class__(model="softcore", nuclei=(-0.5, 0.5),
                                    charges=(1.0, 1.0), eta=0.5, ee=False)
    v2 = potential_table(no_ee, x, x)
    assert np.all(v2 <= v + 1e-15)


# ---------------------------------------------------------------------------
# orbital blocks


def test_block_orbitals_shape_and_order():
    cfg = parse_config(SLATER_TEXT, "t")
    grid, layout = grid_and_layout(L=2, overlap=0.1)
    sets = block_orbitals(cfg, layout)
    assert len(sets) == 2
    for r, oset in enumerate(sets):
        assert oset.block == r + 1
        assert len(oset.energies) == 3
        assert np.all(np.diff(oset.energies) > 0)


def test_block_orbitals_overlap_free_fallback():
    cfg = parse_config(SLATER_TEXT, "t")
    grid, layout = grid_and_layout(L=2, overlap=0.0)
    assert layout.eps1 == 0.0
    sets = block_orbitals(cfg, layout)
    assert len(sets) == 2 and len(sets[0].energies) == 3


# ---------------------------------------------------------------------------
# transmission bands


def test_transmission_bands_corner_subdomain():
    grid, layout = grid_and_layout(L=2, overlap=0.2)
    bands = transmission_bands(layout, 1)
    assert set(bands) == {"E", "N"}
    x1lo, x1hi, x2lo, x2hi = layout.rect(1)
    assert bands["E"] == (x1hi - layout.eps1, x1hi, x2lo, x2hi)
    assert bands["N"] == (x1lo, x1hi, x2hi - layout.eps2, x2hi)


def test_transmission_bands_single_domain_empty():
    grid, layout = grid_and_layout(L=1, overlap=0.0)
    assert transmission_bands(layout, 1) == {}


# ---------------------------------------------------------------------------
# basis dispatch


def test_gaussian_bases_per_subdomain():
    cfg = parse_config(GAUSS_TEXT, "t")
    grid = GlobalGrid(-6.0, 6.0, -6.0, 6.0, 61, 61)
    layout = build_layout(grid, 2, 0.2, fraction=True)
    bases = build_bases(cfg, layout)
    assert sorted(bases) == [1, 2, 3, 4]
    for b in bases.values():
        assert b.kind == "gaussian"
        assert b.size == 4


def test_slater_basis_sizes_and_labels():
    cfg = parse_config(SLATER_TEXT, "t")
    grid, layout = grid_and_layout(L=2, overlap=0.4 / 4.0)
    bases = build_bases(cfg, layout)
    m = cfg.basis.orbitals
    within = m * (m - 1) // 2
    # diagonal blocks carry their own pairs plus one cross determinant
    # per orbital against the neighbor block
    assert bases[1].size == within + m
    assert bases[4].size == within + m
    assert bases[1].labels[0] == ("w", 0, 1)
    assert bases[1].labels[-1][0] == "x"
    # off-diagonal blocks pair the two neighboring sets, l <= p
    assert bases[2].size == m * (m + 1) // 2
    assert bases[3].size == m * (m + 1) // 2


def test_slater_without_cross_pairs():
    cfg = parse_config(SLATER_TEXT.replace("orbitals = 3",
                                           "orbitals = 3\ncross_pairs = no"),
                       "t")
    grid, layout = grid_and_layout(L=2, overlap=0.1)
    bases = build_bases(cfg, layout)
    assert bases[1].size == 3
    assert all(lbl[0] == "w" for lbl in bases[1].labels)


def test_augmented_slater_basis():
    text = SLATER_TEXT.replace("orbitals = 3",
                               "orbitals = 3\naugment_delta = 2.0\n"
                               "augment_per_side = 2")
    cfg = parse_config(text, "t")
    grid, layout = grid_and_layout(L=2, overlap=0.1)
    bases = build_bases(cfg, layout)
    assert bases[1].kind == "augmented"
    assert bases[1].size >= 6


# ---------------------------------------------------------------------------
# full assembly


def test_projection_scenario():
    cfg = parse_config(SLATER_TEXT, "t")
    sc = assemble_scenario(cfg)
    assert sc.projection_only
    assert sc.ops is None
    assert sorted(sc.c0) == [1, 2, 3, 4]
    for n, g in sc.grams.items():
        assert np.allclose(g, g.T, atol=1e-12)
        assert sc.c0[n].shape == (g.shape[0],)


def test_imaginary_scenario_builds_problem():
    cfg = parse_config(GAUSS_TEXT, "t")
    sc = assemble_scenario(cfg)
    assert not sc.projection_only
    assert isinstance(sc.problem.cfg, NgfConfig)
    assert sc.problem.cfg.n_steps == 4
    assert sc.problem.workers is None
    assert sc.problem.tc.kind == "robin"
    assert field_norm(sc.grid.x1, sc.grid.x2, sc.phi0) == pytest.approx(1.0)


def test_workers_override_wins():
    cfg = parse_config(GAUSS_TEXT, "t")
    assert assemble_scenario(cfg, workers=2).problem.workers == 2


def test_real_scenario_with_laser():
    text = GAUSS_TEXT.replace("mu = 2.0", "mu = -5j").replace(
        """mode = imaginary
dt = 0.1
n_steps = 4
normalize = false""",
        """mode = real
dt = 0.05
T = 0.2""")
    text += """
[laser]
E0 = 1.0
omega0 = 8.0
nu0 = 10.0
"""
    cfg = parse_config(text, "t")
    sc = assemble_scenario(cfg)
    assert isinstance(sc.problem.cfg, TdseConfig)
    assert sc.problem.cfg.laser is not None
    assert sc.problem.cfg.laser.mode == "circular"
    for c in sc.c0.values():
        assert np.iscomplexobj(c) or c.dtype == float
