"""Uniform global grid and overlapping subdomain layouts.

The computational domain [a,b] x [c,d] carries one uniform tensor grid.
A layout splits each axis into L blocks and pads every block by half the
overlap width eps/2 on each interior side, so subdomain (col i, row j)
occupies [a_i - eps1/2, b_i + eps1/2] x [c_j - eps2/2, d_j + eps2/2] with
a_i = a + (i-1)(b-a)/L.  Subdomains are always index slices of the global
grid: block edges and eps/2 are snapped to whole grid cells, and the pad is
clamped at the global boundary.  Linear indices are row-major in the second
coordinate, n = i + L(j-1), matching the block formulas used everywhere else.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SIDES = ("W", "E", "S", "N")

# side -> (normal axis, outward sign)
_SIDE_AXIS = {"W": (0, -1), "E": (0, +1), "S": (1, -1), "N": (1, +1)}

_CORNERS = {"ne": ("E", "N"), "nw": ("W", "N"), "se": ("E", "S"), "sw": ("W", "S")}


class LayoutError(ValueError):
    """Raised when a grid/layout request cannot be realized."""


@dataclass(frozen=True)
class GlobalGrid:
    """Uniform grid on [a,b] x [c,d], endpoints included."""

    a: float
    b: float
    c: float
    d: float
    n_x1: int
    n_x2: int

    def __post_init__(self):
        if not (self.b > self.a and self.d > self.c):
            raise LayoutError("degenerate domain: need a < b and c < d")
        if self.n_x1 < 3 or self.n_x2 < 3:
            raise LayoutError("grid needs at least 3 points per axis")

    @property
    def h1(self) -> float:
        return (self.b - self.a) / (self.n_x1 - 1)

    @property
    def h2(self) -> float:
        return (self.d - self.c) / (self.n_x2 - 1)

    @property
    def x1(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.n_x1)

    @property
    def x2(self) -> np.ndarray:
        return np.linspace(self.c, self.d, self.n_x2)

    @property
    def is_square(self) -> bool:
        return (
            self.n_x1 == self.n_x2
            and abs(self.a - self.c) < 1e-14
            and abs(self.b - self.d) < 1e-14
        )


@dataclass(frozen=True)
class Edge:
    """One side of a subdomain as a grid line segment.

    `line` is the global grid index of the edge line along the normal axis,
    (lo, hi) the inclusive index range along the edge.  `partners[t]` lists
    the subdomains (sorted, excluding the owner) whose closed rectangle
    contains the t-th edge point; empty tuples can only occur on clamped
    boundary segments of non-transmission edges.
    """

    side: str
    axis: int
    sign: int
    line: int
    lo: int
    hi: int
    transmission: bool
    partners: tuple[tuple[int, ...], ...] = field(repr=False)

    @property
    def n_points(self) -> int:
        return self.hi - self.lo + 1


@dataclass(frozen=True)
class Subdomain:
    n: int  # linear index, 1-based
    col: int
    row: int
    i0: int
    i1: int
    j0: int
    j1: int

    @property
    def shape(self) -> tuple[int, int]:
        return (self.i1 - self.i0 + 1, self.j1 - self.j0 + 1)

    def contains_index(self, i: int, j: int) -> bool:
        return self.i0 <= i <= self.i1 and self.j0 <= j <= self.j1


class SubdomainLayout:
    """L x L overlapping decomposition of a GlobalGrid.

    Built by `build_layout`; holds the snapped block edges, all subdomain
    index slices, per-edge transmission metadata and the cover count used by
    the reconstruction rules.
    """

    def __init__(self, grid: GlobalGrid, L: int, n_half1: int, n_half2: int,
                 edges1: np.ndarray, edges2: np.ndarray):
        self.grid = grid
        self.L = L
        self.n_half1 = n_half1
        self.n_half2 = n_half2
        self.eps1 = 2 * n_half1 * grid.h1
        self.eps2 = 2 * n_half2 * grid.h2
        self.block_edges1 = edges1
        self.block_edges2 = edges2

        subs = []
        for row in range(1, L + 1):
            for col in range(1, L + 1):
                i0 = max(edges1[col - 1] - n_half1, 0)
                i1 = min(edges1[col] + n_half1, grid.n_x1 - 1)
                j0 = max(edges2[row - 1] - n_half2, 0)
                j1 = min(edges2[row] + n_half2, grid.n_x2 - 1)
                subs.append(Subdomain(col + L * (row - 1), col, row, i0, i1, j0, j1))
        self.subdomains = tuple(subs)

        self._edges = {}
        for s in self.subdomains:
            for side in SIDES:
                self._edges[(s.n, side)] = self._build_edge(s, side)

        cover = np.zeros((grid.n_x1, grid.n_x2), dtype=np.int32)
        for s in self.subdomains:
            cover[s.i0:s.i1 + 1, s.j0:s.j1 + 1] += 1
        if cover.min() < 1:
            raise LayoutError("subdomains do not cover the global grid")
        self.cover_count = cover

    # -- construction helpers -------------------------------------------------

    def _build_edge(self, s: Subdomain, side: str) -> Edge:
        axis, sign = _SIDE_AXIS[side]
        if axis == 0:
            line = s.i0 if sign < 0 else s.i1
            lo, hi = s.j0, s.j1
            transmission = (s.col > 1) if sign < 0 else (s.col < self.L)
        else:
            line = s.j0 if sign < 0 else s.j1
            lo, hi = s.i0, s.i1
            transmission = (s.row > 1) if sign < 0 else (s.row < self.L)
        pts = []
        if transmission:
            for t in range(lo, hi + 1):
                ij = (line, t) if axis == 0 else (t, line)
                owners = tuple(m.n for m in self.subdomains
                               if m.n != s.n and m.contains_index(*ij))
                pts.append(owners)
        else:
            pts = [()] * (hi - lo + 1)
        return Edge(side, axis, sign, line, lo, hi, transmission, tuple(pts))

    # -- queries ---------------------------------------------------------------

    def subdomain(self, n: int) -> Subdomain:
        return self.subdomains[n - 1]

    def edge(self, n: int, side: str) -> Edge:
        return self._edges[(n, side)]

    def axes(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        s = self.subdomain(n)
        return self.grid.x1[s.i0:s.i1 + 1], self.grid.x2[s.j0:s.j1 + 1]

    def rect(self, n: int) -> tuple[float, float, float, float]:
        s = self.subdomain(n)
        x1, x2 = self.grid.x1, self.grid.x2
        return (x1[s.i0], x1[s.i1], x2[s.j0], x2[s.j1])

    def neighbors(self, n: int) -> tuple[int, ...]:
        """Subdomains sharing a positive-length piece of closed boundary."""
        s = self.subdomain(n)
        out = []
        for m in self.subdomains:
            if m.n == n:
                continue
            wx = min(s.i1, m.i1) - max(s.i0, m.i0)
            wy = min(s.j1, m.j1) - max(s.j0, m.j0)
            if wx >= 0 and wy >= 0 and max(wx, wy) > 0:
                out.append(m.n)
        return tuple(out)

    def overlap(self, n: int, m: int) -> tuple[int, int, int, int] | None:
        """Closed index rectangle of Omega_n ∩ Omega_m, or None."""
        a, b = self.subdomain(n), self.subdomain(m)
        i0, i1 = max(a.i0, b.i0), min(a.i1, b.i1)
        j0, j1 = max(a.j0, b.j0), min(a.j1, b.j1)
        if i0 > i1 or j0 > j1:
            return None
        return (i0, i1, j0, j1)

    def interface_points(self, n: int, m: int) -> list[tuple[str, int]]:
        """Points of boundary(Omega_n) lying inside Omega_m, as (side, t)."""
        out = []
        for side in SIDES:
            e = self.edge(n, side)
            if not e.transmission:
                continue
            for t, owners in enumerate(e.partners):
                if m in owners:
                    out.append((side, e.lo + t))
        return out

    def corner_partners(self, n: int, corner: str) -> tuple[int, ...]:
        """Subdomains whose closed rectangle contains the corner overlap zone.

        The zone is the eps1 x eps2 index rectangle centered on the block
        corner, clamped at the global boundary.  The arithmetic-mean weight
        used on the zone is 1/(len(result)+1).
        """
        if corner not in _CORNERS:
            raise ValueError(f"corner must be one of {sorted(_CORNERS)}")
        s = self.subdomain(n)
        side_x, side_y = _CORNERS[corner]
        ex = self.block_edges1[s.col] if side_x == "E" else self.block_edges1[s.col - 1]
        ey = self.block_edges2[s.row] if side_y == "N" else self.block_edges2[s.row - 1]
        i0 = max(ex - self.n_half1, 0)
        i1 = min(ex + self.n_half1, self.grid.n_x1 - 1)
        j0 = max(ey - self.n_half2, 0)
        j1 = min(ey + self.n_half2, self.grid.n_x2 - 1)
        out = [m.n for m in self.subdomains
               if m.n != n and m.i0 <= i0 and m.i1 >= i1 and m.j0 <= j0 and m.j1 >= j1]
        return tuple(sorted(out))

    # -- electron-swap permutation ----------------------------------------------

    def sigma_index(self, n: int, p: int = 1, q: int = 2) -> int:
        """Image of subdomain n under the electron-coordinate swap (p,q).

        For two electrons the only swap exchanges the block coordinates:
        n = r + L(s-1) maps to s + L(r-1).  An involution by construction.
        """
        if {p, q} != {1, 2}:
            raise ValueError("only the two-electron swap (1,2) exists here")
        if not self.grid.is_square:
            raise LayoutError("coordinate swap needs a square grid and domain")
        s = self.subdomain(n)
        return s.row + self.L * (s.col - 1)

    def sigma_map(self) -> np.ndarray:
        """sigma as an array over linear indices; sigma_map[n-1] = sigma(n)."""
        return np.array([self.sigma_index(s.n) for s in self.subdomains])

    # -- reporting ---------------------------------------------------------------

    def manifest(self) -> str:
        g = self.grid
        lines = [
            "[grid]",
            f"bounds = {g.a:.17g} {g.b:.17g} {g.c:.17g} {g.d:.17g}",
            f"points = {g.n_x1} {g.n_x2}",
            f"spacing = {g.h1:.17g} {g.h2:.17g}",
            "",
            "[layout]",
            f"L = {self.L}",
            f"overlap_cells = {2 * self.n_half1} {2 * self.n_half2}",
            f"overlap_width = {self.eps1:.17g} {self.eps2:.17g}",
            "",
            "[subdomains]",
        ]
        for s in self.subdomains:
            r = self.rect(s.n)
            nbrs = ",".join(str(m) for m in self.neighbors(s.n))
            lines.append(
                f"{s.n} = col {s.col} row {s.row} | idx [{s.i0}:{s.i1}]x[{s.j0}:{s.j1}]"
                f" | rect [{r[0]:.6g},{r[1]:.6g}]x[{r[2]:.6g},{r[3]:.6g}] | nbrs {nbrs}"
            )
        return "\n".join(lines) + "\n"


def _snap_cells(length: float, h: float, what: str) -> int:
    """Snap a length to a whole number of grid cells; 0 only if length is 0."""
    cells = int(round(length / h))
    if length > 0 and cells == 0:
        raise LayoutError(
            f"grid too coarse to place {what} on grid lines "
            f"(requested {length:.4g}, cell {h:.4g})")
    return cells


def build_layout(grid: GlobalGrid, L: int, eps_x1: float, eps_x2: float | None = None,
                 fraction: bool = False) -> SubdomainLayout:
    """Build the L x L overlapping layout.

    eps is the full overlap width between two adjacent subdomains, either in
    length units or, with fraction=True, as a fraction of the block width.
    The half-width eps/2 is snapped to whole grid cells per axis.
    """
    if L < 1:
        raise LayoutError("L must be >= 1")
    if eps_x2 is None:
        eps_x2 = eps_x1
    if eps_x1 < 0 or eps_x2 < 0:
        raise LayoutError("overlap must be nonnegative")

    edges1 = np.array([round(k * (grid.n_x1 - 1) / L) for k in range(L + 1)])
    edges2 = np.array([round(k * (grid.n_x2 - 1) / L) for k in range(L + 1)])
    if np.any(np.diff(edges1) < 1) or np.any(np.diff(edges2) < 1):
        raise LayoutError("grid too coarse: a block would hold less than one cell")

    w1 = (grid.b - grid.a) / L
    w2 = (grid.d - grid.c) / L
    if fraction:
        eps_x1, eps_x2 = eps_x1 * w1, eps_x2 * w2
    n_half1 = _snap_cells(eps_x1 / 2, grid.h1, "the x1 interface")
    n_half2 = _snap_cells(eps_x2 / 2, grid.h2, "the x2 interface")

    min_block1 = int(np.diff(edges1).min())
    min_block2 = int(np.diff(edges2).min())
    if L > 1 and (2 * n_half1 >= min_block1 or 2 * n_half2 >= min_block2):
        raise LayoutError("overlap wider than a subdomain block")

    return SubdomainLayout(grid, L, n_half1, n_half2, edges1, edges2)
