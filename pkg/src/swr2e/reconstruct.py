"""Global field assembly from per-subdomain data.

Every subdomain is an index slice of one shared global grid, so assembly
is exact: zero-extend each local tabulation, sum, and divide by the number
of subdomains covering each point.  Points on interface lines count as
overlap points (closed-rectangle membership), which reproduces the
half/half rule on two-subdomain bands and the 1/(Card O + 1) rule in
corner zones.

The antisymmetric path rebuilds the global wavefunction from solves on
the blocks at or below the diagonal only, using each basis's mirror
metadata to fill the coordinate-swapped blocks with negated coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import LocalBasis, trapezoid_weights
from .geometry import SubdomainLayout


@dataclass
class GlobalField:
    """A tabulation on the global grid plus per-point contribution counts."""

    x1: np.ndarray
    x2: np.ndarray
    values: np.ndarray
    cover: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.x1.size, self.x2.size):
            raise ValueError("field shape does not match the grid")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    @property
    def norm(self) -> float:
        return field_norm(self.x1, self.x2, self.values)


def local_field(basis: LocalBasis, coeffs: np.ndarray) -> np.ndarray:
    """Tabulate sum_k c_k v_k on the subdomain slice."""
    return np.tensordot(coeffs, basis.fields, axes=1)


def reconstruct_global(locals_: dict[int, np.ndarray],
                       layout: SubdomainLayout) -> GlobalField:
    """Overlap-averaged global field from per-subdomain tabulations.

    locals_ maps the 1-based subdomain index to its slice tabulation.
    Accumulation runs in subdomain-index order, so the result is
    deterministic regardless of how the locals were produced.
    """
    grid = layout.grid
    cover = layout.cover_count
    if np.any(cover < 1):
        raise ValueError("layout leaves grid points uncovered")
    expected = {s.n for s in layout.subdomains}
    if set(locals_) != expected:
        raise ValueError("need one tabulation per subdomain; got "
                         f"{sorted(locals_)} for {len(expected)} subdomains")
    dtype = complex if any(np.iscomplexobj(v) for v in locals_.values()) else float
    total = np.zeros((grid.n_x1, grid.n_x2), dtype=dtype)
    for n in sorted(locals_):
        sub = layout.subdomain(n)
        vals = locals_[n]
        if vals.shape != sub.shape:
            raise ValueError(f"subdomain {n}: tabulation shape {vals.shape} "
                             f"does not match its slice {sub.shape}")
        total[sub.i0:sub.i1 + 1, sub.j0:sub.j1 + 1] += vals
    return GlobalField(grid.x1, grid.x2, total / cover, cover.copy())


def antisym_reconstruct(coeffs: dict[int, np.ndarray],
                        layout: SubdomainLayout,
                        bases: dict[int, LocalBasis]) -> GlobalField:
    """Antisymmetric global rebuild from the blocks with col >= row.

    `coeffs` holds coefficient vectors for every subdomain whose block
    (col, row) satisfies col >= row; the remaining blocks are populated as
    f(x1, x2) = -f(x2, x1) through the mirror metadata of the solved
    bases.  Requires a zero-overlap layout and mirror-complete bases.
    """
    if layout.eps1 != 0.0 or layout.eps2 != 0.0:
        raise ValueError("antisymmetric reconstruction requires zero overlap")
    sigma = layout.sigma_map()
    fields = {}
    for n in sorted(coeffs):
        sub = layout.subdomain(n)
        if sub.col < sub.row:
            raise ValueError(f"subdomain {n} lies above the diagonal; "
                             "pass only blocks with col >= row")
        basis = bases[n]
        if basis.mirror_index is None or basis.mirror_sign is None:
            raise ValueError(f"basis of subdomain {n} lacks mirror metadata")
        c = np.asarray(coeffs[n])
        if sub.col == sub.row:
            # project onto the antisymmetric part; exact no-op for bases
            # whose functions are already pointwise antisymmetric
            c = 0.5 * (c - basis.mirror_sign * c[basis.mirror_index])
            fields[n] = local_field(basis, c)
        else:
            fields[n] = local_field(basis, c)
            m = int(sigma[n - 1])
            if m not in bases:
                raise ValueError(f"mirrored basis for subdomain {m} is missing")
            cm = np.empty_like(c)
            cm[basis.mirror_index] = -basis.mirror_sign * c
            fields[m] = local_field(bases[m], cm)
    missing = set(range(1, len(layout.subdomains) + 1)) - set(fields)
    if missing:
        raise ValueError(f"no coefficients reach subdomains {sorted(missing)}")
    return reconstruct_global(fields, layout)


def field_norm(x1: np.ndarray, x2: np.ndarray, values: np.ndarray) -> float:
    """Trapezoid L2 norm of a tabulation."""
    if values.shape != (x1.size, x2.size):
        raise ValueError("field shape does not match the grid")
    w = np.outer(trapezoid_weights(x1), trapezoid_weights(x2))
    return float(np.sqrt(np.sum(w * np.abs(values) ** 2).real))


def field_l2_diff(x1: np.ndarray, x2: np.ndarray, a: np.ndarray,
                  b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise ValueError(f"field shapes differ: {a.shape} vs {b.shape}")
    return field_norm(x1, x2, a - b)


# ---------------------------------------------------------------------------
# grid dumps

_MAGIC = "swr2e-grid"


def dump_field_binary(path, values: np.ndarray):
    """Row-major raw doubles after a one-line text header."""
    v = np.ascontiguousarray(values)
    kind = "complex128" if np.iscomplexobj(v) else "float64"
    with open(path, "wb") as fh:
        fh.write(f"{_MAGIC} {v.shape[0]} {v.shape[1]} {kind}\n".encode("ascii"))
        fh.write(v.astype(kind).tobytes())


def load_field_binary(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        if len(header) != 4 or header[0] != _MAGIC:
            raise ValueError(f"{path}: not a grid dump")
        n1, n2, kind = int(header[1]), int(header[2]), header[3]
        data = np.frombuffer(fh.read(), dtype=kind)
    if data.size != n1 * n2:
        raise ValueError(f"{path}: payload does not match header")
    return data.reshape(n1, n2).copy()


def dump_field_csv(path, x1: np.ndarray, x2: np.ndarray, values: np.ndarray):
    """Long-format CSV: x1, x2, value (plus imag column for complex data)."""
    v = np.asarray(values)
    is_c = np.iscomplexobj(v)
    with open(path, "w") as fh:
        fh.write("x1,x2,re,im\n" if is_c else "x1,x2,value\n")
        for i, a in enumerate(x1):
            for j, b in enumerate(x2):
                if is_c:
                    fh.write(f"{float(a)!r},{float(b)!r},"
                             f"{float(v[i, j].real)!r},{float(v[i, j].imag)!r}\n")
                else:
                    fh.write(f"{float(a)!r},{float(b)!r},{float(v[i, j])!r}\n")
