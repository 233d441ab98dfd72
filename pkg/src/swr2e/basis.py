"""Per-subdomain basis sets.

All basis kinds used here (tensor Gaussians, local Slater determinants,
Gaussian determinants, augmented unions) are short sums of rank-1 products
f(x1) g(x2), so a LocalBasis stores 1-d factor tabulations per function:
values and first derivatives on the subdomain's two axis slices.  Full 2-d
tabulations, edge traces and normal derivatives all derive from the factor
arrays, which keeps the memory footprint linear in the axis lengths and
makes trace extraction exact (no 2-d interpolation anywhere).

One-electron orbitals are confined by the quintic barrier and solved with
divergence-form finite differences on a 1-d lattice aligned with the global
grid, so their restriction to any subdomain slice is an index copy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from .linalg import Prefactored, SolveError, gmres_solve, tridiag_eigs
from .potentials import (
    BarrierSpec,
    Mollifier,
    NucleusSet,
    a_eps,
    barrier_value,
    smoothed_coulomb,
    softcore_potential,
)


def trapezoid_weights(x: np.ndarray) -> np.ndarray:
    """Composite trapezoid weights for a (uniform or not) 1-d grid."""
    w = np.zeros_like(x)
    w[:-1] += 0.5 * np.diff(x)
    w[1:] += 0.5 * np.diff(x)
    return w


def derivative_4th(values: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order centered first derivative along axis 0, zero-padded.

    The padding matches the zero extension of the tabulated functions, so
    the derivative is the weak derivative of the extended function.
    """
    f = np.concatenate([np.zeros((2,) + values.shape[1:]),
                        np.asarray(values, dtype=float),
                        np.zeros((2,) + values.shape[1:])])
    return (-f[4:] + 8.0 * f[3:-1] - 8.0 * f[1:-3] + f[:-4]) / (12.0 * h)


class LocalBasis:
    """A set of K two-variable functions over one subdomain slice.

    `terms[k]` is a tuple of (coeff, f1, d1, f2, d2) rank-1 contributions;
    the function is sum_t coeff * f1(x1) f2(x2).  `mirror_index[k]` and
    `mirror_sign[k]`, when present, say that v_k(x2, x1) equals
    mirror_sign[k] * w_{mirror_index[k]}(x1, x2) where w is the basis of the
    coordinate-swapped subdomain (the same subdomain on diagonal blocks).
    """

    def __init__(self, subdomain: int, kind: str, x1: np.ndarray, x2: np.ndarray,
                 terms: list, labels: list, mirror_index=None, mirror_sign=None,
                 meta: dict | None = None):
        self.subdomain = subdomain
        self.kind = kind
        self.x1 = x1
        self.x2 = x2
        self.terms = terms
        self.labels = labels
        self.mirror_index = None if mirror_index is None else np.asarray(mirror_index)
        self.mirror_sign = None if mirror_sign is None else np.asarray(mirror_sign)
        self.meta = meta or {}
        self._fields = None

    @property
    def size(self) -> int:
        return len(self.terms)

    @property
    def fields(self) -> np.ndarray:
        """Tabulations, shape (K, len(x1), len(x2)). Built once, cached."""
        if self._fields is None:
            out = np.zeros((self.size, self.x1.size, self.x2.size))
            for k, parts in enumerate(self.terms):
                for c, f1, _, f2, _ in parts:
                    out[k] += c * np.outer(f1, f2)
            self._fields = out
        return self._fields

    def derivative_fields(self, axis: int) -> np.ndarray:
        """d/d(x_axis) tabulations, shape (K, len(x1), len(x2)). Not cached."""
        out = np.zeros((self.size, self.x1.size, self.x2.size))
        for k, parts in enumerate(self.terms):
            for c, f1, d1, f2, d2 in parts:
                out[k] += c * (np.outer(d1, f2) if axis == 0 else np.outer(f1, d2))
        return out

    def line_values(self, axis: int, idx: int) -> np.ndarray:
        """Values of all functions on the grid line axis=idx, shape (K, n_other)."""
        n_other = self.x2.size if axis == 0 else self.x1.size
        out = np.zeros((self.size, n_other))
        for k, parts in enumerate(self.terms):
            for c, f1, _, f2, _ in parts:
                out[k] += c * (f1[idx] * f2 if axis == 0 else f2[idx] * f1)
        return out

    def line_derivatives(self, axis: int, idx: int) -> np.ndarray:
        """d/d(x_axis) of all functions on the grid line axis=idx."""
        n_other = self.x2.size if axis == 0 else self.x1.size
        out = np.zeros((self.size, n_other))
        for k, parts in enumerate(self.terms):
            for c, f1, d1, f2, d2 in parts:
                out[k] += c * (d1[idx] * f2 if axis == 0 else d2[idx] * f1)
        return out

    def support_mask(self, k: int) -> np.ndarray:
        mask = np.zeros((self.x1.size, self.x2.size), dtype=bool)
        for _, f1, _, f2, _ in self.terms[k]:
            mask |= np.outer(f1 != 0.0, f2 != 0.0)
        return mask


# ---------------------------------------------------------------------------
# tensor-product Gaussians


def _uniform_centers(lo: float, hi: float, count: int, rule: str) -> np.ndarray:
    if rule == "inset":
        step = (hi - lo) / count
        return lo + step * (np.arange(count) + 0.5)
    if rule == "span":
        return np.linspace(lo, hi, count)
    raise ValueError(f"unknown center rule '{rule}'")


def _check_distinct(centers: np.ndarray, what: str):
    c = np.sort(np.asarray(centers, dtype=float))
    if c.size > 1 and np.min(np.diff(c)) < 1e-12 * max(c[-1] - c[0], 1.0):
        raise ValueError(f"duplicate {what} centers produce identical functions")


def gaussian_basis(subdomain: int, x1: np.ndarray, x2: np.ndarray, n_phi: int,
                   delta: float, center_rule="inset") -> LocalBasis:
    """n_phi^2 tensor Gaussians exp(-delta (x1-a)^2 - delta (x2-b)^2).

    Centers are uniformly spaced across the subdomain rectangle, inset by
    half a spacing from the edges; center_rule may instead be a pair of
    explicit center arrays (cx, cy).
    """
    if n_phi < 1:
        raise ValueError("n_phi must be >= 1")
    if delta <= 0:
        raise ValueError("delta must be positive")
    if isinstance(center_rule, str):
        cx = _uniform_centers(x1[0], x1[-1], n_phi, center_rule)
        cy = _uniform_centers(x2[0], x2[-1], n_phi, center_rule)
    else:
        cx, cy = (np.asarray(c, dtype=float) for c in center_rule)
    _check_distinct(cx, "x1")
    _check_distinct(cy, "x2")

    fx = [np.exp(-delta * (x1 - c) ** 2) for c in cx]
    dx = [-2.0 * delta * (x1 - c) * f for c, f in zip(cx, fx)]
    fy = [np.exp(-delta * (x2 - c) ** 2) for c in cy]
    dy = [-2.0 * delta * (x2 - c) * f for c, f in zip(cy, fy)]

    n = len(cx)
    terms, labels = [], []
    for a in range(n):
        for b in range(len(cy)):
            terms.append(((1.0, fx[a], dx[a], fy[b], dy[b]),))
            labels.append(("g", a, b))
    mirror_index = np.array([b * n + a for a in range(n) for b in range(n)]) \
        if len(cx) == len(cy) else None
    return LocalBasis(subdomain, "gaussian", x1, x2, terms, labels,
                      mirror_index=mirror_index,
                      mirror_sign=None if mirror_index is None
                      else np.ones(len(terms)),
                      meta={"centers_x1": cx, "centers_x2": cy, "delta": delta})


# ---------------------------------------------------------------------------
# localized one-electron orbitals


@dataclass
class OrbitalSet:
    """Barrier-confined orbitals of one 1-d block, on a global-aligned lattice."""

    block: int
    x: np.ndarray
    k0: int  # global lattice index of x[0] (may be negative at the boundary)
    values: np.ndarray  # (npts, M)
    derivs: np.ndarray  # (npts, M)
    energies: np.ndarray
    center: float
    support: tuple[float, float]

    @property
    def size(self) -> int:
        return self.values.shape[1]

    def restricted(self, col: int, slice_k0: int, npts: int):
        """(values, derivs) of orbital `col` on a lattice window, zero outside."""
        v = np.zeros(npts)
        d = np.zeros(npts)
        lo = max(self.k0, slice_k0)
        hi = min(self.k0 + self.x.size, slice_k0 + npts)
        if lo < hi:
            v[lo - slice_k0:hi - slice_k0] = self.values[lo - self.k0:hi - self.k0, col]
            d[lo - slice_k0:hi - slice_k0] = self.derivs[lo - self.k0:hi - self.k0, col]
        return v, d


def contains_nucleus(interval: tuple[float, float], nuclei: NucleusSet) -> bool:
    lo, hi = interval
    return any(lo <= xa <= hi for xa in nuclei.positions)


def local_orbitals(block: int, interval: tuple[float, float],
                   lattice: tuple[float, float], nuclei: NucleusSet,
                   barrier: BarrierSpec, m_count: int,
                   mollifier: Mollifier | None = None,
                   mollify: bool = True,
                   eta: float | None = None) -> OrbitalSet:
    """Lowest m_count eigenpairs of the confined one-electron problem.

    The operator is -1/2 d/dx(a_eps d/dx) + V_nuc + V_b centered on the
    block, discretized in divergence form on the lattice (origin, spacing)
    shared with the global grid, Dirichlet beyond the barrier saturation
    points x_c -+ (x_b + eps_b/2).  With mollify on, V_nuc is the smoothed
    Coulomb sum; otherwise `eta` selects the soft-core kernel, and without
    either the bare kernel with |x - x_A| floored at h/2 is used (intended
    for blocks that contain no nucleus).
    """
    origin, h = lattice
    if barrier.eps_b < 3.0 * h:
        raise ValueError("grid too coarse to resolve the barrier transition")
    if mollify:
        if mollifier is None:
            raise ValueError("mollify requested without a mollifier")
        if eta is not None:
            raise ValueError("eta only applies to the soft-core path")
        if mollifier.eps < h:
            raise ValueError("grid too coarse to resolve the mollifier support")

    center = 0.5 * (interval[0] + interval[1])
    reach = barrier.x_b + barrier.eps_b / 2
    kmin = int(np.ceil((center - reach - origin) / h - 1e-9))
    kmax = int(np.floor((center + reach - origin) / h + 1e-9))
    x = origin + h * np.arange(kmin, kmax + 1)
    n = x.size
    if m_count > n:
        raise ValueError(f"requested {m_count} orbitals on a {n}-point grid")

    if mollify:
        g = smoothed_coulomb(mollifier)
        v_nuc = np.zeros(n)
        for xa, za in zip(nuclei.positions, nuclei.charges):
            v_nuc += za * g(x - xa)
    elif eta is not None:
        v_nuc = softcore_potential(nuclei, eta, x)
    else:
        v_nuc = np.zeros(n)
        for xa, za in zip(nuclei.positions, nuclei.charges):
            v_nuc -= za / np.maximum(np.abs(x - xa), h / 2)

    a_mid = a_eps(barrier, (x[:-1] + h / 2) - center)
    a_lo = np.concatenate([[a_eps(barrier, (x[0] - h / 2) - center)], a_mid])
    a_hi = np.concatenate([a_mid, [a_eps(barrier, (x[-1] + h / 2) - center)]])
    diag = (a_lo + a_hi) / (2 * h * h) + v_nuc + barrier_value(barrier, x - center)
    off = -a_mid / (2 * h * h)

    lam, vec = tridiag_eigs(diag, off, m_count)
    vec = vec / np.sqrt(h)  # unit L2 norm under the lattice quadrature
    der = derivative_4th(vec, h)
    return OrbitalSet(block, x, kmin, vec, der, lam, center,
                      (center - reach, center + reach))


# ---------------------------------------------------------------------------
# Slater determinants


def slater_pair_labels(m: int, cross: bool) -> list[tuple[str, int, int]]:
    """Index pairs of the diagonal-block determinant set.

    Within-set pairs l < p come first (p-major), so the leading functions
    are the orthonormal ones.  The m vanishing l = p slots are realized as
    pairs crossing into a neighbor block's orbital set and appended after
    them when `cross` is on, which gives the m(m+1)/2 count; otherwise
    they are skipped (count C(m,2)).
    """
    labels = [("w", l, p) for p in range(m) for l in range(p)]
    if cross:
        labels += [("x", l, l) for l in range(m)]
    return labels


def _det_terms(f1a, d1a, f2a, d2a, f1b, d1b, f2b, d2b):
    # (1/sqrt2) [ a(x1) b(x2) - b(x1) a(x2) ]
    s = 1.0 / np.sqrt(2.0)
    return ((s, f1a, d1a, f2b, d2b), (-s, f1b, d1b, f2a, d2a))


def slater_basis(subdomain: int, x1: np.ndarray, x2: np.ndarray,
                 i0: int, j0: int, set_r: OrbitalSet, set_s: OrbitalSet,
                 cross_set: OrbitalSet | None = None,
                 mirrored: bool = False) -> LocalBasis:
    """Local Slater determinants for the block pair (r, s).

    Diagonal blocks (set_r is set_s) enumerate within-set pairs l < p plus,
    when cross_set is given, one determinant per l pairing orbital l with
    cross_set's orbital l.  Off-diagonal blocks pair every l <= p with the
    x1 factor from set_r and the x2 factor from set_s; `mirrored` enumerates
    (l >= p) instead so that the block and its coordinate swap carry
    mirrored functions at equal positions.
    """
    n1, n2 = x1.size, x2.size

    def on_x1(oset, l):
        return oset.restricted(l, i0, n1)

    def on_x2(oset, l):
        return oset.restricted(l, j0, n2)

    terms, labels = [], []
    if set_r is set_s:
        m = set_r.size
        for tag, l, p in slater_pair_labels(m, cross_set is not None):
            partner = set_r if tag == "w" else cross_set
            other = p if tag == "w" else l
            fa, da = on_x1(set_r, l)
            ga, ea = on_x2(set_r, l)
            fb, db = on_x1(partner, other)
            gb, eb = on_x2(partner, other)
            terms.append(_det_terms(fa, da, ga, ea, fb, db, gb, eb))
            labels.append((tag, l, p))
        mirror_index = np.arange(len(terms))
        mirror_sign = -np.ones(len(terms))
    else:
        m_r, m_s = set_r.size, set_s.size
        pairs = [(l, p) for p in range(m_s) for l in range(min(p + 1, m_r))]
        if mirrored:
            pairs = [(p, l) for (l, p) in
                     [(l, p) for p in range(m_r) for l in range(min(p + 1, m_s))]]
        for l, p in pairs:
            fa, da = on_x1(set_r, l)
            ga, ea = on_x2(set_r, l)
            fb, db = on_x1(set_s, p)
            gb, eb = on_x2(set_s, p)
            terms.append(_det_terms(fa, da, ga, ea, fb, db, gb, eb))
            labels.append(("o", l, p))
        mirror_index = np.arange(len(terms))
        mirror_sign = np.ones(len(terms))
    return LocalBasis(subdomain, "slater", x1, x2, terms, labels,
                      mirror_index=mirror_index, mirror_sign=mirror_sign,
                      meta={"block_r": set_r.block, "block_s": set_s.block})


def gaussian_determinant_basis(subdomain: int, x1: np.ndarray, x2: np.ndarray,
                               centers: np.ndarray, delta: float) -> LocalBasis:
    """Antisymmetrized pairs of distinct 1-d Gaussians (Slater-like)."""
    centers = np.asarray(centers, dtype=float)
    _check_distinct(centers, "gaussian-determinant")
    if delta <= 0:
        raise ValueError("delta must be positive")
    f1 = [np.exp(-delta * (x1 - c) ** 2) for c in centers]
    d1 = [-2.0 * delta * (x1 - c) * f for c, f in zip(centers, f1)]
    f2 = [np.exp(-delta * (x2 - c) ** 2) for c in centers]
    d2 = [-2.0 * delta * (x2 - c) * f for c, f in zip(centers, f2)]
    terms, labels = [], []
    for p in range(len(centers)):
        for l in range(p):
            terms.append(_det_terms(f1[l], d1[l], f2[l], d2[l],
                                    f1[p], d1[p], f2[p], d2[p]))
            labels.append(("gd", l, p))
    if not terms:
        raise ValueError("need at least two distinct centers")
    return LocalBasis(subdomain, "gaussian-determinant", x1, x2, terms, labels,
                      mirror_index=np.arange(len(terms)),
                      mirror_sign=-np.ones(len(terms)),
                      meta={"centers": centers, "delta": delta})


# ---------------------------------------------------------------------------
# augmented bases


@dataclass(frozen=True)
class AugmentSpec:
    """Boundary Gaussians added to a determinant basis for transmission."""

    delta: float
    per_side: int = 5
    drop_tol: float = 1e-8


def augment_basis(base: LocalBasis, aug: AugmentSpec,
                  bands: dict[str, tuple[float, float, float, float]]) -> LocalBasis:
    """Union of `base` with tensor Gaussians centered in the overlap bands.

    `bands` maps a side name to the rectangle (x1_lo, x1_hi, x2_lo, x2_hi)
    of the overlap strip on that side; one row of per_side Gaussians is
    placed along each band's long direction.  Near-duplicate additions are
    dropped greedily: a candidate is kept only while its Gram-Schmidt
    residual stays above drop_tol times its own norm squared.
    """
    if not bands or aug.per_side < 1:
        return base
    x1, x2 = base.x1, base.x2
    w1 = trapezoid_weights(x1)
    w2 = trapezoid_weights(x2)

    cand_terms, cand_labels = [], []
    for side in sorted(bands):
        lo1, hi1, lo2, hi2 = bands[side]
        if side in ("W", "E"):
            cx = np.full(aug.per_side, 0.5 * (lo1 + hi1))
            cy = _uniform_centers(lo2, hi2, aug.per_side, "inset")
        else:
            cx = _uniform_centers(lo1, hi1, aug.per_side, "inset")
            cy = np.full(aug.per_side, 0.5 * (lo2 + hi2))
        for ax, ay in zip(cx, cy):
            f1 = np.exp(-aug.delta * (x1 - ax) ** 2)
            g1 = -2.0 * aug.delta * (x1 - ax) * f1
            f2 = np.exp(-aug.delta * (x2 - ay) ** 2)
            g2 = -2.0 * aug.delta * (x2 - ay) * f2
            cand_terms.append(((1.0, f1, g1, f2, g2),))
            cand_labels.append(("aug", side, float(ax), float(ay)))

    # greedy rank-revealing selection against the running union
    kept_terms = list(base.terms)
    kept_labels = list(base.labels)
    wflat = np.outer(w1, w2).ravel()
    flat = list(base.fields.reshape(base.size, -1))
    gram = np.array([[np.dot(u * wflat, v) for v in flat] for u in flat])
    lower = cholesky(gram, lower=True)
    for parts, label in zip(cand_terms, cand_labels):
        v = sum(c * np.outer(f1, f2) for c, f1, _, f2, _ in parts).ravel()
        b = np.array([np.dot(u * wflat, v) for u in flat])
        norm2 = np.dot(v * wflat, v)
        y = solve_triangular(lower, b, lower=True)
        resid = norm2 - np.dot(y, y)
        if resid > aug.drop_tol * norm2:
            lower = np.block([
                [lower, np.zeros((lower.shape[0], 1))],
                [y[None, :], np.array([[np.sqrt(resid)]])],
            ])
            kept_terms.append(parts)
            kept_labels.append(label)
            flat.append(v)

    return LocalBasis(base.subdomain, "augmented", x1, x2, kept_terms,
                      kept_labels, meta=dict(base.meta, aug_delta=aug.delta))


# ---------------------------------------------------------------------------
# initial-data projection


def project_initial(phi0: np.ndarray, basis: LocalBasis,
                    gram: np.ndarray) -> np.ndarray:
    """Coefficients of the Galerkin projection: gram @ c = <phi0, v_l>.

    phi0 is tabulated on the subdomain slice.  GMRES first; on failure a
    direct dense solve for the modest sizes used here.
    """
    w = np.outer(trapezoid_weights(basis.x1), trapezoid_weights(basis.x2))
    rhs = basis.fields.reshape(basis.size, -1) @ (w * phi0).ravel()
    try:
        return gmres_solve(gram, rhs)
    except SolveError:
        if basis.size <= 200:
            return Prefactored(gram).solve(rhs)
        raise
